//! Prints the prompts sent to the model for a grid task and a string task,
//! and shows how code is pulled out of raw answers. Nothing is sent.
//!
//! cargo run --example prompts

use guided_synth::arc::{Abstraction, ArcDsl, ArcTask};
use guided_synth::llm::{arc_prompt, extract_code, string_prompt, ResponseFormat, DEFAULT_PROMPT_TOKENS};
use guided_synth::strings::StringTask;

fn main() {
    let root = concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures");
    let arc_text = std::fs::read_to_string(format!("{root}/arc/recolor.txt")).expect("grid task");
    let task = ArcTask::parse("recolor", &arc_text).expect("grid task parses");
    let dsl = ArcDsl::for_task(&task, &Abstraction::default());
    let p = arc_prompt(&task, &dsl, &[], "gpt-4o", 10, DEFAULT_PROMPT_TOKENS).expect("prompt fits");
    println!("=== grid task, system\n{}\n=== user\n{}\n", p.system, p.user);

    let sl = std::fs::read_to_string(format!("{root}/string/tld.sl")).expect("string task");
    let st = StringTask::load("tld", &sl).expect("string task parses");
    let p = string_prompt(&st, "gpt-4o", 10);
    println!("=== string task, user\n{}\n", p.user);

    let json = r#"{"nl_description": "Recolor everything yellow", "code": "(do (rule (is_neighbor self other) (update_color YELLOW)))"}"#;
    println!("json answer -> {}", extract_code(json, ResponseFormat::Json));
    let fenced = "Here you go:\n```lisp\n(str.substr _arg_0 0 3))\n```";
    println!("fenced answer -> {}", st.completion_body(&extract_code(fenced, ResponseFormat::Text)));
}
