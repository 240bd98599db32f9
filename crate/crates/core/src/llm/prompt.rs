use crate::arc::{ArcDsl, ArcTask, Grid};
use crate::grammar::{Grammar, Symbol};
use crate::strings::StringTask;

use super::{LlmError, PromptSpec, ResponseFormat};

/// Rough prompt limit, in tokens of about four characters.
pub const DEFAULT_PROMPT_TOKENS: usize = 100_000;

const ARC_SYSTEM: &str = "You are an assistant chatbot with human-like perception, reasoning and learning capabilities.
You can solve tasks concisely, efficiently, and moreover, correctly.
Let's engage in perception and logic-based tasks.
You only output source code.
No explanations or any other text.";

const ARC_INTRO: &str = "You are an efficient assistant for logical reasoning and code generation.
You will help me solve a visual perception and reasoning task.
I will first provide you with the definition of a Domain Specific Language you will use for writing a solution for the task.
I will then present you with the description of the task that you will be tested in.
You will then respond to the queries I make regarding the solution of the task.

This is the definition of the DSL you will use to solve the task.
It is given as a context-free grammar in EBNF format, with some informative comments about the semantics.
You will return a string that is parseable by the `program` non-terminal of the grammar.";

const ARC_TASK_INTRO: &str = "Now we continue with the visual perception and reasoning task.
The input for the task is a small number of pairs of grids of characters.
The value of each of the cells of the grids are the colors defined in the DSL, so we can think of grids as images.
Each pair of images correspond to an input-output example for an unknown program P.
For each pair, the program P is evaluated on the image grid and operates on the objects that appear in it.
The output of the program is then the output image.
The objects in the images are easy and natural to identify for humans, so there is no need to define them explicitly.
However you are able to abstract them correctly, and the DSL is interpreted with the same correct abstraction.";

const ARC_QUERY: &str = "Now follows task you will be evaluated on.
Output the solution as a JSON object, which should contain both a natural language description of the solution and the solution written in the DSL.
The code should be parseable by the DSL grammar.
The JSON must have the following structure:

{
    \"nl_description\": \"TO_BE_FILLED\",
    \"code\": \"TO_BE_FILLED\"
}";

const STRING_SYSTEM: &str = "You are a coding assistant. Be precise and terse.
You will be given a SyGuS grammar, a natural language specification, and a set of input-output examples.
Your task is to complete the provided function definition with an implementation that is correct according to the grammar, specification, and examples.
Your answer should be as short as possible while still being correct.
Make sure that your answer is a valid s-expression.";

/// A solved task shown to the model before the real one.
#[derive(Clone, Debug)]
pub struct ArcDemo {
    pub task: ArcTask,
    pub description: String,
    pub code: String,
}

/// The grammar as EBNF rules, one line per nonterminal.
pub fn grammar_ebnf(g: &Grammar) -> String {
    let name = |s: &str| s.trim_start_matches('$').to_ascii_lowercase();
    let mut lines = Vec::new();
    for nt in g.nonterminals() {
        let alts: Vec<String> = g
            .productions_of(nt)
            .iter()
            .map(|&p| {
                let parts: Vec<String> = g
                    .production(p)
                    .rhs
                    .iter()
                    .map(|s| match s {
                        Symbol::T(t) => format!("{:?}", g.terminal_text(*t)),
                        Symbol::N(n) => name(g.nonterminal_name(*n)),
                    })
                    .collect();
                parts.join(" ")
            })
            .collect();
        lines.push(format!("{}: {}", name(g.nonterminal_name(nt)), alts.join("\n    | ")));
    }
    lines.join("\n")
}

fn pairs_text(pairs: &[(&Grid, Option<&Grid>)]) -> String {
    let mut out = String::new();
    for (i, (input, output)) in pairs.iter().enumerate() {
        out.push_str(&format!("PAIR {}\nINPUT GRID:\n{input}\n", i + 1));
        if let Some(o) = output {
            out.push_str(&format!("OUTPUT GRID:\n{o}\n"));
        }
        out.push('\n');
    }
    out
}

fn train_pairs(task: &ArcTask) -> Vec<(&Grid, Option<&Grid>)> {
    task.train.iter().map(|(i, o)| (i, Some(o))).collect()
}

/// Grammar, optional demonstrations, then the task's training pairs under
/// `## TEST TASK`. Answers are requested as JSON with a `code` field.
pub fn arc_prompt(
    task: &ArcTask,
    dsl: &ArcDsl,
    demos: &[ArcDemo],
    model: &str,
    n: usize,
    max_prompt_tokens: usize,
) -> Result<PromptSpec, LlmError> {
    let mut user = format!(
        "{ARC_INTRO}\n\n```\n// Rules are executed one after another, in the order they appear.\n// There could be no rules, in which case the program does nothing.\n{}\n```\n\n{ARC_TASK_INTRO}\n\n",
        grammar_ebnf(&dsl.grammar)
    );
    if !demos.is_empty() {
        user.push_str("Now I will show you some demonstration tasks along with the output you would be expected to produce for each of them.\n\n");
        for (i, d) in demos.iter().enumerate() {
            let expected = serde_json::json!({"nl_description": d.description, "code": d.code});
            user.push_str(&format!(
                "## DEMONSTRATION TASK {}\n\n### INPUT\n{}### EXPECTED OUTPUT\n{}\n\n",
                i + 1,
                pairs_text(&train_pairs(&d.task)),
                serde_json::to_string_pretty(&expected).expect("json")
            ));
        }
    }
    user.push_str(ARC_QUERY);
    user.push_str("\n\n## TEST TASK\n\n");
    user.push_str(&pairs_text(&train_pairs(task)));
    let tokens = (ARC_SYSTEM.len() + user.len()) / 4;
    if tokens > max_prompt_tokens {
        return Err(LlmError::PromptTooLarge {
            tokens,
            limit: max_prompt_tokens,
        });
    }
    Ok(PromptSpec {
        system: ARC_SYSTEM.into(),
        user,
        model: model.into(),
        temperature: 1.0,
        max_tokens: 4000,
        n,
        format: ResponseFormat::Json,
    })
}

/// Grammar, hint and examples, ending with the open `define-fun` header for
/// the model to complete.
pub fn string_prompt(task: &StringTask, model: &str, n: usize) -> PromptSpec {
    let examples: Vec<String> = task
        .examples
        .iter()
        .map(|(ins, out)| {
            let ins: Vec<String> = ins.iter().map(|v| v.to_string()).collect();
            format!("{} -> {out}", ins.join(", "))
        })
        .collect();
    let user = format!(
        "[GRAMMAR]\n{}\n\n[NATURAL LANGUAGE SPECIFICATION]\n{}\n\n[EXAMPLES]\n{}\n\n[SOLUTION]\n{}",
        task.synth_fun_text(),
        task.hint.as_deref().unwrap_or(""),
        examples.join("\n"),
        task.define_fun_header()
    );
    PromptSpec {
        system: STRING_SYSTEM.into(),
        user,
        model: model.into(),
        temperature: 0.5,
        max_tokens: 4000,
        n,
        format: ResponseFormat::Text,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn string_prompt_layout() {
        let text = "(synth-fun f ((_arg_0 String)) String)\n\
            (constraint (= (f \"www.domain.com\") \"com\"))\n\
            (constraint (= (f \"mail.net\") \"net\"))\n\
            (constraint (= (f \"www.amazon.co.uk\") \"uk\"))";
        let t = StringTask::from_sygus("tld", text).unwrap();
        let p = string_prompt(&t, "m", 10);
        assert!(p.user.contains("[EXAMPLES]\nwww.domain.com -> com\nmail.net -> net\nwww.amazon.co.uk -> uk\n"));
        assert!(p.user.ends_with("[SOLUTION]\n(define-fun f (_arg_0 String) String"));
        assert_eq!(p.temperature, 0.5);
    }

    #[test]
    fn arc_prompt_layout() {
        let task = ArcTask::parse("t", "TRAIN\nINPUT\nR O\nOUTPUT\nY O\n").unwrap();
        let dsl = ArcDsl::new(&[]);
        let p = arc_prompt(&task, &dsl, &[], "m", 10, DEFAULT_PROMPT_TOKENS).unwrap();
        assert!(p.user.contains("## TEST TASK\n\nPAIR 1\nINPUT GRID:\nR O\nOUTPUT GRID:\nY O\n"));
        assert!(!p.user.contains("DEMONSTRATION"));
        assert!(p.user.contains("program: \"(\" \"do\" rules \")\""));
        assert_eq!(p.format, ResponseFormat::Json);
        let demo = ArcDemo {
            task: task.clone(),
            description: "Recolor all objects to color Y".into(),
            code: "(do)".into(),
        };
        let p = arc_prompt(&task, &dsl, &[demo], "m", 10, DEFAULT_PROMPT_TOKENS).unwrap();
        assert!(p.user.contains("## DEMONSTRATION TASK 1"));
        assert!(matches!(
            arc_prompt(&task, &dsl, &[], "m", 10, 10),
            Err(LlmError::PromptTooLarge { .. })
        ));
    }
}
