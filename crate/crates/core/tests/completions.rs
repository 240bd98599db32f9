mod common;

use common::*;
use guided_synth::arc::{Abstraction, ArcDsl, ArcTask};
use guided_synth::grammar::{WeightedGrammar, DEFAULT_SCALE};
use guided_synth::llm::{self, Cache, CompletionRecord};
use guided_synth::pcfg::{count_completions, learn_pcfg, LearnMode};

fn fig1a() -> (ArcTask, ArcDsl, Vec<CompletionRecord>) {
    let task = ArcTask::parse("fig1a", &read_fixture("arc/fig1a.txt")).unwrap();
    let dsl = ArcDsl::for_task(&task, &Abstraction::default());
    let records = Cache::new(fixtures().join("cache")).load("fig1a", "gpt-4o").unwrap();
    (task, dsl, records)
}

#[test]
fn sample_solutions_all_parse() {
    let (_, dsl, records) = fig1a();
    assert_eq!(records.len(), 10);
    let cs = llm::to_completion_set("fig1a", &records, &dsl.grammar, LearnMode::NonStrict, str::to_string);
    assert_eq!(cs.num_parsed(), 10);
    assert!(cs.lexed.is_empty());
    assert_eq!(cs.validity(), 1.0);
}

#[test]
fn update_color_dominates_the_transforms() {
    let (_, dsl, records) = fig1a();
    let g = &dsl.grammar;
    let cs = llm::to_completion_set("fig1a", &records, g, LearnMode::Strict, str::to_string);
    let counts = count_completions(g, &cs, LearnMode::Strict);
    let rule = |op: &str| g.production_with_operator("$Transform", op).unwrap();
    // six copies of the first solution, one each of the next three, four in the last
    assert_eq!(counts.get(rule("update_color")), 13.0);
    assert_eq!(counts.get(rule("move")), 0.0);
    let wg = WeightedGrammar::from_pcfg(&learn_pcfg(g.clone(), &cs, LearnMode::Strict, 1.0), DEFAULT_SCALE, &[]).unwrap();
    let w = |op: &str| wg.base_discrete_weight(rule(op)).unwrap();
    assert!(w("update_color") < w("move"));
    for op in ["move", "move_max", "extend", "rotate", "fill_rectangle", "hollow_rectangle", "mirror", "add_border", "flip"] {
        assert!(w(op) > w("update_color"), "{op}");
    }
}

#[test]
fn lexing_the_third_solution() {
    let (_, dsl, records) = fig1a();
    let g = &dsl.grammar;
    let third = &records[7].code;
    assert_eq!(third, "(do (rule (color_equals (color_of self) GREY) (update_color (color_of other))))");
    let lexed = g.lex(third);
    assert!(lexed.skipped.is_empty());
    let count = |t: &str| lexed.tokens.iter().filter(|&&k| k == g.terminal(t).unwrap()).count();
    assert_eq!(count("color_of"), 2);
    assert_eq!(count("update_color"), 1);
}

#[test]
fn first_solution_is_undefined_where_a_grey_object_has_two_neighbors() {
    let (task, dsl, records) = fig1a();
    let abs = Abstraction::default();
    let p = dsl.parse(&records[0].code).unwrap();
    // no witness restriction: objects next to two differently colored
    // neighbors get conflicting colors
    let defined: Vec<bool> = task.train.iter().map(|(i, _)| dsl.eval(&p, i, &abs).is_some()).collect();
    assert!(defined.contains(&false), "{defined:?}");
}

#[test]
fn reference_rule_has_sixteen_filter_and_transform_rules() {
    let (task, dsl, _) = fig1a();
    let p = dsl
        .parse(
            "(do (rule (and (color_equals (color_of self) GREY) (and (is_neighbor self other) \
             (size_equals (size_of other) MIN))) (update_color (color_of other))))",
        )
        .unwrap();
    let rule = &p.children()[0].children()[0];
    assert_eq!(rule.children()[0].size() + rule.children()[1].children()[0].size(), 16);
    let abs = Abstraction::default();
    for (i, o) in &task.train {
        assert_eq!(dsl.eval(&p, i, &abs).as_ref(), Some(o));
    }
}
