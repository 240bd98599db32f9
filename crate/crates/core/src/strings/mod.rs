//! The SyGuS-style string manipulation DSL: values, task loading, grammar
//! instantiation and a [`Semantics`] for the search engine.

mod sexpr;
mod value;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grammar::{Grammar, GrammarBuilder, GrammarError, ProdId, Program, Symbol, WeightedGrammar};
use crate::search::{bottom_up_search, Budget, SearchOutcome, Semantics};

pub use sexpr::{parse_all, quote, Sexp, SexpError};
pub use value::{Sort, StrOp, StrValue};

#[derive(Debug, Error)]
pub enum StringTaskError {
    #[error("malformed s-expression: {0}")]
    Sexp(#[from] SexpError),
    #[error("malformed task: {0}")]
    Malformed(String),
    #[error("task has no examples")]
    NoExamples,
    #[error("unknown operator `{0}`")]
    UnknownOperator(String),
    #[error("operator `{op}` expects {expected:?}, grammar gives {found:?}")]
    OperatorSorts {
        op: String,
        expected: Vec<Sort>,
        found: Vec<Sort>,
    },
    #[error(transparent)]
    Grammar(#[from] GrammarError),
    #[error("malformed JSON task: {0}")]
    Json(#[from] serde_json::Error),
}

/// What a base production computes.
#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Var(usize),
    Lit(StrValue),
    /// Unit production such as `Start -> S`.
    Pass,
    Op(StrOp),
}

/// A programming-by-example problem over strings.
#[derive(Clone, Debug)]
pub struct StringTask {
    pub name: String,
    pub function: String,
    pub args: Vec<(String, Sort)>,
    pub ret: Sort,
    pub examples: Vec<(Vec<StrValue>, StrValue)>,
    /// Natural-language hint, taken from leading comments.
    pub hint: Option<String>,
    pub grammar: Arc<Grammar>,
    nodes: Vec<Node>,
    sorts: Vec<Sort>,
}

/// Literal pools used when a task does not spell out its grammar.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LiteralPools {
    #[serde(default)]
    pub string: Vec<String>,
    #[serde(default)]
    pub int: Vec<i64>,
}

impl LiteralPools {
    pub fn default_pools() -> Self {
        LiteralPools {
            string: vec![String::new(), " ".into()],
            int: vec![0, 1],
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct JsonExample {
    inputs: Vec<serde_json::Value>,
    output: serde_json::Value,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct JsonTask {
    #[serde(default)]
    name: Option<String>,
    #[serde(default)]
    function: Option<String>,
    args: Vec<(String, String)>,
    examples: Vec<JsonExample>,
    #[serde(default)]
    literals: Option<LiteralPools>,
    #[serde(default)]
    hint: Option<String>,
}

struct GrammarSpec {
    start: String,
    /// name, sort, alternatives
    nts: Vec<(String, Sort, Vec<Sexp>)>,
}

impl StringTask {
    /// Reads a SyGuS-style task: a `synth-fun` declaration, optionally with
    /// a grammar, and `(constraint (= (f in ...) out))` examples.
    pub fn from_sygus(name: &str, text: &str) -> Result<StringTask, StringTaskError> {
        let (items, comments) = parse_all(text)?;
        let mut synth = None;
        let mut examples = Vec::new();
        for item in &items {
            match item.head() {
                Some("synth-fun") => synth = Some(item.as_list().unwrap()),
                Some("constraint") => examples.push(item),
                _ => {}
            }
        }
        let synth = synth.ok_or_else(|| StringTaskError::Malformed("no synth-fun".into()))?;
        let malformed = |what: &str| StringTaskError::Malformed(what.to_string());
        let function = synth
            .get(1)
            .and_then(Sexp::as_atom)
            .ok_or_else(|| malformed("synth-fun name"))?
            .to_string();
        let args = synth
            .get(2)
            .and_then(Sexp::as_list)
            .ok_or_else(|| malformed("synth-fun arguments"))?
            .iter()
            .map(|a| {
                let pair = a.as_list().filter(|l| l.len() == 2);
                let pair = pair.ok_or_else(|| malformed("argument declaration"))?;
                let n = pair[0].as_atom().ok_or_else(|| malformed("argument name"))?;
                let s = pair[1]
                    .as_atom()
                    .and_then(Sort::parse)
                    .ok_or_else(|| malformed("argument sort"))?;
                Ok((n.to_string(), s))
            })
            .collect::<Result<Vec<_>, StringTaskError>>()?;
        let ret = synth
            .get(3)
            .and_then(Sexp::as_atom)
            .and_then(Sort::parse)
            .ok_or_else(|| malformed("synth-fun result sort"))?;

        // SyGuS 2 puts predeclarations before the grouped rule list
        let rule_lists: Vec<&[Sexp]> = synth[4..].iter().filter_map(Sexp::as_list).collect();
        let grammar_spec = match rule_lists.last() {
            None => None,
            Some(groups) => {
                let mut nts = Vec::new();
                for g in *groups {
                    let l = g.as_list().filter(|l| l.len() == 3);
                    let l = l.ok_or_else(|| malformed("nonterminal declaration"))?;
                    let n = l[0].as_atom().ok_or_else(|| malformed("nonterminal name"))?;
                    let s = l[1]
                        .as_atom()
                        .and_then(Sort::parse)
                        .ok_or_else(|| malformed("nonterminal sort"))?;
                    let alts = l[2].as_list().ok_or_else(|| malformed("alternatives"))?;
                    nts.push((n.to_string(), s, alts.to_vec()));
                }
                let start = nts.first().ok_or_else(|| malformed("empty grammar"))?.0.clone();
                Some(GrammarSpec { start, nts })
            }
        };

        let mut parsed_examples = Vec::new();
        for c in examples {
            let eq = c.as_list().and_then(|l| l.get(1)).and_then(Sexp::as_list);
            let eq = eq.filter(|l| l.len() == 3 && l[0].as_atom() == Some("="));
            let eq = eq.ok_or_else(|| malformed("constraint must be (= (f ...) out)"))?;
            let (call, out) = match eq[1].head() {
                Some(h) if h == function => (&eq[1], &eq[2]),
                _ => (&eq[2], &eq[1]),
            };
            let call = call.as_list().ok_or_else(|| malformed("constraint call"))?;
            if call.len() != args.len() + 1 {
                return Err(malformed("example arity"));
            }
            let inputs = call[1..]
                .iter()
                .map(|v| literal(v).ok_or_else(|| malformed("example input")))
                .collect::<Result<Vec<_>, _>>()?;
            let output = literal(out).ok_or_else(|| malformed("example output"))?;
            parsed_examples.push((inputs, output));
        }
        let hint = (!comments.is_empty()).then(|| comments.join("\n"));
        StringTask::assemble(name, function, args, ret, parsed_examples, hint, grammar_spec, None)
    }

    /// Reads the JSON task form `{args, examples, literals}`; the full union
    /// grammar is instantiated with the given literal pools.
    pub fn from_json(name: &str, text: &str) -> Result<StringTask, StringTaskError> {
        let t: JsonTask = serde_json::from_str(text)?;
        let malformed = |what: &str| StringTaskError::Malformed(what.to_string());
        let args = t
            .args
            .iter()
            .map(|(n, s)| Ok((n.clone(), Sort::parse(s).ok_or_else(|| malformed("argument sort"))?)))
            .collect::<Result<Vec<_>, StringTaskError>>()?;
        let mut examples = Vec::new();
        for e in &t.examples {
            if e.inputs.len() != args.len() {
                return Err(malformed("example arity"));
            }
            let inputs = e
                .inputs
                .iter()
                .map(|v| json_value(v).ok_or_else(|| malformed("example input")))
                .collect::<Result<Vec<_>, _>>()?;
            let output = json_value(&e.output).ok_or_else(|| malformed("example output"))?;
            examples.push((inputs, output));
        }
        let ret = examples
            .first()
            .and_then(|(_, o)| o.sort())
            .ok_or(StringTaskError::NoExamples)?;
        StringTask::assemble(
            t.name.as_deref().unwrap_or(name),
            t.function.unwrap_or_else(|| "f".into()),
            args,
            ret,
            examples,
            t.hint,
            None,
            Some(t.literals.unwrap_or_else(LiteralPools::default_pools)),
        )
    }

    /// Dispatches on the first non-blank character: `{` means JSON.
    pub fn load(name: &str, text: &str) -> Result<StringTask, StringTaskError> {
        if text.trim_start().starts_with('{') {
            StringTask::from_json(name, text)
        } else {
            StringTask::from_sygus(name, text)
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        name: &str,
        function: String,
        args: Vec<(String, Sort)>,
        ret: Sort,
        examples: Vec<(Vec<StrValue>, StrValue)>,
        hint: Option<String>,
        spec: Option<GrammarSpec>,
        pools: Option<LiteralPools>,
    ) -> Result<StringTask, StringTaskError> {
        if examples.is_empty() {
            return Err(StringTaskError::NoExamples);
        }
        let spec = match spec {
            Some(s) => s,
            None => union_grammar(&args, ret, &pools.unwrap_or_else(LiteralPools::default_pools)),
        };
        let sort_of: BTreeMap<&str, Sort> = spec.nts.iter().map(|(n, s, _)| (n.as_str(), *s)).collect();
        let mut b = GrammarBuilder::new(&spec.start);
        let mut nodes = Vec::new();
        for (n, _, _) in &spec.nts {
            b.nonterminal(n);
        }
        for (nt, sort, alts) in &spec.nts {
            let lhs = format!("${nt}");
            for alt in alts {
                match alt {
                    Sexp::Atom(a) if sort_of.contains_key(a.as_str()) => {
                        b.rule(&lhs, &[format!("${a}")], None);
                        nodes.push(Node::Pass);
                    }
                    Sexp::Atom(a) if args.iter().any(|(n, _)| n == a) => {
                        let i = args.iter().position(|(n, _)| n == a).unwrap();
                        b.rule(&lhs, &[a.as_str()], None);
                        nodes.push(Node::Var(i));
                    }
                    Sexp::List(l) if !l.is_empty() && l[0].as_atom().is_some_and(|h| h != "-" || l.len() != 2) => {
                        let opname = l[0].as_atom().unwrap();
                        let op = StrOp::from_name(opname, *sort)
                            .ok_or_else(|| StringTaskError::UnknownOperator(opname.to_string()))?;
                        let mut rhs = vec!["(".to_string(), opname.to_string()];
                        let mut found = Vec::new();
                        for a in &l[1..] {
                            let child = a
                                .as_atom()
                                .filter(|c| sort_of.contains_key(c))
                                .ok_or_else(|| StringTaskError::Malformed(format!(
                                    "argument of `{opname}` must be a nonterminal"
                                )))?;
                            found.push(sort_of[child]);
                            rhs.push(format!("${child}"));
                        }
                        rhs.push(")".into());
                        let (expected, result) = op.signature();
                        if expected != found.as_slice() || result != *sort {
                            return Err(StringTaskError::OperatorSorts {
                                op: opname.to_string(),
                                expected: expected.to_vec(),
                                found,
                            });
                        }
                        b.rule(&lhs, &rhs, Some(opname));
                        nodes.push(Node::Op(op));
                    }
                    other => {
                        let v = literal(other).ok_or_else(|| {
                            StringTaskError::Malformed(format!("unrecognized alternative {other:?}"))
                        })?;
                        b.rule(&lhs, &[literal_text(&v)], None);
                        nodes.push(Node::Lit(v));
                    }
                }
            }
        }
        let grammar = b.build()?;
        let sorts = grammar
            .productions()
            .iter()
            .map(|p| sort_of[grammar.nonterminal_name(p.lhs)])
            .collect();
        Ok(StringTask {
            name: name.to_string(),
            function,
            args,
            ret,
            examples,
            hint,
            grammar: Arc::new(grammar),
            nodes,
            sorts,
        })
    }

    pub fn node(&self, prod: ProdId) -> &Node {
        &self.nodes[prod.index()]
    }

    /// Sort of the nonterminal a base production derives.
    pub fn sort(&self, prod: ProdId) -> Sort {
        self.sorts[prod.index()]
    }

    /// Evaluates a base-grammar program on one input tuple.
    pub fn eval(&self, program: &Program, inputs: &[StrValue]) -> StrValue {
        let kids: Vec<StrValue> = program.children().iter().map(|c| self.eval(c, inputs)).collect();
        match &self.nodes[program.production().index()] {
            Node::Var(i) => inputs.get(*i).cloned().unwrap_or(StrValue::Undefined),
            Node::Lit(v) => v.clone(),
            Node::Pass => kids.into_iter().next().unwrap_or(StrValue::Undefined),
            Node::Op(op) => op.eval(&kids.iter().collect::<Vec<_>>()),
        }
    }

    /// Whether `program` reproduces every example output.
    pub fn satisfies(&self, program: &Program) -> bool {
        self.examples.iter().all(|(i, o)| self.eval(program, i) == *o)
    }

    pub fn outputs(&self) -> Vec<StrValue> {
        self.examples.iter().map(|(_, o)| o.clone()).collect()
    }

    /// The grammar as a `synth-fun` declaration, for prompts.
    pub fn synth_fun_text(&self) -> String {
        let g = &self.grammar;
        let args: Vec<String> = self
            .args
            .iter()
            .map(|(n, s)| format!("({n} {})", s.smt_name()))
            .collect();
        let mut groups = Vec::new();
        for nt in g.nonterminals() {
            let sort = g
                .productions_of(nt)
                .first()
                .map(|p| self.sort(*p))
                .unwrap_or(Sort::String);
            let alts: Vec<String> = g
                .productions_of(nt)
                .iter()
                .map(|&p| {
                    let prod = g.production(p);
                    let parts: Vec<String> = prod
                        .rhs
                        .iter()
                        .map(|s| match s {
                            Symbol::T(t) => g.terminal_text(*t).to_string(),
                            Symbol::N(n) => g.nonterminal_name(*n).to_string(),
                        })
                        .collect();
                    parts.join(" ").replace("( ", "(").replace(" )", ")")
                })
                .collect();
            groups.push(format!(
                "({} {} ({}))",
                g.nonterminal_name(nt),
                sort.smt_name(),
                alts.join(" ")
            ));
        }
        format!(
            "(synth-fun {} ({}) {} ({}))",
            self.function,
            args.join(" "),
            self.ret.smt_name(),
            groups.join(" ")
        )
    }

    /// `(define-fun f (args) Ret` header that prompts end with.
    pub fn define_fun_header(&self) -> String {
        let args: Vec<String> = self
            .args
            .iter()
            .map(|(n, s)| format!("{n} {}", s.smt_name()))
            .collect();
        format!("(define-fun {} ({}) {}", self.function, args.join(" "), self.ret.smt_name())
    }

    /// Extracts the function body from an LLM completion. Handles a full
    /// `define-fun`, a body that closes the header left open by the prompt,
    /// and a bare expression. Anything else is returned unchanged.
    pub fn completion_body(&self, text: &str) -> String {
        let text = text.trim();
        let attempts = [text.to_string(), format!("{} {}", self.define_fun_header(), text)];
        for t in &attempts {
            if let Ok((items, _)) = parse_all(t) {
                if let Some(first) = items.first() {
                    if first.head() == Some("define-fun") {
                        if let Some(body) = first.as_list().and_then(|l| l.last()) {
                            return to_text(body);
                        }
                    }
                    return to_text(first);
                }
            }
        }
        text.to_string()
    }

    pub fn semantics(&self) -> StringSemantics<'_> {
        StringSemantics { task: self }
    }

    /// Bottom-up search for a program matching every example.
    pub fn solve(&self, wg: &WeightedGrammar, budget: &Budget) -> SearchOutcome {
        bottom_up_search(wg, &self.semantics(), &self.outputs(), budget)
    }
}

fn union_grammar(args: &[(String, Sort)], ret: Sort, pools: &LiteralPools) -> GrammarSpec {
    let atom = |s: &str| Sexp::Atom(s.to_string());
    let op = |o: StrOp| {
        let (params, _) = o.signature();
        let mut l = vec![atom(o.short_name())];
        l.extend(params.iter().map(|s| atom(short_nt(*s))));
        Sexp::List(l)
    };
    let vars = |sort: Sort| args.iter().filter(move |(_, s)| *s == sort).map(move |(n, _)| atom(n));
    let mut s_alts: Vec<Sexp> = vars(Sort::String).collect();
    s_alts.extend(pools.string.iter().map(|s| Sexp::Str(s.clone())));
    s_alts.extend(
        [StrOp::Replace, StrOp::Concat, StrOp::Substr, StrOp::IteStr, StrOp::IntToStr, StrOp::At].map(op),
    );
    let mut b_alts = vec![atom("true"), atom("false")];
    b_alts.extend([StrOp::Eq, StrOp::Contains, StrOp::SuffixOf, StrOp::PrefixOf].map(op));
    let mut i_alts: Vec<Sexp> = vars(Sort::Int).collect();
    i_alts.extend(pools.int.iter().map(|i| atom(&i.to_string())));
    i_alts.extend(
        [StrOp::StrToInt, StrOp::Add, StrOp::Sub, StrOp::Length, StrOp::IteInt, StrOp::IndexOf].map(op),
    );
    GrammarSpec {
        start: "Start".into(),
        nts: vec![
            ("Start".into(), ret, vec![atom(short_nt(ret))]),
            ("S".into(), Sort::String, s_alts),
            ("B".into(), Sort::Bool, b_alts),
            ("I".into(), Sort::Int, i_alts),
        ],
    }
}

fn short_nt(s: Sort) -> &'static str {
    match s {
        Sort::String => "S",
        Sort::Int => "I",
        Sort::Bool => "B",
    }
}

fn literal(e: &Sexp) -> Option<StrValue> {
    match e {
        Sexp::Str(s) => Some(StrValue::str(s)),
        Sexp::Atom(a) if a == "true" => Some(StrValue::Bool(true)),
        Sexp::Atom(a) if a == "false" => Some(StrValue::Bool(false)),
        Sexp::Atom(a) => a.parse().ok().map(StrValue::Int),
        Sexp::List(l) if l.len() == 2 && l[0].as_atom() == Some("-") => match literal(&l[1])? {
            StrValue::Int(i) => Some(StrValue::Int(-i)),
            _ => None,
        },
        Sexp::List(_) => None,
    }
}

fn literal_text(v: &StrValue) -> String {
    match v {
        StrValue::Str(s) => quote(&String::from_utf8_lossy(s)),
        other => format!("{other:?}"),
    }
}

fn json_value(v: &serde_json::Value) -> Option<StrValue> {
    match v {
        serde_json::Value::String(s) => Some(StrValue::str(s)),
        serde_json::Value::Number(n) => n.as_i64().map(StrValue::Int),
        serde_json::Value::Bool(b) => Some(StrValue::Bool(*b)),
        _ => None,
    }
}

fn to_text(e: &Sexp) -> String {
    match e {
        Sexp::Atom(a) => a.clone(),
        Sexp::Str(s) => quote(s),
        Sexp::List(l) => format!("({})", l.iter().map(to_text).collect::<Vec<_>>().join(" ")),
    }
}

/// Pointwise evaluation over the task's examples.
pub struct StringSemantics<'a> {
    task: &'a StringTask,
}

impl Semantics for StringSemantics<'_> {
    type Value = StrValue;

    fn contexts(&self) -> usize {
        self.task.examples.len()
    }

    fn apply(&self, prod: ProdId, args: &[&[StrValue]]) -> Vec<StrValue> {
        let ex = &self.task.examples;
        match &self.task.nodes[prod.index()] {
            Node::Var(i) => ex.iter().map(|(inp, _)| inp[*i].clone()).collect(),
            Node::Lit(v) => vec![v.clone(); ex.len()],
            Node::Pass => args[0].to_vec(),
            Node::Op(op) => {
                let mut row: Vec<&StrValue> = Vec::with_capacity(args.len());
                (0..ex.len())
                    .map(|c| {
                        row.clear();
                        row.extend(args.iter().map(|a| &a[c]));
                        op.eval(&row)
                    })
                    .collect()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::search::signature;

    pub const TLD: &str = r#"
; https=//exceljet.net/formula/get-top-level-domain-tld
(set-logic SLIA)
(synth-fun f ((_arg_0 String)) String
  ((Start String (ntString))
   (ntString String (_arg_0 "" "." (str.++ ntString ntString) (str.replace ntString ntString ntString)
                     (str.substr ntString ntInt ntInt)))
   (ntInt Int (0 1 3 (+ ntInt ntInt) (- ntInt ntInt) (str.len ntString) (str.indexof ntString ntString ntInt)))))
(constraint (= (f "www.domain.com") "com"))
(constraint (= (f "mail.net") "net"))
(constraint (= (f "www.amazon.co.uk") "uk"))
(check-synth)
"#;

    #[test]
    fn loads_sygus_task() {
        let t = StringTask::from_sygus("tld", TLD).unwrap();
        assert_eq!(t.args, [("_arg_0".to_string(), Sort::String)]);
        assert_eq!(t.examples.len(), 3);
        assert_eq!(t.examples[0].1, StrValue::str("com"));
        assert!(t.hint.as_deref().unwrap().contains("top-level-domain"));
        // only declared productions: 6 string, 7 int, 1 start
        assert_eq!(t.grammar.productions().len(), 14);
        assert!(t.grammar.terminal("str.at").is_none());
    }

    #[test]
    fn zero_examples_rejected() {
        let text = TLD.lines().filter(|l| !l.contains("constraint")).collect::<Vec<_>>().join("\n");
        assert!(matches!(StringTask::from_sygus("x", &text), Err(StringTaskError::NoExamples)));
        let bad = "(synth-fun f ((x String)) String";
        assert!(matches!(StringTask::from_sygus("x", bad), Err(StringTaskError::Sexp(_))));
    }

    #[test]
    fn evaluates_candidate_solution() {
        let t = StringTask::from_sygus("tld", TLD).unwrap();
        let p = t
            .grammar
            .parse(r#"(str.replace (str.substr _arg_0 (- (str.len _arg_0) 3) 3) "." "")"#)
            .unwrap();
        assert!(t.satisfies(&p));
        // ten nodes plus the Start unit rule
        assert_eq!(p.size(), 11);
    }

    #[test]
    fn union_grammar_and_witnesses() {
        let json = r#"{"args": [["x", "String"]],
            "examples": [{"inputs": ["ab"], "output": "ab"}, {"inputs": [""], "output": ""}],
            "literals": {"string": [""], "int": [0]}}"#;
        let t = StringTask::from_json("id", json).unwrap();
        let g = &t.grammar;
        assert!(g.terminal("indexof").is_some());
        let a = g.parse("x").unwrap();
        let b = g.parse(r#"(concat x "")"#).unwrap();
        let c = g.parse("(substr x 0 (length x))").unwrap();
        let sem = t.semantics();
        assert_eq!(signature(&sem, &a), signature(&sem, &b));
        assert_eq!(signature(&sem, &a), signature(&sem, &c));
        assert!(t.satisfies(&a));
    }

    #[test]
    fn completion_bodies() {
        let t = StringTask::from_sygus("tld", TLD).unwrap();
        let full = "(define-fun f ((_arg_0 String)) String (str.++ _arg_0 \"\"))";
        assert_eq!(t.completion_body(full), "(str.++ _arg_0 \"\")");
        assert_eq!(t.completion_body("(str.++ _arg_0 \".\"))"), "(str.++ _arg_0 \".\")");
        assert_eq!(t.completion_body("_arg_0"), "_arg_0");
    }

    #[test]
    fn synth_fun_text_round_trips() {
        let t = StringTask::from_sygus("tld", TLD).unwrap();
        let text = format!(
            "{}\n(constraint (= (f \"a\") \"a\"))",
            t.synth_fun_text()
        );
        let back = StringTask::from_sygus("again", &text).unwrap();
        assert_eq!(*back.grammar, *t.grammar);
    }
}
