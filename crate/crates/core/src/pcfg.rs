//! Learning a PCFG from sampled completions and turning it into search
//! weights.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::grammar::{
    Grammar, GrammarError, NtId, ProbabilisticGrammar, ProdId, Program, Symbol, TermId,
    WeightedGrammar,
};

/// Completions for one task, split into those that parse and those that
/// only lex.
#[derive(Clone, Debug, Default)]
pub struct CompletionSet {
    pub task_id: String,
    pub completions: Vec<String>,
    pub parsed: Vec<(usize, Arc<Program>)>,
    pub lexed: Vec<(usize, Vec<TermId>)>,
}

impl CompletionSet {
    /// Parses every completion from the grammar's start symbol. In strict
    /// mode failures are dropped, otherwise they are kept as token streams.
    pub fn build(task_id: &str, grammar: &Grammar, completions: Vec<String>, strict: bool) -> Self {
        let mut parsed = Vec::new();
        let mut lexed = Vec::new();
        for (i, text) in completions.iter().enumerate() {
            match grammar.parse(text) {
                Ok(p) => parsed.push((i, Arc::new(p))),
                Err(_) if !strict => lexed.push((i, grammar.lex(text).tokens)),
                Err(_) => {}
            }
        }
        CompletionSet {
            task_id: task_id.to_string(),
            completions,
            parsed,
            lexed,
        }
    }

    /// `n`
    pub fn len(&self) -> usize {
        self.completions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.completions.is_empty()
    }

    /// `n'`
    pub fn num_parsed(&self) -> usize {
        self.parsed.len()
    }

    /// Fraction of completions that parse; 0 for an empty set.
    pub fn validity(&self) -> f64 {
        if self.completions.is_empty() {
            0.0
        } else {
            self.parsed.len() as f64 / self.completions.len() as f64
        }
    }
}

/// Real-valued rule frequencies with per-nonterminal totals.
#[derive(Clone, Debug, PartialEq)]
pub struct RuleCounts {
    counts: Vec<f64>,
    totals: Vec<f64>,
    lhs: Vec<NtId>,
}

impl RuleCounts {
    pub fn zeros(grammar: &Grammar) -> Self {
        RuleCounts {
            counts: vec![0.0; grammar.productions().len()],
            totals: vec![0.0; grammar.num_nonterminals()],
            lhs: grammar.productions().iter().map(|p| p.lhs).collect(),
        }
    }

    pub fn from_counts(grammar: &Grammar, counts: Vec<f64>) -> Self {
        let mut rc = RuleCounts::zeros(grammar);
        for (i, c) in counts.into_iter().enumerate() {
            rc.add(ProdId(i as u32), c);
        }
        rc
    }

    pub fn add(&mut self, prod: ProdId, amount: f64) {
        self.counts[prod.index()] += amount;
        self.totals[self.lhs[prod.index()].index()] += amount;
    }

    pub fn get(&self, prod: ProdId) -> f64 {
        self.counts[prod.index()]
    }

    pub fn total(&self, nt: NtId) -> f64 {
        self.totals[nt.index()]
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn merge(&mut self, other: &RuleCounts) {
        for (i, &c) in other.counts.iter().enumerate() {
            self.add(ProdId(i as u32), c);
        }
    }
}

/// Occurrences of each rule across the programs' traces.
pub fn count_strict<'a>(
    grammar: &Grammar,
    programs: impl IntoIterator<Item = &'a Program>,
) -> RuleCounts {
    let mut rc = RuleCounts::zeros(grammar);
    for p in programs {
        p.visit_preorder(&mut |node| rc.add(node.production(), 1.0));
    }
    rc
}

/// The terminal whose occurrences stand for each rule, with the number of
/// rules sharing it. A rule without a declared operator falls back to its
/// lone right-hand-side terminal when no other rule mentions that terminal.
pub fn effective_operators(grammar: &Grammar) -> Vec<Option<(TermId, usize)>> {
    let mut declared = vec![0usize; grammar.num_terminals()];
    let mut mentioned = vec![0usize; grammar.num_terminals()];
    for p in grammar.productions() {
        if let Some(t) = p.operator {
            declared[t.index()] += 1;
        }
        let mut seen: Vec<TermId> = p.terminals().collect();
        seen.dedup();
        for t in seen {
            mentioned[t.index()] += 1;
        }
    }
    grammar
        .productions()
        .iter()
        .map(|p| match (p.operator, p.rhs.as_slice()) {
            (Some(t), _) => Some((t, declared[t.index()])),
            (None, [Symbol::T(t)]) if mentioned[t.index()] == 1 => Some((*t, 1)),
            _ => None,
        })
        .collect()
}

/// Approximate rule frequencies from operator-terminal occurrences.
pub fn count_nonstrict<'a>(
    grammar: &Grammar,
    lexed: impl IntoIterator<Item = &'a [TermId]>,
) -> RuleCounts {
    let ops = effective_operators(grammar);
    let mut by_terminal: Vec<Vec<(ProdId, usize)>> = vec![Vec::new(); grammar.num_terminals()];
    for (i, op) in ops.iter().enumerate() {
        if let Some((t, k)) = op {
            by_terminal[t.index()].push((ProdId(i as u32), *k));
        }
    }
    let mut rc = RuleCounts::zeros(grammar);
    for tokens in lexed {
        for t in tokens {
            for &(prod, k) in &by_terminal[t.index()] {
                rc.add(prod, 1.0 / k as f64);
            }
        }
    }
    rc
}

/// Additively smoothed maximum-likelihood estimate, normalized per
/// nonterminal.
pub fn fit_pcfg(grammar: Arc<Grammar>, counts: &RuleCounts, smoothing: f64) -> ProbabilisticGrammar {
    assert!(smoothing > 0.0, "smoothing must be positive");
    let mut probs = vec![0.0; grammar.productions().len()];
    for nt in grammar.nonterminals() {
        let rules = grammar.productions_of(nt);
        let denom = counts.total(nt) + smoothing * rules.len() as f64;
        for &r in rules {
            probs[r.index()] = (counts.get(r) + smoothing) / denom;
        }
    }
    ProbabilisticGrammar::new(grammar, probs).expect("smoothed estimate is normalized")
}

/// Zero-count rules get probability zero and the rest share the mass evenly.
/// A nonterminal with no counted rule at all stays uniform.
pub fn fit_binary(grammar: Arc<Grammar>, counts: &RuleCounts) -> ProbabilisticGrammar {
    let mut probs = vec![0.0; grammar.productions().len()];
    for nt in grammar.nonterminals() {
        let rules = grammar.productions_of(nt);
        let hit: Vec<ProdId> = rules.iter().copied().filter(|&r| counts.get(r) > 0.0).collect();
        let support = if hit.is_empty() { rules.to_vec() } else { hit };
        for &r in &support {
            probs[r.index()] = 1.0 / support.len() as f64;
        }
    }
    ProbabilisticGrammar::new(grammar, probs).expect("binary estimate is normalized")
}

/// Weights `-log2 p(R)`; see [`WeightedGrammar::from_pcfg`].
pub fn derive_wcfg(
    pg: &ProbabilisticGrammar,
    scale: f64,
    roots: &[NtId],
) -> Result<WeightedGrammar, GrammarError> {
    WeightedGrammar::from_pcfg(pg, scale, roots)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LearnMode {
    Strict,
    NonStrict,
    Binary,
}

/// Rule counts for a completion set under `mode`. Parsed completions are
/// counted exactly; in the lenient modes the rest contribute through their
/// operator terminals.
pub fn count_completions(grammar: &Grammar, cs: &CompletionSet, mode: LearnMode) -> RuleCounts {
    let mut rc = count_strict(grammar, cs.parsed.iter().map(|(_, p)| p.as_ref()));
    if mode != LearnMode::Strict {
        rc.merge(&count_nonstrict(grammar, cs.lexed.iter().map(|(_, t)| t.as_slice())));
    }
    rc
}

pub fn learn_pcfg(
    grammar: Arc<Grammar>,
    cs: &CompletionSet,
    mode: LearnMode,
    smoothing: f64,
) -> ProbabilisticGrammar {
    let rc = count_completions(&grammar, cs, mode);
    match mode {
        LearnMode::Binary => fit_binary(grammar, &rc),
        _ => fit_pcfg(grammar, &rc, smoothing),
    }
}

/// count, fit, derive.
pub fn learn(
    grammar: Arc<Grammar>,
    cs: &CompletionSet,
    mode: LearnMode,
    smoothing: f64,
    scale: f64,
    roots: &[NtId],
) -> Result<WeightedGrammar, GrammarError> {
    derive_wcfg(&learn_pcfg(grammar, cs, mode, smoothing), scale, roots)
}
