//! Context-free grammars, derivation trees, and the lexer/parser used to turn
//! candidate program text back into derivations.
//!
//! A [`Grammar`] is immutable once built. Nonterminals, terminals and
//! productions are addressed by dense ids ([`NtId`], [`TermId`], [`ProdId`]);
//! a production's id is its position in the production list, so ids survive
//! serialization unchanged.

mod format;
mod lexer;
mod parser;
mod program;
mod weighted;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use format::{GrammarFile, ProductionEntry, WeightedGrammarFile};
pub use lexer::{Lexed, SkippedSpan};
pub use parser::ParseError;
pub use program::Program;
pub use weighted::{ProbabilisticGrammar, Template, WeightedGrammar, DEFAULT_SCALE};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NtId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TermId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ProdId(pub u32);

impl NtId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl TermId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl ProdId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for ProdId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Symbol {
    T(TermId),
    N(NtId),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Production {
    pub id: ProdId,
    pub lhs: NtId,
    pub rhs: Vec<Symbol>,
    /// Designated terminal standing for the DSL operator this rule encodes.
    pub operator: Option<TermId>,
}

impl Production {
    /// Number of nonterminals on the right-hand side.
    pub fn arity(&self) -> usize {
        self.rhs.iter().filter(|s| matches!(s, Symbol::N(_))).count()
    }

    /// Right-hand side nonterminals, in order.
    pub fn child_nonterminals(&self) -> impl Iterator<Item = NtId> + '_ {
        self.rhs.iter().filter_map(|s| match s {
            Symbol::N(n) => Some(*n),
            Symbol::T(_) => None,
        })
    }

    pub fn terminals(&self) -> impl Iterator<Item = TermId> + '_ {
        self.rhs.iter().filter_map(|s| match s {
            Symbol::T(t) => Some(*t),
            Symbol::N(_) => None,
        })
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum GrammarError {
    #[error("unknown nonterminal `{0}`")]
    UnknownNonterminal(String),
    #[error("nonterminal `{0}` has no productions")]
    EmptyNonterminal(String),
    #[error("production {prod} designates operator `{operator}` which is not on its right-hand side")]
    OperatorNotInRhs { prod: ProdId, operator: String },
    #[error("empty terminal in production for `{0}`")]
    EmptyTerminal(String),
    #[error("production {0} does not belong to this grammar")]
    UnknownProduction(ProdId),
    #[error("program node {prod} has {found} children, expected {expected}")]
    ArityMismatch {
        prod: ProdId,
        expected: usize,
        found: usize,
    },
    #[error("child {index} of {prod} derives `{found}` but `{expected}` is required")]
    SortMismatch {
        prod: ProdId,
        index: usize,
        expected: String,
        found: String,
    },
    #[error("invalid weight {weight} for production {prod}")]
    InvalidWeight { prod: ProdId, weight: f64 },
    #[error("invalid scale factor {0}; must be >= 1")]
    InvalidScale(f64),
    #[error("probabilities for `{nonterminal}` sum to {sum}")]
    Unnormalized { nonterminal: String, sum: f64 },
    #[error("production {0} has probability zero")]
    ZeroProbability(ProdId),
    #[error("production {0} was excluded from the weighted grammar")]
    ExcludedProduction(ProdId),
    #[error("malformed grammar file: {0}")]
    Format(String),
}

/// A context-free grammar `(N, Σ, S, R)`.
#[derive(Clone, Debug)]
pub struct Grammar {
    nonterminals: Vec<String>,
    terminals: Vec<String>,
    start: NtId,
    productions: Vec<Production>,
    by_lhs: Vec<Vec<ProdId>>,
    nt_index: HashMap<String, NtId>,
    term_index: HashMap<String, TermId>,
}

impl PartialEq for Grammar {
    fn eq(&self, other: &Self) -> bool {
        self.nonterminals == other.nonterminals
            && self.terminals == other.terminals
            && self.start == other.start
            && self.productions == other.productions
    }
}

impl Grammar {
    pub fn start(&self) -> NtId {
        self.start
    }

    pub fn nonterminals(&self) -> impl Iterator<Item = NtId> + '_ {
        (0..self.nonterminals.len() as u32).map(NtId)
    }

    pub fn num_nonterminals(&self) -> usize {
        self.nonterminals.len()
    }

    pub fn num_terminals(&self) -> usize {
        self.terminals.len()
    }

    pub fn nonterminal_name(&self, nt: NtId) -> &str {
        &self.nonterminals[nt.index()]
    }

    pub fn terminal_text(&self, t: TermId) -> &str {
        &self.terminals[t.index()]
    }

    pub fn terminals(&self) -> impl Iterator<Item = (TermId, &str)> + '_ {
        self.terminals
            .iter()
            .enumerate()
            .map(|(i, s)| (TermId(i as u32), s.as_str()))
    }

    /// Looks up a nonterminal by name, with or without the `$` prefix.
    pub fn nonterminal(&self, name: &str) -> Option<NtId> {
        let name = name.strip_prefix('$').unwrap_or(name);
        self.nt_index.get(name).copied()
    }

    pub fn terminal(&self, text: &str) -> Option<TermId> {
        self.term_index.get(text).copied()
    }

    pub fn productions(&self) -> &[Production] {
        &self.productions
    }

    pub fn production(&self, id: ProdId) -> &Production {
        &self.productions[id.index()]
    }

    pub fn get_production(&self, id: ProdId) -> Option<&Production> {
        self.productions.get(id.index())
    }

    pub fn productions_of(&self, nt: NtId) -> &[ProdId] {
        &self.by_lhs[nt.index()]
    }

    /// Finds the first production of `lhs` whose right-hand side renders to
    /// exactly `rhs` (nonterminals written with `$`).
    pub fn find_production(&self, lhs: &str, rhs: &[&str]) -> Option<ProdId> {
        let lhs = self.nonterminal(lhs)?;
        self.by_lhs[lhs.index()].iter().copied().find(|&p| {
            let prod = self.production(p);
            prod.rhs.len() == rhs.len()
                && prod
                    .rhs
                    .iter()
                    .zip(rhs)
                    .all(|(sym, text)| self.symbol_text(*sym) == *text)
        })
    }

    /// The production of `lhs` whose designated operator is `operator`.
    pub fn production_with_operator(&self, lhs: &str, operator: &str) -> Option<ProdId> {
        let lhs = self.nonterminal(lhs)?;
        let op = self.terminal(operator)?;
        self.by_lhs[lhs.index()]
            .iter()
            .copied()
            .find(|&p| self.production(p).operator == Some(op))
    }

    pub fn symbol_text(&self, sym: Symbol) -> String {
        match sym {
            Symbol::T(t) => self.terminals[t.index()].clone(),
            Symbol::N(n) => format!("${}", self.nonterminals[n.index()]),
        }
    }

    /// Human-readable form of a production, e.g. `$S -> f( $S )`.
    pub fn describe(&self, id: ProdId) -> String {
        let prod = self.production(id);
        let rhs: Vec<String> = prod.rhs.iter().map(|s| self.symbol_text(*s)).collect();
        format!("${} -> {}", self.nonterminal_name(prod.lhs), rhs.join(" "))
    }

    /// Nonterminals reachable from `roots` (inclusive).
    pub fn reachable_from(&self, roots: &[NtId]) -> Vec<bool> {
        let mut seen = vec![false; self.nonterminals.len()];
        let mut stack: Vec<NtId> = roots.to_vec();
        while let Some(nt) = stack.pop() {
            if std::mem::replace(&mut seen[nt.index()], true) {
                continue;
            }
            for &p in &self.by_lhs[nt.index()] {
                stack.extend(self.productions[p.index()].child_nonterminals());
            }
        }
        seen
    }

    /// A copy of this grammar with a different start symbol. Productions and
    /// ids are shared unchanged.
    pub fn with_start(&self, start: NtId) -> Grammar {
        let mut g = self.clone();
        g.start = start;
        g
    }

    /// Checks that `program` is a well-formed derivation tree deriving from `nt`.
    pub fn check_program(&self, program: &Program, nt: NtId) -> Result<(), GrammarError> {
        let prod = self
            .get_production(program.production())
            .ok_or(GrammarError::UnknownProduction(program.production()))?;
        if prod.lhs != nt {
            return Err(GrammarError::SortMismatch {
                prod: prod.id,
                index: 0,
                expected: self.nonterminal_name(nt).to_string(),
                found: self.nonterminal_name(prod.lhs).to_string(),
            });
        }
        let kids = program.children();
        if kids.len() != prod.arity() {
            return Err(GrammarError::ArityMismatch {
                prod: prod.id,
                expected: prod.arity(),
                found: kids.len(),
            });
        }
        for (child, child_nt) in kids.iter().zip(prod.child_nonterminals()) {
            self.check_program(child, child_nt)?;
        }
        Ok(())
    }

    /// Longest-match tokenization over this grammar's terminal alphabet.
    pub fn lex(&self, text: &str) -> Lexed {
        lexer::lex(self, text)
    }

    /// Parses `text` into a derivation from the start symbol.
    pub fn parse(&self, text: &str) -> Result<Program, ParseError> {
        parser::parse(self, self.start, text)
    }

    /// Parses `text` into a derivation from `nt`.
    pub fn parse_from(&self, nt: NtId, text: &str) -> Result<Program, ParseError> {
        parser::parse(self, nt, text)
    }

    /// Parses an already-lexed terminal sequence.
    pub fn parse_tokens(&self, nt: NtId, tokens: &[TermId]) -> Result<Program, ParseError> {
        parser::parse_tokens(self, nt, tokens)
    }
}

/// Incremental construction of a [`Grammar`].
///
/// Symbols starting with `$` are nonterminals; anything else is a terminal
/// taken verbatim.
#[derive(Debug, Clone)]
pub struct GrammarBuilder {
    start: String,
    nonterminals: Vec<String>,
    terminals: Vec<String>,
    nt_index: HashMap<String, NtId>,
    term_index: HashMap<String, TermId>,
    rules: Vec<(NtId, Vec<Symbol>, Option<String>)>,
}

impl GrammarBuilder {
    pub fn new(start: &str) -> Self {
        let mut b = GrammarBuilder {
            start: start.strip_prefix('$').unwrap_or(start).to_string(),
            nonterminals: Vec::new(),
            terminals: Vec::new(),
            nt_index: HashMap::new(),
            term_index: HashMap::new(),
            rules: Vec::new(),
        };
        let s = b.start.clone();
        b.intern_nt(&s);
        b
    }

    /// Declares a nonterminal without adding productions, fixing its id order.
    pub fn nonterminal(&mut self, name: &str) -> NtId {
        self.intern_nt(name.strip_prefix('$').unwrap_or(name))
    }

    fn intern_nt(&mut self, name: &str) -> NtId {
        if let Some(&id) = self.nt_index.get(name) {
            return id;
        }
        let id = NtId(self.nonterminals.len() as u32);
        self.nonterminals.push(name.to_string());
        self.nt_index.insert(name.to_string(), id);
        id
    }

    fn intern_t(&mut self, text: &str) -> TermId {
        if let Some(&id) = self.term_index.get(text) {
            return id;
        }
        let id = TermId(self.terminals.len() as u32);
        self.terminals.push(text.to_string());
        self.term_index.insert(text.to_string(), id);
        id
    }

    /// Adds `lhs -> rhs` with an optional operator terminal.
    pub fn rule<S: AsRef<str>>(&mut self, lhs: &str, rhs: &[S], operator: Option<&str>) -> &mut Self {
        let lhs = self.nonterminal(lhs);
        let rhs = rhs
            .iter()
            .map(|s| {
                let s = s.as_ref();
                match s.strip_prefix('$') {
                    Some(name) if !name.is_empty() => Symbol::N(self.intern_nt(name)),
                    _ => Symbol::T(self.intern_t(s)),
                }
            })
            .collect();
        self.rules.push((lhs, rhs, operator.map(str::to_string)));
        self
    }

    /// Adds `lhs -> rhs` where `operator` names the rule's operator terminal.
    pub fn op<S: AsRef<str>>(&mut self, lhs: &str, operator: &str, rhs: &[S]) -> &mut Self {
        self.rule(lhs, rhs, Some(operator))
    }

    pub fn build(&self) -> Result<Grammar, GrammarError> {
        let start = self.nt_index[&self.start];
        let mut productions = Vec::with_capacity(self.rules.len());
        let mut by_lhs = vec![Vec::new(); self.nonterminals.len()];
        for (i, (lhs, rhs, operator)) in self.rules.iter().enumerate() {
            let id = ProdId(i as u32);
            let operator = match operator {
                None => None,
                Some(text) => {
                    let t = self.term_index.get(text.as_str()).copied();
                    match t {
                        Some(t) if rhs.contains(&Symbol::T(t)) => Some(t),
                        _ => {
                            return Err(GrammarError::OperatorNotInRhs {
                                prod: id,
                                operator: text.clone(),
                            })
                        }
                    }
                }
            };
            by_lhs[lhs.index()].push(id);
            productions.push(Production {
                id,
                lhs: *lhs,
                rhs: rhs.clone(),
                operator,
            });
        }
        if let Some(t) = self.terminals.iter().find(|t| t.is_empty()) {
            return Err(GrammarError::EmptyTerminal(t.clone()));
        }
        for (i, prods) in by_lhs.iter().enumerate() {
            if prods.is_empty() {
                return Err(GrammarError::EmptyNonterminal(self.nonterminals[i].clone()));
            }
        }
        Ok(Grammar {
            nonterminals: self.nonterminals.clone(),
            terminals: self.terminals.clone(),
            start,
            productions,
            by_lhs,
            nt_index: self.nt_index.clone(),
            term_index: self.term_index.clone(),
        })
    }
}

impl Grammar {
    /// Rebuilds a grammar from explicit parts. Used by weight derivation,
    /// which drops and rewrites productions.
    pub(crate) fn from_parts(
        nonterminals: Vec<String>,
        terminals: Vec<String>,
        start: NtId,
        rules: Vec<(NtId, Vec<Symbol>, Option<TermId>)>,
    ) -> Result<Grammar, GrammarError> {
        let mut by_lhs = vec![Vec::new(); nonterminals.len()];
        let productions: Vec<Production> = rules
            .into_iter()
            .enumerate()
            .map(|(i, (lhs, rhs, operator))| {
                let id = ProdId(i as u32);
                by_lhs[lhs.index()].push(id);
                Production {
                    id,
                    lhs,
                    rhs,
                    operator,
                }
            })
            .collect();
        for (i, prods) in by_lhs.iter().enumerate() {
            if prods.is_empty() {
                return Err(GrammarError::EmptyNonterminal(nonterminals[i].clone()));
            }
        }
        let nt_index = nonterminals
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), NtId(i as u32)))
            .collect();
        let term_index = terminals
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), TermId(i as u32)))
            .collect();
        Ok(Grammar {
            nonterminals,
            terminals,
            start,
            productions,
            by_lhs,
            nt_index,
            term_index,
        })
    }

    pub(crate) fn terminal_table(&self) -> &[String] {
        &self.terminals
    }
}
