//! Backtracking recursive-descent parsing with production-order precedence.
//!
//! Alternatives are tried in grammar order and the first complete derivation
//! wins, which makes results deterministic for ambiguous grammars. Left
//! recursion is cut by refusing to re-enter a nonterminal at the same input
//! position.

use std::collections::HashSet;
use std::sync::Arc;

use thiserror::Error;

use super::{Grammar, NtId, ProdId, Program, Symbol, TermId};

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("unrecognized input `{text}` at offset {offset}")]
    Unrecognized { offset: usize, text: String },
    #[error("unexpected {found} at token {position}")]
    Unexpected { position: usize, found: String },
}

impl ParseError {
    /// Token index (or byte offset for unrecognized input) of the failure.
    pub fn position(&self) -> usize {
        match self {
            ParseError::Unrecognized { offset, .. } => *offset,
            ParseError::Unexpected { position, .. } => *position,
        }
    }
}

pub(super) fn parse(grammar: &Grammar, nt: NtId, text: &str) -> Result<Program, ParseError> {
    let lexed = grammar.lex(text);
    if let Some(skip) = lexed.skipped.first() {
        return Err(ParseError::Unrecognized {
            offset: skip.offset,
            text: skip.text.clone(),
        });
    }
    parse_tokens(grammar, nt, &lexed.tokens)
}

pub(super) fn parse_tokens(
    grammar: &Grammar,
    nt: NtId,
    tokens: &[TermId],
) -> Result<Program, ParseError> {
    let parser = Parser { grammar, tokens };
    let mut state = State::default();
    let n = tokens.len();
    let result = parser.nonterminal(&mut state, nt, 0, &mut |_, p, end| (end == n).then_some(p));
    result.ok_or_else(|| {
        let position = state.furthest;
        let found = match tokens.get(position) {
            Some(t) => format!("`{}`", grammar.terminal_text(*t)),
            None => "end of input".to_string(),
        };
        ParseError::Unexpected { position, found }
    })
}

type Cont<'k> = dyn FnMut(&mut State, Program, usize) -> Option<Program> + 'k;

#[derive(Default)]
struct State {
    furthest: usize,
    active: HashSet<(NtId, usize)>,
}

struct Parser<'g> {
    grammar: &'g Grammar,
    tokens: &'g [TermId],
}

impl Parser<'_> {
    fn nonterminal(
        &self,
        st: &mut State,
        nt: NtId,
        pos: usize,
        k: &mut Cont<'_>,
    ) -> Option<Program> {
        if !st.active.insert((nt, pos)) {
            return None;
        }
        let mut result = None;
        for &prod in self.grammar.productions_of(nt) {
            let mut children = Vec::new();
            result = self.sequence(st, prod, 0, pos, &mut children, k);
            if result.is_some() {
                break;
            }
        }
        st.active.remove(&(nt, pos));
        result
    }

    fn sequence(
        &self,
        st: &mut State,
        prod: ProdId,
        index: usize,
        pos: usize,
        children: &mut Vec<Arc<Program>>,
        k: &mut Cont<'_>,
    ) -> Option<Program> {
        let rhs = &self.grammar.production(prod).rhs;
        if index == rhs.len() {
            return k(st, Program::new(prod, children.clone()), pos);
        }
        match rhs[index] {
            Symbol::T(t) => {
                if self.tokens.get(pos) == Some(&t) {
                    self.sequence(st, prod, index + 1, pos + 1, children, k)
                } else {
                    st.furthest = st.furthest.max(pos);
                    None
                }
            }
            Symbol::N(child) => self.nonterminal(st, child, pos, &mut |st, sub, end| {
                children.push(Arc::new(sub));
                let r = self.sequence(st, prod, index + 1, end, children, k);
                children.pop();
                r
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::tests::tiny;
    use super::super::GrammarBuilder;
    use super::*;

    #[test]
    fn parses_nested() {
        let g = tiny();
        let p = g.parse("f(a)").unwrap();
        assert_eq!(p.production(), ProdId(1));
        assert_eq!(p.children()[0].production(), ProdId(0));
        let q = g.parse("g(a, f(a))").unwrap();
        assert_eq!(q.trace(), vec![ProdId(2), ProdId(0), ProdId(1), ProdId(0)]);
    }

    #[test]
    fn unknown_symbol_fails_at_it() {
        let g = tiny();
        let err = g.parse("h(a)").unwrap_err();
        assert_eq!(
            err,
            ParseError::Unrecognized {
                offset: 0,
                text: "h(".into()
            }
        );
    }

    #[test]
    fn reports_furthest_position() {
        let g = tiny();
        let err = g.parse("g(a a)").unwrap_err();
        assert_eq!(err.position(), 2);
        let err = g.parse("f(a").unwrap_err();
        assert!(matches!(err, ParseError::Unexpected { position: 2, .. }));
    }

    #[test]
    fn backtracks_across_alternatives() {
        // T -> x | x ; T  and  P -> T | T ; P  share the separator
        let mut b = GrammarBuilder::new("P");
        b.rule("$P", &["$R"], None)
            .rule("$P", &["$R", ";", "$P"], None)
            .rule("$R", &["if", "$T"], None)
            .rule("$T", &["x"], None)
            .rule("$T", &["x", ";", "$T"], None);
        let g = b.build().unwrap();
        let p = g.parse("if x ; x ; if x").unwrap();
        assert_eq!(p.render(&g), "if x ; x ; if x");
        assert_eq!(p.production(), g.find_production("P", &["$R", ";", "$P"]).unwrap());
    }

    #[test]
    fn left_recursion_terminates() {
        let mut b = GrammarBuilder::new("E");
        b.rule("$E", &["$E", "+", "n"], None).rule("$E", &["n"], None);
        let g = b.build().unwrap();
        // the guard cuts the left-recursive alternative, so only `n` parses
        assert!(g.parse("n").is_ok());
        assert!(g.parse("n + n").is_err());
    }

    #[test]
    fn first_derivation_under_production_order() {
        let mut b = GrammarBuilder::new("S");
        b.rule("$S", &["$A"], None)
            .rule("$S", &["$B"], None)
            .rule("$A", &["x"], None)
            .rule("$B", &["x"], None);
        let g = b.build().unwrap();
        assert_eq!(g.parse("x").unwrap().production(), ProdId(0));
    }
}
