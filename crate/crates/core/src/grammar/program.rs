use std::fmt;
use std::sync::Arc;

use super::{Grammar, ProdId, Symbol, TermId};

/// A derivation tree: a production applied to one subprogram per
/// right-hand-side nonterminal.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Program {
    production: ProdId,
    children: Vec<Arc<Program>>,
    size: u32,
}

impl Program {
    pub fn new(production: ProdId, children: Vec<Arc<Program>>) -> Self {
        let size = 1 + children.iter().map(|c| c.size).sum::<u32>();
        Program {
            production,
            children,
            size,
        }
    }

    pub fn leaf(production: ProdId) -> Self {
        Program::new(production, Vec::new())
    }

    pub fn production(&self) -> ProdId {
        self.production
    }

    pub fn children(&self) -> &[Arc<Program>] {
        &self.children
    }

    /// Trace length `|P|`.
    pub fn size(&self) -> usize {
        self.size as usize
    }

    /// Preorder sequence of production ids.
    pub fn trace(&self) -> Vec<ProdId> {
        let mut out = Vec::with_capacity(self.size());
        self.visit_preorder(&mut |p| out.push(p.production));
        out
    }

    pub fn visit_preorder<'a>(&'a self, f: &mut impl FnMut(&'a Program)) {
        f(self);
        for c in &self.children {
            c.visit_preorder(f);
        }
    }

    /// Whether any node of this tree uses `prod`.
    pub fn uses(&self, prod: ProdId) -> bool {
        self.production == prod || self.children.iter().any(|c| c.uses(prod))
    }

    /// Terminal sequence of the derived sentence.
    pub fn tokens(&self, grammar: &Grammar) -> Vec<TermId> {
        let mut out = Vec::new();
        self.push_tokens(grammar, &mut out);
        out
    }

    fn push_tokens(&self, grammar: &Grammar, out: &mut Vec<TermId>) {
        let prod = grammar.production(self.production);
        let mut kids = self.children.iter();
        for sym in &prod.rhs {
            match sym {
                Symbol::T(t) => out.push(*t),
                Symbol::N(_) => {
                    if let Some(child) = kids.next() {
                        child.push_tokens(grammar, out);
                    }
                }
            }
        }
    }

    /// Concatenates rhs terminals and rendered children. Adjacent tokens are
    /// glued unless that would change how the text lexes, so the result always
    /// tokenizes back to [`Program::tokens`].
    pub fn render(&self, grammar: &Grammar) -> String {
        let tokens = self.tokens(grammar);
        let mut out = String::new();
        let mut prev: Option<&str> = None;
        for t in tokens {
            let text = grammar.terminal_text(t);
            if let Some(p) = prev {
                if needs_space(grammar, p, text) {
                    out.push(' ');
                }
            }
            out.push_str(text);
            prev = Some(text);
        }
        out
    }
}

fn needs_space(grammar: &Grammar, prev: &str, next: &str) -> bool {
    let opens = prev.ends_with('(') || prev.ends_with(',') || prev.ends_with('[');
    let closes = next.starts_with(')') || next.starts_with(',') || next.starts_with(']');
    if !(opens || closes) {
        return true;
    }
    let glued = format!("{prev}{next}");
    let lexed = grammar.lex(&glued);
    !(lexed.skipped.is_empty()
        && lexed.tokens.len() == 2
        && grammar.terminal_text(lexed.tokens[0]) == prev
        && grammar.terminal_text(lexed.tokens[1]) == next)
}

impl fmt::Debug for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.production)?;
        if !self.children.is_empty() {
            f.debug_list().entries(self.children.iter()).finish()?;
        }
        Ok(())
    }
}
