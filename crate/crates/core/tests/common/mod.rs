#![allow(dead_code)]

use std::collections::{HashMap, HashSet};
use std::path::PathBuf;
use std::sync::Arc;

use guided_synth::grammar::{Grammar, GrammarBuilder, NtId, ProdId, Program};
use guided_synth::search::Semantics;
use rand::Rng;

pub fn fixtures() -> PathBuf {
    PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures"))
}

pub fn read_fixture(rel: &str) -> String {
    std::fs::read_to_string(fixtures().join(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

/// S -> a | f(S) | g(S,S)
pub fn tg() -> Arc<Grammar> {
    let mut b = GrammarBuilder::new("S");
    b.rule("$S", &["a"], None)
        .op("$S", "f(", &["f(", "$S", ")"])
        .op("$S", "g(", &["g(", "$S", ",", "$S", ")"]);
    Arc::new(b.build().unwrap())
}

/// TG programs as their own text: nothing is ever equivalent.
pub struct TgText;

impl Semantics for TgText {
    type Value = String;
    fn contexts(&self) -> usize {
        1
    }
    fn apply(&self, prod: ProdId, args: &[&[String]]) -> Vec<String> {
        vec![match prod.0 {
            0 => "a".into(),
            1 => format!("f({})", args[0][0]),
            _ => format!("g({},{})", args[0][0], args[1][0]),
        }]
    }
}

/// TG over small integers, lossy enough that many programs collide.
pub struct TgMod;

pub const TG_INPUTS: [i64; 4] = [0, 1, 2, 5];

pub fn tg_mod_eval(p: &Program, x: i64) -> i64 {
    let k = p.children();
    match p.production().0 {
        0 => x,
        1 => (tg_mod_eval(&k[0], x).pow(2) + 1) % 7,
        _ => (tg_mod_eval(&k[0], x) + 2 * tg_mod_eval(&k[1], x)) % 7,
    }
}

impl Semantics for TgMod {
    type Value = i64;
    fn contexts(&self) -> usize {
        TG_INPUTS.len()
    }
    fn apply(&self, prod: ProdId, args: &[&[i64]]) -> Vec<i64> {
        (0..TG_INPUTS.len())
            .map(|i| match prod.0 {
                0 => TG_INPUTS[i],
                1 => (args[0][i].pow(2) + 1) % 7,
                _ => (args[0][i] + 2 * args[1][i]) % 7,
            })
            .collect()
    }
}

/// Every program deriving from a nonterminal with exactly a given cost, by
/// plain recursion over productions and cost splits.
pub struct BruteForce<'g> {
    g: &'g Grammar,
    weight: Vec<u32>,
    memo: HashMap<(NtId, u32), Vec<Arc<Program>>>,
}

impl<'g> BruteForce<'g> {
    pub fn new(g: &'g Grammar, weight: impl Fn(ProdId) -> u32) -> Self {
        let weight = (0..g.productions().len()).map(|i| weight(ProdId(i as u32))).collect();
        BruteForce {
            g,
            weight,
            memo: HashMap::new(),
        }
    }

    pub fn programs(&mut self, nt: NtId, cost: u32) -> Vec<Arc<Program>> {
        if let Some(v) = self.memo.get(&(nt, cost)) {
            return v.clone();
        }
        let mut out = Vec::new();
        for &pid in self.g.productions_of(nt) {
            let w = self.weight[pid.index()];
            if w > cost {
                continue;
            }
            let kids: Vec<NtId> = self.g.production(pid).child_nonterminals().collect();
            let rest = cost - w;
            if kids.is_empty() {
                if rest == 0 {
                    out.push(Arc::new(Program::leaf(pid)));
                }
                continue;
            }
            self.split(&kids, rest, Vec::new(), &mut |args| out.push(Arc::new(Program::new(pid, args))));
        }
        self.memo.insert((nt, cost), out.clone());
        out
    }

    fn split(&mut self, kids: &[NtId], rest: u32, acc: Vec<Arc<Program>>, emit: &mut dyn FnMut(Vec<Arc<Program>>)) {
        match kids {
            [] => {
                if rest == 0 {
                    emit(acc);
                }
            }
            [first, tail @ ..] => {
                for c in 1..=rest {
                    if rest - c < tail.len() as u32 {
                        break;
                    }
                    for p in self.programs(*first, c) {
                        let mut next = acc.clone();
                        next.push(p);
                        self.split(tail, rest - c, next, emit);
                    }
                }
            }
        }
    }
}

/// Shortest derivation height for each nonterminal.
pub fn heights(g: &Grammar) -> Vec<usize> {
    let mut h = vec![usize::MAX; g.num_nonterminals()];
    loop {
        let mut changed = false;
        for p in g.productions() {
            let kid = p.child_nonterminals().map(|n| h[n.index()]).max().unwrap_or(0);
            if kid != usize::MAX && kid + 1 < h[p.lhs.index()] {
                h[p.lhs.index()] = kid + 1;
                changed = true;
            }
        }
        if !changed {
            return h;
        }
    }
}

/// A random program from `nt` of height at most `depth` (raised to the
/// shortest possible height when needed).
pub fn random_program(g: &Grammar, nt: NtId, rng: &mut impl Rng, depth: usize) -> Program {
    let h = heights(g);
    fn go(g: &Grammar, h: &[usize], nt: NtId, rng: &mut impl Rng, depth: usize) -> Program {
        let depth = depth.max(h[nt.index()]);
        let fits: Vec<ProdId> = g
            .productions_of(nt)
            .iter()
            .copied()
            .filter(|&p| {
                g.production(p)
                    .child_nonterminals()
                    .all(|n| h[n.index()] != usize::MAX && h[n.index()] < depth)
            })
            .collect();
        let pid = fits[rng.gen_range(0..fits.len())];
        let kids = g
            .production(pid)
            .child_nonterminals()
            .map(|n| Arc::new(go(g, h, n, rng, depth - 1)))
            .collect();
        Program::new(pid, kids)
    }
    go(g, &h, nt, rng, depth)
}

/// Random per-nonterminal distribution with every probability positive.
pub fn random_probs(g: &Grammar, rng: &mut impl Rng) -> Vec<f64> {
    let mut probs = vec![0.0; g.productions().len()];
    for nt in g.nonterminals() {
        let rules = g.productions_of(nt);
        let raw: Vec<f64> = rules.iter().map(|_| rng.gen_range(0.01..1.0)).collect();
        let total: f64 = raw.iter().sum();
        for (r, x) in rules.iter().zip(raw) {
            probs[r.index()] = x / total;
        }
    }
    probs
}

/// Per-level, per-nonterminal signature sets an exhaustive enumerator
/// predicts for the bank: signatures first reached at that cost.
pub fn oracle_levels<V: Clone + Eq + std::hash::Hash>(
    g: &Grammar,
    weight: impl Fn(ProdId) -> u32,
    through: u32,
    eval: impl Fn(&Program) -> V,
) -> Vec<HashMap<NtId, HashSet<V>>> {
    let mut bf = BruteForce::new(g, weight);
    let mut seen: HashMap<NtId, HashSet<V>> = HashMap::new();
    let mut levels = Vec::new();
    for level in 1..=through {
        let mut fresh: HashMap<NtId, HashSet<V>> = HashMap::new();
        for nt in g.nonterminals() {
            for p in bf.programs(nt, level) {
                let v = eval(&p);
                if !seen.get(&nt).is_some_and(|s| s.contains(&v)) {
                    fresh.entry(nt).or_default().insert(v);
                }
            }
        }
        for (nt, vs) in &fresh {
            seen.entry(*nt).or_default().extend(vs.iter().cloned());
        }
        levels.push(fresh);
    }
    levels
}
