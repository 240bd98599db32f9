//! Cost-ordered bottom-up enumeration with observational-equivalence pruning.
//!
//! The [`Enumerator`] walks the search grammar of a [`WeightedGrammar`] level
//! by level, where a level is a discrete cost. Candidates at a level are
//! built from banked programs of strictly lower cost, evaluated on every
//! context of a [`Semantics`], and banked unless some earlier program of the
//! same nonterminal produced the same signature.

use std::collections::{HashMap, HashSet};
use std::fmt::Debug;
use std::hash::Hash;
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::grammar::{NtId, ProdId, Program, Template, WeightedGrammar};

/// Compositional evaluation over a fixed set of contexts (usually one per
/// example input).
pub trait Semantics {
    type Value: Clone + Eq + Hash + Debug;

    fn contexts(&self) -> usize;

    /// Applies base production `prod` pointwise to argument signatures, one
    /// slice per right-hand-side nonterminal, each of length
    /// [`Semantics::contexts`]. Must be total: failures are values.
    fn apply(&self, prod: ProdId, args: &[&[Self::Value]]) -> Vec<Self::Value>;
}

/// Output values of a program on every context.
pub type Signature<V> = Arc<[V]>;

/// Evaluates a base-grammar program on every context.
pub fn signature<S: Semantics>(sem: &S, program: &Program) -> Signature<S::Value> {
    eval_program(sem, program).into()
}

fn eval_program<S: Semantics>(sem: &S, program: &Program) -> Vec<S::Value> {
    let kids: Vec<Vec<S::Value>> = program.children().iter().map(|c| eval_program(sem, c)).collect();
    let refs: Vec<&[S::Value]> = kids.iter().map(Vec::as_slice).collect();
    sem.apply(program.production(), &refs)
}

fn eval_template<S: Semantics>(sem: &S, t: &Template, holes: &[&[S::Value]]) -> Vec<S::Value> {
    match t {
        Template::Hole(i) => holes[*i].to_vec(),
        Template::Apply(p, ts) => {
            let owned: Vec<Option<Vec<S::Value>>> = ts
                .iter()
                .map(|t| match t {
                    Template::Hole(_) => None,
                    _ => Some(eval_template(sem, t, holes)),
                })
                .collect();
            let refs: Vec<&[S::Value]> = ts
                .iter()
                .zip(&owned)
                .map(|(t, o)| match t {
                    Template::Hole(i) => holes[*i],
                    _ => o.as_deref().expect("evaluated"),
                })
                .collect();
            sem.apply(*p, &refs)
        }
    }
}

#[derive(Clone, Debug)]
pub struct BankEntry<V> {
    pub nonterminal: NtId,
    pub cost: u32,
    /// Search-grammar program.
    pub program: Arc<Program>,
    pub signature: Signature<V>,
}

/// Banked programs indexed by `(cost, nonterminal)`.
#[derive(Clone, Debug)]
pub struct Bank<V> {
    entries: Vec<BankEntry<V>>,
    cells: HashMap<(u32, NtId), Vec<usize>>,
    /// Nonempty costs per nonterminal, ascending.
    costs: Vec<Vec<u32>>,
    max_cost: u32,
}

impl<V> Bank<V> {
    pub fn new(num_nonterminals: usize) -> Self {
        Bank {
            entries: Vec::new(),
            cells: HashMap::new(),
            costs: vec![Vec::new(); num_nonterminals],
            max_cost: 0,
        }
    }

    pub fn insert(&mut self, entry: BankEntry<V>) -> usize {
        let id = self.entries.len();
        let key = (entry.cost, entry.nonterminal);
        let cell = self.cells.entry(key).or_default();
        if cell.is_empty() {
            let cs = &mut self.costs[entry.nonterminal.index()];
            let at = cs.partition_point(|&c| c < entry.cost);
            cs.insert(at, entry.cost);
        }
        cell.push(id);
        self.max_cost = self.max_cost.max(entry.cost);
        self.entries.push(entry);
        id
    }

    pub fn entry(&self, id: usize) -> &BankEntry<V> {
        &self.entries[id]
    }

    pub fn entries(&self) -> &[BankEntry<V>] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entry ids stored at `(cost, nt)`, in insertion order.
    pub fn cell(&self, cost: u32, nt: NtId) -> &[usize] {
        self.cells.get(&(cost, nt)).map_or(&[], Vec::as_slice)
    }

    /// Number of programs banked at `cost` across all nonterminals.
    pub fn count_at(&self, cost: u32) -> usize {
        self.cells
            .iter()
            .filter(|((c, _), _)| *c == cost)
            .map(|(_, v)| v.len())
            .sum()
    }

    pub fn max_cost(&self) -> u32 {
        self.max_cost
    }
}

/// Calls `f(prod, children)` for every program of cost exactly `level`
/// assembled from banked children, in grammar order, then lexicographic cost
/// tuples, then bank insertion order. `f` returns `false` to stop early;
/// the return value reports whether the walk ran to completion.
pub fn for_each_new_program<V>(
    wg: &WeightedGrammar,
    level: u32,
    bank: &Bank<V>,
    mut f: impl FnMut(ProdId, &[usize]) -> bool,
) -> bool {
    let g = wg.search_grammar();
    for prod in g.productions() {
        let w = wg.discrete_weight(prod.id);
        if w > level {
            continue;
        }
        let kids: Vec<NtId> = prod.child_nonterminals().collect();
        if kids.is_empty() {
            if w == level && !f(prod.id, &[]) {
                return false;
            }
            continue;
        }
        let rem = level - w;
        if rem < kids.len() as u32 {
            continue;
        }
        let mut tuple = Vec::with_capacity(kids.len());
        if !cost_tuples(bank, &kids, rem, &mut tuple, &mut |costs| {
            let lists: Vec<&[usize]> = costs
                .iter()
                .zip(&kids)
                .map(|(&c, &n)| bank.cell(c, n))
                .collect();
            product(&lists, &mut |ids| f(prod.id, ids))
        }) {
            return false;
        }
    }
    true
}

fn cost_tuples<V>(
    bank: &Bank<V>,
    kids: &[NtId],
    rem: u32,
    tuple: &mut Vec<u32>,
    f: &mut dyn FnMut(&[u32]) -> bool,
) -> bool {
    let i = tuple.len();
    if i == kids.len() {
        return rem != 0 || f(tuple);
    }
    let left = (kids.len() - i - 1) as u32;
    for &c in &bank.costs[kids[i].index()] {
        if c + left > rem {
            break;
        }
        if i + 1 == kids.len() && c != rem {
            continue;
        }
        tuple.push(c);
        let go = cost_tuples(bank, kids, rem - c, tuple, f);
        tuple.pop();
        if !go {
            return false;
        }
    }
    true
}

fn product(lists: &[&[usize]], f: &mut dyn FnMut(&[usize]) -> bool) -> bool {
    if lists.iter().any(|l| l.is_empty()) {
        return true;
    }
    let mut idx = vec![0usize; lists.len()];
    let mut ids: Vec<usize> = lists.iter().map(|l| l[0]).collect();
    loop {
        if !f(&ids) {
            return false;
        }
        // odometer, last position fastest
        let mut j = lists.len();
        loop {
            if j == 0 {
                return true;
            }
            j -= 1;
            idx[j] += 1;
            if idx[j] < lists[j].len() {
                ids[j] = lists[j][idx[j]];
                break;
            }
            idx[j] = 0;
            ids[j] = lists[j][0];
        }
    }
}

/// The programs [`for_each_new_program`] would produce, as search-grammar
/// trees.
pub fn new_programs<V>(wg: &WeightedGrammar, level: u32, bank: &Bank<V>) -> Vec<Arc<Program>> {
    let mut out = Vec::new();
    for_each_new_program(wg, level, bank, |prod, ids| {
        let kids = ids.iter().map(|&i| bank.entry(i).program.clone()).collect();
        out.push(Arc::new(Program::new(prod, kids)));
        true
    });
    out
}

/// Search limits. Unset fields are unlimited.
#[derive(Clone, Debug, Default)]
pub struct Budget {
    pub max_level: Option<u32>,
    pub deadline: Option<Instant>,
    pub max_enumerated: Option<u64>,
}

impl Budget {
    pub fn levels(max_level: u32) -> Self {
        Budget {
            max_level: Some(max_level),
            ..Budget::default()
        }
    }

    pub fn timeout(d: Duration) -> Self {
        Budget {
            deadline: Some(Instant::now() + d),
            ..Budget::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Halt {
    /// The visitor asked to stop.
    Stopped,
    /// No program of any higher cost can exist.
    Exhausted,
    Deadline,
    MaxLevel,
    MaxEnumerated,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchStats {
    pub enumerated: u64,
    pub banked: u64,
    pub levels_completed: u32,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl SearchStats {
    pub fn absorb(&mut self, other: &SearchStats) {
        self.enumerated += other.enumerated;
        self.banked += other.banked;
        self.levels_completed = self.levels_completed.max(other.levels_completed);
        self.elapsed += other.elapsed;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

/// A freshly generated program, shown to the visitor before banking.
pub struct Candidate<'a, V> {
    pub nonterminal: NtId,
    pub production: ProdId,
    pub cost: u32,
    pub values: &'a [V],
    /// Whether no banked program of this nonterminal has the same signature.
    pub fresh: bool,
    children: &'a [usize],
    bank: &'a Bank<V>,
}

impl<V> Candidate<'_, V> {
    /// The candidate as a search-grammar program.
    pub fn program(&self) -> Arc<Program> {
        let kids = self
            .children
            .iter()
            .map(|&i| self.bank.entry(i).program.clone())
            .collect();
        Arc::new(Program::new(self.production, kids))
    }
}

/// Resumable level-by-level enumeration state.
pub struct Enumerator<'a, S: Semantics> {
    wg: &'a WeightedGrammar,
    sem: &'a S,
    bank: Bank<S::Value>,
    cache: HashSet<(NtId, Signature<S::Value>)>,
    level: u32,
    stats: SearchStats,
    done: Option<Halt>,
    check_every: u64,
}

impl<'a, S: Semantics> Enumerator<'a, S> {
    pub fn new(wg: &'a WeightedGrammar, sem: &'a S) -> Self {
        Enumerator {
            wg,
            sem,
            bank: Bank::new(wg.search_grammar().num_nonterminals()),
            cache: HashSet::new(),
            level: 1,
            stats: SearchStats::default(),
            done: None,
            check_every: 256,
        }
    }

    pub fn grammar(&self) -> &'a WeightedGrammar {
        self.wg
    }

    pub fn bank(&self) -> &Bank<S::Value> {
        &self.bank
    }

    pub fn stats(&self) -> &SearchStats {
        &self.stats
    }

    /// The next level to be enumerated.
    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn halted(&self) -> Option<Halt> {
        self.done
    }

    fn exhausted(&self) -> bool {
        let g = self.wg.search_grammar();
        let bound = g
            .productions()
            .iter()
            .map(|p| self.wg.discrete_weight(p.id) + p.arity() as u32 * self.bank.max_cost())
            .max()
            .unwrap_or(0);
        self.level > bound
    }

    /// Enumerates the current level completely unless the visitor stops or
    /// the budget runs out. Returns `None` when the level finished and the
    /// search can go on.
    pub fn step_level<F>(&mut self, budget: &Budget, visit: &mut F) -> Option<Halt>
    where
        F: FnMut(&Candidate<'_, S::Value>) -> Control,
    {
        if let Some(h) = self.done {
            return Some(h);
        }
        if budget.max_level.is_some_and(|m| self.level > m) {
            return Some(Halt::MaxLevel);
        }
        if self.exhausted() {
            self.done = Some(Halt::Exhausted);
            return self.done;
        }
        let started = Instant::now();
        let level = self.level;
        let Enumerator {
            wg,
            sem,
            bank,
            cache,
            stats,
            check_every,
            ..
        } = self;
        let (wg, sem) = (*wg, *sem);
        let mut pending: Vec<BankEntry<S::Value>> = Vec::new();
        let mut halt = None;
        for_each_new_program(wg, level, bank, |prod, ids| {
            stats.enumerated += 1;
            if stats.enumerated % *check_every == 0
                && budget.deadline.is_some_and(|d| Instant::now() >= d)
            {
                halt = Some(Halt::Deadline);
                return false;
            }
            if budget.max_enumerated.is_some_and(|m| stats.enumerated > m) {
                halt = Some(Halt::MaxEnumerated);
                return false;
            }
            let holes: Vec<&[S::Value]> = ids.iter().map(|&i| &*bank.entry(i).signature).collect();
            let values = eval_template(sem, wg.template(prod), &holes);
            let nt = wg.search_grammar().production(prod).lhs;
            let sig: Signature<S::Value> = values.into();
            let key = (nt, sig);
            let fresh = !cache.contains(&key);
            let cand = Candidate {
                nonterminal: nt,
                production: prod,
                cost: level,
                values: &key.1,
                fresh,
                children: ids,
                bank,
            };
            if visit(&cand) == Control::Stop {
                halt = Some(Halt::Stopped);
                return false;
            }
            if fresh {
                let program = cand.program();
                let sig = key.1.clone();
                cache.insert(key);
                pending.push(BankEntry {
                    nonterminal: nt,
                    cost: level,
                    program,
                    signature: sig,
                });
            }
            true
        });
        if halt.is_none() {
            for e in pending {
                self.bank.insert(e);
                self.stats.banked += 1;
            }
            self.stats.levels_completed = level;
            self.level += 1;
        }
        self.stats.elapsed += started.elapsed();
        if halt.is_some() {
            self.done = halt;
        }
        halt
    }

    /// Runs levels until the visitor stops or the budget is exhausted.
    pub fn run<F>(&mut self, budget: &Budget, mut visit: F) -> Halt
    where
        F: FnMut(&Candidate<'_, S::Value>) -> Control,
    {
        loop {
            if let Some(h) = self.step_level(budget, &mut visit) {
                return h;
            }
            if budget.deadline.is_some_and(|d| Instant::now() >= d) {
                return Halt::Deadline;
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct SearchOutcome {
    /// Base-grammar program satisfying every example.
    pub solution: Option<Arc<Program>>,
    pub cost: Option<u32>,
    pub stats: SearchStats,
    pub halt: Halt,
}

/// Searches the weighted grammar for a program, deriving from the search
/// start symbol, whose signature equals `expected`.
pub fn bottom_up_search<S: Semantics>(
    wg: &WeightedGrammar,
    sem: &S,
    expected: &[S::Value],
    budget: &Budget,
) -> SearchOutcome {
    assert_eq!(expected.len(), sem.contexts(), "one expected value per context");
    let goal = wg.search_grammar().start();
    let mut found = None;
    let mut en = Enumerator::new(wg, sem);
    let halt = en.run(budget, |c| {
        if c.nonterminal == goal && c.values == expected {
            found = Some((c.program(), c.cost));
            Control::Stop
        } else {
            Control::Continue
        }
    });
    SearchOutcome {
        solution: found.as_ref().map(|(p, _)| wg.expand(p)),
        cost: found.map(|(_, c)| c),
        stats: en.stats().clone(),
        halt,
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::grammar::{Grammar, GrammarBuilder};

    pub fn tg() -> Arc<Grammar> {
        let mut b = GrammarBuilder::new("S");
        b.rule("$S", &["a"], None)
            .op("$S", "f(", &["f(", "$S", ")"])
            .op("$S", "g(", &["g(", "$S", ",", "$S", ")"]);
        Arc::new(b.build().unwrap())
    }

    /// Evaluates a TG program to its own rendering.
    pub struct Render;

    impl Semantics for Render {
        type Value = String;
        fn contexts(&self) -> usize {
            1
        }
        fn apply(&self, prod: ProdId, args: &[&[String]]) -> Vec<String> {
            vec![match prod.0 {
                0 => "a".to_string(),
                1 => format!("f({})", args[0][0]),
                _ => format!("g({},{})", args[0][0], args[1][0]),
            }]
        }
    }

    fn renders(ps: &[Arc<Program>], g: &Grammar) -> Vec<String> {
        let mut v: Vec<String> = ps.iter().map(|p| p.render(g)).collect();
        v.sort();
        v
    }

    fn seeded(wg: &WeightedGrammar, through: u32) -> Bank<String> {
        let mut en = Enumerator::new(wg, &Render);
        en.run(&Budget::levels(through), |_| Control::Continue);
        en.bank().clone()
    }

    #[test]
    fn level_one_is_the_leaf() {
        let wg = WeightedGrammar::uniform(tg());
        let bank: Bank<String> = Bank::new(1);
        assert_eq!(renders(&new_programs(&wg, 1, &bank), &tg()), ["a"]);
    }

    #[test]
    fn level_three_uniform() {
        let wg = WeightedGrammar::uniform(tg());
        let bank = seeded(&wg, 2);
        assert_eq!(renders(&new_programs(&wg, 3, &bank), &tg()), ["f(f(a))", "g(a,a)"]);
    }

    #[test]
    fn level_five_weighted() {
        let wg = WeightedGrammar::new(tg(), vec![1.0, 1.0, 3.0], 1.0).unwrap();
        let bank = seeded(&wg, 4);
        let got = renders(&new_programs(&wg, 5, &bank), &tg());
        assert!(got.contains(&"g(a,a)".to_string()));
        assert!(got.contains(&"f(f(f(f(a))))".to_string()));
    }

    #[test]
    fn finds_identity_and_nested_target() {
        let wg = WeightedGrammar::uniform(tg());
        let out = bottom_up_search(&wg, &Render, &["a".to_string()], &Budget::levels(3));
        assert_eq!(out.cost, Some(1));
        let out = bottom_up_search(&wg, &Render, &["g(a,f(a))".to_string()], &Budget::levels(6));
        assert_eq!(out.cost, Some(4));
        assert_eq!(out.solution.unwrap().render(&tg()), "g(a,f(a))");
    }

    #[test]
    fn weights_move_the_level_not_the_answer() {
        let wg = WeightedGrammar::new(tg(), vec![1.0, 5.0, 1.0], 1.0).unwrap();
        let out = bottom_up_search(&wg, &Render, &["g(a,f(a))".to_string()], &Budget::levels(12));
        assert_eq!(out.cost, Some(8));
        assert_eq!(out.solution.unwrap().render(&tg()), "g(a,f(a))");
    }

    #[test]
    fn finite_grammar_exhausts() {
        let mut b = GrammarBuilder::new("S");
        b.rule("$S", &["x"], None).op("$S", "h(", &["h(", "$T", ")"]).rule("$T", &["y"], None);
        let g = Arc::new(b.build().unwrap());
        struct Count;
        impl Semantics for Count {
            type Value = u8;
            fn contexts(&self) -> usize {
                1
            }
            fn apply(&self, prod: ProdId, _: &[&[u8]]) -> Vec<u8> {
                vec![prod.0 as u8]
            }
        }
        let wg = WeightedGrammar::uniform(g);
        let out = bottom_up_search(&wg, &Count, &[9], &Budget::default());
        assert_eq!(out.halt, Halt::Exhausted);
        assert_eq!(out.stats.banked, 3);
    }

    #[test]
    fn equivalent_programs_are_pruned() {
        // every TG program evaluates to its size parity
        struct Parity;
        impl Semantics for Parity {
            type Value = bool;
            fn contexts(&self) -> usize {
                1
            }
            fn apply(&self, prod: ProdId, args: &[&[bool]]) -> Vec<bool> {
                vec![args.iter().fold(prod.0 < 3, |acc, a| acc ^ a[0])]
            }
        }
        let wg = WeightedGrammar::uniform(tg());
        let mut en = Enumerator::new(&wg, &Parity);
        en.run(&Budget::levels(5), |_| Control::Continue);
        assert_eq!(en.bank().len(), 2);
    }

    #[test]
    fn deadline_in_the_past_stops_quickly() {
        let wg = WeightedGrammar::uniform(tg());
        let budget = Budget {
            deadline: Some(Instant::now()),
            ..Budget::default()
        };
        let out = bottom_up_search(&wg, &Render, &["never".to_string()], &budget);
        assert_eq!(out.halt, Halt::Deadline);
        assert!(out.solution.is_none());
    }
}
