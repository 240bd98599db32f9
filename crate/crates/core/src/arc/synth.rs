//! Divide-and-conquer synthesis: transforms are searched first and grouped
//! into a cover of the objects that change, then one filter is searched per
//! chosen transform.

use std::collections::BTreeSet;
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::grammar::{GrammarError, NtId, ProbabilisticGrammar, ProdId, Program, WeightedGrammar};
use crate::search::{Budget, Control, Enumerator, Halt, SearchStats, Semantics};

use super::dsl::{eval_node, others, ArcDsl, ArcValue, Ctx};
use super::grid::{ArcTask, Grid};
use super::scene::{Abstraction, Px, Scene};

/// Evaluation of filters and transforms over every (pair, object, other)
/// binding of a task's training inputs.
pub struct ArcSemantics<'a> {
    dsl: &'a ArcDsl,
    scenes: Vec<Scene>,
    outputs: Vec<Grid>,
    contexts: Vec<(usize, usize, Option<usize>)>,
    slots: Vec<Slot>,
}

/// One input object and the contiguous range of its contexts.
#[derive(Clone, Debug)]
pub struct Slot {
    pub pair: usize,
    pub object: usize,
    pub contexts: std::ops::Range<usize>,
    /// Whether the object must change to reach the output.
    pub changed: bool,
}

impl<'a> ArcSemantics<'a> {
    pub fn new(dsl: &'a ArcDsl, task: &ArcTask, abs: &Abstraction) -> Self {
        let mut sem = ArcSemantics {
            dsl,
            scenes: Vec::new(),
            outputs: Vec::new(),
            contexts: Vec::new(),
            slots: Vec::new(),
        };
        for (pair, (input, output)) in task.train.iter().enumerate() {
            let scene = Scene::abstract_grid(input, abs);
            let n = scene.objects.len();
            sem.scenes.push(scene);
            sem.outputs.push(output.clone());
            for me in 0..n {
                let start = sem.contexts.len();
                sem.contexts.extend(others(n, me).map(|o| (pair, me, o)));
                let changed = !sem.effect_correct(pair, me, &sem.scenes[pair].objects[me].cells);
                sem.slots.push(Slot {
                    pair,
                    object: me,
                    contexts: start..sem.contexts.len(),
                    changed,
                });
            }
        }
        sem
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn scenes(&self) -> &[Scene] {
        &self.scenes
    }

    pub fn context(&self, i: usize) -> Ctx<'_> {
        let (pair, me, other) = self.contexts[i];
        Ctx {
            scene: &self.scenes[pair],
            me,
            other,
        }
    }

    /// Every painted cell matches the output and every vacated cell is
    /// background there.
    pub fn effect_correct(&self, pair: usize, me: usize, cells: &[Px]) -> bool {
        let out = &self.outputs[pair];
        let scene = &self.scenes[pair];
        if out.width() as i32 != scene.width || out.height() as i32 != scene.height {
            return false;
        }
        if cells.iter().any(|p| out.get(p.row, p.col) != Some(p.color)) {
            return false;
        }
        scene.objects[me].cells.iter().all(|o| {
            cells.iter().any(|p| p.row == o.row && p.col == o.col) || out.get(o.row, o.col) == Some(scene.background)
        })
    }

    /// Per-context correctness of a transform signature.
    pub fn correctness(&self, values: &[ArcValue]) -> Vec<bool> {
        values
            .iter()
            .enumerate()
            .map(|(i, v)| match v {
                ArcValue::Effect(cells) => {
                    let (pair, me, _) = self.contexts[i];
                    self.effect_correct(pair, me, cells)
                }
                _ => false,
            })
            .collect()
    }
}

impl Semantics for ArcSemantics<'_> {
    type Value = ArcValue;

    fn contexts(&self) -> usize {
        self.contexts.len()
    }

    fn apply(&self, prod: ProdId, args: &[&[ArcValue]]) -> Vec<ArcValue> {
        let node = self.dsl.node(prod);
        let mut buf: Vec<&ArcValue> = Vec::with_capacity(args.len());
        (0..self.contexts.len())
            .map(|i| {
                buf.clear();
                buf.extend(args.iter().map(|a| &a[i]));
                eval_node(node, self.context(i), &buf)
            })
            .collect()
    }
}

/// A transform and the objects it handles correctly.
#[derive(Clone, Debug)]
pub struct CoverEntry {
    /// Base-grammar program.
    pub program: Arc<Program>,
    pub cost: u32,
    pub values: Arc<[ArcValue]>,
    pub correct: Arc<[bool]>,
    /// Slots with at least one correct binding.
    pub covers: BTreeSet<usize>,
}

/// Transforms found so far, in discovery order.
#[derive(Clone, Debug, Default)]
pub struct TransformCover {
    pub entries: Vec<CoverEntry>,
}

impl TransformCover {
    /// Whether the union of covers contains every changed object.
    pub fn complete(&self, sem: &ArcSemantics<'_>) -> bool {
        let covered: BTreeSet<usize> = self.entries.iter().flat_map(|e| e.covers.iter().copied()).collect();
        changed_slots(sem).all(|s| covered.contains(&s))
    }

    /// Greedy disjoint assignment of changed objects to transforms: largest
    /// remaining cover first, earliest on ties. Returns (entry, assigned
    /// slots) pairs, or `None` when some changed object is uncovered.
    pub fn greedy(&self, sem: &ArcSemantics<'_>) -> Option<Vec<(usize, BTreeSet<usize>)>> {
        let mut open: BTreeSet<usize> = changed_slots(sem).collect();
        let mut picks = Vec::new();
        while !open.is_empty() {
            let (best, gain) = self
                .entries
                .iter()
                .enumerate()
                .map(|(i, e)| (i, e.covers.intersection(&open).count()))
                .fold((0, 0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if gain == 0 {
                return None;
            }
            let got: BTreeSet<usize> = self.entries[best].covers.intersection(&open).copied().collect();
            for s in &got {
                open.remove(s);
            }
            picks.push((best, got));
        }
        Some(picks)
    }
}

fn changed_slots<'s>(sem: &'s ArcSemantics<'_>) -> impl Iterator<Item = usize> + 's {
    sem.slots.iter().enumerate().filter(|(_, s)| s.changed).map(|(i, _)| i)
}

/// Resumable bottom-up enumeration of transforms.
pub struct TransformSearch<'a, 's> {
    en: Enumerator<'a, ArcSemantics<'s>>,
    sem: &'a ArcSemantics<'s>,
    root: NtId,
    pub cover: TransformCover,
}

impl<'a, 's> TransformSearch<'a, 's> {
    pub fn new(wg: &'a WeightedGrammar, sem: &'a ArcSemantics<'s>) -> Self {
        TransformSearch {
            en: Enumerator::new(wg, sem),
            sem,
            root: wg.search_grammar().start(),
            cover: TransformCover::default(),
        }
    }

    pub fn stats(&self) -> &SearchStats {
        self.en.stats()
    }

    pub fn level(&self) -> u32 {
        self.en.level()
    }

    /// Enumerates one level, adding every transform that handles a changed
    /// object (or, in tasks where nothing changes, every object).
    pub fn step(&mut self, budget: &Budget) -> Option<Halt> {
        let TransformSearch { en, sem, root, cover } = self;
        let wg = en.grammar();
        let any_changed = sem.slots.iter().any(|s| s.changed);
        en.step_level(budget, &mut |c| {
            if c.nonterminal != *root || !c.fresh {
                return Control::Continue;
            }
            let correct = sem.correctness(c.values);
            let covers: BTreeSet<usize> = sem
                .slots
                .iter()
                .enumerate()
                .filter(|(_, s)| s.contexts.clone().any(|i| correct[i]))
                .map(|(i, _)| i)
                .collect();
            let useful = if any_changed {
                covers.iter().any(|&s| sem.slots[s].changed)
            } else {
                covers.len() == sem.slots.len()
            };
            if useful {
                cover.entries.push(CoverEntry {
                    program: wg.expand(&c.program()),
                    cost: c.cost,
                    values: c.values.into(),
                    correct: correct.into(),
                    covers,
                });
            }
            Control::Continue
        })
    }
}

/// Enumerates transforms level by level until the covers of the transforms
/// found so far include every changed object.
pub fn transform_search(wg: &WeightedGrammar, sem: &ArcSemantics<'_>, budget: &Budget) -> (TransformCover, SearchStats, Option<Halt>) {
    let mut ts = TransformSearch::new(wg, sem);
    loop {
        let halt = ts.step(budget);
        if halt.is_some() || ts.cover.complete(sem) {
            let stats = ts.stats().clone();
            return (ts.cover, stats, halt);
        }
    }
}

/// What a filter must select for one chosen transform.
#[derive(Clone, Debug)]
pub struct FilterGoal {
    pub effects: Arc<[ArcValue]>,
    pub correct: Arc<[bool]>,
    /// Per slot: must be selected with a unique correct effect.
    pub required: Vec<bool>,
    /// Per slot: must not be selected at all.
    pub forbidden: Vec<bool>,
}

impl FilterGoal {
    /// Goals for a disjoint assignment of slots to cover entries.
    pub fn for_assignment(cover: &TransformCover, picks: &[(usize, BTreeSet<usize>)], slots: usize) -> Vec<FilterGoal> {
        picks
            .iter()
            .map(|(e, mine)| {
                let entry = &cover.entries[*e];
                let mut required = vec![false; slots];
                let mut forbidden = vec![false; slots];
                for (_, theirs) in picks {
                    for &s in theirs {
                        forbidden[s] = true;
                    }
                }
                for &s in mine {
                    required[s] = true;
                    forbidden[s] = false;
                }
                FilterGoal {
                    effects: entry.values.clone(),
                    correct: entry.correct.clone(),
                    required,
                    forbidden,
                }
            })
            .collect()
    }

    pub fn accepts(&self, sem: &ArcSemantics<'_>, filter: &[ArcValue]) -> bool {
        sem.slots.iter().enumerate().all(|(s, slot)| {
            let mut sat = slot.contexts.clone().filter(|&i| filter[i] == ArcValue::Bool(true));
            if self.forbidden[s] {
                return sat.next().is_none();
            }
            let Some(first) = sat.next() else {
                return !self.required[s];
            };
            self.correct[first]
                && sat.all(|i| self.correct[i] && self.effects[i] == self.effects[first])
        })
    }
}

/// One filter enumeration shared by every goal of a synthesis run. Goals
/// are checked against the bank first, then against new levels.
pub struct FilterSearch<'a, 's> {
    en: Enumerator<'a, ArcSemantics<'s>>,
    sem: &'a ArcSemantics<'s>,
    root: NtId,
}

impl<'a, 's> FilterSearch<'a, 's> {
    pub fn new(wg: &'a WeightedGrammar, sem: &'a ArcSemantics<'s>) -> Self {
        FilterSearch {
            en: Enumerator::new(wg, sem),
            sem,
            root: wg.search_grammar().start(),
        }
    }

    pub fn stats(&self) -> &SearchStats {
        self.en.stats()
    }

    pub fn halted(&self) -> Option<Halt> {
        self.en.halted()
    }

    /// First accepted filter per goal (base-grammar programs). New levels
    /// are only started before `until`; a level in progress runs against
    /// `budget`.
    pub fn find(&mut self, goals: &[FilterGoal], budget: &Budget, until: Instant) -> Vec<Option<Arc<Program>>> {
        let mut found: Vec<Option<Arc<Program>>> = vec![None; goals.len()];
        let wg = self.en.grammar();
        for e in self.en.bank().entries() {
            if e.nonterminal != self.root {
                continue;
            }
            for (g, slot) in goals.iter().zip(found.iter_mut()) {
                if slot.is_none() && g.accepts(self.sem, &e.signature) {
                    *slot = Some(wg.expand(&e.program));
                }
            }
            if found.iter().all(Option::is_some) {
                return found;
            }
        }
        let FilterSearch { en, sem, root } = self;
        while found.iter().any(Option::is_none) && Instant::now() < until {
            let halt = en.step_level(budget, &mut |c| {
                if c.nonterminal != *root || !c.fresh {
                    return Control::Continue;
                }
                for (g, slot) in goals.iter().zip(found.iter_mut()) {
                    if slot.is_none() && g.accepts(sem, c.values) {
                        *slot = Some(wg.expand(&c.program()));
                    }
                }
                Control::Continue
            });
            if halt.is_some() {
                break;
            }
        }
        found
    }
}

/// The two search grammars.
#[derive(Clone, Debug)]
pub struct ArcGrammars {
    pub transform: WeightedGrammar,
    pub filter: WeightedGrammar,
}

impl ArcGrammars {
    pub fn uniform(dsl: &ArcDsl) -> Result<Self, GrammarError> {
        Ok(ArcGrammars {
            transform: WeightedGrammar::uniform_rooted(dsl.grammar.clone(), &[dsl.transform])?,
            filter: WeightedGrammar::uniform_rooted(dsl.grammar.clone(), &[dsl.filter])?,
        })
    }

    /// Splits a PCFG over the whole rule grammar into the two search
    /// grammars.
    pub fn from_pcfg(dsl: &ArcDsl, pg: &ProbabilisticGrammar, scale: f64) -> Result<Self, GrammarError> {
        Ok(ArcGrammars {
            transform: WeightedGrammar::from_pcfg(pg, scale, &[dsl.transform])?,
            filter: WeightedGrammar::from_pcfg(pg, scale, &[dsl.filter])?,
        })
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ArcStats {
    pub transform: SearchStats,
    pub filter: SearchStats,
    /// Candidates enumerated (both searches) when the returned program was
    /// found.
    pub enumerated_at_solution: Option<u64>,
    pub covers_tried: usize,
}

impl ArcStats {
    pub fn enumerated(&self) -> u64 {
        self.transform.enumerated + self.filter.enumerated
    }
}

#[derive(Clone, Debug)]
pub struct ArcOutcome {
    pub program: Option<Arc<Program>>,
    pub text: Option<String>,
    pub rules: usize,
    pub stats: ArcStats,
    pub halt: Option<Halt>,
    pub elapsed: Duration,
}

/// Synthesizes a rule program for the task's training pairs. After a first
/// solution with several rules the transform search goes on (to twice the
/// level of that solution) looking for covers with fewer transforms.
pub fn synth_arc(
    dsl: &ArcDsl,
    task: &ArcTask,
    abs: &Abstraction,
    grammars: &ArcGrammars,
    budget: &Budget,
) -> ArcOutcome {
    let started = Instant::now();
    let sem = ArcSemantics::new(dsl, task, abs);
    let mut stats = ArcStats::default();
    let verify = |p: &Program| task.train.iter().all(|(i, o)| dsl.eval(p, i, abs).as_ref() == Some(o));
    let finish = |program: Option<Arc<Program>>, rules, stats, halt| ArcOutcome {
        text: program.as_ref().map(|p| dsl.render(p)),
        program,
        rules,
        stats,
        halt,
        elapsed: started.elapsed(),
    };

    if sem.slots.iter().all(|s| !s.changed) {
        let p = Arc::new(dsl.parse("(do)").expect("empty program parses"));
        if verify(&p) {
            stats.enumerated_at_solution = Some(0);
            return finish(Some(p), 0, stats, None);
        }
    }

    let mut ts = TransformSearch::new(&grammars.transform, &sem);
    let mut fs = FilterSearch::new(&grammars.filter, &sem);
    let mut tried: BTreeSet<Vec<(usize, Vec<usize>)>> = BTreeSet::new();
    let mut best: Option<(Arc<Program>, usize)> = None;
    let mut stop_after: Option<u32> = None;
    let mut halt = None;
    loop {
        let level = ts.level();
        if stop_after.is_some_and(|l| level > l) {
            break;
        }
        if let Some(h) = ts.step(budget) {
            halt = Some(h);
            if h != Halt::Exhausted {
                break;
            }
        }
        if let Some(picks) = ts.cover.greedy(&sem) {
            let key: Vec<(usize, Vec<usize>)> = picks.iter().map(|(e, s)| (*e, s.iter().copied().collect())).collect();
            let better = best.as_ref().is_none_or(|(_, k)| picks.len() < *k);
            if better && tried.insert(key) {
                stats.covers_tried += 1;
                let goals = FilterGoal::for_assignment(&ts.cover, &picks, sem.slots.len());
                let now = Instant::now();
                let until = match budget.deadline {
                    Some(d) => now + d.saturating_duration_since(now) / 2,
                    None => now + Duration::from_secs(3600),
                };
                let filters = fs.find(&goals, budget, until);
                if filters.iter().all(Option::is_some) {
                    let rules: Vec<String> = picks
                        .iter()
                        .zip(&filters)
                        .map(|((e, _), f)| {
                            format!(
                                "(rule {} {})",
                                dsl.render(f.as_ref().unwrap()),
                                dsl.render(&ts.cover.entries[*e].program)
                            )
                        })
                        .collect();
                    let text = format!("(do {})", rules.join(" "));
                    if let Ok(p) = dsl.parse(&text) {
                        let p = Arc::new(p);
                        if verify(&p) {
                            stats.enumerated_at_solution = Some(ts.stats().enumerated + fs.stats().enumerated);
                            log::debug!("solution with {} rules at transform level {level}: {text}", picks.len());
                            let k = picks.len();
                            best = Some((p, k));
                            if k <= 1 {
                                break;
                            }
                            stop_after.get_or_insert(2 * level);
                        }
                    }
                }
            }
        }
        if halt.is_some() || fs.halted().is_some_and(|h| h != Halt::Exhausted) {
            break;
        }
    }
    stats.transform = ts.stats().clone();
    stats.filter = fs.stats().clone();
    match best {
        Some((p, k)) => finish(Some(p), k, stats, None),
        None => finish(None, 0, stats, halt.or(fs.halted()).or(Some(Halt::Exhausted))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn task(text: &str) -> ArcTask {
        ArcTask::parse("t", text).unwrap()
    }

    fn solve(t: &ArcTask) -> ArcOutcome {
        let dsl = ArcDsl::for_task(t, &Abstraction::default());
        let g = ArcGrammars::uniform(&dsl).unwrap();
        synth_arc(&dsl, t, &Abstraction::default(), &g, &Budget::timeout(Duration::from_secs(30)))
    }

    #[test]
    fn identity_task_gives_empty_program() {
        let t = task("TRAIN\nINPUT\nR O\nO B\nOUTPUT\nR O\nO B\n");
        let out = solve(&t);
        assert_eq!(out.text.as_deref(), Some("(do)"));
    }

    #[test]
    fn identity_cover_has_noop_first() {
        let t = task("TRAIN\nINPUT\nR O\nO B\nOUTPUT\nR O\nO B\n");
        let dsl = ArcDsl::for_task(&t, &Abstraction::default());
        let sem = ArcSemantics::new(&dsl, &t, &Abstraction::default());
        let g = ArcGrammars::uniform(&dsl).unwrap();
        let (cover, _, _) = transform_search(&g.transform, &sem, &Budget::levels(3));
        assert_eq!(dsl.render(&cover.entries[0].program), "NoOp");
        assert_eq!(cover.entries[0].cost, 1);
    }

    #[test]
    fn recolor_all_to_yellow() {
        let t = task("TRAIN\nINPUT\nR O B\nO O O\nX O O\nOUTPUT\nY O Y\nO O O\nY O O\nINPUT\nC C\nO O\nOUTPUT\nY Y\nO O\n");
        let dsl = ArcDsl::for_task(&t, &Abstraction::default());
        let sem = ArcSemantics::new(&dsl, &t, &Abstraction::default());
        let g = ArcGrammars::uniform(&dsl).unwrap();
        let (cover, _, _) = transform_search(&g.transform, &sem, &Budget::levels(5));
        let picks = cover.greedy(&sem).unwrap();
        assert_eq!(picks.len(), 1);
        assert_eq!(dsl.render(&cover.entries[picks[0].0].program), "(update_color YELLOW)");
        let out = solve(&t);
        assert_eq!(out.rules, 1);
        assert!(out.text.unwrap().contains("update_color YELLOW"));
    }

    #[test]
    fn two_colors_two_rules() {
        let t = task(
            "TRAIN\nINPUT\nR O B\nO O O\nB O R\nOUTPUT\nG O Y\nO O O\nY O G\n\
             INPUT\nB O R\nOUTPUT\nY O G\n",
        );
        let out = solve(&t);
        assert_eq!(out.rules, 2, "{:?}", out.text);
        let dsl = ArcDsl::for_task(&t, &Abstraction::default());
        let p = out.program.unwrap();
        let g: Grid = "R B\nO R".parse().unwrap();
        assert_eq!(dsl.eval(&p, &g, &Abstraction::default()).unwrap().to_string(), "G Y\nO G");
    }

    #[test]
    fn goal_acceptance_rules() {
        let t = task("TRAIN\nINPUT\nR O B\nOUTPUT\nY O B\n");
        let dsl = ArcDsl::for_task(&t, &Abstraction::default());
        let sem = ArcSemantics::new(&dsl, &t, &Abstraction::default());
        assert_eq!(sem.slots().iter().filter(|s| s.changed).count(), 1);
        let g = ArcGrammars::uniform(&dsl).unwrap();
        let (cover, _, _) = transform_search(&g.transform, &sem, &Budget::levels(3));
        let picks = cover.greedy(&sem).unwrap();
        let goals = FilterGoal::for_assignment(&cover, &picks, sem.slots().len());
        let eval = |text: &str| {
            let p = dsl.grammar.parse_from(dsl.filter, text).unwrap();
            crate::search::signature(&sem, &p).to_vec()
        };
        assert!(goals[0].accepts(&sem, &eval("(color_equals (color_of self) RED)")));
        assert!(!goals[0].accepts(&sem, &eval("(color_equals (color_of self) BLUE)")));
        // selecting the blue pixel too would recolor it wrongly
        assert!(!goals[0].accepts(&sem, &eval("(is_neighbor self other)")));
    }
}
