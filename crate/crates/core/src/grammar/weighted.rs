//! Weighted and probabilistic grammars.
//!
//! A [`WeightedGrammar`] carries two grammars: the *base* grammar that
//! programs, parsers and evaluators speak, and a *search* grammar that the
//! enumerator walks. They coincide unless weights were derived from a PCFG,
//! in which case zero-probability rules are dropped and certain rules are
//! inlined into their parents. Every search production records a
//! [`Template`] that maps it back onto base productions.

use std::sync::Arc;

use super::{Grammar, GrammarError, NtId, ProdId, Program, Symbol};

/// Default multiplier applied to real weights before rounding up.
pub const DEFAULT_SCALE: f64 = 100.0;

/// How a search production expands into base productions.
#[derive(Clone, Debug, PartialEq)]
pub enum Template {
    /// Apply a base production to the expansions of its children.
    Apply(ProdId, Vec<Template>),
    /// The `i`-th nonterminal argument of the search production.
    Hole(usize),
}

impl Template {
    pub fn identity(prod: ProdId, arity: usize) -> Template {
        Template::Apply(prod, (0..arity).map(Template::Hole).collect())
    }

    /// Base production at the root of this template.
    pub fn head(&self) -> Option<ProdId> {
        match self {
            Template::Apply(p, _) => Some(*p),
            Template::Hole(_) => None,
        }
    }

    pub fn instantiate(&self, args: &[Arc<Program>]) -> Arc<Program> {
        match self {
            Template::Hole(i) => args[*i].clone(),
            Template::Apply(p, kids) => Arc::new(Program::new(
                *p,
                kids.iter().map(|k| k.instantiate(args)).collect(),
            )),
        }
    }
}

/// A grammar with positive real weights and their scaled integer roundings.
#[derive(Clone, Debug)]
pub struct WeightedGrammar {
    base: Arc<Grammar>,
    search: Grammar,
    templates: Vec<Template>,
    real: Vec<f64>,
    discrete: Vec<u32>,
    scale: f64,
    /// Weight contributed by each base production: `None` when excluded,
    /// zero when inlined.
    base_real: Vec<Option<f64>>,
    base_discrete: Vec<Option<u32>>,
}

fn discretize(scale: f64, w: f64) -> u32 {
    // the epsilon keeps values like 100 * 0.07 = 7.000000000000001 from
    // rounding up to 8
    let scaled = scale * w;
    let rounded = scaled.round();
    let v = if (scaled - rounded).abs() < 1e-9 {
        rounded
    } else {
        scaled.ceil()
    };
    (v as u32).max(1)
}

impl WeightedGrammar {
    /// Every production weighs 1; scale 1.
    pub fn uniform(grammar: Arc<Grammar>) -> Self {
        let n = grammar.productions().len();
        WeightedGrammar::new(grammar, vec![1.0; n], 1.0).expect("uniform weights are valid")
    }

    /// Explicit real weights per base production.
    pub fn new(grammar: Arc<Grammar>, real: Vec<f64>, scale: f64) -> Result<Self, GrammarError> {
        if !(scale >= 1.0) || !scale.is_finite() {
            return Err(GrammarError::InvalidScale(scale));
        }
        if real.len() != grammar.productions().len() {
            return Err(GrammarError::Format(format!(
                "expected {} weights, got {}",
                grammar.productions().len(),
                real.len()
            )));
        }
        for (i, &w) in real.iter().enumerate() {
            if !(w > 0.0) || !w.is_finite() {
                return Err(GrammarError::InvalidWeight {
                    prod: ProdId(i as u32),
                    weight: w,
                });
            }
        }
        let templates = grammar
            .productions()
            .iter()
            .map(|p| Template::identity(p.id, p.arity()))
            .collect();
        let discrete: Vec<u32> = real.iter().map(|&w| discretize(scale, w)).collect();
        Ok(WeightedGrammar {
            search: (*grammar).clone(),
            base: grammar,
            templates,
            base_real: real.iter().map(|&w| Some(w)).collect(),
            base_discrete: discrete.iter().map(|&d| Some(d)).collect(),
            real,
            discrete,
            scale,
        })
    }

    /// Assembles a derived grammar. `base_real` gives each base production's
    /// contribution to real cost; the weight of a search production is the
    /// sum over its template.
    pub(crate) fn derived(
        base: Arc<Grammar>,
        search: Grammar,
        templates: Vec<Template>,
        base_real: Vec<Option<f64>>,
        scale: f64,
    ) -> Result<Self, GrammarError> {
        if !(scale >= 1.0) || !scale.is_finite() {
            return Err(GrammarError::InvalidScale(scale));
        }
        debug_assert_eq!(search.productions().len(), templates.len());
        let real: Vec<f64> = templates
            .iter()
            .map(|t| template_weight(t, &base_real))
            .collect();
        let discrete: Vec<u32> = real.iter().map(|&w| discretize(scale, w)).collect();
        // base productions heading a template carry the rounded weight of the
        // whole template; inlined ones contribute nothing
        let mut base_discrete: Vec<Option<u32>> = base_real
            .iter()
            .map(|w| w.map(|_| 0))
            .collect();
        for (t, &d) in templates.iter().zip(&discrete) {
            if let Some(h) = t.head() {
                base_discrete[h.index()] = Some(d);
            }
        }
        for (i, w) in real.iter().enumerate() {
            if !w.is_finite() || *w < 0.0 {
                return Err(GrammarError::InvalidWeight {
                    prod: ProdId(i as u32),
                    weight: *w,
                });
            }
        }
        Ok(WeightedGrammar {
            base,
            search,
            templates,
            real,
            discrete,
            scale,
            base_real,
            base_discrete,
        })
    }

    /// Derives weights `-log2 p(R)` from a PCFG. Rules with probability zero
    /// are dropped; a nonterminal left with a single rule (probability one)
    /// is inlined into the rules that mention it, unless it is one of
    /// `roots`. The search grammar keeps only nonterminals reachable from
    /// `roots` (the start symbol when empty) and starts at the first root.
    pub fn from_pcfg(
        pg: &ProbabilisticGrammar,
        scale: f64,
        roots: &[NtId],
    ) -> Result<Self, GrammarError> {
        let base_real: Vec<Option<f64>> = pg
            .probs()
            .iter()
            .map(|&q| (q > 0.0).then(|| (-q.log2()).max(0.0)))
            .collect();
        WeightedGrammar::restricted(pg.grammar().clone(), base_real, scale, roots, true)
    }

    /// Unit weights over the part of `grammar` reachable from `roots`; the
    /// search grammar starts at the first root.
    pub fn uniform_rooted(grammar: Arc<Grammar>, roots: &[NtId]) -> Result<Self, GrammarError> {
        let n = grammar.productions().len();
        WeightedGrammar::restricted(grammar, vec![Some(1.0); n], 1.0, roots, false)
    }

    fn restricted(
        g: Arc<Grammar>,
        base_real: Vec<Option<f64>>,
        scale: f64,
        roots: &[NtId],
        inline_singletons: bool,
    ) -> Result<Self, GrammarError> {
        let roots: Vec<NtId> = if roots.is_empty() {
            vec![g.start()]
        } else {
            roots.to_vec()
        };
        let alive = |p: ProdId| base_real[p.index()].is_some();
        let live_of = |nt: NtId| -> Vec<ProdId> {
            g.productions_of(nt).iter().copied().filter(|&p| alive(p)).collect()
        };

        let mut reachable = vec![false; g.num_nonterminals()];
        let mut stack = roots.clone();
        while let Some(nt) = stack.pop() {
            if std::mem::replace(&mut reachable[nt.index()], true) {
                continue;
            }
            let live = live_of(nt);
            if live.is_empty() {
                return Err(GrammarError::EmptyNonterminal(
                    g.nonterminal_name(nt).to_string(),
                ));
            }
            for p in live {
                stack.extend(g.production(p).child_nonterminals());
            }
        }

        let inlined: Vec<Option<ProdId>> = g
            .nonterminals()
            .map(|nt| {
                let live = live_of(nt);
                (inline_singletons
                    && reachable[nt.index()]
                    && !roots.contains(&nt)
                    && live.len() == 1)
                    .then(|| live[0])
            })
            .collect();

        let mut names = Vec::new();
        let mut remap = vec![None; g.num_nonterminals()];
        for nt in g.nonterminals() {
            if reachable[nt.index()] && inlined[nt.index()].is_none() {
                remap[nt.index()] = Some(NtId(names.len() as u32));
                names.push(g.nonterminal_name(nt).to_string());
            }
        }

        let mut rules = Vec::new();
        let mut templates = Vec::new();
        for prod in g.productions() {
            if !alive(prod.id) || remap[prod.lhs.index()].is_none() {
                continue;
            }
            let mut rhs = Vec::new();
            let mut holes = 0;
            let mut visiting = Vec::new();
            let t = splice(&g, prod.id, &inlined, &remap, &mut rhs, &mut holes, &mut visiting)?;
            rules.push((remap[prod.lhs.index()].unwrap(), rhs, prod.operator));
            templates.push(t);
        }
        let search = Grammar::from_parts(
            names,
            g.terminal_table().to_vec(),
            remap[roots[0].index()].expect("roots are never inlined"),
            rules,
        )?;
        WeightedGrammar::derived(g, search, templates, base_real, scale)
    }

    pub fn base(&self) -> &Arc<Grammar> {
        &self.base
    }

    /// The grammar enumerated by search.
    pub fn search_grammar(&self) -> &Grammar {
        &self.search
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn template(&self, search_prod: ProdId) -> &Template {
        &self.templates[search_prod.index()]
    }

    /// Real weight of a search production.
    pub fn real_weight(&self, search_prod: ProdId) -> f64 {
        self.real[search_prod.index()]
    }

    /// Discrete weight of a search production.
    pub fn discrete_weight(&self, search_prod: ProdId) -> u32 {
        self.discrete[search_prod.index()]
    }

    /// Real weight attributed to a base production, `None` if excluded.
    pub fn base_real_weight(&self, prod: ProdId) -> Option<f64> {
        self.base_real.get(prod.index()).copied().flatten()
    }

    /// Discrete weight attributed to a base production, `None` if excluded.
    pub fn base_discrete_weight(&self, prod: ProdId) -> Option<u32> {
        self.base_discrete.get(prod.index()).copied().flatten()
    }

    /// Sum of real weights over the base program's trace.
    pub fn real_cost(&self, program: &Program) -> Result<f64, GrammarError> {
        let mut total = 0.0;
        for p in program.trace() {
            match self.base_real.get(p.index()) {
                None => return Err(GrammarError::UnknownProduction(p)),
                Some(None) => return Err(GrammarError::ExcludedProduction(p)),
                Some(Some(w)) => total += w,
            }
        }
        Ok(total)
    }

    /// Sum of discrete weights over the base program's trace.
    pub fn discrete_cost(&self, program: &Program) -> Result<u64, GrammarError> {
        let mut total = 0u64;
        for p in program.trace() {
            match self.base_discrete.get(p.index()) {
                None => return Err(GrammarError::UnknownProduction(p)),
                Some(None) => return Err(GrammarError::ExcludedProduction(p)),
                Some(Some(w)) => total += *w as u64,
            }
        }
        Ok(total)
    }

    /// Rewrites a search-grammar program into the base grammar.
    pub fn expand(&self, program: &Program) -> Arc<Program> {
        let kids: Vec<Arc<Program>> = program.children().iter().map(|c| self.expand(c)).collect();
        self.templates[program.production().index()].instantiate(&kids)
    }

    /// Search-grammar nonterminal corresponding to base nonterminal `nt`, if
    /// it survived derivation.
    pub fn search_nonterminal(&self, base_nt: NtId) -> Option<NtId> {
        self.search
            .nonterminal(self.base.nonterminal_name(base_nt))
            .filter(|n| !self.search.productions_of(*n).is_empty())
    }
}

/// Writes `prod`'s right-hand side into `rhs`, recursively replacing inlined
/// nonterminals by their only rule.
fn splice(
    g: &Grammar,
    prod: ProdId,
    inlined: &[Option<ProdId>],
    remap: &[Option<NtId>],
    rhs: &mut Vec<Symbol>,
    holes: &mut usize,
    visiting: &mut Vec<ProdId>,
) -> Result<Template, GrammarError> {
    if visiting.contains(&prod) {
        return Err(GrammarError::Format(format!(
            "cyclic unit derivation through {}",
            g.describe(prod)
        )));
    }
    visiting.push(prod);
    let mut kids = Vec::new();
    for sym in &g.production(prod).rhs {
        match *sym {
            Symbol::T(t) => rhs.push(Symbol::T(t)),
            Symbol::N(n) => match inlined[n.index()] {
                Some(only) => kids.push(splice(g, only, inlined, remap, rhs, holes, visiting)?),
                None => {
                    rhs.push(Symbol::N(remap[n.index()].expect("reachable")));
                    kids.push(Template::Hole(*holes));
                    *holes += 1;
                }
            },
        }
    }
    visiting.pop();
    Ok(Template::Apply(prod, kids))
}

fn template_weight(t: &Template, base_real: &[Option<f64>]) -> f64 {
    match t {
        Template::Hole(_) => 0.0,
        Template::Apply(p, kids) => {
            base_real[p.index()].unwrap_or(f64::INFINITY)
                + kids.iter().map(|k| template_weight(k, base_real)).sum::<f64>()
        }
    }
}

/// A grammar with a probability per production, normalized per nonterminal.
#[derive(Clone, Debug)]
pub struct ProbabilisticGrammar {
    grammar: Arc<Grammar>,
    probs: Vec<f64>,
}

impl ProbabilisticGrammar {
    pub fn new(grammar: Arc<Grammar>, probs: Vec<f64>) -> Result<Self, GrammarError> {
        if probs.len() != grammar.productions().len() {
            return Err(GrammarError::Format(format!(
                "expected {} probabilities, got {}",
                grammar.productions().len(),
                probs.len()
            )));
        }
        for (i, &p) in probs.iter().enumerate() {
            if !(0.0..=1.0).contains(&p) || !p.is_finite() {
                return Err(GrammarError::InvalidWeight {
                    prod: ProdId(i as u32),
                    weight: p,
                });
            }
        }
        for nt in grammar.nonterminals() {
            let sum: f64 = grammar
                .productions_of(nt)
                .iter()
                .map(|p| probs[p.index()])
                .sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(GrammarError::Unnormalized {
                    nonterminal: grammar.nonterminal_name(nt).to_string(),
                    sum,
                });
            }
        }
        Ok(ProbabilisticGrammar { grammar, probs })
    }

    /// Uniform distribution over each nonterminal's productions.
    pub fn uniform(grammar: Arc<Grammar>) -> Self {
        let mut probs = vec![0.0; grammar.productions().len()];
        for nt in grammar.nonterminals() {
            let ps = grammar.productions_of(nt);
            for p in ps {
                probs[p.index()] = 1.0 / ps.len() as f64;
            }
        }
        ProbabilisticGrammar { grammar, probs }
    }

    pub fn grammar(&self) -> &Arc<Grammar> {
        &self.grammar
    }

    pub fn prob(&self, prod: ProdId) -> f64 {
        self.probs[prod.index()]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// `p(P)`: product of rule probabilities over the trace.
    pub fn program_probability(&self, program: &Program) -> Result<f64, GrammarError> {
        let mut p = 1.0;
        for prod in program.trace() {
            let q = *self
                .probs
                .get(prod.index())
                .ok_or(GrammarError::UnknownProduction(prod))?;
            if q == 0.0 {
                return Err(GrammarError::ZeroProbability(prod));
            }
            p *= q;
        }
        Ok(p)
    }

    /// `log2 p(P)`, computed as a sum to avoid underflow on long programs.
    pub fn program_log2_probability(&self, program: &Program) -> Result<f64, GrammarError> {
        let mut lp = 0.0;
        for prod in program.trace() {
            let q = *self
                .probs
                .get(prod.index())
                .ok_or(GrammarError::UnknownProduction(prod))?;
            if q == 0.0 {
                return Err(GrammarError::ZeroProbability(prod));
            }
            lp += q.log2();
        }
        Ok(lp)
    }
}

#[cfg(test)]
mod tests {
    use super::super::tests::tiny;
    use super::*;

    fn a() -> Arc<Program> {
        Arc::new(Program::leaf(ProdId(0)))
    }
    fn f(x: Arc<Program>) -> Arc<Program> {
        Arc::new(Program::new(ProdId(1), vec![x]))
    }
    fn g(x: Arc<Program>, y: Arc<Program>) -> Arc<Program> {
        Arc::new(Program::new(ProdId(2), vec![x, y]))
    }

    #[test]
    fn uniform_costs() {
        let wg = WeightedGrammar::uniform(Arc::new(tiny()));
        let p = g(a(), a());
        assert_eq!(wg.real_cost(&p).unwrap(), 3.0);
        assert_eq!(wg.discrete_cost(&p).unwrap(), 3);
    }

    #[test]
    fn weighted_costs_and_scaling() {
        let grammar = Arc::new(tiny());
        let w = vec![0.5, 1.2, 2.0];
        let p = f(f(a()));
        let wg1 = WeightedGrammar::new(grammar.clone(), w.clone(), 1.0).unwrap();
        assert!((wg1.real_cost(&p).unwrap() - 2.9).abs() < 1e-12);
        assert_eq!(wg1.discrete_cost(&p).unwrap(), 5);
        let wg10 = WeightedGrammar::new(grammar, w, 10.0).unwrap();
        assert_eq!(wg10.discrete_cost(&p).unwrap(), 29);
        let gap = (29.0 / 10.0 - wg10.real_cost(&p).unwrap()).abs();
        assert!(gap <= 3.0 / 10.0);
    }

    #[test]
    fn unknown_production_is_an_error() {
        let wg = WeightedGrammar::uniform(Arc::new(tiny()));
        let bogus = Program::leaf(ProdId(9));
        assert_eq!(
            wg.real_cost(&bogus),
            Err(GrammarError::UnknownProduction(ProdId(9)))
        );
        assert!(wg.discrete_cost(&bogus).is_err());
    }

    #[test]
    fn rejects_nonpositive_weights_and_small_scale() {
        let grammar = Arc::new(tiny());
        assert!(WeightedGrammar::new(grammar.clone(), vec![1.0, 0.0, 1.0], 1.0).is_err());
        assert!(WeightedGrammar::new(grammar, vec![1.0; 3], 0.5).is_err());
    }

    #[test]
    fn discretize_rounds_up_but_tolerates_float_noise() {
        assert_eq!(discretize(100.0, 0.07), 7);
        assert_eq!(discretize(100.0, 0.3219), 33);
        assert_eq!(discretize(1.0, 1e-6), 1);
        assert_eq!(discretize(1.0, 1.2), 2);
    }

    #[test]
    fn program_probability_products() {
        let grammar = Arc::new(tiny());
        let pg = ProbabilisticGrammar::new(grammar, vec![0.5, 0.25, 0.25]).unwrap();
        assert!((pg.program_probability(&f(a())).unwrap() - 0.125).abs() < 1e-15);
        assert!((pg.program_probability(&g(a(), a())).unwrap() - 0.0625).abs() < 1e-15);
    }

    #[test]
    fn zero_probability_in_trace_errors() {
        let grammar = Arc::new(tiny());
        let pg = ProbabilisticGrammar::new(grammar, vec![1.0, 0.0, 0.0]).unwrap();
        assert_eq!(pg.program_probability(&a()).unwrap(), 1.0);
        assert_eq!(
            pg.program_probability(&f(a())),
            Err(GrammarError::ZeroProbability(ProdId(1)))
        );
    }

    #[test]
    fn unnormalized_rejected() {
        let grammar = Arc::new(tiny());
        assert!(matches!(
            ProbabilisticGrammar::new(grammar, vec![0.5, 0.5, 0.5]),
            Err(GrammarError::Unnormalized { .. })
        ));
    }
}
