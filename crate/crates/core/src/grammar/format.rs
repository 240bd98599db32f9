//! JSON grammar files.
//!
//! ```json
//! {
//!   "start": "$S",
//!   "nonterminals": ["$S"],
//!   "productions": [
//!     {"lhs": "$S", "rhs": ["a"]},
//!     {"lhs": "$S", "rhs": ["f(", "$S", ")"], "operator_terminal": "f("}
//!   ]
//! }
//! ```
//!
//! Weighted and probabilistic grammars embed the base grammar and add a
//! `{production_id: number}` map.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Grammar, GrammarBuilder, GrammarError, ProbabilisticGrammar, WeightedGrammar};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductionEntry {
    pub lhs: String,
    pub rhs: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operator_terminal: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrammarFile {
    pub start: String,
    /// Optional; fixes nonterminal order. Nonterminals mentioned only in
    /// productions are appended in order of first appearance.
    #[serde(default)]
    pub nonterminals: Vec<String>,
    pub productions: Vec<ProductionEntry>,
}

impl GrammarFile {
    pub fn from_grammar(g: &Grammar) -> GrammarFile {
        GrammarFile {
            start: format!("${}", g.nonterminal_name(g.start())),
            nonterminals: g
                .nonterminals()
                .map(|n| format!("${}", g.nonterminal_name(n)))
                .collect(),
            productions: g
                .productions()
                .iter()
                .map(|p| ProductionEntry {
                    lhs: format!("${}", g.nonterminal_name(p.lhs)),
                    rhs: p.rhs.iter().map(|s| g.symbol_text(*s)).collect(),
                    operator_terminal: p.operator.map(|t| g.terminal_text(t).to_string()),
                })
                .collect(),
        }
    }

    pub fn to_grammar(&self) -> Result<Grammar, GrammarError> {
        let mut b = GrammarBuilder::new(&self.start);
        for nt in &self.nonterminals {
            b.nonterminal(nt);
        }
        for p in &self.productions {
            if !p.lhs.starts_with('$') {
                return Err(GrammarError::Format(format!(
                    "left-hand side `{}` is not a nonterminal",
                    p.lhs
                )));
            }
            b.rule(&p.lhs, &p.rhs, p.operator_terminal.as_deref());
        }
        b.build()
    }

    pub fn from_json(text: &str) -> Result<Grammar, GrammarError> {
        let file: GrammarFile =
            serde_json::from_str(text).map_err(|e| GrammarError::Format(e.to_string()))?;
        file.to_grammar()
    }

    pub fn to_json(g: &Grammar) -> String {
        serde_json::to_string_pretty(&GrammarFile::from_grammar(g)).expect("serializable")
    }
}

/// A base grammar plus either real weights or rule probabilities, keyed by
/// production id. Probabilities are turned into weights on load.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedGrammarFile {
    pub grammar: GrammarFile,
    #[serde(default = "default_scale")]
    pub scale: f64,
    /// Nonterminals kept as search roots when deriving from probabilities.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub roots: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<BTreeMap<u32, f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probabilities: Option<BTreeMap<u32, f64>>,
}

fn default_scale() -> f64 {
    super::DEFAULT_SCALE
}

fn dense(map: &BTreeMap<u32, f64>, n: usize, what: &str) -> Result<Vec<f64>, GrammarError> {
    let mut out = vec![f64::NAN; n];
    for (&k, &v) in map {
        let slot = out
            .get_mut(k as usize)
            .ok_or_else(|| GrammarError::Format(format!("{what} for unknown production {k}")))?;
        *slot = v;
    }
    if let Some(i) = out.iter().position(|v| v.is_nan()) {
        return Err(GrammarError::Format(format!("missing {what} for production {i}")));
    }
    Ok(out)
}

impl WeightedGrammarFile {
    pub fn from_pcfg(pg: &ProbabilisticGrammar, scale: f64, roots: &[String]) -> Self {
        WeightedGrammarFile {
            grammar: GrammarFile::from_grammar(pg.grammar()),
            scale,
            roots: roots.to_vec(),
            weights: None,
            probabilities: Some(
                pg.probs()
                    .iter()
                    .enumerate()
                    .map(|(i, &p)| (i as u32, p))
                    .collect(),
            ),
        }
    }

    pub fn from_weights(wg: &WeightedGrammar) -> Self {
        let g = wg.base();
        WeightedGrammarFile {
            grammar: GrammarFile::from_grammar(g),
            scale: wg.scale(),
            roots: Vec::new(),
            weights: Some(
                g.productions()
                    .iter()
                    .filter_map(|p| wg.base_real_weight(p.id).map(|w| (p.id.0, w)))
                    .collect(),
            ),
            probabilities: None,
        }
    }

    pub fn probabilistic(&self) -> Result<Option<ProbabilisticGrammar>, GrammarError> {
        let Some(probs) = &self.probabilities else {
            return Ok(None);
        };
        let g = Arc::new(self.grammar.to_grammar()?);
        let probs = dense(probs, g.productions().len(), "probability")?;
        ProbabilisticGrammar::new(g, probs).map(Some)
    }

    pub fn to_weighted(&self) -> Result<WeightedGrammar, GrammarError> {
        let g = Arc::new(self.grammar.to_grammar()?);
        match (&self.weights, &self.probabilities) {
            (Some(w), None) => {
                let w = dense(w, g.productions().len(), "weight")?;
                WeightedGrammar::new(g, w, self.scale)
            }
            (None, Some(_)) => {
                let pg = self.probabilistic()?.expect("probabilities present");
                let roots = self
                    .roots
                    .iter()
                    .map(|r| {
                        g.nonterminal(r)
                            .ok_or_else(|| GrammarError::UnknownNonterminal(r.clone()))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                WeightedGrammar::from_pcfg(&pg, self.scale, &roots)
            }
            (None, None) => Ok(WeightedGrammar::uniform(g)),
            (Some(_), Some(_)) => Err(GrammarError::Format(
                "give either weights or probabilities, not both".into(),
            )),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<Self, GrammarError> {
        serde_json::from_str(text).map_err(|e| GrammarError::Format(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::super::tests::tiny;
    use super::*;

    #[test]
    fn grammar_round_trip_keeps_ids() {
        let g = tiny();
        let text = GrammarFile::to_json(&g);
        let back = GrammarFile::from_json(&text).unwrap();
        assert_eq!(back, g);
        assert_eq!(back.production(super::super::ProdId(2)).operator, g.terminal("g("));
    }

    #[test]
    fn rejects_bad_lhs_and_garbage() {
        let bad = r#"{"start":"$S","productions":[{"lhs":"S","rhs":["a"]}]}"#;
        assert!(matches!(GrammarFile::from_json(bad), Err(GrammarError::Format(_))));
        assert!(GrammarFile::from_json("{").is_err());
    }

    #[test]
    fn probabilities_round_trip() {
        let g = Arc::new(tiny());
        let pg = ProbabilisticGrammar::new(g, vec![0.5, 0.25, 0.25]).unwrap();
        let file = WeightedGrammarFile::from_pcfg(&pg, 100.0, &[]);
        let back = WeightedGrammarFile::from_json(&file.to_json()).unwrap();
        assert_eq!(back.probabilistic().unwrap().unwrap().probs(), pg.probs());
        let wg = back.to_weighted().unwrap();
        assert_eq!(wg.base_discrete_weight(super::super::ProdId(1)), Some(200));
    }

    #[test]
    fn weights_round_trip() {
        let wg = WeightedGrammar::new(Arc::new(tiny()), vec![0.5, 1.2, 2.0], 10.0).unwrap();
        let file = WeightedGrammarFile::from_weights(&wg);
        let back = WeightedGrammarFile::from_json(&file.to_json())
            .unwrap()
            .to_weighted()
            .unwrap();
        for p in wg.base().productions() {
            assert_eq!(back.base_discrete_weight(p.id), wg.base_discrete_weight(p.id));
        }
    }
}
