//! JSON form `{"basis_dim": J, "terms": [{"alpha": [[j, mult], ...], "coeff": c}]}`.
//!
//! Coefficients are written with shortest round-trip formatting and parsed
//! with correct rounding, so write-then-read is lossless.

use serde::{Deserialize, Serialize};

use super::{ChaosFunctional, MultiIndex, MAX_BASIS_INDEX};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChaosFile {
    pub basis_dim: usize,
    pub terms: Vec<ChaosTerm>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChaosTerm {
    pub alpha: Vec<(usize, usize)>,
    pub coeff: f64,
}

impl ChaosFile {
    pub fn from_functional(phi: &ChaosFunctional, basis_dim: Option<usize>) -> Self {
        Self {
            basis_dim: basis_dim.unwrap_or(0).max(phi.basis_dim()),
            terms: phi.terms().iter().map(|(a, &c)| ChaosTerm { alpha: a.entries().to_vec(), coeff: c }).collect(),
        }
    }

    pub fn into_functional(self) -> Result<ChaosFunctional> {
        if self.basis_dim > MAX_BASIS_INDEX + 1 {
            return Err(Error::Capacity(format!("basis_dim {} above {}", self.basis_dim, MAX_BASIS_INDEX + 1)));
        }
        let mut seen = std::collections::BTreeSet::new();
        let mut terms = Vec::with_capacity(self.terms.len());
        for (i, t) in self.terms.into_iter().enumerate() {
            let alpha = MultiIndex::new(t.alpha).map_err(|e| Error::Validation(format!("terms[{i}].alpha: {e}")))?;
            if let Some(j) = alpha.max_index() {
                if j >= self.basis_dim {
                    return Err(Error::Validation(format!(
                        "terms[{i}].alpha: basis index {j} not below basis_dim {}",
                        self.basis_dim
                    )));
                }
            }
            if !t.coeff.is_finite() {
                return Err(Error::Validation(format!("terms[{i}].coeff is not finite")));
            }
            if !seen.insert(alpha.clone()) {
                return Err(Error::Validation(format!("terms[{i}].alpha: multi-index {alpha} listed twice")));
            }
            terms.push((alpha, t.coeff));
        }
        Ok(ChaosFunctional::from_terms(terms))
    }
}

impl ChaosFunctional {
    pub fn from_json(text: &str) -> Result<Self> {
        let file: ChaosFile = serde_json::from_str(text).map_err(|e| Error::Parse(format!("chaos functional: {e}")))?;
        file.into_functional()
    }

    pub fn to_json(&self, basis_dim: Option<usize>) -> String {
        serde_json::to_string_pretty(&ChaosFile::from_functional(self, basis_dim)).expect("chaos file serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauss::RandomStream;

    #[test]
    fn roundtrip_is_lossless() {
        for seed in 0..20 {
            let phi = ChaosFunctional::random_sparse(RandomStream::new(seed, 3), 12, 6, 16, seed % 2 == 0);
            let back = ChaosFunctional::from_json(&phi.to_json(None)).unwrap();
            assert_eq!(back, phi);
        }
        let tricky = ChaosFunctional::from_terms([(MultiIndex::unit(2), 0.1 + 0.2), (MultiIndex::empty(), 1e-310)]);
        assert_eq!(ChaosFunctional::from_json(&tricky.to_json(Some(8))).unwrap(), tricky);
    }

    #[test]
    fn reads_documented_format() {
        let text = r#"{"basis_dim": 2, "terms": [{"alpha": [[0, 1]], "coeff": 0.6}, {"alpha": [[1, 1]], "coeff": 0.8}]}"#;
        let phi = ChaosFunctional::from_json(text).unwrap();
        assert_eq!(phi.len(), 2);
        assert_eq!(phi.norm_2p(0.0), 1.0);
    }

    #[test]
    fn diagnostics() {
        let err = ChaosFunctional::from_json("{\"basis_dim\": 2,\n \"terms\": [{\"alpha\": [[0, 1]], \"coef\": 1}]}").unwrap_err();
        assert!(matches!(&err, Error::Parse(m) if m.contains("line 2")), "{err}");
        let err = ChaosFunctional::from_json(r#"{"basis_dim": 1, "terms": [{"alpha": [[3, 1]], "coeff": 1}]}"#).unwrap_err();
        assert!(err.to_string().contains("terms[0]"), "{err}");
        let dup = r#"{"basis_dim": 1, "terms": [{"alpha": [[0, 1]], "coeff": 1}, {"alpha": [[0, 1]], "coeff": 2}]}"#;
        assert!(ChaosFunctional::from_json(dup).is_err());
        let zero_mult = r#"{"basis_dim": 1, "terms": [{"alpha": [[0, 0]], "coeff": 1}]}"#;
        assert!(ChaosFunctional::from_json(zero_mult).is_err());
    }
}
