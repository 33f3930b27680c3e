use super::ChaosFunctional;
use crate::error::{Error, Result};

/// A functional compiled for repeated evaluation at points given as dense
/// slices over a fixed list of coordinates.
///
/// Each call fills a table of `He_m(ξ)/√(m!)` per coordinate once and then
/// forms every term as a product of table entries.
#[derive(Debug, Clone)]
pub struct Evaluator {
    offsets: Vec<usize>,
    max_mult: Vec<usize>,
    terms: Vec<(f64, Vec<usize>)>,
    table_len: usize,
}

impl Evaluator {
    /// `coords[s]` is the basis index read from slot `s` of each point.
    pub fn new(phi: &ChaosFunctional, coords: &[usize]) -> Result<Self> {
        let slot_of = |j: usize| {
            coords
                .iter()
                .position(|&c| c == j)
                .ok_or_else(|| Error::Domain(format!("coordinate {j} not among the evaluation slots")))
        };
        let mut max_mult = vec![0usize; coords.len()];
        let mut raw = Vec::with_capacity(phi.len());
        for (a, &c) in phi.terms() {
            let mut slots = Vec::with_capacity(a.entries().len());
            for &(j, m) in a.entries() {
                let s = slot_of(j)?;
                max_mult[s] = max_mult[s].max(m);
                slots.push((s, m));
            }
            raw.push((c, slots));
        }
        let mut offsets = Vec::with_capacity(coords.len());
        let mut table_len = 0;
        for &m in &max_mult {
            offsets.push(table_len);
            table_len += m + 1;
        }
        let terms = raw
            .into_iter()
            .map(|(c, slots)| (c, slots.into_iter().map(|(s, m)| offsets[s] + m).collect()))
            .collect();
        Ok(Self { offsets, max_mult, terms, table_len })
    }

    pub fn slots(&self) -> usize {
        self.offsets.len()
    }

    /// `φ(ξ)`; `table` is scratch space reused across calls.
    pub fn eval_with(&self, xi: &[f64], table: &mut Vec<f64>) -> f64 {
        debug_assert_eq!(xi.len(), self.offsets.len());
        table.resize(self.table_len, 0.0);
        for ((&x, &off), &mm) in xi.iter().zip(&self.offsets).zip(&self.max_mult) {
            table[off] = 1.0;
            if mm >= 1 {
                table[off + 1] = x;
            }
            for k in 1..mm {
                let kf = k as f64;
                table[off + k + 1] = (x * table[off + k] - kf.sqrt() * table[off + k - 1]) / (kf + 1.0).sqrt();
            }
        }
        self.terms.iter().map(|(c, idx)| c * idx.iter().map(|&i| table[i]).product::<f64>()).sum()
    }

    pub fn eval(&self, xi: &[f64]) -> f64 {
        self.eval_with(xi, &mut Vec::new())
    }
}
