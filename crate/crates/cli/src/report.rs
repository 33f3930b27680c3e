use std::collections::BTreeMap;

use serde::Serialize;
use stein_chaos::gauss::rng::BLOCK_SIZE;

/// Where a number came from: enough to reproduce it bit for bit.
#[derive(Debug, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub rng: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub settings: BTreeMap<&'static str, f64>,
}

impl Provenance {
    pub fn new(seed: Option<u64>) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            rng: format!("chacha12 counter stream, {BLOCK_SIZE}-draw blocks"),
            seed,
            settings: BTreeMap::new(),
        }
    }

    pub fn with(mut self, name: &'static str, value: f64) -> Self {
        self.settings.insert(name, value);
        self
    }

    /// One-line form for CSV comment headers.
    pub fn comment(&self, tolerances: &BTreeMap<String, f64>) -> String {
        let mut parts = vec![format!("{} {}", self.tool, self.version)];
        if let Some(s) = self.seed {
            parts.push(format!("seed {s}"));
            parts.push(self.rng.clone());
        }
        parts.extend(self.settings.iter().map(|(k, v)| format!("{k} {v}")));
        parts.extend(tolerances.iter().map(|(k, v)| format!("tol {k} {v}")));
        format!("# {}\n", parts.join("; "))
    }
}

/// A report with its tolerances and provenance attached at the top level.
#[derive(Debug, Serialize)]
pub struct Envelope<T: Serialize> {
    pub command: &'static str,
    #[serde(flatten)]
    pub report: T,
    pub tolerances: BTreeMap<String, f64>,
    pub provenance: Provenance,
}

impl<T: Serialize> Envelope<T> {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }
}
