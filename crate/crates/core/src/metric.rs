use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Probability metric induced by one of the three separating families
/// (Lipschitz-1, half-line indicators, Borel indicators).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Wasserstein,
    Kolmogorov,
    TotalVariation,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Wasserstein, Metric::Kolmogorov, Metric::TotalVariation];

    /// Uniform bound on `‖f_h'‖_∞` over the family, the constant θ multiplying
    /// `E|1 - T|` in the Stein-identity bounds.
    pub fn theta(self) -> f64 {
        match self {
            Metric::Wasserstein => (2.0 / PI).sqrt(),
            Metric::Kolmogorov => 1.0,
            Metric::TotalVariation => 2.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::Wasserstein => "wasserstein",
            Metric::Kolmogorov => "kolmogorov",
            Metric::TotalVariation => "total_variation",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "wasserstein" | "w" | "dw" => Ok(Metric::Wasserstein),
            "kolmogorov" | "ks" | "k" | "dk" => Ok(Metric::Kolmogorov),
            "total_variation" | "total-variation" | "tv" | "dtv" => Ok(Metric::TotalVariation),
            other => Err(Error::Parse(format!("unknown metric '{other}'"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theta_table() {
        assert_eq!(Metric::Wasserstein.theta(), (2.0 / PI).sqrt());
        assert_eq!(Metric::Kolmogorov.theta(), 1.0);
        assert_eq!(Metric::TotalVariation.theta(), 2.0);
    }

    #[test]
    fn parse_aliases() {
        assert_eq!("ks".parse::<Metric>().unwrap(), Metric::Kolmogorov);
        assert_eq!("tv".parse::<Metric>().unwrap(), Metric::TotalVariation);
        assert_eq!("Wasserstein".parse::<Metric>().unwrap(), Metric::Wasserstein);
        assert!("hellinger".parse::<Metric>().is_err());
    }
}
