use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_3;

/// Standard normal density `e^{-w²/2} / √(2π)`.
pub fn std_normal_pdf(w: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * w * w).exp()
}

/// Standard normal distribution function Φ(w).
///
/// Near the origin (`|w| ≤ 0.5`) Φ is formed from `erf`; outside it the
/// lower tail comes straight from `erfc`, so small tail probabilities keep
/// full relative precision.
pub fn std_normal_cdf(w: f64) -> Result<f64> {
    if !w.is_finite() {
        return Err(Error::Domain(format!("std_normal_cdf: non-finite argument {w}")));
    }
    Ok(normal_cdf(w))
}

/// Infallible Φ used internally; `±∞` map to 1 and 0.
pub(crate) fn normal_cdf(w: f64) -> f64 {
    if w.abs() <= 0.5 {
        0.5 + 0.5 * libm::erf(w * FRAC_1_SQRT_2)
    } else if w < 0.0 {
        0.5 * libm::erfc(-w * FRAC_1_SQRT_2)
    } else {
        1.0 - 0.5 * libm::erfc(w * FRAC_1_SQRT_2)
    }
}

/// Upper tail `1 - Φ(w)`, accurate for large positive `w`.
pub(crate) fn normal_sf(w: f64) -> f64 {
    normal_cdf(-w)
}

/// Scaled complementary error function `e^{x²} erfc(x)`.
pub fn erfcx(x: f64) -> f64 {
    if x < 0.0 {
        // Grows like 2e^{x²}; overflows to +∞ for x below about -26.6.
        return 2.0 * (x * x).exp() - erfcx(-x);
    }
    if x < 4.0 {
        return (x * x).exp() * libm::erfc(x);
    }
    // erfc(x) e^{x²} √π = 1 / (x + (1/2) / (x + 1 / (x + (3/2) / (x + ...))))
    // evaluated with the modified Lentz method.
    let tiny = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for k in 1..500 {
        let a = 0.5 * k as f64;
        d = x + a * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = x + a / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    FRAC_1_SQRT_PI / f
}

/// `e^{w²/2} Φ(w)`, finite for all `w ≤ 37`.
pub(crate) fn lower_mills(w: f64) -> f64 {
    if w <= 0.0 {
        0.5 * erfcx(-w * FRAC_1_SQRT_2)
    } else {
        (0.5 * w * w).exp() * normal_cdf(w)
    }
}

/// `e^{w²/2} (1 - Φ(w))`, finite for all `w ≥ -37`.
pub(crate) fn upper_mills(w: f64) -> f64 {
    lower_mills(-w)
}

/// `∫_{-∞}^t Φ(s) ds = t Φ(t) + φ(t)`.
pub(crate) fn cdf_integral_lower(t: f64) -> f64 {
    if t == f64::NEG_INFINITY {
        return 0.0;
    }
    t * normal_cdf(t) + std_normal_pdf(t)
}

/// `∫_t^∞ (1 - Φ(s)) ds = φ(t) - t (1 - Φ(t))`.
pub(crate) fn sf_integral_upper(t: f64) -> f64 {
    if t == f64::INFINITY {
        return 0.0;
    }
    std_normal_pdf(t) - t * normal_sf(t)
}

/// `∫_a^b Φ(s) ds` for finite `a ≤ b`, choosing the representation that
/// avoids cancellation on each side of zero.
pub(crate) fn cdf_integral(a: f64, b: f64) -> f64 {
    debug_assert!(a <= b);
    if b <= 0.0 {
        cdf_integral_lower(b) - cdf_integral_lower(a)
    } else if a >= 0.0 {
        (b - a) - (sf_integral_upper(a) - sf_integral_upper(b))
    } else {
        (cdf_integral_lower(0.0) - cdf_integral_lower(a)) + (b - (sf_integral_upper(0.0) - sf_integral_upper(b)))
    }
}

/// Inverse of Φ.
pub fn std_normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("std_normal_quantile: probability {p} not in (0, 1)")));
    }
    Ok(normal_quantile(p))
}

pub(crate) fn normal_quantile(p: f64) -> f64 {
    // Acklam's rational approximation followed by two Halley steps.
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.02425;

    let mut x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };

    for _ in 0..2 {
        // Residual measured on whichever tail keeps relative precision.
        let e = if x <= 0.0 { normal_cdf(x) - p } else { (1.0 - p) - normal_sf(x) };
        let u = e * (2.0 * PI).sqrt() * (0.5 * x * x).exp();
        x -= u / (1.0 + 0.5 * x * u);
    }
    x
}
