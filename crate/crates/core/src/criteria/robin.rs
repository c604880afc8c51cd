use serde::{Deserialize, Serialize};

/// Result of locating the crossing point of
/// (x+1)^{1/2−2/n₀} > 2^{2 + 1.385 ln x / ln ln x}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobinReduction {
    pub n0: u32,
    /// Smallest x (to relative precision 1e−6, rounded up) from which the
    /// inequality holds for every larger x.
    pub x0: f64,
    /// 2^{n₀} − 1 > x0: every q^n − 1 with n ≥ n₀ lies past the crossing.
    pub passes: bool,
    /// The monotonicity certificate held at x0 (see [`robin_reduction`]).
    pub monotone_from_x0: bool,
}

const ROBIN_C: f64 = 1.385;

/// F(y) = c·ln(e^y + 1) − ln2·(2 + 1.385·y/ln y) with y = ln x; the
/// inequality is F > 0.
fn f(y: f64, c: f64) -> f64 {
    let lx1 = if y > 40.0 {
        y + (-y).exp()
    } else {
        y.exp().ln_1p()
    };
    c * lx1 - std::f64::consts::LN_2 * (2.0 + ROBIN_C * y / y.ln())
}

/// dF/dy.
fn df(y: f64, c: f64) -> f64 {
    let ly = y.ln();
    c / (1.0 + (-y).exp()) - std::f64::consts::LN_2 * ROBIN_C * (ly - 1.0) / (ly * ly)
}

/// Locate x0 for a given n0 by a log-spaced scan followed by bisection.
///
/// For y ≥ e² the subtracted term of dF/dy, ln2·1.385·(ln y − 1)/ln²y, is
/// decreasing while the first term increases, so dF/dy > 0 at some y₁ ≥ e²
/// implies F is increasing on [y₁, ∞). That is the certificate recorded in
/// `monotone_from_x0`.
pub fn robin_reduction(n0: u32) -> RobinReduction {
    assert!(n0 >= 5, "robin_reduction needs n0 >= 5");
    let c = 0.5 - 2.0 / n0 as f64;
    // scan y = ln x over [ln 16, 2000]; find the last nonpositive point
    let y_lo = 16f64.ln();
    let y_hi = 2000.0;
    let steps = 200_000;
    let mut last_bad = None;
    for i in 0..=steps {
        let y = y_lo + (y_hi - y_lo) * i as f64 / steps as f64;
        if f(y, c) <= 0.0 {
            last_bad = Some(y);
        }
    }
    let (mut a, mut b) = match last_bad {
        None => (y_lo, y_lo),
        Some(y) => (y, y + (y_hi - y_lo) / steps as f64),
    };
    while b - a > 1e-7 {
        let mid = 0.5 * (a + b);
        if f(mid, c) > 0.0 {
            b = mid;
        } else {
            a = mid;
        }
    }
    let x0 = b.exp();
    let monotone = b >= std::f64::consts::E.powi(2) && df(b, c) > 0.0 && f(b, c) > 0.0;
    let two_n = (n0 as f64 * std::f64::consts::LN_2).exp() - 1.0;
    RobinReduction {
        n0,
        x0,
        passes: two_n > x0 && monotone,
        monotone_from_x0: monotone,
    }
}
