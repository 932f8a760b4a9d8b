//! Student's t tail probabilities via the regularized incomplete beta function.

use libm::{exp, fabs, lgamma, log};

const MAX_ITERATIONS: usize = 20_000;
const EPSILON: f64 = 1e-16;
const TINY: f64 = 1e-300;

/// Continued fraction for `I_x(a, b)` (modified Lentz).
fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if fabs(d) < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITERATIONS {
        let m = m as f64;
        let m2 = 2.0 * m;

        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if fabs(d) < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if fabs(c) < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;

        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if fabs(d) < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if fabs(c) < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if fabs(del - 1.0) < EPSILON {
            break;
        }
    }
    h
}

/// Regularized incomplete beta `I_x(a, b)` where the caller supplies both
/// `x` and `y = 1 - x`, so neither side loses precision near 0 or 1.
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64, y: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if y <= 0.0 {
        return 1.0;
    }
    let ln_front = lgamma(a + b) - lgamma(a) - lgamma(b) + a * log(x) + b * log(y);
    let front = exp(ln_front);
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(a, b, x) / a
    } else {
        1.0 - front * beta_continued_fraction(b, a, y) / b
    }
}

/// `P(|T| >= |t|)` for Student's t with `df` degrees of freedom.
///
/// Returns `None` when `df < 1` or either argument is NaN.
pub fn two_tailed_p(t: f64, df: f64) -> Option<f64> {
    if t.is_nan() || df.is_nan() || df < 1.0 {
        return None;
    }
    if t.is_infinite() {
        return Some(0.0);
    }
    if t == 0.0 {
        return Some(1.0);
    }
    let t2 = t * t;
    // x = df / (df + t^2), 1 - x = t^2 / (df + t^2)
    let denom = df + t2;
    let (x, y) = (df / denom, t2 / denom);
    let p = regularized_incomplete_beta(0.5 * df, 0.5, x, y);
    Some(p.clamp(0.0, 1.0))
}
