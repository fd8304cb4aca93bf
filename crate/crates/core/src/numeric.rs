//! Scalar helpers: even-power polynomials, root bracketing, safeguarded Newton.

/// Newton iteration budget for projection/unprojection inversions.
pub const NEWTON_MAX_ITERS: usize = 20;
/// Step tolerance for the Newton inversions (normalized units).
pub const NEWTON_TOL: f64 = 1e-10;

/// Evaluates `1 + Σ c_n s^n` for `n = 1..=N` (Horner).
pub fn one_plus_series(coeffs: &[f64], s: f64) -> f64 {
    let mut acc = 0.0;
    for &c in coeffs.iter().rev() {
        acc = (acc + c) * s;
    }
    1.0 + acc
}

/// Evaluates `Σ n c_n s^(n-1)`, the derivative of [`one_plus_series`].
pub fn one_plus_series_deriv(coeffs: &[f64], s: f64) -> f64 {
    let mut acc = 0.0;
    for (i, &c) in coeffs.iter().enumerate().rev() {
        acc = acc * s + (i + 1) as f64 * c;
    }
    acc
}

/// Smallest positive root of `1 + Σ c_n s^n`, searched on `(0, cap]`.
///
/// Returns `None` when the polynomial stays positive on the interval.
pub fn first_positive_root(coeffs: &[f64], cap: f64) -> Option<f64> {
    // Descartes: no negative coefficient means no positive root.
    if coeffs.iter().all(|&c| c >= 0.0) {
        return None;
    }
    let last = coeffs.iter().rposition(|&c| c != 0.0)?;
    let lead = coeffs[last].abs();
    let cauchy = 1.0
        + coeffs[..last]
            .iter()
            .map(|c| c.abs() / lead)
            .fold(1.0 / lead, f64::max);
    let hi = cauchy.min(cap);
    // Quadratic spacing puts more samples near the origin where the first
    // root usually lives.
    const CELLS: usize = 4096;
    let mut prev_s = 0.0;
    for i in 1..=CELLS {
        let t = i as f64 / CELLS as f64;
        let s = hi * t * t;
        if one_plus_series(coeffs, s) <= 0.0 {
            return Some(bisect(|x| one_plus_series(coeffs, x), prev_s, s));
        }
        prev_s = s;
    }
    None
}

/// Bisection for a sign change from positive at `lo` to non-positive at `hi`.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Solves `g(x) = 0` for an increasing `g` bracketed by `lo < x < hi`
/// (`g(lo) ≤ 0`, and `g(hi) > 0` when `hi` is finite). `g` returns
/// `(value, derivative)`. Newton steps that leave the bracket fall back to
/// bisection (or doubling when `hi` is infinite).
pub fn solve_increasing(
    g: impl Fn(f64) -> (f64, f64),
    mut lo: f64,
    mut hi: f64,
    x0: f64,
) -> Option<f64> {
    let mut x = x0;
    if !(x > lo && x < hi) {
        x = if hi.is_finite() { 0.5 * (lo + hi) } else { lo.max(0.0) + 1.0 };
    }
    for _ in 0..NEWTON_MAX_ITERS {
        let (val, d) = g(x);
        if !val.is_finite() {
            return None;
        }
        if val == 0.0 {
            return Some(x);
        }
        if val < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - val / d;
        // a converged step may land on the bracket end just set to x
        if d > 0.0 && (newton - x).abs() <= NEWTON_TOL * x.abs().max(1.0) {
            return Some(newton);
        }
        x = if d > 0.0 && newton > lo && newton < hi {
            newton
        } else if hi.is_finite() {
            let mid = 0.5 * (lo + hi);
            if hi - lo <= NEWTON_TOL * mid.abs().max(1.0) {
                return Some(mid);
            }
            mid
        } else {
            2.0 * x.max(1.0)
        };
    }
    None
}
