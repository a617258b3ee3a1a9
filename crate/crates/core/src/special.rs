//! Gamma function and bracketed root finding.

/// Gamma function (Lanczos approximation, reflection below 1/2).
pub fn gamma(x: f64) -> f64 {
    statrs::function::gamma::gamma(x)
}

/// Finds a root of `f` in `[lo, hi]` by bisection, given a sign change.
///
/// Iterates until the bracket stops shrinking in floating point, so the returned
/// point is within one ulp of a sign change of `f`. Returns `None` when the
/// endpoints do not bracket a root.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> Option<f64> {
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Some(lo);
    }
    if f_hi == 0.0 {
        return Some(hi);
    }
    if f_lo.signum() == f_hi.signum() || f_lo.is_nan() || f_hi.is_nan() {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Some(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn gamma_known_values() {
        let cases = [
            (0.5, PI.sqrt()),
            (1.0, 1.0),
            (1.5, 0.5 * PI.sqrt()),
            (2.0, 1.0),
            (2.5, 0.75 * PI.sqrt()),
            (5.0, 24.0),
            (1.0 / 3.0, 2.678_938_534_707_747_6),
        ];
        for (x, want) in cases {
            let got = gamma(x);
            assert!(((got - want) / want).abs() < 1e-13, "gamma({x}) = {got}, want {want}");
        }
    }

    #[test]
    fn bisect_finds_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-15);
        assert!(bisect(|x| x * x + 1.0, 0.0, 2.0).is_none());
    }
}
