//! Closed-form solution `u = u₀ g / (1 - ½ ψ₀ G)²`, the singular set
//! `Σ = {ψ₀(α) G(t) = 2}` and transport of jump discontinuities.

use std::io::{self, Write};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::problem::{invert_g, BoundaryIntegral, ProblemSpec, Psi0Profile};

/// Samples with denominator at or below this value are treated as singular.
pub const SINGULAR_THRESHOLD: f64 = 1e-8;
/// The singular curve is sampled where `ψ₀ > CURVE_THRESHOLD · M₀`.
pub const CURVE_THRESHOLD: f64 = 1e-6;

/// `D(α, t) = 1 - ½ ψ₀(α) G(t)`.
pub fn denominator(profile: &Psi0Profile, b: &BoundaryIntegral, alpha: f64, t: f64) -> f64 {
    let psi = profile.value(alpha);
    if psi == 0.0 {
        return 1.0;
    }
    1.0 - 0.5 * psi * b.value(t)
}

fn check_time(b: &BoundaryIntegral, t: f64) -> Result<()> {
    if !(t >= 0.0) || t >= b.domain_end() {
        return Err(Error::Domain(format!(
            "t = {t} is outside the boundary data domain [0, {})",
            b.domain_end()
        )));
    }
    Ok(())
}

/// `u(α, t)` from the representation formula.
///
/// Points on or beyond the singular set (`D ≤ SINGULAR_THRESHOLD`) are not
/// evaluated: the formula is only classical before `Σ` is reached.
pub fn evaluate_u(profile: &Psi0Profile, b: &BoundaryIntegral, spec: &ProblemSpec, alpha: f64, t: f64) -> Result<f64> {
    check_time(b, t)?;
    let d = denominator(profile, b, alpha, t);
    if !(d > SINGULAR_THRESHOLD) {
        return Err(Error::NearSingular { alpha, t, denominator: d });
    }
    Ok(spec.u0.value(alpha) * b.g().value(t) / (d * d))
}

/// `u` sampled on an `(α, t)` grid, stored row by row in `t`.
#[derive(Clone, Debug, Serialize)]
pub struct SolutionField {
    pub alpha: Vec<f64>,
    pub t: Vec<f64>,
    values: Vec<f64>,
    mask: Vec<bool>,
    /// Smallest `|D|` over all samples.
    pub denominator_min: f64,
}

impl SolutionField {
    /// Assembles a field from row-major samples (no masking).
    pub fn from_rows(alpha: Vec<f64>, t: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.len() != alpha.len() * t.len() {
            return Err(Error::Input(format!(
                "field has {} samples, expected {} x {}",
                values.len(),
                t.len(),
                alpha.len()
            )));
        }
        let mask = values.iter().map(|v| !v.is_finite()).collect();
        Ok(Self {
            alpha,
            t,
            values,
            mask,
            denominator_min: f64::NAN,
        })
    }

    pub fn n_alpha(&self) -> usize {
        self.alpha.len()
    }

    pub fn n_t(&self) -> usize {
        self.t.len()
    }

    /// `u(α_i, t_j)`; NaN where masked.
    pub fn get(&self, j: usize, i: usize) -> f64 {
        self.values[j * self.alpha.len() + i]
    }

    pub fn is_masked(&self, j: usize, i: usize) -> bool {
        self.mask[j * self.alpha.len() + i]
    }

    pub fn row(&self, j: usize) -> &[f64] {
        let n = self.alpha.len();
        &self.values[j * n..(j + 1) * n]
    }

    pub fn row_masked(&self, j: usize) -> bool {
        let n = self.alpha.len();
        self.mask[j * n..(j + 1) * n].iter().any(|&m| m)
    }

    pub fn masked_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Masked sample coordinates `(α, t)`.
    pub fn masked_points(&self) -> Vec<(f64, f64)> {
        let n = self.alpha.len();
        self.mask
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(k, _)| (self.alpha[k % n], self.t[k / n]))
            .collect()
    }

    /// Index of the row whose time equals `t` (to within `1e-12` relative).
    pub fn row_index(&self, t: f64) -> Option<usize> {
        self.t
            .iter()
            .position(|&s| (s - t).abs() <= 1e-12 * t.abs().max(1.0))
    }

    /// CSV with columns `alpha,t,u,masked`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "alpha,t,u,masked")?;
        for (j, t) in self.t.iter().enumerate() {
            for (i, a) in self.alpha.iter().enumerate() {
                let masked = self.is_masked(j, i);
                let u = self.get(j, i);
                if masked {
                    writeln!(w, "{a},{t},nan,1")?;
                } else {
                    writeln!(w, "{a},{t},{u},0")?;
                }
            }
        }
        Ok(())
    }
}

/// Evaluates `u` on `alpha_grid × t_grid`, masking samples on or beyond `Σ`.
pub fn evaluate_field(
    profile: &Psi0Profile,
    b: &BoundaryIntegral,
    spec: &ProblemSpec,
    alpha_grid: &[f64],
    t_grid: &[f64],
) -> SolutionField {
    let n = alpha_grid.len();
    let psi: Vec<f64> = alpha_grid.iter().map(|&a| profile.value(a)).collect();
    let u0: Vec<f64> = alpha_grid.iter().map(|&a| spec.u0.value(a)).collect();
    let end = b.domain_end();

    let fill_row = |t: f64, out: &mut [(f64, bool, f64)]| {
        let inside = t >= 0.0 && t < end;
        let big_g = if inside { b.value(t) } else { f64::INFINITY };
        let g = if inside { b.g().value(t) } else { f64::INFINITY };
        for (i, slot) in out.iter_mut().enumerate() {
            let d = if psi[i] == 0.0 { 1.0 } else { 1.0 - 0.5 * psi[i] * big_g };
            *slot = if inside && d > SINGULAR_THRESHOLD {
                (u0[i] * g / (d * d), false, d.abs())
            } else {
                (f64::NAN, true, d.abs())
            };
        }
    };

    let mut cells = vec![(0.0, false, 0.0); n * t_grid.len()];
    if n > 0 {
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            cells
                .par_chunks_mut(n)
                .zip(t_grid.par_iter())
                .for_each(|(row, &t)| fill_row(t, row));
        }
        #[cfg(not(feature = "parallel"))]
        for (row, &t) in cells.chunks_mut(n).zip(t_grid) {
            fill_row(t, row);
        }
    }

    let denominator_min = cells.iter().map(|c| c.2).fold(f64::INFINITY, f64::min);
    SolutionField {
        alpha: alpha_grid.to_vec(),
        t: t_grid.to_vec(),
        values: cells.iter().map(|c| c.0).collect(),
        mask: cells.iter().map(|c| c.1).collect(),
        denominator_min,
    }
}

/// Samples of the curve `t̃(α) = G⁻¹(2/ψ₀(α))` on which the solution leaves the
/// classical regime.
#[derive(Clone, Debug, Serialize)]
pub struct SingularCurve {
    pub alpha: Vec<f64>,
    pub t: Vec<f64>,
    /// Sign of `dt̃/dα` from finite differences of the samples.
    pub slope_sign: Vec<i8>,
    /// Samples where the finite-difference sign contradicts `sign(-f)`.
    pub slope_mismatches: usize,
    /// `max |ψ₀ G(t̃) - 2|` over the samples.
    pub membership_residual: f64,
}

impl SingularCurve {
    /// Sample with the smallest `t̃`.
    pub fn earliest(&self) -> Option<(f64, f64)> {
        self.alpha
            .iter()
            .zip(&self.t)
            .min_by(|a, b| a.1.partial_cmp(b.1).expect("finite"))
            .map(|(&a, &t)| (a, t))
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "alpha,t_tilde,slope_sign")?;
        for ((a, t), s) in self.alpha.iter().zip(&self.t).zip(&self.slope_sign) {
            writeln!(w, "{a},{t},{s}")?;
        }
        Ok(())
    }
}

pub fn singular_curve(profile: &Psi0Profile, b: &BoundaryIntegral) -> Result<SingularCurve> {
    let m0 = profile.m0();
    if !(m0 > 0.0) {
        return Err(Error::EmptyCurve);
    }
    let nodes = profile.alpha_nodes();
    let values = profile.psi0.values();
    let weight = profile.weight_at_nodes();
    let mut alpha = Vec::new();
    let mut t = Vec::new();
    let mut expected = Vec::new();
    for (k, (&a, &psi)) in nodes.iter().zip(values).enumerate() {
        if psi <= CURVE_THRESHOLD * m0 {
            continue;
        }
        match invert_g(b, 2.0 / psi) {
            Ok(tt) => {
                alpha.push(a);
                t.push(tt);
                expected.push(weight.map_or(0, |w| sign(-w[k], 0.0)));
            }
            Err(Error::NoFiniteTime { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    if alpha.is_empty() {
        return Err(Error::EmptyCurve);
    }

    let n = alpha.len();
    let mut slope_sign = Vec::with_capacity(n);
    for k in 0..n {
        let (lo, hi) = match (k.checked_sub(1), k + 1 < n) {
            (Some(l), true) => (l, k + 1),
            (None, true) => (k, k + 1),
            (Some(l), false) => (l, k),
            (None, false) => (k, k),
        };
        let dt = t[hi] - t[lo];
        slope_sign.push(sign(dt, 1e-9 * t[k].abs().max(1e-12)));
    }
    let slope_mismatches = slope_sign
        .iter()
        .zip(&expected)
        .filter(|(s, e)| (**s as i32) * (**e as i32) < 0)
        .count();
    let membership_residual = alpha
        .iter()
        .zip(&t)
        .map(|(&a, &tt)| (profile.value(a) * b.value(tt) - 2.0).abs())
        .fold(0.0, f64::max);

    Ok(SingularCurve {
        alpha,
        t,
        slope_sign,
        slope_mismatches,
        membership_residual,
    })
}

fn sign(x: f64, tol: f64) -> i8 {
    if x > tol {
        1
    } else if x < -tol {
        -1
    } else {
        0
    }
}

/// Characteristic along which a data jump travels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum JumpAxis {
    /// Jump in `u₀` at `α = location`; travels along the vertical line `α = const`.
    Alpha,
    /// Jump in `g` at `t = location`; travels along the horizontal line `t = const`.
    Time,
}

/// Size of the transported jump `[u]` at the query point of the characteristic.
///
/// For [`JumpAxis::Alpha`] `query` is a time, for [`JumpAxis::Time`] it is an `α`.
pub fn jump_transport(
    profile: &Psi0Profile,
    b: &BoundaryIntegral,
    spec: &ProblemSpec,
    axis: JumpAxis,
    location: f64,
    size: f64,
    query: f64,
) -> Result<f64> {
    let (alpha, t) = match axis {
        JumpAxis::Alpha => (location, query),
        JumpAxis::Time => (query, location),
    };
    check_time(b, t)?;
    let d = denominator(profile, b, alpha, t);
    if !(d > SINGULAR_THRESHOLD) {
        return Err(Error::NearSingular { alpha, t, denominator: d });
    }
    let carrier = match axis {
        JumpAxis::Alpha => b.g().value(t),
        JumpAxis::Time => spec.u0.value(alpha),
    };
    Ok(size * carrier / (d * d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::problem::{build_g, build_psi0};

    fn setup(spec: &ProblemSpec, t_max: f64) -> (Psi0Profile, BoundaryIntegral) {
        (build_psi0(spec).unwrap(), build_g(spec, t_max).unwrap())
    }

    #[test]
    fn denominator_values() {
        let s = catalog::example2(513);
        let (p, b) = setup(&s, 3.0);
        assert_eq!(denominator(&p, &b, 0.3, 0.0), 1.0);
        assert_eq!(denominator(&p, &b, 0.5, 1.0), 0.75);
        let t_star = 0.5 * (33f64.sqrt() - 1.0);
        assert!(denominator(&p, &b, 0.5, t_star).abs() < 1e-9);
    }

    #[test]
    fn evaluate_u_examples() {
        let s = catalog::example2(513);
        let (p, b) = setup(&s, 3.0);
        let u = evaluate_u(&p, &b, &s, 0.5, 1.0).unwrap();
        // closed form (2t+1)/(1 - αt(t+1)(1-α)/2)^2 at (1/2, 1)
        let oracle = 3.0 / (1.0_f64 - 0.5 * 0.5 * 2.0 * 0.5).powi(2);
        assert!((u - oracle).abs() < 1e-13);
        assert_eq!(evaluate_u(&p, &b, &s, 0.37, 0.0).unwrap(), 1.0);
        let t_star = 0.5 * (33f64.sqrt() - 1.0);
        assert!(matches!(
            evaluate_u(&p, &b, &s, 0.5, t_star),
            Err(Error::NearSingular { .. })
        ));

        let s = ProblemSpec::new(
            crate::FunctionDescriptor::polynomial([1.0, -2.0]),
            crate::FunctionDescriptor::constant(1.0),
            crate::FunctionDescriptor::constant(1.0),
            129,
        )
        .unwrap();
        let (p, b) = setup(&s, 5.0);
        assert!((evaluate_u(&p, &b, &s, 0.5, 4.0).unwrap() - 4.0).abs() < 1e-13);
    }

    #[test]
    fn field_initial_row_and_boundaries() {
        let s = catalog::example2(65);
        let (p, b) = setup(&s, 2.0);
        let ts = [0.0, 0.5, 1.0, 2.0];
        let f = evaluate_field(&p, &b, &s, p.alpha_nodes(), &ts);
        for i in 0..f.n_alpha() {
            assert_eq!(f.get(0, i), s.u0.value(f.alpha[i]));
        }
        for (j, &t) in ts.iter().enumerate() {
            assert_eq!(f.get(j, 0), s.g.value(t));
            assert_eq!(f.get(j, f.n_alpha() - 1), s.g.value(t));
        }
        assert_eq!(f.masked_count(), 0);
    }

    #[test]
    fn singular_curve_example_two() {
        let s = catalog::example2(257);
        let (p, b) = setup(&s, 3.0);
        let c = singular_curve(&p, &b).unwrap();
        let (a, t) = c.earliest().unwrap();
        assert_eq!(a, 0.5);
        assert!((t - 0.5 * (33f64.sqrt() - 1.0)).abs() < 1e-12);
        assert!(c.membership_residual <= 1e-8);
        assert_eq!(c.slope_mismatches, 0);
        for (&a, &sg) in c.alpha.iter().zip(&c.slope_sign) {
            if a < 0.5 {
                assert_eq!(sg, -1);
            } else if a > 0.5 {
                assert_eq!(sg, 1);
            }
        }
    }

    #[test]
    fn empty_curve_for_nonpositive_psi0() {
        let s = catalog::example1(65);
        let (p, b) = setup(&s, 3.0);
        assert!(matches!(singular_curve(&p, &b), Err(Error::EmptyCurve)));
    }

    #[test]
    fn jump_transport_at_initial_time() {
        let s = catalog::example2(65);
        let (p, b) = setup(&s, 3.0);
        let j = jump_transport(&p, &b, &s, JumpAxis::Alpha, 0.3, 0.1, 0.0).unwrap();
        assert_eq!(j, 0.1);
        let j = jump_transport(&p, &b, &s, JumpAxis::Time, 0.5, 0.2, 0.0).unwrap();
        assert_eq!(j, 0.2);
        let t_star = 0.5 * (33f64.sqrt() - 1.0);
        assert!(jump_transport(&p, &b, &s, JumpAxis::Alpha, 0.5, 0.1, t_star).is_err());
    }
}
