//! Numerical checks of structural identities: the PDE residual of sampled fields,
//! the `α`-independence of `R(∂_t ln u)`, the Schwarzian derivative of `G`, and the
//! beta-function identity behind the `Lᵖ` constant.

use serde::Serialize;

use crate::error::{input, Error, Result};
use crate::generalized::{least_squares, Nonlinearity};
use crate::grid::{uniform_nodes, GridFunction};
use crate::problem::{build_g, build_psi0, ProblemSpec};
use crate::quadrature::tanh_sinh;
use crate::solver::{evaluate_field, SolutionField};
use crate::special::gamma;

/// Residual of `∂_{αt} ln u = f F(u)` at one resolution, or a refinement study.
#[derive(Clone, Debug, Serialize)]
pub struct ResidualReport {
    pub max_abs_residual: f64,
    pub h_alpha: f64,
    pub h_t: f64,
    /// `(h_alpha, h_t, max |residual|)` per level, coarsest first.
    pub levels: Vec<(f64, f64, f64)>,
    /// Slope of `log residual` against `log h_alpha`.
    pub convergence_order: Option<f64>,
    /// RMS deviation of the order fit.
    pub fit_residual: Option<f64>,
}

fn uniform_step(nodes: &[f64], what: &str) -> Result<f64> {
    if nodes.len() < 3 {
        return input(format!("{what} grid needs at least three nodes"));
    }
    GridFunction::new(nodes.to_vec(), vec![0.0; nodes.len()])?
        .uniform_step()
        .ok_or_else(|| Error::Input(format!("{what} grid must be uniform")))
}

/// Max over interior nodes of the 4-point centered mixed difference of `ln u`
/// minus `f F(u)` (identity `F` by default).
pub fn pde_residual(field: &SolutionField, spec: &ProblemSpec, nl: Option<&Nonlinearity>) -> Result<ResidualReport> {
    if let Some(&(alpha, t)) = field.masked_points().first() {
        return Err(Error::NearSingular {
            alpha,
            t,
            denominator: f64::NAN,
        });
    }
    let ha = uniform_step(&field.alpha, "alpha")?;
    let ht = uniform_step(&field.t, "t")?;
    let identity = Nonlinearity::Identity;
    let nl = nl.unwrap_or(&identity);
    let ln = |j: usize, i: usize| field.get(j, i).ln();
    let mut max = 0.0_f64;
    for j in 1..field.n_t() - 1 {
        for i in 1..field.n_alpha() - 1 {
            let mixed = (ln(j + 1, i + 1) - ln(j - 1, i + 1) - ln(j + 1, i - 1) + ln(j - 1, i - 1)) / (4.0 * ha * ht);
            let r = mixed - spec.f.value(field.alpha[i]) * nl.value(field.get(j, i));
            max = max.max(r.abs());
        }
    }
    Ok(ResidualReport {
        max_abs_residual: max,
        h_alpha: ha,
        h_t: ht,
        levels: vec![(ha, ht, max)],
        convergence_order: None,
        fit_residual: None,
    })
}

/// Refinement study of the closed-form field on `alpha_window × t_window`, starting
/// from `base` cells per direction and halving both spacings `levels - 1` times.
pub fn residual_convergence(
    spec: &ProblemSpec,
    alpha_window: (f64, f64),
    t_window: (f64, f64),
    base: usize,
    levels: usize,
) -> Result<ResidualReport> {
    if levels < 3 {
        return input("a convergence study needs at least three levels");
    }
    let profile = build_psi0(spec)?;
    let b = build_g(spec, t_window.1)?;
    let mut rows = Vec::with_capacity(levels);
    for k in 0..levels {
        let cells = base << k;
        let alpha = uniform_nodes(alpha_window.0, alpha_window.1, cells + 1)?;
        let t = uniform_nodes(t_window.0, t_window.1, cells + 1)?;
        let field = evaluate_field(&profile, &b, spec, &alpha, &t);
        let r = pde_residual(&field, spec, None)?;
        rows.push((r.h_alpha, r.h_t, r.max_abs_residual));
    }
    let pts: Vec<(f64, f64)> = rows.iter().map(|&(h, _, r)| (h.ln(), r.ln())).collect();
    let (order, b0) = least_squares(&pts).ok_or_else(|| Error::Input("degenerate refinement".into()))?;
    let fit = (pts.iter().map(|&(x, y)| (y - order * x - b0).powi(2)).sum::<f64>() / pts.len() as f64).sqrt();
    let &(ha, ht, max) = rows.last().expect("levels >= 3");
    Ok(ResidualReport {
        max_abs_residual: max,
        h_alpha: ha,
        h_t: ht,
        levels: rows,
        convergence_order: Some(order),
        fit_residual: Some(fit),
    })
}

/// `R(v) = v̇ - ½ v²`.
#[derive(Clone, Debug, Serialize)]
pub struct RInvariance {
    pub t: f64,
    /// `(α, R(∂_t ln u))` at the checked nodes.
    pub interior: Vec<(f64, f64)>,
    /// `R(d ln g/dt)` from the `α = 0` column.
    pub boundary: f64,
    pub max_discrepancy: f64,
}

/// Compares `R(∂_t ln u)` at the nodes nearest to `alphas` with its boundary value,
/// using centered differences in `t` around the row at `t`.
pub fn r_invariance(field: &SolutionField, alphas: &[f64], t: f64) -> Result<RInvariance> {
    let ht = uniform_step(&field.t, "t")?;
    let j = field
        .row_index(t)
        .ok_or_else(|| Error::Input(format!("t = {t} is not a row of the field")))?;
    if j == 0 || j + 1 >= field.n_t() {
        return input("r_invariance needs rows on both sides of t");
    }
    let r_at = |i: usize| -> Result<f64> {
        for jj in [j - 1, j, j + 1] {
            if field.is_masked(jj, i) {
                return Err(Error::NearSingular {
                    alpha: field.alpha[i],
                    t: field.t[jj],
                    denominator: f64::NAN,
                });
            }
        }
        let (l0, l1, l2) = (field.get(j - 1, i).ln(), field.get(j, i).ln(), field.get(j + 1, i).ln());
        let v = (l2 - l0) / (2.0 * ht);
        let dv = (l2 - 2.0 * l1 + l0) / (ht * ht);
        Ok(dv - 0.5 * v * v)
    };
    let boundary = r_at(0)?;
    let mut interior = Vec::with_capacity(alphas.len());
    let mut max_discrepancy = 0.0_f64;
    for &a in alphas {
        let i = (0..field.n_alpha())
            .min_by(|&x, &y| {
                (field.alpha[x] - a)
                    .abs()
                    .partial_cmp(&(field.alpha[y] - a).abs())
                    .expect("finite nodes")
            })
            .ok_or_else(|| Error::Input("empty alpha grid".into()))?;
        let r = r_at(i)?;
        max_discrepancy = max_discrepancy.max((r - boundary).abs());
        interior.push((field.alpha[i], r));
    }
    Ok(RInvariance {
        t,
        interior,
        boundary,
        max_discrepancy,
    })
}

/// Schwarzian derivative `S(G) = G'''/G' - (3/2)(G''/G')²` of uniform samples.
#[derive(Clone, Debug, Serialize)]
pub struct Schwarzian {
    /// Cross-ratio estimate, exact for Möbius maps up to rounding.
    pub estimate: GridFunction,
    /// `R((ln Ġ)')` with three-point differences.
    pub three_point: GridFunction,
    /// Five-point derivative stencils.
    pub five_point: GridFunction,
    /// Largest gap between the cross-ratio and five-point estimates.
    pub max_disagreement: f64,
}

fn cross_ratio(a: f64, b: f64, c: f64, d: f64) -> f64 {
    ((a - c) * (b - d)) / ((a - d) * (b - c))
}

/// Estimates `S(G)` at every node with two neighbours on each side.
///
/// The primary estimate uses the cross ratio of `G` at `t - 2h, t - h, t + h, t + 2h`,
/// which Möbius maps preserve; its expansion is `CR(G)/CR(t) = 1 + h² S / 6 + O(h⁴)`.
pub fn schwarzian(samples: &GridFunction) -> Result<Schwarzian> {
    let n = samples.len();
    if n < 5 {
        return input("the Schwarzian needs at least five samples");
    }
    let h = samples
        .uniform_step()
        .ok_or_else(|| Error::Input("Schwarzian samples must be uniform".into()))?;
    let g = samples.values();
    if g.windows(2).any(|w| !(w[1] > w[0])) {
        return input("G must be strictly increasing");
    }
    let base = cross_ratio(-2.0, -1.0, 1.0, 2.0);
    let mut nodes = Vec::with_capacity(n - 4);
    let mut cr = Vec::with_capacity(n - 4);
    let mut three = Vec::with_capacity(n - 4);
    let mut five = Vec::with_capacity(n - 4);
    let w = |i: usize| ((g[i + 1] - g[i - 1]) / (2.0 * h)).ln();
    for i in 2..n - 2 {
        nodes.push(samples.nodes()[i]);
        let (gm2, gm1, g0, g1, g2) = (g[i - 2], g[i - 1], g[i], g[i + 1], g[i + 2]);
        cr.push(6.0 * (cross_ratio(gm2, gm1, g1, g2) / base - 1.0) / (h * h));

        let (w0, w1, w2) = (w(i - 1), w(i), w(i + 1));
        let dw = (w2 - w0) / (2.0 * h);
        three.push((w2 - 2.0 * w1 + w0) / (h * h) - 0.5 * dw * dw);

        let d1 = (gm2 - 8.0 * gm1 + 8.0 * g1 - g2) / (12.0 * h);
        let d2 = (-gm2 + 16.0 * gm1 - 30.0 * g0 + 16.0 * g1 - g2) / (12.0 * h * h);
        let d3 = (-gm2 + 2.0 * gm1 - 2.0 * g1 + g2) / (2.0 * h * h * h);
        five.push(d3 / d1 - 1.5 * (d2 / d1).powi(2));
    }
    let max_disagreement = cr.iter().zip(&five).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(Schwarzian {
        estimate: GridFunction::new(nodes.clone(), cr)?,
        three_point: GridFunction::new(nodes.clone(), three)?,
        five_point: GridFunction::new(nodes, five)?,
        max_disagreement,
    })
}

/// Samples of `G` on `[a - 2h, b + 2h]` with `h = 1e-3 (b - a)`, so the Schwarzian
/// estimate covers `[a, b]`.
pub fn schwarzian_samples(g: impl Fn(f64) -> f64, a: f64, b: f64) -> Result<GridFunction> {
    let cells = 1000;
    let h = (b - a) / cells as f64;
    GridFunction::sample(a - 2.0 * h, b + 2.0 * h, cells + 5, g)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GammaIdentity {
    pub q: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub diff: f64,
}

/// `2∫₀^{π/2} cos^{3-2/q}θ sin^{2/q-1}θ dθ` against `q Γ(1 + 1/q) Γ(2 - 1/q)`.
pub fn gamma_identity(q: f64) -> Result<GammaIdentity> {
    if !(q > 0.5) || !q.is_finite() {
        return Err(Error::Domain(format!("q = {q} must exceed 1/2")));
    }
    let (ec, es) = (3.0 - 2.0 / q, 2.0 / q - 1.0);
    // near θ = 0 use sin θ = sin(θ - 0), near π/2 use cos θ = sin(π/2 - θ)
    let lhs = 2.0
        * tanh_sinh(
            |_, da, db| db.sin().powf(ec) * da.sin().powf(es),
            0.0,
            std::f64::consts::FRAC_PI_2,
            1e-15,
        );
    let rhs = q * gamma(1.0 + 1.0 / q) * gamma(2.0 - 1.0 / q);
    Ok(GammaIdentity {
        q,
        lhs,
        rhs,
        diff: (lhs - rhs).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::function::FunctionDescriptor as F;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn residual_order_example_one() {
        let s = catalog::example1(65);
        let r = residual_convergence(&s, (0.1, 0.9), (0.1, 2.0), 64, 4).unwrap();
        let q = r.convergence_order.unwrap();
        assert!((1.8..=2.2).contains(&q), "order {q}: {:?}", r.levels);
    }

    #[test]
    fn residual_vanishes_for_alpha_independent_field() {
        let s = ProblemSpec::new(F::constant(0.0), F::constant(1.0), F::polynomial([1.0, 1.0]), 33).unwrap();
        let alpha = uniform_nodes(0.0, 1.0, 9).unwrap();
        let t = uniform_nodes(0.0, 1.0, 9).unwrap();
        let values = t.iter().flat_map(|&tt| alpha.iter().map(move |_| 1.0 + tt)).collect();
        let field = SolutionField::from_rows(alpha, t, values).unwrap();
        assert_eq!(pde_residual(&field, &s, None).unwrap().max_abs_residual, 0.0);
    }

    #[test]
    fn r_invariance_example_two() {
        let s = catalog::example2(257);
        let p = build_psi0(&s).unwrap();
        let b = build_g(&s, 2.0).unwrap();
        let mut prev = None;
        for k in 0..3 {
            let h = 1e-2 / (1 << k) as f64;
            let t = [1.0 - h, 1.0, 1.0 + h];
            let f = evaluate_field(&p, &b, &s, p.alpha_nodes(), &t);
            let r = r_invariance(&f, &[0.2, 0.5, 0.8], 1.0).unwrap();
            if let Some(e) = prev {
                let ratio: f64 = e / r.max_discrepancy;
                assert!(ratio > 3.5, "ratio {ratio}");
            }
            prev = Some(r.max_discrepancy);
        }
    }

    #[test]
    fn schwarzian_of_mobius_and_quadratic() {
        let s = schwarzian(&schwarzian_samples(|t| t / (1.0 - t), 0.0, 0.9).unwrap()).unwrap();
        let worst = s.estimate.values().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        assert!(worst < 1e-6, "{worst}");

        let s = schwarzian(&schwarzian_samples(|t| t * t + t, 0.0, 1.0).unwrap()).unwrap();
        assert!((s.estimate.values()[0] + 6.0).abs() < 1e-4);
        assert!((s.five_point.values()[0] + 6.0).abs() < 1e-4);
        assert!((s.three_point.values()[0] + 6.0).abs() < 1e-3);
    }

    #[test]
    fn schwarzian_rejects_bad_samples() {
        let g = GridFunction::sample(0.0, 1.0, 4, |t| t).unwrap();
        assert!(schwarzian(&g).is_err());
        let g = GridFunction::sample(0.0, 1.0, 9, |t| -t).unwrap();
        assert!(schwarzian(&g).is_err());
    }

    #[test]
    fn gamma_identity_values() {
        let r = gamma_identity(2.0).unwrap();
        assert!((r.lhs - FRAC_PI_2).abs() < 1e-12);
        assert!((r.rhs - FRAC_PI_2).abs() < 1e-12);
        let r = gamma_identity(1.0).unwrap();
        assert!((r.lhs - 1.0).abs() < 1e-12 && (r.rhs - 1.0).abs() < 1e-12);
        assert!(gamma_identity(0.75).unwrap().diff <= 1e-8);
        assert!(gamma_identity(0.5).is_err());
    }
}
