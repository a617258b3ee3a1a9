//! Global existence versus finite-time blow-up, blow-up times and final profiles,
//! the singular-boundary taxonomy in `β`, and `Lᵖ` blow-up asymptotics.

use serde::Serialize;

use crate::error::{input, Error, Result};
use crate::generalized::least_squares;
use crate::grid::GridFunction;
use crate::problem::{invert_g, BoundaryIntegral, ProblemSpec, Psi0Profile, FEATURE_TOLERANCE, ZERO_SET_TOLERANCE};
use crate::quadrature::simpson;
use crate::solver::SolutionField;
use crate::special::gamma;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Global,
    FiniteBlowup,
    /// Earliest divergence is the one imposed by singular boundary data, at `t_b`.
    BoundaryInducedBlowup,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BetaCase {
    /// `β = 1`: `G` is fractional linear.
    Threshold,
    Below,
    Above,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum LimitKind {
    Finite,
    Zero,
    Infinite,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProfileLimit {
    pub alpha: f64,
    pub limit: LimitKind,
}

#[derive(Clone, Debug, Serialize)]
pub struct RegularityReport {
    pub verdict: Verdict,
    /// Set when the verdict rests on an extrapolated `G∞`.
    pub estimate: bool,
    pub m0: f64,
    pub t_star: Option<f64>,
    pub blowup_locations: Vec<f64>,
    /// Limiting values `C(α)` at grid nodes away from the blow-up set, when finite.
    pub final_profile: Option<GridFunction>,
    pub beta_case: Option<BetaCase>,
    pub profile_limits: Vec<ProfileLimit>,
    /// `g(t*)`, or `t_b` for boundary-induced blow-up.
    pub g_at_t_star: Option<f64>,
    /// `t_b` of singular boundary data.
    pub boundary_blowup_time: Option<f64>,
    /// `(f u₀)' > 0` on `[0, 1]`, which forces `M₀ = 0`.
    pub global_condition_fired: bool,
    /// Sign conditions on `f u₀'` and `(f u₀)'` that force `M₀ > 0`.
    pub blowup_condition_fired: bool,
}

impl RegularityReport {
    /// Limit of `u(α, t)` as `t ↑ t*` at an arbitrary `α` away from the blow-up set,
    /// evaluated from the exact `ψ₀` rather than the stored grid profile.
    pub fn final_profile_at(&self, profile: &Psi0Profile, spec: &ProblemSpec, alpha: f64) -> Option<f64> {
        let psi = profile.value(alpha);
        let u0 = spec.u0.value(alpha);
        match self.verdict {
            Verdict::Global => None,
            Verdict::FiniteBlowup => {
                let m0 = self.m0;
                if m0 - psi <= FEATURE_TOLERANCE {
                    return None;
                }
                Some(self.g_at_t_star? * u0 / (1.0 - psi / m0).powi(2))
            }
            Verdict::BoundaryInducedBlowup => {
                let tb = self.boundary_blowup_time?;
                match self.beta_case? {
                    BetaCase::Threshold if psi < 0.0 => Some(4.0 * u0 / (tb * psi).powi(2)),
                    BetaCase::Above if psi < 0.0 => Some(0.0),
                    BetaCase::Below if psi < 0.0 => Some(f64::INFINITY),
                    _ => None,
                }
            }
        }
    }
}

fn global_condition(spec: &ProblemSpec, nodes: &[f64]) -> bool {
    nodes
        .iter()
        .all(|&a| spec.f.value(a) * spec.u0.derivative(a) + spec.f.derivative(a) * spec.u0.value(a) > 0.0)
}

fn blowup_condition(spec: &ProblemSpec, nodes: &[f64], alpha0: Option<f64>) -> bool {
    let Some(alpha0) = alpha0 else { return false };
    let tol = 1e-12;
    let n = nodes.len();
    let first: Vec<bool> = nodes
        .iter()
        .map(|&a| spec.f.value(a) * spec.u0.derivative(a) <= tol)
        .collect();
    let second: Vec<bool> = nodes
        .iter()
        .map(|&a| spec.f.value(a) * spec.u0.derivative(a) + spec.f.derivative(a) * spec.u0.value(a) >= -tol)
        .collect();
    let fv: Vec<f64> = nodes.iter().map(|&a| spec.f.value(a)).collect();
    // suffix[i]: second condition on nodes[i..] and f vanishes somewhere in [nodes[i], 1]
    let mut suffix_ok = vec![false; n + 1];
    let mut suffix_zero = vec![false; n + 1];
    suffix_ok[n] = true;
    for i in (0..n).rev() {
        suffix_ok[i] = suffix_ok[i + 1] && second[i];
        let crosses = i + 1 < n && fv[i] * fv[i + 1] < 0.0;
        suffix_zero[i] = suffix_zero[i + 1] || fv[i].abs() <= tol || crosses;
    }
    let mut prefix_ok = true;
    for i in 0..n {
        prefix_ok &= first[i];
        if !prefix_ok {
            break;
        }
        if nodes[i] > alpha0 && suffix_ok[i] && suffix_zero[i] {
            return true;
        }
    }
    false
}

/// Classifies the closed-form solution of the problem.
///
/// Singular boundary data are dispatched to [`singular_boundary_report`].
pub fn classify(profile: &Psi0Profile, b: &BoundaryIntegral, spec: &ProblemSpec) -> Result<RegularityReport> {
    if spec.singular_boundary().is_some() {
        return singular_boundary_report(profile, spec);
    }
    let nodes = profile.alpha_nodes();
    let global_condition_fired = global_condition(spec, nodes);
    let blowup_condition_fired = blowup_condition(spec, nodes, profile.features.alpha0);
    let m0 = profile.m0();
    let mut report = RegularityReport {
        verdict: Verdict::Global,
        estimate: false,
        m0,
        t_star: None,
        blowup_locations: Vec::new(),
        final_profile: None,
        beta_case: None,
        profile_limits: Vec::new(),
        g_at_t_star: None,
        boundary_blowup_time: None,
        global_condition_fired,
        blowup_condition_fired,
    };
    if m0 == 0.0 {
        return Ok(report);
    }
    let t_star = match invert_g(b, 2.0 / m0) {
        Ok(t) => t,
        Err(Error::NoFiniteTime { .. }) => {
            report.estimate = b.g_infinity_estimated;
            return Ok(report);
        }
        Err(e) => return Err(e),
    };
    report.estimate = b.g_infinity_estimated;
    report.verdict = Verdict::FiniteBlowup;
    report.t_star = Some(t_star);
    report.blowup_locations = profile.features.argmax_set.clone();
    report.g_at_t_star = Some(b.g().value(t_star));
    fill_finite_profile(&mut report, profile, spec)?;
    Ok(report)
}

fn fill_finite_profile(report: &mut RegularityReport, profile: &Psi0Profile, spec: &ProblemSpec) -> Result<()> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &a in profile.alpha_nodes() {
        if let Some(c) = report.final_profile_at(profile, spec, a) {
            xs.push(a);
            ys.push(c);
            report.profile_limits.push(ProfileLimit {
                alpha: a,
                limit: LimitKind::Finite,
            });
        }
    }
    if !xs.is_empty() {
        report.final_profile = Some(GridFunction::new(xs, ys)?);
    }
    Ok(())
}

/// Report for singular boundary data `g = (1 - t/t_b)^{-(1+β)}`.
///
/// Times are computed for `t_b = 1` with `ψ₀` replaced by `t_b ψ₀` and scaled back.
pub fn singular_boundary_report(profile: &Psi0Profile, spec: &ProblemSpec) -> Result<RegularityReport> {
    let Some((beta, t_b)) = spec.singular_boundary() else {
        return input("boundary data are not of singular_boundary kind");
    };
    if !(beta > 0.0) {
        return input(format!("beta must be positive, got {beta}"));
    }
    let nodes = profile.alpha_nodes();
    let m0 = profile.m0();
    let beta_case = if beta == 1.0 {
        BetaCase::Threshold
    } else if beta < 1.0 {
        BetaCase::Below
    } else {
        BetaCase::Above
    };
    let mut report = RegularityReport {
        verdict: Verdict::BoundaryInducedBlowup,
        estimate: false,
        m0,
        t_star: Some(t_b),
        blowup_locations: profile.features.omega.clone(),
        final_profile: None,
        beta_case: Some(beta_case),
        profile_limits: Vec::new(),
        g_at_t_star: None,
        boundary_blowup_time: Some(t_b),
        global_condition_fired: global_condition(spec, nodes),
        blowup_condition_fired: blowup_condition(spec, nodes, profile.features.alpha0),
    };

    if m0 > 0.0 {
        let m = t_b * m0;
        let s = if beta == 1.0 {
            2.0 / (2.0 + m)
        } else {
            1.0 - (m / (2.0 * beta + m)).powf(1.0 / beta)
        };
        let t_star = t_b * s;
        report.verdict = Verdict::FiniteBlowup;
        report.t_star = Some(t_star);
        report.blowup_locations = profile.features.argmax_set.clone();
        report.g_at_t_star = Some(spec.g.value(t_star));
        fill_finite_profile(&mut report, profile, spec)?;
        return Ok(report);
    }

    let zero_tol = ZERO_SET_TOLERANCE * profile.psi0.max_abs();
    let limit = match beta_case {
        BetaCase::Threshold => LimitKind::Finite,
        BetaCase::Above => LimitKind::Zero,
        BetaCase::Below => LimitKind::Infinite,
    };
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&a, &psi) in nodes.iter().zip(profile.psi0.values()) {
        if psi.abs() <= zero_tol {
            continue;
        }
        report.profile_limits.push(ProfileLimit { alpha: a, limit });
        if let (LimitKind::Finite, Some(c)) = (limit, report.final_profile_at(profile, spec, a)) {
            xs.push(a);
            ys.push(c);
        }
    }
    if !xs.is_empty() {
        report.final_profile = Some(GridFunction::new(xs, ys)?);
    }
    Ok(report)
}

/// Norm selector for [`lp_norm`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Norm {
    P(f64),
    Infinity,
}

impl std::str::FromStr for Norm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if matches!(s, "inf" | "infinity" | "Inf" | "∞") {
            return Ok(Norm::Infinity);
        }
        let p: f64 = s.parse().map_err(|_| Error::Input(format!("not a norm exponent: {s}")))?;
        if !(p >= 1.0) {
            return input(format!("p must be at least 1, got {p}"));
        }
        if p.is_infinite() {
            return Ok(Norm::Infinity);
        }
        Ok(Norm::P(p))
    }
}

impl std::fmt::Display for Norm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Norm::P(p) => write!(f, "{p}"),
            Norm::Infinity => write!(f, "inf"),
        }
    }
}

/// `‖u(·, t)‖_p` on the row of `field` at time `t` (Simpson in `α`; grid maximum
/// with one parabolic refinement for `p = ∞`).
pub fn lp_norm(field: &SolutionField, norm: Norm, t: f64) -> Result<f64> {
    let j = field
        .row_index(t)
        .ok_or_else(|| Error::Input(format!("t = {t} is not a row of the field")))?;
    if field.row_masked(j) {
        let i = (0..field.n_alpha()).find(|&i| field.is_masked(j, i)).unwrap_or(0);
        return Err(Error::NearSingular {
            alpha: field.alpha[i],
            t,
            denominator: f64::NAN,
        });
    }
    row_norm(&field.alpha, field.row(j), norm)
}

pub(crate) fn row_norm(alpha: &[f64], row: &[f64], norm: Norm) -> Result<f64> {
    let n = row.len();
    if n < 3 {
        return input("at least three alpha samples are needed");
    }
    match norm {
        Norm::Infinity => {
            let i = (0..n).fold(0, |k, i| if row[i].abs() > row[k].abs() { i } else { k });
            let y1 = row[i].abs();
            if i == 0 || i == n - 1 {
                return Ok(y1);
            }
            let (y0, y2) = (row[i - 1].abs(), row[i + 1].abs());
            let curvature = y0 - 2.0 * y1 + y2;
            if curvature < 0.0 {
                Ok(y1 - (y0 - y2).powi(2) / (8.0 * curvature))
            } else {
                Ok(y1)
            }
        }
        Norm::P(p) => {
            let h = GridFunction::new(alpha.to_vec(), row.to_vec())?
                .uniform_step()
                .ok_or_else(|| Error::Input("lp_norm needs a uniform alpha grid".into()))?;
            let w: Vec<f64> = row.iter().map(|v| v.abs().powf(p)).collect();
            Ok(simpson(&w, h).powf(1.0 / p))
        }
    }
}

/// Leading-order `Lᵖ` blow-up: `∫ dα / (1 - ½ G ψ₀)² ≈ C (G(t*) - G)^{-exponent}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LpAsymptotic {
    pub constant: f64,
    pub exponent: f64,
}

pub fn lp_asymptotic_constant(m0: f64, c1: f64, q: f64) -> Result<LpAsymptotic> {
    if !(q > 0.5) {
        return Err(Error::Hypothesis(format!("cusp exponent q = {q} must exceed 1/2")));
    }
    if !(m0 > 0.0) || !(c1 < 0.0) {
        return input(format!("need M0 > 0 and C1 < 0, got M0 = {m0}, C1 = {c1}"));
    }
    let constant =
        8.0 / (m0 * m0) * (m0 * m0 / (2.0 * c1.abs())).powf(1.0 / q) * gamma(1.0 + 1.0 / q) * gamma(2.0 - 1.0 / q);
    Ok(LpAsymptotic {
        constant,
        exponent: 2.0 - 1.0 / q,
    })
}

/// Local model `ψ₀ ≈ M₀ + C₁ |α - ᾱ|^q` fitted around one maximizer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CuspModel {
    pub q: f64,
    pub c1: f64,
    pub alpha_bar: f64,
    pub r: f64,
    /// RMS residual of the log-log fit.
    pub residual: f64,
}

pub const DEFAULT_FIT_RADIUS: f64 = 0.1;

/// One cusp fit per maximizer of `ψ₀`.
pub fn fit_cusp(profile: &Psi0Profile) -> Result<Vec<CuspModel>> {
    let m0 = profile.m0();
    if !(m0 > 0.0) {
        return Err(Error::Hypothesis("psi_0 has no positive maximum".into()));
    }
    profile
        .features
        .argmax_set
        .iter()
        .map(|&a| fit_one(profile, m0, a))
        .collect()
}

fn fit_one(profile: &Psi0Profile, m0: f64, alpha_bar: f64) -> Result<CuspModel> {
    let nodes = profile.alpha_nodes();
    let values = profile.psi0.values();
    let mut r = DEFAULT_FIT_RADIUS;
    let mut best: Option<CuspModel> = None;
    loop {
        let pts: Vec<(f64, f64)> = nodes
            .iter()
            .zip(values)
            .filter_map(|(&a, &v)| {
                let dx = (a - alpha_bar).abs();
                let gap = m0 - v;
                (dx > 0.0 && dx <= r && gap > 1e-14 * m0).then(|| (dx.ln(), gap.ln()))
            })
            .collect();
        if pts.len() < 5 {
            break;
        }
        let (q, b) = least_squares(&pts).ok_or_else(|| Error::Input("degenerate cusp fit".into()))?;
        let residual = (pts.iter().map(|&(x, y)| (y - q * x - b).powi(2)).sum::<f64>() / pts.len() as f64).sqrt();
        let model = CuspModel {
            q,
            c1: -b.exp(),
            alpha_bar,
            r,
            residual,
        };
        let done = residual <= 1e-2;
        best = Some(model);
        if done {
            break;
        }
        r *= 0.5;
    }
    best.ok_or_else(|| Error::Input(format!("too few samples near alpha = {alpha_bar} for a cusp fit")))
}
