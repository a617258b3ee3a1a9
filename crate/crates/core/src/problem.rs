//! Problem instances and the two primitive integrals every formula depends on:
//! the initial weight integral `ψ₀(α) = ∫₀^α f u₀` and the boundary accumulator
//! `G(t) = ∫₀^t g`.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::function::{FunctionDescriptor, FunctionKind, StepPolynomial};
use crate::generalized::Scenario;
use crate::grid::{uniform_nodes, GridFunction};
use crate::quadrature::{cumulative_simpson, simpson_fn};
use crate::special::bisect;

/// Relative tolerance of the compatibility check `|∫ f u₀| ≤ tol · ‖f u₀‖∞`.
pub const COMPATIBILITY_TOLERANCE: f64 = 1e-8;
/// Zero-set tolerance, relative to `max |ψ₀|`.
pub const ZERO_SET_TOLERANCE: f64 = 1e-6;
/// Absolute tolerance for membership in the argmax set after refinement.
pub const FEATURE_TOLERANCE: f64 = 1e-9;
/// Smallest admissible α-grid.
pub const MIN_N_ALPHA: usize = 32;
pub const DEFAULT_N_ALPHA: usize = 513;
/// Default number of stored samples of `G`.
pub const DEFAULT_T_SAMPLES: usize = 2049;

fn default_n_alpha() -> usize {
    DEFAULT_N_ALPHA
}

/// Factors applied on ingestion so that `u₀(0) = 1` and `g(0) = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub u0_divided_by: f64,
    pub g_divided_by: f64,
}

impl Default for Normalization {
    fn default() -> Self {
        Self {
            u0_divided_by: 1.0,
            g_divided_by: 1.0,
        }
    }
}

impl Normalization {
    pub fn is_identity(&self) -> bool {
        self.u0_divided_by == 1.0 && self.g_divided_by == 1.0
    }
}

/// The data `(f, u₀, g)` of the initial periodic-boundary value problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub f: FunctionDescriptor,
    pub u0: FunctionDescriptor,
    pub g: FunctionDescriptor,
    #[serde(default = "default_n_alpha")]
    pub n_alpha: usize,
    /// Scenario for the generalized equation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub general: Option<Scenario>,
    #[serde(skip)]
    pub normalization: Normalization,
}

impl ProblemSpec {
    /// Validates the data and rescales `u₀`, `g` so that `u₀(0) = g(0) = 1`.
    pub fn new(f: FunctionDescriptor, u0: FunctionDescriptor, g: FunctionDescriptor, n_alpha: usize) -> Result<Self> {
        Self {
            f,
            u0,
            g,
            n_alpha,
            general: None,
            normalization: Normalization::default(),
        }
        .prepared()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text).map_err(|e| Error::Input(format!("problem spec: {e}")))?;
        spec.prepared()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    pub fn with_general(mut self, scenario: Scenario) -> Self {
        self.general = Some(scenario);
        self
    }

    pub fn with_n_alpha(mut self, n_alpha: usize) -> Self {
        self.n_alpha = n_alpha;
        self
    }

    fn prepared(mut self) -> Result<Self> {
        self.f.validate()?;
        self.u0.validate()?;
        self.g.validate()?;
        if self.n_alpha < 3 {
            return input(format!("n_alpha = {} is too small", self.n_alpha));
        }
        if self.u0.blowup_point().is_some() {
            return input("u0 must be bounded on [0, 1]");
        }
        if self.f.blowup_point().is_some() {
            return input("f must be bounded on [0, 1]");
        }
        let u00 = self.u0.value(0.0);
        let g0 = self.g.value(0.0);
        if !(u00 > 0.0) || !(g0 > 0.0) {
            return input(format!("u0(0) = {u00} and g(0) = {g0} must be positive"));
        }
        if u00 != 1.0 {
            warn!("rescaling u0 by 1/{u00} so that u0(0) = 1");
            self.u0 = self.u0.scaled(1.0 / u00);
            self.normalization.u0_divided_by *= u00;
        }
        if g0 != 1.0 {
            warn!("rescaling g by 1/{g0} so that g(0) = 1");
            self.g = self.g.scaled(1.0 / g0);
            self.normalization.g_divided_by *= g0;
        }
        let alphas = uniform_nodes(0.0, 1.0, self.n_alpha)?;
        if let Some(a) = alphas.iter().find(|&&a| !(self.u0.value(a) > 0.0)) {
            return input(format!("u0 must be positive on [0, 1]; u0({a}) = {}", self.u0.value(*a)));
        }
        if let Some(a) = alphas.iter().find(|&&a| !self.f.value(a).is_finite()) {
            return input(format!("f({a}) is not finite"));
        }
        let horizon = self.g.blowup_point().map_or(10.0, |tb| 0.999 * tb);
        for t in uniform_nodes(0.0, horizon, 1001)? {
            let v = self.g.value(t);
            if !(v > 0.0 && v.is_finite()) {
                return input(format!("g must be positive and finite; g({t}) = {v}"));
            }
        }
        if let Some(s) = &self.general {
            s.validate()?;
        }
        Ok(self)
    }

    pub fn alpha_nodes(&self) -> Vec<f64> {
        uniform_nodes(0.0, 1.0, self.n_alpha).expect("n_alpha validated")
    }

    /// Exact piecewise-polynomial form of `f·u₀`, when both factors admit one.
    pub fn weight_step_polynomial(&self) -> Option<StepPolynomial> {
        Some(self.f.step_polynomial()?.mul(&self.u0.step_polynomial()?))
    }

    /// Singular boundary parameters `(β, t_b)` if `g` belongs to that family.
    pub fn singular_boundary(&self) -> Option<(f64, f64)> {
        match self.g.kind {
            FunctionKind::SingularBoundary { beta, t_b } => Some((beta, t_b)),
            _ => None,
        }
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let digest = Sha256::digest(serde_json::to_string(self).expect("spec serializes").as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// How to build an integral when a closed form is available.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Quadrature {
    /// Exact antiderivative when the catalog allows it, Simpson otherwise.
    #[default]
    Auto,
    /// Always use composite Simpson.
    Simpson,
}

/// Features of `ψ₀` that control regularity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Features {
    pub m0: f64,
    pub argmax_set: Vec<f64>,
    pub omega: Vec<f64>,
    /// First zero of `f` in `(0, 1)`.
    pub alpha0: Option<f64>,
}

/// Sampled `ψ₀` with its extracted features.
#[derive(Clone, Debug, Serialize)]
pub struct Psi0Profile {
    pub psi0: GridFunction,
    #[serde(skip)]
    slopes: Option<Vec<f64>>,
    #[serde(skip)]
    exact: Option<ExactPsi>,
    #[serde(flatten)]
    pub features: Features,
}

#[derive(Clone, Debug)]
struct ExactPsi {
    poly: StepPolynomial,
    /// Subtracted constant (`ψ₀(1)` for the right-hand construction).
    shift: f64,
}

impl Psi0Profile {
    /// Profile from bare samples (no derivative information, no `f`).
    pub fn from_samples(psi0: GridFunction) -> Self {
        let features = features_from(&psi0, None, &|x| psi0.value(x), None);
        Self {
            psi0,
            slopes: None,
            exact: None,
            features,
        }
    }

    pub fn m0(&self) -> f64 {
        self.features.m0
    }

    pub fn alpha_nodes(&self) -> &[f64] {
        self.psi0.nodes()
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    /// `f·u₀` at the nodes, when the profile was built from a spec.
    pub fn weight_at_nodes(&self) -> Option<&[f64]> {
        self.slopes.as_deref()
    }

    /// `ψ₀(α)`: exact for polynomial data, cubic Hermite (using `ψ₀' = f u₀`) for
    /// quadrature-built profiles, linear for bare samples. Exact at nodes in all cases.
    pub fn value(&self, alpha: f64) -> f64 {
        if let Some(e) = &self.exact {
            return e.poly.integral_from_zero(alpha) - e.shift;
        }
        let nodes = self.psi0.nodes();
        let values = self.psi0.values();
        let Some(slopes) = &self.slopes else {
            return self.psi0.value(alpha);
        };
        let n = nodes.len();
        if alpha <= nodes[0] {
            return values[0];
        }
        if alpha >= nodes[n - 1] {
            return values[n - 1];
        }
        let k = self.psi0.cell(alpha);
        let h = nodes[k + 1] - nodes[k];
        let s = (alpha - nodes[k]) / h;
        if s == 0.0 {
            return values[k];
        }
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * values[k] + h10 * h * slopes[k] + h01 * values[k + 1] + h11 * h * slopes[k + 1]
    }
}

/// Builds `ψ₀` on the spec's uniform α-grid.
pub fn build_psi0(spec: &ProblemSpec) -> Result<Psi0Profile> {
    build_psi0_with(spec, spec.n_alpha, Quadrature::Auto)
}

pub fn build_psi0_with(spec: &ProblemSpec, n_alpha: usize, mode: Quadrature) -> Result<Psi0Profile> {
    build_psi0_impl(spec, n_alpha, mode, false)
}

/// `∫₁^α f u₀`, the construction along horizontal characteristics entering from `α = 1`.
pub fn build_psi0_from_right(spec: &ProblemSpec, n_alpha: usize, mode: Quadrature) -> Result<Psi0Profile> {
    build_psi0_impl(spec, n_alpha, mode, true)
}

fn build_psi0_impl(spec: &ProblemSpec, n_alpha: usize, mode: Quadrature, from_right: bool) -> Result<Psi0Profile> {
    if n_alpha < MIN_N_ALPHA {
        return input(format!("n_alpha = {n_alpha} is below the minimum {MIN_N_ALPHA}"));
    }
    let nodes = uniform_nodes(0.0, 1.0, n_alpha)?;
    let h = 1.0 / (n_alpha - 1) as f64;
    let weight: Vec<f64> = nodes.iter().map(|&a| spec.f.value(a) * spec.u0.value(a)).collect();
    if let Some(i) = weight.iter().position(|w| !w.is_finite()) {
        return input(format!("f·u0 is not finite at alpha = {}", nodes[i]));
    }

    let exact = match mode {
        Quadrature::Auto => spec.weight_step_polynomial(),
        Quadrature::Simpson => None,
    };
    let (values, exact) = match exact {
        Some(poly) => {
            let shift = if from_right { poly.integral_from_zero(1.0) } else { 0.0 };
            let mut values: Vec<f64> = nodes.iter().map(|&a| poly.integral_from_zero(a) - shift).collect();
            if from_right {
                values[n_alpha - 1] = 0.0;
            }
            (values, Some(ExactPsi { poly, shift }))
        }
        None if from_right => {
            let reversed: Vec<f64> = weight.iter().rev().copied().collect();
            let cum = cumulative_simpson(&reversed, h);
            (cum.iter().rev().map(|v| -v).collect(), None)
        }
        None => (cumulative_simpson(&weight, h), None),
    };

    let psi0 = GridFunction::new(nodes, values)?;
    let mut profile = Psi0Profile {
        psi0,
        slopes: Some(weight),
        exact,
        features: Features {
            m0: 0.0,
            argmax_set: Vec::new(),
            omega: Vec::new(),
            alpha0: None,
        },
    };
    profile.features = extract_features(&profile, spec);
    Ok(profile)
}

/// `M₀`, the argmax set, the zero set `Ω` of `ψ₀` and the first zero `α₀` of `f`.
pub fn extract_features(profile: &Psi0Profile, spec: &ProblemSpec) -> Features {
    let eval = |x: f64| profile.value(x);
    let refine = profile.exact.is_some() || profile.slopes.is_some();
    features_from(&profile.psi0, Some(&spec.f), &eval, Some(refine))
}

fn features_from(
    psi0: &GridFunction,
    f: Option<&FunctionDescriptor>,
    eval: &dyn Fn(f64) -> f64,
    use_evaluator: Option<bool>,
) -> Features {
    let xs = psi0.nodes();
    let ys = psi0.values();
    let n = xs.len();
    let zero_tol = ZERO_SET_TOLERANCE * psi0.max_abs();

    // local maxima, each refined by one parabolic step
    let mut candidates: Vec<(f64, f64)> = Vec::new();
    for i in 0..n {
        let left_ok = i == 0 || ys[i] >= ys[i - 1];
        let right_ok = i == n - 1 || ys[i] >= ys[i + 1];
        if !(left_ok && right_ok) {
            continue;
        }
        if i == 0 || i == n - 1 {
            candidates.push((xs[i], ys[i]));
            continue;
        }
        let (y0, y1, y2) = (ys[i - 1], ys[i], ys[i + 1]);
        let curvature = y0 - 2.0 * y1 + y2;
        if curvature < 0.0 {
            let p = (0.5 * (y0 - y2) / curvature).clamp(-0.5, 0.5);
            let h = if p >= 0.0 { xs[i + 1] - xs[i] } else { xs[i] - xs[i - 1] };
            let loc = xs[i] + p * h;
            let peak = if use_evaluator == Some(true) {
                eval(loc)
            } else {
                y1 - 0.25 * (y0 - y2) * p
            };
            if peak >= y1 {
                candidates.push((loc, peak));
            } else {
                candidates.push((xs[i], y1));
            }
        } else {
            candidates.push((xs[i], y1));
        }
    }

    let mut omega: Vec<f64> = Vec::new();
    for i in 0..n {
        if ys[i].abs() <= zero_tol {
            omega.push(xs[i]);
        } else if i + 1 < n && ys[i + 1].abs() > zero_tol && ys[i] * ys[i + 1] < 0.0 {
            if let Some(z) = bisect(eval, xs[i], xs[i + 1]) {
                omega.push(z);
            }
        }
    }

    let raw_max = candidates.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
    let (m0, argmax_set) = if raw_max <= zero_tol {
        (0.0, omega.clone())
    } else {
        let set = candidates
            .iter()
            .filter(|c| c.1 >= raw_max - FEATURE_TOLERANCE)
            .map(|c| c.0)
            .collect();
        (raw_max, set)
    };

    let alpha0 = f.and_then(|f| first_zero(f, xs));
    Features {
        m0,
        argmax_set,
        omega,
        alpha0,
    }
}

/// First zero of `f` in the open interval spanned by `nodes`, refined by bisection.
pub fn first_zero(f: &FunctionDescriptor, nodes: &[f64]) -> Option<f64> {
    let n = nodes.len();
    let mut prev: Option<(f64, f64)> = None;
    for (i, &x) in nodes.iter().enumerate() {
        let v = f.value(x);
        if v == 0.0 {
            if i > 0 && i < n - 1 {
                return Some(x);
            }
            continue;
        }
        if let Some((xp, vp)) = prev {
            if vp.signum() != v.signum() {
                return bisect(|a| f.value(a), xp, x);
            }
        }
        prev = Some((x, v));
    }
    None
}

/// Result of the compatibility check `∫₀¹ f u₀ = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Compatibility {
    pub ok: bool,
    pub defect: f64,
    pub sup_norm: f64,
    pub f_changes_sign: bool,
}

pub fn check_compatibility(spec: &ProblemSpec) -> Compatibility {
    let nodes = spec.alpha_nodes();
    let h = 1.0 / (nodes.len() - 1) as f64;
    let weight: Vec<f64> = nodes.iter().map(|&a| spec.f.value(a) * spec.u0.value(a)).collect();
    let defect = match spec.weight_step_polynomial() {
        Some(p) => p.integral_from_zero(1.0).abs(),
        None => crate::quadrature::simpson(&weight, h).abs(),
    };
    let sup_norm = weight.iter().fold(0.0_f64, |m, w| m.max(w.abs()));
    let fv: Vec<f64> = nodes.iter().map(|&a| spec.f.value(a)).collect();
    let f_changes_sign = fv.iter().any(|&v| v > 0.0) && fv.iter().any(|&v| v < 0.0);
    Compatibility {
        ok: defect <= COMPATIBILITY_TOLERANCE * sup_norm,
        defect,
        sup_norm,
        f_changes_sign,
    }
}

/// Closed forms of `G` available for catalog boundary data.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum AnalyticForm {
    /// `G = c₀ t + c₁ t²/2` (from `g = c₀ + c₁ t`) or a higher-degree polynomial.
    Polynomial { degree: usize },
    /// `G = (t_b/β)((1 - t/t_b)^{-β} - 1)`.
    SingularBoundary { beta: f64, t_b: f64 },
    /// `G = (e^{rt} - 1)/r`.
    Exponential { rate: f64 },
}

/// Sampled boundary accumulator `G` with its limit and an inverse.
#[derive(Clone, Debug, Serialize)]
pub struct BoundaryIntegral {
    #[serde(skip)]
    g: FunctionDescriptor,
    pub samples: GridFunction,
    pub t_max: f64,
    /// `lim G(t)` as `t` approaches the end of the domain; may be `+∞`.
    pub g_infinity: f64,
    /// True when `g_infinity` is an extrapolation rather than exact.
    pub g_infinity_estimated: bool,
    pub analytic_form: Option<AnalyticForm>,
    #[serde(skip)]
    sub_panels: usize,
}

pub fn build_g(spec: &ProblemSpec, t_max: f64) -> Result<BoundaryIntegral> {
    build_g_with(spec, t_max, DEFAULT_T_SAMPLES, Quadrature::Auto)
}

pub fn build_g_with(spec: &ProblemSpec, t_max: f64, n_t: usize, mode: Quadrature) -> Result<BoundaryIntegral> {
    let g = spec.g.clone();
    if !(t_max > 0.0 && t_max.is_finite()) {
        return input(format!("t_max must be positive and finite, got {t_max}"));
    }
    if let Some(tb) = g.blowup_point() {
        if t_max >= tb {
            return Err(Error::Domain(format!(
                "t_max = {t_max} is not below the boundary blow-up time t_b = {tb}"
            )));
        }
    }
    if n_t < 2 {
        return input("G needs at least two samples");
    }
    let analytic_form = match mode {
        Quadrature::Simpson => None,
        Quadrature::Auto => analytic_form_of(&g),
    };
    let nodes = uniform_nodes(0.0, t_max, n_t)?;
    let sub_panels = 8;
    let values: Vec<f64> = if analytic_form.is_some() {
        nodes.iter().map(|&t| g.antiderivative(t)).collect()
    } else {
        let mut acc = 0.0;
        let mut out = Vec::with_capacity(n_t);
        out.push(0.0);
        for w in nodes.windows(2) {
            acc += simpson_fn(|s| g.value(s), w[0], w[1], sub_panels);
            out.push(acc);
        }
        out
    };
    if values.windows(2).any(|w| !(w[1] > w[0])) {
        return input("G is not strictly increasing; g must be positive");
    }
    let (g_infinity, g_infinity_estimated) = limit_of_g(&g);
    Ok(BoundaryIntegral {
        g,
        samples: GridFunction::new(nodes, values)?,
        t_max,
        g_infinity,
        g_infinity_estimated,
        analytic_form,
        sub_panels,
    })
}

fn analytic_form_of(g: &FunctionDescriptor) -> Option<AnalyticForm> {
    match &g.kind {
        FunctionKind::Constant { .. } => Some(AnalyticForm::Polynomial { degree: 1 }),
        FunctionKind::Polynomial { coefficients } => Some(AnalyticForm::Polynomial {
            degree: coefficients.len(),
        }),
        FunctionKind::SingularBoundary { beta, t_b } => Some(AnalyticForm::SingularBoundary { beta: *beta, t_b: *t_b }),
        FunctionKind::Exponential { rate } => Some(AnalyticForm::Exponential { rate: *rate }),
        _ => None,
    }
}

fn limit_of_g(g: &FunctionDescriptor) -> (f64, bool) {
    let jump_total: f64 = g.jumps.iter().map(|j| j.size).sum::<f64>() * g.scale;
    match &g.kind {
        FunctionKind::Exponential { rate } if *rate < 0.0 && jump_total == 0.0 => (g.scale / -rate, false),
        FunctionKind::Table { .. } => (f64::INFINITY, true),
        _ => (f64::INFINITY, false),
    }
}

impl BoundaryIntegral {
    pub fn g(&self) -> &FunctionDescriptor {
        &self.g
    }

    /// Right end of the time domain (`t_b` for singular data, `+∞` otherwise).
    pub fn domain_end(&self) -> f64 {
        self.g.blowup_point().unwrap_or(f64::INFINITY)
    }

    /// `G(t)`; `+∞` at or beyond the boundary blow-up time, NaN for `t < 0`.
    pub fn value(&self, t: f64) -> f64 {
        if t < 0.0 || t.is_nan() {
            return f64::NAN;
        }
        if t >= self.domain_end() {
            return f64::INFINITY;
        }
        if self.analytic_form.is_some() {
            return self.g.antiderivative(t);
        }
        let nodes = self.samples.nodes();
        let k = self.samples.cell(t).min(nodes.len() - 1);
        let k = if t >= nodes[nodes.len() - 1] { nodes.len() - 1 } else { k };
        let t0 = nodes[k];
        if t == t0 {
            return self.samples.values()[k];
        }
        let h = nodes[1] - nodes[0];
        let panels = ((t - t0) / h * self.sub_panels as f64).ceil().max(2.0) as usize;
        self.samples.values()[k] + simpson_fn(|s| self.g.value(s), t0, t, panels)
    }

    fn closed_form_inverse(&self, target: f64) -> Option<f64> {
        if self.g.has_jumps() {
            return None;
        }
        let s = self.g.scale;
        match (&self.analytic_form?, &self.g.kind) {
            (AnalyticForm::Polynomial { .. }, FunctionKind::Constant { value }) => Some(target / (s * value)),
            (AnalyticForm::Polynomial { degree }, FunctionKind::Polynomial { coefficients }) if *degree <= 2 => {
                let c0 = s * coefficients[0];
                let c1 = s * coefficients.get(1).copied().unwrap_or(0.0);
                let disc = c0 * c0 + 2.0 * c1 * target;
                if disc < 0.0 {
                    return None;
                }
                Some(2.0 * target / (c0 + disc.sqrt()))
            }
            (AnalyticForm::SingularBoundary { beta, t_b }, _) => {
                let y = beta * target / (s * t_b);
                Some(-t_b * (-(y.ln_1p()) / beta).exp_m1())
            }
            (AnalyticForm::Exponential { rate }, _) => {
                if *rate == 0.0 {
                    Some(target / s)
                } else {
                    Some((rate * target / s).ln_1p() / rate)
                }
            }
            _ => None,
        }
    }
}

/// `G⁻¹(target)`, closed form when available, bisection on the monotone `G` otherwise.
pub fn invert_g(b: &BoundaryIntegral, target: f64) -> Result<f64> {
    if !(target >= 0.0) {
        return input(format!("inversion target must be non-negative, got {target}"));
    }
    if target == 0.0 {
        return Ok(0.0);
    }
    if target >= b.g_infinity {
        return Err(Error::NoFiniteTime {
            target,
            limit: b.g_infinity,
        });
    }
    if let Some(t) = b.closed_form_inverse(target) {
        return Ok(t);
    }
    let end = b.domain_end();
    let hi = if end.is_finite() {
        end
    } else if b.analytic_form.is_some() {
        let mut hi = b.t_max.max(1.0);
        while b.value(hi) < target {
            hi *= 2.0;
            if !hi.is_finite() {
                return Err(Error::NoFiniteTime {
                    target,
                    limit: b.g_infinity,
                });
            }
        }
        hi
    } else {
        if b.value(b.t_max) < target {
            return Err(Error::Domain(format!(
                "target {target} exceeds the sampled range G(t_max = {}) = {}; increase t_max",
                b.t_max,
                b.value(b.t_max)
            )));
        }
        b.t_max
    };
    bisect(|t| b.value(t) - target, 0.0, hi).ok_or_else(|| Error::Domain(format!("could not bracket G = {target}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::FunctionDescriptor as F;

    fn spec(f: F, u0: F, g: F, n: usize) -> ProblemSpec {
        ProblemSpec::new(f, u0, g, n).unwrap()
    }

    #[test]
    fn example_one_psi0_and_g() {
        let s = spec(F::polynomial([-1.0, 2.0]), F::constant(1.0), F::polynomial([1.0, 2.0]), 257);
        let p = build_psi0(&s).unwrap();
        assert_eq!(p.value(0.0), 0.0);
        assert_eq!(p.value(0.5), -0.25);
        assert_eq!(p.m0(), 0.0);
        assert_eq!(p.features.omega, vec![0.0, 1.0]);
        assert_eq!(p.features.argmax_set, vec![0.0, 1.0]);
        let b = build_g(&s, 5.0).unwrap();
        assert_eq!(b.value(0.0), 0.0);
        assert_eq!(b.value(1.0), 2.0);
        assert_eq!(b.g_infinity, f64::INFINITY);
    }

    #[test]
    fn sine_weight_matches_antiderivative() {
        let s = spec(F::sine(0.0, 1.0, 1.0), F::constant(1.0), F::constant(1.0), 257);
        let p = build_psi0(&s).unwrap();
        let tau = std::f64::consts::TAU;
        let err = p
            .alpha_nodes()
            .iter()
            .map(|&a| (p.value(a) - (1.0 - (tau * a).cos()) / tau).abs())
            .fold(0.0, f64::max);
        assert!(err <= 1e-8, "max error {err}");
        assert!((p.m0() - 1.0 / std::f64::consts::PI).abs() < 1e-9);
        assert_eq!(p.features.argmax_set.len(), 1);
        assert!((p.features.argmax_set[0] - 0.5).abs() < 1e-6);
        assert_eq!(p.features.alpha0, Some(0.5));
    }

    #[test]
    fn example_two_features() {
        let s = spec(F::polynomial([1.0, -2.0]), F::constant(1.0), F::polynomial([1.0, 2.0]), 513);
        let p = build_psi0(&s).unwrap();
        assert_eq!(p.m0(), 0.25);
        assert_eq!(p.features.argmax_set, vec![0.5]);
        assert_eq!(p.features.alpha0, Some(0.5));
    }

    #[test]
    fn psi0_m0_bounds_every_sample() {
        let s = spec(F::sine(0.0, 1.0, 2.0), F::polynomial([1.0, 0.5]), F::constant(1.0), 129);
        let p = build_psi0(&s).unwrap();
        assert!(p.m0() >= 0.0);
        assert!(p.psi0.values().iter().all(|&v| v <= p.m0()));
    }

    #[test]
    fn singular_g_closed_form_and_domain() {
        let s = spec(F::polynomial([1.0, -2.0]), F::constant(1.0), F::singular_boundary(1.0), 65);
        let b = build_g(&s, 0.9).unwrap();
        assert!((b.value(0.5) - 1.0).abs() < 1e-15);
        assert!((invert_g(&b, 8.0).unwrap() - 8.0 / 9.0).abs() < 1e-15);
        assert!(matches!(build_g(&s, 1.0), Err(Error::Domain(_))));
        // β=1 antiderivative agrees with quadrature of (1-t)^-2
        let q = simpson_fn(|t| (1.0 - t).powi(-2), 0.0, 0.5, 1000);
        assert!((q - 1.0).abs() < 1e-10);
    }

    #[test]
    fn example_two_inversion() {
        let s = spec(F::polynomial([1.0, -2.0]), F::constant(1.0), F::polynomial([1.0, 2.0]), 65);
        let b = build_g(&s, 5.0).unwrap();
        let t = invert_g(&b, 8.0).unwrap();
        assert!((t - 0.5 * (33f64.sqrt() - 1.0)).abs() < 1e-14);
        assert_eq!(invert_g(&b, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn inversion_reports_global_existence() {
        let s = spec(F::polynomial([1.0, -2.0]), F::constant(1.0), F::exponential(-1.0), 65);
        let b = build_g(&s, 5.0).unwrap();
        assert_eq!(b.g_infinity, 1.0);
        assert!(matches!(invert_g(&b, 8.0), Err(Error::NoFiniteTime { .. })));
        assert!(matches!(invert_g(&b, 1.0), Err(Error::NoFiniteTime { .. })));
    }

    #[test]
    fn quadrature_g_inverts_by_bisection() {
        let s = spec(F::polynomial([1.0, -2.0]), F::constant(1.0), F::polynomial([1.0, 2.0]), 65);
        let b = build_g_with(&s, 5.0, 513, Quadrature::Simpson).unwrap();
        assert!(b.analytic_form.is_none());
        let t = invert_g(&b, 8.0).unwrap();
        assert!((b.value(t) - 8.0).abs() <= 1e-12 * 9.0);
        assert!((t - 0.5 * (33f64.sqrt() - 1.0)).abs() < 1e-10);
        assert!(matches!(invert_g(&b, 100.0), Err(Error::Domain(_))));
    }

    #[test]
    fn compatibility_reports() {
        let ex1 = spec(F::polynomial([-1.0, 2.0]), F::constant(1.0), F::polynomial([1.0, 2.0]), 65);
        let c = check_compatibility(&ex1);
        assert!(c.ok && c.defect == 0.0 && c.f_changes_sign);

        let flat = spec(F::constant(1.0), F::constant(1.0), F::constant(1.0), 65);
        let c = check_compatibility(&flat);
        assert!(!c.ok && !c.f_changes_sign);
        assert_eq!(c.defect, 1.0);

        let shifted = spec(F::sine(0.01, 1.0, 1.0), F::constant(1.0), F::constant(1.0), 257);
        let c = check_compatibility(&shifted);
        assert!(!c.ok);
        assert!((c.defect - 0.01).abs() < 1e-12);
    }

    #[test]
    fn normalization_rescales_with_flags() {
        let s = spec(F::polynomial([1.0, -2.0]), F::constant(2.0), F::constant(4.0), 65);
        assert_eq!(s.u0.value(0.3), 1.0);
        assert_eq!(s.g.value(0.3), 1.0);
        assert_eq!(s.normalization.u0_divided_by, 2.0);
        assert_eq!(s.normalization.g_divided_by, 4.0);
    }

    #[test]
    fn rejects_invalid_data() {
        assert!(ProblemSpec::new(F::constant(1.0), F::polynomial([1.0, -2.0]), F::constant(1.0), 65).is_err());
        let s = spec(F::constant(1.0), F::constant(1.0), F::constant(1.0), 65);
        assert!(build_psi0_with(&s, 16, Quadrature::Auto).is_err());
        assert!(ProblemSpec::from_json("{\"f\": 3}").is_err());
    }

    #[test]
    fn spec_json_round_trip() {
        let text = r#"{
            "f": {"kind": "polynomial", "params": {"coefficients": [1, -2]}},
            "u0": {"kind": "constant", "params": {"value": 1}},
            "g": {"kind": "polynomial", "params": {"coefficients": [1, 2]}},
            "n_alpha": 257
        }"#;
        let s = ProblemSpec::from_json(text).unwrap();
        assert_eq!(s.n_alpha, 257);
        let again = ProblemSpec::from_json(&s.to_json()).unwrap();
        assert_eq!(again, s);
        assert_eq!(again.hash(), s.hash());
    }

    #[test]
    fn right_construction_agrees_when_compatible() {
        let s = spec(F::sine(0.0, 1.0, 1.0), F::constant(1.0), F::constant(1.0), 257);
        let left = build_psi0(&s).unwrap();
        let right = build_psi0_from_right(&s, 257, Quadrature::Auto).unwrap();
        for (l, r) in left.psi0.values().iter().zip(right.psi0.values()) {
            assert!((l - r).abs() < 1e-8);
        }
    }
}
