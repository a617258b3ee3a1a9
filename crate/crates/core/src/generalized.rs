//! Method-of-lines integrator for `∂_{αt} ln u = f(α) F(u)` and the envelope
//! bounds that hold for it on `(0, α₀]`.
//!
//! Integrating the equation once in `α` gives `∂_t u = u (ġ/g + ψ)` with
//! `ψ(α, t) = ∫₀^α f F(u)`, which is what the stepper advances.

use std::io::{self, Write};

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::function::{FunctionDescriptor, FunctionKind};
use crate::grid::{uniform_nodes, GridFunction};
use crate::problem::{first_zero, ProblemSpec, COMPATIBILITY_TOLERANCE};
use crate::quadrature::{cumulative_simpson, simpson, simpson_fn};
use crate::solver::SolutionField;
use crate::special::bisect;

/// Range of `u` on which table nonlinearities are checked.
pub const VALIDATION_RANGE: (f64, f64) = (1e-3, 1e3);
/// Relative slack allowed when comparing a trajectory with an envelope.
pub const DEFAULT_SLACK: f64 = 1e-3;
/// Relative periodicity defect `|u(1,t) - g(t)| / g(t)` that triggers a warning.
pub const DRIFT_TOLERANCE: f64 = 1e-6;

/// The nonlinearity `F` together with constants `c ≤ d` such that
/// `c F(u) ≤ u F'(u) ≤ d F(u)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Nonlinearity {
    /// `F(u) = u`, so `c = d = 1`.
    #[default]
    Identity,
    /// `F(u) = u^p`, so `c = d = p`.
    Power { exponent: f64 },
    /// Positive samples of `F`, interpolated linearly in `(ln u, ln F)`.
    Table { nodes: Vec<f64>, values: Vec<f64>, c: f64, d: f64 },
}

impl Nonlinearity {
    pub fn power(exponent: f64) -> Self {
        Self::Power { exponent }
    }

    pub fn c(&self) -> f64 {
        match self {
            Self::Identity => 1.0,
            Self::Power { exponent } => *exponent,
            Self::Table { c, .. } => *c,
        }
    }

    pub fn d(&self) -> f64 {
        match self {
            Self::Identity => 1.0,
            Self::Power { exponent } => *exponent,
            Self::Table { d, .. } => *d,
        }
    }

    pub fn is_table(&self) -> bool {
        matches!(self, Self::Table { .. })
    }

    pub fn value(&self, u: f64) -> f64 {
        match self {
            Self::Identity => u,
            Self::Power { exponent } => u.powf(*exponent),
            Self::Table { nodes, values, .. } => {
                let n = nodes.len();
                let x = u.ln();
                let k = match nodes.iter().position(|&s| s > u) {
                    Some(0) => 0,
                    Some(k) => k - 1,
                    None => n - 2,
                };
                let (x0, x1) = (nodes[k].ln(), nodes[k + 1].ln());
                let (y0, y1) = (values[k].ln(), values[k + 1].ln());
                (y0 + (y1 - y0) * (x - x0) / (x1 - x0)).exp()
            }
        }
    }

    /// Checks `F ≥ 0` and `c F ≤ u F' ≤ d F` on a log-grid of [`VALIDATION_RANGE`].
    pub fn validate(&self) -> Result<()> {
        let (c, d) = (self.c(), self.d());
        if !(c > 0.0 && d >= c && d.is_finite()) {
            return input(format!("nonlinearity constants must satisfy 0 < c <= d, got c = {c}, d = {d}"));
        }
        let Self::Table { nodes, values, .. } = self else {
            return Ok(());
        };
        if nodes.len() < 2 || nodes.len() != values.len() {
            return input("table nonlinearity needs at least two (node, value) pairs of equal count");
        }
        if nodes.iter().any(|&x| !(x > 0.0 && x.is_finite())) || nodes.windows(2).any(|w| w[1] <= w[0]) {
            return input("table nonlinearity nodes must be positive and strictly increasing");
        }
        if values.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return input("table nonlinearity values must be positive and finite");
        }
        let (lo, hi) = VALIDATION_RANGE;
        let eps = 1e-6_f64;
        for k in 0..=240 {
            let u = lo * (hi / lo).powf(k as f64 / 240.0);
            let e = (self.value(u * (1.0 + eps)).ln() - self.value(u / (1.0 + eps)).ln()) / (2.0 * eps.ln_1p());
            if e < c - 1e-6 || e > d + 1e-6 {
                return input(format!(
                    "u F'(u) / F(u) = {e} at u = {u} lies outside [c, d] = [{c}, {d}]"
                ));
            }
        }
        Ok(())
    }
}

/// Step, horizon and stopping rule of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    #[serde(default = "default_dt")]
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_cap")]
    pub blowup_cap: f64,
    /// Keep every `record_stride`-th accepted step (the first and last are always kept).
    #[serde(default = "default_stride")]
    pub record_stride: usize,
}

fn default_dt() -> f64 {
    1e-3
}

fn default_cap() -> f64 {
    1e8
}

fn default_stride() -> usize {
    1
}

impl IntegratorConfig {
    pub fn new(dt: f64, t_end: f64) -> Self {
        Self {
            dt,
            t_end,
            blowup_cap: default_cap(),
            record_stride: 1,
        }
    }

    pub fn with_cap(mut self, cap: f64) -> Self {
        self.blowup_cap = cap;
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.record_stride = stride;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return input(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return input(format!("t_end must be positive and finite, got {}", self.t_end));
        }
        if !(self.blowup_cap > 1.0) {
            return input(format!("blowup_cap must exceed 1, got {}", self.blowup_cap));
        }
        if self.record_stride == 0 {
            return input("record_stride must be at least 1");
        }
        Ok(())
    }
}

/// Generalized-equation scenario stored in a problem spec under `general`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(default)]
    pub nonlinearity: Nonlinearity,
    #[serde(flatten)]
    pub config: IntegratorConfig,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.nonlinearity.validate()?;
        self.config.validate()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GeneralizedState {
    pub t: f64,
    pub u: Vec<f64>,
    pub psi: Vec<f64>,
    /// `|u(1, t) - g(t)|`.
    pub drift: f64,
}

impl GeneralizedState {
    pub fn max_u(&self) -> f64 {
        self.u.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn argmax(&self) -> usize {
        let mut k = 0;
        for (i, &v) in self.u.iter().enumerate() {
            if v > self.u[k] {
                k = i;
            }
        }
        k
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Outcome {
    ReachedEnd,
    /// `max u` crossed the cap inside `bracket`, located by one half-step bisection.
    CapReached { bracket: (f64, f64) },
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub alpha: Vec<f64>,
    pub states: Vec<GeneralizedState>,
    pub outcome: Outcome,
    pub cap: f64,
    pub nonlinearity: Nonlinearity,
    /// Largest relative periodicity defect over all accepted steps.
    pub max_relative_drift: f64,
    pub warnings: Vec<String>,
}

impl Trajectory {
    pub fn last(&self) -> &GeneralizedState {
        self.states.last().expect("trajectory holds the initial state")
    }

    /// Stored state at time `t` (to within `1e-9`), if any.
    pub fn state_at(&self, t: f64) -> Option<&GeneralizedState> {
        self.states.iter().find(|s| (s.t - t).abs() <= 1e-9 * t.abs().max(1.0))
    }

    /// Stored states as a field (rows in `t`), e.g. for residual checks.
    pub fn to_field(&self) -> Result<SolutionField> {
        let t = self.states.iter().map(|s| s.t).collect();
        let values = self.states.iter().flat_map(|s| s.u.iter().copied()).collect();
        SolutionField::from_rows(self.alpha.clone(), t, values)
    }

    /// CSV rows `t,alpha,u`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,alpha,u")?;
        for s in &self.states {
            for (a, u) in self.alpha.iter().zip(&s.u) {
                writeln!(w, "{},{a},{u}", s.t)?;
            }
        }
        Ok(())
    }
}

struct System<'a> {
    spec: &'a ProblemSpec,
    nl: &'a Nonlinearity,
    f: Vec<f64>,
    h: f64,
}

impl System<'_> {
    fn psi(&self, u: &[f64]) -> Vec<f64> {
        let w: Vec<f64> = u.iter().zip(&self.f).map(|(&u, &f)| f * self.nl.value(u)).collect();
        cumulative_simpson(&w, self.h)
    }

    fn rhs(&self, t: f64, u: &[f64]) -> Vec<f64> {
        let g = &self.spec.g;
        let mut pinned = u.to_vec();
        pinned[0] = g.value(t);
        let rate = g.derivative(t) / g.value(t);
        let psi = self.psi(&pinned);
        pinned.iter().zip(&psi).map(|(&u, &p)| u * (rate + p)).collect()
    }

    /// One classical RK4 step; `None` if the result is not finite and positive.
    fn step(&self, t: f64, u: &[f64], dt: f64) -> Option<Vec<f64>> {
        let axpy = |k: &[f64], s: f64| -> Vec<f64> { u.iter().zip(k).map(|(&x, &y)| x + s * y).collect() };
        let k1 = self.rhs(t, u);
        let k2 = self.rhs(t + 0.5 * dt, &axpy(&k1, 0.5 * dt));
        let k3 = self.rhs(t + 0.5 * dt, &axpy(&k2, 0.5 * dt));
        let k4 = self.rhs(t + dt, &axpy(&k3, dt));
        let mut out: Vec<f64> = (0..u.len())
            .map(|i| u[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect();
        out[0] = self.spec.g.value(t + dt);
        out.iter().all(|&v| v > 0.0 && v.is_finite()).then_some(out)
    }

    fn state(&self, t: f64, u: Vec<f64>) -> GeneralizedState {
        let psi = self.psi(&u);
        let drift = (u[u.len() - 1] - self.spec.g.value(t)).abs();
        GeneralizedState { t, u, psi, drift }
    }
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Defect of the generalized compatibility condition `∫₀¹ f F(u₀) = 0`.
pub fn general_compatibility(spec: &ProblemSpec, nl: &Nonlinearity) -> (bool, f64) {
    let nodes = spec.alpha_nodes();
    let h = 1.0 / (nodes.len() - 1) as f64;
    let w: Vec<f64> = nodes.iter().map(|&a| spec.f.value(a) * nl.value(spec.u0.value(a))).collect();
    let defect = simpson(&w, h).abs();
    let sup = w.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    (defect <= COMPATIBILITY_TOLERANCE * sup.max(f64::MIN_POSITIVE), defect)
}

/// Integrates the method-of-lines system with fixed-step RK4.
///
/// The step is cut by 10 (for the rest of the run) whenever `max u` would grow by
/// more than 10% in one step. `u(0, t) = g(t)` is imposed at every stage; `u(1, t)`
/// is integrated freely and its distance to `g(t)` is recorded as drift.
pub fn integrate_general(spec: &ProblemSpec, nl: &Nonlinearity, config: &IntegratorConfig) -> Result<Trajectory> {
    nl.validate()?;
    config.validate()?;
    let (ok, defect) = general_compatibility(spec, nl);
    if !ok {
        return input(format!("compatibility fails: |∫ f F(u0)| = {defect:e}"));
    }
    if let Some(tb) = spec.g.blowup_point() {
        if config.t_end >= tb {
            return Err(Error::Domain(format!("t_end = {} is not below t_b = {tb}", config.t_end)));
        }
    }
    let alpha = uniform_nodes(0.0, 1.0, spec.n_alpha)?;
    let sys = System {
        spec,
        nl,
        f: alpha.iter().map(|&a| spec.f.value(a)).collect(),
        h: 1.0 / (spec.n_alpha - 1) as f64,
    };

    let mut t = 0.0;
    let mut u: Vec<f64> = alpha.iter().map(|&a| spec.u0.value(a)).collect();
    u[0] = spec.g.value(0.0);
    let mut states = vec![sys.state(t, u.clone())];
    let mut dt = config.dt;
    let min_dt = config.dt * 1e-12;
    let mut accepted = 0usize;
    let mut max_relative_drift = 0.0_f64;
    let mut warnings = Vec::new();
    let end_tol = 1e-12 * config.t_end.max(1.0);

    let outcome = loop {
        if t >= config.t_end - end_tol {
            break Outcome::ReachedEnd;
        }
        let h = dt.min(config.t_end - t);
        let current_max = max_of(&u);
        let next = match sys.step(t, &u, h) {
            Some(v) if max_of(&v) <= 1.1 * current_max || dt <= min_dt => v,
            candidate => {
                if dt <= min_dt {
                    return Err(Error::Integration {
                        t,
                        reason: match candidate {
                            None => "lost positivity or finiteness".into(),
                            Some(_) => "step size underflow".into(),
                        },
                    });
                }
                dt /= 10.0;
                continue;
            }
        };
        let t_next = if h == config.t_end - t { config.t_end } else { t + h };
        let g_next = spec.g.value(t_next);
        let rel = (next[next.len() - 1] - g_next).abs() / g_next;
        if rel > DRIFT_TOLERANCE && max_relative_drift <= DRIFT_TOLERANCE {
            let msg = format!("periodicity drift {rel:e} exceeds {DRIFT_TOLERANCE:e} at t = {t_next}");
            warn!("{msg}");
            warnings.push(msg);
        }
        max_relative_drift = max_relative_drift.max(rel);
        accepted += 1;

        if max_of(&next) >= config.blowup_cap {
            let half = sys.step(t, &u, 0.5 * h);
            let crossed_early = half.is_none_or(|v| max_of(&v) >= config.blowup_cap);
            let bracket = if crossed_early { (t, t + 0.5 * h) } else { (t + 0.5 * h, t_next) };
            states.push(sys.state(t_next, next));
            break Outcome::CapReached { bracket };
        }
        t = t_next;
        u = next;
        if accepted.is_multiple_of(config.record_stride) || t >= config.t_end - end_tol {
            states.push(sys.state(t, u.clone()));
        }
    };

    Ok(Trajectory {
        alpha,
        states,
        outcome,
        cap: config.blowup_cap,
        nonlinearity: nl.clone(),
        max_relative_drift,
        warnings,
    })
}

/// Result of scanning a trajectory for `max u ≥ cap`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlowupDetection {
    pub blew_up: bool,
    pub t_numeric: Option<f64>,
    pub bracket: Option<(f64, f64)>,
    pub location: Option<f64>,
    /// Blow-up time from fitting `max u ~ K (t* - t)^{-2/c}`.
    pub t_extrapolated: Option<f64>,
}

pub fn detect_blowup(trajectory: &Trajectory, cap: f64) -> BlowupDetection {
    let states = &trajectory.states;
    let Some(k) = states.iter().position(|s| s.max_u() >= cap) else {
        return BlowupDetection {
            blew_up: false,
            t_numeric: None,
            bracket: None,
            location: None,
            t_extrapolated: None,
        };
    };
    let location = Some(trajectory.alpha[states[k].argmax()]);
    let t_extrapolated = extrapolate_blowup_time(&states[..=k], trajectory.nonlinearity.c());
    if k == 0 {
        return BlowupDetection {
            blew_up: true,
            t_numeric: Some(states[0].t),
            bracket: Some((states[0].t, states[0].t)),
            location,
            t_extrapolated,
        };
    }
    let (bracket, t_numeric) = match trajectory.outcome {
        Outcome::CapReached { bracket } if k == states.len() - 1 && cap >= trajectory.cap => {
            (bracket, 0.5 * (bracket.0 + bracket.1))
        }
        _ => {
            // crossing time from log-linear interpolation of max u between samples
            let (a, b) = (&states[k - 1], &states[k]);
            let (la, lb) = (a.max_u().ln(), b.max_u().ln());
            let s = ((cap.ln() - la) / (lb - la)).clamp(0.0, 1.0);
            ((a.t, b.t), a.t + s * (b.t - a.t))
        }
    };
    BlowupDetection {
        blew_up: true,
        t_numeric: Some(t_numeric),
        bracket: Some(bracket),
        location,
        t_extrapolated,
    }
}

/// Zero of the least-squares line through `(t, (max u)^{-c/2})` over the states
/// whose maximum is within two decades of the final one.
pub fn extrapolate_blowup_time(states: &[GeneralizedState], c: f64) -> Option<f64> {
    let last = states.last()?.max_u();
    let mut tail: Vec<&GeneralizedState> = states.iter().filter(|s| s.max_u() >= 1e-2 * last).collect();
    if tail.len() < 3 {
        tail = states.iter().rev().take(10).collect();
    }
    if tail.len() < 3 {
        return None;
    }
    let pts: Vec<(f64, f64)> = tail.iter().map(|s| (s.t, s.max_u().powf(-0.5 * c))).collect();
    let (slope, intercept) = least_squares(&pts)?;
    (slope < 0.0).then(|| -intercept / slope)
}

pub(crate) fn least_squares(pts: &[(f64, f64)]) -> Option<(f64, f64)> {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if !(sxx > 0.0) {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// `H₀(α) = ∫₀^α f F(u₀)` and the first zero `α₀` of `f`.
#[derive(Clone, Debug, Serialize)]
pub struct H0Profile {
    pub h0: GridFunction,
    pub alpha0: f64,
    pub h0_at_alpha0: f64,
    /// `H₀ > 0` on the grid points of `(0, α₀]`.
    pub hypotheses_hold: bool,
}

pub fn compute_h0_alpha0(spec: &ProblemSpec, nl: &Nonlinearity) -> Result<H0Profile> {
    let nodes = spec.alpha_nodes();
    let h = 1.0 / (nodes.len() - 1) as f64;
    let weight = |a: f64| spec.f.value(a) * nl.value(spec.u0.value(a));
    let w: Vec<f64> = nodes.iter().map(|&a| weight(a)).collect();
    let values = cumulative_simpson(&w, h);
    let alpha0 = first_zero(&spec.f, &nodes).ok_or_else(|| Error::Hypothesis("f has no zero in (0, 1)".into()))?;
    let h0_at_alpha0 = simpson_fn(weight, 0.0, alpha0, nodes.len() - 1);
    let hypotheses_hold = h0_at_alpha0 > 0.0
        && nodes
            .iter()
            .zip(&values)
            .filter(|(&a, _)| a > 0.0 && a <= alpha0)
            .all(|(_, &v)| v > 0.0);
    if !hypotheses_hold {
        warn!("H0 is not positive on (0, alpha0]; envelope bounds do not apply");
    }
    Ok(H0Profile {
        h0: GridFunction::new(nodes, values)?,
        alpha0,
        h0_at_alpha0,
        hypotheses_hold,
    })
}

/// Sign of `ġ` over the run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Monotonicity {
    Increasing,
    Decreasing,
    NotMonotone,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PredictedVerdict {
    FiniteBlowup,
    Global,
    Undetermined,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub alpha: f64,
    pub t: f64,
    /// Relative margin; negative means the bound is violated.
    pub margin: f64,
    pub bound: BoundKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BoundKind {
    Lower,
    Upper,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundsReport {
    pub h0: H0Profile,
    pub c: f64,
    pub d: f64,
    /// `2 / (c H₀(α₀))`.
    pub t_star_bound: f64,
    pub monotonicity: Monotonicity,
    /// `∫₀^∞ g^c` and `∫₀^∞ g^d` (decreasing data only).
    pub integral_gc_limit: Option<f64>,
    pub integral_gd_limit: Option<f64>,
    pub predicted: PredictedVerdict,
    /// Interval that must contain the blow-up time when one is predicted.
    pub blowup_window: Option<(f64, f64)>,
    /// Lower and upper envelopes per stored state, on the nodes of `(0, α₀]`.
    #[serde(skip)]
    pub lower: Vec<Vec<f64>>,
    #[serde(skip)]
    pub upper: Vec<Vec<f64>>,
    pub checked_nodes: usize,
    pub min_lower_margin: f64,
    pub min_upper_margin: f64,
    pub violations: Vec<Violation>,
    /// False when a table nonlinearity was evaluated outside its validated range.
    pub verified: bool,
}

/// `∫₀^t g^p`, closed form for constant and exponential data.
pub fn power_integral(g: &FunctionDescriptor, p: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if !g.has_jumps() {
        let s = g.scale;
        match g.kind {
            FunctionKind::Constant { value } => return (s * value).powf(p) * t,
            FunctionKind::Exponential { rate } if rate != 0.0 => {
                return s.powf(p) * (p * rate * t).exp_m1() / (p * rate);
            }
            _ => {}
        }
    }
    let panels = 2 * ((t / 1e-3).ceil() as usize).max(8);
    simpson_fn(|x| g.value(x).powf(p), 0.0, t, panels)
}

/// `∫₀^∞ g^p`; infinite unless `g` decays exponentially.
pub fn power_integral_limit(g: &FunctionDescriptor, p: f64) -> f64 {
    match g.kind {
        FunctionKind::Exponential { rate } if rate < 0.0 && !g.has_jumps() => g.scale.powf(p) / (p * -rate),
        _ => f64::INFINITY,
    }
}

fn solve_power_integral(g: &FunctionDescriptor, p: f64, target: f64) -> Option<f64> {
    if target >= power_integral_limit(g, p) {
        return None;
    }
    if let (FunctionKind::Exponential { rate }, false) = (&g.kind, g.has_jumps()) {
        if *rate != 0.0 {
            let y = target * p * rate / g.scale.powf(p);
            return Some(y.ln_1p() / (p * rate));
        }
    }
    let mut hi = 1.0;
    while power_integral(g, p, hi) < target {
        hi *= 2.0;
        if hi > 1e9 {
            return None;
        }
    }
    bisect(|t| power_integral(g, p, t) - target, 0.0, hi)
}

fn monotonicity(g: &FunctionDescriptor, t_end: f64) -> Monotonicity {
    let n = 2001;
    let tol = 1e-12;
    let mut up = false;
    let mut down = false;
    for k in 0..n {
        let t = t_end * k as f64 / (n - 1) as f64;
        let d = g.derivative(t);
        up |= d > tol;
        down |= d < -tol;
    }
    let jumps_up = g.jumps.iter().any(|j| j.size > 0.0);
    let jumps_down = g.jumps.iter().any(|j| j.size < 0.0);
    match (up || jumps_up, down || jumps_down) {
        (_, false) if up || jumps_up => Monotonicity::Increasing,
        (false, _) => Monotonicity::Decreasing,
        _ => Monotonicity::NotMonotone,
    }
}

/// Evaluates the envelope bounds against a trajectory.
///
/// For non-decreasing `g` the lower envelope `g u₀ / (1 - (c/2) H₀ t)^{2/c}` is
/// checked; for non-increasing `g` the upper envelope built from `∫ g^c` and the
/// lower one built from `∫ g^d`. Only nodes in `(0, α₀]` are checked.
pub fn blowup_bounds(spec: &ProblemSpec, trajectory: &Trajectory, slack: f64) -> Result<BoundsReport> {
    let nl = &trajectory.nonlinearity;
    let h0 = compute_h0_alpha0(spec, nl)?;
    let (c, d) = (nl.c(), nl.d());
    let t_star_bound = 2.0 / (c * h0.h0_at_alpha0);
    let t_last = trajectory.last().t;
    let g = &spec.g;
    let monotonicity = monotonicity(g, t_last.max(spec.general.as_ref().map_or(0.0, |s| s.config.t_end)));

    let (mut integral_gc_limit, mut integral_gd_limit) = (None, None);
    let (predicted, blowup_window) = match monotonicity {
        Monotonicity::Increasing => (PredictedVerdict::FiniteBlowup, Some((0.0, t_star_bound))),
        Monotonicity::NotMonotone => (PredictedVerdict::Undetermined, None),
        Monotonicity::Decreasing => {
            let gc = power_integral_limit(g, c);
            let gd = power_integral_limit(g, d);
            integral_gc_limit = Some(gc);
            integral_gd_limit = Some(gd);
            let blow_target = 2.0 / (c * h0.h0_at_alpha0);
            let global_target = 2.0 / (d * h0.h0_at_alpha0);
            if gd > blow_target {
                let t_star = solve_power_integral(g, d, blow_target);
                let t1 = solve_power_integral(g, c, global_target);
                let window = t_star.map(|ts| {
                    let t1 = t1.unwrap_or(0.0).min(ts);
                    let pad = if ts - t1 < 1e-3 * ts { 1e-3 * ts } else { 0.0 };
                    ((t1 - pad).max(0.0), ts + pad)
                });
                (PredictedVerdict::FiniteBlowup, window)
            } else if gc <= global_target {
                (PredictedVerdict::Global, None)
            } else {
                (PredictedVerdict::Undetermined, None)
            }
        }
    };

    let nodes: Vec<usize> = (0..trajectory.alpha.len())
        .filter(|&i| trajectory.alpha[i] > 0.0 && trajectory.alpha[i] <= h0.alpha0 + 1e-12)
        .collect();
    let h0_nodes: Vec<f64> = nodes.iter().map(|&i| h0.h0.values()[i]).collect();
    let u0: Vec<f64> = nodes.iter().map(|&i| spec.u0.value(trajectory.alpha[i])).collect();

    let mut lower = Vec::new();
    let mut upper = Vec::new();
    let mut violations = Vec::new();
    let mut min_lower_margin = f64::INFINITY;
    let mut min_upper_margin = f64::INFINITY;
    let mut verified = true;
    let mut times: Vec<f64> = trajectory.states.iter().map(|s| s.t).collect();
    times.dedup();
    let (int_c, int_d) = if monotonicity == Monotonicity::Decreasing {
        (cumulative_power(g, c, &times), cumulative_power(g, d, &times))
    } else {
        (Vec::new(), Vec::new())
    };

    if monotonicity != Monotonicity::NotMonotone {
        for (k, s) in trajectory.states.iter().enumerate() {
            let gt = g.value(s.t);
            let mut lo_row = Vec::with_capacity(nodes.len());
            let mut up_row = Vec::new();
            for (j, &i) in nodes.iter().enumerate() {
                let u = s.u[i];
                if nl.is_table() && !(VALIDATION_RANGE.0..=VALIDATION_RANGE.1).contains(&u) {
                    verified = false;
                }
                let base = gt * u0[j];
                let lo = match monotonicity {
                    Monotonicity::Increasing => envelope(base, 1.0 - 0.5 * c * h0_nodes[j] * s.t, c),
                    _ => envelope(base, 1.0 - 0.5 * c * h0_nodes[j] * int_d[k.min(int_d.len() - 1)], c),
                };
                let margin = if lo.is_finite() { (u - lo) / lo } else { f64::NEG_INFINITY };
                min_lower_margin = min_lower_margin.min(margin);
                if margin < -slack {
                    violations.push(Violation {
                        alpha: trajectory.alpha[i],
                        t: s.t,
                        margin,
                        bound: BoundKind::Lower,
                    });
                }
                lo_row.push(lo);
                if monotonicity == Monotonicity::Decreasing {
                    let up = envelope(base, 1.0 - 0.5 * d * h0_nodes[j] * int_c[k.min(int_c.len() - 1)], d);
                    if up.is_finite() {
                        let margin = (up - u) / up;
                        min_upper_margin = min_upper_margin.min(margin);
                        if margin < -slack {
                            violations.push(Violation {
                                alpha: trajectory.alpha[i],
                                t: s.t,
                                margin,
                                bound: BoundKind::Upper,
                            });
                        }
                    }
                    up_row.push(up);
                }
            }
            lower.push(lo_row);
            if monotonicity == Monotonicity::Decreasing {
                upper.push(up_row);
            }
        }
    }

    Ok(BoundsReport {
        h0,
        c,
        d,
        t_star_bound,
        monotonicity,
        integral_gc_limit,
        integral_gd_limit,
        predicted,
        blowup_window,
        lower,
        upper,
        checked_nodes: nodes.len(),
        min_lower_margin,
        min_upper_margin,
        violations,
        verified,
    })
}

fn envelope(base: f64, denominator: f64, exponent: f64) -> f64 {
    if denominator > 0.0 {
        base / denominator.powf(2.0 / exponent)
    } else {
        f64::INFINITY
    }
}

/// `∫₀^{t_k} g^p` at increasing times, accumulated panel by panel.
fn cumulative_power(g: &FunctionDescriptor, p: f64, times: &[f64]) -> Vec<f64> {
    let closed = !g.has_jumps() && matches!(g.kind, FunctionKind::Constant { .. } | FunctionKind::Exponential { .. });
    if closed {
        return times.iter().map(|&t| power_integral(g, p, t)).collect();
    }
    let mut acc = 0.0;
    let mut prev = 0.0;
    times
        .iter()
        .map(|&t| {
            if t > prev {
                let panels = 2 * (((t - prev) / 1e-3).ceil() as usize).max(2);
                acc += simpson_fn(|x| g.value(x).powf(p), prev, t, panels);
                prev = t;
            }
            acc
        })
        .collect()
}
