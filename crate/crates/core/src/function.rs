//! Catalog of data functions `f(α)`, `u₀(α)` and `g(t)`.
//!
//! A [`FunctionDescriptor`] is a closed-form catalog entry (or a linearly interpolated
//! table), optionally carrying additive jump discontinuities and an overall scale.
//! Every catalog kind has an exact antiderivative; constants and polynomials (with
//! jumps) additionally convert to [`StepPolynomial`] so products such as `f·u₀` can
//! be integrated exactly.

use serde::{Deserialize, Serialize};

use crate::error::{input, Result};

/// One sinusoidal term `amplitude · sin(2π · frequency · x + phase)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Harmonic {
    pub amplitude: f64,
    pub frequency: f64,
    #[serde(default)]
    pub phase: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum FunctionKind {
    Constant {
        value: f64,
    },
    /// Coefficients in ascending degree.
    Polynomial {
        coefficients: Vec<f64>,
    },
    Trigonometric {
        #[serde(default)]
        offset: f64,
        terms: Vec<Harmonic>,
    },
    /// `(1 - t/t_b)^{-(1+β)}`, finite only on `[0, t_b)`.
    SingularBoundary {
        beta: f64,
        #[serde(default = "one")]
        t_b: f64,
    },
    /// `exp(rate · x)`.
    Exponential {
        rate: f64,
    },
    /// Linear interpolation between strictly increasing nodes, constant outside.
    Table {
        nodes: Vec<f64>,
        values: Vec<f64>,
    },
}

fn one() -> f64 {
    1.0
}

fn is_one(x: &f64) -> bool {
    *x == 1.0
}

/// Additive step `size · 1[x ≥ location]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub location: f64,
    pub size: f64,
}

/// A data function: `scale · (base(x) + Σ jumps)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionDescriptor {
    #[serde(flatten)]
    pub kind: FunctionKind,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub scale: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub jumps: Vec<Jump>,
}

impl From<FunctionKind> for FunctionDescriptor {
    fn from(kind: FunctionKind) -> Self {
        Self {
            kind,
            scale: 1.0,
            jumps: Vec::new(),
        }
    }
}

impl FunctionDescriptor {
    pub fn constant(value: f64) -> Self {
        FunctionKind::Constant { value }.into()
    }

    pub fn polynomial(coefficients: impl Into<Vec<f64>>) -> Self {
        FunctionKind::Polynomial {
            coefficients: coefficients.into(),
        }
        .into()
    }

    pub fn singular_boundary(beta: f64) -> Self {
        FunctionKind::SingularBoundary { beta, t_b: 1.0 }.into()
    }

    pub fn exponential(rate: f64) -> Self {
        FunctionKind::Exponential { rate }.into()
    }

    pub fn sine(offset: f64, amplitude: f64, frequency: f64) -> Self {
        FunctionKind::Trigonometric {
            offset,
            terms: vec![Harmonic {
                amplitude,
                frequency,
                phase: 0.0,
            }],
        }
        .into()
    }

    pub fn table(nodes: Vec<f64>, values: Vec<f64>) -> Self {
        FunctionKind::Table { nodes, values }.into()
    }

    pub fn with_jump(mut self, location: f64, size: f64) -> Self {
        self.jumps.push(Jump { location, size });
        self
    }

    pub fn scaled(mut self, factor: f64) -> Self {
        self.scale *= factor;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.scale.is_finite() {
            return input("scale must be finite");
        }
        if self.jumps.iter().any(|j| !j.location.is_finite() || !j.size.is_finite()) {
            return input("jump parameters must be finite");
        }
        match &self.kind {
            FunctionKind::Constant { value } if !value.is_finite() => input("constant must be finite"),
            FunctionKind::Polynomial { coefficients } => {
                if coefficients.is_empty() {
                    input("polynomial needs at least one coefficient")
                } else if coefficients.iter().any(|c| !c.is_finite()) {
                    input("polynomial coefficients must be finite")
                } else {
                    Ok(())
                }
            }
            FunctionKind::Trigonometric { offset, terms } => {
                let bad = !offset.is_finite()
                    || terms
                        .iter()
                        .any(|h| !(h.amplitude.is_finite() && h.frequency.is_finite() && h.phase.is_finite()));
                if bad {
                    input("trigonometric parameters must be finite")
                } else {
                    Ok(())
                }
            }
            FunctionKind::SingularBoundary { beta, t_b } => {
                if !(*beta > 0.0 && beta.is_finite()) {
                    input(format!("singular boundary exponent must be positive, got beta = {beta}"))
                } else if !(*t_b > 0.0 && t_b.is_finite()) {
                    input(format!("boundary blow-up time must be positive, got t_b = {t_b}"))
                } else {
                    Ok(())
                }
            }
            FunctionKind::Exponential { rate } if !rate.is_finite() => input("exponential rate must be finite"),
            FunctionKind::Table { nodes, values } => {
                if nodes.len() != values.len() {
                    input("table nodes and values differ in length")
                } else if nodes.len() < 2 {
                    input("table needs at least two nodes")
                } else if nodes.iter().chain(values).any(|v| !v.is_finite()) {
                    input("table entries must be finite")
                } else if nodes.windows(2).any(|w| w[1] <= w[0]) {
                    input("table nodes must be strictly increasing")
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    /// Right end of the domain of finiteness, if any.
    pub fn blowup_point(&self) -> Option<f64> {
        match self.kind {
            FunctionKind::SingularBoundary { t_b, .. } => Some(t_b),
            _ => None,
        }
    }

    pub fn has_jumps(&self) -> bool {
        !self.jumps.is_empty()
    }

    fn jump_sum(&self, x: f64, inclusive: bool) -> f64 {
        self.jumps
            .iter()
            .filter(|j| if inclusive { x >= j.location } else { x > j.location })
            .map(|j| j.size)
            .sum()
    }

    /// Value at `x` (right-continuous at jumps).
    pub fn value(&self, x: f64) -> f64 {
        self.scale * (self.base_value(x) + self.jump_sum(x, true))
    }

    /// Left limit at `x`.
    pub fn value_left(&self, x: f64) -> f64 {
        self.scale * (self.base_value(x) + self.jump_sum(x, false))
    }

    fn base_value(&self, x: f64) -> f64 {
        match &self.kind {
            FunctionKind::Constant { value } => *value,
            FunctionKind::Polynomial { coefficients } => horner(coefficients, x),
            FunctionKind::Trigonometric { offset, terms } => {
                offset
                    + terms
                        .iter()
                        .map(|h| h.amplitude * (std::f64::consts::TAU * h.frequency * x + h.phase).sin())
                        .sum::<f64>()
            }
            FunctionKind::SingularBoundary { beta, t_b } => {
                if x >= *t_b {
                    f64::INFINITY
                } else {
                    (1.0 - x / t_b).powf(-(1.0 + beta))
                }
            }
            FunctionKind::Exponential { rate } => (rate * x).exp(),
            FunctionKind::Table { nodes, values } => table_value(nodes, values, x),
        }
    }

    /// Derivative of the smooth part (jumps contribute nothing).
    pub fn derivative(&self, x: f64) -> f64 {
        let d = match &self.kind {
            FunctionKind::Constant { .. } => 0.0,
            FunctionKind::Polynomial { coefficients } => horner(&poly_derivative(coefficients), x),
            FunctionKind::Trigonometric { terms, .. } => terms
                .iter()
                .map(|h| {
                    let w = std::f64::consts::TAU * h.frequency;
                    h.amplitude * w * (w * x + h.phase).cos()
                })
                .sum(),
            FunctionKind::SingularBoundary { beta, t_b } => {
                if x >= *t_b {
                    f64::INFINITY
                } else {
                    (1.0 + beta) / t_b * (1.0 - x / t_b).powf(-(2.0 + beta))
                }
            }
            FunctionKind::Exponential { rate } => rate * (rate * x).exp(),
            FunctionKind::Table { nodes, values } => {
                let n = nodes.len();
                if x < nodes[0] || x > nodes[n - 1] {
                    0.0
                } else {
                    let k = table_cell(nodes, x);
                    (values[k + 1] - values[k]) / (nodes[k + 1] - nodes[k])
                }
            }
        };
        self.scale * d
    }

    /// Exact antiderivative normalized to vanish at `x = 0`.
    pub fn antiderivative(&self, x: f64) -> f64 {
        let base = match &self.kind {
            FunctionKind::Constant { value } => value * x,
            FunctionKind::Polynomial { coefficients } => horner(&poly_antiderivative(coefficients), x),
            FunctionKind::Trigonometric { offset, terms } => {
                offset * x
                    + terms
                        .iter()
                        .map(|h| {
                            let w = std::f64::consts::TAU * h.frequency;
                            if w == 0.0 {
                                h.amplitude * h.phase.sin() * x
                            } else {
                                h.amplitude / w * (h.phase.cos() - (w * x + h.phase).cos())
                            }
                        })
                        .sum::<f64>()
            }
            FunctionKind::SingularBoundary { beta, t_b } => {
                if x >= *t_b {
                    f64::INFINITY
                } else {
                    // (t_b/β)((1 - x/t_b)^{-β} - 1), written with expm1 for small x
                    t_b / beta * (-beta * (-x / t_b).ln_1p()).exp_m1()
                }
            }
            FunctionKind::Exponential { rate } => {
                if *rate == 0.0 {
                    x
                } else {
                    (rate * x).exp_m1() / rate
                }
            }
            FunctionKind::Table { nodes, values } => table_primitive(nodes, values, x) - table_primitive(nodes, values, 0.0),
        };
        let jumps: f64 = self
            .jumps
            .iter()
            .map(|j| {
                let from = j.location.max(0.0);
                if x >= from {
                    j.size * (x - from)
                } else if j.location <= 0.0 {
                    // jump already active at 0: contributes on [x, 0] for negative x
                    j.size * x
                } else {
                    0.0
                }
            })
            .sum();
        self.scale * (base + jumps)
    }

    /// Exact piecewise-polynomial form, for constants and polynomials.
    pub fn step_polynomial(&self) -> Option<StepPolynomial> {
        let base = match &self.kind {
            FunctionKind::Constant { value } => vec![*value],
            FunctionKind::Polynomial { coefficients } => coefficients.clone(),
            _ => return None,
        };
        let mut terms = vec![StepTerm {
            from: None,
            poly: scale_poly(&base, self.scale),
        }];
        for j in &self.jumps {
            terms.push(StepTerm {
                from: Some(j.location),
                poly: vec![self.scale * j.size],
            });
        }
        Some(StepPolynomial { terms })
    }
}

fn table_cell(nodes: &[f64], x: f64) -> usize {
    let n = nodes.len();
    match nodes.binary_search_by(|p| p.partial_cmp(&x).expect("finite")) {
        Ok(k) => k.min(n - 2),
        Err(k) => k.saturating_sub(1).min(n - 2),
    }
}

fn table_value(nodes: &[f64], values: &[f64], x: f64) -> f64 {
    let n = nodes.len();
    if x <= nodes[0] {
        return values[0];
    }
    if x >= nodes[n - 1] {
        return values[n - 1];
    }
    let k = table_cell(nodes, x);
    let w = (x - nodes[k]) / (nodes[k + 1] - nodes[k]);
    values[k] + w * (values[k + 1] - values[k])
}

/// Integral of the table function from `nodes[0]` to `x` (negative below `nodes[0]`).
fn table_primitive(nodes: &[f64], values: &[f64], x: f64) -> f64 {
    let n = nodes.len();
    if x <= nodes[0] {
        return values[0] * (x - nodes[0]);
    }
    let mut acc = 0.0;
    for k in 0..n - 1 {
        let (a, b) = (nodes[k], nodes[k + 1]);
        if x <= a {
            break;
        }
        let hi = x.min(b);
        let v_hi = table_value(nodes, values, hi);
        acc += 0.5 * (values[k] + v_hi) * (hi - a);
    }
    if x > nodes[n - 1] {
        acc += values[n - 1] * (x - nodes[n - 1]);
    }
    acc
}

pub(crate) fn horner(coefficients: &[f64], x: f64) -> f64 {
    coefficients.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

fn poly_derivative(c: &[f64]) -> Vec<f64> {
    if c.len() <= 1 {
        return vec![0.0];
    }
    c.iter().enumerate().skip(1).map(|(k, a)| k as f64 * a).collect()
}

/// Antiderivative with zero constant term.
fn poly_antiderivative(c: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(c.len() + 1);
    out.push(0.0);
    out.extend(c.iter().enumerate().map(|(k, a)| a / (k + 1) as f64));
    out
}

fn scale_poly(c: &[f64], s: f64) -> Vec<f64> {
    c.iter().map(|a| a * s).collect()
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
struct StepTerm {
    /// Term is active for `x ≥ from`; `None` means everywhere.
    from: Option<f64>,
    poly: Vec<f64>,
}

/// Sum of polynomials switched on at step locations: `Σ p_k(x) · 1[x ≥ a_k]`.
#[derive(Clone, Debug, PartialEq)]
pub struct StepPolynomial {
    terms: Vec<StepTerm>,
}

impl StepPolynomial {
    pub fn value(&self, x: f64) -> f64 {
        self.terms
            .iter()
            .filter(|t| t.from.is_none_or(|a| x >= a))
            .map(|t| horner(&t.poly, x))
            .sum()
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                let from = match (a.from, b.from) {
                    (None, x) | (x, None) => x,
                    (Some(x), Some(y)) => Some(x.max(y)),
                };
                terms.push(StepTerm {
                    from,
                    poly: poly_mul(&a.poly, &b.poly),
                });
            }
        }
        Self { terms }
    }

    /// Exact `∫_0^x`, for `x ≥ 0`.
    pub fn integral_from_zero(&self, x: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let prim = poly_antiderivative(&t.poly);
                let start = t.from.map_or(0.0, |a| a.max(0.0));
                if x <= start {
                    0.0
                } else {
                    horner(&prim, x) - horner(&prim, start)
                }
            })
            .sum()
    }

    /// True when no step switches on inside `(0, ∞)`.
    pub fn is_polynomial(&self) -> bool {
        self.terms.iter().all(|t| t.from.is_none_or(|a| a <= 0.0))
    }
}
