//! The four worked examples: `u₀ ≡ 1` with `f = ±(2α - 1)` and either smooth
//! (`g = 2t + 1`) or singular (`g = (1 - t)^{-2}`) boundary data.

use crate::function::FunctionDescriptor as F;
use crate::problem::ProblemSpec;

fn build(f: F, g: F, n_alpha: usize) -> ProblemSpec {
    ProblemSpec::new(f, F::constant(1.0), g, n_alpha).expect("catalog data are valid")
}

/// `f = 2α - 1`, `g = 2t + 1`: `ψ₀ ≤ 0`, global solution.
pub fn example1(n_alpha: usize) -> ProblemSpec {
    build(F::polynomial([-1.0, 2.0]), F::polynomial([1.0, 2.0]), n_alpha)
}

/// `f = 1 - 2α`, `g = 2t + 1`: interior blow-up at `α = ½`.
pub fn example2(n_alpha: usize) -> ProblemSpec {
    build(F::polynomial([1.0, -2.0]), F::polynomial([1.0, 2.0]), n_alpha)
}

/// `f = 2α - 1`, `g = (1 - t)^{-2}`: blow-up induced by the boundary at `t_b = 1`.
pub fn example3(n_alpha: usize) -> ProblemSpec {
    build(F::polynomial([-1.0, 2.0]), F::singular_boundary(1.0), n_alpha)
}

/// `f = 1 - 2α`, `g = (1 - t)^{-2}`: interior blow-up before the boundary.
pub fn example4(n_alpha: usize) -> ProblemSpec {
    build(F::polynomial([1.0, -2.0]), F::singular_boundary(1.0), n_alpha)
}

/// Example `k ∈ 1..=4`.
pub fn example(k: usize, n_alpha: usize) -> Option<ProblemSpec> {
    match k {
        1 => Some(example1(n_alpha)),
        2 => Some(example2(n_alpha)),
        3 => Some(example3(n_alpha)),
        4 => Some(example4(n_alpha)),
        _ => None,
    }
}

/// Same `f`, `u₀` with singular boundary data of exponent `beta`.
pub fn with_singular_boundary(spec: &ProblemSpec, beta: f64) -> crate::Result<ProblemSpec> {
    ProblemSpec::new(spec.f.clone(), spec.u0.clone(), F::singular_boundary(beta), spec.n_alpha)
}
