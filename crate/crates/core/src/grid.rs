//! Sampled functions on strictly increasing nodes.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{input, Result};

/// Samples of a real function with linear interpolation between nodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    nodes: Vec<f64>,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(nodes: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if nodes.len() != values.len() {
            return input(format!(
                "grid has {} nodes but {} values",
                nodes.len(),
                values.len()
            ));
        }
        if nodes.is_empty() {
            return input("grid is empty");
        }
        if nodes.iter().any(|x| !x.is_finite()) {
            return input("grid nodes must be finite");
        }
        if nodes.windows(2).any(|w| w[1] <= w[0]) {
            return input("grid nodes must be strictly increasing");
        }
        Ok(Self { nodes, values })
    }

    /// Samples `f` on `n` uniformly spaced nodes covering `[a, b]`.
    pub fn sample(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let nodes = uniform_nodes(a, b, n)?;
        let values = nodes.iter().map(|&x| f(x)).collect();
        Self::new(nodes, values)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Index of the cell `[x_k, x_{k+1}]` containing `x`, clamped to the grid.
    pub fn cell(&self, x: f64) -> usize {
        let n = self.nodes.len();
        if n < 2 || x <= self.nodes[0] {
            return 0;
        }
        match self
            .nodes
            .binary_search_by(|probe| probe.partial_cmp(&x).expect("finite nodes"))
        {
            Ok(k) => k.min(n - 2),
            Err(k) => (k - 1).min(n - 2),
        }
    }

    /// Linear interpolation; constant extrapolation outside the node range.
    /// Evaluation at a node returns the stored value exactly.
    pub fn value(&self, x: f64) -> f64 {
        let n = self.nodes.len();
        if n == 1 || x <= self.nodes[0] {
            return self.values[0];
        }
        if x >= self.nodes[n - 1] {
            return self.values[n - 1];
        }
        let k = self.cell(x);
        let (x0, x1) = (self.nodes[k], self.nodes[k + 1]);
        if x == x0 {
            return self.values[k];
        }
        let w = (x - x0) / (x1 - x0);
        self.values[k] + w * (self.values[k + 1] - self.values[k])
    }

    /// Uniform spacing, if the nodes are uniform to within a relative `1e-9`.
    pub fn uniform_step(&self) -> Option<f64> {
        let n = self.nodes.len();
        if n < 2 {
            return None;
        }
        let h = (self.nodes[n - 1] - self.nodes[0]) / (n - 1) as f64;
        let uniform = self
            .nodes
            .windows(2)
            .all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h.abs().max(1e-300));
        uniform.then_some(h)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Two-column CSV: a header row then `node,value` rows.
    pub fn write_csv<W: Write>(&self, mut w: W, header: (&str, &str)) -> io::Result<()> {
        writeln!(w, "{},{}", header.0, header.1)?;
        for (x, v) in self.nodes.iter().zip(&self.values) {
            writeln!(w, "{x},{v}")?;
        }
        Ok(())
    }
}

/// `n` uniformly spaced nodes from `a` to `b`; endpoints are exact.
pub fn uniform_nodes(a: f64, b: f64, n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return input("a grid needs at least one node");
    }
    if n == 1 {
        return Ok(vec![a]);
    }
    if !(b > a) {
        return input(format!("grid interval [{a}, {b}] is empty"));
    }
    let h = (b - a) / (n - 1) as f64;
    let mut nodes: Vec<f64> = (0..n).map(|i| a + h * i as f64).collect();
    nodes[n - 1] = b;
    Ok(nodes)
}
