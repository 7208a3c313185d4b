use crate::error::{Error, Result};

/// Composite Simpson nodes and weights over `[0, τ]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    tau: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureGrid {
    pub const DEFAULT_POINTS: usize = 2049;

    /// Formal order of the composite rule for smooth integrands.
    pub const ORDER: u32 = 4;

    /// `n_points` must be odd and at least 3.
    pub fn new(tau: f64, n_points: usize) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidGrid(format!("tau must be positive, got {tau}")));
        }
        if n_points < 3 || n_points.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "Simpson grids need an odd node count >= 3, got {n_points}"
            )));
        }
        let nodes = crate::profiles::uniform_times(tau, n_points);
        let h = tau / (n_points - 1) as f64;
        let weights = (0..n_points)
            .map(|i| {
                let w = if i == 0 || i + 1 == n_points {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                w * h / 3.0
            })
            .collect();
        Ok(Self { tau, nodes, weights })
    }

    pub fn standard(tau: f64) -> Result<Self> {
        Self::new(tau, Self::DEFAULT_POINTS)
    }

    /// The grid with every interval halved.
    pub fn refined(&self) -> Self {
        Self::new(self.tau, 2 * self.nodes.len() - 1).expect("refining a valid grid")
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weighted sum of values sampled at the nodes.
    pub fn sum(&self, values: &[f64]) -> Result<f64> {
        if values.len() != self.nodes.len() {
            return Err(Error::ShapeMismatch {
                expected: self.nodes.len(),
                found: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteIntegrand {
                index: i,
                t: self.nodes[i],
            });
        }
        Ok(values.iter().zip(&self.weights).map(|(v, w)| v * w).sum())
    }
}

/// An integral on a grid and on its refinement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub refined: f64,
}

impl Integral {
    /// Richardson-style error estimate of the refined value.
    pub fn error_estimate(&self) -> f64 {
        (self.refined - self.value).abs() / (2f64.powi(QuadratureGrid::ORDER as i32) - 1.0)
    }

    pub fn rel_change(&self) -> f64 {
        let scale = self.refined.abs().max(self.value.abs());
        if scale == 0.0 {
            0.0
        } else {
            (self.refined - self.value).abs() / scale
        }
    }
}

pub fn integrate(f: impl Fn(f64) -> f64, grid: &QuadratureGrid) -> Result<Integral> {
    let fine = grid.refined();
    let sample = |g: &QuadratureGrid| g.sum(&g.nodes().iter().map(|&t| f(t)).collect::<Vec<_>>());
    Ok(Integral {
        value: sample(grid)?,
        refined: sample(&fine)?,
    })
}
