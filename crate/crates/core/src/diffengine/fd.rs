//! Finite-difference validation of exact gradients.

use super::tape::{param_gradient, Tape, Var};
use crate::error::Result;

/// Objective value plus the arguments of every nondifferentiable primitive
/// (`abs`, `relu`) it passed through, in a fixed order.
#[derive(Debug, Clone)]
pub struct Probe {
    pub value: f64,
    pub kinks: Vec<f64>,
}

/// A scalar objective that can report its exact gradient.
pub trait Differentiable {
    fn evaluate(&self, theta: &[f64]) -> Result<Probe>;
    fn gradient(&self, theta: &[f64]) -> Result<Vec<f64>>;

    /// Value and gradient together; override when one sweep yields both.
    fn value_and_gradient(&self, theta: &[f64]) -> Result<(f64, Vec<f64>)> {
        Ok((self.evaluate(theta)?.value, self.gradient(theta)?))
    }
}

/// Adapts a tape-recordable closure to [`Differentiable`].
pub struct TapeObjective<F>(pub F);

impl<F> TapeObjective<F>
where
    F: for<'t> Fn(&[Var<'t>]) -> Var<'t>,
{
    /// Wraps a closure; going through here lets the compiler infer its
    /// higher-ranked signature.
    pub fn new(f: F) -> Self {
        Self(f)
    }
}

impl<F> Differentiable for TapeObjective<F>
where
    F: for<'t> Fn(&[Var<'t>]) -> Var<'t>,
{
    fn evaluate(&self, theta: &[f64]) -> Result<Probe> {
        let tape = Tape::new();
        let vars = tape.vars(theta);
        let out = (self.0)(&vars);
        Ok(Probe {
            value: out.val(),
            kinks: tape.kinks(),
        })
    }

    fn gradient(&self, theta: &[f64]) -> Result<Vec<f64>> {
        Ok(param_gradient(&self.0, theta)?.gradient)
    }
}

#[derive(Debug, Clone)]
pub struct FdReport {
    /// Largest deviation over the components that were not flagged.
    pub max_deviation: f64,
    pub worst_index: Option<usize>,
    /// `|AD − FD| / (|AD| + |FD| + ε)` per component.
    pub deviations: Vec<f64>,
    pub analytic: Vec<f64>,
    pub numeric: Vec<f64>,
    /// Components whose stencil crossed a kink; excluded from `max_deviation`.
    pub kink_flagged: Vec<usize>,
}

impl FdReport {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_deviation < tolerance
    }
}

fn kink_signs(kinks: &[f64]) -> Vec<i8> {
    kinks
        .iter()
        .map(|&k| {
            if k > 0.0 {
                1
            } else if k < 0.0 {
                -1
            } else {
                0
            }
        })
        .collect()
}

/// Compares the exact gradient against a fourth-order central difference
/// with step `h·max(1, |θᵢ|)`.
///
/// A component is flagged, and left out of the maximum, when any kink
/// argument changes sign across its stencil, or sits exactly on a kink.
pub fn fd_check<D: Differentiable + ?Sized>(objective: &D, theta: &[f64], h: f64) -> Result<FdReport> {
    assert!(h > 0.0, "finite-difference step must be positive");
    let analytic = objective.gradient(theta)?;
    let base = kink_signs(&objective.evaluate(theta)?.kinks);
    let on_kink = base.contains(&0);

    let mut numeric = Vec::with_capacity(theta.len());
    let mut deviations = Vec::with_capacity(theta.len());
    let mut kink_flagged = Vec::new();
    let mut max_deviation: f64 = 0.0;
    let mut worst_index = None;
    let mut point = theta.to_vec();

    for i in 0..theta.len() {
        let step = h * theta[i].abs().max(1.0);
        let mut values = [0.0; 4];
        let mut crossed = on_kink;
        for (slot, k) in [(0usize, -2.0), (1, -1.0), (2, 1.0), (3, 2.0)] {
            point[i] = theta[i] + k * step;
            let probe = objective.evaluate(&point)?;
            values[slot] = probe.value;
            if !crossed && kink_signs(&probe.kinks) != base {
                crossed = true;
            }
        }
        point[i] = theta[i];
        let fd = (values[0] - 8.0 * values[1] + 8.0 * values[2] - values[3]) / (12.0 * step);
        let ad = analytic[i];
        let dev = (ad - fd).abs() / (ad.abs() + fd.abs() + f64::EPSILON);
        numeric.push(fd);
        deviations.push(dev);
        if crossed {
            kink_flagged.push(i);
        } else if dev > max_deviation {
            max_deviation = dev;
            worst_index = Some(i);
        }
    }

    Ok(FdReport {
        max_deviation,
        worst_index,
        deviations,
        analytic,
        numeric,
        kink_flagged,
    })
}
