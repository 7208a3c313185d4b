//! Frequency ramp represented by a small sigmoid network of normalized time.
//!
//! `t ↦ features (t/τ)³..(t/τ)^N_max → dense sigmoid layers → one sigmoid
//! unit → affine map onto [ω₁ − mΔω, ω₂ + mΔω]`.
//!
//! Parameters are a flat vector; each layer stores its weight matrix
//! row-major as `[out][in]` followed by its biases. Time derivatives are
//! carried forward as jets, so ω̇ and ω̈ are exact for any parameters.
//! [`NeuralProfile::backward_batch`] is the reverse sweep through those jets
//! that training uses for ∂/∂θ.

use ndarray::{s, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::{Endpoints, Jet2, ProfileModel};
use crate::diffengine::{sigmoid, Jet, JetScalar, Real};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Architecture {
    /// Widths of the hidden sigmoid layers.
    pub hidden: Vec<usize>,
    /// Highest power of the polynomial feature layer; features start at 3.
    pub n_max: usize,
    /// Output range margin, as a fraction of ω₂ − ω₁ on each side.
    pub margin: f64,
}

impl Default for Architecture {
    fn default() -> Self {
        Self {
            hidden: vec![100, 100, 100],
            n_max: 10,
            margin: 0.25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: usize,
    pub biases: usize,
}

impl Architecture {
    pub fn reduced(depth: usize, width: usize) -> Self {
        Self {
            hidden: vec![width; depth],
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_max < 3 {
            return Err(Error::InvalidProfile(format!("n_max must be >= 3, got {}", self.n_max)));
        }
        if self.hidden.contains(&0) {
            return Err(Error::InvalidProfile("hidden layer of width 0".into()));
        }
        if !(self.margin >= 0.0 && self.margin.is_finite()) {
            return Err(Error::InvalidProfile(format!("invalid margin {}", self.margin)));
        }
        Ok(())
    }

    pub fn n_features(&self) -> usize {
        self.n_max - 2
    }

    pub(crate) fn layers(&self) -> Vec<Layer> {
        let mut out = Vec::with_capacity(self.hidden.len() + 1);
        let mut inputs = self.n_features();
        let mut offset = 0;
        for &outputs in self.hidden.iter().chain(std::iter::once(&1)) {
            let weights = offset;
            let biases = weights + inputs * outputs;
            out.push(Layer {
                inputs,
                outputs,
                weights,
                biases,
            });
            offset = biases + outputs;
            inputs = outputs;
        }
        out
    }

    pub fn param_count(&self) -> usize {
        self.layers().last().map_or(0, |l| l.biases + l.outputs)
    }

    /// `(fan_in, fan_out, weight_offset, bias_offset)` per layer, input first.
    pub fn layer_shapes(&self) -> Vec<(usize, usize, usize, usize)> {
        self.layers()
            .into_iter()
            .map(|l| (l.inputs, l.outputs, l.weights, l.biases))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeuralProfile {
    arch: Architecture,
    theta: Vec<f64>,
    endpoints: Endpoints,
    layers: Vec<Layer>,
}

/// Everything the reverse sweep needs from a batched forward pass.
#[derive(Debug, Clone)]
pub struct BatchTrace {
    n: usize,
    /// Per layer: stacked inputs `[values; d/dt; d²/dt²]`, shape `(3n, in)`.
    inputs: Vec<Array2<f64>>,
    /// Per layer: stacked pre-activations, shape `(3n, out)`.
    pre: Vec<Array2<f64>>,
    /// `(ω, ω̇, ω̈)` per instant.
    pub omega: Vec<[f64; 3]>,
}

impl NeuralProfile {
    pub fn new(arch: Architecture, theta: Vec<f64>, endpoints: Endpoints) -> Result<Self> {
        arch.validate()?;
        let expected = arch.param_count();
        if theta.len() != expected {
            return Err(Error::ShapeMismatch {
                expected,
                found: theta.len(),
            });
        }
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidProfile("non-finite network parameter".into()));
        }
        let layers = arch.layers();
        Ok(Self {
            arch,
            theta,
            endpoints,
            layers,
        })
    }

    pub fn zeros(arch: Architecture, endpoints: Endpoints) -> Result<Self> {
        let n = arch.param_count();
        Self::new(arch, vec![0.0; n], endpoints)
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn set_theta(&mut self, theta: &[f64]) {
        assert_eq!(theta.len(), self.theta.len());
        self.theta.copy_from_slice(theta);
    }

    pub fn with_theta(&self, theta: &[f64]) -> Self {
        let mut p = self.clone();
        p.set_theta(theta);
        p
    }

    /// Output frequency range `(lo, hi)`.
    pub fn range(&self) -> (f64, f64) {
        let m = self.arch.margin * self.endpoints.delta();
        (self.endpoints.omega1 - m, self.endpoints.omega2 + m)
    }

    fn features(&self, t: f64) -> Vec<JetScalar> {
        let tau = self.endpoints.tau;
        let s = t / tau;
        (3..=self.arch.n_max as i32)
            .map(|n| {
                let nf = n as f64;
                let sn2 = s.powi(n - 2);
                Jet::new(sn2 * s * s, nf * sn2 * s / tau, nf * (nf - 1.0) * sn2 / (tau * tau))
            })
            .collect()
    }

    /// Forward pass over any [`Real`], with `theta` in place of the stored
    /// parameters. Used to record the network on a tape.
    pub fn forward_with<T: Real>(&self, theta: &[T], t: f64) -> Jet<T> {
        assert_eq!(theta.len(), self.theta.len());
        let feats = self.features(t);
        let first = &self.layers[0];
        let mut act: Vec<Jet<T>> = (0..first.outputs)
            .map(|j| {
                let w = &theta[first.weights + j * first.inputs..][..first.inputs];
                let (mut v, mut d1, mut d2) = (theta[first.biases + j], w[0] * feats[0].d1, w[0] * feats[0].d2);
                v = v + w[0] * feats[0].v;
                for k in 1..first.inputs {
                    v = v + w[k] * feats[k].v;
                    d1 = d1 + w[k] * feats[k].d1;
                    d2 = d2 + w[k] * feats[k].d2;
                }
                Jet::new(v, d1, d2).sigmoid()
            })
            .collect();
        for layer in &self.layers[1..] {
            act = (0..layer.outputs)
                .map(|j| {
                    let w = &theta[layer.weights + j * layer.inputs..][..layer.inputs];
                    let mut z = act[0].scale(w[0]) + Jet::constant(theta[layer.biases + j]);
                    for k in 1..layer.inputs {
                        z = z + act[k].scale(w[k]);
                    }
                    z.sigmoid()
                })
                .collect();
        }
        let (lo, hi) = self.range();
        act[0] * (hi - lo) + lo
    }

    /// Forward pass over many instants at once, keeping what
    /// [`backward_batch`](Self::backward_batch) needs.
    pub fn forward_batch(&self, ts: &[f64]) -> BatchTrace {
        let n = ts.len();
        let nf = self.arch.n_features();
        let mut x = Array2::<f64>::zeros((3 * n, nf));
        for (i, &t) in ts.iter().enumerate() {
            for (k, f) in self.features(t).into_iter().enumerate() {
                x[[i, k]] = f.v;
                x[[n + i, k]] = f.d1;
                x[[2 * n + i, k]] = f.d2;
            }
        }
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let w = self.weight_view(layer);
            let mut z = x.dot(&w.t());
            let b = &self.theta[layer.biases..layer.biases + layer.outputs];
            for mut row in z.slice_mut(s![..n, ..]).rows_mut() {
                for (zj, bj) in row.iter_mut().zip(b) {
                    *zj += bj;
                }
            }
            let mut a = Array2::<f64>::zeros((3 * n, layer.outputs));
            for i in 0..n {
                for j in 0..layer.outputs {
                    let sg = sigmoid(z[[i, j]]);
                    let s1 = sg * (1.0 - sg);
                    let s2 = s1 * (1.0 - 2.0 * sg);
                    let zd1 = z[[n + i, j]];
                    let zd2 = z[[2 * n + i, j]];
                    a[[i, j]] = sg;
                    a[[n + i, j]] = s1 * zd1;
                    a[[2 * n + i, j]] = s2 * zd1 * zd1 + s1 * zd2;
                }
            }
            inputs.push(std::mem::replace(&mut x, a));
            pre.push(z);
        }
        let (lo, hi) = self.range();
        let span = hi - lo;
        let omega = (0..n)
            .map(|i| [lo + span * x[[i, 0]], span * x[[n + i, 0]], span * x[[2 * n + i, 0]]])
            .collect();
        BatchTrace { n, inputs, pre, omega }
    }

    /// Gradient with respect to θ of a scalar whose partials with respect to
    /// `(ω, ω̇, ω̈)` at each traced instant are `adjoint`.
    pub fn backward_batch(&self, trace: &BatchTrace, adjoint: &[[f64; 3]]) -> Vec<f64> {
        let n = trace.n;
        assert_eq!(adjoint.len(), n);
        let (lo, hi) = self.range();
        let span = hi - lo;
        let mut grad = vec![0.0; self.theta.len()];
        let mut abar = Array2::<f64>::zeros((3 * n, 1));
        for (i, a) in adjoint.iter().enumerate() {
            abar[[i, 0]] = span * a[0];
            abar[[n + i, 0]] = span * a[1];
            abar[[2 * n + i, 0]] = span * a[2];
        }
        for (l, layer) in self.layers.iter().enumerate().rev() {
            let z = &trace.pre[l];
            let mut zbar = Array2::<f64>::zeros((3 * n, layer.outputs));
            for i in 0..n {
                for j in 0..layer.outputs {
                    let sg = sigmoid(z[[i, j]]);
                    let s1 = sg * (1.0 - sg);
                    let s2 = s1 * (1.0 - 2.0 * sg);
                    let s3 = s2 * (1.0 - 2.0 * sg) - 2.0 * s1 * s1;
                    let zd1 = z[[n + i, j]];
                    let zd2 = z[[2 * n + i, j]];
                    let (av, a1, a2) = (abar[[i, j]], abar[[n + i, j]], abar[[2 * n + i, j]]);
                    zbar[[2 * n + i, j]] = a2 * s1;
                    zbar[[n + i, j]] = a1 * s1 + 2.0 * a2 * s2 * zd1;
                    zbar[[i, j]] = av * s1 + a1 * s2 * zd1 + a2 * (s3 * zd1 * zd1 + s2 * zd2);
                }
            }
            let gw = zbar.t().dot(&trace.inputs[l]);
            let wslot = &mut grad[layer.weights..layer.weights + layer.inputs * layer.outputs];
            for (g, v) in wslot.iter_mut().zip(gw.iter()) {
                *g = *v;
            }
            let gb = zbar.slice(s![..n, ..]).sum_axis(Axis(0));
            for (g, v) in grad[layer.biases..layer.biases + layer.outputs]
                .iter_mut()
                .zip(gb.iter())
            {
                *g = *v;
            }
            if l > 0 {
                abar = zbar.dot(&self.weight_view(layer));
            }
        }
        grad
    }

    fn weight_view(&self, layer: &Layer) -> ArrayView2<'_, f64> {
        let w = &self.theta[layer.weights..layer.weights + layer.inputs * layer.outputs];
        ArrayView2::from_shape((layer.outputs, layer.inputs), w).expect("layer shape")
    }
}

impl ProfileModel for NeuralProfile {
    fn endpoints(&self) -> Endpoints {
        self.endpoints
    }

    fn jet(&self, t: f64) -> Jet2 {
        let j = self.forward_with(&self.theta, t);
        Jet2::new(t, j.v, j.d1, j.d2)
    }

    fn jets(&self, ts: &[f64]) -> Vec<Jet2> {
        self.forward_batch(ts)
            .omega
            .into_iter()
            .zip(ts)
            .map(|(w, &t)| Jet2::new(t, w[0], w[1], w[2]))
            .collect()
    }
}
