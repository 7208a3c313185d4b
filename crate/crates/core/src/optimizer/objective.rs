use serde::{Deserialize, Serialize};

use crate::costs::{QuadratureGrid, StrokeContext, SQRT3_OVER_4};
use crate::diffengine::{sign0, Differentiable, Probe, Real};
use crate::error::{Error, Result};
use crate::profiles::{Endpoints, NeuralProfile, ProfileModel};

/// Which cost functional the optimizer minimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CostMetric {
    /// The Schmidt-norm cost ⟨C⟩.
    #[default]
    Schmidt,
    /// The signed ⟨H_STA⟩ metric.
    Hsta,
}

impl CostMetric {
    fn prefactor(self, ctx: &StrokeContext) -> f64 {
        let c = ctx.thermal_factor() / ctx.tau;
        match self {
            CostMetric::Schmidt => c * SQRT3_OVER_4,
            CostMetric::Hsta => 0.25 * c,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
pub struct PenaltyWeights {
    pub p_w0: f64,
    pub p_dw0: f64,
    pub p_ddw0: f64,
    pub p_wT: f64,
    pub p_dwT: f64,
    pub p_ddwT: f64,
    pub p_delta: f64,
}

impl PenaltyWeights {
    pub fn uniform(p: f64, p_delta: f64) -> Self {
        Self {
            p_w0: p,
            p_dw0: p,
            p_ddw0: p,
            p_wT: p,
            p_dwT: p,
            p_ddwT: p,
            p_delta,
        }
    }

    pub fn zero() -> Self {
        Self::uniform(0.0, 0.0)
    }

    pub fn residual_weights(&self) -> [f64; 6] {
        [self.p_w0, self.p_dw0, self.p_ddw0, self.p_wT, self.p_dwT, self.p_ddwT]
    }

    /// The six residual weights multiplied by `k`; `p_delta` replaced.
    pub fn ramped(&self, k: f64, p_delta: f64) -> Self {
        Self {
            p_w0: self.p_w0 * k,
            p_dw0: self.p_dw0 * k,
            p_ddw0: self.p_ddw0 * k,
            p_wT: self.p_wT * k,
            p_dwT: self.p_dwT * k,
            p_ddwT: self.p_ddwT * k,
            p_delta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = self.residual_weights().into_iter().chain([self.p_delta]);
        if all.into_iter().all(|p| p >= 0.0 && p.is_finite()) {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "penalty weights must be finite and >= 0: {self:?}"
            )))
        }
    }
}

/// The objective split into its terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Breakdown {
    pub cost: f64,
    /// Weighted |residual| terms, then the weighted ordering term.
    pub penalties: [f64; 7],
    pub total: f64,
}

const TERM_NAMES: [&str; 7] = [
    "penalty omega(0)",
    "penalty domega(0)",
    "penalty ddomega(0)",
    "penalty omega(tau)",
    "penalty domega(tau)",
    "penalty ddomega(tau)",
    "penalty ordering",
];

fn check_finite(b: Breakdown) -> Result<Breakdown> {
    if !b.cost.is_finite() {
        return Err(Error::NonFiniteObjective { term: "cost" });
    }
    if let Some(k) = b.penalties.iter().position(|p| !p.is_finite()) {
        return Err(Error::NonFiniteObjective { term: TERM_NAMES[k] });
    }
    Ok(b)
}

/// `CF = cost + Σ pₖ|rₖ| + p_Δ·ReLU(ω(0) − ω(τ))` for any ramp, with the cost
/// term summed on `grid`.
pub fn penalty_objective(
    profile: &impl ProfileModel,
    endpoints: &Endpoints,
    ctx: &StrokeContext,
    grid: &QuadratureGrid,
    weights: &PenaltyWeights,
    metric: CostMetric,
) -> Result<Breakdown> {
    let jets = profile.jets(grid.nodes());
    let values: Vec<f64> = jets
        .iter()
        .map(|j| {
            let q = j.nonadiabatic_term() / j.omega;
            match metric {
                CostMetric::Schmidt => q.abs(),
                CostMetric::Hsta => q,
            }
        })
        .collect();
    let cost = metric.prefactor(ctx)
        * grid
            .sum(&values)
            .map_err(|_| Error::NonFiniteObjective { term: "cost" })?;
    let (a, b) = (jets[0], jets[jets.len() - 1]);
    let r = [
        a.omega - endpoints.omega1,
        a.domega,
        a.ddomega,
        b.omega - endpoints.omega2,
        b.domega,
        b.ddomega,
    ];
    let mut penalties = [0.0; 7];
    for (k, w) in weights.residual_weights().into_iter().enumerate() {
        penalties[k] = w * r[k].abs();
    }
    penalties[6] = weights.p_delta * (a.omega - b.omega).max(0.0);
    check_finite(Breakdown {
        cost,
        penalties,
        total: cost + penalties.iter().sum::<f64>(),
    })
}

/// The penalty objective of a network, as a function of its parameters.
///
/// Gradients come from one batched forward pass through the network jets
/// and the matching reverse sweep.
#[derive(Debug, Clone)]
pub struct PenaltyObjective {
    net: NeuralProfile,
    ctx: StrokeContext,
    grid: QuadratureGrid,
    weights: PenaltyWeights,
    metric: CostMetric,
}

impl PenaltyObjective {
    /// `net` fixes the architecture and endpoints; its parameters are ignored.
    pub fn new(
        net: NeuralProfile,
        ctx: StrokeContext,
        grid: QuadratureGrid,
        weights: PenaltyWeights,
        metric: CostMetric,
    ) -> Result<Self> {
        weights.validate()?;
        if (grid.tau() - net.tau()).abs() > 0.0 {
            return Err(Error::InvalidGrid(format!(
                "grid spans {} but the profile lasts {}",
                grid.tau(),
                net.tau()
            )));
        }
        Ok(Self {
            net,
            ctx,
            grid,
            weights,
            metric,
        })
    }

    pub fn weights(&self) -> &PenaltyWeights {
        &self.weights
    }

    pub fn set_weights(&mut self, weights: PenaltyWeights) -> Result<()> {
        weights.validate()?;
        self.weights = weights;
        Ok(())
    }

    pub fn network(&self, theta: &[f64]) -> NeuralProfile {
        self.net.with_theta(theta)
    }

    pub fn breakdown(&self, theta: &[f64]) -> Result<Breakdown> {
        let net = self.network(theta);
        penalty_objective(
            &net,
            &net.endpoints(),
            &self.ctx,
            &self.grid,
            &self.weights,
            self.metric,
        )
    }

    /// The same objective written over any [`Real`], one network evaluation
    /// per node. Slow; it exists so the batched gradient can be checked
    /// against an independent route.
    pub fn value_generic<T: Real>(&self, theta: &[T]) -> T {
        let ep = self.net.endpoints();
        let nodes = self.grid.nodes();
        let mut acc = theta[0].cst(0.0);
        let mut first = None;
        let mut last = None;
        for (i, (&t, &w)) in nodes.iter().zip(self.grid.weights()).enumerate() {
            let j = self.net.forward_with(theta, t);
            let q = (j.d1 * j.d1 * -0.75 / (j.v * j.v) + j.d2 * 0.5 / j.v) / j.v;
            let q = match self.metric {
                CostMetric::Schmidt => q.abs(),
                CostMetric::Hsta => q,
            };
            acc = acc + q * w;
            if i == 0 {
                first = Some(j);
            }
            if i + 1 == nodes.len() {
                last = Some(j);
            }
        }
        let (a, b) = (first.expect("grid has nodes"), last.expect("grid has nodes"));
        let p = self.weights.residual_weights();
        acc * self.metric.prefactor(&self.ctx)
            + (a.v - ep.omega1).abs() * p[0]
            + a.d1.abs() * p[1]
            + a.d2.abs() * p[2]
            + (b.v - ep.omega2).abs() * p[3]
            + b.d1.abs() * p[4]
            + b.d2.abs() * p[5]
            + (a.v - b.v).relu() * self.weights.p_delta
    }

    /// Value, per-term breakdown and gradient in one batched sweep.
    pub fn evaluate_with_gradient(&self, theta: &[f64]) -> Result<(Breakdown, Vec<f64>)> {
        let net = self.network(theta);
        let ep = net.endpoints();
        let trace = net.forward_batch(self.grid.nodes());
        let k = self.metric.prefactor(&self.ctx);
        let n = trace.omega.len();
        let mut adjoint = vec![[0.0; 3]; n];
        let mut sum = 0.0;
        for (i, (&[w, dw, ddw], &wt)) in trace.omega.iter().zip(self.grid.weights()).enumerate() {
            let (w2, w3) = (w * w, w * w * w);
            let q = -0.75 * dw * dw / w3 + 0.5 * ddw / w2;
            let dq = [2.25 * dw * dw / (w3 * w) - ddw / w3, -1.5 * dw / w3, 0.5 / w2];
            let (val, s) = match self.metric {
                CostMetric::Schmidt => (q.abs(), sign0(q)),
                CostMetric::Hsta => (q, 1.0),
            };
            sum += wt * val;
            for c in 0..3 {
                adjoint[i][c] = k * wt * s * dq[c];
            }
        }
        let cost = k * sum;
        let (a, b) = (trace.omega[0], trace.omega[n - 1]);
        let r = [a[0] - ep.omega1, a[1], a[2], b[0] - ep.omega2, b[1], b[2]];
        let p = self.weights.residual_weights();
        let mut penalties = [0.0; 7];
        for c in 0..6 {
            penalties[c] = p[c] * r[c].abs();
            let node = if c < 3 { 0 } else { n - 1 };
            adjoint[node][c % 3] += p[c] * sign0(r[c]);
        }
        let gap = a[0] - b[0];
        if gap > 0.0 {
            penalties[6] = self.weights.p_delta * gap;
            adjoint[0][0] += self.weights.p_delta;
            adjoint[n - 1][0] -= self.weights.p_delta;
        }
        let breakdown = check_finite(Breakdown {
            cost,
            penalties,
            total: cost + penalties.iter().sum::<f64>(),
        })?;
        let grad = net.backward_batch(&trace, &adjoint);
        if let Some(index) = grad.iter().position(|g| !g.is_finite()) {
            return Err(Error::NonFiniteGradient {
                index,
                primitive: "network reverse sweep",
            });
        }
        Ok((breakdown, grad))
    }

    /// Arguments of every |·| and ReLU the objective passes through.
    ///
    /// ω̇(0), ω̈(0) and E(0) vanish identically for the network's feature
    /// layer; they are not kinks and are left out.
    fn kinks(&self, theta: &[f64]) -> Vec<f64> {
        let net = self.network(theta);
        let ep = net.endpoints();
        let jets = net.jets(self.grid.nodes());
        let mut out = Vec::with_capacity(jets.len() + 4);
        if self.metric == CostMetric::Schmidt {
            out.extend(jets[1..].iter().map(|j| j.nonadiabatic_term()));
        }
        let (a, b) = (jets[0], jets[jets.len() - 1]);
        out.extend([
            a.omega - ep.omega1,
            b.omega - ep.omega2,
            b.domega,
            b.ddomega,
            a.omega - b.omega,
        ]);
        out
    }
}

impl Differentiable for PenaltyObjective {
    fn evaluate(&self, theta: &[f64]) -> Result<Probe> {
        Ok(Probe {
            value: self.breakdown(theta)?.total,
            kinks: self.kinks(theta),
        })
    }

    fn gradient(&self, theta: &[f64]) -> Result<Vec<f64>> {
        Ok(self.evaluate_with_gradient(theta)?.1)
    }

    fn value_and_gradient(&self, theta: &[f64]) -> Result<(f64, Vec<f64>)> {
        let (b, g) = self.evaluate_with_gradient(theta)?;
        Ok((b.total, g))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffengine::{fd_check, param_gradient};
    use crate::profiles::{Architecture, ConstantProfile, PolynomialAnsatz};
    use crate::thermo::CycleParams;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(metric: CostMetric, weights: PenaltyWeights) -> (PenaltyObjective, Vec<f64>) {
        let p = CycleParams::reference(6.0);
        let ep = Endpoints::compression(&p);
        let arch = Architecture::reduced(2, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let theta = crate::optimizer::init_parameters(&mut rng, &arch);
        let net = NeuralProfile::zeros(arch, ep).unwrap();
        let grid = QuadratureGrid::new(6.0, 33).unwrap();
        let obj = PenaltyObjective::new(net, StrokeContext::compression(&p), grid, weights, metric).unwrap();
        (obj, theta)
    }

    #[test]
    fn feasible_profile_pays_only_its_cost() {
        let p = CycleParams::reference(6.0);
        let ep = Endpoints::compression(&p);
        let grid = QuadratureGrid::new(6.0, 513).unwrap();
        let b = penalty_objective(
            &PolynomialAnsatz::benchmark(ep),
            &ep,
            &StrokeContext::compression(&p),
            &grid,
            &PenaltyWeights::uniform(100.0, 1e3),
            CostMetric::Schmidt,
        )
        .unwrap();
        assert!(b.penalties.iter().all(|&x| x < 1e-12), "{b:?}");
        assert_relative_eq!(b.total, b.cost, max_relative = 1e-12);
        assert_relative_eq!(b.cost, 4.656_172_529_231_51, max_relative = 1e-5);
    }

    #[test]
    fn constant_profile_pays_final_value_penalty() {
        let p = CycleParams::reference(6.0);
        let ep = Endpoints::compression(&p);
        let grid = QuadratureGrid::new(6.0, 33).unwrap();
        let mut w = PenaltyWeights::zero();
        w.p_wT = 100.0;
        w.p_delta = 1e3;
        let c = ConstantProfile {
            omega: 0.1,
            endpoints: ep,
        };
        let b = penalty_objective(&c, &ep, &StrokeContext::compression(&p), &grid, &w, CostMetric::Schmidt).unwrap();
        assert_relative_eq!(b.total, 40.0, max_relative = 1e-14);
    }

    #[test]
    fn batched_gradient_matches_tape() {
        for metric in [CostMetric::Schmidt, CostMetric::Hsta] {
            let (obj, theta) = setup(metric, PenaltyWeights::uniform(3.0, 50.0));
            let (b, g) = obj.evaluate_with_gradient(&theta).unwrap();
            let tape = param_gradient(|th| obj.value_generic(th), &theta).unwrap();
            assert_relative_eq!(b.total, tape.value, max_relative = 1e-12);
            for (x, y) in g.iter().zip(&tape.gradient) {
                assert!((x - y).abs() <= 1e-10 * (1.0 + y.abs()), "{x} vs {y}");
            }
        }
    }

    #[test]
    fn breakdown_agrees_with_batched_value() {
        let (obj, theta) = setup(CostMetric::Schmidt, PenaltyWeights::uniform(1.0, 1e3));
        let a = obj.breakdown(&theta).unwrap();
        let (b, _) = obj.evaluate_with_gradient(&theta).unwrap();
        assert_relative_eq!(a.total, b.total, max_relative = 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let (obj, theta) = setup(CostMetric::Schmidt, PenaltyWeights::uniform(1.0, 1e3));
        let r = fd_check(&obj, &theta, 1e-5).unwrap();
        assert!(r.max_deviation < 1e-5, "{:?}", (r.max_deviation, r.worst_index));
    }
}
