//! Energetic cost of the counterdiabatic drive.
//!
//! With `E = −3ω̇²/(4ω²) + ω̈/(2ω)` and `c = coth(βᵢωᵢ/2)` at the stroke's
//! initial state,
//!
//! ```text
//! ⟨C⟩       = c·√3/(4τ) ∫ |E|/ω dt        (Schmidt norm, never negative)
//! ⟨H_STA⟩   = c/(4τ)   ∫  E /ω dt        (signed)
//! ```
//!
//! The expansion stroke is evaluated on its own profile (the time reverse of
//! the compression ramp) with `(β₂, ω₂)`.

mod quadrature;

use std::io::Write;

use serde::{Deserialize, Serialize};

pub use quadrature::{integrate, Integral, QuadratureGrid};

use crate::diffengine::JetScalar;
use crate::error::{Error, Result};
use crate::profiles::{Jet2, ProfileModel};
use crate::thermo::{coth, CycleParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stroke {
    Compression,
    Expansion,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrokeContext {
    pub beta_i: f64,
    pub omega_i: f64,
    pub tau: f64,
    pub direction: Stroke,
}

impl StrokeContext {
    pub fn compression(p: &CycleParams) -> Self {
        Self {
            beta_i: p.beta1,
            omega_i: p.omega1,
            tau: p.tau,
            direction: Stroke::Compression,
        }
    }

    pub fn expansion(p: &CycleParams) -> Self {
        Self {
            beta_i: p.beta2,
            omega_i: p.omega2,
            tau: p.tau,
            direction: Stroke::Expansion,
        }
    }

    /// coth(βᵢωᵢ/2), the thermal width of the initial state.
    pub fn thermal_factor(&self) -> f64 {
        coth(0.5 * self.beta_i * self.omega_i)
    }
}

pub const SQRT3_OVER_4: f64 = 0.433_012_701_892_219_3;

/// Instantaneous Schmidt-norm cost rate, without the 1/τ average.
pub fn sta_cost_density(j: &Jet2, ctx: &StrokeContext) -> f64 {
    ctx.thermal_factor() * SQRT3_OVER_4 * j.nonadiabatic_term().abs() / j.omega
}

/// Instantaneous signed rate of the ⟨H_STA⟩ metric, without the 1/τ average.
pub fn hsta_density(j: &Jet2, ctx: &StrokeContext) -> f64 {
    0.25 * ctx.thermal_factor() * j.nonadiabatic_term() / j.omega
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureOptions {
    pub points: usize,
    /// Largest accepted relative change between the grid and its refinement.
    pub tolerance: f64,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self {
            points: QuadratureGrid::DEFAULT_POINTS,
            tolerance: 1e-6,
        }
    }
}

impl QuadratureOptions {
    pub fn grid(&self, tau: f64) -> Result<QuadratureGrid> {
        QuadratureGrid::new(tau, self.points)
    }
}

/// A cost on the base grid and on its refinement; `value` is the refined one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostEstimate {
    pub value: f64,
    pub coarse: f64,
    pub rel_change: f64,
    pub nodes: usize,
}

fn stroke_cost(
    profile: &impl ProfileModel,
    ctx: &StrokeContext,
    grid: &QuadratureGrid,
    tolerance: f64,
    density: impl Fn(&Jet2, &StrokeContext) -> f64,
    split_at_sign_changes: bool,
) -> Result<CostEstimate> {
    let sample = |g: &QuadratureGrid| -> Result<f64> {
        let jets = profile.jets(g.nodes());
        if let Some(j) = jets.iter().find(|j| !(j.omega > 0.0)) {
            return Err(Error::NonPositiveFrequency { t: j.t, omega: j.omega });
        }
        let values: Vec<f64> = jets.iter().map(|j| density(j, ctx)).collect();
        let total =
            g.sum(&values)? + kink_correction(profile, ctx, g, &jets, &values, &density, split_at_sign_changes)?;
        Ok(total / ctx.tau)
    };
    let fine = grid.refined();
    let integral = Integral {
        value: sample(grid)?,
        refined: sample(&fine)?,
    };
    let rel_change = integral.rel_change();
    if rel_change > tolerance && (integral.refined - integral.value).abs() > f64::EPSILON {
        return Err(Error::QuadratureNotConverged {
            coarse: integral.value,
            fine: integral.refined,
            rel_change,
            tolerance,
        });
    }
    Ok(CostEstimate {
        value: integral.refined,
        coarse: integral.value,
        rel_change,
        nodes: fine.len(),
    })
}

// 5-point Gauss-Legendre on [-1, 1]
const GL_X: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GL_W: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

/// |E| has a corner wherever E changes sign, and E itself has one at each
/// profile breakpoint; either drops Simpson to second order on the panel
/// containing it. Such panels are re-integrated piecewise between the cuts.
/// The return value is the difference to add to the plain Simpson sum.
fn kink_correction(
    profile: &impl ProfileModel,
    ctx: &StrokeContext,
    g: &QuadratureGrid,
    jets: &[Jet2],
    values: &[f64],
    density: &impl Fn(&Jet2, &StrokeContext) -> f64,
    split_at_sign_changes: bool,
) -> Result<f64> {
    let breaks = profile.breakpoints();
    let e: Vec<f64> = jets.iter().map(Jet2::nonadiabatic_term).collect();
    let ts = g.nodes();
    let flips =
        |a: usize, b: usize| split_at_sign_changes && ((e[a] > 0.0 && e[b] < 0.0) || (e[a] < 0.0 && e[b] > 0.0));
    let gauss = |a: f64, b: f64| -> f64 {
        let (m, r) = (0.5 * (a + b), 0.5 * (b - a));
        GL_X.iter()
            .zip(GL_W)
            .map(|(x, w)| w * density(&profile.jet(m + r * x), ctx))
            .sum::<f64>()
            * r
    };
    let mut correction = 0.0;
    for i in (0..ts.len() - 2).step_by(2) {
        let lo = breaks.partition_point(|&b| b <= ts[i]);
        let hi = breaks.partition_point(|&b| b < ts[i + 2]);
        let inside = &breaks[lo..hi.max(lo)];
        if inside.is_empty() && !(flips(i, i + 1) || flips(i + 1, i + 2)) {
            continue;
        }
        let mut cuts = vec![ts[i]];
        for k in [i, i + 1] {
            if flips(k, k + 1) {
                cuts.push(bisect_zero(profile, ts[k], ts[k + 1], e[k]));
            }
        }
        cuts.extend_from_slice(inside);
        cuts.push(ts[i + 2]);
        cuts.sort_by(f64::total_cmp);
        let exact: f64 = cuts.windows(2).map(|w| gauss(w[0], w[1])).sum();
        let h = ts[i + 1] - ts[i];
        let simpson = h / 3.0 * (values[i] + 4.0 * values[i + 1] + values[i + 2]);
        if !exact.is_finite() {
            return Err(Error::NonFiniteIntegrand { index: i, t: ts[i] });
        }
        correction += exact - simpson;
    }
    Ok(correction)
}

fn bisect_zero(profile: &impl ProfileModel, mut a: f64, mut b: f64, ea: f64) -> f64 {
    let positive_at_a = ea > 0.0;
    for _ in 0..80 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if (profile.jet(m).nonadiabatic_term() > 0.0) == positive_at_a {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Schmidt-norm cost of one stroke, converged by one grid doubling.
///
/// Panels where the integrand has a corner are split at the corner.
pub fn sta_cost(
    profile: &impl ProfileModel,
    ctx: &StrokeContext,
    grid: &QuadratureGrid,
    tolerance: f64,
) -> Result<CostEstimate> {
    stroke_cost(profile, ctx, grid, tolerance, sta_cost_density, true)
}

/// The signed ⟨H_STA⟩ metric of one stroke; may be negative.
pub fn hsta_cost(
    profile: &impl ProfileModel,
    ctx: &StrokeContext,
    grid: &QuadratureGrid,
    tolerance: f64,
) -> Result<CostEstimate> {
    stroke_cost(profile, ctx, grid, tolerance, hsta_density, false)
}

/// max over the grid of |b̈ + Ω² b − ωᵢ²/b³| with b = √(ωᵢ/ω).
///
/// `b̈` is propagated through jets from (ω, ω̇, ω̈), independently of the
/// closed form of Ω². The residual vanishes identically for the correct Ω².
pub fn ermakov_residual(profile: &impl ProfileModel, ctx: &StrokeContext, grid: &QuadratureGrid) -> f64 {
    ermakov_residual_with(profile, ctx, grid, |j| j.effective_frequency_sq().omega_sq)
}

/// As [`ermakov_residual`] with a caller-supplied Ω².
pub fn ermakov_residual_with(
    profile: &impl ProfileModel,
    ctx: &StrokeContext,
    grid: &QuadratureGrid,
    omega_sq: impl Fn(&Jet2) -> f64,
) -> f64 {
    let wi = ctx.omega_i;
    profile
        .jets(grid.nodes())
        .iter()
        .map(|j| {
            let w = JetScalar::new(j.omega, j.domega, j.ddomega);
            let b = (JetScalar::constant(wi) / w).sqrt();
            (b.d2 + omega_sq(j) * b.v - wi * wi / b.v.powi(3)).abs()
        })
        .fold(0.0, f64::max)
}

/// `(t, density)` pairs of the Schmidt-norm cost rate.
pub fn cost_trace(profile: &impl ProfileModel, ctx: &StrokeContext, ts: &[f64]) -> Vec<(f64, f64)> {
    profile
        .jets(ts)
        .iter()
        .map(|j| (j.t, sta_cost_density(j, ctx)))
        .collect()
}

pub fn write_cost_trace_csv(mut out: impl Write, trace: &[(f64, f64)]) -> std::io::Result<()> {
    writeln!(out, "# t: time, density: instantaneous Schmidt-norm cost rate")?;
    writeln!(out, "t,density")?;
    for (t, d) in trace {
        writeln!(out, "{t:.17e},{d:.17e}")?;
    }
    Ok(())
}
