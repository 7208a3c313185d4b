//! Frequency ramps ω(t) for the driven strokes.
//!
//! Every model evaluates to a [`Jet2`]: the frequency and its first two time
//! derivatives, exact for the model's analytic form. The local
//! counterdiabatic construction replaces ω by the effective trap frequency
//!
//! ```text
//! Ω² = ω² − 3ω̇²/(4ω²) + ω̈/(2ω)
//! ```
//!
//! and requires ω, ω̇, ω̈ to take their adiabatic values at both ends of the
//! stroke: ω(0) = ω₁, ω(τ) = ω₂, all derivatives zero.

mod hermite;
pub mod io;
mod neural;
mod polynomial;
mod postprocess;
mod ramp;

use serde::{Deserialize, Serialize};

pub use hermite::Quintic;
pub use neural::{Architecture, BatchTrace, NeuralProfile};
pub use polynomial::PolynomialAnsatz;
pub use postprocess::{
    postprocess_stretch_smooth, CorrectedProfile, Correction, PostprocessOptions, TabulatedProfile, Tabulation,
};
pub use ramp::SmoothedRampAnsatz;

use crate::error::{Error, Result};
use crate::thermo::CycleParams;

/// Frequency and its first two time derivatives at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet2 {
    pub t: f64,
    pub omega: f64,
    pub domega: f64,
    pub ddomega: f64,
}

impl Jet2 {
    pub fn new(t: f64, omega: f64, domega: f64, ddomega: f64) -> Self {
        Self {
            t,
            omega,
            domega,
            ddomega,
        }
    }

    pub fn constant(t: f64, omega: f64) -> Self {
        Self::new(t, omega, 0.0, 0.0)
    }

    /// The bracket −3ω̇²/(4ω²) + ω̈/(2ω) that drives both cost metrics.
    pub fn nonadiabatic_term(&self) -> f64 {
        let w = self.omega;
        -0.75 * self.domega * self.domega / (w * w) + 0.5 * self.ddomega / w
    }

    pub fn effective_frequency_sq(&self) -> EffectiveFrequency {
        effective_frequency_sq(self)
    }
}

/// Ω² with a flag for an inverted (repulsive) effective trap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveFrequency {
    pub omega_sq: f64,
    pub trap_inverted: bool,
}

pub fn effective_frequency_sq(j: &Jet2) -> EffectiveFrequency {
    let omega_sq = j.omega * j.omega + j.nonadiabatic_term();
    EffectiveFrequency {
        omega_sq,
        trap_inverted: omega_sq < 0.0,
    }
}

/// Start and end frequency of a stroke and its duration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Endpoints {
    pub omega1: f64,
    pub omega2: f64,
    pub tau: f64,
}

impl Endpoints {
    pub fn new(omega1: f64, omega2: f64, tau: f64) -> Result<Self> {
        if !(omega1 > 0.0 && omega2 > 0.0 && tau > 0.0)
            || !(omega1.is_finite() && omega2.is_finite() && tau.is_finite())
        {
            return Err(Error::InvalidProfile(format!(
                "endpoints need positive finite values, got ({omega1}, {omega2}, {tau})"
            )));
        }
        Ok(Self { omega1, omega2, tau })
    }

    pub fn compression(p: &CycleParams) -> Self {
        Self {
            omega1: p.omega1,
            omega2: p.omega2,
            tau: p.tau,
        }
    }

    pub fn delta(&self) -> f64 {
        self.omega2 - self.omega1
    }

    pub fn reversed(&self) -> Self {
        Self {
            omega1: self.omega2,
            omega2: self.omega1,
            tau: self.tau,
        }
    }
}

/// A frequency ramp on `[0, τ]` with exact time derivatives.
pub trait ProfileModel: Send + Sync {
    fn endpoints(&self) -> Endpoints;

    fn jet(&self, t: f64) -> Jet2;

    /// Evaluates many instants; models with a batched path override this.
    fn jets(&self, ts: &[f64]) -> Vec<Jet2> {
        ts.iter().map(|&t| self.jet(t)).collect()
    }

    fn tau(&self) -> f64 {
        self.endpoints().tau
    }

    /// Interior instants, ascending, where the ramp is only C². Quadrature
    /// splits its panels there.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

impl<P: ProfileModel + ?Sized> ProfileModel for Box<P> {
    fn endpoints(&self) -> Endpoints {
        (**self).endpoints()
    }
    fn jet(&self, t: f64) -> Jet2 {
        (**self).jet(t)
    }
    fn jets(&self, ts: &[f64]) -> Vec<Jet2> {
        (**self).jets(ts)
    }
    fn breakpoints(&self) -> Vec<f64> {
        (**self).breakpoints()
    }
}

impl<P: ProfileModel + ?Sized> ProfileModel for &P {
    fn endpoints(&self) -> Endpoints {
        (**self).endpoints()
    }
    fn jet(&self, t: f64) -> Jet2 {
        (**self).jet(t)
    }
    fn jets(&self, ts: &[f64]) -> Vec<Jet2> {
        (**self).jets(ts)
    }
    fn breakpoints(&self) -> Vec<f64> {
        (**self).breakpoints()
    }
}

/// ω(t) ≡ ω.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantProfile {
    pub omega: f64,
    pub endpoints: Endpoints,
}

impl ProfileModel for ConstantProfile {
    fn endpoints(&self) -> Endpoints {
        self.endpoints
    }
    fn jet(&self, t: f64) -> Jet2 {
        Jet2::constant(t, self.omega)
    }
}

/// The expansion stroke as the time reverse of a compression ramp,
/// ω_rev(t) = ω(τ − t).
#[derive(Debug, Clone)]
pub struct Reversed<P>(pub P);

impl<P: ProfileModel> ProfileModel for Reversed<P> {
    fn endpoints(&self) -> Endpoints {
        self.0.endpoints().reversed()
    }

    fn jet(&self, t: f64) -> Jet2 {
        let tau = self.0.tau();
        let j = self.0.jet(tau - t);
        Jet2::new(t, j.omega, -j.domega, j.ddomega)
    }

    fn jets(&self, ts: &[f64]) -> Vec<Jet2> {
        let tau = self.0.tau();
        let mirrored: Vec<f64> = ts.iter().map(|&t| tau - t).collect();
        self.0
            .jets(&mirrored)
            .into_iter()
            .zip(ts)
            .map(|(j, &t)| Jet2::new(t, j.omega, -j.domega, j.ddomega))
            .collect()
    }

    fn breakpoints(&self) -> Vec<f64> {
        let tau = self.0.tau();
        self.0.breakpoints().iter().rev().map(|t| tau - t).collect()
    }
}

/// Deviations of a ramp from the six stroke boundary conditions:
/// `(ω(0)−ω₁, ω̇(0), ω̈(0), ω(τ)−ω₂, ω̇(τ), ω̈(τ))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryResiduals(pub [f64; 6]);

impl BoundaryResiduals {
    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    pub fn require(&self, tolerance: f64) -> Result<()> {
        let max = self.max_abs();
        if max <= tolerance {
            Ok(())
        } else {
            Err(Error::BoundaryViolation { max, tolerance })
        }
    }
}

pub fn boundary_residuals(profile: &impl ProfileModel, endpoints: &Endpoints) -> BoundaryResiduals {
    let a = profile.jet(0.0);
    let b = profile.jet(endpoints.tau);
    BoundaryResiduals([
        a.omega - endpoints.omega1,
        a.domega,
        a.ddomega,
        b.omega - endpoints.omega2,
        b.domega,
        b.ddomega,
    ])
}

/// Uniform instants `0, τ/(n−1), …, τ`.
pub fn uniform_times(tau: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    let last = (n - 1) as f64;
    (0..n)
        .map(|i| if i + 1 == n { tau } else { tau * i as f64 / last })
        .collect()
}

/// Minimum of Ω² over the instants and whether any of them inverts the trap.
pub fn scan_trap_inversion(profile: &impl ProfileModel, ts: &[f64]) -> (f64, bool) {
    profile
        .jets(ts)
        .iter()
        .map(effective_frequency_sq)
        .fold((f64::INFINITY, false), |(m, inv), e| {
            (m.min(e.omega_sq), inv || e.trap_inverted)
        })
}

/// Any model that can be loaded from a profile document.
#[derive(Debug, Clone)]
pub enum AnyProfile {
    Constant(ConstantProfile),
    Polynomial(PolynomialAnsatz),
    SmoothedRamp(SmoothedRampAnsatz),
    Neural(NeuralProfile),
    Corrected(Box<CorrectedProfile<AnyProfile>>),
    Tabulated(TabulatedProfile),
}

impl AnyProfile {
    fn inner(&self) -> &dyn ProfileModel {
        match self {
            AnyProfile::Constant(p) => p,
            AnyProfile::Polynomial(p) => p,
            AnyProfile::SmoothedRamp(p) => p,
            AnyProfile::Neural(p) => p,
            AnyProfile::Corrected(p) => p.as_ref(),
            AnyProfile::Tabulated(p) => p,
        }
    }
}

impl ProfileModel for AnyProfile {
    fn endpoints(&self) -> Endpoints {
        self.inner().endpoints()
    }
    fn jet(&self, t: f64) -> Jet2 {
        self.inner().jet(t)
    }
    fn jets(&self, ts: &[f64]) -> Vec<Jet2> {
        self.inner().jets(ts)
    }
    fn breakpoints(&self) -> Vec<f64> {
        self.inner().breakpoints()
    }
}
