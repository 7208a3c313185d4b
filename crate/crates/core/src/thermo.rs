//! Closed-form energetics of the harmonic Otto refrigerator.
//!
//! Units are natural throughout (ħ = m = k_B = 1). The cycle runs a
//! compression stroke ω₁ → ω₂ of duration τ, an instantaneous isochore with
//! the hot bath, an expansion stroke ω₂ → ω₁ of duration τ and an
//! instantaneous isochore with the cold bath, from which heat Q4 is drawn.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hyperbolic cotangent, accurate for small arguments.
///
/// Uses coth x = 1 + 2 / expm1(2x), which keeps full relative precision where
/// the naive cosh/sinh ratio cancels.
pub fn coth(x: f64) -> f64 {
    if x < 0.0 {
        return -coth(-x);
    }
    1.0 + 2.0 / (2.0 * x).exp_m1()
}

/// Operating point of the refrigerator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CycleParams {
    /// Frequency at the cold end.
    pub omega1: f64,
    /// Frequency at the hot end.
    pub omega2: f64,
    /// Inverse temperature of the cold bath.
    pub beta1: f64,
    /// Inverse temperature of the hot bath.
    pub beta2: f64,
    /// Duration of each driven stroke.
    pub tau: f64,
}

impl CycleParams {
    pub fn new(omega1: f64, omega2: f64, beta1: f64, beta2: f64, tau: f64) -> Result<Self> {
        let p = Self {
            omega1,
            omega2,
            beta1,
            beta2,
            tau,
        };
        p.validate()?;
        Ok(p)
    }

    /// Parameters used for the main benchmark comparisons.
    pub fn reference(tau: f64) -> Self {
        Self {
            omega1: 0.1,
            omega2: 0.5,
            beta1: 1.0,
            beta2: 0.75,
            tau,
        }
    }

    /// Near-edge parameters used for the cost-metric audit.
    pub fn audit_reference() -> Self {
        Self {
            omega1: 0.34,
            omega2: 0.5,
            beta1: 1.0,
            beta2: 0.75,
            tau: 4.8,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.omega1, self.omega2, self.beta1, self.beta2, self.tau];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameters("non-finite value".into()));
        }
        if !(0.0 < self.omega1 && self.omega1 < self.omega2) {
            return Err(Error::InvalidParameters(format!(
                "need 0 < omega1 < omega2, got omega1 = {}, omega2 = {}",
                self.omega1, self.omega2
            )));
        }
        if !(self.beta1 > self.beta2 && self.beta2 > 0.0) {
            return Err(Error::NoRefrigeration {
                beta1: self.beta1,
                beta2: self.beta2,
            });
        }
        if self.tau <= 0.0 {
            return Err(Error::InvalidParameters(format!(
                "tau must be positive, got {}",
                self.tau
            )));
        }
        Ok(())
    }

    pub fn with_tau(&self, tau: f64) -> Self {
        Self { tau, ..*self }
    }

    pub fn delta_omega(&self) -> f64 {
        self.omega2 - self.omega1
    }

    /// β₁ω₁ < β₂ω₂: the cycle extracts heat from the cold bath.
    pub fn in_cooling_window(&self) -> bool {
        self.beta1 * self.omega1 < self.beta2 * self.omega2
    }

    pub fn require_cooling_window(&self) -> Result<()> {
        if self.in_cooling_window() {
            Ok(())
        } else {
            Err(Error::OutsideCoolingWindow {
                cold: self.beta1 * self.omega1,
                hot: self.beta2 * self.omega2,
            })
        }
    }

    /// coth(β₁ω₁/2), the thermal prefactor of the compression stroke.
    pub fn coth_cold(&self) -> f64 {
        coth(0.5 * self.beta1 * self.omega1)
    }

    /// coth(β₂ω₂/2), the thermal prefactor of the expansion stroke.
    pub fn coth_hot(&self) -> f64 {
        coth(0.5 * self.beta2 * self.omega2)
    }
}

/// Mean work of the compression stroke, W1 = (ω₂/2)(1 − ω₁/ω₂) coth(β₁ω₁/2).
pub fn work_compression(p: &CycleParams) -> f64 {
    0.5 * p.omega2 * (1.0 - p.omega1 / p.omega2) * p.coth_cold()
}

/// Mean work of the expansion stroke, W3 = (ω₁/2)(1 − ω₂/ω₁) coth(β₂ω₂/2).
pub fn work_expansion(p: &CycleParams) -> f64 {
    0.5 * p.omega1 * (1.0 - p.omega2 / p.omega1) * p.coth_hot()
}

/// Heat drawn from the cold bath, Q4 = (ω₁/2)[coth(β₁ω₁/2) − coth(β₂ω₂/2)].
pub fn heat_extracted(p: &CycleParams) -> f64 {
    0.5 * p.omega1 * (p.coth_cold() - p.coth_hot())
}

/// ε_C = T₁/(T₂ − T₁) = β₂/(β₁ − β₂).
pub fn carnot_efficiency(beta1: f64, beta2: f64) -> Result<f64> {
    if !(beta1 > beta2 && beta2 > 0.0) {
        return Err(Error::NoRefrigeration { beta1, beta2 });
    }
    Ok(beta2 / (beta1 - beta2))
}

/// Efficiency with adiabatic work and heat and no driving cost, Q4/(W1 + W3).
pub fn adiabatic_efficiency(p: &CycleParams) -> Result<f64> {
    p.require_cooling_window()?;
    Ok(heat_extracted(p) / (work_compression(p) + work_expansion(p)))
}

/// ω₁/(ω₂ − ω₁), the algebraic reduction of [`adiabatic_efficiency`].
pub fn adiabatic_efficiency_closed_form(omega1: f64, omega2: f64) -> f64 {
    omega1 / (omega2 - omega1)
}

/// Efficiency, cooling power and their product for one cycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merit {
    pub eps: f64,
    pub j_c: f64,
    pub chi: f64,
}

/// χ = ε·J_c = Q4² / [2τ (W1 + W3 + C_AB + C_CD)].
///
/// A non-positive total input energy is returned as
/// [`Error::MetricViolation`]; it signals an unphysical cost metric.
pub fn figure_of_merit(w1: f64, w3: f64, q4: f64, c_ab: f64, c_cd: f64, tau: f64) -> Result<Merit> {
    let denominator = w1 + w3 + c_ab + c_cd;
    if !(denominator > 0.0) {
        return Err(Error::MetricViolation { denominator });
    }
    let eps = q4 / denominator;
    let j_c = q4 / (2.0 * tau);
    Ok(Merit {
        eps,
        j_c,
        chi: eps * j_c,
    })
}

/// All energetics of one cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleReport {
    pub w1: f64,
    pub w3: f64,
    pub q4: f64,
    pub c_ab: f64,
    pub c_cd: f64,
    pub j_c: f64,
    pub eps: f64,
    pub eps_ad: f64,
    pub eps_c: f64,
    pub chi: f64,
}

impl CycleReport {
    /// Combines the closed-form work and heat with the driving costs of the
    /// two strokes.
    pub fn assemble(p: &CycleParams, c_ab: f64, c_cd: f64) -> Result<Self> {
        p.validate()?;
        p.require_cooling_window()?;
        let w1 = work_compression(p);
        let w3 = work_expansion(p);
        let q4 = heat_extracted(p);
        Self::from_parts(p, w1, w3, q4, c_ab, c_cd)
    }

    fn from_parts(p: &CycleParams, w1: f64, w3: f64, q4: f64, c_ab: f64, c_cd: f64) -> Result<Self> {
        let merit = figure_of_merit(w1, w3, q4, c_ab, c_cd, p.tau)?;
        Ok(Self {
            w1,
            w3,
            q4,
            c_ab,
            c_cd,
            j_c: merit.j_c,
            eps: merit.eps,
            eps_ad: adiabatic_efficiency_closed_form(p.omega1, p.omega2),
            eps_c: carnot_efficiency(p.beta1, p.beta2)?,
            chi: merit.chi,
        })
    }

    /// Total input energy W1 + W3 + C_AB + C_CD.
    pub fn input_energy(&self) -> f64 {
        self.w1 + self.w3 + self.c_ab + self.c_cd
    }
}

/// Q* = (ω₁² + ω₂²)/(2ω₁ω₂) for an instantaneous frequency jump.
pub fn nonadiabatic_parameter(omega1: f64, omega2: f64) -> f64 {
    (omega1 * omega1 + omega2 * omega2) / (2.0 * omega1 * omega2)
}

/// (W1, W3, Q4) of the sudden-quench cycle.
pub fn quench_energetics(p: &CycleParams) -> (f64, f64, f64) {
    let q = nonadiabatic_parameter(p.omega1, p.omega2);
    let (c1, c2) = (p.coth_cold(), p.coth_hot());
    let w1 = 0.5 * (q * p.omega2 - p.omega1) * c1;
    let w3 = 0.5 * (q * p.omega1 - p.omega2) * c2;
    let q4 = 0.5 * p.omega1 * (c1 - q * c2);
    (w1, w3, q4)
}

/// Energetics of the sudden-quench strategy: no driving cost, Q* inserted in
/// the work and heat.
pub fn sudden_quench_benchmark(p: &CycleParams) -> Result<CycleReport> {
    p.validate()?;
    let (w1, w3, q4) = quench_energetics(p);
    if !(q4 > 0.0) {
        return Err(Error::QuenchClosesWindow { q4 });
    }
    CycleReport::from_parts(p, w1, w3, q4, 0.0, 0.0)
}
