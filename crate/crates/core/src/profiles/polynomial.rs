use super::{Endpoints, Jet2, ProfileModel};
use crate::error::{Error, Result};

/// ω(t) = ω₁ + Δω Σₙ αₙ (t/τ)ⁿ for n = 3..=N_max.
///
/// Starting at the cubic term makes the three initial conditions hold for
/// any coefficients; the final ones need Σαₙ = 1, Σnαₙ = 0, Σn(n−1)αₙ = 0.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialAnsatz {
    /// α₃, α₄, … in order.
    alpha: Vec<f64>,
    endpoints: Endpoints,
}

impl PolynomialAnsatz {
    pub fn new(alpha: Vec<f64>, endpoints: Endpoints) -> Result<Self> {
        if alpha.len() < 3 {
            return Err(Error::InvalidProfile(format!(
                "polynomial ansatz needs N_max >= 5 (at least 3 coefficients), got {}",
                alpha.len()
            )));
        }
        if alpha.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidProfile("non-finite coefficient".into()));
        }
        Ok(Self { alpha, endpoints })
    }

    /// The standard (α₃, α₄, α₅) = (10, −15, 6) ramp.
    pub fn benchmark(endpoints: Endpoints) -> Self {
        Self {
            alpha: vec![10.0, -15.0, 6.0],
            endpoints,
        }
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn n_max(&self) -> usize {
        self.alpha.len() + 2
    }

    /// (Σαₙ − 1, Σnαₙ, Σn(n−1)αₙ); all zero iff the final conditions hold.
    pub fn final_conditions(&self) -> [f64; 3] {
        let mut out = [-1.0, 0.0, 0.0];
        for (k, a) in self.alpha.iter().enumerate() {
            let n = (k + 3) as f64;
            out[0] += a;
            out[1] += n * a;
            out[2] += n * (n - 1.0) * a;
        }
        out
    }
}

impl ProfileModel for PolynomialAnsatz {
    fn endpoints(&self) -> Endpoints {
        self.endpoints
    }

    fn jet(&self, t: f64) -> Jet2 {
        let Endpoints { omega1, tau, .. } = self.endpoints;
        let dw = self.endpoints.delta();
        let s = t / tau;
        let (mut v, mut d, mut dd) = (0.0, 0.0, 0.0);
        for (k, a) in self.alpha.iter().enumerate() {
            let n = (k + 3) as i32;
            let nf = n as f64;
            let sn2 = s.powi(n - 2);
            v += a * sn2 * s * s;
            d += a * nf * sn2 * s;
            dd += a * nf * (nf - 1.0) * sn2;
        }
        Jet2::new(t, omega1 + dw * v, dw * d / tau, dw * dd / (tau * tau))
    }
}
