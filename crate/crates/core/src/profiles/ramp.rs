use super::{Endpoints, Jet2, ProfileModel, Quintic};
use crate::error::{Error, Result};

/// Flat at ω₁, a linear ramp between `t1` and `t2`, flat at ω₂, with the two
/// corners replaced by quintics over `[tᵢ − σ, tᵢ + σ]` that match the bare
/// function's value and two derivatives at each window edge. The result is C².
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedRampAnsatz {
    t1: f64,
    t2: f64,
    sigma: f64,
    endpoints: Endpoints,
    lower: Quintic,
    upper: Quintic,
}

impl SmoothedRampAnsatz {
    pub fn new(t1: f64, t2: f64, sigma: f64, endpoints: Endpoints) -> Result<Self> {
        let tau = endpoints.tau;
        let ok = sigma > 0.0 && 0.0 < t1 - sigma && t1 + sigma < t2 - sigma && t2 + sigma < tau;
        if !ok {
            return Err(Error::InvalidProfile(format!(
                "smoothing windows must be disjoint and interior: t1 = {t1}, t2 = {t2}, sigma = {sigma}, tau = {tau}"
            )));
        }
        let bare = |t: f64| bare_jet(t1, t2, &endpoints, t);
        let (a, b) = (t1 - sigma, t1 + sigma);
        let lower = Quintic::hermite(a, bare(a), b, bare(b));
        let (c, d) = (t2 - sigma, t2 + sigma);
        let upper = Quintic::hermite(c, bare(c), d, bare(d));
        Ok(Self {
            t1,
            t2,
            sigma,
            endpoints,
            lower,
            upper,
        })
    }

    pub fn params(&self) -> [f64; 3] {
        [self.t1, self.t2, self.sigma]
    }

    pub fn slope(&self) -> f64 {
        self.endpoints.delta() / (self.t2 - self.t1)
    }
}

fn bare_jet(t1: f64, t2: f64, ep: &Endpoints, t: f64) -> [f64; 3] {
    if t <= t1 {
        [ep.omega1, 0.0, 0.0]
    } else if t >= t2 {
        [ep.omega2, 0.0, 0.0]
    } else {
        let slope = ep.delta() / (t2 - t1);
        [ep.omega1 + slope * (t - t1), slope, 0.0]
    }
}

impl ProfileModel for SmoothedRampAnsatz {
    fn endpoints(&self) -> Endpoints {
        self.endpoints
    }

    fn jet(&self, t: f64) -> Jet2 {
        let [v, d, dd] = if t >= self.lower.start() && t <= self.lower.end() {
            self.lower.eval(t)
        } else if t >= self.upper.start() && t <= self.upper.end() {
            self.upper.eval(t)
        } else {
            bare_jet(self.t1, self.t2, &self.endpoints, t)
        };
        Jet2::new(t, v, d, dd)
    }

    fn breakpoints(&self) -> Vec<f64> {
        vec![
            self.lower.start(),
            self.lower.end(),
            self.upper.start(),
            self.upper.end(),
        ]
    }
}
