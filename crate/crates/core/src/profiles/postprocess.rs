//! Turning an approximately feasible ramp into one that meets the six stroke
//! boundary conditions exactly.
//!
//! Two steps: an affine stretch `a·ω(t) + b` that pins the end values, then
//! quintic Hermite blends over `[0, σ]` and `[τ − σ, τ]` from the flat
//! extensions `(ω₁, 0, 0)` and `(ω₂, 0, 0)` into the stretched ramp. The
//! result is tabulated densely as `(t, ω, ω̇, ω̈)` rows and re-evaluated
//! between rows by the same Hermite quintic, which keeps it C².

use serde::{Deserialize, Serialize};

use super::{Endpoints, Jet2, ProfileModel, Quintic};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PostprocessOptions {
    /// Edge window width as a fraction of τ.
    pub sigma_fraction: f64,
    /// Number of tabulation intervals; the table has one more row.
    pub tabulation_points: usize,
}

impl Default for PostprocessOptions {
    fn default() -> Self {
        Self {
            sigma_fraction: 0.05,
            tabulation_points: 4096,
        }
    }
}

/// Stretch and blend parameters of a corrected ramp.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Correction {
    pub scale: f64,
    pub offset: f64,
    pub sigma: f64,
}

/// A ramp after stretching and edge blending, evaluated analytically.
#[derive(Debug, Clone)]
pub struct CorrectedProfile<P> {
    inner: P,
    endpoints: Endpoints,
    correction: Correction,
    left: Quintic,
    right: Quintic,
}

impl<P: ProfileModel> CorrectedProfile<P> {
    pub fn new(inner: P, endpoints: Endpoints, sigma: f64) -> Result<Self> {
        let w0 = inner.jet(0.0).omega;
        let wt = inner.jet(endpoints.tau).omega;
        let span = wt - w0;
        let scale = endpoints.delta() / span;
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvertedStretch { scale });
        }
        let offset = endpoints.omega1 - scale * w0;
        Self::from_parts(inner, endpoints, Correction { scale, offset, sigma })
    }

    /// Rebuilds a correction from stored parameters.
    pub fn from_parts(inner: P, endpoints: Endpoints, correction: Correction) -> Result<Self> {
        let Correction { scale, sigma, .. } = correction;
        let tau = endpoints.tau;
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvertedStretch { scale });
        }
        if !(sigma > 0.0 && 2.0 * sigma < tau) {
            return Err(Error::InvalidProfile(format!(
                "blend window {sigma} does not fit twice into tau = {tau}"
            )));
        }
        let stretched = |t: f64| {
            let j = inner.jet(t);
            [scale * j.omega + correction.offset, scale * j.domega, scale * j.ddomega]
        };
        let left = Quintic::hermite(0.0, [endpoints.omega1, 0.0, 0.0], sigma, stretched(sigma));
        let right = Quintic::hermite(tau - sigma, stretched(tau - sigma), tau, [endpoints.omega2, 0.0, 0.0]);
        Ok(Self {
            inner,
            endpoints,
            correction,
            left,
            right,
        })
    }

    pub fn correction(&self) -> Correction {
        self.correction
    }

    pub fn inner(&self) -> &P {
        &self.inner
    }

    /// Samples `n + 1` rows evenly over `[0, τ]`.
    pub fn tabulate(&self, n: usize) -> Result<TabulatedProfile> {
        let ts = super::uniform_times(self.endpoints.tau, n + 1);
        let rows = self
            .jets(&ts)
            .into_iter()
            .map(|j| [j.t, j.omega, j.domega, j.ddomega])
            .collect();
        let mut tab = TabulatedProfile::new(self.endpoints, rows)?;
        tab.correction = Some(self.correction);
        Ok(tab)
    }

    fn blend(&self, t: f64, j: Jet2) -> Jet2 {
        let Correction { scale, offset, sigma } = self.correction;
        let [v, d, dd] = if t <= sigma {
            self.left.eval(t)
        } else if t >= self.endpoints.tau - sigma {
            self.right.eval(t)
        } else {
            [scale * j.omega + offset, scale * j.domega, scale * j.ddomega]
        };
        Jet2::new(t, v, d, dd)
    }
}

impl<P: ProfileModel> ProfileModel for CorrectedProfile<P> {
    fn endpoints(&self) -> Endpoints {
        self.endpoints
    }

    fn jet(&self, t: f64) -> Jet2 {
        self.blend(t, self.inner.jet(t))
    }

    fn jets(&self, ts: &[f64]) -> Vec<Jet2> {
        self.inner
            .jets(ts)
            .into_iter()
            .zip(ts)
            .map(|(j, &t)| self.blend(t, j))
            .collect()
    }

    fn breakpoints(&self) -> Vec<f64> {
        let sigma = self.correction.sigma;
        let tau = self.endpoints.tau;
        let mut b = vec![sigma];
        b.extend(
            self.inner
                .breakpoints()
                .into_iter()
                .filter(|&t| t > sigma && t < tau - sigma),
        );
        b.push(tau - sigma);
        b
    }
}

/// Rows of `[t, ω, ω̇, ω̈]`.
pub type Tabulation = Vec<[f64; 4]>;

/// A ramp stored as a table, interpolated by piecewise Hermite quintics.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedProfile {
    endpoints: Endpoints,
    rows: Tabulation,
    /// How the table was produced, when it came from post-processing.
    pub correction: Option<Correction>,
}

impl TabulatedProfile {
    pub fn new(endpoints: Endpoints, rows: Tabulation) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::InvalidProfile("tabulation needs at least two rows".into()));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidProfile("non-finite tabulation entry".into()));
        }
        if rows[0][0] != 0.0 || rows[rows.len() - 1][0] != endpoints.tau {
            return Err(Error::InvalidProfile(format!(
                "tabulation must span [0, {}], got [{}, {}]",
                endpoints.tau,
                rows[0][0],
                rows[rows.len() - 1][0]
            )));
        }
        if rows.windows(2).any(|w| w[1][0] <= w[0][0]) {
            return Err(Error::InvalidProfile("tabulation times must increase".into()));
        }
        if let Some(r) = rows.iter().find(|r| r[1] <= 0.0) {
            return Err(Error::NonPositiveFrequency { t: r[0], omega: r[1] });
        }
        Ok(Self {
            endpoints,
            rows,
            correction: None,
        })
    }

    pub fn rows(&self) -> &[[f64; 4]] {
        &self.rows
    }

    /// The same shape run over a stroke of duration `tau`:
    /// ω'(t) = ω(t·τ₀/τ). Each row is mapped exactly.
    pub fn rescaled(&self, tau: f64) -> Result<Self> {
        let ep = Endpoints::new(self.endpoints.omega1, self.endpoints.omega2, tau)?;
        let k = tau / self.endpoints.tau;
        let last = self.rows.len() - 1;
        let rows = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let t = if i == last { tau } else { r[0] * k };
                [t, r[1], r[2] / k, r[3] / (k * k)]
            })
            .collect();
        let mut out = Self::new(ep, rows)?;
        out.correction = self.correction.map(|c| Correction {
            sigma: c.sigma * k,
            ..c
        });
        Ok(out)
    }
}

impl ProfileModel for TabulatedProfile {
    fn endpoints(&self) -> Endpoints {
        self.endpoints
    }

    fn jet(&self, t: f64) -> Jet2 {
        let rows = &self.rows;
        // index of the first row strictly after t, clamped to a valid interval
        let k = rows.partition_point(|r| r[0] <= t).clamp(1, rows.len() - 1);
        let (a, b) = (&rows[k - 1], &rows[k]);
        if t == a[0] {
            return Jet2::new(t, a[1], a[2], a[3]);
        }
        if t == b[0] {
            return Jet2::new(t, b[1], b[2], b[3]);
        }
        let [v, d, dd] = Quintic::hermite(a[0], [a[1], a[2], a[3]], b[0], [b[1], b[2], b[3]]).eval(t);
        Jet2::new(t, v, d, dd)
    }

    /// Each knot joins two quintics with matching jets up to ω̈ only.
    fn breakpoints(&self) -> Vec<f64> {
        self.rows[1..self.rows.len() - 1].iter().map(|r| r[0]).collect()
    }
}

/// Stretches, blends and tabulates `profile` so it meets the boundary
/// conditions of `endpoints` exactly.
pub fn postprocess_stretch_smooth<P: ProfileModel>(
    profile: P,
    endpoints: Endpoints,
    options: &PostprocessOptions,
) -> Result<TabulatedProfile> {
    if options.tabulation_points < 2 {
        return Err(Error::InvalidProfile("tabulation needs at least two intervals".into()));
    }
    CorrectedProfile::new(profile, endpoints, options.sigma_fraction * endpoints.tau)?
        .tabulate(options.tabulation_points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::{boundary_residuals, uniform_times, PolynomialAnsatz};
    use approx::assert_relative_eq;

    fn ep() -> Endpoints {
        Endpoints::new(0.1, 0.5, 6.0).unwrap()
    }

    /// Cubic smoothstep from `lo` to `hi`; curvature nonzero at both ends.
    #[derive(Clone)]
    struct Offset {
        lo: f64,
        hi: f64,
        tau: f64,
    }

    impl ProfileModel for Offset {
        fn endpoints(&self) -> Endpoints {
            Endpoints::new(self.lo, self.hi, self.tau).unwrap()
        }
        fn jet(&self, t: f64) -> Jet2 {
            let s = t / self.tau;
            let d = self.hi - self.lo;
            Jet2::new(
                t,
                self.lo + d * s * s * (3.0 - 2.0 * s),
                d * 6.0 * s * (1.0 - s) / self.tau,
                d * (6.0 - 12.0 * s) / (self.tau * self.tau),
            )
        }
    }

    #[test]
    fn stretch_maps_endpoints() {
        let raw = Offset {
            lo: 0.12,
            hi: 0.48,
            tau: 6.0,
        };
        let c = CorrectedProfile::new(raw, ep(), 0.3).unwrap();
        assert_relative_eq!(c.correction().scale, 0.4 / 0.36, max_relative = 1e-14);
        let r = boundary_residuals(&c, &ep());
        assert!(r.max_abs() < 1e-14, "{r:?}");
    }

    #[test]
    fn tabulated_output_meets_conditions() {
        let raw = Offset {
            lo: 0.12,
            hi: 0.48,
            tau: 6.0,
        };
        let tab = postprocess_stretch_smooth(raw, ep(), &PostprocessOptions::default()).unwrap();
        assert_eq!(tab.rows().len(), 4097);
        assert!(boundary_residuals(&tab, &ep()).max_abs() < 1e-10);
        assert!(tab.correction.is_some());
    }

    #[test]
    fn feasible_benchmark_is_left_unchanged() {
        let p = PolynomialAnsatz::benchmark(ep());
        let tab = postprocess_stretch_smooth(&p, ep(), &PostprocessOptions::default()).unwrap();
        for &t in &uniform_times(6.0, 997) {
            let (a, b) = (p.jet(t), tab.jet(t));
            assert!((a.omega - b.omega).abs() < 1e-10, "{t}");
            assert!((a.domega - b.domega).abs() < 1e-10, "{t}");
            // rounding in the stored values is amplified by 1/h² in ω̈
            assert!((a.ddomega - b.ddomega).abs() < 1e-8, "{t}");
        }
    }

    #[test]
    fn rejects_inverted_profile() {
        let raw = Offset {
            lo: 0.5,
            hi: 0.1,
            tau: 6.0,
        };
        assert!(matches!(
            CorrectedProfile::new(raw, ep(), 0.3),
            Err(Error::InvertedStretch { .. })
        ));
    }

    #[test]
    fn tabulation_is_c2_between_rows() {
        let p = PolynomialAnsatz::new(vec![4.0, -2.0, 0.5, 1.0, -2.5], ep()).unwrap();
        let tab = CorrectedProfile::new(&p, ep(), 0.3).unwrap().tabulate(64).unwrap();
        let h = 6.0 / 64.0;
        for k in 1..64 {
            let knot = k as f64 * h;
            let (a, b) = (tab.jet(knot - 1e-12), tab.jet(knot + 1e-12));
            assert!((a.ddomega - b.ddomega).abs() < 1e-8);
        }
    }

    #[test]
    fn table_validation() {
        assert!(TabulatedProfile::new(ep(), vec![[0.0, 0.1, 0.0, 0.0]]).is_err());
        assert!(TabulatedProfile::new(ep(), vec![[0.0, 0.1, 0.0, 0.0], [5.0, 0.5, 0.0, 0.0]]).is_err());
        assert!(matches!(
            TabulatedProfile::new(ep(), vec![[0.0, -0.1, 0.0, 0.0], [6.0, 0.5, 0.0, 0.0]]),
            Err(Error::NonPositiveFrequency { .. })
        ));
    }

    #[test]
    fn rescaled_table_follows_the_stretched_clock() {
        let table = postprocess_stretch_smooth(PolynomialAnsatz::benchmark(ep()), ep(), &PostprocessOptions::default())
            .unwrap();
        let long = table.rescaled(9.0).unwrap();
        assert_eq!(long.tau(), 9.0);
        let k = 1.5;
        for t in [0.0, 0.7, 3.3, 8.1, 9.0] {
            let (a, b) = (long.jet(t), table.jet(t / k));
            assert_relative_eq!(a.omega, b.omega, max_relative = 1e-12);
            assert_relative_eq!(a.domega * k, b.domega, max_relative = 1e-10, epsilon = 1e-14);
            assert_relative_eq!(a.ddomega * k * k, b.ddomega, max_relative = 1e-8, epsilon = 1e-12);
        }
        assert_relative_eq!(long.correction.unwrap().sigma, 0.45, max_relative = 1e-14);
    }
}
