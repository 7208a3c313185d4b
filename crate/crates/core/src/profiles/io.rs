//! Profile documents on disk.
//!
//! ```json
//! { "model_kind": "neural", "endpoints": {"omega1": .., "omega2": ..}, "tau": ..,
//!   "parameters": [..], "architecture": {..}, "postprocess": {..}, "tabulation": [[t, ω, ω̇, ω̈], ..] }
//! ```
//!
//! `architecture`, `postprocess` and `tabulation` are optional. Floats are
//! written with 17 significant digits, so reading a document back gives the
//! same bits.

use std::io;
use std::path::Path;

use serde::ser::Serialize;
use serde::{Deserialize, Serialize as SerializeDerive};
use serde_json::ser::{Formatter, PrettyFormatter};

use super::{
    AnyProfile, Architecture, ConstantProfile, CorrectedProfile, Correction, Endpoints, NeuralProfile,
    PolynomialAnsatz, ProfileModel, SmoothedRampAnsatz, TabulatedProfile, Tabulation,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, SerializeDerive, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Constant,
    Polynomial,
    SmoothedRamp,
    Neural,
    Tabulated,
}

#[derive(Debug, Clone, Copy, PartialEq, SerializeDerive, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndpointValues {
    pub omega1: f64,
    pub omega2: f64,
}

#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileDocument {
    pub model_kind: ModelKind,
    pub endpoints: EndpointValues,
    pub tau: f64,
    /// constant: `[ω]`; polynomial: `α₃..`; smoothed ramp: `[t1, t2, σ]`;
    /// neural: θ; tabulated: empty.
    pub parameters: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub architecture: Option<Architecture>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub postprocess: Option<Correction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tabulation: Option<Tabulation>,
}

impl ProfileDocument {
    fn bare(kind: ModelKind, ep: Endpoints, parameters: Vec<f64>) -> Self {
        Self {
            model_kind: kind,
            endpoints: EndpointValues {
                omega1: ep.omega1,
                omega2: ep.omega2,
            },
            tau: ep.tau,
            parameters,
            architecture: None,
            postprocess: None,
            tabulation: None,
        }
    }

    pub fn endpoints(&self) -> Result<Endpoints> {
        Endpoints::new(self.endpoints.omega1, self.endpoints.omega2, self.tau)
    }

    /// A trained network together with the table it was post-processed into.
    pub fn neural_with_table(net: &NeuralProfile, table: &TabulatedProfile) -> Self {
        let mut doc = Self::from_profile(&AnyProfile::Neural(net.clone()));
        doc.postprocess = table.correction;
        doc.tabulation = Some(table.rows().to_vec());
        doc
    }

    pub fn from_profile(profile: &AnyProfile) -> Self {
        let ep = profile.endpoints();
        match profile {
            AnyProfile::Constant(c) => Self::bare(ModelKind::Constant, ep, vec![c.omega]),
            AnyProfile::Polynomial(p) => Self::bare(ModelKind::Polynomial, ep, p.alpha().to_vec()),
            AnyProfile::SmoothedRamp(r) => Self::bare(ModelKind::SmoothedRamp, ep, r.params().to_vec()),
            AnyProfile::Neural(n) => {
                let mut doc = Self::bare(ModelKind::Neural, ep, n.theta().to_vec());
                doc.architecture = Some(n.architecture().clone());
                doc
            }
            AnyProfile::Corrected(c) => {
                let mut doc = Self::from_profile(c.inner());
                doc.postprocess = Some(c.correction());
                doc
            }
            AnyProfile::Tabulated(t) => {
                let mut doc = Self::bare(ModelKind::Tabulated, ep, Vec::new());
                doc.postprocess = t.correction;
                doc.tabulation = Some(t.rows().to_vec());
                doc
            }
        }
    }

    /// The model without any stored correction or table.
    pub fn base_profile(&self) -> Result<AnyProfile> {
        let ep = self.endpoints()?;
        let params = &self.parameters;
        let expect = |n: usize| {
            if params.len() == n {
                Ok(())
            } else {
                Err(Error::ShapeMismatch {
                    expected: n,
                    found: params.len(),
                })
            }
        };
        Ok(match self.model_kind {
            ModelKind::Constant => {
                expect(1)?;
                AnyProfile::Constant(ConstantProfile {
                    omega: params[0],
                    endpoints: ep,
                })
            }
            ModelKind::Polynomial => AnyProfile::Polynomial(PolynomialAnsatz::new(params.clone(), ep)?),
            ModelKind::SmoothedRamp => {
                expect(3)?;
                AnyProfile::SmoothedRamp(SmoothedRampAnsatz::new(params[0], params[1], params[2], ep)?)
            }
            ModelKind::Neural => {
                let arch = self
                    .architecture
                    .clone()
                    .ok_or_else(|| Error::InvalidProfile("neural profile without architecture".into()))?;
                AnyProfile::Neural(NeuralProfile::new(arch, params.clone(), ep)?)
            }
            ModelKind::Tabulated => AnyProfile::Tabulated(self.table(ep)?),
        })
    }

    fn table(&self, ep: Endpoints) -> Result<TabulatedProfile> {
        let rows = self
            .tabulation
            .clone()
            .ok_or_else(|| Error::InvalidProfile("tabulated profile without tabulation".into()))?;
        let mut t = TabulatedProfile::new(ep, rows)?;
        t.correction = self.postprocess;
        Ok(t)
    }

    /// The profile the document describes: its table if it has one,
    /// otherwise the base model with any stored correction applied.
    pub fn to_profile(&self) -> Result<AnyProfile> {
        let ep = self.endpoints()?;
        if self.tabulation.is_some() {
            return Ok(AnyProfile::Tabulated(self.table(ep)?));
        }
        let base = self.base_profile()?;
        match self.postprocess {
            Some(c) => Ok(AnyProfile::Corrected(Box::new(CorrectedProfile::from_parts(
                base, ep, c,
            )?))),
            None => Ok(base),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        to_json_string(self)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }
}

/// Pretty JSON with every float printed to 17 significant digits.
pub struct Digits17<'a>(PrettyFormatter<'a>);

impl Default for Digits17<'_> {
    fn default() -> Self {
        Self(PrettyFormatter::new())
    }
}

impl Formatter for Digits17<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }
    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }
    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Digits17::default());
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::{postprocess_stretch_smooth, PostprocessOptions};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ep() -> Endpoints {
        Endpoints::new(0.1, 0.5, 6.0).unwrap()
    }

    #[test]
    fn floats_carry_seventeen_digits() {
        let s = to_json_string(&vec![0.1f64, 1.0 / 3.0]).unwrap();
        assert!(s.contains("1.0000000000000001e-1"), "{s}");
        assert!(s.contains("3.3333333333333331e-1"), "{s}");
        let back: Vec<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, vec![0.1, 1.0 / 3.0]);
    }

    #[test]
    fn neural_round_trip_is_bit_exact() {
        let arch = Architecture::reduced(2, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let theta: Vec<f64> = (0..arch.param_count()).map(|_| rng.random::<f64>() - 0.5).collect();
        let net = NeuralProfile::new(arch, theta, ep()).unwrap();
        let doc = ProfileDocument::from_profile(&AnyProfile::Neural(net.clone()));
        let back = ProfileDocument::from_json(&doc.to_json().unwrap()).unwrap();
        assert_eq!(back, doc);
        match back.to_profile().unwrap() {
            AnyProfile::Neural(n) => {
                let a: Vec<u64> = n.theta().iter().map(|v| v.to_bits()).collect();
                let b: Vec<u64> = net.theta().iter().map(|v| v.to_bits()).collect();
                assert_eq!(a, b);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn table_takes_precedence_and_round_trips() {
        let raw = PolynomialAnsatz::new(vec![9.0, -13.0, 5.0], ep()).unwrap();
        let table = postprocess_stretch_smooth(
            &raw,
            ep(),
            &PostprocessOptions {
                tabulation_points: 32,
                ..Default::default()
            },
        )
        .unwrap();
        let mut doc = ProfileDocument::from_profile(&AnyProfile::Polynomial(raw));
        doc.postprocess = table.correction;
        doc.tabulation = Some(table.rows().to_vec());
        let back = ProfileDocument::from_json(&doc.to_json().unwrap()).unwrap();
        assert_eq!(back, doc);
        match back.to_profile().unwrap() {
            AnyProfile::Tabulated(t) => assert_eq!(t, table),
            other => panic!("unexpected {other:?}"),
        }
        doc.tabulation = None;
        assert!(matches!(doc.to_profile().unwrap(), AnyProfile::Corrected(_)));
    }

    #[test]
    fn rejects_unknown_keys_and_bad_shapes() {
        let bad =
            r#"{"model_kind":"constant","endpoints":{"omega1":0.1,"omega2":0.5},"tau":6,"parameters":[0.1],"extra":1}"#;
        assert!(ProfileDocument::from_json(bad).is_err());
        let short =
            r#"{"model_kind":"smoothed_ramp","endpoints":{"omega1":0.1,"omega2":0.5},"tau":6,"parameters":[1.0]}"#;
        let doc = ProfileDocument::from_json(short).unwrap();
        assert!(matches!(doc.to_profile(), Err(Error::ShapeMismatch { .. })));
    }
}
