//! JSON description of a source or channel:
//!
//! ```json
//! {
//!   "d": 2,
//!   "input_distribution": [0.5, 0.5],
//!   "outputs": [[[[1, 0], [0, 0]], [[0, 0], [0, 0]]],
//!               [[[0.5, 0], [0.5, 0]], [[0.5, 0], [0.5, 0]]]],
//!   "symmetry": null
//! }
//! ```
//!
//! Matrix entries are `[re, im]` pairs, rows first. `input_distribution`
//! defaults to uniform; `symmetry`, when given, lists the unitaries `V(z)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{validation, Error, Result};
use crate::experiments::Source;
use crate::linalg::{CMat, DensityMatrix, HermitianMatrix};
use crate::states::{CQChannel, GroupAction, ProbabilityVector};

pub type ComplexEntries = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpecFile {
    pub d: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_distribution: Option<Vec<f64>>,
    pub outputs: Vec<ComplexEntries>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symmetry: Option<Vec<ComplexEntries>>,
}

fn to_matrix(entries: &ComplexEntries, what: &str) -> Result<CMat> {
    let rows = entries.len();
    if rows == 0 || entries.iter().any(|r| r.len() != rows) {
        return validation(format!("{what} must be a non-empty square matrix"));
    }
    if entries.iter().flatten().flatten().any(|x| !x.is_finite()) {
        return validation(format!("{what} has a non-finite entry"));
    }
    Ok(CMat::from_fn(rows, rows, |i, j| Complex64::new(entries[i][j][0], entries[i][j][1])))
}

fn to_entries(m: &CMat) -> ComplexEntries {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

impl ChannelSpecFile {
    /// Parses JSON text; syntax errors carry line and column.
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| Error::Validation(format!("spec file, line {} column {}: {e}", e.line(), e.column())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec files always serialize")
    }

    pub fn from_source(source: &Source, symmetry: Option<&GroupAction>) -> Self {
        ChannelSpecFile {
            d: source.alphabet(),
            input_distribution: Some(source.distribution.as_slice().to_vec()),
            outputs: source.channel.outputs().iter().map(|o| to_entries(o.matrix())).collect(),
            symmetry: symmetry.map(|a| a.unitaries().iter().map(to_entries).collect()),
        }
    }

    /// The channel; with `normalize`, outputs are rescaled to unit trace
    /// instead of being rejected.
    pub fn channel(&self, normalize: bool) -> Result<CQChannel> {
        if self.outputs.len() != self.d {
            return validation(format!("spec declares d = {} but lists {} outputs", self.d, self.outputs.len()));
        }
        let outputs = self
            .outputs
            .iter()
            .enumerate()
            .map(|(z, e)| {
                let what = format!("output {z}");
                let h = HermitianMatrix::new(to_matrix(e, &what)?)
                    .map_err(|err| Error::Validation(format!("{what}: {err}")))?;
                let rho = if normalize { DensityMatrix::normalized(h) } else { DensityMatrix::new(h) };
                rho.map_err(|err| Error::Validation(format!("{what}: {err}")))
            })
            .collect::<Result<Vec<_>>>()?;
        CQChannel::new(outputs)
    }

    pub fn distribution(&self, normalize: bool) -> Result<ProbabilityVector> {
        match &self.input_distribution {
            None => Ok(ProbabilityVector::uniform(self.d)),
            Some(p) if p.len() != self.d => {
                validation(format!("input distribution has {} entries, expected d = {}", p.len(), self.d))
            }
            Some(p) if normalize => ProbabilityVector::normalized(p.clone()),
            Some(p) => ProbabilityVector::new(p.clone()),
        }
    }

    pub fn source(&self, normalize: bool) -> Result<Source> {
        Source::new(self.distribution(normalize)?, self.channel(normalize)?)
    }

    /// The declared group action, checked against the channel.
    pub fn symmetry(&self, normalize: bool) -> Result<Option<GroupAction>> {
        let Some(us) = &self.symmetry else {
            return Ok(None);
        };
        let unitaries = us
            .iter()
            .enumerate()
            .map(|(z, e)| to_matrix(e, &format!("symmetry unitary {z}")))
            .collect::<Result<Vec<_>>>()?;
        let action = GroupAction::new(unitaries)?;
        action.certify(&self.channel(normalize)?)?;
        Ok(Some(action))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const BSC: &str = r#"{
        "d": 2,
        "outputs": [
            [[[0.9, 0], [0, 0]], [[0, 0], [0.1, 0]]],
            [[[0.1, 0], [0, 0]], [[0, 0], [0.9, 0]]]
        ],
        "symmetry": [
            [[[1, 0], [0, 0]], [[0, 0], [1, 0]]],
            [[[0, 0], [1, 0]], [[1, 0], [0, 0]]]
        ]
    }"#;

    #[test]
    fn parses_bsc_with_symmetry() {
        let spec = ChannelSpecFile::parse(BSC).unwrap();
        let s = spec.source(false).unwrap();
        assert_eq!(s.distribution.as_slice(), &[0.5, 0.5]);
        assert!(spec.symmetry(false).unwrap().is_some());
    }

    #[test]
    fn round_trip_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for d in [2, 3] {
            let s = Source::new(random::distribution(&mut rng, d), random::mixed_channel(&mut rng, d, 2)).unwrap();
            let text = ChannelSpecFile::from_source(&s, None).to_json();
            let back = ChannelSpecFile::parse(&text).unwrap().source(false).unwrap();
            assert_eq!(back.distribution, s.distribution);
            for (a, b) in back.channel.outputs().iter().zip(s.channel.outputs()) {
                assert!(a.max_abs_diff(b) <= 1e-15);
            }
        }
    }

    #[test]
    fn rejects_bad_files() {
        let err = ChannelSpecFile::parse("{\"d\": 2,\n \"outputs\": [}").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let unnormalized = r#"{"d": 2, "outputs": [[[[2, 0]]], [[[1, 0]]]]}"#;
        let spec = ChannelSpecFile::parse(unnormalized).unwrap();
        assert!(spec.channel(false).is_err());
        assert!(spec.channel(true).is_ok());
        let wrong_d = r#"{"d": 3, "outputs": [[[[1, 0]]], [[[1, 0]]]]}"#;
        assert!(ChannelSpecFile::parse(wrong_d).unwrap().channel(false).is_err());
        let bad_sym = BSC.replace("[[0, 0], [1, 0]], [[1, 0], [0, 0]]", "[[1, 0], [0, 0]], [[0, 0], [-1, 0]]");
        assert!(ChannelSpecFile::parse(&bad_sym).unwrap().symmetry(false).is_err());
    }
}
