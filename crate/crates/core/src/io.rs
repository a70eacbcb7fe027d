//! JSON exchange formats. Fields travel as Fourier modes, so a file written on
//! one grid can be sampled on another when it is loaded.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::diffeo::{DiffeoClass, Support, TorusDiffeo};
use crate::error::{Error, Result};
use crate::grid::{from_spectral, to_spectral, DisplacementField, GridSpec, SpectralField};
use crate::interp::Interp;
use crate::pipeline::{BracketStage, CommutatorList, CommutatorPair, Provenance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub k: Vec<i64>,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

/// One representative of every conjugate pair of nonzero modes; the mirror is implied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldJson {
    pub n: usize,
    #[serde(rename = "N")]
    pub grid: usize,
    pub modes: Vec<Mode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support: Option<Support>,
    #[serde(default)]
    pub interp: Interp,
    #[serde(default = "near_identity")]
    pub class: DiffeoClass,
}

fn near_identity() -> DiffeoClass {
    DiffeoClass::NearIdentity
}

impl FieldJson {
    pub fn from_field(field: &DisplacementField) -> Self {
        let spec = to_spectral(field);
        let grid = field.grid();
        let dim = grid.dim();
        let mut modes = Vec::new();
        for idx in 0..grid.len() {
            if spec.conjugate_slot(idx) < idx {
                continue;
            }
            let c: Vec<Complex64> = (0..dim).map(|a| spec.component(a)[idx]).collect();
            if c.iter().all(|z| z.re == 0.0 && z.im == 0.0) {
                continue;
            }
            modes.push(Mode {
                k: spec.wavevector(idx)[..dim].to_vec(),
                re: c.iter().map(|z| z.re).collect(),
                im: c.iter().map(|z| z.im).collect(),
            });
        }
        Self {
            n: dim,
            grid: grid.n(),
            modes,
            support: None,
            interp: Interp::default(),
            class: DiffeoClass::NearIdentity,
        }
    }

    pub fn from_diffeo(f: &TorusDiffeo) -> Self {
        Self {
            support: f.support(),
            interp: f.interp(),
            class: f.class(),
            ..Self::from_field(f.field())
        }
    }

    pub fn spectral(&self) -> Result<SpectralField> {
        let source = GridSpec::new(self.n, self.grid)?;
        let mut spec = SpectralField::zeros(source);
        for m in &self.modes {
            if m.k.len() != self.n || m.re.len() != self.n || m.im.len() != self.n {
                return Err(Error::Input(format!("mode {:?} does not have {} entries", m.k, self.n)));
            }
            let neg: Vec<i64> = m.k.iter().map(|k| -k).collect();
            for c in 0..self.n {
                let z = Complex64::new(m.re[c], m.im[c]);
                spec.set(c, &neg, z.conj())?;
                spec.set(c, &m.k, z)?;
            }
        }
        Ok(spec)
    }

    /// Samples the field on `grid`, or on its own grid when `None`.
    pub fn field(&self, grid: Option<GridSpec>) -> Result<DisplacementField> {
        let target = match grid {
            Some(g) if g.dim() != self.n => {
                return Err(Error::GridMismatch(format!("file holds a {}D field", self.n)));
            }
            Some(g) => g,
            None => GridSpec::new(self.n, self.grid)?,
        };
        from_spectral(&self.spectral()?, target)
    }

    pub fn diffeo(&self, grid: Option<GridSpec>) -> Result<TorusDiffeo> {
        let f = TorusDiffeo::with_class(self.field(grid)?, self.interp, self.class)?;
        Ok(match self.support {
            Some(s) => f.masked(s),
            None => f,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorJson {
    pub g: FieldJson,
    pub h: FieldJson,
    pub chart: usize,
    pub foliation: usize,
    pub stage: BracketStage,
}

pub fn list_to_json(list: &CommutatorList) -> Vec<FactorJson> {
    list.pairs
        .iter()
        .map(|p| FactorJson {
            g: FieldJson::from_diffeo(&p.g),
            h: FieldJson::from_diffeo(&p.h),
            chart: p.provenance.chart,
            foliation: p.provenance.foliation,
            stage: p.provenance.stage,
        })
        .collect()
}

pub fn list_from_json(factors: &[FactorJson], grid: Option<GridSpec>) -> Result<CommutatorList> {
    let pairs = factors
        .iter()
        .map(|p| {
            Ok(CommutatorPair {
                g: p.g.diffeo(grid)?,
                h: p.h.diffeo(grid)?,
                provenance: Provenance {
                    chart: p.chart,
                    foliation: p.foliation,
                    stage: p.stage,
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CommutatorList { pairs })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let file = File::open(path)
        .map_err(|e| Error::Input(format!("cannot open {}: {e}", path.display())))?;
    serde_json::from_reader(BufReader::new(file))
        .map_err(|e| Error::Input(format!("cannot parse {}: {e}", path.display())))
}

/// Compact output, for factor files.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Indented output, for reports.
pub fn write_json_pretty<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffeo::{c0_distance, make_diffeo};
    use crate::suite;
    use std::f64::consts::PI;

    #[test]
    fn band_limited_field_is_resolution_independent() {
        let g16 = GridSpec::new(2, 16).unwrap();
        let json = FieldJson::from_field(&suite::field(3, 1e-3, g16).unwrap());
        let g64 = GridSpec::new(2, 64).unwrap();
        let a = json.field(Some(g64)).unwrap();
        let b = suite::field(3, 1e-3, g64).unwrap();
        assert!(crate::diffeo::field_distance(&a, &b) < 1e-17);
    }

    #[test]
    fn round_trip_through_text() {
        let grid = GridSpec::new(2, 32).unwrap();
        let f = make_diffeo(DisplacementField::from_fn(grid, |x| {
            [1e-3 * (2.0 * PI * x[0]).sin().powi(3), 1e-3 * (2.0 * PI * (x[0] - x[1])).cos()]
        }))
        .unwrap()
        .masked(Support::new(0.25, 0.75).unwrap());
        let text = serde_json::to_string(&FieldJson::from_diffeo(&f)).unwrap();
        let back: FieldJson = serde_json::from_str(&text).unwrap();
        let g = back.diffeo(None).unwrap();
        assert!(c0_distance(&f, &g) < 1e-17);
        assert_eq!(g.support(), f.support());
        assert!(g.first_node_outside(&Support::new(0.25, 0.75).unwrap()).is_none());
    }

    #[test]
    fn identity_has_no_modes() {
        let grid = GridSpec::new(1, 16).unwrap();
        let json = FieldJson::from_diffeo(&TorusDiffeo::identity(grid));
        assert!(json.modes.is_empty());
        assert!(json.diffeo(None).unwrap().is_identity());
    }

    #[test]
    fn malformed_modes_rejected() {
        let json = FieldJson {
            n: 2,
            grid: 16,
            modes: vec![Mode { k: vec![17, 0], re: vec![1.0, 0.0], im: vec![0.0, 0.0] }],
            support: None,
            interp: Interp::CubicSpline,
            class: DiffeoClass::NearIdentity,
        };
        assert!(json.field(None).is_err());
        let short = FieldJson {
            modes: vec![Mode { k: vec![1], re: vec![1.0], im: vec![0.0] }],
            ..json
        };
        assert!(matches!(short.field(None), Err(Error::Input(_))));
    }
}
