//! JSON model files: site energies, couplings, dephasing rates, unit tag
//! and initial state.
//!
//! ```json
//! {
//!   "units": "cm-1",
//!   "sites": [{ "label": "A", "energy": 12410.0 }, { "label": "B", "energy": 12530.0 }],
//!   "couplings": [{ "i": 0, "j": 1, "value": -87.7 }],
//!   "gamma": 100.0,
//!   "shift": -12000.0,
//!   "initial_state": { "site": 0 }
//! }
//! ```
//!
//! `couplings` may also be a full matrix. `gamma` is a scalar or one value
//! per site. `shift` is added to every site energy. Complex amplitudes are
//! `[re, im]` pairs. Values are in the file's units; cm⁻¹ inputs are
//! converted to rad/ps on load.

use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::AggregateModel;
use crate::scenario::InitialState;
use crate::units::UnitSystem;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingEntry {
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Couplings {
    List(Vec<CouplingEntry>),
    Matrix(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Rates {
    Uniform(f64),
    PerSite(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureEntry {
    pub weight: f64,
    pub amplitudes: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialStateSpec {
    Site(usize),
    Amplitudes(Vec<[f64; 2]>),
    Mixture(Vec<MixtureEntry>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub units: UnitSystem,
    pub sites: Vec<SiteEntry>,
    pub couplings: Couplings,
    pub gamma: Rates,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_state: Option<InitialStateSpec>,
}

fn to_complex(v: &[[f64; 2]]) -> Vec<Complex64> {
    v.iter().map(|[re, im]| Complex64::new(*re, *im)).collect()
}

fn invalid(e: Error) -> Error {
    Error::Validation(Box::new(e))
}

impl ModelFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            context: format!("line {} column {}", e.line(), e.column()),
            message: e.to_string(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model file serializes")
    }

    /// Coupling matrix in file units. A pair listed in only one order is
    /// mirrored; a pair listed in both orders must agree.
    fn coupling_matrix(&self) -> Result<DMatrix<f64>> {
        let n = self.sites.len();
        match &self.couplings {
            Couplings::Matrix(rows) => {
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return Err(invalid(Error::DimensionMismatch(format!(
                        "coupling matrix must be {n}x{n}"
                    ))));
                }
                Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
            }
            Couplings::List(entries) => {
                let mut m = DMatrix::zeros(n, n);
                let mut given = DMatrix::from_element(n, n, false);
                for e in entries {
                    if e.i >= n || e.j >= n {
                        return Err(invalid(Error::IndexOutOfRange {
                            index: e.i.max(e.j),
                            len: n,
                        }));
                    }
                    if e.i == e.j {
                        return Err(invalid(Error::NonZeroDiagonal {
                            index: e.i,
                            value: e.value,
                        }));
                    }
                    m[(e.i, e.j)] = e.value;
                    given[(e.i, e.j)] = true;
                }
                for i in 0..n {
                    for j in 0..n {
                        if given[(i, j)] && !given[(j, i)] {
                            m[(j, i)] = m[(i, j)];
                        }
                    }
                }
                Ok(m)
            }
        }
    }

    /// Builds the validated model (internal units) and initial state.
    pub fn build(&self) -> Result<(AggregateModel, InitialState)> {
        let n = self.sites.len();
        let units = self.units;
        let shift = self.shift.unwrap_or(0.0);
        let epsilon = self.sites.iter().map(|s| units.to_internal(s.energy + shift)).collect();
        let coupling = self.coupling_matrix()?.map(|v| units.to_internal(v));
        let gamma = match &self.gamma {
            Rates::Uniform(g) => vec![units.to_internal(*g); n],
            Rates::PerSite(g) => g.iter().map(|v| units.to_internal(*v)).collect(),
        };
        let model = AggregateModel::build(epsilon, coupling, gamma, units).map_err(invalid)?;
        let initial = match &self.initial_state {
            None => InitialState::Site(0),
            Some(InitialStateSpec::Site(k)) => InitialState::Site(*k),
            Some(InitialStateSpec::Amplitudes(a)) => InitialState::amplitudes(&to_complex(a)).map_err(invalid)?,
            Some(InitialStateSpec::Mixture(m)) => InitialState::mixture(
                m.iter().map(|e| (e.weight, to_complex(&e.amplitudes))).collect(),
            )
            .map_err(invalid)?,
        };
        initial.check_dim(n).map_err(invalid)?;
        Ok((model, initial))
    }

    /// File description of an existing model, energies written in `units`.
    pub fn from_model(model: &AggregateModel, initial: &InitialState) -> Self {
        let units = model.units();
        let n = model.n_sites();
        let mut couplings = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let v = model.coupling()[(i, j)];
                if v != 0.0 {
                    couplings.push(CouplingEntry {
                        i,
                        j,
                        value: units.from_internal(v),
                    });
                }
            }
        }
        let pair = |z: &Complex64| [z.re, z.im];
        let initial_state = match initial {
            InitialState::Site(k) => InitialStateSpec::Site(*k),
            InitialState::Amplitudes(a) => InitialStateSpec::Amplitudes(a.iter().map(pair).collect()),
            InitialState::Mixture(m) => InitialStateSpec::Mixture(
                m.iter()
                    .map(|(w, a)| MixtureEntry {
                        weight: *w,
                        amplitudes: a.iter().map(pair).collect(),
                    })
                    .collect(),
            ),
        };
        ModelFile {
            description: None,
            units,
            sites: model
                .epsilon()
                .iter()
                .map(|e| SiteEntry {
                    label: None,
                    energy: units.from_internal(*e),
                })
                .collect(),
            couplings: Couplings::List(couplings),
            gamma: Rates::PerSite(model.gamma().iter().map(|g| units.from_internal(*g)).collect()),
            shift: None,
            initial_state: Some(initial_state),
        }
    }
}

/// Reads and validates a model file from disk.
pub fn load_model(path: impl AsRef<Path>) -> Result<(AggregateModel, InitialState)> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    ModelFile::parse(&text)
        .map_err(|e| match e {
            Error::Parse { context, message } => Error::Parse {
                context: format!("{}: {context}", path.display()),
                message,
            },
            other => other,
        })?
        .build()
}

/// Path of the bundled 7-site FMO model.
pub fn fmo_asset_path() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("assets/fmo_c_tepidum.json")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::make_chain;
    use crate::units::convert_energy;

    const DIMER: &str = r#"{
        "units": "V",
        "sites": [{"energy": 10.0}, {"energy": 11.0}],
        "couplings": [[0.0, 1.0], [1.0, 0.0]],
        "gamma": [0.5, 1.5],
        "initial_state": {"amplitudes": [[1.0, 0.0], [0.0, 1.0]]}
    }"#;

    #[test]
    fn parses_matrix_form() {
        let (m, init) = ModelFile::parse(DIMER).unwrap().build().unwrap();
        assert_eq!(m.epsilon(), &[10.0, 11.0]);
        assert_eq!(m.gamma(), &[0.5, 1.5]);
        let InitialState::Amplitudes(a) = init else { panic!("{init:?}") };
        let s = 0.5f64.sqrt();
        assert!((a[0] - Complex64::new(s, 0.0)).norm() < 1e-15);
        assert!((a[1] - Complex64::new(0.0, s)).norm() < 1e-15);
    }

    #[test]
    fn fmo_asset_structure() {
        let (m, init) = load_model(fmo_asset_path()).unwrap();
        assert_eq!(m.n_sites(), 7);
        assert_eq!(init, InitialState::Site(0));
        assert_eq!(m.coupling(), &m.coupling().transpose());
        // energies ~12000 cm⁻¹, spread of a few hundred, couplings ~100 cm⁻¹
        let wn: Vec<f64> = m.epsilon().iter().map(|e| e / convert_energy(1.0)).collect();
        assert!(wn.iter().all(|e| (11_500.0..13_000.0).contains(e)));
        let spread = wn.iter().cloned().fold(f64::MIN, f64::max) - wn.iter().cloned().fold(f64::MAX, f64::min);
        assert!((100.0..1000.0).contains(&spread));
        let vmax = m.max_abs_coupling() / convert_energy(1.0);
        assert!((30.0..300.0).contains(&vmax));
    }

    #[test]
    fn shift_key_lowers_energies() {
        let mut file = ModelFile::parse(&std::fs::read_to_string(fmo_asset_path()).unwrap()).unwrap();
        let (base, _) = file.build().unwrap();
        file.shift = Some(-12000.0);
        let (shifted, _) = file.build().unwrap();
        for (a, b) in base.epsilon().iter().zip(shifted.epsilon()) {
            assert!((a - b - convert_energy(12000.0)).abs() < 1e-9);
        }
        assert!(shifted.epsilon().iter().all(|e| *e > 0.0 && *e < convert_energy(1000.0)));
    }

    #[test]
    fn asymmetric_file_is_a_validation_error() {
        let text = DIMER.replace("[[0.0, 1.0], [1.0, 0.0]]", "[[0.0, 1.0], [0.9, 0.0]]");
        let err = ModelFile::parse(&text).unwrap().build().unwrap_err();
        assert!(matches!(err, Error::Validation(inner) if matches!(*inner, Error::AsymmetricCoupling { .. })));
        let text = r#"{"units":"V","sites":[{"energy":1},{"energy":1}],
            "couplings":[{"i":0,"j":1,"value":1.0},{"i":1,"j":0,"value":2.0}],"gamma":0}"#;
        assert!(matches!(ModelFile::parse(text).unwrap().build(), Err(Error::Validation(_))));
    }

    #[test]
    fn parse_errors_carry_location() {
        let err = ModelFile::parse("{\n  \"units\": \"V\",\n  \"sites\": oops }").unwrap_err();
        match err {
            Error::Parse { context, .. } => assert!(context.contains("line 3"), "{context}"),
            other => panic!("{other:?}"),
        }
        assert!(ModelFile::parse(r#"{"units":"eV","sites":[],"couplings":[],"gamma":0}"#).is_err());
    }

    #[test]
    fn mixture_weights_must_sum_to_one() {
        let text = r#"{"units":"V","sites":[{"energy":1},{"energy":1}],"couplings":[],"gamma":0,
            "initial_state":{"mixture":[{"weight":0.6,"amplitudes":[[1,0],[0,0]]},{"weight":0.3,"amplitudes":[[0,0],[1,0]]}]}}"#;
        assert!(matches!(ModelFile::parse(text).unwrap().build(), Err(Error::Validation(_))));
    }

    #[test]
    fn write_then_load_is_identity() {
        let (chain, init) = make_chain(6, 1.3, 7.5, 0.25, 2).unwrap();
        let (again, init2) = ModelFile::parse(&ModelFile::from_model(&chain, &init).to_json())
            .unwrap()
            .build()
            .unwrap();
        assert_eq!(init, init2);
        assert!((again.coupling() - chain.coupling()).abs().max() < 1e-12);
        assert_eq!(again.epsilon(), chain.epsilon());

        let (fmo, init) = load_model(fmo_asset_path()).unwrap();
        let (again, _) = ModelFile::parse(&ModelFile::from_model(&fmo, &init).to_json())
            .unwrap()
            .build()
            .unwrap();
        for (a, b) in fmo.epsilon().iter().zip(again.epsilon()) {
            assert!((a - b).abs() <= 1e-12 * a.abs());
        }
        assert!((again.coupling() - fmo.coupling()).abs().max() < 1e-12);
    }
}
