//! JSON interchange for matrices, scenes, and run configuration.
//!
//! All documents serialize deterministically: struct fields in declaration
//! order, map payloads sorted, floats printed shortest-round-trip. Loading a
//! scene back through the typed constructors re-runs every validator, so a
//! document that parses is not necessarily a document that validates.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extremality::Subalgebra;
use crate::linalg::{ComplexMatrix, Tolerance};
use crate::process::{ProcessPovm, RepresentationTriple, TripleInput};
use crate::quantum::{Channel, DensityMatrix, Povm};

/// Dense complex matrix as row-major `[re, im]` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixDocument {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl MatrixDocument {
    pub fn from_matrix(m: &ComplexMatrix) -> Self {
        let mut data = Vec::with_capacity(m.nrows() * m.ncols());
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                let z = m[(r, c)];
                data.push([z.re, z.im]);
            }
        }
        MatrixDocument {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }

    pub fn to_matrix(&self) -> Result<ComplexMatrix> {
        if self.data.len() != self.rows * self.cols {
            return Err(Error::Parse(format!(
                "matrix data length {} does not match {}x{}",
                self.data.len(),
                self.rows,
                self.cols
            )));
        }
        for pair in &self.data {
            if !pair[0].is_finite() || !pair[1].is_finite() {
                return Err(Error::Parse("matrix entry is not finite".into()));
            }
        }
        Ok(ComplexMatrix::from_fn(self.rows, self.cols, |r, c| {
            let [re, im] = self.data[r * self.cols + c];
            Complex64::new(re, im)
        }))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SceneKind {
    Povm,
    ProcessPovm,
    Triple,
    Channel,
    Subalgebra,
}

impl SceneKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SceneKind::Povm => "povm",
            SceneKind::ProcessPovm => "process_povm",
            SceneKind::Triple => "triple",
            SceneKind::Channel => "channel",
            SceneKind::Subalgebra => "subalgebra",
        }
    }
}

/// Space dimensions; a slot not meaningful for the kind is zero.
/// povm: effects on `dK (x) dH0`. process_povm: effects on `dK (x) dH`.
/// triple: all three. channel: `dK` output, `dH` input. subalgebra:
/// ambient `dH0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneDims {
    #[serde(rename = "dK")]
    pub dk: usize,
    #[serde(rename = "dH")]
    pub dh: usize,
    #[serde(rename = "dH0")]
    pub dh0: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneDocument {
    pub kind: SceneKind,
    pub dims: SceneDims,
    pub n: usize,
    pub payload: serde_json::Value,
    #[serde(default)]
    pub meta: BTreeMap<String, String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PovmPayload {
    pub effects: Vec<MatrixDocument>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessPovmPayload {
    pub effects: Vec<MatrixDocument>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputKind {
    Pure,
    Mixed,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TriplePayload {
    pub input_kind: InputKind,
    /// Pure: the map `T` (dH0 x dH). Mixed: the state on `H (x) H0`.
    pub input: MatrixDocument,
    pub effects: Vec<MatrixDocument>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelPayload {
    pub kraus: Vec<MatrixDocument>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubalgebraPayload {
    pub basis: Vec<MatrixDocument>,
}

fn payload_value<T: Serialize>(payload: &T) -> serde_json::Value {
    serde_json::to_value(payload).expect("payload structs serialize infallibly")
}

fn parse_payload<T: for<'de> Deserialize<'de>>(scene: &SceneDocument) -> Result<T> {
    serde_json::from_value(scene.payload.clone())
        .map_err(|e| Error::Parse(format!("{} payload: {e}", scene.kind.as_str())))
}

fn expect_kind(scene: &SceneDocument, kind: SceneKind) -> Result<()> {
    if scene.kind != kind {
        return Err(Error::Parse(format!(
            "expected a {} scene, found {}",
            kind.as_str(),
            scene.kind.as_str()
        )));
    }
    Ok(())
}

/// `dk` records how the measured space factors; 1 for an ordinary POVM.
pub fn povm_scene(m: &Povm, dk: usize) -> SceneDocument {
    assert!(dk >= 1 && m.space_dim() % dk == 0, "dk must divide the space");
    SceneDocument {
        kind: SceneKind::Povm,
        dims: SceneDims {
            dk,
            dh: 0,
            dh0: m.space_dim() / dk,
        },
        n: m.n(),
        payload: payload_value(&PovmPayload {
            effects: m.effects().iter().map(MatrixDocument::from_matrix).collect(),
        }),
        meta: BTreeMap::new(),
    }
}

pub fn scene_povm(scene: &SceneDocument, tol: &Tolerance) -> Result<Povm> {
    expect_kind(scene, SceneKind::Povm)?;
    let payload: PovmPayload = parse_payload(scene)?;
    let effects = payload
        .effects
        .iter()
        .map(|d| d.to_matrix())
        .collect::<Result<Vec<_>>>()?;
    let m = Povm::new(effects, tol)?;
    let expected = scene.dims.dk * scene.dims.dh0;
    if m.space_dim() != expected || scene.n != m.n() {
        return Err(Error::DimensionMismatch {
            context: "povm scene dims",
            expected,
            found: m.space_dim(),
        });
    }
    Ok(m)
}

pub fn process_povm_scene(f: &ProcessPovm) -> SceneDocument {
    SceneDocument {
        kind: SceneKind::ProcessPovm,
        dims: SceneDims {
            dk: f.dk(),
            dh: f.dh(),
            dh0: 0,
        },
        n: f.n(),
        payload: payload_value(&ProcessPovmPayload {
            effects: f.effects().iter().map(MatrixDocument::from_matrix).collect(),
        }),
        meta: BTreeMap::new(),
    }
}

pub fn scene_process_povm(scene: &SceneDocument, tol: &Tolerance) -> Result<ProcessPovm> {
    expect_kind(scene, SceneKind::ProcessPovm)?;
    let payload: ProcessPovmPayload = parse_payload(scene)?;
    let effects = payload
        .effects
        .iter()
        .map(|d| d.to_matrix())
        .collect::<Result<Vec<_>>>()?;
    let f = ProcessPovm::new(scene.dims.dk, scene.dims.dh, effects, tol)?;
    if scene.n != f.n() {
        return Err(Error::DimensionMismatch {
            context: "process_povm scene outcomes",
            expected: scene.n,
            found: f.n(),
        });
    }
    Ok(f)
}

pub fn triple_scene(t: &RepresentationTriple) -> SceneDocument {
    let (input_kind, input) = match t.input() {
        TripleInput::Pure(map) => (InputKind::Pure, MatrixDocument::from_matrix(map)),
        TripleInput::Mixed(rho) => (InputKind::Mixed, MatrixDocument::from_matrix(rho.mat())),
    };
    SceneDocument {
        kind: SceneKind::Triple,
        dims: SceneDims {
            dk: t.dk(),
            dh: t.dh(),
            dh0: t.dh0(),
        },
        n: t.n(),
        payload: payload_value(&TriplePayload {
            input_kind,
            input,
            effects: t
                .povm()
                .effects()
                .iter()
                .map(MatrixDocument::from_matrix)
                .collect(),
        }),
        meta: BTreeMap::new(),
    }
}

pub fn scene_triple(scene: &SceneDocument, tol: &Tolerance) -> Result<RepresentationTriple> {
    expect_kind(scene, SceneKind::Triple)?;
    let payload: TriplePayload = parse_payload(scene)?;
    let effects = payload
        .effects
        .iter()
        .map(|d| d.to_matrix())
        .collect::<Result<Vec<_>>>()?;
    let povm = Povm::new(effects, tol)?;
    let input = payload.input.to_matrix()?;
    let t = match payload.input_kind {
        InputKind::Pure => RepresentationTriple::new_pure(scene.dims.dk, input, povm, tol)?,
        InputKind::Mixed => {
            let rho = DensityMatrix::new(input, tol)?;
            RepresentationTriple::new_mixed(scene.dims.dh, rho, povm, tol)?
        }
    };
    if t.dk() != scene.dims.dk || t.dh() != scene.dims.dh || t.dh0() != scene.dims.dh0 {
        return Err(Error::DimensionMismatch {
            context: "triple scene dims",
            expected: scene.dims.dh0,
            found: t.dh0(),
        });
    }
    Ok(t)
}

pub fn channel_scene(phi: &Channel) -> SceneDocument {
    SceneDocument {
        kind: SceneKind::Channel,
        dims: SceneDims {
            dk: phi.out_dim(),
            dh: phi.in_dim(),
            dh0: 0,
        },
        n: phi.kraus().len(),
        payload: payload_value(&ChannelPayload {
            kraus: phi.kraus().iter().map(MatrixDocument::from_matrix).collect(),
        }),
        meta: BTreeMap::new(),
    }
}

pub fn scene_channel(scene: &SceneDocument, tol: &Tolerance) -> Result<Channel> {
    expect_kind(scene, SceneKind::Channel)?;
    let payload: ChannelPayload = parse_payload(scene)?;
    let kraus = payload
        .kraus
        .iter()
        .map(|d| d.to_matrix())
        .collect::<Result<Vec<_>>>()?;
    let phi = Channel::new(kraus, tol)?;
    if phi.out_dim() != scene.dims.dk || phi.in_dim() != scene.dims.dh {
        return Err(Error::DimensionMismatch {
            context: "channel scene dims",
            expected: scene.dims.dh,
            found: phi.in_dim(),
        });
    }
    Ok(phi)
}

pub fn subalgebra_scene(a: &Subalgebra) -> SceneDocument {
    SceneDocument {
        kind: SceneKind::Subalgebra,
        dims: SceneDims {
            dk: 0,
            dh: 0,
            dh0: a.ambient_dim(),
        },
        n: a.dim(),
        payload: payload_value(&SubalgebraPayload {
            basis: a.basis().iter().map(MatrixDocument::from_matrix).collect(),
        }),
        meta: BTreeMap::new(),
    }
}

pub fn scene_subalgebra(scene: &SceneDocument, tol: &Tolerance) -> Result<Subalgebra> {
    expect_kind(scene, SceneKind::Subalgebra)?;
    let payload: SubalgebraPayload = parse_payload(scene)?;
    let basis = payload
        .basis
        .iter()
        .map(|d| d.to_matrix())
        .collect::<Result<Vec<_>>>()?;
    let a = Subalgebra::from_basis(&basis, tol)?;
    if a.ambient_dim() != scene.dims.dh0 {
        return Err(Error::DimensionMismatch {
            context: "subalgebra scene ambient dim",
            expected: scene.dims.dh0,
            found: a.ambient_dim(),
        });
    }
    if a.dim() != scene.n {
        return Err(Error::DimensionMismatch {
            context: "subalgebra scene basis is not multiplicatively closed",
            expected: scene.n,
            found: a.dim(),
        });
    }
    Ok(a)
}

pub fn scene_to_string(scene: &SceneDocument) -> Result<String> {
    let mut s = serde_json::to_string_pretty(scene)
        .map_err(|e| Error::Parse(format!("serialize: {e}")))?;
    s.push('\n');
    Ok(s)
}

pub fn parse_scene(text: &str) -> Result<SceneDocument> {
    serde_json::from_str(text).map_err(|e| Error::Parse(format!("scene: {e}")))
}

pub fn load_scene(path: &Path) -> Result<SceneDocument> {
    let text = fs::read_to_string(path)?;
    parse_scene(&text)
}

pub fn save_scene(path: &Path, scene: &SceneDocument) -> Result<()> {
    fs::write(path, scene_to_string(scene)?)?;
    Ok(())
}

pub fn load_matrix(path: &Path) -> Result<ComplexMatrix> {
    let text = fs::read_to_string(path)?;
    let doc: MatrixDocument =
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("matrix: {e}")))?;
    doc.to_matrix()
}

pub fn save_matrix(path: &Path, m: &ComplexMatrix) -> Result<()> {
    let doc = MatrixDocument::from_matrix(m);
    let mut s = serde_json::to_string_pretty(&doc)
        .map_err(|e| Error::Parse(format!("serialize: {e}")))?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

/// Tool-wide runtime knobs. `PPOVM_EPS` and `PPOVM_SEED` supply defaults;
/// explicit flags win over the environment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunConfig {
    pub eps: f64,
    pub seed: u64,
    pub max_dim: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            eps: 1e-9,
            seed: 0,
            max_dim: 8,
        }
    }
}

impl RunConfig {
    pub fn resolve(eps_flag: Option<f64>, seed_flag: Option<u64>) -> Result<Self> {
        let defaults = RunConfig::default();
        let eps = match eps_flag {
            Some(e) => e,
            None => match std::env::var("PPOVM_EPS") {
                Ok(s) => s
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("PPOVM_EPS: not a float: {s:?}")))?,
                Err(_) => defaults.eps,
            },
        };
        let seed = match seed_flag {
            Some(s) => s,
            None => match std::env::var("PPOVM_SEED") {
                Ok(s) => s
                    .parse::<u64>()
                    .map_err(|_| Error::Parse(format!("PPOVM_SEED: not an integer: {s:?}")))?,
                Err(_) => defaults.seed,
            },
        };
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::Parse(format!("eps must be positive, got {eps}")));
        }
        Ok(RunConfig {
            eps,
            seed,
            max_dim: defaults.max_dim,
        })
    }

    pub fn tolerance(&self) -> Tolerance {
        Tolerance::new(self.eps).expect("RunConfig eps is validated positive")
    }

    /// Rejects any factor dimension beyond the guard.
    pub fn check_dims(&self, dims: &[usize]) -> Result<()> {
        if let Some(&d) = dims.iter().find(|&&d| d > self.max_dim) {
            return Err(Error::DimensionLimit {
                found: d,
                limit: self.max_dim,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::realize;
    use crate::random::{
        random_channel, random_mixed_triple, random_povm, random_triple, rng_from_seed,
    };

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    #[test]
    fn matrix_documents_preserve_bits() {
        let m = ComplexMatrix::from_fn(2, 3, |r, c| {
            Complex64::new(
                std::f64::consts::PI * (r as f64 + 1.0) / 3.0,
                -(c as f64) / 7.0,
            )
        });
        let doc = MatrixDocument::from_matrix(&m);
        let json = serde_json::to_string(&doc).unwrap();
        let back: MatrixDocument = serde_json::from_str(&json).unwrap();
        let restored = back.to_matrix().unwrap();
        for r in 0..2 {
            for c in 0..3 {
                assert_eq!(m[(r, c)].re.to_bits(), restored[(r, c)].re.to_bits());
                assert_eq!(m[(r, c)].im.to_bits(), restored[(r, c)].im.to_bits());
            }
        }
    }

    #[test]
    fn matrix_document_rejects_bad_length() {
        let doc = MatrixDocument {
            rows: 2,
            cols: 2,
            data: vec![[1.0, 0.0]; 3],
        };
        assert!(matches!(doc.to_matrix(), Err(Error::Parse(_))));
    }

    #[test]
    fn scene_serialization_is_stable() {
        let mut rng = rng_from_seed(601);
        let m = random_povm(&mut rng, 2, 2, &tol()).unwrap();
        let scene = povm_scene(&m, 1);
        let once = scene_to_string(&scene).unwrap();
        let reparsed = parse_scene(&once).unwrap();
        let twice = scene_to_string(&reparsed).unwrap();
        assert_eq!(once, twice);
        assert_eq!(scene, reparsed);
    }

    #[test]
    fn povm_scene_round_trips_through_validation() {
        let mut rng = rng_from_seed(607);
        let m = random_povm(&mut rng, 4, 3, &tol()).unwrap();
        let scene = povm_scene(&m, 2);
        assert_eq!(scene.dims.dk, 2);
        assert_eq!(scene.dims.dh0, 2);
        let back = scene_povm(&scene, &tol()).unwrap();
        for (a, b) in m.effects().iter().zip(back.effects()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn unknown_payload_fields_are_rejected() {
        let mut rng = rng_from_seed(613);
        let m = random_povm(&mut rng, 2, 2, &tol()).unwrap();
        let mut scene = povm_scene(&m, 1);
        scene
            .payload
            .as_object_mut()
            .unwrap()
            .insert("extra".into(), serde_json::json!(1));
        assert!(matches!(scene_povm(&scene, &tol()), Err(Error::Parse(_))));
    }

    #[test]
    fn kind_mismatch_is_a_parse_error() {
        let mut rng = rng_from_seed(617);
        let m = random_povm(&mut rng, 2, 2, &tol()).unwrap();
        let scene = povm_scene(&m, 1);
        assert!(matches!(scene_channel(&scene, &tol()), Err(Error::Parse(_))));
    }

    #[test]
    fn triple_scenes_round_trip_both_input_kinds() {
        let mut rng = rng_from_seed(619);
        let pure = random_triple(&mut rng, 2, 3, 2, 2, &tol()).unwrap();
        let mixed = random_mixed_triple(&mut rng, 2, 2, 2, 3, &tol()).unwrap();
        for t in [pure, mixed] {
            let scene = triple_scene(&t);
            let back = scene_triple(&scene, &tol()).unwrap();
            let f0 = realize(&t, &tol()).unwrap();
            let f1 = realize(&back, &tol()).unwrap();
            assert!(crate::process::max_effect_distance(&f0, &f1) < 1e-12);
        }
    }

    #[test]
    fn process_povm_scene_round_trips() {
        let mut rng = rng_from_seed(631);
        let t = random_triple(&mut rng, 2, 2, 2, 3, &tol()).unwrap();
        let f = realize(&t, &tol()).unwrap();
        let scene = process_povm_scene(&f);
        let back = scene_process_povm(&scene, &tol()).unwrap();
        assert!(crate::process::max_effect_distance(&f, &back) < 1e-12);
    }

    #[test]
    fn channel_scene_round_trips() {
        let mut rng = rng_from_seed(641);
        let phi = random_channel(&mut rng, 2, 3, 2, &tol()).unwrap();
        let scene = channel_scene(&phi);
        assert_eq!(scene.dims.dk, 3);
        assert_eq!(scene.dims.dh, 2);
        let back = scene_channel(&scene, &tol()).unwrap();
        for (a, b) in phi.kraus().iter().zip(back.kraus()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn subalgebra_scene_preserves_dimension() {
        let a = Subalgebra::ancilla_factor(2, 2);
        let scene = subalgebra_scene(&a);
        assert_eq!(scene.n, 4);
        let back = scene_subalgebra(&scene, &tol()).unwrap();
        assert_eq!(back.dim(), 4);
        assert_eq!(back.ambient_dim(), 4);
    }

    #[test]
    fn malformed_json_is_a_parse_error() {
        assert!(matches!(parse_scene("{ nope"), Err(Error::Parse(_))));
    }

    #[test]
    fn files_round_trip_bytewise() {
        let mut rng = rng_from_seed(643);
        let m = random_povm(&mut rng, 3, 2, &tol()).unwrap();
        let scene = povm_scene(&m, 1);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scene.json");
        save_scene(&path, &scene).unwrap();
        let text1 = fs::read_to_string(&path).unwrap();
        let loaded = load_scene(&path).unwrap();
        save_scene(&path, &loaded).unwrap();
        let text2 = fs::read_to_string(&path).unwrap();
        assert_eq!(text1, text2);
    }

    #[test]
    fn config_resolution_prefers_flags_over_environment() {
        // single test touches the process environment to avoid races
        std::env::set_var("PPOVM_EPS", "1e-6");
        std::env::set_var("PPOVM_SEED", "42");
        let from_env = RunConfig::resolve(None, None).unwrap();
        assert_eq!(from_env.eps, 1e-6);
        assert_eq!(from_env.seed, 42);
        let from_flags = RunConfig::resolve(Some(1e-8), Some(7)).unwrap();
        assert_eq!(from_flags.eps, 1e-8);
        assert_eq!(from_flags.seed, 7);
        std::env::set_var("PPOVM_EPS", "not-a-number");
        assert!(RunConfig::resolve(None, None).is_err());
        assert!(RunConfig::resolve(Some(1e-9), Some(0)).is_ok());
        std::env::remove_var("PPOVM_EPS");
        std::env::remove_var("PPOVM_SEED");
        let defaults = RunConfig::resolve(None, None).unwrap();
        assert_eq!(defaults, RunConfig::default());
    }

    #[test]
    fn dimension_guard_rejects_oversize() {
        let cfg = RunConfig::default();
        assert!(cfg.check_dims(&[2, 4, 8]).is_ok());
        assert!(matches!(
            cfg.check_dims(&[2, 9]),
            Err(Error::DimensionLimit { .. })
        ));
    }
}
