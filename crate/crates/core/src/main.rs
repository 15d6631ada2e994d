use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use num_complex::Complex64;
use serde::Serialize;

use ppovm::error::{Error, Result};
use ppovm::extremality::{certify_process_extremal, Subalgebra, Verdict};
use ppovm::io::{
    self, channel_scene, load_matrix, load_scene, povm_scene, process_povm_scene, save_scene,
    scene_povm, scene_process_povm, scene_subalgebra, scene_to_string, scene_triple,
    subalgebra_scene, triple_scene, MatrixDocument, RunConfig, SceneDocument, SceneKind,
};
use ppovm::linalg::{hermitian_eigen, kron, partial_trace, ComplexMatrix, Factor, Tolerance};
use ppovm::naimark::{commutant, face_sample, minimal_naimark};
use ppovm::process::{
    convex_combination, max_effect_distance, minimal_representation, realize,
};
use ppovm::random::{
    random_channel, random_povm, random_subalgebra, random_tester, random_triple, rng_from_seed,
};
use ppovm::selftest;

#[derive(Parser)]
#[command(
    name = "ppovm",
    version,
    about = "Build, normalize and certify measurements on quantum channels"
)]
struct Cli {
    /// Numerical tolerance scale (default 1e-9, env PPOVM_EPS).
    #[arg(long, global = true)]
    eps: Option<f64>,
    /// Seed for randomized steps (default 0, env PPOVM_SEED).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write the output document here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check every structural invariant of a scene, reporting residuals.
    Validate { file: PathBuf },
    /// Turn a representation triple into the process measurement it carries.
    Realize { file: PathBuf },
    /// Compute the minimal representation triple of a process measurement.
    Minimize { file: PathBuf },
    /// Decide extremality; any witness in the output is re-verified first.
    Certify { file: PathBuf },
    /// Minimal orthogonal dilation of a measurement.
    Naimark { file: PathBuf },
    /// Orthonormal basis of the commutant of a scene's operators.
    Commutant { file: PathBuf },
    /// Compress a tester onto the face selected by a contraction.
    FaceSample {
        /// Measurement scene on the composite space.
        povm: PathBuf,
        /// Input map matrix document.
        t_map: PathBuf,
        /// Contraction matrix document on the ancilla.
        x: PathBuf,
    },
    /// Draw a reproducible random scene of the given kind.
    Random {
        /// One of: povm, process_povm, triple, channel, subalgebra.
        kind: String,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        dk: Option<usize>,
        #[arg(long)]
        dh: Option<usize>,
        #[arg(long)]
        dh0: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        kraus: Option<usize>,
        #[arg(long)]
        generators: Option<usize>,
    },
    /// Run the seeded verification suites.
    Selftest,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    let cfg = RunConfig::resolve(cli.eps, cli.seed)?;
    let out = cli.out.as_deref();
    match cli.command {
        Command::Validate { file } => cmd_validate(&cfg, &file),
        Command::Realize { file } => cmd_realize(&cfg, &file, out),
        Command::Minimize { file } => cmd_minimize(&cfg, &file, out),
        Command::Certify { file } => cmd_certify(&cfg, &file, out),
        Command::Naimark { file } => cmd_naimark(&cfg, &file, out),
        Command::Commutant { file } => cmd_commutant(&cfg, &file, out),
        Command::FaceSample { povm, t_map, x } => cmd_face_sample(&cfg, &povm, &t_map, &x, out),
        Command::Random {
            kind,
            dim,
            dk,
            dh,
            dh0,
            n,
            kraus,
            generators,
        } => cmd_random(
            &cfg, &kind, dim, dk, dh, dh0, n, kraus, generators, out,
        ),
        Command::Selftest => cmd_selftest(&cfg, out),
    }
}

fn emit_scene(out: Option<&Path>, scene: &SceneDocument) -> Result<()> {
    match out {
        Some(path) => save_scene(path, scene),
        None => {
            print!("{}", scene_to_string(scene)?);
            Ok(())
        }
    }
}

fn emit_json<T: Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Parse(format!("serialize: {e}")))?;
    text.push('\n');
    match out {
        Some(path) => {
            std::fs::write(path, text)?;
            Ok(())
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn guard_scene_dims(cfg: &RunConfig, scene: &SceneDocument) -> Result<()> {
    cfg.check_dims(&[scene.dims.dk, scene.dims.dh, scene.dims.dh0])
}

struct CheckLine {
    name: &'static str,
    residual: f64,
    pass: bool,
}

fn residual_check(name: &'static str, residual: f64, threshold: f64) -> CheckLine {
    CheckLine {
        name,
        residual,
        pass: residual <= threshold,
    }
}

fn min_eigenvalue(m: &ComplexMatrix, tol: &Tolerance) -> Result<f64> {
    let h = (m + m.adjoint()).map(|z| z * 0.5);
    let eig = hermitian_eigen(&h, tol)?;
    Ok(eig.values.last().copied().unwrap_or(0.0))
}

fn effect_checks(
    effects: &[ComplexMatrix],
    sum_target: &ComplexMatrix,
    tol: &Tolerance,
) -> Result<Vec<CheckLine>> {
    let d = sum_target.nrows();
    let mut herm = 0.0f64;
    let mut min_eig = f64::INFINITY;
    let mut sum = ComplexMatrix::zeros(d, d);
    for e in effects {
        herm = herm.max((e.adjoint() - e).norm());
        min_eig = min_eig.min(min_eigenvalue(e, tol)?);
        sum += e;
    }
    Ok(vec![
        residual_check("effects-hermitian", herm, tol.at(1.0)),
        CheckLine {
            name: "effects-positive",
            residual: min_eig,
            pass: min_eig >= -tol.at(1.0),
        },
        residual_check("completeness", (sum - sum_target).norm(), tol.at(d as f64)),
    ])
}

fn cmd_validate(cfg: &RunConfig, file: &Path) -> Result<u8> {
    let tol = cfg.tolerance();
    let scene = load_scene(file)?;
    guard_scene_dims(cfg, &scene)?;
    let mut lines: Vec<CheckLine> = Vec::new();
    match scene.kind {
        SceneKind::Povm => {
            let payload: io::PovmPayload =
                serde_json::from_value(scene.payload.clone())
                    .map_err(|e| Error::Parse(format!("povm payload: {e}")))?;
            let effects = payload
                .effects
                .iter()
                .map(|d| d.to_matrix())
                .collect::<Result<Vec<_>>>()?;
            let d = scene.dims.dk * scene.dims.dh0;
            lines.extend(effect_checks(&effects, &ComplexMatrix::identity(d, d), &tol)?);
        }
        SceneKind::ProcessPovm => {
            let payload: io::ProcessPovmPayload =
                serde_json::from_value(scene.payload.clone())
                    .map_err(|e| Error::Parse(format!("process_povm payload: {e}")))?;
            let effects = payload
                .effects
                .iter()
                .map(|d| d.to_matrix())
                .collect::<Result<Vec<_>>>()?;
            let (dk, dh) = (scene.dims.dk, scene.dims.dh);
            let d = dk * dh;
            let mut herm = 0.0f64;
            let mut min_eig = f64::INFINITY;
            let mut sum = ComplexMatrix::zeros(d, d);
            for e in &effects {
                herm = herm.max((e.adjoint() - e).norm());
                min_eig = min_eig.min(min_eigenvalue(e, &tol)?);
                sum += e;
            }
            let sigma = partial_trace(&sum, (dk, dh), Factor::First)?
                .map(|z| z / Complex64::new(dk as f64, 0.0));
            let marginal = (&sum - kron(&ComplexMatrix::identity(dk, dk), &sigma)).norm();
            let trace = (sigma.trace().re - 1.0).abs();
            let sigma_min = min_eigenvalue(&sigma, &tol)?;
            lines.push(residual_check("effects-hermitian", herm, tol.at(1.0)));
            lines.push(CheckLine {
                name: "effects-positive",
                residual: min_eig,
                pass: min_eig >= -tol.at(1.0),
            });
            lines.push(residual_check("marginal-structure", marginal, tol.at(d as f64)));
            lines.push(residual_check("marginal-trace", trace, tol.at(1.0)));
            lines.push(CheckLine {
                name: "marginal-positive",
                residual: sigma_min,
                pass: sigma_min >= -tol.at(1.0),
            });
        }
        SceneKind::Triple => {
            let payload: io::TriplePayload =
                serde_json::from_value(scene.payload.clone())
                    .map_err(|e| Error::Parse(format!("triple payload: {e}")))?;
            let effects = payload
                .effects
                .iter()
                .map(|d| d.to_matrix())
                .collect::<Result<Vec<_>>>()?;
            let d = scene.dims.dk * scene.dims.dh0;
            lines.extend(effect_checks(&effects, &ComplexMatrix::identity(d, d), &tol)?);
            let input = payload.input.to_matrix()?;
            match payload.input_kind {
                io::InputKind::Pure => {
                    let norm = ((input.adjoint() * &input).trace().re - 1.0).abs();
                    lines.push(residual_check("input-normalized", norm, tol.at(1.0)));
                }
                io::InputKind::Mixed => {
                    let herm = (input.adjoint() - &input).norm();
                    let trace = (input.trace().re - 1.0).abs();
                    let min_eig = min_eigenvalue(&input, &tol)?;
                    lines.push(residual_check("input-hermitian", herm, tol.at(1.0)));
                    lines.push(residual_check("input-trace", trace, tol.at(1.0)));
                    lines.push(CheckLine {
                        name: "input-positive",
                        residual: min_eig,
                        pass: min_eig >= -tol.at(1.0),
                    });
                }
            }
        }
        SceneKind::Channel => {
            let payload: io::ChannelPayload =
                serde_json::from_value(scene.payload.clone())
                    .map_err(|e| Error::Parse(format!("channel payload: {e}")))?;
            let kraus = payload
                .kraus
                .iter()
                .map(|d| d.to_matrix())
                .collect::<Result<Vec<_>>>()?;
            let din = scene.dims.dh;
            let mut sum = ComplexMatrix::zeros(din, din);
            for k in &kraus {
                sum += k.adjoint() * k;
            }
            let resid = (sum - ComplexMatrix::identity(din, din)).norm();
            lines.push(residual_check("trace-preserving", resid, tol.at(din as f64)));
        }
        SceneKind::Subalgebra => {
            let payload: io::SubalgebraPayload =
                serde_json::from_value(scene.payload.clone())
                    .map_err(|e| Error::Parse(format!("subalgebra payload: {e}")))?;
            let basis = payload
                .basis
                .iter()
                .map(|d| d.to_matrix())
                .collect::<Result<Vec<_>>>()?;
            let a = Subalgebra::from_basis(&basis, &tol)?;
            let closed = a.dim() == basis.len();
            lines.push(CheckLine {
                name: "multiplicatively-closed",
                residual: (a.dim() as f64) - (basis.len() as f64),
                pass: closed,
            });
            let d = a.ambient_dim();
            let unit = a.membership_residual(&ComplexMatrix::identity(d, d));
            lines.push(residual_check("contains-unit", unit, tol.at(d as f64)));
        }
    }
    let mut all_pass = true;
    for line in &lines {
        all_pass &= line.pass;
        println!(
            "check {}: {} (residual {:.3e})",
            line.name,
            if line.pass { "pass" } else { "FAIL" },
            line.residual
        );
    }
    Ok(if all_pass { 0 } else { 1 })
}

fn cmd_realize(cfg: &RunConfig, file: &Path, out: Option<&Path>) -> Result<u8> {
    let tol = cfg.tolerance();
    let scene = load_scene(file)?;
    guard_scene_dims(cfg, &scene)?;
    let triple = scene_triple(&scene, &tol)?;
    let f = realize(&triple, &tol)?;
    eprintln!(
        "realized tester: {} outcomes on {}x{}",
        f.n(),
        f.dk(),
        f.dh()
    );
    emit_scene(out, &process_povm_scene(&f))?;
    Ok(0)
}

fn cmd_minimize(cfg: &RunConfig, file: &Path, out: Option<&Path>) -> Result<u8> {
    let tol = cfg.tolerance();
    let scene = load_scene(file)?;
    guard_scene_dims(cfg, &scene)?;
    let f = scene_process_povm(&scene, &tol)?;
    let min = minimal_representation(&f, &tol)?;
    let back = realize(&min, &tol)?;
    eprintln!(
        "minimal ancilla dimension {}, round-trip residual {:.3e}",
        min.dh0(),
        max_effect_distance(&f, &back)
    );
    emit_scene(out, &triple_scene(&min))?;
    Ok(0)
}

#[derive(Serialize)]
struct WitnessOutput {
    lambda: f64,
    f1: SceneDocument,
    f2: SceneDocument,
}

#[derive(Serialize)]
struct CertifyOutput {
    verdict: &'static str,
    purity_dim: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness: Option<WitnessOutput>,
}

fn cmd_certify(cfg: &RunConfig, file: &Path, out: Option<&Path>) -> Result<u8> {
    let tol = cfg.tolerance();
    let scene = load_scene(file)?;
    guard_scene_dims(cfg, &scene)?;
    let f = scene_process_povm(&scene, &tol)?;
    let cert = certify_process_extremal(&f, &tol)?;
    let witness = match &cert.witness {
        Some(w) => {
            let rebuilt =
                convex_combination(&[(w.lambda, &w.f1), (1.0 - w.lambda, &w.f2)], &tol)?;
            let residual = max_effect_distance(&rebuilt, &f);
            let gap = max_effect_distance(&w.f1, &w.f2);
            if residual > tol.at(f.n() as f64) * 10.0 || gap <= tol.at(1.0) * 1e3 {
                return Err(Error::Numeric {
                    context: "witness re-verification",
                    residual,
                });
            }
            Some(WitnessOutput {
                lambda: w.lambda,
                f1: process_povm_scene(&w.f1),
                f2: process_povm_scene(&w.f2),
            })
        }
        None => None,
    };
    let verdict = match cert.verdict {
        Verdict::Extremal => "extremal",
        Verdict::NotExtremal => "not_extremal",
        Verdict::Unknown => "unknown",
    };
    emit_json(
        out,
        &CertifyOutput {
            verdict,
            purity_dim: cert.purity_dim,
            witness,
        },
    )?;
    if cert.verdict == Verdict::Unknown {
        eprintln!(
            "no verdict: purity dimension {} but no splitting direction survived \
             verification",
            cert.purity_dim
        );
        return Ok(3);
    }
    Ok(0)
}

#[derive(Serialize)]
struct NaimarkOutput {
    dilated_dim: usize,
    block_dims: Vec<usize>,
    isometry: MatrixDocument,
    projections: Vec<MatrixDocument>,
}

fn cmd_naimark(cfg: &RunConfig, file: &Path, out: Option<&Path>) -> Result<u8> {
    let tol = cfg.tolerance();
    let scene = load_scene(file)?;
    guard_scene_dims(cfg, &scene)?;
    let m = scene_povm(&scene, &tol)?;
    let dil = minimal_naimark(&m, &tol)?;
    emit_json(
        out,
        &NaimarkOutput {
            dilated_dim: dil.dilated_dim,
            block_dims: dil.block_dims.clone(),
            isometry: MatrixDocument::from_matrix(&dil.isometry),
            projections: dil
                .projections
                .effects()
                .iter()
                .map(MatrixDocument::from_matrix)
                .collect(),
        },
    )?;
    Ok(0)
}

fn cmd_commutant(cfg: &RunConfig, file: &Path, out: Option<&Path>) -> Result<u8> {
    let tol = cfg.tolerance();
    let scene = load_scene(file)?;
    guard_scene_dims(cfg, &scene)?;
    let mats: Vec<ComplexMatrix> = match scene.kind {
        SceneKind::Povm => scene_povm(&scene, &tol)?.effects().to_vec(),
        SceneKind::ProcessPovm => scene_process_povm(&scene, &tol)?.effects().to_vec(),
        SceneKind::Subalgebra => scene_subalgebra(&scene, &tol)?.basis().to_vec(),
        _ => {
            return Err(Error::Parse(format!(
                "commutant expects a povm, process_povm or subalgebra scene, found {}",
                scene.kind.as_str()
            )))
        }
    };
    let basis = commutant(&mats, &tol)?;
    let a = Subalgebra::from_basis(&basis, &tol)?;
    emit_scene(out, &subalgebra_scene(&a))?;
    Ok(0)
}

fn cmd_face_sample(
    cfg: &RunConfig,
    povm: &Path,
    t_map: &Path,
    x: &Path,
    out: Option<&Path>,
) -> Result<u8> {
    let tol = cfg.tolerance();
    let scene = load_scene(povm)?;
    guard_scene_dims(cfg, &scene)?;
    let m = scene_povm(&scene, &tol)?;
    let t = load_matrix(t_map)?;
    let xm = load_matrix(x)?;
    let f = face_sample(&t, &m, &xm, &tol)?;
    emit_scene(out, &process_povm_scene(&f))?;
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn cmd_random(
    cfg: &RunConfig,
    kind: &str,
    dim: Option<usize>,
    dk: Option<usize>,
    dh: Option<usize>,
    dh0: Option<usize>,
    n: Option<usize>,
    kraus: Option<usize>,
    generators: Option<usize>,
    out: Option<&Path>,
) -> Result<u8> {
    let tol = cfg.tolerance();
    let mut rng = rng_from_seed(cfg.seed);
    let scene = match kind {
        "povm" => {
            let d = dim.unwrap_or(2);
            cfg.check_dims(&[d])?;
            povm_scene(&random_povm(&mut rng, d, n.unwrap_or(2), &tol)?, 1)
        }
        "process_povm" => {
            let (dk, dh, dh0) = (dk.unwrap_or(2), dh.unwrap_or(2), dh0.unwrap_or(2));
            cfg.check_dims(&[dk, dh, dh0])?;
            let f = random_tester(&mut rng, dk, dh, dh0.min(dh), n.unwrap_or(2), &tol)?;
            process_povm_scene(&f)
        }
        "triple" => {
            let (dk, dh, dh0) = (dk.unwrap_or(2), dh.unwrap_or(2), dh0.unwrap_or(2));
            cfg.check_dims(&[dk, dh, dh0])?;
            triple_scene(&random_triple(
                &mut rng,
                dk,
                dh,
                dh0.min(dh),
                n.unwrap_or(2),
                &tol,
            )?)
        }
        "channel" => {
            let (din, dout) = (dh.unwrap_or(2), dk.unwrap_or(2));
            cfg.check_dims(&[din, dout])?;
            channel_scene(&random_channel(&mut rng, din, dout, kraus.unwrap_or(2), &tol)?)
        }
        "subalgebra" => {
            let d = dim.unwrap_or(2);
            cfg.check_dims(&[d])?;
            subalgebra_scene(&random_subalgebra(&mut rng, d, generators.unwrap_or(1), &tol)?)
        }
        other => {
            return Err(Error::Parse(format!(
                "unknown random kind {other:?}; expected povm, process_povm, triple, \
                 channel or subalgebra"
            )))
        }
    };
    emit_scene(out, &scene)?;
    Ok(0)
}

fn cmd_selftest(cfg: &RunConfig, out: Option<&Path>) -> Result<u8> {
    let reports = selftest::run_all(cfg);
    print!("{}", selftest::render(&reports));
    if selftest::all_ok(&reports) {
        return Ok(0);
    }
    let path = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("selftest_failure.json"));
    if let Some(repro) = selftest::first_repro(&reports) {
        save_scene(&path, repro)?;
        eprintln!("failing instance written to {}", path.display());
    }
    Ok(1)
}
