//! Deterministic random instance generation.
//!
//! Every generator takes the rng explicitly; a fixed seed plus an identical
//! call sequence is the reproducibility contract for the CLI and the self
//! tests. Gaussian draws use Box-Muller so the only entropy source is the
//! uniform stream of the ChaCha generator.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::Result;
use crate::linalg::{ComplexMatrix, ComplexVector, Tolerance};

pub type SeededRng = ChaCha12Rng;

pub fn rng_from_seed(seed: u64) -> SeededRng {
    SeededRng::seed_from_u64(seed)
}

pub fn gauss(rng: &mut SeededRng) -> f64 {
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Standard complex Gaussian entry, unit total variance.
pub fn complex_gauss(rng: &mut SeededRng) -> Complex64 {
    Complex64::new(gauss(rng), gauss(rng)) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn random_matrix(rng: &mut SeededRng, rows: usize, cols: usize) -> ComplexMatrix {
    let data: Vec<Complex64> = (0..rows * cols).map(|_| complex_gauss(rng)).collect();
    ComplexMatrix::from_vec(rows, cols, data)
}

pub fn random_vector(rng: &mut SeededRng, dim: usize) -> ComplexVector {
    ComplexVector::from_vec((0..dim).map(|_| complex_gauss(rng)).collect())
}

pub fn random_unit_vector(rng: &mut SeededRng, dim: usize) -> ComplexVector {
    let mut v = random_vector(rng, dim);
    let n = v.norm();
    if n > 0.0 {
        v /= Complex64::new(n, 0.0);
    }
    v
}

pub fn random_hermitian(rng: &mut SeededRng, dim: usize) -> ComplexMatrix {
    let a = random_matrix(rng, dim, dim);
    (&a + a.adjoint()).scale(0.5)
}

/// Haar-distributed unitary: QR of a Ginibre matrix with the R diagonal
/// phases absorbed into Q.
pub fn random_unitary(rng: &mut SeededRng, dim: usize) -> ComplexMatrix {
    random_isometry(rng, dim, dim)
}

/// Haar-distributed isometry as `cols` orthonormal columns in `C^rows`.
pub fn random_isometry(rng: &mut SeededRng, rows: usize, cols: usize) -> ComplexMatrix {
    assert!(cols <= rows, "isometry needs rows >= cols");
    let a = random_matrix(rng, rows, cols);
    let qr = a.qr();
    let q = qr.q();
    let r = qr.r();
    let mut out = ComplexMatrix::zeros(rows, cols);
    for j in 0..cols {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        out.set_column(j, &q.column(j).map(|z| z * phase));
    }
    out
}

/// Random density matrix of the given rank via a normalized Wishart factor.
pub fn random_density_matrix(rng: &mut SeededRng, dim: usize, rank: usize) -> ComplexMatrix {
    let rank = rank.clamp(1, dim);
    let a = random_matrix(rng, dim, rank);
    let g = &a * a.adjoint();
    let tr: Complex64 = g.trace();
    g.scale(1.0 / tr.re)
}

/// Random projection of the given rank.
pub fn random_projection(rng: &mut SeededRng, dim: usize, rank: usize) -> ComplexMatrix {
    let v = random_isometry(rng, dim, rank.min(dim));
    &v * v.adjoint()
}

mod typed {
    use super::*;
    use crate::linalg::psd_inv_sqrt;
    use crate::process::{realize, RepresentationTriple};
    use crate::quantum::{Channel, DensityMatrix, Povm};

    /// Wishart-style POVM: `G_i = A_i^dag A_i`, effects `S^{-1/2} G_i S^{-1/2}`.
    pub fn random_povm(rng: &mut SeededRng, dim: usize, n: usize, tol: &Tolerance) -> Result<Povm> {
        let gs: Vec<ComplexMatrix> = (0..n)
            .map(|_| {
                let a = random_matrix(rng, dim, dim);
                a.adjoint() * a
            })
            .collect();
        normalize_effects(gs, tol)
    }

    /// POVM with rank-one effects; needs `n >= dim` so the frame can resolve
    /// the identity.
    pub fn random_rank_one_povm(
        rng: &mut SeededRng,
        dim: usize,
        n: usize,
        tol: &Tolerance,
    ) -> Result<Povm> {
        assert!(n >= dim, "rank-one frame needs n >= dim");
        let gs: Vec<ComplexMatrix> = (0..n)
            .map(|_| {
                let v = random_vector(rng, dim);
                let m = ComplexMatrix::from_column_slice(dim, 1, v.as_slice());
                &m * m.adjoint()
            })
            .collect();
        normalize_effects(gs, tol)
    }

    fn normalize_effects(gs: Vec<ComplexMatrix>, tol: &Tolerance) -> Result<Povm> {
        let dim = gs[0].nrows();
        let mut s = ComplexMatrix::zeros(dim, dim);
        for g in &gs {
            s += g;
        }
        let w = psd_inv_sqrt(&s, tol)?;
        let effects: Vec<ComplexMatrix> = gs.iter().map(|g| &w * g * &w).collect();
        Povm::new(effects, tol)
    }

    /// Projective measurement from a Haar basis, ranks spread uniformly.
    pub fn random_pvm(rng: &mut SeededRng, dim: usize, n: usize, tol: &Tolerance) -> Result<Povm> {
        assert!(n >= 1 && n <= dim, "pvm needs 1 <= n <= dim");
        let u = random_unitary(rng, dim);
        let mut ranks = vec![1usize; n];
        for _ in 0..dim - n {
            let idx = rng.random_range(0..n);
            ranks[idx] += 1;
        }
        let mut effects = Vec::with_capacity(n);
        let mut offset = 0usize;
        for &r in &ranks {
            let block = u.columns(offset, r).into_owned();
            effects.push(&block * block.adjoint());
            offset += r;
        }
        Povm::new(effects, tol)
    }

    /// Channel from a truncated Haar isometry with `kraus_count` environment
    /// dimensions.
    pub fn random_channel(
        rng: &mut SeededRng,
        in_dim: usize,
        out_dim: usize,
        kraus_count: usize,
        tol: &Tolerance,
    ) -> Result<Channel> {
        let k = kraus_count.max(1);
        let v = random_isometry(rng, out_dim * k, in_dim);
        let kraus: Vec<ComplexMatrix> = (0..k)
            .map(|e| ComplexMatrix::from_fn(out_dim, in_dim, |o, i| v[(o * k + e, i)]))
            .collect();
        Channel::new(kraus, tol)
    }

    /// Pure-input representation triple: Gaussian surjective `T` normalized to
    /// unit trace square, Wishart POVM on the composite.
    pub fn random_triple(
        rng: &mut SeededRng,
        dk: usize,
        dh: usize,
        dh0: usize,
        n: usize,
        tol: &Tolerance,
    ) -> Result<RepresentationTriple> {
        assert!(dh0 <= dh, "input map cannot be surjective with dh0 > dh");
        let t = random_input_map(rng, dh, dh0);
        let m = random_povm(rng, dk * dh0, n, tol)?;
        RepresentationTriple::new_pure(dk, t, m, tol)
    }

    /// Mixed-input representation triple with a full-rank ancilla state.
    pub fn random_mixed_triple(
        rng: &mut SeededRng,
        dk: usize,
        dh: usize,
        dh0: usize,
        n: usize,
        tol: &Tolerance,
    ) -> Result<RepresentationTriple> {
        let rho = random_density_matrix(rng, dh * dh0, dh * dh0);
        let rho = DensityMatrix::new(rho, tol)?;
        let m = random_povm(rng, dk * dh0, n, tol)?;
        RepresentationTriple::new_mixed(dh, rho, m, tol)
    }

    /// Normalized input map `T: H -> H0` with full row rank (almost surely).
    pub fn random_input_map(rng: &mut SeededRng, dh: usize, dh0: usize) -> ComplexMatrix {
        let t = random_matrix(rng, dh0, dh);
        let n = t.norm();
        t.scale(1.0 / n)
    }

    /// Tester sampled by realizing a random pure triple.
    pub fn random_tester(
        rng: &mut SeededRng,
        dk: usize,
        dh: usize,
        dh0: usize,
        n: usize,
        tol: &Tolerance,
    ) -> Result<crate::process::ProcessPovm> {
        let t = random_triple(rng, dk, dh, dh0, n, tol)?;
        realize(&t, tol)
    }

    /// Subalgebra generated by one or two random Hermitians (plus the unit).
    pub fn random_subalgebra(
        rng: &mut SeededRng,
        dim: usize,
        generators: usize,
        tol: &Tolerance,
    ) -> Result<crate::extremality::Subalgebra> {
        let gens: Vec<ComplexMatrix> = (0..generators.clamp(1, 2))
            .map(|_| random_hermitian(rng, dim))
            .collect();
        crate::extremality::Subalgebra::from_basis(&gens, tol)
    }
}

pub use typed::*;
