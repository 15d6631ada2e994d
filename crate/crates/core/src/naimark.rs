//! Minimal projective dilations, commutants, and the face machinery built on
//! contraction conjugation.
//!
//! Every POVM is the compression of a projective measurement on a larger
//! space; the minimal dilation stacks the support compressions of the effect
//! square roots. Contractions `X` with `X^dag M_i X <= M_i` form the set that
//! generates the face of a tester's realized measurement, and each such `X`
//! lifts to a commutant contraction of the dilation, which is the certificate
//! format used throughout.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::extremality::{a_equivalent, Equivalence, Subalgebra};
use crate::linalg::{
    hermitian_eigen, hs_dot, kron, null_space, op_norm, pinv, psd_matrix, psd_sqrt, svd,
    ComplexMatrix, ComplexVector, ScaleComplex, Tolerance,
};
use crate::process::{
    extend_ancilla, max_effect_distance, minimal_representation, realize, ProcessPovm,
    RepresentationTriple,
};
use crate::quantum::Povm;
use crate::random::SeededRng;

/// Projective model of a POVM: an isometry `J` into a larger space carrying a
/// PVM `E` with `J^dag E_k J = M_k`, minimal in the sense that the blocks
/// `E_k J` span everything.
#[derive(Clone, Debug)]
pub struct NaimarkDilation {
    pub dilated_dim: usize,
    /// `dilated_dim x space_dim`, satisfies `J^dag J = I`.
    pub isometry: ComplexMatrix,
    /// Projection-valued measurement on the dilated space.
    pub projections: Povm,
    /// Support rank of each effect, in outcome order; blocks are laid out
    /// outcome-major, each in the descending eigenbasis of its effect.
    pub block_dims: Vec<usize>,
}

/// Dilated space `(+)_k supp(M_k)`; block `k` of the isometry is the
/// compression of `M_k^{1/2}` onto its support.
pub fn minimal_naimark(m: &Povm, tol: &Tolerance) -> Result<NaimarkDilation> {
    let d = m.space_dim();
    let mut blocks = Vec::with_capacity(m.n());
    let mut block_dims = Vec::with_capacity(m.n());
    for e in m.effects() {
        let eig = hermitian_eigen(e, tol)?;
        let lmax = eig.values.first().copied().unwrap_or(0.0).max(0.0);
        let r = eig.values.iter().filter(|&&v| v > tol.cut(lmax)).count();
        let mut b = ComplexMatrix::zeros(r, d);
        for row in 0..r {
            let scaled = eig.vectors.column(row).adjoint() * Complex64::new(eig.values[row].sqrt(), 0.0);
            b.row_mut(row).copy_from(&scaled);
        }
        block_dims.push(r);
        blocks.push(b);
    }
    let dilated_dim: usize = block_dims.iter().sum();
    let mut isometry = ComplexMatrix::zeros(dilated_dim, d);
    let mut offset = 0;
    for b in &blocks {
        isometry
            .view_mut((offset, 0), (b.nrows(), d))
            .copy_from(b);
        offset += b.nrows();
    }
    let gram_residual = (isometry.adjoint() * &isometry - ComplexMatrix::identity(d, d)).norm();
    if gram_residual > tol.at(m.n() as f64) {
        return Err(Error::Numeric {
            context: "dilation isometry gram",
            residual: gram_residual,
        });
    }
    let mut projections = Vec::with_capacity(m.n());
    let mut offset = 0;
    for &r in &block_dims {
        let mut e = ComplexMatrix::zeros(dilated_dim, dilated_dim);
        for j in 0..r {
            e[(offset + j, offset + j)] = Complex64::new(1.0, 0.0);
        }
        offset += r;
        projections.push(e);
    }
    Ok(NaimarkDilation {
        dilated_dim,
        isometry,
        projections: Povm::new(projections, tol)?,
        block_dims,
    })
}

/// Orthonormal basis (Hilbert-Schmidt) of `{X: XA = AX for all A}`. Always
/// contains the identity direction.
pub fn commutant(mats: &[ComplexMatrix], tol: &Tolerance) -> Result<Vec<ComplexMatrix>> {
    let Some(first) = mats.first() else {
        return Err(Error::DimensionMismatch {
            context: "commutant of an empty family",
            expected: 1,
            found: 0,
        });
    };
    let d = first.nrows();
    for a in mats {
        if a.nrows() != d || a.ncols() != d {
            return Err(Error::DimensionMismatch {
                context: "commutant",
                expected: d,
                found: a.nrows(),
            });
        }
    }
    let eye = ComplexMatrix::identity(d, d);
    let mut constraint = ComplexMatrix::zeros(mats.len() * d * d, d * d);
    for (t, a) in mats.iter().enumerate() {
        let block = kron(&eye, a) - kron(&a.transpose(), &eye);
        constraint
            .view_mut((t * d * d, 0), (d * d, d * d))
            .copy_from(&block);
    }
    let kernel = null_space(&constraint, tol)?;
    Ok(kernel
        .iter()
        .map(|v| ComplexMatrix::from_column_slice(d, d, v.as_slice()))
        .collect())
}

/// `X^dag M_i X <= M_i` for every effect, up to tolerance on the spectrum.
pub fn lm_membership(m: &Povm, x: &ComplexMatrix, tol: &Tolerance) -> Result<bool> {
    let d = m.space_dim();
    if x.nrows() != d || x.ncols() != d {
        return Err(Error::DimensionMismatch {
            context: "lm_membership",
            expected: d,
            found: x.nrows(),
        });
    }
    for e in m.effects() {
        let residual = e - x.adjoint() * e * x;
        if psd_matrix(&residual, tol).is_err() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Contraction on the dilated space certifying membership: commutes with the
/// dilation projections and satisfies `CJ = JX`.
#[derive(Clone, Debug)]
pub struct LmElementCertificate {
    pub x: ComplexMatrix,
    pub c: ComplexMatrix,
    pub op_norm: f64,
}

/// Solves `CJ = JX` over the span of the dilation commutant, then walks the
/// affine solution space (at most 100 projected subgradient steps) toward
/// smaller operator norm. Minimal dilations pin the solution down uniquely,
/// so the walk exits immediately; the certificate invariants are verified
/// either way.
pub fn lift_to_dilation(
    m: &Povm,
    x: &ComplexMatrix,
    dilation: &NaimarkDilation,
    tol: &Tolerance,
) -> Result<LmElementCertificate> {
    if !lm_membership(m, x, tol)? {
        return Err(Error::NotInLm);
    }
    let d = m.space_dim();
    let dd = dilation.dilated_dim;
    let algebra = commutant(dilation.projections.effects(), tol)?;
    let j = &dilation.isometry;
    let target = j * x;
    let mut system = ComplexMatrix::zeros(dd * d, algebra.len());
    for (k, b) in algebra.iter().enumerate() {
        let col = b * j;
        system
            .column_mut(k)
            .copy_from(&ComplexVector::from_column_slice(col.as_slice()));
    }
    let rhs = ComplexVector::from_column_slice(target.as_slice());
    let mut coeffs = pinv(&system, tol)? * &rhs;
    let free = null_space(&system, tol)?;
    let assemble = |coeffs: &ComplexVector| {
        let mut c = ComplexMatrix::zeros(dd, dd);
        for (k, b) in algebra.iter().enumerate() {
            c += b.scale_complex(coeffs[k]);
        }
        c
    };
    let mut c = assemble(&coeffs);
    if !free.is_empty() {
        let directions: Vec<ComplexMatrix> = free.iter().map(|v| assemble(v)).collect();
        let mut best = c.clone();
        let mut best_norm = op_norm(&best);
        for step in 0..100 {
            let decomp = svd(&c)?;
            if decomp.s.is_empty() {
                break;
            }
            let subgrad = decomp.u.column(0) * decomp.v.column(0).adjoint();
            let rate = 0.5 * best_norm / (step as f64 + 1.0);
            for (dir_mat, dir_vec) in directions.iter().zip(&free) {
                let g = hs_dot(dir_mat, &subgrad);
                coeffs -= dir_vec * (g * Complex64::new(rate, 0.0));
            }
            c = assemble(&coeffs);
            let norm = op_norm(&c);
            if norm < best_norm - tol.cut(1.0) {
                best_norm = norm;
                best = c.clone();
            }
        }
        c = best;
    }
    let constraint_residual = (&c * j - &target).norm();
    if constraint_residual > tol.at(x.norm()) * 10.0 {
        return Err(Error::LiftFailed {
            reason: format!("intertwining residual {constraint_residual:.3e}"),
        });
    }
    let norm = op_norm(&c);
    if norm > 1.0 + tol.at(1.0) * 10.0 {
        return Err(Error::LiftFailed {
            reason: format!("lifted operator norm {norm:.6}"),
        });
    }
    Ok(LmElementCertificate {
        x: x.clone(),
        c,
        op_norm: norm,
    })
}

/// For projective `M` and a commutant contraction `X`, the complement `Y`
/// with `X^dag M_i X + Y^dag M_i Y = M_i` is simply `(I - X^dag X)^{1/2}`.
pub fn lm_complement(m: &Povm, x: &ComplexMatrix, tol: &Tolerance) -> Result<ComplexMatrix> {
    if !m.is_pvm(tol) {
        return Err(Error::NotPvm);
    }
    let d = m.space_dim();
    if x.nrows() != d || x.ncols() != d {
        return Err(Error::DimensionMismatch {
            context: "lm_complement",
            expected: d,
            found: x.nrows(),
        });
    }
    let commute_residual = m
        .effects()
        .iter()
        .map(|e| (e * x - x * e).norm())
        .fold(0.0, f64::max);
    if commute_residual > tol.at(x.norm()) {
        return Err(Error::NotInCommutant {
            residual: commute_residual,
        });
    }
    let norm = op_norm(x);
    if norm > 1.0 + tol.at(1.0) {
        return Err(Error::NotContraction { norm });
    }
    let y = psd_sqrt(
        &(ComplexMatrix::identity(d, d) - x.adjoint() * x),
        tol,
    )?;
    let identity_residual = m
        .effects()
        .iter()
        .map(|e| (x.adjoint() * e * x + y.adjoint() * e * &y - e).norm())
        .fold(0.0, f64::max);
    if identity_residual > tol.at(d as f64) {
        return Err(Error::Numeric {
            context: "complement two-term identity",
            residual: identity_residual,
        });
    }
    Ok(y)
}

/// One generator of the face of `T^dag M T`: the tester realized by
/// `(XT / sqrt(mu), M)` where `mu = Tr T^dag X^dag X T` renormalizes.
/// `X` lives on the ancilla and acts as `I_K (x) X` on the measurement.
pub fn face_sample(
    t_map: &ComplexMatrix,
    m: &Povm,
    x: &ComplexMatrix,
    tol: &Tolerance,
) -> Result<ProcessPovm> {
    let dh0 = t_map.nrows();
    if x.nrows() != dh0 || x.ncols() != dh0 {
        return Err(Error::DimensionMismatch {
            context: "face_sample contraction",
            expected: dh0,
            found: x.nrows(),
        });
    }
    if m.space_dim() % dh0 != 0 {
        return Err(Error::DimensionMismatch {
            context: "face_sample measurement",
            expected: dh0,
            found: m.space_dim(),
        });
    }
    let dk = m.space_dim() / dh0;
    let embedded = kron(&ComplexMatrix::identity(dk, dk), x);
    if !lm_membership(m, &embedded, tol)? {
        return Err(Error::NotInLm);
    }
    let xt = x * t_map;
    let mu = xt.norm_squared();
    if mu <= tol.at(1.0) {
        return Err(Error::ZeroWeight);
    }
    let t = RepresentationTriple::new_pure(dk, xt.scale(1.0 / mu.sqrt()), m.clone(), tol)?;
    realize(&t, tol)
}

/// Verifies the compression identity behind face membership certificates:
/// `Q` a projection commuting with `M` and `Q U^dag N U Q = Q M` on every
/// outcome.
pub fn mface_certificate_check(
    n_povm: &Povm,
    q: &ComplexMatrix,
    u: &ComplexMatrix,
    m: &Povm,
    tol: &Tolerance,
) -> Result<bool> {
    let d = m.space_dim();
    if n_povm.space_dim() != d || q.nrows() != d || u.nrows() != d {
        return Err(Error::DimensionMismatch {
            context: "mface_certificate_check",
            expected: d,
            found: n_povm.space_dim(),
        });
    }
    if n_povm.n() != m.n() {
        return Err(Error::DimensionMismatch {
            context: "mface_certificate_check outcomes",
            expected: m.n(),
            found: n_povm.n(),
        });
    }
    let proj_residual = (q * q - q).norm().max((q.adjoint() - q).norm());
    if proj_residual > tol.at(1.0) {
        return Ok(false);
    }
    let unitary_residual = (u.adjoint() * u - ComplexMatrix::identity(d, d)).norm();
    if unitary_residual > tol.at(1.0) {
        return Ok(false);
    }
    for (ne, me) in n_povm.effects().iter().zip(m.effects()) {
        let compressed = q * u.adjoint() * ne * u * q;
        if (&compressed - q * me).norm() > tol.at(1.0) {
            return Ok(false);
        }
        if (me * q - q * me).norm() > tol.at(1.0) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Outcome of checking a claimed convex decomposition of `T^dag M T` against
/// the prediction that every component measures the same `M`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DecompositionCheck {
    Confirmed,
    Refuted,
    /// Some component's equivalence search was inconclusive; reported
    /// distinctly so callers never mistake it for refutation.
    Unknown,
}

/// Tests whether every term of `sum_i lambda_i F^i = T^dag M T` is, after
/// minimization and re-extension to the original ancilla, a rotated copy of
/// `M` inside `I_K (x) B(H0)`.
pub fn extremal_povm_decomposition_check(
    m: &Povm,
    t_map: &ComplexMatrix,
    decomposition: &[(f64, ProcessPovm)],
    tol: &Tolerance,
    rng: &mut SeededRng,
) -> Result<DecompositionCheck> {
    let dh0 = t_map.nrows();
    let dk = m.space_dim() / dh0;
    let base = realize(
        &RepresentationTriple::new_pure(dk, t_map.clone(), m.clone(), tol)?,
        tol,
    )?;
    let terms: Vec<(f64, &ProcessPovm)> = decomposition.iter().map(|(w, f)| (*w, f)).collect();
    let combined = crate::process::convex_combination(&terms, tol)?;
    let mismatch = max_effect_distance(&base, &combined);
    if mismatch > tol.at(m.n() as f64) * 10.0 {
        return Err(Error::DecompositionMismatch { residual: mismatch });
    }
    let algebra = Subalgebra::ancilla_factor(dk, dh0);
    let mut saw_unknown = false;
    for (_, f) in decomposition {
        let min = minimal_representation(f, tol)?;
        let extended = extend_ancilla(&min, dh0, tol)?;
        match a_equivalent(extended.povm(), m, &algebra, tol, rng)? {
            Equivalence::Yes(_) => {}
            Equivalence::No => return Ok(DecompositionCheck::Refuted),
            Equivalence::Unknown => saw_unknown = true,
        }
    }
    if saw_unknown {
        Ok(DecompositionCheck::Unknown)
    } else {
        Ok(DecompositionCheck::Confirmed)
    }
}
