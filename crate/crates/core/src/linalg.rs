//! Dense complex linear algebra.
//!
//! Thin layer over nalgebra's decompositions fixing the conventions used
//! everywhere else in the crate: rank and kernel cutoffs are relative to the
//! largest singular value, pseudo-inverses vanish on the kernel, and anything
//! that must be Hermitian is symmetrized once it passes the tolerance check.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;
pub type ComplexVector = DVector<Complex64>;

pub const C_ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const C_ONE: Complex64 = Complex64::new(1.0, 0.0);

const SVD_MAX_ITER: usize = 10_000;

/// Spectral cutoffs never loosen past this, whatever `eps` the caller picks.
/// The noise floor of an f64 computation does not move with user preference.
const RANK_EPS: f64 = 1e-9;

/// Shared numerical threshold. `eps` bounds the residuals a check will accept;
/// see [`Tolerance::at`]. Rank and support decisions go through
/// [`Tolerance::cut`] instead, so relaxing `eps` only widens acceptance and
/// never truncates genuine structure.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerance {
    pub eps: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { eps: 1e-9 }
    }
}

impl Tolerance {
    pub fn new(eps: f64) -> Result<Self> {
        if !eps.is_finite() || eps <= 0.0 {
            return Err(Error::InvalidTolerance(eps));
        }
        Ok(Tolerance { eps })
    }

    /// Acceptance threshold at a given scale: `eps * max(1, scale)`.
    pub fn at(&self, scale: f64) -> f64 {
        self.eps * scale.max(1.0)
    }

    /// Spectral cutoff for rank and support decisions at a given scale.
    ///
    /// The absolute floor matters: matrices assembled from well-scaled
    /// operators can consist entirely of rounding noise, and a purely
    /// relative cutoff would mistake that noise for signal.
    pub fn cut(&self, scale: f64) -> f64 {
        self.eps.min(RANK_EPS) * scale.max(1.0)
    }
}

pub fn ensure_finite(a: &ComplexMatrix) -> Result<()> {
    if a.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NotFinite)
    }
}

/// Frobenius inner product `Tr(a^dag b)`.
pub fn hs_dot(a: &ComplexMatrix, b: &ComplexMatrix) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Largest singular value, zero for an empty matrix.
pub fn op_norm(a: &ComplexMatrix) -> f64 {
    match svd(a) {
        Ok(dec) => dec.s.first().copied().unwrap_or(0.0),
        Err(_) => f64::NAN,
    }
}

/// Checks `a` is Hermitian within `tol` and returns the symmetrized
/// `(a + a^dag)/2`; the residual reported on failure is in Frobenius norm.
pub fn hermitize(a: &ComplexMatrix, tol: &Tolerance) -> Result<ComplexMatrix> {
    ensure_finite(a)?;
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            context: "hermitize",
            expected: a.nrows(),
            found: a.ncols(),
        });
    }
    let adj = a.adjoint();
    let residual = (a - &adj).norm();
    if residual > tol.at(a.norm()) {
        return Err(Error::NotHermitian { residual });
    }
    Ok((a + adj).scale(0.5))
}

/// Compact singular value decomposition `a = u diag(s) v^dag`, singular
/// values nonincreasing.
pub struct Svd {
    pub u: ComplexMatrix,
    pub s: Vec<f64>,
    pub v: ComplexMatrix,
}

pub fn svd(a: &ComplexMatrix) -> Result<Svd> {
    ensure_finite(a)?;
    let (rows, cols) = a.shape();
    let k = rows.min(cols);
    if k == 0 {
        return Ok(Svd {
            u: ComplexMatrix::zeros(rows, 0),
            s: Vec::new(),
            v: ComplexMatrix::zeros(cols, 0),
        });
    }
    let dec = a
        .clone()
        .try_svd(true, true, f64::EPSILON, SVD_MAX_ITER)
        .ok_or(Error::DecompositionFailed { rows, cols })?;
    let u = dec.u.expect("u was requested");
    let v = dec.v_t.expect("v was requested").adjoint();
    let s: Vec<f64> = dec.singular_values.iter().copied().collect();
    debug_assert!(s.windows(2).all(|w| w[0] >= w[1]));
    Ok(Svd { u, s, v })
}

/// Number of singular values above the relative cutoff `eps * s_max`.
pub fn matrix_rank(a: &ComplexMatrix, tol: &Tolerance) -> Result<usize> {
    let dec = svd(a)?;
    let smax = dec.s.first().copied().unwrap_or(0.0);
    Ok(dec.s.iter().filter(|&&s| s > tol.cut(smax)).count())
}

/// Orthonormal basis of the kernel. Singular values at most the spectral
/// cutoff count as zero; the zero matrix returns a full basis.
pub fn null_space(a: &ComplexMatrix, tol: &Tolerance) -> Result<Vec<ComplexVector>> {
    let (rows, cols) = a.shape();
    if cols == 0 {
        return Ok(Vec::new());
    }
    // The thin SVD of a wide matrix misses part of the right-singular basis;
    // padding with zero rows makes it square without touching the kernel.
    let dec = if rows >= cols {
        svd(a)?
    } else {
        let mut padded = ComplexMatrix::zeros(cols, cols);
        padded.view_mut((0, 0), (rows, cols)).copy_from(a);
        svd(&padded)?
    };
    let smax = dec.s.first().copied().unwrap_or(0.0);
    let cut = tol.cut(smax);
    let mut basis = Vec::new();
    for (j, &s) in dec.s.iter().enumerate() {
        if s <= cut {
            basis.push(dec.v.column(j).into_owned());
        }
    }
    Ok(basis)
}

/// Moore-Penrose pseudo-inverse, zero on the kernel.
pub fn pinv(a: &ComplexMatrix, tol: &Tolerance) -> Result<ComplexMatrix> {
    let dec = svd(a)?;
    let smax = dec.s.first().copied().unwrap_or(0.0);
    let cut = tol.cut(smax);
    let mut out = ComplexMatrix::zeros(a.ncols(), a.nrows());
    for (j, &s) in dec.s.iter().enumerate() {
        if s > cut {
            let col = dec.v.column(j);
            let row = dec.u.column(j).adjoint();
            out += (col * row).scale(1.0 / s);
        }
    }
    Ok(out)
}

/// Eigendecomposition of a Hermitian matrix. Eigenvalues are nonincreasing
/// and each eigenvector's largest-magnitude entry is rotated real positive,
/// which pins the basis whenever the spectrum is simple.
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Eigenvector columns, same order as `values`.
    pub vectors: ComplexMatrix,
}

pub fn hermitian_eigen(a: &ComplexMatrix, tol: &Tolerance) -> Result<HermitianEigen> {
    let h = hermitize(a, tol)?;
    let n = h.nrows();
    if n == 0 {
        return Ok(HermitianEigen {
            values: Vec::new(),
            vectors: ComplexMatrix::zeros(0, 0),
        });
    }
    let dec = nalgebra::SymmetricEigen::try_new(h, f64::EPSILON, SVD_MAX_ITER)
        .ok_or(Error::DecompositionFailed { rows: n, cols: n })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        dec.eigenvalues[j]
            .partial_cmp(&dec.eigenvalues[i])
            .expect("eigenvalues are finite")
    });
    let values: Vec<f64> = order.iter().map(|&i| dec.eigenvalues[i]).collect();
    let mut vectors = ComplexMatrix::zeros(n, n);
    for (slot, &i) in order.iter().enumerate() {
        let mut col = dec.eigenvectors.column(i).into_owned();
        fix_phase(&mut col);
        vectors.set_column(slot, &col);
    }
    Ok(HermitianEigen { values, vectors })
}

fn fix_phase(col: &mut ComplexVector) {
    let mut best = 0usize;
    let mut best_norm = 0.0f64;
    for (i, z) in col.iter().enumerate() {
        let n = z.norm();
        if n > best_norm {
            best_norm = n;
            best = i;
        }
    }
    if best_norm > 0.0 {
        let phase = col[best] / best_norm;
        let correction = phase.conj();
        for z in col.iter_mut() {
            *z *= correction;
        }
    }
}

fn psd_check(values: &[f64], tol: &Tolerance) -> Result<f64> {
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if let Some(&min) = values.last() {
        if min < -tol.at(scale) {
            return Err(Error::NotPsd {
                min_eigenvalue: min,
            });
        }
    }
    Ok(scale)
}

/// Accepts a matrix whose spectrum stays above `-tol` relative to its
/// largest eigenvalue magnitude.
pub fn psd_matrix(a: &ComplexMatrix, tol: &Tolerance) -> Result<()> {
    let eig = hermitian_eigen(a, tol)?;
    psd_check(&eig.values, tol)?;
    Ok(())
}

/// Square root of a positive semidefinite matrix. Eigenvalues slightly below
/// zero (within tolerance) are clamped; anything worse is an error.
pub fn psd_sqrt(a: &ComplexMatrix, tol: &Tolerance) -> Result<ComplexMatrix> {
    let eig = hermitian_eigen(a, tol)?;
    psd_check(&eig.values, tol)?;
    Ok(rebuild(&eig, |v| v.max(0.0).sqrt()))
}

/// Pseudo-inverse square root: eigenvalues at most the spectral cutoff map
/// to zero, the rest to `1/sqrt`.
pub fn psd_inv_sqrt(a: &ComplexMatrix, tol: &Tolerance) -> Result<ComplexMatrix> {
    let eig = hermitian_eigen(a, tol)?;
    psd_check(&eig.values, tol)?;
    let lmax = eig.values.first().copied().unwrap_or(0.0).max(0.0);
    let cut = tol.cut(lmax);
    Ok(rebuild(&eig, |v| if v > cut { 1.0 / v.sqrt() } else { 0.0 }))
}

/// Orthogonal projection onto the span of eigenvectors with `|lambda|`
/// above the spectral cutoff.
pub fn support_projection(a: &ComplexMatrix, tol: &Tolerance) -> Result<ComplexMatrix> {
    let eig = hermitian_eigen(a, tol)?;
    let scale = eig.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let cut = tol.cut(scale);
    Ok(rebuild(&eig, |v| if v.abs() > cut { 1.0 } else { 0.0 }))
}

fn rebuild(eig: &HermitianEigen, f: impl Fn(f64) -> f64) -> ComplexMatrix {
    let n = eig.vectors.nrows();
    let mut out = ComplexMatrix::zeros(n, n);
    for (j, &v) in eig.values.iter().enumerate() {
        let w = f(v);
        if w != 0.0 {
            let col = eig.vectors.column(j);
            out += (col * col.adjoint()).scale(w);
        }
    }
    out
}

/// Polar decomposition `a = w p` with `p = (a^dag a)^{1/2}` and `w` the
/// partial isometry supported on `supp(p)`, so `w^dag w` is the support
/// projection of `p`. `unique` is false when the kernel leaves completion
/// freedom (rank below the column count).
pub struct Polar {
    pub w: ComplexMatrix,
    pub p: ComplexMatrix,
    pub unique: bool,
}

pub fn polar(a: &ComplexMatrix, tol: &Tolerance) -> Result<Polar> {
    let dec = svd(a)?;
    let smax = dec.s.first().copied().unwrap_or(0.0);
    let cut = tol.cut(smax);
    let mut w = ComplexMatrix::zeros(a.nrows(), a.ncols());
    let mut p = ComplexMatrix::zeros(a.ncols(), a.ncols());
    let mut rank = 0usize;
    for (j, &s) in dec.s.iter().enumerate() {
        let vcol = dec.v.column(j);
        p += (vcol * vcol.adjoint()).scale(s);
        if s > cut {
            w += dec.u.column(j) * vcol.adjoint();
            rank += 1;
        }
    }
    Ok(Polar {
        w,
        p,
        unique: rank == a.ncols(),
    })
}

/// Kronecker product, row-major index convention `(i, j) -> i * dim2 + j`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// Which tensor factor `partial_trace` removes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Factor {
    First,
    Second,
}

/// Partial trace over one factor of `B(C^{d1} (x) C^{d2})`.
pub fn partial_trace(
    a: &ComplexMatrix,
    dims: (usize, usize),
    which: Factor,
) -> Result<ComplexMatrix> {
    let (d1, d2) = dims;
    let d = d1 * d2;
    if a.nrows() != d || a.ncols() != d {
        return Err(Error::DimensionMismatch {
            context: "partial_trace",
            expected: d,
            found: a.nrows(),
        });
    }
    let out = match which {
        Factor::First => ComplexMatrix::from_fn(d2, d2, |j, jp| {
            (0..d1).map(|i| a[(i * d2 + j, i * d2 + jp)]).sum()
        }),
        Factor::Second => ComplexMatrix::from_fn(d1, d1, |i, ip| {
            (0..d2).map(|j| a[(i * d2 + j, ip * d2 + j)]).sum()
        }),
    };
    Ok(out)
}

/// Orthonormal basis for the column span, columns processed in order. Used
/// to turn a projection into an embedding isometry with a predictable basis.
pub fn column_basis(a: &ComplexMatrix, tol: &Tolerance) -> Result<ComplexMatrix> {
    ensure_finite(a)?;
    let mut kept: Vec<ComplexVector> = Vec::new();
    for j in 0..a.ncols() {
        let mut col = a.column(j).into_owned();
        let orig = col.norm();
        // two Gram-Schmidt sweeps keep the basis orthonormal to working precision
        for _ in 0..2 {
            for b in &kept {
                let overlap: Complex64 = b.iter().zip(col.iter()).map(|(x, y)| x.conj() * y).sum();
                col -= b.scale_complex(overlap);
            }
        }
        let remainder = col.norm();
        if remainder > tol.cut(orig) * 10.0 {
            col /= Complex64::new(remainder, 0.0);
            kept.push(col);
        }
    }
    let mut out = ComplexMatrix::zeros(a.nrows(), kept.len());
    for (j, col) in kept.iter().enumerate() {
        out.set_column(j, col);
    }
    Ok(out)
}

pub trait ScaleComplex {
    fn scale_complex(&self, z: Complex64) -> Self;
}

impl ScaleComplex for ComplexVector {
    fn scale_complex(&self, z: Complex64) -> Self {
        self.map(|x| x * z)
    }
}

impl ScaleComplex for ComplexMatrix {
    fn scale_complex(&self, z: Complex64) -> Self {
        self.map(|x| x * z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_matrix, random_unitary, rng_from_seed};

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn diag(entries: &[f64]) -> ComplexMatrix {
        ComplexMatrix::from_fn(entries.len(), entries.len(), |i, j| {
            if i == j {
                Complex64::new(entries[i], 0.0)
            } else {
                C_ZERO
            }
        })
    }

    #[test]
    fn svd_reconstructs() {
        let mut rng = rng_from_seed(7);
        for &(r, c) in &[(3, 3), (4, 2), (2, 5)] {
            let a = random_matrix(&mut rng, r, c);
            let dec = svd(&a).unwrap();
            let k = r.min(c);
            let mut rebuilt = ComplexMatrix::zeros(r, c);
            for j in 0..k {
                rebuilt += (dec.u.column(j) * dec.v.column(j).adjoint()).scale(dec.s[j]);
            }
            assert!((a - rebuilt).norm() < 1e-12);
            assert!(dec.s.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn svd_of_diagonal() {
        let dec = svd(&diag(&[2.0, 1.0])).unwrap();
        assert!((dec.s[0] - 2.0).abs() < 1e-14);
        assert!((dec.s[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn null_space_of_identity_is_empty() {
        let basis = null_space(&ComplexMatrix::identity(2, 2), &tol()).unwrap();
        assert!(basis.is_empty());
    }

    #[test]
    fn null_space_of_zero_is_everything() {
        let basis = null_space(&ComplexMatrix::zeros(2, 2), &tol()).unwrap();
        assert_eq!(basis.len(), 2);
        let g01: Complex64 = basis[0].iter().zip(basis[1].iter()).map(|(x, y)| x.conj() * y).sum();
        assert!(g01.norm() < 1e-12);
    }

    #[test]
    fn null_space_of_ones_matrix() {
        let a = ComplexMatrix::from_element(2, 2, C_ONE);
        let basis = null_space(&a, &tol()).unwrap();
        assert_eq!(basis.len(), 1);
        // the kernel is spanned by (1, -1)/sqrt(2)
        let target = ComplexVector::from_vec(vec![
            Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
            Complex64::new(-std::f64::consts::FRAC_1_SQRT_2, 0.0),
        ]);
        let overlap: Complex64 = target.iter().zip(basis[0].iter()).map(|(x, y)| x.conj() * y).sum();
        assert!((overlap.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn null_space_of_wide_matrix() {
        let a = ComplexMatrix::from_element(1, 3, C_ONE);
        let basis = null_space(&a, &tol()).unwrap();
        assert_eq!(basis.len(), 2);
        for v in &basis {
            assert!((&a * v).norm() < 1e-12);
        }
    }

    #[test]
    fn psd_sqrt_of_diagonal() {
        let s = psd_sqrt(&diag(&[4.0, 0.0]), &tol()).unwrap();
        assert!((s - diag(&[2.0, 0.0])).norm() < 1e-12);
    }

    #[test]
    fn psd_sqrt_squares_back() {
        let mut rng = rng_from_seed(11);
        let a = random_matrix(&mut rng, 4, 4);
        let b = a.adjoint() * &a;
        let s = psd_sqrt(&b, &tol()).unwrap();
        assert!((&s * &s - b).norm() < 1e-10);
    }

    #[test]
    fn psd_sqrt_rejects_non_hermitian() {
        let mut a = ComplexMatrix::zeros(2, 2);
        a[(0, 1)] = C_ONE;
        assert!(matches!(
            psd_sqrt(&a, &tol()),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn psd_sqrt_rejects_negative() {
        let err = psd_sqrt(&diag(&[1.0, -1.0]), &tol()).unwrap_err();
        match err {
            Error::NotPsd { min_eigenvalue } => assert!((min_eigenvalue + 1.0).abs() < 1e-12),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn psd_inv_sqrt_is_pseudo() {
        let s = psd_inv_sqrt(&diag(&[4.0, 0.0]), &tol()).unwrap();
        assert!((s - diag(&[0.5, 0.0])).norm() < 1e-12);
        let id = ComplexMatrix::identity(3, 3);
        assert!((psd_inv_sqrt(&id, &tol()).unwrap() - id).norm() < 1e-12);
    }

    #[test]
    fn support_projection_examples() {
        let p = support_projection(&diag(&[5.0, 0.0, 0.0]), &tol()).unwrap();
        assert!((p - diag(&[1.0, 0.0, 0.0])).norm() < 1e-12);
        let id = ComplexMatrix::identity(2, 2);
        assert!((support_projection(&id, &tol()).unwrap() - id).norm() < 1e-12);
    }

    #[test]
    fn polar_of_unitary() {
        let mut rng = rng_from_seed(13);
        let u = random_unitary(&mut rng, 3);
        let dec = polar(&u, &tol()).unwrap();
        assert!((&dec.w - &u).norm() < 1e-10);
        assert!((&dec.p - ComplexMatrix::identity(3, 3)).norm() < 1e-10);
        assert!(dec.unique);
    }

    #[test]
    fn polar_of_rank_deficient() {
        let dec = polar(&diag(&[2.0, 0.0]), &tol()).unwrap();
        assert!((&dec.w - diag(&[1.0, 0.0])).norm() < 1e-12);
        assert!((&dec.p - diag(&[2.0, 0.0])).norm() < 1e-12);
        assert!(!dec.unique);
        // w^dag w is the support projection of p
        assert!((dec.w.adjoint() * &dec.w - diag(&[1.0, 0.0])).norm() < 1e-12);
    }

    #[test]
    fn polar_reconstructs() {
        let mut rng = rng_from_seed(17);
        let a = random_matrix(&mut rng, 4, 3);
        let dec = polar(&a, &tol()).unwrap();
        assert!((&dec.w * &dec.p - &a).norm() < 1e-10);
        assert!(dec.unique);
    }

    #[test]
    fn kron_of_diagonals() {
        let k = kron(&diag(&[1.0, 2.0]), &ComplexMatrix::identity(2, 2));
        assert!((k - diag(&[1.0, 1.0, 2.0, 2.0])).norm() < 1e-14);
    }

    #[test]
    fn partial_trace_of_identity() {
        let id4 = ComplexMatrix::identity(4, 4);
        let t = partial_trace(&id4, (2, 2), Factor::First).unwrap();
        assert!((t - ComplexMatrix::identity(2, 2).scale(2.0)).norm() < 1e-14);
    }

    #[test]
    fn partial_trace_of_product() {
        let mut rng = rng_from_seed(19);
        let a = random_matrix(&mut rng, 2, 2);
        let rho = &a * a.adjoint();
        let b = random_matrix(&mut rng, 3, 3);
        let tau = &b * b.adjoint();
        let prod = kron(&rho, &tau);
        let reduced = partial_trace(&prod, (2, 3), Factor::Second).unwrap();
        let tr_tau: Complex64 = tau.trace();
        assert!((reduced - rho.scale(tr_tau.re)).norm() < 1e-10);
    }

    #[test]
    fn pinv_of_diagonal() {
        let p = pinv(&diag(&[2.0, 0.0]), &tol()).unwrap();
        assert!((p - diag(&[0.5, 0.0])).norm() < 1e-12);
    }

    #[test]
    fn pinv_left_inverts_tall() {
        let mut rng = rng_from_seed(23);
        let a = random_matrix(&mut rng, 5, 3);
        let p = pinv(&a, &tol()).unwrap();
        assert!((p * &a - ComplexMatrix::identity(3, 3)).norm() < 1e-10);
    }

    #[test]
    fn hermitian_eigen_is_sorted_and_phase_fixed() {
        let mut rng = rng_from_seed(29);
        let a = random_matrix(&mut rng, 4, 4);
        let h = (&a + a.adjoint()).scale(0.5);
        let eig = hermitian_eigen(&h, &tol()).unwrap();
        assert!(eig.values.windows(2).all(|w| w[0] >= w[1]));
        let mut rebuilt = ComplexMatrix::zeros(4, 4);
        for j in 0..4 {
            let col = eig.vectors.column(j);
            rebuilt += (col * col.adjoint()).scale(eig.values[j]);
        }
        assert!((rebuilt - &h).norm() < 1e-10);
        for j in 0..4 {
            let col = eig.vectors.column(j).into_owned();
            let mut best = 0usize;
            let mut best_norm = 0.0;
            for (i, z) in col.iter().enumerate() {
                if z.norm() > best_norm {
                    best_norm = z.norm();
                    best = i;
                }
            }
            assert!(col[best].im.abs() < 1e-12);
            assert!(col[best].re > 0.0);
        }
    }

    #[test]
    fn column_basis_of_projection() {
        let p = diag(&[1.0, 1.0, 0.0]);
        let j = column_basis(&p, &tol()).unwrap();
        assert_eq!(j.shape(), (3, 2));
        assert!((j.adjoint() * &j - ComplexMatrix::identity(2, 2)).norm() < 1e-12);
        assert!((j.column(0).into_owned()[0] - C_ONE).norm() < 1e-12);
        assert!((j.column(1).into_owned()[1] - C_ONE).norm() < 1e-12);
    }

    #[test]
    fn matrix_rank_relative_cutoff() {
        assert_eq!(matrix_rank(&diag(&[1.0, 1e-12]), &tol()).unwrap(), 1);
        assert_eq!(matrix_rank(&diag(&[1.0, 1e-3]), &tol()).unwrap(), 2);
    }
}
