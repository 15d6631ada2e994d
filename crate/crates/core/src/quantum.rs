//! States, POVMs, channels, and the maps between them.
//!
//! Conventions, fixed once for the whole crate: the unnormalized maximally
//! entangled projector is `psi_H = sum_ij |i><j| (x) |i><j|`, the Choi matrix
//! of `Phi: B(H) -> B(K)` is `C(Phi) = (Phi (x) id)(psi_H)` on `K (x) H`
//! (output factor first), and the vectorization of `T: H -> H0` is
//! `|T>> = sum_i |i> (x) T|i>` in `H (x) H0` (input factor first).

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{
    self, hermitian_eigen, hermitize, kron, partial_trace, svd, ComplexMatrix, ComplexVector,
    Factor, Tolerance, C_ZERO,
};

/// Positive unit-trace operator.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    mat: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(mat: ComplexMatrix, tol: &Tolerance) -> Result<Self> {
        let mat = hermitize(&mat, tol)?;
        let eig = hermitian_eigen(&mat, tol)?;
        if let Some(&min) = eig.values.last() {
            let scale = eig.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if min < -tol.at(scale) {
                return Err(Error::InvalidState {
                    reason: format!("negative eigenvalue {min:.3e}"),
                });
            }
        }
        let tr: Complex64 = mat.trace();
        if (tr.re - 1.0).abs() > tol.at(1.0) || tr.im.abs() > tol.at(1.0) {
            return Err(Error::InvalidState {
                reason: format!("trace {} is not 1", tr.re),
            });
        }
        Ok(DensityMatrix { mat })
    }

    pub fn from_state_vector(v: &ComplexVector, tol: &Tolerance) -> Result<Self> {
        let m = ComplexMatrix::from_column_slice(v.len(), 1, v.as_slice());
        DensityMatrix::new(&m * m.adjoint(), tol)
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn mat(&self) -> &ComplexMatrix {
        &self.mat
    }
}

/// Finite POVM: positive effects summing to the identity.
#[derive(Clone, Debug)]
pub struct Povm {
    effects: Vec<ComplexMatrix>,
}

impl Povm {
    pub fn new(effects: Vec<ComplexMatrix>, tol: &Tolerance) -> Result<Self> {
        if effects.is_empty() {
            return Err(Error::DimensionMismatch {
                context: "povm effects",
                expected: 1,
                found: 0,
            });
        }
        let d = effects[0].nrows();
        let mut symmetrized = Vec::with_capacity(effects.len());
        let mut sum = ComplexMatrix::zeros(d, d);
        for e in &effects {
            if e.nrows() != d || e.ncols() != d {
                return Err(Error::DimensionMismatch {
                    context: "povm effects",
                    expected: d,
                    found: e.nrows(),
                });
            }
            let h = hermitize(e, tol)?;
            let eig = hermitian_eigen(&h, tol)?;
            if let Some(&min) = eig.values.last() {
                let scale = eig.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                if min < -tol.at(scale) {
                    return Err(Error::NotPsd {
                        min_eigenvalue: min,
                    });
                }
            }
            sum += &h;
            symmetrized.push(h);
        }
        let residual = (&sum - ComplexMatrix::identity(d, d)).norm();
        if residual > tol.at(effects.len() as f64) {
            return Err(Error::NotNormalized { residual });
        }
        Ok(Povm {
            effects: symmetrized,
        })
    }

    pub fn n(&self) -> usize {
        self.effects.len()
    }

    pub fn space_dim(&self) -> usize {
        self.effects[0].nrows()
    }

    pub fn effects(&self) -> &[ComplexMatrix] {
        &self.effects
    }

    pub fn effect(&self, i: usize) -> &ComplexMatrix {
        &self.effects[i]
    }

    /// True when every effect is a projection within tolerance.
    pub fn is_pvm(&self, tol: &Tolerance) -> bool {
        self.effects
            .iter()
            .all(|e| (e * e - e).norm() <= tol.at(1.0))
    }
}

/// Completely positive trace-preserving map in Kraus form.
#[derive(Clone, Debug)]
pub struct Channel {
    in_dim: usize,
    out_dim: usize,
    kraus: Vec<ComplexMatrix>,
}

impl Channel {
    pub fn new(kraus: Vec<ComplexMatrix>, tol: &Tolerance) -> Result<Self> {
        if kraus.is_empty() {
            return Err(Error::DimensionMismatch {
                context: "kraus operators",
                expected: 1,
                found: 0,
            });
        }
        let (out_dim, in_dim) = kraus[0].shape();
        let mut acc = ComplexMatrix::zeros(in_dim, in_dim);
        for k in &kraus {
            if k.shape() != (out_dim, in_dim) {
                return Err(Error::DimensionMismatch {
                    context: "kraus operators",
                    expected: out_dim,
                    found: k.nrows(),
                });
            }
            linalg::ensure_finite(k)?;
            acc += k.adjoint() * k;
        }
        let residual = (&acc - ComplexMatrix::identity(in_dim, in_dim)).norm();
        if residual > tol.at(kraus.len() as f64) {
            return Err(Error::NotTracePreserving { residual });
        }
        Ok(Channel {
            in_dim,
            out_dim,
            kraus,
        })
    }

    pub fn identity(dim: usize) -> Self {
        Channel {
            in_dim: dim,
            out_dim: dim,
            kraus: vec![ComplexMatrix::identity(dim, dim)],
        }
    }

    pub fn from_unitary(u: ComplexMatrix, tol: &Tolerance) -> Result<Self> {
        Channel::new(vec![u], tol)
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    /// `sum_k K rho K^dag` on a raw operator.
    pub fn apply(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        if rho.nrows() != self.in_dim || rho.ncols() != self.in_dim {
            return Err(Error::DimensionMismatch {
                context: "apply_channel",
                expected: self.in_dim,
                found: rho.nrows(),
            });
        }
        let mut out = ComplexMatrix::zeros(self.out_dim, self.out_dim);
        for k in &self.kraus {
            out += k * rho * k.adjoint();
        }
        Ok(out)
    }
}

/// Choi matrix on `K (x) H`, output factor first.
#[derive(Clone, Debug)]
pub struct ChoiMatrix {
    pub in_dim: usize,
    pub out_dim: usize,
    pub mat: ComplexMatrix,
}

/// `C(Phi) = sum_k |K_k>><<K_k|` where the Choi vectorization of a Kraus
/// operator is its row-major flattening.
pub fn choi(phi: &Channel) -> ChoiMatrix {
    let d = phi.out_dim * phi.in_dim;
    let mut mat = ComplexMatrix::zeros(d, d);
    for k in phi.kraus() {
        let w = choi_vec(k);
        let col = ComplexMatrix::from_column_slice(d, 1, w.as_slice());
        mat += &col * col.adjoint();
    }
    ChoiMatrix {
        in_dim: phi.in_dim,
        out_dim: phi.out_dim,
        mat,
    }
}

fn choi_vec(k: &ComplexMatrix) -> ComplexVector {
    let (out_dim, in_dim) = k.shape();
    ComplexVector::from_fn(out_dim * in_dim, |idx, _| {
        k[(idx / in_dim, idx % in_dim)]
    })
}

/// Recovers a Kraus form from a Choi matrix; the number of Kraus operators
/// equals the Choi rank at the relative cutoff.
pub fn channel_from_choi(c: &ChoiMatrix, tol: &Tolerance) -> Result<Channel> {
    let d = c.out_dim * c.in_dim;
    if c.mat.nrows() != d || c.mat.ncols() != d {
        return Err(Error::DimensionMismatch {
            context: "choi matrix",
            expected: d,
            found: c.mat.nrows(),
        });
    }
    let eig = hermitian_eigen(&c.mat, tol)?;
    let scale = eig.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if let Some(&min) = eig.values.last() {
        if min < -tol.at(scale) {
            return Err(Error::NotPsd {
                min_eigenvalue: min,
            });
        }
    }
    let marginal = partial_trace(&c.mat, (c.out_dim, c.in_dim), Factor::First)?;
    let residual = (&marginal - ComplexMatrix::identity(c.in_dim, c.in_dim)).norm();
    if residual > tol.at(c.in_dim as f64) {
        return Err(Error::NotTracePreserving { residual });
    }
    let lmax = eig.values.first().copied().unwrap_or(0.0).max(0.0);
    let cut = tol.cut(lmax);
    let mut kraus = Vec::new();
    for (j, &lambda) in eig.values.iter().enumerate() {
        if lambda > cut {
            let col = eig.vectors.column(j);
            let root = lambda.sqrt();
            kraus.push(ComplexMatrix::from_fn(c.out_dim, c.in_dim, |o, i| {
                col[o * c.in_dim + i] * root
            }));
        }
    }
    Channel::new(kraus, tol)
}

/// `|T>> = sum_i |i> (x) T|i>`, so `v[i * dh0 + a] = T[a, i]`.
pub fn vectorize(t: &ComplexMatrix) -> ComplexVector {
    let (dh0, dh) = t.shape();
    ComplexVector::from_fn(dh * dh0, |idx, _| t[(idx % dh0, idx / dh0)])
}

pub fn devectorize(v: &ComplexVector, dims: (usize, usize)) -> Result<ComplexMatrix> {
    let (dh, dh0) = dims;
    if v.len() != dh * dh0 {
        return Err(Error::DimensionMismatch {
            context: "devectorize",
            expected: dh * dh0,
            found: v.len(),
        });
    }
    Ok(ComplexMatrix::from_fn(dh0, dh, |a, i| v[i * dh0 + a]))
}

/// Schmidt decomposition of a vector in `C^{d1} (x) C^{d2}`:
/// `v = sum_r c_r left_r (x) right_r` with positive nonincreasing
/// coefficients; terms below the relative cutoff are dropped.
pub struct Schmidt {
    pub coefficients: Vec<f64>,
    pub left: Vec<ComplexVector>,
    pub right: Vec<ComplexVector>,
}

pub fn schmidt(v: &ComplexVector, dims: (usize, usize), tol: &Tolerance) -> Result<Schmidt> {
    let t = devectorize(v, dims)?;
    let dec = svd(&t)?;
    let smax = dec.s.first().copied().unwrap_or(0.0);
    let cut = tol.cut(smax);
    let mut out = Schmidt {
        coefficients: Vec::new(),
        left: Vec::new(),
        right: Vec::new(),
    };
    for (j, &s) in dec.s.iter().enumerate() {
        if s > cut {
            out.coefficients.push(s);
            out.left.push(dec.v.column(j).map(|z| z.conj()));
            out.right.push(dec.u.column(j).into_owned());
        }
    }
    Ok(out)
}

/// Schmidt rank of a bipartite vector, i.e. the matrix rank of its
/// devectorization.
pub fn schmidt_rank(v: &ComplexVector, dims: (usize, usize), tol: &Tolerance) -> Result<usize> {
    linalg::matrix_rank(&devectorize(v, dims)?, tol)
}

/// The pair of maps attached to an input state `rho` on `H (x) H0`:
/// `forward(A) = Tr_H[rho (A^t (x) I)]` sending `B(H) -> B(H0)`, and its
/// dual `apply(B) = (Tr_H0[(I (x) B) rho])^t` sending `B(H0) -> B(H)`.
pub struct StateAdjointMap {
    rho: ComplexMatrix,
    dh: usize,
    dh0: usize,
}

impl StateAdjointMap {
    pub fn new(rho: &DensityMatrix, dims: (usize, usize)) -> Result<Self> {
        let (dh, dh0) = dims;
        if rho.dim() != dh * dh0 {
            return Err(Error::DimensionMismatch {
                context: "state_adjoint_map",
                expected: dh * dh0,
                found: rho.dim(),
            });
        }
        Ok(StateAdjointMap {
            rho: rho.mat().clone(),
            dh,
            dh0,
        })
    }

    pub fn apply(&self, b: &ComplexMatrix) -> Result<ComplexMatrix> {
        if b.nrows() != self.dh0 || b.ncols() != self.dh0 {
            return Err(Error::DimensionMismatch {
                context: "state_adjoint_map apply",
                expected: self.dh0,
                found: b.nrows(),
            });
        }
        let embedded = kron(&ComplexMatrix::identity(self.dh, self.dh), b);
        let traced = partial_trace(&(embedded * &self.rho), (self.dh, self.dh0), Factor::Second)?;
        Ok(traced.transpose())
    }

    pub fn forward(&self, a: &ComplexMatrix) -> Result<ComplexMatrix> {
        if a.nrows() != self.dh || a.ncols() != self.dh {
            return Err(Error::DimensionMismatch {
                context: "state_adjoint_map forward",
                expected: self.dh,
                found: a.nrows(),
            });
        }
        let embedded = kron(&a.transpose(), &ComplexMatrix::identity(self.dh0, self.dh0));
        partial_trace(&(&self.rho * embedded), (self.dh, self.dh0), Factor::First)
    }
}

/// Embeds a POVM into a larger space along a projection and pads with the
/// normalized complement so the result is again a POVM. The embedding sends
/// the k-th basis vector of the small space to the k-th basis column of the
/// projection's range.
pub fn extend_povm(m: &Povm, p: &ComplexMatrix, tol: &Tolerance) -> Result<Povm> {
    let big = p.nrows();
    let p = hermitize(p, tol)?;
    if (&p * &p - &p).norm() > tol.at(1.0) {
        return Err(Error::Numeric {
            context: "extend_povm projection",
            residual: (&p * &p - &p).norm(),
        });
    }
    let j = linalg::column_basis(&p, tol)?;
    if j.ncols() != m.space_dim() {
        return Err(Error::RankMismatch {
            context: "extend_povm",
            expected: m.space_dim(),
            found: j.ncols(),
        });
    }
    let pad = (ComplexMatrix::identity(big, big) - &p).scale(1.0 / m.n() as f64);
    let effects: Vec<ComplexMatrix> = m
        .effects()
        .iter()
        .map(|e| &j * e * j.adjoint() + &pad)
        .collect();
    Povm::new(effects, tol)
}

/// Outcome probabilities `Tr(rho M_i)`, clamped into `[0, 1]`.
pub fn measure(m: &Povm, rho: &DensityMatrix, tol: &Tolerance) -> Result<Vec<f64>> {
    if m.space_dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            context: "measure",
            expected: m.space_dim(),
            found: rho.dim(),
        });
    }
    let mut probs = Vec::with_capacity(m.n());
    for e in m.effects() {
        let p: Complex64 = (rho.mat() * e).trace();
        if p.im.abs() > tol.at(1.0) || p.re < -tol.at(1.0) {
            return Err(Error::Numeric {
                context: "measure probability",
                residual: p.im.abs().max(-p.re),
            });
        }
        probs.push(p.re.clamp(0.0, 1.0));
    }
    Ok(probs)
}

/// The unnormalized maximally entangled projector `psi_H` on `H (x) H`.
pub fn max_entangled_projector(dim: usize) -> ComplexMatrix {
    let mut psi = ComplexMatrix::zeros(dim * dim, dim * dim);
    for i in 0..dim {
        for j in 0..dim {
            psi[(i * dim + i, j * dim + j)] = Complex64::new(1.0, 0.0);
        }
    }
    psi
}

/// Computational-basis PVM on `C^dim`.
pub fn computational_pvm(dim: usize) -> Povm {
    let effects = (0..dim)
        .map(|i| {
            ComplexMatrix::from_fn(dim, dim, |r, c| {
                if r == i && c == i {
                    Complex64::new(1.0, 0.0)
                } else {
                    C_ZERO
                }
            })
        })
        .collect();
    Povm { effects }
}
