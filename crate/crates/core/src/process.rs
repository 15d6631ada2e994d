//! Process POVMs and their representation triples.
//!
//! A process POVM (quantum 1-tester) is a family of PSD operators `F_i` on
//! `K (x) H` with `sum_i F_i = I_K (x) sigma` for a density matrix `sigma`.
//! It measures a channel `Phi: B(H) -> B(K)` through `p_i = Tr F_i C(Phi)`.
//! A representation triple `(H0, input, M)` implements the same statistics by
//! feeding half of an input state through the channel and measuring `M` on
//! `K (x) H0`; `realize` maps triples to testers, `minimal_representation`
//! inverts it canonically.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{
    self, hermitian_eigen, kron, partial_trace, pinv, polar, svd, ComplexMatrix, ComplexVector,
    Factor, Tolerance,
};
use crate::quantum::{choi, extend_povm, Channel, DensityMatrix, Povm, StateAdjointMap};

#[derive(Clone, Debug)]
pub struct ProcessPovm {
    dk: usize,
    dh: usize,
    effects: Vec<ComplexMatrix>,
    sigma: DensityMatrix,
}

impl ProcessPovm {
    pub fn new(dk: usize, dh: usize, effects: Vec<ComplexMatrix>, tol: &Tolerance) -> Result<Self> {
        let d = dk * dh;
        if effects.is_empty() {
            return Err(Error::DimensionMismatch {
                context: "tester effects",
                expected: 1,
                found: 0,
            });
        }
        let mut symmetrized = Vec::with_capacity(effects.len());
        let mut sum = ComplexMatrix::zeros(d, d);
        for e in &effects {
            if e.nrows() != d || e.ncols() != d {
                return Err(Error::DimensionMismatch {
                    context: "tester effects",
                    expected: d,
                    found: e.nrows(),
                });
            }
            let h = linalg::hermitize(e, tol)?;
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
        let sigma_raw = partial_trace(&sum, (dk, dh), Factor::First)?.scale(1.0 / dk as f64);
        let residual = (&sum - kron(&ComplexMatrix::identity(dk, dk), &sigma_raw)).norm();
        if residual > tol.at(effects.len() as f64) {
            return Err(Error::NotProductNormalized { residual });
        }
        let sigma = DensityMatrix::new(sigma_raw, tol)?;
        Ok(ProcessPovm {
            dk,
            dh,
            effects: symmetrized,
            sigma,
        })
    }

    pub fn dk(&self) -> usize {
        self.dk
    }

    pub fn dh(&self) -> usize {
        self.dh
    }

    pub fn n(&self) -> usize {
        self.effects.len()
    }

    pub fn effects(&self) -> &[ComplexMatrix] {
        &self.effects
    }

    pub fn effect(&self, i: usize) -> &ComplexMatrix {
        &self.effects[i]
    }

    /// Normalization state: `sum_i F_i = I_K (x) sigma`.
    pub fn sigma(&self) -> &DensityMatrix {
        &self.sigma
    }

    /// Rank of the normalization state at the relative cutoff.
    pub fn rank(&self, tol: &Tolerance) -> Result<usize> {
        linalg::matrix_rank(self.sigma.mat(), tol)
    }
}

/// Largest Frobenius distance between corresponding effects.
pub fn max_effect_distance(a: &ProcessPovm, b: &ProcessPovm) -> f64 {
    a.effects
        .iter()
        .zip(&b.effects)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// `sum_i lambda_i F^i` as a tester; weights must be a probability vector.
pub fn convex_combination(terms: &[(f64, &ProcessPovm)], tol: &Tolerance) -> Result<ProcessPovm> {
    let Some(((_, first), _)) = terms.split_first() else {
        return Err(Error::BadWeights { sum: 0.0 });
    };
    let wsum: f64 = terms.iter().map(|(w, _)| w).sum();
    if (wsum - 1.0).abs() > tol.at(terms.len() as f64) || terms.iter().any(|(w, _)| *w < 0.0) {
        return Err(Error::BadWeights { sum: wsum });
    }
    let (dk, dh, n) = (first.dk, first.dh, first.n());
    let mut effects = vec![ComplexMatrix::zeros(dk * dh, dk * dh); n];
    for (w, f) in terms.iter() {
        if f.dk != dk || f.dh != dh || f.n() != n {
            return Err(Error::DimensionMismatch {
                context: "convex_combination",
                expected: n,
                found: f.n(),
            });
        }
        for (acc, e) in effects.iter_mut().zip(f.effects()) {
            *acc += e.scale(*w);
        }
    }
    ProcessPovm::new(dk, dh, effects, tol)
}

#[derive(Clone, Debug)]
pub enum TripleInput {
    /// Operator `T: H -> H0` with `Tr T^dag T = 1`; the input state is the
    /// pure `|T>><<T|`.
    Pure(ComplexMatrix),
    Mixed(DensityMatrix),
}

#[derive(Clone, Debug)]
pub struct RepresentationTriple {
    dk: usize,
    dh: usize,
    dh0: usize,
    input: TripleInput,
    povm: Povm,
}

impl RepresentationTriple {
    pub fn new_pure(dk: usize, t: ComplexMatrix, m: Povm, tol: &Tolerance) -> Result<Self> {
        linalg::ensure_finite(&t)?;
        let (dh0, dh) = t.shape();
        let trace_sq = t.norm_squared();
        if (trace_sq - 1.0).abs() > tol.at(1.0) {
            return Err(Error::InvalidState {
                reason: format!("input map has Tr T^dag T = {trace_sq}, expected 1"),
            });
        }
        if m.space_dim() != dk * dh0 {
            return Err(Error::DimensionMismatch {
                context: "triple povm space",
                expected: dk * dh0,
                found: m.space_dim(),
            });
        }
        Ok(RepresentationTriple {
            dk,
            dh,
            dh0,
            input: TripleInput::Pure(t),
            povm: m,
        })
    }

    pub fn new_mixed(dh: usize, rho: DensityMatrix, m: Povm, tol: &Tolerance) -> Result<Self> {
        let _ = tol;
        if dh == 0 || rho.dim() % dh != 0 {
            return Err(Error::DimensionMismatch {
                context: "triple input state",
                expected: dh,
                found: rho.dim(),
            });
        }
        let dh0 = rho.dim() / dh;
        if dh0 == 0 || m.space_dim() % dh0 != 0 {
            return Err(Error::DimensionMismatch {
                context: "triple povm space",
                expected: dh0,
                found: m.space_dim(),
            });
        }
        let dk = m.space_dim() / dh0;
        Ok(RepresentationTriple {
            dk,
            dh,
            dh0,
            input: TripleInput::Mixed(rho),
            povm: m,
        })
    }

    pub fn dk(&self) -> usize {
        self.dk
    }

    pub fn dh(&self) -> usize {
        self.dh
    }

    pub fn dh0(&self) -> usize {
        self.dh0
    }

    pub fn n(&self) -> usize {
        self.povm.n()
    }

    pub fn input(&self) -> &TripleInput {
        &self.input
    }

    pub fn povm(&self) -> &Povm {
        &self.povm
    }

    pub fn is_pure(&self) -> bool {
        matches!(self.input, TripleInput::Pure(_))
    }

    /// The input map of a pure triple.
    pub fn pure_map(&self) -> Result<&ComplexMatrix> {
        match &self.input {
            TripleInput::Pure(t) => Ok(t),
            TripleInput::Mixed(_) => Err(Error::PureInputRequired),
        }
    }

    /// Conjugates the ancilla by a unitary: `T -> UT`, `M -> (I(x)U) M (I(x)U)^dag`.
    /// Produces an equivalent triple.
    pub fn rotate_ancilla(&self, u: &ComplexMatrix, tol: &Tolerance) -> Result<Self> {
        if u.nrows() != self.dh0 || u.ncols() != self.dh0 {
            return Err(Error::DimensionMismatch {
                context: "ancilla rotation",
                expected: self.dh0,
                found: u.nrows(),
            });
        }
        let unitarity = (u.adjoint() * u - ComplexMatrix::identity(self.dh0, self.dh0)).norm();
        if unitarity > tol.at(1.0) {
            return Err(Error::Numeric {
                context: "ancilla rotation unitarity",
                residual: unitarity,
            });
        }
        let eu = embed_on_ancilla(self.dk, u);
        let effects: Vec<ComplexMatrix> = self
            .povm
            .effects()
            .iter()
            .map(|m| &eu * m * eu.adjoint())
            .collect();
        let povm = Povm::new(effects, tol)?;
        let input = match &self.input {
            TripleInput::Pure(t) => TripleInput::Pure(u * t),
            TripleInput::Mixed(rho) => {
                let iu = kron(&ComplexMatrix::identity(self.dh, self.dh), u);
                TripleInput::Mixed(DensityMatrix::new(&iu * rho.mat() * iu.adjoint(), tol)?)
            }
        };
        Ok(RepresentationTriple {
            input,
            povm,
            ..*self
        })
    }
}

/// `I_K (x) X` for an ancilla operator `X`.
fn embed_on_ancilla(dk: usize, x: &ComplexMatrix) -> ComplexMatrix {
    kron(&ComplexMatrix::identity(dk, dk), x)
}

/// The tester implemented by a representation triple.
///
/// Pure input: `F_j = (I (x) T)^dag M_j (I (x) T)`. Mixed input: `F_j` is
/// obtained by pushing every ancilla block of `M_j` through the dual input
/// map, `F_j = (id_K (x) Phi_rho^*)(M_j)`.
pub fn realize(t: &RepresentationTriple, tol: &Tolerance) -> Result<ProcessPovm> {
    let effects = match &t.input {
        TripleInput::Pure(tm) => {
            let embed = embed_on_ancilla(t.dk, tm);
            t.povm
                .effects()
                .iter()
                .map(|m| embed.adjoint() * m * &embed)
                .collect()
        }
        TripleInput::Mixed(rho) => {
            let map = StateAdjointMap::new(rho, (t.dh, t.dh0))?;
            let mut effects = Vec::with_capacity(t.n());
            for m in t.povm.effects() {
                let mut f = ComplexMatrix::zeros(t.dk * t.dh, t.dk * t.dh);
                for k in 0..t.dk {
                    for l in 0..t.dk {
                        let block = m.view((k * t.dh0, l * t.dh0), (t.dh0, t.dh0)).into_owned();
                        let pushed = map.apply(&block)?;
                        f.view_mut((k * t.dh, l * t.dh), (t.dh, t.dh)).copy_from(&pushed);
                    }
                }
                effects.push(f);
            }
            effects
        }
    };
    ProcessPovm::new(t.dk, t.dh, effects, tol)
}

/// `p_i = Tr F_i C(Phi)`, clamped into `[0, 1]`.
pub fn tester_probabilities(f: &ProcessPovm, phi: &Channel, tol: &Tolerance) -> Result<Vec<f64>> {
    if phi.out_dim() != f.dk || phi.in_dim() != f.dh {
        return Err(Error::DimensionMismatch {
            context: "tester_probabilities",
            expected: f.dk * f.dh,
            found: phi.out_dim() * phi.in_dim(),
        });
    }
    let c = choi(phi);
    let n = f.n();
    let mut probs = Vec::with_capacity(n);
    let mut total = 0.0;
    for e in f.effects() {
        let p: Complex64 = (e * &c.mat).trace();
        if p.im.abs() > tol.at(n as f64) || p.re < -tol.at(n as f64) {
            return Err(Error::Numeric {
                context: "tester probability",
                residual: p.im.abs().max(-p.re),
            });
        }
        total += p.re;
        probs.push(p.re.clamp(0.0, 1.0));
    }
    if (total - 1.0).abs() > tol.at(n as f64) {
        return Err(Error::Numeric {
            context: "tester probability normalization",
            residual: (total - 1.0).abs(),
        });
    }
    Ok(probs)
}

/// Canonical minimal representation: the ancilla is the support of `sigma`
/// in its eigenbasis (eigenvalues descending, phases fixed), `T` becomes
/// `diag(sqrt(lambda)) J^dag`, and the effects are conjugated by the
/// pseudo-inverse square root. `realize` of the result reproduces the tester.
pub fn minimal_representation(f: &ProcessPovm, tol: &Tolerance) -> Result<RepresentationTriple> {
    let eig = hermitian_eigen(f.sigma().mat(), tol)?;
    let lmax = eig.values.first().copied().unwrap_or(0.0).max(0.0);
    let r = eig.values.iter().filter(|&&v| v > tol.cut(lmax)).count();
    if r == 0 {
        return Err(Error::Numeric {
            context: "minimal_representation rank",
            residual: lmax,
        });
    }
    let j = eig.vectors.columns(0, r).into_owned();
    let sqrt = ComplexMatrix::from_diagonal(&ComplexVector::from_iterator(
        r,
        eig.values[..r].iter().map(|&v| Complex64::new(v.sqrt(), 0.0)),
    ));
    let inv_sqrt = ComplexMatrix::from_diagonal(&ComplexVector::from_iterator(
        r,
        eig.values[..r]
            .iter()
            .map(|&v| Complex64::new(1.0 / v.sqrt(), 0.0)),
    ));
    let t = &sqrt * j.adjoint();
    let compress = embed_on_ancilla(f.dk, &(&inv_sqrt * j.adjoint()));
    let effects: Vec<ComplexMatrix> = f
        .effects()
        .iter()
        .map(|e| &compress * e * compress.adjoint())
        .collect();
    let m = Povm::new(effects, tol)?;
    RepresentationTriple::new_pure(f.dk, t, m, tol)
}

/// Equivalence means equality of the realized testers, effect by effect.
pub fn triples_equivalent(
    a: &RepresentationTriple,
    b: &RepresentationTriple,
    tol: &Tolerance,
) -> Result<bool> {
    if a.dk != b.dk || a.dh != b.dh {
        return Err(Error::DimensionMismatch {
            context: "triples_equivalent",
            expected: a.dk * a.dh,
            found: b.dk * b.dh,
        });
    }
    if a.n() != b.n() {
        return Err(Error::DimensionMismatch {
            context: "triples_equivalent outcomes",
            expected: a.n(),
            found: b.n(),
        });
    }
    let fa = realize(a, tol)?;
    let fb = realize(b, tol)?;
    Ok(max_effect_distance(&fa, &fb) <= tol.at(1.0))
}

/// The isometry connecting a minimal pure representation to any equivalent
/// pure representation: `U T_a = T_b` and `(I(x)U)^dag M_b (I(x)U) = M_a`.
/// Unique because `T_a` is surjective.
pub fn connecting_isometry(
    a: &RepresentationTriple,
    b: &RepresentationTriple,
    tol: &Tolerance,
) -> Result<ComplexMatrix> {
    let ta = a.pure_map()?;
    let tb = b.pure_map()?;
    let rank = linalg::matrix_rank(ta, tol)?;
    if rank != a.dh0 {
        return Err(Error::NotMinimal {
            rank,
            dh0: a.dh0,
        });
    }
    if !triples_equivalent(a, b, tol)? {
        return Err(Error::NotEquivalent);
    }
    let pol = polar(&(tb * pinv(ta, tol)?), tol)?;
    let u = pol.w;
    let iso_residual = (u.adjoint() * &u - ComplexMatrix::identity(a.dh0, a.dh0)).norm();
    let map_residual = (&u * ta - tb).norm();
    if iso_residual > tol.at(1.0) || map_residual > tol.at(1.0) {
        return Err(Error::Numeric {
            context: "connecting_isometry alignment",
            residual: iso_residual.max(map_residual),
        });
    }
    let eu = embed_on_ancilla(a.dk, &u);
    for (ma, mb) in a.povm.effects().iter().zip(b.povm.effects()) {
        let residual = (eu.adjoint() * mb * &eu - ma).norm();
        if residual > tol.at(1.0) {
            return Err(Error::Numeric {
                context: "connecting_isometry conjugation",
                residual,
            });
        }
    }
    Ok(u)
}

/// Pads the ancilla to a larger dimension: `T` is extended by the coordinate
/// inclusion and the POVM by the uniform complement. The result is equivalent.
pub fn extend_ancilla(
    t: &RepresentationTriple,
    dh0_new: usize,
    tol: &Tolerance,
) -> Result<RepresentationTriple> {
    if dh0_new < t.dh0 {
        return Err(Error::ShrinkingAncilla {
            from: t.dh0,
            to: dh0_new,
        });
    }
    if dh0_new == t.dh0 {
        return Ok(t.clone());
    }
    let j0 = ComplexMatrix::from_fn(dh0_new, t.dh0, |r, c| {
        if r == c {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let p = embed_on_ancilla(t.dk, &(&j0 * j0.adjoint()));
    let povm = extend_povm(&t.povm, &p, tol)?;
    let input = match &t.input {
        TripleInput::Pure(tm) => TripleInput::Pure(&j0 * tm),
        TripleInput::Mixed(rho) => {
            let ij = kron(&ComplexMatrix::identity(t.dh, t.dh), &j0);
            TripleInput::Mixed(DensityMatrix::new(&ij * rho.mat() * ij.adjoint(), tol)?)
        }
    };
    Ok(RepresentationTriple {
        dh0: dh0_new,
        input,
        povm,
        ..*t
    })
}

/// Compresses a pure triple onto the range of `T`, yielding an equivalent
/// minimal representation in the left singular basis of `T`.
pub fn restrict_to_minimal(
    t: &RepresentationTriple,
    tol: &Tolerance,
) -> Result<RepresentationTriple> {
    let tm = t.pure_map()?;
    let dec = svd(tm)?;
    let smax = dec.s.first().copied().unwrap_or(0.0);
    let r = dec.s.iter().filter(|&&s| s > tol.cut(smax)).count();
    if r == 0 {
        return Err(Error::Numeric {
            context: "restrict_to_minimal rank",
            residual: smax,
        });
    }
    let j = dec.u.columns(0, r).into_owned();
    let compress = embed_on_ancilla(t.dk, &j.adjoint().into_owned());
    let effects: Vec<ComplexMatrix> = t
        .povm
        .effects()
        .iter()
        .map(|m| &compress * m * compress.adjoint())
        .collect();
    RepresentationTriple::new_pure(t.dk, j.adjoint() * tm, Povm::new(effects, tol)?, tol)
}

/// An ancilla-operator convex split: coefficients `X_j: H0 -> H0_j` with
/// `sum_j X_j^dag X_j = I` and one POVM per branch.
#[derive(Clone, Debug)]
pub struct Split {
    coefficients: Vec<ComplexMatrix>,
    parts: Vec<Povm>,
}

impl Split {
    pub fn new(
        coefficients: Vec<ComplexMatrix>,
        parts: Vec<Povm>,
        tol: &Tolerance,
    ) -> Result<Self> {
        if coefficients.is_empty() || coefficients.len() != parts.len() {
            return Err(Error::DimensionMismatch {
                context: "split terms",
                expected: coefficients.len(),
                found: parts.len(),
            });
        }
        let dh0 = coefficients[0].ncols();
        let mut acc = ComplexMatrix::zeros(dh0, dh0);
        for x in &coefficients {
            if x.ncols() != dh0 {
                return Err(Error::DimensionMismatch {
                    context: "split coefficient domain",
                    expected: dh0,
                    found: x.ncols(),
                });
            }
            linalg::ensure_finite(x)?;
            acc += x.adjoint() * x;
        }
        let residual = (&acc - ComplexMatrix::identity(dh0, dh0)).norm();
        if residual > tol.at(coefficients.len() as f64) {
            return Err(Error::SplitNotNormalized { residual });
        }
        Ok(Split {
            coefficients,
            parts,
        })
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn coefficients(&self) -> &[ComplexMatrix] {
        &self.coefficients
    }

    pub fn parts(&self) -> &[Povm] {
        &self.parts
    }

    pub fn domain_dim(&self) -> usize {
        self.coefficients[0].ncols()
    }
}

/// Mixes pure triples: embeds all ancillas into the largest one, forms
/// `S^2 = sum_i lambda_i T_i^dag T_i`, and compresses onto the support of `S`.
/// The output triple is minimal and realizes the convex combination of the
/// inputs; the returned split holds the coefficients `X_i` and embedded POVMs
/// that decompose it back.
pub fn mix_with_split(
    terms: &[(f64, RepresentationTriple)],
    tol: &Tolerance,
) -> Result<(RepresentationTriple, Split)> {
    let Some(((_, first), _)) = terms.split_first() else {
        return Err(Error::BadWeights { sum: 0.0 });
    };
    let wsum: f64 = terms.iter().map(|(w, _)| w).sum();
    if (wsum - 1.0).abs() > tol.at(terms.len() as f64) || terms.iter().any(|(w, _)| *w <= 0.0) {
        return Err(Error::BadWeights { sum: wsum });
    }
    let (dk, dh, n) = (first.dk, first.dh, first.n());
    let dh0 = terms.iter().map(|(_, t)| t.dh0).max().unwrap();
    let mut extended = Vec::with_capacity(terms.len());
    for (w, t) in terms {
        if t.dk != dk || t.dh != dh || t.n() != n {
            return Err(Error::DimensionMismatch {
                context: "mix terms",
                expected: dk * dh,
                found: t.dk * t.dh,
            });
        }
        t.pure_map()?;
        extended.push((*w, extend_ancilla(t, dh0, tol)?));
    }
    let mut s2 = ComplexMatrix::zeros(dh, dh);
    for (w, t) in &extended {
        let tm = t.pure_map()?;
        s2 += (tm.adjoint() * tm).scale(*w);
    }
    let eig = hermitian_eigen(&s2, tol)?;
    let lmax = eig.values.first().copied().unwrap_or(0.0).max(0.0);
    let r = eig.values.iter().filter(|&&v| v > tol.cut(lmax)).count();
    if r == 0 {
        return Err(Error::Numeric {
            context: "mix support",
            residual: lmax,
        });
    }
    let j = eig.vectors.columns(0, r).into_owned();
    let sqrt = ComplexMatrix::from_diagonal(&ComplexVector::from_iterator(
        r,
        eig.values[..r].iter().map(|&v| Complex64::new(v.sqrt(), 0.0)),
    ));
    let inv_sqrt = ComplexMatrix::from_diagonal(&ComplexVector::from_iterator(
        r,
        eig.values[..r]
            .iter()
            .map(|&v| Complex64::new(1.0 / v.sqrt(), 0.0)),
    ));
    let t_out = &sqrt * j.adjoint();
    let s_pinv = &j * &inv_sqrt;
    let mut xs = Vec::with_capacity(extended.len());
    let mut parts = Vec::with_capacity(extended.len());
    let mut check = ComplexMatrix::zeros(r, r);
    for (w, t) in &extended {
        let x = (t.pure_map()? * &s_pinv).scale(w.sqrt());
        check += x.adjoint() * &x;
        xs.push(x);
        parts.push(t.povm.clone());
    }
    let normalization = (&check - ComplexMatrix::identity(r, r)).norm();
    if normalization > tol.at(extended.len() as f64) {
        return Err(Error::SplitNotNormalized {
            residual: normalization,
        });
    }
    let mut effects = vec![ComplexMatrix::zeros(dk * r, dk * r); n];
    for (x, part) in xs.iter().zip(&parts) {
        let ex = embed_on_ancilla(dk, x);
        for (acc, m) in effects.iter_mut().zip(part.effects()) {
            *acc += ex.adjoint() * m * &ex;
        }
    }
    let povm = Povm::new(effects, tol)?;
    let triple = RepresentationTriple::new_pure(dk, t_out, povm, tol)?;
    let split = Split::new(xs, parts, tol)?;
    Ok((triple, split))
}

/// Convex mixture of pure triples; see `mix_with_split`.
pub fn mix(terms: &[(f64, RepresentationTriple)], tol: &Tolerance) -> Result<RepresentationTriple> {
    mix_with_split(terms, tol).map(|(t, _)| t)
}

/// Decomposes a pure triple along a split of its POVM. Verifies
/// `M = sum_j (I(x)X_j)^dag M^j (I(x)X_j)` first, then returns the branches
/// `(mu_j, (X_j T / sqrt(mu_j), M^j))` with vanishing-weight branches omitted.
pub fn decompose_along_split(
    t: &RepresentationTriple,
    split: &Split,
    tol: &Tolerance,
) -> Result<Vec<(f64, RepresentationTriple)>> {
    let tm = t.pure_map()?;
    if split.domain_dim() != t.dh0 {
        return Err(Error::DimensionMismatch {
            context: "split domain",
            expected: t.dh0,
            found: split.domain_dim(),
        });
    }
    let mut rebuilt = vec![ComplexMatrix::zeros(t.dk * t.dh0, t.dk * t.dh0); t.n()];
    for (x, part) in split.coefficients().iter().zip(split.parts()) {
        if part.space_dim() != t.dk * x.nrows() {
            return Err(Error::DimensionMismatch {
                context: "split part space",
                expected: t.dk * x.nrows(),
                found: part.space_dim(),
            });
        }
        if part.n() != t.n() {
            return Err(Error::DimensionMismatch {
                context: "split part outcomes",
                expected: t.n(),
                found: part.n(),
            });
        }
        let ex = embed_on_ancilla(t.dk, x);
        for (acc, m) in rebuilt.iter_mut().zip(part.effects()) {
            *acc += ex.adjoint() * m * &ex;
        }
    }
    let mismatch = rebuilt
        .iter()
        .zip(t.povm.effects())
        .map(|(r, m)| (r - m).norm())
        .fold(0.0, f64::max);
    if mismatch > tol.at(split.len() as f64) {
        return Err(Error::SplitInconsistent { residual: mismatch });
    }
    let mut out = Vec::new();
    let mut total = 0.0;
    for (x, part) in split.coefficients().iter().zip(split.parts()) {
        let w = x * tm;
        let mu = w.norm_squared();
        total += mu;
        if mu <= tol.cut(1.0) {
            continue;
        }
        let branch =
            RepresentationTriple::new_pure(t.dk, w.scale(1.0 / mu.sqrt()), part.clone(), tol)?;
        out.push((mu, branch));
    }
    if (total - 1.0).abs() > tol.at(split.len() as f64) {
        return Err(Error::SplitNotNormalized {
            residual: (total - 1.0).abs(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::C_ZERO;
    use crate::quantum::devectorize;
    use crate::random::{
        random_channel, random_input_map, random_matrix, random_mixed_triple, random_povm,
        random_tester, random_triple, random_unitary, rng_from_seed,
    };

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn scaled_identity_map(dim: usize) -> ComplexMatrix {
        ComplexMatrix::identity(dim, dim).scale(1.0 / (dim as f64).sqrt())
    }

    #[test]
    fn realize_scalar_input_halves_effects() {
        let mut rng = rng_from_seed(101);
        let m = random_povm(&mut rng, 4, 3, &tol()).unwrap();
        let t = RepresentationTriple::new_pure(2, scaled_identity_map(2), m.clone(), &tol()).unwrap();
        let f = realize(&t, &tol()).unwrap();
        for (fe, me) in f.effects().iter().zip(m.effects()) {
            assert!((fe - me.scale(0.5)).norm() < 1e-12);
        }
        assert!((f.sigma().mat() - ComplexMatrix::identity(2, 2).scale(0.5)).norm() < 1e-12);
    }

    #[test]
    fn realize_single_outcome() {
        let mut rng = rng_from_seed(103);
        let t_map = random_input_map(&mut rng, 3, 2);
        let m = Povm::new(vec![ComplexMatrix::identity(4, 4)], &tol()).unwrap();
        let t = RepresentationTriple::new_pure(2, t_map.clone(), m, &tol()).unwrap();
        let f = realize(&t, &tol()).unwrap();
        let expected = kron(&ComplexMatrix::identity(2, 2), &(t_map.adjoint() * &t_map));
        assert!((f.effect(0) - expected).norm() < 1e-12);
    }

    #[test]
    fn pure_and_mixed_inputs_realize_identically() {
        let mut rng = rng_from_seed(107);
        let (dk, dh, dh0, n) = (2, 3, 2, 3);
        let t = random_triple(&mut rng, dk, dh, dh0, n, &tol()).unwrap();
        let tm = t.pure_map().unwrap();
        let v = crate::quantum::vectorize(tm);
        let col = ComplexMatrix::from_column_slice(dh * dh0, 1, v.as_slice());
        let rho = DensityMatrix::new(&col * col.adjoint(), &tol()).unwrap();
        let mixed = RepresentationTriple::new_mixed(dh, rho, t.povm().clone(), &tol()).unwrap();
        let fp = realize(&t, &tol()).unwrap();
        let fm = realize(&mixed, &tol()).unwrap();
        assert!(max_effect_distance(&fp, &fm) < 1e-10);
    }

    #[test]
    fn realization_matches_probability_formula() {
        // Tr F_i C(Phi) against Tr M_i (Phi (x) id)(rho), computed separately
        let mut rng = rng_from_seed(109);
        for _ in 0..5 {
            let (dk, dh, dh0, n) = (2, 2, 2, 3);
            let t = random_triple(&mut rng, dk, dh, dh0, n, &tol()).unwrap();
            let f = realize(&t, &tol()).unwrap();
            let phi = random_channel(&mut rng, dh, dk, 2, &tol()).unwrap();
            let probs = tester_probabilities(&f, &phi, &tol()).unwrap();
            let tm = t.pure_map().unwrap();
            let v = crate::quantum::vectorize(tm);
            let col = ComplexMatrix::from_column_slice(dh * dh0, 1, v.as_slice());
            let rho = &col * col.adjoint();
            let big_kraus: Vec<ComplexMatrix> = phi
                .kraus()
                .iter()
                .map(|k| kron(k, &ComplexMatrix::identity(dh0, dh0)))
                .collect();
            let mut pushed = ComplexMatrix::zeros(dk * dh0, dk * dh0);
            for k in &big_kraus {
                pushed += k * &rho * k.adjoint();
            }
            for (i, m) in t.povm().effects().iter().enumerate() {
                let expected: Complex64 = (m * &pushed).trace();
                assert!((probs[i] - expected.re).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn pushing_an_ancilla_channel_through_either_side_agrees() {
        // (id (x) chi)(rho) with M', against rho with (id (x) chi^*)(M')
        let mut rng = rng_from_seed(113);
        let (dk, dh, dh0, dh0p, n) = (2, 2, 2, 3, 3);
        let mixed = random_mixed_triple(&mut rng, dk, dh, dh0, n, &tol()).unwrap();
        let TripleInput::Mixed(rho) = mixed.input() else {
            unreachable!()
        };
        let chi = random_channel(&mut rng, dh0, dh0p, 2, &tol()).unwrap();
        let m_prime = random_povm(&mut rng, dk * dh0p, n, &tol()).unwrap();

        let lifted: Vec<ComplexMatrix> = chi
            .kraus()
            .iter()
            .map(|k| kron(&ComplexMatrix::identity(dh, dh), k))
            .collect();
        let mut rho_out = ComplexMatrix::zeros(dh * dh0p, dh * dh0p);
        for k in &lifted {
            rho_out += k * rho.mat() * k.adjoint();
        }
        let left = RepresentationTriple::new_mixed(
            dh,
            DensityMatrix::new(rho_out, &tol()).unwrap(),
            m_prime.clone(),
            &tol(),
        )
        .unwrap();

        let dual_effects: Vec<ComplexMatrix> = m_prime
            .effects()
            .iter()
            .map(|m| {
                let mut out = ComplexMatrix::zeros(dk * dh0, dk * dh0);
                for k in 0..dk {
                    for l in 0..dk {
                        let block = m.view((k * dh0p, l * dh0p), (dh0p, dh0p)).into_owned();
                        let mut dual = ComplexMatrix::zeros(dh0, dh0);
                        for kr in chi.kraus() {
                            dual += kr.adjoint() * &block * kr;
                        }
                        out.view_mut((k * dh0, l * dh0), (dh0, dh0)).copy_from(&dual);
                    }
                }
                out
            })
            .collect();
        let right = RepresentationTriple::new_mixed(
            dh,
            rho.clone(),
            Povm::new(dual_effects, &tol()).unwrap(),
            &tol(),
        )
        .unwrap();

        let fl = realize(&left, &tol()).unwrap();
        let fr = realize(&right, &tol()).unwrap();
        assert!(max_effect_distance(&fl, &fr) < 1e-9);
    }

    #[test]
    fn minimal_representation_round_trips() {
        let mut rng = rng_from_seed(127);
        for _ in 0..10 {
            let f = random_tester(&mut rng, 2, 3, 2, 3, &tol()).unwrap();
            let min = minimal_representation(&f, &tol()).unwrap();
            assert_eq!(min.dh0(), f.rank(&tol()).unwrap());
            let back = realize(&min, &tol()).unwrap();
            assert!(max_effect_distance(&f, &back) < 1e-9);
        }
    }

    #[test]
    fn minimal_representation_compresses_deficient_rank() {
        let mut rng = rng_from_seed(131);
        // T with a dead ancilla row: rank 1 inside dh0 = 2
        let mut t_map = ComplexMatrix::zeros(2, 2);
        t_map[(0, 0)] = Complex64::new(0.6, 0.0);
        t_map[(0, 1)] = Complex64::new(0.0, 0.8);
        let m = random_povm(&mut rng, 4, 2, &tol()).unwrap();
        let t = RepresentationTriple::new_pure(2, t_map, m, &tol()).unwrap();
        let f = realize(&t, &tol()).unwrap();
        assert_eq!(f.rank(&tol()).unwrap(), 1);
        let min = minimal_representation(&f, &tol()).unwrap();
        assert_eq!(min.dh0(), 1);
        assert!(max_effect_distance(&f, &realize(&min, &tol()).unwrap()) < 1e-9);
    }

    #[test]
    fn minimal_input_vector_has_schmidt_rank_of_sigma() {
        let mut rng = rng_from_seed(137);
        let f = random_tester(&mut rng, 2, 3, 2, 2, &tol()).unwrap();
        let min = minimal_representation(&f, &tol()).unwrap();
        let v = crate::quantum::vectorize(min.pure_map().unwrap());
        let sr = crate::quantum::schmidt_rank(&v, (min.dh(), min.dh0()), &tol()).unwrap();
        assert_eq!(sr, f.rank(&tol()).unwrap());
    }

    #[test]
    fn equivalence_accepts_rotations_and_rejects_other_povms() {
        let mut rng = rng_from_seed(139);
        let a = random_triple(&mut rng, 2, 2, 2, 3, &tol()).unwrap();
        assert!(triples_equivalent(&a, &a, &tol()).unwrap());
        let u = random_unitary(&mut rng, 2);
        let b = a.rotate_ancilla(&u, &tol()).unwrap();
        assert!(triples_equivalent(&a, &b, &tol()).unwrap());
        let other = random_triple(&mut rng, 2, 2, 2, 3, &tol()).unwrap();
        let c = RepresentationTriple::new_pure(
            2,
            a.pure_map().unwrap().clone(),
            other.povm().clone(),
            &tol(),
        )
        .unwrap();
        assert!(!triples_equivalent(&a, &c, &tol()).unwrap());
    }

    #[test]
    fn connecting_isometry_recovers_rotation() {
        let mut rng = rng_from_seed(149);
        let f = random_tester(&mut rng, 2, 2, 2, 3, &tol()).unwrap();
        let a = minimal_representation(&f, &tol()).unwrap();
        let u = random_unitary(&mut rng, a.dh0());
        let b = a.rotate_ancilla(&u, &tol()).unwrap();
        let got = connecting_isometry(&a, &b, &tol()).unwrap();
        assert!((got - u).norm() < 1e-8);
    }

    #[test]
    fn connecting_isometry_to_extended_ancilla_is_proper() {
        let mut rng = rng_from_seed(151);
        let f = random_tester(&mut rng, 2, 3, 2, 2, &tol()).unwrap();
        let a = minimal_representation(&f, &tol()).unwrap();
        let b = extend_ancilla(&a, a.dh0() + 1, &tol()).unwrap();
        let u = connecting_isometry(&a, &b, &tol()).unwrap();
        let gram = u.adjoint() * &u;
        assert!((gram - ComplexMatrix::identity(a.dh0(), a.dh0())).norm() < 1e-9);
        let proj = &u * u.adjoint();
        assert!((proj - ComplexMatrix::identity(b.dh0(), b.dh0())).norm() > 0.5);
    }

    #[test]
    fn connecting_isometry_requires_minimality() {
        let mut rng = rng_from_seed(157);
        let a = random_triple(&mut rng, 2, 2, 2, 2, &tol()).unwrap();
        let wide = extend_ancilla(&a, 3, &tol()).unwrap();
        assert!(matches!(
            connecting_isometry(&wide, &a, &tol()),
            Err(Error::NotMinimal { .. })
        ));
    }

    #[test]
    fn extend_then_restrict_round_trips() {
        let mut rng = rng_from_seed(163);
        let t = random_triple(&mut rng, 2, 3, 2, 3, &tol()).unwrap();
        let wide = extend_ancilla(&t, 4, &tol()).unwrap();
        assert!(triples_equivalent(&t, &wide, &tol()).unwrap());
        let back = restrict_to_minimal(&wide, &tol()).unwrap();
        assert_eq!(back.dh0(), 2);
        assert!(triples_equivalent(&t, &back, &tol()).unwrap());
    }

    #[test]
    fn extend_ancilla_works_on_mixed_inputs() {
        let mut rng = rng_from_seed(167);
        let t = random_mixed_triple(&mut rng, 2, 2, 2, 2, &tol()).unwrap();
        let wide = extend_ancilla(&t, 3, &tol()).unwrap();
        let fa = realize(&t, &tol()).unwrap();
        let fb = realize(&wide, &tol()).unwrap();
        assert!(max_effect_distance(&fa, &fb) < 1e-10);
    }

    #[test]
    fn mix_of_single_term_is_equivalent() {
        let mut rng = rng_from_seed(173);
        let t = random_triple(&mut rng, 2, 2, 2, 2, &tol()).unwrap();
        let mixed = mix(&[(1.0, t.clone())], &tol()).unwrap();
        assert!(triples_equivalent(&t, &mixed, &tol()).unwrap());
        let rank = linalg::matrix_rank(mixed.pure_map().unwrap(), &tol()).unwrap();
        assert_eq!(rank, mixed.dh0());
    }

    #[test]
    fn mix_realizes_convex_combination() {
        let mut rng = rng_from_seed(179);
        let a = random_triple(&mut rng, 2, 3, 2, 3, &tol()).unwrap();
        let b = random_triple(&mut rng, 2, 3, 3, 3, &tol()).unwrap();
        let mixed = mix(&[(0.3, a.clone()), (0.7, b.clone())], &tol()).unwrap();
        let fm = realize(&mixed, &tol()).unwrap();
        let fa = realize(&a, &tol()).unwrap();
        let fb = realize(&b, &tol()).unwrap();
        let expected =
            convex_combination(&[(0.3, &fa), (0.7, &fb)], &tol()).unwrap();
        assert!(max_effect_distance(&fm, &expected) < 1e-9);
    }

    #[test]
    fn decompose_accepts_trivial_split() {
        let mut rng = rng_from_seed(181);
        let t = random_triple(&mut rng, 2, 2, 2, 2, &tol()).unwrap();
        let split = Split::new(
            vec![ComplexMatrix::identity(2, 2)],
            vec![t.povm().clone()],
            &tol(),
        )
        .unwrap();
        let parts = decompose_along_split(&t, &split, &tol()).unwrap();
        assert_eq!(parts.len(), 1);
        assert!((parts[0].0 - 1.0).abs() < 1e-12);
        assert!(triples_equivalent(&t, &parts[0].1, &tol()).unwrap());
    }

    #[test]
    fn decompose_omits_zero_weight_branch() {
        let mut rng = rng_from_seed(191);
        let t = random_triple(&mut rng, 2, 2, 2, 2, &tol()).unwrap();
        let u = random_unitary(&mut rng, 2);
        let rotated = t.rotate_ancilla(&u, &tol()).unwrap();
        let split = Split::new(
            vec![u.clone(), ComplexMatrix::zeros(2, 2)],
            vec![rotated.povm().clone(), t.povm().clone()],
            &tol(),
        )
        .unwrap();
        let parts = decompose_along_split(&t, &split, &tol()).unwrap();
        assert_eq!(parts.len(), 1);
        assert!((parts[0].0 - 1.0).abs() < 1e-12);
        assert!(triples_equivalent(&t, &parts[0].1, &tol()).unwrap());
    }

    #[test]
    fn decompose_rejects_inconsistent_split() {
        let mut rng = rng_from_seed(193);
        let t = random_triple(&mut rng, 2, 2, 2, 2, &tol()).unwrap();
        let other = random_povm(&mut rng, 4, 2, &tol()).unwrap();
        let split = Split::new(vec![ComplexMatrix::identity(2, 2)], vec![other], &tol()).unwrap();
        assert!(matches!(
            decompose_along_split(&t, &split, &tol()),
            Err(Error::SplitInconsistent { .. })
        ));
    }

    #[test]
    fn decompose_inverts_mix() {
        let mut rng = rng_from_seed(197);
        for _ in 0..5 {
            let a = random_triple(&mut rng, 2, 2, 2, 2, &tol()).unwrap();
            let b = random_triple(&mut rng, 2, 2, 2, 2, &tol()).unwrap();
            let weights = [0.35, 0.65];
            let (mixed, split) =
                mix_with_split(&[(weights[0], a), (weights[1], b)], &tol()).unwrap();
            let parts = decompose_along_split(&mixed, &split, &tol()).unwrap();
            assert_eq!(parts.len(), 2);
            for ((mu, _), lambda) in parts.iter().zip(weights) {
                assert!((mu - lambda).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn split_coefficients_recoverable_from_public_data() {
        // X_i = sqrt(lambda_i) T~_i pinv(T_out) reproduces the stored split
        let mut rng = rng_from_seed(199);
        let a = random_triple(&mut rng, 2, 2, 2, 2, &tol()).unwrap();
        let b = random_triple(&mut rng, 2, 2, 2, 2, &tol()).unwrap();
        let terms = [(0.4, a), (0.6, b)];
        let (mixed, split) = mix_with_split(&terms, &tol()).unwrap();
        let t_pinv = pinv(mixed.pure_map().unwrap(), &tol()).unwrap();
        for ((w, term), x) in terms.iter().zip(split.coefficients()) {
            let rebuilt = (term.pure_map().unwrap() * &t_pinv).scale(w.sqrt());
            assert!((rebuilt - x).norm() < 1e-9);
        }
    }

    #[test]
    fn sigma_of_pure_triple_is_gram_matrix() {
        let mut rng = rng_from_seed(211);
        let t = random_triple(&mut rng, 2, 3, 2, 2, &tol()).unwrap();
        let f = realize(&t, &tol()).unwrap();
        let tm = t.pure_map().unwrap();
        assert!((f.sigma().mat() - tm.adjoint() * tm).norm() < 1e-10);
    }

    #[test]
    fn probabilities_sum_to_one() {
        let mut rng = rng_from_seed(223);
        let f = random_tester(&mut rng, 2, 3, 2, 4, &tol()).unwrap();
        let phi = random_channel(&mut rng, 3, 2, 3, &tol()).unwrap();
        let p = tester_probabilities(&f, &phi, &tol()).unwrap();
        let total: f64 = p.iter().sum();
        assert!((total - 1.0).abs() < 1e-9);
        assert!(p.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn devectorize_matches_triple_storage() {
        // the vectorized input map reshapes back with input-major indexing
        let t = ComplexMatrix::from_row_slice(2, 2, &[
            Complex64::new(0.5, 0.0),
            Complex64::new(0.0, 0.5),
            Complex64::new(0.5, 0.0),
            C_ZERO,
        ]);
        let v = crate::quantum::vectorize(&t);
        assert!((devectorize(&v, (2, 2)).unwrap() - t).norm() < 1e-15);
    }

    #[test]
    fn random_matrix_rejected_as_tester() {
        let mut rng = rng_from_seed(227);
        let junk = random_matrix(&mut rng, 4, 4);
        let h = (&junk + junk.adjoint()).scale(0.5);
        assert!(ProcessPovm::new(2, 2, vec![h.clone(), h], &tol()).is_err());
    }
}
