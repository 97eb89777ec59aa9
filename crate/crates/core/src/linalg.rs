//! Dense complex Hermitian linear algebra.
//!
//! Multi-partite indices follow the Kronecker convention: for subsystem
//! dimensions `[d_0, d_1, ..]` the basis index is `i_0 * (d_1 * d_2 ..) + i_1 * (d_2 ..) + ..`,
//! so the first subsystem is the most significant digit.

use std::ops::Deref;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::config::TOL;
use crate::error::{validation, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Square complex matrix equal to its conjugate transpose.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(CMat);

impl HermitianMatrix {
    /// Validates Hermiticity and stores the exactly Hermitian part.
    pub fn new(m: CMat) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return validation(format!("expected a non-empty square matrix, got {}x{}", m.nrows(), m.ncols()));
        }
        let scale = m.iter().fold(1.0f64, |acc, z| acc.max(z.norm()));
        let n = m.nrows();
        for i in 0..n {
            for j in i..n {
                let dev = (m[(i, j)] - m[(j, i)].conj()).norm();
                if dev > TOL.hermitian * scale {
                    return validation(format!("matrix is not Hermitian: entry ({i},{j}) deviates by {dev:e}"));
                }
            }
        }
        Ok(Self::hermitian_part(m))
    }

    /// `(m + m^†) / 2` without validation. Used on results that are Hermitian
    /// up to rounding.
    pub fn hermitian_part(m: CMat) -> Self {
        let h = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
        HermitianMatrix(h)
    }

    pub fn identity(dim: usize) -> Self {
        HermitianMatrix(CMat::identity(dim, dim))
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let v = CVec::from_iterator(diag.len(), diag.iter().map(|&x| Complex64::new(x, 0.0)));
        HermitianMatrix(CMat::from_diagonal(&v))
    }

    /// Rank-one projector `|v><v|` (unnormalized if `v` is).
    pub fn outer(v: &CVec) -> Self {
        HermitianMatrix::hermitian_part(v * v.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.0
    }

    pub fn into_matrix(self) -> CMat {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn scale(&self, c: f64) -> Self {
        HermitianMatrix(&self.0 * Complex64::new(c, 0.0))
    }

    pub fn add(&self, other: &HermitianMatrix) -> Self {
        HermitianMatrix(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &HermitianMatrix) -> Self {
        HermitianMatrix(&self.0 - &other.0)
    }

    /// Conjugation `U A U^†`.
    pub fn conjugate_by(&self, u: &CMat) -> Self {
        HermitianMatrix::hermitian_part(u * &self.0 * u.adjoint())
    }

    pub fn max_abs_diff(&self, other: &HermitianMatrix) -> f64 {
        max_abs_diff(&self.0, &other.0)
    }
}

/// Unit-trace positive semidefinite Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(HermitianMatrix);

impl DensityMatrix {
    pub fn new(h: HermitianMatrix) -> Result<Self> {
        let tr = h.trace();
        if (tr - 1.0).abs() > TOL.trace {
            return validation(format!("density matrix has trace {tr}, expected 1"));
        }
        let eig = herm_eig(&h);
        let min = eig.eigenvalues.last().copied().unwrap_or(0.0);
        if min < -TOL.psd {
            return validation(format!("density matrix has negative eigenvalue {min:e}"));
        }
        Ok(DensityMatrix(h))
    }

    pub fn from_matrix(m: CMat) -> Result<Self> {
        Self::new(HermitianMatrix::new(m)?)
    }

    /// Divides by the trace; fails on a zero or non-PSD operator.
    pub fn normalized(h: HermitianMatrix) -> Result<Self> {
        let tr = h.trace();
        if tr.abs() < f64::MIN_POSITIVE || !tr.is_finite() {
            return validation("cannot normalize an operator with zero trace");
        }
        Self::new(h.scale(1.0 / tr))
    }

    /// Pure state `|v><v| / <v|v>`.
    pub fn pure(v: &CVec) -> Result<Self> {
        let norm = v.norm();
        if norm == 0.0 {
            return validation("zero vector has no pure state");
        }
        let u = v.unscale(norm);
        Ok(DensityMatrix(HermitianMatrix::outer(&u)))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        DensityMatrix(HermitianMatrix::identity(dim).scale(1.0 / dim as f64))
    }

    pub fn diagonal(probs: &[f64]) -> Result<Self> {
        Self::new(HermitianMatrix::from_diagonal(probs))
    }

    pub fn basis_state(dim: usize, k: usize) -> Self {
        let mut p = vec![0.0; dim];
        p[k] = 1.0;
        DensityMatrix(HermitianMatrix::from_diagonal(&p))
    }

    pub fn hermitian(&self) -> &HermitianMatrix {
        &self.0
    }

    pub fn into_hermitian(self) -> HermitianMatrix {
        self.0
    }

    pub(crate) fn from_hermitian_unchecked(h: HermitianMatrix) -> Self {
        DensityMatrix(h)
    }
}

impl Deref for DensityMatrix {
    type Target = HermitianMatrix;

    fn deref(&self) -> &HermitianMatrix {
        &self.0
    }
}

/// Eigenvalues sorted in descending order with the matching unitary of
/// column eigenvectors.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMat,
}

impl SpectralDecomposition {
    pub fn reconstruct(&self) -> CMat {
        self.map(|x| x)
    }

    /// `U f(Λ) U^†`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMat {
        let n = self.eigenvalues.len();
        let mut scaled = self.eigenvectors.clone();
        for (j, &lambda) in self.eigenvalues.iter().enumerate() {
            let c = Complex64::new(f(lambda), 0.0);
            for i in 0..n {
                scaled[(i, j)] *= c;
            }
        }
        scaled * self.eigenvectors.adjoint()
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    /// Threshold below which eigenvalues count as zero.
    pub fn support_threshold(&self) -> f64 {
        TOL.support_cutoff * self.max_eigenvalue().max(0.0)
    }

    /// Columns spanning the eigenspaces with eigenvalue above the support threshold.
    pub fn support_basis(&self) -> CMat {
        let cut = self.support_threshold();
        let keep: Vec<usize> = (0..self.eigenvalues.len()).filter(|&j| self.eigenvalues[j] > cut).collect();
        self.eigenvectors.select_columns(keep.iter())
    }
}

/// Spectral decomposition with descending eigenvalues; each eigenvector is
/// rotated so that its first non-negligible component is real and positive.
pub fn herm_eig(m: &HermitianMatrix) -> SpectralDecomposition {
    let n = m.dim();
    let eig = SymmetricEigen::new(m.matrix().clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (j, &k) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(k);
        let lead = col.iter().find(|z| z.norm() > 1e-8).copied().unwrap_or(ONE);
        let phase = lead.conj() / lead.norm();
        for i in 0..n {
            vectors[(i, j)] = col[i] * phase;
        }
    }
    SpectralDecomposition { eigenvalues, eigenvectors: vectors }
}

/// Validating entry point: rejects non-Hermitian input.
pub fn herm_eig_checked(m: &CMat) -> Result<SpectralDecomposition> {
    Ok(herm_eig(&HermitianMatrix::new(m.clone())?))
}

fn check_psd(eig: &SpectralDecomposition) -> Result<()> {
    let min = eig.min_eigenvalue();
    if min < -TOL.psd * eig.max_eigenvalue().max(1.0) {
        return validation(format!("operator has negative eigenvalue {min:e}"));
    }
    Ok(())
}

/// `f` applied to the eigenvalues on the support; zero elsewhere.
pub(crate) fn support_map(eig: &SpectralDecomposition, f: impl Fn(f64) -> f64) -> CMat {
    let cut = eig.support_threshold();
    eig.map(|x| if x > cut { f(x) } else { 0.0 })
}

/// `A^p` on the support of `A`, with `0^p := 0` for every `p`.
pub fn mat_pow(a: &HermitianMatrix, p: f64) -> Result<HermitianMatrix> {
    if !p.is_finite() {
        return validation(format!("matrix power must be finite, got {p}"));
    }
    let eig = herm_eig(a);
    check_psd(&eig)?;
    Ok(pow_of(&eig, p))
}

pub(crate) fn pow_of(eig: &SpectralDecomposition, p: f64) -> HermitianMatrix {
    HermitianMatrix::hermitian_part(support_map(eig, |x| x.powf(p)))
}

/// Orthogonal projector onto the support of a PSD operator.
pub fn support_projector(a: &HermitianMatrix) -> HermitianMatrix {
    let eig = herm_eig(a);
    HermitianMatrix::hermitian_part(support_map(&eig, |_| 1.0))
}

/// Base-two matrix logarithm on the support.
pub fn mat_log2(a: &HermitianMatrix) -> Result<HermitianMatrix> {
    let eig = herm_eig(a);
    check_psd(&eig)?;
    Ok(HermitianMatrix::hermitian_part(support_map(&eig, f64::log2)))
}

/// Sum of absolute eigenvalues.
pub fn trace_norm(a: &HermitianMatrix) -> f64 {
    herm_eig(a).eigenvalues.iter().map(|x| x.abs()).sum()
}

/// Sum of singular values of an arbitrary square matrix.
pub fn trace_norm_general(a: &CMat) -> f64 {
    a.clone().svd(false, false).singular_values.iter().sum()
}

/// `|| sqrt(a) sqrt(b) ||_1 = tr sqrt(sqrt(a) b sqrt(a))` for PSD `a`, `b` of any trace.
pub fn fidelity_psd(a: &HermitianMatrix, b: &HermitianMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return validation(format!("fidelity of operators with dimensions {} and {}", a.dim(), b.dim()));
    }
    // Singular values of sqrt(a) sqrt(b) avoid taking square roots of
    // rounding noise in the null space of sqrt(a) b sqrt(a).
    let sa = mat_pow(a, 0.5)?;
    let sb = mat_pow(b, 0.5)?;
    Ok(trace_norm_general(&(sa.matrix() * sb.matrix())))
}

/// `F(rho, sigma) = || rho^{1/2} sigma^{1/2} ||_1`, clamped to `[0, 1]`.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    Ok(fidelity_psd(rho, sigma)?.clamp(0.0, 1.0))
}

impl HermitianMatrix {
    /// `S X S` for Hermitian `S = self`.
    pub fn conjugate_by_hermitian(&self, x: &HermitianMatrix) -> HermitianMatrix {
        HermitianMatrix::hermitian_part(&self.0 * &x.0 * &self.0)
    }
}

/// Tensor product.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn kron_hermitian(a: &HermitianMatrix, b: &HermitianMatrix) -> HermitianMatrix {
    HermitianMatrix(kron(a.matrix(), b.matrix()))
}

pub fn kron_density(a: &DensityMatrix, b: &DensityMatrix) -> DensityMatrix {
    DensityMatrix(kron_hermitian(a, b))
}

pub fn kron_vec(a: &CVec, b: &CVec) -> CVec {
    a.kronecker(b)
}

fn check_dims(total: usize, dims: &[usize], keep: &[usize]) -> Result<Vec<usize>> {
    if dims.is_empty() || dims.contains(&0) {
        return validation("subsystem dimensions must be positive");
    }
    let prod: usize = dims.iter().product();
    if prod != total {
        return validation(format!("subsystem dimensions {dims:?} multiply to {prod}, operator has dimension {total}"));
    }
    let mut keep: Vec<usize> = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    if let Some(&bad) = keep.iter().find(|&&k| k >= dims.len()) {
        return validation(format!("subsystem index {bad} out of range for {dims:?}"));
    }
    Ok(keep)
}

/// For every basis index of the full space, its index within the kept
/// subsystems and within the traced ones.
fn split_indices(dims: &[usize], keep: &[usize]) -> (Vec<(usize, usize)>, usize, usize) {
    let total: usize = dims.iter().product();
    let kept_dim: usize = keep.iter().map(|&k| dims[k]).product();
    let traced_dim = total / kept_dim;
    let mut out = Vec::with_capacity(total);
    let mut digits = vec![0usize; dims.len()];
    for _ in 0..total {
        let (mut ki, mut ti) = (0, 0);
        for (s, &dig) in digits.iter().enumerate() {
            if keep.binary_search(&s).is_ok() {
                ki = ki * dims[s] + dig;
            } else {
                ti = ti * dims[s] + dig;
            }
        }
        out.push((ki, ti));
        for s in (0..dims.len()).rev() {
            digits[s] += 1;
            if digits[s] < dims[s] {
                break;
            }
            digits[s] = 0;
        }
    }
    (out, kept_dim, traced_dim)
}

/// Partial trace over every subsystem not listed in `keep`.
///
/// The kept subsystems appear in ascending index order.
pub fn partial_trace_matrix(m: &CMat, dims: &[usize], keep: &[usize]) -> Result<CMat> {
    let keep = check_dims(m.nrows(), dims, keep)?;
    let (idx, kept_dim, traced_dim) = split_indices(dims, &keep);
    let mut groups: Vec<Vec<(usize, usize)>> = vec![Vec::new(); traced_dim];
    for (full, &(k, t)) in idx.iter().enumerate() {
        groups[t].push((k, full));
    }
    let mut out = CMat::zeros(kept_dim, kept_dim);
    for g in &groups {
        for &(ka, fa) in g {
            for &(kb, fb) in g {
                out[(ka, kb)] += m[(fa, fb)];
            }
        }
    }
    Ok(out)
}

pub fn partial_trace(rho: &DensityMatrix, dims: &[usize], keep: &[usize]) -> Result<DensityMatrix> {
    let m = partial_trace_matrix(rho.matrix(), dims, keep)?;
    Ok(DensityMatrix(HermitianMatrix::hermitian_part(m)))
}

/// Reduced operator of the pure state `|psi><psi|` on the kept subsystems,
/// computed without forming the full projector.
pub fn reduce_pure(psi: &CVec, dims: &[usize], keep: &[usize]) -> Result<CMat> {
    let keep = check_dims(psi.len(), dims, keep)?;
    let (idx, kept_dim, traced_dim) = split_indices(dims, &keep);
    let mut mat = CMat::zeros(kept_dim, traced_dim);
    for (full, &(k, t)) in idx.iter().enumerate() {
        mat[(k, t)] = psi[full];
    }
    Ok(&mat * mat.adjoint())
}

/// Reorders tensor factors: output factor `i` is input factor `perm[i]`.
pub fn permute_subsystems(psi: &CVec, dims: &[usize], perm: &[usize]) -> Result<CVec> {
    let n = dims.len();
    let mut seen = vec![false; n];
    if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
        return validation(format!("{perm:?} is not a permutation of {n} subsystems"));
    }
    check_dims(psi.len(), dims, &[])?;
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let mut out = CVec::zeros(psi.len());
    let mut digits = vec![0usize; n];
    for amp in psi.iter() {
        let mut j = 0;
        for (i, &p) in perm.iter().enumerate() {
            j = j * new_dims[i] + digits[p];
        }
        out[j] = *amp;
        for s in (0..n).rev() {
            digits[s] += 1;
            if digits[s] < dims[s] {
                break;
            }
            digits[s] = 0;
        }
    }
    Ok(out)
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch");
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn real_trace(m: &CMat) -> f64 {
    m.diagonal().iter().map(|z| z.re).sum()
}

/// `Re tr(a b)` without forming the product.
pub fn trace_product(a: &CMat, b: &CMat) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for k in 0..n {
            acc += (a[(i, k)] * b[(k, i)]).re;
        }
    }
    acc
}

/// Restriction `V^† A V` onto the column span of an isometry `V`.
pub(crate) fn compress(a: &CMat, v: &CMat) -> HermitianMatrix {
    HermitianMatrix::hermitian_part(v.adjoint() * a * v)
}

pub fn pauli_x() -> CMat {
    CMat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

pub fn pauli_y() -> CMat {
    let i = Complex64::new(0.0, 1.0);
    CMat::from_row_slice(2, 2, &[ZERO, -i, i, ZERO])
}

pub fn pauli_z() -> CMat {
    CMat::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
}

pub fn hadamard() -> CMat {
    let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    CMat::from_row_slice(2, 2, &[h, h, h, -h])
}

pub fn is_unitary(u: &CMat, tol: f64) -> bool {
    u.is_square() && max_abs_diff(&(u.adjoint() * u), &CMat::identity(u.nrows(), u.nrows())) <= tol
}
