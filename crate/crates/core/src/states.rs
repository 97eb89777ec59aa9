//! Canonical states: CQ states, the purified source
//! `|ψ⟩ = Σ_z √P(z) |z⟩_A |z⟩_A' |φ(z)⟩_BC` and its conjugate-basis sibling,
//! Fourier measurements, n-fold tensor powers, the lifted linear permutation
//! `U_f` and symmetric channels.
//!
//! Subsystems are always ordered `(A, A', B, C)`; after a tensor power each
//! group is contiguous, `(A^n, A'^n, B^n, C^n)`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::codes::{self, FieldMatrix};
use crate::config::{operator_dim, TOL};
use crate::entropy::BipartiteState;
use crate::error::{validation, Error, Result};
use crate::linalg::{
    self, herm_eig, is_unitary, max_abs_diff, CMat, CVec, DensityMatrix, HermitianMatrix, SpectralDecomposition, ZERO,
};

/// Nonnegative weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector(Vec<f64>);

impl ProbabilityVector {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return validation("probability vector must be non-empty");
        }
        if let Some(bad) = p.iter().find(|x| !(**x >= 0.0) || !x.is_finite()) {
            return validation(format!("probability {bad} is negative or not finite"));
        }
        let s: f64 = p.iter().sum();
        if (s - 1.0).abs() > TOL.probability {
            return validation(format!("probabilities sum to {s}, expected 1"));
        }
        Ok(ProbabilityVector(p))
    }

    /// Rescales nonnegative weights to unit sum.
    pub fn normalized(w: Vec<f64>) -> Result<Self> {
        let s: f64 = w.iter().sum();
        if !(s > 0.0) {
            return validation("weights must have positive sum");
        }
        Self::new(w.into_iter().map(|x| x / s).collect())
    }

    pub fn uniform(len: usize) -> Self {
        ProbabilityVector(vec![1.0 / len as f64; len])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(0.0, f64::max)
    }
}

/// A classical-quantum channel `z -> φ(z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CQChannel {
    outputs: Vec<DensityMatrix>,
}

impl CQChannel {
    pub fn new(outputs: Vec<DensityMatrix>) -> Result<Self> {
        if outputs.len() < 2 {
            return validation(format!("a channel needs at least two inputs, got {}", outputs.len()));
        }
        let dim = outputs[0].dim();
        if outputs.iter().any(|o| o.dim() != dim) {
            return validation("channel outputs must share one dimension");
        }
        Ok(CQChannel { outputs })
    }

    pub fn inputs(&self) -> usize {
        self.outputs.len()
    }

    pub fn output_dim(&self) -> usize {
        self.outputs[0].dim()
    }

    pub fn outputs(&self) -> &[DensityMatrix] {
        &self.outputs
    }

    pub fn output(&self, z: usize) -> &DensityMatrix {
        &self.outputs[z]
    }

    /// Whether every output is (numerically) pure.
    pub fn has_pure_outputs(&self) -> bool {
        self.outputs.iter().all(|o| purification_rank(o) == 1)
    }
}

fn block_diag(blocks: &[CMat]) -> CMat {
    let total: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = CMat::zeros(total, total);
    let mut off = 0;
    for b in blocks {
        let n = b.nrows();
        out.view_mut((off, off), (n, n)).copy_from(b);
        off += n;
    }
    out
}

/// `Σ_z P(z) |z⟩⟨z| ⊗ φ(z)` on `Z ⊗ B`.
pub fn build_cq_state(p: &ProbabilityVector, w: &CQChannel) -> Result<BipartiteState> {
    if p.len() != w.inputs() {
        return validation(format!("distribution has {} entries but the channel has {} inputs", p.len(), w.inputs()));
    }
    let blocks: Vec<CMat> =
        p.as_slice().iter().zip(w.outputs()).map(|(&pz, o)| o.matrix() * Complex64::new(pz, 0.0)).collect();
    let state = DensityMatrix::new(HermitianMatrix::hermitian_part(block_diag(&blocks)))?;
    BipartiteState::new(state, w.inputs(), w.output_dim())
}

/// Builds a classical-quantum state from unnormalized blocks `p_x ρ_x`.
pub fn cq_state_from_blocks(blocks: &[CMat]) -> Result<BipartiteState> {
    let dim_b = blocks.first().map_or(0, |b| b.nrows());
    let state = DensityMatrix::new(HermitianMatrix::hermitian_part(block_diag(blocks)))?;
    BipartiteState::new(state, blocks.len(), dim_b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum System {
    A,
    APrime,
    B,
    C,
}

impl System {
    fn index(self) -> usize {
        match self {
            System::A => 0,
            System::APrime => 1,
            System::B => 2,
            System::C => 3,
        }
    }
}

/// Which register holds the user-supplied outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceFamily {
    /// `Σ_z √P_Z(z) |z⟩_A |z⟩_A' |φ(z)⟩_BC`, outputs on `B`, purifier on `C`.
    Standard,
    /// `Σ_x √P_X(x) |x̃⟩_A |x⟩_A' |θ(x)⟩_BC`, outputs on `C`, purifier on `B`.
    Conjugate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    Computational,
    /// Eigenbasis of the shift operator, `|x̃⟩ = d^{-1/2} Σ_z ω^{xz} |z⟩`.
    Conjugate,
}

/// Pure state on `A^n ⊗ A'^n ⊗ B^n ⊗ C^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct PurifiedSource {
    amplitudes: CVec,
    d: usize,
    copies: usize,
    dim_b: usize,
    dim_c: usize,
    family: SourceFamily,
    distribution: ProbabilityVector,
}

/// Eigenvalues at rounding level are dropped. Anything larger is kept:
/// fidelities of the purification move like the square root of what is lost.
fn purification_cut(e: &SpectralDecomposition) -> f64 {
    1e-15 * e.eigenvalues.len() as f64 * e.max_eigenvalue()
}

fn purification_rank(rho: &DensityMatrix) -> usize {
    let e = herm_eig(rho);
    let cut = purification_cut(&e);
    e.eigenvalues.iter().filter(|&&x| x > cut).count()
}

/// `Σ_k √λ_k |e_k⟩ ⊗ |k⟩` padded to `purifier_dim` on the second factor.
/// With `purifier_first` the factors are swapped.
fn purify(rho: &DensityMatrix, purifier_dim: usize, purifier_first: bool) -> CVec {
    let e = herm_eig(rho);
    let cut = purification_cut(&e);
    let dim = rho.dim();
    let mut v = CVec::zeros(dim * purifier_dim);
    for (k, &lambda) in e.eigenvalues.iter().enumerate().filter(|(_, &l)| l > cut) {
        let amp = lambda.sqrt();
        for i in 0..dim {
            let idx = if purifier_first { k * dim + i } else { i * purifier_dim + k };
            v[idx] = e.eigenvectors[(i, k)] * amp;
        }
    }
    v
}

/// Fourier matrix over `Z_d^n` whose columns are the conjugate basis vectors.
pub fn fourier_matrix(d: usize, n: usize) -> CMat {
    let dim = d.pow(n as u32);
    let norm = (dim as f64).sqrt().recip();
    CMat::from_fn(dim, dim, |z, x| {
        let zv = codes::index_to_vector(z, d as u32, n);
        let xv = codes::index_to_vector(x, d as u32, n);
        let dot: usize = zv.iter().zip(&xv).map(|(&a, &b)| a as usize * b as usize).sum::<usize>() % d;
        Complex64::from_polar(norm, 2.0 * PI * dot as f64 / d as f64)
    })
}

fn build_source(p: &ProbabilityVector, w: &CQChannel, family: SourceFamily) -> Result<PurifiedSource> {
    let d = w.inputs();
    if p.len() != d {
        return validation(format!("distribution has {} entries but the channel has {d} inputs", p.len()));
    }
    let out_dim = w.output_dim();
    let purifier = w.outputs().iter().map(purification_rank).max().unwrap_or(1);
    let (dim_b, dim_c) = match family {
        SourceFamily::Standard => (out_dim, purifier),
        SourceFamily::Conjugate => (purifier, out_dim),
    };
    let bc = dim_b * dim_c;
    let mut amps = CVec::zeros(d * d * bc);
    for (z, out) in w.outputs().iter().enumerate() {
        let phi = purify(out, purifier, family == SourceFamily::Conjugate);
        let s = p.as_slice()[z].sqrt();
        for (k, amp) in phi.iter().enumerate() {
            // |z⟩_A |z⟩_A' |φ⟩_BC
            amps[(z * d + z) * bc + k] = amp * s;
        }
    }
    if family == SourceFamily::Conjugate {
        // |x⟩_A -> |x̃⟩_A
        let f = fourier_matrix(d, 1);
        let rest = d * bc;
        let mut rotated = CVec::zeros(amps.len());
        for a in 0..d {
            for x in 0..d {
                let c = f[(a, x)];
                if c == ZERO {
                    continue;
                }
                for r in 0..rest {
                    rotated[a * rest + r] += c * amps[x * rest + r];
                }
            }
        }
        amps = rotated;
    }
    Ok(PurifiedSource { amplitudes: amps, d, copies: 1, dim_b, dim_c, family, distribution: p.clone() })
}

/// The purification `Σ_z √P_Z(z) |z⟩_A |z⟩_A' |φ(z)⟩_BC`; mixed outputs are
/// purified into `C` of dimension equal to the largest output rank.
pub fn purify_source(p: &ProbabilityVector, w: &CQChannel) -> Result<PurifiedSource> {
    build_source(p, w, SourceFamily::Standard)
}

/// The sibling `Σ_x √P_X(x) |x̃⟩_A |x⟩_A' |θ(x)⟩_BC` with `θ(x)` the channel
/// outputs on `C`, purified into `B`.
pub fn purify_source_conjugate(p: &ProbabilityVector, theta: &CQChannel) -> Result<PurifiedSource> {
    build_source(p, theta, SourceFamily::Conjugate)
}

/// Unnormalized conditional states on the kept registers after measuring
/// register `measured` in the basis given by the columns of `basis`.
fn outcome_blocks(
    amps: &CVec,
    dims: &[usize],
    measured: usize,
    basis: Option<&CMat>,
    keep: &[usize],
) -> Result<Vec<CMat>> {
    let kept: usize = keep.iter().map(|&k| dims[k]).product();
    operator_dim(kept, 1)?;
    let mut perm = vec![measured];
    perm.extend((0..dims.len()).filter(|&i| i != measured));
    let moved = linalg::permute_subsystems(amps, dims, &perm)?;
    let rest_dims: Vec<usize> = perm[1..].iter().map(|&i| dims[i]).collect();
    let keep_rest: Vec<usize> =
        keep.iter().map(|k| perm[1..].iter().position(|p| p == k).expect("measured register cannot be kept")).collect();
    let dm = dims[measured];
    let dr = amps.len() / dm;
    let psi = CMat::from_fn(dm, dr, |i, r| moved[i * dr + r]);
    let rows = match basis {
        Some(u) => u.adjoint() * psi,
        None => psi,
    };
    (0..dm)
        .map(|k| {
            let v = CVec::from_iterator(dr, rows.row(k).iter().copied());
            linalg::reduce_pure(&v, &rest_dims, &keep_rest)
        })
        .collect()
}

fn reject_a(keep: &[System]) -> Result<()> {
    if keep.contains(&System::A) {
        return validation("the measured register A cannot also be kept");
    }
    Ok(())
}

impl PurifiedSource {
    pub fn amplitudes(&self) -> &CVec {
        &self.amplitudes
    }

    /// Alphabet size of one copy of `A`.
    pub fn alphabet(&self) -> usize {
        self.d
    }

    pub fn copies(&self) -> usize {
        self.copies
    }

    pub fn family(&self) -> SourceFamily {
        self.family
    }

    pub fn distribution(&self) -> &ProbabilityVector {
        &self.distribution
    }

    /// Dimensions of `(A^n, A'^n, B^n, C^n)`.
    pub fn dims(&self) -> [usize; 4] {
        let n = self.copies as u32;
        [self.d.pow(n), self.d.pow(n), self.dim_b.pow(n), self.dim_c.pow(n)]
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    fn keep_indices(keep: &[System]) -> Vec<usize> {
        let mut k: Vec<usize> = keep.iter().map(|s| s.index()).collect();
        k.sort_unstable();
        k.dedup();
        k
    }

    /// Reduced state on the listed systems.
    pub fn reduced(&self, keep: &[System]) -> Result<DensityMatrix> {
        let m = linalg::reduce_pure(&self.amplitudes, &self.dims(), &Self::keep_indices(keep))?;
        Ok(DensityMatrix::from_hermitian_unchecked(HermitianMatrix::hermitian_part(m)))
    }

    /// CQ state of the outcome of measuring all of `A^n` in `basis` against
    /// the kept systems.
    pub fn measure_a(&self, basis: Basis, keep: &[System]) -> Result<BipartiteState> {
        reject_a(keep)?;
        operator_dim(self.d, self.copies)?;
        let u = match basis {
            Basis::Computational => None,
            Basis::Conjugate => Some(fourier_matrix(self.d, self.copies)),
        };
        let blocks = outcome_blocks(&self.amplitudes, &self.dims(), 0, u.as_ref(), &Self::keep_indices(keep))?;
        cq_state_from_blocks(&blocks)
    }

    fn split_dims(&self, m: usize) -> Result<Vec<usize>> {
        if m > self.copies {
            return validation(format!("split {m} exceeds the {} copies", self.copies));
        }
        let [_, ap, b, c] = self.dims();
        Ok(vec![self.d.pow(m as u32), self.d.pow((self.copies - m) as u32), ap, b, c])
    }

    /// Measures the trailing `n - m` digits of `A^n` (the register `Â`) in
    /// `basis`, tracing out the leading `m` digits (`Ǎ`).
    pub fn measure_hat(&self, m: usize, basis: Basis, keep: &[System]) -> Result<BipartiteState> {
        reject_a(keep)?;
        let dims = self.split_dims(m)?;
        operator_dim(self.d, self.copies - m)?;
        let u = match basis {
            Basis::Computational => None,
            Basis::Conjugate => Some(fourier_matrix(self.d, self.copies - m)),
        };
        // Registers: 0 = Ǎ, 1 = Â, 2 = A', 3 = B, 4 = C.
        let keep: Vec<usize> = Self::keep_indices(keep).into_iter().map(|k| k + 1).collect();
        let blocks = outcome_blocks(&self.amplitudes, &dims, 1, u.as_ref(), &keep)?;
        cq_state_from_blocks(&blocks)
    }

    /// Measures `A^n` computationally and groups outcomes by the leading `m`
    /// digits `ž`. Returns, for each `ž` in lexicographic order, the
    /// unnormalized states `P(ž, ẑ) ρ_{ž,ẑ}` on the kept systems indexed by `ẑ`.
    pub fn syndrome_blocks(&self, m: usize, keep: &[System]) -> Result<Vec<Vec<CMat>>> {
        reject_a(keep)?;
        let dims = self.split_dims(m)?;
        let blocks = outcome_blocks(&self.amplitudes, &self.dims(), 0, None, &Self::keep_indices(keep))?;
        let per = dims[1];
        Ok(blocks.chunks(per).map(|c| c.to_vec()).collect())
    }
}

/// Alias for [`PurifiedSource::measure_a`] in the conjugate basis.
pub fn measure_conjugate(psi: &PurifiedSource, keep: &[System]) -> Result<BipartiteState> {
    psi.measure_a(Basis::Conjugate, keep)
}

/// `n`-fold tensor power with factors regrouped to `(A^n, A'^n, B^n, C^n)`.
pub fn tensor_power(psi: &PurifiedSource, n: usize) -> Result<PurifiedSource> {
    if psi.copies != 1 {
        return validation("tensor powers are taken of single-copy sources");
    }
    if n == 0 {
        return validation("tensor power needs n >= 1");
    }
    let per_copy = psi.amplitudes.len();
    let mut total = 1usize;
    for _ in 0..n {
        total = total.checked_mul(per_copy).filter(|&t| t <= TOL.max_pure_dim).ok_or_else(|| {
            Error::Resource(format!(
                "{n}-fold power of a {per_copy}-dimensional state exceeds {} amplitudes",
                TOL.max_pure_dim
            ))
        })?;
    }
    let mut amps = psi.amplitudes.clone();
    for _ in 1..n {
        amps = linalg::kron_vec(&amps, &psi.amplitudes);
    }
    let single = [psi.d, psi.d, psi.dim_b, psi.dim_c];
    let dims: Vec<usize> = (0..n).flat_map(|_| single).collect();
    let perm: Vec<usize> = (0..4).flat_map(|g| (0..n).map(move |j| j * 4 + g)).collect();
    let amps = linalg::permute_subsystems(&amps, &dims, &perm)?;
    Ok(PurifiedSource { amplitudes: amps, copies: n, ..psi.clone() })
}

/// Applies `U_f |z^n⟩_A = |M z^n⟩_A` for an invertible `M` over `Z_d`.
pub fn apply_linear_permutation(psi: &PurifiedSource, m: &FieldMatrix) -> Result<PurifiedSource> {
    let n = psi.copies;
    if m.modulus() as usize != psi.d || m.rows() != n || m.cols() != n {
        return validation(format!(
            "permutation matrix must be {n}x{n} over Z_{}, got {}x{} over Z_{}",
            psi.d,
            m.rows(),
            m.cols(),
            m.modulus()
        ));
    }
    codes::invert(m)?;
    let da = psi.dims()[0];
    let rest = psi.amplitudes.len() / da;
    let mut out = CVec::zeros(psi.amplitudes.len());
    for a in 0..da {
        let z = codes::index_to_vector(a, m.modulus(), n);
        let target = codes::vector_to_index(&m.mul_vec(&z), m.modulus());
        for r in 0..rest {
            out[target * rest + r] = psi.amplitudes[a * rest + r];
        }
    }
    Ok(PurifiedSource { amplitudes: out, ..psi.clone() })
}

/// Unitaries `V(z)` with `φ(z) = V(z) φ(0) V(z)^†` acting simply transitively
/// on a channel's outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupAction {
    unitaries: Vec<CMat>,
}

const ACTION_TOL: f64 = 1e-8;

impl GroupAction {
    pub fn new(unitaries: Vec<CMat>) -> Result<Self> {
        let Some(first) = unitaries.first() else {
            return validation("group action needs at least one unitary");
        };
        let dim = first.nrows();
        for (z, u) in unitaries.iter().enumerate() {
            if u.nrows() != dim || !is_unitary(u, 1e-9) {
                return validation(format!("V({z}) is not a {dim}x{dim} unitary"));
            }
        }
        Ok(GroupAction { unitaries })
    }

    pub fn unitaries(&self) -> &[CMat] {
        &self.unitaries
    }

    fn act(&self, g: usize, rho: &HermitianMatrix) -> HermitianMatrix {
        rho.conjugate_by(&self.unitaries[g])
    }

    /// Checks the labeling `V(z) φ(0) V(z)^† = φ(z)` and that each pair of
    /// outputs is linked by exactly one group element.
    pub fn certify(&self, w: &CQChannel) -> Result<()> {
        let d = w.inputs();
        if self.unitaries.len() != d || self.unitaries[0].nrows() != w.output_dim() {
            return validation(format!(
                "group action has {} unitaries of size {}, channel has {d} outputs of size {}",
                self.unitaries.len(),
                self.unitaries[0].nrows(),
                w.output_dim()
            ));
        }
        for z in 0..d {
            let dev = self.act(z, w.output(0)).max_abs_diff(w.output(z));
            if dev > 1e-9 {
                return validation(format!("V({z}) φ(0) V({z})^† differs from φ({z}) by {dev:e}"));
            }
        }
        for z in 0..d {
            for zp in 0..d {
                let hits =
                    (0..d).filter(|&g| self.act(g, w.output(z)).max_abs_diff(w.output(zp)) <= ACTION_TOL).count();
                if hits != 1 {
                    return validation(format!(
                        "action is not simply transitive: {hits} group elements map φ({z}) to φ({zp})"
                    ));
                }
            }
        }
        Ok(())
    }
}

/// A channel together with a certified simply transitive action.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricChannel {
    channel: CQChannel,
    action: GroupAction,
}

impl SymmetricChannel {
    pub fn new(channel: CQChannel, action: GroupAction) -> Result<Self> {
        action.certify(&channel)?;
        Ok(SymmetricChannel { channel, action })
    }

    /// Outputs generated as `V(z) φ(0) V(z)^†`.
    pub fn from_action(base: &DensityMatrix, action: GroupAction) -> Result<Self> {
        let outputs =
            (0..action.unitaries.len()).map(|g| DensityMatrix::from_hermitian_unchecked(action.act(g, base))).collect();
        Self::new(CQChannel::new(outputs)?, action)
    }

    pub fn channel(&self) -> &CQChannel {
        &self.channel
    }

    pub fn action(&self) -> &GroupAction {
        &self.action
    }
}

/// Built-in symmetric channel families.
#[derive(Debug, Clone, PartialEq)]
pub enum SymmetricFamily {
    /// Outputs `V(z) φ(0) V(z)^†` for supplied unitaries.
    GroupUnitaries { base: DensityMatrix, unitaries: Vec<CMat> },
    /// Classical `d`-ary symmetric channel `W(y|z) = row[(y - z) mod d]`,
    /// embedded diagonally, with cyclic shifts as the action.
    ClassicalSymmetric { row: Vec<f64> },
    /// Qubit pure states `cos θ|0⟩ ± sin θ|1⟩` exchanged by the reflection `Z`.
    DihedralQubit { theta: f64 },
}

fn shift(d: usize, z: usize) -> CMat {
    CMat::from_fn(d, d, |i, j| if i == (j + z) % d { linalg::ONE } else { ZERO })
}

/// Classical binary symmetric channel with crossover `p`, embedded diagonally.
pub fn bsc(p: f64) -> Result<SymmetricChannel> {
    symmetric_channel(SymmetricFamily::ClassicalSymmetric { row: vec![1.0 - p, p] })
}

pub fn symmetric_channel(family: SymmetricFamily) -> Result<SymmetricChannel> {
    match family {
        SymmetricFamily::GroupUnitaries { base, unitaries } => {
            SymmetricChannel::from_action(&base, GroupAction::new(unitaries)?)
        }
        SymmetricFamily::ClassicalSymmetric { row } => {
            let d = row.len();
            let base = DensityMatrix::diagonal(&ProbabilityVector::new(row)?.0)?;
            SymmetricChannel::from_action(&base, GroupAction::new((0..d).map(|z| shift(d, z)).collect())?)
        }
        SymmetricFamily::DihedralQubit { theta } => {
            let v = CVec::from_vec(vec![Complex64::new(theta.cos(), 0.0), Complex64::new(theta.sin(), 0.0)]);
            let base = DensityMatrix::pure(&v)?;
            SymmetricChannel::from_action(&base, GroupAction::new(vec![CMat::identity(2, 2), linalg::pauli_z()])?)
        }
    }
}

/// Searches assignments `V(0) = I`, `V(z) ∈ {I, X, Y, Z}` for qubit outputs.
/// Finding nothing does not prove the channel has no symmetry.
pub fn search_pauli_action(w: &CQChannel) -> Option<GroupAction> {
    if w.output_dim() != 2 || w.inputs() > 4 {
        return None;
    }
    let paulis = [CMat::identity(2, 2), linalg::pauli_x(), linalg::pauli_y(), linalg::pauli_z()];
    let d = w.inputs();
    let combos = 4usize.pow((d - 1) as u32);
    (0..combos).find_map(|c| {
        let mut us = vec![paulis[0].clone()];
        let mut rem = c;
        for _ in 1..d {
            us.push(paulis[rem % 4].clone());
            rem /= 4;
        }
        let action = GroupAction::new(us).ok()?;
        action.certify(w).ok().map(|_| action)
    })
}

/// Verifies a supplied action, or searches Pauli candidates when none is given.
pub fn is_symmetric(w: &CQChannel, action: Option<&GroupAction>) -> bool {
    match action {
        Some(a) => a.certify(w).is_ok(),
        None => search_pauli_action(w).is_some(),
    }
}

/// Largest deviation of `V(z) φ(0) V(z)^†` from `φ(z)`.
pub fn action_residual(sc: &SymmetricChannel) -> f64 {
    let w = sc.channel();
    (0..w.inputs())
        .map(|z| max_abs_diff(sc.action.act(z, w.output(0)).matrix(), w.output(z).matrix()))
        .fold(0.0, f64::max)
}
