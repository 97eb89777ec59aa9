//! Rényi relative entropies (Petz and sandwiched), the Umegaki relative
//! entropy and the conditional entropies built from them. Logarithms are
//! base two throughout.
//!
//! The divergence functions accept any positive semidefinite second argument
//! so that the conditional entropies can use the unnormalized `1_A ⊗ σ_B`.

use crate::config::TOL;
use crate::error::{validation, Result};
use crate::ext::ExtReal;
use crate::linalg::{
    herm_eig, kron_hermitian, mat_pow, partial_trace_matrix, pow_of, support_map, DensityMatrix, HermitianMatrix,
};

/// A Rényi order `α > 0`. Order one selects the von Neumann limit.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct RenyiOrder(f64);

impl RenyiOrder {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return validation(format!("Rényi order must be positive and finite, got {alpha}"));
        }
        Ok(RenyiOrder(alpha))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_von_neumann(self) -> bool {
        self.0 == 1.0
    }

    /// The dual order `1/α`.
    pub fn dual(self) -> RenyiOrder {
        RenyiOrder(1.0 / self.0)
    }
}

/// A density matrix on `A ⊗ B`.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteState {
    state: DensityMatrix,
    dim_a: usize,
    dim_b: usize,
}

impl BipartiteState {
    pub fn new(state: DensityMatrix, dim_a: usize, dim_b: usize) -> Result<Self> {
        if dim_a == 0 || dim_b == 0 || dim_a * dim_b != state.dim() {
            return validation(format!(
                "bipartite split {dim_a}x{dim_b} does not match state dimension {}",
                state.dim()
            ));
        }
        Ok(BipartiteState { state, dim_a, dim_b })
    }

    pub fn state(&self) -> &DensityMatrix {
        &self.state
    }

    pub fn dim_a(&self) -> usize {
        self.dim_a
    }

    pub fn dim_b(&self) -> usize {
        self.dim_b
    }

    pub fn marginal_a(&self) -> DensityMatrix {
        self.marginal(0)
    }

    pub fn marginal_b(&self) -> DensityMatrix {
        self.marginal(1)
    }

    fn marginal(&self, keep: usize) -> DensityMatrix {
        let m = partial_trace_matrix(self.state.matrix(), &[self.dim_a, self.dim_b], &[keep])
            .expect("dimensions validated at construction");
        DensityMatrix::from_hermitian_unchecked(HermitianMatrix::hermitian_part(m))
    }

    /// The `x`-th diagonal block `<x|_A ρ_AB |x>_A` (unnormalized).
    pub fn block(&self, x: usize) -> HermitianMatrix {
        let b = self.dim_b;
        let m = self.state.matrix().view((x * b, x * b), (b, b)).into_owned();
        HermitianMatrix::hermitian_part(m)
    }

    /// Largest entry outside the diagonal `A`-blocks; zero for states
    /// classical on `A`.
    pub fn off_block_weight(&self) -> f64 {
        let b = self.dim_b;
        let m = self.state.matrix();
        let mut worst = 0.0f64;
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if i / b != j / b {
                    worst = worst.max(m[(i, j)].norm());
                }
            }
        }
        worst
    }
}

fn same_dims(rho: &HermitianMatrix, sigma: &HermitianMatrix) -> Result<()> {
    if rho.dim() != sigma.dim() {
        return validation(format!("divergence of operators with dimensions {} and {}", rho.dim(), sigma.dim()));
    }
    Ok(())
}

/// Weight of `rho` outside the support of `sigma`, relative to `tr rho`.
fn support_leak(rho: &HermitianMatrix, sigma: &HermitianMatrix) -> f64 {
    let eig = herm_eig(sigma);
    let proj = support_map(&eig, |_| 1.0);
    let inside = crate::linalg::trace_product(&proj, rho.matrix());
    let total = rho.trace();
    if total <= 0.0 {
        return 0.0;
    }
    ((total - inside) / total).max(0.0)
}

fn contained(rho: &HermitianMatrix, sigma: &HermitianMatrix) -> bool {
    support_leak(rho, sigma) <= TOL.support_leak
}

fn renyi_from_quasi(q: f64, alpha: f64) -> ExtReal {
    if q <= 0.0 {
        // Only reachable for α < 1 with orthogonal supports.
        return ExtReal::PosInfinity;
    }
    ExtReal::Finite(q.log2() / (alpha - 1.0))
}

/// Petz divergence `1/(α-1) log tr[ρ^α σ^{1-α}]` for PSD operators.
pub fn petz_divergence_psd(rho: &HermitianMatrix, sigma: &HermitianMatrix, alpha: f64) -> Result<ExtReal> {
    let alpha = RenyiOrder::new(alpha)?.value();
    same_dims(rho, sigma)?;
    if alpha == 1.0 {
        return umegaki_divergence_psd(rho, sigma);
    }
    if alpha > 1.0 && !contained(rho, sigma) {
        return Ok(ExtReal::PosInfinity);
    }
    let ra = mat_pow(rho, alpha)?;
    let sb = mat_pow(sigma, 1.0 - alpha)?;
    let q = crate::linalg::trace_product(ra.matrix(), sb.matrix());
    Ok(renyi_from_quasi(q, alpha))
}

pub fn petz_divergence(rho: &DensityMatrix, sigma: &DensityMatrix, alpha: f64) -> Result<ExtReal> {
    petz_divergence_psd(rho, sigma, alpha)
}

/// Sandwiched divergence `1/(α-1) log tr[(σ^{(1-α)/2α} ρ σ^{(1-α)/2α})^α]`.
pub fn sandwiched_divergence_psd(rho: &HermitianMatrix, sigma: &HermitianMatrix, alpha: f64) -> Result<ExtReal> {
    let alpha = RenyiOrder::new(alpha)?.value();
    same_dims(rho, sigma)?;
    if alpha == 1.0 {
        return umegaki_divergence_psd(rho, sigma);
    }
    if alpha > 1.0 && !contained(rho, sigma) {
        return Ok(ExtReal::PosInfinity);
    }
    let s = mat_pow(sigma, (1.0 - alpha) / (2.0 * alpha))?;
    let inner = s.conjugate_by_hermitian(rho);
    let eig = herm_eig(&inner);
    let cut = eig.support_threshold();
    let q: f64 = eig.eigenvalues.iter().filter(|&&x| x > cut).map(|&x| x.powf(alpha)).sum();
    Ok(renyi_from_quasi(q, alpha))
}

pub fn sandwiched_divergence(rho: &DensityMatrix, sigma: &DensityMatrix, alpha: f64) -> Result<ExtReal> {
    sandwiched_divergence_psd(rho, sigma, alpha)
}

/// Umegaki relative entropy `tr[ρ(log ρ - log σ)]`.
pub fn umegaki_divergence_psd(rho: &HermitianMatrix, sigma: &HermitianMatrix) -> Result<ExtReal> {
    same_dims(rho, sigma)?;
    if !contained(rho, sigma) {
        return Ok(ExtReal::PosInfinity);
    }
    let er = herm_eig(rho);
    let cut = er.support_threshold();
    let neg_entropy: f64 = er.eigenvalues.iter().filter(|&&x| x > cut).map(|&x| x * x.log2()).sum();
    let log_sigma = crate::linalg::mat_log2(sigma)?;
    let cross = crate::linalg::trace_product(rho.matrix(), log_sigma.matrix());
    Ok(ExtReal::Finite(neg_entropy - cross))
}

pub fn umegaki_divergence(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<ExtReal> {
    umegaki_divergence_psd(rho, sigma)
}

/// Von Neumann entropy `-tr ρ log ρ`.
pub fn von_neumann_entropy(rho: &HermitianMatrix) -> f64 {
    let e = herm_eig(rho);
    let cut = e.support_threshold();
    -e.eigenvalues.iter().filter(|&&x| x > cut).map(|&x| x * x.log2()).sum::<f64>()
}

/// `H(AB) - H(B)`.
pub fn von_neumann_cond(rho_ab: &BipartiteState) -> f64 {
    von_neumann_entropy(rho_ab.state()) - von_neumann_entropy(&rho_ab.marginal_b())
}

/// `tr_A[ρ_AB^α]`, the operator whose `1/α` power is the Sibson optimizer.
fn sibson_kernel(rho_ab: &BipartiteState, alpha: f64) -> HermitianMatrix {
    let eig = herm_eig(rho_ab.state());
    let pow = pow_of(&eig, alpha);
    let m = partial_trace_matrix(pow.matrix(), &[rho_ab.dim_a(), rho_ab.dim_b()], &[1])
        .expect("dimensions validated at construction");
    HermitianMatrix::hermitian_part(m)
}

/// Optimal `σ_B` in the Petz conditional entropy: the normalized
/// `(tr_A ρ_AB^α)^{1/α}`.
pub fn sibson_optimizer(rho_ab: &BipartiteState, alpha: f64) -> Result<DensityMatrix> {
    let alpha = RenyiOrder::new(alpha)?.value();
    let kernel = sibson_kernel(rho_ab, alpha);
    // Rescale first: for small α the power 1/α underflows otherwise.
    let top = herm_eig(&kernel).max_eigenvalue();
    DensityMatrix::normalized(mat_pow(&kernel.scale(1.0 / top), 1.0 / alpha)?)
}

/// `log2 tr[K^p]` for PSD `K`, without overflow or underflow in `K^p`.
fn log2_trace_power(k: &HermitianMatrix, p: f64) -> f64 {
    let eig = herm_eig(k);
    let top = eig.max_eigenvalue();
    let cut = eig.support_threshold();
    let rest: f64 = eig.eigenvalues.iter().filter(|&&x| x > cut).map(|x| (x / top).powf(p)).sum();
    p * top.log2() + rest.log2()
}

fn id_tensor(dim_a: usize, sigma_b: &HermitianMatrix) -> HermitianMatrix {
    kron_hermitian(&HermitianMatrix::identity(dim_a), sigma_b)
}

/// `H̄_α^↑(A|B) = -D̄_α(ρ_AB, 1_A ⊗ σ*_B)` with the Sibson optimizer.
pub fn cond_entropy_petz_up(rho_ab: &BipartiteState, alpha: f64) -> Result<f64> {
    let order = RenyiOrder::new(alpha)?;
    if order.is_von_neumann() {
        return Ok(von_neumann_cond(rho_ab));
    }
    let sigma = sibson_optimizer(rho_ab, alpha)?;
    let d = petz_divergence_psd(rho_ab.state(), &id_tensor(rho_ab.dim_a(), &sigma), alpha)?;
    Ok(-d.expect_finite("Petz divergence to the Sibson optimizer"))
}

/// `-D̄_α(ρ_AB, 1_A ⊗ σ_B)` for an arbitrary `σ_B`.
pub fn petz_cond_at(rho_ab: &BipartiteState, sigma_b: &DensityMatrix, alpha: f64) -> Result<ExtReal> {
    let d = petz_divergence_psd(rho_ab.state(), &id_tensor(rho_ab.dim_a(), sigma_b), alpha)?;
    Ok(match d {
        ExtReal::Finite(v) => ExtReal::Finite(-v),
        ExtReal::PosInfinity => ExtReal::PosInfinity,
    })
}

/// Closed form `α/(1-α) log tr[(tr_A ρ_AB^α)^{1/α}]` of `H̄_α^↑`.
pub fn cond_entropy_petz_up_closed_form(rho_ab: &BipartiteState, alpha: f64) -> Result<f64> {
    let order = RenyiOrder::new(alpha)?;
    if order.is_von_neumann() {
        return Ok(von_neumann_cond(rho_ab));
    }
    let kernel = sibson_kernel(rho_ab, alpha);
    Ok(alpha / (1.0 - alpha) * log2_trace_power(&kernel, 1.0 / alpha))
}

/// `H̃_α^↓(A|B) = -D̃_α(ρ_AB, 1_A ⊗ ρ_B)`.
pub fn cond_entropy_sand_down(rho_ab: &BipartiteState, alpha: f64) -> Result<f64> {
    let order = RenyiOrder::new(alpha)?;
    if order.is_von_neumann() {
        return Ok(von_neumann_cond(rho_ab));
    }
    let marginal = rho_ab.marginal_b();
    let d = sandwiched_divergence_psd(rho_ab.state(), &id_tensor(rho_ab.dim_a(), &marginal), alpha)?;
    Ok(-d.expect_finite("sandwiched divergence to the marginal"))
}
