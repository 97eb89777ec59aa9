//! Certified solvers for the optimal guessing probability of an ensemble and
//! for the largest fidelity of a CQ state to `π_X ⊗ σ`.
//!
//! Both solvers return a bracket `[lower, upper]`: `lower` is attained by an
//! explicit feasible point (a measurement, or a density matrix `σ`) and
//! `upper` comes from a dual certificate.

use nalgebra::{Cholesky, DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::entropy::BipartiteState;
use crate::error::{validation, Error, Result};
use crate::linalg::{self, herm_eig, trace_norm, CMat, DensityMatrix, HermitianMatrix, SpectralDecomposition};
use crate::states::ProbabilityVector;

pub const DEFAULT_TOL: f64 = 1e-8;
/// Smallest gap the solvers accept as a target; rounding dominates below it.
pub const MIN_TOL: f64 = 1e-13;

/// A finite ensemble `{p_x, ρ_x}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    priors: ProbabilityVector,
    states: Vec<DensityMatrix>,
}

impl Ensemble {
    pub fn new(priors: ProbabilityVector, states: Vec<DensityMatrix>) -> Result<Self> {
        if priors.len() != states.len() {
            return validation(format!("{} priors for {} states", priors.len(), states.len()));
        }
        if states.is_empty() {
            return validation("ensemble must contain at least one state");
        }
        let dim = states[0].dim();
        if states.iter().any(|s| s.dim() != dim) {
            return validation("ensemble states must share one dimension");
        }
        Ok(Ensemble { priors, states })
    }

    /// Splits unnormalized operators `q_x ρ_x` into their total weight and
    /// the normalized ensemble. Zero operators get prior zero.
    pub fn from_weighted(ops: &[HermitianMatrix]) -> Result<(f64, Ensemble)> {
        let traces: Vec<f64> = ops.iter().map(|o| o.trace().max(0.0)).collect();
        let total: f64 = traces.iter().sum();
        if !(total > 0.0) {
            return validation("ensemble has zero total weight");
        }
        let dim = ops.first().map_or(0, |o| o.dim());
        let states =
            ops.iter()
                .zip(&traces)
                .map(|(o, &t)| {
                    if t > 0.0 {
                        DensityMatrix::new(o.scale(1.0 / t))
                    } else {
                        Ok(DensityMatrix::maximally_mixed(dim))
                    }
                })
                .collect::<Result<Vec<_>>>()?;
        let priors = ProbabilityVector::normalized(traces)?;
        Ok((total, Ensemble::new(priors, states)?))
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }

    pub fn priors(&self) -> &ProbabilityVector {
        &self.priors
    }

    pub fn states(&self) -> &[DensityMatrix] {
        &self.states
    }

    /// The operators `p_x ρ_x`.
    pub fn weighted(&self) -> Vec<HermitianMatrix> {
        self.priors.as_slice().iter().zip(&self.states).map(|(&p, s)| s.scale(p)).collect()
    }

    /// Success probability of a measurement.
    pub fn success(&self, measurement: &[HermitianMatrix]) -> f64 {
        self.weighted().iter().zip(measurement).map(|(a, m)| linalg::trace_product(a.matrix(), m.matrix())).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CertifiedValue {
    pub lower: f64,
    pub upper: f64,
    pub gap: f64,
}

impl CertifiedValue {
    pub fn new(lower: f64, upper: f64) -> Self {
        CertifiedValue { lower, upper, gap: (upper - lower).max(0.0) }
    }

    pub fn exact(v: f64) -> Self {
        Self::new(v, v)
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    fn non_convergence(&self, what: &str) -> Error {
        Error::NonConvergence {
            message: format!("{what} stopped with gap {:e}", self.gap),
            lower: self.lower,
            upper: self.upper,
        }
    }
}

/// `(1 + ||p0 ρ0 - p1 ρ1||_1) / 2`.
pub fn helstrom(p0: f64, rho0: &DensityMatrix, p1: f64, rho1: &DensityMatrix) -> Result<f64> {
    if rho0.dim() != rho1.dim() {
        return validation("Helstrom states must share one dimension");
    }
    let diff = rho0.scale(p0).sub(&rho1.scale(p1));
    Ok(0.5 * (p0 + p1 + trace_norm(&diff)))
}

/// Relative eigenvalue level of rounding noise in assembled states.
const NOISE_FLOOR: f64 = 64.0 * f64::EPSILON;

/// Ensemble operators restricted to the support of their sum.
struct Compressed {
    basis: CMat,
    ops: Vec<CMat>,
}

impl Compressed {
    fn new(ops: &[HermitianMatrix]) -> Self {
        Self::with_basis(ops, |eig| eig.support_basis())
    }

    /// Keeps everything above rounding noise. Fidelities move like the square
    /// root of discarded weight, so the usual support cutoff is too coarse.
    fn fine(ops: &[HermitianMatrix]) -> Self {
        Self::with_basis(ops, |eig| {
            let cut = NOISE_FLOOR * eig.max_eigenvalue();
            let keep: Vec<usize> = (0..eig.eigenvalues.len()).filter(|&j| eig.eigenvalues[j] > cut).collect();
            eig.eigenvectors.select_columns(keep.iter())
        })
    }

    fn with_basis(ops: &[HermitianMatrix], support: impl Fn(&SpectralDecomposition) -> CMat) -> Self {
        let dim = ops[0].dim();
        let sum = ops.iter().fold(HermitianMatrix::from_diagonal(&vec![0.0; dim]), |s, o| s.add(o));
        let basis = support(&herm_eig(&sum));
        let ops = ops.iter().map(|o| linalg::compress(o.matrix(), &basis).into_matrix()).collect();
        Compressed { basis, ops }
    }

    fn rank(&self) -> usize {
        self.basis.ncols()
    }

    /// Lifts a measurement on the support to the full space, assigning the
    /// kernel projector to hypothesis 0.
    fn lift(&self, povm: &[CMat]) -> Vec<HermitianMatrix> {
        let d = self.basis.nrows();
        let kernel = CMat::identity(d, d) - &self.basis * self.basis.adjoint();
        povm.iter()
            .enumerate()
            .map(|(x, p)| {
                let mut full = &self.basis * p * self.basis.adjoint();
                if x == 0 {
                    full += &kernel;
                }
                HermitianMatrix::hermitian_part(full)
            })
            .collect()
    }

    fn lift_operator(&self, y: &CMat) -> HermitianMatrix {
        HermitianMatrix::hermitian_part(&self.basis * y * self.basis.adjoint())
    }
}

fn inverse_sqrt(eig: &SpectralDecomposition) -> CMat {
    linalg::support_map(eig, |x| 1.0 / x.sqrt())
}

fn success_on(ops: &[CMat], povm: &[CMat]) -> f64 {
    ops.iter().zip(povm).map(|(a, p)| linalg::trace_product(a, p)).sum()
}

fn pgm_on_support(ops: &[CMat]) -> Vec<CMat> {
    let r = ops[0].nrows();
    let sum = ops.iter().fold(CMat::zeros(r, r), |s, o| s + o);
    let s = inverse_sqrt(&herm_eig(&HermitianMatrix::hermitian_part(sum)));
    ops.iter().map(|a| herm(&s * a * &s)).collect()
}

fn herm(m: CMat) -> CMat {
    HermitianMatrix::hermitian_part(m).into_matrix()
}

/// `Π_x = S^{-1/2} p_x ρ_x S^{-1/2}` with the kernel of `S = Σ p_x ρ_x`
/// assigned to hypothesis 0, and its success probability.
pub fn pretty_good_measurement(e: &Ensemble) -> Result<(Vec<HermitianMatrix>, f64)> {
    let c = Compressed::new(&e.weighted());
    let povm = pgm_on_support(&c.ops);
    let success = success_on(&c.ops, &povm);
    Ok((c.lift(&povm), success))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: DEFAULT_TOL, max_iterations: 10_000 }
    }
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        SolverOptions { tol, ..Self::default() }
    }

    fn check(&self) -> Result<()> {
        if !(self.tol >= MIN_TOL && self.tol < 1.0) {
            return validation(format!("solver tolerance {:e} must lie in [{MIN_TOL:e}, 1)", self.tol));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct PguessSolution {
    pub value: CertifiedValue,
    /// Measurement attaining `value.lower`.
    pub measurement: Vec<HermitianMatrix>,
    /// Operator `Y ⪰ p_x ρ_x` for all `x` with `tr Y = value.upper`.
    pub dual: HermitianMatrix,
    /// Bracket after each barrier stage; `lower` never decreases.
    pub history: Vec<CertifiedValue>,
}

/// Certified optimal guessing probability, `max_Π Σ_x p_x tr[Π_x ρ_x]`.
pub fn pguess(e: &Ensemble, tol: f64) -> Result<CertifiedValue> {
    Ok(solve_pguess(e, SolverOptions::with_tol(tol))?.value)
}

/// Cholesky factorization that fails on indefinite input. The complex
/// factorization in nalgebra takes square roots of negative pivots instead
/// of rejecting them.
fn cholesky_pd(m: CMat) -> Option<Cholesky<Complex64, nalgebra::Dyn>> {
    let ch = Cholesky::new(m)?;
    let ok = ch.l_dirty().diagonal().iter().all(|z| z.re > 0.0 && z.im.abs() <= 1e-8 * z.re);
    ok.then_some(ch)
}

/// `Y^{-1}` and `log det Y` when `Y ≻ 0`.
fn inverse_logdet(m: &CMat) -> Option<(CMat, f64)> {
    let ch = cholesky_pd(m.clone())?;
    let logdet = 2.0 * ch.l_dirty().diagonal().iter().map(|z| z.re.ln()).sum::<f64>();
    Some((ch.inverse(), logdet))
}

struct Barrier<'a> {
    ops: &'a [CMat],
    mu: f64,
}

impl Barrier<'_> {
    /// `tr Y - μ Σ_x log det(Y - A_x)` with the slack inverses, or `None`
    /// outside the feasible cone.
    fn eval(&self, y: &CMat) -> Option<(f64, Vec<CMat>)> {
        let mut value = linalg::real_trace(y);
        let mut inverses = Vec::with_capacity(self.ops.len());
        for a in self.ops {
            let (w, logdet) = inverse_logdet(&(y - a))?;
            value -= self.mu * logdet;
            inverses.push(w);
        }
        Some((value, inverses))
    }

    /// Newton direction and the decrement `-<∇, Δ>`.
    fn newton(&self, inverses: &[CMat]) -> Option<(CMat, f64)> {
        let r = inverses[0].nrows();
        let mut grad = CMat::identity(r, r);
        let mut hess = CMat::zeros(r * r, r * r);
        for w in inverses {
            grad -= w * Complex64::new(self.mu, 0.0);
            hess += linalg::kron(&w.transpose(), w) * Complex64::new(self.mu, 0.0);
        }
        let rhs = nalgebra::DVector::from_iterator(r * r, grad.iter().map(|z| -z));
        let scale = (0..r * r).map(|i| hess[(i, i)].re).fold(0.0, f64::max);
        let mut shift = 0.0;
        let sol = loop {
            let mut h = hess.clone();
            for i in 0..r * r {
                h[(i, i)] += shift;
            }
            if let Some(ch) = cholesky_pd(h) {
                break ch.solve(&rhs);
            }
            shift = if shift == 0.0 { 1e-15 * scale } else { shift * 100.0 };
            if !(shift > 0.0 && shift <= 1e-6 * scale) {
                return None;
            }
        };
        let delta = herm(CMat::from_column_slice(r, r, sol.as_slice()));
        let dec = -linalg::trace_product(&grad, &delta);
        Some((delta, dec))
    }
}

/// Primal measurement from the barrier slacks: `Π_x ∝ μ (Y - A_x)^{-1}`,
/// renormalized to sum to the identity.
fn primal_from_slacks(mu: f64, inverses: &[CMat]) -> Vec<CMat> {
    let r = inverses[0].nrows();
    let scaled: Vec<CMat> = inverses.iter().map(|w| herm(w * Complex64::new(mu, 0.0))).collect();
    let total = scaled.iter().fold(CMat::zeros(r, r), |s, p| s + p);
    let t = inverse_sqrt(&herm_eig(&HermitianMatrix::hermitian_part(total)));
    scaled.iter().map(|p| herm(&t * p * &t)).collect()
}

/// Dual point `sym(Σ A_x Π_x) + λ I` with `λ` the largest violation.
fn dual_from_primal(ops: &[CMat], povm: &[CMat]) -> CMat {
    let r = ops[0].nrows();
    let y0 = herm(ops.iter().zip(povm).fold(CMat::zeros(r, r), |s, (a, p)| s + a * p));
    let lambda =
        ops.iter().map(|a| herm_eig(&HermitianMatrix::hermitian_part(a - &y0)).max_eigenvalue()).fold(0.0, f64::max);
    y0 + CMat::identity(r, r) * Complex64::new(lambda, 0.0)
}

/// Dual log-barrier path-following for the guessing SDP on the support of
/// `Σ p_x ρ_x`, seeded with the pretty good measurement.
pub fn solve_pguess(e: &Ensemble, opts: SolverOptions) -> Result<PguessSolution> {
    opts.check()?;
    let weighted = e.weighted();
    let c = Compressed::new(&weighted);
    let r = c.rank();
    let k = c.ops.len();
    if r * r > 1024 {
        return Err(Error::Resource(format!(
            "guessing problem on a {r}-dimensional support exceeds the dimension limit 32"
        )));
    }

    if r == 1 || k == 1 {
        let vals: Vec<f64> =
            c.ops.iter().map(|a| herm_eig(&HermitianMatrix::hermitian_part(a.clone())).max_eigenvalue()).collect();
        let best = (0..k).fold(0, |b, x| if vals[x] > vals[b] { x } else { b });
        let povm: Vec<CMat> =
            (0..k).map(|x| if x == best { CMat::identity(r, r) } else { CMat::zeros(r, r) }).collect();
        let lower = success_on(&c.ops, &povm);
        let y = dual_from_primal(&c.ops, &povm);
        let value = CertifiedValue::new(lower, linalg::real_trace(&y).max(lower));
        return Ok(PguessSolution {
            value,
            measurement: c.lift(&povm),
            dual: c.lift_operator(&y),
            history: vec![value],
        });
    }

    let mut best_povm = pgm_on_support(&c.ops);
    let mut lower = success_on(&c.ops, &best_povm);
    let (guess, prior) = c
        .ops
        .iter()
        .map(linalg::real_trace)
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |b, (x, p)| if p > b.1 { (x, p) } else { b });
    if prior > lower {
        lower = prior;
        best_povm = (0..k).map(|x| if x == guess { CMat::identity(r, r) } else { CMat::zeros(r, r) }).collect();
    }
    let mut best_dual = dual_from_primal(&c.ops, &best_povm);
    let mut upper = linalg::real_trace(&best_dual);
    let mut history = vec![CertifiedValue::new(lower, upper)];

    let top = c
        .ops
        .iter()
        .map(|a| herm_eig(&HermitianMatrix::hermitian_part(a.clone())).max_eigenvalue())
        .fold(0.0, f64::max);
    let mut y = CMat::identity(r, r) * Complex64::new(2.0 * top + 1e-12, 0.0);
    let mut mu = linalg::real_trace(&y) / k as f64;
    let mut newton_steps = 0;

    while upper - lower > opts.tol && newton_steps < opts.max_iterations && mu > 1e-20 {
        let barrier = Barrier { ops: &c.ops, mu };
        let Some((mut phi, mut inverses)) = barrier.eval(&y) else { break };
        for _ in 0..100 {
            newton_steps += 1;
            let Some((delta, dec)) = barrier.newton(&inverses) else { break };
            if !(dec > 1e-9 * mu) {
                break;
            }
            let mut t = 1.0;
            let mut accepted = false;
            while t > 1e-12 {
                let trial = &y + &delta * Complex64::new(t, 0.0);
                if let Some((p, inv)) = barrier.eval(&trial) {
                    if p <= phi - 0.25 * t * dec {
                        y = trial;
                        phi = p;
                        inverses = inv;
                        accepted = true;
                        break;
                    }
                }
                t *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        let povm = primal_from_slacks(mu, &inverses);
        let value = success_on(&c.ops, &povm);
        if value > lower {
            lower = value;
            best_povm = povm;
        }
        let ty = linalg::real_trace(&y);
        if ty < upper {
            upper = ty;
            best_dual = y.clone();
        }
        let alt = dual_from_primal(&c.ops, &best_povm);
        let ta = linalg::real_trace(&alt);
        if ta < upper {
            upper = ta;
            best_dual = alt;
        }
        history.push(CertifiedValue::new(lower, upper));
        mu *= 0.1;
    }

    let value = CertifiedValue::new(lower, upper.max(lower));
    if value.gap > opts.tol {
        return Err(value.non_convergence("guessing-probability solver"));
    }
    Ok(PguessSolution { value, measurement: c.lift(&best_povm), dual: c.lift_operator(&best_dual), history })
}

#[derive(Debug, Clone)]
pub struct FidelitySolution {
    /// Bracket on `max_σ F(ρ_XQ, π_X ⊗ σ)^2`.
    pub value: CertifiedValue,
    /// Density matrix attaining `value.lower`.
    pub sigma: DensityMatrix,
    /// Bracket after each iteration; `lower` never decreases.
    pub history: Vec<CertifiedValue>,
}

/// Certified `max_σ F(ρ_XQ, π_X ⊗ σ_Q)^2` for a state classical on `X`.
pub fn max_fidelity_uniform(rho: &BipartiteState, tol: f64) -> Result<CertifiedValue> {
    Ok(solve_max_fidelity(rho, SolverOptions::with_tol(tol))?.value)
}

/// `L` with `ω = L L^†` and full column rank, dropping eigenvalues at the
/// noise floor.
fn factor(w: &CMat) -> CMat {
    let eig = herm_eig(&HermitianMatrix::hermitian_part(w.clone()));
    let cut = NOISE_FLOOR * eig.max_eigenvalue();
    let keep: Vec<usize> = (0..eig.eigenvalues.len()).filter(|&j| eig.eigenvalues[j] > cut).collect();
    let mut l = eig.eigenvectors.select_columns(keep.iter());
    for (col, &j) in keep.iter().enumerate() {
        l.column_mut(col).scale_mut(eig.eigenvalues[j].sqrt());
    }
    l
}

/// `Σ_x F(ω_x, σ) = Σ_x tr[(L_x^† σ L_x)^{1/2}]`. The `q × q` form has no
/// structural zero eigenvalues whose rounding would survive the square root.
fn fidelity_sum(factors: &[CMat], sigma: &CMat) -> f64 {
    factors
        .iter()
        .filter(|l| l.ncols() > 0)
        .map(|l| {
            let g = HermitianMatrix::hermitian_part(l.adjoint() * sigma * l);
            herm_eig(&g).eigenvalues.iter().map(|x| x.max(0.0).sqrt()).sum::<f64>()
        })
        .sum()
}

struct FidelityEval {
    /// `Σ_x F(ω_x, σ)`.
    f: f64,
    /// `M = Σ_x σ^{-1/2} (σ^{1/2} ω_x σ^{1/2})^{1/2} σ^{-1/2}`, twice the
    /// gradient of `f`.
    m: CMat,
    /// `sqrt(λ_max(Σ_x Λ_x) Σ_x tr[ω_x Λ_x^{-1}])` with `Λ_x = Z_x + ε I`
    /// positive definite, an upper bound on `max_σ Σ_x F(ω_x, σ)`.
    upper: f64,
}

fn eval_fidelity(omegas: &[CMat], factors: &[CMat], sigma: &CMat) -> FidelityEval {
    let r = sigma.nrows();
    let eig = herm_eig(&HermitianMatrix::hermitian_part(sigma.clone()));
    // No support cutoff in `f`: tiny eigenvalues still contribute their
    // square roots.
    let s_half = eig.map(|x| x.max(0.0).sqrt());
    let s_inv_half = inverse_sqrt(&eig);
    let mut m = CMat::zeros(r, r);
    let mut zs = Vec::with_capacity(omegas.len());
    for w in omegas {
        let q = herm_eig(&HermitianMatrix::hermitian_part(&s_half * w * &s_half));
        let q_half = q.map(|x| x.max(0.0).sqrt());
        let z = herm(&s_inv_half * &q_half * &s_inv_half);
        m += &z;
        zs.push(z);
    }
    let m = herm(m);
    let f = fidelity_sum(factors, sigma);
    // With an ill-conditioned σ the bound below is dominated by rounding.
    if eig.min_eigenvalue() < 1e-6 * eig.max_eigenvalue() {
        return FidelityEval { f, m, upper: f64::INFINITY };
    }
    let top = herm_eig(&HermitianMatrix::hermitian_part(m.clone())).max_eigenvalue();
    // Weight of ω_x outside the support of Z_x makes the bound blow up
    // rather than silently drop out.
    let eps = 1e-12 * top.max(f64::MIN_POSITIVE);
    let lambdas: Vec<CMat> = zs.into_iter().map(|z| z + CMat::identity(r, r) * Complex64::new(eps, 0.0)).collect();
    FidelityEval { f, m, upper: flat_dual_bound(factors, &lambdas) }
}

/// `sqrt(Σ_x tr[M^{1/2} ω_x M^{1/2} Λ_x^{-1}])` with `M = Σ_x Λ_x`, an upper
/// bound on `max_σ Σ_x F(ω_x, σ)` for any `Λ_x ≻ 0`. It is the bound
/// `sqrt(λ_max(Σ_x Λ'_x) Σ_x tr[ω_x Λ'^{-1}_x])` at `Λ'_x = M^{-1/2} Λ_x M^{-1/2}`,
/// which makes `Σ_x Λ'_x = I`. Without that rescaling the `λ_max` makes
/// the bound first-order sensitive to errors in `Λ`.
///
/// With `ω_x = L_x L_x^†` the traces are `‖C_x^{-1} M^{1/2} L_x‖²` for the
/// Cholesky factor `Λ_x = C_x C_x^†`. Triangular solves are backward
/// stable, so the result stays a valid bound when `Λ_x` is badly conditioned.
fn flat_dual_bound(factors: &[CMat], lambdas: &[CMat]) -> f64 {
    let r = lambdas[0].nrows();
    let m = lambdas.iter().fold(CMat::zeros(r, r), |a, l| a + l);
    let m_half = herm_eig(&HermitianMatrix::hermitian_part(m)).map(|x| x.max(0.0).sqrt());
    let mut total = 0.0;
    for (l, lam) in factors.iter().zip(lambdas) {
        let Some(ch) = cholesky_pd(lam.clone()) else { return f64::INFINITY };
        let Some(y) = ch.l_dirty().solve_lower_triangular(&(&m_half * l)) else { return f64::INFINITY };
        total += y.norm_squared();
    }
    total.sqrt()
}

/// Fixed-point ascent `σ ← M σ M / tr[M σ M]` with a backtracking line
/// search. The upper bound follows from `F(ω, σ) ≤ (tr[ω Λ^{-1}] + tr[σ Λ]) / 2`
/// for every `Λ ≻ 0`, optimized over a common scale. Fast when the
/// optimal `σ` has full rank on the support and slow otherwise.
fn fixed_point(
    ops: &[CMat],
    factors: &[CMat],
    max_iterations: usize,
    tol: f64,
    history: &mut Vec<CertifiedValue>,
) -> Bracket {
    let r = ops[0].nrows();
    let kf = ops.len() as f64;
    let mut sigma = CMat::identity(r, r) / Complex64::new(r as f64, 0.0);
    let mut ev = eval_fidelity(ops, factors, &sigma);
    let mut best = Bracket { lower: ev.f, upper: f64::INFINITY, sigma: sigma.clone() };
    let mut stale = 0;
    for _ in 0..max_iterations {
        let before = best.value(kf).gap;
        if ev.f > best.lower {
            best.lower = ev.f;
            best.sigma = sigma.clone();
        }
        best.offer_upper(ev.upper);
        let value = best.value(kf);
        history.push(value);
        if value.gap <= tol {
            break;
        }
        stale = if value.gap < before { 0 } else { stale + 1 };
        if stale > 30 {
            break;
        }
        let mut next = herm(&ev.m * &sigma * &ev.m);
        next /= Complex64::new(linalg::real_trace(&next), 0.0);
        // Near the optimum f is flat to rounding; allow steps that lose no
        // more than that so the dual bound keeps tightening.
        let slack = 1e-14 * ev.f;
        let mut t = 1.0;
        while t > 1e-9 {
            let trial = herm(&sigma * Complex64::new(1.0 - t, 0.0) + &next * Complex64::new(t, 0.0));
            let te = eval_fidelity(ops, factors, &trial);
            if te.f >= ev.f - slack {
                sigma = trial;
                ev = te;
                break;
            }
            t *= 0.5;
        }
    }
    best
}

/// Bounds on `f* = max_σ Σ_x F(ω_x, σ)` with the `σ` attaining `lower`.
struct Bracket {
    lower: f64,
    upper: f64,
    sigma: CMat,
}

impl Bracket {
    fn value(&self, k: f64) -> CertifiedValue {
        let lo = self.lower * self.lower / k;
        CertifiedValue::new(lo, (self.upper * self.upper / k).max(lo))
    }

    fn merge(&mut self, other: Bracket) {
        if other.lower > self.lower {
            self.lower = other.lower;
            self.sigma = other.sigma;
        }
        self.offer_upper(other.upper);
    }

    /// A bound clearly below an attained value can only come from rounding
    /// in an ill-conditioned certificate; it is dropped rather than clipped.
    fn offer_upper(&mut self, upper: f64) {
        if upper >= self.lower - 1e-10 {
            self.upper = self.upper.min(upper);
        }
    }
}

/// Largest support dimension handed to the interior-point stage; its
/// Newton systems have `r^2` unknowns after elimination.
const BARRIER_MAX_RANK: usize = 40;

/// Real coordinate `c E_ps + c̄ E_sp` of the block matrix
/// `G_x = [[I, W_x], [W_x^†, σ]]`; diagonal entries use `p = s`, `c = 1/2`.
#[derive(Clone, Copy)]
struct Generator {
    p: usize,
    s: usize,
    c: Complex64,
}

impl Generator {
    /// `tr[K A]` for Hermitian `K`.
    fn trace(&self, k: &CMat) -> f64 {
        2.0 * (self.c * k[(self.s, self.p)]).re
    }

    /// `tr[K A K B]` for Hermitian `K`.
    fn pair(&self, b: &Generator, k: &CMat) -> f64 {
        let (p, s, u, v) = (self.p, self.s, b.p, b.s);
        2.0 * (self.c * b.c * k[(v, p)] * k[(s, u)] + self.c * b.c.conj() * k[(u, p)] * k[(s, v)]).re
    }
}

fn hermitian_generators(r: usize, offset: usize) -> Vec<Generator> {
    let mut g: Vec<Generator> =
        (0..r).map(|i| Generator { p: offset + i, s: offset + i, c: Complex64::new(0.5, 0.0) }).collect();
    for i in 0..r {
        for j in i + 1..r {
            g.push(Generator { p: offset + i, s: offset + j, c: Complex64::new(1.0, 0.0) });
            g.push(Generator { p: offset + i, s: offset + j, c: Complex64::new(0.0, 1.0) });
        }
    }
    g
}

fn rectangular_generators(q: usize, r: usize) -> Vec<Generator> {
    let mut g = Vec::with_capacity(2 * q * r);
    for i in 0..q {
        for j in 0..r {
            g.push(Generator { p: i, s: q + j, c: Complex64::new(1.0, 0.0) });
            g.push(Generator { p: i, s: q + j, c: Complex64::new(0.0, 1.0) });
        }
    }
    g
}

fn assemble(gens: &[Generator], v: &[f64], dim: usize) -> CMat {
    let mut m = CMat::zeros(dim, dim);
    for (g, &x) in gens.iter().zip(v) {
        m[(g.p, g.s)] += g.c * x;
        m[(g.s, g.p)] += g.c.conj() * x;
    }
    m
}

struct FidelityBarrier {
    r: usize,
    /// `ω_x = L_x L_x^†` with `L_x` of full column rank; blocks with no
    /// positive eigenvalue are left out.
    factors: Vec<CMat>,
    sigma_gens: Vec<Generator>,
    /// Offset of each `W_x` in the variable vector.
    offsets: Vec<usize>,
    /// `Re tr[L_x W_x]` as a linear form on the variables.
    objective: Vec<f64>,
}

struct BarrierPoint {
    /// `G_x^{-1}`.
    inverses: Vec<CMat>,
}

impl FidelityBarrier {
    fn new(ops: &[CMat]) -> Self {
        let r = ops[0].nrows();
        let sigma_gens = hermitian_generators(r, 0);
        let mut factors = Vec::new();
        let mut offsets = Vec::new();
        let mut objective = vec![0.0; r * r];
        for w in ops {
            let l = factor(w);
            if l.ncols() == 0 {
                continue;
            }
            offsets.push(objective.len());
            for g in rectangular_generators(l.ncols(), r) {
                objective.push((g.c * l[(g.s - l.ncols(), g.p)]).re);
            }
            factors.push(l);
        }
        FidelityBarrier { r, factors, sigma_gens, offsets, objective }
    }

    fn len(&self) -> usize {
        self.objective.len()
    }

    fn sigma(&self, v: &[f64]) -> CMat {
        assemble(&self.sigma_gens, &v[..self.r * self.r], self.r)
    }

    fn block(&self, x: usize, v: &[f64]) -> CMat {
        let q = self.factors[x].ncols();
        let r = self.r;
        let mut g = CMat::zeros(q + r, q + r);
        g.view_mut((0, 0), (q, q)).fill_with_identity();
        g.view_mut((q, q), (r, r)).copy_from(&self.sigma(v));
        let w = assemble(&rectangular_generators(q, r), &v[self.offsets[x]..self.offsets[x] + 2 * q * r], q + r);
        g + w
    }

    /// Inverses of the blocks `G_x`, or `None` outside the cone. The barrier
    /// is `-t <c, v> - Σ_x log det G_x`.
    fn eval(&self, v: &[f64]) -> Option<BarrierPoint> {
        let inverses = (0..self.factors.len())
            .map(|x| inverse_logdet(&self.block(x, v)).map(|(k, _)| k))
            .collect::<Option<Vec<_>>>()?;
        Some(BarrierPoint { inverses })
    }

    /// Newton step under `tr σ = 1`, eliminating each `W_x` block, and the
    /// decrement `-<∇, Δ>`.
    fn newton(&self, t: f64, point: &BarrierPoint) -> Option<(Vec<f64>, f64)> {
        let ns = self.r * self.r;
        let mut hred = DMatrix::<f64>::zeros(ns, ns);
        let mut gred = DVector::<f64>::zeros(ns);
        let mut grad = vec![0.0; self.len()];
        let mut eliminated = Vec::with_capacity(self.factors.len());
        for (x, k) in point.inverses.iter().enumerate() {
            let q = self.factors[x].ncols();
            let sg: Vec<Generator> = hermitian_generators(self.r, q);
            let wg = rectangular_generators(q, self.r);
            let nw = wg.len();
            let off = self.offsets[x];
            let hss = DMatrix::from_fn(ns, ns, |i, j| sg[i].pair(&sg[j], k));
            let hsw = DMatrix::from_fn(ns, nw, |i, j| sg[i].pair(&wg[j], k));
            let hww = DMatrix::from_fn(nw, nw, |i, j| wg[i].pair(&wg[j], k));
            let gs = DVector::from_fn(ns, |i, _| -sg[i].trace(k));
            let gw = DVector::from_fn(nw, |i, _| -t * self.objective[off + i] - wg[i].trace(k));
            for i in 0..ns {
                grad[i] += gs[i];
            }
            for i in 0..nw {
                grad[off + i] = gw[i];
            }
            let ch = nalgebra::Cholesky::new(hww)?;
            let x_ws = ch.solve(&hsw.transpose());
            let x_g = ch.solve(&gw);
            hred += hss - &hsw * &x_ws;
            gred += gs - &hsw * &x_g;
            eliminated.push((ch, hsw, gw));
        }
        let a = DVector::from_fn(ns, |i, _| if i < self.r { 1.0 } else { 0.0 });
        let scale = (0..ns).map(|i| hred[(i, i)]).fold(0.0, f64::max);
        let mut shift = 0.0;
        let ch = loop {
            let mut h = hred.clone();
            for i in 0..ns {
                h[(i, i)] += shift;
            }
            if let Some(ch) = nalgebra::Cholesky::new(h) {
                break ch;
            }
            shift = if shift == 0.0 { 1e-15 * scale } else { shift * 100.0 };
            if !(shift > 0.0 && shift <= 1e-6 * scale) {
                return None;
            }
        };
        let hg = ch.solve(&gred);
        let ha = ch.solve(&a);
        let nu = -a.dot(&hg) / a.dot(&ha);
        let ds = -(hg + ha * nu);
        let mut delta = vec![0.0; self.len()];
        delta[..ns].copy_from_slice(ds.as_slice());
        for (x, (ch, hsw, gw)) in eliminated.into_iter().enumerate() {
            let dw = -ch.solve(&(gw + hsw.transpose() * &ds));
            let off = self.offsets[x];
            delta[off..off + dw.len()].copy_from_slice(dw.as_slice());
        }
        let dec = -grad.iter().zip(&delta).map(|(g, d)| g * d).sum::<f64>();
        Some((delta, dec))
    }

    /// Dual bound from `Λ_x ≈ S_x^{-1}`, `S_x = σ - W_x^† W_x`. The bound
    /// is evaluated for the computed inverse itself, so inversion error
    /// near the boundary costs tightness but not validity.
    fn upper(&self, v: &[f64]) -> f64 {
        let r = self.r;
        let sigma = self.sigma(v);
        let mut lambdas = Vec::with_capacity(self.factors.len());
        for (x, l) in self.factors.iter().enumerate() {
            let q = l.ncols();
            let off = self.offsets[x];
            let w = assemble(&rectangular_generators(q, r), &v[off..off + 2 * q * r], q + r);
            let w = w.view((0, q), (q, r)).into_owned();
            let s = herm(&sigma - w.adjoint() * &w);
            let Some((s_inv, _)) = inverse_logdet(&s) else { return f64::INFINITY };
            lambdas.push(herm(s_inv));
        }
        flat_dual_bound(&self.factors, &lambdas)
    }
}

/// Log-barrier path following on
/// `max Σ_x Re tr[L_x W_x]` subject to `σ ⪰ W_x^† W_x`, `tr σ = 1`, whose
/// optimum is `f*` since `F(L L^†, σ) = max { Re tr[L W] : W^† W ⪯ σ }`.
fn interior_point(ops: &[CMat], max_steps: usize, tol: f64, history: &mut Vec<CertifiedValue>) -> Bracket {
    let r = ops[0].nrows();
    let kf = ops.len() as f64;
    let problem = FidelityBarrier::new(ops);
    let mut v = vec![0.0; problem.len()];
    v[..r].fill(1.0 / r as f64);
    let mut best = Bracket { lower: 0.0, upper: f64::INFINITY, sigma: problem.sigma(&v) };
    let mut t = 1.0;
    let mut steps = 0;
    while steps < max_steps && t < 1e18 {
        let Some(mut point) = problem.eval(&v) else { break };
        for _ in 0..200 {
            steps += 1;
            let Some((delta, dec)) = problem.newton(t, &point) else { break };
            if !(dec > 1e-14) {
                break;
            }
            // Damped Newton step for a self-concordant barrier; at large `t`
            // the barrier value itself is too large to compare reliably.
            let lambda = dec.max(0.0).sqrt();
            let mut step = if lambda > 0.25 { 1.0 / (1.0 + lambda) } else { 1.0 };
            let mut accepted = false;
            while step > 1e-12 {
                let trial: Vec<f64> = v.iter().zip(&delta).map(|(a, b)| a + step * b).collect();
                if let Some(p) = problem.eval(&trial) {
                    v = trial;
                    point = p;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted || steps >= max_steps || dec < 1e-12 {
                break;
            }
        }
        let sigma = problem.sigma(&v);
        let sigma = sigma.clone() / Complex64::new(linalg::real_trace(&sigma), 0.0);
        let f = fidelity_sum(&problem.factors, &sigma);
        if f > best.lower {
            best.lower = f;
            best.sigma = sigma;
        }
        best.offer_upper(problem.upper(&v));
        let value = best.value(kf);
        history.push(value);
        if value.gap <= tol {
            break;
        }
        t *= 10.0;
    }
    best
}

/// Cheap fixed-point ascent first; when it stalls on a small support,
/// log-barrier path following finishes the job.
pub fn solve_max_fidelity(rho: &BipartiteState, opts: SolverOptions) -> Result<FidelitySolution> {
    opts.check()?;
    let leak = rho.off_block_weight();
    if leak > 1e-9 {
        return validation(format!("state is not classical on X: off-block weight {leak:e}"));
    }
    let k = rho.dim_a();
    let blocks: Vec<HermitianMatrix> = (0..k).map(|x| rho.block(x)).collect();
    let c = Compressed::fine(&blocks);
    let kf = k as f64;

    let mut history = Vec::new();
    let budget = opts.max_iterations.min(500);
    let factors: Vec<CMat> = c.ops.iter().map(factor).collect();
    let mut best = fixed_point(&c.ops, &factors, budget, opts.tol, &mut history);
    if best.value(kf).gap > opts.tol && c.rank() <= BARRIER_MAX_RANK {
        let rest = opts.max_iterations.saturating_sub(budget).max(1);
        let stage = interior_point(&c.ops, rest, opts.tol, &mut history);
        best.merge(stage);
        history.push(best.value(kf));
    }
    let value = best.value(kf);
    if value.gap > opts.tol {
        return Err(value.non_convergence("max-fidelity solver"));
    }
    let sigma = DensityMatrix::normalized(c.lift_operator(&best.sigma))?;
    Ok(FidelitySolution { value, sigma, history })
}

/// `sqrt(1 - F^2)`.
pub fn purified_distance(fidelity: f64) -> f64 {
    (1.0 - fidelity * fidelity).max(0.0).sqrt()
}

/// Smallest eigenvalue of `Y - p_x ρ_x` over all `x`; negative when `Y` is
/// not dual feasible.
pub fn dual_slack(e: &Ensemble, y: &HermitianMatrix) -> f64 {
    e.weighted().iter().map(|a| herm_eig(&y.sub(a)).min_eigenvalue()).fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CVec;
    use crate::random;
    use crate::states::{build_cq_state, CQChannel};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ket(re: &[f64]) -> CVec {
        CVec::from_iterator(re.len(), re.iter().map(|&x| Complex64::new(x, 0.0)))
    }

    fn zero() -> DensityMatrix {
        DensityMatrix::basis_state(2, 0)
    }

    fn plus() -> DensityMatrix {
        DensityMatrix::pure(&ket(&[1.0, 1.0])).unwrap()
    }

    fn uniform_ensemble(states: Vec<DensityMatrix>) -> Ensemble {
        Ensemble::new(ProbabilityVector::uniform(states.len()), states).unwrap()
    }

    fn check_solution(e: &Ensemble, sol: &PguessSolution) {
        let dim = e.dim();
        let total = sol.measurement.iter().fold(HermitianMatrix::from_diagonal(&vec![0.0; dim]), |s, m| s.add(m));
        assert!(total.max_abs_diff(&HermitianMatrix::identity(dim)) < 1e-9);
        for m in &sol.measurement {
            assert!(herm_eig(m).min_eigenvalue() > -1e-9);
        }
        assert_abs_diff_eq!(e.success(&sol.measurement), sol.value.lower, epsilon = 1e-9);
        assert!(dual_slack(e, &sol.dual) > -1e-10);
        assert_abs_diff_eq!(sol.dual.trace(), sol.value.upper, epsilon = 1e-9);
        for w in sol.history.windows(2) {
            assert!(w[1].lower >= w[0].lower);
        }
        let max_prior = e.priors().max();
        assert!(sol.value.lower >= max_prior - 1e-12 && sol.value.upper <= 1.0 + 1e-9);
    }

    #[test]
    fn helstrom_examples() {
        assert_abs_diff_eq!(helstrom(0.5, &zero(), 0.5, &zero()).unwrap(), 0.5, epsilon = 1e-15);
        let one = DensityMatrix::basis_state(2, 1);
        assert_abs_diff_eq!(helstrom(0.5, &zero(), 0.5, &one).unwrap(), 1.0, epsilon = 1e-15);
        let expect = 0.5 * (1.0 + 0.5f64.sqrt());
        assert_abs_diff_eq!(helstrom(0.5, &zero(), 0.5, &plus()).unwrap(), expect, epsilon = 1e-12);
    }

    #[test]
    fn pgm_examples() {
        let orth = uniform_ensemble((0..3).map(|k| DensityMatrix::basis_state(3, k)).collect());
        assert_abs_diff_eq!(pretty_good_measurement(&orth).unwrap().1, 1.0, epsilon = 1e-12);
        let rho = DensityMatrix::diagonal(&[0.3, 0.7]).unwrap();
        let same = Ensemble::new(ProbabilityVector::new(vec![0.2, 0.8]).unwrap(), vec![rho.clone(), rho]).unwrap();
        // The PGM guesses x with probability p_x: success Σ p_x^2.
        assert_abs_diff_eq!(pretty_good_measurement(&same).unwrap().1, 0.68, epsilon = 1e-12);
        assert_abs_diff_eq!(pguess(&same, 1e-8).unwrap().lower, 0.8, epsilon = 1e-8);
        let zp = uniform_ensemble(vec![zero(), plus()]);
        let (povm, s) = pretty_good_measurement(&zp).unwrap();
        assert!(s <= helstrom(0.5, &zero(), 0.5, &plus()).unwrap() + 1e-12);
        assert_abs_diff_eq!(zp.success(&povm), s, epsilon = 1e-12);
        // Kernel goes to hypothesis 0.
        let embedded = uniform_ensemble(vec![DensityMatrix::basis_state(3, 0), DensityMatrix::basis_state(3, 1)]);
        let (povm, _) = pretty_good_measurement(&embedded).unwrap();
        assert_abs_diff_eq!(povm[0].matrix()[(2, 2)].re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn pguess_brackets_helstrom() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for dim in [2, 3, 4] {
            for _ in 0..5 {
                let (k0, k1) = (1 + rng.random_range(0..dim), 1 + rng.random_range(0..dim));
                let r0 = random::mixed_state(&mut rng, dim, k0);
                let r1 = random::mixed_state(&mut rng, dim, k1);
                let p0: f64 = rng.random_range(0.1..0.9);
                let e =
                    Ensemble::new(ProbabilityVector::new(vec![p0, 1.0 - p0]).unwrap(), vec![r0.clone(), r1.clone()])
                        .unwrap();
                let h = helstrom(p0, &r0, 1.0 - p0, &r1).unwrap();
                let sol = solve_pguess(&e, SolverOptions::default()).unwrap();
                assert!(sol.value.gap <= 1e-8);
                assert!(sol.value.lower <= h + 1e-10 && h <= sol.value.upper + 1e-10, "{h} {:?}", sol.value);
                check_solution(&e, &sol);
            }
        }
    }

    #[test]
    fn pguess_classical_map() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..5 {
            let p = random::distribution(&mut rng, 4);
            let rows: Vec<Vec<f64>> = (0..4).map(|_| random::distribution(&mut rng, 3).as_slice().to_vec()).collect();
            let states = rows.iter().map(|w| DensityMatrix::diagonal(w).unwrap()).collect();
            let e = Ensemble::new(p.clone(), states).unwrap();
            let map: f64 = (0..3).map(|y| (0..4).map(|x| p.as_slice()[x] * rows[x][y]).fold(0.0, f64::max)).sum();
            let sol = solve_pguess(&e, SolverOptions::default()).unwrap();
            assert!(sol.value.lower <= map + 1e-10 && map <= sol.value.upper + 1e-10);
            check_solution(&e, &sol);
        }
    }

    #[test]
    fn pguess_orthogonal_and_random() {
        let orth = uniform_ensemble((0..4).map(|k| DensityMatrix::basis_state(4, k)).collect());
        let v = pguess(&orth, 1e-8).unwrap();
        assert!(v.lower > 1.0 - 1e-8);
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for k in [3, 5, 8] {
            let states = (0..k).map(|_| random::pure_state(&mut rng, 4)).collect();
            let e = Ensemble::new(random::distribution(&mut rng, k), states).unwrap();
            let sol = solve_pguess(&e, SolverOptions::default()).unwrap();
            assert!(sol.value.gap <= 1e-8, "{:?}", sol.value);
            check_solution(&e, &sol);
            assert!(sol.value.lower >= pretty_good_measurement(&e).unwrap().1);
        }
    }

    #[test]
    fn fidelity_product_state() {
        let tau = DensityMatrix::diagonal(&[0.2, 0.3, 0.5]).unwrap();
        let w = CQChannel::new(vec![tau.clone(), tau.clone()]).unwrap();
        let cq = build_cq_state(&ProbabilityVector::uniform(2), &w).unwrap();
        let sol = solve_max_fidelity(&cq, SolverOptions::default()).unwrap();
        assert!(sol.value.lower > 1.0 - 1e-8);
        assert!(sol.sigma.max_abs_diff(&tau) < 1e-6);
    }

    #[test]
    fn fidelity_perfect_record() {
        let w = CQChannel::new(vec![zero(), DensityMatrix::basis_state(2, 1)]).unwrap();
        let cq = build_cq_state(&ProbabilityVector::uniform(2), &w).unwrap();
        let v = max_fidelity_uniform(&cq, 1e-8).unwrap();
        assert_abs_diff_eq!(v.lower, 0.5, epsilon = 1e-8);
        assert!(v.gap <= 1e-8);
    }

    #[test]
    fn fidelity_rejects_coherent_x() {
        let bell = DensityMatrix::pure(&ket(&[1.0, 0.0, 0.0, 1.0])).unwrap();
        let st = BipartiteState::new(bell, 2, 2).unwrap();
        assert!(max_fidelity_uniform(&st, 1e-8).is_err());
    }

    #[test]
    fn fidelity_random_instances_converge() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        for (k, dim) in [(2, 2), (4, 4), (8, 8), (3, 5)] {
            let w = random::mixed_channel(&mut rng, k, dim);
            let cq = build_cq_state(&random::distribution(&mut rng, k), &w).unwrap();
            let sol = solve_max_fidelity(&cq, SolverOptions::default()).unwrap();
            assert!(sol.value.gap <= 1e-8, "{k} {dim} {:?}", sol.value);
            assert!(sol.value.lower >= 1.0 / k as f64 - 1e-12 && sol.value.upper <= 1.0 + 1e-9);
            for w in sol.history.windows(2) {
                assert!(w[1].lower >= w[0].lower);
            }
            // The attained value is the fidelity of the returned σ.
            let pi_sigma = linalg::kron_density(&DensityMatrix::maximally_mixed(k), &sol.sigma);
            let f = linalg::fidelity(cq.state(), &pi_sigma).unwrap();
            assert_abs_diff_eq!(f * f, sol.value.lower, epsilon = 1e-9);
        }
    }
}
