//! Gallager/Holevo `E₀`, its optimization over input distributions, the
//! rate-exponent bounds for channel coding (CC), data compression with
//! quantum side information (DC) and privacy amplification (PA), critical
//! rates, and the finite-blocklength right-hand sides.
//!
//! Rates and exponents are in bits.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::entropy::{cond_entropy_petz_up, cond_entropy_sand_down, von_neumann_cond, BipartiteState};
use crate::error::{validation, Error, Result};
use crate::ext::ExtReal;
use crate::linalg::{self, herm_eig, HermitianMatrix, SpectralDecomposition};
use crate::optimize::{self, maximize, ScalarMax};
use crate::states::{build_cq_state, CQChannel, ProbabilityVector, SymmetricChannel};

/// Where the optimizer of a bound landed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Flag {
    Interior,
    /// At an end of the optimization range.
    Boundary,
    /// Still increasing at the range cap; the supremum is reported as `+∞`.
    Diverged,
}

impl fmt::Display for Flag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Flag::Interior => "interior",
            Flag::Boundary => "boundary",
            Flag::Diverged => "diverged",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub rate: f64,
    pub exponent: ExtReal,
    /// The maximizing `s` (CC) or `α` (DC, PA).
    pub optimizer: f64,
    pub flag: Flag,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentCurve {
    samples: Vec<CurvePoint>,
}

impl ExponentCurve {
    pub fn new(samples: Vec<CurvePoint>) -> Result<Self> {
        if samples.windows(2).any(|w| !(w[0].rate < w[1].rate)) {
            return validation("curve rates must be strictly increasing");
        }
        Ok(ExponentCurve { samples })
    }

    pub fn samples(&self) -> &[CurvePoint] {
        &self.samples
    }

    /// Whether exponents never increase with rate by more than `tol`.
    pub fn is_nonincreasing(&self, tol: f64) -> bool {
        self.samples.windows(2).all(|w| match (w[0].exponent, w[1].exponent) {
            (_, ExtReal::PosInfinity) => w[0].exponent.is_infinite(),
            (ExtReal::PosInfinity, _) => true,
            (ExtReal::Finite(a), ExtReal::Finite(b)) => b <= a + tol,
        })
    }
}

/// Evaluates `f` at every rate in parallel; results keep the input order.
pub fn sample_rates<F>(rates: &[f64], f: F) -> Vec<Result<CurvePoint>>
where
    F: Fn(f64) -> Result<CurvePoint> + Sync,
{
    rates.par_iter().map(|&r| f(r)).collect()
}

/// `R_dc = log d - R_pa`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateRegion {
    pub r_dc: f64,
    pub r_pa: f64,
}

impl RateRegion {
    pub fn from_dc(d: usize, r_dc: f64) -> Self {
        RateRegion { r_dc, r_pa: (d as f64).log2() - r_dc }
    }

    pub fn from_pa(d: usize, r_pa: f64) -> Self {
        RateRegion { r_dc: (d as f64).log2() - r_pa, r_pa }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentOptions {
    /// Argument tolerance of the scalar maximizations.
    pub tol: f64,
    /// Cap on `s` for the CC sphere-packing supremum.
    pub s_max: f64,
    /// Cap on `α` for the PA sphere-packing supremum.
    pub alpha_max: f64,
    /// Floor on `α` for the DC sphere-packing supremum.
    pub alpha_min: f64,
}

impl Default for ExponentOptions {
    fn default() -> Self {
        ExponentOptions { tol: 1e-10, s_max: 64.0, alpha_max: 64.0, alpha_min: 1e-4 }
    }
}

/// Eigendecompositions of the channel outputs, reused across `s`.
struct Spectra(Vec<SpectralDecomposition>);

impl Spectra {
    fn new(w: &CQChannel) -> Self {
        Spectra(w.outputs().iter().map(|o| herm_eig(o)).collect())
    }

    /// `Σ_z P(z) φ(z)^α`.
    fn theta(&self, p: &[f64], alpha: f64) -> HermitianMatrix {
        let dim = self.0[0].eigenvalues.len();
        let mut acc = linalg::CMat::zeros(dim, dim);
        for (e, &pz) in self.0.iter().zip(p) {
            if pz > 0.0 {
                acc += linalg::support_map(e, |x| x.powf(alpha)) * num_complex::Complex64::new(pz, 0.0);
            }
        }
        HermitianMatrix::hermitian_part(acc)
    }

    fn powers(&self, alpha: f64) -> Vec<HermitianMatrix> {
        self.0.iter().map(|e| HermitianMatrix::hermitian_part(linalg::support_map(e, |x| x.powf(alpha)))).collect()
    }
}

fn trace_power(theta: &HermitianMatrix, q: f64) -> f64 {
    let e = herm_eig(theta);
    let cut = e.support_threshold();
    e.eigenvalues.iter().filter(|&&x| x > cut).map(|x| x.powf(q)).sum()
}

fn check_s(s: f64) -> Result<()> {
    if !(s >= 0.0) || !s.is_finite() {
        return validation(format!("s must be a finite nonnegative number, got {s}"));
    }
    Ok(())
}

fn check_input(p: &ProbabilityVector, w: &CQChannel) -> Result<()> {
    if p.len() != w.inputs() {
        return validation(format!("distribution has {} entries but the channel has {} inputs", p.len(), w.inputs()));
    }
    Ok(())
}

/// `E₀(s, P, W) = -log tr[(Σ_z P(z) φ(z)^{1/(1+s)})^{1+s}]`.
pub fn gallager_e0(s: f64, p: &ProbabilityVector, w: &CQChannel) -> Result<f64> {
    check_s(s)?;
    check_input(p, w)?;
    Ok(e0_with(&Spectra::new(w), s, p.as_slice()))
}

fn e0_with(sp: &Spectra, s: f64, p: &[f64]) -> f64 {
    let theta = sp.theta(p, 1.0 / (1.0 + s));
    -trace_power(&theta, 1.0 + s).log2()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
}

/// Evaluates `E₀(s, uniform, W)` and `s (log d - H̄↑_{1/(1+s)}(Z|B))`
/// independently.
pub fn e0_entropy_identity(s: f64, w: &CQChannel) -> Result<IdentityCheck> {
    check_s(s)?;
    let d = w.inputs();
    let uniform = ProbabilityVector::uniform(d);
    let lhs = gallager_e0(s, &uniform, w)?;
    let zb = build_cq_state(&uniform, w)?;
    let h = cond_entropy_petz_up(&zb, 1.0 / (1.0 + s))?;
    let rhs = s * ((d as f64).log2() - h);
    Ok(IdentityCheck { lhs, rhs, gap: (lhs - rhs).abs() })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolevoCertificate {
    pub residuals: Vec<f64>,
    pub satisfied: bool,
}

pub const HOLEVO_TOL: f64 = 1e-9;

/// Optimality condition for `P` in `max_P E₀(s, P, W)`: with
/// `θ = Σ_z P(z) φ(z)^α`, `α = 1/(1+s)`, the residuals
/// `tr[φ(z)^α θ^s] - tr[θ^{1+s}]` must be nonnegative, and zero where
/// `P(z) > 0`.
pub fn holevo_condition(p: &ProbabilityVector, s: f64, w: &CQChannel) -> Result<HolevoCertificate> {
    check_s(s)?;
    check_input(p, w)?;
    Ok(holevo_with(&Spectra::new(w), p.as_slice(), s))
}

fn holevo_with(sp: &Spectra, p: &[f64], s: f64) -> HolevoCertificate {
    let residuals = kkt_terms(sp, p, s).residuals;
    let satisfied = residuals.iter().zip(p).all(|(&r, &pz)| r >= -HOLEVO_TOL && (pz <= 0.0 || r.abs() <= HOLEVO_TOL));
    HolevoCertificate { residuals, satisfied }
}

struct KktTerms {
    /// `tr[θ^{1+s}]`.
    objective: f64,
    residuals: Vec<f64>,
}

fn kkt_terms(sp: &Spectra, p: &[f64], s: f64) -> KktTerms {
    let alpha = 1.0 / (1.0 + s);
    let theta = sp.theta(p, alpha);
    let theta_s = linalg::pow_of(&herm_eig(&theta), s);
    let objective = trace_power(&theta, 1.0 + s);
    let residuals =
        sp.powers(alpha).iter().map(|f| linalg::trace_product(f.matrix(), theta_s.matrix()) - objective).collect();
    KktTerms { objective, residuals }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct E0Optimum {
    pub value: f64,
    pub distribution: Vec<f64>,
    pub certificate: HolevoCertificate,
    pub iterations: usize,
}

const E0_OPT_TOL: f64 = 1e-9;
const E0_OPT_CAP: usize = 10_000;

/// `E₀(s, W) = max_P E₀(s, P, W)` by minimizing the convex `tr[θ^{1+s}]`
/// from the uniform distribution, with Newton steps on the face of letters
/// in use and exponentiated-gradient steps as fallback. Stops when
/// the Frank-Wolfe gap certifies the value to within `1e-9` bits.
pub fn e0_opt(s: f64, w: &CQChannel) -> Result<E0Optimum> {
    check_s(s)?;
    e0_opt_with(&Spectra::new(w), s)
}

/// Frank-Wolfe gap of `tr[θ^{1+s}]` at `P`, divided by `1 + s`. The
/// gradient is `(1+s)(residual_z + tr[θ^{1+s}])`, so the constant cancels.
fn e0_gap(t: &KktTerms, p: &[f64]) -> f64 {
    let mean: f64 = t.residuals.iter().zip(p).map(|(r, q)| r * q).sum();
    let min = t.residuals.iter().copied().fold(f64::INFINITY, f64::min);
    (mean - min).max(0.0)
}

fn e0_opt_with(sp: &Spectra, s: f64) -> Result<E0Optimum> {
    let d = sp.0.len();
    let mut p = vec![1.0 / d as f64; d];
    if s == 0.0 {
        return Ok(E0Optimum { value: 0.0, certificate: holevo_with(sp, &p, s), distribution: p, iterations: 0 });
    }
    let mut terms = kkt_terms(sp, &p, s);
    let mut eta = 1.0;
    for it in 0..E0_OPT_CAP {
        let g = terms.objective;
        let fw = (1.0 + s) * e0_gap(&terms, &p);
        let certified = if fw < g { (g / (g - fw)).log2() } else { f64::INFINITY };
        if certified <= E0_OPT_TOL {
            // Letters the condition marks as unused keep a sliver of mass
            // under multiplicative updates; drop them.
            let pruned: Vec<f64> = p
                .iter()
                .zip(&terms.residuals)
                .map(|(&q, &r)| if q < 1e-6 && r > HOLEVO_TOL { 0.0 } else { q })
                .collect();
            let total: f64 = pruned.iter().sum();
            let pruned: Vec<f64> = pruned.iter().map(|q| q / total).collect();
            let t = kkt_terms(sp, &pruned, s);
            let (p, g) = if t.objective <= g * (1.0 + 1e-12) { (pruned, t.objective) } else { (p, g) };
            return Ok(E0Optimum {
                value: -g.log2(),
                certificate: holevo_with(sp, &p, s),
                distribution: p,
                iterations: it,
            });
        }
        let band = 64.0 * (1.0 + s) * f64::EPSILON;
        // Near the optimum the decrease drops below rounding while the gap
        // is still first order; steps that shrink the gap are accepted too.
        let improves = |t: &KktTerms, q: &[f64]| {
            t.objective < g || (t.objective <= g * (1.0 + band) && e0_gap(t, q) < e0_gap(&terms, &p))
        };
        if let Some(q) = newton_step(sp, s, &p, &terms) {
            let t = kkt_terms(sp, &q, s);
            if improves(&t, &q) {
                p = q;
                terms = t;
                continue;
            }
        }
        // Normalized gradient (1+s)(residual + g) / g, shifted by a constant.
        let grad: Vec<f64> = terms.residuals.iter().map(|r| (1.0 + s) * r / g).collect();
        let mut accepted = false;
        while eta > 1e-12 {
            let mut q: Vec<f64> = p.iter().zip(&grad).map(|(pz, gz)| pz * (-eta * gz).exp()).collect();
            let total: f64 = q.iter().sum();
            q.iter_mut().for_each(|x| *x /= total);
            let t = kkt_terms(sp, &q, s);
            if improves(&t, &q) {
                p = q;
                terms = t;
                accepted = true;
                eta *= 2.0;
                break;
            }
            eta *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let g = terms.objective;
    let fw = (1.0 + s) * e0_gap(&terms, &p);
    Err(Error::NonConvergence {
        message: format!("input-distribution optimization at s = {s} did not certify its value"),
        lower: -g.log2(),
        upper: if fw < g { -(g - fw).log2() } else { f64::INFINITY },
    })
}

/// Newton step for `min tr[θ^{1+s}]` on the face of the simplex spanned by
/// the letters in use. The gradient `tr[φ(z)^α θ^s]` (up to the factor
/// `1+s`) is exact; the Hessian is a forward difference of it. The step is
/// cut where a letter would go negative, and that letter is dropped.
fn newton_step(sp: &Spectra, s: f64, p: &[f64], terms: &KktTerms) -> Option<Vec<f64>> {
    let active: Vec<usize> = (0..p.len()).filter(|&z| p[z] > 0.0).collect();
    let k = active.len();
    if k < 2 {
        return None;
    }
    let grad = |t: &KktTerms| -> Vec<f64> { t.residuals.iter().map(|r| r + t.objective).collect() };
    let g0 = grad(terms);
    let mut kkt = DMatrix::<f64>::zeros(k + 1, k + 1);
    for (j, &zj) in active.iter().enumerate() {
        let h = 1e-6 * p[zj].max(1e-3);
        let mut q = p.to_vec();
        q[zj] += h;
        let gq = grad(&kkt_terms(sp, &q, s));
        for (i, &zi) in active.iter().enumerate() {
            kkt[(i, j)] = (gq[zi] - g0[zi]) / h;
        }
    }
    for i in 0..k {
        for j in 0..i {
            let m = 0.5 * (kkt[(i, j)] + kkt[(j, i)]);
            kkt[(i, j)] = m;
            kkt[(j, i)] = m;
        }
        kkt[(i, k)] = 1.0;
        kkt[(k, i)] = 1.0;
    }
    let rhs = DVector::from_iterator(k + 1, active.iter().map(|&z| -g0[z]).chain([0.0]));
    let delta = kkt.lu().solve(&rhs)?;
    let mut step = 1.0f64;
    let mut blocking = None;
    for (i, &z) in active.iter().enumerate() {
        if delta[i] < 0.0 && p[z] + step * delta[i] <= 0.0 {
            step = p[z] / -delta[i];
            blocking = Some(z);
        }
    }
    let mut q = p.to_vec();
    for (i, &z) in active.iter().enumerate() {
        q[z] = (p[z] + step * delta[i]).max(0.0);
    }
    if let Some(z) = blocking {
        q[z] = 0.0;
    }
    let total: f64 = q.iter().sum();
    if !(total > 0.0) || q.iter().any(|x| !x.is_finite()) {
        return None;
    }
    q.iter_mut().for_each(|x| *x /= total);
    Some(q)
}

fn check_rate(rate: f64, lo: f64, hi: f64, what: &str) -> Result<()> {
    if !(rate > lo && rate < hi) {
        return validation(format!("{what} rate {rate} outside ({lo}, {hi})"));
    }
    Ok(())
}

fn flag_for(m: &ScalarMax, lo: f64, hi: f64, tol: f64) -> Flag {
    if m.argmax <= lo + tol || m.argmax >= hi - tol {
        Flag::Boundary
    } else {
        Flag::Interior
    }
}

fn finite_point(rate: f64, m: ScalarMax, flag: Flag) -> CurvePoint {
    CurvePoint { rate, exponent: ExtReal::Finite(m.value.max(0.0)), optimizer: m.argmax, flag }
}

/// Supremum over `[lo, cap]` (or `[cap, hi]` when `cap_low`) that reports
/// `+∞` if the maximizer sits at the cap.
fn capped_sup<F>(rate: f64, f: F, lo: f64, hi: f64, cap_low: bool, tol: f64) -> Result<CurvePoint>
where
    F: FnMut(f64) -> Result<f64>,
{
    let m = maximize(f, lo, hi, tol)?;
    let at_cap = if cap_low { m.argmax <= lo + tol } else { m.argmax >= hi - tol };
    if at_cap && m.value > 0.0 {
        return Ok(CurvePoint { rate, exponent: ExtReal::PosInfinity, optimizer: m.argmax, flag: Flag::Diverged });
    }
    Ok(finite_point(rate, m, flag_for(&m, lo, hi, tol)))
}

/// `max_{s∈[0,1]} (E₀(s, uniform, W) - s R)` for a symmetric channel.
pub fn cc_exponent_lower(w: &SymmetricChannel, rate: f64, opts: &ExponentOptions) -> Result<CurvePoint> {
    let ch = w.channel();
    check_rate(rate, 0.0, (ch.inputs() as f64).log2(), "channel-coding")?;
    let sp = Spectra::new(ch);
    let p = vec![1.0 / ch.inputs() as f64; ch.inputs()];
    let m = maximize(|s| Ok(e0_with(&sp, s, &p) - s * rate), 0.0, 1.0, opts.tol)?;
    Ok(finite_point(rate, m, flag_for(&m, 0.0, 1.0, opts.tol)))
}

/// `sup_{s∈[0, s_max]} (E₀(s, W) - s R)` with `E₀(s, W)` optimized over
/// input distributions.
pub fn cc_sphere_packing(w: &CQChannel, rate: f64, opts: &ExponentOptions) -> Result<CurvePoint> {
    check_rate(rate, 0.0, (w.inputs() as f64).log2(), "channel-coding")?;
    let sp = Spectra::new(w);
    capped_sup(rate, |s| Ok(e0_opt_with(&sp, s)?.value - s * rate), 0.0, opts.s_max, false, opts.tol)
}

fn dc_guard(zb: &BipartiteState, rate: f64) -> Result<()> {
    let h = von_neumann_cond(zb);
    let log_d = (zb.dim_a() as f64).log2();
    if !(rate > h) {
        return validation(format!("compression rate {rate} must exceed the conditional entropy H(Z|B) = {h}"));
    }
    if !(rate < log_d) {
        return validation(format!("compression rate {rate} must be below log d = {log_d}"));
    }
    Ok(())
}

fn dc_objective(zb: &BipartiteState, rate: f64, alpha: f64) -> Result<f64> {
    if alpha >= 1.0 {
        return Ok(0.0);
    }
    Ok((1.0 - alpha) / alpha * (rate - cond_entropy_petz_up(zb, alpha)?))
}

/// `max_{α∈[1/2,1]} (1-α)/α (R - H̄↑_α(Z|B))` for `R > H(Z|B)`.
pub fn dc_exponent_lower(zb: &BipartiteState, rate: f64, opts: &ExponentOptions) -> Result<CurvePoint> {
    dc_guard(zb, rate)?;
    let m = maximize(|a| dc_objective(zb, rate, a), 0.5, 1.0, opts.tol)?;
    Ok(finite_point(rate, m, flag_for(&m, 0.5, 1.0, opts.tol)))
}

/// `sup_{α∈[α_min,1]} (1-α)/α (R - H̄↑_α(Z|B))`.
pub fn dc_sphere_packing(zb: &BipartiteState, rate: f64, opts: &ExponentOptions) -> Result<CurvePoint> {
    dc_guard(zb, rate)?;
    capped_sup(rate, |a| dc_objective(zb, rate, a), opts.alpha_min, 1.0, true, opts.tol)
}

fn pa_guard(xc: &BipartiteState, rate: f64) -> Result<()> {
    let h = von_neumann_cond(xc);
    if !(rate > 0.0) {
        return validation(format!("extraction rate {rate} must be positive"));
    }
    if !(rate < h) {
        return validation(format!("extraction rate {rate} must be below the conditional entropy H(X|C) = {h}"));
    }
    Ok(())
}

fn pa_objective(xc: &BipartiteState, rate: f64, alpha: f64) -> Result<f64> {
    if alpha <= 1.0 {
        return Ok(0.0);
    }
    Ok((alpha - 1.0) * (cond_entropy_sand_down(xc, alpha)? - rate))
}

/// `max_{α∈[1,2]} (α-1)(H̃↓_α(X|C) - R)` for `R < H(X|C)`.
pub fn pa_exponent_lower(xc: &BipartiteState, rate: f64, opts: &ExponentOptions) -> Result<CurvePoint> {
    pa_guard(xc, rate)?;
    let m = maximize(|a| pa_objective(xc, rate, a), 1.0, 2.0, opts.tol)?;
    Ok(finite_point(rate, m, flag_for(&m, 1.0, 2.0, opts.tol)))
}

/// `sup_{α∈[1,α_max]} (α-1)(H̃↓_α(X|C) - R)`.
pub fn pa_sphere_packing(xc: &BipartiteState, rate: f64, opts: &ExponentOptions) -> Result<CurvePoint> {
    pa_guard(xc, rate)?;
    capped_sup(rate, |a| pa_objective(xc, rate, a), 1.0, opts.alpha_max, false, opts.tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PrefactorForm {
    /// `E + (1 + |E'|) log n / (2n) + K/n`.
    Dc,
    /// `E/2 + (1 + |E'|) log n / (4n) + K/n`.
    Pa,
}

/// Finite-blocklength right-hand side with a caller-supplied constant `K`.
pub fn finite_n_prefactor(form: PrefactorForm, e_sp: f64, slope: f64, n: usize, k: f64) -> Result<f64> {
    if n < 2 {
        return validation(format!("blocklength must be at least 2, got {n}"));
    }
    let nf = n as f64;
    let log_term = (1.0 + slope.abs()) * nf.log2() / nf;
    Ok(match form {
        PrefactorForm::Dc => e_sp + 0.5 * log_term + k / nf,
        PrefactorForm::Pa => 0.5 * e_sp + 0.25 * log_term + k / nf,
    })
}

pub const SLOPE_STEP: f64 = 1e-4;

/// Slope of a sphere-packing curve in the rate, by central differences.
pub fn sphere_packing_slope<F>(f: F, rate: f64, lo: f64, hi: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    optimize::slope(f, rate, SLOPE_STEP, lo, hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "outcome", content = "rate", rename_all = "snake_case")]
pub enum CriticalRate {
    /// The bounds agree on one side of this rate.
    Crossing(f64),
    /// The sphere-packing optimizer stays inside the lower bound's range.
    AgreeEverywhere,
    /// The sphere-packing optimizer never enters the lower bound's range.
    NeverAgree,
}

const CRITICAL_TOL: f64 = 1e-6;
const EDGE: f64 = 1e-9;

fn critical<F>(mut inside: F, lo: f64, hi: f64) -> Result<CriticalRate>
where
    F: FnMut(f64) -> Result<bool>,
{
    let (a, b) = (inside(lo)?, inside(hi)?);
    match (a, b) {
        (true, true) => Ok(CriticalRate::AgreeEverywhere),
        (false, false) => Ok(CriticalRate::NeverAgree),
        _ => Ok(CriticalRate::Crossing(optimize::bisect(inside, lo, hi, CRITICAL_TOL)?)),
    }
}

/// Rate above which the CC sphere-packing optimizer satisfies `s* ≤ 1`.
pub fn critical_rate_cc(w: &CQChannel, opts: &ExponentOptions) -> Result<CriticalRate> {
    let log_d = (w.inputs() as f64).log2();
    critical(
        |r| {
            let p = cc_sphere_packing(w, r, opts)?;
            Ok(p.flag != Flag::Diverged && p.optimizer <= 1.0)
        },
        EDGE,
        log_d - EDGE,
    )
}

/// Rate below which the DC sphere-packing optimizer satisfies `α* ≥ 1/2`.
pub fn critical_rate_dc(zb: &BipartiteState, opts: &ExponentOptions) -> Result<CriticalRate> {
    let h = von_neumann_cond(zb);
    let log_d = (zb.dim_a() as f64).log2();
    critical(
        |r| {
            let p = dc_sphere_packing(zb, r, opts)?;
            Ok(p.flag != Flag::Diverged && p.optimizer >= 0.5)
        },
        h + EDGE,
        log_d - EDGE,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DensityMatrix;
    use crate::random;
    use crate::states::{bsc, measure_conjugate, purify_source, symmetric_channel, Basis, SymmetricFamily, System};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn orthogonal() -> SymmetricChannel {
        symmetric_channel(SymmetricFamily::ClassicalSymmetric { row: vec![1.0, 0.0] }).unwrap()
    }

    fn useless() -> CQChannel {
        let r = DensityMatrix::diagonal(&[0.4, 0.6]).unwrap();
        CQChannel::new(vec![r.clone(), r]).unwrap()
    }

    fn classical_e0(s: f64, p: f64) -> f64 {
        let a = 1.0 / (1.0 + s);
        s - (1.0 + s) * (p.powf(a) + (1.0 - p).powf(a)).log2()
    }

    #[test]
    fn e0_examples() {
        let u = ProbabilityVector::uniform(2);
        for s in [0.0, 0.3, 1.0, 4.0] {
            assert_abs_diff_eq!(gallager_e0(s, &u, &useless()).unwrap(), 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(gallager_e0(s, &u, orthogonal().channel()).unwrap(), s, epsilon = 1e-12);
            let b = bsc(0.1).unwrap();
            assert_abs_diff_eq!(gallager_e0(s, &u, b.channel()).unwrap(), classical_e0(s, 0.1), epsilon = 1e-12);
        }
        assert!(gallager_e0(-0.1, &u, &useless()).is_err());
    }

    #[test]
    fn identity_examples() {
        for s in [0.25, 1.0, 3.0] {
            let c = e0_entropy_identity(s, orthogonal().channel()).unwrap();
            assert_abs_diff_eq!(c.lhs, s, epsilon = 1e-10);
            assert!(c.gap < 1e-10);
        }
        let c = e0_entropy_identity(1e-7, bsc(0.2).unwrap().channel()).unwrap();
        assert!(c.lhs.abs() < 1e-6 && c.rhs.abs() < 1e-6);
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..5 {
            let w = random::mixed_channel(&mut rng, 2, 2);
            assert!(e0_entropy_identity(1.0, &w).unwrap().gap < 1e-8);
        }
    }

    #[test]
    fn holevo_examples() {
        let u = ProbabilityVector::uniform(2);
        for fam in
            [SymmetricFamily::ClassicalSymmetric { row: vec![0.9, 0.1] }, SymmetricFamily::DihedralQubit { theta: 0.4 }]
        {
            let c = holevo_condition(&u, 0.7, symmetric_channel(fam).unwrap().channel()).unwrap();
            assert!(c.satisfied && c.residuals.iter().all(|r| r.abs() < 1e-12));
        }
        assert!(holevo_condition(&u, 0.5, &useless()).unwrap().satisfied);
        let asym = CQChannel::new(vec![
            DensityMatrix::basis_state(2, 0),
            DensityMatrix::maximally_mixed(2),
            DensityMatrix::basis_state(2, 0),
        ])
        .unwrap();
        let c = holevo_condition(&ProbabilityVector::uniform(3), 1.0, &asym).unwrap();
        assert!(!c.satisfied);
        assert!(c.residuals.iter().any(|r| r.abs() > 1e-4));
    }

    #[test]
    fn e0_opt_asymmetric_classical_channel() {
        // Outputs |0⟩⟨0| and I/2; the classical objective is concave in the
        // weight of input 0 and maximized by ternary search.
        let w = CQChannel::new(vec![
            DensityMatrix::diagonal(&[1.0, 0.0]).unwrap(),
            DensityMatrix::diagonal(&[0.5, 0.5]).unwrap(),
        ])
        .unwrap();
        for s in [0.5, 2.0, 15.0, 64.0] {
            let a = 1.0 / (1.0 + s);
            let f = |q: f64| {
                let y0 = q + (1.0 - q) * 0.5f64.powf(a);
                let y1 = (1.0 - q) * 0.5f64.powf(a);
                -(y0.powf(1.0 + s) + y1.powf(1.0 + s)).log2()
            };
            let (mut lo, mut hi) = (0.0f64, 1.0f64);
            for _ in 0..200 {
                let (m1, m2) = (lo + (hi - lo) / 3.0, hi - (hi - lo) / 3.0);
                if f(m1) < f(m2) {
                    lo = m1;
                } else {
                    hi = m2;
                }
            }
            let opt = e0_opt(s, &w).unwrap();
            assert_abs_diff_eq!(opt.value, f(0.5 * (lo + hi)), epsilon = 1e-9);
            assert!(opt.certificate.satisfied, "s = {s}: {:?}", opt.certificate);
        }
    }

    #[test]
    fn e0_opt_examples() {
        let b = bsc(0.15).unwrap();
        let o = e0_opt(0.8, b.channel()).unwrap();
        assert_eq!(o.iterations, 0);
        assert!(o.certificate.satisfied);
        let o = e0_opt(1.0, &useless()).unwrap();
        assert_abs_diff_eq!(o.value, 0.0, epsilon = 1e-12);

        // |0⟩, |1⟩ and a useless mixed letter: mass leaves the mixed letter.
        let w = CQChannel::new(vec![
            DensityMatrix::basis_state(2, 0),
            DensityMatrix::basis_state(2, 1),
            DensityMatrix::maximally_mixed(2),
        ])
        .unwrap();
        let s = 1.0;
        let o = e0_opt(s, &w).unwrap();
        assert!(o.certificate.satisfied, "{:?}", o.certificate);
        assert!(o.distribution[2] < 1e-3);
        assert!(o.value >= gallager_e0(s, &ProbabilityVector::uniform(3), &w).unwrap());
        // Grid search over the simplex never beats the optimizer.
        let steps = 40;
        for i in 0..=steps {
            for j in 0..=(steps - i) {
                let p = [i as f64 / steps as f64, j as f64 / steps as f64];
                let pv = ProbabilityVector::new(vec![p[0], p[1], (1.0 - p[0] - p[1]).max(0.0)]).unwrap();
                assert!(gallager_e0(s, &pv, &w).unwrap() <= o.value + 1e-9);
            }
        }
    }

    #[test]
    fn cc_examples() {
        let opts = ExponentOptions::default();
        let o = orthogonal();
        let p = cc_exponent_lower(&o, 0.5, &opts).unwrap();
        assert_eq!(p.exponent, ExtReal::Finite(0.5));
        assert_eq!(p.optimizer, 1.0);
        assert_eq!(p.flag, Flag::Boundary);
        let sp = cc_sphere_packing(o.channel(), 0.5, &opts).unwrap();
        assert_eq!(sp.exponent, ExtReal::PosInfinity);
        assert_eq!(sp.flag, Flag::Diverged);

        let b = bsc(0.1).unwrap();
        let cap = 1.0 - binary_entropy(0.1);
        let p = cc_exponent_lower(&b, cap + 0.01, &opts).unwrap();
        assert_eq!(p.exponent, ExtReal::Finite(0.0));
        assert_eq!(p.optimizer, 0.0);
        let sp = cc_sphere_packing(b.channel(), cap + 0.01, &opts).unwrap();
        assert_eq!(sp.exponent, ExtReal::Finite(0.0));
        assert!(cc_exponent_lower(&b, 1.0, &opts).is_err());
    }

    fn binary_entropy(p: f64) -> f64 {
        -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
    }

    #[test]
    fn dc_examples() {
        let opts = ExponentOptions::default();
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let w = random::mixed_channel(&mut rng, 2, 2);
        let zb = build_cq_state(&random::distribution(&mut rng, 2), &w).unwrap();
        let h = von_neumann_cond(&zb);
        let p = dc_exponent_lower(&zb, h + 1e-4, &opts).unwrap();
        assert!(p.exponent.to_f64() < 1e-6 && p.optimizer > 0.99);
        assert!(dc_exponent_lower(&zb, h - 1e-3, &opts).is_err());
        let useless = build_cq_state(&ProbabilityVector::uniform(2), &useless()).unwrap();
        assert!(dc_exponent_lower(&useless, 0.9, &opts).is_err());
        let lo = dc_exponent_lower(&zb, h + 0.05, &opts).unwrap();
        let sp = dc_sphere_packing(&zb, h + 0.05, &opts).unwrap();
        assert!(sp.optimizer >= 0.5);
        assert_abs_diff_eq!(lo.exponent.to_f64(), sp.exponent.to_f64(), epsilon = 1e-8);
    }

    #[test]
    fn pa_examples() {
        let opts = ExponentOptions::default();
        let b = DensityMatrix::diagonal(&[0.3, 0.7]).unwrap();
        let indep =
            build_cq_state(&ProbabilityVector::uniform(2), &CQChannel::new(vec![b.clone(), b]).unwrap()).unwrap();
        let p = pa_exponent_lower(&indep, 0.5, &opts).unwrap();
        assert_abs_diff_eq!(p.exponent.to_f64(), 0.5, epsilon = 1e-10);
        assert_eq!(p.optimizer, 2.0);
        let sp = pa_sphere_packing(&indep, 0.5, &opts).unwrap();
        assert_eq!(sp.flag, Flag::Diverged);
        assert!(pa_exponent_lower(&indep, 1.0, &opts).is_err());
    }

    #[test]
    fn pa_matches_dual_dc() {
        let opts = ExponentOptions::default();
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for _ in 0..3 {
            let w = random::mixed_channel(&mut rng, 2, 2);
            let psi = purify_source(&random::distribution(&mut rng, 2), &w).unwrap();
            let zb = psi.measure_a(Basis::Computational, &[System::B]).unwrap();
            let xc = measure_conjugate(&psi, &[System::APrime, System::C]).unwrap();
            let h = von_neumann_cond(&zb);
            for frac in [0.2, 0.5, 0.8] {
                let r_dc = h + frac * (1.0 - h);
                let dc = dc_exponent_lower(&zb, r_dc, &opts).unwrap();
                let pa = pa_exponent_lower(&xc, 1.0 - r_dc, &opts).unwrap();
                assert_abs_diff_eq!(dc.exponent.to_f64(), pa.exponent.to_f64(), epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn prefactor_examples() {
        let dc = finite_n_prefactor(PrefactorForm::Dc, 0.3, 0.5, 1 << 20, 0.0).unwrap();
        let n = (1u64 << 20) as f64;
        assert!((dc - 0.3).abs() <= 2.0 * n.log2() / n);
        let pa = finite_n_prefactor(PrefactorForm::Pa, 0.3, 0.5, 100, 0.0).unwrap();
        let dc = finite_n_prefactor(PrefactorForm::Dc, 0.3, 0.5, 100, 0.0).unwrap();
        assert_abs_diff_eq!(pa, 0.5 * dc, epsilon = 1e-15);
        assert!(finite_n_prefactor(PrefactorForm::Dc, 0.3, 0.5, 1, 0.0).is_err());
        let s = sphere_packing_slope(|r| Ok(0.7 * r), 0.4, 0.0, 1.0).unwrap();
        assert_abs_diff_eq!(s, 0.7, epsilon = 1e-6);
    }

    #[test]
    fn critical_rate_examples() {
        let opts = ExponentOptions::default();
        let p: f64 = 0.1;
        let delta = p.sqrt() / (p.sqrt() + (1.0 - p).sqrt());
        let expect = 1.0 - binary_entropy(delta);
        match critical_rate_cc(bsc(p).unwrap().channel(), &opts).unwrap() {
            CriticalRate::Crossing(r) => assert_abs_diff_eq!(r, expect, epsilon = 2e-6),
            other => panic!("{other:?}"),
        }
        assert_eq!(critical_rate_cc(orthogonal().channel(), &opts).unwrap(), CriticalRate::NeverAgree);
    }

    #[test]
    fn curves() {
        let pts = sample_rates(&[0.1, 0.2, 0.3], |r| {
            Ok(CurvePoint { rate: r, exponent: ExtReal::Finite(1.0 - r), optimizer: 0.0, flag: Flag::Interior })
        });
        let curve = ExponentCurve::new(pts.into_iter().collect::<Result<Vec<_>>>().unwrap()).unwrap();
        assert!(curve.is_nonincreasing(1e-9));
        assert_eq!(curve.samples()[1].rate, 0.2);
        let r = RateRegion::from_dc(4, 0.5);
        assert_abs_diff_eq!(r.r_pa, 1.5, epsilon = 1e-12);
    }
}
