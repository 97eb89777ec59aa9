//! Exact finite-blocklength experiments: compression with quantum side
//! information under a linear hash, privacy amplification, the
//! guessing/fidelity duality, codes from compressors, and seeded rate scans.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::codes::{self, complete_invertible, coset_enumerate, dual_map, FieldMatrix};
use crate::config::{letter_workload, operator_dim, TOL};
use crate::discrimination::{
    max_fidelity_uniform, pguess, pretty_good_measurement, purified_distance, solve_max_fidelity, CertifiedValue,
    Ensemble, SolverOptions,
};
use crate::entropy::BipartiteState;
use crate::error::{validation, Error, Result};
use crate::exponents::{
    cc_exponent_lower, cc_sphere_packing, dc_exponent_lower, dc_sphere_packing, finite_n_prefactor, pa_exponent_lower,
    pa_sphere_packing, sphere_packing_slope, ExponentOptions, PrefactorForm,
};
use crate::ext::ExtReal;
use crate::linalg::{self, fidelity_psd, CMat, HermitianMatrix};
use crate::states::{
    apply_linear_permutation, build_cq_state, cq_state_from_blocks, purify_source, purify_source_conjugate,
    search_pauli_action, tensor_power, Basis, CQChannel, GroupAction, ProbabilityVector, SourceFamily,
    SymmetricChannel, System,
};

/// A classical source with a CQ channel to the side-information holder.
#[derive(Debug, Clone, PartialEq)]
pub struct Source {
    pub distribution: ProbabilityVector,
    pub channel: CQChannel,
}

impl Source {
    pub fn new(distribution: ProbabilityVector, channel: CQChannel) -> Result<Self> {
        if distribution.len() != channel.inputs() {
            return validation(format!(
                "distribution has {} entries but the channel has {} inputs",
                distribution.len(),
                channel.inputs()
            ));
        }
        Ok(Source { distribution, channel })
    }

    pub fn uniform(channel: CQChannel) -> Self {
        Source { distribution: ProbabilityVector::uniform(channel.inputs()), channel }
    }

    pub fn alphabet(&self) -> usize {
        self.channel.inputs()
    }

    /// `Σ_z P(z) |z⟩⟨z| ⊗ φ(z)`.
    pub fn cq_state(&self) -> Result<BipartiteState> {
        build_cq_state(&self.distribution, &self.channel)
    }
}

/// One syndrome's share of the guessing problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SyndromeTerm {
    pub index: usize,
    pub probability: f64,
    pub pguess: CertifiedValue,
    pub pgm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DcReport {
    pub n: usize,
    pub d: usize,
    pub m: usize,
    pub rate: f64,
    /// Error of the best decoder found, `1 - Σ Pr[ž] lower(ž)`.
    pub measured: f64,
    /// Bracket on the optimal error probability.
    pub error: CertifiedValue,
    pub pgm_error: f64,
    pub syndromes: Vec<SyndromeTerm>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PaReport {
    pub n: usize,
    pub d: usize,
    /// `n` minus the number of extracted digits.
    pub m: usize,
    pub rate: f64,
    /// Purified distance to `π ⊗ ρ_{C^n}` with the actual marginal.
    pub measured: f64,
    /// `F(ρ_{X̂C^n}, π ⊗ ρ_{C^n})^2`.
    pub fidelity: f64,
    /// Bracket on `max_σ F(ρ_{X̂C^n}, π ⊗ σ)^2`.
    pub optimized: CertifiedValue,
    /// Purified distance at the best `σ` found.
    pub optimized_distance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DualityReport {
    pub pguess: CertifiedValue,
    pub fidelity: CertifiedValue,
    /// Distance between the two brackets, zero when they overlap.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CodeReport {
    pub best_syndrome: Vec<u32>,
    pub code: Vec<Vec<u32>>,
    pub best_error: f64,
    pub coset_errors: Vec<f64>,
    pub average_error: f64,
}

fn check_hash(h: &FieldMatrix, d: usize, n: usize) -> Result<()> {
    if h.modulus() as usize != d {
        return validation(format!("hash is over Z_{} but the source alphabet has {d} letters", h.modulus()));
    }
    if h.cols() != n {
        return validation(format!("hash has {} columns, expected n = {n}", h.cols()));
    }
    if !h.is_full_row_rank() {
        return validation("hash matrix must have full row rank");
    }
    Ok(())
}

/// `(P^n(z), ⊗_i φ(z_i))` for one sequence.
fn letter_product(source: &Source, z: &[u32]) -> (f64, CMat) {
    let p = source.distribution.as_slice();
    let mut weight = 1.0;
    let mut op = CMat::identity(1, 1);
    for &zi in z {
        weight *= p[zi as usize];
        op = linalg::kron(&op, source.channel.output(zi as usize).matrix());
    }
    (weight, op)
}

fn weighted_ops(source: &Source, coset: &[Vec<u32>]) -> Vec<HermitianMatrix> {
    coset
        .iter()
        .map(|z| {
            let (w, op) = letter_product(source, z);
            HermitianMatrix::hermitian_part(op * Complex64::new(w, 0.0))
        })
        .collect()
}

/// Total weight, certified guessing probability and PGM success of the
/// normalized ensemble; `None` for a zero-weight family.
fn guess_weighted(ops: &[HermitianMatrix], tol: f64) -> Result<Option<(f64, CertifiedValue, f64)>> {
    let total: f64 = ops.iter().map(|o| o.trace().max(0.0)).sum();
    if !(total > 0.0) {
        return Ok(None);
    }
    if ops.len() == 1 {
        return Ok(Some((total, CertifiedValue::exact(1.0), 1.0)));
    }
    let (total, e) = Ensemble::from_weighted(ops)?;
    let value = pguess(&e, tol)?;
    let (_, pgm) = pretty_good_measurement(&e)?;
    Ok(Some((total, value, pgm)))
}

fn guess_terms(groups: Vec<Vec<HermitianMatrix>>, tol: f64) -> Result<Vec<SyndromeTerm>> {
    let results: Vec<Result<Option<(f64, CertifiedValue, f64)>>> =
        groups.par_iter().map(|ops| guess_weighted(ops, tol)).collect();
    let mut terms = Vec::new();
    for (index, r) in results.into_iter().enumerate() {
        if let Some((probability, pguess, pgm)) = r? {
            terms.push(SyndromeTerm { index, probability, pguess, pgm });
        }
    }
    Ok(terms)
}

fn aggregate(terms: &[SyndromeTerm]) -> CertifiedValue {
    let lower = terms.iter().map(|t| t.probability * t.pguess.lower).sum::<f64>();
    let upper = terms.iter().map(|t| t.probability * t.pguess.upper).sum::<f64>();
    CertifiedValue::new(lower.min(1.0), upper.min(1.0))
}

fn bits(d: usize) -> f64 {
    (d as f64).log2()
}

/// Exact error of decoding `Z^n` from `(H Z^n, B^n)`, by coset enumeration.
pub fn dc_error_exact(source: &Source, n: usize, h: &FieldMatrix, tol: f64) -> Result<DcReport> {
    let d = source.alphabet();
    check_hash(h, d, n)?;
    letter_workload(d, source.channel.output_dim(), n)?;
    let m = h.rows();
    let terms = guess_terms(coset_groups(source, h)?, tol)?;
    let success = aggregate(&terms);
    let pgm_success: f64 = terms.iter().map(|t| t.probability * t.pgm).sum();
    let error = CertifiedValue::new((1.0 - success.upper).max(0.0), (1.0 - success.lower).max(0.0));
    Ok(DcReport {
        n,
        d,
        m,
        rate: m as f64 * bits(d) / n as f64,
        measured: error.upper,
        error,
        pgm_error: (1.0 - pgm_success).max(0.0),
        syndromes: terms,
    })
}

/// Blocks `Σ_{x: ĝx = u} P^n(x) θ(x^n)` of the hashed CQ state, indexed by `u`.
fn hashed_blocks(source: &Source, n: usize, g_hat: &FieldMatrix) -> Result<Vec<CMat>> {
    let d = source.alphabet();
    letter_workload(d, source.channel.output_dim(), n)?;
    let total = codes::checked_power(d as u32, n, TOL.max_enumeration)?;
    let outputs = codes::checked_power(d as u32, g_hat.rows(), TOL.max_enumeration)?;
    let dim = operator_dim(source.channel.output_dim(), n)?;
    let mut blocks = vec![CMat::zeros(dim, dim); outputs];
    for idx in 0..total {
        let x = codes::index_to_vector(idx, d as u32, n);
        let (w, op) = letter_product(source, &x);
        if w > 0.0 {
            let u = codes::vector_to_index(&g_hat.mul_vec(&x), d as u32);
            blocks[u] += op * Complex64::new(w, 0.0);
        }
    }
    Ok(blocks)
}

/// Purified distance of `ĝ(X^n)` from uniform and independent of `C^n`.
pub fn pa_distance_exact(source: &Source, n: usize, g_hat: &FieldMatrix, tol: f64) -> Result<PaReport> {
    let d = source.alphabet();
    check_hash(g_hat, d, n)?;
    let blocks = hashed_blocks(source, n, g_hat)?;
    let k = blocks.len() as f64;
    let marginal = HermitianMatrix::hermitian_part(
        blocks.iter().fold(CMat::zeros(blocks[0].nrows(), blocks[0].ncols()), |acc, b| acc + b),
    );
    let mut f = 0.0;
    for b in &blocks {
        f += fidelity_psd(&HermitianMatrix::hermitian_part(b.clone()), &marginal)?;
    }
    let fidelity = (f * f / k).min(1.0);
    let state = cq_state_from_blocks(&blocks)?;
    let optimized = if blocks.len() == 1 {
        CertifiedValue::exact(1.0)
    } else {
        solve_max_fidelity(&state, SolverOptions::with_tol(tol))?.value
    };
    Ok(PaReport {
        n,
        d,
        m: n - g_hat.rows(),
        rate: g_hat.rows() as f64 * bits(d) / n as f64,
        measured: purified_distance(fidelity.sqrt()),
        fidelity,
        optimized,
        optimized_distance: purified_distance(optimized.lower.min(1.0).sqrt()),
    })
}

fn bracket_gap(a: CertifiedValue, b: CertifiedValue) -> f64 {
    (a.lower - b.upper).max(b.lower - a.upper).max(0.0)
}

/// Evaluates both sides of the guessing/fidelity duality with independent
/// solvers.
///
/// For the standard family the guessing side is solved by coset
/// enumeration and the fidelity side on the purification after `U_f`. For
/// the conjugate family the guessing side uses the purification (with `A'`
/// and `B` as side information) and the fidelity side the hashed CQ state
/// `ĝ(X^n)` on `C^n`, with `ĝ` from the dual map.
pub fn duality_check(
    source: &Source,
    family: SourceFamily,
    n: usize,
    h: &FieldMatrix,
    tol: f64,
) -> Result<DualityReport> {
    let d = source.alphabet();
    check_hash(h, d, n)?;
    letter_workload(d, source.channel.output_dim(), n)?;
    let pair = complete_invertible(h)?;
    let m = h.rows();
    let (pguess, fidelity) = match family {
        SourceFamily::Standard => {
            let guess = aggregate(&guess_terms(coset_groups(source, h)?, tol)?);
            let psi = purify_source(&source.distribution, &source.channel)?;
            let psi = apply_linear_permutation(&tensor_power(&psi, n)?, &pair.combined)?;
            let state = psi.measure_hat(m, Basis::Conjugate, &[System::APrime, System::C])?;
            (guess, fidelity_side(&state, tol)?)
        }
        SourceFamily::Conjugate => {
            let psi = purify_source_conjugate(&source.distribution, &source.channel)?;
            let psi = apply_linear_permutation(&tensor_power(&psi, n)?, &pair.combined)?;
            let groups = psi
                .syndrome_blocks(m, &[System::APrime, System::B])?
                .into_iter()
                .map(|g| g.into_iter().map(HermitianMatrix::hermitian_part).collect())
                .collect();
            let guess = aggregate(&guess_terms(groups, tol)?);
            let (_, g_hat) = dual_map(&pair.combined, m)?;
            let state = cq_state_from_blocks(&hashed_blocks(source, n, &g_hat)?)?;
            (guess, fidelity_side(&state, tol)?)
        }
    };
    Ok(DualityReport { pguess, fidelity, gap: bracket_gap(pguess, fidelity) })
}

fn coset_groups(source: &Source, h: &FieldMatrix) -> Result<Vec<Vec<HermitianMatrix>>> {
    let d = h.modulus();
    let syndromes = codes::checked_power(d, h.rows(), TOL.max_enumeration)?;
    (0..syndromes)
        .map(|s| {
            let coset = coset_enumerate(h, &codes::index_to_vector(s, d, h.rows()))?;
            Ok(weighted_ops(source, &coset))
        })
        .collect()
}

fn fidelity_side(state: &BipartiteState, tol: f64) -> Result<CertifiedValue> {
    if state.dim_a() == 1 {
        return Ok(CertifiedValue::exact(1.0));
    }
    max_fidelity_uniform(state, tol)
}

/// Every coset of `ker H` as a code for `W` with uniform messages; the
/// best one (ties to the smallest syndrome) is returned with its exact
/// error.
pub fn code_from_compressor(w: &SymmetricChannel, n: usize, h: &FieldMatrix, tol: f64) -> Result<CodeReport> {
    let source = Source::uniform(w.channel().clone());
    let d = source.alphabet();
    check_hash(h, d, n)?;
    letter_workload(d, source.channel.output_dim(), n)?;
    let m = h.rows();
    let count = codes::checked_power(d as u32, m, TOL.max_enumeration)?;
    let cosets =
        (0..count).map(|s| coset_enumerate(h, &codes::index_to_vector(s, d as u32, m))).collect::<Result<Vec<_>>>()?;
    let terms = guess_terms(cosets.iter().map(|c| weighted_ops(&source, c)).collect(), tol)?;
    let coset_errors: Vec<f64> = terms.iter().map(|t| (1.0 - t.pguess.lower).max(0.0)).collect();
    let mut best = 0;
    for (i, &e) in coset_errors.iter().enumerate() {
        if e < coset_errors[best] - 1e-12 {
            best = i;
        }
    }
    let average_error = terms.iter().zip(&coset_errors).map(|(t, e)| t.probability * e).sum::<f64>();
    Ok(CodeReport {
        best_syndrome: codes::index_to_vector(terms[best].index, d as u32, m),
        code: cosets[terms[best].index].clone(),
        best_error: coset_errors[best],
        coset_errors,
        average_error,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ScanMode {
    Dc,
    Pa,
    Cc,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanConfig {
    pub mode: ScanMode,
    pub ns: Vec<usize>,
    pub rates: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    /// Constant of the finite-blocklength bound; omitted when `None`.
    pub k: Option<f64>,
    pub tol: f64,
    pub exponents: ExponentOptions,
    /// Group action certifying symmetry for CC scans; a Pauli action is
    /// searched for when absent.
    pub symmetry: Option<GroupAction>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CellStatus {
    Ok,
    Invalid,
    Budget,
    Nonconvergence,
}

impl CellStatus {
    fn of(e: &Error) -> Self {
        match e {
            Error::Validation(_) => CellStatus::Invalid,
            Error::Resource(_) => CellStatus::Budget,
            Error::NonConvergence { .. } => CellStatus::Nonconvergence,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CellStatus::Ok => "ok",
            CellStatus::Invalid => "invalid",
            CellStatus::Budget => "budget",
            CellStatus::Nonconvergence => "nonconvergence",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanCell {
    pub n: usize,
    /// Hash rows for DC and CC, `n` minus extracted digits for PA.
    pub m: usize,
    /// Rate actually realized by the integer hash size.
    pub rate: f64,
    /// Mean of `trials` over the sampled hashes.
    pub measured: Option<f64>,
    pub trials: Vec<f64>,
    pub bound_lower: Option<ExtReal>,
    pub bound_sp: Option<ExtReal>,
    /// Finite-blocklength right-hand side, present when `K` is supplied.
    pub finite_n: Option<f64>,
    pub status: CellStatus,
    pub message: Option<String>,
    pub seed: u64,
    /// Rank-deficient Toeplitz draws that were rejected.
    pub resamples: usize,
}

const MAX_RESAMPLES: usize = 10_000;

/// Uniform Toeplitz `rows x n` matrix over `Z_d` with full row rank, and
/// the number of rank-deficient draws rejected on the way.
pub fn sample_toeplitz<R: Rng + ?Sized>(rng: &mut R, d: u32, rows: usize, n: usize) -> Result<(FieldMatrix, usize)> {
    if rows == 0 {
        return Ok((FieldMatrix::zeros(d, 0, n)?, 0));
    }
    for resamples in 0..MAX_RESAMPLES {
        let seed: Vec<u32> = (0..rows + n - 1).map(|_| rng.random_range(0..d)).collect();
        let t = codes::toeplitz(d, &seed, rows, n)?;
        if t.full_rank {
            return Ok((t.matrix, resamples));
        }
    }
    Err(Error::Resource(format!("no full-rank {rows}x{n} Toeplitz draw in {MAX_RESAMPLES} tries")))
}

fn realized_rows(rate: f64, n: usize, d: usize) -> Result<usize> {
    let log_d = bits(d);
    if !(0.0..=log_d).contains(&rate) {
        return validation(format!("rate {rate} outside [0, log d = {log_d}]"));
    }
    Ok(((rate * n as f64 / log_d).round() as usize).min(n))
}

/// Asymptotic bounds and, with `k`, the finite-blocklength right-hand side.
struct Bounds {
    lower: Option<ExtReal>,
    sp: Option<ExtReal>,
    finite_n: Option<f64>,
}

fn bounds(mode: ScanMode, source: &Source, rate: f64, n: usize, cfg: &ScanConfig) -> Result<Bounds> {
    let opts = &cfg.exponents;
    let point = |r: Result<crate::exponents::CurvePoint>| r.ok().map(|p| p.exponent);
    Ok(match mode {
        ScanMode::Dc | ScanMode::Pa => {
            let state = source.cq_state()?;
            let (lower, sp, form): (_, fn(&BipartiteState, f64, &ExponentOptions) -> _, _) = if mode == ScanMode::Dc {
                (dc_exponent_lower(&state, rate, opts), dc_sphere_packing, PrefactorForm::Dc)
            } else {
                (pa_exponent_lower(&state, rate, opts), pa_sphere_packing, PrefactorForm::Pa)
            };
            let sp_value = point(sp(&state, rate, opts));
            let finite_n = match (cfg.k, sp_value.and_then(ExtReal::finite)) {
                (Some(k), Some(e)) if n >= 2 => {
                    let slope = sphere_packing_slope(
                        |r| Ok(sp(&state, r, opts)?.exponent.to_f64()),
                        rate,
                        f64::NEG_INFINITY,
                        f64::INFINITY,
                    )
                    .ok()
                    .filter(|s| s.is_finite());
                    slope.map(|s| finite_n_prefactor(form, e, s, n, k)).transpose()?
                }
                _ => None,
            };
            Bounds { lower: point(lower), sp: sp_value, finite_n }
        }
        ScanMode::Cc => {
            let lower = symmetric(source, cfg).ok().and_then(|w| point(cc_exponent_lower(&w, rate, opts)));
            Bounds { lower, sp: point(cc_sphere_packing(&source.channel, rate, opts)), finite_n: None }
        }
    })
}

fn symmetric(source: &Source, cfg: &ScanConfig) -> Result<SymmetricChannel> {
    let action = match &cfg.symmetry {
        Some(a) => a.clone(),
        None => search_pauli_action(&source.channel)
            .ok_or_else(|| Error::Validation("code-from-compressor needs a symmetric channel".into()))?,
    };
    SymmetricChannel::new(source.channel.clone(), action)
}

fn run_cell(source: &Source, cfg: &ScanConfig, index: usize, n: usize, rate: f64) -> ScanCell {
    let d = source.alphabet();
    let mut cell = ScanCell {
        n,
        m: 0,
        rate,
        measured: None,
        trials: Vec::new(),
        bound_lower: None,
        bound_sp: None,
        finite_n: None,
        status: CellStatus::Ok,
        message: None,
        seed: cfg.seed,
        resamples: 0,
    };
    if let Err(e) = fill_cell(source, cfg, index, &mut cell, d) {
        cell.status = CellStatus::of(&e);
        cell.message = Some(e.to_string());
        cell.measured = None;
    }
    cell
}

fn fill_cell(source: &Source, cfg: &ScanConfig, index: usize, cell: &mut ScanCell, d: usize) -> Result<()> {
    let n = cell.n;
    if n == 0 {
        return validation("blocklength must be positive");
    }
    let units = realized_rows(cell.rate, n, d)?;
    // Hash rows: DC compresses to `units` digits, PA extracts `units`
    // digits, CC sends `units` digits so the check matrix has `n - units`.
    let rows = match cfg.mode {
        ScanMode::Dc | ScanMode::Pa => units,
        ScanMode::Cc => n - units,
    };
    cell.m = if cfg.mode == ScanMode::Pa { n - units } else { rows };
    cell.rate = units as f64 * bits(d) / n as f64;
    let b = bounds(cfg.mode, source, cell.rate, n, cfg)?;
    cell.bound_lower = b.lower;
    cell.bound_sp = b.sp;
    cell.finite_n = b.finite_n;
    if cfg.trials == 0 {
        return validation("at least one trial is required");
    }
    let sym = if cfg.mode == ScanMode::Cc { Some(symmetric(source, cfg)?) } else { None };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index as u64);
    for _ in 0..cfg.trials {
        let (h, resamples) = sample_toeplitz(&mut rng, d as u32, rows, n)?;
        cell.resamples += resamples;
        let value = match cfg.mode {
            ScanMode::Dc => dc_error_exact(source, n, &h, cfg.tol)?.measured,
            ScanMode::Pa => pa_distance_exact(source, n, &h, cfg.tol)?.measured,
            ScanMode::Cc => code_from_compressor(sym.as_ref().expect("checked above"), n, &h, cfg.tol)?.best_error,
        };
        cell.trials.push(value);
    }
    cell.measured = Some(cell.trials.iter().sum::<f64>() / cell.trials.len() as f64);
    Ok(())
}

/// One cell per `(n, rate)` pair, `n`-major. Cells run in parallel; each
/// draws its hashes from its own ChaCha stream so results depend only on
/// the seed and the cell's position.
pub fn rate_scan(source: &Source, cfg: &ScanConfig) -> Vec<ScanCell> {
    let cells: Vec<(usize, f64)> = cfg.ns.iter().flat_map(|&n| cfg.rates.iter().map(move |&r| (n, r))).collect();
    cells.par_iter().enumerate().map(|(i, &(n, r))| run_cell(source, cfg, i, n, r)).collect()
}

/// Named bound values of a scan cell, for JSON reports.
pub fn bound_values(cell: &ScanCell) -> BTreeMap<&'static str, ExtReal> {
    let mut out = BTreeMap::new();
    if let Some(v) = cell.bound_lower {
        out.insert("lower", v);
    }
    if let Some(v) = cell.bound_sp {
        out.insert("sphere_packing", v);
    }
    if let Some(v) = cell.finite_n {
        out.insert("finite_n", ExtReal::Finite(v));
    }
    out
}
