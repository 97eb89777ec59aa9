use std::fs;

use cqexp_core::entropy::{cond_entropy_petz_up, cond_entropy_sand_down, von_neumann_cond};
use cqexp_core::experiments::{duality_check, rate_scan, sample_toeplitz};
use cqexp_core::exponents::{
    cc_exponent_lower, cc_sphere_packing, critical_rate_cc, critical_rate_dc, dc_exponent_lower, dc_sphere_packing,
    pa_exponent_lower, pa_sphere_packing, sample_rates,
};
use cqexp_core::states::{purify_source, search_pauli_action, Basis, System};
use cqexp_core::{
    ChannelSpecFile, Error, ExponentOptions, Result, ScanConfig, ScanMode, Source, SourceFamily, SymmetricChannel,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::output::{emit, ext, float, parse_f64_list, parse_usize_list, Csv};
use crate::{Command, Common, CriticalWhich, CurveFamily, DualityFamily, ExponentArgs, Mode, Which};

pub const CURVE_HEADER: &str = "rate,exponent,optimizer,flag";
pub const SCAN_HEADER: &str = "n,m,rate,measured,bound_lower,bound_sp,status,seed";

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Entropy { common, alphas, which } => entropy(&common, &alphas, which),
        Command::Curve { common, exponents, family, rates } => curve(&common, &exponents, family, &rates),
        Command::Duality { common, n, m, seed, trials, family } => duality(&common, n, m, seed, trials, family),
        Command::Simulate { common, exponents, mode, n, rates, seed, trials, k } => {
            simulate(&common, &exponents, mode, &n, &rates, seed, trials, k)
        }
        Command::CriticalRate { common, exponents, which } => critical(&common, &exponents, which),
    }
}

fn load(common: &Common) -> Result<(ChannelSpecFile, Source)> {
    let text = fs::read_to_string(&common.spec)
        .map_err(|e| Error::Validation(format!("cannot read {}: {e}", common.spec.display())))?;
    let spec = ChannelSpecFile::parse(&text)?;
    let source = spec.source(common.normalize)?;
    Ok((spec, source))
}

fn options(e: &ExponentArgs) -> ExponentOptions {
    ExponentOptions { tol: e.exponent_tol, s_max: e.smax, alpha_max: e.alpha_max, alpha_min: e.alpha_min }
}

fn json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s
}

fn symmetric(spec: &ChannelSpecFile, source: &Source, normalize: bool) -> Result<SymmetricChannel> {
    let action = match spec.symmetry(normalize)? {
        Some(a) => a,
        None => search_pauli_action(&source.channel).ok_or_else(|| {
            Error::Validation(
                "the uniform-input lower bound needs a symmetric channel; \
                 no symmetry block was given and no Pauli action matches the outputs"
                    .into(),
            )
        })?,
    };
    SymmetricChannel::new(source.channel.clone(), action)
}

fn entropy(common: &Common, alphas: &str, which: Which) -> Result<()> {
    let (_, source) = load(common)?;
    let alphas = parse_f64_list(alphas)?;
    let zb = source.cq_state()?;
    let xac = purify_source(&source.distribution, &source.channel)?
        .measure_a(Basis::Conjugate, &[System::APrime, System::C])?;
    let mut entries = Vec::new();
    for &alpha in &alphas {
        let mut e = serde_json::Map::new();
        e.insert("alpha".into(), json!(alpha));
        if matches!(which, Which::PetzUp | Which::Both) {
            e.insert("petz_up_zb".into(), json!(cond_entropy_petz_up(&zb, alpha)?));
            e.insert("petz_up_dual".into(), json!(cond_entropy_petz_up(&xac, alpha)?));
        }
        if matches!(which, Which::SandDown | Which::Both) {
            e.insert("sand_down_zb".into(), json!(cond_entropy_sand_down(&zb, alpha)?));
            e.insert("sand_down_dual".into(), json!(cond_entropy_sand_down(&xac, alpha)?));
        }
        if matches!(which, Which::Both) {
            // Petz at α plus sandwiched of the dual at 1/α; equals log d.
            let sum = cond_entropy_petz_up(&zb, alpha)? + cond_entropy_sand_down(&xac, 1.0 / alpha)?;
            e.insert("dual_sum".into(), json!(sum));
        }
        entries.push(Value::Object(e));
    }
    let record = json!({
        "d": source.alphabet(),
        "log_d": (source.alphabet() as f64).log2(),
        "von_neumann_zb": von_neumann_cond(&zb),
        "von_neumann_dual": von_neumann_cond(&xac),
        "entries": entries,
    });
    emit(common.out.as_deref(), &json_text(&record))
}

fn curve(common: &Common, e: &ExponentArgs, family: CurveFamily, rates: &str) -> Result<()> {
    let (spec, source) = load(common)?;
    let rates = parse_f64_list(rates)?;
    let opts = options(e);
    let state = source.cq_state()?;
    let sym = match family {
        CurveFamily::CcLower => Some(symmetric(&spec, &source, common.normalize)?),
        _ => None,
    };
    let points = sample_rates(&rates, |r| match family {
        CurveFamily::CcLower => cc_exponent_lower(sym.as_ref().expect("built above"), r, &opts),
        CurveFamily::CcSp => cc_sphere_packing(&source.channel, r, &opts),
        CurveFamily::DcLower => dc_exponent_lower(&state, r, &opts),
        CurveFamily::DcSp => dc_sphere_packing(&state, r, &opts),
        CurveFamily::PaLower => pa_exponent_lower(&state, r, &opts),
        CurveFamily::PaSp => pa_sphere_packing(&state, r, &opts),
    });
    let mut csv = Csv::new(CURVE_HEADER);
    for (&r, p) in rates.iter().zip(points) {
        match p {
            Ok(p) => csv.row(&[float(r), ext(Some(p.exponent)), float(p.optimizer), p.flag.to_string()]),
            Err(Error::Validation(_)) => csv.row(&[float(r), "nan".into(), "nan".into(), "invalid".into()]),
            Err(err) => return Err(err),
        }
    }
    emit(common.out.as_deref(), &csv.into_string())
}

fn duality(common: &Common, n: usize, m: usize, seed: u64, trials: usize, family: DualityFamily) -> Result<()> {
    let (_, source) = load(common)?;
    let d = source.alphabet() as u32;
    if !cqexp_core::codes::is_prime(d) {
        return Err(Error::Validation(format!("alphabet size {d} is not prime")));
    }
    if m > n || n == 0 {
        return Err(Error::Validation(format!("need 0 <= m <= n and n >= 1, got n = {n}, m = {m}")));
    }
    let families: &[SourceFamily] = match family {
        DualityFamily::Standard => &[SourceFamily::Standard],
        DualityFamily::Conjugate => &[SourceFamily::Conjugate],
        DualityFamily::Both => &[SourceFamily::Standard, SourceFamily::Conjugate],
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::new();
    let mut max_gap = 0.0f64;
    for t in 0..trials {
        let (h, resamples) = sample_toeplitz(&mut rng, d, m, n)?;
        let mut results = Vec::new();
        for &f in families {
            let r = duality_check(&source, f, n, &h, common.tol)?;
            max_gap = max_gap.max(r.gap);
            results.push(json!({
                "family": match f { SourceFamily::Standard => "standard", SourceFamily::Conjugate => "conjugate" },
                "pguess": r.pguess,
                "fidelity": r.fidelity,
                "gap": r.gap,
            }));
        }
        records.push(json!({ "trial": t, "hash": h.to_rows(), "resamples": resamples, "results": results }));
    }
    let record = json!({ "n": n, "m": m, "seed": seed, "trials": records, "max_gap": max_gap });
    emit(common.out.as_deref(), &json_text(&record))
}

#[allow(clippy::too_many_arguments)]
fn simulate(
    common: &Common,
    e: &ExponentArgs,
    mode: Mode,
    ns: &str,
    rates: &str,
    seed: u64,
    trials: usize,
    k: Option<f64>,
) -> Result<()> {
    let (spec, source) = load(common)?;
    let cfg = ScanConfig {
        mode: match mode {
            Mode::Dc => ScanMode::Dc,
            Mode::Pa => ScanMode::Pa,
            Mode::Cc => ScanMode::Cc,
        },
        ns: parse_usize_list(ns)?,
        rates: parse_f64_list(rates)?,
        trials,
        seed,
        k,
        tol: common.tol,
        exponents: options(e),
        symmetry: spec.symmetry(common.normalize)?,
    };
    let cells = rate_scan(&source, &cfg);
    let header = match k {
        Some(_) => format!("{SCAN_HEADER},K,finite_n"),
        None => {
            eprintln!("note: the finite-blocklength bound carries an unspecified constant K; pass --K to evaluate it");
            SCAN_HEADER.to_string()
        }
    };
    let mut csv = Csv::new(&header);
    for c in &cells {
        let mut row = vec![
            c.n.to_string(),
            c.m.to_string(),
            float(c.rate),
            c.measured.map_or("nan".into(), float),
            ext(c.bound_lower),
            ext(c.bound_sp),
            c.status.as_str().to_string(),
            c.seed.to_string(),
        ];
        if let Some(k) = k {
            row.push(float(k));
            row.push(c.finite_n.map_or("nan".into(), float));
        }
        csv.row(&row);
        if let Some(msg) = &c.message {
            eprintln!("cell n={} rate={}: {msg}", c.n, float(c.rate));
        }
    }
    emit(common.out.as_deref(), &csv.into_string())
}

fn critical(common: &Common, e: &ExponentArgs, which: CriticalWhich) -> Result<()> {
    let (_, source) = load(common)?;
    let opts = options(e);
    let (name, rate) = match which {
        CriticalWhich::Cc => ("cc", critical_rate_cc(&source.channel, &opts)?),
        CriticalWhich::Dc => ("dc", critical_rate_dc(&source.cq_state()?, &opts)?),
    };
    emit(common.out.as_deref(), &json_text(&json!({ "which": name, "critical_rate": rate })))
}
