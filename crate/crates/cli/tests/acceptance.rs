//! Acceptance criteria. Each prints a single PASS/FAIL line with the worst
//! observed deviation; the process fails if any criterion does.

use std::process::Command;
use std::time::{Duration, Instant};

use cqexp_core::discrimination::CertifiedValue;
use cqexp_core::entropy::{cond_entropy_petz_up, cond_entropy_sand_down, BipartiteState};
use cqexp_core::experiments::{code_from_compressor, dc_error_exact, duality_check, sample_toeplitz};
use cqexp_core::exponents::{
    cc_exponent_lower, cc_sphere_packing, dc_exponent_lower, dc_sphere_packing, e0_entropy_identity, gallager_e0,
    holevo_condition, pa_exponent_lower, Flag,
};
use cqexp_core::linalg::{reduce_pure, DensityMatrix, HermitianMatrix};
use cqexp_core::random;
use cqexp_core::states::{
    bsc, purify_source, purify_source_conjugate, symmetric_channel, Basis, SymmetricFamily, System,
};
use cqexp_core::{
    CQChannel, ChannelSpecFile, ExponentOptions, ProbabilityVector, Source, SourceFamily, SymmetricChannel,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn fail<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn bipartite(m: cqexp_core::CMat, da: usize, db: usize) -> Result<BipartiteState, String> {
    let rho = DensityMatrix::new(HermitianMatrix::hermitian_part(m)).map_err(fail)?;
    BipartiteState::new(rho, da, db).map_err(fail)
}

const ALPHAS: [f64; 4] = [0.5, 2.0 / 3.0, 1.5, 2.0];

fn entropy_duality() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for dims in [[2, 2, 2], [3, 2, 3]] {
        for _ in 0..50 {
            let psi = random::pure_vector(&mut rng, dims.iter().product());
            let ab = bipartite(reduce_pure(&psi, &dims, &[0, 1]).map_err(fail)?, dims[0], dims[1])?;
            let ac = bipartite(reduce_pure(&psi, &dims, &[0, 2]).map_err(fail)?, dims[0], dims[2])?;
            for a in ALPHAS {
                let up = cond_entropy_petz_up(&ab, a).map_err(fail)?;
                let down = cond_entropy_sand_down(&ac, 1.0 / a).map_err(fail)?;
                worst = worst.max((up + down).abs());
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(worst <= 1e-8, || format!("max |H̄↑_α(A|B) + H̃↓_1/α(A|C)| = {worst:e} > 1e-8"))?;
    ensure(secs < 10.0, || format!("took {secs:.1}s, limit 10s"))?;
    Ok(format!("100 states x 4 orders, max deviation {worst:.1e}, {secs:.2}s"))
}

fn saturation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for d in [2, 3] {
        let log_d = (d as f64).log2();
        for _ in 0..20 {
            let p = random::distribution(&mut rng, d);
            let w = random::mixed_channel(&mut rng, d, 2);
            let psi = purify_source(&p, &w).map_err(fail)?;
            let zb = psi.measure_a(Basis::Computational, &[System::B]).map_err(fail)?;
            let xac = psi.measure_a(Basis::Conjugate, &[System::APrime, System::C]).map_err(fail)?;
            let phi = purify_source_conjugate(&p, &w).map_err(fail)?;
            let xc = phi.measure_a(Basis::Conjugate, &[System::C]).map_err(fail)?;
            let zab = phi.measure_a(Basis::Computational, &[System::APrime, System::B]).map_err(fail)?;
            for a in ALPHAS {
                let s1 = cond_entropy_petz_up(&zb, a).map_err(fail)?
                    + cond_entropy_sand_down(&xac, 1.0 / a).map_err(fail)?;
                let s2 = cond_entropy_petz_up(&xc, a).map_err(fail)?
                    + cond_entropy_sand_down(&zab, 1.0 / a).map_err(fail)?;
                worst = worst.max((s1 - log_d).abs()).max((s2 - log_d).abs());
            }
        }
    }
    ensure(worst <= 1e-8, || format!("max |sum - log d| = {worst:e} > 1e-8"))?;
    Ok(format!("40 sources x 2 families x 4 orders, max deviation {worst:.1e}"))
}

fn guessing_fidelity_duality() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut worst_gap, mut worst_width, mut checks) = (0.0f64, 0.0f64, 0);
    let width = |c: &CertifiedValue| c.gap;
    for n in 1..=3 {
        for m in 0..=n {
            for _ in 0..10 {
                let (h, _) = sample_toeplitz(&mut rng, 2, m, n).map_err(fail)?;
                let p = random::distribution(&mut rng, 2);
                let w =
                    if n < 3 { random::mixed_channel(&mut rng, 2, 2) } else { random::pure_channel(&mut rng, 2, 2) };
                let source = Source::new(p, w).map_err(fail)?;
                for family in [SourceFamily::Standard, SourceFamily::Conjugate] {
                    let r = duality_check(&source, family, n, &h, 1e-8).map_err(fail)?;
                    let diff = (r.pguess.midpoint() - r.fidelity.midpoint()).abs();
                    worst_gap = worst_gap.max(diff);
                    worst_width = worst_width.max(width(&r.pguess)).max(width(&r.fidelity));
                    checks += 1;
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(worst_gap <= 1e-6, || format!("max |pguess - max fidelity²| = {worst_gap:e} > 1e-6"))?;
    ensure(worst_width <= 1e-8, || format!("a certified bracket has width {worst_width:e} > 1e-8"))?;
    ensure(secs < 300.0, || format!("took {secs:.0}s, limit 300s"))?;
    Ok(format!("{checks} checks, max difference {worst_gap:.1e}, max bracket width {worst_width:.1e}, {secs:.1}s"))
}

fn binary_entropy(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        0.0
    } else {
        -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
    }
}

fn kl(a: f64, b: f64) -> f64 {
    a * (a / b).log2() + (1.0 - a) * ((1.0 - a) / (1.0 - b)).log2()
}

/// `δ ∈ [p, 1/2]` with `1 - h(δ) = r`.
fn inverse_rate(p: f64, r: f64) -> f64 {
    let (mut lo, mut hi) = (p, 0.5);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if 1.0 - binary_entropy(mid) > r {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn classical_e0(s: f64, p: f64) -> f64 {
    let a = 1.0 / (1.0 + s);
    s - (1.0 + s) * (p.powf(a) + (1.0 - p).powf(a)).log2()
}

fn classical_collapse() -> Outcome {
    let opts = ExponentOptions::default();
    let (mut e0_dev, mut lower_dev, mut sp_dev, mut agree_dev) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for p in [0.05, 0.1, 0.2] {
        let w = bsc(p).map_err(fail)?;
        let u = ProbabilityVector::uniform(2);
        for s in [0.0, 0.25, 0.5, 1.0, 2.0, 8.0] {
            let e = gallager_e0(s, &u, w.channel()).map_err(fail)?;
            e0_dev = e0_dev.max((e - classical_e0(s, p)).abs());
        }
        let capacity = 1.0 - binary_entropy(p);
        let dc = p.sqrt() / (p.sqrt() + (1.0 - p).sqrt());
        let r_crit = 1.0 - binary_entropy(dc);
        for i in 0..20 {
            let r = capacity * (i as f64 + 0.5) / 20.0;
            let delta = inverse_rate(p, r);
            let sp_oracle = kl(delta, p);
            let lower_oracle = if r >= r_crit { sp_oracle } else { classical_e0(1.0, p) - r };
            let lower = cc_exponent_lower(&w, r, &opts).map_err(fail)?.exponent.to_f64();
            let sp = cc_sphere_packing(w.channel(), r, &opts).map_err(fail)?;
            ensure(sp.flag != Flag::Diverged, || format!("sphere packing diverged at p={p}, R={r}"))?;
            let sp = sp.exponent.to_f64();
            lower_dev = lower_dev.max((lower - lower_oracle).abs());
            sp_dev = sp_dev.max((sp - sp_oracle).abs());
            if r > r_crit {
                agree_dev = agree_dev.max((lower - sp).abs());
            }
        }
    }
    ensure(e0_dev <= 1e-10, || format!("E0 deviation {e0_dev:e} > 1e-10"))?;
    ensure(lower_dev <= 1e-8, || format!("random-coding deviation {lower_dev:e} > 1e-8"))?;
    ensure(sp_dev <= 1e-8, || format!("sphere-packing deviation {sp_dev:e} > 1e-8"))?;
    ensure(agree_dev <= 1e-8, || format!("bounds differ by {agree_dev:e} above the critical rate"))?;
    Ok(format!("E0 {e0_dev:.1e}, lower {lower_dev:.1e}, sphere packing {sp_dev:.1e}, agreement {agree_dev:.1e}"))
}

fn e0_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for d in [2, 3] {
        for _ in 0..10 {
            let w = random::mixed_channel(&mut rng, d, 2);
            for s in [0.25, 0.5, 1.0] {
                worst = worst.max(e0_entropy_identity(s, &w).map_err(fail)?.gap);
            }
        }
    }
    ensure(worst <= 1e-8, || format!("identity gap {worst:e} > 1e-8"))?;
    Ok(format!("20 channels x 3 values of s, max gap {worst:.1e}"))
}

fn builtin_symmetric(rng: &mut ChaCha8Rng) -> Result<Vec<SymmetricChannel>, String> {
    let mut out = Vec::new();
    for p in [0.05, 0.1, 0.2, 0.35] {
        out.push(bsc(p).map_err(fail)?);
    }
    for _ in 0..4 {
        let row = random::distribution(rng, 3).as_slice().to_vec();
        out.push(symmetric_channel(SymmetricFamily::ClassicalSymmetric { row }).map_err(fail)?);
    }
    for _ in 0..6 {
        let theta = rng.random_range(0.05..0.75);
        out.push(symmetric_channel(SymmetricFamily::DihedralQubit { theta }).map_err(fail)?);
    }
    for _ in 0..6 {
        let base = random::mixed_state(rng, 2, 2);
        let unitaries = vec![
            cqexp_core::CMat::identity(2, 2),
            cqexp_core::linalg::pauli_x(),
            cqexp_core::linalg::pauli_y(),
            cqexp_core::linalg::pauli_z(),
        ];
        out.push(symmetric_channel(SymmetricFamily::GroupUnitaries { base, unitaries }).map_err(fail)?);
    }
    Ok(out)
}

/// Classical channel with inputs 0 and 1 sharing an output: uniform inputs
/// put weight 2/3 on one output where 1/2 is optimal.
fn repeated_output_channel() -> CQChannel {
    CQChannel::new(vec![
        DensityMatrix::diagonal(&[1.0, 0.0]).unwrap(),
        DensityMatrix::diagonal(&[1.0, 0.0]).unwrap(),
        DensityMatrix::diagonal(&[0.0, 1.0]).unwrap(),
    ])
    .unwrap()
}

fn holevo() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    let channels = builtin_symmetric(&mut rng)?;
    for w in &channels {
        let u = ProbabilityVector::uniform(w.channel().inputs());
        for s in [0.25, 0.5, 1.0, 2.0] {
            let c = holevo_condition(&u, s, w.channel()).map_err(fail)?;
            let r = c.residuals.iter().fold(0.0f64, |a, x| a.max(x.abs()));
            worst = worst.max(r);
            ensure(c.satisfied, || format!("condition fails for a symmetric channel at s={s}"))?;
        }
    }
    ensure(worst <= 1e-9, || format!("symmetric residual {worst:e} > 1e-9"))?;
    let c = holevo_condition(&ProbabilityVector::uniform(3), 1.0, &repeated_output_channel()).map_err(fail)?;
    let violation = c.residuals.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    ensure(!c.satisfied && violation > 1e-4, || {
        format!("repeated-output channel residual {violation:e} does not exceed 1e-4")
    })?;
    Ok(format!(
        "{} symmetric channels, max residual {worst:.1e}; repeated-output channel residual {violation:.3}",
        channels.len()
    ))
}

fn bound_ordering() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let opts = ExponentOptions::default();
    let (mut order_viol, mut eq_dev, mut eq_count) = (0.0f64, 0.0f64, 0);
    for i in 0..20 {
        let d = if i % 2 == 0 { 2 } else { 3 };
        let source =
            Source::new(random::distribution(&mut rng, d), random::mixed_channel(&mut rng, d, 2)).map_err(fail)?;
        let zb = source.cq_state().map_err(fail)?;
        let h = cqexp_core::entropy::von_neumann_cond(&zb);
        let log_d = (d as f64).log2();
        for k in 1..=8 {
            let r = h + (log_d - h) * k as f64 / 9.0;
            let lower = dc_exponent_lower(&zb, r, &opts).map_err(fail)?;
            let sp = dc_sphere_packing(&zb, r, &opts).map_err(fail)?;
            order_viol = order_viol.max(lower.exponent.to_f64() - sp.exponent.to_f64());
            if sp.flag != Flag::Diverged && sp.optimizer >= 0.5 {
                eq_dev = eq_dev.max((lower.exponent.to_f64() - sp.exponent.to_f64()).abs());
                eq_count += 1;
            }
        }
    }
    let channels = builtin_symmetric(&mut rng)?;
    for w in &channels {
        let log_d = (w.channel().inputs() as f64).log2();
        for k in 1..=8 {
            let r = log_d * k as f64 / 9.0;
            let lower = cc_exponent_lower(w, r, &opts).map_err(fail)?;
            let sp = cc_sphere_packing(w.channel(), r, &opts).map_err(fail)?;
            let spv = sp.exponent.to_f64();
            order_viol = order_viol.max(lower.exponent.to_f64() - spv);
            if sp.flag != Flag::Diverged && sp.optimizer <= 1.0 {
                eq_dev = eq_dev.max((lower.exponent.to_f64() - spv).abs());
                eq_count += 1;
            }
        }
    }
    ensure(order_viol <= 1e-10, || format!("a lower bound exceeds sphere packing by {order_viol:e}"))?;
    ensure(eq_dev <= 1e-8, || format!("bounds differ by {eq_dev:e} where they should agree"))?;
    Ok(format!(
        "20 sources + {} channels x 8 rates; {eq_count} agreement points, max deviation {eq_dev:.1e}",
        channels.len()
    ))
}

fn pa_dc_duality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let opts = ExponentOptions::default();
    let mut worst = 0.0f64;
    for i in 0..20 {
        let d = if i % 2 == 0 { 2 } else { 3 };
        let p = random::distribution(&mut rng, d);
        let theta = random::mixed_channel(&mut rng, d, 2);
        let phi = purify_source_conjugate(&p, &theta).map_err(fail)?;
        let xc = phi.measure_a(Basis::Conjugate, &[System::C]).map_err(fail)?;
        let zab = phi.measure_a(Basis::Computational, &[System::APrime, System::B]).map_err(fail)?;
        let h = cqexp_core::entropy::von_neumann_cond(&xc);
        let log_d = (d as f64).log2();
        for k in 1..=5 {
            let r_pa = h * k as f64 / 6.0;
            let pa = pa_exponent_lower(&xc, r_pa, &opts).map_err(fail)?.exponent.to_f64();
            let dc = dc_exponent_lower(&zab, log_d - r_pa, &opts).map_err(fail)?.exponent.to_f64();
            worst = worst.max((pa - dc).abs());
        }
    }
    ensure(worst <= 1e-8, || format!("max |E_pa - E_dc| = {worst:e} > 1e-8"))?;
    Ok(format!("20 sources x 5 rates, max deviation {worst:.1e}"))
}

fn finite_n_sanity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut pgm_viol, mut avg_viol, mut identity_dev, mut count) = (0.0f64, 0.0f64, 0.0f64, 0);
    for n in 1..=3 {
        for m in 0..=n {
            for _ in 0..4 {
                let (h, _) = sample_toeplitz(&mut rng, 2, m, n).map_err(fail)?;
                let source = Source::new(random::distribution(&mut rng, 2), random::mixed_channel(&mut rng, 2, 2))
                    .map_err(fail)?;
                let r = dc_error_exact(&source, n, &h, 1e-9).map_err(fail)?;
                pgm_viol = pgm_viol.max(r.error.lower - r.pgm_error);
                let w = bsc(rng.random_range(0.01..0.3)).map_err(fail)?;
                let code = code_from_compressor(&w, n, &h, 1e-9).map_err(fail)?;
                avg_viol = avg_viol.max(code.best_error - code.average_error);
                let dc = dc_error_exact(&Source::uniform(w.channel().clone()), n, &h, 1e-9).map_err(fail)?;
                identity_dev = identity_dev.max((code.average_error - dc.measured).abs());
                count += 1;
            }
        }
    }
    ensure(pgm_viol <= 1e-10, || format!("optimal error exceeds PGM error by {pgm_viol:e}"))?;
    ensure(avg_viol <= 0.0, || format!("best coset error exceeds the average by {avg_viol:e}"))?;
    ensure(identity_dev <= 1e-12, || {
        format!("average coset error differs from compression error by {identity_dev:e}")
    })?;
    Ok(format!(
        "{count} hashes; optimal - PGM <= {pgm_viol:.1e}, best - average <= {avg_viol:.1e}, averaging identity {identity_dev:.1e}"
    ))
}

fn run_cli(args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_cqexp")).args(args).output().map_err(fail)?;
    if !out.status.success() {
        return Err(format!("cqexp {} failed: {}", args.join(" "), String::from_utf8_lossy(&out.stderr)));
    }
    Ok(out.stdout)
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(fail)?;
    let spec_path = dir.path().join("source.json");
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let source = Source::new(random::distribution(&mut rng, 2), random::mixed_channel(&mut rng, 2, 2)).map_err(fail)?;
    std::fs::write(&spec_path, ChannelSpecFile::from_source(&source, None).to_json()).map_err(fail)?;
    let spec = spec_path.to_str().ok_or("temporary path is not UTF-8")?;
    let commands: [&[&str]; 4] = [
        &[
            "simulate", "--spec", spec, "--mode", "dc", "--n", "1,2,3", "--rates", "0.4,0.7", "--trials", "3",
            "--seed", "11", "--K", "1",
        ],
        &["simulate", "--spec", spec, "--mode", "pa", "--n", "2,3", "--rates", "0.3", "--trials", "2", "--seed", "11"],
        &["duality", "--spec", spec, "--n", "2", "--m", "1", "--trials", "3", "--seed", "11"],
        &["curve", "--spec", spec, "--family", "dc-sp", "--rates", "0.5:0.95:0.05"],
    ];
    for args in commands {
        let a = run_cli(args)?;
        let b = run_cli(args)?;
        ensure(a == b, || format!("outputs differ for `cqexp {}`", args.join(" ")))?;
        ensure(!a.is_empty(), || format!("no output for `cqexp {}`", args.join(" ")))?;
    }
    Ok("4 commands, byte-identical across two runs".into())
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("entropy duality on random pure states", entropy_duality),
        ("saturation on both source families", saturation),
        ("guessing probability equals maximal fidelity", guessing_fidelity_duality),
        ("classical collapse for the BSC", classical_collapse),
        ("E0-entropy identity", e0_identity),
        ("Holevo optimality condition", holevo),
        ("bound ordering and agreement", bound_ordering),
        ("privacy-amplification / compression rate duality", pa_dc_duality),
        ("finite-n decoder sanity", finite_n_sanity),
        ("deterministic CLI output", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{}]", i + 1, secs(elapsed)),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why} [{}]", i + 1, secs(elapsed));
            }
        }
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
    println!("all {} criteria passed", criteria.len());
}

fn secs(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}
