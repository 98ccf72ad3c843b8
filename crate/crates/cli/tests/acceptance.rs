//! Acceptance report: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary so every criterion is evaluated and reported even
//! when an earlier one fails. The process exits successfully either way; the
//! report lines are the result.

use std::path::Path;
use std::time::{Duration, Instant};

use hybrid_ba::allocator::{continuous_allocation, m_max, model_power, relaxed_msqe_for_m};
use hybrid_ba::link::{instantaneous_rate, Method, SweepResult};
use hybrid_ba::quantization::{apply_aqnm, beta, lloyd_max_codebook, quantization_noise_covariance, HIGH_RES_COEFFICIENT};
use hybrid_ba::quantization::msqe;
use hybrid_ba::{allocate_bits, channel, rng_for, AllocationProblem, SystemConfig};
use hybrid_ba_cli::{cmd_sweep, cmd_train};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

const DESK_SCENARIO: &str = include_str!("../../../scenarios/desk.toml");

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn within(elapsed: Duration, limit_s: u64) -> bool {
    elapsed <= Duration::from_secs(limit_s)
}

fn kkt_and_constraint() -> Outcome {
    let start = Instant::now();
    let cfg = SystemConfig::default();
    let mut rng = rng_for(101, 0);
    let (mut worst_eq, mut worst_kkt) = (0f64, 0f64);
    for _ in 0..1000 {
        let n = rng.random_range(4..=64);
        let mut w: Vec<f64> = (0..n).map(|_| 10f64.powf(rng.random_range(-4.0..2.0))).collect();
        w.sort_by(|a, b| b.total_cmp(a));
        let p_tilde = 10f64.powf(rng.random_range(-2.0..2.0));
        let b = continuous_allocation(&w, n, p_tilde, &cfg).unwrap();
        let spent: f64 = b.iter().map(|x| 2.0 * cfg.adc_step_power() * x.exp2()).sum();
        worst_eq = worst_eq.max((spent - p_tilde).abs() / p_tilde);
        let stationary: Vec<f64> = w.iter().zip(&b).map(|(wi, bi)| wi * (-3.0 * bi).exp2()).collect();
        let mean = stationary.iter().sum::<f64>() / n as f64;
        for s in stationary {
            worst_kkt = worst_kkt.max((s - mean).abs() / mean);
        }
    }
    let t = start.elapsed();
    outcome(
        worst_eq < 1e-9 && worst_kkt < 1e-8 && within(t, 10),
        format!("max constraint error {worst_eq:.2e}, max KKT residual {worst_kkt:.2e}, {t:.2?}"),
    )
}

/// Four RF chains on a small array with cheap phase shifters, so ADC power
/// is comparable to chain power and the bit split matters.
fn tiny_config() -> SystemConfig {
    SystemConfig {
        n_r: 16,
        n_rf: 4,
        n_u: 2,
        l: 2,
        p_ps: 1e-3,
        adc_fom: 1e-12,
        b_cap: 4,
        ..SystemConfig::desk()
    }
}

fn exhaustive_optimum(sigma2: &[f64], p: f64, psw: f64, cfg: &SystemConfig) -> f64 {
    let n = sigma2.len() as u32;
    let levels = cfg.b_cap + 1;
    let mut best = f64::INFINITY;
    for code in 0..levels.pow(n) {
        let bits: Vec<u32> = (0..n).map(|i| code / levels.pow(i) % levels).collect();
        if model_power(&bits, psw, cfg) <= p {
            let f: f64 = bits.iter().zip(sigma2).map(|(&b, &s)| msqe(b as f64, s)).sum();
            best = best.min(f);
        }
    }
    best
}

fn oracle_optimality() -> Outcome {
    let start = Instant::now();
    let cfg = tiny_config();
    let mut rng = rng_for(202, 0);
    let mut gaps = Vec::with_capacity(200);
    while gaps.len() < 200 {
        let sigma2: Vec<f64> = (0..4).map(|_| 10f64.powf(rng.random_range(-2.0..1.0))).collect();
        let psw = rng.random_range(0.0..2e-3);
        let base = model_power(&[0; 4], psw, &cfg);
        let full = model_power(&[cfg.b_cap; 4], psw, &cfg);
        let p = rng.random_range(base + cfg.chain_power()..full);
        let problem = AllocationProblem::new(sigma2.clone(), p, psw).unwrap();
        let Ok(res) = allocate_bits(&problem, &cfg) else { continue };
        let best = exhaustive_optimum(&sigma2, p, psw, &cfg);
        gaps.push(res.objective / best - 1.0);
    }
    gaps.sort_by(f64::total_cmp);
    let median = gaps[gaps.len() / 2];
    let p95 = gaps[(gaps.len() * 95).div_ceil(100) - 1];
    let t = start.elapsed();
    outcome(
        median <= 0.05 && p95 <= 0.15 && within(t, 60),
        format!("median gap {:.2}%, p95 gap {:.2}%, max {:.2}%, {t:.2?}", 100.0 * median, 100.0 * p95, 100.0 * gaps[gaps.len() - 1]),
    )
}

fn binary_search_matches_scan() -> Outcome {
    let start = Instant::now();
    let cfg = SystemConfig::desk();
    let mut rng = rng_for(303, 0);
    let (mut checked, mut agree, mut ties, mut other) = (0, 0, 0, 0);
    while checked < 500 {
        let ch = channel::realize(&cfg, &mut rng).unwrap();
        let sigma2: Vec<f64> = ch.row_energies().iter().map(|e| cfg.transmit_power() * e).collect();
        let base = model_power(&vec![0; cfg.n_rf], 0.0, &cfg);
        let p = rng.random_range(base + cfg.chain_power()..base + 40.0);
        let psw = rng.random_range(0.0..0.02);
        let problem = AllocationProblem::new(sigma2, p, psw).unwrap();
        let Ok(res) = allocate_bits(&problem, &cfg) else { continue };
        checked += 1;
        let m_dag = m_max(p, psw, &problem.sigma2_x, &cfg).unwrap();
        let scan: Vec<f64> = (1..=m_dag).map(|m| relaxed_msqe_for_m(&problem, m, &cfg).unwrap()).collect();
        let (argmin, min) = scan
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i + 1, v) } else { acc });
        if argmin == res.m_opt {
            agree += 1;
        } else if (scan[res.m_opt - 1] - min).abs() <= 1e-9 * min {
            ties += 1;
        } else {
            other += 1;
        }
    }
    let t = start.elapsed();
    outcome(
        agree as f64 >= 0.99 * checked as f64 && other == 0 && within(t, 60),
        format!("{agree}/{checked} exact, {ties} plateau ties, {other} other mismatches, {t:.2?}"),
    )
}

fn quantizer_model() -> Outcome {
    let start = Instant::now();
    let mut rng = rng_for(404, 0);
    let mut worst = 0f64;
    let mut parts = Vec::new();
    for b in 1..=5 {
        let cb = lloyd_max_codebook(b, 200_000, 1e-13).unwrap();
        let emp = cb.empirical_distortion(10_000_000, &mut rng);
        let rel = (emp / beta(b) - 1.0).abs();
        worst = worst.max(rel);
        parts.push(format!("b={b} {:.3}%", 100.0 * rel));
    }
    let cb8 = lloyd_max_codebook(8, 200_000, 1e-10).unwrap();
    let emp8 = cb8.empirical_distortion(10_000_000, &mut rng);
    let formula = HIGH_RES_COEFFICIENT * 2f64.powi(-16);
    let rel8 = (emp8 / formula - 1.0).abs();
    let t = start.elapsed();
    outcome(
        worst < 0.01 && rel8 < 0.05 && within(t, 120),
        format!("{}; b=8 vs high-resolution formula {:.2}%, {t:.2?}", parts.join(", "), 100.0 * rel8),
    )
}

fn aqnm_statistics() -> Outcome {
    let start = Instant::now();
    let mut rng = rng_for(505, 0);
    let n_rf = 6;
    let h = DMatrix::from_fn(n_rf, 3, |_, _| channel::complex_gaussian(&mut rng));
    let bits = [1, 2, 3, 4, 5, 8];
    let p_u = 2.0;
    let cov = quantization_noise_covariance(&h, &bits, p_u).unwrap();
    let alphas: Vec<f64> = bits.iter().map(|&b| 1.0 - beta(b)).collect();
    let n = 100_000;
    let mut acc = DMatrix::<Complex64>::zeros(n_rf, n_rf);
    let y = vec![Complex64::new(0.7, -0.2); n_rf];
    for _ in 0..n {
        let out = apply_aqnm(&y, &bits, &h, p_u, &mut rng).unwrap();
        let q: Vec<Complex64> = out.iter().zip(&y).zip(&alphas).map(|((o, yi), a)| o - yi * *a).collect();
        for i in 0..n_rf {
            for j in 0..n_rf {
                acc[(i, j)] += q[i] * q[j].conj();
            }
        }
    }
    let mut worst = 0f64;
    for i in 0..n_rf {
        for j in 0..n_rf {
            let emp = acc[(i, j)] / n as f64;
            let want = if i == j { cov[i] } else { 0.0 };
            let scale = (cov[i] * cov[j]).sqrt();
            worst = worst.max((emp - want).norm() / scale);
        }
    }
    let t = start.elapsed();
    outcome(worst < 0.02, format!("max element error {:.3}% of the diagonal scale, {t:.2?}", 100.0 * worst))
}

/// Textbook MRC with ideal converters.
fn classical_mrc(h: &DMatrix<Complex64>, p_u: f64) -> Vec<f64> {
    (0..h.ncols())
        .map(|k| {
            let hk = h.column(k);
            let gain = hk.norm_squared();
            let interference: f64 = (0..h.ncols())
                .filter(|&m| m != k)
                .map(|m| p_u * hk.dotc(&h.column(m)).norm_sqr())
                .sum();
            (1.0 + p_u * gain * gain / (interference + gain)).log2()
        })
        .collect()
}

fn full_resolution_collapse() -> Outcome {
    let cfg = SystemConfig::desk();
    let mut rng = rng_for(606, 0);
    let p_u = cfg.transmit_power();
    let mut worst = 0f64;
    for _ in 0..100 {
        let ch = channel::realize(&cfg, &mut rng).unwrap();
        let got = instantaneous_rate(&ch.h_b, &ch.gamma, &vec![12; cfg.n_rf], p_u).unwrap();
        for (g, w) in got.iter().zip(classical_mrc(&ch.h_b, p_u)) {
            worst = worst.max((g - w).abs() / w);
        }
    }
    outcome(worst < 1e-6, format!("max relative rate error {worst:.2e} over 100 channels"))
}

struct DeskRun {
    t_p: Vec<f64>,
    fit_residual: f64,
    results: Vec<SweepResult>,
    csv: Vec<u8>,
    elapsed: Duration,
}

fn desk_run(dir: &Path) -> DeskRun {
    let start = Instant::now();
    let scenario = dir.join("desk.toml");
    std::fs::write(&scenario, DESK_SCENARIO).unwrap();
    let trained = cmd_train(&scenario, Some(dir)).unwrap();
    let swept = cmd_sweep(&scenario, None, Some(dir)).unwrap();
    DeskRun {
        t_p: trained.points.iter().map(|p| p.t_p).collect(),
        fit_residual: trained.fit.residual,
        csv: std::fs::read(&swept.csv_path).unwrap(),
        results: swept.results,
        elapsed: start.elapsed(),
    }
}

fn lookup(results: &[SweepResult], method: Method, b_bar: u32) -> &SweepResult {
    results
        .iter()
        .find(|r| r.method == method && r.b_bar == b_bar)
        .expect("b_bar present in the sweep")
}

fn desk_sweep_trends(run: &DeskRun) -> Outcome {
    let r = &run.results;
    let se = |m, b| lookup(r, m, b).sum_se;
    let ee = |m, b| lookup(r, m, b).ee;

    let a = (1..=3).all(|b| se(Method::ProposedBa, b) >= se(Method::FixedAdc, b));
    let inf4 = se(Method::InfiniteResolution, 4);
    let gap4 = 1.0 - se(Method::ProposedBa, 4) / inf4;
    let b = gap4 <= 0.05;
    let best_b = (1..=3)
        .max_by(|&x, &y| ee(Method::ProposedBa, x).total_cmp(&ee(Method::ProposedBa, y)))
        .unwrap();
    let c = Method::ALL
        .iter()
        .filter(|m| **m != Method::ProposedBa)
        .all(|&m| ee(Method::ProposedBa, best_b) > ee(m, best_b));
    let high: Vec<u32> = r.iter().map(|x| x.b_bar).filter(|b| *b >= 8).collect();
    let d = !high.is_empty()
        && high.iter().all(|&b| {
            ee(Method::FixedAdc, b) > ee(Method::AdcPowerBa, b) && ee(Method::FixedAdc, b) > ee(Method::ProposedBa, b)
        });
    outcome(
        a && b && c && d && within(run.elapsed, 600),
        format!(
            "(a) {} SE proposed/fixed at b=1..3: {:.4}/{:.4}, {:.4}/{:.4}, {:.4}/{:.4}; \
             (b) {} gap to infinite resolution at b=4 {:.2}%; \
             (c) {} proposed EE {:.3e} b/J at b={best_b}; (d) {} fixed-ADC EE highest for b>=8; train+sweep {:.2?}",
            mark(a),
            se(Method::ProposedBa, 1),
            se(Method::FixedAdc, 1),
            se(Method::ProposedBa, 2),
            se(Method::FixedAdc, 2),
            se(Method::ProposedBa, 3),
            se(Method::FixedAdc, 3),
            mark(b),
            100.0 * gap4,
            mark(c),
            ee(Method::ProposedBa, best_b),
            mark(d),
            run.elapsed
        ),
    )
}

fn mark(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "FAILED"
    }
}

fn switching_trend(run: &DeskRun) -> Outcome {
    let t = &run.t_p;
    let upper = &t[t.len() / 2..];
    let monotone = upper.windows(2).all(|w| w[1] >= w[0]);
    let range = t.iter().cloned().fold(f64::MIN, f64::max) - t.iter().cloned().fold(f64::MAX, f64::min);
    let rel_resid = run.fit_residual / range;
    let shown: Vec<String> = upper.iter().map(|x| format!("{x:.3}")).collect();
    outcome(
        monotone && rel_resid < 0.10,
        format!(
            "{} points; upper-half T_p [W] = [{}] {}; fit residual {:.1}% of T_p range",
            t.len(),
            shown.join(", "),
            if monotone { "non-decreasing" } else { "NOT non-decreasing" },
            100.0 * rel_resid
        ),
    )
}

fn determinism(first: &DeskRun, second: &DeskRun) -> Outcome {
    outcome(
        first.csv == second.csv && !first.csv.is_empty(),
        format!("two sweeps from the same seed: {} bytes each, identical = {}", first.csv.len(), first.csv == second.csv),
    )
}

fn report(id: usize, name: &str, o: &Outcome) {
    println!("{} criterion {id}: {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
}

fn main() {
    let mut passed = 0;
    let mut total = 0;
    let mut record = |id: usize, name: &str, o: Outcome| {
        report(id, name, &o);
        total += 1;
        passed += o.pass as usize;
    };
    record(1, "KKT and constraint exactness", kkt_and_constraint());
    record(2, "integer allocation vs exhaustive optimum", oracle_optimality());
    record(3, "binary search vs exhaustive M scan", binary_search_matches_scan());
    record(4, "Lloyd-Max quantizer model", quantizer_model());
    record(5, "AQNM noise covariance", aqnm_statistics());
    record(6, "full-resolution MRC collapse", full_resolution_collapse());

    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let first = desk_run(dir_a.path());
    record(7, "desk-scale sweep trends", desk_sweep_trends(&first));
    record(8, "desk-scale switching-power trend and fit", switching_trend(&first));
    let second = desk_run(dir_b.path());
    record(9, "sweep determinism", determinism(&first, &second));

    println!("acceptance: {passed}/{total} criteria passed");
}
