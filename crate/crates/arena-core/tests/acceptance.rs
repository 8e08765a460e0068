//! Acceptance suite: every release gate runs here, one test per criterion,
//! each printing a `[acceptance]` pass/fail line (run with `--nocapture`).
//!
//! The simulation-backed gates pool tagged-player tallies over many seeded
//! rosters: the roster is fixed within an experiment, so pooling experiments
//! is what drives the empirical frequencies to the model's population
//! quantities instead of one roster's idiosyncrasies.

use arena_core::approx::{
    build_moment_table, gauss_phi_expectation, next_moments, result_prob_approx, Direction,
};
use arena_core::exact::{build_lattice, exact_result_prob, posterior_no_fluct};
use arena_core::grid::DensityGrid;
use arena_core::infer::{
    estimate_rho_1v1, map_estimate, predict_frequency, predict_map, MapEstimate, SearchBox,
    WinMatrix,
};
use arena_core::normal::{normal_cdf, normal_pdf};
use arena_core::sim::{simulate, write_outcomes_csv, SimConfig, Simulation};
use arena_core::worldcup::{
    bundled_test, bundled_train, code_to_state, country_counts, evaluate, evaluate_pooled,
    worldcup_spec,
};
use arena_core::{ArenaSpec, PlayerParams, ResultCounts, State};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::time::{Duration, Instant};

fn report(number: u32, name: &str, started: Instant, budget: Duration, failures: &[String]) {
    let elapsed = started.elapsed();
    let verdict = if failures.is_empty() && elapsed <= budget { "PASS" } else { "FAIL" };
    eprintln!("[acceptance] criterion {number:2} ({name}): {verdict} [{elapsed:.2?} of {budget:?} budget]");
    for failure in failures {
        eprintln!("[acceptance]   - {failure}");
    }
    assert!(failures.is_empty(), "criterion {number} ({name}): {failures:?}");
    assert!(elapsed <= budget, "criterion {number} ({name}) exceeded its runtime budget: {elapsed:.2?}");
}

fn spec(m: u32, n: u32) -> ArenaSpec {
    ArenaSpec::new(m, n).unwrap()
}

/// Tagged-player tallies pooled over `rosters` seeded experiments of
/// `runs_per_roster` runs each (1023 background players + the tagged one).
fn pooled_tagged_tally(
    arena: ArenaSpec,
    x: f64,
    rho: f64,
    rosters: u64,
    runs_per_roster: u32,
    seed_base: u64,
) -> ResultCounts {
    let mut pooled = ResultCounts::new(arena);
    for roster in 0..rosters {
        let config = SimConfig {
            spec: arena,
            population: 1023,
            runs: runs_per_roster,
            background_rho: rho,
            tagged: Some(PlayerParams::new(x, rho).unwrap()),
            seed: seed_base + roster,
        };
        let sim = Simulation::new(config).unwrap();
        pooled.merge(&sim.tally_of(sim.tagged_index().unwrap()).unwrap());
    }
    pooled
}

/// Adaptive Simpson quadrature of `Phi(a + b t) phi(t)` over [-10, 10];
/// the independent oracle for the Gaussian expectation identity.
fn phi_expectation_quadrature(a: f64, b: f64, tol: f64) -> f64 {
    fn integrand(a: f64, b: f64, t: f64) -> f64 {
        normal_cdf(a + b * t) * normal_pdf(t)
    }
    fn simpson(lo: f64, hi: f64, flo: f64, fmid: f64, fhi: f64) -> f64 {
        (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi)
    }
    #[allow(clippy::too_many_arguments)]
    fn refine(a: f64, b: f64, lo: f64, hi: f64, flo: f64, fmid: f64, fhi: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let mid = 0.5 * (lo + hi);
        let flm = integrand(a, b, 0.5 * (lo + mid));
        let frm = integrand(a, b, 0.5 * (mid + hi));
        let left = simpson(lo, mid, flo, flm, fmid);
        let right = simpson(mid, hi, fmid, frm, fhi);
        if depth == 0 || (left + right - whole).abs() < 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            refine(a, b, lo, mid, flo, flm, fmid, left, tol / 2.0, depth - 1)
                + refine(a, b, mid, hi, fmid, frm, fhi, right, tol / 2.0, depth - 1)
        }
    }
    let (lo, hi) = (-10.0, 10.0);
    let (flo, fmid, fhi) = (integrand(a, b, lo), integrand(a, b, 0.0), integrand(a, b, hi));
    let whole = simpson(lo, hi, flo, fmid, fhi);
    refine(a, b, lo, hi, flo, fmid, fhi, whole, tol, 40)
}

#[test]
fn c01_gaussian_identity() {
    let started = Instant::now();
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    for ka in 0..=20 {
        for kb in 0..=20 {
            let a = -5.0 + 0.5 * ka as f64;
            let b = -5.0 + 0.5 * kb as f64;
            let direct = phi_expectation_quadrature(a, b, 1e-12);
            let closed = gauss_phi_expectation(a, b);
            worst = worst.max((direct - closed).abs());
        }
    }
    if worst > 1e-9 {
        failures.push(format!("worst |quadrature - closed form| = {worst:.3e} > 1e-9"));
    }
    eprintln!("[acceptance]   gauss_phi_expectation vs quadrature, 21x21 grid: worst {worst:.3e}");
    report(1, "Gaussian identity", started, Duration::from_secs(1), &failures);
}

#[test]
fn c02_winner_moment_closed_forms() {
    let started = Instant::now();
    let mut failures = Vec::new();

    // closed form against the analytic max-of-two-normals moments
    let (mean, var) = next_moments(0.0, 1.0, 0.0, Direction::Win);
    let mean_expect = 1.0 / std::f64::consts::PI.sqrt();
    let var_expect = 1.0 - 1.0 / std::f64::consts::PI;
    if (mean - mean_expect).abs() > 1e-12 || (var - var_expect).abs() > 1e-12 {
        failures.push(format!("closed form ({mean}, {var}) vs analytic ({mean_expect}, {var_expect})"));
    }

    // Monte Carlo cross-checks, 1e7 samples each
    let mut check_mc = |label: &str, mu: f64, sigma: f64, rho: f64, expect: (f64, f64), seed: u64| {
        const SAMPLES: usize = 10_000_000;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        let noise = rho / 2.0_f64.sqrt();
        for _ in 0..SAMPLES {
            let x1 = mu + sigma * rng.sample::<f64, _>(StandardNormal);
            let x2 = mu + sigma * rng.sample::<f64, _>(StandardNormal);
            let winner = if rho == 0.0 {
                x1.max(x2)
            } else {
                let p1 = x1 + noise * rng.sample::<f64, _>(StandardNormal);
                let p2 = x2 + noise * rng.sample::<f64, _>(StandardNormal);
                if p1 >= p2 {
                    x1
                } else {
                    x2
                }
            };
            sum += winner;
            sum_sq += winner * winner;
        }
        let n = SAMPLES as f64;
        let mc_mean = sum / n;
        let mc_var = (sum_sq - n * mc_mean * mc_mean) / (n - 1.0);
        let se_mean = (mc_var / n).sqrt();
        let se_var = mc_var * (2.0 / (n - 1.0)).sqrt();
        let dm = (mc_mean - expect.0).abs();
        let dv = (mc_var - expect.1).abs();
        eprintln!(
            "[acceptance]   {label}: MC mean dev {dm:.2e} (SE {se_mean:.2e}), var dev {dv:.2e} (SE {se_var:.2e})"
        );
        if dm > 3.0 * se_mean {
            failures.push(format!("{label}: mean off by {dm:.3e} > 3 SE ({se_mean:.3e})"));
        }
        if dv > 3.0 * se_var {
            failures.push(format!("{label}: variance off by {dv:.3e} > 3 SE ({se_var:.3e})"));
        }
    };
    check_mc("max of two N(0,1)", 0.0, 1.0, 0.0, (mean_expect, var_expect), 2024);
    let expect_21 = next_moments(2.0, 1.0, 1.0, Direction::Win);
    check_mc("winner of two N(2,1), rho=1", 2.0, 1.0, 1.0, expect_21, 2025);

    report(2, "winner-moment closed forms", started, Duration::from_secs(30), &failures);
}

#[test]
fn c03_exact_model_cross_validation() {
    let started = Instant::now();
    let mut failures = Vec::new();
    let arena = spec(2, 2);
    let lattice = build_lattice(arena, &DensityGrid::standard_normal()).unwrap();
    for (k, x) in [0.0, 0.5, 1.0, 2.0].into_iter().enumerate() {
        let tally = pooled_tagged_tally(arena, x, 0.0, 100, 1000, 10_000 + 1_000 * k as u64);
        let exact = exact_result_prob(&lattice, x).unwrap();
        let total = tally.total() as f64;
        let worst = exact
            .iter()
            .map(|(t, p)| (tally.get(t) as f64 / total - p).abs())
            .fold(0.0_f64, f64::max);
        eprintln!("[acceptance]   x = {x}: worst |frequency - exact| = {worst:.4} over 1e5 runs");
        if worst > 0.01 {
            failures.push(format!("x = {x}: deviation {worst:.4} > 0.01"));
        }
    }
    report(3, "exact/simulator cross-validation", started, Duration::from_secs(120), &failures);
}

#[test]
fn c04_normal_approximation_fidelity() {
    let started = Instant::now();
    let mut failures = Vec::new();
    let arena = spec(2, 2);
    for (kr, rho) in [0.1, 0.5, 1.0].into_iter().enumerate() {
        let table = build_moment_table(arena, rho).unwrap();
        for (kx, x) in [0.0, 0.5, 1.0, 2.0].into_iter().enumerate() {
            let seed_base = 20_000 + 10_000 * kr as u64 + 1_000 * kx as u64;
            let tally = pooled_tagged_tally(arena, x, rho, 100, 1000, seed_base);
            let approx = result_prob_approx(&table, x);
            let total = tally.total() as f64;
            let worst = approx
                .iter()
                .map(|(t, p)| (tally.get(t) as f64 / total - p).abs())
                .fold(0.0_f64, f64::max);
            eprintln!("[acceptance]   rho = {rho}, x = {x}: worst |frequency - approx| = {worst:.4}");
            if worst > 0.03 {
                failures.push(format!("rho = {rho}, x = {x}: deviation {worst:.4} > 0.03"));
            }
        }
    }
    report(4, "normal-approximation fidelity", started, Duration::from_secs(600), &failures);
}

#[test]
fn c05_one_one_estimator_consistency() {
    let started = Instant::now();
    let mut failures = Vec::new();
    for rho in [0.5, 1.0, 2.0] {
        let mut estimates = Vec::new();
        for seed in 0..20u64 {
            let config = SimConfig {
                spec: spec(1, 1),
                population: 4096,
                runs: 200,
                background_rho: rho,
                tagged: None,
                seed: 40_000 + seed,
            };
            let outcomes = simulate(config).unwrap();
            let matrix = WinMatrix::from_outcomes(&outcomes, 4096, 200).unwrap();
            estimates.push(estimate_rho_1v1(&matrix).unwrap().rho);
        }
        estimates.sort_by(f64::total_cmp);
        let median = 0.5 * (estimates[9] + estimates[10]);
        let rel = (median - rho).abs() / rho;
        eprintln!("[acceptance]   rho = {rho}: median estimate {median:.4} (relative error {rel:.3})");
        if rel > 0.15 {
            failures.push(format!("rho = {rho}: median {median:.4} deviates {rel:.3} > 15%"));
        }
    }
    report(5, "1-1 estimator consistency", started, Duration::from_secs(120), &failures);
}

#[test]
fn c06_map_recovery_scatter() {
    let started = Instant::now();
    let mut failures = Vec::new();
    let arena = spec(2, 2);
    let prior = DensityGrid::standard_normal();
    let bounds = SearchBox::default();
    let mut hits = 0u32;
    let mut rho_floor_collapses = 0u32;
    const SEEDS: u32 = 50;
    for seed in 1..=SEEDS as u64 {
        let config = SimConfig {
            spec: arena,
            population: 1023,
            runs: 80,
            background_rho: 0.5,
            tagged: Some(PlayerParams::new(1.0, 0.5).unwrap()),
            seed,
        };
        let sim = Simulation::new(config).unwrap();
        let counts = sim.tally_of(sim.tagged_index().unwrap()).unwrap();
        let est = map_estimate(arena, &prior, &counts, &bounds).unwrap();
        if (0.5..=1.5).contains(&est.x_hat) && (0.1..=1.2).contains(&est.rho_hat) {
            hits += 1;
        } else if est.rho_hat < 0.1 {
            rho_floor_collapses += 1;
        }
    }
    eprintln!(
        "[acceptance]   recovered (x, rho) within ([0.5,1.5], [0.1,1.2]) in {hits}/{SEEDS} replications \
         ({rho_floor_collapses} rho-floor collapses)"
    );
    if hits * 5 < SEEDS * 4 {
        failures.push(format!(
            "recovery rate {hits}/{SEEDS} < 80%: with r = 80 the objective is nearly flat in rho and the \
             MAP collapses to the rho floor whenever the sample shows fewer upsets than expected \
             (~6.6% expected mass below (2,1)); resampling final results from the model's own \
             distribution reproduces this ~25% collapse rate, so the bound is unattainable for \
             this estimator at this sample size"
        ));
    }
    report(6, "MAP recovery scatter", started, Duration::from_secs(900), &failures);
}

/// Golden values for the bundled World Cup datasets: per-country estimates
/// and the model (P1) / frequency (P2) probability columns, codes 0..=5.
const REFERENCE_ESTIMATES: [(&str, f64, f64); 4] = [
    ("Brazil", 1.80, 0.50),
    ("Italy", 1.17, 1.56),
    ("Argentina", 1.14, 3.32),
    ("Sweden", 0.06, 2.11),
];
const REFERENCE_P1: [(&str, [f64; 6]); 4] = [
    ("Brazil", [0.05, 0.09, 0.15, 0.20, 0.21, 0.30]),
    ("Italy", [0.26, 0.24, 0.20, 0.14, 0.08, 0.07]),
    ("Argentina", [0.37, 0.25, 0.16, 0.10, 0.06, 0.06]),
    ("Sweden", [0.49, 0.28, 0.14, 0.06, 0.02, 0.01]),
];
const REFERENCE_P2: [(&str, [f64; 6]); 4] = [
    ("Brazil", [0.0, 0.0, 0.3, 0.3, 0.0, 0.4]),
    ("Italy", [0.2, 0.4, 0.0, 0.1, 0.2, 0.1]),
    ("Argentina", [0.4, 0.2, 0.1, 0.0, 0.1, 0.2]),
    ("Sweden", [0.5, 0.3, 0.0, 0.2, 0.0, 0.0]),
];

#[test]
fn c07_worldcup_estimates_and_columns() {
    let started = Instant::now();
    let mut failures = Vec::new();
    let train = bundled_train();
    let arena = worldcup_spec();
    let prior = DensityGrid::standard_normal();

    // Brazil's estimate from the bundled data
    let brazil = map_estimate(arena, &prior, &country_counts(&train, "Brazil").unwrap(), &SearchBox::default()).unwrap();
    eprintln!("[acceptance]   Brazil estimate: x_hat = {:.3}, rho_hat = {:.3}", brazil.x_hat, brazil.rho_hat);
    if (brazil.x_hat - 1.80).abs() > 0.25 || (brazil.rho_hat - 0.50).abs() > 0.25 {
        failures.push(format!(
            "Brazil estimate ({:.3}, {:.3}) outside (1.80, 0.50) +- 0.25",
            brazil.x_hat, brazil.rho_hat
        ));
    }

    // plug-in predictions at the reference (x, rho) pairs against column P1
    for ((country, x, rho), (_, p1)) in REFERENCE_ESTIMATES.into_iter().zip(REFERENCE_P1) {
        let est = MapEstimate { x_hat: x, rho_hat: rho, log_objective: 0.0, at_x_bound: false, at_rho_bound: false };
        let predicted = predict_map(arena, &est).unwrap();
        let mut worst: f64 = 0.0;
        for (code, expect) in p1.into_iter().enumerate() {
            let got = predicted.prob(code_to_state(code as u8).unwrap()).unwrap();
            worst = worst.max((got - expect).abs());
            if (got - expect).abs() > 0.03 {
                failures.push(format!("{country} P1 code {code}: {got:.3} vs reference {expect} (> 0.03)"));
            }
        }
        eprintln!("[acceptance]   {country} P1 worst deviation {worst:.4}");
    }

    // training frequencies against column P2, exact
    for (country, p2) in REFERENCE_P2 {
        let freq = predict_frequency(&country_counts(&train, country).unwrap()).unwrap();
        for (code, expect) in p2.into_iter().enumerate() {
            let got = freq.prob(code_to_state(code as u8).unwrap()).unwrap();
            if got != expect {
                failures.push(format!("{country} P2 code {code}: {got} != {expect}"));
            }
        }
    }

    report(7, "World Cup estimates and P1/P2 columns", started, Duration::from_secs(60), &failures);
}

#[test]
fn c08_worldcup_prediction_distances() {
    let started = Instant::now();
    let mut failures = Vec::new();
    let report_data = evaluate(&bundled_train(), &bundled_test(), &SearchBox::default()).unwrap();
    for entry in &report_data.entries {
        eprintln!(
            "[acceptance]   {}: d(P1,F) = {:.3}, d(P2,F) = {:.3}",
            entry.country, entry.d_model, entry.d_frequency
        );
        if entry.d_model >= entry.d_frequency {
            failures.push(format!(
                "{}: model distance {:.3} is not below frequency distance {:.3}",
                entry.country, entry.d_model, entry.d_frequency
            ));
        }
        if entry.country == "Brazil" {
            if (entry.d_model - 0.30).abs() > 0.05 {
                failures.push(format!("Brazil d(P1,F) = {:.3} outside 0.30 +- 0.05", entry.d_model));
            }
            if (entry.d_frequency - 0.49).abs() > 0.05 {
                failures.push(format!("Brazil d(P2,F) = {:.3} outside 0.49 +- 0.05", entry.d_frequency));
            }
        }
    }
    report(8, "World Cup prediction distances", started, Duration::from_secs(60), &failures);
}

#[test]
fn c09_worldcup_pooled_ordering() {
    let started = Instant::now();
    let mut failures = Vec::new();
    let entries = evaluate_pooled(&bundled_train(), &bundled_test(), &SearchBox::default()).unwrap();
    let strength = |country: &str| {
        entries.iter().find(|e| e.country == country).map(|e| e.estimate.x_hat).unwrap()
    };
    let (brazil, italy, argentina, sweden) =
        (strength("Brazil"), strength("Italy"), strength("Argentina"), strength("Sweden"));
    eprintln!(
        "[acceptance]   pooled strengths: Brazil {brazil:.3} > Italy {italy:.3} > Argentina {argentina:.3} > Sweden {sweden:.3}"
    );
    if !(brazil > italy && italy > argentina && argentina > sweden) {
        failures.push("pooled strength ordering violated".into());
    }
    for entry in &entries {
        if entry.prediction.probs().iter().any(|p| *p <= 0.0) {
            failures.push(format!("{}: a predicted probability is not strictly positive", entry.country));
        }
    }
    report(9, "World Cup pooled strength ordering", started, Duration::from_secs(60), &failures);
}

#[test]
fn c10_invariant_suite() {
    let started = Instant::now();
    let mut failures = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(31_415);

    // mass conservation of result_prob_approx, all specs m, n <= 6
    let mut worst_mass: f64 = 0.0;
    for m in 1..=6 {
        for n in 1..=6 {
            let arena = spec(m, n);
            for _ in 0..50 {
                let x: f64 = rng.gen_range(-4.0..4.0);
                let rho: f64 = rng.gen_range(0.05..4.0);
                let table = build_moment_table(arena, rho).unwrap();
                let sum: f64 = result_prob_approx(&table, x).probs().iter().sum();
                worst_mass = worst_mass.max((sum - 1.0).abs());
            }
        }
    }
    if worst_mass > 1e-12 {
        failures.push(format!("result_prob_approx mass defect {worst_mass:.2e} > 1e-12"));
    }

    // partition property of the exact conditional probabilities
    let lattice = build_lattice(spec(2, 2), &DensityGrid::standard_normal()).unwrap();
    let mut worst_partition: f64 = 0.0;
    for _ in 0..100 {
        let x: f64 = rng.gen_range(-4.0..4.0);
        let sum: f64 = lattice.result_masses(x).unwrap().iter().sum();
        worst_partition = worst_partition.max((sum - 1.0).abs());
    }
    if worst_partition > 1e-6 {
        failures.push(format!("exact partition defect {worst_partition:.2e} > 1e-6"));
    }

    // moment-table mirror symmetry for m = n
    for rho in [0.1, 0.5, 1.0, 3.0] {
        let table = build_moment_table(spec(3, 3), rho).unwrap();
        for state in spec(3, 3).states() {
            let mirror = State::new(state.losses, state.wins);
            let mu_gap = (table.mu(state).unwrap() + table.mu(mirror).unwrap()).abs();
            let s2_gap = (table.sigma2(state).unwrap() - table.sigma2(mirror).unwrap()).abs();
            if mu_gap > 1e-12 || s2_gap > 1e-12 {
                failures.push(format!("moment symmetry broken at {state} (rho = {rho})"));
            }
        }
    }

    // posterior normalization
    let data = ResultCounts::from_pairs(
        spec(2, 2),
        [(State::new(2, 0), 11), (State::new(2, 1), 6), (State::new(1, 2), 2), (State::new(0, 2), 1)],
    )
    .unwrap();
    let posterior = posterior_no_fluct(&lattice, &data).unwrap();
    if (posterior.integral() - 1.0).abs() > 1e-6 {
        failures.push(format!("posterior integral {} deviates from 1 by > 1e-6", posterior.integral()));
    }

    // pool-size law, exact counts
    let sim = Simulation::new(SimConfig {
        spec: spec(2, 2),
        population: 1024,
        runs: 1,
        background_rho: 0.5,
        tagged: None,
        seed: 8,
    })
    .unwrap();
    let trace = sim.run_trace(0);
    let law = [
        (1, State::new(1, 0), 512),
        (1, State::new(0, 1), 512),
        (2, State::new(1, 1), 512),
    ];
    for (round, state, expect) in law {
        let got = trace.pool_size(round, state);
        if got != expect {
            failures.push(format!("pool-size law: {got} players at {state} after round {round}, expected {expect}"));
        }
    }

    // seed determinism: byte-identical CSV exports
    let config = SimConfig {
        spec: spec(2, 2),
        population: 255,
        runs: 10,
        background_rho: 0.5,
        tagged: Some(PlayerParams::new(0.7, 0.5).unwrap()),
        seed: 99,
    };
    let mut csv_a = Vec::new();
    write_outcomes_csv(&mut csv_a, &simulate(config.clone()).unwrap()).unwrap();
    let mut csv_b = Vec::new();
    write_outcomes_csv(&mut csv_b, &simulate(config).unwrap()).unwrap();
    if csv_a != csv_b {
        failures.push("outcome CSV is not byte-identical across reruns".into());
    }

    eprintln!(
        "[acceptance]   mass defect {worst_mass:.1e}, partition defect {worst_partition:.1e}, \
         symmetry/posterior/pool-law/determinism checked"
    );
    report(10, "invariant suite", started, Duration::from_secs(120), &failures);
}
