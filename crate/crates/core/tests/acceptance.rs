//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line
//! (written straight to the stdout handle so it survives output capture)
//! and then asserts.

use std::io::Write;
use std::process::Command;
use std::time::Instant;

use consensus_admm::admm::{run, NoiseModel, PenaltySchedule, RunConfig};
use consensus_admm::graph::{gen_random_connected, Graph, NetworkMatrices, SpectralStats};
use consensus_admm::harness::{
    compare_tuning, monte_carlo, noise_propagation_check, sweep, ExperimentConfig, GraphSpec,
    ScheduleSpec, SweepAxis,
};
use consensus_admm::objectives::{make_scaled_least_squares, LeastSquaresSpec};
use consensus_admm::optimal_params;
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(id: u32, pass: bool, detail: String) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let line = format!("acceptance {id:>2}: {verdict} | {detail}\n");
    let mut out = std::io::stdout().lock();
    out.write_all(line.as_bytes()).unwrap();
    out.flush().unwrap();
}

fn suite_problem(nodes: usize, seed: u64) -> LeastSquaresSpec {
    LeastSquaresSpec {
        nodes,
        dim: 3,
        rows: 3,
        m_f: 1.0,
        lipschitz: 10.0,
        obs_var: 0.1,
        seed,
    }
}

#[test]
fn criterion_01_noiseless_linear_convergence() {
    let t0 = Instant::now();
    let g = gen_random_connected(20, 0.5, 7).unwrap();
    let prob = make_scaled_least_squares(&suite_problem(20, 1))
        .unwrap()
        .problem;
    let stats = SpectralStats::of_graph(&g);
    let opt = optimal_params(
        prob.m_f(),
        prob.lipschitz(),
        stats.sigma_max_mplus,
        stats.sigma_min_nz_mminus,
    )
    .unwrap();
    let cfg = RunConfig {
        schedule: PenaltySchedule::constant(opt.c),
        noise: NoiseModel::none(),
        iterations: 2000,
        seed: 0,
        track_dual: true,
    };
    let trace = run(&prob, &g, &cfg).unwrap();
    let first_hit = trace.records.iter().position(|r| r.rel_error <= 1e-10);
    let d = trace.d_series().unwrap();
    let worst = d
        .windows(2)
        .map(|w| w[1] - (w[0] / (1.0 + opt.delta) + 1e-12))
        .fold(f64::NEG_INFINITY, f64::max);
    let secs = t0.elapsed().as_secs_f64();
    let pass = first_hit.is_some() && worst <= 0.0 && secs < 5.0;
    report(
        1,
        pass,
        format!(
            "rel_error <= 1e-10 at k = {first_hit:?}; max contraction violation {worst:.3e}; delta* = {:.6}; {secs:.2}s",
            opt.delta
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_02_bound_sandwich() {
    let t0 = Instant::now();
    let cfg = ExperimentConfig::strongly_convex_suite(1e-4);
    let mc = monte_carlo(&cfg, false).unwrap();
    let b = mc.bounds.unwrap();
    let ub_e = b.ub_experimental.unwrap();
    let (lo, hi) = mc.mse_ci95;
    let secs = t0.elapsed().as_secs_f64();
    let pass = b.lb < lo
        && hi < b.ub_theoretical
        && ub_e <= b.ub_theoretical
        && ub_e >= mc.mse.mean
        && secs < 120.0;
    report(
        2,
        pass,
        format!(
            "LB {:.4e} < CI [{lo:.4e}, {hi:.4e}] < UB_t {:.4e}; UB_e {ub_e:.4e}; {secs:.1}s",
            b.lb, b.ub_theoretical
        ),
    );
    assert!(pass);
}

/// Least-squares slope of `log y` on `log x`.
fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let k = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / k, ly.iter().sum::<f64>() / k);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

#[test]
fn criterion_03_noise_linearity() {
    let mut cfg = ExperimentConfig::strongly_convex_suite(1e-4);
    cfg.experimental_bound = false;
    let eps = [1e-5, 1e-4, 1e-3, 1e-2];
    let res = sweep(&cfg, SweepAxis::Epsilon, &eps).unwrap();
    let y: Vec<f64> = res.rows.iter().map(|r| r.mean_ss_error).collect();
    let slope = loglog_slope(&eps, &y);
    let pass = (slope - 1.0).abs() <= 0.1;
    report(
        3,
        pass,
        format!("log-log slope {slope:.4} over errors {y:?}"),
    );
    assert!(pass);
}

#[test]
fn criterion_04_convex_only_boundedness() {
    let mut details = Vec::new();
    let mut pass = true;
    for eps in [1e-3, 1e-2] {
        let t0 = Instant::now();
        let g = gen_random_connected(20, 0.5, 7).unwrap();
        let spec = LeastSquaresSpec {
            nodes: 20,
            dim: 20,
            rows: 5,
            m_f: 0.0,
            lipschitz: 10.0,
            obs_var: 0.1,
            seed: 2,
        };
        let prob = make_scaled_least_squares(&spec).unwrap().problem;
        assert!(!prob.strongly_convex());
        let cfg = RunConfig {
            schedule: PenaltySchedule::constant(1.0),
            noise: NoiseModel::uniform(eps).unwrap(),
            iterations: 10_000,
            seed: 11,
            track_dual: false,
        };
        let trace = run(&prob, &g, &cfg).unwrap();
        let rel = trace.rel_errors();
        let finite = rel.iter().all(|v| v.is_finite());
        let mut tail = rel[rel.len() - 5000..].to_vec();
        let max = tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        tail.sort_by(f64::total_cmp);
        let median = 0.5 * (tail[2499] + tail[2500]);
        let secs = t0.elapsed().as_secs_f64();
        let ok = finite && max <= 10.0 * median && secs < 60.0;
        pass &= ok;
        details.push(format!(
            "eps {eps:e}: tail max/median {:.3} ({secs:.1}s)",
            max / median
        ));
    }
    report(4, pass, details.join("; "));
    assert!(pass);
}

/// Fiedler value of the combinatorial Laplacian assembled straight from the edge list.
fn dense_fiedler(g: &Graph) -> f64 {
    let n = g.node_count();
    let mut l = DMatrix::<f64>::zeros(n, n);
    for &(i, j) in g.edges() {
        l[(i, i)] += 1.0;
        l[(j, j)] += 1.0;
        l[(i, j)] -= 1.0;
        l[(j, i)] -= 1.0;
    }
    let mut ev: Vec<f64> = SymmetricEigen::new(l).eigenvalues.iter().cloned().collect();
    ev.sort_by(f64::total_cmp);
    ev[1]
}

#[test]
fn criterion_05_spectral_oracle_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst_4w = 0.0f64;
    let mut worst_fiedler = 0.0f64;
    let mut pass = true;
    for trial in 0..50 {
        let nodes = rng.random_range(5..=50usize);
        let r_lo = 0.2f64.max(2.0 / nodes as f64);
        let r = rng.random_range(r_lo..=0.9);
        let n = rng.random_range(1..=3usize);
        let g = gen_random_connected(nodes, r, 100 + trial).unwrap();
        let m = NetworkMatrices::new(&g, n).unwrap();
        let gram = &m.mplus * m.mplus.transpose() + &m.mminus * m.mminus.transpose();
        worst_4w = worst_4w.max((gram - &m.w * 4.0).amax());
        let stats = SpectralStats::of_graph(&g);
        let min_deg = (0..nodes).map(|i| g.neighbors(i).len()).min().unwrap() as f64;
        pass &= stats.lambda_min_w == min_deg;
        let fied = dense_fiedler(&g);
        let rel = (stats.sigma_min_nz_mminus.powi(2) - 2.0 * fied).abs() / (2.0 * fied);
        worst_fiedler = worst_fiedler.max(rel);
        let p = &m.lplus - &m.lminus;
        for &(i, j) in g.arcs() {
            let block = p.view((i * n, j * n), (n, n));
            pass &= block == DMatrix::<f64>::identity(n, n) * 2.0;
        }
    }
    pass &= worst_4w <= 1e-12 && worst_fiedler <= 1e-8;
    report(
        5,
        pass,
        format!("50 graphs: max |M+M+' + M-M-' - 4W| = {worst_4w:.2e}; max Fiedler rel dev {worst_fiedler:.2e}"),
    );
    assert!(pass);
}

#[test]
fn criterion_06_noise_propagation_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut pass = true;
    let mut ratios = Vec::new();
    for trial in 0..5 {
        let nodes = rng.random_range(5..=20usize);
        let g = gen_random_connected(nodes, 0.5, 200 + trial).unwrap();
        let n = rng.random_range(1..=3usize);
        let (emp, ana) = noise_propagation_check(&g, n, 0.1, 100_000, 300 + trial).unwrap();
        let ratio = emp / ana;
        pass &= (0.95..=1.05).contains(&ratio);
        ratios.push(ratio);
    }
    report(6, pass, format!("empirical/analytic ratios {ratios:.4?}"));
    assert!(pass);
}

/// Rate constant written out independently of the library.
fn delta_eq(mu: f64, c: f64, m_f: f64, big_m: f64, smax: f64, smin: f64) -> f64 {
    let a = (mu - 1.0) * smin * smin / (mu * smax * smax);
    let b = m_f / (c * smax * smax / 4.0 + mu * big_m * big_m / (c * smin * smin));
    a.min(b)
}

/// Coarse-to-fine log-grid maximization over `(μ − 1, c)`.
fn grid_argmax(m_f: f64, big_m: f64, smax: f64, smin: f64) -> (f64, f64) {
    let (mut lm_lo, mut lm_hi) = (-8.0f64, 6.0f64);
    let (mut lc_lo, mut lc_hi) = (-8.0f64, 8.0f64);
    let pts = 81;
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for _ in 0..8 {
        for a in 0..pts {
            let lm = lm_lo + (lm_hi - lm_lo) * a as f64 / (pts - 1) as f64;
            for b in 0..pts {
                let lc = lc_lo + (lc_hi - lc_lo) * b as f64 / (pts - 1) as f64;
                let d = delta_eq(1.0 + lm.exp(), lc.exp(), m_f, big_m, smax, smin);
                if d > best.0 {
                    best = (d, lm, lc);
                }
            }
        }
        let (wm, wc) = ((lm_hi - lm_lo) / 8.0, (lc_hi - lc_lo) / 8.0);
        (lm_lo, lm_hi) = (best.1 - wm, best.1 + wm);
        (lc_lo, lc_hi) = (best.2 - wc, best.2 + wc);
    }
    (best.0, best.2.exp())
}

#[test]
fn criterion_07_optimal_parameter_formulas() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut worst_d, mut worst_c) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let m_f = 10f64.powf(rng.random_range(-1.0..1.0));
        let big_m = m_f * 10f64.powf(rng.random_range(0.0..2.0));
        let smin = 10f64.powf(rng.random_range(-1.0..0.5));
        let smax = smin * 10f64.powf(rng.random_range(0.1..1.5));
        let opt = optimal_params(m_f, big_m, smax, smin).unwrap();
        let (d_grid, c_grid) = grid_argmax(m_f, big_m, smax, smin);
        worst_d = worst_d.max((opt.delta - d_grid).abs() / d_grid);
        worst_c = worst_c.max((opt.c - c_grid).abs() / c_grid);
    }
    let pass = worst_d <= 0.01 && worst_c <= 0.05;
    report(
        7,
        pass,
        format!("20 cases: max rel dev delta* {worst_d:.2e}, c* {worst_c:.2e}"),
    );
    assert!(pass);
}

#[test]
fn criterion_08_tuning_policy() {
    let mut cfg = ExperimentConfig::strongly_convex_suite(1e-4);
    cfg.seeds = 10;
    let cmp = compare_tuning(&cfg, 200, 0.01).unwrap();
    let pass = cmp.ss_wins >= 9 && cmp.switch_wins >= 9;
    report(
        8,
        pass,
        format!(
            "steady state wins {}/10, iteration-200 wins {}/10; mean ss scheduled {:.3e} vs fixed {:.3e}",
            cmp.ss_wins, cmp.switch_wins, cmp.scheduled_ss.mean, cmp.fixed_ss.mean
        ),
    );
    assert!(pass);
}

fn nonincreasing_within_se(rows: &[consensus_admm::harness::SweepRow]) -> bool {
    rows.windows(2)
        .all(|w| w[1].mean_ss_error <= w[0].mean_ss_error + w[0].stderr.max(w[1].stderr))
}

#[test]
fn criterion_09_topology_trends() {
    let mut details = Vec::new();

    let mut dens = ExperimentConfig::strongly_convex_suite(1e-4);
    dens.resample_graph = true;
    dens.experimental_bound = false;
    let d = sweep(&dens, SweepAxis::EdgeDensity, &[0.2, 0.5, 0.8]).unwrap();
    let dens_ok = nonincreasing_within_se(&d.rows);
    details.push(format!(
        "density {:?}",
        d.rows.iter().map(|r| r.mean_ss_error).collect::<Vec<_>>()
    ));

    let big = |graph: GraphSpec| ExperimentConfig {
        graph,
        graph_seed: 9,
        resample_graph: true,
        problem: suite_problem(100, 1),
        epsilon: 1e-4,
        schedule: ScheduleSpec::default(),
        iterations: 3000,
        burn_in: 0.5,
        seeds: 20,
        base_seed: 1000,
        experimental_bound: false,
    };
    let reg = sweep(
        &big(GraphSpec::Regular {
            nodes: 100,
            degree: 4,
        }),
        SweepAxis::Degree,
        &[4.0, 10.0, 30.0],
    )
    .unwrap();
    let reg_ok = nonincreasing_within_se(&reg.rows);
    details.push(format!(
        "degree {:?}",
        reg.rows.iter().map(|r| r.mean_ss_error).collect::<Vec<_>>()
    ));

    let mut tree_cfg = big(GraphSpec::Tree {
        nodes: 100,
        branch: 2,
    });
    tree_cfg.resample_graph = false;
    let tree = sweep(
        &tree_cfg,
        SweepAxis::BranchFactor,
        &[2.0, 3.0, 4.0, 6.0, 10.0],
    )
    .unwrap();
    let tree_ok = tree.rows.iter().all(|r| {
        let b = r.bounds.unwrap();
        b.lb <= r.mse.mean && r.mse.mean <= b.ub_theoretical
    });
    details.push(format!(
        "tree within [LB, UB_t] at all {} points: {tree_ok}",
        tree.rows.len()
    ));

    let pass = dens_ok && reg_ok && tree_ok;
    report(9, pass, details.join("; "));
    assert!(pass);
}

#[test]
fn criterion_10_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_consensus-admm");
    let mut cfg = ExperimentConfig::strongly_convex_suite(1e-3);
    cfg.iterations = 400;
    cfg.seeds = 4;
    let cfg_path = dir.path().join("cfg.json");
    std::fs::write(&cfg_path, serde_json::to_string(&cfg).unwrap()).unwrap();
    let invoke = |args: &[&str], out: &str, jobs: &str| {
        let status = Command::new(bin)
            .args(args)
            .args([
                "--config",
                cfg_path.to_str().unwrap(),
                "--jobs",
                jobs,
                "--out",
            ])
            .arg(dir.path().join(out))
            .output()
            .unwrap();
        assert!(
            status.status.success(),
            "{}",
            String::from_utf8_lossy(&status.stderr)
        );
    };
    let sweep_args = ["sweep", "--axis", "epsilon", "--values", "1e-4,1e-3"];
    invoke(&["run", "--track-dual"], "run_a", "1");
    invoke(&["run", "--track-dual"], "run_b", "4");
    invoke(&sweep_args, "sweep_a", "1");
    invoke(&sweep_args, "sweep_b", "3");
    let read = |p: &str| std::fs::read(dir.path().join(p)).unwrap();
    let pass = read("run_a/trace.csv") == read("run_b/trace.csv")
        && read("sweep_a/sweep.csv") == read("sweep_b/sweep.csv")
        && read("sweep_a/sweep.json") == read("sweep_b/sweep.json");
    report(
        10,
        pass,
        "run and sweep CSVs byte-identical across replays with 1 and several workers".into(),
    );
    assert!(pass);
}
