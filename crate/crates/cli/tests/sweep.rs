use magsac_cli::bench::{generate_points, scene_seed, solver_seed, synthetic_scenes};
use magsac_cli::report::{aggregate, format_sig};
use magsac_cli::{run_sweep, BenchConfig};
use magsac_core::{estimate, evaluate, Method, ProblemDef, ProblemKind, SolverConfig};

fn small_config() -> BenchConfig {
    let mut cfg = BenchConfig {
        problem: ProblemKind::Line2D,
        methods: vec![Method::Msac, Method::Magsac],
        runs: 3,
        noise_levels: vec![1.0],
        outlier_ratios: vec![0.4],
        points: 80,
        ..Default::default()
    };
    cfg.solver.max_iterations = 2000;
    cfg
}

#[test]
fn records_are_recomputable() {
    let cfg = small_config();
    let scenes = synthetic_scenes(&cfg);
    let outcome = run_sweep(&cfg, &scenes);
    assert!(outcome.failures.is_empty());
    let problem = ProblemDef::new(cfg.problem);
    for rec in &outcome.records {
        let points = generate_points(cfg.problem, 1.0, 0.4, cfg.points, scene_seed(cfg.solver.seed, 0, rec.run)).unwrap();
        let method: Method = rec.method.parse().unwrap();
        let solver = SolverConfig { seed: solver_seed(cfg.solver.seed, rec.run), ..cfg.solver };
        let r = estimate(&points, &problem, &solver, method).unwrap();
        let e = evaluate(&r.model.unwrap(), &points, &problem, cfg.failure_threshold).unwrap();
        assert_eq!(format_sig(e.error_rms), format_sig(rec.error_rms));
        assert_eq!(r.samples_drawn, rec.samples);
    }
}

#[test]
fn record_order_is_method_scene_run() {
    let mut cfg = small_config();
    cfg.noise_levels = vec![0.5, 1.0];
    let scenes = synthetic_scenes(&cfg);
    let outcome = run_sweep(&cfg, &scenes);
    let keys: Vec<(String, String, usize)> =
        outcome.records.iter().map(|r| (r.method.clone(), r.scene.clone(), r.run)).collect();
    let mut expected = Vec::new();
    for m in ["msac", "magsac"] {
        for s in &scenes {
            for run in 0..3 {
                expected.push((m.to_string(), s.name.clone(), run));
            }
        }
    }
    assert_eq!(keys, expected);

    let aggs = aggregate(&outcome.records, &magsac_cli::bench::variants(&cfg), &scenes);
    assert_eq!(aggs.len(), 2 * 2 + 2);
    let pooled = aggs.iter().find(|a| a.method == "msac" && a.scene == "ALL").unwrap();
    assert_eq!(pooled.runs, 6);
    let mean_err: f64 = outcome
        .records
        .iter()
        .filter(|r| r.method == "msac")
        .map(|r| r.error_rms)
        .sum::<f64>()
        / 6.0;
    assert!((pooled.mean_error_rms - mean_err).abs() < 1e-12);
}
