use nlch::config::{InitialSpec, RunConfig, SupplyConfig, DEFAULT_CONFIG};
use nlch::error::Error;
use nlch::io::{field_csv_string, write_field_csv, write_run_artifacts};
use nlch::kernel::ConvolutionMethod;
use nlch::model::ValidationMode;
use nlch::solver::{run, RunOptions, Splitting};

fn base() -> RunConfig {
    RunConfig::from_toml_str(DEFAULT_CONFIG).unwrap()
}

fn small_2d() -> RunConfig {
    let mut cfg = base();
    cfg.t_final = 0.05;
    cfg.grid.cells = vec![24, 16];
    cfg.grid.lengths = vec![1.0, 0.75];
    cfg.kernel.width = 0.08;
    cfg.kernel.cutoff_radius = 0.2;
    cfg
}

#[test]
fn two_dimensional_strict_run_is_clean() {
    let cfg = small_2d();
    let problem = cfg.resolve().unwrap();
    let opts = RunOptions {
        keep_trajectory: true,
        ..RunOptions::default()
    };
    let res = run(&problem, opts).unwrap();
    assert!(res.is_clean(), "{:?}", res.flags());
    assert_eq!(res.steps, 50);
    let p = &problem.model;
    for w in res.trajectory.windows(2) {
        let n = w[0].phi.len() as f64;
        let src: f64 = w[0]
            .phi
            .values()
            .iter()
            .zip(w[1].sigma.values())
            .map(|(&f, &s)| p.source(f, s))
            .sum::<f64>()
            / n;
        let rate = (w[1].phi.mean() - w[0].phi.mean()) / res.dt;
        assert!((rate - src).abs() < 1e-10);
    }
}

#[test]
fn identical_seeds_give_identical_bytes() {
    let mut cfg = small_2d();
    cfg.seed = Some(42);
    cfg.initial.phi = InitialSpec::RandomPerturbed {
        mean: 0.5,
        amplitude: 0.1,
    };
    let a = run(&cfg.resolve().unwrap(), RunOptions::default()).unwrap();
    let b = run(&cfg.resolve().unwrap(), RunOptions::default()).unwrap();
    assert_eq!(
        field_csv_string(&a.final_state.phi),
        field_csv_string(&b.final_state.phi)
    );
    assert_eq!(a.records, b.records);
    cfg.seed = Some(43);
    let c = run(&cfg.resolve().unwrap(), RunOptions::default()).unwrap();
    assert_ne!(a.final_state.phi, c.final_state.phi);
}

#[test]
fn convolution_routes_agree_along_a_run() {
    let mut cfg = small_2d();
    cfg.kernel.method = ConvolutionMethod::Direct;
    let direct = run(&cfg.resolve().unwrap(), RunOptions::default()).unwrap();
    cfg.kernel.method = ConvolutionMethod::Fft;
    let fft = run(&cfg.resolve().unwrap(), RunOptions::default()).unwrap();
    let d = direct.final_state.phi.sub(&fft.final_state.phi).unwrap().norm_linf();
    assert!(d < 1e-11, "{d}");
}

#[test]
fn fully_implicit_run_is_clean() {
    let mut cfg = base();
    cfg.t_final = 0.2;
    cfg.grid.cells = vec![64];
    cfg.scheme.splitting = Splitting::FullyImplicit;
    let res = run(&cfg.resolve().unwrap(), RunOptions::default()).unwrap();
    assert!(res.is_clean(), "{:?}", res.flags());
}

#[test]
fn fields_and_supply_load_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base();
    cfg.t_final = 0.01;
    cfg.grid.cells = vec![32];
    let grid = cfg.build_grid().unwrap();
    let phi = nlch::grid::Field::from_fn(grid, |x, _| 0.4 + 0.1 * x);
    let supply = nlch::grid::Field::from_fn(grid, |x, _| 0.5 + 0.5 * x);
    write_field_csv(&dir.path().join("phi0.csv"), &phi).unwrap();
    write_field_csv(&dir.path().join("supply.csv"), &supply).unwrap();

    cfg.model.sigma_s = SupplyConfig::File {
        file: "supply.csv".into(),
    };
    cfg.initial.phi = InitialSpec::File {
        path: "phi0.csv".into(),
    };
    cfg.base_dir = Some(dir.path().to_path_buf());
    // the file form survives a TOML roundtrip
    let back = RunConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
    assert_eq!(back.model.sigma_s, cfg.model.sigma_s);
    let problem = cfg.resolve().unwrap();
    assert_eq!(problem.phi0, phi);
    let res = run(&problem, RunOptions::default()).unwrap();
    assert!(res.is_clean(), "{:?}", res.flags());

    cfg.initial.phi = InitialSpec::File {
        path: "missing.csv".into(),
    };
    let err = cfg.resolve().unwrap_err();
    assert!(matches!(err, Error::Io { .. }), "{err}");
    assert_eq!(err.exit_code(), 4);
}

#[test]
fn strict_runs_reject_violated_assumptions_and_lab_runs_warn() {
    let mut cfg = base();
    cfg.t_final = 0.01;
    cfg.model.tau = 0.0;
    cfg.model.chi = 0.5;
    let err = run(&cfg.resolve().unwrap(), RunOptions::default()).unwrap_err();
    let err = Error::from(err);
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("tau-zero-coupling"), "{err}");

    cfg.mode = ValidationMode::Lab;
    let res = run(&cfg.resolve().unwrap(), RunOptions::default()).unwrap();
    assert!(res
        .validation
        .warnings()
        .iter()
        .any(|c| c.name == "tau-zero-coupling"));
}

#[test]
fn artifacts_cover_every_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base();
    cfg.t_final = 0.01;
    cfg.grid.cells = vec![32];
    cfg.output.snapshot_every = 5;
    let problem = cfg.resolve().unwrap();
    let res = run(&problem, cfg.run_options()).unwrap();
    let files = write_run_artifacts(dir.path(), &res, problem.potential.lambda()).unwrap();
    let names: Vec<String> = files
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    for want in ["diagnostics.csv", "summary.txt", "phi_000000.csv", "phi_000005.csv", "sigma_000010.csv", "mu_000010.csv"] {
        assert!(names.iter().any(|n| n == want), "{want} missing from {names:?}");
    }
    let diag = std::fs::read_to_string(dir.path().join("diagnostics.csv")).unwrap();
    assert_eq!(diag.lines().count(), 12);
    let summary = std::fs::read_to_string(dir.path().join("summary.txt")).unwrap();
    assert!(summary.contains("flags = []"), "{summary}");
}
