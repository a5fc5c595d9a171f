use vibdsde_core::doss::{eta_flow, FlowSpec};
use vibdsde_core::noise::sample_noise_split;
use vibdsde_core::verify::{oracle_solve, OracleKind};
use vibdsde_core::*;

fn coeffs(f: Driver, h: NoiseDriver, chi: Terminal, b: Drift) -> CoefficientSet {
    CoefficientSet::new(f, BoundaryDriver::Zero, h, chi, b, Diffusion::ScaledIdentity { s: 1.0 }, 1)
}

#[test]
fn paths_do_not_depend_on_batch_size() {
    let grid = make_time_grid(0.0, 1.0, 16).unwrap();
    let big = sample_noise(&grid, 40, 2, 77).unwrap();
    let small = sample_noise(&grid, 7, 2, 77).unwrap();
    for k in 0..16 {
        for m in 0..7 {
            assert_eq!(big.dw(k, m), small.dw(k, m));
        }
    }
    assert_eq!(big.b(), small.b());
    assert_eq!(big.b()[0], 0.0);
}

#[test]
fn flow_is_lipschitz_in_the_start() {
    let grid = make_time_grid(0.0, 1.0, 200).unwrap();
    let bundle = sample_noise(&grid, 4000, 1, 3).unwrap();
    let dom = DomainSpec::HalfSpace { dim: 1 };
    let c = coeffs(Driver::Zero, NoiseDriver::Zero, Terminal::Abs, Drift::Linear { a: -0.5 });
    let base = simulate_forward(&dom, &c, &[0.3], &bundle, 0).unwrap();
    let hs = [0.1, 0.05, 0.025];
    let mut sq = Vec::new();
    for h in hs {
        let other = simulate_forward(&dom, &c, &[0.3 + h], &bundle, 0).unwrap();
        let mut acc = 0.0;
        for m in 0..bundle.paths() {
            let sup = (0..=200).map(|k| (base.x(k, m)[0] - other.x(k, m)[0]).abs()).fold(0.0, f64::max);
            acc += sup * sup;
        }
        sq.push(acc / bundle.paths() as f64);
    }
    let slope = scalar::log_log_slope(&hs, &sq).unwrap();
    assert!((slope - 2.0).abs() <= 0.3, "slope {slope}, {sq:?}");
}

#[test]
fn doss_transform_matches_solver() {
    let beta = 0.5;
    let grid = make_time_grid(0.0, 1.0, 400).unwrap();
    let h = NoiseDriver::ExpBeta { beta };
    let c = coeffs(Driver::Zero, h, Terminal::Constant { c: 1.2 }, Drift::Zero);
    for seed in [1u64, 2, 3] {
        let bundle = sample_noise(&grid, 200, 1, seed).unwrap();
        let dom = DomainSpec::WholeSpace { dim: 1 };
        let fwd = simulate_forward(&dom, &c, &[0.0], &bundle, 0).unwrap();
        let sol =
            solve_backward(&fwd, &bundle, &c, &ConvexSpec::Zero, &ConvexSpec::Zero, &SolverConfig::default()).unwrap();
        // v' = ½β²v backward from v(T) = χ, then pushed through the flow
        let v0 = 1.2 * (-0.5 * beta * beta).exp();
        let (eta, _) = eta_flow(&FlowSpec::numeric(h), 0.0, &[0.0], v0, &grid, bundle.b()).unwrap();
        let y0 = sol.mean_y(0);
        assert!((y0 - eta).abs() <= 0.01 * eta.abs(), "seed {seed}: {y0} vs {eta}");

        let db = bundle.b()[400] - bundle.b()[0];
        let k = OracleKind::DossClosedForm { beta, chi: 1.2, t_end: 1.0, delta_b: vec![db] };
        let closed = oracle_solve(&k, &[0.0], &[]).unwrap().values[0];
        // midpoint flow error grows like sqrt(N)·(β²Δt)^{3/2}
        assert!((closed - eta).abs() <= 1e-3 * closed, "{closed} vs {eta}");
    }
}

fn field(c: &CoefficientSet, forward_seed: u64, scenario_seed: u64) -> FieldSamples {
    let tg = make_time_grid(0.0, 1.0, 40).unwrap();
    let bundle = sample_noise_split(&tg, 4000, 1, forward_seed, scenario_seed).unwrap();
    let grid = FieldGrid { times: vec![0.0, 0.5], points: vec![vec![0.0], vec![0.5], vec![1.0]] };
    build_field(
        &grid,
        &DomainSpec::HalfSpace { dim: 1 },
        c,
        &ConvexSpec::Zero,
        &ConvexSpec::Zero,
        &SolverConfig::default(),
        &bundle,
    )
    .unwrap()
}

fn max_gap_in_std_errs(a: &FieldSamples, b: &FieldSamples) -> f64 {
    a.u.iter()
        .zip(&b.u)
        .zip(a.std_err.iter().zip(&b.std_err))
        .map(|((x, y), (s, t))| {
            let se = (s * s + t * t).sqrt();
            if se == 0.0 {
                (x - y).abs() / 1e-300
            } else {
                (x - y).abs() / se
            }
        })
        .fold(0.0, f64::max)
}

#[test]
fn field_without_backward_noise_ignores_the_scenario() {
    let c = coeffs(Driver::Linear { a: 0.3 }, NoiseDriver::Zero, Terminal::Abs, Drift::Zero);
    let a = field(&c, 5, 100);
    let b = field(&c, 5, 200);
    assert!(max_gap_in_std_errs(&a, &b) <= 3.0);
    assert_eq!(a.u, b.u);
    let again = field(&c, 5, 100);
    assert_eq!(a, again);
}

#[test]
fn field_scenario_measurability() {
    let c = coeffs(Driver::Linear { a: 0.3 }, NoiseDriver::ExpBeta { beta: 0.8 }, Terminal::Abs, Drift::Zero);
    let a = field(&c, 5, 100);
    let b = field(&c, 6, 100);
    let g = max_gap_in_std_errs(&a, &b);
    assert!(g <= 3.0, "forward reseed moved the field by {g} std errs");
    let other = field(&c, 5, 200);
    assert!(max_gap_in_std_errs(&a, &other) > 3.0);
}

#[test]
fn picard_on_a_log_lipschitz_driver() {
    let grid = make_time_grid(0.0, 1.0, 40).unwrap();
    let bundle = sample_noise(&grid, 500, 1, 8).unwrap();
    let c = coeffs(
        Driver::LogLipschitz { k: 1.0, delta: 0.2 },
        NoiseDriver::Zero,
        Terminal::Constant { c: 0.5 },
        Drift::Zero,
    );
    let dom = DomainSpec::WholeSpace { dim: 1 };
    let fwd = simulate_forward(&dom, &c, &[0.0], &bundle, 0).unwrap();
    let z = ConvexSpec::Zero;
    let direct = solve_backward(&fwd, &bundle, &c, &z, &z, &SolverConfig::default()).unwrap();
    let cfg =
        SolverConfig::with_mode(SolveMode::Picard { inner: backward::StepMode::Resolvent, max_iter: 200, tol: 1e-14 });
    let out = picard_solve(&fwd, &bundle, &c, &z, &z, &cfg).unwrap();
    // residuals[0] only measures the distance from the zero start
    assert!(out.residuals[1..].windows(2).all(|w| w[1] <= w[0]), "{:?}", out.residuals);
    assert!((out.solution.mean_y(0) - direct.mean_y(0)).abs() < 1e-4);
}
