//! Configuration loading: defaults, hypothesis validation with named
//! conditions, the waiver flag, and structural (never-waivable) errors.

use std::path::Path;

use consumax::config::parse_config;
use consumax::CliError;
use consumax_core::stepper::DtPolicy;

fn parse(text: &str) -> consumax::Result<consumax::ExperimentConfig> {
    parse_config(text, Path::new("."), false)
}

fn parse_waived(text: &str) -> consumax::Result<consumax::ExperimentConfig> {
    parse_config(text, Path::new("."), true)
}

/// Collected violation messages, or a panic if the error is of another kind.
fn violations(res: consumax::Result<consumax::ExperimentConfig>) -> Vec<String> {
    match res {
        Err(CliError::Config(v)) => v,
        other => panic!("expected hypothesis violations, got {other:?}"),
    }
}

#[test]
fn minimal_config_fills_documented_defaults() {
    let cfg = parse("").unwrap();
    // 64×64 on the unit square, T = 1, adaptive σ = 0.9, ε = 1e−2.
    assert_eq!((cfg.sim.grid.nx, cfg.sim.grid.ny), (64, 64));
    assert_eq!((cfg.sim.grid.lx, cfg.sim.grid.ly), (1.0, 1.0));
    assert_eq!(cfg.sim.t_final, 1.0);
    assert_eq!(cfg.sim.eps, 1e-2);
    assert!(matches!(cfg.sim.dt_policy, DtPolicy::Adaptive { sigma } if sigma == 0.9));
    // Unit Dirac at (0.3, 0.6), v₀ ≡ 0.3.
    assert_eq!(cfg.u0.atoms, vec![(0.3, 0.6, 1.0)]);
    assert!(cfg.u0.density.is_none());
    assert!((cfg.vmax() - 0.3).abs() < 1e-15);
    // Geometric 9-point ladder 1e−4 … 1.
    assert_eq!(cfg.probe_times.len(), 9);
    assert_eq!(cfg.probe_times[0], 1e-4);
    assert_eq!(*cfg.probe_times.last().unwrap(), 1.0);
    // Four tensor-cosine test functions, one L¹ distance column.
    assert_eq!(cfg.test_functions, vec![(0, 0), (1, 0), (0, 1), (1, 1)]);
    assert_eq!(cfg.vdist_ps, vec![1.0]);
    // Default sweep ladder and Cauchy time.
    assert_eq!(cfg.eps_list, vec![1e-1, 3e-2, 1e-2, 3e-3]);
    assert_eq!(cfg.t_cauchy, 0.5);
    assert_eq!(cfg.refine_levels, 3);
    // 0.3 < 2/(3·2·1) = 1/3, so an admissible δ exists and the default pair
    // is (1 + δ/2, p − 1 + 0.1).
    let d = cfg.delta.expect("smallness holds for the defaults");
    assert!(!cfg.exploratory);
    let (p, lambda) = cfg.pairs[0];
    assert!((p - (1.0 + d / 2.0)).abs() < 1e-15);
    assert!((lambda - ((p - 1.0) + 0.1)).abs() < 1e-15);
    // Verify section defaults to the simulation's scalars.
    assert_eq!(cfg.verify.n, 2);
    assert_eq!(cfg.verify.chi, 1.0);
    assert!((cfg.verify.vmax - 0.3).abs() < 1e-15);
    assert_eq!(cfg.verify.s_points, 10_000);
}

#[test]
fn smallness_violation_is_rejected_with_the_condition_named() {
    // ‖v₀‖∞ = 0.4 ≥ 1/3 = 2/(3·2·1).
    let msgs = violations(parse("[init]\nv0 = \"const:0.4\"\n"));
    assert_eq!(msgs.len(), 1);
    assert!(msgs[0].contains("0.4"), "{msgs:?}");
    assert!(msgs[0].contains("2/(3nχ)"), "{msgs:?}");
    assert!(msgs[0].contains("0.3333333333333333"), "{msgs:?}");

    // The waiver flag turns the same config into an exploratory one.
    let cfg = parse_waived("[init]\nv0 = \"const:0.4\"\n").unwrap();
    assert!(cfg.exploratory);
    assert!(cfg.delta.is_none());
}

#[test]
fn inadmissible_time_weight_is_rejected_with_the_constraint() {
    // λ = 0.1 with p = 1.5, n = 2 needs λ > n(p−1)/2 = 1·0.5 = 0.5. (With
    // the default v₀ this p also exceeds n/2 + δ, so that is listed too.)
    let text = "[functionals]\npairs = [[1.5, 0.1]]\n";
    let msgs = violations(parse(text));
    assert!(
        msgs.iter()
            .any(|m| m.contains("lambda = 0.1 must exceed n(p-1)/2 = 0.5")),
        "{msgs:?}"
    );
    let cfg = parse_waived(text).unwrap();
    assert!(cfg.exploratory);
    assert_eq!(cfg.pairs, vec![(1.5, 0.1)]);
}

#[test]
fn energy_exponent_above_the_admissible_range_is_rejected() {
    // For (n, χ, vmax) = (2, 1, 0.3) the admissible range is (1, n/2 + δ]
    // with δ ≈ 0.0449, so p = 1.9 falls outside.
    let msgs = violations(parse("[functionals]\npairs = [[1.9, 1.0]]\n"));
    assert!(msgs.iter().any(|m| m.contains("(1, n/2 + δ]")), "{msgs:?}");
}

#[test]
fn vanishing_v0_is_waivable_only() {
    let msgs = violations(parse("[init]\nv0 = \"zero\"\n"));
    assert!(msgs[0].contains("v0 ≥ 0, v0 ≢ 0"), "{msgs:?}");
    let cfg = parse_waived("[init]\nv0 = \"zero\"\n").unwrap();
    assert!(cfg.exploratory);
    assert_eq!(cfg.vmax(), 0.0);
    assert!(cfg.delta.is_none());
}

#[test]
fn structural_errors_are_never_waivable() {
    // ε outside (0, 1).
    assert!(matches!(
        parse_waived("[sim]\neps = 2.0\n"),
        Err(CliError::Parse(_))
    ));
    // Unknown dt policy.
    assert!(matches!(
        parse_waived("[sim]\ndt_policy = \"sometimes\"\n"),
        Err(CliError::Parse(_))
    ));
    // Fixed policy without a step.
    assert!(matches!(
        parse_waived("[sim]\ndt_policy = \"fixed\"\n"),
        Err(CliError::Parse(_))
    ));
    // Probe times must increase and stay within (0, T].
    assert!(matches!(
        parse_waived("[probes]\ntimes = [0.2, 0.1]\n"),
        Err(CliError::Parse(_))
    ));
    assert!(matches!(
        parse_waived("[probes]\ntimes = [0.5, 2.0]\n"),
        Err(CliError::Parse(_))
    ));
    // Atom outside the open domain.
    assert!(matches!(
        parse_waived("[init]\natoms = [[1.5, 0.5, 1.0]]\n"),
        Err(CliError::Parse(_))
    ));
    // Sweep list must be strictly decreasing inside (0, 1).
    assert!(matches!(
        parse_waived("[sweep]\neps_list = [1e-2, 1e-1]\n"),
        Err(CliError::Parse(_))
    ));
    // Cauchy time beyond T.
    assert!(matches!(
        parse_waived("[sweep]\nt_cauchy = 3.0\n"),
        Err(CliError::Parse(_))
    ));
    // Misspelled keys are caught rather than silently ignored.
    assert!(matches!(
        parse_waived("[sim]\nxn = 32\n"),
        Err(CliError::Parse(_))
    ));
}

#[test]
fn half_cosine_v0_profile_evaluates_the_formula() {
    let cfg = parse("[init]\nv0 = \"half_cos_x:0.3\"\n").unwrap();
    let g = cfg.sim.grid;
    // A·(1 + cos(πx/Lx))/2 at the first cell centre.
    let x0 = g.x_center(0);
    let expect = 0.3 * (1.0 + (std::f64::consts::PI * x0).cos()) / 2.0;
    assert!((cfg.v0.values[0] - expect).abs() < 1e-15);
    // Monotone decreasing in x, max at the left edge, strictly below 0.3.
    assert!(cfg.vmax() < 0.3);
    assert!(cfg.vmax() > 0.29);
    assert!(cfg.delta.is_some());
}

#[test]
fn csv_v0_roundtrips_and_validates_shape() {
    let dir = std::env::temp_dir().join(format!("consumax_cfg_{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let mut rows = Vec::new();
    for j in 0..4 {
        rows.push(
            (0..4)
                .map(|i| format!("{}", 0.01 * (1 + i + 4 * j) as f64))
                .collect::<Vec<_>>()
                .join(","),
        );
    }
    std::fs::write(dir.join("v0.csv"), rows.join("\n")).unwrap();
    let text = "[sim]\nnx = 4\nny = 4\n[init]\nv0 = \"csv:v0.csv\"\n";
    let cfg = parse_config(text, &dir, false).unwrap();
    assert_eq!(cfg.v0.values.len(), 16);
    assert!((cfg.v0.values[0] - 0.01).abs() < 1e-15);
    assert!((cfg.v0.values[15] - 0.16).abs() < 1e-15);

    // Wrong shape: 4×4 file against an 8×8 grid.
    let text = "[sim]\nnx = 8\nny = 8\n[init]\nv0 = \"csv:v0.csv\"\n";
    assert!(matches!(
        parse_config(text, &dir, false),
        Err(CliError::Parse(_))
    ));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn explicit_probe_list_and_fixed_policy_resolve() {
    let cfg = parse(
        "[sim]\ndt_policy = \"fixed\"\ndt_fixed = 1e-3\nt_final = 0.5\n[probes]\ntimes = [0.1, 0.2, 0.5]\n",
    )
    .unwrap();
    assert_eq!(cfg.probe_times, vec![0.1, 0.2, 0.5]);
    assert!(matches!(cfg.sim.dt_policy, DtPolicy::Fixed(dt) if dt == 1e-3));
}

#[test]
fn verify_section_overrides_simulation_scalars() {
    let cfg = parse("[verify]\nn = 4\nchi = 0.5\nvmax = 0.1\ns_points = 500\np = 2.0\n").unwrap();
    assert_eq!(cfg.verify.n, 4);
    assert_eq!(cfg.verify.chi, 0.5);
    assert_eq!(cfg.verify.vmax, 0.1);
    assert_eq!(cfg.verify.s_points, 500);
    assert_eq!(cfg.verify.p, Some(2.0));
}

#[test]
fn multiple_violations_are_all_reported() {
    // Both the smallness failure and the inadmissible λ must be listed.
    let msgs = violations(parse(
        "[init]\nv0 = \"const:0.5\"\n[functionals]\npairs = [[1.5, 0.1]]\n",
    ));
    assert_eq!(msgs.len(), 2, "{msgs:?}");
}
