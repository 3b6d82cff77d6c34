//! Scheme-level structure preservation over many steps: exact mass
//! conservation, positivity, sup-norm monotonicity of v, and well-formed
//! diagnostics series on a measure-initialized run.

use consumax_core::estimate_verifier::select_delta;
use consumax_core::functionals::{PairSpec, PhiParams, SeriesSpec, TestFunction};
use consumax_core::grid_domain::{integrate, Field, GridSpec, MeasureSpec};
use consumax_core::stepper::{run, DtPolicy, ProbeConfig, SimParams, SimState, Stepper};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn smooth_random_nonneg(grid: GridSpec, rng: &mut ChaCha8Rng, floor: f64, amp: f64) -> Field {
    // A few low cosine modes keep the field smooth; the floor keeps it ≥ 0.
    let coef: Vec<f64> = (0..9).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Field::from_fn(grid, |x, y| {
        let mut s = 0.0;
        for k in 0..3 {
            for l in 0..3 {
                s += coef[3 * k + l]
                    * (k as f64 * PI * x / grid.lx).cos()
                    * (l as f64 * PI * y / grid.ly).cos();
            }
        }
        floor + amp * (1.0 + s / 9.0)
    })
}

#[test]
fn multi_step_invariants_on_random_smooth_states() {
    let g = GridSpec::new(1.0, 1.0, 32, 32).unwrap();
    let params = SimParams {
        chi: 1.0,
        n: 2,
        grid: g,
        dt_policy: DtPolicy::Adaptive { sigma: 0.9 },
        t_final: 1.0,
        eps: 0.05,
        dt_max: None,
    };
    let stepper = Stepper::new(params).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(314);
    for _ in 0..3 {
        let u = smooth_random_nonneg(g, &mut rng, 0.1, 0.5);
        let v = smooth_random_nonneg(g, &mut rng, 0.0, 0.15);
        let m0 = integrate(&u);
        let mut s = SimState { t: 0.0, u, v };
        let mut vmax_prev = s.v.max();
        for _ in 0..10 {
            let dt = stepper.cfl_dt(&s);
            s = stepper.step(&s, dt).unwrap();
            assert!((integrate(&s.u) - m0).abs() <= 1e-12 * m0);
            assert!(s.u.min() >= 0.0);
            assert!(s.v.min() >= 0.0);
            let vmax = s.v.max();
            assert!(vmax <= vmax_prev, "‖v‖∞ grew: {vmax} > {vmax_prev}");
            vmax_prev = vmax;
        }
    }
}

#[test]
fn dirac_run_produces_conservative_monotone_series() {
    let g = GridSpec::new(1.0, 1.0, 48, 48).unwrap();
    let params = SimParams {
        chi: 1.0,
        n: 2,
        grid: g,
        dt_policy: DtPolicy::Adaptive { sigma: 0.9 },
        t_final: 0.1,
        eps: 0.05,
        dt_max: None,
    };
    let u0 = MeasureSpec::dirac(0.3, 0.6, 1.0).unwrap();
    let v0 = Field::from_fn(g, |x, _| 0.3 * (1.0 + (PI * x).cos()) / 2.0);
    let delta = select_delta(2, 1.0, v0.max()).unwrap();
    let p = 1.5;
    let probes = ProbeConfig {
        times: vec![1e-3, 1e-2, 0.05, 0.1],
        series: SeriesSpec {
            n: 2,
            pairs: vec![PairSpec {
                phi: PhiParams::for_system(p, 1.0, v0.max(), delta).unwrap(),
                lambda: 0.6,
            }],
            test_functions: vec![
                TestFunction::cosine(0, 0, g.lx, g.ly),
                TestFunction::cosine(1, 0, g.lx, g.ly),
            ],
            vdist_ps: vec![1.0],
        },
    };
    let series = run(&params, &u0, &v0, &probes).unwrap();
    assert_eq!(series.records.len(), 5);

    for r in &series.records {
        // Mass of the measure survives mollification and every step.
        assert!(
            (r.mass - 1.0).abs() <= 1e-10,
            "mass {} at t = {}",
            r.mass,
            r.t
        );
        assert!(r.umax.is_finite() && r.vmax.is_finite());
        for pair in &r.pairs {
            assert!(pair.energy.is_finite() && pair.energy >= 0.0);
            assert!(pair.d1 >= 0.0 && pair.d2 >= 0.0);
            assert!(pair.w >= 0.0 && pair.s_cum >= 0.0);
        }
        // The (0,0) pairing is the mass itself.
        assert_eq!(r.pairings[0], r.mass);
    }
    for w in series.records.windows(2) {
        assert!(w[1].vmax <= w[0].vmax, "‖v‖∞ grew between records");
        assert!(w[1].tx_cum >= w[0].tx_cum, "TX decreased");
        assert!(w[1].pairs[0].s_cum >= w[0].pairs[0].s_cum, "S decreased");
    }
    // Taxis has genuinely acted by the end of the run.
    assert!(series.records.last().unwrap().tx_cum > 0.0);
}

#[test]
fn fixed_dt_run_matches_probe_grid() {
    let g = GridSpec::new(1.0, 1.0, 24, 24).unwrap();
    let params = SimParams {
        chi: 0.5,
        n: 2,
        grid: g,
        dt_policy: DtPolicy::Fixed(1e-3),
        t_final: 0.02,
        eps: 0.05,
        dt_max: None,
    };
    let u0 = MeasureSpec::dirac(0.5, 0.5, 1.0).unwrap();
    let v0 = Field::constant(g, 0.2);
    let probes = ProbeConfig {
        times: vec![0.01, 0.02],
        series: SeriesSpec {
            n: 2,
            pairs: vec![],
            test_functions: vec![],
            vdist_ps: vec![],
        },
    };
    let series = run(&params, &u0, &v0, &probes).unwrap();
    let times: Vec<f64> = series.records.iter().map(|r| r.t).collect();
    assert_eq!(times, vec![0.0, 0.01, 0.02]);
}
