//! Regularization oracles: the backward-Euler heat semigroup against an
//! independent explicit integrator, closed-form eigen decay, the semigroup
//! property, and mass-exact mollification.

use consumax_core::grid_domain::{integrate, lp_norm, Field, GridSpec, MeasureSpec};
use consumax_core::regularize::{heat_step, mollify_measure, smooth_v0, HeatSemigroup};
use std::f64::consts::PI;

/// Independent forward-Euler heat integrator with its own reflective-ghost
/// stencil (shares no code with the crate's operators).
fn explicit_heat(f: &Field, tau: f64, dt: f64) -> Field {
    let g = f.grid;
    let steps = (tau / dt).ceil() as usize;
    let dt_eff = tau / steps as f64;
    let (cx, cy) = (dt_eff / (g.hx() * g.hx()), dt_eff / (g.hy() * g.hy()));
    let mut cur = f.values.clone();
    let mut next = cur.clone();
    for _ in 0..steps {
        for j in 0..g.ny {
            for i in 0..g.nx {
                let c = cur[j * g.nx + i];
                let w = if i > 0 { cur[j * g.nx + i - 1] } else { c };
                let e = if i + 1 < g.nx {
                    cur[j * g.nx + i + 1]
                } else {
                    c
                };
                let s = if j > 0 { cur[(j - 1) * g.nx + i] } else { c };
                let n = if j + 1 < g.ny {
                    cur[(j + 1) * g.nx + i]
                } else {
                    c
                };
                next[j * g.nx + i] = c + cx * (e - 2.0 * c + w) + cy * (n - 2.0 * c + s);
            }
        }
        std::mem::swap(&mut cur, &mut next);
    }
    let mut out = Field::zeros(g);
    out.values = cur;
    out
}

fn checkerboard(g: GridSpec) -> Field {
    let mut f = Field::zeros(g);
    for j in 0..g.ny {
        for i in 0..g.nx {
            f.values[j * g.nx + i] = ((i + j) % 2) as f64;
        }
    }
    f
}

#[test]
fn backward_euler_agrees_with_explicit_oracle_on_checkerboard() {
    // Both integrators approximate e^{εΔ} with O(τ) symbol errors of
    // opposite sign; substeps of 2.5e−7 put the mismatch safely below 1e−6
    // even for the checkerboard's high-frequency content.
    let g = GridSpec::new(1.0, 1.0, 16, 16).unwrap();
    let f = checkerboard(g);
    let eps = 0.01;
    let implicit = HeatSemigroup::with_substep_cap(g, 2.5e-7)
        .apply(&f, eps)
        .unwrap();
    let explicit = explicit_heat(&f, eps, 2.5e-7);
    let mut max_diff: f64 = 0.0;
    for i in 0..f.values.len() {
        max_diff = max_diff.max((implicit.values[i] - explicit.values[i]).abs());
    }
    assert!(max_diff <= 1e-6, "integrators disagree by {max_diff:e}");
}

#[test]
fn smooth_v0_checkerboard_postconditions() {
    let g = GridSpec::new(1.0, 1.0, 16, 16).unwrap();
    let v0 = checkerboard(g);
    let sm = smooth_v0(&v0, 0.01).unwrap();
    // Strict smoothing: the resolvent mixes every cell with every other.
    assert!(sm.max() < 1.0);
    assert!(sm.min() > 0.0);
    assert!((integrate(&sm) - integrate(&v0)).abs() <= 1e-11 * integrate(&v0));
}

#[test]
fn smooth_v0_converges_to_identity_as_eps_vanishes() {
    let g = GridSpec::new(1.0, 1.0, 32, 32).unwrap();
    let v0 = Field::from_fn(g, |x, y| {
        0.3 * (1.0 + (PI * x).cos()) / 2.0 + 0.02 * (1.0 + (PI * y).cos())
    });
    let mut dists = Vec::new();
    for eps in [1e-2, 1e-3, 1e-4] {
        let sm = smooth_v0(&v0, eps).unwrap();
        let mut diff = sm.clone();
        for (d, r) in diff.values.iter_mut().zip(&v0.values) {
            *d -= r;
        }
        dists.push(lp_norm(&diff, 1.0));
    }
    assert!(
        dists[1] < dists[0] && dists[2] < dists[1],
        "distances {dists:?}"
    );
}

#[test]
fn heat_step_damps_eigenfunction_by_the_substepped_symbol() {
    // cos(πx/Lx) at cell centers is an exact eigenvector of the discrete
    // Laplacian with μ = (4/hx²)sin²(π/(2nx)); τ = 0.012 exceeds the
    // default substep cap once, so the symbol is squared.
    let g = GridSpec::new(1.0, 1.0, 64, 64).unwrap();
    let f = Field::from_fn(g, |x, _| (PI * x).cos());
    let tau = 0.012;
    let cap = 0.25 * g.hx() * g.hx() * 100.0;
    let substeps = (tau / cap).ceil();
    assert_eq!(substeps, 2.0);
    let sub = tau / substeps;
    let hx = g.hx();
    let mu = 4.0 / (hx * hx) * (PI / (2.0 * g.nx as f64)).sin().powi(2);
    let factor = 1.0 / (1.0 + sub * mu);
    let symbol = factor * factor;
    let out = heat_step(&f, tau).unwrap();
    for i in 0..f.values.len() {
        assert!((out.values[i] - symbol * f.values[i]).abs() <= 1e-11);
    }
}

#[test]
fn heat_step_preserves_integral() {
    let g = GridSpec::new(1.0, 2.0, 32, 48).unwrap();
    let f = Field::from_fn(g, |x, y| 1.0 + (3.0 * x).sin() * (2.0 * y).cos());
    let out = heat_step(&f, 0.05).unwrap();
    let (a, b) = (integrate(&f), integrate(&out));
    assert!((a - b).abs() <= 1e-11 * a.abs());
}

#[test]
fn semigroup_property_with_aligned_substeps() {
    // With the cap at 3/64 the times 3/64, 6/64 and 9/64 tile into
    // identical substeps, so both composition orders perform the same solve
    // sequence and agree bit for bit.
    let g = GridSpec::new(1.0, 1.0, 24, 24).unwrap();
    let f = Field::from_fn(g, |x, y| {
        1.0 + 0.3 * (PI * x).cos() + 0.1 * (2.0 * PI * y).cos()
    });
    let semi = HeatSemigroup::with_substep_cap(g, 3.0 / 64.0);
    let (a, b) = (3.0 / 64.0, 6.0 / 64.0);
    let combined = semi.apply(&f, a + b).unwrap();
    let sequential = semi.apply(&semi.apply(&f, a).unwrap(), b).unwrap();
    assert_eq!(combined.values, sequential.values);
}

#[test]
fn mollify_restores_mass_exactly() {
    let g = GridSpec::new(1.0, 1.0, 48, 48).unwrap();
    let u0 = MeasureSpec::dirac(0.37, 0.68, 2.5).unwrap();
    let f = mollify_measure(&u0, 0.05, g).unwrap();
    // Within one ulp of m after the two-pass multiplicative restore.
    assert!((integrate(&f) - 2.5).abs() <= 1e-15 * 2.5);
    assert!(f.min() >= 0.0);
    assert!(f.max() > 0.0);
}

#[test]
fn mollify_combines_atoms_and_density() {
    let g = GridSpec::new(1.0, 1.0, 32, 32).unwrap();
    let density = Field::constant(g, 0.5);
    let u0 = MeasureSpec::new(vec![(0.5, 0.5, 1.0)], Some(density)).unwrap();
    // Total mass = 1 (atom) + 0.5 (density over unit area).
    let f = mollify_measure(&u0, 0.02, g).unwrap();
    assert!((integrate(&f) - 1.5).abs() <= 1e-15 * 1.5);
}

#[test]
fn mollify_reaches_uniform_equilibrium_for_large_eps() {
    // On a Neumann rectangle the heat flow equilibrates to m/(Lx·Ly); after
    // time 10·Lx² every nonconstant mode is damped far below 1e−8.
    let g = GridSpec::new(1.0, 1.0, 32, 32).unwrap();
    let u0 = MeasureSpec::dirac(0.3, 0.7, 1.0).unwrap();
    let f = mollify_measure(&u0, 10.0, g).unwrap();
    let uniform = 1.0 / (g.lx * g.ly);
    let mut dev: f64 = 0.0;
    for &v in &f.values {
        dev = dev.max((v - uniform).abs());
    }
    assert!(dev < 1e-8, "max deviation {dev:e}");
}

#[test]
fn mollify_preserves_mirror_symmetry() {
    let g = GridSpec::new(1.0, 1.0, 32, 32).unwrap();
    let u0 = MeasureSpec::new(vec![(0.25, 0.5, 1.0), (0.75, 0.5, 1.0)], None).unwrap();
    let f = mollify_measure(&u0, 0.03, g).unwrap();
    let scale = f.max();
    for j in 0..g.ny {
        for i in 0..g.nx {
            let a = f.at(i, j);
            let b = f.at(g.nx - 1 - i, j);
            assert!((a - b).abs() <= 1e-13 * scale, "asymmetry at ({i},{j})");
        }
    }
}
