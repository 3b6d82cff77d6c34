//! Property tests for the closed-form scalar estimates: monotonicity of the
//! δ-rule, bisection bracketing, and the pointwise ψ-certification across
//! random admissible parameter tuples.

use consumax_core::estimate_verifier::{
    delta_rhs, select_delta, smallness_threshold, verify_phi_identities, verify_pointwise,
    SmallnessInput,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn delta_rhs_is_strictly_decreasing() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for _ in 0..8 {
        let n = rng.gen_range(2..=4u32);
        let chi = rng.gen_range(0.1..10.0);
        let mut prev = f64::INFINITY;
        for j in 0..1000 {
            // Interior grid of (0,1); endpoints are limits, not samples.
            let delta = (j as f64 + 0.5) / 1000.0;
            let r = delta_rhs(delta, n, chi);
            assert!(r < prev, "R not decreasing at δ = {delta} (n={n}, χ={chi})");
            prev = r;
        }
    }
}

#[test]
fn select_delta_brackets_on_random_inputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200 {
        let n = rng.gen_range(2..=4u32);
        let chi = rng.gen_range(0.1..10.0);
        let threshold = smallness_threshold(n, chi).unwrap();
        let vmax = threshold * rng.gen_range(0.05..0.999);
        let d = select_delta(n, chi, vmax).unwrap();
        assert!(d > 0.0 && d < 1.0);
        // The rule holds at δ and fails just past it  — d sits on the boundary.
        assert!(
            delta_rhs(d, n, chi) >= vmax,
            "rule violated at δ (n={n}, χ={chi}, vmax={vmax})"
        );
        assert!(delta_rhs(d + 1e-9, n, chi) <= vmax, "δ not maximal");
        assert!((vmax - delta_rhs(d, n, chi)).abs() <= 1e-11);
        // Chain inequality exactly as floating-point evaluated.
        let om = 1.0 - d;
        assert!((2.0 + 1.0 / om) * (n as f64 + 2.0 * d) * chi * vmax / 2.0 <= om);
    }
}

#[test]
fn pointwise_certification_on_random_admissible_tuples() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..100 {
        let n = [2u32, 3, 4][rng.gen_range(0..3)];
        let chi = rng.gen_range(0.1..10.0);
        let vmax = 0.9 * smallness_threshold(n, chi).unwrap();
        let delta = select_delta(n, chi, vmax).unwrap();
        // Exercise the whole admissible p-interval, not only its endpoint.
        let p = 1.0 + (n as f64 / 2.0 + delta - 1.0) * rng.gen_range(0.05..1.0f64).max(1e-6);
        let report = verify_pointwise(&SmallnessInput { n, chi, vmax, p }, delta, 2000).unwrap();
        assert!(
            report.pass,
            "ratio {} > 1−δ = {} at s = {} (n={n}, χ={chi}, p={p})",
            report.max_ratio,
            1.0 - delta,
            report.argmax_s
        );
    }
}

#[test]
fn phi_identities_hold_for_random_beta() {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    for _ in 0..20 {
        let beta = rng.gen_range(0.01..3.0);
        assert!(
            verify_phi_identities(beta, 250),
            "identities failed at β = {beta}"
        );
    }
}
