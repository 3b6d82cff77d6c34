//! Exact certification of the closed-form scalar inequalities behind the
//! energy method: the smallness threshold `‖v₀‖_∞ < 2/(3nχ)`, the δ-selection
//! rule, and the pointwise ψ-estimate
//!
//! ```text
//!   ψ₁ + ψ₂ + ψ₃ ≤ (1−δ)·(1/p)·φ″   on 0 ≤ s ≤ ‖v₀‖_∞,
//! ```
//!
//! with `ψ₁ = 2φ′²/((p−1)(1−δ)φ)`, `ψ₂ = (χ²(p−1)/2)φ`, `ψ₃ = χφ′`. These
//! are scalar facts independent of any PDE run; this module checks them
//! directly on dense s-grids.

use crate::error::Error;
use crate::functionals::{beta_of, phi, phi1, phi2};
use crate::Result;

/// Slack admitted when comparing the grid maximum of the ψ-ratio against
/// 1−δ: the ratio is evaluated in a handful of floating-point operations, so
/// anything beyond a few ulps of headroom signals a genuine violation.
pub const POINTWISE_SLACK: f64 = 1e-12;

/// Bisection stops when the bracket is this narrow; one order tighter than
/// the 1e−12 placement tolerance promised to callers.
const BISECT_WIDTH: f64 = 1e-13;

/// The returned δ backs off from the feasible endpoint by this much, so the
/// chain inequality holds with real margin rather than at a rounding edge.
const DELTA_BACKOFF: f64 = 5e-13;

/// Parameter tuple the scalar estimates are stated for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmallnessInput {
    /// Spatial dimension, n ≥ 2.
    pub n: u32,
    /// Chemotactic sensitivity χ > 0.
    pub chi: f64,
    /// ‖v₀‖_∞ > 0.
    pub vmax: f64,
    /// Energy exponent p > 1.
    pub p: f64,
}

/// Outcome of the pointwise ψ-estimate check on an s-grid.
#[derive(Debug, Clone, Copy)]
pub struct PointwiseReport {
    pub delta: f64,
    /// max over the grid of (ψ₁+ψ₂+ψ₃)/((1/p)φ″).
    pub max_ratio: f64,
    /// Grid point attaining the maximum.
    pub argmax_s: f64,
    /// (1−δ) − max_ratio.
    pub margin: f64,
    /// max_ratio ≤ (1−δ) + POINTWISE_SLACK.
    pub pass: bool,
}

/// The smallness threshold `2/(3nχ)`: the energy machinery closes exactly
/// when `0 < ‖v₀‖_∞` stays strictly below this value.
pub fn smallness_threshold(n: u32, chi: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidInput(alloc::format!(
            "the estimates require spatial dimension n ≥ 2, got n = {n}"
        )));
    }
    if !(chi > 0.0 && chi.is_finite()) {
        return Err(Error::InvalidInput(alloc::format!(
            "chemotactic sensitivity must satisfy chi > 0, got {chi}"
        )));
    }
    Ok(2.0 / (3.0 * n as f64 * chi))
}

/// Right-hand side of the δ-rule,
/// `R(δ) = 2(1−δ) / ((2 + 1/(1−δ))·(n+2δ)·χ)`,
/// strictly decreasing on (0,1) with `R(0⁺) = 2/(3nχ)` and `R(1⁻) = 0`.
pub fn delta_rhs(delta: f64, n: u32, chi: f64) -> f64 {
    let om = 1.0 - delta;
    2.0 * om / ((2.0 + 1.0 / om) * (n as f64 + 2.0 * delta) * chi)
}

/// The chain form of the same rule: δ is admissible iff
/// `(2 + 1/(1−δ))·(n+2δ)·χ·vmax/2 ≤ 1−δ`. Running the bisection on this
/// predicate (rather than on `R(δ) ≥ vmax`, its algebraic rearrangement)
/// makes the chain inequality hold for the selected δ exactly as evaluated
/// in floating point, not merely up to rounding of a rearranged expression.
fn chain_holds(delta: f64, n: u32, chi: f64, vmax: f64) -> bool {
    let om = 1.0 - delta;
    (2.0 + 1.0 / om) * (n as f64 + 2.0 * delta) * chi * vmax / 2.0 <= om
}

/// Largest δ ∈ (0,1) with `vmax ≤ R(δ)`, located by bisection to absolute
/// tolerance 1e−12. Maximal δ gives the strongest dissipation prefactors
/// downstream. Fails with a smallness error when `vmax ≥ 2/(3nχ)`, because
/// `R(0⁺)` equals the threshold and R decreases.
pub fn select_delta(n: u32, chi: f64, vmax: f64) -> Result<f64> {
    let threshold = smallness_threshold(n, chi)?;
    if !(vmax > 0.0 && vmax.is_finite()) {
        return Err(Error::InvalidInput(alloc::format!(
            "‖v0‖∞ must be positive, got {vmax}"
        )));
    }
    if vmax >= threshold || !chain_holds(0.0, n, chi, vmax) {
        return Err(Error::SmallnessViolated { vmax, threshold });
    }
    // Invariant: chain_holds(lo), !chain_holds(hi). At δ→1⁻ the factor
    // 1/(1−δ) blows up, so hi = 1 − 1e−12 always fails for vmax > 0.
    let mut lo = 0.0_f64;
    let mut hi = 1.0 - 1e-12;
    while hi - lo > BISECT_WIDTH {
        let mid = 0.5 * (lo + hi);
        if chain_holds(mid, n, chi, vmax) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut delta = lo - DELTA_BACKOFF;
    if delta <= 0.0 {
        // vmax sits within ~1e−12 of the threshold; no positive δ with
        // margin remains, so treat it as a smallness failure.
        if lo > 0.0 {
            delta = lo;
        } else {
            return Err(Error::SmallnessViolated { vmax, threshold });
        }
    }
    debug_assert!(chain_holds(delta, n, chi, vmax));
    Ok(delta)
}

/// The ratio `r(s) = (ψ₁(s)+ψ₂(s)+ψ₃(s)) / ((1/p)·φ″(s))` at one point, with
/// β supplied by the caller (normally `beta_of(p, χ, vmax)`).
pub fn psi_ratio(input: &SmallnessInput, delta: f64, beta: f64, s: f64) -> f64 {
    let p = input.p;
    let chi = input.chi;
    let f = phi(s, beta);
    let f1 = phi1(s, beta);
    let f2 = phi2(s, beta);
    let psi1 = 2.0 * f1 * f1 / ((p - 1.0) * (1.0 - delta) * f);
    let psi2 = chi * chi * (p - 1.0) / 2.0 * f;
    let psi3 = chi * f1;
    (psi1 + psi2 + psi3) / (f2 / p)
}

/// Certifies `max_{0 ≤ s ≤ vmax} r(s) ≤ (1−δ) + POINTWISE_SLACK` on a
/// uniform grid of `s_points` points including both endpoints.
pub fn verify_pointwise(
    input: &SmallnessInput,
    delta: f64,
    s_points: usize,
) -> Result<PointwiseReport> {
    if s_points < 100 {
        return Err(Error::InvalidInput(alloc::format!(
            "the s-grid needs at least 100 points to resolve the ratio, got {s_points}"
        )));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidInput(alloc::format!(
            "delta must lie in (0,1), got {delta}"
        )));
    }
    let p_hi = input.n as f64 / 2.0 + delta;
    if !(input.p > 1.0 && input.p <= p_hi) {
        return Err(Error::InvalidInput(alloc::format!(
            "the pointwise estimate holds for all p ∈ (1, n/2 + δ] = (1, {p_hi}], got p = {}",
            input.p
        )));
    }
    let beta = beta_of(input.p, input.chi, input.vmax)?;
    let mut max_ratio = f64::NEG_INFINITY;
    let mut argmax_s = 0.0;
    let denom = (s_points - 1) as f64;
    for j in 0..s_points {
        let s = input.vmax * j as f64 / denom;
        let r = psi_ratio(input, delta, beta, s);
        if r > max_ratio {
            max_ratio = r;
            argmax_s = s;
        }
    }
    let bound = 1.0 - delta;
    Ok(PointwiseReport {
        delta,
        max_ratio,
        argmax_s,
        margin: bound - max_ratio,
        pass: max_ratio <= bound + POINTWISE_SLACK,
    })
}

/// Checks the closed forms `φ′ = 2β²sφ` and `φ″ = 2β²(1+2β²s²)φ` against
/// centered finite differences at `s_points` locations on [0, 1], step
/// `1e−6·(1+s)`, mixed tolerance `|fd − closed| ≤ 1e−6·(1 + |closed|)`. The
/// second derivative differentiates the φ′ closed form (a second difference
/// of φ itself loses too many digits to cancellation at this step size).
pub fn verify_phi_identities(beta: f64, s_points: usize) -> bool {
    let denom = (s_points.max(2) - 1) as f64;
    for j in 0..s_points.max(2) {
        let s = j as f64 / denom;
        let h = 1e-6 * (1.0 + s);
        let fd1 = (phi(s + h, beta) - phi(s - h, beta)) / (2.0 * h);
        if libm::fabs(fd1 - phi1(s, beta)) > 1e-6 * (1.0 + libm::fabs(phi1(s, beta))) {
            return false;
        }
        let fd2 = (phi1(s + h, beta) - phi1(s - h, beta)) / (2.0 * h);
        if libm::fabs(fd2 - phi2(s, beta)) > 1e-6 * (1.0 + libm::fabs(phi2(s, beta))) {
            return false;
        }
    }
    true
}
