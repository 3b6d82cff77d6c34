//! The estimate ladder: φ and its derivatives, β(p), the energy ∫u^p φ(v),
//! the two dissipation integrals, time-weighted norms, the taxis L¹
//! integral, and continuity moduli at t = 0.
//!
//! The weight is `φ(s) = exp((βs)²)` with `β = β(p) = √(χ(p−1)/(4‖v₀‖_∞))`,
//! whose closed-form derivatives are `φ′(s) = 2β²sφ(s)` and
//! `φ″(s) = 2β²(1+2β²s²)φ(s)`; in particular `φ ≥ 1`, `φ′ ≥ 0` and
//! `φ″ ≥ 2β²` on `s ≥ 0`.

use alloc::vec::Vec;

use crate::error::Error;
use crate::grid_domain::{
    integrate, lp_norm, pair_with_test_function, CompensatedSum, Field, MeasureSpec,
};
use crate::operators::gradient_sq;
use crate::regularize::HeatSemigroup;
use crate::Result;

/// The exponential weight `φ(s) = e^{(βs)²}`.
#[inline]
pub fn phi(s: f64, beta: f64) -> f64 {
    let t = beta * s;
    libm::exp(t * t)
}

/// `φ′(s) = 2β²sφ(s)`.
#[inline]
pub fn phi1(s: f64, beta: f64) -> f64 {
    2.0 * beta * beta * s * phi(s, beta)
}

/// `φ″(s) = 2β²(1 + 2β²s²)φ(s)`.
#[inline]
pub fn phi2(s: f64, beta: f64) -> f64 {
    let b2 = beta * beta;
    2.0 * b2 * (1.0 + 2.0 * b2 * s * s) * phi(s, beta)
}

/// `β(p) = √(χ(p−1)/(4·vmax))`.
pub fn beta_of(p: f64, chi: f64, vmax: f64) -> Result<f64> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::InvalidInput(alloc::format!(
            "beta(p) requires p > 1, got p = {p}"
        )));
    }
    if !(chi > 0.0 && chi.is_finite()) {
        return Err(Error::InvalidInput(alloc::format!(
            "beta(p) requires chi > 0, got chi = {chi}"
        )));
    }
    if !(vmax > 0.0 && vmax.is_finite()) {
        return Err(Error::InvalidInput(alloc::format!(
            "beta(p) requires ‖v0‖∞ > 0, got {vmax}"
        )));
    }
    Ok(libm::sqrt(chi * (p - 1.0) / (4.0 * vmax)))
}

/// The triple (p, β, δ) governing the energy ∫u^p φ(v), plus the sup norm of
/// v₀ that fixes β.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiParams {
    pub p: f64,
    pub beta: f64,
    pub delta: f64,
    pub vmax: f64,
}

impl PhiParams {
    /// Builds parameters for a given system, deriving β from the closed
    /// form. A vanishing `vmax` (only reachable in exploratory runs with
    /// v₀ ≡ 0) degenerates to the unweighted energy `φ ≡ 1` via β = 0.
    pub fn for_system(p: f64, chi: f64, vmax: f64, delta: f64) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::InvalidInput(alloc::format!(
                "energy exponent must satisfy p > 1, got {p}"
            )));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidInput(alloc::format!(
                "delta must lie in (0,1), got {delta}"
            )));
        }
        let beta = if vmax > 0.0 {
            beta_of(p, chi, vmax)?
        } else {
            0.0
        };
        Ok(PhiParams {
            p,
            beta,
            delta,
            vmax,
        })
    }
}

/// Tensor-cosine test function `φ(x,y) = cos(kπx/Lx)·cos(lπy/Ly)`.
///
/// Every member satisfies `∇φ·ν = 0` on the boundary of the rectangle
/// exactly, and the family spans a dense subspace of C⁰(Ω̄). The gradient
/// and Laplacian sup norms have closed forms:
/// `‖∇φ‖_∞ = max(kπ/Lx, lπ/Ly)` and `‖Δφ‖_∞ = (kπ/Lx)² + (lπ/Ly)²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestFunction {
    pub k: u32,
    pub l: u32,
    ax: f64,
    ay: f64,
}

impl TestFunction {
    /// The `(k,l)` cosine mode on a rectangle of extents `(lx, ly)`.
    pub fn cosine(k: u32, l: u32, lx: f64, ly: f64) -> Self {
        TestFunction {
            k,
            l,
            ax: k as f64 * core::f64::consts::PI / lx,
            ay: l as f64 * core::f64::consts::PI / ly,
        }
    }

    /// Pointwise value. The `(0,0)` mode evaluates to exactly 1.
    #[inline]
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        libm::cos(self.ax * x) * libm::cos(self.ay * y)
    }

    /// `‖∇φ‖_∞ = max(kπ/Lx, lπ/Ly)`.
    pub fn grad_inf_norm(&self) -> f64 {
        self.ax.max(self.ay)
    }

    /// `‖Δφ‖_∞ = (kπ/Lx)² + (lπ/Ly)²`.
    pub fn laplacian_inf_norm(&self) -> f64 {
        self.ax * self.ax + self.ay * self.ay
    }
}

/// Energy `E_p = ∫_Ω u^p φ(v)`; requires `u ≥ 0`.
pub fn energy(u: &Field, v: &Field, pp: &PhiParams) -> f64 {
    let mut s = CompensatedSum::new();
    for (uu, vv) in u.values.iter().zip(&v.values) {
        s.add(libm::pow(*uu, pp.p) * phi(*vv, pp.beta));
    }
    s.value() * u.grid.cell_area()
}

/// The two dissipation integrals of the energy identity, without their
/// δ-dependent prefactors (the caller assembles the inequality):
/// `D1 = ∫ φ(v)·|∇u^{p/2}|²` and `D2 = ∫ u^p·φ″(v)·|∇v|²`.
pub fn dissipation(u: &Field, v: &Field, pp: &PhiParams) -> (f64, f64) {
    let half_p = 0.5 * pp.p;
    let mut w = u.clone();
    for x in &mut w.values {
        *x = libm::pow(*x, half_p);
    }
    let gw = gradient_sq(&w);
    let gv = gradient_sq(v);
    let mut d1 = CompensatedSum::new();
    let mut d2 = CompensatedSum::new();
    for idx in 0..u.values.len() {
        let vv = v.values[idx];
        d1.add(phi(vv, pp.beta) * gw.values[idx]);
        d2.add(libm::pow(u.values[idx], pp.p) * phi2(vv, pp.beta) * gv.values[idx]);
    }
    let a = u.grid.cell_area();
    (d1.value() * a, d2.value() * a)
}

/// Time-weighted norm `t^λ ∫_Ω u^p`, defined for `λ > n(p−1)/2` (below that
/// threshold the bound it feeds does not hold, so the exponent is rejected).
pub fn time_weighted(u: &Field, t: f64, p: f64, lambda: f64, n: u32) -> Result<f64> {
    let lambda_min = n as f64 * (p - 1.0) / 2.0;
    if !(lambda > lambda_min) {
        return Err(Error::InvalidInput(alloc::format!(
            "time weight exponent lambda = {lambda} must exceed n(p-1)/2 = {lambda_min}"
        )));
    }
    if !(t >= 0.0) {
        return Err(Error::InvalidInput(alloc::format!(
            "time must be nonnegative, got {t}"
        )));
    }
    let mut s = CompensatedSum::new();
    for &uu in &u.values {
        s.add(libm::pow(uu, p));
    }
    Ok(libm::pow(t, lambda) * s.value() * u.grid.cell_area())
}

/// Instantaneous taxis integrand `‖u∇v‖_{L¹} = ∫ u·|∇v|`; requires `u ≥ 0`.
pub fn taxis_l1(u: &Field, v: &Field) -> f64 {
    let gv = gradient_sq(v);
    let mut s = CompensatedSum::new();
    for (uu, gg) in u.values.iter().zip(&gv.values) {
        s.add(*uu * libm::sqrt(*gg));
    }
    s.value() * u.grid.cell_area()
}

/// One (p, λ) diagnostics pair: the φ-parameters of the energy and the time
/// weight used for `W` and `S`.
#[derive(Debug, Clone, Copy)]
pub struct PairSpec {
    pub phi: PhiParams,
    pub lambda: f64,
}

/// What a diagnostics series records at each probe.
#[derive(Debug, Clone)]
pub struct SeriesSpec {
    /// Spatial dimension entering the λ-admissibility rule.
    pub n: u32,
    pub pairs: Vec<PairSpec>,
    pub test_functions: Vec<TestFunction>,
    /// Exponents for the `‖v(t) − v(0)‖_{L^p}` columns.
    pub vdist_ps: Vec<f64>,
}

/// Per-pair sample at one probe time.
#[derive(Debug, Clone, Copy)]
pub struct PairSample {
    /// `E_p(t) = ∫u^p φ(v)`.
    pub energy: f64,
    /// `D1(t) = ∫φ(v)|∇u^{p/2}|²`.
    pub d1: f64,
    /// `D2(t) = ∫u^p φ″(v)|∇v|²`.
    pub d2: f64,
    /// `W(t) = t^λ ∫u^p`.
    pub w: f64,
    /// Integrand `t^λ ∫u^p|∇v|²` of the cumulative `S`.
    pub s_instant: f64,
    /// `S(t) = ∫₀ᵗ s^λ ∫u^p|∇v|² ds` (trapezoid over probes).
    pub s_cum: f64,
}

/// All monitored quantities at one probe time.
#[derive(Debug, Clone)]
pub struct ProbeRecord {
    pub t: f64,
    /// `∫u` — constant in time by construction.
    pub mass: f64,
    /// `‖v(t)‖_∞` — nonincreasing in time.
    pub vmax: f64,
    /// `‖u(t)‖_∞` (diagnostic of instantaneous smoothing).
    pub umax: f64,
    pub pairs: Vec<PairSample>,
    /// Integrand `‖u∇v‖_{L¹}` of the cumulative taxis integral.
    pub tx_instant: f64,
    /// `TX(t) = ∫₀ᵗ ‖u∇v‖_{L¹} ds` (trapezoid over probes).
    pub tx_cum: f64,
    /// `⟨u(t), φ_kl⟩` per configured test function.
    pub pairings: Vec<f64>,
    /// `‖v(t) − v(0)‖_{L^p}` per configured exponent (against the run's own
    /// regularized initial chemical field).
    pub vdists: Vec<f64>,
}

/// Time series of all monitored functionals for one run.
///
/// Cumulative columns use the trapezoid rule over probe times and accumulate
/// with a plain running sum, so they are nondecreasing exactly (each
/// increment is a product of nonnegative factors).
#[derive(Debug, Clone)]
pub struct DiagnosticsSeries {
    pub spec: SeriesSpec,
    pub records: Vec<ProbeRecord>,
}

impl DiagnosticsSeries {
    pub fn new(spec: SeriesSpec) -> Result<Self> {
        // Only structural sanity here: t^λ needs λ > 0 for W(0) = 0 to hold.
        // The admissibility line λ > n(p−1)/2 is a hypothesis of the time-decay
        // bound, checked by `time_weighted` and the experiment configuration,
        // not a prerequisite for recording the column.
        for pair in &spec.pairs {
            if !(pair.lambda > 0.0 && pair.lambda.is_finite()) {
                return Err(Error::InvalidInput(alloc::format!(
                    "time weight exponent lambda = {} must be positive and finite",
                    pair.lambda
                )));
            }
        }
        Ok(DiagnosticsSeries {
            spec,
            records: Vec::new(),
        })
    }

    /// Appends the record for state `(t, u, v)`; `v_init` is the regularized
    /// initial chemical field the `vdist` columns are measured against.
    pub fn record(&mut self, t: f64, u: &Field, v: &Field, v_init: &Field) -> Result<()> {
        let gv = gradient_sq(v);
        let mut pairs = Vec::with_capacity(self.spec.pairs.len());
        for (pi, pair) in self.spec.pairs.iter().enumerate() {
            let pp = &pair.phi;
            let (d1, d2) = dissipation(u, v, pp);
            let e = energy(u, v, pp);
            // ∫u^p and the S-integrand share one pass over u^p.
            let mut up_sum = CompensatedSum::new();
            let mut s_sum = CompensatedSum::new();
            for idx in 0..u.values.len() {
                let up = libm::pow(u.values[idx], pp.p);
                up_sum.add(up);
                s_sum.add(up * gv.values[idx]);
            }
            let area = u.grid.cell_area();
            let t_lam = libm::pow(t, pair.lambda);
            let w = t_lam * up_sum.value() * area;
            let s_instant = t_lam * s_sum.value() * area;
            let s_cum = match self.records.last() {
                None => 0.0,
                Some(prev) => {
                    let dt = t - prev.t;
                    prev.pairs[pi].s_cum + 0.5 * (prev.pairs[pi].s_instant + s_instant) * dt
                }
            };
            pairs.push(PairSample {
                energy: e,
                d1,
                d2,
                w,
                s_instant,
                s_cum,
            });
        }

        let tx_instant = taxis_l1(u, v);
        let tx_cum = match self.records.last() {
            None => 0.0,
            Some(prev) => prev.tx_cum + 0.5 * (prev.tx_instant + tx_instant) * (t - prev.t),
        };

        let pairings = self
            .spec
            .test_functions
            .iter()
            .map(|tf| pair_with_test_function(u, tf))
            .collect();

        let mut diff = v.clone();
        for (d, r) in diff.values.iter_mut().zip(&v_init.values) {
            *d -= r;
        }
        let vdists = self
            .spec
            .vdist_ps
            .iter()
            .map(|&p| lp_norm(&diff, p))
            .collect();

        let rec = ProbeRecord {
            t,
            mass: integrate(u),
            vmax: v.max(),
            umax: u.max(),
            pairs,
            tx_instant,
            tx_cum,
            pairings,
            vdists,
        };
        if !rec.mass.is_finite() || !rec.vmax.is_finite() || !rec.umax.is_finite() {
            return Err(Error::InvariantViolated {
                what: alloc::format!("non-finite diagnostics at t = {t}"),
                value: rec.mass,
            });
        }
        self.records.push(rec);
        Ok(())
    }
}

/// One probe row of a continuity report.
#[derive(Debug, Clone)]
pub struct ContinuityProbe {
    pub t: f64,
    /// Cumulative taxis integral TX(t).
    pub tx: f64,
    /// Per test function: measured gap `|⟨u(t),φ⟩ − ⟨u(0),φ⟩|` and the bound
    /// `m‖Δφ‖_∞·t + χ·TX(t)·‖∇φ‖_∞`.
    pub pair_gaps: Vec<(f64, f64)>,
    /// Measured `‖v(t) − v(0)‖_{L¹}` and the bound
    /// `‖v₀ − e^{tΔ}v₀‖_{L¹} + m‖v₀‖_∞·t`, when the series tracks L¹.
    pub v_l1: Option<(f64, f64)>,
}

/// Continuity moduli at t = 0 with the explicit bounds from the a priori
/// estimates, plus the fitted power law `TX(t) ≈ C·t^α`.
#[derive(Debug, Clone)]
pub struct ContinuityReport {
    pub probes: Vec<ContinuityProbe>,
    pub alpha: Option<f64>,
    pub c_fit: Option<f64>,
}

/// Least-squares fit of `ln y = ln c + α ln t` over the given samples.
fn fit_power_law(samples: &[(f64, f64)]) -> Option<(f64, f64)> {
    if samples.len() < 2 {
        return None;
    }
    let n = samples.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(t, y) in samples {
        let x = libm::log(t);
        let ly = libm::log(y);
        sx += x;
        sy += ly;
        sxx += x * x;
        sxy += x * ly;
    }
    let denom = n * sxx - sx * sx;
    if denom == 0.0 {
        return None;
    }
    let alpha = (n * sxy - sx * sy) / denom;
    let c = libm::exp((sy - alpha * sx) / n);
    Some((c, alpha))
}

/// Compares the measured approach to the initial data against the closed
/// bounds: for each test function, the pairing gap is bounded by
/// `m‖Δφ‖_∞·t + χ·TX(t)·‖∇φ‖_∞` (the measured TX standing in for `Kt^α`);
/// for the chemical field, `‖v(t)−v(0)‖_{L¹}` is bounded by
/// `‖v₀ − e^{tΔ}v₀‖_{L¹} + m‖v₀‖_∞·t`. Gaps are measured against the first
/// record of the series (the regularized data the run actually started
/// from), which makes both sides vanish at t = 0; the heat-deviation term is
/// evaluated on the original v₀, which dominates the regularized deviation
/// because the smoothing semigroup commutes with the heat flow and contracts
/// L¹.
///
/// The fitted exponent uses probes with `TX(t) > 1e−14` only; `alpha` is
/// `None` when fewer than two probes qualify (e.g. v₀ ≡ 0).
pub fn continuity_moduli(
    series: &DiagnosticsSeries,
    u0: &MeasureSpec,
    v0: &Field,
    chi: f64,
) -> Result<ContinuityReport> {
    let first = series.records.first().ok_or_else(|| {
        Error::InvalidInput(alloc::string::String::from(
            "continuity moduli need at least the initial record",
        ))
    })?;
    let m = u0.total_mass();
    let vmax0 = v0.max();
    let l1_idx = series
        .spec
        .vdist_ps
        .iter()
        .position(|&p| libm::fabs(p - 1.0) < 1e-12);
    let semigroup = HeatSemigroup::new(v0.grid);

    let mut probes = Vec::with_capacity(series.records.len());
    for rec in &series.records {
        let pair_gaps = series
            .spec
            .test_functions
            .iter()
            .enumerate()
            .map(|(i, tf)| {
                let gap = libm::fabs(rec.pairings[i] - first.pairings[i]);
                let bound =
                    m * tf.laplacian_inf_norm() * rec.t + chi * rec.tx_cum * tf.grad_inf_norm();
                (gap, bound)
            })
            .collect();
        let v_l1 = match l1_idx {
            None => None,
            Some(idx) => {
                if rec.t == 0.0 {
                    Some((rec.vdists[idx], 0.0))
                } else {
                    let heated = semigroup.apply(v0, rec.t)?;
                    let mut diff = v0.clone();
                    for (d, h) in diff.values.iter_mut().zip(&heated.values) {
                        *d -= h;
                    }
                    let bound = lp_norm(&diff, 1.0) + m * vmax0 * rec.t;
                    Some((rec.vdists[idx], bound))
                }
            }
        };
        probes.push(ContinuityProbe {
            t: rec.t,
            tx: rec.tx_cum,
            pair_gaps,
            v_l1,
        });
    }

    let samples: Vec<(f64, f64)> = series
        .records
        .iter()
        .filter(|r| r.t > 0.0 && r.tx_cum > 1e-14)
        .map(|r| (r.t, r.tx_cum))
        .collect();
    let fit = fit_power_law(&samples);
    Ok(ContinuityReport {
        probes,
        alpha: fit.map(|f| f.1),
        c_fit: fit.map(|f| f.0),
    })
}
