//! Closed-form equilibration bounds, the harmonic-sum lemma, timescales, and
//! certification of measured averages against the bounds.
//!
//! The bound on the deviation is tight in the long-time limit: for a qubit
//! with an equal superposition and `A = sigma_x` it holds with equality. Below
//! the bounds, a state that equilibrates only after an arbitrarily long delay
//! (a system carrying a countdown timer) shows that no bound depending only on
//! `d_eff` and the gap statistics can be much stronger; that construction is
//! not implemented here.

use crate::distinguish::{measurement_averages, subsystem_averages, MeasurementSet};
use crate::dynamics::deviation_exact_grid;
use crate::error::{Error, Result};
use crate::numerics::{operator_norm, ComplexMatrix};
use crate::quantum_state::{effective_dimension, populations, State};
use crate::spectral::{build_gaps, GapSet, Hamiltonian, Spectrum};
use crate::tolerance::tolerances;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;

fn positive(name: &'static str, x: f64) -> Result<()> {
    if x > 0.0 {
        Ok(())
    } else {
        Err(Error::NonPositiveInput(name))
    }
}

fn non_negative(name: &'static str, x: f64) -> Result<()> {
    if x >= 0.0 {
        Ok(())
    } else {
        Err(Error::NonPositiveInput(name))
    }
}

/// `1 + 8 log2(d_E) / (eps T)`; `T = inf` gives 1.
pub fn finite_time_factor(d_e: usize, eps: f64, t: f64) -> Result<f64> {
    positive("eps", eps)?;
    positive("T", t)?;
    if d_e == 0 {
        return Err(Error::NonPositiveInput("d_E"));
    }
    Ok(1.0 + 8.0 * (d_e as f64).log2() / (eps * t))
}

/// `N(eps) |A|^2 / d_eff (1 + 8 log2 d_E / (eps T))`, and 0 for `d_E = 1`.
pub fn theorem1_bound(norm_a: f64, d_eff: f64, n_eps: usize, d_e: usize, eps: f64, t: f64) -> Result<f64> {
    non_negative("|A|", norm_a)?;
    positive("d_eff", d_eff)?;
    let factor = finite_time_factor(d_e, eps, t)?;
    if d_e == 1 {
        return Ok(0.0);
    }
    Ok(n_eps as f64 * norm_a * norm_a / d_eff * factor)
}

/// `S(M) / (4 sqrt(d_eff)) sqrt(N(eps) (1 + 8 log2 d_E / (eps T)))`.
pub fn theorem2_bound(s_m: usize, d_eff: f64, n_eps: usize, d_e: usize, eps: f64, t: f64) -> Result<f64> {
    positive("d_eff", d_eff)?;
    let factor = finite_time_factor(d_e, eps, t)?;
    if d_e == 1 {
        return Ok(0.0);
    }
    Ok(s_m as f64 / (4.0 * d_eff.sqrt()) * (n_eps as f64 * factor).sqrt())
}

/// `1/2 sqrt(d_S^2 N(eps) / d_eff (1 + 8 log2 d_E / (eps T)))`.
pub fn theorem3_bound(d_s: usize, d_eff: f64, n_eps: usize, d_e: usize, eps: f64, t: f64) -> Result<f64> {
    positive("d_S", d_s as f64)?;
    positive("d_eff", d_eff)?;
    let factor = finite_time_factor(d_e, eps, t)?;
    if d_e == 1 {
        return Ok(0.0);
    }
    let ds = d_s as f64;
    Ok(0.5 * (ds * ds * n_eps as f64 / d_eff * factor).sqrt())
}

/// `S(M)/4 sqrt(N(eps) |M~| / d_eff)`, the bound on distinguishability from
/// the window-averaged state.
pub fn temporary_equilibration_bound(s_m: usize, d_eff: f64, n_eps: usize, m_tilde_norm: f64) -> Result<f64> {
    positive("d_eff", d_eff)?;
    non_negative("|M~|", m_tilde_norm)?;
    Ok(s_m as f64 / 4.0 * (n_eps as f64 * m_tilde_norm / d_eff).sqrt())
}

/// Outcome of the harmonic-sum lemma at one `d_E`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HarmonicLemma {
    pub d_e: usize,
    /// `sum_{n=1}^{d_E(d_E-1)/2} 1/(n - 1/2)`.
    pub sum: f64,
    /// `2 + ln(d_E(d_E-1)/2)`.
    pub intermediate: f64,
    /// `2 log2 d_E`.
    pub cap: f64,
}

fn le_ulps(a: f64, b: f64) -> bool {
    a <= b + 4.0 * f64::EPSILON * b.abs()
}

impl HarmonicLemma {
    pub fn sum_below_cap(&self) -> bool {
        le_ulps(self.sum, self.cap)
    }

    pub fn sum_below_intermediate(&self) -> bool {
        le_ulps(self.sum, self.intermediate)
    }

    pub fn intermediate_below_cap(&self) -> bool {
        le_ulps(self.intermediate, self.cap)
    }

    pub fn holds(&self) -> bool {
        self.sum_below_cap() && self.sum_below_intermediate() && self.intermediate_below_cap()
    }
}

/// Compensated running sum of `1/(n - 1/2)`.
#[derive(Default)]
struct HarmonicAccumulator {
    n: u64,
    sum: f64,
    carry: f64,
}

impl HarmonicAccumulator {
    fn extend_to(&mut self, terms: u64) {
        while self.n < terms {
            self.n += 1;
            let x = 1.0 / (self.n as f64 - 0.5);
            let t = self.sum + x;
            if self.sum.abs() >= x.abs() {
                self.carry += (self.sum - t) + x;
            } else {
                self.carry += (x - t) + self.sum;
            }
            self.sum = t;
        }
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

fn lemma_at(d_e: usize, acc: &HarmonicAccumulator) -> HarmonicLemma {
    let pairs = (d_e * (d_e - 1) / 2) as f64;
    HarmonicLemma { d_e, sum: acc.value(), intermediate: 2.0 + pairs.ln(), cap: 2.0 * (d_e as f64).log2() }
}

pub fn harmonic_sum_lemma(d_e: usize) -> Result<HarmonicLemma> {
    if d_e < 2 {
        return Err(Error::DomainTooSmall(d_e));
    }
    let mut acc = HarmonicAccumulator::default();
    acc.extend_to((d_e * (d_e - 1) / 2) as u64);
    Ok(lemma_at(d_e, &acc))
}

/// The lemma for every `d_E` in `2..=max`, sharing one running sum.
pub fn harmonic_sum_lemma_range(max: usize) -> Result<Vec<HarmonicLemma>> {
    if max < 2 {
        return Err(Error::DomainTooSmall(max));
    }
    let mut acc = HarmonicAccumulator::default();
    Ok((2..=max)
        .map(|d| {
            acc.extend_to((d * (d - 1) / 2) as u64);
            lemma_at(d, &acc)
        })
        .collect())
}

/// `T* = 8 log2 d_E / eps`, where the finite-time factor of the deviation
/// bound drops to 2. The order-of-magnitude form `log2 d_E / eps` is
/// [`equilibration_timescale_order`]; the two differ by the constant 8.
pub fn equilibration_timescale(d_e: usize, eps: f64) -> Result<f64> {
    Ok(8.0 * equilibration_timescale_order(d_e, eps)?)
}

/// `log2 d_E / eps`.
pub fn equilibration_timescale_order(d_e: usize, eps: f64) -> Result<f64> {
    positive("eps", eps)?;
    if d_e < 2 {
        return Err(Error::NonPositiveInput("log2 d_E"));
    }
    Ok((d_e as f64).log2() / eps)
}

/// `T*` with `eps = eta dE / d_E`: `8 d_E log2 d_E / (eta dE)`.
pub fn heuristic_timescale(d_e: usize, eta: f64, energy_spread: f64) -> Result<f64> {
    positive("eta", eta)?;
    positive("energy spread", energy_spread)?;
    equilibration_timescale(d_e, eta * energy_spread / d_e as f64)
}

/// One bound evaluation, optionally against a measured value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub bound_value: f64,
    pub components: BTreeMap<String, f64>,
    pub measured_value: Option<f64>,
    pub satisfied: bool,
    /// `bound - measured`; the bound itself when nothing was measured.
    pub slack: f64,
    /// A distance-type bound above 1, which carries no information.
    pub vacuous: bool,
}

impl BoundReport {
    pub fn new(
        bound_value: f64,
        components: BTreeMap<String, f64>,
        measured_value: Option<f64>,
        distance: bool,
    ) -> Self {
        let slack = bound_value - measured_value.unwrap_or(0.0);
        let satisfied = match measured_value {
            Some(m) => m <= bound_value + tolerances().bound_slack,
            None => true,
        };
        Self { bound_value, components, measured_value, satisfied, slack, vacuous: distance && bound_value > 1.0 }
    }
}

/// Whether appending a non-interacting ancilla can tighten the bounds:
/// `d_eff` may grow by at most `k`, while `D_G` grows by at least `k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AncillaReport {
    /// Distinct ancilla energies.
    pub k: usize,
    pub d_eff_system: f64,
    pub d_eff_joint: f64,
    pub d_g_system: usize,
    pub d_g_joint: usize,
    pub d_eff_ratio: f64,
    pub d_g_ratio: f64,
    pub d_eff_ok: bool,
    pub d_g_ok: bool,
    /// `D_G / d_eff` did not shrink, so the infinite-time subsystem bound is
    /// no tighter for the composite. Holds even when coinciding joint energies
    /// make `d_g_ok` fail.
    pub bound_not_improved: bool,
}

fn expanded(s: &Spectrum) -> Vec<f64> {
    s.energies().iter().zip(s.multiplicities()).flat_map(|(&e, &m)| std::iter::repeat_n(e, m)).collect()
}

/// Compares the joint system+ancilla description of `psi_joint` (system factor
/// first, both Hamiltonians diagonal in the product basis) with the reduced
/// system state under the system Hamiltonian alone.
pub fn ancilla_tradeoff_check(h_system: &Spectrum, h_ancilla: &Spectrum, psi_joint: &State) -> Result<AncillaReport> {
    let (es, ea) = (expanded(h_system), expanded(h_ancilla));
    let dims = (es.len(), ea.len());
    if psi_joint.dim() != dims.0 * dims.1 {
        return Err(Error::DimensionMismatch { expected: dims.0 * dims.1, got: psi_joint.dim() });
    }
    if h_system.d_e() < 2 {
        return Err(Error::DomainTooSmall(h_system.d_e()));
    }
    let joint: Vec<f64> = es.iter().flat_map(|a| ea.iter().map(move |b| a + b)).collect();
    let hj = Hamiltonian::diagonal(&joint)?;
    let hs = Hamiltonian::diagonal(&es)?;
    let reduced: State = psi_joint.density().partial_trace(dims, crate::numerics::Subsystem::First)?.into();
    let d_eff_system = effective_dimension(&populations(&reduced, &hs)?);
    let d_eff_joint = effective_dimension(&populations(psi_joint, &hj)?);
    let d_g_system = build_gaps(hs.spectrum()).max_gap_degeneracy()?;
    let d_g_joint = build_gaps(hj.spectrum()).max_gap_degeneracy()?;
    let k = h_ancilla.d_e();
    let d_eff_ratio = d_eff_joint / d_eff_system;
    let d_g_ratio = d_g_joint as f64 / d_g_system as f64;
    let slack = tolerances().bound_slack;
    Ok(AncillaReport {
        k,
        d_eff_system,
        d_eff_joint,
        d_g_system,
        d_g_joint,
        d_eff_ratio,
        d_g_ratio,
        d_eff_ok: d_eff_ratio <= k as f64 + slack,
        d_g_ok: d_g_ratio >= k as f64 - slack,
        bound_not_improved: d_g_ratio >= d_eff_ratio - slack,
    })
}

/// A grid `lo:hi:n` with logarithmic or linear spacing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    pub log: bool,
}

impl GridSpec {
    pub fn new(lo: f64, hi: f64, n: usize, log: bool) -> Result<Self> {
        if n == 0 {
            return Err(Error::BadParameters("grid needs at least one point".into()));
        }
        if !(lo.is_finite() && hi.is_finite()) || hi < lo || (log && !(lo > 0.0)) {
            return Err(Error::BadParameters(format!("invalid grid range {lo}:{hi}")));
        }
        Ok(Self { lo, hi, n, log })
    }

    /// Parses `lo:hi:n:log` or `lo:hi:n:lin`.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::BadParameters(format!("grid '{s}' is not lo:hi:n:log|lin"));
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 4 {
            return Err(bad());
        }
        let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
        let log = match parts[3].trim() {
            "log" => true,
            "lin" | "linear" => false,
            _ => return Err(bad()),
        };
        Self::new(lo, hi, n, log)
    }

    pub fn points(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.lo];
        }
        let last = (self.n - 1) as f64;
        (0..self.n)
            .map(|k| {
                let f = k as f64 / last;
                if k + 1 == self.n {
                    self.hi
                } else if self.log {
                    self.lo * (self.hi / self.lo).powf(f)
                } else {
                    self.lo + (self.hi - self.lo) * f
                }
            })
            .collect()
    }
}

/// 20 log-spaced windows over `[0.1, 1e4] / eps_min`.
pub fn default_t_grid(eps_min: f64) -> Vec<f64> {
    GridSpec { lo: 0.1 / eps_min, hi: 1e4 / eps_min, n: 20, log: true }.points()
}

/// 32 points: `eps_min`, then geometric from `2 eps_min` to the full gap range.
pub fn default_eps_grid(g: &GapSet) -> Result<Vec<f64>> {
    let lo = g.epsilon_min()?;
    let hi = g.full_range();
    if hi <= 2.0 * lo {
        return Ok(if hi > lo { vec![lo, hi] } else { vec![lo] });
    }
    let mut grid = vec![lo];
    grid.extend(GridSpec { lo: 2.0 * lo, hi, n: 31, log: true }.points());
    Ok(grid)
}

/// Gap statistics and `d_eff` shared by every bound of one instance.
#[derive(Debug, Clone)]
pub struct InstanceStats {
    pub d_e: usize,
    pub d_eff: f64,
    pub gaps: GapSet,
}

impl InstanceStats {
    pub fn new(state: &State, h: &Hamiltonian) -> Result<Self> {
        Ok(Self {
            d_e: h.spectrum().d_e(),
            d_eff: effective_dimension(&populations(state, h)?),
            gaps: build_gaps(h.spectrum()),
        })
    }

    pub fn n_eps(&self, eps: f64) -> Result<usize> {
        if !(eps > 0.0) {
            return Err(Error::NonPositiveEpsilon(eps));
        }
        if self.gaps.is_empty() {
            Ok(0)
        } else {
            self.gaps.gap_density(eps)
        }
    }

    fn components(&self, eps: f64, t: f64, n_eps: usize) -> BTreeMap<String, f64> {
        let mut c = BTreeMap::new();
        c.insert("N_eps".into(), n_eps as f64);
        c.insert("d_eff".into(), self.d_eff);
        c.insert("d_E".into(), self.d_e as f64);
        c.insert("eps".into(), eps);
        c.insert("T".into(), t);
        if let Ok(dg) = self.gaps.max_gap_degeneracy() {
            c.insert("D_G".into(), dg as f64);
        }
        c
    }
}

/// Which bound a certification row checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    Deviation,
    MeasurementSet,
    Subsystem,
}

impl BoundKind {
    pub fn name(self) -> &'static str {
        match self {
            BoundKind::Deviation => "deviation",
            BoundKind::MeasurementSet => "measurement_set",
            BoundKind::Subsystem => "subsystem",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificationRow {
    pub instance: String,
    pub kind: BoundKind,
    pub t: f64,
    pub eps: f64,
    pub report: BoundReport,
}

/// What to measure on one instance.
#[derive(Debug, Clone)]
pub struct CertificationInstance {
    pub name: String,
    pub hamiltonian: Hamiltonian,
    pub state: State,
    pub observable: Option<ComplexMatrix>,
    pub measurements: Option<MeasurementSet>,
    pub subsystem: Option<(usize, usize)>,
}

/// Windows, gap-density parameters and quadrature pitch for one instance.
/// `pitch = None` uses the coarsest admissible pitch.
#[derive(Debug, Clone, Default)]
pub struct CertificationGrids {
    pub t_grid: Vec<f64>,
    pub eps_grid: Vec<f64>,
    pub pitch: Option<f64>,
    /// Multiplies every bound; 1 except when testing the certifier itself.
    pub bound_scale: Option<f64>,
}

/// Certifies every requested bound of one instance on the full `(T, eps)`
/// grid. Rows are ordered by kind, then `T`, then `eps`.
pub fn certify_instance(inst: &CertificationInstance, grids: &CertificationGrids) -> Result<Vec<CertificationRow>> {
    let h = &inst.hamiltonian;
    let state = &inst.state;
    let stats = InstanceStats::new(state, h)?;
    let t_grid = &grids.t_grid;
    if t_grid.is_empty() || grids.eps_grid.is_empty() {
        return Err(Error::BadParameters("empty T or eps grid".into()));
    }
    let scale = grids.bound_scale.unwrap_or(1.0);
    let n_eps: Vec<usize> = grids.eps_grid.iter().map(|&e| stats.n_eps(e)).collect::<Result<_>>()?;
    let pitch = || {
        let t_min = t_grid.iter().copied().fold(f64::INFINITY, f64::min);
        grids.pitch.unwrap_or_else(|| crate::averaging::pitch_limit(t_min, stats.gaps.max_frequency()))
    };
    let mut rows = Vec::new();
    let mut emit = |kind: BoundKind,
                    measured: &[f64],
                    extra: &[(&str, f64)],
                    bound: &dyn Fn(usize, f64, f64) -> Result<f64>|
     -> Result<()> {
        for (&t, &m) in t_grid.iter().zip(measured) {
            for (&eps, &n) in grids.eps_grid.iter().zip(&n_eps) {
                let mut comps = stats.components(eps, t, n);
                for &(k, v) in extra {
                    comps.insert(k.into(), v);
                }
                let b = scale * bound(n, eps, t)?;
                rows.push(CertificationRow {
                    instance: inst.name.clone(),
                    kind,
                    t,
                    eps,
                    report: BoundReport::new(b, comps, Some(m), kind != BoundKind::Deviation),
                });
            }
        }
        Ok(())
    };

    if let Some(a) = &inst.observable {
        let norm = operator_norm(a)?;
        let measured = deviation_exact_grid(state, h, a, t_grid)?;
        emit(BoundKind::Deviation, &measured, &[("norm_A", norm)], &|n, eps, t| {
            theorem1_bound(norm, stats.d_eff, n, stats.d_e, eps, t)
        })?;
    }
    if let Some(ms) = &inst.measurements {
        let s_m = ms.total_outcomes();
        let measured: Vec<f64> =
            measurement_averages(ms, state, h, None, t_grid, pitch())?.into_iter().map(|a| a.set_average).collect();
        emit(BoundKind::MeasurementSet, &measured, &[("S_M", s_m as f64)], &|n, eps, t| {
            theorem2_bound(s_m, stats.d_eff, n, stats.d_e, eps, t)
        })?;
    }
    if let Some(dims) = inst.subsystem {
        let measured: Vec<f64> =
            subsystem_averages(state, h, dims, t_grid, pitch())?.into_iter().map(|r| r[0]).collect();
        emit(BoundKind::Subsystem, &measured, &[("d_S", dims.0 as f64)], &|n, eps, t| {
            theorem3_bound(dims.0, stats.d_eff, n, stats.d_e, eps, t)
        })?;
    }
    Ok(rows)
}

/// Certifies a fleet in parallel; rows keep the fleet order.
pub fn certify_fleet(fleet: &[(CertificationInstance, CertificationGrids)]) -> Result<Vec<CertificationRow>> {
    let parts: Vec<Result<Vec<CertificationRow>>> =
        fleet.par_iter().map(|(inst, grids)| certify_instance(inst, grids)).collect();
    let mut rows = Vec::new();
    for p in parts {
        rows.extend(p?);
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificationSummary {
    pub rows: usize,
    pub violations: usize,
    pub vacuous: usize,
    pub min_slack: f64,
}

pub fn summarize(rows: &[CertificationRow]) -> CertificationSummary {
    CertificationSummary {
        rows: rows.len(),
        violations: rows.iter().filter(|r| !r.report.satisfied).count(),
        vacuous: rows.iter().filter(|r| r.report.vacuous).count(),
        min_slack: rows.iter().map(|r| r.report.slack).fold(f64::INFINITY, f64::min),
    }
}

/// The `eps` minimizing the deviation bound at window `t`, with that bound.
pub fn optimal_eps(stats: &InstanceStats, norm_a: f64, eps_grid: &[f64], t: f64) -> Result<(f64, f64)> {
    let mut best: Option<(f64, f64)> = None;
    for &eps in eps_grid {
        let b = theorem1_bound(norm_a, stats.d_eff, stats.n_eps(eps)?, stats.d_e, eps, t)?;
        if best.is_none_or(|(_, v)| b < v) {
            best = Some((eps, b));
        }
    }
    best.ok_or_else(|| Error::BadParameters("empty eps grid".into()))
}
