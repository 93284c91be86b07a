//! Time-averaged deviations from equilibrium.
//!
//! The exact route writes the squared deviation of an expectation value as a
//! quadratic form `v^dagger M v` over energy-gap labels, with the gap matrix
//! `M_ab = <exp(i (G_a - G_b) t)>_T` in closed form. The quadrature route
//! evolves the state and integrates `|tr[rho(t) A] - tr[omega A]|^2` directly
//! with composite Simpson; it shares nothing with the exact route beyond the
//! Hamiltonian's eigendata.

use crate::averaging::{check_pitch, phase_average, time_averages};
use crate::error::{Error, Result};
use crate::numerics::{eig_hermitian, ComplexMatrix, C64, ZERO};
use crate::quantum_state::{dephase, EffectiveState, MixedEvolution, State};
use crate::spectral::{build_gaps, GapSet, Hamiltonian};
use crate::tolerance::tolerances;
use rayon::prelude::*;

/// `M_ab = <exp(i (G_a - G_b) t)>_T` (or the centered variant) over a subset
/// of gap labels.
#[derive(Debug, Clone)]
pub struct GapMatrix {
    /// Indices into the originating [`GapSet`].
    pub labels: Vec<usize>,
    pub entries: ComplexMatrix,
    pub window: f64,
}

impl GapMatrix {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// `max_b sum_a |M_ab|`, the column-sum bound on the operator norm.
    pub fn column_sum_bound(&self) -> f64 {
        let m = &self.entries;
        (0..m.cols()).map(|b| (0..m.rows()).map(|a| m[(a, b)].norm()).sum::<f64>()).fold(0.0, f64::max)
    }
}

fn check_window(t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::NonPositiveT(t));
    }
    Ok(())
}

/// Gap matrix over all labels of `g`.
pub fn build_gap_matrix(g: &GapSet, t: f64) -> Result<GapMatrix> {
    let all: Vec<usize> = (0..g.len()).collect();
    build_gap_matrix_on(g, &all, t)
}

/// Gap matrix restricted to `labels`.
pub fn build_gap_matrix_on(g: &GapSet, labels: &[usize], t: f64) -> Result<GapMatrix> {
    check_window(t)?;
    let v = g.values();
    let entries = ComplexMatrix::from_fn(labels.len(), labels.len(), |a, b| {
        let (la, lb) = (labels[a], labels[b]);
        phase_average(v[la] - v[lb], t, g.degenerate(la, lb))
    });
    Ok(GapMatrix { labels: labels.to_vec(), entries, window: t })
}

/// `M~_ab = <exp(i (G_a - G_b) t)>_T - <exp(i G_a t)>_T <exp(-i G_b t)>_T`.
pub fn centered_gap_matrix(g: &GapSet, t: f64) -> Result<GapMatrix> {
    check_window(t)?;
    let v = g.values();
    let single: Vec<C64> = v.iter().map(|&x| phase_average(x, t, false)).collect();
    let n = g.len();
    let entries = ComplexMatrix::from_fn(n, n, |a, b| {
        phase_average(v[a] - v[b], t, g.degenerate(a, b)) - single[a] * single[b].conj()
    });
    Ok(GapMatrix { labels: (0..n).collect(), entries, window: t })
}

/// Operator norm of the Hermitian gap matrix (largest eigenvalue magnitude).
pub fn m_norm_numeric(m: &GapMatrix) -> Result<f64> {
    if m.is_empty() {
        return Ok(0.0);
    }
    let eig = eig_hermitian(&m.entries.hermitian_part())?;
    Ok(eig.eigenvalues.iter().fold(0.0, |a: f64, x| a.max(x.abs())))
}

/// `v_(i,j)` for every label of the Hamiltonian's gap set.
///
/// Pure states use the effective non-degenerate description:
/// `v_(i,j) = c_j^* <j|A|i> c_i`. Mixed states use the equivalent
/// `v_(i,j) = tr[A P_i rho P_j]`, which is what the purification
/// `|phi>` evolved under `H (x) I` with observable `A (x) I` produces.
pub fn coherence_vector(state: &State, h: &Hamiltonian, a: &ComplexMatrix, g: &GapSet) -> Result<Vec<C64>> {
    h.check_dim(a.rows())?;
    if !a.is_square() {
        return Err(Error::DimensionMismatch { expected: a.rows(), got: a.cols() });
    }
    let mut v = vec![ZERO; g.len()];
    match state {
        State::Pure(psi) => {
            let eff = EffectiveState::new(psi, h)?;
            let elems = eff.matrix_elements(a);
            for (x, &li) in eff.levels.iter().enumerate() {
                for (y, &lj) in eff.levels.iter().enumerate() {
                    if li != lj {
                        v[g.index_of(li, lj)] = eff.weights[y] * elems[y][x] * eff.weights[x];
                    }
                }
            }
        }
        State::Mixed(_) => {
            let rho_e = state.in_eigenbasis(h)?;
            let a_e = h.to_eigenbasis(a)?;
            let n = h.dim();
            for p in 0..n {
                for q in 0..n {
                    let (li, lj) = (h.level_of(p), h.level_of(q));
                    if li != lj {
                        v[g.index_of(li, lj)] += a_e[(q, p)] * rho_e[(p, q)];
                    }
                }
            }
        }
    }
    Ok(v)
}

/// Exact time-averaged squared deviation and the vector that produced it.
#[derive(Debug, Clone)]
pub struct DeviationWitness {
    pub observable: ComplexMatrix,
    /// Indexed by gap label of the Hamiltonian's [`GapSet`].
    pub v: Vec<C64>,
    pub window: f64,
    pub value: f64,
}

/// Labels carrying non-negligible `|v_b|`.
pub fn support(v: &[C64]) -> Vec<usize> {
    let floor = tolerances().support_floor;
    (0..v.len()).filter(|&k| v[k].norm() >= floor).collect()
}

/// `v^dagger M(T) v` evaluated without materializing `M`.
pub fn quadratic_form(g: &GapSet, v: &[C64], t: f64) -> Result<f64> {
    check_window(t)?;
    let sup = support(v);
    let vals = g.values();
    let rows: Vec<C64> = sup
        .par_iter()
        .enumerate()
        .map(|(x, &a)| {
            let mut acc = ZERO;
            for &b in &sup[x + 1..] {
                acc += v[a].conj() * phase_average(vals[a] - vals[b], t, g.degenerate(a, b)) * v[b];
            }
            acc
        })
        .collect();
    let diag: f64 = sup.iter().map(|&a| v[a].norm_sqr()).sum();
    let off: f64 = rows.iter().map(|z| z.re).sum();
    Ok(diag + 2.0 * off)
}

/// `<|tr[rho(t) A] - tr[omega A]|^2>_T` from the gap-matrix quadratic form.
pub fn deviation_exact(state: &State, h: &Hamiltonian, a: &ComplexMatrix, t: f64) -> Result<DeviationWitness> {
    check_window(t)?;
    let g = build_gaps(h.spectrum());
    let v = coherence_vector(state, h, a, &g)?;
    let value = quadratic_form(&g, &v, t)?.max(0.0);
    Ok(DeviationWitness { observable: a.clone(), v, window: t, value })
}

/// Exact deviations for a whole grid of windows, sharing one coherence vector.
pub fn deviation_exact_grid(state: &State, h: &Hamiltonian, a: &ComplexMatrix, t_grid: &[f64]) -> Result<Vec<f64>> {
    let g = build_gaps(h.spectrum());
    let v = coherence_vector(state, h, a, &g)?;
    t_grid.iter().map(|&t| Ok(quadratic_form(&g, &v, t)?.max(0.0))).collect()
}

/// Time evolution of a pure or mixed state, computed by applying
/// `exp(-i H t)` in the eigenbasis.
pub enum Trajectory<'a> {
    Pure { h: &'a Hamiltonian, coeffs: Vec<C64> },
    Mixed(MixedEvolution<'a>),
}

impl<'a> Trajectory<'a> {
    pub fn new(state: &State, h: &'a Hamiltonian) -> Result<Self> {
        h.check_dim(state.dim())?;
        Ok(match state {
            State::Pure(p) => Trajectory::Pure { h, coeffs: h.eigenvectors().adjoint().apply(p.amplitudes()) },
            State::Mixed(m) => Trajectory::Mixed(MixedEvolution::new(m, h)?),
        })
    }

    /// `psi(t)`; `None` for mixed states.
    pub fn vector_at(&self, t: f64) -> Option<Vec<C64>> {
        match self {
            Trajectory::Pure { h, coeffs } => {
                let c: Vec<C64> = coeffs
                    .iter()
                    .enumerate()
                    .map(|(k, ck)| ck * C64::from_polar(1.0, -h.level_energy(k) * t))
                    .collect();
                Some(h.eigenvectors().apply(&c))
            }
            Trajectory::Mixed(_) => None,
        }
    }

    pub fn density_at(&self, t: f64) -> ComplexMatrix {
        match self {
            Trajectory::Pure { .. } => ComplexMatrix::outer(&self.vector_at(t).expect("pure")),
            Trajectory::Mixed(m) => m.state_at(t),
        }
    }

    /// `tr[rho(t) A]` for each operator in `ops`.
    pub fn expectations_at(&self, t: f64, ops: &[&ComplexMatrix], out: &mut [f64]) {
        match self.vector_at(t) {
            Some(psi) => {
                for (o, a) in out.iter_mut().zip(ops) {
                    *o = a.sandwich(&psi, &psi).re;
                }
            }
            None => {
                let rho = self.density_at(t);
                for (o, a) in out.iter_mut().zip(ops) {
                    *o = rho.trace_product(a).re;
                }
            }
        }
    }
}

/// Composite-Simpson estimate of the same average as [`deviation_exact`].
pub fn deviation_quadrature(state: &State, h: &Hamiltonian, a: &ComplexMatrix, t: f64, pitch: f64) -> Result<f64> {
    Ok(deviation_quadrature_grid(state, h, a, &[t], pitch)?[0])
}

/// [`deviation_quadrature`] for a whole ascending grid in one pass. The pitch
/// must satisfy the rule at the smallest window.
pub fn deviation_quadrature_grid(
    state: &State,
    h: &Hamiltonian,
    a: &ComplexMatrix,
    t_grid: &[f64],
    pitch: f64,
) -> Result<Vec<f64>> {
    h.check_dim(a.rows())?;
    let g = build_gaps(h.spectrum());
    let t_min = t_grid.iter().copied().fold(f64::INFINITY, f64::min);
    check_pitch(t_min, pitch, g.max_frequency())?;
    let omega = dephase(state, h)?;
    let mean = omega.expectation(a);
    let traj = Trajectory::new(state, h)?;
    let avgs = time_averages(t_grid, pitch, 1, |s, out| {
        let psi = traj.vector_at(s);
        let x = match psi {
            Some(p) => a.sandwich(&p, &p),
            None => traj.density_at(s).trace_product(a),
        };
        out[0] = (x - mean).norm_sqr();
    })?;
    Ok(avgs.into_iter().map(|r| r[0]).collect())
}
