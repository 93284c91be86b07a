//! Measurements and how well they tell two states apart.

use crate::averaging::{check_pitch, time_averages};
use crate::bounds::{theorem1_bound, theorem2_bound, theorem3_bound};
use crate::dynamics::{deviation_exact_grid, Trajectory};
use crate::error::{Error, Result};
use crate::numerics::{
    eig_hermitian, operator_norm, partial_trace, reduce_pure_first, schwinger_basis, tensor, ComplexMatrix, Subsystem,
    C64,
};
use crate::quantum_state::{dephase, effective_dimension, populations, DensityMatrix, State};
use crate::spectral::{build_gaps, Hamiltonian};
use crate::tolerance::tolerances;
use serde::{Deserialize, Serialize};

/// Positive operators summing to the identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ComplexMatrix>", into = "Vec<ComplexMatrix>")]
pub struct Povm {
    outcomes: Vec<ComplexMatrix>,
}

impl TryFrom<Vec<ComplexMatrix>> for Povm {
    type Error = Error;

    fn try_from(v: Vec<ComplexMatrix>) -> Result<Self> {
        Povm::new(v)
    }
}

impl From<Povm> for Vec<ComplexMatrix> {
    fn from(p: Povm) -> Self {
        p.outcomes
    }
}

impl Povm {
    /// Validates positivity and completeness; invalid input is rejected, never
    /// renormalized.
    pub fn new(outcomes: Vec<ComplexMatrix>) -> Result<Self> {
        let tol = tolerances().povm;
        let d = outcomes.first().ok_or_else(|| Error::InvalidPovm("no outcomes".into()))?.rows();
        let mut sum = ComplexMatrix::zeros(d, d);
        for (a, m) in outcomes.iter().enumerate() {
            if !m.is_square() || m.rows() != d {
                return Err(Error::InvalidPovm(format!("outcome {a} is not {d}x{d}")));
            }
            if !m.is_hermitian() {
                return Err(Error::InvalidPovm(format!("outcome {a} is not Hermitian")));
            }
            let min = eig_hermitian(m)?.eigenvalues[0];
            if min < -tol {
                return Err(Error::InvalidPovm(format!("outcome {a} has eigenvalue {min:.3e}")));
            }
            sum = sum.add(m);
        }
        let dev = sum.sub(&ComplexMatrix::identity(d)).max_abs();
        if dev > tol {
            return Err(Error::InvalidPovm(format!("outcomes sum to identity only within {dev:.3e}")));
        }
        Ok(Self { outcomes })
    }

    /// Projective measurement in the computational basis.
    pub fn computational(d: usize) -> Self {
        let outcomes = (0..d)
            .map(|k| {
                let mut m = ComplexMatrix::zeros(d, d);
                m[(k, k)] = C64::new(1.0, 0.0);
                m
            })
            .collect();
        Self { outcomes }
    }

    /// The single-outcome measurement `{I}`.
    pub fn trivial(d: usize) -> Self {
        Self { outcomes: vec![ComplexMatrix::identity(d)] }
    }

    pub(crate) fn from_trusted(outcomes: Vec<ComplexMatrix>) -> Self {
        Self { outcomes }
    }

    pub fn outcomes(&self) -> &[ComplexMatrix] {
        &self.outcomes
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.outcomes[0].rows()
    }

    /// Outcome probabilities `tr[M_a rho]`.
    pub fn probabilities(&self, rho: &ComplexMatrix) -> Vec<f64> {
        self.outcomes.iter().map(|m| m.trace_product(rho).re).collect()
    }
}

/// A collection of measurements; `S(M)` is the total outcome count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementSet {
    pub povms: Vec<Povm>,
}

impl MeasurementSet {
    pub fn new(povms: Vec<Povm>) -> Result<Self> {
        if let Some(d) = povms.first().map(Povm::dim) {
            if let Some(p) = povms.iter().find(|p| p.dim() != d) {
                return Err(Error::DimensionMismatch { expected: d, got: p.dim() });
            }
        }
        Ok(Self { povms })
    }

    pub fn total_outcomes(&self) -> usize {
        self.povms.iter().map(Povm::len).sum()
    }

    pub fn dim(&self) -> Option<usize> {
        self.povms.first().map(Povm::dim)
    }
}

fn check_pair(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<()> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), got: sigma.dim() });
    }
    Ok(())
}

fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// `D_M(rho, sigma) = 1/2 sum_a |tr[M_a rho] - tr[M_a sigma]|`.
pub fn povm_distinguishability(m: &Povm, rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    check_pair(rho, sigma)?;
    if m.dim() != rho.dim() {
        return Err(Error::DimensionMismatch { expected: m.dim(), got: rho.dim() });
    }
    Ok(total_variation(&m.probabilities(rho.matrix()), &m.probabilities(sigma.matrix())))
}

/// `D_M(rho, sigma) = max over member POVMs of D_M`.
pub fn set_distinguishability(ms: &MeasurementSet, rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if ms.povms.is_empty() {
        return Err(Error::EmptySet);
    }
    ms.povms.iter().map(|m| povm_distinguishability(m, rho, sigma)).try_fold(0.0, |acc, d| Ok(f64::max(acc, d?)))
}

fn trace_distance_raw(x: &ComplexMatrix) -> Result<f64> {
    let eig = eig_hermitian(&x.hermitian_part())?;
    Ok(0.5 * eig.eigenvalues.iter().map(|l| l.abs()).sum::<f64>())
}

/// `D(rho, sigma) = 1/2 tr|rho - sigma|`.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    check_pair(rho, sigma)?;
    // A fixed operand order makes the value bit-symmetric.
    let key = |m: &DensityMatrix| m.matrix().data().iter().flat_map(|z| [z.re, z.im]).collect::<Vec<_>>();
    let swap = key(rho).iter().zip(key(sigma)).find_map(|(a, b)| (*a != b).then(|| a.total_cmp(&b)))
        == Some(std::cmp::Ordering::Greater);
    let (a, b) = if swap { (sigma, rho) } else { (rho, sigma) };
    trace_distance_raw(&a.matrix().sub(b.matrix()))
}

/// `{P+, I - P+}` with `P+` the projector onto the positive eigenspace of
/// `rho - sigma`.
pub fn helstrom_povm(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<Povm> {
    check_pair(rho, sigma)?;
    let d = rho.dim();
    let eig = eig_hermitian(&rho.matrix().sub(sigma.matrix()).hermitian_part())?;
    let mut p = ComplexMatrix::zeros(d, d);
    for (k, &l) in eig.eigenvalues.iter().enumerate() {
        if l > 0.0 {
            p = p.add(&ComplexMatrix::outer(&eig.eigenvectors.column(k)));
        }
    }
    let q = ComplexMatrix::identity(d).sub(&p);
    Ok(Povm::from_trusted(vec![p, q]))
}

/// Optimal guessing probability with measurement `m`, `1/2 (1 + D_M)`.
pub fn success_probability(m: &Povm, rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    Ok(0.5 * (1.0 + povm_distinguishability(m, rho, sigma)?))
}

/// Time averages behind the bound on `<D_M(rho(t), omega)>_T`.
#[derive(Debug, Clone, Serialize)]
pub struct Theorem2Chain {
    pub window: f64,
    pub eps: f64,
    /// `<D_M(rho(t), omega)>_T`.
    pub set_average: f64,
    /// `sum_M <D_M(rho(t), omega)>_T`.
    pub sum_of_povm_averages: f64,
    /// `1/2 sum_M sum_a sqrt(<(tr M_a rho(t) - tr M_a omega)^2>_T)`.
    pub cauchy_schwarz: f64,
    /// `1/2 sum_M sum_a sqrt(|M~_a|^2 N(eps)/d_eff (1 + 8 log2 d_E/(eps T)))`.
    pub theorem1_line: f64,
    /// `S(M)/(4 sqrt(d_eff)) sqrt(N(eps)(1 + 8 log2 d_E/(eps T)))`.
    pub final_bound: f64,
    /// Largest `|M_a - I/2|` over all outcomes.
    pub max_centered_norm: f64,
}

impl Theorem2Chain {
    pub fn lines(&self) -> [f64; 5] {
        [self.set_average, self.sum_of_povm_averages, self.cauchy_schwarz, self.theorem1_line, self.final_bound]
    }

    /// Each line is at most the next, up to the bound slack.
    pub fn is_monotone(&self) -> bool {
        let slack = tolerances().bound_slack;
        self.lines().windows(2).all(|w| w[0] <= w[1] + slack)
    }
}

/// Quadrature averages of the measurement-set quantities over a grid of windows.
#[derive(Debug, Clone)]
pub struct MeasurementAverages {
    pub window: f64,
    pub set_average: f64,
    pub povm_averages: Vec<f64>,
    /// `sqrt(<x_a(t)^2>_T)` per outcome, flattened over POVMs.
    pub rms_per_outcome: Vec<f64>,
}

/// Averages of `D_M(rho(t), sigma)`, each `D_M`, and each outcome's rms
/// deviation, for every `T` in the grid. `sigma = None` uses `omega`.
pub fn measurement_averages(
    ms: &MeasurementSet,
    state: &State,
    h: &Hamiltonian,
    sigma: Option<&DensityMatrix>,
    t_grid: &[f64],
    pitch: f64,
) -> Result<Vec<MeasurementAverages>> {
    if ms.povms.is_empty() {
        return Err(Error::EmptySet);
    }
    if ms.dim() != Some(h.dim()) {
        return Err(Error::DimensionMismatch { expected: h.dim(), got: ms.dim().unwrap_or(0) });
    }
    let g = build_gaps(h.spectrum());
    let t_min = t_grid.iter().copied().fold(f64::INFINITY, f64::min);
    check_pitch(t_min, pitch, g.max_frequency())?;
    let reference = match sigma {
        Some(s) => s.clone(),
        None => dephase(state, h)?,
    };
    let ops: Vec<&ComplexMatrix> = ms.povms.iter().flat_map(|p| p.outcomes().iter()).collect();
    let base: Vec<f64> = ops.iter().map(|m| reference.expectation(m).re).collect();
    let sizes: Vec<usize> = ms.povms.iter().map(Povm::len).collect();
    let s = ops.len();
    let p = sizes.len();
    let traj = Trajectory::new(state, h)?;
    // channels: [D_set, D_M per povm (p), x_a^2 per outcome (s)]
    let width = 1 + p + s;
    let avgs = time_averages(t_grid, pitch, width, |t, out| {
        let mut x = vec![0.0; s];
        traj.expectations_at(t, &ops, &mut x);
        let mut k = 0;
        let mut best: f64 = 0.0;
        for (m, &n) in sizes.iter().enumerate() {
            let dm = 0.5 * (k..k + n).map(|a| (x[a] - base[a]).abs()).sum::<f64>();
            out[1 + m] = dm;
            best = best.max(dm);
            k += n;
        }
        out[0] = best;
        for a in 0..s {
            out[1 + p + a] = (x[a] - base[a]).powi(2);
        }
    })?;
    Ok(t_grid
        .iter()
        .zip(avgs)
        .map(|(&t, row)| MeasurementAverages {
            window: t,
            set_average: row[0],
            povm_averages: row[1..1 + p].to_vec(),
            rms_per_outcome: row[1 + p..].iter().map(|x| x.max(0.0).sqrt()).collect(),
        })
        .collect())
}

/// Evaluates every line of the bound chain for `<D_M(rho(t), omega)>_T` at
/// each window of `t_grid`, with gap-density parameter `eps`.
pub fn theorem2_chain_grid(
    ms: &MeasurementSet,
    state: &State,
    h: &Hamiltonian,
    t_grid: &[f64],
    eps: f64,
    pitch: f64,
) -> Result<Vec<Theorem2Chain>> {
    if !(eps > 0.0) {
        return Err(Error::NonPositiveEpsilon(eps));
    }
    let g = build_gaps(h.spectrum());
    let d_e = h.spectrum().d_e();
    let n_eps = if g.is_empty() { 0 } else { g.gap_density(eps)? };
    let d_eff = effective_dimension(&populations(state, h)?);
    let d = h.dim();
    let half = ComplexMatrix::identity(d).scale(C64::new(0.5, 0.0));
    let centered_norms: Vec<f64> = ms
        .povms
        .iter()
        .flat_map(|p| p.outcomes().iter())
        .map(|m| operator_norm(&m.sub(&half)))
        .collect::<Result<_>>()?;
    let max_centered_norm = centered_norms.iter().copied().fold(0.0, f64::max);
    let averages = measurement_averages(ms, state, h, None, t_grid, pitch)?;
    averages
        .into_iter()
        .map(|av| {
            let t = av.window;
            let theorem1_line = 0.5
                * centered_norms
                    .iter()
                    .map(|&nrm| Ok(theorem1_bound(nrm, d_eff, n_eps, d_e, eps, t)?.sqrt()))
                    .sum::<Result<f64>>()?;
            Ok(Theorem2Chain {
                window: t,
                eps,
                set_average: av.set_average,
                sum_of_povm_averages: av.povm_averages.iter().sum(),
                cauchy_schwarz: 0.5 * av.rms_per_outcome.iter().sum::<f64>(),
                theorem1_line,
                final_bound: theorem2_bound(ms.total_outcomes(), d_eff, n_eps, d_e, eps, t)?,
                max_centered_norm,
            })
        })
        .collect()
}

/// Single-window form of [`theorem2_chain_grid`].
pub fn verify_theorem2_chain(
    ms: &MeasurementSet,
    state: &State,
    h: &Hamiltonian,
    t: f64,
    eps: f64,
    pitch: f64,
) -> Result<Theorem2Chain> {
    Ok(theorem2_chain_grid(ms, state, h, &[t], eps, pitch)?.remove(0))
}

/// Time averages behind the bound on `<D(rho_S(t), omega_S)>_T`.
#[derive(Debug, Clone, Serialize)]
pub struct Theorem3Chain {
    pub window: f64,
    pub eps: f64,
    /// `<D(rho_S(t), omega_S)>_T`.
    pub distance: f64,
    /// `1/2 <sqrt(d_S tr|rho_S - omega_S|^2)>_T`.
    pub two_norm: f64,
    /// `1/2 sqrt(d_S sum_k <|c_k(t)|^2>_T)` by quadrature.
    pub coefficients: f64,
    /// Same as `coefficients`, with each `<|c_k|^2>_T` from the exact gap-matrix route.
    pub coefficients_exact: f64,
    /// `1/2 sqrt(d_S sum_k |F_k|^2 N(eps)/d_eff (1 + 8 log2 d_E/(eps T)))`.
    pub theorem1_line: f64,
    pub final_bound: f64,
}

impl Theorem3Chain {
    pub fn lines(&self) -> [f64; 5] {
        [self.distance, self.two_norm, self.coefficients, self.theorem1_line, self.final_bound]
    }

    pub fn is_monotone(&self) -> bool {
        let slack = tolerances().bound_slack;
        self.lines().windows(2).all(|w| w[0] <= w[1] + slack) && self.coefficients_exact <= self.theorem1_line + slack
    }
}

/// Quadrature averages for the subsystem (first tensor factor, dimension
/// `dims.0`): trace distance, the 2-norm line and the coefficient line.
pub fn subsystem_averages(
    state: &State,
    h: &Hamiltonian,
    dims: (usize, usize),
    t_grid: &[f64],
    pitch: f64,
) -> Result<Vec<[f64; 3]>> {
    let (ds, db) = dims;
    h.check_dim(ds * db)?;
    let g = build_gaps(h.spectrum());
    let t_min = t_grid.iter().copied().fold(f64::INFINITY, f64::min);
    check_pitch(t_min, pitch, g.max_frequency())?;
    let omega_s = partial_trace(dephase(state, h)?.matrix(), dims, Subsystem::First)?;
    let basis = schwinger_basis(ds);
    let traj = Trajectory::new(state, h)?;
    let failure = std::sync::Mutex::new(None);
    let avgs = time_averages(t_grid, pitch, 3, |t, out| {
        let rho_s = match traj.vector_at(t) {
            Some(psi) => reduce_pure_first(&psi, dims).expect("dimension checked"),
            None => partial_trace(&traj.density_at(t), dims, Subsystem::First).expect("dimension checked"),
        };
        let x = rho_s.sub(&omega_s).hermitian_part();
        match trace_distance_raw(&x) {
            Ok(dist) => out[0] = dist,
            Err(e) => {
                failure.lock().unwrap().get_or_insert(e);
                out[0] = f64::NAN;
            }
        }
        out[1] = 0.5 * (ds as f64 * x.frobenius_norm().powi(2)).sqrt();
        out[2] = basis.iter().map(|f| f.adjoint().trace_product(&x).norm_sqr()).sum();
    })?;
    if let Some(e) = failure.into_inner().unwrap() {
        return Err(e);
    }
    Ok(avgs.into_iter().map(|r| [r[0], r[1], 0.5 * (ds as f64 * r[2].max(0.0)).sqrt()]).collect())
}

/// Evaluates the subsystem bound chain at each window of `t_grid`.
pub fn theorem3_chain_grid(
    state: &State,
    h: &Hamiltonian,
    dims: (usize, usize),
    t_grid: &[f64],
    eps: f64,
    pitch: f64,
) -> Result<Vec<Theorem3Chain>> {
    if !(eps > 0.0) {
        return Err(Error::NonPositiveEpsilon(eps));
    }
    let (ds, db) = dims;
    let g = build_gaps(h.spectrum());
    let d_e = h.spectrum().d_e();
    let n_eps = if g.is_empty() { 0 } else { g.gap_density(eps)? };
    let d_eff = effective_dimension(&populations(state, h)?);
    let quad = subsystem_averages(state, h, dims, t_grid, pitch)?;

    let id_b = ComplexMatrix::identity(db);
    let basis = schwinger_basis(ds);
    let mut exact_sum = vec![0.0; t_grid.len()];
    let mut norm_sq_sum = 0.0;
    for f in &basis {
        let fd = f.adjoint();
        norm_sq_sum += operator_norm(&fd)?.powi(2);
        let lifted = tensor(&fd, &id_b);
        for (acc, dev) in exact_sum.iter_mut().zip(deviation_exact_grid(state, h, &lifted, t_grid)?) {
            *acc += dev;
        }
    }
    t_grid
        .iter()
        .zip(quad)
        .zip(exact_sum)
        .map(|((&t, q), ex)| {
            let corr = if n_eps == 0 { 0.0 } else { theorem1_bound(1.0, d_eff, n_eps, d_e, eps, t)? };
            Ok(Theorem3Chain {
                window: t,
                eps,
                distance: q[0],
                two_norm: q[1],
                coefficients: q[2],
                coefficients_exact: 0.5 * (ds as f64 * ex).sqrt(),
                theorem1_line: 0.5 * (ds as f64 * norm_sq_sum * corr).sqrt(),
                final_bound: theorem3_bound(ds, d_eff, n_eps, d_e, eps, t)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum_state::PureState;

    fn zero() -> DensityMatrix {
        PureState::basis(2, 0).projector()
    }

    fn half() -> DensityMatrix {
        DensityMatrix::maximally_mixed(2)
    }

    #[test]
    fn povm_validation() {
        assert!(Povm::new(vec![]).is_err());
        assert!(Povm::new(vec![ComplexMatrix::from_diag(&[1.0, 0.5])]).is_err());
        assert!(Povm::new(vec![ComplexMatrix::from_diag(&[1.5, 1.0]), ComplexMatrix::from_diag(&[-0.5, 0.0])]).is_err());
        assert!(Povm::new(vec![ComplexMatrix::from_diag(&[0.5, 0.5]), ComplexMatrix::from_diag(&[0.5, 0.5])]).is_ok());
        let json = r#"{"povms":[[{"rows":1,"cols":1,"re":[1.0],"im":[0.0]}]]}"#;
        let ms: MeasurementSet = serde_json::from_str(json).unwrap();
        assert_eq!(ms.total_outcomes(), 1);
        let bad = r#"{"povms":[[{"rows":1,"cols":1,"re":[0.5],"im":[0.0]}]]}"#;
        assert!(serde_json::from_str::<MeasurementSet>(bad).is_err());
    }

    #[test]
    fn povm_distinguishability_examples() {
        let z = Povm::computational(2);
        assert_eq!(povm_distinguishability(&z, &half(), &half()).unwrap(), 0.0);
        assert_eq!(povm_distinguishability(&Povm::trivial(2), &zero(), &half()).unwrap(), 0.0);
        assert!((povm_distinguishability(&z, &zero(), &half()).unwrap() - 0.5).abs() < 1e-15);
        assert!(povm_distinguishability(&z, &zero(), &DensityMatrix::maximally_mixed(3)).is_err());
    }

    #[test]
    fn set_distinguishability_examples() {
        let trivial = MeasurementSet::new(vec![Povm::trivial(2)]).unwrap();
        assert_eq!(set_distinguishability(&trivial, &zero(), &half()).unwrap(), 0.0);
        let empty = MeasurementSet::new(vec![]).unwrap();
        assert_eq!(set_distinguishability(&empty, &zero(), &half()), Err(Error::EmptySet));
        let hel = helstrom_povm(&zero(), &half()).unwrap();
        let with = MeasurementSet::new(vec![Povm::trivial(2), hel]).unwrap();
        let td = trace_distance(&zero(), &half()).unwrap();
        assert!((set_distinguishability(&with, &zero(), &half()).unwrap() - td).abs() < 1e-15);
    }

    #[test]
    fn trace_distance_examples() {
        assert_eq!(trace_distance(&half(), &half()).unwrap(), 0.0);
        let one = PureState::basis(2, 1).projector();
        assert!((trace_distance(&zero(), &one).unwrap() - 1.0).abs() < 1e-15);
        assert!((trace_distance(&zero(), &half()).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn success_probability_examples() {
        let z = Povm::computational(2);
        assert_eq!(success_probability(&z, &half(), &half()).unwrap(), 0.5);
        let one = PureState::basis(2, 1).projector();
        let hel = helstrom_povm(&zero(), &one).unwrap();
        assert!((success_probability(&hel, &zero(), &one).unwrap() - 1.0).abs() < 1e-15);
        assert!((success_probability(&z, &zero(), &half()).unwrap() - 0.75).abs() < 1e-15);
    }

    fn qubit() -> (State, Hamiltonian) {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let psi = PureState::new(vec![C64::new(s, 0.0), C64::new(s, 0.0)]).unwrap();
        (psi.into(), Hamiltonian::diagonal(&[0.0, 1.0]).unwrap())
    }

    #[test]
    fn chain_trivial_set_is_zero_until_norm_lines() {
        let (s, h) = qubit();
        let ms = MeasurementSet::new(vec![Povm::trivial(2)]).unwrap();
        let c = verify_theorem2_chain(&ms, &s, &h, 10.0, 2.0, 0.01).unwrap();
        let l = c.lines();
        assert!(l[..3].iter().all(|x| x.abs() < 1e-12), "{l:?}");
        // |I - I/2| = 1/2, so the last two lines coincide and are positive.
        assert!(l[3] > 0.0 && (l[3] - l[4]).abs() < 1e-15);
        assert!(c.is_monotone());
    }

    #[test]
    fn chain_qubit_sigma_x_measurement() {
        let (s, h) = qubit();
        let r = 0.5;
        let plus = ComplexMatrix::from_real_rows(&[&[r, r], &[r, r]]);
        let minus = ComplexMatrix::from_real_rows(&[&[r, -r], &[-r, r]]);
        let ms = MeasurementSet::new(vec![Povm::new(vec![plus, minus]).unwrap()]).unwrap();
        let t = 100.0;
        let c = verify_theorem2_chain(&ms, &s, &h, t, 2.0, 1e-3).unwrap();
        // D_M = |cos t| / 2
        let exact_avg = {
            let full = (t / std::f64::consts::PI).floor();
            let rest = t - full * std::f64::consts::PI;
            let partial = if rest <= std::f64::consts::FRAC_PI_2 { rest.sin() } else { 2.0 - rest.sin() };
            (2.0 * full + partial) / (2.0 * t)
        };
        assert!((c.set_average - exact_avg).abs() < 1e-6);
        assert!(c.set_average < c.cauchy_schwarz);
        assert!(c.cauchy_schwarz < c.theorem1_line);
        assert!((c.theorem1_line - c.final_bound).abs() < 1e-12);
        assert!((c.max_centered_norm - 0.5).abs() < 1e-12);
        assert!(c.is_monotone());
    }

    #[test]
    fn chain_qubit_z_measurement_is_static() {
        let (s, h) = qubit();
        let ms = MeasurementSet::new(vec![Povm::computational(2)]).unwrap();
        let c = verify_theorem2_chain(&ms, &s, &h, 10.0, 2.0, 0.01).unwrap();
        assert!(c.set_average.abs() < 1e-15 && c.cauchy_schwarz.abs() < 1e-15);
        assert!(c.is_monotone());
    }
}
