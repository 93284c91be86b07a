//! States, energy populations, effective dimension and time-averaged states.

use crate::averaging::phase_average;
use crate::error::{Error, Result};
use crate::numerics::{eig_hermitian, inner, partial_trace, tensor_vec, vec_norm, ComplexMatrix, Subsystem, C64, ZERO};
use crate::spectral::Hamiltonian;
use crate::tolerance::tolerances;
use serde::{Deserialize, Serialize};

/// A unit vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState(Vec<C64>);

impl PureState {
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        let n = vec_norm(&amplitudes);
        if amplitudes.is_empty() || (n - 1.0).abs() > tolerances().norm {
            return Err(Error::InvalidState(format!("state norm is {n}, expected 1")));
        }
        Ok(Self(amplitudes))
    }

    /// Normalizes `v`; fails on the zero vector.
    pub fn normalized(mut v: Vec<C64>) -> Result<Self> {
        let n = vec_norm(&v);
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidState("cannot normalize a zero vector".into()));
        }
        v.iter_mut().for_each(|z| *z /= n);
        Ok(Self(v))
    }

    pub fn basis(d: usize, k: usize) -> Self {
        let mut v = vec![ZERO; d];
        v[k] = C64::new(1.0, 0.0);
        Self(v)
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn projector(&self) -> DensityMatrix {
        DensityMatrix(ComplexMatrix::outer(&self.0))
    }
}

/// Hermitian, positive semidefinite, unit trace.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(ComplexMatrix);

impl DensityMatrix {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        let tol = tolerances();
        if !m.is_square() || m.rows() == 0 {
            return Err(Error::InvalidState("density matrix must be square and non-empty".into()));
        }
        if !m.is_hermitian() {
            return Err(Error::NotHermitian(m.hermitian_asymmetry()));
        }
        let tr = m.trace().re;
        if (tr - 1.0).abs() > tol.trace {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        let min = eig_hermitian(&m)?.eigenvalues[0];
        if min < -tol.psd {
            return Err(Error::InvalidState(format!("minimum eigenvalue {min} is negative")));
        }
        Ok(Self(m))
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self(ComplexMatrix::identity(d).scale(C64::new(1.0 / d as f64, 0.0)))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    /// `tr(rho A)`.
    pub fn expectation(&self, a: &ComplexMatrix) -> C64 {
        self.0.trace_product(a)
    }

    pub fn purity(&self) -> f64 {
        self.0.trace_product(&self.0).re
    }

    pub fn partial_trace(&self, dims: (usize, usize), keep: Subsystem) -> Result<Self> {
        Ok(Self(partial_trace(&self.0, dims, keep)?))
    }
}

/// A system state as read from or written to disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StateJson", into = "StateJson")]
pub enum State {
    Pure(PureState),
    Mixed(DensityMatrix),
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
enum StateJson {
    Pure { re: Vec<f64>, im: Vec<f64> },
    Mixed { matrix: ComplexMatrix },
}

impl TryFrom<StateJson> for State {
    type Error = Error;

    fn try_from(s: StateJson) -> Result<Self> {
        match s {
            StateJson::Pure { re, im } => {
                if re.len() != im.len() {
                    return Err(Error::DimensionMismatch { expected: re.len(), got: im.len() });
                }
                let v = re.iter().zip(&im).map(|(&a, &b)| C64::new(a, b)).collect();
                Ok(State::Pure(PureState::new(v)?))
            }
            StateJson::Mixed { matrix } => Ok(State::Mixed(DensityMatrix::new(matrix)?)),
        }
    }
}

impl From<State> for StateJson {
    fn from(s: State) -> Self {
        match s {
            State::Pure(p) => {
                StateJson::Pure { re: p.0.iter().map(|z| z.re).collect(), im: p.0.iter().map(|z| z.im).collect() }
            }
            State::Mixed(m) => StateJson::Mixed { matrix: m.0 },
        }
    }
}

impl State {
    pub fn dim(&self) -> usize {
        match self {
            State::Pure(p) => p.dim(),
            State::Mixed(m) => m.dim(),
        }
    }

    pub fn density(&self) -> DensityMatrix {
        match self {
            State::Pure(p) => p.projector(),
            State::Mixed(m) => m.clone(),
        }
    }

    /// The state written in the energy eigenbasis of `h`.
    pub(crate) fn in_eigenbasis(&self, h: &Hamiltonian) -> Result<ComplexMatrix> {
        h.check_dim(self.dim())?;
        match self {
            State::Pure(p) => {
                let c = h.eigenvectors().adjoint().apply(p.amplitudes());
                Ok(ComplexMatrix::outer(&c))
            }
            State::Mixed(m) => h.to_eigenbasis(m.matrix()),
        }
    }
}

impl From<PureState> for State {
    fn from(p: PureState) -> Self {
        State::Pure(p)
    }
}

impl From<DensityMatrix> for State {
    fn from(m: DensityMatrix) -> Self {
        State::Mixed(m)
    }
}

/// `p_n = tr[P_n rho]` for each distinct energy.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyPopulations(pub Vec<f64>);

impl EnergyPopulations {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// Number of levels with weight above the population floor.
    pub fn support(&self) -> usize {
        let floor = tolerances().population_floor;
        self.0.iter().filter(|&&p| p >= floor).count()
    }
}

pub fn populations(state: &State, h: &Hamiltonian) -> Result<EnergyPopulations> {
    h.check_dim(state.dim())?;
    let d_e = h.spectrum().d_e();
    let mut p = vec![0.0; d_e];
    match state {
        State::Pure(psi) => {
            let c = h.eigenvectors().adjoint().apply(psi.amplitudes());
            for (k, ck) in c.iter().enumerate() {
                p[h.level_of(k)] += ck.norm_sqr();
            }
        }
        State::Mixed(rho) => {
            let v = h.eigenvectors();
            for k in 0..h.dim() {
                let col = v.column(k);
                p[h.level_of(k)] += rho.matrix().sandwich(&col, &col).re;
            }
        }
    }
    Ok(EnergyPopulations(p))
}

/// `d_eff = 1 / sum_n p_n^2`.
pub fn effective_dimension(p: &EnergyPopulations) -> f64 {
    1.0 / p.0.iter().map(|x| x * x).sum::<f64>()
}

/// `omega = sum_n P_n rho P_n`, the infinite-time average of `rho(t)`.
pub fn dephase(state: &State, h: &Hamiltonian) -> Result<DensityMatrix> {
    let mut r = state.in_eigenbasis(h)?;
    let n = h.dim();
    for a in 0..n {
        for b in 0..n {
            if h.level_of(a) != h.level_of(b) {
                r[(a, b)] = ZERO;
            }
        }
    }
    Ok(DensityMatrix(h.from_eigenbasis(&r)?.hermitian_part()))
}

/// `omega_T = <rho(t)>_T` over `[0, T]`, from the closed-form phase averages.
pub fn window_average_state(state: &State, h: &Hamiltonian, t: f64) -> Result<DensityMatrix> {
    if !(t > 0.0) {
        return Err(Error::NonPositiveT(t));
    }
    let mut r = state.in_eigenbasis(h)?;
    let n = h.dim();
    for a in 0..n {
        for b in 0..n {
            let (la, lb) = (h.level_of(a), h.level_of(b));
            if la != lb {
                let w = -(h.level_energy(a) - h.level_energy(b));
                r[(a, b)] *= phase_average(w, t, false);
            }
        }
    }
    Ok(DensityMatrix(h.from_eigenbasis(&r)?.hermitian_part()))
}

/// `psi(t) = exp(-i H t) psi`, applied as phases in the eigenbasis.
pub fn evolve(psi: &PureState, h: &Hamiltonian, t: f64) -> Result<PureState> {
    h.check_dim(psi.dim())?;
    let v = h.eigenvectors();
    let mut c = v.adjoint().apply(psi.amplitudes());
    for (k, ck) in c.iter_mut().enumerate() {
        *ck *= C64::from_polar(1.0, -h.level_energy(k) * t);
    }
    Ok(PureState(v.apply(&c)))
}

/// `|phi> = sum_k sqrt(lambda_k) |v_k> (x) |k>` on the doubled space, system
/// factor first.
pub fn purify(rho: &DensityMatrix) -> Result<PureState> {
    let eig = eig_hermitian(rho.matrix())?;
    let d = rho.dim();
    let mut phi = vec![ZERO; d * d];
    for (k, &lam) in eig.eigenvalues.iter().enumerate() {
        let w = lam.max(0.0).sqrt();
        if w == 0.0 {
            continue;
        }
        for i in 0..d {
            phi[i * d + k] += eig.eigenvectors[(i, k)] * w;
        }
    }
    PureState::normalized(phi)
}

/// The pure-state description used by the dynamics: one normalized vector
/// `|n> = P_n psi / |P_n psi|` per populated energy, with real weight
/// `c_n = |P_n psi|`. This realizes the non-degenerate Hamiltonian
/// `H' = sum_n E_n |n><n|` on which the dynamics actually takes place.
#[derive(Debug, Clone)]
pub struct EffectiveState {
    /// Level indices (into the Hamiltonian's spectrum) that were kept.
    pub levels: Vec<usize>,
    pub energies: Vec<f64>,
    pub weights: Vec<f64>,
    pub basis: Vec<Vec<C64>>,
}

impl EffectiveState {
    pub fn new(psi: &PureState, h: &Hamiltonian) -> Result<Self> {
        h.check_dim(psi.dim())?;
        let floor = tolerances().population_floor;
        let v = h.eigenvectors();
        let c = v.adjoint().apply(psi.amplitudes());
        let d = h.dim();
        let mut out = EffectiveState { levels: vec![], energies: vec![], weights: vec![], basis: vec![] };
        for n in 0..h.spectrum().d_e() {
            let members = h.level_members(n);
            let w2: f64 = members.clone().map(|k| c[k].norm_sqr()).sum();
            if w2 < floor {
                continue;
            }
            let w = w2.sqrt();
            let mut vec = vec![ZERO; d];
            for k in members {
                for (i, x) in vec.iter_mut().enumerate() {
                    *x += v[(i, k)] * c[k];
                }
            }
            vec.iter_mut().for_each(|x| *x /= w);
            out.levels.push(n);
            out.energies.push(h.spectrum().energies()[n]);
            out.weights.push(w);
            out.basis.push(vec);
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// `psi(t) = sum_n c_n exp(-i E_n t) |n>`.
    pub fn state_at(&self, t: f64) -> Vec<C64> {
        let d = self.basis.first().map_or(0, |b| b.len());
        let mut out = vec![ZERO; d];
        for ((b, &w), &e) in self.basis.iter().zip(&self.weights).zip(&self.energies) {
            let ph = C64::from_polar(w, -e * t);
            for (o, x) in out.iter_mut().zip(b) {
                *o += ph * x;
            }
        }
        out
    }

    /// `d_eff = 1 / sum_n c_n^4`.
    pub fn effective_dimension(&self) -> f64 {
        1.0 / self.weights.iter().map(|w| w.powi(4)).sum::<f64>()
    }

    /// `<j|A|i>` for all kept levels, indexed `[j][i]`.
    pub fn matrix_elements(&self, a: &ComplexMatrix) -> Vec<Vec<C64>> {
        let images: Vec<Vec<C64>> = self.basis.iter().map(|b| a.apply(b)).collect();
        self.basis.iter().map(|bj| images.iter().map(|ai| inner(bj, ai)).collect()).collect()
    }
}

/// `rho(t)` for a mixed state, `V (rho_E o phases) V^dagger`.
#[derive(Debug, Clone)]
pub struct MixedEvolution<'a> {
    h: &'a Hamiltonian,
    rho_e: ComplexMatrix,
}

impl<'a> MixedEvolution<'a> {
    pub fn new(rho: &DensityMatrix, h: &'a Hamiltonian) -> Result<Self> {
        Ok(Self { h, rho_e: h.to_eigenbasis(rho.matrix())? })
    }

    pub fn state_at(&self, t: f64) -> ComplexMatrix {
        let n = self.h.dim();
        let ph: Vec<C64> = (0..n).map(|k| C64::from_polar(1.0, -self.h.level_energy(k) * t)).collect();
        let r = ComplexMatrix::from_fn(n, n, |a, b| self.rho_e[(a, b)] * ph[a] * ph[b].conj());
        self.h.from_eigenbasis(&r).expect("dimension checked at construction")
    }
}

/// Tensor product of two pure states.
pub fn product_state(a: &PureState, b: &PureState) -> PureState {
    PureState(tensor_vec(&a.0, &b.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::operator_norm;

    fn plus() -> PureState {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        PureState::new(vec![C64::new(h, 0.0), C64::new(h, 0.0)]).unwrap()
    }

    fn qubit() -> Hamiltonian {
        Hamiltonian::diagonal(&[0.0, 1.0]).unwrap()
    }

    fn sigma_x() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
    }

    #[test]
    fn state_validation() {
        assert!(PureState::new(vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)]).is_err());
        assert!(PureState::normalized(vec![ZERO, ZERO]).is_err());
        assert!(DensityMatrix::new(ComplexMatrix::from_diag(&[0.5, 0.6])).is_err());
        assert!(DensityMatrix::new(ComplexMatrix::from_diag(&[1.5, -0.5])).is_err());
        assert!(DensityMatrix::new(ComplexMatrix::from_real_rows(&[&[0.5, 0.1], &[0.0, 0.5]])).is_err());
        assert!(DensityMatrix::new(ComplexMatrix::from_diag(&[0.25, 0.75])).is_ok());
    }

    #[test]
    fn state_json() {
        let s: State = serde_json::from_str(r#"{"type":"pure","re":[0.6,0.0],"im":[0.0,0.8]}"#).unwrap();
        assert_eq!(s.dim(), 2);
        let back: State = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
        let m: State =
            serde_json::from_str(r#"{"type":"mixed","matrix":{"rows":2,"cols":2,"re":[0.5,0,0,0.5],"im":[0,0,0,0]}}"#)
                .unwrap();
        assert!(matches!(m, State::Mixed(_)));
        assert!(serde_json::from_str::<State>(r#"{"type":"pure","re":[1.0,1.0],"im":[0,0]}"#).is_err());
    }

    #[test]
    fn populations_examples() {
        let h = Hamiltonian::diagonal(&[0.0, 1.0, 1.0, 3.0]).unwrap();
        let p = populations(&PureState::basis(4, 3).into(), &h).unwrap();
        assert_eq!(p.values(), &[0.0, 0.0, 1.0]);
        let uni =
            PureState::normalized(vec![C64::new(1.0, 0.0), ZERO, C64::new(1.0, 0.0), C64::new(1.0, 0.0)]).unwrap();
        let p = populations(&uni.into(), &h).unwrap();
        for x in p.values() {
            assert!((x - 1.0 / 3.0).abs() < 1e-15);
        }
        let p = populations(&DensityMatrix::maximally_mixed(4).into(), &h).unwrap();
        assert_eq!(p.values(), &[0.25, 0.5, 0.25]);
        assert!(populations(&PureState::basis(3, 0).into(), &h).is_err());
    }

    #[test]
    fn effective_dimension_examples() {
        assert_eq!(effective_dimension(&EnergyPopulations(vec![0.25; 4])), 4.0);
        assert_eq!(effective_dimension(&EnergyPopulations(vec![1.0])), 1.0);
        let d = effective_dimension(&EnergyPopulations(vec![0.5, 0.25, 0.25]));
        assert!((d - 8.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn dephase_examples() {
        let h = Hamiltonian::diagonal(&[0.0, 1.0, 2.5]).unwrap();
        let diag = DensityMatrix::new(ComplexMatrix::from_diag(&[0.2, 0.3, 0.5])).unwrap();
        let w = dephase(&diag.clone().into(), &h).unwrap();
        assert!(w.matrix().sub(diag.matrix()).max_abs() < 1e-15);

        let w = dephase(&plus().into(), &qubit()).unwrap();
        assert!(w.matrix().sub(&ComplexMatrix::from_diag(&[0.5, 0.5])).max_abs() < 1e-15);

        let psi = PureState::normalized(vec![C64::new(1.0, 0.0), C64::new(0.3, 0.4), C64::new(-0.2, 0.9)]).unwrap();
        let s: State = psi.into();
        let w = dephase(&s, &h).unwrap();
        let d_eff = effective_dimension(&populations(&s, &h).unwrap());
        assert!((w.purity() - 1.0 / d_eff).abs() < 1e-14);
    }

    #[test]
    fn dephase_keeps_coherence_inside_degenerate_level() {
        let h = Hamiltonian::diagonal(&[1.0, 1.0]).unwrap();
        let s: State = plus().into();
        let w = dephase(&s, &h).unwrap();
        assert!(w.matrix().sub(s.density().matrix()).max_abs() < 1e-15);
    }

    #[test]
    fn window_average_examples() {
        let s: State = plus().into();
        let w = window_average_state(&s, &qubit(), 2.0 * std::f64::consts::PI).unwrap();
        assert!(w.matrix().sub(&ComplexMatrix::from_diag(&[0.5, 0.5])).max_abs() < 1e-15);

        let eig: State = PureState::basis(2, 1).into();
        let w = window_average_state(&eig, &qubit(), 3.7).unwrap();
        assert!(w.matrix().sub(eig.density().matrix()).max_abs() < 1e-15);

        assert!(matches!(window_average_state(&s, &qubit(), 0.0), Err(Error::NonPositiveT(_))));
    }

    #[test]
    fn evolve_examples() {
        let h = qubit();
        assert_eq!(evolve(&plus(), &h, 0.0).unwrap(), plus());
        let e = PureState::basis(2, 1);
        let et = evolve(&e, &h, 1.3).unwrap();
        assert!((inner(et.amplitudes(), e.amplitudes()).norm() - 1.0).abs() < 1e-15);
        let at_pi = evolve(&plus(), &h, std::f64::consts::PI).unwrap();
        let x = at_pi.projector().expectation(&sigma_x()).re;
        assert!((x + 1.0).abs() < 1e-15);
    }

    #[test]
    fn purify_examples() {
        let psi = PureState::normalized(vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)]).unwrap();
        let phi = purify(&psi.projector()).unwrap();
        let red = crate::numerics::reduce_pure_first(phi.amplitudes(), (2, 2)).unwrap();
        assert!(red.sub(psi.projector().matrix()).max_abs() < 1e-12);

        let phi = purify(&DensityMatrix::maximally_mixed(2)).unwrap();
        let red = crate::numerics::reduce_pure_first(phi.amplitudes(), (2, 2)).unwrap();
        assert!(red.sub(&ComplexMatrix::from_diag(&[0.5, 0.5])).max_abs() < 1e-15);
        let ent = crate::numerics::reduce_pure_first(phi.amplitudes(), (2, 2)).unwrap();
        assert!((operator_norm(&ent).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn effective_state_matches_evolve() {
        let h = Hamiltonian::diagonal(&[0.0, 1.0, 1.0, 2.2]).unwrap();
        let psi = PureState::normalized(vec![
            C64::new(0.3, 0.1),
            C64::new(0.5, 0.0),
            C64::new(-0.1, 0.4),
            C64::new(0.2, -0.7),
        ])
        .unwrap();
        let eff = EffectiveState::new(&psi, &h).unwrap();
        assert_eq!(eff.len(), 3);
        let d_eff = effective_dimension(&populations(&psi.clone().into(), &h).unwrap());
        assert!((eff.effective_dimension() - d_eff).abs() < 1e-13);
        for &t in &[0.0, 0.7, 13.0] {
            let a = eff.state_at(t);
            let b = evolve(&psi, &h, t).unwrap();
            for (x, y) in a.iter().zip(b.amplitudes()) {
                assert!((x - y).norm() < 1e-14);
            }
        }
    }
}
