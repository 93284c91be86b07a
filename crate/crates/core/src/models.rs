//! Seeded instance generators: Hamiltonian families, states, observables and
//! measurements.
//!
//! Randomness comes from ChaCha8 keyed by the seed, with one stream per
//! [`Purpose`], so the draws for one purpose never shift those of another.

use crate::distinguish::{MeasurementSet, Povm};
use crate::error::{Error, Result};
use crate::numerics::{eig_hermitian, tensor_vec, ComplexMatrix, EigenDecomposition, C64};
use crate::quantum_state::{DensityMatrix, PureState, State};
use crate::spectral::{Hamiltonian, Spectrum};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Largest dimension for families that diagonalize a dense matrix.
pub const MAX_DENSE_DIM: usize = 256;
pub const MAX_CHAIN_SITES: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Spectrum = 1,
    State = 2,
    Observable = 3,
    Measurement = 4,
}

pub fn stream(seed: u64, purpose: Purpose) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(purpose as u64);
    rng
}

fn default_spacing() -> f64 {
    1.0
}

/// A Hamiltonian family with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    /// `E_n = n * spacing`, `n = 0..levels`.
    EquallySpaced {
        levels: usize,
        #[serde(default = "default_spacing")]
        spacing: f64,
    },
    /// Complex Hermitian with independent Gaussian entries, off-diagonal
    /// variance `1/d`.
    Gue { d: usize },
    /// Open chain `sum_i (jx X_i X_{i+1} + jy Y_i Y_{i+1} + jz Z_i Z_{i+1})
    /// + sum_i (h_i Z_i + hx X_i)` with `h_i = hz + disorder * u_i`,
    /// `u_i` uniform in `[-1, 1)`. Site 0 is the first tensor factor.
    SpinChainHeisenberg {
        n: usize,
        #[serde(default)]
        jx: f64,
        #[serde(default)]
        jy: f64,
        #[serde(default)]
        jz: f64,
        #[serde(default)]
        hz: f64,
        #[serde(default)]
        hx: f64,
        #[serde(default)]
        disorder: f64,
    },
    /// `H_A (x) I + I (x) H_B`; the parts are generated with seeds derived from
    /// the outer seed.
    CompositeNoninteracting { a: Box<Family>, b: Box<Family> },
    Custom {
        #[serde(default)]
        energies: Option<Vec<f64>>,
        #[serde(default)]
        multiplicities: Option<Vec<usize>>,
        #[serde(default)]
        matrix: Option<ComplexMatrix>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    #[serde(flatten)]
    pub family: Family,
    #[serde(default)]
    pub seed: u64,
}

/// A generated instance.
#[derive(Debug, Clone)]
pub struct Model {
    pub hamiltonian: Hamiltonian,
    /// `(d_A, d_B)` when the Hilbert space is a tensor product by construction.
    pub factorization: Option<(usize, usize)>,
}

impl Model {
    pub fn spectrum(&self) -> &Spectrum {
        self.hamiltonian.spectrum()
    }
}

pub fn generate(spec: &ModelSpec) -> Result<Model> {
    generate_family(&spec.family, spec.seed)
}

fn bad(msg: impl Into<String>) -> Error {
    Error::BadParameters(msg.into())
}

fn generate_family(family: &Family, seed: u64) -> Result<Model> {
    let plain = |h: Hamiltonian| Model { hamiltonian: h, factorization: None };
    match family {
        Family::EquallySpaced { levels, spacing } => {
            if *levels == 0 || !(*spacing > 0.0) || !spacing.is_finite() {
                return Err(bad("equally_spaced needs levels >= 1 and spacing > 0"));
            }
            Ok(plain(Hamiltonian::from_spectrum(&Spectrum::equally_spaced(*levels, *spacing)?)?))
        }
        Family::Gue { d } => {
            check_dense(*d)?;
            if *d == 0 {
                return Err(bad("gue needs d >= 1"));
            }
            let m = gue_matrix(*d, &mut stream(seed, Purpose::Spectrum));
            Ok(plain(Hamiltonian::from_matrix(&m)?))
        }
        Family::SpinChainHeisenberg { n, jx, jy, jz, hz, hx, disorder } => {
            if *n == 0 {
                return Err(bad("spin chain needs n >= 1"));
            }
            if *n > MAX_CHAIN_SITES {
                return Err(Error::TooLarge(format!("{n} sites exceeds {MAX_CHAIN_SITES}")));
            }
            let params = [*jx, *jy, *jz, *hz, *hx, *disorder];
            if params.iter().any(|p| !p.is_finite()) {
                return Err(bad("spin chain parameters must be finite"));
            }
            let mut rng = stream(seed, Purpose::Spectrum);
            let fields: Vec<f64> = (0..*n).map(|_| hz + disorder * rng.random_range(-1.0..1.0)).collect();
            let m = spin_chain_matrix(*n, [*jx, *jy, *jz], &fields, *hx);
            Ok(plain(Hamiltonian::from_matrix(&m)?))
        }
        Family::CompositeNoninteracting { a, b } => {
            let ma = generate_family(a, derive_seed(seed, 0))?;
            let mb = generate_family(b, derive_seed(seed, 1))?;
            let (da, db) = (ma.hamiltonian.dim(), mb.hamiltonian.dim());
            if da * db > 1 << MAX_CHAIN_SITES {
                return Err(Error::TooLarge(format!("composite dimension {}", da * db)));
            }
            Ok(Model { hamiltonian: composite(&ma.hamiltonian, &mb.hamiltonian)?, factorization: Some((da, db)) })
        }
        Family::Custom { energies, multiplicities, matrix } => match (energies, matrix) {
            (Some(e), None) => {
                let mult = multiplicities.clone().unwrap_or_else(|| vec![1; e.len()]);
                Ok(plain(Hamiltonian::from_spectrum(&Spectrum::new(e, &mult)?)?))
            }
            (None, Some(m)) if multiplicities.is_none() => {
                check_dense(m.rows())?;
                Ok(plain(Hamiltonian::from_matrix(m)?))
            }
            _ => Err(bad("custom needs exactly one of energies or matrix")),
        },
    }
}

fn check_dense(d: usize) -> Result<()> {
    if d > MAX_DENSE_DIM {
        return Err(Error::TooLarge(format!("dimension {d} exceeds {MAX_DENSE_DIM}")));
    }
    Ok(())
}

fn derive_seed(seed: u64, part: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1000 + part);
    rng.random()
}

/// Exact eigendata of `H_A (x) I + I (x) H_B` from the factors' eigendata.
pub fn composite(ha: &Hamiltonian, hb: &Hamiltonian) -> Result<Hamiltonian> {
    let (da, db) = (ha.dim(), hb.dim());
    let mut pairs: Vec<(f64, usize, usize)> = (0..da)
        .flat_map(|i| (0..db).map(move |j| (i, j)))
        .map(|(i, j)| (ha.eigenvalues()[i] + hb.eigenvalues()[j], i, j))
        .collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    let d = da * db;
    let mut vectors = ComplexMatrix::zeros(d, d);
    for (col, &(_, i, j)) in pairs.iter().enumerate() {
        let v = tensor_vec(&ha.eigenvectors().column(i), &hb.eigenvectors().column(j));
        for (row, x) in v.into_iter().enumerate() {
            vectors[(row, col)] = x;
        }
    }
    Hamiltonian::from_eigen(EigenDecomposition {
        eigenvalues: pairs.iter().map(|p| p.0).collect(),
        eigenvectors: vectors,
    })
}

fn gaussian(rng: &mut impl Rng, var: f64) -> f64 {
    var.sqrt() * rng.sample::<f64, _>(StandardNormal)
}

fn complex_gaussian(rng: &mut impl Rng) -> C64 {
    C64::new(gaussian(rng, 0.5), gaussian(rng, 0.5))
}

/// GUE sample with `E|H_ij|^2 = 1/d`.
pub fn gue_matrix(d: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let var = 1.0 / d as f64;
    let mut m = ComplexMatrix::zeros(d, d);
    for i in 0..d {
        m[(i, i)] = C64::new(gaussian(rng, var), 0.0);
        for j in i + 1..d {
            let z = complex_gaussian(rng) * var.sqrt();
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    m
}

/// Dense chain Hamiltonian; bit `n - 1 - i` of a basis index is site `i`,
/// with bit value 0 the `Z = +1` state.
pub fn spin_chain_matrix(n: usize, j: [f64; 3], fields: &[f64], hx: f64) -> ComplexMatrix {
    let d = 1usize << n;
    let bit = |i: usize| 1usize << (n - 1 - i);
    let sign = |s: usize, i: usize| if s & bit(i) == 0 { 1.0 } else { -1.0 };
    let mut m = ComplexMatrix::zeros(d, d);
    for s in 0..d {
        let mut diag = 0.0;
        for i in 0..n {
            diag += fields[i] * sign(s, i);
            if hx != 0.0 {
                m[(s ^ bit(i), s)] += C64::new(hx, 0.0);
            }
        }
        for i in 0..n.saturating_sub(1) {
            let zz = sign(s, i) * sign(s, i + 1);
            diag += j[2] * zz;
            // X X and Y Y both flip the pair; Y Y carries -s_i s_{i+1}.
            let amp = j[0] - j[1] * zz;
            if amp != 0.0 {
                m[(s ^ bit(i) ^ bit(i + 1), s)] += C64::new(amp, 0.0);
            }
        }
        m[(s, s)] += C64::new(diag, 0.0);
    }
    m
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StateKind {
    HaarPure,
    RankRMixed {
        rank: usize,
    },
    /// Populations `1/levels` on a random subset of energy levels, with random
    /// phases and a random direction inside each degenerate level.
    EnergyUniform {
        levels: usize,
    },
}

pub fn haar_pure(d: usize, rng: &mut impl Rng) -> PureState {
    loop {
        let v: Vec<C64> = (0..d).map(|_| complex_gaussian(rng)).collect();
        if let Ok(p) = PureState::normalized(v) {
            return p;
        }
    }
}

pub fn rank_r_mixed(d: usize, rank: usize, rng: &mut impl Rng) -> Result<DensityMatrix> {
    if rank == 0 || rank > d {
        return Err(bad(format!("rank {rank} outside 1..={d}")));
    }
    let g = ComplexMatrix::from_fn(d, rank, |_, _| complex_gaussian(rng));
    let w = g.matmul(&g.adjoint());
    let tr = w.trace().re;
    DensityMatrix::new(w.scale(C64::new(1.0 / tr, 0.0)).hermitian_part())
}

pub fn energy_uniform(h: &Hamiltonian, levels: usize, rng: &mut impl Rng) -> Result<PureState> {
    let d_e = h.spectrum().d_e();
    if levels == 0 || levels > d_e {
        return Err(bad(format!("levels {levels} outside 1..={d_e}")));
    }
    let mut chosen = sample(rng, d_e, levels).into_vec();
    chosen.sort_unstable();
    let weight = (1.0 / levels as f64).sqrt();
    let v = h.eigenvectors();
    let mut psi = vec![C64::new(0.0, 0.0); h.dim()];
    for n in chosen {
        let members = h.level_members(n);
        let dir: Vec<C64> = haar_pure(members.len(), rng).amplitudes().to_vec();
        for (k, c) in members.zip(dir) {
            for (row, x) in psi.iter_mut().enumerate() {
                *x += weight * c * v[(row, k)];
            }
        }
    }
    PureState::normalized(psi)
}

/// A seeded state of the given kind on the Hilbert space of `h`.
pub fn random_state(h: &Hamiltonian, kind: StateKind, seed: u64) -> Result<State> {
    let mut rng = stream(seed, Purpose::State);
    let d = h.dim();
    Ok(match kind {
        StateKind::HaarPure => haar_pure(d, &mut rng).into(),
        StateKind::RankRMixed { rank } => rank_r_mixed(d, rank, &mut rng)?.into(),
        StateKind::EnergyUniform { levels } => energy_uniform(h, levels, &mut rng)?.into(),
    })
}

/// Random Hermitian observable with operator norm of order 1.
pub fn random_observable(d: usize, rng: &mut impl Rng) -> ComplexMatrix {
    gue_matrix(d, rng)
}

/// `outcomes` random PSD operators `B_a`, normalized as
/// `S^{-1/2} B_a S^{-1/2}` with `S = sum_a B_a`.
pub fn random_povm(d: usize, outcomes: usize, rng: &mut impl Rng) -> Result<Povm> {
    if outcomes == 0 || d == 0 {
        return Err(bad("POVM needs at least one outcome and d >= 1"));
    }
    // Ranks add up to at least d so the sum is invertible.
    let mut ranks: Vec<usize> = (0..outcomes).map(|_| rng.random_range(1..=d)).collect();
    let head: usize = ranks[..outcomes - 1].iter().sum();
    let last = &mut ranks[outcomes - 1];
    *last = (*last).max(d.saturating_sub(head)).min(d);
    let raw: Vec<ComplexMatrix> = ranks
        .iter()
        .map(|&rank| {
            let g = ComplexMatrix::from_fn(d, rank, |_, _| complex_gaussian(rng));
            g.matmul(&g.adjoint())
        })
        .collect();
    let total = raw.iter().skip(1).fold(raw[0].clone(), |acc, b| acc.add(b));
    let eig = eig_hermitian(&total.hermitian_part())?;
    if eig.eigenvalues[0] <= 1e-12 * eig.eigenvalues[d - 1] {
        return Err(bad("random POVM outcomes are linearly dependent"));
    }
    let inv_sqrt: Vec<f64> = eig.eigenvalues.iter().map(|l| 1.0 / l.sqrt()).collect();
    let s = eig.eigenvectors.matmul(&ComplexMatrix::from_diag(&inv_sqrt)).matmul(&eig.eigenvectors.adjoint());
    Povm::new(raw.iter().map(|b| s.matmul(b).matmul(&s).hermitian_part()).collect())
}

/// `povms` random POVMs with 2 to 4 outcomes each, at most `max_outcomes`
/// outcomes in total.
pub fn random_measurement_set(
    d: usize,
    povms: usize,
    max_outcomes: usize,
    rng: &mut impl Rng,
) -> Result<MeasurementSet> {
    if povms * 2 > max_outcomes {
        return Err(bad(format!("{povms} POVMs need at least {} outcomes", 2 * povms)));
    }
    let mut left = max_outcomes;
    let mut out = Vec::with_capacity(povms);
    for k in 0..povms {
        let reserve = 2 * (povms - k - 1);
        let hi = 4.min(left - reserve);
        let n = rng.random_range(2..=hi);
        left -= n;
        out.push(random_povm(d, n, rng)?);
    }
    MeasurementSet::new(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::operator_norm;
    use crate::quantum_state::{effective_dimension, populations};
    use crate::spectral::build_gaps;

    fn spec(json: &str) -> ModelSpec {
        serde_json::from_str(json).unwrap()
    }

    #[test]
    fn equally_spaced_gap_degeneracy() {
        let m = generate(&spec(r#"{"family":"equally_spaced","levels":5}"#)).unwrap();
        assert_eq!(build_gaps(m.spectrum()).max_gap_degeneracy().unwrap(), 4);
    }

    #[test]
    fn gue_is_gap_nondegenerate_and_seeded() {
        let s = spec(r#"{"family":"gue","d":16,"seed":7}"#);
        let m = generate(&s).unwrap();
        assert_eq!(m.spectrum().d_e(), 16);
        assert_eq!(build_gaps(m.spectrum()).max_gap_degeneracy().unwrap(), 1);
        assert_eq!(generate(&s).unwrap().hamiltonian.eigenvalues(), m.hamiltonian.eigenvalues());
        let other = generate(&spec(r#"{"family":"gue","d":16,"seed":8}"#)).unwrap();
        assert_ne!(other.hamiltonian.eigenvalues(), m.hamiltonian.eigenvalues());
    }

    #[test]
    fn composite_of_two_qubits_is_gap_degenerate() {
        let m = generate(&spec(
            r#"{"family":"composite_noninteracting","a":{"family":"equally_spaced","levels":2},"b":{"family":"equally_spaced","levels":2}}"#,
        ))
        .unwrap();
        assert_eq!(m.factorization, Some((2, 2)));
        assert_eq!(m.spectrum().energies(), &[0.0, 1.0, 2.0]);
        assert_eq!(m.spectrum().multiplicities(), &[1, 2, 1]);
        assert!(build_gaps(m.spectrum()).max_gap_degeneracy().unwrap() >= 2);
    }

    #[test]
    fn chain_matrix_two_sites() {
        // XX + YY + ZZ on two sites: triplet at +1, singlet at -3.
        let m = spin_chain_matrix(2, [1.0, 1.0, 1.0], &[0.0, 0.0], 0.0);
        let e = eig_hermitian(&m).unwrap().eigenvalues;
        let expect = [-3.0, 1.0, 1.0, 1.0];
        assert!(e.iter().zip(expect).all(|(a, b)| (a - b).abs() < 1e-12), "{e:?}");
        let field = spin_chain_matrix(1, [0.0; 3], &[0.5], 0.0);
        assert_eq!(field, ComplexMatrix::from_diag(&[0.5, -0.5]));
        let tx = spin_chain_matrix(1, [0.0; 3], &[0.0], 2.0);
        assert_eq!(tx, ComplexMatrix::from_real_rows(&[&[0.0, 2.0], &[2.0, 0.0]]));
    }

    #[test]
    fn size_and_parameter_errors() {
        assert!(matches!(generate(&spec(r#"{"family":"gue","d":257}"#)), Err(Error::TooLarge(_))));
        assert!(matches!(generate(&spec(r#"{"family":"spin_chain_heisenberg","n":13}"#)), Err(Error::TooLarge(_))));
        assert!(matches!(generate(&spec(r#"{"family":"equally_spaced","levels":0}"#)), Err(Error::BadParameters(_))));
        assert!(generate(&spec(r#"{"family":"custom"}"#)).is_err());
        assert!(serde_json::from_str::<ModelSpec>(r#"{"family":"nope"}"#).is_err());
    }

    #[test]
    fn state_examples() {
        let h = Hamiltonian::from_spectrum(&Spectrum::equally_spaced(12, 1.0).unwrap()).unwrap();
        let s = random_state(&h, StateKind::EnergyUniform { levels: 8 }, 3).unwrap();
        let d_eff = effective_dimension(&populations(&s, &h).unwrap());
        assert!((d_eff - 8.0).abs() < 1e-10);
        let State::Pure(p) = random_state(&h, StateKind::HaarPure, 3).unwrap() else { panic!() };
        assert!((crate::numerics::vec_norm(p.amplitudes()) - 1.0).abs() < 1e-12);
        let State::Mixed(r) = random_state(&h, StateKind::RankRMixed { rank: 3 }, 3).unwrap() else { panic!() };
        assert!((r.matrix().trace().re - 1.0).abs() < 1e-12);
        let eig = eig_hermitian(r.matrix()).unwrap();
        assert_eq!(eig.eigenvalues.iter().filter(|&&l| l > 1e-10).count(), 3);
        assert!(random_state(&h, StateKind::RankRMixed { rank: 13 }, 3).is_err());
    }

    #[test]
    fn random_povms_are_valid_with_bounded_centered_norm() {
        let mut rng = stream(11, Purpose::Measurement);
        for d in 1..6 {
            let ms = random_measurement_set(d, 3, 12, &mut rng).unwrap();
            assert!(ms.total_outcomes() <= 12 && ms.povms.len() == 3);
            let half = ComplexMatrix::identity(d).scale(C64::new(0.5, 0.0));
            for m in ms.povms.iter().flat_map(|p| p.outcomes()) {
                assert!(operator_norm(&m.sub(&half)).unwrap() <= 0.5 + 1e-12);
            }
        }
    }
}
