//! Energy levels and energy-gap statistics.
//!
//! Exact reals become floating point here, so equality of energies and of gaps
//! is decided by single-linkage clustering of sorted values with tolerance
//! `deg_tol = degeneracy_rel * max(1, spectral range)`. Gap values inside one
//! cluster are treated as exactly degenerate everywhere downstream (gap
//! density, `D_G`, `epsilon_min`, and the degenerate branch of the gap matrix).

use crate::error::{Error, Result};
use crate::numerics::{eig_hermitian, ComplexMatrix, EigenDecomposition};
use crate::tolerance::tolerances;
use serde::{Deserialize, Serialize};
use std::ops::Range;

/// Distinct energies (strictly ascending) with eigenspace multiplicities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpectrumJson", into = "SpectrumJson")]
pub struct Spectrum {
    energies: Vec<f64>,
    multiplicities: Vec<usize>,
    deg_tol: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpectrumJson {
    energies: Vec<f64>,
    #[serde(default)]
    multiplicities: Option<Vec<usize>>,
}

impl TryFrom<SpectrumJson> for Spectrum {
    type Error = Error;

    fn try_from(s: SpectrumJson) -> Result<Self> {
        let mult = s.multiplicities.unwrap_or_else(|| vec![1; s.energies.len()]);
        Spectrum::new(&s.energies, &mult)
    }
}

impl From<Spectrum> for SpectrumJson {
    fn from(s: Spectrum) -> Self {
        SpectrumJson { energies: s.energies, multiplicities: Some(s.multiplicities) }
    }
}

/// Degeneracy tolerance for a set of values spanning `range`.
pub fn degeneracy_tolerance(range: f64) -> f64 {
    tolerances().degeneracy_rel * range.max(1.0)
}

/// Single-linkage clusters of an ascending slice.
pub(crate) fn cluster_sorted(values: &[f64], tol: f64) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=values.len() {
        if i == values.len() || values[i] - values[i - 1] > tol {
            if i > start {
                out.push(start..i);
            }
            start = i;
        }
    }
    out
}

impl Spectrum {
    /// Sorts, then merges energies closer than `deg_tol` (weighted mean, summed
    /// multiplicities).
    pub fn new(energies: &[f64], multiplicities: &[usize]) -> Result<Self> {
        if energies.len() != multiplicities.len() {
            return Err(Error::DimensionMismatch { expected: energies.len(), got: multiplicities.len() });
        }
        if energies.is_empty() {
            return Err(Error::BadParameters("spectrum has no energies".into()));
        }
        if let Some(e) = energies.iter().find(|e| !e.is_finite()) {
            return Err(Error::BadParameters(format!("non-finite energy {e}")));
        }
        if multiplicities.contains(&0) {
            return Err(Error::BadParameters("multiplicities must be positive".into()));
        }
        let mut pairs: Vec<(f64, usize)> = energies.iter().copied().zip(multiplicities.iter().copied()).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let sorted: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let deg_tol = degeneracy_tolerance(sorted[sorted.len() - 1] - sorted[0]);
        let mut e = Vec::new();
        let mut m = Vec::new();
        for r in cluster_sorted(&sorted, deg_tol) {
            let count: usize = pairs[r.clone()].iter().map(|p| p.1).sum();
            let mean = pairs[r].iter().map(|p| p.0 * p.1 as f64).sum::<f64>() / count as f64;
            e.push(mean);
            m.push(count);
        }
        Ok(Self { energies: e, multiplicities: m, deg_tol })
    }

    pub fn nondegenerate(energies: &[f64]) -> Result<Self> {
        Self::new(energies, &vec![1; energies.len()])
    }

    /// `E_n = n * spacing`, `n = 0..levels`.
    pub fn equally_spaced(levels: usize, spacing: f64) -> Result<Self> {
        let e: Vec<f64> = (0..levels).map(|n| n as f64 * spacing).collect();
        Self::nondegenerate(&e)
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn multiplicities(&self) -> &[usize] {
        &self.multiplicities
    }

    /// Number of distinct energies.
    pub fn d_e(&self) -> usize {
        self.energies.len()
    }

    /// Hilbert-space dimension.
    pub fn dim(&self) -> usize {
        self.multiplicities.iter().sum()
    }

    pub fn range(&self) -> f64 {
        self.energies[self.energies.len() - 1] - self.energies[0]
    }

    pub fn deg_tol(&self) -> f64 {
        self.deg_tol
    }
}

/// A Hamiltonian held by its eigen-decomposition, with each eigenvector
/// assigned to one distinct energy level.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    eig: EigenDecomposition,
    spectrum: Spectrum,
    level_of: Vec<usize>,
    levels: Vec<Range<usize>>,
}

impl Hamiltonian {
    pub fn from_matrix(h: &ComplexMatrix) -> Result<Self> {
        Self::from_eigen(eig_hermitian(h)?)
    }

    /// Eigenvalues must be ascending.
    pub fn from_eigen(eig: EigenDecomposition) -> Result<Self> {
        let n = eig.dim();
        if n == 0 {
            return Err(Error::BadParameters("empty Hamiltonian".into()));
        }
        if eig.eigenvalues.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::BadParameters("eigenvalues must be ascending".into()));
        }
        let vals = &eig.eigenvalues;
        let deg_tol = degeneracy_tolerance(vals[n - 1] - vals[0]);
        let levels = cluster_sorted(vals, deg_tol);
        let mut level_of = vec![0; n];
        let mut energies = Vec::with_capacity(levels.len());
        let mut mult = Vec::with_capacity(levels.len());
        for (l, r) in levels.iter().enumerate() {
            for k in r.clone() {
                level_of[k] = l;
            }
            energies.push(vals[r.clone()].iter().sum::<f64>() / r.len() as f64);
            mult.push(r.len());
        }
        let spectrum = Spectrum { energies, multiplicities: mult, deg_tol };
        Ok(Self { eig, spectrum, level_of, levels })
    }

    /// Diagonal Hamiltonian in the computational basis.
    pub fn diagonal(energies: &[f64]) -> Result<Self> {
        let n = energies.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| energies[a].total_cmp(&energies[b]));
        let eigenvalues = order.iter().map(|&k| energies[k]).collect();
        let eigenvectors =
            ComplexMatrix::from_fn(
                n,
                n,
                |i, j| {
                    if i == order[j] {
                        crate::numerics::ONE
                    } else {
                        crate::numerics::ZERO
                    }
                },
            );
        Self::from_eigen(EigenDecomposition { eigenvalues, eigenvectors })
    }

    /// Diagonal Hamiltonian with each energy repeated by its multiplicity.
    pub fn from_spectrum(s: &Spectrum) -> Result<Self> {
        let e: Vec<f64> =
            s.energies.iter().zip(&s.multiplicities).flat_map(|(&e, &m)| std::iter::repeat_n(e, m)).collect();
        Self::diagonal(&e)
    }

    pub fn dim(&self) -> usize {
        self.eig.dim()
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn eigen(&self) -> &EigenDecomposition {
        &self.eig
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eig.eigenvalues
    }

    pub fn eigenvectors(&self) -> &ComplexMatrix {
        &self.eig.eigenvectors
    }

    /// Level index of eigenvector `k`.
    pub fn level_of(&self, k: usize) -> usize {
        self.level_of[k]
    }

    /// Eigenvector indices belonging to level `n`.
    pub fn level_members(&self, n: usize) -> Range<usize> {
        self.levels[n].clone()
    }

    /// Energy of eigenvector `k` after level merging.
    pub fn level_energy(&self, k: usize) -> f64 {
        self.spectrum.energies[self.level_of[k]]
    }

    pub fn matrix(&self) -> ComplexMatrix {
        self.eig.reconstruct()
    }

    /// `U^dagger X U`: an operator expressed in the energy eigenbasis.
    pub fn to_eigenbasis(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check_dim(x.rows())?;
        let v = self.eigenvectors();
        Ok(v.adjoint().matmul(x).matmul(v))
    }

    pub fn from_eigenbasis(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check_dim(x.rows())?;
        let v = self.eigenvectors();
        Ok(v.matmul(x).matmul(&v.adjoint()))
    }

    pub(crate) fn check_dim(&self, d: usize) -> Result<()> {
        if d != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: d });
        }
        Ok(())
    }
}

/// One equivalence class of degenerate gaps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapClass {
    pub value: f64,
    pub count: usize,
}

/// The labelled multiset of energy gaps `G_(i,j) = E_i - E_j`, `i != j`.
#[derive(Debug, Clone)]
pub struct GapSet {
    labels: Vec<(usize, usize)>,
    values: Vec<f64>,
    class_of: Vec<usize>,
    classes: Vec<GapClass>,
    d_e: usize,
    deg_tol: f64,
}

/// Enumerates all ordered pairs `(i, j)`, `i != j` (0-based), lexicographically.
pub fn build_gaps(s: &Spectrum) -> GapSet {
    let e = s.energies();
    let d_e = e.len();
    let mut labels = Vec::with_capacity(d_e * d_e.saturating_sub(1));
    let mut values = Vec::with_capacity(labels.capacity());
    for i in 0..d_e {
        for j in 0..d_e {
            if i != j {
                labels.push((i, j));
                values.push(e[i] - e[j]);
            }
        }
    }
    GapSet::from_labelled(labels, values, d_e, s.deg_tol())
}

impl GapSet {
    fn from_labelled(labels: Vec<(usize, usize)>, values: Vec<f64>, d_e: usize, deg_tol: f64) -> Self {
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let sorted: Vec<f64> = order.iter().map(|&k| values[k]).collect();
        let mut class_of = vec![0; values.len()];
        let mut classes = Vec::new();
        for (c, r) in cluster_sorted(&sorted, deg_tol).into_iter().enumerate() {
            for &k in &order[r.clone()] {
                class_of[k] = c;
            }
            let mean = sorted[r.clone()].iter().sum::<f64>() / r.len() as f64;
            classes.push(GapClass { value: mean, count: r.len() });
        }
        Self { labels, values, class_of, classes, d_e, deg_tol }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn labels(&self) -> &[(usize, usize)] {
        &self.labels
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn d_e(&self) -> usize {
        self.d_e
    }

    pub fn deg_tol(&self) -> f64 {
        self.deg_tol
    }

    /// Degeneracy classes, ascending by value.
    pub fn classes(&self) -> &[GapClass] {
        &self.classes
    }

    pub fn class_of(&self, alpha: usize) -> usize {
        self.class_of[alpha]
    }

    /// Whether two labelled gaps are (numerically) equal.
    pub fn degenerate(&self, alpha: usize, beta: usize) -> bool {
        self.class_of[alpha] == self.class_of[beta]
    }

    /// Index of label `(i, j)` in the lexicographic enumeration.
    pub fn index_of(&self, i: usize, j: usize) -> usize {
        debug_assert!(i != j && i < self.d_e && j < self.d_e);
        i * (self.d_e - 1) + if j > i { j - 1 } else { j }
    }

    /// Largest gap minus smallest gap.
    pub fn full_range(&self) -> f64 {
        match (self.classes.first(), self.classes.last()) {
            (Some(a), Some(b)) => b.value - a.value,
            _ => 0.0,
        }
    }

    /// Largest `|G_alpha - G_beta|`, the fastest frequency in a squared deviation.
    pub fn max_frequency(&self) -> f64 {
        self.full_range()
    }

    /// Maximum number of gaps in any half-open window `[E, E + eps)`.
    pub fn gap_density(&self, eps: f64) -> Result<usize> {
        if !(eps > 0.0) {
            return Err(Error::NonPositiveEpsilon(eps));
        }
        let c = &self.classes;
        let mut best = 0;
        let mut hi = 0;
        let mut inside = 0;
        for lo in 0..c.len() {
            // [v, v + eps) always holds v, even when eps is below one ulp of v.
            if hi <= lo {
                hi = lo + 1;
                inside = c[lo].count;
            }
            let edge = c[lo].value + eps;
            while hi < c.len() && c[hi].value < edge {
                inside += c[hi].count;
                hi += 1;
            }
            best = best.max(inside);
            inside -= c[lo].count;
        }
        Ok(best)
    }

    /// `D_G`, the size of the largest degeneracy class.
    pub fn max_gap_degeneracy(&self) -> Result<usize> {
        self.classes.iter().map(|c| c.count).max().ok_or(Error::EmptyGapSet)
    }

    /// Smallest spacing between distinct gap values.
    pub fn epsilon_min(&self) -> Result<f64> {
        self.classes.windows(2).map(|w| w[1].value - w[0].value).min_by(f64::total_cmp).ok_or(Error::AllGapsEqual)
    }
}
