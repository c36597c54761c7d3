//! Truncated multimode Fock-space states and density operators.
//!
//! Multimode pure states are stored as sparse amplitude maps keyed by
//! occupation tuples (lexicographic order, mode 1 most significant), while
//! single-mode density operators are small dense matrices. Sub-normalized
//! states are first-class: a squared norm (or trace) below one encodes the
//! post-selection probability, and normalization is always explicit.

use std::collections::BTreeMap;

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::detectors::PovmElement;
use crate::error::{Error, Result};
use crate::numeric::hermitian_eigenvalues;

pub const HERMITICITY_TOL: f64 = 1e-12;
pub const EIGENVALUE_TOL: f64 = -1e-10;
pub const NORM_TOL: f64 = 1e-12;

/// Occupation numbers for a multimode Fock basis state.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FockBasisState {
    occupations: Vec<u8>,
}

impl FockBasisState {
    pub fn new(occupations: Vec<u8>) -> Self {
        Self { occupations }
    }

    pub fn occupations(&self) -> &[u8] {
        &self.occupations
    }

    pub fn mode_count(&self) -> usize {
        self.occupations.len()
    }

    pub fn total_photons(&self) -> u32 {
        self.occupations.iter().map(|&n| n as u32).sum()
    }
}

/// A (possibly sub-normalized) pure state on a truncated multimode Fock space.
#[derive(Debug, Clone)]
pub struct PureState {
    mode_count: usize,
    cutoff: u8,
    amplitudes: BTreeMap<FockBasisState, C64>,
}

impl PureState {
    /// State with a single basis-state amplitude of one.
    pub fn basis(occupations: &[u8], cutoff: u8) -> Result<Self> {
        let mut s = Self {
            mode_count: occupations.len(),
            cutoff,
            amplitudes: BTreeMap::new(),
        };
        s.set(occupations, C64::new(1.0, 0.0))?;
        Ok(s)
    }

    /// Single-mode state from amplitudes indexed by photon number.
    pub fn single_mode(amplitudes: &[C64], cutoff: u8) -> Result<Self> {
        let mut s = Self {
            mode_count: 1,
            cutoff,
            amplitudes: BTreeMap::new(),
        };
        for (n, &a) in amplitudes.iter().enumerate() {
            if a != C64::new(0.0, 0.0) {
                s.set(&[n as u8], a)?;
            }
        }
        Ok(s)
    }

    /// Empty (zero) state, useful as an accumulator.
    pub fn zero(mode_count: usize, cutoff: u8) -> Self {
        Self {
            mode_count,
            cutoff,
            amplitudes: BTreeMap::new(),
        }
    }

    fn set(&mut self, occupations: &[u8], amplitude: C64) -> Result<()> {
        if occupations.len() != self.mode_count {
            return Err(Error::ModeCountMismatch(occupations.len(), self.mode_count));
        }
        for &n in occupations {
            if n > self.cutoff {
                return Err(Error::OccupationAboveCutoff {
                    occupation: n as usize,
                    cutoff: self.cutoff as usize,
                });
            }
        }
        self.amplitudes
            .insert(FockBasisState::new(occupations.to_vec()), amplitude);
        Ok(())
    }

    pub fn mode_count(&self) -> usize {
        self.mode_count
    }

    pub fn cutoff(&self) -> u8 {
        self.cutoff
    }

    pub fn amplitude(&self, occupations: &[u8]) -> C64 {
        self.amplitudes
            .get(&FockBasisState::new(occupations.to_vec()))
            .copied()
            .unwrap_or_default()
    }

    /// Nonzero amplitudes in lexicographic basis order.
    pub fn iter(&self) -> impl Iterator<Item = (&FockBasisState, &C64)> {
        self.amplitudes.iter()
    }

    pub fn norm_sq(&self) -> f64 {
        self.amplitudes.values().map(|a| a.norm_sqr()).sum()
    }

    /// Rebuild from an amplitude iterator, dropping exact zeros.
    pub fn from_amplitudes<I>(mode_count: usize, cutoff: u8, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u8>, C64)>,
    {
        let mut s = Self::zero(mode_count, cutoff);
        for (occ, a) in entries {
            if a != C64::new(0.0, 0.0) {
                s.set(&occ, a)?;
            }
        }
        Ok(s)
    }

    /// Map over amplitudes keyed by occupation, keeping the basis.
    pub(crate) fn map_amplitudes<F>(&self, mut f: F) -> Self
    where
        F: FnMut(&FockBasisState, C64) -> C64,
    {
        let amplitudes = self
            .amplitudes
            .iter()
            .map(|(k, &a)| (k.clone(), f(k, a)))
            .collect();
        Self {
            mode_count: self.mode_count,
            cutoff: self.cutoff,
            amplitudes,
        }
    }

    /// Tensor product; `self`'s modes come first. Cutoffs must match.
    pub fn tensor(&self, other: &PureState) -> Result<PureState> {
        if self.cutoff != other.cutoff {
            return Err(Error::CutoffMismatch(
                self.cutoff as usize,
                other.cutoff as usize,
            ));
        }
        let mut out = PureState::zero(self.mode_count + other.mode_count, self.cutoff);
        for (ka, &aa) in &self.amplitudes {
            for (kb, &ab) in &other.amplitudes {
                let mut occ = ka.occupations().to_vec();
                occ.extend_from_slice(kb.occupations());
                out.set(&occ, aa * ab)?;
            }
        }
        Ok(out)
    }

    /// Scale to unit norm; returns the normalized state and the original
    /// Euclidean norm.
    pub fn normalize(&self) -> Result<(PureState, f64)> {
        let norm = self.norm_sq().sqrt();
        if norm == 0.0 {
            return Err(Error::ZeroNorm);
        }
        let scaled = self.map_amplitudes(|_, a| a / norm);
        Ok((scaled, norm))
    }

    /// Outer product |s><s| of a single-mode state.
    pub fn outer(&self) -> Result<DensityOperator> {
        if self.mode_count != 1 {
            return Err(Error::NotSingleMode(self.mode_count));
        }
        let dim = self.cutoff as usize + 1;
        let mut m = Array2::<C64>::zeros((dim, dim));
        for (ka, &aa) in &self.amplitudes {
            for (kb, &ab) in &self.amplitudes {
                let i = ka.occupations()[0] as usize;
                let j = kb.occupations()[0] as usize;
                m[[i, j]] = aa * ab.conj();
            }
        }
        DensityOperator::new(m)
    }
}

/// Hermitian positive-semidefinite operator on a truncated single-mode space.
///
/// The trace may be below one: unnormalized conditional states carry the
/// apparent-success probability as their trace.
#[derive(Debug, Clone)]
pub struct DensityOperator {
    matrix: Array2<C64>,
}

impl DensityOperator {
    /// Validating constructor: Hermitian to 1e-12, eigenvalues >= -1e-10,
    /// trace in [0, 1 + 1e-10].
    pub fn new(matrix: Array2<C64>) -> Result<Self> {
        let dim = matrix.nrows();
        assert_eq!(dim, matrix.ncols(), "density matrix must be square");
        let mut herm_dev = 0.0f64;
        for i in 0..dim {
            for j in 0..dim {
                herm_dev = herm_dev.max((matrix[[i, j]] - matrix[[j, i]].conj()).norm());
            }
        }
        if herm_dev > HERMITICITY_TOL {
            return Err(Error::NotHermitian(herm_dev));
        }
        let eigs = hermitian_eigenvalues(&matrix);
        if let Some(&min) = eigs.first() {
            if min < EIGENVALUE_TOL {
                return Err(Error::NotPositive(min));
            }
        }
        let op = Self { matrix };
        let tr = op.trace();
        if !(0.0..=1.0 + 1e-10).contains(&tr) {
            return Err(Error::TraceOutOfRange(tr));
        }
        Ok(op)
    }

    pub fn cutoff(&self) -> u8 {
        (self.matrix.nrows() - 1) as u8
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        (0..self.matrix.nrows()).map(|i| self.matrix[[i, i]].re).sum()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.matrix)
    }

    /// Largest absolute elementwise difference.
    pub fn max_diff(&self, other: &DensityOperator) -> f64 {
        let mut d = 0.0f64;
        for i in 0..self.matrix.nrows() {
            for j in 0..self.matrix.ncols() {
                d = d.max((self.matrix[[i, j]] - other.matrix[[i, j]]).norm());
            }
        }
        d
    }

    pub fn scaled(&self, factor: f64) -> Result<DensityOperator> {
        DensityOperator::new(self.matrix.mapv(|z| z * factor))
    }
}

/// Expectation value <psi|rho|psi> for a normalized single-mode state.
pub fn expectation(rho: &DensityOperator, psi: &PureState) -> Result<f64> {
    if psi.mode_count() != 1 {
        return Err(Error::NotSingleMode(psi.mode_count()));
    }
    if psi.cutoff() != rho.cutoff() {
        return Err(Error::CutoffMismatch(
            psi.cutoff() as usize,
            rho.cutoff() as usize,
        ));
    }
    let ns = psi.norm_sq();
    if (ns - 1.0).abs() > 1e-9 {
        return Err(Error::NotNormalized(ns));
    }
    let mut acc = C64::new(0.0, 0.0);
    for (ki, &ai) in psi.iter() {
        for (kj, &aj) in psi.iter() {
            let i = ki.occupations()[0] as usize;
            let j = kj.occupations()[0] as usize;
            acc += ai.conj() * rho.matrix()[[i, j]] * aj;
        }
    }
    Ok(acc.re)
}

/// Condition a multimode pure state on diagonal POVM outcomes at all modes
/// but one, returning the unnormalized reduced operator on the remaining
/// mode. The trace of the result is the apparent-success probability.
///
/// rho[k][k'] = sum over measured occupations (i, j, ...) of
/// w1(i) * w2(j) * ... * c(i,j,..,k) * conj(c(i,j,..,k')).
pub fn condition_on_diagonal_povm(
    s: &PureState,
    assignments: &[(usize, &PovmElement)],
) -> Result<DensityOperator> {
    if s.mode_count() < 2 {
        return Err(Error::InvalidPovmAssignment(
            "state must have at least two modes".into(),
        ));
    }
    if assignments.len() != s.mode_count() - 1 {
        return Err(Error::InvalidPovmAssignment(format!(
            "expected {} measured modes, got {}",
            s.mode_count() - 1,
            assignments.len()
        )));
    }
    let mut measured: Vec<Option<&PovmElement>> = vec![None; s.mode_count()];
    for &(mode, element) in assignments {
        if mode >= s.mode_count() {
            return Err(Error::ModeOutOfRange(mode, s.mode_count()));
        }
        if measured[mode].is_some() {
            return Err(Error::InvalidPovmAssignment(format!(
                "mode {mode} assigned twice"
            )));
        }
        if element.weights().len() <= s.cutoff() as usize {
            return Err(Error::InvalidPovmAssignment(format!(
                "POVM element '{}' covers {} photon numbers, state cutoff is {}",
                element.label(),
                element.weights().len(),
                s.cutoff()
            )));
        }
        measured[mode] = Some(element);
    }
    let unmeasured = measured
        .iter()
        .position(Option::is_none)
        .expect("exactly one unmeasured mode");

    // Group amplitudes by the occupations of the measured modes; each group
    // contributes a weighted outer product, coherent within the group.
    let dim = s.cutoff() as usize + 1;
    let mut groups: BTreeMap<Vec<u8>, Vec<C64>> = BTreeMap::new();
    for (key, &a) in s.iter() {
        let occ = key.occupations();
        let mut pattern = occ.to_vec();
        let k = pattern.remove(unmeasured);
        groups.entry(pattern).or_insert_with(|| vec![C64::default(); dim])[k as usize] += a;
    }

    let mut m = Array2::<C64>::zeros((dim, dim));
    for (pattern, column) in &groups {
        let mut weight = 1.0f64;
        let mut pat_iter = pattern.iter();
        for (mode, elem) in measured.iter().enumerate() {
            if mode == unmeasured {
                continue;
            }
            let n = *pat_iter.next().expect("pattern covers measured modes");
            weight *= elem.expect("assigned").weights()[n as usize];
        }
        if weight == 0.0 {
            continue;
        }
        for (k, &ck) in column.iter().enumerate() {
            for (kp, &ckp) in column.iter().enumerate() {
                m[[k, kp]] += weight * ck * ckp.conj();
            }
        }
    }

    // Symmetrize, but refuse to mask real asymmetry.
    let mut dev = 0.0f64;
    for i in 0..dim {
        for j in 0..dim {
            dev = dev.max((m[[i, j]] - m[[j, i]].conj()).norm());
        }
    }
    if dev > HERMITICITY_TOL {
        return Err(Error::NotHermitian(dev));
    }
    let mut sym = Array2::<C64>::zeros((dim, dim));
    for i in 0..dim {
        for j in 0..dim {
            sym[[i, j]] = (m[[i, j]] + m[[j, i]].conj()) * 0.5;
        }
    }
    DensityOperator::new(sym)
}
