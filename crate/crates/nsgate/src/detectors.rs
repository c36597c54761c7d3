//! Photon-counting POVM constructors: ideal counter, finite-efficiency
//! threshold detector, double detector array (DDA), N-element detector
//! cascade, and the visible light photon counter (VLPC).
//!
//! Every POVM here is diagonal in photon number, so elements are stored as
//! weight vectors indexed by photon number. The cascade weights are built
//! as exact rational polynomials in the efficiency and only evaluated in
//! floating point at the end, which keeps them stable for any array size
//! and lets the cascade(2) = DDA identity be checked coefficient-exactly.

use num::rational::Ratio;
use num::{One, Zero};

use crate::error::{Error, Result};

/// One outcome of a photon-number-diagonal POVM: a label plus nonnegative
/// weights w(n) for n = 0..cutoff.
#[derive(Debug, Clone, PartialEq)]
pub struct PovmElement {
    label: String,
    weights: Vec<f64>,
}

impl PovmElement {
    pub fn new(label: impl Into<String>, weights: Vec<f64>) -> Self {
        Self {
            label: label.into(),
            weights,
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// A photon-counting detector placed on one mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DetectorModel {
    Ideal,
    Threshold { eta: f64 },
    Dda { eta: f64 },
    Cascade { n: u32, eta: f64 },
    Vlpc { eta: f64 },
}

impl DetectorModel {
    /// POVM elements of this detector on photon numbers 0..cutoff, ordered
    /// by click count (element 0 = no clicks, element 1 = one click, ...).
    pub fn povm(&self, cutoff: u8) -> Result<Vec<PovmElement>> {
        match *self {
            DetectorModel::Ideal => Ok(ideal_povm(cutoff)),
            DetectorModel::Threshold { eta } => threshold_povm(eta, cutoff),
            DetectorModel::Dda { eta } => dda_povm(eta, cutoff),
            DetectorModel::Cascade { n, eta } => cascade_povm(n, eta, cutoff),
            DetectorModel::Vlpc { eta } => vlpc_povm(eta, cutoff),
        }
    }

    pub fn eta(&self) -> f64 {
        match *self {
            DetectorModel::Ideal => 1.0,
            DetectorModel::Threshold { eta }
            | DetectorModel::Dda { eta }
            | DetectorModel::Cascade { eta, .. }
            | DetectorModel::Vlpc { eta } => eta,
        }
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::InvalidEfficiency(eta));
    }
    Ok(())
}

/// Ideal photon counter: element k projects onto |k><k|.
pub fn ideal_povm(cutoff: u8) -> Vec<PovmElement> {
    (0..=cutoff)
        .map(|k| {
            let weights = (0..=cutoff).map(|n| if n == k { 1.0 } else { 0.0 }).collect();
            PovmElement::new(format!("k={k}"), weights)
        })
        .collect()
}

/// Finite-efficiency threshold detector: no click vs at least one click.
/// w_0(n) = (1-eta)^n, w_{>0}(n) = 1 - (1-eta)^n.
pub fn threshold_povm(eta: f64, cutoff: u8) -> Result<Vec<PovmElement>> {
    check_eta(eta)?;
    let miss = 1.0 - eta;
    let w0: Vec<f64> = (0..=cutoff).map(|n| miss.powi(n as i32)).collect();
    let w1: Vec<f64> = (0..=cutoff).map(|n| 1.0 - miss.powi(n as i32)).collect();
    Ok(vec![
        PovmElement::new("no_click", w0),
        PovmElement::new("click", w1),
    ])
}

/// Double detector array: 50/50 beamsplitter feeding two threshold
/// detectors; outcomes are none, one, or both clicked. Weights at photon
/// number n:
///   none: (1-eta)^n
///   one:  2[(1-eta/2)^n - (1-eta)^n]
///   both: 1 + (1-eta)^n - 2(1-eta/2)^n
pub fn dda_povm(eta: f64, cutoff: u8) -> Result<Vec<PovmElement>> {
    check_eta(eta)?;
    let miss = 1.0 - eta;
    let half_miss = 1.0 - eta / 2.0;
    let mut none = Vec::with_capacity(cutoff as usize + 1);
    let mut one = Vec::with_capacity(cutoff as usize + 1);
    let mut both = Vec::with_capacity(cutoff as usize + 1);
    for n in 0..=cutoff as i32 {
        none.push(miss.powi(n));
        one.push(2.0 * (half_miss.powi(n) - miss.powi(n)));
        both.push(1.0 + miss.powi(n) - 2.0 * half_miss.powi(n));
    }
    Ok(vec![
        PovmElement::new("none", none),
        PovmElement::new("one", one),
        PovmElement::new("both", both),
    ])
}

/// Visible light photon counter, modeled as the infinite-cascade limit.
/// Element k has weight C(n,k) eta^k (1-eta)^(n-k) at photon number n >= k.
pub fn vlpc_povm(eta: f64, cutoff: u8) -> Result<Vec<PovmElement>> {
    check_eta(eta)?;
    let miss = 1.0 - eta;
    let povm = (0..=cutoff)
        .map(|k| {
            let weights = (0..=cutoff)
                .map(|n| {
                    if n < k {
                        0.0
                    } else {
                        binomial(n as u64, k as u64) as f64
                            * eta.powi(k as i32)
                            * miss.powi((n - k) as i32)
                    }
                })
                .collect();
            PovmElement::new(format!("k={k}"), weights)
        })
        .collect();
    Ok(povm)
}

/// N-way detector cascade: n photons land independently in a uniformly
/// random detector out of N, each registered with probability eta; element
/// k is the probability that exactly k detectors click.
pub fn cascade_povm(n_detectors: u32, eta: f64, cutoff: u8) -> Result<Vec<PovmElement>> {
    check_eta(eta)?;
    let polys = cascade_weight_polynomials(n_detectors, cutoff)?;
    let povm = polys
        .into_iter()
        .enumerate()
        .map(|(k, row)| {
            let weights = row.iter().map(|p| p.eval(eta)).collect();
            PovmElement::new(format!("k={k}"), weights)
        })
        .collect();
    Ok(povm)
}

/// Largest deviation from completeness: max over n of |1 - sum_k w_k(n)|.
pub fn completeness_defect(povm: &[PovmElement], cutoff: u8) -> f64 {
    (0..=cutoff as usize)
        .map(|n| {
            let total: f64 = povm.iter().map(|e| e.weights()[n]).sum();
            (1.0 - total).abs()
        })
        .fold(0.0, f64::max)
}

// ---------------------------------------------------------------------------
// Exact rational route for the cascade.

/// Polynomial in the efficiency with exact rational coefficients,
/// coefficient i multiplying eta^i.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EtaPolynomial {
    coeffs: Vec<Ratio<i128>>,
}

impl EtaPolynomial {
    fn zero() -> Self {
        Self { coeffs: vec![] }
    }

    fn constant(c: Ratio<i128>) -> Self {
        Self { coeffs: vec![c] }
    }

    /// 1 - (1 - eta)^m, the click probability of a bin holding m photons.
    fn click_probability(m: u32) -> Self {
        // (1-eta)^m expanded binomially, then negated with +1.
        let mut coeffs = vec![Ratio::zero(); m as usize + 1];
        for (i, c) in coeffs.iter_mut().enumerate() {
            let sign = if i % 2 == 0 { 1 } else { -1 };
            *c = Ratio::from_integer(sign * binomial(m as u64, i as u64) as i128);
        }
        let mut p = Self { coeffs };
        p = p.scale(Ratio::from_integer(-1));
        p.coeffs[0] += Ratio::one();
        p.trim()
    }

    fn trim(mut self) -> Self {
        while self.coeffs.last() == Some(&Ratio::zero()) {
            self.coeffs.pop();
        }
        self
    }

    fn add(&self, other: &Self) -> Self {
        let len = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..len)
            .map(|i| {
                let a = self.coeffs.get(i).copied().unwrap_or_else(Ratio::zero);
                let b = other.coeffs.get(i).copied().unwrap_or_else(Ratio::zero);
                a + b
            })
            .collect();
        Self { coeffs }.trim()
    }

    fn mul(&self, other: &Self) -> Self {
        if self.coeffs.is_empty() || other.coeffs.is_empty() {
            return Self::zero();
        }
        let mut coeffs = vec![Ratio::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        Self { coeffs }.trim()
    }

    fn scale(&self, factor: Ratio<i128>) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
        .trim()
    }

    pub fn coefficients(&self) -> &[Ratio<i128>] {
        &self.coeffs
    }

    /// Horner evaluation at a floating-point efficiency.
    pub fn eval(&self, eta: f64) -> f64 {
        let mut acc = 0.0f64;
        for c in self.coeffs.iter().rev() {
            acc = acc * eta + ratio_to_f64(*c);
        }
        acc
    }
}

fn ratio_to_f64(r: Ratio<i128>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc = 1u64;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

fn factorial(n: u32) -> i128 {
    (1..=n as i128).product::<i128>().max(1)
}

/// Exact click-count weight polynomials for the N-detector cascade.
/// Returned as rows indexed by click count k = 0..min(N, cutoff), each row
/// giving the polynomial weight at photon number n = 0..cutoff.
///
/// Built by enumerating the collision structure of the photons: for each
/// integer partition of n into occupied-bin sizes, the bin-assignment
/// probability is a falling factorial over N^n, and the click count is the
/// sum of independent per-bin Bernoulli variables with success probability
/// 1 - (1-eta)^(bin size). This avoids the alternating inclusion-exclusion
/// sum, which loses precision for large N.
pub fn cascade_weight_polynomials(
    n_detectors: u32,
    cutoff: u8,
) -> Result<Vec<Vec<EtaPolynomial>>> {
    if n_detectors < 1 {
        return Err(Error::InvalidCascadeSize(n_detectors));
    }
    let k_max = (n_detectors as usize).min(cutoff as usize);
    let mut rows = vec![vec![EtaPolynomial::zero(); cutoff as usize + 1]; k_max + 1];
    rows[0][0] = EtaPolynomial::constant(Ratio::one());

    for n in 1..=cutoff as u32 {
        let mut click_dist = vec![EtaPolynomial::zero(); n as usize + 1];
        for blocks in integer_partitions(n) {
            let b = blocks.len() as u32;
            if b > n_detectors {
                continue;
            }
            // number of set partitions of n photons with these block sizes
            let mut ways = factorial(n);
            for &m in &blocks {
                ways /= factorial(m);
            }
            let mut run = 1u32;
            for w in blocks.windows(2) {
                if w[0] == w[1] {
                    run += 1;
                } else {
                    ways /= factorial(run);
                    run = 1;
                }
            }
            ways /= factorial(run);
            // probability of landing in b specific distinct bins, summed
            // over ordered bin choices: falling factorial / N^n
            let mut assign = Ratio::from_integer(ways);
            for t in 0..b {
                assign *= Ratio::from_integer((n_detectors - t) as i128);
            }
            for _ in 0..n {
                assign /= Ratio::from_integer(n_detectors as i128);
            }

            // click-count generating polynomial over the occupied bins
            let mut dist = vec![EtaPolynomial::constant(Ratio::one())];
            for &m in &blocks {
                let p = EtaPolynomial::click_probability(m);
                let q = p.scale(Ratio::from_integer(-1)).add(&EtaPolynomial::constant(Ratio::one()));
                let mut next = vec![EtaPolynomial::zero(); dist.len() + 1];
                for (k, d) in dist.iter().enumerate() {
                    next[k] = next[k].add(&d.mul(&q));
                    next[k + 1] = next[k + 1].add(&d.mul(&p));
                }
                dist = next;
            }
            for (k, d) in dist.iter().enumerate() {
                click_dist[k] = click_dist[k].add(&d.scale(assign));
            }
        }
        for (k, poly) in click_dist.into_iter().enumerate() {
            if k <= k_max {
                rows[k][n as usize] = poly;
            }
        }
    }
    Ok(rows)
}

/// Exact weight polynomials for the printed DDA forms, expanded binomially.
/// Used to check the cascade(2) = DDA identity in exact arithmetic.
pub fn dda_weight_polynomials(cutoff: u8) -> Vec<Vec<EtaPolynomial>> {
    let one = EtaPolynomial::constant(Ratio::one());
    // 1 - eta and 1 - eta/2 as polynomials
    let miss = EtaPolynomial {
        coeffs: vec![Ratio::one(), Ratio::from_integer(-1)],
    };
    let half_miss = EtaPolynomial {
        coeffs: vec![Ratio::one(), Ratio::new(-1, 2)],
    };
    let mut none = Vec::new();
    let mut one_click = Vec::new();
    let mut both = Vec::new();
    let mut miss_n = one.clone();
    let mut half_n = one.clone();
    for _n in 0..=cutoff {
        none.push(miss_n.clone());
        let diff = half_n.add(&miss_n.scale(Ratio::from_integer(-1)));
        one_click.push(diff.scale(Ratio::from_integer(2)));
        both.push(
            one.add(&miss_n)
                .add(&half_n.scale(Ratio::from_integer(-2))),
        );
        miss_n = miss_n.mul(&miss);
        half_n = half_n.mul(&half_miss);
    }
    vec![none, one_click, both]
}

/// Sorted integer partitions of n (descending part order within each).
fn integer_partitions(n: u32) -> Vec<Vec<u32>> {
    fn rec(n: u32, max: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if n == 0 {
            out.push(prefix.clone());
            return;
        }
        for part in (1..=n.min(max)).rev() {
            prefix.push(part);
            rec(n - part, part, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, n, &mut Vec::new(), &mut out);
    out
}
