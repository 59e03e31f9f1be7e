//! Exact share of "same splitting behaviour" pairs among equal-determinant
//! pairs in `GL₂(𝔽ℓ) × GL₂(𝔽ℓ)`.
//!
//! `H` is the set of pairs `(g, g')` with `det g = det g'`. `H'` keeps the
//! pairs where both members have distinct eigenvalues that are either both
//! in 𝔽ℓ or both outside it. Elements with a repeated eigenvalue are never
//! in `H'`. Counting goes through characteristic polynomials: for each
//! `(trace, det)` the number of matrices is computed exactly, then squared
//! and summed per determinant. No floating point is used.

use num_bigint::BigUint;
use num_rational::Ratio;
use num_traits::Zero;
use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::arith::{is_prime, kronecker};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GroupError {
    #[error("{0} is not an odd prime")]
    NotOddPrime(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum CharpolyClass {
    /// Two distinct eigenvalues in 𝔽ℓ.
    SplitDistinct,
    /// Conjugate eigenvalues in 𝔽ℓ² \ 𝔽ℓ.
    NonSplit,
    RepeatedRoot,
}

/// Classifies `t² − a t + d` by its discriminant `a² − 4d`.
pub fn charpoly_class(ell: u64, a: u64, d: u64) -> CharpolyClass {
    let disc = ((a as i128) * (a as i128) - 4 * d as i128).rem_euclid(ell as i128) as i64;
    match kronecker(disc, ell as i64).expect("ell is an odd prime") {
        1 => CharpolyClass::SplitDistinct,
        -1 => CharpolyClass::NonSplit,
        _ => CharpolyClass::RepeatedRoot,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Stratum {
    pub trace: u64,
    pub det: u64,
    pub class: CharpolyClass,
    pub count: u64,
}

/// Matrix counts of `GL₂(𝔽ℓ)` per characteristic polynomial.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CharpolyStrata {
    pub ell: u64,
    /// Indexed by `(det - 1) * ell + trace`.
    pub strata: Vec<Stratum>,
}

/// Per-determinant totals: split-distinct, non-split, all.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DetTotals {
    pub split: u64,
    pub nonsplit: u64,
    pub total: u64,
}

impl CharpolyStrata {
    pub fn get(&self, trace: u64, det: u64) -> &Stratum {
        &self.strata[((det - 1) * self.ell + trace) as usize]
    }

    pub fn total(&self) -> u64 {
        self.strata.iter().map(|s| s.count).sum()
    }

    pub fn det_totals(&self, det: u64) -> DetTotals {
        let mut t = DetTotals {
            split: 0,
            nonsplit: 0,
            total: 0,
        };
        for a in 0..self.ell {
            let s = self.get(a, det);
            t.total += s.count;
            match s.class {
                CharpolyClass::SplitDistinct => t.split += s.count,
                CharpolyClass::NonSplit => t.nonsplit += s.count,
                CharpolyClass::RepeatedRoot => {}
            }
        }
        t
    }
}

fn check_ell(ell: u64) -> Result<(), GroupError> {
    if ell == 2 || !is_prime(ell) || ell > 1 << 20 {
        return Err(GroupError::NotOddPrime(ell));
    }
    Ok(())
}

/// Counts matrices `[[x, y], [z, a - x]]` with `x(a - x) - yz = d`: for each
/// `x`, the number of `(y, z)` with `yz = c` is `2ℓ - 1` if `c = 0`, else `ℓ - 1`.
pub fn charpoly_strata(ell: u64) -> Result<CharpolyStrata, GroupError> {
    check_ell(ell)?;
    let l = ell;
    let mut strata = Vec::with_capacity(((l - 1) * l) as usize);
    for det in 1..l {
        for trace in 0..l {
            let zeros = (0..l)
                .filter(|&x| (x * ((trace + l - x) % l) + l - det).is_multiple_of(l))
                .count() as u64;
            let count = zeros * (2 * l - 1) + (l - zeros) * (l - 1);
            strata.push(Stratum {
                trace,
                det,
                class: charpoly_class(l, trace, det),
                count,
            });
        }
    }
    Ok(CharpolyStrata { ell, strata })
}

/// `|H|`, `|H'|` and their exact ratio for one `ℓ`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupDensityReport {
    pub ell: u64,
    pub h_size: BigUint,
    pub h_prime_size: BigUint,
    pub ratio: Ratio<BigUint>,
}

impl Serialize for GroupDensityReport {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(5))?;
        m.serialize_entry("l", &self.ell)?;
        m.serialize_entry("h", &self.h_size.to_string())?;
        m.serialize_entry("h_prime", &self.h_prime_size.to_string())?;
        m.serialize_entry("ratio_num", &self.ratio.numer().to_string())?;
        m.serialize_entry("ratio_den", &self.ratio.denom().to_string())?;
        m.end()
    }
}

impl GroupDensityReport {
    /// Lossy view of the ratio, for display.
    pub fn ratio_f64(&self) -> f64 {
        let scale = BigUint::from(1u64 << 52);
        let scaled = self.ratio.numer() * &scale / self.ratio.denom();
        let v: u64 = scaled.try_into().unwrap_or(u64::MAX);
        v as f64 / (1u64 << 52) as f64
    }
}

/// `|H'| = Σ_d (s_d² + n_d²)` and `|H| = Σ_d t_d²` over determinants `d`.
pub fn h_prime_ratio(ell: u64) -> Result<GroupDensityReport, GroupError> {
    let strata = charpoly_strata(ell)?;
    let mut h = BigUint::zero();
    let mut h_prime = BigUint::zero();
    for det in 1..ell {
        let t = strata.det_totals(det);
        let sq = |v: u64| BigUint::from(v) * BigUint::from(v);
        h += sq(t.total);
        h_prime += sq(t.split) + sq(t.nonsplit);
    }
    Ok(GroupDensityReport {
        ell,
        ratio: Ratio::new(h_prime.clone(), h.clone()),
        h_size: h,
        h_prime_size: h_prime,
    })
}

/// `|GL₂(𝔽ℓ)| = (ℓ² − 1)(ℓ² − ℓ)`.
pub fn gl2_order(ell: u64) -> u64 {
    (ell * ell - 1) * (ell * ell - ell)
}
