//! Finite-x density statistics over scan streams.
//!
//! Every statistic is a fold over [`TraceRecord`]s in increasing `p`. Upper
//! density is approximated two ways, reported side by side: the ratio at
//! `x_max`, and the maximum running ratio over the last decade `(x_max/10, x_max]`.
//!
//! Pairwise statistics only use primes of good reduction for both curves.
//! The verdict thresholds are engineering constants; they sit far from the
//! ratio ≈ 1 of isogenous pairs and the o(1) ratio of unrelated non-CM pairs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::arith::{self, kronecker, reduce_signed, FundamentalDiscriminant};
use crate::curve::WeierstrassCurve;
use crate::frobenius::{self, FrobeniusError, RedType, TraceRecord};

pub const THETA_HIGH: f64 = 0.5;
pub const THETA_LOW: f64 = 0.05;
pub const CM_DOMINANCE: f64 = 0.90;
pub const CM_MIN_ORDINARY: u64 = 30;
pub const NON_CM_MAX_SUPERSINGULAR: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("discriminant {0} does not name an imaginary quadratic field")]
    NotImaginary(i64),
    #[error("sieve prime {0} must be an odd prime")]
    BadSievePrime(u64),
    #[error("sieve prime {0} listed twice")]
    DuplicateSievePrime(u64),
    #[error("sieve needs at least one prime")]
    EmptySieve,
    #[error(transparent)]
    Frobenius(#[from] FrobeniusError),
}

/// Powers of ten in `[10^3, x_max]`, followed by `x_max` itself.
pub fn checkpoints(x_max: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut c = 1000u64;
    while c < x_max {
        out.push(c);
        match c.checked_mul(10) {
            Some(next) => c = next,
            None => break,
        }
    }
    out.push(x_max);
    out
}

/// Running hit/total counts at logarithmic checkpoints.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityEstimate {
    pub checkpoints: Vec<u64>,
    pub hits: Vec<u64>,
    pub totals: Vec<u64>,
    pub ratios: Vec<f64>,
    /// Largest running ratio over eligible primes in `(x_max/10, x_max]`.
    pub tail_max: f64,
}

fn ratio(hits: u64, total: u64) -> f64 {
    if total == 0 {
        0.0
    } else {
        hits as f64 / total as f64
    }
}

impl DensityEstimate {
    /// Folds `(p, hit)` events for eligible primes, given in increasing `p`.
    pub fn from_events(x_max: u64, events: impl IntoIterator<Item = (u64, bool)>) -> Self {
        let checkpoints = checkpoints(x_max);
        let tail_start = x_max / 10;
        let mut hits_at = Vec::with_capacity(checkpoints.len());
        let mut totals_at = Vec::with_capacity(checkpoints.len());
        let (mut hits, mut total) = (0u64, 0u64);
        let mut tail_max: Option<f64> = None;
        let mut next = 0;
        for (p, hit) in events {
            if p > x_max {
                break;
            }
            while next < checkpoints.len() && p > checkpoints[next] {
                hits_at.push(hits);
                totals_at.push(total);
                next += 1;
            }
            total += 1;
            hits += hit as u64;
            if p > tail_start {
                let r = ratio(hits, total);
                tail_max = Some(tail_max.map_or(r, |m| m.max(r)));
            }
        }
        while hits_at.len() < checkpoints.len() {
            hits_at.push(hits);
            totals_at.push(total);
        }
        let ratios: Vec<f64> = hits_at
            .iter()
            .zip(&totals_at)
            .map(|(&h, &t)| ratio(h, t))
            .collect();
        let tail_max = tail_max.unwrap_or_else(|| *ratios.last().expect("x_max is a checkpoint"));
        Self {
            checkpoints,
            hits: hits_at,
            totals: totals_at,
            ratios,
            tail_max,
        }
    }

    pub fn final_ratio(&self) -> f64 {
        *self.ratios.last().expect("at least one checkpoint")
    }

    pub fn final_hits(&self) -> u64 {
        *self.hits.last().expect("at least one checkpoint")
    }

    pub fn final_total(&self) -> u64 {
        *self.totals.last().expect("at least one checkpoint")
    }
}

/// Records of two scans at their common primes, in increasing `p`.
pub fn common_primes<'a>(
    first: &'a [TraceRecord],
    second: &'a [TraceRecord],
) -> Vec<(&'a TraceRecord, &'a TraceRecord)> {
    let mut out = Vec::with_capacity(first.len().min(second.len()));
    let (mut i, mut j) = (0, 0);
    while i < first.len() && j < second.len() {
        match first[i].p.cmp(&second[j].p) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push((&first[i], &second[j]));
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// Coinciding primes split by the reduction types of the two curves.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct TypeBreakdown {
    pub ordinary_ordinary: u64,
    pub ordinary_supersingular: u64,
    pub supersingular_ordinary: u64,
    pub supersingular_supersingular: u64,
}

impl TypeBreakdown {
    fn add(&mut self, first: RedType, second: RedType) {
        use RedType::*;
        let slot = match (first, second) {
            (Ordinary, Ordinary) => &mut self.ordinary_ordinary,
            (Ordinary, Supersingular) => &mut self.ordinary_supersingular,
            (Supersingular, Ordinary) => &mut self.supersingular_ordinary,
            (Supersingular, Supersingular) => &mut self.supersingular_supersingular,
        };
        *slot += 1;
    }

    pub fn sum(&self) -> u64 {
        self.ordinary_ordinary
            + self.ordinary_supersingular
            + self.supersingular_ordinary
            + self.supersingular_supersingular
    }
}

/// Density of primes where the two Frobenius fields coincide.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoincidenceReport {
    pub estimate: DensityEstimate,
    /// Primes `<= x_max` of good reduction for both curves.
    pub eligible: u64,
    pub breakdown: TypeBreakdown,
}

pub fn coincidence_from_records(
    first: &[TraceRecord],
    second: &[TraceRecord],
    x_max: u64,
) -> CoincidenceReport {
    let pairs: Vec<_> = common_primes(first, second)
        .into_iter()
        .filter(|(r, _)| r.p <= x_max)
        .collect();
    let mut breakdown = TypeBreakdown::default();
    for (r1, r2) in &pairs {
        if r1.frob_disc == r2.frob_disc {
            breakdown.add(r1.red_type, r2.red_type);
        }
    }
    let estimate = DensityEstimate::from_events(
        x_max,
        pairs
            .iter()
            .map(|(r1, r2)| (r1.p, r1.frob_disc == r2.frob_disc)),
    );
    CoincidenceReport {
        eligible: pairs.len() as u64,
        estimate,
        breakdown,
    }
}

/// Scans both curves to `x_max` and compares their Frobenius fields.
pub fn coincidence_density(
    first: &WeierstrassCurve,
    second: &WeierstrassCurve,
    x_max: u64,
) -> Result<CoincidenceReport, StatsError> {
    Ok(coincidence_from_records(
        &frobenius::scan(first, x_max)?,
        &frobenius::scan(second, x_max)?,
        x_max,
    ))
}

/// Outcome of CM detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmStatus {
    Cm(FundamentalDiscriminant),
    NonCm,
    Inconclusive,
}

impl CmStatus {
    pub fn is_cm(&self) -> bool {
        matches!(self, CmStatus::Cm(_))
    }
}

impl fmt::Display for CmStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CmStatus::Cm(d) => write!(f, "CM({d})"),
            CmStatus::NonCm => f.write_str("NonCM"),
            CmStatus::Inconclusive => f.write_str("Inconclusive"),
        }
    }
}

impl Serialize for CmStatus {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CmVerdict {
    /// Most frequent Frobenius field among ordinary primes.
    pub dominant_disc: Option<FundamentalDiscriminant>,
    pub ordinary_count: u64,
    pub supersingular_count: u64,
    /// Share of ordinary primes carrying `dominant_disc`.
    pub ordinary_share: f64,
    /// Share of good primes with supersingular reduction.
    pub ss_share: f64,
    pub verdict: CmStatus,
}

pub fn cm_detect_from_records(records: &[TraceRecord], x_max: u64) -> CmVerdict {
    let mut by_disc: BTreeMap<FundamentalDiscriminant, u64> = BTreeMap::new();
    let (mut ordinary, mut supersingular) = (0u64, 0u64);
    for r in records.iter().take_while(|r| r.p <= x_max) {
        match r.red_type {
            RedType::Ordinary => {
                ordinary += 1;
                *by_disc.entry(r.frob_disc).or_default() += 1;
            }
            RedType::Supersingular => supersingular += 1,
        }
    }
    // Ties go to the discriminant closest to zero, for determinism.
    let dominant = by_disc
        .iter()
        .max_by(|a, b| a.1.cmp(b.1).then(a.0.cmp(b.0)))
        .map(|(&d, &n)| (d, n));
    let ordinary_share = dominant.map_or(0.0, |(_, n)| ratio(n, ordinary));
    let ss_share = ratio(supersingular, ordinary + supersingular);
    let verdict = match dominant {
        Some((d, _)) if ordinary >= CM_MIN_ORDINARY && ordinary_share >= CM_DOMINANCE => {
            CmStatus::Cm(d)
        }
        _ if ordinary >= CM_MIN_ORDINARY
            && ordinary_share < CM_DOMINANCE
            && ss_share <= NON_CM_MAX_SUPERSINGULAR =>
        {
            CmStatus::NonCm
        }
        _ => CmStatus::Inconclusive,
    };
    CmVerdict {
        dominant_disc: dominant.map(|(d, _)| d),
        ordinary_count: ordinary,
        supersingular_count: supersingular,
        ordinary_share,
        ss_share,
        verdict,
    }
}

pub fn cm_detect(curve: &WeierstrassCurve, x_max: u64) -> Result<CmVerdict, StatsError> {
    Ok(cm_detect_from_records(
        &frobenius::scan(curve, x_max)?,
        x_max,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum IsogenyStatus {
    PotentiallyIsogenous,
    NotIsogenous,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IsogenyVerdict {
    pub verdict: IsogenyStatus,
    pub final_ratio: f64,
    pub tail_max: f64,
    pub supporting: CoincidenceReport,
}

/// Thresholds the final coincidence ratio. When both curves have CM the
/// density criterion says nothing (two CM curves with different fields still
/// share every supersingular field), so the verdict is `Inconclusive`.
pub fn isogeny_verdict(
    report: CoincidenceReport,
    first: CmStatus,
    second: CmStatus,
) -> IsogenyVerdict {
    let final_ratio = report.estimate.final_ratio();
    let verdict = if first.is_cm() && second.is_cm() {
        IsogenyStatus::Inconclusive
    } else if final_ratio >= THETA_HIGH {
        IsogenyStatus::PotentiallyIsogenous
    } else if final_ratio <= THETA_LOW {
        IsogenyStatus::NotIsogenous
    } else {
        IsogenyStatus::Inconclusive
    };
    IsogenyVerdict {
        verdict,
        final_ratio,
        tail_max: report.estimate.tail_max,
        supporting: report,
    }
}

fn check_field(disc: FundamentalDiscriminant) -> Result<(), StatsError> {
    if disc.value() >= 0 && disc != FundamentalDiscriminant::RATIONAL {
        Err(StatsError::NotImaginary(disc.value()))
    } else {
        Ok(())
    }
}

/// Density of good primes whose Frobenius field is `disc`.
pub fn fixed_field_from_records(
    records: &[TraceRecord],
    disc: FundamentalDiscriminant,
    x_max: u64,
) -> Result<DensityEstimate, StatsError> {
    check_field(disc)?;
    Ok(DensityEstimate::from_events(
        x_max,
        records.iter().map(|r| (r.p, r.frob_disc == disc)),
    ))
}

pub fn fixed_field_density(
    curve: &WeierstrassCurve,
    disc: FundamentalDiscriminant,
    x_max: u64,
) -> Result<DensityEstimate, StatsError> {
    fixed_field_from_records(&frobenius::scan(curve, x_max)?, disc, x_max)
}

/// Density of good primes of supersingular reduction.
pub fn supersingular_from_records(records: &[TraceRecord], x_max: u64) -> DensityEstimate {
    DensityEstimate::from_events(
        x_max,
        records
            .iter()
            .map(|r| (r.p, r.red_type == RedType::Supersingular)),
    )
}

pub fn supersingular_density(
    curve: &WeierstrassCurve,
    x_max: u64,
) -> Result<DensityEstimate, StatsError> {
    Ok(supersingular_from_records(
        &frobenius::scan(curve, x_max)?,
        x_max,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistinctFieldsPoint {
    pub x: u64,
    pub distinct: u64,
}

/// Number of distinct Frobenius fields over ordinary good primes `<= x`.
pub fn distinct_fields_from_records(
    records: &[TraceRecord],
    x_max: u64,
) -> Vec<DistinctFieldsPoint> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    let mut iter = records.iter().take_while(|r| r.p <= x_max).peekable();
    for x in checkpoints(x_max) {
        while let Some(r) = iter.next_if(|r| r.p <= x) {
            if r.red_type == RedType::Ordinary {
                seen.insert(r.frob_disc);
            }
        }
        out.push(DistinctFieldsPoint {
            x,
            distinct: seen.len() as u64,
        });
    }
    out
}

pub fn distinct_ordinary_fields(
    curve: &WeierstrassCurve,
    x_max: u64,
) -> Result<Vec<DistinctFieldsPoint>, StatsError> {
    Ok(distinct_fields_from_records(
        &frobenius::scan(curve, x_max)?,
        x_max,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LangTrotterPoint {
    pub x: u64,
    /// `#{p <= x : F(E, p) = F}`
    pub count: u64,
    /// `count * ln(x) / sqrt(x)`
    pub normalized: f64,
}

pub fn lang_trotter_from_records(
    records: &[TraceRecord],
    disc: FundamentalDiscriminant,
    x_max: u64,
) -> Result<Vec<LangTrotterPoint>, StatsError> {
    check_field(disc)?;
    let est = fixed_field_from_records(records, disc, x_max)?;
    Ok(est
        .checkpoints
        .iter()
        .zip(&est.hits)
        .map(|(&x, &count)| {
            let xf = x as f64;
            LangTrotterPoint {
                x,
                count,
                normalized: count as f64 * xf.ln() / xf.sqrt(),
            }
        })
        .collect())
}

pub fn lang_trotter_stat(
    curve: &WeierstrassCurve,
    disc: FundamentalDiscriminant,
    x_max: u64,
) -> Result<Vec<LangTrotterPoint>, StatsError> {
    lang_trotter_from_records(&frobenius::scan(curve, x_max)?, disc, x_max)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SieveLevel {
    pub ell: u64,
    pub estimate: DensityEstimate,
}

/// Agreement of the quadratic characters of `a_p² − 4p` modulo each `ℓ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SieveReport {
    pub ells: Vec<u64>,
    pub per_ell: Vec<SieveLevel>,
    /// Primes where every `ℓ` is usable, matching when all `ℓ` agree.
    pub joint: DensityEstimate,
}

fn validate_ells(ells: &[u64]) -> Result<(), StatsError> {
    if ells.is_empty() {
        return Err(StatsError::EmptySieve);
    }
    let mut seen = BTreeSet::new();
    for &l in ells {
        if l == 2 || !arith::is_prime(l) {
            return Err(StatsError::BadSievePrime(l));
        }
        if !seen.insert(l) {
            return Err(StatsError::DuplicateSievePrime(l));
        }
    }
    Ok(())
}

/// Character of `a_p² − 4p` modulo `ℓ`, or `None` when it vanishes.
fn delta_character(r: &TraceRecord, ell: u64) -> Option<i8> {
    let delta = reduce_signed(r.a_p as i128 * r.a_p as i128 - 4 * r.p as i128, ell);
    if delta == 0 {
        return None;
    }
    Some(kronecker(delta as i64, ell as i64).expect("ell is nonzero"))
}

pub fn joint_qr_from_records(
    first: &[TraceRecord],
    second: &[TraceRecord],
    ells: &[u64],
    x_max: u64,
) -> Result<SieveReport, StatsError> {
    validate_ells(ells)?;
    let pairs: Vec<_> = common_primes(first, second)
        .into_iter()
        .filter(|(r, _)| r.p <= x_max && !ells.contains(&r.p))
        .collect();
    // Per prime: for each ell, Some(match) when usable.
    let outcomes: Vec<(u64, Vec<Option<bool>>)> = pairs
        .iter()
        .map(|(r1, r2)| {
            let per: Vec<Option<bool>> = ells
                .iter()
                .map(
                    |&l| match (delta_character(r1, l), delta_character(r2, l)) {
                        (Some(c1), Some(c2)) => Some(c1 == c2),
                        _ => None,
                    },
                )
                .collect();
            (r1.p, per)
        })
        .collect();
    let per_ell = ells
        .iter()
        .enumerate()
        .map(|(i, &ell)| SieveLevel {
            ell,
            estimate: DensityEstimate::from_events(
                x_max,
                outcomes
                    .iter()
                    .filter_map(|(p, per)| per[i].map(|m| (*p, m))),
            ),
        })
        .collect();
    let joint = DensityEstimate::from_events(
        x_max,
        outcomes.iter().filter_map(|(p, per)| {
            per.iter()
                .copied()
                .collect::<Option<Vec<bool>>>()
                .map(|ms| (*p, ms.iter().all(|&m| m)))
        }),
    );
    Ok(SieveReport {
        ells: ells.to_vec(),
        per_ell,
        joint,
    })
}

pub fn joint_qr_sieve(
    first: &WeierstrassCurve,
    second: &WeierstrassCurve,
    ells: &[u64],
    x_max: u64,
) -> Result<SieveReport, StatsError> {
    validate_ells(ells)?;
    joint_qr_from_records(
        &frobenius::scan(first, x_max)?,
        &frobenius::scan(second, x_max)?,
        ells,
        x_max,
    )
}
