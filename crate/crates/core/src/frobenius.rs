//! Traces of Frobenius and Frobenius fields at degree-one primes.
//!
//! For good `p` the characteristic polynomial of Frobenius is
//! `t^2 - a_p t + p`; its splitting field is ℚ(√(a_p² − 4p)), which is always
//! imaginary quadratic at a prime `p`. A [`TraceRecord`] keeps `(p, a_p)` with
//! the reduction type and the fundamental discriminant naming that field.
//! The Frobenius roots themselves are never materialized.

use std::collections::HashMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::{
    self, add_mod, fundamental_discriminant, inv_mod, isqrt, mul_mod, pow_mod, sqrt_mod, sub_mod,
    ArithError, FundamentalDiscriminant,
};
use crate::curve::{point_count_enum, ReducedCurve, ReducedForm, WeierstrassCurve};

/// Primes below this use the O(p) residue-table engine by default. Measured
/// crossover against baby-step giant-step is near `2^14`.
pub const DEFAULT_NAIVE_BELOW: u64 = 1 << 14;

const BSGS_POINTS: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrobeniusError {
    #[error("a_p = {a_p} violates the Hasse bound at p = {p}")]
    HasseViolation { p: u64, a_p: i64 },
    #[error(transparent)]
    Arith(#[from] ArithError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RedType {
    Ordinary,
    Supersingular,
}

impl fmt::Display for RedType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RedType::Ordinary => "ordinary",
            RedType::Supersingular => "supersingular",
        })
    }
}

/// One good prime of a scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub p: u64,
    pub a_p: i64,
    pub red_type: RedType,
    pub frob_disc: FundamentalDiscriminant,
}

impl TraceRecord {
    pub fn new(p: u64, a_p: i64) -> Result<Self, FrobeniusError> {
        Ok(Self {
            p,
            a_p,
            red_type: classify(p, a_p)?,
            frob_disc: frobenius_discriminant(p, a_p)?,
        })
    }
}

/// `a_p^2 <= 4p`.
pub fn satisfies_hasse(p: u64, a_p: i64) -> bool {
    (a_p.unsigned_abs() as u128).pow(2) <= 4 * p as u128
}

fn check_hasse(p: u64, a_p: i64) -> Result<(), FrobeniusError> {
    if satisfies_hasse(p, a_p) {
        Ok(())
    } else {
        Err(FrobeniusError::HasseViolation { p, a_p })
    }
}

/// Supersingular iff `p | a_p`.
pub fn classify(p: u64, a_p: i64) -> Result<RedType, FrobeniusError> {
    check_hasse(p, a_p)?;
    Ok(if a_p.unsigned_abs().is_multiple_of(p) {
        RedType::Supersingular
    } else {
        RedType::Ordinary
    })
}

/// Fundamental discriminant of ℚ(√(a_p² − 4p)).
pub fn frobenius_discriminant(p: u64, a_p: i64) -> Result<FundamentalDiscriminant, FrobeniusError> {
    check_hasse(p, a_p)?;
    let delta = (a_p as i128) * (a_p as i128) - 4 * p as i128;
    let delta = i64::try_from(delta).map_err(|_| FrobeniusError::HasseViolation { p, a_p })?;
    Ok(fundamental_discriminant(arith::squarefree_part(delta)?)?)
}

/// Quadratic character of 𝔽_p as a lookup table: `1` on nonzero squares,
/// `-1` on non-squares, `0` at zero.
fn residue_table(p: u64) -> Vec<i8> {
    const CHAINS: u64 = 4;
    let mut chi = vec![-1i8; p as usize];
    chi[0] = 0;
    let half = (p - 1) / 2;
    let len = half / CHAINS;
    // Chain k walks the squares of k*len + 1 ..= (k+1)*len using
    // (i+1)^2 = i^2 + 2i + 1.
    let mut sq: [u64; CHAINS as usize] =
        std::array::from_fn(|k| mul_mod(k as u64 * len, k as u64 * len, p));
    let mut odd: [u64; CHAINS as usize] = std::array::from_fn(|k| (2 * k as u64 * len + 1) % p);
    for _ in 0..len {
        for k in 0..CHAINS as usize {
            sq[k] += odd[k];
            if sq[k] >= p {
                sq[k] -= p;
            }
            odd[k] += 2;
            if odd[k] >= p {
                odd[k] -= p;
            }
            chi[sq[k] as usize] = 1;
        }
    }
    for i in CHAINS * len + 1..=half {
        chi[mul_mod(i, i, p) as usize] = 1;
    }
    chi
}

/// Lanes of the vectorizable walk used for `p < 2^30`.
const LANES: usize = 16;

/// Forward-difference walk of `f(x) = x³ + Ax + B` over `LANES` contiguous
/// chunks of 𝔽_p at once. Values stay in `[0, p)` as `i32`.
struct CubicWalk {
    f: [i32; LANES],
    d1: [i32; LANES],
    d2: [i32; LANES],
    d3: i32,
    p: i32,
}

impl CubicWalk {
    fn new(starts: [u64; LANES], a: u64, b: u64, p: u64) -> Self {
        let mut walk = Self {
            f: [0; LANES],
            d1: [0; LANES],
            d2: [0; LANES],
            d3: (6 % p) as i32,
            p: p as i32,
        };
        for (k, &x) in starts.iter().enumerate() {
            let x2 = mul_mod(x, x, p);
            walk.f[k] = add_mod(mul_mod(add_mod(x2, a, p), x, p), b, p) as i32;
            // f(x+1) - f(x) = 3x² + 3x + 1 + A;  second difference 6x + 6.
            walk.d1[k] = add_mod(
                add_mod(mul_mod(3, x2, p), mul_mod(3, x, p), p),
                add_mod(1, a, p),
                p,
            ) as i32;
            walk.d2[k] = add_mod(mul_mod(6, x, p), 6 % p, p) as i32;
        }
        walk
    }

    #[inline(always)]
    fn step(&mut self) {
        let p = self.p;
        let addm = |a: i32, b: i32| {
            let t = a + b - p;
            t + ((t >> 31) & p)
        };
        for k in 0..LANES {
            self.f[k] = addm(self.f[k], self.d1[k]);
            self.d1[k] = addm(self.d1[k], self.d2[k]);
            self.d2[k] = addm(self.d2[k], self.d3);
        }
    }
}

fn character_sum_small(p: u64, a: u64, b: u64) -> i64 {
    let chi = residue_table(p);
    let chunk = p / LANES as u64;
    let mut walk = CubicWalk::new(std::array::from_fn(|k| k as u64 * chunk), a, b, p);
    let mut sum: i64 = 0;
    for _ in 0..chunk {
        let mut partial = 0i32;
        for &f in &walk.f {
            partial += chi[f as usize] as i32;
        }
        sum += partial as i64;
        walk.step();
    }
    // Tail of the range past the last full chunk.
    let fx = |x: u64| add_mod(mul_mod(add_mod(mul_mod(x, x, p), a, p), x, p), b, p);
    for x in LANES as u64 * chunk..p {
        sum += chi[fx(x) as usize] as i64;
    }
    sum
}

fn character_sum_wide(p: u64, a: u64, b: u64) -> i64 {
    let chi = residue_table(p);
    let (mut f, mut d1, mut d2) = (b, add_mod(1, a, p), 6 % p);
    let d3 = 6 % p;
    let mut sum = 0i64;
    for _ in 0..p {
        sum += chi[f as usize] as i64;
        f = add_mod(f, d1, p);
        d1 = add_mod(d1, d2, p);
        d2 = add_mod(d2, d3, p);
    }
    sum
}

/// `a_p = -Σ_x χ(x³ + Ax + B)` using a residue table; long models at
/// `p in {2, 3}` go through point enumeration.
pub fn trace_naive(r: &ReducedCurve) -> i64 {
    let p = r.p();
    match r.form() {
        ReducedForm::Short { a, b } if p < 1 << 30 => -character_sum_small(p, a, b),
        ReducedForm::Short { a, b } => -character_sum_wide(p, a, b),
        ReducedForm::Raw(_) => p as i64 + 1 - point_count_enum(r) as i64,
    }
}

/// Affine arithmetic on `y^2 = x^3 + a x + b` over 𝔽_p; `None` is the identity.
#[derive(Clone, Copy)]
struct ShortCurveModP {
    p: u64,
    a: u64,
    b: u64,
}

type Point = Option<(u64, u64)>;

impl ShortCurveModP {
    fn rhs(&self, x: u64) -> u64 {
        let p = self.p;
        add_mod(
            mul_mod(add_mod(mul_mod(x, x, p), self.a, p), x, p),
            self.b,
            p,
        )
    }

    fn add(&self, u: Point, v: Point) -> Point {
        let p = self.p;
        let ((x1, y1), (x2, y2)) = match (u, v) {
            (None, w) | (w, None) => return w,
            (Some(s), Some(t)) => (s, t),
        };
        let lambda = if x1 == x2 {
            if add_mod(y1, y2, p) == 0 {
                return None;
            }
            let num = add_mod(mul_mod(3, mul_mod(x1, x1, p), p), self.a, p);
            mul_mod(num, inv_mod(add_mod(y1, y1, p), p)?, p)
        } else {
            mul_mod(sub_mod(y2, y1, p), inv_mod(sub_mod(x2, x1, p), p)?, p)
        };
        let x3 = sub_mod(sub_mod(mul_mod(lambda, lambda, p), x1, p), x2, p);
        let y3 = sub_mod(mul_mod(lambda, sub_mod(x1, x3, p), p), y1, p);
        Some((x3, y3))
    }

    fn mul(&self, mut k: u64, pt: Point) -> Point {
        let mut acc = None;
        let mut base = pt;
        while k > 0 {
            if k & 1 == 1 {
                acc = self.add(acc, base);
            }
            base = self.add(base, base);
            k >>= 1;
        }
        acc
    }

    fn random_point(&self, rng: &mut ChaCha8Rng) -> (u64, u64) {
        loop {
            let x = rng.gen_range(0..self.p);
            if let Some(y) = sqrt_mod(self.rhs(x), self.p) {
                return (x, y);
            }
        }
    }

    /// Some `m >= 1` with `m P = O`, located in `[lo, hi]` by baby-step giant-step.
    fn annihilator(&self, pt: (u64, u64), lo: u64, hi: u64) -> Option<u64> {
        let w = isqrt(hi - lo) + 1;
        let start = Some(pt);
        let mut baby: HashMap<u64, (u64, u64)> = HashMap::with_capacity(w as usize);
        let mut cur = start;
        for j in 1..=w {
            let Some((x, y)) = cur else {
                // jP = O: the order is at most w.
                return Some(j);
            };
            if let Some(&(j0, y0)) = baby.get(&x) {
                return Some(if y0 == y { j - j0 } else { j + j0 });
            }
            baby.insert(x, (j, y));
            cur = self.add(cur, start);
        }
        let giant = self.mul(w, start);
        let mut r = self.mul(lo, start);
        let mut base = lo;
        while base <= hi + w {
            match r {
                None => return Some(base),
                Some((x, y)) => {
                    if let Some(&(j, yj)) = baby.get(&x) {
                        // base*P = ±jP
                        let m = if yj == y { base - j } else { base + j };
                        if m > 0 {
                            return Some(m);
                        }
                    }
                }
            }
            r = self.add(r, giant);
            base += w;
        }
        None
    }

    fn order(&self, pt: (u64, u64), lo: u64, hi: u64) -> Option<u64> {
        let mut ord = self.annihilator(pt, lo, hi)?;
        debug_assert!(self.mul(ord, Some(pt)).is_none());
        for (q, _) in arith::factorize(ord).ok()? {
            while ord % q == 0 && self.mul(ord / q, Some(pt)).is_none() {
                ord /= q;
            }
        }
        Some(ord)
    }
}

fn lcm(a: u64, b: u64) -> u64 {
    let (mut x, mut y) = (a, b);
    while y != 0 {
        (x, y) = (y, x % y);
    }
    a / x * b
}

/// `[p + 1 - s, p + 1 + s]` with `s = floor(sqrt(4p))`.
fn hasse_interval(p: u64) -> (u64, u64) {
    let s = isqrt(4 * p);
    (p + 1 - s, p + 1 + s)
}

/// Trace via group orders of random points found by baby-step giant-step.
///
/// Candidate orders `N` in the Hasse interval are cut down by the lcm of
/// point orders (up to 8 points), then by orders on the quadratic twist using
/// `N + N_twist = 2p + 2`. Any remaining ambiguity falls back to
/// [`trace_naive`], so the result is always exact.
pub fn trace_bsgs(r: &ReducedCurve) -> i64 {
    let p = r.p();
    let ReducedForm::Short { a, b } = r.form() else {
        return trace_naive(r);
    };
    let curve = ShortCurveModP { p, a, b };
    let (lo, hi) = hasse_interval(p);
    let mut rng = ChaCha8Rng::seed_from_u64(p ^ a.rotate_left(21) ^ b.rotate_left(42));

    let trace_of = |n: u64| p as i64 + 1 - n as i64;
    let mut l = 1u64;
    for _ in 0..BSGS_POINTS {
        let pt = curve.random_point(&mut rng);
        let Some(ord) = curve.order(pt, lo, hi) else {
            return trace_naive(r);
        };
        l = lcm(l, ord);
        let first = lo.div_ceil(l) * l;
        if first + l > hi {
            debug_assert!(first <= hi);
            return trace_of(first);
        }
    }

    let mut candidates: Vec<u64> = (lo.div_ceil(l)..=hi / l).map(|k| k * l).collect();
    let g = (2..p)
        .find(|&g| pow_mod(g, (p - 1) / 2, p) == p - 1)
        .expect("odd prime has a non-residue");
    let g2 = mul_mod(g, g, p);
    let twist = ShortCurveModP {
        p,
        a: mul_mod(a, g2, p),
        b: mul_mod(b, mul_mod(g2, g, p), p),
    };
    let mut lt = 1u64;
    for _ in 0..BSGS_POINTS {
        let pt = twist.random_point(&mut rng);
        let Some(ord) = twist.order(pt, lo, hi) else {
            break;
        };
        lt = lcm(lt, ord);
        candidates.retain(|&n| (2 * p + 2 - n).is_multiple_of(lt));
        if candidates.len() == 1 {
            return trace_of(candidates[0]);
        }
    }
    trace_naive(r)
}

/// Dispatches between the table engine and baby-step giant-step by prime size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceEngine {
    pub naive_below: u64,
}

impl Default for TraceEngine {
    fn default() -> Self {
        Self {
            naive_below: DEFAULT_NAIVE_BELOW,
        }
    }
}

impl TraceEngine {
    pub fn new(naive_below: u64) -> Self {
        Self { naive_below }
    }

    pub fn trace(&self, r: &ReducedCurve) -> i64 {
        if r.p() < self.naive_below || r.p() < 5 {
            trace_naive(r)
        } else {
            trace_bsgs(r)
        }
    }

    /// `(p, a_p)` for the good primes among `primes`, in input order.
    /// Primes are evaluated in parallel on the current rayon pool.
    pub fn traces(&self, curve: &WeierstrassCurve, primes: &[u64]) -> Vec<(u64, i64)> {
        primes
            .par_iter()
            .with_max_len(1)
            .filter_map(|&p| curve.reduce_mod_p(p).map(|r| (p, self.trace(&r))))
            .collect()
    }

    /// One record per good prime `p <= x_max`, increasing in `p`.
    pub fn scan(
        &self,
        curve: &WeierstrassCurve,
        x_max: u64,
    ) -> Result<Vec<TraceRecord>, FrobeniusError> {
        records_from_traces(self.traces(curve, &arith::primes_up_to(x_max)))
    }
}

/// Builds records from `(p, a_p)` pairs, preserving order.
pub fn records_from_traces(
    traces: impl IntoIterator<Item = (u64, i64)>,
) -> Result<Vec<TraceRecord>, FrobeniusError> {
    traces
        .into_iter()
        .map(|(p, a)| TraceRecord::new(p, a))
        .collect()
}

/// [`TraceEngine::scan`] with the default engine.
pub fn scan(curve: &WeierstrassCurve, x_max: u64) -> Result<Vec<TraceRecord>, FrobeniusError> {
    TraceEngine::default().scan(curve, x_max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::kronecker;

    fn curve(m: [i64; 5]) -> WeierstrassCurve {
        WeierstrassCurve::new(m).unwrap()
    }

    const E11A1: [i64; 5] = [0, -1, 1, -10, -20];
    const CM_I: [i64; 5] = [0, 0, 0, -1, 0];

    #[test]
    fn naive_examples() {
        let e = curve(CM_I);
        assert_eq!(trace_naive(&e.reduce_mod_p(5).unwrap()), -2);
        assert_eq!(trace_naive(&e.reduce_mod_p(7).unwrap()), 0);
        let r = curve(E11A1).reduce_mod_p(7).unwrap();
        assert_eq!(trace_naive(&r), 8 - point_count_enum(&r) as i64);
    }

    #[test]
    fn known_traces_of_11a1() {
        // Coefficients of the weight-2 newform of level 11.
        let expected = [
            (2, -2),
            (3, -1),
            (5, 1),
            (7, -2),
            (13, 4),
            (17, -2),
            (19, 0),
        ];
        let e = curve(E11A1);
        for (p, a) in expected {
            assert_eq!(trace_naive(&e.reduce_mod_p(p).unwrap()), a, "p={p}");
        }
    }

    #[test]
    fn classify_examples() {
        assert_eq!(classify(7, 0), Ok(RedType::Supersingular));
        assert_eq!(classify(5, -2), Ok(RedType::Ordinary));
        assert_eq!(classify(3, 3), Ok(RedType::Supersingular));
        assert_eq!(
            classify(5, 5),
            Err(FrobeniusError::HasseViolation { p: 5, a_p: 5 })
        );
    }

    #[test]
    fn frobenius_discriminant_examples() {
        assert_eq!(frobenius_discriminant(5, -2).unwrap().value(), -4);
        assert_eq!(frobenius_discriminant(7, 0).unwrap().value(), -7);
        assert_eq!(frobenius_discriminant(11, 4).unwrap().value(), -7);
        assert!(frobenius_discriminant(11, 7).is_err());
        for p in [2u64, 3] {
            let s = isqrt(4 * p) as i64;
            for a in -s..=s {
                assert!(frobenius_discriminant(p, a).unwrap().value() < 0);
            }
        }
    }

    #[test]
    fn bsgs_large_supersingular_prime() {
        let p = 1_000_000_007u64;
        assert_eq!(p % 4, 3);
        let r = curve(CM_I).reduce_mod_p(p).unwrap();
        assert_eq!(trace_bsgs(&r), 0);
    }

    #[test]
    fn bsgs_large_split_prime_matches_sum_of_squares() {
        // p ≡ 1 mod 4: a_p = ±2u with p = u^2 + v^2, u odd.
        let p = 1_000_000_009u64;
        assert_eq!(p % 4, 1);
        let a = trace_bsgs(&curve(CM_I).reduce_mod_p(p).unwrap());
        assert!(satisfies_hasse(p, a));
        assert_eq!(a % 2, 0);
        let u = (a / 2).unsigned_abs();
        let v2 = p - u * u;
        assert_eq!(isqrt(v2).pow(2), v2);
        assert_eq!(u % 2, 1);
    }

    #[test]
    fn bsgs_matches_naive_moderate_primes() {
        let e = curve([0, 0, 1, -1, 0]);
        for &p in arith::primes_up_to(3_000_000).iter().rev().take(5) {
            let r = e.reduce_mod_p(p).unwrap();
            assert_eq!(trace_bsgs(&r), trace_naive(&r), "p={p}");
        }
    }

    #[test]
    fn bsgs_twist_covariance() {
        let e = curve([0, 0, 1, -1, 0]);
        let t = e.quadratic_twist(5).unwrap();
        for p in [1_000_003u64, 999_999_937, 1_000_000_007] {
            let a = trace_bsgs(&e.reduce_mod_p(p).unwrap());
            let at = trace_bsgs(&t.reduce_mod_p(p).unwrap());
            assert_eq!(at, kronecker(5, p as i64).unwrap() as i64 * a, "p={p}");
        }
    }

    #[test]
    fn scan_skips_bad_primes() {
        let recs = scan(&curve(E11A1), 20).unwrap();
        let ps: Vec<u64> = recs.iter().map(|r| r.p).collect();
        assert_eq!(ps, vec![2, 3, 5, 7, 13, 17, 19]);
        assert!(scan(&curve(E11A1), 1).unwrap().is_empty());
    }

    #[test]
    fn scan_cm_i_inert_primes_supersingular() {
        for rec in scan(&curve(CM_I), 100).unwrap() {
            if rec.p >= 5 && rec.p % 4 == 3 {
                assert_eq!(rec.a_p, 0);
                assert_eq!(rec.red_type, RedType::Supersingular);
                assert_eq!(kronecker(rec.frob_disc.value(), rec.p as i64), Ok(0));
            }
        }
    }

    #[test]
    fn engine_threshold_does_not_change_results() {
        let e = curve(E11A1);
        let all_naive = TraceEngine::new(u64::MAX).scan(&e, 3000).unwrap();
        let all_bsgs = TraceEngine::new(0).scan(&e, 3000).unwrap();
        assert_eq!(all_naive, all_bsgs);
    }
}
