//! Integer and modular arithmetic: prime sieve, Kronecker symbol,
//! squarefree parts and fundamental discriminants.
//!
//! Everything here works on machine words. Products are widened to `u128`
//! before reduction, so moduli up to `2^63` are safe.

use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Trial-division bound used before falling back to Pollard rho.
pub const TRIAL_DIVISION_BOUND: u64 = 20_000;

const SEGMENT_LEN: u64 = 1 << 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ArithError {
    #[error("Kronecker symbol ({a}|0) is undefined unless |a| = 1")]
    ZeroModulus { a: i64 },
    #[error("input must be nonzero")]
    Zero,
    #[error("{0} is not squarefree")]
    NotSquarefree(i64),
    #[error("{0} is not a fundamental discriminant")]
    NotFundamental(i64),
    #[error("could not factor cofactor {0}")]
    Unfactored(u64),
}

/// All primes `<= x` in increasing order, via a segmented sieve of Eratosthenes.
pub fn primes_up_to(x: u64) -> Vec<u64> {
    if x < 2 {
        return Vec::new();
    }
    let root = isqrt(x);
    let base = simple_sieve(root);
    let mut out = Vec::with_capacity(prime_count_estimate(x));
    let mut seg = vec![true; SEGMENT_LEN as usize];
    let mut low = 2u64;
    while low <= x {
        let high = (low + SEGMENT_LEN - 1).min(x);
        let len = (high - low + 1) as usize;
        seg[..len].fill(true);
        for &q in &base {
            if q * q > high {
                break;
            }
            let mut start = (q * q).max(low.div_ceil(q) * q);
            while start <= high {
                seg[(start - low) as usize] = false;
                start += q;
            }
        }
        out.extend(
            seg[..len]
                .iter()
                .enumerate()
                .filter(|(_, &is_p)| is_p)
                .map(|(i, _)| low + i as u64),
        );
        low = high + 1;
    }
    out
}

fn simple_sieve(n: u64) -> Vec<u64> {
    let n = n as usize;
    if n < 2 {
        return Vec::new();
    }
    let mut is_p = vec![true; n + 1];
    is_p[0] = false;
    is_p[1] = false;
    let mut i = 2;
    while i * i <= n {
        if is_p[i] {
            let mut j = i * i;
            while j <= n {
                is_p[j] = false;
                j += i;
            }
        }
        i += 1;
    }
    is_p.iter()
        .enumerate()
        .filter(|(_, &b)| b)
        .map(|(i, _)| i as u64)
        .collect()
}

fn prime_count_estimate(x: u64) -> usize {
    if x < 17 {
        return 8;
    }
    let xf = x as f64;
    (1.26 * xf / xf.ln()) as usize
}

fn small_primes() -> &'static [u64] {
    static PRIMES: OnceLock<Vec<u64>> = OnceLock::new();
    PRIMES.get_or_init(|| primes_up_to(TRIAL_DIVISION_BOUND))
}

/// Integer square root (floor).
pub fn isqrt(n: u64) -> u64 {
    if n == 0 {
        return 0;
    }
    let mut r = (n as f64).sqrt() as u64;
    while r.checked_mul(r).is_none_or(|sq| sq > n) {
        r -= 1;
    }
    while (r + 1).checked_mul(r + 1).is_some_and(|sq| sq <= n) {
        r += 1;
    }
    r
}

#[inline]
pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

#[inline]
pub fn add_mod(a: u64, b: u64, m: u64) -> u64 {
    let s = a as u128 + b as u128;
    if s >= m as u128 {
        (s - m as u128) as u64
    } else {
        s as u64
    }
}

#[inline]
pub fn sub_mod(a: u64, b: u64, m: u64) -> u64 {
    if a >= b {
        a - b
    } else {
        m - (b - a)
    }
}

pub fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Inverse of `a` modulo `m`, if `gcd(a, m) = 1`.
pub fn inv_mod(a: u64, m: u64) -> Option<u64> {
    let (mut old_r, mut r) = (a as i128 % m as i128, m as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    if old_r != 1 {
        return None;
    }
    Some(old_s.rem_euclid(m as i128) as u64)
}

/// Reduces a signed integer into `[0, m)`.
#[inline]
pub fn reduce_signed(a: i128, m: u64) -> u64 {
    a.rem_euclid(m as i128) as u64
}

/// Square root of a quadratic residue modulo an odd prime (Tonelli–Shanks).
pub fn sqrt_mod(a: u64, p: u64) -> Option<u64> {
    let a = a % p;
    if a == 0 {
        return Some(0);
    }
    if p == 2 {
        return Some(a);
    }
    if pow_mod(a, (p - 1) / 2, p) != 1 {
        return None;
    }
    if p % 4 == 3 {
        return Some(pow_mod(a, (p + 1) / 4, p));
    }
    let mut q = p - 1;
    let mut s = 0;
    while q.is_multiple_of(2) {
        q /= 2;
        s += 1;
    }
    let mut z = 2;
    while pow_mod(z, (p - 1) / 2, p) != p - 1 {
        z += 1;
    }
    let mut m = s;
    let mut c = pow_mod(z, q, p);
    let mut t = pow_mod(a, q, p);
    let mut r = pow_mod(a, q.div_ceil(2), p);
    while t != 1 {
        let mut i = 0;
        let mut t2 = t;
        while t2 != 1 {
            t2 = mul_mod(t2, t2, p);
            i += 1;
        }
        let b = pow_mod(c, 1 << (m - i - 1), p);
        m = i;
        c = mul_mod(b, b, p);
        t = mul_mod(t, c, p);
        r = mul_mod(r, b, p);
    }
    Some(r)
}

/// Deterministic Miller–Rabin for all 64-bit inputs.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &q in &[2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n.is_multiple_of(q) {
            return n == q;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'witness: for &a in &[2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Brent's variant of Pollard rho. Returns a nontrivial factor of the odd
/// composite `n`, or `None` if the iteration budget runs out.
fn pollard_rho(n: u64) -> Option<u64> {
    const BATCH: u64 = 128;
    const MAX_ROUNDS: u64 = 1 << 22;
    for c in 1..64u64 {
        let f = |x: u64| add_mod(mul_mod(x, x, n), c, n);
        let (mut y, mut r, mut q) = (2u64, 1u64, 1u64);
        let (mut x, mut ys);
        let mut g = 1;
        loop {
            x = y;
            for _ in 0..r {
                y = f(y);
            }
            let mut k = 0;
            ys = y;
            while k < r && g == 1 {
                ys = y;
                for _ in 0..BATCH.min(r - k) {
                    y = f(y);
                    q = mul_mod(q, x.abs_diff(y), n);
                }
                g = gcd(q, n);
                k += BATCH;
            }
            r *= 2;
            if g != 1 || r > MAX_ROUNDS {
                break;
            }
        }
        if g == n {
            loop {
                ys = f(ys);
                g = gcd(x.abs_diff(ys), n);
                if g > 1 {
                    break;
                }
            }
        }
        if g != 1 && g != n {
            return Some(g);
        }
    }
    None
}

/// Prime factorization of `n >= 1` as `(prime, exponent)` pairs in increasing order.
pub fn factorize(n: u64) -> Result<Vec<(u64, u32)>, ArithError> {
    if n == 0 {
        return Err(ArithError::Zero);
    }
    let mut rest = n;
    let mut out = Vec::new();
    for &q in small_primes() {
        if q * q > rest {
            break;
        }
        if rest.is_multiple_of(q) {
            let mut e = 0;
            while rest.is_multiple_of(q) {
                rest /= q;
                e += 1;
            }
            out.push((q, e));
        }
    }
    if rest > 1 {
        let mut large = Vec::new();
        split_large(rest, &mut large)?;
        large.sort_unstable();
        for q in large {
            match out.last_mut() {
                Some((last, e)) if *last == q => *e += 1,
                _ => out.push((q, 1)),
            }
        }
    }
    Ok(out)
}

/// Splits a cofactor with no prime factor below the trial-division bound.
fn split_large(n: u64, out: &mut Vec<u64>) -> Result<(), ArithError> {
    let bound = TRIAL_DIVISION_BOUND;
    if n < bound * bound || is_prime(n) {
        out.push(n);
        return Ok(());
    }
    let f = pollard_rho(n).ok_or(ArithError::Unfactored(n))?;
    split_large(f, out)?;
    split_large(n / f, out)
}

/// Kronecker symbol `(a|n)` with the full classical extension to even and
/// negative `n`.
pub fn kronecker(a: i64, n: i64) -> Result<i8, ArithError> {
    if n == 0 {
        return if a == 1 || a == -1 {
            Ok(1)
        } else {
            Err(ArithError::ZeroModulus { a })
        };
    }
    let mut a = a as i128;
    let mut n = n as i128;
    let mut result = 1i8;
    if n < 0 {
        n = -n;
        if a < 0 {
            result = -result;
        }
    }
    let twos = n.trailing_zeros();
    if twos > 0 {
        if a % 2 == 0 {
            return Ok(0);
        }
        n >>= twos;
        if twos % 2 == 1 && matches!(a.rem_euclid(8), 3 | 5) {
            result = -result;
        }
    }
    a = a.rem_euclid(n);
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            if matches!(n % 8, 3 | 5) {
                result = -result;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            result = -result;
        }
        a %= n;
    }
    Ok(if n == 1 { result } else { 0 })
}

/// The squarefree `d` with `n = d * m^2` and `sign(d) = sign(n)`.
pub fn squarefree_part(n: i64) -> Result<i64, ArithError> {
    if n == 0 {
        return Err(ArithError::Zero);
    }
    let mut d: i64 = n.signum();
    for (q, e) in factorize(n.unsigned_abs())? {
        if e % 2 == 1 {
            d *= q as i64;
        }
    }
    Ok(d)
}

/// Discriminant of a quadratic field, or `1` for the field ℚ itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "i64")]
pub struct FundamentalDiscriminant(i64);

impl FundamentalDiscriminant {
    /// The sentinel naming the field ℚ.
    pub const RATIONAL: Self = Self(1);

    pub fn new(value: i64) -> Result<Self, ArithError> {
        if value == 1 || is_fundamental(value) {
            Ok(Self(value))
        } else {
            Err(ArithError::NotFundamental(value))
        }
    }

    pub fn value(self) -> i64 {
        self.0
    }

    pub fn is_imaginary(self) -> bool {
        self.0 < 0
    }
}

fn is_fundamental(v: i64) -> bool {
    if v == 0 || v == 1 {
        return false;
    }
    let squarefree = |x: i64| squarefree_part(x).is_ok_and(|s| s == x);
    match v.rem_euclid(16) {
        1 | 5 | 9 | 13 => squarefree(v),
        8 | 12 => squarefree(v / 4),
        _ => false,
    }
}

impl TryFrom<i64> for FundamentalDiscriminant {
    type Error = ArithError;
    fn try_from(v: i64) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<FundamentalDiscriminant> for i64 {
    fn from(d: FundamentalDiscriminant) -> i64 {
        d.0
    }
}

impl fmt::Display for FundamentalDiscriminant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Canonical name of ℚ(√d) for squarefree `d`: `d` when `d ≡ 1 (mod 4)`, else `4d`.
pub fn fundamental_discriminant(d: i64) -> Result<FundamentalDiscriminant, ArithError> {
    if d == 0 {
        return Err(ArithError::Zero);
    }
    if squarefree_part(d)? != d {
        return Err(ArithError::NotSquarefree(d));
    }
    if d == 1 {
        return Ok(FundamentalDiscriminant::RATIONAL);
    }
    let v = if d.rem_euclid(4) == 1 { d } else { 4 * d };
    FundamentalDiscriminant::new(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn trial_division_primes(x: u64) -> Vec<u64> {
        (2..=x)
            .filter(|&n| (2..n).take_while(|d| d * d <= n).all(|d| n % d != 0))
            .collect()
    }

    fn euler_criterion(a: i64, p: u64) -> i8 {
        let r = pow_mod(reduce_signed(a as i128, p), (p - 1) / 2, p);
        match r {
            0 => 0,
            1 => 1,
            _ => -1,
        }
    }

    #[test]
    fn small_prime_lists() {
        assert_eq!(primes_up_to(10), vec![2, 3, 5, 7]);
        assert_eq!(primes_up_to(2), vec![2]);
        assert!(primes_up_to(1).is_empty());
        assert!(primes_up_to(0).is_empty());
        assert_eq!(primes_up_to(100).len(), trial_division_primes(100).len());
        assert_eq!(primes_up_to(100).len(), 25);
    }

    #[test]
    fn sieve_matches_trial_division_to_1e5() {
        assert_eq!(primes_up_to(100_000), trial_division_primes(100_000));
    }

    #[test]
    fn sieve_across_segment_boundaries() {
        let x = 3 * SEGMENT_LEN + 17;
        let primes = primes_up_to(x);
        assert!(primes.iter().all(|&p| is_prime(p)));
        assert_eq!(primes.len(), (2..=x).filter(|&n| is_prime(n)).count());
    }

    #[test]
    fn kronecker_examples() {
        assert_eq!(kronecker(-4, 5), Ok(1));
        assert_eq!(kronecker(-7, 7), Ok(0));
        assert_eq!(kronecker(-3, 5), Ok(-1));
    }

    #[test]
    fn kronecker_zero_conventions() {
        assert_eq!(kronecker(1, 0), Ok(1));
        assert_eq!(kronecker(-1, 0), Ok(1));
        assert!(kronecker(2, 0).is_err());
        assert_eq!(kronecker(0, 1), Ok(1));
        assert_eq!(kronecker(0, -1), Ok(1));
        assert_eq!(kronecker(0, 3), Ok(0));
    }

    #[test]
    fn kronecker_negative_and_even_moduli() {
        // (a|-1) is the sign of a.
        assert_eq!(kronecker(-5, -1), Ok(-1));
        assert_eq!(kronecker(5, -1), Ok(1));
        // (a|2) depends on a mod 8.
        assert_eq!(kronecker(1, 2), Ok(1));
        assert_eq!(kronecker(7, 2), Ok(1));
        assert_eq!(kronecker(3, 2), Ok(-1));
        assert_eq!(kronecker(5, 2), Ok(-1));
        assert_eq!(kronecker(-3, 2), Ok(-1));
        assert_eq!(kronecker(4, 2), Ok(0));
        assert_eq!(kronecker(-4, 8), Ok(0));
        assert_eq!(kronecker(-7, 8), Ok(1));
    }

    #[test]
    fn kronecker_agrees_with_euler_criterion() {
        let primes = primes_up_to(1000);
        for d in -99i64..100 {
            if d == 0 || d == 1 || squarefree_part(d).unwrap() != d {
                continue;
            }
            let disc = fundamental_discriminant(d).unwrap().value();
            for &p in primes.iter().skip(1) {
                if d.unsigned_abs() % p == 0 {
                    continue;
                }
                let e = euler_criterion(d, p);
                assert_eq!(kronecker(d, p as i64).unwrap(), e, "d={d} p={p}");
                assert_eq!(kronecker(disc, p as i64).unwrap(), e, "disc={disc} p={p}");
            }
        }
    }

    #[test]
    fn squarefree_examples() {
        assert_eq!(squarefree_part(12), Ok(3));
        assert_eq!(squarefree_part(-16), Ok(-1));
        assert_eq!(squarefree_part(-75), Ok(-3));
        assert_eq!(squarefree_part(1), Ok(1));
        assert_eq!(squarefree_part(-1), Ok(-1));
        assert_eq!(squarefree_part(0), Err(ArithError::Zero));
    }

    #[test]
    fn squarefree_large_cofactors() {
        // Products of two primes above the trial-division bound.
        let (q1, q2) = (1_000_003i64, 1_000_033i64);
        assert_eq!(squarefree_part(-q1 * q2), Ok(-q1 * q2));
        assert_eq!(squarefree_part(q1 * q1 * 7), Ok(7));
        assert_eq!(squarefree_part(-(q1 * q1)), Ok(-1));
        let big_prime = 4_000_000_007i64;
        assert!(is_prime(big_prime as u64));
        assert_eq!(squarefree_part(-big_prime), Ok(-big_prime));
    }

    #[test]
    fn squarefree_invariant_under_square_factors() {
        for n in -10_000i64..=10_000 {
            if n == 0 {
                continue;
            }
            let base = squarefree_part(n).unwrap();
            for k in 1..=10i64 {
                assert_eq!(squarefree_part(n * k * k).unwrap(), base);
            }
        }
    }

    #[test]
    fn fundamental_examples() {
        assert_eq!(fundamental_discriminant(-1).unwrap().value(), -4);
        assert_eq!(fundamental_discriminant(-3).unwrap().value(), -3);
        assert_eq!(fundamental_discriminant(-2).unwrap().value(), -8);
        assert_eq!(
            fundamental_discriminant(1).unwrap(),
            FundamentalDiscriminant::RATIONAL
        );
        assert_eq!(
            fundamental_discriminant(-4),
            Err(ArithError::NotSquarefree(-4))
        );
        assert_eq!(fundamental_discriminant(0), Err(ArithError::Zero));
    }

    #[test]
    fn fundamental_discriminant_validation() {
        for v in [-3, -4, -7, -8, -11, -15, -20, -24, -163, 5, 8, 12, 13, 1] {
            assert!(FundamentalDiscriminant::new(v).is_ok(), "{v}");
        }
        for v in [0, -1, -2, -12, -16, 4, 9, -27, 2, 3] {
            assert!(FundamentalDiscriminant::new(v).is_err(), "{v}");
        }
    }

    #[test]
    fn factorize_reconstructs() {
        for n in [1u64, 2, 360, 97 * 97 * 101, 600_851_475_143, (1 << 61) - 1] {
            let f = factorize(n).unwrap();
            assert_eq!(f.iter().map(|&(q, e)| q.pow(e)).product::<u64>(), n);
            assert!(f.iter().all(|&(q, _)| is_prime(q)));
        }
    }

    #[test]
    fn sqrt_mod_roundtrip() {
        for &p in &[3u64, 5, 13, 17, 97, 1_000_000_007, 998_244_353] {
            for a in 1..50u64 {
                if let Some(r) = sqrt_mod(a, p) {
                    assert_eq!(mul_mod(r, r, p), a % p);
                } else {
                    assert_eq!(pow_mod(a, (p - 1) / 2, p), p - 1);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn kronecker_multiplicative_in_a(a in -500i64..500, b in -500i64..500, n in 1i64..500) {
            let ab = kronecker(a * b, n).unwrap();
            prop_assert_eq!(ab, kronecker(a, n).unwrap() * kronecker(b, n).unwrap());
        }

        #[test]
        fn kronecker_multiplicative_in_n(a in -500i64..500, m in 1i64..300, n in 1i64..300) {
            let mn = kronecker(a, m * n).unwrap();
            prop_assert_eq!(mn, kronecker(a, m).unwrap() * kronecker(a, n).unwrap());
        }

        #[test]
        fn squarefree_part_divides_with_square_quotient(n in -1_000_000_000i64..1_000_000_000) {
            prop_assume!(n != 0);
            let d = squarefree_part(n).unwrap();
            prop_assert_eq!(n % d, 0);
            let q = (n / d) as u64;
            let r = isqrt(q);
            prop_assert_eq!(r * r, q);
        }
    }
}
