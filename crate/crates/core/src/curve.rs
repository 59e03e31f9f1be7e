//! Integral long Weierstrass models over ℚ.
//!
//! A model `y^2 + a1 xy + a3 y = x^3 + a2 x^2 + a4 x + a6` is stored with its
//! discriminant and the full set of primes dividing it. Models are not
//! minimized, so the bad-prime set may contain a few primes of good reduction
//! for the curve's minimal model.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::arith::{self, add_mod, inv_mod, mul_mod, pow_mod, reduce_signed, sub_mod};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CurveError {
    #[error("singular model {0} (discriminant 0)")]
    Singular(String),
    #[error("malformed model {input:?}: {reason}")]
    Parse { input: String, reason: String },
    #[error("twist parameter {0} must be a nonzero squarefree integer")]
    InvalidTwist(i64),
    #[error("coefficients of the twisted model overflow 64 bits")]
    Overflow,
    #[error("could not factor the discriminant {0}")]
    UnfactoredDiscriminant(String),
}

/// Nonsingular integral Weierstrass model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeierstrassCurve {
    coeffs: [i64; 5],
    disc: BigInt,
    bad_primes: Vec<u64>,
    label: Option<String>,
}

impl WeierstrassCurve {
    pub fn new(coeffs: [i64; 5]) -> Result<Self, CurveError> {
        let disc = discriminant(coeffs);
        if disc.is_zero() {
            return Err(CurveError::Singular(format_model(&coeffs)));
        }
        let bad_primes = prime_divisors(disc.magnitude())
            .ok_or_else(|| CurveError::UnfactoredDiscriminant(disc.to_string()))?;
        Ok(Self {
            coeffs,
            disc,
            bad_primes,
            label: None,
        })
    }

    /// Short model `y^2 = x^3 + a x + b`.
    pub fn short(a: i64, b: i64) -> Result<Self, CurveError> {
        Self::new([0, 0, 0, a, b])
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn coefficients(&self) -> [i64; 5] {
        self.coeffs
    }

    pub fn discriminant(&self) -> &BigInt {
        &self.disc
    }

    /// Primes dividing the discriminant, increasing.
    pub fn bad_primes(&self) -> &[u64] {
        &self.bad_primes
    }

    pub fn has_good_reduction(&self, p: u64) -> bool {
        self.bad_primes.binary_search(&p).is_err()
    }

    /// Label if present, otherwise the bracket form of the model.
    pub fn name(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.to_string())
    }

    /// Reduction modulo the prime `p`, or `None` when `p` divides the discriminant.
    ///
    /// For `p >= 5` the model is brought to short form by completing the
    /// square in `y` and depressing the cubic in `x`, which gives
    /// `A = -c4/48`, `B = -c6/864`. For `p` in `{2, 3}` the long model is kept.
    pub fn reduce_mod_p(&self, p: u64) -> Option<ReducedCurve> {
        if !self.has_good_reduction(p) {
            return None;
        }
        let [a1, a2, a3, a4, a6] = self.coeffs.map(|c| reduce_signed(c as i128, p));
        if p < 5 {
            return Some(ReducedCurve {
                p,
                form: ReducedForm::Raw([a1, a2, a3, a4, a6]),
            });
        }
        let m = |x, y| mul_mod(x, y, p);
        let b2 = add_mod(m(a1, a1), m(4, a2), p);
        let b4 = add_mod(m(2, a4), m(a1, a3), p);
        let b6 = add_mod(m(a3, a3), m(4, a6), p);
        let c4 = sub_mod(m(b2, b2), m(24, b4), p);
        let c6 = sub_mod(
            sub_mod(m(m(36, b2), b4), m(m(b2, b2), b2), p),
            m(216, b6),
            p,
        );
        let inv48 = inv_mod(48 % p, p).expect("p >= 5");
        let inv864 = inv_mod(864 % p, p).expect("p >= 5");
        let a = sub_mod(0, m(c4, inv48), p);
        let b = sub_mod(0, m(c6, inv864), p);
        let reduced = ReducedCurve::short(p, a, b);
        debug_assert!(
            reduced.is_some(),
            "good reduction gives a nonsingular short model"
        );
        reduced
    }

    /// Short model `(a, b)` over ℚ: the model itself when `a1 = a2 = a3 = 0`,
    /// otherwise `y^2 = x^3 - 27 c4 x - 54 c6`.
    pub fn short_model(&self) -> (BigInt, BigInt) {
        let [a1, a2, a3, a4, a6] = self.coeffs;
        if a1 == 0 && a2 == 0 && a3 == 0 {
            return (BigInt::from(a4), BigInt::from(a6));
        }
        let (c4, c6) = c_invariants(self.coeffs);
        (c4 * -27, c6 * -54)
    }

    /// Quadratic twist by the squarefree `d`: `y^2 = x^3 + a d^2 x + b d^3`
    /// built on [`Self::short_model`].
    pub fn quadratic_twist(&self, d: i64) -> Result<Self, CurveError> {
        if d == 0 || arith::squarefree_part(d).ok() != Some(d) {
            return Err(CurveError::InvalidTwist(d));
        }
        let (a, b) = self.short_model();
        let d = BigInt::from(d);
        let ta = a * &d * &d;
        let tb = b * &d * &d * &d;
        let (ta, tb) = (
            ta.to_i64().ok_or(CurveError::Overflow)?,
            tb.to_i64().ok_or(CurveError::Overflow)?,
        );
        Self::short(ta, tb)
    }
}

impl fmt::Display for WeierstrassCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_model(&self.coeffs))
    }
}

/// Bracket syntax `[a1,a2,a3,a4,a6]`.
pub fn format_model(c: &[i64; 5]) -> String {
    format!("[{},{},{},{},{}]", c[0], c[1], c[2], c[3], c[4])
}

/// Parses the bracket syntax `[a1,a2,a3,a4,a6]` (whitespace tolerated).
pub fn parse_model(input: &str) -> Result<[i64; 5], CurveError> {
    let err = |reason: &str| CurveError::Parse {
        input: input.to_string(),
        reason: reason.to_string(),
    };
    let inner = input
        .trim()
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .ok_or_else(|| err("expected [a1,a2,a3,a4,a6]"))?;
    let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
    if parts.len() != 5 {
        return Err(err("expected exactly 5 coefficients"));
    }
    let mut out = [0i64; 5];
    for (slot, part) in out.iter_mut().zip(parts) {
        *slot = part
            .parse()
            .map_err(|_| err(&format!("{part:?} is not a 64-bit integer")))?;
    }
    Ok(out)
}

impl FromStr for WeierstrassCurve {
    type Err = CurveError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::new(parse_model(s)?)
    }
}

fn b_invariants(c: [i64; 5]) -> [BigInt; 4] {
    let [a1, a2, a3, a4, a6] = c.map(BigInt::from);
    let b2 = &a1 * &a1 + &a2 * 4;
    let b4 = &a4 * 2 + &a1 * &a3;
    let b6 = &a3 * &a3 + &a6 * 4;
    let b8 = &a1 * &a1 * &a6 + &a2 * &a6 * 4 - &a1 * &a3 * &a4 + &a2 * &a3 * &a3 - &a4 * &a4;
    [b2, b4, b6, b8]
}

fn c_invariants(c: [i64; 5]) -> (BigInt, BigInt) {
    let [b2, b4, b6, _] = b_invariants(c);
    let c4 = &b2 * &b2 - &b4 * 24;
    let c6 = -(&b2 * &b2 * &b2) + &b2 * &b4 * 36 - &b6 * 216;
    (c4, c6)
}

/// Discriminant of the long Weierstrass model, in exact arithmetic.
pub fn discriminant(c: [i64; 5]) -> BigInt {
    let [b2, b4, b6, b8] = b_invariants(c);
    -(&b2 * &b2 * &b8) - &b4 * &b4 * &b4 * 8 - &b6 * &b6 * 27 + &b2 * &b4 * &b6 * 9
}

/// Distinct prime divisors of `n`, increasing; `None` if a cofactor resists factoring.
fn prime_divisors(n: &BigUint) -> Option<Vec<u64>> {
    let mut rest = n.clone();
    let mut out = Vec::new();
    if rest.is_zero() {
        return None;
    }
    for &q in arith::primes_up_to(1 << 16).iter() {
        let qb = BigUint::from(q);
        if rest.is_one() {
            break;
        }
        if (&rest % &qb).is_zero() {
            out.push(q);
            while (&rest % &qb).is_zero() {
                rest /= &qb;
            }
        }
    }
    let mut stack = vec![rest];
    while let Some(m) = stack.pop() {
        if m.is_one() {
            continue;
        }
        if let Some(small) = m.to_u64() {
            out.extend(arith::factorize(small).ok()?.into_iter().map(|(q, _)| q));
            continue;
        }
        if probably_prime(&m) {
            // A prime above 2^64 can never be a scanned prime; it is recorded
            // only through the discriminant itself.
            continue;
        }
        let f = big_rho(&m)?;
        stack.push(&m / &f);
        stack.push(f);
    }
    out.sort_unstable();
    out.dedup();
    Some(out)
}

fn probably_prime(n: &BigUint) -> bool {
    let one = BigUint::one();
    let n1 = n - &one;
    let s = n1.trailing_zeros().unwrap_or(0);
    let d = &n1 >> s;
    'witness: for a in [2u32, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47] {
        let mut x = BigUint::from(a).modpow(&d, n);
        if x == one || x == n1 {
            continue;
        }
        for _ in 1..s {
            x = &x * &x % n;
            if x == n1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn big_rho(n: &BigUint) -> Option<BigUint> {
    for c in 1u32..32 {
        let c = BigUint::from(c);
        let f = |x: &BigUint| (x * x + &c) % n;
        let mut x = BigUint::from(2u32);
        let mut y = x.clone();
        for _ in 0..(1u32 << 20) {
            x = f(&x);
            y = f(&f(&y));
            let diff = if x > y { &x - &y } else { &y - &x };
            let g = diff.gcd(n);
            if g == *n {
                break;
            }
            if !g.is_one() {
                return Some(g);
            }
        }
    }
    None
}

/// Coefficients of a reduced model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReducedForm {
    /// `y^2 = x^3 + a x + b` over 𝔽_p, `p >= 5`.
    Short { a: u64, b: u64 },
    /// Long model residues `[a1, a2, a3, a4, a6]`, used for `p` in `{2, 3}`.
    Raw([u64; 5]),
}

/// Nonsingular model over 𝔽_p.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReducedCurve {
    p: u64,
    form: ReducedForm,
}

impl ReducedCurve {
    /// `y^2 = x^3 + a x + b` over 𝔽_p, or `None` if `p < 5` or the model is singular.
    pub fn short(p: u64, a: u64, b: u64) -> Option<Self> {
        if p < 5 {
            return None;
        }
        let (a, b) = (a % p, b % p);
        let disc = add_mod(
            mul_mod(4, pow_mod(a, 3, p), p),
            mul_mod(27 % p, mul_mod(b, b, p), p),
            p,
        );
        (disc != 0).then_some(Self {
            p,
            form: ReducedForm::Short { a, b },
        })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn form(&self) -> ReducedForm {
        self.form
    }
}

/// `#E(𝔽_p)` including the point at infinity, by enumeration.
///
/// Short models count the roots of `y^2 = f(x)` per `x` with Euler's
/// criterion; long models at `p in {2, 3}` test every `(x, y)` pair.
pub fn point_count_enum(r: &ReducedCurve) -> u64 {
    let p = r.p;
    match r.form {
        ReducedForm::Short { a, b } => {
            let mut count = 1;
            for x in 0..p {
                let fx = add_mod(add_mod(pow_mod(x, 3, p), mul_mod(a, x, p), p), b, p);
                count += match pow_mod(fx, (p - 1) / 2, p) {
                    0 => 1,
                    1 => 2,
                    _ => 0,
                };
            }
            count
        }
        ReducedForm::Raw([a1, a2, a3, a4, a6]) => {
            let mut count = 1;
            for x in 0..p {
                let rhs = (x * x * x + a2 * x * x + a4 * x + a6) % p;
                count += (0..p)
                    .filter(|&y| (y * y + a1 * x * y + a3 * y) % p == rhs)
                    .count() as u64;
            }
            count
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(s: &str) -> WeierstrassCurve {
        s.parse().unwrap()
    }

    /// Affine points of the long model by testing every pair.
    fn brute_force_count(coeffs: [i64; 5], p: u64) -> u64 {
        let [a1, a2, a3, a4, a6] = coeffs.map(|v| v.rem_euclid(p as i64) as u64);
        let mut n = 1;
        for x in 0..p {
            for y in 0..p {
                let lhs = (y * y + a1 * x * y + a3 * y) % p;
                let rhs = (x * x % p * x + a2 * x % p * x + a4 * x + a6) % p;
                if lhs == rhs {
                    n += 1;
                }
            }
        }
        n
    }

    #[test]
    fn discriminant_examples() {
        assert_eq!(discriminant([0, 0, 0, -1, 0]), BigInt::from(64));
        assert_eq!(discriminant([0, -1, 1, -10, -20]), BigInt::from(-161_051));
        assert_eq!(discriminant([0, 0, 0, 0, 1]), BigInt::from(-432));
        assert_eq!(discriminant([0, 0, 1, -1, 0]), BigInt::from(37));
    }

    #[test]
    fn bad_primes_are_discriminant_divisors() {
        assert_eq!(c("[0,-1,1,-10,-20]").bad_primes(), &[11]);
        assert_eq!(c("[0,0,0,-1,0]").bad_primes(), &[2]);
        assert_eq!(c("[0,0,0,0,1]").bad_primes(), &[2, 3]);
        assert_eq!(c("[0,-1,1,-7820,-263580]").bad_primes(), &[11]);
        let big = WeierstrassCurve::new([1, -1, 1, -1_000_003, 12_345_678_901]).unwrap();
        let mut rest = big.discriminant().magnitude().clone();
        for &q in big.bad_primes() {
            while (&rest % q).is_zero() {
                rest /= q;
            }
        }
        assert!(rest.is_one() || rest.to_u64().is_none());
    }

    #[test]
    fn singular_model_rejected() {
        assert!(matches!(
            WeierstrassCurve::new([0, 0, 0, 0, 0]),
            Err(CurveError::Singular(_))
        ));
        // y^2 = x^3 - 3x + 2 = (x - 1)^2 (x + 2)
        assert!(WeierstrassCurve::short(-3, 2).is_err());
    }

    #[test]
    fn parse_and_display() {
        let e = c(" [0, -1, 1, -10, -20] ");
        assert_eq!(e.to_string(), "[0,-1,1,-10,-20]");
        for bad in [
            "0,-1,1,-10,-20",
            "[0,-1,1,-10]",
            "[0,a,1,-10,-20]",
            "[]",
            "",
        ] {
            assert!(
                matches!(
                    bad.parse::<WeierstrassCurve>(),
                    Err(CurveError::Parse { .. })
                ),
                "{bad}"
            );
        }
    }

    #[test]
    fn reduction_examples() {
        let e11 = c("[0,-1,1,-10,-20]");
        assert!(e11.reduce_mod_p(11).is_none());
        let cm = c("[0,0,0,-1,0]");
        let r = cm.reduce_mod_p(5).unwrap();
        assert_eq!(r.form(), ReducedForm::Short { a: 4, b: 0 });
        assert!(cm.reduce_mod_p(2).is_none());
        let r7 = e11.reduce_mod_p(7).unwrap();
        let ReducedForm::Short { a, b } = r7.form() else {
            panic!("expected short form");
        };
        assert_ne!((4 * a * a * a + 27 * b * b) % 7, 0);
        assert!(matches!(
            e11.reduce_mod_p(3).unwrap().form(),
            ReducedForm::Raw(_)
        ));
    }

    #[test]
    fn reduction_preserves_point_count() {
        let models = [
            [0, -1, 1, -10, -20],
            [0, -1, 1, -7820, -263_580],
            [0, -1, 1, 0, 0],
            [0, 0, 1, -1, 0],
            [0, 0, 0, -1, 0],
            [0, 0, 0, 0, 1],
            [1, -1, 1, -3, 3],
        ];
        for m in models {
            let e = WeierstrassCurve::new(m).unwrap();
            for p in arith::primes_up_to(60) {
                if let Some(r) = e.reduce_mod_p(p) {
                    assert_eq!(point_count_enum(&r), brute_force_count(m, p), "{m:?} p={p}");
                }
            }
        }
    }

    #[test]
    fn point_count_examples() {
        assert_eq!(point_count_enum(&ReducedCurve::short(5, 4, 0).unwrap()), 8);
        assert_eq!(point_count_enum(&ReducedCurve::short(5, 0, 1).unwrap()), 6);
        assert_eq!(brute_force_count([0, 0, 0, -1, 0], 5), 8);
        assert_eq!(brute_force_count([0, 0, 0, 0, 1], 5), 6);
    }

    #[test]
    fn twist_examples() {
        let e = c("[0,0,0,-1,0]");
        assert_eq!(
            e.quadratic_twist(-1).unwrap().coefficients(),
            [0, 0, 0, -1, 0]
        );
        assert_eq!(
            e.quadratic_twist(5).unwrap().coefficients(),
            [0, 0, 0, -25, 0]
        );
        assert!(matches!(
            e.quadratic_twist(0),
            Err(CurveError::InvalidTwist(0))
        ));
        assert!(matches!(
            e.quadratic_twist(12),
            Err(CurveError::InvalidTwist(12))
        ));
        assert!(matches!(
            e.quadratic_twist(4_000_000_007),
            Err(CurveError::Overflow)
        ));
    }

    #[test]
    fn twist_bad_primes_bounded() {
        let e37 = c("[0,0,1,-1,0]");
        for d in [-3i64, -1, 2, 5, -15, 21] {
            let t = e37.quadratic_twist(d).unwrap();
            for &q in t.bad_primes() {
                assert!(
                    q == 2 || q == 3 || q == 37 || d.unsigned_abs() % q == 0,
                    "d={d} extra bad prime {q}"
                );
            }
        }
    }
}
