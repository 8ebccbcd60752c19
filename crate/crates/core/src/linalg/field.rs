use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// 2^31 - 1, the default modulus.
pub const DEFAULT_MODULUS: u64 = 2_147_483_647;

/// A prime field `F_q` with `2 < q < 2^32`.
///
/// Elements are plain `u64` values in canonical form `0 <= e < q`. Products
/// of two elements fit in 64 bits and are reduced with a precomputed Barrett
/// constant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Field {
    q: u64,
    barrett: u64,
    /// `2 (q - 1)^2 < 2^64`, so two products can share one reduction.
    wide: bool,
}

impl Field {
    pub fn new(q: u64) -> Result<Self> {
        if q <= 2 || q >= 1 << 32 {
            return Err(Error::UnsupportedModulus(q));
        }
        if !is_prime(q) {
            return Err(Error::NotPrime(q));
        }
        Ok(Self {
            q,
            barrett: ((1u128 << 64) / q as u128) as u64,
            wide: 2 * (q as u128 - 1) * (q as u128 - 1) < 1u128 << 64,
        })
    }

    /// The field with the default modulus 2^31 - 1.
    pub fn default_prime() -> Self {
        Self::new(DEFAULT_MODULUS).expect("default modulus is prime")
    }

    #[inline]
    pub fn modulus(&self) -> u64 {
        self.q
    }

    /// Reduces any `u64` into `[0, q)`.
    #[inline(always)]
    pub fn reduce(&self, x: u64) -> u64 {
        let quot = ((x as u128 * self.barrett as u128) >> 64) as u64;
        let r = x - quot * self.q;
        if r >= self.q {
            r - self.q
        } else {
            r
        }
    }

    /// Maps a signed integer to its canonical representative, so `-6` becomes `q - 6`.
    pub fn from_i64(&self, x: i64) -> u64 {
        (x as i128).rem_euclid(self.q as i128) as u64
    }

    /// Signed representative in `(-q/2, q/2]`, handy for printing small negatives.
    pub fn to_signed(&self, x: u64) -> i64 {
        if x > self.q / 2 {
            x as i64 - self.q as i64
        } else {
            x as i64
        }
    }

    #[inline(always)]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.q {
            s - self.q
        } else {
            s
        }
    }

    #[inline(always)]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.q - b
        }
    }

    #[inline(always)]
    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.q - a
        }
    }

    #[inline(always)]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        self.reduce(a * b)
    }

    /// `a + f * b` for canonical operands; `q(q-1) < 2^64` keeps this exact.
    #[inline(always)]
    pub fn mul_add(&self, a: u64, f: u64, b: u64) -> u64 {
        self.reduce(a + f * b)
    }

    /// `a * b + c * d` for canonical operands.
    #[inline(always)]
    pub fn dot2(&self, a: u64, b: u64, c: u64, d: u64) -> u64 {
        if self.q == DEFAULT_MODULUS {
            // 2^31 = 1 (mod q): fold the high bits down twice
            let x = a * b + c * d;
            let y = (x & DEFAULT_MODULUS) + (x >> 31);
            let y = (y & DEFAULT_MODULUS) + (y >> 31);
            return if y >= DEFAULT_MODULUS {
                y - DEFAULT_MODULUS
            } else {
                y
            };
        }
        if self.wide {
            self.reduce(a * b + c * d)
        } else {
            self.mul_add(self.mul(a, b), c, d)
        }
    }

    pub fn pow(&self, mut base: u64, mut exp: u64) -> u64 {
        let mut acc = 1;
        base = self.reduce(base);
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse by the extended Euclidean algorithm.
    pub fn inv(&self, x: u64) -> Result<u64> {
        let x = self.reduce(x);
        if x == 0 {
            return Err(Error::InversionOfZero);
        }
        let (mut r0, mut r1) = (self.q as i64, x as i64);
        let (mut t0, mut t1) = (0i64, 1i64);
        while r1 != 0 {
            let quot = r0 / r1;
            (r0, r1) = (r1, r0 - quot * r1);
            (t0, t1) = (t1, t0 - quot * t1);
        }
        debug_assert_eq!(r0, 1);
        Ok(self.from_i64(t0))
    }

    /// Inverses of all (nonzero) entries with one field inversion.
    pub fn inv_all(&self, xs: &[u64]) -> Vec<u64> {
        let mut prefix = Vec::with_capacity(xs.len());
        let mut acc = 1;
        for &x in xs {
            prefix.push(acc);
            acc = self.mul(acc, x);
        }
        let mut inv = self.inv(acc).expect("entries are nonzero");
        let mut out = vec![0; xs.len()];
        for i in (0..xs.len()).rev() {
            out[i] = self.mul(inv, prefix[i]);
            inv = self.mul(inv, xs[i]);
        }
        out
    }

    /// `num / den` in the field; used to write rationals such as 29/2.
    pub fn ratio(&self, num: i64, den: i64) -> Result<u64> {
        Ok(self.mul(self.from_i64(num), self.inv(self.from_i64(den))?))
    }
}

impl Default for Field {
    fn default() -> Self {
        Self::default_prime()
    }
}

impl Serialize for Field {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.q.to_string())
    }
}

impl<'de> Deserialize<'de> for Field {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        let q = raw.parse::<u64>().map_err(serde::de::Error::custom)?;
        Field::new(q).map_err(serde::de::Error::custom)
    }
}

/// Deterministic Miller-Rabin; bases {2, 7, 61} are exact below 4,759,123,141.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 61] {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let mulmod = |a: u64, b: u64| ((a as u128 * b as u128) % n as u128) as u64;
    let powmod = |mut b: u64, mut e: u64| {
        let mut acc = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = mulmod(acc, b);
            }
            b = mulmod(b, b);
            e >>= 1;
        }
        acc
    };
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 7, 61] {
        let mut x = powmod(a % n, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn inverse_small_cases() {
        let f = Field::new(7).unwrap();
        assert_eq!(f.inv(1).unwrap(), 1);
        assert_eq!(f.inv(2).unwrap(), 4);
        assert!(matches!(f.inv(0), Err(Error::InversionOfZero)));
    }

    #[test]
    fn inverse_exhaustive_small_prime() {
        let f = Field::new(9973).unwrap();
        for x in 1..9973 {
            assert_eq!(f.mul(f.inv(x).unwrap(), x), 1, "x={x}");
        }
    }

    #[test]
    fn rejects_bad_moduli() {
        assert!(matches!(Field::new(2), Err(Error::UnsupportedModulus(2))));
        assert!(matches!(Field::new(15), Err(Error::NotPrime(15))));
        assert!(matches!(
            Field::new(1 << 32),
            Err(Error::UnsupportedModulus(_))
        ));
        assert!(Field::new(4_294_967_291).is_ok());
    }

    #[test]
    fn primality_matches_trial_division() {
        let trial = |n: u64| {
            n >= 2
                && (2..)
                    .take_while(|d| d * d <= n)
                    .all(|d| !n.is_multiple_of(d))
        };
        for n in 0..20_000u64 {
            assert_eq!(is_prime(n), trial(n), "n={n}");
        }
        // strong pseudoprimes to small bases
        for n in [2_047u64, 1_373_653, 25_326_001, 3_215_031_751] {
            assert!(!is_prime(n));
        }
    }

    #[test]
    fn signed_mapping() {
        let f = Field::default();
        assert_eq!(f.from_i64(-6), DEFAULT_MODULUS - 6);
        assert_eq!(f.to_signed(f.from_i64(-42)), -42);
        assert_eq!(f.mul(f.ratio(29, 2).unwrap(), 2), 29);
    }

    proptest! {
        #[test]
        fn barrett_matches_remainder(x in any::<u64>(), idx in 0usize..4) {
            let q = [3u64, 9973, DEFAULT_MODULUS, 4_294_967_291][idx];
            let f = Field::new(q).unwrap();
            prop_assert_eq!(f.reduce(x), x % q);
        }

        #[test]
        fn inverse_sampled(x in 1u64..DEFAULT_MODULUS) {
            let f = Field::default();
            prop_assert_eq!(f.mul(f.inv(x).unwrap(), x), 1);
        }

        #[test]
        fn batched_inverses(xs in proptest::collection::vec(1u64..DEFAULT_MODULUS, 0..12)) {
            let f = Field::default();
            let inv = f.inv_all(&xs);
            for (x, i) in xs.iter().zip(&inv) {
                prop_assert_eq!(*i, f.inv(*x).unwrap());
            }
        }

        #[test]
        fn dot2_matches_wide_arithmetic(a in any::<u64>(), b in any::<u64>(), c in any::<u64>(), d in any::<u64>(), idx in 0usize..3) {
            let q = [9973u64, DEFAULT_MODULUS, 4_294_967_291][idx];
            let f = Field::new(q).unwrap();
            let (a, b, c, d) = (a % q, b % q, c % q, d % q);
            let expect = ((a as u128 * b as u128 + c as u128 * d as u128) % q as u128) as u64;
            prop_assert_eq!(f.dot2(a, b, c, d), expect);
        }

        #[test]
        fn dot2_at_the_top_of_the_default_field(k in 0u64..64) {
            let f = Field::default();
            let a = DEFAULT_MODULUS - 1 - k;
            let expect = ((2 * a as u128 * a as u128) % DEFAULT_MODULUS as u128) as u64;
            prop_assert_eq!(f.dot2(a, a, a, a), expect);
        }

        #[test]
        fn mul_add_exact_near_top(a in 0u64..4_294_967_291, b in 0u64..4_294_967_291, c in 0u64..4_294_967_291) {
            let q = 4_294_967_291u64;
            let f = Field::new(q).unwrap();
            let expect = ((a as u128 + b as u128 * c as u128) % q as u128) as u64;
            prop_assert_eq!(f.mul_add(a, b, c), expect);
        }
    }
}
