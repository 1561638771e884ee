//! Arithmetic in the prime field F_p for odd primes p < 2^31.
//!
//! Values are kept as canonical representatives in `[0, p)`. The modulus cap
//! guarantees that the product of two residues fits in a `u64`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sets::ResidueSet;

pub const MAX_MODULUS: u64 = (1 << 31) - 1;

/// Deterministic Miller-Rabin; the first twelve prime bases are exact for all `u64`.
pub fn is_prime(n: u64) -> bool {
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for small in BASES {
        if n == small {
            return true;
        }
        if n % small == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for a in BASES {
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

fn mul_mod(a: u64, b: u64, n: u64) -> u64 {
    ((a as u128 * b as u128) % n as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, n: u64) -> u64 {
    let mut acc = 1 % n;
    base %= n;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, n);
        }
        base = mul_mod(base, base, n);
        exp >>= 1;
    }
    acc
}

/// Distinct prime factors of `n` in increasing order, by trial division.
pub fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// All positive divisors of `n`, ascending.
pub fn divisors(n: u64) -> Vec<u64> {
    let mut small = Vec::new();
    let mut large = Vec::new();
    let mut d = 1;
    while d * d <= n {
        if n % d == 0 {
            small.push(d);
            if d * d != n {
                large.push(n / d);
            }
        }
        d += 1;
    }
    small.extend(large.into_iter().rev());
    small
}

/// The characteristic of a prime field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct FieldModulus(u64);

impl TryFrom<u64> for FieldModulus {
    type Error = Error;

    fn try_from(p: u64) -> Result<Self> {
        Self::new(p)
    }
}

impl From<FieldModulus> for u64 {
    fn from(m: FieldModulus) -> u64 {
        m.0
    }
}

impl fmt::Display for FieldModulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FieldModulus {
    pub fn new(p: u64) -> Result<Self> {
        if !(3..=MAX_MODULUS).contains(&p) {
            return Err(Error::ModulusOutOfRange(p));
        }
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        Ok(FieldModulus(p))
    }

    #[inline]
    pub fn p(self) -> u64 {
        self.0
    }

    #[inline]
    pub fn reduce(self, x: u64) -> u64 {
        x % self.0
    }

    /// Reduces a signed integer to its canonical representative.
    #[inline]
    pub fn reduce_signed(self, x: i64) -> u64 {
        x.rem_euclid(self.0 as i64) as u64
    }

    #[inline]
    pub fn add(self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.0 {
            s - self.0
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.0 - b
        }
    }

    #[inline]
    pub fn neg(self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.0 - a
        }
    }

    #[inline]
    pub fn mul(self, a: u64, b: u64) -> u64 {
        a * b % self.0
    }

    pub fn pow(self, base: u64, exp: u64) -> u64 {
        pow_mod(base, exp, self.0)
    }

    /// Inverse by the extended Euclidean algorithm.
    pub fn inv(self, a: u64) -> Result<u64> {
        let a = a % self.0;
        if a == 0 {
            return Err(Error::Domain("zero has no multiplicative inverse".into()));
        }
        let (mut r0, mut r1) = (self.0 as i64, a as i64);
        let (mut t0, mut t1) = (0i64, 1i64);
        while r1 != 0 {
            let q = r0 / r1;
            (r0, r1) = (r1, r0 - q * r1);
            (t0, t1) = (t1, t0 - q * t1);
        }
        debug_assert_eq!(r0, 1);
        Ok(self.reduce_signed(t0))
    }

    /// Multiplicative order of the group F_p^*.
    pub fn group_order(self) -> u64 {
        self.0 - 1
    }

    pub fn is_primitive_root(self, g: u64) -> bool {
        let g = g % self.0;
        if g == 0 {
            return false;
        }
        let order = self.group_order();
        prime_factors(order)
            .into_iter()
            .all(|l| self.pow(g, order / l) != 1)
    }

    /// Smallest generator of F_p^*; for p = 3 this is 2.
    pub fn primitive_root(self) -> u64 {
        (2..self.0)
            .find(|&g| self.is_primitive_root(g))
            .expect("F_p^* is cyclic")
    }

    /// The unique multiplicative subgroup of order `d`.
    pub fn subgroup(self, d: u64) -> Result<ResidueSet> {
        let order = self.group_order();
        if d == 0 || order % d != 0 {
            return Err(Error::NotDivisor { d, order });
        }
        let g = self.primitive_root();
        let step = self.pow(g, order / d);
        let mut x = 1;
        let mut elems = Vec::with_capacity(d as usize);
        for _ in 0..d {
            elems.push(x);
            x = self.mul(x, step);
        }
        ResidueSet::new(self, elems)
    }

    pub fn residue(self, value: u64) -> Result<Residue> {
        Residue::new(self, value)
    }
}

/// An element of F_p tagged with its modulus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Residue {
    value: u64,
    modulus: FieldModulus,
}

impl fmt::Display for Residue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

impl Residue {
    pub fn new(modulus: FieldModulus, value: u64) -> Result<Self> {
        if value >= modulus.p() {
            return Err(Error::ResidueOutOfRange {
                value,
                p: modulus.p(),
            });
        }
        Ok(Residue { value, modulus })
    }

    /// Builds a residue from any integer, reducing it first.
    pub fn from_signed(modulus: FieldModulus, value: i64) -> Self {
        Residue {
            value: modulus.reduce_signed(value),
            modulus,
        }
    }

    pub fn value(self) -> u64 {
        self.value
    }

    pub fn modulus(self) -> FieldModulus {
        self.modulus
    }

    pub fn is_zero(self) -> bool {
        self.value == 0
    }

    fn check(self, other: Residue) -> Result<FieldModulus> {
        if self.modulus != other.modulus {
            return Err(Error::ModulusMismatch {
                left: self.modulus.p(),
                right: other.modulus.p(),
            });
        }
        Ok(self.modulus)
    }

    fn with(self, value: u64) -> Residue {
        Residue {
            value,
            modulus: self.modulus,
        }
    }

    pub fn add(self, other: Residue) -> Result<Residue> {
        let m = self.check(other)?;
        Ok(self.with(m.add(self.value, other.value)))
    }

    pub fn sub(self, other: Residue) -> Result<Residue> {
        let m = self.check(other)?;
        Ok(self.with(m.sub(self.value, other.value)))
    }

    pub fn mul(self, other: Residue) -> Result<Residue> {
        let m = self.check(other)?;
        Ok(self.with(m.mul(self.value, other.value)))
    }

    pub fn neg(self) -> Residue {
        self.with(self.modulus.neg(self.value))
    }

    pub fn inv(self) -> Result<Residue> {
        Ok(self.with(self.modulus.inv(self.value)?))
    }

    /// Square-and-multiply; `0^0 = 1`.
    pub fn pow(self, exp: u64) -> Residue {
        self.with(self.modulus.pow(self.value, exp))
    }
}
