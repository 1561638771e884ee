//! Exponential sums over powers of a primitive root, character-sum moments,
//! and the hole statistic of the sequence `a g^n`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::FieldModulus;
use crate::numeric::{ComplexAccumulator, Neumaier};
use crate::sets::{additive_energy, ResidueSet};

const TABLE_LIMIT: u64 = 1 << 22;
const MOMENT_CHUNK: usize = 64;

/// `e_p(t) = exp(2πi t / p)` evaluated from the reduced residue `t`.
#[derive(Debug, Clone)]
pub struct AdditiveCharacter {
    modulus: FieldModulus,
    table: Option<Vec<(f64, f64)>>,
}

impl AdditiveCharacter {
    pub fn new(modulus: FieldModulus) -> Self {
        let table = (modulus.p() <= TABLE_LIMIT)
            .then(|| (0..modulus.p()).map(|t| Self::direct(modulus, t)).collect());
        AdditiveCharacter { modulus, table }
    }

    fn direct(m: FieldModulus, t: u64) -> (f64, f64) {
        let theta = std::f64::consts::TAU * (t as f64) / (m.p() as f64);
        let (s, c) = theta.sin_cos();
        (c, s)
    }

    /// `(cos, sin)` of `2π t / p` for a canonical residue `t`.
    #[inline]
    pub fn eval(&self, t: u64) -> (f64, f64) {
        match &self.table {
            Some(tab) => tab[t as usize],
            None => Self::direct(self.modulus, t),
        }
    }

    /// `Σ_{x ∈ A} e_p(a x)` with compensated accumulation.
    pub fn set_sum(&self, a: u64, set: &ResidueSet) -> (f64, f64) {
        let m = self.modulus;
        let mut acc = ComplexAccumulator::default();
        for x in set.iter() {
            let (c, s) = self.eval(m.mul(a, x));
            acc.add(c, s);
        }
        acc.value()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexSum {
    pub re: f64,
    pub im: f64,
    /// Number of unit-modulus terms summed (with multiplicity).
    pub terms: u64,
}

impl ComplexSum {
    pub fn magnitude(&self) -> f64 {
        self.re.hypot(self.im)
    }
}

/// A primitive root `g` and a frequency `a` in F_p.
#[derive(Debug, Clone)]
pub struct ExpSumSpec {
    modulus: FieldModulus,
    g: u64,
    a: u64,
    chi: AdditiveCharacter,
}

impl ExpSumSpec {
    /// Fails unless `g` is a primitive root mod p.
    pub fn new(modulus: FieldModulus, g: u64, a: u64) -> Result<Self> {
        if !modulus.is_primitive_root(g) {
            return Err(Error::Domain(format!("{g} is not a primitive root mod {}", modulus.p())));
        }
        if a >= modulus.p() {
            return Err(Error::ResidueOutOfRange { value: a, p: modulus.p() });
        }
        Ok(ExpSumSpec {
            modulus,
            g,
            a,
            chi: AdditiveCharacter::new(modulus),
        })
    }

    /// Uses the smallest primitive root.
    pub fn with_smallest_root(modulus: FieldModulus, a: u64) -> Result<Self> {
        Self::new(modulus, modulus.primitive_root(), a)
    }

    pub fn modulus(&self) -> FieldModulus {
        self.modulus
    }

    pub fn g(&self) -> u64 {
        self.g
    }

    pub fn a(&self) -> u64 {
        self.a
    }

    /// Same root and modulus, different frequency.
    pub fn with_a(&self, a: u64) -> Result<Self> {
        if a >= self.modulus.p() {
            return Err(Error::ResidueOutOfRange { value: a, p: self.modulus.p() });
        }
        Ok(ExpSumSpec { a, ..self.clone() })
    }

    fn require_nonzero_a(&self) -> Result<()> {
        if self.a == 0 {
            return Err(Error::Domain("frequency a must be nonzero".into()));
        }
        Ok(())
    }

    fn check_range(&self, name: &str, n: u64, max: u64) -> Result<()> {
        if n == 0 || n > max {
            return Err(Error::Domain(format!("{name} = {n} must lie in [1, {max}]")));
        }
        Ok(())
    }

    /// `S(a, N) = Σ_{n=1}^{N} e_p(a g^n)`, `1 <= N <= p - 1`.
    pub fn single_sum(&self, n: u64) -> Result<ComplexSum> {
        self.require_nonzero_a()?;
        self.check_range("N", n, self.modulus.p() - 1)?;
        let m = self.modulus;
        let mut acc = ComplexAccumulator::default();
        let mut x = m.mul(self.a, self.g);
        for _ in 0..n {
            let (c, s) = self.chi.eval(x);
            acc.add(c, s);
            x = m.mul(x, self.g);
        }
        let (re, im) = acc.value();
        Ok(ComplexSum { re, im, terms: n })
    }

    /// `Σ_{x=1}^{X} Σ_{y=1}^{Y} e_p(a g^{x+y})`, evaluated as
    /// `Σ_t c(t) e_p(a g^t)` with the trapezoidal weights
    /// `c(t) = min(t - 1, X, Y, X + Y + 1 - t)`. Requires `X, Y < p - 1`.
    pub fn double_sum(&self, x_len: u64, y_len: u64) -> Result<ComplexSum> {
        self.require_nonzero_a()?;
        let max = self.modulus.p() - 2;
        self.check_range("X", x_len, max)?;
        self.check_range("Y", y_len, max)?;
        let m = self.modulus;
        let mut acc = ComplexAccumulator::default();
        let mut x = m.mul(self.a, m.mul(self.g, self.g));
        for t in 2..=(x_len + y_len) {
            let w = (t - 1).min(x_len).min(y_len).min(x_len + y_len + 1 - t) as f64;
            let (c, s) = self.chi.eval(x);
            acc.add(w * c, w * s);
            x = m.mul(x, self.g);
        }
        let (re, im) = acc.value();
        Ok(ComplexSum {
            re,
            im,
            terms: x_len * y_len,
        })
    }

    /// The largest circular gap between consecutive elements of
    /// `{a g^n mod p : 1 <= n <= N}` on ℤ/p, wraparound included.
    pub fn hole_size(&self, n: u64) -> Result<u64> {
        self.require_nonzero_a()?;
        self.check_range("N", n, self.modulus.p() - 1)?;
        let m = self.modulus;
        let mut values = Vec::with_capacity(n as usize);
        let mut x = m.mul(self.a, self.g);
        for _ in 0..n {
            values.push(x);
            x = m.mul(x, self.g);
        }
        values.sort_unstable();
        values.dedup();
        let wrap = values[0] + m.p() - values[values.len() - 1];
        let inner = values.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(0);
        Ok(wrap.max(inner))
    }

    /// The set `{g^n : 1 <= n <= N}`.
    pub fn power_set(&self, n: u64) -> Result<ResidueSet> {
        power_set(self.modulus, self.g, n)
    }
}

/// `{g^n : 1 <= n <= N}` for `N <= p - 1`.
pub fn power_set(m: FieldModulus, g: u64, n: u64) -> Result<ResidueSet> {
    if n > m.p() - 1 {
        return Err(Error::Domain(format!("N = {n} exceeds the period p - 1")));
    }
    let mut x = 1;
    let values = (0..n).map(|_| {
        x = m.mul(x, g);
        x
    });
    ResidueSet::new(m, values.collect::<Vec<_>>())
}

/// Deterministic parallel reduction of `f(a)` over `a ∈ F_p`: fixed chunks,
/// each compensated, combined in order.
fn sum_over_field(m: FieldModulus, f: impl Fn(u64) -> f64 + Sync) -> f64 {
    let p = m.p() as usize;
    let partials: Vec<f64> = (0..p.div_ceil(MOMENT_CHUNK))
        .into_par_iter()
        .map(|chunk| {
            let mut acc = Neumaier::default();
            let lo = chunk * MOMENT_CHUNK;
            for a in lo..(lo + MOMENT_CHUNK).min(p) {
                acc.add(f(a as u64));
            }
            acc.value()
        })
        .collect();
    let mut acc = Neumaier::default();
    for v in partials {
        acc.add(v);
    }
    acc.value()
}

/// `(Σ_a |Σ_{x∈A} e_p(ax)|², p |A|)`.
pub fn parseval_check(set: &ResidueSet) -> (f64, f64) {
    let m = set.modulus();
    let chi = AdditiveCharacter::new(m);
    let lhs = sum_over_field(m, |a| {
        let (re, im) = chi.set_sum(a, set);
        re * re + im * im
    });
    (lhs, (m.p() as f64) * set.len() as f64)
}

/// `(Σ_a |Σ_{x∈A} e_p(ax)|⁴, p E(A))`; the two agree by orthogonality.
pub fn fourth_moment(set: &ResidueSet) -> Result<(f64, u128)> {
    let m = set.modulus();
    let chi = AdditiveCharacter::new(m);
    let moment = sum_over_field(m, |a| {
        let (re, im) = chi.set_sum(a, set);
        let sq = re * re + im * im;
        sq * sq
    });
    let energy = if set.is_empty() {
        0
    } else {
        additive_energy(set, set)?.exact_value()
    };
    Ok((moment, m.p() as u128 * energy))
}

/// The two exponents of the hole bound `p^{1 - c/8 - 1/(8ν)} + p^{1 - c/6 + 1/(12ν(ν+1))}`.
pub fn hole_bound_exponents(c: f64, nu: u32) -> (f64, f64) {
    let nu = nu as f64;
    (1.0 - c / 8.0 - 1.0 / (8.0 * nu), 1.0 - c / 6.0 + 1.0 / (12.0 * nu * (nu + 1.0)))
}

/// `log_p H`.
pub fn observed_hole_exponent(p: u64, hole: u64) -> f64 {
    (hole as f64).ln() / (p as f64).ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(p: u64) -> FieldModulus {
        FieldModulus::new(p).unwrap()
    }

    fn naive_double(spec: &ExpSumSpec, x_len: u64, y_len: u64) -> (f64, f64) {
        let m = spec.modulus();
        let mut acc = ComplexAccumulator::default();
        for x in 1..=x_len {
            for y in 1..=y_len {
                let t = m.mul(spec.a(), m.pow(spec.g(), x + y));
                let theta = std::f64::consts::TAU * t as f64 / m.p() as f64;
                acc.add(theta.cos(), theta.sin());
            }
        }
        acc.value()
    }

    fn e(p: u64, t: u64) -> (f64, f64) {
        let theta = std::f64::consts::TAU * (t % p) as f64 / p as f64;
        (theta.cos(), theta.sin())
    }

    #[test]
    fn rejects_non_primitive_roots() {
        assert!(ExpSumSpec::new(f(7), 2, 1).is_err());
        assert!(ExpSumSpec::new(f(7), 3, 1).is_ok());
        let s = ExpSumSpec::new(f(7), 3, 0).unwrap();
        assert!(s.single_sum(3).is_err());
        assert!(s.double_sum(2, 2).is_err());
        assert!(s.hole_size(3).is_err());
    }

    #[test]
    fn single_sum_examples() {
        let s = ExpSumSpec::with_smallest_root(f(101), 5).unwrap();
        let full = s.single_sum(100).unwrap();
        assert!((full.re + 1.0).abs() < 1e-9 * 101.0);
        assert!(full.im.abs() < 1e-9 * 101.0);
        let one = s.single_sum(1).unwrap();
        let want = e(101, 5 * s.g());
        assert!((one.re - want.0).abs() < 1e-14 && (one.im - want.1).abs() < 1e-14);
        assert!(s.single_sum(101).is_err());
        assert!(s.single_sum(0).is_err());
        for n in 1..=100 {
            assert!(s.single_sum(n).unwrap().magnitude() <= n as f64 + 1e-9);
        }
    }

    #[test]
    fn full_period_sum_is_minus_one() {
        for p in [3u64, 7, 101, 1009, 9973] {
            let base = ExpSumSpec::with_smallest_root(f(p), 1).unwrap();
            for a in (1..p).step_by((p as usize / 17).max(1)) {
                let s = base.with_a(a).unwrap().single_sum(p - 1).unwrap();
                assert!((s.re + 1.0).abs() <= 1e-9 * p as f64, "p={p} a={a}");
                assert!(s.im.abs() <= 1e-9 * p as f64);
            }
        }
    }

    #[test]
    fn double_sum_weights() {
        let s = ExpSumSpec::with_smallest_root(f(1009), 7).unwrap();
        let m = s.modulus();
        let one = s.double_sum(1, 1).unwrap();
        let want = e(1009, m.mul(7, m.pow(11, 2)));
        assert!((one.re - want.0).abs() < 1e-13 && (one.im - want.1).abs() < 1e-13);
        let two = s.double_sum(2, 2).unwrap();
        let terms = [(2, 1.0), (3, 2.0), (4, 1.0)];
        let (mut re, mut im) = (0.0, 0.0);
        for (t, w) in terms {
            let (c, si) = e(1009, m.mul(7, m.pow(11, t)));
            re += w * c;
            im += w * si;
        }
        assert!((two.re - re).abs() < 1e-12 && (two.im - im).abs() < 1e-12);
        assert!(s.double_sum(1008, 1).is_err());
        assert!(s.double_sum(1007, 1007).is_ok());
    }

    #[test]
    fn double_sum_matches_naive_loop() {
        let base = ExpSumSpec::with_smallest_root(f(1009), 1).unwrap();
        for a in [1u64, 2, 17, 500] {
            let s = base.with_a(a).unwrap();
            for (x, y) in [(60, 60), (1, 37), (13, 90), (200, 3)] {
                let w = s.double_sum(x, y).unwrap();
                let (re, im) = naive_double(&s, x, y);
                let scale = re.hypot(im).max(1.0);
                assert!((w.re - re).abs() <= 1e-9 * scale, "a={a} {x}x{y}");
                assert!((w.im - im).abs() <= 1e-9 * scale);
                assert!(w.magnitude() <= (x * y) as f64 + 1e-9);
            }
        }
    }

    #[test]
    fn parseval_examples() {
        let m = f(101);
        let (l, r) = parseval_check(&ResidueSet::new(m, [0]).unwrap());
        assert!((l - 101.0).abs() < 1e-9 && r == 101.0);
        let (l, r) = parseval_check(&ResidueSet::full(m));
        assert!((l - 101.0 * 101.0).abs() / r < 1e-9);
        let (l, r) = parseval_check(&ResidueSet::new(m, [3, 9, 27, 50, 88]).unwrap());
        assert!((l - r).abs() / r < 1e-9);
    }

    #[test]
    fn fourth_moment_examples() {
        let m = f(101);
        let (mom, pe) = fourth_moment(&ResidueSet::new(m, [0]).unwrap()).unwrap();
        assert_eq!(pe, 101);
        assert!((mom - 101.0).abs() < 1e-9);
        let (mom, pe) = fourth_moment(&ResidueSet::new(m, [0, 1, 2]).unwrap()).unwrap();
        assert_eq!(pe, 101 * 19);
        assert!((mom - pe as f64).abs() / pe as f64 <= 1e-6);
        let s = ExpSumSpec::with_smallest_root(f(1009), 1).unwrap();
        let a = s.power_set(50).unwrap();
        assert_eq!(a.len(), 50);
        let (mom, pe) = fourth_moment(&a).unwrap();
        assert!((mom - pe as f64).abs() / pe as f64 <= 1e-6);
    }

    fn hole_oracle(p: u64, g: u64, a: u64, n: u64) -> u64 {
        let mut present = vec![false; p as usize];
        let mut x = a % p;
        for _ in 0..n {
            x = x * g % p;
            present[x as usize] = true;
        }
        // longest circular run of empty slots, plus one
        let mut best = 0;
        let mut run = 0;
        for i in 0..2 * p as usize {
            if present[i % p as usize] {
                run = 0;
            } else {
                run += 1;
                best = best.max(run);
            }
        }
        best.min(p as usize - 1) as u64 + 1
    }

    #[test]
    fn hole_examples() {
        let s = ExpSumSpec::new(f(7), 3, 1).unwrap();
        assert_eq!(s.hole_size(6).unwrap(), 2);
        assert_eq!(s.hole_size(1).unwrap(), 7);
        let s = ExpSumSpec::new(f(1009), 11, 1).unwrap();
        assert_eq!(s.hole_size(32).unwrap(), hole_oracle(1009, 11, 1, 32));
        for a in [1u64, 5, 600] {
            let s = s.with_a(a).unwrap();
            for n in [1u64, 2, 10, 32, 500, 1008] {
                assert_eq!(s.hole_size(n).unwrap(), hole_oracle(1009, 11, a, n), "a={a} n={n}");
            }
        }
    }

    #[test]
    fn hole_full_period_invariant_under_shift() {
        let s = ExpSumSpec::with_smallest_root(f(101), 3).unwrap();
        let shifted = s.with_a(s.modulus().mul(3, s.g())).unwrap();
        assert_eq!(s.hole_size(100).unwrap(), shifted.hole_size(100).unwrap());
    }

    #[test]
    fn hole_bound_exponent_value() {
        let (e1, e2) = hole_bound_exponents(0.5, 6);
        assert!((e1.max(e2) - (1.0 - 41.0 / 504.0)).abs() < 1e-15);
        assert!((observed_hole_exponent(1009, 1009) - 1.0).abs() < 1e-15);
    }
}
