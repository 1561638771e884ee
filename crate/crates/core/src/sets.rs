//! Finite subsets of F_p and the set arithmetic built on them: sumsets,
//! product and ratio sets, representation functions and energies.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{FieldModulus, Residue};

/// Above this modulus, set and tally construction never allocates `p`-sized tables.
const DENSE_LIMIT: u64 = 1 << 26;

/// A subset of F_p, stored as a strictly increasing list of residues.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ResidueSet {
    modulus: FieldModulus,
    elems: Vec<u64>,
}

fn same_modulus(a: &ResidueSet, b: &ResidueSet) -> Result<FieldModulus> {
    if a.modulus != b.modulus {
        return Err(Error::ModulusMismatch {
            left: a.modulus.p(),
            right: b.modulus.p(),
        });
    }
    Ok(a.modulus)
}

fn nonempty(a: &ResidueSet, what: &'static str) -> Result<()> {
    if a.is_empty() {
        Err(Error::EmptySet(what))
    } else {
        Ok(())
    }
}

fn use_dense(modulus: FieldModulus, hint: usize) -> bool {
    let p = modulus.p();
    p <= DENSE_LIMIT && (hint as u64).saturating_mul(16) >= p
}

/// Deduplicates a stream of canonical residues into a set.
fn collect_set(modulus: FieldModulus, values: impl Iterator<Item = u64>, hint: usize) -> ResidueSet {
    let elems = if use_dense(modulus, hint) {
        let p = modulus.p() as usize;
        let mut bits = vec![0u64; p.div_ceil(64)];
        for v in values {
            bits[(v >> 6) as usize] |= 1 << (v & 63);
        }
        let mut out = Vec::new();
        for (w, &word) in bits.iter().enumerate() {
            let mut word = word;
            while word != 0 {
                let t = word.trailing_zeros() as u64;
                out.push(((w as u64) << 6) | t);
                word &= word - 1;
            }
        }
        out
    } else {
        let mut v: Vec<u64> = values.collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    ResidueSet { modulus, elems }
}

impl ResidueSet {
    /// Builds a set from arbitrary residues in `[0, p)`; duplicates are merged.
    pub fn new(modulus: FieldModulus, values: impl IntoIterator<Item = u64>) -> Result<Self> {
        let mut elems: Vec<u64> = values.into_iter().collect();
        if let Some(&bad) = elems.iter().find(|&&v| v >= modulus.p()) {
            return Err(Error::ResidueOutOfRange {
                value: bad,
                p: modulus.p(),
            });
        }
        elems.sort_unstable();
        elems.dedup();
        Ok(ResidueSet { modulus, elems })
    }

    /// Builds a set and rejects repeated values instead of merging them.
    pub fn new_strict(modulus: FieldModulus, values: impl IntoIterator<Item = u64>) -> Result<Self> {
        let raw: Vec<u64> = values.into_iter().collect();
        let n = raw.len();
        let set = Self::new(modulus, raw.iter().copied())?;
        if set.len() != n {
            let mut sorted = raw;
            sorted.sort_unstable();
            let dup = sorted.windows(2).find(|w| w[0] == w[1]).map(|w| w[0]).unwrap_or(0);
            return Err(Error::Duplicate(dup.to_string()));
        }
        Ok(set)
    }

    /// Reduces arbitrary signed integers mod p.
    pub fn from_integers(modulus: FieldModulus, values: impl IntoIterator<Item = i64>) -> Self {
        let v = values.into_iter().map(|x| modulus.reduce_signed(x));
        let mut elems: Vec<u64> = v.collect();
        elems.sort_unstable();
        elems.dedup();
        ResidueSet { modulus, elems }
    }

    pub fn empty(modulus: FieldModulus) -> Self {
        ResidueSet {
            modulus,
            elems: Vec::new(),
        }
    }

    /// All of F_p.
    pub fn full(modulus: FieldModulus) -> Self {
        ResidueSet {
            modulus,
            elems: (0..modulus.p()).collect(),
        }
    }

    /// F_p^*.
    pub fn units(modulus: FieldModulus) -> Self {
        ResidueSet {
            modulus,
            elems: (1..modulus.p()).collect(),
        }
    }

    pub fn modulus(&self) -> FieldModulus {
        self.modulus
    }

    pub fn elements(&self) -> &[u64] {
        &self.elems
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        self.elems.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn contains(&self, x: u64) -> bool {
        self.elems.binary_search(&x).is_ok()
    }

    pub fn contains_zero(&self) -> bool {
        self.elems.first() == Some(&0)
    }

    pub fn without_zero(&self) -> ResidueSet {
        let start = usize::from(self.contains_zero());
        ResidueSet {
            modulus: self.modulus,
            elems: self.elems[start..].to_vec(),
        }
    }

    pub fn intersection(&self, other: &ResidueSet) -> Result<ResidueSet> {
        let modulus = same_modulus(self, other)?;
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < self.elems.len() && j < other.elems.len() {
            match self.elems[i].cmp(&other.elems[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    out.push(self.elems[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        Ok(ResidueSet { modulus, elems: out })
    }

    pub fn union(&self, other: &ResidueSet) -> Result<ResidueSet> {
        let modulus = same_modulus(self, other)?;
        let mut elems = self.elems.clone();
        elems.extend_from_slice(&other.elems);
        elems.sort_unstable();
        elems.dedup();
        Ok(ResidueSet { modulus, elems })
    }

    pub fn is_subset(&self, other: &ResidueSet) -> Result<bool> {
        same_modulus(self, other)?;
        Ok(self.elems.iter().all(|&x| other.contains(x)))
    }

    /// `{-x : x in A}`.
    pub fn negated(&self) -> ResidueSet {
        let m = self.modulus;
        collect_set(m, self.iter().map(|x| m.neg(x)), 0)
    }

    /// `A^{-1}`, skipping zero.
    pub fn inverses(&self) -> ResidueSet {
        let m = self.modulus;
        let inv = self.iter().filter(|&x| x != 0).map(|x| m.inv(x).expect("nonzero"));
        collect_set(m, inv, 0)
    }

    /// Serializes to the set file format: a `# p=<p>` header and one residue per line.
    pub fn to_set_text(&self) -> String {
        let mut out = format!("# p={}\n", self.modulus.p());
        for x in &self.elems {
            writeln!(out, "{x}").expect("write to string");
        }
        out
    }

    pub fn parse_set_text(text: &str) -> Result<ResidueSet> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "missing `# p=` header".into(),
        })?;
        let p_text = header.trim().strip_prefix("# p=").ok_or(Error::Parse {
            line: 1,
            msg: format!("expected `# p=<modulus>`, found {header:?}"),
        })?;
        let p: u64 = p_text.trim().parse().map_err(|_| Error::Parse {
            line: 1,
            msg: format!("bad modulus {p_text:?}"),
        })?;
        let modulus = FieldModulus::new(p)?;
        let mut elems: Vec<u64> = Vec::new();
        for (i, line) in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let value: u64 = line.parse().map_err(|_| Error::Parse {
                line: i + 1,
                msg: format!("not a residue: {line:?}"),
            })?;
            if value >= p {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("{value} is out of range for p = {p}"),
                });
            }
            if let Some(&last) = elems.last() {
                if value == last {
                    return Err(Error::Parse {
                        line: i + 1,
                        msg: format!("duplicate value {value}"),
                    });
                }
                if value < last {
                    return Err(Error::Parse {
                        line: i + 1,
                        msg: format!("values must be ascending ({value} after {last})"),
                    });
                }
            }
            elems.push(value);
        }
        Ok(ResidueSet { modulus, elems })
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<ResidueSet> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_set_text(&text)
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_set_text())?;
        Ok(())
    }
}

fn pairwise(
    a: &ResidueSet,
    b: &ResidueSet,
    what: &'static str,
    op: impl Fn(FieldModulus, u64, u64) -> u64,
) -> Result<ResidueSet> {
    let m = same_modulus(a, b)?;
    nonempty(a, what)?;
    nonempty(b, what)?;
    let values = a
        .iter()
        .flat_map(|x| b.iter().map(move |y| (x, y)))
        .map(|(x, y)| op(m, x, y));
    Ok(collect_set(m, values, a.len() * b.len()))
}

/// `A + B`.
pub fn sumset(a: &ResidueSet, b: &ResidueSet) -> Result<ResidueSet> {
    pairwise(a, b, "sumset", |m, x, y| m.add(x, y))
}

/// `A - B`.
pub fn difference_set(a: &ResidueSet, b: &ResidueSet) -> Result<ResidueSet> {
    pairwise(a, b, "difference set", |m, x, y| m.sub(x, y))
}

/// `AB`.
pub fn product_set(a: &ResidueSet, b: &ResidueSet) -> Result<ResidueSet> {
    pairwise(a, b, "product set", |m, x, y| m.mul(x, y))
}

/// `A : B = {a/b : b != 0}`. Zero divisors are skipped.
pub fn ratio_set(a: &ResidueSet, b: &ResidueSet) -> Result<ResidueSet> {
    same_modulus(a, b)?;
    nonempty(a, "ratio set")?;
    let inv = b.inverses();
    if inv.is_empty() {
        return Err(Error::Domain("ratio set needs a nonzero divisor".into()));
    }
    product_set(a, &inv)
}

/// `A + A + ... + A` (n summands).
pub fn nfold_sum(a: &ResidueSet, n: usize) -> Result<ResidueSet> {
    if n == 0 {
        return Err(Error::Domain("n-fold sum needs n >= 1".into()));
    }
    nonempty(a, "n-fold sum")?;
    let mut acc = a.clone();
    for _ in 1..n {
        acc = sumset(&acc, a)?;
    }
    Ok(acc)
}

fn check_residue(r: Residue, a: &ResidueSet) -> Result<()> {
    if r.modulus() != a.modulus() {
        return Err(Error::ModulusMismatch {
            left: r.modulus().p(),
            right: a.modulus().p(),
        });
    }
    Ok(())
}

/// `a·A` for `a != 0`.
pub fn dilate(a: Residue, set: &ResidueSet) -> Result<ResidueSet> {
    check_residue(a, set)?;
    if a.is_zero() {
        return Err(Error::Domain("dilation by zero".into()));
    }
    let m = set.modulus();
    Ok(collect_set(m, set.iter().map(|x| m.mul(a.value(), x)), 0))
}

/// `a + A`.
pub fn translate(a: Residue, set: &ResidueSet) -> Result<ResidueSet> {
    check_residue(a, set)?;
    let m = set.modulus();
    Ok(collect_set(m, set.iter().map(|x| m.add(a.value(), x)), 0))
}

/// `A + BC`.
pub fn compose_a_plus_bc(a: &ResidueSet, b: &ResidueSet, c: &ResidueSet) -> Result<ResidueSet> {
    let bc = product_set(b, c)?;
    sumset(a, &bc)
}

/// The binary law a representation function counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepLaw {
    Sum,
    Difference,
    Product,
    Ratio,
}

/// `r(s) = #{(a, b) : a ∘ b = s}` stored sparsely as a key-sorted list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepFunction {
    modulus: FieldModulus,
    counts: Vec<(u64, u64)>,
    pairs: u64,
}

fn tally(modulus: FieldModulus, values: impl Iterator<Item = u64>, hint: usize) -> Vec<(u64, u64)> {
    if use_dense(modulus, hint) {
        let mut dense = vec![0u64; modulus.p() as usize];
        for v in values {
            dense[v as usize] += 1;
        }
        dense
            .into_iter()
            .enumerate()
            .filter(|&(_, c)| c > 0)
            .map(|(s, c)| (s as u64, c))
            .collect()
    } else {
        let mut v: Vec<u64> = values.collect();
        v.sort_unstable();
        let mut out: Vec<(u64, u64)> = Vec::new();
        for x in v {
            match out.last_mut() {
                Some((k, c)) if *k == x => *c += 1,
                _ => out.push((x, 1)),
            }
        }
        out
    }
}

/// Exact `Σ c^k` over the given counts, `None` on `u128` overflow.
fn integer_moment(counts: impl Iterator<Item = u64>, k: u32) -> Option<u128> {
    let mut acc: u128 = 0;
    for c in counts {
        acc = acc.checked_add((c as u128).checked_pow(k)?)?;
    }
    Some(acc)
}

fn real_moment(counts: impl Iterator<Item = u64>, k: f64) -> f64 {
    crate::numeric::neumaier_sum(counts.map(|c| (c as f64).powf(k)))
}

impl RepFunction {
    pub fn new(a: &ResidueSet, b: &ResidueSet, law: RepLaw) -> Result<RepFunction> {
        let m = same_modulus(a, b)?;
        let b_eff: ResidueSet = match law {
            RepLaw::Ratio => {
                let inv = b.inverses();
                if inv.is_empty() && !b.is_empty() {
                    return Err(Error::Domain("ratio law needs a nonzero element in B".into()));
                }
                inv
            }
            _ => b.clone(),
        };
        let hint = a.len() * b_eff.len();
        let values = a.iter().flat_map(|x| b_eff.iter().map(move |y| (x, y)));
        let counts = match law {
            RepLaw::Sum => tally(m, values.map(|(x, y)| m.add(x, y)), hint),
            RepLaw::Difference => tally(m, values.map(|(x, y)| m.sub(x, y)), hint),
            RepLaw::Product | RepLaw::Ratio => tally(m, values.map(|(x, y)| m.mul(x, y)), hint),
        };
        Ok(RepFunction {
            modulus: m,
            counts,
            pairs: hint as u64,
        })
    }

    pub fn modulus(&self) -> FieldModulus {
        self.modulus
    }

    pub fn get(&self, s: u64) -> u64 {
        self.counts
            .binary_search_by_key(&s, |&(k, _)| k)
            .map(|i| self.counts[i].1)
            .unwrap_or(0)
    }

    /// Number of generating pairs that were counted.
    pub fn pairs(&self) -> u64 {
        self.pairs
    }

    pub fn support_len(&self) -> usize {
        self.counts.len()
    }

    pub fn max(&self) -> u64 {
        self.counts.iter().map(|&(_, c)| c).max().unwrap_or(0)
    }

    /// `(s, r(s))` in increasing order of `s`.
    pub fn iter(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.counts.iter().copied()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&(_, c)| c).sum()
    }

    pub fn moment_exact(&self, k: u32) -> Option<u128> {
        integer_moment(self.counts.iter().map(|&(_, c)| c), k)
    }

    pub fn moment(&self, k: f64) -> f64 {
        real_moment(self.counts.iter().map(|&(_, c)| c), k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyKind {
    Additive,
    Multiplicative,
}

/// A moment `Σ r(s)^k` together with its order and kind.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyValue {
    pub value: f64,
    /// Present when the order is integral and the sum fits in `u128`.
    pub exact: Option<u128>,
    pub order: f64,
    pub kind: EnergyKind,
}

impl EnergyValue {
    fn from_counts(counts: impl Iterator<Item = u64> + Clone, k: f64, kind: EnergyKind) -> Self {
        let exact = if k.fract() == 0.0 && k <= u32::MAX as f64 {
            integer_moment(counts.clone(), k as u32)
        } else {
            None
        };
        let value = match exact {
            Some(e) => e as f64,
            None => real_moment(counts, k),
        };
        EnergyValue {
            value,
            exact,
            order: k,
            kind,
        }
    }

    /// The exact value; panics if the order was fractional or the sum overflowed.
    pub fn exact_value(&self) -> u128 {
        self.exact.expect("energy has no exact integer value")
    }
}

/// `E(A, B) = #{a1 + b1 = a2 + b2}`.
pub fn additive_energy(a: &ResidueSet, b: &ResidueSet) -> Result<EnergyValue> {
    let r = RepFunction::new(a, b, RepLaw::Sum)?;
    Ok(EnergyValue::from_counts(
        r.counts.iter().map(|&(_, c)| c),
        2.0,
        EnergyKind::Additive,
    ))
}

/// `E_k(A) = Σ_s r_{A-A}(s)^k`, or its multiplicative analogue over `A/A`.
pub fn energy_moment(a: &ResidueSet, k: f64, kind: EnergyKind) -> Result<EnergyValue> {
    if !(k >= 1.0) || !k.is_finite() {
        return Err(Error::Domain(format!("moment order must be >= 1, got {k}")));
    }
    let r = match kind {
        EnergyKind::Additive => RepFunction::new(a, a, RepLaw::Difference)?,
        EnergyKind::Multiplicative => {
            if a.contains_zero() {
                return Err(Error::Domain("multiplicative energy of a set containing 0".into()));
            }
            RepFunction::new(a, a, RepLaw::Ratio)?
        }
    };
    Ok(EnergyValue::from_counts(r.counts.iter().map(|&(_, c)| c), k, kind))
}

/// `Σ_{s != 0} |S ∩ sS|^k`.
///
/// Coincides with the multiplicative moment when `0 ∉ S`. When `0 ∈ S`, every
/// `s` picks up the common element 0.
pub fn intersection_moment(set: &ResidueSet, k: f64) -> Result<EnergyValue> {
    if !set.contains_zero() {
        return energy_moment(set, k, EnergyKind::Multiplicative);
    }
    if !(k >= 1.0) || !k.is_finite() {
        return Err(Error::Domain(format!("moment order must be >= 1, got {k}")));
    }
    let rest = set.without_zero();
    let p = set.modulus().p();
    let supported: Vec<u64> = if rest.is_empty() {
        Vec::new()
    } else {
        RepFunction::new(&rest, &rest, RepLaw::Ratio)?
            .iter()
            .map(|(_, c)| c + 1)
            .collect()
    };
    let ones = (p - 1) as usize - supported.len();
    let counts = supported.into_iter().chain(std::iter::repeat(1).take(ones));
    Ok(EnergyValue::from_counts(counts, k, EnergyKind::Multiplicative))
}

/// `A ∩ sA` for `s != 0`. For `0 ∉ A` its size is `r_{A/A}(s)`.
pub fn katz_koester_mult(a: &ResidueSet, s: Residue) -> Result<ResidueSet> {
    if s.is_zero() {
        return Err(Error::Domain("Katz-Koester intersection with s = 0".into()));
    }
    let scaled = dilate(s, a)?;
    a.intersection(&scaled)
}

/// `S ∩ (S + s)`.
pub fn shifted_intersection(set: &ResidueSet, s: Residue) -> Result<ResidueSet> {
    let shifted = translate(s, set)?;
    set.intersection(&shifted)
}

/// Number of sextuples with `a + bc = a' + b'c'` over `A×B×C×A×B×C`.
pub fn bilinear_solution_count(a: &ResidueSet, b: &ResidueSet, c: &ResidueSet) -> Result<u128> {
    let m = same_modulus(a, b)?;
    same_modulus(a, c)?;
    let hint = a.len() * b.len() * c.len();
    let values = b
        .iter()
        .flat_map(|y| c.iter().map(move |z| m.mul(y, z)))
        .flat_map(|bc| a.iter().map(move |x| m.add(x, bc)));
    // Dense p-length counts even for sparse supports: O(p + |A||B||C|).
    let counts = if m.p() <= DENSE_LIMIT {
        let mut dense = vec![0u32; m.p() as usize];
        for v in values {
            dense[v as usize] += 1;
        }
        dense.into_iter().filter(|&c| c > 0).map(u64::from).collect::<Vec<_>>()
    } else {
        tally(m, values, hint).into_iter().map(|(_, c)| c).collect()
    };
    Ok(counts.into_iter().map(|c| (c as u128) * (c as u128)).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn f(p: u64) -> FieldModulus {
        FieldModulus::new(p).unwrap()
    }

    fn set(p: u64, v: &[u64]) -> ResidueSet {
        ResidueSet::new(f(p), v.iter().copied()).unwrap()
    }

    fn quad_energy(a: &ResidueSet, b: &ResidueSet) -> u128 {
        let m = a.modulus();
        let mut n = 0;
        for a1 in a.iter() {
            for a2 in a.iter() {
                for b1 in b.iter() {
                    for b2 in b.iter() {
                        if m.add(a1, b1) == m.add(a2, b2) {
                            n += 1;
                        }
                    }
                }
            }
        }
        n
    }

    fn sextuple_count(a: &ResidueSet, b: &ResidueSet, c: &ResidueSet) -> u128 {
        let m = a.modulus();
        let triples: Vec<u64> = a
            .iter()
            .flat_map(|x| b.iter().flat_map(move |y| c.iter().map(move |z| (x, y, z))))
            .map(|(x, y, z)| m.add(x, m.mul(y, z)))
            .collect();
        let mut n = 0;
        for &u in &triples {
            for &v in &triples {
                n += u128::from(u == v);
            }
        }
        n
    }

    #[test]
    fn set_construction() {
        let s = set(7, &[4, 1, 2, 4]);
        assert_eq!(s.elements(), &[1, 2, 4]);
        assert!(ResidueSet::new(f(7), [7]).is_err());
        assert!(matches!(ResidueSet::new_strict(f(7), [1, 1]), Err(Error::Duplicate(_))));
        assert_eq!(ResidueSet::from_integers(f(7), [-1, 8]).elements(), &[1, 6]);
        assert!(set(7, &[0, 3]).contains_zero());
        assert_eq!(set(7, &[0, 3]).without_zero().elements(), &[3]);
    }

    #[test]
    fn basic_set_operations() {
        assert_eq!(sumset(&set(31, &[1, 2]), &set(31, &[10, 20])).unwrap().elements(), &[11, 12, 21, 22]);
        assert_eq!(product_set(&set(7, &[0]), &set(7, &[0])).unwrap().elements(), &[0]);
        let g = set(7, &[1, 2, 4]);
        assert_eq!(product_set(&g, &g).unwrap().elements(), &[1, 2, 4]);
        assert_eq!(difference_set(&set(101, &[0, 1, 2]), &set(101, &[0, 1, 2])).unwrap().len(), 5);
        assert_eq!(ratio_set(&g, &set(7, &[0, 2])).unwrap().elements(), &[1, 2, 4]);
        assert!(matches!(ratio_set(&g, &set(7, &[0])), Err(Error::Domain(_))));
        assert!(matches!(sumset(&g, &ResidueSet::empty(f(7))), Err(Error::EmptySet(_))));
        assert!(matches!(sumset(&g, &set(11, &[1])), Err(Error::ModulusMismatch { .. })));
    }

    #[test]
    fn dilate_translate_nfold() {
        let m = f(101);
        let a = set(101, &[3, 50, 77]);
        assert_eq!(nfold_sum(&set(101, &[0, 1]), 3).unwrap().elements(), &[0, 1, 2, 3]);
        assert_eq!(dilate(m.residue(1).unwrap(), &a).unwrap(), a);
        assert_eq!(translate(m.residue(0).unwrap(), &a).unwrap(), a);
        assert!(matches!(dilate(m.residue(0).unwrap(), &a), Err(Error::Domain(_))));
        assert!(nfold_sum(&a, 0).is_err());
        assert_eq!(nfold_sum(&a, 1).unwrap(), a);
    }

    #[test]
    fn compose_examples() {
        let c = set(101, &[5, 9, 40]);
        assert_eq!(compose_a_plus_bc(&set(101, &[0]), &set(101, &[1]), &c).unwrap(), c);
        assert_eq!(compose_a_plus_bc(&set(7, &[1]), &set(7, &[2]), &set(7, &[3])).unwrap().elements(), &[0]);
    }

    #[test]
    fn compose_matches_triple_loop() {
        let m = f(101);
        let a = set(101, &[1, 17, 33, 64, 90]);
        let b = set(101, &[2, 5, 11, 58, 99]);
        let c = set(101, &[0, 7, 8, 45, 100]);
        let mut brute = Vec::new();
        for x in a.iter() {
            for y in b.iter() {
                for z in c.iter() {
                    brute.push(m.add(x, m.mul(y, z)));
                }
            }
        }
        assert_eq!(compose_a_plus_bc(&a, &b, &c).unwrap(), ResidueSet::new(m, brute).unwrap());
    }

    #[test]
    fn rep_function_examples() {
        let a = set(101, &[0, 1, 2]);
        let r = RepFunction::new(&a, &a, RepLaw::Difference).unwrap();
        assert_eq!(r.get(0), 3);
        assert_eq!(r.get(1), 2);
        assert_eq!(r.get(100), 2);
        assert_eq!(r.get(2), 1);
        assert_eq!(r.get(99), 1);
        assert_eq!(r.total(), 9);
        let one = set(101, &[1]);
        let r = RepFunction::new(&one, &one, RepLaw::Ratio).unwrap();
        assert_eq!(r.get(1), 1);
        assert!(RepFunction::new(&one, &set(101, &[0]), RepLaw::Ratio).is_err());
        // zero divisors are skipped
        let r = RepFunction::new(&one, &set(101, &[0, 1]), RepLaw::Ratio).unwrap();
        assert_eq!(r.total(), 1);
    }

    #[test]
    fn energy_examples() {
        let a = set(101, &[0, 1, 2]);
        assert_eq!(quad_energy(&a, &a), 19);
        assert_eq!(additive_energy(&a, &a).unwrap().exact, Some(19));
        assert_eq!(energy_moment(&a, 2.0, EnergyKind::Additive).unwrap().exact, Some(19));
        assert_eq!(energy_moment(&a, 1.0, EnergyKind::Additive).unwrap().exact, Some(9));
        let b = set(101, &[3, 10, 77, 78]);
        assert_eq!(additive_energy(&set(101, &[0]), &b).unwrap().exact, Some(4));
        let g = set(7, &[1, 2, 4]);
        assert_eq!(energy_moment(&g, 2.0, EnergyKind::Multiplicative).unwrap().exact, Some(27));
        assert_eq!(energy_moment(&g, 1.0, EnergyKind::Multiplicative).unwrap().exact, Some(9));
        assert!(energy_moment(&set(7, &[0, 1]), 2.0, EnergyKind::Multiplicative).is_err());
        assert!(energy_moment(&g, 0.5, EnergyKind::Additive).is_err());
        let frac = energy_moment(&a, 1.5, EnergyKind::Additive).unwrap();
        assert!(frac.exact.is_none());
        let want = 3f64.powf(1.5) + 2.0 * 2f64.powf(1.5) + 2.0;
        assert!((frac.value - want).abs() < 1e-12);
    }

    #[test]
    fn multiplicative_energy_brute_force() {
        let g = set(7, &[1, 2, 4]);
        let m = g.modulus();
        let mut n = 0u128;
        for a in g.iter() {
            for b in g.iter() {
                for c in g.iter() {
                    for d in g.iter() {
                        n += u128::from(m.mul(a, d) == m.mul(b, c));
                    }
                }
            }
        }
        assert_eq!(n, 27);
    }

    #[test]
    fn intersection_moment_matches_direct() {
        let m = f(13);
        for s in [set(13, &[0, 1, 3, 9]), set(13, &[1, 5, 8]), set(13, &[0])] {
            for k in [1.0, 2.0, 3.0] {
                let direct: u128 = (1..13)
                    .map(|t| {
                        let n = katz_koester_mult(&s, m.residue(t).unwrap()).unwrap().len() as u128;
                        n.pow(k as u32)
                    })
                    .sum();
                assert_eq!(intersection_moment(&s, k).unwrap().exact, Some(direct), "{s:?} {k}");
            }
        }
    }

    #[test]
    fn katz_koester_and_shift_examples() {
        let m = f(7);
        let g = set(7, &[1, 2, 4]);
        assert_eq!(katz_koester_mult(&g, m.residue(1).unwrap()).unwrap(), g);
        assert_eq!(katz_koester_mult(&g, m.residue(2).unwrap()).unwrap(), g);
        assert!(katz_koester_mult(&g, m.residue(0).unwrap()).is_err());
        let m = f(101);
        let s = set(101, &[0, 1, 2]);
        assert_eq!(shifted_intersection(&s, m.residue(0).unwrap()).unwrap(), s);
        assert_eq!(shifted_intersection(&s, m.residue(1).unwrap()).unwrap().elements(), &[1, 2]);
    }

    #[test]
    fn katz_koester_shift_bound_brute_force() {
        let m = f(101);
        let a = set(101, &[2, 3, 19, 50]);
        let c = set(101, &[0, 7, 13, 60, 61]);
        let ac = sumset(&a, &c).unwrap();
        for s in difference_set(&c, &c).unwrap().iter() {
            let n = shifted_intersection(&ac, m.residue(s).unwrap()).unwrap().len();
            assert!(n >= a.len());
        }
    }

    #[test]
    fn bilinear_examples() {
        let one = set(101, &[1]);
        assert_eq!(bilinear_solution_count(&one, &one, &one).unwrap(), 1);
        let a = set(101, &[0]);
        let bc = set(101, &[1, 2]);
        assert_eq!(bilinear_solution_count(&a, &bc, &bc).unwrap(), 6);
        let a = set(101, &[3, 8, 20, 33, 71, 99]);
        let b = set(101, &[1, 4, 9, 16, 25, 36]);
        let c = set(101, &[0, 5, 10, 50, 51, 52]);
        assert_eq!(bilinear_solution_count(&a, &b, &c).unwrap(), sextuple_count(&a, &b, &c));
    }

    #[test]
    fn set_text_format() {
        let s = set(7, &[1, 2, 4]);
        assert_eq!(s.to_set_text(), "# p=7\n1\n2\n4\n");
        assert_eq!(ResidueSet::parse_set_text("# p=7\n1\n2\n4\n").unwrap(), s);
        assert!(ResidueSet::parse_set_text("# p=7\n1\n1\n").is_err());
        assert!(ResidueSet::parse_set_text("# p=7\n7\n").is_err());
        assert!(ResidueSet::parse_set_text("# p=7\n4\n2\n").is_err());
        assert!(ResidueSet::parse_set_text("p=7\n4\n").is_err());
        assert!(ResidueSet::parse_set_text("# p=8\n").is_err());
        assert!(ResidueSet::parse_set_text("").is_err());
        assert!(ResidueSet::parse_set_text("# p=7\n").unwrap().is_empty());
    }

    fn arb_set(p: u64, max: usize) -> impl Strategy<Value = ResidueSet> {
        prop::collection::vec(0..p, 1..=max).prop_map(move |v| ResidueSet::new(FieldModulus::new(p).unwrap(), v).unwrap())
    }

    fn arb_unit_set(p: u64, max: usize) -> impl Strategy<Value = ResidueSet> {
        prop::collection::vec(1..p, 1..=max).prop_map(move |v| ResidueSet::new(FieldModulus::new(p).unwrap(), v).unwrap())
    }

    proptest! {
        #[test]
        fn energy_equals_quadruple_count(a in arb_set(101, 15), b in arb_set(101, 15)) {
            prop_assert_eq!(additive_energy(&a, &b).unwrap().exact_value(), quad_energy(&a, &b));
        }

        #[test]
        fn mass_and_cauchy_schwarz(a in arb_set(101, 25), b in arb_set(101, 25)) {
            let r = RepFunction::new(&a, &b, RepLaw::Sum).unwrap();
            prop_assert_eq!(r.total(), (a.len() * b.len()) as u64);
            let e = additive_energy(&a, &a).unwrap().exact_value();
            let n4 = (a.len() as u128).pow(4);
            prop_assert!(e * sumset(&a, &a).unwrap().len() as u128 >= n4);
            prop_assert!(e * difference_set(&a, &a).unwrap().len() as u128 >= n4);
            prop_assert_eq!(energy_moment(&a, 2.0, EnergyKind::Additive).unwrap().exact_value(), e);
        }

        #[test]
        fn dilation_invariance(a in arb_unit_set(101, 20), t in 1u64..101) {
            let m = a.modulus();
            let da = dilate(m.residue(t).unwrap(), &a).unwrap();
            prop_assert_eq!(additive_energy(&a, &a).unwrap(), additive_energy(&da, &da).unwrap());
            for k in [1.0, 2.0, 3.0] {
                prop_assert_eq!(
                    energy_moment(&a, k, EnergyKind::Multiplicative).unwrap(),
                    energy_moment(&da, k, EnergyKind::Multiplicative).unwrap()
                );
            }
        }

        #[test]
        fn moment_monotonicity(a in arb_set(101, 20)) {
            let r = RepFunction::new(&a, &a, RepLaw::Difference).unwrap();
            let mx = r.max() as u128;
            for j in 1..4u32 {
                for k in (j + 1)..6u32 {
                    let lhs = r.moment_exact(k).unwrap();
                    let rhs = mx.pow(k - j) * r.moment_exact(j).unwrap();
                    prop_assert!(lhs <= rhs);
                }
            }
            let e1 = energy_moment(&a, 1.0, EnergyKind::Additive).unwrap().exact_value();
            prop_assert_eq!(e1, (a.len() as u128).pow(2));
            for k in 1..5u32 {
                let ek = energy_moment(&a, k as f64, EnergyKind::Additive).unwrap().exact_value();
                prop_assert!(ek >= (a.len() as u128).pow(k));
            }
        }

        #[test]
        fn bilinear_diagonal_floor(a in arb_set(31, 4), b in arb_set(31, 4), c in arb_set(31, 4)) {
            let e = bilinear_solution_count(&a, &b, &c).unwrap();
            let n = (a.len() * b.len() * c.len()) as u128;
            prop_assert!(e >= n);
            let injective = compose_a_plus_bc(&a, &b, &c).unwrap().len() as u128 == n;
            prop_assert_eq!(e == n, injective);
            prop_assert_eq!(e, sextuple_count(&a, &b, &c));
        }

        #[test]
        fn rearrangement_inequality(a in arb_set(31, 4), b in arb_unit_set(31, 3), c in arb_set(31, 4)) {
            // |B|^2 E(A, C) <= #{a + st = a' + s't' : s in BC, t in B^{-1}}
            let bc = product_set(&b, &c).unwrap();
            let binv = b.inverses();
            let lhs = (b.len() as u128).pow(2) * additive_energy(&a, &c).unwrap().exact_value();
            let rhs = bilinear_solution_count(&a, &bc, &binv).unwrap();
            prop_assert!(lhs <= rhs);
        }

        #[test]
        fn set_text_roundtrip(a in arb_set(1009, 40)) {
            prop_assert_eq!(ResidueSet::parse_set_text(&a.to_set_text()).unwrap(), a);
        }

        #[test]
        fn dense_and_sparse_collection_agree(v in prop::collection::vec(0u64..2003, 1..300)) {
            let m = FieldModulus::new(2003).unwrap();
            let dense = collect_set(m, v.iter().copied(), 10_000);
            let sparse = collect_set(m, v.iter().copied(), 0);
            prop_assert_eq!(&dense, &sparse);
            let td = tally(m, v.iter().copied(), 10_000);
            let ts = tally(m, v.iter().copied(), 0);
            prop_assert_eq!(td, ts);
        }
    }
}
