use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{divisors, FieldModulus};
use crate::sets::ResidueSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    Random,
    ArithmeticProgression,
    GeometricProgression,
    Subgroup,
    SubgroupUnionCosets,
}

impl GeneratorKind {
    pub const ALL: [GeneratorKind; 5] = [
        GeneratorKind::Random,
        GeneratorKind::ArithmeticProgression,
        GeneratorKind::GeometricProgression,
        GeneratorKind::Subgroup,
        GeneratorKind::SubgroupUnionCosets,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GeneratorKind::Random => "random",
            GeneratorKind::ArithmeticProgression => "arithmetic_progression",
            GeneratorKind::GeometricProgression => "geometric_progression",
            GeneratorKind::Subgroup => "subgroup",
            GeneratorKind::SubgroupUnionCosets => "subgroup_union_cosets",
        }
    }

    /// Whether the output depends on the random stream.
    pub fn randomized(self) -> bool {
        !matches!(self, GeneratorKind::Subgroup)
    }

    /// Kinds whose sets never contain 0.
    pub fn multiplicative(self) -> bool {
        !matches!(self, GeneratorKind::Random | GeneratorKind::ArithmeticProgression)
    }
}

impl fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GeneratorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        let alias = match key.as_str() {
            "ap" => "arithmetic_progression",
            "gp" => "geometric_progression",
            "cosets" => "subgroup_union_cosets",
            other => other,
        };
        GeneratorKind::ALL
            .into_iter()
            .find(|g| g.name() == alias)
            .ok_or_else(|| Error::Config(format!("unknown generator `{s}`")))
    }
}

/// The largest divisor of `p - 1` not exceeding `size` (at least 1).
pub(crate) fn subgroup_order_for(m: FieldModulus, size: usize) -> u64 {
    divisors(m.p() - 1)
        .into_iter()
        .filter(|&d| d <= size as u64)
        .max()
        .unwrap_or(1)
}

fn multiplicative_order(m: FieldModulus, x: u64) -> u64 {
    divisors(m.p() - 1)
        .into_iter()
        .find(|&d| m.pow(x, d) == 1)
        .unwrap_or(m.p() - 1)
}

fn too_large(kind: GeneratorKind, size: usize, max: u64) -> Error {
    Error::Domain(format!("{kind} set of size {size} exceeds the maximum {max}"))
}

/// Draws a set of the given kind.
///
/// Subgroup kinds round the size down to what the group structure allows:
/// `subgroup` yields the subgroup of the largest order `d | p - 1` with
/// `d <= size`, and `subgroup_union_cosets` a union of `⌊size/d⌋` random
/// cosets of the subgroup of the largest order `d` with `2d <= size`.
/// With `exclude_zero`, the additive kinds draw from `F_p^*`.
pub fn generate<R: Rng>(
    kind: GeneratorKind,
    m: FieldModulus,
    size: usize,
    exclude_zero: bool,
    rng: &mut R,
) -> Result<ResidueSet> {
    let p = m.p();
    if size == 0 {
        return Err(Error::Domain("set size must be positive".into()));
    }
    let max = if exclude_zero || kind.multiplicative() { p - 1 } else { p };
    if size as u64 > max {
        return Err(too_large(kind, size, max));
    }
    let n = size as u64;
    match kind {
        GeneratorKind::Random => {
            let offset = exclude_zero as u64;
            let picks = sample(rng, (p - offset) as usize, size);
            ResidueSet::new(m, picks.into_iter().map(|i| i as u64 + offset))
        }
        GeneratorKind::ArithmeticProgression => {
            let step = rng.gen_range(1..p);
            if exclude_zero {
                // step·(r + j) for j < size stays away from 0
                let r = rng.gen_range(1..=p - n);
                ResidueSet::new(m, (0..n).map(|j| m.mul(step, r + j)))
            } else {
                let start = rng.gen_range(0..p);
                ResidueSet::new(m, (0..n).map(|j| m.add(start, m.mul(step, j))))
            }
        }
        GeneratorKind::GeometricProgression => {
            let start = rng.gen_range(1..p);
            let ratio = loop {
                let q = rng.gen_range(1..p);
                if multiplicative_order(m, q) >= n {
                    break q;
                }
            };
            let mut x = start;
            let values = (0..n).map(|_| {
                let v = x;
                x = m.mul(x, ratio);
                v
            });
            ResidueSet::new(m, values.collect::<Vec<_>>())
        }
        GeneratorKind::Subgroup => m.subgroup(subgroup_order_for(m, size)),
        GeneratorKind::SubgroupUnionCosets => {
            let d = subgroup_order_for(m, size / 2).max(1);
            let gamma = m.subgroup(d)?;
            let cosets = (p - 1) / d;
            let count = ((n / d).max(1)).min(cosets);
            let g = m.primitive_root();
            let mut values = Vec::with_capacity((count * d) as usize);
            for i in sample(rng, cosets as usize, count as usize) {
                let rep = m.pow(g, i as u64);
                values.extend(gamma.iter().map(|x| m.mul(rep, x)));
            }
            ResidueSet::new(m, values)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn f(p: u64) -> FieldModulus {
        FieldModulus::new(p).unwrap()
    }

    #[test]
    fn sizes_and_zero_exclusion() {
        let m = f(101);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for kind in GeneratorKind::ALL {
            for size in [1usize, 5, 20, 50] {
                let s = generate(kind, m, size, true, &mut rng).unwrap();
                assert!(!s.contains_zero(), "{kind}");
                match kind {
                    GeneratorKind::Subgroup => assert_eq!(s.len() as u64, subgroup_order_for(m, size)),
                    GeneratorKind::SubgroupUnionCosets => assert!(s.len() <= size.max(1)),
                    _ => assert_eq!(s.len(), size, "{kind}"),
                }
            }
        }
        assert!(generate(GeneratorKind::Random, m, 101, false, &mut rng).is_ok());
        assert!(generate(GeneratorKind::Random, m, 101, true, &mut rng).is_err());
        assert!(generate(GeneratorKind::ArithmeticProgression, m, 100, true, &mut rng).is_ok());
        assert!(generate(GeneratorKind::Random, m, 0, false, &mut rng).is_err());
    }

    #[test]
    fn subgroup_rounding() {
        let m = f(2003);
        assert_eq!(subgroup_order_for(m, 20), 14);
        assert_eq!(subgroup_order_for(m, 40), 26);
        assert_eq!(subgroup_order_for(m, 60), 26);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = generate(GeneratorKind::Subgroup, f(7), 3, false, &mut rng).unwrap();
        assert_eq!(s.elements(), &[1, 2, 4]);
    }

    #[test]
    fn cosets_are_invariant() {
        let m = f(1009);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let q = generate(GeneratorKind::SubgroupUnionCosets, m, 40, false, &mut rng).unwrap();
        let d = subgroup_order_for(m, 20);
        assert_eq!(q.len() as u64 % d, 0);
        let gamma = m.subgroup(d).unwrap();
        for b in gamma.iter() {
            assert_eq!(crate::sets::dilate(m.residue(b).unwrap(), &q).unwrap(), q);
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let m = f(2003);
        for kind in GeneratorKind::ALL {
            let a = generate(kind, m, 30, false, &mut ChaCha8Rng::seed_from_u64(77)).unwrap();
            let b = generate(kind, m, 30, false, &mut ChaCha8Rng::seed_from_u64(77)).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn parse_names() {
        assert_eq!("ap".parse::<GeneratorKind>().unwrap(), GeneratorKind::ArithmeticProgression);
        assert_eq!("subgroup_union_cosets".parse::<GeneratorKind>().unwrap(), GeneratorKind::SubgroupUnionCosets);
        assert!("spiral".parse::<GeneratorKind>().is_err());
    }
}
