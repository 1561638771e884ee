//! Points and planes of PG(3, F_p), incidence counting and collinearity.
//!
//! Points and planes are both nonzero 4-vectors up to scale, normalized so the
//! first nonzero coordinate is 1. A point `X` lies on a plane `π` iff
//! `π0 X0 + π1 X1 + π2 X2 + π3 X3 = 0`.

use rayon::prelude::*;
use std::collections::{HashMap, HashSet};
use std::io::{Read, Write};
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::field::FieldModulus;
use crate::sets::ResidueSet;

/// Default cap on `|A||B||C|` for [`build_theorem2_arrangement`].
pub const DEFAULT_ARRANGEMENT_BUDGET: usize = 1_000_000;

pub(crate) fn normalize4(m: FieldModulus, v: [u64; 4]) -> Option<[u64; 4]> {
    let lead = v.iter().copied().find(|&x| x != 0)?;
    let s = m.inv(lead).expect("nonzero lead");
    Some(v.map(|x| m.mul(x, s)))
}

/// The six 2x2 minors `x_i y_j - x_j y_i` in the order (01, 02, 03, 12, 13, 23).
pub(crate) fn minors(m: FieldModulus, x: &[u64; 4], y: &[u64; 4]) -> [u64; 6] {
    const IDX: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
    IDX.map(|(i, j)| m.sub(m.mul(x[i], y[j]), m.mul(x[j], y[i])))
}

pub(crate) fn normalize6(m: FieldModulus, v: [u64; 6]) -> Option<[u64; 6]> {
    let lead = v.iter().copied().find(|&x| x != 0)?;
    let s = m.inv(lead).expect("nonzero lead");
    Some(v.map(|x| m.mul(x, s)))
}

fn dot(m: FieldModulus, a: &[u64; 4], b: &[u64; 4]) -> u64 {
    (0..4).fold(0, |acc, i| m.add(acc, m.mul(a[i], b[i])))
}

fn reduce4(m: FieldModulus, v: [i64; 4]) -> [u64; 4] {
    v.map(|x| m.reduce_signed(x))
}

macro_rules! homogeneous4 {
    ($name:ident, $what:literal) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub struct $name {
            modulus: FieldModulus,
            coords: [u64; 4],
        }

        impl $name {
            /// Normalizes the given coordinates; rejects the zero vector.
            pub fn new(modulus: FieldModulus, coords: [u64; 4]) -> Result<Self> {
                if let Some(&bad) = coords.iter().find(|&&c| c >= modulus.p()) {
                    return Err(Error::ResidueOutOfRange {
                        value: bad,
                        p: modulus.p(),
                    });
                }
                let coords = normalize4(modulus, coords)
                    .ok_or_else(|| Error::Geometry(concat!("zero vector is not a ", $what).into()))?;
                Ok($name { modulus, coords })
            }

            pub fn from_signed(modulus: FieldModulus, coords: [i64; 4]) -> Result<Self> {
                Self::new(modulus, reduce4(modulus, coords))
            }

            pub fn modulus(&self) -> FieldModulus {
                self.modulus
            }

            pub fn coords(&self) -> [u64; 4] {
                self.coords
            }

            /// Rescales by `lambda != 0`; the normalized form is unchanged.
            pub fn scaled(&self, lambda: u64) -> Result<Self> {
                let m = self.modulus;
                Self::new(m, self.coords.map(|x| m.mul(x, lambda % m.p())))
            }
        }
    };
}

homogeneous4!(ProjPoint3, "point");
homogeneous4!(ProjPlane3, "plane");

impl ProjPoint3 {
    /// The affine point `(x, y, z)` embedded as `(1, x, y, z)`.
    pub fn affine(modulus: FieldModulus, x: u64, y: u64, z: u64) -> Result<Self> {
        Self::new(modulus, [1, x, y, z])
    }
}

impl ProjPlane3 {
    /// The affine plane `x + b y - c z = a`, stored as `(-a, 1, b, -c)`.
    pub fn theorem2_plane(modulus: FieldModulus, a: u64, b: u64, c: u64) -> Result<Self> {
        Self::new(modulus, [modulus.neg(a), 1, b, modulus.neg(c)])
    }
}

pub fn incident(x: &ProjPoint3, h: &ProjPlane3) -> Result<bool> {
    if x.modulus != h.modulus {
        return Err(Error::ModulusMismatch {
            left: x.modulus.p(),
            right: h.modulus.p(),
        });
    }
    Ok(dot(x.modulus, &x.coords, &h.coords) == 0)
}

/// Every normalized nonzero 4-vector over F_p, `p^3 + p^2 + p + 1` of them.
fn all_vectors(m: FieldModulus) -> Vec<[u64; 4]> {
    let p = m.p();
    let mut out = Vec::new();
    for lead in 0..4 {
        let free = 3 - lead;
        let count = p.pow(free as u32);
        for idx in 0..count {
            let mut v = [0u64; 4];
            v[lead] = 1;
            let mut rest = idx;
            for slot in v.iter_mut().skip(lead + 1) {
                *slot = rest % p;
                rest /= p;
            }
            out.push(v);
        }
    }
    out
}

pub fn all_points(m: FieldModulus) -> Vec<ProjPoint3> {
    all_vectors(m)
        .into_iter()
        .map(|coords| ProjPoint3 { modulus: m, coords })
        .collect()
}

pub fn all_planes(m: FieldModulus) -> Vec<ProjPlane3> {
    all_vectors(m)
        .into_iter()
        .map(|coords| ProjPlane3 { modulus: m, coords })
        .collect()
}

/// Largest number of vectors on a common projective line.
///
/// For each anchor `x` (lead coordinate `f`), every other vector `v` is mapped
/// to the normalized `v - v_f x`, which identifies the line through `x` and `v`.
fn max_collinear(m: FieldModulus, vs: &[[u64; 4]]) -> usize {
    let n = vs.len();
    if n <= 2 {
        return n;
    }
    // Anchor i only looks at j > i: a line through an earlier anchor was already counted there.
    let mut best = 2;
    let mut dirs: Vec<[u64; 4]> = Vec::with_capacity(n);
    let mut prefix: Vec<u64> = Vec::with_capacity(n);
    let mut keys: Vec<u128> = Vec::with_capacity(n);
    for i in 0..n {
        if n - i <= best {
            break;
        }
        let x = &vs[i];
        let f = x.iter().position(|&c| c != 0).expect("normalized");
        dirs.clear();
        prefix.clear();
        let mut acc = 1;
        for v in &vs[i + 1..] {
            let y = [0, 1, 2, 3].map(|t| m.sub(v[t], m.mul(v[f], x[t])));
            let lead = y.iter().copied().find(|&c| c != 0).expect("distinct projective points");
            prefix.push(acc);
            acc = m.mul(acc, lead);
            dirs.push(y);
        }
        // batch inversion of the leading coordinates
        let mut inv = m.inv(acc).expect("nonzero product");
        keys.clear();
        keys.resize(dirs.len(), 0);
        for w in (0..dirs.len()).rev() {
            let y = dirs[w];
            let lead = y.iter().copied().find(|&c| c != 0).unwrap();
            let s = m.mul(inv, prefix[w]);
            inv = m.mul(inv, lead);
            keys[w] = y.iter().fold(0u128, |k, &c| (k << 32) | m.mul(c, s) as u128);
        }
        keys.sort_unstable();
        let mut run = 0;
        for w in 0..keys.len() {
            run = if w > 0 && keys[w] == keys[w - 1] { run + 1 } else { 1 };
            best = best.max(run + 1);
        }
    }
    best
}

/// Reference collinearity statistic: hash the line of every pair and recover
/// the multiplicity `t` of a line from its pair count `C(t, 2)`.
fn max_collinear_by_pair_count(m: FieldModulus, vs: &[[u64; 4]]) -> usize {
    if vs.len() <= 1 {
        return vs.len();
    }
    let mut pairs: HashMap<[u64; 6], u64> = HashMap::new();
    for i in 0..vs.len() {
        for j in (i + 1)..vs.len() {
            let line = normalize6(m, minors(m, &vs[i], &vs[j])).expect("distinct");
            *pairs.entry(line).or_default() += 1;
        }
    }
    let c = pairs.values().copied().max().unwrap_or(0);
    multiplicity_from_pairs(c)
}

/// Solves `t (t - 1) / 2 = c` for `t`.
pub fn multiplicity_from_pairs(c: u64) -> usize {
    let disc = 1 + 8 * c;
    let root = (disc as f64).sqrt().round() as u64;
    assert_eq!(root * root, disc, "{c} is not a triangular number");
    ((1 + root) / 2) as usize
}

/// A finite set of points and planes with cached collinearity statistics.
#[derive(Debug)]
pub struct Arrangement {
    modulus: FieldModulus,
    points: Vec<ProjPoint3>,
    planes: Vec<ProjPlane3>,
    k_points: OnceLock<usize>,
    k_planes: OnceLock<usize>,
}

impl Clone for Arrangement {
    fn clone(&self) -> Self {
        Arrangement {
            modulus: self.modulus,
            points: self.points.clone(),
            planes: self.planes.clone(),
            k_points: self.k_points.clone(),
            k_planes: self.k_planes.clone(),
        }
    }
}

impl Arrangement {
    /// Rejects duplicates and mixed moduli.
    pub fn new(modulus: FieldModulus, points: Vec<ProjPoint3>, planes: Vec<ProjPlane3>) -> Result<Self> {
        let mismatch = points
            .iter()
            .map(|x| x.modulus)
            .chain(planes.iter().map(|h| h.modulus))
            .find(|&pm| pm != modulus);
        if let Some(other) = mismatch {
            return Err(Error::ModulusMismatch {
                left: modulus.p(),
                right: other.p(),
            });
        }
        let mut seen = HashSet::new();
        for x in &points {
            if !seen.insert(x.coords) {
                return Err(Error::Duplicate(format!("point {:?}", x.coords)));
            }
        }
        seen.clear();
        for h in &planes {
            if !seen.insert(h.coords) {
                return Err(Error::Duplicate(format!("plane {:?}", h.coords)));
            }
        }
        Ok(Arrangement {
            modulus,
            points,
            planes,
            k_points: OnceLock::new(),
            k_planes: OnceLock::new(),
        })
    }

    pub fn modulus(&self) -> FieldModulus {
        self.modulus
    }

    pub fn points(&self) -> &[ProjPoint3] {
        &self.points
    }

    pub fn planes(&self) -> &[ProjPlane3] {
        &self.planes
    }

    pub fn m(&self) -> usize {
        self.points.len()
    }

    pub fn n(&self) -> usize {
        self.planes.len()
    }

    /// Exact incidence count via the `m·n` double loop.
    pub fn count_incidences_naive(&self) -> u64 {
        let m = self.modulus;
        self.planes
            .par_iter()
            .map(|h| {
                self.points
                    .iter()
                    .filter(|x| dot(m, &x.coords, &h.coords) == 0)
                    .count() as u64
            })
            .sum()
    }

    /// Exact incidence count.
    ///
    /// Points are bucketed by their first three coordinates. For a plane with
    /// `π3 != 0` each bucket determines the unique incident `X3`; for `π3 = 0`
    /// a bucket is incident as a whole or not at all.
    pub fn count_incidences(&self) -> u64 {
        let m = self.modulus;
        let mut buckets: HashMap<[u64; 3], HashSet<u64>> = HashMap::new();
        for x in &self.points {
            let c = x.coords;
            buckets.entry([c[0], c[1], c[2]]).or_default().insert(c[3]);
        }
        let buckets: Vec<([u64; 3], HashSet<u64>)> = buckets.into_iter().collect();
        self.planes
            .par_iter()
            .map(|h| {
                let pi = h.coords;
                let mut count = 0u64;
                for (prefix, tails) in &buckets {
                    let partial = (0..3).fold(0, |acc, i| m.add(acc, m.mul(pi[i], prefix[i])));
                    if pi[3] == 0 {
                        if partial == 0 {
                            count += tails.len() as u64;
                        }
                    } else {
                        let x3 = m.mul(m.neg(partial), m.inv(pi[3]).expect("nonzero"));
                        count += u64::from(tails.contains(&x3));
                    }
                }
                count
            })
            .sum()
    }

    /// Maximum number of planes through a common line.
    pub fn max_collinear_planes(&self) -> usize {
        *self.k_planes.get_or_init(|| {
            let vs: Vec<[u64; 4]> = self.planes.iter().map(|h| h.coords).collect();
            max_collinear(self.modulus, &vs)
        })
    }

    /// Maximum number of points on a common line.
    pub fn max_collinear_points(&self) -> usize {
        *self.k_points.get_or_init(|| {
            let vs: Vec<[u64; 4]> = self.points.iter().map(|x| x.coords).collect();
            max_collinear(self.modulus, &vs)
        })
    }

    /// The pair-count reference for [`Self::max_collinear_planes`].
    pub fn max_collinear_planes_by_pair_count(&self) -> usize {
        let vs: Vec<[u64; 4]> = self.planes.iter().map(|h| h.coords).collect();
        max_collinear_by_pair_count(self.modulus, &vs)
    }

    pub fn max_collinear_points_by_pair_count(&self) -> usize {
        let vs: Vec<[u64; 4]> = self.points.iter().map(|x| x.coords).collect();
        max_collinear_by_pair_count(self.modulus, &vs)
    }

    /// Writes `kind,c0,c1,c2,c3` rows, points first.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["kind", "c0", "c1", "c2", "c3"])?;
        let rows = self
            .points
            .iter()
            .map(|x| ("point", x.coords))
            .chain(self.planes.iter().map(|h| ("plane", h.coords)));
        for (kind, c) in rows {
            w.write_record([
                kind.to_string(),
                c[0].to_string(),
                c[1].to_string(),
                c[2].to_string(),
                c[3].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(modulus: FieldModulus, input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let mut points = Vec::new();
        let mut planes = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            let parse_err = |msg: String| Error::Parse { line: i + 2, msg };
            if rec.len() != 5 {
                return Err(parse_err(format!("expected 5 columns, found {}", rec.len())));
            }
            let mut c = [0u64; 4];
            for (slot, field) in c.iter_mut().zip(rec.iter().skip(1)) {
                *slot = field.trim().parse().map_err(|_| parse_err(format!("bad coordinate {field:?}")))?;
            }
            match rec[0].trim() {
                "point" => points.push(ProjPoint3::new(modulus, c)?),
                "plane" => planes.push(ProjPlane3::new(modulus, c)?),
                other => return Err(parse_err(format!("unknown kind {other:?}"))),
            }
        }
        Arrangement::new(modulus, points, planes)
    }
}

/// `m √n + k m`, with no implied constant.
pub fn theorem1_rhs(m: u64, n: u64, k: u64) -> f64 {
    m as f64 * (n as f64).sqrt() + (k * m) as f64
}

/// The point-plane arrangement whose incidences count solutions of
/// `a + bc = a' + b'c'`: points `(1, a, c, b')` and planes `x + by - c'z = a'`.
pub fn build_theorem2_arrangement(a: &ResidueSet, b: &ResidueSet, c: &ResidueSet) -> Result<Arrangement> {
    build_theorem2_arrangement_with_budget(a, b, c, DEFAULT_ARRANGEMENT_BUDGET)
}

pub fn build_theorem2_arrangement_with_budget(
    a: &ResidueSet,
    b: &ResidueSet,
    c: &ResidueSet,
    budget: usize,
) -> Result<Arrangement> {
    let m = a.modulus();
    for other in [b, c] {
        if other.modulus() != m {
            return Err(Error::ModulusMismatch {
                left: m.p(),
                right: other.modulus().p(),
            });
        }
    }
    let size = a.len().saturating_mul(b.len()).saturating_mul(c.len());
    if size > budget {
        return Err(Error::BudgetExceeded {
            requested: size,
            budget,
        });
    }
    let mut points = Vec::with_capacity(size);
    let mut planes = Vec::with_capacity(size);
    for x in a.iter() {
        for z in c.iter() {
            for y in b.iter() {
                points.push(ProjPoint3::affine(m, x, z, y)?);
            }
        }
    }
    for x in a.iter() {
        for y in b.iter() {
            for z in c.iter() {
                planes.push(ProjPlane3::theorem2_plane(m, x, y, z)?);
            }
        }
    }
    Arrangement::new(m, points, planes)
}
