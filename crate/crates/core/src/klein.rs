//! Lines of PG(3, F_p) as points of the Klein quadric in PG(5, F_p).
//!
//! Plücker coordinates are ordered `(p01, p02, p03, p12, p13, p23)` and
//! normalized so the first nonzero entry is 1. Every line satisfies
//! `p01 p23 - p02 p13 + p03 p12 = 0`.

use std::collections::HashSet;
use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::FieldModulus;
use crate::projective::{all_planes, all_points, incident, minors, normalize6, ProjPlane3, ProjPoint3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PluckerLine {
    modulus: FieldModulus,
    coords: [u64; 6],
}

impl PluckerLine {
    pub fn coords(&self) -> [u64; 6] {
        self.coords
    }

    pub fn modulus(&self) -> FieldModulus {
        self.modulus
    }

    /// The quadratic form of the Klein quadric evaluated at this line.
    pub fn quadric_form(&self) -> u64 {
        klein_form(self.modulus, &self.coords)
    }
}

fn klein_form(m: FieldModulus, c: &[u64; 6]) -> u64 {
    let t1 = m.mul(c[0], c[5]);
    let t2 = m.mul(c[1], c[4]);
    let t3 = m.mul(c[2], c[3]);
    m.add(m.sub(t1, t2), t3)
}

/// The polar bilinear form of the Klein quadric.
fn polar_form(m: FieldModulus, a: &[u64; 6], b: &[u64; 6]) -> u64 {
    let terms = [
        m.mul(a[0], b[5]),
        m.mul(a[5], b[0]),
        m.neg(m.mul(a[1], b[4])),
        m.neg(m.mul(a[4], b[1])),
        m.mul(a[2], b[3]),
        m.mul(a[3], b[2]),
    ];
    terms.into_iter().fold(0, |acc, t| m.add(acc, t))
}

fn check(a: FieldModulus, b: FieldModulus) -> Result<FieldModulus> {
    if a != b {
        return Err(Error::ModulusMismatch {
            left: a.p(),
            right: b.p(),
        });
    }
    Ok(a)
}

/// The line joining two distinct points: `p_ij = X_i Y_j - X_j Y_i`.
pub fn line_through(x: &ProjPoint3, y: &ProjPoint3) -> Result<PluckerLine> {
    let m = check(x.modulus(), y.modulus())?;
    let coords = normalize6(m, minors(m, &x.coords(), &y.coords()))
        .ok_or_else(|| Error::Domain("a line needs two distinct points".into()))?;
    Ok(PluckerLine { modulus: m, coords })
}

/// The common line of two distinct planes.
///
/// The minors `π_ij` of the plane pair are dual coordinates; they map to
/// point coordinates by `p01:p02:p03:p12:p13:p23 = π23:-π13:π12:π03:-π02:π01`.
pub fn line_of_intersection(h1: &ProjPlane3, h2: &ProjPlane3) -> Result<PluckerLine> {
    let m = check(h1.modulus(), h2.modulus())?;
    let d = minors(m, &h1.coords(), &h2.coords());
    let primal = [d[5], m.neg(d[4]), d[3], d[2], m.neg(d[1]), d[0]];
    let coords =
        normalize6(m, primal).ok_or_else(|| Error::Domain("a line needs two distinct planes".into()))?;
    Ok(PluckerLine { modulus: m, coords })
}

/// True iff the two lines of PG(3) share a point (including equal lines).
pub fn lines_meet(l1: &PluckerLine, l2: &PluckerLine) -> Result<bool> {
    let m = check(l1.modulus, l2.modulus)?;
    Ok(polar_form(m, &l1.coords, &l2.coords) == 0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KleinPlaneKind {
    Alpha,
    Beta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KleinAnchor {
    Point(ProjPoint3),
    Plane(ProjPlane3),
}

/// An α-plane (all lines through a point) or β-plane (all lines in a plane),
/// stored by its member lines.
#[derive(Debug, Clone)]
pub struct KleinPlane {
    anchor: KleinAnchor,
    members: HashSet<PluckerLine>,
}

impl KleinPlane {
    pub fn kind(&self) -> KleinPlaneKind {
        match self.anchor {
            KleinAnchor::Point(_) => KleinPlaneKind::Alpha,
            KleinAnchor::Plane(_) => KleinPlaneKind::Beta,
        }
    }

    pub fn anchor(&self) -> KleinAnchor {
        self.anchor
    }

    pub fn members(&self) -> &HashSet<PluckerLine> {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    fn modulus(&self) -> FieldModulus {
        match self.anchor {
            KleinAnchor::Point(x) => x.modulus(),
            KleinAnchor::Plane(h) => h.modulus(),
        }
    }
}

pub fn alpha_plane(x: &ProjPoint3) -> KleinPlane {
    let members = all_points(x.modulus())
        .iter()
        .filter(|y| *y != x)
        .map(|y| line_through(x, y).expect("distinct points"))
        .collect();
    KleinPlane {
        anchor: KleinAnchor::Point(*x),
        members,
    }
}

pub fn beta_plane(h: &ProjPlane3) -> KleinPlane {
    let members = all_planes(h.modulus())
        .iter()
        .filter(|g| *g != h)
        .map(|g| line_of_intersection(h, g).expect("distinct planes"))
        .collect();
    KleinPlane {
        anchor: KleinAnchor::Plane(*h),
        members,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntersectionClass {
    Point,
    Line,
    Empty,
    Equal,
}

impl fmt::Display for IntersectionClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            IntersectionClass::Point => "point",
            IntersectionClass::Line => "line",
            IntersectionClass::Empty => "empty",
            IntersectionClass::Equal => "equal",
        };
        f.write_str(s)
    }
}

/// Classifies the intersection of two Klein planes by the size of their common
/// member set: 1 is a point, `p + 1` a line, 0 empty.
pub fn classify_intersection(k1: &KleinPlane, k2: &KleinPlane) -> Result<IntersectionClass> {
    let m = check(k1.modulus(), k2.modulus())?;
    if k1.anchor == k2.anchor {
        return Ok(IntersectionClass::Equal);
    }
    let (small, large) = if k1.len() <= k2.len() { (k1, k2) } else { (k2, k1) };
    let common = small.members.iter().filter(|l| large.members.contains(l)).count();
    match common {
        0 => Ok(IntersectionClass::Empty),
        1 => Ok(IntersectionClass::Point),
        n if n as u64 == m.p() + 1 => Ok(IntersectionClass::Line),
        n => Err(Error::Geometry(format!("Klein planes share {n} lines"))),
    }
}

/// One row of the exhaustive α/β classification sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepRow {
    pub point_id: usize,
    pub plane_id: usize,
    pub incident: bool,
    pub class: IntersectionClass,
}

/// Outcome of the full verification of the intersection laws in PG(3, p).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KleinReport {
    pub rows: Vec<SweepRow>,
    /// α/β pairs whose class disagrees with incidence.
    pub mixed_violations: usize,
    pub same_type_pairs: usize,
    pub same_type_violations: usize,
    pub lines_checked: usize,
    pub off_quadric: usize,
    pub bad_plane_sizes: usize,
}

impl KleinReport {
    pub fn passed(&self) -> bool {
        self.mixed_violations == 0 && self.same_type_violations == 0 && self.off_quadric == 0 && self.bad_plane_sizes == 0
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["point_id", "plane_id", "incident", "intersection_class"])?;
        for r in &self.rows {
            w.write_record([
                r.point_id.to_string(),
                r.plane_id.to_string(),
                u8::from(r.incident).to_string(),
                r.class.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Exhaustively checks, over every point and plane of PG(3, p), that α- and
/// β-planes meet in a line exactly for incident pairs and are disjoint
/// otherwise, that distinct same-type planes meet in a point, and that every
/// constructed line lies on the quadric.
pub fn verify_intersection_laws(m: FieldModulus) -> Result<KleinReport> {
    let points = all_points(m);
    let planes = all_planes(m);
    let alphas: Vec<KleinPlane> = points.iter().map(alpha_plane).collect();
    let betas: Vec<KleinPlane> = planes.iter().map(beta_plane).collect();
    let size = (m.p() * m.p() + m.p() + 1) as usize;
    let mut report = KleinReport::default();

    for k in alphas.iter().chain(betas.iter()) {
        if k.len() != size {
            report.bad_plane_sizes += 1;
        }
        for l in k.members() {
            report.lines_checked += 1;
            if l.quadric_form() != 0 {
                report.off_quadric += 1;
            }
        }
    }

    for (i, (x, ka)) in points.iter().zip(&alphas).enumerate() {
        for (j, (h, kb)) in planes.iter().zip(&betas).enumerate() {
            let inc = incident(x, h)?;
            let class = classify_intersection(ka, kb)?;
            let want = if inc { IntersectionClass::Line } else { IntersectionClass::Empty };
            if class != want {
                report.mixed_violations += 1;
            }
            report.rows.push(SweepRow {
                point_id: i,
                plane_id: j,
                incident: inc,
                class,
            });
        }
    }

    for family in [&alphas, &betas] {
        for i in 0..family.len() {
            for j in (i + 1)..family.len() {
                report.same_type_pairs += 1;
                if classify_intersection(&family[i], &family[j])? != IntersectionClass::Point {
                    report.same_type_violations += 1;
                }
            }
        }
    }
    Ok(report)
}
