use num_bigint::BigUint;

use super::{CheckerId, CheckerParams, CheckerResult, Direction, Quantity};
use crate::error::{Error, Result};
use crate::expsum::{fourth_moment, hole_bound_exponents, observed_hole_exponent, ExpSumSpec};
use crate::field::FieldModulus;
use crate::numeric::{le_scaled_p2, lt_power};
use crate::projective::{build_theorem2_arrangement, theorem1_rhs, Arrangement};
use crate::sets::{
    additive_energy, bilinear_solution_count, compose_a_plus_bc, difference_set, dilate, energy_moment,
    intersection_moment, katz_koester_mult, nfold_sum, product_set, ratio_set, shifted_intersection, sumset,
    EnergyKind, EnergyValue, ResidueSet,
};

fn nonempty(s: &ResidueSet, name: &'static str) -> Result<()> {
    if s.is_empty() {
        return Err(Error::EmptySet(name));
    }
    Ok(())
}

fn same_modulus(sets: &[&ResidueSet]) -> Result<FieldModulus> {
    let m = sets[0].modulus();
    for s in &sets[1..] {
        if s.modulus() != m {
            return Err(Error::ModulusMismatch {
                left: m.p(),
                right: s.modulus().p(),
            });
        }
    }
    Ok(m)
}

fn no_zero(s: &ResidueSet, name: &str) -> Result<()> {
    if s.contains_zero() {
        return Err(Error::Domain(format!("{name} must not contain 0")));
    }
    Ok(())
}

fn len(s: &ResidueSet) -> u128 {
    s.len() as u128
}

fn pw(x: impl Into<f64>, e: f64) -> f64 {
    x.into().powf(e)
}

fn energy_q(e: &EnergyValue) -> Quantity {
    e.exact.map_or(Quantity::Real(e.value), Quantity::Int)
}

/// `Π base^exp`, exact while it fits in `u128`.
fn qprod(factors: &[(Quantity, u32)]) -> Quantity {
    let mut exact = Some(1u128);
    for &(q, e) in factors {
        exact = exact.and_then(|acc| q.as_int()?.checked_pow(e).and_then(|v| acc.checked_mul(v)));
    }
    match exact {
        Some(v) => Quantity::Int(v),
        None => Quantity::Real(factors.iter().map(|&(q, e)| q.as_f64().powi(e as i32)).product()),
    }
}

fn int(v: u128) -> Quantity {
    Quantity::Int(v)
}

fn le_p2(x: u128, p: u64) -> bool {
    le_scaled_p2(x, p, 1.0)
}

fn exact_le(checker: CheckerId, claim: &str, p: u64, sizes: &[usize], lhs: u128, rhs: u128) -> CheckerResult {
    CheckerResult::new(checker, claim, p, sizes.to_vec(), int(lhs), rhs as f64, Direction::Exact).exact(lhs <= rhs)
}

fn exact_eq(checker: CheckerId, claim: &str, p: u64, sizes: &[usize], lhs: u128, rhs: u128) -> CheckerResult {
    CheckerResult::new(checker, claim, p, sizes.to_vec(), int(lhs), rhs as f64, Direction::Exact).exact(lhs == rhs)
}

fn with_flags(rows: Vec<CheckerResult>, flags: &[(&str, bool)]) -> Vec<CheckerResult> {
    rows.into_iter()
        .map(|mut r| {
            for &(name, v) in flags {
                r = r.flag(name, v);
            }
            r
        })
        .collect()
}

/// Incidences of an arrangement against `m√n + km`, `k` the largest number
/// of collinear planes.
pub fn check_t1(arr: &Arrangement, params: &CheckerParams) -> Result<Vec<CheckerResult>> {
    if arr.m() == 0 || arr.n() == 0 {
        return Err(Error::EmptySet("arrangement"));
    }
    if arr.n() > params.t1_budget {
        return Err(Error::BudgetExceeded {
            requested: arr.n(),
            budget: params.t1_budget,
        });
    }
    let p = arr.modulus().p();
    let (m, n) = (arr.m() as u64, arr.n() as u64);
    let k = arr.max_collinear_planes() as u64;
    let incidences = arr.count_incidences();
    let p2 = p as u128 * p as u128;
    let row = CheckerResult::new(
        CheckerId::T1,
        "incidences",
        p,
        vec![arr.m(), arr.n()],
        int(incidences as u128),
        theorem1_rhs(m, n, k),
        Direction::Upper,
    )
    .param("k", k)
    .flag("n_le_p2", n as u128 <= p2)
    .flag("n_le_p2_over_16", 16 * n as u128 <= p2);
    Ok(vec![row])
}

/// The point-plane incidence bound on the arrangement built from `a + bc = a' + b'c'`, plus the
/// two exact facts of that construction.
pub fn check_t1_sets(
    a: &ResidueSet,
    b: &ResidueSet,
    c: &ResidueSet,
    params: &CheckerParams,
) -> Result<Vec<CheckerResult>> {
    let m = same_modulus(&[a, b, c])?;
    let sizes = vec![a.len(), b.len(), c.len()];
    let arr = build_theorem2_arrangement(a, b, c)?;
    let mut rows = check_t1(&arr, params)?;
    let p = m.p();
    let big_m = *sizes.iter().max().unwrap_or(&0);
    rows.push(exact_eq(
        CheckerId::T1,
        "incidence_equivalence",
        p,
        &sizes,
        arr.count_incidences() as u128,
        bilinear_solution_count(a, b, c)?,
    ));
    rows.push(exact_eq(
        CheckerId::T1,
        "collinear_points",
        p,
        &sizes,
        arr.max_collinear_points() as u128,
        big_m as u128,
    ));
    for r in &mut rows {
        r.sizes = sizes.clone();
    }
    Ok(rows)
}

/// `|A + BC|` against `min(√(|A||B||C|), |A||B||C|/M, p)`.
pub fn check_t2(a: &ResidueSet, b: &ResidueSet, c: &ResidueSet, params: &CheckerParams) -> Result<Vec<CheckerResult>> {
    let m = same_modulus(&[a, b, c])?;
    nonempty(a, "A")?;
    nonempty(b, "B")?;
    nonempty(c, "C")?;
    let p = m.p();
    let mass = len(a) * len(b) * len(c);
    let big_m = a.len().max(b.len()).max(c.len()) as f64;
    let rhs = (mass as f64).sqrt().min(mass as f64 / big_m).min(p as f64);
    let lhs = compose_a_plus_bc(a, b, c)?.len();
    let row = CheckerResult::new(
        CheckerId::T2,
        "a_plus_bc",
        p,
        vec![a.len(), b.len(), c.len()],
        lhs.into(),
        rhs,
        Direction::Lower,
    )
    .param("c", params.t2_c)
    .flag("mass_le_cp2", le_scaled_p2(mass, p, params.t2_c));
    Ok(vec![row])
}

/// `E(A, C)` against `(|A||BC|)^{3/2}|B|^{-1/2} + M|A||BC||B|^{-1}`, with
/// `rhs` using `M = max(|A|, |BC|)` and `rhs_alt` using `M = max(|A|, |B|, |C|)`.
/// The rearrangement step `|B|² E(A,C) <= #{a + st = a' + s't' : s ∈ BC, t ∈ B^{-1}}`
/// is checked exactly.
pub fn check_energy_t4(a: &ResidueSet, b: &ResidueSet, c: &ResidueSet) -> Result<Vec<CheckerResult>> {
    let m = same_modulus(&[a, b, c])?;
    nonempty(a, "A")?;
    nonempty(b, "B")?;
    nonempty(c, "C")?;
    no_zero(b, "B")?;
    let p = m.p();
    let sizes = vec![a.len(), b.len(), c.len()];
    let bc = product_set(b, c)?;
    let energy = additive_energy(a, c)?.exact_value();
    let (na, nb, nbc) = (a.len() as f64, b.len() as f64, bc.len() as f64);
    let bound = |big_m: f64| pw(na * nbc, 1.5) / nb.sqrt() + big_m * na * nbc / nb;
    let rhs = bound(na.max(nbc));
    let rhs_alt = bound(a.len().max(b.len()).max(c.len()) as f64);
    let mass_flag = le_p2(len(a) * len(b) * len(&bc), p);
    let main = CheckerResult::new(CheckerId::EnergyT4, "energy", p, sizes.clone(), int(energy), rhs, Direction::Upper)
        .alt(rhs_alt)
        .param("bc", bc.len());
    let rearranged = exact_le(
        CheckerId::EnergyT4,
        "rearrangement",
        p,
        &sizes,
        len(b) * len(b) * energy,
        bilinear_solution_count(a, &bc, &b.inverses())?,
    );
    Ok(with_flags(vec![main, rearranged], &[("mass_le_p2", mass_flag)]))
}

/// `max(|A ± A|, |AA|)` and `max(|A ± A|, |A:A|)` against `|A|^{6/5}`,
/// `|A ± A|²|AA|³` against `|A|⁶`, and Cauchy–Schwarz `|A|⁴ <= E(A)|A ± A|`.
/// The `A:A` rows are omitted when `A ⊆ {0}`.
pub fn check_sumprod(a: &ResidueSet) -> Result<Vec<CheckerResult>> {
    nonempty(a, "A")?;
    let p = a.modulus().p();
    let sizes = vec![a.len()];
    let n = len(a);
    let sum = len(&sumset(a, a)?);
    let diff = len(&difference_set(a, a)?);
    let prod = len(&product_set(a, a)?);
    let energy = additive_energy(a, a)?.exact_value();
    let six_fifths = pw(n as f64, 1.2);
    let n6 = (n as f64).powi(6);
    let row = |claim: &str, lhs: Quantity, rhs: f64| {
        CheckerResult::new(CheckerId::Sumprod, claim, p, sizes.clone(), lhs, rhs, Direction::Lower)
    };
    let mut rows = vec![
        row("max_sum_prod", int(sum.max(prod)), six_fifths),
        row("max_diff_prod", int(diff.max(prod)), six_fifths),
        row("sp_sum", qprod(&[(int(sum), 2), (int(prod), 3)]), n6),
        row("sp_diff", qprod(&[(int(diff), 2), (int(prod), 3)]), n6),
    ];
    let quotient_rows = a.iter().any(|x| x != 0);
    if quotient_rows {
        let quot = len(&ratio_set(a, a)?);
        rows.push(row("max_sum_ratio", int(sum.max(quot)), six_fifths));
        rows.push(row("max_diff_ratio", int(diff.max(quot)), six_fifths));
    }
    let n4 = n.pow(4);
    rows.push(exact_le(CheckerId::Sumprod, "cauchy_schwarz_sum", p, &sizes, n4, energy * sum));
    rows.push(exact_le(CheckerId::Sumprod, "cauchy_schwarz_diff", p, &sizes, n4, energy * diff));
    let size_flag = lt_power(a.len() as u64, p, 5, 8);
    Ok(with_flags(
        rows,
        &[("size_lt_p58", size_flag), ("ratio_rows_skipped", !quotient_rows)],
    ))
}

/// The set-size lower bounds for `aA ± AA`, `A ± AA ± AA` and, when `0 ∉ A`,
/// the `K = |AA|/|A|` forms for `AA ± AA` and `AA + AA ± AA`.
pub fn check_aux(a: &ResidueSet, dilation: u64) -> Result<Vec<CheckerResult>> {
    nonempty(a, "A")?;
    let m = a.modulus();
    let p = m.p();
    let dil = m.residue(m.reduce(dilation))?;
    if dil.is_zero() {
        return Err(Error::Domain("dilation factor a must be nonzero".into()));
    }
    let n = a.len() as f64;
    let pf = p as f64;
    let sizes = vec![a.len()];
    let row = |claim: &str, lhs: &ResidueSet, rhs: f64| {
        CheckerResult::new(CheckerId::Aux, claim, p, sizes.clone(), lhs.len().into(), rhs, Direction::Lower)
    };
    let aa = product_set(a, a)?;
    let da = dilate(dil, a)?;
    let three_halves = pw(n, 1.5).min(pf);
    let seven_quarters = pw(n, 1.75).min(pf);
    let aa_plus_aa = sumset(&aa, &aa)?;
    let mut rows = vec![
        row("aA+AA", &sumset(&da, &aa)?, three_halves),
        row("aA-AA", &difference_set(&da, &aa)?, three_halves),
        row("A+AA+AA", &sumset(a, &aa_plus_aa)?, seven_quarters),
        row("A-AA-AA", &difference_set(&difference_set(a, &aa)?, &aa)?, seven_quarters),
    ];
    let zero = a.contains_zero();
    if !zero {
        let k = aa.len() as f64 / n;
        let k_half = (k.sqrt() * pw(n, 1.5)).min(pf);
        let k_quarter = (pw(k, 0.25) * pw(n, 1.75)).min(pf);
        let k_rows = [
            row("AA+AA", &aa_plus_aa, k_half),
            row("AA-AA", &difference_set(&aa, &aa)?, k_half),
            row("AA+AA+AA", &sumset(&aa_plus_aa, &aa)?, k_quarter),
            row("AA+AA-AA", &difference_set(&aa_plus_aa, &aa)?, k_quarter),
        ];
        rows.extend(k_rows.into_iter().map(|r| r.param("K", crate::numeric::format_real(k))));
    }
    let rows = rows.into_iter().map(|r| r.param("a", dil.value())).collect();
    Ok(with_flags(rows, &[("zero_in_a", zero)]))
}

/// `|3A|⁴|AA|⁹` against `|A|^{16}`.
pub fn check_3a(a: &ResidueSet) -> Result<Vec<CheckerResult>> {
    nonempty(a, "A")?;
    let p = a.modulus().p();
    let triple = len(&nfold_sum(a, 3)?);
    let prod = len(&product_set(a, a)?);
    let row = CheckerResult::new(
        CheckerId::ThreeA,
        "3a",
        p,
        vec![a.len()],
        qprod(&[(int(triple), 4), (int(prod), 9)]),
        (a.len() as f64).powi(16),
        Direction::Lower,
    )
    .param("sum3", triple)
    .flag("size_lt_p1835", lt_power(a.len() as u64, p, 18, 35));
    Ok(vec![row])
}

/// `max(|4A|, |AA|)` against `|A|^{36/29}`.
pub fn check_4a(a: &ResidueSet) -> Result<Vec<CheckerResult>> {
    nonempty(a, "A")?;
    let p = a.modulus().p();
    let quad = len(&nfold_sum(a, 4)?);
    let prod = len(&product_set(a, a)?);
    let row = CheckerResult::new(
        CheckerId::FourA,
        "4a",
        p,
        vec![a.len()],
        int(quad.max(prod)),
        pw(a.len() as f64, 36.0 / 29.0),
        Direction::Lower,
    )
    .param("sum4", quad)
    .flag("size_lt_p58101", lt_power(a.len() as u64, p, 58, 101));
    Ok(vec![row])
}

/// `|A(A ± A)|` against `|A|^{4/3}` and `|(A ± A)(A + εA)|` against
/// `|A||A + εA|^{1/3}`.
pub fn check_a_times_sums(a: &ResidueSet, eps: i8) -> Result<Vec<CheckerResult>> {
    nonempty(a, "A")?;
    if eps != 1 && eps != -1 {
        return Err(Error::Domain(format!("ε must be ±1, got {eps}")));
    }
    let p = a.modulus().p();
    let sizes = vec![a.len()];
    let n = a.len() as f64;
    let sum = sumset(a, a)?;
    let diff = difference_set(a, a)?;
    let shifted = if eps == 1 { &sum } else { &diff };
    let four_thirds = pw(n, 4.0 / 3.0);
    let mixed = n * pw(shifted.len() as f64, 1.0 / 3.0);
    let row = |claim: &str, lhs: &ResidueSet, rhs: f64| {
        CheckerResult::new(CheckerId::ATimesSums, claim, p, sizes.clone(), lhs.len().into(), rhs, Direction::Lower)
            .param("eps", eps)
    };
    let size_flag = lt_power(a.len() as u64, p, 3, 5);
    // |A+εA|^{4/3}|A|² <= p², cubed
    let pb = BigUint::from(p);
    let eps_flag = BigUint::from(shifted.len()).pow(4) * BigUint::from(a.len()).pow(6) <= pb.pow(6);
    let first = vec![
        row("A(A+A)", &product_set(a, &sum)?, four_thirds),
        row("A(A-A)", &product_set(a, &diff)?, four_thirds),
    ];
    let second = vec![
        row("(A+A)(A+eA)", &product_set(&sum, shifted)?, mixed),
        row("(A-A)(A+eA)", &product_set(&diff, shifted)?, mixed),
    ];
    let mut rows = with_flags(first, &[("size_lt_p35", size_flag)]);
    rows.extend(with_flags(second, &[("mass_eps_le_p2", eps_flag)]));
    Ok(rows)
}

/// `|A||B||C|` against `(|B||C|)^{1/2}|(A+C)B|^{3/2} + |(A+C)B|²`; with `d`
/// given, `B` is replaced by `B + D`.
pub fn check_a_times_general(
    a: &ResidueSet,
    b: &ResidueSet,
    c: &ResidueSet,
    d: Option<&ResidueSet>,
) -> Result<Vec<CheckerResult>> {
    let m = same_modulus(&[a, b, c])?;
    nonempty(a, "A")?;
    nonempty(b, "B")?;
    nonempty(c, "C")?;
    let (b_eff, claim) = match d {
        Some(d) => {
            same_modulus(&[a, d])?;
            nonempty(d, "D")?;
            (sumset(b, d)?, "general_b_plus_d")
        }
        None => (b.clone(), "general"),
    };
    let p = m.p();
    let x = len(&product_set(&sumset(a, c)?, &b_eff)?);
    let bc = len(&b_eff) * len(c);
    let rhs = (bc as f64).sqrt() * pw(x as f64, 1.5) + (x as f64).powi(2);
    let mut sizes = vec![a.len(), b.len(), c.len()];
    if let Some(d) = d {
        sizes.push(d.len());
    }
    let row = CheckerResult::new(CheckerId::ATimesGeneral, claim, p, sizes, int(len(a) * bc), rhs, Direction::Upper)
        .param("prod_size", x)
        .flag("mass_le_p2", le_p2(bc * x, p));
    Ok(vec![row])
}

/// `|A||C|² <= E(A+C, C)`, the identity `Σ_s |(A+C) ∩ (A+C+s)||C ∩ (C+s)| = E(A+C, C)`
/// and `min_{s ∈ C−C} |(A+C) ∩ (A+C+s)| >= |A|`, all exact.
pub fn check_katz_koester(a: &ResidueSet, c: &ResidueSet) -> Result<Vec<CheckerResult>> {
    let m = same_modulus(&[a, c])?;
    nonempty(a, "A")?;
    nonempty(c, "C")?;
    let p = m.p();
    let sizes = vec![a.len(), c.len()];
    let apc = sumset(a, c)?;
    let energy = additive_energy(&apc, c)?.exact_value();
    let mut sum = 0u128;
    let mut min_overlap = u128::MAX;
    for s in difference_set(c, c)?.iter() {
        let s = m.residue(s)?;
        let overlap = len(&shifted_intersection(&apc, s)?);
        sum += overlap * len(&shifted_intersection(c, s)?);
        min_overlap = min_overlap.min(overlap);
    }
    let shift_row = CheckerResult::new(
        CheckerId::KatzKoester,
        "shift_overlap",
        p,
        sizes.clone(),
        int(min_overlap),
        a.len() as f64,
        Direction::Exact,
    )
    .exact(min_overlap >= len(a));
    Ok(vec![
        exact_le(CheckerId::KatzKoester, "katz_koester", p, &sizes, len(a) * len(c) * len(c), energy),
        exact_eq(CheckerId::KatzKoester, "overlap_identity", p, &sizes, sum, energy),
        shift_row,
    ])
}

/// The two energy connections (with `E^{2k}(A)` read as `E(A)^{2k}`), the
/// per-`s` inequality behind the second one, and the exact inclusions
/// `A·A_s ⊆ (AA)_s`, `A_s ± A_s ⊆ (A ± A)_s` where `Q_s = Q ∩ sQ`.
pub fn check_energy_connection(a: &ResidueSet, k: u32) -> Result<Vec<CheckerResult>> {
    nonempty(a, "A")?;
    no_zero(a, "A")?;
    if k == 0 {
        return Err(Error::Domain("k must be a positive integer".into()));
    }
    let m = a.modulus();
    let p = m.p();
    let sizes = vec![a.len()];
    let kf = k as f64;
    let n = int(len(a));
    let aa = product_set(a, a)?;
    let sum = sumset(a, a)?;
    let diff = difference_set(a, a)?;
    let mult = EnergyKind::Multiplicative;

    let energy = int(additive_energy(a, a)?.exact_value());
    let e_k = energy_moment(a, kf, mult)?;
    let aa_3k = energy_moment(&aa, 3.0 * kf, mult)?;
    let conn2 = CheckerResult::new(
        CheckerId::EnergyConnection,
        "connection2",
        p,
        sizes.clone(),
        qprod(&[(energy, 2 * k), (energy_q(&e_k), 1)]),
        pw(a.len() as f64, 3.0 * kf) * aa_3k.value,
        Direction::Upper,
    )
    .param("reading", "E(A)^(2k)");

    let e_5k = energy_q(&energy_moment(a, 5.0 * kf, mult)?);
    let aa_6k = energy_moment(&aa, 6.0 * kf, mult)?.value;
    let lhs1 = qprod(&[(n, 2 * k), (e_5k, 2)]);
    let conn1 = |claim: &str, s: &ResidueSet| -> Result<CheckerResult> {
        let rhs = aa_6k * intersection_moment(s, 4.0 * kf)?.value;
        Ok(CheckerResult::new(CheckerId::EnergyConnection, claim, p, sizes.clone(), lhs1, rhs, Direction::Upper))
    };
    let mut rows = vec![conn2, conn1("connection1_sum", &sum)?, conn1("connection1_diff", &diff)?];

    // A_s is empty off A/A, where every inclusion holds trivially.
    let shifts = ratio_set(a, a)?;
    let mut incl = [0u128; 3];
    let mut worst = [(f64::NEG_INFINITY, 0.0, 0.0, 0u64); 2];
    for s in shifts.iter() {
        let sr = m.residue(s)?;
        let a_s = katz_koester_mult(a, sr)?;
        let aa_s = katz_koester_mult(&aa, sr)?;
        let sum_s = katz_koester_mult(&sum, sr)?;
        let diff_s = katz_koester_mult(&diff, sr)?;
        incl[0] += product_set(a, &a_s)?.is_subset(&aa_s)? as u128;
        incl[1] += sumset(&a_s, &a_s)?.is_subset(&sum_s)? as u128;
        incl[2] += difference_set(&a_s, &a_s)?.is_subset(&diff_s)? as u128;
        let lhs = pw(a.len() as f64, kf) * pw(a_s.len() as f64, 5.0 * kf);
        for (slot, pm) in worst.iter_mut().zip([&sum_s, &diff_s]) {
            let rhs = pw(aa_s.len() as f64, 3.0 * kf) * pw(pm.len() as f64, 2.0 * kf);
            let r = lhs / rhs;
            if r > slot.0 {
                *slot = (r, lhs, rhs, s);
            }
        }
    }
    for (claim, (_, lhs, rhs, s)) in ["penultimate_sum", "penultimate_diff"].into_iter().zip(worst) {
        rows.push(
            CheckerResult::new(CheckerId::EnergyConnection, claim, p, sizes.clone(), Quantity::Real(lhs), rhs, Direction::Upper)
                .param("s", s),
        );
    }
    let checked = len(&shifts);
    for (claim, passed) in ["inclusion_prod", "inclusion_sum", "inclusion_diff"].into_iter().zip(incl) {
        rows.push(exact_eq(CheckerId::EnergyConnection, claim, p, &sizes, passed, checked));
    }
    let rows = rows.into_iter().map(|r| r.param("k", k)).collect();
    let mass_flag = le_p2(len(a) * len(a) * len(&aa), p);
    Ok(with_flags(rows, &[("mass_le_p2", mass_flag)]))
}

/// `E(A)² <= |A| E^×_3(AA)` as a ratio, and `E^×_3(AA) <= |AA| E^×(AA)` exactly.
pub fn check_critical_corollary(a: &ResidueSet) -> Result<Vec<CheckerResult>> {
    nonempty(a, "A")?;
    no_zero(a, "A")?;
    let p = a.modulus().p();
    let sizes = vec![a.len()];
    let aa = product_set(a, a)?;
    let energy = additive_energy(a, a)?.exact_value();
    let e3 = energy_moment(&aa, 3.0, EnergyKind::Multiplicative)?;
    let e2 = energy_moment(&aa, 2.0, EnergyKind::Multiplicative)?;
    let first = CheckerResult::new(
        CheckerId::CriticalCorollary,
        "first",
        p,
        sizes.clone(),
        qprod(&[(int(energy), 2)]),
        a.len() as f64 * e3.value,
        Direction::Upper,
    );
    let second = match (e3.exact, e2.exact.and_then(|v| v.checked_mul(len(&aa)))) {
        (Some(l), Some(r)) => exact_le(CheckerId::CriticalCorollary, "second", p, &sizes, l, r),
        _ => {
            let rhs = aa.len() as f64 * e2.value;
            CheckerResult::new(CheckerId::CriticalCorollary, "second", p, sizes.clone(), energy_q(&e3), rhs, Direction::Exact)
                .exact(e3.value <= rhs)
        }
    };
    let mass_flag = le_p2(len(a) * len(a) * len(&aa), p);
    Ok(with_flags(vec![first, second], &[("mass_le_p2", mass_flag)]))
}

/// Fails unless `bQ = Q` for every `b ∈ Γ`.
pub fn verify_invariance(gamma: &ResidueSet, q: &ResidueSet) -> Result<()> {
    let m = same_modulus(&[gamma, q])?;
    for b in gamma.iter() {
        if dilate(m.residue(b)?, q)? != *q {
            return Err(Error::NotInvariant(format!("{b}·Q differs from Q")));
        }
    }
    Ok(())
}

/// `E(A, Q)` and `E(Γ, Q)` for a subgroup Γ and a Γ-invariant `Q`, plus the
/// exact identity `|Γ|² E(A, Q) = #{a + bc = a' + b'c'}` and the trivial
/// bound `E(Γ, Q) <= |Γ|²|Q|`.
pub fn check_subgroup_energy(gamma: &ResidueSet, a: &ResidueSet, q: &ResidueSet) -> Result<Vec<CheckerResult>> {
    let m = same_modulus(&[gamma, a, q])?;
    nonempty(gamma, "Γ")?;
    nonempty(a, "A")?;
    nonempty(q, "Q")?;
    let order = gamma.len() as u64;
    if (m.p() - 1) % order != 0 || m.subgroup(order)? != *gamma {
        return Err(Error::Domain("Γ is not a multiplicative subgroup".into()));
    }
    verify_invariance(gamma, q)?;
    let p = m.p();
    let sizes = vec![gamma.len(), a.len(), q.len()];
    let (ng, na, nq) = (gamma.len() as f64, a.len() as f64, q.len() as f64);
    let big_m = ng.max(na).max(nq);
    let e_aq = additive_energy(a, q)?.exact_value();
    let e_gq = additive_energy(gamma, q)?.exact_value();
    let g2 = len(gamma) * len(gamma);
    let rows = vec![
        CheckerResult::new(
            CheckerId::SubgroupEnergy,
            "energy_a_q",
            p,
            sizes.clone(),
            int(e_aq),
            pw(na, 1.5) * pw(nq, 1.5) / ng.sqrt() + big_m * na * nq / ng,
            Direction::Upper,
        ),
        CheckerResult::new(
            CheckerId::SubgroupEnergy,
            "energy_gamma_q",
            p,
            sizes.clone(),
            int(e_gq),
            ng * pw(nq, 1.5),
            Direction::Upper,
        ),
        exact_eq(
            CheckerId::SubgroupEnergy,
            "bilinear_identity",
            p,
            &sizes,
            g2 * e_aq,
            bilinear_solution_count(a, gamma, q)?,
        ),
        exact_le(CheckerId::SubgroupEnergy, "trivial_bound", p, &sizes, e_gq, g2 * len(q)),
    ];
    Ok(with_flags(
        rows,
        &[
            ("mass_le_p2", le_p2(len(a) * len(gamma) * len(q), p)),
            ("gamma2_q_le_p2", le_p2(g2 * len(q), p)),
        ],
    ))
}

fn expsum_row(spec: &ExpSumSpec, checker: CheckerId, claim: &str, sizes: Vec<usize>, lhs: f64, rhs: f64) -> CheckerResult {
    CheckerResult::new(checker, claim, spec.modulus().p(), sizes, Quantity::Real(lhs), rhs, Direction::Upper)
        .param("g", spec.g())
        .param("a", spec.a())
}

/// `|Σ_{x<=X} Σ_{y<=Y} e_p(a g^{x+y})|` against `(XY)^{13/16} p^{1/8}`.
pub fn check_expsum_double(spec: &ExpSumSpec, x: u64, y: u64) -> Result<Vec<CheckerResult>> {
    let sum = spec.double_sum(x, y)?;
    let p = spec.modulus().p();
    let rhs = pw((x * y) as f64, 13.0 / 16.0) * pw(p as f64, 0.125);
    let row = expsum_row(spec, CheckerId::ExpsumDouble, "double_sum", vec![x as usize, y as usize], sum.magnitude(), rhs)
        .flag("x_lt_p23", lt_power(x, p, 2, 3))
        .flag("y_lt_p23", lt_power(y, p, 2, 3));
    Ok(vec![row])
}

/// `|S(a, N)|` against `min(p^{1/8} N^{5/8}, p^{1/4} N^{3/8})`.
pub fn check_expsum_single(spec: &ExpSumSpec, n: u64) -> Result<Vec<CheckerResult>> {
    let sum = spec.single_sum(n)?;
    let (p, nf) = (spec.modulus().p() as f64, n as f64);
    let rhs = (pw(p, 0.125) * pw(nf, 0.625)).min(pw(p, 0.25) * pw(nf, 0.375));
    let row = expsum_row(spec, CheckerId::ExpsumSingle, "single_sum", vec![n as usize], sum.magnitude(), rhs)
        .flag("n_lt_p23", lt_power(n, spec.modulus().p(), 2, 3));
    Ok(vec![row])
}

/// `Σ_a |Σ_{n<=N} e_p(a g^n)|⁴` against `p N^{5/2}`, with the identity
/// `moment = p E({g^n})` checked to `1e-6` relative.
pub fn check_fourth_moment(spec: &ExpSumSpec, n: u64) -> Result<Vec<CheckerResult>> {
    let set = spec.power_set(n)?;
    let (moment, pe) = fourth_moment(&set)?;
    let p = spec.modulus().p();
    let flag = lt_power(n, p, 2, 3);
    let bound = CheckerResult::new(
        CheckerId::FourthMoment,
        "moment",
        p,
        vec![n as usize],
        Quantity::Real(moment),
        p as f64 * pw(n as f64, 2.5),
        Direction::Upper,
    );
    let identity = CheckerResult::new(
        CheckerId::FourthMoment,
        "identity",
        p,
        vec![n as usize],
        Quantity::Real(moment),
        pe as f64,
        Direction::Exact,
    )
    .exact((moment - pe as f64).abs() <= 1e-6 * pe as f64);
    let rows = vec![bound, identity].into_iter().map(|r| r.param("g", spec.g())).collect();
    Ok(with_flags(rows, &[("n_lt_p23", flag)]))
}

/// The largest gap `H(N)` of `{a g^n}` against `p^{e1} + p^{e2}`; reported only.
pub fn check_hole(spec: &ExpSumSpec, n: u64, params: &CheckerParams) -> Result<Vec<CheckerResult>> {
    let hole = spec.hole_size(n)?;
    let p = spec.modulus().p();
    let (e1, e2) = hole_bound_exponents(params.hole_c, params.hole_nu);
    let pf = p as f64;
    let ceil_sqrt = (1..).find(|&r: &u64| r * r >= p).unwrap_or(p);
    let row = CheckerResult::new(
        CheckerId::Hole,
        "hole",
        p,
        vec![n as usize],
        int(hole as u128),
        pw(pf, e1) + pw(pf, e2),
        Direction::Report,
    )
    .param("g", spec.g())
    .param("a", spec.a())
    .param("c", params.hole_c)
    .param("nu", params.hole_nu)
    .param("bound_exponent", crate::numeric::format_real(e1.max(e2)))
    .param("observed_exponent", crate::numeric::format_real(observed_hole_exponent(p, hole)))
    .flag("n_is_ceil_sqrt_p", n == ceil_sqrt);
    Ok(vec![row])
}
