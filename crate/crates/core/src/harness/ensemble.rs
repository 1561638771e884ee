use std::collections::{BTreeSet, HashMap};
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::checkers::*;
use super::generators::{generate, subgroup_order_for, GeneratorKind};
use super::{CheckerId, CheckerParams, CheckerResult, Direction};
use crate::error::{Error, Result};
use crate::expsum::ExpSumSpec;
use crate::field::FieldModulus;
use crate::numeric::format_real;
use crate::sets::product_set;

/// A grid of cells `(p, generator, size)` with `trials` seeded draws each.
#[derive(Debug, Clone)]
pub struct EnsembleSpec {
    pub moduli: Vec<FieldModulus>,
    pub generators: Vec<GeneratorKind>,
    pub sizes: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub params: CheckerParams,
    /// Smallest acceptable ratio for lower bounds, when asserted.
    pub assert_lower: Option<f64>,
    /// Largest acceptable ratio for upper bounds, when asserted.
    pub assert_upper: Option<f64>,
}

impl EnsembleSpec {
    pub fn new(moduli: Vec<FieldModulus>, generators: Vec<GeneratorKind>, sizes: Vec<usize>, trials: usize, seed: u64) -> Self {
        EnsembleSpec {
            moduli,
            generators,
            sizes,
            trials,
            seed,
            params: CheckerParams::default(),
            assert_lower: None,
            assert_upper: None,
        }
    }

    fn cells(&self) -> Vec<(FieldModulus, GeneratorKind, usize)> {
        let mut out = Vec::new();
        for &m in &self.moduli {
            for &g in &self.generators {
                for &s in &self.sizes {
                    out.push((m, g, s));
                }
            }
        }
        out
    }

    /// Rejects checker/generator pairings that cannot run.
    pub fn validate(&self, checker: CheckerId) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be positive".into()));
        }
        if self.moduli.is_empty() || self.generators.is_empty() || self.sizes.is_empty() {
            return Err(Error::Config("ensemble needs at least one modulus, generator and size".into()));
        }
        for &g in &self.generators {
            if checker.exponential() && g != GeneratorKind::GeometricProgression {
                return Err(Error::Incompatible {
                    checker: checker.name().into(),
                    generator: g.name().into(),
                    reason: "exponential-sum checkers run on powers of a primitive root (geometric_progression)".into(),
                });
            }
        }
        Ok(())
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed of one trial; depends only on the master seed and the grid position.
pub fn trial_seed(master: u64, cell: usize, trial: usize) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ cell as u64) ^ trial as u64)
}

/// Runs `checker` on sets drawn from one seeded stream.
pub(crate) fn run_trial(
    checker: CheckerId,
    m: FieldModulus,
    kind: GeneratorKind,
    size: usize,
    params: &CheckerParams,
    seed: u64,
) -> Result<Vec<CheckerResult>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let excl = checker.multiplicative();
    let mut draw = |exclude_zero: bool| generate(kind, m, size, exclude_zero, &mut rng);
    match checker {
        CheckerId::T1 => {
            let (a, b, c) = (draw(false)?, draw(false)?, draw(false)?);
            check_t1_sets(&a, &b, &c, params)
        }
        CheckerId::T2 => {
            let (a, b, c) = (draw(false)?, draw(false)?, draw(false)?);
            check_t2(&a, &b, &c, params)
        }
        CheckerId::EnergyT4 => {
            let (a, b, c) = (draw(false)?, draw(true)?, draw(false)?);
            check_energy_t4(&a, &b, &c)
        }
        CheckerId::Sumprod => check_sumprod(&draw(excl)?),
        CheckerId::Aux => check_aux(&draw(excl)?, params.aux_a),
        CheckerId::ThreeA => check_3a(&draw(excl)?),
        CheckerId::FourA => check_4a(&draw(excl)?),
        CheckerId::ATimesSums => check_a_times_sums(&draw(excl)?, params.eps),
        CheckerId::ATimesGeneral => {
            let (a, b, c, d) = (draw(false)?, draw(false)?, draw(false)?, draw(false)?);
            let mut rows = check_a_times_general(&a, &b, &c, None)?;
            rows.extend(check_a_times_general(&a, &b, &c, Some(&d))?);
            Ok(rows)
        }
        CheckerId::KatzKoester => {
            let (a, c) = (draw(false)?, draw(false)?);
            check_katz_koester(&a, &c)
        }
        CheckerId::EnergyConnection => check_energy_connection(&draw(true)?, params.k),
        CheckerId::CriticalCorollary => check_critical_corollary(&draw(true)?),
        CheckerId::SubgroupEnergy => {
            let a = draw(excl)?;
            let gamma = m.subgroup(params.gamma_order.unwrap_or_else(|| subgroup_order_for(m, size)))?;
            let q = product_set(&gamma, &a)?;
            check_subgroup_energy(&gamma, &a, &q)
        }
        CheckerId::ExpsumDouble | CheckerId::ExpsumSingle | CheckerId::FourthMoment | CheckerId::Hole => {
            let spec = ExpSumSpec::with_smallest_root(m, rng.gen_range(1..m.p()))?;
            let n = size as u64;
            match checker {
                CheckerId::ExpsumDouble => check_expsum_double(&spec, n, n),
                CheckerId::ExpsumSingle => check_expsum_single(&spec, n),
                CheckerId::FourthMoment => check_fourth_moment(&spec, n),
                _ => check_hole(&spec, n, params),
            }
        }
    }
}

/// Ratio statistics of one claim within one cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub checker: CheckerId,
    pub claim: String,
    pub p: u64,
    pub generator: String,
    pub size: usize,
    pub direction: Direction,
    pub count: usize,
    pub min_ratio: f64,
    pub median_ratio: f64,
    pub max_ratio: f64,
    /// The observed implied constant: smallest ratio of a lower bound,
    /// largest ratio of an upper bound.
    pub worst_ratio: Option<f64>,
    pub worst_seed: Option<u64>,
    pub exact_failures: usize,
    pub assertion_failures: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleOutput {
    pub results: Vec<CheckerResult>,
    pub summaries: Vec<Summary>,
}

impl EnsembleOutput {
    pub fn exact_failures(&self) -> usize {
        self.summaries.iter().map(|s| s.exact_failures).sum()
    }

    pub fn assertion_failures(&self) -> usize {
        self.summaries.iter().map(|s| s.assertion_failures).sum()
    }
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

fn summarize(rows: &[CheckerResult], spec: &EnsembleSpec) -> Vec<Summary> {
    let mut order: Vec<(u64, String, usize, String)> = Vec::new();
    let mut groups: HashMap<(u64, String, usize, String), Vec<&CheckerResult>> = HashMap::new();
    for r in rows {
        let key = (r.p, r.generator.clone().unwrap_or_default(), r.params_size(), r.claim.clone());
        groups
            .entry(key.clone())
            .or_insert_with(|| {
                order.push(key);
                Vec::new()
            })
            .push(r);
    }
    order
        .into_iter()
        .map(|key| {
            let members = &groups[&key];
            let first = members[0];
            let mut ratios: Vec<f64> = members.iter().map(|r| r.ratio).collect();
            ratios.sort_by(f64::total_cmp);
            let pick = |better: fn(f64, f64) -> bool| {
                members
                    .iter()
                    .fold(None::<&CheckerResult>, |best, r| match best {
                        Some(b) if !better(r.ratio, b.ratio) => Some(b),
                        _ => Some(r),
                    })
                    .map(|r| (r.ratio, r.seed))
            };
            let worst = match first.direction {
                Direction::Lower => pick(|a, b| a < b),
                Direction::Upper => pick(|a, b| a > b),
                Direction::Exact | Direction::Report => None,
            };
            Summary {
                checker: first.checker,
                claim: key.3.clone(),
                p: key.0,
                generator: key.1.clone(),
                size: key.2,
                direction: first.direction,
                count: members.len(),
                min_ratio: ratios[0],
                median_ratio: median(&ratios),
                max_ratio: ratios[ratios.len() - 1],
                worst_ratio: worst.map(|w| w.0),
                worst_seed: worst.and_then(|w| w.1),
                exact_failures: members.iter().filter(|r| r.exact_failed()).count(),
                assertion_failures: members
                    .iter()
                    .filter(|r| !r.within(spec.assert_lower, spec.assert_upper))
                    .count(),
            }
        })
        .collect()
}

impl CheckerResult {
    /// The requested cell size, recorded by the ensemble runner.
    fn params_size(&self) -> usize {
        self.params
            .get("cell_size")
            .and_then(|s| s.parse().ok())
            .unwrap_or_else(|| self.sizes.first().copied().unwrap_or(0))
    }
}

/// Runs every cell and trial; the output is a pure function of `(spec, checker)`.
pub fn run_ensemble(spec: &EnsembleSpec, checker: CheckerId) -> Result<EnsembleOutput> {
    spec.validate(checker)?;
    let jobs: Vec<(usize, FieldModulus, GeneratorKind, usize, usize)> = spec
        .cells()
        .into_iter()
        .enumerate()
        .flat_map(|(cell, (m, g, s))| (0..spec.trials).map(move |t| (cell, m, g, s, t)))
        .collect();
    let per_trial: Vec<Vec<CheckerResult>> = jobs
        .par_iter()
        .map(|&(cell, m, kind, size, trial)| {
            let seed = trial_seed(spec.seed, cell, trial);
            let rows = run_trial(checker, m, kind, size, &spec.params, seed)?;
            Ok(rows
                .into_iter()
                .map(|mut r| {
                    r.generator = Some(kind.name().to_string());
                    r.seed = Some(seed);
                    r.params.insert("cell_size".into(), size.to_string());
                    r
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let results: Vec<CheckerResult> = per_trial.into_iter().flatten().collect();
    let summaries = summarize(&results, spec);
    Ok(EnsembleOutput { results, summaries })
}

fn join<T: ToString>(items: impl IntoIterator<Item = T>, sep: &str) -> String {
    items.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(sep)
}

/// One row per result; one 0/1 column per flag seen in any row.
pub fn write_results_csv<W: Write>(rows: &[CheckerResult], out: W) -> Result<()> {
    let flags: BTreeSet<&str> = rows.iter().flat_map(|r| r.flags.keys().map(String::as_str)).collect();
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![
        "checker_id", "claim", "p", "generator", "sizes", "seed", "params", "lhs", "rhs", "rhs_alt", "ratio", "direction",
        "exact_ok",
    ];
    header.extend(flags.iter().copied());
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![
            r.checker.name().to_string(),
            r.claim.clone(),
            r.p.to_string(),
            r.generator.clone().unwrap_or_default(),
            join(&r.sizes, ";"),
            r.seed.map(|s| s.to_string()).unwrap_or_default(),
            join(r.params.iter().map(|(k, v)| format!("{k}={v}")), ";"),
            r.lhs.to_string(),
            format_real(r.rhs),
            r.rhs_alt.map(format_real).unwrap_or_default(),
            format_real(r.ratio),
            r.direction.to_string(),
            r.exact_ok.map(|b| (b as u8).to_string()).unwrap_or_default(),
        ];
        rec.extend(flags.iter().map(|f| r.flags.get(*f).map(|&b| (b as u8).to_string()).unwrap_or_default()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summaries_jsonl<W: Write>(summaries: &[Summary], mut out: W) -> Result<()> {
    for s in summaries {
        let line = serde_json::to_string(s).map_err(|e| Error::Io(e.to_string()))?;
        writeln!(out, "{line}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::Quantity;

    fn f(p: u64) -> FieldModulus {
        FieldModulus::new(p).unwrap()
    }

    fn csv_of(out: &EnsembleOutput) -> String {
        let mut buf = Vec::new();
        write_results_csv(&out.results, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn single_trial_matches_direct_call() {
        let spec = EnsembleSpec::new(vec![f(2003)], vec![GeneratorKind::Random], vec![20], 1, 42);
        let out = run_ensemble(&spec, CheckerId::Sumprod).unwrap();
        let seed = trial_seed(42, 0, 0);
        let a = generate(GeneratorKind::Random, f(2003), 20, false, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let direct = check_sumprod(&a).unwrap();
        assert_eq!(out.results.len(), direct.len());
        for (e, d) in out.results.iter().zip(&direct) {
            assert_eq!((e.lhs, e.rhs, e.ratio, &e.flags), (d.lhs, d.rhs, d.ratio, &d.flags));
            assert_eq!(e.seed, Some(seed));
        }
    }

    #[test]
    fn reruns_are_identical() {
        let spec = EnsembleSpec::new(
            vec![f(101), f(1009)],
            vec![GeneratorKind::Random, GeneratorKind::GeometricProgression],
            vec![5, 9],
            4,
            7,
        );
        let a = run_ensemble(&spec, CheckerId::KatzKoester).unwrap();
        let b = run_ensemble(&spec, CheckerId::KatzKoester).unwrap();
        assert_eq!(csv_of(&a), csv_of(&b));
        assert_eq!(a.summaries, b.summaries);
        assert_eq!(a.exact_failures(), 0);
        assert_eq!(a.results.len(), 2 * 2 * 2 * 4 * 3);
    }

    #[test]
    fn thread_count_does_not_matter() {
        let spec = EnsembleSpec::new(vec![f(1009)], vec![GeneratorKind::Random], vec![12], 16, 3);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let many = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| run_ensemble(&spec, CheckerId::EnergyConnection)).unwrap();
        let b = many.install(|| run_ensemble(&spec, CheckerId::EnergyConnection)).unwrap();
        assert_eq!(csv_of(&a), csv_of(&b));
    }

    #[test]
    fn katz_koester_hundred_trials() {
        let spec = EnsembleSpec::new(vec![f(101)], vec![GeneratorKind::Random], vec![10], 100, 11);
        let out = run_ensemble(&spec, CheckerId::KatzKoester).unwrap();
        let main: Vec<_> = out.results.iter().filter(|r| r.claim == "katz_koester").collect();
        assert_eq!(main.len(), 100);
        assert!(main.iter().all(|r| r.exact_ok == Some(true)));
        assert_eq!(out.exact_failures(), 0);
    }

    #[test]
    fn multiplicative_checkers_avoid_zero() {
        let spec = EnsembleSpec::new(
            vec![f(101)],
            vec![GeneratorKind::Random, GeneratorKind::ArithmeticProgression],
            vec![30, 100],
            5,
            1,
        );
        let out = run_ensemble(&spec, CheckerId::CriticalCorollary).unwrap();
        assert_eq!(out.exact_failures(), 0);
    }

    #[test]
    fn incompatible_pairing_is_rejected() {
        let spec = EnsembleSpec::new(vec![f(1009)], vec![GeneratorKind::Random], vec![10], 1, 0);
        assert!(matches!(run_ensemble(&spec, CheckerId::ExpsumDouble), Err(Error::Incompatible { .. })));
        let spec = EnsembleSpec::new(vec![f(1009)], vec![GeneratorKind::GeometricProgression], vec![10], 3, 0);
        let out = run_ensemble(&spec, CheckerId::Hole).unwrap();
        assert_eq!(out.results.len(), 3);
    }

    #[test]
    fn summaries_and_assertions() {
        let mut spec = EnsembleSpec::new(vec![f(2003)], vec![GeneratorKind::ArithmeticProgression], vec![20], 3, 5);
        let out = run_ensemble(&spec, CheckerId::Sumprod).unwrap();
        let s = out.summaries.iter().find(|s| s.claim == "max_sum_prod").unwrap();
        assert_eq!(s.count, 3);
        assert_eq!(s.worst_ratio, Some(s.min_ratio));
        assert!(s.min_ratio <= s.median_ratio && s.median_ratio <= s.max_ratio);
        assert_eq!(out.assertion_failures(), 0);
        spec.assert_lower = Some(1e9);
        let out = run_ensemble(&spec, CheckerId::Sumprod).unwrap();
        assert!(out.assertion_failures() > 0);
        assert_eq!(out.exact_failures(), 0);
        let mut buf = Vec::new();
        write_summaries_jsonl(&out.summaries, &mut buf).unwrap();
        let first: serde_json::Value = serde_json::from_str(String::from_utf8(buf).unwrap().lines().next().unwrap()).unwrap();
        assert_eq!(first["checker"], "sumprod");
    }

    #[test]
    fn csv_layout() {
        let spec = EnsembleSpec::new(vec![f(1009)], vec![GeneratorKind::Subgroup], vec![12], 1, 0);
        let out = run_ensemble(&spec, CheckerId::SubgroupEnergy).unwrap();
        let text = csv_of(&out);
        let header = text.lines().next().unwrap();
        assert!(header.starts_with("checker_id,claim,p,generator,sizes,seed,params,lhs,rhs,rhs_alt,ratio"));
        assert!(header.ends_with("gamma2_q_le_p2,mass_le_p2"));
        assert!(out.results.iter().all(|r| matches!(r.lhs, Quantity::Int(_))));
    }
}
