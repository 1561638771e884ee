//! Plain-text experiment configuration with INI-like sections.
//!
//! ```text
//! [field]
//! p = 2003
//! [generator]
//! kinds = random, arithmetic_progression
//! [sizes]
//! values = 20, 40, 60
//! [trials]
//! count = 10
//! [seed]
//! value = 20140721
//! [checkers]
//! list = sumprod
//! [assert]
//! lower = 0.01
//! [output]
//! dir = out
//! ```
//!
//! Keys may also appear before any section as `p`, `generator`, `sizes`,
//! `trials`, `seed`, `checkers` and `out`. Unknown sections and keys are errors.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::field::FieldModulus;
use crate::harness::{CheckerId, CheckerParams, EnsembleSpec, GeneratorKind};

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub moduli: Vec<FieldModulus>,
    pub generators: Vec<GeneratorKind>,
    pub sizes: Vec<usize>,
    pub trials: usize,
    pub seed: Option<u64>,
    pub checkers: Vec<CheckerId>,
    pub params: CheckerParams,
    pub assert_lower: Option<f64>,
    pub assert_upper: Option<f64>,
    pub output_dir: Option<PathBuf>,
    pub summary_file: String,
}

/// Canonical `(section, key)` for a raw key.
fn resolve(section: Option<&str>, key: &str) -> Option<(&'static str, &'static str)> {
    let pair = match (section, key) {
        (None, "p") | (Some("field"), "p") => ("field", "p"),
        (None, "generator") | (Some("generator"), "kinds") | (Some("generator"), "kind") => ("generator", "kinds"),
        (None, "sizes") | (Some("sizes"), "values") => ("sizes", "values"),
        (None, "trials") | (Some("trials"), "count") => ("trials", "count"),
        (None, "seed") | (Some("seed"), "value") => ("seed", "value"),
        (None, "checkers") | (Some("checkers"), "list") => ("checkers", "list"),
        (None, "out") | (Some("output"), "dir") => ("output", "dir"),
        (Some("output"), "summary") => ("output", "summary"),
        (Some("assert"), "lower") => ("assert", "lower"),
        (Some("assert"), "upper") => ("assert", "upper"),
        (Some("params"), k) => (
            "params",
            match k {
                "k" => "k",
                "eps" => "eps",
                "aux_a" => "aux_a",
                "t2_c" => "t2_c",
                "gamma_order" => "gamma_order",
                "hole_c" => "hole_c",
                "hole_nu" => "hole_nu",
                "t1_budget" => "t1_budget",
                _ => return None,
            },
        ),
        _ => return None,
    };
    Some(pair)
}

const SECTIONS: [&str; 9] = ["field", "generator", "sizes", "trials", "seed", "checkers", "params", "assert", "output"];

fn list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn number<T: FromStr>(line: usize, key: &str, raw: &str) -> Result<T> {
    raw.trim().parse().map_err(|_| Error::Parse {
        line,
        msg: format!("invalid value `{raw}` for `{key}`"),
    })
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut moduli = None;
        let mut generators = None;
        let mut sizes = None;
        let mut trials = None;
        let mut seed = None;
        let mut checkers = None;
        let mut params = CheckerParams::default();
        let mut assert_lower = None;
        let mut assert_upper = None;
        let mut output_dir = None;
        let mut summary_file = "summary.jsonl".to_string();

        let mut section: Option<String> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let s = raw.trim();
            if s.is_empty() || s.starts_with('#') || s.starts_with(';') {
                continue;
            }
            if let Some(name) = s.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
                let name = name.trim().to_ascii_lowercase();
                if !SECTIONS.contains(&name.as_str()) {
                    return Err(Error::Config(format!("line {line}: unknown section `[{name}]`")));
                }
                section = Some(name);
                continue;
            }
            let (key, value) = s.split_once('=').ok_or_else(|| Error::Parse {
                line,
                msg: format!("expected `key = value`, got `{s}`"),
            })?;
            let key = key.trim().to_ascii_lowercase();
            let value = value.trim();
            let (sec, k) = resolve(section.as_deref(), &key).ok_or_else(|| {
                let place = section.as_deref().map_or("top level".to_string(), |s| format!("section [{s}]"));
                Error::Config(format!("line {line}: unknown key `{key}` in {place}"))
            })?;
            match (sec, k) {
                ("field", _) => moduli = Some(list(value).map(|v| FieldModulus::new(number(line, "p", v)?)).collect::<Result<Vec<_>>>()?),
                ("generator", _) => generators = Some(list(value).map(GeneratorKind::from_str).collect::<Result<Vec<_>>>()?),
                ("sizes", _) => sizes = Some(list(value).map(|v| number(line, "sizes", v)).collect::<Result<Vec<usize>>>()?),
                ("trials", _) => trials = Some(number::<usize>(line, "trials", value)?),
                ("seed", _) => seed = Some(number::<u64>(line, "seed", value)?),
                ("checkers", _) => checkers = Some(list(value).map(CheckerId::from_str).collect::<Result<Vec<_>>>()?),
                ("output", "dir") => output_dir = Some(PathBuf::from(value)),
                ("output", _) => summary_file = value.to_string(),
                ("assert", "lower") => assert_lower = Some(number(line, "lower", value)?),
                ("assert", _) => assert_upper = Some(number(line, "upper", value)?),
                ("params", name) => match name {
                    "k" => params.k = number(line, name, value)?,
                    "eps" => params.eps = number(line, name, value)?,
                    "aux_a" => params.aux_a = number(line, name, value)?,
                    "t2_c" => params.t2_c = number(line, name, value)?,
                    "gamma_order" => params.gamma_order = Some(number(line, name, value)?),
                    "hole_c" => params.hole_c = number(line, name, value)?,
                    "hole_nu" => params.hole_nu = number(line, name, value)?,
                    _ => params.t1_budget = number(line, name, value)?,
                },
                _ => unreachable!("resolve returns known sections"),
            }
        }

        let missing = |what: &str| Error::Config(format!("missing required key `{what}`"));
        let generators: Vec<GeneratorKind> = generators.ok_or_else(|| missing("generator"))?;
        let checkers: Vec<CheckerId> = checkers.ok_or_else(|| missing("checkers"))?;
        let randomized = generators.iter().any(|g| g.randomized()) || checkers.iter().any(|c| c.exponential());
        if randomized && seed.is_none() {
            return Err(Error::Config("a seed is required for randomized generators".into()));
        }
        let cfg = ExperimentConfig {
            moduli: moduli.ok_or_else(|| missing("p"))?,
            generators,
            sizes: sizes.ok_or_else(|| missing("sizes"))?,
            trials: trials.ok_or_else(|| missing("trials"))?,
            seed,
            checkers,
            params,
            assert_lower,
            assert_upper,
            output_dir,
            summary_file,
        };
        for &c in &cfg.checkers {
            cfg.ensemble_spec().validate(c)?;
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn ensemble_spec(&self) -> EnsembleSpec {
        EnsembleSpec {
            moduli: self.moduli.clone(),
            generators: self.generators.clone(),
            sizes: self.sizes.clone(),
            trials: self.trials,
            seed: self.seed.unwrap_or(0),
            params: self.params.clone(),
            assert_lower: self.assert_lower,
            assert_upper: self.assert_upper,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PINNED: &str = "\
# sum-product sweep
[field]
p = 2003
[generator]
kinds = random, arithmetic_progression, geometric_progression, subgroup
[sizes]
values = 20, 40, 60
[trials]
count = 10
[seed]
value = 20140721
[checkers]
list = check_sumprod
[output]
dir = out
";

    #[test]
    fn parses_sections() {
        let cfg = ExperimentConfig::parse(PINNED).unwrap();
        assert_eq!(cfg.moduli[0].p(), 2003);
        assert_eq!(cfg.generators.len(), 4);
        assert_eq!(cfg.sizes, vec![20, 40, 60]);
        assert_eq!(cfg.trials, 10);
        assert_eq!(cfg.seed, Some(20140721));
        assert_eq!(cfg.checkers, vec![CheckerId::Sumprod]);
        assert_eq!(cfg.output_dir, Some(PathBuf::from("out")));
    }

    #[test]
    fn parses_top_level_shorthand() {
        let cfg = ExperimentConfig::parse(
            "p = 101, 1009\ngenerator = ap\nsizes = 5\ntrials = 3\nseed = 1\ncheckers = katz_koester, t2\n[params]\nk = 2\n[assert]\nupper = 10\n",
        )
        .unwrap();
        assert_eq!(cfg.moduli.len(), 2);
        assert_eq!(cfg.params.k, 2);
        assert_eq!(cfg.assert_upper, Some(10.0));
    }

    #[test]
    fn unknown_key_is_named() {
        let text = PINNED.replace("count = 10", "count = 10\n[trials]\ntrails = 4");
        let err = ExperimentConfig::parse(&text).unwrap_err().to_string();
        assert!(err.contains("`trails`"), "{err}");
        let err = ExperimentConfig::parse("trails = 3\n").unwrap_err().to_string();
        assert!(err.contains("`trails`"), "{err}");
        assert!(ExperimentConfig::parse("[fields]\np = 7\n").is_err());
    }

    #[test]
    fn seed_required_for_random_generators() {
        let text = PINNED.replace("value = 20140721", "");
        let text = text.replace("[seed]\n", "");
        assert!(ExperimentConfig::parse(&text).unwrap_err().to_string().contains("seed"));
        let ok = "p = 1009\ngenerator = subgroup\nsizes = 12\ntrials = 1\ncheckers = subgroup_energy\n";
        assert_eq!(ExperimentConfig::parse(ok).unwrap().seed, None);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(ExperimentConfig::parse("p = 12\n").is_err());
        assert!(ExperimentConfig::parse("p = x\n").is_err());
        let bad = "p = 101\ngenerator = random\nsizes = 5\ntrials = 1\nseed = 1\ncheckers = expsum_double\n";
        assert!(matches!(ExperimentConfig::parse(bad), Err(Error::Incompatible { .. })));
        assert!(ExperimentConfig::parse("p = 101\ngenerator = random\nsizes = 5\ntrials = 1\nseed = 1\n").is_err());
    }
}
