//! Numerical evaluation of both sides of the sum-product, incidence, energy
//! and exponential-sum inequalities on concrete sets.
//!
//! Every checker returns rows of [`CheckerResult`]. Bounds with suppressed
//! constants are only reported as ratios `lhs / rhs`; constant-free statements
//! (set inclusions, Cauchy–Schwarz, exact identities) carry `exact_ok`.

mod checkers;
mod ensemble;
mod generators;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

pub use checkers::*;
pub use ensemble::{run_ensemble, trial_seed, write_results_csv, write_summaries_jsonl, EnsembleOutput, EnsembleSpec, Summary};
pub use generators::{generate, GeneratorKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum CheckerId {
    #[serde(rename = "t1")]
    T1,
    #[serde(rename = "t2")]
    T2,
    #[serde(rename = "energy_t4")]
    EnergyT4,
    #[serde(rename = "sumprod")]
    Sumprod,
    #[serde(rename = "aux")]
    Aux,
    #[serde(rename = "3a")]
    ThreeA,
    #[serde(rename = "4a")]
    FourA,
    #[serde(rename = "a_times_sums")]
    ATimesSums,
    #[serde(rename = "a_times_general")]
    ATimesGeneral,
    #[serde(rename = "katz_koester")]
    KatzKoester,
    #[serde(rename = "energy_connection")]
    EnergyConnection,
    #[serde(rename = "critical_corollary")]
    CriticalCorollary,
    #[serde(rename = "subgroup_energy")]
    SubgroupEnergy,
    #[serde(rename = "expsum_double")]
    ExpsumDouble,
    #[serde(rename = "expsum_single")]
    ExpsumSingle,
    #[serde(rename = "fourth_moment")]
    FourthMoment,
    #[serde(rename = "hole")]
    Hole,
}

impl CheckerId {
    pub const ALL: [CheckerId; 17] = [
        CheckerId::T1,
        CheckerId::T2,
        CheckerId::EnergyT4,
        CheckerId::Sumprod,
        CheckerId::Aux,
        CheckerId::ThreeA,
        CheckerId::FourA,
        CheckerId::ATimesSums,
        CheckerId::ATimesGeneral,
        CheckerId::KatzKoester,
        CheckerId::EnergyConnection,
        CheckerId::CriticalCorollary,
        CheckerId::SubgroupEnergy,
        CheckerId::ExpsumDouble,
        CheckerId::ExpsumSingle,
        CheckerId::FourthMoment,
        CheckerId::Hole,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CheckerId::T1 => "t1",
            CheckerId::T2 => "t2",
            CheckerId::EnergyT4 => "energy_t4",
            CheckerId::Sumprod => "sumprod",
            CheckerId::Aux => "aux",
            CheckerId::ThreeA => "3a",
            CheckerId::FourA => "4a",
            CheckerId::ATimesSums => "a_times_sums",
            CheckerId::ATimesGeneral => "a_times_general",
            CheckerId::KatzKoester => "katz_koester",
            CheckerId::EnergyConnection => "energy_connection",
            CheckerId::CriticalCorollary => "critical_corollary",
            CheckerId::SubgroupEnergy => "subgroup_energy",
            CheckerId::ExpsumDouble => "expsum_double",
            CheckerId::ExpsumSingle => "expsum_single",
            CheckerId::FourthMoment => "fourth_moment",
            CheckerId::Hole => "hole",
        }
    }

    /// Checkers whose inputs must avoid 0.
    pub fn multiplicative(self) -> bool {
        matches!(
            self,
            CheckerId::EnergyConnection | CheckerId::CriticalCorollary | CheckerId::SubgroupEnergy
        )
    }

    /// Checkers driven by powers of a primitive root rather than by a set.
    pub fn exponential(self) -> bool {
        matches!(
            self,
            CheckerId::ExpsumDouble | CheckerId::ExpsumSingle | CheckerId::FourthMoment | CheckerId::Hole
        )
    }
}

impl fmt::Display for CheckerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CheckerId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        let key = key.strip_prefix("check_").unwrap_or(&key);
        CheckerId::ALL
            .into_iter()
            .find(|c| c.name() == key)
            .ok_or_else(|| Error::Config(format!("unknown checker `{s}`")))
    }
}

/// A left-hand side: exact when it fits, otherwise a real approximation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Quantity {
    Int(u128),
    Real(f64),
}

impl Quantity {
    pub fn as_f64(self) -> f64 {
        match self {
            Quantity::Int(v) => v as f64,
            Quantity::Real(v) => v,
        }
    }

    pub fn as_int(self) -> Option<u128> {
        match self {
            Quantity::Int(v) => Some(v),
            Quantity::Real(_) => None,
        }
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Quantity::Int(v) => write!(f, "{v}"),
            Quantity::Real(v) => f.write_str(&crate::numeric::format_real(*v)),
        }
    }
}

impl From<u128> for Quantity {
    fn from(v: u128) -> Self {
        Quantity::Int(v)
    }
}

impl From<usize> for Quantity {
    fn from(v: usize) -> Self {
        Quantity::Int(v as u128)
    }
}

impl From<f64> for Quantity {
    fn from(v: f64) -> Self {
        Quantity::Real(v)
    }
}

/// How `lhs` relates to `rhs` in the claim.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `lhs ≫ rhs`: the implied constant is the smallest ratio.
    Lower,
    /// `lhs ≪ rhs`: the implied constant is the largest ratio.
    Upper,
    /// Constant-free statement, decided by `exact_ok`.
    Exact,
    /// Observable without a bound to test.
    Report,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Lower => "lower",
            Direction::Upper => "upper",
            Direction::Exact => "exact",
            Direction::Report => "report",
        })
    }
}

/// One evaluated claim instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckerResult {
    pub checker: CheckerId,
    pub claim: String,
    pub p: u64,
    pub generator: Option<String>,
    pub sizes: Vec<usize>,
    pub params: BTreeMap<String, String>,
    pub lhs: Quantity,
    pub rhs: f64,
    pub rhs_alt: Option<f64>,
    pub ratio: f64,
    pub direction: Direction,
    pub exact_ok: Option<bool>,
    pub flags: BTreeMap<String, bool>,
    pub seed: Option<u64>,
}

impl CheckerResult {
    pub(crate) fn new(
        checker: CheckerId,
        claim: &str,
        p: u64,
        sizes: Vec<usize>,
        lhs: Quantity,
        rhs: f64,
        direction: Direction,
    ) -> Self {
        CheckerResult {
            checker,
            claim: claim.to_string(),
            p,
            generator: None,
            sizes,
            params: BTreeMap::new(),
            lhs,
            rhs,
            rhs_alt: None,
            ratio: ratio(lhs.as_f64(), rhs),
            direction,
            exact_ok: None,
            flags: BTreeMap::new(),
            seed: None,
        }
    }

    pub(crate) fn flag(mut self, name: &str, value: bool) -> Self {
        self.flags.insert(name.to_string(), value);
        self
    }

    pub(crate) fn param(mut self, name: &str, value: impl fmt::Display) -> Self {
        self.params.insert(name.to_string(), value.to_string());
        self
    }

    pub(crate) fn alt(mut self, rhs_alt: f64) -> Self {
        self.rhs_alt = Some(rhs_alt);
        self
    }

    pub(crate) fn exact(mut self, ok: bool) -> Self {
        self.exact_ok = Some(ok);
        self
    }

    /// True when a constant-free statement was violated.
    pub fn exact_failed(&self) -> bool {
        self.exact_ok == Some(false)
    }

    /// Checks the ratio against user-chosen implied constants.
    pub fn within(&self, lower: Option<f64>, upper: Option<f64>) -> bool {
        match self.direction {
            Direction::Lower => lower.map_or(true, |c| self.ratio >= c),
            Direction::Upper => upper.map_or(true, |c| self.ratio <= c),
            Direction::Exact | Direction::Report => true,
        }
    }
}

fn ratio(lhs: f64, rhs: f64) -> f64 {
    if rhs == 0.0 {
        if lhs == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        lhs / rhs
    }
}

/// Tunables shared by the checkers; each has the default used in sweeps.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckerParams {
    /// Moment order for the energy connections.
    pub k: u32,
    /// Sign in `A + εA`.
    pub eps: i8,
    /// Dilation factor in `aA ± AA`.
    pub aux_a: u64,
    /// Threshold constant in `|A||B||C| <= c p²`.
    pub t2_c: f64,
    /// Order of Γ; defaults to the largest divisor of `p - 1` not above the set size.
    pub gamma_order: Option<u64>,
    pub hole_c: f64,
    pub hole_nu: u32,
    /// Largest plane count for which collinearity is computed.
    pub t1_budget: usize,
}

impl Default for CheckerParams {
    fn default() -> Self {
        CheckerParams {
            k: 1,
            eps: 1,
            aux_a: 1,
            t2_c: 1.0,
            gamma_order: None,
            hole_c: 0.5,
            hole_nu: 6,
            t1_budget: 20_000,
        }
    }
}
