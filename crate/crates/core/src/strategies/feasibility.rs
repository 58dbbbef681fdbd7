use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use super::cost::distributor_cost;
use super::{Result, StrategyDescriptor, StrategyError};
use crate::gas_model::{Gas, GasSchedule};

/// Fraction of the block gas limit one transaction may use, in per-mille.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FillGrade(u16);

impl FillGrade {
    pub const TEN: FillGrade = FillGrade(100);
    pub const QUARTER: FillGrade = FillGrade(250);
    pub const HALF: FillGrade = FillGrade(500);
    pub const THREE_QUARTERS: FillGrade = FillGrade(750);
    pub const FULL: FillGrade = FillGrade(1000);

    /// Grades the feasibility report is evaluated at.
    pub const STANDARD: [FillGrade; 5] = [
        Self::TEN,
        Self::QUARTER,
        Self::HALF,
        Self::THREE_QUARTERS,
        Self::FULL,
    ];

    pub fn from_per_mille(per_mille: u16) -> Result<Self> {
        if per_mille == 0 || per_mille > 1000 {
            return Err(StrategyError::FillGrade(format!("{per_mille}/1000")));
        }
        Ok(FillGrade(per_mille))
    }

    pub fn per_mille(self) -> u16 {
        self.0
    }

    /// Whether a transaction of `gas` fits into this share of a block.
    pub fn admits(self, gas: Gas, schedule: &GasSchedule) -> bool {
        gas as u128 * 1000 <= self.0 as u128 * schedule.block_gas_limit as u128
    }
}

impl fmt::Display for FillGrade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 % 10 == 0 {
            write!(f, "{}.{:02}", self.0 / 1000, (self.0 % 1000) / 10)
        } else {
            write!(f, "{}.{:03}", self.0 / 1000, self.0 % 1000)
        }
    }
}

impl FromStr for FillGrade {
    type Err = StrategyError;

    /// Decimal fraction with up to three places, e.g. `0.5` or `0.25`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || StrategyError::FillGrade(s.to_string());
        let (int, frac) = s.trim().split_once('.').unwrap_or((s.trim(), ""));
        let digits = |t: &str| t.bytes().all(|b| b.is_ascii_digit());
        if int.is_empty() || int.len() > 1 || !digits(int) || !digits(frac) || frac.len() > 3 {
            return Err(bad());
        }
        let frac: u16 = if frac.is_empty() {
            0
        } else {
            format!("{frac:0<3}").parse().map_err(|_| bad())?
        };
        let per_mille = int.parse::<u16>().map_err(|_| bad())? * 1000 + frac;
        FillGrade::from_per_mille(per_mille).map_err(|_| bad())
    }
}

/// Which block fill grades a strategy's largest transaction fits into.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeasibilityReport {
    pub max_batch_gas: Gas,
    pub feasible_at: BTreeSet<FillGrade>,
    pub infeasible: bool,
}

impl FeasibilityReport {
    pub fn from_peak(max_batch_gas: Gas, schedule: &GasSchedule) -> Self {
        let feasible_at: BTreeSet<FillGrade> = FillGrade::STANDARD
            .into_iter()
            .filter(|g| g.admits(max_batch_gas, schedule))
            .collect();
        FeasibilityReport {
            max_batch_gas,
            infeasible: feasible_at.is_empty(),
            feasible_at,
        }
    }

    /// Smallest grade the strategy is feasible at.
    pub fn minimal_grade(&self) -> Option<FillGrade> {
        self.feasible_at.iter().next().copied()
    }

    pub fn is_feasible_at(&self, grade: FillGrade) -> bool {
        self.minimal_grade().is_some_and(|g| g <= grade)
    }
}

impl fmt::Display for FeasibilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.infeasible {
            return f.write_str("none");
        }
        let grades: Vec<String> = self.feasible_at.iter().map(|g| g.to_string()).collect();
        f.write_str(&grades.join(" "))
    }
}

/// Feasibility of the largest single transaction at the standard grades.
pub fn feasibility(
    d: &StrategyDescriptor,
    n: u64,
    schedule: &GasSchedule,
) -> Result<FeasibilityReport> {
    let cost = distributor_cost(d, n, schedule, true)?;
    Ok(FeasibilityReport::from_peak(cost.peak_tx_gas, schedule))
}

/// Blocks needed to carry `total_gas` when each block may be filled to
/// `fill`: `ceil(total / (fill * block_gas_limit))`.
pub fn blocks_needed(total_gas: Gas, fill: FillGrade, schedule: &GasSchedule) -> u64 {
    let capacity = fill.0 as u128 * schedule.block_gas_limit as u128;
    (total_gas as u128 * 1000).div_ceil(capacity) as u64
}
