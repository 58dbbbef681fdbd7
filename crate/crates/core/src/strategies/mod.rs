//! Closed-form gas models for airdrop strategies.
//!
//! A strategy is identified by a `|`-separated label such as
//! `INTERNAL_BATCH|PUSH|UNIFORM|100`. Each label maps to a
//! [`StrategyDescriptor`]; the descriptor together with a
//! [`GasSchedule`](crate::gas_model::GasSchedule) determines the cost.

mod abi;
mod calibration;
mod cost;
mod feasibility;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::gas_model::{Gas, ScheduleError};

pub use abi::{abi_payload_bytes, claim_payload_bytes, payload_bytes, transfer_from_payload_bytes};
pub use calibration::{calibrate, calibrate_targets, parse_targets, CalibrationTable};
pub use cost::{
    apply_discount, baseline_cost, batch_plan, distributor_cost, recipient_cost,
    recipient_breakdown, savings_external, savings_internal, scenario_cost, BatchCost,
    CostBreakdown, CostItem,
};
pub use feasibility::{blocks_needed, feasibility, FeasibilityReport, FillGrade};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StrategyError {
    #[error("recipient count must be at least 1")]
    NoRecipients,
    #[error("batch size must be at least 1")]
    ZeroBatchSize,
    #[error("invalid descriptor: {0}")]
    Descriptor(String),
    #[error("cannot parse strategy label {label:?}: {reason}")]
    Label { label: String, reason: String },
    #[error("discount is undefined for {0}")]
    DiscountUndefined(String),
    #[error("cost breakdown is already discounted")]
    AlreadyDiscounted,
    #[error("discount requires a cost computed for fresh holders")]
    NotFreshHolders,
    #[error(
        "calibration target {target} for {label} is below the structural cost {structural} \
         ({itemization})"
    )]
    TargetBelowStructural {
        label: String,
        target: Gas,
        structural: Gas,
        itemization: String,
    },
    #[error("no calibration entry for {0}")]
    MissingCalibration(String),
    #[error("fill grade must lie in (0, 1], got {0}")]
    FillGrade(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
}

pub type Result<T, E = StrategyError> = std::result::Result<T, E>;

/// Gas in fixed-point hundredths, used for calibrated per-recipient
/// residuals and per-recipient averages.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CentiGas(pub i64);

impl CentiGas {
    pub const ZERO: CentiGas = CentiGas(0);

    pub fn from_gas(gas: Gas) -> Self {
        CentiGas(gas as i64 * 100)
    }

    /// `count` copies rounded half-up to whole gas.
    pub fn times(self, count: u64) -> i64 {
        round_div(self.0 as i128 * count as i128, 100) as i64
    }

    /// Nearest hundredth of `num / den` gas.
    pub fn from_ratio(num: i128, den: i128) -> Self {
        CentiGas(round_div(num * 100, den) as i64)
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64 / 100.0
    }
}

/// Integer division rounding half away from zero.
pub(crate) fn round_div(num: i128, den: i128) -> i128 {
    debug_assert!(den > 0);
    if num >= 0 {
        (num + den / 2) / den
    } else {
        -((-num + den / 2) / den)
    }
}

impl fmt::Display for CentiGas {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        write!(f, "{sign}{}.{:02}", abs / 100, abs % 100)
    }
}

impl FromStr for CentiGas {
    type Err = String;

    /// Accepts integers and decimals with at most two fractional digits.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let s = s.trim();
        let (neg, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s),
        };
        let (int, frac) = body.split_once('.').unwrap_or((body, ""));
        let digits_ok = |t: &str| t.bytes().all(|b| b.is_ascii_digit());
        if int.is_empty() || !digits_ok(int) || !digits_ok(frac) || frac.len() > 2 {
            return Err(format!("{s:?} is not a gas amount with at most two decimals"));
        }
        let int: i64 = int.parse().map_err(|_| format!("{s:?} is out of range"))?;
        let frac: i64 = format!("{frac:0<2}").parse().unwrap_or(0);
        let v = int
            .checked_mul(100)
            .and_then(|v| v.checked_add(frac))
            .ok_or_else(|| format!("{s:?} is out of range"))?;
        Ok(CentiGas(if neg { -v } else { v }))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Family {
    NaivePush,
    ExternalBatchPush,
    InternalBatchPush,
    InternalBatchPull,
    PooledMerkle,
    Baseline,
}

impl Family {
    pub fn is_pull(self) -> bool {
        matches!(self, Family::InternalBatchPull | Family::PooledMerkle)
    }

    pub fn is_push(self) -> bool {
        !self.is_pull()
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::NaivePush => "NAIVE|PUSH",
            Family::ExternalBatchPush => "EXTERNAL_BATCH|PUSH",
            Family::InternalBatchPush => "INTERNAL_BATCH|PUSH",
            Family::InternalBatchPull => "INTERNAL_BATCH|PULL",
            Family::PooledMerkle => "POOLED_PAYMENT|PULL",
            Family::Baseline => "BASE_LINE|INTERNAL_BATCH|PUSH|UNIFORM",
        })
    }
}

/// Which party's transactions a descriptor prices.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    #[default]
    Distributor,
    /// Every recipient sends its own claim transaction.
    Recipient,
}

pub const DEFAULT_AMOUNT_BYTES: u8 = 2;

/// One airdrop technique variant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct StrategyDescriptor {
    pub family: Family,
    pub side: Side,
    pub batch_size: u64,
    pub uniform: bool,
    pub zero_reset: bool,
    pub amount_bytes: u8,
    /// Calibrated execution residual per recipient.
    pub overhead_per_recipient: CentiGas,
}

impl StrategyDescriptor {
    fn base(family: Family, batch_size: u64, uniform: bool) -> Self {
        Self {
            family,
            side: Side::Distributor,
            batch_size,
            uniform,
            zero_reset: false,
            amount_bytes: DEFAULT_AMOUNT_BYTES,
            overhead_per_recipient: CentiGas::ZERO,
        }
    }

    pub fn naive() -> Self {
        Self::base(Family::NaivePush, 1, false)
    }

    pub fn external_push(batch_size: u64, uniform: bool) -> Self {
        Self::base(Family::ExternalBatchPush, batch_size, uniform)
    }

    pub fn internal_push(batch_size: u64, uniform: bool) -> Self {
        Self::base(Family::InternalBatchPush, batch_size, uniform)
    }

    pub fn internal_pull(batch_size: u64, uniform: bool) -> Self {
        Self::base(Family::InternalBatchPull, batch_size, uniform)
    }

    /// Recipient-side cost of a pull airdrop (`PULL|RECIPIENT_COST`).
    pub fn pull_recipient() -> Self {
        Self {
            side: Side::Recipient,
            ..Self::base(Family::InternalBatchPull, 1, false)
        }
    }

    pub fn pooled() -> Self {
        Self::base(Family::PooledMerkle, 1, true)
    }

    pub fn pooled_recipient() -> Self {
        Self {
            side: Side::Recipient,
            ..Self::pooled()
        }
    }

    pub fn baseline(batch_size: u64) -> Self {
        Self::base(Family::Baseline, batch_size, true)
    }

    pub fn with_zero_reset(mut self, on: bool) -> Self {
        self.zero_reset = on;
        self
    }

    pub fn with_amount_bytes(mut self, bytes: u8) -> Self {
        self.amount_bytes = bytes;
        self
    }

    pub fn with_overhead(mut self, overhead: CentiGas) -> Self {
        self.overhead_per_recipient = overhead;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(StrategyError::ZeroBatchSize);
        }
        if !(1..=32).contains(&self.amount_bytes) {
            return Err(StrategyError::Descriptor(format!(
                "amount_bytes {} outside 1..=32",
                self.amount_bytes
            )));
        }
        if self.overhead_per_recipient.0 < 0 {
            return Err(StrategyError::Descriptor(
                "overhead_per_recipient must be non-negative".into(),
            ));
        }
        if self.zero_reset && self.family != Family::InternalBatchPull {
            return Err(StrategyError::Descriptor(format!(
                "zero-reset only applies to INTERNAL_BATCH|PULL, not {}",
                self.family
            )));
        }
        if self.side == Side::Recipient && !self.family.is_pull() {
            return Err(StrategyError::Descriptor(format!(
                "{} has no recipient-side cost",
                self.family
            )));
        }
        if self.side == Side::Recipient && self.batch_size != 1 {
            return Err(StrategyError::Descriptor(
                "recipient-side costs use batch size 1".into(),
            ));
        }
        let single_tx = matches!(self.family, Family::NaivePush | Family::PooledMerkle);
        if single_tx && self.batch_size != 1 {
            return Err(StrategyError::Descriptor(format!(
                "{} does not batch; batch size must be 1",
                self.family
            )));
        }
        Ok(())
    }

    /// Canonical label; identical for descriptors that differ only in
    /// calibrated overhead.
    pub fn label(&self) -> String {
        self.to_string()
    }

    /// Descriptor with calibration data stripped, used as a lookup key.
    pub fn structural(&self) -> Self {
        self.with_overhead(CentiGas::ZERO)
    }
}

/// Labels of every strategy shape the parser accepts, for usage messages.
pub const LABEL_FORMS: &[&str] = &[
    "NAIVE|PUSH",
    "EXTERNAL_BATCH|PUSH[|UNIFORM]|<bs>",
    "INTERNAL_BATCH|PUSH[|UNIFORM]|<bs>",
    "INTERNAL_BATCH|PULL[|UNIFORM][|ZERO_RESET]|<bs>",
    "PULL|RECIPIENT_COST",
    "POOLED_PAYMENT|PULL",
    "POOLED_PAYMENT|PULL|RECIPIENT_COST",
    "BASE_LINE|INTERNAL_BATCH|PUSH|UNIFORM|<bs>",
    "any of the above followed by |AMOUNT_BYTES=<1..32>",
];

impl fmt::Display for StrategyDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.family, self.side) {
            (Family::InternalBatchPull, Side::Recipient) => f.write_str("PULL|RECIPIENT_COST")?,
            (Family::PooledMerkle, Side::Recipient) => {
                f.write_str("POOLED_PAYMENT|PULL|RECIPIENT_COST")?
            }
            (Family::NaivePush | Family::PooledMerkle, _) => write!(f, "{}", self.family)?,
            (Family::Baseline, _) => write!(f, "{}|{}", self.family, self.batch_size)?,
            (family, _) => {
                write!(f, "{family}")?;
                if self.uniform {
                    f.write_str("|UNIFORM")?;
                }
                if self.zero_reset {
                    f.write_str("|ZERO_RESET")?;
                }
                write!(f, "|{}", self.batch_size)?;
            }
        }
        if self.amount_bytes != DEFAULT_AMOUNT_BYTES {
            write!(f, "|AMOUNT_BYTES={}", self.amount_bytes)?;
        }
        Ok(())
    }
}

impl FromStr for StrategyDescriptor {
    type Err = StrategyError;

    fn from_str(label: &str) -> Result<Self> {
        let fail = |reason: &str| StrategyError::Label {
            label: label.to_string(),
            reason: reason.to_string(),
        };
        let mut tokens: Vec<&str> = label.trim().split('|').collect();

        let mut amount_bytes = DEFAULT_AMOUNT_BYTES;
        if let Some(last) = tokens.last() {
            if let Some(v) = last.strip_prefix("AMOUNT_BYTES=") {
                amount_bytes = v
                    .parse()
                    .ok()
                    .filter(|b| (1..=32).contains(b) && *b != DEFAULT_AMOUNT_BYTES)
                    .ok_or_else(|| fail("AMOUNT_BYTES must be 1..=32 and not the default"))?;
                tokens.pop();
            }
        }

        let parse_bs = |tok: Option<&&str>| -> Result<u64> {
            let tok = tok.ok_or_else(|| fail("missing batch size"))?;
            if tok.is_empty() || !tok.bytes().all(|b| b.is_ascii_digit()) || tok.starts_with('0')
            {
                return Err(fail("batch size must be a positive integer"));
            }
            tok.parse().map_err(|_| fail("batch size out of range"))
        };

        let desc = match tokens.as_slice() {
            ["NAIVE", "PUSH"] => StrategyDescriptor::naive(),
            ["PULL", "RECIPIENT_COST"] => StrategyDescriptor::pull_recipient(),
            ["POOLED_PAYMENT", "PULL"] => StrategyDescriptor::pooled(),
            ["POOLED_PAYMENT", "PULL", "RECIPIENT_COST"] => StrategyDescriptor::pooled_recipient(),
            ["BASE_LINE", "INTERNAL_BATCH", "PUSH", "UNIFORM", bs] => {
                StrategyDescriptor::baseline(parse_bs(Some(bs))?)
            }
            [batching, direction, rest @ ..] => {
                let family = match (*batching, *direction) {
                    ("EXTERNAL_BATCH", "PUSH") => Family::ExternalBatchPush,
                    ("INTERNAL_BATCH", "PUSH") => Family::InternalBatchPush,
                    ("INTERNAL_BATCH", "PULL") => Family::InternalBatchPull,
                    _ => return Err(fail("unknown strategy family")),
                };
                let (bs, flags) = rest.split_last().ok_or_else(|| fail("missing batch size"))?;
                let (uniform, zero_reset) = match flags {
                    [] => (false, false),
                    ["UNIFORM"] => (true, false),
                    ["ZERO_RESET"] => (false, true),
                    ["UNIFORM", "ZERO_RESET"] => (true, true),
                    _ => return Err(fail("unexpected flags")),
                };
                if zero_reset && family != Family::InternalBatchPull {
                    return Err(fail("ZERO_RESET applies to pull strategies only"));
                }
                StrategyDescriptor {
                    uniform,
                    zero_reset,
                    ..StrategyDescriptor::base(family, parse_bs(Some(bs))?, uniform)
                }
            }
            _ => return Err(fail("unknown strategy family")),
        };
        let desc = desc.with_amount_bytes(amount_bytes);
        desc.validate().map_err(|e| fail(&e.to_string()))?;
        Ok(desc)
    }
}
