//! Fee schedule and the primitive gas cost functions every strategy model
//! is built from.
//!
//! All arithmetic is integer. Costs are in gas units.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Gas units.
pub type Gas = u64;

/// Width of one calldata / storage word in bytes.
pub const WORD_BYTES: u64 = 32;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScheduleError {
    #[error("set-byte count {0} is outside 0..=32")]
    WordBytesOutOfRange(u64),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("schedule invariant violated: {0}")]
    Invariant(String),
}

/// An EVM-style fee schedule.
///
/// Defaults are the constants the airdrop measurements were taken under
/// (Byzantium/Constantinople era pricing, 2018 mean block gas limit).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GasSchedule {
    /// Intrinsic cost of one transaction.
    pub g_tx: Gas,
    /// Message call into a different contract.
    pub g_call_external: Gas,
    /// Call within the same contract.
    pub g_call_internal: Gas,
    /// Write to a previously-zero storage slot.
    pub g_sstore_new: Gas,
    /// Write to a nonzero storage slot.
    pub g_sstore_update: Gas,
    /// Refund for zeroing a nonzero slot.
    pub r_sstore_clear: Gas,
    pub g_calldata_zero: Gas,
    pub g_calldata_nonzero: Gas,
    pub g_log_base: Gas,
    pub g_log_topic: Gas,
    pub g_log_data: Gas,
    pub g_keccak_base: Gas,
    pub g_keccak_word: Gas,
    pub block_gas_limit: Gas,
    pub block_time_s: u64,
}

impl Default for GasSchedule {
    fn default() -> Self {
        Self {
            g_tx: 21_000,
            g_call_external: 700,
            g_call_internal: 10,
            g_sstore_new: 20_000,
            g_sstore_update: 5_000,
            r_sstore_clear: 15_000,
            g_calldata_zero: 4,
            g_calldata_nonzero: 68,
            g_log_base: 375,
            g_log_topic: 375,
            g_log_data: 8,
            g_keccak_base: 30,
            g_keccak_word: 6,
            block_gas_limit: 7_997_671,
            block_time_s: 15,
        }
    }
}

macro_rules! schedule_fields {
    ($m:ident) => {
        $m!(
            g_tx,
            g_call_external,
            g_call_internal,
            g_sstore_new,
            g_sstore_update,
            r_sstore_clear,
            g_calldata_zero,
            g_calldata_nonzero,
            g_log_base,
            g_log_topic,
            g_log_data,
            g_keccak_base,
            g_keccak_word,
            block_gas_limit,
            block_time_s
        )
    };
}

impl GasSchedule {
    /// Field names accepted by the override file, in declaration order.
    pub const KEYS: &'static [&'static str] = {
        macro_rules! names {
            ($($f:ident),*) => { &[$(stringify!($f)),*] };
        }
        schedule_fields!(names)
    };

    fn field_mut(&mut self, key: &str) -> Option<&mut u64> {
        macro_rules! lookup {
            ($($f:ident),*) => {
                match key {
                    $(stringify!($f) => Some(&mut self.$f),)*
                    _ => None,
                }
            };
        }
        schedule_fields!(lookup)
    }

    fn values(&self) -> Vec<(&'static str, u64)> {
        macro_rules! pairs {
            ($($f:ident),*) => { vec![$((stringify!($f), self.$f)),*] };
        }
        schedule_fields!(pairs)
    }

    pub fn validate(&self) -> Result<(), ScheduleError> {
        if let Some((key, _)) = self.values().into_iter().find(|(_, v)| *v == 0) {
            return Err(ScheduleError::Invariant(format!("{key} must be positive")));
        }
        if self.g_calldata_nonzero <= self.g_calldata_zero {
            return Err(ScheduleError::Invariant(
                "g_calldata_nonzero must exceed g_calldata_zero".into(),
            ));
        }
        if self.g_sstore_new <= self.g_sstore_update {
            return Err(ScheduleError::Invariant(
                "g_sstore_new must exceed g_sstore_update".into(),
            ));
        }
        if self.r_sstore_clear >= self.g_sstore_new {
            return Err(ScheduleError::Invariant(
                "r_sstore_clear must be below g_sstore_new".into(),
            ));
        }
        Ok(())
    }

    /// Applies a `key=value` override document on top of `self`.
    ///
    /// Blank lines and `#` comments are ignored. Unknown keys, repeated keys
    /// and non-integer values are rejected with their line number.
    pub fn with_overrides(mut self, doc: &str) -> Result<Self, ScheduleError> {
        let mut seen = Vec::new();
        for (idx, raw) in doc.lines().enumerate() {
            let line = idx + 1;
            let text = raw.split('#').next().unwrap_or("").trim();
            if text.is_empty() {
                continue;
            }
            let (key, value) = text.split_once('=').ok_or_else(|| ScheduleError::Parse {
                line,
                message: format!("expected key=value, got {text:?}"),
            })?;
            let key = key.trim();
            let value: u64 = value.trim().parse().map_err(|_| ScheduleError::Parse {
                line,
                message: format!("value for {key} is not a non-negative integer"),
            })?;
            if seen.contains(&key.to_string()) {
                return Err(ScheduleError::Parse {
                    line,
                    message: format!("duplicate key {key}"),
                });
            }
            let slot = self.field_mut(key).ok_or_else(|| ScheduleError::Parse {
                line,
                message: format!("unknown key {key}"),
            })?;
            *slot = value;
            seen.push(key.to_string());
        }
        self.validate()?;
        Ok(self)
    }

    /// Gas for one 32-byte calldata word with `set_bytes` nonzero bytes.
    pub fn input_word_cost(&self, set_bytes: u64) -> Result<Gas, ScheduleError> {
        if set_bytes > WORD_BYTES {
            return Err(ScheduleError::WordBytesOutOfRange(set_bytes));
        }
        Ok(self.g_calldata_nonzero * set_bytes + self.g_calldata_zero * (WORD_BYTES - set_bytes))
    }

    /// Byte-exact calldata pricing.
    pub fn calldata_cost(&self, payload: &[u8]) -> Gas {
        payload
            .iter()
            .map(|&b| if b == 0 { self.g_calldata_zero } else { self.g_calldata_nonzero })
            .sum()
    }

    /// Calldata cost from byte counts, for payloads described by layout only.
    pub fn calldata_cost_counts(&self, total_bytes: u64, nonzero_bytes: u64) -> Gas {
        debug_assert!(nonzero_bytes <= total_bytes);
        nonzero_bytes * self.g_calldata_nonzero + (total_bytes - nonzero_bytes) * self.g_calldata_zero
    }

    pub fn log_cost(&self, topics: u64, data_bytes: u64) -> Gas {
        self.g_log_base + topics * self.g_log_topic + data_bytes * self.g_log_data
    }

    pub fn keccak_cost(&self, data_bytes: u64) -> Gas {
        self.g_keccak_base + data_bytes.div_ceil(WORD_BYTES) * self.g_keccak_word
    }

    /// Storage write pricing: returns `(gas, refund)`.
    pub fn sstore_cost(&self, prior_zero: bool, new_zero: bool) -> (Gas, Gas) {
        match (prior_zero, new_zero) {
            (true, false) => (self.g_sstore_new, 0),
            (false, true) => (self.g_sstore_update, self.r_sstore_clear),
            _ => (self.g_sstore_update, 0),
        }
    }

    /// Refund actually granted to a transaction: capped at half its
    /// pre-refund gas.
    pub fn capped_refund(pre_refund_gas: Gas, refund: Gas) -> Gas {
        refund.min(pre_refund_gas / 2)
    }

    /// ERC-20 `Transfer`/`Approval` event: three topics, one data word.
    pub fn transfer_log_cost(&self) -> Gas {
        self.log_cost(3, WORD_BYTES)
    }
}

impl fmt::Display for GasSchedule {
    /// Renders the schedule in override-file form.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (key, value) in self.values() {
            writeln!(f, "{key}={value}")?;
        }
        Ok(())
    }
}

impl FromStr for GasSchedule {
    type Err = ScheduleError;

    /// Parses an override document on top of the defaults.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        GasSchedule::default().with_overrides(s)
    }
}
