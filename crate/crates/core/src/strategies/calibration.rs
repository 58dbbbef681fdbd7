//! Fitting the per-recipient execution residual against measured totals.
//!
//! The component model prices intrinsic gas, calldata, storage, calls,
//! logs and hashing. Whatever a measured total contains beyond that is
//! attributed to a per-recipient residual, stored in hundredths of gas.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use super::cost::{distributor_cost, scenario_cost};
use super::{CentiGas, Family, Result, Side, StrategyDescriptor, StrategyError};
use crate::gas_model::{Gas, GasSchedule};

/// Residual that makes `d` cost `target_total` at `n` recipients.
pub fn calibrate(
    d: &StrategyDescriptor,
    target_total: Gas,
    n: u64,
    schedule: &GasSchedule,
) -> Result<CentiGas> {
    if d.family == Family::Baseline {
        return Ok(CentiGas::ZERO);
    }
    let bare = d.structural();
    let structural = distributor_cost(&bare, n, schedule, true)?;
    let structural_gas = structural.total_gas();
    if target_total < structural_gas {
        return Err(StrategyError::TargetBelowStructural {
            label: bare.label(),
            target: target_total,
            structural: structural_gas,
            itemization: structural.to_string(),
        });
    }
    // gas added per whole unit of residual; n, 2n for zero-reset, 1 for a pooled root
    let per_unit = scenario_cost(&bare.with_overhead(CentiGas(100)), n, schedule)? - structural_gas;
    Ok(CentiGas::from_ratio(
        (target_total - structural_gas) as i128,
        per_unit.max(1) as i128,
    ))
}

/// Calibrates every non-baseline target; baselines need no residual.
pub fn calibrate_targets(
    targets: &[(StrategyDescriptor, Gas)],
    n: u64,
    schedule: &GasSchedule,
) -> Result<CalibrationTable> {
    let mut table = CalibrationTable::default();
    for (d, target) in targets {
        if d.family == Family::Baseline {
            continue;
        }
        table.insert(d, calibrate(d, *target, n, schedule)?);
    }
    Ok(table)
}

/// Reads a `label,gas` table with one header line.
pub fn parse_targets(doc: &str) -> Result<Vec<(StrategyDescriptor, Gas)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(doc.as_bytes());
    let headers = reader.headers().map_err(|e| StrategyError::Parse {
        line: 1,
        message: e.to_string(),
    })?;
    if headers.len() != 2 || &headers[0] != "label" || &headers[1] != "gas" {
        return Err(StrategyError::Parse {
            line: 1,
            message: "expected header `label,gas`".into(),
        });
    }
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| StrategyError::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let fail = |message: String| StrategyError::Parse { line, message };
        if record.len() != 2 {
            return Err(fail("expected two fields".into()));
        }
        let d: StrategyDescriptor = record[0].parse().map_err(|e: StrategyError| fail(e.to_string()))?;
        let gas: Gas = record[1]
            .parse()
            .map_err(|_| fail(format!("gas {:?} is not an integer", &record[1])))?;
        out.push((d, gas));
    }
    Ok(out)
}

/// Calibrated residuals keyed by canonical strategy label.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CalibrationTable {
    entries: BTreeMap<String, (StrategyDescriptor, CentiGas)>,
}

impl CalibrationTable {
    /// Residuals fitted to the reference measurements at 1000 recipients.
    pub fn builtin() -> Self {
        include_str!("../../fixtures/calibration.txt")
            .parse()
            .expect("bundled calibration table parses")
    }

    pub fn insert(&mut self, d: &StrategyDescriptor, overhead: CentiGas) {
        let key = d.structural();
        self.entries.insert(key.label(), (key, overhead));
    }

    pub fn get(&self, label: &str) -> Option<CentiGas> {
        self.entries.get(label).map(|(_, eps)| *eps)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, CentiGas)> {
        self.entries.iter().map(|(k, (_, eps))| (k.as_str(), *eps))
    }

    /// Residual for `d`.
    ///
    /// Exact label first. Otherwise the entry of the same family, side and
    /// amount style with the nearest batch size (ties to the smaller),
    /// ignoring zero-reset and amount width. Pooled claims fall back to the
    /// pull recipient residual; a pooled root has no residual unless one
    /// was calibrated. Baselines never carry one.
    pub fn lookup(&self, d: &StrategyDescriptor) -> Result<CentiGas> {
        let key = d.structural();
        if key.family == Family::Baseline {
            return Ok(CentiGas::ZERO);
        }
        if let Some(eps) = self.get(&key.label()) {
            return Ok(eps);
        }
        match (key.family, key.side) {
            (Family::PooledMerkle, Side::Distributor) => return Ok(CentiGas::ZERO),
            (Family::PooledMerkle, Side::Recipient) => {
                return self.lookup(&StrategyDescriptor::pull_recipient());
            }
            _ => {}
        }
        self.entries
            .values()
            .filter(|(e, _)| e.family == key.family && e.side == key.side && e.uniform == key.uniform)
            .min_by_key(|(e, _)| (e.batch_size.abs_diff(key.batch_size), e.batch_size))
            .map(|(_, eps)| *eps)
            .ok_or_else(|| StrategyError::MissingCalibration(key.label()))
    }

    /// `d` with its calibrated residual filled in.
    pub fn resolve(&self, d: &StrategyDescriptor) -> Result<StrategyDescriptor> {
        Ok(d.with_overhead(self.lookup(d)?))
    }
}

impl fmt::Display for CalibrationTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# per-recipient execution residual in gas")?;
        for (label, eps) in self.iter() {
            writeln!(f, "{label}={eps}")?;
        }
        Ok(())
    }
}

impl FromStr for CalibrationTable {
    type Err = StrategyError;

    /// `label=residual` lines; `#` starts a comment.
    fn from_str(doc: &str) -> Result<Self> {
        let mut table = CalibrationTable::default();
        for (idx, raw) in doc.lines().enumerate() {
            let line = idx + 1;
            let fail = |message: String| StrategyError::Parse { line, message };
            let text = raw.split('#').next().unwrap_or("").trim();
            if text.is_empty() {
                continue;
            }
            let (label, value) = text
                .rsplit_once('=')
                .ok_or_else(|| fail(format!("expected label=value, got {text:?}")))?;
            let d: StrategyDescriptor = label
                .trim()
                .parse()
                .map_err(|e: StrategyError| fail(e.to_string()))?;
            let eps: CentiGas = value.parse().map_err(fail)?;
            if eps.0 < 0 {
                return Err(fail("residual must be non-negative".into()));
            }
            if table.get(&d.label()).is_some() {
                return Err(fail(format!("duplicate entry for {d}")));
            }
            table.insert(&d, eps);
        }
        Ok(table)
    }
}
