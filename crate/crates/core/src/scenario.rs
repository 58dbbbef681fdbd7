//! The reference scenario set, recipient-count sweeps and their export.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rust_decimal::Decimal;
use thiserror::Error;

use crate::gas_model::{Gas, GasSchedule};
use crate::strategies::{
    apply_discount, blocks_needed, distributor_cost, recipient_breakdown, CalibrationTable,
    FeasibilityReport, Family, FillGrade, Side, StrategyDescriptor, StrategyError,
};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScenarioError {
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unknown export format {0:?} (expected plot-pairs or table)")]
    UnknownFormat(String),
    #[error("bad recipient range {0:?}: {1}")]
    Range(String, String),
    #[error("no recipient counts to sweep")]
    EmptySweep,
}

pub type Result<T, E = ScenarioError> = std::result::Result<T, E>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Role {
    Measured,
    UpperBound,
    LowerBound,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Scenario {
    pub label: String,
    pub descriptor: StrategyDescriptor,
    pub role: Role,
}

impl Scenario {
    pub fn new(descriptor: StrategyDescriptor) -> Self {
        let role = match descriptor.family {
            Family::NaivePush => Role::UpperBound,
            Family::Baseline => Role::LowerBound,
            _ => Role::Measured,
        };
        Scenario {
            label: descriptor.label(),
            descriptor,
            role,
        }
    }
}

const BATCH_SIZES: [u64; 4] = [100, 200, 300, 400];

/// The 35 reference scenarios: 26 measured strategies plus naive push
/// as the upper bound and eight baselines as lower bounds.
pub fn enumerate_paper_scenarios() -> Vec<Scenario> {
    let mut out = Vec::with_capacity(35);
    for uniform in [true, false] {
        for bs in BATCH_SIZES {
            out.push(StrategyDescriptor::external_push(bs, uniform));
        }
    }
    for uniform in [true, false] {
        for bs in BATCH_SIZES {
            out.push(StrategyDescriptor::internal_push(bs, uniform));
        }
    }
    for bs in BATCH_SIZES {
        out.push(StrategyDescriptor::internal_pull(bs, true));
    }
    out.push(StrategyDescriptor::internal_pull(1, true));
    for bs in BATCH_SIZES {
        out.push(StrategyDescriptor::internal_pull(bs, false));
    }
    out.push(StrategyDescriptor::pull_recipient());
    out.push(StrategyDescriptor::naive());
    for bs in (1..=8).map(|k| k * 100) {
        out.push(StrategyDescriptor::baseline(bs));
    }
    out.into_iter().map(Scenario::new).collect()
}

/// Inclusive `start:end:step` range of recipient counts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NRange {
    pub start: u64,
    pub end: u64,
    pub step: u64,
}

impl Default for NRange {
    fn default() -> Self {
        NRange {
            start: 100,
            end: 5000,
            step: 100,
        }
    }
}

impl NRange {
    /// Largest number of points a parsed range may expand to.
    pub const MAX_POINTS: u64 = 1_000_000;

    pub fn len(&self) -> u64 {
        (self.end - self.start) / self.step + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn values(&self) -> Vec<u64> {
        (self.start..=self.end).step_by(self.step as usize).collect()
    }
}

impl FromStr for NRange {
    type Err = ScenarioError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |m: &str| ScenarioError::Range(s.to_string(), m.to_string());
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, c] = parts[..] else {
            return Err(bad("expected start:end:step"));
        };
        let num = |t: &str| t.trim().parse::<u64>().map_err(|_| bad("not an integer"));
        let r = NRange {
            start: num(a)?,
            end: num(b)?,
            step: num(c)?,
        };
        if r.start == 0 {
            return Err(bad("start must be at least 1"));
        }
        if r.end < r.start {
            return Err(bad("end is below start"));
        }
        if r.step == 0 {
            return Err(bad("step must be positive"));
        }
        if r.len() > NRange::MAX_POINTS {
            return Err(bad("range has more than 1000000 points"));
        }
        Ok(r)
    }
}

impl fmt::Display for NRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.end, self.step)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SweepRow {
    pub label: String,
    pub n: u64,
    pub distributor_gas: Gas,
    /// All recipients' claim transactions; zero for push strategies.
    pub recipient_gas_total: Gas,
    pub total_gas: Gas,
    /// Set in discounted sweeps only.
    pub discounted_gas: Option<Gas>,
    pub blocks_at_half_fill: u64,
    pub feasible_at: BTreeSet<FillGrade>,
}

impl SweepRow {
    /// The figure plotted for this row: discounted gas when present,
    /// otherwise distributor gas, or recipient gas for recipient-side labels.
    pub fn plotted_gas(&self) -> Gas {
        match self.discounted_gas {
            Some(g) => g,
            None if self.distributor_gas > 0 => self.distributor_gas,
            None => self.recipient_gas_total,
        }
    }
}

/// Evaluates one scenario at `n` recipients. Distributor-side pull rows
/// also carry the recipients' claim gas.
pub fn evaluate(
    scenario: &Scenario,
    n: u64,
    discounted: bool,
    table: &CalibrationTable,
    schedule: &GasSchedule,
) -> Result<SweepRow> {
    let d = table.resolve(&scenario.descriptor)?;
    let mut cost = distributor_cost(&d, n, schedule, true)?;
    let distributor_gas = cost.distributor_gas;
    let mut recipient_gas_total = cost.recipient_gas_total;
    if d.family == Family::InternalBatchPull && d.side == Side::Distributor {
        let r = table.resolve(&StrategyDescriptor::pull_recipient().with_amount_bytes(d.amount_bytes))?;
        recipient_gas_total += recipient_breakdown(&r, n, schedule, true)?.recipient_gas_total;
    }
    let mut discounted_gas = None;
    if discounted {
        cost = apply_discount(&cost, schedule)?;
        discounted_gas = Some(cost.total_gas());
    }
    let mut row = SweepRow {
        label: scenario.label.clone(),
        n,
        distributor_gas,
        recipient_gas_total,
        total_gas: distributor_gas + recipient_gas_total,
        discounted_gas,
        blocks_at_half_fill: 0,
        feasible_at: FeasibilityReport::from_peak(cost.peak_tx_gas, schedule).feasible_at,
    };
    row.blocks_at_half_fill = blocks_needed(row.plotted_gas(), FillGrade::HALF, schedule);
    Ok(row)
}

/// One row per (scenario, n), sorted by label then n.
///
/// Discounted sweeps leave out pull strategies. With `fill`, only
/// scenarios whose largest transaction at the largest `n` fits that share
/// of a block are kept.
pub fn run_sweep(
    scenarios: &[Scenario],
    n_values: &[u64],
    discounted: bool,
    fill: Option<FillGrade>,
    table: &CalibrationTable,
    schedule: &GasSchedule,
) -> Result<Vec<SweepRow>> {
    let max_n = *n_values.iter().max().ok_or(ScenarioError::EmptySweep)?;
    let mut rows = Vec::new();
    for s in scenarios {
        if discounted && s.descriptor.family.is_pull() {
            continue;
        }
        if let Some(grade) = fill {
            let d = table.resolve(&s.descriptor)?;
            let peak = distributor_cost(&d, max_n, schedule, true)?.peak_tx_gas;
            if !grade.admits(peak, schedule) {
                continue;
            }
        }
        for &n in n_values {
            rows.push(evaluate(s, n, discounted, table, schedule)?);
        }
    }
    rows.sort_by(|a, b| (&a.label, a.n).cmp(&(&b.label, b.n)));
    Ok(rows)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExportFormat {
    /// `n gas` lines; `scaled` divides gas by 10^5.
    PlotPairs { scaled: bool },
    Table,
}

impl FromStr for ExportFormat {
    type Err = ScenarioError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plot-pairs" => Ok(ExportFormat::PlotPairs { scaled: true }),
            "plot-pairs-raw" => Ok(ExportFormat::PlotPairs { scaled: false }),
            "table" => Ok(ExportFormat::Table),
            other => Err(ScenarioError::UnknownFormat(other.to_string())),
        }
    }
}

const TABLE_HEADER: [&str; 8] = [
    "label",
    "n",
    "distributor_gas",
    "recipient_gas_total",
    "total_gas",
    "discounted_gas",
    "blocks_at_half_fill",
    "feasible_at",
];

/// Gas in units of 10^5 gas, trailing zeros dropped.
fn plot_units(gas: Gas) -> String {
    let (whole, frac) = (gas / 100_000, gas % 100_000);
    if frac == 0 {
        return whole.to_string();
    }
    let frac = format!("{frac:05}");
    format!("{whole}.{}", frac.trim_end_matches('0'))
}

fn grades_text(grades: &BTreeSet<FillGrade>) -> String {
    if grades.is_empty() {
        return "none".into();
    }
    grades.iter().map(|g| g.to_string()).collect::<Vec<_>>().join(" ")
}

pub fn export_rows(rows: &[SweepRow], format: ExportFormat) -> String {
    match format {
        ExportFormat::PlotPairs { scaled } => rows
            .iter()
            .map(|r| {
                let g = r.plotted_gas();
                let v = if scaled { plot_units(g) } else { g.to_string() };
                format!("{} {v}\n", r.n)
            })
            .collect(),
        ExportFormat::Table => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(TABLE_HEADER).expect("in-memory write");
            for r in rows {
                w.write_record([
                    r.label.clone(),
                    r.n.to_string(),
                    r.distributor_gas.to_string(),
                    r.recipient_gas_total.to_string(),
                    r.total_gas.to_string(),
                    r.discounted_gas.map(|g| g.to_string()).unwrap_or_default(),
                    r.blocks_at_half_fill.to_string(),
                    grades_text(&r.feasible_at),
                ])
                .expect("in-memory write");
            }
            String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
        }
    }
}

/// Reads back a table written by [`export_rows`].
pub fn parse_rows(doc: &str) -> Result<Vec<SweepRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(doc.as_bytes());
    let header_ok = reader
        .headers()
        .map(|h| h.iter().eq(TABLE_HEADER))
        .unwrap_or(false);
    if !header_ok {
        return Err(ScenarioError::Parse {
            line: 1,
            message: format!("expected header `{}`", TABLE_HEADER.join(",")),
        });
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| ScenarioError::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let fail = |message: String| ScenarioError::Parse { line, message };
        let int = |i: usize| {
            record[i]
                .parse::<u64>()
                .map_err(|_| fail(format!("{} {:?} is not an integer", TABLE_HEADER[i], &record[i])))
        };
        let label: StrategyDescriptor = record[0].parse().map_err(|e: StrategyError| fail(e.to_string()))?;
        let discounted_gas = if record[5].is_empty() { None } else { Some(int(5)?) };
        let feasible_at = if &record[7] == "none" {
            BTreeSet::new()
        } else {
            record[7]
                .split(' ')
                .map(|g| g.parse::<FillGrade>().map_err(|e| fail(e.to_string())))
                .collect::<Result<_>>()?
        };
        let row = SweepRow {
            label: label.label(),
            n: int(1)?,
            distributor_gas: int(2)?,
            recipient_gas_total: int(3)?,
            total_gas: int(4)?,
            discounted_gas,
            blocks_at_half_fill: int(6)?,
            feasible_at,
        };
        if row.label != record[0] {
            return Err(fail(format!("label {:?} is not in canonical form", &record[0])));
        }
        if row.distributor_gas.checked_add(row.recipient_gas_total) != Some(row.total_gas) {
            return Err(fail("total_gas is not distributor_gas + recipient_gas_total".into()));
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Number of 1000-recipient externally batched drops in the large
/// reference distribution.
pub const OMISEGO_DROPS: u64 = 450;
/// Block count and duration published for that distribution.
pub const OMISEGO_PUBLISHED_BLOCKS: u64 = 1440;
pub const OMISEGO_PUBLISHED_SECONDS: u64 = 6 * 3600;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OmiseGoEstimate {
    pub total_gas: Gas,
    pub usd: Decimal,
    pub blocks: u64,
    pub duration_secs: u64,
    pub published_blocks: u64,
    pub published_duration_secs: u64,
}

impl OmiseGoEstimate {
    pub fn blocks_disagree(&self) -> bool {
        self.blocks != self.published_blocks
    }
}

impl fmt::Display for OmiseGoEstimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "total_gas {}", self.total_gas)?;
        writeln!(f, "usd {}", self.usd.round_dp(4))?;
        writeln!(f, "blocks_at_half_fill {}", self.blocks)?;
        writeln!(f, "duration_secs {}", self.duration_secs)?;
        write!(
            f,
            "published_blocks {} published_duration_secs {}",
            self.published_blocks, self.published_duration_secs
        )?;
        if self.blocks_disagree() {
            write!(f, " (model and published block counts differ)")?;
        }
        Ok(())
    }
}

/// 450 non-uniform externally batched drops of 1000 recipients, batch 100.
pub fn omisego_estimate(
    schedule: &GasSchedule,
    table: &CalibrationTable,
    usd_per_gas: Decimal,
) -> Result<OmiseGoEstimate> {
    if usd_per_gas <= Decimal::ZERO {
        return Err(StrategyError::Descriptor("usd per gas must be positive".into()).into());
    }
    let d = table.resolve(&StrategyDescriptor::external_push(100, false))?;
    let total_gas = OMISEGO_DROPS * distributor_cost(&d, 1000, schedule, true)?.distributor_gas;
    let blocks = blocks_needed(total_gas, FillGrade::HALF, schedule);
    Ok(OmiseGoEstimate {
        total_gas,
        usd: Decimal::from(total_gas) * usd_per_gas,
        blocks,
        duration_secs: blocks * schedule.block_time_s,
        published_blocks: OMISEGO_PUBLISHED_BLOCKS,
        published_duration_secs: OMISEGO_PUBLISHED_SECONDS,
    })
}
