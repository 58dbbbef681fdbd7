//! Gas to USD conversion over daily price series.
//!
//! All arithmetic is in 96-bit decimal fixed point; USD figures are
//! reported to four decimal places.

use std::str::FromStr;

use chrono::NaiveDate;
use rust_decimal::{Decimal, RoundingStrategy};
use thiserror::Error;

use crate::gas_model::{Gas, GasSchedule};
use crate::strategies::{distributor_cost, StrategyDescriptor, StrategyError};

/// Reference gas prices in gwei (low, median, high).
pub const LOW_GAS_PRICE_GWEI: Decimal = Decimal::from_parts(58, 0, 0, false, 2);
pub const MEDIAN_GAS_PRICE_GWEI: Decimal = Decimal::from_parts(105, 0, 0, false, 1);
pub const HIGH_GAS_PRICE_GWEI: Decimal = Decimal::from_parts(235, 0, 0, false, 0);

pub const DEFAULT_WINDOW: usize = 60;

const GWEI: Decimal = Decimal::from_parts(1, 0, 0, false, 9);
const HEADER: &str = "date,gas_price_gwei,eth_usd";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FiatError {
    #[error("{0} must be positive")]
    NonPositive(&'static str),
    #[error("line {line}: date {date} does not follow the previous date")]
    NotIncreasing { line: usize, date: NaiveDate },
    #[error("series too short: {len} points for a window of {window}")]
    TooShort { len: usize, window: usize },
    #[error("window must be at least 1")]
    ZeroWindow,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Strategy(#[from] StrategyError),
}

pub type Result<T, E = FiatError> = std::result::Result<T, E>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PricePoint {
    pub date: NaiveDate,
    pub gas_price_gwei: Decimal,
    pub eth_usd: Decimal,
}

impl PricePoint {
    pub fn new(date: NaiveDate, gas_price_gwei: Decimal, eth_usd: Decimal) -> Result<Self> {
        if gas_price_gwei <= Decimal::ZERO {
            return Err(FiatError::NonPositive("gas price"));
        }
        if eth_usd <= Decimal::ZERO {
            return Err(FiatError::NonPositive("ETH price"));
        }
        Ok(PricePoint {
            date,
            gas_price_gwei,
            eth_usd,
        })
    }

    /// USD per unit of gas: `gwei * 1e-9 * usd_per_eth`.
    pub fn usd_per_gas(&self) -> Decimal {
        self.gas_price_gwei * GWEI * self.eth_usd
    }
}

pub fn usd_per_gas(p: &PricePoint) -> Decimal {
    p.usd_per_gas()
}

/// USD per gas for a gas price and ETH price without a date attached.
pub fn rate_from_prices(gas_price_gwei: Decimal, eth_usd: Decimal) -> Result<Decimal> {
    Ok(PricePoint::new(NaiveDate::default(), gas_price_gwei, eth_usd)?.usd_per_gas())
}

/// ETH price at which `gas_price_gwei` costs `usd_per_gas`; sweeping the
/// gas price traces a line of equal USD cost per gas.
pub fn iso_cost_eth_usd(usd_per_gas: Decimal, gas_price_gwei: Decimal) -> Result<Decimal> {
    if usd_per_gas <= Decimal::ZERO {
        return Err(FiatError::NonPositive("USD per gas"));
    }
    if gas_price_gwei <= Decimal::ZERO {
        return Err(FiatError::NonPositive("gas price"));
    }
    Ok(usd_per_gas / (gas_price_gwei * GWEI))
}

pub fn round_usd(v: Decimal) -> Decimal {
    v.round_dp_with_strategy(4, RoundingStrategy::MidpointAwayFromZero)
}

pub fn gas_usd(gas: Gas, usd_per_gas: Decimal) -> Result<Decimal> {
    if usd_per_gas <= Decimal::ZERO {
        return Err(FiatError::NonPositive("USD per gas"));
    }
    Ok(Decimal::from(gas) * usd_per_gas)
}

/// Cost per recipient of airdropping to `n` recipients with a calibrated
/// descriptor, at a fixed USD-per-gas rate.
pub fn per_recipient_usd_at_rate(
    d: &StrategyDescriptor,
    n: u64,
    usd_per_gas: Decimal,
    schedule: &GasSchedule,
) -> Result<Decimal> {
    if usd_per_gas <= Decimal::ZERO {
        return Err(FiatError::NonPositive("USD per gas"));
    }
    let total = distributor_cost(d, n, schedule, true)?.total_gas();
    Ok(Decimal::from(total) * usd_per_gas / Decimal::from(n))
}

pub fn per_recipient_usd(
    d: &StrategyDescriptor,
    n: u64,
    p: &PricePoint,
    schedule: &GasSchedule,
) -> Result<Decimal> {
    per_recipient_usd_at_rate(d, n, p.usd_per_gas(), schedule)
}

/// Daily prices with strictly increasing dates.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PriceSeries {
    points: Vec<PricePoint>,
}

impl PriceSeries {
    pub fn new(points: Vec<PricePoint>) -> Result<Self> {
        for (i, w) in points.windows(2).enumerate() {
            if w[1].date <= w[0].date {
                return Err(FiatError::NotIncreasing {
                    line: i + 2,
                    date: w[1].date,
                });
            }
        }
        Ok(PriceSeries { points })
    }

    pub fn points(&self) -> &[PricePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Mean of every full `window` of days, each price averaged on its own.
///
/// A centered average is dated at the window's middle day (the earlier of
/// the two middles for even windows); otherwise at its last day. Edges
/// without a full window are dropped.
pub fn moving_average(s: &PriceSeries, window: usize, centered: bool) -> Result<PriceSeries> {
    if window == 0 {
        return Err(FiatError::ZeroWindow);
    }
    if s.len() < window {
        return Err(FiatError::TooShort {
            len: s.len(),
            window,
        });
    }
    let w = Decimal::from(window as u64);
    let anchor = if centered { (window - 1) / 2 } else { window - 1 };
    let points = s
        .points
        .windows(window)
        .map(|win| {
            let gas: Decimal = win.iter().map(|p| p.gas_price_gwei).sum();
            let eth: Decimal = win.iter().map(|p| p.eth_usd).sum();
            PricePoint {
                date: win[anchor].date,
                gas_price_gwei: gas / w,
                eth_usd: eth / w,
            }
        })
        .collect();
    Ok(PriceSeries { points })
}

fn parse_decimal(text: &str) -> Option<Decimal> {
    let t = text.trim();
    if t.contains(['e', 'E']) {
        Decimal::from_scientific(t).ok()
    } else {
        Decimal::from_str(t).ok()
    }
}

/// Positive decimal, plain or in scientific notation (`3.0002e-6`).
pub fn parse_positive(text: &str, what: &'static str) -> Result<Decimal, String> {
    let v = parse_decimal(text).ok_or_else(|| format!("{what} {text:?} is not a number"))?;
    if v <= Decimal::ZERO {
        return Err(format!("{what} must be positive"));
    }
    Ok(v)
}

/// Reads `date,gas_price_gwei,eth_usd` lines after one header line.
pub fn load_prices(doc: &str) -> Result<PriceSeries> {
    let mut lines = doc.lines();
    match lines.next() {
        Some(h) if h.trim() == HEADER => {}
        _ => {
            return Err(FiatError::Parse {
                line: 1,
                message: format!("expected header `{HEADER}`"),
            })
        }
    }
    let mut points: Vec<PricePoint> = Vec::new();
    for (idx, raw) in lines.enumerate() {
        let line = idx + 2;
        let fail = |message: String| FiatError::Parse { line, message };
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split(',').collect();
        let [date, gwei, usd] = fields[..] else {
            return Err(fail(format!("expected 3 fields, got {}", fields.len())));
        };
        let date = NaiveDate::parse_from_str(date.trim(), "%Y-%m-%d")
            .map_err(|e| fail(format!("date {date:?}: {e}")))?;
        let gwei = parse_positive(gwei, "gas price").map_err(fail)?;
        let usd = parse_positive(usd, "ETH price").map_err(fail)?;
        if let Some(prev) = points.last() {
            if date <= prev.date {
                return Err(FiatError::NotIncreasing { line, date });
            }
        }
        points.push(PricePoint::new(date, gwei, usd).map_err(|e| fail(e.to_string()))?);
    }
    Ok(PriceSeries { points })
}

pub fn export_prices(s: &PriceSeries) -> String {
    let mut out = format!("{HEADER}\n");
    for p in &s.points {
        out.push_str(&format!(
            "{},{},{}\n",
            p.date.format("%Y-%m-%d"),
            p.gas_price_gwei,
            p.eth_usd
        ));
    }
    out
}
