use std::fmt;

use super::abi::{claim_payload_bytes, payload_bytes, transfer_from_payload_bytes};
use super::{CentiGas, Family, Result, Side, StrategyDescriptor, StrategyError};
use crate::gas_model::{Gas, GasSchedule, WORD_BYTES};

/// `(label, gas)` line of a cost itemization; refunds are negative.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CostItem {
    pub label: &'static str,
    pub gas: i64,
}

/// Gas of one distributor batch. A zero-reset batch consists of two
/// transactions (zeroing, then setting); `peak_tx_gas` is the larger one
/// before refunds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BatchCost {
    pub size: u64,
    pub gas: Gas,
    pub refund: Gas,
    pub peak_tx_gas: Gas,
}

/// Itemized gas for one strategy at `n` recipients.
///
/// Distributor-side descriptors fill `distributor_gas`, `batches` and
/// `items`; recipient-side descriptors fill the `recipient_*` fields and
/// `items`, leaving `batches` empty. `items` always sums to
/// [`CostBreakdown::total_gas`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CostBreakdown {
    pub descriptor: StrategyDescriptor,
    pub n: u64,
    pub new_holders: bool,
    pub discounted: bool,
    pub distributor_gas: Gas,
    pub recipient_gas_each: CentiGas,
    pub recipient_gas_total: Gas,
    pub items: Vec<CostItem>,
    pub batches: Vec<BatchCost>,
    /// Largest single transaction, before refunds.
    pub peak_tx_gas: Gas,
}

impl CostBreakdown {
    pub fn total_gas(&self) -> Gas {
        self.distributor_gas + self.recipient_gas_total
    }

    pub fn item(&self, label: &str) -> i64 {
        self.items
            .iter()
            .filter(|i| i.label == label)
            .map(|i| i.gas)
            .sum()
    }
}

impl fmt::Display for CostBreakdown {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .items
            .iter()
            .filter(|i| i.gas != 0)
            .map(|i| format!("{}={}", i.label, i.gas))
            .collect();
        f.write_str(&parts.join(", "))
    }
}

/// Component sums for one transaction, or a total over many.
#[derive(Clone, Copy, Debug, Default)]
struct Tally {
    intrinsic: Gas,
    calldata: Gas,
    storage: Gas,
    calls: Gas,
    logs: Gas,
    hashing: Gas,
    overhead: Gas,
    refund: Gas,
}

impl Tally {
    fn pre_refund(&self) -> Gas {
        self.intrinsic + self.calldata + self.storage + self.calls + self.logs + self.hashing + self.overhead
    }

    fn granted_refund(&self) -> Gas {
        GasSchedule::capped_refund(self.pre_refund(), self.refund)
    }

    fn net(&self) -> Gas {
        self.pre_refund() - self.granted_refund()
    }

    fn store(&mut self, (gas, refund): (Gas, Gas), times: u64) {
        self.storage += gas * times;
        self.refund += refund * times;
    }

    /// Adds a settled transaction; refunds are taken after the cap.
    fn absorb(&mut self, tx: &Tally) {
        self.intrinsic += tx.intrinsic;
        self.calldata += tx.calldata;
        self.storage += tx.storage;
        self.calls += tx.calls;
        self.logs += tx.logs;
        self.hashing += tx.hashing;
        self.overhead += tx.overhead;
        self.refund += tx.granted_refund();
    }

    fn items(&self) -> Vec<CostItem> {
        [
            ("intrinsic", self.intrinsic as i64),
            ("calldata", self.calldata as i64),
            ("storage", self.storage as i64),
            ("calls", self.calls as i64),
            ("logs", self.logs as i64),
            ("hashing", self.hashing as i64),
            ("overhead", self.overhead as i64),
            ("refunds", -(self.refund as i64)),
        ]
        .into_iter()
        .map(|(label, gas)| CostItem { label, gas })
        .collect()
    }
}

fn require_recipients(n: u64) -> Result<()> {
    if n == 0 {
        Err(StrategyError::NoRecipients)
    } else {
        Ok(())
    }
}

/// Gas saved by external batching over naive transfers, ignoring payload.
pub fn savings_external(n: u64, schedule: &GasSchedule) -> Result<i64> {
    require_recipients(n)?;
    let n = n as i64;
    let (tx, call) = (schedule.g_tx as i64, schedule.g_call_external as i64);
    Ok(n * tx - (n * call + tx))
}

/// Gas saved by internal batching over naive transfers, ignoring payload.
pub fn savings_internal(n: u64, schedule: &GasSchedule) -> Result<i64> {
    require_recipients(n)?;
    let n = n as i64;
    let (tx, call) = (schedule.g_tx as i64, schedule.g_call_internal as i64);
    Ok(n * tx - (n * call + tx))
}

/// Splits `n` recipients into `ceil(n / batch_size)` batches, the last
/// possibly short.
pub fn batch_plan(n: u64, batch_size: u64) -> Result<Vec<u64>> {
    require_recipients(n)?;
    if batch_size == 0 {
        return Err(StrategyError::ZeroBatchSize);
    }
    let full = n / batch_size;
    let mut plan = vec![batch_size; full as usize];
    if n % batch_size != 0 {
        plan.push(n % batch_size);
    }
    Ok(plan)
}

/// Lower-bound cost: transaction overhead, recipient storage and calldata
/// only, with the uniform amount word counted once.
pub fn baseline_cost(n: u64, batch_size: u64, schedule: &GasSchedule) -> Result<Gas> {
    require_recipients(n)?;
    if batch_size == 0 {
        return Err(StrategyError::ZeroBatchSize);
    }
    let txs = n.div_ceil(batch_size) * schedule.g_tx;
    let stores = n * schedule.g_sstore_new;
    let input = n * schedule.input_word_cost(20)? + schedule.input_word_cost(2)?;
    Ok(txs + stores + input)
}

/// Overhead for each batch such that the running total is always the
/// rounded product, so batch overheads sum to `eps.times(n)` exactly.
fn overhead_shares(eps: CentiGas, plan: &[u64]) -> Vec<Gas> {
    let mut done = 0u64;
    plan.iter()
        .map(|&k| {
            let share = eps.times(done + k) - eps.times(done);
            done += k;
            share as Gas
        })
        .collect()
}

fn recipient_store(schedule: &GasSchedule, new_holders: bool) -> (Gas, Gas) {
    schedule.sstore_cost(new_holders, false)
}

fn batch_call_cost(family: Family, schedule: &GasSchedule) -> Gas {
    match family {
        Family::ExternalBatchPush => schedule.g_call_external,
        Family::InternalBatchPush | Family::InternalBatchPull => schedule.g_call_internal,
        _ => 0,
    }
}

struct Ledger {
    total: Tally,
    batches: Vec<BatchCost>,
}

impl Ledger {
    fn new() -> Self {
        Ledger {
            total: Tally::default(),
            batches: Vec::new(),
        }
    }

    fn push_batch(&mut self, size: u64, txs: &[Tally]) {
        let mut batch = BatchCost {
            size,
            gas: 0,
            refund: 0,
            peak_tx_gas: 0,
        };
        for tx in txs {
            batch.gas += tx.net();
            batch.refund += tx.granted_refund();
            batch.peak_tx_gas = batch.peak_tx_gas.max(tx.pre_refund());
            self.total.absorb(tx);
        }
        self.batches.push(batch);
    }

    fn finish(self, d: &StrategyDescriptor, n: u64, new_holders: bool) -> CostBreakdown {
        let distributor_gas = self.batches.iter().map(|b| b.gas).sum();
        debug_assert_eq!(distributor_gas, self.total.net());
        CostBreakdown {
            descriptor: *d,
            n,
            new_holders,
            discounted: false,
            distributor_gas,
            recipient_gas_each: CentiGas::ZERO,
            recipient_gas_total: 0,
            items: self.total.items(),
            peak_tx_gas: self.batches.iter().map(|b| b.peak_tx_gas).max().unwrap_or(0),
            batches: self.batches,
        }
    }
}

fn baseline_breakdown(
    d: &StrategyDescriptor,
    n: u64,
    schedule: &GasSchedule,
    new_holders: bool,
) -> Result<CostBreakdown> {
    let address_word = schedule.input_word_cost(20)?;
    let amount_word = schedule.input_word_cost(d.amount_bytes as u64)?;
    let mut ledger = Ledger::new();
    for (i, k) in batch_plan(n, d.batch_size)?.into_iter().enumerate() {
        let mut tx = Tally {
            intrinsic: schedule.g_tx,
            calldata: k * address_word,
            ..Tally::default()
        };
        if i == 0 {
            tx.calldata += amount_word;
        }
        tx.store(recipient_store(schedule, new_holders), k);
        ledger.push_batch(k, &[tx]);
    }
    Ok(ledger.finish(d, n, new_holders))
}

fn naive_breakdown(
    d: &StrategyDescriptor,
    n: u64,
    schedule: &GasSchedule,
    new_holders: bool,
) -> CostBreakdown {
    let (total, nonzero) = payload_bytes(Family::NaivePush, 1, false, d.amount_bytes as u64);
    let plan = vec![1; n as usize];
    let mut ledger = Ledger::new();
    for share in overhead_shares(d.overhead_per_recipient, &plan) {
        let mut tx = Tally {
            intrinsic: schedule.g_tx,
            calldata: schedule.calldata_cost_counts(total, nonzero),
            logs: schedule.transfer_log_cost(),
            overhead: share,
            ..Tally::default()
        };
        tx.store(schedule.sstore_cost(false, false), 1);
        tx.store(recipient_store(schedule, new_holders), 1);
        ledger.push_batch(1, &[tx]);
    }
    ledger.finish(d, n, new_holders)
}

fn batched_breakdown(
    d: &StrategyDescriptor,
    n: u64,
    schedule: &GasSchedule,
    new_holders: bool,
) -> Result<CostBreakdown> {
    let plan = batch_plan(n, d.batch_size)?;
    let shares = overhead_shares(d.overhead_per_recipient, &plan);
    let call = batch_call_cost(d.family, schedule);
    let amount = d.amount_bytes as u64;
    let mut ledger = Ledger::new();
    for (&k, &share) in plan.iter().zip(&shares) {
        let (total, nonzero) = payload_bytes(d.family, k, d.uniform, amount);
        let mut tx = Tally {
            intrinsic: schedule.g_tx,
            calldata: schedule.calldata_cost_counts(total, nonzero),
            calls: k * call,
            logs: k * schedule.transfer_log_cost(),
            overhead: share,
            ..Tally::default()
        };
        if d.family == Family::InternalBatchPull {
            // Allowance slots; after a zeroing pass they are always fresh.
            let fresh = new_holders || d.zero_reset;
            tx.store(schedule.sstore_cost(fresh, false), k);
            if d.zero_reset {
                let (total, nonzero) = payload_bytes(d.family, k, d.uniform, 0);
                let mut zeroing = Tally {
                    calldata: schedule.calldata_cost_counts(total, nonzero),
                    ..tx
                };
                zeroing.storage = 0;
                zeroing.refund = 0;
                zeroing.store(schedule.sstore_cost(new_holders, true), k);
                ledger.push_batch(k, &[zeroing, tx]);
                continue;
            }
        } else {
            // The distributor's balance is debited once per batch.
            tx.store(schedule.sstore_cost(false, false), 1);
            tx.store(recipient_store(schedule, new_holders), k);
        }
        ledger.push_batch(k, &[tx]);
    }
    Ok(ledger.finish(d, n, new_holders))
}

fn pooled_breakdown(
    d: &StrategyDescriptor,
    n: u64,
    schedule: &GasSchedule,
    new_holders: bool,
) -> CostBreakdown {
    let (total, nonzero) = payload_bytes(Family::PooledMerkle, 1, true, 0);
    let mut tx = Tally {
        intrinsic: schedule.g_tx,
        calldata: schedule.calldata_cost_counts(total, nonzero),
        overhead: d.overhead_per_recipient.times(1) as Gas,
        ..Tally::default()
    };
    tx.store(schedule.sstore_cost(true, false), 1);
    let mut ledger = Ledger::new();
    ledger.push_batch(n, &[tx]);
    ledger.finish(d, n, new_holders)
}

/// Number of sibling digests in a proof over `n` leaves: `ceil(log2 n)`.
pub(crate) fn proof_len(n: u64) -> u64 {
    if n <= 1 {
        0
    } else {
        64 - (n - 1).leading_zeros() as u64
    }
}

/// One recipient's claim transaction, excluding the calibrated overhead.
fn recipient_tx(d: &StrategyDescriptor, n: u64, schedule: &GasSchedule, new_holders: bool) -> Tally {
    let (total, nonzero) = transfer_from_payload_bytes(d.amount_bytes);
    let mut tx = Tally {
        intrinsic: schedule.g_tx,
        calldata: schedule.calldata_cost_counts(total, nonzero),
        logs: schedule.transfer_log_cost(),
        ..Tally::default()
    };
    // allowance (or pooled entitlement) drawn down to zero
    tx.store(schedule.sstore_cost(false, true), 1);
    tx.store(recipient_store(schedule, new_holders), 1);
    tx.store(schedule.sstore_cost(false, false), 1);
    if d.family == Family::PooledMerkle {
        let k = proof_len(n);
        let (total, nonzero) = claim_payload_bytes(k, d.amount_bytes);
        tx.calldata = schedule.calldata_cost_counts(total, nonzero);
        // leaf = H(0x00 || address || amount word), then one pair hash per level
        tx.hashing = schedule.keccak_cost(1 + 20 + WORD_BYTES) + k * schedule.keccak_cost(2 * WORD_BYTES);
        // claim record
        tx.store(schedule.sstore_cost(true, false), 1);
    }
    tx
}

/// Per-recipient net gas in hundredths, and the claim's pre-refund peak.
fn recipient_each(
    d: &StrategyDescriptor,
    n: u64,
    schedule: &GasSchedule,
    new_holders: bool,
) -> (CentiGas, Tally, Gas) {
    let tx = recipient_tx(d, n, schedule, new_holders);
    let pre = tx.pre_refund() as i64 * 100 + d.overhead_per_recipient.0;
    let refund = (tx.refund as i64 * 100).min(pre / 2);
    let peak = (pre as u64).div_ceil(100);
    (CentiGas(pre - refund), tx, peak)
}

/// Recipient-side breakdown: every one of the `n` recipients sends a claim.
pub fn recipient_breakdown(
    d: &StrategyDescriptor,
    n: u64,
    schedule: &GasSchedule,
    new_holders: bool,
) -> Result<CostBreakdown> {
    d.validate()?;
    require_recipients(n)?;
    if !d.family.is_pull() {
        return Err(StrategyError::Descriptor(format!(
            "{} has no recipient-side cost",
            d.family
        )));
    }
    let (each, tx, peak) = recipient_each(d, n, schedule, new_holders);
    let total = each.times(n) as Gas;
    let mut sum = Tally {
        intrinsic: n * tx.intrinsic,
        calldata: n * tx.calldata,
        storage: n * tx.storage,
        logs: n * tx.logs,
        hashing: n * tx.hashing,
        overhead: d.overhead_per_recipient.times(n) as Gas,
        ..Tally::default()
    };
    sum.refund = sum.pre_refund() - total;
    Ok(CostBreakdown {
        descriptor: *d,
        n,
        new_holders,
        discounted: false,
        distributor_gas: 0,
        recipient_gas_each: each,
        recipient_gas_total: total,
        items: sum.items(),
        batches: Vec::new(),
        peak_tx_gas: peak,
    })
}

/// Gas one claiming recipient pays. Push strategies cost recipients
/// nothing. For pull strategies the descriptor's overhead is read as the
/// recipient-side residual.
pub fn recipient_cost(d: &StrategyDescriptor, n: u64, schedule: &GasSchedule) -> Result<CentiGas> {
    d.validate()?;
    require_recipients(n)?;
    if d.family.is_push() {
        return Ok(CentiGas::ZERO);
    }
    Ok(recipient_each(d, n, schedule, true).0)
}

/// Itemized cost of airdropping to `n` recipients.
///
/// `new_holders` selects fresh-slot storage pricing for recipient balances
/// (recipients do not hold the token yet); otherwise balances are updates.
pub fn distributor_cost(
    d: &StrategyDescriptor,
    n: u64,
    schedule: &GasSchedule,
    new_holders: bool,
) -> Result<CostBreakdown> {
    d.validate()?;
    require_recipients(n)?;
    if d.side == Side::Recipient {
        return recipient_breakdown(d, n, schedule, new_holders);
    }
    match d.family {
        Family::Baseline => baseline_breakdown(d, n, schedule, new_holders),
        Family::NaivePush => Ok(naive_breakdown(d, n, schedule, new_holders)),
        Family::PooledMerkle => Ok(pooled_breakdown(d, n, schedule, new_holders)),
        Family::ExternalBatchPush | Family::InternalBatchPush | Family::InternalBatchPull => {
            batched_breakdown(d, n, schedule, new_holders)
        }
    }
}

/// The single figure a strategy label stands for: distributor gas for
/// distributor-side labels, total recipient gas for recipient-side ones.
pub fn scenario_cost(d: &StrategyDescriptor, n: u64, schedule: &GasSchedule) -> Result<Gas> {
    Ok(distributor_cost(d, n, schedule, true)?.total_gas())
}

/// Re-prices a fresh-holder push cost as if every recipient already held
/// the token: each recipient balance write becomes an update.
pub fn apply_discount(c: &CostBreakdown, schedule: &GasSchedule) -> Result<CostBreakdown> {
    if c.n == 0 {
        return Ok(c.clone());
    }
    if c.discounted {
        return Err(StrategyError::AlreadyDiscounted);
    }
    if c.descriptor.family.is_pull() || c.descriptor.side == Side::Recipient {
        return Err(StrategyError::DiscountUndefined(c.descriptor.label()));
    }
    if !c.new_holders {
        return Err(StrategyError::NotFreshHolders);
    }
    let delta = schedule.g_sstore_new - schedule.g_sstore_update;
    let mut out = c.clone();
    for batch in &mut out.batches {
        batch.gas -= batch.size * delta;
        batch.peak_tx_gas -= batch.size * delta;
    }
    for item in out.items.iter_mut().filter(|i| i.label == "storage") {
        item.gas -= (c.n * delta) as i64;
    }
    out.distributor_gas -= c.n * delta;
    out.peak_tx_gas = out.batches.iter().map(|b| b.peak_tx_gas).max().unwrap_or(0);
    out.discounted = true;
    Ok(out)
}
