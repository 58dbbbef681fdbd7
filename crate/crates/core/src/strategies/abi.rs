//! Byte layout of the call payloads each strategy sends.
//!
//! Payloads follow the standard contract ABI: a 4-byte selector, then
//! 32-byte head words, with dynamic arrays encoded as an offset in the head
//! and a length word followed by elements in the tail. Addresses are
//! assumed to be full-entropy (20 nonzero bytes) and selectors to have no
//! zero bytes.

use super::{Family, Result, StrategyError};
use crate::gas_model::WORD_BYTES;

const SELECTOR_BYTES: u64 = 4;
const ADDRESS_BYTES: u64 = 20;

/// Nonzero bytes in the big-endian word encoding of `value`.
fn word_nonzero(value: u64) -> u64 {
    value.to_be_bytes().iter().filter(|&&b| b != 0).count() as u64
}

/// `(total_bytes, nonzero_bytes)` of one transaction's payload.
///
/// `amount_nonzero` may be 0, which describes the zeroing transaction of a
/// zero-reset approval pass.
pub fn payload_bytes(family: Family, batch: u64, uniform: bool, amount_nonzero: u64) -> (u64, u64) {
    let w = WORD_BYTES;
    match family {
        // transfer(address to, uint256 amount)
        Family::NaivePush => (
            SELECTOR_BYTES + 2 * w,
            SELECTOR_BYTES + ADDRESS_BYTES + amount_nonzero,
        ),
        // approveReceivers(bytes32 root)
        Family::PooledMerkle => (SELECTOR_BYTES + w, SELECTOR_BYTES + w),
        // addresses plus one amount word, no ABI framing
        Family::Baseline => (w * (batch + 1), ADDRESS_BYTES * batch + amount_nonzero),
        Family::ExternalBatchPush | Family::InternalBatchPush | Family::InternalBatchPull => {
            if uniform {
                // f(address[] recipients, uint256 amount)
                let head_offset = 2 * w;
                let total = SELECTOR_BYTES + 3 * w + batch * w;
                let nonzero = SELECTOR_BYTES
                    + word_nonzero(head_offset)
                    + amount_nonzero
                    + word_nonzero(batch)
                    + ADDRESS_BYTES * batch;
                (total, nonzero)
            } else {
                // f(address[] recipients, uint256[] amounts)
                let first = 2 * w;
                let second = first + w + batch * w;
                let total = SELECTOR_BYTES + 4 * w + 2 * batch * w;
                let nonzero = SELECTOR_BYTES
                    + word_nonzero(first)
                    + word_nonzero(second)
                    + 2 * word_nonzero(batch)
                    + ADDRESS_BYTES * batch
                    + amount_nonzero * batch;
                (total, nonzero)
            }
        }
    }
}

/// Payload layout of one distributor transaction covering `batch` recipients.
pub fn abi_payload_bytes(
    family: Family,
    batch: u64,
    uniform: bool,
    amount_bytes: u8,
) -> Result<(u64, u64)> {
    if batch == 0 {
        return Err(StrategyError::ZeroBatchSize);
    }
    if !(1..=32).contains(&amount_bytes) {
        return Err(StrategyError::Descriptor(format!(
            "amount_bytes {amount_bytes} outside 1..=32"
        )));
    }
    Ok(payload_bytes(family, batch, uniform, amount_bytes as u64))
}

/// `transferFrom(address from, address to, uint256 amount)`, sent by a
/// pull recipient.
pub fn transfer_from_payload_bytes(amount_bytes: u8) -> (u64, u64) {
    (
        SELECTOR_BYTES + 3 * WORD_BYTES,
        SELECTOR_BYTES + 2 * ADDRESS_BYTES + amount_bytes as u64,
    )
}

/// `claim(uint256 amount, bytes32[] proof)` with `proof_len` full-entropy
/// sibling digests.
pub fn claim_payload_bytes(proof_len: u64, amount_bytes: u8) -> (u64, u64) {
    let w = WORD_BYTES;
    let total = SELECTOR_BYTES + 3 * w + proof_len * w;
    let nonzero = SELECTOR_BYTES
        + amount_bytes as u64
        + word_nonzero(2 * w)
        + word_nonzero(proof_len)
        + proof_len * w;
    (total, nonzero)
}
