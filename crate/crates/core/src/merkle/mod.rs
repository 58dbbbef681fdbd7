//! Pooled payments: the distributor commits to the full recipient list
//! with a single Merkle root, and each recipient claims with a proof.
//!
//! Hashing is Keccak-256 with domain separation:
//!
//! ```text
//! leaf   = H(0x00 || address (20 bytes) || amount (32-byte big-endian))
//! parent = H(0x01 || min(a, b) || max(a, b))
//! ```
//!
//! An unpaired node is promoted unchanged to the next level, so a tree over
//! `n` leaves has depth `ceil(log2 n)` and proofs may be shorter than the
//! depth.

mod io;
mod registry;
mod tree;

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::Zero;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::gas_model::GasSchedule;
use crate::strategies::{recipient_cost, CentiGas, StrategyDescriptor, StrategyError};

pub use io::{
    format_recipients, parse_recipients, DistributionDocument, ProofEntry, RegistryDocument,
};
pub use registry::ClaimRegistry;
pub use tree::{hash_leaf, hash_pair, verify, MerkleDistribution, MerkleProof};

pub type Digest = [u8; 32];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MerkleError {
    #[error("recipient list is empty")]
    Empty,
    #[error("duplicate recipient address {0}")]
    DuplicateAddress(Address),
    #[error("index {index} out of range for {n} recipients")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("malformed document: {0}")]
    Document(String),
    #[error("document root {claimed} does not match the recipients (computed {computed})")]
    RootMismatch { claimed: String, computed: String },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ClaimError {
    #[error("{0} has already claimed")]
    AlreadyClaimed(Address),
    #[error("proof does not match the committed root")]
    InvalidProof,
    #[error("claim at time {now} is past the deadline {deadline}")]
    PastDeadline { now: u64, deadline: u64 },
    #[error("reclaim at time {now} is not after the deadline {deadline}")]
    BeforeDeadline { now: u64, deadline: u64 },
}

/// 20-byte account identifier.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Address(pub [u8; 20]);

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x{}", hex::encode(self.0))
    }
}

impl fmt::Debug for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Address {
    type Err = String;

    /// `0x` followed by exactly 40 hex digits, either case.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let body = s
            .strip_prefix("0x")
            .ok_or_else(|| format!("address {s:?} must start with 0x"))?;
        if body.len() != 40 {
            return Err(format!("address {s:?} must have 40 hex digits"));
        }
        let mut out = [0u8; 20];
        hex::decode_to_slice(body, &mut out).map_err(|e| format!("address {s:?}: {e}"))?;
        Ok(Address(out))
    }
}

impl Serialize for Address {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Address {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Token quantity, strictly below 2^256.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Amount(BigUint);

impl Amount {
    pub fn new(value: BigUint) -> Result<Self, String> {
        if value.bits() > 256 {
            return Err(format!("amount {value} does not fit in 256 bits"));
        }
        Ok(Amount(value))
    }

    pub fn value(&self) -> &BigUint {
        &self.0
    }

    /// 32-byte big-endian encoding.
    pub fn to_word(&self) -> Digest {
        let bytes = self.0.to_bytes_be();
        let mut word = [0u8; 32];
        if !self.0.is_zero() {
            word[32 - bytes.len()..].copy_from_slice(&bytes);
        }
        word
    }
}

impl From<u64> for Amount {
    fn from(v: u64) -> Self {
        Amount(BigUint::from(v))
    }
}

impl fmt::Display for Amount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

impl FromStr for Amount {
    type Err = String;

    /// Plain decimal digits, no sign or separators.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
            return Err(format!("amount {s:?} is not a decimal integer"));
        }
        let v = BigUint::parse_bytes(s.as_bytes(), 10)
            .ok_or_else(|| format!("amount {s:?} is not a decimal integer"))?;
        Amount::new(v)
    }
}

impl Serialize for Amount {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Amount {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Recipient {
    pub address: Address,
    pub amount: Amount,
}

impl Recipient {
    pub fn new(address: Address, amount: impl Into<Amount>) -> Self {
        Recipient {
            address,
            amount: amount.into(),
        }
    }
}

pub fn digest_hex(d: &Digest) -> String {
    format!("0x{}", hex::encode(d))
}

/// `0x` followed by 64 hex digits.
pub fn parse_digest(s: &str) -> Result<Digest, String> {
    let body = s
        .strip_prefix("0x")
        .ok_or_else(|| format!("digest {s:?} must start with 0x"))?;
    if body.len() != 64 {
        return Err(format!("digest {s:?} must have 64 hex digits"));
    }
    let mut out = [0u8; 32];
    hex::decode_to_slice(body, &mut out).map_err(|e| format!("digest {s:?}: {e}"))?;
    Ok(out)
}

/// Gas one recipient pays to claim from a pool of `n` recipients: a pull
/// claim plus the proof in calldata, proof verification hashing, and the
/// claim record. `overhead` is the calibrated pull-recipient residual.
pub fn claim_gas_estimate(
    n: u64,
    schedule: &GasSchedule,
    amount_bytes: u8,
    overhead: CentiGas,
) -> Result<CentiGas, StrategyError> {
    let d = StrategyDescriptor::pooled_recipient()
        .with_amount_bytes(amount_bytes)
        .with_overhead(overhead);
    recipient_cost(&d, n, schedule)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn address_text() {
        let a: Address = "0x00000000000000000000000000000000000000ff".parse().unwrap();
        assert_eq!(a.0[19], 0xff);
        assert_eq!(a.to_string(), "0x00000000000000000000000000000000000000ff");
        assert!("00000000000000000000000000000000000000ff".parse::<Address>().is_err());
        assert!("0x00ff".parse::<Address>().is_err());
        assert!("0xzz000000000000000000000000000000000000ff".parse::<Address>().is_err());
    }

    #[test]
    fn amount_bounds() {
        let max = "115792089237316195423570985008687907853269984665640564039457584007913129639935";
        let a: Amount = max.parse().unwrap();
        assert_eq!(a.to_word(), [0xff; 32]);
        let over = "115792089237316195423570985008687907853269984665640564039457584007913129639936";
        assert!(over.parse::<Amount>().is_err());
        assert!("-1".parse::<Amount>().is_err());
        assert!("".parse::<Amount>().is_err());
        assert_eq!(Amount::from(0).to_word(), [0; 32]);
        assert_eq!(Amount::from(500).to_word()[30..], [0x01, 0xf4]);
    }

    #[test]
    fn claim_exceeds_pull_by_proof_terms() {
        let s = GasSchedule::default();
        let eps = CentiGas(314_088);
        let pull = recipient_cost(&StrategyDescriptor::pull_recipient().with_overhead(eps), 1000, &s)
            .unwrap();
        let claim = claim_gas_estimate(1000, &s, 2, eps).unwrap();
        // 10 siblings: claim payload 420 bytes (328 nonzero) vs transferFrom 100 (46)
        let calldata = (328 * 68 + 92 * 4) - (46 * 68 + 54 * 4);
        let hashing = (30 + 2 * 6) + 10 * (30 + 2 * 6);
        let record = 20_000;
        assert_eq!(claim.0 - pull.0, (calldata + hashing + record) * 100);
    }

    #[test]
    fn claim_gas_doubling() {
        let s = GasSchedule::default();
        let eps = CentiGas(314_088);
        let a = claim_gas_estimate(1024, &s, 2, eps).unwrap();
        let b = claim_gas_estimate(2048, &s, 2, eps).unwrap();
        assert_eq!(b.0 - a.0, (2176 + 42) * 100);
    }
}
