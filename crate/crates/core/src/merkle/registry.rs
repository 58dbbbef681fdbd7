use std::collections::BTreeSet;

use num_bigint::BigUint;

use super::{verify, Address, ClaimError, Digest, MerkleDistribution, MerkleProof, Recipient};

/// On-chain state of a pooled distribution: the committed root, who has
/// claimed, and the tokens still held for unclaimed recipients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClaimRegistry {
    pub(super) root: Digest,
    pub(super) claimed: BTreeSet<Address>,
    pub(super) total_allocated: BigUint,
    pub(super) total_claimed: BigUint,
    pub(super) deadline: u64,
    pub(super) distributor_balance: BigUint,
    pub(super) reclaimed: bool,
}

impl ClaimRegistry {
    /// Registry funded with the sum of all allocations.
    pub fn new(distribution: &MerkleDistribution, deadline: u64) -> Self {
        let total: BigUint = distribution
            .recipients()
            .iter()
            .map(|r| r.amount.value())
            .sum();
        ClaimRegistry {
            root: distribution.root(),
            claimed: BTreeSet::new(),
            total_allocated: total.clone(),
            total_claimed: BigUint::default(),
            deadline,
            distributor_balance: total,
            reclaimed: false,
        }
    }

    pub fn root(&self) -> Digest {
        self.root
    }

    pub fn deadline(&self) -> u64 {
        self.deadline
    }

    pub fn total_allocated(&self) -> &BigUint {
        &self.total_allocated
    }

    pub fn total_claimed(&self) -> &BigUint {
        &self.total_claimed
    }

    pub fn distributor_balance(&self) -> &BigUint {
        &self.distributor_balance
    }

    pub fn is_reclaimed(&self) -> bool {
        self.reclaimed
    }

    pub fn has_claimed(&self, address: &Address) -> bool {
        self.claimed.contains(address)
    }

    pub fn claimed_count(&self) -> usize {
        self.claimed.len()
    }

    /// Pays `recipient` out of the pool. On any error the registry is left
    /// untouched.
    pub fn claim(
        &mut self,
        recipient: &Recipient,
        proof: &MerkleProof,
        now: u64,
    ) -> Result<(), ClaimError> {
        if self.reclaimed || now > self.deadline {
            return Err(ClaimError::PastDeadline {
                now,
                deadline: self.deadline,
            });
        }
        if self.claimed.contains(&recipient.address) {
            return Err(ClaimError::AlreadyClaimed(recipient.address));
        }
        let amount = recipient.amount.value();
        if !verify(&self.root, recipient, proof) || amount > &self.distributor_balance {
            return Err(ClaimError::InvalidProof);
        }
        self.claimed.insert(recipient.address);
        self.total_claimed += amount;
        self.distributor_balance -= amount;
        Ok(())
    }

    /// Returns everything still unclaimed to the distributor and closes the
    /// pool. A second reclaim returns zero.
    pub fn reclaim(&mut self, now: u64) -> Result<BigUint, ClaimError> {
        if now <= self.deadline {
            return Err(ClaimError::BeforeDeadline {
                now,
                deadline: self.deadline,
            });
        }
        self.reclaimed = true;
        Ok(std::mem::take(&mut self.distributor_balance))
    }
}
