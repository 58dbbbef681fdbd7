use std::collections::BTreeSet;

use sha3::{Digest as _, Keccak256};

use super::{Digest, MerkleError, Recipient};

const LEAF_TAG: u8 = 0x00;
const NODE_TAG: u8 = 0x01;

pub fn hash_leaf(r: &Recipient) -> Digest {
    let mut h = Keccak256::new();
    h.update([LEAF_TAG]);
    h.update(r.address.0);
    h.update(r.amount.to_word());
    h.finalize().into()
}

/// Order-independent parent hash.
pub fn hash_pair(a: &Digest, b: &Digest) -> Digest {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    let mut h = Keccak256::new();
    h.update([NODE_TAG]);
    h.update(lo);
    h.update(hi);
    h.finalize().into()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MerkleProof {
    pub leaf_index: usize,
    pub siblings: Vec<Digest>,
}

/// Accepts iff folding `proof` over the recipient's leaf reaches `root`.
pub fn verify(root: &Digest, recipient: &Recipient, proof: &MerkleProof) -> bool {
    let computed = proof
        .siblings
        .iter()
        .fold(hash_leaf(recipient), |acc, s| hash_pair(&acc, s));
    &computed == root
}

/// A committed recipient list with every tree level kept for proving.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MerkleDistribution {
    recipients: Vec<Recipient>,
    levels: Vec<Vec<Digest>>,
}

impl MerkleDistribution {
    pub fn build(recipients: Vec<Recipient>) -> Result<Self, MerkleError> {
        if recipients.is_empty() {
            return Err(MerkleError::Empty);
        }
        let mut seen = BTreeSet::new();
        for r in &recipients {
            if !seen.insert(r.address) {
                return Err(MerkleError::DuplicateAddress(r.address));
            }
        }
        let mut levels = vec![recipients.iter().map(hash_leaf).collect::<Vec<_>>()];
        while levels.last().map_or(0, Vec::len) > 1 {
            let next = levels
                .last()
                .unwrap()
                .chunks(2)
                .map(|pair| match pair {
                    [a, b] => hash_pair(a, b),
                    [a] => *a,
                    _ => unreachable!(),
                })
                .collect();
            levels.push(next);
        }
        Ok(MerkleDistribution { recipients, levels })
    }

    pub fn root(&self) -> Digest {
        self.levels.last().unwrap()[0]
    }

    /// Number of hashing levels, `ceil(log2 n)`.
    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn len(&self) -> usize {
        self.recipients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.recipients.is_empty()
    }

    pub fn recipients(&self) -> &[Recipient] {
        &self.recipients
    }

    pub fn index_of(&self, address: &super::Address) -> Option<usize> {
        self.recipients.iter().position(|r| &r.address == address)
    }

    pub fn prove(&self, index: usize) -> Result<MerkleProof, MerkleError> {
        if index >= self.recipients.len() {
            return Err(MerkleError::IndexOutOfRange {
                index,
                n: self.recipients.len(),
            });
        }
        let mut siblings = Vec::with_capacity(self.depth());
        let mut i = index;
        for level in &self.levels[..self.depth()] {
            if let Some(s) = level.get(i ^ 1) {
                siblings.push(*s);
            }
            i /= 2;
        }
        Ok(MerkleProof {
            leaf_index: index,
            siblings,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::super::{Address, Amount};
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn recipients(n: usize, seed: u64) -> Vec<Recipient> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let mut a = [0u8; 20];
                rng.fill(&mut a[..]);
                a[..8].copy_from_slice(&(i as u64).to_be_bytes());
                Recipient::new(Address(a), rng.gen_range(1..1_000_000u64))
            })
            .collect()
    }

    // Recursive reference: split at the largest power of two below n.
    fn oracle_root(leaves: &[Digest]) -> Digest {
        if leaves.len() == 1 {
            return leaves[0];
        }
        let split = leaves.len().next_power_of_two() / 2;
        let (l, r) = leaves.split_at(split);
        hash_pair(&oracle_root(l), &oracle_root(r))
    }

    #[test]
    fn empty_and_duplicate_rejected() {
        assert_eq!(MerkleDistribution::build(vec![]), Err(MerkleError::Empty));
        let mut rs = recipients(3, 1);
        rs[2].address = rs[0].address;
        assert_eq!(
            MerkleDistribution::build(rs.clone()),
            Err(MerkleError::DuplicateAddress(rs[0].address))
        );
    }

    #[test]
    fn single_leaf() {
        let rs = recipients(1, 2);
        let t = MerkleDistribution::build(rs.clone()).unwrap();
        assert_eq!(t.depth(), 0);
        assert_eq!(t.root(), hash_leaf(&rs[0]));
        let p = t.prove(0).unwrap();
        assert!(p.siblings.is_empty());
        assert!(verify(&t.root(), &rs[0], &p));
    }

    #[test]
    fn leaf_encoding() {
        // keccak256(0x00 || 20 zero bytes || 32 zero bytes)
        let r = Recipient::new(Address([0; 20]), Amount::from(0));
        let mut h = Keccak256::new();
        h.update([0u8; 53]);
        let expect: Digest = h.finalize().into();
        assert_eq!(hash_leaf(&r), expect);
        assert_eq!(hash_pair(&[1; 32], &[2; 32]), hash_pair(&[2; 32], &[1; 32]));
    }

    #[test]
    fn out_of_range_index() {
        let t = MerkleDistribution::build(recipients(5, 3)).unwrap();
        assert_eq!(t.prove(5), Err(MerkleError::IndexOutOfRange { index: 5, n: 5 }));
    }

    #[test]
    fn depths() {
        for (n, d) in [(1, 0), (2, 1), (3, 2), (4, 2), (5, 3), (1000, 10), (1024, 10), (1025, 11)] {
            let t = MerkleDistribution::build(recipients(n, 4)).unwrap();
            assert_eq!(t.depth(), d, "n={n}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn root_matches_recursive_oracle(n in 1usize..70, seed in any::<u64>()) {
            let rs = recipients(n, seed);
            let t = MerkleDistribution::build(rs.clone()).unwrap();
            let leaves: Vec<Digest> = rs.iter().map(hash_leaf).collect();
            prop_assert_eq!(t.root(), oracle_root(&leaves));
        }

        #[test]
        fn every_proof_verifies(n in 1usize..70, seed in any::<u64>()) {
            let rs = recipients(n, seed);
            let t = MerkleDistribution::build(rs.clone()).unwrap();
            for (i, r) in rs.iter().enumerate() {
                let p = t.prove(i).unwrap();
                prop_assert!(p.siblings.len() <= t.depth());
                prop_assert!(verify(&t.root(), r, &p));
            }
        }

        #[test]
        fn mutations_are_rejected(n in 2usize..40, seed in any::<u64>(), pick in any::<prop::sample::Index>(), bit in 0usize..256) {
            let rs = recipients(n, seed);
            let t = MerkleDistribution::build(rs.clone()).unwrap();
            let i = pick.index(n);
            let p = t.prove(i).unwrap();
            let root = t.root();

            let mut r = rs[i].clone();
            r.amount = Amount::from(r.amount.value().iter_u64_digits().next().unwrap_or(0) + 1);
            prop_assert!(!verify(&root, &r, &p));

            let mut r = rs[i].clone();
            r.address.0[bit % 20] ^= 1 << (bit % 8);
            prop_assert!(!verify(&root, &r, &p));

            prop_assert!(!verify(&root, &rs[(i + 1) % n], &p));

            if !p.siblings.is_empty() {
                let mut q = p.clone();
                let k = bit % q.siblings.len();
                q.siblings[k][bit / 8] ^= 1 << (bit % 8);
                prop_assert!(!verify(&root, &rs[i], &q));

                let mut q = p.clone();
                q.siblings.pop();
                prop_assert!(!verify(&root, &rs[i], &q));

                let mut q = p.clone();
                q.siblings.push(root);
                prop_assert!(!verify(&root, &rs[i], &q));
            }
        }
    }
}
