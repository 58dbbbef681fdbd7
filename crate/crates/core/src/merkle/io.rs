//! Text formats: recipient lists, distribution and proof JSON, and
//! persisted claim registries.

use std::collections::BTreeSet;

use num_bigint::BigUint;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{
    digest_hex, parse_digest, Address, Amount, ClaimRegistry, Digest, MerkleDistribution,
    MerkleError, MerkleProof, Recipient,
};

mod hex_digest {
    use super::*;

    pub fn serialize<S: Serializer>(d: &Digest, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&digest_hex(d))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Digest, D::Error> {
        parse_digest(&String::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

mod hex_digests {
    use super::*;

    pub fn serialize<S: Serializer>(ds: &[Digest], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(ds.iter().map(digest_hex))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Digest>, D::Error> {
        Vec::<String>::deserialize(d)?
            .iter()
            .map(|s| parse_digest(s).map_err(serde::de::Error::custom))
            .collect()
    }
}

mod decimal {
    use super::*;

    pub fn serialize<S: Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(v)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
        let s = String::deserialize(d)?;
        if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
            return Err(serde::de::Error::custom(format!("{s:?} is not a decimal integer")));
        }
        BigUint::parse_bytes(s.as_bytes(), 10)
            .ok_or_else(|| serde::de::Error::custom(format!("{s:?} is not a decimal integer")))
    }
}

/// One `address,amount` per line; addresses are `0x` plus 40 lowercase
/// hex digits. Blank lines are skipped.
pub fn parse_recipients(doc: &str) -> Result<Vec<Recipient>, MerkleError> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for (idx, raw) in doc.lines().enumerate() {
        let line = idx + 1;
        let fail = |message: String| MerkleError::Parse { line, message };
        let text = raw.trim();
        if text.is_empty() {
            continue;
        }
        let (addr, amount) = text
            .split_once(',')
            .ok_or_else(|| fail(format!("expected address,amount, got {text:?}")))?;
        let addr = addr.trim();
        if addr.bytes().any(|b| b.is_ascii_uppercase()) {
            return Err(fail(format!("address {addr:?} must be lowercase")));
        }
        let address: Address = addr.parse().map_err(fail)?;
        let amount: Amount = amount.trim().parse().map_err(fail)?;
        if !seen.insert(address) {
            return Err(fail(format!("duplicate recipient address {address}")));
        }
        out.push(Recipient { address, amount });
    }
    if out.is_empty() {
        return Err(MerkleError::Empty);
    }
    Ok(out)
}

pub fn format_recipients(recipients: &[Recipient]) -> String {
    recipients
        .iter()
        .map(|r| format!("{},{}\n", r.address, r.amount))
        .collect()
}

/// A recipient's allocation together with its proof.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProofEntry {
    pub index: usize,
    pub address: Address,
    pub amount: Amount,
    #[serde(with = "hex_digests")]
    pub siblings: Vec<Digest>,
}

impl ProofEntry {
    pub fn new(recipient: &Recipient, proof: &MerkleProof) -> Self {
        ProofEntry {
            index: proof.leaf_index,
            address: recipient.address,
            amount: recipient.amount.clone(),
            siblings: proof.siblings.clone(),
        }
    }

    pub fn recipient(&self) -> Recipient {
        Recipient {
            address: self.address,
            amount: self.amount.clone(),
        }
    }

    pub fn proof(&self) -> MerkleProof {
        MerkleProof {
            leaf_index: self.index,
            siblings: self.siblings.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("proof entries always serialize")
    }

    pub fn from_json(doc: &str) -> Result<Self, MerkleError> {
        serde_json::from_str(doc).map_err(|e| MerkleError::Document(e.to_string()))
    }
}

/// Root, depth and every recipient's proof.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionDocument {
    #[serde(with = "hex_digest")]
    pub root: Digest,
    pub depth: usize,
    pub proofs: Vec<ProofEntry>,
}

impl DistributionDocument {
    pub fn new(distribution: &MerkleDistribution) -> Self {
        let proofs = distribution
            .recipients()
            .iter()
            .enumerate()
            .map(|(i, r)| ProofEntry::new(r, &distribution.prove(i).expect("index in range")))
            .collect();
        DistributionDocument {
            root: distribution.root(),
            depth: distribution.depth(),
            proofs,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("documents always serialize")
    }

    /// Parses a document and rebuilds the tree it describes, rejecting any
    /// root, depth or proof that the recipients do not reproduce.
    pub fn parse(doc: &str) -> Result<MerkleDistribution, MerkleError> {
        let parsed: DistributionDocument =
            serde_json::from_str(doc).map_err(|e| MerkleError::Document(e.to_string()))?;
        parsed.rebuild()
    }

    pub fn rebuild(&self) -> Result<MerkleDistribution, MerkleError> {
        for (i, p) in self.proofs.iter().enumerate() {
            if p.index != i {
                return Err(MerkleError::Document(format!(
                    "proof {i} carries index {}",
                    p.index
                )));
            }
        }
        let dist = MerkleDistribution::build(self.proofs.iter().map(ProofEntry::recipient).collect())?;
        if dist.root() != self.root {
            return Err(MerkleError::RootMismatch {
                claimed: digest_hex(&self.root),
                computed: digest_hex(&dist.root()),
            });
        }
        if dist.depth() != self.depth {
            return Err(MerkleError::Document(format!(
                "depth {} but the recipients give {}",
                self.depth,
                dist.depth()
            )));
        }
        for p in &self.proofs {
            if dist.prove(p.index)?.siblings != p.siblings {
                return Err(MerkleError::Document(format!("proof {} is wrong", p.index)));
            }
        }
        Ok(dist)
    }
}

/// Persisted form of a [`ClaimRegistry`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegistryDocument {
    #[serde(with = "hex_digest")]
    pub root: Digest,
    pub deadline: u64,
    #[serde(with = "decimal")]
    pub total_allocated: BigUint,
    #[serde(with = "decimal")]
    pub total_claimed: BigUint,
    #[serde(with = "decimal")]
    pub distributor_balance: BigUint,
    pub reclaimed: bool,
    pub claimed: Vec<Address>,
}

impl From<&ClaimRegistry> for RegistryDocument {
    fn from(r: &ClaimRegistry) -> Self {
        RegistryDocument {
            root: r.root,
            deadline: r.deadline,
            total_allocated: r.total_allocated.clone(),
            total_claimed: r.total_claimed.clone(),
            distributor_balance: r.distributor_balance.clone(),
            reclaimed: r.reclaimed,
            claimed: r.claimed.iter().copied().collect(),
        }
    }
}

impl TryFrom<RegistryDocument> for ClaimRegistry {
    type Error = MerkleError;

    fn try_from(d: RegistryDocument) -> Result<Self, MerkleError> {
        let bad = |m: &str| MerkleError::Document(m.to_string());
        let claimed: BTreeSet<Address> = d.claimed.iter().copied().collect();
        if claimed.len() != d.claimed.len() {
            return Err(bad("claimed list has duplicates"));
        }
        if d.total_claimed > d.total_allocated {
            return Err(bad("claimed more than allocated"));
        }
        let unclaimed = &d.total_allocated - &d.total_claimed;
        if d.reclaimed {
            if d.distributor_balance != BigUint::default() {
                return Err(bad("reclaimed registry still holds a balance"));
            }
        } else if d.distributor_balance != unclaimed {
            return Err(bad("balance does not equal allocated minus claimed"));
        }
        Ok(ClaimRegistry {
            root: d.root,
            claimed,
            total_allocated: d.total_allocated,
            total_claimed: d.total_claimed,
            deadline: d.deadline,
            distributor_balance: d.distributor_balance,
            reclaimed: d.reclaimed,
        })
    }
}

impl ClaimRegistry {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&RegistryDocument::from(self))
            .expect("registries always serialize")
    }

    pub fn from_json(doc: &str) -> Result<Self, MerkleError> {
        let d: RegistryDocument =
            serde_json::from_str(doc).map_err(|e| MerkleError::Document(e.to_string()))?;
        d.try_into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LIST: &str = "\
0x1111111111111111111111111111111111111111,500
0x2222222222222222222222222222222222222222,250

0x3333333333333333333333333333333333333333,1
";

    #[test]
    fn recipient_list_round_trip() {
        let rs = parse_recipients(LIST).unwrap();
        assert_eq!(rs.len(), 3);
        assert_eq!(rs[0].amount, Amount::from(500));
        assert_eq!(parse_recipients(&format_recipients(&rs)).unwrap(), rs);
    }

    #[test]
    fn recipient_list_errors() {
        let cases = [
            ("0x1111111111111111111111111111111111111111\n", 1),
            ("0x11,5\n", 1),
            ("0x1111111111111111111111111111111111111111,5\n0xAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAA,1\n", 2),
            ("0x1111111111111111111111111111111111111111,-5\n", 1),
            ("0x1111111111111111111111111111111111111111,5\n\n0x1111111111111111111111111111111111111111,6\n", 3),
        ];
        for (doc, line) in cases {
            match parse_recipients(doc) {
                Err(MerkleError::Parse { line: l, .. }) => assert_eq!(l, line, "{doc}"),
                other => panic!("{doc}: {other:?}"),
            }
        }
        assert_eq!(parse_recipients("\n\n"), Err(MerkleError::Empty));
    }

    #[test]
    fn distribution_round_trip() {
        let dist = MerkleDistribution::build(parse_recipients(LIST).unwrap()).unwrap();
        let json = DistributionDocument::new(&dist).to_json();
        assert!(json.contains("\"root\""));
        let back = DistributionDocument::parse(&json).unwrap();
        assert_eq!(back, dist);
    }

    #[test]
    fn tampered_distribution_rejected() {
        let dist = MerkleDistribution::build(parse_recipients(LIST).unwrap()).unwrap();
        let mut doc = DistributionDocument::new(&dist);
        doc.proofs[1].amount = Amount::from(251);
        assert!(matches!(doc.rebuild(), Err(MerkleError::RootMismatch { .. })));

        let mut doc = DistributionDocument::new(&dist);
        doc.depth = 7;
        assert!(doc.rebuild().is_err());

        let mut doc = DistributionDocument::new(&dist);
        doc.proofs[0].siblings.pop();
        assert!(doc.rebuild().is_err());

        assert!(DistributionDocument::parse("{\"root\":\"0x00\",\"depth\":0,\"proofs\":[]}").is_err());
    }

    #[test]
    fn proof_entry_round_trip() {
        let dist = MerkleDistribution::build(parse_recipients(LIST).unwrap()).unwrap();
        let e = ProofEntry::new(&dist.recipients()[2], &dist.prove(2).unwrap());
        assert_eq!(ProofEntry::from_json(&e.to_json()).unwrap(), e);
        assert!(ProofEntry::from_json("{}").is_err());
    }

    #[test]
    fn registry_round_trip() {
        let dist = MerkleDistribution::build(parse_recipients(LIST).unwrap()).unwrap();
        let mut reg = ClaimRegistry::new(&dist, 100);
        reg.claim(&dist.recipients()[1], &dist.prove(1).unwrap(), 1).unwrap();
        let back = ClaimRegistry::from_json(&reg.to_json()).unwrap();
        assert_eq!(back, reg);

        let mut doc = RegistryDocument::from(&reg);
        doc.distributor_balance += 1u32;
        assert!(ClaimRegistry::try_from(doc).is_err());
    }
}
