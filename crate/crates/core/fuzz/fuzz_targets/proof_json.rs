#![no_main]

use airdrop_cost::merkle::{verify, ProofEntry};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(entry) = ProofEntry::from_json(text) {
        let again = ProofEntry::from_json(&entry.to_json()).expect("rendered entry reparses");
        assert_eq!(again, entry);
        let _ = verify(&[0u8; 32], &entry.recipient(), &entry.proof());
    }
});
