#![no_main]

use airdrop_cost::merkle::{format_recipients, parse_recipients, verify, MerkleDistribution};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(recipients) = parse_recipients(text) else { return };
    let again = parse_recipients(&format_recipients(&recipients)).expect("formatted list reparses");
    assert_eq!(again, recipients);
    let dist = MerkleDistribution::build(recipients).expect("parsed list builds");
    let root = dist.root();
    for (i, r) in dist.recipients().iter().enumerate() {
        assert!(verify(&root, r, &dist.prove(i).unwrap()));
    }
});
