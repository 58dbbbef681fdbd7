#![no_main]

use airdrop_cost::merkle::{verify, DistributionDocument};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(dist) = DistributionDocument::parse(text) {
        let root = dist.root();
        for (i, r) in dist.recipients().iter().enumerate() {
            assert!(verify(&root, r, &dist.prove(i).unwrap()));
        }
    }
});
