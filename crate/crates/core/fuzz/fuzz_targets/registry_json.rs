#![no_main]

use airdrop_cost::merkle::ClaimRegistry;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(reg) = ClaimRegistry::from_json(text) {
        let again = ClaimRegistry::from_json(&reg.to_json()).expect("rendered registry reparses");
        assert_eq!(again, reg);
    }
});
