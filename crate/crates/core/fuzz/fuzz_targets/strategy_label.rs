#![no_main]

use airdrop_cost::strategies::StrategyDescriptor;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(d) = text.parse::<StrategyDescriptor>() {
        let again: StrategyDescriptor = d.label().parse().expect("canonical label reparses");
        assert_eq!(again, d);
    }
});
