#![no_main]

use airdrop_cost::gas_model::GasSchedule;
use airdrop_cost::strategies::{calibrate_targets, parse_targets};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(targets) = parse_targets(text) {
        let _ = calibrate_targets(&targets, 1000, &GasSchedule::default());
    }
});
