#![no_main]

use airdrop_cost::gas_model::GasSchedule;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(s) = text.parse::<GasSchedule>() {
        let again: GasSchedule = s.to_string().parse().expect("rendered schedule reparses");
        assert_eq!(again, s);
    }
});
