#![no_main]

use airdrop_cost::strategies::CalibrationTable;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(t) = text.parse::<CalibrationTable>() {
        let again: CalibrationTable = t.to_string().parse().expect("rendered table reparses");
        assert_eq!(again, t);
    }
});
