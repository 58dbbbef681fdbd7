#![no_main]

use airdrop_cost::scenario::{export_rows, parse_rows, ExportFormat};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(rows) = parse_rows(text) {
        let again = parse_rows(&export_rows(&rows, ExportFormat::Table)).expect("exported rows reparse");
        assert_eq!(again, rows);
    }
});
