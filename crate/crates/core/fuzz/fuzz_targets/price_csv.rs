#![no_main]

use airdrop_cost::fiat::{export_prices, load_prices, moving_average};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(series) = load_prices(text) {
        let again = load_prices(&export_prices(&series)).expect("exported series reloads");
        assert_eq!(again, series);
        for window in 1..=series.len().min(4) {
            let _ = moving_average(&series, window, true);
            let _ = moving_average(&series, window, false);
        }
    }
});
