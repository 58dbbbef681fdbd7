#![no_main]

use airdrop_cost::fiat::parse_positive;
use airdrop_cost::merkle::{parse_digest, Address, Amount};
use airdrop_cost::scenario::{ExportFormat, NRange};
use airdrop_cost::strategies::{CentiGas, FillGrade};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(r) = text.parse::<NRange>() {
        assert_eq!(r.to_string().parse::<NRange>().unwrap(), r);
        assert!(r.len() <= NRange::MAX_POINTS);
    }
    if let Ok(g) = text.parse::<FillGrade>() {
        assert_eq!(g.to_string().parse::<FillGrade>().unwrap(), g);
    }
    if let Ok(c) = text.parse::<CentiGas>() {
        assert_eq!(c.to_string().parse::<CentiGas>().unwrap(), c);
    }
    if let Ok(a) = text.parse::<Address>() {
        assert_eq!(a.to_string().parse::<Address>().unwrap(), a);
    }
    if let Ok(a) = text.parse::<Amount>() {
        assert_eq!(a.to_string().parse::<Amount>().unwrap(), a);
    }
    let _ = text.parse::<ExportFormat>();
    let _ = parse_digest(text);
    let _ = parse_positive(text, "value");
});
