#![no_main]

use ecmsim::schedule::{format_schedule, parse_schedule};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    // First two bytes pick the target length; keep it small so repeats stay cheap.
    if data.len() < 2 {
        return;
    }
    let length = usize::from(u16::from_le_bytes([data[0], data[1]]) % 4096);
    let Ok(pattern) = std::str::from_utf8(&data[2..]) else {
        return;
    };
    if let Ok(s) = parse_schedule(pattern, length) {
        assert_eq!(s.len(), length);
        let again = parse_schedule(&format_schedule(&s), length).expect("formatted schedule parses");
        assert_eq!(again, s);
    }
});
