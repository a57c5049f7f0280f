#![no_main]

use ecmsim::io::{parse_config, parse_document};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    let doc = parse_document(text);
    if let Ok(cfg) = parse_config(text) {
        assert!(doc.is_ok());
        assert_eq!(cfg.to_document().statuses.len(), cfg.model.statuses().len());
    }
});
