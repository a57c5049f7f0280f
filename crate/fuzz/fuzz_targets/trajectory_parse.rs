#![no_main]

use ecmsim::io::{parse_trajectories, trajectories_to_csv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    if let Ok(trajs) = parse_trajectories(text) {
        // A header-only file carries no trajectory to render from.
        if trajs.is_empty() {
            return;
        }
        let csv = trajectories_to_csv(&trajs, &[]).expect("parsed trajectories render");
        let again = parse_trajectories(&csv).expect("rendered csv parses");
        assert_eq!(again.len(), trajs.len());
    }
});
