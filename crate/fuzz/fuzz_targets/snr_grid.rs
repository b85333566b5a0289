#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    if let Ok(grid) = stcomb_cli::settings::parse_snr_grid(text) {
        assert!(!grid.is_empty());
        assert!(grid.iter().all(|x| x.is_finite()));
    }
});
