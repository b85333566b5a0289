#![no_main]
use libfuzzer_sys::fuzz_target;
use stcomb_cli::manifest::Manifest;

fuzz_target!(|text: &str| {
    if let Ok(m) = Manifest::parse(text) {
        Manifest::parse(&m.to_json()).expect("a parsed manifest re-parses");
    }
});
