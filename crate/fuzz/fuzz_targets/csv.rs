#![no_main]
use libfuzzer_sys::fuzz_target;
use stcomb_cli::csvio::{parse_csv, to_csv_string, CdfRow, OutageRow, SerRow};

fuzz_target!(|text: &str| {
    // Whatever parses must write and parse back.
    if let Ok(rows) = parse_csv::<OutageRow>(text) {
        let again = parse_csv::<OutageRow>(&to_csv_string(&rows).unwrap()).unwrap();
        assert_eq!(rows.len(), again.len());
    }
    let _ = parse_csv::<CdfRow>(text);
    let _ = parse_csv::<SerRow>(text);
});
