use std::path::Path;
use std::process::Command as Process;

use clap::Parser;
use proptest::prelude::*;
use stcomb::combining::Scheme;
use stcomb_cli::csvio::{parse_csv, to_csv_string, write_csv, Flag, OutageRow, Record, RatioRow, SerRow};
use stcomb_cli::manifest::{load_manifest, Manifest};
use stcomb_cli::settings::{parse_config, parse_snr_grid, RunConfig};
use stcomb_cli::{main_with_args, resolve_command, run, Cli, EXIT_RUNTIME, EXIT_USAGE};

fn cli(args: &[&str]) -> Cli {
    Cli::try_parse_from(std::iter::once("stcomb").chain(args.iter().copied())).unwrap()
}

fn code(args: &[&str]) -> i32 {
    main_with_args(std::iter::once("stcomb").chain(args.iter().copied()), None)
}

fn read(p: &Path) -> Vec<u8> {
    std::fs::read(p).unwrap()
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

#[test]
fn outage_csv_schema() {
    let tmp = tempfile::tempdir().unwrap();
    let out = out_arg(&tmp.path().join("o"));
    let args = [
        "outage", "--m", "2", "--users", "1", "--rate", "2", "--snr", "0:2:30", "--trials", "20000", "--seed", "7",
        "--out", &out,
    ];
    assert_eq!(code(&args), 0);
    let text = std::fs::read_to_string(Path::new(&out).join("outage.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "snr_db,scheme,outage,ci_lo,ci_hi,trials,flag");
    let rows: Vec<OutageRow> = parse_csv(&text).unwrap();
    assert_eq!(rows.len(), 16 * 4);
    assert!(rows.iter().all(|r| r.trials == 20_000 && r.ci_lo <= r.outage && r.outage <= r.ci_hi));
    assert!(rows.iter().any(|r| r.flag == Flag::LowEvents));
    assert!(!text.contains('"') && !text.contains('\r'));
    let plot = std::fs::read_to_string(Path::new(&out).join("plot.gp")).unwrap();
    assert!(plot.contains("'outage.csv'"));
    let m = load_manifest(&Path::new(&out).join("manifest.json")).unwrap();
    assert_eq!((m.subcommand.as_str(), m.seed), ("outage", 7));
    assert_eq!(m.outputs, vec!["outage.csv", "plot.gp", "manifest.json"]);
}

/// Runs `args`, re-runs from the manifest into a second directory, and
/// compares every CSV byte for byte.
fn assert_manifest_rerun(args: &[&str]) {
    let tmp = tempfile::tempdir().unwrap();
    let a = out_arg(&tmp.path().join("a"));
    let b = out_arg(&tmp.path().join("b"));
    let mut first: Vec<&str> = args.to_vec();
    first.extend(["--out", &a]);
    let o1 = run(&cli(&first), None).unwrap();
    let manifest = Path::new(&a).join("manifest.json");
    let m = manifest.to_str().unwrap();
    let o2 = run(&cli(&[args[0], "--manifest", m, "--out", &b, "--threads", "3"]), None).unwrap();
    assert_eq!(o1.config, o2.config);
    let csvs: Vec<_> = o1.report.outputs.iter().filter(|f| f.ends_with(".csv")).collect();
    assert!(!csvs.is_empty());
    for f in csvs {
        assert_eq!(read(&Path::new(&a).join(f)), read(&Path::new(&b).join(f)), "{f}");
    }
}

#[test]
fn manifest_rerun_is_byte_identical_for_every_subcommand() {
    assert_manifest_rerun(&["outage", "--trials", "5000", "--snr", "0:5:20", "--seed", "3"]);
    assert_manifest_rerun(&["mac-outage", "--trials", "3000", "--snr", "0:5:20", "--users", "3"]);
    assert_manifest_rerun(&["cdf", "--trials", "3000", "--m", "4"]);
    assert_manifest_rerun(&["relay-ser", "--trials", "300", "--snr", "10:10:30", "--bits", "4,inf"]);
    assert_manifest_rerun(&["subnyquist", "--frames", "200", "--snr", "0:10:20", "--quant-bits", "6"]);
    assert_manifest_rerun(&["asymptotics", "--trials", "5000", "--snr", "10:10:30"]);
    assert_manifest_rerun(&["selftest"]);
}

#[test]
fn thread_count_does_not_change_results() {
    let tmp = tempfile::tempdir().unwrap();
    let mut outs = Vec::new();
    for t in ["1", "4"] {
        let out = out_arg(&tmp.path().join(t));
        let args = ["outage", "--trials", "40000", "--snr", "0:4:20", "--threads", t, "--out", &out];
        run(&cli(&args), None).unwrap();
        outs.push(read(&Path::new(&out).join("outage.csv")));
    }
    assert_eq!(outs[0], outs[1]);
}

#[test]
fn precedence_flags_config_env_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.toml");
    std::fs::write(&cfg, "seed = 11\ntrials = 500\nsnr = \"0:1:3\"\n").unwrap();
    let c = cfg.to_str().unwrap();

    let seed = |cfg: RunConfig| cfg.seed();
    assert_eq!(seed(resolve_command(&cli(&["outage"]).command, None).unwrap()), 1);
    assert_eq!(seed(resolve_command(&cli(&["outage"]).command, Some("5")).unwrap()), 5);
    assert_eq!(seed(resolve_command(&cli(&["outage", "--config", c]).command, Some("5")).unwrap()), 11);
    assert_eq!(
        seed(resolve_command(&cli(&["outage", "--config", c, "--seed", "9"]).command, Some("5")).unwrap()),
        9
    );
    match resolve_command(&cli(&["outage", "--config", c, "--trials", "7"]).command, None).unwrap() {
        RunConfig::Outage(s) => {
            assert_eq!(s.trials, 7);
            assert_eq!(s.snr_grid_db, vec![0.0, 1.0, 2.0, 3.0]);
            assert_eq!(s.schemes, vec![Scheme::Mrc, Scheme::Sc, Scheme::Single, Scheme::Ala2]);
        }
        other => panic!("{other:?}"),
    }
    assert!(resolve_command(&cli(&["outage"]).command, Some("x")).is_err());
}

#[test]
fn usage_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = out_arg(&tmp.path().join("o"));
    assert_eq!(code(&["outage", "--bogus"]), EXIT_USAGE);
    assert_eq!(code(&["frobnicate"]), EXIT_USAGE);
    assert_eq!(code(&["outage", "--snr", "5:1", "--out", &out]), EXIT_USAGE);
    assert_eq!(code(&["outage", "--m", "3", "--out", &out]), EXIT_USAGE);
    assert_eq!(code(&["outage", "--trials", "0", "--out", &out]), EXIT_USAGE);
    assert_eq!(code(&["outage", "--schemes", "mrc,zf", "--out", &out]), EXIT_USAGE);
    assert_eq!(code(&["relay-ser", "--bits", "1", "--out", &out]), EXIT_USAGE);
    assert_eq!(code(&["subnyquist", "--symbols", "6", "--out", &out]), EXIT_USAGE);
    assert_eq!(code(&["outage", "--config", "/nonexistent/c.toml"]), EXIT_USAGE);
    let bad = tmp.path().join("bad.toml");
    std::fs::write(&bad, "sead = 3\n").unwrap();
    assert_eq!(code(&["outage", "--config", bad.to_str().unwrap()]), EXIT_USAGE);
    assert_eq!(code(&["--help"]), 0);
}

#[test]
fn manifest_misuse_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = out_arg(&tmp.path().join("o"));
    assert_eq!(code(&["outage", "--trials", "100", "--snr", "0", "--out", &out]), 0);
    let m = Path::new(&out).join("manifest.json");
    let m = m.to_str().unwrap();
    assert_eq!(code(&["cdf", "--manifest", m]), EXIT_USAGE);
    assert_eq!(code(&["outage", "--manifest", m, "--trials", "5"]), EXIT_USAGE);
    std::fs::write(m, "{}").unwrap();
    assert_eq!(code(&["outage", "--manifest", m]), EXIT_USAGE);
}

#[test]
fn unwritable_output_is_a_runtime_error() {
    let tmp = tempfile::tempdir().unwrap();
    let file = tmp.path().join("f");
    std::fs::write(&file, "x").unwrap();
    let out = out_arg(&file.join("sub"));
    assert_eq!(code(&["outage", "--trials", "10", "--snr", "0", "--out", &out]), EXIT_RUNTIME);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_stcomb");
    let tmp = tempfile::tempdir().unwrap();
    let status = Process::new(bin)
        .args(["outage", "--trials", "100", "--snr", "0"])
        .arg("--out")
        .arg(tmp.path().join("o"))
        .env("STCOMB_SEED", "4")
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let m = load_manifest(&tmp.path().join("o/manifest.json")).unwrap();
    assert_eq!(m.seed, 4);
    let status = Process::new(bin).arg("outage").arg("--nope").status().unwrap();
    assert_eq!(status.code(), Some(EXIT_USAGE));
}

#[test]
fn snr_grid_parsing() {
    assert_eq!(parse_snr_grid("0:2:6").unwrap(), vec![0.0, 2.0, 4.0, 6.0]);
    assert_eq!(parse_snr_grid(" 3 ").unwrap(), vec![3.0]);
    assert_eq!(parse_snr_grid("0:0.5:1").unwrap(), vec![0.0, 0.5, 1.0]);
    for bad in ["", "a", "1:2", "0:0:5", "5:1:0", "1:2:3:4", "nan", "0:inf:1"] {
        assert!(parse_snr_grid(bad).is_err(), "{bad}");
    }
}

#[test]
fn config_parsing() {
    let c = parse_config("m = 4\nbits = [4, \"inf\"]\nschemes = [\"mrc\"]\n").unwrap();
    assert_eq!(c.m, Some(4));
    assert_eq!(c.bits.unwrap().len(), 2);
    assert!(parse_config("m = \"two\"\n").is_err());
    assert!(parse_config("unknown = 1\n").is_err());
}

#[test]
fn manifest_parsing() {
    let tmp = tempfile::tempdir().unwrap();
    let out = out_arg(&tmp.path().join("o"));
    run(&cli(&["subnyquist", "--frames", "10", "--snr", "0", "--out", &out]), None).unwrap();
    let text = std::fs::read_to_string(Path::new(&out).join("manifest.json")).unwrap();
    let m = Manifest::parse(&text).unwrap();
    assert_eq!(Manifest::parse(&m.to_json()).unwrap(), m);
    let tampered = text.replacen("\"seed\": 1,\n  \"version\"", "\"seed\": 2,\n  \"version\"", 1);
    assert_ne!(tampered, text);
    assert!(Manifest::parse(&tampered).is_err());
    assert!(Manifest::parse("not json").is_err());
}

#[test]
fn empty_records_write_header_only() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path().join("e.csv");
    write_csv::<SerRow>(&[], &p).unwrap();
    assert_eq!(
        std::fs::read_to_string(&p).unwrap(),
        format!("{}\n", SerRow::HEADER.join(","))
    );
    assert!(parse_csv::<SerRow>(&std::fs::read_to_string(&p).unwrap()).unwrap().is_empty());
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![-1e6f64..1e6, 0.0f64..1e-12, Just(0.0), Just(1.0)]
}

proptest! {
    #[test]
    fn outage_rows_round_trip(
        rows in prop::collection::vec(
            (finite(), 0usize..6, finite(), finite(), finite(), any::<u64>(), any::<bool>()),
            0..20,
        )
    ) {
        let rows: Vec<OutageRow> = rows
            .into_iter()
            .map(|(snr_db, s, outage, ci_lo, ci_hi, trials, low)| OutageRow {
                snr_db,
                scheme: Scheme::ALL[s],
                outage,
                ci_lo,
                ci_hi,
                trials,
                flag: Flag::from_low(low),
            })
            .collect();
        let text = to_csv_string(&rows).unwrap();
        prop_assert_eq!(parse_csv::<OutageRow>(&text).unwrap(), rows.clone());
        prop_assert_eq!(to_csv_string(&rows).unwrap(), text);
    }

    #[test]
    fn ratio_rows_round_trip(v in finite(), lo in finite(), snr in finite()) {
        let rows = vec![RatioRow { series: "universal-vs-opt".into(), snr_db: snr, ratio: v, lo, hi: f64::INFINITY, flag: Flag::Ok }];
        let back = parse_csv::<RatioRow>(&to_csv_string(&rows).unwrap()).unwrap();
        prop_assert_eq!(back, rows);
    }
}
