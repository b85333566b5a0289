//! Runs a resolved configuration and writes its CSV and plot script.

use std::fmt::Write as _;
use std::path::Path;

use stcomb::capacity::theorem1_asymptotics;
use stcomb::combining::Scheme;
use stcomb::montecarlo::{
    adjudicate, db_to_linear, fit_diversity_slope, run_cdf, run_outage, snr_at_outage, OutageCurve, RatioCurve,
    SimConfig,
};
use stcomb::relaysim::{self, RelayConfig};
use stcomb::selftest::{run_all, SuiteSizes};
use stcomb::subnyquist::{self, SubnyquistConfig};

use crate::csvio::{
    write_csv, CdfRow, CheckRow, Flag, OutageRow, PulseRow, RatioRow, ReceiverRow, SerRow,
};
use crate::error::CliError;
use crate::plot;
use crate::settings::{AsymptoticsConfig, RunConfig, SelftestConfig};

/// Files written (relative to the output directory) and a text summary.
#[derive(Debug, Default)]
pub struct Report {
    pub outputs: Vec<String>,
    pub summary: String,
    /// Failed self-test checks.
    pub failures: usize,
}

impl Report {
    fn file(&mut self, dir: &Path, name: &str, text: &str) -> Result<(), CliError> {
        let path = dir.join(name);
        std::fs::write(&path, text).map_err(|e| CliError::io(path, e))?;
        self.outputs.push(name.to_string());
        Ok(())
    }
}

pub const CDF_KNOTS: usize = 1000;
pub const SLOPE_FROM_OUTAGE: f64 = 0.1;

pub fn execute(cfg: &RunConfig, dir: &Path) -> Result<Report, CliError> {
    match cfg {
        RunConfig::Cdf(c) => cdf(c, dir),
        RunConfig::Outage(c) | RunConfig::MacOutage(c) => outage(c, dir, cfg.subcommand()),
        RunConfig::RelaySer(c) => relay_ser(c, dir),
        RunConfig::Subnyquist(c) => subnyquist_ser(c, dir),
        RunConfig::Asymptotics(c) => asymptotics(c, dir),
        RunConfig::Selftest(c) => selftest(c, dir),
    }
}

fn names<T: ToString>(items: &[T]) -> Vec<String> {
    items.iter().map(ToString::to_string).collect()
}

fn fmt_db(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |d| format!("{d:.2}"))
}

pub fn outage_rows(curves: &[OutageCurve]) -> Vec<OutageRow> {
    curves
        .iter()
        .flat_map(|c| {
            c.points.iter().map(move |p| OutageRow {
                snr_db: p.snr_db,
                scheme: c.scheme,
                outage: p.outage,
                ci_lo: p.ci_lo,
                ci_hi: p.ci_hi,
                trials: p.trials,
                flag: Flag::from_low(p.low_confidence),
            })
        })
        .collect()
}

fn outage(c: &SimConfig, dir: &Path, name: &str) -> Result<Report, CliError> {
    let curves = run_outage(c)?;
    let mut r = Report::default();
    let csv = format!("{name}.csv");
    write_csv(&outage_rows(&curves), &dir.join(&csv))?;
    r.outputs.push(csv.clone());
    r.file(dir, "plot.gp", &plot::outage(&csv, &names(&c.schemes)))?;

    let reference = curves.iter().find(|k| k.scheme == Scheme::Mrc);
    let hi = c.snr_grid_db.last().copied().unwrap_or(0.0);
    let _ = writeln!(r.summary, "{:<11} {:>14} {:>12} {:>8}", "scheme", "SNR@1e-2 [dB]", "gap to mrc", "slope");
    for k in &curves {
        let at = snr_at_outage(k, 1e-2);
        let gap = reference.and_then(|m| Some(at? - snr_at_outage(m, 1e-2)?));
        // High-SNR regime: from the first point at or below the threshold;
        // low-event points drop out of the fit.
        let lo = k
            .points
            .iter()
            .find(|p| p.outage <= SLOPE_FROM_OUTAGE)
            .map_or(hi, |p| p.snr_db);
        let slope = fit_diversity_slope(k, lo, hi)
            .map(|s| format!("{s:.2}"))
            .unwrap_or_else(|_| "-".into());
        let _ = writeln!(r.summary, "{:<11} {:>14} {:>12} {:>8}", k.scheme, fmt_db(at), fmt_db(gap), slope);
    }
    Ok(r)
}

fn cdf(c: &SimConfig, dir: &Path) -> Result<Report, CliError> {
    let est = run_cdf(c)?;
    let rows: Vec<CdfRow> = est
        .iter()
        .flat_map(|e| {
            e.knots(CDF_KNOTS).into_iter().map(move |(value, cdf)| CdfRow {
                snr_db: e.snr_db,
                scheme: e.scheme,
                value,
                cdf,
            })
        })
        .collect();
    let mut r = Report::default();
    write_csv(&rows, &dir.join("cdf.csv"))?;
    r.outputs.push("cdf.csv".into());
    r.file(dir, "plot.gp", &plot::cdf("cdf.csv", &names(&c.schemes)))?;
    let _ = writeln!(r.summary, "{:<11} {:>7} {:>8} {:>8} {:>8} {:>8}", "scheme", "snr_db", "q01", "q05", "q10", "q50");
    for e in &est {
        let _ = writeln!(
            r.summary,
            "{:<11} {:>7} {:>8.4} {:>8.4} {:>8.4} {:>8.4}",
            e.scheme,
            e.snr_db,
            e.quantile(0.01),
            e.quantile(0.05),
            e.quantile(0.10),
            e.quantile(0.50)
        );
    }
    Ok(r)
}

fn relay_ser(c: &RelayConfig, dir: &Path) -> Result<Report, CliError> {
    let pts = relaysim::run_ser(c)?;
    let rows: Vec<SerRow> = pts
        .iter()
        .map(|p| SerRow {
            snr_db: p.snr_db,
            scheme: p.scheme,
            bits: p.bits,
            ser: p.ser,
            ci_lo: p.ci_lo,
            ci_hi: p.ci_hi,
            errors: p.errors,
            symbols: p.symbols,
        })
        .collect();
    let mut r = Report::default();
    write_csv(&rows, &dir.join("relay-ser.csv"))?;
    r.outputs.push("relay-ser.csv".into());
    let series: Vec<(String, String)> = c
        .schemes
        .iter()
        .flat_map(|s| c.bits.iter().map(move |b| (s.to_string(), b.to_string())))
        .collect();
    r.file(dir, "plot.gp", &plot::relay_ser("relay-ser.csv", &series))?;
    let _ = writeln!(r.summary, "{:<15} {:>5} {:>15}", "scheme", "bits", "SNR@1e-3 [dB]");
    for s in &c.schemes {
        for b in &c.bits {
            let line: Vec<_> = pts.iter().filter(|p| p.scheme == *s && p.bits == *b).cloned().collect();
            let _ = writeln!(
                r.summary,
                "{:<15} {:>5} {:>15}",
                s,
                b,
                fmt_db(relaysim::snr_at_ser(&line, 1e-3))
            );
        }
    }
    Ok(r)
}

fn subnyquist_ser(c: &SubnyquistConfig, dir: &Path) -> Result<Report, CliError> {
    let pts = subnyquist::run_ser(c)?;
    let rows: Vec<ReceiverRow> = pts
        .iter()
        .map(|p| ReceiverRow {
            snr_db: p.snr_db,
            receiver: p.receiver,
            ser: p.ser,
            ci_lo: p.ci_lo,
            ci_hi: p.ci_hi,
            errors: p.errors,
            symbols: p.symbols,
            samples_per_symbol: p.samples_per_symbol,
        })
        .collect();
    let dict = c.dictionary()?;
    let pulses: Vec<PulseRow> = dict
        .pulses
        .iter()
        .enumerate()
        .flat_map(|(i, p)| {
            p.coeffs().iter().enumerate().map(move |(t, h)| PulseRow {
                pulse: i,
                tap: t,
                re: h.re,
                im: h.im,
                magnitude: h.norm(),
            })
        })
        .collect();
    let mut r = Report::default();
    write_csv(&rows, &dir.join("subnyquist.csv"))?;
    write_csv(&pulses, &dir.join("dictionary.csv"))?;
    r.outputs.push("subnyquist.csv".into());
    r.outputs.push("dictionary.csv".into());
    r.file(
        dir,
        "plot.gp",
        &plot::subnyquist("subnyquist.csv", &names(&c.receivers), "dictionary.csv"),
    )?;
    let _ = writeln!(r.summary, "{:<15} {:>16} {:>15}", "receiver", "samples/symbol", "SNR@1e-3 [dB]");
    for rx in &c.receivers {
        let line: Vec<(f64, f64)> = pts
            .iter()
            .filter(|p| p.receiver == *rx)
            .map(|p| (p.snr_db, p.ser))
            .collect();
        let sps = pts.iter().find(|p| p.receiver == *rx).map_or(0.0, |p| p.samples_per_symbol);
        let _ = writeln!(r.summary, "{:<15} {:>16} {:>15}", rx, sps, fmt_db(crossing(&line, 1e-3)));
    }
    Ok(r)
}

/// SNR where a decreasing error curve crosses `target`, interpolating the
/// log error linearly in dB.
fn crossing(points: &[(f64, f64)], target: f64) -> Option<f64> {
    points.windows(2).find_map(|w| {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        (y0 >= target && y1 <= target && y1 > 0.0 && y0 > y1).then(|| {
            let (l0, l1, lt) = (y0.log10(), y1.log10(), target.log10());
            x0 + (x1 - x0) * (l0 - lt) / (l0 - l1)
        })
    })
}

pub fn ratio_rows(c: &AsymptoticsConfig, curve: &RatioCurve) -> Vec<RatioRow> {
    let powers: Vec<f64> = c.snr_grid_db.iter().map(|d| db_to_linear(*d)).collect();
    let pred = theorem1_asymptotics(c.rate, &powers);
    let mut rows = Vec::new();
    for conv in &pred.conventions {
        for (p, snr_db) in conv.points.iter().zip(&c.snr_grid_db) {
            rows.push(RatioRow {
                series: format!("predicted-exp{}", conv.convention.exponent()),
                snr_db: *snr_db,
                ratio: p.single_user_ratio,
                lo: p.lower,
                hi: p.upper,
                flag: Flag::Ok,
            });
        }
    }
    for (series, pts) in [
        ("universal-vs-opt", &curve.universal_vs_opt),
        ("half-power-vs-opt", &curve.half_power_vs_opt),
    ] {
        for p in pts {
            rows.push(RatioRow {
                series: series.into(),
                snr_db: p.snr_db,
                ratio: p.ratio,
                lo: p.ci_lo,
                hi: p.ci_hi,
                flag: Flag::from_low(p.flagged || p.denominator_events < stcomb::montecarlo::MIN_EVENTS),
            });
        }
    }
    rows
}

pub fn ratio_config(c: &AsymptoticsConfig) -> SimConfig {
    SimConfig {
        snr_grid_db: c.snr_grid_db.clone(),
        trials: c.trials,
        seed: c.seed,
        schemes: vec![Scheme::Ala2],
        users: 2,
        antennas: 2,
        rate: c.rate,
    }
}

fn asymptotics(c: &AsymptoticsConfig, dir: &Path) -> Result<Report, CliError> {
    let curve = stcomb::montecarlo::outage_ratio(&ratio_config(c))?;
    let rows = ratio_rows(c, &curve);
    let mut r = Report::default();
    write_csv(&rows, &dir.join("asymptotics.csv"))?;
    r.outputs.push("asymptotics.csv".into());
    r.file(dir, "plot.gp", &plot::asymptotics("asymptotics.csv"))?;

    let limits = theorem1_asymptotics(c.rate, &[]).limits();
    let _ = writeln!(r.summary, "predicted limits: {limits:?}");
    let _ = writeln!(
        r.summary,
        "{:>7} {:>10} {:>21} {:>10} {:>21}",
        "snr_db", "ala2/opt", "95% CI", "half/opt", "95% CI"
    );
    for (u, h) in curve.universal_vs_opt.iter().zip(&curve.half_power_vs_opt) {
        let _ = writeln!(
            r.summary,
            "{:>7} {:>10.3} [{:>8.3}, {:>9.3}] {:>10.3} [{:>8.3}, {:>9.3}]",
            u.snr_db, u.ratio, u.ci_lo, u.ci_hi, h.ratio, h.ci_lo, h.ci_hi
        );
    }
    for (label, pts) in [("ala2/opt", &curve.universal_vs_opt), ("half/opt", &curve.half_power_vs_opt)] {
        match adjudicate(pts, &limits) {
            Some(a) => {
                let _ = writeln!(
                    r.summary,
                    "{label} at {} dB: {:.3} in [{:.3}, {:.3}], matching limits {:?}",
                    a.snr_db, a.ratio, a.ci_lo, a.ci_hi, a.matching
                );
            }
            None => {
                let _ = writeln!(r.summary, "{label}: no point with enough events");
            }
        }
    }
    Ok(r)
}

fn selftest(c: &SelftestConfig, dir: &Path) -> Result<Report, CliError> {
    let sizes = if c.full { SuiteSizes::FULL } else { SuiteSizes::QUICK };
    let checks = run_all(sizes, c.seed)?;
    let rows: Vec<CheckRow> = checks
        .iter()
        .map(|k| CheckRow {
            suite: k.suite.to_string(),
            check: k.name.clone(),
            passed: k.passed,
            value: k.value,
        })
        .collect();
    let mut r = Report::default();
    write_csv(&rows, &dir.join("selftest.csv"))?;
    r.outputs.push("selftest.csv".into());
    r.file(dir, "plot.gp", &plot::selftest("selftest.csv"))?;
    for k in &checks {
        let _ = writeln!(r.summary, "{k}");
    }
    r.failures = checks.iter().filter(|k| !k.passed).count();
    let _ = writeln!(r.summary, "{} of {} checks passed", checks.len() - r.failures, checks.len());
    Ok(r)
}
