//! Seeded, trial-parallel estimation of mutual-information CDFs, outage
//! curves, diversity slopes and outage ratios.
//!
//! Trial `k` draws its channels from `stream(seed, Fading, k)`, so every
//! scheme sees the same realization (common random numbers) and results do
//! not depend on thread count. Trials are split into contiguous chunks whose
//! partial results are merged in index order.

use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capacity::{opt_sym_threshold, RateTarget, SchemeEvaluator, MAX_USERS};
use crate::channel::{draw_mac, ChannelDraw, FadingConfig};
use crate::combining::{DitherVector, Scheme};
use crate::rng::{stream, Domain};
use crate::{Error, Result};

/// Points with fewer outage events are flagged as low confidence.
pub const MIN_EVENTS: u64 = 100;

/// Trials per work unit.
pub const CHUNK: u64 = 1 << 13;

const WILSON_Z: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub snr_grid_db: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
    pub schemes: Vec<Scheme>,
    pub users: usize,
    pub antennas: usize,
    /// Target for the mutual information (one user) or symmetric
    /// capacity (several users), bits per complex symbol.
    pub rate: f64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::invalid("trials must be at least 1"));
        }
        if self.snr_grid_db.is_empty() {
            return Err(Error::invalid("SNR grid is empty"));
        }
        if self.snr_grid_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::invalid("SNR grid values must be finite"));
        }
        if self.schemes.is_empty() {
            return Err(Error::invalid("no schemes selected"));
        }
        if self.users == 0 || self.users > MAX_USERS {
            return Err(Error::invalid(format!("users must be in 1..={MAX_USERS}")));
        }
        FadingConfig::new(self.antennas, self.users, self.seed)?;
        RateTarget::new(self.rate)?;
        for s in &self.schemes {
            if !s.supports(self.antennas) {
                return Err(Error::invalid(format!(
                    "scheme {s} is not defined for {} receive antennas",
                    self.antennas
                )));
            }
            if matches!(s, Scheme::Ala4Dith | Scheme::Ala4Quasi) && self.users != 1 {
                return Err(Error::invalid(format!("{s} supports a single user only")));
            }
        }
        Ok(())
    }

    /// Linear transmit powers for the SNR grid.
    pub fn powers(&self) -> Vec<f64> {
        self.snr_grid_db.iter().map(|db| db_to_linear(*db)).collect()
    }

    pub fn dither(&self) -> DitherVector {
        DitherVector::random(&mut stream(self.seed, Domain::Dither, 0))
    }

    /// Channels of trial `k`.
    pub fn draw(&self, k: u64) -> Vec<ChannelDraw> {
        let cfg = FadingConfig::new(self.antennas, self.users, self.seed).expect("validated config");
        draw_mac(&cfg, &mut stream(self.seed, Domain::Fading, k))
    }

    fn evaluator(&self) -> Result<SchemeEvaluator> {
        SchemeEvaluator::new(self.antennas, &self.schemes, &self.dither())
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Runs `f` over contiguous trial ranges of [`CHUNK`] trials and returns the
/// partial results in index order.
pub fn map_trial_chunks<T, F>(trials: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<u64>) -> T + Sync + Send,
{
    let chunks = trials.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| f(c * CHUNK..((c + 1) * CHUNK).min(trials)))
        .collect()
}

/// Wilson score interval at 95% confidence.
pub fn wilson_interval(events: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = events as f64 / n;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = WILSON_Z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if events == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if events >= trials { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutagePoint {
    pub snr_db: f64,
    pub outage: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub events: u64,
    pub trials: u64,
    /// Fewer than [`MIN_EVENTS`] events.
    pub low_confidence: bool,
}

impl OutagePoint {
    pub fn from_counts(snr_db: f64, events: u64, trials: u64) -> Self {
        let (ci_lo, ci_hi) = wilson_interval(events, trials);
        OutagePoint {
            snr_db,
            outage: events as f64 / trials as f64,
            ci_lo,
            ci_hi,
            events,
            trials,
            low_confidence: events < MIN_EVENTS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutageCurve {
    pub scheme: Scheme,
    pub points: Vec<OutagePoint>,
}

/// Per-trial outage thresholds for every configured scheme.
fn thresholds(ev: &SchemeEvaluator, cfg: &SimConfig, users: &[ChannelDraw]) -> Result<Vec<f64>> {
    cfg.schemes
        .iter()
        .map(|&s| ev.threshold(s, users, cfg.rate))
        .collect()
}

/// Outage probability of each scheme over the SNR grid.
pub fn run_outage(config: &SimConfig) -> Result<Vec<OutageCurve>> {
    run_outage_with(config, |k| config.draw(k))
}

/// [`run_outage`] with a caller-supplied channel source (trial index to
/// channels).
pub fn run_outage_with<D>(config: &SimConfig, draw: D) -> Result<Vec<OutageCurve>>
where
    D: Fn(u64) -> Vec<ChannelDraw> + Sync + Send,
{
    config.validate()?;
    let ev = config.evaluator()?;
    let powers = config.powers();
    let (ns, ng) = (config.schemes.len(), powers.len());
    let partial = map_trial_chunks(config.trials, |range| -> Result<Vec<u64>> {
        let mut counts = vec![0u64; ns * ng];
        for k in range {
            let t = thresholds(&ev, config, &draw(k))?;
            for (s, ts) in t.iter().enumerate() {
                for (g, p) in powers.iter().enumerate() {
                    counts[s * ng + g] += (*p < *ts) as u64;
                }
            }
        }
        Ok(counts)
    });
    let mut counts = vec![0u64; ns * ng];
    for part in partial {
        for (c, v) in counts.iter_mut().zip(part?) {
            *c += v;
        }
    }
    Ok(config
        .schemes
        .iter()
        .enumerate()
        .map(|(s, &scheme)| OutageCurve {
            scheme,
            points: config
                .snr_grid_db
                .iter()
                .enumerate()
                .map(|(g, &db)| OutagePoint::from_counts(db, counts[s * ng + g], config.trials))
                .collect(),
        })
        .collect())
}

/// Number of (trial, SNR) pairs where `chain[i]` is in outage but
/// `chain[i + 1]` is not. `chain` lists schemes from strongest to weakest.
pub fn count_inclusion_violations(config: &SimConfig, chain: &[Scheme]) -> Result<u64> {
    let cfg = SimConfig {
        schemes: chain.to_vec(),
        ..config.clone()
    };
    cfg.validate()?;
    let ev = cfg.evaluator()?;
    let powers = cfg.powers();
    let partial = map_trial_chunks(cfg.trials, |range| -> Result<u64> {
        let mut bad = 0;
        for k in range {
            let t = thresholds(&ev, &cfg, &cfg.draw(k))?;
            for p in &powers {
                for w in t.windows(2) {
                    bad += (*p < w[0] && *p >= w[1]) as u64;
                }
            }
        }
        Ok(bad)
    });
    partial.into_iter().sum()
}

/// Empirical distribution of a per-trial metric.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CdfEstimate {
    pub scheme: Scheme,
    pub snr_db: f64,
    /// Sorted ascending.
    pub samples: Vec<f64>,
}

impl CdfEstimate {
    pub fn new(scheme: Scheme, snr_db: f64, mut samples: Vec<f64>) -> Self {
        samples.sort_by(f64::total_cmp);
        CdfEstimate {
            scheme,
            snr_db,
            samples,
        }
    }

    /// Fraction of samples `≤ x`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.samples.partition_point(|v| *v <= x) as f64 / self.samples.len() as f64
    }

    /// Smallest sample with empirical CDF `≥ q`.
    pub fn quantile(&self, q: f64) -> f64 {
        let n = self.samples.len();
        let idx = ((q * n as f64).ceil() as usize).clamp(1, n) - 1;
        self.samples[idx]
    }

    /// At most `max_knots` points `(value, cdf)` of the empirical CDF, at
    /// evenly spaced probabilities.
    pub fn knots(&self, max_knots: usize) -> Vec<(f64, f64)> {
        let n = self.samples.len();
        let k = max_knots.clamp(1, n);
        (1..=k)
            .map(|j| {
                let idx = (j * n).div_ceil(k) - 1;
                (self.samples[idx], (idx + 1) as f64 / n as f64)
            })
            .collect()
    }
}

/// Metric samples (mutual information or symmetric capacity) for each
/// scheme at each grid SNR.
pub fn run_cdf(config: &SimConfig) -> Result<Vec<CdfEstimate>> {
    run_cdf_with(config, |k| config.draw(k))
}

pub fn run_cdf_with<D>(config: &SimConfig, draw: D) -> Result<Vec<CdfEstimate>>
where
    D: Fn(u64) -> Vec<ChannelDraw> + Sync + Send,
{
    config.validate()?;
    let ev = config.evaluator()?;
    let powers = config.powers();
    let width = config.schemes.len() * powers.len();
    let partial = map_trial_chunks(config.trials, |range| -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(range.clone().count() * width);
        for k in range {
            let users = draw(k);
            for &s in &config.schemes {
                for &p in &powers {
                    out.push(ev.metric(s, &users, p)?);
                }
            }
        }
        Ok(out)
    });
    let mut columns = vec![Vec::with_capacity(config.trials as usize); width];
    for part in partial {
        for row in part?.chunks(width) {
            for (c, v) in columns.iter_mut().zip(row) {
                c.push(*v);
            }
        }
    }
    let ng = powers.len();
    Ok(columns
        .into_iter()
        .enumerate()
        .map(|(i, col)| CdfEstimate::new(config.schemes[i / ng], config.snr_grid_db[i % ng], col))
        .collect())
}

/// Least-squares slope of `log10(outage)` against `SNR(dB)/10` over the
/// points in `[lo_db, hi_db]` that carry at least [`MIN_EVENTS`] events.
pub fn fit_diversity_slope(curve: &OutageCurve, lo_db: f64, hi_db: f64) -> Result<f64> {
    let pts: Vec<(f64, f64)> = curve
        .points
        .iter()
        .filter(|p| p.snr_db >= lo_db && p.snr_db <= hi_db && !p.low_confidence && p.outage > 0.0)
        .map(|p| (p.snr_db / 10.0, p.outage.log10()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::InsufficientPoints {
            needed: 3,
            have: pts.len(),
        });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

/// SNR in dB at which the curve crosses `target`, interpolating
/// `log10(outage)` linearly in dB between the bracketing grid points.
pub fn snr_at_outage(curve: &OutageCurve, target: f64) -> Option<f64> {
    curve.points.windows(2).find_map(|w| {
        let (a, b) = (&w[0], &w[1]);
        if a.outage >= target && b.outage <= target && a.outage > 0.0 && b.outage > 0.0 {
            if a.outage == b.outage {
                return Some(a.snr_db);
            }
            let (la, lb, lt) = (a.outage.log10(), b.outage.log10(), target.log10());
            Some(a.snr_db + (la - lt) / (la - lb) * (b.snr_db - a.snr_db))
        } else {
            None
        }
    })
}

/// Horizontal distance in dB between two curves at outage `target`
/// (`curve` minus `reference`).
pub fn snr_gap(curve: &OutageCurve, reference: &OutageCurve, target: f64) -> Option<f64> {
    Some(snr_at_outage(curve, target)? - snr_at_outage(reference, target)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalRatio {
    pub snr_db: f64,
    pub ratio: f64,
    /// Conservative interval from the two Wilson intervals.
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub numerator_events: u64,
    pub denominator_events: u64,
    /// Denominator interval reaches zero: the ratio is undefined.
    pub flagged: bool,
}

impl EmpiricalRatio {
    fn from_counts(snr_db: f64, num: u64, den: u64, trials: u64) -> Self {
        let (nl, nh) = wilson_interval(num, trials);
        let (dl, dh) = wilson_interval(den, trials);
        let flagged = den == 0 || dl <= 0.0;
        EmpiricalRatio {
            snr_db,
            ratio: if den == 0 { f64::NAN } else { num as f64 / den as f64 },
            ci_lo: nl / dh,
            ci_hi: if flagged { f64::INFINITY } else { nh / dl },
            numerator_events: num,
            denominator_events: den,
            flagged,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioCurve {
    pub rate: f64,
    pub trials: u64,
    /// Universal two-antenna combiner over the optimal receiver.
    pub universal_vs_opt: Vec<EmpiricalRatio>,
    /// Optimal receiver at half power over the optimal receiver.
    pub half_power_vs_opt: Vec<EmpiricalRatio>,
}

/// Outage ratios in the two-user, two-antenna MAC. The scheme list of
/// `config` is ignored.
pub fn outage_ratio(config: &SimConfig) -> Result<RatioCurve> {
    if config.users != 2 || config.antennas != 2 {
        return Err(Error::invalid("outage ratio is defined for two users and two antennas"));
    }
    let cfg = SimConfig {
        schemes: vec![Scheme::Ala2],
        ..config.clone()
    };
    cfg.validate()?;
    let powers = cfg.powers();
    let ng = powers.len();
    let partial = map_trial_chunks(cfg.trials, |range| {
        // [opt(P), opt(P/2), universal(P)] per grid point.
        let mut c = vec![0u64; 3 * ng];
        for k in range {
            let users = cfg.draw(k);
            let t_opt = opt_sym_threshold(&users, cfg.rate);
            let g: Vec<f64> = users.iter().map(|u| u.norm_sqr() / 2.0).collect();
            let t_ala = crate::capacity::scalar_sym_threshold(&g, cfg.rate);
            for (i, p) in powers.iter().enumerate() {
                c[i] += (*p < t_opt) as u64;
                c[ng + i] += (*p < 2.0 * t_opt) as u64;
                c[2 * ng + i] += (*p < t_ala) as u64;
            }
        }
        c
    });
    let mut c = vec![0u64; 3 * ng];
    for part in partial {
        for (a, b) in c.iter_mut().zip(part) {
            *a += b;
        }
    }
    let build = |off: usize| -> Vec<EmpiricalRatio> {
        (0..ng)
            .map(|i| EmpiricalRatio::from_counts(cfg.snr_grid_db[i], c[off + i], c[i], cfg.trials))
            .collect()
    };
    Ok(RatioCurve {
        rate: cfg.rate,
        trials: cfg.trials,
        universal_vs_opt: build(2 * ng),
        half_power_vs_opt: build(ng),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Adjudication {
    pub snr_db: f64,
    pub ratio: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// Candidate limits inside `[ci_lo, ci_hi]`.
    pub matching: Vec<f64>,
}

/// Compares the ratio at the highest SNR with at least [`MIN_EVENTS`]
/// denominator events against candidate limits.
pub fn adjudicate(points: &[EmpiricalRatio], limits: &[f64]) -> Option<Adjudication> {
    let p = points
        .iter()
        .filter(|p| !p.flagged && p.denominator_events >= MIN_EVENTS)
        .max_by(|a, b| a.snr_db.total_cmp(&b.snr_db))?;
    Some(Adjudication {
        snr_db: p.snr_db,
        ratio: p.ratio,
        ci_lo: p.ci_lo,
        ci_hi: p.ci_hi,
        matching: limits
            .iter()
            .copied()
            .filter(|l| *l >= p.ci_lo && *l <= p.ci_hi)
            .collect(),
    })
}

/// `start, start+step, ...` up to and including `stop` (within rounding).
pub fn snr_grid(start: f64, step: f64, stop: f64) -> Result<Vec<f64>> {
    if !(start.is_finite() && step.is_finite() && stop.is_finite()) || step <= 0.0 || stop < start {
        return Err(Error::invalid("SNR grid needs finite start <= stop and step > 0"));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
    if n > 100_000 {
        return Err(Error::invalid("SNR grid has too many points"));
    }
    Ok((0..n).map(|i| start + i as f64 * step).collect())
}
