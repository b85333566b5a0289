//! Invariant suites shared by the `selftest` subcommand and the acceptance
//! tests. Each suite takes its sample sizes so the CLI can run a quick pass
//! and the acceptance target the full one.

use std::fmt;

use nalgebra::DVector;
use rand::Rng;
use serde::Serialize;

use crate::channel::{draw_simo, transmit_simo, ChannelDraw, FadingConfig, NoiseSpec};
use crate::combining::{
    build_p2, build_p4_dither, build_p4_quasi, build_u2, combine, eff_gain, CombinerMatrix, CombinerModel,
    DitherVector, Scheme,
};
use crate::montecarlo::{db_to_linear, map_trial_chunks, wilson_interval};
use crate::qam::{qam16_demap, qam16_point, qam16_ser_awgn};
use crate::quantize::{quantize, QuantizerSpec};
use crate::realrep::{stack_received, stack_source};
use crate::rng::{stream, Domain, StreamRng};
use crate::subnyquist::{
    gen_dictionary, matched_filter_receive, modulate, tap_selection_receive, UniversalFrontEnd, BLOCK,
    SAMPLES_PER_BLOCK, TAPS,
};
use crate::{Complex64, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub suite: &'static str,
    pub name: String,
    pub passed: bool,
    /// Measured quantity the verdict is based on.
    pub value: f64,
    pub detail: String,
}

impl Check {
    fn new(suite: &'static str, name: impl Into<String>, passed: bool, value: f64, detail: impl Into<String>) -> Self {
        Check {
            suite,
            name: name.into(),
            passed,
            value,
            detail: detail.into(),
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<4} {:<12} {:<40} {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.suite,
            self.name,
            self.detail
        )
    }
}

/// Sample sizes for one pass over all suites.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SuiteSizes {
    pub channels: u64,
    pub factorization: u64,
    pub noise_blocks: u64,
    pub ordering: u64,
    pub quantizer_samples: u64,
    pub qam_symbols: u64,
}

impl SuiteSizes {
    pub const FULL: SuiteSizes = SuiteSizes {
        channels: 10_000,
        factorization: 1_000,
        noise_blocks: 1_000_000,
        ordering: 1_000_000,
        quantizer_samples: 1_000_000,
        qam_symbols: 1_000_000,
    };

    pub const QUICK: SuiteSizes = SuiteSizes {
        channels: 1_000,
        factorization: 200,
        noise_blocks: 100_000,
        ordering: 100_000,
        quantizer_samples: 200_000,
        qam_symbols: 200_000,
    };
}

/// Fixed combiners have orthonormal rows; `U2` is orthogonal and the dither
/// branches stay orthonormal for random phase vectors.
pub fn orthonormality(channels: u64, seed: u64) -> Vec<Check> {
    const SUITE: &str = "combining";
    let tol = 1e-10;
    let mut out = Vec::new();
    for (name, p) in [("P2 rows", build_p2()), ("P4 quasi rows", build_p4_quasi())] {
        let e = p.row_orthonormality_error();
        out.push(Check::new(SUITE, name, e < tol, e, format!("max |PPᵀ-I| = {e:.2e}")));
    }
    let cfg = FadingConfig::new(2, 1, seed).expect("two antennas are supported");
    let worst = |f: &(dyn Fn(&mut StreamRng) -> f64 + Sync)| {
        map_trial_chunks(channels, |r| {
            r.map(|k| f(&mut stream(seed, Domain::Test, k)))
                .fold(0.0f64, f64::max)
        })
        .into_iter()
        .fold(0.0f64, f64::max)
    };
    let dith = worst(&|rng| {
        let (a, b) = build_p4_dither(&DitherVector::random(rng));
        a.row_orthonormality_error().max(b.row_orthonormality_error())
    });
    out.push(Check::new(
        SUITE,
        "P4 dither branch rows",
        dith < tol,
        dith,
        format!("{channels} dither draws, max dev {dith:.2e}"),
    ));
    let u2 = worst(&|rng| {
        let h = draw_simo(&cfg, rng);
        match build_u2(h.coeffs()[0], h.coeffs()[1]) {
            Ok(u) => u.row_orthonormality_error().max(u.column_orthonormality_error()),
            Err(_) => f64::INFINITY,
        }
    });
    out.push(Check::new(
        SUITE,
        "U2 orthogonal",
        u2 < tol,
        u2,
        format!("{channels} channels, max dev {u2:.2e}"),
    ));
    out
}

/// Noiseless `combine(P, stack(h xᵀ)) = gain · U x` (two antennas) and
/// `= F_quasi x` (four antennas).
pub fn factorization(draws: u64, seed: u64) -> Result<Vec<Check>> {
    const SUITE: &str = "combining";
    let tol = 1e-9;
    let p2 = build_p2();
    let quasi = build_p4_quasi();
    let model = CombinerModel::new(std::slice::from_ref(&quasi))?;
    let cfg2 = FadingConfig::new(2, 1, seed)?;
    let cfg4 = FadingConfig::new(4, 1, seed)?;
    let random_x = |rng: &mut StreamRng, n: usize| -> Vec<Complex64> {
        (0..n)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect()
    };
    let mut e2 = 0.0f64;
    let mut e4 = 0.0f64;
    for k in 0..draws {
        let mut rng = stream(seed, Domain::Test, k);
        let h = draw_simo(&cfg2, &mut rng);
        let x = random_x(&mut rng, 2);
        let y = combine(&p2, &stack_received(&transmit_simo(&h, &x, None, &mut rng)?))?;
        let u = build_u2(h.coeffs()[0], h.coeffs()[1])?;
        let pred = &u.entries * DVector::from_column_slice(stack_source(&x)?.as_slice()) * u.gain;
        e2 = e2.max(max_abs_diff(&y, pred.as_slice()));

        let h = draw_simo(&cfg4, &mut rng);
        let x = random_x(&mut rng, BLOCK);
        let y = combine(&quasi, &stack_received(&transmit_simo(&h, &x, None, &mut rng)?))?;
        let pred = model.effective(&h)? * DVector::from_column_slice(stack_source(&x)?.as_slice());
        e4 = e4.max(max_abs_diff(&y, pred.as_slice()));
    }
    Ok(vec![
        Check::new(SUITE, "M=2 combine = gain·U·x", e2 < tol, e2, format!("{draws} draws, max err {e2:.2e}")),
        Check::new(SUITE, "M=4 quasi combine = F·x", e4 < tol, e4, format!("{draws} draws, max err {e4:.2e}")),
    ])
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Unit complex noise through each combiner keeps variance 1/2 per real
/// output dimension. Returns the worst relative deviation per combiner.
pub fn noise_whitening(blocks: u64, seed: u64) -> Result<Vec<Check>> {
    const SUITE: &str = "combining";
    let (d1, d2) = build_p4_dither(&DitherVector::random(&mut stream(seed, Domain::Dither, 0)));
    let combiners: [(&str, CombinerMatrix); 4] = [
        ("P2", build_p2()),
        ("P4 quasi", build_p4_quasi()),
        ("P4 dither branch 1", d1),
        ("P4 dither branch 2", d2),
    ];
    let mut out = Vec::new();
    for (ci, (name, p)) in combiners.iter().enumerate() {
        let m = p.antennas();
        let zero = ChannelDraw::new(vec![Complex64::new(0.0, 0.0); m])?;
        let x = vec![Complex64::new(0.0, 0.0); p.block_len()];
        let noise = NoiseSpec::unit();
        let parts = map_trial_chunks(blocks, |r| -> Result<Vec<f64>> {
            let mut acc = vec![0.0; p.rows()];
            for k in r {
                let mut rng = stream(seed, Domain::Noise, (ci as u64) << 40 | k);
                let s = transmit_simo(&zero, &x, Some(&noise), &mut rng)?;
                for (a, v) in acc.iter_mut().zip(combine(p, &stack_received(&s))?) {
                    *a += v * v;
                }
            }
            Ok(acc)
        });
        let mut acc = vec![0.0; p.rows()];
        for part in parts {
            for (a, v) in acc.iter_mut().zip(part?) {
                *a += v;
            }
        }
        let worst = acc
            .iter()
            .map(|s| (s / blocks as f64 / 0.5 - 1.0).abs())
            .fold(0.0f64, f64::max);
        out.push(Check::new(
            SUITE,
            format!("{name} output noise var 1/2"),
            worst <= 0.02,
            worst,
            format!("{blocks} blocks, worst rel dev {:.3}%", 100.0 * worst),
        ));
    }
    Ok(out)
}

/// `h_ALA2 ≤ h_SC ≤ h_MRC` on every draw.
pub fn gain_ordering(draws: u64, seed: u64) -> Result<Check> {
    let cfg = FadingConfig::new(2, 1, seed)?;
    let parts = map_trial_chunks(draws, |r| -> Result<u64> {
        let mut bad = 0;
        for k in r {
            let h = draw_simo(&cfg, &mut stream(seed, Domain::Fading, k));
            let a = eff_gain(Scheme::Ala2, &h)?.h_eff;
            let s = eff_gain(Scheme::Sc, &h)?.h_eff;
            let m = eff_gain(Scheme::Mrc, &h)?.h_eff;
            bad += u64::from(!(a <= s * (1.0 + 1e-15) && s <= m * (1.0 + 1e-15)));
        }
        Ok(bad)
    });
    let mut violations = 0;
    for p in parts {
        violations += p?;
    }
    Ok(Check::new(
        "combining",
        "h_ALA2 <= h_SC <= h_MRC",
        violations == 0,
        violations as f64,
        format!("{violations} violations in {draws} draws"),
    ))
}

/// In-range error bound, subtractive-dither error variance and the 16-QAM
/// slicer against the AWGN closed form.
pub fn quantizer(samples: u64, qam_symbols: u64, seed: u64) -> Result<Vec<Check>> {
    const SUITE: &str = "quantize";
    let mut out = Vec::new();
    let mut sig = stream(seed, Domain::Test, 0);
    let mut dith = stream(seed, Domain::Quantizer, 0);

    let mut worst = 0.0f64;
    for bits in 1..=16 {
        let spec = QuantizerSpec::new(bits, 2.5, false)?;
        let y: Vec<f64> = (0..samples / 16).map(|_| sig.random_range(-2.5..2.5)).collect();
        let q = quantize(&y, &spec, &mut dith);
        let e = q.error.iter().map(|e| e.abs()).fold(0.0, f64::max);
        worst = worst.max(e / (spec.step() / 2.0));
    }
    out.push(Check::new(
        SUITE,
        "in-range |e| <= step/2",
        worst <= 1.0 + 1e-9,
        worst,
        format!("max |e|/(step/2) = {worst:.6}"),
    ));

    let spec = QuantizerSpec::new(4, 3.0, true)?;
    let y: Vec<f64> = (0..samples).map(|_| sig.random_range(-2.5..2.5)).collect();
    let q = quantize(&y, &spec, &mut dith);
    let n = q.error.len() as f64;
    let mean = q.error.iter().sum::<f64>() / n;
    let var = q.error.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / n;
    let ratio = var / spec.error_variance();
    out.push(Check::new(
        SUITE,
        "dithered error var = step²/12",
        (ratio - 1.0).abs() <= 0.02,
        ratio,
        format!("{samples} samples, var/(step²/12) = {ratio:.4}"),
    ));

    for snr_db in [8.0, 14.0] {
        let snr = db_to_linear(snr_db);
        let sd = (1.0 / (2.0 * snr)).sqrt();
        let parts = map_trial_chunks(qam_symbols, |r| {
            let mut errs = 0u64;
            for k in r {
                let mut rng = stream(seed, Domain::Symbols, k);
                let label = rng.random_range(0..16u8);
                let nr: f64 = rng.sample(rand_distr::StandardNormal);
                let ni: f64 = rng.sample(rand_distr::StandardNormal);
                let z = qam16_point(label) + Complex64::new(nr, ni) * sd;
                errs += u64::from(qam16_demap(z) != label);
            }
            errs
        });
        let errors: u64 = parts.into_iter().sum();
        let (lo, hi) = wilson_interval(errors, qam_symbols);
        let exact = qam16_ser_awgn(snr);
        out.push(Check::new(
            SUITE,
            format!("16-QAM SER at {snr_db} dB"),
            lo <= exact && exact <= hi,
            errors as f64 / qam_symbols as f64,
            format!(
                "sim {:.4e} CI [{lo:.4e}, {hi:.4e}] vs closed form {exact:.4e}",
                errors as f64 / qam_symbols as f64
            ),
        ));
    }
    Ok(out)
}

/// Antenna analogy of the sub-Nyquist receivers, noiseless universal
/// recovery and the factor-two dimension reduction.
pub fn subnyquist(pulses: usize, seed: u64) -> Result<Vec<Check>> {
    const SUITE: &str = "subnyquist";
    let dict = gen_dictionary(pulses, TAPS, &mut stream(seed, Domain::Dictionary, 0))?;
    let fe = UniversalFrontEnd::new()?;
    let mut sym = stream(seed, Domain::Symbols, 0);
    let x: Vec<Complex64> = (0..4 * BLOCK).map(|_| qam16_point(sym.random_range(0..16))).collect();
    let mut gain_dev = 0.0f64;
    let mut recovery = 0.0f64;
    let mut samples_ok = true;
    let amp = 1e5;
    let mut dith = stream(seed, Domain::Quantizer, 0);
    for p in &dict.pulses {
        let s = modulate::<StreamRng>(&x, 0, p, 1.0, None)?;
        let mf = matched_filter_receive(&s, p, 1.0)?;
        let ts = tap_selection_receive(&s, p, 1.0)?;
        gain_dev = gain_dev
            .max((mf.gain.unwrap_or(f64::NAN) - eff_gain(Scheme::Mrc, p)?.h_eff).abs())
            .max((ts.gain.unwrap_or(f64::NAN) - eff_gain(Scheme::Sc, p)?.h_eff).abs());
        let s = modulate::<StreamRng>(&x, 0, p, amp, None)?;
        let u = fe.acquire(&s, p, amp, None, &mut dith)?;
        recovery = recovery.max(
            u.estimates
                .iter()
                .zip(&x)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max),
        );
        // Full-rate acquisition takes TAPS complex samples per symbol.
        let nyquist = TAPS * x.len();
        samples_ok &= u.real_samples * 2 == nyquist && u.real_samples == x.len() / BLOCK * SAMPLES_PER_BLOCK;
    }
    Ok(vec![
        Check::new(
            SUITE,
            "MF/TS gains = MRC/SC gains",
            gain_dev == 0.0,
            gain_dev,
            format!("{pulses} pulses, max |diff| = {gain_dev:.1e}"),
        ),
        Check::new(
            SUITE,
            "noiseless universal recovery",
            recovery < 1e-6,
            recovery,
            format!("max |x̂ - x| = {recovery:.2e}"),
        ),
        Check::new(
            SUITE,
            "dimension reduction factor 2",
            samples_ok,
            2.0,
            format!(
                "{SAMPLES_PER_BLOCK} samples per {BLOCK} symbols vs {} at full rate",
                TAPS * BLOCK
            ),
        ),
    ])
}

/// All suites in a fixed order.
pub fn run_all(sizes: SuiteSizes, seed: u64) -> Result<Vec<Check>> {
    let mut out = orthonormality(sizes.channels, seed);
    out.extend(factorization(sizes.factorization, seed)?);
    out.extend(noise_whitening(sizes.noise_blocks, seed)?);
    out.push(gain_ordering(sizes.ordering, seed)?);
    out.extend(quantizer(sizes.quantizer_samples, sizes.qam_symbols, seed)?);
    out.extend(subnyquist(64, seed)?);
    Ok(out)
}
