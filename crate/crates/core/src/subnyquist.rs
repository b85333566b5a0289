//! Sub-Nyquist acquisition of pulse-amplitude modulated signals.
//!
//! A frame carries `K` symbols on a known `N = 4`-tap pulse `h`:
//! `s(t) = √P h x(t) + n(t)`. Taps play the role of receive antennas, so the
//! sampled matched filter is MRC, sampling the strongest tap is SC, and the
//! four-antenna quasi-orthogonal combiner acquires 8 samples per 4 symbols
//! (half of the 16 a full-rate front end takes) with a time-invariant
//! analog front end.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{complex_gaussian, ChannelDraw};
use crate::combining::{build_p4_quasi, combine, eff_gain, CombinerMatrix, CombinerModel, Scheme};
use crate::montecarlo::{db_to_linear, map_trial_chunks, wilson_interval};
use crate::qam::{qam16_demap, qam16_point};
use crate::quantize::{loading_from_noise_free_std, quantize_in_place, QuantizerSpec};
use crate::realrep::{stack_received, SimoBlock};
use crate::relaysim::MmseFilter;
use crate::rng::{stream, Domain};
use crate::{Complex64, Error, Result};

pub const TAPS: usize = 4;
/// Symbols per quasi-orthogonal acquisition block.
pub const BLOCK: usize = 4;
/// Real samples taken per block by the universal front end.
pub const SAMPLES_PER_BLOCK: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct PulseDictionary {
    pub pulses: Vec<ChannelDraw>,
}

impl PulseDictionary {
    pub fn len(&self) -> usize {
        self.pulses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pulses.is_empty()
    }
}

/// `size` i.i.d. complex Gaussian pulses of `taps` taps, normalized to unit
/// energy.
pub fn gen_dictionary<R: Rng + ?Sized>(size: usize, taps: usize, rng: &mut R) -> Result<PulseDictionary> {
    if size == 0 {
        return Err(Error::invalid("dictionary needs at least one pulse"));
    }
    if taps != TAPS {
        return Err(Error::invalid(format!("pulses have {TAPS} taps (got {taps})")));
    }
    let mut pulses = Vec::with_capacity(size);
    while pulses.len() < size {
        let v: Vec<Complex64> = (0..taps).map(|_| complex_gaussian(rng, 1.0)).collect();
        let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.0 {
            pulses.push(ChannelDraw::new(v.into_iter().map(|c| c / norm).collect())?);
        }
    }
    Ok(PulseDictionary { pulses })
}

/// Received frame: `taps x K` samples (tap-major per symbol).
#[derive(Debug, Clone, PartialEq)]
pub struct PamStream {
    pub symbols: Vec<Complex64>,
    pub pulse_index: usize,
    pub received: SimoBlock,
}

/// Builds `s(t) = amp · h x(t) + n(t)`; `noise` of `None` is noiseless.
pub fn modulate<R: Rng + ?Sized>(
    symbols: &[Complex64],
    pulse_index: usize,
    pulse: &ChannelDraw,
    amp: f64,
    noise: Option<&mut R>,
) -> Result<PamStream> {
    let mut received = SimoBlock::zeros(pulse.antennas(), symbols.len())?;
    let mut noise = noise;
    for (t, x) in symbols.iter().enumerate() {
        for (i, h) in pulse.coeffs().iter().enumerate() {
            let n = match noise.as_deref_mut() {
                Some(rng) => complex_gaussian(rng, 1.0),
                None => Complex64::new(0.0, 0.0),
            };
            received.set(i, t, h * x * amp + n);
        }
    }
    Ok(PamStream {
        symbols: symbols.to_vec(),
        pulse_index,
        received,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Acquired {
    /// Symbol estimates scaled back to the constellation.
    pub estimates: Vec<Complex64>,
    /// Real samples the front end delivered for the frame.
    pub real_samples: usize,
    /// Scalar gain of the equivalent single-antenna channel, when one exists.
    pub gain: Option<f64>,
}

fn check_pulse(stream: &PamStream, pulse: &ChannelDraw) -> Result<()> {
    if pulse.antennas() != stream.received.antennas() {
        return Err(Error::Dimension {
            what: "pulse taps vs stream",
            expected: stream.received.antennas(),
            got: pulse.antennas(),
        });
    }
    if pulse.norm_sqr() == 0.0 {
        return Err(Error::SingularChannel("zero pulse"));
    }
    Ok(())
}

/// Full-rate sampling followed by correlation with the known pulse, one
/// statistic per symbol. `amp` is the transmit amplitude `√P`.
pub fn matched_filter_receive(stream: &PamStream, pulse: &ChannelDraw, amp: f64) -> Result<Acquired> {
    check_pulse(stream, pulse)?;
    let norm = pulse.norm();
    let gain = eff_gain(Scheme::Mrc, pulse)?.h_eff;
    let k = stream.received.len();
    let estimates = (0..k)
        .map(|t| {
            let y: Complex64 = pulse
                .coeffs()
                .iter()
                .enumerate()
                .map(|(i, h)| h.conj() * stream.received.get(i, t))
                .sum::<Complex64>()
                / norm;
            y / (gain * amp)
        })
        .collect();
    Ok(Acquired {
        estimates,
        real_samples: 2 * pulse.antennas() * k,
        gain: Some(gain),
    })
}

/// One sample per symbol at the strongest tap.
pub fn tap_selection_receive(stream: &PamStream, pulse: &ChannelDraw, amp: f64) -> Result<Acquired> {
    check_pulse(stream, pulse)?;
    let sel = eff_gain(Scheme::Sc, pulse)?;
    let j = sel.selected_antenna.unwrap_or(0);
    let h = pulse.coeffs()[j];
    let k = stream.received.len();
    let estimates = (0..k)
        .map(|t| stream.received.get(j, t) * h.conj() / (h.norm_sqr() * amp))
        .collect();
    Ok(Acquired {
        estimates,
        real_samples: 2 * k,
        gain: Some(sel.h_eff),
    })
}

/// Universal quasi-orthogonal acquisition with its prebuilt model.
#[derive(Debug, Clone)]
pub struct UniversalFrontEnd {
    combiner: CombinerMatrix,
    model: CombinerModel,
    /// `Q Qᵀ`; the acquired noise has covariance `Q Qᵀ / 2`.
    row_gram: DMatrix<f64>,
}

impl UniversalFrontEnd {
    pub fn new() -> Result<Self> {
        let combiner = build_p4_quasi();
        let model = CombinerModel::new(std::slice::from_ref(&combiner))?;
        let q = combiner.entries();
        let row_gram = q * q.transpose();
        Ok(UniversalFrontEnd {
            combiner,
            model,
            row_gram,
        })
    }

    /// `F_quasi(h)`: the 8 acquired reals of a block are `F x + noise`.
    pub fn effective(&self, pulse: &ChannelDraw) -> Result<DMatrix<f64>> {
        self.model.effective(pulse)
    }

    /// Applies the combiner to every 4-symbol block, optionally quantizes
    /// each real sample (3σ loading for the current pulse), then equalizes
    /// with linear MMSE against `F_quasi`.
    pub fn acquire<R: Rng + ?Sized>(
        &self,
        stream: &PamStream,
        pulse: &ChannelDraw,
        amp: f64,
        bits: Option<u32>,
        dither: &mut R,
    ) -> Result<Acquired> {
        check_pulse(stream, pulse)?;
        let k = stream.received.len();
        if k == 0 || k % BLOCK != 0 {
            return Err(Error::invalid(format!(
                "frame length must be a positive multiple of {BLOCK} symbols (got {k})"
            )));
        }
        let f = self.effective(pulse)? * amp;
        let mut sigma = &self.row_gram * 0.5;
        let specs: Option<Vec<QuantizerSpec>> = match bits {
            None => None,
            Some(b) => Some(
                (0..SAMPLES_PER_BLOCK)
                    .map(|r| {
                        let sigma = (f.row(r).norm_squared() / 2.0).sqrt().max(f64::MIN_POSITIVE);
                        QuantizerSpec::new(b, loading_from_noise_free_std(sigma)?, false)
                    })
                    .collect::<Result<_>>()?,
            ),
        };
        if let Some(specs) = &specs {
            for (r, s) in specs.iter().enumerate() {
                sigma[(r, r)] += s.error_variance();
            }
        }
        // Prewhiten so the equalizer sees unit-variance white noise.
        let chol = sigma
            .cholesky()
            .ok_or(Error::SingularChannel("acquired noise covariance"))?;
        let l = chol.l();
        let fw = l
            .solve_lower_triangular(&f)
            .ok_or(Error::SingularChannel("acquired noise covariance"))?;
        let mmse = MmseFilter::new(&fw, &[1.0; SAMPLES_PER_BLOCK], 0.5)?;
        let mut estimates = Vec::with_capacity(k);
        let mut real_samples = 0;
        for b in 0..k / BLOCK {
            let mut block = SimoBlock::zeros(TAPS, BLOCK)?;
            for t in 0..BLOCK {
                for i in 0..TAPS {
                    block.set(i, t, stream.received.get(i, b * BLOCK + t));
                }
            }
            let mut y = combine(&self.combiner, &stack_received(&block))?;
            if let Some(specs) = &specs {
                for (v, s) in y.iter_mut().zip(specs) {
                    quantize_in_place(std::slice::from_mut(v), s, dither);
                }
            }
            real_samples += y.len();
            let yw = l
                .solve_lower_triangular(&DVector::from_vec(y))
                .ok_or(Error::SingularChannel("acquired noise covariance"))?;
            let x = mmse.apply(yw.as_slice(), true)?;
            estimates.extend(x.chunks(2).map(|c| Complex64::new(c[0], c[1])));
        }
        Ok(Acquired {
            estimates,
            real_samples,
            gain: None,
        })
    }
}

/// Convenience wrapper building the front end on every call.
pub fn universal_acquire(stream: &PamStream, pulse: &ChannelDraw, amp: f64) -> Result<Acquired> {
    let fe = UniversalFrontEnd::new()?;
    fe.acquire(stream, pulse, amp, None, &mut crate::rng::stream(0, Domain::Quantizer, 0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Receiver {
    MatchedFilter,
    TapSelection,
    Universal,
}

impl Receiver {
    pub const ALL: [Receiver; 3] = [Receiver::MatchedFilter, Receiver::TapSelection, Receiver::Universal];

    pub fn name(self) -> &'static str {
        match self {
            Receiver::MatchedFilter => "matched-filter",
            Receiver::TapSelection => "tap-selection",
            Receiver::Universal => "universal",
        }
    }
}

impl fmt::Display for Receiver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Receiver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Receiver::ALL
            .into_iter()
            .find(|r| r.name() == s.trim())
            .ok_or_else(|| Error::invalid(format!("unknown receiver '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubnyquistConfig {
    pub snr_grid_db: Vec<f64>,
    pub frames: u64,
    pub symbols_per_frame: usize,
    pub dictionary_size: usize,
    pub seed: u64,
    pub receivers: Vec<Receiver>,
    /// Bits per real sample of the universal front end; `None` leaves it
    /// unquantized.
    #[serde(default)]
    pub bits: Option<u32>,
}

impl SubnyquistConfig {
    pub fn validate(&self) -> Result<()> {
        if self.frames == 0 {
            return Err(Error::invalid("frames must be at least 1"));
        }
        if self.symbols_per_frame == 0 || self.symbols_per_frame % BLOCK != 0 {
            return Err(Error::invalid(format!(
                "symbols per frame must be a positive multiple of {BLOCK}"
            )));
        }
        if self.dictionary_size == 0 {
            return Err(Error::invalid("dictionary size must be at least 1"));
        }
        if self.snr_grid_db.is_empty() || self.snr_grid_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::invalid("SNR grid must be nonempty and finite"));
        }
        if self.receivers.is_empty() {
            return Err(Error::invalid("no receivers selected"));
        }
        if let Some(b) = self.bits {
            QuantizerSpec::new(b, 1.0, false)?;
        }
        Ok(())
    }

    pub fn dictionary(&self) -> Result<PulseDictionary> {
        gen_dictionary(self.dictionary_size, TAPS, &mut stream(self.seed, Domain::Dictionary, 0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubnyquistPoint {
    pub snr_db: f64,
    pub receiver: Receiver,
    pub ser: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub errors: u64,
    pub symbols: u64,
    /// Real samples per complex symbol delivered by the front end.
    pub samples_per_symbol: f64,
}

/// 16-QAM symbol error rate of each receiver over the SNR grid. Frame `f`
/// uses dictionary entry `f mod size`; symbols and noise are shared across
/// receivers and SNR points.
pub fn run_ser(config: &SubnyquistConfig) -> Result<Vec<SubnyquistPoint>> {
    config.validate()?;
    let dict = config.dictionary()?;
    let fe = UniversalFrontEnd::new()?;
    let powers: Vec<f64> = config.snr_grid_db.iter().map(|d| db_to_linear(*d)).collect();
    let nr = config.receivers.len();
    let width = nr * powers.len();
    let parts = map_trial_chunks(config.frames, |range| -> Result<(Vec<u64>, Vec<usize>)> {
        let mut errors = vec![0u64; width];
        let mut samples = vec![0usize; nr];
        for frame in range {
            let idx = (frame % dict.len() as u64) as usize;
            let pulse = &dict.pulses[idx];
            let mut sym_rng = stream(config.seed, Domain::Symbols, frame);
            let labels: Vec<u8> = (0..config.symbols_per_frame)
                .map(|_| sym_rng.random_range(0..16))
                .collect();
            let symbols: Vec<Complex64> = labels.iter().map(|l| qam16_point(*l)).collect();
            let unit = modulate::<crate::rng::StreamRng>(&symbols, idx, pulse, 1.0, None)?;
            let noise = modulate(
                &vec![Complex64::new(0.0, 0.0); symbols.len()],
                idx,
                pulse,
                0.0,
                Some(&mut stream(config.seed, Domain::Noise, frame)),
            )?;
            let mut dither = stream(config.seed, Domain::Quantizer, frame);
            for (pi, &p) in powers.iter().enumerate() {
                let amp = p.sqrt();
                let mut rx = unit.clone();
                for i in 0..TAPS {
                    for t in 0..symbols.len() {
                        rx.received
                            .set(i, t, unit.received.get(i, t) * amp + noise.received.get(i, t));
                    }
                }
                for (ri, r) in config.receivers.iter().enumerate() {
                    let acq = match r {
                        Receiver::MatchedFilter => matched_filter_receive(&rx, pulse, amp)?,
                        Receiver::TapSelection => tap_selection_receive(&rx, pulse, amp)?,
                        Receiver::Universal => fe.acquire(&rx, pulse, amp, config.bits, &mut dither)?,
                    };
                    if pi == 0 {
                        samples[ri] += acq.real_samples;
                    }
                    errors[ri * powers.len() + pi] += acq
                        .estimates
                        .iter()
                        .zip(&labels)
                        .filter(|(z, l)| qam16_demap(**z) != **l)
                        .count() as u64;
                }
            }
        }
        Ok((errors, samples))
    });
    let mut errors = vec![0u64; width];
    let mut samples = vec![0usize; nr];
    for part in parts {
        let (e, s) = part?;
        for (a, b) in errors.iter_mut().zip(e) {
            *a += b;
        }
        for (a, b) in samples.iter_mut().zip(s) {
            *a += b;
        }
    }
    let symbols = config.frames * config.symbols_per_frame as u64;
    let mut out = Vec::with_capacity(width);
    for (ri, &receiver) in config.receivers.iter().enumerate() {
        for (pi, &snr_db) in config.snr_grid_db.iter().enumerate() {
            let e = errors[ri * powers.len() + pi];
            let (ci_lo, ci_hi) = wilson_interval(e, symbols);
            out.push(SubnyquistPoint {
                snr_db,
                receiver,
                ser: e as f64 / symbols as f64,
                ci_lo,
                ci_hi,
                errors: e,
                symbols,
                samples_per_symbol: samples[ri] as f64 / symbols as f64,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qam::qam16_ser_awgn;
    use crate::rng::StreamRng;

    fn qam_symbols(n: usize, seed: u64) -> Vec<Complex64> {
        let mut rng = stream(seed, Domain::Symbols, 0);
        (0..n).map(|_| qam16_point(rng.random_range(0..16))).collect()
    }

    fn max_err(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn dictionary_properties() {
        let d = gen_dictionary(8, 4, &mut stream(1, Domain::Dictionary, 0)).unwrap();
        assert_eq!(d.len(), 8);
        for p in &d.pulses {
            assert_eq!(p.antennas(), 4);
            assert!((p.norm() - 1.0).abs() < 1e-12);
        }
        let again = gen_dictionary(8, 4, &mut stream(1, Domain::Dictionary, 0)).unwrap();
        assert_eq!(d, again);
        assert!(gen_dictionary(0, 4, &mut stream(1, Domain::Dictionary, 0)).is_err());
        assert!(gen_dictionary(2, 3, &mut stream(1, Domain::Dictionary, 0)).is_err());
    }

    #[test]
    fn receivers_match_antenna_gains() {
        let d = gen_dictionary(16, 4, &mut stream(2, Domain::Dictionary, 0)).unwrap();
        let x = qam_symbols(8, 2);
        for p in &d.pulses {
            let s = modulate::<StreamRng>(&x, 0, p, 1.0, None).unwrap();
            let mf = matched_filter_receive(&s, p, 1.0).unwrap();
            let ts = tap_selection_receive(&s, p, 1.0).unwrap();
            assert_eq!(mf.gain.unwrap(), eff_gain(Scheme::Mrc, p).unwrap().h_eff);
            assert_eq!(ts.gain.unwrap(), eff_gain(Scheme::Sc, p).unwrap().h_eff);
            assert!(max_err(&mf.estimates, &x) < 1e-12);
            assert!(max_err(&ts.estimates, &x) < 1e-12);
        }
    }

    #[test]
    fn tap_selection_picks_strongest_tap() {
        let p = ChannelDraw::from_real(&[0.0, 1.0, 0.0, 0.0]).unwrap();
        let x = qam_symbols(4, 3);
        let s = modulate::<StreamRng>(&x, 0, &p, 1.0, None).unwrap();
        let ts = tap_selection_receive(&s, &p, 1.0).unwrap();
        assert_eq!(eff_gain(Scheme::Sc, &p).unwrap().selected_antenna, Some(1));
        assert!(max_err(&ts.estimates, &x) < 1e-15);
    }

    #[test]
    fn universal_noiseless_recovery_and_sample_count() {
        let fe = UniversalFrontEnd::new().unwrap();
        let d = gen_dictionary(8, 4, &mut stream(4, Domain::Dictionary, 0)).unwrap();
        let mut dith = stream(4, Domain::Quantizer, 0);
        let x = qam_symbols(32, 4);
        // Noise-free observations with a vanishing MMSE regularizer.
        let amp = 1e5;
        for p in &d.pulses {
            let s = modulate::<StreamRng>(&x, 0, p, amp, None).unwrap();
            let acq = fe.acquire(&s, p, amp, None, &mut dith).unwrap();
            assert!(max_err(&acq.estimates, &x) < 1e-6);
            assert_eq!(acq.real_samples, x.len() / BLOCK * SAMPLES_PER_BLOCK);
            assert_eq!(2 * TAPS * BLOCK / SAMPLES_PER_BLOCK, 4);
            let q = fe.acquire(&s, p, amp, Some(20), &mut dith).unwrap();
            assert!(max_err(&q.estimates, &x) < 1e-4);
        }
        let e1 = ChannelDraw::from_real(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        let s = modulate::<StreamRng>(&x, 0, &e1, amp, None).unwrap();
        let acq = fe.acquire(&s, &e1, amp, None, &mut dith).unwrap();
        assert!(max_err(&acq.estimates, &x) < 1e-6);
        let short = modulate::<StreamRng>(&x[..6], 0, &e1, 1.0, None).unwrap();
        assert!(fe.acquire(&short, &e1, 1.0, None, &mut dith).is_err());
    }

    #[test]
    fn dimension_reduction_is_two() {
        let cfg = SubnyquistConfig {
            snr_grid_db: vec![20.0],
            frames: 10,
            symbols_per_frame: 16,
            dictionary_size: 8,
            seed: 1,
            receivers: Receiver::ALL.to_vec(),
            bits: None,
        };
        let pts = run_ser(&cfg).unwrap();
        let sps: Vec<f64> = pts.iter().map(|p| p.samples_per_symbol).collect();
        assert_eq!(sps, vec![8.0, 2.0, 2.0]);
    }

    #[test]
    fn matched_filter_ser_matches_awgn() {
        let cfg = SubnyquistConfig {
            snr_grid_db: vec![12.0],
            frames: 20_000,
            symbols_per_frame: 16,
            dictionary_size: 8,
            seed: 5,
            receivers: vec![Receiver::MatchedFilter],
            bits: None,
        };
        let p = &run_ser(&cfg).unwrap()[0];
        let exact = qam16_ser_awgn(db_to_linear(12.0));
        // Symbols within a frame are independent; widen slightly for safety.
        let slack = 0.1 * (p.ci_hi - p.ci_lo);
        assert!(p.ci_lo - slack <= exact && exact <= p.ci_hi + slack, "{exact} vs {p:?}");
    }

    #[test]
    fn receiver_ordering_at_moderate_snr() {
        let cfg = SubnyquistConfig {
            snr_grid_db: vec![16.0],
            frames: 5_000,
            symbols_per_frame: 16,
            dictionary_size: 8,
            seed: 6,
            receivers: Receiver::ALL.to_vec(),
            bits: None,
        };
        let pts = run_ser(&cfg).unwrap();
        assert!(pts[0].ser < pts[1].ser && pts[1].ser < pts[2].ser, "{pts:?}");
    }
}
