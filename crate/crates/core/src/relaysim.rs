//! Two single-antenna users, two two-antenna relays, one central receiver.
//!
//! Each relay applies a channel-independent linear map to two time slots of
//! its antenna outputs, quantizes every real output with a fixed loading and
//! forwards the bits. The receiver knows all channels, stacks the relay
//! outputs, applies linear MMSE equalization and slices each 16-QAM symbol
//! independently.
//!
//! Relay front ends compared at an equal fronthaul budget of `4b` bits per
//! two time slots:
//! * `universal`: the two-antenna universal combiner, 4 reals at `b` bits;
//! * `single-antenna`: antenna 1 only, 4 reals at `b` bits;
//! * `no-combining`: both antennas, 8 reals at `⌈b/2⌉` and `⌊b/2⌋` bits.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::complex_gaussian;
use crate::combining::{build_p2, build_u2, combine, CombinerMatrix};
use crate::montecarlo::{db_to_linear, map_trial_chunks, wilson_interval};
use crate::qam::{qam16_demap, qam16_point};
use crate::quantize::{loading_from_noise_free_std, quantize_in_place, QuantizerSpec};
use crate::realrep::{stack_received, SimoBlock};
use crate::rng::{stream, Domain};
use crate::{Complex64, Error, Result};

pub const RELAYS: usize = 2;
pub const USERS: usize = 2;
pub const RELAY_ANTENNAS: usize = 2;
/// Time slots per combining block.
pub const SLOTS: usize = 2;

/// `h[i][j][k]`: relay `i`, antenna `j`, user `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelayScenario {
    pub h: [[[Complex64; USERS]; RELAY_ANTENNAS]; RELAYS],
}

impl RelayScenario {
    /// i.i.d. unit-variance Rayleigh coefficients.
    pub fn draw<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut h = [[[Complex64::new(0.0, 0.0); USERS]; RELAY_ANTENNAS]; RELAYS];
        for relay in h.iter_mut() {
            for antenna in relay.iter_mut() {
                for c in antenna.iter_mut() {
                    *c = complex_gaussian(rng, 1.0);
                }
            }
        }
        RelayScenario { h }
    }

    /// Channel of user `k` at relay `i`, one coefficient per antenna.
    pub fn column(&self, relay: usize, user: usize) -> [Complex64; RELAY_ANTENNAS] {
        [self.h[relay][0][user], self.h[relay][1][user]]
    }

    /// Noise-free received block of relay `i` for symbols `x[k][t]`.
    fn received(&self, relay: usize, x: &[[Complex64; SLOTS]; USERS]) -> SimoBlock {
        let mut block = SimoBlock::zeros(RELAY_ANTENNAS, SLOTS).expect("fixed shape");
        for j in 0..RELAY_ANTENNAS {
            for t in 0..SLOTS {
                let v = (0..USERS).map(|k| self.h[relay][j][k] * x[k][t]).sum();
                block.set(j, t, v);
            }
        }
        block
    }
}

/// Stacked relay-to-source map for the universal front end: `8 x 8`, block
/// `(i, k)` equal to `(‖h^i_k‖/√2) U(h^i_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveG {
    pub entries: DMatrix<f64>,
}

impl EffectiveG {
    pub fn block(&self, relay: usize, user: usize) -> DMatrix<f64> {
        self.entries.view((4 * relay, 4 * user), (4, 4)).into_owned()
    }
}

pub fn build_g(s: &RelayScenario) -> Result<EffectiveG> {
    let mut g = DMatrix::zeros(4 * RELAYS, 4 * USERS);
    for i in 0..RELAYS {
        for k in 0..USERS {
            let [a, b] = s.column(i, k);
            let u = build_u2(a, b)?;
            let block = &u.entries * u.gain;
            g.view_mut((4 * i, 4 * k), (4, 4)).copy_from(&block);
        }
    }
    Ok(EffectiveG { entries: g })
}

/// `(Gᵀ G + σ² I)⁻¹ Gᵀ y`: linear MMSE for unit-variance real sources.
pub fn mmse_equalize(g: &DMatrix<f64>, y: &[f64], noise_var: f64) -> Result<Vec<f64>> {
    mmse_equalize_weighted(g, y, &vec![noise_var; g.nrows()], 1.0)
}

/// Linear MMSE with per-observation noise variances and source variance
/// `signal_var`: `(Gᵀ Σ⁻¹ G + I/σ_x²)⁻¹ Gᵀ Σ⁻¹ y`.
pub fn mmse_equalize_weighted(
    g: &DMatrix<f64>,
    y: &[f64],
    noise_vars: &[f64],
    signal_var: f64,
) -> Result<Vec<f64>> {
    let f = MmseFilter::new(g, noise_vars, signal_var)?;
    f.apply(y, false)
}

/// Linear MMSE filter `W = (Gᵀ Σ⁻¹ G + I/σ_x²)⁻¹ Gᵀ Σ⁻¹` with the per-stream
/// gains `diag(W G)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MmseFilter {
    pub w: DMatrix<f64>,
    pub stream_gain: Vec<f64>,
}

impl MmseFilter {
    pub fn new(g: &DMatrix<f64>, noise_vars: &[f64], signal_var: f64) -> Result<Self> {
        if noise_vars.len() != g.nrows() {
            return Err(Error::Dimension {
                what: "noise variances vs equalizer rows",
                expected: g.nrows(),
                got: noise_vars.len(),
            });
        }
        if noise_vars.iter().any(|v| !(*v >= 0.0)) || !(signal_var > 0.0) {
            return Err(Error::invalid("variances must be nonnegative (signal positive)"));
        }
        let n = g.ncols();
        let mut gw = g.clone();
        for (r, v) in noise_vars.iter().enumerate() {
            let w = if *v > 0.0 { v.recip() } else { 1e300 };
            gw.row_mut(r).scale_mut(w);
        }
        let a = gw.transpose() * g + DMatrix::identity(n, n) / signal_var;
        let rhs = gw.transpose();
        let w = match a.clone().cholesky() {
            Some(ch) => ch.solve(&rhs),
            None => a
                .lu()
                .solve(&rhs)
                .ok_or(Error::SingularChannel("MMSE normal equations"))?,
        };
        let stream_gain = (&w * g).diagonal().iter().copied().collect();
        Ok(MmseFilter { w, stream_gain })
    }

    /// `W y`, optionally divided stream-wise by `diag(W G)` to remove the
    /// MMSE shrinkage before slicing.
    pub fn apply(&self, y: &[f64], unbiased: bool) -> Result<Vec<f64>> {
        if y.len() != self.w.ncols() {
            return Err(Error::Dimension {
                what: "observations vs equalizer rows",
                expected: self.w.ncols(),
                got: y.len(),
            });
        }
        let x = &self.w * DVector::from_column_slice(y);
        Ok(x
            .iter()
            .zip(&self.stream_gain)
            .map(|(v, g)| if unbiased && *g > 0.0 { v / g } else { *v })
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RelayScheme {
    Universal,
    SingleAntenna,
    NoCombining,
}

impl RelayScheme {
    pub const ALL: [RelayScheme; 3] = [
        RelayScheme::Universal,
        RelayScheme::SingleAntenna,
        RelayScheme::NoCombining,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RelayScheme::Universal => "universal",
            RelayScheme::SingleAntenna => "single-antenna",
            RelayScheme::NoCombining => "no-combining",
        }
    }

    /// Bits per real output for each of the scheme's outputs per relay.
    fn output_bits(self, bits: u32) -> Vec<u32> {
        match self {
            RelayScheme::Universal | RelayScheme::SingleAntenna => vec![bits; 4],
            RelayScheme::NoCombining => {
                let (hi, lo) = (bits.div_ceil(2), bits / 2);
                // Stacking order is time-major, antenna-minor, re before im.
                (0..SLOTS).flat_map(|_| [hi, hi, lo, lo]).collect()
            }
        }
    }
}

impl fmt::Display for RelayScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for RelayScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RelayScheme::ALL
            .into_iter()
            .find(|r| r.name() == s.trim())
            .ok_or_else(|| Error::invalid(format!("unknown relay scheme '{s}'")))
    }
}

/// Fronthaul resolution: bits per real sample, or no quantization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum BitBudget {
    Finite(u32),
    Unlimited,
}

impl fmt::Display for BitBudget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BitBudget::Finite(b) => f.pad(&b.to_string()),
            BitBudget::Unlimited => f.pad("inf"),
        }
    }
}

impl From<BitBudget> for String {
    fn from(b: BitBudget) -> String {
        b.to_string()
    }
}

impl TryFrom<String> for BitBudget {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl FromStr for BitBudget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "inf" {
            return Ok(BitBudget::Unlimited);
        }
        let b: u32 = s
            .parse()
            .map_err(|_| Error::invalid(format!("bits must be an integer or 'inf' (got '{s}')")))?;
        if !(2..=24).contains(&b) {
            return Err(Error::invalid(format!("bits per sample must be in 2..=24 (got {b})")));
        }
        Ok(BitBudget::Finite(b))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelayConfig {
    pub snr_grid_db: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
    pub bits: Vec<BitBudget>,
    pub schemes: Vec<RelayScheme>,
    #[serde(default)]
    pub loading: LoadingRule,
    /// Subtractive dither in every relay quantizer.
    #[serde(default)]
    pub dither: bool,
    /// Remove the MMSE shrinkage before slicing.
    #[serde(default = "default_true")]
    pub unbiased: bool,
}

fn default_true() -> bool {
    true
}

impl RelayConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::invalid("trials must be at least 1"));
        }
        if self.snr_grid_db.is_empty() || self.snr_grid_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::invalid("SNR grid must be nonempty and finite"));
        }
        if self.bits.is_empty() || self.schemes.is_empty() {
            return Err(Error::invalid("at least one bit budget and one scheme"));
        }
        for b in &self.bits {
            if let BitBudget::Finite(v) = b {
                BitBudget::from_str(&v.to_string())?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SerPoint {
    pub snr_db: f64,
    pub scheme: RelayScheme,
    pub bits: BitBudget,
    pub ser: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub errors: u64,
    pub symbols: u64,
}

/// One relay's forwarded reals and their map from the stacked source.
struct FrontEnd {
    /// Rows: forwarded reals of both relays. Columns: `[x_1; x_2]` reals.
    g: DMatrix<f64>,
}

fn front_end(s: &RelayScenario, scheme: RelayScheme) -> Result<FrontEnd> {
    let g = match scheme {
        RelayScheme::Universal => build_g(s)?.entries,
        RelayScheme::SingleAntenna | RelayScheme::NoCombining => {
            let ants = if scheme == RelayScheme::SingleAntenna { 1 } else { 2 };
            let rows_per_relay = 2 * ants * SLOTS;
            let mut g = DMatrix::zeros(RELAYS * rows_per_relay, 4 * USERS);
            for i in 0..RELAYS {
                for t in 0..SLOTS {
                    for j in 0..ants {
                        let r = i * rows_per_relay + 2 * (t * ants + j);
                        for k in 0..USERS {
                            let h = s.h[i][j][k];
                            let c = 4 * k + 2 * t;
                            g[(r, c)] = h.re;
                            g[(r, c + 1)] = -h.im;
                            g[(r + 1, c)] = h.im;
                            g[(r + 1, c + 1)] = h.re;
                        }
                    }
                }
            }
            g
        }
    };
    Ok(FrontEnd { g })
}

/// Forwarded reals of relay `i` for the received block.
fn relay_outputs(block: &SimoBlock, scheme: RelayScheme, p2: &CombinerMatrix) -> Result<Vec<f64>> {
    let frame = stack_received(block);
    Ok(match scheme {
        RelayScheme::Universal => combine(p2, &frame)?,
        RelayScheme::NoCombining => frame.into_vec(),
        RelayScheme::SingleAntenna => {
            let mut out = Vec::with_capacity(2 * SLOTS);
            for t in 0..SLOTS {
                let z = block.get(0, t);
                out.extend([z.re, z.im]);
            }
            out
        }
    })
}

/// Which statistics the `3σ` loading rule uses for the noise-free relay
/// output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LoadingRule {
    /// Standard deviation over symbols for the current (static) channel.
    #[default]
    Conditional,
    /// Standard deviation over symbols and fading: `√P` for every front end.
    Ensemble,
}

impl LoadingRule {
    pub fn name(self) -> &'static str {
        match self {
            LoadingRule::Conditional => "conditional",
            LoadingRule::Ensemble => "ensemble",
        }
    }
}

impl FromStr for LoadingRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "conditional" => Ok(LoadingRule::Conditional),
            "ensemble" => Ok(LoadingRule::Ensemble),
            other => Err(Error::invalid(format!("unknown loading rule '{other}'"))),
        }
    }
}

/// Noise-free standard deviation of forwarded real `row` at power `P`
/// (each source real has variance `P/2`).
pub fn noise_free_std(g: &DMatrix<f64>, row: usize, power: f64, rule: LoadingRule) -> f64 {
    match rule {
        LoadingRule::Conditional => (g.row(row).norm_squared() * power / 2.0).sqrt(),
        LoadingRule::Ensemble => power.sqrt(),
    }
}

/// Symbol error rates for every scheme and bit budget over the SNR grid.
/// Channels, symbols and noise are shared across schemes, budgets and SNR
/// points within a trial.
pub fn run_ser(config: &RelayConfig) -> Result<Vec<SerPoint>> {
    config.validate()?;
    let p2 = build_p2();
    let powers: Vec<f64> = config.snr_grid_db.iter().map(|d| db_to_linear(*d)).collect();
    let combos: Vec<(RelayScheme, BitBudget)> = config
        .schemes
        .iter()
        .flat_map(|s| config.bits.iter().map(move |b| (*s, *b)))
        .collect();
    let width = powers.len() * combos.len();
    let parts = map_trial_chunks(config.trials, |range| -> Result<Vec<u64>> {
        let mut errors = vec![0u64; width];
        for trial in range {
            let scenario = RelayScenario::draw(&mut stream(config.seed, Domain::Fading, trial));
            let mut sym_rng = stream(config.seed, Domain::Symbols, trial);
            let mut labels = [[0u8; SLOTS]; USERS];
            let mut x = [[Complex64::new(0.0, 0.0); SLOTS]; USERS];
            for k in 0..USERS {
                for t in 0..SLOTS {
                    labels[k][t] = sym_rng.random_range(0..16);
                    x[k][t] = qam16_point(labels[k][t]);
                }
            }
            let mut noise_rng = stream(config.seed, Domain::Noise, trial);
            let noise: Vec<SimoBlock> = (0..RELAYS)
                .map(|_| {
                    let mut b = SimoBlock::zeros(RELAY_ANTENNAS, SLOTS).expect("fixed shape");
                    for j in 0..RELAY_ANTENNAS {
                        for t in 0..SLOTS {
                            b.set(j, t, complex_gaussian(&mut noise_rng, 1.0));
                        }
                    }
                    b
                })
                .collect();
            let mut dither_rng = stream(config.seed, Domain::Quantizer, trial);
            let clean: Vec<SimoBlock> = (0..RELAYS).map(|i| scenario.received(i, &x)).collect();
            for (ci, &(scheme, budget)) in combos.iter().enumerate() {
                let fe = front_end(&scenario, scheme)?;
                let out_bits = scheme.output_bits(match budget {
                    BitBudget::Finite(b) => b,
                    BitBudget::Unlimited => 0,
                });
                for (pi, &p) in powers.iter().enumerate() {
                    let amp = p.sqrt();
                    let mut y = Vec::with_capacity(fe.g.nrows());
                    let mut noise_vars = Vec::with_capacity(fe.g.nrows());
                    for i in 0..RELAYS {
                        let mut rx = clean[i].clone();
                        for j in 0..RELAY_ANTENNAS {
                            for t in 0..SLOTS {
                                rx.set(j, t, clean[i].get(j, t) * amp + noise[i].get(j, t));
                            }
                        }
                        let mut out = relay_outputs(&rx, scheme, &p2)?;
                        let first_row = y.len();
                        for (r, (v, &b)) in out.iter_mut().zip(&out_bits).enumerate() {
                            let q_var = if budget == BitBudget::Unlimited {
                                0.0
                            } else {
                                let sigma = noise_free_std(&fe.g, first_row + r, p, config.loading);
                                let loading = loading_from_noise_free_std(sigma.max(f64::MIN_POSITIVE))?;
                                let spec = QuantizerSpec::new(b, loading, config.dither)?;
                                quantize_in_place(std::slice::from_mut(v), &spec, &mut dither_rng);
                                spec.error_variance()
                            };
                            noise_vars.push(0.5 + q_var);
                        }
                        y.extend(out);
                    }
                    let est = MmseFilter::new(&fe.g, &noise_vars, p / 2.0)?.apply(&y, config.unbiased)?;
                    let cell = ci * powers.len() + pi;
                    for k in 0..USERS {
                        for t in 0..SLOTS {
                            let z = Complex64::new(est[4 * k + 2 * t], est[4 * k + 2 * t + 1]) / amp;
                            errors[cell] += (qam16_demap(z) != labels[k][t]) as u64;
                        }
                    }
                }
            }
        }
        Ok(errors)
    });
    let mut errors = vec![0u64; width];
    for part in parts {
        for (e, v) in errors.iter_mut().zip(part?) {
            *e += v;
        }
    }
    let symbols = config.trials * (USERS * SLOTS) as u64;
    let mut out = Vec::with_capacity(width);
    for (ci, &(scheme, bits)) in combos.iter().enumerate() {
        for (pi, &snr_db) in config.snr_grid_db.iter().enumerate() {
            let e = errors[ci * powers.len() + pi];
            let (ci_lo, ci_hi) = wilson_interval(e, symbols);
            out.push(SerPoint {
                snr_db,
                scheme,
                bits,
                ser: e as f64 / symbols as f64,
                ci_lo,
                ci_hi,
                errors: e,
                symbols,
            });
        }
    }
    Ok(out)
}

/// SNR in dB at which the SER of one (scheme, bits) series crosses
/// `target`, interpolating `log10(SER)` linearly in dB.
pub fn snr_at_ser(points: &[SerPoint], target: f64) -> Option<f64> {
    points.windows(2).find_map(|w| {
        let (a, b) = (&w[0], &w[1]);
        if a.ser >= target && b.ser <= target && b.ser > 0.0 {
            if a.ser == b.ser {
                return Some(a.snr_db);
            }
            let (la, lb, lt) = (a.ser.log10(), b.ser.log10(), target.log10());
            Some(a.snr_db + (la - lt) / (la - lb) * (b.snr_db - a.snr_db))
        } else {
            None
        }
    })
}
