//! Rayleigh fading draws and the SIMO / MIMO-MAC channel models.
//!
//! Fading coefficients are circularly-symmetric complex Gaussian with unit
//! complex variance (real and imaginary parts each of variance 1/2). The
//! channel is quasi-static: one draw is held for a whole space-time block.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::realrep::SimoBlock;
use crate::{Complex64, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FadingDistribution {
    RayleighIid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FadingConfig {
    pub distribution: FadingDistribution,
    pub antennas: usize,
    pub users: usize,
    pub seed: u64,
}

impl FadingConfig {
    pub fn new(antennas: usize, users: usize, seed: u64) -> Result<Self> {
        let cfg = FadingConfig {
            distribution: FadingDistribution::RayleighIid,
            antennas,
            users,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if ![1, 2, 4].contains(&self.antennas) {
            return Err(Error::invalid(format!(
                "receive antennas must be 1, 2 or 4 (got {})",
                self.antennas
            )));
        }
        if self.users == 0 {
            return Err(Error::invalid("at least one user is required"));
        }
        Ok(())
    }
}

/// Complex noise power per sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    complex_variance: f64,
}

impl NoiseSpec {
    pub fn unit() -> Self {
        NoiseSpec {
            complex_variance: 1.0,
        }
    }

    pub fn with_variance(complex_variance: f64) -> Result<Self> {
        if !(complex_variance > 0.0 && complex_variance.is_finite()) {
            return Err(Error::invalid("noise variance must be positive"));
        }
        Ok(NoiseSpec { complex_variance })
    }

    pub fn complex_variance(&self) -> f64 {
        self.complex_variance
    }
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self::unit()
    }
}

/// Fading vector seen by one transmit stream across the `M` receive antennas.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelDraw {
    coeffs: Vec<Complex64>,
}

impl ChannelDraw {
    pub fn new(coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::invalid("channel needs at least one coefficient"));
        }
        if coeffs.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::invalid("channel coefficients must be finite"));
        }
        Ok(ChannelDraw { coeffs })
    }

    pub fn from_real(gains: &[f64]) -> Result<Self> {
        Self::new(gains.iter().map(|&g| Complex64::new(g, 0.0)).collect())
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn antennas(&self) -> usize {
        self.coeffs.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }
}

/// One `CN(0, variance)` sample.
#[inline]
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

/// Draws one SIMO fading vector. Coefficients are consumed antenna by antenna
/// from `rng`.
pub fn draw_simo<R: Rng + ?Sized>(config: &FadingConfig, rng: &mut R) -> ChannelDraw {
    ChannelDraw {
        coeffs: (0..config.antennas)
            .map(|_| complex_gaussian(rng, 1.0))
            .collect(),
    }
}

/// Draws `N` independent user vectors, user 1 first. With `N = 1` this
/// consumes `rng` exactly like [`draw_simo`] and yields the same vector.
pub fn draw_mac<R: Rng + ?Sized>(config: &FadingConfig, rng: &mut R) -> Vec<ChannelDraw> {
    (0..config.users).map(|_| draw_simo(config, rng)).collect()
}

/// `s_i(t) = h_i x(t) + n_i(t)`. The symbols are taken as given, so they
/// should already carry the transmit power. `noise = None` is noiseless.
pub fn transmit_simo<R: Rng + ?Sized>(
    h: &ChannelDraw,
    x: &[Complex64],
    noise: Option<&NoiseSpec>,
    rng: &mut R,
) -> Result<SimoBlock> {
    let m = h.antennas();
    let t_len = x.len();
    let mut block = SimoBlock::zeros(m, t_len)?;
    for (i, hi) in h.coeffs.iter().enumerate() {
        for (t, xt) in x.iter().enumerate() {
            let mut s = hi * xt;
            if let Some(n) = noise {
                s += complex_gaussian(rng, n.complex_variance);
            }
            block.set(i, t, s);
        }
    }
    Ok(block)
}

/// Superposition of several users at one receiver (MAC), one symbol
/// sequence per user.
pub fn transmit_mac<R: Rng + ?Sized>(
    users: &[ChannelDraw],
    x: &[Vec<Complex64>],
    noise: Option<&NoiseSpec>,
    rng: &mut R,
) -> Result<SimoBlock> {
    if users.len() != x.len() || users.is_empty() {
        return Err(Error::Dimension {
            what: "one symbol stream per user",
            expected: users.len(),
            got: x.len(),
        });
    }
    let m = users[0].antennas();
    let t_len = x[0].len();
    let mut block = SimoBlock::zeros(m, t_len)?;
    for i in 0..m {
        for t in 0..t_len {
            let mut s = Complex64::new(0.0, 0.0);
            for (h, xs) in users.iter().zip(x) {
                s += h.coeffs[i] * xs[t];
            }
            if let Some(n) = noise {
                s += complex_gaussian(rng, n.complex_variance);
            }
            block.set(i, t, s);
        }
    }
    Ok(block)
}
