//! Uniform mid-riser scalar quantizer with optional subtractive dither.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const MAX_BITS: u32 = 32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantizerSpec {
    bits: u32,
    loading: f64,
    subtractive_dither: bool,
}

impl QuantizerSpec {
    /// `2^bits` levels spread evenly over `[-loading, loading]`.
    pub fn new(bits: u32, loading: f64, subtractive_dither: bool) -> Result<Self> {
        if bits == 0 || bits > MAX_BITS {
            return Err(Error::invalid(format!(
                "bits per real sample must be in 1..={MAX_BITS} (got {bits})"
            )));
        }
        if !(loading > 0.0 && loading.is_finite()) {
            return Err(Error::invalid("quantizer loading must be positive"));
        }
        Ok(QuantizerSpec {
            bits,
            loading,
            subtractive_dither,
        })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn loading(&self) -> f64 {
        self.loading
    }

    pub fn subtractive_dither(&self) -> bool {
        self.subtractive_dither
    }

    pub fn levels(&self) -> u64 {
        1u64 << self.bits
    }

    pub fn step(&self) -> f64 {
        2.0 * self.loading / self.levels() as f64
    }

    /// Error variance under the uniform-error model.
    pub fn error_variance(&self) -> f64 {
        self.step().powi(2) / 12.0
    }

    /// Nearest level without dither; `None` level index saturates.
    fn level(&self, v: f64) -> (f64, bool) {
        let step = self.step();
        let half = (self.levels() / 2) as f64;
        let idx = (v / step).floor();
        let clipped = idx.clamp(-half, half - 1.0);
        ((clipped + 0.5) * step, clipped != idx)
    }
}

/// Clip level for a quantizer fed by a signal whose noise-free part has
/// standard deviation `sigma`: three standard deviations.
pub fn loading_from_noise_free_std(sigma: f64) -> Result<f64> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::invalid("noise-free standard deviation must be positive"));
    }
    Ok(3.0 * sigma)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Quantized {
    pub values: Vec<f64>,
    /// `y - Q(y)`.
    pub error: Vec<f64>,
    pub saturated: usize,
}

impl Quantized {
    pub fn saturation_rate(&self) -> f64 {
        if self.values.is_empty() {
            0.0
        } else {
            self.saturated as f64 / self.values.len() as f64
        }
    }
}

/// Quantizes `y` component-wise. `dither` is only drawn from when `spec`
/// enables subtractive dither.
pub fn quantize<R: Rng + ?Sized>(y: &[f64], spec: &QuantizerSpec, dither: &mut R) -> Quantized {
    let half_step = spec.step() / 2.0;
    let mut values = Vec::with_capacity(y.len());
    let mut error = Vec::with_capacity(y.len());
    let mut saturated = 0;
    for &v in y {
        let (q, sat) = if spec.subtractive_dither {
            let u = dither.random_range(-half_step..half_step);
            let (q, sat) = spec.level(v + u);
            (q - u, sat)
        } else {
            spec.level(v)
        };
        saturated += sat as usize;
        values.push(q);
        error.push(v - q);
    }
    Quantized {
        values,
        error,
        saturated,
    }
}

/// In-place variant used by the simulators; returns the saturation count.
pub fn quantize_in_place<R: Rng + ?Sized>(y: &mut [f64], spec: &QuantizerSpec, dither: &mut R) -> usize {
    let half_step = spec.step() / 2.0;
    let mut saturated = 0;
    for v in y.iter_mut() {
        if spec.subtractive_dither {
            let u = dither.random_range(-half_step..half_step);
            let (q, sat) = spec.level(*v + u);
            *v = q - u;
            saturated += sat as usize;
        } else {
            let (q, sat) = spec.level(*v);
            *v = q;
            saturated += sat as usize;
        }
    }
    saturated
}
