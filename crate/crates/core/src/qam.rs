//! Gray-labelled square 16-QAM with unit average energy.

use crate::Complex64;

pub const QAM16_POINTS: usize = 16;

/// Amplitude scale: levels are `{±1, ±3} / √10`.
const SCALE: f64 = 0.316_227_766_016_837_94;

/// Two Gray bits per axis: 00 → -3, 01 → -1, 11 → +1, 10 → +3.
const AXIS: [f64; 4] = [-3.0, -1.0, 3.0, 1.0];

fn axis_bits(level: f64) -> u8 {
    let v = level / SCALE;
    if v < -2.0 {
        0b00
    } else if v < 0.0 {
        0b01
    } else if v < 2.0 {
        0b11
    } else {
        0b10
    }
}

/// Point for label `label` (upper two bits in-phase, lower two quadrature).
pub fn qam16_point(label: u8) -> Complex64 {
    let label = label & 0x0f;
    Complex64::new(AXIS[(label >> 2) as usize] * SCALE, AXIS[(label & 3) as usize] * SCALE)
}

/// Nearest-point label.
pub fn qam16_demap(z: Complex64) -> u8 {
    axis_bits(z.re) << 2 | axis_bits(z.im)
}

/// Gaussian tail `Q(x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Symbol error rate over AWGN at `Es/N0 = snr` (complex noise variance
/// `1/snr` for unit-energy symbols).
pub fn qam16_ser_awgn(snr: f64) -> f64 {
    let p = 1.5 * q_function((snr / 5.0).sqrt());
    1.0 - (1.0 - p) * (1.0 - p)
}
