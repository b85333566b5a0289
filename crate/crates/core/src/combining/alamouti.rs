use nalgebra::DMatrix;
use std::f64::consts::FRAC_1_SQRT_2;

use super::{CombinerMatrix, EffectiveOrthogonal};
use crate::{Complex64, Error, Result};

/// The fixed 4x8 two-antenna combiner.
pub fn build_p2() -> CombinerMatrix {
    #[rustfmt::skip]
    let rows: [f64; 32] = [
        1., 0., 0., 0.,  0., 0.,  1.,  0.,
        0., 1., 0., 0.,  0., 0.,  0., -1.,
        0., 0., 1., 0., -1., 0.,  0.,  0.,
        0., 0., 0., 1.,  0., 1.,  0.,  0.,
    ];
    let m = DMatrix::from_row_slice(4, 8, &rows) * FRAC_1_SQRT_2;
    CombinerMatrix::new(m, 2, 2).expect("4x8 spans two antennas over two slots")
}

/// Orthonormal effective matrix of the two-antenna combiner, with gain
/// `‖h‖/√2`. The bottom-right entry is `h1R`; any other reading breaks
/// orthonormality.
pub fn build_u2(h1: Complex64, h2: Complex64) -> Result<EffectiveOrthogonal> {
    let norm = (h1.norm_sqr() + h2.norm_sqr()).sqrt();
    if norm == 0.0 {
        return Err(Error::SingularChannel("two-antenna channel is all zero"));
    }
    let (a, b, c, d) = (h1.re, h1.im, h2.re, h2.im);
    #[rustfmt::skip]
    let rows: [f64; 16] = [
        a, -b,  c, -d,
        b,  a, -d, -c,
        c, -d, -a,  b,
        d,  c,  b,  a,
    ];
    Ok(EffectiveOrthogonal {
        entries: DMatrix::from_row_slice(4, 4, &rows) / norm,
        gain: norm * FRAC_1_SQRT_2,
    })
}
