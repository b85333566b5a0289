//! Combiner constructions and effective channels.
//!
//! The universal combiners are fixed real matrices with orthonormal rows
//! applied to the stacked received block. For two antennas this is the
//! transpose of the real form of Alamouti modulation; for four antennas it
//! is built from the rate-1/2 complex orthogonal design, either restricted to
//! four time slots (quasi-orthogonal) or paired with a phase-dithered copy.
//!
//! MRC, selection combining and single-antenna reception are channel
//! dependent and are represented only through their scalar effective gain.

mod alamouti;
mod design;
mod model;

pub use alamouti::{build_p2, build_u2};
pub use design::{
    build_p4, build_p4_dither, build_p4_quasi, probe_effective, DitherVector, OrthogonalDesign,
    QUASI_TIME_SLOTS,
};
pub use model::CombinerModel;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::channel::ChannelDraw;
use crate::realrep::{RealFrame, SourceFrame};
use crate::{Error, Result};

/// Channel-independent dimension-reducing matrix with orthonormal rows.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinerMatrix {
    entries: DMatrix<f64>,
    antennas: usize,
    block_len: usize,
}

impl CombinerMatrix {
    /// Wraps `entries`, whose columns must index a stacked `antennas x
    /// block_len` frame.
    pub fn new(entries: DMatrix<f64>, antennas: usize, block_len: usize) -> Result<Self> {
        if entries.ncols() != 2 * antennas * block_len {
            return Err(Error::Dimension {
                what: "combiner columns",
                expected: 2 * antennas * block_len,
                got: entries.ncols(),
            });
        }
        Ok(CombinerMatrix {
            entries,
            antennas,
            block_len,
        })
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn rows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn cols(&self) -> usize {
        self.entries.ncols()
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    /// Number of complex symbol times the combiner spans.
    pub fn block_len(&self) -> usize {
        self.block_len
    }

    /// `max |P Pᵀ - I|`.
    pub fn row_orthonormality_error(&self) -> f64 {
        gram_identity_error(&(&self.entries * self.entries.transpose()))
    }
}

/// `U` with its scalar gain: the combiner output is `gain * U x + noise`.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveOrthogonal {
    pub entries: DMatrix<f64>,
    pub gain: f64,
}

impl EffectiveOrthogonal {
    /// `max |U Uᵀ - I|`.
    pub fn row_orthonormality_error(&self) -> f64 {
        gram_identity_error(&(&self.entries * self.entries.transpose()))
    }

    /// `max |Uᵀ U - I|`; only meaningful for square `U`.
    pub fn column_orthonormality_error(&self) -> f64 {
        gram_identity_error(&(self.entries.transpose() * &self.entries))
    }
}

pub(crate) fn gram_identity_error(g: &DMatrix<f64>) -> f64 {
    let n = g.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..g.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - target).abs());
        }
    }
    worst
}

/// `y = P s`.
pub fn combine(p: &CombinerMatrix, frame: &RealFrame) -> Result<Vec<f64>> {
    if frame.len() != p.cols() {
        return Err(Error::Dimension {
            what: "frame length vs combiner columns",
            expected: p.cols(),
            got: frame.len(),
        });
    }
    let s = DVector::from_column_slice(frame.as_slice());
    Ok((p.entries() * s).iter().copied().collect())
}

/// `x̂ = Uᵀ y`. With noiseless input this returns `gain * x`.
pub fn reconstruct(u: &EffectiveOrthogonal, y: &[f64]) -> Result<SourceFrame> {
    if y.len() != u.entries.nrows() {
        return Err(Error::Dimension {
            what: "observation length vs effective rows",
            expected: u.entries.nrows(),
            got: y.len(),
        });
    }
    let y = DVector::from_column_slice(y);
    SourceFrame::from_vec((u.entries.transpose() * y).iter().copied().collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Maximum-ratio combining (optimal receiver; `opt` in multi-user runs).
    Mrc,
    /// Selection combining: strongest antenna.
    Sc,
    /// Antenna 1 regardless of channel ("arbitrary antenna").
    Single,
    /// Universal combiner for two antennas.
    Ala2,
    /// Four-antenna universal combiner with a phase-dithered second branch.
    Ala4Dith,
    /// Four-antenna quasi-orthogonal universal combiner.
    Ala4Quasi,
}

impl Scheme {
    pub const ALL: [Scheme; 6] = [
        Scheme::Mrc,
        Scheme::Sc,
        Scheme::Single,
        Scheme::Ala2,
        Scheme::Ala4Dith,
        Scheme::Ala4Quasi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Mrc => "mrc",
            Scheme::Sc => "sc",
            Scheme::Single => "single",
            Scheme::Ala2 => "ala2",
            Scheme::Ala4Dith => "ala4-dith",
            Scheme::Ala4Quasi => "ala4-quasi",
        }
    }

    /// Receive-antenna count the scheme is defined for, if restricted.
    pub fn required_antennas(self) -> Option<usize> {
        match self {
            Scheme::Ala2 => Some(2),
            Scheme::Ala4Dith | Scheme::Ala4Quasi => Some(4),
            _ => None,
        }
    }

    pub fn supports(self, antennas: usize) -> bool {
        self.required_antennas().is_none_or(|m| m == antennas)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.name() == s.trim())
            .ok_or_else(|| Error::invalid(format!("unknown scheme '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeGain {
    pub scheme: Scheme,
    pub h_eff: f64,
    /// Zero-based antenna chosen by selection combining.
    pub selected_antenna: Option<usize>,
}

/// Scalar effective gain of `scheme` on channel `h`.
///
/// MRC gives `‖h‖`, SC `max |h_i|` (ties to the lower index), the
/// two-antenna universal combiner `‖h‖/√2`. The four-antenna universal
/// combiners are not scalar channels; their nominal scale `‖h‖/2` is
/// returned and the log-det metric lives in [`crate::capacity`].
pub fn eff_gain(scheme: Scheme, h: &ChannelDraw) -> Result<SchemeGain> {
    if !scheme.supports(h.antennas()) {
        return Err(Error::invalid(format!(
            "scheme {scheme} needs {} antennas, channel has {}",
            scheme.required_antennas().unwrap_or(0),
            h.antennas()
        )));
    }
    let mut selected = None;
    let h_eff = match scheme {
        Scheme::Mrc => h.norm(),
        Scheme::Sc => {
            let (idx, best) = h
                .coeffs()
                .iter()
                .map(|c| c.norm_sqr())
                .enumerate()
                .fold((0, -1.0), |acc, (i, g)| if g > acc.1 { (i, g) } else { acc });
            selected = Some(idx);
            best.sqrt()
        }
        Scheme::Single => h.coeffs()[0].norm(),
        Scheme::Ala2 => h.norm() / std::f64::consts::SQRT_2,
        Scheme::Ala4Dith | Scheme::Ala4Quasi => h.norm() / 2.0,
    };
    Ok(SchemeGain {
        scheme,
        h_eff,
        selected_antenna: selected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{draw_simo, FadingConfig};
    use crate::rng::{stream, Domain};
    use crate::Complex64;
    use std::f64::consts::SQRT_2;

    #[test]
    fn gains_at_unit_channel() {
        let h = ChannelDraw::from_real(&[1.0, 0.0]).unwrap();
        assert_eq!(eff_gain(Scheme::Mrc, &h).unwrap().h_eff, 1.0);
        assert_eq!(eff_gain(Scheme::Sc, &h).unwrap().h_eff, 1.0);
        assert!((eff_gain(Scheme::Ala2, &h).unwrap().h_eff - 1.0 / SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn gains_at_three_four() {
        let h = ChannelDraw::from_real(&[3.0, 4.0]).unwrap();
        assert!((eff_gain(Scheme::Mrc, &h).unwrap().h_eff - 5.0).abs() < 1e-15);
        let sc = eff_gain(Scheme::Sc, &h).unwrap();
        assert!((sc.h_eff - 4.0).abs() < 1e-15);
        assert_eq!(sc.selected_antenna, Some(1));
        assert!((eff_gain(Scheme::Ala2, &h).unwrap().h_eff - 5.0 / SQRT_2).abs() < 1e-14);
    }

    #[test]
    fn zero_channel_and_ties() {
        let h = ChannelDraw::from_real(&[0.0, 0.0]).unwrap();
        for s in [Scheme::Mrc, Scheme::Sc, Scheme::Ala2, Scheme::Single] {
            assert_eq!(eff_gain(s, &h).unwrap().h_eff, 0.0);
        }
        let tie = ChannelDraw::new(vec![Complex64::new(0.0, 2.0), Complex64::new(2.0, 0.0)]).unwrap();
        assert_eq!(eff_gain(Scheme::Sc, &tie).unwrap().selected_antenna, Some(0));
    }

    #[test]
    fn scheme_dimension_pairing() {
        let h4 = ChannelDraw::from_real(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(eff_gain(Scheme::Ala2, &h4).is_err());
        let h2 = ChannelDraw::from_real(&[1.0, 0.0]).unwrap();
        assert!(eff_gain(Scheme::Ala4Quasi, &h2).is_err());
        assert!(eff_gain(Scheme::Mrc, &h4).is_ok());
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in Scheme::ALL {
            assert_eq!(s.name().parse::<Scheme>().unwrap(), s);
        }
        assert!("egc".parse::<Scheme>().is_err());
    }

    #[test]
    fn gain_ordering_and_squares() {
        let cfg = FadingConfig::new(2, 1, 1).unwrap();
        let mut rng = stream(1, Domain::Fading, 0);
        for _ in 0..10_000 {
            let h = draw_simo(&cfg, &mut rng);
            let a = eff_gain(Scheme::Ala2, &h).unwrap().h_eff;
            let s = eff_gain(Scheme::Sc, &h).unwrap().h_eff;
            let m = eff_gain(Scheme::Mrc, &h).unwrap().h_eff;
            assert!(a <= s + 1e-12 && s <= m + 1e-12);
            let g: Vec<f64> = h.coeffs().iter().map(|c| c.norm_sqr()).collect();
            assert!((m * m - (g[0] + g[1])).abs() < 1e-12);
            assert!((s * s - g[0].max(g[1])).abs() < 1e-12);
            assert!((a * a - (g[0] + g[1]) / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn combine_and_reconstruct_dimension_checks() {
        let p = build_p2();
        assert!(combine(&p, &RealFrame::from_vec(vec![0.0; 7])).is_err());
        assert_eq!(combine(&p, &RealFrame::from_vec(vec![0.0; 8])).unwrap(), vec![0.0; 4]);
        let u = build_u2(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)).unwrap();
        assert!(reconstruct(&u, &[1.0; 3]).is_err());
    }
}
