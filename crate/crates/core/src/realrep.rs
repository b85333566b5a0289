//! Real-valued stacking of complex space-time blocks.
//!
//! Every combiner in this crate acts on real vectors. A block of complex
//! antenna outputs `s_i(t)` is flattened time-major, antenna-minor, with the
//! real part before the imaginary part:
//!
//! ```text
//! [s1R(1) s1I(1) s2R(1) s2I(1) ... sMR(1) sMI(1) s1R(2) ...]
//! ```

use crate::{Complex64, Error, Result};

/// `M x T` grid of complex antenna outputs, stored antenna-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SimoBlock {
    antennas: usize,
    len: usize,
    samples: Vec<Complex64>,
}

impl SimoBlock {
    /// Builds a block from antenna-major samples (`samples[i * len + t]`).
    pub fn new(antennas: usize, len: usize, samples: Vec<Complex64>) -> Result<Self> {
        if antennas == 0 || len == 0 {
            return Err(Error::invalid("block needs at least one antenna and one symbol"));
        }
        if samples.len() != antennas * len {
            return Err(Error::Dimension {
                what: "SimoBlock samples",
                expected: antennas * len,
                got: samples.len(),
            });
        }
        Ok(SimoBlock {
            antennas,
            len,
            samples,
        })
    }

    pub fn zeros(antennas: usize, len: usize) -> Result<Self> {
        Self::new(antennas, len, vec![Complex64::new(0.0, 0.0); antennas * len])
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Sample of antenna `i` at time `t` (both zero-based).
    pub fn get(&self, i: usize, t: usize) -> Complex64 {
        self.samples[i * self.len + t]
    }

    pub fn set(&mut self, i: usize, t: usize, v: Complex64) {
        self.samples[i * self.len + t] = v;
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum()
    }
}

/// Stacked received block, length `2 * M * T`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealFrame(Vec<f64>);

impl RealFrame {
    pub fn from_vec(values: Vec<f64>) -> Self {
        RealFrame(values)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Stacked source symbols `[xR(1) xI(1) ... xR(T) xI(T)]`, length `2T`.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceFrame(Vec<f64>);

impl SourceFrame {
    pub fn from_vec(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.len() % 2 != 0 {
            return Err(Error::Dimension {
                what: "SourceFrame length must be even and nonzero",
                expected: values.len() + values.len() % 2,
                got: values.len(),
            });
        }
        Ok(SourceFrame(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of complex symbols carried.
    pub fn symbols(&self) -> usize {
        self.0.len() / 2
    }
}

/// Index of `Re s_i(t)` in the stacked real vector; the imaginary part follows.
#[inline]
pub fn received_index(antennas: usize, antenna: usize, t: usize) -> usize {
    2 * (t * antennas + antenna)
}

pub fn stack_received(block: &SimoBlock) -> RealFrame {
    let m = block.antennas;
    let mut out = vec![0.0; 2 * m * block.len];
    for t in 0..block.len {
        for i in 0..m {
            let s = block.get(i, t);
            let k = received_index(m, i, t);
            out[k] = s.re;
            out[k + 1] = s.im;
        }
    }
    RealFrame(out)
}

pub fn stack_source(x: &[Complex64]) -> Result<SourceFrame> {
    if x.is_empty() {
        return Err(Error::invalid("source block needs at least one symbol"));
    }
    Ok(SourceFrame(x.iter().flat_map(|v| [v.re, v.im]).collect()))
}

pub fn unstack_source(frame: &SourceFrame) -> Vec<Complex64> {
    frame
        .0
        .chunks_exact(2)
        .map(|c| Complex64::new(c[0], c[1]))
        .collect()
}

/// Unstacks a raw real slice; odd length is a structural error.
pub fn unstack_slice(values: &[f64]) -> Result<Vec<Complex64>> {
    if values.len() % 2 != 0 {
        return Err(Error::Dimension {
            what: "real slice length must be even",
            expected: values.len() + 1,
            got: values.len(),
        });
    }
    Ok(values
        .chunks_exact(2)
        .map(|c| Complex64::new(c[0], c[1]))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn stack_order_two_by_two() {
        // s1(1)=1+2i, s2(1)=3+4i, s1(2)=5+6i, s2(2)=7+8i
        let block = SimoBlock::new(2, 2, vec![c(1., 2.), c(5., 6.), c(3., 4.), c(7., 8.)]).unwrap();
        assert_eq!(
            stack_received(&block).as_slice(),
            &[1., 2., 3., 4., 5., 6., 7., 8.]
        );
    }

    #[test]
    fn stack_zero_and_single() {
        let z = SimoBlock::zeros(2, 2).unwrap();
        assert_eq!(stack_received(&z).as_slice(), &[0.0; 8]);
        let one = SimoBlock::new(1, 1, vec![c(0., 1.)]).unwrap();
        assert_eq!(stack_received(&one).as_slice(), &[0., 1.]);
    }

    #[test]
    fn block_dimension_errors() {
        assert!(matches!(
            SimoBlock::new(2, 2, vec![c(0., 0.); 3]),
            Err(Error::Dimension { .. })
        ));
        assert!(SimoBlock::new(0, 2, vec![]).is_err());
    }

    #[test]
    fn source_stacking() {
        assert_eq!(
            stack_source(&[c(1., 2.), c(3., 4.)]).unwrap().as_slice(),
            &[1., 2., 3., 4.]
        );
        assert_eq!(stack_source(&[c(0., 0.); 2]).unwrap().as_slice(), &[0.0; 4]);
        assert_eq!(stack_source(&[c(0., 1.)]).unwrap().as_slice(), &[0., 1.]);
        assert!(stack_source(&[]).is_err());
    }

    #[test]
    fn source_unstacking() {
        let f = SourceFrame::from_vec(vec![1., 2., 3., 4.]).unwrap();
        assert_eq!(unstack_source(&f), vec![c(1., 2.), c(3., 4.)]);
        let f = SourceFrame::from_vec(vec![0., 1.]).unwrap();
        assert_eq!(unstack_source(&f), vec![c(0., 1.)]);
        assert!(SourceFrame::from_vec(vec![1., 2., 3.]).is_err());
        assert!(unstack_slice(&[1.0]).is_err());
    }

    proptest! {
        #[test]
        fn source_round_trip(v in prop::collection::vec((-1e6f64..1e6, -1e6f64..1e6), 1..32)) {
            let x: Vec<Complex64> = v.iter().map(|&(a, b)| c(a, b)).collect();
            let back = unstack_source(&stack_source(&x).unwrap());
            prop_assert_eq!(back, x);
        }

        #[test]
        fn stacking_preserves_energy(
            m in 1usize..5,
            t in 1usize..9,
            seed in prop::collection::vec(-10.0f64..10.0, 64 * 2),
        ) {
            let samples: Vec<Complex64> =
                (0..m * t).map(|k| c(seed[2 * k], seed[2 * k + 1])).collect();
            let block = SimoBlock::new(m, t, samples).unwrap();
            let e = block.energy();
            let stacked: f64 = stack_received(&block).as_slice().iter().map(|v| v * v).sum();
            prop_assert!((stacked - e).abs() <= 1e-12 * e.max(1e-300));
        }
    }
}
