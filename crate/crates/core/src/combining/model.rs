use nalgebra::{DMatrix, SymmetricEigen};

use super::design::{probe_effective, stack_rows};
use super::CombinerMatrix;
use crate::channel::ChannelDraw;
use crate::{Complex64, Error, Result};

/// One or more combiner branches applied to the same received block, with
/// the pieces needed to evaluate the effective channel cheaply per draw.
///
/// The effective map `F(h)` is real-linear in `(Re h, Im h)`, so it is
/// materialized once per antenna by probing and afterwards assembled as a
/// weighted sum. Branch noises are correlated when the stacked rows are not
/// orthonormal; `whitener` maps the stacked noise (covariance `Q Qᵀ / 2`) to
/// white noise of variance 1/2 on the row space of `Q`.
#[derive(Debug, Clone)]
pub struct CombinerModel {
    antennas: usize,
    block_len: usize,
    rows: usize,
    basis: Vec<DMatrix<f64>>,
    whitener: DMatrix<f64>,
}

impl CombinerModel {
    pub fn new(branches: &[CombinerMatrix]) -> Result<Self> {
        let first = branches
            .first()
            .ok_or_else(|| Error::invalid("at least one combiner branch"))?;
        let (antennas, block_len) = (first.antennas(), first.block_len());
        if branches
            .iter()
            .any(|b| b.antennas() != antennas || b.block_len() != block_len)
        {
            return Err(Error::invalid("branches must act on the same block shape"));
        }
        let q = stack_rows(&branches.iter().map(|b| b.entries().clone()).collect::<Vec<_>>())?;
        let mut basis = Vec::with_capacity(2 * antennas);
        for i in 0..antennas {
            for unit in [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)] {
                let mut coeffs = vec![Complex64::new(0.0, 0.0); antennas];
                coeffs[i] = unit;
                let h = ChannelDraw::new(coeffs)?;
                let parts: Vec<_> = branches.iter().map(|b| probe_effective(b, &h)).collect();
                basis.push(stack_rows(&parts)?);
            }
        }
        let whitener = row_space_whitener(&(&q * q.transpose()));
        Ok(CombinerModel {
            antennas,
            block_len,
            rows: q.nrows(),
            basis,
            whitener,
        })
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    /// Complex symbols per block.
    pub fn block_len(&self) -> usize {
        self.block_len
    }

    /// Real observations per block, across all branches.
    pub fn observations(&self) -> usize {
        self.rows
    }

    /// `F(h)`: stacked observations are `F x + noise`.
    pub fn effective(&self, h: &ChannelDraw) -> Result<DMatrix<f64>> {
        if h.antennas() != self.antennas {
            return Err(Error::Dimension {
                what: "channel antennas vs combiner",
                expected: self.antennas,
                got: h.antennas(),
            });
        }
        let mut f = DMatrix::zeros(self.rows, 2 * self.block_len);
        for (i, c) in h.coeffs().iter().enumerate() {
            f += &self.basis[2 * i] * c.re;
            f += &self.basis[2 * i + 1] * c.im;
        }
        Ok(f)
    }

    /// `Fᵀ (Q Qᵀ)⁺ F`, the per-unit-SNR information matrix.
    pub fn whitened_gram(&self, h: &ChannelDraw) -> Result<DMatrix<f64>> {
        let fw = &self.whitener * self.effective(h)?;
        Ok(fw.transpose() * fw)
    }

    /// Eigenvalues of [`Self::whitened_gram`], clamped at zero.
    pub fn gram_eigenvalues(&self, h: &ChannelDraw) -> Result<Vec<f64>> {
        let g = self.whitened_gram(h)?;
        Ok(SymmetricEigen::new(g)
            .eigenvalues
            .iter()
            .map(|&l| l.max(0.0))
            .collect())
    }
}

/// `W` with `Wᵀ W = K⁺` restricted to the numerically nonzero spectrum of `K`.
fn row_space_whitener(k: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(k.clone());
    let top = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..k.nrows())
        .filter(|&i| eig.eigenvalues[i] > 1e-10 * top)
        .collect();
    let mut w = DMatrix::zeros(keep.len(), k.nrows());
    for (r, &i) in keep.iter().enumerate() {
        let scale = eig.eigenvalues[i].sqrt().recip();
        for c in 0..k.nrows() {
            w[(r, c)] = eig.eigenvectors[(c, i)] * scale;
        }
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{draw_simo, FadingConfig};
    use crate::combining::{build_p2, build_p4_dither, build_p4_quasi, DitherVector};
    use crate::rng::{stream, Domain};

    #[test]
    fn assembled_map_matches_probe() {
        let q = build_p4_quasi();
        let model = CombinerModel::new(std::slice::from_ref(&q)).unwrap();
        let cfg = FadingConfig::new(4, 1, 5).unwrap();
        let mut rng = stream(5, Domain::Fading, 0);
        for _ in 0..50 {
            let h = draw_simo(&cfg, &mut rng);
            let diff = model.effective(&h).unwrap() - probe_effective(&q, &h);
            assert!(diff.abs().max() < 1e-12);
        }
    }

    #[test]
    fn two_antenna_gram_is_scaled_identity() {
        let model = CombinerModel::new(&[build_p2()]).unwrap();
        let h = ChannelDraw::new(vec![Complex64::new(0.5, -0.2), Complex64::new(1.5, 0.7)]).unwrap();
        for l in model.gram_eigenvalues(&h).unwrap() {
            assert!((l - h.norm_sqr() / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn identity_dither_collapses_to_single_branch() {
        let (a, b) = build_p4_dither(&DitherVector::identity());
        let two = CombinerModel::new(&[a.clone(), b]).unwrap();
        let one = CombinerModel::new(&[a]).unwrap();
        let h = ChannelDraw::from_real(&[0.2, 1.0, -0.4, 0.9]).unwrap();
        let mut e2 = two.gram_eigenvalues(&h).unwrap();
        let mut e1 = one.gram_eigenvalues(&h).unwrap();
        e2.sort_by(|x, y| x.partial_cmp(y).unwrap());
        e1.sort_by(|x, y| x.partial_cmp(y).unwrap());
        for (x, y) in e1.iter().zip(&e2) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_wrong_channel_size() {
        let model = CombinerModel::new(&[build_p2()]).unwrap();
        let h = ChannelDraw::from_real(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(model.effective(&h).is_err());
    }
}
