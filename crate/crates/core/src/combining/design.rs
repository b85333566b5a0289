use nalgebra::DMatrix;
use rand::Rng;
use std::f64::consts::{PI, SQRT_2};

use super::CombinerMatrix;
use crate::channel::{transmit_simo, ChannelDraw};
use crate::realrep::{received_index, stack_received};
use crate::{Complex64, Error, Result};

/// Time slots of the rate-1/2 four-antenna combiner kept by the
/// quasi-orthogonal variant (zero-based; columns 1-16 and 49-64).
pub const QUASI_TIME_SLOTS: [usize; 4] = [0, 1, 6, 7];

/// One nonzero cell of a complex orthogonal design: `sign * x_symbol` (or its
/// conjugate) sent from `antenna` at `time`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Cell {
    time: usize,
    antenna: usize,
    symbol: usize,
    negate: bool,
    conjugate: bool,
}

/// A linear space-time design, read on the receive side: its real transpose
/// is the combiner.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrthogonalDesign {
    time_slots: usize,
    antennas: usize,
    symbols: usize,
    cells: Vec<Cell>,
}

impl OrthogonalDesign {
    fn from_table(table: &[&[(i8, usize, bool)]], symbols: usize) -> Self {
        let antennas = table[0].len();
        let mut cells = Vec::new();
        for (time, row) in table.iter().enumerate() {
            for (antenna, &(sign, symbol, conjugate)) in row.iter().enumerate() {
                cells.push(Cell {
                    time,
                    antenna,
                    symbol,
                    negate: sign < 0,
                    conjugate,
                });
            }
        }
        OrthogonalDesign {
            time_slots: table.len(),
            antennas,
            symbols,
            cells,
        }
    }

    /// Alamouti: slot 1 sends `(x1, x2)`, slot 2 sends `(-x2*, x1*)`.
    pub fn alamouti() -> Self {
        Self::from_table(
            &[&[(1, 0, false), (1, 1, false)], &[(-1, 1, true), (1, 0, true)]],
            2,
        )
    }

    /// Rate-1/2 design for four antennas: the 4x4 real orthogonal design in
    /// slots 1-4 followed by its conjugate in slots 5-8.
    pub fn rate_half_four() -> Self {
        const REAL: [[(i8, usize); 4]; 4] = [
            [(1, 0), (1, 1), (1, 2), (1, 3)],
            [(-1, 1), (1, 0), (-1, 3), (1, 2)],
            [(-1, 2), (1, 3), (1, 0), (-1, 1)],
            [(-1, 3), (-1, 2), (1, 1), (1, 0)],
        ];
        let rows: Vec<Vec<(i8, usize, bool)>> = [false, true]
            .iter()
            .flat_map(|&conj| {
                REAL.iter()
                    .map(move |r| r.iter().map(|&(s, k)| (s, k, conj)).collect())
            })
            .collect();
        let refs: Vec<&[(i8, usize, bool)]> = rows.iter().map(|r| r.as_slice()).collect();
        Self::from_table(&refs, 4)
    }

    pub fn time_slots(&self) -> usize {
        self.time_slots
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    pub fn symbols(&self) -> usize {
        self.symbols
    }

    /// Real-stacked codeword produced by the real unit input `k`
    /// (`k = 2 * symbol + {0: real, 1: imaginary}`).
    fn codeword(&self, k: usize) -> Vec<f64> {
        let unit = if k % 2 == 0 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 1.0)
        };
        let mut row = vec![0.0; 2 * self.antennas * self.time_slots];
        for cell in self.cells.iter().filter(|c| c.symbol == k / 2) {
            let mut v = if cell.conjugate { unit.conj() } else { unit };
            if cell.negate {
                v = -v;
            }
            let idx = received_index(self.antennas, cell.antenna, cell.time);
            row[idx] += v.re;
            row[idx + 1] += v.im;
        }
        row
    }

    /// Combiner whose rows are the normalized real codewords.
    pub fn combiner(&self) -> CombinerMatrix {
        let rows = 2 * self.symbols;
        let cols = 2 * self.antennas * self.time_slots;
        let mut m = DMatrix::zeros(rows, cols);
        for k in 0..rows {
            let word = self.codeword(k);
            let norm = word.iter().map(|v| v * v).sum::<f64>().sqrt();
            for (j, v) in word.into_iter().enumerate() {
                m[(k, j)] = v / norm;
            }
        }
        CombinerMatrix::new(m, self.antennas, self.time_slots)
            .expect("design dimensions are consistent")
    }
}

/// 8x64 four-antenna combiner spanning eight slots.
pub fn build_p4() -> CombinerMatrix {
    OrthogonalDesign::rate_half_four().combiner()
}

/// 8x32 quasi-orthogonal combiner: the slots in [`QUASI_TIME_SLOTS`] of
/// [`build_p4`], scaled by √2, acting on four consecutive symbol times.
pub fn build_p4_quasi() -> CombinerMatrix {
    let full = build_p4();
    let per_slot = 2 * full.antennas();
    let mut m = DMatrix::zeros(full.rows(), per_slot * QUASI_TIME_SLOTS.len());
    for (new_slot, &slot) in QUASI_TIME_SLOTS.iter().enumerate() {
        for j in 0..per_slot {
            for r in 0..full.rows() {
                m[(r, new_slot * per_slot + j)] = full.entries()[(r, slot * per_slot + j)] * SQRT_2;
            }
        }
    }
    CombinerMatrix::new(m, full.antennas(), QUASI_TIME_SLOTS.len())
        .expect("quasi combiner dimensions are consistent")
}

/// Per-antenna unit-modulus phase rotations, constant over the block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DitherVector {
    d: [Complex64; 4],
}

impl DitherVector {
    pub fn from_phases(phases: [f64; 4]) -> Self {
        DitherVector {
            d: phases.map(|p| Complex64::from_polar(1.0, p)),
        }
    }

    pub fn identity() -> Self {
        Self::from_phases([0.0; 4])
    }

    /// i.i.d. uniform phases on `[0, 2π)`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut phases = [0.0; 4];
        for p in phases.iter_mut() {
            *p = rng.random_range(0.0..2.0 * PI);
        }
        Self::from_phases(phases)
    }

    pub fn values(&self) -> &[Complex64; 4] {
        &self.d
    }
}

/// Undithered and dithered 8x64 branches. The dither multiplies antenna
/// `i` by `d_i` ahead of the combiner and is folded into its columns.
pub fn build_p4_dither(d: &DitherVector) -> (CombinerMatrix, CombinerMatrix) {
    let base = build_p4();
    let m = base.antennas();
    let mut dith = base.entries().clone();
    for t in 0..base.block_len() {
        for (i, di) in d.d.iter().enumerate() {
            let idx = received_index(m, i, t);
            for r in 0..base.rows() {
                let re = base.entries()[(r, idx)];
                let im = base.entries()[(r, idx + 1)];
                dith[(r, idx)] = di.re * re + di.im * im;
                dith[(r, idx + 1)] = -di.im * re + di.re * im;
            }
        }
    }
    let dith = CombinerMatrix::new(dith, m, base.block_len()).expect("same shape as base");
    (base, dith)
}

/// Effective real map `F` with `P s = F x` for noiseless `s_i(t) = h_i x(t)`,
/// obtained by pushing unit source vectors through the channel and combiner.
pub fn probe_effective(p: &CombinerMatrix, h: &ChannelDraw) -> DMatrix<f64> {
    let t_len = p.block_len();
    let mut f = DMatrix::zeros(p.rows(), 2 * t_len);
    let mut scratch = crate::rng::stream(0, crate::rng::Domain::Test, 0);
    for col in 0..2 * t_len {
        let mut x = vec![Complex64::new(0.0, 0.0); t_len];
        x[col / 2] = if col % 2 == 0 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 1.0)
        };
        let block = transmit_simo(h, &x, None, &mut scratch).expect("nonempty block");
        let frame = stack_received(&block);
        let y = p.entries() * nalgebra::DVector::from_column_slice(frame.as_slice());
        f.set_column(col, &y);
    }
    f
}

/// Stacks branch effective maps vertically.
pub(crate) fn stack_rows(parts: &[DMatrix<f64>]) -> Result<DMatrix<f64>> {
    let cols = parts.first().map(|p| p.ncols()).unwrap_or(0);
    if parts.iter().any(|p| p.ncols() != cols) {
        return Err(Error::invalid("branches must share the column dimension"));
    }
    let rows: usize = parts.iter().map(|p| p.nrows()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut r0 = 0;
    for p in parts {
        out.view_mut((r0, 0), (p.nrows(), cols)).copy_from(p);
        r0 += p.nrows();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{draw_simo, FadingConfig};
    use crate::combining::{build_p2, combine, gram_identity_error};
    use crate::realrep::stack_source;
    use crate::rng::{stream, Domain};
    use nalgebra::DVector;

    fn random_x<R: Rng>(rng: &mut R, n: usize) -> Vec<Complex64> {
        (0..n)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect()
    }

    #[test]
    fn alamouti_design_reproduces_p2() {
        let from_design = OrthogonalDesign::alamouti().combiner();
        assert!((from_design.entries() - build_p2().entries()).abs().max() < 1e-15);
    }

    #[test]
    fn p4_shapes_and_orthonormality() {
        let p = build_p4();
        assert_eq!((p.rows(), p.cols()), (8, 64));
        assert!(p.row_orthonormality_error() < 1e-12);
        let q = build_p4_quasi();
        assert_eq!((q.rows(), q.cols()), (8, 32));
        assert!(q.row_orthonormality_error() < 1e-12);
    }

    #[test]
    fn quasi_uses_first_sixteen_and_last_sixteen_columns() {
        let p = build_p4();
        let q = build_p4_quasi();
        for r in 0..8 {
            for j in 0..16 {
                assert_eq!(q.entries()[(r, j)], p.entries()[(r, j)] * SQRT_2);
                assert_eq!(q.entries()[(r, 16 + j)], p.entries()[(r, 48 + j)] * SQRT_2);
            }
        }
    }

    #[test]
    fn p4_effective_rows_orthonormal_with_half_norm_gain() {
        let cfg = FadingConfig::new(4, 1, 2).unwrap();
        let mut rng = stream(2, Domain::Fading, 0);
        let p = build_p4();
        for _ in 0..500 {
            let h = draw_simo(&cfg, &mut rng);
            let f = probe_effective(&p, &h);
            assert_eq!((f.nrows(), f.ncols()), (8, 16));
            let u = f / (h.norm() / 2.0);
            assert!(gram_identity_error(&(&u * u.transpose())) < 1e-12);
        }
    }

    #[test]
    fn quasi_factorization_against_direct_pipeline() {
        let cfg = FadingConfig::new(4, 1, 3).unwrap();
        let mut rng = stream(3, Domain::Fading, 0);
        let q = build_p4_quasi();
        for _ in 0..300 {
            let h = draw_simo(&cfg, &mut rng);
            let u = probe_effective(&q, &h) / (h.norm() / 2.0);
            let x = random_x(&mut rng, 4);
            let block = transmit_simo(&h, &x, None, &mut rng).unwrap();
            let y = combine(&q, &stack_received(&block)).unwrap();
            let xs = DVector::from_column_slice(stack_source(&x).unwrap().as_slice());
            let pred = u * xs * (h.norm() / 2.0);
            for k in 0..8 {
                assert!((y[k] - pred[k]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn quasi_unit_rows_at_first_antenna() {
        let h = ChannelDraw::from_real(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        let u = probe_effective(&build_p4_quasi(), &h) / 0.5;
        for r in 0..8 {
            let row = u.row(r);
            assert!((row.norm() - 1.0).abs() < 1e-12);
            let nonzero = row.iter().filter(|v| v.abs() > 1e-12).count();
            assert_eq!(nonzero, 1, "row {r} is not signed-permutation-like");
        }
    }

    #[test]
    fn dither_branches() {
        let (a, b) = build_p4_dither(&DitherVector::identity());
        assert_eq!(a, b);
        let h = ChannelDraw::from_real(&[0.3, -1.0, 0.8, 0.4]).unwrap();
        let f = stack_rows(&[probe_effective(&a, &h), probe_effective(&b, &h)]).unwrap();
        assert_eq!(f.rank(1e-9), 8);

        let mut rng = stream(12, Domain::Dither, 0);
        let d = DitherVector::random(&mut rng);
        for v in d.values() {
            assert!((v.norm() - 1.0).abs() < 1e-15);
        }
        let (a, b) = build_p4_dither(&d);
        assert!(a.row_orthonormality_error() < 1e-12);
        assert!(b.row_orthonormality_error() < 1e-12);
    }

    #[test]
    fn dither_branch_equals_combining_rotated_antennas() {
        let mut rng = stream(13, Domain::Dither, 0);
        let d = DitherVector::random(&mut rng);
        let (_, pd) = build_p4_dither(&d);
        let base = build_p4();
        let h = ChannelDraw::new(random_x(&mut rng, 4)).unwrap();
        let x = random_x(&mut rng, 8);
        let block = transmit_simo(&h, &x, None, &mut rng).unwrap();
        let mut rotated = block.clone();
        for i in 0..4 {
            for t in 0..8 {
                rotated.set(i, t, d.values()[i] * block.get(i, t));
            }
        }
        let y1 = combine(&pd, &stack_received(&block)).unwrap();
        let y2 = combine(&base, &stack_received(&rotated)).unwrap();
        for k in 0..8 {
            assert!((y1[k] - y2[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn dithered_round_trip() {
        let cfg = FadingConfig::new(4, 1, 14).unwrap();
        let mut rng = stream(14, Domain::Fading, 0);
        for _ in 0..50 {
            let d = DitherVector::random(&mut rng);
            let (a, b) = build_p4_dither(&d);
            let h = draw_simo(&cfg, &mut rng);
            let f = stack_rows(&[probe_effective(&a, &h), probe_effective(&b, &h)]).unwrap();
            let svd = f.clone().svd(false, false);
            let cond = svd.singular_values.max() / svd.singular_values.min();
            assert!(cond.is_finite());
            let x = random_x(&mut rng, 8);
            let xs = DVector::from_column_slice(stack_source(&x).unwrap().as_slice());
            let y = &f * &xs;
            let xhat = f.lu().solve(&y).unwrap();
            assert!((xhat - xs).abs().max() < 1e-8);
        }
    }
}
