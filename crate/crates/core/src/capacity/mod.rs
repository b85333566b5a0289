//! Mutual information, MAC capacity-region constraints and symmetric
//! capacities for each combining scheme. All rates are in bits per complex
//! symbol (base-2 logarithms).
//!
//! Besides evaluating a metric at a given power, every scheme also exposes
//! its *outage threshold*: the smallest power at which the metric reaches a
//! target rate. Metrics are nondecreasing in power, so `metric(P) < R`
//! exactly when `P < threshold(R)`. The Monte-Carlo engine uses thresholds to
//! score a whole SNR grid from one channel draw.

mod asymptotics;
mod schemes;

pub use asymptotics::{chi_tail, theorem1_asymptotics, ChiTail, ExponentConvention, Theorem1Prediction};
pub use schemes::SchemeEvaluator;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::channel::ChannelDraw;
use crate::combining::Scheme;
use crate::{Complex64, Error, Result};

/// Largest user count handled by exhaustive subset enumeration.
pub const MAX_USERS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateTarget(f64);

impl RateTarget {
    pub fn new(rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::invalid("target rate must be positive"));
        }
        Ok(RateTarget(rate))
    }

    pub fn bits(self) -> f64 {
        self.0
    }
}

/// Equal-power users at a common receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct MacInstance {
    pub users: Vec<ChannelDraw>,
    pub power: f64,
}

impl MacInstance {
    pub fn new(users: Vec<ChannelDraw>, power: f64) -> Result<Self> {
        validate_users(&users)?;
        if !(power >= 0.0 && power.is_finite()) {
            return Err(Error::invalid("power must be finite and nonnegative"));
        }
        Ok(MacInstance { users, power })
    }

    pub fn antennas(&self) -> usize {
        self.users[0].antennas()
    }
}

pub(crate) fn validate_users(users: &[ChannelDraw]) -> Result<()> {
    if users.is_empty() || users.len() > MAX_USERS {
        return Err(Error::invalid(format!(
            "user count must be in 1..={MAX_USERS} (got {})",
            users.len()
        )));
    }
    let m = users[0].antennas();
    if users.iter().any(|u| u.antennas() != m) {
        return Err(Error::invalid("all users must see the same receiver"));
    }
    Ok(())
}

/// Nonempty subset of users as a bitmask (bit `i` = user `i`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct UserSet(u32);

impl UserSet {
    pub fn new(mask: u32, users: usize) -> Result<Self> {
        if mask == 0 || (users < 32 && mask >> users != 0) {
            return Err(Error::invalid(format!("invalid user subset {mask:#b}")));
        }
        Ok(UserSet(mask))
    }

    pub fn from_indices(idx: &[usize], users: usize) -> Result<Self> {
        let mut mask = 0u32;
        for &i in idx {
            if i >= users {
                return Err(Error::invalid(format!("user {i} out of range")));
            }
            mask |= 1 << i;
        }
        Self::new(mask, users)
    }

    pub fn all(users: usize) -> Self {
        UserSet(((1u64 << users) - 1) as u32)
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, i: usize) -> bool {
        self.0 >> i & 1 == 1
    }

    pub fn mask(self) -> u32 {
        self.0
    }

    /// Every nonempty subset of `users` users.
    pub fn enumerate(users: usize) -> impl Iterator<Item = UserSet> {
        (1u32..(1u32 << users)).map(UserSet)
    }
}

/// `log2(1 + P h²)`.
pub fn mutual_info(power: f64, h_eff: f64) -> f64 {
    (power * h_eff * h_eff).ln_1p() / std::f64::consts::LN_2
}

/// Complex Gram matrix `Σ_{i∈S} h_i h_iᴴ`.
pub fn gram(users: &[ChannelDraw], set: UserSet) -> DMatrix<Complex64> {
    let m = users[0].antennas();
    let mut g = DMatrix::from_element(m, m, Complex64::new(0.0, 0.0));
    for (_, u) in users.iter().enumerate().filter(|(i, _)| set.contains(*i)) {
        let h = u.coeffs();
        for r in 0..m {
            for c in 0..m {
                g[(r, c)] += h[r] * h[c].conj();
            }
        }
    }
    g
}

/// `C(S) = log2 det(I + P Σ_{i∈S} h_i h_iᴴ)`.
pub fn mac_constraint(set: UserSet, inst: &MacInstance) -> f64 {
    let m = inst.antennas();
    let a = DMatrix::<Complex64>::identity(m, m) + gram(&inst.users, set) * Complex64::new(inst.power, 0.0);
    a.determinant().re.max(1.0).log2()
}

/// Scalar-channel symmetric capacity: every constraint is
/// `(N/|S|) log2(1 + P Σ_{i∈S} g_i)`. The binding subset of size `k`
/// holds the `k` weakest users, so sorting replaces enumeration.
pub fn scalar_sym_capacity(gains_sq: &[f64], power: f64) -> f64 {
    let n = gains_sq.len() as f64;
    let mut g = gains_sq.to_vec();
    g.sort_by(|a, b| a.total_cmp(b));
    let mut acc = 0.0;
    let mut best = f64::INFINITY;
    for (k, v) in g.iter().enumerate() {
        acc += v;
        let c = n / (k + 1) as f64 * (power * acc).ln_1p() / std::f64::consts::LN_2;
        best = best.min(c);
    }
    best
}

/// Smallest power at which [`scalar_sym_capacity`] reaches `rate`.
pub fn scalar_sym_threshold(gains_sq: &[f64], rate: f64) -> f64 {
    let n = gains_sq.len() as f64;
    let mut g = gains_sq.to_vec();
    g.sort_by(|a, b| a.total_cmp(b));
    let mut acc = 0.0;
    let mut worst = 0.0f64;
    for (k, v) in g.iter().enumerate() {
        acc += v;
        let need = (rate * (k + 1) as f64 / n).exp2() - 1.0;
        worst = worst.max(if acc > 0.0 { need / acc } else { f64::INFINITY });
    }
    worst
}

fn per_antenna_gains(users: &[ChannelDraw], antenna: usize) -> Vec<f64> {
    users.iter().map(|u| u.coeffs()[antenna].norm_sqr()).collect()
}

/// Symmetric capacity `min_S (N/|S|) C(S)` of the effective channel each
/// scheme presents.
///
/// * `Mrc`: the unrestricted (optimal) receiver, full log-det.
/// * `Sc`: one receive antenna `j` shared by all users, best `j`.
/// * `Single`: antenna 1 only.
/// * `Ala2`: two-antenna universal combiner; user `i` is seen through an
///   orthonormal matrix with gain `‖h_i‖/√2`.
pub fn sym_capacity(inst: &MacInstance, scheme: Scheme) -> Result<f64> {
    let n = inst.users.len();
    let m = inst.antennas();
    let p = inst.power;
    match scheme {
        Scheme::Mrc => Ok(UserSet::enumerate(n)
            .map(|s| n as f64 / s.len() as f64 * mac_constraint(s, inst))
            .fold(f64::INFINITY, f64::min)),
        Scheme::Sc => Ok((0..m)
            .map(|j| scalar_sym_capacity(&per_antenna_gains(&inst.users, j), p))
            .fold(f64::NEG_INFINITY, f64::max)),
        Scheme::Single => Ok(scalar_sym_capacity(&per_antenna_gains(&inst.users, 0), p)),
        Scheme::Ala2 => {
            if m != 2 {
                return Err(Error::invalid("ala2 needs two receive antennas"));
            }
            let g: Vec<f64> = inst.users.iter().map(|u| u.norm_sqr() / 2.0).collect();
            Ok(scalar_sym_capacity(&g, p))
        }
        Scheme::Ala4Dith | Scheme::Ala4Quasi => Err(Error::invalid(
            "four-antenna universal combiners are evaluated per user via SchemeEvaluator",
        )),
    }
}

/// Power at which `log2 det(I + P G) = c` bits for a `2x2` Hermitian
/// Gram matrix with trace `tr` and determinant `det`.
fn quadratic_threshold(tr: f64, det: f64, bits: f64) -> f64 {
    let c = bits.exp2() - 1.0;
    if tr <= 0.0 {
        return f64::INFINITY;
    }
    let det = det.max(0.0);
    2.0 * c / (tr + (tr * tr + 4.0 * det * c).sqrt())
}

/// Smallest `P` with `(1/(2T)) Σ log2(1 + P λ_k) ≥ rate`.
pub fn mimo_power_threshold(eigs: &[f64], rate: f64, block_len: usize) -> f64 {
    log_det_threshold(eigs, 2.0 * block_len as f64 * rate)
}

/// `(1/(2T)) Σ log2(1 + P λ_k)`: bits per complex symbol of a real linear
/// channel with per-dimension SNR `P` over `T` symbol times.
pub fn mimo_mutual_info(eigs: &[f64], power: f64, block_len: usize) -> f64 {
    eigs.iter().map(|l| (power * l).ln_1p()).sum::<f64>() / std::f64::consts::LN_2 / (2.0 * block_len as f64)
}

/// Smallest `P` with `Σ log2(1 + P λ_k) ≥ bits`. Newton from the left on a
/// concave increasing function never overshoots.
fn log_det_threshold(eigs: &[f64], bits: f64) -> f64 {
    let target = bits * std::f64::consts::LN_2;
    let lsum: f64 = eigs.iter().sum();
    if lsum <= 0.0 {
        return f64::INFINITY;
    }
    let mut p = 0.0f64;
    for _ in 0..200 {
        let (mut f, mut df) = (-target, 0.0);
        for &l in eigs {
            f += (p * l).ln_1p();
            df += l / (1.0 + p * l);
        }
        if f >= 0.0 {
            break;
        }
        let next = p - f / df;
        if next <= p * (1.0 + 1e-15) {
            break;
        }
        p = next;
    }
    p
}

/// Outage threshold of the unrestricted receiver: the largest of the per
/// subset thresholds.
pub fn opt_sym_threshold(users: &[ChannelDraw], rate: f64) -> f64 {
    let n = users.len();
    let m = users[0].antennas();
    if m == 2 {
        return opt_sym_threshold_two(users, rate);
    }
    let mut worst = 0.0f64;
    for s in UserSet::enumerate(n) {
        let bits = rate * s.len() as f64 / n as f64;
        let eigs = hermitian_eigenvalues(&gram(users, s));
        worst = worst.max(log_det_threshold(&eigs, bits));
    }
    worst
}

/// Two receive antennas: Gram entries per subset are built incrementally
/// and each constraint is a quadratic in `P`.
fn opt_sym_threshold_two(users: &[ChannelDraw], rate: f64) -> f64 {
    let n = users.len();
    let count = 1usize << n;
    // (g11, g22, g12) per subset.
    let mut acc = vec![(0.0f64, 0.0f64, Complex64::new(0.0, 0.0)); count];
    let mut worst = 0.0f64;
    for mask in 1..count {
        let low = mask.trailing_zeros() as usize;
        let rest = mask & (mask - 1);
        let h = users[low].coeffs();
        let (a, b, c) = acc[rest];
        let cur = (a + h[0].norm_sqr(), b + h[1].norm_sqr(), c + h[0] * h[1].conj());
        acc[mask] = cur;
        let k = mask.count_ones() as f64;
        let tr = cur.0 + cur.1;
        let det = cur.0 * cur.1 - cur.2.norm_sqr();
        worst = worst.max(quadratic_threshold(tr, det, rate * k / n as f64));
    }
    worst
}

/// Eigenvalues of a Hermitian matrix via its real `2M x 2M` embedding,
/// which repeats each eigenvalue twice.
pub fn hermitian_eigenvalues(g: &DMatrix<Complex64>) -> Vec<f64> {
    let m = g.nrows();
    let mut r = DMatrix::zeros(2 * m, 2 * m);
    for i in 0..m {
        for j in 0..m {
            let v = g[(i, j)];
            r[(i, j)] = v.re;
            r[(i + m, j + m)] = v.re;
            r[(i, j + m)] = -v.im;
            r[(i + m, j)] = v.im;
        }
    }
    let mut e: Vec<f64> = SymmetricEigen::new(r).eigenvalues.iter().map(|v| v.max(0.0)).collect();
    e.sort_by(|a, b| a.total_cmp(b));
    e.chunks(2).map(|c| 0.5 * (c[0] + c[1])).collect()
}
