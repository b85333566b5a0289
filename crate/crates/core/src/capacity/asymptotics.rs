//! Small-ball probabilities of Rayleigh channel energies and the high-SNR
//! outage ratio between the two-antenna universal combiner and the optimal
//! receiver in a two-user MAC.
//!
//! With unit-variance complex coefficients, the energy of `m` coefficients
//! is a sum of `m` unit-mean exponentials, so
//! `P(‖h‖² < ε) = ε^m / m! + o(ε^m)`. Under the chi-square normalization
//! with unit-variance real components the energy doubles and the
//! coefficient becomes `1 / (2^m m!)` (`1/384` for `m = 4`).
//!
//! The outage ratio limit is `2^e`, where `e` is the small-ball exponent of a
//! single-user constraint: halving the power scales each such term by
//! `2^e`. Two exponent readings are reported side by side: `e = 4` and
//! `e = 2`, the latter being what a 1x2 channel with two complex
//! coefficients gives.

use serde::Serialize;

/// Lower regularized incomplete gamma `P(m, x)` for integer `m`: CDF of a
/// sum of `m` unit-mean exponentials.
pub(crate) fn erlang_cdf(m: u32, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let m_f = m as f64;
    if x < m_f + 1.0 {
        // e^{-x} Σ_{k≥m} x^k / k!, no cancellation for small x.
        let mut term = (-x).exp();
        for k in 1..=m {
            term *= x / k as f64;
        }
        let mut sum = 0.0;
        let mut k = m_f;
        while term > sum * 1e-17 && k < m_f + 500.0 {
            sum += term;
            k += 1.0;
            term *= x / k;
        }
        sum
    } else {
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..m {
            term *= x / k as f64;
            sum += term;
        }
        1.0 - (-x).exp() * sum
    }
}

fn factorial(m: u32) -> f64 {
    (1..=m).map(f64::from).product()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiTail {
    /// Exact `P(‖h‖² < ε)` for `m` unit-variance complex coefficients.
    pub exact: f64,
    /// Leading term `ε^m / m!`.
    pub leading: f64,
    /// `1 / m!`.
    pub coefficient: f64,
    /// `1 / (2^m m!)`, the coefficient under unit-variance real components.
    pub real_unit_coefficient: f64,
}

pub fn chi_tail(eps: f64, m: u32) -> ChiTail {
    let coefficient = 1.0 / factorial(m);
    ChiTail {
        exact: erlang_cdf(m, eps),
        leading: coefficient * eps.powi(m as i32),
        coefficient,
        real_unit_coefficient: coefficient / 2f64.powi(m as i32),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ExponentConvention {
    /// Single-user terms decay as `P^-4`, joint terms as `P^-8`.
    ExponentFour,
    /// Single-user terms decay as `P^-2`, joint terms as `P^-4`.
    ExponentTwo,
}

impl ExponentConvention {
    pub const BOTH: [ExponentConvention; 2] =
        [ExponentConvention::ExponentFour, ExponentConvention::ExponentTwo];

    pub fn exponent(self) -> u32 {
        match self {
            ExponentConvention::ExponentFour => 4,
            ExponentConvention::ExponentTwo => 2,
        }
    }

    /// `lim P(outage, universal) / P(outage, optimal)`, which also equals the
    /// limit of `P(outage, optimal at P/2) / P(outage, optimal at P)`.
    pub fn limit(self) -> f64 {
        2f64.powi(self.exponent() as i32)
    }

    pub fn name(self) -> &'static str {
        match self {
            ExponentConvention::ExponentFour => "exponent-4",
            ExponentConvention::ExponentTwo => "exponent-2",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioPoint {
    pub power: f64,
    /// Ratio of the dominant single-user outage terms.
    pub single_user_ratio: f64,
    /// Lower bound from the union-bound chain.
    pub lower: f64,
    /// Upper bound from the union-bound chain.
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConventionPrediction {
    pub convention: ExponentConvention,
    pub limit: f64,
    pub points: Vec<RatioPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theorem1Prediction {
    pub rate: f64,
    pub conventions: Vec<ConventionPrediction>,
}

impl Theorem1Prediction {
    pub fn limits(&self) -> Vec<f64> {
        self.conventions.iter().map(|c| c.limit).collect()
    }
}

/// Predicted outage ratios for the two-user, two-antenna MAC at each power
/// in `powers`, under both exponent conventions.
///
/// A user's own constraint `2 log2(1 + P‖h‖²) < R` fails when
/// `‖h‖² < (2^{R/2} - 1)/P`; the joint constraint is bounded through the
/// Frobenius norm, `‖H‖² < (2^R - 1)/P`.
pub fn theorem1_asymptotics(rate: f64, powers: &[f64]) -> Theorem1Prediction {
    let single = (rate / 2.0).exp2() - 1.0;
    let joint = rate.exp2() - 1.0;
    let conventions = ExponentConvention::BOTH
        .iter()
        .map(|&conv| {
            let e = conv.exponent();
            let points = powers
                .iter()
                .map(|&p| {
                    let su_half = erlang_cdf(e, 2.0 * single / p);
                    let su_full = erlang_cdf(e, single / p);
                    let joint_half = erlang_cdf(2 * e, 2.0 * joint / p);
                    let joint_full = erlang_cdf(2 * e, joint / p);
                    RatioPoint {
                        power: p,
                        single_user_ratio: su_half / su_full,
                        lower: 2.0 * su_half / (2.0 * su_full + joint_full),
                        upper: (2.0 * su_half + joint_half) / (2.0 * su_full),
                    }
                })
                .collect();
            ConventionPrediction {
                convention: conv,
                limit: conv.limit(),
                points,
            }
        })
        .collect();
    Theorem1Prediction { rate, conventions }
}
