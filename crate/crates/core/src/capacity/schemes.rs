use super::{
    mimo_mutual_info, mimo_power_threshold, opt_sym_threshold, scalar_sym_threshold, sym_capacity,
    validate_users, MacInstance,
};
use crate::channel::ChannelDraw;
use crate::combining::{
    build_p4_dither, build_p4_quasi, eff_gain, CombinerModel, DitherVector, Scheme,
};
use crate::{Error, Result};

/// Evaluates per-trial metrics and outage thresholds for a set of schemes.
/// Holds the prebuilt four-antenna combiner models (and the batch dither).
#[derive(Debug, Clone)]
pub struct SchemeEvaluator {
    antennas: usize,
    quasi: Option<CombinerModel>,
    dith: Option<CombinerModel>,
}

impl SchemeEvaluator {
    pub fn new(antennas: usize, schemes: &[Scheme], dither: &DitherVector) -> Result<Self> {
        for s in schemes {
            if !s.supports(antennas) {
                return Err(Error::invalid(format!(
                    "scheme {s} is not defined for {antennas} receive antennas"
                )));
            }
        }
        let quasi = if schemes.contains(&Scheme::Ala4Quasi) {
            Some(CombinerModel::new(&[build_p4_quasi()])?)
        } else {
            None
        };
        let dith = if schemes.contains(&Scheme::Ala4Dith) {
            let (a, b) = build_p4_dither(dither);
            Some(CombinerModel::new(&[a, b])?)
        } else {
            None
        };
        Ok(SchemeEvaluator {
            antennas,
            quasi,
            dith,
        })
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    fn model(&self, scheme: Scheme) -> Result<&CombinerModel> {
        let m = match scheme {
            Scheme::Ala4Quasi => self.quasi.as_ref(),
            Scheme::Ala4Dith => self.dith.as_ref(),
            _ => None,
        };
        m.ok_or_else(|| Error::invalid(format!("evaluator was not built for {scheme}")))
    }

    fn check(&self, scheme: Scheme, users: &[ChannelDraw]) -> Result<()> {
        validate_users(users)?;
        if users[0].antennas() != self.antennas {
            return Err(Error::Dimension {
                what: "channel antennas vs evaluator",
                expected: self.antennas,
                got: users[0].antennas(),
            });
        }
        if matches!(scheme, Scheme::Ala4Dith | Scheme::Ala4Quasi) && users.len() != 1 {
            return Err(Error::invalid(format!("{scheme} is evaluated for a single user only")));
        }
        if !scheme.supports(self.antennas) {
            return Err(Error::invalid(format!("{scheme} needs a different antenna count")));
        }
        Ok(())
    }

    /// Mutual information (one user) or symmetric capacity (several users),
    /// in bits per complex symbol.
    pub fn metric(&self, scheme: Scheme, users: &[ChannelDraw], power: f64) -> Result<f64> {
        self.check(scheme, users)?;
        match scheme {
            Scheme::Ala4Dith | Scheme::Ala4Quasi => {
                let model = self.model(scheme)?;
                let eigs = model.gram_eigenvalues(&users[0])?;
                Ok(mimo_mutual_info(&eigs, power, model.block_len()))
            }
            _ if users.len() == 1 => Ok(super::mutual_info(power, eff_gain(scheme, &users[0])?.h_eff)),
            _ => sym_capacity(&MacInstance::new(users.to_vec(), power)?, scheme),
        }
    }

    /// Smallest power at which [`Self::metric`] reaches `rate`; infinite when
    /// the channel cannot support it at any power.
    pub fn threshold(&self, scheme: Scheme, users: &[ChannelDraw], rate: f64) -> Result<f64> {
        self.check(scheme, users)?;
        let gains = |antenna: usize| -> Vec<f64> {
            users.iter().map(|u| u.coeffs()[antenna].norm_sqr()).collect()
        };
        Ok(match scheme {
            Scheme::Mrc if users.len() == 1 => scalar_sym_threshold(&[users[0].norm_sqr()], rate),
            Scheme::Mrc => opt_sym_threshold(users, rate),
            Scheme::Sc => (0..self.antennas)
                .map(|j| scalar_sym_threshold(&gains(j), rate))
                .fold(f64::INFINITY, f64::min),
            Scheme::Single => scalar_sym_threshold(&gains(0), rate),
            Scheme::Ala2 => {
                let g: Vec<f64> = users.iter().map(|u| u.norm_sqr() / 2.0).collect();
                scalar_sym_threshold(&g, rate)
            }
            Scheme::Ala4Dith | Scheme::Ala4Quasi => {
                let model = self.model(scheme)?;
                let eigs = model.gram_eigenvalues(&users[0])?;
                mimo_power_threshold(&eigs, rate, model.block_len())
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{draw_mac, FadingConfig};
    use crate::rng::{stream, Domain};

    #[test]
    fn threshold_brackets_metric_for_every_scheme() {
        let dither = DitherVector::random(&mut stream(1, Domain::Dither, 0));
        for (m, n, schemes) in [
            (2usize, 1usize, vec![Scheme::Mrc, Scheme::Sc, Scheme::Single, Scheme::Ala2]),
            (2, 4, vec![Scheme::Mrc, Scheme::Sc, Scheme::Single, Scheme::Ala2]),
            (4, 1, vec![Scheme::Mrc, Scheme::Sc, Scheme::Ala4Quasi, Scheme::Ala4Dith]),
        ] {
            let ev = SchemeEvaluator::new(m, &schemes, &dither).unwrap();
            let cfg = FadingConfig::new(m, n, 3).unwrap();
            for trial in 0..200 {
                let users = draw_mac(&cfg, &mut stream(3, Domain::Fading, trial));
                for &s in &schemes {
                    let t = ev.threshold(s, &users, 2.0).unwrap();
                    assert!(t.is_finite() && t > 0.0);
                    let above = ev.metric(s, &users, t * (1.0 + 1e-7)).unwrap();
                    let below = ev.metric(s, &users, t * (1.0 - 1e-6)).unwrap();
                    assert!(above >= 2.0 - 1e-9 && below < 2.0, "{s} m={m} n={n}");
                }
            }
        }
    }

    #[test]
    fn evaluator_guards() {
        let d = DitherVector::identity();
        assert!(SchemeEvaluator::new(2, &[Scheme::Ala4Quasi], &d).is_err());
        let ev = SchemeEvaluator::new(4, &[Scheme::Ala4Quasi], &d).unwrap();
        let cfg = FadingConfig::new(4, 2, 0).unwrap();
        let users = draw_mac(&cfg, &mut stream(0, Domain::Fading, 0));
        assert!(ev.metric(Scheme::Ala4Quasi, &users, 1.0).is_err());
        assert!(ev.metric(Scheme::Ala4Dith, &users[..1], 1.0).is_err());
    }
}
