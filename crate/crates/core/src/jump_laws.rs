//! Jump-size distributions for the compound Poisson driver.
//!
//! All laws have a Lebesgue density and are symmetric about zero (the
//! mixture only when its components are placed symmetrically, as in
//! [`JumpLaw::mixed_normal`]).

use std::f64::consts::{FRAC_1_PI, PI};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Gamma, Open01, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use statrs::function::gamma::{gamma_lr, ln_gamma};

use crate::error::{Error, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_741_780_329_736_406;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum JumpLaw {
    StandardNormal,
    /// Density `a / (π (1 + (a z)^2))`; `a` acts as an inverse scale.
    Cauchy { a: f64 },
    NormalMixture {
        weights: Vec<f64>,
        means: Vec<f64>,
        variances: Vec<f64>,
    },
    /// Density `b a^{c/b} / (2 Γ(c/b)) · exp(-a|z|^b) |z|^{c-1}`.
    ///
    /// `(a, b, c) = (1/2, 2, 1)` is the standard normal and `(a, 1, 1)` the
    /// Laplace law with rate `a`.
    SymmetricGamma { a: f64, b: f64, c: f64 },
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {v}")))
    }
}

impl JumpLaw {
    pub fn cauchy(a: f64) -> Result<Self> {
        positive("cauchy scale a", a)?;
        Ok(Self::Cauchy { a })
    }

    pub fn symmetric_gamma(a: f64, b: f64, c: f64) -> Result<Self> {
        positive("gamma-family a", a)?;
        positive("gamma-family b", b)?;
        positive("gamma-family c", c)?;
        Ok(Self::SymmetricGamma { a, b, c })
    }

    pub fn normal_mixture(weights: Vec<f64>, means: Vec<f64>, variances: Vec<f64>) -> Result<Self> {
        let law = Self::NormalMixture {
            weights,
            means,
            variances,
        };
        law.validate()?;
        Ok(law)
    }

    /// `½ N(-0.5, 0.75) + ½ N(0.5, 0.75)`: mean 0, variance 1.
    pub fn mixed_normal() -> Self {
        Self::NormalMixture {
            weights: vec![0.5, 0.5],
            means: vec![-0.5, 0.5],
            variances: vec![0.75, 0.75],
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::StandardNormal => Ok(()),
            Self::Cauchy { a } => positive("cauchy scale a", *a),
            Self::SymmetricGamma { a, b, c } => {
                positive("gamma-family a", *a)?;
                positive("gamma-family b", *b)?;
                positive("gamma-family c", *c)
            }
            Self::NormalMixture {
                weights,
                means,
                variances,
            } => {
                if weights.is_empty() {
                    return Err(Error::InvalidParameter("mixture needs at least one component".into()));
                }
                if means.len() != weights.len() {
                    return Err(Error::LengthMismatch {
                        expected: weights.len(),
                        found: means.len(),
                    });
                }
                if variances.len() != weights.len() {
                    return Err(Error::LengthMismatch {
                        expected: weights.len(),
                        found: variances.len(),
                    });
                }
                if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
                    return Err(Error::InvalidParameter("mixture weights must be nonnegative".into()));
                }
                let total: f64 = weights.iter().sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidParameter(format!("mixture weights sum to {total}, not 1")));
                }
                if means.iter().any(|m| !m.is_finite()) {
                    return Err(Error::InvalidParameter("mixture means must be finite".into()));
                }
                for v in variances {
                    positive("mixture variance", *v)?;
                }
                Ok(())
            }
        }
    }

    /// Density at `z`.
    pub fn density(&self, z: f64) -> Result<f64> {
        if !z.is_finite() {
            return Err(Error::Domain(format!("density argument must be finite, got {z}")));
        }
        Ok(self.ln_density(z).exp())
    }

    /// Natural log of the density. Unchecked hot path: `z` is assumed finite.
    pub fn ln_density(&self, z: f64) -> f64 {
        match self {
            Self::StandardNormal => -0.5 * z * z - LN_SQRT_2PI,
            Self::Cauchy { a } => {
                let az = a * z;
                (a * FRAC_1_PI).ln() - (az * az).ln_1p()
            }
            Self::SymmetricGamma { a, b, c } => {
                let x = z.abs();
                let norm = b.ln() + (c / b) * a.ln() - std::f64::consts::LN_2 - ln_gamma(c / b);
                let power = if *c == 1.0 { 0.0 } else { (c - 1.0) * x.ln() };
                norm - a * x.powf(*b) + power
            }
            Self::NormalMixture {
                weights,
                means,
                variances,
            } => {
                let terms: Vec<f64> = weights
                    .iter()
                    .zip(means)
                    .zip(variances)
                    .filter(|((w, _), _)| **w > 0.0)
                    .map(|((w, m), v)| {
                        let d = z - m;
                        w.ln() - 0.5 * d * d / v - 0.5 * v.ln() - LN_SQRT_2PI
                    })
                    .collect();
                let top = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                if top == f64::NEG_INFINITY {
                    return top;
                }
                top + terms.iter().map(|t| (t - top).exp()).sum::<f64>().ln()
            }
        }
    }

    pub fn cdf(&self, z: f64) -> f64 {
        match self {
            Self::StandardNormal => normal_cdf(z),
            Self::Cauchy { a } => 0.5 + (a * z).atan() * FRAC_1_PI,
            Self::SymmetricGamma { a, b, c } => {
                let half = 0.5 * gamma_lr(c / b, a * z.abs().powf(*b));
                if z >= 0.0 {
                    0.5 + half
                } else {
                    0.5 - half
                }
            }
            Self::NormalMixture {
                weights,
                means,
                variances,
            } => weights
                .iter()
                .zip(means)
                .zip(variances)
                .map(|((w, m), v)| w * normal_cdf((z - m) / v.sqrt()))
                .sum(),
        }
    }

    /// A length scale of the law, used to place quadrature nodes.
    pub fn scale(&self) -> f64 {
        match self {
            Self::StandardNormal => 1.0,
            Self::Cauchy { a } => 1.0 / a,
            Self::SymmetricGamma { a, b, .. } => a.powf(-1.0 / b),
            Self::NormalMixture { means, variances, .. } => {
                let spread = means.iter().map(|m| m.abs()).fold(0.0, f64::max);
                let sd = variances.iter().map(|v| v.sqrt()).fold(0.0, f64::max);
                spread + sd
            }
        }
    }

    pub fn is_symmetric(&self) -> bool {
        match self {
            Self::NormalMixture {
                weights,
                means,
                variances,
            } => {
                let n = weights.len();
                (0..n).all(|i| {
                    (0..n).any(|j| weights[j] == weights[i] && means[j] == -means[i] && variances[j] == variances[i])
                })
            }
            _ => true,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Self::StandardNormal => rng.sample(StandardNormal),
            Self::Cauchy { a } => {
                let u: f64 = rng.sample(Open01);
                (PI * (u - 0.5)).tan() / a
            }
            Self::SymmetricGamma { a, b, c } => {
                let g: f64 = Gamma::new(c / b, 1.0).expect("validated shape").sample(rng);
                let magnitude = (g / a).powf(1.0 / b);
                if rng.random::<bool>() {
                    magnitude
                } else {
                    -magnitude
                }
            }
            Self::NormalMixture {
                weights,
                means,
                variances,
            } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut pick = weights.len() - 1;
                for (i, w) in weights.iter().enumerate() {
                    acc += w;
                    if u < acc {
                        pick = i;
                        break;
                    }
                }
                let n: f64 = rng.sample(StandardNormal);
                means[pick] + variances[pick].sqrt() * n
            }
        }
    }

    pub fn sample_batch<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Result<Vec<f64>> {
        self.validate()?;
        if count == 0 {
            return Err(Error::InvalidParameter("sample count must be at least 1".into()));
        }
        Ok((0..count).map(|_| self.sample(rng)).collect())
    }

    /// Short human-readable label for report tables.
    pub fn label(&self) -> String {
        match self {
            Self::StandardNormal => "N(0,1)".into(),
            Self::Cauchy { a } => format!("Cauchy(0,{a})"),
            law if *law == Self::mixed_normal() => "Mixed N".into(),
            Self::NormalMixture { weights, .. } => format!("Mixture[{}]", weights.len()),
            Self::SymmetricGamma { a, b, c } => format!("SymGamma({a},{b},{c})"),
        }
    }
}

pub(crate) fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

impl fmt::Display for JumpLaw {
    /// The CLI spelling, parseable by [`FromStr`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::StandardNormal => write!(f, "normal"),
            Self::Cauchy { a } => write!(f, "cauchy:a={a}"),
            law @ Self::NormalMixture { .. } if *law == Self::mixed_normal() => write!(f, "mixture"),
            Self::NormalMixture {
                weights,
                means,
                variances,
            } => write!(f, "mixture{{w={weights:?},m={means:?},v={variances:?}}}"),
            Self::SymmetricGamma { a, b, c } => write!(f, "gengamma:a={a},b={b},c={c}"),
        }
    }
}

fn parse_kv(body: &str, keys: &[&str]) -> Result<Vec<f64>> {
    let mut out = vec![None; keys.len()];
    for part in body.split(',') {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("expected key=value, got `{part}`")))?;
        let idx = keys
            .iter()
            .position(|key| *key == k.trim())
            .ok_or_else(|| Error::Parse(format!("unknown key `{}`", k.trim())))?;
        let value: f64 = v
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("`{}` is not a number", v.trim())))?;
        out[idx] = Some(value);
    }
    out.into_iter()
        .zip(keys)
        .map(|(v, k)| v.ok_or_else(|| Error::Parse(format!("missing key `{k}`"))))
        .collect()
}

impl FromStr for JumpLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, body) = match s.split_once(':') {
            Some((h, b)) => (h.trim(), Some(b)),
            None => (s, None),
        };
        match (head.to_ascii_lowercase().as_str(), body) {
            ("normal", None) => Ok(Self::StandardNormal),
            ("mixture", None) => Ok(Self::mixed_normal()),
            ("cauchy", Some(b)) => {
                let v = parse_kv(b, &["a"])?;
                Self::cauchy(v[0])
            }
            ("gengamma", Some(b)) => {
                let v = parse_kv(b, &["a", "b", "c"])?;
                Self::symmetric_gamma(v[0], v[1], v[2])
            }
            _ => Err(Error::Parse(format!(
                "unknown law `{s}` (expected normal, cauchy:a=<real>, mixture, gengamma:a=<real>,b=<real>,c=<real>)"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate, integrate_half_line, Tolerance};
    use crate::rng::stream_from_seed;

    fn laws() -> Vec<JumpLaw> {
        vec![
            JumpLaw::StandardNormal,
            JumpLaw::cauchy(1.0).unwrap(),
            JumpLaw::cauchy(2.5).unwrap(),
            JumpLaw::mixed_normal(),
            JumpLaw::symmetric_gamma(0.5, 2.0, 1.0).unwrap(),
            JumpLaw::symmetric_gamma(1.0, 1.0, 1.0).unwrap(),
            JumpLaw::symmetric_gamma(1.0, 3.0, 2.0).unwrap(),
        ]
    }

    #[test]
    fn density_values() {
        let n = JumpLaw::StandardNormal.density(0.0).unwrap();
        assert!((n - 0.398_942_3).abs() < 1e-7);
        let c = JumpLaw::cauchy(1.0).unwrap().density(0.0).unwrap();
        assert!((c - 0.318_309_9).abs() < 1e-7);
        // Direct evaluation of ½N(-0.5,0.75)+½N(0.5,0.75) at 0.
        let oracle = (-0.25 / 1.5f64).exp() / (2.0 * PI * 0.75).sqrt();
        let m = JumpLaw::mixed_normal().density(0.0).unwrap();
        assert!((m - oracle).abs() < 1e-15);
        assert!((m - 0.389_939_3).abs() < 1e-7);
    }

    #[test]
    fn non_finite_argument_is_rejected() {
        assert!(matches!(JumpLaw::StandardNormal.density(f64::NAN), Err(Error::Domain(_))));
        assert!(matches!(JumpLaw::mixed_normal().density(f64::INFINITY), Err(Error::Domain(_))));
    }

    #[test]
    fn normalized_gamma_family_reduces_to_normal() {
        let g = JumpLaw::symmetric_gamma(0.5, 2.0, 1.0).unwrap();
        for i in -40..=40 {
            let z = i as f64 * 0.2;
            let a = g.density(z).unwrap();
            let b = JumpLaw::StandardNormal.density(z).unwrap();
            assert!((a - b).abs() < 1e-15, "z={z}: {a} vs {b}");
        }
    }

    #[test]
    fn densities_integrate_to_one() {
        let tol = Tolerance {
            abs: 1e-12,
            rel: 1e-12,
            max_intervals: 4000,
        };
        for law in laws() {
            let total = match law {
                JumpLaw::Cauchy { a } => {
                    // Finite window plus the analytic tail mass.
                    let t = 1e3 / a;
                    let body = integrate(|z| law.density(z).unwrap(), 0.0, t, tol).unwrap().value * 2.0;
                    body + 1.0 - 2.0 / PI * (a * t).atan()
                }
                _ => {
                    2.0 * integrate_half_line(|z| law.density(z).unwrap(), law.scale(), tol)
                        .unwrap()
                        .value
                }
            };
            assert!((total - 1.0).abs() < 1e-8, "{law}: {total}");
        }
    }

    #[test]
    fn densities_are_symmetric() {
        for law in laws() {
            for i in 0..=1000 {
                let z = -50.0 + 0.1 * i as f64;
                assert_eq!(law.density(z).unwrap(), law.density(-z).unwrap(), "{law} at {z}");
            }
            assert!(law.is_symmetric());
        }
    }

    #[test]
    fn densities_positive_away_from_origin() {
        for law in laws() {
            for z in [-4.0, -3.0, -1e-3, 1e-3, 0.7, 4.5] {
                assert!(law.density(z).unwrap() > 0.0, "{law} at {z}");
            }
        }
    }

    #[test]
    fn sample_moments() {
        let mut rng = stream_from_seed(11);
        let n = JumpLaw::StandardNormal.sample_batch(1_000_000, &mut rng).unwrap();
        let mean = n.iter().sum::<f64>() / n.len() as f64;
        assert!(mean.abs() < 0.005, "{mean}");

        let m = JumpLaw::mixed_normal().sample_batch(1_000_000, &mut rng).unwrap();
        let mm = m.iter().sum::<f64>() / m.len() as f64;
        let var = m.iter().map(|x| (x - mm).powi(2)).sum::<f64>() / (m.len() - 1) as f64;
        assert!((var - 1.0).abs() < 0.01, "{var}");

        let mut c = JumpLaw::cauchy(1.0).unwrap().sample_batch(100_000, &mut rng).unwrap();
        c.sort_by(f64::total_cmp);
        let median = 0.5 * (c[49_999] + c[50_000]);
        assert!(median.abs() < 0.02, "{median}");
    }

    #[test]
    fn samplers_match_cdf() {
        let n = 100_000;
        for (seed, law) in laws().into_iter().enumerate() {
            let mut rng = stream_from_seed(100 + seed as u64);
            let mut xs = law.sample_batch(n, &mut rng).unwrap();
            xs.sort_by(f64::total_cmp);
            let ks = xs
                .iter()
                .enumerate()
                .map(|(i, &x)| {
                    let f = law.cdf(x);
                    (f - i as f64 / n as f64).abs().max(((i + 1) as f64 / n as f64 - f).abs())
                })
                .fold(0.0, f64::max);
            assert!(ks < 0.006, "{law}: KS {ks}");
        }
    }

    #[test]
    fn zero_count_is_rejected() {
        let mut rng = stream_from_seed(0);
        assert!(JumpLaw::StandardNormal.sample_batch(0, &mut rng).is_err());
    }

    #[test]
    fn parse_and_display() {
        for spec in ["normal", "cauchy:a=1", "mixture", "gengamma:a=0.5,b=2,c=1"] {
            let law: JumpLaw = spec.parse().unwrap();
            assert_eq!(law.to_string(), spec);
        }
        assert_eq!("cauchy: a = 2.5".parse::<JumpLaw>().unwrap(), JumpLaw::Cauchy { a: 2.5 });
        assert!("cauchy:a=-1".parse::<JumpLaw>().is_err());
        assert!("gengamma:a=1,b=2".parse::<JumpLaw>().is_err());
        assert!("laplace".parse::<JumpLaw>().is_err());
    }

    #[test]
    fn invalid_mixture() {
        assert!(JumpLaw::normal_mixture(vec![0.5, 0.4], vec![0.0, 1.0], vec![1.0, 1.0]).is_err());
        assert!(JumpLaw::normal_mixture(vec![1.0], vec![0.0, 1.0], vec![1.0]).is_err());
        assert!(JumpLaw::normal_mixture(vec![1.0], vec![0.0], vec![0.0]).is_err());
    }
}
