//! Hellinger transforms of the scaling experiment and of (M)COGARCH
//! skeleton laws.
//!
//! `g_{f,ζ}(h) = h^ζ ∫ f(hz)^ζ f(z)^{1-ζ} dz` is the Hellinger transform of
//! `{L(Z), L(Z/h)}` and equals the single-jump transform with
//! `h = sqrt(H_{θ1,θ2}(w))`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::jump_laws::JumpLaw;
use crate::likelihood::log_density_on_spacings;
use crate::processes::{cogarch_volatility_chain, Model, Theta};
use crate::quadrature::{integrate, Tolerance};
use crate::rng::substream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HellingerConfig {
    pub zeta: f64,
    pub quadrature_abs_tol: f64,
    pub quadrature_rel_tol: f64,
    /// Upper integration limit in units of the law's scale; `INFINITY`
    /// integrates over the whole half-line.
    pub integration_truncation: f64,
}

impl Default for HellingerConfig {
    fn default() -> Self {
        Self {
            zeta: 0.5,
            quadrature_abs_tol: 1e-10,
            quadrature_rel_tol: 1e-9,
            integration_truncation: f64::INFINITY,
        }
    }
}

impl HellingerConfig {
    pub fn with_zeta(zeta: f64) -> Result<Self> {
        let cfg = Self {
            zeta,
            ..Self::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        check_zeta(self.zeta)?;
        if !(self.quadrature_abs_tol > 0.0 && self.quadrature_rel_tol > 0.0) {
            return Err(Error::InvalidParameter("quadrature tolerances must be positive".into()));
        }
        if !(self.integration_truncation > 0.0) {
            return Err(Error::InvalidParameter("integration truncation must be positive".into()));
        }
        Ok(())
    }

    fn tolerance(&self) -> Tolerance {
        Tolerance {
            abs: self.quadrature_abs_tol,
            rel: self.quadrature_rel_tol,
            max_intervals: 4000,
        }
    }

    /// Error bound attributed to one quadrature evaluation of `g`.
    pub fn inner_bound(&self) -> f64 {
        self.quadrature_abs_tol.max(self.quadrature_rel_tol)
    }
}

fn check_zeta(zeta: f64) -> Result<()> {
    if zeta > 0.0 && zeta < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("zeta must lie in (0,1), got {zeta}")))
    }
}

fn check_h(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("h must be positive and finite, got {h}")))
    }
}

/// Closed form `(h^{bζ} / (h^b ζ + 1 - ζ))^{c/b}` for the gamma family
/// (the standard normal being `b = 2, c = 1`). `None` for other laws.
pub fn g_closed_form(law: &JumpLaw, zeta: f64, h: f64) -> Option<f64> {
    let (b, c) = match law {
        JumpLaw::StandardNormal => (2.0, 1.0),
        JumpLaw::SymmetricGamma { b, c, .. } => (*b, *c),
        _ => return None,
    };
    let hb = h.powf(b);
    let ratio = h.powf(b * zeta) / (hb * zeta + (1.0 - zeta));
    Some(ratio.powf(c / b))
}

/// `g_{f,ζ}(h)` by adaptive quadrature, whatever the law.
pub fn g_quadrature(law: &JumpLaw, zeta: f64, h: f64, cfg: &HellingerConfig) -> Result<f64> {
    check_zeta(zeta)?;
    check_h(h)?;
    law.validate()?;
    let integrand = |z: f64| -> f64 {
        let one = |s: f64| (zeta * law.ln_density(h * s) + (1.0 - zeta) * law.ln_density(s)).exp();
        one(z) + one(-z)
    };
    // Substitute z = s tan(u); s sits between the scales of f and f(h·).
    let s = law.scale() / h.sqrt();
    let upper = if cfg.integration_truncation.is_finite() {
        (cfg.integration_truncation * law.scale() / s).atan()
    } else {
        std::f64::consts::FRAC_PI_2
    };
    let r = integrate(
        |u| {
            let (sin, cos) = u.sin_cos();
            if cos <= 0.0 {
                return 0.0;
            }
            let v = integrand(s * sin / cos);
            if v == 0.0 {
                0.0
            } else {
                v * s / (cos * cos)
            }
        },
        0.0,
        upper,
        cfg.tolerance(),
    )?;
    Ok(h.powf(zeta) * r.value)
}

/// `g_{f,ζ}(h)`: closed form where one exists, quadrature otherwise.
pub fn g_eval(law: &JumpLaw, zeta: f64, h: f64, cfg: &HellingerConfig) -> Result<f64> {
    check_zeta(zeta)?;
    check_h(h)?;
    if h == 1.0 {
        return Ok(1.0);
    }
    match g_closed_form(law, zeta, h) {
        Some(v) => Ok(v),
        None => g_quadrature(law, zeta, h, cfg),
    }
}

/// Volatility before a single jump at spacing `w`.
fn first_volatility(theta: &Theta, w: f64) -> f64 {
    theta.relax(theta.h0, w)
}

/// `H_{θ1,θ2}(w)`: ratio of first-jump volatilities under `theta2` and `theta1`.
pub fn volatility_ratio(theta1: &Theta, theta2: &Theta, w: f64) -> Result<f64> {
    theta1.validate()?;
    theta2.validate()?;
    if !(w > 0.0 && w <= 1.0) {
        return Err(Error::Domain(format!("spacing must lie in (0,1], got {w}")));
    }
    let denom = first_volatility(theta1, w);
    if !(denom > 0.0) {
        return Err(Error::SingularModel(format!("zero first volatility under {theta1}")));
    }
    Ok(first_volatility(theta2, w) / denom)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityGap {
    /// `g(sqrt(H(1)))`, the MCOGARCH single-jump transform.
    pub lhs: f64,
    /// `∫_0^1 g(sqrt(H(w))) dw`, the COGARCH single-jump transform.
    pub rhs: f64,
    pub gap: f64,
    /// Sum of the inner (per-`g`) and outer quadrature error bounds.
    pub error_budget: f64,
}

impl IdentityGap {
    pub fn exceeds_budget(&self, factor: f64) -> bool {
        self.gap.abs() > factor * self.error_budget
    }
}

/// Difference between the MCOGARCH and COGARCH single-jump Hellinger
/// transforms. Equality for all parameter pairs is necessary for the two
/// experiments to be equivalent.
pub fn d1_identity_gap(
    theta1: &Theta,
    theta2: &Theta,
    zeta: f64,
    law: &JumpLaw,
    cfg: &HellingerConfig,
) -> Result<IdentityGap> {
    cfg.validate()?;
    let g_at = |w: f64| -> Result<f64> { g_eval(law, zeta, volatility_ratio(theta1, theta2, w)?.sqrt(), cfg) };
    let lhs = g_at(1.0)?;
    let mut failure = None;
    let outer = integrate(
        |w| match g_at(w) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        0.0,
        1.0,
        cfg.tolerance(),
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let outer = outer?;
    let target = cfg.quadrature_abs_tol.max(cfg.quadrature_rel_tol * outer.value.abs());
    let error_budget = outer.abs_error.max(target) + 2.0 * cfg.inner_bound();
    Ok(IdentityGap {
        lhs,
        rhs: outer.value,
        gap: lhs - outer.value,
        error_budget,
    })
}

/// Spacing choice for [`hellinger_transform_mc`].
#[derive(Debug, Clone, PartialEq)]
pub enum SpacingMode {
    Explicit(Vec<f64>),
    /// `w = (1/d, ..., 1/d)`, the MCOGARCH clock.
    EqualSpacing,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub standard_error: f64,
    pub count: usize,
}

/// Monte Carlo estimate of the Hellinger transform
/// `∫ p_{θ1}^ζ p_{θ2}^{1-ζ} = E_{θ2}[(p_{θ1}/p_{θ2})^ζ]` of the increment
/// laws given `d` jumps with spacings fixed by `mode`.
#[allow(clippy::too_many_arguments)]
pub fn hellinger_transform_mc(
    model: Model,
    d: usize,
    theta1: &Theta,
    theta2: &Theta,
    mode: &SpacingMode,
    zeta: f64,
    law: &JumpLaw,
    count: usize,
    seed: u64,
) -> Result<McEstimate> {
    check_zeta(zeta)?;
    theta1.validate()?;
    theta2.validate()?;
    law.validate()?;
    if d == 0 || count == 0 {
        return Err(Error::InvalidParameter("need d >= 1 and count >= 1".into()));
    }
    let w = match (model, mode) {
        (Model::Mcogarch, SpacingMode::Explicit(_)) => {
            return Err(Error::InvalidParameter("MCOGARCH transforms use equal spacing".into()))
        }
        (_, SpacingMode::EqualSpacing) => vec![1.0 / d as f64; d],
        (Model::Cogarch, SpacingMode::Explicit(w)) => {
            if w.len() != d {
                return Err(Error::LengthMismatch {
                    expected: d,
                    found: w.len(),
                });
            }
            if w.iter().any(|s| !(*s > 0.0)) || w.iter().sum::<f64>() > 1.0 + 1e-12 {
                return Err(Error::Domain("spacings must be positive with sum <= 1".into()));
            }
            w.clone()
        }
    };
    if theta1 == theta2 {
        return Ok(McEstimate {
            estimate: 1.0,
            standard_error: 0.0,
            count,
        });
    }
    let samples = (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(seed, i);
            let z: Vec<f64> = (0..d).map(|_| law.sample(&mut rng)).collect();
            let h = cogarch_volatility_chain(theta2, &w, &z)?;
            let x: Vec<f64> = h.iter().zip(&z).map(|(h, z)| h.sqrt() * z).collect();
            let lr = log_density_on_spacings(theta1, &w, &x, law)? - log_density_on_spacings(theta2, &w, &x, law)?;
            Ok((zeta * lr).exp())
        })
        .collect::<Result<Vec<f64>>>()?;
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = if samples.len() > 1 {
        samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Ok(McEstimate {
        estimate: mean,
        standard_error: (var / n).sqrt(),
        count,
    })
}
