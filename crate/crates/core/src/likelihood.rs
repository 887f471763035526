//! Exact likelihoods of (M)COGARCH skeletons and likelihood-ratio batches.
//!
//! Given the spacings, the map from innovations `z` to increments
//! `x_k = sqrt(h_k(z_1..z_{k-1})) z_k` is triangular, so it can be inverted
//! one jump at a time. The density of `x` is
//! `prod f(z_k) * prod h_k^{-1/2}`.
//!
//! Only the θ-dependent factor is computed. The Poisson count and the
//! arrival-time density do not depend on θ and cancel in every ratio taken
//! at a common jump rate.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jump_laws::JumpLaw;
use crate::processes::{simulate_skeleton, Model, PathSkeleton, Theta};
use crate::rng::substream;

/// Log-ratios are clamped to this magnitude before exponentiation.
pub const LOG_RATIO_CLAMP: f64 = 700.0;

#[derive(Debug, Clone, PartialEq)]
pub struct LogLikelihood {
    pub value: f64,
    pub recovered_z: Vec<f64>,
    pub log_jacobian: f64,
}

/// Inverts `x = Ψ_{w,θ}(z)` for explicit spacings. Returns `(z, log|J|)`.
pub fn invert_on_spacings(theta: &Theta, w: &[f64], x: &[f64]) -> Result<(Vec<f64>, f64)> {
    if w.len() != x.len() {
        return Err(Error::LengthMismatch {
            expected: w.len(),
            found: x.len(),
        });
    }
    let mut z = Vec::with_capacity(x.len());
    let mut log_jacobian = 0.0;
    let mut post = theta.h0;
    for (&wk, &xk) in w.iter().zip(x) {
        let pre = theta.relax(post, wk);
        if !(pre > 0.0) {
            return Err(Error::SingularModel(format!("zero volatility at parameter {theta}")));
        }
        let zk = xk / pre.sqrt();
        log_jacobian -= 0.5 * pre.ln();
        z.push(zk);
        post = pre * theta.jump_factor(zk);
    }
    Ok((z, log_jacobian))
}

/// θ-dependent log density of increments `x` observed after spacings `w`.
pub fn log_density_on_spacings(theta: &Theta, w: &[f64], x: &[f64], law: &JumpLaw) -> Result<f64> {
    let (z, log_jacobian) = invert_on_spacings(theta, w, x)?;
    Ok(z.iter().map(|&zk| law.ln_density(zk)).sum::<f64>() + log_jacobian)
}

fn spacings_for(model: Model, skeleton: &PathSkeleton) -> Vec<f64> {
    match model {
        Model::Mcogarch => vec![1.0 / skeleton.d as f64; skeleton.d],
        Model::Cogarch if skeleton.w.len() == skeleton.d => skeleton.w.clone(),
        Model::Cogarch => {
            let mut prev = 0.0;
            skeleton
                .jump_times
                .iter()
                .map(|&t| {
                    let w = t - prev;
                    prev = t;
                    w
                })
                .collect()
        }
    }
}

/// Recovers the innovations of `skeleton` under `theta`.
///
/// COGARCH conditions on the observed spacings, MCOGARCH on the jump count.
pub fn invert_innovations(model: Model, theta: &Theta, skeleton: &PathSkeleton) -> Result<(Vec<f64>, f64)> {
    theta.validate()?;
    if skeleton.d == 0 {
        return Err(Error::InvalidParameter("cannot invert a skeleton without jumps".into()));
    }
    if skeleton.x.len() != skeleton.d {
        return Err(Error::Domain("skeleton increments do not match its jump count".into()));
    }
    invert_on_spacings(theta, &spacings_for(model, skeleton), &skeleton.x)
}

pub fn log_likelihood(model: Model, theta: &Theta, skeleton: &PathSkeleton, law: &JumpLaw) -> Result<LogLikelihood> {
    if skeleton.d == 0 {
        theta.validate()?;
        return Ok(LogLikelihood {
            value: 0.0,
            recovered_z: Vec::new(),
            log_jacobian: 0.0,
        });
    }
    let (z, log_jacobian) = invert_innovations(model, theta, skeleton)?;
    let value = z.iter().map(|&zk| law.ln_density(zk)).sum::<f64>() + log_jacobian;
    Ok(LogLikelihood {
        value,
        recovered_z: z,
        log_jacobian,
    })
}

/// `Σ log f(z_k) - ½ Σ log h_k`; zero for a skeleton without jumps.
pub fn log_density(model: Model, theta: &Theta, skeleton: &PathSkeleton, law: &JumpLaw) -> Result<f64> {
    Ok(log_likelihood(model, theta, skeleton, law)?.value)
}

/// `log dL_θ/dL_θ0` at a fixed skeleton.
pub fn log_ratio(model: Model, theta: &Theta, theta0: &Theta, skeleton: &PathSkeleton, law: &JumpLaw) -> Result<f64> {
    if theta == theta0 || skeleton.d == 0 {
        theta.validate()?;
        theta0.validate()?;
        return Ok(0.0);
    }
    let w = spacings_for(model, skeleton);
    let num = log_density_on_spacings(theta, &w, &skeleton.x, law)?;
    let den = log_density_on_spacings(theta0, &w, &skeleton.x, law)?;
    Ok(num - den)
}

/// `dL_θ/dL_θ0` at a fixed skeleton.
pub fn likelihood_ratio(model: Model, theta: &Theta, theta0: &Theta, skeleton: &PathSkeleton, law: &JumpLaw) -> Result<f64> {
    let lr = log_ratio(model, theta, theta0, skeleton, law)?;
    if lr.is_nan() {
        return Err(Error::Domain("likelihood ratio is undefined (zero density under both parameters)".into()));
    }
    Ok(lr.clamp(-LOG_RATIO_CLAMP, LOG_RATIO_CLAMP).exp())
}

/// Monte Carlo sample of likelihood ratios drawn under `theta0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrBatch {
    pub model: Model,
    pub theta: Theta,
    pub theta0: Theta,
    pub gamma: f64,
    pub law: JumpLaw,
    pub seed: u64,
    pub samples: Vec<f64>,
}

#[derive(Serialize)]
struct BatchHeader {
    model: Model,
    theta: [f64; 4],
    theta0: [f64; 4],
    gamma: f64,
    law: String,
    seed: u64,
    count: usize,
}

impl LrBatch {
    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    pub fn standard_error(&self) -> f64 {
        let n = self.samples.len() as f64;
        if n < 2.0 {
            return f64::INFINITY;
        }
        let m = self.mean();
        let var = self.samples.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    }

    /// JSON header line describing the batch.
    pub fn header_json(&self) -> String {
        let header = BatchHeader {
            model: self.model,
            theta: self.theta.to_array(),
            theta0: self.theta0.to_array(),
            gamma: self.gamma,
            law: self.law.to_string(),
            seed: self.seed,
            count: self.samples.len(),
        };
        serde_json::to_string(&header).expect("header is plain data")
    }

    /// Header line followed by `replicate,ratio` records.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# {}", self.header_json())?;
        writeln!(out, "replicate,ratio")?;
        for (i, r) in self.samples.iter().enumerate() {
            writeln!(out, "{i},{r}")?;
        }
        Ok(())
    }
}

/// Simulates `count` skeletons under `theta0` and returns the likelihood
/// ratios `dL_θ/dL_θ0` at each. Replicate `i` uses substream `i` of `seed`.
pub fn lr_sample(
    model: Model,
    theta: &Theta,
    theta0: &Theta,
    gamma: f64,
    law: &JumpLaw,
    count: usize,
    seed: u64,
) -> Result<LrBatch> {
    theta.validate()?;
    theta0.validate()?;
    law.validate()?;
    if count == 0 {
        return Err(Error::InvalidParameter("sample count must be at least 1".into()));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidParameter(format!("gamma must be positive, got {gamma}")));
    }
    let samples = (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(seed, i);
            let skeleton = simulate_skeleton(model, theta0, gamma, law, &mut rng)?;
            likelihood_ratio(model, theta, theta0, &skeleton, law)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(LrBatch {
        model,
        theta: *theta,
        theta0: *theta0,
        gamma,
        law: law.clone(),
        seed,
        samples,
    })
}
