//! Randomly thinned GARCH in discrete time and the COGARCH / MCOGARCH
//! skeletons driven by a compound Poisson process on `[0, 1]`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Open01, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jump_laws::JumpLaw;

/// Parameter point `(h0, β, α, λ)`: initial volatility, drift level, mean
/// reversion rate and jump scaling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theta {
    pub h0: f64,
    pub beta: f64,
    pub alpha: f64,
    pub lambda: f64,
}

impl Theta {
    pub fn new(h0: f64, beta: f64, alpha: f64, lambda: f64) -> Result<Self> {
        let theta = Self {
            h0,
            beta,
            alpha,
            lambda,
        };
        theta.validate()?;
        Ok(theta)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("h0", self.h0),
            ("beta", self.beta),
            ("alpha", self.alpha),
            ("lambda", self.lambda),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Solves `dh = (β - α h) ds` forward from `h` over a span of length `span`.
    pub fn relax(&self, h: f64, span: f64) -> f64 {
        if self.alpha == 0.0 {
            self.beta * span + h
        } else {
            let decay = (-self.alpha * span).exp();
            self.beta / self.alpha * -(-self.alpha * span).exp_m1() + decay * h
        }
    }

    /// Multiplier applied to the volatility at a jump with innovation `z`.
    pub fn jump_factor(&self, z: f64) -> f64 {
        1.0 + self.lambda * z * z
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.h0, self.beta, self.alpha, self.lambda]
    }
}

impl fmt::Display for Theta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {}, {})", self.h0, self.beta, self.alpha, self.lambda)
    }
}

impl FromStr for Theta {
    type Err = Error;

    /// Parses `h0,beta,alpha,lambda`, optionally in parentheses.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let t = t.strip_prefix('(').and_then(|r| r.strip_suffix(')')).unwrap_or(t);
        let parts: Vec<&str> = t.split(',').map(str::trim).collect();
        if parts.len() != 4 {
            return Err(Error::Parse(format!("theta needs 4 comma-separated values, got `{s}`")));
        }
        let mut v = [0.0; 4];
        for (slot, p) in v.iter_mut().zip(&parts) {
            *slot = p.parse().map_err(|_| Error::Parse(format!("`{p}` is not a number")))?;
        }
        Self::new(v[0], v[1], v[2], v[3])
    }
}

/// GARCH parametrization schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    /// Exact discretization of the MCOGARCH flow.
    H0,
    /// Kallsen–Vesenmayer.
    KV,
    /// Maller–Müller–Szimayer.
    M,
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "H0" => Ok(Self::H0),
            "KV" => Ok(Self::KV),
            "M" => Ok(Self::M),
            other => Err(Error::Parse(format!("unknown parametrization scheme `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GarchCoeffs {
    pub h0n: f64,
    pub betan: f64,
    pub alphan: f64,
    pub lambdan: f64,
}

/// Discrete-time coefficients `(h_{0,n}, β_n, α_n, λ_n)` for grid size `n`.
pub fn parametrize(scheme: Scheme, theta: Theta, n: usize) -> Result<GarchCoeffs> {
    theta.validate()?;
    if n == 0 {
        return Err(Error::InvalidParameter("grid size n must be at least 1".into()));
    }
    let nf = n as f64;
    match scheme {
        Scheme::H0 if theta.alpha == 0.0 => Ok(GarchCoeffs {
            h0n: theta.h0 + theta.beta / nf,
            betan: theta.beta / nf,
            alphan: 1.0,
            lambdan: theta.lambda,
        }),
        Scheme::H0 => {
            let decay = (-theta.alpha / nf).exp();
            let drift = theta.beta / theta.alpha * -(-theta.alpha / nf).exp_m1();
            Ok(GarchCoeffs {
                h0n: theta.h0 * decay + drift,
                betan: drift,
                alphan: decay,
                lambdan: theta.lambda * decay,
            })
        }
        Scheme::KV | Scheme::M => {
            if theta.h0 == 0.0 || theta.beta == 0.0 || theta.alpha == 0.0 {
                return Err(Error::Domain(format!(
                    "scheme {scheme:?} requires h0, beta, alpha > 0, got {theta}"
                )));
            }
            let decay = (-theta.alpha / nf).exp();
            Ok(GarchCoeffs {
                h0n: theta.h0,
                betan: theta.beta / nf,
                alphan: decay,
                lambdan: if scheme == Scheme::KV {
                    theta.lambda
                } else {
                    decay * theta.lambda
                },
            })
        }
    }
}

/// Grid size, thinning probability and target Poisson rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThinningSpec {
    pub n: usize,
    pub p_n: f64,
    pub gamma: f64,
}

impl ThinningSpec {
    pub fn new(n: usize, p_n: f64, gamma: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("n must be at least 1".into()));
        }
        if !(p_n > 0.0 && p_n < 1.0) {
            return Err(Error::InvalidParameter(format!("p_n must lie in (0,1), got {p_n}")));
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!("gamma must be positive, got {gamma}")));
        }
        Ok(Self { n, p_n, gamma })
    }

    /// Thinning with `n p_n = γ` exactly.
    pub fn matched(n: usize, gamma: f64) -> Result<Self> {
        Self::new(n, gamma / n as f64, gamma)
    }

    pub fn rate_gap(&self) -> f64 {
        (self.n as f64 * self.p_n - self.gamma).abs()
    }
}

/// `n` i.i.d. draws from `(1 - p_n) δ_0 + p_n Q`.
pub fn thinned_innovations<R: Rng + ?Sized>(spec: &ThinningSpec, law: &JumpLaw, rng: &mut R) -> Vec<f64> {
    (0..spec.n)
        .map(|_| {
            if rng.random::<f64>() < spec.p_n {
                law.sample(rng)
            } else {
                0.0
            }
        })
        .collect()
}

/// Indices (0-based) of the nonzero entries of a thinned innovation vector,
/// drawn by geometric skipping in `O(n p_n)` time.
pub fn thinned_support<R: Rng + ?Sized>(spec: &ThinningSpec, rng: &mut R) -> Vec<usize> {
    let log_q = (-spec.p_n).ln_1p();
    let mut out = Vec::new();
    let mut next = 0usize;
    loop {
        let u: f64 = rng.sample(Open01);
        let skip = (u.ln() / log_q).floor();
        if !skip.is_finite() || skip >= (spec.n - next) as f64 {
            break;
        }
        next += skip as usize;
        out.push(next);
        next += 1;
        if next >= spec.n {
            break;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct GarchPath {
    /// Partial sums `G(0..=n)`.
    pub g: Vec<f64>,
    /// Conditional variances `h(0..=n)`.
    pub h: Vec<f64>,
}

/// Runs the GARCH recursion on the given innovations.
pub fn garch_path(coeffs: &GarchCoeffs, innovations: &[f64]) -> Result<GarchPath> {
    for (name, v) in [
        ("h0n", coeffs.h0n),
        ("betan", coeffs.betan),
        ("alphan", coeffs.alphan),
        ("lambdan", coeffs.lambdan),
    ] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::Domain(format!("coefficient {name} must be >= 0, got {v}")));
        }
    }
    if innovations.is_empty() {
        return Err(Error::InvalidParameter("need at least one innovation".into()));
    }
    let n = innovations.len();
    let mut g = Vec::with_capacity(n + 1);
    let mut h = Vec::with_capacity(n + 1);
    g.push(0.0);
    h.push(coeffs.h0n);
    for &z in innovations {
        let hp = *h.last().unwrap();
        g.push(g.last().unwrap() + hp.sqrt() * z);
        h.push(coeffs.betan + coeffs.alphan * hp + coeffs.lambdan * hp * z * z);
    }
    Ok(GarchPath { g, h })
}

/// Pre-jump COGARCH volatilities at jumps separated by spacings `w`.
///
/// `h_k` depends on `z_1..z_{k-1}` only; the last innovation is unused.
pub fn cogarch_volatility_chain(theta: &Theta, w: &[f64], z: &[f64]) -> Result<Vec<f64>> {
    theta.validate()?;
    if w.len() != z.len() {
        return Err(Error::LengthMismatch {
            expected: w.len(),
            found: z.len(),
        });
    }
    if w.is_empty() {
        return Err(Error::InvalidParameter("volatility chain needs at least one jump".into()));
    }
    if let Some(bad) = w.iter().find(|&&s| !(s > 0.0 && s.is_finite())) {
        return Err(Error::Domain(format!("spacings must be positive, got {bad}")));
    }
    Ok(chain(theta, w.iter().copied(), z))
}

/// Pre-jump MCOGARCH volatilities: every spacing is replaced by `1/d`.
pub fn mcogarch_volatility_chain(theta: &Theta, d: usize, z: &[f64]) -> Result<Vec<f64>> {
    theta.validate()?;
    if d == 0 {
        return Err(Error::InvalidParameter("MCOGARCH chain needs d >= 1".into()));
    }
    if z.len() != d {
        return Err(Error::LengthMismatch {
            expected: d,
            found: z.len(),
        });
    }
    let w = 1.0 / d as f64;
    Ok(chain(theta, std::iter::repeat_n(w, d), z))
}

fn chain(theta: &Theta, spacings: impl Iterator<Item = f64>, z: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(z.len());
    let mut post = theta.h0;
    for (w, &zk) in spacings.zip(z) {
        let pre = theta.relax(post, w);
        out.push(pre);
        post = pre * theta.jump_factor(zk);
    }
    out
}

/// Left limits `h_{1,n}((k+1)/n -)`, `k = 0..=n`, of the continuous-time
/// interpolation of a GARCH path on the grid `k/n`: the volatility relaxes
/// over each cell and is multiplied by `1 + λ Z_k²` at grid point `k/n`.
pub fn ode_interpolated_volatility(theta: &Theta, innovations: &[f64]) -> Result<Vec<f64>> {
    theta.validate()?;
    if innovations.is_empty() {
        return Err(Error::InvalidParameter("need at least one innovation".into()));
    }
    let cell = 1.0 / innovations.len() as f64;
    let mut out = Vec::with_capacity(innovations.len() + 1);
    let mut h = theta.relax(theta.h0, cell);
    out.push(h);
    for &z in innovations {
        h = theta.relax(h * theta.jump_factor(z), cell);
        out.push(h);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Model {
    Cogarch,
    Mcogarch,
}

impl Model {
    pub const BOTH: [Model; 2] = [Model::Cogarch, Model::Mcogarch];

    pub fn name(self) -> &'static str {
        match self {
            Self::Cogarch => "COGARCH",
            Self::Mcogarch => "MCOGARCH",
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "COGARCH" => Ok(Self::Cogarch),
            "MCOGARCH" => Ok(Self::Mcogarch),
            other => Err(Error::Parse(format!("unknown model `{other}`"))),
        }
    }
}

/// One realization of a (M)COGARCH path reduced to its jumps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSkeleton {
    pub model: Model,
    pub d: usize,
    /// Interarrival spacings (COGARCH only; empty for MCOGARCH).
    pub w: Vec<f64>,
    /// Pre-jump volatilities.
    pub h: Vec<f64>,
    /// Driving innovations.
    pub z: Vec<f64>,
    /// Observed increments `ΔG_k = sqrt(h_k) z_k`.
    pub x: Vec<f64>,
    pub jump_times: Vec<f64>,
}

impl PathSkeleton {
    pub fn empty(model: Model) -> Self {
        Self {
            model,
            d: 0,
            w: Vec::new(),
            h: Vec::new(),
            z: Vec::new(),
            x: Vec::new(),
            jump_times: Vec::new(),
        }
    }

    /// Builds the skeleton generated by `theta` from given jump times and
    /// innovations.
    pub fn from_parts(model: Model, theta: &Theta, jump_times: Vec<f64>, z: Vec<f64>) -> Result<Self> {
        if jump_times.len() != z.len() {
            return Err(Error::LengthMismatch {
                expected: jump_times.len(),
                found: z.len(),
            });
        }
        check_jump_times(&jump_times)?;
        let d = z.len();
        if d == 0 {
            return Ok(Self::empty(model));
        }
        let (w, h) = match model {
            Model::Cogarch => {
                let w = spacings(&jump_times);
                let h = cogarch_volatility_chain(theta, &w, &z)?;
                (w, h)
            }
            Model::Mcogarch => (Vec::new(), mcogarch_volatility_chain(theta, d, &z)?),
        };
        let x = h.iter().zip(&z).map(|(hk, zk)| hk.sqrt() * zk).collect();
        Ok(Self {
            model,
            d,
            w,
            h,
            z,
            x,
            jump_times,
        })
    }

    /// Spacings the volatility chain of this skeleton runs on.
    pub fn chain_spacings(&self) -> Vec<f64> {
        match self.model {
            Model::Cogarch => self.w.clone(),
            Model::Mcogarch => vec![1.0 / self.d as f64; self.d],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.d;
        for (name, len) in [
            ("h", self.h.len()),
            ("z", self.z.len()),
            ("x", self.x.len()),
            ("jump_times", self.jump_times.len()),
        ] {
            if len != d {
                return Err(Error::Domain(format!("skeleton field {name} has length {len}, expected {d}")));
            }
        }
        match self.model {
            Model::Cogarch if self.w.len() != d => {
                return Err(Error::Domain(format!("COGARCH skeleton needs {d} spacings, has {}", self.w.len())))
            }
            Model::Mcogarch if !self.w.is_empty() => {
                return Err(Error::Domain("MCOGARCH skeleton must not carry spacings".into()))
            }
            _ => {}
        }
        check_jump_times(&self.jump_times)
    }

    pub fn csv_header() -> &'static str {
        "replicate,model,d,jump_times,w,z,x"
    }

    /// One CSV record; inner lists are `;`-separated.
    pub fn to_csv_record(&self, replicate: u64) -> String {
        fn join(v: &[f64]) -> String {
            v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
        }
        format!(
            "{replicate},{},{},{},{},{},{}",
            self.model,
            self.d,
            join(&self.jump_times),
            join(&self.w),
            join(&self.z),
            join(&self.x)
        )
    }
}

fn check_jump_times(times: &[f64]) -> Result<()> {
    if times.iter().any(|&t| !(t > 0.0 && t < 1.0)) {
        return Err(Error::Domain("jump times must lie in (0,1)".into()));
    }
    if times.windows(2).any(|p| p[0] >= p[1]) {
        return Err(Error::Domain("jump times must be strictly increasing".into()));
    }
    Ok(())
}

fn spacings(times: &[f64]) -> Vec<f64> {
    let mut prev = 0.0;
    times
        .iter()
        .map(|&t| {
            let w = t - prev;
            prev = t;
            w
        })
        .collect()
}

/// Poisson(`rate`) count: sequential-search inversion for moderate rates.
pub fn poisson_count<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> usize {
    if rate > 30.0 {
        return Poisson::new(rate).expect("positive rate").sample(rng) as usize;
    }
    let u: f64 = rng.random();
    let mut k = 0usize;
    let mut p = (-rate).exp();
    let mut cdf = p;
    while u >= cdf {
        k += 1;
        p *= rate / k as f64;
        let next = cdf + p;
        if next == cdf {
            break;
        }
        cdf = next;
    }
    k
}

/// Order statistics of `d` uniforms on `(0,1)`, redrawn in the (null)
/// event of a tie.
pub fn uniform_order_statistics<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let mut u: Vec<f64> = (0..d).map(|_| rng.sample(Open01)).collect();
        u.sort_by(f64::total_cmp);
        if u.windows(2).all(|p| p[0] < p[1]) {
            return u;
        }
    }
}

/// Simulates the jump skeleton of a COGARCH or MCOGARCH path on `[0,1]`.
pub fn simulate_skeleton<R: Rng + ?Sized>(
    model: Model,
    theta: &Theta,
    gamma: f64,
    law: &JumpLaw,
    rng: &mut R,
) -> Result<PathSkeleton> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidParameter(format!("gamma must be positive, got {gamma}")));
    }
    let d = poisson_count(gamma, rng);
    let times = uniform_order_statistics(d, rng);
    let z = (0..d).map(|_| law.sample(rng)).collect();
    PathSkeleton::from_parts(model, theta, times, z)
}

/// The time change `T_σ` for a point measure with the given jump times.
pub fn time_change_eval(jump_times: &[f64], t: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Domain(format!("t must lie in [0,1], got {t}")));
    }
    if jump_times.windows(2).any(|p| p[0] >= p[1]) {
        return Err(Error::Domain("jump times must be strictly increasing".into()));
    }
    let m = jump_times.len();
    if m == 0 || jump_times[0] <= 0.0 || jump_times[m - 1] >= 1.0 {
        return Ok(t);
    }
    let mf = m as f64;
    // k: index of the first jump strictly after t (1-based), or m+1.
    let k = jump_times.partition_point(|&s| s <= t) + 1;
    if k <= m {
        let tk = jump_times[k - 1];
        let tk1 = if k >= 2 { jump_times[k - 2] } else { 0.0 };
        Ok((t - tk) / (mf * (tk - tk1)) + k as f64 / mf)
    } else {
        let tm = jump_times[m - 1];
        let tm1 = if m >= 2 { jump_times[m - 2] } else { 0.0 };
        Ok((t - tm) / (mf * (tm - tm1)) + 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridValue {
    pub t: f64,
    pub g: f64,
    pub h: f64,
}

/// Right-continuous `(G(t), h(t))` at each grid point.
pub fn path_on_grid(model: Model, theta: &Theta, skeleton: &PathSkeleton, grid: &[f64]) -> Result<Vec<GridValue>> {
    theta.validate()?;
    skeleton.validate()?;
    if skeleton.model != model {
        return Err(Error::Domain(format!(
            "skeleton was generated for {}, not {model}",
            skeleton.model
        )));
    }
    if grid.iter().any(|&t| !(0.0..=1.0).contains(&t)) {
        return Err(Error::Domain("grid points must lie in [0,1]".into()));
    }
    let times = &skeleton.jump_times;
    let clock = |t: f64| -> Result<f64> {
        match model {
            Model::Cogarch => Ok(t),
            Model::Mcogarch => time_change_eval(times, t),
        }
    };

    // Post-jump volatility, cumulative G and clock value at each jump.
    let mut post = Vec::with_capacity(skeleton.d);
    let mut level = Vec::with_capacity(skeleton.d);
    let mut clock_at = Vec::with_capacity(skeleton.d);
    let (mut h, mut g, mut c_prev) = (theta.h0, 0.0, clock(0.0)?);
    for k in 0..skeleton.d {
        let c = clock(times[k])?;
        h = theta.relax(h, c - c_prev) * theta.jump_factor(skeleton.z[k]);
        g += skeleton.x[k];
        post.push(h);
        level.push(g);
        clock_at.push(c);
        c_prev = c;
    }

    grid.iter()
        .map(|&t| {
            let k = times.partition_point(|&s| s <= t);
            let c = clock(t)?;
            let value = if k == 0 {
                GridValue {
                    t,
                    g: 0.0,
                    h: theta.relax(theta.h0, c - clock(0.0)?),
                }
            } else {
                GridValue {
                    t,
                    g: level[k - 1],
                    h: theta.relax(post[k - 1], c - clock_at[k - 1]),
                }
            };
            Ok(value)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_from_seed;

    const E1: f64 = 0.367_879_441_171_442_3;

    fn theta0() -> Theta {
        Theta::new(2.0, 1.0, 1.0, 0.1).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn h0_parametrization() {
        let c = parametrize(Scheme::H0, theta0(), 1).unwrap();
        // h0 e^{-α} + (β/α)(1-e^{-α}), (β/α)(1-e^{-α}), e^{-α}, λ e^{-α}
        let expected = [2.0 * E1 + (1.0 - E1), 1.0 - E1, E1, 0.1 * E1];
        for (got, want) in [c.h0n, c.betan, c.alphan, c.lambdan].iter().zip(expected) {
            assert!(close(*got, want, 1e-15), "{got} vs {want}");
        }
        assert!((c.h0n - 1.367_879_4).abs() < 1e-7);
        assert!((c.betan - 0.632_120_6).abs() < 1e-7);
        assert!((c.lambdan - 0.036_787_9).abs() < 1e-7);
    }

    #[test]
    fn h0_parametrization_alpha_zero() {
        let c = parametrize(Scheme::H0, Theta::new(2.0, 1.0, 0.0, 0.1).unwrap(), 4).unwrap();
        assert_eq!(
            c,
            GarchCoeffs {
                h0n: 2.25,
                betan: 0.25,
                alphan: 1.0,
                lambdan: 0.1
            }
        );
    }

    #[test]
    fn kv_and_m_parametrizations() {
        let kv = parametrize(Scheme::KV, theta0(), 1).unwrap();
        assert_eq!((kv.h0n, kv.betan, kv.lambdan), (2.0, 1.0, 0.1));
        assert!(close(kv.alphan, E1, 1e-15));
        let m = parametrize(Scheme::M, theta0(), 2).unwrap();
        assert!(close(m.lambdan, 0.1 * (-0.5f64).exp(), 1e-15));
        assert_eq!(m.betan, 0.5);
        for bad in [
            Theta::new(0.0, 1.0, 1.0, 0.1).unwrap(),
            Theta::new(2.0, 0.0, 1.0, 0.1).unwrap(),
            Theta::new(2.0, 1.0, 0.0, 0.1).unwrap(),
        ] {
            assert!(matches!(parametrize(Scheme::KV, bad, 3), Err(Error::Domain(_))));
            assert!(matches!(parametrize(Scheme::M, bad, 3), Err(Error::Domain(_))));
        }
        assert!(parametrize(Scheme::H0, theta0(), 0).is_err());
        assert!("X".parse::<Scheme>().is_err());
    }

    #[test]
    fn h0_alpha_n_in_unit_interval() {
        for alpha in [0.0, 1e-6, 0.3, 5.0] {
            let c = parametrize(Scheme::H0, Theta::new(1.0, 1.0, alpha, 0.2).unwrap(), 7).unwrap();
            assert!(c.alphan > 0.0 && c.alphan <= 1.0);
            assert_eq!(c.alphan == 1.0, alpha == 0.0);
        }
    }

    #[test]
    fn theta_rejects_negative_and_nan() {
        assert!(Theta::new(-1.0, 1.0, 1.0, 0.1).is_err());
        assert!(Theta::new(1.0, f64::NAN, 1.0, 0.1).is_err());
        assert_eq!("2,1,1,0.1".parse::<Theta>().unwrap(), theta0());
        assert!("2,1,1".parse::<Theta>().is_err());
    }

    #[test]
    fn thinned_innovation_atoms_and_determinism() {
        let spec = ThinningSpec::new(100, 0.5, 50.0).unwrap();
        let a = thinned_innovations(&spec, &JumpLaw::StandardNormal, &mut stream_from_seed(5));
        let b = thinned_innovations(&spec, &JumpLaw::StandardNormal, &mut stream_from_seed(5));
        assert_eq!(a, b);
        let zeros = a.iter().filter(|z| **z == 0.0).count();
        assert!(zeros > 20 && zeros < 80);
        assert!(ThinningSpec::new(10, 1.0, 1.0).is_err());
        assert!(ThinningSpec::new(0, 0.5, 1.0).is_err());
    }

    #[test]
    fn thinned_count_mean() {
        let spec = ThinningSpec::matched(100_000, 4.0).unwrap();
        let mut rng = stream_from_seed(17);
        let reps = 10_000;
        let total: usize = (0..reps).map(|_| thinned_support(&spec, &mut rng).len()).sum();
        let mean = total as f64 / reps as f64;
        assert!((mean - 4.0).abs() < 0.1, "{mean}");
    }

    #[test]
    fn thinned_support_matches_bernoulli_scan() {
        // Small n: compare count distributions of the two samplers.
        let spec = ThinningSpec::new(20, 0.3, 6.0).unwrap();
        let mut r1 = stream_from_seed(1);
        let mut r2 = stream_from_seed(2);
        let reps = 40_000;
        let mut h1 = [0usize; 21];
        let mut h2 = [0usize; 21];
        for _ in 0..reps {
            h1[thinned_support(&spec, &mut r1).len()] += 1;
            let v = thinned_innovations(&spec, &JumpLaw::StandardNormal, &mut r2);
            h2[v.iter().filter(|z| **z != 0.0).count()] += 1;
        }
        let tv: f64 = h1.iter().zip(&h2).map(|(a, b)| (*a as f64 - *b as f64).abs()).sum::<f64>() / (2.0 * reps as f64);
        assert!(tv < 0.02, "{tv}");
        let support = thinned_support(&spec, &mut r1);
        assert!(support.windows(2).all(|p| p[0] < p[1]) && support.iter().all(|&i| i < 20));
    }

    #[test]
    fn garch_path_frozen_volatility() {
        let z = [0.3, -1.2, 0.0, 2.5];
        let p = garch_path(
            &GarchCoeffs {
                h0n: 1.0,
                betan: 0.0,
                alphan: 1.0,
                lambdan: 0.0,
            },
            &z,
        )
        .unwrap();
        assert!(p.h.iter().all(|h| *h == 1.0));
        let mut s = 0.0;
        for (k, zk) in z.iter().enumerate() {
            s += zk;
            assert!(close(p.g[k + 1], s, 1e-15));
        }
    }

    #[test]
    fn garch_path_affine_relaxation() {
        let c = GarchCoeffs {
            h0n: 2.0,
            betan: 0.25,
            alphan: 0.5,
            lambdan: 0.0,
        };
        let p = garch_path(&c, &[0.0; 12]).unwrap();
        for (k, h) in p.h.iter().enumerate() {
            let ak = 0.5f64.powi(k as i32);
            let want = 0.25 * (1.0 - ak) / 0.5 + ak * 2.0;
            assert!(close(*h, want, 1e-14), "k={k}: {h} vs {want}");
            assert!(close(*h, 0.5 + 1.5 * ak, 1e-14));
        }
        assert!(p.g.iter().all(|g| *g == 0.0));
    }

    #[test]
    fn garch_path_rejects_negative_coefficients() {
        let c = GarchCoeffs {
            h0n: 1.0,
            betan: -0.1,
            alphan: 0.5,
            lambdan: 0.0,
        };
        assert!(matches!(garch_path(&c, &[1.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn cogarch_chain_values() {
        let h = cogarch_volatility_chain(&theta0(), &[1.0], &[7.0]).unwrap();
        assert!(close(h[0], (1.0 - E1) + E1 * 2.0, 1e-15));
        assert!((h[0] - 1.367_879_4).abs() < 1e-7);

        let h = cogarch_volatility_chain(&Theta::new(2.0, 1.0, 0.0, 0.1).unwrap(), &[0.5], &[3.0]).unwrap();
        assert_eq!(h, vec![2.5]);

        let fixed = Theta::new(0.5, 1.0, 2.0, 0.0).unwrap();
        let h = cogarch_volatility_chain(&fixed, &[0.1, 0.3, 0.2], &[1.0, -4.0, 2.0]).unwrap();
        assert!(h.iter().all(|v| close(*v, 0.5, 1e-15)), "{h:?}");
    }

    #[test]
    fn cogarch_chain_errors() {
        assert!(matches!(
            cogarch_volatility_chain(&theta0(), &[0.5, 0.2], &[1.0]),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            cogarch_volatility_chain(&theta0(), &[0.5, 0.0], &[1.0, 1.0]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn second_step_alpha_zero() {
        let theta = Theta::new(2.0, 1.0, 0.0, 0.1).unwrap();
        let h = cogarch_volatility_chain(&theta, &[0.5, 0.25], &[2.0, 9.0]).unwrap();
        assert_eq!(h, vec![2.5, 0.25 + 2.5 * 1.4]);
    }

    #[test]
    fn mcogarch_chain_values() {
        let h = mcogarch_volatility_chain(&theta0(), 1, &[0.4]).unwrap();
        let c = cogarch_volatility_chain(&theta0(), &[1.0], &[0.4]).unwrap();
        assert_eq!(h, c);
        assert!((h[0] - 1.367_879_4).abs() < 1e-7);

        let fixed = Theta::new(0.5, 1.0, 2.0, 0.0).unwrap();
        let h = mcogarch_volatility_chain(&fixed, 5, &[1.0, 2.0, 3.0, -1.0, 0.5]).unwrap();
        assert!(h.iter().all(|v| close(*v, 0.5, 1e-15)));
        assert!(mcogarch_volatility_chain(&theta0(), 0, &[]).is_err());
        assert!(mcogarch_volatility_chain(&theta0(), 2, &[1.0]).is_err());
    }

    #[test]
    fn mcogarch_chain_is_causal() {
        let z = [0.3, -1.0, 2.0, 0.7, -0.1];
        let a = mcogarch_volatility_chain(&theta0(), 5, &z).unwrap();
        let mut permuted = z;
        permuted[2..].reverse();
        let b = mcogarch_volatility_chain(&theta0(), 5, &permuted).unwrap();
        assert_eq!(a[..3], b[..3]);
    }

    #[test]
    fn skeleton_count_mean() {
        let mut rng = stream_from_seed(3);
        let law = JumpLaw::StandardNormal;
        for model in Model::BOTH {
            let total: usize = (0..100_000)
                .map(|_| simulate_skeleton(model, &theta0(), 4.0, &law, &mut rng).unwrap().d)
                .sum();
            let mean = total as f64 / 1e5;
            assert!((mean - 4.0).abs() < 0.05, "{model}: {mean}");
        }
    }

    #[test]
    fn skeleton_invariants() {
        let mut rng = stream_from_seed(4);
        let mut saw_empty = false;
        for i in 0..2000 {
            let model = Model::BOTH[i % 2];
            let s = simulate_skeleton(model, &theta0(), 4.0, &JumpLaw::mixed_normal(), &mut rng).unwrap();
            s.validate().unwrap();
            assert!(s.h.iter().all(|h| *h > 0.0));
            if model == Model::Cogarch {
                assert!(s.w.iter().all(|w| *w > 0.0));
                assert!(s.w.iter().sum::<f64>() <= 1.0);
            }
            if s.d == 0 {
                saw_empty = true;
                assert!(s.x.is_empty() && s.h.is_empty() && s.jump_times.is_empty());
                let g = path_on_grid(model, &theta0(), &s, &[0.0, 0.5, 1.0]).unwrap();
                assert!(g.iter().all(|v| v.g == 0.0));
            }
        }
        assert!(saw_empty);
    }

    #[test]
    fn ode_interpolation_matches_h0_recursion() {
        let mut rng = stream_from_seed(5);
        for theta in [theta0(), Theta::new(0.3, 2.0, 0.0, 0.4).unwrap()] {
            for n in [1usize, 16, 300] {
                let z: Vec<f64> = (0..n).map(|_| JumpLaw::StandardNormal.sample(&mut rng)).collect();
                let path = garch_path(&parametrize(Scheme::H0, theta, n).unwrap(), &z).unwrap();
                let ode = ode_interpolated_volatility(&theta, &z).unwrap();
                for (a, b) in path.h.iter().zip(&ode) {
                    assert!(close(*a, *b, 1e-13), "{theta} n={n}: {a} vs {b}");
                }
            }
        }
        assert!(ode_interpolated_volatility(&theta0(), &[]).is_err());
    }

    #[test]
    fn mcogarch_single_jump_ignores_time() {
        for t in [0.05, 0.5, 0.93] {
            let s = PathSkeleton::from_parts(Model::Mcogarch, &theta0(), vec![t], vec![1.3]).unwrap();
            assert_eq!(s.h, mcogarch_volatility_chain(&theta0(), 1, &[1.3]).unwrap());
            assert!((s.h[0] - 1.367_879_4).abs() < 1e-7);
        }
    }

    #[test]
    fn mcogarch_chain_invariant_under_time_resampling() {
        let mut rng = stream_from_seed(9);
        let z = vec![0.2, -1.1, 0.8, 1.9];
        let base = PathSkeleton::from_parts(Model::Mcogarch, &theta0(), vec![0.1, 0.2, 0.3, 0.4], z.clone()).unwrap();
        for _ in 0..50 {
            let times = uniform_order_statistics(4, &mut rng);
            let s = PathSkeleton::from_parts(Model::Mcogarch, &theta0(), times, z.clone()).unwrap();
            assert_eq!(s.h, base.h);
            assert_eq!(s.x, base.x);
        }
    }

    #[test]
    fn time_change_values() {
        let times = [0.25, 0.5];
        assert_eq!(time_change_eval(&times, 0.25).unwrap(), 0.5);
        assert_eq!(time_change_eval(&times, 0.5).unwrap(), 1.0);
        assert_eq!(time_change_eval(&times, 1.0).unwrap(), 2.0);
        assert_eq!(time_change_eval(&times, 0.0).unwrap(), 0.0);
        assert_eq!(time_change_eval(&[], 0.37).unwrap(), 0.37);
        assert_eq!(time_change_eval(&[0.6], 0.0).unwrap(), 0.0);
        assert!(time_change_eval(&[0.5, 0.2], 0.3).is_err());
        assert!(time_change_eval(&times, 1.5).is_err());
    }

    #[test]
    fn time_change_monotone_and_hits_levels() {
        let times = [0.07, 0.2, 0.21, 0.66, 0.9];
        let m = times.len() as f64;
        let mut prev = -1.0;
        for i in 0..=10_000 {
            let t = i as f64 / 10_000.0;
            let v = time_change_eval(&times, t).unwrap();
            assert!(v > prev);
            // Continuity: a step of 1e-4 moves T by at most slope * 1e-4.
            if prev >= 0.0 {
                assert!(v - prev < 1e-4 / (m * 0.01) + 1e-12);
            }
            prev = v;
        }
        for (k, t) in times.iter().enumerate() {
            let v = time_change_eval(&times, *t).unwrap();
            assert!((v - (k + 1) as f64 / m).abs() < 1e-12);
            let left = time_change_eval(&times, t - 1e-12).unwrap();
            assert!((left - v).abs() < 1e-9);
        }
    }

    #[test]
    fn grid_relaxation_without_jumps() {
        let s = PathSkeleton::empty(Model::Cogarch);
        let g = path_on_grid(Model::Cogarch, &theta0(), &s, &[0.0, 1.0]).unwrap();
        assert_eq!((g[0].g, g[1].g), (0.0, 0.0));
        assert_eq!(g[0].h, 2.0);
        assert!(close(g[1].h, 1.0 + E1, 1e-15));
        assert!((g[1].h - 1.367_879_4).abs() < 1e-7);
    }

    #[test]
    fn grid_left_limits_match_chain() {
        let mut rng = stream_from_seed(21);
        for model in Model::BOTH {
            for _ in 0..200 {
                let s = simulate_skeleton(model, &theta0(), 4.0, &JumpLaw::StandardNormal, &mut rng).unwrap();
                let eps = 1e-10;
                let mut prev = 0.0;
                let grid: Vec<f64> = s
                    .jump_times
                    .iter()
                    .map(|&t| {
                        let g = t - eps * (t - prev);
                        prev = t;
                        g
                    })
                    .collect();
                let vals = path_on_grid(model, &theta0(), &s, &grid).unwrap();
                for (k, v) in vals.iter().enumerate() {
                    assert!(close(v.h, s.h[k], 1e-7), "{model} k={k}: {} vs {}", v.h, s.h[k]);
                    let before: f64 = s.x[..k].iter().sum();
                    assert!(close(v.g, before, 1e-12));
                }
                // Right-continuity: at a jump time the jump is already included.
                let at = path_on_grid(model, &theta0(), &s, &s.jump_times).unwrap();
                for (k, v) in at.iter().enumerate() {
                    assert!(close(v.h, s.h[k] * (1.0 + 0.1 * s.z[k] * s.z[k]), 1e-12));
                }
            }
        }
    }

    #[test]
    fn grid_before_first_jump_is_flat() {
        let s = PathSkeleton::from_parts(Model::Mcogarch, &theta0(), vec![0.4], vec![1.0]).unwrap();
        let v = path_on_grid(Model::Mcogarch, &theta0(), &s, &[0.1, 0.4 - 1e-12]).unwrap();
        assert_eq!(v[0].g, 0.0);
        assert!(close(v[1].h, s.h[0], 1e-10));
        assert!(path_on_grid(Model::Mcogarch, &theta0(), &s, &[1.2]).is_err());
        assert!(path_on_grid(Model::Cogarch, &theta0(), &s, &[0.2]).is_err());
    }

    #[test]
    fn poisson_sampler_mean_and_var() {
        let mut rng = stream_from_seed(8);
        for rate in [0.5, 4.0, 45.0] {
            let xs: Vec<f64> = (0..200_000).map(|_| poisson_count(rate, &mut rng) as f64).collect();
            let m = xs.iter().sum::<f64>() / xs.len() as f64;
            let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64;
            assert!((m - rate).abs() < 4.0 * (rate / 2e5).sqrt() + 1e-3, "{rate}: {m}");
            assert!((v / rate - 1.0).abs() < 0.03, "{rate}: {v}");
        }
    }

    #[test]
    fn csv_record_layout() {
        let s = PathSkeleton::from_parts(Model::Cogarch, &theta0(), vec![0.25, 0.75], vec![1.0, -0.5]).unwrap();
        let rec = s.to_csv_record(3);
        let fields: Vec<&str> = rec.split(',').collect();
        assert_eq!(fields.len(), 7);
        assert_eq!(&fields[..4], &["3", "COGARCH", "2", "0.25;0.75"]);
        assert_eq!(fields[4], "0.25;0.5");
        assert_eq!(PathSkeleton::csv_header().split(',').count(), 7);
        let empty = PathSkeleton::empty(Model::Mcogarch).to_csv_record(0);
        assert_eq!(empty, "0,MCOGARCH,0,,,,");
    }
}
