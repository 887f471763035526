//! Configuration-driven experiment runner: likelihood-ratio quantile tables,
//! Wilcoxon comparisons between the two models and diagnostic suites.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hellinger::{d1_identity_gap, g_eval, HellingerConfig};
use crate::jump_laws::JumpLaw;
use crate::likelihood::{lr_sample, LrBatch};
use crate::processes::{garch_path, ode_interpolated_volatility, parametrize, thinned_innovations, thinned_support, Model, Scheme, ThinningSpec, Theta};
use crate::rng::{derive_path, derive_seed, substream};
use crate::stats::{quantiles, thinning_bound, tv_mc_error, tv_to_poisson, wilcoxon_rank_sum};

pub const QUANTILE_PROBS: [f64; 3] = [0.25, 0.5, 0.75];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub theta0: Theta,
    pub thetas: Vec<(String, Theta)>,
    pub laws: Vec<JumpLaw>,
    pub gamma: f64,
    pub sample_sizes: Vec<usize>,
    pub master_seed: u64,
    pub output_dir: PathBuf,
    pub models: Vec<Model>,
    /// Use the same seed for both models of a cell.
    pub share_seed: bool,
    /// Model whose batch is the first Wilcoxon sample.
    pub wilcoxon_first: Model,
    pub zeta: f64,
    pub thinning_replications: usize,
}

pub fn default_thetas() -> Vec<(String, Theta)> {
    let rows = [
        ("theta_11", [0.4, 1.0, 1.0, 0.1]),
        ("theta_12", [10.0, 1.0, 1.0, 0.1]),
        ("theta_21", [2.0, 0.2, 1.0, 0.1]),
        ("theta_22", [2.0, 5.0, 1.0, 0.1]),
        ("theta_31", [2.0, 1.0, 0.2, 0.1]),
        ("theta_32", [2.0, 1.0, 5.0, 0.1]),
        ("theta_41", [2.0, 1.0, 1.0, 0.02]),
        ("theta_42", [2.0, 1.0, 1.0, 0.5]),
    ];
    rows.iter()
        .map(|(l, [h0, b, a, lam])| (l.to_string(), Theta { h0: *h0, beta: *b, alpha: *a, lambda: *lam }))
        .collect()
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            theta0: Theta { h0: 2.0, beta: 1.0, alpha: 1.0, lambda: 0.1 },
            thetas: default_thetas(),
            laws: vec![JumpLaw::StandardNormal, JumpLaw::Cauchy { a: 1.0 }, JumpLaw::mixed_normal()],
            gamma: 4.0,
            sample_sizes: vec![10_000, 100_000, 1_000_000],
            master_seed: 20_240_601,
            output_dir: PathBuf::from("results"),
            models: Model::BOTH.to_vec(),
            share_seed: false,
            wilcoxon_first: Model::Cogarch,
            zeta: 0.5,
            thinning_replications: 100_000,
        }
    }
}

fn config_err(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("line {line}: {msg}"))
}

fn parse_list<T, E: std::fmt::Display>(value: &str, sep: char, f: impl Fn(&str) -> std::result::Result<T, E>) -> std::result::Result<Vec<T>, String> {
    value
        .split(sep)
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| f(s).map_err(|e| format!("`{s}`: {e}")))
        .collect()
}

impl ExperimentConfig {
    /// Parses flat `key = value` text on top of the defaults. `#` starts a
    /// comment. Any `theta.<label>` entry replaces the default θ list.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut thetas = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| config_err(lineno, "expected `key = value`"))?;
            let (key, value) = (key.trim(), value.trim());
            let err = |m: String| config_err(lineno, format!("{key}: {m}"));
            if let Some(label) = key.strip_prefix("theta.") {
                if label.is_empty() || thetas.iter().any(|(l, _): &(String, Theta)| l == label) {
                    return Err(err("missing or duplicate label".into()));
                }
                let theta: Theta = value.parse().map_err(|e: Error| err(e.to_string()))?;
                thetas.push((label.to_string(), theta));
                continue;
            }
            match key {
                "theta0" => cfg.theta0 = value.parse().map_err(|e: Error| err(e.to_string()))?,
                "laws" => cfg.laws = parse_list(value, ';', str::parse::<JumpLaw>).map_err(err)?,
                "gamma" => cfg.gamma = value.parse().map_err(|e| err(format!("{e}")))?,
                "sample_sizes" => cfg.sample_sizes = parse_list(value, ',', str::parse::<usize>).map_err(err)?,
                "seed" | "master_seed" => cfg.master_seed = value.parse().map_err(|e| err(format!("{e}")))?,
                "output_dir" => cfg.output_dir = PathBuf::from(value),
                "models" => cfg.models = parse_list(value, ',', str::parse::<Model>).map_err(err)?,
                "share_seed" => cfg.share_seed = value.parse().map_err(|e| err(format!("{e}")))?,
                "wilcoxon_first" => cfg.wilcoxon_first = value.parse().map_err(|e: Error| err(e.to_string()))?,
                "zeta" => cfg.zeta = value.parse().map_err(|e| err(format!("{e}")))?,
                "thinning_replications" => {
                    cfg.thinning_replications = value.parse().map_err(|e| err(format!("{e}")))?
                }
                other => return Err(config_err(lineno, format!("unknown key `{other}`"))),
            }
        }
        if !thetas.is_empty() {
            cfg.thetas = thetas;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        self.theta0.validate().map_err(|e| Error::Config(format!("theta0: {e}")))?;
        for (label, theta) in &self.thetas {
            theta.validate().map_err(|e| Error::Config(format!("theta.{label}: {e}")))?;
        }
        for law in &self.laws {
            law.validate().map_err(|e| Error::Config(format!("law {law}: {e}")))?;
        }
        if self.thetas.is_empty() || self.laws.is_empty() || self.models.is_empty() {
            return bad("thetas, laws and models must be nonempty");
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return bad("gamma must be positive");
        }
        if self.sample_sizes.is_empty() || self.sample_sizes.contains(&0) {
            return bad("sample sizes must be positive");
        }
        if !(self.zeta > 0.0 && self.zeta < 1.0) {
            return bad("zeta must lie in (0,1)");
        }
        if self.thinning_replications == 0 {
            return bad("thinning_replications must be positive");
        }
        Ok(())
    }

    pub fn max_sample_size(&self) -> usize {
        self.sample_sizes.iter().copied().max().unwrap_or(0)
    }

    /// Seed of the `(θ, law, model)` cell; with `share_seed` both models get
    /// the same seed.
    pub fn cell_seed(&self, theta_label: &str, law: &JumpLaw, model: Model) -> u64 {
        let model_tag = match (self.share_seed, model) {
            (true, _) => 0,
            (false, Model::Cogarch) => 1,
            (false, Model::Mcogarch) => 2,
        };
        derive_path(self.master_seed, &[fnv1a(theta_label), fnv1a(&law.to_string()), model_tag])
    }
}

fn fnv1a(s: &str) -> u64 {
    s.bytes()
        .fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3))
}

/// Likelihood-ratio batches of both models for one `(θ, law)` cell at the
/// largest sample size.
#[derive(Debug, Clone)]
pub struct CellBatches {
    pub theta_label: String,
    pub law: JumpLaw,
    pub batches: Vec<LrBatch>,
}

impl CellBatches {
    pub fn batch(&self, model: Model) -> Option<&LrBatch> {
        self.batches.iter().find(|b| b.model == model)
    }
}

pub fn simulate_cell(cfg: &ExperimentConfig, theta_label: &str, theta: &Theta, law: &JumpLaw, models: &[Model]) -> Result<CellBatches> {
    let count = cfg.max_sample_size();
    let batches = models
        .iter()
        .map(|&m| lr_sample(m, theta, &cfg.theta0, cfg.gamma, law, count, cfg.cell_seed(theta_label, law, m)))
        .collect::<Result<Vec<_>>>()?;
    Ok(CellBatches {
        theta_label: theta_label.to_string(),
        law: law.clone(),
        batches,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LrTableRow {
    pub theta_label: String,
    pub law: String,
    pub model: Model,
    pub sample_size: usize,
    pub seed: u64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub mean: f64,
    pub standard_error: f64,
}

pub fn lr_row(theta_label: &str, batch: &LrBatch) -> Result<LrTableRow> {
    let q = quantiles(&batch.samples, &QUANTILE_PROBS)?;
    Ok(LrTableRow {
        theta_label: theta_label.to_string(),
        law: batch.law.label(),
        model: batch.model,
        sample_size: batch.samples.len(),
        seed: batch.seed,
        q25: q[0],
        median: q[1],
        q75: q[2],
        mean: batch.mean(),
        standard_error: batch.standard_error(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WilcoxonRow {
    pub theta_label: String,
    pub law: String,
    pub sample_size: usize,
    pub w: f64,
    pub p: f64,
    pub first_model: Model,
    pub seed_first: u64,
    pub seed_second: u64,
}

/// Wilcoxon comparison of the two models' batches on prefixes of each
/// configured sample size. A fully tied pool reports `W = 0`, `p = 1`.
pub fn wilcoxon_rows(cfg: &ExperimentConfig, cell: &CellBatches) -> Result<Vec<WilcoxonRow>> {
    let first = cfg.wilcoxon_first;
    let second = match first {
        Model::Cogarch => Model::Mcogarch,
        Model::Mcogarch => Model::Cogarch,
    };
    let missing = || Error::Config("Wilcoxon comparison needs both models".into());
    let (a, b) = (cell.batch(first).ok_or_else(missing)?, cell.batch(second).ok_or_else(missing)?);
    cfg.sample_sizes
        .iter()
        .map(|&n| {
            let (w, p) = match wilcoxon_rank_sum(&a.samples[..n], &b.samples[..n]) {
                Ok(r) => (r.w_standardized, r.p_two_sided),
                Err(Error::DegenerateTest(_)) => (0.0, 1.0),
                Err(e) => return Err(e),
            };
            Ok(WilcoxonRow {
                theta_label: cell.theta_label.clone(),
                law: cell.law.label(),
                sample_size: n,
                w,
                p,
                first_model: first,
                seed_first: a.seed,
                seed_second: b.seed,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Tables {
    pub lr: Vec<LrTableRow>,
    pub wilcoxon: Vec<WilcoxonRow>,
}

/// Simulates every `(θ, law)` cell once and derives the requested tables.
/// Batches are dropped after each cell.
pub fn run_tables(cfg: &ExperimentConfig, lr: bool, wilcoxon: bool) -> Result<Tables> {
    cfg.validate()?;
    let models: Vec<Model> = if wilcoxon { Model::BOTH.to_vec() } else { cfg.models.clone() };
    let mut out = Tables::default();
    for (label, theta) in &cfg.thetas {
        for law in &cfg.laws {
            let cell = simulate_cell(cfg, label, theta, law, &models)?;
            if lr {
                for m in &cfg.models {
                    if let Some(b) = cell.batch(*m) {
                        out.lr.push(lr_row(label, b)?);
                    }
                }
            }
            if wilcoxon {
                out.wilcoxon.extend(wilcoxon_rows(cfg, &cell)?);
            }
        }
    }
    Ok(out)
}

pub fn run_lr_table(cfg: &ExperimentConfig) -> Result<Vec<LrTableRow>> {
    Ok(run_tables(cfg, true, false)?.lr)
}

pub fn run_wilcoxon_table(cfg: &ExperimentConfig) -> Result<Vec<WilcoxonRow>> {
    Ok(run_tables(cfg, false, true)?.wilcoxon)
}

pub fn lr_csv(rows: &[LrTableRow]) -> String {
    let mut s = String::from("theta_label,law,model,sample_size,seed,q25,median,q75,mean,se\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            r.theta_label, r.law, r.model, r.sample_size, r.seed, r.q25, r.median, r.q75, r.mean, r.standard_error
        );
    }
    s
}

pub fn wilcoxon_csv(rows: &[WilcoxonRow]) -> String {
    let mut s = String::from("theta_label,law,sample_size,W,p,first_model,seed_first,seed_second\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.theta_label, r.law, r.sample_size, r.w, r.p, r.first_model, r.seed_first, r.seed_second
        );
    }
    s
}

fn distinct<T: PartialEq + Clone>(items: impl Iterator<Item = T>) -> Vec<T> {
    let mut out: Vec<T> = Vec::new();
    for it in items {
        if !out.contains(&it) {
            out.push(it);
        }
    }
    out
}

/// Rows per (θ, model), column groups per law with 25%/median/75%.
pub fn lr_text(rows: &[LrTableRow]) -> String {
    let laws = distinct(rows.iter().map(|r| r.law.clone()));
    let keys = distinct(rows.iter().map(|r| (r.theta_label.clone(), r.model)));
    let mut s = format!("{:<10} {:<9}", "theta", "model");
    for l in &laws {
        let _ = write!(s, " | {l:^26}");
    }
    s.push('\n');
    let _ = write!(s, "{:<20}", "");
    for _ in &laws {
        let _ = write!(s, " | {:>8} {:>8} {:>8}", "25%", "median", "75%");
    }
    s.push('\n');
    for (label, model) in keys {
        let _ = write!(s, "{label:<10} {:<9}", model.name());
        for l in &laws {
            match rows.iter().find(|r| r.theta_label == label && r.model == model && &r.law == l) {
                Some(r) => {
                    let _ = write!(s, " | {:>8.4} {:>8.4} {:>8.4}", r.q25, r.median, r.q75);
                }
                None => {
                    let _ = write!(s, " | {:>26}", "-");
                }
            }
        }
        s.push('\n');
    }
    s
}

/// Rows per θ, column groups per law with one W (and p) per sample size.
pub fn wilcoxon_text(rows: &[WilcoxonRow]) -> String {
    let laws = distinct(rows.iter().map(|r| r.law.clone()));
    let labels = distinct(rows.iter().map(|r| r.theta_label.clone()));
    let sizes = distinct(rows.iter().map(|r| r.sample_size));
    let width = 10 * sizes.len();
    let mut s = format!("{:<10}", "theta");
    for l in &laws {
        let _ = write!(s, " | {l:^width$}");
    }
    s.push('\n');
    let _ = write!(s, "{:<10}", "");
    for _ in &laws {
        s.push_str(" |");
        for n in &sizes {
            let _ = write!(s, " {:>9}", format!("n={n}"));
        }
    }
    s.push('\n');
    for label in &labels {
        for (stat, name) in [(0, "W"), (1, "p")] {
            let _ = write!(s, "{:<10}", if stat == 0 { label.as_str() } else { "" });
            for l in &laws {
                s.push_str(" |");
                for n in &sizes {
                    match rows.iter().find(|r| &r.theta_label == label && &r.law == l && r.sample_size == *n) {
                        Some(r) if stat == 0 => {
                            let _ = write!(s, " {:>9.2}", r.w);
                        }
                        Some(r) => {
                            let _ = write!(s, " {:>9.4}", r.p);
                        }
                        None => {
                            let _ = write!(s, " {:>9}", "-");
                        }
                    }
                }
            }
            let _ = writeln!(s, "  {name}");
        }
    }
    s
}

/// Writes `contents` to `dir/name`, creating `dir` if needed.
pub fn write_output(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, contents)?;
    Ok(path)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThinningRow {
    pub n: usize,
    pub p_n: f64,
    pub bound: f64,
    pub tv: f64,
    pub mc_error: f64,
}

impl ThinningRow {
    pub fn within_bound(&self) -> bool {
        self.tv <= self.bound + 3.0 * self.mc_error
    }
}

/// Largest count resolved individually in the total-variation comparison.
pub const THINNING_KMAX: usize = 30;

/// Empirical law of the number of nonzero thinned innovations against
/// Poisson(γ) for each grid size, with `p_n = γ/n`.
pub fn thinning_check(ns: &[usize], gamma: f64, replications: usize, seed: u64) -> Result<Vec<ThinningRow>> {
    if replications == 0 {
        return Err(Error::InvalidParameter("need at least one replication".into()));
    }
    ns.iter()
        .map(|&n| {
            let spec = ThinningSpec::matched(n, gamma)?;
            let cell_seed = derive_seed(seed, n as u64);
            let counts: Vec<usize> = (0..replications as u64)
                .into_par_iter()
                .map(|i| thinned_support(&spec, &mut substream(cell_seed, i)).len())
                .collect();
            Ok(ThinningRow {
                n,
                p_n: spec.p_n,
                bound: thinning_bound(n, spec.p_n, gamma, 0.0)?,
                tv: tv_to_poisson(&counts, gamma, THINNING_KMAX),
                mc_error: tv_mc_error(gamma, THINNING_KMAX, replications),
            })
        })
        .collect()
}

pub fn thinning_csv(rows: &[ThinningRow]) -> String {
    let mut s = String::from("n,p_n,bound,tv,mc_error,within_bound\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{},{},{},{}", r.n, r.p_n, r.bound, r.tv, r.mc_error, r.within_bound());
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapRow {
    pub theta1: String,
    pub theta2: String,
    pub law: String,
    pub zeta: f64,
    pub gap: f64,
    pub tolerance: f64,
}

/// `(θ0, θ)` identity gaps for every configured θ and law.
pub fn identity_gap_scan(cfg: &ExperimentConfig) -> Result<Vec<GapRow>> {
    let hc = HellingerConfig::with_zeta(cfg.zeta)?;
    let mut rows = Vec::new();
    for law in &cfg.laws {
        for (label, theta) in &cfg.thetas {
            let g = d1_identity_gap(&cfg.theta0, theta, cfg.zeta, law, &hc)?;
            rows.push(GapRow {
                theta1: "theta0".into(),
                theta2: label.clone(),
                law: law.label(),
                zeta: cfg.zeta,
                gap: g.gap,
                tolerance: g.error_budget,
            });
        }
    }
    Ok(rows)
}

pub fn gap_csv(rows: &[GapRow]) -> String {
    let mut s = String::from("theta1,theta2,law,zeta,gap,tolerance\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{},{},{},{}", r.theta1, r.theta2, r.law, r.zeta, r.gap, r.tolerance);
    }
    s
}

/// `(h, ζ, g)` records on a log-spaced grid of `h`.
pub fn g_grid_csv(law: &JumpLaw, zetas: &[f64], hs: &[f64]) -> Result<String> {
    let hc = HellingerConfig::default();
    let mut s = String::from("h,zeta,g\n");
    for &zeta in zetas {
        for &h in hs {
            let _ = writeln!(s, "{h},{zeta},{}", g_eval(law, zeta, h, &hc)?);
        }
    }
    Ok(s)
}

pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points < 2 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..points)
        .map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub id: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct DiagnosticsReport {
    pub checks: Vec<Check>,
}

impl DiagnosticsReport {
    fn push(&mut self, id: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            id: id.into(),
            passed,
            detail: detail.into(),
        });
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let _ = writeln!(s, "{} {:<40} {}", if c.passed { "PASS" } else { "FAIL" }, c.id, c.detail);
        }
        s
    }
}

fn g_grid_checks(report: &mut DiagnosticsReport, law: &JumpLaw) -> Result<()> {
    let hc = HellingerConfig::default();
    let hs = log_grid(0.05, 20.0, 41);
    let zetas = [0.1, 0.3, 0.5, 0.7, 0.9];
    let (mut worst_reflection, mut worst_bound) = (0.0f64, f64::NEG_INFINITY);
    for &zeta in &zetas {
        for &h in &hs {
            let g = g_eval(law, zeta, h, &hc)?;
            let r = g_eval(law, 1.0 - zeta, 1.0 / h, &hc)?;
            worst_reflection = worst_reflection.max((g - r).abs());
            // Hölder: 0 < g <= 1.
            worst_bound = worst_bound.max(g - 1.0);
            if !(g > 0.0) {
                worst_bound = f64::INFINITY;
            }
        }
    }
    let one = g_eval(law, 0.5, 1.0, &hc)?;
    report.push(format!("g.unit[{}]", law.label()), one == 1.0, format!("g(1) = {one}"));
    report.push(
        format!("g.reflection[{}]", law.label()),
        worst_reflection <= 2e-9,
        format!("max |g(z,h) - g(1-z,1/h)| = {worst_reflection:.3e}"),
    );
    report.push(
        format!("g.bounded[{}]", law.label()),
        worst_bound <= 1e-9,
        format!("max g - 1 = {worst_bound:.3e}"),
    );
    Ok(())
}

fn interpolation_checks(report: &mut DiagnosticsReport, seed: u64) -> Result<()> {
    let mut worst = 0.0f64;
    for i in 0..100u64 {
        let mut rng = substream(seed, i);
        use rand::Rng;
        let theta = Theta::new(
            rng.random_range(0.1..5.0),
            rng.random_range(0.1..5.0),
            rng.random_range(0.05..5.0),
            rng.random_range(0.0..1.0),
        )?;
        let n = rng.random_range(16..=1024usize);
        let spec = ThinningSpec::matched(n, 4.0)?;
        let z = thinned_innovations(&spec, &JumpLaw::StandardNormal, &mut rng);
        let path = garch_path(&parametrize(Scheme::H0, theta, n)?, &z)?;
        let ode = ode_interpolated_volatility(&theta, &z)?;
        for (a, b) in path.h.iter().zip(&ode) {
            worst = worst.max((a - b).abs() / b.abs());
        }
    }
    report.push("interpolation.identity", worst <= 1e-12, format!("max relative error {worst:.3e} over 100 paths"));
    Ok(())
}

/// Bundled invariant suites. Errors from individual computations are
/// recorded as failed checks.
pub fn run_diagnostics(cfg: &ExperimentConfig) -> Result<DiagnosticsReport> {
    cfg.validate()?;
    let mut report = DiagnosticsReport::default();
    for law in &cfg.laws {
        if let Err(e) = g_grid_checks(&mut report, law) {
            report.push(format!("g.grid[{}]", law.label()), false, e.to_string());
        }
    }

    match identity_gap_scan(cfg) {
        Ok(rows) => {
            for (row, (_, theta)) in rows.iter().zip(cfg.thetas.iter().cycle()) {
                let t0 = &cfg.theta0;
                let lambda_only = theta.h0 == t0.h0 && theta.beta == t0.beta && theta.alpha == t0.alpha;
                let id = format!("gap[{},{}]", row.theta2, row.law);
                let detail = format!("gap {:.3e}, tolerance {:.3e}", row.gap, row.tolerance);
                if lambda_only {
                    report.push(id, row.gap.abs() < row.tolerance, detail);
                } else {
                    let resolved = row.gap.abs() > 10.0 * row.tolerance;
                    report.push(id, true, format!("{detail}, resolved: {resolved}"));
                }
            }
        }
        Err(e) => report.push("gap.scan", false, e.to_string()),
    }

    let ns = [1_000, 10_000, 100_000, 1_000_000];
    match thinning_check(&ns, cfg.gamma, cfg.thinning_replications, derive_seed(cfg.master_seed, 9)) {
        Ok(rows) => {
            for r in rows {
                report.push(
                    format!("thinning[n={}]", r.n),
                    r.within_bound(),
                    format!("tv {:.5}, bound {:.6}, mc error {:.5}", r.tv, r.bound, r.mc_error),
                );
            }
        }
        Err(e) => report.push("thinning", false, e.to_string()),
    }

    if let Err(e) = interpolation_checks(&mut report, derive_seed(cfg.master_seed, 7)) {
        report.push("interpolation.identity", false, e.to_string());
    }
    Ok(report)
}
