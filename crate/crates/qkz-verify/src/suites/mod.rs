//! The verification suites and the orchestrator that runs them.
//!
//! Each suite draws all of its random inputs up front from a seeded
//! sampler and turns them into independent jobs. Jobs run on the rayon pool
//! and their records are reassembled in planning order, so the report does
//! not depend on scheduling.

mod algebra;
mod barnes;
mod grassmann;
mod integrals;

use std::collections::BTreeMap;
use std::time::Instant;

use qkz::qkz_operators::ModelParams;
use qkz::sampling::Sampler;
use qkz::Complex64;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{RunConfig, Suite, ZSpec};
use crate::error::{Context, Result};
use crate::report::{cj, cjs, CheckRecord, Environment, Summary, VerificationReport, SCHEMA_VERSION};

pub(crate) type Job = Box<dyn FnOnce() -> Result<Vec<CheckRecord>> + Send>;

pub(crate) fn job(f: impl FnOnce() -> Result<Vec<CheckRecord>> + Send + 'static) -> Job {
    Box::new(f)
}

/// Planning state shared by the suites.
pub(crate) struct Planner<'a> {
    pub cfg: &'a RunConfig,
    pub rng: Sampler,
}

impl<'a> Planner<'a> {
    fn new(cfg: &'a RunConfig, suite: Suite) -> Self {
        Planner { cfg, rng: Sampler::new(cfg.seed ^ suite.seed_tag()) }
    }

    /// μ for a suite: the configured value when given, else the suite's own.
    pub fn mu_or(&self, own: Complex64) -> Complex64 {
        if self.cfg.mu_explicit {
            self.cfg.mu_c()
        } else {
            own
        }
    }

    /// A generic parameter set: the configured z, or a fresh seeded draw.
    pub fn params(&mut self, n: usize, ell: usize, mu: Complex64) -> Result<ModelParams> {
        let hbar = self.cfg.hbar_c();
        match &self.cfg.z {
            ZSpec::Explicit { values } => {
                ModelParams::new(n, ell, hbar, mu, values.iter().map(|&c| c.into()).collect()).context(|| "configured z".into())
            }
            ZSpec::Random { spread } => self.rng.generic_params(n, ell, hbar, mu, *spread).context(|| format!("drawing z for n = {n}")),
        }
    }

    /// Number of independent z draws: `k` when random, one when fixed.
    pub fn z_draws(&self, k: usize) -> usize {
        match self.cfg.z {
            ZSpec::Explicit { .. } => 1,
            ZSpec::Random { .. } => k,
        }
    }

    /// Seeded periodic-function coefficients with entries in the unit box.
    pub fn coeffs(&mut self, count: usize) -> Vec<Complex64> {
        (0..count).map(|_| self.rng.complex_in_box(2.0)).collect()
    }
}

pub(crate) fn params_json(p: &ModelParams) -> Value {
    json!({ "n": p.n(), "ell": p.ell(), "hbar": cj(p.hbar()), "p": cj(p.p()), "mu": cj(p.mu()), "z": cjs(p.z()) })
}

/// Relative difference |a − b|/max(|b|, floor).
pub(crate) fn rel(a: Complex64, b: Complex64, floor: f64) -> f64 {
    (a - b).norm() / b.norm().max(floor)
}

fn plan(suite: Suite, cfg: &RunConfig) -> Result<Vec<Job>> {
    let mut p = Planner::new(cfg, suite);
    match suite {
        Suite::Barnes => barnes::plan(&mut p),
        Suite::Detm => algebra::plan_detm(&mut p),
        Suite::Identities => algebra::plan_identities(&mut p),
        Suite::Spectrum => algebra::plan_spectrum(&mut p),
        Suite::DetIntegral => integrals::plan_det(&mut p),
        Suite::Shift => integrals::plan_shift(&mut p),
        Suite::MuOde => integrals::plan_mu_ode(&mut p),
        Suite::Vanishing => integrals::plan_vanishing(&mut p),
        Suite::Kernel => integrals::plan_kernel(&mut p),
        Suite::Grassmann => grassmann::plan(&mut p),
    }
}

/// Run one suite and return its records in planning order.
pub fn run_one(suite: Suite, cfg: &RunConfig) -> Result<Vec<CheckRecord>> {
    let jobs = plan(suite, cfg)?;
    let results: Vec<Result<Vec<CheckRecord>>> = jobs.into_par_iter().map(|j| j()).collect();
    let mut out = Vec::new();
    for r in results {
        out.extend(r?);
    }
    Ok(out)
}

/// Run the configured suites and assemble the report.
pub fn run_suite(cfg: &RunConfig) -> Result<VerificationReport> {
    let mut checks = Vec::new();
    let mut timings = BTreeMap::new();
    let start = Instant::now();
    for &suite in &cfg.suites {
        let t = Instant::now();
        checks.extend(run_one(suite, cfg)?);
        timings.insert(suite.name().to_string(), t.elapsed().as_secs_f64() * 1e3);
    }
    timings.insert("total".to_string(), start.elapsed().as_secs_f64() * 1e3);
    Ok(VerificationReport {
        schema_version: SCHEMA_VERSION,
        config_echo: serde_json::to_value(cfg)?,
        environment: Environment {
            seed: cfg.seed,
            quadrature_rel_tol: cfg.quadrature.rel_tol,
            quadrature_abs_tol: cfg.quadrature.abs_tol,
            rank_threshold: cfg.rank_threshold,
            library_version: env!("CARGO_PKG_VERSION").to_string(),
            timings_ms: timings,
        },
        summary: Summary::of(&checks),
        checks,
    })
}
