use std::f64::consts::PI;

use qkz::contour_quadrature::{barnes_integral, barnes_reference};
use qkz::Complex64;
use serde_json::json;

use super::{job, rel, Job, Planner};
use crate::error::{Context, Result};
use crate::report::{cj, CheckRecord};

const ANCHOR: &str = "closed form of the Barnes integral ∫ e^{u(μ−πi)} Γ(u − 1/2) Γ(k − u) du";
const TOL: f64 = 1e-8;

pub(super) fn plan(p: &mut Planner) -> Result<Vec<Job>> {
    let mus = if p.cfg.mu_explicit {
        vec![p.cfg.mu_c()]
    } else {
        vec![Complex64::new(0.0, PI / 2.0), Complex64::new(0.0, PI), Complex64::new(1.0, PI)]
    };
    let opts = p.cfg.quad();
    let mut jobs = Vec::new();
    for (j, &mu) in mus.iter().enumerate() {
        for k in 0..=4u32 {
            jobs.push(job(move || {
                let est = barnes_integral(k, mu, &opts).context(|| format!("Barnes integral k = {k}, μ = {mu}"))?;
                let reference = barnes_reference(k, mu).context(|| format!("Barnes closed form k = {k}"))?;
                Ok(vec![CheckRecord::numeric(
                    format!("barnes/mu{j}/k{k}"),
                    ANCHOR,
                    json!({ "k": k, "mu": cj(mu), "quadrature_error": est.error }),
                    cj(est.value),
                    cj(reference),
                    rel(est.value, reference, f64::MIN_POSITIVE),
                    TOL,
                )])
            }));
        }
    }
    Ok(jobs)
}
