//! Suites built on the hypergeometric pairing I(w_M, W_N).

use std::f64::consts::PI;

use qkz::contour_quadrature::QuadOptions;
use qkz::hyper_map::{
    analyze_kernel_with, det_closed_form, difference_engine, exponential_subspace_limit, hyper_matrix, mu_ode_residual, mu_zero_continuity,
    qkz_shift_residual, r_m_residuals, singular_defect, total_difference_residual, DifferenceResidual, SeparableFn, CONTINUITY_EPS, EXPONENTIAL_EPS, MU_STEP,
    RANK_GAP,
};
use qkz::qkz_operators::ModelParams;
use qkz::tensor_space::{binomial, subsets};
use qkz::weight_functions::PeriodicFnCoeffs;
use qkz::Complex64;
use serde_json::{json, Value};

use super::{job, params_json, rel, Job, Planner};
use crate::error::{Context, Result};
use crate::report::{cj, cjs, CheckRecord};

const I_PI: Complex64 = Complex64::new(0.0, PI);

fn case_tag(params: &ModelParams) -> String {
    format!("n{}l{}", params.n(), params.ell())
}

fn random_w(p: &mut Planner, n: usize, ell: usize) -> Result<PeriodicFnCoeffs> {
    let c = p.coeffs(binomial(n, ell));
    PeriodicFnCoeffs::new(n, ell, c).context(|| "periodic coefficients".into())
}

pub(super) fn plan_det(p: &mut Planner) -> Result<Vec<Job>> {
    const ANCHOR: &str = "det[I(w_M, W_N)] equals the product formula in Γ(−1/2), e^μ − 1, e^{μΣz/p} and z_k − z_m − ħ";
    let mu = p.mu_or(I_PI);
    let opts = p.cfg.quad();
    let mut jobs = Vec::new();
    for (n, ell) in p.cfg.cases(&[(2, 1), (3, 1), (4, 1), (4, 2)]) {
        let tol = if ell >= 2 { 1e-4 } else { 1e-6 };
        for draw in 0..p.z_draws(2) {
            let params = p.params(n, ell, mu)?;
            jobs.push(job(move || {
                let h = hyper_matrix(&params, &opts).context(|| format!("hyper matrix n = {n}, ℓ = {ell}"))?;
                let det = h.det();
                let reference = det_closed_form(&params).context(|| "determinant closed form".into())?;
                Ok(vec![CheckRecord::numeric(
                    format!("det-integral/{}/z{draw}", case_tag(&params)),
                    ANCHOR,
                    json!({ "params": params_json(&params), "max_entry_error": h.max_error() }),
                    cj(det),
                    cj(reference),
                    rel(det, reference, f64::MIN_POSITIVE),
                    tol,
                )])
            }));
        }
    }
    Ok(jobs)
}

pub(super) fn plan_shift(p: &mut Planner) -> Result<Vec<Job>> {
    const ANCHOR: &str = "Ψ_W(z + p e_m) = K_m(z)Ψ_W(z) for the hypergeometric solutions";
    const SINGULAR: &str = "at μ = 0 the solutions Ψ_W lie in the singular subspace ker Σ⁺";
    let opts = p.cfg.quad();
    let mut jobs = Vec::new();
    for (n, ell) in p.cfg.cases(&[(2, 1), (3, 1), (4, 2)]) {
        let own = if (n, ell) == (4, 2) { Complex64::new(0.0, 0.0) } else { Complex64::new(0.0, PI / 2.0) };
        let mu = p.mu_or(own);
        let at_zero = mu == Complex64::new(0.0, 0.0);
        let tol = if at_zero { 1e-5 } else { 1e-6 };
        let params = p.params(n, ell, mu)?;
        let w = random_w(p, n, ell)?;
        let tag = case_tag(&params);
        for m in 1..=n {
            let (params, w, tag) = (params.clone(), w.clone(), tag.clone());
            jobs.push(job(move || {
                let r = qkz_shift_residual(&w, &params, m, &opts).context(|| format!("shift residual {tag}, m = {m}"))?;
                Ok(vec![CheckRecord::numeric(
                    format!("shift/{tag}/m{m}"),
                    ANCHOR,
                    json!({ "params": params_json(&params), "m": m, "w": cjs(w.coeffs()) }),
                    Value::Null,
                    Value::Null,
                    r,
                    tol,
                )])
            }));
        }
        if at_zero {
            jobs.push(job(move || {
                let psi = hyper_matrix(&params, &opts).context(|| format!("hyper matrix {tag}"))?.psi(&w).context(|| "Ψ_W".into())?;
                Ok(vec![CheckRecord::numeric(
                    format!("shift/{tag}/singular"),
                    SINGULAR,
                    json!({ "params": params_json(&params), "w": cjs(w.coeffs()) }),
                    cjs(&psi.weight_coords(ell)),
                    Value::Null,
                    singular_defect(&psi),
                    1e-5,
                )])
            }));
        }
    }
    Ok(jobs)
}

pub(super) fn plan_mu_ode(p: &mut Planner) -> Result<Vec<Job>> {
    const ANCHOR: &str = "p∂_μΨ_W = L(μ)Ψ_W (derivative by Richardson-extrapolated central differences)";
    let mu = p.mu_or(I_PI);
    let opts = p.cfg.quad();
    let mut jobs = Vec::new();
    for (n, ell) in p.cfg.cases(&[(1, 1), (2, 1), (3, 1)]) {
        let params = p.params(n, ell, mu)?;
        let w = random_w(p, n, ell)?;
        jobs.push(job(move || {
            let r = mu_ode_residual(&w, &params, MU_STEP, &opts).context(|| format!("μ-equation residual n = {n}, ℓ = {ell}"))?;
            Ok(vec![CheckRecord::numeric(
                format!("mu-ode/{}", case_tag(&params)),
                ANCHOR,
                json!({ "params": params_json(&params), "w": cjs(w.coeffs()), "step": MU_STEP }),
                Value::Null,
                Value::Null,
                r,
                1e-5,
            )])
        }));
    }
    Ok(jobs)
}

const ANCHOR_G: &str = "I(D₁f, W) = 0 for f = g_M, the unsymmetrized weight function";
const ANCHOR_W: &str = "I(D₁f, W) = 0 for f = w_M";
const ANCHOR_R: &str = "I(r_M, W) = 0, with r_M in closed form and as a sum of total differences";

fn difference_record(id: String, anchor: &str, inputs: Value, r: &DifferenceResidual) -> CheckRecord {
    CheckRecord::numeric(id, anchor, inputs, cj(r.value), json!({ "scale": r.scale, "quadrature_error": r.error }), r.relative(), 1e-6)
}

pub(super) fn plan_vanishing(p: &mut Planner) -> Result<Vec<Job>> {
    let mus = if p.cfg.mu_explicit { vec![p.cfg.mu_c()] } else { vec![I_PI, Complex64::new(0.0, 0.0)] };
    let opts = p.cfg.quad();
    let mut jobs = Vec::new();
    for (n, ell) in p.cfg.cases(&[(2, 1), (4, 2)]) {
        for (j, &mu) in mus.iter().enumerate() {
            let params = p.params(n, ell, mu)?;
            let w = random_w(p, n, ell)?;
            jobs.push(job(move || vanishing_case(&params, &w, j, &opts)));
        }
    }
    Ok(jobs)
}

fn vanishing_case(params: &ModelParams, w: &PeriodicFnCoeffs, j: usize, opts: &QuadOptions) -> Result<Vec<CheckRecord>> {
    let tag = format!("{}/mu{j}", case_tag(params));
    let engine = difference_engine(params, opts).context(|| format!("difference engine {tag}"))?;
    let hbar = params.hbar();
    let identity: Vec<usize> = (0..params.ell()).collect();
    let mut out = Vec::new();
    for m in subsets(params.n(), params.ell()) {
        let inputs = json!({ "params": params_json(params), "m": m.members(), "w": cjs(w.coeffs()) });
        let which = m.members().iter().map(|k| k.to_string()).collect::<Vec<_>>().join("-");
        let g = total_difference_residual(&SeparableFn::kernel(&m, &identity, hbar), w, &engine).context(|| format!("g-family difference {tag}"))?;
        out.push(difference_record(format!("vanishing/{tag}/g/M{which}"), ANCHOR_G, inputs.clone(), &g));
        let wr = total_difference_residual(&SeparableFn::weight(&m, hbar), w, &engine).context(|| format!("w-family difference {tag}"))?;
        out.push(difference_record(format!("vanishing/{tag}/w/M{which}"), ANCHOR_W, inputs.clone(), &wr));
        let (closed, diffs) = r_m_residuals(&m, w, &engine).context(|| format!("r_M integrals {tag}"))?;
        out.push(difference_record(format!("vanishing/{tag}/r-closed/M{which}"), ANCHOR_R, inputs.clone(), &closed));
        if let Some(diffs) = diffs {
            out.push(difference_record(format!("vanishing/{tag}/r-differences/M{which}"), ANCHOR_R, inputs, &diffs));
        }
    }
    Ok(out)
}

pub(super) fn plan_kernel(p: &mut Planner) -> Result<Vec<Job>> {
    const RANK: &str = "at μ = 0 the hypergeometric map has rank C(n,ℓ) − C(n,ℓ−1)";
    const KERNEL: &str = "at μ = 0 the kernel of the hypergeometric map is im X⁽¹⁾ + im X⁽²⁾";
    const IMAGE: &str = "at μ = 0 the image of the hypergeometric map is the singular subspace";
    const CONTINUITY: &str = "H(iε) → H(0) as ε → 0 when 2ℓ ≤ n";
    const EXPONENTIAL: &str = "Ψ_W → 0 as μ = iε → 0 for W in the exponential subspace";
    let zero = Complex64::new(0.0, 0.0);
    let opts = p.cfg.quad();
    let threshold = p.cfg.rank_threshold;
    let mut jobs = Vec::new();
    for (n, ell) in p.cfg.cases(&[(2, 1), (3, 1), (4, 1), (4, 2)]) {
        let params = p.params(n, ell, zero)?;
        let kernel_params = params.clone();
        jobs.push(job(move || {
            let params = kernel_params;
            let tag = case_tag(&params);
            let h = hyper_matrix(&params, &opts).context(|| format!("μ = 0 hyper matrix {tag}"))?;
            let r = analyze_kernel_with(&h, threshold).context(|| format!("kernel analysis {tag}"))?;
            let inputs = json!({ "params": params_json(&params), "rank_threshold": threshold });
            Ok(vec![
                CheckRecord::numeric(
                    format!("kernel/{tag}/rank"),
                    RANK,
                    inputs.clone(),
                    json!({ "rank": r.rank, "singular_values": r.singular_values }),
                    json!({ "rank": r.expected_rank }),
                    r.rank.abs_diff(r.expected_rank) as f64,
                    0.0,
                ),
                CheckRecord::numeric(
                    format!("kernel/{tag}/gap"),
                    RANK,
                    inputs.clone(),
                    json!({ "gap": r.gap }),
                    json!({ "min_gap": RANK_GAP }),
                    RANK_GAP / r.gap,
                    1.0,
                ),
                CheckRecord::numeric(
                    format!("kernel/{tag}/kernel-angle"),
                    KERNEL,
                    inputs.clone(),
                    json!({ "numerical_kernel_dim": r.singular_values.len() - r.rank, "x_inclusion": r.x_inclusion }),
                    json!({ "exact_kernel_dim": r.exact_kernel_dim }),
                    r.kernel_angle,
                    1e-3,
                ),
                CheckRecord::numeric(format!("kernel/{tag}/image-angle"), IMAGE, inputs, json!({ "singular_defect": r.singular_defect }), Value::Null, r.image_angle, 1e-3),
            ])
        }));
        if p.cfg.cases.is_none() && (n, ell) == (4, 2) {
            jobs.push(job(move || {
                let c = mu_zero_continuity(&params, &CONTINUITY_EPS, &opts).context(|| "μ → 0 continuity".into())?;
                let worst = c.distances.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max);
                Ok(vec![CheckRecord::numeric(
                    format!("kernel/{}/continuity", case_tag(&params)),
                    CONTINUITY,
                    json!({ "params": params_json(&params), "eps": c.eps }),
                    json!({ "distances": c.distances, "richardson_distance": c.richardson_distance }),
                    Value::Null,
                    worst,
                    CONTINUITY_RATIO,
                )])
            }));
        }
    }
    if p.cfg.cases.is_none() && p.cfg.n.is_none() && p.cfg.ell.is_none() {
        let params = p.params(3, 2, zero)?;
        jobs.push(job(move || {
            let e = exponential_subspace_limit(&params, &EXPONENTIAL_EPS, &opts).context(|| "exponential subspace limit".into())?;
            Ok(vec![CheckRecord::numeric(
                format!("kernel/{}/exponential-subspace", case_tag(&params)),
                EXPONENTIAL,
                json!({ "params": params_json(&params), "eps": e.eps }),
                json!({ "norms": e.norms, "extrapolated": e.extrapolated }),
                Value::Null,
                e.extrapolated / e.norms[0],
                EXPONENTIAL_TOL,
            )])
        }));
    }
    Ok(jobs)
}

/// Largest allowed ratio of successive ‖H(iε) − H(0)‖ as ε halves.
const CONTINUITY_RATIO: f64 = 0.75;
/// ε → 0 extrapolant of ‖Ψ_W‖ relative to its value at the largest ε.
const EXPONENTIAL_TOL: f64 = 1e-2;
