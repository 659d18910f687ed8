//! Suites that need no contour integrals: exact determinant identities,
//! pointwise identities at random points, and the A₀ spectrum.

use std::f64::consts::PI;

use qkz::qkz_operators::{compat_residual, yang_baxter_residual, ModelParams};
use qkz::hyper_map::contour_shift_residual;
use qkz::tensor_space::{a0_predicted_spectrum, a0_spectrum, singular_dimension, subsets};
use qkz::weight_functions::{det_m_matrix, weight_sum_relation, xi1_expansion, xi2_expansion, SumRange, IdentityResidual};
use qkz::{Complex64, GaussianRational};
use serde_json::{json, Value};

use super::{job, params_json, Job, Planner};
use crate::error::{Context, Result};
use crate::report::{cj, cjs, CheckRecord};

const ALGEBRAIC_TOL: f64 = 1e-10;
const FD_TOL: f64 = 1e-7;
/// Relative distance of t₁ − t₂ from p/2 + pℤ below which a draw is redone.
const HALF_LATTICE_MARGIN: f64 = 1e-2;
const MAX_REDRAWS: usize = 1000;

fn strings(v: &[GaussianRational]) -> Value {
    Value::Array(v.iter().map(|q| Value::String(q.to_string())).collect())
}

pub(super) fn plan_detm(p: &mut Planner) -> Result<Vec<Job>> {
    const ANCHOR: &str = "det M = Π_{i<j}(x_i + y_j) for the coefficient matrix of Π_{i<j}(u − x_i)Π_{i>j}(u + y_i)";
    let mut jobs = Vec::new();
    for n in p.cfg.ns(1..=6) {
        for s in 0..5 {
            let x = p.rng.gaussian_rationals(n, 9, 5);
            let y = p.rng.gaussian_rationals(n, 9, 5);
            jobs.push(job(move || {
                let det = det_m_matrix(&x, &y).context(|| format!("building M for n = {n}"))?.det();
                let mut prod = GaussianRational::from_ints(1, 0);
                for i in 0..n {
                    for j in i + 1..n {
                        prod = prod * (x[i].clone() + y[j].clone());
                    }
                }
                Ok(vec![CheckRecord::exact(
                    format!("detm/n{n}/s{s}"),
                    ANCHOR,
                    json!({ "n": n, "x": strings(&x), "y": strings(&y) }),
                    Value::String(det.to_string()),
                    Value::String(prod.to_string()),
                )])
            }));
        }
    }
    Ok(jobs)
}

fn pick(p: &mut Planner, k: usize) -> usize {
    ((p.rng.uniform(0.0, 1.0) * k as f64) as usize).min(k - 1)
}

fn identity_record(id: String, anchor: &str, inputs: Value, r: &IdentityResidual) -> CheckRecord {
    CheckRecord::numeric(id, anchor, inputs, cj(r.lhs), json!({ "value": cj(r.rhs), "term_magnitude": r.magnitude }), r.relative(), ALGEBRAIC_TOL)
}

/// True when every (t_a − t_b)/p stays away from 1/2 + ℤ.
fn off_half_lattice(t: &[Complex64], params: &ModelParams) -> bool {
    let p = params.p();
    t.iter().enumerate().all(|(a, ta)| {
        t[a + 1..].iter().all(|tb| {
            let x = (ta - tb) / p - 0.5;
            Complex64::new(x.re - x.re.round(), x.im).norm() > HALF_LATTICE_MARGIN
        })
    })
}

fn points(p: &mut Planner, params: &ModelParams, count: usize) -> Result<Vec<Complex64>> {
    for _ in 0..MAX_REDRAWS {
        let t = p.rng.separated_points(params, count).context(|| "drawing test points".into())?;
        if off_half_lattice(&t, params) {
            return Ok(t);
        }
    }
    Err(crate::error::VerifyError::invalid("model.z", "no admissible test points found"))
}

pub(super) fn plan_identities(p: &mut Planner) -> Result<Vec<Job>> {
    let samples = p.cfg.samples;
    let hbar = p.cfg.hbar_c();
    let mut jobs = Vec::new();

    // R-matrix braid relation.
    for s in 0..samples {
        let u = loop {
            let u = [p.rng.complex_in_box(4.0), p.rng.complex_in_box(4.0), p.rng.complex_in_box(4.0)];
            let ok = (0..3).all(|i| (0..3).all(|j| i == j || (u[i] - u[j] + hbar).norm() > 1e-2 * hbar.norm()));
            if ok {
                break u;
            }
        };
        jobs.push(job(move || {
            let r = yang_baxter_residual(u, hbar).context(|| "Yang–Baxter residual".into())?;
            Ok(vec![CheckRecord::numeric(
                format!("identities/yang-baxter/s{s}"),
                "Yang–Baxter equation R₁₂R₁₃R₂₃ = R₂₃R₁₃R₁₂ for R(x) = (x + ħP)/(x + ħ)",
                json!({ "u": cjs(&u), "hbar": cj(hbar) }),
                Value::Null,
                Value::Null,
                r,
                ALGEBRAIC_TOL,
            )])
        }));
    }

    // Antisymmetrization identities for the weight functions.
    let n = p.cfg.n.unwrap_or(4);
    let mu = p.cfg.mu_c();
    for s in 0..samples {
        let ell = 1 + pick(p, n.min(3));
        let params = p.params(n, ell, mu)?;
        let sets = subsets(n, ell - 1);
        let n_set = sets[pick(p, sets.len())].clone();
        let bounds: Vec<usize> = std::iter::once(0).chain(n_set.members().iter().copied()).chain([n]).collect();
        let pairs: Vec<(usize, usize)> = (1..=ell).flat_map(|b| (bounds[b - 1] + 1..=bounds[b]).map(move |m| (b, m))).collect();
        let (b, m) = pairs[pick(p, pairs.len())];
        let relation = if pick(p, 2) == 0 { SumRange::First } else { SumRange::Second };
        let t = points(p, &params, ell)?;
        jobs.push(job(move || {
            let r = weight_sum_relation(relation, &n_set, b, m, &t, &params).context(|| format!("weight-function identity at sample {s}"))?;
            let inputs = json!({
                "params": params_json(&params),
                "relation": format!("{relation:?}").to_lowercase(),
                "n_set": n_set.members(),
                "b": b,
                "m": m,
                "t": cjs(&t),
            });
            Ok(vec![identity_record(
                format!("identities/weight-antisymmetrization/s{s}"),
                "ħΣ_{k∉N} w_{N∪k} over k < m (first) or k ≥ m (second) equals the antisymmetrized product form",
                inputs,
                &r,
            )])
        }));
    }

    // Ξ expansions in the W basis.
    for s in 0..if n >= 2 { samples } else { 0 } {
        let params = p.params(n, 2, mu)?;
        let t = points(p, &params, 2)?;
        jobs.push(job(move || {
            let one = xi1_expansion(t[0], &params).context(|| format!("Ξ⁽¹⁾ expansion at sample {s}"))?;
            let two = xi2_expansion(t[0], t[1], &params).context(|| format!("Ξ⁽²⁾ expansion at sample {s}"))?;
            let inputs = json!({ "params": params_json(&params), "t": cjs(&t) });
            Ok(vec![
                identity_record(format!("identities/xi1-expansion/s{s}"), "Ξ⁽¹⁾(t) = 2Σ_m W_m(t)", json!({ "params": inputs["params"], "t": cjs(&t[..1]) }), &one),
                identity_record(format!("identities/xi2-expansion/s{s}"), "Ξ⁽²⁾(t₁, t₂) = 4Σ_{k<m} W_{k,m}(t₁, t₂)", inputs, &two),
            ])
        }));
    }

    // μ-derivative compatibility with K_m, and [L, K̃_m] = 0.
    let n_lk = p.cfg.n.unwrap_or(3);
    for s in 0..samples {
        let mu = if p.cfg.mu_explicit { p.cfg.mu_c() } else { Complex64::new(p.rng.uniform(-1.0, 1.0), p.rng.uniform(0.3, 2.0 * PI - 0.3)) };
        let params = p.params(n_lk, 1, mu)?;
        jobs.push(job(move || {
            let recs = compat_residual(&params, FD_TOL * 1e-2).context(|| format!("compatibility residuals at sample {s}"))?;
            let shift = recs.iter().map(|r| r.shift).fold(0.0, f64::max);
            let comm = recs.iter().map(|r| r.commutator).fold(0.0, f64::max);
            let per_m = |f: fn(&qkz::qkz_operators::CompatRecord) -> f64| Value::Array(recs.iter().map(|r| json!(f(r))).collect());
            Ok(vec![
                CheckRecord::numeric(
                    format!("identities/mu-shift-compatibility/s{s}"),
                    "L(z + p e_m)K_m − p∂_μK_m − K_mL = 0 (∂_μ by Richardson finite differences)",
                    json!({ "params": params_json(&params) }),
                    json!({ "per_m": per_m(|r| r.shift) }),
                    Value::Null,
                    shift,
                    FD_TOL,
                ),
                CheckRecord::numeric(
                    format!("identities/l-commutes-k-tilde/s{s}"),
                    "[L, K̃_m] = 0",
                    json!({ "params": params_json(&params) }),
                    json!({ "per_m": per_m(|r| r.commutator) }),
                    Value::Null,
                    comm,
                    ALGEBRAIC_TOL,
                ),
            ])
        }));
    }

    // Moving the contour past no poles leaves the integrals unchanged.
    let n_c = p.cfg.n.unwrap_or(2);
    let opts = p.cfg.quad();
    for s in 0..samples {
        let params = p.params(n_c, 1, mu)?;
        let magnitude = p.rng.uniform(0.2, 1.0);
        let offset = if pick(p, 2) == 0 { -magnitude } else { magnitude };
        jobs.push(job(move || {
            let r = contour_shift_residual(&params, offset, &opts).context(|| format!("contour comparison at sample {s}"))?;
            Ok(vec![CheckRecord::numeric(
                format!("identities/contour-independence/s{s}"),
                "I(w_M, W_N) does not depend on the admissible contour",
                json!({ "params": params_json(&params), "offset": offset }),
                Value::Null,
                Value::Null,
                r,
                ALGEBRAIC_TOL,
            )])
        }));
    }
    Ok(jobs)
}

pub(super) fn plan_spectrum(p: &mut Planner) -> Result<Vec<Job>> {
    const ANCHOR: &str = "A₀ = ½Σ⁻Σ⁺ on weight ℓ has eigenvalues (ℓ−k)(n−k−ℓ+1)/2 with multiplicity C(n,k) − C(n,k−1)";
    const TOL: f64 = 1e-12;
    const ZERO: f64 = 1e-9;
    let mut jobs = Vec::new();
    for n in p.cfg.ns(1..=5) {
        for ell in p.cfg.ells(n) {
            jobs.push(job(move || {
                let ev = a0_spectrum(n, ell);
                let pred = a0_predicted_spectrum(n, ell);
                let kernel = ev.iter().filter(|l| l.abs() < ZERO).count();
                let expected = singular_dimension(n, ell);
                let spread = if ev.len() == pred.len() {
                    ev.iter().zip(&pred).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
                } else {
                    f64::INFINITY
                };
                Ok(vec![CheckRecord::numeric(
                    format!("spectrum/n{n}/l{ell}"),
                    ANCHOR,
                    json!({ "n": n, "ell": ell }),
                    json!({ "eigenvalues": ev, "kernel_dim": kernel }),
                    json!({ "eigenvalues": pred, "kernel_dim": expected }),
                    spread + kernel.abs_diff(expected) as f64,
                    TOL,
                )])
            }));
        }
    }
    Ok(jobs)
}
