//! Exact exterior-algebra identities and the q → i subspace limit.

use qkz::grassmann::{
    default_q_sequence, f1, f2, f_squared_divisible, image_dims, jw_faithful, jw_rep, limit_intersection, phi1, phi2, subspace_limit_check,
    zeta_sl2_check,
};
use serde_json::{json, Value};

use super::{job, Job, Planner};
use crate::error::{Context, Result};
use crate::report::{cj, cjs, CheckRecord};

/// Largest allowed ratio θ_{j+1}/θ_j along the q sequence.
const GEOMETRIC_RATIO: f64 = 0.75;
const FINAL_ANGLE: f64 = 1e-2;

fn holds(id: String, anchor: &str, inputs: Value, ok: bool, computed: Value, reference: Value) -> CheckRecord {
    CheckRecord::numeric(id, anchor, inputs, computed, reference, if ok { 0.0 } else { 1.0 }, 0.0)
}

pub(super) fn plan(p: &mut Planner) -> Result<Vec<Job>> {
    let mut jobs = Vec::new();

    for n in p.cfg.ns(1..=8) {
        let ells = p.cfg.ells(n);
        jobs.push(job(move || {
            let mut out = Vec::new();
            for ell in ells {
                let d = image_dims(n, ell).context(|| format!("image dimensions n = {n}, ℓ = {ell}"))?;
                out.push(holds(
                    format!("grassmann/dims/n{n}/l{ell}"),
                    "dim(φ⁽¹⁾ℂ[ξ]_{ℓ−1} + φ⁽²⁾ℂ[ξ]_{ℓ−2}) and dim φ̃ℂ[ξ₁..ξ_{n−1}]_{ℓ−2} = min(C(n−1,ℓ−2), C(n−1,ℓ))",
                    json!({ "n": n, "ell": ell }),
                    d.holds(),
                    json!({ "phi1": d.phi1, "phi2": d.phi2, "sum": d.sum, "phi_tilde": d.phi_tilde }),
                    json!({ "sum": d.sum_expected(), "phi_tilde": d.phi_tilde_min }),
                ));
            }
            Ok(out)
        }));
    }

    for n in p.cfg.ns(2..=6) {
        jobs.push(job(move || {
            let r = zeta_sl2_check(n).context(|| format!("sl₂ triple n = {n}"))?;
            Ok(vec![holds(
                format!("grassmann/sl2/n{n}"),
                "D = Σ∂_k∂_{n−k}, φ̃ and h = [D, φ̃] form an sl₂ triple on ℂ[ζ]",
                json!({ "n": n }),
                r.holds(),
                json!({
                    "phi_tilde_in_zeta": r.phi_tilde_in_zeta,
                    "anticommutators": r.anticommutators,
                    "relations": r.relations,
                    "top_degree_annihilated": r.top_degree_annihilated,
                    "semisimple": r.semisimple,
                    "weight_ranks": r.weight_ranks,
                }),
                Value::Null,
            )])
        }));
    }

    for n in p.cfg.ns(1..=5) {
        jobs.push(job(move || {
            let ctx = |what: &str| format!("{what} n = {n}");
            let faithful = jw_faithful(n).context(|| ctx("Jordan–Wigner faithfulness"))?;
            let one = jw_rep(&phi1(n)).context(|| ctx("ρ(φ⁽¹⁾)"))? == f1(n);
            let two = jw_rep(&phi2(n)).context(|| ctx("ρ(φ⁽²⁾)"))? == f2(n).context(|| ctx("F⁽²⁾"))?;
            let inputs = json!({ "n": n });
            Ok(vec![
                holds(format!("grassmann/jw-faithful/n{n}"), "the Jordan–Wigner map ξ_m ↦ (−i)^m σ³…σ³σ⁻_m is faithful", inputs.clone(), faithful, Value::Null, Value::Null),
                holds(format!("grassmann/jw-phi1/n{n}"), "ρ(φ⁽¹⁾) = F⁽¹⁾ = −iF(q)|_{q=i}", inputs.clone(), one, Value::Null, Value::Null),
                holds(format!("grassmann/jw-phi2/n{n}"), "ρ(φ⁽²⁾) = F⁽²⁾ = −(F(q)²/(1+q²))|_{q=i}", inputs, two, Value::Null, Value::Null),
            ])
        }));
    }

    for n in p.cfg.ns(1..=4) {
        jobs.push(job(move || {
            Ok(vec![holds(
                format!("grassmann/divisibility/n{n}"),
                "(1 + q²) divides every entry of F(q)² as a Laurent polynomial",
                json!({ "n": n }),
                f_squared_divisible(n),
                Value::Null,
                Value::Null,
            )])
        }));
    }

    let (n, ell) = match (p.cfg.n, p.cfg.ell) {
        (Some(n), Some(l)) => (n, l),
        _ => (4, 2),
    };
    jobs.push(job(move || {
        let qs = default_q_sequence();
        let r = subspace_limit_check(n, ell, &qs).context(|| format!("subspace limit n = {n}, ℓ = {ell}"))?;
        let ratios = r.ratios();
        let inputs = json!({ "n": n, "ell": ell, "q": cjs(&qs) });
        let computed = json!({ "angles": r.angles, "image_ranks": r.image_ranks, "ratios": ratios });
        let worst = ratios.iter().copied().fold(0.0, f64::max);
        Ok(vec![
            CheckRecord::numeric(
                format!("grassmann/subspace-limit/n{n}l{ell}/final-angle"),
                "F(q)(V^⊗n)_{ℓ−1} → F⁽¹⁾(V^⊗n)_{ℓ−1} + F⁽²⁾(V^⊗n)_{ℓ−2} as q → i",
                inputs.clone(),
                computed.clone(),
                json!({ "limit_dim": r.expected_dim, "rhs_dim": r.rhs_dim }),
                if r.collapsed() { f64::INFINITY } else { r.final_angle() },
                FINAL_ANGLE,
            ),
            CheckRecord::numeric(
                format!("grassmann/subspace-limit/n{n}l{ell}/geometric"),
                "the principal angle to the q → i limit decreases geometrically along q_j = i(1 + 2^{−j})",
                inputs,
                computed,
                Value::Null,
                worst,
                GEOMETRIC_RATIO,
            ),
        ])
    }));

    if (n, ell) == (4, 2) {
        jobs.push(job(move || {
            let q = *default_q_sequence().last().expect("nonempty");
            let r = limit_intersection(n, ell, q).context(|| format!("limit intersection n = {n}, ℓ = {ell}"))?;
            let dim = r.intersection_dim();
            Ok(vec![holds(
                format!("grassmann/intersection/n{n}l{ell}"),
                "near q = i the q-singular subspace meets the F(q)-image nontrivially",
                json!({ "n": n, "ell": ell, "q": cj(q) }),
                dim > 0,
                json!({ "intersection_dim": dim, "angles": r.angles, "singular_dim": r.singular_dim, "image_dim": r.image_dim }),
                Value::Null,
            )])
        }));
    }
    Ok(jobs)
}
