//! Pole-separating contours and contour integrals.
//!
//! A contour is the vertical line Re s = x0 in the rotated coordinate
//! s = (t − center)/scale, plus a finite list of residue corrections for the
//! poles that land on the wrong side of it. The line is integrated in full:
//! a parameter τ ∈ (−2, 2) covers |Im s| ≤ T linearly and the two tails
//! through y = ±T/(2 ∓ τ)², which turns algebraic decay into smooth
//! behaviour at the endpoints.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::qkz_operators::ModelParams;
use crate::special::{branch_pow, gamma, ln_gamma};

/// Distance below which a pole counts as sitting on the base line.
const LINE_POLE_TOL: f64 = 1e-8;
/// Clearance, in units of p, kept between the base line and every pole;
/// closer poles make the line integrand too sharply peaked to resolve.
const LINE_POLE_MARGIN: f64 = 0.02;
const LINE_SEARCH_STEP: f64 = 0.01;
const LINE_SEARCH_STEPS: usize = 20;
/// Trapezoid nodes on a residue circle; the half set gives the doubling check.
const UNDERFLOW_SCALE: f64 = 1e-280;
const RING_NODES: usize = 64;
const RESIDUE_DOUBLING_TOL: f64 = 1e-12;
/// Growth of r·max|f| under radius halving that marks a pole as non-simple.
const NON_SIMPLE_RATIO: f64 = 1.5;
/// Range of shifts in pℤ used to collect nearby singular points.
const SINGULAR_SHIFTS: i32 = 4;

/// Which pole families the contour must separate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PoleFamilies {
    /// Left {z_m + ħ − pk}, right {z_m + pk}, k ≥ 0.
    Standard,
    /// Both families extended by one step: z_m + ħ + p on the left and
    /// z_m − p on the right. Integrals of p-shifted integrands use this.
    ShiftExtended,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Decay {
    /// |integrand| ≲ e^{−rate·|Im s|} in both directions.
    Exponential { rate: f64 },
    Algebraic,
}

impl Decay {
    pub fn from_mu(mu: Complex64) -> Self {
        let im = mu.im.rem_euclid(2.0 * PI);
        let rate = im.min(2.0 * PI - im);
        if rate > 0.0 {
            Decay::Exponential { rate }
        } else {
            Decay::Algebraic
        }
    }

    /// Half-height T of the linearly sampled window for a target tolerance.
    pub fn half_height(&self, tol: f64) -> f64 {
        match *self {
            Decay::Exponential { rate } => ((1.0 / tol).ln() / rate).clamp(4.0, 60.0),
            Decay::Algebraic => 8.0,
        }
    }
}

/// A pole whose residue is added as `winding · 2πi · Res`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PoleCorrection {
    pub location: Complex64,
    pub winding: i32,
}

#[derive(Clone, Debug)]
pub struct Contour {
    center: Complex64,
    scale: Complex64,
    x0: f64,
    half_height: f64,
    corrections: Vec<PoleCorrection>,
    singular_points: Vec<Complex64>,
    decay: Decay,
}

impl Contour {
    /// Bare line without corrections.
    pub fn line(center: Complex64, scale: Complex64, x0: f64, half_height: f64, decay: Decay) -> Self {
        Self { center, scale, x0, half_height, corrections: vec![], singular_points: vec![], decay }
    }

    pub fn with_corrections(mut self, corrections: Vec<PoleCorrection>, singular_points: Vec<Complex64>) -> Self {
        self.corrections = corrections;
        self.singular_points = singular_points;
        self
    }

    pub fn center(&self) -> Complex64 {
        self.center
    }
    pub fn scale(&self) -> Complex64 {
        self.scale
    }
    pub fn x0(&self) -> f64 {
        self.x0
    }
    pub fn half_height(&self) -> f64 {
        self.half_height
    }
    pub fn corrections(&self) -> &[PoleCorrection] {
        &self.corrections
    }
    pub fn singular_points(&self) -> &[Complex64] {
        &self.singular_points
    }
    pub fn decay(&self) -> Decay {
        self.decay
    }

    pub fn with_half_height(&self, half_height: f64) -> Self {
        Self { half_height, ..self.clone() }
    }

    /// Point of the line at height y.
    pub fn point(&self, y: f64) -> Complex64 {
        self.center + self.scale * Complex64::new(self.x0, y)
    }

    pub fn rotated(&self, t: Complex64) -> Complex64 {
        (t - self.center) / self.scale
    }

    /// Bound on the integrand envelope beyond |Im s| = T, when decay is
    /// exponential.
    pub fn tail_bound(&self) -> Option<f64> {
        match self.decay {
            Decay::Exponential { rate } => Some((-rate * self.half_height).exp()),
            Decay::Algebraic => None,
        }
    }

    /// Circle radius for a residue at `pole`: a third of the distance to the
    /// nearest other singular point, at most |scale|/4.
    pub fn residue_radius(&self, pole: Complex64) -> f64 {
        let own = 1e-12 * self.scale.norm();
        let d = self
            .singular_points
            .iter()
            .map(|s| (s - pole).norm())
            .filter(|&d| d > own)
            .fold(f64::INFINITY, f64::min);
        (0.25 * self.scale.norm()).min(d / 3.0)
    }
}

/// Contour for the phase-function integrals of `params`.
pub fn build_contour(params: &ModelParams, families: PoleFamilies, tol: f64) -> Result<Contour> {
    build_contour_shifted(params, families, tol, 0.0)
}

/// As [`build_contour`] with the base line moved by `offset` in the rotated
/// frame; corrections are recomputed for the new position. The line may be
/// nudged further so that it keeps a clearance from every pole.
pub fn build_contour_shifted(params: &ModelParams, families: PoleFamilies, tol: f64, offset: f64) -> Result<Contour> {
    let p = params.p();
    let hbar = params.hbar();
    let center = params.zbar();
    let c: Vec<Complex64> = params.z().iter().map(|z| (z - center) / p).collect();
    let min_re = c.iter().map(|c| c.re).fold(f64::INFINITY, f64::min);
    let lowest_k = match families {
        PoleFamilies::Standard => 0,
        PoleFamilies::ShiftExtended => -1,
    };
    let decay = Decay::from_mu(params.mu());

    // (location in t, rotated abscissa, left family?) for every pole within
    // reach of abscissa x.
    let candidates = |x: f64| {
        let mut out = Vec::new();
        for (zm, cm) in params.z().iter().zip(&c) {
            let reach = (cm.re - x).abs().ceil() as i32 + 2;
            for k in lowest_k..=reach {
                let kf = k as f64;
                out.push((zm + hbar - p * kf, cm.re + 0.5 - kf, true));
                out.push((zm + p * kf, cm.re + kf, false));
            }
        }
        out
    };
    let clearance = |x: f64| candidates(x).iter().map(|c| (c.1 - x).abs()).fold(f64::INFINITY, f64::min);

    // Step away from the requested abscissa until the line clears every pole.
    let requested = min_re - 0.25 + offset;
    let mut best = (clearance(requested), requested);
    for step in 1..=2 * LINE_SEARCH_STEPS {
        if best.0 >= LINE_POLE_MARGIN {
            break;
        }
        let sign = if step % 2 == 1 { -1.0 } else { 1.0 };
        let x = requested + sign * LINE_SEARCH_STEP * step.div_ceil(2) as f64;
        let d = clearance(x);
        if d > best.0 {
            best = (d, x);
        }
    }
    if best.0 < LINE_POLE_TOL {
        return Err(Error::Contour(format!("no pole-free base line near abscissa {requested}")));
    }
    let x0 = best.1;

    let corrections = candidates(x0)
        .iter()
        .filter_map(|&(t, s, left)| match (left, s > x0) {
            (true, true) => Some(PoleCorrection { location: t, winding: 1 }),
            (false, false) => Some(PoleCorrection { location: t, winding: -1 }),
            _ => None,
        })
        .collect();
    let mut singular = Vec::new();
    for zm in params.z() {
        for k in -SINGULAR_SHIFTS..=SINGULAR_SHIFTS {
            singular.push(zm + p * k as f64);
            singular.push(zm + hbar + p * k as f64);
        }
    }
    let contour = Contour::line(center, p, x0, decay.half_height(tol), decay);
    Ok(contour.with_corrections(corrections, singular))
}

#[derive(Clone, Copy, Debug)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_depth: u32,
    pub initial_panels: usize,
    /// Evaluate the nodes of each panel on the rayon pool.
    pub parallel: bool,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { abs_tol: 1e-14, rel_tol: 1e-12, max_depth: 14, initial_panels: 16, parallel: false }
    }
}

impl QuadOptions {
    pub fn with_tol(rel_tol: f64) -> Self {
        Self { rel_tol, abs_tol: rel_tol * 1e-2, ..Self::default() }
    }

    fn tightened(&self, factor: f64) -> Self {
        Self { abs_tol: self.abs_tol * factor, rel_tol: (self.rel_tol * factor).max(1e-14), parallel: false, ..*self }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: Complex64,
    /// Quadrature error estimate plus residue doubling changes.
    pub error: f64,
    /// Magnitude of the contribution from beyond |Im s| = T.
    pub tail: f64,
    pub evaluations: usize,
}

impl Estimate {
    pub fn exact(value: Complex64) -> Self {
        Self { value, error: 0.0, tail: 0.0, evaluations: 1 }
    }
}

/// Gauss–Legendre nodes and weights on [−1, 1] by Newton iteration.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let step = p1 / dp;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn rule(n: usize) -> &'static (Vec<f64>, Vec<f64>) {
    static GL8: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    static GL16: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    match n {
        8 => GL8.get_or_init(|| gauss_legendre(8)),
        16 => GL16.get_or_init(|| gauss_legendre(16)),
        _ => unreachable!("only the 8- and 16-point rules are used"),
    }
}

#[derive(Clone, Copy, Debug)]
struct Panel {
    a: f64,
    b: f64,
    depth: u32,
    value: Complex64,
    error: f64,
    abs_value: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn eval_panel<G>(g: &G, a: f64, b: f64, depth: u32, parallel: bool) -> Result<Panel>
where
    G: Fn(f64) -> Result<Complex64> + Sync,
{
    let (x16, w16) = rule(16);
    let (x8, w8) = rule(8);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let taus: Vec<f64> = x16.iter().chain(x8.iter()).map(|x| mid + half * x).collect();
    let values: Vec<Complex64> = if parallel {
        taus.par_iter().map(|&t| g(t)).collect::<Result<_>>()?
    } else {
        taus.iter().map(|&t| g(t)).collect::<Result<_>>()?
    };
    if let Some(v) = values.iter().find(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::NonFinite(*v));
    }
    let v16: Complex64 = values[..16].iter().zip(w16).map(|(v, w)| v * *w).sum::<Complex64>() * half;
    let v8: Complex64 = values[16..].iter().zip(w8).map(|(v, w)| v * *w).sum::<Complex64>() * half;
    let abs_value = values[..16].iter().zip(w16).map(|(v, w)| v.norm() * w).sum::<f64>() * half;
    Ok(Panel { a, b, depth, value: v16, error: (v16 - v8).norm(), abs_value })
}

struct Adaptive {
    value: Complex64,
    error: f64,
    evaluations: usize,
    panels: Vec<Panel>,
}

/// Globally adaptive 16-point Gauss–Legendre over the intervals between
/// consecutive `breaks`, each first cut into equal panels.
fn adaptive<G>(g: &G, breaks: &[f64], opts: &QuadOptions) -> Result<Adaptive>
where
    G: Fn(f64) -> Result<Complex64> + Sync,
{
    let per_interval = (opts.initial_panels / (breaks.len() - 1)).max(1);
    let mut heap = BinaryHeap::new();
    let mut evaluations = 0;
    for w in breaks.windows(2) {
        let h = (w[1] - w[0]) / per_interval as f64;
        for k in 0..per_interval {
            let a = w[0] + h * k as f64;
            heap.push(eval_panel(g, a, a + h, 0, opts.parallel)?);
            evaluations += 24;
        }
    }
    loop {
        let value: Complex64 = heap.iter().map(|p| p.value).sum();
        let error: f64 = heap.iter().map(|p| p.error).sum();
        let abs_value: f64 = heap.iter().map(|p| p.abs_value).sum();
        let target = opts.abs_tol.max(opts.rel_tol * value.norm()).max(64.0 * f64::EPSILON * abs_value);
        if error <= target {
            return Ok(Adaptive { value, error, evaluations, panels: heap.into_vec() });
        }
        let worst = heap.pop().expect("heap holds at least one panel");
        if worst.depth >= opts.max_depth {
            return Err(Error::NonConvergence { variable: None, a: worst.a, b: worst.b, error });
        }
        let mid = 0.5 * (worst.a + worst.b);
        heap.push(eval_panel(g, worst.a, mid, worst.depth + 1, opts.parallel)?);
        heap.push(eval_panel(g, mid, worst.b, worst.depth + 1, opts.parallel)?);
        evaluations += 48;
    }
}

/// τ ↦ (y, dy/dτ) for the full line.
fn line_map(tau: f64, t: f64) -> (f64, f64) {
    if tau > 1.0 {
        let d = 2.0 - tau;
        (t / (d * d), 2.0 * t / (d * d * d))
    } else if tau < -1.0 {
        let d = 2.0 + tau;
        (-t / (d * d), 2.0 * t / (d * d * d))
    } else {
        (t * tau, t)
    }
}

/// Integral along the full base line, without corrections.
pub fn integrate_line<F>(f: &F, contour: &Contour, opts: &QuadOptions) -> Result<Estimate>
where
    F: Fn(Complex64) -> Result<Complex64> + Sync,
{
    let dt = Complex64::i() * contour.scale;
    let g = |tau: f64| -> Result<Complex64> {
        let (y, jac) = line_map(tau, contour.half_height);
        let v = f(contour.point(y))?;
        // Far tail nodes may underflow the jacobian product to an exact zero.
        if v == Complex64::new(0.0, 0.0) {
            return Ok(v);
        }
        Ok(v * dt * jac)
    };
    let breaks = [-2.0, -1.0, 0.0, 1.0, 2.0];
    let out = adaptive(&g, &breaks, opts)?;
    let tail: Complex64 = out.panels.iter().filter(|p| p.a >= 1.0 || p.b <= -1.0).map(|p| p.value).sum();
    Ok(Estimate { value: out.value, error: out.error, tail: tail.norm(), evaluations: out.evaluations })
}

/// Line integral plus `winding · 2πi · Res` for every recorded correction.
pub fn integrate_path<F>(f: &F, contour: &Contour, opts: &QuadOptions) -> Result<Estimate>
where
    F: Fn(Complex64) -> Result<Complex64> + Sync,
{
    let mut est = integrate_line(f, contour, opts)?;
    for c in &contour.corrections {
        let r = residue_numeric(f, c.location, contour.residue_radius(c.location))?;
        est.value += 2.0 * PI * Complex64::i() * c.winding as f64 * r.value;
        est.error += 2.0 * PI * r.error;
        est.evaluations += r.evaluations;
    }
    Ok(est)
}

/// (1/2πi)∮ f around `pole` by the trapezoid rule on a circle.
///
/// Fails if halving the node count moves the result by more than 1e-12
/// relative, or if r·max|f| grows under radius halving (a pole of higher
/// order).
pub fn residue_numeric<F>(f: &F, pole: Complex64, radius: f64) -> Result<Estimate>
where
    F: Fn(Complex64) -> Result<Complex64> + ?Sized,
{
    let ring = |r: f64, n: usize| -> Result<(Vec<Complex64>, f64)> {
        let mut vals = Vec::with_capacity(n);
        let mut max_abs = 0f64;
        for j in 0..n {
            let u = Complex64::from_polar(r, 2.0 * PI * j as f64 / n as f64);
            let v = f(pole + u)?;
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::NonFinite(pole + u));
            }
            max_abs = max_abs.max(v.norm());
            vals.push(v * u);
        }
        Ok((vals, max_abs * r))
    };
    let (vals, scale) = ring(radius, RING_NODES)?;
    let full: Complex64 = vals.iter().sum::<Complex64>() / RING_NODES as f64;
    let half: Complex64 = vals.iter().step_by(2).sum::<Complex64>() / (RING_NODES / 2) as f64;
    let (_, inner_scale) = ring(0.5 * radius, 16)?;
    if scale > UNDERFLOW_SCALE && inner_scale > NON_SIMPLE_RATIO * scale {
        return Err(Error::NonSimplePole(pole));
    }
    let change = (full - half).norm();
    // Far out on a tail map the ring values can underflow to subnormals;
    // the comparison is meaningless there.
    if scale > UNDERFLOW_SCALE && change > RESIDUE_DOUBLING_TOL * full.norm().max(scale) {
        return Err(Error::ResidueUnstable { location: pole, change });
    }
    Ok(Estimate { value: full, error: change, tail: 0.0, evaluations: RING_NODES + 16 })
}

/// ℓ-fold integral over the same contour in every variable.
///
/// The first variable is outermost. Each correction in variable a turns into
/// an (ℓ−a)-fold integral of the residue function in the remaining variables.
pub fn integrate_iterated<F>(f: &F, contour: &Contour, ell: usize, opts: &QuadOptions) -> Result<Estimate>
where
    F: Fn(&[Complex64]) -> Result<Complex64> + Sync,
{
    let outer = QuadOptions { parallel: true, ..*opts };
    iterated(f, contour, &[], ell, &outer)
}

type Multivariate<'a> = dyn Fn(&[Complex64]) -> Result<Complex64> + Sync + 'a;

fn iterated(f: &Multivariate, contour: &Contour, fixed: &[Complex64], remaining: usize, opts: &QuadOptions) -> Result<Estimate> {
    if remaining == 0 {
        return Ok(Estimate::exact(f(fixed)?));
    }
    let var = fixed.len() + 1;
    let inner = opts.tightened(0.1);
    let with = |t: Complex64| {
        let mut v = fixed.to_vec();
        v.push(t);
        v
    };
    let line_f = |t: Complex64| iterated(f, contour, &with(t), remaining - 1, &inner).map(|e| e.value);
    let mut est = integrate_line(&line_f, contour, opts).map_err(|e| e.in_variable(var))?;
    for c in &contour.corrections {
        let radius = contour.residue_radius(c.location);
        let rest = remaining - 1;
        // Residue in this variable, taken pointwise in the later ones.
        let h = |later: &[Complex64]| -> Result<Complex64> {
            let g = |t: Complex64| {
                let mut v = fixed.to_vec();
                v.push(t);
                v.extend_from_slice(later);
                f(&v)
            };
            residue_numeric(&g, c.location, radius).map(|r| r.value)
        };
        let shifted = |args: &[Complex64]| h(&args[fixed.len()..]);
        let shifted: &Multivariate = &shifted;
        let r = iterated(&shifted, contour, fixed, rest, &inner).map_err(|e| e.in_variable(var))?;
        est.value += 2.0 * PI * Complex64::i() * c.winding as f64 * r.value;
        est.error += 2.0 * PI * r.error;
        est.tail += 2.0 * PI * r.tail;
        est.evaluations += r.evaluations;
    }
    Ok(est)
}

/// Integral along the polyline through `vertices`, segment by segment.
pub fn integrate_polyline<F>(f: &F, vertices: &[Complex64], opts: &QuadOptions) -> Result<Estimate>
where
    F: Fn(Complex64) -> Result<Complex64> + Sync,
{
    let mut total = Estimate { value: Complex64::new(0.0, 0.0), error: 0.0, tail: 0.0, evaluations: 0 };
    for w in vertices.windows(2) {
        let (a, b) = (w[0], w[1]);
        let g = |s: f64| f(a + (b - a) * s).map(|v| v * (b - a));
        let seg = adaptive(&g, &[0.0, 1.0], &QuadOptions { initial_panels: 4, ..*opts })?;
        total.value += seg.value;
        total.error += seg.error;
        total.evaluations += seg.evaluations;
    }
    Ok(total)
}

/// The reference contour for the Barnes integral in u: Re u = −1/4 with the
/// pole of Γ(u − 1/2) at u = 1/2 corrected.
pub fn barnes_contour(k: u32, mu: Complex64, tol: f64) -> Contour {
    let decay = Decay::from_mu(mu);
    let mut singular: Vec<Complex64> = (0..8).map(|j| Complex64::new(0.5 - j as f64, 0.0)).collect();
    singular.extend((0..8).map(|j| Complex64::new((k + j) as f64, 0.0)));
    Contour::line(Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), -0.25, decay.half_height(tol), decay)
        .with_corrections(vec![PoleCorrection { location: Complex64::new(0.5, 0.0), winding: 1 }], singular)
}

/// ∫ e^{u(μ−πi)} Γ(u−1/2) Γ(k−u) du by quadrature.
pub fn barnes_integral(k: u32, mu: Complex64, opts: &QuadOptions) -> Result<Estimate> {
    let im = mu.im;
    if !(im > 0.0 && im < 2.0 * PI) {
        return Err(Error::ConvergenceRegime(format!("Barnes quadrature needs 0 < Im μ < 2π, got {im}")));
    }
    let contour = barnes_contour(k, mu, opts.rel_tol);
    let shift = mu - Complex64::new(0.0, PI);
    let kf = k as f64;
    let f = |u: Complex64| Ok((u * shift + ln_gamma(u - 0.5) + ln_gamma(kf - u)).exp());
    integrate_path(&f, &contour, opts)
}

/// 2π Γ(k−1/2) e^{kμ} (e^μ−1)^{1/2−k} with arg(e^μ−1) ∈ [0, 2π).
pub fn barnes_reference(k: u32, mu: Complex64) -> Result<Complex64> {
    let w = mu.exp() - 1.0;
    if w.norm() == 0.0 {
        return Err(Error::invalid("mu", "e^μ = 1 has no branch for the Barnes formula"));
    }
    let kf = k as f64;
    Ok(2.0 * PI * gamma(Complex64::new(kf - 0.5, 0.0)) * (mu * kf).exp() * branch_pow(w, 0.5 - kf))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn params(z: Vec<Complex64>) -> ModelParams {
        ModelParams::new(z.len(), 1, c(1.0, 0.0), c(0.0, PI), z).unwrap()
    }

    fn locations(contour: &Contour) -> Vec<Complex64> {
        let mut v: Vec<_> = contour.corrections().iter().map(|c| c.location).collect();
        v.sort_by(|a, b| a.re.total_cmp(&b.re));
        v
    }

    #[test]
    fn gl_rules_integrate_polynomials() {
        for n in [8, 16] {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
            let deg = 2 * n - 2;
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
            assert!((q - 2.0 / (deg + 1) as f64).abs() < 1e-14);
        }
    }

    #[test]
    fn base_line_keeps_clear_of_poles() {
        // z₂ lies 1.3e-4 (in units of p) from the requested shifted line.
        let pr = params(vec![c(0.198_750_092_796_177_5, -0.197_085_096_058_137_95), c(0.134_863_376_123_099_23, 0.153_343_656_401_505_27)]);
        let ct = build_contour_shifted(&pr, PoleFamilies::Standard, 1e-12, 0.249_842_069_561_287_18).unwrap();
        let x0 = ct.x0;
        let cs: Vec<f64> = pr.z().iter().map(|z| ((z - pr.zbar()) / pr.p()).re).collect();
        for cm in cs {
            for k in -3..=3 {
                let k = k as f64;
                assert!((cm + k - x0).abs() >= LINE_POLE_MARGIN && (cm + 0.5 - k - x0).abs() >= LINE_POLE_MARGIN);
            }
        }
    }

    #[test]
    fn single_site_contour() {
        let ct = build_contour(&params(vec![c(0.0, 0.0)]), PoleFamilies::Standard, 1e-10).unwrap();
        assert_eq!(ct.x0(), -0.25);
        assert_eq!(locations(&ct), vec![c(1.0, 0.0)]);
        assert!(ct.corrections().iter().all(|c| c.winding == 1));
    }

    #[test]
    fn two_site_contour() {
        let ct = build_contour(&params(vec![c(0.0, 0.0), c(0.3, 0.0)]), PoleFamilies::Standard, 1e-10).unwrap();
        let locs = locations(&ct);
        assert_eq!(locs.len(), 2);
        assert!((locs[0] - 1.0).norm() < 1e-15 && (locs[1] - 1.3).norm() < 1e-15);
    }

    #[test]
    fn extended_contour_adds_shifted_right_poles() {
        let ct = build_contour(&params(vec![c(0.0, 0.0)]), PoleFamilies::ShiftExtended, 1e-10).unwrap();
        let neg: Vec<_> = ct.corrections().iter().filter(|c| c.winding == -1).map(|c| c.location).collect();
        assert_eq!(neg, vec![c(-2.0, 0.0)]);
        assert!(ct.corrections().iter().any(|c| c.winding == 1 && (c.location - 3.0).norm() < 1e-15));
    }

    #[test]
    fn pole_on_line_is_perturbed_away() {
        // Left pole z₂ + ħ − p lands exactly on the default line.
        let z = vec![c(0.0, 0.0), c(-0.5, 0.0)];
        let ct = build_contour(&params(z), PoleFamilies::Standard, 1e-10).unwrap();
        assert!(ct.x0() < -0.375 - 1e-3);
    }

    #[test]
    fn half_height_meets_tail_bound() {
        let ct = build_contour(&params(vec![c(0.0, 0.0)]), PoleFamilies::Standard, 1e-10).unwrap();
        // e^{−π·height/|p|} with height = T·|p|.
        assert!(ct.tail_bound().unwrap() <= 1e-10 * 1.0001);
    }

    #[test]
    fn gaussian_along_line() {
        let ct = Contour::line(c(0.3, 0.1), c(2.0, 0.0), -0.25, 6.0, Decay::Algebraic);
        let f = |t: Complex64| {
            let s = (t - c(0.3, 0.1)) / 2.0 - ct.x0();
            Ok((s * s).exp())
        };
        // s = iy: ∫ e^{−y²} i·p dy = i p √π.
        let est = integrate_line(&f, &ct, &QuadOptions::default()).unwrap();
        let expect = c(0.0, 2.0 * PI.sqrt());
        assert!((est.value - expect).norm() < 1e-12, "{}", est.value);
    }

    #[test]
    fn residues_of_simple_and_gamma_poles() {
        let a = c(0.2, -0.1);
        let r = residue_numeric(&|t: Complex64| Ok(1.0 / (t - a)), a, 0.3).unwrap();
        assert!((r.value - 1.0).norm() < 1e-14);
        let (z, hbar, p) = (c(0.1, 0.05), 1.0, 2.0);
        let g = |t: Complex64| Ok(gamma((t - z - hbar) / p));
        let r = residue_numeric(&g, z + hbar, 0.5).unwrap();
        assert!((r.value - p).norm() < 1e-12, "{}", r.value);
    }

    #[test]
    fn double_pole_is_flagged() {
        let a = c(0.0, 0.0);
        let err = residue_numeric(&|t: Complex64| Ok(1.0 / ((t - a) * (t - a))), a, 0.2).unwrap_err();
        assert_eq!(err, Error::NonSimplePole(a));
    }

    #[test]
    fn correction_matches_wiggled_path() {
        let ct = Contour::line(c(0.0, 0.0), c(2.0, 0.0), -0.25, 6.0, Decay::Algebraic);
        let pole = c(0.6, 0.4);
        let ct = ct.with_corrections(vec![PoleCorrection { location: pole, winding: 1 }], vec![]);
        let f = |t: Complex64| {
            let s = t / 2.0;
            Ok((s * s).exp() / (t - pole))
        };
        let opts = QuadOptions::default();
        let corrected = integrate_path(&f, &ct, &opts).unwrap();
        let y = |v: f64| c(-0.5, v);
        let path = [y(-20.0), y(0.0), c(1.2, 0.0), c(1.2, 0.8), y(0.8), y(20.0)];
        let wiggled = integrate_polyline(&f, &path, &opts).unwrap();
        assert!((corrected.value - wiggled.value).norm() < 1e-11 * wiggled.value.norm());
    }

    #[test]
    fn barnes_k0_at_i_pi() {
        let mu = c(0.0, PI);
        let rhs = barnes_reference(0, mu).unwrap();
        // Γ(−1/2) = −2√π and (−2)^{1/2} = √2·i under the branch.
        let expect = 2.0 * PI * (-2.0 * PI.sqrt()) * c(0.0, 2f64.sqrt());
        assert!((rhs - expect).norm() < 1e-12 * expect.norm());
        let lhs = barnes_integral(0, mu, &QuadOptions::default()).unwrap();
        assert!((lhs.value - rhs).norm() < 1e-10 * rhs.norm(), "{} vs {rhs}", lhs.value);
    }

    #[test]
    fn barnes_sweep_and_ode() {
        for mu in [c(0.0, PI / 2.0), c(0.0, PI), c(1.0, PI)] {
            for k in 1..=4 {
                let rhs = barnes_reference(k, mu).unwrap();
                let lhs = barnes_integral(k, mu, &QuadOptions::default()).unwrap();
                assert!((lhs.value - rhs).norm() <= 1e-8 * rhs.norm(), "k={k} μ={mu}: {} vs {rhs}", lhs.value);
                let h = 1e-4;
                let d = (barnes_reference(k, mu + h).unwrap() - barnes_reference(k, mu - h).unwrap()) / (2.0 * h);
                let e = mu.exp();
                let resid = 2.0 * (e - 1.0) * d - (e - 2.0 * k as f64) * rhs;
                assert!(resid.norm() < 1e-6 * rhs.norm());
            }
        }
    }

    #[test]
    fn barnes_rejects_real_mu() {
        assert!(matches!(barnes_integral(1, c(0.3, 0.0), &QuadOptions::default()), Err(Error::ConvergenceRegime(_))));
    }

    #[test]
    fn iterated_product_factorizes() {
        let ct = Contour::line(c(0.0, 0.0), c(1.0, 0.0), 0.0, 6.0, Decay::Algebraic);
        let f1 = |t: Complex64| Ok((t * t).exp());
        let f2 = |t: Complex64| Ok((t * t).exp() * (1.0 + t));
        let a = integrate_path(&f1, &ct, &QuadOptions::default()).unwrap().value;
        let b = integrate_path(&f2, &ct, &QuadOptions::default()).unwrap().value;
        let prod = |t: &[Complex64]| Ok(f1(t[0])? * f2(t[1])?);
        let both = integrate_iterated(&prod, &ct, 2, &QuadOptions::default()).unwrap().value;
        assert!((both - a * b).norm() < 1e-11 * (a * b).norm());
    }
}
