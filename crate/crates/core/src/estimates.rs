//! Ratio checks of the linear and nonlinear estimates used by the
//! existence argument. Each check reports lhs, the right-hand side with every
//! constant set to 1, and their ratio; boundedness is judged on family-wide
//! maxima.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nonlinearity::nonlinear_spectrum;
use crate::params::{Params, Sign};
use crate::picard::{free_evolution, group_symbol, picard_solve, PicardConfig};
use crate::profiles::Profile;
use crate::spaces::{lambda_of, trapezoid_weights, weighted_l2, xt_norm, Trajectory};
use crate::spectral::{
    check_boundary_mass, commuted_operator, dispersion_frequency, multiply_by_x, propagate, spectral_derivative,
    unit_phase, Field, Grid, Spectrum,
};

pub const DEFAULT_RATIO_CEILING: f64 = 100.0;

/// Phases are recomputed exactly every this many time steps and advanced by
/// multiplication in between.
const PHASE_RESEED: usize = 256;
/// Coefficients of ∂ₓ^jφ below this share of the peak do not set the time step.
const KATO_STEP_FLOOR: f64 = 1e-8;
const KATO_CHUNK: usize = 4096;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs_constant_free: f64,
    /// lhs/rhs; 0 when both vanish, ∞ when only the rhs does.
    pub ratio: f64,
    pub family_tag: String,
}

impl EstimateCheck {
    pub fn new(name: impl Into<String>, lhs: f64, rhs: f64, family_tag: impl Into<String>) -> Self {
        let ratio = if rhs > 0.0 {
            lhs / rhs
        } else if lhs == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        Self {
            name: name.into(),
            lhs,
            rhs_constant_free: rhs,
            ratio,
            family_tag: family_tag.into(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.lhs.is_finite() && self.rhs_constant_free.is_finite() && self.ratio.is_finite()
    }

    /// rhs = 0 forces lhs = 0.
    pub fn vacuity_holds(&self) -> bool {
        self.rhs_constant_free > 0.0 || self.lhs == 0.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KatoExponents {
    pub sigma: u32,
    /// (j − σ)/2j.
    pub alpha_exp: f64,
    /// 2j/(j + σ).
    pub p_exp: f64,
}

impl KatoExponents {
    pub fn new(j: u32, sigma: u32) -> Result<Self> {
        if j == 0 || sigma > j {
            return Err(Error::Domain(format!(
                "need j >= 1 and sigma in [0, j], got j = {j}, sigma = {sigma}"
            )));
        }
        Ok(Self {
            sigma,
            alpha_exp: (j - sigma) as f64 / (2 * j) as f64,
            p_exp: (2 * j) as f64 / (j + sigma) as f64,
        })
    }
}

/// Σ_n w_n |g(t_n, x_i)|² for each grid point.
fn time_l2_sq(fields: &[Field], weights: &[f64]) -> Vec<f64> {
    let n = fields[0].grid().n_points();
    let mut acc = vec![0.0; n];
    for (f, &w) in fields.iter().zip(weights) {
        for (a, v) in acc.iter_mut().zip(f.values()) {
            *a += w * v.norm_sqr();
        }
    }
    acc
}

/// ‖g‖_{L_x^p L_T²} from the per-point Σ w|g|²; p = ∞ takes the maximum.
fn lx_p_of(time_sq: &[f64], p: f64, dx: f64) -> f64 {
    if p.is_infinite() {
        return time_sq.iter().copied().fold(0.0, f64::max).sqrt();
    }
    let sum: f64 = time_sq.iter().map(|&s| s.sqrt().powf(p)).sum();
    (dx * sum).powf(1.0 / p)
}

/// ‖g‖_{L_x^p L_T²} for snapshots `fields` on `times`.
pub fn mixed_lx_lt2(fields: &[Field], times: &[f64], p: f64) -> f64 {
    let sq = time_l2_sq(fields, &trapezoid_weights(times));
    lx_p_of(&sq, p, fields[0].grid().dx())
}

/// ∫_{−T}^{T} |∂ₓ^jU_j(t)φ(x_i)|² dt at every grid point, by the trapezoid
/// rule on a step that resolves every frequency difference carrying weight.
pub fn kato_time_profile(phi: &Field, j: u32, t_window: f64) -> Result<Vec<f64>> {
    if !(t_window > 0.0 && t_window.is_finite()) {
        return Err(Error::Domain(format!("t_window must be positive, got {t_window}")));
    }
    let grid = *phi.grid();
    let n = grid.n_points();
    let d = phi.spectrum().derivative(j)?;
    let coeffs = d.coeffs().to_vec();
    let peak = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let omega: Vec<f64> = grid
        .wavenumbers()
        .iter()
        .map(|&xi| dispersion_frequency(xi, j))
        .collect();
    let omega_eff = coeffs
        .iter()
        .zip(&omega)
        .filter(|(c, _)| c.norm() > KATO_STEP_FLOOR * peak)
        .map(|(_, w)| w.abs())
        .fold(0.0, f64::max)
        .max(1.0);
    let steps = ((2.0 * t_window * 2.0 * omega_eff / std::f64::consts::PI).ceil() as usize).max(2);
    let dt = 2.0 * t_window / steps as f64;
    log::debug!("kato profile: {steps} time steps, dt = {dt:.3e}");

    let chunks: Vec<(usize, usize)> = (0..=steps)
        .step_by(KATO_CHUNK)
        .map(|a| (a, (a + KATO_CHUNK).min(steps + 1)))
        .collect();
    use rayon::prelude::*;
    let partial: Vec<Vec<f64>> = chunks
        .par_iter()
        .map(|&(a, b)| {
            let mut acc = vec![0.0; n];
            let mut phase = vec![Complex64::new(0.0, 0.0); n];
            let step: Vec<Complex64> = omega.iter().map(|&w| unit_phase(dt, w)).collect();
            let mut buf = vec![Complex64::new(0.0, 0.0); n];
            for k in a..b {
                let t = -t_window + k as f64 * dt;
                if (k - a) % PHASE_RESEED == 0 {
                    for (p, &w) in phase.iter_mut().zip(&omega) {
                        *p = unit_phase(t, w);
                    }
                } else {
                    for (p, s) in phase.iter_mut().zip(&step) {
                        *p *= s;
                    }
                }
                for ((o, c), p) in buf.iter_mut().zip(&coeffs).zip(&phase) {
                    *o = c * p;
                }
                crate::spectral::fft_inverse(&mut buf);
                let w = if k == 0 || k == steps { 0.5 * dt } else { dt };
                for (s, v) in acc.iter_mut().zip(&buf) {
                    *s += w * v.norm_sqr();
                }
            }
            acc
        })
        .collect();
    let mut total = vec![0.0; n];
    for p in &partial {
        for (t, v) in total.iter_mut().zip(p) {
            *t += v;
        }
    }
    Ok(total)
}

/// (max − min)/mean of a profile; 0 for the zero profile.
pub fn relative_spread(profile: &[f64]) -> f64 {
    let max = profile.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = profile.iter().copied().fold(f64::INFINITY, f64::min);
    let mean = profile.iter().sum::<f64>() / profile.len() as f64;
    if mean == 0.0 {
        0.0
    } else {
        (max - min) / mean
    }
}

/// ‖∂ₓ^jU_j(t)φ‖_{L_x^∞L_t²} over |t| ≤ t_window against ‖φ‖_{L²}.
pub fn check_kato_homogeneous(phi: &Field, j: u32, t_window: f64) -> Result<EstimateCheck> {
    let profile = kato_time_profile(phi, j, t_window)?;
    let lhs = profile.iter().copied().fold(0.0, f64::max).sqrt();
    Ok(EstimateCheck::new(
        "kato-homogeneous",
        lhs,
        phi.l2_norm(),
        format!("j={j} window={t_window}"),
    ))
}

/// w(t_n) = ∫_0^{t_n} U_j(t_n − s)f(s)ds by the trapezoid rule on the
/// trajectory's own times.
pub fn duhamel_integral(f: &Trajectory, j: u32) -> Result<Trajectory> {
    let grid = *f.grid();
    let times = f.times();
    let pulled: Vec<Vec<Complex64>> = f
        .snapshots()
        .iter()
        .zip(times)
        .map(|(s, &t)| {
            let back = group_symbol(&grid, -t, j);
            s.spectrum().coeffs().iter().zip(&back).map(|(c, e)| c * e).collect()
        })
        .collect();
    let n = grid.n_points();
    let mut sum = vec![Complex64::new(0.0, 0.0); n];
    let mut snaps = Vec::with_capacity(times.len());
    snaps.push(Field::zeros(grid).with_time(0.0));
    for k in 1..times.len() {
        let half_h = 0.5 * (times[k] - times[k - 1]);
        for ((s, a), b) in sum.iter_mut().zip(&pulled[k - 1]).zip(&pulled[k]) {
            *s += (a + b) * half_h;
        }
        let fwd = group_symbol(&grid, times[k], j);
        let coeffs = sum.iter().zip(&fwd).map(|(s, e)| s * e).collect();
        snaps.push(Spectrum::from_coeffs(grid, coeffs).to_field().with_time(times[k]));
    }
    Trajectory::new(*f.params(), times.to_vec(), snaps)
}

/// Energy form ‖∂ₓ^σw‖_{L_T^∞L_x²} and smoothing form
/// ‖∂ₓ^{j+σ}w‖_{L_x^∞L_T²} of the Duhamel integral of f, both against
/// T^{(j−σ)/2j}‖f‖_{L_x^pL_T²} with p = 2j/(j+σ).
pub fn check_kato_inhomogeneous(f: &Trajectory, j: u32, sigma: u32) -> Result<[EstimateCheck; 2]> {
    let exps = KatoExponents::new(j, sigma)?;
    let t_final = f.final_time();
    let w = duhamel_integral(f, j)?;
    let energy = w
        .snapshots()
        .iter()
        .map(|s| spectral_derivative(s, sigma).map(|d| d.l2_norm()))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let smooth: Vec<Field> = w
        .snapshots()
        .iter()
        .map(|s| spectral_derivative(s, j + sigma))
        .collect::<Result<_>>()?;
    let smoothing = mixed_lx_lt2(&smooth, w.times(), f64::INFINITY);
    let rhs = t_final.powf(exps.alpha_exp) * mixed_lx_lt2(f.snapshots(), f.times(), exps.p_exp);
    let tag = format!("j={j} sigma={sigma} T={t_final}");
    Ok([
        EstimateCheck::new("kato-inhomogeneous-energy", energy, rhs, tag.clone()),
        EstimateCheck::new("kato-inhomogeneous-smoothing", smoothing, rhs, tag),
    ])
}

fn integer_order(v: f64) -> Option<u32> {
    let r = v.round();
    ((v - r).abs() < 1e-9 && r >= 0.0).then_some(r as u32)
}

/// ‖⟨x⟩^{θμ}∂ₓ^{(1−θ)r}f‖ against ‖⟨x⟩^μf‖^θ‖∂ₓ^rf‖^{1−θ} plus the
/// lower-order terms ‖⟨x⟩^{β(μ−1)}∂ₓ^{(1−β)(r−1)}f‖ with (1−β)(r−1) a
/// positive integer.
pub fn check_interpolation(f: &Field, mu: f64, r: u32, theta: f64) -> Result<EstimateCheck> {
    if !(mu > 0.0) || r == 0 || !(0.0..=1.0).contains(&theta) {
        return Err(Error::Domain(format!(
            "need mu > 0, r >= 1 and theta in [0, 1], got mu = {mu}, r = {r}, theta = {theta}"
        )));
    }
    let order = integer_order((1.0 - theta) * r as f64).ok_or_else(|| {
        Error::Domain(format!(
            "(1 - theta)·r = {} is not an integer",
            (1.0 - theta) * r as f64
        ))
    })?;
    let spec = f.spectrum();
    let deriv = |o: u32| -> Result<Field> {
        if o == 0 {
            return Ok(f.clone());
        }
        Ok(spec.derivative(o)?.to_field())
    };
    // ‖⟨x⟩^p g‖ is weighted_l2(g, p).
    let lhs = weighted_l2(&deriv(order)?, theta * mu);
    let weighted = weighted_l2(f, mu);
    let top = weighted_l2(&deriv(r)?, 0.0);
    let head = weighted.powf(theta) * top.powf(1.0 - theta);
    let mut lower = 0.0;
    for i in 1..r {
        let beta = 1.0 - i as f64 / (r - 1) as f64;
        lower += weighted_l2(&deriv(i)?, beta * (mu - 1.0));
    }
    Ok(EstimateCheck::new(
        "interpolation",
        lhs,
        head + lower,
        format!("mu={mu} r={r} theta={theta}"),
    ))
}

/// ‖⟨x⟩^βU_j(t)f‖ against ⟨t⟩^β(‖⟨x⟩^βf‖ + ‖∂ₓ^{2j}f‖), and against the
/// proof form with ‖∂ₓ^{2jβ}f‖.
pub fn check_weighted_propagation(f: &Field, t: f64, beta: u32, j: u32) -> Result<[EstimateCheck; 2]> {
    if beta == 0 {
        return Err(Error::Domain("beta must be a positive integer".into()));
    }
    check_boundary_mass(f, "weighted propagation data")?;
    let evolved = propagate(f, t, j);
    check_boundary_mass(&evolved, "weighted propagation at time t")?;
    let b = beta as f64;
    let lhs = weighted_l2(&evolved, b);
    let growth = t.hypot(1.0).powf(b);
    let base = weighted_l2(f, b);
    let display = growth * (base + spectral_derivative(f, 2 * j)?.l2_norm());
    let proof = growth * (base + spectral_derivative(f, 2 * j * beta)?.l2_norm());
    let tag = format!("t={t} beta={beta} j={j}");
    Ok([
        EstimateCheck::new("weighted-propagation", lhs, display, tag.clone()),
        EstimateCheck::new("weighted-propagation-proof-form", lhs, proof, tag),
    ])
}

/// Relative L² residual of U_j(−t)xU_j(t)f against x·f + (2j+1)t∂ₓ^{2j}f.
pub fn check_commutator_identity(f: &Field, t: f64, j: u32) -> Result<f64> {
    check_boundary_mass(f, "commutator data")?;
    let forward = propagate(f, t, j);
    check_boundary_mass(&forward, "commutator data at time t")?;
    let composed = propagate(&multiply_by_x(&forward), -t, j);
    let direct = commuted_operator(f, t, j);
    let scale = direct.l2_norm();
    let diff = (&composed - &direct).l2_norm();
    Ok(if scale == 0.0 { diff } else { diff / scale })
}

/// |g_k(u) − g_k(v)| and (|u|^{α−k−1} + |v|^{α−k−1})|u − v| for
/// g_k(z) = |z|^{α−2k}z^k.
pub fn difference_bound_terms(u: Complex64, v: Complex64, alpha: f64, k: u32) -> (f64, f64) {
    if u == v {
        return (0.0, 0.0);
    }
    let g = |z: Complex64| z.norm().powf(alpha - 2.0 * k as f64) * z.powu(k);
    let lhs = (g(u) - g(v)).norm();
    let e = alpha - k as f64 - 1.0;
    let rhs = (u.norm().powf(e) + v.norm().powf(e)) * (u - v).norm();
    (lhs, rhs)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonlinearChecks {
    pub checks: Vec<EstimateCheck>,
    /// Set when the floor ⟨x⟩^m|u| ≥ λ/2 fails and the checks were skipped.
    pub skipped: Option<String>,
}

/// Trajectories of |u|^α∂ₓ^{2j−1}u and its derivatives ∂ₓ^γ, γ in `orders`.
struct NonlinearTerms {
    /// derivs[γ][n]
    derivs: Vec<Vec<Field>>,
}

fn nonlinear_terms(traj: &Trajectory, orders: &[u32]) -> Result<NonlinearTerms> {
    // Norms are insensitive to the sign of F.
    let params = Params::new(traj.params().j(), traj.params().alpha(), Sign::Plus, traj.params().s())?;
    let spectra: Vec<Spectrum> = traj
        .snapshots()
        .iter()
        .map(|u| nonlinear_spectrum(&u.spectrum(), &params))
        .collect();
    let max = orders.iter().copied().max().unwrap_or(0) as usize;
    let mut derivs = vec![Vec::new(); max + 1];
    for &o in orders {
        derivs[o as usize] = spectra
            .iter()
            .map(|s| Ok(s.derivative(o)?.to_field()))
            .collect::<Result<_>>()?;
    }
    Ok(NonlinearTerms { derivs })
}

fn floor_violation(traj: &Trajectory, lambda: f64, what: &str) -> Option<String> {
    let m = traj.params().m();
    let min = traj
        .snapshots()
        .iter()
        .map(|s| lambda_of(s, m))
        .fold(f64::INFINITY, f64::min);
    (min < 0.5 * lambda).then(|| {
        format!(
            "{what}: min <x>^m|u| = {min:.6e} is below lambda/2 = {:.6e}",
            0.5 * lambda
        )
    })
}

fn lt1_weighted_l2(fields: &[Field], weights: &[f64], p: f64) -> f64 {
    fields.iter().zip(weights).map(|(f, w)| w * weighted_l2(f, p)).sum()
}

fn field_differences(a: &[Field], b: &[Field]) -> Vec<Field> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Lemma-level displays for |u|^α∂ₓ^{2j−1}u on u and, with `v`, for the
/// difference of the nonlinearities of u and v.
pub fn check_nonlinear_estimates(
    u: &Trajectory,
    v: Option<&Trajectory>,
    lambda: f64,
    q: f64,
) -> Result<NonlinearChecks> {
    if !(q > 1.0 && q <= 2.0) {
        return Err(Error::Domain(format!("q must lie in (1, 2], got {q}")));
    }
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!("lambda must be positive, got {lambda}")));
    }
    if let Some(v) = v {
        u.check_compatible(v)?;
    }
    let skip = floor_violation(u, lambda, "u").or_else(|| v.and_then(|v| floor_violation(v, lambda, "v")));
    if let Some(note) = skip {
        return Ok(NonlinearChecks {
            checks: Vec::new(),
            skipped: Some(note),
        });
    }

    let params = *u.params();
    let (j, s, m, alpha) = (params.j(), params.s(), params.m() as f64, params.alpha());
    let k = s - j + 1;
    let t_final = u.final_time();
    let weights = trapezoid_weights(u.times());
    let dx = u.grid().dx();
    let x = xt_norm(u).x_t_norm;
    let mut orders: Vec<u32> = (0..=2 * j + 2).collect();
    orders.push(k);
    let nu = nonlinear_terms(u, &orders)?;
    let tag = |extra: &str| format!("T={t_final} lambda={lambda:.6e} q={q}{extra}");
    let mut checks = Vec::new();

    let energy = lt1_weighted_l2(&nu.derivs[0], &weights, 0.0);
    checks.push(EstimateCheck::new(
        "nonlinear-energy",
        energy,
        t_final * x.powf(alpha + 1.0),
        tag(""),
    ));

    let smoothing = lx_p_of(&time_l2_sq(&nu.derivs[k as usize], &weights), q, dx);
    let root_t = t_final.sqrt();
    let rhs = x.powf(alpha + 1.0)
        + root_t * lambda.powf(alpha - 1.0) * x * x
        + root_t * lambda.powf(alpha - k as f64) * x.powi(k as i32 + 1);
    checks.push(EstimateCheck::new("nonlinear-smoothing", smoothing, rhs, tag("")));

    for g in 1..=2 * j + 2 {
        let lhs = lt1_weighted_l2(&nu.derivs[g as usize], &weights, m);
        let gf = g as f64;
        let rhs = t_final * lambda.powf(alpha - 1.0) * x * x + t_final * lambda.powf(alpha - gf) * x.powf(gf + 1.0);
        checks.push(EstimateCheck::new(
            "nonlinear-weighted",
            lhs,
            rhs,
            tag(&format!(" gamma={g}")),
        ));
    }

    if let Some(v) = v {
        let nv = nonlinear_terms(v, &orders)?;
        let d = xt_norm(&u.difference(v)?).x_t_norm;

        let diff0 = field_differences(&nu.derivs[0], &nv.derivs[0]);
        let lhs = lt1_weighted_l2(&diff0, &weights, 0.0);
        let rhs = t_final * x.powf(alpha) * d + t_final * x * d;
        checks.push(EstimateCheck::new("difference-energy", lhs, rhs, tag("")));

        let diffk = field_differences(&nu.derivs[k as usize], &nv.derivs[k as usize]);
        let lhs = lx_p_of(&time_l2_sq(&diffk, &weights), q, dx);
        let kf = k as f64;
        let rhs = x.powf(alpha) * d
            + lambda.powf(alpha - 1.0) * x * d
            + root_t * (lambda.powf(alpha - kf - 1.0) + lambda.powf(alpha - kf)) * (x.powf(kf + 1.0) + x.powf(kf)) * d
            + root_t * (lambda.powf(alpha - 2.0) + lambda.powf(alpha - 1.0)) * (x * x + x) * d;
        checks.push(EstimateCheck::new("difference-smoothing", lhs, rhs, tag("")));

        for g in 1..=2 * j + 2 {
            let diff = field_differences(&nu.derivs[g as usize], &nv.derivs[g as usize]);
            let lhs = lt1_weighted_l2(&diff, &weights, m);
            let gf = g as f64;
            let rhs = t_final * lambda.powf(alpha - 1.0) * x * d
                + t_final
                    * (lambda.powf(alpha - gf - 1.0) + lambda.powf(alpha - gf))
                    * (x.powf(gf + 1.0) + x.powf(gf))
                    * d
                + t_final * lambda.powf(alpha - 2.0) * x * x * d;
            checks.push(EstimateCheck::new(
                "difference-weighted",
                lhs,
                rhs,
                tag(&format!(" gamma={g}")),
            ));
        }

        for kk in 0..=2 {
            let mut worst = EstimateCheck::new("difference-pointwise", 0.0, 0.0, format!("k={kk}"));
            for (a, b) in u.snapshots().iter().zip(v.snapshots()) {
                for (&p, &r) in a.values().iter().zip(b.values()) {
                    let (l, rr) = difference_bound_terms(p, r, alpha, kk);
                    let c = EstimateCheck::new("difference-pointwise", l, rr, format!("k={kk}"));
                    if !(c.ratio <= worst.ratio) {
                        worst = c;
                    }
                }
            }
            checks.push(worst);
        }
    }
    Ok(NonlinearChecks { checks, skipped: None })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilySummary {
    pub name: String,
    pub checks: Vec<EstimateCheck>,
    pub max_ratio: f64,
    pub min_ratio: f64,
    /// max/min over the family; `None` when some ratio is 0.
    pub spread: Option<f64>,
}

impl FamilySummary {
    pub fn new(name: impl Into<String>, checks: Vec<EstimateCheck>) -> Self {
        let max_ratio = checks.iter().map(|c| c.ratio).fold(f64::NEG_INFINITY, f64::max);
        let min_ratio = checks.iter().map(|c| c.ratio).fold(f64::INFINITY, f64::min);
        let spread = (min_ratio > 0.0).then(|| max_ratio / min_ratio);
        Self {
            name: name.into(),
            checks,
            max_ratio,
            min_ratio,
            spread,
        }
    }

    pub fn all_finite(&self) -> bool {
        self.checks.iter().all(|c| c.is_finite() && c.vacuity_holds())
    }
}

/// A case whose two sides must agree exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EndpointCase {
    pub name: String,
    pub detail: String,
    pub exact: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityResidual {
    pub tag: String,
    pub residual: f64,
    pub limit: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatteryReport {
    pub ceiling: f64,
    pub families: Vec<FamilySummary>,
    pub endpoints: Vec<EndpointCase>,
    pub identity: Vec<IdentityResidual>,
    /// Relative x-spread of the windowed smoothing integral, per Gaussian width.
    pub kato_spread: Vec<(f64, f64)>,
    pub notes: Vec<String>,
}

impl BatteryReport {
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        for f in &self.families {
            if !f.all_finite() {
                out.push(format!("{}: non-finite ratio or vacuity violation", f.name));
            }
            if !(f.max_ratio <= self.ceiling) {
                out.push(format!(
                    "{}: max ratio {:.4e} above {}",
                    f.name, f.max_ratio, self.ceiling
                ));
            }
        }
        for e in self.endpoints.iter().filter(|e| !e.exact) {
            out.push(format!("endpoint {}: {}", e.name, e.detail));
        }
        for r in self.identity.iter().filter(|r| !(r.residual <= r.limit)) {
            out.push(format!(
                "identity {}: residual {:.3e} above {:.0e}",
                r.tag, r.residual, r.limit
            ));
        }
        out
    }

    pub fn green(&self) -> bool {
        self.failures().is_empty()
    }
}

/// Initial data and time grid for the nonlinear part of the battery.
#[derive(Clone, Debug, PartialEq)]
pub struct BatteryInput {
    pub u0: Field,
    pub params: Params,
    pub t_final: f64,
    pub n_time_steps: usize,
}

impl BatteryInput {
    /// 0.2⟨x⟩_L^{-3} with j = 1, α = 1/2, s = 10 on a small box.
    pub fn standard() -> Result<Self> {
        let params = Params::new(1, 0.5, Sign::Plus, 10)?;
        let grid = Grid::new(1024, 32.0)?;
        let u0 = Profile::PeriodicBracket {
            amplitude: 0.2,
            decay: 3.0,
            perturbation: 0.0,
        }
        .sample(grid)
        .auto_banded();
        Ok(Self {
            u0,
            params,
            t_final: 0.01,
            n_time_steps: 32,
        })
    }
}

fn gaussian(grid: Grid, width: f64) -> Field {
    Field::from_real_fn(grid, |x| (-(x / width).powi(2)).exp()).auto_banded()
}

/// The fixed battery of linear families plus the nonlinear displays on the
/// Picard solution of `input` (u) and its free evolution (v).
pub fn standard_battery(input: &BatteryInput, ceiling: f64) -> Result<BatteryReport> {
    let mut families = Vec::new();
    let mut endpoints = Vec::new();
    let mut identity = Vec::new();
    let mut notes = Vec::new();

    let kato_grid = Grid::new(1024, 32.0)?;
    let mut kato = Vec::new();
    let mut kato_spread = Vec::new();
    for h in [0.5, 1.0, 2.0, 4.0] {
        let phi = gaussian(kato_grid, h);
        let profile = kato_time_profile(&phi, 1, 50.0)?;
        kato_spread.push((h, relative_spread(&profile)));
        let lhs = profile.iter().copied().fold(0.0, f64::max).sqrt();
        kato.push(EstimateCheck::new(
            "kato-homogeneous",
            lhs,
            phi.l2_norm(),
            format!("gaussian h={h} j=1 window=50"),
        ));
    }
    families.push(FamilySummary::new("kato-homogeneous", kato));
    let zero = check_kato_homogeneous(&Field::zeros(kato_grid), 1, 50.0)?;
    endpoints.push(EndpointCase {
        name: "kato-homogeneous zero data".into(),
        detail: format!("lhs = {:e}", zero.lhs),
        exact: zero.lhs == 0.0,
    });

    let small = Grid::new(512, 16.0)?;
    let envelope = gaussian(small, 1.0);
    let mut energy = vec![Vec::new(); 2];
    let mut smoothing = vec![Vec::new(); 2];
    for t_final in [0.01, 0.04, 0.16] {
        let times = Trajectory::uniform_times(t_final, 64);
        let snaps = times.iter().map(|&t| (&envelope * (1.0 + t)).with_time(t)).collect();
        let f = Trajectory::new(input.params, times, snaps)?;
        for sigma in 0..=1u32 {
            let [e, s] = check_kato_inhomogeneous(&f, 1, sigma)?;
            energy[sigma as usize].push(e);
            smoothing[sigma as usize].push(s);
        }
    }
    for sigma in 0..=1 {
        families.push(FamilySummary::new(
            format!("kato-inhomogeneous-energy sigma={sigma}"),
            energy[sigma].clone(),
        ));
        families.push(FamilySummary::new(
            format!("kato-inhomogeneous-smoothing sigma={sigma}"),
            smoothing[sigma].clone(),
        ));
    }
    let zero_f = Trajectory::constant(input.params, &Field::zeros(small), Trajectory::uniform_times(0.04, 16))?;
    let [e, s] = check_kato_inhomogeneous(&zero_f, 1, 0)?;
    endpoints.push(EndpointCase {
        name: "kato-inhomogeneous zero forcing".into(),
        detail: format!("lhs = {:e}, {:e}", e.lhs, s.lhs),
        exact: e.lhs == 0.0 && s.lhs == 0.0,
    });

    let mut interp = Vec::new();
    for h in [0.5, 1.0, 2.0] {
        let f = gaussian(small, h);
        for theta in [0.25, 0.5, 0.75] {
            let mut c = check_interpolation(&f, 3.0, 4, theta)?;
            c.family_tag = format!("gaussian h={h} {}", c.family_tag);
            interp.push(c);
        }
        let spec = f.spectrum();
        let top = weighted_l2(&spec.derivative(4)?.to_field(), 0.0);
        let at0 = check_interpolation(&f, 3.0, 4, 0.0)?;
        endpoints.push(EndpointCase {
            name: format!("interpolation theta=0 h={h}"),
            detail: format!("lhs = {:e}, leading rhs term = {top:e}, ratio = {}", at0.lhs, at0.ratio),
            exact: at0.lhs == top && at0.ratio <= 1.0,
        });
        let at1 = check_interpolation(&f, 3.0, 4, 1.0)?;
        let weighted = weighted_l2(&f, 3.0);
        endpoints.push(EndpointCase {
            name: format!("interpolation theta=1 h={h}"),
            detail: format!(
                "lhs = {:e}, leading rhs term = {weighted:e}, ratio = {}",
                at1.lhs, at1.ratio
            ),
            exact: at1.lhs == weighted && at1.ratio <= 1.0,
        });
    }
    families.push(FamilySummary::new("interpolation", interp));

    let wide = Grid::new(2048, 64.0)?;
    let mut display = Vec::new();
    let mut proof = Vec::new();
    let f = gaussian(wide, 2.0);
    for t in [0.01, 0.1, 0.5] {
        let [d, p] = check_weighted_propagation(&f, t, 1, 1)?;
        display.push(d);
        proof.push(p);
    }
    let narrow = gaussian(wide, 0.25);
    let [d, p] = check_weighted_propagation(&narrow, 0.005, 2, 1)?;
    if !(p.rhs_constant_free > d.rhs_constant_free) {
        notes.push("narrow Gaussian: proof-form rhs did not dominate the display form".into());
    }
    display.push(d);
    proof.push(p);
    families.push(FamilySummary::new("weighted-propagation", display));
    families.push(FamilySummary::new("weighted-propagation-proof-form", proof));
    for beta in [1, 2] {
        let [d, _] = check_weighted_propagation(&f, 0.0, beta, 1)?;
        let base = weighted_l2(&f, beta as f64);
        endpoints.push(EndpointCase {
            name: format!("weighted-propagation t=0 beta={beta}"),
            detail: format!("lhs = {:e}, weighted data = {base:e}, ratio = {}", d.lhs, d.ratio),
            exact: d.lhs == base && d.ratio <= 1.0,
        });
    }

    let fine = Grid::new(8192, 64.0)?;
    // j = 2 disperses fast enough that width-1 data reaches the box edge by
    // |t| = 0.01; width 2 keeps the tail inside.
    for (width, t, j, limit) in [
        (1.0, 0.0, 1, 1e-13),
        (1.0, 0.005, 1, 1e-6),
        (1.0, -0.01, 1, 1e-6),
        (1.0, 0.001, 2, 1e-5),
        (2.0, -0.01, 2, 1e-5),
        (2.0, 0.01, 2, 1e-5),
    ] {
        identity.push(IdentityResidual {
            tag: format!("gaussian width={width} t={t} j={j}"),
            residual: check_commutator_identity(&gaussian(fine, width), t, j)?,
            limit,
        });
    }

    let config = PicardConfig::new(input.t_final, input.n_time_steps);
    let (u, report) = picard_solve(&input.u0, &input.params, &config)?;
    if !report.converged {
        notes.push(format!(
            "Picard iteration for the nonlinear checks stopped unconverged at residual {:.3e}",
            report.final_residual
        ));
    }
    let v = free_evolution(&input.u0, &input.params, config.times())?;
    let lambda = report.data.lambda;
    let j = input.params.j() as f64;
    let mut qs = vec![2.0 * j / (2.0 * j - 1.0), 2.0];
    qs.dedup();
    let mut by_name: Vec<(String, Vec<EstimateCheck>)> = Vec::new();
    for &q in &qs {
        let out = check_nonlinear_estimates(&u, Some(&v), lambda, q)?;
        if let Some(note) = out.skipped {
            notes.push(format!("nonlinear checks skipped at q = {q}: {note}"));
        }
        for c in out.checks {
            match by_name.iter_mut().find(|(n, _)| *n == c.name) {
                Some((_, list)) => list.push(c),
                None => by_name.push((c.name.clone(), vec![c])),
            }
        }
        let same = check_nonlinear_estimates(&u, Some(&u), lambda, q)?;
        let nonzero: Vec<&EstimateCheck> = same
            .checks
            .iter()
            .filter(|c| c.name.starts_with("difference") && c.lhs != 0.0)
            .collect();
        endpoints.push(EndpointCase {
            name: format!("identical arguments q={q}"),
            detail: format!("{} difference checks with nonzero lhs", nonzero.len()),
            exact: same.skipped.is_none() && nonzero.is_empty(),
        });
    }
    for (name, list) in by_name {
        families.push(FamilySummary::new(name, list));
    }

    Ok(BatteryReport {
        ceiling,
        families,
        endpoints,
        identity,
        kato_spread,
        notes,
    })
}

/// Windowed ∫|∂ₓ^jU_j(t)φ|²dt per mode pair, used by tests as an exact
/// reference for the time quadrature.
#[cfg(test)]
fn kato_profile_by_pairs(phi: &Field, j: u32, t_window: f64) -> Vec<f64> {
    let grid = *phi.grid();
    let d = phi.spectrum().derivative(j).unwrap();
    let modes: Vec<(f64, f64, Complex64)> = d
        .coeffs()
        .iter()
        .enumerate()
        .filter(|(_, c)| c.norm() > 0.0)
        .map(|(k, &c)| {
            let xi = grid.wavenumber(k);
            (xi, dispersion_frequency(xi, j), c)
        })
        .collect();
    (0..grid.n_points())
        .map(|i| {
            // FFT-order coefficients are relative to the left end of the box.
            let x = grid.x(i) + grid.half_width();
            let a: Vec<Complex64> = modes
                .iter()
                .map(|&(xi, _, c)| c * Complex64::from_polar(1.0, xi * x))
                .collect();
            let mut total = 0.0;
            for (p, &(_, wp, _)) in modes.iter().enumerate() {
                for (q, &(_, wq, _)) in modes.iter().enumerate() {
                    let nu = wp - wq;
                    let kernel = if nu == 0.0 {
                        2.0 * t_window
                    } else {
                        2.0 * (nu * t_window).sin() / nu
                    };
                    total += (a[p] * a[q].conj()).re * kernel;
                }
            }
            total
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn params() -> Params {
        Params::new(1, 0.5, Sign::Plus, 10).unwrap()
    }

    #[test]
    fn ratio_conventions() {
        assert_eq!(EstimateCheck::new("a", 0.0, 0.0, "").ratio, 0.0);
        assert!(EstimateCheck::new("a", 1.0, 0.0, "").ratio.is_infinite());
        assert!(!EstimateCheck::new("a", 1.0, 0.0, "").vacuity_holds());
        assert_eq!(EstimateCheck::new("a", 1.0, 4.0, "").ratio, 0.25);
    }

    #[test]
    fn kato_exponent_examples() {
        let e = KatoExponents::new(1, 0).unwrap();
        assert_eq!((e.alpha_exp, e.p_exp), (0.5, 2.0));
        let e = KatoExponents::new(1, 1).unwrap();
        assert_eq!((e.alpha_exp, e.p_exp), (0.0, 1.0));
        let e = KatoExponents::new(3, 1).unwrap();
        assert_relative_eq!(e.alpha_exp, 1.0 / 3.0);
        assert_relative_eq!(e.p_exp, 1.5);
        assert!(KatoExponents::new(1, 2).is_err());
    }

    #[test]
    fn kato_quadrature_matches_pair_sum() {
        let g = Grid::new(256, 16.0).unwrap();
        let phi = gaussian(g, 1.0);
        let quad = kato_time_profile(&phi, 1, 5.0).unwrap();
        let exact = kato_profile_by_pairs(&phi, 1, 5.0);
        let scale = exact.iter().copied().fold(0.0, f64::max);
        for (a, b) in quad.iter().zip(&exact) {
            assert!((a - b).abs() <= 1e-5 * scale, "{a} vs {b}");
        }
    }

    #[test]
    fn kato_zero_data() {
        let g = Grid::new(256, 16.0).unwrap();
        let c = check_kato_homogeneous(&Field::zeros(g), 1, 50.0).unwrap();
        assert_eq!((c.lhs, c.ratio), (0.0, 0.0));
    }

    #[test]
    fn kato_window_is_nearly_x_independent() {
        let g = Grid::new(1024, 32.0).unwrap();
        let profile = kato_time_profile(&gaussian(g, 1.0), 1, 50.0).unwrap();
        let spread = relative_spread(&profile);
        assert!(spread <= 0.05, "{spread}");
    }

    #[test]
    fn kato_width_family_on_the_box() {
        // On a periodic box the window average tends to 2T·Σ|ξĉ|², so the
        // ratio falls with the width instead of settling at the line value.
        let g = Grid::new(1024, 32.0).unwrap();
        let ratios: Vec<f64> = [0.5, 1.0, 2.0, 4.0]
            .iter()
            .map(|&h| check_kato_homogeneous(&gaussian(g, h), 1, 50.0).unwrap().ratio)
            .collect();
        assert!(ratios.windows(2).all(|w| w[0] > w[1]), "{ratios:?}");
        assert!(ratios.iter().all(|r| r.is_finite() && *r <= DEFAULT_RATIO_CEILING));
    }

    #[test]
    fn inhomogeneous_time_sweep() {
        let g = Grid::new(512, 16.0).unwrap();
        let envelope = gaussian(g, 1.0);
        let mut ratios = vec![Vec::new(); 4];
        for t_final in [0.01, 0.04, 0.16] {
            let times = Trajectory::uniform_times(t_final, 64);
            let snaps = times.iter().map(|&t| (&envelope * (1.0 + t)).with_time(t)).collect();
            let f = Trajectory::new(params(), times, snaps).unwrap();
            for sigma in 0..=1u32 {
                let [e, s] = check_kato_inhomogeneous(&f, 1, sigma).unwrap();
                ratios[2 * sigma as usize].push(e.ratio);
                ratios[2 * sigma as usize + 1].push(s.ratio);
            }
        }
        let spread =
            |r: &[f64]| r.iter().copied().fold(0.0, f64::max) / r.iter().copied().fold(f64::INFINITY, f64::min);
        // The σ = 0 energy form is sharp for slowly varying forcing.
        assert!(spread(&ratios[0]) <= 3.0, "{:?}", ratios[0]);
        // The other forms gain powers of T at small T: bounded, growing in T.
        for r in &ratios[1..] {
            assert!(r.windows(2).all(|w| w[0] < w[1]), "{r:?}");
            assert!(r.iter().all(|&x| x <= 1.0), "{r:?}");
        }
    }

    #[test]
    fn inhomogeneous_zero_forcing() {
        let g = Grid::new(128, 8.0).unwrap();
        let f = Trajectory::constant(params(), &Field::zeros(g), Trajectory::uniform_times(0.1, 8)).unwrap();
        for sigma in 0..=1 {
            let [e, s] = check_kato_inhomogeneous(&f, 1, sigma).unwrap();
            assert_eq!((e.lhs, s.lhs, e.ratio, s.ratio), (0.0, 0.0, 0.0, 0.0));
        }
    }

    #[test]
    fn duhamel_integral_of_constant_forcing_without_dispersion() {
        // For a constant-in-space forcing only ξ = 0 is present, so w(t) = t·f.
        let g = Grid::new(64, 4.0).unwrap();
        let c = Field::from_real_fn(g, |_| 2.0);
        let times = Trajectory::uniform_times(1.0, 10);
        let f = Trajectory::constant(params(), &c, times).unwrap();
        let w = duhamel_integral(&f, 1).unwrap();
        for (s, &t) in w.snapshots().iter().zip(w.times()) {
            for v in s.values() {
                assert!((v.re - 2.0 * t).abs() < 1e-13 && v.im.abs() < 1e-13);
            }
        }
    }

    #[test]
    fn mixed_norm_of_separable_field() {
        // g(t, x) = e^{-x²}: ‖g‖_{L_x^pL_T²} = √T·‖e^{-x²}‖_{L^p}.
        let g = Grid::new(512, 16.0).unwrap();
        let f = Field::from_real_fn(g, |x| (-x * x).exp());
        let times = Trajectory::uniform_times(0.5, 8);
        let fields = vec![f; times.len()];
        let pi = std::f64::consts::PI;
        assert_relative_eq!(
            mixed_lx_lt2(&fields, &times, 1.0),
            0.5f64.sqrt() * pi.sqrt(),
            max_relative = 1e-12
        );
        assert_relative_eq!(
            mixed_lx_lt2(&fields, &times, 2.0),
            0.5f64.sqrt() * (pi / 2.0).sqrt().sqrt(),
            max_relative = 1e-12
        );
        assert_relative_eq!(
            mixed_lx_lt2(&fields, &times, f64::INFINITY),
            0.5f64.sqrt(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn interpolation_endpoints_collapse() {
        let g = Grid::new(512, 16.0).unwrap();
        let f = gaussian(g, 1.0);
        let at0 = check_interpolation(&f, 3.0, 4, 0.0).unwrap();
        let top = spectral_derivative(&f, 4).unwrap().l2_norm();
        assert_relative_eq!(at0.lhs, top, max_relative = 1e-15);
        assert!(at0.ratio <= 1.0);
        let at1 = check_interpolation(&f, 3.0, 4, 1.0).unwrap();
        assert_eq!(at1.lhs, weighted_l2(&f, 3.0));
        assert!(at1.ratio <= 1.0);
    }

    #[test]
    fn interpolation_with_r_one_has_no_lower_terms() {
        let g = Grid::new(512, 16.0).unwrap();
        let f = gaussian(g, 1.0);
        let c = check_interpolation(&f, 2.0, 1, 0.0).unwrap();
        assert_eq!(c.ratio, 1.0);
    }

    #[test]
    fn interpolation_rejects_fractional_order() {
        let g = Grid::new(128, 8.0).unwrap();
        let f = gaussian(g, 1.0);
        assert!(matches!(check_interpolation(&f, 3.0, 4, 0.3), Err(Error::Domain(_))));
    }

    #[test]
    fn interpolation_family_is_bounded() {
        let g = Grid::new(512, 16.0).unwrap();
        let mut worst: f64 = 0.0;
        for h in [0.5, 1.0, 2.0] {
            let f = gaussian(g, h);
            for theta in [0.25, 0.5, 0.75] {
                worst = worst.max(check_interpolation(&f, 3.0, 4, theta).unwrap().ratio);
            }
        }
        assert!(worst <= 10.0, "{worst}");
    }

    #[test]
    fn weighted_propagation_at_time_zero() {
        let g = Grid::new(1024, 32.0).unwrap();
        let f = gaussian(g, 1.0);
        for beta in 1..=3 {
            let [d, p] = check_weighted_propagation(&f, 0.0, beta, 1).unwrap();
            assert_eq!(d.lhs, weighted_l2(&f, beta as f64));
            assert!(d.ratio <= 1.0 && p.ratio <= 1.0);
        }
    }

    #[test]
    fn narrow_data_favours_the_display_form() {
        let g = Grid::new(2048, 64.0).unwrap();
        let f = gaussian(g, 0.25);
        let [d, p] = check_weighted_propagation(&f, 0.005, 2, 1).unwrap();
        assert!(p.rhs_constant_free > d.rhs_constant_free);
        assert!(d.is_finite() && p.is_finite());
    }

    #[test]
    fn weighted_propagation_detects_wraparound() {
        let g = Grid::new(256, 8.0).unwrap();
        let f = gaussian(g, 0.5);
        assert!(matches!(
            check_weighted_propagation(&f, 2.0, 1, 1),
            Err(Error::Boundary(_))
        ));
    }

    #[test]
    fn commutator_identity_residuals() {
        let g = Grid::new(8192, 64.0).unwrap();
        let f = gaussian(g, 1.0);
        assert!(check_commutator_identity(&f, 0.0, 1).unwrap() <= 1e-13);
        assert!(check_commutator_identity(&f, 0.005, 1).unwrap() <= 1e-6);
        assert!(check_commutator_identity(&f, 0.001, 2).unwrap() <= 1e-5);
    }

    #[test]
    fn pointwise_difference_example() {
        let (l, r) = difference_bound_terms(Complex64::new(1.0, 0.0), Complex64::new(2.0, 0.0), 0.5, 0);
        // Frozen from the scalar evaluation √2 − 1 and 1 + 1/√2.
        assert_relative_eq!(l, 0.414_213_562_373_095_1, max_relative = 1e-15);
        assert_relative_eq!(r, 1.707_106_781_186_547_5, max_relative = 1e-15);
        assert_relative_eq!(l / r, 0.242_640_687_119_285_2, max_relative = 1e-14);
    }

    #[test]
    fn floor_violation_skips() {
        let g = Grid::new(128, 8.0).unwrap();
        let u0 = gaussian(g, 1.0);
        let u = Trajectory::constant(params(), &u0, Trajectory::uniform_times(0.01, 4)).unwrap();
        let out = check_nonlinear_estimates(&u, None, 0.1, 2.0).unwrap();
        assert!(out.checks.is_empty());
        assert!(out.skipped.is_some());
    }

    #[test]
    fn nonlinear_checks_on_a_small_picard_solution() {
        let params = params();
        let grid = Grid::new(512, 16.0).unwrap();
        let u0 = Profile::PeriodicBracket {
            amplitude: 0.2,
            decay: 3.0,
            perturbation: 0.0,
        }
        .sample(grid)
        .auto_banded();
        let lambda = lambda_of(&u0, params.m());
        let times = Trajectory::uniform_times(0.005, 8);
        let v = free_evolution(&u0, &params, times.clone()).unwrap();
        let u = crate::picard::duhamel_apply(&v, &u0, &params, &crate::nonlinearity::DegeneracyGuard::off()).unwrap();
        let out = check_nonlinear_estimates(&u, Some(&v), lambda, 2.0).unwrap();
        assert!(out.skipped.is_none());
        assert_eq!(out.checks.len(), 2 + 4 + 2 + 4 + 3);
        for c in &out.checks {
            assert!(c.is_finite() && c.vacuity_holds(), "{c:?}");
            assert!(c.ratio <= DEFAULT_RATIO_CEILING, "{c:?}");
        }
        let same = check_nonlinear_estimates(&u, Some(&u), lambda, 2.0).unwrap();
        for c in same.checks.iter().filter(|c| c.name.starts_with("difference")) {
            assert_eq!((c.lhs, c.ratio), (0.0, 0.0), "{c:?}");
        }
    }

    proptest! {
        #[test]
        fn pointwise_difference_bound_is_scale_free(
            u in 0.05f64..5.0,
            v in 0.05f64..5.0,
            phase in 0.0f64..std::f64::consts::TAU,
            scale in 0.1f64..10.0,
            alpha in 0.05f64..0.95,
            k in 0u32..3,
        ) {
            // Both sides are homogeneous of degree α − k, so the ratio is
            // invariant under (u, v) → (cu, cv).
            let a = Complex64::new(u, 0.0);
            let b = Complex64::from_polar(v, phase);
            let (l1, r1) = difference_bound_terms(a, b, alpha, k);
            let (l2, r2) = difference_bound_terms(a * scale, b * scale, alpha, k);
            prop_assume!(r1 > 0.0);
            prop_assert!((l1 / r1 - l2 / r2).abs() <= 1e-9 * (1.0 + l1 / r1));
            prop_assert!(l1 / r1 <= 4.0);
        }

        #[test]
        fn interpolation_ratio_is_amplitude_free(amp in 0.01f64..100.0, theta_idx in 0usize..5) {
            let g = Grid::new(256, 16.0).unwrap();
            let f = gaussian(g, 1.0);
            let theta = theta_idx as f64 / 4.0;
            let a = check_interpolation(&f, 3.0, 4, theta).unwrap();
            let b = check_interpolation(&(&f * amp), 3.0, 4, theta).unwrap();
            prop_assert!((a.ratio - b.ratio).abs() <= 1e-12 * a.ratio);
        }
    }
}
