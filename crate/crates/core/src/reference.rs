//! Fourth-order exponential time differencing Runge–Kutta (Cox–Matthews form)
//! in Fourier space. The dispersive part is integrated exactly; the
//! φ-function coefficients are averaged over a circle around z when |z| is
//! small, where the closed forms cancel catastrophically.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::nonlinearity::nonlinear_spectrum;
use crate::params::Params;
use crate::spaces::Trajectory;
use crate::spectral::{dispersion_frequency, unit_phase, Field, Spectrum};

/// Norm growth factor treated as blow-up.
pub const BLOW_UP_FACTOR: f64 = 1e6;

const CONTOUR_POINTS: usize = 32;
const CONTOUR_SWITCH: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReferenceOptions {
    /// Internal steps per output interval.
    pub substeps: usize,
    /// When false, F ≡ 0.
    pub nonlinear: bool,
}

impl Default for ReferenceOptions {
    fn default() -> Self {
        Self {
            substeps: 1,
            nonlinear: true,
        }
    }
}

/// Per-mode ETDRK4 coefficients for step h.
struct Coefficients {
    e: Complex64,
    e2: Complex64,
    q: Complex64,
    f1: Complex64,
    f2: Complex64,
    f3: Complex64,
}

fn phi_terms(z: Complex64) -> [Complex64; 4] {
    let ez = z.exp();
    let ez2 = (0.5 * z).exp();
    let z3 = z * z * z;
    [
        (ez2 - 1.0) / z,
        (-4.0 - z + ez * (4.0 - 3.0 * z + z * z)) / z3,
        (2.0 + z + ez * (z - 2.0)) / z3,
        (-4.0 - 3.0 * z - z * z + ez * (4.0 - z)) / z3,
    ]
}

fn coefficients(omega: f64, h: f64) -> Coefficients {
    // z = L·h with L = iω.
    let z = Complex64::new(0.0, omega * h);
    let terms = if z.norm() < CONTOUR_SWITCH {
        let mut acc = [Complex64::new(0.0, 0.0); 4];
        for k in 0..CONTOUR_POINTS {
            let theta = std::f64::consts::PI * (2.0 * k as f64 + 1.0) / CONTOUR_POINTS as f64;
            let r = z + Complex64::from_polar(1.0, theta);
            for (a, t) in acc.iter_mut().zip(phi_terms(r)) {
                *a += t;
            }
        }
        acc.map(|a| a / CONTOUR_POINTS as f64)
    } else {
        phi_terms(z)
    };
    Coefficients {
        e: unit_phase(h, omega),
        e2: unit_phase(0.5 * h, omega),
        q: terms[0] * h,
        f1: terms[1] * h,
        f2: terms[2] * h,
        f3: terms[3] * h,
    }
}

struct Stepper<'a> {
    params: &'a Params,
    coeffs: Vec<Coefficients>,
    template: Spectrum,
    nonlinear: bool,
}

impl Stepper<'_> {
    /// N(v) = −F̂(v).
    fn n(&self, v: &[Complex64]) -> Vec<Complex64> {
        if !self.nonlinear {
            return vec![Complex64::new(0.0, 0.0); v.len()];
        }
        let spec = Spectrum::from_coeffs(*self.template.grid(), v.to_vec());
        nonlinear_spectrum(&spec, self.params)
            .into_coeffs()
            .into_iter()
            .map(|c| -c)
            .collect()
    }

    fn step(&self, v: &[Complex64]) -> Vec<Complex64> {
        let c = &self.coeffs;
        let nv = self.n(v);
        let a: Vec<Complex64> = (0..v.len()).map(|k| c[k].e2 * v[k] + c[k].q * nv[k]).collect();
        let na = self.n(&a);
        let b: Vec<Complex64> = (0..v.len()).map(|k| c[k].e2 * v[k] + c[k].q * na[k]).collect();
        let nb = self.n(&b);
        let cc: Vec<Complex64> = (0..v.len())
            .map(|k| c[k].e2 * a[k] + c[k].q * (2.0 * nb[k] - nv[k]))
            .collect();
        let nc = self.n(&cc);
        (0..v.len())
            .map(|k| c[k].e * v[k] + nv[k] * c[k].f1 + 2.0 * (na[k] + nb[k]) * c[k].f2 + nc[k] * c[k].f3)
            .collect()
    }
}

/// Integrates ∂ₜu + ∂ₓ^{2j+1}u + F(u) = 0 on the uniform grid of
/// `n_steps` intervals of [0, T].
pub fn reference_solve(u0: &Field, params: &Params, t_final: f64, n_steps: usize) -> Result<Trajectory> {
    reference_solve_with(u0, params, t_final, n_steps, ReferenceOptions::default())
}

pub fn reference_solve_with(
    u0: &Field,
    params: &Params,
    t_final: f64,
    n_steps: usize,
    options: ReferenceOptions,
) -> Result<Trajectory> {
    if !(t_final > 0.0 && t_final.is_finite()) || n_steps == 0 || options.substeps == 0 {
        return Err(Error::Domain(format!(
            "need T > 0 and positive step counts (T = {t_final}, n_steps = {n_steps}, substeps = {})",
            options.substeps
        )));
    }
    let grid = *u0.grid();
    let times = Trajectory::uniform_times(t_final, n_steps);
    let h = t_final / (n_steps * options.substeps) as f64;
    let coeffs = grid
        .wavenumbers()
        .into_par_iter()
        .map(|xi| coefficients(dispersion_frequency(xi, params.j()), h))
        .collect();
    let template = u0.spectrum();
    let stepper = Stepper {
        params,
        coeffs,
        template: template.clone(),
        nonlinear: options.nonlinear,
    };
    let initial = template.l2_norm_sqr().sqrt();
    let limit = BLOW_UP_FACTOR * initial.max(f64::MIN_POSITIVE);

    let mut v = template.into_coeffs();
    let mut snaps = Vec::with_capacity(n_steps + 1);
    snaps.push(u0.clone());
    for (k, &t) in times.iter().enumerate().skip(1) {
        for _ in 0..options.substeps {
            v = stepper.step(&v);
        }
        let spec = Spectrum::from_coeffs(grid, v.clone());
        let norm = spec.l2_norm_sqr().sqrt();
        if !(norm <= limit) {
            return Err(Error::BlowUp { time: t, norm, limit });
        }
        snaps.push(spec.to_field());
        log::trace!("reference step {k}: |u| = {norm:.6e}");
    }
    Trajectory::new(*params, times, snaps)
}
