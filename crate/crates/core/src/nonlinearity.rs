//! F(u) = ±|u|^α ∂ₓ^{2j−1}u.
//!
//! The product is formed on a 2× zero-padded grid and truncated back.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::Params;
use crate::spaces::lambda_of;
use crate::spectral::{fft_forward, fft_inverse, Field, Spectrum};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GuardPolicy {
    Error,
    Warn,
    Off,
}

/// Floor on min ⟨x⟩^m|u| below which the nonlinearity leaves the
/// non-degenerate regime.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegeneracyGuard {
    pub lambda_floor: f64,
    pub policy: GuardPolicy,
}

impl DegeneracyGuard {
    pub fn off() -> Self {
        Self {
            lambda_floor: 0.0,
            policy: GuardPolicy::Off,
        }
    }

    /// Warn at λ/2·0.999.
    pub fn for_lambda(lambda: f64) -> Self {
        Self {
            lambda_floor: 0.5 * lambda * 0.999,
            policy: GuardPolicy::Warn,
        }
    }

    pub fn with_policy(mut self, policy: GuardPolicy) -> Self {
        self.policy = policy;
        self
    }

    /// `Ok(true)` when the floor is violated under a non-error policy.
    pub fn inspect(&self, u: &Field, m: u32) -> Result<bool> {
        if self.policy == GuardPolicy::Off {
            return Ok(false);
        }
        let min_weighted = lambda_of(u, m);
        if min_weighted >= self.lambda_floor {
            return Ok(false);
        }
        match self.policy {
            GuardPolicy::Error => Err(Error::Degenerate {
                min_weighted,
                floor: self.lambda_floor,
            }),
            _ => Ok(true),
        }
    }
}

/// Places n-grid coefficients into a 2n-grid buffer; the unpaired Nyquist
/// coefficient is split evenly between ±n/2.
fn pad(spec: &Spectrum) -> Vec<Complex64> {
    let grid = spec.grid();
    let n = grid.n_points();
    let mut out = vec![Complex64::new(0.0, 0.0); 2 * n];
    for (k, &c) in spec.coeffs().iter().enumerate() {
        let mode = grid.mode_number(k);
        if mode == -(n as i64) / 2 {
            out[n / 2] += 0.5 * c;
            out[2 * n - n / 2] += 0.5 * c;
        } else {
            out[mode.rem_euclid(2 * n as i64) as usize] = c;
        }
    }
    out
}

/// Inverse of [`pad`] for normalized 2n-grid coefficients; drops the Nyquist
/// pair and everything beyond it.
fn truncate(fine: &[Complex64], template: &Spectrum) -> Spectrum {
    let grid = *template.grid();
    let n = grid.n_points();
    let coeffs = (0..n)
        .map(|k| {
            let mode = grid.mode_number(k);
            if mode == -(n as i64) / 2 {
                Complex64::new(0.0, 0.0)
            } else {
                fine[mode.rem_euclid(2 * n as i64) as usize]
            }
        })
        .collect();
    Spectrum::from_coeffs(grid, coeffs)
}

/// Spectrum of sign·|u|^α∂ₓ^{2j−1}u, with `u_spec` already band-masked.
pub(crate) fn nonlinear_spectrum(u_spec: &Spectrum, params: &Params) -> Spectrum {
    let n = u_spec.grid().n_points();
    let du = u_spec
        .derivative(params.nonlinear_order())
        .expect("2j-1 is within the derivative order limit");
    let mut u_fine = pad(u_spec);
    let mut du_fine = pad(&du);
    fft_inverse(&mut u_fine);
    fft_inverse(&mut du_fine);
    let alpha = params.alpha();
    let scale = params.sign().value() / (2 * n) as f64;
    let mut prod: Vec<Complex64> = u_fine
        .iter()
        .zip(&du_fine)
        .map(|(u, d)| {
            let r = u.norm();
            let w = if r == 0.0 { 0.0 } else { r.powf(alpha) };
            d * (w * scale)
        })
        .collect();
    fft_forward(&mut prod);
    truncate(&prod, u_spec)
}

/// Applies the guard, then returns F(u) and whether the floor was grazed.
pub fn evaluate_f_checked(u: &Field, params: &Params, guard: &DegeneracyGuard) -> Result<(Field, bool)> {
    let grazed = guard.inspect(u, params.m())?;
    let out = nonlinear_spectrum(&u.spectrum(), params).to_field();
    let out = match u.time() {
        Some(t) => out.with_time(t),
        None => out,
    };
    Ok((out, grazed))
}

pub fn evaluate_f(u: &Field, params: &Params, guard: &DegeneracyGuard) -> Result<Field> {
    let (out, grazed) = evaluate_f_checked(u, params, guard)?;
    if grazed && guard.policy == GuardPolicy::Warn {
        log::warn!(
            "min <x>^m|u| = {:.3e} fell below the floor {:.3e}",
            lambda_of(u, params.m()),
            guard.lambda_floor
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Sign;
    use crate::spectral::{bracket, Grid};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn params(sign: Sign) -> Params {
        Params::new(1, 0.5, sign, 10).unwrap()
    }

    fn rel(a: &Field, b: &Field) -> f64 {
        (a - b).l2_norm() / b.l2_norm()
    }

    fn smooth_field(grid: Grid, shift: f64, phase: f64) -> Field {
        Field::from_fn(grid, |x| {
            Complex64::from_polar(0.3 * (-(x - shift).powi(2) / 2.0).exp() + 0.05, phase + 0.2 * x.sin())
        })
    }

    #[test]
    fn constant_gives_zero() {
        let g = Grid::new(64, 8.0).unwrap();
        let u = Field::from_real_fn(g, |_| 0.7);
        let f = evaluate_f(&u, &params(Sign::Plus), &DegeneracyGuard::off()).unwrap();
        assert!(f.sup_norm() < 1e-15);
    }

    #[test]
    fn unimodular_plane_wave() {
        let g = Grid::new(64, std::f64::consts::PI).unwrap();
        let u = Field::from_fn(g, |x| Complex64::from_polar(1.0, x));
        for sign in [Sign::Plus, Sign::Minus] {
            let f = evaluate_f(&u, &params(sign), &DegeneracyGuard::off()).unwrap();
            let expected = u.scale(Complex64::new(0.0, sign.value()));
            assert!(rel(&f, &expected) < 1e-13);
        }
    }

    #[test]
    fn matches_finite_difference_oracle() {
        let (n, l) = (8192, 64.0);
        let g = Grid::new(n, l).unwrap();
        let p = params(Sign::Plus);
        let u = |x: f64| bracket(x).powi(-3);
        let u_field = Field::from_real_fn(g, u);
        let f = evaluate_f(&u_field, &p, &DegeneracyGuard::off()).unwrap();
        // Richardson-extrapolated central differences at h and h/2.
        let h = 1e-2;
        let d = |x: f64, h: f64| (u(x + h) - u(x - h)) / (2.0 * h);
        let oracle = Field::from_real_fn(g, |x| {
            let rich = (4.0 * d(x, h / 2.0) - d(x, h)) / 3.0;
            u(x).abs().sqrt() * rich
        });
        let err = rel(&f, &oracle);
        assert!(err < 1e-6, "{err:.3e}");
    }

    #[test]
    fn guard_policies() {
        let g = Grid::new(128, 8.0).unwrap();
        let p = params(Sign::Plus);
        let u = Field::from_real_fn(g, |x| 0.1 * bracket(x).powi(-3));
        let strict = DegeneracyGuard {
            lambda_floor: 0.2,
            policy: GuardPolicy::Error,
        };
        assert!(matches!(evaluate_f(&u, &p, &strict), Err(Error::Degenerate { .. })));
        let warn = strict.with_policy(GuardPolicy::Warn);
        assert!(evaluate_f_checked(&u, &p, &warn).unwrap().1);
        let ok = DegeneracyGuard::for_lambda(0.1).with_policy(GuardPolicy::Error);
        assert!(!evaluate_f_checked(&u, &p, &ok).unwrap().1);
    }

    #[test]
    fn not_additive() {
        let g = Grid::new(256, 16.0).unwrap();
        let p = params(Sign::Minus);
        let guard = DegeneracyGuard::off();
        let u = smooth_field(g, -1.0, 0.3);
        let v = smooth_field(g, 2.0, -1.1);
        let sum = evaluate_f(&(&u + &v), &p, &guard).unwrap();
        let parts = &evaluate_f(&u, &p, &guard).unwrap() + &evaluate_f(&v, &p, &guard).unwrap();
        assert!((&sum - &parts).l2_norm() > 1e-3 * sum.l2_norm());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn phase_covariance(theta in 0.0f64..std::f64::consts::TAU, shift in -2.0f64..2.0) {
            let g = Grid::new(256, 16.0).unwrap();
            let p = params(Sign::Plus);
            let guard = DegeneracyGuard::off();
            let u = smooth_field(g, shift, 0.0);
            let c = Complex64::from_polar(1.0, theta);
            let lhs = evaluate_f(&u.scale(c), &p, &guard).unwrap();
            let rhs = evaluate_f(&u, &p, &guard).unwrap().scale(c);
            prop_assert!(rel(&lhs, &rhs) < 1e-12);
        }

        #[test]
        fn positive_scaling(r in 0.01f64..50.0, shift in -2.0f64..2.0, alpha in 0.05f64..0.95) {
            let g = Grid::new(256, 16.0).unwrap();
            let p = Params::minimal(1, alpha, Sign::Minus).unwrap();
            let guard = DegeneracyGuard::off();
            let u = smooth_field(g, shift, 0.4);
            let lhs = evaluate_f(&(&u * r), &p, &guard).unwrap();
            let rhs = &evaluate_f(&u, &p, &guard).unwrap() * r.powf(1.0 + alpha);
            prop_assert!(rel(&lhs, &rhs) < 1e-12);
        }
    }

    #[test]
    fn scaling_example_is_exact_for_alpha_half() {
        let g = Grid::new(128, 8.0).unwrap();
        let p = params(Sign::Plus);
        let u = smooth_field(g, 0.0, 0.0);
        let a = evaluate_f(&(&u * 4.0), &p, &DegeneracyGuard::off()).unwrap();
        let b = evaluate_f(&u, &p, &DegeneracyGuard::off()).unwrap();
        assert_relative_eq!(a.l2_norm(), 8.0 * b.l2_norm(), max_relative = 1e-13);
    }
}
