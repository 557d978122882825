//! Three browser operations on small grids: the free evolution of a
//! Gaussian, the lifespan bound, and a short Picard run.

use gkdv_core::lifespan::lifespan_lower_bound;
use gkdv_core::picard::{picard_solve, PicardConfig};
use gkdv_core::profiles::Profile;
use gkdv_core::spectral::propagate;
use gkdv_core::{Field, Grid, Params, Sign};
use serde_json::json;
use wasm_bindgen::prelude::*;

pub const DEMO_POINTS: usize = 512;
pub const DEMO_HALF_WIDTH: f64 = 16.0;

fn demo_grid() -> Grid {
    Grid::new(DEMO_POINTS, DEMO_HALF_WIDTH).expect("demo grid is valid")
}

fn sign_of(plus: bool) -> Sign {
    if plus {
        Sign::Plus
    } else {
        Sign::Minus
    }
}

/// Sample positions of the demo grid.
#[wasm_bindgen]
pub fn grid_points() -> Vec<f64> {
    let g = demo_grid();
    (0..g.n_points()).map(|i| g.x(i)).collect()
}

/// |U_j(t)φ| for φ = e^{-(x/w)²}, or an empty vector for invalid input.
#[wasm_bindgen]
pub fn free_evolution(j: u32, width: f64, t: f64) -> Vec<f64> {
    if !(1..=4).contains(&j) || !(width > 0.0 && width.is_finite()) || !t.is_finite() {
        return Vec::new();
    }
    let phi = Field::from_real_fn(demo_grid(), |x| (-(x / width).powi(2)).exp()).auto_banded();
    propagate(&phi, t, j).values().iter().map(|v| v.norm()).collect()
}

/// Both lifespan forms as JSON, or `{"error": …}`.
#[wasm_bindgen]
pub fn lifespan(delta: f64, lambda: f64, j: u32, alpha: f64, c: f64) -> String {
    let result = Params::minimal(j, alpha, Sign::Plus).and_then(|p| {
        let r = lifespan_lower_bound(delta, lambda, &p, c)?;
        Ok(json!({
            "s": p.s(),
            "m": p.m(),
            "kappa": r.kappa,
            "t_statement": r.t_statement,
            "t_proof": r.t_proof,
            "log10_t_statement": r.log10_t_statement,
            "log10_t_proof": r.log10_t_proof,
        }))
    });
    match result {
        Ok(v) => v.to_string(),
        Err(e) => json!({ "error": e.to_string() }).to_string(),
    }
}

/// Picard iteration from a⟨x⟩_L^{-3} with j = 1, α = 1/2 on the demo grid;
/// distances, ratios and verdicts as JSON.
#[wasm_bindgen]
pub fn picard(amplitude: f64, t_final: f64, plus: bool) -> String {
    let run = || {
        let params = Params::new(1, 0.5, sign_of(plus), 10)?;
        let u0 = Profile::PeriodicBracket {
            amplitude,
            decay: 3.0,
            perturbation: 0.0,
        };
        u0.validate()?;
        let u0 = u0.sample(demo_grid()).auto_banded();
        let mut config = PicardConfig::new(t_final, 16);
        config.max_iterations = 20;
        let (_, report) = picard_solve(&u0, &params, &config)?;
        Ok::<_, gkdv_core::Error>(json!({
            "converged": report.converged,
            "iterations": report.iterations,
            "distances": report.distances,
            "ratios": report.ratios,
            "delta": report.data.delta,
            "lambda": report.data.lambda,
            "in_ball": report.membership.in_ball,
            "proximity_holds": report.membership.proximity.all_hold(),
        }))
    };
    match run() {
        Ok(v) => v.to_string(),
        Err(e) => json!({ "error": e.to_string() }).to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_evolution_keeps_the_l2_norm() {
        let dx = 2.0 * DEMO_HALF_WIDTH / DEMO_POINTS as f64;
        let mass = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>() * dx;
        let a = free_evolution(1, 1.0, 0.0);
        let b = free_evolution(1, 1.0, 0.3);
        assert_eq!(a.len(), DEMO_POINTS);
        assert!((mass(&a) - mass(&b)).abs() < 1e-12 * mass(&a));
        assert!(free_evolution(0, 1.0, 0.1).is_empty());
        assert_eq!(grid_points().len(), DEMO_POINTS);
    }

    #[test]
    fn lifespan_reports_kappa_or_error() {
        let v: serde_json::Value = serde_json::from_str(&lifespan(1.0, 0.5, 1, 0.5, 1.0)).unwrap();
        assert_eq!(v["kappa"], 11.0);
        assert_eq!(v["s"], 10);
        let e: serde_json::Value = serde_json::from_str(&lifespan(0.1, 0.5, 1, 0.5, 1.0)).unwrap();
        assert!(e["error"].is_string());
    }

    #[test]
    fn short_picard_run_converges() {
        let v: serde_json::Value = serde_json::from_str(&picard(0.2, 0.005, true)).unwrap();
        assert_eq!(v["converged"], true, "{v}");
        let e: serde_json::Value = serde_json::from_str(&picard(0.0, 0.005, true)).unwrap();
        assert!(e["error"].is_string());
    }
}
