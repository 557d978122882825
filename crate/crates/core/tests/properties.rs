use gkdv_core::picard::{picard_solve, PicardConfig};
use gkdv_core::profiles::Profile;
use gkdv_core::spaces::{delta_of, xt_distance};
use gkdv_core::spectral::propagate;
use gkdv_core::{Field, Grid, Params, Sign};
use num_complex::Complex64;
use proptest::prelude::*;

fn bracket_data(grid: Grid, perturbation: f64) -> Field {
    Profile::PeriodicBracket {
        amplitude: 0.2,
        decay: 3.0,
        perturbation,
    }
    .sample(grid)
    .rebanded(grid)
}

#[test]
fn solutions_depend_lipschitz_on_data() {
    let params = Params::new(1, 0.5, Sign::Plus, 10).unwrap();
    let raw = Grid::new(512, 32.0).unwrap();
    let band = bracket_data(raw, 0.0).auto_banded().grid().band_limit().unwrap();
    let grid = raw.with_band_limit(band).unwrap();
    let u0 = bracket_data(grid, 0.0);
    let delta = delta_of(&u0, &params).unwrap().delta;
    let mut config = PicardConfig::new(0.01, 16);
    config.tolerance = 1e-6 * delta;
    let (u, _) = picard_solve(&u0, &params, &config).unwrap();

    let mut constants = Vec::new();
    for eps in [1e-2, 1e-3, 1e-4] {
        let v0 = bracket_data(grid, eps);
        let d = (&u0 - &v0).l2_norm();
        let (v, report) = picard_solve(&v0, &params, &config).unwrap();
        assert!(report.converged);
        let k = xt_distance(&u, &v).unwrap() / (delta * d);
        assert!(k.is_finite() && k > 0.0, "eps {eps}: K = {k}");
        constants.push(k);
    }
    let max = constants.iter().copied().fold(0.0, f64::max);
    let min = constants.iter().copied().fold(f64::INFINITY, f64::min);
    // Linear response: K settles as the perturbation shrinks.
    assert!(max / min < 1.5, "{constants:?}");
}

fn complex_field(values: &[(f64, f64)]) -> Field {
    let grid = Grid::new(values.len(), 8.0).unwrap();
    Field::new(grid, values.iter().map(|&(a, b)| Complex64::new(a, b)).collect()).unwrap()
}

proptest! {
    #[test]
    fn propagation_is_an_isometry(
        values in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 64),
        t in -10.0f64..10.0,
        j in 1u32..=3,
    ) {
        let f = complex_field(&values);
        let norm = f.l2_norm();
        prop_assume!(norm > 1e-3);
        let moved = propagate(&f, t, j);
        prop_assert!((moved.l2_norm() - norm).abs() <= 1e-13 * norm);
    }

    #[test]
    fn propagation_obeys_the_group_law(
        values in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 64),
        a in -4096i32..4096,
        b in -4096i32..4096,
        j in 1u32..=3,
    ) {
        // Multiples of 2^-10, so t + s is exact.
        let (t, s) = (a as f64 / 1024.0, b as f64 / 1024.0);
        let f = complex_field(&values);
        let norm = f.l2_norm();
        prop_assume!(norm > 1e-3);
        let composed = propagate(&propagate(&f, t, j), s, j);
        let direct = propagate(&f, t + s, j);
        prop_assert!((&composed - &direct).l2_norm() <= 1e-13 * norm);
        let back = propagate(&propagate(&f, t, j), -t, j);
        prop_assert!((&back - &f).l2_norm() <= 1e-13 * norm);
    }
}
