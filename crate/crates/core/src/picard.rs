//! Duhamel map Φ(u)(t) = U_j(t)u0 − ∫_0^t U_j(t−s)F(u(s)) ds, its fixed-point
//! iteration, membership checks and the closed-form smallness conditions.
//!
//! The composite trapezoid Q_n = Σ_m w_{nm} U_j(t_n − s_m)F̂_m is evaluated as
//! E_n·S_n with E_n = U_j(t_n) and S_n = S_{n−1} + ½h_n(G_{n−1} + G_n),
//! G_m = U_j(−s_m)F̂_m. The prefix sum runs in a fixed order, so the result does
//! not depend on the thread schedule.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nonlinearity::{nonlinear_spectrum, DegeneracyGuard, GuardPolicy};
use crate::params::Params;
use crate::spaces::{delta_of, xt_norm, DataQuantities, NormBundle, Trajectory};
use crate::spectral::{bracket, dispersion_frequency, unit_phase, Field, Grid, Spectrum};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BallRadius {
    /// M = 2·c1·δ.
    Auto {
        c1: f64,
    },
    Fixed {
        value: f64,
    },
}

impl BallRadius {
    pub fn resolve(&self, delta: f64) -> f64 {
        match *self {
            BallRadius::Auto { c1 } => 2.0 * c1 * delta,
            BallRadius::Fixed { value } => value,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PicardConfig {
    pub t_final: f64,
    pub n_time_steps: usize,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub ball_radius: BallRadius,
    pub c_constant: f64,
    pub guard_policy: GuardPolicy,
    /// When false, F ≡ 0 and Φ is the free evolution.
    pub nonlinear: bool,
}

impl PicardConfig {
    pub fn new(t_final: f64, n_time_steps: usize) -> Self {
        Self {
            t_final,
            n_time_steps,
            max_iterations: 30,
            tolerance: 1e-3,
            ball_radius: BallRadius::Auto { c1: 1.0 },
            c_constant: 1.0,
            guard_policy: GuardPolicy::Warn,
            nonlinear: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(Error::config(
                "time.T",
                format!("must be positive, got {}", self.t_final),
            ));
        }
        if self.n_time_steps < 4 {
            return Err(Error::config(
                "time.n_time_steps",
                format!("must be at least 4, got {}", self.n_time_steps),
            ));
        }
        if self.max_iterations == 0 {
            return Err(Error::config("solver.max_iterations", "must be positive"));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::config("solver.tolerance", "must be positive"));
        }
        if !(self.c_constant >= 0.0) {
            return Err(Error::config("solver.c_constant", "must be nonnegative"));
        }
        let radius_ok = match self.ball_radius {
            BallRadius::Auto { c1 } => c1 > 0.0,
            BallRadius::Fixed { value } => value > 0.0,
        };
        if !radius_ok {
            return Err(Error::config("solver.ball_radius", "must be positive"));
        }
        Ok(())
    }

    pub fn times(&self) -> Vec<f64> {
        Trajectory::uniform_times(self.t_final, self.n_time_steps)
    }
}

/// U_j(t) as a table of multipliers on a grid.
pub(crate) fn group_symbol(grid: &Grid, t: f64, j: u32) -> Vec<Complex64> {
    grid.wavenumbers()
        .into_iter()
        .map(|xi| unit_phase(t, dispersion_frequency(xi, j)))
        .collect()
}

/// Accumulated S_n of the factored trapezoid together with the grazes of the
/// degeneracy floor seen while forming F.
struct Accumulated {
    sums: Vec<Vec<Complex64>>,
    grazes: usize,
}

struct Duhamel<'a> {
    params: &'a Params,
    grid: Grid,
    times: Vec<f64>,
    forward: Vec<Vec<Complex64>>,
    u0_spec: Spectrum,
    guard: DegeneracyGuard,
    nonlinear: bool,
}

impl<'a> Duhamel<'a> {
    fn new(u0: &Field, params: &'a Params, times: Vec<f64>, guard: DegeneracyGuard, nonlinear: bool) -> Self {
        let grid = *u0.grid();
        let forward = times.par_iter().map(|&t| group_symbol(&grid, t, params.j())).collect();
        Self {
            params,
            grid,
            times,
            forward,
            u0_spec: u0.spectrum(),
            guard,
            nonlinear,
        }
    }

    fn accumulate(&self, traj: &Trajectory) -> Result<Accumulated> {
        let n = self.grid.n_points();
        let zero = vec![Complex64::new(0.0, 0.0); n];
        if !self.nonlinear {
            return Ok(Accumulated {
                sums: vec![zero; self.times.len()],
                grazes: 0,
            });
        }
        let m = self.params.m();
        let pulled: Vec<(Vec<Complex64>, bool)> = traj
            .snapshots()
            .par_iter()
            .zip(&self.forward)
            .map(|(u, e)| {
                let grazed = self.guard.inspect(u, m)?;
                let f = nonlinear_spectrum(&u.spectrum(), self.params);
                let g = f.coeffs().iter().zip(e).map(|(c, e)| c * e.conj()).collect();
                Ok((g, grazed))
            })
            .collect::<Result<_>>()?;
        let mut sums = Vec::with_capacity(self.times.len());
        sums.push(zero);
        for k in 1..self.times.len() {
            let half_h = 0.5 * (self.times[k] - self.times[k - 1]);
            let prev = &sums[k - 1];
            let next: Vec<Complex64> = prev
                .iter()
                .zip(&pulled[k - 1].0)
                .zip(&pulled[k].0)
                .map(|((s, a), b)| s + (a + b) * half_h)
                .collect();
            sums.push(next);
        }
        Ok(Accumulated {
            sums,
            grazes: pulled.iter().filter(|p| p.1).count(),
        })
    }

    /// Φ(u) snapshots E_n(û0 − S_n); snapshot 0 is `u0` itself.
    fn assemble(&self, u0: &Field, acc: &Accumulated) -> Result<Trajectory> {
        let snaps: Vec<Field> = (0..self.times.len())
            .into_par_iter()
            .map(|k| {
                if k == 0 {
                    return u0.clone();
                }
                let coeffs = self
                    .u0_spec
                    .coeffs()
                    .iter()
                    .zip(&acc.sums[k])
                    .zip(&self.forward[k])
                    .map(|((c, s), e)| (c - s) * e)
                    .collect();
                Spectrum::from_coeffs(self.grid, coeffs).to_field()
            })
            .collect();
        Trajectory::new(*self.params, self.times.clone(), snaps)
    }

    /// E_n(S_n(a) − S_n(b)): the difference of the two assembled
    /// trajectories, formed without the free part.
    fn difference(&self, a: &Accumulated, b: &Accumulated) -> Result<Trajectory> {
        let snaps: Vec<Field> = (0..self.times.len())
            .into_par_iter()
            .map(|k| {
                let coeffs = a.sums[k]
                    .iter()
                    .zip(&b.sums[k])
                    .zip(&self.forward[k])
                    .map(|((x, y), e)| (x - y) * e)
                    .collect();
                Spectrum::from_coeffs(self.grid, coeffs).to_field()
            })
            .collect();
        Trajectory::new(*self.params, self.times.clone(), snaps)
    }
}

/// The free evolution U_j(t_n)u0 on `times`.
pub fn free_evolution(u0: &Field, params: &Params, times: Vec<f64>) -> Result<Trajectory> {
    let d = Duhamel::new(u0, params, times, DegeneracyGuard::off(), false);
    let acc = d.accumulate(&Trajectory::constant(*params, u0, d.times.clone())?)?;
    d.assemble(u0, &acc)
}

/// One application of Φ on the time grid of `traj`.
pub fn duhamel_apply(traj: &Trajectory, u0: &Field, params: &Params, guard: &DegeneracyGuard) -> Result<Trajectory> {
    duhamel_apply_with(traj, u0, params, guard, true)
}

/// [`duhamel_apply`] with the nonlinearity optionally switched off.
pub fn duhamel_apply_with(
    traj: &Trajectory,
    u0: &Field,
    params: &Params,
    guard: &DegeneracyGuard,
    nonlinear: bool,
) -> Result<Trajectory> {
    if traj.grid() != u0.grid() {
        return Err(Error::IncompatibleTrajectories("u0 and trajectory grids differ".into()));
    }
    let d = Duhamel::new(u0, params, traj.times().to_vec(), *guard, nonlinear);
    let acc = d.accumulate(traj)?;
    d.assemble(u0, &acc)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProximityReport {
    /// sup_t ‖⟨x⟩^m(u(t) − u0)‖_{L^∞}.
    pub sup: f64,
    pub within_half_lambda: bool,
    /// min over (t, x) of ⟨x⟩^m|u|, to compare with λ/2.
    pub min_weighted: f64,
    pub lower_bound_holds: bool,
    /// max over (t, x) of ⟨x⟩^m(|u| − |u0|), to compare with λ/2.
    pub max_excess: f64,
    pub upper_bound_holds: bool,
}

impl ProximityReport {
    pub fn all_hold(&self) -> bool {
        self.within_half_lambda && self.lower_bound_holds && self.upper_bound_holds
    }
}

/// sup_t ‖⟨x⟩^m(u(t) − u0)‖_{L^∞} ≤ λ/2 and the two-sided consequence
/// λ/2 ≤ ⟨x⟩^m|u| ≤ ⟨x⟩^m|u0| + λ/2.
pub fn check_proximity(traj: &Trajectory, u0: &Field, m: u32, lambda: f64) -> Result<ProximityReport> {
    if traj.grid() != u0.grid() {
        return Err(Error::IncompatibleTrajectories("u0 and trajectory grids differ".into()));
    }
    let grid = traj.grid();
    let weights: Vec<f64> = (0..grid.n_points())
        .map(|i| bracket(grid.x(i)).powi(m as i32))
        .collect();
    let mut sup: f64 = 0.0;
    let mut min_weighted = f64::INFINITY;
    let mut max_excess = f64::NEG_INFINITY;
    for snap in traj.snapshots() {
        for ((u, v), w) in snap.values().iter().zip(u0.values()).zip(&weights) {
            sup = sup.max(w * (u - v).norm());
            min_weighted = min_weighted.min(w * u.norm());
            max_excess = max_excess.max(w * (u.norm() - v.norm()));
        }
    }
    let half = 0.5 * lambda;
    Ok(ProximityReport {
        sup,
        within_half_lambda: sup <= half,
        min_weighted,
        lower_bound_holds: min_weighted >= half,
        max_excess,
        upper_bound_holds: max_excess <= half,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Membership {
    pub x_t_norm: f64,
    pub ball_radius: f64,
    pub in_ball: bool,
    pub proximity: ProximityReport,
    /// Snapshots that dipped below the degeneracy floor during the solve.
    pub guard_grazes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationReport {
    /// d_n = d_{X_T}(u^{(n+1)}, u^{(n)}).
    pub distances: Vec<f64>,
    /// d_{n+1}/d_n where d_n > 0.
    pub ratios: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// ‖Φ(u*) − u*‖_{X_T}.
    pub final_residual: f64,
    pub membership: Membership,
    pub data: DataQuantities,
    pub norms: NormBundle,
}

impl IterationReport {
    /// Largest ratio after the first, i.e. the contraction tail.
    pub fn max_tail_ratio(&self) -> Option<f64> {
        self.ratios.iter().skip(1).copied().reduce(f64::max)
    }
}

fn ratios_of(distances: &[f64]) -> Vec<f64> {
    distances
        .windows(2)
        .filter(|w| w[0] > 0.0)
        .map(|w| w[1] / w[0])
        .collect()
}

/// Iterates u^{(n+1)} = Φ(u^{(n)}) from the free evolution.
pub fn picard_solve(u0: &Field, params: &Params, config: &PicardConfig) -> Result<(Trajectory, IterationReport)> {
    config.validate()?;
    let data = delta_of(u0, params)?;
    if !(data.lambda > 0.0) {
        return Err(Error::Degenerate {
            min_weighted: data.lambda,
            floor: 0.0,
        });
    }
    let guard = DegeneracyGuard::for_lambda(data.lambda).with_policy(config.guard_policy);
    let duhamel = Duhamel::new(u0, params, config.times(), guard, config.nonlinear);

    let zero_acc = Accumulated {
        sums: vec![vec![Complex64::new(0.0, 0.0); duhamel.grid.n_points()]; duhamel.times.len()],
        grazes: 0,
    };
    let mut current = duhamel.assemble(u0, &zero_acc)?;
    let mut current_acc = zero_acc;
    let mut distances = Vec::new();
    let mut grazes = 0;
    let mut converged = false;
    for iteration in 0..config.max_iterations {
        let acc = duhamel.accumulate(&current)?;
        grazes += acc.grazes;
        let d = xt_norm(&duhamel.difference(&current_acc, &acc)?).x_t_norm;
        log::debug!("picard iteration {iteration}: d = {d:.6e}");
        distances.push(d);
        current = duhamel.assemble(u0, &acc)?;
        current_acc = acc;
        if d < config.tolerance {
            converged = true;
            break;
        }
    }
    let next = duhamel.accumulate(&current)?;
    let final_residual = xt_norm(&duhamel.difference(&current_acc, &next)?).x_t_norm;

    let norms = xt_norm(&current);
    let radius = config.ball_radius.resolve(data.delta);
    let proximity = check_proximity(&current, u0, params.m(), data.lambda)?;
    if grazes > 0 {
        log::warn!("{grazes} snapshot evaluations fell below the degeneracy floor");
    }
    let report = IterationReport {
        ratios: ratios_of(&distances),
        iterations: distances.len(),
        distances,
        converged,
        final_residual,
        membership: Membership {
            x_t_norm: norms.x_t_norm,
            ball_radius: radius,
            in_ball: norms.x_t_norm <= radius,
            proximity,
            guard_grazes: grazes,
        },
        data,
        norms,
    };
    Ok((current, report))
}

/// Left-hand sides of the three smallness conditions on T with their
/// thresholds: self-mapping (≤ 1), proximity (≤ λ/2), contraction (≤ 1/2).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallConditions {
    pub c_constant: f64,
    pub self_map: f64,
    pub proximity: f64,
    pub proximity_threshold: f64,
    pub contraction: f64,
    pub all_satisfied: bool,
}

struct BallTerms {
    /// r^{s−j+1−α}(δ^α + δ^{s−j+1}).
    low: f64,
    /// r^{s−j+2−α}(δ^α + δ^{s−j+2}).
    high: f64,
}

fn ball_terms(delta: f64, lambda: f64, params: &Params) -> BallTerms {
    let r = (1.0 + lambda) / lambda;
    let a = params.alpha();
    let k = (params.s() - params.j()) as f64;
    BallTerms {
        low: r.powf(k + 1.0 - a) * (delta.powf(a) + delta.powf(k + 1.0)),
        high: r.powf(k + 2.0 - a) * (delta.powf(a) + delta.powf(k + 2.0)),
    }
}

pub fn ball_conditions(delta: f64, lambda: f64, params: &Params, t: f64, c: f64) -> Result<BallConditions> {
    if !(delta > 0.0 && lambda > 0.0 && t > 0.0) {
        return Err(Error::Domain(format!(
            "delta, lambda and T must be positive (got {delta}, {lambda}, {t})"
        )));
    }
    let terms = ball_terms(delta, lambda, params);
    let root = t.powf(1.0 / (2.0 * params.j() as f64));
    let self_map = c * root * terms.low;
    let proximity = c * t.sqrt() * delta + c * t.sqrt() * terms.low;
    let contraction = c * root * terms.high;
    let proximity_threshold = 0.5 * lambda;
    Ok(BallConditions {
        c_constant: c,
        self_map,
        proximity,
        proximity_threshold,
        contraction,
        all_satisfied: self_map <= 1.0 && proximity <= proximity_threshold && contraction <= 0.5,
    })
}

/// Largest T meeting each condition: (self-map, proximity, contraction).
pub fn ball_threshold_times(delta: f64, lambda: f64, params: &Params, c: f64) -> [f64; 3] {
    if c == 0.0 {
        return [f64::INFINITY; 3];
    }
    let terms = ball_terms(delta, lambda, params);
    let p = 2 * params.j() as i32;
    [
        (1.0 / (c * terms.low)).powi(p),
        (0.5 * lambda / (c * (delta + terms.low))).powi(2),
        (0.5 / (c * terms.high)).powi(p),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Sign;
    use crate::profiles::Profile;
    use crate::spaces::lambda_of;
    use crate::spectral::propagate;
    use approx::assert_relative_eq;

    fn params() -> Params {
        Params::new(1, 0.5, Sign::Plus, 10).unwrap()
    }

    fn small_data(n: usize, l: f64) -> Field {
        Profile::GaussianFloor {
            amplitude: 0.1,
            width: 1.5,
            floor: 0.05,
            decay: 3.0,
        }
        .sample(Grid::new(n, l).unwrap())
        .auto_banded()
    }

    #[test]
    fn free_evolution_when_f_vanishes() {
        let p = params();
        let u0 = small_data(512, 16.0);
        let times = Trajectory::uniform_times(0.05, 8);
        let free = free_evolution(&u0, &p, times.clone()).unwrap();
        let any = Trajectory::constant(p, &u0.scale(Complex64::new(3.0, 1.0)), times).unwrap();
        let out = duhamel_apply_with(&any, &u0, &p, &DegeneracyGuard::off(), false).unwrap();
        assert_eq!(out.snapshots()[0], u0.clone().with_time(0.0));
        for (a, (b, &t)) in out.snapshots().iter().zip(free.snapshots().iter().zip(free.times())) {
            let direct = propagate(&u0, t, 1);
            assert!((a - b).l2_norm() <= 1e-15 * u0.l2_norm());
            assert!((a - &direct).l2_norm() <= 1e-12 * u0.l2_norm());
        }
    }

    #[test]
    fn snapshot_zero_is_exact() {
        let p = params();
        let u0 = small_data(256, 16.0);
        let traj = free_evolution(&u0, &p, Trajectory::uniform_times(0.01, 4)).unwrap();
        let out = duhamel_apply(&traj, &u0, &p, &DegeneracyGuard::off()).unwrap();
        assert_eq!(out.snapshots()[0].values(), u0.values());
    }

    /// Reference Duhamel sum Σ_m w_{nm} U(t_n − s_m)F_m evaluated term by term.
    fn naive_duhamel(traj: &Trajectory, u0: &Field, p: &Params) -> Vec<Field> {
        let fs: Vec<Field> = traj
            .snapshots()
            .iter()
            .map(|u| crate::nonlinearity::evaluate_f(u, p, &DegeneracyGuard::off()).unwrap())
            .collect();
        let t = traj.times();
        (0..t.len())
            .map(|n| {
                let mut acc = propagate(u0, t[n], p.j());
                for m in 0..n {
                    let h = 0.5 * (t[m + 1] - t[m]);
                    for k in [m, m + 1] {
                        let term = propagate(&fs[k], t[n] - t[k], p.j());
                        acc = &acc - &(&term * h);
                    }
                }
                acc
            })
            .collect()
    }

    #[test]
    fn factored_sum_matches_naive_quadrature() {
        let p = params();
        let u0 = small_data(256, 16.0);
        let traj = free_evolution(&u0, &p, Trajectory::uniform_times(0.02, 6)).unwrap();
        let fast = duhamel_apply(&traj, &u0, &p, &DegeneracyGuard::off()).unwrap();
        let slow = naive_duhamel(&traj, &u0, &p);
        for (a, b) in fast.snapshots().iter().zip(&slow) {
            assert!((a - b).l2_norm() <= 1e-13 * u0.l2_norm());
        }
    }

    #[test]
    fn duhamel_quadrature_is_second_order() {
        // Q at T from one application on the free evolution, Nt = 32, 64, 128.
        let p = params();
        let u0 = small_data(1024, 32.0);
        // Beyond T ≈ 0.05 the fastest retained modes (ξ³h ≫ 1) keep the
        // quadrature out of its asymptotic regime at these Nt.
        let t_final = 0.02;
        let q = |nt: usize| {
            let times = Trajectory::uniform_times(t_final, nt);
            let free = free_evolution(&u0, &p, times).unwrap();
            let out = duhamel_apply(&free, &u0, &p, &DegeneracyGuard::off()).unwrap();
            out.last() - free.last()
        };
        let (q1, q2, q3) = (q(32), q(64), q(128));
        let ratio = (&q1 - &q2).l2_norm() / (&q2 - &q3).l2_norm();
        assert!((ratio - 4.0).abs() < 0.05, "{ratio}");
    }

    #[test]
    fn tolerance_above_first_distance_stops_after_one_step() {
        let p = params();
        let u0 = small_data(512, 32.0);
        let mut cfg = PicardConfig::new(0.01, 8);
        cfg.tolerance = 1e30;
        let (_, rep) = picard_solve(&u0, &p, &cfg).unwrap();
        assert_eq!(rep.iterations, 1);
        assert!(rep.converged);
    }

    #[test]
    fn small_run_contracts_and_stays_close() {
        let p = params();
        let u0 = small_data(1024, 32.0);
        let mut cfg = PicardConfig::new(0.01, 16);
        cfg.tolerance = 1e-3;
        let (traj, rep) = picard_solve(&u0, &p, &cfg).unwrap();
        assert!(rep.converged, "{:?}", rep.distances);
        assert!(rep.ratios.iter().all(|&r| r < 1.0), "{:?}", rep.ratios);
        assert!(rep.final_residual <= 10.0 * cfg.tolerance);
        assert!(rep.membership.proximity.all_hold());
        assert_eq!(traj.len(), 17);
    }

    #[test]
    fn guard_error_policy_surfaces_degeneracy() {
        let p = params();
        let u0 = small_data(512, 32.0);
        let traj = free_evolution(&u0, &p, Trajectory::uniform_times(0.01, 4)).unwrap();
        let guard = DegeneracyGuard {
            lambda_floor: 1.0,
            policy: GuardPolicy::Error,
        };
        assert!(matches!(
            duhamel_apply(&traj, &u0, &p, &guard),
            Err(Error::Degenerate { .. })
        ));
    }

    #[test]
    fn rejects_zero_lambda() {
        let g = Grid::new(256, 16.0).unwrap();
        let u0 = Field::from_real_fn(g, |x| 0.1 * x * (-x * x).exp());
        let cfg = PicardConfig::new(0.01, 8);
        assert!(matches!(
            picard_solve(&u0, &params(), &cfg),
            Err(Error::Degenerate { .. })
        ));
    }

    #[test]
    fn config_validation() {
        let mut cfg = PicardConfig::new(0.01, 3);
        assert!(cfg.validate().is_err());
        cfg.n_time_steps = 4;
        assert!(cfg.validate().is_ok());
        cfg.tolerance = 0.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn proximity_examples() {
        let p = params();
        let g = Grid::new(128, 8.0).unwrap();
        let u0 = Profile::PeriodicBracket {
            amplitude: 0.2,
            decay: 3.0,
            perturbation: 0.0,
        }
        .sample(g);
        let lambda = lambda_of(&u0, 3);
        let same = Trajectory::constant(p, &u0, vec![0.0, 0.1]).unwrap();
        let r = check_proximity(&same, &u0, 3, lambda).unwrap();
        assert_eq!(r.sup, 0.0);
        assert!(r.all_hold());
        let bumped = u0.map(|x, v| v + lambda / bracket(x).powi(3));
        let traj = Trajectory::new(p, vec![0.0, 0.1], vec![u0.clone(), bumped]).unwrap();
        let r = check_proximity(&traj, &u0, 3, lambda).unwrap();
        assert_relative_eq!(r.sup, lambda, max_relative = 1e-12);
        assert!(!r.within_half_lambda);
    }

    #[test]
    fn ball_condition_limits() {
        let p = params();
        let tiny = ball_conditions(1.0, 0.5, &p, 1e-300, 1.0).unwrap();
        assert!(tiny.all_satisfied);
        let free = ball_conditions(10.0, 0.5, &p, 1e3, 0.0).unwrap();
        assert!(free.all_satisfied);
        assert_eq!(free.self_map, 0.0);
    }

    fn bisect(f: impl Fn(f64) -> bool) -> f64 {
        // f true on (0, T*], false beyond; search in log space.
        let (mut lo, mut hi) = (-300.0f64, 10.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(10f64.powf(mid)) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        10f64.powf(lo)
    }

    #[test]
    fn ball_thresholds_match_bisection() {
        let p = params();
        let (delta, lambda, c) = (1.0, 0.5, 1.0);
        let closed = ball_threshold_times(delta, lambda, &p, c);
        let cond = |t: f64| ball_conditions(delta, lambda, &p, t, c).unwrap();
        let bis = [
            bisect(|t| cond(t).self_map <= 1.0),
            bisect(|t| cond(t).proximity <= cond(t).proximity_threshold),
            bisect(|t| cond(t).contraction <= 0.5),
        ];
        for (a, b) in closed.iter().zip(&bis) {
            assert_relative_eq!(a, b, max_relative = 1e-10);
        }
        // Thresholds shrink as δ grows.
        let bigger = ball_threshold_times(2.0, lambda, &p, c);
        for (a, b) in closed.iter().zip(&bigger) {
            assert!(b < a);
        }
    }
}
