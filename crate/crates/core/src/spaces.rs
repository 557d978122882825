//! H^s, weighted L²/L^∞, the data sizes δ and λ, and the X_T norm
//!
//!   ‖u‖_{X_T} = ‖u‖_{L_T^∞H^s} + ‖⟨x⟩^m u‖_{L_T^∞L_x^∞}
//!             + Σ_{γ=1}^{2j+2} ‖⟨x⟩^m∂ₓ^γu‖_{L_T^∞L_x²} + Σ_{l=0}^{j−1} ‖∂ₓ^{s+j−l}u‖_{L_x^∞L_T²}.
//!
//! L_T² integrals are composite trapezoid on the trajectory's own time grid.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::Params;
use crate::spectral::{top_mode_fraction, Field, Grid, Spectrum, RESOLUTION_ERROR, RESOLUTION_WARN};

/// ‖⟨ξ⟩^s f̂‖_{L²}, band-limited.
pub fn sobolev_norm(f: &Field, s: f64) -> f64 {
    sobolev_norm_of(&f.spectrum(), s)
}

pub fn sobolev_norm_of(spec: &Spectrum, s: f64) -> f64 {
    let grid = spec.grid();
    let sum: f64 = spec
        .coeffs()
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let xi = grid.wavenumber(k);
            (1.0 + xi * xi).powf(s) * c.norm_sqr()
        })
        .sum();
    (2.0 * grid.half_width() * sum).sqrt()
}

/// ‖⟨x⟩^p f‖_{L²} by the trapezoid rule (dx·Σ on the periodic grid).
pub fn weighted_l2(f: &Field, p: f64) -> f64 {
    let g = f.grid();
    let sum: f64 = f
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let x = g.x(i);
            (1.0 + x * x).powf(p) * v.norm_sqr()
        })
        .sum();
    (g.dx() * sum).sqrt()
}

/// max_i ⟨x_i⟩^p |f(x_i)|.
pub fn weighted_sup(f: &Field, p: f64) -> f64 {
    let g = f.grid();
    f.values()
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let x = g.x(i);
            (1.0 + x * x).powf(0.5 * p) * v.norm()
        })
        .fold(0.0, f64::max)
}

/// min_i ⟨x_i⟩^m |f(x_i)|; the infimum over the truncated grid.
pub fn lambda_of(f: &Field, m: u32) -> f64 {
    let g = f.grid();
    f.values()
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let x = g.x(i);
            (1.0 + x * x).powf(0.5 * m as f64) * v.norm()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Errors above [`RESOLUTION_ERROR`], warns above [`RESOLUTION_WARN`].
pub fn check_resolution(f: &Field) -> Result<f64> {
    let fraction = top_mode_fraction(f);
    if fraction > RESOLUTION_ERROR {
        return Err(Error::Resolution {
            fraction,
            limit: RESOLUTION_ERROR,
        });
    }
    if fraction > RESOLUTION_WARN {
        log::warn!("top 10% of modes carry {fraction:.3e} of the spectral mass");
    }
    Ok(fraction)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataQuantities {
    pub delta: f64,
    /// Grid infimum of ⟨x⟩^m|u0|, an overestimate of the whole-line value.
    pub lambda: f64,
    pub m: u32,
    pub h_s: f64,
    pub weighted_sup: f64,
    pub weighted_deriv: Vec<f64>,
}

/// δ = ‖f‖_{H^s} + ‖⟨x⟩^m f‖_{L^∞} + Σ_{γ=1}^{2j+2} ‖⟨x⟩^m∂ₓ^γf‖_{L²}, and λ.
pub fn delta_of(f: &Field, params: &Params) -> Result<DataQuantities> {
    check_resolution(f)?;
    let m = params.m();
    let spec = f.spectrum();
    let h_s = sobolev_norm_of(&spec, params.s() as f64);
    let wsup = weighted_sup(f, m as f64);
    let weighted_deriv = (1..=2 * params.j() + 2)
        .map(|g| Ok(weighted_l2(&spec.derivative(g)?.to_field(), m as f64)))
        .collect::<Result<Vec<_>>>()?;
    let delta = h_s + wsup + weighted_deriv.iter().sum::<f64>();
    Ok(DataQuantities {
        delta,
        lambda: lambda_of(f, m),
        m,
        h_s,
        weighted_sup: wsup,
        weighted_deriv,
    })
}

/// Snapshots u(t_n) on a shared grid, t₀ = 0 < t₁ < … < T.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    params: Params,
    grid: Grid,
    times: Vec<f64>,
    snapshots: Vec<Field>,
}

impl Trajectory {
    pub fn new(params: Params, times: Vec<f64>, snapshots: Vec<Field>) -> Result<Self> {
        let Some(first) = snapshots.first() else {
            return Err(Error::InvalidField("trajectory has no snapshots".into()));
        };
        let grid = *first.grid();
        if times.len() != snapshots.len() {
            return Err(Error::InvalidField(format!(
                "{} times for {} snapshots",
                times.len(),
                snapshots.len()
            )));
        }
        if times[0] != 0.0 {
            return Err(Error::InvalidField(format!("times must start at 0, got {}", times[0])));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidField(
                "times must be finite and strictly increasing".into(),
            ));
        }
        if snapshots.iter().any(|f| f.grid() != &grid) {
            return Err(Error::InvalidField("snapshots live on different grids".into()));
        }
        let snapshots = snapshots
            .into_iter()
            .zip(&times)
            .map(|(f, &t)| f.with_time(t))
            .collect();
        Ok(Self {
            params,
            grid,
            times,
            snapshots,
        })
    }

    /// Uniform time grid t_n = n·T/nt, n = 0…nt.
    pub fn uniform_times(t_final: f64, nt: usize) -> Vec<f64> {
        (0..=nt).map(|n| t_final * n as f64 / nt as f64).collect()
    }

    /// A field held constant over `times`.
    pub fn constant(params: Params, f: &Field, times: Vec<f64>) -> Result<Self> {
        let snaps = vec![f.clone(); times.len()];
        Self::new(params, times, snaps)
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn snapshots(&self) -> &[Field] {
        &self.snapshots
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectories are nonempty")
    }

    pub fn last(&self) -> &Field {
        self.snapshots.last().expect("trajectories are nonempty")
    }

    /// The first `count` snapshots, i.e. the restriction to [0, t_{count−1}].
    pub fn truncated(&self, count: usize) -> Self {
        let count = count.clamp(1, self.len());
        Self {
            params: self.params,
            grid: self.grid,
            times: self.times[..count].to_vec(),
            snapshots: self.snapshots[..count].to_vec(),
        }
    }

    /// Every `stride`-th snapshot.
    pub fn subsampled(&self, stride: usize) -> Self {
        let stride = stride.max(1);
        let idx: Vec<usize> = (0..self.len()).step_by(stride).collect();
        Self {
            params: self.params,
            grid: self.grid,
            times: idx.iter().map(|&i| self.times[i]).collect(),
            snapshots: idx.iter().map(|&i| self.snapshots[i].clone()).collect(),
        }
    }

    pub fn with_params(mut self, params: Params) -> Self {
        self.params = params;
        self
    }

    pub fn map(&self, f: impl Fn(&Field) -> Field + Sync + Send) -> Self {
        let snapshots: Vec<Field> = self.snapshots.par_iter().map(f).collect();
        Self {
            params: self.params,
            grid: self.grid,
            times: self.times.clone(),
            snapshots: snapshots
                .into_iter()
                .zip(&self.times)
                .map(|(s, &t)| s.with_time(t))
                .collect(),
        }
    }

    pub fn check_compatible(&self, other: &Trajectory) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::IncompatibleTrajectories(format!(
                "grids differ: {:?} vs {:?}",
                self.grid, other.grid
            )));
        }
        if self.times != other.times {
            return Err(Error::IncompatibleTrajectories("time grids differ".into()));
        }
        Ok(())
    }

    /// Snapshot-wise difference.
    pub fn difference(&self, other: &Trajectory) -> Result<Trajectory> {
        self.check_compatible(other)?;
        let snapshots = self
            .snapshots
            .iter()
            .zip(&other.snapshots)
            .map(|(a, b)| a - b)
            .collect();
        Trajectory::new(self.params, self.times.clone(), snapshots)
    }

    /// max_n ‖a(t_n) − b(t_n)‖_{L²}.
    pub fn sup_l2_distance(&self, other: &Trajectory) -> Result<f64> {
        self.check_compatible(other)?;
        Ok(self
            .snapshots
            .iter()
            .zip(&other.snapshots)
            .map(|(a, b)| (a - b).l2_norm())
            .fold(0.0, f64::max))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormBundle {
    pub h_s: f64,
    pub weighted_sup: f64,
    pub weighted_deriv: Vec<f64>,
    pub smoothing: Vec<f64>,
    pub x_t_norm: f64,
}

impl NormBundle {
    fn assemble(h_s: f64, weighted_sup: f64, weighted_deriv: Vec<f64>, smoothing: Vec<f64>) -> Self {
        let x_t_norm = h_s + weighted_sup + weighted_deriv.iter().sum::<f64>() + smoothing.iter().sum::<f64>();
        Self {
            h_s,
            weighted_sup,
            weighted_deriv,
            smoothing,
            x_t_norm,
        }
    }
}

/// Fixed-time pieces of the X_T norm for one snapshot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotNorms {
    pub t: f64,
    pub l2: f64,
    pub h_s: f64,
    pub weighted_sup: f64,
    pub weighted_deriv: Vec<f64>,
    /// max_x |∂ₓ^{s+j−l}u(x, t)|, l = 0…j−1.
    pub smoothing_sup: Vec<f64>,
}

struct SnapshotPieces {
    norms: SnapshotNorms,
    smoothing_sq: Vec<Vec<f64>>,
}

fn snapshot_pieces(f: &Field, params: &Params, keep_sq: bool) -> SnapshotPieces {
    let m = params.m() as f64;
    let j = params.j();
    let spec = f.spectrum();
    let weighted_deriv = (1..=2 * j + 2)
        .map(|g| weighted_l2(&spec.derivative(g).expect("order within limit").to_field(), m))
        .collect();
    let mut smoothing_sup = Vec::with_capacity(j as usize);
    let mut smoothing_sq = Vec::new();
    for l in 0..j {
        let d = spec
            .derivative(params.s() + j - l)
            .expect("order within limit")
            .to_field();
        let sq: Vec<f64> = d.values().iter().map(|v| v.norm_sqr()).collect();
        smoothing_sup.push(sq.iter().copied().fold(0.0, f64::max).sqrt());
        if keep_sq {
            smoothing_sq.push(sq);
        }
    }
    SnapshotPieces {
        norms: SnapshotNorms {
            t: f.time().unwrap_or(0.0),
            l2: spec.l2_norm_sqr().sqrt(),
            h_s: sobolev_norm_of(&spec, params.s() as f64),
            weighted_sup: weighted_sup(f, m),
            weighted_deriv,
            smoothing_sup,
        },
        smoothing_sq,
    }
}

pub fn snapshot_norms(f: &Field, params: &Params) -> SnapshotNorms {
    snapshot_pieces(f, params, false).norms
}

/// Per-snapshot norm series.
pub fn norm_series(traj: &Trajectory) -> Vec<SnapshotNorms> {
    traj.snapshots()
        .par_iter()
        .map(|f| snapshot_norms(f, traj.params()))
        .collect()
}

/// Composite-trapezoid weights for nodes `times`.
pub fn trapezoid_weights(times: &[f64]) -> Vec<f64> {
    let n = times.len();
    let mut w = vec![0.0; n];
    for k in 1..n {
        let h = 0.5 * (times[k] - times[k - 1]);
        w[k - 1] += h;
        w[k] += h;
    }
    w
}

pub fn xt_norm(traj: &Trajectory) -> NormBundle {
    let params = traj.params();
    let j = params.j() as usize;
    let pieces: Vec<SnapshotPieces> = traj
        .snapshots()
        .par_iter()
        .map(|f| snapshot_pieces(f, params, true))
        .collect();
    let weights = trapezoid_weights(traj.times());

    let h_s = pieces.iter().map(|p| p.norms.h_s).fold(0.0, f64::max);
    let wsup = pieces.iter().map(|p| p.norms.weighted_sup).fold(0.0, f64::max);
    let n_deriv = 2 * j + 2;
    let weighted_deriv = (0..n_deriv)
        .map(|g| pieces.iter().map(|p| p.norms.weighted_deriv[g]).fold(0.0, f64::max))
        .collect();

    let n = traj.grid().n_points();
    let smoothing = (0..j)
        .map(|l| {
            let mut acc = vec![0.0; n];
            for (p, &w) in pieces.iter().zip(&weights) {
                for (a, &v) in acc.iter_mut().zip(&p.smoothing_sq[l]) {
                    *a += w * v;
                }
            }
            acc.into_iter().fold(0.0, f64::max).sqrt()
        })
        .collect();
    NormBundle::assemble(h_s, wsup, weighted_deriv, smoothing)
}

/// d_{X_T}(a, b) = ‖a − b‖_{X_T}.
pub fn xt_distance(a: &Trajectory, b: &Trajectory) -> Result<f64> {
    Ok(xt_norm(&a.difference(b)?).x_t_norm)
}
