//! Uniform periodic grid on [-L, L), discrete Fourier machinery and the
//! exact linear group of ∂ₜu + ∂ₓ^{2j+1}u = 0.
//!
//! Fields are sampled at x_i = -L + i·dx. Spectra are stored in FFT order with
//! the 1/n normalization, so that f(x_i) = Σ_k c_k e^{iξ_k(x_i + L)} and
//! ‖f‖²_{L²} = 2L Σ_k |c_k|².
//!
//! A grid may carry a band limit ξ_c: every spectral operation treats modes
//! with |ξ| > ξ_c as zero. High-order norms (∂ₓ^{11} and above) amplify
//! roundoff by ξ^order, and the band limit keeps that amplification bounded by
//! ξ_c^order instead of ξ_max^order.

use std::ops::{Add, Mul, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Largest derivative order accepted by [`spectral_derivative`].
pub const MAX_DERIVATIVE_ORDER: u32 = 64;

/// Fraction of points (split evenly between both ends) inspected by the
/// boundary-mass diagnostic.
pub const BOUNDARY_FRACTION: f64 = 0.05;
/// Maximum share of the L² mass allowed in the boundary strip.
pub const BOUNDARY_MASS_LIMIT: f64 = 1e-10;

/// Relative coefficient floor used by [`Field::auto_banded`]. FFT roundoff
/// sits near 1e-16 of the peak coefficient; modes kept by the band are at
/// least a hundred times above it.
pub const AUTO_BAND_FLOOR: f64 = 1e-14;

/// Top-mode |ĉ| share above which a resolution warning is logged.
pub const RESOLUTION_WARN: f64 = 1e-8;
/// Top-mode |ĉ| share above which high-order norms refuse to run.
pub const RESOLUTION_ERROR: f64 = 1e-4;

const TWO_PI_HI: f64 = std::f64::consts::TAU;
const TWO_PI_LO: f64 = 2.449_293_598_294_706_4e-16;

/// `t·ω mod 2π`, with the product carried exactly and the reduction done in
/// two fused steps, so that large phases (t·ξ^{2j+1} ~ 1e12) keep full
/// absolute accuracy.
pub fn reduced_phase(t: f64, omega: f64) -> f64 {
    let hi = t * omega;
    let lo = t.mul_add(omega, -hi);
    let turns = (hi / TWO_PI_HI).round();
    let r = (-turns).mul_add(TWO_PI_HI, hi);
    let r = (-turns).mul_add(TWO_PI_LO, r);
    r + lo
}

/// e^{i·t·ω} via [`reduced_phase`].
pub fn unit_phase(t: f64, omega: f64) -> Complex64 {
    let (s, c) = reduced_phase(t, omega).sin_cos();
    Complex64::new(c, s)
}

/// Frequency ω(ξ) of the linear group: U_j(t) acts on the mode ξ as
/// e^{−t(iξ)^{2j+1}} = e^{itω(ξ)} with ω(ξ) = (−1)^{j+1} ξ^{2j+1}.
pub fn dispersion_frequency(xi: f64, j: u32) -> f64 {
    let p = xi.powi(2 * j as i32 + 1);
    if j % 2 == 1 {
        p
    } else {
        -p
    }
}

/// (iξ)^order.
pub fn derivative_symbol(xi: f64, order: u32) -> Complex64 {
    let mag = xi.powi(order as i32);
    match order % 4 {
        0 => Complex64::new(mag, 0.0),
        1 => Complex64::new(0.0, mag),
        2 => Complex64::new(-mag, 0.0),
        _ => Complex64::new(0.0, -mag),
    }
}

/// ⟨x⟩ = (1 + x²)^{1/2}.
pub fn bracket(x: f64) -> f64 {
    x.hypot(1.0)
}

fn fft_plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    static PLANNER: OnceLock<Mutex<FftPlanner<f64>>> = OnceLock::new();
    let planner = PLANNER.get_or_init(|| Mutex::new(FftPlanner::new()));
    let mut planner = planner.lock().unwrap_or_else(|e| e.into_inner());
    if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    }
}

/// In-place unnormalized forward FFT.
pub(crate) fn fft_forward(buf: &mut [Complex64]) {
    fft_plan(buf.len(), false).process(buf);
}

/// In-place unnormalized inverse FFT.
pub(crate) fn fft_inverse(buf: &mut [Complex64]) {
    fft_plan(buf.len(), true).process(buf);
}

/// Discretization of the line by the periodic interval [-L, L).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    n_points: usize,
    half_width: f64,
    band_limit: Option<f64>,
}

impl Grid {
    pub fn new(n_points: usize, half_width: f64) -> Result<Self> {
        if n_points < 16 || !n_points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "n_points must be a power of two >= 16, got {n_points}"
            )));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "half_width must be positive and finite, got {half_width}"
            )));
        }
        Ok(Self {
            n_points,
            half_width,
            band_limit: None,
        })
    }

    /// Same grid with spectral content restricted to |ξ| ≤ `xi_max`.
    pub fn with_band_limit(self, xi_max: f64) -> Result<Self> {
        if !(xi_max > 0.0) {
            return Err(Error::InvalidGrid(format!("band limit must be positive, got {xi_max}")));
        }
        Ok(Self {
            band_limit: Some(xi_max),
            ..self
        })
    }

    pub fn without_band_limit(self) -> Self {
        Self {
            band_limit: None,
            ..self
        }
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn band_limit(&self) -> Option<f64> {
        self.band_limit
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / self.n_points as f64
    }

    /// Wavenumber spacing π/L.
    pub fn dxi(&self) -> f64 {
        std::f64::consts::PI / self.half_width
    }

    pub fn x(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.dx()
    }

    pub fn coordinates(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.x(i)).collect()
    }

    /// Signed mode number of FFT slot `k`, in −n/2 … n/2−1.
    pub fn mode_number(&self, k: usize) -> i64 {
        let n = self.n_points as i64;
        let k = k as i64;
        if k < n / 2 {
            k
        } else {
            k - n
        }
    }

    /// ξ_k = πk/L for FFT slot `k`.
    pub fn wavenumber(&self, k: usize) -> f64 {
        self.mode_number(k) as f64 * self.dxi()
    }

    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.n_points).map(|k| self.wavenumber(k)).collect()
    }

    /// Largest resolved |ξ| on the full grid, πn/(2L).
    pub fn xi_max(&self) -> f64 {
        self.n_points as f64 / 2.0 * self.dxi()
    }

    pub fn nyquist_slot(&self) -> usize {
        self.n_points / 2
    }

    /// Whether FFT slot `k` survives the band limit.
    pub fn in_band(&self, k: usize) -> bool {
        match self.band_limit {
            None => true,
            Some(limit) => self.wavenumber(k).abs() <= limit * (1.0 + 1e-12),
        }
    }

    /// Same discretization (size, width, band).
    pub fn same_as(&self, other: &Grid) -> bool {
        self == other
    }
}

/// Complex samples of u(·, t) on a [`Grid`].
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<Complex64>,
    time: Option<f64>,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(Error::InvalidField(format!(
                "expected {} samples, got {}",
                grid.n_points(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::InvalidField(format!(
                "non-finite sample at index {i} (x = {})",
                grid.x(i)
            )));
        }
        Ok(Self {
            grid,
            values,
            time: None,
        })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.n_points()],
            time: None,
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> Complex64) -> Self {
        let values = (0..grid.n_points()).map(|i| f(grid.x(i))).collect();
        Self {
            grid,
            values,
            time: None,
        }
    }

    pub fn from_real_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        Self::from_fn(grid, |x| Complex64::new(f(x), 0.0))
    }

    /// Builds without the finiteness scan; for internal results of
    /// operations on finite inputs.
    pub(crate) fn from_raw(grid: Grid, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), grid.n_points());
        Self {
            grid,
            values,
            time: None,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn time(&self) -> Option<f64> {
        self.time
    }

    pub fn with_time(mut self, t: f64) -> Self {
        self.time = Some(t);
        self
    }

    /// Same field on a grid with a different band limit; the samples are
    /// projected onto the new band.
    pub fn rebanded(&self, grid: Grid) -> Self {
        assert_eq!(grid.n_points(), self.grid.n_points());
        let mut out = Self { grid, ..self.clone() };
        if grid.band_limit().is_some() {
            out.values = out.spectrum().to_field().values;
        }
        out
    }

    /// Same samples on a grid band-limited to the modes above
    /// [`AUTO_BAND_FLOOR`] of the peak coefficient.
    pub fn auto_banded(&self) -> Field {
        let band = auto_band_limit(self, AUTO_BAND_FLOOR);
        let grid = self
            .grid
            .with_band_limit(band)
            .expect("auto band is at least one wavenumber step");
        self.rebanded(grid)
    }

    pub fn l2_norm(&self) -> f64 {
        (self.grid.dx() * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>()).sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn map(&self, f: impl Fn(f64, Complex64) -> Complex64) -> Field {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| f(self.grid.x(i), v))
            .collect();
        Field {
            grid: self.grid,
            values,
            time: self.time,
        }
    }

    pub fn scale(&self, c: Complex64) -> Field {
        self.map(|_, v| c * v)
    }

    /// Normalized, band-masked spectrum.
    pub fn spectrum(&self) -> Spectrum {
        let n = self.grid.n_points();
        let mut buf = self.values.clone();
        fft_forward(&mut buf);
        let inv_n = 1.0 / n as f64;
        for (k, c) in buf.iter_mut().enumerate() {
            *c = if self.grid.in_band(k) {
                *c * inv_n
            } else {
                Complex64::new(0.0, 0.0)
            };
        }
        Spectrum {
            grid: self.grid,
            coeffs: buf,
        }
    }

    /// Normalized spectrum ignoring the band limit.
    pub fn raw_spectrum(&self) -> Vec<Complex64> {
        let n = self.grid.n_points() as f64;
        let mut buf = self.values.clone();
        fft_forward(&mut buf);
        buf.iter_mut().for_each(|c| *c /= n);
        buf
    }

    fn check_same_grid(&self, other: &Field) {
        assert!(self.grid.same_as(&other.grid), "field arithmetic on mismatched grids");
    }
}

impl Add for &Field {
    type Output = Field;

    /// Panics if the grids differ.
    fn add(self, rhs: &Field) -> Field {
        self.check_same_grid(rhs);
        let values = self.values.iter().zip(&rhs.values).map(|(a, b)| a + b).collect();
        Field::from_raw(self.grid, values).with_time_opt(self.time)
    }
}

impl Sub for &Field {
    type Output = Field;

    /// Panics if the grids differ.
    fn sub(self, rhs: &Field) -> Field {
        self.check_same_grid(rhs);
        let values = self.values.iter().zip(&rhs.values).map(|(a, b)| a - b).collect();
        Field::from_raw(self.grid, values).with_time_opt(self.time)
    }
}

impl Mul<f64> for &Field {
    type Output = Field;

    fn mul(self, rhs: f64) -> Field {
        self.map(|_, v| v * rhs)
    }
}

impl Mul<Complex64> for &Field {
    type Output = Field;

    fn mul(self, rhs: Complex64) -> Field {
        self.map(|_, v| v * rhs)
    }
}

impl Field {
    fn with_time_opt(mut self, t: Option<f64>) -> Self {
        self.time = t;
        self
    }
}

/// Fourier coefficients of a [`Field`], FFT order, 1/n normalization.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    /// Wraps raw coefficients, zeroing everything outside the band.
    pub fn from_coeffs(grid: Grid, mut coeffs: Vec<Complex64>) -> Self {
        assert_eq!(coeffs.len(), grid.n_points());
        for (k, c) in coeffs.iter_mut().enumerate() {
            if !grid.in_band(k) {
                *c = Complex64::new(0.0, 0.0);
            }
        }
        Self { grid, coeffs }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            coeffs: vec![Complex64::new(0.0, 0.0); grid.n_points()],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn to_field(&self) -> Field {
        let mut buf = self.coeffs.clone();
        fft_inverse(&mut buf);
        Field::from_raw(self.grid, buf)
    }

    /// Multiplies each in-band coefficient by `symbol(slot, ξ)`.
    pub fn apply(&self, symbol: impl Fn(usize, f64) -> Complex64) -> Spectrum {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, &c)| {
                if self.grid.in_band(k) && c != Complex64::new(0.0, 0.0) {
                    c * symbol(k, self.grid.wavenumber(k))
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        Spectrum {
            grid: self.grid,
            coeffs,
        }
    }

    /// Spectrum of ∂ₓ^order f. Odd orders drop the unpaired Nyquist mode.
    pub fn derivative(&self, order: u32) -> Result<Spectrum> {
        if order > MAX_DERIVATIVE_ORDER {
            return Err(Error::OrderTooHigh {
                order,
                max: MAX_DERIVATIVE_ORDER,
            });
        }
        if order == 0 {
            return Ok(self.clone());
        }
        let nyquist = self.grid.nyquist_slot();
        Ok(self.apply(|k, xi| {
            if order % 2 == 1 && k == nyquist {
                Complex64::new(0.0, 0.0)
            } else {
                derivative_symbol(xi, order)
            }
        }))
    }

    /// Spectrum of U_j(t)f.
    pub fn propagated(&self, t: f64, j: u32) -> Spectrum {
        if t == 0.0 {
            return self.clone();
        }
        self.apply(|_, xi| unit_phase(t, dispersion_frequency(xi, j)))
    }

    pub fn sub(&self, other: &Spectrum) -> Spectrum {
        assert!(self.grid.same_as(&other.grid));
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect();
        Spectrum {
            grid: self.grid,
            coeffs,
        }
    }

    /// ‖f‖²_{L²} by Plancherel.
    pub fn l2_norm_sqr(&self) -> f64 {
        2.0 * self.grid.half_width() * self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()
    }
}

/// ∂ₓ^order f, computed spectrally.
pub fn spectral_derivative(f: &Field, order: u32) -> Result<Field> {
    if order == 0 {
        return Ok(f.clone());
    }
    let out = f.spectrum().derivative(order)?.to_field();
    Ok(out.with_time_opt(f.time()))
}

/// U_j(t)f = F⁻¹ e^{−t(iξ)^{2j+1}} F f.
pub fn propagate(f: &Field, t: f64, j: u32) -> Field {
    if t == 0.0 {
        return f.clone();
    }
    let out = f.spectrum().propagated(t, j).to_field();
    let time = f.time().map(|s| s + t);
    out.with_time_opt(time)
}

/// ⟨x⟩^power · f.
pub fn apply_weight(f: &Field, power: f64) -> Field {
    if power == 0.0 {
        return f.clone();
    }
    f.map(|x, v| v * (1.0 + x * x).powf(0.5 * power))
}

/// x · f with the grid's sawtooth coordinate; meaningful only for fields
/// that vanish near ±L.
pub fn multiply_by_x(f: &Field) -> Field {
    f.map(|x, v| v * x)
}

/// x·f + (2j+1)·t·∂ₓ^{2j}f, the conjugated position operator U_j(−t) x U_j(t).
pub fn commuted_operator(f: &Field, t: f64, j: u32) -> Field {
    let xf = multiply_by_x(f);
    if t == 0.0 {
        return xf;
    }
    let c = (2 * j + 1) as f64 * t;
    let d = f
        .spectrum()
        .derivative(2 * j)
        .expect("2j is within the derivative order limit")
        .to_field();
    let values = xf.values().iter().zip(d.values()).map(|(a, b)| a + b * c).collect();
    Field::from_raw(*f.grid(), values)
}

/// Share of ‖f‖² carried by the outer `fraction` of grid points.
pub fn boundary_mass_fraction(f: &Field, fraction: f64) -> f64 {
    let n = f.grid().n_points();
    let strip = ((fraction * n as f64) / 2.0).ceil() as usize;
    let total: f64 = f.values().iter().map(|v| v.norm_sqr()).sum();
    if total == 0.0 {
        return 0.0;
    }
    let edge: f64 = f.values()[..strip]
        .iter()
        .chain(&f.values()[n - strip..])
        .map(|v| v.norm_sqr())
        .sum();
    edge / total
}

/// Errors when the boundary strip carries more than [`BOUNDARY_MASS_LIMIT`].
pub fn check_boundary_mass(f: &Field, what: &str) -> Result<()> {
    let frac = boundary_mass_fraction(f, BOUNDARY_FRACTION);
    if frac > BOUNDARY_MASS_LIMIT {
        return Err(Error::Boundary(format!(
            "{what}: boundary strip carries {frac:.3e} of the mass (limit {BOUNDARY_MASS_LIMIT:.0e})"
        )));
    }
    Ok(())
}

/// Share of Σ|ĉ_k| carried by the top 10% of grid modes (by |k|),
/// regardless of the band limit.
pub fn top_mode_fraction(f: &Field) -> f64 {
    let grid = f.grid();
    let spec = f.raw_spectrum();
    let n = grid.n_points() as i64;
    let cutoff = (0.45 * n as f64).ceil() as i64;
    let mut total = 0.0;
    let mut top = 0.0;
    for (k, c) in spec.iter().enumerate() {
        let a = c.norm();
        total += a;
        if grid.mode_number(k).abs() >= cutoff {
            top += a;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        top / total
    }
}

/// Smallest band limit keeping every mode above `rel_floor · max|ĉ|`.
pub fn auto_band_limit(f: &Field, rel_floor: f64) -> f64 {
    let grid = f.grid();
    let spec = f.raw_spectrum();
    let peak = spec.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let floor = rel_floor * peak;
    let mut band: f64 = grid.dxi();
    for (k, c) in spec.iter().enumerate() {
        if c.norm() > floor {
            band = band.max(grid.wavenumber(k).abs());
        }
    }
    band
}

/// ⟨±L⟩^m|u(±L)|, the weighted size of the field at the ends of the box.
pub fn truncation_diagnostic(f: &Field, m: u32) -> f64 {
    let grid = f.grid();
    let n = grid.n_points();
    [0, n - 1]
        .iter()
        .map(|&i| bracket(grid.x(i)).powi(m as i32) * f.values()[i].norm())
        .fold(0.0, f64::max)
}
