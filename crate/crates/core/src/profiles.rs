//! Initial-data generators.
//!
//! The raw bracket ⟨x⟩^{-d} has a derivative jump when wrapped onto [-L, L),
//! which pollutes every high Sobolev norm. The periodic bracket
//!
//!   ⟨x⟩_L = (1 + (2L/π)² sin²(πx/2L))^{1/2}
//!
//! is smooth and 2L-periodic, agrees with ⟨x⟩ to O(x⁴/L²) near the origin and
//! satisfies ⟨x⟩_L ≤ ⟨x⟩, so a⟨x⟩_L^{-m} keeps ⟨x⟩^m|u| ≥ a on the whole grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{bracket, Field, Grid};

pub fn periodic_bracket(x: f64, half_width: f64) -> f64 {
    let scale = 2.0 * half_width / std::f64::consts::PI;
    let s = (std::f64::consts::PI * x / (2.0 * half_width)).sin();
    (scale * s).hypot(1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    /// a⟨x⟩^{-decay}(1 + p·sech x).
    Bracket {
        amplitude: f64,
        decay: f64,
        perturbation: f64,
    },
    /// a⟨x⟩_L^{-decay}(1 + p·sech x).
    PeriodicBracket {
        amplitude: f64,
        decay: f64,
        perturbation: f64,
    },
    /// a·e^{-(x/w)²}.
    Gaussian { amplitude: f64, width: f64 },
    /// floor·⟨x⟩_L^{-decay} + a·e^{-(x/w)²}.
    GaussianFloor {
        amplitude: f64,
        width: f64,
        floor: f64,
        decay: f64,
    },
}

impl Profile {
    pub fn name(&self) -> &'static str {
        match self {
            Profile::Bracket { .. } => "bracket",
            Profile::PeriodicBracket { .. } => "periodic_bracket",
            Profile::Gaussian { .. } => "gaussian",
            Profile::GaussianFloor { .. } => "gaussian_floor",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, v: f64| Error::config(key, format!("must be positive and finite, got {v}"));
        match *self {
            Profile::Bracket {
                amplitude,
                decay,
                perturbation,
            }
            | Profile::PeriodicBracket {
                amplitude,
                decay,
                perturbation,
            } => {
                if !amplitude.is_finite() {
                    return Err(Error::config(
                        "data.amplitude",
                        format!("must be finite, got {amplitude}"),
                    ));
                }
                if !(decay >= 0.0 && decay.is_finite()) {
                    return Err(bad("data.decay", decay));
                }
                if !perturbation.is_finite() || perturbation <= -1.0 {
                    return Err(Error::config(
                        "data.perturbation",
                        format!("must be finite and > -1, got {perturbation}"),
                    ));
                }
            }
            Profile::Gaussian { amplitude, width } => {
                if !amplitude.is_finite() {
                    return Err(Error::config(
                        "data.amplitude",
                        format!("must be finite, got {amplitude}"),
                    ));
                }
                if !(width > 0.0 && width.is_finite()) {
                    return Err(bad("data.width", width));
                }
            }
            Profile::GaussianFloor {
                amplitude,
                width,
                floor,
                decay,
            } => {
                if !amplitude.is_finite() {
                    return Err(Error::config(
                        "data.amplitude",
                        format!("must be finite, got {amplitude}"),
                    ));
                }
                if !(width > 0.0 && width.is_finite()) {
                    return Err(bad("data.width", width));
                }
                if !(floor > 0.0 && floor.is_finite()) {
                    return Err(bad("data.floor", floor));
                }
                if !(decay >= 0.0 && decay.is_finite()) {
                    return Err(bad("data.decay", decay));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: f64, half_width: f64) -> f64 {
        match *self {
            Profile::Bracket {
                amplitude,
                decay,
                perturbation,
            } => amplitude * bracket(x).powf(-decay) * (1.0 + perturbation / x.cosh()),
            Profile::PeriodicBracket {
                amplitude,
                decay,
                perturbation,
            } => amplitude * periodic_bracket(x, half_width).powf(-decay) * (1.0 + perturbation / x.cosh()),
            Profile::Gaussian { amplitude, width } => amplitude * (-(x / width).powi(2)).exp(),
            Profile::GaussianFloor {
                amplitude,
                width,
                floor,
                decay,
            } => floor * periodic_bracket(x, half_width).powf(-decay) + amplitude * (-(x / width).powi(2)).exp(),
        }
    }

    pub fn sample(&self, grid: Grid) -> Field {
        let l = grid.half_width();
        Field::from_real_fn(grid, |x| self.eval(x, l)).with_time(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn periodic_bracket_properties() {
        let l = 16.0;
        for i in 0..200 {
            let x = -l + i as f64 * 0.16;
            let p = periodic_bracket(x, l);
            assert!(p <= bracket(x) * (1.0 + 1e-15));
            assert_relative_eq!(p, periodic_bracket(x + 2.0 * l, l), max_relative = 1e-12);
        }
        assert_relative_eq!(periodic_bracket(0.01, 1e3), bracket(0.01), max_relative = 1e-12);
    }

    #[test]
    fn periodic_bracket_data_has_exact_floor() {
        let g = Grid::new(256, 16.0).unwrap();
        let p = Profile::PeriodicBracket {
            amplitude: 0.2,
            decay: 3.0,
            perturbation: 0.0,
        };
        let f = p.sample(g);
        for (i, v) in f.values().iter().enumerate() {
            assert!(bracket(g.x(i)).powi(3) * v.re >= 0.2 * (1.0 - 1e-14));
        }
    }

    #[test]
    fn validation() {
        assert!(Profile::Gaussian {
            amplitude: 1.0,
            width: 0.0
        }
        .validate()
        .is_err());
        assert!(Profile::Bracket {
            amplitude: 1.0,
            decay: 3.0,
            perturbation: -1.0
        }
        .validate()
        .is_err());
        assert!(Profile::GaussianFloor {
            amplitude: 1.0,
            width: 1.0,
            floor: 0.1,
            decay: 3.0
        }
        .validate()
        .is_ok());
    }
}
