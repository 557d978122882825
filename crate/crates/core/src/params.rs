use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lifespan::{m_of_alpha, min_regularity};

/// The ± in front of the nonlinearity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn from_value(v: i64) -> Option<Self> {
        match v {
            1 => Some(Sign::Plus),
            -1 => Some(Sign::Minus),
            _ => None,
        }
    }
}

/// (j, α, ±, m, s) for ∂ₜu + ∂ₓ^{2j+1}u ± |u|^α∂ₓ^{2j−1}u = 0.
///
/// m = ⌊1/α⌋ + 1 is derived, and s − j + 1 ≥ 2jm + 2j + 2 is enforced.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    j: u32,
    alpha: f64,
    sign: Sign,
    m: u32,
    s: u32,
}

impl Params {
    pub fn new(j: u32, alpha: f64, sign: Sign, s: u32) -> Result<Self> {
        if j == 0 {
            return Err(Error::Domain("j must be a positive integer".into()));
        }
        let m = m_of_alpha(alpha)?;
        let s_min = min_regularity(j, m);
        if s < s_min {
            return Err(Error::Domain(format!(
                "s = {s} violates s - j + 1 >= 2jm + 2j + 2 (j = {j}, m = {m}: need s >= {s_min})"
            )));
        }
        Ok(Self { j, alpha, sign, m, s })
    }

    /// Parameters at the minimal admissible regularity.
    pub fn minimal(j: u32, alpha: f64, sign: Sign) -> Result<Self> {
        let m = m_of_alpha(alpha)?;
        Self::new(j, alpha, sign, min_regularity(j.max(1), m))
    }

    pub fn j(&self) -> u32 {
        self.j
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn s(&self) -> u32 {
        self.s
    }

    /// Order 2j−1 of the derivative in the nonlinearity.
    pub fn nonlinear_order(&self) -> u32 {
        2 * self.j - 1
    }

    /// Highest derivative order touched by the X_T norm, s + j.
    pub fn max_norm_order(&self) -> u32 {
        self.s + self.j
    }
}
