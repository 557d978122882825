//! m(α), the minimal regularity, and the lifespan lower bound
//!
//!   T^{1/2j} ≥ Cλ / (δ(1 + δ^κ r^{s−j+2−α})),  r = (1+λ)/λ,
//!
//! in its κ form and in the two-term form δ^α + δ^{s−j+2}. Both are carried in
//! log space: for realistic δ the bound sits far below f64::MIN_POSITIVE.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::Params;

/// Relative slack allowed in δ ≥ λ.
pub const DELTA_LAMBDA_SLACK: f64 = 1e-10;

pub fn m_of_alpha(alpha: f64) -> Result<u32> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha must lie in (0,1), got {alpha}")));
    }
    Ok((1.0 / alpha).floor() as u32 + 1)
}

/// Smallest s with s − j + 1 ≥ 2jm + 2j + 2.
pub fn min_regularity(j: u32, m: u32) -> u32 {
    2 * j * m + 3 * j + 1
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LifespanResult {
    pub t_statement: f64,
    pub t_proof: f64,
    pub log10_t_statement: f64,
    pub log10_t_proof: f64,
    pub kappa: f64,
    pub c_used: f64,
}

/// ln(e^a + e^b).
fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// ln(1 + e^y).
fn softplus(y: f64) -> f64 {
    log_add_exp(0.0, y)
}

pub(crate) fn validate_data(delta: f64, lambda: f64) -> Result<()> {
    if !(lambda > 0.0) {
        return Err(Error::Degenerate {
            min_weighted: lambda,
            floor: 0.0,
        });
    }
    if !delta.is_finite() || delta < lambda * (1.0 - DELTA_LAMBDA_SLACK) {
        return Err(Error::InconsistentData(format!(
            "delta = {delta} must be finite and at least lambda = {lambda}"
        )));
    }
    Ok(())
}

pub fn kappa(delta: f64, params: &Params) -> f64 {
    if delta >= 1.0 {
        (params.s() - params.j() + 2) as f64
    } else {
        params.alpha()
    }
}

pub fn lifespan_lower_bound(delta: f64, lambda: f64, params: &Params, c: f64) -> Result<LifespanResult> {
    validate_data(delta, lambda)?;
    if !(c > 0.0 && c <= 1.0) {
        return Err(Error::Domain(format!("c must lie in (0,1], got {c}")));
    }
    let alpha = params.alpha();
    let top = (params.s() - params.j() + 2) as f64;
    let kappa = kappa(delta, params);
    let ln_delta = delta.ln();
    let ln_r = ((1.0 + lambda) / lambda).ln();
    let ln_weight = (top - alpha) * ln_r;
    let power = 2.0 * params.j() as f64;

    let ln_head = c.ln() + lambda.ln() - ln_delta;
    let ln_statement = power * (ln_head - softplus(kappa * ln_delta + ln_weight));
    let ln_two_term = log_add_exp(alpha * ln_delta, top * ln_delta);
    let ln_proof = power * (ln_head - softplus(ln_two_term + ln_weight));

    Ok(LifespanResult {
        t_statement: ln_statement.exp(),
        t_proof: ln_proof.exp(),
        log10_t_statement: ln_statement / std::f64::consts::LN_10,
        log10_t_proof: ln_proof / std::f64::consts::LN_10,
        kappa,
        c_used: c,
    })
}
