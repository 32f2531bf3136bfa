//! Digamma, polygamma and the model constants derived from `(theta, alpha)`.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Even Bernoulli numbers B_2, B_4, ..., B_14.
const BERNOULLI: [f64; 7] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
];

const DIGAMMA_SHIFT: f64 = 10.0;
const POLYGAMMA_SHIFT: f64 = 20.0;

/// Digamma function for positive real arguments.
pub fn digamma(z: f64) -> Result<f64> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::Domain(format!("digamma needs z > 0, got {z}")));
    }
    let mut z = z;
    let mut acc = 0.0;
    while z < DIGAMMA_SHIFT {
        acc -= 1.0 / z;
        z += 1.0;
    }
    let z2 = 1.0 / (z * z);
    let mut series = 0.0;
    let mut pow = z2;
    for (k, b) in BERNOULLI.iter().enumerate() {
        let two_k = 2.0 * (k as f64 + 1.0);
        series += b / two_k * pow;
        pow *= z2;
    }
    Ok(acc + z.ln() - 0.5 / z - series)
}

/// k-th derivative of the digamma function, `1 <= k <= 4`.
pub fn polygamma(k: u32, z: f64) -> Result<f64> {
    if !(1..=4).contains(&k) {
        return Err(Error::Domain(format!("polygamma order must be in 1..=4, got {k}")));
    }
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::Domain(format!("polygamma needs z > 0, got {z}")));
    }
    let kf = k as f64;
    let k_fact = factorial(k);
    let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
    let mut z = z;
    let mut acc = 0.0;
    while z < POLYGAMMA_SHIFT {
        acc += z.powi(-(k as i32) - 1);
        z += 1.0;
    }
    acc *= k_fact;
    // asymptotic tail
    let mut tail = factorial(k - 1) / z.powf(kf) + k_fact / (2.0 * z.powf(kf + 1.0));
    for (j, b) in BERNOULLI.iter().enumerate() {
        let two_j = 2 * (j as u32 + 1);
        let coef = factorial(two_j + k - 1) / factorial(two_j);
        tail += b * coef / z.powi((two_j + k) as i32);
    }
    Ok(sign * (acc + tail))
}

pub fn trigamma(z: f64) -> Result<f64> {
    polygamma(1, z)
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Model parameters. `alpha < 0` is the bound phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub theta: f64,
    pub alpha: f64,
}

impl ModelParams {
    pub fn new(theta: f64, alpha: f64) -> Result<Self> {
        if !(theta > 0.0) || !theta.is_finite() {
            return Err(Error::Domain("theta must be positive".into()));
        }
        if !alpha.is_finite() || !(alpha > -theta) {
            return Err(Error::Domain("alpha must exceed -theta".into()));
        }
        Ok(ModelParams { theta, alpha })
    }

    pub fn is_bound_phase(&self) -> bool {
        self.alpha < 0.0
    }

    /// Errors unless `alpha < 0`.
    pub fn require_bound_phase(&self) -> Result<()> {
        if self.is_bound_phase() {
            Ok(())
        } else {
            Err(Error::Domain("bound phase requires alpha < 0".into()))
        }
    }

    pub fn constants(&self) -> Result<Constants> {
        constants(*self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    /// Free-energy slope.
    pub r: f64,
    pub tau: f64,
    pub sigma2: f64,
    pub walk_var: f64,
    /// `delta_k` without the `-log 2 / 2k` term.
    pub delta_inf: f64,
}

impl Constants {
    pub fn delta_k(&self, k: u32) -> f64 {
        assert!(k >= 1, "delta_k needs k >= 1");
        self.delta_inf - LN_2 / (2.0 * k as f64)
    }

    /// Smallest `k` with `delta_k > 0`, if any.
    pub fn k_star(&self) -> Option<u32> {
        if !(self.delta_inf > 0.0) {
            return None;
        }
        let mut k = ((LN_2 / (2.0 * self.delta_inf)).floor() as u32).max(1);
        while self.delta_k(k) <= 0.0 {
            k += 1;
        }
        while k > 1 && self.delta_k(k - 1) > 0.0 {
            k -= 1;
        }
        Some(k)
    }

    pub fn sigma(&self) -> f64 {
        self.sigma2.sqrt()
    }
}

pub fn constants(params: ModelParams) -> Result<Constants> {
    let ModelParams { theta, alpha } = params;
    let psi_plus = digamma(theta + alpha)?;
    let psi_theta = digamma(theta)?;
    let tri_plus = trigamma(theta + alpha)?;
    // theta - alpha may be non-positive when alpha >= theta; report it only when used.
    let (psi_minus, tri_minus) = if theta - alpha > 0.0 {
        (digamma(theta - alpha)?, trigamma(theta - alpha)?)
    } else {
        return Err(Error::Domain(format!(
            "constants need theta - alpha > 0, got {}",
            theta - alpha
        )));
    };
    Ok(Constants {
        r: -psi_plus - psi_minus,
        tau: psi_minus - psi_plus,
        sigma2: tri_plus - tri_minus,
        walk_var: tri_plus + tri_minus,
        delta_inf: psi_theta - 0.5 * (psi_plus + psi_minus),
    })
}
