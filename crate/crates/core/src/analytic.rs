//! Closed-form expected ruin times for the two-regime surplus model with
//! exponential claims.
//!
//! With switching rates `q₁, q₂`, claim intensities `λ₁, λ₂`, common claim
//! mean `μ` and premium rate 1, the expected ruin time from reserve `u` is
//!
//! ```text
//! ξ₁(u) = A₁ + u/(η − 1) + B·e^{ku}
//! ξ₂(u) = A₂ + u/(η − 1) + B·D(k)·e^{ku}
//! ```
//!
//! where `η = Σ πᵢλᵢμ`, `k` is the unique negative root of a cubic, and
//! `(A₁, B, A₂)` solves a 3×3 linear system. Valid only when ruin is
//! certain, i.e. `ρ = 1/η − 1 < 0`.

use crate::ctmc::GeneratorMatrix;
use crate::linalg::{self, Matrix};
use crate::models::SurplusParams;
use crate::{Error, Result};

/// Residual bound promised for the cubic root and the coefficient system.
pub const RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RuinModelInputs {
    pub q1: f64,
    pub q2: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub claim_mean: f64,
}

impl RuinModelInputs {
    pub fn new(q1: f64, q2: f64, lambda1: f64, lambda2: f64, claim_mean: f64) -> Result<Self> {
        for (name, v) in [
            ("q1", q1),
            ("q2", q2),
            ("lambda1", lambda1),
            ("lambda2", lambda2),
            ("claim_mean", claim_mean),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and positive, got {v}"
                )));
            }
        }
        Ok(Self {
            q1,
            q2,
            lambda1,
            lambda2,
            claim_mean,
        })
    }

    /// `q = (1, 1)`, `λ = (1, 2)`, `μ = 1`.
    pub fn reference() -> Self {
        Self::new(1.0, 1.0, 1.0, 2.0, 1.0).expect("valid")
    }

    pub fn is_reference(&self) -> bool {
        *self == Self::reference()
    }

    /// Reads the two-regime inputs off a surplus model. The generator's
    /// off-diagonal rates become `q₁, q₂`.
    pub fn from_surplus(p: &SurplusParams) -> Result<Self> {
        if p.generator.n_regimes() != 2 {
            return Err(Error::InvalidParameter(format!(
                "closed-form ruin times need exactly 2 regimes, got {}",
                p.generator.n_regimes()
            )));
        }
        p.generator.stationary_distribution()?;
        Self::new(
            p.generator.rate(0, 1),
            p.generator.rate(1, 0),
            p.claim_intensity[0],
            p.claim_intensity[1],
            p.claim_mean,
        )
    }

    pub fn generator(&self) -> GeneratorMatrix {
        GeneratorMatrix::new(&[vec![-self.q1, self.q1], vec![self.q2, -self.q2]])
            .expect("positive rates form a valid generator")
    }

    /// `ρᵢ = 1/μ − λᵢ`.
    pub fn rho_i(&self) -> (f64, f64) {
        let inv = 1.0 / self.claim_mean;
        (inv - self.lambda1, inv - self.lambda2)
    }

    /// Monic coefficients `[a₂, a₁, a₀]` of `P(k) = k³ + a₂k² + a₁k + a₀`.
    pub fn cubic_coefficients(&self) -> [f64; 3] {
        let (r1, r2) = self.rho_i();
        let (q1, q2, mu) = (self.q1, self.q2, self.claim_mean);
        [
            r1 + r2 - q1 - q2,
            r1 * r2 - r1 * q2 - r2 * q1 - q1 / mu - q2 / mu,
            -r1 * q2 / mu - r2 * q1 / mu,
        ]
    }

    pub fn cubic(&self, k: f64) -> f64 {
        let [a2, a1, a0] = self.cubic_coefficients();
        ((k + a2) * k + a1) * k + a0
    }
}

/// Safety loading `η = Σ πᵢλᵢμ` and `ρ = 1/η − 1`.
pub fn eta_rho(pi: [f64; 2], lambda1: f64, lambda2: f64, claim_mean: f64) -> Result<(f64, f64)> {
    let eta = pi[0] * lambda1 * claim_mean + pi[1] * lambda2 * claim_mean;
    let rho = 1.0 / eta - 1.0;
    if !(rho < 0.0) {
        return Err(Error::NotRuinCertain { eta, rho });
    }
    Ok((eta, rho))
}

/// Real roots of `x³ + a x² + b x + c`, ascending, repeated by
/// multiplicity.
pub fn real_cubic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    use std::f64::consts::PI;

    // x = t − a/3 gives t³ + p t + q.
    let shift = a / 3.0;
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let disc = -(4.0 * p * p * p + 27.0 * q * q);
    let scale = (4.0 * p * p * p).abs().max(27.0 * q * q).max(f64::MIN_POSITIVE);

    let mut roots = if disc.abs() <= 1e-14 * scale {
        if p.abs() < 1e-300 {
            vec![0.0; 3]
        } else {
            let double = -3.0 * q / (2.0 * p);
            let single = 3.0 * q / p;
            vec![double, double, single]
        }
    } else if disc > 0.0 {
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        (0..3)
            .map(|j| m * (theta - 2.0 * PI * j as f64 / 3.0).cos())
            .collect()
    } else {
        let s = (q * q / 4.0 + p * p * p / 27.0).sqrt();
        vec![(-q / 2.0 + s).cbrt() + (-q / 2.0 - s).cbrt()]
    };
    roots.iter_mut().for_each(|t| *t -= shift);
    roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
    roots
}

/// The unique negative root `k` of the ruin-time cubic.
///
/// Closed form first; if its residual exceeds [`RESIDUAL_TOL`], bisection
/// on `[−R, 0]` with `R` the Cauchy root bound.
pub fn solve_negative_root(inputs: &RuinModelInputs) -> Result<f64> {
    let [a2, a1, a0] = inputs.cubic_coefficients();
    let negatives: Vec<f64> = real_cubic_roots(a2, a1, a0)
        .into_iter()
        .filter(|&r| r < 0.0)
        .collect();
    if negatives.len() != 1 {
        return Err(Error::RootCountViolation {
            count: negatives.len(),
        });
    }
    let k = negatives[0];
    if inputs.cubic(k).abs() <= RESIDUAL_TOL {
        return Ok(k);
    }

    let bound = 1.0 + a2.abs().max(a1.abs()).max(a0.abs());
    let (mut lo, mut hi) = (-bound, 0.0);
    let f_lo = inputs.cubic(lo);
    if f_lo.signum() == inputs.cubic(hi).signum() {
        return Err(Error::RootCountViolation { count: 0 });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if inputs.cubic(mid).signum() == f_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `D(k) = (q₁ + k(μq₁ + μλ₁ − 1) − k²μ) / (q₁ + kμq₁)`.
pub fn compute_d(inputs: &RuinModelInputs, k: f64) -> Result<f64> {
    let RuinModelInputs {
        q1,
        lambda1,
        claim_mean: mu,
        ..
    } = *inputs;
    let den = q1 + k * mu * q1;
    if den.abs() <= 1e-14 * q1.abs().max((k * mu * q1).abs()) {
        return Err(Error::DenominatorZero("D(k)"));
    }
    Ok((q1 + k * (mu * q1 + mu * lambda1 - 1.0) - k * k * mu) / den)
}

/// Solves for `(A₁, B, A₂)` and returns them with the max-norm residual.
pub fn solve_coefficients(
    inputs: &RuinModelInputs,
    k: f64,
    d: f64,
    eta: f64,
) -> Result<([f64; 3], f64)> {
    let mu = inputs.claim_mean;
    let kmu1 = k * mu + 1.0;
    if kmu1.abs() <= 1e-14 {
        return Err(Error::DenominatorZero("k·μ + 1"));
    }
    let q1 = inputs.q1;
    let a = Matrix::from_rows(&[
        vec![q1, 0.0, -q1],
        vec![1.0, 1.0 / kmu1, 0.0],
        vec![0.0, d / kmu1, 1.0],
    ]);
    let scale = 1.0 / (eta - 1.0);
    let rhs = [
        scale * (eta - inputs.lambda1 * mu),
        scale * mu,
        scale * mu,
    ];
    let x = linalg::solve(&a, &rhs)?;
    let res = linalg::residual(&a, &x, &rhs);
    Ok(([x[0], x[1], x[2]], res))
}

/// Every quantity behind the closed-form expected ruin times.
#[derive(Debug, Clone, PartialEq)]
pub struct RuinAnalytics {
    pub inputs: RuinModelInputs,
    pub pi: [f64; 2],
    pub eta: f64,
    pub rho: f64,
    pub k: f64,
    pub d: f64,
    pub a1: f64,
    pub b: f64,
    pub a2: f64,
    /// `|P(k)|`.
    pub cubic_residual: f64,
    /// Max-norm residual of the coefficient system.
    pub system_residual: f64,
}

impl RuinAnalytics {
    pub fn new(inputs: RuinModelInputs) -> Result<Self> {
        let pi = inputs.generator().stationary_distribution()?;
        let pi = [pi[0], pi[1]];
        let (eta, rho) = eta_rho(pi, inputs.lambda1, inputs.lambda2, inputs.claim_mean)?;
        let k = solve_negative_root(&inputs)?;
        let d = compute_d(&inputs, k)?;
        let ([a1, b, a2], system_residual) = solve_coefficients(&inputs, k, d, eta)?;
        Ok(Self {
            inputs,
            pi,
            eta,
            rho,
            k,
            d,
            a1,
            b,
            a2,
            cubic_residual: inputs.cubic(k).abs(),
            system_residual,
        })
    }

    /// `ξ_state(u)` for starting regime `state` (0 or 1).
    pub fn expected_ruin_time(&self, u: f64, state: usize) -> f64 {
        let decay = self.b * (self.k * u).exp();
        let linear = self.a1_or_a2(state) + u / (self.eta - 1.0);
        match state {
            0 => linear + decay,
            _ => linear + self.d * decay,
        }
    }

    fn a1_or_a2(&self, state: usize) -> f64 {
        if state == 0 {
            self.a1
        } else {
            self.a2
        }
    }
}

/// Fixed reference constants for the reference configuration, kept so the
/// corresponding exact column can be regenerated digit for digit.
///
/// This `B` is not what the coefficient system yields for these inputs;
/// [`RuinAnalytics`] is the computed counterpart.
pub mod printed {
    pub const K: f64 = -0.6751309;
    pub const A1: f64 = 2.712742;
    pub const B: f64 = 1.481194;
    /// `1/(η − 1)` with `η = 3/2`.
    pub const SLOPE: f64 = 2.0;

    /// `ξ₁(u)` from the fixed constants.
    pub fn xi1(u: f64) -> f64 {
        A1 + SLOPE * u + B * (K * u).exp()
    }
}
