//! Built-in models: the regime-switching geometric Lévy process, which has
//! a closed-form solution, and the Markov-modulated insurance surplus.

use rand::Rng;

use crate::ctmc::GeneratorMatrix;
use crate::drivers::{realize_drivers, DriverRealization, JumpSpec, MarkDistribution, RngStream};
use crate::scheme::{CoefficientSet, SimulatedPath};
use crate::{Error, Result};

fn check_len(name: &str, v: &[f64], n: usize) -> Result<()> {
    if v.len() != n {
        return Err(Error::InvalidParameter(format!(
            "{name} has {} entries for {n} regimes",
            v.len()
        )));
    }
    if let Some(x) = v.iter().find(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter(format!("{name} contains {x}")));
    }
    Ok(())
}

/// `dy = y·μ(r) dt + y·σ(r) dW + y(t⁻)·g(r) dN` with `N` Poisson(λ).
#[derive(Debug, Clone, PartialEq)]
pub struct GeometricLevyParams {
    pub generator: GeneratorMatrix,
    pub drift: Vec<f64>,
    pub volatility: Vec<f64>,
    pub jump_factor: Vec<f64>,
    pub intensity: f64,
    pub y0: f64,
    pub initial_regime: usize,
}

impl GeometricLevyParams {
    pub fn new(
        generator: GeneratorMatrix,
        drift: Vec<f64>,
        volatility: Vec<f64>,
        jump_factor: Vec<f64>,
        intensity: f64,
        y0: f64,
        initial_regime: usize,
    ) -> Result<Self> {
        let n = generator.n_regimes();
        check_len("drift", &drift, n)?;
        check_len("volatility", &volatility, n)?;
        check_len("jump_factor", &jump_factor, n)?;
        if let Some(g) = jump_factor.iter().find(|&&g| !(g > -1.0)) {
            return Err(Error::InvalidParameter(format!(
                "jump factor {g} must exceed -1 to keep the state positive"
            )));
        }
        if !(intensity > 0.0) || !intensity.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "jump intensity must be positive, got {intensity}"
            )));
        }
        if !(y0 > 0.0) || !y0.is_finite() {
            return Err(Error::InvalidParameter(format!("y0 must be positive, got {y0}")));
        }
        generator.check_regime(initial_regime)?;
        Ok(Self {
            generator,
            drift,
            volatility,
            jump_factor,
            intensity,
            y0,
            initial_regime,
        })
    }

    /// The two-regime reference configuration for strong-error studies.
    pub fn reference() -> Self {
        let q = GeneratorMatrix::new(&[vec![-0.5, 0.5], vec![0.5, -0.5]]).expect("valid");
        Self::new(q, vec![0.15, 0.05], vec![0.1, 0.1], vec![-0.2, -0.1], 1.0, 10.0, 0)
            .expect("valid")
    }

    /// Jump times are Poisson(λ); the mark is unused.
    pub fn jump_spec(&self) -> JumpSpec {
        JumpSpec::new(self.intensity, MarkDistribution::Degenerate(1.0)).expect("validated")
    }

    pub fn drivers(&self, horizon: f64, delta: f64, stream: &mut RngStream) -> Result<DriverRealization> {
        realize_drivers(
            &self.generator,
            &self.jump_spec(),
            horizon,
            delta,
            1,
            self.initial_regime,
            stream,
        )
    }
}

/// Coefficients `b = x·μ(i)`, `σ = x·σ(i)`, `g = x·g(i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometricLevyCoefficients {
    drift: Vec<f64>,
    volatility: Vec<f64>,
    jump_factor: Vec<f64>,
}

impl CoefficientSet for GeometricLevyCoefficients {
    fn dimension(&self) -> usize {
        1
    }

    fn drift(&self, x: &[f64], regime: usize, out: &mut [f64]) {
        out[0] = x[0] * self.drift[regime];
    }

    fn diffusion(&self, x: &[f64], regime: usize, out: &mut [f64]) {
        out[0] = x[0] * self.volatility[regime];
    }

    fn jump(&self, x: &[f64], regime: usize, _mark: f64, out: &mut [f64]) {
        out[0] = x[0] * self.jump_factor[regime];
    }
}

pub fn gl_coefficients(p: &GeometricLevyParams) -> GeometricLevyCoefficients {
    GeometricLevyCoefficients {
        drift: p.drift.clone(),
        volatility: p.volatility.clone(),
        jump_factor: p.jump_factor.clone(),
    }
}

/// Closed-form geometric Lévy solution on the drivers' grid.
///
/// Over each cell the regime is held at its left-endpoint value `r_k`:
///
/// ```text
/// y⁻_{k+1} = y_k · exp(μ(r_k)·h + σ(r_k)·ΔW − ½σ²(r_k)·h)
/// y_{k+1}  = y⁻_{k+1} · (1 + g(r_k))   at jump points
/// ```
///
/// so the oracle sees the same piecewise-constant regime as the Euler
/// scheme. Regime switches inside a cell are invisible to both.
pub fn gl_exact_path(p: &GeometricLevyParams, drivers: &DriverRealization) -> Result<SimulatedPath> {
    if drivers.dimension() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: drivers.dimension(),
        });
    }
    let grid = drivers.grid();
    let n = grid.len();
    let regimes = drivers.regimes();
    let mut states = Vec::with_capacity(n);
    let mut left = Vec::with_capacity(n);
    states.push(p.y0);
    left.push(p.y0);
    let mut y = p.y0;
    for k in 0..n - 1 {
        let i = regimes[k];
        let h = grid.gap(k);
        let dw = drivers.increment(k)[0];
        let s = p.volatility[i];
        let pre = y * (p.drift[i] * h + s * dw - 0.5 * s * s * h).exp();
        y = if grid.is_jump(k + 1) {
            pre * (1.0 + p.jump_factor[i])
        } else {
            pre
        };
        left.push(pre);
        states.push(y);
    }
    Ok(SimulatedPath::new(
        drivers.shared_grid(),
        1,
        states,
        left,
        regimes.to_vec(),
    ))
}

/// Surplus `Y(t) = u + t − Σ U_n` with exponential claims of mean `μ` and
/// claim intensity `λ_i` while the environment is in regime `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SurplusParams {
    pub generator: GeneratorMatrix,
    pub claim_intensity: Vec<f64>,
    pub claim_mean: f64,
    pub reserve: f64,
    pub initial_regime: usize,
}

impl SurplusParams {
    pub fn new(
        generator: GeneratorMatrix,
        claim_intensity: Vec<f64>,
        claim_mean: f64,
        reserve: f64,
        initial_regime: usize,
    ) -> Result<Self> {
        check_len("claim intensity", &claim_intensity, generator.n_regimes())?;
        if let Some(l) = claim_intensity.iter().find(|&&l| !(l > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "claim intensities must be positive, got {l}"
            )));
        }
        if !(claim_mean > 0.0) || !claim_mean.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "claim mean must be positive, got {claim_mean}"
            )));
        }
        if !(reserve >= 0.0) || !reserve.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "initial reserve must be nonnegative, got {reserve}"
            )));
        }
        generator.check_regime(initial_regime)?;
        Ok(Self {
            generator,
            claim_intensity,
            claim_mean,
            reserve,
            initial_regime,
        })
    }

    /// The reference surplus configuration, at reserve `u`.
    pub fn reference(reserve: f64) -> Self {
        let q = GeneratorMatrix::new(&[vec![-1.0, 1.0], vec![1.0, -1.0]]).expect("valid");
        Self::new(q, vec![1.0, 2.0], 1.0, reserve, 0).expect("valid")
    }

    pub fn with_reserve(&self, reserve: f64) -> Result<Self> {
        Self::new(
            self.generator.clone(),
            self.claim_intensity.clone(),
            self.claim_mean,
            reserve,
            self.initial_regime,
        )
    }

    pub fn max_intensity(&self) -> f64 {
        self.claim_intensity.iter().copied().fold(0.0, f64::max)
    }

    /// Probability of keeping a candidate arrival seen in `regime`.
    pub fn acceptance_probability(&self, regime: usize) -> f64 {
        self.claim_intensity[regime] / self.max_intensity()
    }

    /// Candidate arrivals at the maximal rate, thinned by regime.
    pub fn drivers(&self, horizon: f64, delta: f64, stream: &mut RngStream) -> Result<DriverRealization> {
        let spec = JumpSpec::new(
            self.max_intensity(),
            MarkDistribution::Exponential {
                mean: self.claim_mean,
            },
        )?;
        let candidates = realize_drivers(
            &self.generator,
            &spec,
            horizon,
            delta,
            1,
            self.initial_regime,
            stream,
        )?;
        Ok(thin_by_regime(&candidates, &self.claim_intensity, stream))
    }
}

/// Thins the jumps of `candidates` so the arrival rate in regime `i` is
/// `rates[i]`.
///
/// Candidates must have been generated at `max(rates)`. A candidate at grid
/// point `k` is judged by the regime at its left neighbour `k − 1`, i.e.
/// the discretized regime in force just before it. One uniform is drawn per
/// candidate, after everything else in the realization.
pub fn thin_by_regime<R: Rng + ?Sized>(
    candidates: &DriverRealization,
    rates: &[f64],
    rng: &mut R,
) -> DriverRealization {
    let max = rates.iter().copied().fold(0.0, f64::max);
    let regimes = candidates.regimes();
    let accepted: Vec<usize> = candidates
        .grid()
        .jump_indices()
        .filter(|&k| {
            let u: f64 = rng.random();
            u < rates[regimes[k - 1]] / max
        })
        .collect();
    candidates.thin(|k| accepted.binary_search(&k).is_ok())
}

/// `b ≡ 1`, `σ ≡ 0`, `g(x, i, v) = −v`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SurplusCoefficients;

impl CoefficientSet for SurplusCoefficients {
    fn dimension(&self) -> usize {
        1
    }

    fn drift(&self, _x: &[f64], _regime: usize, out: &mut [f64]) {
        out[0] = 1.0;
    }

    fn diffusion(&self, _x: &[f64], _regime: usize, out: &mut [f64]) {
        out[0] = 0.0;
    }

    fn jump(&self, _x: &[f64], _regime: usize, mark: f64, out: &mut [f64]) {
        out[0] = -mark;
    }
}

pub fn surplus_coefficients(_p: &SurplusParams) -> SurplusCoefficients {
    SurplusCoefficients
}

/// First grid time at which the path is strictly negative, or `horizon`.
///
/// The surplus only moves down at claims, so checking grid points is exact.
pub fn detect_ruin(path: &SimulatedPath, horizon: f64) -> f64 {
    let times = path.grid().points();
    (0..path.len())
        .find(|&k| path.state(k)[0] < 0.0)
        .map(|k| times[k])
        .unwrap_or(horizon)
}
