//! Random drivers for one trajectory.
//!
//! A [`DriverRealization`] bundles everything random about a path: the
//! jump-adapted grid, Brownian increments per cell, jump marks, and the
//! sampled regime at each grid point. The Euler scheme and any exact-solution
//! oracle consume the same realization, so their difference is pure
//! discretization error.

use std::sync::Arc;

use rand::distr::weighted::WeightedIndex;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};

use crate::ctmc::{sample_regime_path, GeneratorMatrix};
use crate::grid::{build_grid, TimeGrid};
use crate::{Error, Result};

/// Identifies a stream: the same pair always reproduces the same numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamId {
    pub master_seed: u64,
    pub index: u64,
}

/// A ChaCha8 stream keyed by `(master_seed, index)`.
///
/// The seed selects the key and the index selects ChaCha's 64-bit stream
/// counter, so distinct indices never overlap.
#[derive(Debug, Clone)]
pub struct RngStream {
    id: StreamId,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn id(&self) -> StreamId {
        self.id
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

pub fn make_stream(master_seed: u64, index: u64) -> RngStream {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    RngStream {
        id: StreamId { master_seed, index },
        rng,
    }
}

/// Derives a child seed, e.g. one per row of a study, via SplitMix64.
pub fn derive_seed(master_seed: u64, label: u64) -> u64 {
    let mut z = master_seed ^ label.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq)]
pub enum MarkDistribution {
    /// Point mass.
    Degenerate(f64),
    Exponential { mean: f64 },
    /// Finite support with probabilities summing to 1.
    Empirical { values: Vec<f64>, weights: Vec<f64> },
}

/// Compound Poisson jump specification: arrival intensity and mark law.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpSpec {
    intensity: f64,
    marks: MarkDistribution,
}

impl JumpSpec {
    pub fn new(intensity: f64, marks: MarkDistribution) -> Result<Self> {
        if !(intensity > 0.0) || !intensity.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "jump intensity must be finite and positive, got {intensity}"
            )));
        }
        match &marks {
            MarkDistribution::Degenerate(v) if !v.is_finite() => {
                return Err(Error::InvalidParameter(format!("degenerate mark {v} not finite")));
            }
            MarkDistribution::Exponential { mean } if !(*mean > 0.0) || !mean.is_finite() => {
                return Err(Error::InvalidParameter(format!(
                    "exponential mark mean must be positive, got {mean}"
                )));
            }
            MarkDistribution::Empirical { values, weights } => {
                if values.is_empty() || values.len() != weights.len() {
                    return Err(Error::InvalidParameter(
                        "empirical marks need equally many values and weights".into(),
                    ));
                }
                if weights.iter().any(|w| !(*w >= 0.0)) {
                    return Err(Error::InvalidParameter("negative empirical weight".into()));
                }
                let total: f64 = weights.iter().sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidParameter(format!(
                        "empirical weights sum to {total}, expected 1"
                    )));
                }
            }
            _ => {}
        }
        Ok(Self { intensity, marks })
    }

    pub fn intensity(&self) -> f64 {
        self.intensity
    }

    pub fn marks(&self) -> &MarkDistribution {
        &self.marks
    }
}

/// Arrival times of a Poisson(λ) process on `(0, T]`. Arrivals past `T`
/// are dropped, not clamped onto `T`.
pub fn sample_jump_times<R: Rng + ?Sized>(spec: &JumpSpec, horizon: f64, rng: &mut R) -> Vec<f64> {
    let exp = Exp::new(spec.intensity).expect("intensity validated positive");
    let mut times = Vec::new();
    let mut t = 0.0;
    loop {
        let gap: f64 = exp.sample(rng);
        if gap == 0.0 {
            continue;
        }
        t += gap;
        if t > horizon {
            return times;
        }
        times.push(t);
    }
}

pub fn sample_marks<R: Rng + ?Sized>(spec: &JumpSpec, count: usize, rng: &mut R) -> Vec<f64> {
    match &spec.marks {
        MarkDistribution::Degenerate(v) => vec![*v; count],
        MarkDistribution::Exponential { mean } => {
            let exp = Exp::new(1.0 / mean).expect("mean validated positive");
            (0..count).map(|_| exp.sample(rng)).collect()
        }
        MarkDistribution::Empirical { values, weights } => {
            let idx = WeightedIndex::new(weights).expect("weights validated");
            (0..count).map(|_| values[idx.sample(rng)]).collect()
        }
    }
}

/// Independent `N(0, gap)` components, `dimension` per cell, cell-major.
pub fn sample_brownian_increments<R: Rng + ?Sized>(
    grid: &TimeGrid,
    dimension: usize,
    rng: &mut R,
) -> Vec<f64> {
    let mut out = Vec::with_capacity(grid.len().saturating_sub(1) * dimension);
    for gap in grid.gaps() {
        let sd = gap.sqrt();
        for _ in 0..dimension {
            let z: f64 = rng.sample(StandardNormal);
            out.push(sd * z);
        }
    }
    out
}

/// All randomness behind one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct DriverRealization {
    grid: Arc<TimeGrid>,
    dimension: usize,
    brownian: Vec<f64>,
    jump_times: Vec<f64>,
    jump_marks: Vec<f64>,
    /// Grid index of each jump, aligned with `jump_times`.
    jump_slots: Vec<usize>,
    regimes: Vec<usize>,
    stream: Option<StreamId>,
}

impl DriverRealization {
    /// Assembles a realization from explicit parts, checking that they line
    /// up: one increment vector per cell, one regime per point, one mark per
    /// flagged point, and flagged points equal to the jump times.
    pub fn from_parts(
        grid: TimeGrid,
        dimension: usize,
        brownian: Vec<f64>,
        jump_marks: Vec<f64>,
        regimes: Vec<usize>,
        stream: Option<StreamId>,
    ) -> Result<Self> {
        let cells = grid.len().saturating_sub(1);
        if dimension == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        if brownian.len() != cells * dimension {
            return Err(Error::DimensionMismatch {
                expected: cells * dimension,
                got: brownian.len(),
            });
        }
        if regimes.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                got: regimes.len(),
            });
        }
        let jump_slots: Vec<usize> = grid.jump_indices().collect();
        if jump_marks.len() != jump_slots.len() {
            return Err(Error::DimensionMismatch {
                expected: jump_slots.len(),
                got: jump_marks.len(),
            });
        }
        let jump_times = jump_slots.iter().map(|&k| grid.points()[k]).collect();
        Ok(Self {
            grid: Arc::new(grid),
            dimension,
            brownian,
            jump_times,
            jump_marks,
            jump_slots,
            regimes,
            stream,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub(crate) fn shared_grid(&self) -> Arc<TimeGrid> {
        Arc::clone(&self.grid)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Brownian increment over cell `k`, i.e. `W(t_{k+1}) − W(t_k)`.
    pub fn increment(&self, k: usize) -> &[f64] {
        &self.brownian[k * self.dimension..(k + 1) * self.dimension]
    }

    pub fn brownian_increments(&self) -> &[f64] {
        &self.brownian
    }

    pub fn jump_times(&self) -> &[f64] {
        &self.jump_times
    }

    pub fn jump_marks(&self) -> &[f64] {
        &self.jump_marks
    }

    /// The mark attached to grid point `k`, if it is a jump point.
    pub fn mark_at(&self, k: usize) -> Option<f64> {
        if !self.grid.is_jump(k) {
            return None;
        }
        self.jump_slots
            .binary_search(&k)
            .ok()
            .map(|j| self.jump_marks[j])
    }

    pub fn regimes(&self) -> &[usize] {
        &self.regimes
    }

    pub fn stream(&self) -> Option<StreamId> {
        self.stream
    }

    /// Keeps only the jumps whose grid index passes `keep`; the rest stay
    /// as ordinary grid points with no jump.
    pub fn thin(&self, keep: impl Fn(usize) -> bool) -> DriverRealization {
        let (jump_slots, jump_marks): (Vec<usize>, Vec<f64>) = self
            .jump_slots
            .iter()
            .zip(&self.jump_marks)
            .filter(|(k, _)| keep(**k))
            .map(|(k, m)| (*k, *m))
            .unzip();
        let grid = self.grid.retain_flags(|k| jump_slots.binary_search(&k).is_ok());
        let jump_times = jump_slots.iter().map(|&k| grid.points()[k]).collect();
        DriverRealization {
            grid: Arc::new(grid),
            jump_times,
            jump_marks,
            jump_slots,
            ..self.clone()
        }
    }
}

/// Draws one full realization.
///
/// The stream is consumed in a fixed order: jump times, regimes, Brownian
/// increments, marks. Reordering would change every stored result.
#[allow(clippy::too_many_arguments)]
pub fn realize_drivers(
    generator: &GeneratorMatrix,
    spec: &JumpSpec,
    horizon: f64,
    delta: f64,
    dimension: usize,
    initial_regime: usize,
    stream: &mut RngStream,
) -> Result<DriverRealization> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::InvalidHorizon(horizon));
    }
    generator.check_regime(initial_regime)?;
    let jumps = sample_jump_times(spec, horizon, stream);
    let grid = build_grid(horizon, delta, &jumps)?;
    let regimes = sample_regime_path(generator, &grid, initial_regime, stream)?;
    let brownian = sample_brownian_increments(&grid, dimension, stream);
    let n_jumps = grid.jump_indices().count();
    let marks = sample_marks(spec, n_jumps, stream);
    DriverRealization::from_parts(grid, dimension, brownian, marks, regimes, Some(stream.id()))
}
