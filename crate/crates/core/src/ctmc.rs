//! Continuous-time Markov chain machinery for the regime process.
//!
//! Regimes are indexed from 0 in this API. User-facing formats (config
//! files, CSV output) use 1-based labels and convert at the boundary.

use std::collections::HashMap;

use rand::Rng;

use crate::grid::TimeGrid;
use crate::linalg::{self, Matrix};
use crate::{Error, Result};

/// Row sums of a generator must vanish to this absolute tolerance.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// Negative transition probabilities above this value are roundoff and get
/// clipped to zero; anything more negative is an error.
pub const CLIP_TOL: f64 = 1e-12;

/// A validated CTMC generator `Q = (q_ij)` over `n` regimes.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorMatrix {
    rates: Matrix,
}

impl GeneratorMatrix {
    /// Validates `rates` as a generator. The input is not modified.
    pub fn new(rates: &[Vec<f64>]) -> Result<Self> {
        let n = rates.len();
        if n == 0 {
            return Err(Error::NotSquare {
                rows: 0,
                bad_row: 0,
                cols: 0,
            });
        }
        for (i, row) in rates.iter().enumerate() {
            if row.len() != n {
                return Err(Error::NotSquare {
                    rows: n,
                    bad_row: i,
                    cols: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFiniteRate {
                        row: i,
                        col: j,
                        value: v,
                    });
                }
                if i != j && v < 0.0 {
                    return Err(Error::NegativeOffDiagonal {
                        row: i,
                        col: j,
                        value: v,
                    });
                }
            }
            let sum: f64 = row.iter().sum();
            if sum.abs() > ROW_SUM_TOL {
                return Err(Error::RowSumViolation { row: i, sum });
            }
        }
        Ok(Self {
            rates: Matrix::from_rows(rates),
        })
    }

    /// The generator with all rates zero (every regime absorbing).
    pub fn zero(n: usize) -> Self {
        assert!(n >= 1, "need at least one regime");
        Self {
            rates: Matrix::zeros(n),
        }
    }

    pub fn n_regimes(&self) -> usize {
        self.rates.n()
    }

    pub fn rate(&self, i: usize, j: usize) -> f64 {
        self.rates[(i, j)]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rates.to_rows()
    }

    pub fn check_regime(&self, index: usize) -> Result<()> {
        if index < self.n_regimes() {
            Ok(())
        } else {
            Err(Error::InvalidRegime {
                index,
                n_regimes: self.n_regimes(),
            })
        }
    }

    /// `exp(dt·Q)` by scaling and squaring with a truncated Taylor kernel.
    pub fn transition_matrix(&self, dt: f64) -> Result<TransitionMatrix> {
        if !(dt >= 0.0) || !dt.is_finite() {
            return Err(Error::InvalidTimeSpan(dt));
        }
        let n = self.n_regimes();
        let a = self.rates.scaled(dt);
        let norm = a.norm_inf();

        // Smallest s with ‖A‖/2^s ≤ 0.5.
        let mut squarings = 0u32;
        while norm / 2f64.powi(squarings as i32) > 0.5 {
            squarings += 1;
        }
        let a = a.scaled(1.0 / 2f64.powi(squarings as i32));

        // ‖A‖ ≤ 0.5 so 0.5^k/k! drops below 1e-17 well before k = 20.
        let mut sum = Matrix::identity(n);
        let mut term = Matrix::identity(n);
        for k in 1..=20 {
            term = term.matmul(&a).scaled(1.0 / k as f64);
            sum.add_assign(&term);
            if term.norm_inf() < 1e-18 {
                break;
            }
        }
        for _ in 0..squarings {
            sum = sum.matmul(&sum);
        }

        for i in 0..n {
            let row = sum.row_mut(i);
            for (j, p) in row.iter_mut().enumerate() {
                if *p < 0.0 {
                    if *p < -CLIP_TOL {
                        return Err(Error::NegativeProbability {
                            row: i,
                            col: j,
                            value: *p,
                        });
                    }
                    *p = 0.0;
                }
            }
            let total: f64 = row.iter().sum();
            row.iter_mut().for_each(|p| *p /= total);
        }
        Ok(TransitionMatrix { probs: sum, dt })
    }

    /// Solves `πQ = 0, Σπ = 1` with one balance equation replaced by the
    /// normalization.
    ///
    /// Fails with [`Error::Reducible`] if the linear system is rank
    /// deficient or if some regime gets zero long-run mass (transient
    /// states), since either means Q is not irreducible.
    pub fn stationary_distribution(&self) -> Result<Vec<f64>> {
        let n = self.n_regimes();
        let mut a = self.rates.transpose();
        a.row_mut(n - 1).iter_mut().for_each(|v| *v = 1.0);
        let mut rhs = vec![0.0; n];
        rhs[n - 1] = 1.0;
        let pi = linalg::solve(&a, &rhs).map_err(|e| match e {
            Error::SingularSystem { column, .. } => Error::Reducible(format!(
                "balance equations are rank deficient at column {column}"
            )),
            other => other,
        })?;
        if let Some((i, p)) = pi.iter().enumerate().find(|(_, &p)| !(p > 1e-12)) {
            return Err(Error::Reducible(format!(
                "regime {i} has stationary mass {p}"
            )));
        }
        Ok(pi)
    }
}

/// One-step transition probabilities `exp(dt·Q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    probs: Matrix,
    dt: f64,
}

impl TransitionMatrix {
    pub fn n_regimes(&self) -> usize {
        self.probs.n()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn prob(&self, from: usize, to: usize) -> f64 {
        self.probs[(from, to)]
    }

    pub fn row(&self, from: usize) -> &[f64] {
        self.probs.row(from)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.probs.to_rows()
    }

    /// Inverse-CDF step of the discrete chain: returns the state `j` with
    /// `Σ_{l<j} P(current,l) ≤ u < Σ_{l≤j} P(current,l)`. Whatever mass is
    /// left past the second-to-last state goes to the last one.
    pub fn sample_next(&self, current: usize, u: f64) -> usize {
        let row = self.row(current);
        let last = row.len() - 1;
        let mut acc = 0.0;
        for (j, p) in row[..last].iter().enumerate() {
            acc += p;
            if u < acc {
                return j;
            }
        }
        last
    }
}

/// Free-function form of [`TransitionMatrix::sample_next`].
pub fn sample_next_regime(p: &TransitionMatrix, current: usize, u: f64) -> usize {
    p.sample_next(current, u)
}

/// Cache key: the gap rounded to 15 significant digits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct GapKey {
    exponent: i32,
    mantissa: i64,
}

impl GapKey {
    fn new(gap: f64) -> Self {
        if gap == 0.0 {
            return Self {
                exponent: i32::MIN,
                mantissa: 0,
            };
        }
        let exponent = gap.abs().log10().floor() as i32;
        let mantissa = (gap / 10f64.powi(exponent - 14)).round() as i64;
        Self { exponent, mantissa }
    }
}

/// Memoizes transition matrices per distinct gap length along one path.
#[derive(Debug)]
pub struct TransitionCache<'a> {
    generator: &'a GeneratorMatrix,
    cache: HashMap<GapKey, TransitionMatrix>,
}

impl<'a> TransitionCache<'a> {
    pub fn new(generator: &'a GeneratorMatrix) -> Self {
        Self {
            generator,
            cache: HashMap::new(),
        }
    }

    pub fn get(&mut self, gap: f64) -> Result<&TransitionMatrix> {
        let key = GapKey::new(gap);
        if !self.cache.contains_key(&key) {
            let p = self.generator.transition_matrix(gap)?;
            self.cache.insert(key, p);
        }
        Ok(&self.cache[&key])
    }

    pub fn len(&self) -> usize {
        self.cache.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cache.is_empty()
    }
}

/// Simulates `r(t_k)` on every grid point starting from `initial`.
///
/// Consumes exactly one uniform per gap, whatever the number of regimes.
pub fn sample_regime_path<R: Rng + ?Sized>(
    generator: &GeneratorMatrix,
    grid: &TimeGrid,
    initial: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    generator.check_regime(initial)?;
    let mut cache = TransitionCache::new(generator);
    let mut path = Vec::with_capacity(grid.len());
    let mut current = initial;
    path.push(current);
    for gap in grid.gaps() {
        let u: f64 = rng.random();
        current = cache.get(gap)?.sample_next(current, u);
        path.push(current);
    }
    Ok(path)
}
