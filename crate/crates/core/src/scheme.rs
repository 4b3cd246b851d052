//! The jump-adapted Euler scheme.
//!
//! On each cell `[t_k, t_{k+1})` of the grid,
//!
//! ```text
//! X⁻_{k+1} = X_k + b(X_k, r_k)·(t_{k+1} − t_k) + σ(X_k, r_k)·ΔW_k
//! X_{k+1}  = X⁻_{k+1} + g(X_k, r_k, v)      if t_{k+1} is a jump with mark v
//! ```
//!
//! All coefficients, including the jump coefficient, are frozen at the
//! cell's left endpoint `(X_k, r_k)`.

use std::sync::Arc;

use crate::drivers::DriverRealization;
use crate::grid::TimeGrid;
use crate::{Error, Result};

/// Drift, diffusion and jump coefficients of a regime-switching jump SDE.
///
/// Implementations are expected to be globally Lipschitz with linear growth
/// in `x` for every regime. That is not checked at runtime.
pub trait CoefficientSet: Send + Sync {
    fn dimension(&self) -> usize;

    /// `b(x, i)`, written into `out` (length d).
    fn drift(&self, x: &[f64], regime: usize, out: &mut [f64]);

    /// `σ(x, i)` as a row-major d×d matrix.
    fn diffusion(&self, x: &[f64], regime: usize, out: &mut [f64]);

    /// `g(x, i, v)` for jump mark `v`.
    fn jump(&self, x: &[f64], regime: usize, mark: f64, out: &mut [f64]);
}

/// Coefficients backed by closures.
pub struct FnCoefficients<B, S, G> {
    dimension: usize,
    drift: B,
    diffusion: S,
    jump: G,
}

impl<B, S, G> FnCoefficients<B, S, G>
where
    B: Fn(&[f64], usize, &mut [f64]) + Send + Sync,
    S: Fn(&[f64], usize, &mut [f64]) + Send + Sync,
    G: Fn(&[f64], usize, f64, &mut [f64]) + Send + Sync,
{
    pub fn new(dimension: usize, drift: B, diffusion: S, jump: G) -> Self {
        Self {
            dimension,
            drift,
            diffusion,
            jump,
        }
    }
}

impl<B, S, G> CoefficientSet for FnCoefficients<B, S, G>
where
    B: Fn(&[f64], usize, &mut [f64]) + Send + Sync,
    S: Fn(&[f64], usize, &mut [f64]) + Send + Sync,
    G: Fn(&[f64], usize, f64, &mut [f64]) + Send + Sync,
{
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn drift(&self, x: &[f64], regime: usize, out: &mut [f64]) {
        (self.drift)(x, regime, out)
    }

    fn diffusion(&self, x: &[f64], regime: usize, out: &mut [f64]) {
        (self.diffusion)(x, regime, out)
    }

    fn jump(&self, x: &[f64], regime: usize, mark: f64, out: &mut [f64]) {
        (self.jump)(x, regime, mark, out)
    }
}

/// A path on the grid of its drivers.
///
/// `states[k]` is the right limit `X(t_k)` (post-jump at jump points);
/// the left limit `X(t_k⁻)` is kept too and differs from `states[k]` only at
/// jump points.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedPath {
    grid: Arc<TimeGrid>,
    dimension: usize,
    states: Vec<f64>,
    left_limits: Vec<f64>,
    regimes: Vec<usize>,
}

impl SimulatedPath {
    pub(crate) fn new(
        grid: Arc<TimeGrid>,
        dimension: usize,
        states: Vec<f64>,
        left_limits: Vec<f64>,
        regimes: Vec<usize>,
    ) -> Self {
        debug_assert_eq!(states.len(), grid.len() * dimension);
        debug_assert_eq!(left_limits.len(), states.len());
        debug_assert_eq!(regimes.len(), grid.len());
        Self {
            grid,
            dimension,
            states,
            left_limits,
            regimes,
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn state(&self, k: usize) -> &[f64] {
        &self.states[k * self.dimension..(k + 1) * self.dimension]
    }

    /// `X(t_k⁻)`; equal to [`state`](Self::state) away from jumps.
    pub fn left_limit(&self, k: usize) -> &[f64] {
        &self.left_limits[k * self.dimension..(k + 1) * self.dimension]
    }

    /// The pre-jump value, only at jump points.
    pub fn pre_jump_state(&self, k: usize) -> Option<&[f64]> {
        self.grid.is_jump(k).then(|| self.left_limit(k))
    }

    pub fn states(&self) -> &[f64] {
        &self.states
    }

    pub fn regimes(&self) -> &[usize] {
        &self.regimes
    }

    /// The final state `X(T)`.
    pub fn terminal(&self) -> &[f64] {
        self.state(self.len() - 1)
    }
}

struct Workspace {
    drift: Vec<f64>,
    diffusion: Vec<f64>,
    jump: Vec<f64>,
}

impl Workspace {
    fn new(d: usize) -> Self {
        Self {
            drift: vec![0.0; d],
            diffusion: vec![0.0; d * d],
            jump: vec![0.0; d],
        }
    }
}

/// One Euler step, writing the pre- and post-jump values. Returns whether
/// every output component is finite.
#[allow(clippy::too_many_arguments)]
fn step_into<C: CoefficientSet + ?Sized>(
    coeffs: &C,
    x: &[f64],
    regime: usize,
    gap: f64,
    dw: &[f64],
    mark: Option<f64>,
    ws: &mut Workspace,
    pre: &mut [f64],
    post: &mut [f64],
) -> bool {
    let d = x.len();
    coeffs.drift(x, regime, &mut ws.drift);
    coeffs.diffusion(x, regime, &mut ws.diffusion);
    for i in 0..d {
        let mut v = x[i] + ws.drift[i] * gap;
        for j in 0..d {
            v += ws.diffusion[i * d + j] * dw[j];
        }
        pre[i] = v;
    }
    match mark {
        Some(v) => {
            coeffs.jump(x, regime, v, &mut ws.jump);
            for i in 0..d {
                post[i] = pre[i] + ws.jump[i];
            }
        }
        None => post.copy_from_slice(pre),
    }
    pre.iter().chain(post.iter()).all(|v| v.is_finite())
}

/// A single step of the scheme from state `x` in regime `regime`.
///
/// Returns `(pre_jump, post_jump)`; they coincide when `jump_mark` is
/// `None`.
pub fn euler_step<C: CoefficientSet + ?Sized>(
    x: &[f64],
    regime: usize,
    gap: f64,
    dw: &[f64],
    coeffs: &C,
    jump_mark: Option<f64>,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let d = coeffs.dimension();
    if x.len() != d || dw.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: if x.len() != d { x.len() } else { dw.len() },
        });
    }
    if !(gap >= 0.0) {
        return Err(Error::InvalidTimeSpan(gap));
    }
    let mut ws = Workspace::new(d);
    let mut pre = vec![0.0; d];
    let mut post = vec![0.0; d];
    if step_into(coeffs, x, regime, gap, dw, jump_mark, &mut ws, &mut pre, &mut post) {
        Ok((pre, post))
    } else {
        Err(Error::NonFinite { step: None })
    }
}

/// Folds the Euler step over the grid of `drivers`, starting at `y0`.
pub fn simulate_path<C: CoefficientSet + ?Sized>(
    coeffs: &C,
    drivers: &DriverRealization,
    y0: &[f64],
) -> Result<SimulatedPath> {
    let d = coeffs.dimension();
    if drivers.dimension() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: drivers.dimension(),
        });
    }
    if y0.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: y0.len(),
        });
    }
    let grid = drivers.grid();
    let n = grid.len();
    let regimes = drivers.regimes();
    let mut states = vec![0.0; n * d];
    let mut left = vec![0.0; n * d];
    states[..d].copy_from_slice(y0);
    left[..d].copy_from_slice(y0);
    let mut ws = Workspace::new(d);

    for k in 0..n - 1 {
        let (done, rest) = states.split_at_mut((k + 1) * d);
        let x = &done[k * d..];
        let post = &mut rest[..d];
        let pre = &mut left[(k + 1) * d..(k + 2) * d];
        let ok = step_into(
            coeffs,
            x,
            regimes[k],
            grid.gap(k),
            drivers.increment(k),
            drivers.mark_at(k + 1),
            &mut ws,
            pre,
            post,
        );
        if !ok {
            return Err(Error::NonFinite { step: Some(k) });
        }
    }

    Ok(SimulatedPath::new(
        drivers.shared_grid(),
        d,
        states,
        left,
        regimes.to_vec(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ctmc::GeneratorMatrix;
    use crate::drivers::{make_stream, realize_drivers, JumpSpec, MarkDistribution};
    use crate::grid::build_grid;
    use proptest::prelude::*;

    fn zero_coeffs(d: usize) -> impl CoefficientSet {
        FnCoefficients::new(
            d,
            |_: &[f64], _: usize, o: &mut [f64]| o.fill(0.0),
            |_: &[f64], _: usize, o: &mut [f64]| o.fill(0.0),
            |_: &[f64], _: usize, _: f64, o: &mut [f64]| o.fill(0.0),
        )
    }

    /// dX = X dt, no noise, no jumps.
    fn growth() -> impl CoefficientSet {
        FnCoefficients::new(
            1,
            |x: &[f64], _: usize, o: &mut [f64]| o[0] = x[0],
            |_: &[f64], _: usize, o: &mut [f64]| o[0] = 0.0,
            |_: &[f64], _: usize, _: f64, o: &mut [f64]| o[0] = 0.0,
        )
    }

    /// Scalar linear SDE with regime-dependent drift/vol and mark-scaled jumps.
    fn linear() -> impl CoefficientSet {
        FnCoefficients::new(
            1,
            |x: &[f64], i: usize, o: &mut [f64]| o[0] = x[0] * [0.15, 0.05][i],
            |x: &[f64], i: usize, o: &mut [f64]| o[0] = x[0] * [0.1, 0.3][i],
            |x: &[f64], i: usize, v: f64, o: &mut [f64]| o[0] = x[0] * [-0.2, -0.1][i] * v,
        )
    }

    #[test]
    fn zero_coefficients_are_identity() {
        let c = zero_coeffs(2);
        let (pre, post) = euler_step(&[1.0, -2.0], 0, 0.3, &[0.5, 0.1], &c, Some(3.0)).unwrap();
        assert_eq!(pre, vec![1.0, -2.0]);
        assert_eq!(post, vec![1.0, -2.0]);
    }

    #[test]
    fn nonfinite_detected() {
        let c = FnCoefficients::new(
            1,
            |_: &[f64], _: usize, o: &mut [f64]| o[0] = f64::INFINITY,
            |_: &[f64], _: usize, o: &mut [f64]| o[0] = 0.0,
            |_: &[f64], _: usize, _: f64, o: &mut [f64]| o[0] = 0.0,
        );
        assert_eq!(
            euler_step(&[1.0], 0, 0.1, &[0.0], &c, None),
            Err(Error::NonFinite { step: None })
        );
        let g = build_grid(1.0, 0.5, &[]).unwrap();
        let d = DriverRealization::from_parts(g, 1, vec![0.0; 2], vec![], vec![0; 3], None).unwrap();
        assert_eq!(simulate_path(&c, &d, &[1.0]), Err(Error::NonFinite { step: Some(0) }));
    }

    #[test]
    fn dimension_checked() {
        let c = zero_coeffs(2);
        assert!(euler_step(&[1.0], 0, 0.1, &[0.0, 0.0], &c, None).is_err());
        let g = build_grid(1.0, 0.5, &[]).unwrap();
        let d = DriverRealization::from_parts(g, 1, vec![0.0; 2], vec![], vec![0; 3], None).unwrap();
        assert!(matches!(simulate_path(&c, &d, &[0.0, 0.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn zero_coefficients_give_constant_path() {
        let q = GeneratorMatrix::new(&[vec![-1.0, 1.0], vec![1.0, -1.0]]).unwrap();
        let spec = JumpSpec::new(2.0, MarkDistribution::Degenerate(1.0)).unwrap();
        let d = realize_drivers(&q, &spec, 5.0, 0.1, 2, 0, &mut make_stream(7, 0)).unwrap();
        let p = simulate_path(&zero_coeffs(2), &d, &[3.0, 4.0]).unwrap();
        assert!(p.states().chunks(2).all(|s| s == [3.0, 4.0]));
    }

    #[test]
    fn exponential_growth_matches_e() {
        // Explicit Euler on x' = x: (1 + Δ)^{1/Δ} vs e, relative error ≈ Δ/2.
        let g = build_grid(1.0, 1e-4, &[]).unwrap();
        let n = g.len();
        let d = DriverRealization::from_parts(g, 1, vec![0.0; n - 1], vec![], vec![0; n], None).unwrap();
        let p = simulate_path(&growth(), &d, &[2.0]).unwrap();
        let rel = (p.terminal()[0] - 2.0 * std::f64::consts::E).abs() / 2.0;
        assert!(rel < 2e-4, "relative error {rel}");
    }

    #[test]
    fn jump_applied_at_flagged_point_only() {
        let g = build_grid(1.0, 0.5, &[0.3]).unwrap();
        let d = DriverRealization::from_parts(g, 1, vec![0.0; 3], vec![1.0], vec![0; 4], None).unwrap();
        let p = simulate_path(&linear(), &d, &[10.0]).unwrap();
        // Cell [0, 0.3]: drift only, then jump factor −0.2 on X_0 = 10.
        let pre = 10.0 + 10.0 * 0.15 * 0.3;
        assert_eq!(p.pre_jump_state(1), Some(&[pre][..]));
        assert_eq!(p.state(1)[0], pre + 10.0 * -0.2);
        assert_eq!(p.pre_jump_state(2), None);
        assert_eq!(p.left_limit(2), p.state(2));
    }

    fn reference_drivers(seed: u64) -> DriverRealization {
        let q = GeneratorMatrix::new(&[vec![-0.5, 0.5], vec![0.5, -0.5]]).unwrap();
        let spec = JumpSpec::new(1.0, MarkDistribution::Exponential { mean: 1.0 }).unwrap();
        realize_drivers(&q, &spec, 10.0, 0.05, 1, 0, &mut make_stream(seed, 0)).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn replay_matches_recursion_exactly(seed in any::<u64>()) {
            let d = reference_drivers(seed);
            let c = linear();
            let p = simulate_path(&c, &d, &[10.0]).unwrap();
            prop_assert_eq!(&p, &simulate_path(&c, &d, &[10.0]).unwrap());
            for k in 0..d.grid().len() - 1 {
                let (pre, post) = euler_step(
                    p.state(k), d.regimes()[k], d.grid().gap(k), d.increment(k), &c, d.mark_at(k + 1),
                ).unwrap();
                prop_assert_eq!(p.left_limit(k + 1), &pre[..]);
                prop_assert_eq!(p.state(k + 1), &post[..]);
                if !d.grid().is_jump(k + 1) {
                    prop_assert_eq!(pre, post);
                }
            }
        }

        #[test]
        fn right_endpoint_regime_is_irrelevant(seed in any::<u64>(), k in 0usize..150) {
            let d = reference_drivers(seed);
            let k = k % (d.grid().len() - 1);
            let mut regimes = d.regimes().to_vec();
            regimes[k + 1] = 1 - regimes[k + 1];
            let marks = d.jump_marks().to_vec();
            let d2 = DriverRealization::from_parts(
                d.grid().clone(), 1, d.brownian_increments().to_vec(), marks, regimes, None,
            ).unwrap();
            let a = simulate_path(&linear(), &d, &[10.0]).unwrap();
            let b = simulate_path(&linear(), &d2, &[10.0]).unwrap();
            prop_assert_eq!(a.state(k + 1), b.state(k + 1));
            prop_assert_eq!(a.left_limit(k + 1), b.left_limit(k + 1));
        }

        #[test]
        fn reduces_to_plain_euler_maruyama(seed in any::<u64>()) {
            // Single regime, no jump coefficient: compare with a hand-rolled loop.
            let q = GeneratorMatrix::zero(1);
            let spec = JumpSpec::new(1.0, MarkDistribution::Degenerate(1.0)).unwrap();
            let d = realize_drivers(&q, &spec, 3.0, 0.01, 1, 0, &mut make_stream(seed, 1)).unwrap();
            let c = FnCoefficients::new(
                1,
                |x: &[f64], _: usize, o: &mut [f64]| o[0] = 0.5 - x[0],
                |x: &[f64], _: usize, o: &mut [f64]| o[0] = 0.2 * x[0].sin(),
                |_: &[f64], _: usize, _: f64, o: &mut [f64]| o[0] = 0.0,
            );
            let p = simulate_path(&c, &d, &[1.0]).unwrap();
            let mut x = 1.0f64;
            for k in 0..d.grid().len() - 1 {
                let h = d.grid().gap(k);
                let dw = d.increment(k)[0];
                let mut v = x + (0.5 - x) * h;
                v += 0.2 * x.sin() * dw;
                x = v;
                prop_assert_eq!(p.state(k + 1)[0], x);
            }
        }
    }
}
