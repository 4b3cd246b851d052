//! Jump-adapted time grid: the equidistant mesh `{0, Δ, 2Δ, …, T}` merged
//! with the jump arrival times, so every jump sits on a grid point.

use crate::{Error, Result};

/// Points closer than `MERGE_TOL · T` are treated as the same point.
pub const MERGE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    points: Vec<f64>,
    jump_flags: Vec<bool>,
    delta: f64,
    horizon: f64,
}

impl TimeGrid {
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn jump_flags(&self) -> &[bool] {
        &self.jump_flags
    }

    pub fn is_jump(&self, k: usize) -> bool {
        self.jump_flags[k]
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `t_{k+1} − t_k` for every cell, in order.
    pub fn gaps(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.windows(2).map(|w| w[1] - w[0])
    }

    pub fn gap(&self, k: usize) -> f64 {
        self.points[k + 1] - self.points[k]
    }

    /// Indices of flagged points.
    pub fn jump_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.jump_flags
            .iter()
            .enumerate()
            .filter_map(|(k, &f)| f.then_some(k))
    }

    /// Same points, with only the listed flagged points kept flagged.
    /// Used by thinning: rejected arrivals stay in the mesh as plain points.
    pub(crate) fn retain_flags(&self, keep: impl Fn(usize) -> bool) -> TimeGrid {
        let jump_flags = self
            .jump_flags
            .iter()
            .enumerate()
            .map(|(k, &f)| f && keep(k))
            .collect();
        TimeGrid {
            jump_flags,
            ..self.clone()
        }
    }
}

/// Builds the jump-adapted grid on `[0, T]` with nominal step `Δ`.
///
/// `jump_times` must be strictly increasing inside `(0, T]`. A jump that
/// lands within `MERGE_TOL · T` of a mesh point replaces it and keeps its
/// own exact time.
pub fn build_grid(horizon: f64, delta: f64, jump_times: &[f64]) -> Result<TimeGrid> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::InvalidHorizon(horizon));
    }
    if !(delta > 0.0) || !delta.is_finite() || delta > horizon {
        return Err(Error::InvalidStep { delta, horizon });
    }
    for (i, w) in jump_times.windows(2).enumerate() {
        if !(w[1] > w[0]) {
            return Err(Error::UnsortedJumps { index: i + 1 });
        }
    }
    if let Some(&t) = jump_times
        .iter()
        .find(|&&t| !(t > 0.0) || t > horizon)
    {
        return Err(Error::JumpOutOfRange { time: t, horizon });
    }

    let tol = MERGE_TOL * horizon;

    // Mesh as absolute multiples i·Δ; the last one snaps to T.
    let mut mesh = Vec::with_capacity((horizon / delta).ceil() as usize + 2);
    let mut i = 0u64;
    loop {
        let t = i as f64 * delta;
        if t >= horizon - tol {
            break;
        }
        mesh.push(t);
        i += 1;
    }
    mesh.push(horizon);

    let mut points = Vec::with_capacity(mesh.len() + jump_times.len());
    let mut jump_flags = Vec::with_capacity(points.capacity());
    let (mut m, mut j) = (0, 0);
    while m < mesh.len() || j < jump_times.len() {
        let next_mesh = mesh.get(m).copied();
        let next_jump = jump_times.get(j).copied();
        match (next_mesh, next_jump) {
            (Some(a), Some(b)) if (a - b).abs() <= tol => {
                points.push(b);
                jump_flags.push(true);
                m += 1;
                j += 1;
            }
            (Some(a), Some(b)) if a < b => {
                points.push(a);
                jump_flags.push(false);
                m += 1;
            }
            (_, Some(b)) => {
                points.push(b);
                jump_flags.push(true);
                j += 1;
            }
            (Some(a), None) => {
                points.push(a);
                jump_flags.push(false);
                m += 1;
            }
            (None, None) => unreachable!(),
        }
    }

    Ok(TimeGrid {
        points,
        jump_flags,
        delta,
        horizon,
    })
}
