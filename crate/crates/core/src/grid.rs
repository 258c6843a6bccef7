//! Uniform periodic grids on truncated boxes `[-L, L)^n`, sampled fields and
//! the periodic rectangle-rule quadrature.

use thiserror::Error;

/// Largest supported spatial dimension.
pub const MAX_DIM: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("dimension must be 1..=3, got {0}")]
    Dimension(usize),
    #[error("box half-length must be positive and finite, got {0}")]
    HalfLength(f64),
    #[error("points per axis must be a power of two >= 2, got {0}")]
    Points(usize),
    #[error("grid has too many points to index ({0}^{1})")]
    TooLarge(usize, usize),
    #[error("sample function returned a non-finite value {value} at index {index}")]
    NonFiniteSample { index: usize, value: f64 },
    #[error("expected {expected} values, got {got}")]
    Length { expected: usize, got: usize },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("sample times must be strictly increasing and start at 0")]
    Times,
    #[error("space-time field needs one frame per time sample ({times} times, {frames} frames)")]
    FrameCount { times: usize, frames: usize },
}

/// Uniform periodic sampling of `[-L, L)^n` with `N` points per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    half_len: f64,
    points: usize,
    spacing: f64,
}

impl Grid {
    pub fn new(dim: usize, half_len: f64, points: usize) -> Result<Self, GridError> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(GridError::Dimension(dim));
        }
        if !(half_len.is_finite() && half_len > 0.0) {
            return Err(GridError::HalfLength(half_len));
        }
        if points < 2 || !points.is_power_of_two() {
            return Err(GridError::Points(points));
        }
        if points.checked_pow(dim as u32).is_none() {
            return Err(GridError::TooLarge(points, dim));
        }
        // Division by a power of two is exact, so spacing * points == 2L.
        let spacing = 2.0 * half_len / points as f64;
        Ok(Self {
            dim,
            half_len,
            points,
            spacing,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Box half-length `L`.
    pub fn half_len(&self) -> f64 {
        self.half_len
    }

    /// Points per axis `N`.
    pub fn points(&self) -> usize {
        self.points
    }

    /// Spacing `h = 2L/N`.
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Total number of samples `N^n`.
    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Volume element `h^n`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }

    /// Measure of the box, `(2L)^n`.
    pub fn measure(&self) -> f64 {
        (2.0 * self.half_len).powi(self.dim as i32)
    }

    /// Coordinate `-L + k h` of index `k` along any axis.
    pub fn coord(&self, k: usize) -> f64 {
        -self.half_len + k as f64 * self.spacing
    }

    /// Per-axis indices of a flat (row-major, axis 0 slowest) index.
    pub fn unflatten(&self, mut idx: usize) -> [usize; MAX_DIM] {
        let mut out = [0; MAX_DIM];
        for axis in (0..self.dim).rev() {
            out[axis] = idx % self.points;
            idx /= self.points;
        }
        out
    }

    pub fn flatten(&self, ks: &[usize]) -> usize {
        ks[..self.dim]
            .iter()
            .fold(0, |acc, &k| acc * self.points + k)
    }

    /// Coordinates of a flat index; unused axes are zero.
    pub fn point(&self, idx: usize) -> [f64; MAX_DIM] {
        let ks = self.unflatten(idx);
        let mut x = [0.0; MAX_DIM];
        for axis in 0..self.dim {
            x[axis] = self.coord(ks[axis]);
        }
        x
    }

    /// Euclidean norm `|x|` of the point at a flat index.
    pub fn radius(&self, idx: usize) -> f64 {
        norm(&self.point(idx))
    }

    /// Flat index of the grid point at the origin.
    pub fn origin_index(&self) -> usize {
        self.flatten(&[self.points / 2; MAX_DIM])
    }
}

pub(crate) fn norm(x: &[f64; MAX_DIM]) -> f64 {
    (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
}

/// Real samples of a function on a [`Grid`], row-major with axis 0 slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() != grid.len() {
            return Err(GridError::Length {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(GridError::NonFiniteSample { index, value });
        }
        Ok(Self { grid, values })
    }

    /// Constructor for values already known to be finite and of the right length.
    pub(crate) fn from_raw(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Self { grid, values }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        assert!(c.is_finite(), "constant field value must be finite");
        Self {
            grid,
            values: vec![c; grid.len()],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Pointwise map; errors if the map produces a non-finite value.
    pub fn try_map(&self, f: impl Fn(f64) -> f64) -> Result<Field, GridError> {
        Field::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn abs(&self) -> Field {
        Field::from_raw(self.grid, self.values.iter().map(|v| v.abs()).collect())
    }

    pub fn scale(&self, c: f64) -> Field {
        Field::from_raw(self.grid, self.values.iter().map(|v| c * v).collect())
    }

    /// `a * self + b * other`.
    pub fn axpby(&self, a: f64, other: &Field, b: f64) -> Result<Field, GridError> {
        self.check_same_grid(other)?;
        Field::new(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        )
    }

    pub fn add(&self, other: &Field) -> Result<Field, GridError> {
        self.axpby(1.0, other, 1.0)
    }

    pub fn sub(&self, other: &Field) -> Result<Field, GridError> {
        self.axpby(1.0, other, -1.0)
    }

    pub fn mul(&self, other: &Field) -> Result<Field, GridError> {
        self.check_same_grid(other)?;
        Field::new(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| x * y)
                .collect(),
        )
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn check_same_grid(&self, other: &Field) -> Result<(), GridError> {
        if self.grid != other.grid {
            return Err(GridError::GridMismatch);
        }
        Ok(())
    }
}

/// Rectangle rule `h^n * sum(values)`; summation runs in index order.
pub fn integrate(f: &Field) -> f64 {
    f.grid.cell_volume() * f.values.iter().sum::<f64>()
}

/// Samples `phi` at every grid point. `phi` receives the coordinate slice of
/// length `n`.
pub fn sample(grid: &Grid, phi: impl Fn(&[f64]) -> f64) -> Result<Field, GridError> {
    let values = (0..grid.len())
        .map(|idx| {
            let x = grid.point(idx);
            let v = phi(&x[..grid.dim()]);
            if v.is_finite() {
                Ok(v)
            } else {
                Err(GridError::NonFiniteSample {
                    index: idx,
                    value: v,
                })
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Field::from_raw(*grid, values))
}

/// A field sampled at increasing instants `0 = t_0 < t_1 < ... < t_M`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeField {
    grid: Grid,
    times: Vec<f64>,
    frames: Vec<Field>,
}

impl SpaceTimeField {
    pub fn new(grid: Grid, times: Vec<f64>, frames: Vec<Field>) -> Result<Self, GridError> {
        if times.is_empty() || times[0] != 0.0 || times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(GridError::Times);
        }
        if frames.len() != times.len() {
            return Err(GridError::FrameCount {
                times: times.len(),
                frames: frames.len(),
            });
        }
        if frames.iter().any(|f| f.grid != grid) {
            return Err(GridError::GridMismatch);
        }
        Ok(Self {
            grid,
            times,
            frames,
        })
    }

    /// Uniform lattice `t_i = i T / M`, `i = 0..=M`.
    pub fn uniform_times(horizon: f64, steps: usize) -> Vec<f64> {
        (0..=steps)
            .map(|i| horizon * i as f64 / steps as f64)
            .collect()
    }

    pub fn zeros(grid: Grid, times: Vec<f64>) -> Result<Self, GridError> {
        let frames = vec![Field::zeros(grid); times.len()];
        Self::new(grid, times, frames)
    }

    /// Samples `phi(t, x)` on every frame.
    pub fn sample(
        grid: &Grid,
        times: Vec<f64>,
        phi: impl Fn(f64, &[f64]) -> f64,
    ) -> Result<Self, GridError> {
        let frames = times
            .iter()
            .map(|&t| sample(grid, |x| phi(t, x)))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(*grid, times, frames)
    }

    /// Same field repeated on every instant.
    pub fn steady(field: &Field, times: Vec<f64>) -> Result<Self, GridError> {
        let frames = vec![field.clone(); times.len()];
        Self::new(*field.grid(), times, frames)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn frames(&self) -> &[Field] {
        &self.frames
    }

    pub fn frame(&self, i: usize) -> &Field {
        &self.frames[i]
    }

    pub fn into_frames(self) -> Vec<Field> {
        self.frames
    }

    /// Horizon `T = t_M`.
    pub fn horizon(&self) -> f64 {
        *self.times.last().expect("times are non-empty")
    }

    pub fn scale(&self, c: f64) -> SpaceTimeField {
        Self {
            grid: self.grid,
            times: self.times.clone(),
            frames: self.frames.iter().map(|f| f.scale(c)).collect(),
        }
    }

    /// `a * self + b * other`; both fields must share grid and lattice.
    pub fn axpby(&self, a: f64, other: &SpaceTimeField, b: f64) -> Result<Self, GridError> {
        if self.grid != other.grid {
            return Err(GridError::GridMismatch);
        }
        if self.times != other.times {
            return Err(GridError::Times);
        }
        let frames = self
            .frames
            .iter()
            .zip(&other.frames)
            .map(|(x, y)| x.axpby(a, y, b))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            grid: self.grid,
            times: self.times.clone(),
            frames,
        })
    }

    pub fn sub(&self, other: &SpaceTimeField) -> Result<Self, GridError> {
        self.axpby(1.0, other, -1.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.frames.iter().fold(0.0, |m, f| m.max(f.max_abs()))
    }

    /// Keeps the first `count` frames.
    pub fn truncated(&self, count: usize) -> Result<Self, GridError> {
        let count = count.min(self.times.len());
        Self::new(
            self.grid,
            self.times[..count].to_vec(),
            self.frames[..count].to_vec(),
        )
    }
}

/// Pointwise `max_i |u(t_i, x)|`.
pub fn sup_over_time(u: &SpaceTimeField) -> Field {
    let mut out = vec![0.0f64; u.grid.len()];
    for frame in &u.frames {
        for (o, v) in out.iter_mut().zip(frame.values()) {
            *o = o.max(v.abs());
        }
    }
    Field::from_raw(u.grid, out)
}
