//! Floored density estimates on equal-width grids.
//!
//! Divergences between two samples are computed from densities that share a
//! grid. The grid for `B` points spans `[lo - h, hi + h]` with bin width
//! `h = (hi - lo) / (B - 2)`, so the first and last bins are empty padding
//! and every grid point is a bin center.
//!
//! The histogram estimator optionally completes sparse tails. Beyond the
//! point where bins hold fewer than [`TAIL_MIN_COUNT`] observations, the
//! log-density is extrapolated from a weighted quadratic (or linear) fit to
//! the well-populated tail bins between that point and the quartile. The
//! extrapolation is only kept when it decays outward, predicts a tail mass
//! within a factor of two of the observed one, and predicts almost no mass
//! where the sample has none. Hard-edged supports therefore keep their edges,
//! while smooth tails stop being dominated by the `epsilon` floor.

use serde::{Deserialize, Serialize};

use super::EmpiricalDistribution;
use crate::error::{Error, Result};

/// Bins with fewer expected observations than this are treated as sparse.
const TAIL_MIN_COUNT: f64 = 20.0;
/// The tail fit uses bins between the sparse boundary and this quantile.
const TAIL_FIT_QUANTILE: f64 = 0.25;
const TAIL_MIN_FIT_BINS: usize = 4;
const TAIL_MASS_RATIO: f64 = 2.0;
const TAIL_MASS_SLACK: f64 = 10.0;
/// Largest predicted count allowed where the sample has no observations.
const TAIL_MAX_UNSEEN: f64 = 20.0;
/// Gaussian kernel contributions are truncated beyond this many bandwidths.
const KDE_CUTOFF: f64 = 8.0;
/// Fine-grid points per bandwidth used when binning a sample for the kernel
/// estimator.
const KDE_BIN_RESOLUTION: f64 = 20.0;
const KDE_MAX_BINS: usize = 1 << 18;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    #[default]
    Histogram,
    /// Gaussian kernel with Silverman's bandwidth `1.06 * sd * n^(-1/5)`.
    Kde,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DensityConfig {
    pub estimator: Estimator,
    /// Number of grid points (histogram bins including the two padding bins).
    pub bins: usize,
    /// Lower bound applied to every density value before renormalization.
    pub epsilon: f64,
    /// Extrapolate sparse histogram tails (ignored by the kernel estimator).
    pub tail_completion: bool,
    /// Fixed kernel bandwidth; Silverman's rule when unset.
    pub bandwidth: Option<f64>,
}

impl Default for DensityConfig {
    fn default() -> Self {
        Self {
            estimator: Estimator::Histogram,
            bins: 100,
            epsilon: 1e-12,
            tail_completion: true,
            bandwidth: None,
        }
    }
}

impl DensityConfig {
    pub fn histogram(bins: usize) -> Self {
        Self {
            bins,
            ..Self::default()
        }
    }

    pub fn kde() -> Self {
        Self {
            estimator: Estimator::Kde,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.bins < 3 {
            return Err(Error::InvalidParameter(format!(
                "density grid needs at least 3 points, got {}",
                self.bins
            )));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "density floor must be positive, got {}",
                self.epsilon
            )));
        }
        if let Some(h) = self.bandwidth {
            if !(h.is_finite() && h > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "kernel bandwidth must be positive, got {h}"
                )));
            }
        }
        Ok(())
    }

    /// Short human-readable description recorded in run metadata.
    pub fn describe(&self) -> String {
        match self.estimator {
            Estimator::Histogram => format!(
                "histogram(bins={}, epsilon={:e}, tail_completion={})",
                self.bins, self.epsilon, self.tail_completion
            ),
            Estimator::Kde => match self.bandwidth {
                Some(h) => format!(
                    "gaussian-kde(bandwidth={h}, grid={}, epsilon={:e})",
                    self.bins, self.epsilon
                ),
                None => format!(
                    "gaussian-kde(silverman, grid={}, epsilon={:e})",
                    self.bins, self.epsilon
                ),
            },
        }
    }
}

/// Density values on a strictly increasing grid, floored and normalized so
/// that the trapezoid integral is one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityEstimate {
    grid: Vec<f64>,
    density: Vec<f64>,
}

impl DensityEstimate {
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.grid == other.grid
    }

    /// Linear interpolation between grid points; constant beyond the ends.
    pub fn evaluate(&self, y: f64) -> f64 {
        let g = &self.grid;
        let last = g.len() - 1;
        if y <= g[0] {
            return self.density[0];
        }
        if y >= g[last] {
            return self.density[last];
        }
        let i = g.partition_point(|&x| x <= y);
        let (x0, x1) = (g[i - 1], g[i]);
        let t = (y - x0) / (x1 - x0);
        self.density[i - 1] + t * (self.density[i] - self.density[i - 1])
    }

    /// Trapezoid integral of the density over its grid.
    pub fn integral(&self) -> f64 {
        trapezoid(&self.grid, &self.density)
    }
}

pub(crate) fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

struct Grid {
    lo: f64,
    hi: f64,
    step: f64,
    points: usize,
}

impl Grid {
    fn new(lo: f64, hi: f64, points: usize) -> Result<Self> {
        if !(hi > lo) {
            return Err(Error::DegenerateSupport);
        }
        Ok(Self {
            lo,
            hi,
            step: (hi - lo) / (points - 2) as f64,
            points,
        })
    }

    fn centers(&self) -> Vec<f64> {
        (0..self.points)
            .map(|k| self.lo + (k as f64 - 0.5) * self.step)
            .collect()
    }

    /// Probability mass per bin. Interior bins are `[left, right)`, the last
    /// interior bin is closed at `hi`.
    fn masses(&self, dist: &EmpiricalDistribution) -> Vec<f64> {
        let mut masses = vec![0.0; self.points];
        let last = self.points - 2;
        let mut below = 0.0;
        for (k, mass) in masses.iter_mut().enumerate().take(last + 1).skip(1) {
            let right = if k == last {
                1.0
            } else {
                dist.mass_below(self.lo + k as f64 * self.step)
            };
            *mass = right - below;
            below = right;
        }
        masses
    }
}

/// Density of `dist` on a grid spanning its own range.
pub fn estimate_density(
    dist: &EmpiricalDistribution,
    config: &DensityConfig,
) -> Result<DensityEstimate> {
    if dist.is_degenerate() {
        return Err(Error::DegenerateSupport);
    }
    estimate_density_on(dist, dist.min(), dist.max(), config)
}

/// Density of `dist` on the grid spanning `[lo, hi]`; the sample must lie
/// inside that range. Two calls with the same range and config share a grid.
pub fn estimate_density_on(
    dist: &EmpiricalDistribution,
    lo: f64,
    hi: f64,
    config: &DensityConfig,
) -> Result<DensityEstimate> {
    config.validate()?;
    let grid = Grid::new(lo, hi, config.bins)?;
    if dist.min() < lo || dist.max() > hi {
        return Err(Error::InvalidParameter(format!(
            "sample range [{}, {}] exceeds grid range [{lo}, {hi}]",
            dist.min(),
            dist.max()
        )));
    }
    let centers = grid.centers();
    let mut density = match config.estimator {
        Estimator::Histogram => {
            let mut d: Vec<f64> = grid.masses(dist).iter().map(|m| m / grid.step).collect();
            if config.tail_completion {
                complete_tails(dist, &centers, grid.step, &mut d);
            }
            d
        }
        Estimator::Kde => kde(dist, &centers, config.bandwidth)?,
    };
    floor_and_normalize(&centers, &mut density, config.epsilon);
    debug_assert!(grid.hi > grid.lo);
    Ok(DensityEstimate {
        grid: centers,
        density,
    })
}

/// Densities of two samples on the grid spanning the union of their ranges.
pub fn shared_densities(
    a: &EmpiricalDistribution,
    b: &EmpiricalDistribution,
    config: &DensityConfig,
) -> Result<(DensityEstimate, DensityEstimate)> {
    let lo = a.min().min(b.min());
    let hi = a.max().max(b.max());
    Ok((
        estimate_density_on(a, lo, hi, config)?,
        estimate_density_on(b, lo, hi, config)?,
    ))
}

fn floor_and_normalize(grid: &[f64], density: &mut [f64], epsilon: f64) {
    for d in density.iter_mut() {
        *d = d.max(epsilon);
    }
    let total = trapezoid(grid, density);
    for d in density.iter_mut() {
        *d = (*d / total).max(epsilon);
    }
}

fn silverman_bandwidth(dist: &EmpiricalDistribution) -> f64 {
    1.06 * dist.std_dev() * (dist.len() as f64).powf(-0.2)
}

/// Gaussian kernel estimate at `centers`. The sample is first spread onto a
/// fine grid by linear binning, with spacing a small fraction of the bandwidth,
/// so the cost does not grow with the sample size times the grid size.
fn kde(dist: &EmpiricalDistribution, centers: &[f64], fixed: Option<f64>) -> Result<Vec<f64>> {
    let bandwidth = fixed.unwrap_or_else(|| silverman_bandwidth(dist));
    if !(bandwidth > 0.0) {
        return Err(Error::DegenerateSupport);
    }
    let (lo, hi) = (dist.min(), dist.max());
    let step = (bandwidth / KDE_BIN_RESOLUTION).max((hi - lo) / KDE_MAX_BINS as f64);
    let bins = ((hi - lo) / step).ceil() as usize + 2;
    let mut mass = vec![0.0; bins];
    let n = dist.len() as f64;
    for (i, &v) in dist.values().iter().enumerate() {
        let w = dist.weights().map_or(1.0 / n, |w| w[i]);
        let pos = (v - lo) / step;
        let k = (pos.floor() as usize).min(bins - 2);
        let frac = pos - k as f64;
        mass[k] += w * (1.0 - frac);
        mass[k + 1] += w * frac;
    }

    let norm = 1.0 / ((2.0 * std::f64::consts::PI).sqrt() * bandwidth);
    let reach = KDE_CUTOFF * bandwidth;
    Ok(centers
        .iter()
        .map(|&x| {
            let from = ((x - reach - lo) / step).ceil().max(0.0) as usize;
            let to = (((x + reach - lo) / step).floor() + 1.0).clamp(0.0, bins as f64) as usize;
            (from.min(to)..to)
                .filter(|&j| mass[j] > 0.0)
                .map(|j| {
                    let z = (x - (lo + j as f64 * step)) / bandwidth;
                    mass[j] * norm * (-0.5 * z * z).exp()
                })
                .sum()
        })
        .collect())
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Side {
    Left,
    Right,
}

/// `exp(a + b t + c t^2)` with `t = (x - center) / scale`.
struct LogQuadratic {
    a: f64,
    b: f64,
    c: f64,
    center: f64,
    scale: f64,
}

impl LogQuadratic {
    fn t(&self, x: f64) -> f64 {
        (x - self.center) / self.scale
    }

    fn value(&self, x: f64) -> f64 {
        let t = self.t(x);
        (self.a + self.b * t + self.c * t * t).exp()
    }

    fn slope(&self, x: f64) -> f64 {
        self.b + 2.0 * self.c * self.t(x)
    }
}

fn complete_tails(dist: &EmpiricalDistribution, centers: &[f64], step: f64, density: &mut [f64]) {
    let n = dist.len() as f64;
    let counts: Vec<f64> = density.iter().map(|d| d * step * n).collect();
    let mode = counts
        .iter()
        .enumerate()
        .fold(0, |best, (i, &c)| if c > counts[best] { i } else { best });

    for side in [Side::Left, Side::Right] {
        let (sparse, fit_bins): (Vec<usize>, Vec<usize>) = match side {
            Side::Left => {
                let mut j = mode as isize;
                while j >= 0 && counts[j as usize] >= TAIL_MIN_COUNT {
                    j -= 1;
                }
                let q = dist.quantile_unchecked(TAIL_FIT_QUANTILE);
                let first_dense = (j + 1) as usize;
                (
                    (0..first_dense).collect(),
                    (first_dense..=mode).filter(|&k| centers[k] <= q).collect(),
                )
            }
            Side::Right => {
                let mut j = mode;
                while j < counts.len() && counts[j] >= TAIL_MIN_COUNT {
                    j += 1;
                }
                let q = dist.quantile_unchecked(1.0 - TAIL_FIT_QUANTILE);
                (
                    (j..counts.len()).collect(),
                    (mode..j).filter(|&k| centers[k] >= q).collect(),
                )
            }
        };
        if sparse.is_empty() || fit_bins.len() < TAIL_MIN_FIT_BINS {
            continue;
        }
        let Some(model) = fit_log_density(&fit_bins, centers, density, &counts, step) else {
            continue;
        };

        let edge = match side {
            Side::Left => centers[fit_bins[0]],
            Side::Right => centers[fit_bins[fit_bins.len() - 1]],
        };
        let decays = match side {
            Side::Left => model.slope(edge) > 0.0,
            Side::Right => model.slope(edge) < 0.0,
        };
        if !decays {
            continue;
        }

        let predicted: Vec<f64> = sparse.iter().map(|&k| model.value(centers[k])).collect();
        let predicted_count: f64 = predicted.iter().sum::<f64>() * step * n;
        let observed_count: f64 = sparse.iter().map(|&k| counts[k]).sum();
        let unseen_count: f64 = sparse
            .iter()
            .zip(&predicted)
            .filter(|(&k, _)| match side {
                Side::Left => centers[k] <= dist.min() - 0.5 * step,
                Side::Right => centers[k] >= dist.max() + 0.5 * step,
            })
            .map(|(_, p)| p * step * n)
            .sum();
        let consistent = predicted_count <= TAIL_MASS_RATIO * observed_count + TAIL_MASS_SLACK
            && predicted_count >= observed_count / TAIL_MASS_RATIO - TAIL_MASS_SLACK
            && unseen_count <= TAIL_MAX_UNSEEN;
        if !consistent {
            continue;
        }
        for (&k, p) in sparse.iter().zip(predicted) {
            density[k] = p;
        }
    }
}

/// Weighted least-squares fit of `log density` against bin position, with
/// the bin counts as weights. Falls back to a straight line when the
/// quadratic is convex.
fn fit_log_density(
    bins: &[usize],
    centers: &[f64],
    density: &[f64],
    counts: &[f64],
    step: f64,
) -> Option<LogQuadratic> {
    let center = bins.iter().map(|&k| centers[k]).sum::<f64>() / bins.len() as f64;
    let mut s = [0.0f64; 5];
    let mut r = [0.0f64; 3];
    for &k in bins {
        let t = (centers[k] - center) / step;
        let w = counts[k];
        let y = density[k].ln();
        let mut tp = 1.0;
        for (p, sp) in s.iter_mut().enumerate() {
            *sp += w * tp;
            if p < 3 {
                r[p] += w * y * tp;
            }
            tp *= t;
        }
    }
    let quadratic = solve3(
        [[s[0], s[1], s[2]], [s[1], s[2], s[3]], [s[2], s[3], s[4]]],
        r,
    );
    let (a, b, c) = match quadratic {
        Some([a, b, c]) if c <= 0.0 => (a, b, c),
        _ => {
            let det = s[0] * s[2] - s[1] * s[1];
            if det.abs() <= f64::EPSILON * s[0] * s[2] {
                return None;
            }
            (
                (r[0] * s[2] - r[1] * s[1]) / det,
                (s[0] * r[1] - s[1] * r[0]) / det,
                0.0,
            )
        }
    };
    Some(LogQuadratic {
        a,
        b,
        c,
        center,
        scale: step,
    })
}

/// Gaussian elimination with partial pivoting.
fn solve3(mut m: [[f64; 3]; 3], mut rhs: [f64; 3]) -> Option<[f64; 3]> {
    let scale = m.iter().flatten().fold(0.0f64, |acc, v| acc.max(v.abs()));
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[pivot][col].abs() <= 1e-12 * scale {
            return None;
        }
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            for k in col..3 {
                m[row][k] -= f * m[col][k];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let tail: f64 = (row + 1..3).map(|k| m[row][k] * x[k]).sum();
        x[row] = (rhs[row] - tail) / m[row][row];
    }
    Some(x)
}
