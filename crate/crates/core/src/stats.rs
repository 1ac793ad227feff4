//! Histogram estimates of `P(Y|X)`, `P(X)` and `P(Y)` and the KL divergences
//! every checker builds on.
//!
//! Raw counts are never modified; Jeffreys smoothing (`alpha = 0.5` per
//! cell) is applied when probabilities are queried, so estimates stay finite
//! and divergences between finite-sample estimates never blow up.
//!
//! Conditional KL aggregates per-input-cell divergences with an explicit
//! weight distribution over input cells:
//!
//! ```text
//! D(P || Q) = sum_x w(x) * KL(P(.|x) || Q(.|x))
//! ```
//!
//! where the sum runs over input cells holding at least `n_min` raw samples
//! in both operands. The weight of skipped cells is reported, not
//! redistributed. All divergences are in nats.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;
use crate::trace::TraceRecord;

/// Jeffreys smoothing mass per cell.
pub const JEFFREYS_ALPHA: f64 = 0.5;
pub const DEFAULT_CELL_CAP: u64 = 1_000_000;
/// Minimum raw samples per input cell, in both operands, for the cell to
/// enter a conditional divergence.
pub const DEFAULT_MIN_CELL_COUNT: u64 = 5;

const PADDING: f64 = 0.01;
const NORMALIZATION_TOL: f64 = 1e-9;

/// Bin edges of one feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    edges: Vec<f64>,
}

impl Axis {
    pub fn new(edges: Vec<f64>) -> Result<Self> {
        if edges.len() < 2 {
            return Err(Error::param("edges", "need at least 2 edges per dimension"));
        }
        if edges.iter().any(|e| !e.is_finite()) {
            return Err(Error::param("edges", "edges must be finite"));
        }
        if edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::param("edges", "edges must be strictly increasing"));
        }
        Ok(Axis { edges })
    }

    /// Equal-width edges spanning `[lo, hi]`.
    pub fn uniform(lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if bins < 1 {
            return Err(Error::param("bins", "need at least one bin"));
        }
        let width = (hi - lo) / bins as f64;
        let mut edges: Vec<f64> = (0..bins).map(|i| lo + width * i as f64).collect();
        edges.push(hi);
        Axis::new(edges)
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn cells(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn lower(&self) -> f64 {
        self.edges[0]
    }

    pub fn upper(&self) -> f64 {
        self.edges[self.edges.len() - 1]
    }

    /// Cell index of `v` and whether `v` lies inside `[lower, upper]`.
    /// Out-of-range and non-finite values clamp to an edge cell.
    pub fn locate(&self, v: f64) -> (usize, bool) {
        if v.is_nan() {
            return (0, false);
        }
        if v < self.lower() {
            return (0, false);
        }
        if v > self.upper() {
            return (self.cells() - 1, false);
        }
        // Interior edges only: the count of interior edges <= v is the cell.
        let interior = &self.edges[1..self.edges.len() - 1];
        (interior.partition_point(|e| *e <= v), true)
    }

    pub fn contains(&self, v: f64) -> bool {
        v.is_finite() && v >= self.lower() && v <= self.upper()
    }
}

/// Product grid over one space (inputs or outputs). Cells are flattened
/// row-major with the first dimension most significant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    axes: Vec<Axis>,
}

impl Grid {
    pub fn new(axes: Vec<Axis>) -> Self {
        Grid { axes }
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn dims(&self) -> usize {
        self.axes.len()
    }

    pub fn cells(&self) -> usize {
        self.axes.iter().map(Axis::cells).product()
    }

    fn cells_wide(&self) -> u128 {
        self.axes.iter().map(|a| a.cells() as u128).product()
    }

    pub fn locate(&self, v: &[f64]) -> (usize, bool) {
        debug_assert_eq!(v.len(), self.axes.len());
        let mut cell = 0;
        let mut inside = true;
        for (axis, value) in self.axes.iter().zip(v) {
            let (i, ok) = axis.locate(*value);
            cell = cell * axis.cells() + i;
            inside &= ok;
        }
        (cell, inside)
    }

    pub fn contains(&self, v: &[f64]) -> bool {
        v.len() == self.axes.len() && self.axes.iter().zip(v).all(|(a, x)| a.contains(*x))
    }
}

/// Binning of the input and output spaces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinningSpec {
    pub x: Grid,
    pub y: Grid,
    pub cap: u64,
}

/// A fitted binning plus anything worth telling the user about it.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedBinning {
    pub spec: BinningSpec,
    pub warnings: Vec<String>,
}

impl BinningSpec {
    pub fn new(x: Grid, y: Grid, cap: u64) -> Result<Self> {
        let cells = x.cells_wide() * y.cells_wide();
        if cells > u128::from(cap) {
            return Err(Error::CellCapExceeded { cells, cap });
        }
        Ok(BinningSpec { x, y, cap })
    }

    pub fn from_edges(x: Vec<Vec<f64>>, y: Vec<Vec<f64>>, cap: u64) -> Result<Self> {
        let grid = |edges: Vec<Vec<f64>>| -> Result<Grid> {
            Ok(Grid::new(edges.into_iter().map(Axis::new).collect::<Result<_>>()?))
        };
        BinningSpec::new(grid(x)?, grid(y)?, cap)
    }

    /// Equal-width bins per dimension spanning `[min - 1% range, max + 1% range]`
    /// of the finite values in `records`. A zero-variance dimension gets a
    /// single degenerate cell of unit width around its value.
    pub fn fit(
        records: &[TraceRecord],
        x_bins: &[usize],
        y_bins: &[usize],
        cap: u64,
    ) -> Result<FittedBinning> {
        let first = records.first().ok_or(Error::EmptyTrace)?;
        let (x_dim, y_dim) = (first.x.len(), first.y.len());
        if x_bins.len() != x_dim || y_bins.len() != y_dim {
            return Err(Error::param("bins", "one bin count per dimension is required"));
        }
        if x_bins.iter().chain(y_bins).any(|b| *b < 2) {
            return Err(Error::param("bins", "bin counts must be at least 2"));
        }
        let x_cells: u128 = x_bins.iter().map(|b| *b as u128).product();
        let y_cells: u128 = y_bins.iter().map(|b| *b as u128).product();
        if x_cells * y_cells > u128::from(cap) {
            return Err(Error::CellCapExceeded {
                cells: x_cells * y_cells,
                cap,
            });
        }
        let mut warnings = Vec::new();
        let mut fit_space = |space: &'static str, bins: &[usize], get: &dyn Fn(&TraceRecord) -> &[f64]| {
            let mut axes = Vec::with_capacity(bins.len());
            for (d, &b) in bins.iter().enumerate() {
                let (lo, hi) = records
                    .iter()
                    .map(|r| get(r)[d])
                    .filter(|v| v.is_finite())
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
                let axis = if !lo.is_finite() {
                    warnings.push(format!("{space}[{d}] has no finite values; using a degenerate cell"));
                    Axis::uniform(-0.5, 0.5, 1)?
                } else if hi - lo <= 0.0 {
                    warnings.push(format!("{space}[{d}] has zero variance; using a single degenerate cell"));
                    Axis::uniform(lo - 0.5, lo + 0.5, 1)?
                } else {
                    let pad = PADDING * (hi - lo);
                    Axis::uniform(lo - pad, hi + pad, b)?
                };
                axes.push(axis);
            }
            Ok::<_, Error>(Grid::new(axes))
        };
        let x = fit_space("x", x_bins, &|r| &r.x)?;
        let y = fit_space("y", y_bins, &|r| &r.y)?;
        Ok(FittedBinning {
            spec: BinningSpec::new(x, y, cap)?,
            warnings,
        })
    }

    /// [`BinningSpec::fit`] with the same bin count on every dimension.
    pub fn fit_uniform(records: &[TraceRecord], x_bins: usize, y_bins: usize) -> Result<FittedBinning> {
        let first = records.first().ok_or(Error::EmptyTrace)?;
        BinningSpec::fit(
            records,
            &vec![x_bins; first.x.len()],
            &vec![y_bins; first.y.len()],
            DEFAULT_CELL_CAP,
        )
    }
}

fn smoothed(count: u64, total: u64, cells: usize, alpha: f64) -> f64 {
    (count as f64 + alpha) / (total as f64 + alpha * cells as f64)
}

/// Binned, smoothed estimate of `P(Y|X)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalDistribution {
    binning: BinningSpec,
    /// x-cell -> (y-cell -> raw count)
    counts: BTreeMap<usize, BTreeMap<usize, u64>>,
    row_totals: BTreeMap<usize, u64>,
    n_total: u64,
    out_of_support: u64,
    alpha: f64,
}

impl ConditionalDistribution {
    /// Counts every record once. Records with values outside the binning are
    /// clamped to edge cells and tallied as out-of-support.
    pub fn estimate(records: &[TraceRecord], binning: &BinningSpec) -> Result<Self> {
        Self::estimate_iter(records.iter(), binning)
    }

    pub fn estimate_iter<'a>(
        records: impl IntoIterator<Item = &'a TraceRecord>,
        binning: &BinningSpec,
    ) -> Result<Self> {
        let mut dist = ConditionalDistribution {
            binning: binning.clone(),
            counts: BTreeMap::new(),
            row_totals: BTreeMap::new(),
            n_total: 0,
            out_of_support: 0,
            alpha: JEFFREYS_ALPHA,
        };
        for r in records {
            dist.add(&r.x, &r.y)?;
        }
        if dist.n_total == 0 {
            return Err(Error::EmptyTrace);
        }
        Ok(dist)
    }

    fn add(&mut self, x: &[f64], y: &[f64]) -> Result<()> {
        if x.len() != self.binning.x.dims() || y.len() != self.binning.y.dims() {
            return Err(Error::DimensionMismatch {
                index: self.n_total as usize,
                what: if x.len() != self.binning.x.dims() { "x" } else { "y" },
                expected: if x.len() != self.binning.x.dims() {
                    self.binning.x.dims()
                } else {
                    self.binning.y.dims()
                },
                found: if x.len() != self.binning.x.dims() { x.len() } else { y.len() },
            });
        }
        let (xc, xin) = self.binning.x.locate(x);
        let (yc, yin) = self.binning.y.locate(y);
        if !(xin && yin) {
            self.out_of_support += 1;
        }
        *self.counts.entry(xc).or_default().entry(yc).or_insert(0) += 1;
        *self.row_totals.entry(xc).or_insert(0) += 1;
        self.n_total += 1;
        Ok(())
    }

    pub fn binning(&self) -> &BinningSpec {
        &self.binning
    }

    pub fn n_total(&self) -> u64 {
        self.n_total
    }

    pub fn out_of_support(&self) -> u64 {
        self.out_of_support
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn x_cells(&self) -> usize {
        self.binning.x.cells()
    }

    pub fn y_cells(&self) -> usize {
        self.binning.y.cells()
    }

    /// Raw count table, sparse.
    pub fn counts(&self) -> &BTreeMap<usize, BTreeMap<usize, u64>> {
        &self.counts
    }

    pub fn row_count(&self, x_cell: usize) -> u64 {
        self.row_totals.get(&x_cell).copied().unwrap_or(0)
    }

    /// Unsmoothed conditional of one input cell; `None` without support.
    pub fn raw_conditional(&self, x_cell: usize) -> Option<Vec<f64>> {
        let total = self.row_count(x_cell);
        if total == 0 {
            return None;
        }
        let mut p = vec![0.0; self.y_cells()];
        for (yc, c) in &self.counts[&x_cell] {
            p[*yc] = *c as f64 / total as f64;
        }
        Some(p)
    }

    /// Jeffreys-smoothed conditional of one input cell. Cells without
    /// samples yield the uniform distribution.
    pub fn smoothed_conditional(&self, x_cell: usize) -> Vec<f64> {
        let k = self.y_cells();
        let total = self.row_count(x_cell);
        let mut p = vec![smoothed(0, total, k, self.alpha); k];
        if let Some(row) = self.counts.get(&x_cell) {
            for (yc, c) in row {
                p[*yc] = smoothed(*c, total, k, self.alpha);
            }
        }
        p
    }

    /// Input marginal implied by the row totals.
    pub fn input_marginal(&self) -> MarginalDistribution {
        MarginalDistribution {
            grid: self.binning.x.clone(),
            counts: self.row_totals.clone(),
            n_total: self.n_total,
            out_of_support: 0,
            alpha: self.alpha,
        }
    }

    /// Output marginal implied by the count table.
    pub fn output_marginal(&self) -> MarginalDistribution {
        let mut counts: BTreeMap<usize, u64> = BTreeMap::new();
        for row in self.counts.values() {
            for (yc, c) in row {
                *counts.entry(*yc).or_insert(0) += c;
            }
        }
        MarginalDistribution {
            grid: self.binning.y.clone(),
            counts,
            n_total: self.n_total,
            out_of_support: 0,
            alpha: self.alpha,
        }
    }
}

/// Binned, smoothed estimate of a distribution over one space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalDistribution {
    grid: Grid,
    counts: BTreeMap<usize, u64>,
    n_total: u64,
    out_of_support: u64,
    alpha: f64,
}

impl MarginalDistribution {
    pub fn estimate<'a, I>(values: I, grid: &Grid) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let mut counts: BTreeMap<usize, u64> = BTreeMap::new();
        let (mut n, mut oos) = (0u64, 0u64);
        for v in values {
            if v.len() != grid.dims() {
                return Err(Error::DimensionMismatch {
                    index: n as usize,
                    what: "marginal sample",
                    expected: grid.dims(),
                    found: v.len(),
                });
            }
            let (cell, inside) = grid.locate(v);
            *counts.entry(cell).or_insert(0) += 1;
            n += 1;
            if !inside {
                oos += 1;
            }
        }
        if n == 0 {
            return Err(Error::EmptyTrace);
        }
        Ok(MarginalDistribution {
            grid: grid.clone(),
            counts,
            n_total: n,
            out_of_support: oos,
            alpha: JEFFREYS_ALPHA,
        })
    }

    pub fn inputs(records: &[TraceRecord], binning: &BinningSpec) -> Result<Self> {
        Self::estimate(records.iter().map(|r| r.x.as_slice()), &binning.x)
    }

    pub fn outputs(records: &[TraceRecord], binning: &BinningSpec) -> Result<Self> {
        Self::estimate(records.iter().map(|r| r.y.as_slice()), &binning.y)
    }

    /// Builds a marginal directly from per-cell counts.
    pub fn from_counts(grid: Grid, counts: BTreeMap<usize, u64>) -> Result<Self> {
        let k = grid.cells();
        if counts.keys().any(|c| *c >= k) {
            return Err(Error::param("counts", "cell index outside the grid"));
        }
        let n_total = counts.values().sum();
        if n_total == 0 {
            return Err(Error::EmptyTrace);
        }
        Ok(MarginalDistribution {
            grid,
            counts,
            n_total,
            out_of_support: 0,
            alpha: JEFFREYS_ALPHA,
        })
    }

    /// Sum of the counts of two marginals over the same grid.
    pub fn pooled(a: &Self, b: &Self) -> Result<Self> {
        if a.grid != b.grid {
            return Err(Error::BinningMismatch);
        }
        let mut counts = a.counts.clone();
        for (c, n) in &b.counts {
            *counts.entry(*c).or_insert(0) += n;
        }
        Ok(MarginalDistribution {
            grid: a.grid.clone(),
            counts,
            n_total: a.n_total + b.n_total,
            out_of_support: a.out_of_support + b.out_of_support,
            alpha: a.alpha,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn n_total(&self) -> u64 {
        self.n_total
    }

    pub fn out_of_support(&self) -> u64 {
        self.out_of_support
    }

    pub fn counts(&self) -> &BTreeMap<usize, u64> {
        &self.counts
    }

    pub fn count(&self, cell: usize) -> u64 {
        self.counts.get(&cell).copied().unwrap_or(0)
    }

    pub fn cells(&self) -> usize {
        self.grid.cells()
    }

    /// Empirical (unsmoothed) proportion of `cell`.
    pub fn weight(&self, cell: usize) -> f64 {
        self.count(cell) as f64 / self.n_total as f64
    }

    /// Smoothed probability of `cell`.
    pub fn probability(&self, cell: usize) -> f64 {
        smoothed(self.count(cell), self.n_total, self.cells(), self.alpha)
    }

    /// Dense smoothed probability vector.
    pub fn smoothed(&self) -> Vec<f64> {
        let k = self.cells();
        let mut p = vec![smoothed(0, self.n_total, k, self.alpha); k];
        for (c, n) in &self.counts {
            p[*c] = smoothed(*n, self.n_total, k, self.alpha);
        }
        p
    }

    /// Largest smoothed cell probability.
    pub fn modal_probability(&self) -> f64 {
        let max = self.counts.values().copied().max().unwrap_or(0);
        smoothed(max, self.n_total, self.cells(), self.alpha)
    }
}

/// `sum p_i ln(p_i / q_i)` in nats, with `0 ln(0/q) = 0`. Returns
/// `f64::INFINITY` when some `p_i > 0` meets `q_i = 0`.
pub fn kl_discrete(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    for v in [p, q] {
        if v.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
            return Err(Error::param("probabilities", "entries must be finite and non-negative"));
        }
        let sum: f64 = v.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::NotNormalized { sum });
        }
    }
    let mut total = 0.0;
    for (pi, qi) in p.iter().zip(q) {
        if *pi == 0.0 {
            continue;
        }
        if *qi == 0.0 {
            return Ok(f64::INFINITY);
        }
        total += pi * math::ln(pi / qi);
    }
    // Rounding can leave tiny negatives for near-identical inputs.
    Ok(total.max(0.0))
}

/// A conditional divergence together with its coverage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionalKl {
    pub value: f64,
    /// Weight of input cells skipped for lack of samples.
    pub excluded_mass: f64,
    pub cells_used: usize,
    pub cells_excluded: usize,
}

/// Weight-averaged per-input-cell KL of the smoothed conditionals, with the
/// default `n_min`.
pub fn conditional_kl(
    p: &ConditionalDistribution,
    q: &ConditionalDistribution,
    weights: &MarginalDistribution,
) -> Result<ConditionalKl> {
    conditional_kl_with(p, q, weights, DEFAULT_MIN_CELL_COUNT)
}

pub fn conditional_kl_with(
    p: &ConditionalDistribution,
    q: &ConditionalDistribution,
    weights: &MarginalDistribution,
    n_min: u64,
) -> Result<ConditionalKl> {
    if p.binning != q.binning || weights.grid != p.binning.x {
        return Err(Error::BinningMismatch);
    }
    let mut value = 0.0;
    let mut excluded_mass = 0.0;
    let (mut used, mut excluded) = (0usize, 0usize);
    for (cell, n) in &weights.counts {
        let w = *n as f64 / weights.n_total as f64;
        if p.row_count(*cell) >= n_min.max(1) && q.row_count(*cell) >= n_min.max(1) {
            let kl = kl_discrete(&p.smoothed_conditional(*cell), &q.smoothed_conditional(*cell))?;
            value += w * kl;
            used += 1;
        } else {
            excluded_mass += w;
            excluded += 1;
        }
    }
    if used == 0 {
        return Err(Error::InsufficientOverlap);
    }
    Ok(ConditionalKl {
        value,
        excluded_mass,
        cells_used: used,
        cells_excluded: excluded,
    })
}

/// `(D(p||q) + D(q||p)) / 2` under the same weights and exclusions.
pub fn symmetrized_kl(
    p: &ConditionalDistribution,
    q: &ConditionalDistribution,
    weights: &MarginalDistribution,
) -> Result<ConditionalKl> {
    symmetrized_kl_with(p, q, weights, DEFAULT_MIN_CELL_COUNT)
}

pub fn symmetrized_kl_with(
    p: &ConditionalDistribution,
    q: &ConditionalDistribution,
    weights: &MarginalDistribution,
    n_min: u64,
) -> Result<ConditionalKl> {
    let pq = conditional_kl_with(p, q, weights, n_min)?;
    let qp = conditional_kl_with(q, p, weights, n_min)?;
    Ok(ConditionalKl {
        value: 0.5 * (pq.value + qp.value),
        ..pq
    })
}

/// Symmetrized conditional KL between two estimates, weighted by their
/// pooled input marginal.
pub fn pooled_symmetrized_kl(
    p: &ConditionalDistribution,
    q: &ConditionalDistribution,
    n_min: u64,
) -> Result<ConditionalKl> {
    let w = MarginalDistribution::pooled(&p.input_marginal(), &q.input_marginal())?;
    symmetrized_kl_with(p, q, &w, n_min)
}

/// Directed conditional KL `D(p||q)` weighted by the pooled input marginal.
pub fn pooled_conditional_kl(
    p: &ConditionalDistribution,
    q: &ConditionalDistribution,
    n_min: u64,
) -> Result<ConditionalKl> {
    let w = MarginalDistribution::pooled(&p.input_marginal(), &q.input_marginal())?;
    conditional_kl_with(p, q, &w, n_min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn r(x: f64, y: f64) -> TraceRecord {
        TraceRecord::new(0, vec![x], vec![y])
    }

    fn one_cell_binning(y_cells: usize) -> BinningSpec {
        BinningSpec::new(
            Grid::new(vec![Axis::uniform(0.0, 1.0, 1).unwrap()]),
            Grid::new(vec![Axis::uniform(-0.5, y_cells as f64 - 0.5, y_cells).unwrap()]),
            DEFAULT_CELL_CAP,
        )
        .unwrap()
    }

    fn bernoulli(p: f64, n: usize, seed: u64) -> Vec<TraceRecord> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| r(0.5, if rng.random::<f64>() < p { 1.0 } else { 0.0 }))
            .collect()
    }

    #[test]
    fn fit_padding_and_width() {
        let recs: Vec<_> = [0.0, 2.5, 10.0].iter().map(|x| r(*x, 0.0)).collect();
        let fit = BinningSpec::fit(&recs, &[5], &[2], DEFAULT_CELL_CAP).unwrap();
        // Expected edges from lo - 1% range, hi + 1% range, five equal widths.
        let expected = [-0.1, 1.94, 3.98, 6.02, 8.06, 10.1];
        for (e, x) in fit.spec.x.axes()[0].edges().iter().zip(expected) {
            assert!((e - x).abs() < 1e-12, "{e} vs {x}");
        }
        // y is constant here: one degenerate cell and a warning.
        assert_eq!(fit.spec.y.cells(), 1);
        assert_eq!(fit.warnings.len(), 1);
    }

    #[test]
    fn fit_zero_variance_and_cap() {
        let recs: Vec<_> = (0..10).map(|i| r(3.0, i as f64)).collect();
        let fit = BinningSpec::fit(&recs, &[4], &[4], DEFAULT_CELL_CAP).unwrap();
        assert_eq!(fit.spec.x.cells(), 1);
        assert!(fit.warnings[0].contains("zero variance"));

        let wide = TraceRecord::new(0, vec![0.0; 4], vec![0.0]);
        let err = BinningSpec::fit(&[wide], &[100; 4], &[2], 1_000_000).unwrap_err();
        assert!(matches!(err, Error::CellCapExceeded { .. }));
        assert!(BinningSpec::fit(&recs, &[1], &[2], DEFAULT_CELL_CAP).is_err());
    }

    #[test]
    fn axis_locate_clamps() {
        let a = Axis::uniform(0.0, 4.0, 4).unwrap();
        assert_eq!(a.locate(0.0), (0, true));
        assert_eq!(a.locate(1.0), (1, true));
        assert_eq!(a.locate(3.99), (3, true));
        assert_eq!(a.locate(4.0), (3, true));
        assert_eq!(a.locate(-1.0), (0, false));
        assert_eq!(a.locate(9.0), (3, false));
        assert_eq!(a.locate(f64::NAN), (0, false));
        assert!(Axis::new(vec![0.0, 0.0]).is_err());
        assert!(Axis::new(vec![0.0]).is_err());
    }

    #[test]
    fn grid_flattening() {
        let g = Grid::new(vec![Axis::uniform(0.0, 2.0, 2).unwrap(), Axis::uniform(0.0, 3.0, 3).unwrap()]);
        assert_eq!(g.cells(), 6);
        assert_eq!(g.locate(&[1.5, 2.5]), (5, true));
        assert_eq!(g.locate(&[0.5, 0.5]), (0, true));
    }

    #[test]
    fn conditional_counts_and_smoothing() {
        let recs = vec![r(0.1, 0.0), r(0.1, 0.0), r(0.1, 1.0)];
        let d = ConditionalDistribution::estimate(&recs, &one_cell_binning(2)).unwrap();
        let raw = d.raw_conditional(0).unwrap();
        assert!((raw[0] - 2.0 / 3.0).abs() < 1e-15 && (raw[1] - 1.0 / 3.0).abs() < 1e-15);
        let s = d.smoothed_conditional(0);
        assert!((s[0] - 2.5 / 4.0).abs() < 1e-15 && (s[1] - 1.5 / 4.0).abs() < 1e-15);
        assert_eq!(d.n_total(), 3);
    }

    #[test]
    fn single_record_and_out_of_support() {
        let b = one_cell_binning(3);
        let d = ConditionalDistribution::estimate(&[r(0.5, 2.0)], &b).unwrap();
        assert_eq!(d.raw_conditional(0).unwrap(), vec![0.0, 0.0, 1.0]);
        let d = ConditionalDistribution::estimate(&[r(7.0, 1.0)], &b).unwrap();
        assert_eq!(d.out_of_support(), 1);
        assert_eq!(d.row_count(0), 1);
        assert!(ConditionalDistribution::estimate(&[], &b).is_err());
    }

    #[test]
    fn kl_discrete_examples() {
        assert_eq!(kl_discrete(&[0.5, 0.5], &[0.5, 0.5]).unwrap(), 0.0);
        // Closed form: 0.5 ln(0.5/0.25) + 0.5 ln(0.5/0.75).
        let oracle = 0.5 * (2.0f64).ln() + 0.5 * (2.0f64 / 3.0).ln();
        let kl = kl_discrete(&[0.5, 0.5], &[0.25, 0.75]).unwrap();
        assert!((kl - oracle).abs() < 1e-12);
        assert!((kl - 0.14384).abs() < 1e-5);
        assert_eq!(kl_discrete(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), f64::INFINITY);
        assert!(matches!(kl_discrete(&[1.0], &[0.5, 0.5]), Err(Error::LengthMismatch { .. })));
        assert!(matches!(kl_discrete(&[0.6, 0.6], &[0.5, 0.5]), Err(Error::NotNormalized { .. })));
    }

    #[test]
    fn conditional_kl_identity_and_overlap() {
        let b = one_cell_binning(2);
        let p = ConditionalDistribution::estimate(&bernoulli(0.5, 100, 1), &b).unwrap();
        let w = p.input_marginal();
        assert_eq!(conditional_kl(&p, &p, &w).unwrap().value, 0.0);
        assert_eq!(symmetrized_kl(&p, &p, &w).unwrap().value, 0.0);

        let tiny = ConditionalDistribution::estimate(&bernoulli(0.5, 3, 2), &b).unwrap();
        assert_eq!(conditional_kl(&p, &tiny, &w), Err(Error::InsufficientOverlap));

        let other = ConditionalDistribution::estimate(&bernoulli(0.5, 10, 3), &one_cell_binning(3)).unwrap();
        assert_eq!(conditional_kl(&p, &other, &w), Err(Error::BinningMismatch));
    }

    #[test]
    fn bernoulli_kl_matches_closed_form() {
        let b = one_cell_binning(2);
        let p = ConditionalDistribution::estimate(&bernoulli(0.5, 100_000, 11), &b).unwrap();
        let q = ConditionalDistribution::estimate(&bernoulli(0.25, 100_000, 12), &b).unwrap();
        let w = MarginalDistribution::pooled(&p.input_marginal(), &q.input_marginal()).unwrap();
        let forward = 0.5 * (0.5f64 / 0.25).ln() + 0.5 * (0.5f64 / 0.75).ln();
        let backward = 0.25 * (0.25f64 / 0.5).ln() + 0.75 * (0.75f64 / 0.5).ln();
        assert!((forward - 0.14384).abs() < 1e-5 && (backward - 0.13081).abs() < 1e-5);
        let kl = conditional_kl(&p, &q, &w).unwrap().value;
        assert!((kl - forward).abs() < 0.01, "{kl}");
        let sym_pq = symmetrized_kl(&p, &q, &w).unwrap().value;
        let sym_qp = symmetrized_kl(&q, &p, &w).unwrap().value;
        assert_eq!(sym_pq, sym_qp);
        assert!((sym_pq - 0.13733).abs() < 0.01, "{sym_pq}");
    }

    #[test]
    fn same_system_estimates_are_close() {
        let b = one_cell_binning(2);
        let p = ConditionalDistribution::estimate(&bernoulli(0.3, 100_000, 21), &b).unwrap();
        let q = ConditionalDistribution::estimate(&bernoulli(0.3, 100_000, 22), &b).unwrap();
        let w = MarginalDistribution::pooled(&p.input_marginal(), &q.input_marginal()).unwrap();
        assert!(conditional_kl(&p, &q, &w).unwrap().value < 0.005);
    }

    #[test]
    fn excluded_cells_report_their_weight() {
        let b = BinningSpec::new(
            Grid::new(vec![Axis::uniform(0.0, 2.0, 2).unwrap()]),
            Grid::new(vec![Axis::uniform(0.0, 2.0, 2).unwrap()]),
            DEFAULT_CELL_CAP,
        )
        .unwrap();
        let mut recs: Vec<_> = (0..30).map(|i| r(0.5, (i % 2) as f64 + 0.5)).collect();
        recs.push(r(1.5, 0.5));
        let d = ConditionalDistribution::estimate(&recs, &b).unwrap();
        let res = conditional_kl(&d, &d, &d.input_marginal()).unwrap();
        assert_eq!((res.cells_used, res.cells_excluded), (1, 1));
        assert!((res.excluded_mass - 1.0 / 31.0).abs() < 1e-15);
    }

    #[test]
    fn consistency_error_shrinks_with_n() {
        // Fixed finite-support system: true binned KL between Ber(0.4) and Ber(0.2).
        let truth = 0.4 * (0.4f64 / 0.2).ln() + 0.6 * (0.6f64 / 0.8).ln();
        let b = one_cell_binning(2);
        let mut errors = Vec::new();
        for (i, n) in [1_000usize, 10_000, 100_000].iter().enumerate() {
            // Average over a few seeds so the comparison is not a coin flip.
            let mut err = 0.0;
            for s in 0..8u64 {
                let p = ConditionalDistribution::estimate(&bernoulli(0.4, *n, 100 * i as u64 + s), &b).unwrap();
                let q = ConditionalDistribution::estimate(&bernoulli(0.2, *n, 1000 + 100 * i as u64 + s), &b)
                    .unwrap();
                let kl = kl_discrete(&p.smoothed_conditional(0), &q.smoothed_conditional(0)).unwrap();
                err += (kl - truth).abs() / 8.0;
            }
            errors.push(err);
        }
        assert!(errors[0] > errors[1] && errors[1] > errors[2], "{errors:?}");
    }

    fn small_dist() -> impl Strategy<Value = (Vec<(f64, f64)>, Vec<(f64, f64)>)> {
        let pts = prop::collection::vec((0.0f64..3.0, 0.0f64..4.0), 20..200);
        (pts.clone(), pts)
    }

    fn grid_binning() -> BinningSpec {
        BinningSpec::new(
            Grid::new(vec![Axis::uniform(0.0, 3.0, 3).unwrap()]),
            Grid::new(vec![Axis::uniform(0.0, 4.0, 4).unwrap()]),
            DEFAULT_CELL_CAP,
        )
        .unwrap()
    }

    proptest! {
        #[test]
        fn smoothed_rows_are_distributions((a, _) in small_dist()) {
            let recs: Vec<_> = a.iter().map(|(x, y)| r(*x, *y)).collect();
            let d = ConditionalDistribution::estimate(&recs, &grid_binning()).unwrap();
            for cell in 0..d.x_cells() {
                let s: f64 = d.smoothed_conditional(cell).iter().sum();
                prop_assert!((s - 1.0).abs() < 1e-12);
            }
            let raw: u64 = d.counts().values().flat_map(|row| row.values()).sum();
            prop_assert_eq!(raw, d.n_total());
            let m: f64 = d.input_marginal().smoothed().iter().sum();
            prop_assert!((m - 1.0).abs() < 1e-12);
        }

        #[test]
        fn divergences_nonnegative_and_weight_scale_invariant((a, b) in small_dist()) {
            let bin = grid_binning();
            let ra: Vec<_> = a.iter().map(|(x, y)| r(*x, *y)).collect();
            let rb: Vec<_> = b.iter().map(|(x, y)| r(*x, *y)).collect();
            let p = ConditionalDistribution::estimate(&ra, &bin).unwrap();
            let q = ConditionalDistribution::estimate(&rb, &bin).unwrap();
            let w = MarginalDistribution::pooled(&p.input_marginal(), &q.input_marginal()).unwrap();
            let doubled = MarginalDistribution::from_counts(
                w.grid().clone(),
                w.counts().iter().map(|(c, n)| (*c, 2 * n)).collect(),
            ).unwrap();
            match (conditional_kl_with(&p, &q, &w, 1), conditional_kl_with(&p, &q, &doubled, 1)) {
                (Ok(x), Ok(y)) => {
                    prop_assert!(x.value >= 0.0);
                    prop_assert!((x.value - y.value).abs() < 1e-12);
                }
                (Err(e1), Err(e2)) => prop_assert_eq!(e1, e2),
                _ => prop_assert!(false, "weight scaling changed the outcome"),
            }
            let s1 = symmetrized_kl_with(&p, &q, &w, 1);
            let s2 = symmetrized_kl_with(&q, &p, &w, 1);
            if let (Ok(s1), Ok(s2)) = (s1, s2) {
                prop_assert_eq!(s1.value, s2.value);
            }
        }
    }
}
