//! Muckenhoupt weights on a uniform grid.
//!
//! Cubes are contiguous cell-aligned intervals, so the `A_p` supremum is a
//! maximum over the `n(n+1)/2` intervals of the grid and is computed exactly.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{check_exponent, conjugate, Grid1D, GridFunction};

/// Relative tolerance for comparisons against a budget.
pub const BUDGET_RTOL: f64 = 1e-9;

/// Resolution of the openness-exponent search.
pub const OPENNESS_STEP: f64 = 1e-3;

/// Strictly positive grid function.
#[derive(Debug, Clone, PartialEq)]
pub struct Weight {
    inner: GridFunction,
}

impl Weight {
    pub fn new(grid: Grid1D, values: Vec<f64>) -> Result<Self> {
        Self::from_function(GridFunction::new(grid, values)?)
    }

    pub fn from_function(f: GridFunction) -> Result<Self> {
        if let Some((cell, &value)) = f
            .values()
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v > 0.0) || !v.is_finite())
        {
            return Err(Error::NonPositiveWeight { cell, value });
        }
        Ok(Self { inner: f })
    }

    pub fn unit(grid: Grid1D) -> Self {
        Self {
            inner: GridFunction::constant(grid, 1.0),
        }
    }

    pub fn grid(&self) -> &Grid1D {
        self.inner.grid()
    }

    pub fn values(&self) -> &[f64] {
        self.inner.values()
    }

    pub fn as_function(&self) -> &GridFunction {
        &self.inner
    }

    pub fn len(&self) -> usize {
        self.inner.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inner.is_empty()
    }

    /// `c * w` for `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::from_function(self.inner.map(|v| c * v))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApReport {
    pub p: f64,
    pub constant: f64,
    /// Inclusive cell range `(start, end)` of the maximizing interval.
    pub witness: (usize, usize),
}

/// `[w]_{A_p}`: maximum over intervals `Q` of `⟨w⟩_Q ⟨w^{-1/(p-1)}⟩_Q^{p-1}`.
///
/// Each start index accumulates its own running sums, so the scan is exact
/// up to rounding and independent of how start indices are split across
/// threads. Ties go to the earliest start, then the shortest interval.
pub fn ap_constant(w: &Weight, p: f64) -> Result<ApReport> {
    check_exponent(p)?;
    let vals = w.values();
    let dual_exp = -1.0 / (p - 1.0);
    let dual: Vec<f64> = vals.iter().map(|v| v.powf(dual_exp)).collect();
    let n = vals.len();

    let per_start: Vec<(f64, usize)> = (0..n)
        .into_par_iter()
        .map(|a| {
            let mut sw = 0.0;
            let mut sd = 0.0;
            let mut best = (f64::NEG_INFINITY, a);
            for b in a..n {
                sw += vals[b];
                sd += dual[b];
                let len = (b - a + 1) as f64;
                let value = (sw / len) * (sd / len).powf(p - 1.0);
                if value > best.0 {
                    best = (value, b);
                }
            }
            best
        })
        .collect();

    let mut report = ApReport {
        p,
        constant: f64::NEG_INFINITY,
        witness: (0, 0),
    };
    for (a, &(value, b)) in per_start.iter().enumerate() {
        if value > report.constant {
            report.constant = value;
            report.witness = (a, b);
        }
    }
    Ok(report)
}

/// Value of the `A_p` characteristic on one interval (inclusive cells).
pub fn ap_interval_value(w: &Weight, p: f64, start: usize, end: usize) -> Result<f64> {
    check_exponent(p)?;
    if start > end || end >= w.len() {
        return Err(Error::InvalidArgument(format!(
            "interval ({start}, {end}) outside grid of {} cells",
            w.len()
        )));
    }
    let slice = &w.values()[start..=end];
    let len = slice.len() as f64;
    let avg: f64 = slice.iter().sum::<f64>() / len;
    let avg_dual: f64 = slice.iter().map(|v| v.powf(-1.0 / (p - 1.0))).sum::<f64>() / len;
    Ok(avg * avg_dual.powf(p - 1.0))
}

/// `w^{-1/(p-1)}`, which lies in `A_{p'}` with `[·]_{A_{p'}} = [w]_{A_p}^{1/(p-1)}`.
pub fn dual_weight(w: &Weight, p: f64) -> Result<Weight> {
    check_exponent(p)?;
    let e = -1.0 / (p - 1.0);
    Weight::from_function(w.as_function().map(|v| v.powf(e)))
}

/// Cell averages of `|x|^a`.
pub fn power_weight(a: f64, grid: &Grid1D) -> Result<Weight> {
    if !a.is_finite() {
        return Err(Error::InvalidArgument(format!("power {a} must be finite")));
    }
    if a == 0.0 {
        return Ok(Weight::unit(*grid));
    }
    let h = grid.width();
    let mut values = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let (x0, x1) = grid.cell_bounds(i);
        let touches_zero = x0 <= 0.0 && x1 >= 0.0;
        if touches_zero && a <= -1.0 {
            return Err(Error::InvalidArgument(format!(
                "|x|^{a} is not integrable on cell {i} = [{x0}, {x1})"
            )));
        }
        let avg = if a == -1.0 {
            (x1.abs().ln() - x0.abs().ln()).abs() / h
        } else {
            let prim = |x: f64| x.signum() * x.abs().powf(a + 1.0) / (a + 1.0);
            (prim(x1) - prim(x0)) / h
        };
        values.push(avg);
    }
    Weight::new(*grid, values)
}

/// Largest `σ` on the grid `1 + k * 0.001 < p` with `[w]_{A_{p/σ}} ≤ budget`.
///
/// Feasibility is monotone in `σ` (larger `σ` means a smaller exponent
/// `p/σ` and hence a larger constant), so the search bisects over `k`.
/// Returns `Infeasible` when the budget is below `[w]_{A_p}`, and when even
/// the first grid step `σ = 1.001` exceeds the budget.
pub fn openness_exponent(w: &Weight, p: f64, budget: f64) -> Result<f64> {
    check_exponent(p)?;
    let base = ap_constant(w, p)?.constant;
    let fits = |c: f64| c <= budget * (1.0 + BUDGET_RTOL);
    if !fits(base) {
        return Err(Error::Infeasible(format!(
            "budget {budget} is below [w]_A_{p} = {base}"
        )));
    }
    let k_max = ((p - 1.0) / OPENNESS_STEP).ceil() as i64 - 1;
    let sigma = |k: i64| 1.0 + k as f64 * OPENNESS_STEP;
    let feasible = |k: i64| -> Result<bool> { Ok(fits(ap_constant(w, p / sigma(k))?.constant)) };
    if k_max < 1 || !feasible(1)? {
        return Err(Error::Infeasible(format!(
            "no exponent sigma >= {} keeps [w]_A_(p/sigma) within budget {budget}",
            sigma(1)
        )));
    }
    if feasible(k_max)? {
        return Ok(sigma(k_max));
    }
    // invariant: lo feasible, hi infeasible
    let (mut lo, mut hi) = (1i64, k_max);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if feasible(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(sigma(lo))
}

/// Least nondecreasing majorant of a sample set `(x, bound)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyProfile {
    samples: Vec<(f64, f64)>,
    envelope: Vec<(f64, f64)>,
}

impl ConsistencyProfile {
    /// Samples sorted by abscissa, duplicates merged by max.
    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    /// Envelope knots: same abscissae as `samples`, running maximum of bounds.
    pub fn envelope(&self) -> &[(f64, f64)] {
        &self.envelope
    }

    /// Step-function value: the envelope at the largest knot `≤ x`, and `0`
    /// left of the first knot (bounds are nonnegative).
    pub fn value_at(&self, x: f64) -> f64 {
        let idx = self.envelope.partition_point(|(k, _)| *k <= x);
        if idx == 0 {
            0.0
        } else {
            self.envelope[idx - 1].1
        }
    }

    pub fn max_value(&self) -> f64 {
        self.envelope.last().map(|(_, y)| *y).unwrap_or(0.0)
    }

    /// Largest relative drop of a sample below the envelope; zero exactly
    /// when the samples themselves are nondecreasing.
    pub fn max_violation(&self) -> f64 {
        self.samples
            .iter()
            .zip(&self.envelope)
            .map(|((_, y), (_, e))| if *e > 0.0 { (e - y) / e } else { 0.0 })
            .fold(0.0, f64::max)
    }

    /// Whether the envelope is nondecreasing and dominates every sample.
    pub fn is_valid(&self) -> bool {
        self.envelope.windows(2).all(|w| w[0].1 <= w[1].1)
            && self
                .samples
                .iter()
                .zip(&self.envelope)
                .all(|((_, y), (_, e))| y <= e)
    }
}

pub fn fit_consistency_profile(samples: &[(f64, f64)]) -> Result<ConsistencyProfile> {
    if samples.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 samples, got {}",
            samples.len()
        )));
    }
    if samples.iter().any(|(x, y)| x.is_nan() || y.is_nan()) {
        return Err(Error::InvalidArgument("NaN sample".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(sorted.len());
    for (x, y) in sorted {
        match merged.last_mut() {
            Some(last) if last.0 == x => last.1 = last.1.max(y),
            _ => merged.push((x, y)),
        }
    }
    let mut running = f64::NEG_INFINITY;
    let envelope = merged
        .iter()
        .map(|&(x, y)| {
            running = running.max(y);
            (x, running)
        })
        .collect();
    Ok(ConsistencyProfile {
        samples: merged,
        envelope,
    })
}

/// `p' = p/(p-1)` re-exported for callers working with dual weights.
pub fn dual_exponent(p: f64) -> f64 {
    conjugate(p)
}
