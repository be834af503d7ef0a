//! Finite measured domains and the norms living on them.
//!
//! The real line is realized as a uniform grid of cells (`Grid1D`), functions
//! being implicitly zero outside the window. Abstract factors are finite atomic
//! measure spaces (`MeasuredAxis`). A `MixedSpace` is an ordered product of
//! axes with one exponent per axis; its norm reduces the last axis first and
//! the first axis last.
//!
//! Weighted Bochner norms `L^p(w; L^q̄)` are themselves mixed norms: prepend an
//! axis whose masses are `h * w_i`. Tuple norms `X(ℓ^s_N)` append a counting
//! axis of length `N` with exponent `s`.

use crate::error::{Error, Result};

/// Checks `p ∈ (1, ∞)` with `p` finite.
pub fn check_exponent(p: f64) -> Result<()> {
    if !p.is_finite() {
        return Err(Error::InvalidExponent {
            value: p,
            reason: "must be finite",
        });
    }
    if p <= 1.0 {
        return Err(Error::InvalidExponent {
            value: p,
            reason: "must exceed 1",
        });
    }
    Ok(())
}

/// Checks `s ∈ [1, ∞]`.
pub fn check_tuple_exponent(s: f64) -> Result<()> {
    if s.is_nan() || s < 1.0 {
        return Err(Error::InvalidExponent {
            value: s,
            reason: "must lie in [1, inf]",
        });
    }
    Ok(())
}

/// Hölder conjugate `p' = p / (p - 1)`, with `1' = ∞` and `∞' = 1`.
pub fn conjugate(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

/// Uniform grid on `[origin, origin + n * width)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    origin: f64,
    width: f64,
    n_cells: usize,
}

impl Grid1D {
    pub fn new(origin: f64, width: f64, n_cells: usize) -> Result<Self> {
        if !(width > 0.0) || !width.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "cell width must be positive, got {width}"
            )));
        }
        if n_cells == 0 {
            return Err(Error::Empty("grid needs at least one cell"));
        }
        if !origin.is_finite() {
            return Err(Error::InvalidArgument("origin must be finite".into()));
        }
        Ok(Self {
            origin,
            width,
            n_cells,
        })
    }

    /// `n` cells covering `[a, b)`.
    pub fn spanning(a: f64, b: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Empty("grid needs at least one cell"));
        }
        Self::new(a, (b - a) / n as f64, n)
    }

    /// `n` cells of width 1 starting at 0.
    pub fn unit(n: usize) -> Result<Self> {
        Self::new(0.0, 1.0, n)
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn len(&self) -> usize {
        self.n_cells
    }

    pub fn is_empty(&self) -> bool {
        self.n_cells == 0
    }

    pub fn cell_bounds(&self, i: usize) -> (f64, f64) {
        let left = self.origin + i as f64 * self.width;
        (left, left + self.width)
    }

    pub fn center(&self, i: usize) -> f64 {
        self.origin + (i as f64 + 0.5) * self.width
    }

    /// `∫ f = h Σ f_i`.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.width * values.iter().sum::<f64>()
    }

    fn same_as(&self, other: &Grid1D) -> bool {
        self.n_cells == other.n_cells
            && (self.width - other.width).abs() <= 1e-12 * self.width
            && (self.origin - other.origin).abs() <= 1e-12 * self.width.max(self.origin.abs())
    }

    pub(crate) fn ensure_same(&self, other: &Grid1D) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{self:?} vs {other:?}")))
        }
    }
}

/// Finite atomic measure space: `size` atoms with strictly positive masses.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasuredAxis {
    masses: Vec<f64>,
}

impl MeasuredAxis {
    pub fn new(masses: Vec<f64>) -> Result<Self> {
        if masses.is_empty() {
            return Err(Error::Empty("axis needs at least one atom"));
        }
        if let Some((i, m)) = masses
            .iter()
            .enumerate()
            .find(|(_, m)| !(**m > 0.0) || !m.is_finite())
        {
            return Err(Error::InvalidArgument(format!(
                "atom {i} has nonpositive mass {m}"
            )));
        }
        Ok(Self { masses })
    }

    /// Counting measure on `n` atoms.
    pub fn counting(n: usize) -> Result<Self> {
        Self::new(vec![1.0; n])
    }

    pub fn uniform(n: usize, mass: f64) -> Result<Self> {
        Self::new(vec![mass; n])
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }
}

/// Iterated space `L^{q_1}(Ω_1, …, L^{q_n}(Ω_n))`.
///
/// Exponents may be anywhere in `[1, ∞]`; operations that need reflexivity
/// check `(1, ∞)` themselves. A space with no axes is the scalar field.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedSpace {
    axes: Vec<MeasuredAxis>,
    exponents: Vec<f64>,
}

impl MixedSpace {
    pub fn new(axes: Vec<MeasuredAxis>, exponents: Vec<f64>) -> Result<Self> {
        if axes.len() != exponents.len() {
            return Err(Error::InvalidArgument(format!(
                "{} axes but {} exponents",
                axes.len(),
                exponents.len()
            )));
        }
        for &q in &exponents {
            check_tuple_exponent(q)?;
        }
        Ok(Self { axes, exponents })
    }

    /// The scalar field (no axes).
    pub fn scalar() -> Self {
        Self {
            axes: Vec::new(),
            exponents: Vec::new(),
        }
    }

    /// Single counting axis of length `n` with exponent `q`.
    pub fn sequence(n: usize, q: f64) -> Result<Self> {
        Self::new(vec![MeasuredAxis::counting(n)?], vec![q])
    }

    pub fn axes(&self) -> &[MeasuredAxis] {
        &self.axes
    }

    pub fn exponents(&self) -> &[f64] {
        &self.exponents
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(MeasuredAxis::len).collect()
    }

    /// Number of atoms of the product space.
    pub fn dim(&self) -> usize {
        self.axes.iter().map(MeasuredAxis::len).product()
    }

    /// True when every exponent is in the reflexive range `(1, ∞)`.
    pub fn is_reflexive(&self) -> bool {
        self.exponents.iter().all(|q| *q > 1.0 && q.is_finite())
    }

    pub(crate) fn ensure_reflexive(&self) -> Result<()> {
        for &q in &self.exponents {
            check_exponent(q)?;
        }
        Ok(())
    }

    /// Dual space: same axes, conjugate exponents.
    pub fn dual(&self) -> Self {
        Self {
            axes: self.axes.clone(),
            exponents: self.exponents.iter().map(|q| conjugate(*q)).collect(),
        }
    }

    /// Same axes with every exponent replaced.
    pub fn with_exponents(&self, exponents: Vec<f64>) -> Result<Self> {
        Self::new(self.axes.clone(), exponents)
    }

    /// Prepends an outer axis, e.g. the grid axis of a Bochner space.
    pub fn with_outer_axis(&self, axis: MeasuredAxis, exponent: f64) -> Result<Self> {
        let mut axes = Vec::with_capacity(self.axes.len() + 1);
        axes.push(axis);
        axes.extend(self.axes.iter().cloned());
        let mut exps = Vec::with_capacity(axes.len());
        exps.push(exponent);
        exps.extend_from_slice(&self.exponents);
        Self::new(axes, exps)
    }

    /// Appends an innermost axis, e.g. the tuple index of `X(ℓ^s_N)`.
    pub fn with_inner_axis(&self, axis: MeasuredAxis, exponent: f64) -> Result<Self> {
        let mut axes = self.axes.clone();
        axes.push(axis);
        let mut exps = self.exponents.clone();
        exps.push(exponent);
        Self::new(axes, exps)
    }

    /// Masses of the product measure, in row-major order.
    pub fn product_masses(&self) -> Vec<f64> {
        let mut out = vec![1.0];
        for axis in &self.axes {
            let mut next = Vec::with_capacity(out.len() * axis.len());
            for &a in &out {
                for &m in axis.masses() {
                    next.push(a * m);
                }
            }
            out = next;
        }
        out
    }

    pub(crate) fn check_len(&self, values: &[f64]) -> Result<()> {
        let expected = self.dim();
        if values.len() != expected {
            return Err(Error::ShapeMismatch {
                expected,
                got: values.len(),
            });
        }
        Ok(())
    }

    /// Iterated norm, innermost (last) axis first.
    pub fn norm(&self, values: &[f64]) -> Result<f64> {
        self.check_len(values)?;
        Ok(self.norm_unchecked(values))
    }

    pub(crate) fn norm_unchecked(&self, values: &[f64]) -> f64 {
        let mut level: Vec<f64> = values.to_vec();
        for (axis, &q) in self.axes.iter().zip(&self.exponents).rev() {
            level = level
                .chunks(axis.len())
                .map(|chunk| weighted_pnorm(chunk, axis.masses(), q))
                .collect();
        }
        debug_assert_eq!(level.len(), 1);
        level[0].abs()
    }

    /// Norm together with its gradient with respect to every entry.
    ///
    /// At points where a reduction is not differentiable (zero fibers, ties of
    /// an `∞` exponent) a valid subgradient is returned.
    pub fn norm_with_grad(&self, values: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.check_len(values)?;
        let mut levels: Vec<Vec<f64>> = vec![values.to_vec()];
        for (axis, &q) in self.axes.iter().zip(&self.exponents).rev() {
            let next = levels
                .last()
                .unwrap()
                .chunks(axis.len())
                .map(|chunk| weighted_pnorm(chunk, axis.masses(), q))
                .collect();
            levels.push(next);
        }
        let top = levels.last().unwrap()[0];
        let mut grad = vec![if top >= 0.0 { 1.0 } else { -1.0 }];
        if self.axes.is_empty() {
            let v = values[0];
            return Ok((v.abs(), vec![sign(v)]));
        }
        // Walk back down: level k+1 entry j is the norm of chunk j of level k.
        let n_axes = self.axes.len();
        for depth in 0..n_axes {
            // depth 0 undoes the outermost reduction.
            let axis_idx = depth;
            let axis = &self.axes[axis_idx];
            let q = self.exponents[axis_idx];
            let lower = &levels[n_axes - depth - 1];
            let upper = &levels[n_axes - depth];
            let mut next = vec![0.0; lower.len()];
            for (j, chunk) in lower.chunks(axis.len()).enumerate() {
                let g_up = grad[j];
                if g_up == 0.0 {
                    continue;
                }
                let local = weighted_pnorm_grad(chunk, axis.masses(), q, upper[j]);
                for (k, d) in local.into_iter().enumerate() {
                    next[j * axis.len() + k] = g_up * d;
                }
            }
            grad = next;
        }
        Ok((top.abs(), grad))
    }

    /// Norms of the partial reductions: entry `i` of the result holds, for
    /// every prefix multi-index over axes `0..i`, the iterated norm over axes
    /// `i..n` (so entry 0 is the full norm, entry `n` is `|values|`).
    pub fn partial_norms(&self, values: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.check_len(values)?;
        let mut levels: Vec<Vec<f64>> = vec![values.iter().map(|v| v.abs()).collect()];
        for (axis, &q) in self.axes.iter().zip(&self.exponents).rev() {
            let next = levels
                .last()
                .unwrap()
                .chunks(axis.len())
                .map(|chunk| weighted_pnorm(chunk, axis.masses(), q))
                .collect();
            levels.push(next);
        }
        levels.reverse();
        Ok(levels)
    }

    /// `∫ f g dμ` over the product measure.
    pub fn pairing(&self, f: &[f64], g: &[f64]) -> Result<f64> {
        self.check_len(f)?;
        self.check_len(g)?;
        Ok(self
            .product_masses()
            .iter()
            .zip(f.iter().zip(g))
            .map(|(m, (a, b))| m * a * b)
            .sum())
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `(Σ μ_i |v_i|^q)^{1/q}`, evaluated with max-scaling; `q = ∞` gives `max |v_i|`.
pub fn weighted_pnorm(v: &[f64], masses: &[f64], q: f64) -> f64 {
    let m = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if m == 0.0 || !m.is_finite() || q.is_infinite() {
        return m;
    }
    if q == 1.0 {
        return v.iter().zip(masses).map(|(x, w)| w * x.abs()).sum();
    }
    let s: f64 = v
        .iter()
        .zip(masses)
        .map(|(x, w)| w * (x.abs() / m).powf(q))
        .sum();
    m * s.powf(1.0 / q)
}

/// Gradient of [`weighted_pnorm`] given its value `norm`.
fn weighted_pnorm_grad(v: &[f64], masses: &[f64], q: f64, norm: f64) -> Vec<f64> {
    let mut g = vec![0.0; v.len()];
    if norm == 0.0 {
        return g;
    }
    if q.is_infinite() {
        let mut best = 0;
        for (i, x) in v.iter().enumerate() {
            if x.abs() > v[best].abs() {
                best = i;
            }
        }
        g[best] = sign(v[best]);
        return g;
    }
    for (i, (x, w)) in v.iter().zip(masses).enumerate() {
        g[i] = if q == 1.0 {
            w * sign(*x)
        } else {
            w * sign(*x) * (x.abs() / norm).powf(q - 1.0)
        };
    }
    g
}

/// Scalar field on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid1D,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid1D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: Grid1D, c: f64) -> Self {
        Self {
            grid,
            values: vec![c; grid.len()],
        }
    }

    pub fn from_fn(grid: Grid1D, f: impl Fn(usize) -> f64) -> Self {
        Self {
            grid,
            values: (0..grid.len()).map(f).collect(),
        }
    }

    pub fn grid(&self) -> &Grid1D {
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

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|x| f(*x)).collect(),
        }
    }

    pub fn integral(&self) -> f64 {
        self.grid.integrate(&self.values)
    }
}

/// `(h Σ |f_i|^p w_i)^{1/p}`.
pub fn weighted_lp_norm(f: &GridFunction, p: f64, w: &GridFunction) -> Result<f64> {
    check_exponent(p)?;
    f.grid.ensure_same(&w.grid)?;
    let masses = weight_masses(w)?;
    Ok(weighted_pnorm(&f.values, &masses, p))
}

/// Cell masses `h * w_i` of the weighted measure `w dx`.
pub(crate) fn weight_masses(w: &GridFunction) -> Result<Vec<f64>> {
    let h = w.grid.width();
    w.values
        .iter()
        .enumerate()
        .map(|(cell, &value)| {
            if value > 0.0 && value.is_finite() {
                Ok(h * value)
            } else {
                Err(Error::NonPositiveWeight { cell, value })
            }
        })
        .collect()
}

/// The space `L^p(w; X)` as a mixed space with the grid as outer axis.
pub fn bochner_space(w: &GridFunction, p: f64, inner: &MixedSpace) -> Result<MixedSpace> {
    check_tuple_exponent(p)?;
    let axis = MeasuredAxis::new(weight_masses(w)?)?;
    inner.with_outer_axis(axis, p)
}

/// Iterated norm of a tensor (free-function form of [`MixedSpace::norm`]).
pub fn mixed_norm(values: &[f64], space: &MixedSpace) -> Result<f64> {
    space.norm(values)
}

/// Pointwise `(Σ_n |f_n|^s)^{1/s}` (max at `s = ∞`).
pub fn pointwise_ls<T: AsRef<[f64]>>(fs: &[T], s: f64) -> Result<Vec<f64>> {
    check_tuple_exponent(s)?;
    let first = fs.first().ok_or(Error::Empty("tuple needs at least one entry"))?;
    let len = first.as_ref().len();
    for f in fs {
        if f.as_ref().len() != len {
            return Err(Error::ShapeMismatch {
                expected: len,
                got: f.as_ref().len(),
            });
        }
    }
    let mut column = vec![0.0; fs.len()];
    let ones = vec![1.0; fs.len()];
    Ok((0..len)
        .map(|i| {
            for (c, f) in column.iter_mut().zip(fs) {
                *c = f.as_ref()[i];
            }
            weighted_pnorm(&column, &ones, s)
        })
        .collect())
}

/// `‖(Σ_n |f_n|^s)^{1/s}‖_X`.
pub fn tuple_norm<T: AsRef<[f64]>>(fs: &[T], s: f64, space: &MixedSpace) -> Result<f64> {
    let combined = pointwise_ls(fs, s)?;
    space.norm(&combined)
}

/// Tuple norm and its gradient with respect to every entry of every member.
pub fn tuple_norm_with_grad<T: AsRef<[f64]>>(
    fs: &[T],
    s: f64,
    space: &MixedSpace,
) -> Result<(f64, Vec<Vec<f64>>)> {
    let combined = pointwise_ls(fs, s)?;
    let (norm, g_combined) = space.norm_with_grad(&combined)?;
    let mut grads: Vec<Vec<f64>> = fs.iter().map(|f| vec![0.0; f.as_ref().len()]).collect();
    for (i, (&c, &gc)) in combined.iter().zip(&g_combined).enumerate() {
        if c == 0.0 || gc == 0.0 {
            continue;
        }
        if s.is_infinite() {
            let mut best = 0;
            for (n, f) in fs.iter().enumerate() {
                if f.as_ref()[i].abs() > fs[best].as_ref()[i].abs() {
                    best = n;
                }
            }
            grads[best][i] = gc * sign(fs[best].as_ref()[i]);
        } else {
            for (n, f) in fs.iter().enumerate() {
                let x = f.as_ref()[i];
                let d = if s == 1.0 {
                    sign(x)
                } else {
                    sign(x) * (x.abs() / c).powf(s - 1.0)
                };
                grads[n][i] = gc * d;
            }
        }
    }
    Ok((norm, grads))
}

/// Field on `grid × Ω` with values in a mixed space; cell-major layout.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeFunction {
    grid: Grid1D,
    space: MixedSpace,
    values: Vec<f64>,
}

impl LatticeFunction {
    pub fn new(grid: Grid1D, space: MixedSpace, values: Vec<f64>) -> Result<Self> {
        let expected = grid.len() * space.dim();
        if values.len() != expected {
            return Err(Error::ShapeMismatch {
                expected,
                got: values.len(),
            });
        }
        Ok(Self {
            grid,
            space,
            values,
        })
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn space(&self) -> &MixedSpace {
        &self.space
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn fiber_len(&self) -> usize {
        self.space.dim()
    }

    /// Values at grid cell `i` (an element of `L^q̄(Ω)`).
    pub fn at_cell(&self, i: usize) -> &[f64] {
        let d = self.space.dim();
        &self.values[i * d..(i + 1) * d]
    }

    /// The scalar function `x ↦ F(x, s)` for a flattened Ω index `s`.
    pub fn fiber(&self, s: usize) -> GridFunction {
        let d = self.space.dim();
        GridFunction {
            grid: self.grid,
            values: (0..self.grid.len()).map(|i| self.values[i * d + s]).collect(),
        }
    }

    /// Rebuilds from one scalar function per Ω index.
    pub fn from_fibers(grid: Grid1D, space: MixedSpace, fibers: &[Vec<f64>]) -> Result<Self> {
        let d = space.dim();
        if fibers.len() != d {
            return Err(Error::ShapeMismatch {
                expected: d,
                got: fibers.len(),
            });
        }
        let mut values = vec![0.0; grid.len() * d];
        for (s, fib) in fibers.iter().enumerate() {
            if fib.len() != grid.len() {
                return Err(Error::ShapeMismatch {
                    expected: grid.len(),
                    got: fib.len(),
                });
            }
            for (i, v) in fib.iter().enumerate() {
                values[i * d + s] = *v;
            }
        }
        Self::new(grid, space, values)
    }

    /// `x ↦ ‖F(x, ·)‖_{L^q̄(Ω)}`.
    pub fn fiber_norms(&self) -> GridFunction {
        GridFunction {
            grid: self.grid,
            values: (0..self.grid.len())
                .map(|i| self.space.norm_unchecked(self.at_cell(i)))
                .collect(),
        }
    }

    /// `‖F‖_{L^p(w; L^q̄(Ω))}`.
    pub fn norm(&self, p: f64, w: &GridFunction) -> Result<f64> {
        self.grid.ensure_same(w.grid())?;
        let space = bochner_space(w, p, &self.space)?;
        space.norm(&self.values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
    }

    #[test]
    fn unit_function_on_unit_interval() {
        let g = Grid1D::spanning(0.0, 1.0, 4).unwrap();
        let f = GridFunction::constant(g, 1.0);
        let w = GridFunction::constant(g, 1.0);
        assert!(close(weighted_lp_norm(&f, 2.0, &w).unwrap(), 1.0, 1e-15));
    }

    #[test]
    fn sqrt_thirty() {
        let g = Grid1D::unit(4).unwrap();
        let f = GridFunction::new(g, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let w = GridFunction::constant(g, 1.0);
        // direct sum: 1 + 4 + 9 + 16
        let oracle = (1.0f64 + 4.0 + 9.0 + 16.0).sqrt();
        assert!(close(weighted_lp_norm(&f, 2.0, &w).unwrap(), oracle, 1e-15));
    }

    #[test]
    fn weighted_norm_errors() {
        let g = Grid1D::unit(3).unwrap();
        let f = GridFunction::constant(g, 1.0);
        let bad = GridFunction::new(g, vec![1.0, 0.0, 1.0]).unwrap();
        assert!(matches!(
            weighted_lp_norm(&f, 2.0, &bad),
            Err(Error::NonPositiveWeight { cell: 1, .. })
        ));
        let w = GridFunction::constant(g, 1.0);
        assert!(weighted_lp_norm(&f, 1.0, &w).is_err());
        assert!(weighted_lp_norm(&f, f64::INFINITY, &w).is_err());
        let other = GridFunction::constant(Grid1D::unit(4).unwrap(), 1.0);
        assert!(matches!(
            weighted_lp_norm(&other, 2.0, &w),
            Err(Error::GridMismatch(_))
        ));
    }

    #[test]
    fn mixed_norm_examples() {
        let euclid = MixedSpace::sequence(2, 2.0).unwrap();
        assert!(close(mixed_norm(&[3.0, 4.0], &euclid).unwrap(), 5.0, 1e-15));

        let degenerate = MixedSpace::new(vec![MeasuredAxis::counting(1).unwrap()], vec![3.0]).unwrap();
        assert!(close(mixed_norm(&[-2.5], &degenerate).unwrap(), 2.5, 1e-15));

        // inner ℓ² of (1,1) is √2 per row, outer ℓ¹ of (√2, √2) is 2√2
        let two = MixedSpace::new(
            vec![MeasuredAxis::counting(2).unwrap(), MeasuredAxis::counting(2).unwrap()],
            vec![1.0, 2.0],
        )
        .unwrap();
        let v = mixed_norm(&[1.0, 1.0, 1.0, 1.0], &two).unwrap();
        assert!(close(v, 2.0 * 2f64.sqrt(), 1e-15));
        assert!(matches!(
            mixed_norm(&[1.0, 1.0, 1.0], &two),
            Err(Error::ShapeMismatch { expected: 4, got: 3 })
        ));
    }

    #[test]
    fn reduction_order_is_innermost_first() {
        let sp = MixedSpace::new(
            vec![MeasuredAxis::counting(2).unwrap(), MeasuredAxis::counting(2).unwrap()],
            vec![1.0, f64::INFINITY],
        )
        .unwrap();
        // rows (3,0), (0,3): inner max per row = 3, 3 → outer ℓ¹ = 6.
        // Reducing the first axis first would give column sums (3,3) → max 3.
        assert_eq!(sp.norm(&[3.0, 0.0, 0.0, 3.0]).unwrap(), 6.0);
    }

    #[test]
    fn scalar_space_is_absolute_value() {
        let s = MixedSpace::scalar();
        assert_eq!(s.dim(), 1);
        assert_eq!(s.norm(&[-4.0]).unwrap(), 4.0);
        let (n, g) = s.norm_with_grad(&[-4.0]).unwrap();
        assert_eq!((n, g), (4.0, vec![-1.0]));
    }

    #[test]
    fn tuple_norm_examples() {
        let point = MixedSpace::scalar();
        let v = tuple_norm(&[vec![3.0], vec![4.0]], 2.0, &point).unwrap();
        assert!(close(v, 5.0, 1e-15));

        let sp = MixedSpace::sequence(3, 2.5).unwrap();
        let f = vec![1.0, -2.0, 0.5];
        let base = sp.norm(&f).unwrap();
        for s in [1.0, 1.5, 2.0, 7.0, f64::INFINITY] {
            assert!(close(tuple_norm(&[f.clone()], s, &sp).unwrap(), base, 1e-14));
        }

        let empty: Vec<Vec<f64>> = vec![];
        assert!(matches!(tuple_norm(&empty, 2.0, &sp), Err(Error::Empty(_))));
        assert!(tuple_norm(&[vec![1.0], vec![1.0, 2.0]], 2.0, &sp).is_err());
    }

    #[test]
    fn identical_entries_ratio() {
        let sp = MixedSpace::sequence(3, 2.0).unwrap();
        let x = vec![0.3, 1.0, 2.0];
        for n in [1usize, 2, 4, 7] {
            let fs = vec![x.clone(); n];
            for r in [1.5, 2.0, 4.0] {
                let ratio = tuple_norm(&fs, 1.0, &sp).unwrap() / tuple_norm(&fs, r, &sp).unwrap();
                assert!(close(ratio, (n as f64).powf(1.0 - 1.0 / r), 1e-12));
            }
        }
    }

    #[test]
    fn tuple_norm_is_the_appended_axis_norm() {
        let sp = MixedSpace::new(
            vec![MeasuredAxis::new(vec![0.5, 2.0]).unwrap(), MeasuredAxis::counting(3).unwrap()],
            vec![3.0, 1.5],
        )
        .unwrap();
        let fs = vec![
            vec![1.0, 2.0, 0.0, -1.0, 0.5, 3.0],
            vec![0.0, 1.0, 1.0, 2.0, -2.0, 0.25],
        ];
        let s = 2.5;
        let extended = sp.with_inner_axis(MeasuredAxis::counting(2).unwrap(), s).unwrap();
        let mut interleaved = Vec::new();
        for i in 0..6 {
            interleaved.push(fs[0][i]);
            interleaved.push(fs[1][i]);
        }
        let a = tuple_norm(&fs, s, &sp).unwrap();
        let b = extended.norm(&interleaved).unwrap();
        assert!(close(a, b, 1e-14));
    }

    #[test]
    fn lattice_norm_matches_manual_bochner() {
        let g = Grid1D::new(0.0, 0.5, 3).unwrap();
        let sp = MixedSpace::sequence(2, 3.0).unwrap();
        let vals = vec![1.0, 2.0, 0.0, 1.0, 3.0, -1.0];
        let f = LatticeFunction::new(g, sp.clone(), vals).unwrap();
        let w = GridFunction::new(g, vec![1.0, 2.0, 0.5]).unwrap();
        let p = 2.0;
        let norms = f.fiber_norms();
        let manual = weighted_lp_norm(&norms, p, &w).unwrap();
        assert!(close(f.norm(p, &w).unwrap(), manual, 1e-14));
        assert_eq!(f.fiber(1).values(), &[2.0, 1.0, -1.0]);
        let rebuilt = LatticeFunction::from_fibers(
            g,
            sp,
            &[f.fiber(0).into_values(), f.fiber(1).into_values()],
        )
        .unwrap();
        assert_eq!(rebuilt, f);
    }

    #[test]
    fn norm_gradient_matches_finite_differences() {
        let sp = MixedSpace::new(
            vec![MeasuredAxis::new(vec![0.5, 1.5]).unwrap(), MeasuredAxis::new(vec![1.0, 0.25, 2.0]).unwrap()],
            vec![1.7, 3.2],
        )
        .unwrap();
        let v = vec![0.3, -1.2, 0.7, 2.0, 0.1, -0.4];
        let (n, g) = sp.norm_with_grad(&v).unwrap();
        let eps = 1e-6;
        for i in 0..v.len() {
            let mut up = v.clone();
            up[i] += eps;
            let mut dn = v.clone();
            dn[i] -= eps;
            let fd = (sp.norm(&up).unwrap() - sp.norm(&dn).unwrap()) / (2.0 * eps);
            assert!((fd - g[i]).abs() < 1e-6, "entry {i}: fd {fd} vs {}", g[i]);
        }
        assert!(close(n, sp.norm(&v).unwrap(), 1e-15));
    }

    #[test]
    fn tuple_gradient_matches_finite_differences() {
        let sp = MixedSpace::new(vec![MeasuredAxis::new(vec![0.5, 1.0, 2.0]).unwrap()], vec![2.5]).unwrap();
        let fs = vec![vec![0.3, -1.2, 0.7], vec![1.0, 0.2, -0.6]];
        for s in [1.5, 3.0] {
            let (_, g) = tuple_norm_with_grad(&fs, s, &sp).unwrap();
            let eps = 1e-6;
            for n in 0..2 {
                for i in 0..3 {
                    let mut up = fs.clone();
                    up[n][i] += eps;
                    let mut dn = fs.clone();
                    dn[n][i] -= eps;
                    let fd = (tuple_norm(&up, s, &sp).unwrap() - tuple_norm(&dn, s, &sp).unwrap()) / (2.0 * eps);
                    assert!((fd - g[n][i]).abs() < 1e-6);
                }
            }
        }
    }

    fn small_space() -> impl Strategy<Value = MixedSpace> {
        (1usize..4, 1usize..4, 1.0f64..6.0, 1.0f64..6.0).prop_map(|(a, b, q1, q2)| {
            MixedSpace::new(
                vec![
                    MeasuredAxis::new((0..a).map(|i| 0.5 + i as f64).collect()).unwrap(),
                    MeasuredAxis::new((0..b).map(|i| 1.0 + 0.3 * i as f64).collect()).unwrap(),
                ],
                vec![q1, q2],
            )
            .unwrap()
        })
    }

    proptest! {
        #[test]
        fn monotone_in_pointwise_order(sp in small_space(), seed in 0u64..1000) {
            let mut rng = crate::rng::seeded(seed);
            let f = crate::rng::signed_vec(&mut rng, sp.dim());
            let bump = crate::rng::uniform_vec(&mut rng, sp.dim());
            let g: Vec<f64> = f.iter().zip(&bump).map(|(a, b)| a.abs() + b).collect();
            prop_assert!(sp.norm(&f).unwrap() <= sp.norm(&g).unwrap() * (1.0 + 1e-12));
        }

        #[test]
        fn fubini_for_equal_exponents(q in 1.0f64..8.0, seed in 0u64..1000) {
            let sp = MixedSpace::new(
                vec![MeasuredAxis::new(vec![0.5, 2.0, 1.0]).unwrap(), MeasuredAxis::new(vec![1.5, 0.2]).unwrap()],
                vec![q, q],
            ).unwrap();
            let mut rng = crate::rng::seeded(seed);
            let f = crate::rng::signed_vec(&mut rng, sp.dim());
            let flat = weighted_pnorm(&f, &sp.product_masses(), q);
            prop_assert!(close(sp.norm(&f).unwrap(), flat, 1e-12));
        }

        #[test]
        fn tuple_chains_and_monotonicity(n in 1usize..6, r in 1.0f64..10.0, seed in 0u64..1000) {
            let sp = MixedSpace::new(
                vec![MeasuredAxis::new(vec![0.5, 2.0]).unwrap(), MeasuredAxis::counting(3).unwrap()],
                vec![2.0, 3.5],
            ).unwrap();
            let mut rng = crate::rng::seeded(seed);
            let fs: Vec<Vec<f64>> = (0..n).map(|_| crate::rng::signed_vec(&mut rng, sp.dim())).collect();
            let t1 = tuple_norm(&fs, 1.0, &sp).unwrap();
            let tr = tuple_norm(&fs, r, &sp).unwrap();
            let tinf = tuple_norm(&fs, f64::INFINITY, &sp).unwrap();
            let nn = n as f64;
            let slack = 1.0 + 1e-12;
            prop_assert!(tr <= t1 * slack);
            prop_assert!(t1 <= nn.powf(1.0 - 1.0 / r) * tr * slack);
            prop_assert!(tinf <= tr * slack);
            prop_assert!(tr <= nn.powf(1.0 / r) * tinf * slack);
            let mut prev = f64::INFINITY;
            for s in [1.0, 1.3, 2.0, 3.0, 6.0, 20.0, f64::INFINITY] {
                let t = tuple_norm(&fs, s, &sp).unwrap();
                prop_assert!(t <= prev * slack);
                prev = t;
            }
        }

        #[test]
        fn homogeneity_and_triangle(c in -5.0f64..5.0, p in 1.01f64..10.0, seed in 0u64..1000) {
            let g = Grid1D::new(-1.0, 0.25, 8).unwrap();
            let mut rng = crate::rng::seeded(seed);
            let w = GridFunction::new(g, crate::rng::uniform_vec(&mut rng, 8).iter().map(|x| x + 0.1).collect()).unwrap();
            let f = GridFunction::new(g, crate::rng::signed_vec(&mut rng, 8)).unwrap();
            let h = GridFunction::new(g, crate::rng::signed_vec(&mut rng, 8)).unwrap();
            let nf = weighted_lp_norm(&f, p, &w).unwrap();
            let cf = f.map(|x| c * x);
            prop_assert!(close(weighted_lp_norm(&cf, p, &w).unwrap(), c.abs() * nf, 1e-12));
            let sum = GridFunction::new(g, f.values().iter().zip(h.values()).map(|(a, b)| a + b).collect()).unwrap();
            prop_assert!(weighted_lp_norm(&sum, p, &w).unwrap() <= (nf + weighted_lp_norm(&h, p, &w).unwrap()) * (1.0 + 1e-12));
        }
    }
}
