//! Integral operators with operator-valued kernels on a time grid.
//!
//! `(I_{k,T} f)(t) = h Σ_s k(t - s) T(t, s) f(s)` for `f` taking values in a
//! mixed space `X` on a finite spatial set. Functions are stored time-major,
//! matching [`LatticeFunction`](crate::lattice::LatticeFunction).

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernels::{catalog, convolve_values, in_class_k, Kernel, KernelSpec, MembershipStatus};
use crate::lattice::{bochner_space, check_exponent, check_tuple_exponent, Grid1D, MeasuredAxis, MixedSpace};
use crate::maximal::maximal_values;
use crate::rng;
use crate::sbound::{
    estimate_ls_bound, exact_ls_bound_structured, rademacher_bound_estimate, uniform_norm_bound, LinearMap,
    OperatorFamily, SearchConfig,
};
use crate::weights::{ap_constant, fit_consistency_profile, power_weight, ConsistencyProfile, Weight};

/// Slack on the uniform bound `sup ‖T(t, s)‖ ≤ 1`.
const BOUND_TOL: f64 = 1e-12;
/// Slack on the links of the pointwise domination chain.
const CHAIN_TOL: f64 = 1e-9;

/// Two-parameter family `T(t, s)` of operators on `X`, indexed by time cells.
pub trait EvolutionFamily: Send + Sync {
    fn n_time(&self) -> usize;
    fn space(&self) -> &MixedSpace;
    fn label(&self) -> String;
    /// Whether `T(t, s) = 0` for `t < s`.
    fn is_causal(&self) -> bool;
    fn apply(&self, t: usize, s: usize, phi: &[f64]) -> Vec<f64>;
    /// Plain transpose of `T(t, s)`.
    fn apply_transpose(&self, t: usize, s: usize, psi: &[f64]) -> Vec<f64>;
    /// Upper bound on `sup_{t,s} ‖T(t, s)‖_{X → X}`.
    fn uniform_bound(&self) -> f64;

    fn operator(&self, t: usize, s: usize) -> DMatrix<f64> {
        let d = self.space().dim();
        let mut out = DMatrix::zeros(d, d);
        let mut e = vec![0.0; d];
        for j in 0..d {
            e[j] = 1.0;
            for (i, v) in self.apply(t, s, &e).into_iter().enumerate() {
                out[(i, j)] = v;
            }
            e[j] = 0.0;
        }
        out
    }
}

/// `L^q` on `n` spatial cells of width `dx`.
pub fn spatial_space(n: usize, dx: f64, q: f64) -> Result<MixedSpace> {
    MixedSpace::new(vec![MeasuredAxis::uniform(n, dx)?], vec![q])
}

#[derive(Debug, Clone)]
pub struct IdentityFamily {
    n_time: usize,
    space: MixedSpace,
    causal: bool,
}

impl IdentityFamily {
    pub fn new(n_time: usize, space: MixedSpace, causal: bool) -> Self {
        Self { n_time, space, causal }
    }
}

impl EvolutionFamily for IdentityFamily {
    fn n_time(&self) -> usize {
        self.n_time
    }

    fn space(&self) -> &MixedSpace {
        &self.space
    }

    fn label(&self) -> String {
        if self.causal { "identity_causal" } else { "identity" }.to_string()
    }

    fn is_causal(&self) -> bool {
        self.causal
    }

    fn apply(&self, t: usize, s: usize, phi: &[f64]) -> Vec<f64> {
        if self.causal && t < s {
            vec![0.0; phi.len()]
        } else {
            phi.to_vec()
        }
    }

    fn apply_transpose(&self, t: usize, s: usize, psi: &[f64]) -> Vec<f64> {
        self.apply(t, s, psi)
    }

    fn uniform_bound(&self) -> f64 {
        1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Periodic,
    ZeroPadded,
}

/// Discrete heat semigroup `T(t, s) = exp((t - s) h κ Δ)` for `t ≥ s`, zero
/// otherwise, with `Δ` the second-difference Laplacian on the spatial cells.
///
/// Periodic boundaries give an exact semigroup of doubly stochastic
/// matrices. Zero-padded boundaries restrict the kernel of a torus three
/// times larger to the window, which loses mass near the edges.
#[derive(Debug, Clone)]
pub struct HeatFamily {
    space: MixedSpace,
    boundary: Boundary,
    scale: f64,
    lags: Vec<DMatrix<f64>>,
}

/// `exp(τ Δ)` on the discrete torus of `n` cells: circulant with entries
/// `(1/n) Σ_k exp(-τ λ_k) cos(2π k d / n)`, `λ_k = 4 sin²(π k / n) / dx²`.
fn torus_heat_row(n: usize, dx: f64, tau: f64) -> Vec<f64> {
    let eig: Vec<f64> = (0..n)
        .map(|k| {
            let sn = (std::f64::consts::PI * k as f64 / n as f64).sin();
            (-tau * 4.0 * sn * sn / (dx * dx)).exp()
        })
        .collect();
    (0..n)
        .map(|d| {
            let acc: f64 = eig
                .iter()
                .enumerate()
                .map(|(k, e)| e * (2.0 * std::f64::consts::PI * (k * d % n) as f64 / n as f64).cos())
                .sum();
            acc / n as f64
        })
        .collect()
}

impl HeatFamily {
    pub fn new(n_time: usize, time_width: f64, space_cells: usize, q: f64, scale: f64, boundary: Boundary) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidArgument(format!("diffusion scale {scale} must be positive")));
        }
        if space_cells == 0 || n_time == 0 {
            return Err(Error::Empty("heat family grid"));
        }
        let dx = 1.0 / space_cells as f64;
        let space = spatial_space(space_cells, dx, q)?;
        let n = space_cells;
        let torus = match boundary {
            Boundary::Periodic => n,
            Boundary::ZeroPadded => 3 * n,
        };
        let lags = (0..n_time)
            .map(|lag| {
                if lag == 0 {
                    return DMatrix::identity(n, n);
                }
                let row = torus_heat_row(torus, dx, lag as f64 * time_width * scale);
                DMatrix::from_fn(n, n, |i, j| {
                    let d = (i as i64 - j as i64).rem_euclid(torus as i64) as usize;
                    row[d].max(0.0)
                })
            })
            .collect();
        Ok(Self {
            space,
            boundary,
            scale,
            lags,
        })
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn lag_matrix(&self, lag: usize) -> &DMatrix<f64> {
        &self.lags[lag]
    }

    /// `max_{a+b<n} max |P_a P_b - P_{a+b}|`, the failure of the semigroup law.
    pub fn semigroup_defect(&self) -> f64 {
        let n = self.lags.len();
        let mut worst = 0.0f64;
        for a in 0..n {
            for b in 0..n - a {
                let d = (&self.lags[a] * &self.lags[b] - &self.lags[a + b]).abs().max();
                worst = worst.max(d);
            }
        }
        worst
    }
}

impl EvolutionFamily for HeatFamily {
    fn n_time(&self) -> usize {
        self.lags.len()
    }

    fn space(&self) -> &MixedSpace {
        &self.space
    }

    fn label(&self) -> String {
        let b = match self.boundary {
            Boundary::Periodic => "periodic",
            Boundary::ZeroPadded => "zero_padded",
        };
        format!("heat({}, {b})", self.scale)
    }

    fn is_causal(&self) -> bool {
        true
    }

    fn apply(&self, t: usize, s: usize, phi: &[f64]) -> Vec<f64> {
        if t < s {
            return vec![0.0; phi.len()];
        }
        self.lags[t - s].apply(phi)
    }

    fn apply_transpose(&self, t: usize, s: usize, psi: &[f64]) -> Vec<f64> {
        if t < s {
            return vec![0.0; psi.len()];
        }
        self.lags[t - s].apply_transpose(psi)
    }

    fn uniform_bound(&self) -> f64 {
        self.lags
            .iter()
            .map(|m| uniform_norm_bound(m, &self.space, &self.space).map(|b| b.0).unwrap_or(f64::INFINITY))
            .fold(0.0, f64::max)
    }
}

/// `T(t, s) = diag(m(t, s, ·))` with seeded `|m| ≤ bound`, zero for `t < s`.
#[derive(Debug, Clone)]
pub struct MultiplicationFamily {
    n_time: usize,
    space: MixedSpace,
    multipliers: Vec<Vec<f64>>,
    seed: u64,
}

impl MultiplicationFamily {
    pub fn seeded(n_time: usize, space: MixedSpace, bound: f64, seed: u64) -> Result<Self> {
        if !(bound > 0.0 && bound.is_finite()) {
            return Err(Error::InvalidArgument(format!("bound {bound} must be positive")));
        }
        let d = space.dim();
        let mut r = rng::seeded(seed);
        let multipliers = (0..n_time * n_time)
            .map(|idx| {
                let (t, s) = (idx / n_time, idx % n_time);
                let v: Vec<f64> = (0..d).map(|_| bound * r.random_range(-1.0..1.0)).collect();
                if t < s {
                    vec![0.0; d]
                } else {
                    v
                }
            })
            .collect();
        Ok(Self {
            n_time,
            space,
            multipliers,
            seed,
        })
    }

    pub fn multiplier(&self, t: usize, s: usize) -> &[f64] {
        &self.multipliers[t * self.n_time + s]
    }

    /// `{T(t, s)}` as a multiplication-structured operator family on `X`.
    pub fn as_operator_family(&self) -> Result<OperatorFamily> {
        OperatorFamily::multiplication(self.multipliers.clone(), self.space.clone())
    }
}

impl EvolutionFamily for MultiplicationFamily {
    fn n_time(&self) -> usize {
        self.n_time
    }

    fn space(&self) -> &MixedSpace {
        &self.space
    }

    fn label(&self) -> String {
        format!("multiplication(seed {})", self.seed)
    }

    fn is_causal(&self) -> bool {
        true
    }

    fn apply(&self, t: usize, s: usize, phi: &[f64]) -> Vec<f64> {
        self.multiplier(t, s).iter().zip(phi).map(|(m, x)| m * x).collect()
    }

    fn apply_transpose(&self, t: usize, s: usize, psi: &[f64]) -> Vec<f64> {
        self.apply(t, s, psi)
    }

    fn uniform_bound(&self) -> f64 {
        self.multipliers.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max)
    }
}

/// `T̃(t, s) = E T(t, s) R`: extension by zero of a family living on a
/// subset of the flattened coordinates of `full`.
pub struct ExtendedFamily {
    inner: Arc<dyn EvolutionFamily>,
    full: MixedSpace,
    cells: Vec<usize>,
}

fn check_cells(cells: &[usize], n_full: usize) -> Result<()> {
    if cells.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("subdomain cells must be strictly increasing".into()));
    }
    if let Some(c) = cells.iter().find(|c| **c >= n_full) {
        return Err(Error::InvalidArgument(format!("subdomain cell {c} outside the grid of {n_full}")));
    }
    Ok(())
}

/// The subspace of `full` spanned by `cells` (single-axis spaces only).
pub fn restrict_space(full: &MixedSpace, cells: &[usize]) -> Result<MixedSpace> {
    if full.axes().len() != 1 {
        return Err(Error::InvalidArgument("restriction needs a single-axis space".into()));
    }
    check_cells(cells, full.dim())?;
    let masses = full.axes()[0].masses();
    MixedSpace::new(
        vec![MeasuredAxis::new(cells.iter().map(|c| masses[*c]).collect())?],
        full.exponents().to_vec(),
    )
}

/// `E A R` for a matrix on the subdomain.
pub fn extend_restrict_matrix(a: &DMatrix<f64>, cells: &[usize], n_full: usize) -> Result<DMatrix<f64>> {
    check_cells(cells, n_full)?;
    if a.nrows() != cells.len() || a.ncols() != cells.len() {
        return Err(Error::ShapeMismatch {
            expected: cells.len(),
            got: a.nrows(),
        });
    }
    let mut out = DMatrix::zeros(n_full, n_full);
    for (i, ci) in cells.iter().enumerate() {
        for (j, cj) in cells.iter().enumerate() {
            out[(*ci, *cj)] = a[(i, j)];
        }
    }
    Ok(out)
}

pub fn extend_restrict(inner: Arc<dyn EvolutionFamily>, full: &MixedSpace, cells: &[usize]) -> Result<ExtendedFamily> {
    let sub = restrict_space(full, cells)?;
    if &sub != inner.space() {
        return Err(Error::InvalidArgument(
            "family space does not match the restriction of the full space".into(),
        ));
    }
    Ok(ExtendedFamily {
        inner,
        full: full.clone(),
        cells: cells.to_vec(),
    })
}

impl ExtendedFamily {
    fn restrict(&self, v: &[f64]) -> Vec<f64> {
        self.cells.iter().map(|c| v[*c]).collect()
    }

    fn extend(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.full.dim()];
        for (c, x) in self.cells.iter().zip(v) {
            out[*c] = *x;
        }
        out
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }
}

impl EvolutionFamily for ExtendedFamily {
    fn n_time(&self) -> usize {
        self.inner.n_time()
    }

    fn space(&self) -> &MixedSpace {
        &self.full
    }

    fn label(&self) -> String {
        format!("extended({})", self.inner.label())
    }

    fn is_causal(&self) -> bool {
        self.inner.is_causal()
    }

    fn apply(&self, t: usize, s: usize, phi: &[f64]) -> Vec<f64> {
        self.extend(&self.inner.apply(t, s, &self.restrict(phi)))
    }

    fn apply_transpose(&self, t: usize, s: usize, psi: &[f64]) -> Vec<f64> {
        self.extend(&self.inner.apply_transpose(t, s, &self.restrict(psi)))
    }

    fn uniform_bound(&self) -> f64 {
        self.inner.uniform_bound()
    }
}

/// `I_{k,T}` on time-major vectors of length `n_time * dim X`.
#[derive(Clone)]
pub struct IntegralOperator {
    kernel: Kernel,
    family: Arc<dyn EvolutionFamily>,
    certified: bool,
}

impl IntegralOperator {
    pub fn new(kernel: Kernel, family: Arc<dyn EvolutionFamily>) -> Self {
        let certified = in_class_k(&kernel, 0, 0).status == MembershipStatus::Certified;
        Self {
            kernel,
            family,
            certified,
        }
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn family(&self) -> &Arc<dyn EvolutionFamily> {
        &self.family
    }

    /// Whether the kernel carries a class-`K` majorant certificate.
    pub fn is_certified(&self) -> bool {
        self.certified
    }

    fn dim_x(&self) -> usize {
        self.family.space().dim()
    }

    pub fn apply_checked(&self, f: &[f64]) -> Result<Vec<f64>> {
        let expected = self.family.n_time() * self.dim_x();
        if f.len() != expected {
            return Err(Error::ShapeMismatch { expected, got: f.len() });
        }
        Ok(self.apply(f))
    }
}

impl LinearMap for IntegralOperator {
    fn dim_in(&self) -> usize {
        self.family.n_time() * self.dim_x()
    }

    fn dim_out(&self) -> usize {
        self.dim_in()
    }

    fn apply(&self, f: &[f64]) -> Vec<f64> {
        let nt = self.family.n_time() as i64;
        let d = self.dim_x();
        let m = self.kernel.half_width() as i64;
        let h = self.kernel.width();
        let mut out = vec![0.0; f.len()];
        for t in 0..nt {
            let row = &mut out[t as usize * d..(t as usize + 1) * d];
            for s in (t - m).max(0)..=(t + m).min(nt - 1) {
                let k = self.kernel.at(t - s);
                if k == 0.0 {
                    continue;
                }
                let fs = &f[s as usize * d..(s as usize + 1) * d];
                if fs.iter().all(|v| *v == 0.0) {
                    continue;
                }
                for (o, v) in row.iter_mut().zip(self.family.apply(t as usize, s as usize, fs)) {
                    *o += h * k * v;
                }
            }
        }
        out
    }

    fn apply_transpose(&self, g: &[f64]) -> Vec<f64> {
        let nt = self.family.n_time() as i64;
        let d = self.dim_x();
        let m = self.kernel.half_width() as i64;
        let h = self.kernel.width();
        let mut out = vec![0.0; g.len()];
        for s in 0..nt {
            let row = &mut out[s as usize * d..(s as usize + 1) * d];
            for t in (s - m).max(0)..=(s + m).min(nt - 1) {
                let k = self.kernel.at(t - s);
                if k == 0.0 {
                    continue;
                }
                let gt = &g[t as usize * d..(t as usize + 1) * d];
                for (o, v) in row.iter_mut().zip(self.family.apply_transpose(t as usize, s as usize, gt)) {
                    *o += h * k * v;
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainReport {
    pub pass: bool,
    pub trials: usize,
    /// Largest `‖(If)(t)‖_X - (|k| * ‖f‖_X)(t)`.
    pub worst_minkowski: f64,
    /// Largest `(|k| * ‖f‖_X)(t) - M(‖f‖_X)(t)`.
    pub worst_maximal: f64,
    /// Largest `‖If‖_{L^p(v;X)} / ‖M(‖f‖_X)‖_{L^p(v)}`.
    pub worst_norm_ratio: f64,
    /// Factor the family was divided by to reach `sup ‖T‖ ≤ 1`.
    pub rescale: f64,
}

/// Samples the chain `‖(If)(t)‖_X ≤ (|k| * ‖f(·)‖_X)(t) ≤ M(‖f(·)‖_X)(t)` and
/// the resulting norm bound on `L^p(v; X)`.
///
/// The first link needs `sup ‖T(t, s)‖ ≤ 1`; a larger bound is an error
/// unless `rescale` is set, in which case every link is checked for
/// `I / sup‖T‖`.
pub fn uniform_bound_check(
    op: &IntegralOperator,
    p: f64,
    v: &Weight,
    trials: usize,
    seed: u64,
    rescale: bool,
) -> Result<ChainReport> {
    check_exponent(p)?;
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let nt = op.family.n_time();
    if v.len() != nt {
        return Err(Error::ShapeMismatch { expected: nt, got: v.len() });
    }
    let bound = op.family.uniform_bound();
    let factor = if bound <= 1.0 + BOUND_TOL {
        1.0
    } else if rescale {
        bound
    } else {
        return Err(Error::InvalidArgument(format!(
            "family bound {bound} exceeds 1; rescale first"
        )));
    };
    let space = op.family.space().clone();
    let d = space.dim();
    let k_abs = op.kernel.abs();
    let masses: Vec<f64> = v.values().iter().map(|x| v.grid().width() * x).collect();
    let full = bochner_space(v.as_function(), p, &space)?;

    let results: Vec<(f64, f64, f64)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut r = rng::stream(seed, t as u64);
            let f: Vec<f64> = match t % 3 {
                0 => rng::signed_vec(&mut r, nt * d),
                1 => rng::spiky_vec(&mut r, nt * d, 0.1),
                _ => {
                    let cell = r.random_range(0..nt);
                    let mut f = vec![0.0; nt * d];
                    for x in 0..d {
                        f[cell * d + x] = r.random_range(-1.0..1.0);
                    }
                    f
                }
            };
            let out: Vec<f64> = op.apply(&f).into_iter().map(|x| x / factor).collect();
            let fnorms: Vec<f64> = f.chunks(d).map(|c| space.norm(c).expect("fiber length")).collect();
            let onorms: Vec<f64> = out.chunks(d).map(|c| space.norm(c).expect("fiber length")).collect();
            let conv = convolve_values(&k_abs, &fnorms);
            let mf = maximal_values(&fnorms);
            let mut w1 = f64::NEG_INFINITY;
            let mut w2 = f64::NEG_INFINITY;
            for i in 0..nt {
                w1 = w1.max(onorms[i] - conv[i]);
                w2 = w2.max(conv[i] - mf[i]);
            }
            let num = full.norm(&out).expect("shape");
            let den = crate::lattice::weighted_pnorm(&mf, &masses, p);
            let ratio = if den > 0.0 { num / den } else { 0.0 };
            (w1, w2, ratio)
        })
        .collect();
    let worst_minkowski = results.iter().map(|r| r.0).fold(f64::NEG_INFINITY, f64::max);
    let worst_maximal = results.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    let worst_norm_ratio = results.iter().map(|r| r.2).fold(0.0, f64::max);
    Ok(ChainReport {
        pass: worst_minkowski <= CHAIN_TOL && worst_maximal <= CHAIN_TOL && worst_norm_ratio <= 1.0 + CHAIN_TOL,
        trials,
        worst_minkowski,
        worst_maximal,
        worst_norm_ratio,
        rescale: factor,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FamilySpec {
    Identity { causal: bool },
    Heat { scale: f64, boundary: Boundary },
    Multiplication { seed: u64 },
}

impl FamilySpec {
    pub fn build(&self, n_time: usize, time_width: f64, n_space: usize, q: f64) -> Result<Arc<dyn EvolutionFamily>> {
        let space = spatial_space(n_space, 1.0 / n_space as f64, q)?;
        Ok(match *self {
            FamilySpec::Identity { causal } => Arc::new(IdentityFamily::new(n_time, space, causal)),
            FamilySpec::Heat { scale, boundary } => {
                Arc::new(HeatFamily::new(n_time, time_width, n_space, q, scale, boundary)?)
            }
            FamilySpec::Multiplication { seed } => Arc::new(MultiplicationFamily::seeded(n_time, space, 1.0, seed)?),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n_time: usize,
    pub n_space: usize,
    pub p: f64,
    pub q: f64,
    pub s_list: Vec<f64>,
    pub kernels: Vec<KernelSpec>,
    pub family: FamilySpec,
    /// Power weights `|t|^a` on the time grid `[-1, 1)`.
    pub weight_powers: Vec<f64>,
    pub search: SearchConfig,
    /// Tuple budgets for the Rademacher estimate (empty to skip it).
    pub rademacher_budgets: Vec<usize>,
    pub chain_trials: usize,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_time: 64,
            n_space: 16,
            p: 2.0,
            q: 2.0,
            s_list: vec![2.0],
            kernels: vec![
                KernelSpec::Gaussian { t: 0.002 },
                KernelSpec::Box { half_width: 2 },
                KernelSpec::OneSidedExponential { lambda: 20.0 },
            ],
            family: FamilySpec::Heat {
                scale: 0.05,
                boundary: Boundary::Periodic,
            },
            weight_powers: vec![0.0, 0.3, 0.6, 0.9],
            search: SearchConfig::default(),
            rademacher_budgets: vec![],
            chain_trials: 32,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRow {
    pub s: f64,
    pub power: f64,
    /// `[v]_{A_{p/s}}` when `s < p`, else `[v]_{A_p}`.
    pub ap_constant: f64,
    pub lower: f64,
    pub upper: Option<f64>,
    pub certificate_kind: Option<&'static str>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RademacherRow {
    pub power: f64,
    pub ap_constant: f64,
    pub budget: usize,
    pub lower: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub family_label: String,
    pub kernels: Vec<(String, f64, &'static str)>,
    pub rows: Vec<ExperimentRow>,
    pub rademacher: Vec<RademacherRow>,
    pub chains: Vec<(String, f64, ChainReport)>,
    /// Per `s`: envelope of the convolution-norm bound against `[v]_{A_{p/s}}`.
    pub alpha_envelopes: Vec<(f64, ConsistencyProfile)>,
}

/// Upper bound on `‖f ↦ φ * f‖_{L^r(v)}` for a nonnegative kernel `φ`, by
/// Riesz–Thorin between the exact `L¹(v)` and `L^∞` norms.
pub fn convolution_norm_bound(phi: &Kernel, v: &Weight, r: f64) -> Result<f64> {
    check_exponent(r)?;
    let n = v.len() as i64;
    let m = phi.half_width() as i64;
    let h = v.grid().width();
    let w = v.values();
    // L^∞: max_t h Σ_s φ(t - s); L¹(v): max_s h Σ_t φ(t - s) v(t) / v(s)
    let mut inf = 0.0f64;
    let mut one = 0.0f64;
    for i in 0..n {
        let mut row = 0.0;
        let mut col = 0.0;
        for j in (i - m).max(0)..=(i + m).min(n - 1) {
            row += phi.at(i - j).abs();
            col += phi.at(j - i).abs() * w[j as usize];
        }
        inf = inf.max(h * row);
        one = one.max(h * col / w[i as usize]);
    }
    Ok(one.powf(1.0 / r) * inf.powf(1.0 - 1.0 / r))
}

/// Pointwise maximum of `|k|` over a kernel set, on the widest window.
pub fn kernel_envelope(kernels: &[Kernel]) -> Result<Kernel> {
    let first = kernels.first().ok_or(Error::Empty("kernel set"))?;
    let m = kernels.iter().map(|k| k.half_width()).max().unwrap_or(0) as i64;
    let vals = (-m..=m)
        .map(|o| kernels.iter().map(|k| k.at(o).abs()).fold(0.0, f64::max))
        .collect();
    Kernel::new(vals, first.width())
}

/// Builds `{I_k}` over the certified kernels of the configuration and runs
/// the ℓ^s and Rademacher searches per weight, the pointwise domination chain check,
/// and, for multiplication families, the certificate
/// `R^s(T) · α̂([v]_{A_{p/s}})` where `α̂` is the nondecreasing envelope of
/// the convolution bound for `max_k |k|` on `L^p(v)`.
pub fn theorem_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    check_exponent(cfg.p)?;
    check_exponent(cfg.q)?;
    for s in &cfg.s_list {
        check_tuple_exponent(*s)?;
    }
    cfg.search.validate()?;
    let grid = Grid1D::spanning(-1.0, 1.0, cfg.n_time)?;
    let family = cfg.family.build(cfg.n_time, grid.width(), cfg.n_space, cfg.q)?;

    let mut kernel_rows = Vec::new();
    let mut ops = Vec::new();
    for spec in &cfg.kernels {
        let k = catalog(*spec, None, &grid)?;
        let verdict = in_class_k(&k, 64, cfg.seed);
        kernel_rows.push((spec.name().to_string(), spec.param(), verdict.status.as_str()));
        if verdict.status == MembershipStatus::Certified {
            ops.push((spec.name().to_string(), IntegralOperator::new(k, family.clone())));
        }
    }
    if ops.is_empty() {
        return Err(Error::InvalidArgument("no certified kernels in the configuration".into()));
    }
    let envelope = kernel_envelope(&ops.iter().map(|(_, op)| op.kernel().clone()).collect::<Vec<_>>())?;
    let t_bound = match cfg.family {
        FamilySpec::Multiplication { seed } => {
            let space = spatial_space(cfg.n_space, 1.0 / cfg.n_space as f64, cfg.q)?;
            let fam = MultiplicationFamily::seeded(cfg.n_time, space, 1.0, seed)?;
            Some(exact_ls_bound_structured(&fam.as_operator_family()?, 1.0)?)
        }
        _ => None,
    };

    let weights: Vec<(f64, Weight)> = cfg
        .weight_powers
        .iter()
        .map(|a| Ok((*a, power_weight(*a, &grid)?)))
        .collect::<Result<_>>()?;

    // α̂ per s from the convolution bound on L^p(v) against [v]_{A_{p/s}}
    let mut alpha_envelopes = Vec::new();
    let mut ap_for_s = Vec::new();
    for &s in &cfg.s_list {
        let r = if s < cfg.p { cfg.p / s } else { cfg.p };
        let mut pts = Vec::new();
        let mut aps = Vec::new();
        for (_, v) in &weights {
            let a = ap_constant(v, r)?.constant;
            pts.push((a, convolution_norm_bound(&envelope, v, cfg.p)?));
            aps.push(a);
        }
        if pts.len() == 1 {
            pts.push(pts[0]);
        }
        alpha_envelopes.push((s, fit_consistency_profile(&pts)?));
        ap_for_s.push(aps);
    }

    let mut rows = Vec::new();
    let mut rademacher = Vec::new();
    let mut chains = Vec::new();
    for (wi, (a, v)) in weights.iter().enumerate() {
        let space = bochner_space(v.as_function(), cfg.p, family.space())?;
        let members: Vec<Arc<dyn LinearMap>> = ops
            .iter()
            .map(|(_, op)| Arc::new(op.clone()) as Arc<dyn LinearMap>)
            .collect();
        let labels = ops.iter().map(|(n, _)| n.clone()).collect();
        let fam = OperatorFamily::new(members, labels, space.clone(), space)?;
        for (si, &s) in cfg.s_list.iter().enumerate() {
            let est = estimate_ls_bound(&fam, s, &cfg.search, cfg.seed)?;
            let ap = ap_for_s[si][wi];
            let (upper, kind) = match t_bound {
                Some(rt) => (Some(rt * alpha_envelopes[si].1.value_at(ap)), Some("closed_form")),
                None => (None, None),
            };
            rows.push(ExperimentRow {
                s,
                power: *a,
                ap_constant: ap,
                lower: est.lower,
                upper,
                certificate_kind: kind,
            });
        }
        for &budget in &cfg.rademacher_budgets {
            let rcfg = SearchConfig {
                n_max: budget,
                ..cfg.search
            };
            let est = rademacher_bound_estimate(&fam, &rcfg, cfg.seed)?;
            rademacher.push(RademacherRow {
                power: *a,
                ap_constant: ap_constant(v, cfg.p)?.constant,
                budget,
                lower: est.lower,
            });
        }
        if cfg.chain_trials > 0 {
            for (name, op) in &ops {
                let rep = uniform_bound_check(op, cfg.p, v, cfg.chain_trials, cfg.seed, true)?;
                chains.push((name.clone(), *a, rep));
            }
        }
    }
    Ok(ExperimentReport {
        family_label: family.label(),
        kernels: kernel_rows,
        rows,
        rademacher,
        chains,
        alpha_envelopes,
    })
}
