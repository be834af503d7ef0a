//! Rubio de Francia iteration, sampled extrapolation checks, and dominating
//! weights for structured operator families.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{check_exponent, weighted_pnorm, GridFunction, LatticeFunction, MixedSpace};
use crate::maximal::{lattice_maximal, maximal_norm_lower, maximal_values};
use crate::rng;
use crate::sbound::{exact_ls_bound_structured, OperatorFamily, Structure};
use crate::weights::{ap_constant, fit_consistency_profile, ConsistencyProfile, Weight};

/// Rounding slack on the pointwise invariants of the iteration.
const POINTWISE_RTOL: f64 = 1e-12;
/// Violations of the domination inequalities beyond this fail verification.
pub const DOMINATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct RdfResult {
    pub input: GridFunction,
    pub output: GridFunction,
    pub terms: usize,
    /// The `m` in `Σ M^k u / (2m)^k`.
    pub m_norm_used: f64,
    /// `‖Ru‖_{L^p(w)} / ‖u‖_{L^p(w)}`.
    pub norm_ratio: f64,
    /// `‖M^{K+1} u‖ / (2m)^K` relative to `‖Ru‖`.
    pub tail_ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RdfOptions {
    pub terms: usize,
    /// Estimate of `‖M‖_{B(L^p(w))}`; when absent a search lower bound is used.
    pub m_estimate: Option<f64>,
    pub trials: usize,
    pub seed: u64,
}

impl Default for RdfOptions {
    fn default() -> Self {
        Self {
            terms: 16,
            m_estimate: None,
            trials: 8,
            seed: 0,
        }
    }
}

/// `Ru = Σ_{k=0}^{K} M^k u / (2m)^k` with `m` twice the estimate of `‖M‖`.
///
/// Checked on construction: `u ≤ Ru`, `‖Ru‖ ≤ 2‖u‖` (a violation means the
/// estimate of `‖M‖` was too small and is reported as divergence), and
/// `M(Ru) ≤ 2m Ru + M^{K+1}u / (2m)^K` pointwise.
pub fn rdf_iterate(u: &GridFunction, p: f64, w: &Weight, opts: &RdfOptions) -> Result<RdfResult> {
    check_exponent(p)?;
    if opts.terms == 0 {
        return Err(Error::InvalidArgument("need at least one term".into()));
    }
    u.grid().ensure_same(w.grid())?;
    if let Some((i, v)) = u.values().iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
        return Err(Error::InvalidArgument(format!("u must be nonnegative, u[{i}] = {v}")));
    }
    if u.values().iter().all(|v| *v == 0.0) {
        return Err(Error::InvalidArgument("u is identically zero".into()));
    }
    let estimate = match opts.m_estimate {
        Some(m) if m > 0.0 && m.is_finite() => m,
        Some(m) => return Err(Error::InvalidArgument(format!("norm estimate {m} must be positive"))),
        None => maximal_norm_lower(p, w, opts.trials.max(1), opts.seed)?.lower_bound,
    };
    let m = 2.0 * estimate;
    let denom = 2.0 * m;
    let masses: Vec<f64> = w.values().iter().map(|v| w.grid().width() * v).collect();

    let mut acc = u.values().to_vec();
    let mut power = u.values().to_vec();
    for k in 1..=opts.terms {
        power = maximal_values(&power);
        let scale = denom.powi(k as i32);
        for (a, b) in acc.iter_mut().zip(&power) {
            *a += b / scale;
        }
    }
    let tail: Vec<f64> = maximal_values(&power)
        .into_iter()
        .map(|v| v / denom.powi(opts.terms as i32))
        .collect();

    let nu = weighted_pnorm(u.values(), &masses, p);
    let nr = weighted_pnorm(&acc, &masses, p);
    if nr > 2.0 * nu * (1.0 + POINTWISE_RTOL) {
        return Err(Error::Divergent(format!(
            "‖Ru‖/‖u‖ = {} exceeds 2 with m = {m}; supply a larger estimate of ‖M‖",
            nr / nu
        )));
    }
    if let Some(i) = u.values().iter().zip(&acc).position(|(a, b)| a > b) {
        return Err(Error::Divergent(format!("u exceeds Ru at cell {i}")));
    }
    let m_acc = maximal_values(&acc);
    for (i, ((mr, r), t)) in m_acc.iter().zip(&acc).zip(&tail).enumerate() {
        let bound = denom * r + t;
        if *mr > bound * (1.0 + POINTWISE_RTOL) {
            return Err(Error::Divergent(format!(
                "M(Ru) exceeds 2m Ru + tail at cell {i}: {mr} > {bound}"
            )));
        }
    }
    let tail_norm = weighted_pnorm(&tail, &masses, p);
    Ok(RdfResult {
        input: u.clone(),
        output: GridFunction::new(*u.grid(), acc)?,
        terms: opts.terms,
        m_norm_used: m,
        norm_ratio: nr / nu,
        tail_ratio: tail_norm / nr,
    })
}

/// How a pair `(f, g)` is produced from a random nonnegative `g₀`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairKind {
    /// `(g₀, g₀)`.
    Identity,
    /// `(Mg₀, g₀)`.
    MaximalOf,
    /// `(g₀, Mg₀)`.
    Reversed,
}

impl PairKind {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "identity" => Ok(PairKind::Identity),
            "maximal" => Ok(PairKind::MaximalOf),
            "reversed" => Ok(PairKind::Reversed),
            other => Err(Error::InvalidArgument(format!("unknown pair generator '{other}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PairKind::Identity => "identity",
            PairKind::MaximalOf => "maximal",
            PairKind::Reversed => "reversed",
        }
    }

    fn scalar(&self, g0: &[f64]) -> (Vec<f64>, Vec<f64>) {
        match self {
            PairKind::Identity => (g0.to_vec(), g0.to_vec()),
            PairKind::MaximalOf => (maximal_values(g0), g0.to_vec()),
            PairKind::Reversed => (g0.to_vec(), maximal_values(g0)),
        }
    }

    fn lattice(&self, g0: &LatticeFunction) -> (LatticeFunction, LatticeFunction) {
        match self {
            PairKind::Identity => (g0.clone(), g0.clone()),
            PairKind::MaximalOf => (lattice_maximal(g0), g0.clone()),
            PairKind::Reversed => (g0.clone(), lattice_maximal(g0)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub ap_constant: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExponentForm {
    /// `(p0 - 1)/(p - 1) + 1`.
    Shifted,
    /// `max(1, (p0 - 1)/(p - 1))`.
    Classical,
}

impl ExponentForm {
    pub fn exponent(&self, p0: f64, p: f64) -> f64 {
        let base = (p0 - 1.0) / (p - 1.0);
        match self {
            ExponentForm::Shifted => base + 1.0,
            ExponentForm::Classical => base.max(1.0),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ExponentForm::Shifted => "shifted",
            ExponentForm::Classical => "classical",
        }
    }
}

/// Smallest `c` with `ratio ≤ factor · α̂(c [w]^e)` on every conclusion
/// sample, for one exponent form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantFit {
    pub form: ExponentForm,
    pub exponent: f64,
    /// `None` when some ratio exceeds `factor · sup α̂`.
    pub c: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConclusionBlock {
    pub p: f64,
    pub samples: Vec<Sample>,
    pub envelope: ConsistencyProfile,
    pub fits: Vec<ConstantFit>,
    /// Form with the smaller fitted `c` (ties to the shifted form).
    pub favored: Option<ExponentForm>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtrapolationReport {
    pub p0: f64,
    pub axes: usize,
    /// `4^(axes + 1)`: one factor 4 for the scalar step and one per axis.
    pub factor: f64,
    pub generator: PairKind,
    pub sample_count: usize,
    pub seed: u64,
    pub hypothesis: Vec<Sample>,
    pub alpha: ConsistencyProfile,
    pub conclusions: Vec<ConclusionBlock>,
    pub verdict: bool,
}

impl ExtrapolationReport {
    /// Rows `phase,p,ap_constant,ratio`.
    pub fn rows(&self) -> Vec<(&'static str, f64, f64, f64)> {
        let mut rows: Vec<_> = self
            .hypothesis
            .iter()
            .map(|s| ("hypothesis", self.p0, s.ap_constant, s.ratio))
            .collect();
        for block in &self.conclusions {
            rows.extend(block.samples.iter().map(|s| ("conclusion", block.p, s.ap_constant, s.ratio)));
        }
        rows
    }
}

/// Fiber `s` of sample `i` draws from the same stream as the scalar sample
/// `i` when `s = 0`, so a one-point Ω reproduces the scalar samples.
fn lattice_samples(grid: crate::lattice::Grid1D, space: &MixedSpace, count: usize, seed: u64) -> Result<Vec<LatticeFunction>> {
    (0..count)
        .map(|i| {
            let fibers: Vec<Vec<f64>> = (0..space.dim())
                .map(|s| {
                    let stream = (i as u64) + ((s as u64) << 32);
                    let mut r = rng::stream(seed, stream);
                    let scale = if s == 0 { 1.0 } else { r.random_range(0.25..2.0) };
                    rng::mixed_nonneg_vec(&mut r, grid.len()).into_iter().map(|v| v * scale).collect()
                })
                .collect();
            LatticeFunction::from_fibers(grid, space.clone(), &fibers)
        })
        .collect()
}

fn check_weights(weights: &[Weight]) -> Result<()> {
    let first = weights.first().ok_or(Error::Empty("weight family"))?;
    for w in weights {
        first.grid().ensure_same(w.grid())?;
    }
    Ok(())
}

fn ratio_or_none(num: f64, den: f64) -> Option<f64> {
    (den > 0.0).then(|| num / den)
}

/// Largest scalar ratio `‖f‖_{L^p(w)}/‖g‖_{L^p(w)}` over the samples.
fn scalar_sup(kind: PairKind, samples: &[Vec<f64>], p: f64, w: &Weight) -> f64 {
    let masses: Vec<f64> = w.values().iter().map(|v| w.grid().width() * v).collect();
    samples
        .par_iter()
        .filter_map(|g0| {
            let (f, g) = kind.scalar(g0);
            ratio_or_none(weighted_pnorm(&f, &masses, p), weighted_pnorm(&g, &masses, p))
        })
        .reduce(|| f64::NEG_INFINITY, f64::max)
}

fn fit_constants(alpha: &ConsistencyProfile, samples: &[Sample], factor: f64, p0: f64, p: f64) -> Vec<ConstantFit> {
    [ExponentForm::Shifted, ExponentForm::Classical]
        .into_iter()
        .map(|form| {
            let e = form.exponent(p0, p);
            let mut c = 0.0f64;
            let mut feasible = true;
            for smp in samples {
                let need = smp.ratio / factor;
                match alpha.envelope().iter().find(|(_, y)| *y >= need) {
                    Some((x, _)) => c = c.max(x / smp.ap_constant.powf(e)),
                    None => feasible = false,
                }
            }
            ConstantFit {
                form,
                exponent: e,
                c: feasible.then_some(c),
            }
        })
        .collect()
}

fn favored(fits: &[ConstantFit]) -> Option<ExponentForm> {
    let mut best: Option<(f64, ExponentForm)> = None;
    for f in fits {
        if let Some(c) = f.c {
            if best.is_none_or(|(b, _)| c < b) {
                best = Some((c, f.form));
            }
        }
    }
    best.map(|(_, form)| form)
}

fn assemble(
    p0: f64,
    axes: usize,
    generator: PairKind,
    sample_count: usize,
    seed: u64,
    hypothesis: Vec<Sample>,
    conclusions: Vec<(f64, Vec<Sample>)>,
) -> Result<ExtrapolationReport> {
    let factor = 4f64.powi(axes as i32 + 1);
    let pts = |v: &[Sample]| -> Vec<(f64, f64)> {
        let mut pts: Vec<(f64, f64)> = v.iter().map(|s| (s.ap_constant, s.ratio)).collect();
        if pts.len() == 1 {
            pts.push(pts[0]);
        }
        pts
    };
    let alpha = fit_consistency_profile(&pts(&hypothesis))?;
    let mut verdict = true;
    let blocks = conclusions
        .into_iter()
        .map(|(p, samples)| {
            let envelope = fit_consistency_profile(&pts(&samples))?;
            let fits = fit_constants(&alpha, &samples, factor, p0, p);
            let finite = samples.iter().all(|s| s.ratio.is_finite());
            let fav = favored(&fits);
            verdict &= finite && envelope.is_valid() && fav.is_some();
            Ok(ConclusionBlock {
                p,
                samples,
                envelope,
                fits,
                favored: fav,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    verdict &= alpha.is_valid();
    Ok(ExtrapolationReport {
        p0,
        axes,
        factor,
        generator,
        sample_count,
        seed,
        hypothesis,
        alpha,
        conclusions: blocks,
        verdict,
    })
}

/// Samples the hypothesis `‖f‖ ≤ α([w]_{A_{p0}}) ‖g‖` at `p0` over the
/// weight family, fits the nondecreasing envelope `α̂`, and checks each
/// conclusion exponent against `4 α̂(c [w]_{A_p}^e)` for the smallest
/// admissible `c`, under two candidate exponent forms. The verdict refers
/// to the finite sample set only.
pub fn verify_extrapolation_pair(
    kind: PairKind,
    p0: f64,
    ps: &[f64],
    weights: &[Weight],
    samples: usize,
    seed: u64,
) -> Result<ExtrapolationReport> {
    check_inputs(p0, ps, weights, samples)?;
    let n = weights[0].len();
    let gs: Vec<Vec<f64>> = (0..samples)
        .map(|i| rng::mixed_nonneg_vec(&mut rng::stream(seed, i as u64), n))
        .collect();
    if gs.iter().all(|g| g.iter().all(|v| *v == 0.0)) {
        return Err(Error::InvalidArgument("degenerate generator: every sample is zero".into()));
    }
    let sweep = |p: f64| -> Result<Vec<Sample>> {
        weights
            .iter()
            .map(|w| {
                Ok(Sample {
                    ap_constant: ap_constant(w, p)?.constant,
                    ratio: scalar_sup(kind, &gs, p, w),
                })
            })
            .collect()
    };
    let hypothesis = sweep(p0)?;
    let conclusions = ps.iter().map(|&p| Ok((p, sweep(p)?))).collect::<Result<Vec<_>>>()?;
    assemble(p0, 0, kind, samples, seed, hypothesis, conclusions)
}

fn check_inputs(p0: f64, ps: &[f64], weights: &[Weight], samples: usize) -> Result<()> {
    check_exponent(p0)?;
    for p in ps {
        check_exponent(*p)?;
    }
    check_weights(weights)?;
    if samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    Ok(())
}

/// Mixed-norm version on `ℝ × Ω` with `Ω` described by `inner`; the
/// conclusion factor is `4^(n+1)` for `n` axes. With no axes it computes the
/// same quantities as the scalar verifier through Bochner norms.
pub fn verify_mixed_extrapolation(
    kind: PairKind,
    p0: f64,
    ps: &[f64],
    inner: &MixedSpace,
    weights: &[Weight],
    samples: usize,
    seed: u64,
) -> Result<ExtrapolationReport> {
    check_inputs(p0, ps, weights, samples)?;
    let grid = *weights[0].grid();
    let axes = inner.axes().len();

    let fields = lattice_samples(grid, inner, samples, seed)?;
    if fields.iter().all(|f| f.values().iter().all(|v| *v == 0.0)) {
        return Err(Error::InvalidArgument("degenerate generator: every sample is zero".into()));
    }
    // scalar hypothesis, fiber by fiber
    let fibers: Vec<Vec<f64>> = fields
        .iter()
        .flat_map(|f| (0..f.fiber_len()).map(move |s| f.fiber(s).into_values()))
        .collect();
    let hypothesis = weights
        .iter()
        .map(|w| {
            Ok(Sample {
                ap_constant: ap_constant(w, p0)?.constant,
                ratio: scalar_sup(kind, &fibers, p0, w),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let pairs: Vec<(LatticeFunction, LatticeFunction)> = fields.iter().map(|g0| kind.lattice(g0)).collect();
    let conclusions = ps
        .iter()
        .map(|&p| {
            let samples = weights
                .iter()
                .map(|w| {
                    let ratio = pairs
                        .par_iter()
                        .map(|(f, g)| -> Result<Option<f64>> {
                            Ok(ratio_or_none(f.norm(p, w.as_function())?, g.norm(p, w.as_function())?))
                        })
                        .collect::<Result<Vec<_>>>()?
                        .into_iter()
                        .flatten()
                        .fold(f64::NEG_INFINITY, f64::max);
                    Ok(Sample {
                        ap_constant: ap_constant(w, p)?.constant,
                        ratio,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((p, samples))
        })
        .collect::<Result<Vec<_>>>()?;
    assemble(p0, axes, kind, samples, seed, hypothesis, conclusions)
}

/// Least dominating weight for a structured family on `L^q(μ)` and its
/// normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct DominatingWeight {
    /// Pointwise least `U` with `∫|T_j φ|^s u ≤ ∫|φ|^s U` for every member.
    pub least: Vec<f64>,
    /// `R^s(T)^s`.
    pub scale: f64,
    /// `least / scale`, the weight for the normalized family `T / R^s(T)`.
    pub normalized: Vec<f64>,
}

fn single_exponent(space: &MixedSpace) -> Result<f64> {
    let q = *space
        .exponents()
        .first()
        .ok_or_else(|| Error::InvalidArgument("space has no axes".into()))?;
    if space.exponents().iter().any(|e| *e != q) {
        return Err(Error::InvalidArgument("dominating weights need a single exponent".into()));
    }
    Ok(q)
}

/// `U(k) = max_j μ(i) |m_j(i)|^s u(i) / μ(k)` with `i = σ_j⁻¹(k)` (for
/// multiplication families `i = k`), and its normalization by `R^s(T)^s`.
pub fn dominating_weight_structured(u: &[f64], family: &OperatorFamily, s: f64) -> Result<DominatingWeight> {
    let space = family.domain();
    space.check_len(u)?;
    let q = single_exponent(space)?;
    if !(s >= 1.0 && s < q) {
        return Err(Error::InvalidExponent {
            value: s,
            reason: "dominating weights need 1 <= s < q",
        });
    }
    if u.iter().any(|v| !(*v >= 0.0)) {
        return Err(Error::InvalidArgument("u must be nonnegative".into()));
    }
    let mu = space.product_masses();
    let n = u.len();
    let mut least = vec![0.0f64; n];
    match family.structure() {
        Structure::Generic => {
            return Err(Error::InvalidStructure(
                "dominating weights are explicit only for structured families".into(),
            ))
        }
        Structure::Multiplication { multipliers } => {
            for m in multipliers {
                for k in 0..n {
                    least[k] = least[k].max(m[k].abs().powf(s) * u[k]);
                }
            }
        }
        Structure::WeightedComposition {
            permutations,
            multipliers,
        } => {
            for (p, m) in permutations.iter().zip(multipliers) {
                for i in 0..n {
                    let k = p[i];
                    least[k] = least[k].max(mu[i] * m[i].abs().powf(s) * u[i] / mu[k]);
                }
            }
        }
    }
    let scale = exact_ls_bound_structured(family, s)?.powf(s);
    let normalized = if scale > 0.0 {
        least.iter().map(|v| v / scale).collect()
    } else {
        least.clone()
    };
    Ok(DominatingWeight {
        least,
        scale,
        normalized,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DominationVerdict {
    pub pass: bool,
    /// `‖U‖_r / ‖u‖_r` with `r = q/(q - s)`.
    pub norm_ratio: f64,
    /// Largest `∫|T_j φ|^s u - ∫|φ|^s U` seen, relative to `∫|φ|^s U`.
    pub worst_excess: f64,
    /// Member index and input of the first violation, by trial index.
    pub counterexample: Option<(usize, Vec<f64>)>,
}

/// Checks `‖U‖_r ≤ ‖u‖_r` and `∫|T_j φ|^s u ≤ ∫|φ|^s U` for every member on
/// basis vectors followed by seeded spiky and dense inputs.
pub fn verify_domination(
    big_u: &[f64],
    u: &[f64],
    family: &OperatorFamily,
    s: f64,
    trials: usize,
    seed: u64,
) -> Result<DominationVerdict> {
    let space = family.domain();
    space.check_len(big_u)?;
    space.check_len(u)?;
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let q = single_exponent(space)?;
    let r = if q.is_infinite() { 1.0 } else { q / (q - s) };
    let mu = space.product_masses();
    let nu = weighted_pnorm(u, &mu, r);
    let n_big = weighted_pnorm(big_u, &mu, r);
    let norm_ratio = if nu > 0.0 { n_big / nu } else if n_big == 0.0 { 0.0 } else { f64::INFINITY };
    let norm_ok = n_big <= nu * (1.0 + DOMINATION_TOL);

    let n = u.len();
    let integral = |v: &[f64], weight: &[f64]| -> f64 {
        v.iter().zip(weight).zip(&mu).map(|((x, w), m)| m * x.abs().powf(s) * w).sum()
    };
    let inputs: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            e
        })
        .chain((0..trials).map(|t| {
            let mut r = rng::stream(seed, t as u64);
            if t % 2 == 0 {
                rng::spiky_vec(&mut r, n, 0.3)
            } else {
                rng::signed_vec(&mut r, n)
            }
        }))
        .collect();
    let checks: Vec<(f64, Option<(usize, Vec<f64>)>)> = inputs
        .par_iter()
        .map(|phi| {
            let rhs = integral(phi, big_u);
            let mut worst = f64::NEG_INFINITY;
            let mut bad = None;
            for (j, member) in family.members().iter().enumerate() {
                let lhs = integral(&member.apply(phi), u);
                let excess = (lhs - rhs) / rhs.max(f64::MIN_POSITIVE);
                worst = worst.max(excess);
                if lhs > rhs + DOMINATION_TOL * rhs.max(1.0) && bad.is_none() {
                    bad = Some((j, phi.clone()));
                }
            }
            (worst, bad)
        })
        .collect();
    let worst_excess = checks.iter().map(|c| c.0).fold(f64::NEG_INFINITY, f64::max);
    let counterexample = checks.into_iter().find_map(|c| c.1);
    Ok(DominationVerdict {
        pass: norm_ok && counterexample.is_none(),
        norm_ratio,
        worst_excess,
        counterexample,
    })
}
