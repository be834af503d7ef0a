//! ℓ^s-bounds and R-bounds of finite operator families on mixed-norm spaces.
//!
//! `R^s(T)` is the least `C` with
//! `‖(Σ_n |T_n x_n|^s)^{1/s}‖_Y ≤ C ‖(Σ_n |x_n|^s)^{1/s}‖_X` over all finite
//! tuples. Generic families get a search lower bound plus an upper
//! certificate when one is available. Multiplication and weighted-composition
//! families have exact closed forms.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{check_tuple_exponent, conjugate, tuple_norm, tuple_norm_with_grad, MixedSpace};
use crate::rng;

/// Slack allowed between a search lower bound and an upper certificate.
pub const SANDWICH_TOL: f64 = 1e-7;

/// Largest tuple length for which Rademacher averages are enumerated exactly.
pub const RADEMACHER_EXACT_MAX: usize = 12;
const RADEMACHER_SAMPLES: usize = 4096;

/// Largest dimension for which the uniform-norm certificate uses an SVD.
const SVD_MAX_DIM: usize = 256;

/// Finite-dimensional linear map on flattened coordinates.
pub trait LinearMap: Send + Sync {
    fn dim_in(&self) -> usize;
    fn dim_out(&self) -> usize;
    fn apply(&self, x: &[f64]) -> Vec<f64>;
    /// Plain (unweighted) transpose.
    fn apply_transpose(&self, y: &[f64]) -> Vec<f64>;
}

impl LinearMap for DMatrix<f64> {
    fn dim_in(&self) -> usize {
        self.ncols()
    }

    fn dim_out(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.nrows()];
        for (j, xj) in x.iter().enumerate() {
            if *xj == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.column(j).iter()) {
                *o += a * xj;
            }
        }
        out
    }

    fn apply_transpose(&self, y: &[f64]) -> Vec<f64> {
        (0..self.ncols()).map(|j| self.column(j).iter().zip(y).map(|(a, b)| a * b).sum()).collect()
    }
}

/// Materializes a map by applying it to the standard basis.
pub fn to_dense(map: &dyn LinearMap) -> DMatrix<f64> {
    let (m, n) = (map.dim_out(), map.dim_in());
    let mut out = DMatrix::zeros(m, n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        for (i, v) in map.apply(&e).into_iter().enumerate() {
            out[(i, j)] = v;
        }
        e[j] = 0.0;
    }
    out
}

/// Adjoint with respect to the measure pairings: `T* = D_X^{-1} Aᵀ D_Y`.
struct MeasureAdjoint {
    inner: Arc<dyn LinearMap>,
    masses_in: Vec<f64>,
    masses_out: Vec<f64>,
}

impl LinearMap for MeasureAdjoint {
    fn dim_in(&self) -> usize {
        self.inner.dim_out()
    }

    fn dim_out(&self) -> usize {
        self.inner.dim_in()
    }

    fn apply(&self, y: &[f64]) -> Vec<f64> {
        let scaled: Vec<f64> = y.iter().zip(&self.masses_out).map(|(v, m)| v * m).collect();
        self.inner
            .apply_transpose(&scaled)
            .into_iter()
            .zip(&self.masses_in)
            .map(|(v, m)| v / m)
            .collect()
    }

    fn apply_transpose(&self, x: &[f64]) -> Vec<f64> {
        let scaled: Vec<f64> = x.iter().zip(&self.masses_in).map(|(v, m)| v / m).collect();
        self.inner
            .apply(&scaled)
            .into_iter()
            .zip(&self.masses_out)
            .map(|(v, m)| v * m)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Structure {
    Generic,
    /// `T_j φ = m_j φ`.
    Multiplication { multipliers: Vec<Vec<f64>> },
    /// `T_j φ(i) = m_j(i) φ(σ_j(i))` with each `σ_j` a permutation.
    WeightedComposition {
        permutations: Vec<Vec<usize>>,
        multipliers: Vec<Vec<f64>>,
    },
}

impl Structure {
    pub fn tag(&self) -> &'static str {
        match self {
            Structure::Generic => "generic",
            Structure::Multiplication { .. } => "multiplication",
            Structure::WeightedComposition { .. } => "weighted_composition",
        }
    }
}

#[derive(Clone)]
pub struct OperatorFamily {
    members: Vec<Arc<dyn LinearMap>>,
    labels: Vec<String>,
    structure: Structure,
    domain: MixedSpace,
    codomain: MixedSpace,
}

impl fmt::Debug for OperatorFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OperatorFamily")
            .field("labels", &self.labels)
            .field("structure", &self.structure.tag())
            .field("domain", &self.domain)
            .field("codomain", &self.codomain)
            .finish()
    }
}

fn check_permutation(p: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if p.len() != n {
        return Err(Error::ShapeMismatch { expected: n, got: p.len() });
    }
    for &k in p {
        if k >= n || seen[k] {
            return Err(Error::InvalidStructure(format!("{p:?} is not a permutation of 0..{n}")));
        }
        seen[k] = true;
    }
    Ok(())
}

impl OperatorFamily {
    pub fn new(
        members: Vec<Arc<dyn LinearMap>>,
        labels: Vec<String>,
        domain: MixedSpace,
        codomain: MixedSpace,
    ) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::Empty("operator family"));
        }
        if labels.len() != members.len() {
            return Err(Error::ShapeMismatch {
                expected: members.len(),
                got: labels.len(),
            });
        }
        for m in &members {
            if m.dim_in() != domain.dim() {
                return Err(Error::ShapeMismatch {
                    expected: domain.dim(),
                    got: m.dim_in(),
                });
            }
            if m.dim_out() != codomain.dim() {
                return Err(Error::ShapeMismatch {
                    expected: codomain.dim(),
                    got: m.dim_out(),
                });
            }
        }
        Ok(Self {
            members,
            labels,
            structure: Structure::Generic,
            domain,
            codomain,
        })
    }

    fn default_labels(n: usize) -> Vec<String> {
        (0..n).map(|i| i.to_string()).collect()
    }

    /// Square matrices acting on `space`.
    pub fn dense(matrices: Vec<DMatrix<f64>>, space: MixedSpace) -> Result<Self> {
        let labels = Self::default_labels(matrices.len());
        let members = matrices.into_iter().map(|m| Arc::new(m) as Arc<dyn LinearMap>).collect();
        Self::new(members, labels, space.clone(), space)
    }

    pub fn multiplication(multipliers: Vec<Vec<f64>>, space: MixedSpace) -> Result<Self> {
        let n = space.dim();
        let mats = multipliers
            .iter()
            .map(|m| {
                if m.len() != n {
                    return Err(Error::ShapeMismatch { expected: n, got: m.len() });
                }
                Ok(DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(m)))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut fam = Self::dense(mats, space)?;
        fam.structure = Structure::Multiplication { multipliers };
        Ok(fam)
    }

    pub fn weighted_composition(
        permutations: Vec<Vec<usize>>,
        multipliers: Vec<Vec<f64>>,
        space: MixedSpace,
    ) -> Result<Self> {
        let n = space.dim();
        if permutations.len() != multipliers.len() {
            return Err(Error::ShapeMismatch {
                expected: permutations.len(),
                got: multipliers.len(),
            });
        }
        let mut mats = Vec::with_capacity(permutations.len());
        for (p, m) in permutations.iter().zip(&multipliers) {
            check_permutation(p, n)?;
            if m.len() != n {
                return Err(Error::ShapeMismatch { expected: n, got: m.len() });
            }
            let mut a = DMatrix::zeros(n, n);
            for i in 0..n {
                a[(i, p[i])] = m[i];
            }
            mats.push(a);
        }
        let mut fam = Self::dense(mats, space)?;
        fam.structure = Structure::WeightedComposition {
            permutations,
            multipliers,
        };
        Ok(fam)
    }

    /// Validates a structure tag against the member matrices and records the
    /// recovered structure. Zero rows of a weighted composition are matched
    /// to the unused columns in increasing order.
    pub fn with_structure_tag(mut self, tag: &str) -> Result<Self> {
        let n = self.domain.dim();
        let square = self.domain == self.codomain;
        let dense: Vec<DMatrix<f64>> = self.members.iter().map(|m| to_dense(m.as_ref())).collect();
        self.structure = match tag {
            "generic" => Structure::Generic,
            "multiplication" => {
                if !square {
                    return Err(Error::InvalidStructure("multiplication needs equal domain and codomain".into()));
                }
                for (idx, a) in dense.iter().enumerate() {
                    for i in 0..n {
                        for j in 0..n {
                            if i != j && a[(i, j)] != 0.0 {
                                return Err(Error::InvalidStructure(format!(
                                    "member {} has off-diagonal entry at ({i}, {j})",
                                    self.labels[idx]
                                )));
                            }
                        }
                    }
                }
                Structure::Multiplication {
                    multipliers: dense.iter().map(|a| (0..n).map(|i| a[(i, i)]).collect()).collect(),
                }
            }
            "weighted_composition" => {
                if !square {
                    return Err(Error::InvalidStructure(
                        "weighted composition needs equal domain and codomain".into(),
                    ));
                }
                let mut perms = Vec::new();
                let mut mults = Vec::new();
                for (idx, a) in dense.iter().enumerate() {
                    let mut perm = vec![usize::MAX; n];
                    let mut mult = vec![0.0; n];
                    let mut used = vec![false; n];
                    for i in 0..n {
                        let nz: Vec<usize> = (0..n).filter(|&j| a[(i, j)] != 0.0).collect();
                        match nz.as_slice() {
                            [] => {}
                            [j] if !used[*j] => {
                                perm[i] = *j;
                                mult[i] = a[(i, *j)];
                                used[*j] = true;
                            }
                            _ => {
                                return Err(Error::InvalidStructure(format!(
                                    "member {} row {i} is not a weighted composition row",
                                    self.labels[idx]
                                )))
                            }
                        }
                    }
                    let mut free = (0..n).filter(|j| !used[*j]);
                    for p in perm.iter_mut().filter(|p| **p == usize::MAX) {
                        *p = free.next().expect("counts of free rows and columns agree");
                    }
                    perms.push(perm);
                    mults.push(mult);
                }
                Structure::WeightedComposition {
                    permutations: perms,
                    multipliers: mults,
                }
            }
            other => return Err(Error::InvalidStructure(format!("unknown tag '{other}'"))),
        };
        Ok(self)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.members.len() {
            return Err(Error::ShapeMismatch {
                expected: self.members.len(),
                got: labels.len(),
            });
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[Arc<dyn LinearMap>] {
        &self.members
    }

    pub fn member(&self, j: usize) -> &dyn LinearMap {
        self.members[j].as_ref()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn structure(&self) -> &Structure {
        &self.structure
    }

    pub fn domain(&self) -> &MixedSpace {
        &self.domain
    }

    pub fn codomain(&self) -> &MixedSpace {
        &self.codomain
    }

    pub fn dense_members(&self) -> Vec<DMatrix<f64>> {
        self.members.iter().map(|m| to_dense(m.as_ref())).collect()
    }

    /// `{c T_j}`, keeping labels and structure.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        let mats: Vec<DMatrix<f64>> = self.dense_members().into_iter().map(|a| a * c).collect();
        let members = mats.into_iter().map(|m| Arc::new(m) as Arc<dyn LinearMap>).collect();
        let mut fam = Self::new(members, self.labels.clone(), self.domain.clone(), self.codomain.clone())?;
        fam.structure = match &self.structure {
            Structure::Generic => Structure::Generic,
            Structure::Multiplication { multipliers } => Structure::Multiplication {
                multipliers: multipliers.iter().map(|m| m.iter().map(|v| c * v).collect()).collect(),
            },
            Structure::WeightedComposition {
                permutations,
                multipliers,
            } => Structure::WeightedComposition {
                permutations: permutations.clone(),
                multipliers: multipliers.iter().map(|m| m.iter().map(|v| c * v).collect()).collect(),
            },
        };
        Ok(fam)
    }
}

/// The family of measure-weighted adjoints, acting from `Y'` to `X'`.
///
/// Structure is carried over when domain and codomain coincide: the adjoint
/// of `φ ↦ m φ∘σ` is `ψ ↦ m* ψ∘σ⁻¹` with `m*(k) = μ(σ⁻¹k) m(σ⁻¹k) / μ(k)`.
pub fn adjoint_family(family: &OperatorFamily) -> Result<OperatorFamily> {
    let masses_in = family.domain.product_masses();
    let masses_out = family.codomain.product_masses();
    let members = family
        .members
        .iter()
        .map(|m| {
            Arc::new(MeasureAdjoint {
                inner: m.clone(),
                masses_in: masses_in.clone(),
                masses_out: masses_out.clone(),
            }) as Arc<dyn LinearMap>
        })
        .collect();
    let mut adj = OperatorFamily::new(
        members,
        family.labels.clone(),
        family.codomain.dual(),
        family.domain.dual(),
    )?;
    if family.domain == family.codomain {
        adj.structure = match &family.structure {
            Structure::Generic => Structure::Generic,
            Structure::Multiplication { multipliers } => Structure::Multiplication {
                multipliers: multipliers.clone(),
            },
            Structure::WeightedComposition {
                permutations,
                multipliers,
            } => {
                let mu = &masses_in;
                let mut perms = Vec::new();
                let mut mults = Vec::new();
                for (p, m) in permutations.iter().zip(multipliers) {
                    let mut inv = vec![0; p.len()];
                    for (i, &k) in p.iter().enumerate() {
                        inv[k] = i;
                    }
                    mults.push((0..p.len()).map(|k| mu[inv[k]] * m[inv[k]] / mu[k]).collect());
                    perms.push(inv);
                }
                Structure::WeightedComposition {
                    permutations: perms,
                    multipliers: mults,
                }
            }
        };
    }
    Ok(adj)
}

/// `‖(Σ|T_{a_n} x_n|^s)^{1/s}‖_Y / ‖(Σ|x_n|^s)^{1/s}‖_X`.
pub fn ls_ratio<T: AsRef<[f64]>>(family: &OperatorFamily, assignment: &[usize], xs: &[T], s: f64) -> Result<f64> {
    check_tuple_exponent(s)?;
    check_tuple(family, assignment, xs.len())?;
    let den = tuple_norm(xs, s, &family.domain)?;
    if den == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    let ys: Vec<Vec<f64>> = assignment
        .iter()
        .zip(xs)
        .map(|(&j, x)| family.members[j].apply(x.as_ref()))
        .collect();
    Ok(tuple_norm(&ys, s, &family.codomain)? / den)
}

fn check_tuple(family: &OperatorFamily, assignment: &[usize], n: usize) -> Result<()> {
    if assignment.len() != n {
        return Err(Error::ShapeMismatch {
            expected: assignment.len(),
            got: n,
        });
    }
    if assignment.is_empty() {
        return Err(Error::Empty("tuple"));
    }
    if let Some(j) = assignment.iter().find(|j| **j >= family.len()) {
        return Err(Error::InvalidArgument(format!(
            "member index {j} outside family of {}",
            family.len()
        )));
    }
    Ok(())
}

fn ls_ratio_with_grad(family: &OperatorFamily, assignment: &[usize], xs: &[Vec<f64>], s: f64) -> (f64, Vec<Vec<f64>>) {
    let ys: Vec<Vec<f64>> = assignment.iter().zip(xs).map(|(&j, x)| family.members[j].apply(x)).collect();
    let (den, gx) = tuple_norm_with_grad(xs, s, &family.domain).expect("shapes checked");
    if den == 0.0 {
        return (0.0, xs.iter().map(|x| vec![0.0; x.len()]).collect());
    }
    let (num, gy) = tuple_norm_with_grad(&ys, s, &family.codomain).expect("shapes checked");
    let ratio = num / den;
    let grads = assignment
        .iter()
        .zip(gy.iter().zip(&gx))
        .map(|(&j, (gyn, gxn))| {
            family.members[j]
                .apply_transpose(gyn)
                .into_iter()
                .zip(gxn)
                .map(|(a, b)| a / den - ratio * b / den)
                .collect()
        })
        .collect();
    (ratio, grads)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchConfig {
    pub n_max: usize,
    pub restarts: usize,
    pub iterations: usize,
    pub step: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            n_max: 6,
            restarts: 32,
            iterations: 200,
            step: 0.1,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_max == 0 || self.restarts == 0 || self.iterations == 0 {
            return Err(Error::InvalidArgument(
                "n_max, restarts and iterations must be positive".into(),
            ));
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::InvalidArgument(format!("step {} must be positive", self.step)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertificateKind {
    Interpolation,
    Duality,
    ClosedForm,
    UniformNorm,
}

impl CertificateKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            CertificateKind::Interpolation => "interpolation",
            CertificateKind::Duality => "duality",
            CertificateKind::ClosedForm => "closed_form",
            CertificateKind::UniformNorm => "uniform_norm",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpperCertificate {
    pub value: f64,
    pub kind: CertificateKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LsBoundEstimate {
    pub s: f64,
    pub lower: f64,
    pub assignment: Vec<usize>,
    pub tuple: Vec<Vec<f64>>,
    pub upper: Option<UpperCertificate>,
}

fn normalize(xs: &mut [Vec<f64>]) -> bool {
    let n2: f64 = xs.iter().flatten().map(|v| v * v).sum();
    if n2 == 0.0 || !n2.is_finite() {
        return false;
    }
    let inv = 1.0 / n2.sqrt();
    xs.iter_mut().flatten().for_each(|v| *v *= inv);
    true
}

/// Normalized gradient ascent with step halving on a scale-invariant
/// objective. Returns the final value.
fn ascend<F>(xs: &mut Vec<Vec<f64>>, iterations: usize, step0: f64, eval: &F) -> f64
where
    F: Fn(&[Vec<f64>]) -> (f64, Vec<Vec<f64>>),
{
    let (mut value, mut grad) = eval(xs);
    let mut step = step0;
    for _ in 0..iterations {
        let gn: f64 = grad.iter().flatten().map(|g| g * g).sum::<f64>().sqrt();
        if gn == 0.0 || !gn.is_finite() || step < 1e-12 {
            break;
        }
        let mut cand: Vec<Vec<f64>> = xs
            .iter()
            .zip(&grad)
            .map(|(x, g)| x.iter().zip(g).map(|(a, b)| a + step * b / gn).collect())
            .collect();
        if !normalize(&mut cand) {
            step *= 0.5;
            continue;
        }
        let (v, g) = eval(&cand);
        if v > value {
            *xs = cand;
            value = v;
            grad = g;
            step = (step * 1.5).min(1.0);
        } else {
            step *= 0.5;
        }
    }
    value
}

struct Candidate {
    value: f64,
    assignment: Vec<usize>,
    tuple: Vec<Vec<f64>>,
}

/// Alternating maximization shared by the ℓ^s and Rademacher searches.
///
/// `objective(assignment)` builds the ratio-with-gradient closure for a fixed
/// assignment. Restart `r` uses tuple length `1 + r mod n_max` and its own
/// random stream; the best restart wins, ties to the lowest index.
fn alternating_search<O, F>(family: &OperatorFamily, cfg: &SearchConfig, seed: u64, objective: O) -> Candidate
where
    O: Fn(&[usize], u64) -> F + Sync,
    F: Fn(&[Vec<f64>]) -> (f64, Vec<Vec<f64>>),
{
    let dim = family.domain.dim();
    let members = family.len();
    let rounds = 4usize;
    let per_round = cfg.iterations.div_ceil(rounds).max(1);
    let results: Vec<Candidate> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rg = rng::stream(seed, r as u64);
            let n = 1 + r % cfg.n_max;
            let mut assignment: Vec<usize> = (0..n).map(|_| rg.random_range(0..members)).collect();
            let mut xs: Vec<Vec<f64>> = (0..n)
                .map(|_| match rg.random_range(0..3u8) {
                    0 => rng::signed_vec(&mut rg, dim),
                    1 => rng::spiky_vec(&mut rg, dim, 0.3),
                    _ => rng::mixed_nonneg_vec(&mut rg, dim),
                })
                .collect();
            if !normalize(&mut xs) {
                xs[0][0] = 1.0;
            }
            let obj_seed = seed ^ ((r as u64) << 32);
            let mut value = f64::NEG_INFINITY;
            for _ in 0..rounds {
                let eval = objective(&assignment, obj_seed);
                value = ascend(&mut xs, per_round, cfg.step, &eval);
                let mut improved = false;
                for slot in 0..n {
                    let current = assignment[slot];
                    for j in 0..members {
                        if j == current {
                            continue;
                        }
                        let mut trial = assignment.clone();
                        trial[slot] = j;
                        let v = objective(&trial, obj_seed)(&xs).0;
                        if v > value {
                            value = v;
                            assignment = trial;
                            improved = true;
                            break;
                        }
                    }
                }
                if !improved {
                    break;
                }
            }
            Candidate {
                value,
                assignment,
                tuple: xs,
            }
        })
        .collect();
    let mut best: Option<Candidate> = None;
    for c in results {
        if best.as_ref().is_none_or(|b| c.value > b.value) {
            best = Some(c);
        }
    }
    best.expect("restarts >= 1")
}

/// Search lower bound for `R^s(T)` with an attached upper certificate when
/// the family admits one.
pub fn estimate_ls_bound(family: &OperatorFamily, s: f64, cfg: &SearchConfig, seed: u64) -> Result<LsBoundEstimate> {
    check_tuple_exponent(s)?;
    cfg.validate()?;
    let best = alternating_search(family, cfg, seed, |assignment, _| {
        let a = assignment.to_vec();
        move |xs: &[Vec<f64>]| ls_ratio_with_grad(family, &a, xs, s)
    });
    let lower = match ls_ratio(family, &best.assignment, &best.tuple, s) {
        Ok(v) => v,
        Err(Error::ZeroDenominator) => 0.0,
        Err(e) => return Err(e),
    };
    Ok(LsBoundEstimate {
        s,
        lower,
        assignment: best.assignment,
        tuple: best.tuple,
        upper: certify(family, s)?,
    })
}

/// Cheapest available upper certificate: the exact value for structured
/// families, else `max_j ‖T_j‖` when `s` equals the common exponent of
/// `X = Y = L^q`.
pub fn certify(family: &OperatorFamily, s: f64) -> Result<Option<UpperCertificate>> {
    if family.structure != Structure::Generic {
        if let Ok(value) = exact_ls_bound_structured(family, s) {
            return Ok(Some(UpperCertificate {
                value,
                kind: CertificateKind::ClosedForm,
            }));
        }
    }
    if let Some(q) = common_exponent(family) {
        if q == s {
            let value = family
                .members
                .iter()
                .map(|m| uniform_norm_bound(m.as_ref(), &family.domain, &family.codomain).map(|b| b.0))
                .collect::<Result<Vec<f64>>>()?
                .into_iter()
                .fold(0.0, f64::max);
            return Ok(Some(UpperCertificate {
                value,
                kind: CertificateKind::UniformNorm,
            }));
        }
    }
    Ok(None)
}

/// The exponent `q` when domain and codomain are both `L^q` of some product
/// measure (all axis exponents equal).
fn common_exponent(family: &OperatorFamily) -> Option<f64> {
    let exps: Vec<f64> = family
        .domain
        .exponents()
        .iter()
        .chain(family.codomain.exponents())
        .copied()
        .collect();
    let q = *exps.first()?;
    exps.iter().all(|e| *e == q).then_some(q)
}

/// Upper bound on `‖A‖_{L^q(μ) → L^q(ν)}` for spaces with a common
/// exponent, and whether it is exact. Exact for `q ∈ {1, 2, ∞}` (SVD of
/// the mass-scaled matrix at `q = 2`, up to a size limit); Riesz–Thorin
/// interpolation between the `L¹` and `L^∞` norms otherwise.
pub fn uniform_norm_bound(map: &dyn LinearMap, domain: &MixedSpace, codomain: &MixedSpace) -> Result<(f64, bool)> {
    let q = *domain
        .exponents()
        .first()
        .ok_or_else(|| Error::InvalidArgument("scalar space has no exponent".into()))?;
    if !domain.exponents().iter().chain(codomain.exponents()).all(|e| *e == q) {
        return Err(Error::InvalidArgument("uniform norm needs a common exponent".into()));
    }
    let a = to_dense(map);
    let mu = domain.product_masses();
    let nu = codomain.product_masses();
    let norm_inf = (0..a.nrows())
        .map(|i| a.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let norm_one = (0..a.ncols())
        .map(|j| a.column(j).iter().zip(&nu).map(|(v, m)| m * v.abs()).sum::<f64>() / mu[j])
        .fold(0.0, f64::max);
    if q == 1.0 {
        return Ok((norm_one, true));
    }
    if q.is_infinite() {
        return Ok((norm_inf, true));
    }
    if q == 2.0 && a.nrows().max(a.ncols()) <= SVD_MAX_DIM {
        let scaled = DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| nu[i].sqrt() * a[(i, j)] / mu[j].sqrt());
        let sv = scaled.singular_values();
        return Ok((sv.iter().cloned().fold(0.0, f64::max), true));
    }
    Ok((norm_one.powf(1.0 / q) * norm_inf.powf(1.0 - 1.0 / q), false))
}

/// Exact `R^s(T)` for multiplication and weighted-composition families.
///
/// Multiplication families give `max_j ‖m_j‖_∞` on any space. For weighted
/// compositions on `L^q(μ)` with `s < q` and `r = q/(q - s)`,
/// `R^s(T)^{sr} = max_i Σ_k max_{j: σ_j(i) = k} μ_k^{1-r} μ_i^{r-1} |m_j(i)|^{sr}`;
/// `s = q` gives `max_j ‖T_j‖_q`, and `s > q` goes through the adjoint
/// family at `s'` on `L^{q'}`.
pub fn exact_ls_bound_structured(family: &OperatorFamily, s: f64) -> Result<f64> {
    check_tuple_exponent(s)?;
    match &family.structure {
        Structure::Generic => Err(Error::InvalidStructure(
            "closed form needs a multiplication or weighted_composition family".into(),
        )),
        Structure::Multiplication { multipliers } => Ok(multipliers
            .iter()
            .flatten()
            .map(|v| v.abs())
            .fold(0.0, f64::max)),
        Structure::WeightedComposition {
            permutations,
            multipliers,
        } => {
            let q = common_exponent(family).ok_or_else(|| {
                Error::InvalidArgument("weighted composition closed form needs a single exponent".into())
            })?;
            let mu = family.domain.product_masses();
            if s == q {
                Ok(permutations
                    .iter()
                    .zip(multipliers)
                    .map(|(p, m)| composition_norm(p, m, &mu, q))
                    .fold(0.0, f64::max))
            } else if s < q {
                Ok(composition_ls_below(permutations, multipliers, &mu, q, s))
            } else {
                let adj = adjoint_family(family)?;
                exact_ls_bound_structured(&adj, conjugate(s))
            }
        }
    }
}

/// `‖φ ↦ m φ∘σ‖` on `L^q(μ)`.
fn composition_norm(p: &[usize], m: &[f64], mu: &[f64], q: f64) -> f64 {
    if q.is_infinite() {
        return m.iter().map(|v| v.abs()).fold(0.0, f64::max);
    }
    (0..p.len())
        .map(|i| mu[i] * m[i].abs().powf(q) / mu[p[i]])
        .fold(0.0, f64::max)
        .powf(1.0 / q)
}

fn composition_ls_below(perms: &[Vec<usize>], mults: &[Vec<f64>], mu: &[f64], q: f64, s: f64) -> f64 {
    let n = mu.len();
    let r = if q.is_infinite() { 1.0 } else { q / (q - s) };
    let mut best = 0.0f64;
    let mut per_target = vec![0.0f64; n];
    for i in 0..n {
        per_target.iter_mut().for_each(|v| *v = 0.0);
        for (p, m) in perms.iter().zip(mults) {
            let k = p[i];
            let c = mu[i] * m[i].abs().powf(s) / mu[k];
            let term = mu[k] * c.powf(r) / mu[i];
            per_target[k] = per_target[k].max(term);
        }
        best = best.max(per_target.iter().sum());
    }
    best.powf(1.0 / (s * r))
}

/// `R^{s0}^{1-θ} R^{s1}^θ` with `1/s = (1-θ)/s0 + θ/s1`.
pub fn interpolation_certificate(r_s0: f64, r_s1: f64, s0: f64, s1: f64, s: f64) -> Result<f64> {
    for e in [s0, s1, s] {
        check_tuple_exponent(e)?;
    }
    if !(s0 <= s && s <= s1) {
        return Err(Error::InvalidArgument(format!("s = {s} outside [{s0}, {s1}]")));
    }
    if r_s0 < 0.0 || r_s1 < 0.0 {
        return Err(Error::InvalidArgument("bounds must be nonnegative".into()));
    }
    if s0 == s1 {
        return Ok(r_s0.min(r_s1));
    }
    let theta = (1.0 / s0 - 1.0 / s) / (1.0 / s0 - 1.0 / s1);
    Ok(r_s0.powf(1.0 - theta) * r_s1.powf(theta))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RademacherEstimate {
    pub lower: f64,
    pub assignment: Vec<usize>,
    pub tuple: Vec<Vec<f64>>,
    /// Whether the sign averages were enumerated exactly.
    pub exact_average: bool,
}

/// Sign patterns with `ε_0 = +1` (the averages are even in `ε`), exhaustive
/// up to [`RADEMACHER_EXACT_MAX`] and sampled above.
fn sign_patterns(n: usize, seed: u64) -> Vec<Vec<f64>> {
    if n <= RADEMACHER_EXACT_MAX {
        (0..1u64 << (n - 1))
            .map(|bits| {
                (0..n)
                    .map(|k| if k > 0 && bits >> (k - 1) & 1 == 1 { -1.0 } else { 1.0 })
                    .collect()
            })
            .collect()
    } else {
        let mut r = rng::seeded(seed);
        (0..RADEMACHER_SAMPLES)
            .map(|_| (0..n).map(|k| if k > 0 && r.random::<bool>() { -1.0 } else { 1.0 }).collect())
            .collect()
    }
}

fn rademacher_ratio_with_grad(
    family: &OperatorFamily,
    assignment: &[usize],
    signs: &[Vec<f64>],
    xs: &[Vec<f64>],
) -> (f64, Vec<Vec<f64>>) {
    let ys: Vec<Vec<f64>> = assignment.iter().zip(xs).map(|(&j, x)| family.members[j].apply(x)).collect();
    // E‖Σ ε_n v_n‖² and its gradient with respect to each v_n
    let second_moment = |vs: &[Vec<f64>], space: &MixedSpace| -> (f64, Vec<Vec<f64>>) {
        let dim = vs[0].len();
        let mut total = 0.0;
        let mut grads = vec![vec![0.0; dim]; vs.len()];
        for eps in signs {
            let mut sum = vec![0.0; dim];
            for (e, v) in eps.iter().zip(vs) {
                sum.iter_mut().zip(v).for_each(|(a, b)| *a += e * b);
            }
            let (nrm, g) = space.norm_with_grad(&sum).expect("shapes checked");
            total += nrm * nrm;
            for (gn, e) in grads.iter_mut().zip(eps) {
                gn.iter_mut().zip(&g).for_each(|(a, b)| *a += 2.0 * nrm * e * b);
            }
        }
        let k = signs.len() as f64;
        grads.iter_mut().flatten().for_each(|v| *v /= k);
        (total / k, grads)
    };
    let (b, gb) = second_moment(xs, &family.domain);
    if b == 0.0 {
        return (0.0, xs.iter().map(|x| vec![0.0; x.len()]).collect());
    }
    let (a, ga) = second_moment(&ys, &family.codomain);
    let ratio = (a / b).sqrt();
    let grads = assignment
        .iter()
        .zip(ga.iter().zip(&gb))
        .map(|(&j, (gan, gbn))| {
            let back = family.members[j].apply_transpose(gan);
            back.into_iter()
                .zip(gbn)
                .map(|(da, db)| if a == 0.0 { 0.0 } else { 0.5 * ratio * (da / a - db / b) })
                .collect()
        })
        .collect();
    (ratio, grads)
}

/// `(E‖Σ ε_n T_n x_n‖²)^{1/2} / (E‖Σ ε_n x_n‖²)^{1/2}` for a given tuple.
pub fn rademacher_ratio<T: AsRef<[f64]>>(
    family: &OperatorFamily,
    assignment: &[usize],
    xs: &[T],
    seed: u64,
) -> Result<f64> {
    check_tuple(family, assignment, xs.len())?;
    let owned: Vec<Vec<f64>> = xs.iter().map(|x| x.as_ref().to_vec()).collect();
    for x in &owned {
        family.domain.check_len(x)?;
    }
    let signs = sign_patterns(owned.len(), seed);
    let (ratio, _) = rademacher_ratio_with_grad(family, assignment, &signs, &owned);
    if owned.iter().flatten().all(|v| *v == 0.0) {
        return Err(Error::ZeroDenominator);
    }
    Ok(ratio)
}

/// Search lower bound for the R-bound, with the same alternating scheme as
/// [`estimate_ls_bound`].
pub fn rademacher_bound_estimate(family: &OperatorFamily, cfg: &SearchConfig, seed: u64) -> Result<RademacherEstimate> {
    cfg.validate()?;
    let best = alternating_search(family, cfg, seed, |assignment, obj_seed| {
        let a = assignment.to_vec();
        let signs = sign_patterns(a.len(), obj_seed);
        move |xs: &[Vec<f64>]| rademacher_ratio_with_grad(family, &a, &signs, xs)
    });
    let n = best.assignment.len();
    let lower = if n <= RADEMACHER_EXACT_MAX {
        rademacher_ratio(family, &best.assignment, &best.tuple, seed).unwrap_or(0.0)
    } else {
        best.value
    };
    Ok(RademacherEstimate {
        lower,
        assignment: best.assignment,
        tuple: best.tuple,
        exact_average: n <= RADEMACHER_EXACT_MAX,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::MeasuredAxis;
    use proptest::prelude::*;
    use rand::Rng;

    fn seq(n: usize, q: f64) -> MixedSpace {
        MixedSpace::sequence(n, q).unwrap()
    }

    fn quick() -> SearchConfig {
        SearchConfig {
            n_max: 4,
            restarts: 12,
            iterations: 120,
            step: 0.1,
        }
    }

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * a.abs().max(b.abs())
    }

    fn id_swap(q: f64) -> OperatorFamily {
        OperatorFamily::weighted_composition(vec![vec![0, 1], vec![1, 0]], vec![vec![1.0; 2]; 2], seq(2, q)).unwrap()
    }

    #[test]
    fn identity_family() {
        let fam = OperatorFamily::dense(vec![DMatrix::identity(3, 3)], seq(3, 2.0)).unwrap();
        let xs = vec![vec![1.0, -2.0, 0.5], vec![0.0, 3.0, 1.0]];
        assert!(close(ls_ratio(&fam, &[0, 0], &xs, 1.5).unwrap(), 1.0, 1e-14));
        let est = estimate_ls_bound(&fam, 2.0, &quick(), 1).unwrap();
        assert!(close(est.lower, 1.0, 1e-12));
        let up = est.upper.unwrap();
        assert_eq!(up.kind, CertificateKind::UniformNorm);
        assert!(close(up.value, 1.0, 1e-12));
        let two = fam.scaled(2.0).unwrap();
        for s in [1.0, 2.0, 5.0, f64::INFINITY] {
            assert!(close(ls_ratio(&two, &[0, 0], &xs, s).unwrap(), 2.0, 1e-14));
        }
    }

    #[test]
    fn multiplication_ratio_example() {
        let fam = OperatorFamily::multiplication(vec![vec![1.0; 3], vec![0.0, 3.0, 0.0]], seq(3, 2.0)).unwrap();
        let x = vec![0.0, 1.0, 0.0];
        assert!(close(ls_ratio(&fam, &[1], &[x], 2.0).unwrap(), 3.0, 1e-15));
        assert_eq!(exact_ls_bound_structured(&fam, 1.5).unwrap(), 3.0);
        let est = estimate_ls_bound(&fam, 1.5, &quick(), 3).unwrap();
        assert!(est.lower >= 0.9 * 3.0 && est.lower <= 3.0 + SANDWICH_TOL);
        let m2 = OperatorFamily::multiplication(vec![vec![1.0; 2], vec![2.0; 2]], seq(2, 3.0)).unwrap();
        for s in [1.0, 2.0, 4.0] {
            assert_eq!(exact_ls_bound_structured(&m2, s).unwrap(), 2.0);
        }
    }

    #[test]
    fn zero_denominator_and_shapes() {
        let fam = id_swap(2.0);
        assert_eq!(ls_ratio(&fam, &[0], &[vec![0.0, 0.0]], 2.0), Err(Error::ZeroDenominator));
        assert!(ls_ratio(&fam, &[0, 1], &[vec![1.0, 0.0]], 2.0).is_err());
        assert!(ls_ratio(&fam, &[2], &[vec![1.0, 0.0]], 2.0).is_err());
        assert!(exact_ls_bound_structured(&OperatorFamily::dense(vec![DMatrix::identity(2, 2)], seq(2, 2.0)).unwrap(), 1.0).is_err());
    }

    #[test]
    fn id_swap_closed_form() {
        for s in [1.0, 1.5, 2.0, 3.0, 8.0, f64::INFINITY] {
            let want = 2f64.powf((1.0 / s - 0.5).abs());
            assert!(close(exact_ls_bound_structured(&id_swap(2.0), s).unwrap(), want, 1e-12), "s={s}");
        }
    }

    #[test]
    fn linear_theta_fails_on_id_swap() {
        // r at s0 = 2 and s1 = 8 with the linear-in-s parameter undershoots the exact value at s = 4
        let f = id_swap(2.0);
        let (r0, r1, r) = (
            exact_ls_bound_structured(&f, 2.0).unwrap(),
            exact_ls_bound_structured(&f, 8.0).unwrap(),
            exact_ls_bound_structured(&f, 4.0).unwrap(),
        );
        let linear_theta = (4.0 - 2.0) / (8.0 - 2.0);
        assert!(r0.powf(1.0 - linear_theta) * r1.powf(linear_theta) < r - 1e-3);
        assert!(interpolation_certificate(r0, r1, 2.0, 8.0, 4.0).unwrap() >= r - 1e-12);
    }

    #[test]
    fn interpolation_examples() {
        assert_eq!(interpolation_certificate(3.0, 3.0, 1.5, 4.0, 2.0).unwrap(), 3.0);
        assert!(close(interpolation_certificate(2.0, 8.0, 2.0, 6.0, 3.0).unwrap(), 4.0, 1e-14));
        assert!(interpolation_certificate(2.0, 8.0, 2.0, 6.0, 7.0).is_err());
        let v = interpolation_certificate(1.2, 5.0, 1.0, f64::INFINITY, 2.0).unwrap();
        assert!(close(v, (1.2f64 * 5.0).sqrt(), 1e-14));
    }

    #[test]
    fn adjoint_is_an_involution() {
        let space = MixedSpace::new(
            vec![MeasuredAxis::new(vec![0.5, 2.0]).unwrap(), MeasuredAxis::new(vec![1.0, 3.0]).unwrap()],
            vec![3.0, 1.5],
        )
        .unwrap();
        let a = DMatrix::from_fn(4, 4, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0);
        let fam = OperatorFamily::dense(vec![a.clone()], space.clone()).unwrap();
        let back = adjoint_family(&adjoint_family(&fam).unwrap()).unwrap();
        assert_eq!(back.domain(), &space);
        let d = to_dense(back.member(0));
        assert!((d - a).abs().max() < 1e-12);

        let adj = adjoint_family(&fam).unwrap();
        let f = vec![1.0, -0.5, 2.0, 0.25];
        let g = vec![0.3, 1.0, -1.0, 2.0];
        let lhs = space.pairing(&fam.member(0).apply(&f), &g).unwrap();
        let rhs = space.pairing(&f, &adj.member(0).apply(&g)).unwrap();
        assert!(close(lhs, rhs, 1e-12));

        let sym = DMatrix::from_fn(3, 3, |i, j| (i + j) as f64);
        let fam = OperatorFamily::dense(vec![sym.clone()], seq(3, 2.0)).unwrap();
        assert!((to_dense(adjoint_family(&fam).unwrap().member(0)) - sym).abs().max() < 1e-15);
    }

    #[test]
    fn structured_adjoint_matches_dense_adjoint() {
        let space = MixedSpace::new(vec![MeasuredAxis::new(vec![0.5, 1.5, 2.0]).unwrap()], vec![2.5]).unwrap();
        let fam = OperatorFamily::weighted_composition(
            vec![vec![2, 0, 1], vec![0, 1, 2]],
            vec![vec![1.0, -2.0, 0.5], vec![0.3, 0.7, 1.1]],
            space,
        )
        .unwrap();
        let adj = adjoint_family(&fam).unwrap();
        let Structure::WeightedComposition { permutations, multipliers } = adj.structure().clone() else {
            panic!("structure lost");
        };
        let rebuilt = OperatorFamily::weighted_composition(permutations, multipliers, adj.domain().clone()).unwrap();
        for j in 0..2 {
            let diff = to_dense(rebuilt.member(j)) - to_dense(adj.member(j));
            assert!(diff.abs().max() < 1e-12);
        }
    }

    #[test]
    fn structure_tag_validation() {
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 2.0]));
        let fam = OperatorFamily::dense(vec![d.clone()], seq(2, 2.0)).unwrap();
        assert!(fam.clone().with_structure_tag("multiplication").is_ok());
        let full = DMatrix::from_element(2, 2, 1.0);
        let fam2 = OperatorFamily::dense(vec![full], seq(2, 2.0)).unwrap();
        assert!(fam2.clone().with_structure_tag("multiplication").is_err());
        assert!(fam2.clone().with_structure_tag("weighted_composition").is_err());
        assert!(fam2.with_structure_tag("banded").is_err());
        let mut p = DMatrix::zeros(3, 3);
        p[(0, 2)] = 2.0;
        p[(2, 0)] = -1.0;
        let fam3 = OperatorFamily::dense(vec![p], seq(3, 2.0)).unwrap().with_structure_tag("weighted_composition").unwrap();
        assert_eq!(
            fam3.structure(),
            &Structure::WeightedComposition {
                permutations: vec![vec![2, 1, 0]],
                multipliers: vec![vec![2.0, 0.0, -1.0]],
            }
        );
    }

    #[test]
    fn uniform_norm_cases() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        let sp = seq(2, 2.0);
        let (v, exact) = uniform_norm_bound(&a, &sp, &sp).unwrap();
        assert!(exact);
        assert!(close(v, a.singular_values().max(), 1e-14));
        let sp3 = seq(2, 3.0);
        let (v3, exact3) = uniform_norm_bound(&a, &sp3, &sp3).unwrap();
        assert!(!exact3);
        assert!(close(v3, 1f64.max(3.0).powf(1.0 / 3.0) * 3f64.powf(2.0 / 3.0), 1e-14));
    }

    #[test]
    fn rademacher_examples() {
        let id = OperatorFamily::dense(vec![DMatrix::identity(3, 3)], seq(3, 2.0)).unwrap();
        let est = rademacher_bound_estimate(&id, &quick(), 2).unwrap();
        assert!(close(est.lower, 1.0, 1e-12));
        assert!(est.exact_average);

        let scal = OperatorFamily::dense(
            vec![DMatrix::from_element(1, 1, 0.5), DMatrix::from_element(1, 1, -1.7)],
            seq(1, 2.0),
        )
        .unwrap();
        let est = rademacher_bound_estimate(&scal, &quick(), 2).unwrap();
        assert!(close(est.lower, 1.7, 1e-9));
    }

    #[test]
    fn sign_patterns_are_exhaustive() {
        let p = sign_patterns(4, 0);
        assert_eq!(p.len(), 8);
        assert!(p.iter().all(|e| e[0] == 1.0));
        let mut uniq: Vec<Vec<i8>> = p.iter().map(|e| e.iter().map(|v| *v as i8).collect()).collect();
        uniq.sort();
        uniq.dedup();
        assert_eq!(uniq.len(), 8);
        assert_eq!(sign_patterns(14, 3).len(), RADEMACHER_SAMPLES);
    }

    #[test]
    fn search_is_thread_count_independent() {
        let fam = id_swap(2.0);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| estimate_ls_bound(&fam, 1.5, &quick(), 9).unwrap());
        let b = four.install(|| estimate_ls_bound(&fam, 1.5, &quick(), 9).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let space = MixedSpace::new(
            vec![MeasuredAxis::new(vec![0.5, 2.0]).unwrap(), MeasuredAxis::new(vec![1.0, 3.0]).unwrap()],
            vec![3.0, 1.5],
        )
        .unwrap();
        let a = DMatrix::from_fn(4, 4, |i, j| ((i * 5 + j * 3) % 7) as f64 - 3.0);
        let b = DMatrix::from_fn(4, 4, |i, j| if i == j { 1.0 + i as f64 } else { 0.2 });
        let fam = OperatorFamily::dense(vec![a, b], space).unwrap();
        let xs = vec![vec![0.3, -1.0, 0.7, 0.2], vec![1.1, 0.4, -0.6, 0.9]];
        let assignment = [0, 1];
        let signs = sign_patterns(2, 0);
        for s in [1.5, 2.0, 3.0] {
            let (_, g) = ls_ratio_with_grad(&fam, &assignment, &xs, s);
            let (_, gr) = rademacher_ratio_with_grad(&fam, &assignment, &signs, &xs);
            for n in 0..2 {
                for k in 0..4 {
                    let h = 1e-6;
                    let mut xp = xs.clone();
                    xp[n][k] += h;
                    let mut xm = xs.clone();
                    xm[n][k] -= h;
                    let fd = (ls_ratio(&fam, &assignment, &xp, s).unwrap() - ls_ratio(&fam, &assignment, &xm, s).unwrap()) / (2.0 * h);
                    assert!((fd - g[n][k]).abs() < 1e-6 * (1.0 + fd.abs()), "s={s} n={n} k={k}");
                    let fdr = (rademacher_ratio(&fam, &assignment, &xp, 0).unwrap()
                        - rademacher_ratio(&fam, &assignment, &xm, 0).unwrap())
                        / (2.0 * h);
                    assert!((fdr - gr[n][k]).abs() < 1e-6 * (1.0 + fdr.abs()));
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn singleton_scaling_is_exact(c in -5.0f64..5.0, seed in 0u64..500) {
            prop_assume!(c.abs() > 1e-3);
            let mut r = rng::seeded(seed);
            let a = DMatrix::from_fn(3, 3, |_, _| r.random_range(-1.0..1.0));
            let fam = OperatorFamily::dense(vec![a], seq(3, 2.5)).unwrap();
            let xs = vec![rng::signed_vec(&mut r, 3), rng::signed_vec(&mut r, 3)];
            let base = ls_ratio(&fam, &[0, 0], &xs, 1.7).unwrap();
            let scaled = ls_ratio(&fam.scaled(c).unwrap(), &[0, 0], &xs, 1.7).unwrap();
            prop_assert!(close(scaled, c.abs() * base, 1e-12));
        }

        #[test]
        fn ratios_never_exceed_closed_form(seed in 0u64..1000, s in 1.0f64..6.0) {
            let mut r = rng::seeded(seed);
            let space = MixedSpace::new(vec![MeasuredAxis::new(vec![0.5, 1.0, 2.0]).unwrap()], vec![2.5]).unwrap();
            let fam = OperatorFamily::weighted_composition(
                vec![vec![1, 2, 0], vec![0, 1, 2], vec![2, 1, 0]],
                (0..3).map(|_| rng::signed_vec(&mut r, 3)).collect(),
                space,
            ).unwrap();
            let exact = exact_ls_bound_structured(&fam, s).unwrap();
            let n = 1 + (seed as usize) % 5;
            let assignment: Vec<usize> = (0..n).map(|_| r.random_range(0..3)).collect();
            let xs: Vec<Vec<f64>> = (0..n).map(|_| rng::signed_vec(&mut r, 3)).collect();
            prop_assert!(ls_ratio(&fam, &assignment, &xs, s).unwrap() <= exact * (1.0 + 1e-12));
        }
    }
}
