//! The property battery behind `weightlab suite` and the acceptance tests.
//!
//! Every check is seeded; the summary table depends only on the seed and
//! size, never on the thread count.

use rand::Rng;
use rayon::prelude::*;

use crate::csvio::{fmt_f64, Table};
use crate::dualspace::{norming_function, tuple_duality_constants};
use crate::error::{Error, Result};
use crate::extrapolate::{rdf_iterate, verify_extrapolation_pair, verify_mixed_extrapolation, PairKind, RdfOptions};
use crate::intops::{theorem_experiment, Boundary, ExperimentConfig, FamilySpec};
use crate::kernels::{catalog, convolve_values, in_class_k, Certificate, KernelSpec, MembershipStatus};
use crate::lattice::{conjugate, Grid1D, GridFunction, LatticeFunction, MeasuredAxis, MixedSpace};
use crate::maximal::{lattice_maximal, lattice_maximal_ratio, maximal_values, maximal_values_naive};
use crate::rng;
use crate::sbound::{
    adjoint_family, estimate_ls_bound, exact_ls_bound_structured, interpolation_certificate, OperatorFamily,
    SearchConfig, SANDWICH_TOL,
};
use crate::weights::{ap_constant, dual_weight, fit_consistency_profile, power_weight, Weight};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Size {
    /// The reference battery.
    Small,
    /// Twice the samples and families.
    Full,
}

impl Size {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "small" => Ok(Size::Small),
            "full" => Ok(Size::Full),
            other => Err(Error::InvalidArgument(format!("unknown suite size '{other}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Size::Small => "small",
            Size::Full => "full",
        }
    }

    fn scale(&self, n: usize) -> usize {
        match self {
            Size::Small => n,
            Size::Full => 2 * n,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionOutcome {
    pub id: usize,
    pub name: &'static str,
    pub pass: bool,
    /// Headline number of the check (worst gap, ratio or count).
    pub metric: f64,
    pub detail: String,
}

impl CriterionOutcome {
    fn new(id: usize, name: &'static str, pass: bool, metric: f64, detail: String) -> Self {
        Self {
            id,
            name,
            pass,
            metric,
            detail,
        }
    }

    fn failed(id: usize, name: &'static str, err: Error) -> Self {
        Self::new(id, name, false, f64::NAN, format!("error: {err}"))
    }
}

pub const CRITERIA: [&str; 13] = [
    "ap_duality",
    "ap_monotonicity",
    "maximal_oracle",
    "class_k_soundness",
    "lattice_maximal",
    "rdf_invariants",
    "extrapolation",
    "ls_sandwich",
    "ls_shape",
    "r_bound_heat",
    "intop_certificate",
    "duality",
    "determinism",
];

fn random_weight(seed: u64, idx: u64, n: usize) -> Weight {
    let mut r = rng::stream(seed, idx);
    let vals = (0..n).map(|_| r.random_range(-2.5f64..2.5).exp()).collect();
    Weight::new(Grid1D::unit(n).expect("n > 0"), vals).expect("positive values")
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn c1_ap_duality(seed: u64, size: Size) -> Result<CriterionOutcome> {
    let count = size.scale(200);
    let gaps: Vec<f64> = (0..count)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let n = [16, 64, 256][i % 3];
            let w = random_weight(seed, i as u64, n);
            let mut worst = 0.0f64;
            for p in [1.5, 2.0, 3.0] {
                let a = ap_constant(&w, p)?.constant;
                let d = ap_constant(&dual_weight(&w, p)?, conjugate(p))?.constant;
                worst = worst.max(rel(d, a.powf(1.0 / (p - 1.0))));
            }
            Ok(worst)
        })
        .collect::<Result<_>>()?;
    let worst = gaps.iter().fold(0.0, |a: f64, b| a.max(*b));
    Ok(CriterionOutcome::new(
        1,
        CRITERIA[0],
        worst <= 1e-9,
        worst,
        format!("{count} weights; worst relative gap {worst:.3e}"),
    ))
}

fn c2_ap_monotonicity(seed: u64, size: Size) -> Result<CriterionOutcome> {
    let count = size.scale(200);
    let ps = [1.5, 2.0, 3.0, 5.0];
    let bad: Vec<usize> = (0..count)
        .into_par_iter()
        .map(|i| -> Result<usize> {
            let w = random_weight(seed ^ 0x5eed, i as u64, [16, 64][i % 2]);
            let cs: Vec<f64> = ps.iter().map(|p| ap_constant(&w, *p).map(|r| r.constant)).collect::<Result<_>>()?;
            Ok(cs.windows(2).filter(|c| c[1] > c[0]).count())
        })
        .collect::<Result<_>>()?;
    let total: usize = bad.iter().sum();
    Ok(CriterionOutcome::new(
        2,
        CRITERIA[1],
        total == 0,
        total as f64,
        format!("{count} weights over p in 1.5,2,3,5; {total} order violations"),
    ))
}

fn c3_maximal_oracle(seed: u64, size: Size) -> Result<CriterionOutcome> {
    let count = size.scale(100);
    let mismatches = (0..count)
        .filter(|&i| {
            let mut r = rng::stream(seed, i as u64);
            let n = r.random_range(1..=64);
            let f = if i % 2 == 0 {
                rng::signed_vec(&mut r, n)
            } else {
                rng::spiky_vec(&mut r, n, 0.2)
            };
            let fast = maximal_values(&f);
            let slow = maximal_values_naive(&f);
            fast.iter().zip(&slow).any(|(a, b)| a.to_bits() != b.to_bits())
        })
        .count();
    let example = maximal_values(&[0.0, 4.0, 0.0, 0.0]);
    let example_ok = example == vec![2.0, 4.0, 2.0, 4.0 / 3.0];
    Ok(CriterionOutcome::new(
        3,
        CRITERIA[2],
        mismatches == 0 && example_ok,
        mismatches as f64,
        format!("{count} inputs; {mismatches} bitwise mismatches; worked example {example_ok}"),
    ))
}

fn c4_class_k(seed: u64, size: Size) -> Result<CriterionOutcome> {
    let grid = Grid1D::spanning(-1.0, 1.0, 64)?;
    let specs = [
        KernelSpec::Gaussian { t: 0.001 },
        KernelSpec::Gaussian { t: 0.01 },
        KernelSpec::Gaussian { t: 0.1 },
        KernelSpec::Box { half_width: 0 },
        KernelSpec::Box { half_width: 3 },
        KernelSpec::Exponential { lambda: 4.0 },
        KernelSpec::Exponential { lambda: 30.0 },
        KernelSpec::OneSidedExponential { lambda: 10.0 },
    ];
    let trials = size.scale(1000);
    let mut worst = f64::NEG_INFINITY;
    let mut certified = 0;
    for spec in specs {
        let k = catalog(spec, None, &grid)?;
        if in_class_k(&k, 0, seed).status != MembershipStatus::Certified {
            continue;
        }
        certified += 1;
        let k_abs = k.abs();
        let w = (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut r = rng::stream(seed, t as u64);
                let f = if t % 2 == 0 {
                    rng::mixed_nonneg_vec(&mut r, 64)
                } else {
                    rng::spiky_vec(&mut r, 64, [0.05, 0.3][t % 4 / 2])
                };
                let conv = convolve_values(&k_abs, &f);
                let mf = maximal_values(&f);
                conv.iter().zip(&mf).map(|(c, m)| c - m).fold(f64::NEG_INFINITY, f64::max)
            })
            .collect::<Vec<f64>>()
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max);
        worst = worst.max(w);
    }
    let heavy = catalog(KernelSpec::Gaussian { t: 0.01 }, None, &grid)?.scaled(2.0);
    let verdict = in_class_k(&heavy, 256, seed);
    let refuted = verdict.status == MembershipStatus::Refuted
        && matches!(verdict.certificate, Certificate::Counterexample { violation, .. } if violation > 0.0);
    Ok(CriterionOutcome::new(
        4,
        CRITERIA[3],
        certified == specs.len() && worst <= 1e-9 && refuted,
        worst,
        format!("{certified}/{} certified; worst excess {worst:.3e}; mass-2 gaussian refuted {refuted}", specs.len()),
    ))
}

fn c5_lattice_maximal(seed: u64, size: Size) -> Result<CriterionOutcome> {
    let grid = Grid1D::spanning(-1.0, 1.0, 32)?;
    let w = power_weight(0.5, &grid)?;
    let p = 2.0;
    let space = MixedSpace::new(
        vec![MeasuredAxis::counting(3)?, MeasuredAxis::new(vec![0.5, 1.5])?],
        vec![3.0, 1.5],
    )?;
    let n = size.scale(1000);
    let sample = |i: usize| -> LatticeFunction {
        let mut r = rng::stream(seed, i as u64);
        let fibers: Vec<Vec<f64>> = (0..space.dim())
            .map(|_| match i % 3 {
                0 => rng::signed_vec(&mut r, 32),
                1 => rng::spiky_vec(&mut r, 32, 0.1),
                _ => rng::mixed_nonneg_vec(&mut r, 32),
            })
            .collect();
        LatticeFunction::from_fibers(grid, space.clone(), &fibers).expect("shape")
    };
    let results: Vec<(f64, bool)> = (0..2 * n)
        .into_par_iter()
        .map(|i| {
            let g = sample(i);
            let ratio = lattice_maximal_ratio(&g, p, &w).expect("shape").unwrap_or(0.0);
            let mut r = rng::stream(seed ^ 0xf00d, i as u64);
            let f_vals: Vec<f64> = g.values().iter().map(|v| v * r.random_range(-1.0..1.0)).collect();
            let f = LatticeFunction::new(grid, space.clone(), f_vals).expect("shape");
            let mf = lattice_maximal(&f).norm(p, w.as_function()).expect("shape");
            let mg = lattice_maximal(&g).norm(p, w.as_function()).expect("shape");
            (ratio, mf <= mg * (1.0 + 1e-12))
        })
        .collect();
    let max_n = results[..n].iter().map(|r| r.0).fold(0.0, f64::max);
    let max_2n = results.iter().map(|r| r.0).fold(0.0, f64::max);
    let monotone = results.iter().all(|r| r.1);
    let change = (max_2n - max_n) / max_n;
    Ok(CriterionOutcome::new(
        5,
        CRITERIA[4],
        monotone && max_2n.is_finite() && change < 0.1,
        change,
        format!("max ratio {max_n:.6} over {n}, {max_2n:.6} over {}; monotone {monotone}", 2 * n),
    ))
}

fn c6_rdf(seed: u64, size: Size) -> Result<CriterionOutcome> {
    let count = size.scale(100);
    let grid = Grid1D::spanning(-1.0, 1.0, 64)?;
    let out: Vec<std::result::Result<(f64, f64), String>> = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(seed, i as u64);
            let p = [1.5, 2.0, 3.0][i % 3];
            let a = [0.0, 0.3, 0.6, -0.3][i % 4] * (p - 1.0);
            let w = power_weight(a, &grid).map_err(|e| e.to_string())?;
            let u = GridFunction::new(grid, rng::mixed_nonneg_vec(&mut r, 64)).map_err(|e| e.to_string())?;
            if u.values().iter().all(|v| *v == 0.0) {
                return Ok((0.0, 0.0));
            }
            let res = rdf_iterate(&u, p, &w, &RdfOptions { seed, ..RdfOptions::default() })
                .map_err(|e| format!("sample {i}: {e}"))?;
            Ok((res.norm_ratio, res.tail_ratio))
        })
        .collect();
    if let Some(Err(e)) = out.iter().find(|r| r.is_err()) {
        return Ok(CriterionOutcome::new(6, CRITERIA[5], false, f64::NAN, e.clone()));
    }
    let vals: Vec<(f64, f64)> = out.into_iter().map(|r| r.expect("checked")).collect();
    let norm = vals.iter().map(|v| v.0).fold(0.0, f64::max);
    let tail = vals.iter().map(|v| v.1).fold(0.0, f64::max);
    Ok(CriterionOutcome::new(
        6,
        CRITERIA[5],
        norm <= 2.0 && tail < 1e-6,
        tail,
        format!("{count} inputs; max norm ratio {norm:.6}; max tail ratio {tail:.3e}"),
    ))
}

fn c7_extrapolation(seed: u64, size: Size) -> Result<CriterionOutcome> {
    let grid = Grid1D::spanning(-1.0, 1.0, 32)?;
    let weights: Vec<Weight> = [0.0, 0.3, 0.6, 0.9]
        .iter()
        .map(|a| power_weight(*a, &grid))
        .collect::<Result<_>>()?;
    let ps = [1.5, 3.0];
    let samples = size.scale(24);
    let scalar = verify_extrapolation_pair(PairKind::MaximalOf, 2.0, &ps, &weights, samples, seed)?;
    let spaces = [
        MixedSpace::new(vec![], vec![])?,
        MixedSpace::new(vec![MeasuredAxis::counting(3)?], vec![2.5])?,
        MixedSpace::new(vec![MeasuredAxis::counting(2)?, MeasuredAxis::uniform(2, 0.5)?], vec![1.5, 3.0])?,
    ];
    let mut verdicts = vec![scalar.verdict];
    let mut envelopes_ok = scalar.alpha.is_valid() && scalar.conclusions.iter().all(|c| c.envelope.is_valid());
    let mut agree = 0.0f64;
    for space in &spaces {
        let rep = verify_mixed_extrapolation(PairKind::MaximalOf, 2.0, &ps, space, &weights, samples, seed)?;
        verdicts.push(rep.verdict);
        envelopes_ok &= rep.alpha.is_valid() && rep.conclusions.iter().all(|c| c.envelope.is_valid());
        if space.axes().is_empty() {
            let a = scalar.rows();
            let b = rep.rows();
            agree = a
                .iter()
                .zip(&b)
                .map(|(x, y)| rel(x.3, y.3).max(rel(x.2, y.2)))
                .fold(if a.len() == b.len() { 0.0 } else { f64::INFINITY }, f64::max);
        }
    }
    let all = verdicts.iter().all(|v| *v);
    Ok(CriterionOutcome::new(
        7,
        CRITERIA[6],
        all && envelopes_ok && agree <= 1e-12,
        agree,
        format!("verdicts scalar,n0,n1,n2 = {verdicts:?}; envelopes {envelopes_ok}; n=0 vs scalar gap {agree:.3e}"),
    ))
}

/// Seeded structured family on `L^q(μ)` of dimension `dim`: multiplication
/// when `composition` is false, otherwise weighted compositions.
pub fn structured_family(seed: u64, dim: usize, members: usize, q: f64, composition: bool) -> Result<OperatorFamily> {
    let mut r = rng::seeded(seed);
    let mu: Vec<f64> = (0..dim).map(|_| r.random_range(0.3..2.0)).collect();
    let space = MixedSpace::new(vec![MeasuredAxis::new(mu)?], vec![q])?;
    let mults: Vec<Vec<f64>> = (0..members)
        .map(|_| (0..dim).map(|_| r.random_range(-1.5..1.5)).collect())
        .collect();
    if !composition {
        return OperatorFamily::multiplication(mults, space);
    }
    let perms = (0..members)
        .map(|_| {
            let mut p: Vec<usize> = (0..dim).collect();
            for i in (1..dim).rev() {
                p.swap(i, r.random_range(0..=i));
            }
            p
        })
        .collect();
    OperatorFamily::weighted_composition(perms, mults, space)
}

fn c8_ls_sandwich(seed: u64, size: Size) -> Result<CriterionOutcome> {
    let cfg = SearchConfig::default();
    let count = size.scale(20);
    let (s0, s1) = (1.25, 8.0);
    let mut worst_ratio = f64::INFINITY;
    let mut issues = Vec::new();
    for f in 0..count {
        let fseed = seed.wrapping_mul(1000).wrapping_add(f as u64);
        let dim = 2 + f % 3;
        let fam = structured_family(fseed, dim, 2 + f % 2, 2.0, f % 2 == 1)?;
        let adj = adjoint_family(&fam)?;
        let r0 = exact_ls_bound_structured(&fam, s0)?;
        let r1 = exact_ls_bound_structured(&fam, s1)?;
        for s in [1.25, 2.0, 3.0] {
            let exact = exact_ls_bound_structured(&fam, s)?;
            let lower = estimate_ls_bound(&fam, s, &cfg, fseed)?.lower;
            let adj_lower = estimate_ls_bound(&adj, conjugate(s), &cfg, fseed)?.lower;
            let duality = exact_ls_bound_structured(&adj, conjugate(s))?;
            let interp = interpolation_certificate(r0, r1, s0, s1, s)?;
            worst_ratio = worst_ratio.min(lower / exact);
            if lower > exact + SANDWICH_TOL || lower < 0.9 * exact {
                issues.push(format!("family {f} s {s}: lower {lower} exact {exact}"));
            }
            if interp < lower.max(adj_lower) - SANDWICH_TOL || duality < lower.max(adj_lower) - SANDWICH_TOL {
                issues.push(format!("family {f} s {s}: certificate below a lower bound"));
            }
            if (lower - adj_lower).abs() > 0.05 * lower.max(adj_lower) {
                issues.push(format!("family {f} s {s}: adjoint {adj_lower} vs {lower}"));
            }
        }
    }
    Ok(CriterionOutcome::new(
        8,
        CRITERIA[7],
        issues.is_empty(),
        worst_ratio,
        if issues.is_empty() {
            format!("{count} families; worst lower/exact {worst_ratio:.6}")
        } else {
            issues.join("; ")
        },
    ))
}

fn c9_shape(seed: u64, size: Size) -> Result<CriterionOutcome> {
    let grid_s = [1.25, 1.5, 2.0, 3.0, 4.0, 8.0];
    let count = size.scale(10);
    let mut bad = 0;
    let mut worst = 0.0f64;
    for f in 0..count {
        let fam = structured_family(seed.wrapping_mul(7919).wrapping_add(f as u64), 4, 3, 2.0, true)?;
        let vals: Vec<f64> = grid_s
            .iter()
            .map(|s| exact_ls_bound_structured(&fam, *s))
            .collect::<Result<_>>()?;
        let mut ok = true;
        for i in 0..vals.len() - 1 {
            let excess = if grid_s[i + 1] <= 2.0 {
                vals[i + 1] - vals[i]
            } else {
                vals[i] - vals[i + 1]
            };
            worst = worst.max(excess);
            ok &= excess <= 1e-12;
        }
        bad += usize::from(!ok);
    }
    Ok(CriterionOutcome::new(
        9,
        CRITERIA[8],
        bad == 0,
        worst,
        format!("{count} families; {bad} off the V shape; worst excess {worst:.3e}"),
    ))
}

fn c10_heat(seed: u64, size: Size) -> Result<CriterionOutcome> {
    let budget = 2;
    let cfg = ExperimentConfig {
        n_time: 64,
        n_space: 16,
        p: 2.0,
        q: 2.0,
        s_list: vec![],
        family: FamilySpec::Heat {
            scale: 0.05,
            boundary: Boundary::Periodic,
        },
        search: SearchConfig {
            n_max: budget,
            restarts: 4,
            iterations: 30,
            step: 0.1,
        },
        rademacher_budgets: vec![budget, 2 * budget],
        chain_trials: size.scale(32),
        seed,
        ..ExperimentConfig::default()
    };
    let rep = theorem_experiment(&cfg)?;
    let mut worst_change = 0.0f64;
    let mut finite = true;
    let mut pts = Vec::new();
    for pair in rep.rademacher.chunks(2) {
        let (a, b) = (pair[0].lower, pair[1].lower);
        finite &= a.is_finite() && b.is_finite() && a > 0.0;
        worst_change = worst_change.max(rel(a, b));
        pts.push((pair[1].ap_constant, pair[1].lower));
    }
    let chain_ok = rep.chains.iter().all(|c| c.2.pass && c.2.rescale == 1.0);
    let profile = fit_consistency_profile(&pts)?;
    let pass = finite && worst_change <= 0.1 && chain_ok && profile.is_valid() && rep.kernels.len() == 3;
    Ok(CriterionOutcome::new(
        10,
        CRITERIA[9],
        pass,
        worst_change,
        format!(
            "R lower {:.6}..{:.6}; budget change {worst_change:.3e}; chain {chain_ok} on {} runs; envelope max {:.6}",
            pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min),
            pts.iter().map(|p| p.1).fold(0.0, f64::max),
            rep.chains.len(),
            profile.max_value()
        ),
    ))
}

fn c11_intop_certificate(seed: u64, size: Size) -> Result<CriterionOutcome> {
    let cfg = ExperimentConfig {
        n_time: 32,
        n_space: 8,
        p: 3.0,
        q: 3.0,
        s_list: vec![1.25, 2.0],
        family: FamilySpec::Multiplication { seed },
        weight_powers: if size == Size::Full {
            vec![0.0, 0.3, 0.6, 0.9, 1.2, 1.5]
        } else {
            vec![0.0, 0.3, 0.6, 0.9]
        },
        search: SearchConfig::default(),
        chain_trials: 0,
        seed,
        ..ExperimentConfig::default()
    };
    let rep = theorem_experiment(&cfg)?;
    let mut worst = 0.0f64;
    let mut ok = true;
    for row in &rep.rows {
        let upper = row.upper.unwrap_or(f64::NAN);
        ok &= row.lower <= upper;
        worst = worst.max(row.lower / upper);
    }
    Ok(CriterionOutcome::new(
        11,
        CRITERIA[10],
        ok && !rep.rows.is_empty(),
        worst,
        format!("{} rows; worst lower/certificate {worst:.6}", rep.rows.len()),
    ))
}

fn c12_duality(seed: u64, size: Size) -> Result<CriterionOutcome> {
    let count = size.scale(100);
    let gaps: Vec<f64> = (0..count)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let mut r = rng::stream(seed, i as u64);
            let n_axes = 1 + i % 3;
            let full = [4, 3, 2];
            let axes = (0..n_axes)
                .map(|a| MeasuredAxis::new((0..r.random_range(1..=full[a])).map(|_| r.random_range(0.2..3.0)).collect()))
                .collect::<Result<Vec<_>>>()?;
            let qs = (0..n_axes).map(|_| r.random_range(1.25..8.0)).collect();
            let space = MixedSpace::new(axes, qs)?;
            let mut g = rng::signed_vec(&mut r, space.dim());
            if g.iter().all(|v| *v == 0.0) {
                g[0] = 1.0;
            }
            Ok(norming_function(&g, &space)?.holder_gap())
        })
        .collect::<Result<_>>()?;
    let worst_gap = gaps.iter().fold(0.0, |a: f64, b| a.max(*b));
    let tuple_trials = size.scale(1000);
    let space = MixedSpace::new(vec![MeasuredAxis::counting(4)?, MeasuredAxis::uniform(3, 0.5)?], vec![2.0, 3.0])?;
    let configs = [(1usize, 2.0), (4, 2.0), (3, 1.5), (5, 4.0)];
    let mut tuples_ok = true;
    for (k, (n, r)) in configs.iter().enumerate() {
        let rep = tuple_duality_constants(&space, *n, *r, tuple_trials / configs.len(), seed.wrapping_add(k as u64))?;
        tuples_ok &= rep.pass();
    }
    Ok(CriterionOutcome::new(
        12,
        CRITERIA[11],
        worst_gap <= 1e-8 && tuples_ok,
        worst_gap,
        format!("{count} witnesses; worst Hölder gap {worst_gap:.3e}; tuple chains {tuples_ok} on {tuple_trials} tuples"),
    ))
}

type Check = fn(u64, Size) -> Result<CriterionOutcome>;

const CHECKS: [Check; 12] = [
    c1_ap_duality,
    c2_ap_monotonicity,
    c3_maximal_oracle,
    c4_class_k,
    c5_lattice_maximal,
    c6_rdf,
    c7_extrapolation,
    c8_ls_sandwich,
    c9_shape,
    c10_heat,
    c11_intop_certificate,
    c12_duality,
];

/// Criteria 1 to 12 in the current thread pool.
pub fn run_battery(seed: u64, size: Size) -> Vec<CriterionOutcome> {
    CHECKS
        .iter()
        .enumerate()
        .map(|(i, check)| check(seed, size).unwrap_or_else(|e| CriterionOutcome::failed(i + 1, CRITERIA[i], e)))
        .collect()
}

pub fn summary_table(outcomes: &[CriterionOutcome], seed: u64, size: Size) -> Table {
    let mut t = Table::new(&["criterion", "name", "pass", "metric", "detail"])
        .with_meta("command", "suite")
        .with_meta("seed", seed)
        .with_meta("size", size.name());
    for o in outcomes {
        t.push(vec![
            o.id.to_string(),
            o.name.to_string(),
            o.pass.to_string(),
            fmt_f64(o.metric),
            o.detail.clone(),
        ]);
    }
    t
}

fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))
}

/// The full battery: criteria 1 to 12 run once in a single-thread pool and
/// once in a four-thread pool; criterion 13 compares the two summaries byte
/// for byte.
pub fn run_suite(seed: u64, size: Size) -> Result<Vec<CriterionOutcome>> {
    let one = pool(1)?.install(|| run_battery(seed, size));
    let four = pool(4)?.install(|| run_battery(seed, size));
    let a = summary_table(&one, seed, size).to_bytes();
    let b = summary_table(&four, seed, size).to_bytes();
    let same = a == b;
    let mut out = four;
    out.push(CriterionOutcome::new(
        13,
        CRITERIA[12],
        same,
        if same { 0.0 } else { 1.0 },
        format!("1-thread and 4-thread summaries identical: {same} ({} bytes)", a.len()),
    ));
    Ok(out)
}
