//! Uncentered Hardy–Littlewood maximal operator on a grid.
//!
//! Admissible intervals are cell-aligned and never wrap around the window.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{check_exponent, weighted_lp_norm, GridFunction, LatticeFunction};
use crate::rng;
use crate::weights::{ap_constant, Weight};

/// Coordinate perturbations tried per hill-climbing trial.
pub const HILL_STEPS: usize = 48;

/// `Mv(i) = max_{a ≤ i ≤ b} avg_{[a,b]} |v|` on raw cell values.
///
/// For each left end `a` the averages over `[a, b]` are formed with one
/// running sum and a suffix maximum hands them to every cell they cover.
pub fn maximal_values(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    let abs: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    let mut out = vec![0.0f64; n];
    let mut avg = vec![0.0f64; n];
    for a in 0..n {
        let mut sum = 0.0;
        for b in a..n {
            sum += abs[b];
            avg[b] = sum / (b - a + 1) as f64;
        }
        let mut suffix = f64::NEG_INFINITY;
        for i in (a..n).rev() {
            suffix = suffix.max(avg[i]);
            if suffix > out[i] {
                out[i] = suffix;
            }
        }
    }
    out
}

/// Reference implementation: for each cell, every interval containing it,
/// summed from scratch.
pub fn maximal_values_naive(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    let mut out = vec![0.0f64; n];
    for (i, o) in out.iter_mut().enumerate() {
        for a in 0..=i {
            for b in i..n {
                let mut sum = 0.0;
                for x in &v[a..=b] {
                    sum += x.abs();
                }
                let avg = sum / (b - a + 1) as f64;
                if avg > *o {
                    *o = avg;
                }
            }
        }
    }
    out
}

pub fn maximal_function(f: &GridFunction) -> GridFunction {
    GridFunction::new(*f.grid(), maximal_values(f.values()))
        .expect("maximal function preserves the grid length")
}

/// Shortest, then leftmost, interval attaining `Mf(i)`.
pub fn maximizing_interval(f: &GridFunction, i: usize) -> Result<(usize, usize)> {
    let v = f.values();
    if i >= v.len() {
        return Err(Error::InvalidArgument(format!("cell {i} outside grid")));
    }
    let target = maximal_values(v)[i];
    let n = v.len();
    for len in 1..=n {
        let lo = (i + 1).saturating_sub(len);
        for a in lo..=i {
            let b = a + len - 1;
            if b >= n {
                break;
            }
            let mut sum = 0.0;
            for x in &v[a..=b] {
                sum += x.abs();
            }
            if sum / len as f64 >= target {
                return Ok((a, b));
            }
        }
    }
    Ok((i, i))
}

/// `M̃F(x, s) = M(F(·, s))(x)` for every Ω index `s`.
pub fn lattice_maximal(f: &LatticeFunction) -> LatticeFunction {
    let fibers: Vec<Vec<f64>> = (0..f.fiber_len())
        .into_par_iter()
        .map(|s| maximal_values(f.fiber(s).values()))
        .collect();
    LatticeFunction::from_fibers(*f.grid(), f.space().clone(), &fibers)
        .expect("fiberwise maximal function preserves the shape")
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaximalNormEstimate {
    pub p: f64,
    pub weight: Weight,
    pub lower_bound: f64,
    pub witness: GridFunction,
    pub trials: usize,
    pub seed: u64,
}

/// `‖Mf‖_{L^p(w)} / ‖f‖_{L^p(w)}`, or `None` when `f = 0`.
pub fn maximal_ratio(f: &GridFunction, p: f64, w: &Weight) -> Result<Option<f64>> {
    let den = weighted_lp_norm(f, p, w.as_function())?;
    if den == 0.0 {
        return Ok(None);
    }
    let num = weighted_lp_norm(&maximal_function(f), p, w.as_function())?;
    Ok(Some(num / den))
}

/// Lower estimate of `‖M‖_{B(L^p(w))}`.
///
/// Trial 0 starts from the constant function, trial 1 from `w^{-1/(p-1)}`
/// restricted to the interval attaining `[w]_{A_p}` (its ratio is at least
/// `[w]_{A_p}^{1/p}`), and the remaining trials from seeded random inputs.
/// Every start is improved by hill climbing; the result is the best trial,
/// ties going to the lowest trial index.
pub fn maximal_norm_lower(p: f64, w: &Weight, trials: usize, seed: u64) -> Result<MaximalNormEstimate> {
    check_exponent(p)?;
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    if w.is_empty() {
        return Err(Error::Empty("weight"));
    }
    let grid = *w.grid();
    let n = w.len();
    let masses: Vec<f64> = w.values().iter().map(|v| grid.width() * v).collect();
    let ratio = |f: &[f64]| -> f64 {
        let den = crate::lattice::weighted_pnorm(f, &masses, p);
        if den == 0.0 {
            return 0.0;
        }
        crate::lattice::weighted_pnorm(&maximal_values(f), &masses, p) / den
    };
    let ap = ap_constant(w, p)?;

    let results: Vec<(f64, Vec<f64>)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut r = rng::stream(seed, t as u64);
            let mut f = match t {
                0 => vec![1.0; n],
                1 => {
                    let (a, b) = ap.witness;
                    (0..n)
                        .map(|i| {
                            if (a..=b).contains(&i) {
                                w.values()[i].powf(-1.0 / (p - 1.0))
                            } else {
                                0.0
                            }
                        })
                        .collect()
                }
                _ => rng::mixed_nonneg_vec(&mut r, n),
            };
            if f.iter().all(|x| *x == 0.0) {
                f[0] = 1.0;
            }
            let mut best = ratio(&f);
            for _ in 0..HILL_STEPS {
                let i = r.random_range(0..n);
                let old = f[i];
                let scale = f.iter().cloned().fold(0.0, f64::max);
                f[i] = match r.random_range(0..3u8) {
                    0 => 0.0,
                    1 => old * r.random_range(0.5..2.0),
                    _ => scale * r.random_range(0.0..2.0),
                };
                let cand = ratio(&f);
                if cand > best {
                    best = cand;
                } else {
                    f[i] = old;
                }
            }
            (best, f)
        })
        .collect();

    let mut best_idx = 0;
    for (t, (value, _)) in results.iter().enumerate() {
        if *value > results[best_idx].0 {
            best_idx = t;
        }
    }
    let (lower_bound, witness) = results.into_iter().nth(best_idx).expect("trials >= 1");
    Ok(MaximalNormEstimate {
        p,
        weight: w.clone(),
        lower_bound,
        witness: GridFunction::new(grid, witness)?,
        trials,
        seed,
    })
}

/// `‖M̃F‖_{L^p(w;L^q̄)} / ‖F‖_{L^p(w;L^q̄)}`, or `None` when `F = 0`.
pub fn lattice_maximal_ratio(f: &LatticeFunction, p: f64, w: &Weight) -> Result<Option<f64>> {
    let den = f.norm(p, w.as_function())?;
    if den == 0.0 {
        return Ok(None);
    }
    Ok(Some(lattice_maximal(f).norm(p, w.as_function())? / den))
}
