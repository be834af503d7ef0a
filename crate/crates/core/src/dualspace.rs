//! Duality of iterated Lebesgue spaces: norming functions, pairing checks and
//! the comparison constants between `X(ℓ^∞_N)`, `X(ℓ^r_N)` and `X(ℓ^1_N)`.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{check_tuple_exponent, tuple_norm, MeasuredAxis, MixedSpace};
use crate::rng;

const EQUALITY_TOL: f64 = 1e-8;
const HOLDER_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct NormingWitness {
    /// Element of the dual space `L^{q̄'}`.
    pub g: Vec<f64>,
    /// Element of `L^{q̄}` with `∫ f g = ‖f‖ ‖g‖`.
    pub f: Vec<f64>,
    pub pairing: f64,
    pub f_norm: f64,
    pub g_norm: f64,
}

impl NormingWitness {
    /// `| |∫fg| - ‖f‖‖g‖ | / (‖f‖‖g‖)`.
    pub fn holder_gap(&self) -> f64 {
        let prod = self.f_norm * self.g_norm;
        if prod == 0.0 {
            return self.pairing.abs();
        }
        (self.pairing.abs() - prod).abs() / prod
    }
}

/// For `g` in the dual of `space`, builds
/// `f = sgn(g) |g|^{q'_n - 1} Π_{i<n} N_i^{q'_i - q'_{i+1}}`, where `N_i` is the
/// iterated `q̄'` norm of `g` over axes `i..n` at fixed outer indices.
///
/// Then `∫ f g = ‖g‖^{q'_1}` and `‖f‖_{q̄} = ‖g‖^{q'_1 - 1}`; fibers on which `g`
/// vanishes carry `f = 0`.
pub fn norming_function(g: &[f64], space: &MixedSpace) -> Result<NormingWitness> {
    space.ensure_reflexive()?;
    let dual = space.dual();
    let levels = dual.partial_norms(g)?;
    if levels[0][0] == 0.0 {
        return Err(Error::InvalidArgument("g vanishes identically".into()));
    }
    let qd = dual.exponents();
    let shape = space.shape();
    let n = shape.len();
    // stride[i]: number of atoms under one prefix of axes 0..i
    let mut stride = vec![1usize; n + 1];
    for i in (0..n).rev() {
        stride[i] = stride[i + 1] * shape[i];
    }
    let f: Vec<f64> = g
        .iter()
        .enumerate()
        .map(|(idx, &gv)| {
            if gv == 0.0 {
                return 0.0;
            }
            let mut v = gv.signum() * gv.abs().powf(qd[n - 1] - 1.0);
            for i in 1..n {
                let ni = levels[i][idx / stride[i]];
                v *= ni.powf(qd[i - 1] - qd[i]);
            }
            v
        })
        .collect();
    let pairing = space.pairing(&f, g)?;
    let f_norm = space.norm(&f)?;
    let g_norm = levels[0][0];
    Ok(NormingWitness {
        g: g.to_vec(),
        f,
        pairing,
        f_norm,
        g_norm,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairingReport {
    pub trials: usize,
    /// `max |∫fg| / ‖f‖_{q̄}` over the random `f`.
    pub sampled_max: f64,
    pub dual_norm: f64,
    /// `|∫ f_w g| / ‖f_w‖` for the norming witness (0 when `g = 0`).
    pub witness_value: f64,
    /// `‖g‖_{q̄'} - witness_value`.
    pub gap: f64,
    pub pass: bool,
}

/// Samples `|∫fg| / ‖f‖_{q̄}` against `‖g‖_{q̄'}` and compares with the norming witness.
pub fn verify_duality_pairing(g: &[f64], space: &MixedSpace, trials: usize, seed: u64) -> Result<PairingReport> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    space.ensure_reflexive()?;
    let dual_norm = space.dual().norm(g)?;
    let d = space.dim();
    let sampled_max = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut r = rng::stream(seed, t as u64);
            let f = if t % 2 == 0 {
                rng::signed_vec(&mut r, d)
            } else {
                rng::spiky_vec(&mut r, d, 0.3)
                    .into_iter()
                    .map(|x| if r.random_bool(0.5) { x } else { -x })
                    .collect()
            };
            let nf = space.norm_unchecked(&f);
            if nf == 0.0 {
                0.0
            } else {
                space.pairing(&f, g).expect("shape").abs() / nf
            }
        })
        .collect::<Vec<f64>>()
        .into_iter()
        .fold(0.0, f64::max);
    let witness_value = if dual_norm == 0.0 {
        0.0
    } else {
        let w = norming_function(g, space)?;
        w.pairing.abs() / w.f_norm
    };
    let gap = dual_norm - witness_value;
    let pass = sampled_max <= dual_norm * (1.0 + HOLDER_TOL) + HOLDER_TOL
        && gap.abs() <= EQUALITY_TOL * dual_norm.max(f64::MIN_POSITIVE);
    Ok(PairingReport {
        trials,
        sampled_max,
        dual_norm,
        witness_value,
        gap,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TupleDualityReport {
    pub n: usize,
    pub r: f64,
    pub trials: usize,
    /// Largest `‖f‖_{X(ℓ^∞)} / ‖f‖_{X(ℓ^r)}` (must be ≤ 1).
    pub max_inf_over_r: f64,
    /// Largest `‖f‖_{X(ℓ^r)} / ‖f‖_{X(ℓ^∞)}` (must be ≤ N^{1/r}).
    pub max_r_over_inf: f64,
    /// Largest `‖f‖_{X(ℓ^1)} / ‖f‖_{X(ℓ^r)}` (must be ≤ N^{1-1/r}).
    pub max_one_over_r: f64,
    /// `ℓ^1 / ℓ^r` on an identical-entry tuple, equal to `N^{1-1/r}`.
    pub identical_one_over_r: f64,
    /// `ℓ^r / ℓ^∞` on an identical-entry tuple, equal to `N^{1/r}`.
    pub identical_r_over_inf: f64,
    /// `ℓ^r / ℓ^∞` on a tuple with disjoint supports.
    pub disjoint_r_over_inf: Option<f64>,
    /// Relative Hölder gap of the norming witness in `X(ℓ^r_N)` for a random tuple.
    pub witness_gap: Option<f64>,
    pub chains_hold: bool,
    pub identical_tight: bool,
}

impl TupleDualityReport {
    pub fn pass(&self) -> bool {
        self.chains_hold && self.identical_tight && self.witness_gap.is_none_or(|g| g <= EQUALITY_TOL)
    }
}

fn r_power(n: usize, e: f64) -> f64 {
    (n as f64).powf(e)
}

/// Checks `‖f‖_{X(ℓ^∞_N)} ≤ ‖f‖_{X(ℓ^r_N)} ≤ N^{1/r} ‖f‖_{X(ℓ^∞_N)}` and
/// `‖f‖_{X(ℓ^1_N)} ≤ N^{1-1/r} ‖f‖_{X(ℓ^r_N)}` on random tuples, evaluates the
/// extremal tuples, and for `1 < r < ∞` tests the norming witness of
/// `X(ℓ^r_N)` as the iterated space with an innermost counting axis.
pub fn tuple_duality_constants(
    space: &MixedSpace,
    n: usize,
    r: f64,
    trials: usize,
    seed: u64,
) -> Result<TupleDualityReport> {
    if n == 0 {
        return Err(Error::InvalidArgument("tuple length must be at least 1".into()));
    }
    check_tuple_exponent(r)?;
    let d = space.dim();
    let inv_r = if r.is_infinite() { 0.0 } else { 1.0 / r };
    let ratios: Vec<(f64, f64, f64)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rg = rng::stream(seed, t as u64);
            let fs: Vec<Vec<f64>> = (0..n).map(|_| rng::signed_vec(&mut rg, d)).collect();
            let inf = tuple_norm(&fs, f64::INFINITY, space).expect("shape");
            let mid = tuple_norm(&fs, r, space).expect("shape");
            let one = tuple_norm(&fs, 1.0, space).expect("shape");
            if mid == 0.0 {
                (0.0, 0.0, 0.0)
            } else {
                (inf / mid, mid / inf, one / mid)
            }
        })
        .collect();
    let max_inf_over_r = ratios.iter().map(|x| x.0).fold(0.0, f64::max);
    let max_r_over_inf = ratios.iter().map(|x| x.1).fold(0.0, f64::max);
    let max_one_over_r = ratios.iter().map(|x| x.2).fold(0.0, f64::max);
    let c_r = r_power(n, inv_r);
    let c_1 = r_power(n, 1.0 - inv_r);
    let slack = 1.0 + HOLDER_TOL;
    let chains_hold = max_inf_over_r <= slack && max_r_over_inf <= c_r * slack && max_one_over_r <= c_1 * slack;

    let mut base = rng::signed_vec(&mut rng::stream(seed, u64::MAX), d);
    if base.iter().all(|v| *v == 0.0) {
        base[0] = 1.0;
    }
    let same = vec![base.clone(); n];
    let s_inf = tuple_norm(&same, f64::INFINITY, space)?;
    let s_r = tuple_norm(&same, r, space)?;
    let s_1 = tuple_norm(&same, 1.0, space)?;
    let identical_one_over_r = s_1 / s_r;
    let identical_r_over_inf = s_r / s_inf;
    let identical_tight =
        (identical_one_over_r - c_1).abs() <= 1e-12 * c_1 && (identical_r_over_inf - c_r).abs() <= 1e-12 * c_r;

    let disjoint_r_over_inf = (n <= d).then(|| {
        let fs: Vec<Vec<f64>> = (0..n)
            .map(|j| {
                let mut f = vec![0.0; d];
                for (i, v) in base.iter().enumerate() {
                    if i % n == j {
                        f[i] = *v;
                    }
                }
                f
            })
            .collect();
        let a = tuple_norm(&fs, r, space).expect("shape");
        let b = tuple_norm(&fs, f64::INFINITY, space).expect("shape");
        if b == 0.0 {
            1.0
        } else {
            a / b
        }
    });

    let witness_gap = if r > 1.0 && r.is_finite() && space.is_reflexive() {
        let ext = space.with_inner_axis(MeasuredAxis::counting(n)?, r)?;
        let g = rng::signed_vec(&mut rng::stream(seed, u64::MAX - 1), ext.dim());
        Some(norming_function(&g, &ext)?.holder_gap())
    } else {
        None
    };

    Ok(TupleDualityReport {
        n,
        r,
        trials,
        max_inf_over_r,
        max_r_over_inf,
        max_one_over_r,
        identical_one_over_r,
        identical_r_over_inf,
        disjoint_r_over_inf,
        witness_gap,
        chains_hold,
        identical_tight,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::conjugate;

    fn space(shape: &[usize], q: &[f64]) -> MixedSpace {
        MixedSpace::new(
            shape.iter().map(|n| MeasuredAxis::counting(*n).unwrap()).collect(),
            q.to_vec(),
        )
        .unwrap()
    }

    #[test]
    fn hilbert_case() {
        let x = space(&[2], &[2.0]);
        let w = norming_function(&[3.0, 4.0], &x).unwrap();
        assert_eq!(w.f, vec![3.0, 4.0]);
        assert!((w.pairing - 25.0).abs() < 1e-12);
        assert!((w.f_norm * w.g_norm - 25.0).abs() < 1e-12);
    }

    #[test]
    fn flat_vector_is_its_own_witness() {
        let x = space(&[2], &[3.0]);
        let w = norming_function(&[1.0, 1.0], &x).unwrap();
        assert_eq!(w.f, vec![1.0, 1.0]);
        assert!(w.holder_gap() < 1e-15);
    }

    #[test]
    fn identities_of_the_construction() {
        let mut r = rng::seeded(3);
        for trial in 0..40 {
            let shape = [1 + trial % 4, 1 + (trial / 4) % 3, 2];
            let q: Vec<f64> = (0..3).map(|_| r.random_range(1.25..8.0)).collect();
            let axes = shape
                .iter()
                .map(|n| MeasuredAxis::new((0..*n).map(|_| r.random_range(0.2..2.0)).collect()).unwrap())
                .collect();
            let x = MixedSpace::new(axes, q.clone()).unwrap();
            let g = rng::signed_vec(&mut r, x.dim());
            let w = norming_function(&g, &x).unwrap();
            let q1d = conjugate(q[0]);
            assert!((w.pairing - w.g_norm.powf(q1d)).abs() <= 1e-10 * w.pairing);
            assert!((w.f_norm - w.g_norm.powf(q1d - 1.0)).abs() <= 1e-10 * w.f_norm);
            assert!(w.holder_gap() < 1e-8);
        }
    }

    #[test]
    fn zero_fibers_are_zeroed() {
        let x = space(&[3, 2], &[2.0, 4.0]);
        let g = vec![1.0, -2.0, 0.0, 0.0, 0.5, 0.0];
        let w = norming_function(&g, &x).unwrap();
        assert_eq!(&w.f[2..4], &[0.0, 0.0]);
        assert_eq!(w.f[5], 0.0);
        assert!(w.holder_gap() < 1e-12);
        assert!(norming_function(&[0.0; 6], &x).is_err());
        assert!(norming_function(&g, &space(&[3, 2], &[1.0, 4.0])).is_err());
    }

    #[test]
    fn pairing_report() {
        let x = space(&[4, 3], &[2.0, 3.0]);
        let rep = verify_duality_pairing(&[0.0; 12], &x, 10, 0).unwrap();
        assert_eq!(rep.sampled_max, 0.0);
        assert!(rep.pass);
        let g = rng::signed_vec(&mut rng::seeded(1), 12);
        let rep = verify_duality_pairing(&g, &x, 200, 4).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!(rep.sampled_max <= rep.dual_norm);
    }

    #[test]
    fn equal_exponents_reduce_to_flat_duality() {
        let mut r = rng::seeded(8);
        let axes = vec![
            MeasuredAxis::new(vec![0.5, 1.5, 1.0]).unwrap(),
            MeasuredAxis::new(vec![2.0, 0.25]).unwrap(),
        ];
        let x = MixedSpace::new(axes, vec![3.0, 3.0]).unwrap();
        let flat = MixedSpace::new(vec![MeasuredAxis::new(x.product_masses()).unwrap()], vec![3.0]).unwrap();
        let g = rng::signed_vec(&mut r, 6);
        let a = norming_function(&g, &x).unwrap();
        let b = norming_function(&g, &flat).unwrap();
        for (u, v) in a.f.iter().zip(&b.f) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn pairing_is_bilinear() {
        let x = space(&[3, 2], &[2.0, 5.0]);
        let mut r = rng::seeded(2);
        let f = rng::signed_vec(&mut r, 6);
        let g1 = rng::signed_vec(&mut r, 6);
        let g2 = rng::signed_vec(&mut r, 6);
        let comb: Vec<f64> = g1.iter().zip(&g2).map(|(a, b)| 2.0 * a + b).collect();
        let lhs = x.pairing(&f, &comb).unwrap();
        let rhs = 2.0 * x.pairing(&f, &g1).unwrap() + x.pairing(&f, &g2).unwrap();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn tuple_constants() {
        let x = space(&[4, 3], &[2.0, 3.0]);
        let one = tuple_duality_constants(&x, 1, 2.0, 20, 0).unwrap();
        assert!((one.max_r_over_inf - 1.0).abs() < 1e-12 && (one.max_one_over_r - 1.0).abs() < 1e-12);
        let rep = tuple_duality_constants(&x, 4, 2.0, 200, 1).unwrap();
        assert!(rep.pass(), "{rep:?}");
        assert!((rep.identical_one_over_r - 2.0).abs() < 1e-12);
        assert!((rep.disjoint_r_over_inf.unwrap() - 1.0).abs() < 1e-12);
        let inf = tuple_duality_constants(&x, 3, f64::INFINITY, 20, 1).unwrap();
        assert!(inf.pass() && inf.witness_gap.is_none());
    }
}
