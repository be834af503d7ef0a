//! Convolution kernels on the offset window `[-m, m]` and the class `K` of
//! kernels whose absolute convolution is dominated by the maximal function.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{Grid1D, GridFunction};
use crate::maximal::maximal_values;
use crate::rng;

/// Slack on the majorant integral when certifying.
pub const CERTIFY_TOL: f64 = 1e-12;
/// Minimum violation `(|k| * f)(i) - Mf(i)` accepted as a refutation.
pub const REFUTE_TOL: f64 = 1e-9;

/// Tail cutoff for exponentially decaying catalog kernels: `exp(-40)`.
const TAIL_EXP: f64 = 40.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    half_width: usize,
    values: Vec<f64>,
    width: f64,
}

impl Kernel {
    /// Kernel from values at offsets `-m..=m` (odd length `2m + 1`).
    pub fn new(values: Vec<f64>, width: f64) -> Result<Self> {
        if values.len() % 2 == 0 {
            return Err(Error::InvalidArgument(format!(
                "kernel needs an odd number of values, got {}",
                values.len()
            )));
        }
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::InvalidArgument(format!("cell width {width} must be positive")));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("kernel values must be finite".into()));
        }
        Ok(Self {
            half_width: values.len() / 2,
            values,
            width,
        })
    }

    pub fn zero(half_width: usize, width: f64) -> Result<Self> {
        Self::new(vec![0.0; 2 * half_width + 1], width)
    }

    /// `1/h` at offset 0.
    pub fn identity(width: f64) -> Result<Self> {
        Self::new(vec![1.0 / width], width)
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    /// Values ordered by offset `-m..=m`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn offsets(&self) -> impl Iterator<Item = i64> + '_ {
        let m = self.half_width as i64;
        -m..=m
    }

    /// `k(offset)`, zero outside the window.
    pub fn at(&self, offset: i64) -> f64 {
        let m = self.half_width as i64;
        if offset.abs() > m {
            0.0
        } else {
            self.values[(offset + m) as usize]
        }
    }

    /// `h Σ |k|`.
    pub fn l1_norm(&self) -> f64 {
        self.width * self.values.iter().map(|v| v.abs()).sum::<f64>()
    }

    pub fn abs(&self) -> Self {
        Self {
            values: self.values.iter().map(|v| v.abs()).collect(),
            ..self.clone()
        }
    }

    /// `k̃(x) = k(-x)`.
    pub fn reflected(&self) -> Self {
        let mut values = self.values.clone();
        values.reverse();
        Self { values, ..self.clone() }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| c * v).collect(),
            ..self.clone()
        }
    }
}

/// `φ(r) = max_{|o| ≥ r} |k(o)|` for `r = 0..=m`.
pub fn least_decreasing_majorant(k: &Kernel) -> Vec<f64> {
    let m = k.half_width as i64;
    let mut phi = vec![0.0; k.half_width + 1];
    let mut run = 0.0f64;
    for r in (0..=m).rev() {
        run = run.max(k.at(r).abs()).max(k.at(-r).abs());
        phi[r as usize] = run;
    }
    phi
}

/// `h (φ(0) + 2 Σ_{r ≥ 1} φ(r))`, the mass of the even extension of `φ`.
pub fn majorant_integral(k: &Kernel, phi: &[f64]) -> f64 {
    let tail: f64 = phi.iter().skip(1).sum();
    k.width * (phi.first().copied().unwrap_or(0.0) + 2.0 * tail)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MembershipStatus {
    Certified,
    Refuted,
    Undetermined,
}

impl MembershipStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            MembershipStatus::Certified => "certified",
            MembershipStatus::Refuted => "refuted",
            MembershipStatus::Undetermined => "undetermined",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Certificate {
    Majorant { profile: Vec<f64>, integral: f64 },
    Counterexample { f: Vec<f64>, cell: usize, violation: f64 },
    None { integral: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MembershipVerdict {
    pub status: MembershipStatus,
    pub certificate: Certificate,
}

/// Largest violation `(|k| * f)(i) - Mf(i)` and its cell.
fn worst_violation(k_abs: &Kernel, f: &[f64]) -> (usize, f64) {
    let conv = convolve_values(k_abs, f);
    let mf = maximal_values(f);
    let mut worst = (0, f64::NEG_INFINITY);
    for (i, (c, m)) in conv.iter().zip(&mf).enumerate() {
        if c - m > worst.1 {
            worst = (i, c - m);
        }
    }
    worst
}

/// Membership test: majorant certificate, mass refutation, then a seeded
/// search over sparse heavy-tailed inputs. The first refuting trial (by
/// index) is reported.
pub fn in_class_k(k: &Kernel, refute_trials: usize, seed: u64) -> MembershipVerdict {
    let phi = least_decreasing_majorant(k);
    let integral = majorant_integral(k, &phi);
    if integral <= 1.0 + CERTIFY_TOL {
        return MembershipVerdict {
            status: MembershipStatus::Certified,
            certificate: Certificate::Majorant { profile: phi, integral },
        };
    }
    let k_abs = k.abs();
    let window = 2 * k.half_width + 1;
    let ones = vec![1.0; window];
    let (cell, violation) = worst_violation(&k_abs, &ones);
    if violation > REFUTE_TOL {
        return MembershipVerdict {
            status: MembershipStatus::Refuted,
            certificate: Certificate::Counterexample { f: ones, cell, violation },
        };
    }
    let n = 2 * window + 8;
    let found = (0..refute_trials).into_par_iter().find_map_first(|t| {
        let mut r = rng::stream(seed, t as u64);
        let density = [0.05, 0.2, 0.5][t % 3];
        let f = rng::spiky_vec(&mut r, n, density);
        let (cell, violation) = worst_violation(&k_abs, &f);
        (violation > REFUTE_TOL).then_some((f, cell, violation))
    });
    match found {
        Some((f, cell, violation)) => MembershipVerdict {
            status: MembershipStatus::Refuted,
            certificate: Certificate::Counterexample { f, cell, violation },
        },
        None => MembershipVerdict {
            status: MembershipStatus::Undetermined,
            certificate: Certificate::None { integral },
        },
    }
}

/// `(k * v)(i) = h Σ_j k(i - j) v(j)`, zero-padded outside the window.
pub fn convolve_values(k: &Kernel, v: &[f64]) -> Vec<f64> {
    let n = v.len() as i64;
    let m = k.half_width as i64;
    (0..n)
        .map(|i| {
            let lo = (i - m).max(0);
            let hi = (i + m).min(n - 1);
            let mut acc = 0.0;
            for j in lo..=hi {
                acc += k.at(i - j) * v[j as usize];
            }
            k.width * acc
        })
        .collect()
}

pub fn convolve(k: &Kernel, f: &GridFunction) -> Result<GridFunction> {
    if (k.width - f.grid().width()).abs() > 1e-12 * k.width {
        return Err(Error::GridMismatch(format!(
            "kernel cell width {} vs grid width {}",
            k.width,
            f.grid().width()
        )));
    }
    GridFunction::new(*f.grid(), convolve_values(k, f.values()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelSpec {
    Gaussian { t: f64 },
    Box { half_width: usize },
    Exponential { lambda: f64 },
    OneSidedExponential { lambda: f64 },
}

impl KernelSpec {
    /// `gaussian`, `box`, `exponential`, `one_sided_exponential` with their
    /// single parameter (`t`, half-width, rate).
    pub fn parse(name: &str, param: f64) -> Result<Self> {
        let positive = |what: &str| -> Result<f64> {
            if param > 0.0 && param.is_finite() {
                Ok(param)
            } else {
                Err(Error::InvalidArgument(format!("{what} must be positive, got {param}")))
            }
        };
        match name {
            "gaussian" => Ok(KernelSpec::Gaussian { t: positive("t")? }),
            "box" => {
                if param >= 0.0 && param.fract() == 0.0 && param < 1e9 {
                    Ok(KernelSpec::Box { half_width: param as usize })
                } else {
                    Err(Error::InvalidArgument(format!(
                        "box half-width must be a nonnegative integer, got {param}"
                    )))
                }
            }
            "exponential" => Ok(KernelSpec::Exponential { lambda: positive("lambda")? }),
            "one_sided_exponential" => Ok(KernelSpec::OneSidedExponential {
                lambda: positive("lambda")?,
            }),
            other => Err(Error::InvalidArgument(format!("unknown kernel name '{other}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            KernelSpec::Gaussian { .. } => "gaussian",
            KernelSpec::Box { .. } => "box",
            KernelSpec::Exponential { .. } => "exponential",
            KernelSpec::OneSidedExponential { .. } => "one_sided_exponential",
        }
    }

    pub fn param(&self) -> f64 {
        match *self {
            KernelSpec::Gaussian { t } => t,
            KernelSpec::Box { half_width } => half_width as f64,
            KernelSpec::Exponential { lambda } | KernelSpec::OneSidedExponential { lambda } => lambda,
        }
    }
}

/// Catalog kernel on the cell width of `grid`, with support capped at the
/// grid length, normalized to mass `mass` (1 by default). For the one-sided
/// exponential the mass refers to its even majorant, so the kernel itself
/// carries about half of it.
pub fn catalog(spec: KernelSpec, mass: Option<f64>, grid: &Grid1D) -> Result<Kernel> {
    let mass = mass.unwrap_or(1.0);
    if !(mass >= 0.0 && mass <= 1.0) {
        return Err(Error::InvalidArgument(format!("mass {mass} must lie in [0, 1]")));
    }
    let h = grid.width();
    let cap = grid.len().saturating_sub(1);
    let decay_width = |scale: f64| ((scale / h).ceil() as usize).min(cap);
    let (m, raw): (usize, Box<dyn Fn(i64) -> f64>) = match spec {
        KernelSpec::Gaussian { t } => {
            let m = decay_width((4.0 * t * TAIL_EXP).sqrt());
            (m, Box::new(move |o| {
                let x = o as f64 * h;
                (-x * x / (4.0 * t)).exp()
            }))
        }
        KernelSpec::Box { half_width } => {
            if half_width > cap {
                return Err(Error::InvalidArgument(format!(
                    "box half-width {half_width} exceeds grid of {} cells",
                    grid.len()
                )));
            }
            (half_width, Box::new(|_| 1.0))
        }
        KernelSpec::Exponential { lambda } => {
            let m = decay_width(TAIL_EXP / lambda);
            (m, Box::new(move |o| (-lambda * (o as f64).abs() * h).exp()))
        }
        KernelSpec::OneSidedExponential { lambda } => {
            let m = decay_width(TAIL_EXP / lambda);
            (m, Box::new(move |o| if o < 0 { 0.0 } else { (-lambda * o as f64 * h).exp() }))
        }
    };
    let mi = m as i64;
    let vals: Vec<f64> = (-mi..=mi).map(&raw).collect();
    let norm = match spec {
        KernelSpec::OneSidedExponential { .. } => {
            h * (vals[m] + 2.0 * vals[m + 1..].iter().sum::<f64>())
        }
        _ => h * vals.iter().sum::<f64>(),
    };
    Kernel::new(vals.iter().map(|v| mass * v / norm).collect(), h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit() -> Grid1D {
        Grid1D::unit(64).unwrap()
    }

    /// Majorant by scanning every offset for each radius.
    fn majorant_oracle(k: &Kernel) -> Vec<f64> {
        (0..=k.half_width() as i64)
            .map(|r| k.offsets().filter(|o| o.abs() >= r).map(|o| k.at(o).abs()).fold(0.0, f64::max))
            .collect()
    }

    #[test]
    fn majorant_examples() {
        let k = Kernel::new(vec![0.0, 0.0, 0.0, 0.0, 0.3], 1.0).unwrap();
        assert_eq!(least_decreasing_majorant(&k), vec![0.3, 0.3, 0.3]);
        let z = Kernel::zero(3, 0.5).unwrap();
        assert_eq!(least_decreasing_majorant(&z), vec![0.0; 4]);
        let even = Kernel::new(vec![0.1, 0.2, 0.4, 0.2, 0.1], 1.0).unwrap();
        assert_eq!(least_decreasing_majorant(&even), vec![0.4, 0.2, 0.1]);
        assert!(matches!(in_class_k(&z, 10, 0).status, MembershipStatus::Certified));
    }

    #[test]
    fn convolution_examples() {
        let g = Grid1D::new(0.0, 0.25, 8).unwrap();
        let f = GridFunction::from_fn(g, |i| (i * i) as f64);
        let id = Kernel::identity(0.25).unwrap();
        assert_eq!(convolve(&id, &f).unwrap().values(), f.values());

        let b = Kernel::new(vec![1.0 / 3.0; 3], 1.0).unwrap();
        let mut e = vec![0.0; 7];
        e[3] = 1.0;
        let out = convolve_values(&b, &e);
        assert_eq!(&out[2..5], &[1.0 / 3.0; 3]);
        assert_eq!(out.iter().filter(|v| **v != 0.0).count(), 3);
    }

    #[test]
    fn catalog_kernels_are_certified() {
        for spec in [
            KernelSpec::Gaussian { t: 4.0 },
            KernelSpec::Box { half_width: 3 },
            KernelSpec::Exponential { lambda: 0.3 },
            KernelSpec::OneSidedExponential { lambda: 0.3 },
        ] {
            let k = catalog(spec, None, &unit()).unwrap();
            let v = in_class_k(&k, 50, 1);
            assert_eq!(v.status, MembershipStatus::Certified, "{spec:?}");
            assert_eq!(in_class_k(&k.reflected(), 50, 1).status, MembershipStatus::Certified);
        }
    }

    #[test]
    fn catalog_masses() {
        let g = unit();
        let gauss = catalog(KernelSpec::Gaussian { t: 2.0 }, None, &g).unwrap();
        assert!((gauss.l1_norm() - 1.0).abs() < 1e-14);
        let bx = catalog(KernelSpec::Box { half_width: 2 }, Some(0.5), &g).unwrap();
        assert!(bx.values().iter().all(|v| (v - 0.1).abs() < 1e-15));
        assert_eq!(least_decreasing_majorant(&bx), majorant_oracle(&bx));
        let os = catalog(KernelSpec::OneSidedExponential { lambda: 0.5 }, None, &g).unwrap();
        assert!(os.offsets().filter(|o| *o < 0).all(|o| os.at(o) == 0.0));
        let phi = least_decreasing_majorant(&os);
        assert!((majorant_integral(&os, &phi) - 1.0).abs() < 1e-14);
        assert!(os.l1_norm() > 0.5 && os.l1_norm() < 0.75);
        assert!(KernelSpec::parse("lorentzian", 1.0).is_err());
        assert!(catalog(KernelSpec::Box { half_width: 2 }, Some(1.5), &g).is_err());
    }

    #[test]
    fn tiny_gaussian_is_identity() {
        let g = Grid1D::new(0.0, 0.5, 16).unwrap();
        let k = catalog(KernelSpec::Gaussian { t: 1e-6 }, None, &g).unwrap();
        assert_eq!(k.half_width(), 1);
        assert_eq!(k.values(), &[0.0, 2.0, 0.0]);
    }

    #[test]
    fn doubled_gaussian_is_refuted_with_witness() {
        let k = catalog(KernelSpec::Gaussian { t: 3.0 }, None, &unit()).unwrap().scaled(2.0);
        let v = in_class_k(&k, 10, 0);
        assert_eq!(v.status, MembershipStatus::Refuted);
        match v.certificate {
            Certificate::Counterexample { f, cell, violation } => {
                assert!(f.iter().all(|x| *x >= 0.0));
                let conv = convolve_values(&k.abs(), &f);
                let mf = maximal_values(&f);
                assert!(conv[cell] > mf[cell] + REFUTE_TOL);
                assert!((conv[cell] - mf[cell] - violation).abs() < 1e-12);
            }
            other => panic!("unexpected certificate {other:?}"),
        }
    }

    #[test]
    fn spiky_search_refutes_a_lopsided_kernel() {
        // mass 1 but concentrated away from the origin
        let mut vals = vec![0.0; 9];
        vals[8] = 0.9;
        vals[4] = 0.1;
        let k = Kernel::new(vals, 1.0).unwrap();
        assert!(k.l1_norm() <= 1.0 + 1e-15);
        let v = in_class_k(&k, 200, 5);
        assert_eq!(v.status, MembershipStatus::Refuted);
    }

    proptest! {
        #[test]
        fn majorant_matches_scan(vals in proptest::collection::vec(-2.0f64..2.0, 0..6usize).prop_map(|mut v| { if v.len() % 2 == 0 { v.push(0.5) } v })) {
            let k = Kernel::new(vals, 0.7).unwrap();
            let phi = least_decreasing_majorant(&k);
            prop_assert_eq!(&phi, &majorant_oracle(&k));
            prop_assert!(phi.windows(2).all(|w| w[0] >= w[1]));
        }

        #[test]
        fn certified_kernels_dominated_by_maximal(seed in 0u64..500, t in 0.1f64..20.0) {
            let k = catalog(KernelSpec::Gaussian { t }, None, &unit()).unwrap();
            let f = rng::mixed_nonneg_vec(&mut rng::seeded(seed), 64);
            let conv = convolve_values(&k, &f);
            let mf = maximal_values(&f);
            for i in 0..64 {
                prop_assert!(conv[i] <= mf[i] + 1e-9);
            }
        }

        #[test]
        fn young_endpoint(seed in 0u64..500, lambda in 0.05f64..3.0) {
            let g = unit();
            let k = catalog(KernelSpec::Exponential { lambda }, None, &g).unwrap();
            let f = rng::signed_vec(&mut rng::seeded(seed), 64);
            let l1 = |v: &[f64]| g.width() * v.iter().map(|x| x.abs()).sum::<f64>();
            prop_assert!(l1(&convolve_values(&k, &f)) <= k.l1_norm() * l1(&f) * (1.0 + 1e-12));
        }
    }
}
