use rand::Rng;
use weightlab::lattice::{conjugate, MeasuredAxis, MixedSpace};
use weightlab::rng;
use weightlab::sbound::{
    adjoint_family, estimate_ls_bound, exact_ls_bound_structured, interpolation_certificate, ls_ratio,
    OperatorFamily, SearchConfig, SANDWICH_TOL,
};

/// `sup_u ‖max_j U_j u‖_r^{1/s}` over a grid of the simplex `x_i = μ_i u_i^r`,
/// where `U_j u(k) = Σ_{σ_j(i)=k} μ_i |m_j(i)|^s u_i / μ_k`.
fn dual_grid_oracle(perms: &[Vec<usize>], mults: &[Vec<f64>], mu: &[f64], q: f64, s: f64, steps: usize) -> f64 {
    let n = mu.len();
    let r = q / (q - s);
    let mut best = 0.0f64;
    let mut counts = vec![0usize; n];
    loop {
        let total: usize = counts.iter().sum();
        if total == steps {
            let u: Vec<f64> = (0..n).map(|i| (counts[i] as f64 / steps as f64 / mu[i]).powf(1.0 / r)).collect();
            let mut lifted = vec![0.0f64; n];
            for (p, m) in perms.iter().zip(mults) {
                let mut uj = vec![0.0; n];
                for i in 0..n {
                    uj[p[i]] += mu[i] * m[i].abs().powf(s) * u[i] / mu[p[i]];
                }
                for k in 0..n {
                    lifted[k] = lifted[k].max(uj[k]);
                }
            }
            let val: f64 = (0..n).map(|k| mu[k] * lifted[k].powf(r)).sum::<f64>().powf(1.0 / r);
            best = best.max(val);
        }
        // odometer over compositions with total <= steps
        let mut idx = 0;
        loop {
            if idx == n {
                return best.powf(1.0 / s);
            }
            counts[idx] += 1;
            if counts.iter().sum::<usize>() <= steps {
                break;
            }
            counts[idx] = 0;
            idx += 1;
        }
    }
}

fn random_family(seed: u64, dim: usize, members: usize) -> (Vec<Vec<usize>>, Vec<Vec<f64>>, Vec<f64>) {
    let mut r = rng::seeded(seed);
    let mu: Vec<f64> = (0..dim).map(|_| r.random_range(0.3..2.0)).collect();
    let mut perms = Vec::new();
    let mut mults = Vec::new();
    for _ in 0..members {
        let mut p: Vec<usize> = (0..dim).collect();
        for i in (1..dim).rev() {
            let j = r.random_range(0..=i);
            p.swap(i, j);
        }
        perms.push(p);
        mults.push((0..dim).map(|_| r.random_range(-1.5..1.5)).collect());
    }
    (perms, mults, mu)
}

fn space(mu: &[f64], q: f64) -> MixedSpace {
    MixedSpace::new(vec![MeasuredAxis::new(mu.to_vec()).unwrap()], vec![q]).unwrap()
}

#[test]
fn closed_form_matches_dual_grid_search() {
    for seed in 0..12 {
        let dim = 2 + (seed as usize) % 2;
        let (perms, mults, mu) = random_family(seed, dim, 3);
        let fam = OperatorFamily::weighted_composition(perms.clone(), mults.clone(), space(&mu, 2.5)).unwrap();
        for s in [1.0, 1.5, 2.0] {
            let exact = exact_ls_bound_structured(&fam, s).unwrap();
            let grid = dual_grid_oracle(&perms, &mults, &mu, 2.5, s, 40);
            assert!((exact - grid).abs() <= 0.01 * exact, "seed {seed} s {s}: {exact} vs {grid}");
        }
    }
}

#[test]
fn search_lower_bound_sandwiched_by_closed_form() {
    let cfg = SearchConfig::default();
    for seed in 0..10 {
        let dim = 2 + (seed as usize) % 3;
        let (perms, mults, mu) = random_family(100 + seed, dim, 2 + (seed as usize) % 2);
        let fam = OperatorFamily::weighted_composition(perms, mults, space(&mu, 2.0)).unwrap();
        for s in [1.25, 2.0, 3.0] {
            let exact = exact_ls_bound_structured(&fam, s).unwrap();
            let est = estimate_ls_bound(&fam, s, &cfg, seed).unwrap();
            assert!(est.lower <= exact + SANDWICH_TOL, "seed {seed} s {s}");
            assert!(est.lower >= 0.9 * exact, "seed {seed} s {s}: {} vs {exact}", est.lower);
            assert_eq!(est.lower, ls_ratio(&fam, &est.assignment, &est.tuple, s).unwrap());
        }
    }
}

#[test]
fn duality_transports_bounds() {
    let cfg = SearchConfig::default();
    for seed in 0..5 {
        let (perms, mults, mu) = random_family(200 + seed, 3, 2);
        let fam = OperatorFamily::weighted_composition(perms, mults, space(&mu, 3.0)).unwrap();
        let adj = adjoint_family(&fam).unwrap();
        for s in [1.5, 2.0, 4.0] {
            let here = exact_ls_bound_structured(&fam, s).unwrap();
            let there = exact_ls_bound_structured(&adj, conjugate(s)).unwrap();
            assert!((here - there).abs() <= 1e-10 * here);
            let lo_here = estimate_ls_bound(&fam, s, &cfg, 1).unwrap().lower;
            let lo_there = estimate_ls_bound(&adj, conjugate(s), &cfg, 1).unwrap().lower;
            assert!(lo_here <= there + SANDWICH_TOL && lo_there <= here + SANDWICH_TOL);
            assert!((lo_here - lo_there).abs() <= 0.05 * lo_here.max(lo_there));
        }
    }
}

#[test]
fn interpolation_certificate_dominates_search() {
    let cfg = SearchConfig::default();
    for seed in 0..5 {
        let (perms, mults, mu) = random_family(300 + seed, 3, 3);
        let fam = OperatorFamily::weighted_composition(perms, mults, space(&mu, 2.0)).unwrap();
        let (s0, s1) = (1.25, 8.0);
        let r0 = exact_ls_bound_structured(&fam, s0).unwrap();
        let r1 = exact_ls_bound_structured(&fam, s1).unwrap();
        for s in [1.5, 2.0, 4.0] {
            let cert = interpolation_certificate(r0, r1, s0, s1, s).unwrap();
            assert!(cert >= exact_ls_bound_structured(&fam, s).unwrap() - 1e-12);
            assert!(cert >= estimate_ls_bound(&fam, s, &cfg, seed).unwrap().lower - SANDWICH_TOL);
            assert!(cert <= r0.max(r1) + 1e-12);
        }
    }
}

#[test]
fn exact_values_dip_at_the_space_exponent() {
    for seed in 0..10 {
        let (perms, mults, mu) = random_family(400 + seed, 4, 3);
        let fam = OperatorFamily::weighted_composition(perms, mults, space(&mu, 2.0)).unwrap();
        let vals: Vec<f64> = [1.25, 1.5, 2.0, 3.0, 4.0, 8.0]
            .iter()
            .map(|s| exact_ls_bound_structured(&fam, *s).unwrap())
            .collect();
        assert!(vals[0] >= vals[1] - 1e-12 && vals[1] >= vals[2] - 1e-12);
        assert!(vals[2] <= vals[3] + 1e-12 && vals[3] <= vals[4] + 1e-12 && vals[4] <= vals[5] + 1e-12);
    }
}
