use rand::Rng;
use weightlab::dualspace::{norming_function, tuple_duality_constants};
use weightlab::lattice::{MeasuredAxis, MixedSpace};
use weightlab::rng;

/// Iterated norm by recursion over the outermost axis.
fn iterated(v: &[f64], masses: &[Vec<f64>], q: &[f64]) -> f64 {
    if masses.is_empty() {
        return v[0].abs();
    }
    let n = masses[0].len();
    let stride = v.len() / n;
    let inner: Vec<f64> = (0..n).map(|i| iterated(&v[i * stride..(i + 1) * stride], &masses[1..], &q[1..])).collect();
    inner.iter().zip(&masses[0]).map(|(x, m)| m * x.powf(q[0])).sum::<f64>().powf(1.0 / q[0])
}

#[test]
fn witness_identities_against_recursive_norms() {
    let mut r = rng::seeded(21);
    for trial in 0..60 {
        let shape = [4, 3, 2];
        let n_axes = 1 + trial % 3;
        let masses: Vec<Vec<f64>> = (0..n_axes)
            .map(|a| (0..shape[a]).map(|_| r.random_range(0.1..3.0)).collect())
            .collect();
        let q: Vec<f64> = (0..n_axes).map(|_| r.random_range(1.25..8.0)).collect();
        let qd: Vec<f64> = q.iter().map(|x| x / (x - 1.0)).collect();
        let space = MixedSpace::new(masses.iter().map(|m| MeasuredAxis::new(m.clone()).unwrap()).collect(), q.clone()).unwrap();
        let g = rng::signed_vec(&mut r, space.dim());
        let w = norming_function(&g, &space).unwrap();
        let g_norm = iterated(&g, &masses, &qd);
        let f_norm = iterated(&w.f, &masses, &q);
        let prod: Vec<f64> = space.product_masses();
        let pairing: f64 = prod.iter().zip(w.f.iter().zip(&g)).map(|(m, (a, b))| m * a * b).sum();
        assert!((g_norm - w.g_norm).abs() <= 1e-12 * g_norm);
        assert!((pairing - g_norm.powf(qd[0])).abs() <= 1e-9 * pairing);
        assert!((f_norm - g_norm.powf(qd[0] - 1.0)).abs() <= 1e-9 * f_norm);
        assert!((pairing - f_norm * g_norm).abs() <= 1e-8 * pairing);
    }
}

#[test]
fn tuple_constants_across_exponents() {
    let space = MixedSpace::new(vec![MeasuredAxis::uniform(3, 0.5).unwrap(), MeasuredAxis::counting(2).unwrap()], vec![1.5, 4.0]).unwrap();
    for (n, r) in [(1, 3.0), (2, 1.0), (4, 2.0), (6, 1.25), (3, f64::INFINITY)] {
        let rep = tuple_duality_constants(&space, n, r, 100, 5).unwrap();
        assert!(rep.pass(), "N {n} r {r}: {rep:?}");
        let inv = if r.is_infinite() { 0.0 } else { 1.0 / r };
        assert!((rep.identical_r_over_inf - (n as f64).powf(inv)).abs() < 1e-12);
    }
}
