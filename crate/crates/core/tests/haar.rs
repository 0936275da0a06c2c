use mera_core::linalg::{gaussian_matrix, haar_isometry, haar_unitary_from_gaussian};
use mera_core::tensor::ComplexTensor;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{Beta, ContinuousCDF};

const DRAWS: usize = 10_000;

/// Asymptotic Kolmogorov tail `P(K > lambda)`.
fn kolmogorov_tail(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let sum: f64 = (1..=100)
        .map(|k| {
            let k = k as f64;
            let sign = if k as u64 % 2 == 1 { 1.0 } else { -1.0 };
            sign * (-2.0 * k * k * lambda * lambda).exp()
        })
        .sum();
    (2.0 * sum).clamp(0.0, 1.0)
}

fn ks_two_sample(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < n && j < m {
        let x = a[i].min(b[j]);
        while i < n && a[i] <= x {
            i += 1;
        }
        while j < m && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n * m) as f64 / (n + m) as f64;
    kolmogorov_tail((ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d)
}

fn ks_one_sample(mut a: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    a.sort_by(f64::total_cmp);
    let n = a.len() as f64;
    let d = a
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max);
    kolmogorov_tail((n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d)
}

fn stats(u: &ComplexTensor) -> (f64, f64) {
    let z = u.at(0, 0);
    (z.norm_sqr(), z.arg())
}

#[test]
fn left_rotation_of_the_gaussian_seed_does_not_change_the_distribution() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let v = haar_unitary_from_gaussian(&gaussian_matrix(4, 4, &mut rng)).unwrap();
    let mut plain = (Vec::new(), Vec::new());
    let mut rotated = (Vec::new(), Vec::new());
    for _ in 0..DRAWS {
        let (m, p) = stats(&haar_unitary_from_gaussian(&gaussian_matrix(4, 4, &mut rng)).unwrap());
        plain.0.push(m);
        plain.1.push(p);
        let g = v.matmul(&gaussian_matrix(4, 4, &mut rng)).unwrap();
        let (m, p) = stats(&haar_unitary_from_gaussian(&g).unwrap());
        rotated.0.push(m);
        rotated.1.push(p);
    }
    let p_mod = ks_two_sample(plain.0, rotated.0);
    let p_arg = ks_two_sample(plain.1, rotated.1);
    assert!(p_mod > 0.01, "modulus p = {p_mod}");
    assert!(p_arg > 0.01, "phase p = {p_arg}");
}

#[test]
fn entry_modulus_follows_the_haar_beta_law() {
    // |U_00|^2 of an N x N Haar unitary is Beta(1, N - 1)
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let samples: Vec<f64> = (0..DRAWS)
        .map(|_| stats(&haar_unitary_from_gaussian(&gaussian_matrix(4, 4, &mut rng)).unwrap()).0)
        .collect();
    let beta = Beta::new(1.0, 3.0).unwrap();
    let p = ks_one_sample(samples, |x| beta.cdf(x));
    assert!(p > 0.01, "p = {p}");
}

#[test]
fn isometry_rows_are_uniform_on_the_sphere() {
    // a Haar row of length 6 has |w_0|^2 ~ Beta(1, 5)
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let samples: Vec<f64> = (0..DRAWS)
        .map(|_| haar_isometry(1, 6, &mut rng).unwrap().at(0, 0).norm_sqr())
        .collect();
    let beta = Beta::new(1.0, 5.0).unwrap();
    let p = ks_one_sample(samples, |x| beta.cdf(x));
    assert!(p > 0.01, "p = {p}");
}
