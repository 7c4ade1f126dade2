//! Cross-checks of the fast posterior/acquisition paths against slow,
//! independent reference implementations: a dense Gauss-Jordan solve for the
//! GP equations and a Monte-Carlo simulation for the one-step-ahead
//! expected super-level count.

use lsekit_core::acquisition::mile_score;
use lsekit_core::linalg::Matrix;
use lsekit_core::{Dataset, KernelSpec, PointSet, Posterior, RngState};

/// Gauss-Jordan inverse with partial pivoting; plenty for testing sizes.
fn invert(a: &Matrix) -> Vec<Vec<f64>> {
    let n = a.rows();
    assert_eq!(n, a.cols());
    let mut m = vec![vec![0.0; 2 * n]; n];
    for i in 0..n {
        for j in 0..n {
            m[i][j] = a[(i, j)];
        }
        m[i][n + i] = 1.0;
    }
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&p, &q| m[p][col].abs().partial_cmp(&m[q][col].abs()).unwrap())
            .unwrap();
        m.swap(col, pivot);
        let p = m[col][col];
        assert!(p.abs() > 1e-14, "singular matrix in oracle");
        for j in 0..2 * n {
            m[col][j] /= p;
        }
        for i in 0..n {
            if i != col {
                let f = m[i][col];
                for j in 0..2 * n {
                    m[i][j] -= f * m[col][j];
                }
            }
        }
    }
    m.iter().map(|row| row[n..].to_vec()).collect()
}

fn random_points(dim: usize, n: usize, rng: &mut RngState) -> PointSet {
    let coords: Vec<f64> = (0..n * dim).map(|_| rng.uniform_in(-3.0, 3.0)).collect();
    PointSet::new(dim, coords).unwrap()
}

#[test]
fn posterior_matches_dense_inverse() {
    for (seed, kernel, noise) in [
        (1u64, KernelSpec::gaussian(1.5, 2.0).unwrap(), 0.1),
        (2, KernelSpec::gaussian(0.7, 0.8).unwrap(), 1e-4),
        (3, KernelSpec::matern32(1.0, 1.5).unwrap(), 0.25),
        (4, KernelSpec::matern32(2.5, 4.0).unwrap(), 1e-3),
    ] {
        let mut rng = RngState::new(seed);
        let n = 12;
        let inputs = random_points(2, n, &mut rng);
        let ys: Vec<f64> = (0..n).map(|_| rng.uniform_in(-2.0, 2.0)).collect();

        let mut gram = kernel.gram(&inputs).unwrap();
        for i in 0..n {
            gram[(i, i)] += noise;
        }
        let inv = invert(&gram);

        let data = Dataset::new(inputs.clone(), ys.clone(), noise).unwrap();
        let post = Posterior::fit(kernel, data).unwrap();
        assert_eq!(post.jitter(), 0.0, "no jitter expected with noise {noise}");

        let queries = random_points(2, 20, &mut rng);
        for q in queries.iter() {
            let k_row = kernel.row(&inputs, q).unwrap();
            let mut mean = 0.0;
            let mut quad = 0.0;
            for i in 0..n {
                let mut kinv_i = 0.0;
                for j in 0..n {
                    kinv_i += inv[i][j] * k_row[j];
                }
                mean += kinv_i * ys[i];
                quad += kinv_i * k_row[i];
            }
            let var = kernel.eval(q, q).unwrap() - quad;

            let (m, v) = post.mean_var(q).unwrap();
            assert!((m - mean).abs() < 1e-8, "mean {m} vs oracle {mean}");
            assert!((v - var.max(0.0)).abs() < 1e-8, "var {v} vs oracle {var}");
        }
    }
}

#[test]
fn mile_score_matches_monte_carlo() {
    let kernel = KernelSpec::gaussian(1.0, 2.0).unwrap();
    let noise = 0.25;
    let xs = PointSet::new(1, vec![0.0, 1.0, 2.0, 3.0, 4.0]).unwrap();
    let inputs = PointSet::new(1, vec![1.0, 3.0]).unwrap();
    let data = Dataset::new(inputs, vec![0.6, 0.2], noise).unwrap();
    let post = Posterior::fit(kernel, data).unwrap();
    let theta = 0.5;

    let closed = mile_score(&post, &xs, theta).unwrap();

    let mut rng = RngState::new(99);
    let n_sims = 20_000;
    for (i, &score) in closed.iter().enumerate() {
        let x = xs.point(i).to_vec();
        let (mu, var) = post.mean_var(&x).unwrap();
        let sd = (var + noise).sqrt();
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n_sims {
            let y = mu + sd * rng.standard_normal();
            let next = post.with_observation(&x, y).unwrap();
            let (means, _) = next.mean_var_batch(&xs).unwrap();
            let count = means.iter().filter(|&&m| m >= theta).count() as f64;
            sum += count;
            sum_sq += count * count;
        }
        let mc_mean = sum / n_sims as f64;
        let mc_var = (sum_sq / n_sims as f64 - mc_mean * mc_mean).max(0.0);
        let se = (mc_var / n_sims as f64).sqrt();
        assert!(
            (score - mc_mean).abs() <= 5.0 * se + 1e-9,
            "candidate {i}: closed form {score}, monte carlo {mc_mean} (se {se})"
        );
    }
}
