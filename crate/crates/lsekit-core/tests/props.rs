//! Property tests for the core invariants: posterior shrinkage, kernel
//! positive-semidefiniteness, confidence-band geometry, tie-breaking,
//! discretization covering, and loss bounds.

use lsekit_core::acquisition::{
    confidence_band, randomized_straddle_score, sample_beta_chi2, AcquisitionSpec,
    AcquisitionState,
};
use lsekit_core::discretize::{tau_t, DiscretizationState, GridSpec};
use lsekit_core::level_set::{expected_loss_closed_form, fscore, Classification};
use lsekit_core::points::l1_dist;
use lsekit_core::{Dataset, KernelSpec, PointSet, Posterior, RngState};
use proptest::prelude::*;

fn kernel_strategy() -> impl Strategy<Value = KernelSpec> {
    (0.1f64..5.0, 0.2f64..10.0, any::<bool>()).prop_map(|(amp, ls, gauss)| {
        if gauss {
            KernelSpec::gaussian(amp, ls).unwrap()
        } else {
            KernelSpec::matern32(amp, ls).unwrap()
        }
    })
}

/// Flat coordinate list for `n` points of dimension `dim` plus outputs.
fn data_strategy(dim: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>, f64)> {
    (1usize..7).prop_flat_map(move |n| {
        (
            prop::collection::vec(-5.0f64..5.0, n * dim),
            prop::collection::vec(-3.0f64..3.0, n),
            1e-4f64..1.0,
        )
    })
}

fn fit(kernel: KernelSpec, dim: usize, xs: Vec<f64>, ys: Vec<f64>, noise: f64) -> Posterior {
    let inputs = PointSet::new(dim, xs).unwrap();
    let data = Dataset::new(inputs, ys, noise).unwrap();
    Posterior::fit(kernel, data).unwrap()
}

proptest! {
    #[test]
    fn posterior_variance_within_prior(
        kernel in kernel_strategy(),
        (xs, ys, noise) in data_strategy(2),
        q in prop::collection::vec(-5.0f64..5.0, 2),
    ) {
        let post = fit(kernel, 2, xs, ys, noise);
        let (_, var) = post.mean_var(&q).unwrap();
        prop_assert!(var >= 0.0);
        prop_assert!(var <= kernel.amplitude() + 1e-9);
    }

    #[test]
    fn posterior_variance_monotone_in_data(
        kernel in kernel_strategy(),
        (xs, ys, noise) in data_strategy(2),
        extra in prop::collection::vec(-5.0f64..5.0, 2),
        extra_y in -3.0f64..3.0,
        q in prop::collection::vec(-5.0f64..5.0, 2),
    ) {
        let post = fit(kernel, 2, xs, ys, noise);
        let (_, var_before) = post.mean_var(&q).unwrap();
        let grown = post.with_observation(&extra, extra_y).unwrap();
        let (_, var_after) = grown.mean_var(&q).unwrap();
        prop_assert!(var_after <= var_before + 1e-9,
            "variance grew from {var_before} to {var_after}");
    }

    #[test]
    fn incremental_update_matches_full_refit(
        kernel in kernel_strategy(),
        (xs, ys, noise) in data_strategy(1),
        extra in -5.0f64..5.0,
        extra_y in -3.0f64..3.0,
        q in -5.0f64..5.0,
    ) {
        let post = fit(kernel, 1, xs.clone(), ys.clone(), noise);
        let inc = post.with_observation(&[extra], extra_y).unwrap();
        let mut all_xs = xs;
        all_xs.push(extra);
        let mut all_ys = ys;
        all_ys.push(extra_y);
        let refit = fit(kernel, 1, all_xs, all_ys, noise);
        let (m1, v1) = inc.mean_var(&[q]).unwrap();
        let (m2, v2) = refit.mean_var(&[q]).unwrap();
        prop_assert!((m1 - m2).abs() < 1e-8, "means {m1} vs {m2}");
        prop_assert!((v1 - v2).abs() < 1e-8, "vars {v1} vs {v2}");
    }

    #[test]
    fn gram_matrices_are_positive_semidefinite(
        kernel in kernel_strategy(),
        coords in prop::collection::vec(-5.0f64..5.0, 2..14),
    ) {
        let n = coords.len() / 2;
        let pts = PointSet::new(2, coords[..n * 2].to_vec()).unwrap();
        let gram = kernel.gram(&pts).unwrap();
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                a[i][j] = gram[(i, j)];
            }
        }
        let eigs = jacobi_eigenvalues(a);
        let min = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assert!(min >= -1e-8 * kernel.amplitude(), "min eigenvalue {min}");
    }

    #[test]
    fn chi2_draws_and_bands_behave(
        seed in any::<u64>(),
        means in prop::collection::vec(-3.0f64..3.0, 1..10),
    ) {
        let mut rng = RngState::new(seed);
        let beta = sample_beta_chi2(&mut rng);
        prop_assert!(beta.is_finite() && beta >= 0.0);
        let vars: Vec<f64> = means.iter().map(|m| (m * m * 0.1) + 0.01).collect();
        let pts = PointSet::new(1, (0..means.len()).map(|i| i as f64).collect()).unwrap();
        let post = Posterior::prior(KernelSpec::gaussian(1.0, 1.0).unwrap(), 1, 1e-6).unwrap();
        let band = confidence_band(&post, &pts, beta.sqrt()).unwrap();
        for i in 0..pts.len() {
            prop_assert!(band.lcb[i] <= band.ucb[i]);
        }
        // scores clamp at zero
        let band2 = lsekit_core::acquisition::ConfidenceBand::from_moments(
            &means, &vars, beta.sqrt());
        for s in randomized_straddle_score(&band2, 0.3) {
            prop_assert!(s >= 0.0);
        }
    }

    #[test]
    fn uncertainty_sampling_breaks_ties_at_lowest_index(
        n in 2usize..20,
        first_allowed in 0usize..5,
        seed in any::<u64>(),
    ) {
        // a prior has identical variance everywhere, so every index ties
        let first_allowed = first_allowed.min(n - 1);
        let post = Posterior::prior(KernelSpec::gaussian(1.0, 1.0).unwrap(), 1, 1e-6).unwrap();
        let xs = PointSet::new(1, (0..n).map(|i| i as f64).collect()).unwrap();
        let mut state = AcquisitionState::new(AcquisitionSpec::Us, false).unwrap();
        let mut rng = RngState::new(seed);
        let sel = state.select_next(&post, &xs, 0.0, &mut rng, None).unwrap();
        prop_assert_eq!(sel.index, 0);
        let mask: Vec<bool> = (0..n).map(|i| i >= first_allowed).collect();
        let sel = state.select_next(&post, &xs, 0.0, &mut rng, Some(&mask)).unwrap();
        prop_assert_eq!(sel.index, first_allowed);
    }

    #[test]
    fn tau_schedule_is_monotone(
        a_over in 0.01f64..4.0,
        b in 0.1f64..3.0,
        r in 0.5f64..3.0,
        d in 1usize..4,
        t in 1u64..30,
    ) {
        let a = 1.0 / d as f64 + a_over;
        let spec = GridSpec::new(a, b, r, d).unwrap();
        prop_assert!(tau_t(&spec, t).unwrap() <= tau_t(&spec, t + 1).unwrap());
    }

    #[test]
    fn nearest_grid_point_covers_the_box(
        a_over in 0.01f64..4.0,
        b in 0.1f64..3.0,
        r in 0.5f64..3.0,
        d in 1usize..4,
        t in 1u64..5,
        unit in prop::collection::vec(0.0f64..=1.0, 3),
    ) {
        let a = 1.0 / d as f64 + a_over;
        let spec = GridSpec::new(a, b, r, d).unwrap();
        let state = DiscretizationState::new(spec, t).unwrap();
        let x: Vec<f64> = unit[..d].iter().map(|u| u * r).collect();
        let nearest = state.nearest(&x).unwrap();
        let tau = state.tau as f64;
        prop_assert!(l1_dist(&x, &nearest) <= d as f64 * r / tau + 1e-12);
        // idempotent: a grid point maps to itself
        let again = state.nearest(&nearest).unwrap();
        prop_assert_eq!(nearest, again);
    }

    #[test]
    fn fscore_components_stay_in_unit_interval(
        est in prop::collection::vec(any::<bool>(), 1..40),
        flips in prop::collection::vec(any::<bool>(), 1..40),
    ) {
        let n = est.len().min(flips.len());
        let truth: Vec<bool> = est[..n].iter().zip(&flips[..n]).map(|(&e, &f)| e ^ f).collect();
        let class = Classification { theta: 0.0, upper: est[..n].to_vec() };
        let f = fscore(&class, &truth).unwrap();
        for v in [f.precision, f.recall, f.fscore] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn expected_loss_gap_equals_signed_distance(
        mu in -5.0f64..5.0,
        sigma in 0.0f64..3.0,
        theta in -5.0f64..5.0,
    ) {
        let up = expected_loss_closed_form(mu, sigma, theta, true);
        let lo = expected_loss_closed_form(mu, sigma, theta, false);
        prop_assert!(up >= 0.0 && lo >= 0.0);
        // classifying low instead of high costs exactly mu - theta more
        prop_assert!(((lo - up) - (mu - theta)).abs() < 1e-9,
            "gap {} vs {}", lo - up, mu - theta);
    }
}

/// Cyclic Jacobi eigenvalue iteration for small symmetric matrices.
fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _ in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[i][j] * a[i][j];
            }
        }
        if off < 1e-24 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q].abs() < 1e-18 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).collect()
}
