mod common;

use common::{brute_max_spanning_tree, brute_mmd, brute_tau, std_normal};
use npvine::adapt::{adapt_vine, factor_samples, AdaptMode, AdaptationInput, FactorId};
use npvine::bicopula::KernelCopula;
use npvine::dataset::Dataset;
use npvine::mmd::{mmd_statistic, permutation_test, Bandwidth, MmdConfig, SampleMatrix};
use npvine::regress::{conditional_density, YGrid};
use npvine::rvine::{fit_vine, join_sets, maximum_spanning_tree_dense, VineConfig};
use npvine::stats::{kendall_tau, pseudo_observations, GaussianKernel1D};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn random_dataset(n: usize, d: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cols: Vec<Vec<f64>> = vec![Vec::with_capacity(n); d];
    for _ in 0..n {
        let common = std_normal(&mut rng);
        for (j, col) in cols.iter_mut().enumerate() {
            let w = 0.3 + 0.1 * j as f64;
            col.push(w * common + std_normal(&mut rng) + 0.2 * (j as f64) * common * common);
        }
    }
    Dataset::with_default_names(cols).unwrap()
}

fn matrix(rows: &[Vec<f64>]) -> SampleMatrix {
    let cols = rows[0].len();
    SampleMatrix::new(rows.iter().flatten().copied().collect(), cols).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tau_matches_pair_count(pairs in prop::collection::vec((-5i32..5, -5i32..5), 2..60)) {
        // Small integer ranges force plenty of ties.
        let x: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
        let y: Vec<f64> = pairs.iter().map(|p| p.1 as f64).collect();
        let t = kendall_tau(&x, &y).unwrap();
        prop_assert!((t - brute_tau(&x, &y)).abs() < 1e-12);
        let neg: Vec<f64> = y.iter().map(|v| -v).collect();
        prop_assert!((kendall_tau(&x, &neg).unwrap() + t).abs() < 1e-12);
        prop_assert!((kendall_tau(&y, &x).unwrap() - t).abs() < 1e-12);
    }

    #[test]
    fn pseudo_observations_preserve_order(xs in prop::collection::vec(-1e3f64..1e3, 2..80)) {
        let u = pseudo_observations(&xs).unwrap();
        for (i, a) in u.iter().enumerate() {
            prop_assert!(*a > 0.0 && *a < 1.0);
            for (j, b) in u.iter().enumerate() {
                if xs[i] < xs[j] {
                    prop_assert!(a < b);
                }
            }
        }
    }

    #[test]
    fn kernel_quantile_inverts_cdf(
        centers in prop::collection::vec(-10f64..10.0, 1..40),
        h in 0.05f64..3.0,
        p in 0.001f64..0.999,
    ) {
        let k = GaussianKernel1D::new(centers, h).unwrap();
        let x = k.quantile(p).unwrap();
        prop_assert!((k.cdf(x) - p).abs() < 1e-9);
    }

    #[test]
    fn kernel_copula_h_is_a_cdf_in_u(
        centers in prop::collection::vec((-2f64..2.0, -2f64..2.0), 1..20),
        sz in 0.1f64..1.5,
        sw in 0.1f64..1.5,
        rho in -0.9f64..0.9,
        v in 0.001f64..0.999,
    ) {
        let (z, w): (Vec<f64>, Vec<f64>) = centers.into_iter().unzip();
        let c = KernelCopula::new(z, w, sz, sw, rho * sz * sw).unwrap();
        let mut prev = 0.0;
        for i in 0..=50 {
            let u = i as f64 / 50.0;
            let h = c.h_given_second(u, v);
            prop_assert!((0.0..=1.0).contains(&h));
            prop_assert!(h >= prev - 1e-15);
            prev = h;
        }
        prop_assert_eq!(c.h_given_second(0.0, v), 0.0);
        prop_assert_eq!(c.h_given_second(1.0, v), 1.0);
    }

    #[test]
    fn spanning_tree_is_maximal(
        d in 2usize..7,
        raw in prop::collection::vec(0f64..1.0, 21),
    ) {
        let mut w = vec![vec![0.0; d]; d];
        let mut k = 0;
        for i in 0..d {
            for j in i + 1..d {
                w[i][j] = raw[k];
                w[j][i] = raw[k];
                k += 1;
            }
        }
        let tree = maximum_spanning_tree_dense(&w).unwrap();
        prop_assert_eq!(tree.len(), d - 1);
        let total: f64 = tree.iter().map(|&(a, b)| w[a][b]).sum();
        let best: f64 = brute_max_spanning_tree(&w).iter().map(|&(a, b)| w[a][b]).sum();
        prop_assert!((total - best).abs() < 1e-12);
    }

    #[test]
    fn mmd_matches_double_loop(
        x in prop::collection::vec(prop::collection::vec(-3f64..3.0, 2), 2..25),
        y in prop::collection::vec(prop::collection::vec(-3f64..3.0, 2), 2..25),
        h in 0.1f64..3.0,
    ) {
        let (mx, my) = (matrix(&x), matrix(&y));
        let s = mmd_statistic(&mx, &my, h).unwrap();
        prop_assert!((s - brute_mmd(&x, &y, h)).abs() < 1e-12);
        prop_assert_eq!(s, mmd_statistic(&my, &mx, h).unwrap());
    }

    #[test]
    fn permutation_p_value_has_lattice_form(seed in 0u64..1000, shift in 0f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..30).map(|_| std_normal(&mut rng)).collect();
        let y: Vec<f64> = (0..30).map(|_| std_normal(&mut rng) + shift).collect();
        let config = MmdConfig { permutations: 99, seed, bandwidth: Bandwidth::Fixed(1.0), ..Default::default() };
        let r = permutation_test(&SampleMatrix::from_column(&x), &SampleMatrix::from_column(&y), &config).unwrap();
        let k = r.p_value * 100.0 - 1.0;
        prop_assert!((k - k.round()).abs() < 1e-9 && (0.0..=99.0).contains(&k.round()));
        prop_assert_eq!(r.rejected, r.p_value < config.alpha);
        let again = permutation_test(&SampleMatrix::from_column(&x), &SampleMatrix::from_column(&y), &config).unwrap();
        prop_assert_eq!(r, again);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn vine_structure_obeys_set_algebra(d in 3usize..7, seed in 0u64..1000) {
        let data = random_dataset(60, d, seed);
        let vine = fit_vine(&data, &VineConfig { truncation: d - 1, ..Default::default() }).unwrap();
        prop_assert_eq!(vine.trees().len(), d - 1);
        for (l, tree) in vine.trees().iter().enumerate() {
            prop_assert_eq!(tree.edges.len(), d - 1 - l);
            for e in &tree.edges {
                prop_assert_eq!(e.conditioning.len(), l);
                prop_assert!(e.conditioned.0 < e.conditioned.1);
                if l == 0 {
                    continue;
                }
                let (i, j) = e.children.unwrap();
                let prev = &vine.trees()[l - 1].edges;
                let (c, dset) = join_sets(&prev[i], &prev[j]);
                prop_assert_eq!(c, vec![e.conditioned.0, e.conditioned.1]);
                prop_assert_eq!(&dset, &e.conditioning);
                // Proximity: the joined edges share a node of the previous tree.
                let shared = prev[i].constraint().iter().filter(|v| prev[j].constraint().contains(v)).count();
                prop_assert_eq!(shared, l);
            }
        }
        let u = vine.pseudo_observations(data.columns());
        for level in 0..d - 1 {
            for (a, b) in vine.level_arguments(level, &u) {
                prop_assert!(a.iter().chain(&b).all(|p| (0.0..=1.0).contains(p)));
            }
        }
    }

    #[test]
    fn conditional_density_integrates_to_one(seed in 0u64..1000, f0 in -2f64..2.0, f1 in -2f64..2.0) {
        let data = random_dataset(80, 3, seed);
        let vine = fit_vine(&data, &VineConfig::default()).unwrap().with_target_name("x3").unwrap();
        let grid = YGrid::for_marginal(vine.marginal(2), 129).unwrap();
        let dens = conditional_density(&vine, &[f0, f1], &grid).unwrap();
        prop_assert!(dens.iter().all(|p| *p >= 0.0 && p.is_finite()));
        prop_assert!((grid.integrate(&dens) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn factor_samples_ignore_outside_columns(seed in 0u64..1000, noise in 0.5f64..5.0) {
        let data = random_dataset(50, 4, seed);
        let vine = fit_vine(&data, &VineConfig { truncation: 2, ..Default::default() }).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
        for (l, tree) in vine.trees().iter().enumerate() {
            for e in &tree.edges {
                let id = FactorId::Edge { level: l + 1, conditioned: e.conditioned, conditioning: e.conditioning.clone() };
                let before = factor_samples(&vine, &data, &id).unwrap();
                // Scramble every column outside the edge's constraint set.
                let constraint = e.constraint();
                let cols: Vec<Vec<f64>> = (0..4)
                    .map(|c| {
                        let col = data.column(c);
                        if constraint.contains(&c) {
                            col.to_vec()
                        } else {
                            col.iter().map(|x| x + noise * std_normal(&mut rng)).collect()
                        }
                    })
                    .collect();
                let scrambled = Dataset::new(data.names().to_vec(), cols).unwrap();
                let after = factor_samples(&vine, &scrambled, &id).unwrap();
                prop_assert_eq!(before.as_slice(), after.as_slice());
            }
        }
    }
}

#[test]
fn adaptation_without_detected_change_is_a_pooled_refit() {
    for seed in 0..4 {
        let source = random_dataset(120, 4, seed);
        let target = random_dataset(60, 4, seed + 100);
        let vine = fit_vine(&source, &VineConfig { truncation: 2, ..Default::default() })
            .unwrap()
            .with_target_name("x4")
            .unwrap();
        // With 50 permutations the p-value is at least 1/51, so alpha = 0.01
        // can never reject.
        let input = AdaptationInput {
            source: source.clone(),
            target_labeled: target.clone(),
            target_unlabeled: Dataset::new(vec![], vec![]).unwrap(),
            target_index: 3,
            mode: AdaptMode::Supervised,
            mmd: MmdConfig { permutations: 50, alpha: 0.01, seed, ..Default::default() },
        };
        let (adapted, report) = adapt_vine(&vine, &input).unwrap();
        assert_eq!(report.changed().count(), 0);
        let pooled = vine.refit_with_structure(&source.vstack(&target).unwrap()).unwrap();
        assert_eq!(adapted, pooled, "seed {seed}");
    }
}
