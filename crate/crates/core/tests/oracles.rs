mod common;

use common::{gauss_legendre, integrate, normal_cdf_quadrature, std_normal};
use npvine::bicopula::{CopulaFamily, GaussianCopula, KernelCopula, PairCopula};
use npvine::dataset::Dataset;
use npvine::regress::{conditional_density, default_grid, ConditionalEvaluator, DEFAULT_GRID_POINTS};
use npvine::rvine::{fit_vine, VineConfig};
use npvine::stats::{std_normal_cdf, std_normal_quantile, GaussianKernel1D};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn correlated(n: usize, d: usize, rho: f64, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cols = vec![Vec::with_capacity(n); d];
    for _ in 0..n {
        let mut prev = std_normal(&mut rng);
        cols[0].push(prev);
        for col in cols.iter_mut().skip(1) {
            prev = rho * prev + (1.0 - rho * rho).sqrt() * std_normal(&mut rng);
            col.push(prev);
        }
    }
    Dataset::with_default_names(cols).unwrap()
}

#[test]
fn normal_cdf_matches_quadrature() {
    for &x in &[-8.0, -3.2, -1.0, -0.1, 0.0, 0.7, 2.5, 6.0] {
        let q = normal_cdf_quadrature(x);
        assert!((std_normal_cdf(x) - q).abs() < 1e-13, "x = {x}");
    }
    for &p in &[1e-10, 0.001, 0.2, 0.5, 0.77, 0.999] {
        let x = std_normal_quantile(p).unwrap();
        assert!((normal_cdf_quadrature(x) - p).abs() < 1e-12 * p.max(1e-3), "p = {p}");
    }
}

#[test]
fn kernel_cdf_is_integral_of_pdf() {
    let centers: Vec<f64> = (0..300).map(|i| ((i * 37) % 101) as f64 / 17.0 - 3.0).collect();
    // 300 centers: large batches take the series path, single points the direct one.
    let k = GaussianKernel1D::new(centers, 0.3).unwrap();
    let xs: Vec<f64> = (0..40).map(|i| -5.0 + 0.3 * i as f64).collect();
    let batch = k.cdf_many(&xs);
    let lo = k.centers()[0] - 40.0 * k.bandwidth();
    for (x, b) in xs.iter().zip(&batch) {
        let q = integrate(&|t| k.pdf(t), lo, *x, 64, 1e-13);
        assert!((k.cdf(*x) - q).abs() < 1e-10, "x = {x}");
        assert!((b - q).abs() < 1e-9, "batched x = {x}");
    }
}

#[test]
fn copula_h_function_is_partial_integral() {
    let data = correlated(120, 2, 0.6, 5);
    let u = npvine::stats::pseudo_observations(data.column(0)).unwrap();
    let v = npvine::stats::pseudo_observations(data.column(1)).unwrap();
    let kc = KernelCopula::fit(&u, &v).unwrap();
    let tilted = KernelCopula::new(vec![0.1, -0.4, 1.0], vec![0.3, -0.2, 0.8], 0.5, 0.4, 0.12).unwrap();
    let copulas = [
        PairCopula::Kernel(kc),
        PairCopula::Kernel(tilted),
        PairCopula::Gaussian(GaussianCopula::new(-0.45).unwrap()),
    ];
    for c in &copulas {
        for &v in &[0.03, 0.3, 0.5, 0.91] {
            for &u in &[0.05, 0.4, 0.8, 0.99] {
                // h(u | v) = ∫_0^u c(s, v) ds / ∫_0^1 c(s, v) ds, integrated in
                // normal scores. The denominator is 1 for exact copulas only.
                let zu = std_normal_quantile(u).unwrap();
                let f = |z: f64| {
                    let s = std_normal_cdf(z);
                    c.density(s, v) * (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
                };
                let want = integrate(&f, -12.0, zu, 64, 1e-13) / integrate(&f, -12.0, 12.0, 128, 1e-13);
                let got = c.h_given_second(u, v);
                assert!((got - want).abs() < 1e-8, "{} u={u} v={v}: {got} vs {want}", c.kind());
                // h may be flat near the corners, so compare in probability.
                let back = c.h_inverse_given_second(got, v);
                assert!((c.h_given_second(back, v) - got).abs() < 1e-12, "{} inverse u={u} v={v}", c.kind());
            }
        }
    }
}

#[test]
fn vine_density_integrates_to_one() {
    let data = correlated(40, 2, 0.7, 9);
    for family in [CopulaFamily::Kernel, CopulaFamily::Gaussian] {
        let vine = fit_vine(&data, &VineConfig { truncation: 1, family }).unwrap();
        let bounds = |c: usize| {
            let m = vine.marginal(c);
            let (lo, hi) = m.centers().iter().fold((f64::MAX, f64::MIN), |(a, b), &x| (a.min(x), b.max(x)));
            (lo - 12.0 * m.bandwidth(), hi + 12.0 * m.bandwidth())
        };
        let (a0, b0) = bounds(0);
        let (a1, b1) = bounds(1);
        let (x, wx) = gauss_legendre(300, a0, b0);
        let (y, wy) = gauss_legendre(300, a1, b1);
        let mut total = 0.0;
        for (xi, wi) in x.iter().zip(&wx) {
            for (yj, wj) in y.iter().zip(&wy) {
                total += wi * wj * vine.log_density(&[*xi, *yj]).exp();
            }
        }
        assert!((total - 1.0).abs() < 2e-3, "{family:?}: {total}");
    }
}

#[test]
fn conditional_density_is_proportional_to_joint() {
    let data = correlated(200, 3, 0.6, 2);
    let vine = fit_vine(&data, &VineConfig { truncation: 2, ..Default::default() })
        .unwrap()
        .with_target_name("x3")
        .unwrap();
    let grid = default_grid(&vine, DEFAULT_GRID_POINTS).unwrap();
    let fast = ConditionalEvaluator::new(&vine, &grid).unwrap();
    for features in [[0.0, 0.0], [1.2, -0.4], [-2.0, 1.5]] {
        let dens = conditional_density(&vine, &features, &grid).unwrap();
        let logs: Vec<f64> = grid
            .points()
            .iter()
            .map(|&y| vine.log_density(&[features[0], features[1], y]))
            .collect();
        // log f(y | x) - log f(x, y) is the same constant everywhere.
        let offsets: Vec<f64> = dens.iter().zip(&logs).filter(|(d, _)| **d > 1e-200).map(|(d, l)| d.ln() - l).collect();
        let spread = offsets.iter().fold(0.0f64, |m, o| m.max((o - offsets[0]).abs()));
        assert!(spread < 1e-8, "{features:?}: {spread}");
        // The constant is -log f(x), up to the mass outside the grid.
        let marginal = integrate(
            &|y| vine.log_density(&[features[0], features[1], y]).exp(),
            grid.low() - 5.0,
            grid.high() + 5.0,
            64,
            1e-12,
        );
        assert!((offsets[0] + marginal.ln()).abs() < 1e-3, "{features:?}");
        // Truncation 2 is outside the evaluator's fast path, so both paths agree.
        let f = fast.density(&features).unwrap();
        for (a, b) in f.iter().zip(&dens) {
            assert!((a - b).abs() <= 1e-10 * b.abs().max(1e-300), "{features:?}");
        }
    }
}
