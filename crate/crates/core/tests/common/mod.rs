//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use rand::Rng;

/// Gauss–Legendre nodes and weights on [a, b] (Newton iteration on P_n).
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            // p1 = P_n(z), p0 = P_{n-1}(z)
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        x[i] = mid - half * z;
        x[n - 1 - i] = mid + half * z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp) * half;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Adaptive Simpson quadrature.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let diff = left + right - whole;
        if depth == 0 || diff.abs() <= 15.0 * tol {
            return left + right + diff / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Composite adaptive Simpson over equal panels, robust to narrow peaks.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, panels: usize, tol: f64) -> f64 {
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|i| adaptive_simpson(f, a + h * i as f64, a + h * (i + 1) as f64, tol / panels as f64))
        .sum()
}

/// Kendall's tau-a by counting all pairs.
pub fn brute_tau(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    let mut s: i64 = 0;
    for i in 0..n {
        for j in i + 1..n {
            let a = (x[i] - x[j]).partial_cmp(&0.0).unwrap() as i64;
            let b = (y[i] - y[j]).partial_cmp(&0.0).unwrap() as i64;
            s += a * b;
        }
    }
    let total = (n * (n - 1) / 2) as u64;
    s as f64 / total as f64
}

/// Maximum-weight spanning tree by enumerating every (d-1)-edge subset.
pub fn brute_max_spanning_tree(w: &[Vec<f64>]) -> Vec<(usize, usize)> {
    let d = w.len();
    let edges: Vec<(usize, usize)> = (0..d).flat_map(|i| (i + 1..d).map(move |j| (i, j))).collect();
    let mut best: Option<(f64, Vec<(usize, usize)>)> = None;
    let mut chosen = Vec::new();
    fn find(p: &mut [usize], x: usize) -> usize {
        if p[x] != x {
            let r = find(p, p[x]);
            p[x] = r;
        }
        p[x]
    }
    fn go(
        start: usize,
        edges: &[(usize, usize)],
        d: usize,
        w: &[Vec<f64>],
        chosen: &mut Vec<(usize, usize)>,
        best: &mut Option<(f64, Vec<(usize, usize)>)>,
    ) {
        if chosen.len() == d - 1 {
            let mut p: Vec<usize> = (0..d).collect();
            for &(a, b) in chosen.iter() {
                let (ra, rb) = (find(&mut p, a), find(&mut p, b));
                if ra == rb {
                    return;
                }
                p[ra] = rb;
            }
            let total: f64 = chosen.iter().map(|&(a, b)| w[a][b]).sum();
            if best.as_ref().is_none_or(|(bw, _)| total > *bw) {
                *best = Some((total, chosen.clone()));
            }
            return;
        }
        for k in start..edges.len() {
            chosen.push(edges[k]);
            go(k + 1, edges, d, w, chosen, best);
            chosen.pop();
        }
    }
    if d < 2 {
        return Vec::new();
    }
    go(0, &edges, d, w, &mut chosen, &mut best);
    best.unwrap().1
}

/// Unbiased MMD² by a plain double loop over rows.
pub fn brute_mmd(x: &[Vec<f64>], y: &[Vec<f64>], h: f64) -> f64 {
    let k = |a: &[f64], b: &[f64]| {
        let d2: f64 = a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum();
        (-d2 / (2.0 * h * h)).exp()
    };
    let within = |s: &[Vec<f64>]| {
        let mut t = 0.0;
        for i in 0..s.len() {
            for j in 0..s.len() {
                if i != j {
                    t += k(&s[i], &s[j]);
                }
            }
        }
        t / (s.len() * (s.len() - 1)) as f64
    };
    let mut cross = 0.0;
    for a in x {
        for b in y {
            cross += k(a, b);
        }
    }
    within(x) + within(y) - 2.0 * cross / (x.len() * y.len()) as f64
}

pub fn std_normal<R: Rng>(rng: &mut R) -> f64 {
    // Box–Muller, independent of the library's samplers.
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Standard normal cdf by adaptive quadrature of the density.
pub fn normal_cdf_quadrature(x: f64) -> f64 {
    let pdf = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
    if x < 0.0 {
        integrate(&pdf, -40.0, x, 16, 1e-15)
    } else {
        0.5 + integrate(&pdf, 0.0, x, 16, 1e-15)
    }
}
