use rbchar::detect::{Verdict, VerdictRule};
use rbchar::kernels::CovKernel;
use rbchar::point_process::*;
use rbchar::{BoundState, Error};
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn rule() -> VerdictRule {
    VerdictRule::default()
}

fn sq(side: f64) -> Window {
    Window::square(side).unwrap()
}

fn chi_square_p(counts: &[f64]) -> f64 {
    let m = counts.iter().sum::<f64>() / counts.len() as f64;
    let stat: f64 = counts.iter().map(|c| (c - m).powi(2) / m).sum();
    1.0 - ChiSquared::new((counts.len() - 1) as f64).unwrap().cdf(stat)
}

#[test]
fn hpp_counts() {
    let p = gen_hpp(1.0, sq(100.0), 1).unwrap();
    assert!((p.n() as f64 - 1e4).abs() < 400.0, "n = {}", p.n());
    assert_eq!(gen_hpp(0.0, sq(10.0), 1).unwrap().n(), 0);
    assert!(intensity_mle(&p).unwrap() > 0.96);
    assert!(p.points.iter().all(|q| p.window.contains(*q)));
}

#[test]
fn intensity_examples() {
    let w = Window::new(0.0, 2.0, 0.0, 1.0).unwrap();
    let p = PointPattern::new(w, vec![[0.1, 0.1], [0.5, 0.5], [1.5, 0.2], [1.9, 0.9]]).unwrap();
    assert_eq!(intensity_mle(&p).unwrap(), 2.0);
    assert_eq!(intensity_mle(&PointPattern::new(w, vec![]).unwrap()).unwrap(), 0.0);
    let q = gen_hpp(1.0, sq(100.0), 2).unwrap();
    assert!((intensity_mle(&q).unwrap() - q.n() as f64 / 1e4).abs() < 1e-15);
}

#[test]
fn hpp_half_counts_uncorrelated() {
    let (left, right): (Vec<f64>, Vec<f64>) = (0..200)
        .map(|s| {
            let p = gen_hpp(0.5, sq(20.0), s).unwrap();
            let l = p.points.iter().filter(|q| q[0] < 10.0).count() as f64;
            (l, p.n() as f64 - l)
        })
        .unzip();
    let n = 200.0;
    let (ml, mr) = (left.iter().sum::<f64>() / n, right.iter().sum::<f64>() / n);
    let cov = left.iter().zip(&right).map(|(a, b)| (a - ml) * (b - mr)).sum::<f64>() / (n - 1.0);
    let vl = left.iter().map(|a| (a - ml).powi(2)).sum::<f64>() / (n - 1.0);
    let vr = right.iter().map(|b| (b - mr).powi(2)).sum::<f64>() / (n - 1.0);
    let corr = cov / (vl * vr).sqrt();
    assert!(corr.abs() < 3.0 / n.sqrt(), "corr {corr}");
    // Poisson: variance ≈ mean
    assert!((vl / ml - 1.0).abs() < 0.3);
}

#[test]
fn ihpp_counts() {
    let p = gen_ihpp(|u| 100.0 * (u[0] + u[1]), 1000.0, sq(5.0), 3).unwrap();
    assert!((p.n() as f64 - 12_500.0).abs() < 4.0 * 12_500f64.sqrt(), "n = {}", p.n());
    assert_eq!(gen_ihpp(|_| 0.0, 5.0, sq(5.0), 3).unwrap().n(), 0);
    let full = gen_ihpp(|_| 4.0, 4.0, sq(10.0), 9).unwrap();
    assert!((full.n() as f64 - 400.0).abs() < 4.0 * 20.0);
    assert!(matches!(
        gen_ihpp(|_| 5.0, 4.0, sq(10.0), 9),
        Err(Error::DominatingBound { .. })
    ));
}

#[test]
fn thinning_retention() {
    let lam_max = 50.0;
    let c = 0.3;
    let p = gen_ihpp(|_| c * lam_max, lam_max, sq(10.0), 4).unwrap();
    let mean = c * lam_max * 100.0;
    assert!((p.n() as f64 - mean).abs() < 3.0 * mean.sqrt() + 3.0 * (mean * (1.0 - c)).sqrt());
}

#[test]
fn cluster_counts() {
    let p = gen_cluster_const(ClusterKind::Matern { r: 0.1 }, 10.0, 5.0, sq(10.0), 4).unwrap();
    assert!((p.n() as f64 - 5000.0).abs() < 600.0, "n = {}", p.n());
    assert!(dispersion_index(&p, 20) > 1.2);
    assert_eq!(gen_cluster_const(ClusterKind::Matern { r: 0.1 }, 10.0, 0.0, sq(10.0), 4).unwrap().n(), 0);
    let t = gen_cluster_const(ClusterKind::Thomas { sigma2: 0.01 }, 10.0, 5.0, sq(10.0), 4).unwrap();
    assert!(dispersion_index(&t, 20) > 1.2);
    let ns = gen_cluster_const(ClusterKind::NeymanScott { m: 5, r: 0.1 }, 10.0, 0.0, sq(10.0), 4).unwrap();
    assert!(dispersion_index(&ns, 20) > 1.2);
}

#[test]
fn thomas_degenerate_spread() {
    let p = gen_cluster_const(ClusterKind::Thomas { sigma2: 1e-8 }, 2.0, 5.0, sq(10.0), 6).unwrap();
    let d = p.nn_distances().unwrap();
    let tight = d.iter().filter(|&&x| x < 1e-3).count() as f64 / d.len() as f64;
    assert!(tight > 0.9, "tight share {tight}");
}

#[test]
fn hpp_dispersion() {
    let p = gen_hpp(1.0, sq(100.0), 7).unwrap();
    let d = dispersion_index(&p, 20);
    assert!((0.8..=1.2).contains(&d), "dispersion {d}");
}

#[test]
fn lgcp_examples() {
    let w = Window::new(0.0, 15.0, 0.0, 20.0).unwrap();
    let tiny = CovKernel::Matern { sigma2: 1e-10, rho: 10.0, nu: 0.5 };
    let reps = 100;
    let mean_n = (0..reps).map(|s| gen_lgcp(|_| 1.0, &tiny, 16, w, s).unwrap().n() as f64).sum::<f64>() / reps as f64;
    let want = 1f64.exp() * w.area();
    assert!((mean_n / want - 1.0).abs() < 0.05, "mean count {mean_n} vs {want}");

    let k = CovKernel::Matern { sigma2: 0.2, rho: 10.0, nu: 0.5 };
    let p = gen_lgcp(|_| 3.0, &k, 32, w, 11).unwrap();
    assert!((2000..20_000).contains(&p.n()), "n = {}", p.n());

    // short-range field pooled over replicates: quadrant totals look homogeneous
    let short = CovKernel::Matern { sigma2: 0.2, rho: 0.5, nu: 0.5 };
    let mut quad = [0f64; 4];
    for s in 0..20 {
        for q in gen_lgcp(|_| 1.0, &short, 16, w, 100 + s).unwrap().points {
            quad[(q[0] >= 7.5) as usize + 2 * (q[1] >= 10.0) as usize] += 1.0;
        }
    }
    assert!(chi_square_p(&quad) > 0.01, "{quad:?}");
}

#[test]
fn strauss_examples() {
    assert_eq!(gen_strauss(10.0, 1.5, 0.1, sq(1.0), 0, 10).unwrap_err(), Error::NonIntegrable(1.5));

    let counts: Vec<f64> = (0..50).map(|s| gen_strauss(100.0, 1.0, 0.05, sq(1.0), s, 5000).unwrap().n() as f64).collect();
    let m = counts.iter().sum::<f64>() / 50.0;
    assert!((m - 100.0).abs() < 3.0 * (100.0f64 / 50.0).sqrt() * 1.5, "mean count {m}");

    let hard = gen_strauss(100.0, 1e-6, 0.05, sq(1.0), 3, 20_000).unwrap();
    assert_eq!(close_pairs(&hard.points, 0.05), 0);

    let soft = gen_strauss(100.0, 0.2, 0.05, sq(1.0), 3, 20_000).unwrap();
    let base = gen_strauss(100.0, 1.0, 0.05, sq(1.0), 3, 20_000).unwrap();
    let frac = |p: &PointPattern| close_pairs(&p.points, 0.05) as f64 / (p.n() * p.n()) as f64;
    assert!(frac(&soft) < frac(&base));
}

#[test]
fn strauss_reference_design() {
    let p = gen_strauss(0.05, 0.2, 1.5, sq(500.0), 19, 400_000).unwrap();
    assert!((8000..12_500).contains(&p.n()), "n = {}", p.n());
    assert!(dispersion_index(&p, 25) < 1.0);
    let base = gen_strauss(0.05, 1.0, 1.5, sq(500.0), 19, 400_000).unwrap();
    let frac = |p: &PointPattern| close_pairs(&p.points, 1.5) as f64 / (p.n() * p.n()) as f64;
    assert!(frac(&p) < frac(&base));
}

#[test]
fn csr_input_errors() {
    let p = gen_hpp(1.0, sq(20.0), 1).unwrap();
    assert!(matches!(detect_csr(&p, 1, BoundState::nonparametric(0.25), &rule(), 1), Err(Error::Input(_))));
}

#[test]
fn csr_examples() {
    let hpp = gen_hpp(1.0, sq(100.0), 5).unwrap();
    let r = detect_csr(&hpp, 1000, BoundState::nonparametric(0.25), &rule(), 5).unwrap();
    assert_eq!(r.verdict, Verdict::Stationary);

    // with ~10 points per cluster the IHPP statistics are indistinguishable
    // from the HPP ones; with 25 clusters the inhomogeneity shows in the
    // upper tail
    let q90 = |p: &PointPattern, seed| {
        let mut s = csr_statistics(p, &cluster_pattern(p, 25, seed).unwrap()).unwrap();
        s.sort_by(f64::total_cmp);
        s[s.len() * 9 / 10]
    };
    for seed in 0..3 {
        let h = gen_hpp(1.0, sq(50.0), seed).unwrap();
        let i = gen_ihpp(|u| 100.0 * (u[0] + u[1]), 1000.0, sq(5.0), seed).unwrap();
        assert!(q90(&i, seed) > q90(&h, seed), "seed {seed}");
    }

    let m = gen_cluster_const(ClusterKind::Matern { r: 0.1 }, 10.0, 5.0, sq(10.0), 5).unwrap();
    let r = detect_csr(&m, 25, BoundState::nonparametric(0.1), &rule(), 5).unwrap();
    assert_eq!(r.verdict, Verdict::Nonstationary);
}

#[test]
fn csr_translation_invariant() {
    let p = gen_hpp(1.0, sq(40.0), 8).unwrap();
    let shift = 64.0;
    let w = p.window;
    let moved = PointPattern::new(
        Window::new(w.x0 + shift, w.x1 + shift, w.y0 + shift, w.y1 + shift).unwrap(),
        p.points.iter().map(|q| [q[0] + shift, q[1] + shift]).collect(),
    )
    .unwrap();
    let a = detect_csr(&p, 100, BoundState::nonparametric(0.25), &rule(), 8).unwrap();
    let b = detect_csr(&moved, 100, BoundState::nonparametric(0.25), &rule(), 8).unwrap();
    assert_eq!(a.verdict, b.verdict);
    for (x, y) in a.stages.iter().zip(&b.stages) {
        assert_eq!(x.y, y.y);
        assert!((x.s - y.s).abs() < 1e-9);
    }
}

#[test]
fn pp_stationarity_examples() {
    let hpp = gen_hpp(1.0, sq(50.0), 6).unwrap();
    let r = detect_pp_stationarity(&hpp, 50, BoundState::nonparametric(0.06), &rule(), 6).unwrap();
    assert_eq!(r.verdict, Verdict::Stationary);

    let grid: Vec<[f64; 2]> = (0..900).map(|k| [(k % 30) as f64 + 0.5, (k / 30) as f64 + 0.5]).collect();
    let g = PointPattern::new(sq(30.0), grid).unwrap();
    let r = detect_pp_stationarity(&g, 30, BoundState::nonparametric(0.06), &rule(), 1).unwrap();
    assert_eq!(r.verdict, Verdict::Stationary);
    assert!(r.stages.iter().all(|s| s.s == 0.0));
}
