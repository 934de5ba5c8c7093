use imspe_core::highprec::{solve_sym, Matrix};
use imspe_core::search::canonicalize;
use imspe_core::{ccd_minimize, imspe, BigReal, CovarianceParams, Design, PrecisionContext, SearchConfig};
use proptest::prelude::*;

const DIGITS: u32 = 40;

fn ctx() -> PrecisionContext {
    PrecisionContext::new(DIGITS).unwrap()
}

fn symmetry_tol() -> f64 {
    10f64.powi(-(DIGITS as i32) + 5)
}

fn coord() -> impl Strategy<Value = f64> {
    -1.0f64..=1.0
}

/// Two-factor designs with 2..=5 points and log-uniform correlation
/// parameters.
fn design_and_theta() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>)> {
    (2usize..=5).prop_flat_map(|n| {
        (
            prop::collection::vec(prop::collection::vec(coord(), 2), n),
            prop::collection::vec(-3.0f64..1.0, 2).prop_map(|v| v.into_iter().map(|e| 10f64.powf(e)).collect()),
        )
    })
}

fn value(points: Vec<Vec<f64>>, theta: &[f64]) -> Option<BigReal> {
    let d = Design::new(points).ok()?;
    imspe(&d, &CovarianceParams::unit(theta.to_vec()).unwrap(), &ctx())
        .ok()
        .map(|r| r.imspe)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn solve_sym_residual_is_tiny(n in 2usize..=12, seed in prop::collection::vec(-1.0f64..1.0, 144 + 12)) {
        let c = ctx();
        // A = B B^T + n I is symmetric positive definite.
        let b = Matrix::from_fn(n, n, |i, j| BigReal::from_f64(seed[i * 12 + j], &c));
        let mut a = Matrix::zeros(n, n, &c);
        for i in 0..n {
            for j in 0..n {
                let mut s = BigReal::zero(&c);
                for k in 0..n {
                    s = &s + &(b.get(i, k) * b.get(j, k));
                }
                if i == j {
                    s = &s + n as f64;
                }
                a.set(i, j, s);
            }
        }
        let rhs = Matrix::from_fn(n, 1, |i, _| BigReal::from_f64(seed[144 + i], &c));
        let x = solve_sym(&a, &rhs, &c).unwrap();
        let ax = a.mul(&x);
        for i in 0..n {
            let r = (ax.get(i, 0) - rhs.get(i, 0)).abs();
            prop_assert!(r < 1e-34, "residual {:?}", r);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn reflection_invariance((points, theta) in design_and_theta(), k in 0usize..2) {
        let reflected: Vec<Vec<f64>> = points.iter().map(|p| {
            let mut q = p.clone();
            q[k] = -q[k];
            q
        }).collect();
        if let (Some(a), Some(b)) = (value(points, &theta), value(reflected, &theta)) {
            prop_assert!((&a - &b).abs() < symmetry_tol());
        }
    }

    #[test]
    fn factor_swap_invariance((points, theta) in design_and_theta()) {
        let swapped: Vec<Vec<f64>> = points.iter().map(|p| vec![p[1], p[0]]).collect();
        let theta_swapped = vec![theta[1], theta[0]];
        if let (Some(a), Some(b)) = (value(points, &theta), value(swapped, &theta_swapped)) {
            prop_assert!((&a - &b).abs() < symmetry_tol());
        }
    }

    #[test]
    fn row_permutation_invariance((points, theta) in design_and_theta(), rot in 1usize..5) {
        let mut permuted = points.clone();
        let r = rot % permuted.len();
        permuted.rotate_left(r);
        let last = permuted.len() - 1;
        permuted.swap(0, last);
        if let (Some(a), Some(b)) = (value(points, &theta), value(permuted, &theta)) {
            prop_assert!((&a - &b).abs() < symmetry_tol());
        }
    }

    #[test]
    fn imspe_is_positive((points, theta) in design_and_theta()) {
        if let Some(v) = value(points, &theta) {
            prop_assert!(v > 0.0);
        }
    }
}

#[test]
fn twin_and_raw_paths_agree() {
    // Twins at x_t +- delta that are exactly representable, so the raw
    // design carries the very same coordinates.
    let c = PrecisionContext::new(100).unwrap();
    let p = CovarianceParams::unit(vec![0.128, 0.00016]).unwrap();
    for delta in [vec![0.0, 2f64.powi(-10)], vec![2f64.powi(-12), 2f64.powi(-14)], vec![2f64.powi(-20), 0.0]] {
        let twin = Design::with_twin(vec![vec![-0.75, 0.0], vec![0.75, 0.125]], vec![0.25, -0.5], delta).unwrap();
        let raw = twin.without_twin();
        assert!(raw.twin().is_none());
        let a = imspe(&twin, &p, &c).unwrap().imspe;
        let b = imspe(&raw, &p, &c).unwrap().imspe;
        assert!((&a - &b).abs() < 1e-40, "{a:?} vs {b:?}");
    }
}

#[test]
fn gap_is_quadratic_in_small_separations() {
    let c = PrecisionContext::new(60).unwrap();
    let p = CovarianceParams::unit(vec![0.128, 0.00016]).unwrap();
    for axis in 0..2 {
        let f = |d: f64| {
            let mut delta = vec![0.0, 0.0];
            delta[axis] = d;
            let design =
                Design::with_twin(vec![vec![-0.767117, 0.0], vec![0.767117, 0.0]], vec![0.0, 0.0], delta).unwrap();
            imspe(&design, &p, &c).unwrap().imspe
        };
        let (a, b, e) = (f(1e-4), f(1e-5), f(1e-6));
        // For a + c d^2 the ratio of successive differences is exactly 100.
        let ratio = (&(&a - &b) / &(&b - &e)).to_f64();
        assert!((ratio / 100.0 - 1.0).abs() < 1e-3, "axis {}: ratio {ratio}", axis + 1);
    }
}

#[test]
fn ccd_commutes_with_reflection() {
    let c = PrecisionContext::new(30).unwrap();
    let p = CovarianceParams::unit(vec![1.0, 2.0]).unwrap();
    let cfg = SearchConfig::default();
    let start = Design::new(vec![vec![0.31, -0.52], vec![-0.44, 0.13], vec![0.05, 0.71]]).unwrap();
    let a = ccd_minimize(&start, &p, &cfg, &c).unwrap();
    let b = ccd_minimize(&start.reflect(0), &p, &cfg, &c).unwrap();
    let rel = (&(&a.imspe.imspe - &b.imspe.imspe) / &a.imspe.imspe).abs();
    assert!(rel < 1e-12, "{rel:?}");
    let (ca, cb) = (canonicalize(&a.design, &p), canonicalize(&b.design, &p));
    for (x, y) in ca.points().iter().flatten().zip(cb.points().iter().flatten()) {
        assert!((x - y).abs() < 1e-6, "{ca:?} vs {cb:?}");
    }
}

#[test]
fn ccd_trace_never_rises() {
    let c = PrecisionContext::new(30).unwrap();
    let p = CovarianceParams::unit(vec![0.7, 0.2]).unwrap();
    let cfg = SearchConfig {
        max_sweeps: 30,
        ..SearchConfig::default()
    };
    let start = Design::new(vec![vec![0.9, 0.9], vec![0.85, 0.8], vec![-0.2, 0.4], vec![0.1, -0.6]]).unwrap();
    let r = ccd_minimize(&start, &p, &cfg, &c).unwrap();
    for w in r.trace.windows(2) {
        let rise = (&w[1].1 - &w[0].1).to_f64();
        assert!(rise <= cfg.obj_tol, "sweep {}: rise {rise:e}", w[1].0);
    }
    assert!(r.trace.last().unwrap().1 < r.trace[0].1);
}
