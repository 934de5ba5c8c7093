//! Independent quadrature oracles for the closed-form kernel integrals.
#![allow(dead_code)]

use imspe_core::highprec::{exp_hp, pi_hp};
use imspe_core::{BigReal, PrecisionContext};

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// One G7-K15 panel: (Kronrod estimate, |Kronrod - Gauss|).
fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss-Kronrod integral of `f` over `[a, b]`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> f64 {
    let mut stack = vec![(a, b, tol)];
    let mut total = 0.0;
    while let Some((lo, hi, t)) = stack.pop() {
        let (v, err) = gk15(&mut f, lo, hi);
        if err <= t || hi - lo < 1e-12 {
            total += v;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((mid, hi, t / 2.0));
            stack.push((lo, mid, t / 2.0));
        }
    }
    total
}

/// `(1/2) * integral over [-1, 1] of exp(-theta (x - a)^2)`.
pub fn i1_quad(theta: f64, a: f64) -> f64 {
    0.5 * integrate(|x| (-theta * (x - a).powi(2)).exp(), -1.0, 1.0, 1e-15)
}

/// `(1/2) * integral over [-1, 1] of exp(-theta ((x - a)^2 + (x - b)^2))`.
pub fn i2_quad(theta: f64, a: f64, b: f64) -> f64 {
    0.5 * integrate(|x| (-theta * ((x - a).powi(2) + (x - b).powi(2))).exp(), -1.0, 1.0, 1e-15)
}

fn corr(theta: &[f64], x: &[f64], y: &[f64]) -> f64 {
    (-theta.iter().zip(x.iter().zip(y)).map(|(t, (a, b))| t * (a - b).powi(2)).sum::<f64>()).exp()
}

/// R entry of two points in two factors by nested 2-D quadrature of the
/// product of correlations, normalized by the area of `[-1, 1]^2`.
pub fn r_entry_2d(theta: &[f64], xi: &[f64], xj: &[f64]) -> f64 {
    let inner = |u: f64| {
        integrate(
            |v| {
                let x = [u, v];
                corr(theta, &x, xi) * corr(theta, &x, xj)
            },
            -1.0,
            1.0,
            1e-15,
        )
    };
    0.25 * integrate(inner, -1.0, 1.0, 1e-14)
}

/// Border entry `S1(x_i)` by quadrature (product of 1-D integrals).
pub fn s1_quad(theta: &[f64], xi: &[f64]) -> f64 {
    theta.iter().zip(xi).map(|(&t, &a)| i1_quad(t, a)).product()
}

/// IMSPE in plain `f64`: quadrature for `R`, a dense LU solve for `L^-1 R`.
pub fn imspe_oracle(theta: &[f64], points: &[Vec<f64>]) -> f64 {
    use nalgebra::DMatrix;
    let n = points.len();
    let m = n + 1;
    let mut l = DMatrix::<f64>::zeros(m, m);
    let mut r = DMatrix::<f64>::zeros(m, m);
    r[(0, 0)] = 1.0;
    for i in 0..n {
        l[(0, i + 1)] = 1.0;
        l[(i + 1, 0)] = 1.0;
        let s = s1_quad(theta, &points[i]);
        r[(0, i + 1)] = s;
        r[(i + 1, 0)] = s;
        for j in 0..n {
            l[(i + 1, j + 1)] = corr(theta, &points[i], &points[j]);
            r[(i + 1, j + 1)] = if theta.len() == 2 {
                r_entry_2d(theta, &points[i], &points[j])
            } else {
                theta
                    .iter()
                    .enumerate()
                    .map(|(k, &t)| i2_quad(t, points[i][k], points[j][k]))
                    .product()
            };
        }
    }
    let x = l.lu().solve(&r).expect("oracle system is nonsingular");
    1.0 - x.trace()
}

/// High-precision tanh-sinh quadrature of `(1/2) * integral over [-1, 1] of
/// exp(-theta (x - a)^2)`, refined until two levels agree to `tol`.
pub fn i1_tanh_sinh(theta: f64, a: f64, ctx: &PrecisionContext, tol: f64) -> BigReal {
    let half_pi = &pi_hp(ctx) / 2.0;
    let one = BigReal::one(ctx);
    let theta_b = BigReal::from_f64(theta, ctx);
    let a_b = BigReal::from_f64(a, ctx);
    let f = |x: &BigReal| {
        let d = x - &a_b;
        exp_hp(&-(&(&theta_b * &d.square())), ctx).unwrap()
    };
    // Weight and node at t: x = tanh(pi/2 sinh t), w = pi/2 cosh t / cosh^2(pi/2 sinh t).
    let node = |t: f64| {
        let tb = BigReal::from_f64(t, ctx);
        let et = exp_hp(&tb, ctx).unwrap();
        let emt = &one / &et;
        let sinh = &(&et - &emt) / 2.0;
        let cosh = &(&et + &emt) / 2.0;
        let u = &half_pi * &sinh;
        let e2u = exp_hp(&(&u * 2.0), ctx).unwrap();
        let x = &(&e2u - &one) / &(&e2u + &one);
        let eu = exp_hp(&u, ctx).unwrap();
        let coshu = &(&eu + &(&one / &eu)) / 2.0;
        let w = &(&half_pi * &cosh) / &coshu.square();
        (x, w)
    };
    let t_max: f64 = 4.5;
    let mut h: f64 = 0.5;
    let mut prev: Option<BigReal> = None;
    loop {
        let steps = (t_max / h).ceil() as i64;
        let mut sum = BigReal::zero(ctx);
        for j in -steps..=steps {
            let (x, w) = node(j as f64 * h);
            if (&x.abs() - 1.0).is_zero() {
                continue;
            }
            sum = &sum + &(&w * &f(&x));
        }
        let value = &(&sum * h) / 2.0;
        if let Some(p) = &prev {
            if (&value - p).abs() < tol {
                return value;
            }
        }
        assert!(h > 1e-4, "tanh-sinh failed to converge");
        prev = Some(value);
        h /= 2.0;
    }
}

/// `erf(x)` from its Maclaurin series, summed at the precision of `ctx`.
pub fn erf_taylor(x: &BigReal, ctx: &PrecisionContext) -> BigReal {
    let x2 = x.square();
    let mut term = x.clone();
    let mut sum = x.clone();
    let eps = 10f64.powi(-(ctx.digits() as i32) - 5);
    let mut n = 0u32;
    loop {
        n += 1;
        term = &(&(&term * &x2) * -1.0) / n as f64;
        let add = &term / (2 * n + 1) as f64;
        sum = &sum + &add;
        if add.abs() < eps && n > 4 {
            break;
        }
    }
    let two_over_sqrt_pi = &BigReal::from_int(2, ctx) / &imspe_core::highprec::sqrt_hp(&pi_hp(ctx), ctx).unwrap();
    &sum * &two_over_sqrt_pi
}
