use rug::Float;

use super::{erf_pair, erf_scale, prefactor, CovarianceParams, Design};
use crate::error::Result;
use crate::highprec::{BigReal, Matrix, PrecisionContext};

/// Per-factor pieces of `L` and `R`, kept so that moving one coordinate only
/// recomputes the entries that depend on it.
///
/// For factor `k` and rows `i, j`:
/// * `e1[k][i]  = sqrt(pi/(16 theta_k)) [erf(sqrt(theta_k)(1 + x_ik)) + erf(sqrt(theta_k)(1 - x_ik))]`
/// * `e2[k][i][j] = sqrt(pi/(32 theta_k)) [erf(sqrt(2 theta_k)(1 + m)) + erf(sqrt(2 theta_k)(1 - m))]`, `m` the midpoint
/// * `g[k][i][j]  = theta_k (x_ik - x_jk)^2`, or `4 theta_k delta_k^2` for the twin pair
#[derive(Clone, Debug)]
pub struct KernelTables {
    bits: u32,
    n: usize,
    d: usize,
    theta: Vec<f64>,
    sigma_z2: Float,
    twin_rows: Option<(usize, usize)>,
    coords: Vec<Float>,
    c1: Vec<Float>,
    s1: Vec<Float>,
    c2: Vec<Float>,
    s2: Vec<Float>,
    e1: Vec<Float>,
    e2: Vec<Float>,
    g: Vec<Float>,
}

impl KernelTables {
    pub fn new(design: &Design, params: &CovarianceParams, ctx: &PrecisionContext) -> Result<Self> {
        params.check_design(design)?;
        let bits = ctx.bits();
        let n = design.n();
        let d = design.dim();
        let theta = params.theta().to_vec();
        let zero = Float::new(bits);
        let mut tables = Self {
            bits,
            n,
            d,
            c1: theta.iter().map(|&t| prefactor(t, 1, bits)).collect(),
            s1: theta.iter().map(|&t| erf_scale(t, 1, bits)).collect(),
            c2: theta.iter().map(|&t| prefactor(t, 2, bits)).collect(),
            s2: theta.iter().map(|&t| erf_scale(t, 2, bits)).collect(),
            theta,
            sigma_z2: Float::with_val(bits, params.sigma_z2()),
            twin_rows: design.twin_rows(),
            coords: vec![zero.clone(); n * d],
            e1: vec![zero.clone(); n * d],
            e2: vec![zero.clone(); n * n * d],
            g: vec![zero; n * n * d],
        };
        let rows: Vec<usize> = (0..n).collect();
        for k in 0..d {
            tables.update(design, &rows, k);
        }
        Ok(tables)
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    /// Recomputes factor `k` for `rows` from `design`, which must have the
    /// same shape and twin layout as the design the tables were built from.
    pub fn update(&mut self, design: &Design, rows: &[usize], k: usize) {
        debug_assert_eq!(design.n(), self.n);
        debug_assert_eq!(design.twin_rows(), self.twin_rows);
        let (n, bits) = (self.n, self.bits);
        for &i in rows {
            self.coords[i * self.d + k] = design.coordinate_hp(i, k, bits);
        }
        for &i in rows {
            let xi = &self.coords[i * self.d + k];
            self.e1[k * n + i] = Float::with_val(bits, &self.c1[k] * erf_pair(&self.s1[k], xi, bits));
            for j in 0..n {
                let (mid, g) = self.pair_terms(design, i, j, k);
                let e2 = Float::with_val(bits, &self.c2[k] * erf_pair(&self.s2[k], &mid, bits));
                let base = k * n * n;
                self.e2[base + i * n + j] = e2.clone();
                self.e2[base + j * n + i] = e2;
                self.g[base + i * n + j] = g.clone();
                self.g[base + j * n + i] = g;
            }
        }
    }

    fn pair_terms(&self, design: &Design, i: usize, j: usize, k: usize) -> (Float, Float) {
        let bits = self.bits;
        let theta = self.theta[k];
        let is_twin_pair = self
            .twin_rows
            .is_some_and(|(a, b)| (i == a && j == b) || (i == b && j == a));
        if is_twin_pair {
            // Squared separation from delta directly: (2 delta)^2 theta.
            let twin = design.twin().expect("twin rows imply a twin spec");
            let mid = Float::with_val(bits, twin.barycenter[k]);
            let delta = Float::with_val(bits, twin.delta[k]);
            let g = delta.square() * theta * 4u32;
            return (mid, g);
        }
        let xi = &self.coords[i * self.d + k];
        let xj = &self.coords[j * self.d + k];
        let mid = Float::with_val(bits, xi + xj) / 2u32;
        let g = Float::with_val(bits, xi - xj).square() * theta;
        (mid, g)
    }

    /// Assembles `(L, R)`, each `(N+1) x (N+1)`.
    pub fn matrices(&self) -> (Matrix, Matrix) {
        let (n, d, bits) = (self.n, self.d, self.bits);
        let sigma2 = &self.sigma_z2;
        let sigma4 = Float::with_val(bits, sigma2.square_ref());
        let mut l = vec![vec![Float::new(bits); n + 1]; n + 1];
        let mut r = l.clone();
        r[0][0] = Float::with_val(bits, 1);
        for i in 0..n {
            let mut s1 = sigma2.clone();
            for k in 0..d {
                s1 *= &self.e1[k * n + i];
            }
            l[0][i + 1] = sigma2.clone();
            l[i + 1][0] = sigma2.clone();
            r[0][i + 1] = s1.clone();
            r[i + 1][0] = s1;
            for j in i..n {
                let mut prod = sigma4.clone();
                let mut g = Float::new(bits);
                for k in 0..d {
                    prod *= &self.e2[k * n * n + i * n + j];
                    g += &self.g[k * n * n + i * n + j];
                }
                // h = exp(-g/2): R carries h, L carries h^2.
                let h = (-g / 2u32).exp();
                let lij = Float::with_val(bits, h.square_ref()) * sigma2;
                let rij = prod * h;
                l[i + 1][j + 1] = lij.clone();
                l[j + 1][i + 1] = lij;
                r[i + 1][j + 1] = rij.clone();
                r[j + 1][i + 1] = rij;
            }
        }
        let to_matrix = |m: Vec<Vec<Float>>| {
            Matrix::from_fn(n + 1, n + 1, |i, j| BigReal::from_float(m[i][j].clone()))
        };
        (to_matrix(l), to_matrix(r))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{build_matrices, i2, CovarianceParams};

    fn ctx() -> PrecisionContext {
        PrecisionContext::new(60).unwrap()
    }

    #[test]
    fn incremental_update_matches_fresh_build() {
        let c = ctx();
        let p = CovarianceParams::unit(vec![0.8, 2.0]).unwrap();
        let d0 = Design::new(vec![vec![0.1, 0.2], vec![-0.5, 0.7], vec![0.9, -0.4]]).unwrap();
        let d1 = d0.with_coordinate(1, 0, 0.33).unwrap();
        let mut t = KernelTables::new(&d0, &p, &c).unwrap();
        t.update(&d1, &[1], 0);
        let (l_inc, r_inc) = t.matrices();
        let fresh = build_matrices(&d1, &p, &c).unwrap();
        assert_eq!(l_inc, fresh.l);
        assert_eq!(r_inc, fresh.r);
    }

    #[test]
    fn twin_entry_uses_delta_directly() {
        let c = ctx();
        let theta = [0.128, 0.00016];
        let p = CovarianceParams::unit(theta.to_vec()).unwrap();
        let delta = 1e-6;
        let d = Design::with_twin(
            vec![vec![-0.767117, 0.0], vec![0.767117, 0.0]],
            vec![0.0, 0.0],
            vec![0.0, delta],
        )
        .unwrap();
        let m = build_matrices(&d, &p, &c).unwrap();
        // R[3][4] = I2(theta_1, 0, 0) * I2(theta_2, +delta, -delta).
        let expect = i2(theta[0], 0.0, 0.0, &c).unwrap() * i2(theta[1], delta, -delta, &c).unwrap();
        let got = m.r.get(3, 4);
        assert!(((got - &expect) / &expect).abs() < 1e-55);
        // L[3][4] = exp(-4 theta_2 delta^2).
        let gap = (&BigReal::one(&c) - m.l.get(3, 4)).to_f64();
        let expect = 4.0 * theta[1] * delta * delta;
        assert!((gap - expect).abs() < 1e-12 * expect);
    }
}
