use rug::Float;

use super::{BigReal, PrecisionContext};
use crate::error::{Error, Result};

/// Dense row-major matrix of extended-precision reals.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<BigReal>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize, ctx: &PrecisionContext) -> Self {
        Self {
            rows,
            cols,
            data: vec![BigReal::zero(ctx); rows * cols],
        }
    }

    pub fn identity(n: usize, ctx: &PrecisionContext) -> Self {
        let mut m = Self::zeros(n, n, ctx);
        for i in 0..n {
            m.set(i, i, BigReal::one(ctx));
        }
        m
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> BigReal,
    ) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_f64(rows: usize, cols: usize, values: &[f64], ctx: &PrecisionContext) -> Self {
        assert_eq!(values.len(), rows * cols, "value count does not match shape");
        Self::from_fn(rows, cols, |i, j| BigReal::from_f64(values[i * cols + j], ctx))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &BigReal {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: BigReal) {
        self.data[i * self.cols + j] = value;
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn is_symmetric(&self) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "shape mismatch in product");
        let prec = self.data.first().map_or(64, |x| x.prec());
        Matrix::from_fn(self.rows, other.cols, |i, j| {
            let mut acc = Float::with_val(prec, 0);
            for k in 0..self.cols {
                acc += Float::with_val(prec, self.get(i, k).as_float() * other.get(k, j).as_float());
            }
            BigReal::from_float(acc)
        })
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data
            .iter()
            .map(|x| x.abs().to_f64())
            .fold(0.0, f64::max)
    }

    pub fn trace(&self) -> BigReal {
        assert!(self.is_square());
        let prec = self.data.first().map_or(64, |x| x.prec());
        let mut acc = Float::with_val(prec, 0);
        for i in 0..self.rows {
            acc += self.get(i, i).as_float();
        }
        BigReal::from_float(acc)
    }

    pub fn to_f64_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j).to_f64()).collect())
            .collect()
    }
}

/// LU factorization with partial (row) pivoting.
///
/// Symmetric indefinite systems such as the bordered covariance matrix have a
/// zero in the corner, so a Cholesky-style factorization does not apply.
#[derive(Clone, Debug)]
pub struct LuFactor {
    n: usize,
    lu: Vec<Float>,
    perm: Vec<usize>,
    min_pivot: f64,
    scale: f64,
    bits: u32,
}

impl LuFactor {
    /// Factors `m`. A pivot smaller than `10^(-digits+4)` relative to the
    /// largest entry is reported as [`Error::Singular`].
    pub fn new(m: &Matrix, ctx: &PrecisionContext) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Domain(format!(
                "cannot factor a {}x{} matrix",
                m.rows, m.cols
            )));
        }
        let n = m.rows;
        let bits = ctx.bits();
        let mut lu: Vec<Float> = m
            .data
            .iter()
            .map(|x| Float::with_val(bits, x.as_float()))
            .collect();
        let scale = m.max_abs();
        let threshold = scale * 10f64.powi(-(ctx.digits() as i32) + 4);
        let mut perm: Vec<usize> = (0..n).collect();
        let mut min_pivot = f64::INFINITY;

        for k in 0..n {
            let (p, _) = (k..n)
                .map(|i| (i, lu[i * n + k].clone().abs()))
                .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal))
                .expect("non-empty column");
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = lu[k * n + k].clone();
            let pivot_abs = pivot.clone().abs().to_f64();
            min_pivot = min_pivot.min(pivot_abs);
            if !(pivot_abs > threshold) {
                return Err(Error::Singular {
                    pivot: pivot_abs,
                    digits: ctx.digits(),
                });
            }
            for i in (k + 1)..n {
                let factor = Float::with_val(bits, &lu[i * n + k] / &pivot);
                if factor.is_zero() {
                    lu[i * n + k] = factor;
                    continue;
                }
                for j in (k + 1)..n {
                    let delta = Float::with_val(bits, &factor * &lu[k * n + j]);
                    lu[i * n + j] -= delta;
                }
                lu[i * n + k] = factor;
            }
        }
        Ok(Self {
            n,
            lu,
            perm,
            min_pivot,
            scale,
            bits,
        })
    }

    /// Smallest pivot magnitude met during elimination.
    pub fn min_pivot(&self) -> f64 {
        self.min_pivot
    }

    /// Crude condition estimate: largest entry over smallest pivot.
    pub fn condition_estimate(&self) -> f64 {
        self.scale / self.min_pivot
    }

    pub fn solve(&self, b: &Matrix) -> Matrix {
        assert_eq!(b.rows, self.n, "right-hand side has wrong row count");
        let n = self.n;
        let bits = self.bits;
        let mut out = Matrix {
            rows: n,
            cols: b.cols,
            data: Vec::with_capacity(n * b.cols),
        };
        let mut columns: Vec<Vec<Float>> = Vec::with_capacity(b.cols);
        for c in 0..b.cols {
            let mut y: Vec<Float> = self
                .perm
                .iter()
                .map(|&p| Float::with_val(bits, b.get(p, c).as_float()))
                .collect();
            for i in 0..n {
                for k in 0..i {
                    let t = Float::with_val(bits, &self.lu[i * n + k] * &y[k]);
                    y[i] -= t;
                }
            }
            for i in (0..n).rev() {
                for k in (i + 1)..n {
                    let t = Float::with_val(bits, &self.lu[i * n + k] * &y[k]);
                    y[i] -= t;
                }
                y[i] /= &self.lu[i * n + i];
            }
            columns.push(y);
        }
        for i in 0..n {
            for col in &columns {
                out.data.push(BigReal::from_float(col[i].clone()));
            }
        }
        out
    }
}

/// Solves `M X = B` for symmetric `M` by pivoted LU; never forms an inverse.
pub fn solve_sym(m: &Matrix, b: &Matrix, ctx: &PrecisionContext) -> Result<Matrix> {
    if !m.is_symmetric() {
        return Err(Error::Domain("solve_sym requires a symmetric matrix".into()));
    }
    if b.rows != m.rows {
        return Err(Error::Domain(format!(
            "right-hand side has {} rows, matrix has {}",
            b.rows, m.rows
        )));
    }
    Ok(LuFactor::new(m, ctx)?.solve(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(d: u32) -> PrecisionContext {
        PrecisionContext::new(d).unwrap()
    }

    #[test]
    fn identity_solve_returns_rhs() {
        let c = ctx(60);
        let b = Matrix::from_f64(3, 2, &[1.0, -2.0, 0.5, 3.25, 7.0, 1e-9], &c);
        let x = solve_sym(&Matrix::identity(3, &c), &b, &c).unwrap();
        assert_eq!(x, b);
    }

    #[test]
    fn diagonal_solve() {
        let c = ctx(60);
        let m = Matrix::from_f64(2, 2, &[2.0, 0.0, 0.0, 2.0], &c);
        let x = solve_sym(&m, &Matrix::identity(2, &c), &c).unwrap();
        assert_eq!(x, Matrix::from_f64(2, 2, &[0.5, 0.0, 0.0, 0.5], &c));
    }

    #[test]
    fn bordered_zero_corner_needs_pivoting() {
        let c = ctx(40);
        let m = Matrix::from_f64(3, 3, &[0.0, 1.0, 1.0, 1.0, 1.0, 0.5, 1.0, 0.5, 1.0], &c);
        let b = Matrix::identity(3, &c);
        let x = solve_sym(&m, &b, &c).unwrap();
        let r = m.mul(&x);
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((r.get(i, j).to_f64() - expect).abs() < 1e-35);
            }
        }
    }

    #[test]
    fn exactly_singular_reports_pivot() {
        let c = ctx(30);
        let m = Matrix::from_f64(2, 2, &[1.0, 1.0, 1.0, 1.0], &c);
        match solve_sym(&m, &Matrix::identity(2, &c), &c) {
            Err(Error::Singular { pivot, digits }) => {
                assert_eq!(pivot, 0.0);
                assert_eq!(digits, 30);
            }
            other => panic!("expected singular error, got {other:?}"),
        }
    }

    #[test]
    fn near_singular_depends_on_precision() {
        // det = 1e-40: singular at 30 digits, solvable at 60.
        let lo = ctx(30);
        let hi = ctx(60);
        let build = |c: &PrecisionContext| {
            let one = BigReal::one(c);
            let off = &one - &BigReal::parse("1e-40", c).unwrap();
            Matrix::from_fn(2, 2, |i, j| if i == j { one.clone() } else { off.clone() })
        };
        assert!(matches!(
            LuFactor::new(&build(&lo), &lo),
            Err(Error::Singular { .. })
        ));
        let f = LuFactor::new(&build(&hi), &hi).unwrap();
        assert!(f.min_pivot() < 1e-39);
        assert!(f.condition_estimate() > 1e39);
    }

    #[test]
    fn rejects_non_symmetric_and_bad_shapes() {
        let c = ctx(30);
        let m = Matrix::from_f64(2, 2, &[1.0, 2.0, 3.0, 4.0], &c);
        assert!(solve_sym(&m, &Matrix::identity(2, &c), &c).is_err());
        let sym = Matrix::identity(2, &c);
        assert!(solve_sym(&sym, &Matrix::identity(3, &c), &c).is_err());
    }
}
