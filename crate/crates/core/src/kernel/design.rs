use rug::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A twin pair stored as barycenter plus half-offset. The twins occupy the
/// last two rows of the design: `x_t + delta` then `x_t - delta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwinSpec {
    pub barycenter: Vec<f64>,
    pub delta: Vec<f64>,
}

impl TwinSpec {
    /// Coordinate `k` of the first (`sign = +1`) or second (`sign = -1`)
    /// twin, rounded to `bits`.
    pub fn coordinate_hp(&self, k: usize, sign: i32, bits: u32) -> Float {
        let xt = Float::with_val(bits, self.barycenter[k]);
        if sign >= 0 {
            xt + self.delta[k]
        } else {
            xt - self.delta[k]
        }
    }

    pub fn is_zero_offset(&self) -> bool {
        self.delta.iter().all(|&d| d == 0.0)
    }
}

/// An N-point design on `[-1, 1]^D`, optionally ending in a twin pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Design {
    points: Vec<Vec<f64>>,
    twin: Option<TwinSpec>,
}

impl Design {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let design = Self { points, twin: None };
        design.validate()?;
        Ok(design)
    }

    /// Design whose first rows are `others` and whose last two rows are the
    /// twins `barycenter ± delta`.
    pub fn with_twin(others: Vec<Vec<f64>>, barycenter: Vec<f64>, delta: Vec<f64>) -> Result<Self> {
        if barycenter.len() != delta.len() {
            return Err(Error::InvalidDesign(format!(
                "twin barycenter has {} coordinates but delta has {}",
                barycenter.len(),
                delta.len()
            )));
        }
        let twin = TwinSpec { barycenter, delta };
        let mut points = others;
        let d = twin.barycenter.len();
        points.push((0..d).map(|k| twin.coordinate_hp(k, 1, 53).to_f64()).collect());
        points.push((0..d).map(|k| twin.coordinate_hp(k, -1, 53).to_f64()).collect());
        let design = Self {
            points,
            twin: Some(twin),
        };
        design.validate()?;
        Ok(design)
    }

    fn validate(&self) -> Result<()> {
        let n = self.points.len();
        if n == 0 {
            return Err(Error::InvalidDesign("design has no points".into()));
        }
        let d = self.points[0].len();
        if d == 0 {
            return Err(Error::InvalidDesign("design has zero factors".into()));
        }
        for (i, p) in self.points.iter().enumerate() {
            if p.len() != d {
                return Err(Error::InvalidDesign(format!(
                    "point {} has {} coordinates, expected {d}",
                    i + 1,
                    p.len()
                )));
            }
            for (k, &x) in p.iter().enumerate() {
                if !x.is_finite() || !(-1.0..=1.0).contains(&x) {
                    return Err(Error::InvalidDesign(format!(
                        "coordinate x[{},{}] = {x} lies outside [-1, 1]",
                        i + 1,
                        k + 1
                    )));
                }
            }
        }
        if let Some(twin) = &self.twin {
            if n < 2 {
                return Err(Error::InvalidDesign("a twin pair needs two rows".into()));
            }
            if twin.barycenter.len() != d {
                return Err(Error::InvalidDesign(format!(
                    "twin barycenter has {} coordinates, expected {d}",
                    twin.barycenter.len()
                )));
            }
            for k in 0..d {
                let (xt, dk) = (twin.barycenter[k], twin.delta[k]);
                if !xt.is_finite() || !dk.is_finite() {
                    return Err(Error::InvalidDesign("non-finite twin parameters".into()));
                }
                // Exact check of |x_t| + |delta| <= 1 in extended precision.
                let reach = Float::with_val(2200, xt.abs()) + dk.abs();
                if reach > 1 {
                    return Err(Error::InvalidDesign(format!(
                        "twin x_t ± delta leaves the domain in factor {}",
                        k + 1
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    pub fn twin(&self) -> Option<&TwinSpec> {
        self.twin.as_ref()
    }

    /// Row indices of the twin pair, if any.
    pub fn twin_rows(&self) -> Option<(usize, usize)> {
        self.twin.as_ref().map(|_| (self.n() - 2, self.n() - 1))
    }

    /// Coordinate `(i, k)` in extended precision. Twin rows are rebuilt from
    /// barycenter and offset rather than read from the rounded `f64` rows.
    pub fn coordinate_hp(&self, i: usize, k: usize, bits: u32) -> Float {
        match (self.twin_rows(), &self.twin) {
            (Some((a, _)), Some(t)) if i == a => t.coordinate_hp(k, 1, bits),
            (Some((_, b)), Some(t)) if i == b => t.coordinate_hp(k, -1, bits),
            _ => Float::with_val(bits, self.points[i][k]),
        }
    }

    /// Drops the twin parameterization, keeping the rounded coordinates.
    pub fn without_twin(&self) -> Self {
        Self {
            points: self.points.clone(),
            twin: None,
        }
    }

    /// Copy with raw coordinate `(i, k)` replaced. Twin rows cannot be edited
    /// this way.
    pub fn with_coordinate(&self, i: usize, k: usize, value: f64) -> Result<Self> {
        if let Some((a, b)) = self.twin_rows() {
            if i == a || i == b {
                return Err(Error::InvalidDesign(
                    "twin rows are moved through their barycenter and offset".into(),
                ));
            }
        }
        let mut out = self.clone();
        out.points[i][k] = value;
        out.validate()?;
        Ok(out)
    }

    /// Copy with twin barycenter and offset replaced.
    pub fn with_twin_params(&self, barycenter: Vec<f64>, delta: Vec<f64>) -> Result<Self> {
        let (a, _) = self
            .twin_rows()
            .ok_or_else(|| Error::InvalidDesign("design has no twin pair".into()))?;
        Self::with_twin(self.points[..a].to_vec(), barycenter, delta)
    }

    /// Re-expresses rows `i` and `j` as a twin pair (moved to the end).
    pub fn into_twin(&self, i: usize, j: usize) -> Result<Self> {
        if self.twin.is_some() {
            return Err(Error::Unsupported("at most one twin pair per design".into()));
        }
        if i == j || i >= self.n() || j >= self.n() {
            return Err(Error::InvalidDesign(format!("invalid twin rows ({i}, {j})")));
        }
        let d = self.dim();
        let (pi, pj) = (&self.points[i], &self.points[j]);
        let mut barycenter = Vec::with_capacity(d);
        let mut delta = Vec::with_capacity(d);
        for k in 0..d {
            let mid = (pi[k] + pj[k]) / 2.0;
            barycenter.push(mid);
            delta.push((pi[k] - pj[k]) / 2.0);
        }
        let others = self
            .points
            .iter()
            .enumerate()
            .filter(|(r, _)| *r != i && *r != j)
            .map(|(_, p)| p.clone())
            .collect();
        Self::with_twin(others, barycenter, delta)
    }

    /// Negates factor `k` of every point (and of the twin parameters).
    pub fn reflect(&self, k: usize) -> Self {
        let mut out = self.clone();
        for p in &mut out.points {
            p[k] = -p[k];
        }
        if let Some(t) = &mut out.twin {
            t.barycenter[k] = -t.barycenter[k];
            t.delta[k] = -t.delta[k];
        }
        out
    }

    /// Exchanges factors `a` and `b` in every point.
    pub fn swap_factors(&self, a: usize, b: usize) -> Self {
        let mut out = self.clone();
        for p in &mut out.points {
            p.swap(a, b);
        }
        if let Some(t) = &mut out.twin {
            t.barycenter.swap(a, b);
            t.delta.swap(a, b);
        }
        out
    }

    /// Reorders rows: row `r` of the result is row `order[r]` of `self`.
    /// A twin pair survives only if it stays in the last two rows.
    pub fn permute_rows(&self, order: &[usize]) -> Result<Self> {
        let n = self.n();
        let mut seen = vec![false; n];
        if order.len() != n || order.iter().any(|&r| r >= n || std::mem::replace(&mut seen[r], true)) {
            return Err(Error::InvalidDesign("row order is not a permutation".into()));
        }
        let points = order.iter().map(|&r| self.points[r].clone()).collect();
        let twin = match (&self.twin, self.twin_rows()) {
            (Some(t), Some((a, b))) if order[n - 2] == a && order[n - 1] == b => Some(t.clone()),
            (Some(t), Some((a, b))) if order[n - 2] == b && order[n - 1] == a => Some(TwinSpec {
                barycenter: t.barycenter.clone(),
                delta: t.delta.iter().map(|d| -d).collect(),
            }),
            _ => None,
        };
        Ok(Self { points, twin })
    }

    /// Finds the first pair of rows that coincide exactly (in extended
    /// precision for twin rows).
    pub fn exact_duplicate(&self) -> Option<(usize, usize)> {
        if let Some(t) = &self.twin {
            if t.is_zero_offset() {
                let (a, b) = self.twin_rows().expect("twin rows");
                return Some((a, b));
            }
        }
        let twin_rows = self.twin_rows();
        for i in 0..self.n() {
            for j in (i + 1)..self.n() {
                if twin_rows == Some((i, j)) {
                    continue;
                }
                let same = if twin_rows.is_some_and(|(a, b)| [a, b].contains(&i) || [a, b].contains(&j)) {
                    (0..self.dim()).all(|k| self.coordinate_hp(i, k, 2200) == self.coordinate_hp(j, k, 2200))
                } else {
                    self.points[i] == self.points[j]
                };
                if same {
                    return Some((i, j));
                }
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rwt(delta: f64) -> Design {
        Design::with_twin(
            vec![vec![-0.767117, 0.0], vec![0.767117, 0.0]],
            vec![0.0, 0.0],
            vec![0.0, delta],
        )
        .unwrap()
    }

    #[test]
    fn rejects_out_of_domain_and_ragged() {
        assert!(Design::new(vec![]).is_err());
        assert!(Design::new(vec![vec![]]).is_err());
        assert!(Design::new(vec![vec![0.0, 1.5]]).is_err());
        assert!(Design::new(vec![vec![0.0, 0.5], vec![0.1]]).is_err());
        assert!(Design::new(vec![vec![f64::NAN]]).is_err());
        let err = Design::new(vec![vec![0.0, 0.0], vec![0.2, -1.01]]).unwrap_err();
        assert!(err.to_string().contains("x[2,2]"), "{err}");
    }

    #[test]
    fn twin_rows_are_barycenter_plus_minus_delta() {
        let d = rwt(1e-6);
        assert_eq!(d.n(), 4);
        assert_eq!(d.twin_rows(), Some((2, 3)));
        assert_eq!(d.point(2), &[0.0, 1e-6]);
        assert_eq!(d.point(3), &[0.0, -1e-6]);
        let hp = d.coordinate_hp(2, 1, 300);
        assert_eq!(hp, 1e-6);
    }

    #[test]
    fn twin_must_stay_in_domain() {
        assert!(Design::with_twin(vec![], vec![0.9, 0.0], vec![0.2, 0.0]).is_err());
        assert!(Design::with_twin(vec![], vec![0.5, 0.0], vec![0.5, 0.0]).is_ok());
    }

    #[test]
    fn exact_duplicates_detected() {
        let d = Design::new(vec![vec![0.1, 0.2], vec![0.3, 0.4], vec![0.1, 0.2]]).unwrap();
        assert_eq!(d.exact_duplicate(), Some((0, 2)));
        assert_eq!(rwt(1e-6).exact_duplicate(), None);
        assert_eq!(rwt(0.0).exact_duplicate(), Some((2, 3)));
        let near = Design::new(vec![vec![0.1, 0.2], vec![0.1, 0.2 + 1e-15]]).unwrap();
        assert_eq!(near.exact_duplicate(), None);
    }

    #[test]
    fn into_twin_round_trips_coordinates() {
        let d = Design::new(vec![vec![0.25, -0.5], vec![-0.75, 0.5], vec![0.25, -0.5 + 2f64.powi(-20)]]).unwrap();
        let t = d.into_twin(0, 2).unwrap();
        assert_eq!(t.point(0), &[-0.75, 0.5]);
        assert_eq!(t.point(1), d.point(0));
        assert_eq!(t.point(2), d.point(2));
    }

    #[test]
    fn permutation_keeps_or_flips_twin() {
        let d = rwt(1e-3);
        let swapped = d.permute_rows(&[1, 0, 3, 2]).unwrap();
        assert_eq!(swapped.twin().unwrap().delta, vec![0.0, -1e-3]);
        let broken = d.permute_rows(&[2, 0, 1, 3]).unwrap();
        assert!(broken.twin().is_none());
        assert!(d.permute_rows(&[0, 0, 1, 2]).is_err());
    }
}
