use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::Design;

/// Geometric phase of an N = 4, D = 2 design.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PhaseLabel {
    FourInLine,
    RhomboidWithTwins,
    Rhomboid,
    Rectangle,
    Square,
    Unclassified,
}

impl PhaseLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            PhaseLabel::FourInLine => "FOUR_IN_LINE",
            PhaseLabel::RhomboidWithTwins => "RHOMBOID_WITH_TWINS",
            PhaseLabel::Rhomboid => "RHOMBOID",
            PhaseLabel::Rectangle => "RECTANGLE",
            PhaseLabel::Square => "SQUARE",
            PhaseLabel::Unclassified => "UNCLASSIFIED",
        }
    }

    /// Position in the sequence four-in-line, rhomboid with twins, rhomboid,
    /// rectangle, square met as the smaller correlation parameter grows
    /// towards the larger one.
    pub fn rank(&self) -> Option<usize> {
        match self {
            PhaseLabel::FourInLine => Some(0),
            PhaseLabel::RhomboidWithTwins => Some(1),
            PhaseLabel::Rhomboid => Some(2),
            PhaseLabel::Rectangle => Some(3),
            PhaseLabel::Square => Some(4),
            PhaseLabel::Unclassified => None,
        }
    }
}

impl std::fmt::Display for PhaseLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for PhaseLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "FOUR_IN_LINE" => PhaseLabel::FourInLine,
            "RHOMBOID_WITH_TWINS" => PhaseLabel::RhomboidWithTwins,
            "RHOMBOID" => PhaseLabel::Rhomboid,
            "RECTANGLE" => PhaseLabel::Rectangle,
            "SQUARE" => PhaseLabel::Square,
            "UNCLASSIFIED" => PhaseLabel::Unclassified,
            other => return Err(Error::InvalidConfig(format!("unknown phase label {other:?}"))),
        })
    }
}

/// Tolerances of [`classify`], in domain units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifyTol {
    /// Coordinates closer than this are taken as equal.
    pub tol: f64,
    /// Two points closer than this in every factor form a twin pair.
    pub twin_tol: f64,
}

impl Default for ClassifyTol {
    fn default() -> Self {
        Self {
            tol: 1e-5,
            twin_tol: 1e-3,
        }
    }
}

/// Labels a centered N = 4, D = 2 design by its geometry.
///
/// Twins are looked for first, so a rhombus whose twins sit on the line of
/// the other two points is not mistaken for four points in line.
pub fn classify(design: &Design, tol: &ClassifyTol) -> Result<PhaseLabel> {
    if design.n() != 4 || design.dim() != 2 {
        return Err(Error::Unsupported(format!(
            "classification needs N = 4 and D = 2, got N = {} and D = {}",
            design.n(),
            design.dim()
        )));
    }
    if !(tol.tol > 0.0 && tol.twin_tol > 0.0) {
        return Err(Error::InvalidConfig("classification tolerances must be positive".into()));
    }
    let p: Vec<[f64; 2]> = design.points().iter().map(|r| [r[0], r[1]]).collect();
    let close = |a: f64, b: f64| (a - b).abs() <= tol.tol;

    let twins: Vec<(usize, usize)> = (0..4)
        .flat_map(|i| ((i + 1)..4).map(move |j| (i, j)))
        .filter(|&(i, j)| (0..2).all(|k| (p[i][k] - p[j][k]).abs() < tol.twin_tol))
        .collect();
    match twins.len() {
        0 => {}
        1 => {
            let (i, j) = twins[0];
            let others: Vec<[f64; 2]> = (0..4).filter(|&r| r != i && r != j).map(|r| p[r]).collect();
            let bary = [(p[i][0] + p[j][0]) / 2.0, (p[i][1] + p[j][1]) / 2.0];
            let centered = close(bary[0], 0.0) && close(bary[1], 0.0);
            let opposite = close(others[0][0], -others[1][0]) && close(others[0][1], -others[1][1]);
            let on_axis = (0..2).any(|k| close(others[0][k], 0.0) && close(others[1][k], 0.0));
            let spread = others[0][0].abs().max(others[0][1].abs()) >= tol.twin_tol;
            return Ok(if centered && opposite && on_axis && spread {
                PhaseLabel::RhomboidWithTwins
            } else {
                PhaseLabel::Unclassified
            });
        }
        _ => return Ok(PhaseLabel::Unclassified),
    }

    for k in 0..2 {
        let (lo, hi) = p.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), q| {
            (lo.min(q[k]), hi.max(q[k]))
        });
        if hi - lo <= tol.tol {
            return Ok(PhaseLabel::FourInLine);
        }
    }

    if let Some((a, b)) = axis_rectangle(&p, tol.tol) {
        return Ok(if close(a, b) {
            PhaseLabel::Square
        } else {
            PhaseLabel::Rectangle
        });
    }
    if let Some((a, b)) = axis_rhombus(&p, tol.tol) {
        if !close(a, b) {
            return Ok(PhaseLabel::Rhomboid);
        }
    }
    Ok(PhaseLabel::Unclassified)
}

/// Half-sides `(a, b)` if the points are `(±a, ±b)` with all four sign
/// combinations present.
fn axis_rectangle(p: &[[f64; 2]], tol: f64) -> Option<(f64, f64)> {
    let a = p.iter().map(|q| q[0].abs()).sum::<f64>() / 4.0;
    let b = p.iter().map(|q| q[1].abs()).sum::<f64>() / 4.0;
    if a <= tol || b <= tol {
        return None;
    }
    let mut seen = [false; 4];
    for q in p {
        if (q[0].abs() - a).abs() > tol || (q[1].abs() - b).abs() > tol {
            return None;
        }
        seen[usize::from(q[0] > 0.0) * 2 + usize::from(q[1] > 0.0)] = true;
    }
    seen.iter().all(|&s| s).then_some((a, b))
}

/// Half-diagonals `(a, b)` if the points are `(±a, 0)` and `(0, ±b)`.
fn axis_rhombus(p: &[[f64; 2]], tol: f64) -> Option<(f64, f64)> {
    let on1: Vec<f64> = p.iter().filter(|q| q[1].abs() <= tol && q[0].abs() > tol).map(|q| q[0]).collect();
    let on2: Vec<f64> = p.iter().filter(|q| q[0].abs() <= tol && q[1].abs() > tol).map(|q| q[1]).collect();
    if on1.len() != 2 || on2.len() != 2 {
        return None;
    }
    let symmetric = |v: &[f64]| (v[0] + v[1]).abs() <= tol;
    if !symmetric(&on1) || !symmetric(&on2) {
        return None;
    }
    Some((on1[0].abs(), on2[0].abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn label(points: &[[f64; 2]]) -> PhaseLabel {
        let d = Design::new(points.iter().map(|p| p.to_vec()).collect()).unwrap();
        classify(&d, &ClassifyTol::default()).unwrap()
    }

    #[test]
    fn reference_shapes() {
        assert_eq!(
            label(&[[0.0, 1e-7], [0.0, -1e-7], [-0.767117, 0.0], [0.767117, 0.0]]),
            PhaseLabel::RhomboidWithTwins
        );
        assert_eq!(
            label(&[[0.5, 0.5], [-0.5, 0.5], [0.5, -0.5], [-0.5, -0.5]]),
            PhaseLabel::Square
        );
        assert_eq!(
            label(&[[0.6, 0.0], [-0.6, 0.0], [0.2, 0.0], [-0.2, 0.0]]),
            PhaseLabel::FourInLine
        );
        assert_eq!(
            label(&[[0.7, 0.3], [-0.7, 0.3], [0.7, -0.3], [-0.7, -0.3]]),
            PhaseLabel::Rectangle
        );
        assert_eq!(
            label(&[[0.7, 0.0], [-0.7, 0.0], [0.0, 0.3], [0.0, -0.3]]),
            PhaseLabel::Rhomboid
        );
    }

    #[test]
    fn irregular_shapes_are_unclassified() {
        assert_eq!(
            label(&[[0.1, 0.2], [-0.5, 0.3], [0.6, -0.7], [0.0, 0.9]]),
            PhaseLabel::Unclassified
        );
        // A square turned by 45 degrees has equal diagonals.
        assert_eq!(
            label(&[[0.5, 0.0], [-0.5, 0.0], [0.0, 0.5], [0.0, -0.5]]),
            PhaseLabel::Unclassified
        );
        // Twins off the center.
        assert_eq!(
            label(&[[0.3, 1e-7], [0.3, -1e-7], [-0.767117, 0.0], [0.767117, 0.0]]),
            PhaseLabel::Unclassified
        );
    }

    #[test]
    fn mirror_phases_share_labels() {
        let twins = [[1e-7, 0.0], [-1e-7, 0.0], [0.0, -0.767117], [0.0, 0.767117]];
        assert_eq!(label(&twins), PhaseLabel::RhomboidWithTwins);
        let line = [[0.0, 0.6], [0.0, -0.6], [0.0, 0.2], [0.0, -0.2]];
        assert_eq!(label(&line), PhaseLabel::FourInLine);
    }

    #[test]
    fn shape_requirements() {
        let d = Design::new(vec![vec![0.0, 0.0]; 3]).unwrap();
        assert!(matches!(classify(&d, &ClassifyTol::default()), Err(Error::Unsupported(_))));
        let ok = Design::new(vec![vec![0.5, 0.5], vec![-0.5, 0.5], vec![0.5, -0.5], vec![-0.5, -0.5]]).unwrap();
        let bad = ClassifyTol { tol: 0.0, twin_tol: 1e-3 };
        assert!(classify(&ok, &bad).is_err());
    }

    #[test]
    fn label_text_round_trips() {
        for l in [
            PhaseLabel::FourInLine,
            PhaseLabel::RhomboidWithTwins,
            PhaseLabel::Rhomboid,
            PhaseLabel::Rectangle,
            PhaseLabel::Square,
            PhaseLabel::Unclassified,
        ] {
            assert_eq!(l.as_str().parse::<PhaseLabel>().unwrap(), l);
        }
    }
}
