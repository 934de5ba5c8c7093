//! One-dimensional minimization on a closed interval: a uniform bracketing
//! scan followed by golden-section refinement.

/// 1/phi, the golden-section shrink ratio.
const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// A sampled point; `None` marks an evaluation that failed and counts as +inf.
#[derive(Debug, Clone)]
pub struct Sample<V> {
    pub x: f64,
    pub value: Option<V>,
}

fn better<V: PartialOrd>(a: &Option<V>, b: &Option<V>) -> bool {
    match (a, b) {
        (Some(a), Some(b)) => a < b,
        (Some(_), None) => true,
        _ => false,
    }
}

/// Minimizes `f` over `[lo, hi]` starting from `(x0, f0)`.
///
/// Scans `grid` equally spaced points (endpoints included) plus `x0`, then
/// runs golden-section search between the neighbours of the best scanned
/// point until the bracket is narrower than `tol`. Returns the best point
/// seen, which is `x0` unless something strictly better turned up.
pub fn line_minimize<V, F>(mut f: F, lo: f64, hi: f64, x0: f64, f0: V, grid: usize, tol: f64) -> Sample<V>
where
    V: PartialOrd + Clone,
    F: FnMut(f64) -> Option<V>,
{
    let mut best = Sample {
        x: x0,
        value: Some(f0.clone()),
    };
    if !(hi - lo > tol) || grid < 2 {
        return best;
    }

    let mut scan: Vec<Sample<V>> = (0..grid)
        .map(|j| lo + (hi - lo) * j as f64 / (grid - 1) as f64)
        .filter(|&x| x != x0)
        .map(|x| Sample { x, value: None })
        .collect();
    scan.push(Sample {
        x: x0,
        value: Some(f0),
    });
    scan.sort_by(|a, b| a.x.total_cmp(&b.x));
    for s in scan.iter_mut().filter(|s| s.x != x0) {
        s.value = f(s.x);
    }

    let mut arg = scan.iter().position(|s| s.x == x0).expect("x0 is in the scan");
    for (j, s) in scan.iter().enumerate() {
        if better(&s.value, &scan[arg].value) {
            arg = j;
        }
    }
    if better(&scan[arg].value, &best.value) {
        best = scan[arg].clone();
    }

    let mut a = scan[arg.saturating_sub(1)].x;
    let mut b = scan[(arg + 1).min(scan.len() - 1)].x;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > tol {
        // Ties go to the left half; failed evaluations lose to anything finite.
        if better(&fc, &fd) || (fc.is_some() && !better(&fd, &fc)) {
            if better(&fc, &best.value) {
                best = Sample { x: c, value: fc.clone() };
            }
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            if better(&fd, &best.value) {
                best = Sample { x: d, value: fd.clone() };
            }
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    for (x, v) in [(c, fc), (d, fd)] {
        if better(&v, &best.value) {
            best = Sample { x, value: v };
        }
    }
    best
}
