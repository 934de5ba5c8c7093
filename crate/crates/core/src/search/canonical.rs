use std::cmp::Ordering;

use crate::kernel::{CovarianceParams, Design};

/// Canonical representative of a design's symmetry orbit.
///
/// The orbit is generated by per-factor sign flips, permutations of factors
/// that share the same `theta`, and row permutations. Non-twin rows are
/// sorted lexicographically; a twin pair stays in the last two rows, ordered
/// lexicographically as well. Among all transforms, the one giving the
/// lexicographically smallest flattened matrix wins.
pub fn canonicalize(design: &Design, params: &CovarianceParams) -> Design {
    let d = design.dim();
    let perms = factor_permutations(params.theta());
    let mut best: Option<(Vec<f64>, Design)> = None;
    for perm in &perms {
        let permuted = apply_factor_permutation(design, perm);
        for mask in 0u32..(1 << d) {
            let mut candidate = permuted.clone();
            for k in 0..d {
                if mask & (1 << k) != 0 {
                    candidate = candidate.reflect(k);
                }
            }
            let candidate = sort_rows(&candidate);
            let key = flatten(&candidate);
            let replace = match &best {
                None => true,
                Some((k, _)) => lex_cmp(&key, k) == Ordering::Less,
            };
            if replace {
                best = Some((key, candidate));
            }
        }
    }
    best.expect("at least the identity transform").1
}

fn factor_permutations(theta: &[f64]) -> Vec<Vec<usize>> {
    let d = theta.len();
    let mut out = Vec::new();
    let mut current: Vec<usize> = Vec::with_capacity(d);
    let mut used = vec![false; d];
    fn rec(theta: &[f64], current: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        let k = current.len();
        if k == theta.len() {
            out.push(current.clone());
            return;
        }
        for src in 0..theta.len() {
            // Only factors with identical theta may trade places.
            if !used[src] && theta[src] == theta[k] {
                used[src] = true;
                current.push(src);
                rec(theta, current, used, out);
                current.pop();
                used[src] = false;
            }
        }
    }
    rec(theta, &mut current, &mut used, &mut out);
    out
}

fn apply_factor_permutation(design: &Design, perm: &[usize]) -> Design {
    // Realize the permutation as a sequence of swaps.
    let mut out = design.clone();
    let mut position: Vec<usize> = (0..perm.len()).collect();
    for target in 0..perm.len() {
        let at = position.iter().position(|&p| p == perm[target]).expect("valid permutation");
        if at != target {
            out = out.swap_factors(target, at);
            position.swap(target, at);
        }
    }
    out
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    a.len().cmp(&b.len())
}

fn clean(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x
    }
}

fn sort_rows(design: &Design) -> Design {
    let n = design.n();
    let mut order: Vec<usize> = match design.twin_rows() {
        Some((a, _)) => (0..a).collect(),
        None => (0..n).collect(),
    };
    let row = |i: usize| -> Vec<f64> { design.point(i).iter().map(|&x| clean(x)).collect() };
    order.sort_by(|&i, &j| lex_cmp(&row(i), &row(j)));
    match design.twin_rows() {
        Some((a, b)) => {
            let others: Vec<Vec<f64>> = order.iter().map(|&i| row(i)).collect();
            let twin = design.twin().expect("twin rows imply twin spec");
            let barycenter: Vec<f64> = twin.barycenter.iter().map(|&x| clean(x)).collect();
            let mut delta: Vec<f64> = twin.delta.iter().map(|&x| clean(x)).collect();
            if lex_cmp(&row(a), &row(b)) == Ordering::Greater {
                delta = delta.iter().map(|&x| clean(-x)).collect();
            }
            Design::with_twin(others, barycenter, delta).expect("transform preserves validity")
        }
        None => Design::new(order.iter().map(|&i| row(i)).collect()).expect("transform preserves validity"),
    }
}

fn flatten(design: &Design) -> Vec<f64> {
    design.points().iter().flatten().copied().collect()
}
