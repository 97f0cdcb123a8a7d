//! Exact linear separability of two planar point sets.
//!
//! For a unit direction `β` let `f(β) = min_pos β·p − max_neg β·q`. The sets
//! are separable (with the `≥ 0 ↦ +1` tie rule) iff `max f > 0`. `f` is
//! piecewise sinusoidal in the angle of `β`: pieces change where two points
//! of one class tie, i.e. at normals of same-class differences, and inside a
//! piece `f = β·(p − q)` peaks at `β ∝ p − q`. Checking those directions over
//! the convex hull vertices therefore finds the exact maximum.

use crate::cells::LinearClassifier;
use crate::verification::threshold::{best_threshold_error, Orientation};

type P2 = [f64; 2];

fn cross(o: P2, a: P2, b: P2) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Convex hull vertices (monotone chain, collinear points dropped).
pub fn convex_hull(points: &[P2]) -> Vec<P2> {
    let mut pts: Vec<P2> = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() <= 2 {
        return pts;
    }
    let mut hull: Vec<P2> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &P2>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

fn dot(a: P2, b: P2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn unit(v: P2) -> Option<P2> {
    let norm = v[0].hypot(v[1]);
    (norm > 0.0 && norm.is_finite()).then(|| [v[0] / norm, v[1] / norm])
}

fn gap(beta: P2, pos: &[P2], neg: &[P2]) -> (f64, f64, f64) {
    let min_pos = pos.iter().map(|&p| dot(beta, p)).fold(f64::INFINITY, f64::min);
    let max_neg = neg.iter().map(|&q| dot(beta, q)).fold(f64::NEG_INFINITY, f64::max);
    (min_pos - max_neg, min_pos, max_neg)
}

/// Candidate directions from the hull vertices of both classes.
fn candidate_directions(hp: &[P2], hn: &[P2]) -> Vec<P2> {
    let mut dirs = Vec::new();
    for set in [hp, hn] {
        for i in 0..set.len() {
            for j in i + 1..set.len() {
                let d = [set[j][0] - set[i][0], set[j][1] - set[i][1]];
                if let Some(nrm) = unit([-d[1], d[0]]) {
                    dirs.push(nrm);
                    dirs.push([-nrm[0], -nrm[1]]);
                }
            }
        }
    }
    for &p in hp {
        for &q in hn {
            if let Some(d) = unit([p[0] - q[0], p[1] - q[1]]) {
                dirs.push(d);
            }
        }
    }
    dirs
}

/// Maximum-gap direction and its gap, if any direction exists.
pub fn max_gap_direction(pos: &[P2], neg: &[P2]) -> Option<(P2, f64)> {
    let hp = convex_hull(pos);
    let hn = convex_hull(neg);
    let mut best: Option<(P2, f64)> = None;
    for beta in candidate_directions(&hp, &hn) {
        let (g, _, _) = gap(beta, &hp, &hn);
        if best.is_none_or(|(_, bg)| g > bg) {
            best = Some((beta, g));
        }
    }
    best
}

/// A separating classifier (`β` unit length, positives score `≥ 0`,
/// negatives `< 0`) if the sets are linearly separable.
pub fn linear_separability_2d(pos: &[P2], neg: &[P2]) -> Option<LinearClassifier> {
    match (pos.is_empty(), neg.is_empty()) {
        (true, true) | (false, true) => return Some(LinearClassifier::new(vec![0.0, 0.0], 0.0)),
        (true, false) => return Some(LinearClassifier::new(vec![0.0, 0.0], -1.0)),
        _ => {}
    }
    let (beta, g) = max_gap_direction(pos, neg)?;
    if g <= 0.0 {
        return None;
    }
    let (_, min_pos, max_neg) = gap(beta, pos, neg);
    let classifier = LinearClassifier::new(beta.to_vec(), -(min_pos + max_neg) / 2.0);
    let ok = pos.iter().all(|&p| dot(beta, p) + classifier.gamma >= 0.0)
        && neg.iter().all(|&q| dot(beta, q) + classifier.gamma < 0.0);
    ok.then_some(classifier)
}

/// Lowest error found by a linear classifier: exact zero when separable,
/// otherwise the best threshold over `angles` evenly spaced directions plus
/// the exact candidate directions (an upper bound on the optimum).
pub fn best_linear_error_2d(pos: &[P2], neg: &[P2], angles: usize) -> Option<(LinearClassifier, f64)> {
    if pos.is_empty() || neg.is_empty() {
        return None;
    }
    if let Some(c) = linear_separability_2d(pos, neg) {
        return Some((c, 0.0));
    }
    let mut dirs: Vec<P2> = (0..angles)
        .map(|k| {
            let th = std::f64::consts::TAU * k as f64 / angles as f64;
            [th.cos(), th.sin()]
        })
        .collect();
    let mean = |s: &[P2]| {
        let n = s.len() as f64;
        s.iter().fold([0.0, 0.0], |a, p| [a[0] + p[0] / n, a[1] + p[1] / n])
    };
    let (mp, mn) = (mean(pos), mean(neg));
    if let Some(d) = unit([mp[0] - mn[0], mp[1] - mn[1]]) {
        dirs.push(d);
    }
    let mut best: Option<(LinearClassifier, f64)> = None;
    for beta in dirs {
        let proj = |s: &[P2]| s.iter().map(|&p| dot(beta, p)).collect::<Vec<_>>();
        let fit = best_threshold_error(&proj(pos), &proj(neg)).ok()?;
        if best.as_ref().is_none_or(|(_, e)| fit.error_rate < *e) {
            let sign = match fit.orientation {
                Orientation::PositiveAbove => 1.0,
                Orientation::PositiveBelow => -1.0,
            };
            let c = LinearClassifier::new(vec![sign * beta[0], sign * beta[1]], -sign * fit.threshold);
            best = Some((c, fit.error_rate));
        }
    }
    best
}
