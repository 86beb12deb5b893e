use alloc::vec;
use alloc::vec::Vec;

use crate::math;

const SMALL: usize = 16;

fn dist(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    math::hypot(b[0] - a[0], b[1] - a[1])
}

/// Total length of the open path visiting `points` in `order`.
pub fn path_length(points: &[[f64; 2]], order: &[usize]) -> f64 {
    order
        .windows(2)
        .map(|w| dist(&points[w[0]], &points[w[1]]))
        .sum()
}

/// Visiting order for an open path through every point.
///
/// Nearest-neighbour construction from the leftmost (then lowest) point, refined by 2-opt
/// segment reversals and by relocating runs of points, until neither move shortens the
/// path. Moves touching the free ends of the path are included. Inputs of at most 16
/// points also try every other starting point and keep the shortest result.
pub fn tsp_order(points: &[[f64; 2]]) -> Vec<usize> {
    let n = points.len();
    if n <= 2 {
        return (0..n).collect();
    }
    let leftmost = (0..n)
        .min_by(|&a, &b| {
            let (pa, pb) = (&points[a], &points[b]);
            pa[0].total_cmp(&pb[0]).then(pa[1].total_cmp(&pb[1]))
        })
        .unwrap_or(0);
    let mut best = improve(points, nearest_neighbour(points, leftmost));
    if n <= SMALL {
        let mut best_len = path_length(points, &best);
        for start in (0..n).filter(|&s| s != leftmost) {
            let order = improve(points, nearest_neighbour(points, start));
            let len = path_length(points, &order);
            if len < best_len - 1e-12 * best_len {
                best = order;
                best_len = len;
            }
        }
    }
    best
}

fn improve(points: &[[f64; 2]], mut order: Vec<usize>) -> Vec<usize> {
    loop {
        two_opt(points, &mut order);
        if !or_opt(points, &mut order) {
            return order;
        }
    }
}

fn nearest_neighbour(points: &[[f64; 2]], start: usize) -> Vec<usize> {
    let n = points.len();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut cur = start;
    visited[cur] = true;
    order.push(cur);
    for _ in 1..n {
        let mut best = usize::MAX;
        let mut best_d = f64::INFINITY;
        for (j, seen) in visited.iter().enumerate() {
            if !seen {
                let d = dist(&points[cur], &points[j]);
                if d < best_d {
                    best_d = d;
                    best = j;
                }
            }
        }
        visited[best] = true;
        order.push(best);
        cur = best;
    }
    order
}

fn two_opt(points: &[[f64; 2]], order: &mut [usize]) {
    let n = order.len();
    let p = |k: usize, order: &[usize]| points[order[k]];
    loop {
        let mut improved = false;
        for i in 0..n - 1 {
            for j in i + 1..n {
                // Reversing order[i..=j] swaps edges (i-1, i) and (j, j+1) for (i-1, j) and
                // (i, j+1); a missing edge at a free end costs nothing.
                let (pi, pj) = (p(i, order), p(j, order));
                let mut before = 0.0;
                let mut after = 0.0;
                if i > 0 {
                    let a = p(i - 1, order);
                    before += dist(&a, &pi);
                    after += dist(&a, &pj);
                }
                if j + 1 < n {
                    let b = p(j + 1, order);
                    before += dist(&pj, &b);
                    after += dist(&pi, &b);
                }
                if after < before - 1e-12 * (1.0 + before) {
                    order[i..=j].reverse();
                    improved = true;
                }
            }
        }
        if !improved {
            return;
        }
    }
}

// Move runs of consecutive points, possibly reversed, to their best other slot. Runs are up
// to three points long, or any length on small inputs. Returns whether anything moved.
fn or_opt(points: &[[f64; 2]], order: &mut Vec<usize>) -> bool {
    let n = order.len();
    let d = |a: usize, b: usize| dist(&points[a], &points[b]);
    let mut moved = false;
    let max_len = if n <= SMALL { n - 1 } else { 3 };
    for len in 1..=max_len {
        let mut i = 0;
        while i + len <= n {
            let (first, last) = (order[i], order[i + len - 1]);
            let prev = (i > 0).then(|| order[i - 1]);
            let next = (i + len < n).then(|| order[i + len]);
            let mut removal = 0.0;
            if let Some(p) = prev {
                removal += d(p, first);
            }
            if let Some(q) = next {
                removal += d(last, q);
            }
            if let (Some(p), Some(q)) = (prev, next) {
                removal -= d(p, q);
            }
            // Remaining sequence with the run taken out, indexed 0..n - len.
            let rest = |k: usize| if k < i { order[k] } else { order[k + len] };
            let m = n - len;
            let mut best = (0.0, 0usize, false);
            for slot in 0..=m {
                if slot == i {
                    continue;
                }
                let a = (slot > 0).then(|| rest(slot - 1));
                let b = (slot < m).then(|| rest(slot));
                for reversed in [false, true] {
                    let (head, tail) = if reversed { (last, first) } else { (first, last) };
                    let mut add = 0.0;
                    if let Some(a) = a {
                        add += d(a, head);
                    }
                    if let Some(b) = b {
                        add += d(tail, b);
                    }
                    if let (Some(a), Some(b)) = (a, b) {
                        add -= d(a, b);
                    }
                    let gain = removal - add;
                    if gain > best.0 {
                        best = (gain, slot, reversed);
                    }
                }
            }
            if best.0 > 1e-12 * (1.0 + removal.abs()) {
                let mut run: Vec<usize> = order.drain(i..i + len).collect();
                if best.2 {
                    run.reverse();
                }
                let slot = best.1;
                order.splice(slot..slot, run);
                moved = true;
            } else {
                i += 1;
            }
        }
    }
    moved
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_force(points: &[[f64; 2]]) -> f64 {
        let mut idx: Vec<usize> = (0..points.len()).collect();
        let mut best = f64::INFINITY;
        permute(&mut idx, 0, points, &mut best);
        best
    }

    fn permute(idx: &mut [usize], k: usize, points: &[[f64; 2]], best: &mut f64) {
        if k == idx.len() {
            *best = best.min(path_length(points, idx));
            return;
        }
        for i in k..idx.len() {
            idx.swap(k, i);
            permute(idx, k + 1, points, best);
            idx.swap(k, i);
        }
    }

    fn is_permutation(order: &[usize], n: usize) -> bool {
        let mut seen = vec![false; n];
        order.len() == n && order.iter().all(|&i| i < n && !core::mem::replace(&mut seen[i], true))
    }

    #[test]
    fn single_and_empty() {
        assert_eq!(tsp_order(&[]), Vec::<usize>::new());
        assert_eq!(tsp_order(&[[0.3, 0.4]]), vec![0]);
    }

    #[test]
    fn collinear_points_are_swept_in_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut xs: Vec<f64> = (0..30).map(|i| i as f64 * 0.1).collect();
        xs.shuffle(&mut rng);
        let pts: Vec<[f64; 2]> = xs.iter().map(|&x| [x, 2.0 * x + 1.0]).collect();
        let order = tsp_order(&pts);
        let swept: Vec<f64> = order.iter().map(|&i| pts[i][0]).collect();
        assert!(swept.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn small_instances_near_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut worst = 1.0f64;
        let mut over = 0;
        let trials = 2000;
        for _ in 0..trials {
            let n = rng.random_range(3..=8);
            let pts: Vec<[f64; 2]> = (0..n).map(|_| [rng.random(), rng.random()]).collect();
            let order = tsp_order(&pts);
            assert!(is_permutation(&order, n));
            let ratio = path_length(&pts, &order) / brute_force(&pts);
            worst = worst.max(ratio);
            if ratio > 1.05 {
                over += 1;
            }
        }
        std::println!("worst ratio {worst}, {over} of {trials} above 1.05");
        // A local search gives no worst-case bound; require the tail to be rare.
        assert!(over * 200 <= trials, "{over} of {trials} above 1.05");
    }

    #[test]
    fn two_opt_never_lengthens() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let pts: Vec<[f64; 2]> = (0..40).map(|_| [rng.random(), rng.random()]).collect();
            let mut order = nearest_neighbour(&pts, 0);
            let before = path_length(&pts, &order);
            two_opt(&pts, &mut order);
            assert!(path_length(&pts, &order) <= before);
        }
    }

    proptest! {
        #[test]
        fn output_is_permutation(pts in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 0..60)) {
            let pts: Vec<[f64; 2]> = pts.into_iter().map(|(x, y)| [x, y]).collect();
            let order = tsp_order(&pts);
            prop_assert!(is_permutation(&order, pts.len()));
        }
    }
}
