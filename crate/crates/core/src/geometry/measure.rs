//! Volume and barycenter of a polytope face by cone decomposition.
//!
//! A k-face is described by its vertex ids and the facet-incidence sets of those
//! vertices. Its (k-1)-faces are the maximal vertex subsets sharing one more
//! facet whose affine hull is (k-1)-dimensional. The face is then the union of
//! cones from the vertex average over those sub-faces, and each cone's measure
//! and centroid follow from the sub-face's by recursion down to segments.
//!
//! All arithmetic stays in ambient coordinates: distances to affine hulls are
//! intrinsic, so no per-face change of basis is needed.

use crate::linalg::{affine_basis, dist, mean, norm};

/// Sub-faces thinner than this are treated as lower-dimensional and dropped.
///
/// A cone over a dropped sub-face of size `l` loses measure linear in `l`, so
/// the tolerance must stay below the accuracy wanted from the measure.
pub(crate) const RANK_TOL: f64 = 1e-8;

pub(crate) fn face_measure(
    points: &[Vec<f64>],
    incidence: &[Vec<u32>],
    ids: &[usize],
    k: usize,
    rank_tol: f64,
) -> (f64, Vec<f64>) {
    let dim = points.first().map_or(0, |p| p.len());
    match k {
        0 => (1.0, points[ids[0]].clone()),
        1 => segment_measure(points, ids),
        _ => {
            let apex = mean(dim, ids.iter().map(|&i| points[i].as_slice()));
            let mut total = 0.0;
            let mut moment = vec![0.0; dim];
            for sub in subfaces(points, incidence, ids, k, rank_tol) {
                let (origin, basis) =
                    affine_basis(sub.iter().map(|&i| points[i].as_slice()), rank_tol);
                let origin = origin.expect("sub-face is nonempty");
                let offset: Vec<f64> = apex.iter().zip(&origin).map(|(a, o)| a - o).collect();
                let height = norm(&basis.residual(&offset));
                if height <= 0.0 {
                    continue;
                }
                let (sub_measure, sub_centroid) = face_measure(points, incidence, &sub, k - 1, rank_tol);
                let cone = height * sub_measure / k as f64;
                // centroid of a cone sits k/(k+1) of the way from apex to base centroid
                let t = k as f64 / (k as f64 + 1.0);
                for ((m, a), c) in moment.iter_mut().zip(&apex).zip(&sub_centroid) {
                    *m += cone * (a + t * (c - a));
                }
                total += cone;
            }
            if total > 0.0 {
                moment.iter_mut().for_each(|m| *m /= total);
                (total, moment)
            } else {
                (0.0, apex)
            }
        }
    }
}

fn segment_measure(points: &[Vec<f64>], ids: &[usize]) -> (f64, Vec<f64>) {
    let mut best = (0.0, ids[0], ids[0]);
    for (a, &i) in ids.iter().enumerate() {
        for &j in &ids[a + 1..] {
            let d = dist(&points[i], &points[j]);
            if d > best.0 {
                best = (d, i, j);
            }
        }
    }
    let (len, i, j) = best;
    let mid = points[i]
        .iter()
        .zip(&points[j])
        .map(|(a, b)| 0.5 * (a + b))
        .collect();
    (len, mid)
}

/// Maximal vertex subsets of the face that span a (k-1)-dimensional affine hull
/// and share a facet not containing the whole face.
fn subfaces(
    points: &[Vec<f64>],
    incidence: &[Vec<u32>],
    ids: &[usize],
    k: usize,
    rank_tol: f64,
) -> Vec<Vec<usize>> {
    let mut candidates: Vec<u32> = ids
        .iter()
        .flat_map(|&i| incidence[i].iter().copied())
        .collect();
    candidates.sort_unstable();
    candidates.dedup();

    let mut subs: Vec<Vec<usize>> = Vec::new();
    for g in candidates {
        let sub: Vec<usize> = ids
            .iter()
            .copied()
            .filter(|&i| incidence[i].binary_search(&g).is_ok())
            .collect();
        if sub.len() < k || sub.len() == ids.len() {
            continue;
        }
        if subs.contains(&sub) {
            continue;
        }
        let (_, basis) = affine_basis(sub.iter().map(|&i| points[i].as_slice()), rank_tol);
        if basis.rank() == k - 1 {
            subs.push(sub);
        }
    }
    // degenerate vertices can make one facet report a strict subset of a sub-face
    subs.sort_by_key(|s| std::cmp::Reverse(s.len()));
    let mut kept: Vec<Vec<usize>> = Vec::with_capacity(subs.len());
    for s in subs {
        let covered = kept
            .iter()
            .any(|big| s.iter().all(|i| big.binary_search(i).is_ok()));
        if !covered {
            kept.push(s);
        }
    }
    kept
}
