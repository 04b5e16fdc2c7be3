use std::cmp::Ordering;

use super::{NeighborhoodMap, PointCloud};
use crate::error::{Error, Result};

/// Exact k-nearest neighbors by squared Euclidean distance.
///
/// Each row excludes the point itself and is sorted by increasing distance;
/// equal distances are ordered by lower index.
pub fn knn(cloud: &PointCloud, k: usize) -> Result<NeighborhoodMap> {
    let pts = cloud.points();
    let n = pts.len();
    if k == 0 || k >= n {
        return Err(Error::InvalidArgument(format!(
            "knn needs 1 <= k <= n - 1, got k = {k} for n = {n}"
        )));
    }

    let by_distance = |a: &(f64, usize), b: &(f64, usize)| {
        a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1))
    };

    let mut indices = Vec::with_capacity(n * k);
    let mut scratch: Vec<(f64, usize)> = Vec::with_capacity(n - 1);
    for (i, &p) in pts.iter().enumerate() {
        scratch.clear();
        scratch.extend(
            pts.iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(j, &q)| (p.distance_squared(q), j)),
        );
        if k < scratch.len() {
            scratch.select_nth_unstable_by(k - 1, by_distance);
            scratch.truncate(k);
        }
        scratch.sort_unstable_by(by_distance);
        indices.extend(scratch.iter().map(|&(_, j)| j));
    }
    NeighborhoodMap::new(k, indices)
}
