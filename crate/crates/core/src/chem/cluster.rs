use serde::{Deserialize, Serialize};

use super::fingerprint::{check_widths, similarity_or_zero, Fingerprint};
use crate::error::{Error, Result};
use crate::par;

/// Exclusive clustering of item indices. The first member of each cluster
/// is its centroid; clusters come in non-increasing size order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterResult {
    pub clusters: Vec<Vec<usize>>,
    pub singleton_count: usize,
    pub threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub n_items: usize,
    /// Clusters with two or more members.
    pub n_clusters: usize,
    pub n_singletons: usize,
    pub largest: usize,
}

impl ClusterResult {
    pub fn summary(&self) -> ClusterSummary {
        ClusterSummary {
            n_items: self.clusters.iter().map(Vec::len).sum(),
            n_clusters: self.clusters.iter().filter(|c| c.len() > 1).count(),
            n_singletons: self.singleton_count,
            largest: self.clusters.first().map_or(0, Vec::len),
        }
    }
}

/// Butina sphere-exclusion clustering.
///
/// Neighbours are items with similarity `>= threshold`. Repeatedly, the
/// unassigned item with the most unassigned neighbours (lowest index on
/// ties) becomes a centroid and takes all of its unassigned neighbours.
pub fn butina_cluster(fps: &[Fingerprint], threshold: f64) -> Result<ClusterResult> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::invalid(format!(
            "clustering threshold must be in (0, 1], got {threshold}"
        )));
    }
    check_widths(fps)?;
    let n = fps.len();
    let neighbors: Vec<Vec<usize>> = par::map_range(n, |i| {
        (0..n)
            .filter(|&j| j != i && similarity_or_zero(&fps[i], &fps[j]) >= threshold)
            .collect()
    });

    let mut open: Vec<usize> = neighbors.iter().map(Vec::len).collect();
    let mut assigned = vec![false; n];
    let mut remaining = n;
    let mut clusters = Vec::new();
    while remaining > 0 {
        let mut centroid = usize::MAX;
        for i in 0..n {
            if !assigned[i] && (centroid == usize::MAX || open[i] > open[centroid]) {
                centroid = i;
            }
        }
        let mut members = vec![centroid];
        members.extend(neighbors[centroid].iter().copied().filter(|&j| !assigned[j]));
        for &m in &members {
            assigned[m] = true;
            for &k in &neighbors[m] {
                open[k] -= 1;
            }
        }
        remaining -= members.len();
        clusters.push(members);
    }
    let singleton_count = clusters.iter().filter(|c| c.len() == 1).count();
    Ok(ClusterResult {
        clusters,
        singleton_count,
        threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::tanimoto;

    fn fp(bits: &[usize]) -> Fingerprint {
        Fingerprint::from_bits(32, bits.iter().copied()).unwrap()
    }

    #[test]
    fn three_item_trace() {
        // A,B share 8 of 10 bits (0.8); C shares 1 bit with each (<= 0.1)
        let a = fp(&[0, 1, 2, 3, 4, 5, 6, 7, 8]);
        let b = fp(&[0, 1, 2, 3, 4, 5, 6, 7, 9]);
        let c = fp(&[0, 20, 21, 22, 23, 24, 25, 26, 27, 28, 29]);
        assert_eq!(tanimoto(&a, &b).unwrap(), 0.8);
        assert!(tanimoto(&a, &c).unwrap() <= 0.1);
        assert!(tanimoto(&b, &c).unwrap() <= 0.1);
        let r = butina_cluster(&[a, b, c], 0.7).unwrap();
        assert_eq!(r.clusters, vec![vec![0, 1], vec![2]]);
        assert_eq!(r.singleton_count, 1);
        let s = r.summary();
        assert_eq!((s.n_clusters, s.n_singletons, s.largest), (1, 1, 2));
    }

    #[test]
    fn all_distinct_are_singletons() {
        let fps: Vec<_> = (0..5).map(|i| fp(&[i])).collect();
        let r = butina_cluster(&fps, 0.7).unwrap();
        assert_eq!(r.singleton_count, 5);
        assert_eq!(r.clusters, (0..5).map(|i| vec![i]).collect::<Vec<_>>());
    }

    #[test]
    fn identical_items_form_one_cluster() {
        let fps = vec![fp(&[1, 2]); 6];
        let r = butina_cluster(&fps, 0.7).unwrap();
        assert_eq!(r.clusters, vec![(0..6).collect::<Vec<_>>()]);
        assert_eq!(r.singleton_count, 0);
    }

    #[test]
    fn empty_input_and_bad_threshold() {
        let r = butina_cluster(&[], 0.7).unwrap();
        assert!(r.clusters.is_empty());
        assert!(butina_cluster(&[], 0.0).is_err());
        assert!(butina_cluster(&[], 1.5).is_err());
    }

    #[test]
    fn recount_changes_the_second_centroid() {
        // chain 0-1-2-3-4 plus 2 linked to 5: item 2 wins first (3 nbrs),
        // after which 0 and 4 are left with 0 open neighbours and 3/1 with 0
        let fps = vec![
            fp(&[0, 1, 2, 3]),
            fp(&[0, 1, 2, 3, 4]),
            fp(&[1, 2, 3, 4, 5]),
            fp(&[2, 3, 4, 5, 6]),
            fp(&[3, 4, 5, 6, 7, 8, 9]),
        ];
        let r = butina_cluster(&fps, 0.6).unwrap();
        let all: Vec<usize> = {
            let mut v: Vec<usize> = r.clusters.iter().flatten().copied().collect();
            v.sort();
            v
        };
        assert_eq!(all, vec![0, 1, 2, 3, 4]);
        for c in &r.clusters {
            for &m in &c[1..] {
                assert!(tanimoto(&fps[c[0]], &fps[m]).unwrap() >= 0.6);
            }
        }
    }
}
