//! Agglomerative clustering with unweighted average linkage (UPGMA) on
//! Euclidean distances.

use crate::error::{Error, Result};

/// One agglomeration. Cluster ids `0..m` are the input points; the cluster
/// formed by merge `k` has id `m + k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram {
    n_points: usize,
    merges: Vec<Merge>,
}

impl Dendrogram {
    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }

    pub fn heights(&self) -> Vec<f64> {
        self.merges.iter().map(|m| m.height).collect()
    }

    /// Points under cluster `id`, in left-to-right leaf order.
    pub fn members(&self, id: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(c) = stack.pop() {
            if c < self.n_points {
                out.push(c);
            } else {
                let m = &self.merges[c - self.n_points];
                stack.push(m.right);
                stack.push(m.left);
            }
        }
        out
    }

    pub fn leaf_order(&self) -> Vec<usize> {
        match self.merges.last() {
            Some(_) => self.members(self.n_points + self.merges.len() - 1),
            None => (0..self.n_points).collect(),
        }
    }
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Size-weighted mean of two cluster distances, written so the result
/// never leaves `[min, max]` under rounding; this keeps merge heights
/// exactly monotone.
fn weighted_between(d1: f64, n1: usize, d2: f64, n2: usize) -> f64 {
    let (lo, hi, w_hi) = if d1 <= d2 { (d1, d2, n2) } else { (d2, d1, n1) };
    let v = lo + (hi - lo) * (w_hi as f64 / (n1 + n2) as f64);
    v.clamp(lo, hi)
}

/// Builds the average-linkage merge tree of the rows of `points`. Equal
/// distances are broken by the smallest `(i, j)` slot pair, where a merged
/// cluster takes the smaller slot of its two parts.
pub fn hac_average_linkage(points: &[Vec<f64>]) -> Result<Dendrogram> {
    let m = points.len();
    if m < 2 {
        return Err(Error::Config(format!(
            "clustering needs at least 2 points, got {m}"
        )));
    }
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite clustering feature".into()));
    }
    let mut dist = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in i + 1..m {
            let d = euclidean(&points[i], &points[j]);
            dist[i][j] = d;
            dist[j][i] = d;
        }
    }
    let mut active = vec![true; m];
    let mut size = vec![1usize; m];
    let mut id: Vec<usize> = (0..m).collect();
    let mut merges = Vec::with_capacity(m - 1);
    for step in 0..m - 1 {
        let mut best = (f64::INFINITY, usize::MAX, usize::MAX);
        for i in 0..m {
            if !active[i] {
                continue;
            }
            for j in i + 1..m {
                if active[j] && dist[i][j] < best.0 {
                    best = (dist[i][j], i, j);
                }
            }
        }
        let (h, i, j) = best;
        merges.push(Merge {
            left: id[i],
            right: id[j],
            height: h,
            size: size[i] + size[j],
        });
        for k in 0..m {
            if active[k] && k != i && k != j {
                let d = weighted_between(dist[k][i], size[i], dist[k][j], size[j]);
                dist[k][i] = d;
                dist[i][k] = d;
            }
        }
        active[j] = false;
        size[i] += size[j];
        id[i] = m + step;
    }
    Ok(Dendrogram {
        n_points: m,
        merges,
    })
}

/// Labels from undoing the final merge. The side holding point 0 gets
/// label 0.
pub fn cut_two(d: &Dendrogram) -> Vec<u8> {
    let last = d.merges.last().expect("dendrogram of at least 2 points");
    let mut labels = vec![0u8; d.n_points];
    let right = d.members(last.right);
    let flip = right.contains(&0);
    for i in right {
        labels[i] = 1;
    }
    if flip {
        for l in &mut labels {
            *l = 1 - *l;
        }
    }
    labels
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(v: &[f64]) -> Vec<Vec<f64>> {
        v.iter().map(|&x| vec![x]).collect()
    }

    #[test]
    fn separated_line() {
        let d = hac_average_linkage(&pts(&[0.0, 0.1, 4.9, 5.0, 5.2])).unwrap();
        assert_eq!(cut_two(&d), vec![0, 0, 1, 1, 1]);
        let h = d.heights();
        assert!(h.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn identical_points_merge_first_at_zero() {
        let d = hac_average_linkage(&pts(&[1.0, 3.0, 3.0])).unwrap();
        assert_eq!(d.merges()[0].height, 0.0);
        assert_eq!((d.merges()[0].left, d.merges()[0].right), (1, 2));
    }

    #[test]
    fn two_points_are_singletons() {
        let d = hac_average_linkage(&pts(&[1.0, 2.0])).unwrap();
        assert_eq!(cut_two(&d), vec![0, 1]);
        assert!(hac_average_linkage(&pts(&[1.0])).is_err());
    }

    #[test]
    fn equally_spaced_chain() {
        // merges (0,1) at 1, then (2,3) at 1, then the two pairs at 2
        let d = hac_average_linkage(&pts(&[0.0, 1.0, 2.0, 3.0])).unwrap();
        assert_eq!(d.heights(), vec![1.0, 1.0, 2.0]);
        assert_eq!(cut_two(&d), vec![0, 0, 1, 1]);
    }

    #[test]
    fn rescaling_keeps_topology() {
        let p = vec![vec![0.0, 1.0], vec![0.3, 0.2], vec![5.0, 4.0], vec![4.4, 4.1], vec![9.0, 0.0]];
        let scaled: Vec<Vec<f64>> = p.iter().map(|r| r.iter().map(|v| v * 7.5).collect()).collect();
        let a = hac_average_linkage(&p).unwrap();
        let b = hac_average_linkage(&scaled).unwrap();
        for (x, y) in a.merges().iter().zip(b.merges()) {
            assert_eq!((x.left, x.right), (y.left, y.right));
        }
        assert_eq!(a.leaf_order().len(), 5);
    }
}
