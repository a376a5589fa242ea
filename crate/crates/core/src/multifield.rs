//! Unordered Q-tuples of vectors in R^n with the permutation-matching metric,
//! averaging, balancing, and single-linkage cluster splitting.

use crate::assign;
use crate::geom;
use crate::{Error, Result};

/// An unordered Q-tuple of points of R^n. The internal ordering of `values`
/// carries no meaning; all operations are permutation invariant.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiPoint {
    values: Vec<Vec<f64>>,
    n: usize,
}

impl MultiPoint {
    pub fn new(values: Vec<Vec<f64>>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Input("multiplicity Q must be >= 1".into()));
        }
        let n = values[0].len();
        if n == 0 || values.iter().any(|v| v.len() != n) {
            return Err(Error::Input("inconsistent ambient dimension".into()));
        }
        Ok(MultiPoint { values, n })
    }

    /// Q copies of the same point.
    pub fn repeated(p: Vec<f64>, q: usize) -> Result<Self> {
        Self::new(vec![p; q])
    }

    pub fn q(&self) -> usize {
        self.values.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    /// |T|^2 = sum_i |P_i|^2.
    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| geom::dot(v, v)).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }
}

/// The matching metric d(T,S) = min over permutations of sqrt(sum |P_i - S_sigma(i)|^2).
pub fn metric_distance(a: &MultiPoint, b: &MultiPoint) -> Result<f64> {
    if a.q() != b.q() {
        return Err(Error::Input(format!(
            "multiplicity mismatch: {} vs {}",
            a.q(),
            b.q()
        )));
    }
    if a.n() != b.n() {
        return Err(Error::Input(format!(
            "dimension mismatch: {} vs {}",
            a.n(),
            b.n()
        )));
    }
    let cost: Vec<Vec<f64>> = a
        .values
        .iter()
        .map(|p| b.values.iter().map(|s| {
            let d = geom::sub(p, s);
            geom::dot(&d, &d)
        }).collect())
        .collect();
    Ok(assign::min_cost(&cost).max(0.0).sqrt())
}

/// The average eta(T) of the Q-tuple.
pub fn eta(a: &MultiPoint) -> Vec<f64> {
    let mut out = vec![0.0; a.n()];
    for v in &a.values {
        geom::axpy(&mut out, 1.0, v);
    }
    geom::scale(&out, 1.0 / a.q() as f64)
}

/// Subtract the average from every value; the result satisfies eta = 0.
pub fn balance(a: &MultiPoint) -> MultiPoint {
    let m = eta(a);
    let values = a.values.iter().map(|v| geom::sub(v, &m)).collect();
    MultiPoint { values, n: a.n() }
}

/// A decomposition of a Q-tuple into well-separated sub-tuples.
#[derive(Debug, Clone)]
pub struct ClusterSplit {
    /// Sub-tuples; multiplicities sum to Q.
    pub parts: Vec<MultiPoint>,
    /// Minimum distance between values in distinct parts; infinite for a
    /// single part.
    pub separation: f64,
}

/// Single-linkage partition of the values: points at distance <= delta are
/// chained into the same part.
pub fn cluster_split(a: &MultiPoint, delta: f64) -> Result<ClusterSplit> {
    if !(delta > 0.0) {
        return Err(Error::Input("cluster_split requires delta > 0".into()));
    }
    let q = a.q();
    let mut parent: Vec<usize> = (0..q).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let r = find(parent, parent[i]);
            parent[i] = r;
        }
        parent[i]
    }
    for i in 0..q {
        for j in (i + 1)..q {
            if geom::dist(&a.values[i], &a.values[j]) <= delta {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri] = rj;
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut root_of: Vec<Option<usize>> = vec![None; q];
    for i in 0..q {
        let r = find(&mut parent, i);
        match root_of[r] {
            Some(g) => groups[g].push(i),
            None => {
                root_of[r] = Some(groups.len());
                groups.push(vec![i]);
            }
        }
    }
    let mut separation = f64::INFINITY;
    for i in 0..q {
        for j in (i + 1)..q {
            if find(&mut parent, i) != find(&mut parent, j) {
                separation = separation.min(geom::dist(&a.values[i], &a.values[j]));
            }
        }
    }
    let parts = groups
        .into_iter()
        .map(|g| MultiPoint {
            values: g.iter().map(|&i| a.values[i].clone()).collect(),
            n: a.n(),
        })
        .collect();
    Ok(ClusterSplit { parts, separation })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mp(vals: &[&[f64]]) -> MultiPoint {
        MultiPoint::new(vals.iter().map(|v| v.to_vec()).collect()).unwrap()
    }

    #[test]
    fn metric_examples() {
        // Two pairings, both give sqrt(2).
        let a = mp(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let b = mp(&[&[0.0, 0.0], &[0.0, 0.0]]);
        assert!((metric_distance(&a, &b).unwrap() - 2f64.sqrt()).abs() < 1e-14);

        // Identity permutation.
        assert!(metric_distance(&a, &a).unwrap() == 0.0);

        // Brute force over both pairings gives 2.
        let c = mp(&[&[1.0, 0.0], &[-1.0, 0.0]]);
        let d = mp(&[&[0.0, 1.0], &[0.0, -1.0]]);
        assert!((metric_distance(&c, &d).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn metric_mismatch_errors() {
        let a = mp(&[&[1.0, 0.0]]);
        let b = mp(&[&[1.0, 0.0], &[0.0, 0.0]]);
        assert!(metric_distance(&a, &b).is_err());
        let c = mp(&[&[1.0, 0.0, 0.0]]);
        assert!(metric_distance(&a, &c).is_err());
    }

    #[test]
    fn eta_examples() {
        let a = mp(&[&[2.0, 0.0], &[0.0, 2.0]]);
        assert_eq!(eta(&a), vec![1.0, 1.0]);
        let b = MultiPoint::repeated(vec![3.0, -1.0], 4).unwrap();
        assert_eq!(eta(&b), vec![3.0, -1.0]);
        let c = mp(&[&[1.5, -2.0], &[-1.5, 2.0]]);
        assert_eq!(eta(&c), vec![0.0, 0.0]);
    }

    #[test]
    fn balance_examples() {
        let a = mp(&[&[2.0, 0.0], &[0.0, 2.0]]);
        let b = balance(&a);
        let expect = mp(&[&[1.0, -1.0], &[-1.0, 1.0]]);
        assert!(metric_distance(&b, &expect).unwrap() < 1e-14);
        // Balanced input is a fixed point.
        let again = balance(&b);
        assert!(metric_distance(&b, &again).unwrap() < 1e-14);
        // Q copies of P collapse to Q copies of 0.
        let c = MultiPoint::repeated(vec![5.0, 7.0], 3).unwrap();
        assert!(balance(&c).norm() == 0.0);
    }

    #[test]
    fn cluster_split_examples() {
        let a = mp(&[&[0.0, 0.0], &[5.0, 0.0]]);
        let s = cluster_split(&a, 1.0).unwrap();
        assert_eq!(s.parts.len(), 2);
        assert!((s.separation - 5.0).abs() < 1e-14);

        let b = MultiPoint::repeated(vec![1.0, 1.0], 4).unwrap();
        let s = cluster_split(&b, 0.1).unwrap();
        assert_eq!(s.parts.len(), 1);
        assert!(s.separation.is_infinite());

        // Chain linkage: distances {0.5, 0.5, 1.0}, delta 0.6 gives one part.
        let c = mp(&[&[0.0, 0.0], &[0.5, 0.0], &[1.0, 0.0]]);
        let s = cluster_split(&c, 0.6).unwrap();
        assert_eq!(s.parts.len(), 1);
    }

    #[test]
    fn cluster_split_bad_delta() {
        let a = mp(&[&[0.0, 0.0]]);
        assert!(cluster_split(&a, 0.0).is_err());
    }
}
