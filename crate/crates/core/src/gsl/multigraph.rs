//! The sample multigraph: nodes are sample ids, and two samples carry one
//! edge per attribute class they agree on. `edge_labels(i, k)` is the set of
//! agreeing classes; its size counts the edges between i and k.

use std::collections::HashMap;
use std::sync::Arc;

use super::AttributedDataset;
use crate::error::{Error, Result};

pub struct Multigraph {
    ds: Arc<AttributedDataset>,
    /// class -> value -> sorted sample ids
    inverted: Vec<Vec<Vec<u32>>>,
    /// class -> (m-1)-tuple of the other classes' values -> sample ids.
    /// Samples in one bucket share their whole context outside the class, so
    /// a candidate scan can reject or accept whole buckets at once.
    other_buckets: Vec<HashMap<Vec<u16>, Vec<u32>>>,
}

impl Multigraph {
    pub fn build(ds: Arc<AttributedDataset>) -> Self {
        let m = ds.m();
        let mut inverted: Vec<Vec<Vec<u32>>> = (0..m)
            .map(|j| vec![Vec::new(); ds.schema.cardinality(j)])
            .collect();
        let mut other_buckets: Vec<HashMap<Vec<u16>, Vec<u32>>> = vec![HashMap::new(); m];
        for id in 0..ds.n() {
            let attrs = ds.attrs(id);
            for j in 0..m {
                inverted[j][attrs[j] as usize].push(id as u32);
                let key = other_key(attrs, j);
                other_buckets[j].entry(key).or_default().push(id as u32);
            }
        }
        Self { ds, inverted, other_buckets }
    }

    pub fn dataset(&self) -> &Arc<AttributedDataset> {
        &self.ds
    }

    pub fn n(&self) -> usize {
        self.ds.n()
    }

    pub fn m(&self) -> usize {
        self.ds.m()
    }

    /// Sorted ids carrying `value` for `class`.
    pub fn ids_with_value(&self, class: usize, value: u16) -> &[u32] {
        &self.inverted[class][value as usize]
    }

    /// M(i, k): the classes on which samples i and k agree. Defined only for
    /// i != k.
    pub fn edge_labels(&self, i: usize, k: usize) -> Result<Vec<usize>> {
        self.ds.check_id(i)?;
        self.ds.check_id(k)?;
        if i == k {
            return Err(Error::SelfEdge(i));
        }
        Ok(agreeing_classes(self.ds.attrs(i), self.ds.attrs(k)))
    }

    /// |M(i, k)| without materializing the label set.
    pub fn shared_count(&self, i: usize, k: usize) -> Result<usize> {
        self.ds.check_id(i)?;
        self.ds.check_id(k)?;
        if i == k {
            return Err(Error::SelfEdge(i));
        }
        Ok(count_agreeing(self.ds.attrs(i), self.ds.attrs(k)))
    }

    /// Cover(S, i): the union of edge labels over S supplies every class.
    /// Membership of i itself contributes the full class set.
    pub fn covers(&self, set: &[usize], i: usize) -> Result<bool> {
        self.ds.check_id(i)?;
        let m = self.m();
        let mut covered = vec![false; m];
        let me = self.ds.attrs(i);
        for &k in set {
            self.ds.check_id(k)?;
            if k == i {
                return Ok(true);
            }
            for (j, (a, b)) in me.iter().zip(self.ds.attrs(k)).enumerate() {
                if a == b {
                    covered[j] = true;
                }
            }
        }
        Ok(covered.iter().all(|&c| c))
    }

    pub(super) fn other_key_of(&self, id: usize, class: usize) -> Vec<u16> {
        other_key(self.ds.attrs(id), class)
    }

    pub(super) fn buckets(&self, class: usize) -> &HashMap<Vec<u16>, Vec<u32>> {
        &self.other_buckets[class]
    }
}

pub(super) fn other_key(attrs: &[u16], class: usize) -> Vec<u16> {
    attrs
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != class)
        .map(|(_, &v)| v)
        .collect()
}

pub(super) fn agreeing_classes(a: &[u16], b: &[u16]) -> Vec<usize> {
    a.iter()
        .zip(b)
        .enumerate()
        .filter(|(_, (x, y))| x == y)
        .map(|(j, _)| j)
        .collect()
}

pub(super) fn count_agreeing(a: &[u16], b: &[u16]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x == y).count()
}

#[cfg(test)]
mod tests {
    use super::super::testutil::{factorial_dataset, random_dataset};
    use super::*;
    use rand::{Rng, SeedableRng};

    fn graph(ds: AttributedDataset) -> Multigraph {
        Multigraph::build(Arc::new(ds))
    }

    #[test]
    fn positional_agreement_example() {
        // (A, small, red, blue, s1) vs (A, large, red, green, s2)
        let mut ds = factorial_dataset(&[2, 2, 2, 2, 2]);
        ds.samples[0].attrs = vec![0, 0, 0, 0, 0];
        ds.samples[1].attrs = vec![0, 1, 0, 1, 1];
        let g = graph(ds);
        assert_eq!(g.edge_labels(0, 1).unwrap(), vec![0, 2]);
        assert_eq!(g.edge_labels(1, 0).unwrap(), vec![0, 2]);
    }

    #[test]
    fn identical_tuples_share_every_class() {
        let mut ds = factorial_dataset(&[2, 2, 2]);
        let tuple = ds.samples[3].attrs.clone();
        ds.samples[5].attrs = tuple;
        let g = graph(ds);
        assert_eq!(g.edge_labels(3, 5).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn self_edge_is_a_domain_error() {
        let g = graph(factorial_dataset(&[2, 2]));
        assert!(matches!(g.edge_labels(1, 1), Err(Error::SelfEdge(1))));
    }

    /// Brute-force oracle over every pair of a random 50-sample dataset.
    #[test]
    fn edge_labels_agree_with_brute_force() {
        for seed in 0..4 {
            let ds = random_dataset(&[3, 2, 4, 2], 50, seed);
            let g = graph(ds.clone());
            for i in 0..50 {
                for k in 0..50 {
                    if i == k {
                        continue;
                    }
                    let expected: Vec<usize> = (0..4)
                        .filter(|&j| ds.attrs(i)[j] == ds.attrs(k)[j])
                        .collect();
                    assert_eq!(g.edge_labels(i, k).unwrap(), expected);
                    assert_eq!(g.shared_count(i, k).unwrap(), expected.len());
                }
            }
        }
    }

    #[test]
    fn cover_of_self_holds_for_every_sample() {
        let ds = factorial_dataset(&[3, 2, 2]);
        let g = graph(ds);
        for i in 0..g.n() {
            assert!(g.covers(&[i], i).unwrap());
        }
    }

    #[test]
    fn single_shared_class_does_not_cover() {
        // m = 5; k agrees with i only on class 0
        let mut ds = factorial_dataset(&[2, 2, 2, 2, 2]);
        ds.samples[0].attrs = vec![0, 0, 0, 0, 0];
        ds.samples[1].attrs = vec![0, 1, 1, 1, 1];
        let g = graph(ds);
        assert!(!g.covers(&[1], 0).unwrap());
    }

    /// Brute-force union oracle on 1000 random (S, i) draws.
    #[test]
    fn covers_agrees_with_brute_force_union() {
        let ds = random_dataset(&[3, 3, 2], 40, 99);
        let g = graph(ds.clone());
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let i = rng.random_range(0..40);
            let size = rng.random_range(1..=4usize);
            let set: Vec<usize> = (0..size).map(|_| rng.random_range(0..40)).collect();
            let mut covered = vec![false; 3];
            for &k in &set {
                if k == i {
                    covered = vec![true; 3];
                    break;
                }
                for j in 0..3 {
                    if ds.attrs(i)[j] == ds.attrs(k)[j] {
                        covered[j] = true;
                    }
                }
            }
            let expected = covered.iter().all(|&c| c);
            assert_eq!(g.covers(&set, i).unwrap(), expected);
        }
    }

    /// Symmetry and cardinality invariants on random data.
    #[test]
    fn symmetry_and_hamming_cardinality() {
        let ds = random_dataset(&[4, 3, 2, 2], 30, 123);
        let g = graph(ds.clone());
        for i in 0..30 {
            for k in (i + 1)..30 {
                let a = g.edge_labels(i, k).unwrap();
                let b = g.edge_labels(k, i).unwrap();
                assert_eq!(a, b);
                let hamming = (0..4).filter(|&j| ds.attrs(i)[j] != ds.attrs(k)[j]).count();
                assert_eq!(a.len(), 4 - hamming);
            }
        }
    }

    /// Rebuilding indexes from a written manifest yields identical
    /// eligibility structures.
    #[test]
    fn index_consistency_across_manifest_roundtrip() {
        let ds = random_dataset(&[3, 2, 3], 40, 17);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.jsonl");
        ds.write_manifest(&path).unwrap();
        let back = AttributedDataset::load_manifest(&path).unwrap();
        let g1 = graph(ds);
        let g2 = graph(back);
        for j in 0..3 {
            for v in 0..g1.ds.schema.cardinality(j) {
                assert_eq!(g1.ids_with_value(j, v as u16), g2.ids_with_value(j, v as u16));
            }
        }
        for x in 0..40 {
            for j in 0..3 {
                assert_eq!(g1.one_overlap_candidates(x, j), g2.one_overlap_candidates(x, j));
            }
        }
    }
}
