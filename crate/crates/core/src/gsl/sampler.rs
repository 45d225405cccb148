//! Samplers over the multigraph: the one-overlap group feeding the swap
//! losses, the no-overlap partner for the cycle swap, and cover-set mining.

use std::collections::BTreeSet;

use rand::Rng;

use super::multigraph::{count_agreeing, Multigraph};
use crate::error::{Error, Result};

/// One training group: a center sample, one provider per attribute class
/// sharing exactly that class, a no-overlap partner, and the class drawn for
/// the cycle swap.
#[derive(Clone, Debug)]
pub struct GroupSample {
    pub center: u32,
    pub overlap: Vec<u32>,
    pub no_overlap: u32,
    pub cycle_class: usize,
    pub no_overlap_fallback: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct NoOverlapDraw {
    pub id: u32,
    pub fell_back: bool,
}

const REJECTION_TRIES: usize = 32;

impl Multigraph {
    fn shares_exactly(&self, x: usize, k: u32, class: usize) -> bool {
        let k = k as usize;
        if k == x {
            return false;
        }
        let (a, b) = (self.dataset().attrs(x), self.dataset().attrs(k));
        a[class] == b[class] && count_agreeing(a, b) == 1
    }

    /// Every id sharing exactly `class` with `x`, ascending. The bucket index
    /// lets whole contexts be skipped: a bucket whose key collides with x's
    /// on any position cannot contain a one-overlap candidate.
    pub fn one_overlap_candidates(&self, x: usize, class: usize) -> Vec<u32> {
        let my_key = self.other_key_of(x, class);
        let my_val = self.dataset().attrs(x)[class];
        let mut out = Vec::new();
        for (key, ids) in self.buckets(class) {
            if key.iter().zip(&my_key).any(|(a, b)| a == b) {
                continue;
            }
            out.extend(ids.iter().copied().filter(|&k| {
                k as usize != x && self.dataset().attrs(k as usize)[class] == my_val
            }));
        }
        out.sort_unstable();
        out
    }

    /// Uniform draw among samples sharing exactly `class` with `x`.
    pub fn sample_one_overlap<R: Rng>(&self, x: usize, class: usize, rng: &mut R) -> Result<u32> {
        self.dataset().check_id(x)?;
        if class >= self.m() {
            return Err(Error::ClassRange { j: class, m: self.m() });
        }
        let pool = self.ids_with_value(class, self.dataset().attrs(x)[class]);
        if pool.len() > 1 {
            for _ in 0..REJECTION_TRIES {
                let k = pool[rng.random_range(0..pool.len())];
                if self.shares_exactly(x, k, class) {
                    return Ok(k);
                }
            }
        }
        let eligible = self.one_overlap_candidates(x, class);
        if eligible.is_empty() {
            return Err(Error::OneOverlapInfeasible {
                class: self.dataset().schema.class_name(class).to_string(),
            });
        }
        Ok(eligible[rng.random_range(0..eligible.len())])
    }

    /// The set S of Algorithm 1 line 1: |S| = m, member j shares exactly
    /// class j with x, so Cover(S, x) holds by construction.
    pub fn sample_one_overlap_group<R: Rng>(&self, x: usize, rng: &mut R) -> Result<Vec<u32>> {
        (0..self.m()).map(|j| self.sample_one_overlap(x, j, rng)).collect()
    }

    /// Uniform draw among samples sharing zero classes with `x`. Errors when
    /// none exists.
    pub fn sample_no_overlap_strict<R: Rng>(&self, x: usize, rng: &mut R) -> Result<u32> {
        self.dataset().check_id(x)?;
        let n = self.n();
        if n > 1 {
            for _ in 0..REJECTION_TRIES * 2 {
                let k = rng.random_range(0..n);
                if k != x && count_agreeing(self.dataset().attrs(x), self.dataset().attrs(k)) == 0 {
                    return Ok(k as u32);
                }
            }
        }
        let eligible: Vec<u32> = (0..n)
            .filter(|&k| {
                k != x && count_agreeing(self.dataset().attrs(x), self.dataset().attrs(k)) == 0
            })
            .map(|k| k as u32)
            .collect();
        if eligible.is_empty() {
            return Err(Error::NoOverlapInfeasible);
        }
        Ok(eligible[rng.random_range(0..eligible.len())])
    }

    /// As strict, but an infeasible draw falls back to a uniform choice among
    /// the samples minimizing |M(x, .)|, flagged so callers can count it.
    pub fn sample_no_overlap<R: Rng>(&self, x: usize, rng: &mut R) -> Result<NoOverlapDraw> {
        match self.sample_no_overlap_strict(x, rng) {
            Ok(id) => Ok(NoOverlapDraw { id, fell_back: false }),
            Err(Error::NoOverlapInfeasible) => {
                let mut best = usize::MAX;
                let mut pool: Vec<u32> = Vec::new();
                for k in 0..self.n() {
                    if k == x {
                        continue;
                    }
                    let c = count_agreeing(self.dataset().attrs(x), self.dataset().attrs(k));
                    if c < best {
                        best = c;
                        pool.clear();
                    }
                    if c == best {
                        pool.push(k as u32);
                    }
                }
                if pool.is_empty() {
                    return Err(Error::NoOverlapInfeasible);
                }
                Ok(NoOverlapDraw {
                    id: pool[rng.random_range(0..pool.len())],
                    fell_back: true,
                })
            }
            Err(e) => Err(e),
        }
    }

    /// Greedy-minimal cover sets S with Cover(S, i), i not in S and
    /// |S| <= max_size, at most `limit` of them. Deterministic: seeds are
    /// tried in id order and greedy ties break toward the lowest id.
    pub fn mine_cover_sets(
        &self,
        i: usize,
        max_size: usize,
        limit: usize,
    ) -> Result<Vec<Vec<u32>>> {
        self.dataset().check_id(i)?;
        let m = self.m();
        let me = self.dataset().attrs(i);

        // everything sharing at least one class with i
        let mut candidates: Vec<u32> = Vec::new();
        for (j, &v) in me.iter().enumerate() {
            candidates.extend(self.ids_with_value(j, v).iter().copied());
        }
        candidates.sort_unstable();
        candidates.dedup();
        candidates.retain(|&k| k as usize != i);

        let labels = |k: u32| -> Vec<usize> {
            super::multigraph::agreeing_classes(me, self.dataset().attrs(k as usize))
        };

        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for &seed in &candidates {
            if out.len() >= limit {
                break;
            }
            let mut set = vec![seed];
            let mut covered = vec![false; m];
            for j in labels(seed) {
                covered[j] = true;
            }
            while covered.iter().any(|&c| !c) && set.len() < max_size {
                let mut best_gain = 0;
                let mut best_id = None;
                for &k in &candidates {
                    if set.contains(&k) {
                        continue;
                    }
                    let gain = labels(k).into_iter().filter(|&j| !covered[j]).count();
                    if gain > best_gain {
                        best_gain = gain;
                        best_id = Some(k);
                    }
                }
                match best_id {
                    Some(k) => {
                        for j in labels(k) {
                            covered[j] = true;
                        }
                        set.push(k);
                    }
                    None => break,
                }
            }
            if covered.iter().any(|&c| !c) {
                continue;
            }
            // prune to minimality: drop any member whose removal keeps cover
            let mut idx = 0;
            while idx < set.len() {
                let without: Vec<usize> =
                    set.iter().enumerate().filter(|(p, _)| *p != idx).map(|(_, &k)| k as usize).collect();
                if !without.is_empty() && self.covers(&without, i)? {
                    set.remove(idx);
                } else {
                    idx += 1;
                }
            }
            let mut sorted = set.clone();
            sorted.sort_unstable();
            if seen.insert(sorted.clone()) {
                out.push(sorted);
            }
        }
        Ok(out)
    }

    /// Draw a full training group for Algorithm 1: center's one-overlap set,
    /// a no-overlap partner (strict or fallback), and a uniform cycle class.
    pub fn sample_group<R: Rng>(&self, x: usize, strict_no_overlap: bool, rng: &mut R) -> Result<GroupSample> {
        let overlap = self.sample_one_overlap_group(x, rng)?;
        let (no_overlap, fell_back) = if strict_no_overlap {
            let draw = self.sample_no_overlap(x, rng)?;
            (draw.id, draw.fell_back)
        } else {
            // unconstrained partner drawn from the whole dataset
            let mut k = rng.random_range(0..self.n());
            while k == x && self.n() > 1 {
                k = rng.random_range(0..self.n());
            }
            (k as u32, false)
        };
        let cycle_class = rng.random_range(0..self.m());
        Ok(GroupSample {
            center: x as u32,
            overlap,
            no_overlap,
            cycle_class,
            no_overlap_fallback: fell_back,
        })
    }
}
