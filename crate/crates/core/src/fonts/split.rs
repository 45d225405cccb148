//! Train/test split planning.
//!
//! The holdout-combinations mode withholds whole attribute tuples while
//! guaranteeing that every attribute value of every held-out sample still
//! appears somewhere in the training split, which is what makes the held-out
//! tuples usable as zero-shot queries.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gsl::{AttributedDataset, Split};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SplitMode {
    /// Shuffled ids, first three quarters train.
    Random7525,
    /// Withhold at least `holdout` samples as full-tuple combinations.
    HoldoutCombinations { holdout: usize },
}

impl SplitMode {
    pub fn name(&self) -> &'static str {
        match self {
            SplitMode::Random7525 => "random-75-25",
            SplitMode::HoldoutCombinations { .. } => "holdout-combinations",
        }
    }
}

pub fn plan_split(ds: &AttributedDataset, mode: SplitMode, seed: u64) -> Result<Split> {
    match mode {
        SplitMode::Random7525 => {
            let mut ids: Vec<usize> = (0..ds.n()).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            ids.shuffle(&mut rng);
            let train_len = ds.n() * 3 / 4;
            let (train, test) = ids.split_at(train_len);
            Ok(Split {
                mode: mode.name().into(),
                seed,
                train: train.to_vec(),
                test: test.to_vec(),
            })
        }
        SplitMode::HoldoutCombinations { holdout } => plan_holdout(ds, holdout, seed, mode.name()),
    }
}

fn plan_holdout(ds: &AttributedDataset, holdout: usize, seed: u64, mode: &str) -> Result<Split> {
    if holdout >= ds.n() {
        return Err(Error::HoldoutInfeasible(format!(
            "requested {holdout} of {} samples",
            ds.n()
        )));
    }
    // group ids by full tuple so a held-out combination leaves no duplicate
    // of itself behind in train
    let mut groups: HashMap<&[u16], Vec<usize>> = HashMap::new();
    for id in 0..ds.n() {
        groups.entry(ds.attrs(id)).or_default().push(id);
    }
    let mut group_list: Vec<Vec<usize>> = groups.into_values().collect();
    group_list.sort_unstable();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    group_list.shuffle(&mut rng);

    // train-side occurrence count per (class, value)
    let m = ds.m();
    let mut counts: Vec<Vec<usize>> =
        (0..m).map(|j| vec![0; ds.schema.cardinality(j)]).collect();
    for id in 0..ds.n() {
        for (j, &v) in ds.attrs(id).iter().enumerate() {
            counts[j][v as usize] += 1;
        }
    }

    let mut test: Vec<usize> = Vec::new();
    for group in &group_list {
        if test.len() >= holdout {
            break;
        }
        let tuple = ds.attrs(group[0]);
        let removable = tuple
            .iter()
            .enumerate()
            .all(|(j, &v)| counts[j][v as usize] > group.len());
        if removable {
            for (j, &v) in tuple.iter().enumerate() {
                counts[j][v as usize] -= group.len();
            }
            test.extend(group.iter().copied());
        }
    }
    if test.len() < holdout {
        return Err(Error::HoldoutInfeasible(format!(
            "only {} of {holdout} samples can be withheld; some attribute value \
             occurs in too few combinations",
            test.len()
        )));
    }
    let mut in_test = vec![false; ds.n()];
    for &id in &test {
        in_test[id] = true;
    }
    let train: Vec<usize> = (0..ds.n()).filter(|&id| !in_test[id]).collect();
    test.sort_unstable();
    Ok(Split { mode: mode.into(), seed, train, test })
}

/// Check the holdout guarantees: disjoint, exhaustive, every test value
/// present in train, no test tuple present in train.
pub fn verify_holdout(ds: &AttributedDataset, split: &Split) -> Result<()> {
    let mut seen = vec![false; ds.n()];
    for &id in split.train.iter().chain(&split.test) {
        ds.check_id(id)?;
        if seen[id] {
            return Err(Error::HoldoutInfeasible(format!("id {id} appears twice")));
        }
        seen[id] = true;
    }
    if !seen.iter().all(|&s| s) {
        return Err(Error::HoldoutInfeasible("split is not exhaustive".into()));
    }
    let m = ds.m();
    let mut train_values: Vec<Vec<bool>> =
        (0..m).map(|j| vec![false; ds.schema.cardinality(j)]).collect();
    let mut train_tuples: std::collections::HashSet<&[u16]> = std::collections::HashSet::new();
    for &id in &split.train {
        for (j, &v) in ds.attrs(id).iter().enumerate() {
            train_values[j][v as usize] = true;
        }
        train_tuples.insert(ds.attrs(id));
    }
    for &id in &split.test {
        for (j, &v) in ds.attrs(id).iter().enumerate() {
            if !train_values[j][v as usize] {
                return Err(Error::HoldoutInfeasible(format!(
                    "test id {id}: value {:?} of class {:?} missing from train",
                    ds.schema.value_name(j, v as usize),
                    ds.schema.class_name(j)
                )));
            }
        }
        if train_tuples.contains(ds.attrs(id)) {
            return Err(Error::HoldoutInfeasible(format!(
                "test id {id}: its full tuple also appears in train"
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gsl::testutil::factorial_dataset;

    #[test]
    fn random_mode_splits_1440_into_1080_and_360() {
        let ds = factorial_dataset(&[10, 3, 4, 4, 3]);
        let split = plan_split(&ds, SplitMode::Random7525, 5).unwrap();
        assert_eq!(split.train.len(), 1080);
        assert_eq!(split.test.len(), 360);
        let mut all: Vec<usize> = split.train.iter().chain(&split.test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..1440).collect::<Vec<_>>());
    }

    #[test]
    fn holdout_mode_keeps_every_value_in_train() {
        let ds = factorial_dataset(&[10, 3, 4, 4, 3]);
        let split =
            plan_split(&ds, SplitMode::HoldoutCombinations { holdout: 360 }, 9).unwrap();
        assert!(split.test.len() >= 360);
        verify_holdout(&ds, &split).unwrap();
    }

    #[test]
    fn same_seed_reproduces_the_split() {
        let ds = factorial_dataset(&[5, 3, 3]);
        for mode in [SplitMode::Random7525, SplitMode::HoldoutCombinations { holdout: 10 }] {
            let a = plan_split(&ds, mode, 77).unwrap();
            let b = plan_split(&ds, mode, 77).unwrap();
            assert_eq!(a.train, b.train);
            assert_eq!(a.test, b.test);
            let c = plan_split(&ds, mode, 78).unwrap();
            assert!(a.train != c.train || a.test != c.test);
        }
    }

    #[test]
    fn infeasible_holdout_is_reported() {
        // a value appearing in exactly one tuple can never be withheld
        let ds = factorial_dataset(&[2, 2]);
        assert!(matches!(
            plan_split(&ds, SplitMode::HoldoutCombinations { holdout: 4 }, 0),
            Err(Error::HoldoutInfeasible(_))
        ));
    }
}
