//! Ten-fold plans. In round `f`, the entries assigned to fold `f` are the
//! test set, those assigned to fold `f - 1` (cyclically) are the validation
//! set, and the other eight folds train.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::manifest::DatasetManifest;
use crate::error::{Error, Result};

pub const FOLDS: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FoldMode {
    /// Sorted position `p` goes to fold `p mod 10`.
    Indexed,
    /// Seeded shuffle within each class, then round-robin assignment.
    Random,
}

impl std::fmt::Display for FoldMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FoldMode::Indexed => "indexed",
            FoldMode::Random => "random",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Train,
    Valid,
    Test,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct FoldSplit {
    pub train: Vec<usize>,
    pub valid: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FoldPlan {
    pub mode: FoldMode,
    pub seed: u64,
    /// 0-based fold of each entry.
    pub assignment: Vec<usize>,
    pub splits: Vec<FoldSplit>,
}

impl FoldPlan {
    fn from_assignment(mode: FoldMode, seed: u64, assignment: Vec<usize>) -> Self {
        let splits = (0..FOLDS)
            .map(|f| {
                let valid_fold = (f + FOLDS - 1) % FOLDS;
                let mut s = FoldSplit::default();
                for (i, &a) in assignment.iter().enumerate() {
                    if a == f {
                        s.test.push(i);
                    } else if a == valid_fold {
                        s.valid.push(i);
                    } else {
                        s.train.push(i);
                    }
                }
                s
            })
            .collect();
        Self {
            mode,
            seed,
            assignment,
            splits,
        }
    }

    /// Role of entry `i` in 0-based fold `f`.
    pub fn role(&self, fold: usize, i: usize) -> Role {
        let s = &self.splits[fold];
        if s.test.contains(&i) {
            Role::Test
        } else if s.valid.contains(&i) {
            Role::Valid
        } else {
            Role::Train
        }
    }

    /// Every round must split all entries into disjoint train, validation
    /// and test sets, each test set must be non-empty, every entry must be
    /// tested exactly once overall, and manifest paths must be unique.
    pub fn audit(&self, manifest: &DatasetManifest) -> Result<()> {
        let n = manifest.len();
        let paths: HashSet<_> = manifest.entries.iter().map(|e| &e.path).collect();
        if paths.len() != n {
            return Err(Error::Leakage("manifest contains repeated image paths".into()));
        }
        if self.splits.len() != FOLDS {
            return Err(Error::Leakage(format!("{} folds instead of {FOLDS}", self.splits.len())));
        }
        let mut tested = vec![0usize; n];
        for (f, s) in self.splits.iter().enumerate() {
            let mut seen = vec![false; n];
            for &i in s.train.iter().chain(&s.valid).chain(&s.test) {
                if i >= n {
                    return Err(Error::Leakage(format!("fold {}: entry {i} out of range", f + 1)));
                }
                if seen[i] {
                    return Err(Error::Leakage(format!(
                        "fold {}: entry {i} ({}) appears in more than one role",
                        f + 1,
                        manifest.entries[i].path.display()
                    )));
                }
                seen[i] = true;
            }
            if let Some(i) = seen.iter().position(|s| !s) {
                return Err(Error::Leakage(format!("fold {}: entry {i} has no role", f + 1)));
            }
            if s.test.is_empty() || s.valid.is_empty() || s.train.is_empty() {
                return Err(Error::Leakage(format!("fold {}: an empty role set", f + 1)));
            }
            for &i in &s.test {
                tested[i] += 1;
            }
        }
        if let Some(i) = tested.iter().position(|&t| t != 1) {
            return Err(Error::Leakage(format!("entry {i} is tested {} times", tested[i])));
        }
        Ok(())
    }
}

pub fn make_fold_plan(manifest: &DatasetManifest, mode: FoldMode, seed: u64) -> Result<FoldPlan> {
    let n = manifest.len();
    if n < FOLDS {
        return Err(Error::InvalidArgument(format!("{n} entries cannot form {FOLDS} folds")));
    }
    let assignment = match mode {
        FoldMode::Indexed => (0..n).map(|p| p % FOLDS).collect(),
        FoldMode::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut assignment = vec![0; n];
            let mut counter = 0;
            for (label, class) in manifest.classes.iter().enumerate() {
                let mut members: Vec<usize> =
                    manifest.entries.iter().filter(|e| e.label == label).map(|e| e.index).collect();
                if members.len() < FOLDS {
                    return Err(Error::ClassTooSmall {
                        class: class.clone(),
                        count: members.len(),
                        required: FOLDS,
                    });
                }
                members.shuffle(&mut rng);
                for i in members {
                    assignment[i] = counter % FOLDS;
                    counter += 1;
                }
            }
            assignment
        }
    };
    let plan = FoldPlan::from_assignment(mode, seed, assignment);
    plan.audit(manifest)?;
    Ok(plan)
}
