use serde::{Deserialize, Serialize};

use super::{ModelError, RewardTable};

/// Deterministic stationary admission policy: the set of admitted classes
/// for each state `0..S-1`. The full state `S` admits nothing and is not
/// stored.
///
/// Serializes as an array of per-state class-index lists (0-based).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Policy {
    accept: Vec<Vec<usize>>,
}

impl Policy {
    /// Builds a policy from per-state admitted sets. Class indices are
    /// sorted and deduplicated.
    pub fn from_sets(mut accept: Vec<Vec<usize>>) -> Self {
        for set in &mut accept {
            set.sort_unstable();
            set.dedup();
        }
        Self { accept }
    }

    pub fn accept_all(capacity: usize, num_classes: usize) -> Self {
        Self {
            accept: vec![(0..num_classes).collect(); capacity],
        }
    }

    pub fn reject_all(capacity: usize) -> Self {
        Self {
            accept: vec![Vec::new(); capacity],
        }
    }

    /// Admits, in each state, the `counts[s]` highest-priority classes.
    pub fn from_priority_prefixes(table: &RewardTable, counts: &[usize]) -> Self {
        let accept = counts
            .iter()
            .enumerate()
            .map(|(s, &k)| table.priority_order(s)[..k].to_vec())
            .collect();
        Self::from_sets(accept)
    }

    /// Trunk-reservation policy: class `i` is admitted iff `s < levels[i]`.
    pub fn from_thresholds(capacity: usize, levels: &[usize]) -> Self {
        let accept = (0..capacity)
            .map(|s| (0..levels.len()).filter(|&i| s < levels[i]).collect())
            .collect();
        Self { accept }
    }

    pub fn capacity(&self) -> usize {
        self.accept.len()
    }

    pub fn accepted(&self, state: usize) -> &[usize] {
        self.accept.get(state).map_or(&[], Vec::as_slice)
    }

    pub fn accepts(&self, state: usize, class: usize) -> bool {
        self.accepted(state).binary_search(&class).is_ok()
    }

    pub fn sets(&self) -> &[Vec<usize>] {
        &self.accept
    }

    /// Checks the dimensions against a model with `capacity` states below
    /// full and `num_classes` classes.
    pub fn check_shape(&self, capacity: usize, num_classes: usize) -> Result<(), ModelError> {
        if self.accept.len() != capacity {
            return Err(ModelError::Dimension(format!(
                "policy covers {} states, model has {} non-full states",
                self.accept.len(),
                capacity
            )));
        }
        if let Some(bad) = self.accept.iter().flatten().find(|&&i| i >= num_classes) {
            return Err(ModelError::Dimension(format!(
                "policy admits class {bad}, model has {num_classes} classes"
            )));
        }
        Ok(())
    }

    /// True if every admitted set is a prefix of the state's priority order
    /// (up to ties in reward).
    pub fn is_prefix_closed(&self, table: &RewardTable) -> bool {
        self.accept.iter().enumerate().all(|(s, set)| {
            let r = table.rewards_at(s);
            set.iter()
                .all(|&j| (0..r.len()).all(|i| r[i] < r[j] || set.contains(&i)))
        })
    }

    /// Per-class control levels if this is a trunk-reservation policy.
    pub fn trunk_reservation_levels(&self, num_classes: usize) -> Option<Vec<usize>> {
        (0..num_classes)
            .map(|i| {
                let level = self.accept.iter().take_while(|set| set.contains(&i)).count();
                let tail_rejects = self.accept[level..].iter().all(|set| !set.contains(&i));
                tail_rejects.then_some(level)
            })
            .collect()
    }

    /// Statewise inclusion: every class admitted by `self` is admitted by
    /// `other`.
    pub fn is_dominated_by(&self, other: &Policy) -> bool {
        self.accept.len() == other.accept.len()
            && self
                .accept
                .iter()
                .zip(&other.accept)
                .all(|(mine, theirs)| mine.iter().all(|i| theirs.contains(i)))
    }
}
