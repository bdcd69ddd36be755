//! Uncertainty scoring and the coordinator's round-robin instance selection.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::synthdata::InstanceId;
use crate::{Error, Result};

/// Distance of each probability from 0.5; lower means more informative.
pub fn uncertainty_scores(probs: &[f64]) -> Vec<f64> {
    probs.iter().map(|p| (p - 0.5).abs()).collect()
}

/// A collaborator's query preference over the pool, most informative first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ranking {
    pub collaborator: usize,
    pub ids: Vec<InstanceId>,
}

impl Ranking {
    pub fn validate(&self) -> Result<()> {
        let unique: BTreeSet<InstanceId> = self.ids.iter().copied().collect();
        if unique.len() != self.ids.len() {
            return Err(Error::ProtocolViolation(format!(
                "ranking of collaborator {} repeats instance ids",
                self.collaborator
            )));
        }
        Ok(())
    }
}

/// Order pool instances by ascending uncertainty score, ties by ascending id.
pub fn rank_for_query(collaborator: usize, probs: &BTreeMap<InstanceId, f64>) -> Ranking {
    let mut entries: Vec<(f64, InstanceId)> = probs
        .iter()
        .map(|(&id, &p)| ((p - 0.5).abs(), id))
        .collect();
    entries.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ranking {
        collaborator,
        ids: entries.into_iter().map(|(_, id)| id).collect(),
    }
}

/// Who supplied a chosen instance and on which selection turn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub collaborator: usize,
    pub turn: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub chosen: Vec<InstanceId>,
    pub provenance: Vec<Provenance>,
}

/// Alternate over rankings (ascending collaborator id), taking each
/// supplier's best not-yet-chosen instance, until `n` unique instances are
/// selected. A supplier whose remaining candidates were all taken by others
/// is skipped on its turn; the turn counter advances per visit either way.
pub fn round_robin_select(rankings: &[Ranking], n: usize) -> Result<SelectionResult> {
    let k = rankings.len();
    if k == 0 {
        return Err(Error::InvalidConfig("no rankings to select from".into()));
    }
    for ranking in rankings {
        ranking.validate()?;
    }
    let union: BTreeSet<InstanceId> = rankings
        .iter()
        .flat_map(|r| r.ids.iter().copied())
        .collect();
    if union.len() < n {
        return Err(Error::InsufficientCandidates {
            needed: n,
            available: union.len(),
        });
    }

    let mut chosen: Vec<InstanceId> = Vec::with_capacity(n);
    let mut provenance: Vec<Provenance> = Vec::with_capacity(n);
    let mut chosen_set: BTreeSet<InstanceId> = BTreeSet::new();
    let mut cursors = vec![0usize; k];
    let mut turn = 0usize;
    while chosen.len() < n {
        let supplier = turn % k;
        let ranking = &rankings[supplier];
        let cursor = &mut cursors[supplier];
        while *cursor < ranking.ids.len() && chosen_set.contains(&ranking.ids[*cursor]) {
            *cursor += 1;
        }
        if *cursor < ranking.ids.len() {
            let id = ranking.ids[*cursor];
            chosen_set.insert(id);
            chosen.push(id);
            // Provenance records the supplier's logical collaborator id, not
            // the slot index; the two coincide for a full roster.
            provenance.push(Provenance {
                collaborator: ranking.collaborator,
                turn,
            });
        }
        turn += 1;
    }
    Ok(SelectionResult { chosen, provenance })
}

/// Pluggable sampling strategy; uncertainty sampling is the only built-in.
pub trait SamplingStrategy: Send + Sync {
    fn name(&self) -> &'static str;

    /// Rank pool instances most-informative-first from Level-2 probabilities.
    fn rank(&self, collaborator: usize, probs: &BTreeMap<InstanceId, f64>) -> Ranking;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct UncertaintySampling;

impl SamplingStrategy for UncertaintySampling {
    fn name(&self) -> &'static str {
        "uncertainty"
    }

    fn rank(&self, collaborator: usize, probs: &BTreeMap<InstanceId, f64>) -> Ranking {
        rank_for_query(collaborator, probs)
    }
}

/// Resolve the sampling function named in a round config.
pub fn sampling_by_name(name: &str) -> Result<Box<dyn SamplingStrategy>> {
    match name {
        "uncertainty" => Ok(Box::new(UncertaintySampling)),
        other => Err(Error::InvalidConfig(format!(
            "unknown sampling function '{other}'"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ranking(cid: usize, ids: &[InstanceId]) -> Ranking {
        Ranking {
            collaborator: cid,
            ids: ids.to_vec(),
        }
    }

    /// Independent step-through of the alternating selection procedure: cycle
    /// the suppliers, and on each visit rescan the supplier's list from the
    /// top for its first instance not selected yet.
    pub(crate) fn step_through_oracle(rankings: &[Ranking], n: usize) -> SelectionResult {
        let mut chosen: Vec<InstanceId> = Vec::new();
        let mut provenance: Vec<Provenance> = Vec::new();
        let mut turn = 0;
        while chosen.len() < n {
            let supplier = &rankings[turn % rankings.len()];
            let next = supplier.ids.iter().find(|id| !chosen.contains(id));
            if let Some(&id) = next {
                chosen.push(id);
                provenance.push(Provenance {
                    collaborator: supplier.collaborator,
                    turn,
                });
            }
            turn += 1;
        }
        SelectionResult { chosen, provenance }
    }

    #[test]
    fn uncertainty_score_arithmetic() {
        assert_eq!(uncertainty_scores(&[0.9, 0.5, 0.1]), vec![0.4, 0.0, 0.4]);
    }

    #[test]
    fn uncertainty_symmetry() {
        for p in [0.0, 0.12, 0.5, 0.77, 1.0] {
            let a = uncertainty_scores(&[p])[0];
            let b = uncertainty_scores(&[1.0 - p])[0];
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn rank_ties_break_by_id() {
        let probs: BTreeMap<InstanceId, f64> =
            [(7, 0.5), (3, 0.5), (9, 0.9)].into_iter().collect();
        let ranking = rank_for_query(0, &probs);
        assert_eq!(ranking.ids, vec![3, 7, 9]);
    }

    #[test]
    fn rank_singleton() {
        let probs: BTreeMap<InstanceId, f64> = [(42, 0.8)].into_iter().collect();
        assert_eq!(rank_for_query(1, &probs).ids, vec![42]);
    }

    #[test]
    fn rank_agrees_with_stable_sort_oracle() {
        // Brute-force oracle: selection sort on (score, id) pairs.
        let mut probs: BTreeMap<InstanceId, f64> = BTreeMap::new();
        let mut state = 0x12345u64;
        for id in 0..50 {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            // Quantized probabilities so ties actually occur.
            let p = ((state >> 33) % 11) as f64 / 10.0;
            probs.insert(id, p);
        }
        let ranking = rank_for_query(0, &probs);

        let mut remaining: Vec<InstanceId> = probs.keys().copied().collect();
        let mut expected = Vec::new();
        while !remaining.is_empty() {
            let mut best = 0;
            for i in 1..remaining.len() {
                let (si, sb) = (
                    (probs[&remaining[i]] - 0.5).abs(),
                    (probs[&remaining[best]] - 0.5).abs(),
                );
                if si < sb || (si == sb && remaining[i] < remaining[best]) {
                    best = i;
                }
            }
            expected.push(remaining.remove(best));
        }
        assert_eq!(ranking.ids, expected);
    }

    #[test]
    fn alternating_selection_with_skip() {
        let rankings = vec![ranking(0, &[5, 3, 7]), ranking(1, &[3, 9, 2])];
        let result = round_robin_select(&rankings, 4).unwrap();
        assert_eq!(result.chosen, vec![5, 3, 7, 9]);
        let suppliers: Vec<usize> = result.provenance.iter().map(|p| p.collaborator).collect();
        assert_eq!(suppliers, vec![0, 1, 0, 1]);
        assert_eq!(result, step_through_oracle(&rankings, 4));
    }

    #[test]
    fn single_collaborator_takes_top_n() {
        let rankings = vec![ranking(0, &[4, 1, 9, 2])];
        let result = round_robin_select(&rankings, 3).unwrap();
        assert_eq!(result.chosen, vec![4, 1, 9]);
    }

    #[test]
    fn identical_rankings_cycle_all_collaborators() {
        let ids = [8, 6, 7, 5];
        let rankings = vec![ranking(0, &ids), ranking(1, &ids), ranking(2, &ids)];
        let result = round_robin_select(&rankings, 3).unwrap();
        assert_eq!(result.chosen, vec![8, 6, 7]);
        let suppliers: Vec<usize> = result.provenance.iter().map(|p| p.collaborator).collect();
        assert_eq!(suppliers, vec![0, 1, 2]);
        assert_eq!(result, step_through_oracle(&rankings, 3));
    }

    #[test]
    fn exhausted_supplier_is_skipped() {
        let rankings = vec![ranking(0, &[1]), ranking(1, &[1, 2, 3])];
        let result = round_robin_select(&rankings, 3).unwrap();
        assert_eq!(result.chosen, vec![1, 2, 3]);
        assert_eq!(result, step_through_oracle(&rankings, 3));
    }

    #[test]
    fn insufficient_candidates_error() {
        let rankings = vec![ranking(0, &[1, 2]), ranking(1, &[2, 1])];
        let err = round_robin_select(&rankings, 3).unwrap_err();
        assert!(matches!(
            err,
            crate::Error::InsufficientCandidates {
                needed: 3,
                available: 2
            }
        ));
    }

    #[test]
    fn duplicate_ids_within_ranking_rejected() {
        let rankings = vec![ranking(0, &[1, 1, 2])];
        assert!(round_robin_select(&rankings, 2).is_err());
    }

    #[test]
    fn fairness_under_disjoint_prefixes() {
        // Disjoint top-(n/k) prefixes with k | n: each supplier contributes
        // exactly n/k instances.
        let rankings = vec![
            ranking(0, &[0, 1, 2]),
            ranking(1, &[10, 11, 12]),
            ranking(2, &[20, 21, 22]),
        ];
        let result = round_robin_select(&rankings, 6).unwrap();
        for cid in 0..3 {
            let supplied = result
                .provenance
                .iter()
                .filter(|p| p.collaborator == cid)
                .count();
            assert_eq!(supplied, 2);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(256))]

        #[test]
        fn selection_matches_oracle_and_invariants(
            k in 1usize..5,
            n in 1usize..11,
            pool in 1u32..31,
            seed in 0u64..10_000,
        ) {
            let mut state = seed.wrapping_add(1);
            let mut next = || {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                state >> 33
            };
            let rankings: Vec<Ranking> = (0..k)
                .map(|cid| {
                    let mut ids: Vec<InstanceId> = (0..pool).collect();
                    // Fisher-Yates with the local generator.
                    for i in (1..ids.len()).rev() {
                        let j = (next() % (i as u64 + 1)) as usize;
                        ids.swap(i, j);
                    }
                    let keep = 1 + (next() % pool as u64) as usize;
                    ids.truncate(keep);
                    Ranking { collaborator: cid, ids }
                })
                .collect();
            let union: BTreeSet<InstanceId> =
                rankings.iter().flat_map(|r| r.ids.iter().copied()).collect();
            prop_assume!(union.len() >= n);

            let result = round_robin_select(&rankings, n).unwrap();
            prop_assert_eq!(&result, &step_through_oracle(&rankings, n));
            let unique: BTreeSet<InstanceId> = result.chosen.iter().copied().collect();
            prop_assert_eq!(unique.len(), n);
            prop_assert_eq!(result.chosen.len(), n);
            for (id, p) in result.chosen.iter().zip(&result.provenance) {
                prop_assert!(rankings[p.collaborator].ids.contains(id));
                prop_assert!(union.contains(id));
            }
        }
    }
}
