use serde::{Deserialize, Serialize};

use crate::expr::OperatorSequence;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub e: OperatorSequence,
    /// Operator names, for readability of saved pools.
    pub ops: Vec<String>,
    pub theta: Vec<f64>,
    pub score: f64,
    pub loss: f64,
    pub origin_iteration: usize,
}

/// Top-K candidates by score, best first. A sequence appears at most once.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidatePool {
    pub capacity: usize,
    pub entries: Vec<Candidate>,
}

impl CandidatePool {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity,
            entries: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn min_score(&self) -> Option<f64> {
        self.entries.last().map(|c| c.score)
    }

    /// Inserts `cand` if it improves the pool; returns whether it was kept.
    pub fn insert(&mut self, cand: Candidate) -> bool {
        if self.capacity == 0 {
            return false;
        }
        if let Some(pos) = self.entries.iter().position(|c| c.e == cand.e) {
            if cand.score <= self.entries[pos].score {
                return false;
            }
            self.entries.remove(pos);
        } else if self.entries.len() >= self.capacity {
            if cand.score <= self.min_score().unwrap_or(f64::NEG_INFINITY) {
                return false;
            }
            self.entries.pop();
        }
        // After existing entries with an equal score, so earlier arrivals stay ahead.
        let at = self.entries.partition_point(|c| c.score >= cand.score);
        self.entries.insert(at, cand);
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cand(id: usize, score: f64) -> Candidate {
        Candidate {
            e: OperatorSequence(vec![id]),
            ops: vec![],
            theta: vec![],
            score,
            loss: 1.0 / score - 1.0,
            origin_iteration: 0,
        }
    }

    fn scores(p: &CandidatePool) -> Vec<f64> {
        p.entries.iter().map(|c| c.score).collect()
    }

    #[test]
    fn insertion_rules() {
        let mut p = CandidatePool::new(3);
        assert!(p.insert(cand(0, 0.9)));
        assert!(p.insert(cand(1, 0.8)));
        assert!(p.insert(cand(2, 0.7)));
        assert!(p.insert(cand(3, 0.75)));
        assert_eq!(scores(&p), vec![0.9, 0.8, 0.75]);
        assert!(!p.insert(cand(4, 0.6)));
        assert_eq!(p.len(), 3);
    }

    #[test]
    fn duplicates_keep_the_higher_score() {
        let mut p = CandidatePool::new(3);
        p.insert(cand(0, 0.5));
        assert!(!p.insert(cand(0, 0.4)));
        assert!(p.insert(cand(0, 0.95)));
        assert_eq!(p.len(), 1);
        assert_eq!(scores(&p), vec![0.95]);
    }

    proptest! {
        #[test]
        fn pool_holds_top_k_distinct(k in 1usize..6, draws in proptest::collection::vec((0usize..8, 0.0f64..1.0), 0..60)) {
            let mut p = CandidatePool::new(k);
            let mut best = std::collections::BTreeMap::new();
            for (id, s) in &draws {
                p.insert(cand(*id, *s));
                let e = best.entry(*id).or_insert(*s);
                if *s > *e { *e = *s; }
            }
            let mut shadow: Vec<f64> = best.values().copied().collect();
            shadow.sort_by(|a, b| b.total_cmp(a));
            shadow.truncate(k);
            prop_assert_eq!(scores(&p), shadow);
        }
    }
}
