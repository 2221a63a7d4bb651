//! Fixed-capacity, class-balanced replay memory.
//!
//! The capacity is split evenly over the classes seen so far. When a class
//! has more candidates than its quota, the survivors are chosen by
//! uncertainty rank (bottom-k, step-size or top-k) or, for the plain
//! experience-replay baseline, uniformly at random.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scoring::ScoreKind;
use crate::stream::Sample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Strategy {
    /// Keep the most uncertain members.
    #[serde(rename = "top")]
    TopK,
    /// Keep members evenly spaced along the uncertainty ordering.
    #[serde(rename = "step")]
    StepSize,
    /// Keep the least uncertain members.
    #[serde(rename = "bottom")]
    BottomK,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::TopK, Strategy::StepSize, Strategy::BottomK];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::TopK => "top",
            Strategy::StepSize => "step",
            Strategy::BottomK => "bottom",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| invalid(format!("unknown strategy {s:?} (expected top|step|bottom)")))
    }
}

/// How a full class chooses its survivors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Retention {
    Ranked { kind: ScoreKind, strategy: Strategy },
    /// Uniform choice within each class quota; no scores are computed.
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MemoryEntry {
    pub sample: Sample,
    pub score: f64,
    pub inserted_at: u64,
}

impl MemoryEntry {
    fn rank_cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.score
            .total_cmp(&other.score)
            .then(self.inserted_at.cmp(&other.inserted_at))
            .then(self.sample.id.cmp(&other.sample.id))
    }
}

/// Uncertainty of a sample under the current model; larger is more uncertain.
pub trait SampleScorer {
    fn score(&self, sample: &Sample) -> Result<f64>;
}

impl<F: Fn(&Sample) -> Result<f64>> SampleScorer for F {
    fn score(&self, sample: &Sample) -> Result<f64> {
        self(sample)
    }
}

/// `floor(capacity / k)` per class, remainder one each to the earliest classes.
pub fn class_quotas(capacity: usize, classes_seen: &[usize]) -> BTreeMap<usize, usize> {
    let k = classes_seen.len();
    if k == 0 {
        return BTreeMap::new();
    }
    let (base, rem) = (capacity / k, capacity % k);
    classes_seen
        .iter()
        .enumerate()
        .map(|(i, &c)| (c, base + usize::from(i < rem)))
        .collect()
}

/// Positions `floor(i * n / m)` for `i in 0..m`.
pub fn step_indices(n: usize, m: usize) -> Vec<usize> {
    (0..m).map(|i| i * n / m).collect()
}

/// Pick `quota` entries from candidates sorted ascending by
/// `(score, inserted_at, id)`.
pub fn select_retained(candidates: &[MemoryEntry], quota: usize, strategy: Strategy) -> Result<Vec<MemoryEntry>> {
    if let Some(i) = candidates
        .windows(2)
        .position(|w| w[0].rank_cmp(&w[1]) == std::cmp::Ordering::Greater)
    {
        return Err(Error::ContractViolation(format!(
            "retention candidates not sorted ascending at position {}",
            i + 1
        )));
    }
    let n = candidates.len();
    if n <= quota {
        return Ok(candidates.to_vec());
    }
    Ok(match strategy {
        Strategy::BottomK => candidates[..quota].to_vec(),
        Strategy::TopK => candidates[n - quota..].to_vec(),
        Strategy::StepSize => step_indices(n, quota)
            .into_iter()
            .map(|i| candidates[i].clone())
            .collect(),
    })
}

#[derive(Debug, Clone)]
pub struct ReplayMemory {
    capacity: usize,
    retention: Retention,
    classes_seen: Vec<usize>,
    per_class: BTreeMap<usize, Vec<MemoryEntry>>,
    update_counter: u64,
}

impl ReplayMemory {
    pub fn new(capacity: usize, retention: Retention) -> Self {
        ReplayMemory {
            capacity,
            retention,
            classes_seen: Vec::new(),
            per_class: BTreeMap::new(),
            update_counter: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn retention(&self) -> Retention {
        self.retention
    }

    pub fn len(&self) -> usize {
        self.per_class.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn update_counter(&self) -> u64 {
        self.update_counter
    }

    /// Classes in order of first appearance.
    pub fn classes_seen(&self) -> &[usize] {
        &self.classes_seen
    }

    pub fn class_entries(&self, class: usize) -> &[MemoryEntry] {
        self.per_class.get(&class).map_or(&[], Vec::as_slice)
    }

    pub fn entries(&self) -> impl Iterator<Item = &MemoryEntry> {
        self.per_class.values().flatten()
    }

    pub fn quotas(&self) -> BTreeMap<usize, usize> {
        class_quotas(self.capacity, &self.classes_seen)
    }

    /// Insert a stream batch, rescoring every touched class with `scorer`.
    /// On error the memory is left unchanged.
    pub fn update(&mut self, batch: &[Sample], scorer: &dyn SampleScorer) -> Result<()> {
        let Retention::Ranked { strategy, .. } = self.retention else {
            return Err(Error::ContractViolation(
                "random-retention memory must be updated with update_random".into(),
            ));
        };
        self.apply(batch, |candidates, quota| {
            let mut scored = candidates;
            for e in &mut scored {
                e.score = scorer.score(&e.sample)?;
                if !(e.score.is_finite()) {
                    return Err(invalid(format!("non-finite score for sample {}", e.sample.id)));
                }
            }
            scored.sort_by(MemoryEntry::rank_cmp);
            select_retained(&scored, quota, strategy)
        })
    }

    /// Class-balanced random retention used by the experience-replay baseline.
    pub fn update_random<R: Rng + ?Sized>(&mut self, batch: &[Sample], rng: &mut R) -> Result<()> {
        if self.retention != Retention::Random {
            return Err(Error::ContractViolation(
                "ranked memory must be updated with a scorer".into(),
            ));
        }
        self.apply(batch, |candidates, quota| {
            if candidates.len() <= quota {
                return Ok(candidates);
            }
            let mut keep = index::sample(rng, candidates.len(), quota).into_vec();
            keep.sort_unstable();
            Ok(keep.into_iter().map(|i| candidates[i].clone()).collect())
        })
    }

    fn apply<F>(&mut self, batch: &[Sample], mut choose: F) -> Result<()>
    where
        F: FnMut(Vec<MemoryEntry>, usize) -> Result<Vec<MemoryEntry>>,
    {
        if batch.is_empty() {
            return Err(invalid("memory update needs a nonempty batch"));
        }
        let stamp = self.update_counter + 1;

        let mut incoming: BTreeMap<usize, Vec<MemoryEntry>> = BTreeMap::new();
        for s in batch {
            incoming.entry(s.label).or_default().push(MemoryEntry {
                sample: s.clone(),
                score: 0.0,
                inserted_at: stamp,
            });
        }
        // new labels join in ascending order so batch order never matters
        let mut seen = self.classes_seen.clone();
        for &c in incoming.keys() {
            if !seen.contains(&c) {
                seen.push(c);
            }
        }
        let quotas = class_quotas(self.capacity, &seen);

        let mut next = self.per_class.clone();
        for (&class, &quota) in &quotas {
            let stored = self.class_entries(class);
            let mut fresh = incoming.remove(&class).unwrap_or_default();
            if fresh.is_empty() && stored.len() <= quota {
                continue;
            }
            fresh.sort_by_key(|e| e.sample.id);
            let retained = if quota == 0 {
                Vec::new()
            } else {
                let mut candidates = stored.to_vec();
                candidates.extend(fresh);
                choose(candidates, quota)?
            };
            next.insert(class, retained);
        }

        self.classes_seen = seen;
        self.per_class = next;
        self.update_counter = stamp;
        Ok(())
    }

    /// Up to `n` distinct stored samples from tasks other than `current_task`,
    /// drawn uniformly without replacement.
    pub fn sample_replay<R: Rng + ?Sized>(&self, n: usize, current_task: usize, rng: &mut R) -> Vec<Sample> {
        let mut eligible: Vec<&MemoryEntry> = self.entries().filter(|e| e.sample.task != current_task).collect();
        eligible.sort_by_key(|e| e.sample.id);
        if eligible.is_empty() || n == 0 {
            return Vec::new();
        }
        let take = n.min(eligible.len());
        index::sample(rng, eligible.len(), take)
            .into_iter()
            .map(|i| eligible[i].sample.clone())
            .collect()
    }

    /// CSV dump with columns `sample_id,class,task,score,inserted_at`.
    pub fn write_dump<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["sample_id", "class", "task", "score", "inserted_at"])?;
        for e in self.entries() {
            w.write_record([
                e.sample.id.to_string(),
                e.sample.label.to_string(),
                e.sample.task.to_string(),
                e.score.to_string(),
                e.inserted_at.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<memory dump>", e))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, REPLAY};
    use std::collections::HashMap;

    fn sample(id: u64, label: usize, task: usize) -> Sample {
        Sample {
            id,
            features: vec![id as f64],
            label,
            task,
        }
    }

    fn entry(id: u64, score: f64) -> MemoryEntry {
        MemoryEntry {
            sample: sample(id, 0, 0),
            score,
            inserted_at: 1,
        }
    }

    fn table_scorer(table: HashMap<u64, f64>) -> impl Fn(&Sample) -> Result<f64> {
        move |s: &Sample| Ok(table[&s.id])
    }

    fn ranked(strategy: Strategy) -> Retention {
        Retention::Ranked {
            kind: ScoreKind::Bi,
            strategy,
        }
    }

    #[test]
    fn quota_examples() {
        let q = class_quotas(10, &[0, 1]);
        assert_eq!(q.values().copied().collect::<Vec<_>>(), vec![5, 5]);
        // A=7, B=3, C=5 in appearance order
        let q = class_quotas(10, &[7, 3, 5]);
        assert_eq!((q[&7], q[&3], q[&5]), (4, 3, 3));
        let q = class_quotas(2, &[4, 3, 2, 1, 0]);
        assert_eq!((q[&4], q[&3], q[&2], q[&1], q[&0]), (1, 1, 0, 0, 0));
    }

    #[test]
    fn select_examples() {
        let c: Vec<MemoryEntry> = [0.1, 0.3, 0.5, 0.7, 0.9]
            .iter()
            .enumerate()
            .map(|(i, &s)| entry(i as u64, s))
            .collect();
        let scores = |v: Vec<MemoryEntry>| v.iter().map(|e| e.score).collect::<Vec<_>>();
        assert_eq!(scores(select_retained(&c, 2, Strategy::BottomK).unwrap()), vec![0.1, 0.3]);
        assert_eq!(scores(select_retained(&c, 2, Strategy::TopK).unwrap()), vec![0.7, 0.9]);
        assert_eq!(scores(select_retained(&c, 2, Strategy::StepSize).unwrap()), vec![0.1, 0.5]);
        assert_eq!(select_retained(&c, 9, Strategy::TopK).unwrap().len(), 5);
        assert!(select_retained(&c, 0, Strategy::TopK).unwrap().is_empty());
    }

    #[test]
    fn unsorted_candidates_are_a_contract_violation() {
        let c = vec![entry(0, 0.5), entry(1, 0.1)];
        assert!(matches!(
            select_retained(&c, 1, Strategy::BottomK),
            Err(Error::ContractViolation(_))
        ));
    }

    fn two_class_batch() -> (Vec<Sample>, HashMap<u64, f64>) {
        let batch = vec![sample(0, 0, 0), sample(1, 0, 0), sample(2, 0, 0), sample(3, 1, 0), sample(4, 1, 0)];
        let table = HashMap::from([(0, 0.9), (1, 0.1), (2, 0.5), (3, 0.3), (4, 0.7)]);
        (batch, table)
    }

    fn retained_scores(mem: &ReplayMemory, class: usize) -> Vec<f64> {
        mem.class_entries(class).iter().map(|e| e.score).collect()
    }

    #[test]
    fn update_bottom_and_top_examples() {
        let (batch, table) = two_class_batch();
        let mut bottom = ReplayMemory::new(4, ranked(Strategy::BottomK));
        bottom.update(&batch, &table_scorer(table.clone())).unwrap();
        assert_eq!(retained_scores(&bottom, 0), vec![0.1, 0.5]);
        assert_eq!(retained_scores(&bottom, 1), vec![0.3, 0.7]);

        let mut top = ReplayMemory::new(4, ranked(Strategy::TopK));
        top.update(&batch, &table_scorer(table)).unwrap();
        assert_eq!(retained_scores(&top, 0), vec![0.5, 0.9]);
        assert_eq!(retained_scores(&top, 1), vec![0.3, 0.7]);
    }

    #[test]
    fn small_batch_is_stored_whole() {
        let (batch, table) = two_class_batch();
        for s in Strategy::ALL {
            let mut m = ReplayMemory::new(100, ranked(s));
            m.update(&batch, &table_scorer(table.clone())).unwrap();
            assert_eq!(m.len(), 5);
        }
    }

    #[test]
    fn batch_order_does_not_matter() {
        let (mut batch, table) = two_class_batch();
        let mut a = ReplayMemory::new(3, ranked(Strategy::StepSize));
        a.update(&batch, &table_scorer(table.clone())).unwrap();
        batch.reverse();
        let mut b = ReplayMemory::new(3, ranked(Strategy::StepSize));
        b.update(&batch, &table_scorer(table)).unwrap();
        assert_eq!(a.classes_seen(), b.classes_seen());
        assert_eq!(a.entries().collect::<Vec<_>>(), b.entries().collect::<Vec<_>>());
    }

    #[test]
    fn scorer_failure_leaves_memory_unchanged() {
        let (batch, table) = two_class_batch();
        let mut m = ReplayMemory::new(3, ranked(Strategy::BottomK));
        m.update(&batch, &table_scorer(table)).unwrap();
        let before = m.entries().cloned().collect::<Vec<_>>();
        let failing = |_: &Sample| -> Result<f64> { Err(invalid("model exploded")) };
        assert!(m.update(&[sample(9, 2, 1)], &failing).is_err());
        assert_eq!(m.entries().cloned().collect::<Vec<_>>(), before);
        assert_eq!(m.classes_seen(), &[0, 1]);
        assert_eq!(m.update_counter(), 1);
    }

    #[test]
    fn new_class_shrinks_old_quota_by_strategy() {
        let (batch, table) = two_class_batch();
        let mut m = ReplayMemory::new(4, ranked(Strategy::BottomK));
        let mut table = table;
        table.insert(10, 0.2);
        table.insert(11, 0.4);
        let scorer = table_scorer(table);
        m.update(&batch, &scorer).unwrap();
        m.update(&[sample(10, 2, 1), sample(11, 2, 1)], &scorer).unwrap();
        // quotas {0:2, 1:1, 2:1}
        assert_eq!(retained_scores(&m, 0), vec![0.1, 0.5]);
        assert_eq!(retained_scores(&m, 1), vec![0.3]);
        assert_eq!(retained_scores(&m, 2), vec![0.2]);
    }

    #[test]
    fn ties_prefer_earlier_insertion_for_bottom() {
        let mut m = ReplayMemory::new(1, ranked(Strategy::BottomK));
        let flat = |_: &Sample| Ok(0.5);
        m.update(&[sample(5, 0, 0)], &flat).unwrap();
        m.update(&[sample(2, 0, 0)], &flat).unwrap();
        assert_eq!(m.class_entries(0)[0].sample.id, 5);
        assert_eq!(m.class_entries(0)[0].inserted_at, 1);
    }

    #[test]
    fn zero_capacity_stores_nothing() {
        let mut m = ReplayMemory::new(0, ranked(Strategy::TopK));
        let never = |_: &Sample| -> Result<f64> { panic!("no scoring at zero capacity") };
        m.update(&[sample(0, 0, 0), sample(1, 1, 0)], &never).unwrap();
        assert!(m.is_empty());
        assert_eq!(m.classes_seen(), &[0, 1]);
    }

    #[test]
    fn empty_batch_rejected_and_retention_mismatch() {
        let mut m = ReplayMemory::new(3, ranked(Strategy::TopK));
        assert!(m.update(&[], &|_: &Sample| Ok(0.0)).is_err());
        assert!(m.update_random(&[sample(0, 0, 0)], &mut substream(0, REPLAY)).is_err());
        let mut r = ReplayMemory::new(3, Retention::Random);
        assert!(r.update(&[sample(0, 0, 0)], &|_: &Sample| Ok(0.0)).is_err());
    }

    #[test]
    fn random_retention_respects_quotas() {
        let mut m = ReplayMemory::new(5, Retention::Random);
        let mut rng = substream(4, "er-retention");
        let batch: Vec<Sample> = (0..20).map(|i| sample(i, (i % 2) as usize, 0)).collect();
        m.update_random(&batch, &mut rng).unwrap();
        assert_eq!(m.class_entries(0).len(), 3);
        assert_eq!(m.class_entries(1).len(), 2);
    }

    #[test]
    fn replay_excludes_current_task() {
        let mut m = ReplayMemory::new(10, ranked(Strategy::BottomK));
        let zero = |_: &Sample| Ok(0.0);
        m.update(&[sample(0, 0, 1), sample(1, 1, 1)], &zero).unwrap();
        assert!(m.sample_replay(10, 1, &mut substream(0, REPLAY)).is_empty());
        m.update(&[sample(2, 2, 0), sample(3, 2, 0), sample(4, 3, 0)], &zero).unwrap();
        let got = m.sample_replay(10, 1, &mut substream(0, REPLAY));
        assert_eq!(got.len(), 3);
        assert!(got.iter().all(|s| s.task == 0));
    }

    #[test]
    fn replay_is_deterministic_and_distinct() {
        let mut m = ReplayMemory::new(100, ranked(Strategy::BottomK));
        let batch: Vec<Sample> = (0..100).map(|i| sample(i, (i % 5) as usize, 0)).collect();
        m.update(&batch, &|_: &Sample| Ok(0.0)).unwrap();
        let a: Vec<u64> = m.sample_replay(10, 3, &mut substream(8, REPLAY)).iter().map(|s| s.id).collect();
        let b: Vec<u64> = m.sample_replay(10, 3, &mut substream(8, REPLAY)).iter().map(|s| s.id).collect();
        assert_eq!(a, b);
        let mut d = a.clone();
        d.sort_unstable();
        d.dedup();
        assert_eq!(d.len(), 10);
    }

    #[test]
    fn dump_has_expected_columns() {
        let (batch, table) = two_class_batch();
        let mut m = ReplayMemory::new(4, ranked(Strategy::BottomK));
        m.update(&batch, &table_scorer(table)).unwrap();
        let mut out = Vec::new();
        m.write_dump(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "sample_id,class,task,score,inserted_at");
        assert_eq!(lines.next().unwrap(), "1,0,0,0.1,1");
        assert_eq!(text.lines().count(), 5);
    }

    #[test]
    fn strategy_names() {
        for s in Strategy::ALL {
            assert_eq!(s.as_str().parse::<Strategy>().unwrap(), s);
        }
        assert!("Top".parse::<Strategy>().is_err());
    }
}
