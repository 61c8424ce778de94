use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::trec::{Qrels, RunFile};
use crate::error::{LsrError, Result};

fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        return Err(LsrError::config("k", "metric cutoff must be >= 1"));
    }
    Ok(())
}

/// Mean over the judged queries (those with at least one doc of grade ≥ 1)
/// of a per-query value. Queries missing from the run score zero.
fn mean_over_judged<F>(qrels: &Qrels, mut per_query: F) -> Result<f64>
where
    F: FnMut(&str, &BTreeMap<String, u32>) -> Option<f64>,
{
    let mut sum = 0.0;
    let mut n = 0usize;
    for (qid, judged) in qrels {
        if let Some(v) = per_query(qid, judged) {
            sum += v;
            n += 1;
        }
    }
    if n == 0 {
        return Err(LsrError::Empty("no evaluable queries"));
    }
    Ok(sum / n as f64)
}

fn has_relevant(judged: &BTreeMap<String, u32>) -> bool {
    judged.values().any(|&g| g >= 1)
}

pub fn mrr_at_k(run: &RunFile, qrels: &Qrels, k: usize) -> Result<f64> {
    check_k(k)?;
    mean_over_judged(qrels, |qid, judged| {
        has_relevant(judged).then(|| {
            run.get(qid)
                .iter()
                .take(k)
                .position(|(d, _)| judged.get(d).is_some_and(|&g| g >= 1))
                .map_or(0.0, |i| 1.0 / (i + 1) as f64)
        })
    })
}

fn gain(grade: u32) -> f64 {
    (2f64).powi(grade as i32) - 1.0
}

fn discount(rank: usize) -> f64 {
    ((rank + 1) as f64).log2()
}

pub fn ndcg_at_k(run: &RunFile, qrels: &Qrels, k: usize) -> Result<f64> {
    check_k(k)?;
    mean_over_judged(qrels, |qid, judged| {
        let mut grades: Vec<u32> = judged.values().copied().filter(|&g| g > 0).collect();
        grades.sort_unstable_by(|a, b| b.cmp(a));
        let ideal: f64 = grades
            .iter()
            .take(k)
            .enumerate()
            .map(|(i, &g)| gain(g) / discount(i + 1))
            .sum();
        (ideal > 0.0).then(|| {
            let dcg: f64 = run
                .get(qid)
                .iter()
                .take(k)
                .enumerate()
                .map(|(i, (d, _))| gain(judged.get(d).copied().unwrap_or(0)) / discount(i + 1))
                .sum();
            dcg / ideal
        })
    })
}

pub fn recall_at_k(run: &RunFile, qrels: &Qrels, k: usize) -> Result<f64> {
    check_k(k)?;
    mean_over_judged(qrels, |qid, judged| {
        let relevant = judged.values().filter(|&&g| g >= 1).count();
        (relevant > 0).then(|| {
            let hit = run
                .get(qid)
                .iter()
                .take(k)
                .filter(|(d, _)| judged.get(d).is_some_and(|&g| g >= 1))
                .count();
            hit as f64 / relevant as f64
        })
    })
}

/// The three headline metrics, serialized as `mrr@10`, `ndcg@10`, `recall@1000`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StandardMetrics {
    #[serde(rename = "mrr@10")]
    pub mrr_at_10: f64,
    #[serde(rename = "ndcg@10")]
    pub ndcg_at_10: f64,
    #[serde(rename = "recall@1000")]
    pub recall_at_1000: f64,
}

pub fn evaluate_standard(run: &RunFile, qrels: &Qrels) -> Result<StandardMetrics> {
    Ok(StandardMetrics {
        mrr_at_10: mrr_at_k(run, qrels, 10)?,
        ndcg_at_10: ndcg_at_k(run, qrels, 10)?,
        recall_at_1000: recall_at_k(run, qrels, 1000)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn run_of(qid: &str, docs: &[&str]) -> RunFile {
        let mut r = RunFile::new("t");
        let n = docs.len();
        r.insert(
            qid,
            docs.iter().enumerate().map(|(i, d)| (d.to_string(), (n - i) as f64)).collect(),
        );
        r
    }

    fn qrels_of(qid: &str, judged: &[(&str, u32)]) -> Qrels {
        Qrels::from([(
            qid.to_string(),
            judged.iter().map(|&(d, g)| (d.to_string(), g)).collect(),
        )])
    }

    #[test]
    fn mrr_examples() {
        let q = qrels_of("q", &[("r", 1)]);
        assert_eq!(mrr_at_k(&run_of("q", &["r", "a"]), &q, 10).unwrap(), 1.0);
        assert!((mrr_at_k(&run_of("q", &["a", "b", "r"]), &q, 10).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        let eleven: Vec<String> = (0..10).map(|i| format!("x{i}")).chain(["r".to_string()]).collect();
        let refs: Vec<&str> = eleven.iter().map(String::as_str).collect();
        assert_eq!(mrr_at_k(&run_of("q", &refs), &q, 10).unwrap(), 0.0);
    }

    #[test]
    fn ndcg_examples() {
        let q = qrels_of("q", &[("a", 2), ("b", 1)]);
        assert!((ndcg_at_k(&run_of("q", &["a", "b"]), &q, 10).unwrap() - 1.0).abs() < 1e-15);
        let swapped = ndcg_at_k(&run_of("q", &["b", "a"]), &q, 10).unwrap();
        assert!(swapped < 1.0);

        let q = qrels_of("q", &[("r", 1)]);
        let v = ndcg_at_k(&run_of("q", &["x", "r"]), &q, 10).unwrap();
        assert!((v - 1.0 / 3f64.log2()).abs() < 1e-12);
        assert!((v - 0.6309).abs() < 1e-4);
    }

    #[test]
    fn recall_examples() {
        let q = qrels_of("q", &[("a", 1), ("b", 1)]);
        assert_eq!(recall_at_k(&run_of("q", &["a", "b"]), &q, 10).unwrap(), 1.0);
        assert_eq!(recall_at_k(&run_of("q", &["a", "x"]), &q, 10).unwrap(), 0.5);
        assert_eq!(recall_at_k(&run_of("q", &["x"]), &q, 10).unwrap(), 0.0);
    }

    #[test]
    fn exclusions_and_errors() {
        let q = Qrels::from([
            ("judged".to_string(), [("a".to_string(), 1)].into()),
            ("unjudged".to_string(), [("a".to_string(), 0)].into()),
        ]);
        let mut run = run_of("judged", &["a"]);
        run.insert("unjudged", vec![]);
        run.insert("absent", vec![("a".into(), 1.0)]);
        assert_eq!(mrr_at_k(&run, &q, 10).unwrap(), 1.0);
        assert_eq!(ndcg_at_k(&run, &q, 10).unwrap(), 1.0);

        let none = qrels_of("q", &[("a", 0)]);
        assert!(mrr_at_k(&run, &none, 10).is_err());
        assert!(recall_at_k(&run, &q, 0).is_err());
    }

    proptest! {
        #[test]
        fn bounded_and_monotone_in_k(
            grades in prop::collection::vec(0u32..3, 1..8),
            perm_seed in any::<u64>(),
        ) {
            let docs: Vec<String> = (0..grades.len()).map(|i| format!("d{i}")).collect();
            let mut order: Vec<usize> = (0..docs.len()).collect();
            let mut s = perm_seed;
            for i in (1..order.len()).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                order.swap(i, (s >> 33) as usize % (i + 1));
            }
            let mut run = RunFile::new("t");
            run.insert("q", order.iter().enumerate().map(|(r, &i)| (docs[i].clone(), -(r as f64))).collect());
            let qrels = Qrels::from([("q".to_string(),
                docs.iter().cloned().zip(grades.iter().copied()).collect())]);
            let mut prev_mrr = 0.0;
            let mut prev_rec = 0.0;
            for k in 1..=10 {
                if let (Ok(m), Ok(n), Ok(r)) = (mrr_at_k(&run, &qrels, k), ndcg_at_k(&run, &qrels, k), recall_at_k(&run, &qrels, k)) {
                    for v in [m, n, r] { prop_assert!((0.0..=1.0 + 1e-12).contains(&v)); }
                    prop_assert!(m >= prev_mrr);
                    prop_assert!(r >= prev_rec);
                    prev_mrr = m;
                    prev_rec = r;
                }
            }
        }
    }
}
