//! Bucketing and rank correlation.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scoring::Outcome;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),
    #[error("invalid bucketing: {0}")]
    InvalidBucketing(&'static str),
}

/// Average 1-based ranks; tied values share the mean of their positions.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
}

/// Tie-aware Spearman coefficient: Pearson correlation of midranks.
pub fn spearman_rho(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::DegenerateInput("length mismatch"));
    }
    if x.len() < 3 {
        return Err(StatsError::DegenerateInput("fewer than 3 pairs"));
    }
    let constant = |v: &[f64]| v.iter().all(|a| *a == v[0]);
    if constant(x) || constant(y) {
        return Err(StatsError::DegenerateInput("constant vector"));
    }
    Ok(pearson(&midranks(x), &midranks(y)))
}

/// Coefficient between a per-program property and 0/1 correctness, over shared keys.
pub fn correlate_property(
    values: &BTreeMap<String, f64>,
    outcomes: &BTreeMap<String, Outcome>,
) -> Result<f64, StatsError> {
    let (x, y): (Vec<f64>, Vec<f64>) = values
        .iter()
        .filter_map(|(id, v)| {
            outcomes
                .get(id)
                .map(|o| (*v, if o.correct { 1.0 } else { 0.0 }))
        })
        .unzip();
    spearman_rho(&x, &y)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    /// One (property, correctness) pair per program.
    #[default]
    Program,
    /// One (bucket ordinal, bucket accuracy) pair per occupied bucket.
    Bucket,
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Granularity::Program => "program",
            Granularity::Bucket => "bucket",
        })
    }
}

/// Right-closed buckets: bucket `i` holds values `<= edges[i]` not taken by an earlier one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bucketing {
    edges: Vec<f64>,
    labels: Vec<String>,
    overflow: bool,
}

impl Bucketing {
    /// `labels` needs one entry per edge, plus one for the overflow bucket.
    pub fn new(edges: Vec<f64>, labels: Vec<String>, overflow: bool) -> Result<Self, StatsError> {
        if edges.is_empty() {
            return Err(StatsError::InvalidBucketing("no edges"));
        }
        if edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(StatsError::InvalidBucketing("edges not strictly ascending"));
        }
        if labels.len() != edges.len() + usize::from(overflow) {
            return Err(StatsError::InvalidBucketing(
                "label count does not match buckets",
            ));
        }
        Ok(Bucketing {
            edges,
            labels,
            overflow,
        })
    }

    /// Unit-width buckets `0..=max` plus `>max`.
    pub fn unit_width(max: u32) -> Self {
        let edges = (0..=max).map(f64::from).collect();
        let mut labels: Vec<String> = (0..=max).map(|v| v.to_string()).collect();
        labels.push(format!(">{max}"));
        Bucketing::new(edges, labels, true).expect("valid by construction")
    }

    pub fn cyclomatic() -> Self {
        Bucketing::unit_width(15)
    }

    pub fn cognitive() -> Self {
        Bucketing::unit_width(15)
    }

    pub fn loop_length() -> Self {
        Bucketing::ranges(&[0, 10, 50, 100, 500])
    }

    pub fn lines_of_code() -> Self {
        Bucketing::ranges(&[10, 20, 30, 50, 100])
    }

    /// Integer ranges labelled `lo-hi`, with an overflow bucket.
    fn ranges(bounds: &[u32]) -> Self {
        let mut labels = Vec::new();
        let mut lo = 0;
        for &hi in bounds {
            labels.push(if lo == hi {
                hi.to_string()
            } else {
                format!("{lo}-{hi}")
            });
            lo = hi + 1;
        }
        labels.push(format!(">{}", bounds[bounds.len() - 1]));
        Bucketing::new(bounds.iter().map(|&b| f64::from(b)).collect(), labels, true)
            .expect("valid by construction")
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, bucket: usize) -> &str {
        &self.labels[bucket]
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn bucket_of(&self, value: f64) -> usize {
        match self.edges.iter().position(|&e| value <= e) {
            Some(i) => i,
            None if self.overflow => self.edges.len(),
            None => self.edges.len() - 1,
        }
    }
}

/// Partitions keys by bucket index, in bucket order.
pub fn bucketize(
    values: &BTreeMap<String, f64>,
    bucketing: &Bucketing,
) -> BTreeMap<usize, Vec<String>> {
    let mut out: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for (id, v) in values {
        out.entry(bucketing.bucket_of(*v))
            .or_default()
            .push(id.clone());
    }
    out
}

/// Coefficient between bucket order and per-bucket accuracy over occupied buckets.
pub fn correlate_buckets(
    values: &BTreeMap<String, f64>,
    outcomes: &BTreeMap<String, Outcome>,
    bucketing: &Bucketing,
) -> Result<f64, StatsError> {
    let shared: BTreeMap<String, f64> = values
        .iter()
        .filter(|(id, _)| outcomes.contains_key(*id))
        .map(|(id, v)| (id.clone(), *v))
        .collect();
    let (x, y): (Vec<f64>, Vec<f64>) = bucketize(&shared, bucketing)
        .into_iter()
        .map(|(bucket, ids)| {
            let correct = ids.iter().filter(|id| outcomes[*id].correct).count();
            (bucket as f64, correct as f64 / ids.len() as f64)
        })
        .unzip();
    spearman_rho(&x, &y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scoring::ValueCategory;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Counting ranks and the textbook sums, written independently of the code under test.
    fn oracle(x: &[f64], y: &[f64]) -> f64 {
        let rank = |v: &[f64]| -> Vec<f64> {
            v.iter()
                .map(|a| {
                    let below = v.iter().filter(|b| *b < a).count() as f64;
                    let equal = v.iter().filter(|b| *b == a).count() as f64;
                    below + (equal + 1.0) / 2.0
                })
                .collect()
        };
        let (rx, ry) = (rank(x), rank(y));
        let n = rx.len() as f64;
        let sx: f64 = rx.iter().sum();
        let sy: f64 = ry.iter().sum();
        let sxy: f64 = rx.iter().zip(&ry).map(|(a, b)| a * b).sum();
        let sxx: f64 = rx.iter().map(|a| a * a).sum();
        let syy: f64 = ry.iter().map(|b| b * b).sum();
        (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
    }

    fn tied_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        let levels = rng.gen_range(2..=n.max(2));
        loop {
            let v: Vec<f64> = (0..n).map(|_| rng.gen_range(0..levels) as f64).collect();
            if v.iter().any(|a| *a != v[0]) {
                return v;
            }
        }
    }

    #[test]
    fn examples() {
        assert_eq!(
            spearman_rho(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(),
            -1.0
        );
        assert_eq!(
            spearman_rho(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(),
            1.0
        );
        let r = spearman_rho(&[1.0, 1.0, 2.0], &[1.0, 2.0, 3.0]).unwrap();
        assert!((r - 0.8660254).abs() < 1e-7, "{r}");
    }

    #[test]
    fn degenerate_inputs() {
        assert!(spearman_rho(&[1.0, 2.0], &[2.0, 1.0]).is_err());
        assert!(spearman_rho(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
        assert!(spearman_rho(&[1.0, 2.0, 3.0], &[0.0, 0.0, 0.0]).is_err());
        assert!(spearman_rho(&[1.0, 2.0, 3.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn midranks_average_ties() {
        assert_eq!(
            midranks(&[10.0, 20.0, 10.0, 30.0]),
            vec![1.5, 3.0, 1.5, 4.0]
        );
    }

    fn outcome(id: &str, correct: bool) -> Outcome {
        Outcome {
            problem_id: id.into(),
            correct,
            type_match: correct,
            value_match: correct,
            expected_category: ValueCategory::Int,
            predicted_category: Some(ValueCategory::Int),
        }
    }

    #[test]
    fn correlate_property_examples() {
        let values: BTreeMap<String, f64> = (0..6).map(|i| (format!("p{i}"), i as f64)).collect();
        let all_correct: BTreeMap<_, _> = (0..6)
            .map(|i| (format!("p{i}"), outcome("p", true)))
            .collect();
        assert!(correlate_property(&values, &all_correct).is_err());
        let halves: BTreeMap<_, _> = (0..6)
            .map(|i| (format!("p{i}"), outcome("p", i < 3)))
            .collect();
        let rho = correlate_property(&values, &halves).unwrap();
        assert!((rho - oracle(&[0., 1., 2., 3., 4., 5.], &[1., 1., 1., 0., 0., 0.])).abs() < 1e-12);
        assert!(rho < 0.0);
    }

    #[test]
    fn bucket_examples() {
        let cc = Bucketing::cyclomatic();
        assert_eq!(cc.label(cc.bucket_of(5.0)), "5");
        assert_eq!(cc.label(cc.bucket_of(40.0)), ">15");
        let loops = Bucketing::loop_length();
        let labels: Vec<_> = [0.0, 1.0, 10.0, 11.0, 100.0, 500.0, 501.0]
            .iter()
            .map(|v| loops.label(loops.bucket_of(*v)))
            .collect();
        assert_eq!(
            labels,
            ["0", "1-10", "1-10", "11-50", "51-100", "101-500", ">500"]
        );
        assert!(bucketize(&BTreeMap::new(), &cc).is_empty());
        let closed = Bucketing::new(vec![1.0, 2.0], vec!["a".into(), "b".into()], false).unwrap();
        assert_eq!(closed.bucket_of(9.0), 1);
    }

    #[test]
    fn invalid_bucketings() {
        assert!(Bucketing::new(vec![2.0, 1.0], vec!["a".into(), "b".into()], false).is_err());
        assert!(Bucketing::new(vec![1.0], vec![], false).is_err());
        assert!(Bucketing::new(vec![], vec![], true).is_err());
    }

    #[test]
    fn bucket_level_correlation() {
        let values: BTreeMap<String, f64> =
            (0..8).map(|i| (format!("p{i}"), (i / 2) as f64)).collect();
        let outcomes: BTreeMap<_, _> = (0..8)
            .map(|i| (format!("p{i}"), outcome("p", i < 3)))
            .collect();
        let rho = correlate_buckets(&values, &outcomes, &Bucketing::cyclomatic()).unwrap();
        assert!(rho < 0.0);
    }

    #[test]
    fn matches_oracle_on_1000_tied_vectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let n = rng.gen_range(3..=50);
            let x = tied_vector(&mut rng, n);
            let y = tied_vector(&mut rng, n);
            let got = spearman_rho(&x, &y).unwrap();
            let want = oracle(&x, &y);
            assert!((got - want).abs() <= 1e-12, "{got} vs {want}");
        }
    }

    proptest! {
        #[test]
        fn symmetric_and_rank_invariant(seed: u64, n in 3usize..50) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = tied_vector(&mut rng, n);
            let y = tied_vector(&mut rng, n);
            let rho = spearman_rho(&x, &y).unwrap();
            prop_assert_eq!(rho, spearman_rho(&y, &x).unwrap());
            let fx: Vec<f64> = x.iter().map(|v| v * v * v + 2.0 * v - 7.0).collect();
            prop_assert_eq!(rho, spearman_rho(&fx, &y).unwrap());
            prop_assert!((-1.0..=1.0).contains(&rho));
        }

        #[test]
        fn bucketize_partitions(values in prop::collection::btree_map("[a-z]{1,4}", 0u32..700, 0..40)) {
            let values: BTreeMap<String, f64> = values.into_iter().map(|(k, v)| (k, f64::from(v))).collect();
            for b in [Bucketing::cyclomatic(), Bucketing::loop_length(), Bucketing::lines_of_code()] {
                let buckets = bucketize(&values, &b);
                let mut all: Vec<String> = buckets.values().flatten().cloned().collect();
                prop_assert_eq!(all.len(), values.len());
                all.sort();
                all.dedup();
                prop_assert_eq!(all.len(), values.len());
                prop_assert!(buckets.keys().all(|&i| i < b.len()));
            }
        }
    }
}
