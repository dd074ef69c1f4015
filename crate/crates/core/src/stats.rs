//! Evaluation statistics: point-biserial correlation, threshold search,
//! accuracy and confusion counts, rank correlations, and the significance
//! tests used to compare two metrics.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal, StudentsT};

use crate::corpus::CandidateType;
use crate::error::{Error, Result};

/// One metric score for one candidate; the unit exchanged between scorers and statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub context_id: String,
    pub candidate_id: String,
    pub candidate_type: CandidateType,
    pub metric: String,
    pub score: f64,
}

impl ScoreRecord {
    pub fn label(&self) -> u8 {
        self.candidate_type.label()
    }
}

/// A correlation coefficient with its two-sided p-value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub r: f64,
    pub p: f64,
    pub n: usize,
}

/// A test statistic with its two-sided p-value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub fp: usize,
    pub tn: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.fn_ + self.fp + self.tn
    }

    pub fn correct(&self) -> usize {
        self.tp + self.tn
    }

    pub fn errors(&self) -> usize {
        self.fp + self.fn_
    }

    pub fn accuracy(&self) -> f64 {
        self.correct() as f64 / self.total() as f64
    }

    /// Sum of counts, for merging sharded evaluations.
    pub fn merge(&self, other: &ConfusionMatrix) -> ConfusionMatrix {
        ConfusionMatrix {
            tp: self.tp + other.tp,
            fn_: self.fn_ + other.fn_,
            fp: self.fp + other.fp,
            tn: self.tn + other.tn,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quartiles {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

fn check_paired(x: &[f64], y_len: usize) -> Result<()> {
    if x.len() != y_len {
        return Err(Error::InvalidArgument(format!(
            "paired inputs differ in length: {} vs {y_len}",
            x.len()
        )));
    }
    if x.is_empty() {
        return Err(Error::EmptyInput("no observations".into()));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite score".into()));
    }
    Ok(())
}

fn check_labels(labels: &[u8]) -> Result<(usize, usize)> {
    if labels.iter().any(|&l| l > 1) {
        return Err(Error::InvalidArgument("labels must be 0 or 1".into()));
    }
    let n1 = labels.iter().filter(|&&l| l == 1).count();
    Ok((n1, labels.len() - n1))
}

/// Two-sided p-value of a correlation via the t statistic with n-2 degrees of freedom.
fn correlation_p(r: f64, n: usize) -> f64 {
    if n < 3 {
        return f64::NAN;
    }
    if r.abs() >= 1.0 {
        return 0.0;
    }
    let df = (n - 2) as f64;
    let t = r * (df / (1.0 - r * r)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    (2.0 * dist.sf(t.abs())).min(1.0)
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Point-biserial correlation between scores and binary labels.
///
/// Uses the population standard deviation, which makes it numerically the
/// Pearson correlation of the scores with the 0/1 labels.
pub fn point_biserial(scores: &[f64], labels: &[u8]) -> Result<Correlation> {
    check_paired(scores, labels.len())?;
    let (n1, n0) = check_labels(labels)?;
    if n1 == 0 || n0 == 0 {
        return Err(Error::Degenerate("point-biserial needs both classes".into()));
    }
    let n = scores.len() as f64;
    let mu = mean(scores);
    let sd = (scores.iter().map(|s| (s - mu).powi(2)).sum::<f64>() / n).sqrt();
    if sd == 0.0 {
        return Err(Error::Degenerate("scores have zero variance".into()));
    }
    let class_mean = |c: u8, k: usize| {
        scores
            .iter()
            .zip(labels)
            .filter(|(_, &l)| l == c)
            .map(|(s, _)| s)
            .sum::<f64>()
            / k as f64
    };
    let (m1, m0) = (class_mean(1, n1), class_mean(0, n0));
    let r = ((m1 - m0) / sd * ((n1 * n0) as f64 / (n * n)).sqrt()).clamp(-1.0, 1.0);
    Ok(Correlation {
        r,
        p: correlation_p(r, scores.len()),
        n: scores.len(),
    })
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<Correlation> {
    check_paired(x, y.len())?;
    check_paired(y, x.len())?;
    if x.len() < 3 {
        return Err(Error::InvalidArgument("correlation needs at least 3 observations".into()));
    }
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Degenerate("correlation of a constant sequence".into()));
    }
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    Ok(Correlation {
        r,
        p: correlation_p(r, x.len()),
        n: x.len(),
    })
}

/// 1-based ranks with ties sharing their average rank.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation: Pearson on average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<Correlation> {
    check_paired(x, y.len())?;
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Sum over tie groups of t(t-1)/2, t(t-1)(t-2) and t(t-1)(2t+5), for a sorted slice.
fn tie_terms(sorted: &[f64]) -> (f64, f64, f64) {
    let (mut pairs, mut v0, mut v1) = (0.0, 0.0, 0.0);
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        if t > 1.0 {
            pairs += t * (t - 1.0) / 2.0;
            v0 += t * (t - 1.0) * (t - 2.0);
            v1 += t * (t - 1.0) * (2.0 * t + 5.0);
        }
        i = j + 1;
    }
    (pairs, v0, v1)
}

/// Counts strict inversions while merge-sorting `v` in place.
fn count_inversions(v: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut inv = count_inversions(&mut v[..mid]) + count_inversions(&mut v[mid..]);
    let mut merged = Vec::with_capacity(n);
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[j] < v[i] {
            inv += (mid - i) as u64;
            merged.push(v[j]);
            j += 1;
        } else {
            merged.push(v[i]);
            i += 1;
        }
    }
    merged.extend_from_slice(&v[i..mid]);
    merged.extend_from_slice(&v[j..n]);
    v.copy_from_slice(&merged);
    inv
}

/// Kendall tau-b in O(n log n), with a tie-corrected normal approximation for the p-value.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> Result<Correlation> {
    check_paired(x, y.len())?;
    check_paired(y, x.len())?;
    let n = x.len();
    if n < 3 {
        return Err(Error::InvalidArgument("correlation needs at least 3 observations".into()));
    }
    let mut pairs: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let (x_ties, x0, x1) = tie_terms(&xs);
    let mut joint_ties = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && pairs[j + 1] == pairs[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        joint_ties += t * (t - 1.0) / 2.0;
        i = j + 1;
    }
    let mut ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let discordant = count_inversions(&mut ys) as f64;
    let (y_ties, y0, y1) = tie_terms(&ys);

    let total = (n * (n - 1) / 2) as f64;
    if total == x_ties || total == y_ties {
        return Err(Error::Degenerate("Kendall tau of a constant sequence".into()));
    }
    let s = total - x_ties - y_ties + joint_ties - 2.0 * discordant;
    let tau = (s / (total - x_ties).sqrt() / (total - y_ties).sqrt()).clamp(-1.0, 1.0);

    let nf = n as f64;
    let m = nf * (nf - 1.0);
    let var = (m * (2.0 * nf + 5.0) - x1 - y1) / 18.0
        + (2.0 * x_ties * y_ties) / m
        + x0 * y0 / (9.0 * m * (nf - 2.0));
    let z = s / var.sqrt();
    let p = (2.0 * Normal::standard().sf(z.abs())).min(1.0);
    Ok(Correlation { r: tau, p, n })
}

/// Williams' test for two dependent correlations sharing one variable.
///
/// `r12` and `r13` are the correlations of variables 2 and 3 with variable 1;
/// `r23` is the correlation between 2 and 3.
pub fn williams_test(r12: f64, r13: f64, r23: f64, n: usize) -> Result<TestResult> {
    if [r12, r13].iter().any(|r| !(r.abs() < 1.0)) || !(r23.abs() <= 1.0) {
        return Err(Error::InvalidArgument("correlations must lie in (-1, 1)".into()));
    }
    if n < 4 {
        return Err(Error::InvalidArgument("Williams' test needs n >= 4".into()));
    }
    // Equal correlations give t = 0 even when the two metrics coincide (r23 = 1).
    if r12 == r13 {
        return Ok(TestResult { statistic: 0.0, p: 1.0 });
    }
    let nf = n as f64;
    let k = 1.0 - r12 * r12 - r13 * r13 - r23 * r23 + 2.0 * r12 * r13 * r23;
    let denom_sq = 2.0 * k * (nf - 1.0) / (nf - 3.0) + ((r12 + r13).powi(2) / 4.0) * (1.0 - r23).powi(3);
    if !(denom_sq > 0.0) {
        return Err(Error::Degenerate("inconsistent correlation matrix".into()));
    }
    let t = (r12 - r13) * ((nf - 1.0) * (1.0 + r23)).sqrt() / denom_sq.sqrt();
    let dist = StudentsT::new(0.0, 1.0, nf - 3.0).expect("positive degrees of freedom");
    Ok(TestResult {
        statistic: t,
        p: (2.0 * dist.sf(t.abs())).min(1.0),
    })
}

/// Pearson chi-squared on a 2x2 correct/wrong table, no continuity correction.
pub fn chi_squared_2x2(a_correct: usize, a_wrong: usize, b_correct: usize, b_wrong: usize) -> Result<TestResult> {
    let obs = [[a_correct, a_wrong], [b_correct, b_wrong]].map(|r| r.map(|c| c as f64));
    let rows = [obs[0][0] + obs[0][1], obs[1][0] + obs[1][1]];
    let cols = [obs[0][0] + obs[1][0], obs[0][1] + obs[1][1]];
    if rows.contains(&0.0) || cols.contains(&0.0) {
        return Err(Error::Degenerate("contingency table has a zero marginal".into()));
    }
    let total = rows[0] + rows[1];
    let mut stat = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let expected = rows[i] * cols[j] / total;
            stat += (obs[i][j] - expected).powi(2) / expected;
        }
    }
    let dist = ChiSquared::new(1.0).expect("one degree of freedom");
    Ok(TestResult {
        statistic: stat,
        p: dist.sf(stat),
    })
}

/// Five-number summary with linearly interpolated quartiles.
pub fn quartile_summary(scores: &[f64]) -> Result<Quartiles> {
    if scores.is_empty() {
        return Err(Error::EmptyInput("no scores to summarize".into()));
    }
    let mut v = scores.to_vec();
    v.sort_by(f64::total_cmp);
    let q = |p: f64| {
        let pos = p * (v.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
    };
    Ok(Quartiles {
        min: v[0],
        q1: q(0.25),
        median: q(0.5),
        q3: q(0.75),
        max: v[v.len() - 1],
    })
}

/// Candidate thresholds `lo, lo + step, …, hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdGrid {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl Default for ThresholdGrid {
    fn default() -> Self {
        ThresholdGrid {
            lo: 0.0,
            hi: 1.0,
            step: 0.01,
        }
    }
}

impl ThresholdGrid {
    pub fn values(&self) -> Result<Vec<f64>> {
        if !(self.step > 0.0) || !(self.hi >= self.lo) || !self.lo.is_finite() || !self.hi.is_finite() {
            return Err(Error::InvalidArgument(format!("invalid threshold grid {self:?}")));
        }
        let steps = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize;
        Ok((0..=steps)
            .map(|i| ((self.lo + i as f64 * self.step) * 1e12).round() / 1e12)
            .collect())
    }
}

/// Classifies `score >= threshold` as positive.
pub fn accuracy_at(scores: &[f64], labels: &[u8], threshold: f64) -> Result<(f64, ConfusionMatrix)> {
    check_paired(scores, labels.len())?;
    check_labels(labels)?;
    let mut cm = ConfusionMatrix::default();
    for (&s, &l) in scores.iter().zip(labels) {
        match (s >= threshold, l == 1) {
            (true, true) => cm.tp += 1,
            (false, true) => cm.fn_ += 1,
            (true, false) => cm.fp += 1,
            (false, false) => cm.tn += 1,
        }
    }
    Ok((cm.accuracy(), cm))
}

/// Smallest grid threshold with the fewest classification errors.
pub fn best_threshold(scores: &[f64], labels: &[u8], grid: &ThresholdGrid) -> Result<f64> {
    check_paired(scores, labels.len())?;
    let (n1, n0) = check_labels(labels)?;
    if n1 == 0 || n0 == 0 {
        return Err(Error::Degenerate("threshold search needs both classes".into()));
    }
    let values = grid.values()?;
    // Sort once and sweep: errors(t) = positives below t + negatives at or above t.
    let mut pairs: Vec<(f64, u8)> = scores.iter().copied().zip(labels.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (mut below, mut pos_below, mut neg_below) = (0usize, 0usize, 0usize);
    let mut best: Option<(usize, f64)> = None;
    for t in values {
        while below < pairs.len() && pairs[below].0 < t {
            if pairs[below].1 == 1 {
                pos_below += 1;
            } else {
                neg_below += 1;
            }
            below += 1;
        }
        let errors = pos_below + (n0 - neg_below);
        if best.is_none_or(|(e, _)| errors < e) {
            best = Some((errors, t));
        }
    }
    Ok(best.expect("grid is non-empty").1)
}

/// How scores are mapped before thresholding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreTransform {
    Identity,
    /// (x + 1) / 2, bringing cosine values from [-1, 1] into [0, 1].
    CosineToUnit,
}

impl ScoreTransform {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            ScoreTransform::Identity => x,
            ScoreTransform::CosineToUnit => (x + 1.0) / 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ThresholdMode {
    Grid(ThresholdGrid),
    Fixed { threshold: f64 },
}

/// Summary of one metric on one slice of data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub metric: String,
    pub n_pos: usize,
    pub n_neg: usize,
    pub pbc: f64,
    pub pbc_p: f64,
    pub threshold: f64,
    pub threshold_mode: ThresholdMode,
    pub score_transform: ScoreTransform,
    pub accuracy: f64,
    pub confusion: ConfusionMatrix,
    pub quartiles_pos: Quartiles,
    pub quartiles_neg: Quartiles,
}

/// Labelled scores for one slice.
#[derive(Debug, Clone, Copy)]
pub struct Labeled<'a> {
    pub scores: &'a [f64],
    pub labels: &'a [u8],
}

/// Fits the threshold on `fit` (grid mode) and reports correlation, accuracy and
/// quartiles on `test`. Threshold and accuracy use transformed scores;
/// correlation and quartiles use raw scores.
pub fn evaluate(
    metric: &str,
    fit: Labeled<'_>,
    test: Labeled<'_>,
    mode: ThresholdMode,
    transform: ScoreTransform,
) -> Result<EvalReport> {
    let mapped = |s: &[f64]| s.iter().map(|&x| transform.apply(x)).collect::<Vec<f64>>();
    let threshold = match mode {
        ThresholdMode::Grid(grid) => best_threshold(&mapped(fit.scores), fit.labels, &grid)?,
        ThresholdMode::Fixed { threshold } => threshold,
    };
    let pbc = point_biserial(test.scores, test.labels)?;
    let (accuracy, confusion) = accuracy_at(&mapped(test.scores), test.labels, threshold)?;
    let class = |c: u8| -> Vec<f64> {
        test.scores
            .iter()
            .zip(test.labels)
            .filter(|(_, &l)| l == c)
            .map(|(&s, _)| s)
            .collect()
    };
    let (pos, neg) = (class(1), class(0));
    Ok(EvalReport {
        metric: metric.to_string(),
        n_pos: pos.len(),
        n_neg: neg.len(),
        pbc: pbc.r,
        pbc_p: pbc.p,
        threshold,
        threshold_mode: mode,
        score_transform: transform,
        accuracy,
        confusion,
        quartiles_pos: quartile_summary(&pos)?,
        quartiles_neg: quartile_summary(&neg)?,
    })
}

/// Sort helper for floating keys.
pub fn cmp_f64(a: &f64, b: &f64) -> Ordering {
    a.total_cmp(b)
}
