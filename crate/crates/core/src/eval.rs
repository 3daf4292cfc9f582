//! Clustering accuracy (best one-to-one mapping) and normalized mutual information.

use crate::error::{Error, Result};

/// Hard cluster assignments with the number of admissible ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterLabels {
    labels: Vec<usize>,
    num_clusters: usize,
}

impl ClusterLabels {
    pub fn new(labels: Vec<usize>, num_clusters: usize) -> Result<Self> {
        if let Some(&bad) = labels.iter().find(|&&l| l >= num_clusters) {
            return Err(Error::Index(format!("label {bad} >= num_clusters {num_clusters}")));
        }
        Ok(Self { labels, num_clusters })
    }

    /// Uses `max(label) + 1` as the cluster count.
    pub fn from_vec(labels: Vec<usize>) -> Self {
        let num_clusters = labels.iter().max().map_or(0, |&m| m + 1);
        Self { labels, num_clusters }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_clusters(&self) -> usize {
        self.num_clusters
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

fn check_pair(pred: &ClusterLabels, truth: &ClusterLabels) -> Result<()> {
    if pred.len() != truth.len() {
        return Err(Error::Dimension { expected: truth.len(), found: pred.len() });
    }
    if pred.is_empty() {
        return Err(Error::Degenerate("cannot evaluate an empty labeling"));
    }
    Ok(())
}

fn contingency(pred: &ClusterLabels, truth: &ClusterLabels) -> Vec<Vec<i64>> {
    let mut table = vec![vec![0i64; truth.num_clusters]; pred.num_clusters];
    for (&p, &t) in pred.labels.iter().zip(&truth.labels) {
        table[p][t] += 1;
    }
    table
}

/// Minimum-cost perfect assignment on a square matrix (Kuhn-Munkres with
/// potentials). Returns `assignment[row] = col`.
fn hungarian_min(cost: &[Vec<i64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    const INF: i64 = i64::MAX / 4;
    // 1-based arrays; column 0 is the virtual start.
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for row in 1..=n {
        owner[0] = row;
        let mut col0 = 0usize;
        let mut minv = vec![INF; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[col0] = true;
            let r0 = owner[col0];
            let mut delta = INF;
            let mut col1 = 0usize;
            for col in 1..=n {
                if !used[col] {
                    let cur = cost[r0 - 1][col - 1] - u[r0] - v[col];
                    if cur < minv[col] {
                        minv[col] = cur;
                        way[col] = col0;
                    }
                    if minv[col] < delta {
                        delta = minv[col];
                        col1 = col;
                    }
                }
            }
            for col in 0..=n {
                if used[col] {
                    u[owner[col]] += delta;
                    v[col] -= delta;
                } else {
                    minv[col] -= delta;
                }
            }
            col0 = col1;
            if owner[col0] == 0 {
                break;
            }
        }
        loop {
            let col1 = way[col0];
            owner[col0] = owner[col1];
            col0 = col1;
            if col0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0usize; n];
    for col in 1..=n {
        if owner[col] != 0 {
            assignment[owner[col] - 1] = col - 1;
        }
    }
    assignment
}

fn max_assignment_value(weights: &[Vec<i64>]) -> i64 {
    let cost: Vec<Vec<i64>> = weights.iter().map(|r| r.iter().map(|&w| -w).collect()).collect();
    hungarian_min(&cost)
        .iter()
        .enumerate()
        .map(|(r, &c)| weights[r][c])
        .sum()
}

fn square_pad(table: &[Vec<i64>], rows: usize, cols: usize) -> Vec<Vec<i64>> {
    let n = rows.max(cols);
    (0..n)
        .map(|r| (0..n).map(|c| if r < rows && c < cols { table[r][c] } else { 0 }).collect())
        .collect()
}

/// Optimal one-to-one mapping from predicted clusters to true classes.
///
/// `mapping[p]` is the class matched to predicted cluster `p`, or `None`
/// when `p` is left over because there are more clusters than classes.
/// Among optimal mappings the lexicographically smallest is returned.
pub fn align_labels(pred: &ClusterLabels, truth: &ClusterLabels) -> Result<Vec<Option<usize>>> {
    check_pair(pred, truth)?;
    let table = contingency(pred, truth);
    let (rows, cols) = (pred.num_clusters, truth.num_clusters);
    let padded = square_pad(&table, rows, cols);
    let n = padded.len();
    let best = max_assignment_value(&padded);

    // Fix rows one at a time to the smallest column that keeps the optimum.
    let mut free_rows: Vec<usize> = (0..n).collect();
    let mut free_cols: Vec<usize> = (0..n).collect();
    let mut fixed_value = 0i64;
    let mut mapping = vec![None; rows];
    for r in 0..n {
        free_rows.retain(|&x| x != r);
        let mut chosen = None;
        for (ci, &c) in free_cols.iter().enumerate() {
            let rest_cols: Vec<usize> = free_cols.iter().copied().filter(|&x| x != c).collect();
            let sub: Vec<Vec<i64>> = free_rows
                .iter()
                .map(|&rr| rest_cols.iter().map(|&cc| padded[rr][cc]).collect())
                .collect();
            let value = fixed_value + padded[r][c] + max_assignment_value(&sub);
            if value == best {
                chosen = Some((ci, c));
                break;
            }
        }
        let (ci, c) = chosen.expect("an optimal completion always exists");
        fixed_value += padded[r][c];
        free_cols.remove(ci);
        if r < rows && c < cols {
            mapping[r] = Some(c);
        }
    }
    Ok(mapping)
}

/// Fraction of documents whose cluster maps to their class under the best
/// one-to-one mapping.
pub fn clustering_accuracy(pred: &ClusterLabels, truth: &ClusterLabels) -> Result<f64> {
    check_pair(pred, truth)?;
    let table = contingency(pred, truth);
    let padded = square_pad(&table, pred.num_clusters, truth.num_clusters);
    Ok(max_assignment_value(&padded) as f64 / pred.len() as f64)
}

fn entropy(counts: &[i64], n: f64) -> f64 {
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// `I(pred; truth) / sqrt(H(pred) H(truth))` with natural logs.
///
/// When either entropy is zero the result is 1 if both labelings induce
/// the same partition and 0 otherwise.
pub fn nmi(pred: &ClusterLabels, truth: &ClusterLabels) -> Result<f64> {
    check_pair(pred, truth)?;
    let n = pred.len() as f64;
    let table = contingency(pred, truth);
    let row_sums: Vec<i64> = table.iter().map(|r| r.iter().sum()).collect();
    let col_sums: Vec<i64> = (0..truth.num_clusters)
        .map(|c| table.iter().map(|r| r[c]).sum())
        .collect();
    let h_pred = entropy(&row_sums, n);
    let h_truth = entropy(&col_sums, n);
    if h_pred == 0.0 || h_truth == 0.0 {
        return Ok(if same_partition(pred.labels(), truth.labels()) { 1.0 } else { 0.0 });
    }
    let mut mi = 0.0;
    for (r, row) in table.iter().enumerate() {
        for (c, &count) in row.iter().enumerate() {
            if count > 0 {
                let joint = count as f64 / n;
                mi += joint * (count as f64 * n / (row_sums[r] as f64 * col_sums[c] as f64)).ln();
            }
        }
    }
    Ok((mi / (h_pred * h_truth).sqrt()).clamp(0.0, 1.0))
}

fn same_partition(a: &[usize], b: &[usize]) -> bool {
    use std::collections::HashMap;
    let mut fwd = HashMap::new();
    let mut back = HashMap::new();
    a.iter().zip(b).all(|(&x, &y)| *fwd.entry(x).or_insert(y) == y && *back.entry(y).or_insert(x) == x)
}

/// Index of the largest entry; ties resolve to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}
