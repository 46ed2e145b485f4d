//! Rank-based comparison of several methods over several benchmarks: average ranks,
//! the Friedman statistic and the Nemenyi critical difference.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

/// Scores of `cols` methods on `rows` benchmarks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreMatrix {
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    pub scores: Vec<Vec<f64>>,
    pub higher_is_better: bool,
}

impl ScoreMatrix {
    pub fn new(rows: Vec<String>, cols: Vec<String>, scores: Vec<Vec<f64>>, higher_is_better: bool) -> Result<Self> {
        let m = Self { rows, cols, scores, higher_is_better };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows.len() < 2 || self.cols.len() < 2 {
            return Err(Error::Data(format!(
                "need at least 2 rows and 2 columns, got {}x{}",
                self.rows.len(),
                self.cols.len()
            )));
        }
        if self.scores.len() != self.rows.len() {
            return Err(Error::Data("row labels and score rows differ in number".into()));
        }
        for (label, row) in self.rows.iter().zip(&self.scores) {
            if row.len() != self.cols.len() {
                return Err(Error::Data(format!("row '{label}' has {} cells, expected {}", row.len(), self.cols.len())));
            }
            if row.iter().any(|v| v.is_nan()) {
                return Err(Error::Data(format!("row '{label}' contains NaN")));
            }
        }
        Ok(())
    }

    /// Reads CSV with a header row of method names and the benchmark label in the first
    /// column. Blank lines and lines starting with `#` are skipped.
    pub fn from_csv(text: &str, higher_is_better: bool) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .enumerate()
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (_, header) = lines.next().ok_or_else(|| Error::Data("empty score file".into()))?;
        let cols: Vec<String> = header.split(',').skip(1).map(|c| c.trim().to_string()).collect();
        let mut rows = Vec::new();
        let mut scores = Vec::new();
        for (lineno, line) in lines {
            let mut cells = line.split(',');
            rows.push(cells.next().unwrap_or_default().trim().to_string());
            let row = cells
                .map(|c| {
                    let c = c.trim();
                    if c.is_empty() {
                        return Err(Error::Data(format!("line {}: missing cell", lineno + 1)));
                    }
                    c.parse::<f64>()
                        .map_err(|e| Error::Data(format!("line {}: '{c}': {e}", lineno + 1)))
                })
                .collect::<Result<Vec<f64>>>()?;
            scores.push(row);
        }
        Self::new(rows, cols, scores, higher_is_better)
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn k(&self) -> usize {
        self.cols.len()
    }
}

/// Ranks within one row; 1 is best and tied scores share the average of their positions.
pub fn row_ranks(row: &[f64], higher_is_better: bool) -> Vec<f64> {
    let mut order: Vec<usize> = (0..row.len()).collect();
    order.sort_by(|&a, &b| {
        let c = row[a].total_cmp(&row[b]);
        if higher_is_better {
            c.reverse()
        } else {
            c
        }
    });
    let mut ranks = vec![0.0; row.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && row[order[j + 1]] == row[order[i]] {
            j += 1;
        }
        // positions i..=j (0-based) share rank mean(i+1 ..= j+1)
        let shared = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = shared;
        }
        i = j + 1;
    }
    ranks
}

pub fn mean_ranks(m: &ScoreMatrix) -> Result<Vec<f64>> {
    m.validate()?;
    let mut sums = vec![0.0; m.k()];
    for row in &m.scores {
        for (s, r) in sums.iter_mut().zip(row_ranks(row, m.higher_is_better)) {
            *s += r;
        }
    }
    Ok(sums.into_iter().map(|s| s / m.n() as f64).collect())
}

/// `χ²_F = 12N / (k(k+1)) · (Σ R_j² − k(k+1)²/4)`.
pub fn friedman_statistic(mean_ranks: &[f64], n: usize) -> f64 {
    let k = mean_ranks.len() as f64;
    let sum_sq: f64 = mean_ranks.iter().map(|r| r * r).sum();
    12.0 * n as f64 / (k * (k + 1.0)) * (sum_sq - k * (k + 1.0) * (k + 1.0) / 4.0)
}

/// Upper-tail probability of the Friedman statistic under χ² with `k − 1` degrees of freedom.
pub fn friedman_p_value(chi2: f64, k: usize) -> f64 {
    ChiSquared::new((k - 1) as f64).map(|d| d.sf(chi2.max(0.0))).unwrap_or(f64::NAN)
}

// Two-tailed Nemenyi critical values q_α(k) = studentized range quantile / √2 at infinite
// degrees of freedom, for k = 2..=10 (Demšar 2006, Table 5).
const Q_005: [f64; 9] = [1.960, 2.343, 2.569, 2.728, 2.850, 2.949, 3.031, 3.102, 3.164];
const Q_010: [f64; 9] = [1.645, 2.052, 2.291, 2.459, 2.589, 2.693, 2.780, 2.855, 2.920];

pub fn nemenyi_q(k: usize, alpha: f64) -> Result<f64> {
    let table = if alpha == 0.05 {
        &Q_005
    } else if alpha == 0.10 {
        &Q_010
    } else {
        return Err(Error::Range(format!("alpha {alpha} is not tabulated; use 0.05 or 0.10")));
    };
    if !(2..=10).contains(&k) {
        return Err(Error::Range(format!("k = {k} is outside the tabulated 2..=10")));
    }
    Ok(table[k - 2])
}

/// `CD = q_α(k) · √(k(k+1) / (6N))`.
pub fn nemenyi_cd(k: usize, n: usize, alpha: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Range("N must be positive".into()));
    }
    let q = nemenyi_q(k, alpha)?;
    let kf = k as f64;
    Ok(q * (kf * (kf + 1.0) / (6.0 * n as f64)).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdResult {
    pub activations: Vec<String>,
    pub mean_ranks: Vec<f64>,
    pub friedman_chi2: f64,
    pub friedman_p: f64,
    pub n: usize,
    pub k: usize,
    pub alpha: f64,
    pub cd: f64,
    /// Maximal runs of methods, in rank order, whose mean ranks span less than `cd`.
    pub groups: Vec<Vec<String>>,
}

impl CdResult {
    /// Methods ordered from best to worst mean rank.
    pub fn ordering(&self) -> Vec<(&str, f64)> {
        let mut v: Vec<(&str, f64)> =
            self.activations.iter().map(String::as_str).zip(self.mean_ranks.iter().copied()).collect();
        v.sort_by(|a, b| a.1.total_cmp(&b.1));
        v
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        for (name, r) in self.ordering() {
            let _ = writeln!(s, "{name:>12}  {r:.4}");
        }
        let _ = writeln!(
            s,
            "N={} k={} chi2={:.4} p={:.3e} CD(alpha={})={:.4}",
            self.n, self.k, self.friedman_chi2, self.friedman_p, self.alpha, self.cd
        );
        s
    }
}

/// Groups of methods not significantly different: sort by mean rank, take for each method
/// the longest run starting there with span `< cd`, and drop runs contained in an earlier one.
pub fn cd_groups(names: &[String], mean_ranks: &[f64], cd: f64) -> Vec<Vec<String>> {
    let mut order: Vec<usize> = (0..names.len()).collect();
    order.sort_by(|&a, &b| mean_ranks[a].total_cmp(&mean_ranks[b]));
    let mut groups = Vec::new();
    let mut reach = None;
    for i in 0..order.len() {
        let mut j = i;
        while j + 1 < order.len() && mean_ranks[order[j + 1]] - mean_ranks[order[i]] < cd {
            j += 1;
        }
        if reach.is_none_or(|r| j > r) {
            groups.push(order[i..=j].iter().map(|&o| names[o].clone()).collect());
            reach = Some(j);
        }
    }
    groups
}

pub fn cd_report(m: &ScoreMatrix, alpha: f64) -> Result<CdResult> {
    let ranks = mean_ranks(m)?;
    let cd = nemenyi_cd(m.k(), m.n(), alpha)?;
    let chi2 = friedman_statistic(&ranks, m.n());
    Ok(CdResult {
        groups: cd_groups(&m.cols, &ranks, cd),
        activations: m.cols.clone(),
        friedman_p: friedman_p_value(chi2, m.k()),
        friedman_chi2: chi2,
        mean_ranks: ranks,
        n: m.n(),
        k: m.k(),
        alpha,
        cd,
    })
}
