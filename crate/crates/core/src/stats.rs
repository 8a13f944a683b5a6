//! Nonparametric statistics kernel.
//!
//! Covers exactly the procedures the metrics layer needs: average ranks,
//! Spearman's rank correlation, the Mann-Whitney U test, Pearson's chi-square
//! test of independence, and type-7 quantiles. A mergeable [`QuantileSketch`]
//! handles quantiles over streams too large to sort.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest `|a| * |b|` for which Mann-Whitney p-values are computed exactly.
pub const MWU_EXACT_MAX_PRODUCT: usize = 400;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("input is empty")]
    Empty,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} observations, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("zero rank variance")]
    ZeroVariance,
    #[error("degenerate contingency table: {0}")]
    DegenerateTable(String),
    #[error("quantile level {0} outside [0, 1]")]
    InvalidQuantile(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    NormalApprox,
    ChiSquare,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    /// Degrees of freedom; only set for chi-square tests.
    pub df: Option<u32>,
    pub p_value: f64,
    pub method: Method,
}

/// 1-based ranks with ties sharing the mean of their rank span.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let rank = (start + 1 + end) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = rank;
        }
        start = end;
    }
    ranks
}

/// Spearman's rho: Pearson correlation of the average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(StatsError::TooShort { needed: 2, got: x.len() });
    }
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// One block of tied values in a pooled sample: how many come from each side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TieGroup {
    pub from_a: u64,
    pub from_b: u64,
}

/// Two-sided Mann-Whitney U test on raw samples. The statistic is U for
/// sample `a`: the number of pairs with `a > b`, ties counting one half.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<TestResult, StatsError> {
    if a.is_empty() || b.is_empty() {
        return Err(StatsError::Empty);
    }
    let mut pooled: Vec<(f64, bool)> = a
        .iter()
        .map(|&v| (v, true))
        .chain(b.iter().map(|&v| (v, false)))
        .collect();
    pooled.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut groups = Vec::new();
    let mut i = 0;
    while i < pooled.len() {
        let mut g = TieGroup { from_a: 0, from_b: 0 };
        let v = pooled[i].0;
        while i < pooled.len() && pooled[i].0 == v {
            if pooled[i].1 {
                g.from_a += 1;
            } else {
                g.from_b += 1;
            }
            i += 1;
        }
        groups.push(g);
    }
    mann_whitney_u_grouped(&groups)
}

/// Mann-Whitney U over tie groups listed in ascending value order. This is
/// the entry point for pre-aggregated (histogram or sketch) samples.
pub fn mann_whitney_u_grouped(groups: &[TieGroup]) -> Result<TestResult, StatsError> {
    let m: u64 = groups.iter().map(|g| g.from_a).sum();
    let n: u64 = groups.iter().map(|g| g.from_b).sum();
    if m == 0 || n == 0 {
        return Err(StatsError::Empty);
    }
    // Doubled midranks keep everything integral.
    let mut doubled_rank_sum_a: u128 = 0;
    let mut tie_term: f64 = 0.0;
    let mut seen: u64 = 0;
    for g in groups {
        let t = g.from_a + g.from_b;
        if t == 0 {
            continue;
        }
        let doubled_mid = 2 * seen as u128 + t as u128 + 1;
        doubled_rank_sum_a += doubled_mid * g.from_a as u128;
        let tf = t as f64;
        tie_term += tf * tf * tf - tf;
        seen += t;
    }
    // 2U = 2R - m(m+1)
    let doubled_u = doubled_rank_sum_a as i128 - (m as i128) * (m as i128 + 1);
    let u = doubled_u as f64 / 2.0;
    let mn = m as f64 * n as f64;

    if (m as u128) * (n as u128) <= MWU_EXACT_MAX_PRODUCT as u128 {
        let p = exact_mwu_p(groups, m, n, doubled_u);
        return Ok(TestResult { statistic: u, df: None, p_value: p, method: Method::Exact });
    }

    let big_n = (m + n) as f64;
    let var = mn / 12.0 * ((big_n + 1.0) - tie_term / (big_n * (big_n - 1.0)));
    let p = if var <= 0.0 {
        1.0
    } else {
        let z = ((u - mn / 2.0).abs() - 0.5).max(0.0) / var.sqrt();
        normal_two_sided_p(z)
    };
    Ok(TestResult { statistic: u, df: None, p_value: p, method: Method::NormalApprox })
}

/// Exact permutation p-value: the share of all size-`min(m, n)` subsets of
/// the pooled doubled ranks whose U deviates from `mn/2` at least as much as
/// the observed one. Subset-sum counts are built by dynamic programming.
fn exact_mwu_p(groups: &[TieGroup], m: u64, n: u64, doubled_u_a: i128) -> f64 {
    let mut doubled_ranks: Vec<usize> = Vec::with_capacity((m + n) as usize);
    let mut seen = 0usize;
    for g in groups {
        let t = (g.from_a + g.from_b) as usize;
        let mid = 2 * seen + t + 1;
        doubled_ranks.extend(std::iter::repeat(mid).take(t));
        seen += t;
    }
    let k = m.min(n) as usize;
    let max_sum: usize = doubled_ranks.iter().rev().take(k).sum();
    // counts[j][s]: subsets of size j with doubled-rank sum s
    let mut counts = vec![vec![0u128; max_sum + 1]; k + 1];
    counts[0][0] = 1;
    let mut running_max = 0usize;
    for &r in &doubled_ranks {
        running_max = (running_max + r).min(max_sum);
        for j in (1..=k).rev() {
            let (lower, upper) = counts.split_at_mut(j);
            let prev = &lower[j - 1];
            let cur = &mut upper[0];
            for s in (r..=running_max).rev() {
                let add = prev[s - r];
                if add != 0 {
                    cur[s] += add;
                }
            }
        }
    }
    let mn = (m as i128) * (n as i128);
    let observed = (doubled_u_a - mn).abs();
    let kk = k as i128;
    let (mut extreme, mut total) = (0u128, 0u128);
    for (s, &c) in counts[k].iter().enumerate() {
        if c == 0 {
            continue;
        }
        total += c;
        let dev = (s as i128 - kk * (kk + 1) - mn).abs();
        if dev >= observed {
            extreme += c;
        }
    }
    (extreme as f64 / total as f64).min(1.0)
}

/// Pearson chi-square test of independence on an r x c table of counts.
///
/// Rows or columns with a zero marginal have expected count zero in every
/// cell; they are pooled into a neighbour (which, holding only zeros, leaves
/// the neighbour unchanged) and the degrees of freedom shrink accordingly.
pub fn chi_square(table: &[Vec<u64>]) -> Result<TestResult, StatsError> {
    let cols = table.first().map(|r| r.len()).unwrap_or(0);
    if table.len() < 2 || cols < 2 {
        return Err(StatsError::DegenerateTable(format!("shape {}x{}", table.len(), cols)));
    }
    if table.iter().any(|r| r.len() != cols) {
        return Err(StatsError::DegenerateTable("ragged rows".into()));
    }
    let keep_cols: Vec<usize> = (0..cols).filter(|&c| table.iter().any(|r| r[c] > 0)).collect();
    let pooled: Vec<Vec<f64>> = table
        .iter()
        .filter(|r| r.iter().any(|&v| v > 0))
        .map(|r| keep_cols.iter().map(|&c| r[c] as f64).collect())
        .collect();
    if pooled.len() < 2 || keep_cols.len() < 2 {
        return Err(StatsError::DegenerateTable(format!(
            "only {}x{} non-empty after pooling",
            pooled.len(),
            keep_cols.len()
        )));
    }
    let row_tot: Vec<f64> = pooled.iter().map(|r| r.iter().sum()).collect();
    let col_tot: Vec<f64> = (0..keep_cols.len()).map(|c| pooled.iter().map(|r| r[c]).sum()).collect();
    let total: f64 = row_tot.iter().sum();
    let mut stat = 0.0;
    for (i, row) in pooled.iter().enumerate() {
        for (j, &obs) in row.iter().enumerate() {
            let expected = row_tot[i] * col_tot[j] / total;
            stat += (obs - expected) * (obs - expected) / expected;
        }
    }
    let df = ((pooled.len() - 1) * (keep_cols.len() - 1)) as u32;
    Ok(TestResult {
        statistic: stat,
        df: Some(df),
        p_value: chi_square_sf(stat, df as f64),
        method: Method::ChiSquare,
    })
}

/// Type-7 quantile (linear interpolation between closest ranks).
pub fn quantile(values: &[f64], q: f64) -> Result<f64, StatsError> {
    if values.is_empty() {
        return Err(StatsError::Empty);
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(StatsError::InvalidQuantile(q));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(interpolate_sorted(|i| sorted[i], sorted.len() as u64, q))
}

fn interpolate_sorted(at: impl Fn(usize) -> f64, n: u64, q: f64) -> f64 {
    let h = (n - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    let (a, b) = (at(lo), at(hi));
    a + (h - lo as f64) * (b - a)
}

/// Upper tail of the chi-square distribution.
pub fn chi_square_sf(x: f64, df: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    regularized_gamma_q(df / 2.0, x / 2.0)
}

/// Two-sided tail `P(|Z| >= z)` of the standard normal.
pub fn normal_two_sided_p(z: f64) -> f64 {
    let z = z.abs();
    if z == 0.0 {
        return 1.0;
    }
    // erfc(z / sqrt 2) = Q(1/2, z^2 / 2)
    regularized_gamma_q(0.5, z * z / 2.0).min(1.0)
}

fn ln_gamma(x: f64) -> f64 {
    // Lanczos approximation, g = 7, n = 9.
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEF[0];
    let t = x + 7.5;
    for (i, &c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Regularized upper incomplete gamma Q(a, x): power series below `a + 1`,
/// Lentz continued fraction above.
fn regularized_gamma_q(a: f64, x: f64) -> f64 {
    const EPS: f64 = 1e-16;
    const TINY: f64 = 1e-300;
    const MAX_ITER: usize = 10_000;
    if x <= 0.0 {
        return 1.0;
    }
    let log_prefix = a * x.ln() - x - ln_gamma(a);
    if x < a + 1.0 {
        let mut ap = a;
        let mut term = 1.0 / a;
        let mut sum = term;
        for _ in 0..MAX_ITER {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * EPS {
                break;
            }
        }
        (1.0 - sum * log_prefix.exp()).clamp(0.0, 1.0)
    } else {
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..MAX_ITER {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < TINY {
                d = TINY;
            }
            c = b + an / c;
            if c.abs() < TINY {
                c = TINY;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < EPS {
                break;
            }
        }
        (log_prefix.exp() * h).clamp(0.0, 1.0)
    }
}

/// Mergeable quantile sketch over positive values.
///
/// Values are bucketed on a logarithmic grid with relative accuracy
/// `alpha`: every value is represented by a bucket centre within a factor
/// `1 ± alpha` of it. Counts are integers, so merging is exact, commutative,
/// and associative, and memory grows with the number of occupied buckets
/// rather than the number of values. Non-positive values share one
/// bucket that sorts below every positive one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileSketch {
    alpha: f64,
    buckets: BTreeMap<i32, u64>,
    non_positive: u64,
    count: u64,
    min: f64,
    max: f64,
}

impl Default for QuantileSketch {
    fn default() -> Self {
        Self::new(Self::DEFAULT_ALPHA)
    }
}

impl QuantileSketch {
    pub const DEFAULT_ALPHA: f64 = 1e-4;

    pub fn new(alpha: f64) -> Self {
        assert!(alpha > 0.0 && alpha < 1.0, "relative accuracy must lie in (0, 1)");
        Self {
            alpha,
            buckets: BTreeMap::new(),
            non_positive: 0,
            count: 0,
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
        }
    }

    fn log_gamma(&self) -> f64 {
        ((1.0 + self.alpha) / (1.0 - self.alpha)).ln()
    }

    fn bucket_of(&self, v: f64) -> i32 {
        (v.ln() / self.log_gamma()).ceil() as i32
    }

    fn centre(&self, idx: i32) -> f64 {
        let gamma = self.log_gamma().exp();
        2.0 * (idx as f64 * self.log_gamma()).exp() / (gamma + 1.0)
    }

    pub fn insert(&mut self, v: f64) {
        if v.is_nan() {
            return;
        }
        self.count += 1;
        self.min = self.min.min(v);
        self.max = self.max.max(v);
        if v <= 0.0 {
            self.non_positive += 1;
        } else {
            let idx = self.bucket_of(v);
            *self.buckets.entry(idx).or_insert(0) += 1;
        }
    }

    pub fn merge(&mut self, other: &QuantileSketch) {
        assert_eq!(self.alpha, other.alpha, "cannot merge sketches of different accuracy");
        for (&k, &c) in &other.buckets {
            *self.buckets.entry(k).or_insert(0) += c;
        }
        self.non_positive += other.non_positive;
        self.count += other.count;
        self.min = self.min.min(other.min);
        self.max = self.max.max(other.max);
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn min(&self) -> Option<f64> {
        (self.count > 0).then_some(self.min)
    }

    pub fn max(&self) -> Option<f64> {
        (self.count > 0).then_some(self.max)
    }

    /// Representative value of the item at 0-based sorted position `rank`.
    fn value_at(&self, rank: u64) -> f64 {
        if rank == 0 {
            return self.min;
        }
        if rank + 1 == self.count {
            return self.max;
        }
        if rank < self.non_positive {
            return self.min.min(0.0);
        }
        let mut seen = self.non_positive;
        for (&idx, &c) in &self.buckets {
            seen += c;
            if rank < seen {
                return self.centre(idx).clamp(self.min, self.max);
            }
        }
        self.max
    }

    /// Type-7 quantile over the bucketed values.
    pub fn quantile(&self, q: f64) -> Result<f64, StatsError> {
        if self.count == 0 {
            return Err(StatsError::Empty);
        }
        if !(0.0..=1.0).contains(&q) {
            return Err(StatsError::InvalidQuantile(q));
        }
        Ok(interpolate_sorted(|i| self.value_at(i as u64), self.count, q))
    }

    /// Tie groups of two sketches in ascending bucket order, ready for
    /// [`mann_whitney_u_grouped`].
    pub fn tie_groups(a: &QuantileSketch, b: &QuantileSketch) -> Vec<TieGroup> {
        assert_eq!(a.alpha, b.alpha, "sketches must share accuracy");
        let mut groups = Vec::new();
        if a.non_positive + b.non_positive > 0 {
            groups.push(TieGroup { from_a: a.non_positive, from_b: b.non_positive });
        }
        let mut keys: Vec<i32> = a.buckets.keys().chain(b.buckets.keys()).copied().collect();
        keys.sort_unstable();
        keys.dedup();
        for k in keys {
            groups.push(TieGroup {
                from_a: a.buckets.get(&k).copied().unwrap_or(0),
                from_b: b.buckets.get(&k).copied().unwrap_or(0),
            });
        }
        groups
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn ranks_basic_and_ties() {
        assert_eq!(average_ranks(&[10.0, 20.0, 30.0]), vec![1.0, 2.0, 3.0]);
        assert_eq!(average_ranks(&[10.0, 10.0, 30.0]), vec![1.5, 1.5, 3.0]);
        assert_eq!(average_ranks(&[5.0]), vec![1.0]);
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 3.0]), vec![3.0, 1.0, 3.0, 3.0]);
    }

    #[test]
    fn spearman_extremes() {
        assert_abs_diff_eq!(spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]).unwrap(), 1.0);
        assert_abs_diff_eq!(spearman(&[1.0, 2.0, 3.0], &[30.0, 20.0, 10.0]).unwrap(), -1.0);
        assert_eq!(spearman(&[1.0, 2.0], &[1.0]), Err(StatsError::LengthMismatch(2, 1)));
        assert_eq!(spearman(&[1.0, 1.0], &[1.0, 2.0]), Err(StatsError::ZeroVariance));
        assert!(matches!(spearman(&[1.0], &[1.0]), Err(StatsError::TooShort { .. })));
    }

    #[test]
    fn spearman_with_ties_matches_hand_value() {
        // ranks x = [1, 2.5, 2.5, 4], y = [1, 3, 2, 4]
        // cov = 4.5, var_x = 4.5, var_y = 5  ->  4.5 / sqrt(22.5)
        let rho = spearman(&[1.0, 2.0, 2.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert_abs_diff_eq!(rho, 4.5 / 22.5f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn mwu_separated_samples() {
        let r = mann_whitney_u(&[1.0, 2.0], &[3.0, 4.0]).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.method, Method::Exact);
        // 2 of the 6 splits are as extreme (U = 0 or U = 4)
        assert_abs_diff_eq!(r.p_value, 2.0 / 6.0, epsilon = 1e-12);
    }

    #[test]
    fn mwu_identical_samples() {
        let a = [1.0, 2.0, 2.0, 5.0];
        let r = mann_whitney_u(&a, &a).unwrap();
        assert_eq!(r.statistic, 8.0);
        assert_abs_diff_eq!(r.p_value, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn mwu_switches_to_normal_above_crossover() {
        let a: Vec<f64> = (0..21).map(f64::from).collect();
        let b: Vec<f64> = (0..20).map(|i| f64::from(i) + 0.5).collect();
        assert_eq!(mann_whitney_u(&a, &b).unwrap().method, Method::NormalApprox);
        assert_eq!(mann_whitney_u(&a[..20], &b).unwrap().method, Method::Exact);
    }

    #[test]
    fn mwu_all_tied_large_sample() {
        let a = vec![1.0; 30];
        let r = mann_whitney_u(&a, &a).unwrap();
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn chi_square_uniform_table() {
        let r = chi_square(&[vec![10, 10], vec![10, 10]]).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.df, Some(1));
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn chi_square_two_by_two() {
        // expected [[40,40],[30,30]]
        let r = chi_square(&[vec![50, 30], vec![20, 40]]).unwrap();
        let hand = 100.0 / 40.0 * 2.0 + 100.0 / 30.0 * 2.0;
        assert_abs_diff_eq!(r.statistic, hand, epsilon = 1e-12);
        assert_abs_diff_eq!(r.statistic, 11.666_666_666_666_666, epsilon = 1e-9);
        assert!((r.p_value - 6.4e-4).abs() < 0.05e-4, "p = {}", r.p_value);
    }

    #[test]
    fn chi_square_pools_empty_column() {
        let mut a = vec![3u64, 5, 7, 2, 0, 4, 6, 1, 8];
        let mut b = vec![4u64, 2, 6, 3, 0, 5, 1, 7, 2];
        let r = chi_square(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(r.df, Some(7));
        a.remove(4);
        b.remove(4);
        let reduced = chi_square(&[a, b]).unwrap();
        assert_abs_diff_eq!(r.statistic, reduced.statistic, epsilon = 1e-12);
    }

    #[test]
    fn chi_square_degenerate() {
        assert!(matches!(chi_square(&[vec![1, 2]]), Err(StatsError::DegenerateTable(_))));
        assert!(matches!(
            chi_square(&[vec![1, 0], vec![3, 0]]),
            Err(StatsError::DegenerateTable(_))
        ));
    }

    #[test]
    fn chi_square_tail_reference_points() {
        // Closed forms: df = 2 -> exp(-x/2); df = 1 -> erfc(sqrt(x/2)).
        for x in [0.1, 1.0, 3.0, 10.0, 40.0] {
            assert_abs_diff_eq!(chi_square_sf(x, 2.0), (-x / 2.0).exp(), epsilon = 1e-13);
        }
        assert_abs_diff_eq!(chi_square_sf(3.841_458_820_694_124, 1.0), 0.05, epsilon = 1e-12);
        assert_abs_diff_eq!(normal_two_sided_p(1.959_963_984_540_054), 0.05, epsilon = 1e-12);
    }

    #[test]
    fn quantile_type7() {
        assert_eq!(quantile(&[1.0, 2.0, 3.0, 4.0], 0.5).unwrap(), 2.5);
        assert_eq!(quantile(&[4.0, 1.0, 3.0], 0.0).unwrap(), 1.0);
        assert_eq!(quantile(&[4.0, 1.0, 3.0], 1.0).unwrap(), 4.0);
        assert_eq!(quantile(&[], 0.5), Err(StatsError::Empty));
        assert_eq!(quantile(&[1.0], 1.5), Err(StatsError::InvalidQuantile(1.5)));
    }

    #[test]
    fn sketch_extremes_exact() {
        let mut s = QuantileSketch::default();
        for v in [0.3, 0.01, 0.7] {
            s.insert(v);
        }
        assert_eq!(s.quantile(0.0).unwrap(), 0.01);
        assert_eq!(s.quantile(1.0).unwrap(), 0.7);
        assert!((s.quantile(0.5).unwrap() - 0.3).abs() < 0.3 * 1e-4);
    }
}
