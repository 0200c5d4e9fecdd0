use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::EvalError;
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation<T> {
    pub r: T,
    /// Two-sided, from the t distribution with n - 2 degrees of freedom.
    pub p_value: T,
    pub n: usize,
}

fn to_f64<T: Scalar>(xs: &[T]) -> Vec<f64> {
    xs.iter().map(|x| x.to_f64().unwrap()).collect()
}

fn check_lengths(a: usize, b: usize) -> Result<(), EvalError> {
    if a != b {
        return Err(EvalError::DegenerateInput(format!("length mismatch: {a} vs {b}")));
    }
    if a < 3 {
        return Err(EvalError::DegenerateInput(format!("{a} pairs; at least 3 required")));
    }
    Ok(())
}

/// Two-sided p-value of a correlation `r` over `n` pairs, from the t
/// distribution with n - 2 degrees of freedom.
pub fn correlation_p_value(r: f64, n: usize) -> f64 {
    let df = (n - 2) as f64;
    let denom = 1.0 - r * r;
    if denom <= 0.0 {
        return 0.0;
    }
    let t = r * (df / denom).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("df is positive");
    (2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0)
}

fn finish<T: Scalar>(r: f64, n: usize) -> Correlation<T> {
    let r = r.clamp(-1.0, 1.0);
    Correlation {
        r: T::from_f64(r).unwrap(),
        p_value: T::from_f64(correlation_p_value(r, n)).unwrap(),
        n,
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Correlation between a 0/1 grouping and a numeric score, using the
/// population standard deviation of all scores.
pub fn point_biserial<T: Scalar>(binary: &[bool], scores: &[T]) -> Result<Correlation<T>, EvalError> {
    check_lengths(binary.len(), scores.len())?;
    let scores = to_f64(scores);
    let n = scores.len() as f64;
    let ones: Vec<f64> = binary.iter().zip(&scores).filter(|(b, _)| **b).map(|(_, s)| *s).collect();
    let zeros: Vec<f64> = binary.iter().zip(&scores).filter(|(b, _)| !**b).map(|(_, s)| *s).collect();
    if ones.is_empty() || zeros.is_empty() {
        return Err(EvalError::DegenerateInput("only one class present".into()));
    }
    let m = mean(&scores);
    let sd = (scores.iter().map(|s| (s - m).powi(2)).sum::<f64>() / n).sqrt();
    if sd == 0.0 {
        return Err(EvalError::DegenerateInput("scores have zero variance".into()));
    }
    let (n1, n0) = (ones.len() as f64, zeros.len() as f64);
    let r = (mean(&ones) - mean(&zeros)) / sd * (n1 * n0 / (n * n)).sqrt();
    Ok(finish(r, scores.len()))
}

/// 1-based ranks with ties given their average rank.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
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

fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let (mx, my) = (mean(xs), mean(ys));
    let cov: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let vx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let vy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    (vx > 0.0 && vy > 0.0).then(|| cov / (vx * vy).sqrt())
}

/// Pearson correlation of the average-ranked inputs.
pub fn spearman<T: Scalar>(xs: &[T], ys: &[T]) -> Result<Correlation<T>, EvalError> {
    check_lengths(xs.len(), ys.len())?;
    let rx = average_ranks(&to_f64(xs));
    let ry = average_ranks(&to_f64(ys));
    let rho = pearson(&rx, &ry).ok_or_else(|| EvalError::DegenerateInput("ranks have zero variance".into()))?;
    Ok(finish(rho, xs.len()))
}
