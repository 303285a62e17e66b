//! Expected severity from class probabilities and continuous agreement scores.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeverityAnchors(Vec<f64>);

impl SeverityAnchors {
    pub fn new(c: Vec<f64>) -> Result<Self> {
        if c.is_empty() || c.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(format!("anchors must be strictly increasing, got {c:?}")));
        }
        Ok(Self(c))
    }

    /// PHQ-8 band midpoints.
    pub fn phq8() -> Self {
        Self(vec![2.0, 7.0, 12.0, 17.0, 22.0])
    }

    /// PCL bands <=20, 21-40, 41-80.
    pub fn pcl() -> Self {
        Self(vec![10.0, 30.5, 60.5])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `ŝ_i = Σ_k p_ik c_k`.
pub fn expected_severity(proba: &Matrix, anchors: &SeverityAnchors) -> Result<Vec<f64>> {
    if proba.cols() != anchors.len() {
        return Err(Error::Domain(format!(
            "{} anchors for {} classes",
            anchors.len(),
            proba.cols()
        )));
    }
    Ok(proba
        .iter_rows()
        .map(|r| r.iter().zip(anchors.values()).map(|(p, c)| p * c).sum())
        .collect())
}

pub fn rmse(s: &[f64], s_hat: &[f64]) -> Result<f64> {
    if s.len() != s_hat.len() || s.is_empty() {
        return Err(Error::Domain("rmse needs equal non-empty inputs".into()));
    }
    let mse = s.iter().zip(s_hat).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / s.len() as f64;
    Ok(mse.sqrt())
}

/// Lin's concordance with population moments.
pub fn ccc(s: &[f64], s_hat: &[f64]) -> Result<f64> {
    if s.len() != s_hat.len() || s.len() < 2 {
        return Err(Error::Domain("ccc needs two equal inputs of length >= 2".into()));
    }
    let n = s.len() as f64;
    let ms = s.iter().sum::<f64>() / n;
    let mh = s_hat.iter().sum::<f64>() / n;
    let vs = s.iter().map(|v| (v - ms).powi(2)).sum::<f64>() / n;
    let vh = s_hat.iter().map(|v| (v - mh).powi(2)).sum::<f64>() / n;
    let cov = s.iter().zip(s_hat).map(|(a, b)| (a - ms) * (b - mh)).sum::<f64>() / n;
    let denom = vs + vh + (ms - mh).powi(2);
    if denom == 0.0 {
        return Ok(1.0);
    }
    if vs == 0.0 && vh == 0.0 {
        return Ok(0.0);
    }
    Ok(2.0 * cov / denom)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn anchor_arithmetic() {
        let u = Matrix::new(1, 5, vec![0.2; 5]);
        assert!((expected_severity(&u, &SeverityAnchors::phq8()).unwrap()[0] - 12.0).abs() < 1e-12);
        let p = Matrix::new(1, 3, vec![0.5, 0.5, 0.0]);
        assert_eq!(expected_severity(&p, &SeverityAnchors::pcl()).unwrap()[0], 20.25);
    }

    #[test]
    fn agreement_edge_cases() {
        let s = [0.0, 1.0, 2.0, 3.0];
        assert_eq!(rmse(&s, &s).unwrap(), 0.0);
        assert!((ccc(&s, &s).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(rmse(&s, &[0.0, 1.0, 1.0, 3.0]).unwrap(), 0.5);
        assert_eq!(ccc(&[2.0, 2.0], &[2.0, 2.0]).unwrap(), 1.0);
        assert_eq!(ccc(&[2.0, 2.0], &[3.0, 3.0]).unwrap(), 0.0);
        let shifted: Vec<f64> = s.iter().map(|v| v + 1.0).collect();
        assert!(ccc(&s, &shifted).unwrap() < 1.0);
    }

    #[test]
    fn anchors_validated() {
        assert!(SeverityAnchors::new(vec![1.0, 1.0]).is_err());
        assert!(SeverityAnchors::new(vec![1.0, 2.0]).is_ok());
    }
}
