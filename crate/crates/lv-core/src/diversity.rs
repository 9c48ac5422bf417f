//! Shannon diversity and the Hill number of order 1 (`e^{H'}`), the
//! effective species richness of an abundance vector.

use crate::equilibrium::SURVIVAL_THRESHOLD;
use crate::{LvError, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DiversityReport {
    pub shannon: f64,
    pub hill1: f64,
    /// Number of entries above the survival threshold.
    pub survivor_count: usize,
}

/// Shannon index `H' = -sum_i f_i ln f_i` over the frequencies
/// `f_i = x_i / sum_j x_j`. Entries at or below the survival clamp are
/// treated as exact zeros and contribute nothing (the `f ln f -> 0` limit).
pub fn shannon_index(x: &[f64]) -> Result<f64> {
    let positive: Vec<f64> = x.iter().copied().filter(|&v| v > SURVIVAL_THRESHOLD).collect();
    if positive.is_empty() {
        return Err(LvError::InvalidInput(
            "diversity of an all-zero abundance vector is undefined".into(),
        ));
    }
    let total: f64 = positive.iter().sum();
    let mut h = 0.0;
    for v in &positive {
        let f = v / total;
        h -= f * f.ln();
    }
    // ln of a frequency of exactly 1 gives -0.0.
    Ok(h.max(0.0))
}

/// Hill number of order 1, `e^{H'}`; ranges from 1 (one species dominates)
/// to the number of positive entries (all equally abundant).
pub fn hill_number(x: &[f64]) -> Result<f64> {
    Ok(shannon_index(x)?.exp())
}

pub fn diversity_report(x: &[f64]) -> Result<DiversityReport> {
    let shannon = shannon_index(x)?;
    let survivor_count = x.iter().filter(|&&v| v > SURVIVAL_THRESHOLD).count();
    Ok(DiversityReport { shannon, hill1: shannon.exp(), survivor_count })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_abundances_reach_the_log_bound() {
        for n in [1usize, 3, 10, 250] {
            let x = vec![0.7; n];
            let h = shannon_index(&x).unwrap();
            assert!((h - (n as f64).ln()).abs() < 1e-12);
            assert!((hill_number(&x).unwrap() - n as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn complete_dominance_has_zero_entropy() {
        let h = shannon_index(&[5.0, 0.0, 0.0]).unwrap();
        assert_eq!(h, 0.0);
        assert_eq!(hill_number(&[5.0, 0.0, 0.0]).unwrap(), 1.0);
    }

    #[test]
    fn mixed_abundances_hand_value() {
        // (1, 1, 2): H' = (3/2) ln 2, e^{H'} = 2 sqrt(2).
        let h = shannon_index(&[1.0, 1.0, 2.0]).unwrap();
        assert!((h - 1.5 * std::f64::consts::LN_2).abs() < 1e-12);
        assert!((hill_number(&[1.0, 1.0, 2.0]).unwrap() - 2.0 * std::f64::consts::SQRT_2).abs()
            < 1e-12);
    }

    #[test]
    fn scale_invariance() {
        let x = [0.3, 1.1, 2.4, 0.9];
        let base = hill_number(&x).unwrap();
        for c in [1e-6, 0.5, 3.0, 1e8] {
            let scaled: Vec<f64> = x.iter().map(|v| v * c).collect();
            assert!((hill_number(&scaled).unwrap() - base).abs() < 1e-12 * base.max(1.0));
        }
    }

    #[test]
    fn bounds_hold() {
        let x = [0.0, 2.0, 0.5, 0.0, 1.5];
        let positive = x.iter().filter(|&&v| v > 0.0).count() as f64;
        let hill = hill_number(&x).unwrap();
        assert!(hill >= 1.0);
        assert!(hill <= positive + 1e-12);
    }

    #[test]
    fn subthreshold_entries_count_as_zero() {
        let h = shannon_index(&[1.0, 1e-9, 1e-12]).unwrap();
        assert_eq!(h, 0.0);
        let report = diversity_report(&[1.0, 1e-9, 2.0]).unwrap();
        assert_eq!(report.survivor_count, 2);
    }

    #[test]
    fn all_zero_vector_is_rejected() {
        assert!(shannon_index(&[0.0, 0.0]).is_err());
        assert!(hill_number(&[1e-12]).is_err());
    }
}
