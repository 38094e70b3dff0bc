//! Uniform result record for inequality checks.
//!
//! Every estimate check in the crate reports the measured left- and
//! right-hand sides, the fitted constant `lhs/rhs`, the engineering ceiling
//! it was judged against, the verdict, and a short human-readable witness
//! of the configuration. Reports serialize to JSON with exactly these
//! fields.

use serde::Serialize;

#[derive(Serialize, Clone, Debug)]
pub struct EstimateReport {
    pub lhs: f64,
    pub rhs: f64,
    pub fitted_constant: f64,
    pub ceiling: f64,
    pub pass: bool,
    pub witness: String,
}

impl EstimateReport {
    pub fn new(lhs: f64, rhs: f64, ceiling: f64, witness: impl Into<String>) -> EstimateReport {
        let fitted_constant = if rhs > 0.0 {
            lhs / rhs
        } else if lhs == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        EstimateReport {
            lhs,
            rhs,
            fitted_constant,
            ceiling,
            pass: lhs <= ceiling * rhs || lhs == 0.0,
            witness: witness.into(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fitted_constant_and_verdict() {
        let r = EstimateReport::new(2.0, 1.0, 4.0, "w");
        assert_eq!(r.fitted_constant, 2.0);
        assert!(r.pass);
        let r = EstimateReport::new(8.0, 1.0, 4.0, "w");
        assert!(!r.pass);
        let r = EstimateReport::new(0.0, 0.0, 4.0, "degenerate");
        assert_eq!(r.fitted_constant, 0.0);
        assert!(r.pass);
    }

    #[test]
    fn serializes_with_exact_field_names() {
        let r = EstimateReport::new(1.0, 2.0, 4.0, "w");
        let json = serde_json::to_value(&r).unwrap();
        let obj = json.as_object().unwrap();
        let mut keys: Vec<_> = obj.keys().map(String::as_str).collect();
        keys.sort_unstable();
        assert_eq!(
            keys,
            vec!["ceiling", "fitted_constant", "lhs", "pass", "rhs", "witness"]
        );
    }
}
