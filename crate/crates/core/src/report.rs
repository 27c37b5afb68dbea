//! Building blocks shared by the property checks.

use serde::Serialize;

/// Result of a conditional check "hypotheses ⟹ conclusion".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    /// Hypotheses hold and so does the conclusion.
    Confirmed,
    /// A hypothesis fails; nothing is asserted.
    Vacuous,
    /// Hypotheses hold but the conclusion does not.
    Violated,
}

impl Outcome {
    pub fn from_assertion(hypotheses_hold: bool, conclusion_holds: bool) -> Self {
        match (hypotheses_hold, conclusion_holds) {
            (false, _) => Outcome::Vacuous,
            (true, true) => Outcome::Confirmed,
            (true, false) => Outcome::Violated,
        }
    }

    pub fn is_consistent(self) -> bool {
        self != Outcome::Violated
    }
}

/// One hypothesis: whether it holds and the measured quantity behind the verdict.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hypothesis {
    pub name: String,
    pub holds: bool,
    pub margin: f64,
}

impl Hypothesis {
    pub fn new(name: &str, holds: bool, margin: f64) -> Self {
        Self { name: name.to_string(), holds, margin }
    }
}

pub fn all_hold(hyps: &[Hypothesis]) -> bool {
    hyps.iter().all(|h| h.holds)
}

/// Tally of an inequality tested on many samples. `worst_margin` is the
/// smallest normalized slack `(rhs − lhs) / scale`; negative means violated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InequalityCheck {
    pub passed: bool,
    pub worst_margin: f64,
    pub samples: usize,
}

impl InequalityCheck {
    pub fn new() -> Self {
        Self { passed: true, worst_margin: f64::INFINITY, samples: 0 }
    }

    /// Records `lhs ≤ rhs` with slack normalized by `scale`.
    pub fn record(&mut self, lhs: f64, rhs: f64, scale: f64, tol: f64) {
        let margin = if scale > 0.0 { (rhs - lhs) / scale } else { rhs - lhs };
        self.samples += 1;
        self.worst_margin = self.worst_margin.min(margin);
        if margin < -tol {
            self.passed = false;
        }
    }

    pub fn merge(&mut self, other: &InequalityCheck) {
        self.passed &= other.passed;
        self.worst_margin = self.worst_margin.min(other.worst_margin);
        self.samples += other.samples;
    }
}

impl Default for InequalityCheck {
    fn default() -> Self {
        Self::new()
    }
}

/// Probe vectors for the sampled checks: the standard basis followed by
/// `count` Gaussian vectors from a fixed stream.
pub fn default_probes(n: usize, count: usize) -> Vec<Vec<f64>> {
    let mut rng = crate::generator::Rng::new(0x5EED_F00D);
    let mut probes: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            e
        })
        .collect();
    probes.extend((0..count).map(|_| rng.gaussian_vector(n)));
    probes
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn outcome_logic() {
        assert_eq!(Outcome::from_assertion(false, false), Outcome::Vacuous);
        assert_eq!(Outcome::from_assertion(true, true), Outcome::Confirmed);
        assert_eq!(Outcome::from_assertion(true, false), Outcome::Violated);
        assert!(Outcome::Vacuous.is_consistent());
    }

    #[test]
    fn inequality_tally() {
        let mut c = InequalityCheck::new();
        c.record(1.0, 2.0, 2.0, 1e-9);
        assert!(c.passed && (c.worst_margin - 0.5).abs() < 1e-15);
        c.record(2.0, 1.0, 1.0, 1e-9);
        assert!(!c.passed && c.worst_margin == -1.0 && c.samples == 2);
    }
}
