//! Named checks with the measured value and the tolerance it was held to.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    /// Passes when `value ≤ tolerance`; `NaN` fails.
    pub fn at_most(name: &str, value: f64, tolerance: f64) -> Check {
        Check {
            name: name.to_string(),
            value,
            tolerance,
            passed: value <= tolerance,
        }
    }

    /// Passes when `value < tolerance`.
    pub fn below(name: &str, value: f64, tolerance: f64) -> Check {
        Check {
            name: name.to_string(),
            value,
            tolerance,
            passed: value < tolerance,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub checks: Vec<Check>,
}

impl CheckReport {
    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn extend(&mut self, other: CheckReport) {
        self.checks.extend(other.checks);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nan_fails() {
        assert!(!Check::at_most("x", f64::NAN, 1.0).passed);
        assert!(Check::at_most("x", 1.0, 1.0).passed);
        assert!(!Check::below("x", 1.0, 1.0).passed);
    }

    #[test]
    fn report_lookup() {
        let mut r = CheckReport::default();
        r.push(Check::at_most("a", 0.1, 1.0));
        r.push(Check::at_most("b", 2.0, 1.0));
        assert!(!r.passed());
        assert_eq!(r.failures().count(), 1);
        assert_eq!(r.get("a").unwrap().value, 0.1);
    }
}
