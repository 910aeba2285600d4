//! Gradient-jump penalty weights, selectable by name.

use std::collections::BTreeMap;
use std::fmt::Debug;
use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};

/// Scalar multiplying `sum_F h_F^{-1} ([grad v], [grad w])_F`.
pub trait PenaltyWeight: Debug + Send + Sync {
    fn name(&self) -> &'static str;
    fn weight(&self, sigma: f64, epsilon: f64) -> f64;
}

/// `sigma (eps + eps^-3)`, the weight the stability analysis is built on.
#[derive(Debug, Clone, Copy)]
pub struct Full;

/// `sigma (eps + eps^-2)`, admissible when the cofactor field has a uniform
/// lower bound.
#[derive(Debug, Clone, Copy)]
pub struct Reduced;

/// `sigma eps`, the usual C0 interior penalty scaling of the biharmonic part.
#[derive(Debug, Clone, Copy)]
pub struct Plain;

impl PenaltyWeight for Full {
    fn name(&self) -> &'static str {
        "full"
    }

    fn weight(&self, sigma: f64, epsilon: f64) -> f64 {
        sigma * (epsilon + epsilon.powi(-3))
    }
}

impl PenaltyWeight for Reduced {
    fn name(&self) -> &'static str {
        "reduced"
    }

    fn weight(&self, sigma: f64, epsilon: f64) -> f64 {
        sigma * (epsilon + epsilon.powi(-2))
    }
}

impl PenaltyWeight for Plain {
    fn name(&self) -> &'static str {
        "plain"
    }

    fn weight(&self, sigma: f64, epsilon: f64) -> f64 {
        sigma * epsilon
    }
}

#[derive(Debug, Default)]
pub struct PenaltyRegistry {
    entries: BTreeMap<&'static str, Arc<dyn PenaltyWeight>>,
}

impl PenaltyRegistry {
    pub fn with_builtins() -> Self {
        let mut r = PenaltyRegistry::default();
        r.register(Arc::new(Full));
        r.register(Arc::new(Reduced));
        r.register(Arc::new(Plain));
        r
    }

    pub fn register(&mut self, weight: Arc<dyn PenaltyWeight>) {
        self.entries.insert(weight.name(), weight);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn PenaltyWeight>> {
        self.entries
            .get(name)
            .cloned()
            .ok_or_else(|| Error::Unknown { kind: "penalty weight mode", name: name.to_string() })
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.keys().copied()
    }
}

/// Looks up one of the built-in weight modes (`full`, `reduced`, `plain`).
pub fn penalty_weight(name: &str) -> Result<Arc<dyn PenaltyWeight>> {
    static BUILTIN: OnceLock<PenaltyRegistry> = OnceLock::new();
    BUILTIN.get_or_init(PenaltyRegistry::with_builtins).get(name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_weights() {
        let eps = 0.1;
        assert!((penalty_weight("full").unwrap().weight(2.0, eps) - 2.0 * (0.1 + 1000.0)).abs() < 1e-9);
        assert!((penalty_weight("reduced").unwrap().weight(1.0, eps) - (0.1 + 100.0)).abs() < 1e-9);
        assert!((penalty_weight("plain").unwrap().weight(3.0, eps) - 0.3).abs() < 1e-15);
        assert!(matches!(penalty_weight("huge"), Err(Error::Unknown { .. })));
    }

    #[test]
    fn registry_accepts_custom_modes() {
        #[derive(Debug)]
        struct Fixed;
        impl PenaltyWeight for Fixed {
            fn name(&self) -> &'static str {
                "fixed"
            }
            fn weight(&self, _: f64, _: f64) -> f64 {
                7.0
            }
        }
        let mut r = PenaltyRegistry::with_builtins();
        r.register(Arc::new(Fixed));
        assert_eq!(r.names().collect::<Vec<_>>(), vec!["fixed", "full", "plain", "reduced"]);
        assert_eq!(r.get("fixed").unwrap().weight(1.0, 1.0), 7.0);
    }
}
