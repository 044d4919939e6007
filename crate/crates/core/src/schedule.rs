//! Step-size laws.
//!
//! `PowerDecay` is indexed from one, `δ_k = c / (k + 1)^α`, so that `δ_0 = c`.

use crate::error::{invalid, Result};
#[allow(unused_imports)] // shadowed by inherent methods whenever std is linked
use num_traits::Float;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSchedule {
    Constant { c: f64 },
    PowerDecay { c: f64, alpha: f64 },
}

impl StepSchedule {
    pub fn constant(c: f64) -> Result<Self> {
        check_c(c)?;
        Ok(Self::Constant { c })
    }

    pub fn power_decay(c: f64, alpha: f64) -> Result<Self> {
        check_c(c)?;
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(invalid("schedule.alpha", "alpha must lie in (0, 1]"));
        }
        Ok(Self::PowerDecay { c, alpha })
    }

    /// δ_k.
    pub fn value(&self, k: u64) -> f64 {
        match *self {
            Self::Constant { c } => c,
            Self::PowerDecay { c, alpha } => c / ((k as f64) + 1.0).powf(alpha),
        }
    }

    pub fn initial(&self) -> f64 {
        self.value(0)
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Self::Constant { .. })
    }

    pub fn alpha(&self) -> Option<f64> {
        match *self {
            Self::Constant { .. } => None,
            Self::PowerDecay { alpha, .. } => Some(alpha),
        }
    }

    /// Σ_{k=0}^{n} δ_k.
    pub fn partial_sum(&self, n: u64) -> f64 {
        (0..=n).map(|k| self.value(k)).sum()
    }

    /// Σ_{k=0}^{n} δ_k².
    pub fn partial_sum_sq(&self, n: u64) -> f64 {
        (0..=n).map(|k| self.value(k).powi(2)).sum()
    }

    /// Same law with its scale replaced.
    pub fn with_scale(&self, c: f64) -> Result<Self> {
        match *self {
            Self::Constant { .. } => Self::constant(c),
            Self::PowerDecay { alpha, .. } => Self::power_decay(c, alpha),
        }
    }
}

fn check_c(c: f64) -> Result<()> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(invalid(
            "schedule.c",
            "step scale must be a positive finite real",
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn spot_values() {
        assert_eq!(StepSchedule::constant(0.5).unwrap().value(7), 0.5);
        assert_eq!(StepSchedule::power_decay(1.0, 1.0).unwrap().value(0), 1.0);
        // 16^0.75 = 8
        let v = StepSchedule::power_decay(2.0, 0.75).unwrap().value(15);
        assert!((v - 0.25).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(StepSchedule::constant(0.0).is_err());
        assert!(StepSchedule::constant(-1.0).is_err());
        assert!(StepSchedule::power_decay(1.0, 0.0).is_err());
        assert!(StepSchedule::power_decay(1.0, 1.5).is_err());
    }

    #[test]
    fn robbins_monro_partial_sums() {
        // Σδ² bounded by c²ζ(2α); Σδ keeps growing between N and 10N.
        let s = StepSchedule::power_decay(1.0, 0.75).unwrap();
        let zeta_1_5 = 2.612_375_348_685_488;
        let sq: f64 = (0..1_000_000u64).map(|k| s.value(k).powi(2)).sum();
        assert!(sq <= zeta_1_5 + 1e-9);
        let lin_n = s.partial_sum(100_000);
        let lin_10n = s.partial_sum(1_000_000);
        assert!(lin_10n > 1.5 * lin_n);
    }

    proptest! {
        #[test]
        fn non_increasing_and_positive(c in 1e-4f64..10.0, alpha in 0.01f64..=1.0, constant in any::<bool>()) {
            let s = if constant {
                StepSchedule::constant(c).unwrap()
            } else {
                StepSchedule::power_decay(c, alpha).unwrap()
            };
            let mut prev = s.value(0);
            for k in 1..10_000u64 {
                let v = s.value(k);
                prop_assert!(v > 0.0);
                prop_assert!(v <= prev);
                prev = v;
            }
        }
    }
}
