//! Two-player transferable-utility game between the base stations.
//!
//! Singletons are worth their uncoordinated equilibrium rates and the grand
//! coalition is worth the coordinated expected sum rate. With only two
//! players the core is non-empty exactly when v(N) ≥ v(MBS) + v(FBS).

use crate::equilibrium::EquilibriumReport;

/// Slack on the core inequality; boundary points count as cooperative.
pub const CORE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum CoalitionError {
    #[error("payment interval [{c_min}, {c_max}] is empty")]
    EmptyInterval { c_min: f64, c_max: f64 },
}

/// Returns (v_mbs, v_fbs, v_grand).
pub fn coalition_values(uc: &EquilibriumReport, c: &EquilibriumReport) -> (f64, f64, f64) {
    (uc.expected_macro, uc.expected_femto, c.expected_macro + c.expected_femto)
}

/// Payments c (rate moved from MBS to FBS) keeping both players at least as
/// well off as alone. May be inverted, in which case no such c exists.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PaymentInterval {
    pub c_min: f64,
    pub c_max: f64,
}

impl PaymentInterval {
    pub fn is_empty(&self) -> bool {
        self.c_min > self.c_max + CORE_TOL
    }

    pub fn contains(&self, c: f64) -> bool {
        c >= self.c_min - CORE_TOL && c <= self.c_max + CORE_TOL
    }
}

/// `c_macro` and `c_femto` are the coordinated expected per-player rates.
pub fn payment_interval(v_mbs: f64, v_fbs: f64, c_macro: f64, c_femto: f64) -> PaymentInterval {
    PaymentInterval {
        c_min: v_fbs - c_femto,
        c_max: c_macro - v_mbs,
    }
}

pub fn core_nonempty(v_mbs: f64, v_fbs: f64, v_grand: f64) -> bool {
    v_grand >= v_mbs + v_fbs - CORE_TOL
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PaymentPolicy {
    /// Split the surplus equally.
    #[default]
    Midpoint,
    /// The MBS keeps only its stand-alone value (c = c_max).
    MacroFloor,
    /// The FBS keeps only its stand-alone value (c = c_min).
    FemtoFloor,
}

impl PaymentPolicy {
    pub fn as_str(&self) -> &'static str {
        match self {
            PaymentPolicy::Midpoint => "midpoint",
            PaymentPolicy::MacroFloor => "macro_floor",
            PaymentPolicy::FemtoFloor => "femto_floor",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Allocation {
    pub payment: f64,
    pub u_macro: f64,
    pub u_femto: f64,
}

pub fn allocate_utilities(
    interval: PaymentInterval,
    policy: PaymentPolicy,
    c_macro: f64,
    c_femto: f64,
) -> Result<Allocation, CoalitionError> {
    if interval.is_empty() {
        return Err(CoalitionError::EmptyInterval {
            c_min: interval.c_min,
            c_max: interval.c_max,
        });
    }
    let payment = match policy {
        PaymentPolicy::Midpoint => 0.5 * (interval.c_min + interval.c_max),
        PaymentPolicy::MacroFloor => interval.c_max,
        PaymentPolicy::FemtoFloor => interval.c_min,
    };
    Ok(Allocation {
        payment,
        u_macro: c_macro - payment,
        u_femto: c_femto + payment,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoalitionReport {
    pub v_mbs: f64,
    pub v_fbs: f64,
    pub v_grand: f64,
    /// Coordinated expected MUE and FUE rates.
    pub c_macro: f64,
    pub c_femto: f64,
    pub surplus: f64,
    pub interval: PaymentInterval,
    pub core: bool,
    /// Present exactly when `core` holds.
    pub allocation: Option<Allocation>,
}

impl CoalitionReport {
    pub fn from_equilibria(uc: &EquilibriumReport, c: &EquilibriumReport, policy: PaymentPolicy) -> Self {
        let (v_mbs, v_fbs, _) = coalition_values(uc, c);
        Self::from_values(v_mbs, v_fbs, c.expected_macro, c.expected_femto, policy)
    }

    pub fn from_values(v_mbs: f64, v_fbs: f64, c_macro: f64, c_femto: f64, policy: PaymentPolicy) -> Self {
        let v_grand = c_macro + c_femto;
        let interval = payment_interval(v_mbs, v_fbs, c_macro, c_femto);
        let core = core_nonempty(v_mbs, v_fbs, v_grand);
        let allocation = if core {
            allocate_utilities(interval, policy, c_macro, c_femto).ok()
        } else {
            None
        };
        Self {
            v_mbs,
            v_fbs,
            v_grand,
            c_macro,
            c_femto,
            surplus: v_grand - v_mbs - v_fbs,
            interval,
            core,
            allocation,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::CorrelatedDistribution;

    fn report(m: f64, f: f64) -> EquilibriumReport {
        EquilibriumReport {
            distribution: CorrelatedDistribution::uniform(1),
            expected_sum: m + f,
            expected_macro: m,
            expected_femto: f,
        }
    }

    #[test]
    fn values_pass_through() {
        assert_eq!(coalition_values(&report(3.0, 4.0), &report(5.0, 3.0)), (3.0, 4.0, 8.0));
        let same = report(1.5, 2.5);
        let r = CoalitionReport::from_equilibria(&same, &same, PaymentPolicy::Midpoint);
        assert_eq!(r.surplus, 0.0);
        assert!(r.core);
    }

    #[test]
    fn interval_examples() {
        let i = payment_interval(3.0, 4.0, 6.0, 2.0);
        assert_eq!((i.c_min, i.c_max), (2.0, 3.0));
        assert!(!i.is_empty());
        let i = payment_interval(3.0, 4.0, 4.0, 2.0);
        assert_eq!((i.c_min, i.c_max), (2.0, 1.0));
        assert!(i.is_empty());
        let i = payment_interval(3.0, 4.0, 3.0, 4.0);
        assert_eq!((i.c_min, i.c_max), (0.0, 0.0));
        assert!(!i.is_empty());
    }

    #[test]
    fn core_boundary() {
        assert!(core_nonempty(3.0, 4.0, 8.0));
        assert!(!core_nonempty(3.0, 4.0, 6.0));
        assert!(core_nonempty(3.0, 4.0, 7.0 - 1e-10));
        assert!(core_nonempty(3.0, 4.0, 7.0 + 1e-10));
    }

    #[test]
    fn allocation_examples() {
        let i = payment_interval(3.0, 4.0, 6.0, 2.0);
        let a = allocate_utilities(i, PaymentPolicy::Midpoint, 6.0, 2.0).unwrap();
        assert_eq!((a.payment, a.u_macro, a.u_femto), (2.5, 3.5, 4.5));
        let a = allocate_utilities(i, PaymentPolicy::MacroFloor, 6.0, 2.0).unwrap();
        assert_eq!((a.payment, a.u_macro), (3.0, 3.0));
        let a = allocate_utilities(i, PaymentPolicy::FemtoFloor, 6.0, 2.0).unwrap();
        assert_eq!((a.payment, a.u_femto), (2.0, 4.0));

        let zero = payment_interval(3.0, 4.0, 3.0, 4.0);
        let a = allocate_utilities(zero, PaymentPolicy::Midpoint, 3.0, 4.0).unwrap();
        assert_eq!((a.payment, a.u_macro, a.u_femto), (0.0, 3.0, 4.0));

        let empty = payment_interval(3.0, 4.0, 4.0, 2.0);
        assert_eq!(
            allocate_utilities(empty, PaymentPolicy::Midpoint, 4.0, 2.0),
            Err(CoalitionError::EmptyInterval { c_min: 2.0, c_max: 1.0 })
        );
    }

    #[test]
    fn report_has_allocation_iff_core() {
        let coop = CoalitionReport::from_values(3.0, 4.0, 6.0, 2.0, PaymentPolicy::Midpoint);
        assert!(coop.core && coop.allocation.is_some());
        let comp = CoalitionReport::from_values(3.0, 4.0, 4.0, 2.0, PaymentPolicy::Midpoint);
        assert!(!comp.core && comp.allocation.is_none());
        assert_eq!(comp.surplus, -1.0);
    }
}
