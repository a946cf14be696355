//! The twelve built-in excess-demand functions.
//!
//! Each function is the closed form of its rule table under center-average
//! inference. Missing features contribute zero membership; a group whose
//! domain condition fails, or whose rules all have zero firing, is inactive
//! and contributes nothing to the price step.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fuzzy::{ConsequentCenters, Sign, Term, TermFamily, EPS_DEN};

/// Signed fraction of a group's trading power; positive means net buying.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExcessDemand {
    pub value: f64,
    pub active: bool,
}

impl ExcessDemand {
    pub const INACTIVE: ExcessDemand = ExcessDemand {
        value: 0.0,
        active: false,
    };

    pub fn active(value: f64) -> Self {
        ExcessDemand {
            value,
            active: true,
        }
    }

    /// `num / den`, inactive when the denominator vanishes.
    pub fn ratio(num: f64, den: f64) -> Self {
        if den < EPS_DEN {
            Self::INACTIVE
        } else {
            Self::active(num / den)
        }
    }
}

/// Identifier of a built-in rule group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BuiltinGroup {
    Ed1,
    Ed2,
    Ed3,
    Ed4,
    Ed5,
    Ed6,
    Ed7,
    Ed8,
    Ed9,
    Ed10,
    Ed11,
    Ed12,
}

impl BuiltinGroup {
    pub const ALL: [BuiltinGroup; 12] = [
        BuiltinGroup::Ed1,
        BuiltinGroup::Ed2,
        BuiltinGroup::Ed3,
        BuiltinGroup::Ed4,
        BuiltinGroup::Ed5,
        BuiltinGroup::Ed6,
        BuiltinGroup::Ed7,
        BuiltinGroup::Ed8,
        BuiltinGroup::Ed9,
        BuiltinGroup::Ed10,
        BuiltinGroup::Ed11,
        BuiltinGroup::Ed12,
    ];

    /// 1-based group number.
    pub fn number(self) -> usize {
        self as usize + 1
    }
}

impl fmt::Display for BuiltinGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ed{}", self.number())
    }
}

impl FromStr for BuiltinGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BuiltinGroup::ALL
            .into_iter()
            .find(|g| g.to_string() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown rule group {s}")))
    }
}

/// Manipulator phase: accumulate, push, distribute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Accumulate,
    Push,
    Distribute,
}

/// Three contiguous half-open time ranges `[a,b)`, `[b,c)`, `[c,d)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManipulatorSchedule {
    pub phase1: [usize; 2],
    pub phase2: [usize; 2],
    pub phase3: [usize; 2],
}

impl ManipulatorSchedule {
    pub fn new(a: usize, b: usize, c: usize, d: usize) -> Result<Self> {
        let s = ManipulatorSchedule {
            phase1: [a, b],
            phase2: [b, c],
            phase3: [c, d],
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let ordered = self.phase1[0] < self.phase1[1]
            && self.phase2[0] < self.phase2[1]
            && self.phase3[0] < self.phase3[1];
        let contiguous = self.phase1[1] == self.phase2[0] && self.phase2[1] == self.phase3[0];
        if !(ordered && contiguous) {
            return Err(Error::Config(format!(
                "manipulator phases must be non-empty, ordered and contiguous, got {:?} {:?} {:?}",
                self.phase1, self.phase2, self.phase3
            )));
        }
        Ok(())
    }

    pub fn phase_at(&self, t: usize) -> Option<Phase> {
        let within = |r: [usize; 2]| r[0] <= t && t < r[1];
        if within(self.phase1) {
            Some(Phase::Accumulate)
        } else if within(self.phase2) {
            Some(Phase::Push)
        } else if within(self.phase3) {
            Some(Phase::Distribute)
        } else {
            None
        }
    }

    pub fn end(&self) -> usize {
        self.phase3[1]
    }
}

/// Holdings for the stop rules: amount and volume-weighted entry price.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Portfolio {
    pub amount: f64,
    pub anchor_price: f64,
}

impl Portfolio {
    pub fn new(amount: f64, anchor_price: f64) -> Result<Self> {
        let p = Portfolio {
            amount,
            anchor_price,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.amount.is_finite() && self.amount >= 0.0) {
            return Err(Error::Config(format!(
                "portfolio amount must be nonnegative, got {}",
                self.amount
            )));
        }
        if self.amount > 0.0 && !(self.anchor_price.is_finite() && self.anchor_price > 0.0) {
            return Err(Error::Config(format!(
                "portfolio anchor price must be positive, got {}",
                self.anchor_price
            )));
        }
        Ok(())
    }

    pub fn is_open(&self) -> bool {
        self.amount > 0.0
    }

    /// Apply a signed trade of `trade = a·ed` at `price`.
    ///
    /// Buys add `trade` units and re-average the entry price; sells remove
    /// the fraction `|trade|` of the position, clamped at zero.
    pub fn apply(&self, trade: f64, price: f64) -> Portfolio {
        if trade > 0.0 {
            let amount = self.amount + trade;
            let anchor_price = if self.is_open() {
                (self.amount * self.anchor_price + trade * price) / amount
            } else {
                price
            };
            Portfolio {
                amount,
                anchor_price,
            }
        } else if trade < 0.0 {
            let amount = (self.amount * (1.0 - trade.abs())).max(0.0);
            Portfolio {
                amount,
                anchor_price: self.anchor_price,
            }
        } else {
            *self
        }
    }
}

/// Widths of the stop rules' Negative Large sets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopWidths {
    pub protective: f64,
    pub trailing: f64,
}

impl Default for StopWidths {
    fn default() -> Self {
        StopWidths {
            protective: 0.20,
            trailing: 0.10,
        }
    }
}

/// Term family plus consequent centers: everything the closed forms need.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RuleSet {
    pub family: TermFamily,
    pub centers: ConsequentCenters,
}

fn mu(f: &TermFamily, term: Term, x: Option<f64>) -> f64 {
    x.map_or(0.0, |x| f.mu(term, x))
}

fn mu_agg(f: &TermFamily, sign: Sign, x: Option<f64>) -> f64 {
    x.map_or(0.0, |x| f.mu_aggregate(sign, x))
}

impl RuleSet {
    pub fn new(w: f64) -> Result<Self> {
        Ok(RuleSet {
            family: TermFamily::new(w)?,
            centers: ConsequentCenters::STANDARD,
        })
    }

    fn w(&self) -> f64 {
        self.family.width()
    }

    /// Moving-average crossover.
    pub fn ed1(&self, x1: Option<f64>) -> ExcessDemand {
        let Some(x) = x1 else {
            return ExcessDemand::INACTIVE;
        };
        let (f, c) = (&self.family, &self.centers);
        let table = [
            (Term::PS, c.small),
            (Term::PM, c.big),
            (Term::PL, -c.medium),
            (Term::NS, -c.small),
            (Term::NM, -c.big),
            (Term::NL, c.medium),
            (Term::AZ, 0.0),
        ];
        let num: f64 = table.iter().map(|&(t, ci)| ci * f.mu(t, x)).sum();
        let den: f64 = table.iter().map(|&(t, _)| f.mu(t, x)).sum();
        ExcessDemand::ratio(num, den)
    }

    /// Support/resistance breakout.
    pub fn ed2(&self, x2: Option<f64>, x3: Option<f64>) -> ExcessDemand {
        let domain = x2.is_some_and(|x| x > 0.0) || x3.is_some_and(|x| x < 0.0);
        if !domain {
            return ExcessDemand::INACTIVE;
        }
        let (f, c) = (&self.family, &self.centers);
        let (ps, pm, pl) = (
            mu(f, Term::PS, x2),
            mu(f, Term::PM, x2),
            mu(f, Term::PL, x2),
        );
        let (ns, nm, nl) = (
            mu(f, Term::NS, x3),
            mu(f, Term::NM, x3),
            mu(f, Term::NL, x3),
        );
        let num =
            c.small * ps + c.big * pm - c.medium * pl - c.small * ns - c.big * nm + c.medium * nl;
        ExcessDemand::ratio(num, ps + pm + pl + ns + nm + nl)
    }

    /// Revisit of support (buy) or resistance (sell).
    pub fn ed3(&self, x2: Option<f64>, x3: Option<f64>) -> ExcessDemand {
        let w = self.w();
        let domain = x2.is_some_and(|x| x.abs() < w) || x3.is_some_and(|x| x.abs() < w);
        if !domain {
            return ExcessDemand::INACTIVE;
        }
        let f = &self.family;
        let m = self.centers.medium;
        let (az2, az3) = (mu(f, Term::AZ, x2), mu(f, Term::AZ, x3));
        ExcessDemand::ratio(m * az3 - m * az2, az3 + az2)
    }

    /// Trend-line continuation.
    pub fn ed4(&self, x4: Option<f64>, x5: Option<f64>) -> ExcessDemand {
        let w = self.w();
        let domain = x4.is_some_and(|x| 0.0 < x && x < 2.0 * w)
            || x5.is_some_and(|x| -2.0 * w < x && x < 0.0);
        if !domain {
            return ExcessDemand::INACTIVE;
        }
        let f = &self.family;
        let m = self.centers.medium;
        let (ps, ns) = (mu(f, Term::PS, x4), mu(f, Term::NS, x5));
        ExcessDemand::ratio(m * ps - m * ns, ps + ns)
    }

    /// Trend-line reversal.
    pub fn ed5(&self, x4: Option<f64>, x5: Option<f64>) -> ExcessDemand {
        let w = self.w();
        let domain = x4.is_some_and(|x| x < -w) || x5.is_some_and(|x| x > w);
        if !domain {
            return ExcessDemand::INACTIVE;
        }
        let (f, c) = (&self.family, &self.centers);
        let (pm, pl) = (mu(f, Term::PM, x5), mu(f, Term::PL, x5));
        let (nm, nl) = (mu(f, Term::NM, x4), mu(f, Term::NL, x4));
        let num = c.small * pm + c.big * pl - c.small * nm - c.big * nl;
        ExcessDemand::ratio(num, pm + pl + nm + nl)
    }

    /// Big seller; `x1` must be computed with `m = 1`.
    pub fn ed6(&self, x1: Option<f64>) -> ExcessDemand {
        let Some(x) = x1 else {
            return ExcessDemand::INACTIVE;
        };
        let (f, c) = (&self.family, &self.centers);
        let (ps, pm, pl, az) = (
            f.mu(Term::PS, x),
            f.mu(Term::PM, x),
            f.mu(Term::PL, x),
            f.mu(Term::AZ, x),
        );
        let num = -c.small * ps - c.medium * pm - c.big * pl;
        ExcessDemand::ratio(num, ps + pm + pl + az)
    }

    /// Big buyer; `x1` must be computed with `m = 1`.
    pub fn ed7(&self, x1: Option<f64>) -> ExcessDemand {
        let Some(x) = x1 else {
            return ExcessDemand::INACTIVE;
        };
        let (f, c) = (&self.family, &self.centers);
        let (ns, nm, nl, az) = (
            f.mu(Term::NS, x),
            f.mu(Term::NM, x),
            f.mu(Term::NL, x),
            f.mu(Term::AZ, x),
        );
        let num = c.small * ns + c.medium * nm + c.big * nl;
        ExcessDemand::ratio(num, ns + nm + nl + az)
    }

    /// Pump-and-dump manipulator.
    pub fn ed8(&self, x1: Option<f64>, phase: Option<Phase>) -> ExcessDemand {
        match phase {
            Some(Phase::Accumulate) => self.ed7(x1),
            Some(Phase::Push) => ExcessDemand::active(self.centers.big),
            Some(Phase::Distribute) => self.ed6(x1),
            None => ExcessDemand::INACTIVE,
        }
    }

    /// Band breakout.
    pub fn ed9(&self, x6: Option<f64>, x7: Option<f64>) -> ExcessDemand {
        let (f, c) = (&self.family, &self.centers);
        let (ps, pm) = (mu(f, Term::PS, x6), mu(f, Term::PM, x6));
        let (ns, nm) = (mu(f, Term::NS, x7), mu(f, Term::NM, x7));
        let num = c.small * ps + c.big * pm - c.small * ns - c.big * nm;
        ExcessDemand::ratio(num, ps + pm + ns + nm)
    }

    /// Protective and trailing stops on an open position.
    ///
    /// Loss `u = ln(p_t/p*)` fires Sell Big through a Negative Large set of
    /// width `stops.protective`; drawdown `d = ln(p_t/p_max)` fires Sell Big
    /// through a Negative Large set of width `stops.trailing`, gated by the
    /// Positive degree of `u` under this rule set's own width.
    pub fn ed10(
        &self,
        portfolio: &Portfolio,
        price: f64,
        rolling_max: Option<f64>,
        stops: StopWidths,
    ) -> ExcessDemand {
        if !portfolio.is_open()
            || price.is_nan()
            || price <= 0.0
            || portfolio.anchor_price.is_nan()
            || portfolio.anchor_price <= 0.0
        {
            return ExcessDemand::INACTIVE;
        }
        let (Ok(protect), Ok(trail)) = (
            TermFamily::new(stops.protective),
            TermFamily::new(stops.trailing),
        ) else {
            return ExcessDemand::INACTIVE;
        };
        let u = (price / portfolio.anchor_price).ln();
        let loss = protect.mu(Term::NL, u);
        let gate = self.family.mu_aggregate(Sign::Positive, u);
        let drawdown = rolling_max
            .filter(|m| *m > 0.0)
            .map_or(0.0, |m| trail.mu(Term::NL, (price / m).ln()));
        let trailing = gate * drawdown;
        let sb = -self.centers.big;
        ExcessDemand::ratio(sb * loss + sb * trailing, loss + trailing)
    }

    /// Trend reversal confirmed by on-balance volume slopes.
    pub fn ed11(
        &self,
        x4: Option<f64>,
        x5: Option<f64>,
        x8: Option<f64>,
        x9: Option<f64>,
    ) -> ExcessDemand {
        let f = &self.family;
        let buy = mu(f, Term::PS, x5) * mu_agg(f, Sign::Positive, x8);
        let sell = mu(f, Term::NS, x4) * mu_agg(f, Sign::Negative, x9);
        let m = self.centers.medium;
        ExcessDemand::ratio(m * buy - m * sell, buy + sell)
    }

    /// Trend reversal confirmed by relative strength.
    pub fn ed12(&self, x4: Option<f64>, x5: Option<f64>, x10: Option<f64>) -> ExcessDemand {
        let f = &self.family;
        let buy = mu(f, Term::PS, x5) * mu_agg(f, Sign::Positive, x10);
        let sell = mu(f, Term::NS, x4) * mu_agg(f, Sign::Negative, x10);
        let m = self.centers.medium;
        ExcessDemand::ratio(m * buy - m * sell, buy + sell)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const W: f64 = 0.01;

    fn rs() -> RuleSet {
        RuleSet::new(W).unwrap()
    }

    fn close(a: ExcessDemand, v: f64) {
        assert!(a.active, "expected active, got {a:?}");
        assert!((a.value - v).abs() < 1e-12, "{} vs {v}", a.value);
    }

    // Piecewise-linear interpolant through the rule-table centers.
    fn ed1_interpolant(x: f64) -> f64 {
        let knots = [(0.0, 0.0), (W, 0.1), (2.0 * W, 0.4), (3.0 * W, -0.2)];
        let s = x.signum();
        let a = x.abs();
        if a >= 3.0 * W {
            return s * -0.2;
        }
        for k in knots.windows(2) {
            let ((x0, y0), (x1, y1)) = (k[0], k[1]);
            if a <= x1 {
                return s * (y0 + (y1 - y0) * (a - x0) / (x1 - x0));
            }
        }
        unreachable!()
    }

    #[test]
    fn ed1_examples() {
        let r = rs();
        close(r.ed1(Some(0.0)), 0.0);
        close(r.ed1(Some(2.0 * W)), 0.4);
        close(r.ed1(Some(2.5 * W)), 0.1);
        close(r.ed1(Some(W)), 0.1);
        close(r.ed1(Some(0.5)), -0.2);
        assert_eq!(r.ed1(None), ExcessDemand::INACTIVE);
    }

    #[test]
    fn ed2_examples() {
        let r = rs();
        close(r.ed2(Some(W), Some(0.05)), 0.1);
        close(r.ed2(Some(-0.01), Some(-2.0 * W)), -0.4);
        assert_eq!(r.ed2(Some(-0.005), Some(0.005)), ExcessDemand::INACTIVE);
        assert_eq!(r.ed2(None, None), ExcessDemand::INACTIVE);
    }

    #[test]
    fn ed3_examples() {
        let r = rs();
        close(r.ed3(Some(-0.05), Some(0.0)), 0.2);
        close(r.ed3(Some(0.0), Some(0.05)), -0.2);
        close(r.ed3(Some(-0.005), Some(0.005)), 0.0);
        assert!(!r.ed3(Some(0.05), Some(0.08)).active);
    }

    #[test]
    fn ed4_examples() {
        let r = rs();
        close(r.ed4(Some(W), None), 0.2);
        close(r.ed4(None, Some(-W)), -0.2);
        assert!(!r.ed4(Some(3.0 * W), None).active);
    }

    #[test]
    fn ed5_examples() {
        let r = rs();
        close(r.ed5(None, Some(3.0 * W)), 0.4);
        close(r.ed5(Some(-2.0 * W), None), -0.1);
        close(r.ed5(Some(-2.5 * W), None), -0.25);
        assert!(!r.ed5(Some(-0.5 * W), Some(0.5 * W)).active);
    }

    #[test]
    fn ed6_ed7_examples() {
        let r = rs();
        close(r.ed6(Some(0.0)), 0.0);
        close(r.ed6(Some(W)), -0.1);
        close(r.ed6(Some(W / 2.0)), -0.05);
        assert_eq!(r.ed6(Some(-2.0 * W)).value, 0.0);
        close(r.ed7(Some(-W)), 0.1);
        close(r.ed7(Some(0.0)), 0.0);
        close(r.ed7(Some(-3.0 * W)), 0.4);
    }

    #[test]
    fn ed8_examples() {
        let r = rs();
        for x in [-0.1, 0.0, 0.003, 0.2] {
            assert_eq!(r.ed8(Some(x), Some(Phase::Push)).value, 0.4);
        }
        assert_eq!(r.ed8(None, Some(Phase::Push)).value, 0.4);
        close(r.ed8(Some(-W), Some(Phase::Accumulate)), 0.1);
        close(r.ed8(Some(W), Some(Phase::Distribute)), -0.1);
        assert_eq!(r.ed8(Some(W), None), ExcessDemand::INACTIVE);
    }

    #[test]
    fn ed9_examples() {
        let r = rs();
        close(r.ed9(Some(W), Some(0.2)), 0.1);
        close(r.ed9(Some(2.0 * W), Some(0.2)), 0.4);
        close(r.ed9(Some(-0.2), Some(-2.0 * W)), -0.4);
        assert!(!r.ed9(Some(-0.05), Some(0.05)).active);
    }

    #[test]
    fn ed10_examples() {
        let r = rs();
        let stops = StopWidths::default();
        let held = Portfolio::new(1.0, 10.0).unwrap();
        let p = 10.0 * (-0.8f64).exp();
        close(r.ed10(&held, p, Some(10.0), stops), -0.4);
        let p = 10.0 * 0.3f64.exp();
        let pmax = p / (-0.4f64).exp();
        close(r.ed10(&held, p, Some(pmax), stops), -0.4);
        let empty = Portfolio::default();
        assert_eq!(r.ed10(&empty, p, Some(pmax), stops), ExcessDemand::INACTIVE);
        // small loss, no drawdown: nothing fires
        assert!(!r.ed10(&held, 9.9, Some(10.0), stops).active);
    }

    #[test]
    fn ed11_ed12_examples() {
        let r = rs();
        close(r.ed11(None, Some(W), Some(5.0), None), 0.2);
        close(r.ed11(Some(-W), None, None, Some(-5.0)), -0.2);
        assert_eq!(
            r.ed11(Some(0.5), Some(-0.5), Some(-1.0), Some(1.0)).value,
            0.0
        );
        close(r.ed12(None, Some(W), Some(W)), 0.2);
        close(r.ed12(Some(-W), None, Some(-W)), -0.2);
        assert_eq!(r.ed12(Some(-W), Some(W), Some(0.0)).value, 0.0);
    }

    #[test]
    fn schedule_lookup() {
        let s = ManipulatorSchedule::new(100, 200, 220, 500).unwrap();
        assert_eq!(s.phase_at(99), None);
        assert_eq!(s.phase_at(100), Some(Phase::Accumulate));
        assert_eq!(s.phase_at(200), Some(Phase::Push));
        assert_eq!(s.phase_at(219), Some(Phase::Push));
        assert_eq!(s.phase_at(220), Some(Phase::Distribute));
        assert_eq!(s.phase_at(500), None);
        assert!(ManipulatorSchedule::new(100, 200, 200, 500).is_err());
        let gap = ManipulatorSchedule {
            phase1: [0, 10],
            phase2: [11, 20],
            phase3: [20, 30],
        };
        assert!(gap.validate().is_err());
    }

    #[test]
    fn portfolio_updates() {
        let p = Portfolio::default().apply(1.0, 10.0);
        assert_eq!(
            p,
            Portfolio {
                amount: 1.0,
                anchor_price: 10.0
            }
        );
        let p = p.apply(1.0, 12.0);
        assert_eq!(p.amount, 2.0);
        assert!((p.anchor_price - 11.0).abs() < 1e-15);
        assert_eq!(p.apply(-1.0, 9.0).amount, 0.0);
        assert_eq!(p.apply(-3.0, 9.0).amount, 0.0);
        assert_eq!(p.apply(-0.25, 9.0).amount, 1.5);
    }

    proptest! {
        #[test]
        fn ed1_matches_interpolant_and_is_odd(x in -0.1f64..0.1) {
            let r = rs();
            let v = r.ed1(Some(x)).value;
            prop_assert!((v - ed1_interpolant(x)).abs() < 1e-12);
            prop_assert_eq!(r.ed1(Some(-x)).value, -v);
        }

        #[test]
        fn big_trader_signs(x in -0.1f64..0.1) {
            let r = rs();
            prop_assert!(r.ed6(Some(x)).value <= 0.0);
            prop_assert!(r.ed7(Some(x)).value >= 0.0);
            prop_assert_eq!(r.ed7(Some(x)).value, -r.ed6(Some(-x)).value);
        }
    }
}
