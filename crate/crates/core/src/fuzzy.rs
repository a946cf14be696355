//! Input term families, consequent centers and center-average inference.
//!
//! Every excess-demand function in this crate is a center-average fuzzy
//! system over the seven piecewise-linear input terms below. The terms form
//! a partition of unity, so a full rule table reduces to piecewise-linear
//! interpolation between the consequent centers.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Center-average denominators below this are treated as "no rule fired".
pub const EPS_DEN: f64 = 1e-12;

/// Linguistic input terms over a log-ratio (or slope) feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Term {
    PS,
    PM,
    PL,
    NS,
    NM,
    NL,
    AZ,
}

impl Term {
    pub const ALL: [Term; 7] = [
        Term::PS,
        Term::PM,
        Term::PL,
        Term::NS,
        Term::NM,
        Term::NL,
        Term::AZ,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Term::PS => "PS",
            Term::PM => "PM",
            Term::PL => "PL",
            Term::NS => "NS",
            Term::NM => "NM",
            Term::NL => "NL",
            Term::AZ => "AZ",
        }
    }

    /// The term mirrored about zero.
    pub fn mirror(self) -> Term {
        match self {
            Term::PS => Term::NS,
            Term::PM => Term::NM,
            Term::PL => Term::NL,
            Term::NS => Term::PS,
            Term::NM => Term::PM,
            Term::NL => Term::PL,
            Term::AZ => Term::AZ,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Term {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Term::ALL
            .into_iter()
            .find(|t| t.label() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown term {s}")))
    }
}

/// Union of the three positive (or negative) terms, membership by max.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Positive,
    Negative,
}

/// The seven-term input family of width `w`.
///
/// `w` is in log-ratio units: `w = 0.01` makes "small" mean about 1%,
/// "medium" about 2% and "large" 3% and above.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TermFamily {
    w: f64,
}

impl TermFamily {
    pub fn new(w: f64) -> Result<Self> {
        if !w.is_finite() || w <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "term width must be positive and finite, got {w}"
            )));
        }
        Ok(TermFamily { w })
    }

    pub fn width(&self) -> f64 {
        self.w
    }

    /// Membership of `x` in `term`. Non-finite `x` is rejected.
    pub fn membership(&self, term: Term, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::InvalidInput(format!("non-finite feature value {x}")));
        }
        Ok(self.mu(term, x))
    }

    /// Unchecked membership; callers guarantee `x` is finite.
    pub(crate) fn mu(&self, term: Term, x: f64) -> f64 {
        let w = self.w;
        match term {
            Term::AZ => triangle(x, 0.0, w),
            Term::PS => triangle(x, w, w),
            Term::PM => triangle(x, 2.0 * w, w),
            Term::NS => triangle(x, -w, w),
            Term::NM => triangle(x, -2.0 * w, w),
            Term::PL => {
                if x <= 2.0 * w {
                    0.0
                } else if x >= 3.0 * w {
                    1.0
                } else {
                    (x - 2.0 * w) / w
                }
            }
            Term::NL => {
                if x >= -2.0 * w {
                    0.0
                } else if x <= -3.0 * w {
                    1.0
                } else {
                    (-2.0 * w - x) / w
                }
            }
        }
    }

    pub fn aggregate_membership(&self, sign: Sign, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::InvalidInput(format!("non-finite feature value {x}")));
        }
        Ok(self.mu_aggregate(sign, x))
    }

    pub(crate) fn mu_aggregate(&self, sign: Sign, x: f64) -> f64 {
        let terms = match sign {
            Sign::Positive => [Term::PS, Term::PM, Term::PL],
            Sign::Negative => [Term::NS, Term::NM, Term::NL],
        };
        terms.into_iter().map(|t| self.mu(t, x)).fold(0.0, f64::max)
    }
}

// Symmetric triangle with apex at `center` and half-width `half`.
fn triangle(x: f64, center: f64, half: f64) -> f64 {
    let d = (x - center).abs();
    if d >= half {
        0.0
    } else {
        1.0 - d / half
    }
}

/// Output action labels for the excess demand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    BS,
    BM,
    BB,
    SS,
    SM,
    SB,
    N,
}

impl Action {
    pub const ALL: [Action; 7] = [
        Action::BS,
        Action::BM,
        Action::BB,
        Action::SS,
        Action::SM,
        Action::SB,
        Action::N,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Action::BS => "BS",
            Action::BM => "BM",
            Action::BB => "BB",
            Action::SS => "SS",
            Action::SM => "SM",
            Action::SB => "SB",
            Action::N => "N",
        }
    }

    /// Center of the action's output set (fraction of trading power).
    pub fn center(self) -> f64 {
        ConsequentCenters::STANDARD.get(self)
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Action {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Action::ALL
            .into_iter()
            .find(|a| a.label() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown action {s}")))
    }
}

/// Centers of the seven output sets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsequentCenters {
    pub small: f64,
    pub medium: f64,
    pub big: f64,
}

impl ConsequentCenters {
    pub const STANDARD: ConsequentCenters = ConsequentCenters {
        small: 0.1,
        medium: 0.2,
        big: 0.4,
    };

    pub fn get(&self, action: Action) -> f64 {
        match action {
            Action::BS => self.small,
            Action::BM => self.medium,
            Action::BB => self.big,
            Action::SS => -self.small,
            Action::SM => -self.medium,
            Action::SB => -self.big,
            Action::N => 0.0,
        }
    }
}

impl Default for ConsequentCenters {
    fn default() -> Self {
        Self::STANDARD
    }
}

/// Output-set breakpoints `(left foot, apex, right foot)` for the buy side;
/// sell sets mirror them. Kept for reference, inference only uses centers.
pub const OUTPUT_SET_SHAPES: [(Action, f64, f64, f64); 3] = [
    (Action::BS, 0.0, 0.1, 0.2),
    (Action::BM, 0.1, 0.2, 0.4),
    (Action::BB, 0.2, 0.4, 0.4),
];

/// One evaluated rule: its firing degree and consequent center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Firing {
    pub degree: f64,
    pub center: f64,
}

impl Firing {
    pub fn new(degree: f64, center: f64) -> Self {
        Firing { degree, center }
    }
}

/// Result of a center-average evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inference {
    pub value: f64,
    /// Sum of firing degrees.
    pub denominator: f64,
}

impl Inference {
    pub fn fired(&self) -> bool {
        self.denominator >= EPS_DEN
    }
}

/// Weighted mean of the centers, 0 when nothing fired.
pub fn center_average(firings: &[Firing]) -> f64 {
    center_average_detail(firings).value
}

pub fn center_average_detail(firings: &[Firing]) -> Inference {
    let (num, den) = firings.iter().fold((0.0, 0.0), |(n, d), f| {
        (n + f.degree * f.center, d + f.degree)
    });
    if den < EPS_DEN {
        Inference {
            value: 0.0,
            denominator: den,
        }
    } else {
        Inference {
            value: num / den,
            denominator: den,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fam() -> TermFamily {
        TermFamily::new(0.01).unwrap()
    }

    #[test]
    fn family_examples() {
        let f = fam();
        assert_eq!(f.membership(Term::PS, 0.01).unwrap(), 1.0);
        assert!((f.membership(Term::PL, 0.025).unwrap() - 0.5).abs() < 1e-12);
        assert!((f.membership(Term::AZ, -0.005).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(f.membership(Term::PS, 0.0).unwrap(), 0.0);
        assert_eq!(f.membership(Term::PM, 0.02).unwrap(), 1.0);
        assert_eq!(f.membership(Term::NL, -0.05).unwrap(), 1.0);
    }

    #[test]
    fn rejects_bad_width_and_input() {
        for w in [0.0, -0.01, f64::NAN, f64::INFINITY] {
            assert!(matches!(
                TermFamily::new(w),
                Err(Error::InvalidParameter(_))
            ));
        }
        assert!(matches!(
            fam().membership(Term::PS, f64::NAN),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            "XX".parse::<Term>(),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn aggregate_examples() {
        let f = fam();
        assert_eq!(f.aggregate_membership(Sign::Positive, 0.01).unwrap(), 1.0);
        assert_eq!(f.aggregate_membership(Sign::Negative, 0.005).unwrap(), 0.0);
        assert!((f.aggregate_membership(Sign::Positive, 0.005).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn center_average_examples() {
        assert_eq!(center_average(&[Firing::new(1.0, 0.1)]), 0.1);
        let v = center_average(&[Firing::new(0.5, 0.4), Firing::new(0.5, -0.2)]);
        assert!((v - 0.1).abs() < 1e-15);
        assert_eq!(center_average(&[]), 0.0);
        assert_eq!(center_average(&[Firing::new(0.0, 0.4)]), 0.0);
    }

    #[test]
    fn centers_antisymmetric() {
        let c = ConsequentCenters::STANDARD;
        for (b, s) in [
            (Action::BS, Action::SS),
            (Action::BM, Action::SM),
            (Action::BB, Action::SB),
        ] {
            assert_eq!(c.get(b), -c.get(s));
            assert!(c.get(b).abs() <= 0.4);
        }
        assert_eq!(c.get(Action::N), 0.0);
    }

    #[test]
    fn partition_of_unity_dense() {
        let f = fam();
        for i in 0..=10_000 {
            let x = -0.05 + 0.1 * i as f64 / 10_000.0;
            let s: f64 = Term::ALL.iter().map(|&t| f.mu(t, x)).sum();
            assert!((s - 1.0).abs() < 1e-12, "x={x} sum={s}");
        }
    }

    #[test]
    fn continuous_across_breakpoints() {
        let f = fam();
        let h = 1e-9;
        for k in -4..=4 {
            let b = k as f64 * 0.01;
            for t in Term::ALL {
                let jump = (f.mu(t, b + h) - f.mu(t, b - h)).abs();
                // slopes are at most 1/w
                assert!(jump <= 2.0 * h / 0.01 + 1e-12, "{t} at {b}");
            }
        }
    }

    proptest! {
        #[test]
        fn memberships_bounded_and_mirrored(x in -1.0f64..1.0, w in 1e-4f64..0.5) {
            let f = TermFamily::new(w).unwrap();
            for t in Term::ALL {
                let m = f.mu(t, x);
                prop_assert!((0.0..=1.0).contains(&m));
                prop_assert_eq!(m, f.mu(t.mirror(), -x));
            }
        }

        #[test]
        fn partition_of_unity(u in -5.0f64..5.0, w in 1e-4f64..0.5) {
            let f = TermFamily::new(w).unwrap();
            let x = u * w;
            let s: f64 = Term::ALL.iter().map(|&t| f.mu(t, x)).sum();
            prop_assert!((s - 1.0).abs() < 1e-12);
        }

        #[test]
        fn positive_aggregate_covers_positive_axis(x in 1e-9f64..10.0) {
            prop_assert!(fam().mu_aggregate(Sign::Positive, x) > 0.0);
        }

        #[test]
        fn center_average_bounded_and_ratio_invariant(
            firings in prop::collection::vec((0.0f64..1.0, -0.4f64..0.4), 1..8),
            scale in 0.01f64..100.0,
        ) {
            let fs: Vec<Firing> = firings.iter().map(|&(d, c)| Firing::new(d, c)).collect();
            let inf = center_average_detail(&fs);
            if inf.fired() {
                let active: Vec<f64> = fs.iter().filter(|f| f.degree > 0.0).map(|f| f.center).collect();
                let lo = active.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = active.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(inf.value >= lo - 1e-12 && inf.value <= hi + 1e-12);
                let scaled: Vec<Firing> = fs.iter().map(|f| Firing::new(f.degree * scale, f.center)).collect();
                prop_assert!((center_average(&scaled) - inf.value).abs() < 1e-12);
            }
        }
    }
}
