use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{PolyError, Polynomial};

/// Closed interval for one named variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub var: String,
    pub lo: f64,
    pub hi: f64,
}

/// Axis-aligned box, one closed interval per variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Interval>", into = "Vec<Interval>")]
pub struct IntervalBox {
    intervals: Vec<Interval>,
}

impl TryFrom<Vec<Interval>> for IntervalBox {
    type Error = PolyError;
    fn try_from(intervals: Vec<Interval>) -> Result<Self, PolyError> {
        for (i, iv) in intervals.iter().enumerate() {
            // bounded and ordered; NaN fails the comparison
            if !(iv.lo <= iv.hi) || !iv.lo.is_finite() || !iv.hi.is_finite() {
                return Err(PolyError::InvalidInterval { lo: iv.lo, hi: iv.hi });
            }
            if intervals[..i].iter().any(|o| o.var == iv.var) {
                return Err(PolyError::DuplicateVariable(iv.var.clone()));
            }
        }
        Ok(IntervalBox { intervals })
    }
}

impl From<IntervalBox> for Vec<Interval> {
    fn from(b: IntervalBox) -> Self {
        b.intervals
    }
}

impl IntervalBox {
    pub fn new<S: AsRef<str>>(bounds: &[(S, f64, f64)]) -> Result<Self, PolyError> {
        IntervalBox::try_from(
            bounds
                .iter()
                .map(|(v, lo, hi)| Interval {
                    var: v.as_ref().to_string(),
                    lo: *lo,
                    hi: *hi,
                })
                .collect::<Vec<_>>(),
        )
    }

    /// A one-dimensional box.
    pub fn interval(var: &str, lo: f64, hi: f64) -> Result<Self, PolyError> {
        IntervalBox::new(&[(var, lo, hi)])
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn dim(&self) -> usize {
        self.intervals.len()
    }

    pub fn vars(&self) -> Vec<String> {
        self.intervals.iter().map(|i| i.var.clone()).collect()
    }

    pub fn get(&self, var: &str) -> Option<&Interval> {
        self.intervals.iter().find(|i| i.var == var)
    }

    /// Membership of a point given in the box's variable order.
    pub fn contains(&self, point: &[f64]) -> bool {
        point.len() == self.intervals.len()
            && self
                .intervals
                .iter()
                .zip(point)
                .all(|(iv, &x)| iv.lo <= x && x <= iv.hi)
    }

    /// Every interval of `self` lies inside the same variable's interval of `outer`.
    pub fn is_subset_of(&self, outer: &IntervalBox) -> bool {
        self.intervals.iter().all(|iv| {
            outer
                .get(&iv.var)
                .map(|o| o.lo <= iv.lo && iv.hi <= o.hi)
                .unwrap_or(false)
        })
    }

    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.intervals
            .iter()
            .map(|iv| {
                if iv.hi > iv.lo {
                    rng.random_range(iv.lo..=iv.hi)
                } else {
                    iv.lo
                }
            })
            .collect()
    }

    /// Polynomial description `g(x) >= 0` with one entry `(x - lo)(hi - x)`
    /// per dimension.
    pub fn inequalities(&self) -> Vec<Polynomial> {
        self.intervals
            .iter()
            .map(|iv| {
                let x = Polynomial::var(&iv.var);
                &x.add_constant(-iv.lo) * &x.scale(-1.0).add_constant(iv.hi)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subset_and_membership() {
        let x = IntervalBox::interval("x", 0.0, 8.0).unwrap();
        let xu = IntervalBox::interval("x", 7.0, 8.0).unwrap();
        let far = IntervalBox::interval("x", 9.0, 10.0).unwrap();
        assert!(xu.is_subset_of(&x));
        assert!(!far.is_subset_of(&x));
        assert!(x.contains(&[8.0]) && !x.contains(&[8.0001]));
    }

    #[test]
    fn rejects_inverted_interval() {
        assert!(IntervalBox::interval("x", 1.0, 0.0).is_err());
        let json = r#"[{"var":"x","lo":2.0,"hi":1.0}]"#;
        assert!(serde_json::from_str::<IntervalBox>(json).is_err());
    }

    #[test]
    fn rejects_unbounded_interval() {
        assert!(IntervalBox::interval("x", 0.0, f64::INFINITY).is_err());
        assert!(IntervalBox::interval("x", f64::NEG_INFINITY, 0.0).is_err());
        assert!(IntervalBox::interval("x", f64::NAN, 0.0).is_err());
    }

    #[test]
    fn inequalities_are_nonnegative_inside() {
        let b = IntervalBox::interval("x", 7.0, 8.0).unwrap();
        let g = &b.inequalities()[0];
        assert!(g.eval(&[("x", 7.5)]).unwrap() > 0.0);
        assert!(g.eval(&[("x", 6.0)]).unwrap() < 0.0);
        assert_eq!(g.eval(&[("x", 7.0)]).unwrap(), 0.0);
    }
}
