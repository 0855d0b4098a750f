//! Shared numeric plumbing: tolerances, saturation, three-valued predicates.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Numeric configuration threaded through every evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    /// Comparison tolerance ε. Predicate comparisons that land inside an
    /// ε band report a boundary outcome instead of silently rounding.
    pub tol: f64,
    /// Saturation bound. A trace whose magnitude exceeds it is clamped and
    /// flagged; such values only ever feed magnitude comparisons against 2.
    pub sat: f64,
    /// Step cap for neighbor walks (fan closures, τ boundary walks).
    pub walk_window: usize,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            tol: 1e-9,
            sat: 1e120,
            walk_window: 10_000,
        }
    }
}

/// Three-valued predicate outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Trilean {
    Yes,
    No,
    Boundary,
}

impl Trilean {
    pub fn is_yes(self) -> bool {
        self == Trilean::Yes
    }
    pub fn is_no(self) -> bool {
        self == Trilean::No
    }
}

/// A complex trace value with a saturation flag.
///
/// Saturated values are clamped to magnitude `Params::sat` so downstream
/// arithmetic stays finite; the flag propagates through every combination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceValue {
    pub value: Complex64,
    pub saturated: bool,
}

impl TraceValue {
    pub fn exact(value: Complex64) -> Self {
        TraceValue {
            value,
            saturated: false,
        }
    }

    pub fn new(value: Complex64, params: &Params) -> Self {
        Self::with_flag(value, false, params)
    }

    fn with_flag(value: Complex64, saturated: bool, params: &Params) -> Self {
        let n = value.norm();
        if n > params.sat {
            TraceValue {
                value: value * (params.sat / n),
                saturated: true,
            }
        } else {
            TraceValue { value, saturated }
        }
    }

    /// Edge-relation step: `a·b − c`, preserving saturation.
    pub fn combine(a: &TraceValue, b: &TraceValue, c: &TraceValue, params: &Params) -> Self {
        let sat = a.saturated || b.saturated || c.saturated;
        Self::with_flag(a.value * b.value - c.value, sat, params)
    }

    pub fn abs(&self) -> f64 {
        self.value.norm()
    }

    /// Magnitude comparison against a small bound; saturated values always
    /// count as large.
    pub fn magnitude_exceeds(&self, bound: f64) -> bool {
        self.saturated || self.value.norm() > bound
    }
}

/// |a − b| ≤ tol, absolute.
pub fn close_abs(a: Complex64, b: Complex64, tol: f64) -> bool {
    (a - b).norm() <= tol
}

/// Relative closeness with an absolute floor of `tol`.
pub fn close_rel(a: Complex64, b: Complex64, tol: f64) -> bool {
    (a - b).norm() <= tol * (1.0 + a.norm().max(b.norm()))
}

/// Root t of t² − w·t + 1 = 0 with |t| ≥ 1.
///
/// Ties (both roots on the unit circle) take the root with argument in
/// [0, π). Used for ζ, ξ, η and the neighbor-recurrence eigenvalue λ.
pub fn root_ge_one(w: Complex64) -> Complex64 {
    let s = (w * w - 4.0).sqrt();
    let r1 = (w + s) / 2.0;
    let r2 = (w - s) / 2.0;
    let (n1, n2) = (r1.norm(), r2.norm());
    if (n1 - n2).abs() > 1e-14 * (1.0 + n1.max(n2)) {
        if n1 > n2 {
            r1
        } else {
            r2
        }
    } else {
        // both on the unit circle; pick arg in [0, π)
        let a1 = r1.arg();
        if (0.0..std::f64::consts::PI).contains(&a1) {
            r1
        } else {
            r2
        }
    }
}

/// Both square roots of κ+2, principal first.
pub fn sqrt_kappa_plus_two(kappa: Complex64) -> (Complex64, Complex64) {
    let r = (kappa + 2.0).sqrt();
    (r, -r)
}

/// Outcome of the rational-end membership test on a single trace value
/// (Prop-style: real value inside the open interval, or equal to a square
/// root of κ+2).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EndTest {
    /// Real within ε and inside (−2+ε, 2−ε).
    YesInterval,
    /// Within ε of ±√(κ+2).
    YesSqrt,
    No,
    /// Inside an ε band of the region boundary; never certified either way.
    Boundary,
}

impl EndTest {
    pub fn is_yes(self) -> bool {
        matches!(self, EndTest::YesInterval | EndTest::YesSqrt)
    }
}

/// Membership of a trace value in (−2,2) ∪ {±√(κ+2)} with ε honesty.
pub fn end_test_value(v: &TraceValue, kappa: Complex64, tol: f64) -> EndTest {
    if v.saturated {
        return EndTest::No;
    }
    let val = v.value;
    // Interval test first: real within ε and strictly inside.
    if val.im.abs() <= tol {
        let r = val.re.abs();
        if r <= 2.0 - tol {
            return EndTest::YesInterval;
        }
        if r < 2.0 + tol {
            return EndTest::Boundary;
        }
    }
    let (r1, r2) = sqrt_kappa_plus_two(kappa);
    let d = (val - r1).norm().min((val - r2).norm());
    if d <= tol {
        return EndTest::YesSqrt;
    }
    if d <= 10.0 * tol {
        return EndTest::Boundary;
    }
    EndTest::No
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64 as C;

    #[test]
    fn root_picks_large_modulus() {
        let r = root_ge_one(C::new(3.0, 0.0));
        assert!((r.re - (3.0 + 5f64.sqrt()) / 2.0).abs() < 1e-12);
        // z = r + 1/r reproduces the input
        let back = r + 1.0 / r;
        assert!(close_abs(back, C::new(3.0, 0.0), 1e-12));
    }

    #[test]
    fn root_tie_takes_upper_half() {
        let r = root_ge_one(C::new(1.0, 0.0)); // roots e^{±iπ/3}
        assert!(r.im > 0.0);
    }

    #[test]
    fn saturation_clamps_and_propagates() {
        let p = Params::default();
        let big = TraceValue::new(C::new(1e200, 0.0), &p);
        assert!(big.saturated);
        assert!((big.abs() - p.sat).abs() < 1e105);
        let out = TraceValue::combine(&big, &TraceValue::exact(C::new(0.0, 0.0)), &big, &p);
        assert!(out.saturated);
        assert!(out.abs().is_finite());
    }

    #[test]
    fn end_test_bands() {
        let p = Params::default();
        let k = C::new(16.0, 0.0); // √(κ+2) = √18
        let yes = TraceValue::exact(C::new(0.0, 0.0));
        assert_eq!(end_test_value(&yes, k, p.tol), EndTest::YesInterval);
        let b = TraceValue::exact(C::new(2.0, 0.0));
        assert_eq!(end_test_value(&b, k, p.tol), EndTest::Boundary);
        let s = TraceValue::exact(C::new(18f64.sqrt(), 0.0));
        assert_eq!(end_test_value(&s, k, p.tol), EndTest::YesSqrt);
        let no = TraceValue::exact(C::new(3.0, 0.0));
        assert_eq!(end_test_value(&no, k, p.tol), EndTest::No);
    }
}
