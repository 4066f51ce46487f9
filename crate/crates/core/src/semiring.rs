//! Complete semirings with a Kleene star.
//!
//! A semiring is chosen at instantiation time: charts, matrices and grammar
//! views are generic over `S: Semiring`, so the dense inner loops are
//! monomorphized and never branch on the instance.
//!
//! | instance  | carrier        | ⊕       | ⊗   | 𝟎   | 𝟏 | a*                 |
//! |-----------|----------------|---------|-----|-----|---|--------------------|
//! | [`Prob`]    | [0, ∞)         | +       | ×   | 0   | 1 | 1/(1−a), a < 1     |
//! | [`LogProb`] | [−∞, ∞)        | logaddexp | + | −∞  | 0 | −ln(1−eᵃ), a < 0   |
//! | [`Viterbi`] | [0, 1]         | max     | ×   | 0   | 1 | 1, a ≤ 1           |
//! | [`Boolean`] | {false, true}  | ∨       | ∧   | false | true | true          |

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::SquareMatrix;

/// Pivots this close to the divergence boundary are rejected by
/// [`Semiring::pivot_star`].
pub const PIVOT_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SemiringKind {
    Prob,
    Log,
    Viterbi,
    Boolean,
}

impl SemiringKind {
    pub fn name(self) -> &'static str {
        match self {
            SemiringKind::Prob => "prob",
            SemiringKind::Log => "log",
            SemiringKind::Viterbi => "viterbi",
            SemiringKind::Boolean => "boolean",
        }
    }
}

impl fmt::Display for SemiringKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SemiringKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "prob" | "probability" => Ok(SemiringKind::Prob),
            "log" => Ok(SemiringKind::Log),
            "viterbi" => Ok(SemiringKind::Viterbi),
            "boolean" | "bool" => Ok(SemiringKind::Boolean),
            other => Err(format!("unknown semiring {other:?}")),
        }
    }
}

/// A complete semiring ⟨A, ⊕, ⊗, 𝟎, 𝟏⟩ with Kleene star.
pub trait Semiring: Copy + fmt::Debug + PartialEq + Send + Sync + 'static {
    const KIND: SemiringKind;

    fn zero() -> Self;
    fn one() -> Self;
    fn add(self, rhs: Self) -> Self;
    fn mul(self, rhs: Self) -> Self;

    /// `⊕_{i≥0} aⁱ`, or `NonConvergent` outside the instance's domain.
    fn star(self) -> Result<Self>;

    /// Star of a closure pivot. Floating instances reject values within
    /// [`PIVOT_TOLERANCE`] of the divergence boundary.
    fn pivot_star(self) -> Result<Self> {
        self.star()
    }

    /// Converts a rule weight written in the probability domain.
    fn from_prob(p: f64) -> Self;

    /// Maps back to a real number for cross-instance comparison.
    /// Boolean maps to 0/1, log values are exponentiated.
    fn to_prob(self) -> f64;

    fn is_zero(self) -> bool {
        self == Self::zero()
    }

    /// `a ⊘ b` for instances with division. A zero divisor yields 𝟎.
    fn div(self, _rhs: Self) -> Option<Self> {
        None
    }

    /// Equality up to a relative tolerance (log values: absolute tolerance
    /// in log space, which is the same thing to first order).
    fn approx_eq(self, other: Self, rel: f64) -> bool;

    fn render(self, precision: usize) -> String;

    /// `(I − M)⁻¹` when the instance supports a real linear solve.
    fn closure_by_inversion(_m: &SquareMatrix<Self>) -> Option<Result<SquareMatrix<Self>>> {
        None
    }
}

/// `|a − b| ≤ rel · max(|a|, |b|)`, with exact equality always accepted.
pub fn rel_close(a: f64, b: f64, rel: f64) -> bool {
    a == b || (a - b).abs() <= rel * a.abs().max(b.abs())
}

/// Relative difference used when reporting disagreements.
pub fn rel_diff(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn fixed(x: f64, precision: usize) -> String {
    if x == f64::NEG_INFINITY {
        return "-inf".to_string();
    }
    let s = format!("{x:.precision$}");
    match s.strip_prefix('-') {
        Some(rest) if rest.bytes().all(|b| b == b'0' || b == b'.') => rest.to_string(),
        _ => s,
    }
}

fn non_convergent<S: Semiring>(value: impl fmt::Display) -> Error {
    Error::NonConvergent {
        semiring: S::KIND.name(),
        value: value.to_string(),
    }
}

/// Real numbers under (+, ×).
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Default)]
pub struct Prob(pub f64);

impl Semiring for Prob {
    const KIND: SemiringKind = SemiringKind::Prob;

    #[inline(always)]
    fn zero() -> Self {
        Prob(0.0)
    }
    #[inline(always)]
    fn one() -> Self {
        Prob(1.0)
    }
    #[inline(always)]
    fn add(self, rhs: Self) -> Self {
        Prob(self.0 + rhs.0)
    }
    #[inline(always)]
    fn mul(self, rhs: Self) -> Self {
        Prob(self.0 * rhs.0)
    }

    fn star(self) -> Result<Self> {
        if self.0 >= 1.0 || !self.0.is_finite() {
            return Err(non_convergent::<Self>(self.0));
        }
        Ok(Prob(1.0 / (1.0 - self.0)))
    }

    fn pivot_star(self) -> Result<Self> {
        if self.0 >= 1.0 - PIVOT_TOLERANCE {
            return Err(non_convergent::<Self>(self.0));
        }
        self.star()
    }

    fn from_prob(p: f64) -> Self {
        Prob(p)
    }
    fn to_prob(self) -> f64 {
        self.0
    }

    fn div(self, rhs: Self) -> Option<Self> {
        Some(if rhs.0 == 0.0 {
            Prob(0.0)
        } else {
            Prob(self.0 / rhs.0)
        })
    }

    fn approx_eq(self, other: Self, rel: f64) -> bool {
        rel_close(self.0, other.0, rel)
    }

    fn render(self, precision: usize) -> String {
        fixed(self.0, precision)
    }

    fn closure_by_inversion(m: &SquareMatrix<Self>) -> Option<Result<SquareMatrix<Self>>> {
        Some(crate::linalg::invert_closure(m))
    }
}

/// Natural-log probabilities under (logaddexp, +). `−∞` is 𝟎.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct LogProb(pub f64);

impl LogProb {
    /// Numerically stable `ln(eᵃ + eᵇ)`.
    #[inline]
    pub fn log_add_exp(a: f64, b: f64) -> f64 {
        let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
        if lo == f64::NEG_INFINITY {
            return hi;
        }
        hi + (lo - hi).exp().ln_1p()
    }
}

impl Semiring for LogProb {
    const KIND: SemiringKind = SemiringKind::Log;

    #[inline(always)]
    fn zero() -> Self {
        LogProb(f64::NEG_INFINITY)
    }
    #[inline(always)]
    fn one() -> Self {
        LogProb(0.0)
    }
    #[inline(always)]
    fn add(self, rhs: Self) -> Self {
        LogProb(Self::log_add_exp(self.0, rhs.0))
    }
    #[inline(always)]
    fn mul(self, rhs: Self) -> Self {
        LogProb(self.0 + rhs.0)
    }

    fn star(self) -> Result<Self> {
        let a = self.0;
        if a >= 0.0 || a.is_nan() {
            return Err(non_convergent::<Self>(a));
        }
        // −ln(1 − eᵃ); expm1 keeps precision near 0, ln_1p far below it.
        let value = if a > -std::f64::consts::LN_2 {
            -(-a.exp_m1()).ln()
        } else {
            -(-a.exp()).ln_1p()
        };
        Ok(LogProb(value))
    }

    fn pivot_star(self) -> Result<Self> {
        if self.0 >= (-PIVOT_TOLERANCE).ln_1p() {
            return Err(non_convergent::<Self>(self.0));
        }
        self.star()
    }

    fn from_prob(p: f64) -> Self {
        LogProb(p.ln())
    }
    fn to_prob(self) -> f64 {
        self.0.exp()
    }

    fn div(self, rhs: Self) -> Option<Self> {
        Some(if rhs.0 == f64::NEG_INFINITY {
            LogProb::zero()
        } else {
            LogProb(self.0 - rhs.0)
        })
    }

    fn approx_eq(self, other: Self, rel: f64) -> bool {
        self.0 == other.0 || (self.0 - other.0).abs() <= rel
    }

    fn render(self, precision: usize) -> String {
        fixed(self.0, precision)
    }
}

/// Max-times over [0, 1]: the weight of the best single derivation.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Default)]
pub struct Viterbi(pub f64);

impl Semiring for Viterbi {
    const KIND: SemiringKind = SemiringKind::Viterbi;

    #[inline(always)]
    fn zero() -> Self {
        Viterbi(0.0)
    }
    #[inline(always)]
    fn one() -> Self {
        Viterbi(1.0)
    }
    #[inline(always)]
    fn add(self, rhs: Self) -> Self {
        Viterbi(self.0.max(rhs.0))
    }
    #[inline(always)]
    fn mul(self, rhs: Self) -> Self {
        Viterbi(self.0 * rhs.0)
    }

    /// sup{aⁿ} = a⁰ = 1 whenever a ≤ 1.
    fn star(self) -> Result<Self> {
        if self.0 > 1.0 || self.0.is_nan() {
            return Err(non_convergent::<Self>(self.0));
        }
        Ok(Viterbi(1.0))
    }

    fn from_prob(p: f64) -> Self {
        Viterbi(p)
    }
    fn to_prob(self) -> f64 {
        self.0
    }

    fn approx_eq(self, other: Self, rel: f64) -> bool {
        rel_close(self.0, other.0, rel)
    }

    fn render(self, precision: usize) -> String {
        fixed(self.0, precision)
    }
}

/// Truth values under (∨, ∧): recognition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct Boolean(pub bool);

impl Semiring for Boolean {
    const KIND: SemiringKind = SemiringKind::Boolean;

    #[inline(always)]
    fn zero() -> Self {
        Boolean(false)
    }
    #[inline(always)]
    fn one() -> Self {
        Boolean(true)
    }
    #[inline(always)]
    fn add(self, rhs: Self) -> Self {
        Boolean(self.0 || rhs.0)
    }
    #[inline(always)]
    fn mul(self, rhs: Self) -> Self {
        Boolean(self.0 && rhs.0)
    }

    fn star(self) -> Result<Self> {
        Ok(Boolean(true))
    }

    fn from_prob(p: f64) -> Self {
        Boolean(p > 0.0)
    }
    fn to_prob(self) -> f64 {
        if self.0 {
            1.0
        } else {
            0.0
        }
    }

    fn approx_eq(self, other: Self, _rel: f64) -> bool {
        self == other
    }

    fn render(self, _precision: usize) -> String {
        self.0.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prob_add_mul() {
        assert_eq!(Prob(0.3).add(Prob(0.4)), Prob(0.3 + 0.4));
        assert_eq!(Prob(0.25).add(Prob::zero()), Prob(0.25));
        assert_eq!(Prob(0.5).mul(Prob(0.5)), Prob(0.25));
        assert_eq!(Prob(0.7).mul(Prob::zero()), Prob::zero());
    }

    #[test]
    fn log_add_matches_high_precision_reference() {
        let sum = LogProb(0.3f64.ln()).add(LogProb(0.4f64.ln()));
        assert!(rel_close(sum.0, 0.7f64.ln(), 1e-12), "{}", sum.0);
        // far-apart magnitudes do not underflow
        let big = LogProb(-1000.0).add(LogProb(-1001.0));
        let expect = -1000.0 + (-1.0f64).exp().ln_1p();
        assert!(rel_close(big.0, expect, 1e-14));
        assert_eq!(LogProb::zero().add(LogProb(-2.0)), LogProb(-2.0));
    }

    #[test]
    fn log_mul_is_addition() {
        let p = LogProb(0.5f64.ln()).mul(LogProb(0.5f64.ln()));
        assert!(rel_close(p.0, 0.25f64.ln(), 1e-15));
        assert_eq!(LogProb(-3.0).mul(LogProb::zero()), LogProb::zero());
    }

    #[test]
    fn boolean_ops() {
        assert_eq!(Boolean(true).add(Boolean(false)), Boolean(true));
        assert_eq!(Boolean(true).mul(Boolean(false)), Boolean(false));
        assert_eq!(Boolean(true).star().unwrap(), Boolean(true));
        assert_eq!(Boolean(false).star().unwrap(), Boolean(true));
    }

    #[test]
    fn prob_star_matches_geometric_partial_sums() {
        // partial sums to convergence
        let a: f64 = 0.4;
        let mut sum = 0.0;
        let mut term = 1.0;
        while term > 1e-18 {
            sum += term;
            term *= a;
        }
        let s = Prob(a).star().unwrap();
        assert!(rel_close(s.0, sum, 1e-14));
        assert!(rel_close(s.0, 1.6666667, 1e-7));
        assert_eq!(Prob(0.0).star().unwrap(), Prob(1.0));
    }

    #[test]
    fn divergent_stars_are_errors() {
        assert!(matches!(Prob(1.0).star(), Err(Error::NonConvergent { .. })));
        assert!(matches!(Prob(1.5).star(), Err(Error::NonConvergent { .. })));
        assert!(LogProb(0.0).star().is_err());
        assert!(Viterbi(1.2).star().is_err());
        assert_eq!(Viterbi(1.0).star().unwrap(), Viterbi(1.0));
        assert_eq!(Viterbi(0.3).star().unwrap(), Viterbi(1.0));
    }

    #[test]
    fn pivot_tolerance() {
        assert!(Prob(1.0 - 1e-13).star().is_ok());
        assert!(Prob(1.0 - 1e-13).pivot_star().is_err());
        assert!(Prob(1.0 - 1e-9).pivot_star().is_ok());
        assert!(LogProb((1.0f64 - 1e-13).ln()).pivot_star().is_err());
    }

    #[test]
    fn log_star_agrees_with_prob_star() {
        for &a in &[1e-30, 1e-8, 0.1, 0.4, 0.49, 0.51, 0.9, 0.999999] {
            let lp = LogProb(f64::ln(a)).star().unwrap().0.exp();
            let p = Prob(a).star().unwrap().0;
            assert!(rel_close(lp, p, 1e-10), "a={a}: {lp} vs {p}");
        }
    }

    #[test]
    fn render_formats() {
        assert_eq!(Prob(0.4).render(3), "0.400");
        assert_eq!(LogProb(-0.0).render(2), "0.00");
        assert_eq!(LogProb(-1e-17).render(4), "0.0000");
        assert_eq!(LogProb::zero().render(4), "-inf");
        assert_eq!(Boolean(false).render(9), "false");
    }

    #[test]
    fn kind_parses() {
        assert_eq!("log".parse::<SemiringKind>().unwrap(), SemiringKind::Log);
        assert!("tropical".parse::<SemiringKind>().is_err());
    }
}
