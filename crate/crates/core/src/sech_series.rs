//! Exact generation of the asymptotic series `u = Σ ε^{2n} u_n`, `c = Σ ε^{2n} c_n`.
//!
//! Every coefficient is a polynomial in `S = sech²(γx)` with no constant term,
//! so it decays at ±∞ and is even in `x`. The basis is closed under `d²/dx²`:
//!
//! ```text
//! d²/dx² S^m = γ² [ 4m² S^m − (4m² + 2m) S^{m+1} ]
//! ```
//!
//! which follows from `S' = −2γ S tanh(γx)` and `tanh² = 1 − S`.
//!
//! At order `ε^{2n}` the equation is
//!
//! ```text
//! u_{n−1}'''' + u_n'' + 3 Σ_{k=0..n} u_k u_{n−k} − Σ_{k=0..n} c_k u_{n−k} = 0
//! ```
//!
//! The linear operator `L = d²/dx² + 6u_0 − c_0` is lower bidiagonal in the
//! `S^m` basis with a zero diagonal at `m = 1`, so the `S¹` row fixes `c_n`
//! and the remaining rows are back-substituted from the top degree down.

use std::collections::BTreeMap;
use std::fmt;

use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::error::{Error, Result};

/// Default ceiling on `n_max` accepted by [`build_series`].
pub const DEFAULT_ORDER_LIMIT: usize = 120;

/// A polynomial `Σ a_m S^m` (m ≥ 1) in `S = sech²(γx)` with exact rational coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SechPolynomial {
    coeffs: BTreeMap<u32, BigRational>,
    gamma: BigRational,
}

impl SechPolynomial {
    pub fn zero(gamma: BigRational) -> Self {
        SechPolynomial {
            coeffs: BTreeMap::new(),
            gamma,
        }
    }

    /// `a · S^m`. Panics if `m == 0`: a constant term would not decay.
    pub fn monomial(m: u32, a: BigRational, gamma: BigRational) -> Self {
        assert!(m >= 1, "sech polynomials have no S^0 term");
        let mut p = Self::zero(gamma);
        p.add_term(m, a);
        p
    }

    /// Build from `(m, a_m)` pairs; repeated powers are summed.
    pub fn from_terms<I>(gamma: BigRational, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (u32, BigRational)>,
    {
        let mut p = Self::zero(gamma);
        for (m, a) in terms {
            if m == 0 {
                return Err(Error::InvalidParameter(
                    "sech polynomial term with power 0".into(),
                ));
            }
            p.add_term(m, a);
        }
        Ok(p)
    }

    pub fn gamma(&self) -> &BigRational {
        &self.gamma
    }

    /// Coefficient of `S^m` (zero when absent).
    pub fn coeff(&self, m: u32) -> BigRational {
        self.coeffs
            .get(&m)
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    /// Nonzero terms in increasing power.
    pub fn terms(&self) -> impl Iterator<Item = (u32, &BigRational)> + '_ {
        self.coeffs.iter().map(|(m, a)| (*m, a))
    }

    /// Highest power present, 0 for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.coeffs.keys().next_back().copied().unwrap_or(0)
    }

    pub fn leading_coefficient(&self) -> BigRational {
        self.coeffs
            .values()
            .next_back()
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Value as a real function at real `x`, in double precision. Intended for
    /// low orders and tests; [`crate::complex_eval`] handles late orders.
    pub fn eval_f64(&self, x: f64) -> f64 {
        let g = self.gamma.to_f64().unwrap_or(f64::NAN);
        let s = 1.0 / (g * x).cosh().powi(2);
        self.coeffs
            .iter()
            .map(|(&m, a)| a.to_f64().unwrap_or(f64::NAN) * s.powi(m as i32))
            .sum()
    }

    fn add_term(&mut self, m: u32, a: BigRational) {
        if a.is_zero() {
            return;
        }
        let entry = self.coeffs.entry(m).or_insert_with(BigRational::zero);
        *entry += a;
        if entry.is_zero() {
            self.coeffs.remove(&m);
        }
    }

    fn check_gamma(&self, other: &Self) {
        assert_eq!(
            self.gamma, other.gamma,
            "sech polynomials with different widths"
        );
    }

    pub fn add(&self, other: &Self) -> Self {
        self.check_gamma(other);
        let mut out = self.clone();
        for (m, a) in other.terms() {
            out.add_term(m, a.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&-BigRational::one()))
    }

    pub fn scale(&self, k: &BigRational) -> Self {
        let mut out = Self::zero(self.gamma.clone());
        if k.is_zero() {
            return out;
        }
        for (m, a) in self.terms() {
            out.coeffs.insert(m, a * k);
        }
        out
    }

    /// Product in the `S` basis (powers add).
    pub fn mul(&self, other: &Self) -> Self {
        self.check_gamma(other);
        let mut out = Self::zero(self.gamma.clone());
        for (m, a) in self.terms() {
            for (k, b) in other.terms() {
                out.add_term(m + k, a * b);
            }
        }
        out
    }

    /// Exact `d²/dx²`; raises the degree by one.
    pub fn second_derivative(&self) -> Self {
        let g2 = &self.gamma * &self.gamma;
        let mut out = Self::zero(self.gamma.clone());
        for (m, a) in self.terms() {
            let m_big = BigInt::from(m);
            let four_m2 = BigInt::from(4) * &m_big * &m_big;
            let same = BigRational::from_integer(four_m2.clone());
            let up = BigRational::from_integer(four_m2 + BigInt::from(2) * &m_big);
            out.add_term(m, &g2 * a * same);
            out.add_term(m + 1, -(&g2 * a * up));
        }
        out
    }

    /// Exact `d⁴/dx⁴`; raises the degree by two.
    pub fn fourth_derivative(&self) -> Self {
        self.second_derivative().second_derivative()
    }
}

impl fmt::Display for SechPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (i, (m, a)) in self.terms().enumerate() {
            let sign = if a.is_negative() { "-" } else { "+" };
            if i == 0 {
                if a.is_negative() {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            write!(f, "{}", a.abs())?;
            match m {
                1 => write!(f, "·S")?,
                _ => write!(f, "·S^{m}")?,
            }
        }
        Ok(())
    }
}

/// The exact coefficients `u_0..u_{n_max}` and `c_0..c_{n_max}`.
///
/// Immutable once built; share freely between threads.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeriesTable {
    gamma: BigRational,
    u: Vec<SechPolynomial>,
    c: Vec<BigRational>,
}

impl SeriesTable {
    fn empty(gamma: BigRational) -> Self {
        SeriesTable {
            gamma,
            u: Vec::new(),
            c: Vec::new(),
        }
    }

    pub fn gamma(&self) -> &BigRational {
        &self.gamma
    }

    pub fn gamma_f64(&self) -> f64 {
        self.gamma.to_f64().unwrap_or(f64::NAN)
    }

    /// Number of stored orders (`n_max + 1`).
    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    /// Highest stored order. Panics on an empty table.
    pub fn n_max(&self) -> usize {
        self.u.len() - 1
    }

    pub fn u(&self, n: usize) -> &SechPolynomial {
        &self.u[n]
    }

    pub fn c(&self, n: usize) -> &BigRational {
        &self.c[n]
    }

    pub fn coefficients(&self) -> &[SechPolynomial] {
        &self.u
    }

    pub fn eigenvalue_corrections(&self) -> &[BigRational] {
        &self.c
    }

    /// Full left-hand side of the order-`ε^{2n}` equation. Identically zero
    /// for a correctly built table.
    pub fn order_residual(&self, n: usize) -> SechPolynomial {
        let g = self.gamma.clone();
        let mut lhs = self.u[n].second_derivative();
        if n >= 1 {
            lhs = lhs.add(&self.u[n - 1].fourth_derivative());
        }
        let three = BigRational::from_integer(3.into());
        for k in 0..=n {
            lhs = lhs.add(&self.u[k].mul(&self.u[n - k]).scale(&three));
            lhs = lhs.sub(&self.u[n - k].scale(&self.c[k]));
        }
        debug_assert_eq!(lhs.gamma, g);
        lhs
    }

    /// JSON document with every rational written as a `"p/q"` string.
    pub fn to_json(&self) -> Value {
        let u: Vec<Value> = self
            .u
            .iter()
            .map(|p| {
                Value::Array(
                    p.terms()
                        .map(|(m, a)| json!([m.to_string(), format_rational(a)]))
                        .collect(),
                )
            })
            .collect();
        json!({
            "gamma": format_rational(&self.gamma),
            "c": self.c.iter().map(format_rational).collect::<Vec<_>>(),
            "u": u,
        })
    }

    /// Inverse of [`SeriesTable::to_json`]. Structural invariants are re-checked.
    pub fn from_json(doc: &Value) -> Result<Self> {
        let bad = |what: &str| Error::Format(what.to_string());
        let gamma = parse_rational(doc["gamma"].as_str().ok_or_else(|| bad("gamma"))?)?;
        let c = doc["c"]
            .as_array()
            .ok_or_else(|| bad("c"))?
            .iter()
            .map(|v| parse_rational(v.as_str().ok_or_else(|| bad("c entry"))?))
            .collect::<Result<Vec<_>>>()?;
        let mut u = Vec::new();
        for poly in doc["u"].as_array().ok_or_else(|| bad("u"))? {
            let mut terms = Vec::new();
            for term in poly.as_array().ok_or_else(|| bad("u entry"))? {
                let pair = term
                    .as_array()
                    .filter(|p| p.len() == 2)
                    .ok_or_else(|| bad("term"))?;
                let m: u32 = pair[0]
                    .as_str()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| bad("power"))?;
                let a = parse_rational(pair[1].as_str().ok_or_else(|| bad("coefficient"))?)?;
                terms.push((m, a));
            }
            u.push(SechPolynomial::from_terms(gamma.clone(), terms)?);
        }
        if u.len() != c.len() || u.is_empty() {
            return Err(bad("u and c must be nonempty and of equal length"));
        }
        for (n, p) in u.iter().enumerate() {
            if p.degree() as usize != n + 1 {
                return Err(bad("deg(u_n) must equal n + 1"));
            }
        }
        Ok(SeriesTable { gamma, u, c })
    }
}

/// `"p/q"` with `q ≥ 1`, always including the denominator.
pub fn format_rational(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Accepts `"p/q"` or a bare integer `"p"`.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let bad = || Error::Format(format!("not a rational: {s:?}"));
    let (p, q) = match s.split_once('/') {
        Some((p, q)) => (p.trim(), q.trim()),
        None => (s.trim(), "1"),
    };
    let p: BigInt = p.parse().map_err(|_| bad())?;
    let q: BigInt = q.parse().map_err(|_| bad())?;
    if q.is_zero() {
        return Err(bad());
    }
    Ok(BigRational::new(p, q))
}

/// `γ` from an `f64` that is an exact small rational in practice (1, 2, 0.5 ...).
pub fn gamma_from_f64(g: f64) -> Result<BigRational> {
    if !(g.is_finite() && g > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "gamma must be positive, got {g}"
        )));
    }
    BigRational::from_float(g).ok_or_else(|| Error::InvalidParameter(format!("gamma {g}")))
}

/// Coefficient of `S^{m+1}` in `L S^m` divided by `γ²`.
fn lower_entry(m: u32) -> BigInt {
    let m = BigInt::from(m);
    BigInt::from(12) - BigInt::from(4) * &m * &m - BigInt::from(2) * &m
}

/// Coefficient of `S^m` in `L S^m` divided by `γ²`.
fn diagonal_entry(m: u32) -> BigInt {
    let m = BigInt::from(m);
    BigInt::from(4) * &m * &m - BigInt::from(4)
}

/// Solve the order-`ε^{2n}` problem given `u_0..u_{n−1}`, `c_0..c_{n−1}` in `table`.
pub fn solve_order(table: &SeriesTable, n: usize) -> Result<(SechPolynomial, BigRational)> {
    let gamma = table.gamma.clone();
    let g2 = &gamma * &gamma;
    if n == 0 {
        let two = BigRational::from_integer(2.into());
        let four = BigRational::from_integer(4.into());
        return Ok((SechPolynomial::monomial(1, &two * &g2, gamma), four * g2));
    }
    if table.len() < n {
        return Err(Error::Recurrence {
            order: n,
            reason: format!("table holds only {} lower orders", table.len()),
        });
    }

    // Everything except L u_n and the unknown c_n u_0, moved to the right.
    let three = BigRational::from_integer(3.into());
    let mut rhs = table.u[n - 1]
        .fourth_derivative()
        .scale(&-BigRational::one());
    for k in 1..n {
        rhs = rhs.sub(&table.u[k].mul(&table.u[n - k]).scale(&three));
        rhs = rhs.add(&table.u[n - k].scale(&table.c[k]));
    }

    let top = n as u32 + 2;
    if rhs.degree() > top {
        return Err(Error::Recurrence {
            order: n,
            reason: format!("right-hand side has degree {} > {top}", rhs.degree()),
        });
    }

    // S¹ row: 0 = rhs_1 + c_n · a_{0,1}.
    let a01 = table.u[0].coeff(1);
    if a01.is_zero() || !diagonal_entry(1).is_zero() {
        return Err(Error::Recurrence {
            order: n,
            reason: "degenerate solvability row".into(),
        });
    }
    let c_n = -rhs.coeff(1) / a01;

    // Rows S^{n+2} .. S^2, from the top down.
    let mut a: BTreeMap<u32, BigRational> = BTreeMap::new();
    let mut above = BigRational::zero();
    for j in (2..=top).rev() {
        let diag = BigRational::from_integer(diagonal_entry(j)) * &g2;
        let lower = BigRational::from_integer(lower_entry(j - 1)) * &g2;
        if lower.is_zero() {
            return Err(Error::Recurrence {
                order: n,
                reason: format!("vanishing subdiagonal at m = {}", j - 1),
            });
        }
        let a_j = if j == top {
            BigRational::zero()
        } else {
            above.clone()
        };
        let a_below = (rhs.coeff(j) - diag * a_j) / lower;
        a.insert(j - 1, a_below.clone());
        above = a_below;
    }
    let u_n = SechPolynomial::from_terms(gamma, a)?;
    if u_n.degree() as usize != n + 1 {
        return Err(Error::Recurrence {
            order: n,
            reason: format!("deg(u_n) = {} instead of {}", u_n.degree(), n + 1),
        });
    }
    Ok((u_n, c_n))
}

/// Build `u_0..u_{n_max}` and `c_0..c_{n_max}` with the default order limit.
pub fn build_series(n_max: usize, gamma: BigRational) -> Result<SeriesTable> {
    build_series_with_limit(n_max, gamma, DEFAULT_ORDER_LIMIT)
}

pub fn build_series_with_limit(
    n_max: usize,
    gamma: BigRational,
    limit: usize,
) -> Result<SeriesTable> {
    if n_max > limit {
        return Err(Error::ResourceLimit {
            requested: n_max,
            limit,
        });
    }
    if !gamma.is_positive() {
        return Err(Error::InvalidParameter("gamma must be positive".into()));
    }
    let mut table = SeriesTable::empty(gamma);
    for n in 0..=n_max {
        let (u_n, c_n) = solve_order(&table, n)?;
        table.u.push(u_n);
        table.c.push(c_n);
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    fn poly(terms: &[(u32, i64)]) -> SechPolynomial {
        SechPolynomial::from_terms(q(1), terms.iter().map(|&(m, a)| (m, q(a)))).unwrap()
    }

    #[test]
    fn second_derivative_examples() {
        assert_eq!(
            poly(&[(1, 2)]).second_derivative(),
            poly(&[(1, 8), (2, -12)])
        );
        assert_eq!(
            poly(&[(2, 1)]).second_derivative(),
            poly(&[(2, 16), (3, -20)])
        );
        assert!(SechPolynomial::zero(q(1)).second_derivative().is_zero());
    }

    #[test]
    fn fourth_derivative_examples() {
        assert_eq!(
            poly(&[(1, 2)]).fourth_derivative(),
            poly(&[(1, 32), (2, -240), (3, 240)])
        );
        assert_eq!(
            poly(&[(1, 1)]).fourth_derivative(),
            poly(&[(1, 16), (2, -120), (3, 120)])
        );
        assert!(SechPolynomial::zero(q(1)).fourth_derivative().is_zero());
    }

    #[test]
    fn first_orders_at_unit_width() {
        let t = build_series(2, q(1)).unwrap();
        assert_eq!(t.u(0), &poly(&[(1, 2)]));
        assert_eq!(t.c(0), &q(4));
        assert_eq!(t.u(1), &poly(&[(1, -20), (2, 30)]));
        assert_eq!(t.c(1), &q(16));
        // Independent run of the same recurrence with Python fractions.
        assert_eq!(t.u(2), &poly(&[(1, 60), (2, -930), (3, 930)]));
        assert_eq!(t.c(2), &q(0));
    }

    #[test]
    fn second_order_matches_closed_form() {
        // u_1 = −10γ² u_0 + (15/2) u_0² for any γ.
        for g in [q(2), BigRational::new(1.into(), 3.into())] {
            let t = build_series(1, g.clone()).unwrap();
            let u0 = t.u(0).clone();
            let expected = u0
                .scale(&(-q(10) * &g * &g))
                .add(&u0.mul(&u0).scale(&BigRational::new(15.into(), 2.into())));
            assert_eq!(t.u(1), &expected);
            assert_eq!(t.c(1), &(t.c(0) * t.c(0)));
        }
    }

    #[test]
    fn width_two_leading_order() {
        let t = build_series(0, q(2)).unwrap();
        assert_eq!(t.u(0), &SechPolynomial::monomial(1, q(8), q(2)));
        assert_eq!(t.c(0), &q(16));
    }

    #[test]
    fn residuals_vanish_and_degrees_grow() {
        let t = build_series(12, q(1)).unwrap();
        for n in 0..=12 {
            assert!(t.order_residual(n).is_zero(), "residual at n = {n}");
            assert_eq!(t.u(n).degree() as usize, n + 1);
            assert!(!t.u(n).leading_coefficient().is_zero());
        }
    }

    #[test]
    fn order_limit_is_enforced() {
        assert!(matches!(
            build_series_with_limit(10, q(1), 5),
            Err(Error::ResourceLimit {
                requested: 10,
                limit: 5
            })
        ));
    }

    #[test]
    fn solve_order_needs_lower_orders() {
        let t = build_series(1, q(1)).unwrap();
        assert!(matches!(solve_order(&t, 5), Err(Error::Recurrence { .. })));
    }

    #[test]
    fn json_round_trip() {
        let t = build_series(6, BigRational::new(3.into(), 2.into())).unwrap();
        let doc = t.to_json();
        assert_eq!(doc["gamma"], "3/2");
        assert_eq!(SeriesTable::from_json(&doc).unwrap(), t);
    }

    #[test]
    fn json_rejects_bad_degree() {
        let doc = json!({"gamma": "1/1", "c": ["4/1"], "u": [[["2", "2/1"]]]});
        assert!(SeriesTable::from_json(&doc).is_err());
    }

    #[test]
    fn rational_parsing() {
        assert_eq!(
            parse_rational("-6/4").unwrap(),
            BigRational::new((-3).into(), 2.into())
        );
        assert_eq!(parse_rational("17").unwrap(), q(17));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
    }

    #[test]
    fn display_is_readable() {
        assert_eq!(poly(&[(1, -20), (2, 30)]).to_string(), "-20·S + 30·S^2");
    }
}
