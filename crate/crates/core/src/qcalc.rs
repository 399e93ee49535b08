//! q-numbers, q-factorials, q-binomials, brace numbers and the q-exponential.
//!
//! Everything is evaluated in `f64` at a fixed numeric `q`. The symmetric point
//! `q = 1` is detected with a `1e-12` window and routed to the classical formulas.

use nalgebra::DMatrix;

use crate::error::{domain, Error, Result};

const ONE_WINDOW: f64 = 1e-12;
const SERIES_MAX_TERMS: usize = 10_000;

/// The parameter pair `(q, 2j)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QParams {
    q: f64,
    two_j: u32,
}

impl QParams {
    pub fn new(q: f64, two_j: u32) -> Result<Self> {
        if !(q > 0.0 && q <= 1.0) {
            return domain(format!("q must lie in (0, 1], got {q}"));
        }
        if two_j == 0 {
            return domain("2j must be a positive integer");
        }
        Ok(Self { q, two_j })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn two_j(&self) -> u32 {
        self.two_j
    }

    /// The spin `j` as a real number.
    pub fn j(&self) -> f64 {
        f64::from(self.two_j) / 2.0
    }

    /// Local dimension `2j + 1`.
    pub fn local_dim(&self) -> usize {
        self.two_j as usize + 1
    }

    pub fn is_symmetric(&self) -> bool {
        is_one(self.q)
    }

    /// `[x]_q` for real `x`.
    pub fn bracket(&self, x: f64) -> f64 {
        q_number_real(x, self.q)
    }

    /// `q^x`.
    pub fn pow(&self, x: f64) -> f64 {
        self.q.powf(x)
    }
}

pub(crate) fn is_one(q: f64) -> bool {
    (q - 1.0).abs() < ONE_WINDOW
}

fn check_base(q: f64) -> Result<()> {
    if q.is_finite() && q > 0.0 {
        Ok(())
    } else {
        domain(format!("base must be a positive finite real, got {q}"))
    }
}

/// `[x]_q = (q^x - q^{-x}) / (q - q^{-1})` for real `x`, written as a ratio of
/// hyperbolic sines so that `q` near 1 does not cancel.
pub fn q_number_real(x: f64, q: f64) -> f64 {
    if is_one(q) {
        return x;
    }
    let l = q.ln();
    (x * l).sinh() / l.sinh()
}

/// `[n]_q`. Accepts any `q > 0`; the value is invariant under `q -> 1/q`.
pub fn q_number(n: i64, q: f64) -> Result<f64> {
    if n < 0 {
        return domain(format!("q-number index must be nonnegative, got {n}"));
    }
    check_base(q)?;
    Ok(q_number_real(n as f64, q))
}

/// `[n]_q! = [1]_q [2]_q ... [n]_q`.
pub fn q_factorial(n: i64, q: f64) -> Result<f64> {
    if n < 0 {
        return domain(format!("q-factorial index must be nonnegative, got {n}"));
    }
    check_base(q)?;
    Ok((1..=n).map(|m| q_number_real(m as f64, q)).product())
}

/// Gaussian binomial `[n]_q! / ([k]_q! [n-k]_q!)`, via the running product
/// `prod_{m=1}^k [n-k+m]_q / [m]_q`.
pub fn q_binomial(n: i64, k: i64, q: f64) -> Result<f64> {
    if n < 0 || k < 0 || k > n {
        return domain(format!("q-binomial needs 0 <= k <= n, got n={n}, k={k}"));
    }
    check_base(q)?;
    Ok(q_binomial_unchecked(n as u32, k as u32, q))
}

pub(crate) fn q_binomial_unchecked(n: u32, k: u32, q: f64) -> f64 {
    let k = k.min(n - k);
    (1..=k)
        .map(|m| q_number_real(f64::from(n - k + m), q) / q_number_real(f64::from(m), q))
        .product()
}

/// Brace number `{n}_r = (1 - r^n) / (1 - r)`, with `{n}_1 = n`.
pub fn q_brace_number(n: i64, r: f64) -> Result<f64> {
    if n < 0 {
        return domain(format!("brace-number index must be nonnegative, got {n}"));
    }
    check_base(r)?;
    Ok(brace(n as f64, r))
}

fn brace(n: f64, r: f64) -> f64 {
    if is_one(r) {
        return n;
    }
    let l = r.ln();
    (n * l).exp_m1() / l.exp_m1()
}

/// `{n}_r! = prod_{m=1}^n {m}_r`.
pub fn q_brace_factorial(n: i64, r: f64) -> Result<f64> {
    if n < 0 {
        return domain(format!("brace-factorial index must be nonnegative, got {n}"));
    }
    check_base(r)?;
    Ok((1..=n).map(|m| brace(m as f64, r)).product())
}

fn strictly_triangular(x: &DMatrix<f64>) -> bool {
    let n = x.nrows();
    let lower = (0..n).all(|i| (i..n).all(|j| x[(i, j)] == 0.0));
    let upper = (0..n).all(|i| (0..=i).all(|j| x[(i, j)] == 0.0));
    lower || upper
}

fn max_abs(x: &DMatrix<f64>) -> f64 {
    x.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// q-exponential `exp_r(X) = sum_n X^n / {n}_r!`.
///
/// Strictly triangular input is nilpotent, so the sum runs until the power
/// vanishes. Any other input is truncated once a term drops below `1e-15` of
/// the running sum in max-norm.
pub fn q_matrix_exponential(x: &DMatrix<f64>, r: f64) -> Result<DMatrix<f64>> {
    if x.nrows() != x.ncols() {
        return Err(Error::Shape(format!(
            "q-exponential needs a square matrix, got {}x{}",
            x.nrows(),
            x.ncols()
        )));
    }
    check_base(r)?;
    let n = x.nrows();
    let nilpotent = strictly_triangular(x);
    let mut sum = DMatrix::<f64>::identity(n, n);
    let mut term = DMatrix::<f64>::identity(n, n);
    for k in 1..=SERIES_MAX_TERMS {
        term = (&term * x) / brace(k as f64, r);
        let t = max_abs(&term);
        if !t.is_finite() {
            return Err(Error::Convergence(format!(
                "q-exponential term {k} overflowed"
            )));
        }
        sum += &term;
        if t == 0.0 || (!nilpotent && t < 1e-15 * max_abs(&sum)) {
            return Ok(sum);
        }
    }
    Err(Error::Convergence(format!(
        "q-exponential did not settle within {SERIES_MAX_TERMS} terms"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn q_number_values() {
        assert_eq!(q_number(0, 0.5).unwrap(), 0.0);
        assert!(close(q_number(2, 0.5).unwrap(), 2.5, 1e-15));
        for q in [0.2, 0.5, 0.9, 1.0] {
            assert!(close(q_number(3, q).unwrap(), q * q + 1.0 + 1.0 / (q * q), 1e-14));
        }
        assert_eq!(q_number(7, 1.0).unwrap(), 7.0);
    }

    #[test]
    fn q_number_rejects_bad_input() {
        assert!(q_number(-1, 0.5).is_err());
        assert!(q_number(2, 0.0).is_err());
        assert!(q_number(2, f64::NAN).is_err());
        assert!(QParams::new(1.2, 1).is_err());
        assert!(QParams::new(0.5, 0).is_err());
        assert!(QParams::new(1.0, 3).is_ok());
    }

    #[test]
    fn q_number_near_one() {
        for n in 0..=12 {
            assert!((q_number(n, 1.0 - 1e-8).unwrap() - n as f64).abs() < 1e-6);
        }
    }

    #[test]
    fn factorial_and_binomial_values() {
        assert_eq!(q_factorial(0, 0.3).unwrap(), 1.0);
        for n in 0..6 {
            assert!(close(q_binomial(n, 0, 0.4).unwrap(), 1.0, 1e-15));
            assert!(close(q_binomial(n, n, 0.4).unwrap(), 1.0, 1e-15));
        }
        assert!(close(q_binomial(2, 1, 0.5).unwrap(), 2.5, 1e-15));
        assert!(q_binomial(2, 3, 0.5).is_err());
        // [4 choose 2]_q = [4][3]/([2][1]) against the factorial route
        let q = 0.35;
        let via_fact = q_factorial(4, q).unwrap()
            / (q_factorial(2, q).unwrap() * q_factorial(2, q).unwrap());
        assert!(close(q_binomial(4, 2, q).unwrap(), via_fact, 1e-14));
    }

    #[test]
    fn brace_values() {
        assert_eq!(q_brace_factorial(0, 0.7).unwrap(), 1.0);
        assert!(close(q_brace_factorial(2, 0.25).unwrap(), 1.25, 1e-15));
        assert_eq!(q_brace_number(5, 1.0).unwrap(), 5.0);
    }

    #[test]
    fn brace_factorial_bridge() {
        for q in [0.3, 0.7] {
            for n in 0..=8_i64 {
                let lhs = q_brace_factorial(n, q * q).unwrap();
                let rhs = q_factorial(n, q).unwrap() * q.powf((n * (n - 1)) as f64 / 2.0);
                assert!(close(lhs, rhs, 1e-13), "n={n} q={q}: {lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn exponential_trivial_cases() {
        let z = DMatrix::<f64>::zeros(3, 3);
        assert_eq!(q_matrix_exponential(&z, 0.4).unwrap(), DMatrix::identity(3, 3));
        let x = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        for r in [0.25, 1.0, 4.0] {
            let e = q_matrix_exponential(&x, r).unwrap();
            assert_eq!(e, DMatrix::identity(2, 2) + &x);
        }
        let bad = DMatrix::<f64>::zeros(2, 3);
        assert!(matches!(q_matrix_exponential(&bad, 0.5), Err(Error::Shape(_))));
    }

    #[test]
    fn exponential_of_diagonal_at_r_one() {
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-1.5, 0.0, 0.3, 2.0]));
        let e = q_matrix_exponential(&d, 1.0).unwrap();
        for i in 0..4 {
            assert!((e[(i, i)] - d[(i, i)].exp()).abs() < 1e-12 * d[(i, i)].exp());
        }
    }

    #[test]
    fn exponential_of_scalar_matches_scalar_series() {
        // exp_r(x) for a 1x1 matrix with |x(1-r)| < 1 is the product 1/prod(1 - (1-r) x r^k)
        let r = 0.5;
        let x = 0.8;
        let e = q_matrix_exponential(&DMatrix::from_element(1, 1, x), r).unwrap()[(0, 0)];
        let prod: f64 = (0..200).map(|k| 1.0 / (1.0 - (1.0 - r) * x * r.powi(k))).product();
        assert!(close(e, prod, 1e-13), "{e} vs {prod}");
    }

    #[test]
    fn exponential_diverging_series_is_reported() {
        // exp_r with r < 1 has finite radius 1/(1-r)
        let x = DMatrix::from_element(1, 1, 5.0);
        assert!(matches!(q_matrix_exponential(&x, 0.5), Err(Error::Convergence(_))));
    }

    proptest! {
        #[test]
        fn inversion_symmetry(n in 0_i64..=12, qi in 0usize..4) {
            let q = [0.3, 0.5, 0.7, 0.9][qi];
            let a = q_number(n, q).unwrap();
            let b = q_number(n, 1.0 / q).unwrap();
            prop_assert!(close(a, b, 1e-13));
        }

        #[test]
        fn brace_bracket_bridge(n in 0_i64..=20, q in 0.05_f64..1.0) {
            let lhs = q_brace_number(n, q * q).unwrap();
            let rhs = q_number(n, q).unwrap() * q.powf(n as f64 - 1.0);
            prop_assert!(close(lhs, rhs, 1e-12));
        }

        #[test]
        fn q_numbers_positive(n in 1_i64..=40, q in 0.01_f64..=1.0) {
            prop_assert!(q_number(n, q).unwrap() > 0.0);
        }

        #[test]
        fn binomial_pascal_rule(n in 1_i64..=10, k in 1_i64..=10, q in 0.1_f64..1.0) {
            prop_assume!(k < n);
            // [n,k] = q^{-k}[n-1,k-1]... symmetric form: [n,k] = q^{k} [n-1,k] + q^{-(n-k)} [n-1,k-1]
            let lhs = q_binomial(n, k, q).unwrap();
            let rhs = q.powi(k as i32) * q_binomial(n - 1, k, q).unwrap()
                + q.powi(-((n - k) as i32)) * q_binomial(n - 1, k - 1, q).unwrap();
            prop_assert!(close(lhs, rhs, 1e-12));
        }
    }
}
