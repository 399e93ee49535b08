//! Self-duality functions and their verification as matrix identities.

use std::collections::HashMap;

use nalgebra::DMatrix;

use crate::algebra::{exponential_symmetry, ground_state, ExpKind, OperatorMatrix};
use crate::error::{domain, Error, Result};
use crate::generator::{generator_matrix, BoundaryKind, Configuration};
use crate::lattice::Lattice;
use crate::linalg::max_abs;
use crate::qcalc::{q_binomial_unchecked, QParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DualityKind {
    /// `prod binom(eta_i, xi_i)/binom(2j, xi_i) q^{(eta_i - xi_i)(2 sum_{k<i} xi_k + xi_i) + 4j i xi_i}`.
    D,
    /// `prod binom(eta_i, xi_i)/binom(2j, xi_i) q^{(eta_i - xi_i)(2 sum_{k<i} eta_k + eta_i) + 4j i xi_i}`.
    Dprime,
    /// Diagonal function, the inverse of the reversible product measure up to normalization.
    DiagonalAlpha(f64),
}

impl DualityKind {
    pub fn name(&self) -> String {
        match self {
            DualityKind::D => "D".into(),
            DualityKind::Dprime => "D'".into(),
            DualityKind::DiagonalAlpha(a) => format!("d_alpha({a})"),
        }
    }
}

/// Duality function evaluated on two configurations over the same window,
/// with site labels taken from the window.
pub fn duality_value(kind: DualityKind, eta: &Configuration, xi: &Configuration, params: &QParams) -> Result<f64> {
    if eta.first() != xi.first() || eta.len() != xi.len() {
        return domain("duality arguments must share a window");
    }
    eta.check(params)?;
    xi.check(params)?;
    Ok(value(kind, eta.first(), eta.occupations(), xi.occupations(), params))
}

fn value(kind: DualityKind, first: i64, eta: &[u8], xi: &[u8], p: &QParams) -> f64 {
    let (tj, j, q) = (p.two_j(), p.j(), p.q());
    if let DualityKind::DiagonalAlpha(alpha) = kind {
        if eta != xi {
            return 0.0;
        }
        return eta
            .iter()
            .enumerate()
            .map(|(k, &n)| {
                let i = (first + k as i64) as f64;
                let n32 = u32::from(n);
                1.0 / (q_binomial_unchecked(tj, n32, q)
                    * alpha.powi(n as i32)
                    * p.pow(2.0 * f64::from(n) * (1.0 + j - 2.0 * j * i)))
            })
            .product();
    }
    if eta.iter().zip(xi).any(|(e, x)| x > e) {
        return 0.0;
    }
    let mut weight = 1.0;
    let mut exponent = 0.0;
    let mut below = 0.0;
    for (k, (&e, &x)) in eta.iter().zip(xi).enumerate() {
        let i = (first + k as i64) as f64;
        let (ef, xf) = (f64::from(e), f64::from(x));
        weight *= q_binomial_unchecked(u32::from(e), u32::from(x), q) / q_binomial_unchecked(tj, u32::from(x), q);
        let inner = match kind {
            DualityKind::D => 2.0 * below + xf,
            _ => 2.0 * below + ef,
        };
        exponent += (ef - xf) * inner + 4.0 * j * i * xf;
        below += match kind {
            DualityKind::D => xf,
            _ => ef,
        };
    }
    weight * q.powf(exponent)
}

/// Duality matrix on sites `1..=L`, rows indexed by `eta`, columns by `xi`.
pub fn duality_matrix(kind: DualityKind, lattice: &Lattice) -> Result<OperatorMatrix> {
    if let DualityKind::DiagonalAlpha(a) = kind {
        if !(a > 0.0) {
            return domain(format!("alpha must be positive, got {a}"));
        }
    }
    let p = *lattice.params();
    let configs: Vec<Vec<u8>> = lattice.configurations().collect();
    let dim = lattice.dim();
    Ok(DMatrix::from_fn(dim, dim, |r, c| value(kind, 1, &configs[r], &configs[c], &p)))
}

/// `||M X - X M^T||_max / (||M||_max ||X||_max)` for the closed-boundary generator.
pub fn matrix_duality_residual(m: &OperatorMatrix, x: &OperatorMatrix) -> f64 {
    let lhs = m * x;
    let rhs = x * m.transpose();
    max_abs(&(lhs - rhs)) / (max_abs(m) * max_abs(x))
}

/// Relative residual of `M D = D M^T` for the chosen duality function.
pub fn duality_residual(kind: DualityKind, lattice: &Lattice) -> Result<f64> {
    let m = generator_matrix(lattice, BoundaryKind::Closed)?;
    let d = duality_matrix(kind, lattice)?;
    Ok(matrix_duality_residual(&m, &d))
}

/// `G^{-1} S G^{-1}` for `S` in `{Sp, Smt}`.
pub fn duality_from_symmetry(kind: ExpKind, lattice: &Lattice) -> Result<OperatorMatrix> {
    if !matches!(kind, ExpKind::Sp | ExpKind::Smt) {
        return Err(Error::Usage(format!(
            "duality from symmetry is defined for Sp and Smt, not {}",
            kind.name()
        )));
    }
    let s = exponential_symmetry(kind, lattice)?;
    let g = ground_state(lattice)?;
    let n = lattice.dim();
    Ok(DMatrix::from_fn(n, n, |r, c| s[(r, c)] / (g[r] * g[c])))
}

/// Checks that `x = c(N(eta), N(xi)) d` entrywise, with one constant per pair
/// of particle numbers. Returns the largest relative deviation of the ratio
/// from its sector constant; a support mismatch counts as deviation 1.
pub fn sector_proportionality(lattice: &Lattice, x: &OperatorMatrix, d: &OperatorMatrix) -> f64 {
    let totals: Vec<u32> = lattice
        .configurations()
        .map(|c| c.iter().map(|&n| u32::from(n)).sum())
        .collect();
    let xs = max_abs(x);
    let ds = max_abs(d);
    let mut ratio: HashMap<(u32, u32), f64> = HashMap::new();
    let mut worst = 0.0_f64;
    for r in 0..lattice.dim() {
        for c in 0..lattice.dim() {
            let (a, b) = (x[(r, c)], d[(r, c)]);
            let a_zero = a.abs() <= 1e-300 * xs.max(1.0);
            let b_zero = b.abs() <= 1e-300 * ds.max(1.0);
            if a_zero && b_zero {
                continue;
            }
            if a_zero != b_zero {
                worst = worst.max(1.0);
                continue;
            }
            let key = (totals[r], totals[c]);
            let v = a / b;
            match ratio.get(&key) {
                Some(&r0) => worst = worst.max((v / r0 - 1.0).abs()),
                None => {
                    ratio.insert(key, v);
                }
            }
        }
    }
    worst
}

/// At `j = 1/2`: largest relative deviation, within fixed `(N(eta), N(xi))`
/// sectors, of `D'(eta, xi) / prod_m q^{2 k_m} q^{-2 N_{k_m - 1}} eta_{k_m}` from a
/// constant, where `k_1 < ... < k_M` are the sites occupied in `xi` and
/// `N_{k-1} = sum_{l<k} eta_l`. Pairs outside `xi <= eta` must vanish on both sides.
pub fn schuetz_reduction_check(lattice: &Lattice) -> Result<f64> {
    let p = *lattice.params();
    if p.two_j() != 1 {
        return domain("the reduction is stated for j = 1/2 only");
    }
    let dp = duality_matrix(DualityKind::Dprime, lattice)?;
    let configs: Vec<Vec<u8>> = lattice.configurations().collect();
    let n = lattice.dim();
    let schuetz = DMatrix::from_fn(n, n, |r, c| {
        let (eta, xi) = (&configs[r], &configs[c]);
        let mut v = 1.0;
        for (k, &x) in xi.iter().enumerate() {
            if x == 1 {
                let below: u32 = eta[..k].iter().map(|&e| u32::from(e)).sum();
                v *= p.pow(2.0 * (k + 1) as f64 - 2.0 * f64::from(below)) * f64::from(eta[k]);
            }
        }
        v
    });
    Ok(sector_proportionality(lattice, &dp, &schuetz))
}
