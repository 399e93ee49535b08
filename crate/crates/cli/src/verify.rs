//! The identity suite behind `asepqj verify`.

use std::fmt::Write as _;

use asepqj_core::algebra::{conjugate_by_diagonal, exponential_symmetry_series, verify_pseudo_factorization};
use asepqj_core::analytics::duality::{
    duality_from_symmetry, duality_matrix, matrix_duality_residual, schuetz_reduction_check, sector_proportionality,
};
use asepqj_core::generator::{flux_residual, generator_matrix, product_measure_obstruction, reversible_measure};
use asepqj_core::linalg::max_abs;
use asepqj_core::{BoundaryKind, ChainOps, DualityKind, ExpKind, Lattice, OperatorMatrix, Symmetry};

use crate::{fmt_float, CliError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    /// Passes when the residual is at most the tolerance.
    AtMost,
    /// Passes when the residual is at least the tolerance.
    AtLeast,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckRow {
    pub name: String,
    /// The identity being checked.
    pub statement: String,
    pub residual: f64,
    pub tolerance: f64,
    pub bound: Bound,
}

impl CheckRow {
    fn at_most(name: impl Into<String>, statement: &str, residual: f64, tolerance: f64) -> Self {
        Self { name: name.into(), statement: statement.into(), residual, tolerance, bound: Bound::AtMost }
    }

    pub fn pass(&self) -> bool {
        match self.bound {
            Bound::AtMost => self.residual <= self.tolerance,
            Bound::AtLeast => self.residual >= self.tolerance,
        }
    }
}

/// Multiplies one positive off-diagonal rate by 1.05 and rebalances its row.
pub fn corrupt_one_rate(m: &mut OperatorMatrix) {
    let n = m.nrows();
    for x in 0..n {
        for y in 0..n {
            if x != y && m[(x, y)] > 0.0 {
                let extra = 0.05 * m[(x, y)];
                m[(x, y)] += extra;
                m[(x, x)] -= extra;
                return;
            }
        }
    }
}

/// Runs every identity on one chain. Upper tolerances are multiplied by `tol_scale`.
pub fn run_suite(lattice: &Lattice, alphas: &[f64], tol_scale: f64, corrupt: bool) -> Result<Vec<CheckRow>, CliError> {
    let p = *lattice.params();
    let tol = |t: f64| t * tol_scale;
    let mut rows = Vec::new();

    let ops = ChainOps::build(lattice)?;
    rows.push(CheckRow::at_most("hamiltonian_symmetric", "H = H^T", ops.asymmetry(), tol(1e-12)));
    rows.push(CheckRow::at_most("ground_state", "H g = 0", ops.ground_state_residual(), tol(1e-10)));
    for kind in Symmetry::all() {
        rows.push(CheckRow::at_most(
            format!("commutator_{}", kind.name()),
            "[H, S] = 0",
            ops.commutator_residual(kind),
            tol(1e-10),
        ));
    }
    for kind in ExpKind::ALL {
        let closed = ops.symmetry(Symmetry::Exp(kind));
        let series = exponential_symmetry_series(kind, lattice)?;
        rows.push(CheckRow::at_most(
            format!("closed_form_{}", kind.name()),
            "closed-form matrix elements = q-exponential series",
            max_abs(&(closed - &series)) / max_abs(&series),
            tol(1e-10),
        ));
    }
    rows.push(CheckRow::at_most(
        "pseudo_factorization",
        "exp_q(sum of local terms) = ordered product of local exponentials",
        verify_pseudo_factorization(lattice)?,
        tol(1e-10),
    ));

    let mut m = generator_matrix(lattice, BoundaryKind::Closed)?;
    if corrupt {
        corrupt_one_rate(&mut m);
    }
    let scale = max_abs(&m);
    let conj = conjugate_by_diagonal(&ops.h, &ops.big_g);
    rows.push(CheckRow::at_most(
        "generator_equivalence",
        "G^-1 H G = rate generator",
        max_abs(&(&conj - &m)) / scale,
        tol(1e-10),
    ));
    let row_sum = (0..conj.nrows()).map(|x| conj.row(x).sum().abs()).fold(0.0, f64::max);
    rows.push(CheckRow::at_most("generator_row_sums", "rows of G^-1 H G sum to 0", row_sum / scale, tol(1e-12)));
    let mut most_negative = 0.0_f64;
    for x in 0..conj.nrows() {
        for y in 0..conj.ncols() {
            if x != y {
                most_negative = most_negative.max(-conj[(x, y)]);
            }
        }
    }
    rows.push(CheckRow::at_most(
        "generator_off_diagonal",
        "off-diagonal entries of G^-1 H G are nonnegative",
        most_negative / scale,
        tol(1e-14),
    ));

    for &alpha in alphas {
        let mu = reversible_measure(lattice, alpha)?;
        rows.push(CheckRow::at_most(
            format!("detailed_balance_alpha_{alpha}"),
            "mu(x) M(x,y) = mu(y) M(y,x)",
            flux_residual(&m, &mu),
            tol(1e-12),
        ));
    }
    let mu1 = reversible_measure(lattice, 1.0)?;
    let z: f64 = ops.g.iter().map(|v| v * v).sum();
    let dev = mu1.iter().zip(ops.g.iter()).map(|(a, g)| (a - g * g / z).abs()).fold(0.0, f64::max);
    let top = mu1.iter().cloned().fold(0.0, f64::max);
    rows.push(CheckRow::at_most("reversible_alpha_1", "alpha = 1 measure = g^2 normalized", dev / top, tol(1e-12)));

    let mut kinds = vec![DualityKind::D, DualityKind::Dprime];
    kinds.extend(alphas.iter().map(|&a| DualityKind::DiagonalAlpha(a)));
    for kind in kinds {
        let d = duality_matrix(kind, lattice)?;
        rows.push(CheckRow::at_most(
            format!("duality_{}", kind.name()),
            "M D = D M^T",
            matrix_duality_residual(&m, &d),
            tol(1e-10),
        ));
    }
    let sp = duality_from_symmetry(ExpKind::Sp, lattice)?;
    let d = duality_matrix(DualityKind::D, lattice)?;
    rows.push(CheckRow::at_most(
        "proportional_Sp_D",
        "G^-1 S+ G^-1 = c(N, N') D in every sector",
        sector_proportionality(lattice, &sp, &d),
        tol(1e-10),
    ));
    let smt = duality_from_symmetry(ExpKind::Smt, lattice)?.transpose();
    let dp = duality_matrix(DualityKind::Dprime, lattice)?;
    rows.push(CheckRow::at_most(
        "proportional_Smt_Dprime",
        "(G^-1 S~- G^-1)^T = c(N, N') D' in every sector",
        sector_proportionality(lattice, &smt, &dp),
        tol(1e-10),
    ));
    if p.two_j() == 1 {
        rows.push(CheckRow::at_most(
            "schuetz_reduction",
            "D' = c(N, N') prod_m q^{2k_m - 2N_{k_m-1}} eta_{k_m} at j = 1/2",
            schuetz_reduction_check(lattice)?,
            tol(1e-10),
        ));
    }
    if p.q() < 1.0 {
        let ob = product_measure_obstruction(p.q())?;
        rows.push(CheckRow {
            name: "obstruction_gap".into(),
            statement: "j = 1: delta - 2 alpha != 0, no stationary product measure on the torus".into(),
            residual: ob.gap.abs(),
            tolerance: 1e-3,
            bound: Bound::AtLeast,
        });
    }
    Ok(rows)
}

fn verdict(r: &CheckRow) -> &'static str {
    if r.pass() {
        "PASS"
    } else {
        "FAIL"
    }
}

fn bound_text(r: &CheckRow) -> String {
    match r.bound {
        Bound::AtMost => format!("<= {:.1e}", r.tolerance),
        Bound::AtLeast => format!(">= {:.1e}", r.tolerance),
    }
}

pub fn render_table(rows: &[CheckRow]) -> String {
    let wn = rows.iter().map(|r| r.name.len()).max().unwrap_or(4).max(8);
    let ws = rows.iter().map(|r| r.statement.len()).max().unwrap_or(9).max(9);
    let mut s = String::new();
    let _ = writeln!(s, "{:<wn$}  {:<ws$}  {:>23}  {:>10}  result", "identity", "statement", "residual", "tolerance");
    for r in rows {
        let _ = writeln!(
            s,
            "{:<wn$}  {:<ws$}  {:>23}  {:>10}  {}",
            r.name,
            r.statement,
            fmt_float(r.residual),
            bound_text(r),
            verdict(r)
        );
    }
    s
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn render_csv(rows: &[CheckRow]) -> String {
    let mut s = String::from("identity,statement,residual,tolerance,bound,result\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            csv_field(&r.name),
            csv_field(&r.statement),
            fmt_float(r.residual),
            fmt_float(r.tolerance),
            if r.bound == Bound::AtMost { "at_most" } else { "at_least" },
            verdict(r)
        );
    }
    s
}
