//! The spin-`j` representation of `U_q(sl_2)`, the quantum Hamiltonian of the
//! chain, its symmetries and the ground-state transformation.
//!
//! All objects are dense matrices in the basis of [`Lattice`]. The closed-form
//! matrix elements of the exponential symmetries and the series route through
//! [`q_matrix_exponential`] are kept as two separate code paths.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::linalg::{kron_all, max_abs};
use crate::qcalc::{q_binomial_unchecked, q_matrix_exponential, QParams};

pub type OperatorMatrix = DMatrix<f64>;

/// One-site operators.
#[derive(Debug, Clone)]
pub struct LocalOps {
    pub params: QParams,
    pub jp: OperatorMatrix,
    pub jm: OperatorMatrix,
    pub j0: OperatorMatrix,
    pub k: OperatorMatrix,
    pub e: OperatorMatrix,
    pub f: OperatorMatrix,
    pub e_tilde: OperatorMatrix,
    pub f_tilde: OperatorMatrix,
}

impl LocalOps {
    /// Diagonal `q^{s J0}`.
    pub fn q_pow_j0(&self, s: f64) -> OperatorMatrix {
        let p = &self.params;
        let j = p.j();
        DMatrix::from_diagonal(&DVector::from_iterator(
            p.local_dim(),
            (0..p.local_dim()).map(|n| p.pow(s * (n as f64 - j))),
        ))
    }

    /// Diagonal `[a J0 + b]_q`.
    pub fn bracket_j0(&self, a: f64, b: f64) -> OperatorMatrix {
        let p = &self.params;
        let j = p.j();
        DMatrix::from_diagonal(&DVector::from_iterator(
            p.local_dim(),
            (0..p.local_dim()).map(|n| p.bracket(a * (n as f64 - j) + b)),
        ))
    }

    /// `C = J^- J^+ + [J0]_q [J0 + 1]_q`.
    pub fn casimir(&self) -> OperatorMatrix {
        &self.jm * &self.jp + self.bracket_j0(1.0, 0.0) * self.bracket_j0(1.0, 1.0)
    }

    pub fn identity(&self) -> OperatorMatrix {
        DMatrix::identity(self.params.local_dim(), self.params.local_dim())
    }
}

pub fn local_operators(params: &QParams) -> LocalOps {
    let d = params.local_dim();
    let tj = f64::from(params.two_j());
    let mut jp = DMatrix::zeros(d, d);
    let mut jm = DMatrix::zeros(d, d);
    for n in 0..d {
        let nf = n as f64;
        if n + 1 < d {
            jp[(n + 1, n)] = (params.bracket(tj - nf) * params.bracket(nf + 1.0)).sqrt();
        }
        if n >= 1 {
            jm[(n - 1, n)] = (params.bracket(nf) * params.bracket(tj - nf + 1.0)).sqrt();
        }
    }
    let j = params.j();
    let j0 = DMatrix::from_diagonal(&DVector::from_iterator(d, (0..d).map(|n| n as f64 - j)));
    let mut ops = LocalOps {
        params: *params,
        jp,
        jm,
        j0,
        k: DMatrix::zeros(d, d),
        e: DMatrix::zeros(d, d),
        f: DMatrix::zeros(d, d),
        e_tilde: DMatrix::zeros(d, d),
        f_tilde: DMatrix::zeros(d, d),
    };
    let up = ops.q_pow_j0(1.0);
    let down = ops.q_pow_j0(-1.0);
    ops.k = ops.q_pow_j0(2.0);
    ops.e = &up * &ops.jp;
    ops.f = &ops.jm * &down;
    ops.e_tilde = &ops.jp * &down;
    ops.f_tilde = &up * &ops.jm;
    ops
}

/// The two-site operator `Delta(C)` exactly as the tensor expression
/// `-q^{J0} { J+ (x) J- + J- (x) J+ + a [J0] (x) [J0] + b (q^{J0}+q^{-J0}) (x) (q^{J0}+q^{-J0}) } q^{-J0}`
/// with `a = (q^j+q^{-j})(q^{j+1}+q^{-j-1})/2` and `b = [j][j+1]/2`.
///
/// This equals minus the coproduct of the Casimir; [`hamiltonian`] flips the
/// sign so that the bond term is the Markov-compatible one.
pub fn two_site_casimir_coproduct(params: &QParams) -> OperatorMatrix {
    let ops = local_operators(params);
    let j = params.j();
    let id = ops.identity();
    let a = (params.pow(j) + params.pow(-j)) * (params.pow(j + 1.0) + params.pow(-j - 1.0)) / 2.0;
    let b = params.bracket(j) * params.bracket(j + 1.0) / 2.0;
    let bj0 = ops.bracket_j0(1.0, 0.0);
    let sym = ops.q_pow_j0(1.0) + ops.q_pow_j0(-1.0);
    let inner = ops.jp.kronecker(&ops.jm)
        + ops.jm.kronecker(&ops.jp)
        + bj0.kronecker(&bj0) * a
        + sym.kronecker(&sym) * b;
    let left = ops.q_pow_j0(1.0).kronecker(&id);
    let right = id.kronecker(&ops.q_pow_j0(-1.0));
    -(left * inner * right)
}

/// `c = [2j]_q [2j+1]_q`, the constant added per bond.
pub fn bond_constant(params: &QParams) -> f64 {
    let tj = f64::from(params.two_j());
    params.bracket(tj) * params.bracket(tj + 1.0)
}

/// Two-site Hamiltonian term `-(Delta(C) + c)`.
pub fn bond_hamiltonian(params: &QParams) -> OperatorMatrix {
    let d2 = params.local_dim().pow(2);
    -(two_site_casimir_coproduct(params) + DMatrix::identity(d2, d2) * bond_constant(params))
}

/// `H = sum_i h_{i,i+1}` on an open chain.
pub fn hamiltonian(lattice: &Lattice) -> Result<OperatorMatrix> {
    lattice.require_bonds()?;
    let p = lattice.params();
    let id = DMatrix::identity(p.local_dim(), p.local_dim());
    let h2 = bond_hamiltonian(p);
    let l = lattice.len();
    let mut h = DMatrix::zeros(lattice.dim(), lattice.dim());
    for i in 0..l - 1 {
        let mut factors: Vec<&OperatorMatrix> = vec![&id; i];
        factors.push(&h2);
        factors.extend(std::iter::repeat(&id).take(l - i - 2));
        h += kron_all(&factors);
    }
    Ok(h)
}

/// Telescoped chain operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChainKind {
    Jp,
    Jm,
    J0,
    E,
    F,
    Et,
    Ft,
}

/// Exponential symmetries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExpKind {
    Sp,
    Sm,
    Spt,
    Smt,
}

/// Any of the eleven symmetries of `H`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Symmetry {
    Chain(ChainKind),
    Exp(ExpKind),
}

impl ChainKind {
    pub const ALL: [ChainKind; 7] = [
        ChainKind::Jp,
        ChainKind::Jm,
        ChainKind::J0,
        ChainKind::E,
        ChainKind::F,
        ChainKind::Et,
        ChainKind::Ft,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ChainKind::Jp => "Jp_L",
            ChainKind::Jm => "Jm_L",
            ChainKind::J0 => "J0_L",
            ChainKind::E => "E_L",
            ChainKind::F => "F_L",
            ChainKind::Et => "Et_L",
            ChainKind::Ft => "Ft_L",
        }
    }
}

impl ExpKind {
    pub const ALL: [ExpKind; 4] = [ExpKind::Sp, ExpKind::Sm, ExpKind::Spt, ExpKind::Smt];

    pub fn name(self) -> &'static str {
        match self {
            ExpKind::Sp => "Sp",
            ExpKind::Sm => "Sm",
            ExpKind::Spt => "Spt",
            ExpKind::Smt => "Smt",
        }
    }

    /// The chain operator being exponentiated.
    pub fn generator(self) -> ChainKind {
        match self {
            ExpKind::Sp => ChainKind::E,
            ExpKind::Sm => ChainKind::F,
            ExpKind::Spt => ChainKind::Et,
            ExpKind::Smt => ChainKind::Ft,
        }
    }

    /// The base `r` of the q-exponential: `q^2` for raising, `q^-2` for lowering.
    pub fn base(self, params: &QParams) -> f64 {
        match self {
            ExpKind::Sp | ExpKind::Spt => params.pow(2.0),
            ExpKind::Sm | ExpKind::Smt => params.pow(-2.0),
        }
    }
}

impl Symmetry {
    pub fn all() -> Vec<Symmetry> {
        ChainKind::ALL
            .iter()
            .map(|&k| Symmetry::Chain(k))
            .chain(ExpKind::ALL.iter().map(|&k| Symmetry::Exp(k)))
            .collect()
    }

    pub fn name(self) -> &'static str {
        match self {
            Symmetry::Chain(k) => k.name(),
            Symmetry::Exp(k) => k.name(),
        }
    }
}

impl fmt::Display for Symmetry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Symmetry {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let all = Symmetry::all();
        all.iter()
            .copied()
            .find(|k| k.name().eq_ignore_ascii_case(s) || k.name().trim_end_matches("_L").eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Usage(format!("unknown symmetry kind {s:?}")))
    }
}

impl FromStr for ChainKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.parse::<Symmetry>()? {
            Symmetry::Chain(k) => Ok(k),
            Symmetry::Exp(_) => Err(Error::Usage(format!("{s:?} is not a chain operator"))),
        }
    }
}

impl FromStr for ExpKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.parse::<Symmetry>()? {
            Symmetry::Exp(k) => Ok(k),
            Symmetry::Chain(_) => Err(Error::Usage(format!("{s:?} is not an exponential symmetry"))),
        }
    }
}

/// `sum_i left^{(i-1)} (x) mid (x) right^{(L-i)}`.
fn telescoped(left: &OperatorMatrix, mid: &OperatorMatrix, right: &OperatorMatrix, len: usize) -> OperatorMatrix {
    let mut total: Option<OperatorMatrix> = None;
    for i in 0..len {
        let mut factors: Vec<&OperatorMatrix> = vec![left; i];
        factors.push(mid);
        factors.extend(std::iter::repeat(right).take(len - i - 1));
        let term = kron_all(&factors);
        total = Some(match total {
            Some(t) => t + term,
            None => term,
        });
    }
    total.expect("chain has at least one site")
}

pub fn chain_symmetry(kind: ChainKind, lattice: &Lattice) -> Result<OperatorMatrix> {
    lattice.require_bonds()?;
    let ops = local_operators(lattice.params());
    let id = ops.identity();
    let l = lattice.len();
    let up = ops.q_pow_j0(1.0);
    let down = ops.q_pow_j0(-1.0);
    let kinv = ops.q_pow_j0(-2.0);
    Ok(match kind {
        ChainKind::Jp => telescoped(&up, &ops.jp, &down, l),
        ChainKind::Jm => telescoped(&up, &ops.jm, &down, l),
        ChainKind::J0 => telescoped(&id, &ops.j0, &id, l),
        ChainKind::E => telescoped(&ops.k, &ops.e, &id, l),
        ChainKind::F => telescoped(&id, &ops.f, &kinv, l),
        ChainKind::Et => telescoped(&id, &ops.e_tilde, &kinv, l),
        ChainKind::Ft => telescoped(&ops.k, &ops.f_tilde, &id, l),
    })
}

/// `exp_r` of the chain operator, through the series.
pub fn exponential_symmetry_series(kind: ExpKind, lattice: &Lattice) -> Result<OperatorMatrix> {
    let x = chain_symmetry(kind.generator(), lattice)?;
    q_matrix_exponential(&x, kind.base(lattice.params()))
}

/// Exponential symmetry built from its closed-form matrix elements
/// `<eta| S |xi>`.
pub fn exponential_symmetry(kind: ExpKind, lattice: &Lattice) -> Result<OperatorMatrix> {
    lattice.require_bonds()?;
    let p = *lattice.params();
    let dim = lattice.dim();
    let configs: Vec<Vec<u8>> = lattice.configurations().collect();
    let mut s = DMatrix::zeros(dim, dim);
    for (row, eta) in configs.iter().enumerate() {
        for (col, xi) in configs.iter().enumerate() {
            s[(row, col)] = exp_element(kind, &p, eta, xi);
        }
    }
    Ok(s)
}

fn exp_element(kind: ExpKind, p: &QParams, eta: &[u8], xi: &[u8]) -> f64 {
    let tj = p.two_j();
    let j = p.j();
    let q = p.q();
    let l = eta.len();
    let raising = matches!(kind, ExpKind::Sp | ExpKind::Spt);
    // Lowering symmetries act with xi >= eta; swap roles so `hi >= lo` sitewise.
    let (hi, lo) = if raising { (eta, xi) } else { (xi, eta) };
    if hi.iter().zip(lo).any(|(h, l)| h < l) {
        return 0.0;
    }
    let mut left = 0.0; // sum_{k<i} (xi_k - j)
    let mut right: f64 = eta.iter().map(|&n| f64::from(n) - j).sum(); // sum_{k>=i} (eta_k - j)
    let mut exponent = 0.0;
    let mut weight = 1.0;
    for i in 0..l {
        let (h, lw) = (u32::from(hi[i]), u32::from(lo[i]));
        let e = f64::from(eta[i]);
        let x = f64::from(xi[i]);
        right -= e - j; // now sum_{k>i} (eta_k - j)
        let diff = f64::from(h - lw);
        weight *= (q_binomial_unchecked(h, lw, q) * q_binomial_unchecked(tj - lw, tj - h, q)).sqrt();
        exponent += diff
            * match kind {
                ExpKind::Sp => 1.0 - j + x + 2.0 * left,
                ExpKind::Sm => -(2.0 * right + e - j + 1.0),
                ExpKind::Spt => -(2.0 * right + e - j - 1.0),
                ExpKind::Smt => 2.0 * left + x - 1.0 - j,
            };
        left += x - j;
    }
    weight * q.powf(exponent)
}

/// Closed-form ground state `g(eta) = prod_i sqrt(binom(2j, eta_i)_q) q^{eta_i (1 + j - 2 j i)}`.
pub fn ground_state(lattice: &Lattice) -> Result<DVector<f64>> {
    lattice.require_bonds()?;
    let p = *lattice.params();
    let (tj, j) = (p.two_j(), p.j());
    Ok(DVector::from_iterator(
        lattice.dim(),
        lattice.configurations().map(|eta| {
            eta.iter()
                .enumerate()
                .map(|(i, &n)| {
                    let n = u32::from(n);
                    q_binomial_unchecked(tj, n, p.q()).sqrt()
                        * p.pow(f64::from(n) * (1.0 + j - 2.0 * j * (i + 1) as f64))
                })
                .product::<f64>()
        }),
    ))
}

/// `S^+ |0...0>` through the q-exponential series.
pub fn ground_state_from_symmetry(lattice: &Lattice) -> Result<DVector<f64>> {
    Ok(exponential_symmetry_series(ExpKind::Sp, lattice)?.column(0).into_owned())
}

/// `G = diag(g)`.
pub fn ground_transform(lattice: &Lattice) -> Result<OperatorMatrix> {
    Ok(DMatrix::from_diagonal(&ground_state(lattice)?))
}

/// The alternative transform `diag(S~+ |0...0>)`.
pub fn alternative_ground_transform(lattice: &Lattice) -> Result<OperatorMatrix> {
    let s = exponential_symmetry_series(ExpKind::Spt, lattice)?;
    Ok(DMatrix::from_diagonal(&s.column(0).into_owned()))
}

/// `G^{-1} A G` for diagonal `G`.
pub fn conjugate_by_diagonal(a: &OperatorMatrix, g: &OperatorMatrix) -> OperatorMatrix {
    let n = a.nrows();
    DMatrix::from_fn(n, n, |x, y| a[(x, y)] * g[(y, y)] / g[(x, x)])
}

/// Relative residual of the pseudo-factorization of `exp_{q^2}(E_L)` and of the
/// reversed-order factorization of `exp_{q^-2}(F_L)`; the larger of the two,
/// each scaled by the max-norm of the series side.
pub fn verify_pseudo_factorization(lattice: &Lattice) -> Result<f64> {
    lattice.require_bonds()?;
    let p = *lattice.params();
    let ops = local_operators(&p);
    let id = ops.identity();
    let l = lattice.len();
    let kinv = ops.q_pow_j0(-2.0);

    let r = p.pow(2.0);
    let mut product = DMatrix::identity(lattice.dim(), lattice.dim());
    for i in 0..l {
        let mut factors: Vec<&OperatorMatrix> = vec![&ops.k; i];
        factors.push(&ops.e);
        factors.extend(std::iter::repeat(&id).take(l - i - 1));
        product *= q_matrix_exponential(&kron_all(&factors), r)?;
    }
    let series = q_matrix_exponential(&chain_symmetry(ChainKind::E, lattice)?, r)?;
    let res_e = max_abs(&(&series - &product)) / max_abs(&series);

    let r = p.pow(-2.0);
    let mut product = DMatrix::identity(lattice.dim(), lattice.dim());
    for i in 0..l {
        let mut factors: Vec<&OperatorMatrix> = vec![&id; i];
        factors.push(&ops.f);
        factors.extend(std::iter::repeat(&kinv).take(l - i - 1));
        product *= q_matrix_exponential(&kron_all(&factors), r)?;
    }
    let series = q_matrix_exponential(&chain_symmetry(ChainKind::F, lattice)?, r)?;
    let res_f = max_abs(&(&series - &product)) / max_abs(&series);
    Ok(res_e.max(res_f))
}

/// Everything built on one chain.
#[derive(Debug, Clone)]
pub struct ChainOps {
    pub lattice: Lattice,
    pub h: OperatorMatrix,
    pub symmetries: Vec<(Symmetry, OperatorMatrix)>,
    pub g: DVector<f64>,
    pub big_g: OperatorMatrix,
}

impl ChainOps {
    /// Builds `H`, the eleven symmetries (exponentials from closed forms), `g` and `G`.
    pub fn build(lattice: &Lattice) -> Result<Self> {
        let h = hamiltonian(lattice)?;
        let mut symmetries = Vec::with_capacity(11);
        for kind in ChainKind::ALL {
            symmetries.push((Symmetry::Chain(kind), chain_symmetry(kind, lattice)?));
        }
        for kind in ExpKind::ALL {
            symmetries.push((Symmetry::Exp(kind), exponential_symmetry(kind, lattice)?));
        }
        let g = ground_state(lattice)?;
        let big_g = DMatrix::from_diagonal(&g);
        Ok(Self { lattice: *lattice, h, symmetries, g, big_g })
    }

    pub fn symmetry(&self, kind: Symmetry) -> &OperatorMatrix {
        &self
            .symmetries
            .iter()
            .find(|(k, _)| *k == kind)
            .expect("all symmetries are built")
            .1
    }

    /// `||HS - SH||_max / (||H||_max ||S||_max)`.
    pub fn commutator_residual(&self, kind: Symmetry) -> f64 {
        let s = self.symmetry(kind);
        max_abs(&(&self.h * s - s * &self.h)) / (max_abs(&self.h) * max_abs(s))
    }

    /// `||H - H^T||_max / ||H||_max`.
    pub fn asymmetry(&self) -> f64 {
        max_abs(&(&self.h - self.h.transpose())) / max_abs(&self.h)
    }

    /// `||H g||_max / (||H||_max ||g||_max)`.
    pub fn ground_state_residual(&self) -> f64 {
        let hg = &self.h * &self.g;
        hg.amax() / (max_abs(&self.h) * self.g.amax())
    }
}
