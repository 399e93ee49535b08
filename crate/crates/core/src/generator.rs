//! Jump rates, generator matrices, reversible product measures and the
//! obstruction to translation-invariant product measures.
//!
//! Matrix convention: entry `(x, y)` is the rate of the jump `x -> y`, the
//! diagonal makes every row sum to zero. With this convention the quantum
//! Hamiltonian is conjugated as `G^{-1} H G`, and a duality function `D` obeys
//! `M D = D M^T`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::algebra::OperatorMatrix;
use crate::error::{domain, Error, Result};
use crate::lattice::Lattice;
use crate::qcalc::{q_binomial_unchecked, QParams};

/// Occupations on a finite window of consecutive sites `[first, first + len)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Configuration {
    first: i64,
    occ: Vec<u8>,
}

impl Configuration {
    pub fn new(first: i64, occ: Vec<u8>) -> Result<Self> {
        if occ.is_empty() {
            return domain("configuration window must be nonempty");
        }
        Ok(Self { first, occ })
    }

    /// Window `[a, b]` filled with `fill`.
    pub fn uniform(a: i64, b: i64, fill: u8) -> Result<Self> {
        if b < a {
            return domain(format!("empty window [{a}, {b}]"));
        }
        Self::new(a, vec![fill; (b - a + 1) as usize])
    }

    pub fn check(&self, params: &QParams) -> Result<()> {
        match self.occ.iter().find(|&&n| u32::from(n) > params.two_j()) {
            Some(n) => domain(format!("occupation {n} exceeds 2j = {}", params.two_j())),
            None => Ok(()),
        }
    }

    pub fn first(&self) -> i64 {
        self.first
    }

    pub fn last(&self) -> i64 {
        self.first + self.occ.len() as i64 - 1
    }

    pub fn len(&self) -> usize {
        self.occ.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occ.is_empty()
    }

    pub fn occupations(&self) -> &[u8] {
        &self.occ
    }

    pub fn occupations_mut(&mut self) -> &mut [u8] {
        &mut self.occ
    }

    pub fn contains(&self, site: i64) -> bool {
        site >= self.first && site <= self.last()
    }

    pub fn get(&self, site: i64) -> Option<u8> {
        self.contains(site).then(|| self.occ[(site - self.first) as usize])
    }

    pub fn total(&self) -> u64 {
        self.occ.iter().map(|&n| u64::from(n)).sum()
    }

    /// `N_i = sum_{k >= i} eta_k` restricted to the window.
    pub fn right_count(&self, i: i64) -> u64 {
        let start = (i - self.first).clamp(0, self.occ.len() as i64) as usize;
        self.occ[start..].iter().map(|&n| u64::from(n)).sum()
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}..{}]:", self.first, self.last())?;
        for n in &self.occ {
            write!(f, "{n}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryKind {
    Closed,
    Periodic,
    /// A window of the infinite line with closed ends, watched for edge activity.
    TruncatedLine,
}

impl FromStr for BoundaryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "closed" => Ok(Self::Closed),
            "periodic" => Ok(Self::Periodic),
            "truncated" | "truncated-line" | "line" => Ok(Self::TruncatedLine),
            _ => Err(Error::Usage(format!("unknown boundary {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Right,
    Left,
}

/// Rate of one particle hopping `i -> i+1` given `(eta_i, eta_{i+1}) = (a, b)`.
pub fn rate_right(a: u8, b: u8, params: &QParams) -> f64 {
    let tj = f64::from(params.two_j());
    let (a, b) = (f64::from(a), f64::from(b));
    params.pow(a - b - (tj + 1.0)) * params.bracket(a) * params.bracket(tj - b)
}

/// Rate of one particle hopping `i+1 -> i` given `(eta_i, eta_{i+1}) = (a, b)`.
pub fn rate_left(a: u8, b: u8, params: &QParams) -> f64 {
    let tj = f64::from(params.two_j());
    let (a, b) = (f64::from(a), f64::from(b));
    params.pow(a - b + (tj + 1.0)) * params.bracket(tj - a) * params.bracket(b)
}

/// Jump rate across bond `(i, i+1)` of `cfg`. Under `Periodic` the last site
/// is bonded to the first.
pub fn jump_rate(cfg: &Configuration, i: i64, dir: Direction, params: &QParams, boundary: BoundaryKind) -> Result<f64> {
    let a = cfg
        .get(i)
        .ok_or_else(|| Error::Domain(format!("site {i} outside window")))?;
    let b = match (cfg.get(i + 1), boundary) {
        (Some(b), _) => b,
        (None, BoundaryKind::Periodic) if i == cfg.last() => cfg.occupations()[0],
        _ => return domain(format!("bond ({i}, {}) outside window", i + 1)),
    };
    Ok(match dir {
        Direction::Right => rate_right(a, b, params),
        Direction::Left => rate_left(a, b, params),
    })
}

fn bonds(len: usize, boundary: BoundaryKind) -> Result<Vec<(usize, usize)>> {
    let mut out: Vec<(usize, usize)> = (0..len.saturating_sub(1)).map(|i| (i, i + 1)).collect();
    if boundary == BoundaryKind::Periodic {
        if len < 3 {
            return domain("periodic boundary needs at least three sites");
        }
        out.push((len - 1, 0));
    }
    Ok(out)
}

/// Generator matrix on `L` sites in the basis of [`Lattice`].
pub fn generator_matrix(lattice: &Lattice, boundary: BoundaryKind) -> Result<OperatorMatrix> {
    let p = lattice.params();
    let bonds = bonds(lattice.len(), boundary)?;
    let dim = lattice.dim();
    let mut m = DMatrix::zeros(dim, dim);
    for x in 0..dim {
        let eta = lattice.decode(x);
        let mut out = 0.0;
        for &(i, k) in &bonds {
            let (a, b) = (eta[i], eta[k]);
            let r = rate_right(a, b, p);
            if r > 0.0 {
                let mut to = eta.clone();
                to[i] -= 1;
                to[k] += 1;
                m[(x, lattice.encode(&to))] += r;
                out += r;
            }
            let l = rate_left(a, b, p);
            if l > 0.0 {
                let mut to = eta.clone();
                to[i] += 1;
                to[k] -= 1;
                m[(x, lattice.encode(&to))] += l;
                out += l;
            }
        }
        m[(x, x)] = -out;
    }
    Ok(m)
}

/// Configurations of `len` sites with a fixed total, indexed densely.
#[derive(Debug, Clone)]
pub struct SectorSpace {
    two_j: u8,
    configs: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
}

impl SectorSpace {
    pub fn new(params: &QParams, len: usize, total: u32, cap: usize) -> Result<Self> {
        let two_j = params.two_j() as u8;
        let mut configs = Vec::new();
        let mut cur = vec![0u8; len];
        fn fill(cur: &mut Vec<u8>, pos: usize, left: u32, two_j: u8, out: &mut Vec<Vec<u8>>, cap: usize) -> bool {
            if pos == cur.len() {
                if left == 0 {
                    out.push(cur.clone());
                }
                return out.len() <= cap;
            }
            let rest = (cur.len() - pos - 1) as u32 * u32::from(two_j);
            for n in 0..=u32::from(two_j).min(left) {
                if left - n > rest {
                    continue;
                }
                cur[pos] = n as u8;
                if !fill(cur, pos + 1, left - n, two_j, out, cap) {
                    return false;
                }
            }
            cur[pos] = 0;
            true
        }
        if !fill(&mut cur, 0, total, two_j, &mut configs, cap) {
            return Err(Error::Size { dim: configs.len(), cap });
        }
        let index = configs.iter().cloned().enumerate().map(|(i, c)| (c, i)).collect();
        Ok(Self { two_j, configs, index })
    }

    pub fn dim(&self) -> usize {
        self.configs.len()
    }

    pub fn configurations(&self) -> &[Vec<u8>] {
        &self.configs
    }

    pub fn index_of(&self, occ: &[u8]) -> Option<usize> {
        self.index.get(occ).copied()
    }

    /// Closed-boundary generator restricted to the sector.
    pub fn generator(&self, params: &QParams) -> OperatorMatrix {
        debug_assert_eq!(u32::from(self.two_j), params.two_j());
        let dim = self.dim();
        let mut m = DMatrix::zeros(dim, dim);
        for (x, eta) in self.configs.iter().enumerate() {
            let mut out = 0.0;
            for i in 0..eta.len().saturating_sub(1) {
                let (a, b) = (eta[i], eta[i + 1]);
                for (rate, da) in [(rate_right(a, b, params), -1i8), (rate_left(a, b, params), 1i8)] {
                    if rate > 0.0 {
                        let mut to = eta.clone();
                        to[i] = (to[i] as i8 + da) as u8;
                        to[i + 1] = (to[i + 1] as i8 - da) as u8;
                        m[(x, self.index[&to])] += rate;
                        out += rate;
                    }
                }
            }
            m[(x, x)] = -out;
        }
        m
    }
}

/// `exp(tM)` for a matrix with nonnegative off-diagonal entries, by
/// uniformization: `exp(tM) = sum_n Pois(n; lt) P^n` with `P = I + M/l`.
/// The horizon is halved until `lt <= 1`, then the result is squared back.
pub fn transition_matrix(m: &OperatorMatrix, t: f64) -> Result<OperatorMatrix> {
    if m.nrows() != m.ncols() {
        return Err(Error::Shape("transition matrix needs a square generator".into()));
    }
    if !(t >= 0.0) {
        return domain(format!("time must be nonnegative, got {t}"));
    }
    let n = m.nrows();
    let rate = (0..n).map(|i| -m[(i, i)]).fold(0.0_f64, f64::max);
    if rate == 0.0 || t == 0.0 {
        return Ok(DMatrix::identity(n, n));
    }
    let mut squarings = 0;
    let mut tau = t;
    while rate * tau > 1.0 {
        tau /= 2.0;
        squarings += 1;
    }
    let p = DMatrix::identity(n, n) + m / rate;
    let lt = rate * tau;
    let mut weight = (-lt).exp();
    let mut power = DMatrix::identity(n, n);
    let mut out = &power * weight;
    let mut k = 0;
    while weight > 1e-20 {
        k += 1;
        weight *= lt / k as f64;
        power = &power * &p;
        out += &power * weight;
    }
    for _ in 0..squarings {
        out = &out * &out;
    }
    Ok(out)
}

/// Marginal `P(eta_i = n) ~ alpha^n binom(2j, n)_q q^{2n(1 + j - 2ji)}` of the
/// reversible product measure at site `i`.
pub fn reversible_marginal(params: &QParams, alpha: f64, i: i64) -> Result<Vec<f64>> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return domain(format!("alpha must be positive, got {alpha}"));
    }
    let j = params.j();
    let slope = alpha.ln() + 2.0 * (1.0 + j - 2.0 * j * i as f64) * params.q().ln();
    let logs: Vec<f64> = (0..=params.two_j())
        .map(|n| f64::from(n) * slope + q_binomial_unchecked(params.two_j(), n, params.q()).ln())
        .collect();
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
    let z: f64 = w.iter().sum();
    Ok(w.into_iter().map(|v| v / z).collect())
}

/// Product of reversible marginals over sites `1..=L`, in lattice basis order.
pub fn reversible_measure(lattice: &Lattice, alpha: f64) -> Result<Vec<f64>> {
    let marg: Vec<Vec<f64>> = (1..=lattice.len() as i64)
        .map(|i| reversible_marginal(lattice.params(), alpha, i))
        .collect::<Result<_>>()?;
    Ok(lattice
        .configurations()
        .map(|eta| eta.iter().enumerate().map(|(i, &n)| marg[i][n as usize]).product())
        .collect())
}

/// `max |mu(eta) c(eta, eta') - mu(eta') c(eta', eta)|` over all single jumps,
/// divided by the largest flux `mu(eta) c(eta, eta')`. Zero when there are no bonds.
pub fn detailed_balance_residual(lattice: &Lattice, alpha: f64) -> Result<f64> {
    detailed_balance_residual_with(lattice, alpha, BoundaryKind::Closed)
}

pub fn detailed_balance_residual_with(lattice: &Lattice, alpha: f64, boundary: BoundaryKind) -> Result<f64> {
    let mu = reversible_measure(lattice, alpha)?;
    if lattice.len() < 2 {
        return Ok(0.0);
    }
    let m = generator_matrix(lattice, boundary)?;
    Ok(flux_residual(&m, &mu))
}

/// `max |mu(x) M(x, y) - mu(y) M(y, x)|` over pairs joined by a jump, divided
/// by the largest such flux.
pub fn flux_residual(m: &OperatorMatrix, mu: &[f64]) -> f64 {
    let mut worst = 0.0_f64;
    let mut scale = 0.0_f64;
    for x in 0..m.nrows() {
        for y in 0..m.ncols() {
            if x != y && (m[(x, y)] != 0.0 || m[(y, x)] != 0.0) {
                let fwd = mu[x] * m[(x, y)];
                let bwd = mu[y] * m[(y, x)];
                worst = worst.max((fwd - bwd).abs());
                scale = scale.max(fwd.abs());
            }
        }
    }
    if scale > 0.0 {
        worst / scale
    } else {
        0.0
    }
}

/// Quantities of the `j = 1` argument that no translation-invariant product
/// measure is stationary on the torus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObstructionRecord {
    pub alpha: f64,
    pub gamma: f64,
    pub delta: f64,
    /// `delta - 2 alpha`; nonzero means no such measure exists.
    pub gap: f64,
}

pub fn product_measure_obstruction(q: f64) -> Result<ObstructionRecord> {
    if !(q > 0.0 && q < 1.0) {
        return domain(format!("obstruction needs q in (0, 1), got {q}"));
    }
    let alpha = q.powi(3) + q - 1.0 / q - q.powi(-3);
    let gamma = (q.powi(3) + 3.0 * q + 3.0 / q + q.powi(-3)) / (q.powi(3) + q.powi(-3));
    let delta = gamma * q.powi(3) - q - 2.0 / q - q.powi(-3);
    Ok(ObstructionRecord { alpha, gamma, delta, gap: delta - 2.0 * alpha })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{alternative_ground_transform, conjugate_by_diagonal, ground_transform, hamiltonian};
    use crate::linalg::max_abs;
    use proptest::prelude::*;

    fn lat(q: f64, two_j: u32, len: usize) -> Lattice {
        Lattice::new(QParams::new(q, two_j).unwrap(), len).unwrap()
    }

    #[test]
    fn rate_examples() {
        let p = QParams::new(0.5, 1).unwrap();
        assert!((rate_right(1, 0, &p) - 2.0).abs() < 1e-15);
        assert!((rate_left(0, 1, &p) - 0.5).abs() < 1e-15);
        let p = QParams::new(0.5, 2).unwrap();
        assert_eq!(rate_right(1, 2, &p), 0.0);
        assert_eq!(rate_right(0, 1, &p), 0.0);
        assert_eq!(rate_left(2, 1, &p), 0.0);
        assert!((rate_right(2, 1, &p) - 10.0).abs() < 1e-13);
    }

    #[test]
    fn jump_rate_window_checks() {
        let p = QParams::new(0.5, 1).unwrap();
        let c = Configuration::new(-1, vec![1, 0, 1]).unwrap();
        assert!((jump_rate(&c, -1, Direction::Right, &p, BoundaryKind::Closed).unwrap() - 2.0).abs() < 1e-15);
        assert!(jump_rate(&c, 1, Direction::Right, &p, BoundaryKind::Closed).is_err());
        assert!(jump_rate(&c, -2, Direction::Right, &p, BoundaryKind::Closed).is_err());
        // wrapped bond (1, -1) has (1, 1): blocked
        assert_eq!(jump_rate(&c, 1, Direction::Right, &p, BoundaryKind::Periodic).unwrap(), 0.0);
    }

    #[test]
    fn configuration_counts() {
        let c = Configuration::new(-2, vec![0, 1, 2, 1, 0]).unwrap();
        assert_eq!(c.right_count(0), 3);
        assert_eq!(c.right_count(-10), 4);
        assert_eq!(c.right_count(9), 0);
        assert_eq!(c.get(3), None);
        assert!(c.check(&QParams::new(0.5, 1).unwrap()).is_err());
        assert!(Configuration::new(0, vec![]).is_err());
    }

    #[test]
    fn generator_structure() {
        let l = lat(0.6, 2, 4);
        for boundary in [BoundaryKind::Closed, BoundaryKind::Periodic] {
            let m = generator_matrix(&l, boundary).unwrap();
            for x in 0..l.dim() {
                let s: f64 = m.row(x).iter().sum();
                assert!(s.abs() <= 1e-12 * max_abs(&m));
                for y in 0..l.dim() {
                    if x != y {
                        assert!(m[(x, y)] >= 0.0);
                    }
                }
            }
        }
        assert!(generator_matrix(&lat(0.6, 1, 2), BoundaryKind::Periodic).is_err());
    }

    #[test]
    fn generator_is_conjugated_hamiltonian() {
        for (q, two_j, len) in [(0.5, 1, 3), (0.3, 2, 3), (0.9, 3, 2)] {
            let l = lat(q, two_j, len);
            let m = generator_matrix(&l, BoundaryKind::Closed).unwrap();
            let c = conjugate_by_diagonal(&hamiltonian(&l).unwrap(), &ground_transform(&l).unwrap());
            assert!(max_abs(&(&c - &m)) <= 1e-10 * max_abs(&m));
            let alt = conjugate_by_diagonal(&hamiltonian(&l).unwrap(), &alternative_ground_transform(&l).unwrap());
            assert!(max_abs(&(&alt - &m)) <= 1e-10 * max_abs(&m));
        }
    }

    #[test]
    fn symmetric_limit_rates() {
        let p = QParams::new(1.0 - 1e-8, 3).unwrap();
        for a in 0..=3u8 {
            for b in 0..=3u8 {
                let want = f64::from(a) * f64::from(3 - b);
                let got = rate_right(a, b, &p);
                assert!((got - want).abs() <= 1e-6 * want.max(1.0));
            }
        }
    }

    #[test]
    fn marginal_examples() {
        let p = QParams::new(0.5, 1).unwrap();
        let m = reversible_marginal(&p, 1.0, 1).unwrap();
        assert!((m[0] - 2.0 / 3.0).abs() < 1e-15 && (m[1] - 1.0 / 3.0).abs() < 1e-15);
        assert!(reversible_marginal(&p, 0.0, 1).is_err());
        let p = QParams::new(0.7, 3).unwrap();
        for i in [-3, 0, 2, 5] {
            let m = reversible_marginal(&p, 1.7, i).unwrap();
            assert!((m.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            // successive ratio: beta q^{-4ji} [2j-n+1]/[n], beta = alpha q^{2(j+1)}
            for n in 1..=3 {
                let beta = 1.7 * p.pow(2.0 * 2.5);
                let want = beta * p.pow(-6.0 * i as f64) * p.bracket(4.0 - n as f64) / p.bracket(n as f64);
                assert!((m[n] / m[n - 1] / want - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn alpha_one_is_ground_state_squared() {
        let l = lat(0.6, 2, 3);
        let mu = reversible_measure(&l, 1.0).unwrap();
        let g = crate::algebra::ground_state(&l).unwrap();
        let z: f64 = g.iter().map(|v| v * v).sum();
        for (m, gv) in mu.iter().zip(g.iter()) {
            assert!((m - gv * gv / z).abs() <= 1e-12);
        }
    }

    #[test]
    fn detailed_balance_examples() {
        assert!(detailed_balance_residual(&lat(0.5, 2, 3), 1.0).unwrap() <= 1e-12);
        assert!(detailed_balance_residual(&lat(0.8, 1, 4), 2.5).unwrap() <= 1e-12);
        assert_eq!(detailed_balance_residual(&lat(0.8, 1, 1), 2.5).unwrap(), 0.0);
        let periodic = detailed_balance_residual_with(&lat(0.5, 2, 3), 1.0, BoundaryKind::Periodic).unwrap();
        assert!(periodic > 1e-6);
    }

    #[test]
    fn obstruction_values() {
        let r = product_measure_obstruction(0.5).unwrap();
        assert!((r.alpha + 9.375).abs() < 1e-12);
        assert!((r.gamma - 15.625 / 8.125).abs() < 1e-12);
        assert!((r.gap - 6.490_384_615_384_6).abs() < 1e-9);
        assert!(product_measure_obstruction(1.0).is_err());
        for k in 0..20 {
            let q = 0.05 + 0.9 * k as f64 / 19.0;
            assert!(product_measure_obstruction(q).unwrap().gap.abs() > 1e-3);
        }
    }

    #[test]
    fn transition_matrix_two_state() {
        // two-state chain with rates a, b: P_00(t) = (b + a e^{-(a+b)t}) / (a+b)
        let (a, b) = (1.3, 0.4);
        let m = DMatrix::from_row_slice(2, 2, &[-a, a, b, -b]);
        for t in [0.0, 0.1, 0.7, 5.0, 40.0] {
            let p = transition_matrix(&m, t).unwrap();
            let want = (b + a * (-(a + b) * t).exp()) / (a + b);
            assert!((p[(0, 0)] - want).abs() < 1e-13, "t={t}");
        }
    }

    #[test]
    fn sector_generator_matches_full_generator() {
        let p = QParams::new(0.45, 2).unwrap();
        let l = Lattice::new(p, 3).unwrap();
        let full = generator_matrix(&l, BoundaryKind::Closed).unwrap();
        let s = SectorSpace::new(&p, 3, 3, 1000).unwrap();
        let sm = s.generator(&p);
        for (x, cx) in s.configurations().iter().enumerate() {
            for (y, cy) in s.configurations().iter().enumerate() {
                assert_eq!(sm[(x, y)], full[(l.encode(cx), l.encode(cy))]);
            }
        }
        assert!(SectorSpace::new(&p, 8, 8, 10).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn generator_conserves_particles(two_j in 1u32..=3, len in 2usize..=4, q in 0.2_f64..=1.0) {
            let l = lat(q, two_j, len);
            prop_assume!(l.dim() <= 256);
            let m = generator_matrix(&l, BoundaryKind::Closed).unwrap();
            let totals: Vec<u32> = l.configurations().map(|c| c.iter().map(|&n| u32::from(n)).sum()).collect();
            for x in 0..l.dim() {
                for y in 0..l.dim() {
                    if totals[x] != totals[y] {
                        prop_assert_eq!(m[(x, y)], 0.0);
                    }
                }
            }
        }

        #[test]
        fn rates_vanish_exactly_when_blocked(two_j in 1u8..=4, a in 0u8..=4, b in 0u8..=4, q in 0.1_f64..=1.0) {
            prop_assume!(a <= two_j && b <= two_j);
            let p = QParams::new(q, u32::from(two_j)).unwrap();
            prop_assert_eq!(rate_right(a, b, &p) == 0.0, a == 0 || b == two_j);
            prop_assert_eq!(rate_left(a, b, &p) == 0.0, b == 0 || a == two_j);
        }
    }
}
