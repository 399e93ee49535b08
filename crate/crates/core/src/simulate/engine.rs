//! Exact Gillespie evolution over a per-bond rate table.

use crate::error::{domain, Result};
use crate::generator::{rate_left, rate_right, BoundaryKind, Configuration, Direction};
use crate::qcalc::QParams;
use crate::simulate::fenwick::Fenwick;
use crate::simulate::rng::RngStream;

const REBUILD_EVERY: u64 = 1 << 16;

/// Right and left hopping rates for every pair `(eta_i, eta_{i+1})`.
#[derive(Debug, Clone)]
pub struct RateTable {
    side: usize,
    right: Vec<f64>,
    left: Vec<f64>,
}

impl RateTable {
    pub fn new(params: &QParams) -> Self {
        let side = params.local_dim();
        let mut right = vec![0.0; side * side];
        let mut left = vec![0.0; side * side];
        for a in 0..side {
            for b in 0..side {
                right[a * side + b] = rate_right(a as u8, b as u8, params);
                left[a * side + b] = rate_left(a as u8, b as u8, params);
            }
        }
        Self { side, right, left }
    }

    pub fn right(&self, a: u8, b: u8) -> f64 {
        self.right[usize::from(a) * self.side + usize::from(b)]
    }

    pub fn left(&self, a: u8, b: u8) -> f64 {
        self.left[usize::from(a) * self.side + usize::from(b)]
    }

    /// Largest total activity `right + left` of a single bond.
    pub fn max_bond_rate(&self) -> f64 {
        self.right.iter().zip(&self.left).map(|(r, l)| r + l).fold(0.0, f64::max)
    }
}

/// One jump across the bond `(bond, bond + 1)`; under a periodic boundary the
/// bond at the last site joins it to the first.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub bond: i64,
    pub direction: Direction,
}

/// Mutable state of one run.
#[derive(Debug, Clone)]
pub struct Engine {
    table: RateTable,
    boundary: BoundaryKind,
    first: i64,
    occ: Vec<u8>,
    rates: Fenwick,
    time: f64,
    /// Net rightward crossings per bond index.
    crossings: Vec<i64>,
    edge_events: u64,
    events: u64,
}

impl Engine {
    pub fn new(cfg: &Configuration, params: &QParams, boundary: BoundaryKind) -> Result<Self> {
        cfg.check(params)?;
        let n = cfg.len();
        let bonds = match boundary {
            BoundaryKind::Periodic if n < 3 => return domain("periodic boundary needs at least three sites"),
            BoundaryKind::Periodic => n,
            _ => n - 1,
        };
        let table = RateTable::new(params);
        let occ = cfg.occupations().to_vec();
        let rates: Vec<f64> = (0..bonds)
            .map(|b| {
                let (a, c) = (occ[b], occ[(b + 1) % n]);
                table.right(a, c) + table.left(a, c)
            })
            .collect();
        Ok(Self {
            table,
            boundary,
            first: cfg.first(),
            occ,
            rates: Fenwick::new(&rates),
            time: 0.0,
            crossings: vec![0; bonds],
            edge_events: 0,
            events: 0,
        })
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn events(&self) -> u64 {
        self.events
    }

    /// Events on the two outermost bonds of a truncated line.
    pub fn edge_events(&self) -> u64 {
        self.edge_events
    }

    pub fn configuration(&self) -> Configuration {
        Configuration::new(self.first, self.occ.clone()).expect("nonempty")
    }

    pub fn occupations(&self) -> &[u8] {
        &self.occ
    }

    pub fn total_rate(&self) -> f64 {
        self.rates.total()
    }

    /// Net crossings of the bond `(i - 1, i)` so far; `None` outside the window.
    pub fn current(&self, i: i64) -> Option<i64> {
        let b = i - 1 - self.first;
        if b >= 0 && (b as usize) < self.crossings.len() {
            Some(self.crossings[b as usize])
        } else if self.boundary == BoundaryKind::Periodic && i == self.first {
            self.crossings.last().copied()
        } else {
            None
        }
    }

    fn bond_rate(&self, b: usize) -> f64 {
        let n = self.occ.len();
        let (a, c) = (self.occ[b], self.occ[(b + 1) % n]);
        self.table.right(a, c) + self.table.left(a, c)
    }

    /// Runs until `t_end` and leaves the clock there; the pending waiting time
    /// is discarded, which the exponential law permits.
    pub fn run_until(&mut self, t_end: f64, rng: &mut RngStream, mut log: Option<&mut Vec<Event>>) {
        let n = self.occ.len();
        let nb = self.crossings.len();
        loop {
            let total = self.rates.total();
            if !(total > 0.0) {
                break;
            }
            let dt = rng.exponential(total);
            if self.time + dt > t_end {
                break;
            }
            self.time += dt;
            let Some(b) = self.rates.search(rng.uniform() * total) else { break };
            let (l, r) = (b, (b + 1) % n);
            let (a, c) = (self.occ[l], self.occ[r]);
            let right = self.table.right(a, c);
            let left = self.table.left(a, c);
            let dir = if rng.uniform() * (right + left) < right { Direction::Right } else { Direction::Left };
            match dir {
                Direction::Right => {
                    self.occ[l] -= 1;
                    self.occ[r] += 1;
                    self.crossings[b] += 1;
                }
                Direction::Left => {
                    self.occ[l] += 1;
                    self.occ[r] -= 1;
                    self.crossings[b] -= 1;
                }
            }
            if self.boundary == BoundaryKind::TruncatedLine && (b == 0 || b + 1 == nb) {
                self.edge_events += 1;
            }
            for k in [b.wrapping_sub(1), b, b + 1] {
                let k = if self.boundary == BoundaryKind::Periodic { k.wrapping_add(nb) % nb } else { k };
                if k < nb {
                    let v = self.bond_rate(k);
                    self.rates.set(k, v);
                }
            }
            self.events += 1;
            if self.events % REBUILD_EVERY == 0 {
                self.rates.rebuild();
            }
            if let Some(log) = log.as_deref_mut() {
                log.push(Event { time: self.time, bond: self.first + b as i64, direction: dir });
            }
        }
        self.time = self.time.max(t_end);
    }
}
