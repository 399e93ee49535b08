//! The single dual walker: left rate `q^{2j}[2j]_q`, right rate `q^{-2j}[2j]_q`.
//! Its displacement law is a Skellam law written with scaled Bessel functions,
//! `P(n) = e^{-[4j] t} q^{-2jn} I_{|n|}(2[2j] t)`.

use crate::analytics::bessel::ln_bessel_i_scaled;
use crate::qcalc::QParams;

/// The kernel reaches out to the first displacement whose probability is below this.
const TAIL: f64 = 1e-17;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkerLaw {
    pub params: QParams,
    pub left_rate: f64,
    pub right_rate: f64,
}

/// Displacement law at a fixed time, stored as log-probabilities on
/// `-reach..=reach`. Beyond `reach` on the right every probability is below
/// `1e-17`, and on the left the law is smaller still (`P(-n) = q^{4jn} P(n)`).
/// Keeping logs lets tilted sums such as `sum_n c^n P(n)` with `c > 1` be taken
/// term by term without underflow.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    reach: i64,
    ln_p: Vec<f64>,
}

impl Kernel {
    pub fn reach(&self) -> i64 {
        self.reach
    }

    /// `ln P(n)`; `-inf` outside the stored range.
    pub fn ln_prob(&self, n: i64) -> f64 {
        if n.abs() > self.reach {
            f64::NEG_INFINITY
        } else {
            self.ln_p[(n + self.reach) as usize]
        }
    }

    pub fn prob(&self, n: i64) -> f64 {
        self.ln_prob(n).exp()
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.ln_p.iter().enumerate().map(move |(k, &l)| (k as i64 - self.reach, l.exp()))
    }

    pub fn total(&self) -> f64 {
        self.iter().map(|(_, p)| p).sum()
    }

    /// `E_0[f(x(t))]` over the stored range.
    pub fn expect(&self, mut f: impl FnMut(i64) -> f64) -> f64 {
        self.iter().map(|(n, p)| if p == 0.0 { 0.0 } else { p * f(n) }).sum()
    }

    /// `E_0[c(x) exp(w(x))]` with the weight `exp(w)` folded into the log-probability.
    pub fn expect_tilted(&self, mut c: impl FnMut(i64) -> f64, mut w: impl FnMut(i64) -> f64) -> f64 {
        (-self.reach..=self.reach)
            .map(|n| {
                let cn = c(n);
                if cn == 0.0 {
                    0.0
                } else {
                    cn * (self.ln_prob(n) + w(n)).exp()
                }
            })
            .sum()
    }
}

impl WalkerLaw {
    pub fn new(params: QParams) -> Self {
        let j = params.j();
        let b = params.bracket(2.0 * j);
        Self { params, left_rate: params.pow(2.0 * j) * b, right_rate: params.pow(-2.0 * j) * b }
    }

    /// `left + right = [4j]_q`.
    pub fn total_rate(&self) -> f64 {
        self.left_rate + self.right_rate
    }

    /// Mean velocity `[2j]_q (q^{-2j} - q^{2j})`.
    pub fn drift(&self) -> f64 {
        self.right_rate - self.left_rate
    }

    /// Bessel argument `2 [2j]_q t = 2 sqrt(left right) t`.
    pub fn bessel_argument(&self, t: f64) -> f64 {
        2.0 * self.params.bracket(2.0 * self.params.j()) * t
    }

    fn ln_prefactor(&self, n: i64, t: f64) -> f64 {
        // -[4j] t + x (undoing the Bessel scaling) - 2jn ln q
        -self.total_rate() * t + self.bessel_argument(t) - 2.0 * self.params.j() * n as f64 * self.params.q().ln()
    }

    /// `P(x(t) = x | x(0) = i)`.
    pub fn pmf(&self, i: i64, x: i64, t: f64) -> f64 {
        assert!(t >= 0.0, "time must be nonnegative");
        let n = x - i;
        if t == 0.0 {
            return if n == 0 { 1.0 } else { 0.0 };
        }
        let order = n.unsigned_abs() as usize;
        let ln_ive = ln_bessel_i_scaled(order, self.bessel_argument(t))[order];
        (self.ln_prefactor(n, t) + ln_ive).exp()
    }

    /// Displacement kernel at time `t`.
    pub fn kernel(&self, t: f64) -> Kernel {
        assert!(t >= 0.0, "time must be nonnegative");
        if t == 0.0 {
            return Kernel { reach: 0, ln_p: vec![0.0] };
        }
        let x = self.bessel_argument(t);
        let mut reach = (self.right_rate * t + 10.0 * (self.total_rate() * t + 1.0).sqrt()) as usize + 20;
        loop {
            let ln_ive = ln_bessel_i_scaled(reach, x);
            let r = reach as i64;
            let ln_p: Vec<f64> = (-r..=r)
                .map(|n| self.ln_prefactor(n, t) + ln_ive[n.unsigned_abs() as usize])
                .collect();
            if ln_p[2 * reach] < TAIL.ln() {
                let mut hi = r;
                while hi > 0 && ln_p[(hi + r - 1) as usize] < TAIL.ln() {
                    hi -= 1;
                }
                let ln_p = ln_p[(r - hi) as usize..=(r + hi) as usize].to_vec();
                return Kernel { reach: hi, ln_p };
            }
            reach *= 2;
        }
    }
}
