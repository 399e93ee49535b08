//! Exponentially scaled modified Bessel functions `e^{-x} I_n(x)` of integer order.
//!
//! Small arguments (`x <= 30`) use the power series term by term. Larger
//! arguments use Miller's downward recurrence normalized by
//! `I_0 + 2 sum_{k>=1} I_k = e^x`.

const SERIES_LIMIT: f64 = 30.0;

/// `e^{-x} I_n(x)` for `n = 0..=nmax`, `x >= 0`.
pub fn bessel_i_scaled(nmax: usize, x: f64) -> Vec<f64> {
    ln_bessel_i_scaled(nmax, x).into_iter().map(f64::exp).collect()
}

/// `ln(e^{-x} I_n(x))` for `n = 0..=nmax`; `-inf` where the value is zero.
/// Stays finite far past the point where the value itself underflows.
pub fn ln_bessel_i_scaled(nmax: usize, x: f64) -> Vec<f64> {
    assert!(x >= 0.0 && x.is_finite(), "Bessel argument must be finite and nonnegative");
    if x == 0.0 {
        let mut out = vec![f64::NEG_INFINITY; nmax + 1];
        out[0] = 0.0;
        return out;
    }
    if x <= SERIES_LIMIT {
        series(nmax, x)
    } else {
        miller(nmax, x)
    }
}

/// `e^{-x} sum_k (x/2)^{2k+n} / (k! (k+n)!)`, leading term kept in log form.
fn series(nmax: usize, x: f64) -> Vec<f64> {
    let half = x / 2.0;
    let q = half * half;
    let mut ln_first = Compensated::new(-x);
    let mut out = Vec::with_capacity(nmax + 1);
    for n in 0..=nmax {
        if n > 0 {
            ln_first.add(half.ln() - (n as f64).ln());
        }
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 0usize;
        loop {
            k += 1;
            term *= q / (k as f64 * (k + n) as f64);
            sum += term;
            if term < 1e-17 * sum {
                break;
            }
        }
        out.push(ln_first.value() + sum.ln());
    }
    out
}

/// Miller's method on the ratios `r_k = I_{k+1}/I_k`, from
/// `r_{k-1} = 1 / (2k/x + r_k)` started at zero far above `nmax`, with
/// `I_0` fixed by `I_0 (1 + 2 sum_{k>=1} prod_{m<k} r_m) = e^x`.
fn miller(nmax: usize, x: f64) -> Vec<f64> {
    let top = nmax + (120.0 * (x + 1.0)).sqrt() as usize + 40;
    let mut ratio = vec![0.0; top];
    let mut r = 0.0;
    for k in (1..=top).rev() {
        r = 1.0 / (2.0 * k as f64 / x + r);
        ratio[k - 1] = r;
    }
    let mut norm = 1.0;
    let mut prod = 1.0;
    for &rk in &ratio {
        prod *= rk;
        if prod < 1e-300 {
            break;
        }
        norm += 2.0 * prod;
    }
    let mut out = Vec::with_capacity(nmax + 1);
    let mut acc = Compensated::new(-norm.ln());
    for rk in ratio.iter().take(nmax + 1) {
        out.push(acc.value());
        acc.add(rk.ln());
    }
    out
}

/// Neumaier summation; the running log sums reach `1e5` for large orders.
struct Compensated {
    sum: f64,
    err: f64,
}

impl Compensated {
    fn new(x: f64) -> Self {
        Self { sum: x, err: 0.0 }
    }

    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.err += (self.sum - t) + x;
        } else {
            self.err += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.err
    }
}
