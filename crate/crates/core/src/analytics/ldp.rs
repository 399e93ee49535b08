//! Large deviations of the dual walker: `P(x(t) ~ xt) ~ exp(-t I(x))`.

use crate::analytics::moments::growth_base;
use crate::error::{Error, Result};
use crate::qcalc::QParams;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// `I(x) = [4j] - sqrt(x^2 + 4[2j]^2) + x log(q^{2j} (x/(2[2j]) + sqrt((x/(2[2j]))^2 + 1)))`.
pub fn ldp_rate(x: f64, params: &QParams) -> f64 {
    let j = params.j();
    let b = params.bracket(2.0 * j);
    params.bracket(4.0 * j) - x.hypot(2.0 * b) + x * (2.0 * j * params.q().ln() + (x / (2.0 * b)).asinh())
}

/// `Lambda(z) = [2j]((e^z - 1) q^{-2j} + (e^{-z} - 1) q^{2j})`.
pub fn cumulant(z: f64, params: &QParams) -> f64 {
    let j = params.j();
    params.bracket(2.0 * j) * (z.exp_m1() * params.pow(-2.0 * j) + (-z).exp_m1() * params.pow(2.0 * j))
}

/// Maximizer of a unimodal `f` on `[a, b]`, to an interval of width `tol`.
pub fn golden_max(mut f: impl FnMut(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// `sup_z (zx - Lambda(z))` by golden-section search over `z`.
pub fn legendre_numeric(x: f64, params: &QParams) -> f64 {
    let j = params.j();
    let b = params.bracket(2.0 * j);
    let span = 2.0 * j * params.q().ln().abs() + (x.abs() / (2.0 * b)).asinh() + 5.0;
    golden_max(|z| z * x - cumulant(z, params), -span, span, 1e-12).1
}

/// Upper end of the search interval: drift plus twenty jump intensities `[4j]`.
pub fn search_limit(params: &QParams) -> f64 {
    let j = params.j();
    let b = params.bracket(2.0 * j);
    b * (params.pow(-2.0 * j) - params.pow(2.0 * j)) + 20.0 * params.bracket(4.0 * j)
}

fn optimize_on_half_line(f: impl FnMut(f64) -> f64, params: &QParams, what: &str) -> Result<(f64, f64)> {
    let hi = search_limit(params);
    let tol = 1e-8;
    let (x, v) = golden_max(f, 0.0, hi, tol);
    if x > hi - 2.0 * tol {
        return Err(Error::Numeric(format!(
            "{what}: optimum not bracketed in [0, {hi:.6e}], search ended at x = {x:.6e} with value {v:.6e}"
        )));
    }
    Ok((x, v))
}

/// `sup_{x >= 0} {x log M_q - I(x)} - inf_{x >= 0} I(x)`.
pub fn growth_rate(mu: &[f64], params: &QParams) -> Result<f64> {
    let ln_m = growth_base(mu, params)?.ln();
    let (_, sup) = optimize_on_half_line(|x| x * ln_m - ldp_rate(x, params), params, "sup of x log M_q - I(x)")?;
    let (_, neg_inf) = optimize_on_half_line(|x| -ldp_rate(x, params), params, "inf of I(x)")?;
    Ok(sup + neg_inf)
}
