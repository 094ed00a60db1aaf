//! Factorials, binomials and small complex helpers.

use statrs::function::gamma::ln_gamma;

pub type C64 = num_complex::Complex64;

/// Largest n for which n! is computed as an exact integer.
const EXACT_FACTORIAL_MAX: u64 = 20;

pub fn factorial(n: u64) -> f64 {
    if n <= EXACT_FACTORIAL_MAX {
        (1..=n).product::<u64>() as f64
    } else {
        ln_factorial(n).exp()
    }
}

pub fn ln_factorial(n: u64) -> f64 {
    if n <= EXACT_FACTORIAL_MAX {
        ((1..=n).product::<u64>() as f64).ln()
    } else {
        ln_gamma(n as f64 + 1.0)
    }
}

/// Binomial coefficient C(n, k); zero when k > n.
pub fn binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    // exact while the running product fits in u128
    let mut acc: u128 = 1;
    for i in 0..k {
        match acc.checked_mul((n - i) as u128) {
            Some(v) => acc = v / (i as u128 + 1),
            None => return ln_binomial(n, k).exp(),
        }
    }
    acc as f64
}

pub fn ln_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn creal(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// `z^n` for a non-negative integer power, exact for n = 0 even when z = 0.
pub fn cpowi(z: C64, n: usize) -> C64 {
    let mut acc = C64::new(1.0, 0.0);
    for _ in 0..n {
        acc *= z;
    }
    acc
}
