//! Float helpers routed through `libm` so results are identical with and without `std`.

pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

pub(crate) fn pow(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

pub(crate) fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

/// Binomial coefficient, zero outside `0 <= k <= n`.
pub(crate) fn binomial(n: u32, k: i64) -> u128 {
    if k < 0 || k > n as i64 {
        return 0;
    }
    let k = k as u32;
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // exact at every step: acc * (n - i) is divisible by (i + 1)
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}
