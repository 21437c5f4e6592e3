//! Error function and its inverse.

use crate::error::{Error, Result};

pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

const ERF_INV_TOL: f64 = 1e-12;

/// Inverse error function on `(-1, 1)` by bracketed Newton iteration on `erf`.
pub fn erf_inv(p: f64) -> Result<f64> {
    if !(p > -1.0 && p < 1.0) {
        return Err(Error::InvalidArgument(format!("erf_inv needs p in (-1, 1), got {p}")));
    }
    if p == 0.0 {
        return Ok(0.0);
    }
    if p < 0.0 {
        return erf_inv(-p).map(|x| -x);
    }
    // erf(6) rounds to 1, so [0, 6] brackets every representable p < 1.
    let (mut lo, mut hi) = (0.0f64, 6.0f64);
    let mut x = 1.0f64.min(hi);
    for _ in 0..200 {
        let fx = erf(x) - p;
        if fx > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let slope = std::f64::consts::FRAC_2_SQRT_PI * (-x * x).exp();
        let mut next = x - fx / slope;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= ERF_INV_TOL * x.abs().max(1.0) || hi - lo <= ERF_INV_TOL {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Simpson quadrature of the defining integral, an oracle independent of libm.
    fn erf_by_quadrature(x: f64) -> f64 {
        let n = 20_000;
        let h = x / n as f64;
        let f = |t: f64| (-t * t).exp();
        let mut s = f(0.0) + f(x);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(i as f64 * h);
        }
        s * h / 3.0 * std::f64::consts::FRAC_2_SQRT_PI
    }

    #[test]
    fn erf_matches_quadrature() {
        for &x in &[0.1, 0.5, 1.0, 1.821_386_4, 2.5] {
            assert!((erf(x) - erf_by_quadrature(x)).abs() < 1e-13, "x = {x}");
        }
    }

    #[test]
    fn erf_inv_of_099() {
        // Bisection on the quadrature oracle.
        let (mut lo, mut hi) = (0.0, 4.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if erf_by_quadrature(mid) < 0.99 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let x = erf_inv(0.99).unwrap();
        assert!((x - 0.5 * (lo + hi)).abs() < 1e-10);
        assert!((x - 1.821_386_367_718_449_6).abs() < 1e-10);
    }

    #[test]
    fn erf_inv_roundtrip_and_symmetry() {
        for i in 1..200 {
            let p = -0.995 + i as f64 * 0.01;
            let x = erf_inv(p).unwrap();
            assert!((erf(x) - p).abs() < 1e-12, "p = {p}, x = {x}");
            assert_eq!(erf_inv(-p).unwrap(), -x);
        }
        assert!((erf(erf_inv(1.0 - 1e-15).unwrap()) - (1.0 - 1e-15)).abs() < 1e-15);
    }

    #[test]
    fn erf_inv_domain() {
        assert!(erf_inv(1.0).is_err());
        assert!(erf_inv(-1.0).is_err());
        assert!(erf_inv(f64::NAN).is_err());
        assert_eq!(erf_inv(0.0).unwrap(), 0.0);
    }
}
