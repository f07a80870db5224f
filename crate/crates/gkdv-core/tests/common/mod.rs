//! Shared independent oracles for the integration tests. Everything here is
//! deliberately implemented without touching the library's spectral path:
//! adaptive quadrature, RK4 shooting, and log-log fits.

#![allow(dead_code)]

/// Adaptive Simpson quadrature with absolute tolerance `tol`.
///
/// The first `MIN_DEPTH` levels split unconditionally: narrow-support
/// integrands on wide intervals would otherwise satisfy the error estimate
/// with zero samples inside the support.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    const MAX_DEPTH: u32 = 48;
    const MIN_DEPTH: u32 = 12;
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        let may_accept = depth <= MAX_DEPTH - MIN_DEPTH;
        if depth == 0 || (may_accept && delta.abs() <= 15.0 * tol) {
            left + right + delta / 15.0
        } else {
            recurse(f, a, fa, m, fm, left, lm, flm, 0.5 * tol, depth - 1)
                + recurse(f, m, fm, b, fb, right, rm, frm, 0.5 * tol, depth - 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, m, fm) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, m, fm, tol, MAX_DEPTH)
}

/// Shooting oracle for the traveling-wave profile equation
/// `phi'' = c phi - phi^{alpha+1} / (alpha+1)`, `phi(0) = a`, `phi'(0) = 0`.
/// Bisects on the homoclinic amplitude: overshooting trajectories cross
/// zero, undershooting ones turn back up.
pub fn shooting_amplitude(alpha: f64, c: f64) -> f64 {
    let classify = |a: f64| -> i32 {
        let rhs = |phi: f64, dphi: f64| -> (f64, f64) {
            let p = if phi > 0.0 {
                phi.powf(alpha + 1.0) / (alpha + 1.0)
            } else {
                -(-phi).powf(alpha + 1.0) / (alpha + 1.0)
            };
            (dphi, c * phi - p)
        };
        let (mut phi, mut dphi) = (a, 0.0f64);
        let h = 1e-4;
        for _ in 0..4_000_000 {
            let (k1p, k1d) = rhs(phi, dphi);
            let (k2p, k2d) = rhs(phi + 0.5 * h * k1p, dphi + 0.5 * h * k1d);
            let (k3p, k3d) = rhs(phi + 0.5 * h * k2p, dphi + 0.5 * h * k2d);
            let (k4p, k4d) = rhs(phi + h * k3p, dphi + h * k3d);
            phi += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
            dphi += h / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d);
            if phi < 0.0 {
                return 1;
            }
            if dphi > 0.0 {
                return -1;
            }
            if phi < 1e-14 {
                return 0;
            }
        }
        0
    };
    // generous bracket around the expected scale
    let scale = (c * (alpha + 1.0) * (alpha + 2.0) / 2.0).powf(1.0 / alpha);
    let mut lo = 0.5 * scale;
    let mut hi = 2.0 * scale;
    assert!(classify(lo) <= 0, "shooting bracket low end must undershoot");
    assert!(classify(hi) >= 0, "shooting bracket high end must overshoot");
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if classify(mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Least-squares slope of log(val) against log(k).
pub fn log_log_slope(ks: &[f64], vals: &[f64]) -> f64 {
    assert_eq!(ks.len(), vals.len());
    let pts: Vec<(f64, f64)> = ks
        .iter()
        .zip(vals)
        .filter(|(_, &v)| v > 0.0)
        .map(|(&k, &v)| (k.ln(), v.ln()))
        .collect();
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// Binomial coefficient as f64.
pub fn binomial(n: u32, k: u32) -> f64 {
    let mut acc = 1.0;
    for i in 0..k {
        acc *= (n - i) as f64 / (i + 1) as f64;
    }
    acc
}
