//! Propagation-of-regularity instrumentation: the two-parameter cutoff
//! family, moving-window high-order energies, the local-smoothing space-time
//! integral, and one-sided-regular data generation.

use std::sync::Arc;

use crate::dynamics::{simulate, ModelParams, Scheme, Trajectory};
use crate::error::{Error, Result};
use crate::reference::cazenave_naumkin_data;
use crate::spectral::{Field, SpectralGrid};

/// C^3-matched smoothstep on [0, 1]: S(0) = 0, S(1) = 1, derivatives 1..3
/// vanish at both ends.
fn smoothstep(y: f64) -> f64 {
    if y <= 0.0 {
        0.0
    } else if y >= 1.0 {
        1.0
    } else {
        let y4 = y * y * y * y;
        y4 * (35.0 - 84.0 * y + 70.0 * y * y - 20.0 * y * y * y)
    }
}

fn smoothstep_d1(y: f64) -> f64 {
    if y <= 0.0 || y >= 1.0 {
        0.0
    } else {
        let y3 = y * y * y;
        y3 * (140.0 - 420.0 * y + 420.0 * y * y - 140.0 * y3)
    }
}

fn smoothstep_d2(y: f64) -> f64 {
    if y <= 0.0 || y >= 1.0 {
        0.0
    } else {
        let y2 = y * y;
        y2 * (420.0 - 1680.0 * y + 2100.0 * y2 - 840.0 * y2 * y)
    }
}

/// Integral of the smoothstep: P(y) = int_0^y S, with P(1) = 1/2.
fn smoothstep_int(y: f64) -> f64 {
    if y <= 0.0 {
        0.0
    } else if y >= 1.0 {
        0.5 + (y - 1.0) // the caller never needs the linear tail, kept exact anyway
    } else {
        let y5 = y.powi(5);
        y5 * (7.0 - 14.0 * y + 10.0 * y * y - 2.5 * y * y * y)
    }
}

/// The smooth nondecreasing window chi_{eps,b}: 0 left of eps, 1 right of
/// b - eps, with a constant-slope core on [2 eps, b - 2 eps].
///
/// chi' has exact plateau height `1 / (b - 4 eps + w)` with ramp width
/// `w = eps / 4`; the plateau interval is the full `[2 eps, b - 2 eps]`.
/// (A smooth chi' cannot reach `1 / (b - 4 eps)` there: the total rise is
/// `int chi' = 1`, and the plateau bound alone would already use all of it.)
#[derive(Clone, Copy, Debug)]
pub struct CutoffFamily {
    pub eps: f64,
    pub b: f64,
    /// ramp width of chi' inside [eps, 2 eps] and [b - 2 eps, b - eps]
    pub ramp: f64,
    /// plateau height of chi'
    pub plateau: f64,
}

impl CutoffFamily {
    /// Exact ratio between the achieved plateau and the target `1/(b - 4 eps)`.
    pub fn plateau_ratio(&self) -> f64 {
        self.plateau * (self.b - 4.0 * self.eps)
    }

    /// chi(x)
    pub fn eval(&self, x: f64) -> f64 {
        let CutoffFamily { eps, b, ramp: w, plateau: h } = *self;
        let rise_start = 2.0 * eps - w;
        let fall_start = b - 2.0 * eps;
        if x <= rise_start {
            0.0
        } else if x < 2.0 * eps {
            h * w * smoothstep_int((x - rise_start) / w)
        } else if x <= fall_start {
            h * (0.5 * w + (x - 2.0 * eps))
        } else if x < fall_start + w {
            let y = (x - fall_start) / w;
            // integral of the falling ramp h * S(1 - y)
            h * (0.5 * w + (fall_start - 2.0 * eps)) + h * w * (0.5 - smoothstep_int(1.0 - y))
        } else {
            1.0
        }
    }

    /// chi'(x)
    pub fn d1(&self, x: f64) -> f64 {
        let CutoffFamily { eps, b, ramp: w, plateau: h } = *self;
        let rise_start = 2.0 * eps - w;
        let fall_start = b - 2.0 * eps;
        if x <= rise_start || x >= fall_start + w {
            0.0
        } else if x < 2.0 * eps {
            h * smoothstep((x - rise_start) / w)
        } else if x <= fall_start {
            h
        } else {
            h * smoothstep(1.0 - (x - fall_start) / w)
        }
    }

    /// chi''(x)
    pub fn d2(&self, x: f64) -> f64 {
        let CutoffFamily { eps, b, ramp: w, plateau: h } = *self;
        let rise_start = 2.0 * eps - w;
        let fall_start = b - 2.0 * eps;
        if x <= rise_start || x >= fall_start + w {
            0.0
        } else if x < 2.0 * eps {
            h / w * smoothstep_d1((x - rise_start) / w)
        } else if x <= fall_start {
            0.0
        } else {
            -h / w * smoothstep_d1(1.0 - (x - fall_start) / w)
        }
    }

    /// chi'''(x)
    pub fn d3(&self, x: f64) -> f64 {
        let CutoffFamily { eps, b, ramp: w, plateau: h } = *self;
        let rise_start = 2.0 * eps - w;
        let fall_start = b - 2.0 * eps;
        if x <= rise_start || x >= fall_start + w {
            0.0
        } else if x < 2.0 * eps {
            h / (w * w) * smoothstep_d2((x - rise_start) / w)
        } else if x <= fall_start {
            0.0
        } else {
            h / (w * w) * smoothstep_d2(1.0 - (x - fall_start) / w)
        }
    }
}

/// Builds chi_{eps,b}. Requires `b >= 5 eps`.
pub fn make_cutoff(eps: f64, b: f64) -> Result<CutoffFamily> {
    if eps.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
        return Err(Error::Config(format!("cutoff eps must be positive, got {eps}")));
    }
    if b < 5.0 * eps {
        return Err(Error::Config(format!(
            "cutoff width b = {b} violates b >= 5 eps = {}",
            5.0 * eps
        )));
    }
    let ramp = 0.25 * eps;
    let plateau = 1.0 / (b - 4.0 * eps + ramp);
    Ok(CutoffFamily { eps, b, ramp, plateau })
}

/// Quadrature of `|d^order u/dx^order|^2 chi(x + shift)` over the grid.
/// `shift = v t - x0` realizes the window moving left at speed v.
pub fn windowed_energy(u: &Field, order: u32, cut: &CutoffFamily, shift: f64) -> Result<f64> {
    let du = u.spectral_derivative(order)?;
    let grid = u.grid();
    let mut acc = 0.0;
    for (v, &x) in du.values().iter().zip(grid.x()) {
        acc += v.norm_sqr() * cut.eval(x + shift);
    }
    Ok(acc * grid.dx())
}

/// Moving-front parameters of the regularity experiment.
#[derive(Clone, Copy, Debug)]
pub struct FrontParams {
    /// regularity front at t = 0
    pub x0: f64,
    /// leftward window speed
    pub v: f64,
    /// gap between the front and the window edge
    pub eps_prime: f64,
    /// width of the local-smoothing window
    pub r_width: f64,
    /// extra one-sided regularity orders
    pub l: u32,
}

impl FrontParams {
    pub fn new(x0: f64, v: f64, eps_prime: f64, r_width: f64, l: u32) -> Result<FrontParams> {
        if v.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater)
        || eps_prime.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater)
        || r_width.partial_cmp(&eps_prime) != Some(std::cmp::Ordering::Greater)
        || l == 0
    {
            return Err(Error::Config(format!(
                "front parameters need v > 0, eps' > 0, R > eps', l >= 1 (got v = {v}, eps' = {eps_prime}, R = {r_width}, l = {l})"
            )));
        }
        Ok(FrontParams { x0, v, eps_prime, r_width, l })
    }
}

/// Trapezoid in time of the windowed spatial quadratures over
/// `[x0 + eps' - vt, x0 + R - vt]`, the window realized as the difference of
/// two cutoff evaluations.
pub fn local_smoothing_integral(
    traj: &Trajectory,
    order: u32,
    front: &FrontParams,
    cut: &CutoffFamily,
) -> Result<f64> {
    let dt = traj.slice_spacing();
    let last = traj.slices.len() - 1;
    let grid = &traj.grid;
    let mut total = 0.0;
    for (i, (t, u)) in traj.times.iter().zip(&traj.slices).enumerate() {
        let du = u.spectral_derivative(order)?;
        let shift = front.v * t - front.x0;
        let mut spatial = 0.0;
        for (v, &x) in du.values().iter().zip(grid.x()) {
            let window = cut.eval(x + shift) - cut.eval(x + shift - front.r_width);
            spatial += v.norm_sqr() * window;
        }
        spatial *= grid.dx();
        let w = if last == 0 {
            1.0
        } else if i == 0 || i == last {
            0.5
        } else {
            1.0
        };
        total += w * spatial * dt;
    }
    Ok(total)
}

/// The kink carrying exactly `H^{s + 0.6 -}` global regularity:
/// `c_k (x0 - x)_+^{s + 0.1}` under a Gaussian envelope of scale `width/8`.
/// The envelope is analytic, so in every resolved band the spectrum is the
/// endpoint singularity's power law `|k|^{-(s + 1.1)}`; the restriction to
/// `(x0, infinity)` vanishes identically. The support cut at `width` sits
/// where the envelope is ~1e-28, far below f64 resolution.
pub fn kink_profile(grid: &Arc<SpectralGrid>, x0: f64, s: u32, c_k: f64, width: f64) -> Field {
    let beta = s as f64 + 0.1;
    let d0 = width / 8.0;
    Field::from_real_fn(grid, |x| {
        let d = x0 - x;
        if d <= 0.0 || d >= width {
            0.0
        } else {
            let y = d / d0;
            c_k * d.powf(beta) * (-y * y).exp()
        }
    })
}

/// Support width of the kink used by [`one_sided_data`]: eight envelope
/// scales, where the scale is wide enough for the grid to localize the
/// singular content (>= 2.6 dx) and narrow enough that the content sits
/// above the base profile's spectral roll-off.
pub fn one_sided_kink_width(grid: &Arc<SpectralGrid>) -> f64 {
    8.0 * (2.6 * grid.dx()).max(0.26)
}

/// Data satisfying the one-sided hypothesis: an admissible lower-bounded
/// base plus a kink supported left of `x0`. Globally `H^{s + 0.6 -}` but
/// C^inf on `(x0, infinity)`. The kink amplitude is auto-sized to keep the
/// re-measured weighted lower bound at or above `1.5 lambda` (margin
/// `lambda / 2` over the admissibility threshold).
pub fn one_sided_data(
    x0: f64,
    s: u32,
    l: u32,
    grid: &Arc<SpectralGrid>,
    params: &ModelParams,
) -> Result<Field> {
    if l == 0 {
        return Err(Error::Config("need at least one extra regularity order".into()));
    }
    if s + l + 1 > grid.max_derivative_order() {
        return Err(Error::Precision(format!(
            "one-sided orders up to s + l + 1 = {} exceed the grid bound {}",
            s + l + 1,
            grid.max_derivative_order()
        )));
    }
    let width = one_sided_kink_width(grid);
    let half = grid.half_length();
    if x0 - width < -0.8 * half || x0 > 0.8 * half {
        return Err(Error::Config(format!(
            "kink support [{}, {x0}] must stay away from the periodic seam",
            x0 - width
        )));
    }
    let base = cazenave_naumkin_data(params.lambda, 0.0, grid, params.m, None)?;

    // largest c_k keeping || <x>^m kink ||_inf at 0.4 lambda
    let probe = kink_profile(grid, x0, s, 1.0, width);
    let probe_winf = probe.apply_weight(params.m as f64).linf_norm();
    if probe_winf == 0.0 {
        return Err(Error::Config("kink support contains no grid point".into()));
    }
    let c_k = 0.4 * params.lambda / probe_winf;
    let u0 = base.add(&kink_profile(grid, x0, s, c_k, width));

    let lower = u0
        .apply_weight(params.m as f64)
        .values()
        .iter()
        .map(|v| v.norm())
        .fold(f64::INFINITY, f64::min);
    if lower < 1.5 * params.lambda {
        return Err(Error::Config(format!(
            "kink destroyed the admissibility margin (lower bound {lower:.3e} < 1.5 lambda); reduce c_k"
        )));
    }
    Ok(u0)
}

/// Per-order outcome of the moving-window measurement.
#[derive(Clone, Debug)]
pub struct WindowedOrderSeries {
    pub order: u32,
    /// windowed energy per slice, window moving left at speed v
    pub series: Vec<f64>,
    /// recorded bound: sup over slices
    pub c_star: f64,
    /// full-line seminorm ||d^order u0||_2^2 at t = 0
    pub global_seminorm: f64,
}

/// Outcome of the desk-scale propagation-of-regularity experiment.
#[derive(Clone, Debug)]
pub struct RegularityReport {
    /// proxy construction order (data is one-sided H^{proxy_s + l})
    pub proxy_s: u32,
    pub front: FrontParams,
    /// cutoff parameters used for the windows
    pub window_eps: f64,
    pub window_b: f64,
    pub times: Vec<f64>,
    /// windowed orders proxy_s + 1 .. proxy_s + j_max
    pub orders: Vec<WindowedOrderSeries>,
    /// local smoothing integral at order proxy_s + l + 1
    pub c_star_star: f64,
    /// the same integral with doubled slice count (quadrature stability)
    pub c_star_star_refined: f64,
    /// energy at order proxy_s + 1 in a static window strictly left of x0,
    /// at t = 0 and at t = T: the influx of regularity empties it
    pub control_initial: f64,
    pub control_final: f64,
}

/// Composes one-sided data, simulation, and the windowed functionals.
///
/// `proxy_s` is the desk-scale construction order (the full-order
/// `params.s` stays recorded in `params`); windowed orders run from
/// `proxy_s + 1` to `proxy_s + j_max` with `j_max <= front.l`.
pub fn regularity_experiment(
    front: &FrontParams,
    params: &ModelParams,
    grid: &Arc<SpectralGrid>,
    proxy_s: u32,
    t_final: f64,
    dt: f64,
    slices: usize,
) -> Result<RegularityReport> {
    let u0 = one_sided_data(front.x0, proxy_s, front.l, grid, params)?;
    let traj = simulate(&u0, t_final, dt, params, slices, Scheme::Etdrk4)?;

    // semi-infinite moving window: chi rises to 1 just right of the front
    // and its unit plateau extends to the containment boundary
    let eps = front.eps_prime;
    let b = 5.0 * eps;
    let cut = make_cutoff(eps, b)?;

    let mut orders = Vec::new();
    for j in 1..=front.l {
        let order = proxy_s + j;
        let mut series = Vec::with_capacity(traj.slices.len());
        for (t, u) in traj.times.iter().zip(&traj.slices) {
            series.push(windowed_energy(u, order, &cut, front.v * t - front.x0)?);
        }
        let c_star = series.iter().cloned().fold(0.0f64, f64::max);
        let d0 = traj.slices[0].spectral_derivative(order)?.l2_norm();
        orders.push(WindowedOrderSeries {
            order,
            series,
            c_star,
            global_seminorm: d0 * d0,
        });
    }

    let smoothing_order = proxy_s + front.l + 1;
    let c_star_star = local_smoothing_integral(&traj, smoothing_order, front, &cut)?;
    let refined = simulate(&u0, t_final, dt, params, slices * 2, Scheme::Etdrk4)?;
    let c_star_star_refined = local_smoothing_integral(&refined, smoothing_order, front, &cut)?;

    // control: static window strictly left of x0, covering the kink support
    // but vanishing before x0 itself
    let kink_width = one_sided_kink_width(grid);
    let fall = 0.25 * kink_width;
    let rise = 0.5 * kink_width;
    let left_edge = front.x0 - 2.0 * kink_width;
    let window = move |x: f64| {
        smoothstep((x - left_edge) / rise) * smoothstep((front.x0 - fall - x) / fall)
    };
    let order0 = proxy_s + 1;
    let control = |u: &Field| -> Result<f64> {
        let du = u.spectral_derivative(order0)?;
        let mut acc = 0.0;
        for (v, &x) in du.values().iter().zip(grid.x()) {
            acc += v.norm_sqr() * window(x);
        }
        Ok(acc * grid.dx())
    };
    let control_initial = control(&traj.slices[0])?;
    let control_final = control(traj.slices.last().unwrap())?;

    Ok(RegularityReport {
        proxy_s,
        front: *front,
        window_eps: eps,
        window_b: b,
        times: traj.times.clone(),
        orders,
        c_star_star,
        c_star_star_refined,
        control_initial,
        control_final,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::admissibility_check;
    use crate::dynamics::Sign;

    #[test]
    fn cutoff_rejects_bad_parameters() {
        assert!(make_cutoff(0.0, 1.0).is_err());
        assert!(make_cutoff(-0.1, 1.0).is_err());
        assert!(make_cutoff(0.3, 1.0).is_err());
        assert!(make_cutoff(0.2, 1.0).is_ok());
    }

    #[test]
    fn cutoff_endpoint_values() {
        let c = make_cutoff(0.1, 1.0).unwrap();
        assert_eq!(c.eval(0.0), 0.0);
        assert_eq!(c.eval(1.0), 1.0);
        assert_eq!(c.eval(0.09), 0.0);
        assert_eq!(c.eval(0.91), 1.0);
    }

    fn dense_check(eps: f64, b: f64) {
        let c = make_cutoff(eps, b).unwrap();
        let samples = ((b + 2.0 * eps) * 1e4) as usize;
        let lo = -eps;
        let hi = b + eps;
        let target = 1.0 / (b - 4.0 * eps);
        let design = c.plateau;
        let mut min_plateau = f64::INFINITY;
        let mut prev = c.eval(lo);
        for i in 0..=samples {
            let x = lo + (hi - lo) * i as f64 / samples as f64;
            let v = c.eval(x);
            let d = c.d1(x);
            assert!(d >= 0.0, "chi' must be nonnegative at {x}");
            assert!(v + 1e-12 >= prev, "chi must be nondecreasing at {x}");
            prev = v;
            if x < eps {
                assert_eq!(v, 0.0, "chi must vanish left of eps at {x}");
                assert_eq!(d, 0.0);
            }
            if x > b - eps {
                assert_eq!(v, 1.0, "chi must be 1 right of b - eps at {x}");
            }
            if !(eps..=b - eps).contains(&x) {
                assert_eq!(d, 0.0, "supp chi' must lie in [eps, b - eps], violated at {x}");
            }
            if (2.0 * eps..=b - 2.0 * eps).contains(&x) {
                min_plateau = min_plateau.min(d);
            }
        }
        // the construction's exact plateau on the full inner interval
        assert!(
            min_plateau >= design * (1.0 - 1e-12),
            "measured plateau {min_plateau} below design height {design}"
        );
        // documented proximity to the (infeasible) target 1/(b - 4 eps)
        assert!(min_plateau >= 0.94 * target, "plateau ratio {}", min_plateau / target);

        // finite-difference agreement of the closed-form derivatives
        let h = 1e-6 * eps;
        for i in 0..200 {
            let x = lo + (hi - lo) * (i as f64 + 0.5) / 200.0;
            let fd1 = (c.eval(x + h) - c.eval(x - h)) / (2.0 * h);
            assert!((fd1 - c.d1(x)).abs() <= 1e-5 * (1.0 + c.d1(x).abs()), "d1 mismatch at {x}");
            let fd2 = (c.d1(x + h) - c.d1(x - h)) / (2.0 * h);
            assert!((fd2 - c.d2(x)).abs() <= 1e-3 * (1.0 + c.d2(x).abs()), "d2 mismatch at {x}");
            let fd3 = (c.d2(x + h) - c.d2(x - h)) / (2.0 * h);
            assert!((fd3 - c.d3(x)).abs() <= 1e-2 * (1.0 + c.d3(x).abs()), "d3 mismatch at {x}");
        }
    }

    #[test]
    fn cutoff_properties_dense_sampling() {
        dense_check(0.1, 1.0);
        dense_check(0.5, 5.0);
        dense_check(0.05, 1.25);
    }

    #[test]
    fn cutoff_domination_constant_positive() {
        // chi_{eps/2,b} >= c (chi_{eps,b} + chi'_{eps,b}) on the support of
        // the denominator
        for (eps, b) in [(0.1, 1.0), (0.5, 5.0)] {
            let full = make_cutoff(eps, b).unwrap();
            let half = make_cutoff(0.5 * eps, b).unwrap();
            let mut c_min = f64::INFINITY;
            let samples = 200_000;
            for i in 0..=samples {
                let x = -eps + (b + 2.0 * eps) * i as f64 / samples as f64;
                let denom = full.eval(x) + full.d1(x);
                if denom > 1e-12 {
                    c_min = c_min.min(half.eval(x) / denom);
                }
            }
            assert!(c_min > 0.0, "domination constant must be positive, got {c_min}");
        }
    }

    #[test]
    fn windowed_energy_zero_field() {
        let grid = SpectralGrid::new(128, 10.0).unwrap();
        let cut = make_cutoff(0.5, 4.0).unwrap();
        let z = Field::zero(&grid);
        assert_eq!(windowed_energy(&z, 3, &cut, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn windowed_energy_saturates_to_global_seminorm() {
        let grid = SpectralGrid::new(256, 10.0).unwrap();
        let u = Field::from_real_fn(&grid, |x| (-0.5 * x * x).exp() * (2.0 * x).cos());
        let cut = make_cutoff(0.05, 0.5).unwrap();
        // window shifted so chi = 1 across the whole occupied domain
        let energy = windowed_energy(&u, 2, &cut, 25.0).unwrap();
        let global = u.spectral_derivative(2).unwrap().l2_norm().powi(2);
        assert!((energy - global).abs() <= 1e-10 * global);
    }

    #[test]
    fn windowed_energy_monotone_in_window() {
        let grid = SpectralGrid::new(256, 10.0).unwrap();
        let u = Field::from_real_fn(&grid, |x| (-0.2 * x * x).exp());
        let cut = make_cutoff(0.5, 4.0).unwrap();
        // chi(x + s) is pointwise nondecreasing in s, so the energy is too
        let mut prev = 0.0;
        for i in 0..20 {
            let shift = -8.0 + i as f64;
            let e = windowed_energy(&u, 1, &cut, shift).unwrap();
            assert!(e + 1e-14 >= prev, "windowed energy must grow with the window");
            prev = e;
        }
    }

    #[test]
    fn local_smoothing_zero_trajectory_and_additivity() {
        let grid = SpectralGrid::new(128, 10.0).unwrap();
        let p = ModelParams::new(0.5, Sign::Plus, 0.1, 1e9).unwrap();
        let z = Field::zero(&grid);
        let traj = simulate(&z, 0.2, 1e-2, &p, 4, Scheme::Etdrk4).unwrap();
        let front = FrontParams::new(0.0, 1.0, 0.5, 4.0, 1).unwrap();
        let cut = make_cutoff(0.5, 4.0).unwrap();
        assert_eq!(local_smoothing_integral(&traj, 3, &front, &cut).unwrap(), 0.0);
    }

    #[test]
    fn kink_vanishes_right_of_front_and_keeps_admissibility() {
        let grid = SpectralGrid::new(2048, 32.0 * std::f64::consts::PI).unwrap();
        let p = ModelParams::new(0.5, Sign::Plus, 0.1, 1e9).unwrap();
        let x0 = 0.0;
        let u0 = one_sided_data(x0, 4, 2, &grid, &p).unwrap();
        let base = cazenave_naumkin_data(p.lambda, 0.0, &grid, p.m, None).unwrap();
        let kink = u0.sub(&base);
        for (v, &x) in kink.values().iter().zip(grid.x()) {
            if x > x0 {
                assert_eq!(v.re, 0.0, "kink must vanish right of x0, found {} at {x}", v.re);
            }
        }
        let verdict = admissibility_check(&u0, &p).unwrap();
        assert!(verdict.lambda_pass, "one-sided data must stay admissible");
    }

    #[test]
    fn one_sided_data_rejects_seam_adjacent_front() {
        let grid = SpectralGrid::new(512, 10.0).unwrap();
        let p = ModelParams::new(0.5, Sign::Plus, 0.1, 1e9).unwrap();
        assert!(one_sided_data(9.5, 4, 2, &grid, &p).is_err());
    }
}
