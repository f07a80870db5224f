//! Periodic spectral substrate: grid construction, Fourier differentiation,
//! exact Airy propagation, dealiasing, and Japanese-bracket weights.
//!
//! The real line is truncated to `[-L, L)` with `n` (a power of two) uniform
//! nodes. All linear operators are diagonal Fourier multipliers and therefore
//! commute; the Airy group `U(t)` applies `exp(i k^3 t)` mode-wise, which is
//! the solution operator of `du/dt = -d^3u/dx^3` under the `d/dx -> ik`
//! convention. Fields are value-semantic; transform plans are immutable
//! per-grid state shared through `Arc`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Relative tolerance for the imaginary residue of a real-data field.
pub const REAL_TOL: f64 = 1e-12;

/// Fraction of the domain (per side) treated as the outer containment band.
const OUTER_BAND: f64 = 0.9;

/// Uniform periodic grid on `[-L, L)` with precomputed FFT plans.
pub struct SpectralGrid {
    n: usize,
    half_length: f64,
    dx: f64,
    x: Vec<f64>,
    k: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for SpectralGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralGrid")
            .field("n", &self.n)
            .field("half_length", &self.half_length)
            .finish()
    }
}

impl PartialEq for SpectralGrid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.half_length == other.half_length
    }
}

impl SpectralGrid {
    /// Builds a grid with `n` points (power of two, >= 16) on `[-half_length, half_length)`.
    pub fn new(n: usize, half_length: f64) -> Result<Arc<Self>> {
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::Config(format!(
                "grid size must be a power of two >= 16, got {n}"
            )));
        }
        if half_length.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) || !half_length.is_finite() {
            return Err(Error::Config(format!(
                "grid half-length must be positive and finite, got {half_length}"
            )));
        }
        let dx = 2.0 * half_length / n as f64;
        let x: Vec<f64> = (0..n).map(|j| -half_length + j as f64 * dx).collect();
        // Standard FFT ordering: j = 0..n/2-1, then -n/2..-1.
        let k: Vec<f64> = (0..n)
            .map(|j| {
                let j = if j < n / 2 { j as i64 } else { j as i64 - n as i64 };
                j as f64 * std::f64::consts::PI / half_length
            })
            .collect();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        Ok(Arc::new(SpectralGrid {
            n,
            half_length,
            dx,
            x,
            k,
            fwd,
            inv,
        }))
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Physical nodes `x_j = -L + j dx`.
    pub fn x(&self) -> &[f64] {
        &self.x
    }

    /// Wavenumbers `k_j = j pi / L` in FFT ordering.
    pub fn k(&self) -> &[f64] {
        &self.k
    }

    /// Largest resolvable |k| (the Nyquist magnitude).
    pub fn k_max(&self) -> f64 {
        (self.n / 2) as f64 * std::f64::consts::PI / self.half_length
    }

    /// Highest derivative order the grid supports before `(ik)^order`
    /// amplification drowns the result in roundoff.
    pub fn max_derivative_order(&self) -> u32 {
        (self.n / 4) as u32
    }

    /// Forward transform to normalized coefficients: `u_j = sum_k c_k e^{i k x_j}`.
    pub fn forward(&self, values: &[Complex64]) -> Vec<Complex64> {
        let mut buf = values.to_vec();
        self.fwd.process(&mut buf);
        let scale = 1.0 / self.n as f64;
        for c in &mut buf {
            *c *= scale;
        }
        buf
    }

    /// Inverse of [`forward`](Self::forward).
    pub fn inverse(&self, spectrum: &[Complex64]) -> Vec<Complex64> {
        let mut buf = spectrum.to_vec();
        self.inv.process(&mut buf);
        buf
    }
}

/// Complex sample vector on a [`SpectralGrid`], carrying a real-valuedness flag.
///
/// After every operation on real data the imaginary residue is checked
/// against [`REAL_TOL`] and scrubbed; if an operation genuinely produces
/// complex output the flag is dropped.
#[derive(Clone)]
pub struct Field {
    grid: Arc<SpectralGrid>,
    values: Vec<Complex64>,
    is_real: bool,
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Field")
            .field("n", &self.values.len())
            .field("is_real", &self.is_real)
            .field("l2", &self.l2_norm())
            .finish()
    }
}

impl Field {
    pub fn zero(grid: &Arc<SpectralGrid>) -> Field {
        Field {
            grid: grid.clone(),
            values: vec![Complex64::default(); grid.len()],
            is_real: true,
        }
    }

    /// Samples a real-valued function on the grid.
    pub fn from_real_fn(grid: &Arc<SpectralGrid>, f: impl Fn(f64) -> f64) -> Field {
        let values = grid.x().iter().map(|&x| Complex64::new(f(x), 0.0)).collect();
        Field {
            grid: grid.clone(),
            values,
            is_real: true,
        }
    }

    /// Samples a complex-valued function on the grid.
    pub fn from_complex_fn(grid: &Arc<SpectralGrid>, f: impl Fn(f64) -> Complex64) -> Field {
        let values = grid.x().iter().map(|&x| f(x)).collect();
        Field {
            grid: grid.clone(),
            values,
            is_real: false,
        }
    }

    pub fn from_values(grid: &Arc<SpectralGrid>, values: Vec<Complex64>, is_real: bool) -> Result<Field> {
        if values.len() != grid.len() {
            return Err(Error::Config(format!(
                "field length {} does not match grid size {}",
                values.len(),
                grid.len()
            )));
        }
        Ok(Field {
            grid: grid.clone(),
            values,
            is_real,
        }
        .sanitize_real())
    }

    /// Reconstructs a field from normalized Fourier coefficients.
    pub fn from_spectrum(grid: &Arc<SpectralGrid>, spectrum: &[Complex64], is_real: bool) -> Field {
        Field {
            grid: grid.clone(),
            values: grid.inverse(spectrum),
            is_real,
        }
        .sanitize_real()
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn is_real(&self) -> bool {
        self.is_real
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Normalized Fourier coefficients in FFT ordering.
    pub fn spectrum(&self) -> Vec<Complex64> {
        self.grid.forward(&self.values)
    }

    /// Enforces the real-data invariant: imaginary residue within
    /// `REAL_TOL * max |u|` is scrubbed; anything larger demotes the flag.
    fn sanitize_real(mut self) -> Field {
        if self.is_real {
            let max_mod = self.values.iter().map(|v| v.norm_sqr()).fold(0.0, f64::max).sqrt();
            let max_im = self.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
            if max_im <= REAL_TOL * max_mod || max_mod == 0.0 {
                for v in &mut self.values {
                    v.im = 0.0;
                }
            } else {
                self.is_real = false;
            }
        }
        self
    }

    /// Applies a diagonal Fourier multiplier `m(k)`.
    pub fn apply_multiplier(&self, m: impl Fn(f64) -> Complex64) -> Field {
        let mut hat = self.spectrum();
        for (c, &k) in hat.iter_mut().zip(self.grid.k()) {
            *c *= m(k);
        }
        Field {
            grid: self.grid.clone(),
            values: self.grid.inverse(&hat),
            is_real: self.is_real,
        }
        .sanitize_real()
    }

    /// Spectral derivative `(ik)^order`. Order 0 returns the field unchanged.
    ///
    /// For odd orders the Nyquist mode is zeroed: it has no conjugate partner
    /// and `(ik)^odd` would otherwise turn its real coefficient imaginary.
    pub fn spectral_derivative(&self, order: u32) -> Result<Field> {
        if order == 0 {
            return Ok(self.clone());
        }
        if order > self.grid.max_derivative_order() {
            return Err(Error::Precision(format!(
                "derivative order {order} exceeds grid bound n/4 = {} (n = {}); \
                 (ik)^order amplification would dominate roundoff",
                self.grid.max_derivative_order(),
                self.grid.len()
            )));
        }
        let nyquist = self.grid.k_max();
        let odd = order % 2 == 1;
        Ok(self.apply_multiplier(|k| {
            if odd && k.abs() >= nyquist {
                Complex64::default()
            } else {
                Complex64::new(0.0, k).powu(order)
            }
        }))
    }

    /// Exact Airy propagation `U(t)`: the multiplier `exp(i k^3 t)`.
    ///
    /// Unitary mode-wise, so the discrete L2 norm is preserved to roundoff
    /// and `U(s) U(t) = U(s + t)`.
    pub fn airy_propagate(&self, t: f64) -> Field {
        self.apply_multiplier(|k| Complex64::from_polar(1.0, k * k * k * t))
    }

    /// Two-thirds dealiasing: zeroes every mode with `|k| > (2/3) k_max`.
    pub fn dealias(&self) -> Field {
        let cutoff = 2.0 / 3.0 * self.grid.k_max();
        self.apply_multiplier(|k| {
            if k.abs() > cutoff {
                Complex64::default()
            } else {
                Complex64::new(1.0, 0.0)
            }
        })
    }

    /// Pointwise multiplication by the Japanese bracket `<x>^power`.
    pub fn apply_weight(&self, power: f64) -> Field {
        if power == 0.0 {
            return self.clone();
        }
        let values = self
            .values
            .iter()
            .zip(self.grid.x())
            .map(|(&v, &x)| v * (1.0 + x * x).powf(0.5 * power))
            .collect();
        Field {
            grid: self.grid.clone(),
            values,
            is_real: self.is_real,
        }
    }

    /// Discrete `L2([-L, L))` norm (rectangle rule; exact for the periodic trapezoid).
    pub fn l2_norm(&self) -> f64 {
        (self.grid.dx() * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>()).sqrt()
    }

    /// The same norm computed from Fourier coefficients (Parseval route).
    pub fn l2_norm_fourier(&self) -> f64 {
        let hat = self.spectrum();
        (2.0 * self.grid.half_length() * hat.iter().map(|c| c.norm_sqr()).sum::<f64>()).sqrt()
    }

    /// Grid maximum of `|u|`.
    pub fn linf_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).fold(0.0, f64::max).sqrt()
    }

    /// Sobolev `H^s` norm via the Fourier weight `(1 + k^2)^{s/2}`.
    pub fn hs_norm(&self, s: u32) -> f64 {
        let hat = self.spectrum();
        let sum: f64 = hat
            .iter()
            .zip(self.grid.k())
            .map(|(c, &k)| (1.0 + k * k).powi(s as i32) * c.norm_sqr())
            .sum();
        (2.0 * self.grid.half_length() * sum).sqrt()
    }

    /// `integral u dx` (complex in general).
    pub fn mass(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() * self.grid.dx()
    }

    /// Fraction of `|u|^2` mass in the outer 10% of the domain (`|x| >= 0.9 L`).
    pub fn outer_mass_fraction(&self) -> f64 {
        let band = OUTER_BAND * self.grid.half_length();
        let mut outer = 0.0;
        let mut total = 0.0;
        for (v, &x) in self.values.iter().zip(self.grid.x()) {
            let m = v.norm_sqr();
            total += m;
            if x.abs() >= band {
                outer += m;
            }
        }
        if total == 0.0 {
            0.0
        } else {
            outer / total
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub fn add(&self, rhs: &Field) -> Field {
        debug_assert_eq!(self.grid.as_ref(), rhs.grid.as_ref());
        let values = self
            .values
            .iter()
            .zip(&rhs.values)
            .map(|(a, b)| a + b)
            .collect();
        Field {
            grid: self.grid.clone(),
            values,
            is_real: self.is_real && rhs.is_real,
        }
    }

    pub fn sub(&self, rhs: &Field) -> Field {
        debug_assert_eq!(self.grid.as_ref(), rhs.grid.as_ref());
        let values = self
            .values
            .iter()
            .zip(&rhs.values)
            .map(|(a, b)| a - b)
            .collect();
        Field {
            grid: self.grid.clone(),
            values,
            is_real: self.is_real && rhs.is_real,
        }
    }

    pub fn scale(&self, c: f64) -> Field {
        Field {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * c).collect(),
            is_real: self.is_real,
        }
    }

    /// Pointwise product with the grid coordinate (the sawtooth `x` on the torus).
    pub fn multiply_by_x(&self) -> Field {
        let values = self
            .values
            .iter()
            .zip(self.grid.x())
            .map(|(&v, &x)| v * x)
            .collect();
        Field {
            grid: self.grid.clone(),
            values,
            is_real: self.is_real,
        }
    }

    /// Reflection `u(x) -> u(-x)` (index 0 is its own mirror on the periodic grid).
    pub fn reflect(&self) -> Field {
        let n = self.values.len();
        let mut values = vec![Complex64::default(); n];
        values[0] = self.values[0];
        for (j, slot) in values.iter_mut().enumerate().skip(1) {
            *slot = self.values[n - j];
        }
        Field {
            grid: self.grid.clone(),
            values,
            is_real: self.is_real,
        }
    }
}
