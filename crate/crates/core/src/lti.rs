//! Continuous-time LTI state-space systems.
//!
//! Systems are stored as real matrices `(A, B, C, D)` with transfer matrix
//! `T(s) = C (sI - A)^-1 B + D`. Network subsystems are square and strictly
//! proper; the feedthrough exists only for standalone frequency-domain checks.
//!
//! Frequency evaluation performs one LU solve per point. Time simulation uses
//! exact zero-order-hold (or first-order-hold) discretization obtained from the
//! exponential of an augmented block matrix.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative threshold on `sigma_min / sigma_max` of `sI - A` below which the
/// evaluation point is treated as a pole.
pub const SINGULAR_RTOL: f64 = 1e-12;

/// Real-part tolerance used when classifying poles.
pub const POLE_CLASS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    d: DMatrix<f64>,
}

impl StateSpace {
    /// Strictly proper system `(A, B, C)`.
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>) -> Result<Self> {
        let d = DMatrix::zeros(c.nrows(), b.ncols());
        Self::with_feedthrough(a, b, c, d)
    }

    pub fn with_feedthrough(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>, d: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if n == 0 || a.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "A must be square and non-empty, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        let m = b.ncols();
        if m == 0 || b.nrows() != n {
            return Err(Error::DimensionMismatch(format!(
                "B must be {n}xm with m >= 1, got {}x{}",
                b.nrows(),
                b.ncols()
            )));
        }
        if c.nrows() == 0 || c.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "C must be px{n} with p >= 1, got {}x{}",
                c.nrows(),
                c.ncols()
            )));
        }
        let p = c.nrows();
        if d.nrows() != p || d.ncols() != m {
            return Err(Error::DimensionMismatch(format!("D must be {p}x{m}, got {}x{}", d.nrows(), d.ncols())));
        }
        let all_finite = a.iter().chain(b.iter()).chain(c.iter()).chain(d.iter()).all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::InvalidArgument("matrix entries must be finite".into()));
        }
        Ok(Self { a, b, c, d })
    }

    /// Damped double integrator `T(s) = 1 / (s^2 + d s)`.
    pub fn planar(damping: f64) -> Self {
        Self {
            a: DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, -damping]),
            b: DMatrix::from_row_slice(2, 1, &[0.0, 1.0]),
            c: DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
            d: DMatrix::zeros(1, 1),
        }
    }

    /// Returns the damping constant if the system is exactly the planar template.
    pub fn planar_damping(&self) -> Option<f64> {
        let a = &self.a;
        let is_template = self.n() == 2
            && self.m() == 1
            && self.p() == 1
            && a[(0, 0)] == 0.0
            && a[(0, 1)] == 1.0
            && a[(1, 0)] == 0.0
            && self.b[(0, 0)] == 0.0
            && self.b[(1, 0)] == 1.0
            && self.c[(0, 0)] == 1.0
            && self.c[(0, 1)] == 0.0
            && self.d[(0, 0)] == 0.0;
        is_template.then(|| -a[(1, 1)])
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn d(&self) -> &DMatrix<f64> {
        &self.d
    }

    /// State dimension.
    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    /// Number of input channels.
    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    /// Number of output channels.
    pub fn p(&self) -> usize {
        self.c.nrows()
    }

    /// Same number of inputs and outputs.
    pub fn is_square(&self) -> bool {
        self.m() == self.p()
    }

    pub fn is_siso(&self) -> bool {
        self.m() == 1 && self.p() == 1
    }

    pub fn is_strictly_proper(&self) -> bool {
        self.d.iter().all(|v| *v == 0.0)
    }

    /// Largest eigenvalue magnitude of `A`.
    pub fn spectral_radius(&self) -> f64 {
        spectral_radius(&self.a)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Log,
    Linear,
}

/// Strictly increasing list of nonnegative frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    points: Vec<f64>,
    spacing: Spacing,
}

impl FrequencyGrid {
    pub fn log(omega_min: f64, omega_max: f64, count: usize) -> Result<Self> {
        if !(omega_min > 0.0 && omega_max > omega_min && count >= 2) {
            return Err(Error::InvalidArgument(format!(
                "log grid needs 0 < omega_min < omega_max and count >= 2, got [{omega_min}, {omega_max}] x {count}"
            )));
        }
        let (lo, hi) = (omega_min.log10(), omega_max.log10());
        let step = (hi - lo) / (count - 1) as f64;
        let mut points: Vec<f64> = (0..count).map(|k| 10f64.powf(lo + step * k as f64)).collect();
        points[0] = omega_min;
        points[count - 1] = omega_max;
        Ok(Self { points, spacing: Spacing::Log })
    }

    pub fn linear(omega_min: f64, omega_max: f64, count: usize) -> Result<Self> {
        if !(omega_min >= 0.0 && omega_max > omega_min && count >= 2) {
            return Err(Error::InvalidArgument(format!(
                "linear grid needs 0 <= omega_min < omega_max and count >= 2, got [{omega_min}, {omega_max}] x {count}"
            )));
        }
        let step = (omega_max - omega_min) / (count - 1) as f64;
        let points = (0..count).map(|k| omega_min + step * k as f64).collect();
        Ok(Self { points, spacing: Spacing::Linear })
    }

    /// Log grid spanning `[lo_factor, hi_factor]` times the spectral radius of
    /// `a` (radius 1 is used when `a` is nilpotent).
    pub fn scaled_to(a: &DMatrix<f64>, lo_factor: f64, hi_factor: f64, count: usize) -> Result<Self> {
        let rho = spectral_radius(a);
        let scale = if rho > 1e-12 { rho } else { 1.0 };
        Self::log(lo_factor * scale, hi_factor * scale, count)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn spacing(&self) -> Spacing {
        self.spacing
    }

    pub fn omega_min(&self) -> f64 {
        self.points[0]
    }

    pub fn omega_max(&self) -> f64 {
        self.points[self.points.len() - 1]
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// `T(s) = C (sI - A)^-1 B + D` via an LU solve.
pub fn eval_transfer(ss: &StateSpace, s: Complex64) -> Result<DMatrix<Complex64>> {
    let n = ss.n();
    let shifted = DMatrix::<Complex64>::from_fn(n, n, |i, j| {
        let diag = if i == j { s } else { Complex64::new(0.0, 0.0) };
        diag - Complex64::new(ss.a[(i, j)], 0.0)
    });

    let sv = shifted.clone().singular_values();
    let smax = sv.max();
    let smin = sv.min();
    if smin.is_nan() || smin <= SINGULAR_RTOL * smax {
        return Err(Error::SingularAtS { re: s.re, im: s.im });
    }

    let rhs = ss.b.map(|v| Complex64::new(v, 0.0));
    let x = shifted.lu().solve(&rhs).ok_or(Error::SingularAtS { re: s.re, im: s.im })?;
    let c = ss.c.map(|v| Complex64::new(v, 0.0));
    let d = ss.d.map(|v| Complex64::new(v, 0.0));
    Ok(c * x + d)
}

/// Largest singular value of a complex matrix.
pub fn sigma_max(m: &DMatrix<Complex64>) -> f64 {
    if m.nrows() == 1 && m.ncols() == 1 {
        return m[(0, 0)].norm();
    }
    m.clone().singular_values().max()
}

/// Eigenvalues of a real square matrix.
///
/// Panics if the Schur iteration fails to converge.
pub fn eigenvalues(m: &DMatrix<f64>) -> Vec<Complex64> {
    assert!(m.is_square(), "eigenvalues of a non-square matrix");
    if m.nrows() == 0 {
        return Vec::new();
    }
    if m.iter().all(|v| *v == 0.0) {
        return vec![Complex64::new(0.0, 0.0); m.nrows()];
    }
    if let Some(schur) = nalgebra::linalg::Schur::try_new(m.clone(), f64::EPSILON, 100_000) {
        return schur.complex_eigenvalues().iter().copied().collect();
    }
    // QR iteration can stall on structured spectra (repeated imaginary-axis
    // pairs); retry on shifted and rotated copies with the same eigenvalues.
    let n = m.nrows();
    let scale = m.norm() / (n as f64).sqrt();
    let v = DVector::from_fn(n, |i, _| 1.0 + 0.37 * i as f64);
    let reflector = DMatrix::identity(n, n) - 2.0 * &v * v.transpose() / v.norm_squared();
    for (shift, rotate) in [(0.31, false), (0.0, true), (-0.53, true), (1.7, true)] {
        let mut trial = m + DMatrix::identity(n, n) * (shift * scale);
        if rotate {
            trial = &reflector * trial * &reflector;
        }
        if let Some(schur) = nalgebra::linalg::Schur::try_new(trial, f64::EPSILON, 100_000) {
            return schur.complex_eigenvalues().iter().map(|z| z - shift * scale).collect();
        }
    }
    panic!("Schur decomposition failed to converge");
}

/// Eigenvalues of a complex square matrix.
pub fn eigenvalues_complex(m: &DMatrix<Complex64>) -> Vec<Complex64> {
    assert!(m.is_square(), "eigenvalues of a non-square matrix");
    if m.nrows() == 0 {
        return Vec::new();
    }
    if m.iter().all(|z| z.im == 0.0) {
        return eigenvalues(&m.map(|z| z.re));
    }
    if m.iter().all(|z| z.norm() == 0.0) {
        return vec![Complex64::new(0.0, 0.0); m.nrows()];
    }
    let schur = nalgebra::linalg::Schur::try_new(m.clone(), f64::EPSILON, 100_000)
        .expect("complex Schur decomposition failed to converge");
    let (_, t) = schur.unpack();
    t.diagonal().iter().copied().collect()
}

pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    eigenvalues(m).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// True iff every eigenvalue of `m` has real part `< -margin`.
pub fn is_hurwitz(m: &DMatrix<Complex64>, margin: f64) -> bool {
    max_real_part_complex(m) < -margin
}

pub fn is_hurwitz_real(m: &DMatrix<f64>, margin: f64) -> bool {
    eigenvalues(m).iter().all(|z| z.re < -margin)
}

/// Spectral abscissa of a complex matrix, computed on the real embedding
/// `[[Re, -Im], [Im, Re]]` whose spectrum is `eig(M)` together with its conjugate.
pub fn max_real_part_complex(m: &DMatrix<Complex64>) -> f64 {
    let n = m.nrows();
    let mut emb = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = m[(i, j)];
            emb[(i, j)] = z.re;
            emb[(i, j + n)] = -z.im;
            emb[(i + n, j)] = z.im;
            emb[(i + n, j + n)] = z.re;
        }
    }
    eigenvalues(&emb).iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoleClass {
    StrictlyStable,
    Marginal,
    Unstable,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pole {
    pub value: Complex64,
    pub class: PoleClass,
}

/// Eigenvalues of `A`, tagged by the sign of their real part.
pub fn poles(ss: &StateSpace) -> Vec<Pole> {
    eigenvalues(&ss.a)
        .into_iter()
        .map(|value| {
            let class = if value.re < -POLE_CLASS_TOL {
                PoleClass::StrictlyStable
            } else if value.re > POLE_CLASS_TOL {
                PoleClass::Unstable
            } else {
                PoleClass::Marginal
            };
            Pole { value, class }
        })
        .collect()
}

/// Exact discretization `x[k+1] = Ad x[k] + B0 u[k] + B1 (u[k+1] - u[k])`.
/// For zero-order hold `B1` is zero.
#[derive(Debug, Clone)]
pub struct Discretized {
    pub ad: DMatrix<f64>,
    pub b0: DMatrix<f64>,
    pub b1: Option<DMatrix<f64>>,
    pub dt: f64,
}

/// Zero-order hold: `exp([[A, B], [0, 0]] dt)` gives `[[Ad, Bd], [0, I]]`.
pub fn discretize_zoh(ss: &StateSpace, dt: f64) -> Discretized {
    let (n, m) = (ss.n(), ss.m());
    let mut aug = DMatrix::<f64>::zeros(n + m, n + m);
    aug.view_mut((0, 0), (n, n)).copy_from(&(&ss.a * dt));
    aug.view_mut((0, n), (n, m)).copy_from(&(&ss.b * dt));
    let e = aug.exp();
    Discretized { ad: e.view((0, 0), (n, n)).into_owned(), b0: e.view((0, n), (n, m)).into_owned(), b1: None, dt }
}

/// First-order (triangle) hold: inputs are linearly interpolated between samples.
pub fn discretize_foh(ss: &StateSpace, dt: f64) -> Discretized {
    let (n, m) = (ss.n(), ss.m());
    let size = n + 2 * m;
    let mut aug = DMatrix::<f64>::zeros(size, size);
    aug.view_mut((0, 0), (n, n)).copy_from(&(&ss.a * dt));
    aug.view_mut((0, n), (n, m)).copy_from(&(&ss.b * dt));
    aug.view_mut((n, n + m), (m, m)).fill_with_identity();
    let e = aug.exp();
    Discretized {
        ad: e.view((0, 0), (n, n)).into_owned(),
        b0: e.view((0, n), (n, m)).into_owned(),
        b1: Some(e.view((0, n + m), (n, m)).into_owned()),
        dt,
    }
}

impl Discretized {
    /// Runs from zero state. `inputs` is `m x K` (one column per sample); the
    /// result is `p x K` with `y[k] = C x[k] + D u[k]`.
    pub fn run(&self, ss: &StateSpace, inputs: &DMatrix<f64>) -> DMatrix<f64> {
        let steps = inputs.ncols();
        let mut outputs = DMatrix::<f64>::zeros(ss.p(), steps);
        let mut x = DVector::<f64>::zeros(ss.n());
        let mut next = DVector::<f64>::zeros(ss.n());
        for k in 0..steps {
            let u = inputs.column(k);
            let mut y = outputs.column_mut(k);
            y.gemv(1.0, &ss.c, &x, 0.0);
            y.gemv(1.0, &ss.d, &u, 1.0);
            if k + 1 == steps {
                break;
            }
            next.gemv(1.0, &self.ad, &x, 0.0);
            next.gemv(1.0, &self.b0, &u, 1.0);
            if let Some(b1) = &self.b1 {
                let du = inputs.column(k + 1) - u;
                next.gemv(1.0, b1, &du, 1.0);
            }
            std::mem::swap(&mut x, &mut next);
        }
        outputs
    }
}

/// Zero-state response to ZOH-held input samples on a uniform grid.
pub fn simulate_lti(ss: &StateSpace, inputs: &DMatrix<f64>, dt: f64) -> Result<DMatrix<f64>> {
    check_sim_args(ss, inputs, dt)?;
    Ok(discretize_zoh(ss, dt).run(ss, inputs))
}

/// Zero-state response to piecewise-linear input through the samples.
pub fn simulate_lti_foh(ss: &StateSpace, inputs: &DMatrix<f64>, dt: f64) -> Result<DMatrix<f64>> {
    check_sim_args(ss, inputs, dt)?;
    Ok(discretize_foh(ss, dt).run(ss, inputs))
}

fn check_sim_args(ss: &StateSpace, inputs: &DMatrix<f64>, dt: f64) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    if inputs.nrows() != ss.m() {
        return Err(Error::DimensionMismatch(format!("input has {} channels, system has {}", inputs.nrows(), ss.m())));
    }
    Ok(())
}
