//! Peak gain `sup_w sigma_max(G(jw))` of a stable, strictly proper system.
//!
//! Two independent routes: bisection on the level `gamma` using imaginary-axis
//! eigenvalues of the Hamiltonian
//!
//! ```text
//! [  A          B B^T / gamma^2 ]
//! [ -C^T C     -A^T             ]
//! ```
//!
//! and a dense log-spaced sweep followed by golden-section refinement.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lti::{eigenvalues, eval_transfer, is_hurwitz_real, sigma_max, FrequencyGrid, StateSpace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SupGainMethod {
    #[default]
    Bisect,
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainPeak {
    pub value: f64,
    /// Frequency (rad/time) at which the peak is attained.
    pub omega: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub points: usize,
    /// Grid bounds as multiples of the spectral radius of `A`.
    pub lo_factor: f64,
    pub hi_factor: f64,
    /// Relative bracket width at which golden-section refinement stops.
    pub refine_rtol: f64,
    /// Relative gap `(hi - lo) / lo` at which bisection stops.
    pub bisect_rtol: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self { points: 2000, lo_factor: 1e-4, hi_factor: 1e4, refine_rtol: 1e-9, bisect_rtol: 1e-8 }
    }
}

pub fn peak_gain(ss: &StateSpace, method: SupGainMethod, opts: &SweepOptions) -> Result<GainPeak> {
    if !ss.is_strictly_proper() {
        return Err(Error::Feedthrough);
    }
    if !is_hurwitz_real(ss.a(), 0.0) {
        return Err(Error::NotHurwitz);
    }
    match method {
        SupGainMethod::Bisect => peak_gain_bisect(ss, opts),
        SupGainMethod::Grid => peak_gain_grid(ss, opts),
    }
}

fn gain_at(ss: &StateSpace, omega: f64) -> f64 {
    // A is Hurwitz, so jw is never a pole
    eval_transfer(ss, Complex64::new(0.0, omega)).map(|t| sigma_max(&t)).unwrap_or(f64::INFINITY)
}

/// Golden-section search for the maximum of `f` on `[a, b]`.
pub(crate) fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, rtol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    let mut iters = 0;
    while (b - a) > rtol * b.abs().max(f64::MIN_POSITIVE) && iters < 500 {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        }
        iters += 1;
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

fn sweep_frequencies(ss: &StateSpace, opts: &SweepOptions) -> Result<Vec<f64>> {
    let grid = FrequencyGrid::scaled_to(ss.a(), opts.lo_factor, opts.hi_factor, opts.points)?;
    let mut freqs = vec![0.0];
    freqs.extend_from_slice(grid.points());
    // lightly damped resonances sit near the imaginary parts of the poles
    freqs.extend(eigenvalues(ss.a()).iter().map(|p| p.im.abs()).filter(|w| *w > 0.0));
    freqs.sort_by(f64::total_cmp);
    freqs.dedup();
    Ok(freqs)
}

fn peak_gain_grid(ss: &StateSpace, opts: &SweepOptions) -> Result<GainPeak> {
    let freqs = sweep_frequencies(ss, opts)?;
    let gains: Vec<f64> = freqs.iter().map(|&w| gain_at(ss, w)).collect();
    let (best, _) = gains.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).expect("nonempty sweep");
    let lo = freqs[best.saturating_sub(1)];
    let hi = freqs[(best + 1).min(freqs.len() - 1)];
    let (w, g) = golden_max(|w| gain_at(ss, w), lo, hi, opts.refine_rtol);
    Ok(if g > gains[best] {
        GainPeak { value: g, omega: w }
    } else {
        GainPeak { value: gains[best], omega: freqs[best] }
    })
}

/// Nonnegative frequencies `w` with `sigma_max(G(jw)) = gamma`, read off the
/// imaginary-axis eigenvalues of the Hamiltonian.
fn crossing_frequencies(ss: &StateSpace, bbt: &DMatrix<f64>, ctc: &DMatrix<f64>, gamma: f64) -> Vec<f64> {
    let n = ss.n();
    let a = ss.a();
    let mut h = DMatrix::<f64>::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(a);
    h.view_mut((0, n), (n, n)).copy_from(&(bbt / (gamma * gamma)));
    h.view_mut((n, 0), (n, n)).copy_from(&(-ctc));
    h.view_mut((n, n), (n, n)).copy_from(&(-a.transpose()));
    let scale = h.norm().max(1.0);
    let mut out: Vec<f64> =
        eigenvalues(&h).into_iter().filter(|z| z.re.abs() <= 1e-7 * scale.max(z.norm())).map(|z| z.im.abs()).collect();
    out.sort_by(f64::total_cmp);
    out.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs().max(1.0));
    out
}

fn peak_gain_bisect(ss: &StateSpace, opts: &SweepOptions) -> Result<GainPeak> {
    let bbt = ss.b() * ss.b().transpose();
    let ctc = ss.c().transpose() * ss.c();

    // attained lower bound from a handful of probe frequencies
    let mut probes = vec![0.0];
    probes.extend(eigenvalues(ss.a()).iter().map(|p| p.im.abs()).filter(|w| *w > 0.0));
    probes.push(ss.spectral_radius());
    let mut best = GainPeak { value: 0.0, omega: 0.0 };
    for &w in &probes {
        let g = gain_at(ss, w);
        if g > best.value {
            best = GainPeak { value: g, omega: w };
        }
    }
    if best.value == 0.0 {
        return Ok(best);
    }
    let mut bracket = (best.omega, best.omega);

    // returns true when a witness at or above gamma was found
    let probe = |gamma: f64, best: &mut GainPeak, bracket: &mut (f64, f64)| -> bool {
        let crossings = crossing_frequencies(ss, &bbt, &ctc, gamma);
        let verified: Vec<f64> =
            crossings.into_iter().filter(|&w| (gain_at(ss, w) / gamma - 1.0).abs() <= 1e-6).collect();
        if verified.is_empty() {
            return false;
        }
        let mut candidates: Vec<(f64, (f64, f64))> = verified.iter().map(|&w| (w, (w, w))).collect();
        candidates.push((0.0, (0.0, verified[0])));
        for pair in verified.windows(2) {
            candidates.push((0.5 * (pair[0] + pair[1]), (pair[0], pair[1])));
        }
        for (w, br) in candidates {
            let g = gain_at(ss, w);
            if g > best.value {
                *best = GainPeak { value: g, omega: w };
                *bracket = br;
            }
        }
        best.value = best.value.max(gamma);
        true
    };

    let mut hi = 2.0 * best.value;
    let mut guard = 0;
    while probe(hi, &mut best, &mut bracket) {
        hi = 2.0 * best.value.max(hi);
        guard += 1;
        if guard > 200 {
            return Err(Error::InvalidArgument("peak gain search diverged".into()));
        }
    }
    let mut lo = best.value;
    while hi - lo > opts.bisect_rtol * lo {
        let mid = 0.5 * (lo + hi);
        if probe(mid, &mut best, &mut bracket) {
            lo = best.value;
        } else {
            hi = mid;
        }
    }

    // polish the attaining frequency inside the last crossing bracket
    if bracket.1 > bracket.0 {
        let (w, g) = golden_max(|w| gain_at(ss, w), bracket.0, bracket.1, opts.refine_rtol);
        if g >= best.value {
            best = GainPeak { value: g, omega: w };
        }
    }
    let at_best = gain_at(ss, best.omega);
    if at_best < best.value {
        // report an attained value; the bisection level is within bisect_rtol of it
        best.value = at_best.max(lo);
    }
    Ok(best)
}
