//! SISO reductions of the local requirement to the open-loop frequency response.

use num_complex::Complex64;

use super::hinf::{golden_max, SweepOptions};
use super::NetworkModel;
use crate::error::{Error, Result};
use crate::lti::{eigenvalues, eval_transfer, poles, FrequencyGrid, PoleClass, StateSpace};

/// Slack on the real-part threshold comparison.
pub const REAL_PART_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealPartMin {
    pub value: f64,
    pub omega: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealPartCondition {
    pub pass: bool,
    pub min_real: f64,
    pub omega: f64,
    /// `-1 / (2 alpha max_i sum_j g_ij)`; `-inf` for an uncoupled network.
    pub threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScreenVerdict {
    /// An open right-half-plane pole: no graph or coupling is propagation stable.
    NeverPropagationStable,
    /// Strictly stable subsystem: propagation stable for all small enough coupling.
    StableForSmallCoupling,
    /// Marginal poles: the screen is silent.
    NoVerdict,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarThreshold {
    pub damping: f64,
    /// `sqrt(2 alpha max_i sum_j g_ij)`.
    pub critical_damping: f64,
    pub pass: bool,
}

fn require_siso(ss: &StateSpace) -> Result<()> {
    if ss.is_siso() {
        Ok(())
    } else {
        Err(Error::NotSiso(ss.m()))
    }
}

fn real_part_at(ss: &StateSpace, omega: f64) -> Option<f64> {
    eval_transfer(ss, Complex64::new(0.0, omega)).ok().map(|t| t[(0, 0)].re)
}

/// Infimum of `Re T(jw)` over a refined log grid (exact poles are skipped).
pub fn min_real_part(ss: &StateSpace, opts: &SweepOptions) -> Result<RealPartMin> {
    require_siso(ss)?;
    let grid = FrequencyGrid::scaled_to(ss.a(), opts.lo_factor, opts.hi_factor, opts.points)?;
    let mut freqs: Vec<f64> = grid.points().to_vec();
    freqs.extend(eigenvalues(ss.a()).iter().map(|p| p.im.abs()).filter(|w| *w > 0.0));
    if real_part_at(ss, 0.0).is_some() {
        freqs.push(0.0);
    }
    freqs.sort_by(f64::total_cmp);
    freqs.dedup();

    let samples: Vec<(f64, f64)> = freqs.iter().filter_map(|&w| real_part_at(ss, w).map(|r| (w, r))).collect();
    let (idx, &(w_best, r_best)) = samples
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .ok_or_else(|| Error::InvalidArgument("no evaluable frequency on the grid".into()))?;
    let lo = samples[idx.saturating_sub(1)].0;
    let hi = samples[(idx + 1).min(samples.len() - 1)].0;
    let (w, neg) = golden_max(|w| real_part_at(ss, w).map_or(f64::NEG_INFINITY, |r| -r), lo, hi, opts.refine_rtol);
    Ok(if -neg < r_best { RealPartMin { value: -neg, omega: w } } else { RealPartMin { value: r_best, omega: w_best } })
}

/// `inf_w Re T(jw) >= -1 / (2 alpha max_i sum_j g_ij)`.
pub fn siso_real_part_condition(net: &NetworkModel, opts: &SweepOptions) -> Result<RealPartCondition> {
    require_siso(&net.subsystem)?;
    let k_max = net.max_loop_gain();
    let threshold = if k_max > 0.0 { -1.0 / (2.0 * k_max) } else { f64::NEG_INFINITY };
    let min = min_real_part(&net.subsystem, opts)?;
    Ok(RealPartCondition {
        pass: min.value >= threshold - REAL_PART_TOL,
        min_real: min.value,
        omega: min.omega,
        threshold,
    })
}

/// Nyquist plot in the closed right half-plane and no open right-half-plane poles.
pub fn is_positive_real(ss: &StateSpace, opts: &SweepOptions) -> Result<bool> {
    require_siso(ss)?;
    if poles(ss).iter().any(|p| p.class == PoleClass::Unstable) {
        return Ok(false);
    }
    Ok(min_real_part(ss, opts)?.value >= -REAL_PART_TOL)
}

pub fn pole_screen(ss: &StateSpace) -> Result<ScreenVerdict> {
    require_siso(ss)?;
    let p = poles(ss);
    Ok(if p.iter().any(|p| p.class == PoleClass::Unstable) {
        ScreenVerdict::NeverPropagationStable
    } else if p.iter().all(|p| p.class == PoleClass::StrictlyStable) {
        ScreenVerdict::StableForSmallCoupling
    } else {
        ScreenVerdict::NoVerdict
    })
}

pub fn planar_damping_threshold(net: &NetworkModel) -> Result<PlanarThreshold> {
    let damping = net.subsystem.planar_damping().ok_or(Error::NotPlanarTemplate)?;
    let critical_damping = (2.0 * net.max_loop_gain()).sqrt();
    Ok(PlanarThreshold { damping, critical_damping, pass: damping >= critical_damping })
}
