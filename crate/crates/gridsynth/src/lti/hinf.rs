//! H-infinity norm computation.
//!
//! The primary engine bisects on gamma using purely imaginary eigenvalues of
//! the associated Hamiltonian matrix. A gridded evaluator with golden-section
//! refinement around the strongest peaks is kept as an independent route for
//! cross-checks.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::lti::model::{eigenvalues, sigma_max_complex, StateSpaceModel};

/// How an H-infinity norm value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HinfMethod {
    HamiltonianBisection,
    Grid,
}

/// H-infinity norm value together with the frequency attaining it.
#[derive(Debug, Clone)]
pub struct HinfResult {
    pub norm: f64,
    pub peak_frequency: f64,
    pub method: HinfMethod,
    /// Set when poles sit close enough to the imaginary axis that the
    /// bisection certificate is numerically fragile.
    pub ill_conditioned: bool,
}

/// Scale-aware test for a purely imaginary Hamiltonian eigenvalue.
const IMAG_AXIS_TOL: f64 = 1e-8;

fn has_imaginary_eigenvalue(h: &DMatrix<f64>) -> Option<Vec<f64>> {
    let eigs = eigenvalues(h);
    let omegas: Vec<f64> = eigs
        .iter()
        .filter(|l| l.re.abs() < IMAG_AXIS_TOL * (1.0 + l.norm()))
        .map(|l| l.im.abs())
        .collect();
    if omegas.is_empty() {
        None
    } else {
        Some(omegas)
    }
}

fn hamiltonian(sys: &StateSpaceModel, gamma: f64) -> Option<DMatrix<f64>> {
    let n = sys.order();
    let m = sys.num_inputs();
    let r = DMatrix::identity(m, m).scale(gamma * gamma) - sys.d.transpose() * &sys.d;
    let r_inv = r.lu().try_inverse()?;
    let a_bar = &sys.a + &sys.b * &r_inv * sys.d.transpose() * &sys.c;
    let p = sys.num_outputs();
    let s = DMatrix::identity(p, p) + &sys.d * &r_inv * sys.d.transpose();
    let mut h = DMatrix::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(&a_bar);
    h.view_mut((0, n), (n, n))
        .copy_from(&(&sys.b * &r_inv * sys.b.transpose()));
    h.view_mut((n, 0), (n, n))
        .copy_from(&(-(sys.c.transpose() * &s * &sys.c)));
    h.view_mut((n, n), (n, n)).copy_from(&(-a_bar.transpose()));
    Some(h)
}

fn sigma_at(sys: &StateSpaceModel, omega: f64) -> f64 {
    sigma_max_complex(&sys.eval_response(omega), None)
}

/// Coarse frequency candidates informed by the pole spread, including DC.
fn coarse_grid(sys: &StateSpaceModel, n_points: usize) -> Vec<f64> {
    let poles = sys.poles();
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for p in &poles {
        let mag = p.norm();
        if mag > 1e-12 {
            lo = lo.min(mag);
            hi = hi.max(mag);
        }
    }
    if !lo.is_finite() || hi == 0.0 {
        lo = 1e-2;
        hi = 1e2;
    }
    let lo = (lo * 1e-2).max(1e-12);
    let hi = hi * 1e2;
    let mut grid = vec![0.0];
    let ratio = (hi / lo).ln();
    for i in 0..n_points {
        let t = i as f64 / (n_points.max(2) - 1) as f64;
        grid.push(lo * (ratio * t).exp());
    }
    grid
}

/// H-infinity norm of a stable system by Hamiltonian bisection.
///
/// Fails with [`Error::UnstableSystem`] when the spectral abscissa is not
/// strictly negative. The result is within `rel_tol` of
/// `sup_w sigma_max(G(jw))`.
pub fn hinf_norm(sys: &StateSpaceModel, rel_tol: f64) -> Result<HinfResult> {
    if rel_tol <= 0.0 {
        return Err(Error::InvalidParameter("rel_tol must be positive".into()));
    }
    let abscissa = sys.spectral_abscissa();
    if sys.order() > 0 && abscissa >= 0.0 {
        return Err(Error::UnstableSystem { abscissa });
    }
    let pole_scale = sys
        .poles()
        .iter()
        .map(|p| p.norm())
        .fold(0.0f64, f64::max)
        .max(1.0);
    let ill_conditioned = sys.order() > 0 && abscissa > -1e-9 * pole_scale;

    let sigma_d = sigma_max_complex(&sys.d.map(|x| num_complex::Complex64::new(x, 0.0)), None);
    if sys.order() == 0 {
        return Ok(HinfResult {
            norm: sigma_d,
            peak_frequency: 0.0,
            method: HinfMethod::HamiltonianBisection,
            ill_conditioned: false,
        });
    }

    // Lower bound: feedthrough gain and a coarse grid sweep.
    let grid = coarse_grid(sys, 20);
    let mut peak_frequency = 0.0;
    let mut grid_max = 0.0f64;
    for &w in &grid {
        let s = sigma_at(sys, w);
        if s > grid_max {
            grid_max = s;
            peak_frequency = w;
        }
    }
    let mut lo = grid_max.max(sigma_d).max(1e-300);
    // Upper bound: double until the Hamiltonian has no imaginary eigenvalue.
    let mut hi = 2.0 * lo;
    let mut bracket_ok = false;
    for _ in 0..80 {
        match hamiltonian(sys, hi).and_then(|h| has_imaginary_eigenvalue(&h)) {
            Some(_) => hi *= 2.0,
            None => {
                bracket_ok = true;
                break;
            }
        }
    }
    if !bracket_ok {
        return Err(Error::InvalidParameter(
            "H-infinity bisection failed to bracket the norm".into(),
        ));
    }

    let mut crossing_freqs: Vec<f64> = Vec::new();
    while hi - lo > rel_tol * lo {
        let gamma = 0.5 * (lo + hi);
        let imag = hamiltonian(sys, gamma).and_then(|h| has_imaginary_eigenvalue(&h));
        match imag {
            Some(ws) => {
                crossing_freqs = ws;
                lo = gamma;
            }
            None => hi = gamma,
        }
    }

    // Refine the reported peak using the crossing frequencies and their midpoints.
    let mut candidates = crossing_freqs.clone();
    candidates.sort_by(f64::total_cmp);
    let mids: Vec<f64> = candidates.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    candidates.extend(mids);
    let mut best = grid_max;
    for w in candidates {
        let s = sigma_at(sys, w);
        if s > best {
            best = s;
            peak_frequency = w;
        }
    }
    let norm = 0.5 * (lo + hi);
    Ok(HinfResult {
        norm: norm.max(best),
        peak_frequency,
        method: HinfMethod::HamiltonianBisection,
        ill_conditioned,
    })
}

/// Independent gridded norm estimate: dense log grid plus golden-section
/// refinement around the strongest local maxima.
pub fn hinf_norm_grid(sys: &StateSpaceModel, n_points: usize, refine: bool) -> Result<HinfResult> {
    let abscissa = sys.spectral_abscissa();
    if sys.order() > 0 && abscissa >= 0.0 {
        return Err(Error::UnstableSystem { abscissa });
    }
    let grid = coarse_grid(sys, n_points.max(8));
    let sigmas: Vec<f64> = grid.iter().map(|&w| sigma_at(sys, w)).collect();
    let mut best = 0.0f64;
    let mut best_w = 0.0;
    for (i, &s) in sigmas.iter().enumerate() {
        if s > best {
            best = s;
            best_w = grid[i];
        }
    }
    if refine {
        // Local maxima of the sampled curve, strongest five first.
        let mut peaks: Vec<usize> = (1..grid.len().saturating_sub(1))
            .filter(|&i| sigmas[i] >= sigmas[i - 1] && sigmas[i] >= sigmas[i + 1])
            .collect();
        peaks.sort_by(|&i, &j| sigmas[j].total_cmp(&sigmas[i]));
        peaks.truncate(5);
        for &i in &peaks {
            let (w, s) = golden_section_max(|w| sigma_at(sys, w), grid[i - 1], grid[i + 1], 1e-9);
            if s > best {
                best = s;
                best_w = w;
            }
        }
    }
    Ok(HinfResult {
        norm: best,
        peak_frequency: best_w,
        method: HinfMethod::Grid,
        ill_conditioned: false,
    })
}

/// Golden-section search for the maximum of `f` on `[a, b]`.
pub fn golden_section_max<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let (mut a, mut b) = (a.min(b), a.max(b));
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..200 {
        if b - a <= rel_tol * (a.abs() + b.abs()).max(1e-30) {
            break;
        }
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
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}
