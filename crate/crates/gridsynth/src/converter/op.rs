//! Steady-state operating point of the closed-loop converter.
//!
//! The equilibrium is pinned by the integrator rest conditions (exact
//! tracking of the regulated quantities) together with the grid-side branch
//! equation, independently of the particular stabilizing gain matrix.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::converter::dynamics::{rotate, ControlMode, ConverterParams, References};
use crate::error::{Error, Result};

/// Converged steady state in the global dq frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    /// Capacitor voltage.
    pub v0: [f64; 2],
    /// Grid-side current.
    pub i0: [f64; 2],
    /// Converter-side current.
    pub ic0: [f64; 2],
    /// Converter terminal voltage.
    pub uc0: [f64; 2],
    /// Controller frame offset to the grid, rad.
    pub theta0: f64,
    pub p0: f64,
    pub q0: f64,
    /// Grid voltage the point was solved against.
    pub u_grid: [f64; 2],
    /// References the point satisfies.
    pub refs: References,
}

fn residuals(p: &ConverterParams, refs: &References, u_grid: [f64; 2], q: &[f64; 5]) -> [f64; 5] {
    let (v, i, theta) = ([q[0], q[1]], [q[2], q[3]], q[4]);
    let r_branch = p.tau * p.l_g / p.omega_b;
    let p_e = v[0] * i[0] + v[1] * i[1];
    let q_e = v[1] * i[0] - v[0] * i[1];
    // Internal voltage behind the virtual reactance, controller frame.
    let e_g = [v[0] - p.x_v * i[1], v[1] + p.x_v * i[0]];
    let e_c = rotate(-theta, e_g);
    let r3 = match p.mode {
        ControlMode::Pv => e_c[0] - refs.v_ref_d,
        ControlMode::Pq => q_e - refs.q_ref,
    };
    [
        v[0] - u_grid[0] - r_branch * i[0] + p.l_g * i[1],
        v[1] - u_grid[1] - r_branch * i[1] - p.l_g * i[0],
        p_e - refs.p_ref,
        r3,
        e_c[1] - refs.v_ref_q,
    ]
}

/// Newton solve of the steady-state equations.
///
/// `v_or_q_ref` is the internal voltage reference in PV mode and the
/// reactive power reference in PQ mode. Fails with
/// [`Error::InfeasibleOperatingPoint`] when the iteration does not reach a
/// 1e-10 residual within 50 steps (e.g. power transfer beyond the reactance
/// limit).
pub fn solve_operating_point(
    params: &ConverterParams,
    p_ref: f64,
    v_or_q_ref: f64,
    u_grid_mag: f64,
) -> Result<OperatingPoint> {
    solve_operating_point_at(params, p_ref, v_or_q_ref, [u_grid_mag, 0.0])
}

/// Same as [`solve_operating_point`] for an arbitrary grid voltage phasor.
pub fn solve_operating_point_at(
    params: &ConverterParams,
    p_ref: f64,
    v_or_q_ref: f64,
    u_grid: [f64; 2],
) -> Result<OperatingPoint> {
    params.validate()?;
    let u_mag = (u_grid[0] * u_grid[0] + u_grid[1] * u_grid[1]).sqrt();
    if u_mag <= 0.0 {
        return Err(Error::InvalidParameter(
            "grid voltage magnitude must be positive".into(),
        ));
    }
    let refs = match params.mode {
        ControlMode::Pv => References::new(p_ref, 0.0, v_or_q_ref),
        ControlMode::Pq => References {
            p_ref,
            q_ref: v_or_q_ref,
            v_ref_d: 1.0,
            v_ref_q: 0.0,
        },
    };

    // Initial guess from the lossless branch relation.
    let i_guess = [p_ref / u_mag, 0.0];
    let v_guess = [
        u_grid[0] - params.l_g * i_guess[1],
        u_grid[1] + params.l_g * i_guess[0],
    ];
    let e_guess = [
        v_guess[0] - params.x_v * i_guess[1],
        v_guess[1] + params.x_v * i_guess[0],
    ];
    let mut q = [
        v_guess[0],
        v_guess[1],
        i_guess[0],
        i_guess[1],
        e_guess[1].atan2(e_guess[0]),
    ];

    let mut converged = false;
    let mut residual_norm = f64::INFINITY;
    let mut iterations = 0;
    for it in 0..50 {
        iterations = it + 1;
        let r = residuals(params, &refs, u_grid, &q);
        residual_norm = r.iter().map(|x| x * x).sum::<f64>().sqrt();
        if residual_norm < 1e-12 {
            converged = true;
            break;
        }
        // Central-difference Jacobian.
        let mut jac = DMatrix::zeros(5, 5);
        for j in 0..5 {
            let h = 1e-7 * (1.0 + q[j].abs());
            let mut qp = q;
            let mut qm = q;
            qp[j] += h;
            qm[j] -= h;
            let rp = residuals(params, &refs, u_grid, &qp);
            let rm = residuals(params, &refs, u_grid, &qm);
            for i in 0..5 {
                jac[(i, j)] = (rp[i] - rm[i]) / (2.0 * h);
            }
        }
        let rhs = DVector::from_row_slice(&r);
        let step = match jac.lu().solve(&rhs) {
            Some(s) => s,
            None => break,
        };
        if !step.iter().all(|x| x.is_finite()) {
            break;
        }
        // Damp long steps; the feasible region is well inside |step| ~ 1.
        let scale = (2.0 / step.norm().max(2.0)).min(1.0);
        for j in 0..5 {
            q[j] -= scale * step[j];
        }
        if !q.iter().all(|x| x.is_finite()) {
            return Err(Error::InfeasibleOperatingPoint {
                residual: f64::INFINITY,
                iterations,
            });
        }
    }
    // Accept only a genuinely converged point.
    if !converged || residual_norm > 1e-10 {
        return Err(Error::InfeasibleOperatingPoint {
            residual: residual_norm,
            iterations,
        });
    }

    let (v0, i0, theta0) = ([q[0], q[1]], [q[2], q[3]], q[4]);
    let ic0 = [
        i0[0] - params.c_f * v0[1],
        i0[1] + params.c_f * v0[0],
    ];
    let uc0 = [
        v0[0] - params.l_f * ic0[1],
        v0[1] + params.l_f * ic0[0],
    ];
    Ok(OperatingPoint {
        v0,
        i0,
        ic0,
        uc0,
        theta0,
        p0: v0[0] * i0[0] + v0[1] * i0[1],
        q0: v0[1] * i0[0] - v0[0] * i0[1],
        u_grid,
        refs,
    })
}

/// Controller states consistent with an operating point: current-loop
/// integrators, feedforward filter states and the steady control input.
pub fn steady_controller_states(
    params: &ConverterParams,
    op: &OperatingPoint,
) -> ([f64; 2], [f64; 2], [f64; 3]) {
    let v_c = rotate(-op.theta0, op.v0);
    let ic_c = rotate(-op.theta0, op.ic0);
    let uc_c = rotate(-op.theta0, op.uc0);
    let xi = [
        (uc_c[0] + params.l_f * ic_c[1] - params.k_vf * v_c[0]) / params.ki_i,
        (uc_c[1] - params.l_f * ic_c[0] - params.k_vf * v_c[1]) / params.ki_i,
    ];
    let phi = v_c;
    let u0 = [ic_c[0], ic_c[1], 0.0];
    (xi, phi, u0)
}
