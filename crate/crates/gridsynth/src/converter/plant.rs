//! Linearized generalized plant construction.
//!
//! The plant maps `(w1..w7, Icd_ref, Icq_ref, omega)` to
//! `(z1..z10, y1..y7)` and is obtained by central-difference linearization of
//! the nonlinear model around a converged operating point. The disturbances
//! `w1..w4` add to the reference error signals, `w5, w6` to the grid voltage
//! components and `w7` to the angle used in the Park transformation.

use nalgebra::DMatrix;

use crate::converter::dynamics::{
    self, ConverterParams, Evaluation, GridInterface, References, I_D, I_Q, N_STATES, N_U, N_W,
    N_Y, N_Z,
};
use crate::converter::op::{steady_controller_states, OperatingPoint};
use crate::error::{Error, Result};
use crate::lti::{lft_close, StateSpaceModel};

/// Static output-feedback gain with a structure mask.
///
/// Masked-out (pinned) entries are exactly zero; the mask is what a
/// structured synthesis is allowed to touch.
#[derive(Debug, Clone, PartialEq)]
pub struct GainMatrix {
    pub k: DMatrix<f64>,
    pub mask: DMatrix<bool>,
}

impl GainMatrix {
    pub fn new(k: DMatrix<f64>, mask: DMatrix<bool>) -> Result<Self> {
        if k.nrows() != N_U || k.ncols() != N_Y {
            return Err(Error::DimensionMismatch(format!(
                "gain matrix is {}x{}, expected {N_U}x{N_Y}",
                k.nrows(),
                k.ncols()
            )));
        }
        if mask.nrows() != N_U || mask.ncols() != N_Y {
            return Err(Error::DimensionMismatch("mask shape".into()));
        }
        for i in 0..N_U {
            for j in 0..N_Y {
                if !mask[(i, j)] && k[(i, j)] != 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "pinned entry ({},{}) is nonzero",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(Self { k, mask })
    }

    /// Dense gain with every entry free.
    pub fn full(k: DMatrix<f64>) -> Result<Self> {
        let mask = DMatrix::from_element(N_U, N_Y, true);
        Self::new(k, mask)
    }

    pub fn zero() -> Self {
        Self {
            k: DMatrix::zeros(N_U, N_Y),
            mask: DMatrix::from_element(N_U, N_Y, true),
        }
    }

    /// Indices of free entries in row-major order.
    pub fn free_entries(&self) -> Vec<(usize, usize)> {
        let mut v = Vec::new();
        for i in 0..N_U {
            for j in 0..N_Y {
                if self.mask[(i, j)] {
                    v.push((i, j));
                }
            }
        }
        v
    }

    pub fn with_values(&self, values: &[f64]) -> Self {
        let mut k = DMatrix::zeros(N_U, N_Y);
        for (&(i, j), &v) in self.free_entries().iter().zip(values.iter()) {
            k[(i, j)] = v;
        }
        Self {
            k,
            mask: self.mask.clone(),
        }
    }

    pub fn values(&self) -> Vec<f64> {
        self.free_entries().iter().map(|&(i, j)| self.k[(i, j)]).collect()
    }
}

/// Linearized converter plant partitioned into `(w, u) -> (z, y)`.
#[derive(Debug, Clone)]
pub struct GeneralizedPlant {
    pub model: StateSpaceModel,
    pub op: OperatingPoint,
    pub params: ConverterParams,
}

impl GeneralizedPlant {
    /// Closed loop `w -> z` under `u = K y`.
    pub fn close(&self, k: &GainMatrix) -> Result<StateSpaceModel> {
        lft_close(&self.model, N_W, N_Z, &k.k)
    }

    /// Closed-loop A matrix under `u = K y` (states unchanged).
    pub fn closed_loop_a(&self, k: &GainMatrix) -> Result<DMatrix<f64>> {
        Ok(self.close(k)?.a)
    }
}

fn pack_state(op: &OperatingPoint, xi: [f64; 2], phi: [f64; 2]) -> [f64; N_STATES] {
    let mut x = [0.0; N_STATES];
    x[dynamics::IC_D] = op.ic0[0];
    x[dynamics::IC_Q] = op.ic0[1];
    x[dynamics::V_D] = op.v0[0];
    x[dynamics::V_Q] = op.v0[1];
    x[I_D] = op.i0[0];
    x[I_Q] = op.i0[1];
    x[dynamics::THETA] = op.theta0;
    x[dynamics::XI_D] = xi[0];
    x[dynamics::XI_Q] = xi[1];
    x[dynamics::PHI_D] = phi[0];
    x[dynamics::PHI_Q] = phi[1];
    x
}

/// Full nonlinear state vector at an operating point (integrators at zero).
pub fn equilibrium_state(params: &ConverterParams, op: &OperatingPoint) -> [f64; N_STATES] {
    let (xi, phi, _) = steady_controller_states(params, op);
    pack_state(op, xi, phi)
}

struct Stacked {
    xdot: [f64; N_STATES],
    out: [f64; N_Z + N_Y],
}

fn eval_stacked(
    params: &ConverterParams,
    refs: &References,
    grid: &GridInterface,
    x: &[f64; N_STATES],
    w: &[f64; N_W],
    u: &[f64; N_U],
) -> Stacked {
    let Evaluation { xdot, y, z, .. } = dynamics::evaluate(params, refs, grid, x, w, u);
    let mut out = [0.0; N_Z + N_Y];
    out[..N_Z].copy_from_slice(&z);
    out[N_Z..].copy_from_slice(&y);
    Stacked { xdot, out }
}

/// Builds the linearized `(A, B, C, D)` around the operating point by
/// central differences of the shared nonlinear model.
pub fn build_plant(params: &ConverterParams, op: &OperatingPoint) -> Result<GeneralizedPlant> {
    params.validate()?;
    let refs = op.refs;
    let grid = GridInterface::stiff(op.u_grid);
    let (xi, phi, u0) = steady_controller_states(params, op);
    let x0 = pack_state(op, xi, phi);
    let w0 = [0.0; N_W];

    let mut a = DMatrix::zeros(N_STATES, N_STATES);
    let mut b = DMatrix::zeros(N_STATES, N_W + N_U);
    let mut c = DMatrix::zeros(N_Z + N_Y, N_STATES);
    let mut d = DMatrix::zeros(N_Z + N_Y, N_W + N_U);

    let step = |v: f64| 1e-6 * (1.0 + v.abs());

    for j in 0..N_STATES {
        let h = step(x0[j]);
        let mut xp = x0;
        let mut xm = x0;
        xp[j] += h;
        xm[j] -= h;
        let fp = eval_stacked(params, &refs, &grid, &xp, &w0, &u0);
        let fm = eval_stacked(params, &refs, &grid, &xm, &w0, &u0);
        for i in 0..N_STATES {
            a[(i, j)] = (fp.xdot[i] - fm.xdot[i]) / (2.0 * h);
        }
        for i in 0..N_Z + N_Y {
            c[(i, j)] = (fp.out[i] - fm.out[i]) / (2.0 * h);
        }
    }
    for j in 0..N_W {
        let h = step(0.0);
        let mut wp = w0;
        let mut wm = w0;
        wp[j] += h;
        wm[j] -= h;
        let fp = eval_stacked(params, &refs, &grid, &x0, &wp, &u0);
        let fm = eval_stacked(params, &refs, &grid, &x0, &wm, &u0);
        for i in 0..N_STATES {
            b[(i, j)] = (fp.xdot[i] - fm.xdot[i]) / (2.0 * h);
        }
        for i in 0..N_Z + N_Y {
            d[(i, j)] = (fp.out[i] - fm.out[i]) / (2.0 * h);
        }
    }
    for j in 0..N_U {
        let h = step(u0[j]);
        let mut up = u0;
        let mut um = u0;
        up[j] += h;
        um[j] -= h;
        let fp = eval_stacked(params, &refs, &grid, &x0, &w0, &up);
        let fm = eval_stacked(params, &refs, &grid, &x0, &w0, &um);
        for i in 0..N_STATES {
            b[(i, N_W + j)] = (fp.xdot[i] - fm.xdot[i]) / (2.0 * h);
        }
        for i in 0..N_Z + N_Y {
            d[(i, N_W + j)] = (fp.out[i] - fm.out[i]) / (2.0 * h);
        }
    }

    let mut input_labels: Vec<String> = (1..=N_W).map(|i| format!("w{i}")).collect();
    input_labels.extend(["Icd_ref", "Icq_ref", "omega"].map(String::from));
    let mut output_labels: Vec<String> = (1..=N_Z).map(|i| format!("z{i}")).collect();
    output_labels.extend((1..=N_Y).map(|i| format!("y{i}")));

    let model = StateSpaceModel::with_labels(a, b, c, d, input_labels, output_labels)?;
    Ok(GeneralizedPlant {
        model,
        op: *op,
        params: *params,
    })
}

/// Closed-loop 2x2 admittance from the terminal-voltage perturbation point
/// to the grid-side current, sharing the plant states.
pub fn extract_admittance(plant: &GeneralizedPlant, k: &GainMatrix) -> Result<StateSpaceModel> {
    let m = &plant.model;
    let b1 = m.b.columns(0, N_W).into_owned();
    let b2 = m.b.columns(N_W, N_U).into_owned();
    let c2 = m.c.rows(N_Z, N_Y).into_owned();
    let d21 = m.d.view((N_Z, 0), (N_Y, N_W)).into_owned();
    let d22 = m.d.view((N_Z, N_W), (N_Y, N_U)).into_owned();
    let e = DMatrix::identity(N_Y, N_Y) - &d22 * &k.k;
    let e_inv = e.lu().try_inverse().ok_or(Error::AlgebraicLoop)?;
    let ke = &k.k * e_inv;
    let a_cl = &m.a + &b2 * &ke * &c2;
    let b_cl = &b1 + &b2 * &ke * &d21;
    // Inputs w5, w6; outputs: the grid-side current states.
    let b_sel = DMatrix::from_fn(N_STATES, 2, |r, c| b_cl[(r, 4 + c)]);
    let mut c_sel = DMatrix::zeros(2, N_STATES);
    c_sel[(0, I_D)] = 1.0;
    c_sel[(1, I_Q)] = 1.0;
    StateSpaceModel::with_labels(
        a_cl,
        b_sel,
        c_sel,
        DMatrix::zeros(2, 2),
        vec!["u_d".into(), "u_q".into()],
        vec!["i_d".into(), "i_q".into()],
    )
}

/// SISO closed-loop entry `w_j -> z_i` (1-based indices).
pub fn sensitivity_entry(
    plant: &GeneralizedPlant,
    k: &GainMatrix,
    i: usize,
    j: usize,
) -> Result<StateSpaceModel> {
    if !(1..=N_Z).contains(&i) || !(1..=N_W).contains(&j) {
        return Err(Error::IndexOutOfRange(format!("closed-loop entry ({i},{j})")));
    }
    let cl = plant.close(k)?;
    cl.submodel(&[i - 1], &[j - 1])
}
