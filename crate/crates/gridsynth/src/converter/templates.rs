//! Gain-matrix templates for the two conventional controller structures and
//! the reference gains used as regression fixtures.

use nalgebra::DMatrix;

use crate::converter::plant::GainMatrix;
use crate::error::Result;

/// Gains of the two conventional controller layouts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TemplateGains {
    /// Frequency droop with a cascaded voltage loop: voltage PI gains feed
    /// the current references and the droop coefficient maps the active
    /// power error to the frequency output.
    Droop { k_vp: f64, k_vi: f64, k_f: f64 },
    /// Phase-locked-loop based layout: power PI on the d-axis current
    /// reference, voltage PI on the q-axis, and the PLL PI on the frequency.
    Pll {
        k_pp: f64,
        k_pi: f64,
        k_vp: f64,
        k_vi: f64,
        k_omega_p: f64,
        k_omega_i: f64,
    },
}

/// Lays the gains out in the 3x7 static matrix with the structure mask
/// pinning every other entry to zero.
pub fn controller_template(gains: &TemplateGains) -> Result<GainMatrix> {
    let mut k = DMatrix::zeros(3, 7);
    let mut mask = DMatrix::from_element(3, 7, false);
    let positions: &[(usize, usize, f64)] = match *gains {
        TemplateGains::Droop { k_vp, k_vi, k_f } => &[
            (0, 0, k_vp),
            (0, 1, k_vi),
            (1, 2, k_vp),
            (1, 3, k_vi),
            (2, 4, k_f),
        ],
        TemplateGains::Pll {
            k_pp,
            k_pi,
            k_vp,
            k_vi,
            k_omega_p,
            k_omega_i,
        } => &[
            (0, 4, k_pp),
            (0, 5, k_pi),
            (1, 0, -k_vp),
            (1, 1, -k_vi),
            (2, 2, -k_omega_p),
            (2, 3, -k_omega_i),
        ],
    };
    for &(i, j, v) in positions {
        k[(i, j)] = v;
        mask[(i, j)] = true;
    }
    GainMatrix::new(k, mask)
}

/// Droop gains of the comparison design: `K_VP = 2`, `K_VI = 10`,
/// `K_f = 4 pi`.
pub fn comparison_droop() -> GainMatrix {
    controller_template(&TemplateGains::Droop {
        k_vp: 2.0,
        k_vi: 10.0,
        k_f: 4.0 * std::f64::consts::PI,
    })
    .unwrap()
}

/// PLL-based gains of the comparison design.
pub fn comparison_pll() -> GainMatrix {
    controller_template(&TemplateGains::Pll {
        k_pp: 0.5,
        k_pi: 40.0,
        k_vp: 0.5,
        k_vi: 40.0,
        k_omega_p: 171.8,
        k_omega_i: 14754.2,
    })
    .unwrap()
}

/// Reference PV-mode gain matrix kept as a regression fixture: it must
/// stabilize the whole grid-inductance family and respect the admittance
/// singular-value ceiling.
pub fn reference_pv_gain() -> GainMatrix {
    GainMatrix::full(DMatrix::from_row_slice(
        3,
        7,
        &[
            -0.01, 392.7, 0.1, 183.3, 0.0, 38.8, -2.1, //
            -3.01, -67.1, -0.09, 484.6, 0.0, -62.9, 4.8, //
            -97.7, -1.9, -134.5, 2.3, 55.7, -0.4, 0.04,
        ],
    ))
    .unwrap()
}

/// Reference PQ-mode gain matrix (regression fixture).
pub fn reference_pq_gain() -> GainMatrix {
    GainMatrix::full(DMatrix::from_row_slice(
        3,
        7,
        &[
            -1.35, -61.8, 0.66, 361.8, 0.0, 13.5, 0.0, //
            -0.77, -46.1, -0.22, -27.2, 0.0, -14.9, -0.02, //
            -0.3, -9.3, -257.5, -8.3, 61.6, -2.5, 0.95,
        ],
    ))
    .unwrap()
}
