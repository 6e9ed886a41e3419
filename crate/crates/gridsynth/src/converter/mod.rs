//! Converter modeling: physical parameters, operating points, the linearized
//! generalized plant, controller templates and admittance extraction.

pub mod dynamics;
pub mod op;
pub mod plant;
pub mod templates;

pub use dynamics::{
    evaluate, rotate, state_labels, ControlMode, ConverterParams, Evaluation, GridInterface,
    References, N_STATES, N_U, N_W, N_Y, N_Z,
};
pub use op::{solve_operating_point, solve_operating_point_at, steady_controller_states, OperatingPoint};
pub use plant::{
    build_plant, equilibrium_state, extract_admittance, sensitivity_entry, GainMatrix,
    GeneralizedPlant,
};
pub use templates::{
    comparison_droop, comparison_pll, controller_template, reference_pv_gain, reference_pq_gain,
    TemplateGains,
};
