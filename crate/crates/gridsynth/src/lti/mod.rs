//! LTI algebra: state-space models, interconnections, frequency responses,
//! eigenvalues, singular values and H-infinity norms.

pub mod hinf;
pub mod model;
pub mod sigma;

pub use hinf::{golden_section_max, hinf_norm, hinf_norm_grid, HinfMethod, HinfResult};
pub use model::{
    eigenvalues, feedback, lft_close, parallel, series, sigma_max_complex,
    singular_values_complex, spectral_abscissa_of, FrequencyResponse, StateSpaceModel,
};
pub use sigma::{default_grid, log_grid_hz, sigma_plot, SigmaPlot};
