//! Frequency-domain weighting functions and the entrywise-weighted
//! H-infinity objective.
//!
//! A weighting spec is a sparse map from closed-loop entry `(i, j)` (output
//! row, input column, both 1-based) to a rational weight. Unspecified entries
//! are identically zero so the objective only sees the shaped channels.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lti::{
    golden_section_max, parallel, series, sigma_max_complex, StateSpaceModel,
};

/// Rational weight families used by the shaping objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RationalWeight {
    /// `(s + a) / (s + b)`
    LeadLag { a: f64, b: f64 },
    /// `k (s^2/w2^2 + 2 xi2 s/w2 + 1) / (s^2/w1^2 + 2 xi1 s/w1 + 1)`
    BiquadRatio {
        k: f64,
        omega1: f64,
        xi1: f64,
        omega2: f64,
        xi2: f64,
    },
    /// `k / (s^2/w1^2 + 2 xi1 s/w1 + 1)^2`
    DoubleBiquadInverse { k: f64, omega1: f64, xi1: f64 },
    Zero,
}

impl RationalWeight {
    /// Numerator and denominator coefficients, highest power first.
    pub fn as_tf(&self) -> (Vec<f64>, Vec<f64>) {
        match *self {
            RationalWeight::LeadLag { a, b } => (vec![1.0, a], vec![1.0, b]),
            RationalWeight::BiquadRatio {
                k,
                omega1,
                xi1,
                omega2,
                xi2,
            } => (
                vec![k / (omega2 * omega2), 2.0 * k * xi2 / omega2, k],
                vec![1.0 / (omega1 * omega1), 2.0 * xi1 / omega1, 1.0],
            ),
            RationalWeight::DoubleBiquadInverse { k, omega1, xi1 } => {
                let d = [1.0 / (omega1 * omega1), 2.0 * xi1 / omega1, 1.0];
                // (d * d) convolution.
                let den = vec![
                    d[0] * d[0],
                    2.0 * d[0] * d[1],
                    2.0 * d[0] * d[2] + d[1] * d[1],
                    2.0 * d[1] * d[2],
                    d[2] * d[2],
                ];
                (vec![k], den)
            }
            RationalWeight::Zero => (vec![0.0], vec![1.0]),
        }
    }

    /// Exact value at `s = j omega`.
    pub fn eval(&self, omega: f64) -> Complex64 {
        let (num, den) = self.as_tf();
        let s = Complex64::new(0.0, omega);
        let horner = |coeffs: &[f64]| {
            coeffs
                .iter()
                .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * s + c)
        };
        let d = horner(&den);
        if d.norm() == 0.0 {
            Complex64::new(f64::INFINITY, 0.0)
        } else {
            horner(&num) / d
        }
    }

    /// Exact state-space realization (biproper families keep their feedthrough).
    pub fn realize(&self) -> Result<StateSpaceModel> {
        let (num, den) = self.as_tf();
        StateSpaceModel::from_siso_tf(&num, &den)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, RationalWeight::Zero)
    }

    fn check(&self) -> Result<()> {
        let ok = match *self {
            RationalWeight::LeadLag { b, .. } => b > 0.0,
            RationalWeight::BiquadRatio {
                omega1,
                xi1,
                omega2,
                xi2,
                ..
            } => omega1 > 0.0 && xi1 > 0.0 && omega2 > 0.0 && xi2 > 0.0,
            RationalWeight::DoubleBiquadInverse { omega1, xi1, .. } => omega1 > 0.0 && xi1 > 0.0,
            RationalWeight::Zero => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "weight denominator is not Hurwitz: {self:?}"
            )))
        }
    }
}

/// Sparse map of entry weights over a `rows x cols` closed-loop shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightingSpec {
    pub rows: usize,
    pub cols: usize,
    /// Keyed by 1-based `(output row, input column)`.
    pub entries: BTreeMap<(usize, usize), RationalWeight>,
}

impl WeightingSpec {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: BTreeMap::new(),
        }
    }

    pub fn set(&mut self, i: usize, j: usize, w: RationalWeight) -> Result<()> {
        if i == 0 || j == 0 || i > self.rows || j > self.cols {
            return Err(Error::IndexOutOfRange(format!("weight entry ({i},{j})")));
        }
        w.check()?;
        if w.is_zero() {
            self.entries.remove(&(i, j));
        } else {
            self.entries.insert((i, j), w);
        }
        Ok(())
    }

    /// Weight value at `s = j omega`; absent entries evaluate to zero.
    pub fn eval(&self, i: usize, j: usize, omega: f64) -> Complex64 {
        match self.entries.get(&(i, j)) {
            Some(w) => w.eval(omega),
            None => Complex64::new(0.0, 0.0),
        }
    }

    /// Dense weight matrix at one frequency.
    pub fn eval_matrix(&self, omega: f64) -> DMatrix<Complex64> {
        let mut m = DMatrix::from_element(self.rows, self.cols, Complex64::new(0.0, 0.0));
        for (&(i, j), w) in &self.entries {
            m[(i - 1, j - 1)] = w.eval(omega);
        }
        m
    }
}

fn power_tracking_family(k: f64) -> RationalWeight {
    RationalWeight::BiquadRatio {
        k,
        omega1: 7e5,
        xi1: 0.35,
        omega2: 1000.0,
        xi2: 0.8,
    }
}

fn admittance_family() -> RationalWeight {
    RationalWeight::DoubleBiquadInverse {
        k: 0.5,
        omega1: 1000.0,
        xi1: 0.6,
    }
}

/// Shaping weights for the constant-voltage (PV) control mode.
///
/// Populates exactly the thirteen entries used for angle-disturbance
/// rejection, power tracking/rejection, voltage tracking and the admittance
/// channels; all other entries stay zero.
pub fn default_pv_weights() -> WeightingSpec {
    let mut spec = WeightingSpec::new(10, 7);
    spec.set(7, 7, RationalWeight::LeadLag { a: 0.2, b: 1e-4 }).unwrap();
    spec.set(8, 3, RationalWeight::LeadLag { a: 5.0, b: 5e-4 }).unwrap();
    spec.set(5, 3, power_tracking_family(1.0)).unwrap();
    spec.set(5, 5, power_tracking_family(1.0)).unwrap();
    spec.set(6, 3, power_tracking_family(1.0 / 6.0)).unwrap();
    spec.set(3, 1, RationalWeight::LeadLag { a: 20.0, b: 1e-5 }).unwrap();
    spec.set(4, 2, RationalWeight::LeadLag { a: 20.0, b: 1e-5 }).unwrap();
    let voltage_tracking = RationalWeight::BiquadRatio {
        k: 1.0,
        omega1: 7e5,
        xi1: 0.1,
        omega2: 7e3,
        xi2: 0.1,
    };
    spec.set(1, 1, voltage_tracking.clone()).unwrap();
    spec.set(2, 2, voltage_tracking).unwrap();
    for (i, j) in [(9, 5), (9, 6), (10, 5), (10, 6)] {
        spec.set(i, j, admittance_family()).unwrap();
    }
    spec
}

/// Weights for the constant-reactive-power (PQ) mode, together with the
/// plant reconfiguration it requires (`y2` integrates the reactive-power
/// error and `z3` is rebound to the reactive-power error signal).
#[derive(Debug, Clone, PartialEq)]
pub struct PqWeighting {
    pub spec: WeightingSpec,
    /// The plant must be built in PQ mode for these weights to apply.
    pub plant_mode: crate::converter::ControlMode,
}

pub fn default_pq_weights() -> PqWeighting {
    let mut spec = default_pv_weights();
    spec.set(1, 1, RationalWeight::Zero).unwrap();
    spec.set(3, 1, RationalWeight::Zero).unwrap();
    spec.set(6, 4, power_tracking_family(1.0)).unwrap();
    spec.set(3, 4, RationalWeight::LeadLag { a: 5.0, b: 5e-4 }).unwrap();
    PqWeighting {
        spec,
        plant_mode: crate::converter::ControlMode::Pq,
    }
}

/// Outcome of evaluating the entrywise-weighted objective.
#[derive(Debug, Clone, Copy)]
pub struct ObjectiveValue {
    pub value: f64,
    pub peak_frequency: f64,
    /// False when the closed loop was not asymptotically stable; `value` is
    /// then the `+inf` sentinel rather than a norm.
    pub stable: bool,
}

/// `sigma_max(W(jw) o P(jw))` evaluated from precomputed response samples.
pub fn weighted_sigma(
    weights: &WeightingSpec,
    response: &DMatrix<Complex64>,
    omega: f64,
    warm: Option<&mut DVector<Complex64>>,
) -> f64 {
    let mut m = DMatrix::from_element(weights.rows, weights.cols, Complex64::new(0.0, 0.0));
    for (&(i, j), w) in &weights.entries {
        m[(i - 1, j - 1)] = w.eval(omega) * response[(i - 1, j - 1)];
    }
    sigma_max_complex(&m, warm)
}

/// Max over the grid of `sigma_max(W(jw) o P(K)(jw))`.
///
/// An unstable closed loop yields the `+inf` sentinel with `stable = false`
/// instead of an error so optimizers can rank infeasible candidates. With
/// `refine` set, a golden-section pass around the three strongest grid peaks
/// sharpens the returned value (never decreasing it).
pub fn weighted_objective(
    cl: &StateSpaceModel,
    weights: &WeightingSpec,
    grid: &[f64],
    refine: bool,
) -> Result<ObjectiveValue> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if cl.num_outputs() != weights.rows || cl.num_inputs() != weights.cols {
        return Err(Error::DimensionMismatch(format!(
            "weighted_objective: closed loop {}x{}, weights {}x{}",
            cl.num_outputs(),
            cl.num_inputs(),
            weights.rows,
            weights.cols
        )));
    }
    if cl.order() > 0 && cl.spectral_abscissa() >= 0.0 {
        return Ok(ObjectiveValue {
            value: f64::INFINITY,
            peak_frequency: 0.0,
            stable: false,
        });
    }
    let mut warm: Option<DVector<Complex64>> = None;
    let mut sigmas = Vec::with_capacity(grid.len());
    for &w in grid {
        let resp = cl.eval_response(w);
        let s = weighted_sigma(weights, &resp, w, warm.get_or_insert_with(|| {
            DVector::from_element(weights.cols, Complex64::new(1.0, 0.0))
        }).into());
        sigmas.push(s);
    }
    let (mut best_idx, mut best) = (0usize, f64::NEG_INFINITY);
    for (i, &s) in sigmas.iter().enumerate() {
        if s > best {
            best = s;
            best_idx = i;
        }
    }
    let mut peak = grid[best_idx];
    if refine && grid.len() > 2 {
        let mut peaks: Vec<usize> = (1..grid.len() - 1)
            .filter(|&i| sigmas[i] >= sigmas[i - 1] && sigmas[i] >= sigmas[i + 1])
            .collect();
        peaks.sort_by(|&i, &j| sigmas[j].total_cmp(&sigmas[i]));
        peaks.truncate(3);
        for &i in &peaks {
            let eval = |w: f64| weighted_sigma(weights, &cl.eval_response(w), w, None);
            let (w_star, s_star) = golden_section_max(eval, grid[i - 1], grid[i + 1], 1e-7);
            if s_star > best {
                best = s_star;
                peak = w_star;
            }
        }
    }
    Ok(ObjectiveValue {
        value: best,
        peak_frequency: peak,
        stable: true,
    })
}

/// Exact realization of `W o P(K)` as a state-space system.
///
/// Column `j` of the closed loop is realized once (sharing its states) and
/// each weighted entry `(i, j)` cascades its weight realization onto output
/// `i` of that column. Used for the certified final verification of the
/// gridded objective.
pub fn realize_weighted_map(
    cl: &StateSpaceModel,
    weights: &WeightingSpec,
) -> Result<StateSpaceModel> {
    let (rows, cols) = (weights.rows, weights.cols);
    let mut total: Option<StateSpaceModel> = None;
    for j in 1..=cols {
        let col_entries: Vec<usize> = (1..=rows)
            .filter(|&i| weights.entries.contains_key(&(i, j)))
            .collect();
        if col_entries.is_empty() {
            continue;
        }
        let column = cl.submodel(
            &(0..rows).collect::<Vec<_>>(),
            &[j - 1],
        )?;
        // Weighted outputs of this column, embedded into the full row space.
        let mut blocks: Option<StateSpaceModel> = None;
        for &i in &col_entries {
            let w_ss = weights.entries[&(i, j)].realize()?;
            let entry = column.submodel(&[i - 1], &[0])?;
            let cascade = series(&entry, &w_ss)?;
            let mut embed_c = DMatrix::zeros(rows, cascade.order());
            embed_c.row_mut(i - 1).copy_from(&cascade.c.row(0));
            let mut embed_d = DMatrix::zeros(rows, 1);
            embed_d[(i - 1, 0)] = cascade.d[(0, 0)];
            let embedded = StateSpaceModel::new(cascade.a.clone(), cascade.b.clone(), embed_c, embed_d)?;
            blocks = Some(match blocks {
                None => embedded,
                Some(acc) => parallel(&acc, &embedded)?,
            });
        }
        let col_sys = blocks.unwrap();
        // Widen from single input j to the full input space.
        let mut b_wide = DMatrix::zeros(col_sys.order(), cols);
        b_wide.column_mut(j - 1).copy_from(&col_sys.b.column(0));
        let mut d_wide = DMatrix::zeros(rows, cols);
        d_wide.column_mut(j - 1).copy_from(&col_sys.d.column(0));
        let widened = StateSpaceModel::new(col_sys.a.clone(), b_wide, col_sys.c.clone(), d_wide)?;
        total = Some(match total {
            None => widened,
            Some(acc) => parallel(&acc, &widened)?,
        });
    }
    match total {
        Some(t) => Ok(t),
        None => Ok(StateSpaceModel::static_gain(DMatrix::zeros(rows, cols))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn pv_spec_has_exactly_the_thirteen_entries() {
        let spec = default_pv_weights();
        let expect: Vec<(usize, usize)> = vec![
            (1, 1),
            (2, 2),
            (3, 1),
            (4, 2),
            (5, 3),
            (5, 5),
            (6, 3),
            (7, 7),
            (8, 3),
            (9, 5),
            (9, 6),
            (10, 5),
            (10, 6),
        ];
        let got: Vec<(usize, usize)> = spec.entries.keys().copied().collect();
        assert_eq!(got, expect);
    }

    #[test]
    fn angle_weight_magnitudes() {
        let spec = default_pv_weights();
        assert_relative_eq!(spec.eval(7, 7, 0.0).norm(), 2000.0, max_relative = 1e-12);
        // Equal numerator/denominator degree: unit high-frequency limit.
        assert_relative_eq!(spec.eval(7, 7, 1e9).norm(), 1.0, max_relative = 1e-6);
    }

    #[test]
    fn power_weight_magnitudes() {
        let spec = default_pv_weights();
        assert_relative_eq!(spec.eval(8, 3, 0.0).norm(), 10000.0, max_relative = 1e-12);
        // Biquad ratio high-frequency limit is (w1/w2)^2.
        let hf = spec.eval(5, 3, 1e12).norm();
        assert_relative_eq!(hf, (7e5 / 1e3) * (7e5 / 1e3), max_relative = 1e-3);
    }

    #[test]
    fn admittance_weight_dc_gain() {
        let spec = default_pv_weights();
        assert_relative_eq!(spec.eval(9, 5, 0.0).norm(), 0.5, max_relative = 1e-12);
        assert_relative_eq!(spec.eval(10, 6, 0.0).norm(), 0.5, max_relative = 1e-12);
    }

    #[test]
    fn zero_entries_evaluate_to_zero() {
        let spec = default_pv_weights();
        assert_eq!(spec.eval(1, 7, 12.3), Complex64::new(0.0, 0.0));
        assert_eq!(spec.eval(10, 1, 0.0), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn pq_reconfiguration() {
        let pq = default_pq_weights();
        assert!(!pq.spec.entries.contains_key(&(1, 1)));
        assert!(!pq.spec.entries.contains_key(&(3, 1)));
        assert_eq!(pq.spec.entries[&(6, 4)], pq.spec.entries[&(5, 3)]);
        assert_eq!(
            pq.spec.entries[&(3, 4)],
            RationalWeight::LeadLag { a: 5.0, b: 5e-4 }
        );
        assert_eq!(pq.plant_mode, crate::converter::ControlMode::Pq);
        // Nothing outside the documented pattern.
        let expect: Vec<(usize, usize)> = vec![
            (2, 2),
            (3, 4),
            (4, 2),
            (5, 3),
            (5, 5),
            (6, 3),
            (6, 4),
            (7, 7),
            (8, 3),
            (9, 5),
            (9, 6),
            (10, 5),
            (10, 6),
        ];
        let got: Vec<(usize, usize)> = pq.spec.entries.keys().copied().collect();
        assert_eq!(got, expect);
    }

    #[test]
    fn weight_realizations_match_pointwise_evaluation() {
        let spec = default_pv_weights();
        for w in spec.entries.values() {
            let ss = w.realize().unwrap();
            for &omega in &[0.0, 0.3, 17.0, 1000.0, 3.3e4] {
                let direct = w.eval(omega);
                let via_ss = ss.eval_response(omega)[(0, 0)];
                assert!(
                    (direct - via_ss).norm() <= 1e-9 * direct.norm().max(1.0),
                    "mismatch for {w:?} at {omega}: {direct} vs {via_ss}"
                );
            }
        }
    }

    #[test]
    fn objective_zero_spec_is_zero() {
        let cl = StateSpaceModel::static_gain(DMatrix::from_fn(10, 7, |i, j| {
            (i + j) as f64 * 0.1
        }));
        let spec = WeightingSpec::new(10, 7);
        let v = weighted_objective(&cl, &spec, &[0.0, 1.0, 10.0], false).unwrap();
        assert_eq!(v.value, 0.0);
        assert!(v.stable);
    }

    #[test]
    fn objective_single_unit_entry_is_siso_peak() {
        // One first-order channel embedded at (5, 3).
        let lag = StateSpaceModel::from_siso_tf(&[1.0], &[1.0, 1.0]).unwrap();
        let mut c = DMatrix::zeros(10, 1);
        c[(4, 0)] = lag.c[(0, 0)];
        let mut b = DMatrix::zeros(1, 7);
        b[(0, 2)] = 1.0;
        let cl = StateSpaceModel::new(lag.a.clone(), b, c, DMatrix::zeros(10, 7)).unwrap();
        let mut spec = WeightingSpec::new(10, 7);
        // A constant unit weight: lead-lag with a == b has unit magnitude everywhere.
        spec.set(5, 3, RationalWeight::LeadLag { a: 1.0, b: 1.0 }).unwrap();
        let grid: Vec<f64> = vec![0.0, 0.5, 1.0, 2.0, 10.0];
        let v = weighted_objective(&cl, &spec, &grid, false).unwrap();
        // SISO peak of 1/(s+1) over the grid is at DC.
        assert_relative_eq!(v.value, 1.0, max_relative = 1e-9);
        assert_eq!(v.peak_frequency, 0.0);
    }

    #[test]
    fn unstable_closed_loop_yields_sentinel() {
        let unstable = StateSpaceModel::new(
            DMatrix::from_element(1, 1, 0.5),
            DMatrix::from_element(1, 7, 1.0),
            DMatrix::from_fn(10, 1, |_, _| 1.0),
            DMatrix::zeros(10, 7),
        )
        .unwrap();
        let v = weighted_objective(&unstable, &default_pv_weights(), &[0.0, 1.0], false).unwrap();
        assert!(v.value.is_infinite());
        assert!(!v.stable);
    }

    #[test]
    fn refinement_is_monotone() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let n = 6;
        let mut a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let shift = crate::lti::spectral_abscissa_of(&a) + 0.2;
        for i in 0..n {
            a[(i, i)] -= shift.max(0.2);
        }
        let b = DMatrix::from_fn(n, 7, |_, _| rng.gen_range(-1.0..1.0));
        let c = DMatrix::from_fn(10, n, |_, _| rng.gen_range(-1.0..1.0));
        let cl = StateSpaceModel::new(a, b, c, DMatrix::zeros(10, 7)).unwrap();
        let grid = crate::lti::default_grid();
        let coarse = weighted_objective(&cl, &default_pv_weights(), &grid, false).unwrap();
        let fine = weighted_objective(&cl, &default_pv_weights(), &grid, true).unwrap();
        assert!(fine.value >= coarse.value);
    }

    #[test]
    fn entrywise_product_sanity_envelope() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let spec = default_pv_weights();
        for _ in 0..20 {
            let omega = 10f64.powf(rng.gen_range(-3.0..4.0));
            let p = DMatrix::from_fn(10, 7, |_, _| {
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            });
            let hadamard = weighted_sigma(&spec, &p, omega, None);
            let w_frob = spec
                .eval_matrix(omega)
                .iter()
                .map(|z| z.norm_sqr())
                .sum::<f64>()
                .sqrt();
            let p_max = p.iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(hadamard <= w_frob * p_max * (1.0 + 1e-9));
        }
    }

    #[test]
    fn realized_map_matches_pointwise_product() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        let n = 5;
        let mut a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let shift = crate::lti::spectral_abscissa_of(&a) + 0.5;
        for i in 0..n {
            a[(i, i)] -= shift.max(0.5);
        }
        let b = DMatrix::from_fn(n, 7, |_, _| rng.gen_range(-1.0..1.0));
        let c = DMatrix::from_fn(10, n, |_, _| rng.gen_range(-1.0..1.0));
        let cl = StateSpaceModel::new(a, b, c, DMatrix::zeros(10, 7)).unwrap();
        let spec = default_pv_weights();
        let realized = realize_weighted_map(&cl, &spec).unwrap();
        for &omega in &[0.0, 0.02, 1.0, 45.0, 900.0] {
            let resp = cl.eval_response(omega);
            let mut expect = DMatrix::from_element(10, 7, Complex64::new(0.0, 0.0));
            for (&(i, j), w) in &spec.entries {
                expect[(i - 1, j - 1)] = w.eval(omega) * resp[(i - 1, j - 1)];
            }
            let got = realized.eval_response(omega);
            let dev = (got - expect).norm();
            assert!(dev < 1e-8, "deviation {dev} at omega {omega}");
        }
    }
}
