//! Continuous-time state-space models and their interconnections.
//!
//! All systems are real LTI realizations `(A, B, C, D)` with named input and
//! output channels. Interconnections concatenate states; minimal realizations
//! are never computed, so frequency responses are exact and the stability
//! check always sees the full interconnected A matrix.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Real state-space realization with named channels.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceModel {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
    pub input_labels: Vec<String>,
    pub output_labels: Vec<String>,
}

fn default_labels(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

fn check_unique(labels: &[String], side: &str) -> Result<()> {
    for (i, l) in labels.iter().enumerate() {
        if labels[..i].contains(l) {
            return Err(Error::BadLabels(format!("{side} label `{l}` repeated")));
        }
    }
    Ok(())
}

impl StateSpaceModel {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>, d: DMatrix<f64>) -> Result<Self> {
        let m = b.ncols();
        let p = c.nrows();
        Self::with_labels(a, b, c, d, default_labels("u", m), default_labels("y", p))
    }

    pub fn with_labels(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DMatrix<f64>,
        d: DMatrix<f64>,
        input_labels: Vec<String>,
        output_labels: Vec<String>,
    ) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "A must be square, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if b.nrows() != n {
            return Err(Error::DimensionMismatch(format!(
                "B has {} rows, expected {n}",
                b.nrows()
            )));
        }
        if c.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "C has {} columns, expected {n}",
                c.ncols()
            )));
        }
        if d.nrows() != c.nrows() || d.ncols() != b.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "D is {}x{}, expected {}x{}",
                d.nrows(),
                d.ncols(),
                c.nrows(),
                b.ncols()
            )));
        }
        if input_labels.len() != b.ncols() {
            return Err(Error::BadLabels(format!(
                "{} input labels for {} inputs",
                input_labels.len(),
                b.ncols()
            )));
        }
        if output_labels.len() != c.nrows() {
            return Err(Error::BadLabels(format!(
                "{} output labels for {} outputs",
                output_labels.len(),
                c.nrows()
            )));
        }
        check_unique(&input_labels, "input")?;
        check_unique(&output_labels, "output")?;
        Ok(Self {
            a,
            b,
            c,
            d,
            input_labels,
            output_labels,
        })
    }

    /// Pure gain (stateless) system `y = G u`.
    pub fn static_gain(g: DMatrix<f64>) -> Self {
        let (p, m) = (g.nrows(), g.ncols());
        Self {
            a: DMatrix::zeros(0, 0),
            b: DMatrix::zeros(0, m),
            c: DMatrix::zeros(p, 0),
            d: g,
            input_labels: default_labels("u", m),
            output_labels: default_labels("y", p),
        }
    }

    /// Identity pass-through with `n` channels.
    pub fn identity(n: usize) -> Self {
        Self::static_gain(DMatrix::identity(n, n))
    }

    /// Bank of `n` parallel integrators `y_i = u_i / s`.
    pub fn integrator(n: usize) -> Self {
        Self {
            a: DMatrix::zeros(n, n),
            b: DMatrix::identity(n, n),
            c: DMatrix::identity(n, n),
            d: DMatrix::zeros(n, n),
            input_labels: default_labels("u", n),
            output_labels: default_labels("y", n),
        }
    }

    /// SISO realization of `num(s)/den(s)` in controllable canonical form.
    ///
    /// Coefficients are highest power first. The transfer function must be
    /// proper (`num` degree <= `den` degree).
    pub fn from_siso_tf(num: &[f64], den: &[f64]) -> Result<Self> {
        if den.is_empty() || den[0] == 0.0 {
            return Err(Error::InvalidParameter(
                "denominator leading coefficient must be nonzero".into(),
            ));
        }
        if num.len() > den.len() {
            return Err(Error::InvalidParameter(
                "improper transfer function: numerator degree exceeds denominator".into(),
            ));
        }
        let n = den.len() - 1;
        // Monic denominator and zero-padded numerator of equal length.
        let lead = den[0];
        let den: Vec<f64> = den.iter().map(|c| c / lead).collect();
        let mut num_p = vec![0.0; den.len() - num.len()];
        num_p.extend(num.iter().map(|c| c / lead));
        // d = leading numerator coefficient after padding; remainder is strictly proper.
        let d0 = num_p[0];
        let rem: Vec<f64> = (1..=n).map(|i| num_p[i] - d0 * den[i]).collect();

        let mut a = DMatrix::zeros(n, n);
        for i in 0..n.saturating_sub(1) {
            a[(i, i + 1)] = 1.0;
        }
        for j in 0..n {
            a[(n - 1, j)] = -den[n - j];
        }
        let mut b = DMatrix::zeros(n, 1);
        if n > 0 {
            b[(n - 1, 0)] = 1.0;
        }
        let mut c = DMatrix::zeros(1, n);
        for j in 0..n {
            c[(0, j)] = rem[n - 1 - j];
        }
        let d = DMatrix::from_element(1, 1, d0);
        Self::new(a, b, c, d)
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    pub fn num_inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn num_outputs(&self) -> usize {
        self.c.nrows()
    }

    /// Eigenvalues of the A matrix.
    pub fn poles(&self) -> Vec<Complex64> {
        eigenvalues(&self.a)
    }

    /// Largest real part over the poles; `-inf` for a stateless system.
    pub fn spectral_abscissa(&self) -> f64 {
        self.poles()
            .iter()
            .map(|l| l.re)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_stable(&self) -> bool {
        self.order() == 0 || self.spectral_abscissa() < 0.0
    }

    /// Transfer matrix value `C (sI - A)^{-1} B + D` at `s = j omega`.
    ///
    /// If `sI - A` is singular (pole on the evaluation point), the limit is
    /// approximated by nudging the frequency by a relative `1e-9`.
    pub fn eval_response(&self, omega: f64) -> DMatrix<Complex64> {
        match self.try_eval(omega) {
            Some(v) => v,
            None => {
                let scale = self.a.amax().max(1.0);
                let nudged = if omega == 0.0 { 1e-9 * scale } else { omega * (1.0 + 1e-9) };
                self.try_eval(nudged).unwrap_or_else(|| {
                    DMatrix::from_element(
                        self.num_outputs(),
                        self.num_inputs(),
                        Complex64::new(f64::INFINITY, 0.0),
                    )
                })
            }
        }
    }

    fn try_eval(&self, omega: f64) -> Option<DMatrix<Complex64>> {
        let n = self.order();
        if n == 0 {
            return Some(self.d.map(|x| Complex64::new(x, 0.0)));
        }
        let s = Complex64::new(0.0, omega);
        let mut m = self.a.map(|x| Complex64::new(-x, 0.0));
        for i in 0..n {
            m[(i, i)] += s;
        }
        let bc = self.b.map(|x| Complex64::new(x, 0.0));
        let x = m.lu().solve(&bc)?;
        let mut g = self.c.map(|x| Complex64::new(x, 0.0)) * x;
        g += self.d.map(|x| Complex64::new(x, 0.0));
        if g.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            Some(g)
        } else {
            None
        }
    }

    /// Frequency response over a strictly increasing grid of angular frequencies.
    pub fn frequency_response(&self, omegas: &[f64]) -> Result<FrequencyResponse> {
        if omegas.is_empty() {
            return Err(Error::EmptyGrid);
        }
        if omegas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter(
                "frequency grid must be strictly increasing".into(),
            ));
        }
        let values = omegas.iter().map(|&w| self.eval_response(w)).collect();
        Ok(FrequencyResponse {
            frequencies: omegas.to_vec(),
            values,
        })
    }

    /// Selects output rows and input columns, sharing the state vector.
    pub fn submodel(&self, outputs: &[usize], inputs: &[usize]) -> Result<Self> {
        for &i in outputs {
            if i >= self.num_outputs() {
                return Err(Error::IndexOutOfRange(format!("output {i}")));
            }
        }
        for &j in inputs {
            if j >= self.num_inputs() {
                return Err(Error::IndexOutOfRange(format!("input {j}")));
            }
        }
        let c = DMatrix::from_fn(outputs.len(), self.order(), |i, j| self.c[(outputs[i], j)]);
        let b = DMatrix::from_fn(self.order(), inputs.len(), |i, j| self.b[(i, inputs[j])]);
        let d = DMatrix::from_fn(outputs.len(), inputs.len(), |i, j| {
            self.d[(outputs[i], inputs[j])]
        });
        Self::with_labels(
            self.a.clone(),
            b,
            c,
            d,
            inputs.iter().map(|&j| self.input_labels[j].clone()).collect(),
            outputs
                .iter()
                .map(|&i| self.output_labels[i].clone())
                .collect(),
        )
    }

    /// Output scaled by a constant matrix: `L * G`.
    pub fn premultiply(&self, l: &DMatrix<f64>) -> Result<Self> {
        if l.ncols() != self.num_outputs() {
            return Err(Error::DimensionMismatch(format!(
                "premultiply: {}x{} times {} outputs",
                l.nrows(),
                l.ncols(),
                self.num_outputs()
            )));
        }
        Self::new(self.a.clone(), self.b.clone(), l * &self.c, l * &self.d)
    }

    pub fn scale(&self, alpha: f64) -> Self {
        let mut s = self.clone();
        s.c *= alpha;
        s.d *= alpha;
        s
    }
}

/// Series interconnection `g2 * g1` (signal flows through `g1` first).
pub fn series(g1: &StateSpaceModel, g2: &StateSpaceModel) -> Result<StateSpaceModel> {
    if g1.num_outputs() != g2.num_inputs() {
        return Err(Error::DimensionMismatch(format!(
            "series: {} outputs feeding {} inputs",
            g1.num_outputs(),
            g2.num_inputs()
        )));
    }
    let (n1, n2) = (g1.order(), g2.order());
    let n = n1 + n2;
    let mut a = DMatrix::zeros(n, n);
    a.view_mut((0, 0), (n1, n1)).copy_from(&g1.a);
    a.view_mut((n1, 0), (n2, n1)).copy_from(&(&g2.b * &g1.c));
    a.view_mut((n1, n1), (n2, n2)).copy_from(&g2.a);
    let mut b = DMatrix::zeros(n, g1.num_inputs());
    b.view_mut((0, 0), (n1, g1.num_inputs())).copy_from(&g1.b);
    b.view_mut((n1, 0), (n2, g1.num_inputs()))
        .copy_from(&(&g2.b * &g1.d));
    let mut c = DMatrix::zeros(g2.num_outputs(), n);
    c.view_mut((0, 0), (g2.num_outputs(), n1))
        .copy_from(&(&g2.d * &g1.c));
    c.view_mut((0, n1), (g2.num_outputs(), n2)).copy_from(&g2.c);
    let d = &g2.d * &g1.d;
    StateSpaceModel::with_labels(a, b, c, d, g1.input_labels.clone(), g2.output_labels.clone())
}

/// Parallel interconnection `g1 + g2`.
pub fn parallel(g1: &StateSpaceModel, g2: &StateSpaceModel) -> Result<StateSpaceModel> {
    if g1.num_inputs() != g2.num_inputs() || g1.num_outputs() != g2.num_outputs() {
        return Err(Error::DimensionMismatch(
            "parallel: operand shapes differ".into(),
        ));
    }
    let (n1, n2) = (g1.order(), g2.order());
    let n = n1 + n2;
    let mut a = DMatrix::zeros(n, n);
    a.view_mut((0, 0), (n1, n1)).copy_from(&g1.a);
    a.view_mut((n1, n1), (n2, n2)).copy_from(&g2.a);
    let mut b = DMatrix::zeros(n, g1.num_inputs());
    b.view_mut((0, 0), (n1, g1.num_inputs())).copy_from(&g1.b);
    b.view_mut((n1, 0), (n2, g2.num_inputs())).copy_from(&g2.b);
    let mut c = DMatrix::zeros(g1.num_outputs(), n);
    c.view_mut((0, 0), (g1.num_outputs(), n1)).copy_from(&g1.c);
    c.view_mut((0, n1), (g2.num_outputs(), n2)).copy_from(&g2.c);
    let d = &g1.d + &g2.d;
    StateSpaceModel::with_labels(a, b, c, d, g1.input_labels.clone(), g1.output_labels.clone())
}

/// Closes the loop `u = w + sign * k(y)` around `g`, returning the map `w -> y`.
///
/// The response equals `g (I - sign k g)^{-1}` pointwise. Fails with
/// [`Error::AlgebraicLoop`] when the feedthrough coupling `I - sign Dg Dk`
/// is singular.
pub fn feedback(g: &StateSpaceModel, k: &StateSpaceModel, sign: f64) -> Result<StateSpaceModel> {
    if g.num_outputs() != k.num_inputs() || k.num_outputs() != g.num_inputs() {
        return Err(Error::DimensionMismatch(format!(
            "feedback: plant {}x{}, loop gain {}x{}",
            g.num_outputs(),
            g.num_inputs(),
            k.num_outputs(),
            k.num_inputs()
        )));
    }
    let p = g.num_outputs();
    let e = DMatrix::identity(p, p) - (&g.d * &k.d).scale(sign);
    let e_inv = e.lu().try_inverse().ok_or(Error::AlgebraicLoop)?;

    let (ng, nk) = (g.order(), k.order());
    // y = E^-1 (Cg xg + sign Dg Ck xk + Dg w)
    let y_xg = &e_inv * &g.c;
    let y_xk = (&e_inv * &g.d * &k.c).scale(sign);
    let y_w = &e_inv * &g.d;
    // u = w + sign (Ck xk + Dk y)
    let u_xg = (&k.d * &y_xg).scale(sign);
    let u_xk = (&k.c + &k.d * &y_xk).scale(sign);
    let u_w = DMatrix::identity(g.num_inputs(), g.num_inputs()) + (&k.d * &y_w).scale(sign);

    let n = ng + nk;
    let mut a = DMatrix::zeros(n, n);
    a.view_mut((0, 0), (ng, ng)).copy_from(&(&g.a + &g.b * &u_xg));
    a.view_mut((0, ng), (ng, nk)).copy_from(&(&g.b * &u_xk));
    a.view_mut((ng, 0), (nk, ng)).copy_from(&(&k.b * &y_xg));
    a.view_mut((ng, ng), (nk, nk)).copy_from(&(&k.a + &k.b * &y_xk));
    let mut b = DMatrix::zeros(n, g.num_inputs());
    b.view_mut((0, 0), (ng, g.num_inputs()))
        .copy_from(&(&g.b * &u_w));
    b.view_mut((ng, 0), (nk, g.num_inputs()))
        .copy_from(&(&k.b * &y_w));
    let mut c = DMatrix::zeros(p, n);
    c.view_mut((0, 0), (p, ng)).copy_from(&y_xg);
    c.view_mut((0, ng), (p, nk)).copy_from(&y_xk);
    StateSpaceModel::with_labels(a, b, c, y_w, g.input_labels.clone(), g.output_labels.clone())
}

/// Closes a static gain `u = K y` around a partitioned plant
/// `[z; y] = P [w; u]`, returning the map `w -> z`.
///
/// Inputs are ordered `(w, u)` and outputs `(z, y)`. The state dimension is
/// unchanged. Fails when `I - D22 K` is singular.
pub fn lft_close(
    plant: &StateSpaceModel,
    nw: usize,
    nz: usize,
    k: &DMatrix<f64>,
) -> Result<StateSpaceModel> {
    let nu = plant
        .num_inputs()
        .checked_sub(nw)
        .ok_or_else(|| Error::DimensionMismatch("lft_close: nw exceeds input count".into()))?;
    let ny = plant
        .num_outputs()
        .checked_sub(nz)
        .ok_or_else(|| Error::DimensionMismatch("lft_close: nz exceeds output count".into()))?;
    if k.nrows() != nu || k.ncols() != ny {
        return Err(Error::DimensionMismatch(format!(
            "lft_close: K is {}x{}, expected {}x{}",
            k.nrows(),
            k.ncols(),
            nu,
            ny
        )));
    }
    let n = plant.order();
    let b1 = plant.b.columns(0, nw).into_owned();
    let b2 = plant.b.columns(nw, nu).into_owned();
    let c1 = plant.c.rows(0, nz).into_owned();
    let c2 = plant.c.rows(nz, ny).into_owned();
    let d11 = plant.d.view((0, 0), (nz, nw)).into_owned();
    let d12 = plant.d.view((0, nw), (nz, nu)).into_owned();
    let d21 = plant.d.view((nz, 0), (ny, nw)).into_owned();
    let d22 = plant.d.view((nz, nw), (ny, nu)).into_owned();

    let e = DMatrix::identity(ny, ny) - &d22 * k;
    let e_inv = e.lu().try_inverse().ok_or(Error::AlgebraicLoop)?;
    // u = K (I - D22 K)^-1 (C2 x + D21 w)
    let ke = k * &e_inv;
    let a = &plant.a + &b2 * &ke * &c2;
    let b = &b1 + &b2 * &ke * &d21;
    let c = &c1 + &d12 * &ke * &c2;
    let d = &d11 + &d12 * &ke * &d21;
    debug_assert_eq!(a.nrows(), n);
    StateSpaceModel::with_labels(
        a,
        b,
        c,
        d,
        plant.input_labels[..nw].to_vec(),
        plant.output_labels[..nz].to_vec(),
    )
}

/// Eigenvalues of a square real matrix via the real Schur decomposition.
pub fn eigenvalues(m: &DMatrix<f64>) -> Vec<Complex64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    m.clone().complex_eigenvalues().iter().copied().collect()
}

/// Largest real part over the eigenvalues of `m`.
pub fn spectral_abscissa_of(m: &DMatrix<f64>) -> f64 {
    eigenvalues(m)
        .iter()
        .map(|l| l.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Frequency response samples: one `p x m` complex matrix per grid point.
#[derive(Debug, Clone)]
pub struct FrequencyResponse {
    pub frequencies: Vec<f64>,
    pub values: Vec<DMatrix<Complex64>>,
}

impl FrequencyResponse {
    pub fn entry_magnitudes(&self, i: usize, j: usize) -> Vec<f64> {
        self.values.iter().map(|m| m[(i, j)].norm()).collect()
    }
}

/// Largest singular value of a complex matrix.
///
/// Uses warm-startable power iteration on `M^H M` with an SVD fallback; the
/// returned right singular vector can seed the next call.
pub fn sigma_max_complex(m: &DMatrix<Complex64>, warm: Option<&mut DVector<Complex64>>) -> f64 {
    let (p, q) = (m.nrows(), m.ncols());
    if p == 0 || q == 0 {
        return 0.0;
    }
    let mut v = match &warm {
        Some(w) if w.len() == q && w.norm() > 0.0 => (*w).clone(),
        _ => DVector::from_fn(q, |i, _| Complex64::new(1.0 + (i as f64) * 0.13, 0.0)),
    };
    v /= Complex64::new(v.norm(), 0.0);
    let mut sigma2_prev = 0.0f64;
    for it in 0..60 {
        let w = m * &v;
        let mut u = m.adjoint() * w;
        let sigma2 = u.norm();
        if sigma2 == 0.0 {
            return 0.0;
        }
        u /= Complex64::new(sigma2, 0.0);
        v = u;
        if it > 2 && (sigma2 - sigma2_prev).abs() <= 1e-13 * sigma2.max(1e-300) {
            if let Some(w) = warm {
                *w = v;
            }
            return sigma2.sqrt();
        }
        sigma2_prev = sigma2;
    }
    // Slow convergence (near-degenerate top singular pair): use full SVD.
    let re = m.map(|z| z.re);
    let im = m.map(|z| z.im);
    let mut big = DMatrix::zeros(2 * p, 2 * q);
    big.view_mut((0, 0), (p, q)).copy_from(&re);
    big.view_mut((0, q), (p, q)).copy_from(&(-&im));
    big.view_mut((p, 0), (p, q)).copy_from(&im);
    big.view_mut((p, q), (p, q)).copy_from(&re);
    big.singular_values()[0]
}

/// All singular values of a complex matrix, descending.
pub fn singular_values_complex(m: &DMatrix<Complex64>) -> Vec<f64> {
    let (p, q) = (m.nrows(), m.ncols());
    if p == 0 || q == 0 {
        return Vec::new();
    }
    // Real embedding doubles each singular value's multiplicity.
    let re = m.map(|z| z.re);
    let im = m.map(|z| z.im);
    let mut big = DMatrix::zeros(2 * p, 2 * q);
    big.view_mut((0, 0), (p, q)).copy_from(&re);
    big.view_mut((0, q), (p, q)).copy_from(&(-&im));
    big.view_mut((p, 0), (p, q)).copy_from(&im);
    big.view_mut((p, q), (p, q)).copy_from(&re);
    let sv = big.singular_values();
    let mut out = Vec::with_capacity(p.min(q));
    let mut i = 0;
    while out.len() < p.min(q) && i < sv.len() {
        out.push(sv[i]);
        i += 2;
    }
    out
}
