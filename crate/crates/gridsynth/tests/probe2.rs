// Eigenvector participation diagnostics for the reference PV gain.

use gridsynth::converter::*;
use nalgebra::DMatrix;
use num_complex::Complex64;

fn participation(a: &DMatrix<f64>, which_re_min: f64) {
    let n = a.nrows();
    let ac = a.map(|x| Complex64::new(x, 0.0));
    // Power iteration on (A - s I)^-1 near unstable eigenvalue via shift.
    // Simpler: use Schur-less approach: find eigen via nalgebra on small matrix.
    let eigs = a.clone().complex_eigenvalues();
    let labels = state_labels();
    for k in 0..n {
        let l = eigs[k];
        if l.re > which_re_min && l.im >= 0.0 {
            // inverse iteration for eigenvector
            let mut m = ac.clone();
            let shift = l + Complex64::new(1e-6, 1e-6);
            for i in 0..n {
                m[(i, i)] -= shift;
            }
            let lu = m.lu();
            let mut v = nalgebra::DVector::from_element(n, Complex64::new(1.0, 0.0));
            for _ in 0..8 {
                if let Some(x) = lu.solve(&v) {
                    let nrm = x.norm();
                    if nrm > 0.0 {
                        v = x / Complex64::new(nrm, 0.0);
                    }
                } else {
                    break;
                }
            }
            let mut parts: Vec<(String, f64)> = (0..n)
                .map(|i| (labels[i].clone(), v[i].norm()))
                .collect();
            parts.sort_by(|x, y| y.1.total_cmp(&x.1));
            println!(
                "  eig {:.2}+{:.2}j -> {:?}",
                l.re,
                l.im,
                &parts[..5.min(parts.len())]
            );
        }
    }
}

#[test]
fn probe_unstable_mode_participation() {
    for lg in [0.05, 0.2, 0.5] {
        let params = ConverterParams::base_design().with_l_g(lg);
        let op = solve_operating_point(&params, 1.0, 1.0, 1.0).unwrap();
        let plant = build_plant(&params, &op).unwrap();
        let a = plant.closed_loop_a(&reference_pv_gain()).unwrap();
        println!("refPV L_g={lg}:");
        participation(&a, 0.0);
    }
    // Row-isolation: which coupling rows drive the instability at L_g = 0.2?
    let params = ConverterParams::base_design().with_l_g(0.2);
    let op = solve_operating_point(&params, 1.0, 1.0, 1.0).unwrap();
    let plant = build_plant(&params, &op).unwrap();
    let kfull = reference_pv_gain();
    let droop = comparison_droop();
    for (label, rows) in [
        ("row1 only (droop rows 2,3)", [true, false, false]),
        ("row2 only (droop rows 1,3)", [false, true, false]),
        ("row3 only (droop rows 1,2)", [false, false, true]),
    ] {
        let mut k = droop.k.clone();
        for r in 0..3 {
            if rows[r] {
                for c in 0..7 {
                    k[(r, c)] = kfull.k[(r, c)];
                }
            }
        }
        let gm = GainMatrix::full(k).unwrap();
        let a = plant.closed_loop_a(&gm).unwrap();
        let absc = gridsynth::lti::spectral_abscissa_of(&a);
        println!("hybrid {label}: abscissa = {absc:.4}");
    }
}
