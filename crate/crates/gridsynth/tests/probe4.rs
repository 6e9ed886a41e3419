// Continuation from the droop gain to the reference PV gain, plus entry
// sensitivity of the spectral abscissa.

use gridsynth::converter::*;
use gridsynth::lti::spectral_abscissa_of;
use nalgebra::DMatrix;

fn abscissa(plant: &GeneralizedPlant, k: &DMatrix<f64>) -> f64 {
    let gm = GainMatrix::full(k.clone()).unwrap();
    spectral_abscissa_of(&plant.closed_loop_a(&gm).unwrap())
}

#[test]
fn continuation_and_sensitivity() {
    let params = ConverterParams::base_design().with_l_g(0.2);
    let op = solve_operating_point(&params, 1.0, 1.0, 1.0).unwrap();
    let plant = build_plant(&params, &op).unwrap();
    let k0 = comparison_droop().k;
    let k1 = reference_pv_gain().k;
    let mut crossing = None;
    for step in 0..=40 {
        let t = step as f64 / 40.0;
        let k = &k0 * (1.0 - t) + &k1 * t;
        let a = abscissa(&plant, &k);
        if step % 4 == 0 || (a > 0.0 && crossing.is_none()) {
            println!("t = {t:.3}: abscissa = {a:.4}");
        }
        if a > 0.001 && crossing.is_none() {
            crossing = Some(t);
            // identify crossing mode frequency
            let gm = GainMatrix::full(k.clone()).unwrap();
            let acl = plant.closed_loop_a(&gm).unwrap();
            let eigs = gridsynth::lti::eigenvalues(&acl);
            let worst = eigs.iter().max_by(|x, y| x.re.total_cmp(&y.re)).unwrap();
            println!("  first unstable mode: {:.3} + {:.3}j", worst.re, worst.im);
        }
    }

    // Entry sensitivities at the crossing point.
    let t = crossing.unwrap_or(0.5);
    let kc = &k0 * (1.0 - t) + &k1 * t;
    let base = abscissa(&plant, &kc);
    println!("sensitivities at t = {t:.3} (abscissa {base:.4}):");
    let mut sens = Vec::new();
    for i in 0..3 {
        for j in 0..7 {
            let h = 1.0_f64.max(kc[(i, j)].abs() * 1e-3);
            let mut kp = kc.clone();
            kp[(i, j)] += h;
            let da = (abscissa(&plant, &kp) - base) / h;
            sens.push(((i + 1, j + 1), da, kc[(i, j)]));
        }
    }
    sens.sort_by(|x, y| y.1.abs().total_cmp(&x.1.abs()));
    for (idx, da, val) in sens.iter().take(8) {
        println!("  dA/dK{:?} = {da:+.5} at K = {val:.2}", idx);
    }
}
