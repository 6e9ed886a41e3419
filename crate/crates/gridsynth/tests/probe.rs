// Temporary diagnostics for model reconstruction. Run with --nocapture.

use gridsynth::converter::*;
use gridsynth::lti::spectral_abscissa_of;

fn abscissa_report(label: &str, k: &GainMatrix, l_g: f64, mode: ControlMode) {
    let params = ConverterParams::base_design().with_l_g(l_g).with_mode(mode);
    let op = solve_operating_point(&params, 1.0, 1.0, 1.0).unwrap();
    let plant = build_plant(&params, &op).unwrap();
    let a = plant.closed_loop_a(k).unwrap();
    let eigs = gridsynth::lti::eigenvalues(&a);
    let mut sorted: Vec<_> = eigs.iter().map(|l| (l.re, l.im)).collect();
    sorted.sort_by(|x, y| y.0.total_cmp(&x.0));
    println!(
        "{label} L_g={l_g}: abscissa = {:.6}, top eigs: {:?}",
        spectral_abscissa_of(&a),
        &sorted[..5.min(sorted.len())]
    );
}

#[test]
fn probe_template_stability() {
    for lg in [0.05, 0.2, 0.5] {
        abscissa_report("droop", &comparison_droop(), lg, ControlMode::Pv);
    }
    for lg in [0.05, 0.2, 0.5] {
        abscissa_report("pll  ", &comparison_pll(), lg, ControlMode::Pv);
    }
    for lg in [0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5] {
        abscissa_report("refPV", &reference_pv_gain(), lg, ControlMode::Pv);
    }
    for lg in [0.05, 0.2, 0.5] {
        abscissa_report("refPQ", &reference_pq_gain(), lg, ControlMode::Pq);
    }
}
