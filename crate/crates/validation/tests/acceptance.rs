//! One line per acceptance criterion. Each criterion is also its own test so
//! that a failure names the criterion.

use stark_core::dynamics::{interferogram_window, PhaseKind, PhaseModel};
use stark_core::packet::build_packet;
use stark_core::units::{TimeAu, UnitSystem};
use stark_core::verify::{self, CheckResult};

fn report(check: CheckResult) {
    println!("{}", check.line());
    assert!(check.passed, "criterion {} failed: {}", check.id, check.detail);
}

#[test]
fn criterion_1_time_scales() {
    report(verify::check_time_scales(&UnitSystem::CODATA));
}

#[test]
fn criterion_2_field_solvers() {
    report(verify::check_field_solvers(&UnitSystem::CODATA));
}

#[test]
fn criterion_3_fig1_two_cycle_periodicity() {
    report(verify::check_figure1(&UnitSystem::CODATA));
}

#[test]
fn criterion_4_fig2_one_cycle_periodicity() {
    report(verify::check_figure2(&UnitSystem::CODATA));
}

#[test]
fn criterion_5a_full_revival_second_order() {
    report(verify::check_full_revival_taylor2(&UnitSystem::CODATA));
}

#[test]
fn criterion_5b_full_revival_exact_energies() {
    report(verify::check_full_revival_exact(&UnitSystem::CODATA));
}

#[test]
fn criterion_6_half_revival_nodes() {
    report(verify::check_half_revival_nodes(&UnitSystem::CODATA));
}

#[test]
fn criterion_7_oracle_equivalence() {
    report(verify::check_oracle_equivalence());
}

#[test]
fn criterion_8_invariants() {
    report(verify::check_invariants(&UnitSystem::CODATA));
}

#[test]
fn criterion_9_determinism() {
    report(verify::check_determinism(&UnitSystem::CODATA));
}

/// Agreement between exact and second-order phases on the Fig. 3 packet.
#[test]
fn exact_and_taylor2_agree_over_five_k_periods() {
    let cfg = verify::figure_config("fig3").unwrap().resolve().unwrap();
    let wp = build_packet(&cfg.packet).unwrap();
    let ts = cfg.time_scales;
    let t_end = TimeAu::new(5.0 * ts.t_cl_k.au()).unwrap();
    let dt = TimeAu::new(ts.t_cl_n.au() / 50.0).unwrap();
    let zero = TimeAu::new(0.0).unwrap();
    let sample = |kind| {
        let m = PhaseModel::for_packet(kind, &wp).unwrap();
        interferogram_window(&wp, &m, zero, t_end, dt).unwrap()
    };
    let exact = sample(PhaseKind::Exact);
    let taylor = sample(PhaseKind::Taylor2);
    let worst = exact
        .values
        .iter()
        .zip(&taylor.values)
        .map(|(a, b)| (a.norm() - b.norm()).abs())
        .fold(0.0, f64::max);
    println!("max ||A_exact| - |A_taylor2|| over [0, 5 T_cl^(k)] = {worst:.4}");
    assert!(worst < 0.05, "max ||A_exact| - |A_taylor2|| = {worst:.4}");
}
