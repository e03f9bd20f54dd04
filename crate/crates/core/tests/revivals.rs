use num_complex::Complex64;
use num_integer::Integer;
use proptest::prelude::*;
use stark_core::dynamics::{autocorrelation, PhaseKind, PhaseModel};
use stark_core::packet::{build_packet, PacketSpec, Truncation, WavePacket};
use stark_core::revivals::*;
use stark_core::stark::{solve_field_for_revival_ratio, Ratio};
use stark_core::units::TimeAu;
use std::f64::consts::PI;

fn packet(nbar: u32, rs: &str) -> WavePacket {
    let f = solve_field_for_revival_ratio(nbar, rs.parse().unwrap()).unwrap();
    build_packet(&PacketSpec { truncation: Truncation::Full, ..PacketSpec::three_manifold(nbar, f) }).unwrap()
}

/// Brute-force second-order phase in cycles at `t`, from the raw time scales.
fn brute_quadratic_cycles(sp: &SplitPacket, n: i64, k_phys: i64, t: f64) -> f64 {
    let ts = &sp.time_scales;
    -(n * n) as f64 * t / ts.t_rev_n.au() + (n * k_phys) as f64 * t / (2.0 * ts.t_rev_nk.au())
}

fn reduced_fractions(max_num: u64, max_den: u64) -> Vec<(u64, u64)> {
    let mut out = Vec::new();
    for q in 1..=max_den {
        for p in 1..=max_num * q {
            if p.gcd(&q) == 1 {
                out.push((p, q));
            }
        }
    }
    out
}

#[test]
fn split_recombines_to_original() {
    let wp = packet(24, "1/12");
    let sp = split_odd_even(&wp).unwrap();
    assert!(sp.odd_part.entries.iter().all(|e| e.level.n() != 24));
    assert!(sp.even_part.entries.iter().all(|e| e.level.n() == 24));
    let odd: Vec<_> = sp.odd_part.entries.iter().map(|e| e.coeff).collect();
    let even: Vec<_> = sp.even_part.entries.iter().map(|e| e.coeff).collect();
    assert_eq!(sp.recombine(&odd, &even).unwrap(), wp.coeffs());
    assert!((sp.odd_part.norm_sqr() + sp.even_part.norm_sqr() - 1.0).abs() < 1e-14);
    for part in sp.parts() {
        let mut ks: Vec<i64> = part.entries.iter().filter(|e| e.n == part.entries[0].n).map(|e| e.k).collect();
        ks.sort();
        assert!(ks.windows(2).all(|w| w[1] == w[0] + 1), "{ks:?}");
    }
    assert!(sp.recombine(&odd[1..], &even).is_err());
}

#[test]
fn split_phase_sum_matches_unsplit_evaluation() {
    for (nbar, rs) in [(24, "1/12"), (25, "1/16")] {
        let wp = packet(nbar, rs);
        let sp = split_odd_even(&wp).unwrap();
        let model = PhaseModel::for_packet(PhaseKind::Taylor2, &wp).unwrap();
        let common = -0.5 / (nbar as f64).powi(2);
        let t_rev = full_revival_time(&sp.time_scales).unwrap().au();
        for j in 0..20 {
            let t = TimeAu::new(t_rev * (0.013 + 0.0517 * j as f64)).unwrap();
            let want = autocorrelation(&wp, &model, t).unwrap();
            let got = split_autocorrelation(&sp, t) * Complex64::from_polar(1.0, -common * t.au());
            assert!((got - want).norm() < 1e-12, "t = {t}: {got} vs {want}");
        }
    }
}

#[test]
fn theta_matches_brute_force_phase() {
    let wp = packet(24, "1/12");
    let sp = split_odd_even(&wp).unwrap();
    let rs: Ratio = "1/12".parse().unwrap();
    let ft = fractional_time(6, 1, &sp.time_scales).unwrap();
    let t = ft.t_au.au();
    for n in -3i64..=3 {
        for kp in -4i64..=4 {
            // Even sector: physical k = 2k'+1, with the n/2 term split off from k t/(2 T_k).
            let want = (-brute_quadratic_cycles(&sp, n, 2 * kp + 1, t)).rem_euclid(1.0);
            let got = theta_even(n, kp, &ft, rs);
            let d = (got - want).rem_euclid(1.0);
            assert!(d.min(1.0 - d) < 1e-9, "n={n} k'={kp}: {got} vs {want}");
            let want = (-brute_quadratic_cycles(&sp, n, 2 * kp, t)).rem_euclid(1.0);
            let d = (theta_odd(n, kp, &ft, rs) - want).rem_euclid(1.0);
            assert!(d.min(1.0 - d) < 1e-9);
        }
    }
    assert_eq!(theta_even_exact(2, 0, &ft, rs), num_rational::Ratio::new(1, 2));
}

#[test]
fn full_revival_is_trivial() {
    let sp = split_odd_even(&packet(24, "1/12")).unwrap();
    let ft = fractional_time(12, 1, &sp.time_scales).unwrap();
    for n in -5..5 {
        for k in -5..5 {
            assert_eq!(theta_odd(n, k, &ft, ft.rs), 0.0);
        }
    }
    let dec = decompose(&ft).unwrap();
    assert_eq!(dec.periods, Periods { l1: 1, l2: 1, l1p: 1, l2p: 1 });
    assert_eq!(dec.a_odd().len(), 1);
    assert!((dec.a_odd()[0][0] - 1.0).norm() < 1e-15);
    assert!((dec.a_even()[0][0] - 1.0).norm() < 1e-15);
    let rebuilt = reconstruct_at_fraction(&sp, &dec, &ft).unwrap();
    let direct = direct_coefficients(&packet(24, "1/12"), ft.t_au).unwrap();
    assert!(max_relative_error(&rebuilt, &direct) < 1e-10);
}

#[test]
fn half_revival_matches_closed_form() {
    let wp = packet(24, "1/12");
    let sp = split_odd_even(&wp).unwrap();
    let ts = sp.time_scales;
    let ft = fractional_time(6, 1, &ts).unwrap();
    let dec = decompose(&ft).unwrap();
    let rebuilt = reconstruct_at_fraction(&sp, &dec, &ft).unwrap();
    let t = ft.t_au.au();
    let closed_odd = sp.odd_part.psi_cl(&ts, t, t + 0.5 * ts.t_cl_k.au());
    let closed_even: Vec<Complex64> = sp
        .even_part
        .psi_cl(&ts, t + 0.25 * ts.t_cl_n.au(), t)
        .into_iter()
        .map(|z| z * Complex64::from_polar(1.0, -PI * t / ts.t_cl_k.au()))
        .collect();
    let closed = sp.recombine(&closed_odd, &closed_even).unwrap();
    assert!(max_relative_error(&rebuilt, &closed) < 1e-10);
    let direct = direct_coefficients(&wp, ft.t_au).unwrap();
    assert!(max_relative_error(&rebuilt, &direct) < 1e-10);
}

#[test]
fn reconstruction_matches_direct_sum_for_small_denominators() {
    // Fractions differing by s give the same phases, so p1/q1 in (0, s] covers
    // every class.
    for (nbar, rs) in [(24, "1/12"), (24, "1/16"), (24, "1/24"), (25, "1/12")] {
        let wp = packet(nbar, rs);
        let sp = split_odd_even(&wp).unwrap();
        let sden = revival_ratio_exact(&sp.time_scales).unwrap().den();
        for (p1, q1) in reduced_fractions(sden, 8) {
            let ft = fractional_time(p1, q1, &sp.time_scales).unwrap();
            let dec = decompose(&ft).unwrap();
            assert!((dec.odd.parseval() - 1.0).abs() < 1e-12);
            assert!((dec.even.parseval() - 1.0).abs() < 1e-12);
            assert!((dec.even_prefactor.norm() - 1.0).abs() < 1e-15);
            let rebuilt = reconstruct_at_fraction(&sp, &dec, &ft).unwrap();
            let direct = direct_coefficients(&wp, ft.t_au).unwrap();
            let err = max_relative_error(&rebuilt, &direct);
            assert!(err < 1e-10, "nbar={nbar} rs={rs} {p1}/{q1}: {err:e}");
        }
    }
}

#[test]
fn dropping_even_prefactor_breaks_reconstruction() {
    let wp = packet(24, "1/12");
    let sp = split_odd_even(&wp).unwrap();
    let ft = fractional_time(1, 3, &sp.time_scales).unwrap();
    let mut dec = decompose(&ft).unwrap();
    dec.even_prefactor = Complex64::new(1.0, 0.0);
    let rebuilt = reconstruct_at_fraction(&sp, &dec, &ft).unwrap();
    let direct = direct_coefficients(&wp, ft.t_au).unwrap();
    assert!(max_relative_error(&rebuilt, &direct) > 1e-3);
}

#[test]
fn mismatched_inputs_are_rejected() {
    let sp = split_odd_even(&packet(24, "1/12")).unwrap();
    let a = fractional_time(1, 3, &sp.time_scales).unwrap();
    let b = fractional_time(1, 2, &sp.time_scales).unwrap();
    let dec = decompose(&a).unwrap();
    assert!(reconstruct_at_fraction(&sp, &dec, &b).is_err());
}

/// Exhaustive oracle: `l` is a period iff the theta phase repeats over a full
/// residue grid. Every denominator of theta divides `cycle`, so `cycle` is a
/// period in both indices and one cycle covers all residues.
fn residue_period(sector: Sector, along_n: bool, l: i64, ft: &FractionalTime, cycle: i64) -> bool {
    (0..cycle).all(|m| {
        (0..cycle).all(|k| {
            let (m2, k2) = if along_n { (m + l, k) } else { (m, k + l) };
            sector_theta(sector, m2, k2, ft, ft.rs) == sector_theta(sector, m, k, ft, ft.rs)
        })
    })
}

#[test]
fn periods_agree_with_exhaustive_residue_check() {
    for (nbar, rs) in [(24, "1/12"), (24, "1/16"), (25, "1/12")] {
        let sp = split_odd_even(&packet(nbar, rs)).unwrap();
        for (p1, q1) in reduced_fractions(1, 8) {
            let ft = fractional_time(p1, q1, &sp.time_scales).unwrap();
            let p = minimal_periods(&ft, ft.rs).unwrap();
            let cycle = ft.q1.lcm(&(2 * ft.q12)) as i64;
            for (sector, along_n, l) in [
                (Sector::Odd, true, p.l1),
                (Sector::Odd, false, p.l2),
                (Sector::Even, true, p.l1p),
                (Sector::Even, false, p.l2p),
            ] {
                let l = l as i64;
                assert!(residue_period(sector, along_n, l, &ft, cycle), "{p1}/{q1} {sector:?} {along_n}");
                for smaller in 1..l {
                    assert!(!residue_period(sector, along_n, smaller, &ft, cycle));
                }
                // Minimal periods divide every other period.
                for multiple in [2 * l, 3 * l] {
                    assert!(is_period(sector, along_n, multiple, &ft, ft.rs));
                }
            }
        }
    }
}

#[test]
fn half_revival_terms() {
    let wp = packet(24, "1/12");
    let sp = split_odd_even(&wp).unwrap();
    let ts = sp.time_scales;
    let t_half = 0.5 * full_revival_time(&ts).unwrap().au();
    let tk = ts.t_cl_k.au();
    let m0 = (t_half / tk).round();
    for m in [m0 - 1.0, m0, m0 + 1.0] {
        let t = TimeAu::new(m * tk).unwrap();
        let (odd, even) = half_revival_autocorrelation(&sp, &ts, t).unwrap();
        assert!(odd.norm() < 0.05 * even.norm(), "{odd} {even}");
        let t = TimeAu::new((m + 0.5) * tk).unwrap();
        if (t.au() - t_half).abs() <= 2.0 * tk {
            let (odd, even) = half_revival_autocorrelation(&sp, &ts, t).unwrap();
            assert!(even.norm() < 0.05 * odd.norm(), "{odd} {even}");
        }
    }
    // Exact agreement with the full phase sum at t_rev / 2.
    let model = PhaseModel::for_packet(PhaseKind::Taylor2, &wp).unwrap();
    let t = TimeAu::new(t_half).unwrap();
    let (odd, even) = half_revival_autocorrelation(&sp, &ts, t).unwrap();
    let a = autocorrelation(&wp, &model, t).unwrap();
    assert!(((odd + even).norm() - a.norm()).abs() < 1e-10);
    assert!(half_revival_autocorrelation(&sp, &ts, TimeAu::new(t_half + 2.5 * tk).unwrap()).is_err());
}

#[test]
fn decomposition_report_round_trips_through_json() {
    let (_, report) = decomposition_report(&packet(24, "1/12"), 1, 3).unwrap();
    assert!(report.max_reconstruction_error < 1e-10);
    let v: serde_json::Value = serde_json::to_value(&report).unwrap();
    for key in ["p1", "q1", "p12", "q12", "l1", "l2", "l1p", "l2p", "a_odd", "a_even", "max_reconstruction_error"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    assert_eq!(v["a_odd"].as_array().unwrap().len() as u64, report.l1);
}

proptest! {
    #[test]
    fn theta_period_divides_2_q1_s(n in -1000i64..1000, k in -1000i64..1000, pq in 0usize..22) {
        let sp = split_odd_even(&packet(24, "1/12")).unwrap();
        let fr = reduced_fractions(1, 8);
        let (p1, q1) = fr[pq % fr.len()];
        let ft = fractional_time(p1, q1, &sp.time_scales).unwrap();
        let step = 2 * q1 as i64 * 12;
        prop_assert_eq!(theta_odd_exact(n, k, &ft, ft.rs), theta_odd_exact(n, k + step, &ft, ft.rs));
        prop_assert_eq!(theta_even_exact(n, k, &ft, ft.rs), theta_even_exact(n + step, k, &ft, ft.rs));
    }

    #[test]
    fn antiperiodicity_of_odd_part(t in -1e7f64..1e7) {
        let sp = split_odd_even(&packet(24, "1/12")).unwrap();
        let ts = sp.time_scales;
        let a = sp.odd_part.psi_cl(&ts, t + 0.5 * ts.t_cl_n.au(), t);
        let b = sp.odd_part.psi_cl(&ts, t, t);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x + y).norm() < 1e-9);
        }
        let a = sp.even_part.psi_cl(&ts, t + 0.5 * ts.t_cl_n.au(), t);
        let b = sp.even_part.psi_cl(&ts, t, t);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).norm() < 1e-9);
        }
    }

    #[test]
    fn sectors_stay_orthogonal(t in 0f64..2e7) {
        let sp = split_odd_even(&packet(24, "1/12")).unwrap();
        let (odd, even) = evolve_split(&sp, TimeAu::new(t).unwrap());
        let o = sp.recombine(&odd, &vec![Complex64::new(0.0, 0.0); even.len()]).unwrap();
        let e = sp.recombine(&vec![Complex64::new(0.0, 0.0); odd.len()], &even).unwrap();
        let dot: Complex64 = o.iter().zip(&e).map(|(x, y)| x.conj() * y).sum();
        prop_assert_eq!(dot, Complex64::new(0.0, 0.0));
    }
}
