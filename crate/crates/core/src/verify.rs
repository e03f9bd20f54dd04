//! Self-checks behind the `verify` command: quoted time scales and fields,
//! the interferogram structure of the four figure configurations, the
//! fractional-revival oracle, invariants and determinism.
//!
//! Every check takes a [`UnitSystem`] so that a corrupted conversion table can
//! be injected and seen to fail.

use num_complex::Complex64;
use num_integer::Integer;
use serde::Serialize;

use crate::config::{ResolvedConfig, RunConfig};
use crate::dynamics::{
    autocorrelation, detect_peaks, node_analysis, Interferogram, PhaseKind, PhaseModel,
};
use crate::error::{Error, Result};
use crate::packet::{build_packet, WavePacket};
use crate::report::run_interferogram;
use crate::revivals::{
    decompose, direct_coefficients, evolve_split, fractional_time_with, full_revival_time, max_relative_error,
    reconstruct_at_fraction, split_odd_even, SplitPacket,
};
use crate::stark::{solve_field_for_classical_ratio, solve_field_for_revival_ratio, time_scales, Ratio};
use crate::units::{TimeAu, UnitSystem};

/// The shipped figure configurations, by name.
pub const FIGURE_CONFIGS: [(&str, &str); 4] = [
    ("fig1", include_str!("../../../configs/fig1.toml")),
    ("fig2", include_str!("../../../configs/fig2.toml")),
    ("fig3", include_str!("../../../configs/fig3.toml")),
    ("fig4", include_str!("../../../configs/fig4.toml")),
];

pub fn figure_config(name: &str) -> Result<RunConfig> {
    let (_, text) = FIGURE_CONFIGS
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| Error::Config(format!("no figure configuration named {name:?}")))?;
    RunConfig::from_toml_str(text)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub id: &'static str,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    pub fn line(&self) -> String {
        format!("[{}] {:<4} {} :: {}", if self.passed { "PASS" } else { "FAIL" }, self.id, self.title, self.detail)
    }
}

type Outcome = Result<(bool, String)>;

fn finish(id: &'static str, title: &'static str, outcome: Outcome) -> CheckResult {
    match outcome {
        Ok((passed, detail)) => CheckResult { id, title, passed, detail },
        Err(e) => CheckResult { id, title, passed: false, detail: format!("error: {e}") },
    }
}

fn within(x: f64, target: f64, rel: f64) -> bool {
    ((x - target) / target).abs() <= rel
}

/// Largest `|A|²` sample within `center ± half`.
pub fn window_max(ig: &Interferogram, center: f64, half: f64) -> f64 {
    ig.max_abs2_between(TimeAu::new(center - half).unwrap_or(TimeAu::ZERO), TimeAu::new(center + half).unwrap_or(TimeAu::ZERO))
        .unwrap_or(0.0)
}

fn figure(name: &str, units: &UnitSystem) -> Result<(ResolvedConfig, WavePacket, Interferogram)> {
    let cfg = figure_config(name)?.resolve_with(units)?;
    let (wp, ig) = run_interferogram(&cfg)?;
    Ok((cfg, wp, ig))
}

pub fn check_time_scales(units: &UnitSystem) -> CheckResult {
    let outcome = (|| -> Outcome {
        let f = units.field_from_volts_per_cm(645.8)?;
        let ts = time_scales(24, f)?;
        let got = [units.time_ps(ts.t_cl_n), units.time_ps(ts.t_cl_k), units.time_ps(ts.t_rev_nk)];
        let want = [2.1, 16.8, 403.4];
        let ok = got.iter().zip(&want).all(|(g, w)| within(*g, *w, 0.005));
        Ok((ok, format!("T_cl^(n) = {:.4} ps, T_cl^(k) = {:.4} ps, t_rev^(nk) = {:.3} ps (tolerance 0.5%)", got[0], got[1], got[2])))
    })();
    finish("1", "time scales at nbar = 24, F = 645.8 V/cm", outcome)
}

pub fn check_field_solvers(units: &UnitSystem) -> CheckResult {
    let outcome = (|| -> Outcome {
        let r = |s: &str| s.parse::<Ratio>();
        let f1 = units.field_volts_per_cm(solve_field_for_classical_ratio(24, r("2/13")?)?);
        let f2 = units.field_volts_per_cm(solve_field_for_classical_ratio(24, r("1/6")?)?);
        let f3 = units.field_volts_per_cm(solve_field_for_revival_ratio(24, r("1/12")?)?);
        let ratio = f1 / f2;
        let ok = (f1 - 794.8).abs() <= 0.1
            && (f2 - 861.0).abs() <= 0.1
            && (f3 - 645.8).abs() <= 0.1
            && (ratio - 12.0 / 13.0).abs() <= 1e-6;
        Ok((ok, format!("a/b = 2/13 -> {f1:.3} V/cm, 1/6 -> {f2:.3} V/cm, r/s = 1/12 -> {f3:.3} V/cm, ratio {ratio:.9}")))
    })();
    finish("2", "field solvers", outcome)
}

pub fn check_figure1(units: &UnitSystem) -> CheckResult {
    let outcome = (|| -> Outcome {
        let (cfg, _, ig) = figure("fig1", units)?;
        let ts = cfg.time_scales;
        let (tk, tn, dt) = (ts.t_cl_k.au(), ts.t_cl_n.au(), ig.dt.au());
        let peaks = detect_peaks(&ig, 0.05, TimeAu::new(0.5 * tk)?);
        let mut even_heights = Vec::new();
        let mut even_times = Vec::new();
        let mut odd_max: f64 = 0.0;
        let mut ok = true;
        for j in 1..=6 {
            let center = j as f64 * tk;
            let h = window_max(&ig, center, tn);
            if j % 2 == 0 {
                match peaks.peak_times.iter().find(|t| (t.au() - center).abs() <= tn) {
                    Some(t) => even_times.push(t.au()),
                    None => ok = false,
                }
                even_heights.push(h);
            } else {
                odd_max = odd_max.max(h);
            }
        }
        let mean_even = even_heights.iter().sum::<f64>() / even_heights.len() as f64;
        ok &= odd_max < 0.5 * mean_even;
        let spacing_ok = even_times.windows(2).all(|w| (w[1] - w[0] - 2.0 * tk).abs() <= dt);
        ok &= spacing_ok && even_times.len() == 3;
        Ok((
            ok,
            format!(
                "even-multiple peaks at {:?} T_k with heights {:?}; odd max {:.3} vs 0.5 x even mean {:.3}; spacing 2T_k ± dt: {}",
                even_times.iter().map(|t| format!("{:.4}", t / tk)).collect::<Vec<_>>(),
                even_heights.iter().map(|h| format!("{h:.3}")).collect::<Vec<_>>(),
                odd_max,
                0.5 * mean_even,
                spacing_ok
            ),
        ))
    })();
    finish("3", "fig1: peaks every second Stark period", outcome)
}

pub fn check_figure2(units: &UnitSystem) -> CheckResult {
    let outcome = (|| -> Outcome {
        let (cfg, _, ig) = figure("fig2", units)?;
        let ts = cfg.time_scales;
        let (tk, tn) = (ts.t_cl_k.au(), ts.t_cl_n.au());
        let peaks = detect_peaks(&ig, 0.05, TimeAu::new(0.5 * tk)?);
        let mut heights = Vec::new();
        let mut ok = true;
        for j in 1..=6 {
            let center = j as f64 * tk;
            ok &= peaks.peak_times.iter().any(|t| (t.au() - center).abs() <= tn);
            heights.push(window_max(&ig, center, tn));
        }
        let min_ratio = heights.windows(2).map(|w| w[0].min(w[1]) / w[0].max(w[1])).fold(1.0, f64::min);
        ok &= min_ratio > 0.5;
        Ok((
            ok,
            format!(
                "peak heights at 1..6 T_k {:?}; smallest adjacent ratio {min_ratio:.3}",
                heights.iter().map(|h| format!("{h:.3}")).collect::<Vec<_>>()
            ),
        ))
    })();
    finish("4", "fig2: peaks every Stark period", outcome)
}

/// Max of `|A|²` over `[0, T_k]` and over `[t_rev - T_k, t_rev]`, both sampled
/// on grids anchored at their recurrence points (0 and t_rev).
fn revival_maxima(wp: &WavePacket, kind: PhaseKind) -> Result<(f64, f64)> {
    let model = PhaseModel::for_packet(kind, wp)?;
    let ts = model.time_scales;
    let t_rev = full_revival_time(&ts)?.au();
    let (tk, dt) = (ts.t_cl_k.au(), ts.t_cl_n.au() / 50.0);
    let steps = (tk / dt).floor() as usize;
    let mut early: f64 = 0.0;
    let mut late: f64 = 0.0;
    for i in 0..=steps {
        let s = i as f64 * dt;
        early = early.max(autocorrelation(wp, &model, TimeAu::new(s)?)?.norm_sqr());
        late = late.max(autocorrelation(wp, &model, TimeAu::new(t_rev - s)?)?.norm_sqr());
    }
    Ok((early, late))
}

pub fn check_full_revival_taylor2(units: &UnitSystem) -> CheckResult {
    let outcome = (|| -> Outcome {
        let cfg = figure_config("fig3")?.resolve_with(units)?;
        let wp = build_packet(&cfg.packet)?;
        let (early, late) = revival_maxima(&wp, PhaseKind::Taylor2)?;
        Ok(((early - late).abs() <= 1e-6, format!("max |A|^2 early {early:.12}, at revival {late:.12}")))
    })();
    finish("5a", "fig3: full revival with second-order phases", outcome)
}

pub fn check_full_revival_exact(units: &UnitSystem) -> CheckResult {
    let outcome = (|| -> Outcome {
        let cfg = figure_config("fig3")?.resolve_with(units)?;
        let wp = build_packet(&cfg.packet)?;
        let (early, late) = revival_maxima(&wp, PhaseKind::Exact)?;
        Ok((late >= 0.8 * early, format!("max |A|^2 early {early:.4}, at revival {late:.4} (need >= {:.4})", 0.8 * early)))
    })();
    finish("5b", "fig3: full revival with exact Stark energies", outcome)
}

pub fn check_half_revival_nodes(units: &UnitSystem) -> CheckResult {
    let outcome = (|| -> Outcome {
        let (cfg, _, ig) = figure("fig4", units)?;
        let ts = cfg.time_scales;
        let (tk, tn) = (ts.t_cl_k.au(), ts.t_cl_n.au());
        let t_half = 0.5 * full_revival_time(&ts)?.au();
        let report = node_analysis(&ig, TimeAu::new(t_half)?, TimeAu::new(2.0 * tk)?)?;
        let mut ok = true;
        let mut notes = Vec::new();
        let (mut n_half, mut n_int) = (0, 0);
        for (i, t) in report.peak_times.iter().enumerate() {
            let x = t.au() / tk;
            let near_half = ((x - 0.5).round() + 0.5 - x).abs() < 0.1;
            let near_int = (x.round() - x).abs() < 0.1;
            if (t.au() - t_half).abs() > tk + 0.1 * tk {
                continue;
            }
            if near_half {
                n_half += 1;
                let spacing = report.node_spacings[i];
                let pass = spacing.is_some_and(|s| within(s, 0.5 * tn, 0.05));
                ok &= pass;
                notes.push(format!(
                    "{x:.2} T_k: {} nodes, spacing {}",
                    report.node_times[i].len(),
                    spacing.map_or("none".into(), |s| format!("{:.4} ps ({:.3} T_n)", units.time_ps(TimeAu::new(s).unwrap_or(TimeAu::ZERO)), s / tn))
                ));
            } else if near_int {
                n_int += 1;
                ok &= report.node_times[i].is_empty();
                notes.push(format!("{x:.2} T_k: {} nodes", report.node_times[i].len()));
            }
        }
        ok &= n_half >= 2 && n_int >= 2;
        Ok((ok, format!("T_n/2 = {:.4} ps; {}", units.time_ps(TimeAu::new(0.5 * tn)?), notes.join("; "))))
    })();
    finish("6", "fig4: nodes at T_cl^(n)/2 in half-integer peaks near t_rev/2", outcome)
}

/// Reduced `p/q` with `0 < p/q <= max`, `q <= max_den`.
pub fn reduced_fractions(max: u64, max_den: u64) -> Vec<(u64, u64)> {
    let mut out = Vec::new();
    for q in 1..=max_den {
        for p in 1..=max * q {
            if p.gcd(&q) == 1 {
                out.push((p, q));
            }
        }
    }
    out
}

fn fig3_like_packet(rs: Ratio) -> Result<(WavePacket, SplitPacket)> {
    let mut cfg = figure_config("fig3")?;
    cfg.set_revival_ratio(rs);
    let wp = build_packet(&cfg.resolve()?.packet)?;
    let sp = split_odd_even(&wp)?;
    Ok((wp, sp))
}

pub fn check_oracle_equivalence() -> CheckResult {
    let outcome = (|| -> Outcome {
        let mut worst: f64 = 0.0;
        let mut count = 0;
        let mut parseval: f64 = 0.0;
        for rs in ["1/12", "1/16", "1/24"] {
            let rs: Ratio = rs.parse()?;
            let (wp, sp) = fig3_like_packet(rs)?;
            // Times differing by s t_rev^(n) carry identical theta phases.
            for (p1, q1) in reduced_fractions(rs.den(), 8) {
                let ft = fractional_time_with(p1, q1, &sp.time_scales, rs)?;
                let dec = decompose(&ft)?;
                let rebuilt = reconstruct_at_fraction(&sp, &dec, &ft)?;
                let direct = direct_coefficients(&wp, ft.t_au)?;
                worst = worst.max(max_relative_error(&rebuilt, &direct));
                parseval = parseval.max((dec.odd.parseval() - 1.0).abs()).max((dec.even.parseval() - 1.0).abs());
                count += 1;
            }
        }
        // Closed form at half revival, r/s = 1/12.
        let (_, sp) = fig3_like_packet("1/12".parse()?)?;
        let ft = fractional_time_with(6, 1, &sp.time_scales, "1/12".parse()?)?;
        let dec = decompose(&ft)?;
        let odd = dec.odd.significant(1e-12);
        let even = dec.even.significant(1e-12);
        let single = odd.len() == 1 && even.len() == 1;
        let shifts_ok = single
            && (odd[0].0 as f64 / dec.odd.n_shift_den() as f64, odd[0].1 as f64 / dec.odd.k_shift_den() as f64) == (0.0, 0.5)
            && (even[0].0 as f64 / dec.even.n_shift_den() as f64, even[0].1 as f64 / dec.even.k_shift_den() as f64) == (0.25, 0.0)
            && (odd[0].2 - 1.0).norm() < 1e-12
            && (even[0].2 - 1.0).norm() < 1e-12;
        let ok = worst < 1e-10 && shifts_ok;
        Ok((
            ok,
            format!(
                "{count} fractions, worst relative error {worst:.2e}, worst Parseval defect {parseval:.1e}; half revival single shifts (0, T_k/2) and (T_n/4, 0): {shifts_ok}"
            ),
        ))
    })();
    finish("7", "fractional-revival reconstruction against direct evaluation", outcome)
}

pub fn check_invariants(units: &UnitSystem) -> CheckResult {
    let outcome = (|| -> Outcome {
        let (_, wp, ig) = figure("fig3", units)?;
        let mut failures = Vec::new();
        let model = PhaseModel::for_packet(PhaseKind::Taylor2, &wp)?;
        let a0 = autocorrelation(&wp, &model, TimeAu::ZERO)?;
        if (a0.norm() - 1.0).abs() > 1e-14 {
            failures.push(format!("|A(0)| = {}", a0.norm()));
        }
        let max_abs2 = ig.abs2.iter().copied().fold(0.0, f64::max);
        if max_abs2 > 1.0 + 1e-12 {
            failures.push(format!("max |A|^2 = {max_abs2}"));
        }
        let sp = split_odd_even(&wp)?;
        let rs: Ratio = "1/12".parse()?;
        for (p1, q1) in reduced_fractions(12, 8) {
            let dec = decompose(&fractional_time_with(p1, q1, &sp.time_scales, rs)?)?;
            for p in [dec.odd.parseval(), dec.even.parseval()] {
                if (p - 1.0).abs() > 1e-12 {
                    failures.push(format!("Parseval {p} at {p1}/{q1}"));
                }
            }
        }
        let ts = sp.time_scales;
        let half_n = 0.5 * ts.t_cl_n.au();
        let mut worst: f64 = 0.0;
        for j in 0..25 {
            let t = ts.t_rev_nk.au() * (j as f64 * 0.0413 - 0.3);
            let shifted = sp.odd_part.psi_cl(&ts, t + half_n, t);
            let plain = sp.odd_part.psi_cl(&ts, t, t);
            worst = shifted.iter().zip(&plain).map(|(a, b)| (a + b).norm()).fold(worst, f64::max);
            let shifted = sp.even_part.psi_cl(&ts, t + half_n, t);
            let plain = sp.even_part.psi_cl(&ts, t, t);
            worst = shifted.iter().zip(&plain).map(|(a, b)| (a - b).norm()).fold(worst, f64::max);
            let (odd, even) = evolve_split(&sp, TimeAu::new(t.abs())?);
            let zeros_e = vec![Complex64::new(0.0, 0.0); even.len()];
            let zeros_o = vec![Complex64::new(0.0, 0.0); odd.len()];
            let o = sp.recombine(&odd, &zeros_e)?;
            let e = sp.recombine(&zeros_o, &even)?;
            let dot: Complex64 = o.iter().zip(&e).map(|(x, y)| x.conj() * y).sum();
            if dot != Complex64::new(0.0, 0.0) {
                failures.push(format!("sector overlap {dot}"));
            }
        }
        if worst > 1e-12 {
            failures.push(format!("(anti)periodicity defect {worst:.2e}"));
        }
        let ok = failures.is_empty();
        Ok((
            ok,
            if ok {
                format!("|A(0)| = 1, max |A|^2 = {max_abs2:.15}, Parseval, (anti)periodicity defect {worst:.1e}, sectors orthogonal")
            } else {
                failures.join("; ")
            },
        ))
    })();
    finish("8", "invariants", outcome)
}

pub fn check_determinism(units: &UnitSystem) -> CheckResult {
    let outcome = (|| -> Outcome {
        let mut notes = Vec::new();
        let mut ok = true;
        for (name, _) in FIGURE_CONFIGS {
            let cfg = figure_config(name)?.resolve_with(units)?;
            let first = run_interferogram(&cfg)?.1.to_csv_string();
            let second = run_interferogram(&cfg)?.1.to_csv_string();
            let reparsed = RunConfig::from_toml_str(&cfg.to_run_config().to_toml_string()?)?.resolve_with(units)?;
            let third = run_interferogram(&reparsed)?.1.to_csv_string();
            let same = first == second && first == third;
            ok &= same;
            notes.push(format!("{name}: {} rows {}", first.lines().count() - 1, if same { "identical" } else { "DIFFER" }));
        }
        Ok((ok, notes.join(", ")))
    })();
    finish("9", "determinism of figure outputs", outcome)
}

/// Runs every check in order.
pub fn run_checks(units: &UnitSystem) -> Vec<CheckResult> {
    vec![
        check_time_scales(units),
        check_field_solvers(units),
        check_figure1(units),
        check_figure2(units),
        check_full_revival_taylor2(units),
        check_full_revival_exact(units),
        check_half_revival_nodes(units),
        check_oracle_equivalence(),
        check_invariants(units),
        check_determinism(units),
    ]
}
