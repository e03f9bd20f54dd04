//! Time evolution of a packet, the autocorrelation `A(t) = <Ψ(0)|Ψ(t)>` and
//! the structure of the resulting interferograms.
//!
//! Two phase models are available. `Exact` uses the first-order Stark
//! energies directly. `Taylor2` keeps the expansion of `E(n, k)` about
//! `(nbar, kbar)` to second order:
//!
//! ```text
//! Φ(t) = E(nbar, kbar) t + 2π [ Δn t / T_n + Δk t / (2 T_k)
//!                               - Δn² t / t_rev_n + Δn Δk t / (2 t_rev_nk) ]
//! ```
//!
//! where the minus sign on the `Δn²` term follows from `∂²E/∂n² < 0`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;
use std::io::Write;

use crate::error::{Error, Result};
use crate::packet::WavePacket;
use crate::stark::{energy, time_scales, TimeScales};
use crate::units::{FieldStrength, TimeAu};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseKind {
    Exact,
    Taylor2,
}

impl std::str::FromStr for PhaseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(PhaseKind::Exact),
            "taylor2" => Ok(PhaseKind::Taylor2),
            _ => Err(Error::Config(format!("unknown phase model {s:?} (exact|taylor2)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseModel {
    pub kind: PhaseKind,
    pub nbar: u32,
    pub kbar: i32,
    pub time_scales: TimeScales,
}

impl PhaseModel {
    pub fn new(kind: PhaseKind, nbar: u32, kbar: i32, field: FieldStrength) -> Result<Self> {
        Ok(PhaseModel { kind, nbar, kbar, time_scales: time_scales(nbar, field)? })
    }

    /// Model centred on the packet's own (nbar, kbar) and field.
    pub fn for_packet(kind: PhaseKind, wp: &WavePacket) -> Result<Self> {
        let (nbar, kbar) = wp.center();
        Self::new(kind, nbar, kbar, wp.field())
    }

    fn check(&self, wp: &WavePacket) -> Result<()> {
        if self.time_scales.field != wp.field() {
            return Err(Error::Config(format!(
                "phase model field {} differs from packet field {}",
                self.time_scales.field,
                wp.field()
            )));
        }
        Ok(())
    }
}

/// Per-level angular frequencies, split into a common offset (rad/au) and a
/// per-level part in cycles/au so that large phases can be reduced mod 1.
struct Frequencies {
    common: f64,
    cycles: Vec<f64>,
    weights: Vec<f64>,
}

impl Frequencies {
    fn new(wp: &WavePacket, model: &PhaseModel) -> Self {
        let weights = wp.weights();
        match model.kind {
            PhaseKind::Exact => Frequencies {
                common: 0.0,
                cycles: wp.levels().iter().map(|&l| energy(l, wp.field()) / (2.0 * PI)).collect(),
                weights,
            },
            PhaseKind::Taylor2 => {
                let ts = &model.time_scales;
                let nb = model.nbar as f64;
                let common = -0.5 / (nb * nb) + 1.5 * nb * model.kbar as f64 * ts.field.au();
                let cycles = wp
                    .levels()
                    .iter()
                    .map(|l| {
                        let dn = l.n() as f64 - nb;
                        let dk = (l.k() - model.kbar) as f64;
                        taylor2_cycles_per_au(ts, dn, dk)
                    })
                    .collect();
                Frequencies { common, cycles, weights }
            }
        }
    }

    fn phase_factors(&self, t: f64) -> impl Iterator<Item = Complex64> + '_ {
        self.cycles.iter().map(move |&nu| {
            let c = (nu * t).fract();
            Complex64::from_polar(1.0, -2.0 * PI * c)
        })
    }

    fn autocorrelation(&self, t: f64) -> Complex64 {
        let sum: Complex64 = self.weights.iter().zip(self.phase_factors(t)).map(|(w, z)| w * z).sum();
        sum * Complex64::from_polar(1.0, -self.common * t)
    }
}

/// Second-order bracket of the expanded phase, in cycles per atomic unit.
pub fn taylor2_cycles_per_au(ts: &TimeScales, dn: f64, dk: f64) -> f64 {
    dn / ts.t_cl_n.au() + dk / (2.0 * ts.t_cl_k.au()) - dn * dn / ts.t_rev_n.au()
        + dn * dk / (2.0 * ts.t_rev_nk.au())
}

/// `A(t) = Σ |c|² exp(-i Φ(t))`.
pub fn autocorrelation(wp: &WavePacket, model: &PhaseModel, t: TimeAu) -> Result<Complex64> {
    model.check(wp)?;
    Ok(Frequencies::new(wp, model).autocorrelation(t.au()))
}

/// Coefficients of `Ψ(t)` in the level basis, `c exp(-i Φ(t))`, aligned with
/// `wp.levels()`.
pub fn evolve(wp: &WavePacket, model: &PhaseModel, t: TimeAu) -> Result<Vec<Complex64>> {
    model.check(wp)?;
    let freqs = Frequencies::new(wp, model);
    let common = Complex64::from_polar(1.0, -freqs.common * t.au());
    Ok(wp.coeffs().iter().zip(freqs.phase_factors(t.au())).map(|(c, z)| c * z * common).collect())
}

/// Uniformly sampled autocorrelation.
#[derive(Debug, Clone, PartialEq)]
pub struct Interferogram {
    pub times: Vec<TimeAu>,
    pub values: Vec<Complex64>,
    pub abs2: Vec<f64>,
    pub dt: TimeAu,
}

impl Interferogram {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Writes `t_ps,re_A,im_A,abs2` rows with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t_ps,re_A,im_A,abs2")?;
        for ((t, a), p) in self.times.iter().zip(&self.values).zip(&self.abs2) {
            writeln!(w, "{:.16e},{:.16e},{:.16e},{:.16e}", t.ps(), a.re, a.im, p)?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv output is ascii")
    }

    /// Largest |A|² among samples in `[from, to]`.
    pub fn max_abs2_between(&self, from: TimeAu, to: TimeAu) -> Option<f64> {
        self.times
            .iter()
            .zip(&self.abs2)
            .filter(|(t, _)| **t >= from && **t <= to)
            .map(|(_, p)| *p)
            .reduce(f64::max)
    }
}

/// Number of grid points on the closed interval `[0, span]` with step `dt`.
pub fn grid_len(span: f64, dt: f64) -> usize {
    ((span / dt) * (1.0 + 1e-12)).floor() as usize + 1
}

/// Samples `A` on `t = i dt`, `i = 0 ..= floor(t_max / dt)`.
pub fn interferogram(
    wp: &WavePacket,
    model: &PhaseModel,
    t_max: TimeAu,
    dt: TimeAu,
) -> Result<Interferogram> {
    interferogram_window(wp, model, TimeAu::ZERO, t_max, dt)
}

/// Samples `A` on `t = t_start + i dt` up to and including `t_end`.
pub fn interferogram_window(
    wp: &WavePacket,
    model: &PhaseModel,
    t_start: TimeAu,
    t_end: TimeAu,
    dt: TimeAu,
) -> Result<Interferogram> {
    model.check(wp)?;
    let limit = model.time_scales.t_cl_n.au() / 20.0;
    if !(dt.au() > 0.0 && dt.au() <= limit) {
        return Err(Error::Config(format!(
            "time step {} must lie in (0, T_cl^(n)/20 = {}]",
            dt,
            TimeAu::raw(limit)
        )));
    }
    let span = t_end.au() - t_start.au();
    if !(span > dt.au()) {
        return Err(Error::Config(format!(
            "sampled span {} must exceed the time step {}",
            TimeAu::raw(span.max(0.0)),
            dt
        )));
    }
    let count = grid_len(span, dt.au());
    let freqs = Frequencies::new(wp, model);
    let times: Vec<TimeAu> = (0..count).map(|i| TimeAu::raw(t_start.au() + i as f64 * dt.au())).collect();
    let values: Vec<Complex64> = times.par_iter().map(|t| freqs.autocorrelation(t.au())).collect();
    let abs2 = values.iter().map(|a| a.norm_sqr()).collect();
    Ok(Interferogram { times, values, abs2, dt })
}

/// Peak positions (and, for node analysis, the nodes inside each peak).
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct PeakReport {
    pub peak_times: Vec<TimeAu>,
    pub peak_heights: Vec<f64>,
    /// Node times inside each peak; empty for plain peak detection.
    pub node_times: Vec<Vec<TimeAu>>,
    /// Mean spacing of the nodes inside each peak (au), when there are two or more.
    pub node_spacings: Vec<Option<f64>>,
}

impl PeakReport {
    pub fn len(&self) -> usize {
        self.peak_times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.peak_times.is_empty()
    }
}

/// Three-point parabola through `(i-1, i, i+1)`: offset in samples and value
/// at the vertex.
fn parabolic_vertex(y: &[f64], i: usize) -> (f64, f64) {
    let (a, b, c) = (y[i - 1], y[i], y[i + 1]);
    let denom = a - 2.0 * b + c;
    if denom == 0.0 {
        return (0.0, b);
    }
    let delta = (0.5 * (a - c) / denom).clamp(-0.5, 0.5);
    (delta, b - 0.25 * (a - c) * delta)
}

fn is_local_max(y: &[f64], i: usize) -> bool {
    y[i] > y[i - 1] && y[i] >= y[i + 1]
}

fn is_local_min(y: &[f64], i: usize) -> bool {
    y[i] < y[i - 1] && y[i] <= y[i + 1]
}

/// Interior local maxima of `|A|²` above `min_height`, thinned greedily by
/// height so that accepted peaks are at least `min_separation` apart, with
/// parabolic sub-sample refinement.
pub fn detect_peaks(ig: &Interferogram, min_height: f64, min_separation: TimeAu) -> PeakReport {
    let y = &ig.abs2;
    if y.len() < 3 {
        return PeakReport::default();
    }
    let mut candidates: Vec<(f64, f64)> = (1..y.len() - 1)
        .filter(|&i| is_local_max(y, i) && y[i] > min_height)
        .map(|i| {
            let (delta, height) = parabolic_vertex(y, i);
            (ig.times[i].au() + delta * ig.dt.au(), height.min(1.0))
        })
        .collect();
    candidates.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.total_cmp(&b.0)));
    let mut accepted: Vec<(f64, f64)> = Vec::new();
    for c in candidates {
        if accepted.iter().all(|a| (a.0 - c.0).abs() >= min_separation.au()) {
            accepted.push(c);
        }
    }
    accepted.sort_by(|a, b| a.0.total_cmp(&b.0));
    PeakReport {
        peak_times: accepted.iter().map(|a| TimeAu::raw(a.0)).collect(),
        peak_heights: accepted.iter().map(|a| a.1).collect(),
        node_times: vec![Vec::new(); accepted.len()],
        node_spacings: vec![None; accepted.len()],
    }
}

/// Thresholds used to split a window into broad peaks and to decide which
/// local minima inside a peak count as nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeCriteria {
    /// Samples below this fraction of the window maximum are "quiet".
    pub gap_fraction: f64,
    /// A run of at least this many quiet samples separates two broad peaks.
    pub min_gap_samples: usize,
    /// Broad peaks lower than this fraction of the window maximum are ignored.
    pub min_peak_fraction: f64,
    /// Both maxima flanking a node must reach this fraction of the peak maximum.
    pub flank_fraction: f64,
    /// A node must dip below this fraction of the lower flanking maximum.
    pub depth_fraction: f64,
}

impl Default for NodeCriteria {
    fn default() -> Self {
        NodeCriteria {
            gap_fraction: 0.01,
            min_gap_samples: 8,
            min_peak_fraction: 0.1,
            flank_fraction: 0.2,
            depth_fraction: 0.5,
        }
    }
}

/// Splits `[center - halfwidth, center + halfwidth]` into broad peaks and
/// reports each peak's maximum together with the interference nodes inside it.
pub fn node_analysis(ig: &Interferogram, center: TimeAu, halfwidth: TimeAu) -> Result<PeakReport> {
    node_analysis_with(ig, center, halfwidth, &NodeCriteria::default())
}

pub fn node_analysis_with(
    ig: &Interferogram,
    center: TimeAu,
    halfwidth: TimeAu,
    criteria: &NodeCriteria,
) -> Result<PeakReport> {
    let (Some(first), Some(last)) = (ig.times.first(), ig.times.last()) else {
        return Err(Error::Domain("empty interferogram".into()));
    };
    let lo = center.au() - halfwidth.au();
    let hi = center.au() + halfwidth.au();
    let slack = 1e-9 * ig.dt.au();
    if !(halfwidth.au() > 0.0) || lo < first.au() - slack || hi > last.au() + slack {
        return Err(Error::Domain(format!(
            "window [{}, {}] is not inside the sampled range [{}, {}]",
            TimeAu::raw(lo),
            TimeAu::raw(hi),
            first,
            last
        )));
    }
    let idx: Vec<usize> = (0..ig.len())
        .filter(|&i| ig.times[i].au() >= lo - slack && ig.times[i].au() <= hi + slack)
        .collect();
    let y = &ig.abs2;
    let window_max = idx.iter().map(|&i| y[i]).fold(0.0, f64::max);
    let mut report = PeakReport::default();
    if window_max <= 0.0 {
        return Ok(report);
    }

    // Segment by long quiet runs.
    let quiet = |i: usize| y[i] < criteria.gap_fraction * window_max;
    let mut segments: Vec<(usize, usize)> = Vec::new();
    let (mut start, mut run) = (None::<usize>, 0usize);
    let mut seg_end = 0usize;
    for &i in &idx {
        if quiet(i) {
            run += 1;
            if run >= criteria.min_gap_samples {
                if let Some(s) = start.take() {
                    segments.push((s, seg_end));
                }
            }
        } else {
            run = 0;
            if start.is_none() {
                start = Some(i);
            }
            seg_end = i;
        }
    }
    if let Some(s) = start {
        segments.push((s, seg_end));
    }

    let (i_lo, i_hi) = (idx[0], *idx.last().unwrap());
    for (s, e) in segments {
        let peak_i = (s..=e).max_by(|&a, &b| y[a].total_cmp(&y[b])).unwrap();
        let peak_max = y[peak_i];
        if peak_max < criteria.min_peak_fraction * window_max {
            continue;
        }
        let (delta, height) = if peak_i > i_lo && peak_i < i_hi {
            parabolic_vertex(y, peak_i)
        } else {
            (0.0, peak_max)
        };
        let interior = (s.max(i_lo + 1))..=(e.min(i_hi - 1));
        let maxima: Vec<usize> = interior.clone().filter(|&i| is_local_max(y, i)).collect();
        let mut nodes = Vec::new();
        for m in interior.filter(|&i| is_local_min(y, i)) {
            let left = maxima.iter().rev().find(|&&j| j < m);
            let right = maxima.iter().find(|&&j| j > m);
            let (Some(&l), Some(&r)) = (left, right) else { continue };
            let flank = y[l].min(y[r]);
            if flank >= criteria.flank_fraction * peak_max && y[m] <= criteria.depth_fraction * flank {
                let (d, _) = parabolic_vertex(y, m);
                nodes.push(TimeAu::raw(ig.times[m].au() + d * ig.dt.au()));
            }
        }
        let spacing = (nodes.len() >= 2)
            .then(|| (nodes.last().unwrap().au() - nodes[0].au()) / (nodes.len() - 1) as f64);
        report.peak_times.push(TimeAu::raw(ig.times[peak_i].au() + delta * ig.dt.au()));
        report.peak_heights.push(height.min(1.0));
        report.node_times.push(nodes);
        report.node_spacings.push(spacing);
    }
    Ok(report)
}
