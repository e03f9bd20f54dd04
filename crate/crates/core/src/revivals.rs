//! Fractional-revival decomposition.
//!
//! In coordinates shifted to the packet centre (`n - nbar -> n`) the
//! second-order phase splits by the parity of `k`. Writing `k = 2k'` in one
//! sector and `k = 2k' + 1` in the other makes `k'` run over consecutive
//! integers. At a time `t = (p1/q1) t_rev^(n) = (p12/q12) t_rev^(nk)` the
//! quadratic part of each sector's phase is `exp(2πi θ(n, k'))` with
//!
//! ```text
//! θ_odd(n, k')  = (p1/q1) n² - (p12/q12) n k'
//! θ_even(n, k') = θ_odd(n, k') - (p12/q12) n / 2
//! ```
//!
//! `θ` is doubly periodic, so `exp(2πi θ)` has a finite Fourier expansion
//! whose terms act on the first-order wave function `ψ_cl(τ1, τ2)` as shifts
//! of its two time arguments. The packet at `t` is then a finite sum of
//! shifted copies of `ψ_cl`.
//!
//! Within a sector `n` only takes one parity, `n = ρ + 2m`. Periods are
//! therefore measured in steps of `m` (for `n`) and of `k'`, and the shift of
//! the first argument is `s1 / (2 l1) · T_cl^(n)`.
//!
//! The sector labelled "odd" is the one with even `k`; for even `nbar` it is
//! exactly the odd-`n` sector.

use num_complex::Complex64;
use num_integer::Integer;
use num_rational::Ratio as Q;
use serde::Serialize;
use std::f64::consts::PI;

use crate::dynamics::taylor2_cycles_per_au;
use crate::error::{Error, Result};
use crate::packet::WavePacket;
use crate::stark::{rationalize, time_scales, Ratio, StarkLevel, TimeScales, DEFAULT_MAX_DENOMINATOR};
use crate::units::TimeAu;

type Rational = Q<i128>;

/// One level of a sector in shifted coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SectorEntry {
    pub level: StarkLevel,
    /// Position of the level in the original packet.
    pub index: usize,
    /// `n - nbar`.
    pub n: i64,
    /// `k / 2` for the odd sector, `(k - 1) / 2` for the even sector.
    pub k: i64,
    #[serde(serialize_with = "ser_complex")]
    pub coeff: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Sector {
    /// Even `k`, `k = 2k'`.
    Odd,
    /// Odd `k`, `k = 2k' + 1`; carries the extra `e^{-iπt/T_cl^(k)}` factor.
    Even,
}

impl Sector {
    fn k_offset(self) -> i64 {
        match self {
            Sector::Odd => 0,
            Sector::Even => 1,
        }
    }

    /// Parity of the shifted `n` for levels in this sector.
    pub fn n_parity(self, nbar: u32) -> i64 {
        // Physical n ≡ k + 1 (mod 2).
        (self.k_offset() + 1 + nbar as i64).rem_euclid(2)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SectorPart {
    pub sector: Sector,
    /// Parity of the shifted `n` shared by all entries.
    pub n_parity: i64,
    pub entries: Vec<SectorEntry>,
}

impl SectorPart {
    pub fn norm_sqr(&self) -> f64 {
        self.entries.iter().map(|e| e.coeff.norm_sqr()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// First-order wave function `ψ_cl(τ1, τ2)`: coefficients
    /// `c exp(-2πi [n τ1 / T_cl^(n) + k' τ2 / T_cl^(k)])`, aligned with `entries`.
    pub fn psi_cl(&self, ts: &TimeScales, tau1: f64, tau2: f64) -> Vec<Complex64> {
        let x1 = tau1 / ts.t_cl_n.au();
        let x2 = tau2 / ts.t_cl_k.au();
        self.entries
            .iter()
            .map(|e| e.coeff * cis_cycles(-(cyc_mul(e.n, x1) + cyc_mul(e.k, x2))))
            .collect()
    }

    /// `<ψ_cl(0,0) | ψ_cl(τ1, τ2)>`.
    pub fn overlap_cl(&self, ts: &TimeScales, tau1: f64, tau2: f64) -> Complex64 {
        self.entries.iter().zip(self.psi_cl(ts, tau1, tau2)).map(|(e, c)| e.coeff.conj() * c).sum()
    }
}

/// The index bookkeeping applied by [`split_odd_even`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ShiftRecord {
    /// Subtracted from every `n`.
    pub n_shift: u32,
    /// Subtracted from `k` before halving, per sector.
    pub odd_k_offset: i64,
    pub even_k_offset: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitPacket {
    pub odd_part: SectorPart,
    pub even_part: SectorPart,
    pub shift: ShiftRecord,
    pub time_scales: TimeScales,
    /// Levels of the original packet, in its order.
    pub levels: Vec<StarkLevel>,
}

impl SplitPacket {
    pub fn parts(&self) -> [&SectorPart; 2] {
        [&self.odd_part, &self.even_part]
    }

    /// Scatters per-part vectors back onto the original level order.
    pub fn recombine(&self, odd: &[Complex64], even: &[Complex64]) -> Result<Vec<Complex64>> {
        if odd.len() != self.odd_part.entries.len() || even.len() != self.even_part.entries.len() {
            return Err(Error::Internal(format!(
                "part vectors of length ({}, {}) do not match the split ({}, {})",
                odd.len(),
                even.len(),
                self.odd_part.entries.len(),
                self.even_part.entries.len()
            )));
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.levels.len()];
        for (part, values) in [(&self.odd_part, odd), (&self.even_part, even)] {
            for (e, v) in part.entries.iter().zip(values) {
                out[e.index] = *v;
            }
        }
        Ok(out)
    }

    /// The prefactor `e^{-iπ t / T_cl^(k)}` of the even sector.
    pub fn even_phase(&self, t: f64) -> Complex64 {
        cis_cycles(-0.5 * t / self.time_scales.t_cl_k.au())
    }
}

/// Splits a packet into its two `k`-parity sectors in shifted coordinates.
pub fn split_odd_even(wp: &WavePacket) -> Result<SplitPacket> {
    let nbar = wp.nbar();
    let ts = time_scales(nbar, wp.field())?;
    let mut parts = [Sector::Odd, Sector::Even]
        .map(|sector| SectorPart { sector, n_parity: sector.n_parity(nbar), entries: Vec::new() });
    for (index, (&level, &coeff)) in wp.levels().iter().zip(wp.coeffs()).enumerate() {
        let k = level.k() as i64;
        let sector = if k.is_even() { 0 } else { 1 };
        let offset = parts[sector].sector.k_offset();
        parts[sector].entries.push(SectorEntry {
            level,
            index,
            n: level.n() as i64 - nbar as i64,
            k: (k - offset).div_euclid(2),
            coeff,
        });
    }
    let [odd_part, even_part] = parts;
    Ok(SplitPacket {
        odd_part,
        even_part,
        shift: ShiftRecord { n_shift: nbar, odd_k_offset: 0, even_k_offset: 1 },
        time_scales: ts,
        levels: wp.levels().to_vec(),
    })
}

/// Coefficients of `Ψ_odd(t)` and `Ψ_even(t)` under the second-order phase,
/// without the common phase `E(nbar, 0) t`. The even part includes its
/// `e^{-iπt/T_cl^(k)}` prefactor.
pub fn evolve_split(sp: &SplitPacket, t: TimeAu) -> (Vec<Complex64>, Vec<Complex64>) {
    let ts = &sp.time_scales;
    let t = t.au();
    let x_n = t / ts.t_cl_n.au();
    let x_k = t / ts.t_cl_k.au();
    let y_n = t / ts.t_rev_n.au();
    let y_nk = t / ts.t_rev_nk.au();
    let evolve = |part: &SectorPart, pre: Complex64| -> Vec<Complex64> {
        part.entries
            .iter()
            .map(|e| {
                let (n, k) = (e.n, e.k);
                let mut cyc = cyc_mul(n, x_n) + cyc_mul(k, x_k) - cyc_mul(n * n, y_n) + cyc_mul(n * k, y_nk);
                if part.sector == Sector::Even {
                    cyc += cyc_mul(n, 0.5 * y_nk);
                }
                e.coeff * pre * cis_cycles(-cyc)
            })
            .collect()
    };
    (evolve(&sp.odd_part, Complex64::new(1.0, 0.0)), evolve(&sp.even_part, sp.even_phase(t)))
}

/// `Σ conj(c) c(t)` over both sectors, without the common phase.
pub fn split_autocorrelation(sp: &SplitPacket, t: TimeAu) -> Complex64 {
    let (odd, even) = evolve_split(sp, t);
    let dot = |part: &SectorPart, v: &[Complex64]| -> Complex64 {
        part.entries.iter().zip(v).map(|(e, c)| e.coeff.conj() * c).sum()
    };
    dot(&sp.odd_part, &odd) + dot(&sp.even_part, &even)
}

/// Direct second-order evaluation over the original levels at `t`, in
/// unshifted `k`. Independent of the sector bookkeeping; used as the oracle
/// for reconstructions.
pub fn direct_coefficients(wp: &WavePacket, t: TimeAu) -> Result<Vec<Complex64>> {
    let ts = time_scales(wp.nbar(), wp.field())?;
    let nbar = wp.nbar() as f64;
    Ok(wp
        .levels()
        .iter()
        .zip(wp.coeffs())
        .map(|(l, c)| {
            let cyc = taylor2_cycles_per_au(&ts, l.n() as f64 - nbar, l.k() as f64) * t.au();
            c * cis_cycles(-cyc.fract())
        })
        .collect())
}

/// A time that is simultaneously a rational fraction of both revival times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FractionalTime {
    pub p1: u64,
    pub q1: u64,
    pub p12: u64,
    pub q12: u64,
    pub t_au: TimeAu,
    /// Exact `t_rev^(n) / t_rev^(nk)` used to derive `p12 / q12`.
    pub rs: Ratio,
    pub nbar: u32,
}

impl FractionalTime {
    pub fn p1_q1(&self) -> Rational {
        Rational::new(self.p1 as i128, self.q1 as i128)
    }

    pub fn p12_q12(&self) -> Rational {
        Rational::new(self.p12 as i128, self.q12 as i128)
    }
}

/// Exact `t_rev^(n) / t_rev^(nk)` for the given time scales, recovered by
/// rational approximation of the floating-point ratio.
pub fn revival_ratio_exact(ts: &TimeScales) -> Result<Ratio> {
    let x = ts.revival_ratio();
    let rs = rationalize(x, DEFAULT_MAX_DENOMINATOR)?;
    if ((rs.value() - x) / x).abs() > 1e-9 {
        return Err(Error::Domain(format!(
            "revival ratio {x} is not a rational with denominator <= {DEFAULT_MAX_DENOMINATOR} \
             (closest {}/{})",
            rs.num(),
            rs.den()
        )));
    }
    Ok(rs)
}

/// `t = (p1/q1) t_rev^(n)` with `p12/q12 = reduce(p1 r, q1 s)`.
pub fn fractional_time(p1: u64, q1: u64, ts: &TimeScales) -> Result<FractionalTime> {
    fractional_time_with(p1, q1, ts, revival_ratio_exact(ts)?)
}

/// As [`fractional_time`], with the revival ratio supplied.
pub fn fractional_time_with(p1: u64, q1: u64, ts: &TimeScales, rs: Ratio) -> Result<FractionalTime> {
    if p1 == 0 || q1 == 0 {
        return Err(Error::Domain(format!("fraction {p1}/{q1} must be positive")));
    }
    if p1.gcd(&q1) != 1 {
        return Err(Error::Domain(format!("fraction {p1}/{q1} is not in lowest terms")));
    }
    let (a, b) = (p1 as u128 * rs.num() as u128, q1 as u128 * rs.den() as u128);
    let g = a.gcd(&b);
    let p12 = u64::try_from(a / g).map_err(|_| Error::Domain("p12 overflows".into()))?;
    let q12 = u64::try_from(b / g).map_err(|_| Error::Domain("q12 overflows".into()))?;
    Ok(FractionalTime {
        p1,
        q1,
        p12,
        q12,
        t_au: TimeAu::new(p1 as f64 / q1 as f64 * ts.t_rev_n.au())?,
        rs,
        nbar: ts.nbar,
    })
}

fn frac(x: Rational) -> Rational {
    x - x.floor()
}

fn coefficients(ft: &FractionalTime, rs: Ratio) -> (Rational, Rational) {
    let a = ft.p1_q1();
    (a, a * Rational::new(rs.num() as i128, rs.den() as i128))
}

/// `θ_odd(n, k') = (p1/q1) n² - (r/s)(p1/q1) n k'`, reduced to `[0, 1)`.
pub fn theta_odd_exact(n: i64, k: i64, ft: &FractionalTime, rs: Ratio) -> Rational {
    let (a, b) = coefficients(ft, rs);
    let (n, k) = (n as i128, k as i128);
    frac(a * (n * n) - b * (n * k))
}

/// `θ_even(n, k') = θ_odd(n, k') - (r/s)(p1/q1) n / 2`, reduced to `[0, 1)`.
pub fn theta_even_exact(n: i64, k: i64, ft: &FractionalTime, rs: Ratio) -> Rational {
    let (a, b) = coefficients(ft, rs);
    let (n, k) = (n as i128, k as i128);
    frac(a * (n * n) - b * (n * k) - b * Rational::new(n, 2))
}

pub fn theta_odd(n: i64, k: i64, ft: &FractionalTime, rs: Ratio) -> f64 {
    to_f64(theta_odd_exact(n, k, ft, rs))
}

pub fn theta_even(n: i64, k: i64, ft: &FractionalTime, rs: Ratio) -> f64 {
    to_f64(theta_even_exact(n, k, ft, rs))
}

fn to_f64(x: Rational) -> f64 {
    *x.numer() as f64 / *x.denom() as f64
}

/// Minimal periods of the two theta phases. `l1`, `l1p` count steps of two in
/// the shifted `n` (one step within a parity class); `l2`, `l2p` count steps
/// in `k'`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Periods {
    pub l1: u64,
    pub l2: u64,
    pub l1p: u64,
    pub l2p: u64,
}

/// Theta phase of one sector on its parity class: `θ(ρ + 2m, k')`.
pub fn sector_theta(sector: Sector, m: i64, k: i64, ft: &FractionalTime, rs: Ratio) -> Rational {
    let n = sector.n_parity(ft.nbar) + 2 * m;
    match sector {
        Sector::Odd => theta_odd_exact(n, k, ft, rs),
        Sector::Even => theta_even_exact(n, k, ft, rs),
    }
}

/// Whether `l` is a period in `m` (`along_n`) or in `k'`.
///
/// The difference `θ(m + l, k') - θ(m, k')` (or the `k'` analogue) is affine
/// in `(m, k')` with rational coefficients, so it is an integer everywhere
/// iff it is an integer at `(0,0)`, `(1,0)` and `(0,1)`.
pub fn is_period(sector: Sector, along_n: bool, l: i64, ft: &FractionalTime, rs: Ratio) -> bool {
    [(0, 0), (1, 0), (0, 1)].iter().all(|&(m, k)| {
        let (m2, k2) = if along_n { (m + l, k) } else { (m, k + l) };
        sector_theta(sector, m2, k2, ft, rs) == sector_theta(sector, m, k, ft, rs)
    })
}

pub fn search_bound(ft: &FractionalTime, rs: Ratio) -> u64 {
    4 * ft.q1 * ft.q12 * rs.den()
}

/// Smallest positive periods, searched over `1..=4 q1 q12 s`.
pub fn minimal_periods(ft: &FractionalTime, rs: Ratio) -> Result<Periods> {
    let bound = search_bound(ft, rs);
    let find = |sector: Sector, along_n: bool| -> Result<u64> {
        (1..=bound).find(|&l| is_period(sector, along_n, l as i64, ft, rs)).ok_or_else(|| Error::SearchBound {
            what: format!(
                "{} period of the {:?} theta phase at {}/{}",
                if along_n { "n" } else { "k" },
                sector,
                ft.p1,
                ft.q1
            ),
            bound: bound as i64,
        })
    };
    Ok(Periods {
        l1: find(Sector::Odd, true)?,
        l2: find(Sector::Odd, false)?,
        l1p: find(Sector::Even, true)?,
        l2p: find(Sector::Even, false)?,
    })
}

/// Expansion of one sector's `exp(2πi θ)` into shifted copies of `ψ_cl`.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorExpansion {
    pub sector: Sector,
    pub n_parity: i64,
    /// Period in `m` (steps of two in `n`).
    pub l1: u64,
    /// Period in `k'`.
    pub l2: u64,
    /// `a[s1][s2]`, multiplying `ψ_cl(t + s1/(2 l1) T_cl^(n), t + s2/l2 T_cl^(k))`.
    pub a: Vec<Vec<Complex64>>,
}

impl SectorExpansion {
    /// Denominator of the `T_cl^(n)` shift unit.
    pub fn n_shift_den(&self) -> u64 {
        2 * self.l1
    }

    pub fn k_shift_den(&self) -> u64 {
        self.l2
    }

    pub fn parseval(&self) -> f64 {
        self.a.iter().flatten().map(|z| z.norm_sqr()).sum()
    }

    /// Nonzero coefficients as `(s1, s2, a)`.
    pub fn significant(&self, tol: f64) -> Vec<(u64, u64, Complex64)> {
        let mut out = Vec::new();
        for (s1, row) in self.a.iter().enumerate() {
            for (s2, z) in row.iter().enumerate() {
                if z.norm() > tol {
                    out.push((s1 as u64, s2 as u64, *z));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RevivalDecomposition {
    pub ft: FractionalTime,
    pub periods: Periods,
    pub odd: SectorExpansion,
    pub even: SectorExpansion,
    /// `exp(-iπ t_frac / T_cl^(k))`; `t_frac / T_cl^(k) = (p12/q12) nbar` exactly.
    pub even_prefactor: Complex64,
}

impl RevivalDecomposition {
    pub fn a_odd(&self) -> &[Vec<Complex64>] {
        &self.odd.a
    }

    pub fn a_even(&self) -> &[Vec<Complex64>] {
        &self.even.a
    }
}

/// `exp(2πi j / n)` for `j = 0..n`.
fn twiddles(n: u64) -> Vec<Complex64> {
    (0..n).map(|j| cis_cycles(j as f64 / n as f64)).collect()
}

fn expand_sector(sector: Sector, l1: u64, l2: u64, ft: &FractionalTime, rs: Ratio) -> SectorExpansion {
    let rho = sector.n_parity(ft.nbar);
    let (u1, u2) = (l1 as usize, l2 as usize);
    let w_n = twiddles(2 * l1);
    let w_k = twiddles(l2);
    // Inner transform over k'.
    let mut h = vec![vec![Complex64::new(0.0, 0.0); u2]; u1];
    for (m, row) in h.iter_mut().enumerate() {
        let g: Vec<Complex64> = (0..l2)
            .map(|k| {
                let th = sector_theta(sector, m as i64, k as i64, ft, rs);
                cis_cycles(to_f64(th))
            })
            .collect();
        for (s2, out) in row.iter_mut().enumerate() {
            *out = g.iter().enumerate().map(|(k, gk)| gk * w_k[(k * s2) % u2]).sum();
        }
    }
    // Outer transform over the parity class n = ρ + 2m.
    let scale = 1.0 / (l1 * l2) as f64;
    let a = (0..u1)
        .map(|s1| {
            (0..u2)
                .map(|s2| {
                    let sum: Complex64 = (0..u1)
                        .map(|m| {
                            let n = rho as usize + 2 * m;
                            h[m][s2] * w_n[(n * s1) % (2 * u1)]
                        })
                        .sum();
                    sum * scale
                })
                .collect()
        })
        .collect();
    SectorExpansion { sector, n_parity: rho, l1, l2, a }
}

/// The finite double sums turning `exp(2πi θ)` into shift coefficients.
pub fn expansion_coefficients(ft: &FractionalTime, rs: Ratio, periods: Periods) -> RevivalDecomposition {
    let odd = expand_sector(Sector::Odd, periods.l1, periods.l2, ft, rs);
    let even = expand_sector(Sector::Even, periods.l1p, periods.l2p, ft, rs);
    // t / T_cl^(k) = (p12/q12) t_rev^(nk) / T_cl^(k) = (p12/q12) nbar.
    let half_cycles = frac(ft.p12_q12() * Rational::from_integer(ft.nbar as i128) / Rational::from_integer(2));
    RevivalDecomposition { ft: *ft, periods, odd, even, even_prefactor: cis_cycles(-to_f64(half_cycles)) }
}

/// Full decomposition at `p1/q1` of `t_rev^(n)`.
pub fn decompose(ft: &FractionalTime) -> Result<RevivalDecomposition> {
    let periods = minimal_periods(ft, ft.rs)?;
    Ok(expansion_coefficients(ft, ft.rs, periods))
}

fn reconstruct_sector(part: &SectorPart, exp: &SectorExpansion, ts: &TimeScales, t: f64) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); part.entries.len()];
    for (s1, row) in exp.a.iter().enumerate() {
        let tau1 = t + s1 as f64 / exp.n_shift_den() as f64 * ts.t_cl_n.au();
        for (s2, a) in row.iter().enumerate() {
            if *a == Complex64::new(0.0, 0.0) {
                continue;
            }
            let tau2 = t + s2 as f64 / exp.k_shift_den() as f64 * ts.t_cl_k.au();
            for (o, c) in out.iter_mut().zip(part.psi_cl(ts, tau1, tau2)) {
                *o += a * c;
            }
        }
    }
    out
}

/// Sum of shifted first-order wave functions weighted by the expansion
/// coefficients, as a coefficient vector over the original levels.
pub fn reconstruct_at_fraction(
    sp: &SplitPacket,
    dec: &RevivalDecomposition,
    ft: &FractionalTime,
) -> Result<Vec<Complex64>> {
    if dec.ft != *ft || ft.nbar != sp.shift.n_shift {
        return Err(Error::Internal("decomposition, fractional time and split packet disagree".into()));
    }
    for (part, exp) in [(&sp.odd_part, &dec.odd), (&sp.even_part, &dec.even)] {
        if part.n_parity != exp.n_parity || exp.a.len() != exp.l1 as usize {
            return Err(Error::Internal(format!("{:?} sector does not match its expansion", part.sector)));
        }
    }
    let ts = &sp.time_scales;
    let t = ft.t_au.au();
    let odd = reconstruct_sector(&sp.odd_part, &dec.odd, ts, t);
    let even: Vec<Complex64> =
        reconstruct_sector(&sp.even_part, &dec.even, ts, t).into_iter().map(|z| z * dec.even_prefactor).collect();
    sp.recombine(&odd, &even)
}

/// Largest `|x - y| / max(|y|, tiny)` over paired entries.
pub fn max_relative_error(x: &[Complex64], y: &[Complex64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b).norm() / b.norm().max(1e-300)).fold(0.0, f64::max)
}

/// The full revival time `s t_rev^(n) = r t_rev^(nk)`.
pub fn full_revival_time(ts: &TimeScales) -> Result<TimeAu> {
    let rs = revival_ratio_exact(ts)?;
    TimeAu::new(rs.den() as f64 * ts.t_rev_n.au())
}

/// The two terms of `A(t)` near half the full revival, with the second-order
/// phases frozen at their half-revival values:
/// `(<ψ_odd(0,0)|ψ_odd(t, t + T_k/2)>, e^{-iπt/T_k} <ψ_even(0,0)|ψ_even(t + T_n/4, t)>)`.
pub fn half_revival_autocorrelation(sp: &SplitPacket, ts: &TimeScales, t: TimeAu) -> Result<(Complex64, Complex64)> {
    let center = 0.5 * full_revival_time(ts)?.au();
    let reach = 2.0 * ts.t_cl_k.au();
    if (t.au() - center).abs() > reach * (1.0 + 1e-12) {
        return Err(Error::Domain(format!(
            "t = {} is outside the half-revival window {} ± {}",
            t,
            TimeAu::new(center)?,
            TimeAu::new(reach)?
        )));
    }
    let t = t.au();
    let odd = sp.odd_part.overlap_cl(ts, t, t + 0.5 * ts.t_cl_k.au());
    let even = sp.even_part.overlap_cl(ts, t + 0.25 * ts.t_cl_n.au(), t) * sp.even_phase(t);
    Ok((odd, even))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecompositionReport {
    pub nbar: u32,
    pub r: u64,
    pub s: u64,
    pub p1: u64,
    pub q1: u64,
    pub p12: u64,
    pub q12: u64,
    pub t_au: f64,
    pub t_ps: f64,
    pub l1: u64,
    pub l2: u64,
    pub l1p: u64,
    pub l2p: u64,
    /// Shift units are `T_cl^(n) / n_shift_den` and `T_cl^(k) / k_shift_den`.
    pub odd_n_shift_den: u64,
    pub odd_k_shift_den: u64,
    pub even_n_shift_den: u64,
    pub even_k_shift_den: u64,
    pub odd_n_parity: i64,
    pub even_n_parity: i64,
    pub a_odd: Vec<Vec<(f64, f64)>>,
    pub a_even: Vec<Vec<(f64, f64)>>,
    pub even_prefactor: (f64, f64),
    pub parseval_odd: f64,
    pub parseval_even: f64,
    pub max_reconstruction_error: f64,
}

fn grid(a: &[Vec<Complex64>]) -> Vec<Vec<(f64, f64)>> {
    a.iter().map(|row| row.iter().map(|z| (z.re, z.im)).collect()).collect()
}

/// Decomposes the packet at `p1/q1` of `t_rev^(n)` and checks the
/// reconstruction against the direct evaluation.
pub fn decomposition_report(wp: &WavePacket, p1: u64, q1: u64) -> Result<(RevivalDecomposition, DecompositionReport)> {
    let sp = split_odd_even(wp)?;
    let ft = fractional_time(p1, q1, &sp.time_scales)?;
    let dec = decompose(&ft)?;
    let rebuilt = reconstruct_at_fraction(&sp, &dec, &ft)?;
    let direct = direct_coefficients(wp, ft.t_au)?;
    let report = DecompositionReport {
        nbar: ft.nbar,
        r: ft.rs.num(),
        s: ft.rs.den(),
        p1: ft.p1,
        q1: ft.q1,
        p12: ft.p12,
        q12: ft.q12,
        t_au: ft.t_au.au(),
        t_ps: ft.t_au.ps(),
        l1: dec.periods.l1,
        l2: dec.periods.l2,
        l1p: dec.periods.l1p,
        l2p: dec.periods.l2p,
        odd_n_shift_den: dec.odd.n_shift_den(),
        odd_k_shift_den: dec.odd.k_shift_den(),
        even_n_shift_den: dec.even.n_shift_den(),
        even_k_shift_den: dec.even.k_shift_den(),
        odd_n_parity: dec.odd.n_parity,
        even_n_parity: dec.even.n_parity,
        a_odd: grid(&dec.odd.a),
        a_even: grid(&dec.even.a),
        even_prefactor: (dec.even_prefactor.re, dec.even_prefactor.im),
        parseval_odd: dec.odd.parseval(),
        parseval_even: dec.even.parseval(),
        max_reconstruction_error: max_relative_error(&rebuilt, &direct),
    };
    Ok((dec, report))
}

/// `exp(2πi x)`.
fn cis_cycles(x: f64) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * x)
}

/// `j x mod 1`, keeping the integer factor out of the float product when the
/// product is large.
fn cyc_mul(j: i64, x: f64) -> f64 {
    let xf = x.fract();
    (j as f64 * xf).fract() + (j as f64 * (x - xf)).fract()
}

fn ser_complex<S: serde::Serializer>(z: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
    (z.re, z.im).serialize(s)
}
