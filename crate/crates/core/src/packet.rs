//! Initial coherent superpositions over Stark levels.
//!
//! Only the expansion coefficients are stored; the eigenfunctions themselves
//! are abstract orthonormal labels.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::stark::{energy, enumerate_manifold, StarkLevel};
use crate::units::FieldStrength;

/// Weighting across manifolds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NWeighting {
    /// Every listed manifold gets the same probability before truncation.
    FlatTop,
    /// Manifold probability `∝ exp(-(n - nbar)² / (2 sigma²))`.
    Gaussian { sigma: f64 },
}

/// Which part of each manifold is kept.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Truncation {
    /// Below nbar keep `k > 0`, above nbar keep `k < 0`, at nbar keep everything.
    HalfManifold,
    Full,
    /// Keep levels with `|E - E(nbar, kbar)| <= width / 2` (Hartree).
    EnergyWindow { width: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PacketSpec {
    pub nbar: u32,
    pub kbar: i32,
    pub n_list: Vec<u32>,
    pub n_weighting: NWeighting,
    /// Standard deviation of the `|c|²` distribution over k.
    pub k_sigma: f64,
    pub truncation: Truncation,
    pub field: FieldStrength,
}

impl PacketSpec {
    /// nbar - 1, nbar, nbar + 1 with flat-top weighting, σ_k = 6 and
    /// half-manifold truncation.
    pub fn three_manifold(nbar: u32, field: FieldStrength) -> Self {
        PacketSpec {
            nbar,
            kbar: 0,
            n_list: vec![nbar - 1, nbar, nbar + 1],
            n_weighting: NWeighting::FlatTop,
            k_sigma: 6.0,
            truncation: Truncation::HalfManifold,
            field,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nbar < 2 {
            return Err(Error::Config(format!("nbar must be >= 2, got {}", self.nbar)));
        }
        if self.n_list.is_empty() {
            return Err(Error::Config("n_list must not be empty".into()));
        }
        if let Some(&n) = self.n_list.iter().find(|&&n| n < 2) {
            return Err(Error::Config(format!("n_list entries must be >= 2, got {n}")));
        }
        let distinct: BTreeSet<_> = self.n_list.iter().collect();
        if distinct.len() != self.n_list.len() {
            return Err(Error::Config("n_list contains duplicates".into()));
        }
        if !(self.k_sigma.is_finite() && self.k_sigma > 0.0) {
            return Err(Error::Config(format!("k_sigma must be positive, got {}", self.k_sigma)));
        }
        if let NWeighting::Gaussian { sigma } = self.n_weighting {
            if !(sigma.is_finite() && sigma > 0.0) {
                return Err(Error::Config(format!("n sigma must be positive, got {sigma}")));
            }
        }
        if let Truncation::EnergyWindow { width } = self.truncation {
            if !(width.is_finite() && width > 0.0) {
                return Err(Error::Config(format!("energy window must be positive, got {width}")));
            }
        }
        Ok(())
    }
}

/// Normalized coefficient vector over distinct Stark levels, sorted by (n, k).
#[derive(Debug, Clone, PartialEq)]
pub struct WavePacket {
    levels: Vec<StarkLevel>,
    coeffs: Vec<Complex64>,
    nbar: u32,
    kbar: i32,
    field: FieldStrength,
}

impl WavePacket {
    /// Builds a packet from explicit amplitudes. Levels are sorted and the
    /// coefficients normalized.
    pub fn from_parts(
        mut entries: Vec<(StarkLevel, Complex64)>,
        nbar: u32,
        kbar: i32,
        field: FieldStrength,
    ) -> Result<Self> {
        entries.sort_by_key(|(l, _)| *l);
        if entries.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::Construction("duplicate level in packet".into()));
        }
        let norm: f64 = entries.iter().map(|(_, c)| c.norm_sqr()).sum::<f64>().sqrt();
        if entries.is_empty() || !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Construction("packet has no surviving levels".into()));
        }
        let (levels, coeffs) = entries.into_iter().map(|(l, c)| (l, c / norm)).unzip();
        Ok(WavePacket { levels, coeffs, nbar, kbar, field })
    }

    pub fn levels(&self) -> &[StarkLevel] {
        &self.levels
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn center(&self) -> (u32, i32) {
        (self.nbar, self.kbar)
    }

    pub fn nbar(&self) -> u32 {
        self.nbar
    }

    pub fn field(&self) -> FieldStrength {
        self.field
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// `|c|²` for every level, aligned with `levels()`.
    pub fn weights(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| c.norm_sqr()).collect()
    }
}

fn keeps(spec: &PacketSpec, level: StarkLevel, center_energy: f64) -> bool {
    match spec.truncation {
        Truncation::Full => true,
        Truncation::HalfManifold => match level.n().cmp(&spec.nbar) {
            std::cmp::Ordering::Less => level.k() > 0,
            std::cmp::Ordering::Greater => level.k() < 0,
            std::cmp::Ordering::Equal => true,
        },
        Truncation::EnergyWindow { width } => {
            (energy(level, spec.field) - center_energy).abs() <= 0.5 * width
        }
    }
}

pub fn build_packet(spec: &PacketSpec) -> Result<WavePacket> {
    spec.validate()?;
    // The centre level may not exist (wrong k parity for nbar), so evaluate
    // the closed form directly.
    let nb = spec.nbar as f64;
    let center_energy = -0.5 / (nb * nb) + 1.5 * nb * spec.kbar as f64 * spec.field.au();
    let k_amp = |k: i32| {
        let dk = (k - spec.kbar) as f64;
        (-dk * dk / (4.0 * spec.k_sigma * spec.k_sigma)).exp()
    };

    let mut entries = Vec::new();
    for &n in &spec.n_list {
        let manifold = enumerate_manifold(n)?;
        let p_n = match spec.n_weighting {
            NWeighting::FlatTop => 1.0,
            NWeighting::Gaussian { sigma } => {
                let dn = n as f64 - nb;
                (-dn * dn / (2.0 * sigma * sigma)).exp()
            }
        };
        // Scale so the untruncated manifold carries probability p_n.
        let z: f64 = manifold.iter().map(|l| k_amp(l.k()).powi(2)).sum();
        let scale = (p_n / z).sqrt();
        for level in manifold {
            if keeps(spec, level, center_energy) {
                entries.push((level, Complex64::new(scale * k_amp(level.k()), 0.0)));
            }
        }
    }
    if entries.is_empty() {
        return Err(Error::Construction(
            "no levels survive truncation for the requested manifolds".into(),
        ));
    }
    WavePacket::from_parts(entries, spec.nbar, spec.kbar, spec.field)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistogramRow {
    pub n: u32,
    pub k: i32,
    pub weight: f64,
}

pub fn coefficient_histogram(wp: &WavePacket) -> Vec<HistogramRow> {
    wp.levels
        .iter()
        .zip(&wp.coeffs)
        .map(|(l, c)| HistogramRow { n: l.n(), k: l.k(), weight: c.norm_sqr() })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::field_from_volts_per_cm;
    use proptest::prelude::*;

    fn field() -> FieldStrength {
        field_from_volts_per_cm(645.8).unwrap()
    }

    fn total(wp: &WavePacket) -> f64 {
        wp.weights().iter().sum()
    }

    #[test]
    fn single_manifold_is_symmetric() {
        let spec = PacketSpec {
            n_list: vec![24],
            truncation: Truncation::Full,
            ..PacketSpec::three_manifold(24, field())
        };
        let wp = build_packet(&spec).unwrap();
        assert_eq!(wp.len(), 24);
        assert!((total(&wp) - 1.0).abs() < 1e-12);
        let c = wp.coeffs();
        for i in 0..12 {
            assert_eq!(wp.levels()[i].k(), -wp.levels()[23 - i].k());
            assert!((c[i] - c[23 - i]).norm() < 1e-15);
        }
    }

    #[test]
    fn half_manifold_truncation() {
        let wp = build_packet(&PacketSpec::three_manifold(24, field())).unwrap();
        for l in wp.levels() {
            match l.n() {
                23 => assert!(l.k() > 0),
                25 => assert!(l.k() < 0),
                24 => {}
                n => panic!("unexpected manifold {n}"),
            }
        }
        assert_eq!(wp.levels().iter().filter(|l| l.n() == 24).count(), 24);
        assert_eq!(wp.levels().iter().filter(|l| l.n() == 23).count(), 11);
        assert_eq!(wp.levels().iter().filter(|l| l.n() == 25).count(), 12);
        assert!((total(&wp) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn flat_top_marginals() {
        let spec = PacketSpec { truncation: Truncation::Full, ..PacketSpec::three_manifold(24, field()) };
        let wp = build_packet(&spec).unwrap();
        let rows = coefficient_histogram(&wp);
        assert!((rows.iter().map(|r| r.weight).sum::<f64>() - 1.0).abs() < 1e-12);
        for n in 23..=25 {
            let m: f64 = rows.iter().filter(|r| r.n == n).map(|r| r.weight).sum();
            assert!((m - 1.0 / 3.0).abs() < 1e-12, "n = {n}: {m}");
        }
        // k marginal is even under k -> -k.
        for r in &rows {
            let mirror: f64 = rows.iter().filter(|s| s.k == -r.k).map(|s| s.weight).sum();
            let here: f64 = rows.iter().filter(|s| s.k == r.k).map(|s| s.weight).sum();
            assert!((mirror - here).abs() < 1e-15);
        }
        assert!(rows.windows(2).all(|w| (w[0].n, w[0].k) < (w[1].n, w[1].k)));
    }

    #[test]
    fn k_width_is_probability_sigma() {
        // A wide manifold makes the discrete variance match the continuum one.
        let spec = PacketSpec {
            nbar: 200,
            n_list: vec![200],
            k_sigma: 6.0,
            truncation: Truncation::Full,
            ..PacketSpec::three_manifold(200, FieldStrength::from_au(1e-12).unwrap())
        };
        let wp = build_packet(&spec).unwrap();
        let var: f64 = wp.levels().iter().zip(wp.weights()).map(|(l, w)| w * (l.k() as f64).powi(2)).sum();
        assert!((var.sqrt() - 6.0).abs() < 1e-6, "{}", var.sqrt());
    }

    #[test]
    fn single_level_histogram() {
        let spec = PacketSpec {
            nbar: 2,
            n_list: vec![2],
            truncation: Truncation::EnergyWindow { width: 1e-12 },
            kbar: 1,
            ..PacketSpec::three_manifold(2, field())
        };
        let wp = build_packet(&spec).unwrap();
        let rows = coefficient_histogram(&wp);
        assert_eq!(rows.len(), 1);
        assert_eq!((rows[0].n, rows[0].k), (2, 1));
        assert!((rows[0].weight - 1.0).abs() < 1e-15);
    }

    #[test]
    fn construction_errors() {
        let base = PacketSpec::three_manifold(24, field());
        let empty = PacketSpec { n_list: vec![], ..base.clone() };
        assert!(matches!(build_packet(&empty), Err(Error::Config(_))));
        let bad_sigma = PacketSpec { k_sigma: 0.0, ..base.clone() };
        assert!(build_packet(&bad_sigma).is_err());
        let dup = PacketSpec { n_list: vec![24, 24], ..base.clone() };
        assert!(build_packet(&dup).is_err());
        let none = PacketSpec {
            n_list: vec![3],
            truncation: Truncation::EnergyWindow { width: 1e-9 },
            ..base
        };
        assert!(matches!(build_packet(&none), Err(Error::Construction(_))));
    }

    proptest! {
        #[test]
        fn every_packet_is_normalized_and_valid(
            nbar in 3u32..40,
            spread in 0u32..3,
            sigma in 0.5f64..15.0,
            kbar in -4i32..4,
            trunc in 0usize..3,
            gaussian_n in proptest::bool::ANY,
        ) {
            let n_list: Vec<u32> = (nbar.saturating_sub(spread).max(2)..=nbar + spread).collect();
            let spec = PacketSpec {
                nbar,
                kbar,
                n_list,
                n_weighting: if gaussian_n { NWeighting::Gaussian { sigma: 1.0 } } else { NWeighting::FlatTop },
                k_sigma: sigma,
                truncation: [Truncation::Full, Truncation::HalfManifold, Truncation::EnergyWindow { width: 1e-4 }][trunc],
                field: field(),
            };
            let Ok(wp) = build_packet(&spec) else { return Ok(()) };
            prop_assert!((total(&wp) - 1.0).abs() < 1e-12);
            for l in wp.levels() {
                prop_assert!(StarkLevel::new(l.n(), l.k()).is_ok());
            }
            prop_assert!(wp.levels().windows(2).all(|w| w[0] < w[1]));
            // Envelope is non-increasing in |k - kbar| within each manifold.
            for n in &spec.n_list {
                let mut row: Vec<(i32, f64)> = wp.levels().iter().zip(wp.coeffs())
                    .filter(|(l, _)| l.n() == *n)
                    .map(|(l, c)| ((l.k() - kbar).abs(), c.norm()))
                    .collect();
                row.sort_by_key(|a| a.0);
                prop_assert!(row.windows(2).all(|w| w[0].0 == w[1].0 || w[1].1 <= w[0].1 + 1e-15));
            }
        }
    }
}
