//! Linear Stark spectrum of hydrogen in parabolic quantum numbers, the four
//! time scales of a packet centred on (nbar, k = 0), and the commensurability
//! arithmetic that relates them to the field strength.

use num_integer::Integer;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::units::{FieldStrength, TimeAu};

/// Default denominator cap used when reporting float ratios as fractions.
pub const DEFAULT_MAX_DENOMINATOR: u64 = 64;

/// Hydrogen level labelled by principal quantum number `n` and
/// `k = n1 - n2` (m = 0).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StarkLevel {
    n: u32,
    k: i32,
}

impl StarkLevel {
    /// Requires `|k| <= n - 1` and `k ≡ n - 1 (mod 2)`.
    pub fn new(n: u32, k: i32) -> Result<Self> {
        if n < 1 {
            return Err(Error::Domain("principal quantum number must be >= 1".into()));
        }
        let max = n as i64 - 1;
        if (k as i64).abs() > max {
            return Err(Error::Domain(format!("|k| = {} exceeds n - 1 = {max}", k.abs())));
        }
        if (k as i64 - max).rem_euclid(2) != 0 {
            return Err(Error::Domain(format!(
                "k = {k} has the wrong parity for n = {n} (k and n - 1 must share parity)"
            )));
        }
        Ok(StarkLevel { n, k })
    }

    pub fn n(self) -> u32 {
        self.n
    }

    pub fn k(self) -> i32 {
        self.k
    }
}

impl fmt::Display for StarkLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.n, self.k)
    }
}

/// Positive fraction in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Ratio {
    num: u64,
    den: u64,
}

impl Ratio {
    /// Builds `num/den`, rejecting zero parts and pairs that are not coprime.
    pub fn new(num: u64, den: u64) -> Result<Self> {
        if num == 0 || den == 0 {
            return Err(Error::Domain(format!("ratio {num}/{den} must have positive parts")));
        }
        if num.gcd(&den) != 1 {
            return Err(Error::Domain(format!("ratio {num}/{den} is not in lowest terms")));
        }
        Ok(Ratio { num, den })
    }

    /// Builds `num/den` after dividing out the common factor.
    pub fn reduced(num: u64, den: u64) -> Result<Self> {
        if num == 0 || den == 0 {
            return Err(Error::Domain(format!("ratio {num}/{den} must have positive parts")));
        }
        let g = num.gcd(&den);
        Ok(Ratio { num: num / g, den: den / g })
    }

    pub fn num(self) -> u64 {
        self.num
    }

    pub fn den(self) -> u64 {
        self.den
    }

    pub fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// Exact comparison `self < other` by cross multiplication.
    pub fn is_below(self, other: Ratio) -> bool {
        (self.num as u128) * (other.den as u128) < (other.num as u128) * (self.den as u128)
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for Ratio {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s
            .trim()
            .split_once('/')
            .ok_or_else(|| Error::Config(format!("expected a fraction like 2/13, got {s:?}")))?;
        let parse = |x: &str| {
            x.trim()
                .parse::<u64>()
                .map_err(|_| Error::Config(format!("bad integer {x:?} in fraction {s:?}")))
        };
        Ratio::new(parse(a)?, parse(b)?)
    }
}

impl TryFrom<String> for Ratio {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Ratio> for String {
    fn from(r: Ratio) -> String {
        r.to_string()
    }
}

/// The two classical periods and two revival times of a packet centred on
/// (nbar, k = 0, m = 0), in atomic units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeScales {
    pub nbar: u32,
    pub field: FieldStrength,
    /// Kepler period `2π nbar³`.
    pub t_cl_n: TimeAu,
    /// Stark (eccentricity) period `2π / (3 F nbar)`.
    pub t_cl_k: TimeAu,
    /// Revival time from the quadratic `n` dependence, `(4π/3) nbar⁴`.
    pub t_rev_n: TimeAu,
    /// Cross-revival time from the mixed `n k` dependence, `2π / (3 F)`.
    pub t_rev_nk: TimeAu,
}

/// First-order Stark energy `-1/(2n²) + (3/2) n k F` in Hartree.
pub fn energy(level: StarkLevel, field: FieldStrength) -> f64 {
    let n = level.n as f64;
    -1.0 / (2.0 * n * n) + 1.5 * n * level.k as f64 * field.au()
}

/// The `n` levels of one manifold, ordered by increasing `k`.
pub fn enumerate_manifold(n: u32) -> Result<Vec<StarkLevel>> {
    if n < 1 {
        return Err(Error::Domain("principal quantum number must be >= 1".into()));
    }
    let top = n as i32 - 1;
    Ok((0..n as i32).map(|j| StarkLevel { n, k: -top + 2 * j }).collect())
}

fn check_nbar(nbar: u32) -> Result<()> {
    if nbar < 2 {
        return Err(Error::Domain(format!("nbar must be >= 2, got {nbar}")));
    }
    Ok(())
}

pub fn time_scales(nbar: u32, field: FieldStrength) -> Result<TimeScales> {
    check_nbar(nbar)?;
    let nb = nbar as f64;
    let f = field.au();
    Ok(TimeScales {
        nbar,
        field,
        t_cl_n: TimeAu::raw(2.0 * PI * nb.powi(3)),
        t_cl_k: TimeAu::raw(2.0 * PI / (3.0 * f * nb)),
        t_rev_n: TimeAu::raw(4.0 * PI / 3.0 * nb.powi(4)),
        t_rev_nk: TimeAu::raw(2.0 * PI / (3.0 * f)),
    })
}

impl TimeScales {
    /// `T_cl^(n) / T_cl^(k) = 3 F nbar⁴`.
    pub fn classical_ratio(&self) -> f64 {
        self.t_cl_n.au() / self.t_cl_k.au()
    }

    /// `t_rev^(n) / t_rev^(nk) = 2 F nbar⁴`.
    pub fn revival_ratio(&self) -> f64 {
        self.t_rev_n.au() / self.t_rev_nk.au()
    }
}

pub fn classical_ratio(ts: &TimeScales) -> f64 {
    ts.classical_ratio()
}

pub fn revival_ratio(ts: &TimeScales) -> f64 {
    ts.revival_ratio()
}

/// Classical field-ionization threshold `F_c = 1/(16 nbar⁴)`.
pub fn ionization_threshold(nbar: u32) -> Result<FieldStrength> {
    check_nbar(nbar)?;
    FieldStrength::from_au(1.0 / (16.0 * (nbar as f64).powi(4)))
}

/// Errors unless `field` is strictly below `F_c(nbar)`.
pub fn ensure_below_threshold(nbar: u32, field: FieldStrength) -> Result<()> {
    let fc = ionization_threshold(nbar)?;
    if field.au() < fc.au() {
        Ok(())
    } else {
        Err(above_threshold(field, fc, String::new()))
    }
}

fn above_threshold(field: FieldStrength, fc: FieldStrength, detail: String) -> Error {
    Error::AboveThreshold {
        field_au: field.au(),
        field_v_per_cm: field.volts_per_cm(),
        threshold_au: fc.au(),
        threshold_v_per_cm: fc.volts_per_cm(),
        detail,
    }
}

/// Field giving `T_cl^(n)/T_cl^(k) = a/b`. Below threshold iff `a/b < 3/16`.
pub fn solve_field_for_classical_ratio(nbar: u32, target: Ratio) -> Result<FieldStrength> {
    check_nbar(nbar)?;
    let field = FieldStrength::from_au(target.value() / (3.0 * (nbar as f64).powi(4)))?;
    if !target.is_below(Ratio { num: 3, den: 16 }) {
        let fc = ionization_threshold(nbar)?;
        return Err(above_threshold(
            field,
            fc,
            format!("; classical ratio {target} must be below 3/16"),
        ));
    }
    Ok(field)
}

/// Field giving `t_rev^(n)/t_rev^(nk) = r/s`. Below threshold iff `r/s < 1/8`.
pub fn solve_field_for_revival_ratio(nbar: u32, target: Ratio) -> Result<FieldStrength> {
    check_nbar(nbar)?;
    let field = FieldStrength::from_au(target.value() / (2.0 * (nbar as f64).powi(4)))?;
    if !target.is_below(Ratio { num: 1, den: 8 }) {
        let fc = ionization_threshold(nbar)?;
        return Err(above_threshold(
            field,
            fc,
            format!("; revival ratio {target} must be below 1/8"),
        ));
    }
    Ok(field)
}

/// Closest fraction `p/q` (p >= 1) to `x` with `q <= max_den`, built from the
/// continued-fraction convergents of `x` and the last semiconvergent.
pub fn rationalize(x: f64, max_den: u64) -> Result<Ratio> {
    if !x.is_finite() || x <= 0.0 {
        return Err(Error::Domain(format!("cannot rationalize {x}")));
    }
    if max_den < 1 {
        return Err(Error::Domain("denominator cap must be >= 1".into()));
    }
    // Convergents h/k with the usual recurrences; stop once the next one would
    // exceed the cap.
    let (mut h0, mut k0, mut h1, mut k1) = (0u64, 1u64, 1u64, 0u64);
    let mut y = x;
    loop {
        let a = y.floor();
        if a > u64::MAX as f64 / 2.0 {
            break;
        }
        let a = a as u64;
        let k2 = a.saturating_mul(k1).saturating_add(k0);
        if k2 > max_den {
            // Semiconvergent: largest t with t*k1 + k0 <= max_den.
            let t = (max_den - k0) / k1.max(1);
            if k1 > 0 && t > 0 {
                let hs = t * h1 + h0;
                let ks = t * k1 + k0;
                let semi = hs as f64 / ks as f64;
                let conv = h1 as f64 / k1 as f64;
                if (semi - x).abs() < (conv - x).abs() {
                    h1 = hs;
                    k1 = ks;
                }
            }
            break;
        }
        let h2 = a.saturating_mul(h1).saturating_add(h0);
        (h0, k0, h1, k1) = (h1, k1, h2, k2);
        let frac = y - a as f64;
        if frac <= 1e-15 * y.max(1.0) {
            break;
        }
        y = 1.0 / frac;
    }
    if k1 == 0 {
        // Only reachable when x > max representable convergent; fall back.
        return Ratio::reduced(x.round().max(1.0) as u64, 1);
    }
    if h1 == 0 {
        // x < 1/(2 max_den): the nearest positive fraction.
        return Ratio::reduced(1, max_den);
    }
    Ratio::reduced(h1, k1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{field_from_volts_per_cm, time_to_ps};
    use proptest::prelude::*;

    fn f_au(v: f64) -> FieldStrength {
        field_from_volts_per_cm(v).unwrap()
    }

    #[test]
    fn level_invariants() {
        assert!(StarkLevel::new(24, 0).is_err());
        assert!(StarkLevel::new(24, 23).is_ok());
        assert!(StarkLevel::new(24, 25).is_err());
        assert!(StarkLevel::new(23, -22).is_ok());
        assert!(StarkLevel::new(23, -21).is_err());
        assert!(StarkLevel::new(0, 0).is_err());
        assert!(StarkLevel::new(1, 0).is_ok());
    }

    #[test]
    fn energies() {
        let e0 = energy(StarkLevel::new(25, 0).unwrap(), f_au(700.0));
        assert_eq!(e0, -1.0 / 1250.0);
        let f = FieldStrength::from_au(1.2559e-7).unwrap();
        let e = energy(StarkLevel::new(24, 1).unwrap(), f);
        assert!((e - (-1.0 / 1152.0 + 1.5 * 24.0 * 1.2559e-7)).abs() < 1e-15);
        // Values from direct evaluation of the closed form.
        let e2 = energy(StarkLevel::new(23, -2).unwrap(), f);
        assert!((e2 - -9.5385e-4).abs() < 1e-8, "{e2}");
        let e3 = energy(StarkLevel::new(24, 3).unwrap(), f);
        assert!((e3 - -8.544918e-4).abs() < 1e-9, "{e3}");
    }

    #[test]
    fn manifolds() {
        assert_eq!(enumerate_manifold(1).unwrap(), vec![StarkLevel::new(1, 0).unwrap()]);
        let two: Vec<i32> = enumerate_manifold(2).unwrap().iter().map(|l| l.k()).collect();
        assert_eq!(two, vec![-1, 1]);
        let m = enumerate_manifold(24).unwrap();
        // Oracle: enumerate partitions n1 + n2 = n - 1 and collect k = n1 - n2.
        let mut ks: Vec<i32> = (0..24).map(|n1| n1 - (23 - n1)).collect();
        ks.sort();
        assert_eq!(m.iter().map(|l| l.k()).collect::<Vec<_>>(), ks);
        assert!(enumerate_manifold(0).is_err());
    }

    #[test]
    fn fig3_time_scales_in_ps() {
        let ts = time_scales(24, FieldStrength::from_au(1.2559e-7).unwrap()).unwrap();
        assert!((time_to_ps(ts.t_cl_n) - 2.1).abs() < 0.01);
        assert!((time_to_ps(ts.t_cl_k) - 16.8).abs() < 0.05);
        assert!((time_to_ps(ts.t_rev_nk) - 403.4).abs() < 0.2);
        assert_eq!(ts.t_cl_n.au(), 2.0 * PI * 13824.0);
        let other = time_scales(24, f_au(100.0)).unwrap();
        assert_eq!(other.t_cl_n, ts.t_cl_n);
        assert_eq!(other.t_rev_n, ts.t_rev_n);
        assert!(time_scales(1, f_au(100.0)).is_err());
    }

    #[test]
    fn published_ratios() {
        let r1 = classical_ratio(&time_scales(24, f_au(794.8)).unwrap());
        assert!((r1 - 2.0 / 13.0).abs() < 1e-4);
        let r2 = classical_ratio(&time_scales(24, f_au(861.0)).unwrap());
        assert!((r2 - 1.0 / 6.0).abs() < 1e-4);
        let r3 = revival_ratio(&time_scales(24, f_au(645.8)).unwrap());
        assert!((r3 - 1.0 / 12.0).abs() < 1e-4);
    }

    #[test]
    fn field_solvers() {
        let a = solve_field_for_classical_ratio(24, "2/13".parse().unwrap()).unwrap();
        let b = solve_field_for_classical_ratio(24, "1/6".parse().unwrap()).unwrap();
        assert!((a.volts_per_cm() - 794.8).abs() < 0.1);
        assert!((b.volts_per_cm() - 861.0).abs() < 0.1);
        assert!((a.au() / b.au() - 12.0 / 13.0).abs() < 1e-6);
        let c = solve_field_for_revival_ratio(24, "1/12".parse().unwrap()).unwrap();
        assert!((c.volts_per_cm() - 645.8).abs() < 0.1);
        let ts = time_scales(24, c).unwrap();
        assert!((ts.classical_ratio() - 0.125).abs() < 1e-4);
        let d = solve_field_for_revival_ratio(24, "1/16".parse().unwrap()).unwrap();
        assert_eq!(d.au(), 1.0 / (32.0 * 24f64.powi(4)));
    }

    #[test]
    fn solvers_refuse_above_threshold() {
        let e = solve_field_for_classical_ratio(24, "3/16".parse().unwrap()).unwrap_err();
        assert!(matches!(e, Error::AboveThreshold { .. }));
        assert!(e.to_string().contains("F_c"));
        assert!(solve_field_for_classical_ratio(24, "1/5".parse().unwrap()).is_err());
        assert!(solve_field_for_revival_ratio(24, "1/8".parse().unwrap()).is_err());
        assert!(solve_field_for_revival_ratio(24, "1/9".parse().unwrap()).is_ok());
    }

    #[test]
    fn threshold() {
        let fc = ionization_threshold(24).unwrap();
        // Oracle: 1/(16 * 24^4) converted with the field unit.
        assert!((fc.au() - 1.8837e-7).abs() < 1e-10);
        assert!((fc.volts_per_cm() - 968.7).abs() < 0.05);
        assert!(f_au(794.8) < fc && f_au(861.0) < fc);
        assert_eq!(ionization_threshold(2).unwrap().au(), 1.0 / 256.0);
        assert!(ensure_below_threshold(24, f_au(968.7)).is_err());
        assert!(ensure_below_threshold(24, f_au(968.6)).is_ok());
    }

    #[test]
    fn ratio_parsing() {
        assert_eq!("2/13".parse::<Ratio>().unwrap(), Ratio::new(2, 13).unwrap());
        assert!("4/26".parse::<Ratio>().is_err());
        assert!("0/3".parse::<Ratio>().is_err());
        assert!("x".parse::<Ratio>().is_err());
        assert_eq!(Ratio::reduced(4, 26).unwrap(), Ratio::new(2, 13).unwrap());
    }

    #[test]
    fn rationalize_examples() {
        assert_eq!(rationalize(0.5, 10).unwrap(), Ratio::new(1, 2).unwrap());
        assert_eq!(rationalize(0.15385, 20).unwrap(), Ratio::new(2, 13).unwrap());
        assert_eq!(rationalize(0.125, 100).unwrap(), Ratio::new(1, 8).unwrap());
        assert_eq!(rationalize(3.0, 5).unwrap(), Ratio::new(3, 1).unwrap());
        assert_eq!(rationalize(1e-6, 10).unwrap(), Ratio::new(1, 10).unwrap());
        assert!(rationalize(0.0, 10).is_err());
        assert!(rationalize(0.3, 0).is_err());
    }

    /// Exhaustive search over every denominator up to the cap.
    fn best_by_search(x: f64, max_den: u64) -> f64 {
        let mut best = f64::INFINITY;
        for q in 1..=max_den {
            let p0 = (x * q as f64).round().max(1.0) as u64;
            for p in [p0.saturating_sub(1).max(1), p0, p0 + 1] {
                best = best.min((x - p as f64 / q as f64).abs());
            }
        }
        best
    }

    proptest! {
        #[test]
        fn rationalize_matches_exhaustive_search(x in 1e-3f64..20.0, cap in 1u64..120) {
            let r = rationalize(x, cap).unwrap();
            prop_assert!(r.den() <= cap);
            let err = (x - r.value()).abs();
            prop_assert!(err <= best_by_search(x, cap) + 1e-15, "{r} err {err}");
        }

        #[test]
        fn ratio_identity_for_all_fields(nbar in 2u32..80, v in 1.0f64..1e6) {
            let ts = time_scales(nbar, f_au(v)).unwrap();
            let lhs = ts.revival_ratio();
            let rhs = 2.0 / 3.0 * ts.classical_ratio();
            prop_assert!(((lhs - rhs) / rhs).abs() < 1e-12);
        }

        #[test]
        fn classical_solver_round_trip(nbar in 2u32..60, a in 1u64..40, b in 1u64..400) {
            let Ok(target) = Ratio::reduced(a, b) else { return Ok(()) };
            prop_assume!(target.is_below(Ratio::new(3, 16).unwrap()));
            let f = solve_field_for_classical_ratio(nbar, target).unwrap();
            let back = time_scales(nbar, f).unwrap().classical_ratio();
            prop_assert!(((back - target.value()) / target.value()).abs() < 1e-12);
            prop_assert!(ensure_below_threshold(nbar, f).is_ok());
        }

        #[test]
        fn manifold_levels_are_valid(n in 1u32..200) {
            let levels = enumerate_manifold(n).unwrap();
            prop_assert_eq!(levels.len(), n as usize);
            for l in &levels {
                prop_assert!(StarkLevel::new(l.n(), l.k()).is_ok());
            }
        }

        #[test]
        fn energy_increases_with_k(n in 2u32..100, v in 1.0f64..1e5) {
            let f = f_au(v);
            let e: Vec<f64> = enumerate_manifold(n).unwrap().into_iter().map(|l| energy(l, f)).collect();
            prop_assert!(e.windows(2).all(|w| w[0] < w[1]));
        }
    }
}
