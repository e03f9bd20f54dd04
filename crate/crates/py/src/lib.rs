//! Python bindings (`import starkpy`).

use num_complex::Complex64;
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use stark_core::dynamics::{self, PhaseKind, PhaseModel};
use stark_core::packet::{self, NWeighting, PacketSpec, Truncation};
use stark_core::revivals;
use stark_core::stark::{self, Ratio};
use stark_core::units::{self, FieldStrength, TimeAu};
use stark_core::{report, verify, Error};

fn err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn ratio(s: &str) -> PyResult<Ratio> {
    s.parse().map_err(err)
}

fn field(au: f64) -> PyResult<FieldStrength> {
    FieldStrength::from_au(au).map_err(err)
}

fn time(au: f64) -> PyResult<TimeAu> {
    TimeAu::new(au).map_err(err)
}

fn phase_kind(s: &str) -> PyResult<PhaseKind> {
    s.parse().map_err(err)
}

/// Field strength in atomic units from V/cm.
#[pyfunction]
fn field_from_volts_per_cm(v_per_cm: f64) -> PyResult<f64> {
    units::field_from_volts_per_cm(v_per_cm).map(|f| f.au()).map_err(err)
}

/// Time in picoseconds from atomic units.
#[pyfunction]
fn time_to_ps(t_au: f64) -> PyResult<f64> {
    Ok(units::time_to_ps(time(t_au)?))
}

/// Field (au) that makes T_cl^(n)/T_cl^(k) equal `ratio`, e.g. "2/13".
#[pyfunction]
fn solve_field_for_classical_ratio(nbar: u32, ratio_text: &str) -> PyResult<f64> {
    stark::solve_field_for_classical_ratio(nbar, ratio(ratio_text)?).map(|f| f.au()).map_err(err)
}

/// Field (au) that makes t_rev^(n)/t_rev^(nk) equal `ratio`, e.g. "1/12".
#[pyfunction]
fn solve_field_for_revival_ratio(nbar: u32, ratio_text: &str) -> PyResult<f64> {
    stark::solve_field_for_revival_ratio(nbar, ratio(ratio_text)?).map(|f| f.au()).map_err(err)
}

/// Classical ionization threshold 1/(16 nbar⁴) in atomic units.
#[pyfunction]
fn ionization_threshold(nbar: u32) -> PyResult<f64> {
    stark::ionization_threshold(nbar).map(|f| f.au()).map_err(err)
}

/// First-order Stark energy in Hartree.
#[pyfunction]
fn energy(n: u32, k: i32, field_au: f64) -> PyResult<f64> {
    Ok(stark::energy(stark::StarkLevel::new(n, k).map_err(err)?, field(field_au)?))
}

/// The four time scales (atomic units) at `nbar` and `field_au`.
#[pyclass(frozen, module = "starkpy")]
struct TimeScales {
    inner: stark::TimeScales,
}

#[pymethods]
impl TimeScales {
    #[new]
    fn new(nbar: u32, field_au: f64) -> PyResult<Self> {
        Ok(TimeScales { inner: stark::time_scales(nbar, field(field_au)?).map_err(err)? })
    }

    #[getter]
    fn nbar(&self) -> u32 {
        self.inner.nbar
    }

    #[getter]
    fn field_au(&self) -> f64 {
        self.inner.field.au()
    }

    #[getter]
    fn t_cl_n(&self) -> f64 {
        self.inner.t_cl_n.au()
    }

    #[getter]
    fn t_cl_k(&self) -> f64 {
        self.inner.t_cl_k.au()
    }

    #[getter]
    fn t_rev_n(&self) -> f64 {
        self.inner.t_rev_n.au()
    }

    #[getter]
    fn t_rev_nk(&self) -> f64 {
        self.inner.t_rev_nk.au()
    }

    fn classical_ratio(&self) -> f64 {
        self.inner.classical_ratio()
    }

    fn revival_ratio(&self) -> f64 {
        self.inner.revival_ratio()
    }

    /// `t_rev = s t_rev^(n)` for a rational revival ratio r/s.
    fn full_revival_time(&self) -> PyResult<f64> {
        revivals::full_revival_time(&self.inner).map(|t| t.au()).map_err(err)
    }

    fn __repr__(&self) -> String {
        let ts = &self.inner;
        format!(
            "TimeScales(nbar={}, T_cl_n={:.4} ps, T_cl_k={:.4} ps, t_rev_n={:.4} ps, t_rev_nk={:.4} ps)",
            ts.nbar,
            ts.t_cl_n.ps(),
            ts.t_cl_k.ps(),
            ts.t_rev_n.ps(),
            ts.t_rev_nk.ps()
        )
    }
}

/// Normalized superposition of Stark levels.
#[pyclass(frozen, module = "starkpy")]
struct WavePacket {
    inner: packet::WavePacket,
}

#[pymethods]
impl WavePacket {
    /// Flat-top over `n_list` (default nbar-1, nbar, nbar+1), Gaussian in k
    /// with probability width `k_sigma`, truncated as "half_manifold" or "full".
    #[new]
    #[pyo3(signature = (nbar, field_au, n_list=None, k_sigma=6.0, truncation="half_manifold"))]
    fn new(nbar: u32, field_au: f64, n_list: Option<Vec<u32>>, k_sigma: f64, truncation: &str) -> PyResult<Self> {
        let truncation = match truncation {
            "half_manifold" => Truncation::HalfManifold,
            "full" => Truncation::Full,
            other => return Err(PyValueError::new_err(format!("unknown truncation {other:?}"))),
        };
        let spec = PacketSpec {
            nbar,
            kbar: 0,
            n_list: n_list.unwrap_or_else(|| vec![nbar.saturating_sub(1), nbar, nbar + 1]),
            n_weighting: NWeighting::FlatTop,
            k_sigma,
            truncation,
            field: field(field_au)?,
        };
        Ok(WavePacket { inner: packet::build_packet(&spec).map_err(err)? })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// `[(n, k), ...]` in storage order.
    fn levels(&self) -> Vec<(u32, i32)> {
        self.inner.levels().iter().map(|l| (l.n(), l.k())).collect()
    }

    fn coeffs(&self) -> Vec<Complex64> {
        self.inner.coeffs().to_vec()
    }

    fn time_scales(&self) -> PyResult<TimeScales> {
        Ok(TimeScales { inner: stark::time_scales(self.inner.nbar(), self.inner.field()).map_err(err)? })
    }

    /// `A(t) = <Ψ(0)|Ψ(t)>` with phase model "exact" or "taylor2".
    #[pyo3(signature = (t_au, model="taylor2"))]
    fn autocorrelation(&self, t_au: f64, model: &str) -> PyResult<Complex64> {
        let m = PhaseModel::for_packet(phase_kind(model)?, &self.inner).map_err(err)?;
        dynamics::autocorrelation(&self.inner, &m, time(t_au)?).map_err(err)
    }

    /// Samples `A` on `t_start + i dt` up to `t_max` (au). `dt` defaults to T_cl^(n)/50.
    #[pyo3(signature = (t_max_au, dt_au=None, model="taylor2", t_start_au=0.0))]
    fn interferogram(
        &self,
        t_max_au: f64,
        dt_au: Option<f64>,
        model: &str,
        t_start_au: f64,
    ) -> PyResult<Interferogram> {
        let m = PhaseModel::for_packet(phase_kind(model)?, &self.inner).map_err(err)?;
        let dt = dt_au.unwrap_or(m.time_scales.t_cl_n.au() / 50.0);
        let ig = dynamics::interferogram_window(&self.inner, &m, time(t_start_au)?, time(t_max_au)?, time(dt)?)
            .map_err(err)?;
        Ok(Interferogram { inner: ig })
    }

    /// Decomposition at `(p1/q1) t_rev^(n)` as a JSON string.
    fn decompose(&self, p1: u64, q1: u64) -> PyResult<String> {
        let (_, rep) = revivals::decomposition_report(&self.inner, p1, q1).map_err(err)?;
        serde_json::to_string(&rep).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    /// Half-revival terms `(odd, even)` of the autocorrelation at `t_au`.
    fn half_revival_autocorrelation(&self, t_au: f64) -> PyResult<(Complex64, Complex64)> {
        let sp = revivals::split_odd_even(&self.inner).map_err(err)?;
        revivals::half_revival_autocorrelation(&sp, &sp.time_scales, time(t_au)?).map_err(err)
    }

    /// `[(n, k, |c|²), ...]`.
    fn histogram(&self) -> Vec<(u32, i32, f64)> {
        packet::coefficient_histogram(&self.inner).into_iter().map(|r| (r.n, r.k, r.weight)).collect()
    }
}

#[pyclass(frozen, module = "starkpy")]
struct Interferogram {
    inner: dynamics::Interferogram,
}

#[pymethods]
impl Interferogram {
    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn times_au(&self) -> Vec<f64> {
        self.inner.times.iter().map(|t| t.au()).collect()
    }

    #[getter]
    fn times_ps(&self) -> Vec<f64> {
        self.inner.times.iter().map(|t| t.ps()).collect()
    }

    #[getter]
    fn values(&self) -> Vec<Complex64> {
        self.inner.values.clone()
    }

    #[getter]
    fn abs2(&self) -> Vec<f64> {
        self.inner.abs2.clone()
    }

    /// `(peak_times_au, peak_heights)`.
    fn detect_peaks(&self, min_height: f64, min_separation_au: f64) -> PyResult<(Vec<f64>, Vec<f64>)> {
        let r = dynamics::detect_peaks(&self.inner, min_height, time(min_separation_au)?);
        Ok((r.peak_times.iter().map(|t| t.au()).collect(), r.peak_heights))
    }

    /// `[(peak_time_au, height, [node_times_au], mean_spacing_au or None), ...]`.
    #[allow(clippy::type_complexity)]
    fn node_analysis(&self, center_au: f64, halfwidth_au: f64) -> PyResult<Vec<(f64, f64, Vec<f64>, Option<f64>)>> {
        let r = dynamics::node_analysis(&self.inner, time(center_au)?, time(halfwidth_au)?).map_err(err)?;
        Ok((0..r.len())
            .map(|i| {
                (
                    r.peak_times[i].au(),
                    r.peak_heights[i],
                    r.node_times[i].iter().map(|t| t.au()).collect(),
                    r.node_spacings[i],
                )
            })
            .collect())
    }

    fn to_csv(&self) -> String {
        self.inner.to_csv_string()
    }
}

/// Samples the interferogram of a shipped figure configuration ("fig1".."fig4").
#[pyfunction]
fn figure_interferogram(name: &str) -> PyResult<Interferogram> {
    let cfg = verify::figure_config(name).and_then(|c| c.resolve()).map_err(err)?;
    let (_, ig) = report::run_interferogram(&cfg).map_err(err)?;
    Ok(Interferogram { inner: ig })
}

/// Runs the acceptance checks: `[(id, passed, detail), ...]`.
#[pyfunction]
fn run_checks() -> Vec<(String, bool, String)> {
    verify::run_checks(&units::UnitSystem::CODATA)
        .into_iter()
        .map(|c| (c.id.to_string(), c.passed, c.detail))
        .collect()
}

#[pymodule]
fn starkpy(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<TimeScales>()?;
    m.add_class::<WavePacket>()?;
    m.add_class::<Interferogram>()?;
    m.add_function(wrap_pyfunction!(field_from_volts_per_cm, m)?)?;
    m.add_function(wrap_pyfunction!(time_to_ps, m)?)?;
    m.add_function(wrap_pyfunction!(solve_field_for_classical_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(solve_field_for_revival_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(ionization_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(energy, m)?)?;
    m.add_function(wrap_pyfunction!(figure_interferogram, m)?)?;
    m.add_function(wrap_pyfunction!(run_checks, m)?)?;
    Ok(())
}
