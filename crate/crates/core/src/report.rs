//! Serializable reports and the files written for an interferogram run.

use serde::Serialize;
use std::path::{Path, PathBuf};

use crate::config::{OutputFormat, ResolvedConfig};
use crate::dynamics::{interferogram_window, Interferogram, PhaseModel};
use crate::error::{Error, Result};
use crate::packet::{build_packet, coefficient_histogram, WavePacket};
use crate::stark::{ionization_threshold, rationalize, Ratio, TimeScales, DEFAULT_MAX_DENOMINATOR};
use crate::units::TimeAu;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Duration {
    pub au: f64,
    pub ps: f64,
}

impl From<TimeAu> for Duration {
    fn from(t: TimeAu) -> Self {
        Duration { au: t.au(), ps: t.ps() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioReport {
    pub value: f64,
    pub best_rational: Ratio,
    pub rational_error: f64,
}

impl RatioReport {
    fn new(value: f64) -> Result<Self> {
        let best = rationalize(value, DEFAULT_MAX_DENOMINATOR)?;
        Ok(RatioReport { value, best_rational: best, rational_error: value - best.value() })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimescalesReport {
    pub nbar: u32,
    pub field_au: f64,
    pub field_v_per_cm: f64,
    pub field_source: String,
    pub t_cl_n: Duration,
    pub t_cl_k: Duration,
    pub t_rev_n: Duration,
    pub t_rev_nk: Duration,
    /// `T_cl^(n) / T_cl^(k)`.
    pub classical_ratio: RatioReport,
    /// `t_rev^(n) / t_rev^(nk)`.
    pub revival_ratio: RatioReport,
    pub threshold_au: f64,
    pub threshold_v_per_cm: f64,
}

pub fn timescales_report(cfg: &ResolvedConfig) -> Result<TimescalesReport> {
    let ts: &TimeScales = &cfg.time_scales;
    let fc = ionization_threshold(cfg.nbar)?;
    Ok(TimescalesReport {
        nbar: cfg.nbar,
        field_au: cfg.field.au(),
        field_v_per_cm: cfg.field.volts_per_cm(),
        field_source: cfg.field_source.clone(),
        t_cl_n: ts.t_cl_n.into(),
        t_cl_k: ts.t_cl_k.into(),
        t_rev_n: ts.t_rev_n.into(),
        t_rev_nk: ts.t_rev_nk.into(),
        classical_ratio: RatioReport::new(ts.classical_ratio())?,
        revival_ratio: RatioReport::new(ts.revival_ratio())?,
        threshold_au: fc.au(),
        threshold_v_per_cm: fc.volts_per_cm(),
    })
}

impl TimescalesReport {
    pub fn to_text(&self) -> String {
        let row = |name: &str, d: &Duration| format!("{name:<10} {:>14.6} ps  {:>16.6e} au\n", d.ps, d.au);
        let ratio = |name: &str, r: &RatioReport| {
            format!("{name:<10} {:>14.9}     ~ {} (error {:.2e})\n", r.value, r.best_rational, r.rational_error)
        };
        let mut s = format!(
            "nbar       {}\nfield      {:.4} V/cm  ({:.6e} au, from {})\nF_c        {:.4} V/cm  ({:.6e} au)\n",
            self.nbar, self.field_v_per_cm, self.field_au, self.field_source, self.threshold_v_per_cm, self.threshold_au
        );
        s += &row("T_cl^(n)", &self.t_cl_n);
        s += &row("T_cl^(k)", &self.t_cl_k);
        s += &row("t_rev^(n)", &self.t_rev_n);
        s += &row("t_rev^(nk)", &self.t_rev_nk);
        s += &ratio("a/b", &self.classical_ratio);
        s += &ratio("r/s", &self.revival_ratio);
        s
    }
}

/// Builds the packet and samples the interferogram described by `cfg`.
pub fn run_interferogram(cfg: &ResolvedConfig) -> Result<(WavePacket, Interferogram)> {
    let grid = cfg.require_grid()?;
    let wp = build_packet(&cfg.packet)?;
    let model = PhaseModel::for_packet(cfg.phase_model, &wp)?;
    let ig = interferogram_window(&wp, &model, grid.t_start, grid.t_max, grid.dt)?;
    Ok((wp, ig))
}

#[derive(Debug, Serialize)]
struct InterferogramJson<'a> {
    t_ps: Vec<f64>,
    re_a: Vec<f64>,
    im_a: Vec<f64>,
    abs2: &'a [f64],
}

pub fn interferogram_json(ig: &Interferogram) -> String {
    let data = InterferogramJson {
        t_ps: ig.times.iter().map(|t| t.ps()).collect(),
        re_a: ig.values.iter().map(|a| a.re).collect(),
        im_a: ig.values.iter().map(|a| a.im).collect(),
        abs2: &ig.abs2,
    };
    serde_json::to_string_pretty(&data).expect("plain data serializes") + "\n"
}

#[derive(Debug, Serialize)]
pub struct RunMetadata<'a> {
    pub program: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub data_file: String,
    pub rows: usize,
    /// Input configuration with every default applied, in atomic units.
    pub config: toml::Value,
    pub resolved: &'a ResolvedConfig,
}

/// Paths written by [`write_interferogram_outputs`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputFiles {
    pub data: PathBuf,
    pub resolved_config: PathBuf,
    pub metadata: PathBuf,
    pub plot_script: PathBuf,
}

impl OutputFiles {
    pub fn for_stem(stem: &Path, format: OutputFormat) -> Self {
        let with = |suffix: &str| {
            let mut s = stem.as_os_str().to_owned();
            s.push(suffix);
            PathBuf::from(s)
        };
        OutputFiles {
            data: with(match format {
                OutputFormat::Csv => ".csv",
                OutputFormat::Json => ".json",
            }),
            resolved_config: with(".resolved.toml"),
            metadata: with(".meta.json"),
            plot_script: with(".gp"),
        }
    }
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.display().to_string(), source })?;
    }
    std::fs::write(path, contents).map_err(|source| Error::Io { path: path.display().to_string(), source })
}

fn file_name(p: &Path) -> String {
    p.file_name().map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned())
}

pub fn gnuplot_script(cfg: &ResolvedConfig, files: &OutputFiles) -> String {
    let data = file_name(&files.data);
    let ts = &cfg.time_scales;
    let mut s = String::new();
    s += "# |A(t)|^2 versus time\n";
    s += &format!("# nbar = {}, F = {:.2} V/cm ({})\n", cfg.nbar, cfg.field.volts_per_cm(), cfg.field_source);
    s += &format!("# T_cl^(n) = {:.4} ps, T_cl^(k) = {:.4} ps\n", ts.t_cl_n.ps(), ts.t_cl_k.ps());
    s += "set xlabel 'time (ps)'\nset ylabel '|A(t)|^2'\nset yrange [0:1.05]\nset key off\n";
    if cfg.format == OutputFormat::Csv {
        s += "set datafile separator ','\n";
        s += &format!("plot '{data}' every ::1 using 1:4 with lines lw 1\n");
    } else {
        s += &format!("# {data} is JSON; convert to columns t_ps, abs2 before plotting\n");
    }
    s += "pause mouse close\n";
    s
}

/// Writes the data file, the resolved configuration, the metadata sidecar and
/// a gnuplot script next to `stem`.
pub fn write_interferogram_outputs(
    cfg: &ResolvedConfig,
    ig: &Interferogram,
    stem: &Path,
) -> Result<OutputFiles> {
    let files = OutputFiles::for_stem(stem, cfg.format);
    let data = match cfg.format {
        OutputFormat::Csv => ig.to_csv_string(),
        OutputFormat::Json => interferogram_json(ig),
    };
    write_file(&files.data, &data)?;
    let run_config = cfg.to_run_config();
    write_file(&files.resolved_config, &run_config.to_toml_string()?)?;
    let meta = RunMetadata {
        program: "stark",
        version: VERSION,
        command: "interferogram",
        data_file: file_name(&files.data),
        rows: ig.len(),
        config: toml::Value::try_from(&run_config)
            .map_err(|e| Error::Internal(format!("configuration to value: {e}")))?,
        resolved: cfg,
    };
    let json = serde_json::to_string_pretty(&meta).map_err(|e| Error::Internal(e.to_string()))?;
    write_file(&files.metadata, &(json + "\n"))?;
    write_file(&files.plot_script, &gnuplot_script(cfg, &files))?;
    Ok(files)
}

pub fn histogram_csv(wp: &WavePacket) -> String {
    let mut s = String::from("n,k,weight\n");
    for row in coefficient_histogram(wp) {
        s += &format!("{},{},{:.16e}\n", row.n, row.k, row.weight);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RunConfig;

    #[test]
    fn output_names_follow_the_stem() {
        let f = OutputFiles::for_stem(Path::new("out/fig1"), OutputFormat::Csv);
        assert_eq!(f.data, PathBuf::from("out/fig1.csv"));
        assert_eq!(f.resolved_config, PathBuf::from("out/fig1.resolved.toml"));
        assert_eq!(f.metadata, PathBuf::from("out/fig1.meta.json"));
        assert_eq!(f.plot_script, PathBuf::from("out/fig1.gp"));
    }

    #[test]
    fn timescales_text_lists_all_scales() {
        let c = RunConfig::from_toml_str("nbar = 24\nrevival_ratio = \"1/12\"").unwrap().resolve().unwrap();
        let r = timescales_report(&c).unwrap();
        assert_eq!(r.revival_ratio.best_rational.to_string(), "1/12");
        let text = r.to_text();
        for key in ["T_cl^(n)", "T_cl^(k)", "t_rev^(n)", "t_rev^(nk)", "a/b", "r/s", "F_c"] {
            assert!(text.contains(key), "{key}");
        }
    }
}
