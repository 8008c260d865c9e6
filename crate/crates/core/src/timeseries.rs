//! Sampled observables on a uniform grid, their CSV/JSON files and
//! channel-by-channel differences.
//!
//! Channel names: `population:n`, `coherence_re:n:m`, `coherence_im:n:m`,
//! `coherence_abs:n:m` and `norm_factor`.

use std::fmt;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::bessel::chain_bessel_amplitude;
use crate::classical::ClassicalTrajectory;
use crate::density::DensityMatrix;
use crate::ensemble::TrajectoryEnsemble;
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::lindblad::QuantumTrajectory;
use crate::rst::normalize_sigma;
use crate::units::UnitSystem;

/// Populations must lie in [−POPULATION_SLACK, 1 + POPULATION_SLACK].
pub const POPULATION_SLACK: f64 = 1e-9;
/// Relative tolerance when matching two time axes.
pub const GRID_TOL: f64 = 1e-9;

pub const NORM_FACTOR: &str = "norm_factor";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    Lindblad,
    ClassicalRst,
    QuantumRst,
    SseEnsemble,
    KuboEnsemble,
    Bessel,
}

impl Engine {
    pub const ALL: [Engine; 6] = [
        Engine::Lindblad,
        Engine::ClassicalRst,
        Engine::QuantumRst,
        Engine::SseEnsemble,
        Engine::KuboEnsemble,
        Engine::Bessel,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Engine::Lindblad => "lindblad",
            Engine::ClassicalRst => "classical-rst",
            Engine::QuantumRst => "quantum-rst",
            Engine::SseEnsemble => "sse-ensemble",
            Engine::KuboEnsemble => "kubo-ensemble",
            Engine::Bessel => "bessel",
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Engine::ALL
            .into_iter()
            .find(|e| e.tag() == s)
            .ok_or_else(|| Error::InvalidSeries(format!("unknown engine tag {s:?}")))
    }
}

pub fn population_channel(n: usize) -> String {
    format!("population:{n}")
}

pub fn coherence_channels(n: usize, m: usize) -> (String, String) {
    (format!("coherence_re:{n}:{m}"), format!("coherence_im:{n}:{m}"))
}

/// Index pairs (n, n+1).
pub fn adjacent_pairs(n_sites: usize) -> Vec<(usize, usize)> {
    (1..n_sites).map(|m| (m - 1, m)).collect()
}

/// All index pairs n < m.
pub fn all_pairs(n_sites: usize) -> Vec<(usize, usize)> {
    (0..n_sites).flat_map(|a| ((a + 1)..n_sites).map(move |b| (a, b))).collect()
}

/// Named channels sampled on a common time axis. The engine tag and units
/// are carried by JSON files; CSV files hold only the columns, so series
/// read from CSV have `engine` and `units` unset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub engine: Option<Engine>,
    pub units: Option<UnitSystem>,
    pub t: Vec<f64>,
    pub channels: IndexMap<String, Vec<f64>>,
}

impl TimeSeries {
    pub fn new(engine: Engine, units: UnitSystem, t: Vec<f64>) -> Self {
        Self {
            engine: Some(engine),
            units: Some(units),
            t,
            channels: IndexMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn channel(&self, name: &str) -> Option<&[f64]> {
        self.channels.get(name).map(Vec::as_slice)
    }

    pub fn insert(&mut self, name: impl Into<String>, values: Vec<f64>) -> Result<()> {
        let name = name.into();
        if values.len() != self.t.len() {
            return Err(Error::InvalidSeries(format!(
                "channel {name} has {} samples, grid has {}",
                values.len(),
                self.t.len()
            )));
        }
        if name == "t" || name.contains(',') {
            return Err(Error::InvalidSeries(format!("bad channel name {name:?}")));
        }
        self.channels.insert(name, values);
        Ok(())
    }

    /// Channels of `population:n` and the selected coherences from a
    /// sequence of density matrices.
    pub fn from_densities(
        engine: Engine,
        units: UnitSystem,
        t: Vec<f64>,
        states: &[DensityMatrix],
        pairs: &[(usize, usize)],
    ) -> Result<Self> {
        let mut out = Self::new(engine, units, t);
        let n = states.first().map_or(0, DensityMatrix::dim);
        for site in 0..n {
            out.insert(population_channel(site), states.iter().map(|s| s.get(site, site).re).collect())?;
        }
        for &(a, b) in pairs {
            if a >= n || b >= n {
                return Err(Error::IndexOutOfRange { index: a.max(b), len: n });
            }
            let (re, im) = coherence_channels(a, b);
            out.insert(re, states.iter().map(|s| s.get(a, b).re).collect())?;
            out.insert(im, states.iter().map(|s| s.get(a, b).im).collect())?;
        }
        out.validate()?;
        Ok(out)
    }

    pub fn from_quantum(traj: &QuantumTrajectory, units: UnitSystem, pairs: &[(usize, usize)]) -> Result<Self> {
        Self::from_densities(Engine::Lindblad, units, traj.grid.times(), &traj.states, pairs)
    }

    pub fn from_quantum_rst(
        grid: &TimeGrid,
        states: &[DensityMatrix],
        units: UnitSystem,
        pairs: &[(usize, usize)],
    ) -> Result<Self> {
        Self::from_densities(Engine::QuantumRst, units, grid.times(), states, pairs)
    }

    /// Normalized σ/𝒩 channels plus `norm_factor`.
    pub fn from_classical(traj: &ClassicalTrajectory, units: UnitSystem, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut out =
            Self::from_densities(Engine::ClassicalRst, units, traj.grid.times(), &traj.sigma_normalized, pairs)?;
        out.insert(NORM_FACTOR, traj.norm_factor.clone())?;
        Ok(out)
    }

    /// Ensemble means. The classical ensemble is normalized by the trace of
    /// its mean, which is recorded as `norm_factor`.
    pub fn from_ensemble(
        ens: &TrajectoryEnsemble,
        engine: Engine,
        units: UnitSystem,
        pairs: &[(usize, usize)],
    ) -> Result<Self> {
        let means: Vec<DensityMatrix> = (0..ens.grid.n_samples).map(|k| ens.mean(k)).collect();
        if engine != Engine::KuboEnsemble {
            return Self::from_densities(engine, units, ens.grid.times(), &means, pairs);
        }
        let mut states = Vec::with_capacity(means.len());
        let mut norms = Vec::with_capacity(means.len());
        for m in &means {
            let (s, norm) = normalize_sigma(m)?;
            states.push(s);
            norms.push(norm);
        }
        let mut out = Self::from_densities(engine, units, ens.grid.times(), &states, pairs)?;
        out.insert(NORM_FACTOR, norms)?;
        Ok(out)
    }

    /// Infinite-chain reference ρ_nm = c_n c_m* with c_n = (−i)^|n−s| J_{n−s}(2Vt),
    /// evaluated on a finite chain of `n_sites` (valid until the wave packet
    /// reaches the ends).
    pub fn bessel(
        n_sites: usize,
        v: f64,
        start: usize,
        grid: &TimeGrid,
        units: UnitSystem,
        pairs: &[(usize, usize)],
    ) -> Result<Self> {
        if start >= n_sites {
            return Err(Error::IndexOutOfRange { index: start, len: n_sites });
        }
        let states: Vec<DensityMatrix> = grid
            .times()
            .into_iter()
            .map(|t| {
                let c: Vec<_> = (0..n_sites)
                    .map(|n| chain_bessel_amplitude(v, n as i64 - start as i64, t))
                    .collect();
                let data = crate::density::CMatrix::from_fn(n_sites, n_sites, |a, b| c[a] * c[b].conj());
                DensityMatrix::from_matrix(data).expect("square")
            })
            .collect();
        Self::from_densities(Engine::Bessel, units, grid.times(), &states, pairs)
    }

    /// Channel lengths, finiteness, and population range.
    pub fn validate(&self) -> Result<()> {
        if self.t.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidSeries("non-finite time".into()));
        }
        for (name, values) in &self.channels {
            if values.len() != self.t.len() {
                return Err(Error::InvalidSeries(format!("channel {name} has wrong length")));
            }
            if let Some(v) = values.iter().find(|v| !v.is_finite()) {
                return Err(Error::InvalidSeries(format!("channel {name} holds {v}")));
            }
            if name.starts_with("population:") {
                if let Some(p) = values
                    .iter()
                    .find(|p| !(-POPULATION_SLACK..=1.0 + POPULATION_SLACK).contains(*p))
                {
                    return Err(Error::InvalidSeries(format!("{name} = {p} outside [0, 1]")));
                }
            }
        }
        Ok(())
    }

    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| Error::Io(e.into());
        w.write_record(std::iter::once("t").chain(self.channels.keys().map(String::as_str)))
            .map_err(csv_err)?;
        for (k, t) in self.t.iter().enumerate() {
            let row = std::iter::once(format!("{t:.16e}")).chain(self.channels.values().map(|v| format!("{:.16e}", v[k])));
            w.write_record(row).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(input: impl Read) -> Result<Self> {
        let parse_err = |line: u64, message: String| Error::Parse {
            context: format!("csv line {line}"),
            message,
        };
        let located = |e: csv::Error| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        };
        let mut reader = csv::Reader::from_reader(input);
        let header = reader.headers().map_err(located)?.clone();
        if header.get(0) != Some("t") {
            return Err(parse_err(1, "first column must be t".into()));
        }
        let names: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();
        let mut t = Vec::new();
        let mut cols = vec![Vec::new(); names.len()];
        for record in reader.records() {
            let record = record.map_err(located)?;
            let line = record.position().map_or(0, |p| p.line());
            let mut values = record
                .iter()
                .map(|f| f.trim().parse::<f64>().map_err(|e| parse_err(line, format!("{f:?}: {e}"))));
            t.push(values.next().ok_or_else(|| parse_err(line, "empty row".into()))??);
            for (col, v) in cols.iter_mut().zip(values) {
                col.push(v?);
            }
        }
        let mut channels = IndexMap::new();
        for (name, col) in names.into_iter().zip(cols) {
            if channels.insert(name.clone(), col).is_some() {
                return Err(parse_err(1, format!("duplicate channel {name}")));
            }
        }
        let out = Self {
            engine: None,
            units: None,
            t,
            channels,
        };
        out.validate()?;
        Ok(out)
    }

    pub fn write_json(&self, out: impl Write) -> Result<()> {
        let mut w = BufWriter::new(out);
        serde_json::to_writer(&mut w, self).map_err(|e| Error::Io(e.into()))?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }

    pub fn read_json(input: impl Read) -> Result<Self> {
        let out: Self = serde_json::from_reader(BufReader::new(input)).map_err(|e| Error::Parse {
            context: format!("json line {} column {}", e.line(), e.column()),
            message: e.to_string(),
        })?;
        out.validate()?;
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }

    /// Guesses the format from a file extension.
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()? {
            "csv" => Some(Format::Csv),
            "json" => Some(Format::Json),
            _ => None,
        }
    }
}

pub fn write_timeseries(series: &TimeSeries, format: Format, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    match format {
        Format::Csv => series.write_csv(file),
        Format::Json => series.write_json(file),
    }
}

pub fn read_timeseries(path: impl AsRef<Path>) -> Result<TimeSeries> {
    let path = path.as_ref();
    let format = Format::from_path(path).ok_or_else(|| Error::Parse {
        context: path.display().to_string(),
        message: "expected a .csv or .json file".into(),
    })?;
    let file = std::fs::File::open(path)?;
    match format {
        Format::Csv => TimeSeries::read_csv(file),
        Format::Json => TimeSeries::read_json(file),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelDiff {
    pub max_abs: f64,
    pub t_at_max: f64,
    /// sqrt(Σ_k |a_k − b_k|² Δt)
    pub l2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffReport {
    pub channels: IndexMap<String, ChannelDiff>,
    pub overall_max: f64,
}

impl DiffReport {
    /// Largest `max_abs` over channels whose name starts with `prefix`.
    pub fn max_for(&self, prefix: &str) -> f64 {
        self.channels
            .iter()
            .filter(|(name, _)| name.starts_with(prefix))
            .map(|(_, d)| d.max_abs)
            .fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Adds `coherence_abs:n:m` wherever both real and imaginary parts exist
/// and the absolute value is not stored already.
fn with_abs_channels(series: &TimeSeries) -> IndexMap<String, Vec<f64>> {
    let mut out: IndexMap<String, Vec<f64>> = series
        .channels
        .iter()
        .filter(|(name, _)| name.as_str() != NORM_FACTOR)
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();
    for (name, re) in &series.channels {
        let Some(pair) = name.strip_prefix("coherence_re:") else {
            continue;
        };
        let abs_name = format!("coherence_abs:{pair}");
        if let (Some(im), false) = (series.channels.get(&format!("coherence_im:{pair}")), out.contains_key(&abs_name)) {
            out.insert(abs_name, re.iter().zip(im).map(|(x, y)| x.hypot(*y)).collect());
        }
    }
    out
}

/// Per-channel differences |a − b|. `norm_factor` is not compared: it is
/// specific to the classical engines.
pub fn compare_series(a: &TimeSeries, b: &TimeSeries) -> Result<DiffReport> {
    if a.t.len() != b.t.len() {
        return Err(Error::GridMismatch(format!("{} vs {} samples", a.t.len(), b.t.len())));
    }
    if let Some((ta, tb)) = a
        .t
        .iter()
        .zip(&b.t)
        .find(|(x, y)| (*x - *y).abs() > GRID_TOL * x.abs().max(y.abs()).max(1.0))
    {
        return Err(Error::GridMismatch(format!("time {ta} vs {tb}")));
    }
    let ca = with_abs_channels(a);
    let cb = with_abs_channels(b);
    if let Some(name) = ca.keys().find(|k| !cb.contains_key(*k)).or_else(|| cb.keys().find(|k| !ca.contains_key(*k))) {
        return Err(Error::ChannelMismatch(format!("channel {name} is not in both series")));
    }
    let dt = if a.t.len() > 1 {
        (a.t[a.t.len() - 1] - a.t[0]) / (a.t.len() - 1) as f64
    } else {
        0.0
    };
    let mut channels = IndexMap::new();
    let mut overall_max = 0.0f64;
    for (name, va) in &ca {
        let vb = &cb[name];
        let mut max_abs = 0.0;
        let mut t_at_max = a.t.first().copied().unwrap_or(0.0);
        let mut sq = 0.0;
        for (k, (x, y)) in va.iter().zip(vb).enumerate() {
            let d = (x - y).abs();
            sq += d * d;
            if d > max_abs {
                max_abs = d;
                t_at_max = a.t[k];
            }
        }
        overall_max = overall_max.max(max_abs);
        channels.insert(
            name.clone(),
            ChannelDiff {
                max_abs,
                t_at_max,
                l2: (sq * dt).sqrt(),
            },
        );
    }
    Ok(DiffReport { channels, overall_max })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lindblad::propagate_lindblad;
    use crate::scenario::make_chain;

    fn sample() -> TimeSeries {
        let mut s = TimeSeries::new(Engine::Lindblad, UnitSystem::DimensionlessV, vec![0.0, 0.5, 1.0]);
        s.insert("population:0", vec![1.0, 0.7, 1.0 / 3.0]).unwrap();
        s.insert("coherence_re:0:1", vec![0.0, 0.1, -0.2]).unwrap();
        s.insert("coherence_im:0:1", vec![0.0, 0.3, std::f64::consts::PI / 10.0]).unwrap();
        s
    }

    #[test]
    fn empty_channels_give_header_only_csv() {
        let s = TimeSeries::new(Engine::Bessel, UnitSystem::DimensionlessV, vec![]);
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "t\n");
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let s = sample();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,population:0,coherence_re:0:1,coherence_im:0:1\n"));
        let back = TimeSeries::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.t, s.t);
        assert_eq!(back.channels, s.channels);
        assert_eq!(back.engine, None);
    }

    #[test]
    fn json_round_trip_is_exact() {
        let s = sample();
        let mut buf = Vec::new();
        s.write_json(&mut buf).unwrap();
        let value: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(value["engine"], "lindblad");
        assert_eq!(value["units"], "V");
        assert_eq!(TimeSeries::read_json(buf.as_slice()).unwrap(), s);
    }

    #[test]
    fn dimer_file_populations_sum_to_one() {
        let (model, init) = make_chain(2, 1.0, 3.0, 0.5, 0).unwrap();
        let grid = TimeGrid::for_model(&model, 0.0, 4.0, 41).unwrap();
        let traj = propagate_lindblad(&model, &init.density(2).unwrap(), &grid).unwrap();
        let s = TimeSeries::from_quantum(&traj, model.units(), &[(0, 1)]).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let back = TimeSeries::read_csv(buf.as_slice()).unwrap();
        for k in 0..back.len() {
            let total = back.channel("population:0").unwrap()[k] + back.channel("population:1").unwrap()[k];
            assert!((total - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn rejects_malformed_series() {
        let mut s = sample();
        assert!(s.insert("population:1", vec![0.0]).is_err());
        s.channels.insert("population:1".into(), vec![0.0, 1.5, 0.0]);
        assert!(matches!(s.validate(), Err(Error::InvalidSeries(_))));
        assert!(TimeSeries::read_csv("x,a\n1,2\n".as_bytes()).is_err());
        assert!(TimeSeries::read_csv("t,a\n1,2,3\n".as_bytes()).is_err());
    }

    #[test]
    fn self_comparison_is_zero() {
        let s = sample();
        let report = compare_series(&s, &s).unwrap();
        assert_eq!(report.overall_max, 0.0);
        assert!(report.channels.contains_key("coherence_abs:0:1"));
        assert!(report.channels.values().all(|d| d.l2 == 0.0));
    }

    #[test]
    fn comparison_is_symmetric_and_locates_max() {
        let a = sample();
        let mut b = sample();
        b.channels["population:0"][1] = 0.4;
        b.insert(NORM_FACTOR, vec![1.0, 2.0, 3.0]).unwrap();
        let ab = compare_series(&a, &b).unwrap();
        let ba = compare_series(&b, &a).unwrap();
        assert_eq!(ab, ba);
        let d = &ab.channels["population:0"];
        assert!((d.max_abs - 0.3).abs() < 1e-15);
        assert_eq!(d.t_at_max, 0.5);
        assert!((d.l2 - 0.3 * 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(ab.overall_max, ab.max_for(""));
        assert!(!ab.channels.contains_key(NORM_FACTOR));
    }

    #[test]
    fn comparison_errors() {
        let a = sample();
        let mut b = sample();
        b.t[2] = 1.1;
        assert!(matches!(compare_series(&a, &b), Err(Error::GridMismatch(_))));
        let mut c = sample();
        c.channels.shift_remove("coherence_im:0:1");
        assert!(matches!(compare_series(&a, &c), Err(Error::ChannelMismatch(_))));
    }

    #[test]
    fn bessel_series_matches_populations() {
        let grid = TimeGrid::new(0.0, 2.0, 5, 0.01).unwrap();
        let s = TimeSeries::bessel(9, 1.0, 4, &grid, UnitSystem::DimensionlessV, &[(3, 4)]).unwrap();
        let p = s.channel("population:5").unwrap();
        for (k, t) in grid.times().into_iter().enumerate() {
            assert!((p[k] - crate::bessel::chain_bessel_populations(1.0, 1, t)).abs() < 1e-15);
        }
    }

    #[test]
    fn engine_tags_parse() {
        for e in Engine::ALL {
            assert_eq!(e.tag().parse::<Engine>().unwrap(), e);
            assert_eq!(serde_json::to_value(e).unwrap(), e.tag());
        }
    }
}
