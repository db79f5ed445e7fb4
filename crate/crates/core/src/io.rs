//! CSV ingestion, preprocessing, configuration files and report emission.

use std::fmt;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::changepoint::{ChangePoint, ChangePointSet, MarginRule, TraceEntry};
use crate::dgp::{make_alternative_with_ref, AltId, MeanFn, NoiseSpec, ScenarioSpec, VarianceFn, DEFAULT_N_REF};
use crate::error::{Error, Result};
use crate::lrv::LrvEstimate;
use crate::montecarlo::{ExperimentReport, ExperimentSpec};
use crate::series::{difference, seasonal_difference, TimeSeries};
use crate::variance_test::{BlockStats, TestConfig, TestResult};

/// Bumped on any breaking change to the JSON report layout.
pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnSelector {
    /// 0-based column position.
    Index(usize),
    /// Header name; requires a header row.
    Name(String),
}

impl Default for ColumnSelector {
    fn default() -> Self {
        ColumnSelector::Index(0)
    }
}

impl FromStr for ColumnSelector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.parse::<usize>() {
            Ok(i) => ColumnSelector::Index(i),
            Err(_) => ColumnSelector::Name(s.to_string()),
        })
    }
}

pub fn ingest_csv(path: impl AsRef<Path>, column: &ColumnSelector) -> Result<TimeSeries> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv(file, column).map(|ts| ts.with_source(path.display().to_string()))
}

/// Reads one numeric column; a first row whose selected cell is not a
/// number is treated as a header.
pub fn read_csv(reader: impl Read, column: &ColumnSelector) -> Result<TimeSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut index = match column {
        ColumnSelector::Index(i) => Some(*i),
        ColumnSelector::Name(_) => None,
    };
    let mut values = Vec::new();
    for (k, record) in rdr.records().enumerate() {
        let record = record?;
        let row = record.position().map_or(k + 1, |p| p.line() as usize);
        if k == 0 {
            if let ColumnSelector::Name(name) = column {
                let pos = record.iter().position(|h| h == name).ok_or_else(|| Error::Parse {
                    row,
                    message: format!("no column named {name:?} in header"),
                })?;
                index = Some(pos);
                continue;
            }
        }
        let idx = index.expect("column index resolved");
        let cell = record.get(idx).ok_or_else(|| Error::Parse {
            row,
            message: format!("missing column {idx}"),
        })?;
        match cell.parse::<f64>() {
            Ok(v) if v.is_finite() => values.push(v),
            Ok(v) => {
                return Err(Error::Parse {
                    row,
                    message: format!("non-finite value {v}"),
                })
            }
            Err(_) if k == 0 => continue,
            Err(_) => {
                return Err(Error::Parse {
                    row,
                    message: format!("non-numeric cell {cell:?}"),
                })
            }
        }
    }
    if values.is_empty() {
        return Err(Error::Parse {
            row: 0,
            message: "selected column is empty".into(),
        });
    }
    TimeSeries::new(values)
}

/// A preprocessing step, written `diff`, `sdiff:LAG` or `drop:I,J,...`
/// (0-based positions).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Preprocess {
    Diff,
    SeasonalDiff(usize),
    DropIndices(Vec<usize>),
}

impl fmt::Display for Preprocess {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Preprocess::Diff => f.write_str("diff"),
            Preprocess::SeasonalDiff(lag) => write!(f, "sdiff:{lag}"),
            Preprocess::DropIndices(idx) => {
                let list: Vec<String> = idx.iter().map(usize::to_string).collect();
                write!(f, "drop:{}", list.join(","))
            }
        }
    }
}

impl FromStr for Preprocess {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("unknown preprocessing step {s:?}"));
        let s = s.trim();
        if s == "diff" {
            return Ok(Preprocess::Diff);
        }
        let (head, tail) = s.split_once(':').ok_or_else(bad)?;
        match head {
            "sdiff" => tail
                .trim()
                .parse()
                .map(Preprocess::SeasonalDiff)
                .map_err(|_| bad()),
            "drop" => tail
                .split(',')
                .filter(|t| !t.trim().is_empty())
                .map(|t| t.trim().parse::<usize>().map_err(|_| bad()))
                .collect::<Result<Vec<_>>>()
                .map(Preprocess::DropIndices),
            _ => Err(bad()),
        }
    }
}

impl From<Preprocess> for String {
    fn from(p: Preprocess) -> Self {
        p.to_string()
    }
}

impl TryFrom<String> for Preprocess {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

pub fn preprocess(x: &TimeSeries, steps: &[Preprocess]) -> Result<TimeSeries> {
    let mut out = x.clone();
    for step in steps {
        out = match step {
            Preprocess::Diff => difference(&out)?,
            Preprocess::SeasonalDiff(lag) => seasonal_difference(&out, *lag)?,
            Preprocess::DropIndices(idx) => out.drop_indices(idx)?,
        };
    }
    Ok(out)
}

/// Scenario file: a [`ScenarioSpec`] whose variance may instead be given as
/// an alternative id (`alternative = "A1"`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub noise: NoiseSpec,
    #[serde(default)]
    pub mean: MeanFn,
    #[serde(default)]
    pub variance: Option<VarianceFn>,
    #[serde(default)]
    pub alternative: Option<AltId>,
    #[serde(default)]
    pub n_ref: Option<f64>,
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn into_spec(self) -> Result<ScenarioSpec> {
        let variance = match (self.variance, self.alternative) {
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "give either `variance` or `alternative`, not both".into(),
                ))
            }
            (Some(v), None) => v,
            (None, Some(id)) => {
                make_alternative_with_ref(id, self.n, self.n_ref.unwrap_or(DEFAULT_N_REF))?
            }
            (None, None) => VarianceFn::constant(1.0)?,
        };
        let spec = ScenarioSpec {
            noise: self.noise,
            mean: self.mean,
            variance,
            n: self.n,
            seed: self.seed,
        };
        spec.validate()?;
        Ok(spec)
    }
}

pub fn load_toml<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<ScenarioSpec> {
    load_toml::<ScenarioConfig>(path)?.into_spec()
}

/// Experiment file: one or more cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentFile {
    #[serde(rename = "experiment")]
    pub experiments: Vec<ExperimentSpec>,
}

pub fn load_experiments(path: impl AsRef<Path>) -> Result<Vec<ExperimentSpec>> {
    let file: ExperimentFile = load_toml(path)?;
    for e in &file.experiments {
        e.validate()?;
    }
    Ok(file.experiments)
}

/// Configuration echoed into every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEcho {
    pub input: Option<String>,
    pub column: Option<String>,
    pub preprocessing: Vec<Preprocess>,
    pub s: f64,
    pub q: f64,
    pub alpha: f64,
    #[serde(default)]
    pub margin: Option<MarginRule>,
}

impl RunEcho {
    pub fn new(config: &TestConfig) -> Self {
        Self {
            input: None,
            column: None,
            preprocessing: Vec::new(),
            s: config.s,
            q: config.q,
            alpha: config.alpha,
            margin: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub schema_version: u32,
    pub version: String,
    pub command: String,
    pub config: RunEcho,
    pub n: usize,
    pub ell: usize,
    pub b: usize,
    pub remainder: usize,
    pub lrv_ell: usize,
    pub lrv_b: usize,
    pub u_stat: f64,
    pub kappa_hat: f64,
    pub sigma_h_sq_hat: f64,
    pub t_stat: f64,
    pub z_stat: f64,
    pub p_value: f64,
    pub reject: bool,
    pub alpha: f64,
    pub local_vars: Vec<f64>,
    pub log_local_vars: Vec<f64>,
}

impl TestReport {
    pub fn new(result: &TestResult, config: RunEcho) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            version: TOOL_VERSION.to_string(),
            command: "test".into(),
            config,
            n: result.partition.n,
            ell: result.partition.block_len,
            b: result.partition.block_count,
            remainder: result.partition.remainder,
            lrv_ell: result.lrv_partition.block_len,
            lrv_b: result.lrv_partition.block_count,
            u_stat: result.u_stat,
            kappa_hat: result.kappa_hat,
            sigma_h_sq_hat: result.sigma_h_sq_hat,
            t_stat: result.t_stat,
            z_stat: result.z_stat(),
            p_value: result.p_value,
            reject: result.reject,
            alpha: result.alpha,
            local_vars: result.block_stats.local_vars.clone(),
            log_local_vars: result.block_stats.log_local_vars.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocateReport {
    pub schema_version: u32,
    pub version: String,
    pub command: String,
    pub config: RunEcho,
    pub n: usize,
    pub points: Vec<ChangePoint>,
    pub trace: Vec<TraceEntry>,
}

impl LocateReport {
    pub fn new(set: &ChangePointSet, config: RunEcho) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            version: TOOL_VERSION.to_string(),
            command: "locate".into(),
            config,
            n: set.n,
            points: set.points.clone(),
            trace: set.trace.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrvReport {
    pub schema_version: u32,
    pub version: String,
    pub command: String,
    pub config: RunEcho,
    pub n: usize,
    pub kappa_hat: f64,
    pub sigma_h_sq_hat: f64,
    pub lrv_ell: usize,
    pub lrv_b: usize,
}

impl LrvReport {
    pub fn new(n: usize, est: &LrvEstimate, config: RunEcho) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            version: TOOL_VERSION.to_string(),
            command: "lrv".into(),
            config,
            n,
            kappa_hat: est.kappa_hat,
            sigma_h_sq_hat: est.sigma_h_sq_hat,
            lrv_ell: est.sub_partition.block_len,
            lrv_b: est.sub_partition.block_count,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub schema_version: u32,
    pub version: String,
    pub command: String,
    pub threads: Option<usize>,
    pub experiments: Vec<ExperimentSpec>,
    pub reports: Vec<ExperimentReport>,
}

impl McReport {
    pub fn new(
        experiments: Vec<ExperimentSpec>,
        reports: Vec<ExperimentReport>,
        threads: Option<usize>,
    ) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            version: TOOL_VERSION.to_string(),
            command: "mc".into(),
            threads,
            experiments,
            reports,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(Error::InvalidParameter(format!("unknown format {other:?}"))),
        }
    }
}

/// Anything that can be written as a report document.
pub trait Report: Serialize {
    /// Flat CSV rendering: one row per change point, block or experiment cell.
    fn to_csv(&self) -> Result<String>;
}

pub fn emit_report<R: Report>(report: &R, format: Format) -> Result<String> {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(report)?;
            s.push('\n');
            Ok(s)
        }
        Format::Csv => report.to_csv(),
    }
}

fn csv_string(write: impl FnOnce(&mut csv::Writer<Vec<u8>>) -> Result<()>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    write(&mut w)?;
    let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn num(v: f64) -> String {
    // shortest representation that round-trips
    format!("{v:?}")
}

impl Report for TestReport {
    fn to_csv(&self) -> Result<String> {
        csv_string(|w| {
            w.write_record([
                "n", "ell", "b", "lrv_ell", "lrv_b", "u_stat", "kappa_hat", "t_stat", "p_value",
                "reject", "alpha",
            ])?;
            w.write_record([
                self.n.to_string(),
                self.ell.to_string(),
                self.b.to_string(),
                self.lrv_ell.to_string(),
                self.lrv_b.to_string(),
                num(self.u_stat),
                num(self.kappa_hat),
                num(self.t_stat),
                num(self.p_value),
                self.reject.to_string(),
                num(self.alpha),
            ])?;
            Ok(())
        })
    }
}

impl Report for LocateReport {
    fn to_csv(&self) -> Result<String> {
        csv_string(|w| {
            w.write_record(["index", "block_pair", "left_var", "right_var", "depth"])?;
            for p in &self.points {
                w.write_record([
                    p.index.to_string(),
                    p.block_pair.to_string(),
                    num(p.left_var),
                    num(p.right_var),
                    p.depth.to_string(),
                ])?;
            }
            Ok(())
        })
    }
}

impl Report for LrvReport {
    fn to_csv(&self) -> Result<String> {
        csv_string(|w| {
            w.write_record(["n", "kappa_hat", "sigma_h_sq_hat", "lrv_ell", "lrv_b"])?;
            w.write_record([
                self.n.to_string(),
                num(self.kappa_hat),
                num(self.sigma_h_sq_hat),
                self.lrv_ell.to_string(),
                self.lrv_b.to_string(),
            ])?;
            Ok(())
        })
    }
}

impl Report for McReport {
    fn to_csv(&self) -> Result<String> {
        let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
        csv_string(|w| {
            w.write_record([
                "mode", "dgp", "n", "alternative", "mean", "differenced", "replications", "alpha",
                "rejection_rate", "mc_stderr", "critical_value", "nominal_rejection_rate", "bias",
                "rmse", "wall_time_secs",
            ])?;
            for r in &self.reports {
                w.write_record([
                    serde_json::to_value(r.mode)?.as_str().unwrap_or_default().to_string(),
                    r.dgp.clone(),
                    r.n.to_string(),
                    r.alternative.map(|a| a.to_string()).unwrap_or_else(|| "H".into()),
                    serde_json::to_value(&r.mean)?["kind"].as_str().unwrap_or_default().to_string(),
                    r.differenced.to_string(),
                    r.replications.to_string(),
                    num(r.alpha),
                    num(r.rejection_rate),
                    num(r.mc_stderr),
                    opt(r.critical_value),
                    opt(r.nominal_rejection_rate),
                    opt(r.bias),
                    opt(r.rmse),
                    num(r.wall_time_secs),
                ])?;
            }
            Ok(())
        })
    }
}

/// Plot companion: `(block, nu)` rows, blocks 1-based.
pub fn blocks_csv(stats: &BlockStats) -> Result<String> {
    csv_string(|w| {
        w.write_record(["block", "local_var", "nu"])?;
        for (j, (v, nu)) in stats.local_vars.iter().zip(&stats.log_local_vars).enumerate() {
            w.write_record([(j + 1).to_string(), num(*v), num(*nu)])?;
        }
        Ok(())
    })
}

/// Plot companion and `simulate` output: `(t, value)` rows, `t` 1-based.
pub fn series_csv(x: &TimeSeries) -> Result<String> {
    csv_string(|w| {
        w.write_record(["t", "value"])?;
        for (i, v) in x.values().iter().enumerate() {
            w.write_record([(i + 1).to_string(), num(*v)])?;
        }
        Ok(())
    })
}

pub fn write_file(path: impl AsRef<Path>, contents: &str) -> Result<()> {
    let path = path.as_ref();
    let mut f = fs::File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    f.write_all(contents.as_bytes()).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dgp::generate_noise;
    use crate::variance_test::run_test;

    fn parse(text: &str) -> Result<TimeSeries> {
        read_csv(text.as_bytes(), &ColumnSelector::default())
    }

    #[test]
    fn headerless_single_column() {
        assert_eq!(parse("1\n2\n3\n").unwrap().values(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn header_is_skipped() {
        assert_eq!(parse("value\n1.5\n-2\n").unwrap().values(), &[1.5, -2.0]);
        let by_name = read_csv(
            "week,value\n1,10\n2,12\n".as_bytes(),
            &ColumnSelector::Name("value".into()),
        )
        .unwrap();
        assert_eq!(by_name.values(), &[10.0, 12.0]);
        let by_index = read_csv("a,b\n1,10\n2,12\n".as_bytes(), &ColumnSelector::Index(1)).unwrap();
        assert_eq!(by_index.values(), &[10.0, 12.0]);
    }

    #[test]
    fn nan_cell_names_row() {
        let err = parse("1\n2\nNaN\n").unwrap_err();
        assert!(matches!(err, Error::Parse { row: 3, .. }), "{err}");
        let err = parse("value\n1\nabc\n").unwrap_err();
        assert!(matches!(err, Error::Parse { row: 3, .. }), "{err}");
        assert!(parse("value\n").is_err());
        assert!(read_csv("a\n1\n".as_bytes(), &ColumnSelector::Name("b".into())).is_err());
    }

    #[test]
    fn preprocess_parsing() {
        assert_eq!("diff".parse::<Preprocess>().unwrap(), Preprocess::Diff);
        assert_eq!("sdiff:52".parse::<Preprocess>().unwrap(), Preprocess::SeasonalDiff(52));
        assert_eq!(
            "drop:1, 5,9".parse::<Preprocess>().unwrap(),
            Preprocess::DropIndices(vec![1, 5, 9])
        );
        assert!("sdiff:x".parse::<Preprocess>().is_err());
        assert!("smooth".parse::<Preprocess>().is_err());
        let p = Preprocess::DropIndices(vec![3, 4]);
        assert_eq!(p.to_string().parse::<Preprocess>().unwrap(), p);
    }

    #[test]
    fn preprocess_chain() {
        let x = TimeSeries::new((0..10).map(|i| (i * i) as f64).collect()).unwrap();
        let out = preprocess(&x, &[Preprocess::DropIndices(vec![0]), Preprocess::Diff]).unwrap();
        assert_eq!(out.values()[0], 3.0);
        assert_eq!(out.len(), 8);
    }

    #[test]
    fn test_report_json_schema_and_round_trip() {
        let x = generate_noise(&NoiseSpec::IidNormal, 2000, 1).unwrap();
        let r = run_test(&x, 0.7, 0.5, 0.05).unwrap();
        let report = TestReport::new(&r, RunEcho::new(&TestConfig::default()));
        let json = emit_report(&report, Format::Json).unwrap();
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        for key in ["u_stat", "kappa_hat", "t_stat", "p_value", "reject", "ell", "b", "schema_version", "version", "config"] {
            assert!(value.get(key).is_some(), "missing {key}");
        }
        let back: TestReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, report);
    }

    #[test]
    fn locate_csv_has_one_row_per_point() {
        let point = |index| ChangePoint {
            index,
            block_pair: 1,
            left_var: 1.0,
            right_var: 2.0,
            depth: 0,
        };
        let set = ChangePointSet {
            n: 1000,
            points: vec![point(100), point(300), point(600), point(900)],
            trace: vec![],
        };
        let csv = emit_report(&LocateReport::new(&set, RunEcho::new(&TestConfig::default())), Format::Csv).unwrap();
        assert_eq!(csv.lines().count(), 5);
    }

    #[test]
    fn companions() {
        let x = TimeSeries::new(vec![1.0, 2.0, 0.1]).unwrap();
        let csv = series_csv(&x).unwrap();
        assert_eq!(csv, "t,value\n1,1.0\n2,2.0\n3,0.1\n");
        let back = read_csv(csv.as_bytes(), &ColumnSelector::Name("value".into())).unwrap();
        assert_eq!(back.values(), x.values());
    }

    #[test]
    fn scenario_config_with_alternative() {
        let text = r#"
            n = 2000
            seed = 7
            alternative = "A1"
            [noise]
            kind = "ar1"
            phi = 0.4
            [mean]
            kind = "sine"
        "#;
        let cfg: ScenarioConfig = toml::from_str(text).unwrap();
        let spec = cfg.into_spec().unwrap();
        assert!((spec.variance.eval(0.9) - 1.2).abs() < 1e-12);
        assert_eq!(spec.mean, MeanFn::Sine { amplitude: 1.0 });

        let both = r#"
            n = 100
            alternative = "A2"
            [noise]
            kind = "iid_normal"
            [variance]
            kind = "constant"
            sigma = 1.0
        "#;
        let cfg: ScenarioConfig = toml::from_str(both).unwrap();
        assert!(cfg.into_spec().is_err());
    }
}
