use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::martingale::MartingaleTrace;

use super::config::{ExperimentConfig, Scenario, SCHEMA_VERSION};
use super::reports::{run_chi_sq, run_martingale, run_summability, verdict_label};
use super::sequential::{run_consistency, TraceRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

/// A named output file held in memory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

const TRACE_MAGIC: &str = "# consistency-lab trace schema";

fn csv_error(e: impl std::fmt::Display) -> Error {
    Error::Io(e.to_string())
}

fn csv_bytes<T: Serialize>(header: &str, rows: impl IntoIterator<Item = T>) -> Result<Vec<u8>> {
    let mut buf = header.as_bytes().to_vec();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        for r in rows {
            w.serialize(r).map_err(csv_error)?;
        }
        w.flush()?;
    }
    Ok(buf)
}

fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s.into_bytes()
}

fn trace_header(config: &ExperimentConfig) -> String {
    format!(
        "{TRACE_MAGIC} {SCHEMA_VERSION}\n\
         # scenario={} truth={} prior={} n={} seed={} transform={}\n\
         # row n is the state after n observations; hellinger_H = H(f_n, f0), kl_D = int f0 log(f0/f_n);\n\
         # cesaro_* average rows 0..n-1; M is the martingale of the whole-space ratios I_n/I_(n-1)\n",
        config.stem(),
        config.truth.as_ref().map_or("-".into(), |t| t.to_string()),
        config.prior.family(),
        config.n,
        config.seed,
        serde_json::to_value(config.transform)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default(),
    )
}

#[derive(Serialize)]
struct TraceJson<'a> {
    schema_version: u32,
    seed: u64,
    rows: &'a [TraceRow],
}

#[derive(Serialize)]
struct MartingaleCsvRow {
    replicate: usize,
    n: usize,
    x: f64,
    #[serde(rename = "log_L")]
    log_l: f64,
    #[serde(rename = "log_I")]
    log_i: f64,
    #[serde(rename = "post_mass_A")]
    post_mass_a: f64,
    #[serde(rename = "T")]
    t: f64,
    d: f64,
    #[serde(rename = "hellinger_H")]
    hellinger: f64,
    #[serde(rename = "kl_D")]
    kl: f64,
    #[serde(rename = "M")]
    m: f64,
}

fn martingale_rows(traces: &[MartingaleTrace]) -> impl Iterator<Item = MartingaleCsvRow> + '_ {
    traces.iter().enumerate().flat_map(|(r, t)| {
        t.steps.iter().map(move |s| MartingaleCsvRow {
            replicate: r,
            n: s.n,
            x: s.x,
            log_l: s.log_l,
            log_i: s.log_i,
            post_mass_a: s.post_mass_a,
            t: s.t_increment,
            d: s.distance,
            hellinger: s.hellinger_pred,
            kl: s.kl_pred,
            m: s.m,
        })
    })
}

#[derive(Serialize)]
struct SummabilityCsvRow<'a> {
    family: &'a str,
    verdict: &'static str,
    log_partial: f64,
    log_tail_bound: Option<f64>,
    log_total_bound: Option<f64>,
    cells: u64,
    psi: Option<f64>,
    certificate: String,
}

/// Runs the configured scenario and renders its outputs.
pub fn render(config: &ExperimentConfig, format: Format) -> Result<Vec<Artifact>> {
    let stem = config.stem();
    let file = |suffix: &str, ext: &str| format!("{stem}{suffix}.{ext}");
    Ok(match config.scenario {
        Scenario::Consistency | Scenario::Predictive => {
            let rows = run_consistency(config)?;
            match format {
                Format::Csv => vec![Artifact {
                    name: file("", "csv"),
                    bytes: csv_bytes(&trace_header(config), &rows)?,
                }],
                Format::Json => vec![Artifact {
                    name: file("", "json"),
                    bytes: json_bytes(&TraceJson {
                        schema_version: SCHEMA_VERSION,
                        seed: config.seed,
                        rows: &rows,
                    }),
                }],
            }
        }
        Scenario::Summability => {
            let out = run_summability(config)?;
            match format {
                Format::Json => vec![Artifact {
                    name: file("", "json"),
                    bytes: json_bytes(&out),
                }],
                Format::Csv => {
                    let rows = out.reports.iter().map(|r| SummabilityCsvRow {
                        family: &r.family,
                        verdict: verdict_label(&r.verdict),
                        log_partial: r.log_partial,
                        log_tail_bound: r.log_tail_bound,
                        log_total_bound: r.log_total_bound(),
                        cells: r.cell_count_evaluated,
                        psi: r.psi,
                        certificate: match &r.verdict {
                            crate::summability::Verdict::Summable { log_total_bound } => {
                                format!("log total <= {log_total_bound}")
                            }
                            crate::summability::Verdict::Divergent { witness } => witness.clone(),
                            crate::summability::Verdict::Inconclusive { reason } => reason.clone(),
                        },
                    });
                    vec![Artifact {
                        name: file("", "csv"),
                        bytes: csv_bytes(&format!("# consistency-lab summability schema {SCHEMA_VERSION}\n"), rows)?,
                    }]
                }
            }
        }
        Scenario::Martingale => {
            let out = run_martingale(config)?;
            let traces = match format {
                Format::Csv => Artifact {
                    name: file("_traces", "csv"),
                    bytes: csv_bytes(
                        &format!("# consistency-lab martingale traces schema {SCHEMA_VERSION}\n"),
                        martingale_rows(&out.traces),
                    )?,
                },
                Format::Json => Artifact {
                    name: file("_traces", "json"),
                    bytes: json_bytes(&out.traces),
                },
            };
            vec![
                Artifact {
                    name: file("_summary", "json"),
                    bytes: json_bytes(&out.summary),
                },
                traces,
            ]
        }
        Scenario::ChiSqCriterion => {
            let out = run_chi_sq(config)?;
            vec![Artifact {
                name: file("", "json"),
                bytes: json_bytes(&out),
            }]
        }
    })
}

/// Writes artifacts into `dir`, creating it if needed, one file at a time.
pub fn write_artifacts(dir: &Path, artifacts: &[Artifact]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    artifacts
        .iter()
        .map(|a| {
            let path = dir.join(&a.name);
            std::fs::write(&path, &a.bytes)?;
            Ok(path)
        })
        .collect()
}

/// Reads a trace CSV written by [`render`], checking its schema line.
pub fn read_trace_csv(mut reader: impl Read) -> Result<Vec<TraceRow>> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    let first = text.lines().next().unwrap_or_default();
    let expected = format!("{TRACE_MAGIC} {SCHEMA_VERSION}");
    if first != expected {
        return Err(Error::invalid("trace", format!("unexpected schema line `{first}`")));
    }
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    rdr.deserialize().map(|r| r.map_err(csv_error)).collect()
}

/// Loads a trace CSV and replays it against `config`.
pub fn load_trace(path: &Path, config: &ExperimentConfig) -> Result<Vec<TraceRow>> {
    let rows = read_trace_csv(std::fs::File::open(path)?)?;
    super::sequential::replay_check(config, &rows)?;
    Ok(rows)
}
