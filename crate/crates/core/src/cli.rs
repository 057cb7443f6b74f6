//! `greenstore` command-line interface.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 backend error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{parse_size_tb, projection, savings_report, Architecture, EnergyOptions, EnergyReport, Projection, TbMode};
use crate::error::{Error, Result};
use crate::metrics::{render_table, TableRow, MIB};
use crate::palette::DitherConfig;
use crate::raster::{encode_png, EncodeParams};
use crate::store::{evaluate_dataset, list_dataset, ArchiveManifest, DatasetEvaluation, Store, UpscalerBackend, VerifyReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_BACKEND: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TbModeArg {
    Binary,
    Decimal,
}

impl From<TbModeArg> for TbMode {
    fn from(m: TbModeArg) -> Self {
        match m {
            TbModeArg::Binary => TbMode::Binary,
            TbModeArg::Decimal => TbMode::Decimal,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "greenstore", version, about = "Shrink images for storage and restore them on retrieval")]
struct Cli {
    /// Store directory
    #[arg(long, global = true, env = "GREENSTORE_STORE", default_value = ".greenstore")]
    store: PathBuf,

    /// Dither scale(s) in [0, 1]; comma-separated or repeated for evaluate/report
    #[arg(long, global = true, env = "GREENSTORE_DITHER", value_delimiter = ',', default_value = "1.0")]
    dither: Vec<f64>,

    #[arg(long, global = true, env = "GREENSTORE_PALETTE_SIZE", default_value_t = 256)]
    palette_size: usize,

    /// `native` or `external:<command>`
    #[arg(long, global = true, env = "GREENSTORE_BACKEND", default_value = "native")]
    backend: String,

    /// Grams of CO2 per kWh
    #[arg(long, global = true, env = "GREENSTORE_CARBON_FACTOR", default_value_t = 500.0)]
    carbon_factor: f64,

    #[arg(long, global = true, env = "GREENSTORE_TB_MODE", value_enum, default_value = "binary")]
    tb_mode: TbModeArg,

    /// Emit JSON instead of text
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Archive PNG files (directories are expanded to the PNGs they contain)
    Archive {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
    /// Restore an archived image to its original dimensions
    Retrieve { id_or_name: String, out: PathBuf },
    /// Quality and size table for a dataset directory
    Evaluate { dataset: PathBuf },
    /// Quality table plus storage energy and carbon figures
    Report {
        dataset: Option<PathBuf>,
        /// Projected savings, e.g. `--project 10TB 0.70`
        #[arg(long, num_args = 2, value_names = ["SIZE", "FRACTION"])]
        project: Option<Vec<String>>,
    },
    /// Check every manifest entry against its blob
    Verify,
}

struct Settings {
    store: PathBuf,
    dithers: Vec<DitherConfig>,
    backend: UpscalerBackend,
    energy: EnergyOptions,
    json: bool,
}

fn settings(cli: &Cli) -> Result<Settings> {
    let dithers = cli
        .dither
        .iter()
        .map(|&d| DitherConfig::new(d, cli.palette_size))
        .collect::<Result<Vec<_>>>()?;
    if dithers.is_empty() {
        return Err(Error::InvalidConfig("at least one --dither value is required".into()));
    }
    if !(cli.carbon_factor >= 0.0 && cli.carbon_factor.is_finite()) {
        return Err(Error::InvalidConfig(format!("carbon factor must be >= 0, got {}", cli.carbon_factor)));
    }
    Ok(Settings {
        store: cli.store.clone(),
        dithers,
        backend: cli.backend.parse()?,
        energy: EnergyOptions {
            carbon_g_per_kwh: cli.carbon_factor,
            tb_mode: cli.tb_mode.into(),
            ..EnergyOptions::default()
        },
        json: cli.json,
    })
}

fn single_dither(s: &Settings) -> Result<DitherConfig> {
    match s.dithers.as_slice() {
        [one] => Ok(*one),
        _ => Err(Error::InvalidConfig("this command takes exactly one --dither value".into())),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileError {
    pub path: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchiveSummary {
    pub entries: Vec<ArchiveManifest>,
    pub created: usize,
    pub errors: Vec<FileError>,
    pub original_bytes: u64,
    pub stored_bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyRow {
    pub dataset: String,
    pub dither: f64,
    pub report: EnergyReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportOutput {
    pub quality: Option<DatasetEvaluation>,
    pub energy: Vec<EnergyRow>,
    pub projection: Option<Projection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrieveOutput {
    pub object_id: String,
    pub source_name: String,
    pub out: String,
    pub width: u32,
    pub height: u32,
}

fn write_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::CorruptInput(e.to_string()))?;
    writeln!(out, "{text}").map_err(|e| Error::storage("<stdout>", e))
}

macro_rules! out {
    ($w:expr) => {
        writeln!($w).map_err(|e| Error::storage("<stdout>", e))?
    };
    ($w:expr, $($arg:tt)*) => {
        writeln!($w, $($arg)*).map_err(|e| Error::storage("<stdout>", e))?
    };
}

fn expand_inputs(paths: &[PathBuf]) -> Vec<std::result::Result<PathBuf, FileError>> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            match list_dataset(p) {
                Ok(list) => files.extend(list.into_iter().map(Ok)),
                Err(e) => files.push(Err(FileError {
                    path: p.display().to_string(),
                    error: e.to_string(),
                })),
            }
        } else {
            files.push(Ok(p.clone()));
        }
    }
    files
}

fn cmd_archive(s: &Settings, paths: &[PathBuf], out: &mut dyn Write) -> Result<i32> {
    let cfg = single_dither(s)?;
    let store = Store::open(&s.store)?;
    let inputs = expand_inputs(paths);
    let results: Vec<std::result::Result<(ArchiveManifest, bool), (FileError, i32)>> = inputs
        .into_par_iter()
        .map(|input| {
            let path = input.map_err(|fe| (fe, EXIT_DATA))?;
            store
                .archive_file(&path, &cfg)
                .map(|o| (o.entry, o.created))
                .map_err(|e| {
                    let code = e.exit_code();
                    let error = match e {
                        Error::NotFound(_) => format!("NotFound: {e}"),
                        _ => e.to_string(),
                    };
                    (
                        FileError {
                            path: path.display().to_string(),
                            error,
                        },
                        code,
                    )
                })
        })
        .collect();

    let mut summary = ArchiveSummary {
        entries: Vec::new(),
        created: 0,
        errors: Vec::new(),
        original_bytes: 0,
        stored_bytes: 0,
    };
    let mut code = EXIT_OK;
    for r in results {
        match r {
            Ok((entry, created)) => {
                summary.created += created as usize;
                summary.original_bytes += entry.original_bytes;
                summary.stored_bytes += entry.stored_bytes;
                summary.entries.push(entry);
            }
            Err((fe, c)) => {
                code = code.max(c);
                summary.errors.push(fe);
            }
        }
    }

    if s.json {
        write_json(out, &summary)?;
    } else {
        for e in &summary.entries {
            out!(out, "{}  {}  {} -> {} bytes", e.object_id, e.source_name, e.original_bytes, e.stored_bytes);
        }
        for fe in &summary.errors {
            out!(out, "error  {}: {}", fe.path, fe.error);
        }
        let pct = if summary.original_bytes > 0 {
            100.0 * (1.0 - summary.stored_bytes as f64 / summary.original_bytes as f64)
        } else {
            0.0
        };
        out!(
            out,
            "archived {} objects ({} new, {} failed): original {:.4} MB, stored {:.4} MB, compression {:.4}%",
            summary.entries.len(),
            summary.created,
            summary.errors.len(),
            summary.original_bytes as f64 / MIB,
            summary.stored_bytes as f64 / MIB,
            pct
        );
    }
    Ok(code)
}

fn cmd_retrieve(s: &Settings, query: &str, dest: &Path, out: &mut dyn Write) -> Result<i32> {
    let store = Store::open_existing(&s.store)?;
    let entry = store.resolve(query)?;
    let img = store.retrieve_entry(&entry, &s.backend)?;
    let params = EncodeParams {
        palette_mode: false,
        compression_effort: 6,
        ..EncodeParams::default()
    };
    let png = encode_png(&img, None, &params)?;
    std::fs::write(dest, png).map_err(|e| Error::storage(dest, e))?;
    let result = RetrieveOutput {
        object_id: entry.object_id,
        source_name: entry.source_name,
        out: dest.display().to_string(),
        width: img.width(),
        height: img.height(),
    };
    if s.json {
        write_json(out, &result)?;
    } else {
        out!(out, "{} ({}) -> {} [{}x{}]", result.object_id, result.source_name, result.out, result.width, result.height);
    }
    Ok(EXIT_OK)
}

fn cmd_evaluate(s: &Settings, dataset: &Path, out: &mut dyn Write) -> Result<i32> {
    let eval = evaluate_dataset(dataset, &s.dithers, &s.backend)?;
    if s.json {
        write_json(out, &eval)?;
    } else {
        write!(out, "{}", render_table(&eval.rows)).map_err(|e| Error::storage("<stdout>", e))?;
    }
    Ok(EXIT_OK)
}

fn energy_rows(rows: &[TableRow], opts: &EnergyOptions) -> Result<Vec<EnergyRow>> {
    let mut out = Vec::new();
    for row in rows {
        for arch in Architecture::ALL {
            out.push(EnergyRow {
                dataset: row.dataset.clone(),
                dither: row.dither,
                report: savings_report(row.original_bytes, row.stored_bytes, arch, opts)?,
            });
        }
    }
    Ok(out)
}

fn cmd_report(s: &Settings, dataset: Option<&Path>, project: Option<&[String]>, out: &mut dyn Write) -> Result<i32> {
    let projection = match project {
        Some([size, fraction]) => {
            let tb = parse_size_tb(size, s.energy.tb_mode)?;
            let fraction: f64 = fraction
                .trim_end_matches('%')
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("invalid compression fraction {fraction:?}")))?;
            Some(projection(tb, fraction, s.energy.carbon_g_per_kwh)?)
        }
        Some(_) => return Err(Error::InvalidConfig("--project takes <size><unit> <fraction>".into())),
        None => None,
    };
    if dataset.is_none() && projection.is_none() {
        return Err(Error::InvalidConfig("report needs a dataset directory or --project".into()));
    }
    let quality = dataset
        .map(|d| evaluate_dataset(d, &s.dithers, &s.backend))
        .transpose()?;
    let energy = match &quality {
        Some(q) => energy_rows(&q.rows, &s.energy)?,
        None => Vec::new(),
    };
    let report = ReportOutput {
        quality,
        energy,
        projection,
    };
    if s.json {
        write_json(out, &report)?;
        return Ok(EXIT_OK);
    }

    if let Some(q) = &report.quality {
        write!(out, "{}", render_table(&q.rows)).map_err(|e| Error::storage("<stdout>", e))?;
        out!(out);
        out!(out, "Annual storage energy (kWh/year, {:?} TB)", s.energy.tb_mode);
        out!(
            out,
            "{:<10} {:<7} {:<12} {:>14} {:>14} {:>14} {:>16}",
            "Dataset",
            "Dither",
            "Storage",
            "Initial kWh",
            "Final kWh",
            "Savings kWh",
            "CO2 saved (g)"
        );
        for row in &report.energy {
            let r = &row.report;
            out!(
                out,
                "{:<10} {:<7} {:<12} {:>14.6e} {:>14.6e} {:>14.6e} {:>16.6}",
                row.dataset,
                row.dither,
                r.architecture.to_string(),
                r.initial_kwh,
                r.final_kwh,
                r.savings_kwh,
                r.carbon_saved_g
            );
        }
        for row in report.energy.chunks(2) {
            if let [d, c] = row {
                out!(
                    out,
                    "carbon saved per year at {} g/kWh (dither {}): {:.3} g distributed, {:.3} g centralized",
                    s.energy.carbon_g_per_kwh,
                    d.dither,
                    d.report.carbon_saved_g,
                    c.report.carbon_saved_g
                );
            }
        }
    }
    if let Some(p) = &report.projection {
        if report.quality.is_some() {
            out!(out);
        }
        out!(
            out,
            "Projection: {} TB at {}% compression, {} g CO2/kWh",
            p.original_tb,
            p.compression_fraction * 100.0,
            p.carbon_g_per_kwh
        );
        out!(out, "  distributed: {:.3} kWh/year saved, {:.3} kg CO2", p.kwh_distributed, p.carbon_kg_distributed);
        out!(out, "  centralized: {:.3} kWh/year saved, {:.3} kg CO2", p.kwh_centralized, p.carbon_kg_centralized);
    }
    Ok(EXIT_OK)
}

fn cmd_verify(s: &Settings, out: &mut dyn Write) -> Result<i32> {
    let store = Store::open_existing(&s.store)?;
    let report: VerifyReport = store.verify()?;
    if s.json {
        write_json(out, &report)?;
    } else {
        for f in &report.failures {
            out!(out, "FAIL {f}");
        }
        for o in &report.orphan_blobs {
            out!(out, "orphan blob {o}");
        }
        out!(
            out,
            "verified {} entries: {} failures, {} orphan blobs",
            report.entries_checked,
            report.failures.len(),
            report.orphan_blobs.len()
        );
    }
    Ok(if report.is_ok() { EXIT_OK } else { EXIT_DATA })
}

/// Runs the tool with `args` (including the program name); returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if code == EXIT_OK {
                write!(out, "{rendered}")
            } else {
                write!(err, "{rendered}")
            };
            return code;
        }
    };
    let result = settings(&cli).and_then(|s| match &cli.command {
        Command::Archive { paths } => cmd_archive(&s, paths, out),
        Command::Retrieve { id_or_name, out: dest } => cmd_retrieve(&s, id_or_name, dest, out),
        Command::Evaluate { dataset } => cmd_evaluate(&s, dataset, out),
        Command::Report { dataset, project } => cmd_report(&s, dataset.as_deref(), project.as_deref(), out),
        Command::Verify => cmd_verify(&s, out),
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "greenstore: {e}");
            if let Error::AmbiguousName { candidates, .. } = &e {
                for c in candidates {
                    let _ = writeln!(err, "  {c}");
                }
            }
            e.exit_code()
        }
    }
}
