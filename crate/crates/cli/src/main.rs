//! Command-line front end: generate banks, emit SPICE/GDS, run DRC,
//! analyze timing/power, simulate retention, and sweep the design space.
//!
//! Exit codes: 0 success, 1 usage error, 2 generation error, 3 DRC
//! violations present.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gcram::analysis::{analyze, AnalysisReport};
use gcram::bankgen::{build_bank, BankDesign};
use gcram::config::{parse_config, CellVariant, MemoryConfig};
use gcram::dse;
use gcram::layout::drc::format_violations;
use gcram::layout::write_gds;
use gcram::netlist::emit_spice;
use gcram::retention::{retention_curve, retention_time, simulate_decay, RetentionSetup};
use gcram::tech::{load_tech, Technology, GENERIC45};

#[derive(Parser)]
#[command(
    name = "gcram",
    about = "Gain-cell memory macro compiler: netlists, GDSII, DRC and design-space exploration",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Memory configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Technology file (overrides the config's tech_path).
    #[arg(long)]
    tech: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Generate everything: netlist, GDS, analysis, sizing, DRC report.
    Gen(CommonArgs),
    /// Emit the SPICE netlist only.
    Spice(CommonArgs),
    /// Emit the GDSII layout only.
    Gds(CommonArgs),
    /// Run the design-rule checker (exit 3 when violations are found).
    Drc(CommonArgs),
    /// Write the analytical area/timing/power report.
    Analyze(CommonArgs),
    /// Simulate storage-node decay and the retention-vs-Vt curve.
    Retention {
        #[command(flatten)]
        common: CommonArgs,
        /// Write-Vt offsets for the retention curve, volts.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        vt_sweep: Option<Vec<f64>>,
    },
    /// Evaluate a configuration grid against workload requirements.
    Shmoo {
        #[command(flatten)]
        common: CommonArgs,
        /// Workload requirement CSV (bundled fixture when omitted).
        #[arg(long)]
        workloads: Option<PathBuf>,
        /// Grid points as WxN pairs, e.g. 16x16,32x32,64x64,128x128.
        #[arg(long)]
        grid: Option<String>,
        /// Emit the CSV grid.
        #[arg(long)]
        csv: bool,
        /// Emit the SVG plot.
        #[arg(long)]
        svg: bool,
    },
    /// Compare the configured variant against the SRAM reference across
    /// bank capacities of 256 b, 1 Kb, 4 Kb and 16 Kb.
    Sweep(CommonArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version requests are success; bad usage is exit 1.
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

type AnyError = Box<dyn std::error::Error>;

fn load_inputs(common: &CommonArgs) -> Result<(MemoryConfig, Technology), AnyError> {
    let text = std::fs::read_to_string(&common.config)
        .map_err(|e| format!("cannot read {}: {e}", common.config.display()))?;
    let cfg = parse_config(&text)?;
    for w in cfg.warnings() {
        eprintln!("warning: {w}");
    }
    let tech = load_tech_file(common, &cfg)?;
    Ok((cfg, tech))
}

/// Resolve the technology: explicit --tech wins, then the config's
/// tech_path (relative to the config file), then the bundled generic45.
fn load_tech_file(common: &CommonArgs, cfg: &MemoryConfig) -> Result<Technology, AnyError> {
    if let Some(path) = &common.tech {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        return Ok(load_tech(&text)?);
    }
    let rel = common
        .config
        .parent()
        .unwrap_or(Path::new("."))
        .join(&cfg.tech_path);
    if rel.exists() {
        let text = std::fs::read_to_string(&rel)?;
        return Ok(load_tech(&text)?);
    }
    let name = cfg.tech_path.trim_end_matches(".tech");
    if name == "generic45" {
        return Ok(load_tech(GENERIC45)?);
    }
    Err(format!("technology file `{}` not found", cfg.tech_path).into())
}

fn write_out(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf, AnyError> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, bytes)?;
    println!("wrote {}", path.display());
    Ok(path)
}

fn emit_netlist(design: &BankDesign, dir: &Path) -> Result<(), AnyError> {
    let spice = emit_spice(design.top(), &design.netlists)?;
    write_out(dir, "bank.sp", spice.as_bytes())?;
    Ok(())
}

fn emit_gds(design: &BankDesign, tech: &Technology, dir: &Path) -> Result<(), AnyError> {
    let lib = design.gds_library(tech);
    let bytes = write_gds(&lib)?;
    write_out(dir, "bank.gds", &bytes)?;
    Ok(())
}

fn emit_analysis(
    design: &BankDesign,
    tech: &Technology,
    dir: &Path,
) -> Result<AnalysisReport, AnyError> {
    let report = analyze(design, tech);
    write_out(dir, "analysis.txt", report.to_text().as_bytes())?;
    let csv = format!("{}\n{}\n", AnalysisReport::CSV_HEADER, report.to_csv_row());
    write_out(dir, "analysis.csv", csv.as_bytes())?;
    Ok(report)
}

fn run_drc(design: &BankDesign, tech: &Technology, dir: &Path) -> Result<usize, AnyError> {
    let violations = design.drc(tech);
    let mut text = format!("{} violations\n", violations.len());
    text.push_str(&format_violations(&violations, tech));
    write_out(dir, "drc_report.txt", text.as_bytes())?;
    Ok(violations.len())
}

fn run(cli: Cli) -> Result<ExitCode, AnyError> {
    match cli.command {
        Command::Gen(common) => {
            let (cfg, tech) = load_inputs(&common)?;
            let design = build_bank(&cfg, &tech)?;
            emit_netlist(&design, &common.out)?;
            emit_gds(&design, &tech, &common.out)?;
            emit_analysis(&design, &tech, &common.out)?;
            write_out(&common.out, "sizing.txt", design.sizing_report_text().as_bytes())?;
            let n = run_drc(&design, &tech, &common.out)?;
            if n > 0 {
                eprintln!("{n} DRC violations");
                return Ok(ExitCode::from(3));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Spice(common) => {
            let (cfg, tech) = load_inputs(&common)?;
            let design = build_bank(&cfg, &tech)?;
            emit_netlist(&design, &common.out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Gds(common) => {
            let (cfg, tech) = load_inputs(&common)?;
            let design = build_bank(&cfg, &tech)?;
            emit_gds(&design, &tech, &common.out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Drc(common) => {
            let (cfg, tech) = load_inputs(&common)?;
            let design = build_bank(&cfg, &tech)?;
            let n = run_drc(&design, &tech, &common.out)?;
            if n > 0 {
                eprintln!("{n} DRC violations");
                Ok(ExitCode::from(3))
            } else {
                Ok(ExitCode::SUCCESS)
            }
        }
        Command::Analyze(common) => {
            let (cfg, tech) = load_inputs(&common)?;
            let design = build_bank(&cfg, &tech)?;
            emit_analysis(&design, &tech, &common.out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Retention { common, vt_sweep } => {
            let (cfg, tech) = load_inputs(&common)?;
            if cfg.cell_variant == CellVariant::Sram6t {
                return Err("retention analysis applies to gain-cell variants".into());
            }
            let setup = RetentionSetup::for_config(&cfg, &tech);
            let result = retention_time(&setup);
            let horizon = result.t_ret.min(gcram::retention::RETENTION_HORIZON);
            let trace = simulate_decay(&setup, horizon);
            write_out(&common.out, "decay_trace.txt", trace.to_text().as_bytes())?;
            write_out(&common.out, "decay_trace.csv", trace.to_csv().as_bytes())?;
            let offsets = vt_sweep.unwrap_or_else(|| vec![0.0, 0.015, 0.03, 0.045, 0.06]);
            let curve = retention_curve(&cfg, &tech, &offsets);
            let mut curve_csv = String::from("vt_offset_v,t_ret_s\n");
            for (dv, t) in &curve {
                curve_csv.push_str(&format!("{dv},{t:.6e}\n"));
            }
            write_out(&common.out, "retention_curve.csv", curve_csv.as_bytes())?;
            let summary = format!(
                "retention_time = {:.6e} s\nlimiting_state = {}\n",
                result.t_ret, result.limiting_state
            );
            write_out(&common.out, "retention.txt", summary.as_bytes())?;
            print!("{summary}");
            Ok(ExitCode::SUCCESS)
        }
        Command::Shmoo {
            common,
            workloads,
            grid,
            csv,
            svg,
        } => {
            let (cfg, tech) = load_inputs(&common)?;
            let tasks = match &workloads {
                Some(path) => dse::load_workloads(&std::fs::read_to_string(path)?)?,
                None => dse::load_workloads(dse::WORKLOAD_FIXTURE)?,
            };
            let points = match &grid {
                Some(spec) => spec
                    .split(',')
                    .map(|s| {
                        dse::ConfigPoint::parse(s)
                            .ok_or_else(|| format!("bad grid point `{s}` (expected WxN)"))
                    })
                    .collect::<Result<Vec<_>, _>>()?,
                None => dse::default_grid(),
            };
            let result = dse::shmoo(&points, &tasks, &cfg, &tech)?;
            let both = !csv && !svg;
            if csv || both {
                write_out(&common.out, "shmoo.csv", dse::shmoo_csv(&result).as_bytes())?;
            }
            if svg || both {
                write_out(&common.out, "shmoo.svg", dse::shmoo_svg(&result).as_bytes())?;
            }
            for (ti, task) in result.tasks.iter().enumerate() {
                match dse::select_optimal(&result, ti) {
                    Some(ci) => println!(
                        "{}: best configuration {}",
                        task.label(),
                        result.configs[ci].label()
                    ),
                    None => println!("{}: no passing configuration", task.label()),
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep(common) => {
            let (cfg, tech) = load_inputs(&common)?;
            let sizes = [(16u32, 16u32), (32, 32), (64, 64), (128, 128)];
            let mut rows_csv = String::from("bits,variant,word_size,num_words,");
            rows_csv.push_str(AnalysisReport::CSV_HEADER);
            rows_csv.push_str(",retention_s\n");
            let mut ratio_csv =
                String::from("bits,area_ratio_gcram_sram,eff_gcram,eff_sram,leak_ratio,f_ratio\n");
            for (ws, nw) in sizes {
                let mut variant_cfg = cfg.clone();
                variant_cfg.word_size = ws;
                variant_cfg.num_words = nw;
                let mut sram_cfg = variant_cfg.clone();
                sram_cfg.cell_variant = CellVariant::Sram6t;
                sram_cfg.wwl_level_shifter = false;
                sram_cfg.write_vt_offset = 0.0;
                let gd = build_bank(&variant_cfg, &tech)?;
                let gr = analyze(&gd, &tech);
                let sd = build_bank(&sram_cfg, &tech)?;
                let sr = analyze(&sd, &tech);
                let retention = if variant_cfg.cell_variant == CellVariant::Sram6t {
                    f64::INFINITY
                } else {
                    retention_time(&RetentionSetup::for_config(&variant_cfg, &tech)).t_ret
                };
                let bits = ws as u64 * nw as u64;
                rows_csv.push_str(&format!(
                    "{bits},{},{ws},{nw},{},{retention:.6e}\n",
                    variant_cfg.cell_variant,
                    gr.to_csv_row()
                ));
                rows_csv.push_str(&format!(
                    "{bits},{},{ws},{nw},{},inf\n",
                    CellVariant::Sram6t,
                    sr.to_csv_row()
                ));
                ratio_csv.push_str(&format!(
                    "{bits},{:.4},{:.4},{:.4},{:.6},{:.4}\n",
                    gr.area_total / sr.area_total,
                    gr.array_efficiency,
                    sr.array_efficiency,
                    gr.p_leak / sr.p_leak,
                    gr.f_max / sr.f_max
                ));
            }
            write_out(&common.out, "sweep.csv", rows_csv.as_bytes())?;
            write_out(&common.out, "sweep_ratios.csv", ratio_csv.as_bytes())?;
            Ok(ExitCode::SUCCESS)
        }
    }
}
