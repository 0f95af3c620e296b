//! Design-space exploration: workload requirement ingestion, Shmoo
//! pass/fail grids over bank configurations, and optimal-configuration
//! selection. Per-cell evaluations are independent and run in parallel
//! with a deterministic merged result.

use std::fmt;

use rayon::prelude::*;

use crate::analysis::{analyze, AnalysisReport};
use crate::bankgen::build_bank;
use crate::config::{CellVariant, MemoryConfig};
use crate::plot::Svg;
use crate::retention::{retention_time, RetentionSetup};
use crate::tech::Technology;

pub const WORKLOAD_FIXTURE: &str = include_str!("../fixtures/workloads.csv");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CacheLevel {
    L1,
    L2,
}

impl CacheLevel {
    fn parse(s: &str) -> Option<CacheLevel> {
        match s {
            "L1" | "l1" => Some(CacheLevel::L1),
            "L2" | "l2" => Some(CacheLevel::L2),
            _ => None,
        }
    }
}

impl fmt::Display for CacheLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CacheLevel::L1 => write!(f, "L1"),
            CacheLevel::L2 => write!(f, "L2"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct WorkloadRequirement {
    pub task_id: u32,
    pub name: String,
    pub cache_level: CacheLevel,
    pub f_read_req: f64,
    pub lifetime_req: f64,
}

impl WorkloadRequirement {
    pub fn label(&self) -> String {
        format!("{}:{}", self.cache_level, self.name)
    }
}

#[derive(Debug)]
pub struct DseError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for DseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "workloads line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for DseError {}

/// Parse the workload CSV: header
/// `task_id,name,cache_level,f_read_req_hz,lifetime_req_s`; `inf` marks an
/// unbounded lifetime requirement.
pub fn load_workloads(text: &str) -> Result<Vec<WorkloadRequirement>, DseError> {
    let mut out = Vec::new();
    let mut lines = text.lines().enumerate();
    let Some((_, header)) = lines.next() else {
        return Err(DseError {
            line: 1,
            message: "empty workloads file".to_string(),
        });
    };
    if header.trim() != "task_id,name,cache_level,f_read_req_hz,lifetime_req_s" {
        return Err(DseError {
            line: 1,
            message: format!("unexpected header `{header}`"),
        });
    }
    for (idx, raw) in lines {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(DseError {
                line: line_no,
                message: format!("expected 5 fields, got {}", fields.len()),
            });
        }
        let task_id = fields[0].parse::<u32>().map_err(|_| DseError {
            line: line_no,
            message: format!("bad task_id `{}`", fields[0]),
        })?;
        let cache_level = CacheLevel::parse(fields[2]).ok_or(DseError {
            line: line_no,
            message: format!("bad cache_level `{}`", fields[2]),
        })?;
        let parse_pos = |v: &str, what: &str| -> Result<f64, DseError> {
            let x = if v == "inf" {
                f64::INFINITY
            } else {
                v.parse::<f64>().map_err(|_| DseError {
                    line: line_no,
                    message: format!("bad {what} `{v}`"),
                })?
            };
            if x < 0.0 {
                return Err(DseError {
                    line: line_no,
                    message: format!("{what} must be >= 0, got `{v}`"),
                });
            }
            Ok(x)
        };
        out.push(WorkloadRequirement {
            task_id,
            name: fields[1].to_string(),
            cache_level,
            f_read_req: parse_pos(fields[3], "f_read_req_hz")?,
            lifetime_req: parse_pos(fields[4], "lifetime_req_s")?,
        });
    }
    Ok(out)
}

/// One bank organization in the exploration grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConfigPoint {
    pub word_size: u32,
    pub num_words: u32,
}

impl ConfigPoint {
    pub fn label(&self) -> String {
        format!("{}x{}", self.word_size, self.num_words)
    }

    pub fn bits(&self) -> u64 {
        self.word_size as u64 * self.num_words as u64
    }

    pub fn parse(s: &str) -> Option<ConfigPoint> {
        let (w, n) = s.split_once('x')?;
        Some(ConfigPoint {
            word_size: w.trim().parse().ok()?,
            num_words: n.trim().parse().ok()?,
        })
    }
}

/// The span used to match the exploration in the source material.
pub fn default_grid() -> Vec<ConfigPoint> {
    [16u32, 32, 64, 128]
        .iter()
        .map(|&n| ConfigPoint {
            word_size: n,
            num_words: n,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellOutcome {
    Pass,
    FailFreq,
    FailRetention,
    FailBoth,
}

impl fmt::Display for CellOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CellOutcome::Pass => write!(f, "PASS"),
            CellOutcome::FailFreq => write!(f, "FAIL_FREQ"),
            CellOutcome::FailRetention => write!(f, "FAIL_RETENTION"),
            CellOutcome::FailBoth => write!(f, "FAIL_BOTH"),
        }
    }
}

/// Per-configuration metrics shared by every task column.
#[derive(Debug, Clone)]
pub struct ConfigMetrics {
    pub point: ConfigPoint,
    pub report: AnalysisReport,
    /// Hold-time retention; unbounded for the SRAM reference.
    pub retention: f64,
}

#[derive(Debug, Clone)]
pub struct ShmooResult {
    pub configs: Vec<ConfigPoint>,
    pub tasks: Vec<WorkloadRequirement>,
    pub metrics: Vec<ConfigMetrics>,
    /// grid[config_idx][task_idx]
    pub grid: Vec<Vec<CellOutcome>>,
}

/// Classify one (configuration, task) cell from stored metrics.
pub fn classify(metrics: &ConfigMetrics, task: &WorkloadRequirement) -> CellOutcome {
    let freq_ok = metrics.report.f_max >= task.f_read_req;
    let ret_ok = metrics.retention >= task.lifetime_req;
    match (freq_ok, ret_ok) {
        (true, true) => CellOutcome::Pass,
        (false, true) => CellOutcome::FailFreq,
        (true, false) => CellOutcome::FailRetention,
        (false, false) => CellOutcome::FailBoth,
    }
}

/// Build and measure one configuration point.
pub fn measure_config(
    point: ConfigPoint,
    base: &MemoryConfig,
    tech: &Technology,
) -> Result<ConfigMetrics, crate::bankgen::BuildError> {
    let mut cfg = base.clone();
    cfg.word_size = point.word_size;
    cfg.num_words = point.num_words;
    let design = build_bank(&cfg, tech)?;
    let report = analyze(&design, tech);
    let retention = if cfg.cell_variant == CellVariant::Sram6t {
        f64::INFINITY
    } else {
        retention_time(&RetentionSetup::for_config(&cfg, tech)).t_ret
    };
    Ok(ConfigMetrics {
        point,
        report,
        retention,
    })
}

/// Evaluate one (configuration, task) pair end to end.
pub fn evaluate(
    point: ConfigPoint,
    base: &MemoryConfig,
    task: &WorkloadRequirement,
    tech: &Technology,
) -> Result<CellOutcome, crate::bankgen::BuildError> {
    Ok(classify(&measure_config(point, base, tech)?, task))
}

/// Evaluate the whole grid. Configurations are measured concurrently; the
/// merged result is deterministic regardless of schedule.
pub fn shmoo(
    configs: &[ConfigPoint],
    tasks: &[WorkloadRequirement],
    base: &MemoryConfig,
    tech: &Technology,
) -> Result<ShmooResult, crate::bankgen::BuildError> {
    let metrics: Result<Vec<ConfigMetrics>, crate::bankgen::BuildError> = configs
        .par_iter()
        .map(|&p| measure_config(p, base, tech))
        .collect();
    let metrics = metrics?;
    let grid: Vec<Vec<CellOutcome>> = metrics
        .iter()
        .map(|m| tasks.iter().map(|t| classify(m, t)).collect())
        .collect();
    Ok(ShmooResult {
        configs: configs.to_vec(),
        tasks: tasks.to_vec(),
        metrics,
        grid,
    })
}

/// Among passing configurations for `task_idx`, pick the largest bank
/// (bits), breaking ties by higher read bandwidth then lower area.
pub fn select_optimal(result: &ShmooResult, task_idx: usize) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (ci, row) in result.grid.iter().enumerate() {
        if row[task_idx] != CellOutcome::Pass {
            continue;
        }
        best = Some(match best {
            None => ci,
            Some(prev) => {
                let a = &result.metrics[ci];
                let b = &result.metrics[prev];
                let key_a = (
                    a.point.bits(),
                    a.report.bw_read,
                    -a.report.area_total,
                );
                let key_b = (
                    b.point.bits(),
                    b.report.bw_read,
                    -b.report.area_total,
                );
                if key_a.partial_cmp(&key_b) == Some(std::cmp::Ordering::Greater) {
                    ci
                } else {
                    prev
                }
            }
        });
    }
    best
}

/// CSV grid: one row per (config, task) cell.
pub fn shmoo_csv(result: &ShmooResult) -> String {
    let mut out = String::from(
        "config,task_id,task,cache_level,outcome,f_max_hz,retention_s,f_read_req_hz,lifetime_req_s\n",
    );
    for (ci, cfg) in result.configs.iter().enumerate() {
        for (ti, task) in result.tasks.iter().enumerate() {
            let m = &result.metrics[ci];
            out.push_str(&format!(
                "{},{},{},{},{},{:.6e},{:.6e},{:.6e},{:.6e}\n",
                cfg.label(),
                task.task_id,
                task.name,
                task.cache_level,
                result.grid[ci][ti],
                m.report.f_max,
                m.retention,
                task.f_read_req,
                task.lifetime_req
            ));
        }
    }
    out
}

/// Static Shmoo plot: filled markers pass, annotated markers fail.
pub fn shmoo_svg(result: &ShmooResult) -> String {
    let cell = 46.0;
    let left = 150.0;
    let top = 40.0;
    let w = left + result.configs.len() as f64 * cell + 30.0;
    let h = top + result.tasks.len() as f64 * cell + 50.0;
    let mut svg = Svg::new(w, h);
    for (ci, cfg) in result.configs.iter().enumerate() {
        let x = left + (ci as f64 + 0.5) * cell;
        svg.text(x, top - 12.0, 11.0, "middle", &cfg.label());
    }
    for (ti, task) in result.tasks.iter().enumerate() {
        let y = top + (ti as f64 + 0.5) * cell;
        svg.text(left - 8.0, y + 4.0, 11.0, "end", &task.label());
        for (ci, _) in result.configs.iter().enumerate() {
            let x = left + (ci as f64 + 0.5) * cell;
            svg.rect(
                left + ci as f64 * cell,
                top + ti as f64 * cell,
                cell,
                cell,
                "none",
                "#cccccc",
            );
            match result.grid[ci][ti] {
                CellOutcome::Pass => svg.circle(x, y, 12.0, "#2a7e2a", "none"),
                outcome => {
                    svg.circle(x, y, 12.0, "none", "#b03030");
                    let label = match outcome {
                        CellOutcome::FailFreq => "F",
                        CellOutcome::FailRetention => "R",
                        CellOutcome::FailBoth => "FR",
                        CellOutcome::Pass => unreachable!(),
                    };
                    svg.text(x, y + 4.0, 10.0, "middle", label);
                }
            }
        }
    }
    svg.text(
        left,
        h - 16.0,
        11.0,
        "start",
        "filled = pass, F = frequency fail, R = retention fail",
    );
    svg.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tech() -> Technology {
        Technology::generic45()
    }

    #[test]
    fn fixture_parses_with_table_names() {
        let tasks = load_workloads(WORKLOAD_FIXTURE).unwrap();
        assert_eq!(tasks.len(), 14);
        assert!(tasks.iter().any(|t| t.name == "llama-3.2-1b"));
        assert!(tasks.iter().any(|t| t.name == "stable-diffusion-3.5b"));
        let inf_rows = tasks.iter().filter(|t| t.lifetime_req.is_infinite()).count();
        assert!(inf_rows >= 1, "fixture keeps one unbounded-lifetime row");
    }

    #[test]
    fn empty_after_header_and_negative_rejected() {
        let empty = "task_id,name,cache_level,f_read_req_hz,lifetime_req_s\n";
        assert!(load_workloads(empty).unwrap().is_empty());
        let bad = format!("{empty}1,x,L1,-5,0\n");
        let e = load_workloads(&bad).unwrap_err();
        assert_eq!(e.line, 2);
    }

    #[test]
    fn vacuous_requirements_always_pass() {
        let t = tech();
        let base = MemoryConfig::new(16, 16, CellVariant::SiSiNn);
        let task = WorkloadRequirement {
            task_id: 0,
            name: "vacuous".into(),
            cache_level: CacheLevel::L1,
            f_read_req: 0.0,
            lifetime_req: 0.0,
        };
        let outcome = evaluate(
            ConfigPoint { word_size: 16, num_words: 16 },
            &base,
            &task,
            &t,
        )
        .unwrap();
        assert_eq!(outcome, CellOutcome::Pass);
    }

    #[test]
    fn unbounded_lifetime_fails_gcram_passes_sram() {
        let t = tech();
        let task = WorkloadRequirement {
            task_id: 0,
            name: "forever".into(),
            cache_level: CacheLevel::L2,
            f_read_req: 0.0,
            lifetime_req: f64::INFINITY,
        };
        let point = ConfigPoint { word_size: 16, num_words: 16 };
        let gc = MemoryConfig::new(16, 16, CellVariant::SiSiNn);
        assert_eq!(evaluate(point, &gc, &task, &t).unwrap(), CellOutcome::FailRetention);
        let sr = MemoryConfig::new(16, 16, CellVariant::Sram6t);
        assert_eq!(evaluate(point, &sr, &task, &t).unwrap(), CellOutcome::Pass);
    }

    #[test]
    fn grid_shape_and_task_independence() {
        let t = tech();
        let base = MemoryConfig::new(16, 16, CellVariant::SiSiNn);
        let configs = vec![
            ConfigPoint { word_size: 16, num_words: 16 },
            ConfigPoint { word_size: 16, num_words: 32 },
        ];
        let mut tasks = load_workloads(WORKLOAD_FIXTURE).unwrap();
        tasks.truncate(2);
        let r = shmoo(&configs, &tasks, &base, &t).unwrap();
        assert_eq!(r.grid.len(), 2);
        assert_eq!(r.grid[0].len(), 2);
        // Adding a task never changes existing cells.
        let mut more = tasks.clone();
        more.push(WorkloadRequirement {
            task_id: 99,
            name: "extra".into(),
            cache_level: CacheLevel::L1,
            f_read_req: 1e9,
            lifetime_req: 1e-6,
        });
        let r2 = shmoo(&configs, &more, &base, &t).unwrap();
        for ci in 0..2 {
            for ti in 0..2 {
                assert_eq!(r.grid[ci][ti], r2.grid[ci][ti]);
            }
        }
    }

    #[test]
    fn select_optimal_prefers_biggest_passing_bank() {
        let t = tech();
        let base = MemoryConfig::new(16, 16, CellVariant::SiSiNn);
        let configs = vec![
            ConfigPoint { word_size: 16, num_words: 16 },
            ConfigPoint { word_size: 32, num_words: 32 },
        ];
        let tasks = vec![WorkloadRequirement {
            task_id: 1,
            name: "loose".into(),
            cache_level: CacheLevel::L1,
            f_read_req: 0.0,
            lifetime_req: 0.0,
        }];
        let r = shmoo(&configs, &tasks, &base, &t).unwrap();
        // Brute-force argmax oracle.
        let brute = (0..configs.len())
            .filter(|&ci| r.grid[ci][0] == CellOutcome::Pass)
            .max_by(|&a, &b| {
                let ka = (r.metrics[a].point.bits(), r.metrics[a].report.bw_read);
                let kb = (r.metrics[b].point.bits(), r.metrics[b].report.bw_read);
                ka.partial_cmp(&kb).unwrap()
            });
        assert_eq!(select_optimal(&r, 0), brute);
        assert_eq!(select_optimal(&r, 0), Some(1));

        // No passing config yields none.
        let hard = vec![WorkloadRequirement {
            task_id: 2,
            name: "impossible".into(),
            cache_level: CacheLevel::L1,
            f_read_req: 1e15,
            lifetime_req: 1e9,
        }];
        let r = shmoo(&configs, &hard, &base, &t).unwrap();
        assert_eq!(select_optimal(&r, 0), None);
    }

    #[test]
    fn csv_and_svg_deterministic() {
        let t = tech();
        let base = MemoryConfig::new(16, 16, CellVariant::SiSiNn);
        let configs = vec![ConfigPoint { word_size: 16, num_words: 16 }];
        let mut tasks = load_workloads(WORKLOAD_FIXTURE).unwrap();
        tasks.truncate(3);
        let r1 = shmoo(&configs, &tasks, &base, &t).unwrap();
        let r2 = shmoo(&configs, &tasks, &base, &t).unwrap();
        assert_eq!(shmoo_csv(&r1), shmoo_csv(&r2));
        assert_eq!(shmoo_svg(&r1), shmoo_svg(&r2));
        let csv = shmoo_csv(&r1);
        assert_eq!(csv.lines().count(), 1 + 3);
    }
}
