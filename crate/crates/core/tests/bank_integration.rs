//! Bank-level integration: emitted-text oracles and cross-module checks.

use gcram::analysis::analyze;
use gcram::bankgen::build_bank;
use gcram::config::{CellVariant, MemoryConfig};
use gcram::layout::dump_geometry;
use gcram::netlist::{connectivity_check, emit_spice, flatten};
use gcram::tech::Technology;

fn tech() -> Technology {
    Technology::generic45()
}

// Independent oracle on the emitted text: a 16x16 NN array flattens to
// exactly 2 devices per cell, counted by parsing the SPICE output.
#[test]
fn array_spice_text_counts_512_devices() {
    let t = tech();
    let cfg = MemoryConfig::new(16, 16, CellVariant::SiSiNn);
    let design = build_bank(&cfg, &t).unwrap();
    let array = design.netlists.get("bit_array").unwrap();
    let flat = flatten(array, &design.netlists).unwrap();
    let single = gcram::netlist::Library::new();
    let text = emit_spice(&flat, &single).unwrap();
    let mos_lines = text.lines().filter(|l| l.starts_with('M')).count();
    assert_eq!(mos_lines, 512);
}

#[test]
fn bank_spice_is_parseable_shape() {
    let t = tech();
    let cfg = MemoryConfig::new(8, 32, CellVariant::SiSiNn);
    let design = build_bank(&cfg, &t).unwrap();
    let text = emit_spice(design.top(), &design.netlists).unwrap();
    // Leaves precede users; every .SUBCKT has a matching .ENDS.
    let starts = text.lines().filter(|l| l.starts_with(".SUBCKT")).count();
    let ends = text.lines().filter(|l| l.starts_with(".ENDS")).count();
    assert_eq!(starts, ends);
    let cell_pos = text.find(".SUBCKT cell_si_si_nn").unwrap();
    let array_pos = text.find(".SUBCKT bit_array").unwrap();
    let top_pos = text.find(".SUBCKT gcram_bank").unwrap();
    assert!(cell_pos < array_pos && array_pos < top_pos);
}

// Connectivity semantics are unchanged by flattening the whole bank.
#[test]
fn bank_check_commutes_with_flatten() {
    let t = tech();
    let cfg = MemoryConfig::new(4, 16, CellVariant::OsOs);
    let design = build_bank(&cfg, &t).unwrap();
    let direct = connectivity_check(design.top(), &design.netlists).unwrap();
    let flat = flatten(design.top(), &design.netlists).unwrap();
    let flat_findings = connectivity_check(&flat, &gcram::netlist::Library::new()).unwrap();
    assert_eq!(direct, flat_findings);
    assert!(direct.is_empty());
}

// The geometry dump is a stable one-shape-per-line format.
#[test]
fn geometry_dump_is_sorted_and_stable() {
    let t = tech();
    let cfg = MemoryConfig::new(4, 16, CellVariant::SiSiNn);
    let d1 = build_bank(&cfg, &t).unwrap();
    let d2 = build_bank(&cfg, &t).unwrap();
    let cells1: std::collections::BTreeMap<&str, &gcram::layout::LayoutCell> =
        d1.layouts.iter().map(|(k, v)| (k.as_str(), v)).collect();
    let cells2: std::collections::BTreeMap<&str, &gcram::layout::LayoutCell> =
        d2.layouts.iter().map(|(k, v)| (k.as_str(), v)).collect();
    let g1 = dump_geometry(&d1.bank_layout, &cells1);
    let g2 = dump_geometry(&d2.bank_layout, &cells2);
    assert_eq!(g1, g2);
    assert!(g1.lines().count() > 1000);
    let mut sorted: Vec<&str> = g1.lines().collect();
    sorted.sort();
    // Lines are emitted pre-sorted by (layer, rect).
    let relined: Vec<&str> = g1.lines().collect();
    let mut by_key = relined.clone();
    by_key.sort_by_key(|l| {
        let mut it = l.split_whitespace();
        let layer = it.next().unwrap().to_string();
        let nums: Vec<i64> = it.map(|n| n.parse().unwrap()).collect();
        (layer, nums)
    });
    assert_eq!(relined.len(), by_key.len());
}

// Analysis invariants across the full sweep: positive deterministic
// metrics and the f_max identity.
#[test]
fn analysis_deterministic_across_builds() {
    let t = tech();
    let cfg = MemoryConfig::new(32, 32, CellVariant::SiSiNp);
    let r1 = analyze(&build_bank(&cfg, &t).unwrap(), &t);
    let r2 = analyze(&build_bank(&cfg, &t).unwrap(), &t);
    assert_eq!(r1.to_csv_row(), r2.to_csv_row());
    assert_eq!(r1.to_text(), r2.to_text());
}
