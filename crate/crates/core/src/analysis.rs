//! Analytical area, timing, bandwidth and power evaluation — the
//! compiler's replacement for external circuit simulation.
//!
//! Timing model (all delays in seconds):
//!
//! * wordline path: address-DFF clock-to-q (4 tau) + AND-tree decode +
//!   logical-effort driver chain + distributed wire Elmore;
//! * read: the controller delay chain, sized to cover the RBL development
//!   window with a 1.5x margin, gates the sense amp (6 tau); stage
//!   quantization of the chain is what produces the frequency dips
//!   between bank sizes;
//! * RBL development: c_rbl * (|vref - conditioned| + dv_sense) / i_cell
//!   with the conditioned level at ground for predischarge variants and
//!   vdd for precharge, and i_cell evaluated at the worst-case stored
//!   state (decayed "one" for NMOS readout, conducting "zero" for the
//!   PMOS readout of the NP cell);
//! * write: WBL charge through the driver plus storage-node settling to
//!   within 5% (3 RC) through the write device.

use crate::bankgen::{delay_chain_stage_delay, BankDesign};
use crate::cellgen::{CellVariantSpec, Conditioning, CELL_H};
use crate::config::{CellVariant, MemoryConfig};
use crate::netlist::{flatten, DeviceKind};
use crate::tech::Technology;

/// Fraction of the gate capacitance used as the source/drain junction
/// capacitance of a cell transistor.
const C_DRAIN_FRAC: f64 = 0.5;
/// Address/data flip-flop clock-to-q, in units of tau.
const DFF_DELAY_TAU: f64 = 4.0;
/// Sense amplifier resolution delay, in units of tau.
const SA_DELAY_TAU: f64 = 6.0;
/// Level-shifter crossing delay, in units of tau.
const LS_DELAY_TAU: f64 = 4.0;
/// Write-driver output NMOS width (PMOS is gamma-scaled), micrometers.
pub const WRITE_DRIVER_W: f64 = 1.0;

#[derive(Debug, Clone)]
pub struct AnalysisReport {
    pub area_total: f64,
    pub area_array: f64,
    pub array_efficiency: f64,
    pub t_read: f64,
    pub t_write: f64,
    pub f_max: f64,
    pub bw_read: f64,
    pub bw_write: f64,
    pub p_leak: f64,
    pub e_access: f64,
}

impl AnalysisReport {
    /// Line-oriented `metric = value unit` report.
    pub fn to_text(&self) -> String {
        format!(
            "area_total = {:.4} um^2\narea_array = {:.4} um^2\narray_efficiency = {:.4}\n\
             t_read = {:.6e} s\nt_write = {:.6e} s\nf_max = {:.6e} Hz\n\
             bw_read = {:.6e} bit/s\nbw_write = {:.6e} bit/s\n\
             p_leak = {:.6e} W\ne_access = {:.6e} J\n",
            self.area_total,
            self.area_array,
            self.array_efficiency,
            self.t_read,
            self.t_write,
            self.f_max,
            self.bw_read,
            self.bw_write,
            self.p_leak,
            self.e_access
        )
    }

    pub const CSV_HEADER: &'static str = "area_total_um2,area_array_um2,array_efficiency,\
        t_read_s,t_write_s,f_max_hz,bw_read_bps,bw_write_bps,p_leak_w,e_access_j";

    pub fn to_csv_row(&self) -> String {
        format!(
            "{:.4},{:.4},{:.6},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e}",
            self.area_total,
            self.area_array,
            self.array_efficiency,
            self.t_read,
            self.t_write,
            self.f_max,
            self.bw_read,
            self.bw_write,
            self.p_leak,
            self.e_access
        )
    }
}

/// Elmore delay of an RC ladder: sum over segments of R_i times all
/// downstream capacitance (including the segment's own).
pub fn elmore_delay(segments: &[(f64, f64)]) -> f64 {
    let mut downstream: f64 = segments.iter().map(|(_, c)| c).sum();
    let mut total = 0.0;
    for &(r, c) in segments {
        total += r * downstream;
        downstream -= c;
    }
    total
}

/// Effective write threshold including the configured offset.
pub fn write_vt_eff(cfg: &MemoryConfig, spec: &CellVariantSpec, tech: &Technology) -> f64 {
    let m = tech.device(spec.write_device).expect("write device");
    m.vt0 + if cfg.cell_variant == CellVariant::Sram6t { 0.0 } else { cfg.write_vt_offset }
}

/// Storage-node level after writing a one: vdd - Vt without the level
/// shifter, clamped boosted level with it.
pub fn sn_one_level(cfg: &MemoryConfig, spec: &CellVariantSpec, tech: &Technology) -> f64 {
    let vt = write_vt_eff(cfg, spec, tech);
    if cfg.wwl_level_shifter {
        (cfg.vwwl_boost - vt).min(cfg.vdd).max(0.0)
    } else {
        (cfg.vdd - vt).max(0.0)
    }
}

/// Worst-case cell read current for bitline development.
pub fn read_cell_current(cfg: &MemoryConfig, spec: &CellVariantSpec, tech: &Technology) -> f64 {
    let m = tech.device(spec.read_device).expect("read device");
    let vds = cfg.vdd / 2.0;
    match cfg.cell_variant {
        CellVariant::Sram6t => {
            // Access NMOS in series with the pull-down: half the drive.
            0.5 * m.current(cfg.vdd, vds, m.min_w, cfg.temperature)
        }
        CellVariant::SiSiNp => {
            // PMOS readout conducts for a stored zero: |vgs| = vdd.
            m.current(cfg.vdd, vds, m.min_w, cfg.temperature)
        }
        _ => {
            let vgs = sn_one_level(cfg, spec, tech);
            m.current(vgs, vds, m.min_w, cfg.temperature)
        }
    }
}

/// Conditioned RBL level before sensing.
pub fn conditioned_level(cfg: &MemoryConfig, spec: &CellVariantSpec) -> f64 {
    match spec.read_conditioning {
        Conditioning::Predischarge => 0.0,
        Conditioning::Precharge => cfg.vdd,
    }
}

fn cell_h_um(tech: &Technology) -> f64 {
    CELL_H as f64 / tech.dbu_per_um as f64
}

fn cell_w_um(spec: &CellVariantSpec, tech: &Technology) -> f64 {
    spec.cell_w() as f64 / tech.dbu_per_um as f64
}

/// Per-column RBL capacitance over `rows` cells.
pub fn rbl_capacitance(spec: &CellVariantSpec, tech: &Technology, rows: u32) -> f64 {
    let m = tech.device(spec.read_device).expect("read device");
    let wire = tech.wire(spec.bitline_layer()).expect("bitline wire model");
    rows as f64 * (C_DRAIN_FRAC * m.cgate_per_um * m.min_w + cell_h_um(tech) * wire.c_per_um)
}

/// RBL development time: swing to the sense decision point (vref offset
/// plus margin; the sense margin alone for the differential SRAM).
pub fn rbl_development_time(
    cfg: &MemoryConfig,
    spec: &CellVariantSpec,
    tech: &Technology,
    rows: u32,
) -> f64 {
    let c_rbl = rbl_capacitance(spec, tech, rows);
    let dv = if cfg.cell_variant == CellVariant::Sram6t {
        tech.cell_params.dv_sense
    } else {
        (tech.vref(cfg.vdd) - conditioned_level(cfg, spec)).abs() + tech.cell_params.dv_sense
    };
    let i = read_cell_current(cfg, spec, tech).max(1e-30);
    c_rbl * dv / i
}

/// Storage-node capacitance: read gate plus fixed wiring.
pub fn sn_capacitance(spec: &CellVariantSpec, tech: &Technology) -> f64 {
    let m = tech.device(spec.read_device).expect("read device");
    m.cgate_per_um * m.min_w + tech.cell_params.sn_wire_cap
}

/// Storage-node write time. Gain cells charge the node to within 5% of
/// the final level through the write device (3 RC); the SRAM cell only
/// needs the access device to drag the node past the trip point before
/// the cross-coupled pair regenerates.
pub fn cell_write_time(cfg: &MemoryConfig, spec: &CellVariantSpec, tech: &Technology) -> f64 {
    let m = tech.device(spec.write_device).expect("write device");
    let m = m.with_vt_offset(write_vt_eff(cfg, spec, tech) - m.vt0);
    let vgs = if cfg.cell_variant == CellVariant::Sram6t { cfg.vdd } else { cfg.vwwl() };
    let i_on = m.current(vgs, cfg.vdd / 2.0, m.min_w, cfg.temperature).max(1e-30);
    let c = sn_capacitance(spec, tech);
    if cfg.cell_variant == CellVariant::Sram6t {
        3.0 * c * (cfg.vdd / 2.0) / i_on
    } else {
        3.0 * c * cfg.vdd / i_on
    }
}

/// WBL full-swing charge time through the write driver output stage.
pub fn wbl_charge_time(
    cfg: &MemoryConfig,
    spec: &CellVariantSpec,
    tech: &Technology,
    rows: u32,
) -> f64 {
    let m = tech.device(spec.write_device).expect("write device");
    let wire = tech.wire(spec.bitline_layer()).expect("bitline wire model");
    let c_wbl =
        rows as f64 * (C_DRAIN_FRAC * m.cgate_per_um * m.min_w + cell_h_um(tech) * wire.c_per_um);
    let drv = tech.device(crate::cellgen::PERIPH_NMOS).expect("driver device");
    // Two stacked output devices: half the single-device drive.
    let i_drv = 0.5 * drv.current(cfg.vdd, cfg.vdd / 2.0, WRITE_DRIVER_W, cfg.temperature);
    c_wbl * cfg.vdd / i_drv.max(1e-30)
}

/// Wordline load seen by a row driver: gate (write side) or junction
/// (read side) per column plus wire.
pub fn wordline_load(spec: &CellVariantSpec, tech: &Technology, cols: u32, write_side: bool) -> f64 {
    let wl_layer = if spec.variant == CellVariant::OsOs { "metal2" } else { "metal1" };
    let wire = tech.wire(wl_layer).expect("wordline wire model");
    let per_cell_device = if write_side {
        let m = tech.device(spec.write_device).expect("write device");
        m.cgate_per_um * m.min_w
    } else {
        let m = tech.device(spec.read_device).expect("read device");
        match spec.variant {
            // SRAM wordline drives the two access gates.
            CellVariant::Sram6t => 2.0 * m.cgate_per_um * m.min_w,
            // Gain-cell RWL is a source line: junction load.
            _ => C_DRAIN_FRAC * m.cgate_per_um * m.min_w,
        }
    };
    cols as f64 * (per_cell_device + cell_w_um(spec, tech) * wire.c_per_um)
}

/// Distributed wordline wire Elmore delay across the row.
pub fn wordline_wire_delay(spec: &CellVariantSpec, tech: &Technology, cols: u32, write_side: bool) -> f64 {
    let wl_layer = if spec.variant == CellVariant::OsOs { "metal2" } else { "metal1" };
    let wire = tech.wire(wl_layer).expect("wordline wire model");
    let cw = cell_w_um(spec, tech);
    let r_seg = wire.r_per_sq * cw / wire.default_width;
    let c_seg = wordline_load(spec, tech, cols, write_side) / cols as f64;
    let segments: Vec<(f64, f64)> = (0..cols).map(|_| (r_seg, c_seg)).collect();
    elmore_delay(&segments)
}

/// AND-tree decode delay: one gating stage minimum, plus one AND2 per
/// extra address bit (linear fold).
pub fn decoder_delay(addr_bits: u32, tech: &Technology) -> f64 {
    let stage = tech.le.tau * (4.0 / 3.0 * 2.0 + 2.0 * tech.le.p_inv + 2.0 + tech.le.p_inv);
    let stages = addr_bits.max(1) as f64;
    stages * stage
}

/// Read-path delay. The delay chain (quantized to even stages) covers the
/// RBL development window; sensing completes one SA delay later.
pub fn read_path_delay(design: &BankDesign, tech: &Technology) -> f64 {
    let cfg = &design.config;
    let spec = &design.spec;
    let g = design.geometry;
    let tau = tech.le.tau;
    let chain_delay = design.delay_chain_stages as f64 * delay_chain_stage_delay(tech);
    let drv = design
        .sizing_report
        .iter()
        .find(|(n, _)| n == "rwl_driver" || n == "wl_driver")
        .map(|(_, c)| c.modeled_delay)
        .unwrap_or(0.0);
    DFF_DELAY_TAU * tau
        + decoder_delay(g.addr_bits_row, tech)
        + drv
        + wordline_wire_delay(spec, tech, g.cols, false)
        + chain_delay
        + SA_DELAY_TAU * tau
        + if cfg.cell_variant == CellVariant::Sram6t { 0.0 } else { 0.0 }
}

/// Write-path delay: decode, drive (and shift) the WWL, charge the WBL,
/// settle the storage node.
pub fn write_path_delay(design: &BankDesign, tech: &Technology) -> f64 {
    let cfg = &design.config;
    let spec = &design.spec;
    let g = design.geometry;
    let tau = tech.le.tau;
    let drv = design
        .sizing_report
        .iter()
        .find(|(n, _)| n == "wwl_driver" || n == "wl_driver")
        .map(|(_, c)| c.modeled_delay)
        .unwrap_or(0.0);
    let ls = if cfg.wwl_level_shifter && cfg.cell_variant != CellVariant::Sram6t {
        LS_DELAY_TAU * tau
    } else {
        0.0
    };
    DFF_DELAY_TAU * tau
        + decoder_delay(g.addr_bits_row, tech)
        + drv
        + ls
        + wordline_wire_delay(spec, tech, g.cols, true)
        + wbl_charge_time(cfg, spec, tech, g.rows)
        + cell_write_time(cfg, spec, tech)
}

/// Effective per-port bandwidths: the two GCRAM ports run concurrently;
/// the single SRAM port is shared.
pub fn bandwidth(design: &BankDesign, f_max: f64) -> (f64, f64) {
    let bits = design.config.word_size as f64;
    if design.config.cell_variant == CellVariant::Sram6t {
        (bits * f_max / 2.0, bits * f_max / 2.0)
    } else {
        (bits * f_max, bits * f_max)
    }
}

/// Static leakage: SRAM cells contribute two off-device subthreshold
/// paths each; gain cells have no supply-to-ground path. Periphery
/// devices contribute half their off current (averaged over states), and
/// the reference divider its bias current.
pub fn leakage_power(design: &BankDesign, tech: &Technology) -> f64 {
    let cfg = &design.config;
    let bits = cfg.bits() as f64;
    let mut p = 0.0;
    if cfg.cell_variant == CellVariant::Sram6t {
        let nmos = tech.device("nmos_si").expect("nmos");
        let pmos = tech.device("pmos_si").expect("pmos");
        p += bits * (nmos.ioff_per_um * 0.15 + pmos.ioff_per_um * 0.1) * cfg.vdd;
    }
    let flat = flatten(design.top(), &design.netlists).expect("valid bank");
    for d in &flat.devices {
        if d.name.starts_with("array.") {
            continue; // cell leakage handled above
        }
        match d.kind {
            DeviceKind::Mos => {
                if let Ok(m) = tech.device(&d.model) {
                    p += 0.5 * m.ioff_per_um * d.mos_w() * cfg.vdd;
                }
            }
            DeviceKind::Res => {
                // Divider branch: count once from the top resistor.
                if d.name.ends_with("top") {
                    let total: f64 = flat
                        .devices
                        .iter()
                        .filter(|x| x.kind == DeviceKind::Res)
                        .map(|x| match x.params {
                            crate::netlist::DeviceParams::Value(v) => v,
                            _ => 0.0,
                        })
                        .sum();
                    if total > 0.0 {
                        p += cfg.vdd * cfg.vdd / total;
                    }
                }
            }
            DeviceKind::Cap => {}
        }
    }
    p
}

/// Dynamic energy for one read plus one write. Activity factors: selected
/// wordlines 1.0, all bitlines in the muxed groups 0.5, clock loads 1.0,
/// decoder internal nets 0.25.
pub fn access_energy(design: &BankDesign, tech: &Technology) -> f64 {
    let cfg = &design.config;
    let spec = &design.spec;
    let g = design.geometry;
    let vdd = cfg.vdd;
    let vwwl = if cfg.cell_variant == CellVariant::Sram6t { vdd } else { cfg.vwwl() };
    let mut e = 0.0;

    // Wordlines (one row per port).
    e += wordline_load(spec, tech, g.cols, true) * vwwl * vwwl;
    e += wordline_load(spec, tech, g.cols, false) * vdd * vdd;
    // Bitlines: all columns conditioned/driven at 0.5 activity, both ports.
    let c_bl = rbl_capacitance(spec, tech, g.rows);
    let n_bl = if cfg.cell_variant == CellVariant::Sram6t {
        2.0 * g.cols as f64
    } else {
        2.0 * g.cols as f64
    };
    e += 0.5 * n_bl * c_bl * vdd * vdd;
    // Clock loads: data and address flip-flops on both ports.
    let dff_cells = if cfg.cell_variant == CellVariant::Sram6t {
        cfg.word_size + g.addr_bits_row + g.addr_bits_col + 1
    } else {
        cfg.word_size + 2 * (g.addr_bits_row + g.addr_bits_col) + 2
    };
    let inv_cin = tech.unit_inverter_cin() * 1.5;
    e += dff_cells as f64 * inv_cin * vdd * vdd;
    // Decoder internals at 0.25 activity: one AND2 load per output per level.
    let ports = if cfg.cell_variant == CellVariant::Sram6t { 1.0 } else { 2.0 };
    let and_cin = tech.unit_inverter_cin() * 3.0;
    let dec_nodes = (g.rows as f64) * (g.addr_bits_row.max(1) as f64);
    e += 0.25 * ports * dec_nodes * and_cin * vdd * vdd;
    e
}

/// Full report for a built bank.
pub fn analyze(design: &BankDesign, tech: &Technology) -> AnalysisReport {
    let dbu = tech.dbu_per_um as f64;
    let b = design.bank_layout.boundary;
    let area_total = (b.w() as f64 / dbu) * (b.h() as f64 / dbu);
    let g = design.geometry;
    let area_array = (g.cols as f64 * cell_w_um(&design.spec, tech))
        * (g.rows as f64 * cell_h_um(tech));
    let t_read = read_path_delay(design, tech);
    let t_write = write_path_delay(design, tech);
    let f_max = 1.0 / t_read.max(t_write);
    let (bw_read, bw_write) = bandwidth(design, f_max);
    AnalysisReport {
        area_total,
        area_array,
        array_efficiency: area_array / area_total,
        t_read,
        t_write,
        f_max,
        bw_read,
        bw_write,
        p_leak: leakage_power(design, tech),
        e_access: access_energy(design, tech),
    }
}
