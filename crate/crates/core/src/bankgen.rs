//! Bank assembly: bitcell array, per-port address blocks (decoder, enable
//! gating, logical-effort-sized wordline drivers, optional WWL level
//! shifters), per-port data blocks (data DFFs, write drivers, column
//! muxes, conditioners, sense amps, reference stub) and the two control
//! blocks with their delay chains. The SRAM variant assembles the
//! single-port reference architecture instead.

use std::collections::BTreeMap;
use std::fmt;

use crate::analysis::{cell_write_time, rbl_development_time, wbl_charge_time, wordline_load};
use crate::cellgen::{
    CellBuilder, CellVariantSpec, Conditioning, GateKind, RwlPolarity, TileSide, CELL_H,
};
use crate::config::{resolve_geometry, CellVariant, ConfigError, DerivedGeometry, MemoryConfig};
use crate::layout::{floorplan, LayoutCell};
use crate::netlist::{Library, Subckt};
use crate::tech::Technology;

#[derive(Debug)]
pub struct BuildError(pub String);

impl fmt::Display for BuildError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "bank generation: {}", self.0)
    }
}

impl std::error::Error for BuildError {}

impl From<ConfigError> for BuildError {
    fn from(e: ConfigError) -> Self {
        BuildError(e.to_string())
    }
}

impl From<crate::layout::route::RouteError> for BuildError {
    fn from(e: crate::layout::route::RouteError) -> Self {
        BuildError(e.to_string())
    }
}

/// Logical-effort sized buffer chain.
#[derive(Debug, Clone)]
pub struct DriverChain {
    pub load_cap: f64,
    pub input_cap: f64,
    pub stages: usize,
    /// Per-stage NMOS widths, micrometers (geometric progression).
    pub widths: Vec<f64>,
    pub modeled_delay: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainPolarity {
    Any,
    NonInverting,
    Inverting,
}

/// Size an inverter chain for `load_cap` by logical effort: N spans
/// max(1, round(log4 H)) adjusted for polarity, per-stage effort H^(1/N),
/// modeled delay tau*(N*f + N*p_inv).
pub fn size_driver(load_cap: f64, tech: &Technology) -> DriverChain {
    size_driver_with_polarity(load_cap, tech, ChainPolarity::Any)
}

pub fn size_driver_with_polarity(
    load_cap: f64,
    tech: &Technology,
    polarity: ChainPolarity,
) -> DriverChain {
    assert!(load_cap > 0.0, "driver load must be positive");
    let cin = tech.unit_inverter_cin();
    let h = (load_cap / cin).max(1.0);
    let n0 = (h.ln() / 4f64.ln()).round().max(1.0) as usize;
    let delay_of = |n: usize| -> f64 {
        let f = h.powf(1.0 / n as f64);
        tech.le.tau * (n as f64 * f + n as f64 * tech.le.p_inv)
    };
    let parity_ok = |n: usize| match polarity {
        ChainPolarity::Any => true,
        ChainPolarity::NonInverting => n % 2 == 0,
        ChainPolarity::Inverting => n % 2 == 1,
    };
    let stages = if parity_ok(n0) {
        n0
    } else {
        let lo = n0.saturating_sub(1).max(1);
        let hi = n0 + 1;
        if parity_ok(lo) && (!parity_ok(hi) || delay_of(lo) <= delay_of(hi)) {
            lo
        } else {
            hi
        }
    };
    let f = h.powf(1.0 / stages as f64);
    let w_unit = tech
        .devices
        .values()
        .find(|m| m.channel == crate::tech::Channel::NmosSi)
        .map(|m| m.min_w)
        .unwrap_or(0.1);
    let widths: Vec<f64> = (0..stages).map(|i| w_unit * f.powi(i as i32)).collect();
    DriverChain {
        load_cap,
        input_cap: cin,
        stages,
        widths,
        modeled_delay: delay_of(stages),
    }
}

/// Per-stage delay of the loaded delay-chain inverter.
pub fn delay_chain_stage_delay(tech: &Technology) -> f64 {
    let cin = tech.unit_inverter_cin();
    tech.le.tau * (1.0 + tech.le.p_inv + tech.cell_params.delay_stage_cap / cin)
}

/// Minimal even inverter-chain stage count whose modeled delay covers
/// `target_delay`.
pub fn delay_chain_stages(target_delay: f64, tech: &Technology) -> usize {
    let per_stage = delay_chain_stage_delay(tech);
    let mut n = (target_delay / per_stage).ceil().max(0.0) as usize;
    if n < 2 {
        n = 2;
    }
    if n % 2 == 1 {
        n += 1;
    }
    n
}

/// Build the delay-chain subcircuit: `stages` capacitively loaded
/// inverters, even count.
pub fn build_delay_chain(
    target_delay: f64,
    tech: &Technology,
    cells: &mut CellBuilder,
) -> (String, usize) {
    let stages = delay_chain_stages(target_delay, tech);
    let name = format!("delay_chain_{stages}");
    if !cells.netlists.contains(&name) {
        let inv = cells.gate(GateKind::Inv, 0.15, TileSide::WritePort);
        let mut chain = Subckt::new(&name, &["in", "out", "vdd", "gnd"]);
        for s in 0..stages {
            let from = if s == 0 { "in".to_string() } else { format!("n{s}") };
            let to = if s == stages - 1 {
                "out".to_string()
            } else {
                format!("n{}", s + 1)
            };
            chain.add_instance(&format!("i{s}"), &inv, &[&from, &to, "vdd", "gnd"]);
            chain.add_device(crate::netlist::Device::cap(
                &format!("cl{s}"),
                &to,
                "gnd",
                tech.cell_params.delay_stage_cap,
            ));
        }
        let layout = crate::cellgen::logic_tile(tech, &name, 620, TileSide::WritePort, true, true, 0);
        cells.netlists.add(chain);
        cells.layouts.insert(name.clone(), layout);
    }
    (name, stages)
}

/// Flat AND-tree row decoder: addr_bits inputs (complements generated
/// internally), 2^addr_bits one-hot outputs. addr_bits = 0 degenerates to
/// a single always-selected output.
pub fn build_decoder(addr_bits: u32, tech: &Technology, cells: &mut CellBuilder) -> String {
    build_decoder_on(addr_bits, tech, cells, TileSide::WritePort)
}

/// Decoder with the layout stub band matching the strip it lands in.
pub fn build_decoder_on(
    addr_bits: u32,
    tech: &Technology,
    cells: &mut CellBuilder,
    side: TileSide,
) -> String {
    let name = format!("decoder{addr_bits}");
    if cells.netlists.contains(&name) {
        return name;
    }
    let outputs = 1usize << addr_bits;
    let mut ports: Vec<String> = (0..addr_bits).map(|i| format!("a[{i}]")).collect();
    ports.extend((0..outputs).map(|j| format!("out[{j}]")));
    ports.push("vdd".into());
    ports.push("gnd".into());
    let port_refs: Vec<&str> = ports.iter().map(|s| s.as_str()).collect();
    let mut dec = Subckt::new(&name, &port_refs);

    if addr_bits == 0 {
        // Always-selected row: a PMOS with grounded gate holds the single
        // output high.
        dec.add_device(crate::netlist::Device::mos(
            "tie",
            "out[0]",
            "gnd",
            "vdd",
            "vdd",
            crate::cellgen::PERIPH_PMOS,
            0.2,
            0.05,
        ));
        cells.netlists.add(dec);
        let layout = crate::cellgen::logic_tile(tech, &name, 620, side, false, true, 0);
        cells.layouts.insert(name.clone(), layout);
        return name;
    }

    let inv = cells.gate(GateKind::Inv, 0.15, TileSide::WritePort);
    let and2 = cells.gate(GateKind::And2, 0.15, TileSide::WritePort);
    for i in 0..addr_bits {
        dec.add_instance(
            &format!("cmpl{i}"),
            &inv,
            &[&format!("a[{i}]"), &format!("ab[{i}]"), "vdd", "gnd"],
        );
    }
    let literal = |bit: u32, j: usize| -> String {
        if (j >> bit) & 1 == 1 {
            format!("a[{bit}]")
        } else {
            format!("ab[{bit}]")
        }
    };
    for j in 0..outputs {
        if addr_bits == 1 {
            // Single literal buffered onto the output.
            dec.add_instance(
                &format!("buf{j}a"),
                &inv,
                &[&literal(0, j), &format!("n{j}x"), "vdd", "gnd"],
            );
            dec.add_instance(
                &format!("buf{j}b"),
                &inv,
                &[&format!("n{j}x"), &format!("out[{j}]"), "vdd", "gnd"],
            );
            continue;
        }
        // Linear AND2 fold over the literals.
        let mut prev = literal(0, j);
        for bit in 1..addr_bits {
            let out = if bit == addr_bits - 1 {
                format!("out[{j}]")
            } else {
                format!("n{j}x{bit}")
            };
            dec.add_instance(
                &format!("and{j}x{bit}"),
                &and2,
                &[&prev, &literal(bit, j), &out, "vdd", "gnd"],
            );
            prev = out;
        }
    }
    cells.netlists.add(dec);
    let layout = crate::cellgen::logic_tile(tech, &name, 620, side, false, true, 0);
    cells.layouts.insert(name.clone(), layout);
    name
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum PinRole {
    Clock,
    ClockWrite,
    ClockRead,
    WriteEnable,
    ReadEnable,
    Addr(u32),
    AddrWrite(u32),
    AddrRead(u32),
    DataIn(u32),
    DataOut(u32),
    Supply,
    Ground,
    BoostSupply,
}

#[derive(Debug, Clone)]
pub struct BankDesign {
    pub config: MemoryConfig,
    pub geometry: DerivedGeometry,
    pub spec: CellVariantSpec,
    pub netlists: Library,
    pub top_name: String,
    pub layouts: BTreeMap<String, LayoutCell>,
    pub bank_layout: LayoutCell,
    pub pin_map: BTreeMap<String, PinRole>,
    /// Named driver chains with their sizing.
    pub sizing_report: Vec<(String, DriverChain)>,
    /// Read-controller delay chain length.
    pub delay_chain_stages: usize,
    pub write_chain_stages: usize,
    /// Modeled RBL development window the read chain covers (pre-margin).
    pub rbl_dev_time: f64,
}

impl BankDesign {
    pub fn top(&self) -> &Subckt {
        self.netlists.get(&self.top_name).expect("top exists")
    }

    pub fn cell_layout(&self) -> &LayoutCell {
        self.layouts
            .get(&self.spec.cell_name())
            .expect("cell layout exists")
    }

    /// Full GDS library: every leaf/tile layout plus the floorplanned bank.
    pub fn gds_library(&self, tech: &Technology) -> crate::layout::GdsLibrary {
        let mut lib = crate::layout::GdsLibrary::new("gcram", tech.dbu_per_um);
        for cell in self.layouts.values() {
            lib.add(cell.clone());
        }
        lib.add(self.bank_layout.clone());
        lib
    }

    /// Design-rule check of the floorplanned bank.
    pub fn drc(&self, tech: &Technology) -> Vec<crate::layout::DrcViolation> {
        let mut cells: BTreeMap<&str, &LayoutCell> = self
            .layouts
            .iter()
            .map(|(k, v)| (k.as_str(), v))
            .collect();
        cells.insert("bank", &self.bank_layout);
        crate::layout::drc_check(&self.bank_layout, &cells, tech)
    }

    pub fn sizing_report_text(&self) -> String {
        let mut out = String::new();
        for (name, chain) in &self.sizing_report {
            let widths: Vec<String> = chain.widths.iter().map(|w| format!("{w:.3}")).collect();
            out.push_str(&format!(
                "{name}: load = {:.3e} F, stages = {}, widths_um = [{}], delay = {:.3e} s\n",
                chain.load_cap,
                chain.stages,
                widths.join(", "),
                chain.modeled_delay
            ));
        }
        out.push_str(&format!(
            "read_delay_chain: stages = {}, covers = {:.3e} s\n",
            self.delay_chain_stages, self.rbl_dev_time
        ));
        out
    }
}

/// Margin applied to the RBL development window when sizing the read
/// delay chain.
pub const DELAY_CHAIN_MARGIN: f64 = 1.5;

/// Build the complete bank: netlists plus the floorplanned layout.
pub fn build_bank(cfg: &MemoryConfig, tech: &Technology) -> Result<BankDesign, BuildError> {
    let spec = CellVariantSpec::for_variant(cfg.cell_variant);
    let dbu = tech.dbu_per_um as f64;
    let cell_w = spec.cell_w() as f64 / dbu;
    let cell_h = CELL_H as f64 / dbu;
    let geometry = resolve_geometry(cfg, cell_w, cell_h)?;
    let mut cells = CellBuilder::new(tech);
    let mut sizing: Vec<(String, DriverChain)> = Vec::new();

    if cfg.cell_variant == CellVariant::Sram6t {
        build_sram_bank(cfg, &spec, geometry, tech, &mut cells, &mut sizing)
    } else {
        build_gcram_bank(cfg, &spec, geometry, tech, &mut cells, &mut sizing)
    }
}

fn bus(prefix: &str, n: u32) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}[{i}]")).collect()
}

fn build_gcram_bank(
    cfg: &MemoryConfig,
    spec: &CellVariantSpec,
    geometry: DerivedGeometry,
    tech: &Technology,
    cells: &mut CellBuilder,
    sizing: &mut Vec<(String, DriverChain)>,
) -> Result<BankDesign, BuildError> {
    let rows = geometry.rows;
    let cols = geometry.cols;
    let wpr = geometry.words_per_row;
    let ws = cfg.word_size;
    let kr = geometry.addr_bits_row;
    let kc = geometry.addr_bits_col;
    let use_ls = cfg.wwl_level_shifter;
    let read_pmos = spec.variant == CellVariant::SiSiNp;

    let cell_name = cells.gain_cell(spec);

    // Bitcell array.
    let mut array_ports: Vec<String> = Vec::new();
    array_ports.extend(bus("wwl", rows));
    array_ports.extend(bus("wbl", cols));
    array_ports.extend(bus("rwl", rows));
    array_ports.extend(bus("rbl", cols));
    if read_pmos {
        array_ports.push("vdd".into());
    }
    array_ports.push("gnd".into());
    let refs: Vec<&str> = array_ports.iter().map(|s| s.as_str()).collect();
    let mut array = Subckt::new("bit_array", &refs);
    for r in 0..rows {
        for c in 0..cols {
            let wwl = format!("wwl[{r}]");
            let wbl = format!("wbl[{c}]");
            let rwl = format!("rwl[{r}]");
            let rbl = format!("rbl[{c}]");
            let mut conns: Vec<&str> = vec![&wwl, &wbl, &rwl, &rbl];
            if read_pmos {
                conns.push("vdd");
            }
            conns.push("gnd");
            array.add_instance(&format!("c{r}_{c}"), &cell_name, &conns);
        }
    }
    cells.netlists.add(array);

    // Shared leaf cells.
    let and2 = cells.gate(GateKind::And2, 0.15, TileSide::WritePort);
    let inv = cells.gate(GateKind::Inv, 0.15, TileSide::WritePort);
    let dff = cells.dff();
    let wd = cells.write_driver();
    let sa = cells.sense_amp();
    let cond = cells.bl_conditioner(spec.read_conditioning);
    let vref_stub = cells.vref_stub();
    let mux = if wpr > 1 { Some(cells.mux_passgate()) } else { None };
    let ls = if use_ls { Some(cells.level_shifter()) } else { None };
    let decoder = build_decoder(kr, tech, cells);
    let col_decoder = if kc > 0 {
        Some(build_decoder(kc, tech, cells))
    } else {
        None
    };

    // Wordline driver chains: the write chain is non-inverting (the level
    // shifter is also non-inverting); the read chain polarity follows the
    // RWL activity sense.
    let wwl_load = wordline_load(spec, tech, cols, true);
    let rwl_load = wordline_load(spec, tech, cols, false);
    let wwl_chain = size_driver_with_polarity(wwl_load, tech, ChainPolarity::NonInverting);
    let rwl_chain = size_driver_with_polarity(
        rwl_load,
        tech,
        match spec.rwl_polarity {
            RwlPolarity::ActiveLow => ChainPolarity::Inverting,
            RwlPolarity::ActiveHigh => ChainPolarity::NonInverting,
        },
    );
    sizing.push(("wwl_driver".into(), wwl_chain.clone()));
    sizing.push(("rwl_driver".into(), rwl_chain.clone()));
    let wwl_inv_names: Vec<String> = wwl_chain
        .widths
        .iter()
        .map(|w| cells.gate(GateKind::Inv, *w, TileSide::WritePort))
        .collect();
    let rwl_inv_names: Vec<String> = rwl_chain
        .widths
        .iter()
        .map(|w| cells.gate(GateKind::Inv, *w, TileSide::ReadPort))
        .collect();

    // Control blocks with their delay chains.
    let rbl_dev = rbl_development_time(cfg, spec, tech, rows);
    let (read_dc, read_stages) = build_delay_chain(DELAY_CHAIN_MARGIN * rbl_dev, tech, cells);
    let t_cell = cell_write_time(cfg, spec, tech);
    let t_wbl = wbl_charge_time(cfg, spec, tech, rows);
    let (write_dc, write_stages) =
        build_delay_chain(DELAY_CHAIN_MARGIN * (t_cell + t_wbl), tech, cells);

    let wctl_name = {
        let name = "write_ctl";
        let mut ctl = Subckt::new(name, &["clk", "web", "wwl_en", "wd_en", "vdd", "gnd"]);
        ctl.add_instance("cb", &inv, &["clk", "clk_b", "vdd", "gnd"]);
        ctl.add_instance("ci", &inv, &["clk_b", "clk_i", "vdd", "gnd"]);
        ctl.add_instance("ff", &dff, &["web", "clk", "web_q", "vdd", "gnd"]);
        ctl.add_instance("eninv", &inv, &["web_q", "wen0", "vdd", "gnd"]);
        ctl.add_instance("enand", &and2, &["clk_i", "wen0", "wwl_en", "vdd", "gnd"]);
        ctl.add_instance("dc", &write_dc, &["wwl_en", "wd_en", "vdd", "gnd"]);
        cells.netlists.add(ctl);
        let layout =
            crate::cellgen::logic_tile(tech, name, 620, TileSide::WritePort, false, true, 2);
        cells.layouts.insert(name.to_string(), layout);
        name
    };
    let rctl_name = {
        let pd = spec.read_conditioning == Conditioning::Predischarge;
        let cond_port = if pd { "cond_en" } else { "cond_en_b" };
        let name = if pd { "read_ctl_pd" } else { "read_ctl_pc" };
        let mut ctl =
            Subckt::new(name, &["clk", "reb", "rwl_en", cond_port, "sa_en", "vdd", "gnd"]);
        ctl.add_instance("cb", &inv, &["clk", "clk_b", "vdd", "gnd"]);
        ctl.add_instance("ci", &inv, &["clk_b", "clk_i", "vdd", "gnd"]);
        ctl.add_instance("ff", &dff, &["reb", "clk", "reb_q", "vdd", "gnd"]);
        ctl.add_instance("eninv", &inv, &["reb_q", "ren0", "vdd", "gnd"]);
        ctl.add_instance("enand", &and2, &["clk_i", "ren0", "rwl_en", "vdd", "gnd"]);
        ctl.add_instance("dc", &read_dc, &["rwl_en", "sa_en", "vdd", "gnd"]);
        // Precharge-style active-low enable; predischarge variants add an
        // inverter onto the active-high EN.
        ctl.add_instance("pc0", &inv, &["rwl_en", "pcx", "vdd", "gnd"]);
        if pd {
            ctl.add_instance("pc1", &inv, &["pcx", "en_b_i", "vdd", "gnd"]);
            ctl.add_instance("en_pd_inv", &inv, &["en_b_i", "cond_en", "vdd", "gnd"]);
        } else {
            ctl.add_instance("pc1", &inv, &["pcx", "cond_en_b", "vdd", "gnd"]);
        }
        cells.netlists.add(ctl);
        let layout =
            crate::cellgen::logic_tile(tech, name, 620, TileSide::ReadPort, false, true, 2);
        cells.layouts.insert(name.to_string(), layout);
        name.to_string()
    };

    // Top-level bank.
    let addr_w = bus("addr_w", kc + kr);
    let addr_r = bus("addr_r", kc + kr);
    let din = bus("din", ws);
    let dout = bus("dout", ws);
    let mut top_ports: Vec<String> =
        vec!["clk_w".into(), "clk_r".into(), "web".into(), "reb".into()];
    top_ports.extend(addr_w.iter().cloned());
    top_ports.extend(addr_r.iter().cloned());
    top_ports.extend(din.iter().cloned());
    top_ports.extend(dout.iter().cloned());
    top_ports.push("vdd".into());
    if use_ls {
        top_ports.push("vwwl".into());
    }
    top_ports.push("gnd".into());
    let refs: Vec<&str> = top_ports.iter().map(|s| s.as_str()).collect();
    let mut top = Subckt::new("gcram_bank", &refs);

    // Array instance.
    {
        let mut conns: Vec<String> = Vec::new();
        conns.extend(bus("wwl", rows));
        conns.extend(bus("wbl", cols));
        conns.extend(bus("rwl", rows));
        conns.extend(bus("rbl", cols));
        if read_pmos {
            conns.push("vdd".into());
        }
        conns.push("gnd".into());
        let refs: Vec<&str> = conns.iter().map(|s| s.as_str()).collect();
        top.add_instance("array", "bit_array", &refs);
    }

    // Write-port address block (address DFF bank, decoder, drivers).
    for i in 0..kc + kr {
        top.add_instance(
            &format!("wadff{i}"),
            &dff,
            &[&format!("addr_w[{i}]"), "clk_w", &format!("awq[{i}]"), "vdd", "gnd"],
        );
    }
    {
        let mut conns: Vec<String> = (0..kr).map(|i| format!("awq[{}]", kc + i)).collect();
        conns.extend((0..rows).map(|r| format!("wdec[{r}]")));
        conns.push("vdd".into());
        conns.push("gnd".into());
        let refs: Vec<&str> = conns.iter().map(|s| s.as_str()).collect();
        top.add_instance("wdec", &decoder, &refs);
    }
    for r in 0..rows {
        top.add_instance(
            &format!("wen{r}"),
            &and2,
            &[&format!("wdec[{r}]"), "wwl_en", &format!("wrow[{r}]"), "vdd", "gnd"],
        );
        let mut prev = format!("wrow[{r}]");
        for (s, inv_name) in wwl_inv_names.iter().enumerate() {
            let out = if s + 1 == wwl_inv_names.len() && !use_ls {
                format!("wwl[{r}]")
            } else {
                format!("wdn{r}x{s}")
            };
            top.add_instance(&format!("wdrv{r}x{s}"), inv_name, &[&prev, &out, "vdd", "gnd"]);
            prev = out;
        }
        if use_ls {
            top.add_instance(
                &format!("wls{r}"),
                ls.as_ref().expect("ls cell"),
                &[&prev, &format!("wwl[{r}]"), "vdd", "vwwl", "gnd"],
            );
        }
    }

    // Read-port address block.
    for i in 0..kc + kr {
        top.add_instance(
            &format!("radff{i}"),
            &dff,
            &[&format!("addr_r[{i}]"), "clk_r", &format!("arq[{i}]"), "vdd", "gnd"],
        );
    }
    {
        let mut conns: Vec<String> = (0..kr).map(|i| format!("arq[{}]", kc + i)).collect();
        conns.extend((0..rows).map(|r| format!("rdec[{r}]")));
        conns.push("vdd".into());
        conns.push("gnd".into());
        let refs: Vec<&str> = conns.iter().map(|s| s.as_str()).collect();
        top.add_instance("rdec", &decoder, &refs);
    }
    for r in 0..rows {
        top.add_instance(
            &format!("ren{r}"),
            &and2,
            &[&format!("rdec[{r}]"), "rwl_en", &format!("rrow[{r}]"), "vdd", "gnd"],
        );
        let mut prev = format!("rrow[{r}]");
        for (s, inv_name) in rwl_inv_names.iter().enumerate() {
            let out = if s + 1 == rwl_inv_names.len() {
                format!("rwl[{r}]")
            } else {
                format!("rdn{r}x{s}")
            };
            top.add_instance(&format!("rdrv{r}x{s}"), inv_name, &[&prev, &out, "vdd", "gnd"]);
            prev = out;
        }
    }

    // Write-port data block.
    if let Some(cdec) = &col_decoder {
        let mut conns: Vec<String> = (0..kc).map(|i| format!("awq[{i}]")).collect();
        conns.extend((0..wpr).map(|m| format!("wsel[{m}]")));
        conns.push("vdd".into());
        conns.push("gnd".into());
        let refs: Vec<&str> = conns.iter().map(|s| s.as_str()).collect();
        top.add_instance("wcdec", cdec, &refs);
        for m in 0..wpr {
            top.add_instance(
                &format!("wselinv{m}"),
                &inv,
                &[&format!("wsel[{m}]"), &format!("wsel_b[{m}]"), "vdd", "gnd"],
            );
        }
    }
    for b in 0..ws {
        top.add_instance(
            &format!("wdff{b}"),
            &dff,
            &[&format!("din[{b}]"), "clk_w", &format!("din_q[{b}]"), "vdd", "gnd"],
        );
        let drv_out = if wpr == 1 {
            format!("wbl[{b}]")
        } else {
            format!("wdb[{b}]")
        };
        top.add_instance(
            &format!("wd{b}"),
            &wd,
            &[&format!("din_q[{b}]"), "wd_en", &drv_out, "vdd", "gnd"],
        );
    }
    if wpr > 1 {
        let mux = mux.as_ref().expect("mux cell");
        for c in 0..cols {
            let b = c / wpr;
            let m = c % wpr;
            top.add_instance(
                &format!("wmux{c}"),
                mux,
                &[
                    &format!("wdb[{b}]"),
                    &format!("wbl[{c}]"),
                    &format!("wsel[{m}]"),
                    &format!("wsel_b[{m}]"),
                    "vdd",
                    "gnd",
                ],
            );
        }
    }

    // Read-port data block.
    for c in 0..cols {
        let conns: Vec<String> = match spec.read_conditioning {
            Conditioning::Precharge => {
                vec![format!("rbl[{c}]"), "cond_en_b".into(), "vdd".into()]
            }
            Conditioning::Predischarge => {
                vec![format!("rbl[{c}]"), "cond_en".into(), "gnd".into()]
            }
        };
        let refs: Vec<&str> = conns.iter().map(|s| s.as_str()).collect();
        top.add_instance(&format!("cond{c}"), &cond, &refs);
    }
    if let Some(cdec) = &col_decoder {
        let mut conns: Vec<String> = (0..kc).map(|i| format!("arq[{i}]")).collect();
        conns.extend((0..wpr).map(|m| format!("rsel[{m}]")));
        conns.push("vdd".into());
        conns.push("gnd".into());
        let refs: Vec<&str> = conns.iter().map(|s| s.as_str()).collect();
        top.add_instance("rcdec", cdec, &refs);
        for m in 0..wpr {
            top.add_instance(
                &format!("rselinv{m}"),
                &inv,
                &[&format!("rsel[{m}]"), &format!("rsel_b[{m}]"), "vdd", "gnd"],
            );
        }
        let mux = mux.as_ref().expect("mux cell");
        for c in 0..cols {
            let b = c / wpr;
            let m = c % wpr;
            top.add_instance(
                &format!("rmux{c}"),
                mux,
                &[
                    &format!("rbl[{c}]"),
                    &format!("sain[{b}]"),
                    &format!("rsel[{m}]"),
                    &format!("rsel_b[{m}]"),
                    "vdd",
                    "gnd",
                ],
            );
        }
    }
    for b in 0..ws {
        let sa_in = if wpr == 1 {
            format!("rbl[{b}]")
        } else {
            format!("sain[{b}]")
        };
        top.add_instance(
            &format!("sa{b}"),
            &sa,
            &[&sa_in, "vref", "sa_en", &format!("dout[{b}]"), "vdd", "gnd"],
        );
    }
    top.add_instance("vrefgen", &vref_stub, &["vref", "vdd", "gnd"]);

    // Control blocks.
    top.add_instance("wctl", wctl_name, &["clk_w", "web", "wwl_en", "wd_en", "vdd", "gnd"]);
    let cond_net = match spec.read_conditioning {
        Conditioning::Precharge => "cond_en_b",
        Conditioning::Predischarge => "cond_en",
    };
    top.add_instance(
        "rctl",
        &rctl_name,
        &["clk_r", "reb", "rwl_en", cond_net, "sa_en", "vdd", "gnd"],
    );

    let top_name = top.name.clone();
    cells.netlists.add(top);

    // Pin map.
    let mut pin_map: BTreeMap<String, PinRole> = BTreeMap::new();
    pin_map.insert("clk_w".into(), PinRole::ClockWrite);
    pin_map.insert("clk_r".into(), PinRole::ClockRead);
    pin_map.insert("web".into(), PinRole::WriteEnable);
    pin_map.insert("reb".into(), PinRole::ReadEnable);
    for (i, a) in addr_w.iter().enumerate() {
        pin_map.insert(a.clone(), PinRole::AddrWrite(i as u32));
    }
    for (i, a) in addr_r.iter().enumerate() {
        pin_map.insert(a.clone(), PinRole::AddrRead(i as u32));
    }
    for (i, d) in din.iter().enumerate() {
        pin_map.insert(d.clone(), PinRole::DataIn(i as u32));
    }
    for (i, d) in dout.iter().enumerate() {
        pin_map.insert(d.clone(), PinRole::DataOut(i as u32));
    }
    pin_map.insert("vdd".into(), PinRole::Supply);
    pin_map.insert("gnd".into(), PinRole::Ground);
    if use_ls {
        pin_map.insert("vwwl".into(), PinRole::BoostSupply);
    }

    let mut design = BankDesign {
        config: cfg.clone(),
        geometry,
        spec: spec.clone(),
        netlists: std::mem::take(&mut cells.netlists),
        top_name,
        layouts: std::mem::take(&mut cells.layouts),
        bank_layout: LayoutCell::new("bank"),
        pin_map,
        sizing_report: std::mem::take(sizing),
        delay_chain_stages: read_stages,
        write_chain_stages: write_stages,
        rbl_dev_time: rbl_dev,
    };
    design.bank_layout = floorplan::floorplan_bank(&design, tech)?;
    Ok(design)
}

fn build_sram_bank(
    cfg: &MemoryConfig,
    spec: &CellVariantSpec,
    geometry: DerivedGeometry,
    tech: &Technology,
    cells: &mut CellBuilder,
    sizing: &mut Vec<(String, DriverChain)>,
) -> Result<BankDesign, BuildError> {
    let rows = geometry.rows;
    let cols = geometry.cols;
    let wpr = geometry.words_per_row;
    let ws = cfg.word_size;
    let kr = geometry.addr_bits_row;
    let kc = geometry.addr_bits_col;

    let cell_name = cells.gain_cell(spec);

    let mut array_ports: Vec<String> = Vec::new();
    array_ports.extend(bus("wl", rows));
    array_ports.extend(bus("bl", cols));
    array_ports.extend(bus("bl_b", cols));
    array_ports.push("vdd".into());
    array_ports.push("gnd".into());
    let refs: Vec<&str> = array_ports.iter().map(|s| s.as_str()).collect();
    let mut array = Subckt::new("bit_array", &refs);
    for r in 0..rows {
        for c in 0..cols {
            let wl = format!("wl[{r}]");
            let bl = format!("bl[{c}]");
            let bl_b = format!("bl_b[{c}]");
            array.add_instance(&format!("c{r}_{c}"), &cell_name, &[&wl, &bl, &bl_b, "vdd", "gnd"]);
        }
    }
    cells.netlists.add(array);

    let and2 = cells.gate(GateKind::And2, 0.15, TileSide::SramPort);
    let inv = cells.gate(GateKind::Inv, 0.15, TileSide::SramPort);
    let dff = cells.dff();
    let wd = cells.write_driver();
    let sa = cells.sense_amp_diff();
    let prech = cells.sram_precharge();
    let mux = if wpr > 1 { Some(cells.mux_passgate()) } else { None };
    let decoder = build_decoder_on(kr, tech, cells, TileSide::SramPort);
    let col_decoder = if kc > 0 {
        Some(build_decoder_on(kc, tech, cells, TileSide::SramPort))
    } else {
        None
    };

    let wl_load = wordline_load(spec, tech, cols, true);
    let wl_chain = size_driver_with_polarity(wl_load, tech, ChainPolarity::NonInverting);
    sizing.push(("wl_driver".into(), wl_chain.clone()));
    let wl_inv_names: Vec<String> = wl_chain
        .widths
        .iter()
        .map(|w| cells.gate(GateKind::Inv, *w, TileSide::SramPort))
        .collect();

    let rbl_dev = rbl_development_time(cfg, spec, tech, rows);
    let (dc_name, read_stages) = build_delay_chain(DELAY_CHAIN_MARGIN * rbl_dev, tech, cells);

    let ctl_name = {
        let name = "sram_ctl";
        let mut ctl = Subckt::new(
            name,
            &["clk", "web", "wl_en", "wd_en", "pch_en_b", "sa_en", "vdd", "gnd"],
        );
        ctl.add_instance("cb", &inv, &["clk", "clk_b", "vdd", "gnd"]);
        ctl.add_instance("ci", &inv, &["clk_b", "wl_en", "vdd", "gnd"]);
        ctl.add_instance("pb", &inv, &["clk_b", "pch_en_b", "vdd", "gnd"]);
        ctl.add_instance("ff", &dff, &["web", "clk", "web_q", "vdd", "gnd"]);
        ctl.add_instance("eninv", &inv, &["web_q", "wen0", "vdd", "gnd"]);
        ctl.add_instance("enand", &and2, &["wl_en", "wen0", "wd_en", "vdd", "gnd"]);
        ctl.add_instance("dc", &dc_name, &["wl_en", "sa_en", "vdd", "gnd"]);
        cells.netlists.add(ctl);
        let layout =
            crate::cellgen::logic_tile(tech, name, 620, TileSide::SramPort, false, true, 2);
        cells.layouts.insert(name.to_string(), layout);
        name
    };

    let mut top_ports: Vec<String> = vec!["clk".into(), "web".into()];
    top_ports.extend(bus("addr", kc + kr));
    top_ports.extend(bus("din", ws));
    top_ports.extend(bus("dout", ws));
    top_ports.push("vdd".into());
    top_ports.push("gnd".into());
    let refs: Vec<&str> = top_ports.iter().map(|s| s.as_str()).collect();
    let mut top = Subckt::new("sram_bank", &refs);

    {
        let mut conns: Vec<String> = Vec::new();
        conns.extend(bus("wl", rows));
        conns.extend(bus("bl", cols));
        conns.extend(bus("bl_b", cols));
        conns.push("vdd".into());
        conns.push("gnd".into());
        let refs: Vec<&str> = conns.iter().map(|s| s.as_str()).collect();
        top.add_instance("array", "bit_array", &refs);
    }
    for i in 0..kc + kr {
        top.add_instance(
            &format!("adff{i}"),
            &dff,
            &[&format!("addr[{i}]"), "clk", &format!("aq[{i}]"), "vdd", "gnd"],
        );
    }
    {
        let mut conns: Vec<String> = (0..kr).map(|i| format!("aq[{}]", kc + i)).collect();
        conns.extend((0..rows).map(|r| format!("dec[{r}]")));
        conns.push("vdd".into());
        conns.push("gnd".into());
        let refs: Vec<&str> = conns.iter().map(|s| s.as_str()).collect();
        top.add_instance("dec", &decoder, &refs);
    }
    for r in 0..rows {
        top.add_instance(
            &format!("wen{r}"),
            &and2,
            &[&format!("dec[{r}]"), "wl_en", &format!("row[{r}]"), "vdd", "gnd"],
        );
        let mut prev = format!("row[{r}]");
        for (s, inv_name) in wl_inv_names.iter().enumerate() {
            let out = if s + 1 == wl_inv_names.len() {
                format!("wl[{r}]")
            } else {
                format!("dn{r}x{s}")
            };
            top.add_instance(&format!("drv{r}x{s}"), inv_name, &[&prev, &out, "vdd", "gnd"]);
            prev = out;
        }
    }
    for c in 0..cols {
        top.add_instance(
            &format!("pch{c}"),
            &prech,
            &[&format!("bl[{c}]"), &format!("bl_b[{c}]"), "pch_en_b", "vdd"],
        );
    }
    if let Some(cdec) = &col_decoder {
        let mut conns: Vec<String> = (0..kc).map(|i| format!("aq[{i}]")).collect();
        conns.extend((0..wpr).map(|m| format!("sel[{m}]")));
        conns.push("vdd".into());
        conns.push("gnd".into());
        let refs: Vec<&str> = conns.iter().map(|s| s.as_str()).collect();
        top.add_instance("cdec", cdec, &refs);
        for m in 0..wpr {
            top.add_instance(
                &format!("selinv{m}"),
                &inv,
                &[&format!("sel[{m}]"), &format!("sel_b[{m}]"), "vdd", "gnd"],
            );
        }
        let mux = mux.as_ref().expect("mux cell");
        for c in 0..cols {
            let b = c / wpr;
            let m = c % wpr;
            top.add_instance(
                &format!("mux{c}t"),
                mux,
                &[
                    &format!("bl[{c}]"),
                    &format!("blm[{b}]"),
                    &format!("sel[{m}]"),
                    &format!("sel_b[{m}]"),
                    "vdd",
                    "gnd",
                ],
            );
            top.add_instance(
                &format!("mux{c}c"),
                mux,
                &[
                    &format!("bl_b[{c}]"),
                    &format!("blmb[{b}]"),
                    &format!("sel[{m}]"),
                    &format!("sel_b[{m}]"),
                    "vdd",
                    "gnd",
                ],
            );
        }
    }
    for b in 0..ws {
        let (bl, bl_b) = if wpr == 1 {
            (format!("bl[{b}]"), format!("bl_b[{b}]"))
        } else {
            (format!("blm[{b}]"), format!("blmb[{b}]"))
        };
        top.add_instance(
            &format!("wdff{b}"),
            &dff,
            &[&format!("din[{b}]"), "clk", &format!("din_q[{b}]"), "vdd", "gnd"],
        );
        top.add_instance(
            &format!("wdinv{b}"),
            &inv,
            &[&format!("din_q[{b}]"), &format!("din_qb[{b}]"), "vdd", "gnd"],
        );
        top.add_instance(
            &format!("wdt{b}"),
            &wd,
            &[&format!("din_q[{b}]"), "wd_en", &bl, "vdd", "gnd"],
        );
        top.add_instance(
            &format!("wdc{b}"),
            &wd,
            &[&format!("din_qb[{b}]"), "wd_en", &bl_b, "vdd", "gnd"],
        );
        top.add_instance(
            &format!("sa{b}"),
            &sa,
            &[&bl, &bl_b, "sa_en", &format!("dout[{b}]"), "vdd", "gnd"],
        );
    }
    top.add_instance(
        "ctl",
        ctl_name,
        &["clk", "web", "wl_en", "wd_en", "pch_en_b", "sa_en", "vdd", "gnd"],
    );

    let top_name = top.name.clone();
    cells.netlists.add(top);

    let mut pin_map: BTreeMap<String, PinRole> = BTreeMap::new();
    pin_map.insert("clk".into(), PinRole::Clock);
    pin_map.insert("web".into(), PinRole::WriteEnable);
    for i in 0..kc + kr {
        pin_map.insert(format!("addr[{i}]"), PinRole::Addr(i));
    }
    for b in 0..ws {
        pin_map.insert(format!("din[{b}]"), PinRole::DataIn(b));
        pin_map.insert(format!("dout[{b}]"), PinRole::DataOut(b));
    }
    pin_map.insert("vdd".into(), PinRole::Supply);
    pin_map.insert("gnd".into(), PinRole::Ground);

    let mut design = BankDesign {
        config: cfg.clone(),
        geometry,
        spec: spec.clone(),
        netlists: std::mem::take(&mut cells.netlists),
        top_name,
        layouts: std::mem::take(&mut cells.layouts),
        bank_layout: LayoutCell::new("bank"),
        pin_map,
        sizing_report: std::mem::take(sizing),
        delay_chain_stages: read_stages,
        write_chain_stages: read_stages,
        rbl_dev_time: rbl_dev,
    };
    design.bank_layout = floorplan::floorplan_bank(&design, tech)?;
    Ok(design)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::{connectivity_check, emit_spice, flatten, hierarchical_device_count};
    use crate::sim::switch_eval;

    fn tech() -> Technology {
        Technology::generic45()
    }

    #[test]
    fn logical_effort_textbook_case() {
        let t = tech();
        let cin = t.unit_inverter_cin();
        let chain = size_driver(64.0 * cin, &t);
        assert_eq!(chain.stages, 3);
        let expected = t.le.tau * (12.0 + 3.0 * t.le.p_inv);
        assert!((chain.modeled_delay - expected).abs() / expected < 1e-12);
        for w in chain.widths.windows(2) {
            assert!((w[1] / w[0] - 4.0).abs() < 1e-9, "widths not geometric");
        }
    }

    #[test]
    fn unit_load_gives_single_stage() {
        let t = tech();
        let cin = t.unit_inverter_cin();
        let chain = size_driver(cin, &t);
        assert_eq!(chain.stages, 1);
        let noninv = size_driver_with_polarity(cin, &t, ChainPolarity::NonInverting);
        assert_eq!(noninv.stages, 2);
    }

    // Brute-force oracle: chosen delay within 10% of the exhaustive
    // minimum over 1..=8 stages.
    #[test]
    fn sizing_matches_exhaustive_minimum() {
        let t = tech();
        let cin = t.unit_inverter_cin();
        let mut h = 2.0f64;
        while h <= 1024.0 {
            let chain = size_driver(h * cin, &t);
            let brute = (1..=8)
                .map(|n| {
                    let f = h.powf(1.0 / n as f64);
                    t.le.tau * (n as f64 * f + n as f64 * t.le.p_inv)
                })
                .fold(f64::INFINITY, f64::min);
            assert!(
                chain.modeled_delay <= 1.10 * brute,
                "H={h}: {} vs brute {brute}",
                chain.modeled_delay
            );
            h *= 2.0;
        }
    }

    #[test]
    fn delay_chain_minimum_and_monotone() {
        let t = tech();
        let mut cells = CellBuilder::new(&t);
        let (_, stages0) = build_delay_chain(0.0, &t, &mut cells);
        assert_eq!(stages0, 2);
        let mut prev = 0;
        for k in 1..12 {
            let n = delay_chain_stages(k as f64 * 2e-11, &t);
            assert!(n >= prev);
            assert_eq!(n % 2, 0);
            prev = n;
        }
    }

    #[test]
    fn decoder_one_hot_exhaustive() {
        let t = tech();
        for k in 0..=4u32 {
            let mut cells = CellBuilder::new(&t);
            let name = build_decoder(k, &t, &mut cells);
            let dec = cells.netlists.get(&name).unwrap().clone();
            let flat = flatten(&dec, &cells.netlists).unwrap();
            for input in 0..(1u32 << k) {
                let mut assign = BTreeMap::new();
                for bit in 0..k {
                    assign.insert(format!("a[{bit}]"), (input >> bit) & 1 == 1);
                }
                let eval = switch_eval(&flat, &t, &assign);
                for j in 0..(1u32 << k) {
                    let expect = j == input;
                    assert_eq!(
                        eval.get(&format!("out[{j}]")),
                        Some(expect),
                        "k={k} input={input} out={j}"
                    );
                }
            }
        }
    }

    #[test]
    fn small_bank_builds_clean() {
        let t = tech();
        let cfg = MemoryConfig::new(4, 16, CellVariant::SiSiNn);
        let design = build_bank(&cfg, &t).unwrap();
        assert_eq!(design.geometry.rows * design.geometry.cols, 64);
        let findings = connectivity_check(design.top(), &design.netlists).unwrap();
        assert!(findings.is_empty(), "{findings:?}");
        let array = design.netlists.get("bit_array").unwrap();
        let n = hierarchical_device_count(array, &design.netlists).unwrap();
        assert_eq!(n, 2 * 64);
    }

    #[test]
    fn bank_netlist_deterministic() {
        let t = tech();
        let cfg = MemoryConfig::new(8, 32, CellVariant::OsOs);
        let d1 = build_bank(&cfg, &t).unwrap();
        let d2 = build_bank(&cfg, &t).unwrap();
        let s1 = emit_spice(d1.top(), &d1.netlists).unwrap();
        let s2 = emit_spice(d2.top(), &d2.netlists).unwrap();
        assert_eq!(s1, s2);
        assert_eq!(d1.sizing_report_text(), d2.sizing_report_text());
    }

    #[test]
    fn conditioner_polarity_per_variant() {
        let t = tech();
        // OS-OS keeps a precharge conditioner.
        let cfg = MemoryConfig::new(4, 16, CellVariant::OsOs);
        let d = build_bank(&cfg, &t).unwrap();
        assert!(d.netlists.contains("bl_precharge"));
        assert!(d.netlists.contains("read_ctl_pc"));
        // Si-Si NN predischarges and gains the extra EN inverter.
        let cfg = MemoryConfig::new(4, 16, CellVariant::SiSiNn);
        let d = build_bank(&cfg, &t).unwrap();
        assert!(d.netlists.contains("bl_predischarge"));
        let rctl = d.netlists.get("read_ctl_pd").unwrap();
        assert!(rctl.instances.iter().any(|i| i.name == "en_pd_inv"));
    }

    #[test]
    fn level_shifter_insertion_and_pins() {
        let t = tech();
        let mut cfg = MemoryConfig::new(4, 16, CellVariant::SiSiNn);
        cfg.wwl_level_shifter = true;
        let d = build_bank(&cfg, &t).unwrap();
        assert!(d.top().ports.contains(&"vwwl".to_string()));
        let ls_count = d
            .top()
            .instances
            .iter()
            .filter(|i| i.subckt == "wwl_level_shifter")
            .count();
        assert_eq!(ls_count, d.geometry.rows as usize);
        let findings = connectivity_check(d.top(), &d.netlists).unwrap();
        assert!(findings.is_empty(), "{findings:?}");
    }

    #[test]
    fn sram_bank_builds_clean() {
        let t = tech();
        let cfg = MemoryConfig::new(4, 32, CellVariant::Sram6t);
        let d = build_bank(&cfg, &t).unwrap();
        let findings = connectivity_check(d.top(), &d.netlists).unwrap();
        assert!(findings.is_empty(), "{findings:?}");
        let array = d.netlists.get("bit_array").unwrap();
        let n = hierarchical_device_count(array, &d.netlists).unwrap();
        assert_eq!(n, 6 * 128);
        assert!(d.netlists.contains("sram_precharge"));
        assert!(d.netlists.contains("sense_amp_diff"));
    }

    // The write path (wwl/wbl cone) and read path (rwl/rbl cone) may share
    // only cell storage nodes and supplies: the ports are isolated.
    #[test]
    fn dual_port_isolation() {
        let t = tech();
        let cfg = MemoryConfig::new(4, 16, CellVariant::SiSiNn);
        let d = build_bank(&cfg, &t).unwrap();
        let flat = flatten(d.top(), &d.netlists).unwrap();

        let mut adj: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for dev in &flat.devices {
            let nets: Vec<&str> = dev.terminals.iter().map(|s| s.as_str()).collect();
            for a in &nets {
                for b in &nets {
                    if a != b {
                        adj.entry(a).or_default().push(b);
                    }
                }
            }
        }
        let is_cut = |net: &str| -> bool {
            let base = net.rsplit('.').next().unwrap_or(net);
            base == "vdd" || base == "gnd" || base == "vwwl" || base == "sn"
        };
        let cone = |seeds: Vec<String>| -> std::collections::BTreeSet<String> {
            let mut seen: std::collections::BTreeSet<String> = Default::default();
            let mut stack = seeds;
            while let Some(n) = stack.pop() {
                if is_cut(&n) || !seen.insert(n.clone()) {
                    continue;
                }
                if let Some(neigh) = adj.get(n.as_str()) {
                    for m in neigh {
                        if !seen.contains(*m) && !is_cut(m) {
                            stack.push(m.to_string());
                        }
                    }
                }
            }
            seen
        };
        let write_seeds: Vec<String> = d
            .pin_map
            .iter()
            .filter(|(_, r)| {
                matches!(
                    r,
                    PinRole::ClockWrite | PinRole::WriteEnable | PinRole::AddrWrite(_) | PinRole::DataIn(_)
                )
            })
            .map(|(n, _)| n.clone())
            .collect();
        let read_seeds: Vec<String> = d
            .pin_map
            .iter()
            .filter(|(_, r)| {
                matches!(
                    r,
                    PinRole::ClockRead | PinRole::ReadEnable | PinRole::AddrRead(_) | PinRole::DataOut(_)
                )
            })
            .map(|(n, _)| n.clone())
            .collect();
        let wc = cone(write_seeds);
        let rc = cone(read_seeds);
        let shared: Vec<&String> = wc.intersection(&rc).collect();
        assert!(shared.is_empty(), "ports share nets: {shared:?}");
    }
}
