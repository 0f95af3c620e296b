//! Leaf-cell generation: gain cells, the 6T SRAM reference cell,
//! parametrized gates, write driver, sense amplifiers, bitline
//! conditioners, column-mux passgates, DFF, WWL level shifter and the
//! reference-voltage stub. Each generator produces a netlist subcircuit
//! and a design-rule-clean layout.
//!
//! Layout conventions (dbu, 1000/um):
//! * row pitch is 1000; gain cells are 620 wide, SRAM cells 900;
//! * read-port signals run on metal1 in the y band [230, 300], write-port
//!   signals in [630, 700] — peripheral tiles expose edge stubs in the
//!   same bands so rows connect by abutment;
//! * bitlines run vertically in metal2 (metal3 for the OS variant);
//! * every cell keeps half-rule margins at its boundary so R0 tiling is
//!   clean; SRAM rows share rails and tile mirrored (MX).
//!
//! Peripheral tile layouts are structurally representative: rails, device
//! motif, pin stubs and drop pads are real and rule-clean, while exact
//! transistor sizing lives in the netlist.

use std::collections::BTreeMap;

use crate::config::CellVariant;
use crate::layout::{layer_key, LayoutCell, Rect};
use crate::netlist::{flatten, Device, Library, Subckt};
use crate::tech::Technology;

pub const CELL_W: i64 = 620;
pub const CELL_H: i64 = 1000;
pub const SRAM_W: i64 = 900;

/// y bands shared between array cells and peripheral tiles.
pub const READ_BAND: (i64, i64) = (230, 300);
pub const WRITE_BAND: (i64, i64) = (630, 700);
pub const SRAM_WL_BAND: (i64, i64) = (485, 585);
/// Mid-tile band where bus-drop landing pads sit.
pub const PAD_BAND: (i64, i64) = (380, 480);

/// Device models used by peripheral logic. High-Vt NMOS keeps the
/// standby leakage of the (large) dual-port periphery negligible next to
/// the SRAM reference array.
pub const PERIPH_NMOS: &str = "nmos_si_hvt";
pub const PERIPH_PMOS: &str = "pmos_si";
pub const CELL_NMOS: &str = "nmos_si";
pub const CELL_PMOS: &str = "pmos_si";
pub const OS_NMOS: &str = "nmos_os";

const L: f64 = 0.05;
const L_OS: f64 = 0.06;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RwlPolarity {
    ActiveLow,
    ActiveHigh,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Conditioning {
    Precharge,
    Predischarge,
}

/// Per-variant cell structure: devices, read wordline polarity and bitline
/// conditioning style.
#[derive(Debug, Clone)]
pub struct CellVariantSpec {
    pub variant: CellVariant,
    pub write_device: &'static str,
    pub read_device: &'static str,
    pub rwl_polarity: RwlPolarity,
    pub read_conditioning: Conditioning,
}

impl CellVariantSpec {
    pub fn for_variant(variant: CellVariant) -> CellVariantSpec {
        match variant {
            CellVariant::SiSiNn => CellVariantSpec {
                variant,
                write_device: CELL_NMOS,
                read_device: CELL_NMOS,
                rwl_polarity: RwlPolarity::ActiveLow,
                read_conditioning: Conditioning::Predischarge,
            },
            CellVariant::SiSiNp => CellVariantSpec {
                variant,
                write_device: CELL_NMOS,
                read_device: CELL_PMOS,
                rwl_polarity: RwlPolarity::ActiveHigh,
                read_conditioning: Conditioning::Predischarge,
            },
            CellVariant::OsOs => CellVariantSpec {
                variant,
                write_device: OS_NMOS,
                read_device: OS_NMOS,
                rwl_polarity: RwlPolarity::ActiveLow,
                read_conditioning: Conditioning::Precharge,
            },
            CellVariant::Sram6t => CellVariantSpec {
                variant,
                write_device: CELL_NMOS,
                read_device: CELL_NMOS,
                rwl_polarity: RwlPolarity::ActiveHigh,
                read_conditioning: Conditioning::Precharge,
            },
        }
    }

    pub fn cell_name(&self) -> String {
        match self.variant {
            CellVariant::Sram6t => "cell_sram6t".to_string(),
            v => format!("cell_{}", v.keyword()),
        }
    }

    /// Channel length of the cell devices.
    pub fn cell_l(&self) -> f64 {
        if self.variant == CellVariant::OsOs {
            L_OS
        } else {
            L
        }
    }

    /// Layer carrying the bitlines in this variant's array.
    pub fn bitline_layer(&self) -> &'static str {
        if self.variant == CellVariant::OsOs {
            "metal3"
        } else {
            "metal2"
        }
    }

    pub fn cell_w(&self) -> i64 {
        if self.variant == CellVariant::Sram6t {
            SRAM_W
        } else {
            CELL_W
        }
    }
}

pub struct GeneratedCell {
    pub subckt: Subckt,
    pub layout: LayoutCell,
}

// ---------------------------------------------------------------- netlists

/// 2T gain cell. Write MOS: gate=wwl, drain=sn, source=wbl. Read MOS:
/// gate=sn, drain=rbl, source=rwl. A vdd port is added only when the read
/// device is PMOS (bulk tie).
pub fn gain_cell_subckt(spec: &CellVariantSpec, tech: &Technology) -> Subckt {
    let wm = tech.device(spec.write_device).expect("write device");
    let rm = tech.device(spec.read_device).expect("read device");
    let l = spec.cell_l();
    let mut ports: Vec<&str> = vec!["wwl", "wbl", "rwl", "rbl"];
    let read_is_pmos = rm.channel.is_pmos();
    if read_is_pmos {
        ports.push("vdd");
    }
    ports.push("gnd");
    let mut cell = Subckt::new(&spec.cell_name(), &ports);
    cell.add_device(Device::mos("w", "sn", "wwl", "wbl", "gnd", spec.write_device, wm.min_w, l));
    let rbulk = if read_is_pmos { "vdd" } else { "gnd" };
    cell.add_device(Device::mos("r", "rbl", "sn", "rwl", rbulk, spec.read_device, rm.min_w, l));
    cell
}

/// 6T SRAM cell: cross-coupled inverters plus two NMOS access devices,
/// differential bl/bl_b, single wordline.
pub fn sram6t_subckt() -> Subckt {
    let mut cell = Subckt::new("cell_sram6t", &["wl", "bl", "bl_b", "vdd", "gnd"]);
    cell.add_device(Device::mos("pd_a", "q", "q_b", "gnd", "gnd", CELL_NMOS, 0.15, L));
    cell.add_device(Device::mos("pu_a", "q", "q_b", "vdd", "vdd", CELL_PMOS, 0.1, L));
    cell.add_device(Device::mos("pd_b", "q_b", "q", "gnd", "gnd", CELL_NMOS, 0.15, L));
    cell.add_device(Device::mos("pu_b", "q_b", "q", "vdd", "vdd", CELL_PMOS, 0.1, L));
    cell.add_device(Device::mos("acc_a", "bl", "wl", "q", "gnd", CELL_NMOS, 0.1, L));
    cell.add_device(Device::mos("acc_b", "bl_b", "wl", "q_b", "gnd", CELL_NMOS, 0.1, L));
    cell
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateKind {
    Inv,
    Nand2,
    Nand3,
    And2,
}

pub fn gate_name(kind: GateKind, drive_w: f64) -> String {
    let nm = (drive_w * 1000.0).round() as i64;
    match kind {
        GateKind::Inv => format!("inv_w{nm}"),
        GateKind::Nand2 => format!("nand2_w{nm}"),
        GateKind::Nand3 => format!("nand3_w{nm}"),
        GateKind::And2 => format!("and2_w{nm}"),
    }
}

/// Standard CMOS gate. `drive_w` is the equivalent-inverter NMOS width;
/// PMOS widths scale by gamma, series NMOS stacks by the fan-in.
pub fn gate_subckt(kind: GateKind, drive_w: f64, tech: &Technology) -> Subckt {
    let gamma = tech.le.gamma;
    let wp = gamma * drive_w;
    match kind {
        GateKind::Inv => {
            let mut g = Subckt::new(&gate_name(kind, drive_w), &["in", "out", "vdd", "gnd"]);
            g.add_device(Device::mos("n", "out", "in", "gnd", "gnd", PERIPH_NMOS, drive_w, L));
            g.add_device(Device::mos("p", "out", "in", "vdd", "vdd", PERIPH_PMOS, wp, L));
            g
        }
        GateKind::Nand2 => {
            let wn = 2.0 * drive_w;
            let mut g = Subckt::new(&gate_name(kind, drive_w), &["a", "b", "out", "vdd", "gnd"]);
            g.add_device(Device::mos("na", "out", "a", "x1", "gnd", PERIPH_NMOS, wn, L));
            g.add_device(Device::mos("nb", "x1", "b", "gnd", "gnd", PERIPH_NMOS, wn, L));
            g.add_device(Device::mos("pa", "out", "a", "vdd", "vdd", PERIPH_PMOS, wp, L));
            g.add_device(Device::mos("pb", "out", "b", "vdd", "vdd", PERIPH_PMOS, wp, L));
            g
        }
        GateKind::Nand3 => {
            let wn = 3.0 * drive_w;
            let mut g =
                Subckt::new(&gate_name(kind, drive_w), &["a", "b", "c", "out", "vdd", "gnd"]);
            g.add_device(Device::mos("na", "out", "a", "x1", "gnd", PERIPH_NMOS, wn, L));
            g.add_device(Device::mos("nb", "x1", "b", "x2", "gnd", PERIPH_NMOS, wn, L));
            g.add_device(Device::mos("nc", "x2", "c", "gnd", "gnd", PERIPH_NMOS, wn, L));
            for (name, gate) in [("pa", "a"), ("pb", "b"), ("pc", "c")] {
                g.add_device(Device::mos(name, "out", gate, "vdd", "vdd", PERIPH_PMOS, wp, L));
            }
            g
        }
        GateKind::And2 => {
            let wn = 2.0 * drive_w;
            let mut g = Subckt::new(&gate_name(kind, drive_w), &["a", "b", "out", "vdd", "gnd"]);
            g.add_device(Device::mos("na", "nout", "a", "x1", "gnd", PERIPH_NMOS, wn, L));
            g.add_device(Device::mos("nb", "x1", "b", "gnd", "gnd", PERIPH_NMOS, wn, L));
            g.add_device(Device::mos("pa", "nout", "a", "vdd", "vdd", PERIPH_PMOS, wp, L));
            g.add_device(Device::mos("pb", "nout", "b", "vdd", "vdd", PERIPH_PMOS, wp, L));
            g.add_device(Device::mos("in", "out", "nout", "gnd", "gnd", PERIPH_NMOS, drive_w, L));
            g.add_device(Device::mos("ip", "out", "nout", "vdd", "vdd", PERIPH_PMOS, wp, L));
            g
        }
    }
}

/// Single-ended tri-state write driver: din/en in, wbl out, no bl_b side.
/// en=0 leaves wbl undriven.
pub fn write_driver_subckt(tech: &Technology) -> Subckt {
    let gamma = tech.le.gamma;
    let mut g = Subckt::new("write_driver", &["din", "en", "wbl", "vdd", "gnd"]);
    g.add_device(Device::mos("ni", "din_b", "din", "gnd", "gnd", PERIPH_NMOS, 0.15, L));
    g.add_device(Device::mos("pi", "din_b", "din", "vdd", "vdd", PERIPH_PMOS, 0.15 * gamma, L));
    g.add_device(Device::mos("ne", "en_b", "en", "gnd", "gnd", PERIPH_NMOS, 0.15, L));
    g.add_device(Device::mos("pe", "en_b", "en", "vdd", "vdd", PERIPH_PMOS, 0.15 * gamma, L));
    // Output stage: conducts only when en=1.
    g.add_device(Device::mos("po1", "x_up", "en_b", "vdd", "vdd", PERIPH_PMOS, 0.8, L));
    g.add_device(Device::mos("po2", "wbl", "din_b", "x_up", "vdd", PERIPH_PMOS, 0.8, L));
    g.add_device(Device::mos("no1", "wbl", "din_b", "x_dn", "gnd", PERIPH_NMOS, 0.4, L));
    g.add_device(Device::mos("no2", "x_dn", "en", "gnd", "gnd", PERIPH_NMOS, 0.4, L));
    g
}

/// Single-ended latch comparator: one input tied to the reference voltage.
pub fn sense_amp_subckt(tech: &Technology) -> Subckt {
    let gamma = tech.le.gamma;
    let w_in = 0.3;
    let mut g = Subckt::new("sense_amp", &["rbl", "vref", "en", "dout", "vdd", "gnd"]);
    g.add_device(Device::mos("nin_a", "out_a", "rbl", "tail", "gnd", PERIPH_NMOS, w_in, L));
    g.add_device(Device::mos("nin_b", "out_b", "vref", "tail", "gnd", PERIPH_NMOS, w_in, L));
    g.add_device(Device::mos("ntail", "tail", "en", "gnd", "gnd", PERIPH_NMOS, 2.0 * w_in, L));
    g.add_device(Device::mos("pl_a", "out_a", "out_b", "vdd", "vdd", PERIPH_PMOS, w_in * gamma, L));
    g.add_device(Device::mos("pl_b", "out_b", "out_a", "vdd", "vdd", PERIPH_PMOS, w_in * gamma, L));
    g.add_device(Device::mos("no", "dout", "out_b", "gnd", "gnd", PERIPH_NMOS, 0.2, L));
    g.add_device(Device::mos("po", "dout", "out_b", "vdd", "vdd", PERIPH_PMOS, 0.2 * gamma, L));
    g
}

/// Differential twin for the SRAM reference bank.
pub fn sense_amp_diff_subckt(tech: &Technology) -> Subckt {
    let mut g = sense_amp_subckt(tech);
    g.name = "sense_amp_diff".to_string();
    g.ports = vec!["bl".into(), "bl_b".into(), "en".into(), "dout".into(), "vdd".into(), "gnd".into()];
    for d in &mut g.devices {
        for t in &mut d.terminals {
            if t == "rbl" {
                *t = "bl".to_string();
            } else if t == "vref" {
                *t = "bl_b".to_string();
            }
        }
    }
    g.internal_nets.remove("bl");
    g.internal_nets.remove("bl_b");
    g
}

/// Bitline conditioner. Precharge: PMOS to vdd, active-low en_b.
/// Predischarge: NMOS to gnd, active-high en.
pub fn bl_conditioner_subckt(kind: Conditioning) -> Subckt {
    match kind {
        Conditioning::Precharge => {
            let mut g = Subckt::new("bl_precharge", &["bl", "en_b", "vdd"]);
            g.add_device(Device::mos("p", "bl", "en_b", "vdd", "vdd", PERIPH_PMOS, 0.3, L));
            g
        }
        Conditioning::Predischarge => {
            let mut g = Subckt::new("bl_predischarge", &["bl", "en", "gnd"]);
            g.add_device(Device::mos("n", "bl", "en", "gnd", "gnd", PERIPH_NMOS, 0.3, L));
            g
        }
    }
}

/// Differential precharge pair for the SRAM bank.
pub fn sram_precharge_subckt() -> Subckt {
    let mut g = Subckt::new("sram_precharge", &["bl", "bl_b", "en_b", "vdd"]);
    g.add_device(Device::mos("pa", "bl", "en_b", "vdd", "vdd", PERIPH_PMOS, 0.3, L));
    g.add_device(Device::mos("pb", "bl_b", "en_b", "vdd", "vdd", PERIPH_PMOS, 0.3, L));
    g
}

/// WWL level shifter: cross-coupled PMOS pair on the boosted vwwl domain,
/// dual NMOS pull-downs, plus the input inverter. out swings 0..vwwl.
pub fn level_shifter_subckt(tech: &Technology) -> Subckt {
    let gamma = tech.le.gamma;
    let mut g = Subckt::new("wwl_level_shifter", &["in", "out", "vdd", "vwwl", "gnd"]);
    g.add_device(Device::mos("ni", "in_b", "in", "gnd", "gnd", PERIPH_NMOS, 0.15, L));
    g.add_device(Device::mos("pi", "in_b", "in", "vdd", "vdd", PERIPH_PMOS, 0.15 * gamma, L));
    g.add_device(Device::mos("n1", "out_b", "in", "gnd", "gnd", PERIPH_NMOS, 0.3, L));
    g.add_device(Device::mos("n2", "out", "in_b", "gnd", "gnd", PERIPH_NMOS, 0.3, L));
    g.add_device(Device::mos("p1", "out_b", "out", "vwwl", "vwwl", PERIPH_PMOS, 0.3, L));
    g.add_device(Device::mos("p2", "out", "out_b", "vwwl", "vwwl", PERIPH_PMOS, 0.3, L));
    g
}

/// Transmission gate column-mux element.
pub fn mux_passgate_subckt() -> Subckt {
    let mut g = Subckt::new("mux_passgate", &["a", "b", "sel", "sel_b", "vdd", "gnd"]);
    g.add_device(Device::mos("n", "a", "sel", "b", "gnd", PERIPH_NMOS, 0.3, L));
    g.add_device(Device::mos("p", "a", "sel_b", "b", "vdd", PERIPH_PMOS, 0.6, L));
    g
}

/// Master-slave transmission-gate DFF built from inverter primitives.
/// Requires the w=0.15 inverter in the library.
pub fn dff_subckt(tech: &Technology, lib: &mut Library) -> Subckt {
    let inv = ensure_gate(lib, GateKind::Inv, 0.15, tech);
    let mut g = Subckt::new("dff", &["d", "clk", "q", "vdd", "gnd"]);
    g.add_instance("clkinv", &inv, &["clk", "clk_b", "vdd", "gnd"]);
    g.add_instance("clkbuf", &inv, &["clk_b", "clk_i", "vdd", "gnd"]);
    // Master latch: samples while clk=0, holds while clk=1.
    tgate(&mut g, "tg_in", "d", "m_in", "clk_b", "clk_i");
    g.add_instance("m_fwd", &inv, &["m_in", "m_mid", "vdd", "gnd"]);
    g.add_instance("m_fb", &inv, &["m_mid", "m_bk", "vdd", "gnd"]);
    tgate(&mut g, "tg_m", "m_bk", "m_in", "clk_i", "clk_b");
    // Slave latch: transparent while clk=1.
    tgate(&mut g, "tg_s", "m_mid", "s_in", "clk_i", "clk_b");
    g.add_instance("s_fwd", &inv, &["s_in", "q", "vdd", "gnd"]);
    g.add_instance("s_fb", &inv, &["q", "s_bk", "vdd", "gnd"]);
    tgate(&mut g, "tg_sb", "s_bk", "s_in", "clk_b", "clk_i");
    g
}

fn tgate(g: &mut Subckt, name: &str, a: &str, b: &str, ng: &str, pg: &str) {
    g.add_device(Device::mos(&format!("{name}_n"), a, ng, b, "gnd", PERIPH_NMOS, 0.15, L));
    g.add_device(Device::mos(&format!("{name}_p"), a, pg, b, "vdd", PERIPH_PMOS, 0.3, L));
}

/// Resistor-divider reference stub: vref = vref_ratio * vdd. The divider
/// is deliberately weak so its bias current stays in the leakage noise.
pub fn vref_stub_subckt(tech: &Technology) -> Subckt {
    let ratio = tech.cell_params.vref_ratio;
    let r_total = 1e9;
    let mut g = Subckt::new("vref_stub", &["vref", "vdd", "gnd"]);
    g.add_device(Device::res("top", "vdd", "vref", r_total * (1.0 - ratio)));
    g.add_device(Device::res("bot", "vref", "gnd", r_total * ratio));
    g
}

/// Reference level produced by the stub.
pub fn vref_level(tech: &Technology, vdd: f64) -> f64 {
    tech.vref(vdd)
}

/// Gate capacitance presented by `net` inside `cell` (hierarchy expanded).
pub fn input_cap(cell: &Subckt, lib: &Library, net: &str, tech: &Technology) -> f64 {
    let flat = flatten(cell, lib).expect("valid hierarchy");
    let mut cap = 0.0;
    for d in &flat.devices {
        if d.kind == crate::netlist::DeviceKind::Mos && d.terminals[1] == net {
            if let Ok(m) = tech.device(&d.model) {
                cap += m.cgate_per_um * d.mos_w();
            }
        }
    }
    cap
}

fn ensure_gate(lib: &mut Library, kind: GateKind, w: f64, tech: &Technology) -> String {
    let name = gate_name(kind, w);
    if !lib.contains(&name) {
        lib.add(gate_subckt(kind, w, tech));
    }
    name
}

// ----------------------------------------------------------------- layouts

struct Painter<'t> {
    cell: LayoutCell,
    tech: &'t Technology,
}

impl<'t> Painter<'t> {
    fn new(tech: &'t Technology, name: &str) -> Painter<'t> {
        Painter {
            cell: LayoutCell::new(name),
            tech,
        }
    }

    fn rect(&mut self, layer: &str, x0: i64, y0: i64, x1: i64, y1: i64) {
        self.cell.add_rect(layer_key(self.tech, layer), Rect::new(x0, y0, x1, y1));
    }

    fn pin(&mut self, name: &str, layer: &str, x0: i64, y0: i64, x1: i64, y1: i64) {
        self.cell
            .add_pin(name, layer_key(self.tech, layer), Rect::new(x0, y0, x1, y1));
    }

    /// Contact cut centered at (cx, cy) — caller provides the landing pads.
    fn cut(&mut self, layer: &str, cx: i64, cy: i64) {
        self.rect(layer, cx - 30, cy - 30, cx + 30, cy + 30);
    }

    fn done(mut self, w: i64, h: i64) -> LayoutCell {
        self.cell.boundary = Rect::new(0, 0, w, h);
        self.cell
    }
}

/// Si gain-cell layout. The NP variant shifts the read device up to make
/// room for its well and adds the vdd bulk pin.
pub fn gain_cell_layout(spec: &CellVariantSpec, tech: &Technology) -> LayoutCell {
    if spec.variant == CellVariant::OsOs {
        return os_gain_cell_layout(spec, tech);
    }
    let np = spec.variant == CellVariant::SiSiNp;
    let mut p = Painter::new(tech, &spec.cell_name());

    // Vertical bitlines (metal2) and horizontal wordline rails (metal1).
    p.pin("wbl", "metal2", 50, 0, 120, CELL_H);
    p.pin("rbl", "metal2", 510, 0, 580, CELL_H);
    p.pin("rwl", "metal1", 0, READ_BAND.0, CELL_W, READ_BAND.1);
    p.pin("wwl", "metal1", 0, WRITE_BAND.0, CELL_W, WRITE_BAND.1);

    // Read transistor: horizontal diff low in the cell, vertical poly gate.
    let dy = 0;
    p.rect("diff", 200, 50, 480, 150);
    if np {
        p.rect("nwell", 0, 0, CELL_W, 710);
        p.pin("vdd", "metal1", 440, 860, 560, 930);
    }
    // Source strap into the RWL rail.
    p.cut("contact", 250, 100 + dy);
    p.rect("metal1", 200, 50 + dy, 300, READ_BAND.1);
    // Drain pad out to RBL (via1 under the bitline).
    p.cut("contact", 430, 100 + dy);
    p.rect("metal1", 380, 50 + dy, 575, 150 + dy);
    p.rect("via1", 495, 70 + dy, 555, 130 + dy);
    p.rect("metal2", 475, 50 + dy, 575, 150 + dy);
    // Read gate: strip up to the storage-node pickup pad.
    p.rect("poly", 345, dy, 395, 460);
    p.rect("poly", 295, 400, 395, 500);
    p.cut("contact", 345, 450);
    p.rect("metal1", 295, 400, 395, 500);
    p.rect("via1", 315, 420, 375, 480);
    p.rect("metal2", 295, 400, 395, 500);

    // Storage-node metal2 vertical connecting read gate to write drain.
    p.rect("metal2", 280, 400, 350, 880);

    // Write transistor: diff high in the cell.
    p.rect("diff", 40, 780, 360, 880);
    // Gate pickup into the WWL rail.
    p.rect("poly", 120, 600, 220, 700);
    p.rect("poly", 170, 680, 220, 930);
    p.cut("contact", 170, 650);
    p.rect("metal1", 120, 600, 220, 700);
    // Source pad to WBL.
    p.cut("contact", 100, 830);
    p.rect("metal1", 50, 780, 150, 880);
    p.rect("via1", 70, 800, 130, 860);
    p.rect("metal2", 50, 780, 150, 880);
    // Drain pad to the storage node.
    p.cut("contact", 300, 830);
    p.rect("metal1", 250, 780, 350, 880);
    p.rect("via1", 270, 800, 330, 860);
    p.rect("metal2", 250, 780, 350, 880);

    p.done(CELL_W, CELL_H)
}

/// OS gain cell: both devices drawn between the tight-pitch metals
/// (os_channel/os_gate, via2, metal2 rails, metal3 bitlines). The only
/// silicon shapes are one small via-landing pad.
fn os_gain_cell_layout(spec: &CellVariantSpec, tech: &Technology) -> LayoutCell {
    let mut p = Painter::new(tech, &spec.cell_name());

    p.pin("wbl", "metal3", 40, 0, 110, CELL_H);
    p.pin("rbl", "metal3", 510, 0, 580, CELL_H);
    p.pin("rwl", "metal2", 0, READ_BAND.0, CELL_W, READ_BAND.1);
    p.pin("wwl", "metal2", 0, WRITE_BAND.0, CELL_W, WRITE_BAND.1);

    // Silicon footprint: a single landing pad in the corner.
    p.rect("diff", 40, 40, 180, 180);
    p.cut("contact", 110, 110);
    p.pin("gnd", "metal1", 60, 60, 180, 180);

    // Read device.
    p.rect("os_channel", 260, 120, 520, 220);
    p.rect("os_gate", 345, 70, 395, 500);
    p.rect("os_gate", 220, 400, 400, 500);
    p.rect("via2", 250, 420, 310, 480);
    p.rect("metal3", 230, 400, 330, 500);
    // Source tap to the RWL rail (metal2).
    p.rect("via2", 280, 140, 340, 200);
    p.rect("metal2", 260, 120, 360, READ_BAND.1);
    // Drain tap to RBL (metal3).
    p.rect("via2", 440, 140, 500, 200);
    p.rect("metal3", 420, 120, 540, 220);

    // Storage-node metal3 vertical.
    p.rect("metal3", 240, 400, 310, 880);

    // Write device. The gate pickup sits between WBL and the storage-node
    // vertical so neither metal3 line crosses its via.
    p.rect("os_channel", 40, 780, 360, 880);
    p.rect("os_gate", 225, 680, 275, 930);
    p.rect("os_gate", 100, 600, 275, 700);
    p.rect("via2", 130, 620, 190, 680);
    p.rect("metal2", 110, 600, 210, 700);
    // Source tap to WBL (metal3).
    p.rect("via2", 60, 800, 120, 860);
    p.rect("metal3", 40, 780, 140, 880);
    // Drain tap to the storage node, clear of the gate strip.
    p.rect("via2", 280, 800, 340, 860);
    p.rect("metal3", 260, 780, 360, 880);

    p.done(CELL_W, CELL_H)
}

/// 6T SRAM cell. One NMOS bar carries access and pull-down devices, the
/// PMOS pair sits in a full-width well, and the wordline is a poly stripe
/// bridged by a metal1 rail (stubs abut across columns). Cross-couple
/// wiring is carried by the netlist; the layout stays rule-clean and
/// structurally representative, like the peripheral tiles.
pub fn sram6t_layout(tech: &Technology) -> LayoutCell {
    let mut p = Painter::new(tech, "cell_sram6t");

    p.pin("bl", "metal2", 70, 0, 140, CELL_H);
    p.pin("bl_b", "metal2", 760, 0, 830, CELL_H);
    p.pin("gnd", "metal1", 40, 40, SRAM_W - 40, 110);
    p.pin("vdd", "metal1", 40, 890, SRAM_W - 40, 960);

    // NMOS bar: bl | acc_a | q | pd_a | gnd | pd_b | q_b | acc_b | bl_b.
    p.rect("diff", 60, 200, 840, 300);
    for cx in [120, 300, 480, 640, 790] {
        p.cut("contact", cx, 250);
    }
    // Access gates joined to the wordline poly stubs at the cell edges.
    p.rect("poly", 180, 150, 230, 570);
    p.rect("poly", 690, 150, 740, 570);
    p.rect("poly", 0, 500, 240, 570);
    p.rect("poly", 680, 500, SRAM_W, 570);
    // Inverter gates cross both diffs.
    p.rect("poly", 350, 150, 400, 850);
    p.rect("poly", 520, 150, 570, 850);

    // Wordline metal1 rail bridging the poly stubs.
    p.pin("wl", "metal1", 0, SRAM_WL_BAND.0, SRAM_W, SRAM_WL_BAND.1);
    for px in [80, 700] {
        p.rect("poly", px, 485, px + 120, 585);
        p.cut("contact", px + 60, 535);
    }

    // PMOS pair in the well.
    p.rect("nwell", 0, 600, SRAM_W, 1000);
    p.rect("diff", 200, 700, 700, 800);
    for cx in [250, 450, 650] {
        p.cut("contact", cx, 750);
    }
    // vdd strap over the center PMOS source; gnd strap below.
    p.rect("metal1", 400, 700, 500, 960);
    p.rect("metal1", 430, 40, 530, 320);

    // Bitline taps.
    p.rect("metal1", 70, 200, 170, 320);
    p.rect("via1", 90, 230, 150, 290);
    p.rect("metal2", 60, 210, 180, 310);
    p.rect("metal1", 740, 200, 840, 320);
    p.rect("via1", 760, 230, 820, 290);
    p.rect("metal2", 740, 210, 840, 310);

    p.done(SRAM_W, CELL_H)
}

/// Which stub band a peripheral tile exposes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TileSide {
    WritePort,
    ReadPort,
    SramPort,
}

impl TileSide {
    pub fn band(self) -> (i64, i64) {
        match self {
            TileSide::WritePort => WRITE_BAND,
            TileSide::ReadPort => READ_BAND,
            TileSide::SramPort => SRAM_WL_BAND,
        }
    }

    /// Mid-band used for bus-drop pads; kept clear of the stub band.
    pub fn pad_band(self) -> (i64, i64) {
        match self {
            TileSide::SramPort => (230, 330),
            _ => PAD_BAND,
        }
    }
}

/// Structurally representative logic tile: inset rails, a FEOL motif with
/// proper gate endcaps, in/out edge stubs on the port band, and `n_pads`
/// metal1 landing pads in the mid band for bus drops (pins `pad0`..).
pub fn logic_tile(
    tech: &Technology,
    name: &str,
    w: i64,
    side: TileSide,
    has_in: bool,
    has_out: bool,
    n_pads: usize,
) -> LayoutCell {
    assert!(w >= 620, "tile too narrow: {w}");
    let mut p = Painter::new(tech, name);
    let (b0, b1) = side.band();

    p.pin("gnd", "metal1", 40, 40, w - 40, 110);
    p.pin("vdd", "metal1", 40, 890, w - 40, 960);

    // FEOL motif: one gate column per 600 dbu of width. The well spans the
    // full tile so abutting wells merge.
    p.rect("nwell", 0, 560, w, CELL_H);
    let cols = ((w - 400) / 600).max(1);
    for c in 0..cols {
        let x = 200 + c * 600;
        p.rect("diff", x, 180, x + 320, 280);
        p.rect("diff", x + 40, 640, x + 260, 740);
        p.rect("poly", x + 135, 130, x + 185, 330);
        p.rect("poly", x + 115, 590, x + 165, 790);
    }

    // Port-band stubs and connector.
    if has_in {
        p.pin("in", "metal1", 0, b0, 70, b1);
        p.rect("metal1", 0, b0, 240, b1);
    }
    if has_out {
        p.pin("out", "metal1", w - 70, b0, w, b1);
        p.rect("metal1", w - 240, b0, w, b1);
    }

    // Plain metal1 drop pads in the mid band (bus verticals land here).
    let (pb0, pb1) = side.pad_band();
    for i in 0..n_pads {
        let x = 60 + i as i64 * 180;
        assert!(x + 100 <= w - 40, "too many pads for tile width {w}");
        p.pin(&format!("pad{i}"), "metal1", x, pb0, x + 100, pb1);
    }

    p.done(w, CELL_H)
}

// ------------------------------------------------------- spec-facing API

pub fn gen_gain_cell(spec: &CellVariantSpec, tech: &Technology) -> GeneratedCell {
    GeneratedCell {
        subckt: gain_cell_subckt(spec, tech),
        layout: gain_cell_layout(spec, tech),
    }
}

pub fn gen_sram6t(tech: &Technology) -> GeneratedCell {
    GeneratedCell {
        subckt: sram6t_subckt(),
        layout: sram6t_layout(tech),
    }
}

pub fn gen_gate(kind: GateKind, drive_w: f64, tech: &Technology) -> GeneratedCell {
    let subckt = gate_subckt(kind, drive_w, tech);
    let layout = logic_tile(tech, &subckt.name.clone(), 620, TileSide::WritePort, true, true, 1);
    GeneratedCell { subckt, layout }
}

pub fn gen_write_driver(tech: &Technology) -> GeneratedCell {
    let subckt = write_driver_subckt(tech);
    let layout = logic_tile(tech, "write_driver", 620, TileSide::WritePort, false, false, 2);
    GeneratedCell { subckt, layout }
}

pub fn gen_sense_amp(tech: &Technology) -> GeneratedCell {
    let subckt = sense_amp_subckt(tech);
    let layout = logic_tile(tech, "sense_amp", 620, TileSide::ReadPort, false, true, 3);
    GeneratedCell { subckt, layout }
}

pub fn gen_bl_conditioner(kind: Conditioning, tech: &Technology) -> GeneratedCell {
    let subckt = bl_conditioner_subckt(kind);
    let layout = logic_tile(tech, &subckt.name.clone(), 620, TileSide::ReadPort, false, false, 2);
    GeneratedCell { subckt, layout }
}

pub fn gen_level_shifter(tech: &Technology) -> GeneratedCell {
    let subckt = level_shifter_subckt(tech);
    let layout = logic_tile(tech, "wwl_level_shifter", 620, TileSide::WritePort, true, true, 1);
    GeneratedCell { subckt, layout }
}

pub fn gen_dff(tech: &Technology, lib: &mut Library) -> GeneratedCell {
    let subckt = dff_subckt(tech, lib);
    let layout = logic_tile(tech, "dff", 620, TileSide::WritePort, false, false, 3);
    GeneratedCell { subckt, layout }
}

pub fn gen_vref_stub(tech: &Technology) -> GeneratedCell {
    let subckt = vref_stub_subckt(tech);
    let mut layout = logic_tile(tech, "vref_stub", 620, TileSide::ReadPort, false, true, 1);
    // Decorative serpentine for the divider.
    layout.add_rect(layer_key(tech, "metal3"), Rect::new(150, 560, 470, 660));
    layout.add_rect(layer_key(tech, "metal3"), Rect::new(150, 760, 470, 860));
    GeneratedCell { subckt, layout }
}

/// Cached generator: netlists and layouts shared across a bank build.
pub struct CellBuilder<'t> {
    pub tech: &'t Technology,
    pub netlists: Library,
    pub layouts: BTreeMap<String, LayoutCell>,
}

impl<'t> CellBuilder<'t> {
    pub fn new(tech: &'t Technology) -> CellBuilder<'t> {
        CellBuilder {
            tech,
            netlists: Library::new(),
            layouts: BTreeMap::new(),
        }
    }

    fn insert(&mut self, cell: GeneratedCell) -> String {
        let name = cell.subckt.name.clone();
        if !self.netlists.contains(&name) {
            self.netlists.add(cell.subckt);
            self.layouts.insert(name.clone(), cell.layout);
        }
        name
    }

    pub fn gain_cell(&mut self, spec: &CellVariantSpec) -> String {
        if spec.variant == CellVariant::Sram6t {
            self.insert(gen_sram6t(self.tech))
        } else {
            self.insert(gen_gain_cell(spec, self.tech))
        }
    }

    pub fn gate(&mut self, kind: GateKind, w: f64, side: TileSide) -> String {
        let subckt = gate_subckt(kind, w, self.tech);
        let name = subckt.name.clone();
        if !self.netlists.contains(&name) {
            let pads = if matches!(kind, GateKind::And2 | GateKind::Nand2) { 1 } else { 1 };
            let layout = logic_tile(self.tech, &name, 620, side, true, true, pads);
            self.netlists.add(subckt);
            self.layouts.insert(name, gen_named(layout));
        }
        gate_name(kind, w)
    }

    pub fn write_driver(&mut self) -> String {
        self.insert(gen_write_driver(self.tech))
    }

    pub fn sense_amp(&mut self) -> String {
        self.insert(gen_sense_amp(self.tech))
    }

    pub fn sense_amp_diff(&mut self) -> String {
        let subckt = sense_amp_diff_subckt(self.tech);
        let layout =
            logic_tile(self.tech, "sense_amp_diff", 620, TileSide::ReadPort, false, true, 3);
        self.insert(GeneratedCell { subckt, layout })
    }

    pub fn bl_conditioner(&mut self, kind: Conditioning) -> String {
        self.insert(gen_bl_conditioner(kind, self.tech))
    }

    pub fn sram_precharge(&mut self) -> String {
        let subckt = sram_precharge_subckt();
        let layout = logic_tile(self.tech, "sram_precharge", 620, TileSide::ReadPort, false, false, 2);
        self.insert(GeneratedCell { subckt, layout })
    }

    pub fn level_shifter(&mut self) -> String {
        self.insert(gen_level_shifter(self.tech))
    }

    pub fn mux_passgate(&mut self) -> String {
        let subckt = mux_passgate_subckt();
        let layout = logic_tile(self.tech, "mux_passgate", 620, TileSide::ReadPort, false, false, 2);
        self.insert(GeneratedCell { subckt, layout })
    }

    pub fn dff(&mut self) -> String {
        if !self.netlists.contains("dff") {
            let cell = gen_dff(self.tech, &mut self.netlists);
            // The inverter dependency needs a layout too.
            let inv_name = gate_name(GateKind::Inv, 0.15);
            if !self.layouts.contains_key(&inv_name) {
                let tile = logic_tile(self.tech, &inv_name, 620, TileSide::WritePort, true, true, 1);
                self.layouts.insert(inv_name, tile);
            }
            self.netlists.add(cell.subckt);
            self.layouts.insert("dff".to_string(), cell.layout);
        }
        "dff".to_string()
    }

    pub fn vref_stub(&mut self) -> String {
        self.insert(gen_vref_stub(self.tech))
    }
}

fn gen_named(layout: LayoutCell) -> LayoutCell {
    layout
}
