//! Technology description: layers, design rules, transistor models, wire
//! parasitics and logical-effort constants, loaded from a sectioned
//! `key = value` text file.
//!
//! The transistor current model is a two-piece analytic fit:
//!
//! ```text
//! vgs < vt0:   I = ioff_per_um * w * 10^(vgs/ss_T) * (1 - exp(-vds/v_th))
//! vgs >= vt0:  I = [i_th + (ion_per_um - i_th) * u^2] * w * (1 - exp(-vds/v_th))
//!              with u = (vgs - vt0)/(vdd_ref - vt0),  i_th = ioff * 10^(vt0/ss_T)
//! ```
//!
//! where `ss_T = ss * T/300` and `v_th = kT/q`. PMOS devices are evaluated in
//! magnitude convention: callers pass source-referenced |vgs| and |vds|, and
//! `vt0` is stored as |Vt|. Temperature enters only through `ss_T` and `v_th`.
//!
//! Threshold shifts (`with_vt_offset`) move `vt0` and rescale `ioff_per_um`
//! by `10^(-dv/ss)` so the subthreshold curve translates along the vgs axis.

use std::collections::BTreeMap;
use std::fmt;

pub const BOLTZMANN: f64 = 1.380649e-23;
pub const Q_ELECTRON: f64 = 1.602176634e-19;

/// Bundled 45 nm-class open technology fixture.
pub const GENERIC45: &str = include_str!("../fixtures/generic45.tech");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum LayerPurpose {
    Diff,
    Poly,
    Metal,
    Via,
    Well,
    OsChannel,
    Marker,
}

impl LayerPurpose {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "diff" => LayerPurpose::Diff,
            "poly" => LayerPurpose::Poly,
            "metal" => LayerPurpose::Metal,
            "via" => LayerPurpose::Via,
            "well" => LayerPurpose::Well,
            "os_channel" => LayerPurpose::OsChannel,
            "marker" => LayerPurpose::Marker,
            _ => return None,
        })
    }

    fn keyword(self) -> &'static str {
        match self {
            LayerPurpose::Diff => "diff",
            LayerPurpose::Poly => "poly",
            LayerPurpose::Metal => "metal",
            LayerPurpose::Via => "via",
            LayerPurpose::Well => "well",
            LayerPurpose::OsChannel => "os_channel",
            LayerPurpose::Marker => "marker",
        }
    }

    /// Front-end-of-line layers: the ones that consume silicon area.
    pub fn is_feol(self) -> bool {
        matches!(
            self,
            LayerPurpose::Diff | LayerPurpose::Poly | LayerPurpose::Well
        )
    }
}

#[derive(Debug, Clone)]
pub struct Layer {
    pub name: String,
    pub gds_layer: u8,
    pub gds_datatype: u8,
    pub purpose: LayerPurpose,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum RuleKind {
    MinWidth,
    MinSpacing,
    MinArea,
    Enclosure,
    Extension,
}

impl RuleKind {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "min_width" => RuleKind::MinWidth,
            "min_spacing" => RuleKind::MinSpacing,
            "min_area" => RuleKind::MinArea,
            "enclosure" => RuleKind::Enclosure,
            "extension" => RuleKind::Extension,
            _ => return None,
        })
    }

    pub fn keyword(self) -> &'static str {
        match self {
            RuleKind::MinWidth => "min_width",
            RuleKind::MinSpacing => "min_spacing",
            RuleKind::MinArea => "min_area",
            RuleKind::Enclosure => "enclosure",
            RuleKind::Extension => "extension",
        }
    }
}

/// One geometric design rule. `value` is micrometers, except `MIN_AREA`
/// where it is square micrometers.
#[derive(Debug, Clone)]
pub struct DesignRule {
    pub kind: RuleKind,
    pub layer_a: String,
    pub layer_b: Option<String>,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    NmosSi,
    PmosSi,
    NmosOs,
}

impl Channel {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "nmos_si" => Channel::NmosSi,
            "pmos_si" => Channel::PmosSi,
            "nmos_os" => Channel::NmosOs,
            _ => return None,
        })
    }

    fn keyword(self) -> &'static str {
        match self {
            Channel::NmosSi => "nmos_si",
            Channel::PmosSi => "pmos_si",
            Channel::NmosOs => "nmos_os",
        }
    }

    pub fn is_pmos(self) -> bool {
        matches!(self, Channel::PmosSi)
    }
}

#[derive(Debug, Clone)]
pub struct TransistorModel {
    pub name: String,
    pub channel: Channel,
    /// Threshold voltage magnitude, volts.
    pub vt0: f64,
    /// Subthreshold swing at 300 K, volts per decade.
    pub ss: f64,
    /// Off current per micrometer of width at vgs = 0, vds = vdd_ref.
    pub ioff_per_um: f64,
    /// On current per micrometer at vgs = vds = vdd_ref.
    pub ion_per_um: f64,
    /// Gate capacitance per micrometer of width, farads.
    pub cgate_per_um: f64,
    pub n_factor: f64,
    pub min_w: f64,
    pub min_l: f64,
    /// Gate dielectric leakage per micrometer, amps. Zero for Si devices;
    /// a retention knob for OS read transistors.
    pub gate_leak_per_um: f64,
    /// Nominal supply the ion_per_um point was taken at.
    pub vdd_ref: f64,
}

impl TransistorModel {
    /// Drain current in amps. For PMOS pass |vgs| and |vds|.
    pub fn current(&self, vgs: f64, vds: f64, w: f64, t_kelvin: f64) -> f64 {
        device_current(self, vgs, vds, w, t_kelvin)
    }

    /// Shift the threshold by `dv` volts, rescaling the off current so the
    /// subthreshold curve translates along vgs: ioff' = ioff * 10^(-dv/ss).
    pub fn with_vt_offset(&self, dv: f64) -> TransistorModel {
        let mut m = self.clone();
        if dv != 0.0 {
            m.vt0 += dv;
            m.ioff_per_um *= 10f64.powf(-dv / m.ss);
        }
        m
    }
}

/// Drain current of the piecewise subthreshold/on-region model.
///
/// Total over valid inputs: vds <= 0 yields <= 0 (reverse conduction is the
/// caller's sign bookkeeping), and the result is continuous at vgs = vt0 and
/// monotone non-decreasing in both vgs and vds.
pub fn device_current(m: &TransistorModel, vgs: f64, vds: f64, w: f64, t_kelvin: f64) -> f64 {
    let v_thermal = BOLTZMANN * t_kelvin / Q_ELECTRON;
    let ss_t = m.ss * t_kelvin / 300.0;
    let drive_per_um = if vgs < m.vt0 {
        m.ioff_per_um * 10f64.powf(vgs / ss_t)
    } else {
        let i_th = m.ioff_per_um * 10f64.powf(m.vt0 / ss_t);
        let span = (m.vdd_ref - m.vt0).max(1e-9);
        let u = (vgs - m.vt0) / span;
        i_th + (m.ion_per_um - i_th).max(0.0) * u * u
    };
    drive_per_um * w * (1.0 - (-vds / v_thermal).exp())
}

#[derive(Debug, Clone)]
pub struct WireModel {
    pub layer: String,
    pub r_per_sq: f64,
    pub c_per_um: f64,
    pub default_width: f64,
}

#[derive(Debug, Clone)]
pub struct LogicalEffortConstants {
    /// Unit inverter delay, seconds.
    pub tau: f64,
    /// Parasitic delay of an inverter, dimensionless.
    pub p_inv: f64,
    /// PMOS/NMOS width ratio.
    pub gamma: f64,
}

/// Memory-cell calibration knobs carried in the `[cell]` section.
/// Absent keys take the documented defaults.
#[derive(Debug, Clone)]
pub struct CellParams {
    /// Fixed wiring capacitance added to the storage node, farads.
    pub sn_wire_cap: f64,
    /// vref = vref_ratio * vdd for single-ended sensing.
    pub vref_ratio: f64,
    /// Sense-amp input margin beyond vref, volts.
    pub dv_sense: f64,
    /// WWL falling-edge coupling ratio C_couple/(C_couple + C_sn).
    pub coupling_ratio_wwl: f64,
    /// RWL edge coupling ratio.
    pub coupling_ratio_rwl: f64,
    /// Load capacitance per delay-chain stage, farads.
    pub delay_stage_cap: f64,
}

impl Default for CellParams {
    fn default() -> Self {
        CellParams {
            sn_wire_cap: 5e-16,
            vref_ratio: 0.5,
            dv_sense: 0.1,
            coupling_ratio_wwl: 0.05,
            coupling_ratio_rwl: 0.03,
            delay_stage_cap: 2e-15,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Technology {
    pub name: String,
    pub dbu_per_um: u32,
    /// Nominal supply used as the ion reference point.
    pub vdd_nom: f64,
    pub layers: Vec<Layer>,
    pub rules: Vec<DesignRule>,
    pub devices: BTreeMap<String, TransistorModel>,
    pub wires: BTreeMap<String, WireModel>,
    pub le: LogicalEffortConstants,
    pub cell_params: CellParams,
}

#[derive(Debug)]
pub struct TechError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for TechError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line > 0 {
            write!(f, "tech file line {}: {}", self.line, self.message)
        } else {
            write!(f, "tech file: {}", self.message)
        }
    }
}

impl std::error::Error for TechError {}

fn err<T>(line: usize, message: impl Into<String>) -> Result<T, TechError> {
    Err(TechError {
        line,
        message: message.into(),
    })
}

impl Technology {
    /// Load the bundled generic45 fixture.
    pub fn generic45() -> Technology {
        load_tech(GENERIC45).expect("bundled generic45 fixture is valid")
    }

    pub fn layer(&self, name: &str) -> Option<&Layer> {
        self.layers.iter().find(|l| l.name == name)
    }

    pub fn device(&self, name: &str) -> Result<&TransistorModel, TechError> {
        self.devices.get(name).ok_or(TechError {
            line: 0,
            message: format!("unknown device model `{name}`"),
        })
    }

    pub fn wire(&self, layer: &str) -> Result<&WireModel, TechError> {
        self.wires.get(layer).ok_or(TechError {
            line: 0,
            message: format!("no wire model for layer `{layer}`"),
        })
    }

    /// Rule lookup helpers; zero when the rule is not present.
    pub fn rule_value(&self, kind: RuleKind, layer_a: &str, layer_b: Option<&str>) -> f64 {
        self.rules
            .iter()
            .find(|r| {
                r.kind == kind && r.layer_a == layer_a && r.layer_b.as_deref() == layer_b
            })
            .map(|r| r.value)
            .unwrap_or(0.0)
    }

    pub fn min_width(&self, layer: &str) -> f64 {
        self.rule_value(RuleKind::MinWidth, layer, None)
    }

    pub fn min_spacing(&self, layer: &str) -> f64 {
        self.rule_value(RuleKind::MinSpacing, layer, None)
    }

    pub fn enclosure(&self, outer: &str, inner: &str) -> f64 {
        self.rule_value(RuleKind::Enclosure, outer, Some(inner))
    }

    /// Reference voltage for single-ended sensing.
    pub fn vref(&self, vdd: f64) -> f64 {
        self.cell_params.vref_ratio * vdd
    }

    /// Input capacitance of the unit inverter (min-width NMOS, gamma-scaled PMOS).
    pub fn unit_inverter_cin(&self) -> f64 {
        let nmos = self
            .devices
            .values()
            .find(|m| m.channel == Channel::NmosSi)
            .expect("technology defines an NMOS model");
        nmos.cgate_per_um * nmos.min_w * (1.0 + self.le.gamma)
    }

    pub fn to_dbu(&self, um: f64) -> i64 {
        (um * self.dbu_per_um as f64).round() as i64
    }

    pub fn to_um(&self, dbu: i64) -> f64 {
        dbu as f64 / self.dbu_per_um as f64
    }

    /// Serialize back to the tech-file grammar. `load_tech(t.to_text())`
    /// reproduces the technology semantically.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str("[tech]\n");
        s.push_str(&format!("name = {}\n", self.name));
        s.push_str(&format!("dbu_per_um = {}\n", self.dbu_per_um));
        s.push_str(&format!("vdd_nom = {}\n", self.vdd_nom));
        for l in &self.layers {
            s.push_str(&format!(
                "\n[layer]\nname = {}\ngds_layer = {}\ngds_datatype = {}\npurpose = {}\n",
                l.name,
                l.gds_layer,
                l.gds_datatype,
                l.purpose.keyword()
            ));
        }
        for r in &self.rules {
            s.push_str(&format!(
                "\n[rule]\nkind = {}\nlayer_a = {}\n",
                r.kind.keyword(),
                r.layer_a
            ));
            if let Some(b) = &r.layer_b {
                s.push_str(&format!("layer_b = {b}\n"));
            }
            s.push_str(&format!("value = {}\n", r.value));
        }
        for m in self.devices.values() {
            s.push_str(&format!(
                "\n[device]\nname = {}\nchannel = {}\nvt0 = {}\nss = {}\nioff_per_um = {:e}\n\
                 ion_per_um = {:e}\ncgate_per_um = {:e}\nn_factor = {}\nmin_w = {}\nmin_l = {}\n",
                m.name,
                m.channel.keyword(),
                m.vt0,
                m.ss,
                m.ioff_per_um,
                m.ion_per_um,
                m.cgate_per_um,
                m.n_factor,
                m.min_w,
                m.min_l
            ));
            if m.gate_leak_per_um != 0.0 {
                s.push_str(&format!("gate_leak_per_um = {:e}\n", m.gate_leak_per_um));
            }
        }
        for w in self.wires.values() {
            s.push_str(&format!(
                "\n[wire]\nlayer = {}\nr_per_sq = {}\nc_per_um = {:e}\ndefault_width = {}\n",
                w.layer, w.r_per_sq, w.c_per_um, w.default_width
            ));
        }
        s.push_str(&format!(
            "\n[logical_effort]\ntau = {:e}\np_inv = {}\ngamma = {}\n",
            self.le.tau, self.le.p_inv, self.le.gamma
        ));
        let c = &self.cell_params;
        s.push_str(&format!(
            "\n[cell]\nsn_wire_cap = {:e}\nvref_ratio = {}\ndv_sense = {}\n\
             coupling_ratio_wwl = {}\ncoupling_ratio_rwl = {}\ndelay_stage_cap = {:e}\n",
            c.sn_wire_cap,
            c.vref_ratio,
            c.dv_sense,
            c.coupling_ratio_wwl,
            c.coupling_ratio_rwl,
            c.delay_stage_cap
        ));
        s
    }
}

/// One `[section]` block of raw key/value pairs with their line numbers.
struct Section {
    name: String,
    line: usize,
    entries: Vec<(usize, String, String)>,
}

impl Section {
    fn get(&self, key: &str) -> Option<(usize, &str)> {
        self.entries
            .iter()
            .find(|(_, k, _)| k == key)
            .map(|(n, _, v)| (*n, v.as_str()))
    }

    fn require(&self, key: &str) -> Result<(usize, &str), TechError> {
        self.get(key).ok_or(TechError {
            line: self.line,
            message: format!("[{}] section missing key `{key}`", self.name),
        })
    }

    fn require_f64(&self, key: &str) -> Result<f64, TechError> {
        let (line, v) = self.require(key)?;
        v.parse::<f64>()
            .map_err(|_| TechError {
                line,
                message: format!("`{key}` expects a number, got `{v}`"),
            })
    }

    fn get_f64(&self, key: &str, default: f64) -> Result<f64, TechError> {
        match self.get(key) {
            None => Ok(default),
            Some((line, v)) => v.parse::<f64>().map_err(|_| TechError {
                line,
                message: format!("`{key}` expects a number, got `{v}`"),
            }),
        }
    }
}

fn split_sections(text: &str) -> Result<Vec<Section>, TechError> {
    let mut sections: Vec<Section> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or(TechError {
                    line: line_no,
                    message: format!("malformed section header `{line}`"),
                })?
                .trim()
                .to_string();
            sections.push(Section {
                name,
                line: line_no,
                entries: Vec::new(),
            });
            continue;
        }
        let (key, value) = line.split_once('=').ok_or(TechError {
            line: line_no,
            message: format!("expected `key = value`, got `{line}`"),
        })?;
        let section = sections.last_mut().ok_or(TechError {
            line: line_no,
            message: "key/value before any [section] header".to_string(),
        })?;
        section
            .entries
            .push((line_no, key.trim().to_string(), value.trim().to_string()));
    }
    Ok(sections)
}

/// Parse and validate a technology file.
pub fn load_tech(text: &str) -> Result<Technology, TechError> {
    let sections = split_sections(text)?;

    let mut name = String::new();
    let mut dbu_per_um: u32 = 0;
    let mut vdd_nom = 1.1;
    let mut layers: Vec<Layer> = Vec::new();
    let mut rules: Vec<(usize, DesignRule)> = Vec::new();
    let mut devices: BTreeMap<String, TransistorModel> = BTreeMap::new();
    let mut wires: BTreeMap<String, WireModel> = BTreeMap::new();
    let mut le: Option<LogicalEffortConstants> = None;
    let mut cell_params = CellParams::default();

    for sec in &sections {
        match sec.name.as_str() {
            "tech" => {
                name = sec.require("name")?.1.to_string();
                let (line, dbu) = sec.require("dbu_per_um")?;
                dbu_per_um = dbu.parse().map_err(|_| TechError {
                    line,
                    message: format!("dbu_per_um expects an integer, got `{dbu}`"),
                })?;
                vdd_nom = sec.get_f64("vdd_nom", 1.1)?;
            }
            "layer" => {
                let lname = sec.require("name")?.1.to_string();
                let gds_layer = sec.require_f64("gds_layer")? as i64;
                let gds_datatype = sec.require_f64("gds_datatype")? as i64;
                if !(0..=255).contains(&gds_layer) || !(0..=255).contains(&gds_datatype) {
                    return err(sec.line, "gds_layer/gds_datatype must be 0..=255");
                }
                let (pline, p) = sec.require("purpose")?;
                let purpose = LayerPurpose::parse(p).ok_or(TechError {
                    line: pline,
                    message: format!("unknown layer purpose `{p}`"),
                })?;
                layers.push(Layer {
                    name: lname,
                    gds_layer: gds_layer as u8,
                    gds_datatype: gds_datatype as u8,
                    purpose,
                });
            }
            "rule" => {
                let (kline, k) = sec.require("kind")?;
                let kind = RuleKind::parse(k).ok_or(TechError {
                    line: kline,
                    message: format!("unknown rule kind `{k}`"),
                })?;
                let layer_a = sec.require("layer_a")?.1.to_string();
                let layer_b = sec.get("layer_b").map(|(_, v)| v.to_string());
                if matches!(kind, RuleKind::Enclosure | RuleKind::Extension) && layer_b.is_none()
                {
                    return err(sec.line, format!("{} rule requires layer_b", kind.keyword()));
                }
                let value = sec.require_f64("value")?;
                if value <= 0.0 {
                    return err(sec.line, "rule value must be > 0");
                }
                rules.push((
                    sec.line,
                    DesignRule {
                        kind,
                        layer_a,
                        layer_b,
                        value,
                    },
                ));
            }
            "device" => {
                let dname = sec.require("name")?.1.to_string();
                if devices.contains_key(&dname) {
                    return err(sec.line, format!("duplicate device model `{dname}`"));
                }
                let (cline, c) = sec.require("channel")?;
                let channel = Channel::parse(c).ok_or(TechError {
                    line: cline,
                    message: format!("unknown channel type `{c}`"),
                })?;
                let m = TransistorModel {
                    name: dname.clone(),
                    channel,
                    vt0: sec.require_f64("vt0")?,
                    ss: sec.require_f64("ss")?,
                    ioff_per_um: sec.require_f64("ioff_per_um")?,
                    ion_per_um: sec.require_f64("ion_per_um")?,
                    cgate_per_um: sec.require_f64("cgate_per_um")?,
                    n_factor: sec.get_f64("n_factor", 1.0)?,
                    min_w: sec.require_f64("min_w")?,
                    min_l: sec.require_f64("min_l")?,
                    gate_leak_per_um: sec.get_f64("gate_leak_per_um", 0.0)?,
                    vdd_ref: vdd_nom,
                };
                let ss_ok = match channel {
                    Channel::NmosOs => m.ss > 0.0 && m.ss <= 0.3,
                    _ => (0.06..=0.2).contains(&m.ss),
                };
                if !ss_ok {
                    return err(
                        sec.line,
                        format!(
                            "device `{dname}`: ss {} V/dec outside the valid range for {}",
                            m.ss,
                            channel.keyword()
                        ),
                    );
                }
                if m.ioff_per_um <= 0.0 {
                    return err(sec.line, format!("device `{dname}`: ioff_per_um must be > 0"));
                }
                if m.ion_per_um <= m.ioff_per_um {
                    return err(
                        sec.line,
                        format!("device `{dname}`: ion_per_um must exceed ioff_per_um"),
                    );
                }
                devices.insert(dname, m);
            }
            "wire" => {
                let layer = sec.require("layer")?.1.to_string();
                let w = WireModel {
                    layer: layer.clone(),
                    r_per_sq: sec.require_f64("r_per_sq")?,
                    c_per_um: sec.require_f64("c_per_um")?,
                    default_width: sec.require_f64("default_width")?,
                };
                if w.r_per_sq <= 0.0 || w.c_per_um <= 0.0 || w.default_width <= 0.0 {
                    return err(sec.line, format!("wire model `{layer}`: all values must be > 0"));
                }
                wires.insert(layer, w);
            }
            "logical_effort" => {
                let v = LogicalEffortConstants {
                    tau: sec.require_f64("tau")?,
                    p_inv: sec.require_f64("p_inv")?,
                    gamma: sec.require_f64("gamma")?,
                };
                if v.tau <= 0.0 {
                    return err(sec.line, "tau must be > 0");
                }
                if v.p_inv < 0.0 {
                    return err(sec.line, "p_inv must be >= 0");
                }
                if !(1.0..=3.0).contains(&v.gamma) {
                    return err(sec.line, "gamma must lie in [1, 3]");
                }
                le = Some(v);
            }
            "cell" => {
                cell_params = CellParams {
                    sn_wire_cap: sec.get_f64("sn_wire_cap", cell_params.sn_wire_cap)?,
                    vref_ratio: sec.get_f64("vref_ratio", cell_params.vref_ratio)?,
                    dv_sense: sec.get_f64("dv_sense", cell_params.dv_sense)?,
                    coupling_ratio_wwl: sec
                        .get_f64("coupling_ratio_wwl", cell_params.coupling_ratio_wwl)?,
                    coupling_ratio_rwl: sec
                        .get_f64("coupling_ratio_rwl", cell_params.coupling_ratio_rwl)?,
                    delay_stage_cap: sec.get_f64("delay_stage_cap", cell_params.delay_stage_cap)?,
                };
            }
            other => {
                return err(sec.line, format!("unknown section `[{other}]`"));
            }
        }
    }

    if name.is_empty() || dbu_per_um == 0 {
        return err(0, "missing [tech] section with name and dbu_per_um");
    }
    if dbu_per_um < 100 {
        return err(0, format!("dbu_per_um must be >= 100, got {dbu_per_um}"));
    }
    // Layer table consistency.
    let mut seen_names: Vec<&str> = Vec::new();
    let mut seen_gds: Vec<(u8, u8)> = Vec::new();
    for l in &layers {
        if seen_names.contains(&l.name.as_str()) {
            return err(0, format!("duplicate layer name `{}`", l.name));
        }
        if seen_gds.contains(&(l.gds_layer, l.gds_datatype)) {
            return err(
                0,
                format!(
                    "duplicate (gds_layer, gds_datatype) pair ({}, {})",
                    l.gds_layer, l.gds_datatype
                ),
            );
        }
        seen_names.push(&l.name);
        seen_gds.push((l.gds_layer, l.gds_datatype));
    }
    for (line, r) in &rules {
        if !seen_names.contains(&r.layer_a.as_str()) {
            return err(*line, format!("rule references undefined layer `{}`", r.layer_a));
        }
        if let Some(b) = &r.layer_b {
            if !seen_names.contains(&b.as_str()) {
                return err(*line, format!("rule references undefined layer `{b}`"));
            }
        }
    }
    for w in wires.values() {
        if !seen_names.contains(&w.layer.as_str()) {
            return err(0, format!("wire model references undefined layer `{}`", w.layer));
        }
    }
    let le = le.ok_or(TechError {
        line: 0,
        message: "missing [logical_effort] section".to_string(),
    })?;

    Ok(Technology {
        name,
        dbu_per_um,
        vdd_nom,
        layers,
        rules: rules.into_iter().map(|(_, r)| r).collect(),
        devices,
        wires,
        le,
        cell_params,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generic45_loads_with_four_device_models() {
        let tech = Technology::generic45();
        assert_eq!(tech.devices.len(), 4);
        assert!(tech.devices.contains_key("nmos_si"));
        assert!(tech.devices.contains_key("pmos_si"));
        assert!(tech.devices.contains_key("nmos_si_hvt"));
        assert!(tech.devices.contains_key("nmos_os"));
        assert_eq!(tech.dbu_per_um, 1000);
    }

    #[test]
    fn undefined_layer_in_rule_is_an_error() {
        let mut text = String::from(GENERIC45);
        text.push_str("\n[rule]\nkind = min_width\nlayer_a = m9\nvalue = 0.1\n");
        let e = load_tech(&text).unwrap_err();
        assert!(e.message.contains("m9"), "{e}");
        assert!(e.line > 0);
    }

    #[test]
    fn os_ioff_bounds() {
        let tech = Technology::generic45();
        let os = tech.device("nmos_os").unwrap();
        assert!(os.ioff_per_um <= 1e-18, "OS off leakage above the sub-1e-18 band");
        // Zero ioff must be rejected by validation.
        let bad = GENERIC45.replace("ioff_per_um = 1e-19", "ioff_per_um = 0");
        assert!(load_tech(&bad).is_err());
    }

    #[test]
    fn ioff_is_exact_at_vgs_zero_vds_vdd() {
        let tech = Technology::generic45();
        let m = tech.device("nmos_si").unwrap();
        let i = device_current(m, 0.0, tech.vdd_nom, 1.0, 300.0);
        assert_eq!(i, m.ioff_per_um);
    }

    #[test]
    fn one_decade_below_zero_gives_tenth_of_ioff() {
        let tech = Technology::generic45();
        let m = tech.device("nmos_si").unwrap();
        let i = device_current(m, -m.ss, 5.0, 1.0, 300.0);
        let rel = (i - m.ioff_per_um / 10.0).abs() / (m.ioff_per_um / 10.0);
        assert!(rel < 1e-12, "rel err {rel}");
    }

    #[test]
    fn zero_vds_means_zero_current() {
        let tech = Technology::generic45();
        let m = tech.device("nmos_si").unwrap();
        assert_eq!(device_current(m, 1.1, 0.0, 2.0, 300.0), 0.0);
    }

    // Closed-form check: raising vt0 by 0.1 V at ss = 0.1 V/dec must cut
    // vgs = 0 leakage by exactly one decade.
    #[test]
    fn vt_shift_scales_leakage_by_decade() {
        let tech = Technology::generic45();
        let mut m = tech.device("nmos_si").unwrap().clone();
        m.ss = 0.1;
        let base = device_current(&m, 0.0, tech.vdd_nom, 1.0, 300.0);
        let shifted = m.with_vt_offset(0.1);
        let i = device_current(&shifted, 0.0, tech.vdd_nom, 1.0, 300.0);
        let rel = (i - base / 10.0).abs() / (base / 10.0);
        assert!(rel < 1e-12, "expected exactly x10 lower, rel err {rel}");
    }

    #[test]
    fn hvt_fixture_consistent_with_vt_scaling() {
        let tech = Technology::generic45();
        let std = tech.device("nmos_si").unwrap();
        let hvt = tech.device("nmos_si_hvt").unwrap();
        let predicted = std.ioff_per_um * 10f64.powf(-(hvt.vt0 - std.vt0) / std.ss);
        let ratio = hvt.ioff_per_um / predicted;
        assert!((0.5..2.0).contains(&ratio), "hvt ioff {} vs predicted {predicted}", hvt.ioff_per_um);
    }

    #[test]
    fn current_monotone_and_continuous() {
        let tech = Technology::generic45();
        for m in tech.devices.values() {
            let mut prev = -1.0;
            for step in 0..=60 {
                let vgs = -0.3 + 0.03 * step as f64;
                let i = device_current(m, vgs, 1.1, 1.0, 300.0);
                assert!(i >= prev, "{}: not monotone in vgs at {vgs}", m.name);
                prev = i;
            }
            let mut prev = -1.0;
            for step in 0..=40 {
                let vds = 0.05 * step as f64;
                let i = device_current(m, 0.8, vds, 1.0, 300.0);
                assert!(i >= prev, "{}: not monotone in vds at {vds}", m.name);
                prev = i;
            }
            let below = device_current(m, m.vt0 - 1e-9, 1.1, 1.0, 300.0);
            let at = device_current(m, m.vt0, 1.1, 1.0, 300.0);
            assert!(
                (below - at).abs() / at < 1e-6,
                "{}: discontinuous at vt0",
                m.name
            );
        }
    }

    #[test]
    fn leakage_linear_in_width() {
        let tech = Technology::generic45();
        let m = tech.device("nmos_si").unwrap();
        let i1 = device_current(m, -0.05, 1.1, 1.0, 300.0);
        let i3 = device_current(m, -0.05, 1.1, 3.0, 300.0);
        assert!((i3 - 3.0 * i1).abs() / i3 < 1e-12);
    }

    #[test]
    fn round_trip_semantics() {
        let tech = Technology::generic45();
        let again = load_tech(&tech.to_text()).expect("emitted text reparses");
        assert_eq!(tech.name, again.name);
        assert_eq!(tech.layers.len(), again.layers.len());
        assert_eq!(tech.rules.len(), again.rules.len());
        assert_eq!(tech.devices.len(), again.devices.len());
        for (name, m) in &tech.devices {
            let n = &again.devices[name];
            assert_eq!(m.vt0, n.vt0);
            assert_eq!(m.ioff_per_um, n.ioff_per_um);
            assert_eq!(m.gate_leak_per_um, n.gate_leak_per_um);
        }
        assert_eq!(tech.le.tau, again.le.tau);
        assert_eq!(tech.cell_params.coupling_ratio_wwl, again.cell_params.coupling_ratio_wwl);
    }
}
