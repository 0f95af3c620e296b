//! Hierarchical circuit IR: subcircuits, devices, instances and nets, with
//! deterministic SPICE emission, hierarchy flattening and structural
//! connectivity checks (the artifact's stand-in for LVS).
//!
//! Net names are canonicalized to lower case; buses use an `[i]` suffix
//! (`wbl[3]`). Bulk terminals default to `gnd` for NMOS/OS devices and
//! `vdd` for PMOS unless a builder overrides them.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeviceKind {
    Mos,
    Cap,
    Res,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeviceParams {
    /// Width and length in micrometers.
    Mos { w: f64, l: f64 },
    /// Capacitance in farads or resistance in ohms.
    Value(f64),
}

#[derive(Debug, Clone)]
pub struct Device {
    pub name: String,
    pub kind: DeviceKind,
    /// MOS terminal order: drain, gate, source, bulk.
    pub terminals: Vec<String>,
    /// Device model name (MOS only; empty for passives).
    pub model: String,
    pub params: DeviceParams,
}

impl Device {
    pub fn mos(name: &str, d: &str, g: &str, s: &str, b: &str, model: &str, w: f64, l: f64) -> Device {
        Device {
            name: canon(name),
            kind: DeviceKind::Mos,
            terminals: vec![canon(d), canon(g), canon(s), canon(b)],
            model: model.to_string(),
            params: DeviceParams::Mos { w, l },
        }
    }

    pub fn cap(name: &str, a: &str, b: &str, farads: f64) -> Device {
        Device {
            name: canon(name),
            kind: DeviceKind::Cap,
            terminals: vec![canon(a), canon(b)],
            model: String::new(),
            params: DeviceParams::Value(farads),
        }
    }

    pub fn res(name: &str, a: &str, b: &str, ohms: f64) -> Device {
        Device {
            name: canon(name),
            kind: DeviceKind::Res,
            terminals: vec![canon(a), canon(b)],
            model: String::new(),
            params: DeviceParams::Value(ohms),
        }
    }

    pub fn mos_w(&self) -> f64 {
        match self.params {
            DeviceParams::Mos { w, .. } => w,
            DeviceParams::Value(_) => 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub name: String,
    pub subckt: String,
    pub connections: Vec<String>,
}

#[derive(Debug, Clone, Default)]
pub struct Subckt {
    pub name: String,
    pub ports: Vec<String>,
    pub devices: Vec<Device>,
    pub instances: Vec<Instance>,
    pub internal_nets: BTreeSet<String>,
}

/// Lower-case net/name canonicalization for deterministic diffs.
pub fn canon(s: &str) -> String {
    s.to_ascii_lowercase()
}

impl Subckt {
    pub fn new(name: &str, ports: &[&str]) -> Subckt {
        let ports: Vec<String> = ports.iter().map(|p| canon(p)).collect();
        let unique: HashSet<&String> = ports.iter().collect();
        assert_eq!(unique.len(), ports.len(), "duplicate port in {name}");
        Subckt {
            name: canon(name),
            ports,
            devices: Vec::new(),
            instances: Vec::new(),
            internal_nets: BTreeSet::new(),
        }
    }

    fn note_net(&mut self, net: &str) {
        if !self.ports.iter().any(|p| p == net) {
            self.internal_nets.insert(net.to_string());
        }
    }

    pub fn add_device(&mut self, dev: Device) {
        for t in &dev.terminals {
            self.note_net(t);
        }
        self.devices.push(dev);
    }

    pub fn add_instance(&mut self, name: &str, subckt: &str, connections: &[&str]) {
        let inst = Instance {
            name: canon(name),
            subckt: canon(subckt),
            connections: connections.iter().map(|c| canon(c)).collect(),
        };
        for c in &inst.connections {
            self.note_net(c);
        }
        self.instances.push(inst);
    }

    /// Direct device count (this level only).
    pub fn device_count(&self) -> usize {
        self.devices.len()
    }
}

#[derive(Debug, Clone, Default)]
pub struct Library {
    cells: BTreeMap<String, Subckt>,
}

impl Library {
    pub fn new() -> Library {
        Library::default()
    }

    pub fn add(&mut self, cell: Subckt) {
        self.cells.insert(cell.name.clone(), cell);
    }

    pub fn get(&self, name: &str) -> Option<&Subckt> {
        self.cells.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.cells.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &String> {
        self.cells.keys()
    }
}

#[derive(Debug)]
pub enum NetlistError {
    UnresolvedRef { subckt: String, reference: String },
    Cycle { subckt: String },
    ArityMismatch { instance: String, expected: usize, got: usize },
}

impl fmt::Display for NetlistError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NetlistError::UnresolvedRef { subckt, reference } => {
                write!(f, "subckt `{subckt}` references undefined `{reference}`")
            }
            NetlistError::Cycle { subckt } => {
                write!(f, "instantiation cycle through `{subckt}`")
            }
            NetlistError::ArityMismatch { instance, expected, got } => {
                write!(f, "instance `{instance}` connects {got} nets, target has {expected} ports")
            }
        }
    }
}

impl std::error::Error for NetlistError {}

/// Postorder over the hierarchy: leaves first, deterministic, cycle-checked.
fn topo_order<'a>(top: &'a Subckt, lib: &'a Library) -> Result<Vec<&'a Subckt>, NetlistError> {
    enum Mark {
        InProgress,
        Done,
    }
    fn visit<'a>(
        cell: &'a Subckt,
        lib: &'a Library,
        marks: &mut HashMap<String, Mark>,
        out: &mut Vec<&'a Subckt>,
    ) -> Result<(), NetlistError> {
        match marks.get(&cell.name) {
            Some(Mark::Done) => return Ok(()),
            Some(Mark::InProgress) => {
                return Err(NetlistError::Cycle {
                    subckt: cell.name.clone(),
                })
            }
            None => {}
        }
        marks.insert(cell.name.clone(), Mark::InProgress);
        for inst in &cell.instances {
            let child = lib.get(&inst.subckt).ok_or_else(|| NetlistError::UnresolvedRef {
                subckt: cell.name.clone(),
                reference: inst.subckt.clone(),
            })?;
            if child.ports.len() != inst.connections.len() {
                return Err(NetlistError::ArityMismatch {
                    instance: format!("{}.{}", cell.name, inst.name),
                    expected: child.ports.len(),
                    got: inst.connections.len(),
                });
            }
            visit(child, lib, marks, out)?;
        }
        marks.insert(cell.name.clone(), Mark::Done);
        out.push(cell);
        Ok(())
    }
    let mut out = Vec::new();
    let mut marks = HashMap::new();
    visit(top, lib, &mut marks, &mut out)?;
    Ok(out)
}

fn round_sig(x: f64, sig: i32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let d = x.abs().log10().floor() as i32;
    let factor = 10f64.powi(sig - 1 - d);
    (x * factor).round() / factor
}

/// Micrometer quantity: 6 significant digits, plain decimal.
fn fmt_um(x: f64) -> String {
    format!("{}", round_sig(x, 6))
}

/// Farads/ohms: 6 significant digits, exponent notation.
fn fmt_value(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    format!("{:e}", round_sig(x, 6))
}

/// Emit the reachable hierarchy as SPICE text, leaves first. Output is
/// byte-identical for identical input.
pub fn emit_spice(top: &Subckt, lib: &Library) -> Result<String, NetlistError> {
    let order = topo_order(top, lib)?;
    let mut out = String::new();
    out.push_str(&format!("* {} memory macro netlist\n", top.name));
    for cell in order {
        out.push_str(&format!(".SUBCKT {} {}\n", cell.name, cell.ports.join(" ")));
        for d in &cell.devices {
            match d.kind {
                DeviceKind::Mos => {
                    let DeviceParams::Mos { w, l } = d.params else {
                        unreachable!("MOS device with non-MOS params")
                    };
                    out.push_str(&format!(
                        "M{} {} {} W={}u L={}u\n",
                        d.name,
                        d.terminals.join(" "),
                        d.model,
                        fmt_um(w),
                        fmt_um(l)
                    ));
                }
                DeviceKind::Cap => {
                    let DeviceParams::Value(v) = d.params else { unreachable!() };
                    out.push_str(&format!(
                        "C{} {} {}\n",
                        d.name,
                        d.terminals.join(" "),
                        fmt_value(v)
                    ));
                }
                DeviceKind::Res => {
                    let DeviceParams::Value(v) = d.params else { unreachable!() };
                    out.push_str(&format!(
                        "R{} {} {}\n",
                        d.name,
                        d.terminals.join(" "),
                        fmt_value(v)
                    ));
                }
            }
        }
        for inst in &cell.instances {
            out.push_str(&format!(
                "X{} {} {}\n",
                inst.name,
                inst.connections.join(" "),
                inst.subckt
            ));
        }
        out.push_str(&format!(".ENDS {}\n", cell.name));
    }
    Ok(out)
}

/// Expand the hierarchy into a single subcircuit. Instance nets are renamed
/// `inst.net`; the terminal-to-net incidence multiset is preserved.
pub fn flatten(top: &Subckt, lib: &Library) -> Result<Subckt, NetlistError> {
    // Reuse topo_order for cycle/arity/reference validation.
    topo_order(top, lib)?;
    let mut flat = Subckt::new(&top.name, &top.ports.iter().map(|s| s.as_str()).collect::<Vec<_>>());

    fn expand(
        cell: &Subckt,
        lib: &Library,
        prefix: &str,
        binding: &HashMap<String, String>,
        flat: &mut Subckt,
    ) {
        let map_net = |net: &str| -> String {
            match binding.get(net) {
                Some(parent) => parent.clone(),
                None if prefix.is_empty() => net.to_string(),
                None => format!("{prefix}{net}"),
            }
        };
        for d in &cell.devices {
            let mut nd = d.clone();
            nd.name = format!("{prefix}{}", d.name);
            nd.terminals = d.terminals.iter().map(|t| map_net(t)).collect();
            flat.add_device(nd);
        }
        for inst in &cell.instances {
            let child = lib.get(&inst.subckt).expect("validated by topo_order");
            let mut child_binding = HashMap::new();
            for (port, net) in child.ports.iter().zip(&inst.connections) {
                child_binding.insert(port.clone(), map_net(net));
            }
            let child_prefix = format!("{prefix}{}.", inst.name);
            expand(child, lib, &child_prefix, &child_binding, flat);
        }
    }

    expand(top, lib, "", &HashMap::new(), &mut flat);
    Ok(flat)
}

/// Total device count over the expanded hierarchy.
pub fn hierarchical_device_count(top: &Subckt, lib: &Library) -> Result<usize, NetlistError> {
    let mut memo: HashMap<String, usize> = HashMap::new();
    for cell in topo_order(top, lib)? {
        let mut n = cell.devices.len();
        for inst in &cell.instances {
            n += memo[&inst.subckt];
        }
        memo.insert(cell.name.clone(), n);
    }
    Ok(memo[&top.name])
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Finding {
    /// Net with terminals but no driver-side terminal (MOS channel or
    /// resistor) anywhere. Top-level ports are exempt.
    FloatingNet { net: String },
    /// MOS gate with no conduction path to a top-level port.
    UndrivenGate { device: String, net: String },
    /// Supply-named net not merged into a top-level port.
    UnreachableSupply { net: String },
    /// One net bound to both a positive-supply port and a ground port of
    /// the same instance.
    ShortedSupplies { instance: String, net: String },
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Finding::FloatingNet { net } => write!(f, "floating net `{net}` has no driver-side terminal"),
            Finding::UndrivenGate { device, net } => {
                write!(f, "gate of `{device}` on net `{net}` has no driving path to a port")
            }
            Finding::UnreachableSupply { net } => {
                write!(f, "supply net `{net}` is not connected to a top-level supply port")
            }
            Finding::ShortedSupplies { instance, net } => {
                write!(f, "instance `{instance}` shorts supply and ground ports through net `{net}`")
            }
        }
    }
}

fn is_positive_supply(name: &str) -> bool {
    name == "vdd" || name == "vwwl"
}

fn is_ground(name: &str) -> bool {
    name == "gnd" || name == "vss"
}

fn leaf_name(net: &str) -> &str {
    net.rsplit('.').next().unwrap_or(net)
}

/// Structural connectivity checks on the expanded hierarchy. An empty list
/// is the pass condition for every compiler-generated bank.
pub fn connectivity_check(top: &Subckt, lib: &Library) -> Result<Vec<Finding>, NetlistError> {
    let mut findings: BTreeSet<Finding> = BTreeSet::new();

    // Supply/ground shorts are a hierarchy-level wiring property.
    for cell in topo_order(top, lib)? {
        for inst in &cell.instances {
            let child = lib.get(&inst.subckt).expect("validated");
            let mut net_roles: HashMap<&String, (bool, bool)> = HashMap::new();
            for (port, net) in child.ports.iter().zip(&inst.connections) {
                let entry = net_roles.entry(net).or_insert((false, false));
                entry.0 |= is_positive_supply(port);
                entry.1 |= is_ground(port);
            }
            for (net, (pos, gnd)) in net_roles {
                if pos && gnd {
                    findings.insert(Finding::ShortedSupplies {
                        instance: format!("{}.{}", cell.name, inst.name),
                        net: net.clone(),
                    });
                }
            }
        }
    }

    let flat = flatten(top, lib)?;
    let ports: HashSet<&String> = flat.ports.iter().collect();

    // Classify terminals per net. MOS terminal order is d, g, s, b.
    let mut has_driver: HashMap<&String, bool> = HashMap::new();
    let mut has_any: HashSet<&String> = HashSet::new();
    for d in &flat.devices {
        match d.kind {
            DeviceKind::Mos => {
                for (i, t) in d.terminals.iter().enumerate() {
                    if i == 3 {
                        continue; // bulk ties carry no signal
                    }
                    has_any.insert(t);
                    if i == 0 || i == 2 {
                        has_driver.entry(t).or_insert(false);
                        has_driver.insert(t, true);
                    } else {
                        has_driver.entry(t).or_insert(false);
                    }
                }
            }
            DeviceKind::Res => {
                for t in &d.terminals {
                    has_any.insert(t);
                    has_driver.insert(t, true);
                }
            }
            DeviceKind::Cap => {
                for t in &d.terminals {
                    has_any.insert(t);
                    has_driver.entry(t).or_insert(false);
                }
            }
        }
    }

    for net in &has_any {
        if ports.contains(*net) {
            continue;
        }
        if is_positive_supply(leaf_name(net)) || is_ground(leaf_name(net)) {
            continue; // handled by the supply reachability check
        }
        if !has_driver.get(*net).copied().unwrap_or(false) {
            findings.insert(Finding::FloatingNet { net: (*net).clone() });
        }
    }

    // Conduction reachability from top ports (MOS channels and resistors
    // conduct; capacitors block DC).
    let mut adjacency: HashMap<&String, Vec<&String>> = HashMap::new();
    for d in &flat.devices {
        let edge = match d.kind {
            DeviceKind::Mos => Some((&d.terminals[0], &d.terminals[2])),
            DeviceKind::Res => Some((&d.terminals[0], &d.terminals[1])),
            DeviceKind::Cap => None,
        };
        if let Some((a, b)) = edge {
            adjacency.entry(a).or_default().push(b);
            adjacency.entry(b).or_default().push(a);
        }
    }
    let mut reachable: HashSet<&String> = HashSet::new();
    let mut stack: Vec<&String> = flat.ports.iter().collect();
    while let Some(net) = stack.pop() {
        if !reachable.insert(net) {
            continue;
        }
        if let Some(neigh) = adjacency.get(net) {
            for n in neigh {
                if !reachable.contains(*n) {
                    stack.push(n);
                }
            }
        }
    }
    for d in &flat.devices {
        if d.kind == DeviceKind::Mos {
            let gate = &d.terminals[1];
            if !reachable.contains(gate) && !ports.contains(gate) {
                findings.insert(Finding::UndrivenGate {
                    device: d.name.clone(),
                    net: gate.clone(),
                });
            }
        }
    }

    // Supply nets must merge into top-level ports of the same name class.
    let mut all_nets: BTreeSet<&String> = BTreeSet::new();
    for d in &flat.devices {
        for t in &d.terminals {
            all_nets.insert(t);
        }
    }
    for net in all_nets {
        let base = leaf_name(net);
        if (is_positive_supply(base) || is_ground(base)) && !ports.contains(net) {
            findings.insert(Finding::UnreachableSupply { net: net.clone() });
        }
    }

    Ok(findings.into_iter().collect())
}
