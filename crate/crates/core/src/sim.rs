//! Switch-level steady-state evaluation of flattened CMOS netlists.
//!
//! Transistors act as ideal switches (NMOS conducts on gate 1, PMOS on
//! gate 0); supplies and caller-fixed ports are the drivers. Resistors and
//! capacitors do not conduct in this mode, and unknown gates block. The
//! evaluator is used by verification: decoder truth tables, tri-state
//! checks and gate-level sanity tests. Sequential cells are out of scope.

use std::collections::{BTreeMap, HashMap};

use crate::netlist::{DeviceKind, Subckt};
use crate::tech::{Channel, Technology};

#[derive(Debug)]
pub struct SwitchEval {
    /// Final net values; None = undriven (high impedance) or unresolved.
    pub nets: BTreeMap<String, Option<bool>>,
    /// Nets that ended up driven both high and low.
    pub conflicts: Vec<String>,
}

impl SwitchEval {
    pub fn get(&self, net: &str) -> Option<bool> {
        self.nets.get(net).copied().flatten()
    }
}

fn channel_of(tech: &Technology, model: &str) -> Channel {
    tech.device(model)
        .map(|m| m.channel)
        .unwrap_or(Channel::NmosSi)
}

/// Evaluate a flattened subcircuit with the given input assignment.
/// Nets named `vdd`/`vwwl` are fixed high and `gnd`/`vss` low.
pub fn switch_eval(
    flat: &Subckt,
    tech: &Technology,
    inputs: &BTreeMap<String, bool>,
) -> SwitchEval {
    // Collect nets.
    let mut net_ids: HashMap<&str, usize> = HashMap::new();
    let mut names: Vec<&str> = Vec::new();
    for d in &flat.devices {
        for t in &d.terminals {
            if !net_ids.contains_key(t.as_str()) {
                net_ids.insert(t, names.len());
                names.push(t);
            }
        }
    }
    for p in &flat.ports {
        if !net_ids.contains_key(p.as_str()) {
            net_ids.insert(p, names.len());
            names.push(p);
        }
    }

    let n = names.len();
    let mut fixed: Vec<Option<bool>> = vec![None; n];
    for (i, name) in names.iter().enumerate() {
        let base = name.rsplit('.').next().unwrap_or(name);
        if base == "vdd" || base == "vwwl" {
            fixed[i] = Some(true);
        } else if base == "gnd" || base == "vss" {
            fixed[i] = Some(false);
        }
    }
    for (net, v) in inputs {
        if let Some(&i) = net_ids.get(net.as_str()) {
            fixed[i] = Some(*v);
        }
    }

    let mut values: Vec<Option<bool>> = fixed.clone();
    let mut conflicts: Vec<usize> = Vec::new();

    // MOS switch list: (gate, a, b, on_when).
    let mut switches: Vec<(usize, usize, usize, bool)> = Vec::new();
    for d in &flat.devices {
        if d.kind != DeviceKind::Mos {
            continue;
        }
        let drain = net_ids[flat_terminal(d, 0)];
        let gate = net_ids[flat_terminal(d, 1)];
        let source = net_ids[flat_terminal(d, 2)];
        let on_when = !channel_of(tech, &d.model).is_pmos();
        switches.push((gate, drain, source, on_when));
    }

    // Fixpoint iteration: conduction components from switch states, then
    // component values from contained drivers.
    for _round in 0..switches.len() + 2 {
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut Vec<usize>, mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        for &(gate, a, b, on_when) in &switches {
            if values[gate] == Some(on_when) {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent[ra] = rb;
                }
            }
        }
        let mut comp_value: HashMap<usize, Option<bool>> = HashMap::new();
        let mut comp_conflict: HashMap<usize, bool> = HashMap::new();
        for i in 0..n {
            if let Some(v) = fixed[i] {
                let root = find(&mut parent, i);
                match comp_value.get(&root) {
                    None => {
                        comp_value.insert(root, Some(v));
                    }
                    Some(Some(prev)) if *prev != v => {
                        comp_conflict.insert(root, true);
                    }
                    _ => {}
                }
            }
        }
        let mut next = vec![None; n];
        conflicts.clear();
        for i in 0..n {
            let root = find(&mut parent, i);
            if comp_conflict.get(&root).copied().unwrap_or(false) {
                next[i] = None;
                conflicts.push(i);
            } else {
                next[i] = comp_value.get(&root).copied().flatten();
            }
        }
        // Fixed nets always keep their assignment.
        for i in 0..n {
            if fixed[i].is_some() {
                next[i] = fixed[i];
            }
        }
        if next == values {
            break;
        }
        values = next;
    }

    SwitchEval {
        nets: names
            .iter()
            .enumerate()
            .map(|(i, name)| (name.to_string(), values[i]))
            .collect(),
        conflicts: conflicts.iter().map(|&i| names[i].to_string()).collect(),
    }
}

fn flat_terminal(d: &crate::netlist::Device, idx: usize) -> &str {
    d.terminals[idx].as_str()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::{Device, Subckt};
    use crate::tech::Technology;

    fn inverter() -> Subckt {
        let mut inv = Subckt::new("inv", &["in", "out", "vdd", "gnd"]);
        inv.add_device(Device::mos("mn", "out", "in", "gnd", "gnd", "nmos_si", 0.1, 0.05));
        inv.add_device(Device::mos("mp", "out", "in", "vdd", "vdd", "pmos_si", 0.2, 0.05));
        inv
    }

    #[test]
    fn inverter_inverts() {
        let tech = Technology::generic45();
        let inv = inverter();
        for v in [false, true] {
            let mut inputs = BTreeMap::new();
            inputs.insert("in".to_string(), v);
            let eval = switch_eval(&inv, &tech, &inputs);
            assert_eq!(eval.get("out"), Some(!v));
            assert!(eval.conflicts.is_empty());
        }
    }

    #[test]
    fn undriven_output_is_high_impedance() {
        let tech = Technology::generic45();
        let inv = inverter();
        let eval = switch_eval(&inv, &tech, &BTreeMap::new());
        assert_eq!(eval.get("out"), None);
    }

    #[test]
    fn pass_chain_propagates_through_channels() {
        let tech = Technology::generic45();
        // Two series NMOS pass transistors, both gates high.
        let mut cell = Subckt::new("pass2", &["a", "y", "g1", "g2", "gnd"]);
        cell.add_device(Device::mos("m1", "mid", "g1", "a", "gnd", "nmos_si", 0.1, 0.05));
        cell.add_device(Device::mos("m2", "y", "g2", "mid", "gnd", "nmos_si", 0.1, 0.05));
        let mut inputs = BTreeMap::new();
        inputs.insert("a".to_string(), true);
        inputs.insert("g1".to_string(), true);
        inputs.insert("g2".to_string(), true);
        let eval = switch_eval(&cell, &tech, &inputs);
        assert_eq!(eval.get("y"), Some(true));
        inputs.insert("g2".to_string(), false);
        let eval = switch_eval(&cell, &tech, &inputs);
        assert_eq!(eval.get("y"), None);
    }

    #[test]
    fn contention_is_reported() {
        let tech = Technology::generic45();
        let mut cell = Subckt::new("short", &["y", "vdd", "gnd"]);
        cell.add_device(Device::mos("m1", "y", "vdd", "vdd", "vdd", "nmos_si", 0.1, 0.05));
        cell.add_device(Device::mos("m2", "y", "vdd", "gnd", "gnd", "nmos_si", 0.1, 0.05));
        let eval = switch_eval(&cell, &tech, &BTreeMap::new());
        assert!(eval.conflicts.contains(&"y".to_string()));
    }
}
