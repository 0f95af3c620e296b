//! Storage-node decay simulation and retention analysis.
//!
//! After a write, the storage node sees the WWL falling-edge coupling
//! step, then drifts through the write transistor's subthreshold channel
//! (gate held at 0, source/drain between the node and the held WBL) plus
//! any read-gate dielectric leakage. The stored one starts at vdd - Vt
//! (boosted and clamped with the level shifter); the stored zero at 0 V.
//!
//! Retention ends when the worst-case state can no longer be resolved
//! against the sense threshold: a decayed one falls below it, or a zero
//! is pulled above it by reverse leakage from a high WBL.

use crate::cellgen::{CellVariantSpec, RwlPolarity};
use crate::config::{CellVariant, MemoryConfig};
use crate::ode::{integrate, OdeOptions};
use crate::tech::{Technology, TransistorModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StoredState {
    Zero,
    One,
}

impl std::fmt::Display for StoredState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StoredState::Zero => write!(f, "0"),
            StoredState::One => write!(f, "1"),
        }
    }
}

/// Everything the decay integrator needs, decoupled from bank structure.
#[derive(Debug, Clone)]
pub struct RetentionSetup {
    pub variant: CellVariant,
    pub rwl_polarity: RwlPolarity,
    /// Write device with the configured threshold offset applied.
    pub write_device: TransistorModel,
    /// Read-device gate dielectric leakage, amps (total, not per um).
    pub gate_leak: f64,
    pub stored_state: StoredState,
    /// WBL level held during retention (worst case: opposite data).
    pub wbl_hold_level: f64,
    pub coupling_ratio_wwl: f64,
    pub coupling_ratio_rwl: f64,
    pub c_sn: f64,
    pub sense_threshold: f64,
    pub vdd: f64,
    /// WWL swing at the falling edge (boosted when shifted).
    pub v_wwl_swing: f64,
    /// Initial stored-one level.
    pub sn_one: f64,
    pub temperature: f64,
}

impl RetentionSetup {
    /// Derive the retention setup for a memory configuration. The stored
    /// state defaults to ONE against a grounded WBL (worst case); flip
    /// with [`with_state`](Self::with_state).
    pub fn for_config(cfg: &MemoryConfig, tech: &Technology) -> RetentionSetup {
        let spec = CellVariantSpec::for_variant(cfg.cell_variant);
        let wm = tech.device(spec.write_device).expect("write device");
        let write_device = wm.with_vt_offset(cfg.write_vt_offset);
        let rm = tech.device(spec.read_device).expect("read device");
        RetentionSetup {
            variant: cfg.cell_variant,
            rwl_polarity: spec.rwl_polarity,
            gate_leak: rm.gate_leak_per_um * rm.min_w,
            stored_state: StoredState::One,
            wbl_hold_level: 0.0,
            coupling_ratio_wwl: tech.cell_params.coupling_ratio_wwl,
            coupling_ratio_rwl: tech.cell_params.coupling_ratio_rwl,
            c_sn: crate::analysis::sn_capacitance(&spec, tech),
            sense_threshold: tech.vref(cfg.vdd),
            vdd: cfg.vdd,
            v_wwl_swing: cfg.vwwl(),
            sn_one: crate::analysis::sn_one_level(cfg, &spec, tech),
            write_device,
            temperature: cfg.temperature,
        }
    }

    pub fn with_state(mut self, state: StoredState, wbl_hold_level: f64) -> RetentionSetup {
        self.stored_state = state;
        self.wbl_hold_level = wbl_hold_level;
        self
    }

    fn initial_level(&self) -> f64 {
        match self.stored_state {
            StoredState::One => self.sn_one,
            StoredState::Zero => 0.0,
        }
    }

    /// Signed storage-node current in amps: positive discharges the node
    /// toward the WBL hold level.
    fn leak_current(&self, v_sn: f64) -> f64 {
        let wbl = self.wbl_hold_level;
        let vgs = -v_sn.min(wbl);
        let vds = (v_sn - wbl).abs();
        let mag = self
            .write_device
            .current(vgs, vds, self.write_device.min_w, self.temperature);
        let through_write = if v_sn >= wbl { mag } else { -mag };
        let through_gate = if v_sn > 0.0 { self.gate_leak } else { 0.0 };
        through_write + through_gate
    }
}

#[derive(Debug, Clone)]
pub struct DecayTrace {
    pub times: Vec<f64>,
    pub v_sn: Vec<f64>,
    pub events: Vec<(f64, String, f64)>,
}

impl DecayTrace {
    pub fn final_level(&self) -> f64 {
        *self.v_sn.last().expect("nonempty trace")
    }

    /// Two-column text export (time, volts).
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (t, v) in self.times.iter().zip(&self.v_sn) {
            s.push_str(&format!("{t:.9e} {v:.9e}\n"));
        }
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("time_s,v_sn_v\n");
        for (t, v) in self.times.iter().zip(&self.v_sn) {
            s.push_str(&format!("{t:.9e},{v:.9e}\n"));
        }
        s
    }
}

/// Simulate the post-write decay out to `t_end` seconds.
pub fn simulate_decay(setup: &RetentionSetup, t_end: f64) -> DecayTrace {
    assert!(t_end > 0.0, "simulation span must be positive");
    let mut v0 = setup.initial_level();
    let coupling = -setup.coupling_ratio_wwl * setup.v_wwl_swing;
    let events = vec![(0.0, "wwl_falling_coupling".to_string(), coupling)];
    v0 += coupling;

    let f = |_t: f64, v: f64| -setup.leak_current(v) / setup.c_sn;
    let traj = integrate(&f, 0.0, v0, t_end, OdeOptions::default());
    DecayTrace {
        times: traj.iter().map(|&(t, _)| t).collect(),
        v_sn: traj.iter().map(|&(_, v)| v).collect(),
        events,
    }
}

/// Append the read-access coupling event: the falling RWL edge of
/// active-low variants degrades the node, the rising edge of active-high
/// variants boosts it (clamped at vdd).
pub fn apply_read_disturb(trace: &DecayTrace, setup: &RetentionSetup) -> DecayTrace {
    let mut out = trace.clone();
    let t_last = *trace.times.last().expect("nonempty trace");
    let v_last = trace.final_level();
    let dv = match setup.rwl_polarity {
        RwlPolarity::ActiveLow => -setup.coupling_ratio_rwl * setup.vdd,
        RwlPolarity::ActiveHigh => setup.coupling_ratio_rwl * setup.vdd,
    };
    let v_new = (v_last + dv).min(setup.vdd);
    let t_new = t_last + (t_last * 1e-9).max(1e-15);
    out.times.push(t_new);
    out.v_sn.push(v_new);
    out.events.push((t_last, "rwl_edge_coupling".to_string(), v_new - v_last));
    out
}

#[derive(Debug, Clone, Copy)]
pub struct RetentionResult {
    pub t_ret: f64,
    pub limiting_state: StoredState,
}

/// Longest well-retained horizon probed before giving up (seconds).
pub const RETENTION_HORIZON: f64 = 1e12;

fn crossing_time(setup: &RetentionSetup, rising: bool) -> f64 {
    let threshold = setup.sense_threshold;
    let mut v0 = setup.initial_level() - setup.coupling_ratio_wwl * setup.v_wwl_swing;
    let crossed = |v: f64| if rising { v > threshold } else { v < threshold };
    if crossed(v0) {
        return 0.0;
    }
    let f = |_t: f64, v: f64| -setup.leak_current(v) / setup.c_sn;
    // Exponential horizon search for a bracketing interval.
    let mut t0 = 0.0f64;
    let mut t1 = 1e-9;
    loop {
        let traj = integrate(&f, t0, v0, t1, OdeOptions::default());
        if let Some(idx) = traj.iter().position(|&(_, v)| crossed(v)) {
            // Bisect within the bracketing step.
            let (mut lo, mut v_lo) = traj[idx - 1];
            let (mut hi, _) = traj[idx];
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                let v_mid = crate::ode::integrate_to(&f, lo, v_lo, mid, OdeOptions::default());
                if crossed(v_mid) {
                    hi = mid;
                } else {
                    lo = mid;
                    v_lo = v_mid;
                }
            }
            return 0.5 * (lo + hi);
        }
        let (t_end, v_end) = *traj.last().expect("nonempty");
        if t_end >= RETENTION_HORIZON {
            return RETENTION_HORIZON;
        }
        t0 = t_end;
        v0 = v_end;
        t1 = (t_end * 8.0).max(1e-9);
    }
}

/// Smallest time at which the worst-case stored state becomes unreadable
/// against the sense threshold. The hold condition is opposite-data WBL.
pub fn retention_time(setup: &RetentionSetup) -> RetentionResult {
    let one = setup.clone().with_state(StoredState::One, 0.0);
    let t_one = crossing_time(&one, false);
    let zero = setup.clone().with_state(StoredState::Zero, setup.vdd);
    let t_zero = crossing_time(&zero, true);
    if t_one <= t_zero {
        RetentionResult {
            t_ret: t_one,
            limiting_state: StoredState::One,
        }
    } else {
        RetentionResult {
            t_ret: t_zero,
            limiting_state: StoredState::Zero,
        }
    }
}

/// Retention across write-Vt offsets.
pub fn retention_curve(
    cfg: &MemoryConfig,
    tech: &Technology,
    vt_offsets: &[f64],
) -> Vec<(f64, f64)> {
    vt_offsets
        .iter()
        .map(|&dv| {
            let mut c = cfg.clone();
            c.write_vt_offset = dv;
            let setup = RetentionSetup::for_config(&c, tech);
            (dv, retention_time(&setup).t_ret)
        })
        .collect()
}

/// Retention of the high-Vt OS cell (write Vt raised 0.3 V, boosted WWL
/// restoring the stored-one level).
pub fn os_high_vt_check(tech: &Technology) -> f64 {
    let mut cfg = MemoryConfig::new(1, 2, CellVariant::OsOs);
    cfg.write_vt_offset = 0.3;
    cfg.wwl_level_shifter = true;
    let setup = RetentionSetup::for_config(&cfg, tech);
    retention_time(&setup).t_ret
}

/// Closed-form linear-decay retention in the constant-off-current regime:
/// t = c_sn * (v0 - threshold) / (ioff * w).
pub fn linear_decay_oracle(setup: &RetentionSetup) -> f64 {
    let v0 = setup.sn_one - setup.coupling_ratio_wwl * setup.v_wwl_swing;
    let i = setup.write_device.ioff_per_um * setup.write_device.min_w + setup.gate_leak;
    setup.c_sn * (v0 - setup.sense_threshold) / i
}
