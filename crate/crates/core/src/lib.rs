//! Gain-cell memory (GCRAM) macro compiler.
//!
//! Generates transistor-level netlists and DRC-checked GDSII layouts for
//! two-port gain-cell banks (and a 6T SRAM reference) from a memory
//! configuration plus an open technology description, then evaluates area,
//! timing, bandwidth, power and retention to drive design-space exploration.
//!
//! Pipeline, bottom to top:
//!
//! * [`config`] / [`tech`] — input parsing and the device current model
//! * [`netlist`] — circuit IR, SPICE emission, structural connectivity checks
//! * [`cellgen`] — leaf cells: gain cells, 6T SRAM, gates, drivers, sense amps
//! * [`bankgen`] — bank assembly, logical-effort sizing, decoders, delay chains
//! * [`layout`] — geometry database, floorplan, GDSII I/O, scanline DRC
//! * [`analysis`] — analytical area/timing/bandwidth/power reports
//! * [`retention`] — storage-node decay simulation and retention curves
//! * [`dse`] — workload ingestion, Shmoo grids, configuration selection

pub mod analysis;
pub mod bankgen;
pub mod cellgen;
pub mod config;
pub mod dse;
pub mod layout;
pub mod netlist;
pub mod ode;
pub mod plot;
pub mod retention;
pub mod sim;
pub mod tech;

pub use analysis::AnalysisReport;
pub use bankgen::BankDesign;
pub use config::{CellVariant, DerivedGeometry, MemoryConfig};
pub use layout::{GdsLibrary, LayoutCell};
pub use netlist::{Library, Subckt};
pub use tech::Technology;
