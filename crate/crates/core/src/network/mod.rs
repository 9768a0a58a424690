//! Radial feeder description: phases, buses, lines, validation, generators
//! and the feeder-json format.

mod json;
mod model;
mod phase;
mod topology;

pub use json::{
    feeder_to_json, load_feeder, matrix_from_doc, matrix_to_doc, BusDoc, ComplexDoc, CostDoc,
    FeederDoc, LineDoc, RegionDoc,
};
pub use json::parse_json;
pub use model::{
    validate_radial, BusSpec, FeederModel, InjectionRegion, LineSpec, ObjectiveCoeffs, Topology,
    ValidationReport, Violation,
};
pub use phase::{phase_lift, phase_project, phase_project_hermitian, Phase, PhaseSet};
pub use topology::{generate_topology, BusTemplate, TopologyKind};
