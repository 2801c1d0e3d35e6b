//! Heralded entangling gates, their conditional maps and the protocols
//! built on them.

mod map;
mod memory;
mod metrics;
mod protocols;
mod remote;

pub use map::{
    extract_conditional_map, orthonormal_modes, ConditionalMap, RunOutput, LINEARITY_TOLERANCE,
    MODE_DROP_TOLERANCE,
};
pub use memory::{
    memory_retrieve, memory_retrieve_with_map, memory_store, memory_store_with_map,
    pauli_eigenstates, state_fidelity, Basis, TransferResult,
};
pub use metrics::{
    average_fidelity, choi_concurrence, concurrence, cz_target, kraus_mass, kron,
    photon_controlled, process_fidelity, time_bin_target, wootters_concurrence, CMatrix,
};
pub use protocols::{
    gate_report, polarization_gate, time_bin_gate, wfc_second_scatterer, Gate, GateKind,
    GateReport, Wfc, BIN_OVERLAP_TOLERANCE,
};
pub use remote::{remote_entangle, RemoteResult};
