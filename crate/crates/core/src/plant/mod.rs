//! Vector fields of the physical models.

mod converter;
mod load;
mod machine;
mod network;

pub use converter::{
    converter_rhs_ab, converter_rhs_dq, switch_current, switch_voltage, ConverterParams, ConverterStateAb,
    ConverterStateDq,
};
pub use load::{load_rhs_and_output, LoadParams};
pub use machine::{electrical_torque, emf, equivalent_sm_rhs, sm_rhs, SmParams, SmState};
pub use network::{network_energy, pi_network_rhs, PiNetworkDerivative, PiNetworkParams, PiNetworkState, Terminal};
