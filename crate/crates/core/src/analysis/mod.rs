//! Closed-form results as computations: steady states, passivity
//! certificates, storage functions and droop characteristics.

mod amplitude;
mod certificate;
mod droop;
mod equilibrium;
mod storage;

pub use amplitude::{b_coefficient, mu_roots, psi};
pub use certificate::{passivity_certificate, q_matrix, Certificate};
pub use droop::{
    droop_coefficients, nose_curve, p_max, p_of_omega, power_sharing_design, DroopReport, NoseBranch, NosePoint,
    SharingGains,
};
pub use equilibrium::{
    droop_equilibrium, feedforward_equilibrium, pid_system, solve_equilibrium_p, solve_equilibrium_pid, Equilibrium,
};
pub use storage::{storage_v1, storage_v2, storage_v3, DqSnapshot};
