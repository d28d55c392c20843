//! The two reduction pipelines: independent-set counting to a nonuniform-field
//! antiferromagnetic Ising model, and nonuniform-field Ising to a uniform
//! bounded-degree 2-spin system via phase gadgets.

mod bis;
mod ising;

pub use bis::{bis_to_ising, bis_to_ising_with, choose_t1_t2, verify_bis_reduction, BisCertificate, BisReductionPlan, BisSizes};
pub use ising::{
    derived_ising_params, ising_to_2spin, ConstructionAudit, DerivedIsingParams, IsingReductionPlan, Mat2, Occupancy,
    TerminalUse,
};
