//! Numerical toolkit for two-particle wedge-local fields in the Z(N)-Ising
//! factorizing scattering models.

pub mod error;
pub mod fock;
pub mod fusion;
pub mod kinematics;
pub mod quad;
pub mod smatrix;
pub mod special;
pub mod testfn;
pub mod weaklocality;

pub use error::{Error, Result};
pub use fock::{FockContext, FockVector, SectorMask, N_MAX};
pub use fusion::{
    build_fusion_table, calibrate_eta, eta_closed_form, fusion_table_for, EtaFit, FusionProcess, FusionTable,
};
pub use kinematics::{
    mass_shell_momentum, solve_fusion_angles, zn_mass_spectrum, FusionAngles, MassSpectrum, Rapidity, TwoMomentum,
};
pub use quad::LineRule;
pub use smatrix::{
    bootstrap_component, check_crossing, check_unitarity, locate_poles, residue_at, s11, Channel, Pole, SComponent,
    SMatrixModel, SinhProduct,
};
pub use testfn::{
    charge_conjugate, cpt_partner, onshell_transform, wedge_support_check, Bump, Sign, TestFunction, Wedge, WedgeSide,
};
pub use weaklocality::{
    default_requests, refinement_study, weak_locality_report, DefectReport, ElementEvaluator, MatrixElementRequest,
    QuadratureSettings,
};
