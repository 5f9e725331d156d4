//! Resonance identity, level-circle measure, `g_rho` roots, Strichartz ratios
//! and bilinear product norms.

pub mod bilinear;
pub mod circle;
pub mod grho;
pub mod resonance;
pub mod strichartz;

pub use bilinear::{
    bilinear_lowhigh_member, bilinear_lowhigh_sweep, bilinear_product_norm, bilinear_product_norm_roots, sector_bilinear_sweep, sector_hypothesis,
    BilinearQuadrature, BumpProfile, FourierBox, ProductWeight, RootQuadrature, SectorHypothesis, SweepReport,
};
pub use circle::{
    circle_measure_closed_form, circle_measure_displayed_form, circle_measure_integral, random_measure_config,
    CircleMeasure, MeasureConfig,
};
pub use grho::{g_rho_analysis, random_grho_config, real_roots, GRhoConfig, GRhoReport, GRhoRoot};
pub use resonance::{
    random_resonance_point, resonance_identity_defect, resonance_r, resonance_sides, ResonancePoint,
};
pub use strichartz::{dx_sobolev_norm, lq_norm, strichartz_family, strichartz_ratio, StrichartzFamily, StrichartzRatio};
