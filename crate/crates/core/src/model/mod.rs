//! Coefficient families, parameter spaces and problem configurations.

pub mod config;
pub mod family;
pub mod space;

pub use config::{
    build, load_config, parse_config_doc, ConfigDoc, Numerics, ProblemSpec, SpaceDoc,
};
pub use family::{
    AngleMap, AsymptoticSeeds, CoefficientFamily, FrozenSystem, LinearSystem, MatrixMap, Param,
    Perturbation, ScalarProfile, SecondOrderCoefficients, TabulatedFamily,
};
pub use space::{ParameterSpace, Topology};
