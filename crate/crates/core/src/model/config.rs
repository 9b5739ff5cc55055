//! Problem configuration files.
//!
//! The format is JSON with a fixed key schema; unknown keys are rejected.
//!
//! ```json
//! {
//!   "family": { "kind": "builtin", "name": "paper-sec4-BC" },
//!   "space": { "topology": "interval", "range": [0.0, 3.141592653589793],
//!              "nodes": 181, "lambda0": [0.0, 3.141592653589793] },
//!   "numerics": { "truncation_time": 12.0, "ode_tol": 1e-10,
//!                 "reortho_interval": 1.0, "zero_tol": 1e-8 }
//! }
//! ```
//!
//! `family.kind` is one of `builtin`, `piecewise_scalar`, `second_order`,
//! `perturbed`. `space.topology` is one of `interval`, `circle`, `grid2d`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{sym_eig, Matrix};
use crate::model::family::{
    AngleMap, CoefficientFamily, MatrixMap, Param, Perturbation, ScalarProfile,
    SecondOrderCoefficients,
};
use crate::model::space::ParameterSpace;

/// Names accepted by `{"kind": "builtin", "name": ...}`.
pub const BUILTIN_FAMILIES: &[&str] = &[
    "paper-sec4-BC",
    "paper-sec4-exBC",
    "poschl-teller",
    "disc-radial",
    "disc-product",
    "constant-hyperbolic",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numerics {
    #[serde(alias = "T")]
    pub truncation_time: f64,
    pub ode_tol: f64,
    pub reortho_interval: f64,
    pub zero_tol: f64,
    #[serde(default = "default_continuity_bound")]
    pub continuity_bound: f64,
    #[serde(default = "default_hyperbolicity_tol")]
    pub hyperbolicity_tol: f64,
}

fn default_continuity_bound() -> f64 {
    0.2
}

fn default_hyperbolicity_tol() -> f64 {
    1e-8
}

impl Default for Numerics {
    fn default() -> Self {
        Numerics {
            truncation_time: 12.0,
            ode_tol: 1e-10,
            reortho_interval: 1.0,
            zero_tol: 1e-8,
            continuity_bound: default_continuity_bound(),
            hyperbolicity_tol: default_hyperbolicity_tol(),
        }
    }
}

impl Numerics {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("numerics.truncation_time", self.truncation_time),
            ("numerics.ode_tol", self.ode_tol),
            ("numerics.reortho_interval", self.reortho_interval),
            ("numerics.zero_tol", self.zero_tol),
            ("numerics.continuity_bound", self.continuity_bound),
            ("numerics.hyperbolicity_tol", self.hyperbolicity_tol),
        ];
        for (field, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::validation(field, "must be positive and finite"));
            }
        }
        if self.ode_tol >= 1e-2 {
            return Err(Error::validation("numerics.ode_tol", "must be below 1e-2"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDoc {
    pub family: FamilyDoc,
    pub space: SpaceDoc,
    pub numerics: Numerics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilyDoc {
    Builtin {
        name: String,
    },
    PiecewiseScalar {
        profile: ScalarProfile,
        b: MatrixMapDoc,
        c: MatrixMapDoc,
        angle: AngleMapDoc,
    },
    SecondOrder {
        potential: PotentialDoc,
        #[serde(default = "default_onset")]
        onset: f64,
    },
    Perturbed {
        base: Box<FamilyDoc>,
        perturbation: PerturbationDoc,
    },
}

fn default_onset() -> f64 {
    3.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum MatrixMapDoc {
    Constant { entries: Vec<Vec<f64>> },
    Reflection,
    ConjugateReflection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum AngleMapDoc {
    Linear {
        #[serde(default)]
        offset: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    RadialBump,
    Product,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialDoc {
    PoschlTeller {
        #[serde(default = "two")]
        strength: f64,
    },
}

fn two() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationDoc {
    pub matrix: Vec<Vec<f64>>,
    pub center: f64,
    pub half_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "topology", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpaceDoc {
    Interval {
        range: [f64; 2],
        nodes: usize,
        lambda0: Vec<f64>,
    },
    Circle {
        nodes: usize,
        lambda0: Vec<f64>,
    },
    Grid2d {
        resolution: usize,
        #[serde(default = "unit_disc")]
        domain: String,
        lambda0: Vec<[f64; 2]>,
    },
}

fn unit_disc() -> String {
    "unit_disc".to_string()
}

/// A validated problem: family, parameter space and numerical settings.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub family: CoefficientFamily,
    pub space: ParameterSpace,
    pub numerics: Numerics,
    /// Normalised document (built-ins expanded, `lambda0` snapped to nodes).
    pub doc: ConfigDoc,
}

impl ProblemSpec {
    pub fn to_config_string(&self) -> String {
        serde_json::to_string_pretty(&self.doc).expect("config documents always serialise")
    }
}

/// Parse and validate a configuration document.
pub fn load_config(text: &str) -> Result<ProblemSpec> {
    build(parse_config_doc(text)?)
}

/// Parse a configuration document without validating it.
pub fn parse_config_doc(text: &str) -> Result<ConfigDoc> {
    serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

/// Validate an already deserialised document.
pub fn build(doc: ConfigDoc) -> Result<ProblemSpec> {
    doc.numerics.validate()?;
    let family_doc = expand(&doc.family)?;
    let family = build_family(&family_doc)?;

    let (space, space_doc) = build_space(&doc.space, &family)?;

    let t = doc.numerics.truncation_time;
    if let CoefficientFamily::PiecewiseScalar { profile, .. } = base_of(&family) {
        if !(t > profile.t0) {
            return Err(Error::validation(
                "truncation_time",
                format!("must exceed the profile's t0 = {}", profile.t0),
            ));
        }
    }
    let reach = family.perturbation_reach();
    if !(t > reach) {
        return Err(Error::validation(
            "truncation_time",
            format!("must exceed the perturbation support reach {reach}"),
        ));
    }

    Ok(ProblemSpec {
        family,
        space,
        numerics: doc.numerics,
        doc: ConfigDoc {
            family: family_doc,
            space: space_doc,
            numerics: doc.numerics,
        },
    })
}

fn base_of(f: &CoefficientFamily) -> &CoefficientFamily {
    match f {
        CoefficientFamily::Perturbed { base, .. } => base_of(base),
        other => other,
    }
}

/// Expand `builtin` entries into explicit families.
pub fn expand(doc: &FamilyDoc) -> Result<FamilyDoc> {
    let profile = ScalarProfile::default();
    Ok(match doc {
        FamilyDoc::Builtin { name } => match name.as_str() {
            "paper-sec4-BC" => bc_doc(
                profile,
                AngleMapDoc::Linear {
                    offset: 0.0,
                    scale: 1.0,
                },
            ),
            "disc-radial" => bc_doc(profile, AngleMapDoc::RadialBump),
            "disc-product" => bc_doc(profile, AngleMapDoc::Product),
            "paper-sec4-exBC" => FamilyDoc::PiecewiseScalar {
                profile,
                b: MatrixMapDoc::Constant {
                    entries: vec![vec![-1.0, 0.0], vec![0.0, 1.0]],
                },
                c: MatrixMapDoc::Reflection,
                angle: AngleMapDoc::Linear {
                    offset: 0.0,
                    scale: 1.0,
                },
            },
            "constant-hyperbolic" => FamilyDoc::PiecewiseScalar {
                profile,
                b: MatrixMapDoc::Constant {
                    entries: vec![vec![-1.0, 0.0], vec![0.0, 1.0]],
                },
                c: MatrixMapDoc::Constant {
                    entries: vec![vec![-1.0, 0.0], vec![0.0, 1.0]],
                },
                angle: AngleMapDoc::Linear {
                    offset: 0.0,
                    scale: 1.0,
                },
            },
            "poschl-teller" => FamilyDoc::SecondOrder {
                potential: PotentialDoc::PoschlTeller { strength: 2.0 },
                onset: default_onset(),
            },
            other => {
                return Err(Error::validation(
                    "family.name",
                    format!(
                        "unknown built-in `{other}` (known: {})",
                        BUILTIN_FAMILIES.join(", ")
                    ),
                ))
            }
        },
        FamilyDoc::Perturbed { base, perturbation } => FamilyDoc::Perturbed {
            base: Box::new(expand(base)?),
            perturbation: perturbation.clone(),
        },
        other => other.clone(),
    })
}

fn bc_doc(profile: ScalarProfile, angle: AngleMapDoc) -> FamilyDoc {
    FamilyDoc::PiecewiseScalar {
        profile,
        b: MatrixMapDoc::ConjugateReflection,
        c: MatrixMapDoc::Reflection,
        angle,
    }
}

fn matrix_from_rows(field: &str, rows: &[Vec<f64>]) -> Result<Matrix> {
    let n = rows.len();
    if n == 0 || n > 32 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::validation(
            field,
            "must be a non-empty square matrix of size <= 32",
        ));
    }
    if rows.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::validation(field, "entries must be finite"));
    }
    Ok(Matrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn build_matrix_map(field: &str, doc: &MatrixMapDoc) -> Result<MatrixMap> {
    Ok(match doc {
        MatrixMapDoc::Constant { entries } => {
            let m = matrix_from_rows(field, entries)?;
            let e = sym_eig(&m).map_err(|_| Error::validation(field, "must be symmetric"))?;
            if e.smallest_magnitude() <= 1e-12 * m.norm().max(1.0) {
                return Err(Error::validation(field, "must be invertible"));
            }
            MatrixMap::Constant(m)
        }
        MatrixMapDoc::Reflection => MatrixMap::Reflection,
        MatrixMapDoc::ConjugateReflection => MatrixMap::ConjugateReflection,
    })
}

fn build_family(doc: &FamilyDoc) -> Result<CoefficientFamily> {
    match doc {
        FamilyDoc::Builtin { .. } => build_family(&expand(doc)?),
        FamilyDoc::PiecewiseScalar {
            profile,
            b,
            c,
            angle,
        } => {
            profile.validate()?;
            let b = build_matrix_map("family.b", b)?;
            let c = build_matrix_map("family.c", c)?;
            if b.dim() != c.dim() {
                return Err(Error::validation(
                    "family.c",
                    "must have the same size as family.b",
                ));
            }
            if b.dim() < 2 {
                return Err(Error::validation(
                    "family.b",
                    "dimension must be at least 2",
                ));
            }
            let count = |m: &MatrixMap| sym_eig(&m.at(0.0)).map(|e| e.stable_count);
            if count(&b)? != count(&c)? {
                return Err(Error::validation(
                    "family.c",
                    "B and C must have the same number of positive eigenvalues",
                ));
            }
            let angle = match *angle {
                AngleMapDoc::Linear { offset, scale } => {
                    if !(offset.is_finite() && scale.is_finite()) {
                        return Err(Error::validation(
                            "family.angle",
                            "offset and scale must be finite",
                        ));
                    }
                    AngleMap::Linear { offset, scale }
                }
                AngleMapDoc::RadialBump => AngleMap::RadialBump,
                AngleMapDoc::Product => AngleMap::Product,
            };
            Ok(CoefficientFamily::PiecewiseScalar {
                profile: *profile,
                b,
                c,
                angle,
            })
        }
        FamilyDoc::SecondOrder { potential, onset } => {
            if !(onset.is_finite() && *onset >= 0.0) {
                return Err(Error::validation(
                    "family.onset",
                    "must be finite and non-negative",
                ));
            }
            let coefficients = match *potential {
                PotentialDoc::PoschlTeller { strength } => {
                    if !strength.is_finite() {
                        return Err(Error::validation(
                            "family.potential.strength",
                            "must be finite",
                        ));
                    }
                    SecondOrderCoefficients::PoschlTeller { strength }
                }
            };
            Ok(CoefficientFamily::SecondOrder {
                coefficients,
                onset: *onset,
            })
        }
        FamilyDoc::Perturbed { base, perturbation } => {
            let base = build_family(base)?;
            let m = matrix_from_rows("family.perturbation.matrix", &perturbation.matrix)?;
            if m.nrows() != base.dim() {
                return Err(Error::validation(
                    "family.perturbation.matrix",
                    format!("must be {0}x{0}", base.dim()),
                ));
            }
            if !(perturbation.half_width > 0.0
                && perturbation.half_width.is_finite()
                && perturbation.center.is_finite())
            {
                return Err(Error::validation(
                    "family.perturbation.half_width",
                    "needs a finite centre and positive half-width",
                ));
            }
            Ok(CoefficientFamily::Perturbed {
                base: Box::new(base),
                perturbation: Perturbation {
                    matrix: m,
                    center: perturbation.center,
                    half_width: perturbation.half_width,
                },
            })
        }
    }
}

fn build_space(doc: &SpaceDoc, family: &CoefficientFamily) -> Result<(ParameterSpace, SpaceDoc)> {
    let wants_points = match base_of(family) {
        CoefficientFamily::PiecewiseScalar { angle, .. } => angle.accepts_points(),
        _ => false,
    };
    let is_second_order = matches!(base_of(family), CoefficientFamily::SecondOrder { .. });
    let mismatch =
        |expected: &'static str, found: &'static str| Error::Topology { expected, found };

    let space = match doc {
        SpaceDoc::Interval {
            range,
            nodes,
            lambda0,
        } => {
            if wants_points {
                return Err(mismatch("grid2d", "interval"));
            }
            if is_second_order && range[0] <= 0.0 && range[1] >= 0.0 {
                return Err(Error::validation(
                    "space.range",
                    "must not contain 0: the limiting equation is not hyperbolic there",
                ));
            }
            ParameterSpace::interval(range[0], range[1], *nodes, lambda0)?
        }
        SpaceDoc::Circle { nodes, lambda0 } => {
            if wants_points {
                return Err(mismatch("grid2d", "circle"));
            }
            if is_second_order {
                return Err(mismatch("interval", "circle"));
            }
            ParameterSpace::circle(*nodes, lambda0)?
        }
        SpaceDoc::Grid2d {
            resolution,
            domain,
            lambda0,
        } => {
            if domain != "unit_disc" {
                return Err(Error::validation(
                    "space.domain",
                    "only `unit_disc` is supported",
                ));
            }
            if !wants_points {
                return Err(mismatch(
                    if is_second_order {
                        "interval"
                    } else {
                        "interval or circle"
                    },
                    "grid2d",
                ));
            }
            let pts: Vec<(f64, f64)> = lambda0.iter().map(|p| (p[0], p[1])).collect();
            ParameterSpace::disc(*resolution, &pts)?
        }
    };

    let snapped = space.lambda0().iter().map(|&i| space.node(i));
    let space_doc = match doc {
        SpaceDoc::Interval { range, nodes, .. } => SpaceDoc::Interval {
            range: *range,
            nodes: *nodes,
            lambda0: snapped.flat_map(|p| p.coords()).collect(),
        },
        SpaceDoc::Circle { nodes, .. } => SpaceDoc::Circle {
            nodes: *nodes,
            lambda0: snapped.flat_map(|p| p.coords()).collect(),
        },
        SpaceDoc::Grid2d {
            resolution, domain, ..
        } => SpaceDoc::Grid2d {
            resolution: *resolution,
            domain: domain.clone(),
            lambda0: snapped
                .map(|p| match p {
                    Param::Point(x, y) => [x, y],
                    _ => unreachable!(),
                })
                .collect(),
        },
    };
    Ok((space, space_doc))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "family": { "kind": "builtin", "name": "paper-sec4-BC" },
        "space": { "topology": "interval", "range": [0.0, 3.141592653589793], "nodes": 181,
                   "lambda0": [0.0, 3.141592653589793] },
        "numerics": { "T": 12.0, "ode_tol": 1e-10, "reortho_interval": 1.0, "zero_tol": 1e-8 }
    }"#;

    #[test]
    fn minimal_config() {
        let spec = load_config(MINIMAL).unwrap();
        assert_eq!(spec.family.dim(), 2);
        assert_eq!(spec.space.len(), 181);
        assert_eq!(spec.space.lambda0(), &[0, 180]);
        assert_eq!(spec.numerics.continuity_bound, 0.2);
    }

    #[test]
    fn truncation_below_t0_is_rejected() {
        let text = MINIMAL.replace("\"T\": 12.0", "\"T\": 0.5");
        match load_config(&text) {
            Err(Error::Validation { field, .. }) => assert_eq!(field, "truncation_time"),
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn poschl_teller_config() {
        let text = r#"{
            "family": { "kind": "builtin", "name": "poschl-teller" },
            "space": { "topology": "interval", "range": [0.5, 1.5], "nodes": 101, "lambda0": [0.5, 1.5] },
            "numerics": { "truncation_time": 12.0, "ode_tol": 1e-10, "reortho_interval": 1.0, "zero_tol": 1e-8 }
        }"#;
        let spec = load_config(text).unwrap();
        assert!(matches!(
            spec.family,
            CoefficientFamily::SecondOrder {
                coefficients: SecondOrderCoefficients::PoschlTeller { strength },
                ..
            } if strength == 2.0
        ));
        assert_eq!(spec.space.node(0), Param::Scalar(0.5));
        assert_eq!(spec.space.node(100), Param::Scalar(1.5));
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = MINIMAL.replace("\"zero_tol\"", "\"zero_tolerance\"");
        assert!(matches!(load_config(&text), Err(Error::Parse { .. })));
        let text = MINIMAL.replace(
            "\"name\": \"paper-sec4-BC\"",
            "\"name\": \"paper-sec4-BC\", \"extra\": 1",
        );
        assert!(matches!(load_config(&text), Err(Error::Parse { .. })));
    }

    #[test]
    fn parse_error_carries_line() {
        let text = "{\n  \"family\": { \"kind\": \"builtin\", \"name\": \n }";
        match load_config(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn roundtrip_is_idempotent() {
        let once = load_config(MINIMAL).unwrap().to_config_string();
        let twice = load_config(&once).unwrap().to_config_string();
        assert_eq!(once, twice);
    }

    #[test]
    fn topology_mismatch() {
        let text = MINIMAL.replace("paper-sec4-BC", "disc-radial");
        assert!(matches!(load_config(&text), Err(Error::Topology { .. })));
    }

    #[test]
    fn perturbed_support_must_fit_inside_truncation() {
        let text = r#"{
            "family": { "kind": "perturbed", "base": { "kind": "builtin", "name": "paper-sec4-BC" },
                        "perturbation": { "matrix": [[0.01, 0.0], [0.0, 0.0]], "center": 10.0, "half_width": 3.0 } },
            "space": { "topology": "interval", "range": [0.0, 3.0], "nodes": 11, "lambda0": [0.0] },
            "numerics": { "T": 12.0, "ode_tol": 1e-10, "reortho_interval": 1.0, "zero_tol": 1e-8 }
        }"#;
        match load_config(text) {
            Err(Error::Validation { field, .. }) => assert_eq!(field, "truncation_time"),
            other => panic!("{other:?}"),
        }
    }
}
