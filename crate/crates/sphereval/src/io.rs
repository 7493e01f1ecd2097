//! External interfaces: JSON schemas for bodies, fields, fans and valuation
//! specs, CSV emission, and the self-describing run reports written by the
//! CLI.

use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::convex_bodies::{BodyKind, ConvexBody, PolyhedralCone};
use crate::counterexample::CounterexampleRow;
use crate::lip_functions::{FieldKind, ScalarField};
use crate::piecewise_linear::{PLField, SimplicialFan};
use crate::sphere_core::{QuadratureRule, Rotation};
use crate::valuations::{GeneralKernel, ValuationSpec};
use crate::{Error, Result};

/// Report schema version embedded in every run report.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Body JSON schema. Polytope vertices are row arrays; a polar-cone cap
/// stores the cone's generators.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BodySpec {
    Polytope { vertices: Vec<Vec<f64>> },
    Ball { center: Vec<f64>, radius: f64 },
    Minkowski { parts: Vec<BodySpec> },
    Translate { part: Box<BodySpec>, shift: Vec<f64> },
    Scale { part: Box<BodySpec>, factor: f64 },
    PolarConeCap { generators: Vec<Vec<f64>> },
}

impl BodySpec {
    pub fn to_body(&self) -> Result<ConvexBody> {
        match self {
            BodySpec::Polytope { vertices } => ConvexBody::polytope(vertices.clone()),
            BodySpec::Ball { center, radius } => ConvexBody::ball(center.clone(), *radius),
            BodySpec::Minkowski { parts } => {
                let parts: Result<Vec<ConvexBody>> = parts.iter().map(|p| p.to_body()).collect();
                ConvexBody::minkowski(parts?)
            }
            BodySpec::Translate { part, shift } => part.to_body()?.translate(shift.clone()),
            BodySpec::Scale { part, factor } => part.to_body()?.scale_by(*factor),
            BodySpec::PolarConeCap { generators } => {
                ConvexBody::polar_cone_cap(PolyhedralCone::new(generators.clone())?)
            }
        }
    }

    pub fn from_body(body: &ConvexBody) -> BodySpec {
        match body.kind() {
            BodyKind::Polytope { vertices } => BodySpec::Polytope {
                vertices: vertices.clone(),
            },
            BodyKind::Ball { center, radius } => BodySpec::Ball {
                center: center.clone(),
                radius: *radius,
            },
            BodyKind::Minkowski { parts } => BodySpec::Minkowski {
                parts: parts.iter().map(BodySpec::from_body).collect(),
            },
            BodyKind::Translate { part, shift } => BodySpec::Translate {
                part: Box::new(BodySpec::from_body(part)),
                shift: shift.clone(),
            },
            BodyKind::Scale { part, factor } => BodySpec::Scale {
                part: Box::new(BodySpec::from_body(part)),
                factor: *factor,
            },
            BodyKind::PolarConeCap { cone } => BodySpec::PolarConeCap {
                generators: cone.generators().to_vec(),
            },
        }
    }
}

/// Field JSON schema: constants, linear functionals, support functions and
/// the lattice/sum/scale/rotate combinators.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FieldSpec {
    Constant { value: f64 },
    Linear { vector: Vec<f64> },
    Support { body: BodySpec },
    Min { parts: Vec<FieldSpec> },
    Max { parts: Vec<FieldSpec> },
    Sum { parts: Vec<FieldSpec> },
    Scale { factor: f64, part: Box<FieldSpec> },
    Rotate { matrix: Vec<Vec<f64>>, part: Box<FieldSpec> },
}

impl FieldSpec {
    /// Materializes the field in dimension `n`.
    pub fn to_field(&self, n: usize) -> Result<ScalarField> {
        match self {
            FieldSpec::Constant { value } => Ok(ScalarField::constant(n, *value)),
            FieldSpec::Linear { vector } => {
                if vector.len() != n {
                    return Err(Error::Config(format!(
                        "linear field has dimension {}, expected {n}",
                        vector.len()
                    )));
                }
                ScalarField::linear(vector.clone())
            }
            FieldSpec::Support { body } => {
                let body = body.to_body()?;
                if body.dim() != n {
                    return Err(Error::Config(format!(
                        "support body has dimension {}, expected {n}",
                        body.dim()
                    )));
                }
                Ok(ScalarField::support(body))
            }
            FieldSpec::Min { parts } => {
                let parts: Result<Vec<ScalarField>> =
                    parts.iter().map(|p| p.to_field(n)).collect();
                ScalarField::min_of(parts?)
            }
            FieldSpec::Max { parts } => {
                let parts: Result<Vec<ScalarField>> =
                    parts.iter().map(|p| p.to_field(n)).collect();
                ScalarField::max_of(parts?)
            }
            FieldSpec::Sum { parts } => {
                let parts: Result<Vec<ScalarField>> =
                    parts.iter().map(|p| p.to_field(n)).collect();
                ScalarField::sum_of(parts?)
            }
            FieldSpec::Scale { factor, part } => Ok(part.to_field(n)?.scaled(*factor)),
            FieldSpec::Rotate { matrix, part } => {
                part.to_field(n)?.rotated(Rotation::new(matrix.clone())?)
            }
        }
    }

    /// Spec of a runtime field; fails for kinds outside the JSON schema
    /// (piecewise linear, sampled, mollified).
    pub fn from_field(field: &ScalarField) -> Result<FieldSpec> {
        Ok(match field.kind() {
            FieldKind::Constant(c) => FieldSpec::Constant { value: *c },
            FieldKind::Linear(a) => FieldSpec::Linear { vector: a.clone() },
            FieldKind::Support(b) => FieldSpec::Support {
                body: BodySpec::from_body(b),
            },
            FieldKind::Min(parts) => FieldSpec::Min {
                parts: parts.iter().map(FieldSpec::from_field).collect::<Result<_>>()?,
            },
            FieldKind::Max(parts) => FieldSpec::Max {
                parts: parts.iter().map(FieldSpec::from_field).collect::<Result<_>>()?,
            },
            FieldKind::Sum(parts) => FieldSpec::Sum {
                parts: parts.iter().map(FieldSpec::from_field).collect::<Result<_>>()?,
            },
            FieldKind::Scale(s, part) => FieldSpec::Scale {
                factor: *s,
                part: Box::new(FieldSpec::from_field(part)?),
            },
            FieldKind::Rotate(r, part) => FieldSpec::Rotate {
                matrix: r.matrix(),
                part: Box::new(FieldSpec::from_field(part)?),
            },
            FieldKind::PlFan(_) | FieldKind::Sampled(_) | FieldKind::Mollified(_) => {
                return Err(Error::Config(
                    "field kind is not representable in the field JSON schema".into(),
                ))
            }
        })
    }
}

/// Fan JSON: a vertex coordinate table plus per-simplex vertex-index lists.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FanSpec {
    pub n: usize,
    pub subdivision: usize,
    pub vertices: Vec<Vec<f64>>,
    pub simplices: Vec<Vec<usize>>,
}

impl FanSpec {
    pub fn from_fan(fan: &SimplicialFan) -> FanSpec {
        FanSpec {
            n: fan.dim(),
            subdivision: fan.subdivision(),
            vertices: fan.vertex_table().to_vec(),
            simplices: fan.simplex_vertex_ids().to_vec(),
        }
    }

    pub fn to_fan(&self) -> Result<Arc<SimplicialFan>> {
        if self.subdivision > 0 {
            // boundary fans rebuild exactly from their parameters
            let fan = SimplicialFan::boundary(self.n, self.subdivision)?;
            if fan.simplex_count() == self.simplices.len() {
                return Ok(fan);
            }
        }
        let cones: Result<Vec<PolyhedralCone>> = self
            .simplices
            .iter()
            .map(|ids| {
                let verts: Result<Vec<Vec<f64>>> = ids
                    .iter()
                    .map(|&i| {
                        self.vertices
                            .get(i)
                            .cloned()
                            .ok_or_else(|| Error::Config(format!("vertex id {i} out of range")))
                    })
                    .collect();
                PolyhedralCone::from_simplex(verts?)
            })
            .collect();
        SimplicialFan::from_cones(self.n, cones?)
    }
}

/// PL field JSON: the fan plus one coefficient row per cone.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlFieldSpec {
    pub fan: FanSpec,
    pub coefficients: Vec<Vec<f64>>,
}

impl PlFieldSpec {
    pub fn from_field(f: &PLField) -> PlFieldSpec {
        PlFieldSpec {
            fan: FanSpec::from_fan(f.fan()),
            coefficients: f.coefficients().to_vec(),
        }
    }

    pub fn to_field(&self) -> Result<PLField> {
        PLField::from_coefficients(self.fan.to_fan()?, self.coefficients.clone())
    }
}

/// Valuation spec JSON: `{"kind":"representation","c0":..,"c1":..,"c2":..}`
/// or `{"kind":"general","F":"<registry id>"}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ValuationSpecJson {
    Representation { c0: f64, c1: f64, c2: f64 },
    General {
        #[serde(rename = "F")]
        f: String,
    },
}

impl ValuationSpecJson {
    pub fn to_spec(&self) -> Result<ValuationSpec> {
        match self {
            ValuationSpecJson::Representation { c0, c1, c2 } => {
                Ok(ValuationSpec::representation(*c0, *c1, *c2))
            }
            ValuationSpecJson::General { f } => Ok(ValuationSpec::General {
                kernel: GeneralKernel::from_id(f)?,
            }),
        }
    }

    pub fn from_spec(spec: &ValuationSpec) -> ValuationSpecJson {
        match spec {
            ValuationSpec::Representation { c0, c1, c2 } => ValuationSpecJson::Representation {
                c0: *c0,
                c1: *c1,
                c2: *c2,
            },
            ValuationSpec::General { kernel } => ValuationSpecJson::General {
                f: kernel.id().to_string(),
            },
        }
    }
}

/// Parses the CLI shorthand `rep:c0,c1,c2` or `general:<kernel-id>`.
pub fn parse_valuation_spec(s: &str) -> Result<ValuationSpec> {
    if let Some(rest) = s.strip_prefix("rep:") {
        let parts: Vec<&str> = rest.split(',').collect();
        if parts.len() != 3 {
            return Err(Error::Config(format!(
                "expected rep:c0,c1,c2 with three constants, got {s:?}"
            )));
        }
        let vals: std::result::Result<Vec<f64>, _> =
            parts.iter().map(|p| p.trim().parse::<f64>()).collect();
        let vals = vals.map_err(|e| Error::Config(format!("bad constant in {s:?}: {e}")))?;
        Ok(ValuationSpec::representation(vals[0], vals[1], vals[2]))
    } else if let Some(id) = s.strip_prefix("general:") {
        Ok(ValuationSpec::General {
            kernel: GeneralKernel::from_id(id.trim())?,
        })
    } else {
        Err(Error::Config(format!(
            "valuation spec must start with rep: or general:, got {s:?}"
        )))
    }
}

/// FNV-1a over the rule's CSV serialization; stable across runs by
/// construction.
pub fn rule_checksum(rule: &QuadratureRule) -> String {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for b in rule.to_csv().as_bytes() {
        hash ^= *b as u64;
        hash = hash.wrapping_mul(0x1000_0000_01b3);
    }
    format!("{hash:016x}")
}

/// Rule metadata echoed into every report.
#[derive(Debug, Clone, Serialize)]
pub struct RuleMeta {
    pub n: usize,
    pub level: u32,
    pub scheme: String,
    pub seed: Option<u64>,
    pub node_count: usize,
    pub weight_sum: f64,
    pub checksum: String,
}

impl RuleMeta {
    pub fn of(rule: &QuadratureRule) -> RuleMeta {
        RuleMeta {
            n: rule.dim(),
            level: rule.level(),
            scheme: rule.scheme().id().to_string(),
            seed: rule.seed(),
            node_count: rule.len(),
            weight_sum: rule.weight_sum(),
            checksum: rule_checksum(rule),
        }
    }
}

/// Self-describing run report. Identical configuration and seeds produce
/// byte-identical reports; wall-clock timing is therefore logged to stderr
/// rather than embedded here.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub command: String,
    pub inputs: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rule: Option<RuleMeta>,
    pub tolerances: serde_json::Value,
    pub results: serde_json::Value,
    pub residuals: serde_json::Value,
}

impl RunReport {
    pub fn new(command: &str) -> RunReport {
        RunReport {
            schema_version: REPORT_SCHEMA_VERSION,
            command: command.to_string(),
            inputs: serde_json::Value::Null,
            rule: None,
            tolerances: serde_json::Value::Null,
            results: serde_json::Value::Null,
            residuals: serde_json::Value::Null,
        }
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization")
    }
}

/// CSV for the divergence experiment, one row per ν.
pub fn counterexample_csv(rows: &[CounterexampleRow]) -> String {
    let mut out = String::from(
        "nu,lambda,N_nu,psi_value_closed,psi_value_sum,sup_norm_bound,sup_norm_measured,\
         grad_bound,grad_max_measured\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{},{:.16e},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            r.nu,
            r.lambda,
            r.n_nu,
            r.psi_value_closed,
            r.psi_value_sum,
            r.sup_norm_bound,
            r.sup_norm_measured,
            r.grad_bound,
            r.grad_max_measured
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere_core::Scheme;

    #[test]
    fn body_spec_roundtrip() {
        let json = r#"{
            "type": "minkowski",
            "parts": [
                {"type": "polytope", "vertices": [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]},
                {"type": "scale", "factor": 2.0,
                 "part": {"type": "ball", "center": [0.0, 0.0, 0.0], "radius": 1.0}},
                {"type": "polar-cone-cap", "generators": [[1.0, 0.0, 0.0], [0.0, 1.0, 1.0]]}
            ]
        }"#;
        let spec: BodySpec = serde_json::from_str(json).unwrap();
        let body = spec.to_body().unwrap();
        let back = BodySpec::from_body(&body);
        let body2 = back.to_body().unwrap();
        let x = [0.3, -0.4, 0.86];
        assert!((body.support(&x).value - body2.support(&x).value).abs() < 1e-15);
    }

    #[test]
    fn field_spec_roundtrip_and_dimension_check() {
        let json = r#"{
            "type": "min",
            "parts": [
                {"type": "support", "body": {"type": "ball", "center": [0.0, 0.0, 0.0], "radius": 1.0}},
                {"type": "sum", "parts": [
                    {"type": "constant", "value": 0.5},
                    {"type": "linear", "vector": [1.0, 0.0, 0.0]}
                ]}
            ]
        }"#;
        let spec: FieldSpec = serde_json::from_str(json).unwrap();
        let field = spec.to_field(3).unwrap();
        assert_eq!(field.dim(), 3);
        assert!(spec.to_field(4).is_err(), "dimension mismatch must fail");
        let back = FieldSpec::from_field(&field).unwrap();
        let field2 = back.to_field(3).unwrap();
        let x = crate::sphere_core::SpherePoint::new(vec![0.2, 0.5, -0.8]).unwrap();
        assert!((field.eval(&x) - field2.eval(&x)).abs() < 1e-15);
    }

    #[test]
    fn malformed_json_reports_position() {
        let bad = "{\"type\": \"constant\", \"value\": }";
        let err = serde_json::from_str::<FieldSpec>(bad).unwrap_err();
        assert!(err.line() >= 1 && err.column() > 0);
    }

    #[test]
    fn valuation_spec_parsing() {
        match parse_valuation_spec("rep:0,0,1").unwrap() {
            ValuationSpec::Representation { c0, c1, c2 } => {
                assert_eq!((c0, c1, c2), (0.0, 0.0, 1.0));
            }
            _ => panic!("expected representation"),
        }
        assert!(parse_valuation_spec("rep:1,2").is_err());
        assert!(parse_valuation_spec("general:dirichlet").is_ok());
        assert!(parse_valuation_spec("general:bogus").is_err());
        assert!(parse_valuation_spec("nope").is_err());
        // JSON form
        let j: ValuationSpecJson =
            serde_json::from_str(r#"{"kind":"general","F":"dirichlet"}"#).unwrap();
        assert!(j.to_spec().is_ok());
    }

    #[test]
    fn pl_field_spec_roundtrip() {
        let fan = crate::piecewise_linear::SimplicialFan::boundary(2, 1).unwrap();
        let u = ScalarField::linear(vec![0.4, -0.9]).unwrap();
        let f = PLField::interpolate(&u, &fan).unwrap();
        let spec = PlFieldSpec::from_field(&f);
        let json = serde_json::to_string(&spec).unwrap();
        let parsed: PlFieldSpec = serde_json::from_str(&json).unwrap();
        let f2 = parsed.to_field().unwrap();
        for t in 0..16 {
            let a = 2.0 * std::f64::consts::PI * (t as f64 + 0.3) / 16.0;
            let x = [a.cos(), a.sin()];
            assert!((f.value(&x).unwrap() - f2.value(&x).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn rule_checksum_is_stable_and_discriminating() {
        let a = QuadratureRule::build(3, 4, Scheme::ProductGauss, None).unwrap();
        let b = QuadratureRule::build(3, 4, Scheme::ProductGauss, None).unwrap();
        let c = QuadratureRule::build(3, 5, Scheme::ProductGauss, None).unwrap();
        assert_eq!(rule_checksum(&a), rule_checksum(&b));
        assert_ne!(rule_checksum(&a), rule_checksum(&c));
    }
}
