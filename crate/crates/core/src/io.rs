//! JSON shapes of plans, measures and flows.
//!
//! ```text
//! plan     {"atoms":[{"mass":m,"vertices":[[x,y],...]},...]}
//! measure  {"atoms":[{"p":[x,y],"w":m},...]}
//! flow     {"edges":[{"a":[x,y],"b":[x,y],"w":m},...]}
//! ```
//!
//! [`TrafficPlan`], [`AtomicMeasure`] and [`EulerFlow`] serialize through
//! these types, so any report embedding them uses the same layout.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::flow::EulerFlow;
use crate::geometry::Point;
use crate::measure::AtomicMeasure;
use crate::plan::TrafficPlan;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomJson {
    pub mass: f64,
    pub vertices: Vec<Point>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanJson {
    pub atoms: Vec<AtomJson>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiracJson {
    pub p: Point,
    pub w: f64,
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureJson {
    pub atoms: Vec<DiracJson>,
    /// Only written for signed measures; negative weights imply it on input.
    #[serde(default, skip_serializing_if = "is_false")]
    pub signed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeJson {
    pub a: Point,
    pub b: Point,
    pub w: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowJson {
    pub edges: Vec<EdgeJson>,
}

/// Source and target marginals, as read by the optimizer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Marginals {
    pub mu_minus: AtomicMeasure,
    pub mu_plus: AtomicMeasure,
}

impl From<TrafficPlan> for PlanJson {
    fn from(plan: TrafficPlan) -> Self {
        PlanJson {
            atoms: plan
                .into_atoms()
                .into_iter()
                .map(|a| AtomJson {
                    mass: a.mass,
                    vertices: a.curve.vertices().to_vec(),
                })
                .collect(),
        }
    }
}

impl TryFrom<PlanJson> for TrafficPlan {
    type Error = Error;

    fn try_from(json: PlanJson) -> Result<Self, Error> {
        TrafficPlan::from_polylines(json.atoms.into_iter().map(|a| (a.mass, a.vertices)))
    }
}

impl From<AtomicMeasure> for MeasureJson {
    fn from(mu: AtomicMeasure) -> Self {
        MeasureJson {
            signed: mu.is_signed(),
            atoms: mu
                .atoms()
                .iter()
                .map(|(p, w)| DiracJson { p: p.clone(), w: *w })
                .collect(),
        }
    }
}

impl TryFrom<MeasureJson> for AtomicMeasure {
    type Error = Error;

    fn try_from(json: MeasureJson) -> Result<Self, Error> {
        let mut dim = None;
        for a in &json.atoms {
            if !a.p.is_finite() || !a.w.is_finite() {
                return Err(Error::InvalidMass(a.w));
            }
            let expected = *dim.get_or_insert(a.p.dim());
            if expected != a.p.dim() {
                return Err(Error::DimensionMismatch {
                    expected,
                    found: a.p.dim(),
                });
            }
        }
        Ok(AtomicMeasure::from_atoms(
            json.atoms.into_iter().map(|a| (a.p, a.w)),
            json.signed,
        ))
    }
}

impl From<EulerFlow> for FlowJson {
    fn from(flow: EulerFlow) -> Self {
        FlowJson {
            edges: flow
                .segments()
                .map(|(a, b, w)| EdgeJson {
                    a: a.clone(),
                    b: b.clone(),
                    w,
                })
                .collect(),
        }
    }
}

impl TryFrom<FlowJson> for EulerFlow {
    type Error = Error;

    fn try_from(json: FlowJson) -> Result<Self, Error> {
        EulerFlow::from_segments(json.edges.into_iter().map(|e| (e.a, e.b, e.w)))
    }
}
