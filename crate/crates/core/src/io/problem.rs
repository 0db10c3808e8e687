//! JSON problem files.
//!
//! ```json
//! {
//!   "kind": "discrete",
//!   "n": 1, "r": 1, "N": 2,
//!   "A0": [1], "A1": [1], "B": [1],
//!   "U":  {"type": "box", "lower": [-1], "upper": [1]},
//!   "Q0": {"type": "singleton", "point": [0]},
//!   "Q1": {"type": "box", "lower": [0], "upper": [1]},
//!   "phi": {"type": "coordinate", "indices": [1]}
//! }
//! ```
//!
//! Matrices are row-major flat arrays or nested row arrays. A discrete file
//! may replace `A0`, `A1`, `B`, `U` (and `r`) by
//! `"tabulated": {"triples": [[x, y, z], ...]}`. A continuous file uses
//! `"kind": "continuous"`, has no `N`, and lists meshes in `delta_list`
//! (each `1/K`) with an optional `reference` value for the limit.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::convex::{ConvexFn, ConvexSet, FnKind, SetKind};
use crate::discretization::{ContinuousProblem, MeshSpec};
use crate::duality::DualVariables;
use crate::inclusion::{
    DiscreteProblem, GraphTriple, InclusionMap, SemilinearMap, TabulatedMap, Trajectory,
};
use crate::{Matrix, Vector};

/// Failure to turn a document into a problem.
#[derive(Debug, Clone, PartialEq)]
pub enum ParseError {
    /// Not valid JSON.
    Malformed {
        line: usize,
        column: usize,
        message: String,
    },
    /// Valid JSON that does not follow the schema.
    Schema {
        line: usize,
        column: usize,
        message: String,
    },
    /// Follows the schema but describes an invalid problem.
    Semantic {
        line: Option<usize>,
        message: String,
    },
}

impl ParseError {
    pub fn line(&self) -> Option<usize> {
        match self {
            ParseError::Malformed { line, .. } | ParseError::Schema { line, .. } => Some(*line),
            ParseError::Semantic { line, .. } => *line,
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseError::Malformed {
                line,
                column,
                message,
            } => {
                write!(f, "line {line}, column {column}: malformed JSON: {message}")
            }
            ParseError::Schema {
                line,
                column,
                message,
            } => {
                write!(
                    f,
                    "line {line}, column {column}: schema violation: {message}"
                )
            }
            ParseError::Semantic {
                line: Some(line),
                message,
            } => write!(f, "line {line}: {message}"),
            ParseError::Semantic {
                line: None,
                message,
            } => write!(f, "{message}"),
        }
    }
}

impl std::error::Error for ParseError {}

/// A vector given as a JSON array, or a bare number for dimension 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VecDoc {
    Scalar(f64),
    Array(Vec<f64>),
}

impl VecDoc {
    fn to_vector(&self) -> Vector {
        match self {
            VecDoc::Scalar(x) => Vector::from_element(1, *x),
            VecDoc::Array(v) => Vector::from_vec(v.clone()),
        }
    }

    fn from_vector(v: &Vector) -> Self {
        VecDoc::Array(v.iter().copied().collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixDoc {
    Nested(Vec<Vec<f64>>),
    Flat(Vec<f64>),
}

impl MatrixDoc {
    fn to_matrix(&self, rows: usize, cols: usize) -> Result<Matrix, String> {
        match self {
            MatrixDoc::Flat(v) => {
                if v.len() != rows * cols {
                    return Err(format!(
                        "expected {rows}x{cols} = {} entries, got {}",
                        rows * cols,
                        v.len()
                    ));
                }
                Ok(Matrix::from_row_slice(rows, cols, v))
            }
            MatrixDoc::Nested(r) => {
                if r.len() != rows || r.iter().any(|row| row.len() != cols) {
                    return Err(format!("expected {rows} rows of {cols} entries"));
                }
                Ok(Matrix::from_fn(rows, cols, |i, j| r[i][j]))
            }
        }
    }

    fn from_matrix(m: &Matrix) -> Self {
        MatrixDoc::Nested(
            (0..m.nrows())
                .map(|i| m.row(i).iter().copied().collect())
                .collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum SetDoc {
    Box { lower: VecDoc, upper: VecDoc },
    Ball { center: VecDoc, radius: f64 },
    Polytope { vertices: Vec<VecDoc> },
    Singleton { point: VecDoc },
}

impl SetDoc {
    fn build(&self) -> crate::Result<ConvexSet> {
        match self {
            SetDoc::Box { lower, upper } => ConvexSet::boxed(lower.to_vector(), upper.to_vector()),
            SetDoc::Ball { center, radius } => ConvexSet::ball(center.to_vector(), *radius),
            SetDoc::Polytope { vertices } => {
                ConvexSet::polytope(vertices.iter().map(VecDoc::to_vector).collect())
            }
            SetDoc::Singleton { point } => ConvexSet::singleton(point.to_vector()),
        }
    }

    fn from_set(s: &ConvexSet) -> Self {
        match s.kind() {
            SetKind::Box { lower, upper } => SetDoc::Box {
                lower: VecDoc::from_vector(lower),
                upper: VecDoc::from_vector(upper),
            },
            SetKind::Ball { center, radius } => SetDoc::Ball {
                center: VecDoc::from_vector(center),
                radius: *radius,
            },
            SetKind::Polytope { vertices } => SetDoc::Polytope {
                vertices: vertices.iter().map(VecDoc::from_vector).collect(),
            },
            SetKind::Singleton { point } => SetDoc::Singleton {
                point: VecDoc::from_vector(point),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum PhiDoc {
    Affine {
        c: VecDoc,
        #[serde(default)]
        b: f64,
    },
    Quadratic {
        #[serde(rename = "P")]
        p: MatrixDoc,
        c: Option<VecDoc>,
        #[serde(default)]
        b: f64,
    },
    Coordinate {
        indices: Vec<usize>,
    },
    Norm1 {},
    Norm2sq {},
}

impl PhiDoc {
    fn build(&self, dim: usize) -> Result<ConvexFn, String> {
        let r = match self {
            PhiDoc::Affine { c, b } => ConvexFn::affine(c.to_vector(), *b),
            PhiDoc::Quadratic { p, c, b } => {
                let p = p.to_matrix(dim, dim)?;
                let c = c
                    .as_ref()
                    .map_or_else(|| Vector::zeros(dim), VecDoc::to_vector);
                ConvexFn::quadratic(p, c, *b)
            }
            PhiDoc::Coordinate { indices } => ConvexFn::coordinate_select(dim, indices.clone()),
            PhiDoc::Norm1 {} => Ok(ConvexFn::norm1(dim)),
            PhiDoc::Norm2sq {} => Ok(ConvexFn::norm2sq(dim)),
        };
        let f = r.map_err(|e| e.to_string())?;
        if f.dim() != dim {
            return Err(format!(
                "terminal cost must act on R^{dim}, got dimension {}",
                f.dim()
            ));
        }
        Ok(f)
    }

    fn from_fn(f: &ConvexFn) -> crate::Result<Self> {
        Ok(match f.kind() {
            FnKind::Affine { c, b } => PhiDoc::Affine {
                c: VecDoc::from_vector(c),
                b: *b,
            },
            FnKind::Quadratic { p, c, b, .. } => PhiDoc::Quadratic {
                p: MatrixDoc::from_matrix(p),
                c: Some(VecDoc::from_vector(c)),
                b: *b,
            },
            FnKind::CoordinateSelect { indices, .. } => PhiDoc::Coordinate {
                indices: indices.clone(),
            },
            FnKind::Norm1 { .. } => PhiDoc::Norm1 {},
            FnKind::Norm2Sq { .. } => PhiDoc::Norm2sq {},
            FnKind::Sampled { .. } | FnKind::Composite { .. } => {
                return Err(crate::Error::Unsupported(
                    "only affine, quadratic, coordinate, norm1 and norm2sq costs can be written"
                        .into(),
                ))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TabulatedDoc {
    pub triples: Vec<[VecDoc; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscreteDoc {
    pub kind: String,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<usize>,
    #[serde(rename = "N")]
    pub horizon: usize,
    #[serde(rename = "A0", default, skip_serializing_if = "Option::is_none")]
    pub a0: Option<MatrixDoc>,
    #[serde(rename = "A1", default, skip_serializing_if = "Option::is_none")]
    pub a1: Option<MatrixDoc>,
    #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
    pub b: Option<MatrixDoc>,
    #[serde(rename = "U", default, skip_serializing_if = "Option::is_none")]
    pub u: Option<SetDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tabulated: Option<TabulatedDoc>,
    #[serde(rename = "Q0")]
    pub q0: SetDoc,
    #[serde(rename = "Q1")]
    pub q1: SetDoc,
    pub phi: PhiDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContinuousDoc {
    pub kind: String,
    pub n: usize,
    pub r: usize,
    #[serde(rename = "A0")]
    pub a0: MatrixDoc,
    #[serde(rename = "A1")]
    pub a1: MatrixDoc,
    #[serde(rename = "B")]
    pub b: MatrixDoc,
    #[serde(rename = "U")]
    pub u: SetDoc,
    #[serde(rename = "Q0")]
    pub q0: SetDoc,
    #[serde(rename = "Q1")]
    pub q1: SetDoc,
    pub phi: PhiDoc,
    #[serde(default)]
    pub delta_list: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemDoc {
    Discrete(DiscreteDoc),
    Continuous(ContinuousDoc),
}

#[derive(Deserialize)]
struct KindProbe {
    kind: String,
}

impl ProblemDoc {
    fn parse(text: &str) -> Result<Self, ParseError> {
        let probe: KindProbe = from_json(text)?;
        match probe.kind.as_str() {
            "discrete" => from_json(text).map(ProblemDoc::Discrete),
            "continuous" => from_json(text).map(ProblemDoc::Continuous),
            other => Err(ParseError::Schema {
                line: locate(text, "kind").unwrap_or(1),
                column: 1,
                message: format!("unknown kind `{other}`, expected `discrete` or `continuous`"),
            }),
        }
    }

    fn to_json(&self) -> String {
        match self {
            ProblemDoc::Discrete(d) => serde_json::to_string_pretty(d),
            ProblemDoc::Continuous(c) => serde_json::to_string_pretty(c),
        }
        .expect("problem documents serialize")
    }
}

/// A continuous problem with the meshes to sweep and an optional limit value.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousSpec {
    pub problem: ContinuousProblem,
    pub meshes: Vec<MeshSpec>,
    pub reference: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSpec {
    Discrete(DiscreteProblem),
    Continuous(ContinuousSpec),
}

/// Parses and validates a problem document.
pub fn parse_problem(text: &str) -> Result<ProblemSpec, ParseError> {
    let doc = ProblemDoc::parse(text)?;
    let sem = |key: &str, message: String| ParseError::Semantic {
        line: locate(text, key),
        message,
    };
    match doc {
        ProblemDoc::Discrete(d) => {
            let n = d.n;
            if n == 0 {
                return Err(sem("n", "state dimension n must be >= 1".into()));
            }
            let map: InclusionMap = match &d.tabulated {
                Some(tab) => {
                    if d.a0.is_some() || d.a1.is_some() || d.b.is_some() || d.u.is_some() {
                        return Err(sem(
                            "tabulated",
                            "a tabulated map excludes A0, A1, B and U".into(),
                        ));
                    }
                    let triples = tab
                        .triples
                        .iter()
                        .map(|[x, y, z]| GraphTriple {
                            x: x.to_vector(),
                            y: y.to_vector(),
                            z: z.to_vector(),
                        })
                        .collect();
                    let m =
                        TabulatedMap::new(triples).map_err(|e| sem("tabulated", e.to_string()))?;
                    if m.state_dim() != n {
                        return Err(sem(
                            "tabulated",
                            format!("triples have dimension {}, expected n = {n}", m.state_dim()),
                        ));
                    }
                    m.into()
                }
                None => {
                    let missing =
                        |k: &str| sem("kind", format!("semilinear problem needs field {k}"));
                    let r = d.r.ok_or_else(|| missing("r"))?;
                    let (a0, a1, b, u) = (
                        d.a0.as_ref().ok_or_else(|| missing("A0"))?,
                        d.a1.as_ref().ok_or_else(|| missing("A1"))?,
                        d.b.as_ref().ok_or_else(|| missing("B"))?,
                        d.u.as_ref().ok_or_else(|| missing("U"))?,
                    );
                    build_map(text, n, r, a0, a1, b, u)?.into()
                }
            };
            let (phi, q0, q1) = build_common(text, n, &d.phi, &d.q0, &d.q1)?;
            DiscreteProblem::new(d.horizon, map, phi, q0, q1)
                .map(ProblemSpec::Discrete)
                .map_err(|e| sem("N", e.to_string()))
        }
        ProblemDoc::Continuous(c) => {
            if c.n == 0 {
                return Err(sem("n", "state dimension n must be >= 1".into()));
            }
            let map = build_map(text, c.n, c.r, &c.a0, &c.a1, &c.b, &c.u)?;
            let (phi, q0, q1) = build_common(text, c.n, &c.phi, &c.q0, &c.q1)?;
            let problem =
                ContinuousProblem::new(map, phi, q0, q1).map_err(|e| sem("phi", e.to_string()))?;
            let meshes = c
                .delta_list
                .iter()
                .map(|&d| MeshSpec::from_delta(d).map_err(|e| sem("delta_list", e.to_string())))
                .collect::<Result<Vec<_>, _>>()?;
            if let Some(r) = c.reference {
                if !r.is_finite() {
                    return Err(sem("reference", "reference value must be finite".into()));
                }
            }
            Ok(ProblemSpec::Continuous(ContinuousSpec {
                problem,
                meshes,
                reference: c.reference,
            }))
        }
    }
}

fn build_map(
    text: &str,
    n: usize,
    r: usize,
    a0: &MatrixDoc,
    a1: &MatrixDoc,
    b: &MatrixDoc,
    u: &SetDoc,
) -> Result<SemilinearMap, ParseError> {
    let sem = |key: &str, message: String| ParseError::Semantic {
        line: locate(text, key),
        message,
    };
    if r == 0 {
        return Err(sem("r", "control dimension r must be >= 1".into()));
    }
    let a0 = a0
        .to_matrix(n, n)
        .map_err(|m| sem("A0", format!("A0: {m}")))?;
    let a1 = a1
        .to_matrix(n, n)
        .map_err(|m| sem("A1", format!("A1: {m}")))?;
    let b = b.to_matrix(n, r).map_err(|m| sem("B", format!("B: {m}")))?;
    let u = u.build().map_err(|e| sem("U", format!("U: {e}")))?;
    if u.dim() != r {
        return Err(sem(
            "U",
            format!("U has dimension {}, expected r = {r}", u.dim()),
        ));
    }
    SemilinearMap::new(a0, a1, b, u).map_err(|e| sem("A0", e.to_string()))
}

fn build_common(
    text: &str,
    n: usize,
    phi: &PhiDoc,
    q0: &SetDoc,
    q1: &SetDoc,
) -> Result<(ConvexFn, ConvexSet, ConvexSet), ParseError> {
    let sem = |key: &str, message: String| ParseError::Semantic {
        line: locate(text, key),
        message,
    };
    let phi = phi
        .build(2 * n)
        .map_err(|m| sem("phi", format!("phi: {m}")))?;
    let mut sets = Vec::with_capacity(2);
    for (key, doc) in [("Q0", q0), ("Q1", q1)] {
        let s = doc.build().map_err(|e| sem(key, format!("{key}: {e}")))?;
        if s.dim() != n {
            return Err(sem(
                key,
                format!("{key} has dimension {}, expected n = {n}", s.dim()),
            ));
        }
        sets.push(s);
    }
    let q1 = sets.pop().expect("two sets");
    let q0 = sets.pop().expect("two sets");
    Ok((phi, q0, q1))
}

/// 1-based line of the first occurrence of `"key"` in the document.
fn locate(text: &str, key: &str) -> Option<usize> {
    let needle = format!("\"{key}\"");
    text.lines()
        .position(|l| l.contains(&needle))
        .map(|i| i + 1)
}

fn from_json<T: serde::de::DeserializeOwned>(text: &str) -> Result<T, ParseError> {
    serde_json::from_str(text).map_err(|e| {
        let (line, column, message) = (e.line(), e.column(), e.to_string());
        match e.classify() {
            serde_json::error::Category::Data => ParseError::Schema {
                line,
                column,
                message,
            },
            _ => ParseError::Malformed {
                line,
                column,
                message,
            },
        }
    })
}

fn set_doc(s: &ConvexSet) -> SetDoc {
    SetDoc::from_set(s)
}

/// Writes a problem back as a JSON document accepted by [`parse_problem`].
pub fn emit_problem(spec: &ProblemSpec) -> crate::Result<String> {
    let doc = match spec {
        ProblemSpec::Discrete(p) => {
            let n = p.state_dim();
            let mut d = DiscreteDoc {
                kind: "discrete".into(),
                n,
                r: None,
                horizon: p.horizon(),
                a0: None,
                a1: None,
                b: None,
                u: None,
                tabulated: None,
                q0: set_doc(p.q0()),
                q1: set_doc(p.q1()),
                phi: PhiDoc::from_fn(p.phi())?,
            };
            match p.map() {
                InclusionMap::Semilinear(m) => {
                    d.r = Some(m.control_dim());
                    d.a0 = Some(MatrixDoc::from_matrix(m.a0()));
                    d.a1 = Some(MatrixDoc::from_matrix(m.a1()));
                    d.b = Some(MatrixDoc::from_matrix(m.b()));
                    d.u = Some(set_doc(m.control_set()));
                }
                InclusionMap::Tabulated(m) => {
                    d.tabulated = Some(TabulatedDoc {
                        triples: m
                            .triples()
                            .iter()
                            .map(|t| {
                                [
                                    VecDoc::from_vector(&t.x),
                                    VecDoc::from_vector(&t.y),
                                    VecDoc::from_vector(&t.z),
                                ]
                            })
                            .collect(),
                    });
                }
            }
            ProblemDoc::Discrete(d)
        }
        ProblemSpec::Continuous(c) => {
            let p = &c.problem;
            let m = p.map();
            ProblemDoc::Continuous(ContinuousDoc {
                kind: "continuous".into(),
                n: p.state_dim(),
                r: m.control_dim(),
                a0: MatrixDoc::from_matrix(m.a0()),
                a1: MatrixDoc::from_matrix(m.a1()),
                b: MatrixDoc::from_matrix(m.b()),
                u: set_doc(m.control_set()),
                q0: set_doc(p.q0()),
                q1: set_doc(p.q1()),
                phi: PhiDoc::from_fn(p.phi())?,
                delta_list: c.meshes.iter().map(MeshSpec::delta).collect(),
                reference: c.reference,
            })
        }
    };
    Ok(doc.to_json())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DualDoc {
    xstar: Vec<VecDoc>,
    mustar: Vec<VecDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PrimalDoc {
    states: Vec<VecDoc>,
    #[serde(default)]
    controls: Vec<VecDoc>,
}

/// Builds a cost on `R^dim` from a `phi` object of the problem schema.
pub fn parse_cost(value: serde_json::Value, dim: usize) -> Result<ConvexFn, ParseError> {
    let doc: PhiDoc = serde_json::from_value(value).map_err(|e| ParseError::Schema {
        line: 1,
        column: 1,
        message: e.to_string(),
    })?;
    doc.build(dim).map_err(|message| ParseError::Semantic {
        line: None,
        message,
    })
}

/// Parses `{"xstar": [...], "mustar": [...]}`.
pub fn parse_dual(text: &str) -> Result<DualVariables, ParseError> {
    let doc: DualDoc = from_json(text)?;
    DualVariables::new(
        doc.xstar.iter().map(VecDoc::to_vector).collect(),
        doc.mustar.iter().map(VecDoc::to_vector).collect(),
    )
    .map_err(|e| ParseError::Semantic {
        line: locate(text, "mustar"),
        message: e.to_string(),
    })
}

pub fn emit_dual(dv: &DualVariables) -> String {
    let doc = DualDoc {
        xstar: dv.xstar.iter().map(VecDoc::from_vector).collect(),
        mustar: dv.mustar.iter().map(VecDoc::from_vector).collect(),
    };
    serde_json::to_string_pretty(&doc).expect("dual documents serialize")
}

/// Parses `{"states": [...], "controls": [...]}`.
pub fn parse_trajectory(text: &str) -> Result<Trajectory, ParseError> {
    let doc: PrimalDoc = from_json(text)?;
    Ok(Trajectory {
        states: doc.states.iter().map(VecDoc::to_vector).collect(),
        controls: doc.controls.iter().map(VecDoc::to_vector).collect(),
    })
}

pub fn emit_trajectory(traj: &Trajectory) -> String {
    let doc = PrimalDoc {
        states: traj.states.iter().map(VecDoc::from_vector).collect(),
        controls: traj.controls.iter().map(VecDoc::from_vector).collect(),
    };
    serde_json::to_string_pretty(&doc).expect("trajectory documents serialize")
}
