//! Two-qubit matchgates and nearest-neighbour matchgate circuits.
//!
//! Matrices use the basis order `|00>, |01>, |10>, |11>` where the left ket
//! belongs to the lower wire index. In that order a matchgate acts with one
//! 2x2 block on the even subspace `{|00>, |11>}` (the "outer" entries
//! 0 and 3) and another on the odd subspace `{|01>, |10>}` (entries 1, 2).

use std::fmt;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::format::{ser_f64_pair, ser_opt_f64};

pub type Mat4 = [[Complex64; 4]; 4];

/// Default tolerance for unitarity and matchgate checks.
pub const GATE_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GateError {
    #[error("matrix is not unitary (max |U^dag U - I| = {deviation:e})")]
    NonUnitary { deviation: f64 },
    #[error("layer {layer}, gate {gate}: wires ({a}, {b}) are not an adjacent pair on {n} wires")]
    InvalidWire {
        layer: usize,
        gate: usize,
        a: usize,
        b: usize,
        n: usize,
    },
    #[error("layer {layer}: gate {gate} shares a wire with an earlier gate in the same layer")]
    OverlappingGates { layer: usize, gate: usize },
    #[error("layer {layer}, gate {gate}: not a matchgate")]
    NotAMatchgate { layer: usize, gate: usize },
    #[error("layer {layer}, gate {gate}: {source}")]
    GateMatrix {
        layer: usize,
        gate: usize,
        #[source]
        source: Box<GateError>,
    },
}

#[derive(Debug, Error)]
pub enum CircuitIoError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("gate {kind} is missing field `{field}`")]
    MissingField { kind: &'static str, field: &'static str },
    #[error("custom gate matrix must have 16 entries, got {0}")]
    MatrixShape(usize),
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub fn identity4() -> Mat4 {
    let mut m = [[ZERO; 4]; 4];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = ONE;
    }
    m
}

pub fn matmul4(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut out = [[ZERO; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = (0..4).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

pub fn adjoint4(a: &Mat4) -> Mat4 {
    let mut out = [[ZERO; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = a[j][i].conj();
        }
    }
    out
}

/// `U_X(t) = cos(t/2) I + i sin(t/2) X (x) X`.
pub fn ux_gate(t: f64) -> Mat4 {
    let c = Complex64::new((t / 2.0).cos(), 0.0);
    let s = Complex64::new(0.0, (t / 2.0).sin());
    [
        [c, ZERO, ZERO, s],
        [ZERO, c, s, ZERO],
        [ZERO, s, c, ZERO],
        [s, ZERO, ZERO, c],
    ]
}

/// SWAP with a `-1` on `|11>`.
pub fn fswap_gate() -> Mat4 {
    [
        [ONE, ZERO, ZERO, ZERO],
        [ZERO, ZERO, ONE, ZERO],
        [ZERO, ONE, ZERO, ZERO],
        [ZERO, ZERO, ZERO, -ONE],
    ]
}

pub fn unitarity_deviation(u: &Mat4) -> f64 {
    let p = matmul4(&adjoint4(u), u);
    let id = identity4();
    let mut worst = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            worst = worst.max((p[i][j] - id[i][j]).norm());
        }
    }
    worst
}

const OFF_BLOCK: [(usize, usize); 8] = [
    (0, 1),
    (0, 2),
    (1, 0),
    (1, 3),
    (2, 0),
    (2, 3),
    (3, 1),
    (3, 2),
];

/// Whether `u` is `e^{i phi} (W (+) Q)` with `W, Q` in SU(2).
///
/// After the off-block entries vanish, the common phase is fixed by
/// requiring `det W = det Q`, so no branch of `phi` is ever chosen.
pub fn is_matchgate(u: &Mat4, tol: f64) -> Result<bool, GateError> {
    let deviation = unitarity_deviation(u);
    if deviation > tol {
        return Err(GateError::NonUnitary { deviation });
    }
    if OFF_BLOCK.iter().any(|&(i, j)| u[i][j].norm() > tol) {
        return Ok(false);
    }
    let det_outer = u[0][0] * u[3][3] - u[0][3] * u[3][0];
    let det_inner = u[1][1] * u[2][2] - u[1][2] * u[2][1];
    Ok((det_outer - det_inner).norm() <= tol)
}

#[derive(Debug, Clone, PartialEq)]
pub enum GateKind {
    /// `U_X(t)`, angle in radians.
    UX(f64),
    FSwap,
    Custom(Box<Mat4>),
}

impl GateKind {
    pub fn matrix(&self) -> Mat4 {
        match self {
            GateKind::UX(t) => ux_gate(*t),
            GateKind::FSwap => fswap_gate(),
            GateKind::Custom(m) => **m,
        }
    }

    fn tag(&self) -> &'static str {
        match self {
            GateKind::UX(_) => "UX",
            GateKind::FSwap => "FSWAP",
            GateKind::Custom(_) => "CUSTOM",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gate2Q {
    pub kind: GateKind,
    pub wires: (usize, usize),
}

impl Gate2Q {
    pub fn new(kind: GateKind, a: usize, b: usize) -> Self {
        Self { kind, wires: (a, b) }
    }

    /// Gate on the adjacent pair `(lower, lower + 1)`.
    pub fn on(kind: GateKind, lower: usize) -> Self {
        Self::new(kind, lower, lower + 1)
    }

    pub fn ux(t: f64, lower: usize) -> Self {
        Self::on(GateKind::UX(t), lower)
    }

    pub fn fswap(lower: usize) -> Self {
        Self::on(GateKind::FSwap, lower)
    }

    pub fn matrix(&self) -> Mat4 {
        self.kind.matrix()
    }

    pub fn lower(&self) -> usize {
        self.wires.0
    }
}

impl fmt::Display for Gate2Q {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            GateKind::UX(t) => write!(f, "UX({t})"),
            other => f.write_str(other.tag()),
        }?;
        write!(f, "[{},{}]", self.wires.0, self.wires.1)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MatchgateCircuit {
    pub n: usize,
    pub layers: Vec<Vec<Gate2Q>>,
}

impl MatchgateCircuit {
    pub fn new(n: usize) -> Self {
        Self { n, layers: Vec::new() }
    }

    pub fn with_layers(n: usize, layers: Vec<Vec<Gate2Q>>) -> Self {
        Self { n, layers }
    }

    /// Packs a gate sequence into layers, placing each gate in the earliest
    /// layer after every layer that already touches one of its wires. The
    /// resulting circuit implements the same unitary as the sequence.
    pub fn compact(n: usize, gates: impl IntoIterator<Item = Gate2Q>) -> Self {
        let mut next_free = vec![0usize; n.max(1)];
        let mut layers: Vec<Vec<Gate2Q>> = Vec::new();
        for g in gates {
            let (a, b) = g.wires;
            let slot = next_free.get(a).copied().unwrap_or(0).max(next_free.get(b).copied().unwrap_or(0));
            if slot == layers.len() {
                layers.push(Vec::new());
            }
            layers[slot].push(g);
            for w in [a, b] {
                if let Some(nf) = next_free.get_mut(w) {
                    *nf = slot + 1;
                }
            }
        }
        Self { n, layers }
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn gate_count(&self) -> usize {
        self.layers.iter().map(Vec::len).sum()
    }

    pub fn gates(&self) -> impl Iterator<Item = &Gate2Q> {
        self.layers.iter().flatten()
    }

    pub fn push_layer(&mut self, layer: Vec<Gate2Q>) {
        self.layers.push(layer);
    }

    /// Appends the layers of `other`, which must act on the same wires.
    pub fn extend(&mut self, other: MatchgateCircuit) {
        debug_assert_eq!(self.n, other.n);
        self.layers.extend(other.layers);
    }

    /// Places `other` (on `other.n` wires) onto wires `offset..offset+other.n`,
    /// merging layer by layer with the existing circuit.
    pub fn overlay(&mut self, other: &MatchgateCircuit, offset: usize) {
        for (i, layer) in other.layers.iter().enumerate() {
            if i == self.layers.len() {
                self.layers.push(Vec::new());
            }
            self.layers[i].extend(layer.iter().map(|g| Gate2Q {
                kind: g.kind.clone(),
                wires: (g.wires.0 + offset, g.wires.1 + offset),
            }));
        }
    }

    pub fn to_json(&self) -> Result<String, CircuitIoError> {
        Ok(serde_json::to_string_pretty(&CircuitJson::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self, CircuitIoError> {
        let raw: CircuitJson = serde_json::from_str(s)?;
        raw.try_into()
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<(), CircuitIoError> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self, CircuitIoError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Checks wiring, layer disjointness and that every gate is a matchgate.
pub fn validate_circuit(c: &MatchgateCircuit) -> Result<(), GateError> {
    validate_circuit_with_tol(c, GATE_TOL)
}

pub fn validate_circuit_with_tol(c: &MatchgateCircuit, tol: f64) -> Result<(), GateError> {
    for (li, layer) in c.layers.iter().enumerate() {
        let mut used = vec![false; c.n];
        for (gi, g) in layer.iter().enumerate() {
            let (a, b) = g.wires;
            if b != a + 1 || b >= c.n {
                return Err(GateError::InvalidWire {
                    layer: li,
                    gate: gi,
                    a,
                    b,
                    n: c.n,
                });
            }
            if used[a] || used[b] {
                return Err(GateError::OverlappingGates { layer: li, gate: gi });
            }
            used[a] = true;
            used[b] = true;
            let ok = is_matchgate(&g.matrix(), tol).map_err(|e| GateError::GateMatrix {
                layer: li,
                gate: gi,
                source: Box::new(e),
            })?;
            if !ok {
                return Err(GateError::NotAMatchgate { layer: li, gate: gi });
            }
        }
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct CircuitJson {
    n: usize,
    layers: Vec<Vec<GateJson>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct GateJson {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none", serialize_with = "ser_opt_f64")]
    t: Option<f64>,
    wires: [usize; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    matrix: Option<Vec<Entry>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(transparent)]
struct Entry(#[serde(serialize_with = "ser_f64_pair")] [f64; 2]);

impl From<&MatchgateCircuit> for CircuitJson {
    fn from(c: &MatchgateCircuit) -> Self {
        let layers = c
            .layers
            .iter()
            .map(|layer| {
                layer
                    .iter()
                    .map(|g| GateJson {
                        kind: g.kind.tag().to_string(),
                        t: match g.kind {
                            GateKind::UX(t) => Some(t),
                            _ => None,
                        },
                        wires: [g.wires.0, g.wires.1],
                        matrix: match &g.kind {
                            GateKind::Custom(m) => {
                                Some(m.iter().flatten().map(|z| Entry([z.re, z.im])).collect())
                            }
                            _ => None,
                        },
                    })
                    .collect()
            })
            .collect();
        CircuitJson { n: c.n, layers }
    }
}

impl TryFrom<CircuitJson> for MatchgateCircuit {
    type Error = CircuitIoError;

    fn try_from(raw: CircuitJson) -> Result<Self, Self::Error> {
        let mut layers = Vec::with_capacity(raw.layers.len());
        for layer in raw.layers {
            let mut out = Vec::with_capacity(layer.len());
            for g in layer {
                let kind = match g.kind.as_str() {
                    "UX" => GateKind::UX(g.t.ok_or(CircuitIoError::MissingField { kind: "UX", field: "t" })?),
                    "FSWAP" => GateKind::FSwap,
                    "CUSTOM" => {
                        let entries = g.matrix.ok_or(CircuitIoError::MissingField {
                            kind: "CUSTOM",
                            field: "matrix",
                        })?;
                        if entries.len() != 16 {
                            return Err(CircuitIoError::MatrixShape(entries.len()));
                        }
                        let mut m = [[ZERO; 4]; 4];
                        for (k, Entry([re, im])) in entries.into_iter().enumerate() {
                            m[k / 4][k % 4] = Complex64::new(re, im);
                        }
                        GateKind::Custom(Box::new(m))
                    }
                    other => {
                        return Err(CircuitIoError::Json(serde::de::Error::unknown_variant(
                            other,
                            &["UX", "FSWAP", "CUSTOM"],
                        )))
                    }
                };
                out.push(Gate2Q::new(kind, g.wires[0], g.wires[1]));
            }
            layers.push(out);
        }
        Ok(MatchgateCircuit { n: raw.n, layers })
    }
}
