//! Convex bodies driven entirely through their support functions
//! `h_K(x) = max_{y in K} <x, y>`.
//!
//! Bodies are evaluators, not meshes: every derived kind (Minkowski sum,
//! translate, scale, polar-cone cap) answers support queries exactly by
//! delegating to its parts, and each query also returns a maximizing witness
//! `y* in K`, which is the Euclidean gradient of `h_K` wherever the argmax is
//! unique.

use crate::linalg::{add, dot, norm, scale, sub};
use crate::sphere_core::{QuadratureRule, SpherePoint, TangentVector};
use crate::{Error, Result};

/// Most generators a cone may carry for the face-enumeration projection.
pub const MAX_CONE_GENERATORS: usize = 20;

/// A closed convex cone `{ Σ t_i g_i : t_i >= 0 }` with apex at the origin.
///
/// Cones that are linear subspaces (the generator set is closed under
/// negation) are detected at construction and project by orthogonal
/// projection instead of face enumeration.
#[derive(Debug, Clone)]
pub struct PolyhedralCone {
    dim: usize,
    generators: Vec<Vec<f64>>,
    simplex_vertices: Option<Vec<Vec<f64>>>,
    subspace_basis: Option<Vec<Vec<f64>>>,
}

impl PolyhedralCone {
    pub fn new(generators: Vec<Vec<f64>>) -> Result<Self> {
        if generators.is_empty() {
            return Err(Error::Config("cone needs at least one generator".into()));
        }
        let dim = generators[0].len();
        if dim < 2 || generators.iter().any(|g| g.len() != dim) {
            return Err(Error::Config("cone generators must share a dimension >= 2".into()));
        }
        if generators.iter().any(|g| norm(g) < 1e-14) {
            return Err(Error::Config("cone generators must be nonzero".into()));
        }
        let subspace_basis = detect_subspace(&generators);
        Ok(PolyhedralCone {
            dim,
            generators,
            simplex_vertices: None,
            subspace_basis,
        })
    }

    /// Cone spanned radially by a simplex on the boundary of a hypercube;
    /// the simplex vertices double as the generators.
    pub fn from_simplex(vertices: Vec<Vec<f64>>) -> Result<Self> {
        let mut cone = PolyhedralCone::new(vertices.clone())?;
        cone.simplex_vertices = Some(vertices);
        Ok(cone)
    }

    /// A linear subspace seen as a cone; `basis` need not be orthonormal.
    pub fn subspace(basis: Vec<Vec<f64>>) -> Result<Self> {
        if basis.is_empty() {
            return Err(Error::Config("subspace cone needs at least one basis vector".into()));
        }
        let dim = basis[0].len();
        let ortho = orthonormalize(&basis)
            .ok_or_else(|| Error::Config("subspace basis is degenerate".into()))?;
        let mut generators = Vec::with_capacity(2 * ortho.len());
        for b in &ortho {
            generators.push(b.clone());
            generators.push(scale(b, -1.0));
        }
        Ok(PolyhedralCone {
            dim,
            generators,
            simplex_vertices: None,
            subspace_basis: Some(ortho),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn generators(&self) -> &[Vec<f64>] {
        &self.generators
    }

    pub fn simplex_vertices(&self) -> Option<&[Vec<f64>]> {
        self.simplex_vertices.as_deref()
    }

    pub fn is_subspace(&self) -> bool {
        self.subspace_basis.is_some()
    }

    /// Metric projection: the unique closest point of the cone and its
    /// distance. Computed by enumerating generator subsets (faces) and taking
    /// the feasible least-squares minimum; `dist` is 1-homogeneous in `x`.
    pub fn project(&self, x: &[f64]) -> Result<(Vec<f64>, f64)> {
        if x.len() != self.dim {
            return Err(Error::Config(format!(
                "point dimension {} does not match cone dimension {}",
                x.len(),
                self.dim
            )));
        }
        if let Some(basis) = &self.subspace_basis {
            let mut p = vec![0.0; self.dim];
            for b in basis {
                let r = dot(x, b);
                for (pi, bi) in p.iter_mut().zip(b) {
                    *pi += r * bi;
                }
            }
            let d = crate::linalg::dist(x, &p);
            return Ok((p, d));
        }
        let g = self.generators.len();
        if g > MAX_CONE_GENERATORS {
            return Err(Error::Config(format!(
                "cone has {g} generators; face enumeration is limited to {MAX_CONE_GENERATORS}"
            )));
        }
        // The projection lies in the span of the generators active at the
        // optimum with nonnegative coefficients, and at most dim of them are
        // needed; every feasible candidate is a point of the cone, so the
        // smallest distance among candidates is the projection.
        let mut best_p = vec![0.0; self.dim];
        let mut best_d = norm(x);
        let max_size = self.dim.min(g);
        for mask in 1u32..(1u32 << g) {
            if (mask.count_ones() as usize) > max_size {
                continue;
            }
            let idx: Vec<usize> = (0..g).filter(|i| mask & (1 << i) != 0).collect();
            let cols = idx.len();
            let mat = nalgebra::DMatrix::from_fn(self.dim, cols, |r, c| self.generators[idx[c]][r]);
            let rhs = nalgebra::DVector::from_column_slice(x);
            let svd = mat.clone().svd(true, true);
            let Ok(t) = svd.solve(&rhs, 1e-12) else {
                continue;
            };
            if t.iter().any(|&ti| ti < -1e-12) {
                continue;
            }
            let p = &mat * &t;
            let d = (&rhs - &p).norm();
            if d < best_d {
                best_d = d;
                best_p = p.iter().copied().collect();
            }
        }
        Ok((best_p, best_d))
    }

    /// Membership by projection distance.
    pub fn contains(&self, x: &[f64], tol: f64) -> Result<bool> {
        Ok(self.project(x)?.1 <= tol)
    }
}

fn detect_subspace(generators: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let unit: Vec<Vec<f64>> = generators.iter().map(|g| scale(g, 1.0 / norm(g))).collect();
    for u in &unit {
        let has_negation = unit
            .iter()
            .any(|v| u.iter().zip(v).all(|(a, b)| (a + b).abs() < 1e-12));
        if !has_negation {
            return None;
        }
    }
    orthonormalize(generators)
}

fn orthonormalize(vectors: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in vectors {
        let mut w = v.clone();
        for _ in 0..2 {
            for b in &basis {
                let r = dot(&w, b);
                for (wi, bi) in w.iter_mut().zip(b) {
                    *wi -= r * bi;
                }
            }
        }
        let r = norm(&w);
        if r > 1e-10 {
            basis.push(scale(&w, 1.0 / r));
        }
    }
    if basis.is_empty() {
        None
    } else {
        Some(basis)
    }
}

/// Spec-level free function mirroring [`PolyhedralCone::project`].
pub fn project_onto_cone(cone: &PolyhedralCone, x: &[f64]) -> Result<(Vec<f64>, f64)> {
    cone.project(x)
}

/// Result of a support query: the value `h_K(x)` and a point of `K`
/// attaining it.
#[derive(Debug, Clone)]
pub struct SupportEval {
    pub value: f64,
    pub witness: Vec<f64>,
    /// Whether the argmax was within `1e-12` of a tie somewhere in the
    /// evaluation tree; the lowest-index witness is used in that case.
    pub degenerate: bool,
}

/// Spherical gradient of a support function at a node, through the argmax
/// witness.
#[derive(Debug, Clone)]
pub struct SupportGradient {
    pub gradient: TangentVector,
    pub degenerate: bool,
}

#[derive(Debug, Clone)]
pub(crate) enum BodyKind {
    Polytope { vertices: Vec<Vec<f64>> },
    Ball { center: Vec<f64>, radius: f64 },
    Minkowski { parts: Vec<ConvexBody> },
    Translate { part: Box<ConvexBody>, shift: Vec<f64> },
    Scale { part: Box<ConvexBody>, factor: f64 },
    PolarConeCap { cone: PolyhedralCone },
}

/// A compact convex body, exactly evaluable through its support function.
#[derive(Debug, Clone)]
pub struct ConvexBody {
    dim: usize,
    kind: BodyKind,
}

impl ConvexBody {
    pub fn polytope(vertices: Vec<Vec<f64>>) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::Config("polytope needs at least one vertex".into()));
        }
        let dim = vertices[0].len();
        if dim < 2 || vertices.iter().any(|v| v.len() != dim) {
            return Err(Error::Config("polytope vertices must share a dimension >= 2".into()));
        }
        Ok(ConvexBody {
            dim,
            kind: BodyKind::Polytope { vertices },
        })
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if center.len() < 2 {
            return Err(Error::Config("ball center must have dimension >= 2".into()));
        }
        if !(radius >= 0.0) {
            return Err(Error::Config(format!("ball radius must be >= 0, got {radius}")));
        }
        Ok(ConvexBody {
            dim: center.len(),
            kind: BodyKind::Ball { center, radius },
        })
    }

    pub fn unit_ball(n: usize) -> Self {
        ConvexBody::ball(vec![0.0; n], 1.0).expect("unit ball")
    }

    /// Singleton `{a}`; its support function is the linear field `<a, .>`.
    pub fn point(a: Vec<f64>) -> Result<Self> {
        ConvexBody::polytope(vec![a])
    }

    pub fn segment(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        ConvexBody::polytope(vec![a, b])
    }

    /// Axis-aligned box `[lo, hi]` as a polytope with all `2^n` corners.
    pub fn axis_box(lo: &[f64], hi: &[f64]) -> Result<Self> {
        let n = lo.len();
        if n != hi.len() || n < 2 {
            return Err(Error::Config("box bounds must share a dimension >= 2".into()));
        }
        if lo.iter().zip(hi).any(|(l, h)| l > h) {
            return Err(Error::Config("box lower bound exceeds upper bound".into()));
        }
        let mut vertices = Vec::with_capacity(1 << n);
        for mask in 0u32..(1 << n) {
            let v: Vec<f64> = (0..n)
                .map(|i| if mask & (1 << i) != 0 { hi[i] } else { lo[i] })
                .collect();
            vertices.push(v);
        }
        ConvexBody::polytope(vertices)
    }

    pub fn minkowski(parts: Vec<ConvexBody>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::Config("minkowski sum needs at least one part".into()));
        }
        let dim = parts[0].dim;
        if parts.iter().any(|p| p.dim != dim) {
            return Err(Error::Config("minkowski parts must share a dimension".into()));
        }
        Ok(ConvexBody {
            dim,
            kind: BodyKind::Minkowski { parts },
        })
    }

    /// `K + t`; satisfies `h_{K+t} = h_K + <t, .>` exactly.
    pub fn translate(self, shift: Vec<f64>) -> Result<Self> {
        if shift.len() != self.dim {
            return Err(Error::Config("translation dimension mismatch".into()));
        }
        Ok(ConvexBody {
            dim: self.dim,
            kind: BodyKind::Translate {
                part: Box::new(self),
                shift,
            },
        })
    }

    /// `λK` for `λ > 0`; satisfies `h_{λK} = λ h_K` exactly.
    pub fn scale_by(self, factor: f64) -> Result<Self> {
        if !(factor > 0.0) {
            return Err(Error::Config(format!("scale factor must be > 0, got {factor}")));
        }
        Ok(ConvexBody {
            dim: self.dim,
            kind: BodyKind::Scale {
                part: Box::new(self),
                factor,
            },
        })
    }

    /// The body whose support function is the distance to `cone`:
    /// the intersection of the polar cone with the unit ball.
    pub fn polar_cone_cap(cone: PolyhedralCone) -> Result<Self> {
        if !cone.is_subspace() && cone.generators().len() > MAX_CONE_GENERATORS {
            return Err(Error::Config(format!(
                "polar-cone-cap cone has {} generators, limit is {MAX_CONE_GENERATORS}",
                cone.generators().len()
            )));
        }
        Ok(ConvexBody {
            dim: cone.dim(),
            kind: BodyKind::PolarConeCap { cone },
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub(crate) fn kind(&self) -> &BodyKind {
        &self.kind
    }

    /// `h_K(x)` together with a maximizing witness. Ties resolve to the
    /// lowest vertex index and are flagged.
    pub fn support(&self, x: &[f64]) -> SupportEval {
        match &self.kind {
            BodyKind::Polytope { vertices } => {
                let mut best = f64::NEG_INFINITY;
                let mut second = f64::NEG_INFINITY;
                let mut best_idx = 0;
                for (i, v) in vertices.iter().enumerate() {
                    let s = dot(x, v);
                    if s > best {
                        second = best;
                        best = s;
                        best_idx = i;
                    } else if s > second {
                        second = s;
                    }
                }
                let degenerate =
                    vertices.len() > 1 && (best - second) <= 1e-12 * (1.0 + best.abs());
                SupportEval {
                    value: best,
                    witness: vertices[best_idx].clone(),
                    degenerate,
                }
            }
            BodyKind::Ball { center, radius } => {
                let r = norm(x);
                let witness = if r > 0.0 {
                    let mut w = center.clone();
                    for (wi, xi) in w.iter_mut().zip(x) {
                        *wi += radius * xi / r;
                    }
                    w
                } else {
                    center.clone()
                };
                SupportEval {
                    value: dot(center, x) + radius * r,
                    witness,
                    degenerate: false,
                }
            }
            BodyKind::Minkowski { parts } => {
                let mut value = 0.0;
                let mut witness = vec![0.0; self.dim];
                let mut degenerate = false;
                for p in parts {
                    let e = p.support(x);
                    value += e.value;
                    for (wi, ei) in witness.iter_mut().zip(&e.witness) {
                        *wi += ei;
                    }
                    degenerate |= e.degenerate;
                }
                SupportEval {
                    value,
                    witness,
                    degenerate,
                }
            }
            BodyKind::Translate { part, shift } => {
                let e = part.support(x);
                SupportEval {
                    value: e.value + dot(shift, x),
                    witness: add(&e.witness, shift),
                    degenerate: e.degenerate,
                }
            }
            BodyKind::Scale { part, factor } => {
                let e = part.support(x);
                SupportEval {
                    value: factor * e.value,
                    witness: scale(&e.witness, *factor),
                    degenerate: e.degenerate,
                }
            }
            BodyKind::PolarConeCap { cone } => {
                let (p, d) = cone
                    .project(x)
                    .expect("generator count validated at construction");
                let witness = if d > 0.0 {
                    sub(x, &p).iter().map(|c| c / d).collect()
                } else {
                    vec![0.0; self.dim]
                };
                SupportEval {
                    value: d,
                    witness,
                    degenerate: d.abs() < 1e-10,
                }
            }
        }
    }

    /// Spherical gradient of `h_K` at a node: the witness is the Euclidean
    /// gradient at differentiability points, and the spherical gradient is
    /// its tangential part `y* − h_K(x)·x`.
    pub fn support_gradient(&self, x: &SpherePoint) -> SupportGradient {
        let e = self.support(x.coords());
        let gradient = TangentVector::project(x.clone(), &e.witness);
        SupportGradient {
            gradient,
            degenerate: e.degenerate,
        }
    }

    /// Componentwise bounding box (not necessarily tight for derived kinds).
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        match &self.kind {
            BodyKind::Polytope { vertices } => {
                let mut lo = vertices[0].clone();
                let mut hi = vertices[0].clone();
                for v in vertices.iter().skip(1) {
                    for i in 0..self.dim {
                        lo[i] = lo[i].min(v[i]);
                        hi[i] = hi[i].max(v[i]);
                    }
                }
                (lo, hi)
            }
            BodyKind::Ball { center, radius } => (
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            ),
            BodyKind::Minkowski { parts } => {
                let mut lo = vec![0.0; self.dim];
                let mut hi = vec![0.0; self.dim];
                for p in parts {
                    let (plo, phi) = p.bounding_box();
                    for i in 0..self.dim {
                        lo[i] += plo[i];
                        hi[i] += phi[i];
                    }
                }
                (lo, hi)
            }
            BodyKind::Translate { part, shift } => {
                let (lo, hi) = part.bounding_box();
                (add(&lo, shift), add(&hi, shift))
            }
            BodyKind::Scale { part, factor } => {
                let (lo, hi) = part.bounding_box();
                (scale(&lo, *factor), scale(&hi, *factor))
            }
            BodyKind::PolarConeCap { .. } => (vec![-1.0; self.dim], vec![1.0; self.dim]),
        }
    }
}

/// Max-over-nodes lower bound for the Hausdorff distance
/// `d_H(K, L) = ‖h_K − h_L‖_∞`, converging under rule refinement.
pub fn hausdorff_distance(k: &ConvexBody, l: &ConvexBody, rule: &QuadratureRule) -> f64 {
    rule.nodes()
        .iter()
        .map(|x| (k.support(x.coords()).value - l.support(x.coords()).value).abs())
        .fold(0.0, f64::max)
}
