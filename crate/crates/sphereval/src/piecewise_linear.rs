//! Simplicial cone fans and piecewise linear fields.
//!
//! A fan partitions `R^n` into closed convex cones `C_i = {t x : t >= 0,
//! x in Δ_i}` spanned by the `(n-1)`-simplices `Δ_i` of a simplicial
//! partition of the boundary of the cube `Ω = [-1, 1]^n`. Each facet of `Ω`
//! is cut into subcubes of edge `1/N`, and each subcube is partitioned by the
//! recursive center rule (a segment stays whole; a `d`-cube cones its
//! recursively partitioned facets to its center), which induces matching
//! partitions on shared faces.
//!
//! A [`PLField`] is linear on each cone; interpolation matches a field's
//! 1-homogeneous extension at the simplex vertices, and `to_min_support`
//! rewrites any PL field as a finite minimum of support functions.

use std::collections::HashMap;
use std::sync::Arc;

use crate::convex_bodies::{ConvexBody, PolyhedralCone};
use crate::linalg::dot;
use crate::parallel::run_batches;
use crate::lip_functions::ScalarField;
use crate::sphere_core::{QuadratureRule, SpherePoint, TangentVector};
use crate::{Error, Result};

/// Membership tolerance for cone ownership, in barycentric coordinates.
const MEMBER_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
struct FastLocator {
    subdivision: usize,
    per_subcube: usize,
}

/// A complete fan of simplicial cones covering `R^n`.
#[derive(Debug)]
pub struct SimplicialFan {
    n: usize,
    subdivision: usize,
    vertices: Vec<Vec<f64>>,
    simplices: Vec<Vec<usize>>,
    cones: Vec<PolyhedralCone>,
    /// Row-major `V^{-1}` per simplex, columns of `V` being the vertices.
    inverses: Vec<Option<Vec<f64>>>,
    locator: Option<FastLocator>,
}

impl SimplicialFan {
    /// The boundary fan of `[-1, 1]^n` with edge subdivision `1/N`.
    pub fn boundary(n: usize, subdivision: usize) -> Result<Arc<Self>> {
        if !(2..=4).contains(&n) {
            return Err(Error::Config(format!(
                "boundary fans are built for n in {{2, 3, 4}}, got n = {n}"
            )));
        }
        if subdivision < 1 {
            return Err(Error::Config("subdivision must be >= 1".into()));
        }
        let big_n = subdivision;
        let cells = 2 * big_n;
        let mut dedup: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut vertices: Vec<Vec<f64>> = Vec::new();
        let mut simplices: Vec<Vec<usize>> = Vec::new();
        let mut intern = |v: &[f64], vertices: &mut Vec<Vec<f64>>| -> usize {
            let key: Vec<u64> = v.iter().map(|c| c.to_bits()).collect();
            *dedup.entry(key).or_insert_with(|| {
                vertices.push(v.to_vec());
                vertices.len() - 1
            })
        };
        for axis in 0..n {
            for sign in [1.0f64, -1.0] {
                let free: Vec<usize> = (0..n).filter(|&a| a != axis).collect();
                let mut idx = vec![0usize; n - 1];
                loop {
                    let mut base = vec![0.0; n];
                    base[axis] = sign;
                    for (d, &a) in free.iter().enumerate() {
                        base[a] = -1.0 + idx[d] as f64 / big_n as f64;
                    }
                    let side = 1.0 / big_n as f64;
                    for simplex in center_rule_partition(&base, &free, side) {
                        let ids: Vec<usize> =
                            simplex.iter().map(|v| intern(v, &mut vertices)).collect();
                        simplices.push(ids);
                    }
                    // advance subcube multi-index
                    let mut done = true;
                    for d in (0..n - 1).rev() {
                        idx[d] += 1;
                        if idx[d] < cells {
                            done = false;
                            break;
                        }
                        idx[d] = 0;
                    }
                    if done {
                        break;
                    }
                }
            }
        }
        let per_subcube = center_rule_count(n - 1);
        let mut cones = Vec::with_capacity(simplices.len());
        let mut inverses = Vec::with_capacity(simplices.len());
        for ids in &simplices {
            let verts: Vec<Vec<f64>> = ids.iter().map(|&i| vertices[i].clone()).collect();
            inverses.push(Some(invert_vertex_matrix(&verts).ok_or_else(|| {
                Error::Construction("degenerate simplex in boundary fan".into())
            })?));
            cones.push(PolyhedralCone::from_simplex(verts)?);
        }
        Ok(Arc::new(SimplicialFan {
            n,
            subdivision,
            vertices,
            simplices,
            cones,
            inverses,
            locator: Some(FastLocator {
                subdivision,
                per_subcube,
            }),
        }))
    }

    /// Fan from explicit cones (for hand-built partitions); ownership is
    /// resolved by projection distance, lowest index first.
    pub fn from_cones(n: usize, cones: Vec<PolyhedralCone>) -> Result<Arc<Self>> {
        if cones.is_empty() {
            return Err(Error::Config("fan needs at least one cone".into()));
        }
        if cones.iter().any(|c| c.dim() != n) {
            return Err(Error::Config("cone dimensions must match the fan".into()));
        }
        let inverses: Vec<Option<Vec<f64>>> = cones
            .iter()
            .map(|c| {
                c.simplex_vertices()
                    .filter(|v| v.len() == n)
                    .and_then(invert_vertex_matrix)
            })
            .collect();
        let simplices = vec![Vec::new(); cones.len()];
        Ok(Arc::new(SimplicialFan {
            n,
            subdivision: 0,
            vertices: Vec::new(),
            simplices,
            cones,
            inverses,
            locator: None,
        }))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn subdivision(&self) -> usize {
        self.subdivision
    }

    pub fn simplex_count(&self) -> usize {
        self.cones.len()
    }

    pub fn cones(&self) -> &[PolyhedralCone] {
        &self.cones
    }

    pub fn vertex_table(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn simplex_vertex_ids(&self) -> &[Vec<usize>] {
        &self.simplices
    }

    /// Vertex coordinates of simplex `i`, from the dedup table for boundary
    /// fans or from the cone itself for hand-built fans.
    fn simplex_coords(&self, i: usize) -> Option<Vec<Vec<f64>>> {
        if i < self.simplices.len() && !self.simplices[i].is_empty() {
            return Some(
                self.simplices[i]
                    .iter()
                    .map(|&v| self.vertices[v].clone())
                    .collect(),
            );
        }
        self.cones[i].simplex_vertices().map(|vs| vs.to_vec())
    }

    fn barycentric_min(&self, id: usize, x: &[f64]) -> Option<f64> {
        let inv = self.inverses[id].as_ref()?;
        let n = self.n;
        let mut min_t = f64::INFINITY;
        for r in 0..n {
            let mut t = 0.0;
            for c in 0..n {
                t += inv[r * n + c] * x[c];
            }
            min_t = min_t.min(t);
        }
        Some(min_t)
    }

    fn member(&self, id: usize, x: &[f64]) -> bool {
        match self.barycentric_min(id, x) {
            Some(t) => t >= -MEMBER_TOL,
            None => matches!(self.cones[id].contains(x, 1e-10), Ok(true)),
        }
    }

    /// Owning cone of a direction: the geometric owner for interior points,
    /// the lowest-index containing cone on boundaries.
    pub fn locate(&self, x: &[f64]) -> Result<(usize, bool)> {
        if let Some(loc) = &self.locator {
            if let Some(range) = self.candidate_range(loc, x) {
                for id in range {
                    if let Some(t) = self.barycentric_min(id, x) {
                        if t >= MEMBER_TOL {
                            return Ok((id, true));
                        }
                    }
                }
            }
        }
        // boundary or custom fan: first containing cone in index order
        for id in 0..self.cones.len() {
            if self.member(id, x) {
                return Ok((id, false));
            }
        }
        Err(Error::Internal(format!(
            "fan does not cover direction {x:?}"
        )))
    }

    fn candidate_range(&self, loc: &FastLocator, x: &[f64]) -> Option<std::ops::Range<usize>> {
        let n = self.n;
        let mut axis = 0;
        for d in 1..n {
            if x[d].abs() > x[axis].abs() {
                axis = d;
            }
        }
        let m = x[axis].abs();
        if m < 1e-300 {
            return None;
        }
        let sign_slot = if x[axis] >= 0.0 { 0 } else { 1 };
        let cells = 2 * loc.subdivision;
        let mut subcube = 0usize;
        for d in (0..n).filter(|&d| d != axis) {
            let u = x[d] / m; // in [-1, 1]
            let cell = (((u + 1.0) * loc.subdivision as f64).floor() as isize)
                .clamp(0, cells as isize - 1) as usize;
            subcube = subcube * cells + cell;
        }
        let facet = axis * 2 + sign_slot;
        let per_facet = cells.pow((n - 1) as u32) * loc.per_subcube;
        let start = facet * per_facet + subcube * loc.per_subcube;
        Some(start..start + loc.per_subcube)
    }
}

/// Number of simplices the center rule produces on a `d`-cube.
fn center_rule_count(d: usize) -> usize {
    match d {
        0 => 1,
        1 => 1,
        _ => 2 * d * center_rule_count(d - 1),
    }
}

/// Recursive center-rule partition of the cube `base + [0, side]^{axes}`
/// into `|axes|`-simplices, inducing matching partitions on shared faces.
fn center_rule_partition(base: &[f64], axes: &[usize], side: f64) -> Vec<Vec<Vec<f64>>> {
    match axes.len() {
        0 => vec![vec![base.to_vec()]],
        1 => {
            let mut b = base.to_vec();
            let mut t = base.to_vec();
            t[axes[0]] += side;
            // canonical vertex order: lower endpoint first
            if t < b {
                std::mem::swap(&mut b, &mut t);
            }
            vec![vec![b, t]]
        }
        d => {
            let mut center = base.to_vec();
            for &a in axes {
                center[a] += side / 2.0;
            }
            let mut out = Vec::with_capacity(center_rule_count(d));
            for (pos, &a) in axes.iter().enumerate() {
                let rest: Vec<usize> = axes
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != pos)
                    .map(|(_, &b)| b)
                    .collect();
                for offset in [0.0, side] {
                    let mut fbase = base.to_vec();
                    fbase[a] += offset;
                    for facet_simplex in center_rule_partition(&fbase, &rest, side) {
                        let mut s = facet_simplex;
                        s.push(center.clone());
                        out.push(s);
                    }
                }
            }
            out
        }
    }
}

/// Row-major inverse of the matrix whose columns are the simplex vertices;
/// `None` when the vertices are (numerically) dependent.
fn invert_vertex_matrix(verts: &[Vec<f64>]) -> Option<Vec<f64>> {
    let n = verts.len();
    if n == 0 || verts.iter().any(|v| v.len() != n) {
        return None;
    }
    let m = nalgebra::DMatrix::from_fn(n, n, |r, c| verts[c][r]);
    let inv = m.try_inverse()?;
    // nalgebra iterates column-major, so iterate the transpose for row-major
    Some(inv.transpose().iter().copied().collect())
}

/// A piecewise linear field `f = <a_i, .>` on cone `C_i`.
#[derive(Debug, Clone)]
pub struct PLField {
    fan: Arc<SimplicialFan>,
    coeffs: Vec<Vec<f64>>,
}

impl PLField {
    /// Builds a field from per-cone coefficient vectors.
    pub fn from_coefficients(fan: Arc<SimplicialFan>, coeffs: Vec<Vec<f64>>) -> Result<Self> {
        if coeffs.len() != fan.simplex_count() {
            return Err(Error::Config(format!(
                "expected {} coefficient vectors, got {}",
                fan.simplex_count(),
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|a| a.len() != fan.dim()) {
            return Err(Error::Config("coefficient dimension mismatch".into()));
        }
        Ok(PLField { fan, coeffs })
    }

    /// Interpolates a field: per cone, `a_i` solves `<a_i, v_j> = ũ(v_j)`
    /// over the simplex vertices. Exact for linear fields.
    pub fn interpolate(u: &ScalarField, fan: &Arc<SimplicialFan>) -> Result<Self> {
        if u.dim() != fan.dim() {
            return Err(Error::Config("field and fan dimensions differ".into()));
        }
        let n = fan.dim();
        let coeffs = run_batches(fan.simplex_count(), |i| -> Result<Vec<f64>> {
            let verts = fan.simplex_coords(i).ok_or_else(|| {
                Error::Construction(format!("cone {i} carries no simplex vertices to interpolate at"))
            })?;
            let v = nalgebra::DMatrix::from_fn(n, n, |r, c| verts[c][r]);
            let cond = condition_estimate(&v);
            if !cond.is_finite() || cond > 1e12 {
                return Err(Error::Construction(format!(
                    "simplex {i} is degenerate (condition estimate {cond:.3e})"
                )));
            }
            let rhs =
                nalgebra::DVector::from_iterator(n, verts.iter().map(|w| u.eval_homogeneous(w)));
            let lu = v.transpose().lu();
            let a = lu
                .solve(&rhs)
                .ok_or_else(|| Error::Construction(format!("simplex {i} yields a singular system")))?;
            Ok(a.iter().copied().collect())
        });
        let coeffs: Result<Vec<Vec<f64>>> = coeffs.into_iter().collect();
        Ok(PLField {
            fan: fan.clone(),
            coeffs: coeffs?,
        })
    }

    pub fn fan(&self) -> &Arc<SimplicialFan> {
        &self.fan
    }

    pub fn coefficients(&self) -> &[Vec<f64>] {
        &self.coeffs
    }

    pub fn dim(&self) -> usize {
        self.fan.dim()
    }

    /// `f(x)` for any `x != 0`, via the owning cone.
    pub fn value(&self, x: &[f64]) -> Result<f64> {
        let (id, _) = self.fan.locate(x)?;
        Ok(dot(&self.coeffs[id], x))
    }

    /// Spherical gradient `a_i − <a_i, x> x`; the flag marks boundary
    /// ownership (lowest-index cone used).
    pub fn gradient(&self, x: &SpherePoint) -> Result<(TangentVector, bool)> {
        let (id, interior) = self.fan.locate(x.coords())?;
        Ok((
            TangentVector::project(x.clone(), &self.coeffs[id]),
            !interior,
        ))
    }
}

fn condition_estimate(m: &nalgebra::DMatrix<f64>) -> f64 {
    let inv = match m.clone().try_inverse() {
        Some(inv) => inv,
        None => return f64::INFINITY,
    };
    let norm_inf = |a: &nalgebra::DMatrix<f64>| {
        (0..a.nrows())
            .map(|r| (0..a.ncols()).map(|c| a[(r, c)].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    norm_inf(m) * norm_inf(&inv)
}

/// Rewrites a PL field as a finite minimum of support functions:
/// `K_i = c_i · (polar cone cap of C_i) + {a_i}` with
/// `c_i = 1.01 · max_{x ∉ C_i} (f(x) − <a_i, x>)/dist(x, C_i)` over the
/// search rule, so that `h_{K_i} >= f` everywhere and `h_{K_i} = f` on `C_i`.
pub fn to_min_support(f: &PLField, search_rule: &QuadratureRule) -> Result<Vec<ConvexBody>> {
    if search_rule.dim() != f.dim() {
        return Err(Error::Config("search rule dimension mismatch".into()));
    }
    let values: Vec<f64> = search_rule
        .nodes()
        .iter()
        .map(|x| f.value(x.coords()))
        .collect::<Result<_>>()?;
    let bodies = run_batches(f.fan.simplex_count(), |i| -> Result<ConvexBody> {
        let cone = &f.fan.cones()[i];
        let a = &f.coeffs[i];
        let mut ratio: f64 = 0.0;
        for (x, fx) in search_rule.nodes().iter().zip(&values) {
            let (_, d) = cone.project(x.coords())?;
            if d <= 1e-10 {
                continue;
            }
            let excess = fx - dot(a, x.coords());
            let r = excess / d;
            if r > 1e9 {
                return Err(Error::Construction(format!(
                    "cone {i}: unbounded support ratio {r:.3e}; the fan is ill posed"
                )));
            }
            ratio = ratio.max(r);
        }
        let c = 1.01 * ratio.max(0.0);
        if c < 1e-14 {
            ConvexBody::point(a.clone())
        } else {
            ConvexBody::polar_cone_cap(cone.clone())?
                .scale_by(c)?
                .translate(a.clone())
        }
    });
    bodies.into_iter().collect()
}
