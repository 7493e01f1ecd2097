//! The function space `Lip(S^{n-1})` as an algebra of evaluation trees.
//!
//! A [`ScalarField`] is built from constants, linear functionals, support
//! functions, piecewise linear fields, sampled tables, and is closed under
//! pointwise max/min, sums, scaling and composition with rotations. Fields
//! carry analytic spherical gradients wherever the structure provides one
//! (max/min delegate to the winning operand, support functions use their
//! argmax witness); everything else falls back to central differences on the
//! 1-homogeneous extension.

use serde::{Deserialize, Serialize};

use crate::convex_bodies::ConvexBody;
use crate::linalg::{dist, dot, norm, scale};
use crate::parallel::run_batches;
use crate::piecewise_linear::PLField;
use crate::sphere_core::{
    random_pairs, sphere_point_unchecked, tangential_gradient_fd, QuadratureRule, Rotation,
    Scheme, SpherePoint, TangentVector,
};
use crate::{Error, Result};

/// Default step for finite-difference gradients.
pub const FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone)]
pub(crate) enum FieldKind {
    Constant(f64),
    Linear(Vec<f64>),
    Support(ConvexBody),
    PlFan(PLField),
    Min(Vec<ScalarField>),
    Max(Vec<ScalarField>),
    Sum(Vec<ScalarField>),
    Scale(f64, Box<ScalarField>),
    Rotate(Rotation, Box<ScalarField>),
    Sampled(McShaneExtension),
    Mollified(MollifiedField),
}

/// A Lipschitz scalar field `u: S^{n-1} -> R`.
#[derive(Debug, Clone)]
pub struct ScalarField {
    n: usize,
    kind: FieldKind,
}

/// Analytic gradient together with a degeneracy flag: `true` when the value
/// came from a tie broken by the lowest-index rule (max/min with equal
/// operands, support argmax within `1e-12` of a tie, PL cone boundaries).
#[derive(Debug, Clone)]
pub struct GradientInfo {
    pub gradient: TangentVector,
    pub degenerate: bool,
}

impl ScalarField {
    pub fn constant(n: usize, value: f64) -> Self {
        ScalarField {
            n,
            kind: FieldKind::Constant(value),
        }
    }

    /// The zero field.
    pub fn zero(n: usize) -> Self {
        ScalarField::constant(n, 0.0)
    }

    /// Restriction of `<a, .>` to the sphere.
    pub fn linear(a: Vec<f64>) -> Result<Self> {
        if a.len() < 2 {
            return Err(Error::Config("linear field needs dimension >= 2".into()));
        }
        Ok(ScalarField {
            n: a.len(),
            kind: FieldKind::Linear(a),
        })
    }

    /// Support function `h_K` restricted to the sphere.
    pub fn support(body: ConvexBody) -> Self {
        ScalarField {
            n: body.dim(),
            kind: FieldKind::Support(body),
        }
    }

    pub fn piecewise_linear(field: PLField) -> Self {
        ScalarField {
            n: field.dim(),
            kind: FieldKind::PlFan(field),
        }
    }

    pub fn min_of(parts: Vec<ScalarField>) -> Result<Self> {
        let n = check_same_dim(&parts)?;
        Ok(ScalarField {
            n,
            kind: FieldKind::Min(parts),
        })
    }

    pub fn max_of(parts: Vec<ScalarField>) -> Result<Self> {
        let n = check_same_dim(&parts)?;
        Ok(ScalarField {
            n,
            kind: FieldKind::Max(parts),
        })
    }

    pub fn sum_of(parts: Vec<ScalarField>) -> Result<Self> {
        let n = check_same_dim(&parts)?;
        Ok(ScalarField {
            n,
            kind: FieldKind::Sum(parts),
        })
    }

    pub fn scaled(self, factor: f64) -> Self {
        let n = self.n;
        ScalarField {
            n,
            kind: FieldKind::Scale(factor, Box::new(self)),
        }
    }

    /// `u ∘ R`, evaluating the inner field at `R x`.
    pub fn rotated(self, rotation: Rotation) -> Result<Self> {
        if rotation.dim() != self.n {
            return Err(Error::Config("rotation dimension mismatch".into()));
        }
        let n = self.n;
        Ok(ScalarField {
            n,
            kind: FieldKind::Rotate(rotation, Box::new(self)),
        })
    }

    /// Field backed by a sampled table, evaluated through the McShane
    /// formula; exact at the samples and globally `L`-Lipschitz.
    pub fn sampled(samples: Vec<(SpherePoint, f64)>, lipschitz: f64) -> Result<Self> {
        let n = samples
            .first()
            .map(|(p, _)| p.dim())
            .ok_or_else(|| Error::Config("sampled field needs at least one sample".into()))?;
        let ext = mcshane_extend(&samples, lipschitz)?;
        Ok(ScalarField {
            n,
            kind: FieldKind::Sampled(ext),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub(crate) fn kind(&self) -> &FieldKind {
        &self.kind
    }

    /// Pointwise evaluation. Structural failures (a fan that does not cover
    /// its direction) surface as NaN so that quadrature reports the node.
    pub fn eval(&self, x: &SpherePoint) -> f64 {
        match &self.kind {
            FieldKind::Constant(c) => *c,
            FieldKind::Linear(a) => dot(a, x.coords()),
            FieldKind::Support(body) => body.support(x.coords()).value,
            FieldKind::PlFan(pl) => pl.value(x.coords()).unwrap_or(f64::NAN),
            FieldKind::Min(parts) => parts
                .iter()
                .map(|p| p.eval(x))
                .fold(f64::INFINITY, f64::min),
            FieldKind::Max(parts) => parts
                .iter()
                .map(|p| p.eval(x))
                .fold(f64::NEG_INFINITY, f64::max),
            FieldKind::Sum(parts) => parts.iter().map(|p| p.eval(x)).sum(),
            FieldKind::Scale(s, part) => s * part.eval(x),
            FieldKind::Rotate(r, part) => part.eval(&r.rotate_point(x)),
            FieldKind::Sampled(ext) => ext.eval(x.coords()),
            FieldKind::Mollified(m) => m.eval(x.coords()),
        }
    }

    /// Value of the 1-homogeneous extension `ũ(y) = ‖y‖ u(y/‖y‖)`, `ũ(0)=0`.
    pub fn eval_homogeneous(&self, y: &[f64]) -> f64 {
        let r = norm(y);
        if r < 1e-300 {
            return 0.0;
        }
        let p = sphere_point_unchecked(scale(y, 1.0 / r));
        r * self.eval(&p)
    }

    /// Analytic spherical gradient, where the tree structure provides one.
    pub fn gradient_info(&self, x: &SpherePoint) -> Option<GradientInfo> {
        match &self.kind {
            FieldKind::Constant(_) => Some(GradientInfo {
                gradient: TangentVector::project(x.clone(), &vec![0.0; self.n]),
                degenerate: false,
            }),
            FieldKind::Linear(a) => Some(GradientInfo {
                gradient: TangentVector::project(x.clone(), a),
                degenerate: false,
            }),
            FieldKind::Support(body) => {
                let g = body.support_gradient(x);
                Some(GradientInfo {
                    gradient: g.gradient,
                    degenerate: g.degenerate,
                })
            }
            FieldKind::PlFan(pl) => {
                let (g, degenerate) = pl.gradient(x).ok()?;
                Some(GradientInfo {
                    gradient: g,
                    degenerate,
                })
            }
            FieldKind::Min(parts) => delegate_gradient(parts, x, false),
            FieldKind::Max(parts) => delegate_gradient(parts, x, true),
            FieldKind::Sum(parts) => {
                let mut acc = vec![0.0; self.n];
                let mut degenerate = false;
                for p in parts {
                    let gi = p.gradient_info(x)?;
                    for (a, b) in acc.iter_mut().zip(gi.gradient.vec()) {
                        *a += b;
                    }
                    degenerate |= gi.degenerate;
                }
                Some(GradientInfo {
                    gradient: TangentVector::project(x.clone(), &acc),
                    degenerate,
                })
            }
            FieldKind::Scale(s, part) => {
                let gi = part.gradient_info(x)?;
                Some(GradientInfo {
                    gradient: TangentVector::project(x.clone(), &scale(gi.gradient.vec(), *s)),
                    degenerate: gi.degenerate,
                })
            }
            FieldKind::Rotate(r, part) => {
                let rx = r.rotate_point(x);
                let gi = part.gradient_info(&rx)?;
                let back = r.apply_transpose(gi.gradient.vec());
                Some(GradientInfo {
                    gradient: TangentVector::project(x.clone(), &back),
                    degenerate: gi.degenerate,
                })
            }
            FieldKind::Sampled(_) | FieldKind::Mollified(_) => None,
        }
    }

    /// Analytic gradient when available, otherwise central differences on
    /// the homogeneous extension.
    pub fn gradient_or_fd(&self, x: &SpherePoint, h: f64) -> Result<GradientInfo> {
        if let Some(gi) = self.gradient_info(x) {
            return Ok(gi);
        }
        let g = tangential_gradient_fd(|p| self.eval(p), x, h)?;
        Ok(GradientInfo {
            gradient: g,
            degenerate: false,
        })
    }

    /// Index of the winning operand of a min tree at `x` (lowest on ties);
    /// `None` for other kinds.
    pub fn min_winner(&self, x: &SpherePoint) -> Option<usize> {
        match &self.kind {
            FieldKind::Min(parts) => {
                let values: Vec<f64> = parts.iter().map(|p| p.eval(x)).collect();
                let best = values.iter().copied().fold(f64::INFINITY, f64::min);
                values.iter().position(|&v| v == best)
            }
            FieldKind::Scale(_, part) => part.min_winner(x),
            _ => None,
        }
    }
}

fn check_same_dim(parts: &[ScalarField]) -> Result<usize> {
    let n = parts
        .first()
        .map(|p| p.n)
        .ok_or_else(|| Error::Config("lattice operation needs at least one operand".into()))?;
    if parts.iter().any(|p| p.n != n) {
        return Err(Error::Config("lattice operands must share a dimension".into()));
    }
    Ok(n)
}

fn delegate_gradient(parts: &[ScalarField], x: &SpherePoint, maximize: bool) -> Option<GradientInfo> {
    let values: Vec<f64> = parts.iter().map(|p| p.eval(x)).collect();
    let best = if maximize {
        values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    } else {
        values.iter().copied().fold(f64::INFINITY, f64::min)
    };
    let winner = values.iter().position(|&v| v == best)?;
    let tie = values
        .iter()
        .enumerate()
        .any(|(i, &v)| i != winner && (v - best).abs() <= 1e-12 * (1.0 + best.abs()));
    let gi = parts[winner].gradient_info(x)?;
    Some(GradientInfo {
        gradient: gi.gradient,
        degenerate: tie || gi.degenerate,
    })
}

/// Pointwise maximum `u ∨ v`.
pub fn lattice_max(u: &ScalarField, v: &ScalarField) -> Result<ScalarField> {
    ScalarField::max_of(vec![u.clone(), v.clone()])
}

/// Pointwise minimum `u ∧ v`.
pub fn lattice_min(u: &ScalarField, v: &ScalarField) -> Result<ScalarField> {
    ScalarField::min_of(vec![u.clone(), v.clone()])
}

/// Sampled lower bound of the Lipschitz constant: the max difference
/// quotient over a seeded pair set. Monotone in the pair count; coincident
/// pairs are skipped.
pub fn lipschitz_estimate(u: &ScalarField, pairs: usize, seed: u64) -> Result<f64> {
    if pairs < 1000 {
        return Err(Error::Precondition(format!(
            "lipschitz_estimate needs at least 1000 pairs, got {pairs}"
        )));
    }
    let mut best: f64 = 0.0;
    for (a, b) in random_pairs(u.dim(), pairs, seed) {
        let d = dist(a.coords(), b.coords());
        if d < 1e-12 {
            continue;
        }
        best = best.max((u.eval(&a) - u.eval(&b)).abs() / d);
    }
    Ok(best)
}

/// The 1-homogeneous extension of a field, as a standalone evaluator.
pub struct HomogeneousExtension<'a> {
    field: &'a ScalarField,
}

impl<'a> HomogeneousExtension<'a> {
    pub fn eval(&self, y: &[f64]) -> f64 {
        self.field.eval_homogeneous(y)
    }
}

pub fn homogeneous_extend(u: &ScalarField) -> HomogeneousExtension<'_> {
    HomogeneousExtension { field: u }
}

/// McShane extension of a sampled function:
/// `ū(x) = max_z [u(z) − L ‖x − z‖]`, exact at every sample and globally
/// `L`-Lipschitz. Extends the sampled restriction, not the abstract field.
#[derive(Debug, Clone)]
pub struct McShaneExtension {
    points: Vec<Vec<f64>>,
    values: Vec<f64>,
    lipschitz: f64,
}

impl McShaneExtension {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.points
            .iter()
            .zip(&self.values)
            .map(|(z, v)| v - self.lipschitz * dist(x, z))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Builds the McShane extension, verifying `L` against every sample pair.
pub fn mcshane_extend(samples: &[(SpherePoint, f64)], lipschitz: f64) -> Result<McShaneExtension> {
    if samples.is_empty() {
        return Err(Error::Precondition("mcshane_extend needs samples".into()));
    }
    for i in 0..samples.len() {
        for j in (i + 1)..samples.len() {
            let d = dist(samples[i].0.coords(), samples[j].0.coords());
            if d < 1e-14 {
                continue;
            }
            let ratio = (samples[i].1 - samples[j].1).abs() / d;
            if ratio > lipschitz * (1.0 + 1e-12) + 1e-300 {
                return Err(Error::Precondition(format!(
                    "L = {lipschitz} is below the sampled ratio {ratio} attained by the pair \
                     ({:?}, {:?})",
                    samples[i].0.coords(),
                    samples[j].0.coords()
                )));
            }
        }
    }
    Ok(McShaneExtension {
        points: samples.iter().map(|(p, _)| p.coords().to_vec()).collect(),
        values: samples.iter().map(|(_, v)| *v).collect(),
        lipschitz,
    })
}

/// Exact maximum difference quotient over a sample set; the smallest
/// admissible `L` for [`mcshane_extend`] on those samples.
pub fn max_sample_pair_ratio(samples: &[(SpherePoint, f64)]) -> f64 {
    let mut best: f64 = 0.0;
    for i in 0..samples.len() {
        for j in (i + 1)..samples.len() {
            let d = dist(samples[i].0.coords(), samples[j].0.coords());
            if d < 1e-14 {
                continue;
            }
            best = best.max((samples[i].1 - samples[j].1).abs() / d);
        }
    }
    best
}

/// Smooth cutoff: 1 on `2/3 <= r <= 4/3`, supported in `1/3 <= r <= 5/3`.
pub fn annulus_cutoff(r: f64) -> f64 {
    smooth_step((r - 1.0 / 3.0) * 3.0) * smooth_step((5.0 / 3.0 - r) * 3.0)
}

fn smooth_step(t: f64) -> f64 {
    // C^∞ transition built from exp(-1/t)
    fn g(t: f64) -> f64 {
        if t <= 0.0 {
            0.0
        } else {
            (-1.0 / t).exp()
        }
    }
    let a = g(t);
    let b = g(1.0 - t);
    a / (a + b)
}

/// Grid-sampled mollification `φ_ε * (η · ū)` restricted to the sphere.
#[derive(Debug, Clone)]
pub struct MollifiedField {
    n: usize,
    eps: f64,
    res: usize,
    origin: f64,
    spacing: f64,
    values: Vec<f64>,
}

impl MollifiedField {
    fn index(&self, idx: &[usize]) -> usize {
        let mut lin = 0;
        for &i in idx {
            lin = lin * self.res + i;
        }
        lin
    }

    /// Self-normalized kernel sum over grid cells within `ε` of `x`; smooth
    /// in `x` and exact on constants.
    fn eval(&self, x: &[f64]) -> f64 {
        let lo: Vec<isize> = x
            .iter()
            .map(|xi| ((xi - self.eps - self.origin) / self.spacing).floor() as isize)
            .collect();
        let hi: Vec<isize> = x
            .iter()
            .map(|xi| ((xi + self.eps - self.origin) / self.spacing).ceil() as isize)
            .collect();
        let mut num = 0.0;
        let mut den = 0.0;
        let mut idx = lo.clone();
        'outer: loop {
            let mut inside = true;
            for d in 0..self.n {
                if idx[d] < 0 || idx[d] >= self.res as isize {
                    inside = false;
                    break;
                }
            }
            if inside {
                let cell: Vec<usize> = idx.iter().map(|&i| i as usize).collect();
                let v = self.values[self.index(&cell)];
                if !v.is_nan() {
                    let mut r2 = 0.0;
                    for d in 0..self.n {
                        let y = self.origin + (idx[d] as f64 + 0.5) * self.spacing;
                        r2 += (x[d] - y) * (x[d] - y);
                    }
                    let t = r2 / (self.eps * self.eps);
                    if t < 1.0 {
                        let w = (1.0 / (t - 1.0)).exp();
                        num += w * v;
                        den += w;
                    }
                }
            }
            // advance the multi-index
            for d in (0..self.n).rev() {
                idx[d] += 1;
                if idx[d] <= hi[d] {
                    continue 'outer;
                }
                idx[d] = lo[d];
            }
            break;
        }
        if den > 0.0 {
            num / den
        } else {
            f64::NAN
        }
    }
}

/// Mollifies a field: sample on the sphere, extend by McShane, cut off to
/// the annulus, convolve with the standard bump of width `ε` on a Cartesian
/// grid, restrict to the sphere. The result has no analytic gradient; use
/// finite differences.
pub fn mollify(u: &ScalarField, eps: f64, grid_resolution: usize) -> Result<ScalarField> {
    let n = u.dim();
    if n > 3 {
        return Err(Error::Config(format!(
            "mollification uses a dense grid and is limited to n <= 3, got n = {n}"
        )));
    }
    if !(eps > 0.0 && eps < 1.0 / 3.0) {
        return Err(Error::Config(format!(
            "mollification needs 0 < eps < 1/3 so the cutoff annulus is respected, got {eps}"
        )));
    }
    if grid_resolution < 16 {
        return Err(Error::Config("grid resolution must be at least 16".into()));
    }

    // sample the field and extend with the tight sampled constant
    let samples: Vec<(SpherePoint, f64)> = if n == 3 {
        let rule = QuadratureRule::build(3, (grid_resolution as u32).clamp(16, 64), Scheme::Fibonacci, None)?;
        rule.nodes().iter().map(|p| (p.clone(), u.eval(p))).collect()
    } else {
        let rule = QuadratureRule::build(2, 256, Scheme::ProductGauss, None)?;
        rule.nodes().iter().map(|p| (p.clone(), u.eval(p))).collect()
    };
    let lip = max_sample_pair_ratio(&samples);
    let ext = mcshane_extend(&samples, lip)?;

    let span = 10.0 / 3.0; // [-5/3, 5/3]
    let res = grid_resolution;
    let spacing = span / res as f64;
    let origin = -5.0 / 3.0;
    let shell = eps + 2.0 * spacing;

    // precompute η·ū on grid cells within reach of the sphere
    let rows = if n == 3 { res * res } else { res };
    let row_values = run_batches(rows, |row| {
        let mut out = vec![f64::NAN; res];
        let (i, j) = if n == 3 { (row / res, row % res) } else { (row, 0) };
        let xi = origin + (i as f64 + 0.5) * spacing;
        let xj = origin + (j as f64 + 0.5) * spacing;
        for (k, slot) in out.iter_mut().enumerate() {
            let xk = origin + (k as f64 + 0.5) * spacing;
            let y = if n == 3 {
                vec![xi, xj, xk]
            } else {
                vec![xi, xk]
            };
            let r = norm(&y);
            if (r - 1.0).abs() <= shell {
                *slot = annulus_cutoff(r) * ext.eval(&y);
            }
        }
        out
    });
    let values: Vec<f64> = row_values.into_iter().flatten().collect();

    Ok(ScalarField {
        n,
        kind: FieldKind::Mollified(MollifiedField {
            n,
            eps,
            res,
            origin,
            spacing,
            values,
        }),
    })
}

/// Result of checking `‖∇u(x)‖ <= √n · L̂(u)` over a rule's nodes.
#[derive(Debug, Clone, Serialize)]
pub struct GradientBoundReport {
    pub holds: bool,
    pub bound: f64,
    pub lipschitz_estimate: f64,
    pub max_gradient_norm: f64,
    /// max over nodes of `‖∇u‖ / bound`.
    pub worst_ratio: f64,
}

/// Verifies the spherical-gradient bound at every node, with the Lipschitz
/// constant estimated from `10^4` seeded pairs.
pub fn gradient_bound_check(u: &ScalarField, rule: &QuadratureRule) -> Result<GradientBoundReport> {
    let lip = lipschitz_estimate(u, 10_000, 0xC0FFEE)?;
    let bound = (u.dim() as f64).sqrt() * lip + 1e-9;
    let mut max_grad: f64 = 0.0;
    for x in rule.nodes() {
        let g = u.gradient_or_fd(x, FD_STEP)?;
        max_grad = max_grad.max(g.gradient.norm());
    }
    Ok(GradientBoundReport {
        holds: max_grad <= bound,
        bound,
        lipschitz_estimate: lip,
        max_gradient_norm: max_grad,
        worst_ratio: if bound > 0.0 { max_grad / bound } else { 0.0 },
    })
}

/// Quantile levels reported for gradient gaps.
pub const TAU_QUANTILES: [f64; 5] = [0.25, 0.5, 0.75, 0.9, 1.0];

/// Measured τ-convergence quantities for one element of a sequence: the
/// sup-norm gap, quantiles of the gradient gap over non-degenerate nodes,
/// and the observed uniform gradient bound.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TauConvergenceReport {
    pub sup_gap: f64,
    pub grad_gap_quantiles: Vec<f64>,
    pub grad_bound: f64,
    pub node_count: usize,
}

/// Measures the three τ conditions for each element of a sequence against a
/// limit field, on the nodes of a rule.
pub fn tau_report(
    sequence: &[ScalarField],
    limit: &ScalarField,
    rule: &QuadratureRule,
) -> Result<Vec<TauConvergenceReport>> {
    let mut reports = Vec::with_capacity(sequence.len());
    for u_i in sequence {
        if u_i.dim() != limit.dim() {
            return Err(Error::Config("sequence and limit dimensions differ".into()));
        }
        let mut sup_gap: f64 = 0.0;
        let mut grad_bound: f64 = 0.0;
        let mut gaps = Vec::with_capacity(rule.len());
        for x in rule.nodes() {
            sup_gap = sup_gap.max((u_i.eval(x) - limit.eval(x)).abs());
            let gi = u_i.gradient_or_fd(x, FD_STEP)?;
            let gl = limit.gradient_or_fd(x, FD_STEP)?;
            if !gi.degenerate {
                grad_bound = grad_bound.max(gi.gradient.norm());
            }
            if !gi.degenerate && !gl.degenerate {
                gaps.push(dist(gi.gradient.vec(), gl.gradient.vec()));
            }
        }
        gaps.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let quantiles = TAU_QUANTILES
            .iter()
            .map(|&q| {
                if gaps.is_empty() {
                    0.0
                } else {
                    let idx = ((gaps.len() - 1) as f64 * q).round() as usize;
                    gaps[idx]
                }
            })
            .collect();
        reports.push(TauConvergenceReport {
            sup_gap,
            grad_gap_quantiles: quantiles,
            grad_bound,
            node_count: rule.len(),
        });
    }
    Ok(reports)
}

/// Max over nodes of `|u - v|`.
pub fn sup_gap(u: &ScalarField, v: &ScalarField, rule: &QuadratureRule) -> f64 {
    rule.nodes()
        .iter()
        .map(|x| (u.eval(x) - v.eval(x)).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convex_bodies::PolyhedralCone;

    const PI: f64 = std::f64::consts::PI;

    fn rule3() -> QuadratureRule {
        QuadratureRule::build(3, 16, Scheme::ProductGauss, None).unwrap()
    }

    #[test]
    fn lattice_identities_hold_pointwise() {
        let rule = rule3();
        let u = ScalarField::support(ConvexBody::axis_box(&[-1.0; 3], &[1.0; 3]).unwrap());
        let v = ScalarField::linear(vec![0.5, -1.0, 0.25]).unwrap();
        let umax = lattice_max(&u, &v).unwrap();
        let umin = lattice_min(&u, &v).unwrap();
        let uu = lattice_max(&u, &u).unwrap();
        for x in rule.nodes() {
            assert_eq!(uu.eval(x), u.eval(x), "idempotence");
            let lhs = umax.eval(x) + umin.eval(x);
            let rhs = u.eval(x) + v.eval(x);
            assert!((lhs - rhs).abs() < 1e-12);
            assert!((umax.eval(x) - u.eval(x).max(v.eval(x))).abs() < 1e-15);
        }
    }

    #[test]
    fn max_of_singleton_supports_is_segment_support() {
        let a = vec![0.2, 0.4, -0.6];
        let b = vec![-0.3, 0.1, 0.8];
        let ha = ScalarField::support(ConvexBody::point(a.clone()).unwrap());
        let hb = ScalarField::support(ConvexBody::point(b.clone()).unwrap());
        let seg = ScalarField::support(ConvexBody::segment(a, b).unwrap());
        let m = lattice_max(&ha, &hb).unwrap();
        for x in rule3().nodes() {
            assert!((m.eval(x) - seg.eval(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn lattice_dimension_mismatch_errors() {
        let u = ScalarField::linear(vec![1.0, 0.0]).unwrap();
        let v = ScalarField::linear(vec![1.0, 0.0, 0.0]).unwrap();
        assert!(lattice_max(&u, &v).is_err());
    }

    #[test]
    fn lipschitz_estimates() {
        let c = ScalarField::constant(3, 4.2);
        assert_eq!(lipschitz_estimate(&c, 2000, 1).unwrap(), 0.0);
        let a = vec![1.5, -2.0, 0.5];
        let lin = ScalarField::linear(a.clone()).unwrap();
        // exact supremum oracle: L(<a,.>) on the sphere equals ||a||
        let est = lipschitz_estimate(&lin, 20_000, 2).unwrap();
        assert!(est <= norm(&a) + 1e-12);
        assert!(est > 0.9 * norm(&a));
        assert!(lipschitz_estimate(&lin, 10, 3).is_err());
    }

    #[test]
    fn lipschitz_of_min_bounded_by_max_of_constants() {
        let u = ScalarField::support(ConvexBody::unit_ball(3));
        let v = ScalarField::linear(vec![0.4, 0.3, -0.2]).unwrap();
        let m = lattice_min(&u, &v).unwrap();
        let lu = lipschitz_estimate(&u, 10_000, 5).unwrap();
        let lv = lipschitz_estimate(&v, 10_000, 5).unwrap();
        let lm = lipschitz_estimate(&m, 10_000, 5).unwrap();
        assert!(lm <= lu.max(lv) + 1e-6);
    }

    #[test]
    fn homogeneous_extension_properties() {
        let u = ScalarField::support(ConvexBody::axis_box(&[0.0; 3], &[1.0, 2.0, 3.0]).unwrap());
        let ext = homogeneous_extend(&u);
        assert_eq!(ext.eval(&[0.0, 0.0, 0.0]), 0.0);
        let x = [0.3, -0.5, 0.9];
        let x2: Vec<f64> = x.iter().map(|c| 2.0 * c).collect();
        assert!((ext.eval(&x2) - 2.0 * ext.eval(&x)).abs() < 1e-12);
        // support functions are already 1-homogeneous
        let body = ConvexBody::axis_box(&[0.0; 3], &[1.0, 2.0, 3.0]).unwrap();
        assert!((ext.eval(&x) - body.support(&x).value).abs() < 1e-12);
    }

    #[test]
    fn mcshane_interpolates_and_hand_case() {
        let e1 = SpherePoint::axis(3, 0);
        let me1 = SpherePoint::new(vec![-1.0, 0.0, 0.0]).unwrap();
        let samples = vec![(e1, 0.0), (me1, 0.0)];
        let ext = mcshane_extend(&samples, 1.0).unwrap();
        // both terms give 0 - 1*1 = -1 at the origin
        assert!((ext.eval(&[0.0, 0.0, 0.0]) + 1.0).abs() < 1e-15);
        for (p, v) in &samples {
            assert!((ext.eval(p.coords()) - v).abs() < 1e-15);
        }
    }

    #[test]
    fn mcshane_rejects_undersized_constant() {
        let e1 = SpherePoint::axis(3, 0);
        let e2 = SpherePoint::axis(3, 1);
        let samples = vec![(e1, 0.0), (e2, 10.0)];
        let err = mcshane_extend(&samples, 1.0).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn mcshane_extension_is_l_lipschitz_on_sampled_pairs() {
        let u = ScalarField::support(ConvexBody::axis_box(&[-1.0; 3], &[0.5, 1.0, 0.2]).unwrap());
        let rule = QuadratureRule::build(3, 4, Scheme::Fibonacci, None).unwrap();
        let samples: Vec<(SpherePoint, f64)> = rule
            .nodes()
            .iter()
            .map(|p| (p.clone(), u.eval(p)))
            .collect();
        let l = max_sample_pair_ratio(&samples);
        let ext = mcshane_extend(&samples, l).unwrap();
        for (a, b) in random_pairs(3, 10_000, 77) {
            let d = dist(a.coords(), b.coords());
            if d < 1e-12 {
                continue;
            }
            let ratio = (ext.eval(a.coords()) - ext.eval(b.coords())).abs() / d;
            assert!(ratio <= l + 1e-12);
        }
    }

    #[test]
    fn gradient_delegation_matches_fd_at_strict_winners() {
        let u = ScalarField::support(ConvexBody::unit_ball(3));
        let v = ScalarField::linear(vec![0.9, -0.4, 0.3]).unwrap();
        let m = lattice_max(&u, &v).unwrap();
        let mut checked = 0;
        for x in rule3().nodes() {
            let gi = m.gradient_info(x).unwrap();
            if gi.degenerate {
                continue;
            }
            let gap = (u.eval(x) - v.eval(x)).abs();
            if gap < 1e-3 {
                continue; // FD stencil would straddle the crease
            }
            let fd = tangential_gradient_fd(|p| m.eval(p), x, 1e-6).unwrap();
            assert!(dist(gi.gradient.vec(), fd.vec()) < 1e-4);
            checked += 1;
        }
        assert!(checked > 100);
    }

    #[test]
    fn euler_identity_for_analytic_kinds() {
        let rot = Rotation::random(3, 8).unwrap();
        let fields = vec![
            ScalarField::constant(3, 2.0),
            ScalarField::linear(vec![1.0, -0.5, 0.3]).unwrap(),
            ScalarField::support(ConvexBody::axis_box(&[-0.4, 0.0, -1.0], &[1.0, 0.8, 0.2]).unwrap()),
            ScalarField::sum_of(vec![
                ScalarField::support(ConvexBody::unit_ball(3)),
                ScalarField::linear(vec![0.3, 0.3, -0.3]).unwrap(),
            ])
            .unwrap(),
            ScalarField::support(ConvexBody::unit_ball(3)).scaled(-1.5),
            ScalarField::linear(vec![0.2, 0.9, -0.1]).unwrap().rotated(rot).unwrap(),
        ];
        for u in &fields {
            for x in rule3().nodes().iter().take(100) {
                let gi = u.gradient_info(x).unwrap();
                if gi.degenerate {
                    continue;
                }
                // ||∇u||² = ||∇_e ũ||² − u², probing ∇_e ũ = ∇u + u·x
                let val = u.eval(x);
                let eug: Vec<f64> = gi
                    .gradient
                    .vec()
                    .iter()
                    .zip(x.coords())
                    .map(|(g, xi)| g + val * xi)
                    .collect();
                let lhs = gi.gradient.norm().powi(2);
                let rhs = dot(&eug, &eug) - val * val;
                assert!((lhs - rhs).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn mollify_reproduces_constants() {
        let u = ScalarField::constant(3, 2.5);
        let m = mollify(&u, 0.2, 48).unwrap();
        let rule = QuadratureRule::build(3, 6, Scheme::ProductGauss, None).unwrap();
        for x in rule.nodes() {
            assert!(
                (m.eval(x) - 2.5).abs() < 1e-9,
                "constant mollifies to itself, got {}",
                m.eval(x)
            );
        }
    }

    #[test]
    fn mollify_rejects_bad_eps() {
        let u = ScalarField::constant(3, 1.0);
        assert!(mollify(&u, 0.34, 48).is_err());
        assert!(mollify(&u, 0.0, 48).is_err());
    }

    #[test]
    fn mollify_converges_uniformly_and_bounds_gradients() {
        let u = ScalarField::support(ConvexBody::axis_box(&[-1.0; 3], &[1.0; 3]).unwrap());
        let rule = QuadratureRule::build(3, 10, Scheme::ProductGauss, None).unwrap();
        let mut last = f64::INFINITY;
        for eps in [0.25, 0.15, 0.08] {
            let m = mollify(&u, eps, 64).unwrap();
            let gap = sup_gap(&m, &u, &rule);
            assert!(gap <= last + 1e-9, "sup gap should not increase: {gap} vs {last}");
            last = gap;
        }
        assert!(last < 0.25);
        // uniform gradient bound √n (L̂ + slack)
        let m = mollify(&u, 0.15, 64).unwrap();
        let lip = lipschitz_estimate(&u, 10_000, 9).unwrap();
        let bound = 3.0_f64.sqrt() * (lip + 0.05);
        for x in rule.nodes() {
            let g = m.gradient_or_fd(x, FD_STEP).unwrap();
            assert!(g.gradient.norm() <= bound);
        }
    }

    #[test]
    fn annulus_cutoff_profile() {
        assert_eq!(annulus_cutoff(1.0), 1.0);
        assert_eq!(annulus_cutoff(0.7), 1.0);
        assert_eq!(annulus_cutoff(1.3), 1.0);
        assert!(annulus_cutoff(0.2) == 0.0);
        assert!(annulus_cutoff(1.7) == 0.0);
        let mid = annulus_cutoff(0.5);
        assert!(mid > 0.0 && mid < 1.0);
    }

    #[test]
    fn tau_report_constant_and_scaled_sequences() {
        let rule = rule3();
        let u = ScalarField::support(ConvexBody::axis_box(&[0.0; 3], &[1.0; 3]).unwrap());
        let constant = vec![u.clone(), u.clone()];
        let reports = tau_report(&constant, &u, &rule).unwrap();
        for r in &reports {
            assert_eq!(r.sup_gap, 0.0);
            assert!(r.grad_gap_quantiles.iter().all(|&q| q == 0.0));
        }
        // u_i = (1 + 1/i)·u has sup gap ‖u‖_∞ / i on the node set
        let sup_u = rule
            .nodes()
            .iter()
            .map(|x| u.eval(x).abs())
            .fold(0.0, f64::max);
        let seq: Vec<ScalarField> = (1..=4).map(|i| u.clone().scaled(1.0 + 1.0 / i as f64)).collect();
        let reports = tau_report(&seq, &u, &rule).unwrap();
        for (i, r) in reports.iter().enumerate() {
            let expect = sup_u / (i as f64 + 1.0);
            assert!((r.sup_gap - expect).abs() < 1e-12);
            assert!(r.grad_gap_quantiles.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn tau_report_of_mollification_sequence_decreases() {
        let fan = crate::piecewise_linear::SimplicialFan::boundary(3, 1).unwrap();
        let support =
            ScalarField::support(ConvexBody::axis_box(&[-1.0, -0.4, -0.7], &[0.6, 1.0, 0.5]).unwrap());
        let u = ScalarField::piecewise_linear(
            crate::piecewise_linear::PLField::interpolate(&support, &fan).unwrap(),
        );
        let rule = QuadratureRule::build(3, 8, Scheme::ProductGauss, None).unwrap();
        let seq: Vec<ScalarField> = [0.24, 0.12, 0.06]
            .iter()
            .map(|&e| mollify(&u, e, 72).unwrap())
            .collect();
        let reports = tau_report(&seq, &u, &rule).unwrap();
        for w in reports.windows(2) {
            assert!(w[1].sup_gap <= w[0].sup_gap + 1e-9);
            assert!(
                w[1].grad_gap_quantiles[1] <= w[0].grad_gap_quantiles[1] + 0.05,
                "median gradient gap should shrink: {:?} vs {:?}",
                w[1].grad_gap_quantiles,
                w[0].grad_gap_quantiles
            );
        }
        assert!(reports.last().unwrap().sup_gap < reports[0].sup_gap);
    }

    #[test]
    fn gradient_bound_check_on_linear_and_pl_fields() {
        let rule = rule3();
        let lin = ScalarField::linear(vec![2.0, 1.0, -1.0]).unwrap();
        let report = gradient_bound_check(&lin, &rule).unwrap();
        assert!(report.holds, "{report:?}");
        let c = ScalarField::constant(3, 7.0);
        let report = gradient_bound_check(&c, &rule).unwrap();
        assert!(report.holds && report.max_gradient_norm < 1e-12);
    }

    #[test]
    fn sampled_field_restricts_mcshane() {
        let u = ScalarField::support(ConvexBody::unit_ball(3));
        let rule = QuadratureRule::build(3, 2, Scheme::Fibonacci, None).unwrap();
        let samples: Vec<(SpherePoint, f64)> =
            rule.nodes().iter().map(|p| (p.clone(), u.eval(p))).collect();
        let l = max_sample_pair_ratio(&samples);
        let f = ScalarField::sampled(samples.clone(), l).unwrap();
        for (p, v) in samples.iter().take(20) {
            assert!((f.eval(p) - v).abs() < 1e-12);
        }
    }
}
