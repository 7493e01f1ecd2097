//! Valuation functionals on `Lip(S^{n-1})` and their verification suite.
//!
//! The central object is the representation-formula functional
//!
//! ```text
//! μ(u) = c0 + c1 ∫ u dH^{n-1} + c2 ∫ [(n-1) u² − ‖∇u‖²] dH^{n-1}
//! ```
//!
//! together with the wider family `μ(u) = ∫ F(u, ‖∇u‖) dH^{n-1}` for a fixed
//! registry of kernels `F`. On support functions the `c1` term is
//! proportional to the mean width `V₁` and the `c2` integrand is the
//! divergence-theorem rewrite of the second intrinsic volume, which is
//! cross-checked here against a Monte Carlo Steiner fit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::convex_bodies::{BodyKind, ConvexBody};
use crate::linalg::{dot, pairwise_sum};
use crate::lip_functions::{ScalarField, FD_STEP};
use crate::parallel::run_batches;
use crate::sphere_core::{unit_ball_volume, QuadratureRule, Rotation, Scheme};
use crate::{Error, Result};

/// Fixed registry of general integrands `F(t, s)`, addressable by id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeneralKernel {
    /// `F = t`
    Value,
    /// `F = t²`
    ValueSquared,
    /// `F = s²`
    GradSquared,
    /// `F = t² + s²`
    Dirichlet,
    /// `F = sqrt(1 + t²) − 1`
    SoftAbs,
}

impl GeneralKernel {
    pub fn id(&self) -> &'static str {
        match self {
            GeneralKernel::Value => "value",
            GeneralKernel::ValueSquared => "value-squared",
            GeneralKernel::GradSquared => "grad-squared",
            GeneralKernel::Dirichlet => "dirichlet",
            GeneralKernel::SoftAbs => "soft-abs",
        }
    }

    pub fn from_id(id: &str) -> Result<Self> {
        match id {
            "value" => Ok(GeneralKernel::Value),
            "value-squared" => Ok(GeneralKernel::ValueSquared),
            "grad-squared" => Ok(GeneralKernel::GradSquared),
            "dirichlet" => Ok(GeneralKernel::Dirichlet),
            "soft-abs" => Ok(GeneralKernel::SoftAbs),
            other => Err(Error::Config(format!(
                "unknown kernel {other:?}; registry: value, value-squared, grad-squared, \
                 dirichlet, soft-abs"
            ))),
        }
    }

    pub fn eval(&self, t: f64, s: f64) -> f64 {
        match self {
            GeneralKernel::Value => t,
            GeneralKernel::ValueSquared => t * t,
            GeneralKernel::GradSquared => s * s,
            GeneralKernel::Dirichlet => t * t + s * s,
            GeneralKernel::SoftAbs => (1.0 + t * t).sqrt() - 1.0,
        }
    }
}

/// A valuation to evaluate: either the three-constant representation formula
/// or a general kernel from the registry.
#[derive(Debug, Clone, Copy)]
pub enum ValuationSpec {
    Representation { c0: f64, c1: f64, c2: f64 },
    General { kernel: GeneralKernel },
}

impl ValuationSpec {
    pub fn representation(c0: f64, c1: f64, c2: f64) -> Self {
        ValuationSpec::Representation { c0, c1, c2 }
    }

    /// Pointwise integrand `F(t, s)`; the representation kind is the general
    /// kind with `F = c0/|S^{n-1}| + c1·t + c2·[(n-1)t² − s²]`.
    pub fn integrand(&self, n: usize, t: f64, s: f64) -> f64 {
        match self {
            ValuationSpec::Representation { c0, c1, c2 } => {
                c0 / crate::sphere_core::sphere_surface(n)
                    + c1 * t
                    + c2 * ((n as f64 - 1.0) * t * t - s * s)
            }
            ValuationSpec::General { kernel } => kernel.eval(t, s),
        }
    }
}

/// How gradients are obtained during valuation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradientMode {
    /// Analytic where the field provides one, finite differences otherwise.
    Auto,
    /// Central differences everywhere (independent cross-check path).
    ForceFd,
}

/// Evaluates `μ(u)` over a rule.
pub fn valuate(spec: &ValuationSpec, u: &ScalarField, rule: &QuadratureRule) -> Result<f64> {
    valuate_with(spec, u, rule, GradientMode::Auto)
}

pub fn valuate_with(
    spec: &ValuationSpec,
    u: &ScalarField,
    rule: &QuadratureRule,
    mode: GradientMode,
) -> Result<f64> {
    if u.dim() != rule.dim() {
        return Err(Error::Config(format!(
            "field dimension {} does not match rule dimension {}",
            u.dim(),
            rule.dim()
        )));
    }
    let n = rule.dim();
    let mut terms = Vec::with_capacity(rule.len());
    for (x, w) in rule.nodes().iter().zip(rule.weights()) {
        let t = u.eval(x);
        if !t.is_finite() {
            return Err(Error::evaluation("field value is not finite", Some(x.coords())));
        }
        let s = match mode {
            GradientMode::Auto => u.gradient_or_fd(x, FD_STEP)?.gradient.norm(),
            GradientMode::ForceFd => {
                crate::sphere_core::tangential_gradient_fd(|p| u.eval(p), x, FD_STEP)?.norm()
            }
        };
        let v = spec.integrand(n, t, s);
        if !v.is_finite() {
            return Err(Error::evaluation("integrand is not finite", Some(x.coords())));
        }
        terms.push(w * v);
    }
    Ok(pairwise_sum(&terms))
}

/// The `c2` integrand alone: `∫ [(n-1)u² − ‖∇u‖²]`.
pub fn w2(u: &ScalarField, rule: &QuadratureRule) -> Result<f64> {
    valuate(&ValuationSpec::representation(0.0, 0.0, 1.0), u, rule)
}

/// Same functional with the forced-FD gradient path.
pub fn w2_fd(u: &ScalarField, rule: &QuadratureRule) -> Result<f64> {
    valuate_with(
        &ValuationSpec::representation(0.0, 0.0, 1.0),
        u,
        rule,
        GradientMode::ForceFd,
    )
}

/// First intrinsic volume `V₁(K) = (1/κ_{n-1}) ∫ h_K dH^{n-1}`.
pub fn intrinsic_v1(body: &ConvexBody, rule: &QuadratureRule) -> Result<f64> {
    if body.dim() != rule.dim() {
        return Err(Error::Config("body and rule dimensions differ".into()));
    }
    let integral = rule.integrate(|x| body.support(x.coords()).value)?;
    Ok(integral / unit_ball_volume(rule.dim() - 1))
}

/// Monte Carlo Steiner fit: estimates `vol(K + rB)` by membership sampling
/// for each radius and least-squares fits the Steiner polynomial
/// `vol(K + rB) = Σ_j r^{n-j} κ_{n-j} V_j(K)`.
#[derive(Debug, Clone, Serialize)]
pub struct SteinerFit {
    pub radii: Vec<f64>,
    pub volumes: Vec<f64>,
    /// `V_0 ... V_n`.
    pub intrinsic_volumes: Vec<f64>,
    /// True when polytope membership used the one-sided support-criterion
    /// approximation instead of an exact distance.
    pub approximate_membership: bool,
}

enum Membership {
    Ball { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    SupportCriterion { body: ConvexBody, directions: Vec<Vec<f64>> },
}

impl Membership {
    fn contains(&self, x: &[f64], inflate: f64) -> bool {
        match self {
            Membership::Ball { center, radius } => {
                crate::linalg::dist(x, center) <= radius + inflate
            }
            Membership::Box { lo, hi } => {
                let mut d2 = 0.0;
                for i in 0..x.len() {
                    let gap = (lo[i] - x[i]).max(x[i] - hi[i]).max(0.0);
                    d2 += gap * gap;
                }
                d2.sqrt() <= inflate
            }
            Membership::SupportCriterion { body, directions } => directions
                .iter()
                .all(|d| dot(d, x) <= body.support(d).value + inflate),
        }
    }
}

fn membership_oracle(body: &ConvexBody) -> Result<(Membership, bool)> {
    match body.kind() {
        BodyKind::Ball { center, radius } => Ok((
            Membership::Ball {
                center: center.clone(),
                radius: *radius,
            },
            false,
        )),
        BodyKind::Polytope { vertices } => {
            let n = body.dim();
            let (lo, hi) = body.bounding_box();
            // exact membership when the vertex set is precisely the corners
            // of its bounding box
            let mut corner_hits = 0usize;
            for mask in 0u32..(1u32 << n) {
                let corner: Vec<f64> = (0..n)
                    .map(|i| if mask & (1 << i) != 0 { hi[i] } else { lo[i] })
                    .collect();
                if vertices
                    .iter()
                    .any(|v| crate::linalg::dist(v, &corner) < 1e-12)
                {
                    corner_hits += 1;
                }
            }
            let is_box = corner_hits == (1 << n)
                && vertices.len() == (1 << n)
                || (vertices.len() == 1);
            if vertices.len() == 1 {
                return Ok((
                    Membership::Ball {
                        center: vertices[0].clone(),
                        radius: 0.0,
                    },
                    false,
                ));
            }
            if is_box {
                Ok((Membership::Box { lo, hi }, false))
            } else {
                let directions = support_directions(n);
                Ok((
                    Membership::SupportCriterion {
                        body: body.clone(),
                        directions,
                    },
                    true,
                ))
            }
        }
        _ => Err(Error::Config(
            "steiner_fit membership is restricted to polytopes and balls".into(),
        )),
    }
}

fn support_directions(n: usize) -> Vec<Vec<f64>> {
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    for i in 0..n {
        for s in [1.0, -1.0] {
            let mut d = vec![0.0; n];
            d[i] = s;
            dirs.push(d);
        }
    }
    let extra = match n {
        2 => QuadratureRule::build(2, 128, Scheme::ProductGauss, None),
        3 => QuadratureRule::build(3, 6, Scheme::Fibonacci, None),
        _ => QuadratureRule::build(n, 3, Scheme::MonteCarlo, Some(11)),
    };
    if let Ok(rule) = extra {
        dirs.extend(rule.nodes().iter().map(|p| p.coords().to_vec()));
    }
    dirs
}

/// Fits intrinsic volumes `V_0 ... V_n` from Monte Carlo volumes of the
/// parallel bodies `K + rB`.
pub fn steiner_fit(
    body: &ConvexBody,
    radii: &[f64],
    mc_samples: usize,
    seed: u64,
) -> Result<SteinerFit> {
    let n = body.dim();
    let mut sorted = radii.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if sorted.first().copied().unwrap_or(-1.0) <= 0.0 {
        return Err(Error::Config("steiner radii must be positive".into()));
    }
    let distinct = sorted.windows(2).all(|w| (w[1] - w[0]).abs() > 1e-9);
    if !distinct || radii.len() < n + 1 {
        return Err(Error::Config(format!(
            "steiner fit needs at least {} distinct positive radii",
            n + 1
        )));
    }
    let (oracle, approximate) = membership_oracle(body)?;
    let (lo, hi) = body.bounding_box();

    let mut volumes = Vec::with_capacity(radii.len());
    let mut sigmas = Vec::with_capacity(radii.len());
    const BATCH: usize = 1 << 15;
    for (ri, &r) in radii.iter().enumerate() {
        let blo: Vec<f64> = lo.iter().map(|c| c - r).collect();
        let bhi: Vec<f64> = hi.iter().map(|c| c + r).collect();
        let box_vol: f64 = blo.iter().zip(&bhi).map(|(a, b)| b - a).product();
        let batches = mc_samples.div_ceil(BATCH);
        let hits: Vec<(u64, u64)> = run_batches(batches, |bi| {
            let mut rng = ChaCha8Rng::seed_from_u64(
                seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
                    .wrapping_add((ri * 1_000_003 + bi) as u64),
            );
            let count = BATCH.min(mc_samples - bi * BATCH);
            let mut inside = 0u64;
            let mut x = vec![0.0; n];
            for _ in 0..count {
                for d in 0..n {
                    x[d] = blo[d] + (bhi[d] - blo[d]) * rng.random::<f64>();
                }
                if oracle.contains(&x, r) {
                    inside += 1;
                }
            }
            (inside, count as u64)
        });
        let inside: u64 = hits.iter().map(|h| h.0).sum();
        let total: u64 = hits.iter().map(|h| h.1).sum();
        let p = inside as f64 / total as f64;
        volumes.push(box_vol * p);
        // binomial standard error of the volume estimate, floored to keep
        // the weights finite
        sigmas.push((box_vol * (p * (1.0 - p) / total as f64).sqrt()).max(1e-9));
    }

    // variance-weighted least squares for V_j against the Steiner basis
    // r^{n-j} κ_{n-j}
    let rows = radii.len();
    let design = nalgebra::DMatrix::from_fn(rows, n + 1, |r, j| {
        radii[r].powi((n - j) as i32) * unit_ball_volume(n - j) / sigmas[r]
    });
    let rhs = nalgebra::DVector::from_iterator(
        rows,
        volumes.iter().zip(&sigmas).map(|(v, s)| v / s),
    );
    let svd = design.svd(true, true);
    if svd.singular_values.iter().any(|&s| s < 1e-12) {
        return Err(Error::Config("steiner fit design matrix is singular".into()));
    }
    let sol = svd
        .solve(&rhs, 1e-12)
        .map_err(|e| Error::Config(format!("steiner fit failed: {e}")))?;
    Ok(SteinerFit {
        radii: radii.to_vec(),
        volumes,
        intrinsic_volumes: sol.iter().copied().collect(),
        approximate_membership: approximate,
    })
}

/// Residual of the valuation identity
/// `μ(u∨v) + μ(u∧v) − μ(u) − μ(v)`, absolute and relative to the magnitude
/// of the four terms.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct IdentityResidual {
    pub absolute: f64,
    pub relative: f64,
}

pub fn valuation_identity_check(
    spec: &ValuationSpec,
    u: &ScalarField,
    v: &ScalarField,
    rule: &QuadratureRule,
) -> Result<IdentityResidual> {
    let vmax = valuate(spec, &crate::lip_functions::lattice_max(u, v)?, rule)?;
    let vmin = valuate(spec, &crate::lip_functions::lattice_min(u, v)?, rule)?;
    let vu = valuate(spec, u, rule)?;
    let vv = valuate(spec, v, rule)?;
    let absolute = (vmax + vmin - vu - vv).abs();
    let scale = vmax.abs() + vmin.abs() + vu.abs() + vv.abs();
    Ok(IdentityResidual {
        absolute,
        relative: absolute / scale.max(1e-300),
    })
}

/// `|μ(u∘R) − μ(u)|`; bounded by the rule's anisotropy and decreasing under
/// refinement.
pub fn rotation_invariance_check(
    spec: &ValuationSpec,
    u: &ScalarField,
    rotation: &Rotation,
    rule: &QuadratureRule,
) -> Result<f64> {
    let rotated = u.clone().rotated(rotation.clone())?;
    Ok((valuate(spec, &rotated, rule)? - valuate(spec, u, rule)?).abs())
}

/// `|μ(u + <t, .>) − μ(u)|`; vanishes under refinement.
pub fn dot_invariance_check(
    spec: &ValuationSpec,
    u: &ScalarField,
    t: &[f64],
    rule: &QuadratureRule,
) -> Result<f64> {
    let shifted = ScalarField::sum_of(vec![u.clone(), ScalarField::linear(t.to_vec())?])?;
    Ok((valuate(spec, &shifted, rule)? - valuate(spec, u, rule)?).abs())
}

/// Homogeneous components `μ_0 ... μ_n` extracted from `μ(k·u)`,
/// `k = 1..n+1`, through the inverse of the Vandermonde matrix
/// `M[k][i] = k^i`.
#[derive(Debug, Clone, Serialize)]
pub struct HomogeneousDecomposition {
    pub components: Vec<f64>,
    /// `M^{-1}`, row i giving the coefficients `a_{ij}` with
    /// `μ_i(u) = Σ_j a_{ij} μ(j·u)`.
    pub vandermonde_coeffs: Vec<Vec<f64>>,
    /// `‖M‖_∞ · ‖M^{-1}‖_∞`.
    pub condition: f64,
    /// `max |M^{-1}M − I|`.
    pub inverse_residual: f64,
    /// `|Σ_i μ_i − μ(u)|` relative to `|μ(u)|` (the λ = 1 reconstruction).
    pub reconstruction_residual: f64,
    /// The measured values `μ(k·u)`, `k = 1..n+1`.
    pub scaled_values: Vec<f64>,
}

impl HomogeneousDecomposition {
    /// `Σ_i λ^i μ_i(u)`.
    pub fn extrapolate(&self, lambda: f64) -> f64 {
        self.components
            .iter()
            .enumerate()
            .map(|(i, c)| c * lambda.powi(i as i32))
            .sum()
    }
}

pub fn homogeneous_decompose(
    spec: &ValuationSpec,
    u: &ScalarField,
    rule: &QuadratureRule,
) -> Result<HomogeneousDecomposition> {
    let n = rule.dim();
    let mut scaled_values = Vec::with_capacity(n + 1);
    for k in 1..=(n + 1) {
        scaled_values.push(valuate(spec, &u.clone().scaled(k as f64), rule)?);
    }
    let m = nalgebra::DMatrix::from_fn(n + 1, n + 1, |r, c| ((r + 1) as f64).powi(c as i32));
    let minv = m
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Internal("Vandermonde matrix must be invertible".into()))?;
    let norm_inf = |a: &nalgebra::DMatrix<f64>| {
        (0..a.nrows())
            .map(|r| (0..a.ncols()).map(|c| a[(r, c)].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    let condition = norm_inf(&m) * norm_inf(&minv);
    let residual_mat = &minv * &m - nalgebra::DMatrix::<f64>::identity(n + 1, n + 1);
    let inverse_residual = residual_mat.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let vals = nalgebra::DVector::from_column_slice(&scaled_values);
    let comps = &minv * vals;
    let components: Vec<f64> = comps.iter().copied().collect();
    let total: f64 = components.iter().sum();
    let reconstruction_residual =
        (total - scaled_values[0]).abs() / scaled_values[0].abs().max(1e-300);
    Ok(HomogeneousDecomposition {
        components,
        vandermonde_coeffs: (0..=n)
            .map(|r| (0..=n).map(|c| minv[(r, c)]).collect())
            .collect(),
        condition,
        inverse_residual,
        reconstruction_residual,
        scaled_values,
    })
}

/// Seeded corpus of test fields used by the identity and invariance suites.
pub fn standard_field_corpus(n: usize, seed: u64) -> Result<Vec<ScalarField>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fields = vec![
        ScalarField::constant(n, 1.5),
        ScalarField::linear((0..n).map(|i| 0.5 - 0.3 * i as f64).collect())?,
        ScalarField::support(ConvexBody::unit_ball(n)),
        ScalarField::support(ConvexBody::axis_box(&vec![-1.0; n], &vec![1.0; n])?),
    ];
    for _ in 0..3 {
        let verts: Vec<Vec<f64>> = (0..(n + 3))
            .map(|_| (0..n).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect())
            .collect();
        fields.push(ScalarField::support(ConvexBody::polytope(verts)?));
    }
    Ok(fields)
}
