//! Geometry of the unit sphere `S^{n-1}`: points, tangent vectors, rotations,
//! quadrature rules approximating the surface measure, and spherical
//! gradients (analytic projection and finite differences).
//!
//! Conventions used throughout the crate:
//!
//! - a scalar field `u` on the sphere is identified with its 1-homogeneous
//!   extension `ũ(x) = ‖x‖ u(x/‖x‖)` whenever a value off the sphere is
//!   needed;
//! - for a field differentiable at `x`, the spherical gradient `∇u(x)` is the
//!   tangential part of the Euclidean gradient of `ũ`, and satisfies
//!   `‖∇_e ũ(x)‖² = ‖∇u(x)‖² + u(x)²`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::linalg::{dot, norm, pairwise_sum, scale, sub};
use crate::{Error, Result};

/// A point on `S^{n-1}`. The constructor normalizes, so `‖coords‖ = 1` holds
/// to machine precision for every value of this type.
#[derive(Debug, Clone, PartialEq)]
pub struct SpherePoint {
    coords: Vec<f64>,
}

impl SpherePoint {
    /// Builds a point from ambient coordinates, normalizing the input.
    /// Inputs with norm below `1e-8` are rejected rather than blown up.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::Config(format!(
                "sphere points need dimension >= 2, got {}",
                coords.len()
            )));
        }
        let r = norm(&coords);
        if !r.is_finite() || r < 1e-8 {
            return Err(Error::Config(format!(
                "cannot normalize vector with norm {r:e} onto the sphere"
            )));
        }
        Ok(SpherePoint {
            coords: scale(&coords, 1.0 / r),
        })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// `k`-th standard basis vector as a sphere point.
    pub fn axis(n: usize, k: usize) -> Self {
        let mut c = vec![0.0; n];
        c[k] = 1.0;
        SpherePoint { coords: c }
    }

    /// Uniformly distributed point, deterministic per RNG state.
    pub fn random(n: usize, rng: &mut ChaCha8Rng) -> Self {
        loop {
            let v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
            if let Ok(p) = SpherePoint::new(v) {
                return p;
            }
        }
    }
}

/// A vector in the tangent space of the sphere at `base`.
#[derive(Debug, Clone)]
pub struct TangentVector {
    base: SpherePoint,
    vec: Vec<f64>,
}

impl TangentVector {
    /// Checked constructor: `⟨vec, base⟩ = 0` must hold within `1e-10`.
    pub fn new(base: SpherePoint, vec: Vec<f64>) -> Result<Self> {
        let inner = dot(&vec, base.coords());
        if inner.abs() > 1e-10 * (1.0 + norm(&vec)) {
            return Err(Error::Construction(format!(
                "vector is not tangent: <v, base> = {inner:e}"
            )));
        }
        Ok(TangentVector { base, vec })
    }

    /// Projects an arbitrary ambient vector onto the tangent space at `base`.
    pub fn project(base: SpherePoint, ambient: &[f64]) -> Self {
        let r = dot(ambient, base.coords());
        let mut v = ambient.to_vec();
        for (vi, bi) in v.iter_mut().zip(base.coords()) {
            *vi -= r * bi;
        }
        // one re-projection pass keeps the tangency defect at machine level
        let r2 = dot(&v, base.coords());
        for (vi, bi) in v.iter_mut().zip(base.coords()) {
            *vi -= r2 * bi;
        }
        TangentVector { base, vec: v }
    }

    pub fn base(&self) -> &SpherePoint {
        &self.base
    }

    pub fn vec(&self) -> &[f64] {
        &self.vec
    }

    pub fn norm(&self) -> f64 {
        norm(&self.vec)
    }
}

/// Volume `κ_m` of the unit ball in `R^m` (written `ω_m` in parts of the
/// convex-geometry literature), by the two-step recurrence.
pub fn unit_ball_volume(m: usize) -> f64 {
    match m {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(m - 2) * 2.0 * std::f64::consts::PI / m as f64,
    }
}

/// Surface measure of `S^{n-1}`, i.e. `n · κ_n`.
pub fn sphere_surface(n: usize) -> f64 {
    n as f64 * unit_ball_volume(n)
}

/// Quadrature scheme for the surface measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Gauss–Legendre in the polar coordinate times a midpoint azimuthal grid
    /// (n = 3), midpoint angular grid on the circle (n = 2).
    ProductGauss,
    /// Golden-spiral nodes with equal weights; n = 3 only.
    Fibonacci,
    /// Uniform random nodes with equal weights; any n, requires a seed.
    MonteCarlo,
}

impl Scheme {
    pub fn id(&self) -> &'static str {
        match self {
            Scheme::ProductGauss => "product-gauss",
            Scheme::Fibonacci => "fibonacci",
            Scheme::MonteCarlo => "monte-carlo",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "product-gauss" => Ok(Scheme::ProductGauss),
            "fibonacci" => Ok(Scheme::Fibonacci),
            "monte-carlo" => Ok(Scheme::MonteCarlo),
            other => Err(Error::Config(format!("unknown quadrature scheme {other:?}"))),
        }
    }
}

/// A weighted node set approximating the measure `H^{n-1}` on `S^{n-1}`.
/// All weights are positive and sum to the surface area (exactly for
/// equal-weight schemes, to machine precision for product Gauss).
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    n: usize,
    level: u32,
    scheme: Scheme,
    seed: Option<u64>,
    nodes: Vec<SpherePoint>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    /// Builds a rule. Node count is monotone in `level` and the construction
    /// is deterministic given `(scheme, level, seed)`.
    pub fn build(n: usize, level: u32, scheme: Scheme, seed: Option<u64>) -> Result<Self> {
        if n < 2 {
            return Err(Error::Config(format!("dimension {n} < 2")));
        }
        if level < 1 {
            return Err(Error::Config("quadrature level must be >= 1".into()));
        }
        let (nodes, weights) = match scheme {
            Scheme::ProductGauss => match n {
                2 => circle_rule(level),
                3 => product_gauss_s2(level),
                _ => {
                    return Err(Error::Config(format!(
                        "product-gauss is only available for n in {{2, 3}}, got n = {n}"
                    )))
                }
            },
            Scheme::Fibonacci => {
                if n != 3 {
                    return Err(Error::Config(format!(
                        "fibonacci nodes are only available for n = 3, got n = {n}"
                    )));
                }
                fibonacci_s2(level)
            }
            Scheme::MonteCarlo => {
                let seed = seed.ok_or_else(|| {
                    Error::Config("monte-carlo quadrature requires a seed".into())
                })?;
                monte_carlo_rule(n, level, seed)
            }
        };
        Ok(QuadratureRule {
            n,
            level,
            scheme,
            seed: if scheme == Scheme::MonteCarlo { seed } else { None },
            nodes,
            weights,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[SpherePoint] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight_sum(&self) -> f64 {
        pairwise_sum(&self.weights)
    }

    /// `Σ_i w_i f(x_i)` with a deterministic pairwise reduction.
    ///
    /// A non-finite sample aborts the sum and reports the offending node.
    pub fn integrate<F: Fn(&SpherePoint) -> f64>(&self, f: F) -> Result<f64> {
        let mut terms = Vec::with_capacity(self.nodes.len());
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            let v = f(x);
            if !v.is_finite() {
                return Err(Error::evaluation(
                    format!("integrand is not finite ({v})"),
                    Some(x.coords()),
                ));
            }
            terms.push(w * v);
        }
        Ok(pairwise_sum(&terms))
    }

    /// CSV serialization: header `x1,...,xn,weight`, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for i in 1..=self.n {
            out.push_str(&format!("x{i},"));
        }
        out.push_str("weight\n");
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            for c in x.coords() {
                out.push_str(&format!("{c:.16e},"));
            }
            out.push_str(&format!("{w:.16e}\n"));
        }
        out
    }
}

/// Midpoint angular grid on the circle; spectrally accurate for periodic
/// integrands and symmetric under `x -> -x`. The midpoint offset keeps nodes
/// off the coordinate axes, where test fields tend to have ridges.
fn circle_rule(level: u32) -> (Vec<SpherePoint>, Vec<f64>) {
    let m = 4 * level as usize;
    let w = 2.0 * std::f64::consts::PI / m as f64;
    let mut nodes = Vec::with_capacity(m);
    for j in 0..m {
        let t = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / m as f64;
        nodes.push(SpherePoint {
            coords: vec![t.cos(), t.sin()],
        });
    }
    (nodes, vec![w; m])
}

/// Gauss–Legendre × midpoint product rule on `S^2`: `level` polar nodes,
/// `2·level` azimuthal nodes, exact for constants and for all spherical
/// polynomials the tensor basis resolves.
fn product_gauss_s2(level: u32) -> (Vec<SpherePoint>, Vec<f64>) {
    let l = level as usize;
    let m = 2 * l;
    let (zs, wz) = gauss_legendre(l);
    let wphi = 2.0 * std::f64::consts::PI / m as f64;
    let mut nodes = Vec::with_capacity(l * m);
    let mut weights = Vec::with_capacity(l * m);
    for (z, wz) in zs.iter().zip(&wz) {
        let r = (1.0 - z * z).max(0.0).sqrt();
        for j in 0..m {
            let phi = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / m as f64;
            nodes.push(SpherePoint {
                coords: vec![r * phi.cos(), r * phi.sin(), *z],
            });
            weights.push(wz * wphi);
        }
    }
    (nodes, weights)
}

/// Golden-spiral nodes with equal weights `4π/N`, `N = 100·level`.
fn fibonacci_s2(level: u32) -> (Vec<SpherePoint>, Vec<f64>) {
    let count = 100 * level as usize;
    let golden = std::f64::consts::PI * (3.0 - 5.0_f64.sqrt());
    let w = sphere_surface(3) / count as f64;
    let mut nodes = Vec::with_capacity(count);
    for i in 0..count {
        let z = 1.0 - (2.0 * i as f64 + 1.0) / count as f64;
        let r = (1.0 - z * z).max(0.0).sqrt();
        let phi = golden * i as f64;
        nodes.push(SpherePoint {
            coords: vec![r * phi.cos(), r * phi.sin(), z],
        });
    }
    (nodes, vec![w; count])
}

/// Uniform nodes with equal weights `surface/N`, `N = 256·level`.
fn monte_carlo_rule(n: usize, level: u32, seed: u64) -> (Vec<SpherePoint>, Vec<f64>) {
    let count = 256 * level as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = sphere_surface(n) / count as f64;
    let nodes = (0..count).map(|_| SpherePoint::random(n, &mut rng)).collect();
    (nodes, vec![w; count])
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration on the
/// Legendre recurrence.
pub fn gauss_legendre(l: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; l];
    let mut weights = vec![0.0; l];
    for i in 0..l.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (l as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // p = P_l(x), dp = P_l'(x)
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=l {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = l as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        weights[i] = w;
        nodes[l - 1 - i] = x;
        weights[l - 1 - i] = w;
    }
    (nodes, weights)
}

/// An orthogonal matrix acting on `R^n`, stored row-major.
#[derive(Debug, Clone)]
pub struct Rotation {
    n: usize,
    rows: Vec<f64>,
}

impl Rotation {
    /// Checked constructor: `Rᵀ R = I` within `1e-10` entrywise.
    pub fn new(matrix: Vec<Vec<f64>>) -> Result<Self> {
        let n = matrix.len();
        if n < 2 || matrix.iter().any(|r| r.len() != n) {
            return Err(Error::Config("rotation matrix must be square, n >= 2".into()));
        }
        let rows: Vec<f64> = matrix.into_iter().flatten().collect();
        let rot = Rotation { n, rows };
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += rot.rows[k * n + i] * rot.rows[k * n + j];
                }
                let target = if i == j { 1.0 } else { 0.0 };
                if (s - target).abs() > 1e-10 {
                    return Err(Error::Config(format!(
                        "matrix is not orthogonal: (RᵀR)[{i}][{j}] = {s}"
                    )));
                }
            }
        }
        Ok(rot)
    }

    pub fn identity(n: usize) -> Self {
        let mut rows = vec![0.0; n * n];
        for i in 0..n {
            rows[i * n + i] = 1.0;
        }
        Rotation { n, rows }
    }

    /// Haar-distributed orthogonal matrix: orthonormalization of a seeded
    /// Gaussian matrix with the sign convention fixed by the diagonal.
    pub fn random(n: usize, seed: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::Config(format!("dimension {n} < 2")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cols: Vec<Vec<f64>> = Vec::with_capacity(n);
        while cols.len() < n {
            let mut v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            // two Gram-Schmidt passes for orthogonality at machine level
            for _ in 0..2 {
                let snapshot = v.clone();
                for c in &cols {
                    let r = dot(&snapshot, c);
                    for (vi, ci) in v.iter_mut().zip(c) {
                        *vi -= r * ci;
                    }
                }
            }
            let r = norm(&v);
            if r < 1e-8 {
                continue;
            }
            cols.push(scale(&v, 1.0 / r));
        }
        // Haar sign fix: flip columns so the Gaussian diagonal entry was >= 0.
        for (j, c) in cols.iter_mut().enumerate() {
            if c[j] < 0.0 {
                for x in c.iter_mut() {
                    *x = -*x;
                }
            }
        }
        let mut rows = vec![0.0; n * n];
        for (j, c) in cols.iter().enumerate() {
            for i in 0..n {
                rows[i * n + j] = c[i];
            }
        }
        Ok(Rotation { n, rows })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| self.rows[i * self.n..(i + 1) * self.n].to_vec())
            .collect()
    }

    /// `R x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| dot(&self.rows[i * self.n..(i + 1) * self.n], x))
            .collect()
    }

    /// `Rᵀ x`.
    pub fn apply_transpose(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for i in 0..self.n {
            let xi = x[i];
            for j in 0..self.n {
                out[j] += self.rows[i * self.n + j] * xi;
            }
        }
        out
    }

    pub fn rotate_point(&self, x: &SpherePoint) -> SpherePoint {
        SpherePoint {
            coords: self.apply(x.coords()),
        }
    }

    pub fn max_orthogonality_defect(&self) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += self.rows[k * n + i] * self.rows[k * n + j];
                }
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((s - target).abs());
            }
        }
        worst
    }
}

/// Tangential projection of a Euclidean gradient of the 1-homogeneous
/// extension. When the Euler relation `⟨g, x⟩ = u(x)` holds, the result
/// satisfies `‖∇u‖² = ‖g‖² − u²`.
pub fn spherical_gradient_from_euclidean(
    _u_value: f64,
    euclid_grad: &[f64],
    base: &SpherePoint,
) -> TangentVector {
    TangentVector::project(base.clone(), euclid_grad)
}

/// An orthonormal basis of the tangent space at `x`: Gram-Schmidt on the
/// standard basis vectors least aligned with `x`.
pub fn tangent_basis(x: &SpherePoint) -> Vec<Vec<f64>> {
    let n = x.dim();
    let mut axes: Vec<usize> = (0..n).collect();
    axes.sort_by(|&a, &b| {
        x.coords()[a]
            .abs()
            .partial_cmp(&x.coords()[b].abs())
            .unwrap()
            .then(a.cmp(&b))
    });
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n - 1);
    for &k in axes.iter().take(n - 1) {
        let mut v = vec![0.0; n];
        v[k] = 1.0;
        let r = dot(&v, x.coords());
        for (vi, xi) in v.iter_mut().zip(x.coords()) {
            *vi -= r * xi;
        }
        for b in &basis {
            let r = dot(&v, b);
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= r * bi;
            }
        }
        let r = norm(&v);
        basis.push(scale(&v, 1.0 / r));
    }
    basis
}

/// Central-difference spherical gradient of a field given on the sphere.
///
/// Differences are taken on the 0-homogeneous extension `y ↦ f(y/‖y‖)`
/// along an orthonormal tangent basis, whose tangential derivatives at the
/// sphere coincide with the spherical gradient; the result is tangent by
/// construction, `O(h²)` accurate wherever `f` is `C²`, and exact on
/// constants.
pub fn tangential_gradient_fd<F: Fn(&SpherePoint) -> f64>(
    f: F,
    x: &SpherePoint,
    h: f64,
) -> Result<TangentVector> {
    if h <= 0.0 {
        return Err(Error::Precondition("finite-difference step must be > 0".into()));
    }
    let ext = |y: &[f64]| -> Result<f64> {
        let p = SpherePoint::new(y.to_vec())?;
        let v = f(&p);
        if !v.is_finite() {
            return Err(Error::evaluation(
                format!("field is not finite ({v}) near the stencil"),
                Some(p.coords()),
            ));
        }
        Ok(v)
    };
    let basis = tangent_basis(x);
    let mut grad = vec![0.0; x.dim()];
    for b in &basis {
        let xp: Vec<f64> = x
            .coords()
            .iter()
            .zip(b)
            .map(|(xi, bi)| xi + h * bi)
            .collect();
        let xm: Vec<f64> = x
            .coords()
            .iter()
            .zip(b)
            .map(|(xi, bi)| xi - h * bi)
            .collect();
        let d = (ext(&xp)? - ext(&xm)?) / (2.0 * h);
        for (gi, bi) in grad.iter_mut().zip(b) {
            *gi += d * bi;
        }
    }
    Ok(TangentVector::project(x.clone(), &grad))
}

/// Seeded set of point pairs, used for sampled Lipschitz estimates.
pub fn random_pairs(n: usize, count: usize, seed: u64) -> Vec<(SpherePoint, SpherePoint)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (SpherePoint::random(n, &mut rng), SpherePoint::random(n, &mut rng)))
        .collect()
}

pub(crate) fn sphere_point_unchecked(coords: Vec<f64>) -> SpherePoint {
    debug_assert!((norm(&coords) - 1.0).abs() < 1e-9);
    SpherePoint { coords }
}

/// Euclidean difference helper for node/witness arithmetic.
pub fn ambient_sub(a: &SpherePoint, b: &SpherePoint) -> Vec<f64> {
    sub(a.coords(), b.coords())
}

#[cfg(test)]
mod tests {
    use super::*;

    const PI: f64 = std::f64::consts::PI;

    #[test]
    fn sphere_point_normalizes_and_rejects_tiny() {
        let p = SpherePoint::new(vec![3.0, 4.0]).unwrap();
        assert!((norm(p.coords()) - 1.0).abs() < 1e-12);
        assert!(SpherePoint::new(vec![1e-9, 0.0]).is_err());
    }

    #[test]
    fn weight_sums_match_surface_areas() {
        let r3 = QuadratureRule::build(3, 16, Scheme::ProductGauss, None).unwrap();
        assert!((r3.weight_sum() - 4.0 * PI).abs() < 1e-10);
        let r2 = QuadratureRule::build(2, 16, Scheme::ProductGauss, None).unwrap();
        assert!((r2.weight_sum() - 2.0 * PI).abs() < 1e-10);
        let fib = QuadratureRule::build(3, 4, Scheme::Fibonacci, None).unwrap();
        assert!((fib.weight_sum() - 4.0 * PI).abs() < 1e-10);
        // closed form n·κ_n for n = 4 is 2π²
        let mc = QuadratureRule::build(4, 8, Scheme::MonteCarlo, Some(7)).unwrap();
        assert!((mc.weight_sum() - 2.0 * PI * PI).abs() < 1e-9);
        assert!(mc.weights().iter().all(|&w| w > 0.0));
    }

    #[test]
    fn unsupported_scheme_dimension_pairs_error() {
        assert!(QuadratureRule::build(4, 4, Scheme::ProductGauss, None).is_err());
        assert!(QuadratureRule::build(2, 4, Scheme::Fibonacci, None).is_err());
        assert!(QuadratureRule::build(4, 4, Scheme::MonteCarlo, None).is_err());
        assert!(QuadratureRule::build(1, 4, Scheme::ProductGauss, None).is_err());
    }

    #[test]
    fn node_count_monotone_in_level() {
        let mut last = 0;
        for level in [1, 2, 4, 8] {
            let r = QuadratureRule::build(3, level, Scheme::ProductGauss, None).unwrap();
            assert!(r.len() > last);
            last = r.len();
        }
    }

    #[test]
    fn integrate_constant_and_odd_symmetry() {
        let r = QuadratureRule::build(3, 32, Scheme::ProductGauss, None).unwrap();
        assert!((r.integrate(|_| 1.0).unwrap() - 4.0 * PI).abs() < 1e-10);
        let odd = r.integrate(|x| x.coords()[0]).unwrap();
        assert!(odd.abs() < 1e-10, "odd integrand should cancel, got {odd}");
    }

    #[test]
    fn integrate_abs_x1_matches_analytic_value() {
        // independent oracle: ∫_{S²} |x₁| dH² = 2π ∫_{-1}^{1} |z| dz = 2π,
        // after rotating the symmetry axis onto e₁
        let r = QuadratureRule::build(3, 2048, Scheme::ProductGauss, None).unwrap();
        let v = r.integrate(|x| x.coords()[0].abs()).unwrap();
        assert!(
            (v - 2.0 * PI).abs() < 1e-6,
            "got {v}, expected {}",
            2.0 * PI
        );
    }

    #[test]
    fn integrate_reports_bad_node() {
        let r = QuadratureRule::build(3, 2, Scheme::ProductGauss, None).unwrap();
        let err = r
            .integrate(|x| if x.coords()[2] > 0.0 { f64::NAN } else { 1.0 })
            .unwrap_err();
        match err {
            Error::Evaluation { node, .. } => assert!(node.is_some()),
            other => panic!("expected evaluation error, got {other:?}"),
        }
    }

    #[test]
    fn integration_is_linear() {
        let r = QuadratureRule::build(3, 8, Scheme::ProductGauss, None).unwrap();
        let f = |x: &SpherePoint| x.coords()[0] * x.coords()[0];
        let g = |x: &SpherePoint| x.coords()[2].abs();
        let lhs = r.integrate(|x| 2.5 * f(x) - 0.5 * g(x)).unwrap();
        let rhs = 2.5 * r.integrate(f).unwrap() - 0.5 * r.integrate(g).unwrap();
        assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
    }

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(8);
        let int_x14: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((int_x14 - 2.0 / 15.0).abs() < 1e-13);
        let total: f64 = w.iter().sum();
        assert!((total - 2.0).abs() < 1e-13);
    }

    #[test]
    fn euclidean_to_spherical_gradient_cases() {
        let x = SpherePoint::new(vec![0.6, 0.8, 0.0]).unwrap();
        // constant field: gradient of the extension is radial
        let g = spherical_gradient_from_euclidean(1.0, x.coords(), &x);
        assert!(g.norm() < 1e-12);
        // linear field <a, .>
        let a = vec![1.0, -2.0, 0.5];
        let g = spherical_gradient_from_euclidean(dot(&a, x.coords()), &a, &x);
        let expect: Vec<f64> = {
            let r = dot(&a, x.coords());
            a.iter().zip(x.coords()).map(|(ai, xi)| ai - r * xi).collect()
        };
        assert!(crate::linalg::dist(g.vec(), &expect) < 1e-12);
        // Euler identity for the linear field
        let u = dot(&a, x.coords());
        assert!((g.norm().powi(2) + u * u - dot(&a, &a)).abs() < 1e-10);
    }

    #[test]
    fn fd_gradient_on_linear_field() {
        let x = SpherePoint::new(vec![0.3, -0.4, 0.866025]).unwrap();
        let a = vec![0.7, 1.3, -0.2];
        let g = tangential_gradient_fd(|p| dot(&a, p.coords()), &x, 1e-5).unwrap();
        let r = dot(&a, x.coords());
        let expect: Vec<f64> = a.iter().zip(x.coords()).map(|(ai, xi)| ai - r * xi).collect();
        assert!(crate::linalg::dist(g.vec(), &expect) < 1e-8);
        let zero = tangential_gradient_fd(|_| 3.25, &x, 1e-5).unwrap();
        assert!(zero.norm() < 1e-12);
    }

    #[test]
    fn random_rotation_is_orthogonal_and_deterministic() {
        for n in [2, 3, 4] {
            let r = Rotation::random(n, 42).unwrap();
            assert!(r.max_orthogonality_defect() < 1e-10);
            let r2 = Rotation::random(n, 42).unwrap();
            assert_eq!(r.rows, r2.rows);
            let other = Rotation::random(n, 43).unwrap();
            assert_ne!(r.rows, other.rows);
        }
    }

    #[test]
    fn rotation_preserves_weight_sum() {
        let rule = QuadratureRule::build(3, 8, Scheme::ProductGauss, None).unwrap();
        let rot = Rotation::random(3, 5).unwrap();
        let total: f64 = rule
            .nodes()
            .iter()
            .zip(rule.weights())
            .map(|(x, w)| {
                let _ = rot.rotate_point(x);
                w
            })
            .sum();
        assert!((total - 4.0 * PI).abs() < 1e-9);
    }

    #[test]
    fn csv_roundtrip_digits() {
        let r = QuadratureRule::build(2, 1, Scheme::ProductGauss, None).unwrap();
        let csv = r.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "x1,x2,weight");
        let first = lines.next().unwrap();
        let parts: Vec<&str> = first.split(',').collect();
        assert_eq!(parts.len(), 3);
        let x: f64 = parts[0].parse().unwrap();
        let y: f64 = parts[1].parse().unwrap();
        assert!((x * x + y * y - 1.0).abs() < 1e-14);
    }

    #[test]
    fn tangent_vector_rejects_non_tangent() {
        let x = SpherePoint::axis(3, 0);
        assert!(TangentVector::new(x.clone(), vec![1.0, 0.0, 0.0]).is_err());
        assert!(TangentVector::new(x, vec![0.0, 1.0, 0.0]).is_ok());
    }
}
