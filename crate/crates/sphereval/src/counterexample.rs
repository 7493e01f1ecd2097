//! The divergence experiment for k-homogeneous valuations, k >= 3.
//!
//! Writing `x = (ξ, η) in R^k × R^{n-k}`, the building block is
//! `w_{λ,ξ̄} = (λ u_ξ̄ − v_ξ̄) ∧ 0`, where `u_ξ̄` is the support function of
//! the (k-1)-disk `D_ξ̄` orthogonal to `ξ̄` and `v_ξ̄ = <ξ, ξ̄>`. A valuation
//! that agrees with the k-th intrinsic volume on support functions is forced
//! to take the value `−κ_{k-1} λ^{k-1} / k` on each `w`, and on the packed
//! minimum `ψ_ν = ν^{-p} ⋀_i w_{λ_ν, x_i}` (with `λ_ν = 4√k·ν` and
//! `ν^{k-1}` points at pairwise distance ≥ 4/λ_ν) the inclusion–exclusion
//! rule forces `μ(ψ_ν) = −c_k ν^{2k-2-kp} → −∞`, while `ψ_ν` itself
//! converges to zero in sup norm with uniformly bounded gradients.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::convex_bodies::{ConvexBody, PolyhedralCone};
use crate::linalg::{dist, dot, norm, scale};
use crate::lip_functions::ScalarField;
use crate::sphere_core::{
    tangent_basis, unit_ball_volume, QuadratureRule, SpherePoint,
};
use crate::{Error, Result};

/// Desk-scale guard on the packed field count `N_ν = ν^{k-1}`.
pub const MAX_PACKED_FIELDS: usize = 100_000;

/// Step used for the finite-difference gradient statistics; kept small so
/// stencils rarely straddle two supports (straddling nodes are excluded).
pub const PSI_FD_STEP: f64 = 1e-6;

/// Parameters of the experiment.
#[derive(Debug, Clone, Serialize)]
pub struct CounterexampleConfig {
    pub n: usize,
    pub k: usize,
    pub p: f64,
    pub nu_values: Vec<u32>,
}

impl CounterexampleConfig {
    pub fn new(n: usize, k: usize, p: f64, nu_values: Vec<u32>) -> Result<Self> {
        if !(3 <= k && k <= n) {
            return Err(Error::Config(format!("need 3 <= k <= n, got k = {k}, n = {n}")));
        }
        let p_max = (2.0 * k as f64 - 2.0) / k as f64;
        if !(1.0 < p && p < p_max) {
            return Err(Error::Config(format!(
                "need 1 < p < (2k-2)/k = {p_max}, got p = {p}"
            )));
        }
        if nu_values.is_empty() || nu_values.iter().any(|&v| v < 1) {
            return Err(Error::Config("nu values must be integers >= 1".into()));
        }
        Ok(CounterexampleConfig {
            n,
            k,
            p,
            nu_values,
        })
    }
}

/// `λ_ν = 4 √k · ν`.
pub fn lambda_for(k: usize, nu: u32) -> f64 {
    4.0 * (k as f64).sqrt() * nu as f64
}

/// One `w_{λ,ξ}` field, kept with its parameters.
#[derive(Debug, Clone)]
pub struct WField {
    pub lambda: f64,
    pub xi: Vec<f64>,
    field: ScalarField,
}

impl WField {
    pub fn as_field(&self) -> &ScalarField {
        &self.field
    }

    pub fn into_field(self) -> ScalarField {
        self.field
    }
}

fn embed(xi: &[f64], n: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[..xi.len()].copy_from_slice(xi);
    v
}

/// Builds `w_{λ,ξ} = h_{λ D_ξ − (ξ,0)} ∧ 0` as a scalar field on `S^{n-1}`.
///
/// The disk `D_ξ` is realized as the polar-cone cap of the subspace
/// `span{(ξ,0)} ⊕ ({0} × R^{n-k})`, whose distance function is exactly
/// `u_ξ(x) = ‖ξ_x − <ξ_x, ξ> ξ‖`.
pub fn build_w(lambda: f64, xi: &[f64], n: usize, k: usize) -> Result<WField> {
    if !(lambda >= 1.0) {
        return Err(Error::Config(format!("need lambda >= 1, got {lambda}")));
    }
    if !(3 <= k && k <= n) {
        return Err(Error::Config(format!("need 3 <= k <= n, got k = {k}, n = {n}")));
    }
    if xi.len() != k || (norm(xi) - 1.0).abs() > 1e-10 {
        return Err(Error::Config("xi must be a unit vector in R^k".into()));
    }
    let mut basis = vec![embed(xi, n)];
    for j in k..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        basis.push(e);
    }
    let cone = PolyhedralCone::subspace(basis)?;
    let disk = ConvexBody::polar_cone_cap(cone)?;
    let body = disk
        .scale_by(lambda)?
        .translate(scale(&embed(xi, n), -1.0))?;
    let field = ScalarField::min_of(vec![
        ScalarField::support(body),
        ScalarField::zero(n),
    ])?;
    Ok(WField {
        lambda,
        xi: xi.to_vec(),
        field,
    })
}

/// The value a `V_k`-consistent valuation must take on `w_{λ,ξ}`:
/// minus the k-volume of the cone over `λ D_ξ − (ξ,0)` with apex 0,
/// `−κ_{k-1} λ^{k-1} / k`.
pub fn w_value(lambda: f64, k: usize) -> f64 {
    -unit_ball_volume(k - 1) * lambda.powi(k as i32 - 1) / k as f64
}

/// Monte Carlo oracle for the k-volume of
/// `conv((λ D_ξ − (ξ,0)) ∪ {0})` inside the k-plane, with exact base-disk
/// membership. Independent of the closed form it checks.
pub fn w_cone_volume_mc(lambda: f64, k: usize, samples: usize, seed: u64) -> Result<f64> {
    if k < 2 || samples == 0 {
        return Err(Error::Config("cone volume needs k >= 2 and samples > 0".into()));
    }
    // coordinates: a along ξ in [-1, 0], b in the (k-1)-dim complement
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inside = 0u64;
    let mut b = vec![0.0; k - 1];
    for _ in 0..samples {
        let a = -rand::Rng::random::<f64>(&mut rng);
        for bi in b.iter_mut() {
            *bi = lambda * (2.0 * rand::Rng::random::<f64>(&mut rng) - 1.0);
        }
        let s = -a;
        if s > 0.0 && norm(&b) <= lambda * s {
            inside += 1;
        }
    }
    let box_vol = (2.0 * lambda).powi(k as i32 - 1);
    Ok(box_vol * inside as f64 / samples as f64)
}

/// `ν^{k-1}` points on `S^{k-1}` at pairwise distance ≥ `1/(√k ν)`, by the
/// grid-lift construction; distances are verified exhaustively.
pub fn pack_points(k: usize, nu: u32) -> Result<Vec<Vec<f64>>> {
    if k < 2 || nu < 1 {
        return Err(Error::Config("packing needs k >= 2 and nu >= 1".into()));
    }
    let nu_us = nu as usize;
    let count = nu_us.pow((k - 1) as u32);
    let mut points = Vec::with_capacity(count);
    let mut idx = vec![0usize; k - 1];
    loop {
        let prefix: Vec<f64> = idx
            .iter()
            .map(|&a| a as f64 / nu as f64 / (k as f64).sqrt())
            .collect();
        let rest = (1.0 - dot(&prefix, &prefix)).max(0.0).sqrt();
        let mut x = prefix;
        x.push(rest);
        points.push(x);
        let mut done = true;
        for d in (0..k - 1).rev() {
            idx[d] += 1;
            if idx[d] < nu_us {
                done = false;
                break;
            }
            idx[d] = 0;
        }
        if done {
            break;
        }
    }
    let min_dist = 1.0 / ((k as f64).sqrt() * nu as f64);
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            let d = dist(&points[i], &points[j]);
            if d < min_dist - 1e-12 {
                return Err(Error::Internal(format!(
                    "packing violated: points {i}, {j} at distance {d}"
                )));
            }
        }
    }
    Ok(points)
}

/// Outcome of checking `w₁ · w₂ ≡ 0` on a rule, together with the support
/// localization of each factor (every node with `w < 0` has its `R^k` part
/// within `√2/λ` of the field's `ξ`).
#[derive(Debug, Clone, Serialize)]
pub struct OrthogonalityReport {
    pub orthogonal: bool,
    pub max_abs_product: f64,
    pub support_nodes: usize,
    pub support_localization_ok: bool,
    /// max over support nodes of `‖ξ̂ − ξ‖ · λ / √2` (must stay below 1).
    pub max_support_ratio: f64,
}

pub fn orthogonality_check(
    w1: &WField,
    w2: &WField,
    rule: &QuadratureRule,
) -> Result<OrthogonalityReport> {
    if (w1.lambda - w2.lambda).abs() > 1e-12 {
        return Err(Error::Precondition("orthogonality check needs equal lambda".into()));
    }
    let mut max_prod: f64 = 0.0;
    for x in rule.nodes() {
        let prod = w1.field.eval(x) * w2.field.eval(x);
        max_prod = max_prod.max(prod.abs());
    }
    let (ok1, r1, n1) = support_localization(w1, rule);
    let (ok2, r2, n2) = support_localization(w2, rule);
    Ok(OrthogonalityReport {
        orthogonal: max_prod < 1e-12,
        max_abs_product: max_prod,
        support_nodes: n1 + n2,
        support_localization_ok: ok1 && ok2,
        max_support_ratio: r1.max(r2),
    })
}

/// Checks that every node carrying `w < 0` has its normalized `R^k` part
/// within `√2/λ` of `ξ`.
fn support_localization(w: &WField, rule: &QuadratureRule) -> (bool, f64, usize) {
    let k = w.xi.len();
    let bound = 2.0_f64.sqrt() / w.lambda;
    let mut max_ratio: f64 = 0.0;
    let mut count = 0usize;
    for x in rule.nodes() {
        if w.field.eval(x) >= 0.0 {
            continue;
        }
        count += 1;
        let xi_part = &x.coords()[..k];
        let r = norm(xi_part);
        if r < 1e-14 {
            max_ratio = f64::INFINITY;
            continue;
        }
        let hat = scale(xi_part, 1.0 / r);
        max_ratio = max_ratio.max(dist(&hat, &w.xi) / bound);
    }
    (max_ratio < 1.0, max_ratio, count)
}

/// The packed fields at level `ν`.
pub fn build_w_family(config: &CounterexampleConfig, nu: u32) -> Result<Vec<WField>> {
    let count = (nu as usize).pow((config.k - 1) as u32);
    if count > MAX_PACKED_FIELDS {
        return Err(Error::ResourceGuard(format!(
            "N_nu = {count} exceeds the limit {MAX_PACKED_FIELDS}"
        )));
    }
    let lambda = lambda_for(config.k, nu);
    pack_points(config.k, nu)?
        .into_iter()
        .map(|xi| build_w(lambda, &xi, config.n, config.k))
        .collect()
}

/// `ψ_ν = ν^{-p} ⋀_i w_{λ_ν, x_i}`.
pub fn build_psi(config: &CounterexampleConfig, nu: u32) -> Result<ScalarField> {
    let ws = build_w_family(config, nu)?;
    let parts: Vec<ScalarField> = ws.into_iter().map(WField::into_field).collect();
    Ok(ScalarField::min_of(parts)?.scaled((nu as f64).powf(-config.p)))
}

/// `c_k = 4^{k-1} κ_{k-1} k^{(k-3)/2}`.
pub fn c_constant(k: usize) -> f64 {
    4.0f64.powi(k as i32 - 1) * unit_ball_volume(k - 1) * (k as f64).powf((k as f64 - 3.0) / 2.0)
}

/// Closed form `μ(ψ_ν) = −c_k ν^{2k-2-kp}`.
pub fn psi_value_closed(config: &CounterexampleConfig, nu: u32) -> f64 {
    let e = 2.0 * config.k as f64 - 2.0 - config.k as f64 * config.p;
    -c_constant(config.k) * (nu as f64).powf(e)
}

/// The same value through the inclusion–exclusion route:
/// `ν^{-kp} Σ_i μ(w_{λ_ν, x_i}) = ν^{-kp} · N_ν · w_value(λ_ν, k)`.
pub fn psi_value_sum(config: &CounterexampleConfig, nu: u32) -> f64 {
    let count = (nu as usize).pow((config.k - 1) as u32);
    let mut total = 0.0;
    for _ in 0..count {
        total += w_value(lambda_for(config.k, nu), config.k);
    }
    (nu as f64).powf(-(config.k as f64) * config.p) * total
}

/// One row of the divergence table.
#[derive(Debug, Clone, Serialize)]
pub struct CounterexampleRow {
    pub nu: u32,
    pub lambda: f64,
    pub n_nu: usize,
    pub psi_value_closed: f64,
    pub psi_value_sum: f64,
    pub sup_norm_bound: f64,
    pub sup_norm_measured: f64,
    pub grad_bound: f64,
    pub grad_max_measured: f64,
    /// Nodes excluded from gradient statistics because the FD stencil
    /// straddled two supports.
    pub excluded_nodes: usize,
}

/// Runs the experiment over the configured `ν` values: exact two-path
/// values, sup-norm bound vs measurement, and FD gradient statistics with
/// straddling stencils excluded.
pub fn counterexample_table(
    config: &CounterexampleConfig,
    rule: &QuadratureRule,
) -> Result<Vec<CounterexampleRow>> {
    if rule.dim() != config.n {
        return Err(Error::Config("rule dimension must match the configured n".into()));
    }
    let mut rows = Vec::with_capacity(config.nu_values.len());
    for &nu in &config.nu_values {
        let ws = build_w_family(config, nu)?;
        let parts: Vec<ScalarField> = ws.iter().map(|w| w.as_field().clone()).collect();
        let psi = ScalarField::min_of(parts)?.scaled((nu as f64).powf(-config.p));
        let lambda = lambda_for(config.k, nu);
        let nu_f = nu as f64;
        let sup_bound = (2.0 * lambda + 1.0) / nu_f.powf(config.p);
        let grad_bound = (config.n as f64).sqrt() * (8.0 * (config.k as f64).sqrt() + 1.0)
            / nu_f.powf(config.p - 1.0);

        let mut sup_measured: f64 = 0.0;
        let mut grad_measured: f64 = 0.0;
        let mut excluded = 0usize;
        for x in rule.nodes() {
            sup_measured = sup_measured.max(psi.eval(x).abs());
            match psi_fd_gradient(&psi, x) {
                Some(g) => grad_measured = grad_measured.max(g),
                None => excluded += 1,
            }
        }
        rows.push(CounterexampleRow {
            nu,
            lambda,
            n_nu: (nu as usize).pow((config.k - 1) as u32),
            psi_value_closed: psi_value_closed(config, nu),
            psi_value_sum: psi_value_sum(config, nu),
            sup_norm_bound: sup_bound,
            sup_norm_measured: sup_measured,
            grad_bound,
            grad_max_measured: grad_measured,
            excluded_nodes: excluded,
        });
    }
    Ok(rows)
}

/// FD gradient norm of ψ at a node, or `None` when the stencil straddles two
/// supports (the winning operand changes across stencil points).
fn psi_fd_gradient(psi: &ScalarField, x: &SpherePoint) -> Option<f64> {
    let here = psi.min_winner(x)?;
    let basis = tangent_basis(x);
    let h = PSI_FD_STEP;
    let mut grad = vec![0.0; x.dim()];
    for b in &basis {
        let mut deriv = 0.0;
        for sign in [1.0, -1.0] {
            let y: Vec<f64> = x
                .coords()
                .iter()
                .zip(b)
                .map(|(xi, bi)| xi + sign * h * bi)
                .collect();
            let p = SpherePoint::new(y).ok()?;
            if psi.min_winner(&p)? != here {
                return None;
            }
            deriv += sign * psi.eval(&p);
        }
        let deriv = deriv / (2.0 * h);
        for (gi, bi) in grad.iter_mut().zip(b) {
            *gi += deriv * bi;
        }
    }
    Some(norm(&grad))
}

/// Least-squares slope of `log |ψ value|` against `log ν`.
pub fn divergence_slope(config: &CounterexampleConfig) -> f64 {
    let pts: Vec<(f64, f64)> = config
        .nu_values
        .iter()
        .map(|&nu| {
            (
                (nu as f64).ln(),
                psi_value_closed(config, nu).abs().ln(),
            )
        })
        .collect();
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lip_functions::lipschitz_estimate;
    use crate::sphere_core::Scheme;

    const PI: f64 = std::f64::consts::PI;

    fn config() -> CounterexampleConfig {
        CounterexampleConfig::new(3, 3, 1.2, (1..=6).collect()).unwrap()
    }

    fn rule() -> QuadratureRule {
        QuadratureRule::build(3, 24, Scheme::ProductGauss, None).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(CounterexampleConfig::new(3, 3, 1.2, vec![1]).is_ok());
        assert!(CounterexampleConfig::new(3, 2, 1.2, vec![1]).is_err());
        assert!(CounterexampleConfig::new(2, 3, 1.2, vec![1]).is_err());
        // p must lie strictly inside (1, (2k-2)/k); for k = 3 that is (1, 4/3)
        assert!(CounterexampleConfig::new(3, 3, 1.34, vec![1]).is_err());
        assert!(CounterexampleConfig::new(3, 3, 1.0, vec![1]).is_err());
        assert!(CounterexampleConfig::new(3, 3, 1.2, vec![]).is_err());
    }

    #[test]
    fn w_field_matches_direct_formula_and_sign() {
        let xi = vec![1.0, 0.0, 0.0];
        let w = build_w(2.0, &xi, 3, 3).unwrap();
        // at x = (ξ, 0): (λ·0 − 1) ∧ 0 = −1
        let at_xi = SpherePoint::new(vec![1.0, 0.0, 0.0]).unwrap();
        assert!((w.as_field().eval(&at_xi) + 1.0).abs() < 1e-12);
        let r = rule();
        for x in r.nodes() {
            let c = x.coords();
            let u = (c[1] * c[1] + c[2] * c[2]).sqrt();
            let direct = (2.0 * u - c[0]).min(0.0);
            let got = w.as_field().eval(x);
            assert!((got - direct).abs() < 1e-10, "w mismatch: {got} vs {direct}");
            assert!(got <= 1e-15, "w must be nonpositive");
        }
    }

    #[test]
    fn w_vanishes_off_the_k_factor() {
        // with n = 4, k = 3, points with zero R^3 part give w = 0
        let xi = vec![0.0, 1.0, 0.0];
        let w = build_w(4.0 * 3.0_f64.sqrt(), &xi, 4, 3).unwrap();
        let x = SpherePoint::axis(4, 3);
        assert_eq!(w.as_field().eval(&x), 0.0);
    }

    #[test]
    fn w_value_hand_cases_and_mc_oracle() {
        assert!((w_value(2.0, 3) + 4.0 * PI / 3.0).abs() < 1e-12);
        assert!((w_value(1.0, 3) + PI / 3.0).abs() < 1e-12);
        let mc = w_cone_volume_mc(2.0, 3, 400_000, 9).unwrap();
        let exact = 4.0 * PI / 3.0;
        assert!(
            (mc - exact).abs() < 0.02 * exact,
            "cone volume {mc} vs {exact}"
        );
    }

    #[test]
    fn packing_counts_distances_and_norms() {
        let pts = pack_points(3, 2).unwrap();
        assert_eq!(pts.len(), 4);
        let bound = 1.0 / (2.0 * 3.0_f64.sqrt());
        for i in 0..pts.len() {
            assert!((norm(&pts[i]) - 1.0).abs() < 1e-12);
            for j in (i + 1)..pts.len() {
                assert!(dist(&pts[i], &pts[j]) >= bound - 1e-12);
            }
        }
        assert_eq!(pack_points(3, 1).unwrap().len(), 1);
        assert_eq!(pack_points(4, 3).unwrap().len(), 27);
    }

    #[test]
    fn orthogonality_of_identical_antipodal_and_packed() {
        let r = rule();
        let xi1 = vec![1.0, 0.0, 0.0];
        let w1 = build_w(2.0, &xi1, 3, 3).unwrap();
        let same = orthogonality_check(&w1, &w1, &r).unwrap();
        assert!(!same.orthogonal, "w² > 0 somewhere");
        // antipodal points at distance 2 ≥ 4/λ for λ ≥ 2
        let w2 = build_w(2.0, &[-1.0, 0.0, 0.0], 3, 3).unwrap();
        let anti = orthogonality_check(&w1, &w2, &r).unwrap();
        assert!(anti.orthogonal, "max product {}", anti.max_abs_product);
        assert!(anti.support_localization_ok);
        // packed points at λ_ν are pairwise orthogonal
        let cfg = config();
        let ws = build_w_family(&cfg, 2).unwrap();
        for i in 0..ws.len() {
            for j in (i + 1)..ws.len() {
                let rep = orthogonality_check(&ws[i], &ws[j], &r).unwrap();
                assert!(rep.orthogonal, "pair ({i}, {j}) not orthogonal");
            }
        }
    }

    #[test]
    fn psi_is_scaled_single_w_for_nu_one() {
        let cfg = config();
        let psi = build_psi(&cfg, 1).unwrap();
        let w = build_w(lambda_for(3, 1), &[0.0, 0.0, 1.0], 3, 3).unwrap();
        for x in rule().nodes().iter().take(100) {
            assert!((psi.eval(x) - w.as_field().eval(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn psi_sup_norm_and_lipschitz_within_bounds() {
        let cfg = config();
        let r = rule();
        for nu in [1u32, 2, 3] {
            let psi = build_psi(&cfg, nu).unwrap();
            let bound = (2.0 * lambda_for(3, nu) + 1.0) / (nu as f64).powf(cfg.p);
            let sup = r
                .nodes()
                .iter()
                .map(|x| psi.eval(x).abs())
                .fold(0.0, f64::max);
            assert!(sup <= bound, "sup {sup} exceeds bound {bound}");
            let lip = lipschitz_estimate(&psi, 10_000, 33).unwrap();
            assert!(lip <= bound + 1e-9, "lip {lip} exceeds bound {bound}");
        }
    }

    #[test]
    fn psi_values_agree_between_paths_and_match_arithmetic() {
        let cfg = config();
        assert!((c_constant(3) - 16.0 * PI).abs() < 1e-12);
        // hand arithmetic: k=3, p=1.2, ν=2 → −16π·2^{0.4}
        let hand = -16.0 * PI * 2.0f64.powf(0.4);
        assert!((psi_value_closed(&cfg, 2) - hand).abs() < 1e-10);
        assert!((hand + 66.3255).abs() < 1e-3);
        for nu in 1..=8 {
            let a = psi_value_closed(&cfg, nu);
            let b = psi_value_sum(&cfg, nu);
            assert!((a - b).abs() <= 1e-12 * a.abs(), "paths differ at nu = {nu}");
        }
        // strictly more negative in ν
        let mut last = 0.0;
        for nu in 1..=8 {
            let v = psi_value_closed(&cfg, nu);
            assert!(v < last);
            last = v;
        }
    }

    #[test]
    fn divergence_slope_matches_exponent() {
        let cfg = config();
        let expect = 2.0 * 3.0 - 2.0 - 3.0 * cfg.p;
        assert!((divergence_slope(&cfg) - expect).abs() < 1e-9);
    }

    #[test]
    fn table_rows_hold_bounds_and_decay() {
        let cfg = CounterexampleConfig::new(3, 3, 1.2, vec![1, 2, 3]).unwrap();
        let rows = counterexample_table(&cfg, &rule()).unwrap();
        assert_eq!(rows.len(), 3);
        for row in &rows {
            assert!(row.sup_norm_measured <= row.sup_norm_bound);
            assert!(row.grad_max_measured <= row.grad_bound);
            assert!((row.psi_value_closed - row.psi_value_sum).abs() <= 1e-12 * row.psi_value_closed.abs());
        }
        // τ-nullity against divergence: sup norms shrink while values blow up
        assert!(rows[2].sup_norm_measured < rows[0].sup_norm_measured);
        assert!(rows[2].psi_value_closed < rows[0].psi_value_closed);
    }

    #[test]
    fn resource_guard_trips() {
        let cfg = CounterexampleConfig::new(4, 4, 1.2, vec![400]).unwrap();
        assert!(matches!(
            build_w_family(&cfg, 400),
            Err(Error::ResourceGuard(_))
        ));
    }
}
