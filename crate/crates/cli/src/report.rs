//! Report payloads for each subcommand.

use hopf_core::cohomology::{diagonal_eigenvalues, mall_dims, CohomologyReport, TensorBundleSpec};
use hopf_core::connection::{
    curvature, linearize_via_connection, solve_equivariant_connection_with, torsion, ConnectionForm, EquivariantBundle,
    SolveOrdering,
};
use hopf_core::normal_form::{linear_target, linearize, verify_conjugacy, NormalFormReport};
use hopf_core::series::{compose_germs, invert_germ, SeriesMatrix, TruncatedMapGerm};
use hopf_core::spectral::{
    assert_contraction, eigen, scan_bundle_resonances, scan_matrix_resonances, scan_matrix_resonances_for,
    BundleAction, ResonanceScan, ResonanceTarget, SpectralData,
};
use hopf_core::{Error, Warning, C};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::spec::{cocycle_matrix, BundleChoice, InputError};

const SELF_CHECK_POINTS: usize = 16;

pub struct Context {
    pub germ: TruncatedMapGerm<f64>,
    pub tolerance: f64,
    pub bundle: Option<BundleChoice>,
    pub seed: Option<u64>,
}

pub struct Outcome {
    pub code: u8,
    pub status: &'static str,
    pub notes: Vec<String>,
}

impl Outcome {
    fn ok() -> Self {
        Outcome { code: 0, status: "ok", notes: Vec::new() }
    }

    /// Downgrades to exit 3 on ill-conditioning or a failed residual check.
    fn checked(residuals: &[Value], warnings: &[Warning]) -> Self {
        let failed: Vec<String> = residuals
            .iter()
            .filter(|r| r["pass"] == json!(false))
            .map(|r| format!("residual {} = {} exceeds {}", r["name"], r["value"], r["tolerance"]))
            .collect();
        let ill = warnings.iter().any(|w| matches!(w, Warning::IllConditioned { .. }));
        if failed.is_empty() && !ill {
            return Outcome::ok();
        }
        let mut notes = failed;
        notes.extend(warnings.iter().map(|w| w.to_string()));
        Outcome { code: 3, status: "ill_conditioned", notes }
    }
}

/// Input errors become diagnostics; domain and numerical outcomes stay in the report.
fn classify(e: Error) -> Result<(Value, Outcome), InputError> {
    let code = match &e {
        Error::ResonantInput { .. } | Error::ResonanceObstruction { .. } => 2,
        Error::NoConvergence { .. } | Error::NotFlat { .. } | Error::NotClosed { .. } => 3,
        _ => return Err(InputError(e.to_string())),
    };
    let detail = match &e {
        Error::ResonantInput { relations } => {
            json!({ "relations": relations.iter().map(relation_json).collect::<Vec<_>>() })
        }
        Error::ResonanceObstruction { degree, weight, obstruction } => {
            json!({ "degree": degree, "weight": [weight.0, weight.1], "obstruction": obstruction })
        }
        Error::NotFlat { residual, tolerance } | Error::NotClosed { residual, tolerance } => {
            json!({ "residual": residual, "tolerance": tolerance })
        }
        _ => Value::Null,
    };
    let status = if code == 2 { "resonant" } else { "ill_conditioned" };
    Ok((
        json!({ "error": { "message": e.to_string(), "detail": detail } }),
        Outcome { code, status, notes: vec![e.to_string()] },
    ))
}

pub fn conventions() -> Value {
    json!({
        "indices": "0-based in JSON fields; relation strings and series use a1.., z1..",
        "complex": "[re, im]",
        "series": "sums of coefficient*z1^e1*...; complex coefficients as (a+bi)",
        "homological_operator": "L(h) = A h - h(A z) on homogeneous vector fields of degree d; conjugacy U∘g∘U⁻¹",
        "matrix_resonance": "|α_i - α^k| <= tol with |k| >= 2",
        "bundle_resonance": "|β_p - β_q α^k| <= tol with |k| >= 1",
        "connection": "θ = φ⁻¹dφ + φ⁻¹(γ*θ)φ, θ = Σ_l θ_l dz_l, r×r matrices θ_l; weight of z^m dz_l in entry (u,v) is β_v α_l α^m / β_u",
        "coframe": "dM = M θ, M(0) = I; developing map Z with dZ = M",
        "cohomology": "z^m e_I ⊗ dz_J in TH^p ⊗ (Ω¹)^q ⊗ K^k ⊗ L_λ is invariant iff α_J (Πα)^k α^m = α_I λ; h^{n-1}, h^n from Serre duality",
        "residuals": "max coefficient modulus, tested against the listed tolerance",
    })
}

fn c_json(z: C<f64>) -> Value {
    json!([z.re, z.im])
}

fn germ_json(g: &TruncatedMapGerm<f64>) -> Value {
    json!(g.components().iter().map(|c| c.to_string()).collect::<Vec<_>>())
}

fn matrix_json(m: &SeriesMatrix<f64>) -> Value {
    json!((0..m.rows()).map(|i| (0..m.cols()).map(|j| m.get(i, j).to_string()).collect::<Vec<_>>()).collect::<Vec<_>>())
}

fn connection_json(theta: &ConnectionForm<f64>) -> Value {
    json!(theta
        .forms()
        .iter()
        .enumerate()
        .map(|(l, f)| json!({ "direction": l, "matrix": matrix_json(f) }))
        .collect::<Vec<_>>())
}

fn relation_json(r: &hopf_core::spectral::ResonanceRelation) -> Value {
    let target = match r.target {
        ResonanceTarget::Eigenvalue(i) => json!({ "eigenvalue": i }),
        ResonanceTarget::Pair(p, q) => json!({ "fiber": [p, q] }),
    };
    json!({
        "relation": r.to_string(),
        "target": target,
        "exponents": r.exponents.exponents(),
        "residual": r.residual,
    })
}

fn scan_json(s: &ResonanceScan) -> Value {
    json!({
        "relations": s.relations.iter().map(relation_json).collect::<Vec<_>>(),
        "small_divisor": s.small_divisor,
        "degree_bound": s.bound,
        "tolerance": s.tolerance,
    })
}

fn spectral_json(s: &SpectralData<f64>) -> Value {
    json!({
        "eigenvalues": s.eigenvalues.iter().map(|&z| c_json(z)).collect::<Vec<_>>(),
        "moduli": s.eigenvalues.iter().map(|z| z.norm()).collect::<Vec<_>>(),
        "max_modulus": s.max_modulus(),
        "min_modulus": s.min_modulus(),
        "contraction": assert_contraction(s),
        "schur_residual": s.residual(),
        "qr_sweeps": s.sweeps,
    })
}

fn residual(name: &str, value: f64, tolerance: f64) -> Value {
    json!({ "name": name, "value": value, "tolerance": tolerance, "pass": value <= tolerance })
}

fn warnings_json(w: &[Warning]) -> Value {
    json!(w.iter().map(|w| w.to_string()).collect::<Vec<_>>())
}

/// Spectral data of the linear part; non-contractions are input errors.
fn spectral(ctx: &Context) -> Result<SpectralData<f64>, InputError> {
    let s = eigen(ctx.germ.linear_part()).map_err(|e| InputError(e.to_string()))?;
    if !assert_contraction(&s) {
        return Err(InputError(Error::NotContraction { max_modulus: s.max_modulus() }.to_string()));
    }
    Ok(s)
}

fn base_payload(s: &SpectralData<f64>, tol: f64) -> Result<serde_json::Map<String, Value>, InputError> {
    let scan = scan_matrix_resonances(s, tol).map_err(|e| InputError(e.to_string()))?;
    let mut m = serde_json::Map::new();
    m.insert("spectral".into(), spectral_json(s));
    m.insert("resonances".into(), scan_json(&scan));
    Ok(m)
}

fn equivariant_bundle(ctx: &Context) -> Result<EquivariantBundle<f64>, InputError> {
    match &ctx.bundle {
        None | Some(BundleChoice::Tangent) => Ok(EquivariantBundle::tangent(&ctx.germ)),
        Some(BundleChoice::Cocycle(rows)) => {
            let phi = cocycle_matrix(rows, ctx.germ.dimension(), ctx.germ.cap())?;
            EquivariantBundle::new(phi, ctx.germ.clone()).map_err(|e| InputError::field("bundle.cocycle", e))
        }
        Some(BundleChoice::Tensor(_)) => {
            Err(InputError::field("bundle", "tensor and line bundles are only meaningful for `cohomology`"))
        }
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Compares `U∘g` and `N∘U` by evaluation at random points of the polydisc of
/// radius 1/2, an evaluation path independent of the coefficient comparison.
fn conjugacy_self_check(
    seed: u64,
    u: &TruncatedMapGerm<f64>,
    g: &TruncatedMapGerm<f64>,
    normalized: &TruncatedMapGerm<f64>,
    coefficient_tolerance: f64,
) -> Result<Value, InputError> {
    let err = |e: Error| InputError(e.to_string());
    let left = compose_germs(u, g).map_err(err)?;
    let right = compose_germs(normalized, u).map_err(err)?;
    let n = g.dimension();
    let monomials = monomial_count(n, 1, g.cap());
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..SELF_CHECK_POINTS {
        let z: Vec<C<f64>> = (0..n).map(|_| C::from_polar(r.gen_range(0.0..0.5), r.gen_range(-3.15..3.15))).collect();
        let a = left.evaluate(&z);
        let b = right.evaluate(&z);
        worst = worst.max(a.iter().zip(&b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max));
    }
    // each monomial contributes at most its coefficient error on the polydisc
    Ok(
        json!({ "seed": seed, "points": SELF_CHECK_POINTS, "check": residual("pointwise_conjugacy", worst, coefficient_tolerance * monomials) }),
    )
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// Number of monomials in `n` variables with degree in `from..=to`.
fn monomial_count(n: usize, from: usize, to: usize) -> f64 {
    (from..=to).map(|d| binomial(n + d - 1, d)).sum::<usize>() as f64
}

/// Shuffles the eigenvalues and checks that the relation count is unchanged.
fn permutation_self_check(seed: u64, alpha: &[C<f64>], tol: f64, expected: usize) -> Result<Value, InputError> {
    let mut shuffled = alpha.to_vec();
    shuffled.shuffle(&mut rng(seed));
    let count = scan_matrix_resonances_for(&shuffled, tol).map_err(|e| InputError(e.to_string()))?.relations.len();
    Ok(json!({ "seed": seed, "check": {
        "name": "permutation_invariance", "value": count, "expected": expected, "pass": count == expected,
    } }))
}

fn conjugacy_scale(g: &TruncatedMapGerm<f64>, u: &TruncatedMapGerm<f64>) -> f64 {
    let inv = invert_germ(u).map(|v| v.max_abs()).unwrap_or(f64::INFINITY);
    g.max_abs().max(u.max_abs()).max(inv).max(1.0)
}

pub fn resonance_report(ctx: &Context) -> Result<(Value, Outcome), InputError> {
    let s = spectral(ctx)?;
    let mut m = base_payload(&s, ctx.tolerance)?;
    if let Some(BundleChoice::Tangent | BundleChoice::Cocycle(_)) = &ctx.bundle {
        let e = equivariant_bundle(ctx)?;
        let action = BundleAction::new(e.fiber_matrix()).map_err(|e| InputError(e.to_string()))?;
        let scan = scan_bundle_resonances(&s, &action, ctx.tolerance).map_err(|e| InputError(e.to_string()))?;
        m.insert("bundle_resonances".into(), scan_json(&scan));
    }
    if let Some(seed) = ctx.seed {
        let expected = m["resonances"]["relations"].as_array().map_or(0, Vec::len);
        m.insert("self_check".into(), permutation_self_check(seed, &s.schur_eigenvalues(), ctx.tolerance, expected)?);
    }
    m.insert("warnings".into(), json!([]));
    Ok((Value::Object(m), Outcome::ok()))
}

fn normal_form_payload(
    ctx: &Context,
    m: &mut serde_json::Map<String, Value>,
    report: &NormalFormReport<f64>,
    target: &TruncatedMapGerm<f64>,
) -> Result<Vec<Value>, InputError> {
    let g = &ctx.germ;
    let scale = conjugacy_scale(g, &report.change);
    let conj = verify_conjugacy(&report.change, g, target).map_err(|e| InputError(e.to_string()))?;
    m.insert("change".into(), germ_json(&report.change));
    m.insert("normalized".into(), germ_json(&report.normalized));
    m.insert("small_divisor".into(), json!(report.small_divisor));
    m.insert("conjugacy_scale".into(), json!(scale));
    if let Some(seed) = ctx.seed {
        m.insert("self_check".into(), conjugacy_self_check(seed, &report.change, g, target, ctx.tolerance * scale)?);
    }
    m.insert("warnings".into(), warnings_json(&report.warnings));
    Ok(vec![residual("conjugacy", conj, ctx.tolerance * scale)])
}

pub fn linearize_report(ctx: &Context) -> Result<(Value, Outcome), InputError> {
    let s = spectral(ctx)?;
    let mut m = base_payload(&s, ctx.tolerance)?;
    let report = match linearize(&ctx.germ, ctx.tolerance) {
        Ok(r) => r,
        Err(e) => return merge(m, classify(e)?),
    };
    let target = linear_target(&ctx.germ);
    let residuals = normal_form_payload(ctx, &mut m, &report, &target)?;
    let outcome = Outcome::checked(&residuals, &report.warnings);
    m.insert("residuals".into(), json!(residuals));
    Ok((Value::Object(m), outcome))
}

pub fn normal_form_report(ctx: &Context) -> Result<(Value, Outcome), InputError> {
    let s = spectral(ctx)?;
    let mut m = base_payload(&s, ctx.tolerance)?;
    let report = match hopf_core::normal_form::normal_form(&ctx.germ, ctx.tolerance) {
        Ok(r) => r,
        Err(e) => return merge(m, classify(e)?),
    };
    let normalized = report.normalized.clone();
    let mut residuals = normal_form_payload(ctx, &mut m, &report, &normalized)?;
    let kept: Vec<Value> =
        report.kept_monomials.iter().map(|(i, e)| json!({ "component": i, "exponents": e.exponents() })).collect();
    m.insert("kept_monomials".into(), json!(kept));
    let scale = ctx.germ.max_abs().max(1.0);
    residuals.push(residual("non_resonant_remainder", report.max_residual, ctx.tolerance * scale));
    let outcome = Outcome::checked(&residuals, &report.warnings);
    m.insert("residuals".into(), json!(residuals));
    Ok((Value::Object(m), outcome))
}

fn merge(
    mut m: serde_json::Map<String, Value>,
    (extra, outcome): (Value, Outcome),
) -> Result<(Value, Outcome), InputError> {
    for (k, v) in extra.as_object().expect("object") {
        m.insert(k.clone(), v.clone());
    }
    m.entry("warnings").or_insert(json!([]));
    Ok((Value::Object(m), outcome))
}

pub fn connection_report(ctx: &Context) -> Result<(Value, Outcome), InputError> {
    let s = spectral(ctx)?;
    let mut m = base_payload(&s, ctx.tolerance)?;
    let bundle = equivariant_bundle(ctx)?;
    let action = BundleAction::new(bundle.fiber_matrix()).map_err(|e| InputError(e.to_string()))?;
    let scan = scan_bundle_resonances(&s, &action, ctx.tolerance).map_err(|e| InputError(e.to_string()))?;
    m.insert("bundle_resonances".into(), scan_json(&scan));
    let tol = ctx.tolerance;
    if matches!(ctx.bundle, None | Some(BundleChoice::Tangent)) {
        let out = match linearize_via_connection(&ctx.germ, tol) {
            Ok(r) => r,
            Err(e) => return merge(m, classify(e)?),
        };
        let theta = out.connection.max_abs().max(1.0);
        let coframe = out.report.change.max_abs().max(1.0);
        let scale = conjugacy_scale(&ctx.germ, &out.report.change);
        m.insert("connection".into(), connection_json(&out.connection));
        m.insert("change".into(), germ_json(&out.report.change));
        m.insert("normalized".into(), germ_json(&out.report.normalized));
        m.insert("small_divisor".into(), json!(out.report.small_divisor));
        if let Some(seed) = ctx.seed {
            let target = linear_target(&ctx.germ);
            m.insert(
                "self_check".into(),
                conjugacy_self_check(seed, &out.report.change, &ctx.germ, &target, tol * scale)?,
            );
        }
        let residuals = vec![
            residual("fixed_point", out.fixed_point_residual, tol * theta),
            residual("curvature", out.curvature_residual, tol * theta * theta),
            residual("torsion", out.torsion_residual, tol * theta),
            residual("closedness", out.closedness_residual, tol * theta * coframe),
            residual("conjugacy", out.conjugacy_residual, tol * scale),
        ];
        let outcome = Outcome::checked(&residuals, &out.report.warnings);
        m.insert("warnings".into(), warnings_json(&out.report.warnings));
        m.insert("residuals".into(), json!(residuals));
        return Ok((Value::Object(m), outcome));
    }
    let sol = match solve_equivariant_connection_with(&bundle, tol, SolveOrdering::Primary) {
        Ok(r) => r,
        Err(e) => return merge(m, classify(e)?),
    };
    let theta = sol.connection.max_abs().max(1.0);
    let residuals = vec![
        residual("fixed_point", sol.fixed_point_residual, tol * theta),
        residual("curvature", curvature(&sol.connection).max_abs(), tol * theta * theta),
    ];
    // only the tangent connection must be torsion-free; here torsion is informational
    if bundle.rank() == bundle.dimension() {
        let t = torsion(&sol.connection).map_err(|e| InputError(e.to_string()))?;
        m.insert("torsion_max_abs".into(), json!(t.max_abs()));
    }
    if let Some(seed) = ctx.seed {
        m.insert("self_check".into(), ordering_self_check(seed, &bundle, &sol.connection, tol * theta)?);
    }
    m.insert("connection".into(), connection_json(&sol.connection));
    m.insert("small_divisor".into(), json!(sol.small_divisor));
    m.insert("warnings".into(), warnings_json(&sol.warnings));
    let outcome = Outcome::checked(&residuals, &sol.warnings);
    m.insert("residuals".into(), json!(residuals));
    Ok((Value::Object(m), outcome))
}

/// Re-solves with the reversed ordering and evaluates both connections at random points.
fn ordering_self_check(
    seed: u64,
    bundle: &EquivariantBundle<f64>,
    theta: &ConnectionForm<f64>,
    tolerance: f64,
) -> Result<Value, InputError> {
    let other = match solve_equivariant_connection_with(bundle, tolerance, SolveOrdering::Reversed) {
        Ok(s) => s.connection,
        Err(e) => return Ok(json!({ "seed": seed, "error": e.to_string() })),
    };
    let n = bundle.dimension();
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..SELF_CHECK_POINTS {
        let z: Vec<C<f64>> = (0..n).map(|_| C::from_polar(r.gen_range(0.0..0.5), r.gen_range(-3.15..3.15))).collect();
        for (a, b) in theta.forms().iter().zip(other.forms()) {
            for (x, y) in a.entries().iter().zip(b.entries()) {
                worst = worst.max((x.evaluate(&z) - y.evaluate(&z)).norm());
            }
        }
    }
    let monomials = monomial_count(n, 0, theta.cap());
    Ok(
        json!({ "seed": seed, "points": SELF_CHECK_POINTS, "check": residual("ordering_agreement", worst, tolerance * monomials) }),
    )
}

fn cohomology_json(r: &CohomologyReport, spec: &TensorBundleSpec) -> Value {
    json!({
        "bundle": crate::spec::tensor_bundle_json(spec),
        "dims": r.dims,
        "witnesses": r.witnesses.iter().map(|w| json!({
            "contravariant": w.contravariant,
            "covariant": w.covariant,
            "exponents": w.monomial.exponents(),
        })).collect::<Vec<_>>(),
        "top_degrees_from_serre_duality": r.top_degrees_from_serre_duality,
        "tolerance": r.tolerance,
    })
}

pub fn cohomology_report(ctx: &Context, flag: Option<TensorBundleSpec>) -> Result<(Value, Outcome), InputError> {
    let s = spectral(ctx)?;
    let mut m = base_payload(&s, ctx.tolerance)?;
    let alpha = diagonal_eigenvalues(ctx.germ.linear_part(), ctx.tolerance).map_err(|e| InputError::field("map", e))?;
    let spec = match (flag, &ctx.bundle) {
        (Some(b), _) => b,
        (None, None) => TensorBundleSpec::structure_sheaf(),
        (None, Some(BundleChoice::Tangent)) => TensorBundleSpec::tangent(),
        (None, Some(BundleChoice::Tensor(t))) => *t,
        (None, Some(BundleChoice::Cocycle(_))) => {
            return Err(InputError::field("bundle", "cohomology needs a tensor or line bundle"))
        }
    };
    let report = mall_dims(&alpha, &spec, ctx.tolerance).map_err(|e| match e {
        Error::DimensionTooSmall(_) => InputError::field("dimension", e),
        _ => InputError(e.to_string()),
    })?;
    m.insert("cohomology".into(), cohomology_json(&report, &spec));
    if let Some(seed) = ctx.seed {
        let mut shuffled = alpha.clone();
        shuffled.shuffle(&mut rng(seed));
        let again = mall_dims(&shuffled, &spec, ctx.tolerance).map_err(|e| InputError(e.to_string()))?;
        let check = json!({
            "name": "permutation_invariance", "value": again.dims, "expected": report.dims, "pass": again.dims == report.dims,
        });
        m.insert("self_check".into(), json!({ "seed": seed, "check": check }));
    }
    m.insert("warnings".into(), json!([]));
    Ok((Value::Object(m), Outcome::ok()))
}
