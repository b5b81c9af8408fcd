//! Gindikin structures: λ-polynomial 2-forms that are closed, simple, and
//! nondegenerate, together with their symmetries, potentials, and twists.
//!
//! Identities in λ are certified by evaluating at `deg+1` distinct rational
//! panel values rather than by normal-form emptiness, so conservative
//! expression canonicalization never produces a false failure.

use crate::forms::{Chart, ChartRef, FormError, LambdaPoly, LambdaPolyForm, LambdaVectorField};
use crate::report::{normalized, MaxTracker, ResidualReport};
use crate::sample::lambda_panel;
use crate::symexpr::{Bindings, EvalError, Expr, Point};
use num::rational::BigRational;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GindikinError {
    #[error("a Gindikin candidate must be a 2-form, got degree {0}")]
    BadDegree(usize),
    #[error("chart dimension must be 4 or 5, got {0}")]
    BadDimension(usize),
    #[error("expected λ-degree {expected}, form has {found:?}")]
    BadLambdaDegree { expected: usize, found: Option<usize> },
    #[error(transparent)]
    Form(#[from] FormError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// A degree-2 λ-polynomial form proposed as a Gindikin structure on a
/// 4- or 5-dimensional chart. Expected λ-degree is chart dimension − 2.
#[derive(Clone, Debug)]
pub struct GindikinCandidate {
    form: LambdaPolyForm,
}

impl GindikinCandidate {
    pub fn new(form: LambdaPolyForm) -> Result<Self, GindikinError> {
        if form.degree() != 2 {
            return Err(GindikinError::BadDegree(form.degree()));
        }
        let dim = form.chart().dim();
        if dim != 4 && dim != 5 {
            return Err(GindikinError::BadDimension(dim));
        }
        let expected = dim - 2;
        if form.lambda_degree() != Some(expected) {
            return Err(GindikinError::BadLambdaDegree {
                expected,
                found: form.lambda_degree(),
            });
        }
        Ok(GindikinCandidate { form })
    }

    pub fn form(&self) -> &LambdaPolyForm {
        &self.form
    }

    pub fn chart(&self) -> &ChartRef {
        self.form.chart()
    }
}

/// Evidence that L_K β = c·β over a sample.
#[derive(Clone, Debug)]
pub struct SymmetryCertificate {
    pub c: BigRational,
    pub report: ResidualReport,
}

/// Point-sampled nondegeneracy verdict: the smallest absolute top-form
/// coefficient of β^μ∧β^ν over panel pairs (wedged with each coordinate
/// differential in dimension 5).
#[derive(Clone, Debug, Serialize)]
pub struct NondegeneracyReport {
    pub schema: u32,
    pub system: String,
    pub min_abs: f64,
    pub threshold: f64,
    pub sample_size: usize,
    pub nondegenerate: bool,
}

/// Max |coefficient| of `form` over the λ panel and the sample, normalized
/// by the scale of `reference` at the same point.
fn panel_residual_report(
    label: &str,
    system: &str,
    form: &LambdaPolyForm,
    reference: &LambdaPolyForm,
    sample: &[Point],
    bindings: &Bindings,
    tolerance: f64,
) -> Result<ResidualReport, GindikinError> {
    let panel = lambda_panel(form.lambda_degree().map_or(1, |d| d + 1).min(8));
    let mut tracker = MaxTracker::new(&[label]);
    for p in sample {
        let scale = reference.max_abs_coeff(p, bindings)?;
        for lambda in &panel {
            let at = form.eval_at_lambda(lambda);
            tracker.record(0, normalized(at.max_abs_coeff(p, bindings)?, scale));
        }
    }
    Ok(tracker.into_report(system, sample.len(), tolerance))
}

/// dβ ≡ 0 over the λ panel × sample.
pub fn check_closed(
    g: &GindikinCandidate,
    sample: &[Point],
    bindings: &Bindings,
    tolerance: f64,
) -> Result<ResidualReport, GindikinError> {
    panel_residual_report(
        "d(beta)",
        "closedness",
        &g.form.d(),
        &g.form,
        sample,
        bindings,
        tolerance,
    )
}

/// β∧β ≡ 0 over the λ panel × sample (simplicity; this is where the
/// heavenly PDE lives).
pub fn check_simple(
    g: &GindikinCandidate,
    sample: &[Point],
    bindings: &Bindings,
    tolerance: f64,
) -> Result<ResidualReport, GindikinError> {
    let sq = g.form.wedge(&g.form)?;
    panel_residual_report("beta^beta", "simplicity", &sq, &g.form, sample, bindings, tolerance)
}

/// Nondegeneracy on the sample: β^μ∧β^ν must have a nonzero top-form
/// component for distinct panel values μ ≠ ν. In dimension 5 the 4-form
/// β^μ∧β^ν is wedged with each dxⁱ and the largest coefficient is taken.
pub fn check_nondegenerate(
    g: &GindikinCandidate,
    sample: &[Point],
    bindings: &Bindings,
    threshold: f64,
) -> Result<NondegeneracyReport, GindikinError> {
    let chart = g.chart().clone();
    let dim = chart.dim();
    let panel = lambda_panel(3);
    let top: Vec<usize> = (0..dim).collect();
    let mut min_abs = f64::INFINITY;
    for i in 0..panel.len() {
        for j in (i + 1)..panel.len() {
            let a = g.form.eval_at_lambda(&panel[i]);
            let b = g.form.eval_at_lambda(&panel[j]);
            let w = a.wedge(&b)?;
            for p in sample {
                let value = if dim == 4 {
                    w.entry(&top).coeff(0).eval(p, bindings)?.abs()
                } else {
                    // best direction: some dxⁱ must complete a volume form
                    let mut best = 0.0f64;
                    for c in chart.coords() {
                        let vol = w.wedge(&LambdaPolyForm::dcoord(&chart, c))?;
                        best = best.max(vol.entry(&top).coeff(0).eval(p, bindings)?.abs());
                    }
                    best
                };
                min_abs = min_abs.min(value);
            }
        }
    }
    if !min_abs.is_finite() {
        min_abs = 0.0;
    }
    Ok(NondegeneracyReport {
        schema: crate::report::SCHEMA_VERSION,
        system: "nondegeneracy".into(),
        min_abs,
        threshold,
        sample_size: sample.len(),
        nondegenerate: min_abs > threshold,
    })
}

/// L_K β − c·β ≡ 0 over the λ panel × sample. K must have λ-degree 0.
pub fn check_symmetry(
    g: &GindikinCandidate,
    k: &LambdaVectorField,
    c: &BigRational,
    sample: &[Point],
    bindings: &Bindings,
    tolerance: f64,
) -> Result<SymmetryCertificate, GindikinError> {
    let lie = g.form.lie_derivative(k)?;
    let residual = lie.sub(&g.form.scale(&Expr::from_rational(c.clone())))?;
    let report = panel_residual_report(
        "L_K(beta) - c*beta",
        "symmetry",
        &residual,
        &g.form,
        sample,
        bindings,
        tolerance,
    )?;
    Ok(SymmetryCertificate {
        c: c.clone(),
        report,
    })
}

/// Potential α = K⌟β of a closed form with a c = 1 symmetry; then dα = β
/// by Cartan's formula. The caller is expected to have certified the
/// symmetry and closedness first.
pub fn potential(
    g: &GindikinCandidate,
    k: &LambdaVectorField,
) -> Result<LambdaPolyForm, GindikinError> {
    Ok(g.form.interior(k)?)
}

/// Twist: β_φ = (λ−λ₀)⁻¹ d(φ·α), where `phi` is the multiplier φ(ψ)
/// already composed with its integral coordinate (opaque or concrete).
pub fn twist(
    alpha: &LambdaPolyForm,
    phi: &Expr,
    lambda0: &BigRational,
) -> Result<LambdaPolyForm, FormError> {
    alpha.scale(phi).d().divide_linear(lambda0)
}

/// Max |coefficient| of a−b over the λ panel × sample, normalized by the
/// scale of b; used for cross-pipeline form comparisons.
pub fn compare_forms(
    label: &str,
    a: &LambdaPolyForm,
    b: &LambdaPolyForm,
    sample: &[Point],
    bindings: &Bindings,
    tolerance: f64,
) -> Result<ResidualReport, GindikinError> {
    let diff = a.sub(b)?;
    panel_residual_report("difference", label, &diff, b, sample, bindings, tolerance)
}

// ---- builders for the structures appearing in the catalog ----------------

fn lam_pow(k: usize) -> LambdaPoly {
    let mut coeffs = vec![Expr::zero(); k];
    coeffs.push(Expr::one());
    LambdaPoly::from_coeffs(coeffs)
}

/// Π over the given λ parameters of (λ − λ_k).
fn lam_product(lambdas: &[&BigRational]) -> LambdaPoly {
    let mut out = LambdaPoly::constant(Expr::one());
    for l in lambdas {
        out = out.mul(&LambdaPoly::from_coeffs(vec![
            Expr::from_rational(-(*l).clone()),
            Expr::one(),
        ]));
    }
    out
}

/// The general-heavenly Gindikin form on chart (x¹..xⁿ):
/// β^λ = Σ_{i<j} (λᵢ−λⱼ) f_ij Π_{k∉{i,j}} (λ−λ_k) dxⁱ∧dxʲ.
pub fn beta_gh(key: &Expr, lambdas: &[BigRational], n: usize) -> LambdaPolyForm {
    assert!(lambdas.len() >= n, "need {n} lambda parameters");
    let names: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    let name_refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let chart = Chart::new(&name_refs);
    let mut out = LambdaPolyForm::zero(chart, 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let rest: Vec<&BigRational> = (0..n)
                .filter(|&k| k != i && k != j)
                .map(|k| &lambdas[k])
                .collect();
            let fij = key.diff(&names[i]).diff(&names[j]);
            let c = Expr::mul(vec![
                Expr::from_rational(&lambdas[i] - &lambdas[j]),
                fij,
            ]);
            out.add_entry(&[i, j], lam_product(&rest).scale(&c));
        }
    }
    out
}

/// The general-heavenly potential 1-form:
/// α^λ = Σ_i (λ_{n+1}−λᵢ) f_i Π_{k≠i} (λ−λ_k) dxⁱ.
pub fn alpha_gh(key: &Expr, lambdas: &[BigRational], n: usize) -> LambdaPolyForm {
    assert!(lambdas.len() >= n + 1, "need {} lambda parameters", n + 1);
    let names: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    let name_refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let chart = Chart::new(&name_refs);
    let mut out = LambdaPolyForm::zero(chart, 1);
    for i in 0..n {
        let rest: Vec<&BigRational> = (0..n).filter(|&k| k != i).map(|k| &lambdas[k]).collect();
        let c = Expr::mul(vec![
            Expr::from_rational(&lambdas[n] - &lambdas[i]),
            key.diff(&names[i]),
        ]);
        out.add_entry(&[i], lam_product(&rest).scale(&c));
    }
    out
}

/// The I-Plebański (I-heavenly 4D) Gindikin form on chart (r,s,z,w):
/// β^λ = λ² dr∧ds + λ(θ_rz dr∧dz + θ_rw dr∧dw + θ_sz ds∧dz + θ_sw ds∧dw)
///       − dz∧dw.
pub fn gind_ih(theta: &Expr) -> LambdaPolyForm {
    let chart = Chart::new(&["r", "s", "z", "w"]);
    let d2 = |a: &str, b: &str| theta.diff(a).diff(b);
    let lin = |e: Expr| LambdaPoly::from_coeffs(vec![Expr::zero(), e]);
    let mut out = LambdaPolyForm::zero(chart, 2);
    out.add_entry(&[0, 1], lam_pow(2));
    out.add_entry(&[0, 2], lin(d2("r", "z")));
    out.add_entry(&[0, 3], lin(d2("r", "w")));
    out.add_entry(&[1, 2], lin(d2("s", "z")));
    out.add_entry(&[1, 3], lin(d2("s", "w")));
    out.add_entry(&[2, 3], LambdaPoly::constant(Expr::from_int(-1)));
    out
}

/// The II-Plebański (II-heavenly 4D) Gindikin form on chart (x,y,z,w):
/// β^λ = dw∧dz + λ(dx∧dw + dy∧dz)
///       + λ²(dx∧dy − dw∧d(θ_y) + dz∧d(θ_x)).
pub fn gind_iih(theta: &Expr) -> LambdaPolyForm {
    let chart = Chart::new(&["x", "y", "z", "w"]);
    let dc = |n: &str| LambdaPolyForm::dcoord(&chart, n);
    let w2 = |a: LambdaPolyForm, b: &LambdaPolyForm| a.wedge(b).expect("same chart");
    let c0 = w2(dc("w"), &dc("z"));
    let c1 = w2(dc("x"), &dc("w")).add(&w2(dc("y"), &dc("z"))).unwrap();
    let c2 = w2(dc("x"), &dc("y"))
        .sub(&w2(dc("w"), &LambdaPolyForm::d_scalar(&chart, &theta.diff("y"))))
        .unwrap()
        .add(&w2(dc("z"), &LambdaPolyForm::d_scalar(&chart, &theta.diff("x"))))
        .unwrap();
    c0.add(&c1.scale_poly(&lam_pow(1)))
        .unwrap()
        .add(&c2.scale_poly(&lam_pow(2)))
        .unwrap()
}

/// The 5D I-heavenly Gindikin form on chart (r,s,z,w,u).
pub fn gind_ih5d(theta: &Expr) -> LambdaPolyForm {
    let chart = Chart::new(&["r", "s", "z", "w", "u"]);
    let d2 = |a: &str, b: &str| theta.diff(a).diff(b);
    let idx = |a: &str, b: &str| {
        [
            chart.index_of(a).unwrap(),
            chart.index_of(b).unwrap(),
        ]
    };
    let mut out = LambdaPolyForm::zero(chart.clone(), 2);
    // λ³ dr∧ds
    out.add_entry(&idx("r", "s"), lam_pow(3));
    // λ² (Θ second derivatives against dz, dw, du)
    for (a, b) in [
        ("r", "z"),
        ("r", "w"),
        ("r", "u"),
        ("s", "z"),
        ("s", "w"),
        ("s", "u"),
    ] {
        out.add_entry(
            &idx(a, b),
            LambdaPoly::from_coeffs(vec![Expr::zero(), Expr::zero(), d2(a, b)]),
        );
    }
    // λ (Θ_rw dr∧du + Θ_sw ds∧du − dz∧dw + Θ_zw dz∧du + Θ_ww dw∧du)
    let lin = |e: Expr| LambdaPoly::from_coeffs(vec![Expr::zero(), e]);
    out.add_entry(&idx("r", "u"), lin(d2("r", "w")));
    out.add_entry(&idx("s", "u"), lin(d2("s", "w")));
    out.add_entry(&idx("z", "w"), lin(Expr::from_int(-1)));
    out.add_entry(&idx("z", "u"), lin(d2("z", "w")));
    out.add_entry(&idx("w", "u"), lin(d2("w", "w")));
    // −dz∧du
    out.add_entry(&idx("z", "u"), LambdaPoly::constant(Expr::from_int(-1)));
    out
}

/// The 5D II-heavenly Gindikin form on chart (x,y,z,w,u):
/// β^λ = du∧dz + λ(dx∧du + dw∧dz) + λ²(dx∧dw + dy∧dz − du∧d(Θ_y))
///       + λ³(dx∧dy + dz∧d(Θ_x) − dw∧d(Θ_y) − du∧d(Θ_w)).
pub fn gind_iih5d(theta: &Expr) -> LambdaPolyForm {
    let chart = Chart::new(&["x", "y", "z", "w", "u"]);
    let dc = |n: &str| LambdaPolyForm::dcoord(&chart, n);
    let ds = |e: Expr| LambdaPolyForm::d_scalar(&chart, &e);
    let w2 = |a: LambdaPolyForm, b: LambdaPolyForm| a.wedge(&b).expect("same chart");
    let c0 = w2(dc("u"), dc("z"));
    let c1 = w2(dc("x"), dc("u")).add(&w2(dc("w"), dc("z"))).unwrap();
    let c2 = w2(dc("x"), dc("w"))
        .add(&w2(dc("y"), dc("z")))
        .unwrap()
        .sub(&w2(dc("u"), ds(theta.diff("y"))))
        .unwrap();
    let c3 = w2(dc("x"), dc("y"))
        .add(&w2(dc("z"), ds(theta.diff("x"))))
        .unwrap()
        .sub(&w2(dc("w"), ds(theta.diff("y"))))
        .unwrap()
        .sub(&w2(dc("u"), ds(theta.diff("w"))))
        .unwrap();
    c0.add(&c1.scale_poly(&lam_pow(1)))
        .unwrap()
        .add(&c2.scale_poly(&lam_pow(2)))
        .unwrap()
        .add(&c3.scale_poly(&lam_pow(3)))
        .unwrap()
}

/// The reduced I-heavenly potential 1-form on chart (r,s,z,w):
/// α^λ = dz + λ(−θ_rw dr − θ_sw ds + (w−θ_zw) dz − θ_ww dw)
///       + λ²((sθ_rs−θ_r) dr + sθ_ss ds + sθ_sz dz + sθ_sw dw) − λ³ s dr.
pub fn alpha_ihs(theta: &Expr) -> LambdaPolyForm {
    let chart = Chart::new(&["r", "s", "z", "w"]);
    let d1 = |a: &str| theta.diff(a);
    let d2 = |a: &str, b: &str| theta.diff(a).diff(b);
    let s = Expr::var("s");
    let w = Expr::var("w");
    let mut out = LambdaPolyForm::zero(chart, 1);
    out.add_entry(
        &[0],
        LambdaPoly::from_coeffs(vec![
            Expr::zero(),
            d2("r", "w").neg(),
            Expr::sub(
                Expr::mul(vec![s.clone(), d2("r", "s")]),
                d1("r"),
            ),
            s.clone().neg(),
        ]),
    );
    out.add_entry(
        &[1],
        LambdaPoly::from_coeffs(vec![
            Expr::zero(),
            d2("s", "w").neg(),
            Expr::mul(vec![s.clone(), d2("s", "s")]),
        ]),
    );
    out.add_entry(
        &[2],
        LambdaPoly::from_coeffs(vec![
            Expr::one(),
            Expr::sub(w, d2("z", "w")),
            Expr::mul(vec![s.clone(), d2("s", "z")]),
        ]),
    );
    out.add_entry(
        &[3],
        LambdaPoly::from_coeffs(vec![
            Expr::zero(),
            d2("w", "w").neg(),
            Expr::mul(vec![s, d2("s", "w")]),
        ]),
    );
    out
}

/// The reduced II-heavenly potential 1-form on chart (x,y,z,w):
/// α^λ = dz + λ(−dx + w dz)
///       + λ²(−(θ_xy+w) dx − θ_yy dy + (y−θ_yz) dz − θ_wy dw)
///       + λ³(−(θ_wx+wθ_xy+y) dx − (θ_wy+wθ_yy) dy
///             − (θ_wz+wθ_yz+θ_x) dz − (θ_ww+wθ_wy) dw).
pub fn alpha_iih(theta: &Expr) -> LambdaPolyForm {
    let chart = Chart::new(&["x", "y", "z", "w"]);
    let d1 = |a: &str| theta.diff(a);
    let d2 = |a: &str, b: &str| theta.diff(a).diff(b);
    let w = Expr::var("w");
    let y = Expr::var("y");
    let mut out = LambdaPolyForm::zero(chart, 1);
    out.add_entry(
        &[0],
        LambdaPoly::from_coeffs(vec![
            Expr::zero(),
            Expr::from_int(-1),
            Expr::add(vec![d2("x", "y"), w.clone()]).neg(),
            Expr::add(vec![
                d2("w", "x"),
                Expr::mul(vec![w.clone(), d2("x", "y")]),
                y.clone(),
            ])
            .neg(),
        ]),
    );
    out.add_entry(
        &[1],
        LambdaPoly::from_coeffs(vec![
            Expr::zero(),
            Expr::zero(),
            d2("y", "y").neg(),
            Expr::add(vec![d2("w", "y"), Expr::mul(vec![w.clone(), d2("y", "y")])]).neg(),
        ]),
    );
    out.add_entry(
        &[2],
        LambdaPoly::from_coeffs(vec![
            Expr::one(),
            w.clone(),
            Expr::sub(y, d2("y", "z")),
            Expr::add(vec![
                d2("w", "z"),
                Expr::mul(vec![w.clone(), d2("y", "z")]),
                d1("x"),
            ])
            .neg(),
        ]),
    );
    out.add_entry(
        &[3],
        LambdaPoly::from_coeffs(vec![
            Expr::zero(),
            Expr::zero(),
            d2("w", "y").neg(),
            Expr::add(vec![d2("w", "w"), Expr::mul(vec![w, d2("w", "y")])]).neg(),
        ]),
    );
    out
}

/// Separated 5D lift Θ(r,s,z,w,u) = u·θ(r, s/u, z, w/u) used by the
/// I-heavenly reduction (and its II analogue with coordinates renamed).
pub fn separated_lift(theta: &Expr, scale_coords: (&str, &str)) -> Expr {
    let (a, b) = scale_coords;
    let u = Expr::var("u");
    Expr::mul(vec![
        u.clone(),
        theta
            .subst(a, &Expr::div(Expr::var(a), u.clone()))
            .subst(b, &Expr::div(Expr::var(b), u)),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::SampleBox;
    use crate::symexpr::parse;
    use num::traits::{One, Zero};

    fn tol() -> f64 {
        1e-8
    }

    fn rat(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    fn lams(v: &[i64]) -> Vec<BigRational> {
        v.iter().map(|&k| rat(k)).collect()
    }

    fn i_theta() -> Expr {
        // exponential I-heavenly solution, c1=c2=c3=1
        parse("((r+z)+w)*s - (exp(-((r+z)+w)) - (w-1)*(r+z) + w^3/6 - w^2/2)").unwrap()
    }

    #[test]
    fn beta_gh_constant_coefficients_closed() {
        let f = parse("x1*x2 + x3*x4").unwrap();
        let g = GindikinCandidate::new(beta_gh(&f, &lams(&[0, 1, 2, 3]), 4)).unwrap();
        let sample = SampleBox::unit(&["x1", "x2", "x3", "x4"]).sample(10, 21);
        let r = check_closed(&g, &sample, &Bindings::new(), tol()).unwrap();
        assert!(r.pass, "{}", r.summary_line());
        // ...but f is not a heavenly solution, so simplicity fails
        let r = check_simple(&g, &sample, &Bindings::new(), tol()).unwrap();
        assert!(!r.pass);
    }

    #[test]
    fn beta_gh_simple_iff_heavenly() {
        let f = parse("exp(x1+x2+x3+x4) + exp(x1+2*x2+3*x3+4*x4)").unwrap();
        let g = GindikinCandidate::new(beta_gh(&f, &lams(&[0, 1, 2, 3]), 4)).unwrap();
        let sample = SampleBox::unit(&["x1", "x2", "x3", "x4"]).sample(30, 22);
        let b = Bindings::new();
        assert!(check_closed(&g, &sample, &b, tol()).unwrap().pass);
        assert!(check_simple(&g, &sample, &b, tol()).unwrap().pass);
        assert!(check_nondegenerate(&g, &sample, &b, 1e-8).unwrap().nondegenerate);
    }

    #[test]
    fn gsiip_closed_for_arbitrary_key() {
        // the 5D II form is a λ-truncation of an exact form, hence closed
        // for any C³ key, solution or not
        let theta = parse("x^2*y + y*w^2*u + z^3 + x*u^2").unwrap();
        let g = GindikinCandidate::new(gind_iih5d(&theta)).unwrap();
        let sample = SampleBox::unit(&["x", "y", "z", "w", "u"]).sample(15, 23);
        let r = check_closed(&g, &sample, &Bindings::new(), tol()).unwrap();
        assert!(r.pass, "{}", r.summary_line());
    }

    #[test]
    fn ih5d_form_closed_and_simple_at_separated_solution() {
        let lifted = separated_lift(&i_theta(), ("s", "w"));
        let g = GindikinCandidate::new(gind_ih5d(&lifted)).unwrap();
        let sample = SampleBox::new(&[
            ("r", -1.0, 1.0),
            ("s", -1.0, 1.0),
            ("z", -1.0, 1.0),
            ("w", -1.0, 1.0),
            ("u", 0.5, 1.5),
        ])
        .sample(25, 24);
        let b = Bindings::new();
        let r = check_closed(&g, &sample, &b, tol()).unwrap();
        assert!(r.pass, "closed: {}", r.summary_line());
        let r = check_simple(&g, &sample, &b, tol()).unwrap();
        assert!(r.pass, "simple: {}", r.summary_line());
        let r = check_nondegenerate(&g, &sample, &b, 1e-8).unwrap();
        assert!(r.nondegenerate, "min top coefficient {}", r.min_abs);
    }

    #[test]
    fn gind_ih_simple_iff_i_plebanski() {
        let g = GindikinCandidate::new(gind_ih(&i_theta())).unwrap();
        let sample = SampleBox::unit(&["r", "s", "z", "w"]).sample(25, 25);
        let b = Bindings::new();
        assert!(check_closed(&g, &sample, &b, tol()).unwrap().pass);
        assert!(check_simple(&g, &sample, &b, tol()).unwrap().pass);
        // a non-solution fails simplicity
        let bad = GindikinCandidate::new(gind_ih(&parse("r*z + s*w + r^2*s^2").unwrap())).unwrap();
        assert!(!check_simple(&bad, &sample, &b, tol()).unwrap().pass);
    }

    #[test]
    fn gind_iih_flat_nondegenerate() {
        let g = GindikinCandidate::new(gind_iih(&Expr::zero())).unwrap();
        let sample = SampleBox::unit(&["x", "y", "z", "w"]).sample(10, 26);
        let b = Bindings::new();
        assert!(check_closed(&g, &sample, &b, tol()).unwrap().pass);
        assert!(check_simple(&g, &sample, &b, tol()).unwrap().pass);
        assert!(check_nondegenerate(&g, &sample, &b, 1e-8).unwrap().nondegenerate);
    }

    #[test]
    fn degenerate_candidate_is_flagged() {
        // β = dx∧dy + λ dx∧dz has β^μ∧β^ν ≡ 0: every evaluation shares
        // the dx factor
        let chart = Chart::new(&["x", "y", "z", "w"]);
        let mut form = LambdaPolyForm::zero(chart, 2);
        form.add_entry(&[0, 1], LambdaPoly::constant(Expr::one()));
        form.add_entry(&[0, 2], LambdaPoly::from_coeffs(vec![Expr::zero(), Expr::one()]));
        form.add_entry(&[1, 2], LambdaPoly::from_coeffs(vec![Expr::zero(), Expr::zero(), Expr::one()]));
        let g = GindikinCandidate::new(form).unwrap();
        let sample = SampleBox::unit(&["x", "y", "z", "w"]).sample(5, 27);
        let r = check_nondegenerate(&g, &sample, &Bindings::new(), 1e-8).unwrap();
        assert!(!r.nondegenerate);
    }

    #[test]
    fn separated_general_heavenly_has_translation_symmetry() {
        // f = h·e^{x⁵}: K = ∂_{x⁵} scales β by c = 1 exactly
        let h = parse("x1*x2 + x3*x4 + x1^2*x3").unwrap();
        let f = Expr::mul(vec![h, Expr::exp(Expr::var("x5"))]);
        let g = GindikinCandidate::new(beta_gh(&f, &lams(&[0, 1, 2, 3, 4]), 5)).unwrap();
        let k = LambdaVectorField::from_pairs(g.chart(), &[("x5", Expr::one())]);
        let sample = SampleBox::unit(&["x1", "x2", "x3", "x4", "x5"]).sample(15, 28);
        let b = Bindings::new();
        let cert = check_symmetry(&g, &k, &BigRational::one(), &sample, &b, tol()).unwrap();
        assert!(cert.report.pass, "{}", cert.report.summary_line());
        // a generic direction is not a symmetry
        let k_bad = LambdaVectorField::from_pairs(g.chart(), &[("x1", Expr::one())]);
        let cert = check_symmetry(&g, &k_bad, &BigRational::one(), &sample, &b, tol()).unwrap();
        assert!(!cert.report.pass);
        // and for the closed form with c = 1, Cartan gives d(K⌟β) = β
        let alpha = potential(&g, &k).unwrap();
        let r = compare_forms("potential", &alpha.d(), g.form(), &sample, &b, tol()).unwrap();
        assert!(r.pass, "{}", r.summary_line());
    }

    #[test]
    fn euler_field_is_separated_symmetry_in_5d() {
        let lifted = separated_lift(&i_theta(), ("s", "w"));
        let g = GindikinCandidate::new(gind_ih5d(&lifted)).unwrap();
        let k = LambdaVectorField::from_pairs(
            g.chart(),
            &[
                ("s", Expr::var("s")),
                ("w", Expr::var("w")),
                ("u", Expr::var("u")),
            ],
        );
        let sample = SampleBox::new(&[
            ("r", -1.0, 1.0),
            ("s", -1.0, 1.0),
            ("z", -1.0, 1.0),
            ("w", -1.0, 1.0),
            ("u", 0.5, 1.5),
        ])
        .sample(20, 29);
        let cert =
            check_symmetry(&g, &k, &BigRational::one(), &sample, &Bindings::new(), tol()).unwrap();
        assert!(cert.report.pass, "{}", cert.report.summary_line());
    }

    #[test]
    fn potential_restricts_to_displayed_reduced_forms() {
        // I side: K⌟β for the separated lift, restricted to u=1, matches
        // the displayed reduced potential α^λ
        let theta = i_theta();
        let lifted = separated_lift(&theta, ("s", "w"));
        let g = GindikinCandidate::new(gind_ih5d(&lifted)).unwrap();
        let k = LambdaVectorField::from_pairs(
            g.chart(),
            &[
                ("s", Expr::var("s")),
                ("w", Expr::var("w")),
                ("u", Expr::var("u")),
            ],
        );
        let alpha = potential(&g, &k).unwrap().restrict("u", &Expr::one()).unwrap();
        let expected = alpha_ihs(&theta);
        let sample = SampleBox::unit(&["r", "s", "z", "w"]).sample(20, 30);
        let r = compare_forms("alpha_I", &alpha, &expected, &sample, &Bindings::new(), tol())
            .unwrap();
        assert!(r.pass, "{}", r.summary_line());
    }

    #[test]
    fn potential_restricts_to_displayed_reduced_form_ii() {
        // II side with the cubic pp-wave solution
        let theta = parse("(4*y - w^2)^(3/2)").unwrap();
        let lifted = separated_lift(&theta, ("y", "w"));
        let g = GindikinCandidate::new(gind_iih5d(&lifted)).unwrap();
        let k = LambdaVectorField::from_pairs(
            g.chart(),
            &[
                ("y", Expr::var("y")),
                ("w", Expr::var("w")),
                ("u", Expr::var("u")),
            ],
        );
        let alpha = potential(&g, &k).unwrap().restrict("u", &Expr::one()).unwrap();
        let expected = alpha_iih(&theta);
        let sample = SampleBox::new(&[("x", -1.0, 1.0), ("y", 0.3, 1.0), ("z", -1.0, 1.0), ("w", -1.0, 1.0)])
            .with_guard(|p| 4.0 * p.get("y").unwrap() - p.get("w").unwrap().powi(2) >= 0.1)
            .sample(20, 31);
        let r = compare_forms("alpha_II", &alpha, &expected, &sample, &Bindings::new(), tol())
            .unwrap();
        assert!(r.pass, "{}", r.summary_line());
    }

    #[test]
    fn restricted_ih5d_form_recovers_4d_form_after_lambda_division() {
        // restricting the 5D I form to u=1 at the separated solution and
        // dividing by λ reproduces the 4D I form
        let theta = i_theta();
        let lifted = separated_lift(&theta, ("s", "w"));
        let restricted = gind_ih5d(&lifted)
            .restrict("u", &Expr::one())
            .unwrap()
            .divide_linear(&BigRational::zero());
        let sample = SampleBox::unit(&["r", "s", "z", "w"]).sample(20, 32);
        match restricted {
            Ok(form) => {
                let r = compare_forms(
                    "restricted_I",
                    &form,
                    &gind_ih(&theta),
                    &sample,
                    &Bindings::new(),
                    tol(),
                )
                .unwrap();
                assert!(r.pass, "{}", r.summary_line());
            }
            Err(e) => panic!("λ division failed: {e}"),
        }
    }

    #[test]
    fn twist_with_unit_multiplier_returns_untwisted_form() {
        // II case: (1/λ)d(α) = β for any key
        let theta = parse("y^2*x + x^2*w + z*y^2").unwrap();
        let alpha = alpha_iih(&theta);
        let beta = twist(&alpha, &Expr::one(), &BigRational::zero()).unwrap();
        let sample = SampleBox::unit(&["x", "y", "z", "w"]).sample(15, 33);
        let r = compare_forms("twist_id", &beta, &gind_iih(&theta), &sample, &Bindings::new(), tol())
            .unwrap();
        assert!(r.pass, "{}", r.summary_line());
    }

    #[test]
    fn twist_with_unit_multiplier_returns_untwisted_form_i() {
        let theta = i_theta();
        let alpha = alpha_ihs(&theta);
        let beta = twist(&alpha, &Expr::one(), &BigRational::zero()).unwrap();
        let sample = SampleBox::unit(&["r", "s", "z", "w"]).sample(15, 34);
        let r = compare_forms("twist_id_I", &beta, &gind_ih(&theta), &sample, &Bindings::new(), tol())
            .unwrap();
        assert!(r.pass, "{}", r.summary_line());
    }

    #[test]
    fn twisted_form_is_closed_and_simple() {
        // concrete twist φ(z) = z² of the flat II structure
        let alpha = alpha_iih(&Expr::zero());
        let phi = Expr::var("z").powi(2);
        let beta = twist(&alpha, &phi, &BigRational::zero()).unwrap();
        let g = GindikinCandidate::new(beta).unwrap();
        let sample = SampleBox::new(&[("x", -1.0, 1.0), ("y", -1.0, 1.0), ("z", 0.5, 1.5), ("w", -1.0, 1.0)])
            .sample(20, 35);
        let b = Bindings::new();
        assert!(check_closed(&g, &sample, &b, tol()).unwrap().pass);
        assert!(check_simple(&g, &sample, &b, tol()).unwrap().pass);
    }

    #[test]
    fn twisted_form_with_opaque_multiplier() {
        // opaque φ stays symbolic; bind φ(z)=e^z only at evaluation time
        let alpha = alpha_iih(&Expr::zero());
        let phi = Expr::func("phi", 0, Expr::var("z"));
        let beta = twist(&alpha, &phi, &BigRational::zero()).unwrap();
        let g = GindikinCandidate::new(beta).unwrap();
        let sample = SampleBox::unit(&["x", "y", "z", "w"]).sample(15, 36);
        let b = Bindings::with("phi", "t", Expr::exp(Expr::var("t")));
        assert!(check_closed(&g, &sample, &b, tol()).unwrap().pass);
        assert!(check_simple(&g, &sample, &b, tol()).unwrap().pass);
    }

    #[test]
    fn general_heavenly_twist_divides_at_lambda5() {
        // λ₀ = λ₅ and ψ = f for the general heavenly family
        let f = parse("exp(x1/4 + x2/3 + x3/2 + x4) + exp(x1/2 + 2*x2/3 + x3 + 2*x4)").unwrap();
        let lambdas = lams(&[0, 1, 2, 3, 4]);
        let alpha = alpha_gh(&f, &lambdas, 4);
        let phi = Expr::func("phi", 0, f.clone());
        let beta = twist(&alpha, &phi, &lambdas[4]).expect("divisible at λ5");
        let g = GindikinCandidate::new(beta).unwrap();
        let sample = SampleBox::unit(&["x1", "x2", "x3", "x4"]).sample(15, 37);
        let b = Bindings::with("phi", "t", Expr::mul(vec![Expr::var("t"), Expr::var("t")]));
        assert!(check_closed(&g, &sample, &b, tol()).unwrap().pass);
    }

    #[test]
    fn alpha_dalpha_consequence_for_full_hirota_solution() {
        // α∧dα ≡ 0 (full Hirota) implies dα∧dα ≡ 0 (heavenly)
        let f = parse("exp(x1/4 + x2/3 + x3/2 + x4) + exp(x1/2 + 2*x2/3 + x3 + 2*x4)").unwrap();
        let lambdas = lams(&[0, 1, 2, 3, 4]);
        let alpha = alpha_gh(&f, &lambdas, 4);
        let da = alpha.d();
        let sample = SampleBox::unit(&["x1", "x2", "x3", "x4"]).sample(20, 38);
        let b = Bindings::new();
        // normalize against α itself rather than against a zero form
        let awda = alpha.wedge(&da).unwrap();
        let mut max = 0.0f64;
        for p in &sample {
            let scale = 1.0 + alpha.max_abs_coeff(p, &b).unwrap();
            for l in crate::sample::lambda_panel(8) {
                max = max.max(awda.eval_at_lambda(&l).max_abs_coeff(p, &b).unwrap() / scale);
            }
        }
        assert!(max <= tol(), "α∧dα residual {max}");
        let dada = da.wedge(&da).unwrap();
        let mut max = 0.0f64;
        for p in &sample {
            let scale = 1.0 + da.max_abs_coeff(p, &b).unwrap();
            for l in crate::sample::lambda_panel(8) {
                max = max.max(dada.eval_at_lambda(&l).max_abs_coeff(p, &b).unwrap() / scale);
            }
        }
        assert!(max <= tol(), "dα∧dα residual {max}");
    }

    #[test]
    fn dalpha_divided_at_lambda5_is_beta() {
        // dα^λ/(λ−λ₅) reproduces the general heavenly β for a full-Hirota
        // solution
        let f = parse("exp(x1/4 + x2/3 + x3/2 + x4) + exp(x1/2 + 2*x2/3 + x3 + 2*x4)").unwrap();
        let lambdas = lams(&[0, 1, 2, 3, 4]);
        let alpha = alpha_gh(&f, &lambdas, 4);
        let beta = beta_gh(&f, &lambdas, 4);
        let sample = SampleBox::unit(&["x1", "x2", "x3", "x4"]).sample(15, 39);
        let b = Bindings::new();
        // division is not structural here (it only holds on solutions), so
        // compare dα with (λ−λ₅)·β at panel values instead
        let lam_minus_l5 = LambdaPoly::from_coeffs(vec![
            Expr::from_rational(-lambdas[4].clone()),
            Expr::one(),
        ]);
        let rhs = beta.scale_poly(&lam_minus_l5);
        let r = compare_forms("dalpha_vs_beta", &alpha.d(), &rhs, &sample, &b, tol()).unwrap();
        assert!(r.pass, "{}", r.summary_line());
    }
}
