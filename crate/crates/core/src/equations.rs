//! Residual evaluators for the heavenly/Hirota PDE systems, algebraic
//! identity checks on second jets, and the Mason–Newman vector-field
//! verification (commutators, divergence).
//!
//! Each system is a list of equations; each equation is a list of terms
//! whose sum is the residual. Keeping the terms separate lets residuals be
//! normalized by the largest individual term, so products of large
//! derivatives cannot mask a failure.

use crate::forms::{Chart, ChartRef, LambdaPolyForm, LambdaVectorField};
use crate::report::{normalized, MaxTracker, ResidualReport};
use crate::sample::lambda_panel;
use crate::symexpr::{Bindings, EvalError, Expr, Point};
use num::rational::BigRational;
use num::traits::Zero;
use once_cell::sync::Lazy;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EqError {
    #[error("unknown system id `{0}`")]
    UnknownSystem(String),
    #[error("system `{0}` needs {1} lambda parameters, got {2}")]
    LambdaCount(String, usize, usize),
    #[error("lambda parameters must be pairwise distinct")]
    LambdaCollision,
    #[error("guard violation: {0}")]
    Guard(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// One scalar PDE: the residual is the sum of `terms`.
#[derive(Clone, Debug)]
pub struct Equation {
    pub label: String,
    pub terms: Vec<Expr>,
}

impl Equation {
    fn new(label: &str, terms: Vec<Expr>) -> Self {
        Equation {
            label: label.to_string(),
            terms,
        }
    }

    /// Normalized residual |Σ terms| / (1 + max |term|) at a point.
    pub fn residual_at(&self, p: &Point, b: &Bindings) -> Result<f64, EvalError> {
        let mut sum = 0.0;
        let mut max_term = 0.0f64;
        for t in &self.terms {
            let v = t.eval(p, b)?;
            sum += v;
            max_term = max_term.max(v.abs());
        }
        Ok(normalized(sum, max_term))
    }
}

/// A PDE system bound to a concrete key function.
#[derive(Clone, Debug)]
pub struct PDESystem {
    pub id: String,
    pub chart: ChartRef,
    pub equations: Vec<Equation>,
}

impl PDESystem {
    /// Max normalized residual per equation over a sample.
    pub fn residual_report(
        &self,
        sample: &[Point],
        bindings: &Bindings,
        tolerance: f64,
    ) -> Result<ResidualReport, EvalError> {
        let labels: Vec<&str> = self.equations.iter().map(|e| e.label.as_str()).collect();
        let mut tracker = MaxTracker::new(&labels);
        for p in sample {
            for (i, eq) in self.equations.iter().enumerate() {
                tracker.record(i, eq.residual_at(p, bindings)?);
            }
        }
        Ok(tracker.into_report(&self.id, sample.len(), tolerance))
    }
}

/// Stable system identifiers used by the CLI and JSON reports.
pub const SYSTEM_IDS: &[&str] = &[
    "heav4", "hirota4", "schief5", "pleb1", "ih5d", "ihadd", "ihirota4", "pleb2", "iih5d",
    "iihirota4", "ppwave", "sep5",
];

/// Default λ parameters (0, 1, 2, ..., n−1); the systems only require the
/// values to be pairwise distinct.
pub fn default_lambdas(n: usize) -> Vec<BigRational> {
    (0..n as i64)
        .map(|k| BigRational::from_integer(k.into()))
        .collect()
}

/// Coordinate chart used by a given system.
pub fn system_chart(id: &str) -> Result<ChartRef, EqError> {
    Ok(match id {
        "heav4" | "hirota4" => Chart::new(&["x1", "x2", "x3", "x4"]),
        "schief5" | "sep5" => Chart::new(&["x1", "x2", "x3", "x4", "x5"]),
        "pleb1" | "ihirota4" => Chart::new(&["r", "s", "z", "w"]),
        "ih5d" | "ihadd" => Chart::new(&["r", "s", "z", "w", "u"]),
        "pleb2" | "iihirota4" | "ppwave" => Chart::new(&["x", "y", "z", "w"]),
        "iih5d" => Chart::new(&["x", "y", "z", "w", "u"]),
        other => return Err(EqError::UnknownSystem(other.to_string())),
    })
}

/// Number of λ parameters a system requires (0 for parameter-free systems).
pub fn lambda_arity(id: &str) -> Result<usize, EqError> {
    Ok(match id {
        "heav4" => 4,
        "hirota4" | "schief5" => 5,
        "pleb1" | "ih5d" | "ihadd" | "ihirota4" | "pleb2" | "iih5d" | "iihirota4" | "ppwave"
        | "sep5" => 0,
        other => return Err(EqError::UnknownSystem(other.to_string())),
    })
}

fn check_lambdas(id: &str, lambdas: &[BigRational]) -> Result<(), EqError> {
    let need = lambda_arity(id)?;
    if lambdas.len() < need {
        return Err(EqError::LambdaCount(id.to_string(), need, lambdas.len()));
    }
    for i in 0..need {
        for j in (i + 1)..need {
            if lambdas[i] == lambdas[j] {
                return Err(EqError::LambdaCollision);
            }
        }
    }
    Ok(())
}

fn lam_diff(lambdas: &[BigRational], i: usize, j: usize) -> Expr {
    Expr::from_rational(&lambdas[i - 1] - &lambdas[j - 1])
}

/// Build a PDE system bound to a concrete key function. `lambdas` may be
/// empty for parameter-free systems; pass five values for the general
/// heavenly family (only the first four are used by `heav4`).
pub fn build_system(id: &str, key: &Expr, lambdas: &[BigRational]) -> Result<PDESystem, EqError> {
    let chart = system_chart(id)?;
    check_lambdas(id, lambdas)?;
    // second-derivative shorthand against the bound key function
    let d1 = |a: &str| key.diff(a);
    let d2 = |a: &str, b: &str| key.diff(a).diff(b);
    let equations = match id {
        "heav4" => vec![heav_equation(key, lambdas)],
        "hirota4" => hirota_equations(key, lambdas),
        "schief5" => {
            // one equation per λ-index subset {i,j,k,l} ⊂ {1..5}, same
            // symmetric shape as the general heavenly equation
            let mut eqs = Vec::new();
            for (label, (i, j, k, l)) in [
                ("eq1234", (1, 2, 3, 4)),
                ("eq1235", (1, 2, 3, 5)),
                ("eq1245", (1, 2, 4, 5)),
                ("eq1345", (1, 3, 4, 5)),
                ("eq2345", (2, 3, 4, 5)),
            ] {
                eqs.push(Equation::new(label, heav_terms(key, lambdas, i, j, k, l)));
            }
            eqs
        }
        "pleb1" => vec![Equation::new(
            "eq1",
            vec![
                Expr::mul(vec![d2("s", "z"), d2("r", "w")]),
                Expr::mul(vec![d2("r", "z"), d2("s", "w")]).neg(),
                Expr::from_int(-1),
            ],
        )],
        "ih5d" => vec![
            Equation::new(
                "eq1",
                vec![
                    Expr::mul(vec![d2("s", "z"), d2("r", "w")]),
                    Expr::mul(vec![d2("r", "z"), d2("s", "w")]).neg(),
                    Expr::from_int(-1),
                ],
            ),
            Equation::new(
                "eq2",
                vec![
                    Expr::mul(vec![d2("r", "w"), d2("z", "w")]),
                    Expr::mul(vec![d2("r", "z"), d2("w", "w")]).neg(),
                    d2("r", "u"),
                ],
            ),
            Equation::new(
                "eq3",
                vec![
                    Expr::mul(vec![d2("s", "w"), d2("z", "w")]),
                    Expr::mul(vec![d2("s", "z"), d2("w", "w")]).neg(),
                    d2("s", "u"),
                ],
            ),
        ],
        "ihadd" => vec![
            Equation::new(
                "eq1",
                vec![
                    Expr::mul(vec![d2("s", "z"), d2("r", "u")]),
                    Expr::mul(vec![d2("r", "z"), d2("s", "u")]).neg(),
                    d2("z", "w"),
                ],
            ),
            Equation::new(
                "eq2",
                vec![
                    Expr::mul(vec![d2("s", "w"), d2("r", "u")]),
                    Expr::mul(vec![d2("s", "u"), d2("r", "w")]).neg(),
                    d2("w", "w"),
                ],
            ),
        ],
        "ihirota4" => vec![
            Equation::new(
                "eq1",
                vec![
                    Expr::mul(vec![d2("s", "z"), d2("r", "w")]),
                    Expr::mul(vec![d2("r", "z"), d2("s", "w")]).neg(),
                    Expr::from_int(-1),
                ],
            ),
            Equation::new(
                "eq2",
                vec![
                    Expr::mul(vec![d2("z", "w"), d2("r", "w")]),
                    Expr::mul(vec![d2("r", "z"), d2("w", "w")]).neg(),
                    Expr::mul(vec![Expr::var("s"), d2("r", "s")]).neg(),
                    Expr::mul(vec![Expr::var("w"), d2("r", "w")]).neg(),
                    d1("r"),
                ],
            ),
            Equation::new(
                "eq3",
                vec![
                    Expr::mul(vec![d2("s", "w"), d2("z", "w")]),
                    Expr::mul(vec![d2("s", "z"), d2("w", "w")]).neg(),
                    Expr::mul(vec![Expr::var("s"), d2("s", "s")]).neg(),
                    Expr::mul(vec![Expr::var("w"), d2("s", "w")]).neg(),
                ],
            ),
        ],
        "pleb2" => vec![pleb2_equation(key, "eq1")],
        "iih5d" => vec![
            pleb2_equation(key, "eq1"),
            Equation::new(
                "eq2",
                vec![
                    Expr::mul(vec![d2("x", "w"), d2("x", "y")]).neg(),
                    Expr::mul(vec![d2("x", "x"), d2("y", "w")]),
                    d2("x", "u"),
                    d2("z", "w"),
                ],
            ),
            Equation::new(
                "eq3",
                vec![
                    Expr::mul(vec![d2("x", "w"), d2("y", "y")]),
                    Expr::mul(vec![d2("x", "y"), d2("y", "w")]).neg(),
                    d2("w", "w"),
                    d2("y", "u").neg(),
                ],
            ),
        ],
        "iihirota4" => vec![
            pleb2_equation(key, "eq1"),
            Equation::new(
                "eq2",
                vec![
                    Expr::mul(vec![d2("x", "w"), d2("x", "y")]).neg(),
                    Expr::mul(vec![d2("x", "x"), d2("y", "w")]),
                    Expr::mul(vec![Expr::var("y"), d2("x", "y")]).neg(),
                    Expr::mul(vec![Expr::var("w"), d2("w", "x")]).neg(),
                    d2("w", "z"),
                    d1("x"),
                ],
            ),
            Equation::new(
                "eq3",
                vec![
                    Expr::mul(vec![d2("x", "w"), d2("y", "y")]),
                    Expr::mul(vec![d2("x", "y"), d2("y", "w")]).neg(),
                    Expr::mul(vec![Expr::var("y"), d2("y", "y")]),
                    Expr::mul(vec![Expr::var("w"), d2("w", "y")]),
                    d2("w", "w"),
                ],
            ),
        ],
        "ppwave" => vec![Equation::new(
            "eq1",
            vec![
                Expr::mul(vec![Expr::var("y"), d2("y", "y")]),
                Expr::mul(vec![Expr::var("w"), d2("w", "y")]),
                d2("w", "w"),
            ],
        )],
        "sep5" => {
            // symmetry residual f_ij = f_ij5 for 1 <= i < j <= 5
            let xs = ["x1", "x2", "x3", "x4", "x5"];
            let mut eqs = Vec::new();
            for i in 0..5 {
                for j in (i + 1)..5 {
                    eqs.push(Equation::new(
                        &format!("f{}{}", i + 1, j + 1),
                        vec![d2(xs[i], xs[j]), d2(xs[i], xs[j]).diff("x5").neg()],
                    ));
                }
            }
            eqs
        }
        other => return Err(EqError::UnknownSystem(other.to_string())),
    };
    Ok(PDESystem {
        id: id.to_string(),
        chart,
        equations,
    })
}

fn pleb2_equation(key: &Expr, label: &str) -> Equation {
    let d2 = |a: &str, b: &str| key.diff(a).diff(b);
    Equation::new(
        label,
        vec![
            Expr::mul(vec![d2("x", "x"), d2("y", "y")]),
            d2("x", "y").powi(2).neg(),
            d2("x", "w"),
            d2("y", "z"),
        ],
    )
}

/// Terms of the general-heavenly-shaped equation on λ-indices (i,j,k,l):
/// (λi−λj)(λk−λl) f_ij f_kl − (λi−λk)(λj−λl) f_ik f_jl
/// + (λi−λl)(λj−λk) f_il f_jk.
fn heav_terms(
    key: &Expr,
    lambdas: &[BigRational],
    i: usize,
    j: usize,
    k: usize,
    l: usize,
) -> Vec<Expr> {
    let x = |n: usize| format!("x{n}");
    let d2 = |a: usize, b: usize| key.diff(&x(a)).diff(&x(b));
    vec![
        Expr::mul(vec![lam_diff(lambdas, i, j), lam_diff(lambdas, k, l), d2(i, j), d2(k, l)]),
        Expr::mul(vec![lam_diff(lambdas, i, k), lam_diff(lambdas, j, l), d2(i, k), d2(j, l)])
            .neg(),
        Expr::mul(vec![lam_diff(lambdas, i, l), lam_diff(lambdas, j, k), d2(i, l), d2(j, k)]),
    ]
}

fn heav_equation(key: &Expr, lambdas: &[BigRational]) -> Equation {
    Equation::new("heav", heav_terms(key, lambdas, 1, 2, 3, 4))
}

/// The four dispersionless Hirota equations in 4D; λ₅ enters all of them.
fn hirota_equations(key: &Expr, lambdas: &[BigRational]) -> Vec<Equation> {
    // each equation uses a triple (i, j, k) of the coordinate indices
    let triples = [(1usize, 2usize, 3usize), (1, 2, 4), (1, 3, 4), (2, 3, 4)];
    let x = |n: usize| format!("x{n}");
    let d1 = |a: usize| key.diff(&x(a));
    let d2 = |a: usize, b: usize| key.diff(&x(a)).diff(&x(b));
    triples
        .iter()
        .enumerate()
        .map(|(n, &(i, j, k))| {
            // f_i f_jk (λi−λ5)(λj−λk) + f_j f_ki (λj−λ5)(λk−λi)
            // + f_k f_ij (λk−λ5)(λi−λj)
            Equation::new(
                &format!("eq{}", n + 1),
                vec![
                    Expr::mul(vec![d1(i), d2(j, k), lam_diff(lambdas, i, 5), lam_diff(lambdas, j, k)]),
                    Expr::mul(vec![d1(j), d2(k, i), lam_diff(lambdas, j, 5), lam_diff(lambdas, k, i)]),
                    Expr::mul(vec![d1(k), d2(i, j), lam_diff(lambdas, k, 5), lam_diff(lambdas, i, j)]),
                ],
            )
        })
        .collect()
}

// ---- algebraic identities on second jets ---------------------------------

/// Formal second-jet variables of the 4D Hirota system: first derivatives
/// `f1..f4`, mixed second derivatives `f12..f34`, and parameters `l1..l5`.
pub const JET_VARS: &[&str] = &[
    "f1", "f2", "f3", "f4", "f12", "f13", "f14", "f23", "f24", "f34", "l1", "l2", "l3", "l4",
    "l5",
];

fn jv(name: &str) -> Expr {
    Expr::var(name)
}

fn jet_lam_diff(i: usize, j: usize) -> Expr {
    Expr::sub(jv(&format!("l{i}")), jv(&format!("l{j}")))
}

fn jet_d2(i: usize, j: usize) -> Expr {
    let (a, b) = if i < j { (i, j) } else { (j, i) };
    jv(&format!("f{a}{b}"))
}

/// The four Hirota equations as expressions in the formal jet variables.
pub fn hirota_jet_equations() -> [Expr; 4] {
    let triples = [(1usize, 2usize, 3usize), (1, 2, 4), (1, 3, 4), (2, 3, 4)];
    triples.map(|(i, j, k)| {
        Expr::add(vec![
            Expr::mul(vec![jv(&format!("f{i}")), jet_d2(j, k), jet_lam_diff(i, 5), jet_lam_diff(j, k)]),
            Expr::mul(vec![jv(&format!("f{j}")), jet_d2(k, i), jet_lam_diff(j, 5), jet_lam_diff(k, i)]),
            Expr::mul(vec![jv(&format!("f{k}")), jet_d2(i, j), jet_lam_diff(k, 5), jet_lam_diff(i, j)]),
        ])
    })
}

/// The general heavenly LHS in the formal jet variables.
pub fn heav_jet_expr() -> Expr {
    Expr::add(vec![
        Expr::mul(vec![jet_lam_diff(1, 2), jet_lam_diff(3, 4), jet_d2(1, 2), jet_d2(3, 4)]),
        Expr::mul(vec![jet_lam_diff(1, 3), jet_lam_diff(2, 4), jet_d2(1, 3), jet_d2(2, 4)]).neg(),
        Expr::mul(vec![jet_lam_diff(1, 4), jet_lam_diff(2, 3), jet_d2(1, 4), jet_d2(2, 3)]),
    ])
}

pub type JetEnv = BTreeMap<String, BigRational>;

fn jet_eval(e: &Expr, env: &JetEnv) -> Result<BigRational, EqError> {
    e.eval_exact(env)
        .ok_or_else(|| EqError::Guard("jet environment does not bind all variables".into()))
}

/// Algebraic-dependence identity of the Hirota system:
/// eq[4] − (f₄(λ₄−λ₅)eq[1] − f₃(λ₃−λ₅)eq[2] + f₂(λ₂−λ₅)eq[3]) / (f₁(λ₁−λ₅)),
/// which vanishes on every jet, solution or not.
pub fn hirota_dependence_residual(env: &JetEnv) -> Result<BigRational, EqError> {
    let f1 = jet_eval(&jv("f1"), env)?;
    let l15 = jet_eval(&jet_lam_diff(1, 5), env)?;
    if f1.is_zero() {
        return Err(EqError::Guard("f1 = 0 in dependence identity".into()));
    }
    if l15.is_zero() {
        return Err(EqError::Guard("l1 = l5 in dependence identity".into()));
    }
    let eqs = hirota_jet_equations();
    let e: Vec<BigRational> = eqs
        .iter()
        .map(|e| jet_eval(e, env))
        .collect::<Result<_, _>>()?;
    let f2 = jet_eval(&jv("f2"), env)?;
    let f3 = jet_eval(&jv("f3"), env)?;
    let f4 = jet_eval(&jv("f4"), env)?;
    let l25 = jet_eval(&jet_lam_diff(2, 5), env)?;
    let l35 = jet_eval(&jet_lam_diff(3, 5), env)?;
    let l45 = jet_eval(&jet_lam_diff(4, 5), env)?;
    let combo = (f4 * l45 * &e[0] - f3 * l35 * &e[1] + f2 * l25 * &e[2]) / (f1 * l15);
    Ok(&e[3] - combo)
}

/// Skew matrix M with A = M·D, where A is the coefficient matrix of the
/// Hirota system read as linear equations in (f₄, f₃, f₂, f₁) and
/// D = diag(−(λ₅−λ₄), λ₅−λ₃, −(λ₅−λ₂), λ₅−λ₁).
fn pfaffian_matrix(env: &JetEnv) -> Result<[[BigRational; 4]; 4], EqError> {
    let vars = ["f4", "f3", "f2", "f1"];
    let eqs = hirota_jet_equations();
    let d_entries = [
        jet_eval(&jet_lam_diff(4, 5), env)?, // −(λ5−λ4)
        jet_eval(&jet_lam_diff(5, 3), env)?,
        jet_eval(&jet_lam_diff(2, 5), env)?, // −(λ5−λ2)
        jet_eval(&jet_lam_diff(5, 1), env)?,
    ];
    for d in &d_entries {
        if d.is_zero() {
            return Err(EqError::Guard("lambda collision in Pfaffian check".into()));
        }
    }
    let mut m: [[BigRational; 4]; 4] = Default::default();
    for (row, eq) in eqs.iter().enumerate() {
        for (col, v) in vars.iter().enumerate() {
            // coefficient of the linear variable v in the equation
            let coeff = eq.diff(v);
            m[row][col] = jet_eval(&coeff, env)? / &d_entries[col];
        }
    }
    Ok(m)
}

fn pfaffian4(m: &[[BigRational; 4]; 4]) -> BigRational {
    &m[0][1] * &m[2][3] - &m[0][2] * &m[1][3] + &m[0][3] * &m[1][2]
}

/// Constant κ with Pf(M) = κ · heavLHS, determined once from one fixed
/// rational jet and then frozen for all subsequent checks.
static PFAFFIAN_KAPPA: Lazy<BigRational> = Lazy::new(|| {
    let env = calibration_jet();
    let m = pfaffian_matrix(&env).expect("calibration jet is guarded");
    let heav = heav_jet_expr()
        .eval_exact(&env)
        .expect("calibration jet binds all variables");
    assert!(!heav.is_zero(), "calibration jet must not solve heav");
    pfaffian4(&m) / heav
});

fn calibration_jet() -> JetEnv {
    let mut env = JetEnv::new();
    // arbitrary fixed rational jet avoiding all guard loci
    let vals: &[(&str, i64, i64)] = &[
        ("f1", 2, 1),
        ("f2", 3, 1),
        ("f3", 5, 2),
        ("f4", -1, 1),
        ("f12", 1, 1),
        ("f13", 2, 3),
        ("f14", -3, 2),
        ("f23", 1, 5),
        ("f24", 4, 1),
        ("f34", -2, 7),
        ("l1", 0, 1),
        ("l2", 1, 1),
        ("l3", 2, 1),
        ("l4", 3, 1),
        ("l5", 4, 1),
    ];
    for (k, n, d) in vals {
        env.insert(k.to_string(), BigRational::new((*n).into(), (*d).into()));
    }
    env
}

/// The frozen Pfaffian calibration constant (exposed for reports).
pub fn pfaffian_kappa() -> BigRational {
    PFAFFIAN_KAPPA.clone()
}

/// Pf(M) − κ·heavLHS on an arbitrary jet; also returns the skewness defect
/// max|M + Mᵀ| which must vanish identically.
pub fn pfaffian_residual(env: &JetEnv) -> Result<(BigRational, BigRational), EqError> {
    let m = pfaffian_matrix(env)?;
    let mut skew_defect = BigRational::zero();
    for i in 0..4 {
        for j in 0..4 {
            let s = &m[i][j] + &m[j][i];
            let abs = if s < BigRational::zero() { -s } else { s };
            if abs > skew_defect {
                skew_defect = abs;
            }
        }
    }
    let heav = jet_eval(&heav_jet_expr(), env)?;
    let residual = pfaffian4(&m) - &*PFAFFIAN_KAPPA * heav;
    Ok((residual, skew_defect))
}

/// Draw a random rational jet with numerators in [−5·d, 5·d] and
/// denominators ≤ 7, retrying until guards (f₁≠0, λ's distinct) hold.
pub fn random_rational_jet(rng: &mut impl rand::Rng) -> JetEnv {
    loop {
        let mut env = JetEnv::new();
        for v in JET_VARS {
            let d = rng.gen_range(1..=7i64);
            let n = rng.gen_range(-5 * d..=5 * d);
            env.insert(v.to_string(), BigRational::new(n.into(), d.into()));
        }
        let distinct = {
            let ls: Vec<_> = (1..=5).map(|i| env[&format!("l{i}")].clone()).collect();
            (0..5).all(|i| ((i + 1)..5).all(|j| ls[i] != ls[j]))
        };
        if distinct && !env["f1"].is_zero() {
            return env;
        }
    }
}

// ---- Mason–Newman fields -------------------------------------------------

/// Which Mason–Newman frame to construct.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MasonNewmanFramework {
    /// 4D I-Plebański frame on (r,s,z,w): two λ-linear fields.
    I4D,
    /// 5D I-heavenly frame on (r,s,z,w,u): three λ-linear fields.
    I5D,
}

/// The Mason–Newman vector fields and the standard coordinate volume form.
pub fn mason_newman_fields(
    framework: MasonNewmanFramework,
    key: &Expr,
) -> (Vec<LambdaVectorField>, LambdaPolyForm) {
    use crate::forms::LambdaPoly;
    let lam = LambdaPoly::from_coeffs(vec![Expr::zero(), Expr::one()]);
    let one = LambdaPoly::constant(Expr::one());
    let c = |e: Expr| LambdaPoly::constant(e);
    let d2 = |a: &str, b: &str| key.diff(a).diff(b);
    match framework {
        MasonNewmanFramework::I4D => {
            let chart = Chart::new(&["r", "s", "z", "w"]);
            let x1 = LambdaVectorField::from_poly_pairs(
                &chart,
                &[
                    ("w", lam.clone()),
                    ("r", c(d2("s", "w"))),
                    ("s", c(d2("r", "w").neg())),
                ],
            );
            let x2 = LambdaVectorField::from_poly_pairs(
                &chart,
                &[
                    ("z", lam),
                    ("r", c(d2("s", "z"))),
                    ("s", c(d2("r", "z").neg())),
                ],
            );
            (vec![x1, x2], LambdaPolyForm::volume(&chart))
        }
        MasonNewmanFramework::I5D => {
            let chart = Chart::new(&["r", "s", "z", "w", "u"]);
            let x1 = LambdaVectorField::from_poly_pairs(
                &chart,
                &[
                    ("r", c(d2("s", "u"))),
                    ("s", c(d2("r", "u").neg())),
                    ("w", one.scale(&Expr::from_int(-1))),
                    ("u", lam.clone()),
                ],
            );
            let x2 = LambdaVectorField::from_poly_pairs(
                &chart,
                &[
                    ("r", c(d2("s", "w"))),
                    ("s", c(d2("r", "w").neg())),
                    ("w", lam.clone()),
                ],
            );
            let x3 = LambdaVectorField::from_poly_pairs(
                &chart,
                &[
                    ("r", c(d2("s", "z"))),
                    ("s", c(d2("r", "z").neg())),
                    ("z", lam),
                ],
            );
            (vec![x1, x2, x3], LambdaPolyForm::volume(&chart))
        }
    }
}

/// Max normalized residual of all pairwise λ-polynomial commutators over
/// the λ panel × sample points.
pub fn commutator_check(
    fields: &[LambdaVectorField],
    sample: &[Point],
    bindings: &Bindings,
    tolerance: f64,
) -> Result<ResidualReport, EqError> {
    let mut labels = Vec::new();
    let mut commutators = Vec::new();
    for i in 0..fields.len() {
        for j in (i + 1)..fields.len() {
            labels.push(format!("[X{},X{}]", i + 1, j + 1));
            commutators.push(fields[i].commutator(&fields[j]).map_err(eq_from_form)?);
        }
    }
    let label_refs: Vec<&str> = labels.iter().map(String::as_str).collect();
    let mut tracker = MaxTracker::new(&label_refs);
    let max_deg = commutators
        .iter()
        .filter_map(LambdaVectorField::lambda_degree)
        .max()
        .unwrap_or(0);
    let panel = lambda_panel(max_deg + 1);
    for p in sample {
        for (n, comm) in commutators.iter().enumerate() {
            for lambda in &panel {
                for comp in comm.components() {
                    let v = comp.eval_lambda(lambda).eval(p, bindings)?;
                    tracker.record(n, normalized(v, 0.0));
                }
            }
        }
    }
    Ok(tracker.into_report("commutators", sample.len(), tolerance))
}

/// Max residual of d(X⌟ω) for each field: the divergence-free condition.
pub fn divergence_check(
    fields: &[LambdaVectorField],
    volume: &LambdaPolyForm,
    sample: &[Point],
    bindings: &Bindings,
    tolerance: f64,
) -> Result<ResidualReport, EqError> {
    let labels: Vec<String> = (1..=fields.len()).map(|i| format!("div X{i}")).collect();
    let label_refs: Vec<&str> = labels.iter().map(String::as_str).collect();
    let mut tracker = MaxTracker::new(&label_refs);
    for (n, field) in fields.iter().enumerate() {
        let div_form = volume.interior(field).map_err(eq_from_form)?.d();
        let max_deg = div_form.lambda_degree().unwrap_or(0);
        let panel = lambda_panel(max_deg + 1);
        for p in sample {
            for lambda in &panel {
                let at = div_form.eval_at_lambda(lambda);
                tracker.record(n, at.max_abs_coeff(p, bindings)?);
            }
        }
    }
    Ok(tracker.into_report("divergence", sample.len(), tolerance))
}

fn eq_from_form(e: crate::forms::FormError) -> EqError {
    EqError::Guard(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::SampleBox;
    use crate::symexpr::parse;
    use num::traits::One;
    use rand::SeedableRng;

    fn tol() -> f64 {
        1e-8
    }

    fn rational_env(lambdas: &[i64]) -> Vec<BigRational> {
        lambdas
            .iter()
            .map(|&k| BigRational::from_integer(k.into()))
            .collect()
    }

    #[test]
    fn pleb2_flat_solution_passes() {
        let sys = build_system("pleb2", &Expr::zero(), &[]).unwrap();
        let sample = SampleBox::unit(&["x", "y", "z", "w"]).sample(20, 1);
        let r = sys.residual_report(&sample, &Bindings::new(), tol()).unwrap();
        assert!(r.pass, "{}", r.summary_line());
    }

    #[test]
    fn ppwave_cubic_solves_reduced_hirota() {
        let f = parse("(4*y - w^2)^(3/2)").unwrap();
        let sys = build_system("ppwave", &f, &[]).unwrap();
        let sample = SampleBox::new(&[("x", -1.0, 1.0), ("y", 0.3, 1.0), ("z", -1.0, 1.0), ("w", -1.0, 1.0)])
            .with_guard(|p| 4.0 * p.get("y").unwrap() - p.get("w").unwrap().powi(2) >= 0.1)
            .sample(100, 3);
        let r = sys.residual_report(&sample, &Bindings::new(), tol()).unwrap();
        assert!(r.pass, "{}", r.summary_line());
    }

    #[test]
    fn ppwave_noncubic_fails_reduced_hirota() {
        // F = y^3 solves the II Plebanski equation but not the reduction
        let f = parse("y^3").unwrap();
        let sys = build_system("ppwave", &f, &[]).unwrap();
        let sample = SampleBox::unit(&["x", "y", "z", "w"]).sample(20, 4);
        let r = sys.residual_report(&sample, &Bindings::new(), tol()).unwrap();
        assert!(!r.pass);
        // ... while pleb2 itself passes for F = y^3
        let sys = build_system("pleb2", &f, &[]).unwrap();
        let r = sys.residual_report(&sample, &Bindings::new(), tol()).unwrap();
        assert!(r.pass, "{}", r.summary_line());
    }

    #[test]
    fn heav_nonsolution_has_unit_residual() {
        // f = x1 x2 + x3 x4, λ = (0,1,2,3): residual (0−1)(2−3)·1·1 = 1
        // at every point, normalized by 1 + max term = 2
        let f = parse("x1*x2 + x3*x4").unwrap();
        let sys = build_system("heav4", &f, &rational_env(&[0, 1, 2, 3])).unwrap();
        let p = Point::from_pairs(&[("x1", 0.3), ("x2", -0.4), ("x3", 0.9), ("x4", 0.1)]);
        let r = sys.equations[0].residual_at(&p, &Bindings::new()).unwrap();
        assert!((r - 0.5).abs() < 1e-12, "residual {r}");
    }

    #[test]
    fn two_exponential_solution_passes_heav4() {
        // cross terms of e^{x1+x2+x3+x4} + e^{x1+2x2+3x3+4x4} cancel in the
        // general heavenly equation at λ=(0,1,2,3): 14 − 44 + 30 = 0
        let f = parse("exp(x1+x2+x3+x4) + exp(x1+2*x2+3*x3+4*x4)").unwrap();
        let sys = build_system("heav4", &f, &rational_env(&[0, 1, 2, 3])).unwrap();
        let sample = SampleBox::unit(&["x1", "x2", "x3", "x4"]).sample(30, 5);
        let r = sys.residual_report(&sample, &Bindings::new(), tol()).unwrap();
        assert!(r.pass, "{}", r.summary_line());
    }

    #[test]
    fn reciprocal_exponentials_pass_full_hirota() {
        // exponents aᵢ = α/(λᵢ−λ₅) make every cross term telescope, so
        // both the first-order equations and heav hold; λ=(0,1,2,3,4)
        let f = parse("exp(x1/4 + x2/3 + x3/2 + x4) + exp(x1/2 + 2*x2/3 + x3 + 2*x4)")
            .unwrap();
        let lambdas = rational_env(&[0, 1, 2, 3, 4]);
        let sample = SampleBox::unit(&["x1", "x2", "x3", "x4"]).sample(30, 5);
        for id in ["heav4", "hirota4"] {
            let sys = build_system(id, &f, &lambdas).unwrap();
            let r = sys.residual_report(&sample, &Bindings::new(), tol()).unwrap();
            assert!(r.pass, "{}: {}", id, r.summary_line());
        }
    }

    #[test]
    fn product_of_univariate_factors_solves_schief() {
        // f = Π φi(xi) makes every f_ij = φi'φj'·(rest), and each equation
        // cancels identically by the Plücker-like identity of the λ factors
        let f = parse("exp(x1)*(1+x2)*(2+x3)*(1+x4^2)*exp(2*x5)").unwrap();
        let sys = build_system("schief5", &f, &rational_env(&[0, 1, 2, 3, 4])).unwrap();
        let sample = SampleBox::unit(&["x1", "x2", "x3", "x4", "x5"]).sample(20, 6);
        let r = sys.residual_report(&sample, &Bindings::new(), tol()).unwrap();
        assert!(r.pass, "{}", r.summary_line());
    }

    #[test]
    fn iheav_exponential_example_solves_ihirota4() {
        // θ = (r+z+w)s − (e^{−(r+z+w)} − (w−1)(r+z) + w³/6 − w²/2), the
        // c1=c2=c3=1 member of the I-heavenly family
        let theta =
            parse("((r+z)+w)*s - (exp(-((r+z)+w)) - (w-1)*(r+z) + w^3/6 - w^2/2)").unwrap();
        let sys = build_system("ihirota4", &theta, &[]).unwrap();
        let sample = SampleBox::unit(&["r", "s", "z", "w"]).sample(100, 7);
        let r = sys.residual_report(&sample, &Bindings::new(), tol()).unwrap();
        assert!(r.pass, "{}", r.summary_line());
    }

    #[test]
    fn separated_lift_solves_ih5d_and_consequences() {
        // Θ = u θ(r, s/u, z, w/u) built from the exponential I solution
        let theta =
            parse("((r+z)+w)*s - (exp(-((r+z)+w)) - (w-1)*(r+z) + w^3/6 - w^2/2)").unwrap();
        let lifted = Expr::mul(vec![
            Expr::var("u"),
            theta
                .subst("s", &Expr::div(Expr::var("s"), Expr::var("u")))
                .subst("w", &Expr::div(Expr::var("w"), Expr::var("u"))),
        ]);
        let sample = SampleBox::new(&[
            ("r", -1.0, 1.0),
            ("s", -1.0, 1.0),
            ("z", -1.0, 1.0),
            ("w", -1.0, 1.0),
            ("u", 0.5, 1.5),
        ])
        .sample(50, 8);
        for id in ["ih5d", "ihadd"] {
            let sys = build_system(id, &lifted, &[]).unwrap();
            let r = sys.residual_report(&sample, &Bindings::new(), tol()).unwrap();
            assert!(r.pass, "{}: {}", id, r.summary_line());
        }
    }

    #[test]
    fn pp_wave_lift_solves_iih5d() {
        // Θ = u θ(x, y/u, z, w/u) from the cubic pp-wave
        let theta = parse("(4*y - w^2)^(3/2)").unwrap();
        let lifted = Expr::mul(vec![
            Expr::var("u"),
            theta
                .subst("y", &Expr::div(Expr::var("y"), Expr::var("u")))
                .subst("w", &Expr::div(Expr::var("w"), Expr::var("u"))),
        ]);
        let sample = SampleBox::new(&[
            ("x", -1.0, 1.0),
            ("y", 0.4, 1.0),
            ("z", -1.0, 1.0),
            ("w", -0.8, 0.8),
            ("u", 0.8, 1.2),
        ])
        .with_guard(|p| {
            let y = p.get("y").unwrap();
            let w = p.get("w").unwrap();
            let u = p.get("u").unwrap();
            4.0 * y / u - (w / u).powi(2) >= 0.1
        })
        .sample(50, 9);
        let sys = build_system("iih5d", &lifted, &[]).unwrap();
        let r = sys.residual_report(&sample, &Bindings::new(), tol()).unwrap();
        assert!(r.pass, "{}", r.summary_line());
    }

    #[test]
    fn separated_exponential_satisfies_symmetry_residual() {
        let f = parse("(x1*x2 + x3*x4 + x1*x3)*exp(x5)").unwrap();
        let sys = build_system("sep5", &f, &[]).unwrap();
        let sample = SampleBox::unit(&["x1", "x2", "x3", "x4", "x5"]).sample(20, 10);
        let r = sys.residual_report(&sample, &Bindings::new(), tol()).unwrap();
        assert!(r.pass, "{}", r.summary_line());
    }

    #[test]
    fn lambda_collision_rejected() {
        let f = Expr::zero();
        let r = build_system("heav4", &f, &rational_env(&[0, 0, 2, 3]));
        assert!(matches!(r, Err(EqError::LambdaCollision)));
    }

    #[test]
    fn dependence_identity_vanishes_exactly_on_random_jets() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let env = random_rational_jet(&mut rng);
            let r = hirota_dependence_residual(&env).unwrap();
            assert!(r.is_zero(), "nonzero dependence residual {r}");
        }
    }

    #[test]
    fn dependence_identity_guards_f1_zero() {
        let mut env = calibration_jet();
        env.insert("f1".into(), BigRational::zero());
        assert!(matches!(
            hirota_dependence_residual(&env),
            Err(EqError::Guard(_))
        ));
    }

    #[test]
    fn pfaffian_matches_heavenly_lhs_on_random_jets() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        for _ in 0..50 {
            let env = random_rational_jet(&mut rng);
            let (residual, skew) = pfaffian_residual(&env).unwrap();
            assert!(residual.is_zero(), "Pfaffian residual {residual}");
            assert!(skew.is_zero(), "skewness defect {skew}");
        }
    }

    #[test]
    fn pfaffian_kappa_is_unit() {
        // with this D ordering the Pfaffian equals the heavenly LHS exactly
        assert_eq!(pfaffian_kappa(), BigRational::one());
    }

    #[test]
    fn ihadd_follows_from_ih5d_on_solved_jets() {
        use rand::Rng;
        // pick free jet entries, solve IH5D exactly for the rest, and
        // check that both consequence equations vanish
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
        for _ in 0..50 {
            let q = |rng: &mut rand_chacha::ChaCha8Rng| {
                let d = rng.gen_range(1..=7i64);
                let n = rng.gen_range(-5 * d..=5 * d);
                BigRational::new(n.into(), d.into())
            };
            let t_rz = q(&mut rng);
            let mut t_sz = q(&mut rng);
            if t_sz.is_zero() {
                t_sz = BigRational::one();
            }
            let t_sw = q(&mut rng);
            let t_zw = q(&mut rng);
            let t_ww = q(&mut rng);
            let t_rw = (BigRational::one() + &t_rz * &t_sw) / &t_sz;
            let t_ru = &t_rz * &t_ww - &t_rw * &t_zw;
            let t_su = &t_sz * &t_ww - &t_sw * &t_zw;
            let add1 = &t_sz * &t_ru - &t_rz * &t_su + &t_zw;
            let add2 = &t_sw * &t_ru - &t_su * &t_rw + &t_ww;
            assert!(add1.is_zero(), "IHadd1 = {add1}");
            assert!(add2.is_zero(), "IHadd2 = {add2}");
        }
    }

    #[test]
    fn mason_newman_i4d_fields_are_divergence_free_and_commute() {
        let theta =
            parse("((r+z)+w)*s - (exp(-((r+z)+w)) - (w-1)*(r+z) + w^3/6 - w^2/2)").unwrap();
        let (fields, volume) = mason_newman_fields(MasonNewmanFramework::I4D, &theta);
        let sample = SampleBox::unit(&["r", "s", "z", "w"]).sample(25, 14);
        let div = divergence_check(&fields, &volume, &sample, &Bindings::new(), tol()).unwrap();
        assert!(div.pass, "{}", div.summary_line());
        let comm = commutator_check(&fields, &sample, &Bindings::new(), tol()).unwrap();
        assert!(comm.pass, "{}", comm.summary_line());
    }

    #[test]
    fn mason_newman_i4d_commutator_detects_nonsolution() {
        // the commutator components are derivatives of θ_sz θ_rw − θ_rz θ_sw,
        // so the key must make that combination nonconstant
        let theta = parse("r^2*s*z + s^2*w").unwrap();
        let (fields, _) = mason_newman_fields(MasonNewmanFramework::I4D, &theta);
        let sample = SampleBox::new(&[("r", 0.5, 1.0), ("s", 0.5, 1.0), ("z", 0.5, 1.0), ("w", 0.5, 1.0)])
            .sample(10, 15);
        let comm = commutator_check(&fields, &sample, &Bindings::new(), tol()).unwrap();
        assert!(!comm.pass, "commutators unexpectedly vanished");
    }

    #[test]
    fn mason_newman_i5d_fields_verify_for_separated_solution() {
        let theta =
            parse("((r+z)+w)*s - (exp(-((r+z)+w)) - (w-1)*(r+z) + w^3/6 - w^2/2)").unwrap();
        let lifted = Expr::mul(vec![
            Expr::var("u"),
            theta
                .subst("s", &Expr::div(Expr::var("s"), Expr::var("u")))
                .subst("w", &Expr::div(Expr::var("w"), Expr::var("u"))),
        ]);
        let (fields, volume) = mason_newman_fields(MasonNewmanFramework::I5D, &lifted);
        let sample = SampleBox::new(&[
            ("r", -1.0, 1.0),
            ("s", -1.0, 1.0),
            ("z", -1.0, 1.0),
            ("w", -1.0, 1.0),
            ("u", 0.5, 1.5),
        ])
        .sample(25, 16);
        let div = divergence_check(&fields, &volume, &sample, &Bindings::new(), tol()).unwrap();
        assert!(div.pass, "{}", div.summary_line());
        let comm = commutator_check(&fields, &sample, &Bindings::new(), tol()).unwrap();
        assert!(comm.pass, "{}", comm.summary_line());
    }

    #[test]
    fn crafted_field_with_divergence_is_flagged() {
        let chart = Chart::new(&["x", "y", "z", "w"]);
        let field = LambdaVectorField::from_pairs(&chart, &[("x", Expr::var("x"))]);
        let volume = LambdaPolyForm::volume(&chart);
        let sample = SampleBox::unit(&["x", "y", "z", "w"]).sample(5, 17);
        let r = divergence_check(&[field], &volume, &sample, &Bindings::new(), tol()).unwrap();
        assert!(!r.pass);
        assert!((r.max_residual() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn separation_principle_schief_vs_full_hirota() {
        // for arbitrary h (not a solution), the schief residuals at
        // f = h e^{x5} factor through the full-Hirota residuals of h:
        // eq1234 = q² heav(h), the other four are q q' · hiro(h)
        let h = parse("x1^2*x2 + exp(x3)*x4 + x1*x3*x4").unwrap();
        let f = Expr::mul(vec![h.clone(), Expr::exp(Expr::var("x5"))]);
        let lambdas = rational_env(&[0, 1, 2, 3, 4]);
        let schief = build_system("schief5", &f, &lambdas).unwrap();
        let heav = build_system("heav4", &h, &lambdas).unwrap();
        let hiro = build_system("hirota4", &h, &lambdas).unwrap();
        let sample = SampleBox::unit(&["x1", "x2", "x3", "x4", "x5"]).sample(25, 18);
        let b = Bindings::new();
        for p in &sample {
            let q = p.get("x5").unwrap().exp(); // q = q' = e^{x5}
            let raw = |eq: &Equation| -> f64 {
                eq.terms.iter().map(|t| t.eval(p, &b).unwrap()).sum()
            };
            let lhs1 = raw(&schief.equations[0]);
            let rhs1 = q * q * raw(&heav.equations[0]);
            assert!((lhs1 - rhs1).abs() <= 1e-8 * (1.0 + rhs1.abs()));
            for k in 0..4 {
                let lhs = raw(&schief.equations[k + 1]);
                let rhs = q * q * raw(&hiro.equations[k]);
                assert!(
                    (lhs - rhs).abs() <= 1e-8 * (1.0 + rhs.abs()),
                    "eq{}: {lhs} vs {rhs}",
                    k + 2
                );
            }
        }
    }
}
