//! Registry of the concrete solutions, Gindikin structures, symmetry
//! reductions, twists, and coordinate maps that form the acceptance corpus.
//!
//! Each entry bundles a key function with the PDE systems it must solve, a
//! guarded sample box for numeric checks, and (where applicable) the twist
//! multipliers and closed-form Petrov invariants of the resulting SDVE
//! metrics.  Everything downstream — the CLI and the acceptance suite —
//! drives the library through this registry, so the expectations recorded
//! here are the single source of truth for "what should pass".

use num::{BigInt, BigRational, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::curvature::CurvatureError;
use crate::equations::{build_system, system_chart, EqError};
use crate::forms::{ChartRef, LambdaVectorField};
use crate::gindikin::{
    beta_gh, gind_ih, gind_ih5d, gind_iih, gind_iih5d, GindikinCandidate, GindikinError,
};
use crate::metrics::{
    general_heavenly_metric, plebanski_i_metric, plebanski_ii_metric, twisted_cubic_ppwave_inverse,
    twisted_cubic_ppwave_inverse_xyzw, twisted_inverse_i, twisted_inverse_ii, MetricError,
    MetricExpr,
};
use crate::report::ResidualReport;
use crate::sample::SampleBox;
use crate::symexpr::{parse, Bindings, EvalError, Expr, Point};

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("unknown catalog id `{0}`")]
    UnknownId(String),
    #[error("point outside the entry's domain: {0}")]
    Domain(String),
    #[error(transparent)]
    Eq(#[from] EqError),
    #[error(transparent)]
    Gindikin(#[from] GindikinError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Curvature(#[from] CurvatureError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Framework {
    General,
    I,
    II,
}

/// A concrete key function together with its verification expectations.
pub struct CatalogEntry {
    pub id: &'static str,
    pub framework: Framework,
    /// The key function (f, θ, or Θ depending on framework and dimension).
    pub key: Expr,
    /// λ parameters for the general-heavenly family; empty otherwise.
    pub lambdas: Vec<BigRational>,
    /// PDE system ids this key must satisfy (see `equations::build_system`).
    pub systems: Vec<&'static str>,
    /// Guarded box the numeric checks sample from.
    pub sample: SampleBox,
    /// Twist multipliers φ(z) whose twisted metrics are SDVE-certified.
    pub twists: Vec<Expr>,
}

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(n.into())
}

fn cubic_key() -> Expr {
    crate::curvature::cubic_ppwave_key()
}

fn iheav_exp_key() -> Expr {
    // c₁ = c₂ = c₃ = 1 member of the exponential I-framework family
    parse("((r+z)+w)*s - (exp(-((r+z)+w)) - (w-1)*(r+z) + w^3/6 - w^2/2)").expect("static key")
}

fn hirota_exp_key() -> Expr {
    // two exponentials with reciprocal-gap exponents solve the full Hirota
    // system at λ = (0,1,2,3,4); the exponent vectors are proportional, so
    // the associated metric is degenerate and the entry carries none
    parse("exp(x1/4 + x2/3 + x3/2 + x4) + exp(x1/2 + 2*x2/3 + x3 + 2*x4)").expect("static key")
}

fn heav_exp_key() -> Expr {
    // non-proportional exponent pair: solves the general heavenly equation
    // at λ = (0,1,2,3) (cross terms 14 − 4·11 + 3·10 = 0) with
    // nondegenerate metric (J cross factor = −1/16)
    parse("exp((x1 + x2 + x3 + x4)/2) + exp((x1 + 2*x2 + 3*x3 + 4*x4)/2)").expect("static key")
}

fn ppwave_guard() -> impl Fn(&Point) -> bool + Send + Sync + 'static {
    |p: &Point| 4.0 * p.get("y").unwrap() - p.get("w").unwrap().powi(2) >= 0.1
}

fn ppwave_box() -> SampleBox {
    SampleBox::new(&[
        ("x", -1.0, 1.0),
        ("y", 0.3, 1.0),
        ("z", 0.4, 1.4),
        ("w", -1.0, 1.0),
    ])
    .with_guard(ppwave_guard())
}

fn iheav_box() -> SampleBox {
    // keep the twisted prefactor φ(φ′(−E−w+1)+φ) with φ = z away from zero
    SampleBox::new(&[
        ("r", 0.3, 1.1),
        ("s", 0.3, 1.1),
        ("z", 0.4, 1.2),
        ("w", 0.3, 1.1),
    ])
    .with_guard(|p| {
        let e = (-(p.get("r").unwrap() + p.get("z").unwrap() + p.get("w").unwrap())).exp();
        (-e - p.get("w").unwrap() + 1.0 + p.get("z").unwrap()).abs() >= 0.2
    })
}

/// Default guarded sample box for a chart: used when verifying ad-hoc keys
/// that don't come from a registry entry.  Keeps 4y − w² positive on the
/// II-framework charts (fractional-power profiles) and stays inside the
/// positive quadrant on the I-framework charts.
pub fn default_box(chart: &ChartRef) -> SampleBox {
    let coords: Vec<&str> = chart.coords().iter().map(String::as_str).collect();
    match coords.as_slice() {
        ["x", "y", "z", "w"] => ppwave_box(),
        ["x", "y", "z", "w", "u"] => build("sep_iih5d").expect("registry id").sample,
        ["r", "s", "z", "w"] => iheav_box(),
        ["r", "s", "z", "w", "u"] => build("sep_ih5d").expect("registry id").sample,
        _ => SampleBox::unit(&coords),
    }
}

/// Guarded sample box in the reduced chart (x, z, kappa, mu) for an
/// arbitrary twisting function φ(z): rejects points where the metric
/// prefactor 3φ′ + 2κφ degenerates.
pub fn reduced_box_for(phi: &Expr) -> SampleBox {
    let phi = phi.clone();
    let phi_p = phi.diff("z");
    SampleBox::new(&[
        ("x", -1.0, 1.0),
        ("z", 0.5, 1.5),
        ("kappa", 0.6, 1.4),
        ("mu", -0.7, 0.7),
    ])
    .with_guard(move |p| {
        let b = Bindings::new();
        let fp = phi_p.eval(p, &b).unwrap_or(f64::NAN);
        let f = phi.eval(p, &b).unwrap_or(f64::NAN);
        let pre = 3.0 * fp + 2.0 * p.get("kappa").unwrap() * f;
        pre.is_finite() && pre.abs() >= 0.1
    })
}

/// Stable, sorted list of the registry ids.
pub fn ids() -> &'static [&'static str] {
    &[
        "flat_ii",
        "heav_exp",
        "hirota_exp",
        "iheav_exp",
        "ppwave_cubic",
        "sep_gh5d",
        "sep_ih5d",
        "sep_iih5d",
    ]
}

/// Build a registry entry by id.
pub fn build(id: &str) -> Result<CatalogEntry, CatalogError> {
    Ok(match id {
        "flat_ii" => CatalogEntry {
            id: "flat_ii",
            framework: Framework::II,
            key: Expr::zero(),
            lambdas: vec![],
            systems: vec!["pleb2", "iihirota4"],
            sample: SampleBox::new(&[
                ("x", -1.0, 1.0),
                ("y", -1.0, 1.0),
                ("z", 0.4, 1.4),
                ("w", -1.0, 1.0),
            ]),
            twists: vec![
                parse("z^2").unwrap(),
                parse("3*z + 1").unwrap(),
                parse("exp(z)").unwrap(),
            ],
        },
        "ppwave_cubic" => CatalogEntry {
            id: "ppwave_cubic",
            framework: Framework::II,
            key: cubic_key(),
            lambdas: vec![],
            systems: vec!["ppwave", "pleb2", "iihirota4"],
            sample: ppwave_box(),
            twists: vec![parse("z").unwrap(), parse("exp(z)").unwrap()],
        },
        "iheav_exp" => CatalogEntry {
            id: "iheav_exp",
            framework: Framework::I,
            key: iheav_exp_key(),
            lambdas: vec![],
            systems: vec!["pleb1", "ihirota4"],
            sample: iheav_box(),
            twists: vec![parse("z").unwrap()],
        },
        "heav_exp" => CatalogEntry {
            id: "heav_exp",
            framework: Framework::General,
            key: heav_exp_key(),
            lambdas: (0..4).map(rat).collect(),
            systems: vec!["heav4"],
            sample: SampleBox::new(&[
                ("x1", -0.4, 0.4),
                ("x2", -0.4, 0.4),
                ("x3", -0.4, 0.4),
                ("x4", -0.4, 0.4),
            ]),
            twists: vec![],
        },
        "hirota_exp" => CatalogEntry {
            id: "hirota_exp",
            framework: Framework::General,
            key: hirota_exp_key(),
            lambdas: (0..5).map(rat).collect(),
            systems: vec!["heav4", "hirota4"],
            sample: SampleBox::unit(&["x1", "x2", "x3", "x4"]),
            twists: vec![],
        },
        "sep_gh5d" => CatalogEntry {
            id: "sep_gh5d",
            framework: Framework::General,
            key: Expr::mul(vec![hirota_exp_key(), Expr::exp(Expr::var("x5"))]),
            lambdas: (0..5).map(rat).collect(),
            systems: vec!["schief5", "sep5"],
            sample: SampleBox::unit(&["x1", "x2", "x3", "x4", "x5"]),
            twists: vec![],
        },
        "sep_ih5d" => CatalogEntry {
            id: "sep_ih5d",
            framework: Framework::I,
            key: crate::gindikin::separated_lift(&iheav_exp_key(), ("s", "w")),
            lambdas: vec![],
            systems: vec!["ih5d", "ihadd"],
            sample: SampleBox::new(&[
                ("r", -1.0, 1.0),
                ("s", -1.0, 1.0),
                ("z", -1.0, 1.0),
                ("w", -1.0, 1.0),
                ("u", 0.5, 1.5),
            ]),
            twists: vec![],
        },
        "sep_iih5d" => CatalogEntry {
            id: "sep_iih5d",
            framework: Framework::II,
            key: crate::gindikin::separated_lift(&cubic_key(), ("y", "w")),
            lambdas: vec![],
            systems: vec!["iih5d"],
            sample: SampleBox::new(&[
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
            }),
            twists: vec![],
        },
        other => return Err(CatalogError::UnknownId(other.to_string())),
    })
}

/// A pp-wave entry for a caller-supplied profile F(y, w) (solves the II
/// Plebański equation for any profile; the `ppwave` reduction is listed
/// only in the fixed `ppwave_cubic` entry, since arbitrary profiles need
/// not satisfy it).
pub fn ppwave(profile: &Expr) -> CatalogEntry {
    CatalogEntry {
        id: "ppwave",
        framework: Framework::II,
        key: profile.clone(),
        lambdas: vec![],
        systems: vec!["pleb2"],
        sample: ppwave_box(),
        twists: vec![],
    }
}

impl CatalogEntry {
    pub fn chart(&self) -> Result<ChartRef, CatalogError> {
        Ok(system_chart(self.systems[0])?)
    }

    /// Run every expected PDE system over a fresh sample of `n` points.
    pub fn residual_reports(
        &self,
        n: usize,
        seed: u64,
        tol: f64,
    ) -> Result<Vec<ResidualReport>, CatalogError> {
        let sample = self.sample.sample(n, seed);
        let b = Bindings::new();
        let mut out = Vec::new();
        for id in &self.systems {
            let sys = build_system(id, &self.key, &self.lambdas)?;
            out.push(sys.residual_report(&sample, &b, tol)?);
        }
        Ok(out)
    }

    /// The Gindikin 2-form pencil of the entry.
    pub fn gindikin(&self) -> Result<GindikinCandidate, CatalogError> {
        let dim = self.chart()?.dim();
        let form = match (self.framework, dim) {
            (Framework::General, n) => beta_gh(&self.key, &self.lambdas, n),
            (Framework::I, 4) => gind_ih(&self.key),
            (Framework::I, _) => gind_ih5d(&self.key),
            (Framework::II, 4) => gind_iih(&self.key),
            (Framework::II, _) => gind_iih5d(&self.key),
        };
        Ok(GindikinCandidate::new(form)?)
    }

    /// The scaling/translation symmetry of the 5D reductions (c = 1), if
    /// the entry is one of them.
    pub fn symmetry(&self) -> Option<LambdaVectorField> {
        let chart = self.chart().ok()?;
        match self.id {
            "sep_gh5d" => Some(LambdaVectorField::from_pairs(
                &chart,
                &[("x5", Expr::one())],
            )),
            "sep_ih5d" => Some(LambdaVectorField::from_pairs(
                &chart,
                &[
                    ("s", Expr::var("s")),
                    ("w", Expr::var("w")),
                    ("u", Expr::var("u")),
                ],
            )),
            "sep_iih5d" => Some(LambdaVectorField::from_pairs(
                &chart,
                &[
                    ("y", Expr::var("y")),
                    ("w", Expr::var("w")),
                    ("u", Expr::var("u")),
                ],
            )),
            _ => None,
        }
    }

    /// The untwisted framework metric (4D entries only).
    pub fn untwisted_metric(&self) -> Option<MetricExpr> {
        match (self.framework, self.id) {
            (Framework::II, "flat_ii" | "ppwave_cubic" | "ppwave") => {
                Some(plebanski_ii_metric(&self.key))
            }
            (Framework::I, "iheav_exp") => Some(plebanski_i_metric(&self.key)),
            (Framework::General, "heav_exp") => Some(general_heavenly_metric(&self.key)),
            _ => None,
        }
    }

    /// The twisted inverse metric for a multiplier φ(z) (I/II 4D entries).
    pub fn twisted_metric(&self, phi: &Expr) -> Option<MetricExpr> {
        match (self.framework, self.chart().ok()?.dim()) {
            (Framework::I, 4) => Some(twisted_inverse_i(&self.key, phi)),
            (Framework::II, 4) => Some(twisted_inverse_ii(&self.key, phi)),
            _ => None,
        }
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::json!({
            "schema": crate::report::SCHEMA_VERSION,
            "id": self.id,
            "framework": self.framework,
            "key": self.key.to_string(),
            "lambdas": self.lambdas.iter().map(|l| l.to_string()).collect::<Vec<_>>(),
            "systems": self.systems,
            "twists": self.twists.iter().map(|t| t.to_string()).collect::<Vec<_>>(),
        })
    }
}

// ---------------------------------------------------------------------------
// Twisted cubic invariant families
// ---------------------------------------------------------------------------

/// One twisting function φ(z) of the reduced cubic pp-wave construction,
/// with its profile label Ψ(Z), the closed-form Petrov invariants as
/// expressions in the reduced chart coordinates (z, kappa), and a guarded
/// sample box in (x, z, kappa, mu).
pub struct InvariantFamily {
    pub phi_label: &'static str,
    pub phi: Expr,
    pub psi_label: &'static str,
    /// Ψ as a function of z, i.e. φ′(z)/φ(z).
    pub psi: Expr,
    pub special: bool,
    pub closed_i: Expr,
    pub closed_j: Expr,
    pub closed_s: Expr,
    pub sample: SampleBox,
}

impl InvariantFamily {
    /// The reduced-chart inverse metric of the family.
    pub fn metric(&self) -> MetricExpr {
        twisted_cubic_ppwave_inverse(&self.phi)
    }

    /// The same tensor in the pp-wave chart (x, y, z, w).
    pub fn metric_xyzw(&self) -> MetricExpr {
        twisted_cubic_ppwave_inverse_xyzw(&self.phi)
    }

    /// Closed-form (I, J, S) at a reduced-chart point.
    pub fn closed_at(&self, p: &Point) -> Result<(f64, f64, f64), CatalogError> {
        let b = Bindings::new();
        Ok((
            self.closed_i.eval(p, &b)?,
            self.closed_j.eval(p, &b)?,
            self.closed_s.eval(p, &b)?,
        ))
    }
}

fn family(
    phi_label: &'static str,
    psi_label: &'static str,
    psi: &str,
    special: bool,
    i: &str,
    j: &str,
    s: &str,
    sample: SampleBox,
) -> InvariantFamily {
    InvariantFamily {
        phi_label,
        phi: parse(phi_label).expect("static φ"),
        psi_label,
        psi: parse(psi).expect("static Ψ"),
        special,
        closed_i: parse(i).expect("static I"),
        closed_j: parse(j).expect("static J"),
        closed_s: parse(s).expect("static S"),
        sample,
    }
}

fn reduced_box(z: (f64, f64), kappa: (f64, f64), phi: &str) -> SampleBox {
    let phi = parse(phi).expect("static φ");
    let phi_p = phi.diff("z");
    SampleBox::new(&[
        ("x", -1.0, 1.0),
        ("z", z.0, z.1),
        ("kappa", kappa.0, kappa.1),
        ("mu", -0.7, 0.7),
    ])
    .with_guard(move |p| {
        // metric prefactor 3φ′ + 2κφ must stay away from zero
        let b = Bindings::new();
        let fp = phi_p.eval(p, &b).unwrap_or(f64::NAN);
        let f = phi.eval(p, &b).unwrap_or(f64::NAN);
        let pre = 3.0 * fp + 2.0 * p.get("kappa").unwrap() * f;
        pre.is_finite() && pre.abs() >= 0.1
    })
}

/// The six twisting families of the reduced cubic pp-wave, with their
/// closed-form invariants.  Indexed by `phi_label`.
pub fn invariant_families() -> Vec<InvariantFamily> {
    vec![
        family(
            "z",
            "1/Z",
            "1/z",
            true,
            "3456/(2*z*kappa + 3)^6",
            "-82944/(2*z*kappa + 3)^9",
            "0",
            reduced_box((0.5, 1.5), (0.6, 1.4), "z"),
        ),
        family(
            "z^2",
            "2/Z^(1/2)",
            "2/z",
            true,
            "0",
            "0",
            "0",
            reduced_box((0.5, 1.5), (0.6, 1.4), "z^2"),
        ),
        family(
            "z^3",
            "3*Z^(-1/3)",
            "3/z",
            false,
            "-3456*(4*kappa*z + 9)/(z^4*(2*kappa*z + 9)^6)",
            "-373248*(4*kappa*z + 12)/(z^6*(2*kappa*z + 9)^9)",
            "-41278242816*(16*kappa*z + 45)/(z^12*(2*kappa*z + 9)^16)",
            reduced_box((0.5, 1.5), (0.6, 1.4), "z^3"),
        ),
        family(
            "exp(z)",
            "1",
            "1",
            false,
            "-2304*kappa/(exp(2*z)*(2*kappa + 3)^6)",
            "-41472*(2*kappa + 1)/(exp(3*z)*(2*kappa + 3)^9)",
            "-382205952*(8*kappa + 3)/(exp(6*z)*(2*kappa + 3)^16)",
            reduced_box((0.5, 1.5), (0.6, 1.4), "exp(z)"),
        ),
        family(
            "-1/z",
            "Z",
            "-1/z",
            false,
            "3456*(3*(-1/z) - 4*kappa)*(-1/z)/(2*kappa + 3*(-1/z))^6",
            "-1492992*(1/z^2)*kappa/(2*kappa + 3*(-1/z))^9",
            "41278242816*(-1/z^3)*(3*(-1/z) - 16*kappa)/(2*kappa + 3*(-1/z))^16",
            reduced_box((2.0, 3.0), (0.9, 1.4), "-1/z"),
        ),
        family(
            "z^2/4 - 1",
            "(Z+1)^(1/2)/Z",
            "(z/2)/(z^2/4 - 1)",
            true,
            "3456/(2*(z^2/4 - 1)*kappa + 3*z/2)^6",
            "-82944/(2*(z^2/4 - 1)*kappa + 3*z/2)^9",
            "0",
            reduced_box((2.5, 3.5), (0.6, 1.4), "z^2/4 - 1"),
        ),
    ]
}

/// Look up one family by its φ label.
pub fn invariant_family(phi_label: &str) -> Result<InvariantFamily, CatalogError> {
    invariant_families()
        .into_iter()
        .find(|f| f.phi_label == phi_label)
        .ok_or_else(|| CatalogError::UnknownId(format!("invariant family `{phi_label}`")))
}

/// Map a pp-wave chart point (x, y, z, w) to the reduced chart
/// (x, z, kappa, mu): kappa = √(4y − w²), mu = w.  All curvature scalars
/// are equal at corresponding points.
pub fn reduced_coordinate_map(p: &Point) -> Result<Point, CatalogError> {
    let y = p
        .get("y")
        .ok_or_else(|| CatalogError::Domain("missing coordinate y".into()))?;
    let w = p
        .get("w")
        .ok_or_else(|| CatalogError::Domain("missing coordinate w".into()))?;
    let disc = 4.0 * y - w * w;
    if disc <= 0.0 {
        return Err(CatalogError::Domain(format!(
            "4y - w^2 = {disc} must be positive"
        )));
    }
    let mut out = Point::new();
    out.set("x", p.get("x").unwrap_or(0.0));
    out.set(
        "z",
        p.get("z")
            .ok_or_else(|| CatalogError::Domain("missing coordinate z".into()))?,
    );
    out.set("kappa", disc.sqrt());
    out.set("mu", w);
    Ok(out)
}

// ---------------------------------------------------------------------------
// Holomorphic pp-wave profiles
// ---------------------------------------------------------------------------

fn binom(n: usize, k: usize) -> BigRational {
    let mut num = BigInt::from(1);
    let mut den = BigInt::from(1);
    for i in 0..k {
        num *= BigInt::from((n - i) as i64);
        den *= BigInt::from((i + 1) as i64);
    }
    BigRational::new(num, den)
}

/// Re(ξᵏ) as an expression in (y, w) with ξ = κ + iw, κ = √(4y − w²).
fn re_xi_pow(k: usize) -> Expr {
    let base = parse("4*y - w^2").expect("static expression");
    let mut terms = Vec::new();
    for j in (0..=k).step_by(2) {
        let mut c = binom(k, j);
        if (j / 2) % 2 == 1 {
            c = -c;
        }
        // κ^(k−j) w^j
        let kp = Expr::pow_rat(base.clone(), BigRational::new(((k - j) as i64).into(), 2.into()));
        let wp = Expr::pow_rat(Expr::var("w"), BigRational::from_integer((j as i64).into()));
        terms.push(Expr::mul(vec![Expr::from_rational(c), kp, wp]));
    }
    Expr::add(terms)
}

/// The real pp-wave profile F(y, w) of a polynomial holomorphic datum
/// 𝜑(ξ) = Σ aₖ ξᵏ:  F = ½(ξ+ξ̄)(𝜑′+𝜑̄′) − (𝜑+𝜑̄) with ξ = √(4y−w²) + i·w.
/// `coeffs[k]` is aₖ.
pub fn holo_ppwave_key(coeffs: &[BigRational]) -> Expr {
    let kappa = Expr::pow_rat(
        parse("4*y - w^2").expect("static expression"),
        BigRational::new(1.into(), 2.into()),
    );
    let mut terms = Vec::new();
    for (k, a) in coeffs.iter().enumerate() {
        if a.is_zero() {
            continue;
        }
        // ½(ξ+ξ̄) · 2 Re(k aₖ ξ^{k−1}) = κ · 2k aₖ Re(ξ^{k−1})
        if k > 0 {
            let c = BigRational::from_integer((2 * k as i64).into()) * a;
            terms.push(Expr::mul(vec![
                Expr::from_rational(c),
                kappa.clone(),
                re_xi_pow(k - 1),
            ]));
        }
        // −2 Re(aₖ ξᵏ)
        let c = BigRational::from_integer((-2i64).into()) * a;
        terms.push(Expr::mul(vec![Expr::from_rational(c), re_xi_pow(k)]));
    }
    Expr::add(terms)
}

/// Residual report of the pp-wave reduction equation for the profile built
/// from a polynomial holomorphic datum.
pub fn holo_ppwave_verify(
    coeffs: &[BigRational],
    n: usize,
    seed: u64,
    tol: f64,
) -> Result<ResidualReport, CatalogError> {
    let f = holo_ppwave_key(coeffs);
    let sys = build_system("ppwave", &f, &[])?;
    let sample = ppwave_box().sample(n, seed);
    Ok(sys.residual_report(&sample, &Bindings::new(), tol)?)
}

// ---------------------------------------------------------------------------
// SDVE certification corpus
// ---------------------------------------------------------------------------

/// Every metric the library constructs from the registry, paired with an
/// admissible sample box: the corpus for the Ricci-flatness certification.
pub fn sdve_corpus() -> Vec<(String, MetricExpr, SampleBox)> {
    let mut out: Vec<(String, MetricExpr, SampleBox)> = Vec::new();
    for id in ["flat_ii", "ppwave_cubic", "iheav_exp", "heav_exp"] {
        let entry = build(id).expect("registry id");
        if let Some(g) = entry.untwisted_metric() {
            out.push((format!("{id}:untwisted"), g, entry.sample.clone()));
        }
        for phi in &entry.twists {
            if let Some(g) = entry.twisted_metric(phi) {
                out.push((format!("{id}:twist({phi})"), g, entry.sample.clone()));
            }
        }
    }
    for fam in invariant_families() {
        out.push((
            format!("reduced_cubic:twist({})", fam.phi_label),
            fam.metric(),
            fam.sample.clone(),
        ));
    }
    // the chart-transported reduced metric doubles as an (x,y,z,w) check
    let fam = invariant_family("z").expect("registry family");
    out.push((
        "reduced_cubic_xyzw:twist(z)".into(),
        fam.metric_xyzw(),
        ppwave_box(),
    ));
    out
}
