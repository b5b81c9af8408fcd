//! SDVE metrics: framework metrics (general heavenly, Plebański I and II),
//! twisted inverse metrics, frame metrics, and the Gindikin reconstruction
//! formula, together with 4×4 symbolic and numeric inversion helpers.
//!
//! Matrix convention, used everywhere in this module: a metric written as a
//! sum of symmetric products `c · dx^a dx^b` contributes `c` to both the
//! `(a,b)` and `(b,a)` matrix entries when `a ≠ b`, and `c` to the diagonal
//! entry when `a = b` (for frames, `a⊙b` contributes `a_i b_j + a_j b_i`
//! off-diagonal and `a_i b_i` on the diagonal).  Under this convention the
//! displayed covariant metrics and the displayed inverse matrices of the
//! twisted family are exact matrix inverses of each other in the Plebański I
//! framework; remaining cross-pipeline comparisons hold up to a constant
//! factor per framework which is measured by tests, never assumed.

use std::sync::Arc;

use num::BigRational;
use num::traits::Zero;
use serde::Serialize;
use thiserror::Error;

use crate::forms::{Chart, ChartRef, FormError, LambdaPolyForm};
use crate::gindikin::GindikinCandidate;
use crate::symexpr::{parse, Bindings, EvalError, Expr, Point, rational_to_f64};

/// Default node budget for symbolic adjugate/determinant inversion.
pub const DEFAULT_NODE_BUDGET: usize = 20_000;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("chart mismatch or unsupported dimension: {0}")]
    BadChart(String),
    #[error("metric degenerate at sample point (|det| = {0:.3e})")]
    Degenerate(f64),
    #[error("symbolic inversion exceeds node budget ({nodes} > {budget})")]
    NodeBudget { nodes: usize, budget: usize },
    #[error("projective weights are proportional")]
    ProportionalWeights,
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Form(#[from] FormError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Variance {
    Covariant,
    Contravariant,
}

/// Symmetric 4×4 matrix of expressions attached to a chart, tagged with its
/// variance.  Only the upper triangle is stored.
#[derive(Clone, Debug)]
pub struct MetricExpr {
    chart: ChartRef,
    /// Upper triangle, row-major: (0,0),(0,1),(0,2),(0,3),(1,1),...,(3,3).
    upper: Vec<Expr>,
    variance: Variance,
}

fn upper_index(i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    // offset of row i into the packed upper triangle of a 4×4 matrix
    i * 4 + j - i * (i + 1) / 2
}

impl MetricExpr {
    /// Build from the packed upper triangle (10 expressions).
    pub fn from_upper(chart: ChartRef, upper: Vec<Expr>, variance: Variance) -> Self {
        assert_eq!(chart.dim(), 4, "metrics are 4-dimensional");
        assert_eq!(upper.len(), 10, "upper triangle of a 4x4 matrix");
        MetricExpr {
            chart,
            upper,
            variance,
        }
    }

    /// Build from a full matrix, averaging the two triangles.
    pub fn from_matrix(chart: ChartRef, mat: &[Vec<Expr>], variance: Variance) -> Self {
        let mut upper = Vec::with_capacity(10);
        for i in 0..4 {
            for j in i..4 {
                if i == j {
                    upper.push(mat[i][j].clone());
                } else {
                    let avg = Expr::mul(vec![
                        Expr::rat(1, 2),
                        Expr::add(vec![mat[i][j].clone(), mat[j][i].clone()]),
                    ]);
                    upper.push(avg);
                }
            }
        }
        MetricExpr::from_upper(chart, upper, variance)
    }

    pub fn chart(&self) -> &ChartRef {
        &self.chart
    }

    pub fn variance(&self) -> Variance {
        self.variance
    }

    pub fn entry(&self, i: usize, j: usize) -> &Expr {
        &self.upper[upper_index(i, j)]
    }

    pub fn matrix(&self) -> Vec<Vec<Expr>> {
        (0..4)
            .map(|i| (0..4).map(|j| self.entry(i, j).clone()).collect())
            .collect()
    }

    pub fn scale(&self, e: &Expr) -> MetricExpr {
        MetricExpr {
            chart: self.chart.clone(),
            upper: self
                .upper
                .iter()
                .map(|x| Expr::mul(vec![e.clone(), x.clone()]))
                .collect(),
            variance: self.variance,
        }
    }

    pub fn node_count(&self) -> usize {
        self.upper.iter().map(|e| e.node_count()).sum()
    }

    /// Numeric matrix at a point.
    pub fn eval_at(&self, p: &Point, b: &Bindings) -> Result<NMat4, MetricError> {
        let mut m = [[0.0f64; 4]; 4];
        for i in 0..4 {
            for j in i..4 {
                let v = self.entry(i, j).eval(p, b)?;
                m[i][j] = v;
                m[j][i] = v;
            }
        }
        Ok(m)
    }

    pub fn det_at(&self, p: &Point, b: &Bindings) -> Result<f64, MetricError> {
        Ok(nmat_det(&self.eval_at(p, b)?))
    }

    /// Quadratic form g(v, v) at a point (matrix sense: vᵀ G v).
    pub fn quad_at(&self, v: &[f64; 4], p: &Point, b: &Bindings) -> Result<f64, MetricError> {
        let m = self.eval_at(p, b)?;
        let mut s = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                s += v[i] * m[i][j] * v[j];
            }
        }
        Ok(s)
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let mut entries = Vec::new();
        for i in 0..4 {
            for j in i..4 {
                entries.push(serde_json::json!({
                    "i": i,
                    "j": j,
                    "expr": self.entry(i, j).to_string(),
                }));
            }
        }
        serde_json::json!({
            "schema": crate::report::SCHEMA_VERSION,
            "chart": self.chart.coords(),
            "variance": match self.variance {
                Variance::Covariant => "covariant",
                Variance::Contravariant => "contravariant",
            },
            "entries": entries,
        })
    }
}

// ---------------------------------------------------------------------------
// Numeric 4×4 helpers
// ---------------------------------------------------------------------------

pub type NMat4 = [[f64; 4]; 4];

pub fn nmat_identity() -> NMat4 {
    let mut m = [[0.0; 4]; 4];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    m
}

pub fn nmat_mul(a: &NMat4, b: &NMat4) -> NMat4 {
    let mut c = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            let mut s = 0.0;
            for (k, bk) in b.iter().enumerate() {
                s += a[i][k] * bk[j];
            }
            c[i][j] = s;
        }
    }
    c
}

pub fn nmat_max_abs(a: &NMat4) -> f64 {
    a.iter()
        .flatten()
        .fold(0.0f64, |acc, x| acc.max(x.abs()))
}

pub fn nmat_det(a: &NMat4) -> f64 {
    // LU with partial pivoting
    let mut m = *a;
    let mut det = 1.0;
    for col in 0..4 {
        let (pivot, pval) = (col..4)
            .map(|r| (r, m[r][col].abs()))
            .fold((col, 0.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pval == 0.0 {
            return 0.0;
        }
        if pivot != col {
            m.swap(pivot, col);
            det = -det;
        }
        det *= m[col][col];
        for r in (col + 1)..4 {
            let f = m[r][col] / m[col][col];
            for c in col..4 {
                m[r][c] -= f * m[col][c];
            }
        }
    }
    det
}

/// Gauss–Jordan inverse with partial pivoting; `None` when singular.
pub fn nmat_inverse(a: &NMat4) -> Option<NMat4> {
    let mut m = *a;
    let mut inv = nmat_identity();
    for col in 0..4 {
        let (pivot, pval) = (col..4)
            .map(|r| (r, m[r][col].abs()))
            .fold((col, 0.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pval < 1e-300 {
            return None;
        }
        m.swap(pivot, col);
        inv.swap(pivot, col);
        let d = m[col][col];
        for c in 0..4 {
            m[col][c] /= d;
            inv[col][c] /= d;
        }
        for r in 0..4 {
            if r != col {
                let f = m[r][col];
                for c in 0..4 {
                    m[r][c] -= f * m[col][c];
                    inv[r][c] -= f * inv[col][c];
                }
            }
        }
    }
    Some(inv)
}

/// max |A·B − I|, the natural residual for inverse-consistency checks.
pub fn nmat_identity_residual(a: &NMat4, b: &NMat4) -> f64 {
    let p = nmat_mul(a, b);
    let mut worst = 0.0f64;
    for (i, row) in p.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((v - target).abs());
        }
    }
    worst
}

/// Null space of a numeric 4×4 matrix: basis vectors of `{v : Av = 0}`,
/// detected by row-reducing with the given pivot threshold.
pub fn nmat_nullspace(a: &NMat4, tol: f64) -> Vec<[f64; 4]> {
    let mut m = *a;
    let scale = nmat_max_abs(&m).max(1.0);
    let mut pivot_cols = Vec::new();
    let mut row = 0;
    for col in 0..4 {
        let (pivot, pval) = (row..4)
            .map(|r| (r, m[r][col].abs()))
            .fold((row, 0.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pval <= tol * scale {
            continue;
        }
        m.swap(pivot, row);
        let d = m[row][col];
        for c in 0..4 {
            m[row][c] /= d;
        }
        for r in 0..4 {
            if r != row {
                let f = m[r][col];
                for c in 0..4 {
                    m[r][c] -= f * m[row][c];
                }
            }
        }
        pivot_cols.push(col);
        row += 1;
        if row == 4 {
            break;
        }
    }
    let mut basis = Vec::new();
    for free in 0..4 {
        if pivot_cols.contains(&free) {
            continue;
        }
        let mut v = [0.0f64; 4];
        v[free] = 1.0;
        for (r, &pc) in pivot_cols.iter().enumerate() {
            v[pc] = -m[r][free];
        }
        basis.push(v);
    }
    basis
}

// ---------------------------------------------------------------------------
// Symbolic 4×4 helpers
// ---------------------------------------------------------------------------

type EMat4 = Vec<Vec<Expr>>;

fn emat_zero() -> EMat4 {
    vec![vec![Expr::zero(); 4]; 4]
}

fn emat_mul(a: &EMat4, b: &EMat4) -> EMat4 {
    let mut c = emat_zero();
    for i in 0..4 {
        for j in 0..4 {
            let terms: Vec<Expr> = (0..4)
                .map(|k| Expr::mul(vec![a[i][k].clone(), b[k][j].clone()]))
                .collect();
            c[i][j] = Expr::add(terms);
        }
    }
    c
}

fn emat_scale(a: &EMat4, s: &Expr) -> EMat4 {
    a.iter()
        .map(|row| {
            row.iter()
                .map(|e| Expr::mul(vec![s.clone(), e.clone()]))
                .collect()
        })
        .collect()
}

fn emat_add(a: &EMat4, b: &EMat4) -> EMat4 {
    let mut c = emat_zero();
    for i in 0..4 {
        for j in 0..4 {
            c[i][j] = Expr::add(vec![a[i][j].clone(), b[i][j].clone()]);
        }
    }
    c
}

fn emat_sub(a: &EMat4, b: &EMat4) -> EMat4 {
    let mut c = emat_zero();
    for i in 0..4 {
        for j in 0..4 {
            c[i][j] = Expr::sub(a[i][j].clone(), b[i][j].clone());
        }
    }
    c
}

fn emat_nodes(a: &EMat4) -> usize {
    a.iter().flatten().map(|e| e.node_count()).sum()
}

/// Determinant of a k×k minor given by the listed rows/columns.
fn edet(m: &EMat4, rows: &[usize], cols: &[usize]) -> Expr {
    if rows.len() == 1 {
        return m[rows[0]][cols[0]].clone();
    }
    let mut terms = Vec::new();
    for (k, &c) in cols.iter().enumerate() {
        let sub_cols: Vec<usize> = cols.iter().copied().filter(|&x| x != c).collect();
        let minor = edet(m, &rows[1..], &sub_cols);
        let term = Expr::mul(vec![m[rows[0]][c].clone(), minor]);
        terms.push(if k % 2 == 0 { term } else { term.neg() });
    }
    Expr::add(terms)
}

fn emat_det(m: &EMat4) -> Expr {
    edet(m, &[0, 1, 2, 3], &[0, 1, 2, 3])
}

/// Adjugate: adj(M)ᵢⱼ = (−1)^{i+j}·minor(j,i).
fn emat_adjugate(m: &EMat4) -> EMat4 {
    let all = [0usize, 1, 2, 3];
    let mut adj = emat_zero();
    for i in 0..4 {
        for j in 0..4 {
            let rows: Vec<usize> = all.iter().copied().filter(|&r| r != j).collect();
            let cols: Vec<usize> = all.iter().copied().filter(|&c| c != i).collect();
            let minor = edet(m, &rows, &cols);
            adj[i][j] = if (i + j) % 2 == 0 { minor } else { minor.neg() };
        }
    }
    adj
}

// ---------------------------------------------------------------------------
// Framework metrics
// ---------------------------------------------------------------------------

fn diff2(f: &Expr, a: &str, b: &str) -> Expr {
    f.diff(a).diff(b)
}

/// Covariant metric of the general heavenly framework in the coordinates
/// x1..x4: [g] = (1/J)·M with J = f14·f23 − f13·f24 and M the symmetric
/// matrix of triple products of second derivatives of the key function.
pub fn general_heavenly_metric(f: &Expr) -> MetricExpr {
    let chart = Chart::new(&["x1", "x2", "x3", "x4"]);
    let d = |i: usize, j: usize| diff2(f, &format!("x{i}"), &format!("x{j}"));
    let (f12, f13, f14) = (d(1, 2), d(1, 3), d(1, 4));
    let (f23, f24, f34) = (d(2, 3), d(2, 4), d(3, 4));
    let j_inv = Expr::div(
        Expr::one(),
        Expr::sub(
            Expr::mul(vec![f14.clone(), f23.clone()]),
            Expr::mul(vec![f13.clone(), f24.clone()]),
        ),
    );
    let two = Expr::from_int(2);
    let pair = |a: &Expr, b: &Expr, c: &Expr, d: &Expr| {
        Expr::add(vec![
            Expr::mul(vec![a.clone(), b.clone()]),
            Expr::mul(vec![c.clone(), d.clone()]),
        ])
    };
    let upper = vec![
        Expr::mul(vec![two.clone(), f12.clone(), f13.clone(), f14.clone()]),
        Expr::mul(vec![f12.clone(), pair(&f14, &f23, &f13, &f24)]),
        Expr::mul(vec![f13.clone(), pair(&f14, &f23, &f12, &f34)]),
        Expr::mul(vec![f14.clone(), pair(&f13, &f24, &f12, &f34)]),
        Expr::mul(vec![two.clone(), f12.clone(), f23.clone(), f24.clone()]),
        Expr::mul(vec![f23.clone(), pair(&f13, &f24, &f12, &f34)]),
        Expr::mul(vec![f24.clone(), pair(&f14, &f23, &f12, &f34)]),
        Expr::mul(vec![two.clone(), f13.clone(), f23.clone(), f34.clone()]),
        Expr::mul(vec![f34.clone(), pair(&f14, &f23, &f13, &f24)]),
        Expr::mul(vec![two, f14, f24, f34]),
    ];
    let upper = upper
        .into_iter()
        .map(|e| Expr::mul(vec![j_inv.clone(), e]))
        .collect();
    MetricExpr::from_upper(chart, upper, Variance::Covariant)
}

/// Covariant Plebański I metric on (r,s,z,w):
/// g = −(θ_rz dr dz + θ_rw dr dw + θ_sz ds dz + θ_sw ds dw).
pub fn plebanski_i_metric(theta: &Expr) -> MetricExpr {
    let chart = Chart::new(&["r", "s", "z", "w"]);
    let g = |a: &str, b: &str| diff2(theta, a, b).neg();
    let z = Expr::zero;
    // order (r,s,z,w); packed upper triangle
    let upper = vec![
        z(),          // rr
        z(),          // rs
        g("r", "z"),  // rz
        g("r", "w"),  // rw
        z(),          // ss
        g("s", "z"),  // sz
        g("s", "w"),  // sw
        z(),          // zz
        z(),          // zw
        z(),          // ww
    ];
    MetricExpr::from_upper(chart, upper, Variance::Covariant)
}

/// Covariant Plebański II metric on (x,y,z,w):
/// g = dw dx + dz dy − θ_xx dz² − θ_yy dw² + 2θ_xy dw dz.
pub fn plebanski_ii_metric(theta: &Expr) -> MetricExpr {
    let chart = Chart::new(&["x", "y", "z", "w"]);
    let z = Expr::zero;
    let upper = vec![
        z(),                                                // xx
        z(),                                                // xy
        z(),                                                // xz
        Expr::one(),                                        // xw
        z(),                                                // yy
        Expr::one(),                                        // yz
        z(),                                                // yw
        diff2(theta, "x", "x").neg(),                       // zz
        Expr::mul(vec![Expr::from_int(2), diff2(theta, "x", "y")]), // zw
        diff2(theta, "y", "y").neg(),                       // ww
    ];
    MetricExpr::from_upper(chart, upper, Variance::Covariant)
}

/// Inverse metric of the twisted Plebański I family on (r,s,z,w).  `phi` is
/// the twist multiplier as an expression in the coordinate z (an opaque
/// function symbol works); its derivative is taken symbolically.
pub fn twisted_inverse_i(theta: &Expr, phi: &Expr) -> MetricExpr {
    let chart = Chart::new(&["r", "s", "z", "w"]);
    let phi_p = phi.diff("z");
    let s = Expr::var("s");
    let t = |a: &str, b: &str| diff2(theta, a, b);
    let prefactor = Expr::div(
        Expr::one(),
        Expr::mul(vec![
            phi.clone(),
            Expr::add(vec![
                Expr::mul(vec![phi_p.clone(), t("w", "w")]),
                phi.clone(),
            ]),
        ]),
    );
    let z = Expr::zero;
    let upper = vec![
        z(), // rr
        Expr::mul(vec![phi_p.clone(), s.clone(), t("s", "w")]).neg(), // rs
        Expr::mul(vec![phi.clone(), t("s", "w")]),                    // rz
        Expr::sub(
            Expr::mul(vec![s.clone(), phi_p.clone(), t("s", "s")]),
            Expr::mul(vec![phi.clone(), t("s", "z")]),
        ), // rw
        Expr::mul(vec![Expr::from_int(2), phi_p.clone(), s.clone(), t("r", "w")]), // ss
        Expr::mul(vec![phi.clone(), t("r", "w")]).neg(),              // sz
        Expr::add(vec![
            Expr::mul(vec![phi.clone(), t("r", "z")]),
            Expr::mul(vec![
                phi_p.clone(),
                Expr::sub(theta.diff("r"), Expr::mul(vec![s, t("r", "s")])),
            ]),
        ]), // sw
        z(), // zz
        z(), // zw
        Expr::mul(vec![Expr::from_int(2), phi_p]), // ww
    ];
    let upper = upper
        .into_iter()
        .map(|e| Expr::mul(vec![prefactor.clone(), e]))
        .collect();
    MetricExpr::from_upper(chart, upper, Variance::Contravariant)
}

/// Inverse metric of the twisted Plebański II family on (x,y,z,w).
pub fn twisted_inverse_ii(theta: &Expr, phi: &Expr) -> MetricExpr {
    let chart = Chart::new(&["x", "y", "z", "w"]);
    let phi_p = phi.diff("z");
    let ratio = Expr::div(phi_p.clone(), phi.clone());
    let t = |a: &str, b: &str| diff2(theta, a, b);
    let prefactor = Expr::div(
        Expr::one(),
        Expr::add(vec![
            Expr::mul(vec![phi_p.clone(), t("y", "y")]),
            phi.clone(),
        ]),
    );
    let z = Expr::zero;
    let upper = vec![
        Expr::mul(vec![Expr::from_int(-2), t("y", "y")]), // xx
        Expr::sub(
            Expr::mul(vec![Expr::from_int(2), t("x", "y")]),
            Expr::mul(vec![ratio.clone(), t("w", "y")]),
        ), // xy
        z(), // xz
        Expr::sub(Expr::mul(vec![ratio.clone(), t("y", "y")]), Expr::one()), // xw
        Expr::mul(vec![
            Expr::from_int(2),
            Expr::add(vec![
                t("x", "x").neg(),
                Expr::mul(vec![
                    ratio.clone(),
                    Expr::add(vec![t("w", "x"), Expr::var("y")]),
                ]),
            ]),
        ]), // yy
        Expr::from_int(-1), // yz
        Expr::mul(vec![
            ratio.clone(),
            Expr::sub(t("x", "y"), Expr::var("w")),
        ])
        .neg(), // yw
        z(), // zz
        z(), // zw
        Expr::mul(vec![Expr::from_int(2), ratio]), // ww
    ];
    let upper = upper
        .into_iter()
        .map(|e| Expr::mul(vec![prefactor.clone(), e]))
        .collect();
    MetricExpr::from_upper(chart, upper, Variance::Contravariant)
}

/// Inverse metric of the twisted cubic pp-wave family in the reduced chart
/// (x, z, kappa, mu), where kappa = sqrt(4y − w²) and mu = w.
///
/// This is the complex-variable form of the family: the rotationally
/// reduced key function F = (4y − w²)^{3/2} corresponds to the constant
/// holomorphic datum f = 3/2, and the twisted inverse metric collapses to a
/// small rational matrix in (x, z, kappa, mu).  The closed-form Petrov
/// invariants of the family (parametrised by the profile Ψ(Z) = φ′/Z with
/// Z = φ(z)) belong to this construction.
///
/// Note this metric is *not* the chart image of [`twisted_inverse_ii`] of
/// the same key function: the twist depends on the choice of potential
/// 1-form for the pencil, and the reduced chart uses a different gauge.
/// Both metrics are Ricci-flat; only this one reproduces the catalogued
/// invariant formulas.
pub fn twisted_cubic_ppwave_inverse(phi: &Expr) -> MetricExpr {
    let chart = Chart::new(&["x", "z", "kappa", "mu"]);
    let k = Expr::var("kappa");
    let m = Expr::var("mu");
    let phi_p = phi.diff("z");
    let ratio = Expr::div(phi_p.clone(), phi.clone());
    // −2 / (3φ′ + 2κφ)
    let prefactor = Expr::div(
        Expr::from_int(-2),
        Expr::add(vec![
            Expr::mul(vec![Expr::from_int(3), phi_p]),
            Expr::mul(vec![Expr::from_int(2), k.clone(), phi.clone()]),
        ]),
    );
    let z = Expr::zero;
    let rk2 = Expr::mul(vec![Expr::from_int(-2), ratio.clone(), k.clone()]);
    let upper = vec![
        Expr::from_int(3),                                 // xx
        z(),                                               // xz
        m.neg(),                                           // x kappa
        Expr::sub(k, Expr::mul(vec![Expr::rat(3, 2), ratio])), // x mu
        z(),                                               // zz
        Expr::from_int(2),                                 // z kappa
        z(),                                               // z mu
        rk2.clone(),                                       // kappa kappa
        z(),                                               // kappa mu
        rk2,                                               // mu mu
    ];
    let upper = upper
        .into_iter()
        .map(|e| Expr::mul(vec![prefactor.clone(), e]))
        .collect();
    MetricExpr::from_upper(chart, upper, Variance::Contravariant)
}

/// [`twisted_cubic_ppwave_inverse`] pushed forward to the pp-wave chart
/// (x, y, z, w) through y = (κ² + μ²)/4, w = μ; the entries carry
/// κ = (4y − w²)^{1/2} symbolically.  Same tensor as the reduced form in a
/// different chart, so all curvature scalars must agree at mapped points —
/// which is the coordinate-invariance check the catalog runs.
pub fn twisted_cubic_ppwave_inverse_xyzw(phi: &Expr) -> MetricExpr {
    let chart = Chart::new(&["x", "y", "z", "w"]);
    let k = Expr::pow_rat(
        parse("4*y - w^2").expect("static expression"),
        num::BigRational::new(1.into(), 2.into()),
    );
    let w = Expr::var("w");
    let phi_p = phi.diff("z");
    let ratio = Expr::div(phi_p.clone(), phi.clone());
    let prefactor = Expr::div(
        Expr::from_int(-2),
        Expr::add(vec![
            Expr::mul(vec![Expr::from_int(3), phi_p]),
            Expr::mul(vec![Expr::from_int(2), k.clone(), phi.clone()]),
        ]),
    );
    let z = Expr::zero;
    let rk = Expr::mul(vec![ratio.clone(), k.clone()]);
    let upper = vec![
        Expr::from_int(3), // xx
        Expr::mul(vec![Expr::rat(-3, 4), ratio.clone(), w.clone()]), // xy
        z(), // xz
        Expr::sub(k.clone(), Expr::mul(vec![Expr::rat(3, 2), ratio])), // xw
        // yy: ((κ² + w²)/4)·(−2 (φ′/φ) κ)
        Expr::mul(vec![
            Expr::rat(-1, 2),
            Expr::add(vec![parse("4*y - w^2").expect("static expression"), Expr::mul(vec![w.clone(), w.clone()])]),
            rk.clone(),
        ]),
        k, // yz
        Expr::mul(vec![Expr::from_int(-1), rk.clone(), w]), // yw
        z(), // zz
        z(), // zw
        Expr::mul(vec![Expr::from_int(-2), rk]), // ww
    ];
    let upper = upper
        .into_iter()
        .map(|e| Expr::mul(vec![prefactor.clone(), e]))
        .collect();
    MetricExpr::from_upper(chart, upper, Variance::Contravariant)
}

// ---------------------------------------------------------------------------
// Frame metric and Gindikin reconstruction
// ---------------------------------------------------------------------------

fn one_form_components(f: &LambdaPolyForm) -> Result<Vec<Expr>, MetricError> {
    if f.degree() != 1 {
        return Err(MetricError::BadChart("frame entries must be 1-forms".into()));
    }
    if f.lambda_degree().unwrap_or(0) > 0 {
        return Err(MetricError::BadChart(
            "frame entries must be λ-independent".into(),
        ));
    }
    Ok((0..f.chart().dim())
        .map(|i| f.entry(&[i]).coeff(0))
        .collect())
}

/// Covariant frame metric g = γ₀⊙δ₁ − γ₁⊙δ₀ for λ-independent 1-forms on a
/// common 4-dimensional chart.
pub fn frame_metric(
    g0: &LambdaPolyForm,
    g1: &LambdaPolyForm,
    d0: &LambdaPolyForm,
    d1: &LambdaPolyForm,
) -> Result<MetricExpr, MetricError> {
    let chart = g0.chart().clone();
    if chart.dim() != 4 {
        return Err(MetricError::BadChart("frame metric needs dimension 4".into()));
    }
    for f in [g1, d0, d1] {
        if !Arc::ptr_eq(f.chart(), &chart) && f.chart().coords() != chart.coords() {
            return Err(MetricError::BadChart("frame entries on different charts".into()));
        }
    }
    let a0 = one_form_components(g0)?;
    let a1 = one_form_components(g1)?;
    let b0 = one_form_components(d0)?;
    let b1 = one_form_components(d1)?;
    let odot = |a: &[Expr], b: &[Expr], i: usize, j: usize| {
        if i == j {
            Expr::mul(vec![a[i].clone(), b[i].clone()])
        } else {
            Expr::add(vec![
                Expr::mul(vec![a[i].clone(), b[j].clone()]),
                Expr::mul(vec![a[j].clone(), b[i].clone()]),
            ])
        }
    };
    let mut upper = Vec::with_capacity(10);
    for i in 0..4 {
        for j in i..4 {
            upper.push(Expr::sub(odot(&a0, &b1, i, j), odot(&a1, &b0, i, j)));
        }
    }
    Ok(MetricExpr::from_upper(chart, upper, Variance::Covariant))
}

/// Antisymmetric matrices B₀, B₁, B₂ of the λ-coefficients of a 4D
/// λ-quadratic 2-form.
fn beta_matrices(form: &LambdaPolyForm) -> Result<[EMat4; 3], MetricError> {
    if form.chart().dim() != 4 || form.degree() != 2 {
        return Err(MetricError::BadChart(
            "reconstruction needs a 4D 2-form".into(),
        ));
    }
    if form.lambda_degree().unwrap_or(0) > 2 {
        return Err(MetricError::BadChart(
            "reconstruction needs λ-degree at most 2".into(),
        ));
    }
    let mut mats = [emat_zero(), emat_zero(), emat_zero()];
    for i in 0..4 {
        for j in (i + 1)..4 {
            let p = form.entry(&[i, j]);
            for (k, mat) in mats.iter_mut().enumerate() {
                let c = p.coeff(k);
                mat[i][j] = c.clone();
                mat[j][i] = c.neg();
            }
        }
    }
    Ok(mats)
}

fn homogenize(mats: &[EMat4; 3], mu: &(BigRational, BigRational)) -> EMat4 {
    let w = |r: BigRational| Expr::from_rational(r);
    let c0 = w(&mu.0 * &mu.0);
    let c1 = w(&mu.0 * &mu.1);
    let c2 = w(&mu.1 * &mu.1);
    emat_add(
        &emat_add(&emat_scale(&mats[0], &c0), &emat_scale(&mats[1], &c1)),
        &emat_scale(&mats[2], &c2),
    )
}

fn reconstruction_pieces(
    mats: &[EMat4; 3],
    mu: &(BigRational, BigRational),
    nu: &(BigRational, BigRational),
) -> Result<(EMat4, EMat4, EMat4, BigRational), MetricError> {
    let det_w = &mu.0 * &nu.1 - &mu.1 * &nu.0;
    if det_w.is_zero() {
        return Err(MetricError::ProportionalWeights);
    }
    let sum = (&mu.0 + &nu.0, &mu.1 + &nu.1);
    let bm = homogenize(mats, mu);
    let bn = homogenize(mats, nu);
    let bs = homogenize(mats, &sum);
    let cross = emat_sub(&emat_sub(&bs, &bm), &bn);
    let mid = emat_add(&bm, &bn);
    let diff = emat_sub(&bm, &bn);
    Ok((cross, mid, diff, det_w))
}

/// Reconstruct the covariant metric matrix from a 4D Gindikin structure:
/// [g] = −(μ₀ν₁−μ₁ν₀)⁻¹ [β̄^{μ+ν}−β̄^μ−β̄^ν][β̄^μ+β̄^ν]⁻¹[β̄^μ−β̄^ν],
/// with β̄^μ = μ₀²β₀ + μ₀μ₁β₁ + μ₁²β₂ the homogenization.
pub fn gindikin_reconstruct(
    beta: &GindikinCandidate,
    mu: &(BigRational, BigRational),
    nu: &(BigRational, BigRational),
    budget: usize,
) -> Result<MetricExpr, MetricError> {
    let mats = beta_matrices(beta.form())?;
    let (cross, mid, diff, det_w) = reconstruction_pieces(&mats, mu, nu)?;
    let adj = emat_adjugate(&mid);
    let det = emat_det(&mid);
    let nodes = emat_nodes(&adj) + det.node_count() + emat_nodes(&cross) + emat_nodes(&diff);
    if nodes > budget {
        return Err(MetricError::NodeBudget { nodes, budget });
    }
    let scale = Expr::div(
        Expr::from_rational(-det_w.recip()),
        det,
    );
    let prod = emat_scale(&emat_mul(&emat_mul(&cross, &adj), &diff), &scale);
    Ok(MetricExpr::from_matrix(
        beta.chart().clone(),
        &prod,
        Variance::Covariant,
    ))
}

/// Numeric reconstruction at a point: same formula as `gindikin_reconstruct`
/// but evaluated entrywise, avoiding symbolic growth.  Used as the fallback
/// when the node budget is exceeded and for dense sampling.
pub fn reconstruct_at(
    beta: &GindikinCandidate,
    mu: &(BigRational, BigRational),
    nu: &(BigRational, BigRational),
    p: &Point,
    b: &Bindings,
) -> Result<NMat4, MetricError> {
    let mats = beta_matrices(beta.form())?;
    let (cross, mid, diff, det_w) = reconstruction_pieces(&mats, mu, nu)?;
    let eval = |m: &EMat4| -> Result<NMat4, MetricError> {
        let mut out = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                out[i][j] = m[i][j].eval(p, b)?;
            }
        }
        Ok(out)
    };
    let cross_n = eval(&cross)?;
    let mid_n = eval(&mid)?;
    let diff_n = eval(&diff)?;
    let mid_inv = nmat_inverse(&mid_n).ok_or(MetricError::Degenerate(nmat_det(&mid_n)))?;
    let mut g = nmat_mul(&nmat_mul(&cross_n, &mid_inv), &diff_n);
    let factor = -1.0 / rational_to_f64(&det_w);
    for row in g.iter_mut() {
        for v in row.iter_mut() {
            *v *= factor;
        }
    }
    // symmetrize to suppress rounding noise
    for i in 0..4 {
        for j in (i + 1)..4 {
            let avg = 0.5 * (g[i][j] + g[j][i]);
            g[i][j] = avg;
            g[j][i] = avg;
        }
    }
    Ok(g)
}

/// Symbolic inverse via adjugate over determinant; fails with `NodeBudget`
/// when expression growth would be excessive (callers then use the numeric
/// path `invert_at`).  Flips variance.
pub fn invert_metric(g: &MetricExpr, budget: usize) -> Result<MetricExpr, MetricError> {
    let m = g.matrix();
    let adj = emat_adjugate(&m);
    let det = emat_det(&m);
    if det.is_zero() {
        return Err(MetricError::Degenerate(0.0));
    }
    let nodes = emat_nodes(&adj) + det.node_count();
    if nodes > budget {
        return Err(MetricError::NodeBudget { nodes, budget });
    }
    let inv = emat_scale(&adj, &Expr::div(Expr::one(), det));
    let variance = match g.variance() {
        Variance::Covariant => Variance::Contravariant,
        Variance::Contravariant => Variance::Covariant,
    };
    Ok(MetricExpr::from_matrix(g.chart().clone(), &inv, variance))
}

/// Numeric inverse of a metric at a point (variance flipped implicitly).
pub fn invert_at(g: &MetricExpr, p: &Point, b: &Bindings) -> Result<NMat4, MetricError> {
    let m = g.eval_at(p, b)?;
    nmat_inverse(&m).ok_or(MetricError::Degenerate(nmat_det(&m)))
}

/// Constant-conformal-factor comparison: the ratio b/a measured from the
/// largest entry at each point.  Returns the factor from the first point and
/// the maximum relative deviation of all entries/points from it.
pub fn conformal_factor(
    a: &[NMat4],
    b: &[NMat4],
) -> Option<(f64, f64)> {
    if a.len() != b.len() || a.is_empty() {
        return None;
    }
    let mut factor = None;
    let mut worst = 0.0f64;
    for (ma, mb) in a.iter().zip(b) {
        // pick the entry of largest magnitude in a as the reference
        let (mut bi, mut bj, mut bv) = (0, 0, 0.0f64);
        for i in 0..4 {
            for j in 0..4 {
                if ma[i][j].abs() > bv {
                    bv = ma[i][j].abs();
                    bi = i;
                    bj = j;
                }
            }
        }
        if bv == 0.0 {
            return None;
        }
        let f = mb[bi][bj] / ma[bi][bj];
        let f0 = *factor.get_or_insert(f);
        let scale = nmat_max_abs(mb).max(1e-300);
        for i in 0..4 {
            for j in 0..4 {
                worst = worst.max((mb[i][j] - f0 * ma[i][j]).abs() / scale);
            }
        }
    }
    factor.map(|f| (f, worst))
}
