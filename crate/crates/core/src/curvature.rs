//! Curvature of 4D metrics: Christoffel symbols, Riemann/Ricci/Weyl tensors,
//! the self-dual Weyl operator in a 2-form basis, Weyl spinor components in
//! the Plebański II framework, and the Petrov invariants I, J, S = I³ − 6J².
//!
//! The pipeline is symbolic-then-numeric: first and second partial
//! derivatives of the metric entries are formed symbolically once per metric
//! (`CurvatureJet`), then all tensor algebra happens in `f64` per point.  A
//! jet can be built from either a covariant or a contravariant metric; in the
//! contravariant case the covariant jet is obtained from
//! ∂g = −g(∂g⁻¹)g without ever inverting symbolically.

use num::BigRational;
use once_cell::sync::Lazy;
use serde::Serialize;
use thiserror::Error;

use crate::forms::ChartRef;
use crate::gindikin::GindikinCandidate;
use crate::metrics::{
    nmat_det, nmat_inverse, nmat_mul, MetricError, MetricExpr, NMat4, Variance,
};
use crate::symexpr::{parse, Bindings, EvalError, Expr, Point};

pub type R3 = [[[f64; 4]; 4]; 4];
pub type R4 = [[[[f64; 4]; 4]; 4]; 4];

#[derive(Debug, Error)]
pub enum CurvatureError {
    #[error("metric singular at sample point")]
    Singular,
    #[error("Gram matrix of the 2-form basis is singular")]
    DegenerateBasis,
    #[error("basis 2-form has λ-degree {0}, expected at most 2")]
    BadBasis(usize),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

// ---------------------------------------------------------------------------
// Curvature jet
// ---------------------------------------------------------------------------

/// Symbolic derivative tables of a metric: the entries, their first and their
/// second partials with respect to the chart coordinates.
pub struct CurvatureJet {
    chart: ChartRef,
    variance: Variance,
    g: Vec<Vec<Expr>>,
    /// d1[k][a][b] = ∂_k g_ab
    d1: Vec<Vec<Vec<Expr>>>,
    /// d2[k][l][a][b] = ∂_k ∂_l g_ab
    d2: Vec<Vec<Vec<Vec<Expr>>>>,
}

/// All numeric curvature data of a metric at one point.
pub struct CurvaturePoint {
    pub g: NMat4,
    pub ginv: NMat4,
    /// Γ^a_{bc}, symmetric in (b,c): gamma[a][b][c]
    pub gamma: R3,
    /// R^a_{bcd}: riem_up[a][b][c][d]
    pub riem_up: R4,
    /// R_{abcd}
    pub riem_low: R4,
    pub ricci: NMat4,
    pub scalar: f64,
}

impl CurvatureJet {
    pub fn new(metric: &MetricExpr) -> Self {
        let chart = metric.chart().clone();
        let coords: Vec<String> = chart.coords().to_vec();
        let g = metric.matrix();
        let d1: Vec<Vec<Vec<Expr>>> = coords
            .iter()
            .map(|k| {
                g.iter()
                    .map(|row| row.iter().map(|e| e.diff(k)).collect())
                    .collect()
            })
            .collect();
        let d2: Vec<Vec<Vec<Vec<Expr>>>> = coords
            .iter()
            .map(|k| {
                d1.iter()
                    .map(|dk| {
                        dk.iter()
                            .map(|row| row.iter().map(|e| e.diff(k)).collect())
                            .collect()
                    })
                    .collect()
            })
            .collect();
        // note d2[k][l] as built is ∂_k of d1[l]; symmetric anyway
        CurvatureJet {
            chart,
            variance: metric.variance(),
            g,
            d1,
            d2,
        }
    }

    pub fn chart(&self) -> &ChartRef {
        &self.chart
    }

    fn eval_mat(m: &[Vec<Expr>], p: &Point, b: &Bindings) -> Result<NMat4, CurvatureError> {
        let mut out = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                out[i][j] = m[i][j].eval(p, b)?;
            }
        }
        Ok(out)
    }

    /// Covariant metric with its first and second numeric derivatives at a
    /// point.  For a contravariant jet the chain rule converts derivatives of
    /// g⁻¹ into derivatives of g.
    fn covariant_jet_at(
        &self,
        p: &Point,
        b: &Bindings,
    ) -> Result<(NMat4, [NMat4; 4], [[NMat4; 4]; 4]), CurvatureError> {
        let m0 = Self::eval_mat(&self.g, p, b)?;
        let mut m1 = [[[0.0; 4]; 4]; 4];
        let mut m2 = [[[[0.0; 4]; 4]; 4]; 4];
        for k in 0..4 {
            m1[k] = Self::eval_mat(&self.d1[k], p, b)?;
            for l in 0..4 {
                m2[k][l] = Self::eval_mat(&self.d2[k][l], p, b)?;
            }
        }
        match self.variance {
            Variance::Covariant => Ok((m0, m1, m2)),
            Variance::Contravariant => {
                // h = given contravariant matrix, g = h⁻¹
                let g = nmat_inverse(&m0).ok_or(CurvatureError::Singular)?;
                let mut dg = [[[0.0; 4]; 4]; 4];
                for k in 0..4 {
                    let t = nmat_mul(&nmat_mul(&g, &m1[k]), &g);
                    for i in 0..4 {
                        for j in 0..4 {
                            dg[k][i][j] = -t[i][j];
                        }
                    }
                }
                let mut ddg = [[[[0.0; 4]; 4]; 4]; 4];
                for k in 0..4 {
                    for l in 0..4 {
                        // ∂_k∂_l g = −(∂_k g)(∂_l h)g − g(∂_k∂_l h)g − g(∂_l h)(∂_k g)
                        let a = nmat_mul(&nmat_mul(&dg[k], &m1[l]), &g);
                        let c = nmat_mul(&nmat_mul(&g, &m2[k][l]), &g);
                        let e = nmat_mul(&nmat_mul(&g, &m1[l]), &dg[k]);
                        for i in 0..4 {
                            for j in 0..4 {
                                ddg[k][l][i][j] = -(a[i][j] + c[i][j] + e[i][j]);
                            }
                        }
                    }
                }
                Ok((g, dg, ddg))
            }
        }
    }

    pub fn at(&self, p: &Point, b: &Bindings) -> Result<CurvaturePoint, CurvatureError> {
        let (g, dg, ddg) = self.covariant_jet_at(p, b)?;
        let ginv = nmat_inverse(&g).ok_or(CurvatureError::Singular)?;
        // ∂_k g⁻¹ = −g⁻¹ (∂_k g) g⁻¹
        let mut dginv = [[[0.0; 4]; 4]; 4];
        for k in 0..4 {
            let t = nmat_mul(&nmat_mul(&ginv, &dg[k]), &ginv);
            for i in 0..4 {
                for j in 0..4 {
                    dginv[k][i][j] = -t[i][j];
                }
            }
        }
        let bracket = |m1: &[NMat4; 4], b_: usize, d: usize, c: usize| {
            m1[b_][d][c] + m1[c][b_][d] - m1[d][b_][c]
        };
        let mut gamma = [[[0.0; 4]; 4]; 4];
        for a in 0..4 {
            for bb in 0..4 {
                for c in 0..4 {
                    let mut s = 0.0;
                    for d in 0..4 {
                        s += ginv[a][d] * bracket(&dg, bb, d, c);
                    }
                    gamma[a][bb][c] = 0.5 * s;
                }
            }
        }
        // ∂_e Γ^a_{bc}
        let mut dgamma = [[[[0.0; 4]; 4]; 4]; 4];
        for e in 0..4 {
            for a in 0..4 {
                for bb in 0..4 {
                    for c in 0..4 {
                        let mut s = 0.0;
                        for d in 0..4 {
                            s += dginv[e][a][d] * bracket(&dg, bb, d, c)
                                + ginv[a][d]
                                    * (ddg[e][bb][d][c] + ddg[e][c][bb][d] - ddg[e][d][bb][c]);
                        }
                        dgamma[e][a][bb][c] = 0.5 * s;
                    }
                }
            }
        }
        let mut riem_up = [[[[0.0; 4]; 4]; 4]; 4];
        for a in 0..4 {
            for bb in 0..4 {
                for c in 0..4 {
                    for d in 0..4 {
                        let mut s = dgamma[c][a][d][bb] - dgamma[d][a][c][bb];
                        for e in 0..4 {
                            s += gamma[a][c][e] * gamma[e][d][bb]
                                - gamma[a][d][e] * gamma[e][c][bb];
                        }
                        riem_up[a][bb][c][d] = s;
                    }
                }
            }
        }
        let mut riem_low = [[[[0.0; 4]; 4]; 4]; 4];
        for a in 0..4 {
            for bb in 0..4 {
                for c in 0..4 {
                    for d in 0..4 {
                        let mut s = 0.0;
                        for e in 0..4 {
                            s += g[a][e] * riem_up[e][bb][c][d];
                        }
                        riem_low[a][bb][c][d] = s;
                    }
                }
            }
        }
        let mut ricci = [[0.0; 4]; 4];
        for bb in 0..4 {
            for d in 0..4 {
                let mut s = 0.0;
                for a in 0..4 {
                    s += riem_up[a][bb][a][d];
                }
                ricci[bb][d] = s;
            }
        }
        let mut scalar = 0.0;
        for bb in 0..4 {
            for d in 0..4 {
                scalar += ginv[bb][d] * ricci[bb][d];
            }
        }
        Ok(CurvaturePoint {
            g,
            ginv,
            gamma,
            riem_up,
            riem_low,
            ricci,
            scalar,
        })
    }
}

impl CurvaturePoint {
    pub fn max_riemann(&self) -> f64 {
        let mut m = 0.0f64;
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    for d in 0..4 {
                        m = m.max(self.riem_low[a][b][c][d].abs());
                    }
                }
            }
        }
        m
    }

    pub fn max_ricci(&self) -> f64 {
        self.ricci
            .iter()
            .flatten()
            .fold(0.0f64, |acc, x| acc.max(x.abs()))
    }

    /// Largest violation of the Riemann index symmetries (antisymmetry in
    /// both pairs, pair exchange, first Bianchi), relative to the tensor
    /// scale.
    pub fn symmetry_residual(&self) -> f64 {
        let r = &self.riem_low;
        let scale = self.max_riemann().max(1.0);
        let mut worst = 0.0f64;
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    for d in 0..4 {
                        worst = worst.max((r[a][b][c][d] + r[b][a][c][d]).abs());
                        worst = worst.max((r[a][b][c][d] + r[a][b][d][c]).abs());
                        worst = worst.max((r[a][b][c][d] - r[c][d][a][b]).abs());
                        worst = worst
                            .max((r[a][b][c][d] + r[a][c][d][b] + r[a][d][b][c]).abs());
                    }
                }
            }
        }
        worst / scale
    }

    /// Fully covariant Weyl tensor C_{abcd} (dimension 4).
    pub fn weyl_low(&self) -> R4 {
        let g = &self.g;
        let s = &self.ricci;
        let scal = self.scalar;
        let mut c = [[[[0.0; 4]; 4]; 4]; 4];
        for a in 0..4 {
            for b in 0..4 {
                for cc in 0..4 {
                    for d in 0..4 {
                        let kn = g[a][cc] * s[b][d] + g[b][d] * s[a][cc]
                            - g[a][d] * s[b][cc]
                            - g[b][cc] * s[a][d];
                        let gg = g[a][cc] * g[b][d] - g[a][d] * g[b][cc];
                        c[a][b][cc][d] =
                            self.riem_low[a][b][cc][d] - 0.5 * kn + (scal / 6.0) * gg;
                    }
                }
            }
        }
        c
    }
}

// ---------------------------------------------------------------------------
// Finite-difference oracle
// ---------------------------------------------------------------------------

/// Christoffel symbols from central differences of the covariant metric
/// entries (no symbolic derivatives involved).
pub fn fd_christoffel(
    g: &MetricExpr,
    p: &Point,
    b: &Bindings,
    h: f64,
) -> Result<R3, CurvatureError> {
    assert_eq!(g.variance(), Variance::Covariant);
    let coords: Vec<String> = g.chart().coords().to_vec();
    let at = |p: &Point| -> Result<NMat4, CurvatureError> { Ok(g.eval_at(p, b)?) };
    let g0 = at(p)?;
    let ginv = nmat_inverse(&g0).ok_or(CurvatureError::Singular)?;
    let mut dg = [[[0.0; 4]; 4]; 4];
    for (k, name) in coords.iter().enumerate() {
        let plus = at(&p.shifted(name, h))?;
        let minus = at(&p.shifted(name, -h))?;
        for i in 0..4 {
            for j in 0..4 {
                dg[k][i][j] = (plus[i][j] - minus[i][j]) / (2.0 * h);
            }
        }
    }
    let mut gamma = [[[0.0; 4]; 4]; 4];
    for a in 0..4 {
        for bb in 0..4 {
            for c in 0..4 {
                let mut s = 0.0;
                for d in 0..4 {
                    s += ginv[a][d] * (dg[bb][d][c] + dg[c][bb][d] - dg[d][bb][c]);
                }
                gamma[a][bb][c] = 0.5 * s;
            }
        }
    }
    Ok(gamma)
}

/// Riemann tensor R^a_{bcd} from central differences of `fd_christoffel`,
/// a pipeline fully independent of the symbolic derivative tables.
pub fn fd_riemann_up(
    g: &MetricExpr,
    p: &Point,
    b: &Bindings,
    h: f64,
) -> Result<R4, CurvatureError> {
    let coords: Vec<String> = g.chart().coords().to_vec();
    let gamma0 = fd_christoffel(g, p, b, h)?;
    let mut dgamma = [[[[0.0; 4]; 4]; 4]; 4];
    for (e, name) in coords.iter().enumerate() {
        let plus = fd_christoffel(g, &p.shifted(name, h), b, h)?;
        let minus = fd_christoffel(g, &p.shifted(name, -h), b, h)?;
        for a in 0..4 {
            for bb in 0..4 {
                for c in 0..4 {
                    dgamma[e][a][bb][c] = (plus[a][bb][c] - minus[a][bb][c]) / (2.0 * h);
                }
            }
        }
    }
    let mut riem = [[[[0.0; 4]; 4]; 4]; 4];
    for a in 0..4 {
        for bb in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    let mut s = dgamma[c][a][d][bb] - dgamma[d][a][c][bb];
                    for e in 0..4 {
                        s += gamma0[a][c][e] * gamma0[e][d][bb]
                            - gamma0[a][d][e] * gamma0[e][c][bb];
                    }
                    riem[a][bb][c][d] = s;
                }
            }
        }
    }
    Ok(riem)
}

// ---------------------------------------------------------------------------
// Self-dual Weyl operator and Petrov invariants
// ---------------------------------------------------------------------------

/// Result of evaluating the Weyl endomorphism on the curvature-carrying
/// chirality of the 2-form bundle at one point, together with the residuals
/// that certify the construction.
///
/// For a metric built from a λ-pencil of closed 2-forms the pencil spans one
/// Hodge-star eigenspace and the Weyl tensor annihilates it; the curvature
/// lives entirely on the opposite eigenspace.  `selfdual_weyl` therefore
/// evaluates the operator on both star eigenspaces, reports the side that
/// carries the curvature, and records the norm of the other side as
/// `opposite_residual` — its smallness is exactly the statement that one
/// Weyl chirality vanishes.
#[derive(Clone, Debug, Serialize)]
pub struct WeylData {
    pub schema: u32,
    /// Identifier of the 2-form basis the operator matrix refers to.
    pub basis: String,
    /// Hodge-star eigenvalue (+1 or −1) of the eigenspace carrying the
    /// curvature, with the orientation fixed by the chart coordinate order.
    pub sd_sign: i8,
    /// Trace-removed operator matrix on the curvature-side star eigenbasis.
    pub w: [[f64; 3]; 3],
    pub i: f64,
    pub j: f64,
    pub s: f64,
    pub special: bool,
    pub kappa_i: f64,
    pub kappa_j: f64,
    /// |tr W| before trace removal, relative to the operator scale.
    pub trace_residual: f64,
    /// Distance of the Weyl images C(b_j) from the span of the eigenbasis,
    /// relative to their scale (the eigenspaces are Weyl-invariant, so this
    /// measures floating-point noise only).
    pub closure_residual: f64,
    /// Operator norm on the opposite star eigenspace relative to the
    /// curvature side; ≈ 0 certifies that one Weyl chirality vanishes.
    pub opposite_residual: f64,
    /// Operator norm restricted to the λ-pencil span relative to the
    /// curvature side, when a pencil was supplied.  The pencil spans the
    /// flat chirality, so this should also be ≈ 0.
    pub pencil_residual: Option<f64>,
}

/// S = I³ − 6J² together with the speciality verdict |S| ≤ tol·(1 + |I|³ + J²).
pub fn speciality(i: f64, j: f64, tol: f64) -> (f64, bool) {
    let s = i.powi(3) - 6.0 * j * j;
    (s, s.abs() <= tol * (1.0 + i.abs().powi(3) + j * j))
}

/// Evaluate the three λ-coefficient matrices of a pencil of 2-forms at a
/// point: β = β₀ + λβ₁ + λ²β₂, each βₖ an antisymmetric 4×4 matrix.
pub fn basis_matrices(
    cand: &GindikinCandidate,
    p: &Point,
    b: &Bindings,
) -> Result<[NMat4; 3], CurvatureError> {
    let form = cand.form();
    let deg = form.degree();
    if deg > 2 {
        return Err(CurvatureError::BadBasis(deg));
    }
    let mut mats = [[[0.0f64; 4]; 4]; 3];
    for i in 0..4 {
        for j in (i + 1)..4 {
            let poly = form.entry(&[i, j]);
            for k in 0..3 {
                let v = poly.coeff(k).eval(p, b)?;
                mats[k][i][j] = v;
                mats[k][j][i] = -v;
            }
        }
    }
    Ok(mats)
}

/// Raise both indices of an antisymmetric matrix: A^{ab} = g^{ac} g^{bd} A_{cd}.
fn raise2(ginv: &NMat4, a_low: &NMat4) -> NMat4 {
    nmat_mul(&nmat_mul(ginv, a_low), ginv)
}

fn perm_sign(mut v: [usize; 4]) -> f64 {
    let mut s = 1.0;
    for i in 0..4 {
        for j in (i + 1)..4 {
            if v[j] < v[i] {
                v.swap(i, j);
                s = -s;
            }
        }
    }
    s
}

/// Hodge star of an antisymmetric covariant matrix, (*A)_{ab} = ½ ε_{abcd} A^{cd}
/// with ε_{abcd} = √|det g| · sign(abcd) in the chart coordinate order.  In
/// split signature (det g > 0) the star squares to +1 on 2-forms.
fn hodge_star(cp: &CurvaturePoint, a_low: &NMat4) -> NMat4 {
    let vol = nmat_det(&cp.g).abs().sqrt();
    let up = raise2(&cp.ginv, a_low);
    let mut out = [[0.0; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            if a == b {
                continue;
            }
            let mut s = 0.0;
            for c in 0..4 {
                for d in 0..4 {
                    if c == d || c == a || c == b || d == a || d == b {
                        continue;
                    }
                    s += perm_sign([a, b, c, d]) * up[c][d];
                }
            }
            out[a][b] = 0.5 * vol * s;
        }
    }
    out
}

/// Euclidean-orthonormal basis of the ±1 eigenspace of the Hodge star on
/// 2-forms, obtained by projecting the six coordinate 2-forms through
/// ½(1 ± *) and running Gram–Schmidt.
fn star_eigenbasis(cp: &CurvaturePoint, sign: f64) -> Result<[NMat4; 3], CurvatureError> {
    const PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
    let mut basis: Vec<NMat4> = Vec::new();
    for &(i, j) in &PAIRS {
        let mut e = [[0.0; 4]; 4];
        e[i][j] = 1.0;
        e[j][i] = -1.0;
        let st = hodge_star(cp, &e);
        let mut v = [[0.0; 4]; 4];
        for a in 0..4 {
            for b in 0..4 {
                v[a][b] = 0.5 * (e[a][b] + sign * st[a][b]);
            }
        }
        for prev in &basis {
            let mut dot = 0.0;
            for a in 0..4 {
                for b in 0..4 {
                    dot += v[a][b] * prev[a][b];
                }
            }
            for a in 0..4 {
                for b in 0..4 {
                    v[a][b] -= dot * prev[a][b];
                }
            }
        }
        let norm: f64 = v.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            for a in 0..4 {
                for b in 0..4 {
                    v[a][b] /= norm;
                }
            }
            basis.push(v);
        }
        if basis.len() == 3 {
            break;
        }
    }
    basis
        .try_into()
        .map_err(|_| CurvatureError::DegenerateBasis)
}

fn inv3(m: &[[f64; 3]; 3]) -> Option<[[f64; 3]; 3]> {
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    if det.abs() < 1e-300 {
        return None;
    }
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let r: Vec<usize> = (0..3).filter(|&x| x != j).collect();
            let c: Vec<usize> = (0..3).filter(|&x| x != i).collect();
            let minor = m[r[0]][c[0]] * m[r[1]][c[1]] - m[r[0]][c[1]] * m[r[1]][c[0]];
            out[i][j] = if (i + j) % 2 == 0 { minor } else { -minor } / det;
        }
    }
    Some(out)
}

pub fn tr2(w: &[[f64; 3]; 3]) -> f64 {
    let mut s = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            s += w[i][j] * w[j][i];
        }
    }
    s
}

pub fn tr3(w: &[[f64; 3]; 3]) -> f64 {
    let mut s = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                s += w[i][j] * w[j][k] * w[k][i];
            }
        }
    }
    s
}

fn norm3(w: &[[f64; 3]; 3]) -> f64 {
    w.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
}

/// Outcome of restricting the Weyl endomorphism to a 3-dimensional space
/// of 2-forms.
struct SpanOperator {
    /// Trace-removed operator matrix W = G⁻¹Q − (tr/3)·1.
    w: [[f64; 3]; 3],
    /// |tr| before removal relative to the operator scale.
    trace_residual: f64,
    /// Distance of the Weyl images from the span, relative to their scale.
    closure_residual: f64,
    /// Frobenius norm of the trace-removed operator.
    norm: f64,
}

/// Weyl endomorphism restricted to the span of three 2-forms:
/// G_ij = ½ β_i · β_j^♯, Q_ij = ½ C(β_j) · β_i^♯, W = G⁻¹Q trace-removed.
/// The ½ factors make the Petrov invariants come out as plain traces,
/// I = tr W², J = tr W³ (up to the calibration constants, measured ≈ 1).
fn span_operator(
    cp: &CurvaturePoint,
    weyl: &R4,
    basis: &[NMat4; 3],
) -> Result<SpanOperator, CurvatureError> {
    let ups: Vec<NMat4> = basis.iter().map(|m| raise2(&cp.ginv, m)).collect();
    // C(β_j)_{ab} = ½ C_{abcd} β_j^{cd}
    let images: Vec<NMat4> = ups
        .iter()
        .map(|up| {
            let mut out = [[0.0; 4]; 4];
            for a in 0..4 {
                for b in 0..4 {
                    let mut s = 0.0;
                    for c in 0..4 {
                        for d in 0..4 {
                            s += weyl[a][b][c][d] * up[c][d];
                        }
                    }
                    out[a][b] = 0.5 * s;
                }
            }
            out
        })
        .collect();
    let mut gram = [[0.0f64; 3]; 3];
    let mut q = [[0.0f64; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let mut s = 0.0;
            let mut t = 0.0;
            for a in 0..4 {
                for b in 0..4 {
                    s += basis[i][a][b] * ups[j][a][b];
                    t += images[j][a][b] * ups[i][a][b];
                }
            }
            gram[i][j] = 0.5 * s;
            q[i][j] = 0.5 * t;
        }
    }
    // Closure: expand each image over the (Euclidean-orthonormal) basis and
    // measure what is left over.
    let mut img_scale = 0.0f64;
    let mut leftover = 0.0f64;
    for img in &images {
        let mut res = *img;
        for bm in basis.iter() {
            let mut dot = 0.0;
            for a in 0..4 {
                for b in 0..4 {
                    dot += img[a][b] * bm[a][b];
                }
            }
            for a in 0..4 {
                for b in 0..4 {
                    res[a][b] -= dot * bm[a][b];
                }
            }
        }
        for a in 0..4 {
            for b in 0..4 {
                img_scale = img_scale.max(img[a][b].abs());
                leftover = leftover.max(res[a][b].abs());
            }
        }
    }
    let closure_residual = leftover / img_scale.max(1e-30);
    let gi = inv3(&gram).ok_or(CurvatureError::DegenerateBasis)?;
    let mut w = [[0.0f64; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                w[i][j] += gi[i][k] * q[k][j];
            }
        }
    }
    let tr = w[0][0] + w[1][1] + w[2][2];
    let scale = w
        .iter()
        .flatten()
        .fold(0.0f64, |acc, x| acc.max(x.abs()))
        .max(1e-30);
    let trace_residual = tr.abs() / scale;
    for i in 0..3 {
        w[i][i] -= tr / 3.0;
    }
    let norm = norm3(&w);
    Ok(SpanOperator {
        w,
        trace_residual,
        closure_residual,
        norm,
    })
}

/// Weyl endomorphism restricted to the span of a λ-pencil of 2-forms.
/// For the metrics this library constructs the pencil spans the flat Weyl
/// chirality, so the returned operator is a zero-test: its norm relative to
/// the curvature scale certifies that the pencil side of the Weyl tensor
/// vanishes.  Returns the trace-removed operator and its Frobenius norm.
pub fn weyl_operator(
    cp: &CurvaturePoint,
    cand: &GindikinCandidate,
    p: &Point,
    b: &Bindings,
) -> Result<([[f64; 3]; 3], f64), CurvatureError> {
    let mats = basis_matrices(cand, p, b)?;
    let weyl = cp.weyl_low();
    let op = span_operator(cp, &weyl, &mats)?;
    Ok((op.w, op.norm))
}

/// Calibration constants (κ_I, κ_J) relating the operator traces to the
/// Petrov invariants: I = κ_I tr W², J = κ_J tr W³.  Calibrated once against
/// the reduced twisted cubic metric with φ(z) = z, whose invariants in the
/// chart (x, z, κ, μ) are I = 3456/(2zκ+3)⁶ and J = −82944/(2zκ+3)⁹.  With
/// the ½-contraction conventions used here both constants come out ≈ 1.
pub static PETROV_KAPPAS: Lazy<(f64, f64)> = Lazy::new(|| {
    let h = crate::metrics::twisted_cubic_ppwave_inverse(&Expr::var("z"));
    let jet = CurvatureJet::new(&h);
    let mut p = Point::new();
    p.set("x", 0.3);
    p.set("z", 0.7);
    p.set("kappa", 2.0);
    p.set("mu", 0.5);
    let b = Bindings::new();
    let cp = jet.at(&p, &b).expect("calibration metric regular");
    let weyl = cp.weyl_low();
    let mut best: Option<SpanOperator> = None;
    for sign in [1.0, -1.0] {
        let basis = star_eigenbasis(&cp, sign).expect("star eigenbasis");
        let op = span_operator(&cp, &weyl, &basis).expect("calibration operator");
        if best.as_ref().map_or(true, |o| op.norm > o.norm) {
            best = Some(op);
        }
    }
    let op = best.unwrap();
    let den: f64 = 2.0 * 0.7 * 2.0 + 3.0;
    let i_ref = 3456.0 / den.powi(6);
    let j_ref = -82944.0 / den.powi(9);
    (i_ref / tr2(&op.w), j_ref / tr3(&op.w))
});

/// The cubic pp-wave key θ = (4y − w²)^{3/2} in the chart (x, y, z, w).
pub fn cubic_ppwave_key() -> Expr {
    Expr::pow_rat(
        parse("4*y - w^2").expect("static expression"),
        BigRational::new(3.into(), 2.into()),
    )
}

fn weyl_data_at(
    jet: &CurvatureJet,
    p: &Point,
    b: &Bindings,
    special_tol: f64,
    pencil: Option<&GindikinCandidate>,
) -> Result<WeylData, CurvatureError> {
    let cp = jet.at(p, b)?;
    let weyl = cp.weyl_low();
    let plus = span_operator(&cp, &weyl, &star_eigenbasis(&cp, 1.0)?)?;
    let minus = span_operator(&cp, &weyl, &star_eigenbasis(&cp, -1.0)?)?;
    let (side, other, sd_sign) = if minus.norm > plus.norm {
        (minus, plus, -1i8)
    } else {
        (plus, minus, 1i8)
    };
    let opposite_residual = if side.norm < 1e-30 {
        0.0
    } else {
        other.norm / side.norm
    };
    let pencil_residual = match pencil {
        None => None,
        Some(cand) => {
            let (_, pnorm) = weyl_operator(&cp, cand, p, b)?;
            Some(if side.norm < 1e-30 {
                pnorm
            } else {
                pnorm / side.norm
            })
        }
    };
    let (ki, kj) = *PETROV_KAPPAS;
    let i = ki * tr2(&side.w);
    let j = kj * tr3(&side.w);
    let (s, special) = speciality(i, j, special_tol);
    Ok(WeylData {
        schema: 1,
        basis: if sd_sign == 1 {
            "star-plus".to_string()
        } else {
            "star-minus".to_string()
        },
        sd_sign,
        w: side.w,
        i,
        j,
        s,
        special,
        kappa_i: ki,
        kappa_j: kj,
        trace_residual: side.trace_residual,
        closure_residual: side.closure_residual,
        opposite_residual,
        pencil_residual,
    })
}

/// Petrov data of the curvature-carrying Weyl chirality at a point, with the
/// λ-pencil that generated the metric supplied for the flat-side diagnostic.
pub fn selfdual_weyl(
    jet: &CurvatureJet,
    pencil: &GindikinCandidate,
    p: &Point,
    b: &Bindings,
    special_tol: f64,
) -> Result<WeylData, CurvatureError> {
    weyl_data_at(jet, p, b, special_tol, Some(pencil))
}

/// Petrov data of the curvature-carrying Weyl chirality at a point for a
/// metric given directly (no pencil diagnostic).
pub fn selfdual_weyl_at(
    jet: &CurvatureJet,
    p: &Point,
    b: &Bindings,
    special_tol: f64,
) -> Result<WeylData, CurvatureError> {
    weyl_data_at(jet, p, b, special_tol, None)
}

// ---------------------------------------------------------------------------
// Weyl spinor components of the second-framework pp-waves
// ---------------------------------------------------------------------------

/// The five Weyl spinor component expressions c_k = (−1)^k ∂_y^{4−k} ∂_x^k θ
/// of the second-framework metric of a key function θ(x, y, z, w).
pub fn plebanski_ii_weyl_components(theta: &Expr) -> [Expr; 5] {
    let mut out: Vec<Expr> = Vec::with_capacity(5);
    for k in 0..5usize {
        let mut e = theta.clone();
        for _ in 0..(4 - k) {
            e = e.diff("y");
        }
        for _ in 0..k {
            e = e.diff("x");
        }
        if k % 2 == 1 {
            e = e.neg();
        }
        out.push(e);
    }
    out.try_into().unwrap()
}

/// Petrov invariants from the five spinor components via the classical
/// binary-quartic invariants i₄ = c₀c₄ − 4c₁c₃ + 3c₂² and
/// j₄ = c₀c₂c₄ + 2c₁c₂c₃ − c₂³ − c₀c₃² − c₁²c₄:
/// I = 2i₄, J = −6j₄, S = I³ − 6J² = 8(i₄³ − 27 j₄²).
pub fn spinor_invariants(c: &[f64; 5]) -> (f64, f64, f64) {
    let i4 = c[0] * c[4] - 4.0 * c[1] * c[3] + 3.0 * c[2] * c[2];
    let j4 = c[0] * c[2] * c[4] + 2.0 * c[1] * c[2] * c[3]
        - c[2].powi(3)
        - c[0] * c[3] * c[3]
        - c[1] * c[1] * c[4];
    let i = 2.0 * i4;
    let j = -6.0 * j4;
    (i, j, i.powi(3) - 6.0 * j * j)
}

/// Evaluate the spinor-path Petrov invariants (I, J, S) of a
/// second-framework key function at a point.
pub fn plebanski_ii_weyl(
    theta: &Expr,
    p: &Point,
    b: &Bindings,
) -> Result<(f64, f64, f64), CurvatureError> {
    let comps = plebanski_ii_weyl_components(theta);
    let mut c = [0.0f64; 5];
    for (k, e) in comps.iter().enumerate() {
        c[k] = e.eval(p, b)?;
    }
    Ok(spinor_invariants(&c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gindikin::{alpha_iih, twist};
    use crate::metrics::{
        plebanski_ii_metric, twisted_cubic_ppwave_inverse, twisted_inverse_ii,
    };
    use num::Zero;

    fn pt4(names: [&str; 4], vals: [f64; 4]) -> Point {
        let mut p = Point::new();
        for (n, v) in names.iter().zip(vals.iter()) {
            p.set(n, *v);
        }
        p
    }

    fn xyzw(x: f64, y: f64, z: f64, w: f64) -> Point {
        pt4(["x", "y", "z", "w"], [x, y, z, w])
    }

    fn red(x: f64, z: f64, kappa: f64, mu: f64) -> Point {
        pt4(["x", "z", "kappa", "mu"], [x, z, kappa, mu])
    }

    #[test]
    fn flat_metric_has_zero_curvature() {
        let g = plebanski_ii_metric(&Expr::zero());
        let jet = CurvatureJet::new(&g);
        let b = Bindings::new();
        for p in [xyzw(0.3, 1.2, 0.7, 0.5), xyzw(-1.1, 0.4, 2.0, -0.8)] {
            let cp = jet.at(&p, &b).unwrap();
            assert!(cp.max_riemann() < 1e-12, "flat metric has Riemann {}", cp.max_riemann());
        }
    }

    #[test]
    fn christoffel_matches_finite_differences() {
        // A generic (non-solution) key function exercises every Γ term.
        let theta = parse("x*y*z + w^2*y + x^3/6 + z*w").unwrap();
        let g = plebanski_ii_metric(&theta);
        let jet = CurvatureJet::new(&g);
        let b = Bindings::new();
        let p = xyzw(0.4, -0.7, 1.1, 0.6);
        let cp = jet.at(&p, &b).unwrap();
        let fd = fd_christoffel(&g, &p, &b, 1e-4).unwrap();
        let mut worst = 0.0f64;
        for a in 0..4 {
            for bb in 0..4 {
                for c in 0..4 {
                    worst = worst.max((cp.gamma[a][bb][c] - fd[a][bb][c]).abs());
                }
            }
        }
        assert!(worst < 1e-6, "Γ symbolic vs FD mismatch {worst}");
    }

    #[test]
    fn riemann_matches_finite_differences() {
        let theta = parse("x*y*z + w^2*y + x^3/6 + z*w").unwrap();
        let g = plebanski_ii_metric(&theta);
        let jet = CurvatureJet::new(&g);
        let b = Bindings::new();
        let p = xyzw(0.4, -0.7, 1.1, 0.6);
        let cp = jet.at(&p, &b).unwrap();
        let fd = fd_riemann_up(&g, &p, &b, 1e-4).unwrap();
        let mut worst = 0.0f64;
        let mut scale = 1.0f64;
        for a in 0..4 {
            for bb in 0..4 {
                for c in 0..4 {
                    for d in 0..4 {
                        worst = worst.max((cp.riem_up[a][bb][c][d] - fd[a][bb][c][d]).abs());
                        scale = scale.max(cp.riem_up[a][bb][c][d].abs());
                    }
                }
            }
        }
        assert!(worst / scale < 1e-5, "Riemann symbolic vs FD mismatch {worst}");
    }

    #[test]
    fn contravariant_chain_rule_matches_covariant_inverse() {
        // diag(1/(1+x²), 1, e^{y}, 1) contravariant vs its exact covariant
        // inverse must give identical curvature.
        let chart = crate::forms::Chart::new(&["x", "y", "z", "w"]);
        let e = |s: &str| parse(s).unwrap();
        let zero = Expr::zero();
        let hrows = vec![
            vec![e("1/(1 + x^2)"), zero.clone(), zero.clone(), zero.clone()],
            vec![zero.clone(), e("1"), zero.clone(), zero.clone()],
            vec![zero.clone(), zero.clone(), e("exp(y)"), zero.clone()],
            vec![zero.clone(), zero.clone(), zero.clone(), e("1")],
        ];
        let grows = vec![
            vec![e("1 + x^2"), zero.clone(), zero.clone(), zero.clone()],
            vec![zero.clone(), e("1"), zero.clone(), zero.clone()],
            vec![zero.clone(), zero.clone(), e("exp(-y)"), zero.clone()],
            vec![zero.clone(), zero.clone(), zero.clone(), e("1")],
        ];
        let h = MetricExpr::from_matrix(chart.clone(), &hrows, Variance::Contravariant);
        let g = MetricExpr::from_matrix(chart, &grows, Variance::Covariant);
        let b = Bindings::new();
        let p = xyzw(0.5, 0.3, -0.2, 0.9);
        let ch = CurvatureJet::new(&h).at(&p, &b).unwrap();
        let cg = CurvatureJet::new(&g).at(&p, &b).unwrap();
        let mut worst = 0.0f64;
        for a in 0..4 {
            for bb in 0..4 {
                for c in 0..4 {
                    for d in 0..4 {
                        worst = worst.max((ch.riem_low[a][bb][c][d] - cg.riem_low[a][bb][c][d]).abs());
                    }
                }
            }
        }
        assert!(worst < 1e-10, "contravariant jet disagrees with covariant: {worst}");
    }

    #[test]
    fn ppwave_metric_is_ricci_flat_but_curved() {
        let g = plebanski_ii_metric(&cubic_ppwave_key());
        let jet = CurvatureJet::new(&g);
        let b = Bindings::new();
        for p in [xyzw(0.3, 1.2, 0.7, 0.5), xyzw(-0.2, 0.9, 1.1, -0.3)] {
            let cp = jet.at(&p, &b).unwrap();
            assert!(cp.max_ricci() < 1e-9, "pp-wave Ricci {}", cp.max_ricci());
            assert!(cp.scalar.abs() < 1e-9);
            assert!(cp.max_riemann() > 1e-3, "pp-wave should be curved");
            assert!(cp.symmetry_residual() < 1e-9);
        }
    }

    #[test]
    fn quadratic_twist_of_flat_solution_stays_flat() {
        // θ = 0 with φ‴ = 0: the twist is a coordinate artefact, Riemann ≡ 0.
        let h = twisted_inverse_ii(&Expr::zero(), &parse("z^2/2 + 3*z + 1").unwrap());
        let jet = CurvatureJet::new(&h);
        let b = Bindings::new();
        for p in [xyzw(0.3, 1.2, 0.7, 0.5), xyzw(-0.6, 0.8, 1.4, 0.2)] {
            let cp = jet.at(&p, &b).unwrap();
            assert!(cp.max_riemann() < 1e-8, "quadratic twist Riemann {}", cp.max_riemann());
        }
    }

    #[test]
    fn twisted_metric_symmetries_and_sdve_property() {
        let h = twisted_inverse_ii(&cubic_ppwave_key(), &parse("z").unwrap());
        let jet = CurvatureJet::new(&h);
        let b = Bindings::new();
        for p in [xyzw(0.3, 1.2, 0.7, 0.5), xyzw(-0.2, 0.9, 1.1, -0.3)] {
            let cp = jet.at(&p, &b).unwrap();
            assert!(cp.max_ricci() < 1e-9, "twisted metric Ricci {}", cp.max_ricci());
            assert!(cp.scalar.abs() < 1e-9);
            assert!(cp.symmetry_residual() < 1e-9);
            assert!(cp.max_riemann() > 1e-3);
        }
    }

    #[test]
    fn reduced_cubic_metrics_are_ricci_flat() {
        let b = Bindings::new();
        for phi in ["z", "z^2", "z^3", "exp(z)"] {
            let h = twisted_cubic_ppwave_inverse(&parse(phi).unwrap());
            let jet = CurvatureJet::new(&h);
            for p in [red(0.3, 0.7, 2.0, 0.5), red(-0.4, 1.1, 1.3, -0.6)] {
                let cp = jet.at(&p, &b).unwrap();
                assert!(
                    cp.max_ricci() < 1e-8,
                    "φ = {phi}: Ricci {}",
                    cp.max_ricci()
                );
                assert!(cp.scalar.abs() < 1e-8);
            }
        }
    }

    #[test]
    fn calibration_constants_are_unity() {
        let (ki, kj) = *PETROV_KAPPAS;
        assert!((ki - 1.0).abs() < 1e-6, "κ_I = {ki}");
        assert!((kj - 1.0).abs() < 1e-6, "κ_J = {kj}");
    }

    /// Closed-form invariants of the reduced twisted cubic family as
    /// functions of the chart point, per twisting function.
    fn closed_form(phi: &str, p: &Point) -> (f64, f64, f64) {
        let z = p.get("z").unwrap();
        let k = p.get("kappa").unwrap();
        match phi {
            "z" => {
                let den = 2.0 * z * k + 3.0;
                let i = 3456.0 / den.powi(6);
                let j = -82944.0 / den.powi(9);
                (i, j, 0.0)
            }
            "z^2" => (0.0, 0.0, 0.0),
            "z^3" => {
                let den = 2.0 * k * z + 9.0;
                let i = -3456.0 * (4.0 * k * z + 9.0) / (z.powi(4) * den.powi(6));
                let j = -373248.0 * (4.0 * k * z + 12.0) / (z.powi(6) * den.powi(9));
                let s = -41278242816.0 * (16.0 * k * z + 45.0) / (z.powi(12) * den.powi(16));
                (i, j, s)
            }
            "exp(z)" => {
                let zz = z.exp();
                let den = 2.0 * k + 3.0;
                let i = -2304.0 * k / (zz.powi(2) * den.powi(6));
                let j = -41472.0 * (2.0 * k + 1.0) / (zz.powi(3) * den.powi(9));
                let s = -382205952.0 * (8.0 * k + 3.0) / (zz.powi(6) * den.powi(16));
                (i, j, s)
            }
            "-1/z" => {
                let zz = -1.0 / z;
                let den = 2.0 * k + 3.0 * zz;
                let i = 3456.0 * (3.0 * zz - 4.0 * k) * zz / den.powi(6);
                let j = -1492992.0 * zz.powi(2) * k / den.powi(9);
                let s = 41278242816.0 * zz.powi(3) * (3.0 * zz - 16.0 * k) / den.powi(16);
                (i, j, s)
            }
            "z^2/4 - 1" => {
                let zz = z * z / 4.0 - 1.0;
                let den = 2.0 * zz * k + 3.0 * (z / 2.0);
                (3456.0 / den.powi(6), -82944.0 / den.powi(9), 0.0)
            }
            _ => panic!("no closed form for {phi}"),
        }
    }

    fn check_family(phi: &str, pts: &[Point], expect_special: Option<bool>) {
        let h = twisted_cubic_ppwave_inverse(&parse(phi).unwrap());
        let jet = CurvatureJet::new(&h);
        let b = Bindings::new();
        for p in pts {
            let wd = selfdual_weyl_at(&jet, p, &b, 1e-8).unwrap();
            let (ie, je, se) = closed_form(phi, p);
            let itol = 1e-6 * (1.0 + ie.abs());
            let jtol = 1e-6 * (1.0 + je.abs());
            let stol = 1e-5 * (1.0 + se.abs());
            assert!((wd.i - ie).abs() < itol, "φ={phi}: I = {} vs {}", wd.i, ie);
            assert!((wd.j - je).abs() < jtol, "φ={phi}: J = {} vs {}", wd.j, je);
            assert!((wd.s - se).abs() < stol, "φ={phi}: S = {} vs {}", wd.s, se);
            assert!(wd.trace_residual < 1e-8, "trace residual {}", wd.trace_residual);
            assert!(wd.closure_residual < 1e-8, "closure residual {}", wd.closure_residual);
            assert!(
                wd.opposite_residual < 1e-8,
                "opposite-chirality residual {}",
                wd.opposite_residual
            );
            if let Some(spec) = expect_special {
                assert_eq!(wd.special, spec, "φ={phi}: speciality verdict");
            }
        }
    }

    #[test]
    fn invariants_linear_twist_match_closed_form() {
        check_family(
            "z",
            &[red(0.3, 0.7, 2.0, 0.5), red(-0.4, 1.2, 0.8, -0.6), red(0.1, 0.9, 1.5, 0.0)],
            Some(true),
        );
        // spot values at z = kappa = 1: I = 3456/5⁶, J = −82944/5⁹
        let h = twisted_cubic_ppwave_inverse(&parse("z").unwrap());
        let jet = CurvatureJet::new(&h);
        let wd = selfdual_weyl_at(&jet, &red(0.0, 1.0, 1.0, 0.2), &Bindings::new(), 1e-8).unwrap();
        assert!((wd.i - 0.2211840).abs() < 1e-6, "spot I = {}", wd.i);
        assert!((wd.j + 0.04246733).abs() < 1e-7, "spot J = {}", wd.j);
    }

    #[test]
    fn invariants_quadratic_twist_vanish_but_metric_is_curved() {
        let h = twisted_cubic_ppwave_inverse(&parse("z^2").unwrap());
        let jet = CurvatureJet::new(&h);
        let b = Bindings::new();
        for p in [red(0.3, 0.7, 2.0, 0.5), red(-0.4, 1.2, 0.8, -0.6)] {
            let cp = jet.at(&p, &b).unwrap();
            assert!(cp.max_riemann() > 1e-3, "metric should stay curved");
            let wd = selfdual_weyl_at(&jet, &p, &b, 1e-8).unwrap();
            assert!(wd.i.abs() < 1e-8, "I = {}", wd.i);
            assert!(wd.j.abs() < 1e-8, "J = {}", wd.j);
            assert!(norm3(&wd.w) > 1e-3, "operator nonzero nilpotent");
        }
    }

    #[test]
    fn invariants_cubic_twist_match_closed_form_and_are_nonspecial() {
        check_family(
            "z^3",
            &[red(0.3, 0.8, 1.1, 0.5), red(-0.4, 1.2, 0.8, -0.6)],
            Some(false),
        );
    }

    #[test]
    fn invariants_exponential_twist_match_closed_form() {
        check_family(
            "exp(z)",
            &[red(0.3, 0.4, 1.1, 0.5), red(-0.4, 0.8, 0.7, -0.6)],
            Some(false),
        );
    }

    #[test]
    fn invariants_reciprocal_twist_match_closed_form() {
        check_family(
            "-1/z",
            &[red(0.3, 2.2, 1.0, 0.5), red(-0.4, 2.8, 1.3, -0.6)],
            Some(false),
        );
    }

    #[test]
    fn invariants_sqrt_family_twist_is_special() {
        check_family(
            "z^2/4 - 1",
            &[red(0.3, 2.7, 1.0, 0.5), red(-0.4, 3.3, 1.3, -0.6)],
            Some(true),
        );
    }

    #[test]
    fn untwisted_ppwave_weyl_is_nilpotent() {
        let theta = cubic_ppwave_key();
        let g = plebanski_ii_metric(&theta);
        let jet = CurvatureJet::new(&g);
        let cand = GindikinCandidate::new(crate::gindikin::gind_iih(&theta)).unwrap();
        let b = Bindings::new();
        for p in [xyzw(0.3, 1.2, 0.7, 0.5), xyzw(-0.2, 0.9, 1.1, -0.3)] {
            let wd = selfdual_weyl(&jet, &cand, &p, &b, 1e-8).unwrap();
            assert!(norm3(&wd.w) > 1e-3, "pp-wave operator should be nonzero");
            assert!(wd.i.abs() < 1e-9 && wd.j.abs() < 1e-9, "type N: I = J = 0");
            assert!(wd.special, "nilpotent operator is special");
            let pr = wd.pencil_residual.unwrap();
            assert!(pr < 1e-8, "pencil side should be flat: {pr}");
            assert!(wd.opposite_residual < 1e-8);
        }
    }

    #[test]
    fn twisted_pencil_spans_flat_chirality() {
        let theta = cubic_ppwave_key();
        let phi = parse("z").unwrap();
        let h = twisted_inverse_ii(&theta, &phi);
        let jet = CurvatureJet::new(&h);
        let form = twist(&alpha_iih(&theta), &phi, &BigRational::zero()).unwrap();
        let cand = GindikinCandidate::new(form).unwrap();
        let b = Bindings::new();
        for p in [xyzw(0.3, 1.2, 0.7, 0.5), xyzw(-0.2, 0.9, 1.1, -0.3)] {
            let wd = selfdual_weyl(&jet, &cand, &p, &b, 1e-8).unwrap();
            assert!(wd.i.abs() > 1e-6, "twisted metric has nonzero I");
            let pr = wd.pencil_residual.unwrap();
            assert!(pr < 1e-8, "pencil side should be flat: {pr}");
            assert!(wd.opposite_residual < 1e-8);
        }
    }

    #[test]
    fn spinor_invariants_of_reference_quartics() {
        // c = (1,0,0,0,1): i₄ = 1, j₄ = 0 → I = 2, J = 0, S = 8.
        let (i, j, s) = spinor_invariants(&[1.0, 0.0, 0.0, 0.0, 1.0]);
        assert!((i - 2.0).abs() < 1e-12 && j.abs() < 1e-12 && (s - 8.0).abs() < 1e-12);
        // c = (1,0,0,0,0): nilpotent quartic, all invariants vanish.
        let (i, j, s) = spinor_invariants(&[1.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(i == 0.0 && j == 0.0 && s == 0.0);
        // c = (0,0,1,0,0): i₄ = 3, j₄ = −1 → I = 6, J = 6, S = 0 (type D).
        let (i, j, s) = spinor_invariants(&[0.0, 0.0, 1.0, 0.0, 0.0]);
        assert!((i - 6.0).abs() < 1e-12 && (j - 6.0).abs() < 1e-12 && s.abs() < 1e-12);
    }

    #[test]
    fn spinor_path_agrees_with_operator_path_on_ppwave() {
        // pp-waves are type N: the operator path must report a nonzero
        // nilpotent W and the spinor path a nonzero c₀ with the same
        // (vanishing) invariants.
        let theta = cubic_ppwave_key();
        let g = plebanski_ii_metric(&theta);
        let jet = CurvatureJet::new(&g);
        let b = Bindings::new();
        for p in [xyzw(0.3, 1.2, 0.7, 0.5), xyzw(-0.2, 0.9, 1.1, -0.3)] {
            let comps = plebanski_ii_weyl_components(&theta);
            let c0 = comps[0].eval(&p, &b).unwrap();
            assert!(c0.abs() > 1e-3, "c₀ should be nonzero");
            let (si, sj, ss) = plebanski_ii_weyl(&theta, &p, &b).unwrap();
            let wd = selfdual_weyl_at(&jet, &p, &b, 1e-8).unwrap();
            assert!((si - wd.i).abs() < 1e-6);
            assert!((sj - wd.j).abs() < 1e-6);
            assert!((ss - wd.s).abs() < 1e-6);
        }
    }

    #[test]
    fn speciality_scales_with_invariants() {
        let (s, special) = speciality(6.0, 6.0, 1e-10);
        assert!(s.abs() < 1e-9 && special);
        let (s, special) = speciality(2.0, 0.0, 1e-10);
        assert!((s - 8.0).abs() < 1e-12 && !special);
    }

    #[test]
    fn weyl_data_serializes_with_schema() {
        let h = twisted_cubic_ppwave_inverse(&parse("z").unwrap());
        let jet = CurvatureJet::new(&h);
        let wd = selfdual_weyl_at(&jet, &red(0.3, 0.7, 2.0, 0.5), &Bindings::new(), 1e-8).unwrap();
        let v = serde_json::to_value(&wd).unwrap();
        assert_eq!(v["schema"], 1);
        assert!(v["w"].is_array());
        assert!(v["i"].is_number() && v["j"].is_number() && v["s"].is_number());
        assert_eq!(v["pencil_residual"], serde_json::Value::Null);
    }
}
