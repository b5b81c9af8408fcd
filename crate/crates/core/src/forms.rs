//! Exterior algebra of differential forms and vector fields on a named
//! coordinate chart, with coefficients that are polynomials in the spectral
//! parameter λ over [`Expr`].
//!
//! Antisymmetry is canonical: only sorted coordinate multi-indices are
//! stored, with signs absorbed into the coefficients. λ-polynomials are
//! dense vectors of `Expr`, lowest degree first, with trailing zeros
//! trimmed. Identity-to-zero checks elsewhere are done by evaluating at a
//! rational λ panel and sampling chart points, never by normal-form
//! emptiness.

use crate::symexpr::{Bindings, EvalError, Expr, Point};
use num::rational::BigRational;
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

/// Ordered coordinate chart. Shared immutably between forms.
#[derive(Debug, PartialEq, Eq)]
pub struct Chart {
    coords: Vec<String>,
}

pub type ChartRef = Arc<Chart>;

impl Chart {
    pub fn new(coords: &[&str]) -> ChartRef {
        let names: Vec<String> = coords.iter().map(|s| s.to_string()).collect();
        let mut sorted = names.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), names.len(), "duplicate coordinate names");
        Arc::new(Chart { coords: names })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    pub fn coord(&self, i: usize) -> &str {
        &self.coords[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.coords.iter().position(|c| c == name)
    }

    /// Chart with one coordinate removed (for restriction to a hypersurface).
    pub fn without(&self, name: &str) -> ChartRef {
        let coords: Vec<String> = self
            .coords
            .iter()
            .filter(|c| c.as_str() != name)
            .cloned()
            .collect();
        assert_eq!(coords.len(), self.coords.len() - 1, "unknown coordinate");
        Arc::new(Chart { coords })
    }
}

#[derive(Debug, Error)]
pub enum FormError {
    #[error("chart mismatch: `{0:?}` vs `{1:?}`")]
    ChartMismatch(Vec<String>, Vec<String>),
    #[error("unknown coordinate `{0}`")]
    UnknownCoordinate(String),
    #[error("form not divisible by (lambda - {0}): nonzero remainder in entry {1:?}")]
    NotDivisible(BigRational, Vec<usize>),
    #[error("cannot take interior product into a 0-form")]
    DegreeZero,
}

/// Polynomial in λ with `Expr` coefficients, lowest degree first.
#[derive(Clone, Debug, PartialEq)]
pub struct LambdaPoly {
    coeffs: Vec<Expr>,
}

impl LambdaPoly {
    pub fn zero() -> Self {
        LambdaPoly { coeffs: vec![] }
    }

    pub fn constant(e: Expr) -> Self {
        LambdaPoly { coeffs: vec![e] }.trimmed()
    }

    pub fn from_coeffs(coeffs: Vec<Expr>) -> Self {
        LambdaPoly { coeffs }.trimmed()
    }

    fn trimmed(mut self) -> Self {
        while self.coeffs.last().is_some_and(Expr::is_zero) {
            self.coeffs.pop();
        }
        self
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// λ-degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeff(&self, k: usize) -> Expr {
        self.coeffs.get(k).cloned().unwrap_or_else(Expr::zero)
    }

    pub fn coeffs(&self) -> &[Expr] {
        &self.coeffs
    }

    pub fn add(&self, other: &LambdaPoly) -> LambdaPoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n)
            .map(|k| Expr::add(vec![self.coeff(k), other.coeff(k)]))
            .collect();
        LambdaPoly { coeffs }.trimmed()
    }

    pub fn scale(&self, e: &Expr) -> LambdaPoly {
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| Expr::mul(vec![e.clone(), c.clone()]))
            .collect();
        LambdaPoly { coeffs }.trimmed()
    }

    pub fn neg(&self) -> LambdaPoly {
        self.scale(&Expr::from_int(-1))
    }

    pub fn mul(&self, other: &LambdaPoly) -> LambdaPoly {
        if self.is_zero() || other.is_zero() {
            return LambdaPoly::zero();
        }
        let n = self.coeffs.len() + other.coeffs.len() - 1;
        let mut acc: Vec<Vec<Expr>> = vec![vec![]; n];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                acc[i + j].push(Expr::mul(vec![a.clone(), b.clone()]));
            }
        }
        LambdaPoly {
            coeffs: acc.into_iter().map(Expr::add).collect(),
        }
        .trimmed()
    }

    /// Coefficient-wise partial derivative with respect to a chart variable.
    pub fn diff(&self, v: &str) -> LambdaPoly {
        LambdaPoly {
            coeffs: self.coeffs.iter().map(|c| c.diff(v)).collect(),
        }
        .trimmed()
    }

    /// Polynomial evaluation at a rational λ.
    pub fn eval_lambda(&self, lambda: &BigRational) -> Expr {
        let lam = Expr::from_rational(lambda.clone());
        let mut terms = Vec::with_capacity(self.coeffs.len());
        let mut power = Expr::one();
        for c in &self.coeffs {
            terms.push(Expr::mul(vec![c.clone(), power.clone()]));
            power = Expr::mul(vec![power, lam.clone()]);
        }
        Expr::add(terms)
    }

    /// Exact division by (λ − λ₀); `None` if the remainder is nonzero
    /// (structurally — callers should pre-check with a numeric probe when
    /// coefficients are non-rational).
    pub fn divide_linear(&self, lambda0: &BigRational) -> Option<LambdaPoly> {
        if self.is_zero() {
            return Some(LambdaPoly::zero());
        }
        // synthetic division: p(λ) = (λ - λ₀) q(λ) + r
        let n = self.coeffs.len();
        let mut q = vec![Expr::zero(); n - 1];
        let mut carry = Expr::zero(); // running q-coefficient
        let lam0 = Expr::from_rational(lambda0.clone());
        for k in (0..n).rev() {
            if k == 0 {
                let r = Expr::add(vec![
                    self.coeff(0),
                    Expr::mul(vec![lam0.clone(), carry.clone()]),
                ]);
                if !r.is_zero() {
                    return None;
                }
            } else {
                let qk = Expr::add(vec![
                    self.coeff(k),
                    Expr::mul(vec![lam0.clone(), carry.clone()]),
                ]);
                q[k - 1] = qk.clone();
                carry = qk;
            }
        }
        Some(LambdaPoly { coeffs: q }.trimmed())
    }

    pub fn subst(&self, v: &str, r: &Expr) -> LambdaPoly {
        LambdaPoly {
            coeffs: self.coeffs.iter().map(|c| c.subst(v, r)).collect(),
        }
        .trimmed()
    }
}

/// Differential k-form with λ-polynomial coefficients.
///
/// Entries are keyed by strictly increasing coordinate multi-indices; a
/// missing entry is zero. Degree-0 forms use the empty multi-index.
#[derive(Clone, Debug)]
pub struct LambdaPolyForm {
    chart: ChartRef,
    degree: usize,
    entries: BTreeMap<Vec<usize>, LambdaPoly>,
}

impl LambdaPolyForm {
    pub fn zero(chart: ChartRef, degree: usize) -> Self {
        LambdaPolyForm {
            chart,
            degree,
            entries: BTreeMap::new(),
        }
    }

    /// 0-form from a scalar λ-polynomial.
    pub fn scalar(chart: ChartRef, p: LambdaPoly) -> Self {
        let mut f = LambdaPolyForm::zero(chart, 0);
        f.add_entry(&[], p);
        f
    }

    /// The coordinate 1-form `d name`.
    pub fn dcoord(chart: &ChartRef, name: &str) -> Self {
        let i = chart
            .index_of(name)
            .unwrap_or_else(|| panic!("unknown coordinate `{name}`"));
        let mut f = LambdaPolyForm::zero(chart.clone(), 1);
        f.add_entry(&[i], LambdaPoly::constant(Expr::one()));
        f
    }

    /// Exterior derivative of a scalar expression (λ-degree 0).
    pub fn d_scalar(chart: &ChartRef, e: &Expr) -> Self {
        let mut f = LambdaPolyForm::zero(chart.clone(), 1);
        for (i, c) in chart.coords().iter().enumerate() {
            f.add_entry(&[i], LambdaPoly::constant(e.diff(c)));
        }
        f
    }

    /// Coordinate volume form dx¹∧…∧dxⁿ.
    pub fn volume(chart: &ChartRef) -> Self {
        let n = chart.dim();
        let mut f = LambdaPolyForm::zero(chart.clone(), n);
        f.add_entry(&(0..n).collect::<Vec<_>>(), LambdaPoly::constant(Expr::one()));
        f
    }

    pub fn chart(&self) -> &ChartRef {
        &self.chart
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn is_zero_structurally(&self) -> bool {
        self.entries.is_empty()
    }

    /// Maximum λ-degree over entries; `None` if the form is zero.
    pub fn lambda_degree(&self) -> Option<usize> {
        self.entries.values().filter_map(LambdaPoly::degree).max()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Vec<usize>, &LambdaPoly)> {
        self.entries.iter()
    }

    pub fn entry(&self, idx: &[usize]) -> LambdaPoly {
        self.entries.get(idx).cloned().unwrap_or_else(LambdaPoly::zero)
    }

    /// Add `p · dx^{idx}` where `idx` need not be sorted; the permutation
    /// sign is absorbed. Repeated indices contribute nothing.
    pub fn add_entry(&mut self, idx: &[usize], p: LambdaPoly) {
        assert_eq!(idx.len(), self.degree, "multi-index length != form degree");
        if p.is_zero() {
            return;
        }
        let Some((sorted, sign)) = sort_index(idx) else {
            return; // repeated index
        };
        let signed = if sign > 0 { p } else { p.neg() };
        let slot = self.entries.entry(sorted).or_insert_with(LambdaPoly::zero);
        *slot = slot.add(&signed);
        // keep the map free of structural zeros
        let key_is_zero = slot.is_zero();
        if key_is_zero {
            let Some((sorted, _)) = sort_index(idx) else {
                unreachable!()
            };
            self.entries.remove(&sorted);
        }
    }

    fn check_chart(&self, other: &LambdaPolyForm) -> Result<(), FormError> {
        if self.chart != other.chart {
            return Err(FormError::ChartMismatch(
                self.chart.coords().to_vec(),
                other.chart.coords().to_vec(),
            ));
        }
        Ok(())
    }

    pub fn add(&self, other: &LambdaPolyForm) -> Result<LambdaPolyForm, FormError> {
        self.check_chart(other)?;
        assert_eq!(self.degree, other.degree, "degree mismatch in addition");
        let mut out = self.clone();
        for (idx, p) in &other.entries {
            out.add_entry(idx, p.clone());
        }
        Ok(out)
    }

    pub fn neg(&self) -> LambdaPolyForm {
        self.scale_poly(&LambdaPoly::constant(Expr::from_int(-1)))
    }

    pub fn sub(&self, other: &LambdaPolyForm) -> Result<LambdaPolyForm, FormError> {
        self.add(&other.neg())
    }

    pub fn scale(&self, e: &Expr) -> LambdaPolyForm {
        self.scale_poly(&LambdaPoly::constant(e.clone()))
    }

    pub fn scale_poly(&self, p: &LambdaPoly) -> LambdaPolyForm {
        let mut out = LambdaPolyForm::zero(self.chart.clone(), self.degree);
        for (idx, q) in &self.entries {
            out.add_entry(idx, q.mul(p));
        }
        out
    }

    /// Wedge product. Degrees exceeding the chart dimension give the zero
    /// top-degree-plus form (clamped to chart dimension for storage).
    pub fn wedge(&self, other: &LambdaPolyForm) -> Result<LambdaPolyForm, FormError> {
        self.check_chart(other)?;
        let degree = self.degree + other.degree;
        if degree > self.chart.dim() {
            return Ok(LambdaPolyForm::zero(self.chart.clone(), self.chart.dim()));
        }
        let mut out = LambdaPolyForm::zero(self.chart.clone(), degree);
        for (ia, pa) in &self.entries {
            for (ib, pb) in &other.entries {
                let mut idx = ia.clone();
                idx.extend_from_slice(ib);
                out.add_entry(&idx, pa.mul(pb));
            }
        }
        Ok(out)
    }

    /// Exterior derivative; λ-coefficients are differentiated independently.
    pub fn d(&self) -> LambdaPolyForm {
        let mut out = LambdaPolyForm::zero(self.chart.clone(), self.degree + 1);
        if self.degree + 1 > self.chart.dim() {
            return out;
        }
        let chart = self.chart.clone();
        for (idx, p) in &self.entries {
            for (i, c) in chart.coords().iter().enumerate() {
                let dp = p.diff(c);
                if dp.is_zero() {
                    continue;
                }
                let mut full = Vec::with_capacity(idx.len() + 1);
                full.push(i);
                full.extend_from_slice(idx);
                out.add_entry(&full, dp);
            }
        }
        out
    }

    /// Interior product (contraction) with a λ-polynomial vector field.
    pub fn interior(&self, v: &LambdaVectorField) -> Result<LambdaPolyForm, FormError> {
        if self.chart != v.chart {
            return Err(FormError::ChartMismatch(
                self.chart.coords().to_vec(),
                v.chart.coords().to_vec(),
            ));
        }
        if self.degree == 0 {
            return Err(FormError::DegreeZero);
        }
        let mut out = LambdaPolyForm::zero(self.chart.clone(), self.degree - 1);
        for (idx, p) in &self.entries {
            for (slot, &i) in idx.iter().enumerate() {
                let comp = &v.components[i];
                if comp.is_zero() {
                    continue;
                }
                let mut rest: Vec<usize> = idx.clone();
                rest.remove(slot);
                let mut term = p.mul(comp);
                if slot % 2 == 1 {
                    term = term.neg();
                }
                out.add_entry(&rest, term);
            }
        }
        Ok(out)
    }

    /// Lie derivative along `v` via the Cartan formula L_v = d∘ι_v + ι_v∘d.
    pub fn lie_derivative(&self, v: &LambdaVectorField) -> Result<LambdaPolyForm, FormError> {
        let term1 = if self.degree == 0 {
            LambdaPolyForm::zero(self.chart.clone(), 0)
        } else {
            self.interior(v)?.d()
        };
        let term2 = self.d().interior(v)?;
        term1.add(&term2)
    }

    /// Exact division of every entry by (λ − λ₀).
    pub fn divide_linear(&self, lambda0: &BigRational) -> Result<LambdaPolyForm, FormError> {
        let mut out = LambdaPolyForm::zero(self.chart.clone(), self.degree);
        for (idx, p) in &self.entries {
            match p.divide_linear(lambda0) {
                Some(q) => out.add_entry(idx, q),
                None => return Err(FormError::NotDivisible(lambda0.clone(), idx.clone())),
            }
        }
        Ok(out)
    }

    /// Restriction to the hypersurface `coord = value`: the coordinate is
    /// substituted in all coefficients and every entry containing d(coord)
    /// is dropped; the result lives on the smaller chart.
    pub fn restrict(&self, coord: &str, value: &Expr) -> Result<LambdaPolyForm, FormError> {
        let Some(ci) = self.chart.index_of(coord) else {
            return Err(FormError::UnknownCoordinate(coord.to_string()));
        };
        let sub_chart = self.chart.without(coord);
        let mut out = LambdaPolyForm::zero(sub_chart, self.degree);
        for (idx, p) in &self.entries {
            if idx.contains(&ci) {
                continue;
            }
            let remapped: Vec<usize> = idx
                .iter()
                .map(|&i| if i > ci { i - 1 } else { i })
                .collect();
            out.add_entry(&remapped, p.subst(coord, value));
        }
        Ok(out)
    }

    /// Coefficient-wise polynomial evaluation at rational λ (λ-degree 0).
    pub fn eval_at_lambda(&self, lambda: &BigRational) -> LambdaPolyForm {
        let mut out = LambdaPolyForm::zero(self.chart.clone(), self.degree);
        for (idx, p) in &self.entries {
            out.add_entry(idx, LambdaPoly::constant(p.eval_lambda(lambda)));
        }
        out
    }

    /// Substitute a chart variable in every coefficient (chart unchanged).
    pub fn subst(&self, v: &str, r: &Expr) -> LambdaPolyForm {
        let mut out = LambdaPolyForm::zero(self.chart.clone(), self.degree);
        for (idx, p) in &self.entries {
            out.add_entry(idx, p.subst(v, r));
        }
        out
    }

    /// Maximum |coefficient| over all entries and λ-coefficients at a point.
    pub fn max_abs_coeff(&self, p: &Point, b: &Bindings) -> Result<f64, EvalError> {
        let mut max = 0.0f64;
        for poly in self.entries.values() {
            for c in poly.coeffs() {
                max = max.max(c.eval(p, b)?.abs());
            }
        }
        Ok(max)
    }

    /// Serializable snapshot: entries as coordinate-name multi-indices with
    /// coefficient expressions rendered as text.
    pub fn to_json_value(&self) -> serde_json::Value {
        let entries: Vec<FormEntryJson> = self
            .entries
            .iter()
            .map(|(idx, p)| FormEntryJson {
                index: idx.iter().map(|&i| self.chart.coord(i).to_string()).collect(),
                coefficients: p.coeffs().iter().map(|c| c.to_string()).collect(),
            })
            .collect();
        serde_json::json!({
            "chart": self.chart.coords(),
            "degree": self.degree,
            "entries": entries,
        })
    }
}

#[derive(Serialize)]
struct FormEntryJson {
    index: Vec<String>,
    coefficients: Vec<String>,
}

impl fmt::Display for LambdaPolyForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.entries.is_empty() {
            return write!(f, "0");
        }
        for (n, (idx, p)) in self.entries.iter().enumerate() {
            if n > 0 {
                write!(f, " + ")?;
            }
            write!(f, "[")?;
            for (k, c) in p.coeffs().iter().enumerate() {
                if k > 0 {
                    write!(f, "; ")?;
                }
                write!(f, "L^{k}: {c}")?;
            }
            write!(f, "]")?;
            for &i in idx {
                write!(f, " d{}", self.chart.coord(i))?;
            }
        }
        Ok(())
    }
}

/// Sort a multi-index, returning the permutation sign; `None` on repeats.
fn sort_index(idx: &[usize]) -> Option<(Vec<usize>, i32)> {
    let mut v = idx.to_vec();
    let mut sign = 1i32;
    // insertion sort, counting transpositions
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && v[j - 1] > v[j] {
            v.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    for w in v.windows(2) {
        if w[0] == w[1] {
            return None;
        }
    }
    Some((v, sign))
}

/// Vector field with λ-polynomial components, one per chart coordinate.
#[derive(Clone, Debug)]
pub struct LambdaVectorField {
    chart: ChartRef,
    components: Vec<LambdaPoly>,
}

impl LambdaVectorField {
    pub fn new(chart: ChartRef, components: Vec<LambdaPoly>) -> Self {
        assert_eq!(components.len(), chart.dim(), "component count != dimension");
        LambdaVectorField { chart, components }
    }

    /// The coordinate field ∂/∂name.
    pub fn coordinate(chart: &ChartRef, name: &str) -> Self {
        let i = chart
            .index_of(name)
            .unwrap_or_else(|| panic!("unknown coordinate `{name}`"));
        let mut components = vec![LambdaPoly::zero(); chart.dim()];
        components[i] = LambdaPoly::constant(Expr::one());
        LambdaVectorField {
            chart: chart.clone(),
            components,
        }
    }

    /// Build from (coordinate name, scalar component) pairs, λ-degree 0.
    pub fn from_pairs(chart: &ChartRef, pairs: &[(&str, Expr)]) -> Self {
        let mut components = vec![LambdaPoly::zero(); chart.dim()];
        for (name, e) in pairs {
            let i = chart
                .index_of(name)
                .unwrap_or_else(|| panic!("unknown coordinate `{name}`"));
            components[i] = components[i].add(&LambdaPoly::constant(e.clone()));
        }
        LambdaVectorField {
            chart: chart.clone(),
            components,
        }
    }

    /// Build from (coordinate name, λ-polynomial component) pairs.
    pub fn from_poly_pairs(chart: &ChartRef, pairs: &[(&str, LambdaPoly)]) -> Self {
        let mut components = vec![LambdaPoly::zero(); chart.dim()];
        for (name, p) in pairs {
            let i = chart
                .index_of(name)
                .unwrap_or_else(|| panic!("unknown coordinate `{name}`"));
            components[i] = components[i].add(p);
        }
        LambdaVectorField {
            chart: chart.clone(),
            components,
        }
    }

    pub fn chart(&self) -> &ChartRef {
        &self.chart
    }

    pub fn components(&self) -> &[LambdaPoly] {
        &self.components
    }

    pub fn lambda_degree(&self) -> Option<usize> {
        self.components.iter().filter_map(LambdaPoly::degree).max()
    }

    /// Commutator [self, other], computed componentwise:
    /// [X,Y]^i = X^j ∂_j Y^i − Y^j ∂_j X^i.
    pub fn commutator(&self, other: &LambdaVectorField) -> Result<LambdaVectorField, FormError> {
        if self.chart != other.chart {
            return Err(FormError::ChartMismatch(
                self.chart.coords().to_vec(),
                other.chart.coords().to_vec(),
            ));
        }
        let chart = self.chart.clone();
        let mut components = vec![LambdaPoly::zero(); chart.dim()];
        for i in 0..chart.dim() {
            for (j, cj) in chart.coords().iter().enumerate() {
                let t1 = self.components[j].mul(&other.components[i].diff(cj));
                let t2 = other.components[j].mul(&self.components[i].diff(cj));
                components[i] = components[i].add(&t1).add(&t2.neg());
            }
        }
        Ok(LambdaVectorField { chart, components })
    }
}
