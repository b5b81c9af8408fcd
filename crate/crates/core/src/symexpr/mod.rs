//! Exact symbolic expression engine.
//!
//! Expressions are immutable trees with exact rational constants. The
//! canonical form is conservative: sums and products are flattened, ordered
//! by a fixed total order, identical terms are collected, and rational
//! constants are folded. No factorization or trigonometric identities are
//! attempted; zero-testing elsewhere in the crate is done by sampling, not
//! by canonical-form emptiness.
//!
//! Opaque function symbols (`phi`, `phi'`, `phi''`, ...) carry their
//! derivative order as data, so twisted-metric formulas can be manipulated
//! before a concrete function is chosen.

mod parse;

pub use parse::{parse, ParseError};

use num::bigint::BigInt;
use num::rational::BigRational;
use num::traits::{One, Signed, ToPrimitive, Zero};
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

/// Immutable symbolic expression. Cheap to clone (shared subtrees).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Expr(Arc<Node>);

/// Structural node. Constructed only through the canonicalizing smart
/// constructors on [`Expr`]; the variant order fixes the term order.
#[derive(PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Node {
    Rat(BigRational),
    Var(String),
    Sum(Vec<Expr>),
    Prod(Vec<Expr>),
    Pow(Expr, BigRational),
    Exp(Expr),
    Ln(Expr),
    /// Opaque unary function symbol: `name` differentiated `order` times,
    /// applied to `arg`.
    Func {
        name: String,
        order: u32,
        arg: Expr,
    },
}

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    UnboundVar(String),
    #[error("unbound opaque function `{0}`")]
    UnboundFunc(String),
    #[error("domain violation in `{context}`: {reason}")]
    Domain { context: String, reason: String },
}

fn rat_i64(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

impl Expr {
    fn new(node: Node) -> Self {
        Expr(Arc::new(node))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn zero() -> Self {
        Expr::from_int(0)
    }

    pub fn one() -> Self {
        Expr::from_int(1)
    }

    pub fn from_int(n: i64) -> Self {
        Expr::new(Node::Rat(rat_i64(n, 1)))
    }

    pub fn rat(n: i64, d: i64) -> Self {
        assert!(d != 0, "zero denominator");
        Expr::new(Node::Rat(rat_i64(n, d)))
    }

    pub fn from_rational(r: BigRational) -> Self {
        Expr::new(Node::Rat(r))
    }

    pub fn var(name: &str) -> Self {
        Expr::new(Node::Var(name.to_string()))
    }

    /// Opaque function symbol of the given derivative order.
    pub fn func(name: &str, order: u32, arg: Expr) -> Self {
        Expr::new(Node::Func {
            name: name.to_string(),
            order,
            arg,
        })
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.node(), Node::Rat(r) if r.is_zero())
    }

    pub fn is_one(&self) -> bool {
        matches!(self.node(), Node::Rat(r) if r.is_one())
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match self.node() {
            Node::Rat(r) => Some(r),
            _ => None,
        }
    }

    /// Number of nodes in the tree (shared subtrees counted repeatedly).
    pub fn node_count(&self) -> usize {
        match self.node() {
            Node::Rat(_) | Node::Var(_) => 1,
            Node::Sum(ts) | Node::Prod(ts) => 1 + ts.iter().map(Expr::node_count).sum::<usize>(),
            Node::Pow(b, _) => 1 + b.node_count(),
            Node::Exp(e) | Node::Ln(e) => 1 + e.node_count(),
            Node::Func { arg, .. } => 1 + arg.node_count(),
        }
    }

    // ---- canonicalizing constructors -------------------------------------

    pub fn add(terms: Vec<Expr>) -> Expr {
        let mut constant = BigRational::zero();
        // kernel -> rational coefficient
        let mut kernels: BTreeMap<Expr, BigRational> = BTreeMap::new();
        let mut stack = terms;
        while let Some(t) = stack.pop() {
            match t.node() {
                Node::Rat(r) => constant += r,
                Node::Sum(ts) => stack.extend(ts.iter().cloned()),
                _ => {
                    let (coeff, kernel) = split_coeff(&t);
                    *kernels.entry(kernel).or_insert_with(BigRational::zero) += coeff;
                }
            }
        }
        // a collected kernel may itself be a sum (e.g. from 3·(a+b) − 2·(a+b)
        // reducing to 1·(a+b)); distribute such entries over their terms so
        // they can cancel against flat terms like −a − b
        loop {
            let sum_kernels: Vec<Expr> = kernels
                .keys()
                .filter(|k| matches!(k.node(), Node::Sum(_)))
                .cloned()
                .collect();
            if sum_kernels.is_empty() {
                break;
            }
            for k in sum_kernels {
                let coeff = kernels.remove(&k).unwrap();
                if coeff.is_zero() {
                    continue;
                }
                let Node::Sum(ts) = k.node() else { unreachable!() };
                for t in ts {
                    match t.node() {
                        Node::Rat(r) => constant += r * &coeff,
                        _ => {
                            let (c, kernel) = split_coeff(t);
                            *kernels.entry(kernel).or_insert_with(BigRational::zero) +=
                                c * &coeff;
                        }
                    }
                }
            }
        }
        // nonzero (coefficient, kernel) pairs; the constant has kernel 1
        let mut parts: Vec<(BigRational, Option<Expr>)> = Vec::new();
        if !constant.is_zero() {
            parts.push((constant, None));
        }
        for (kernel, coeff) in kernels {
            if !coeff.is_zero() {
                parts.push((coeff, Some(kernel)));
            }
        }
        let rebuild = |coeff: BigRational, kernel: Option<Expr>| match kernel {
            None => Expr::from_rational(coeff),
            Some(k) if coeff.is_one() => k,
            Some(k) => Expr::mul(vec![Expr::from_rational(coeff), k]),
        };
        match parts.len() {
            0 => Expr::zero(),
            1 => {
                let (c, k) = parts.pop().unwrap();
                rebuild(c, k)
            }
            _ => {
                // extract the rational content (gcd of coefficients, signed
                // so the leading term is positive): scalar multiples of the
                // same sum then share one primitive Sum node, which is what
                // lets c₁·(a+b) and c₂·(a+b)-style terms cancel exactly
                let content = rational_content(parts.iter().map(|(c, _)| c));
                let mut out: Vec<Expr> = parts
                    .into_iter()
                    .map(|(c, k)| rebuild(c / &content, k))
                    .collect();
                out.sort();
                let sum = Expr::new(Node::Sum(out));
                if content.is_one() {
                    sum
                } else {
                    let mut fs = vec![Expr::from_rational(content), sum];
                    fs.sort();
                    Expr::new(Node::Prod(fs))
                }
            }
        }
    }

    pub fn mul(factors: Vec<Expr>) -> Expr {
        let mut constant = BigRational::one();
        // base -> accumulated exponent
        let mut bases: BTreeMap<Expr, BigRational> = BTreeMap::new();
        let mut stack = factors;
        while let Some(f) = stack.pop() {
            match f.node() {
                Node::Rat(r) => {
                    if r.is_zero() {
                        return Expr::zero();
                    }
                    constant *= r;
                }
                Node::Prod(fs) => stack.extend(fs.iter().cloned()),
                Node::Pow(b, e) => {
                    *bases.entry(b.clone()).or_insert_with(BigRational::zero) += e;
                }
                _ => {
                    *bases.entry(f.clone()).or_insert_with(BigRational::zero) +=
                        BigRational::one();
                }
            }
        }
        let mut out: Vec<Expr> = Vec::with_capacity(bases.len() + 1);
        for (base, exp) in bases {
            if exp.is_zero() {
                continue;
            }
            let p = Expr::pow_rat(base, exp);
            match p.node() {
                Node::Rat(r) => {
                    if r.is_zero() {
                        return Expr::zero();
                    }
                    constant *= r;
                }
                // pow can hand back a product (e.g. integer power of a
                // product); fold its factors in directly, they are canonical.
                Node::Prod(fs) => out.extend(fs.iter().cloned()),
                _ => out.push(p),
            }
        }
        if !constant.is_one() {
            out.push(Expr::from_rational(constant));
        }
        match out.len() {
            0 => Expr::one(),
            1 => out.pop().unwrap(),
            _ => {
                out.sort();
                Expr::new(Node::Prod(out))
            }
        }
    }

    pub fn neg(self) -> Expr {
        Expr::mul(vec![Expr::from_int(-1), self])
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        Expr::add(vec![a, b.neg()])
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        Expr::mul(vec![a, Expr::pow_rat(b, rat_i64(-1, 1))])
    }

    pub fn powi(self, n: i64) -> Expr {
        Expr::pow_rat(self, rat_i64(n, 1))
    }

    pub fn sqrt(self) -> Expr {
        Expr::pow_rat(self, rat_i64(1, 2))
    }

    /// `base^exp` with a rational exponent. Folds rational bases exactly when
    /// possible and collapses nested powers. Fractional powers assume the
    /// base is positive on the working domain (enforced by guards at
    /// evaluation time).
    pub fn pow_rat(base: Expr, exp: BigRational) -> Expr {
        if exp.is_zero() {
            return Expr::one();
        }
        if exp.is_one() {
            return base;
        }
        match base.node() {
            Node::Rat(r) => {
                if let Some(v) = rational_pow(r, &exp) {
                    return Expr::from_rational(v);
                }
                Expr::new(Node::Pow(base, exp))
            }
            Node::Pow(inner, p) => Expr::pow_rat(inner.clone(), p * &exp),
            Node::Exp(e) => Expr::exp(Expr::mul(vec![Expr::from_rational(exp), e.clone()])),
            Node::Prod(fs) if exp.is_integer() => {
                Expr::mul(fs.iter().map(|f| Expr::pow_rat(f.clone(), exp.clone())).collect())
            }
            _ => Expr::new(Node::Pow(base, exp)),
        }
    }

    pub fn exp(arg: Expr) -> Expr {
        if arg.is_zero() {
            return Expr::one();
        }
        if let Node::Ln(inner) = arg.node() {
            return inner.clone();
        }
        Expr::new(Node::Exp(arg))
    }

    pub fn ln(arg: Expr) -> Expr {
        if arg.is_one() {
            return Expr::zero();
        }
        if let Node::Exp(inner) = arg.node() {
            return inner.clone();
        }
        Expr::new(Node::Ln(arg))
    }

    // ---- calculus --------------------------------------------------------

    /// Exact partial derivative with respect to `v`.
    pub fn diff(&self, v: &str) -> Expr {
        match self.node() {
            Node::Rat(_) => Expr::zero(),
            Node::Var(name) => {
                if name == v {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Node::Sum(ts) => Expr::add(ts.iter().map(|t| t.diff(v)).collect()),
            Node::Prod(fs) => {
                let mut terms = Vec::with_capacity(fs.len());
                for (i, fi) in fs.iter().enumerate() {
                    let d = fi.diff(v);
                    if d.is_zero() {
                        continue;
                    }
                    let mut factors = vec![d];
                    for (j, fj) in fs.iter().enumerate() {
                        if j != i {
                            factors.push(fj.clone());
                        }
                    }
                    terms.push(Expr::mul(factors));
                }
                Expr::add(terms)
            }
            Node::Pow(b, e) => {
                let db = b.diff(v);
                if db.is_zero() {
                    return Expr::zero();
                }
                Expr::mul(vec![
                    Expr::from_rational(e.clone()),
                    Expr::pow_rat(b.clone(), e - BigRational::one()),
                    db,
                ])
            }
            Node::Exp(e) => Expr::mul(vec![self.clone(), e.diff(v)]),
            Node::Ln(e) => Expr::div(e.diff(v), e.clone()),
            Node::Func { name, order, arg } => Expr::mul(vec![
                Expr::func(name, order + 1, arg.clone()),
                arg.diff(v),
            ]),
        }
    }

    /// Iterated derivative along a list of variables.
    pub fn diff_many(&self, vars: &[&str]) -> Expr {
        vars.iter().fold(self.clone(), |e, v| e.diff(v))
    }

    /// Capture-free substitution `v := r`, followed by canonicalization.
    pub fn subst(&self, v: &str, r: &Expr) -> Expr {
        match self.node() {
            Node::Rat(_) => self.clone(),
            Node::Var(name) => {
                if name == v {
                    r.clone()
                } else {
                    self.clone()
                }
            }
            Node::Sum(ts) => Expr::add(ts.iter().map(|t| t.subst(v, r)).collect()),
            Node::Prod(fs) => Expr::mul(fs.iter().map(|f| f.subst(v, r)).collect()),
            Node::Pow(b, e) => Expr::pow_rat(b.subst(v, r), e.clone()),
            Node::Exp(e) => Expr::exp(e.subst(v, r)),
            Node::Ln(e) => Expr::ln(e.subst(v, r)),
            Node::Func { name, order, arg } => Expr::func(name, *order, arg.subst(v, r)),
        }
    }

    /// Replace the opaque symbol `name` by a concrete body in the formal
    /// variable `var`: occurrences of order `k` become the `k`-th derivative
    /// of the body with the argument substituted in.
    pub fn bind_func(&self, name: &str, var: &str, body: &Expr) -> Expr {
        match self.node() {
            Node::Rat(_) | Node::Var(_) => self.clone(),
            Node::Sum(ts) => Expr::add(ts.iter().map(|t| t.bind_func(name, var, body)).collect()),
            Node::Prod(fs) => Expr::mul(fs.iter().map(|f| f.bind_func(name, var, body)).collect()),
            Node::Pow(b, e) => Expr::pow_rat(b.bind_func(name, var, body), e.clone()),
            Node::Exp(e) => Expr::exp(e.bind_func(name, var, body)),
            Node::Ln(e) => Expr::ln(e.bind_func(name, var, body)),
            Node::Func {
                name: fname,
                order,
                arg,
            } => {
                let arg = arg.bind_func(name, var, body);
                if fname == name {
                    let mut d = body.clone();
                    for _ in 0..*order {
                        d = d.diff(var);
                    }
                    d.subst(var, &arg)
                } else {
                    Expr::func(fname, *order, arg)
                }
            }
        }
    }

    /// Free variables of the expression.
    pub fn free_vars(&self) -> std::collections::BTreeSet<String> {
        let mut out = std::collections::BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut std::collections::BTreeSet<String>) {
        match self.node() {
            Node::Rat(_) => {}
            Node::Var(name) => {
                out.insert(name.clone());
            }
            Node::Sum(ts) | Node::Prod(ts) => ts.iter().for_each(|t| t.collect_vars(out)),
            Node::Pow(b, _) => b.collect_vars(out),
            Node::Exp(e) | Node::Ln(e) => e.collect_vars(out),
            Node::Func { arg, .. } => arg.collect_vars(out),
        }
    }

    // ---- evaluation ------------------------------------------------------

    /// Double-precision evaluation at a point, with opaque symbols resolved
    /// through `bindings`.
    pub fn eval(&self, p: &Point, bindings: &Bindings) -> Result<f64, EvalError> {
        match self.node() {
            Node::Rat(r) => Ok(rational_to_f64(r)),
            Node::Var(name) => p
                .get(name)
                .ok_or_else(|| EvalError::UnboundVar(name.clone())),
            Node::Sum(ts) => {
                let mut acc = 0.0;
                for t in ts {
                    acc += t.eval(p, bindings)?;
                }
                Ok(acc)
            }
            Node::Prod(fs) => {
                let mut acc = 1.0;
                for f in fs {
                    acc *= f.eval(p, bindings)?;
                }
                Ok(acc)
            }
            Node::Pow(b, e) => {
                let bv = b.eval(p, bindings)?;
                if e.is_integer() {
                    let n = e.to_integer().to_i32().ok_or_else(|| EvalError::Domain {
                        context: self.to_string(),
                        reason: "exponent overflow".into(),
                    })?;
                    if bv == 0.0 && n < 0 {
                        return Err(EvalError::Domain {
                            context: self.to_string(),
                            reason: "division by zero".into(),
                        });
                    }
                    Ok(bv.powi(n))
                } else {
                    if bv < 0.0 {
                        return Err(EvalError::Domain {
                            context: self.to_string(),
                            reason: format!("fractional power of negative base {bv}"),
                        });
                    }
                    if bv == 0.0 && e.is_negative() {
                        return Err(EvalError::Domain {
                            context: self.to_string(),
                            reason: "division by zero".into(),
                        });
                    }
                    Ok(bv.powf(rational_to_f64(e)))
                }
            }
            Node::Exp(e) => Ok(e.eval(p, bindings)?.exp()),
            Node::Ln(e) => {
                let v = e.eval(p, bindings)?;
                if v <= 0.0 {
                    return Err(EvalError::Domain {
                        context: self.to_string(),
                        reason: format!("ln of non-positive argument {v}"),
                    });
                }
                Ok(v.ln())
            }
            Node::Func { name, order, arg } => {
                let f = bindings
                    .get(name)
                    .ok_or_else(|| EvalError::UnboundFunc(name.clone()))?;
                let x = arg.eval(p, bindings)?;
                f.eval_deriv(*order, x, bindings)
            }
        }
    }

    /// Exact rational evaluation when the expression and the environment are
    /// rational. Returns `None` if an irrational node is reached.
    pub fn eval_exact(&self, env: &BTreeMap<String, BigRational>) -> Option<BigRational> {
        match self.node() {
            Node::Rat(r) => Some(r.clone()),
            Node::Var(name) => env.get(name).cloned(),
            Node::Sum(ts) => {
                let mut acc = BigRational::zero();
                for t in ts {
                    acc += t.eval_exact(env)?;
                }
                Some(acc)
            }
            Node::Prod(fs) => {
                let mut acc = BigRational::one();
                for f in fs {
                    acc *= f.eval_exact(env)?;
                }
                Some(acc)
            }
            Node::Pow(b, e) => {
                let bv = b.eval_exact(env)?;
                rational_pow(&bv, e)
            }
            _ => None,
        }
    }
}

/// Split a canonical term into (rational coefficient, kernel without it).
/// Rational gcd of the coefficients, carrying the sign of the first one:
/// gcd(a/b, c/d) = gcd(a,c)/lcm(b,d), extended over the sequence.
fn rational_content<'a>(coeffs: impl Iterator<Item = &'a BigRational>) -> BigRational {
    use num::Integer;
    let mut numer: Option<num::BigInt> = None;
    let mut denom = num::BigInt::from(1);
    let mut sign = num::BigInt::from(1);
    for (i, c) in coeffs.enumerate() {
        if i == 0 && c < &BigRational::zero() {
            sign = num::BigInt::from(-1);
        }
        let n = c.numer().clone();
        let n = if n < num::BigInt::from(0) { -n } else { n };
        numer = Some(match numer {
            None => n,
            Some(g) => g.gcd(&n),
        });
        denom = denom.lcm(c.denom());
    }
    BigRational::new(sign * numer.unwrap_or_else(|| num::BigInt::from(1)), denom)
}

fn split_coeff(t: &Expr) -> (BigRational, Expr) {
    if let Node::Prod(fs) = t.node() {
        if let Some(pos) = fs.iter().position(|f| matches!(f.node(), Node::Rat(_))) {
            let coeff = match fs[pos].node() {
                Node::Rat(r) => r.clone(),
                _ => unreachable!(),
            };
            let rest: Vec<Expr> = fs
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != pos)
                .map(|(_, f)| f.clone())
                .collect();
            let kernel = if rest.len() == 1 {
                rest.into_iter().next().unwrap()
            } else {
                Expr::new(Node::Prod(rest))
            };
            return (coeff, kernel);
        }
    }
    (BigRational::one(), t.clone())
}

/// Exact rational power, if it exists (integer exponent, or exact roots of
/// numerator and denominator).
fn rational_pow(base: &BigRational, exp: &BigRational) -> Option<BigRational> {
    use num::traits::Pow;
    if exp.is_integer() {
        let n = exp.to_integer().to_i32()?;
        if base.is_zero() && n < 0 {
            return None;
        }
        if base.is_zero() {
            return Some(BigRational::zero());
        }
        return Some(Pow::pow(base.clone(), n as i64));
    }
    // fractional: base^(p/q) is exact only when base has an exact q-th root
    let p = exp.numer().to_i64()?;
    let q = exp.denom().to_u32()?;
    if base.is_negative() {
        return None;
    }
    let rn = exact_root(base.numer(), q)?;
    let rd = exact_root(base.denom(), q)?;
    let root = BigRational::new(rn, rd);
    Some(Pow::pow(root, p))
}

fn exact_root(n: &BigInt, q: u32) -> Option<BigInt> {
    if n.is_negative() {
        return None;
    }
    let r = n.nth_root(q);
    use num::traits::Pow;
    if Pow::pow(r.clone(), q) == *n {
        Some(r)
    } else {
        None
    }
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64()
        .unwrap_or_else(|| r.numer().to_f64().unwrap_or(f64::NAN) / r.denom().to_f64().unwrap_or(f64::NAN))
}

// ---- evaluation environment ---------------------------------------------

/// Assignment of floating values to variable names.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Point {
    vals: BTreeMap<String, f64>,
}

impl Point {
    pub fn new() -> Self {
        Point::default()
    }

    pub fn from_pairs(pairs: &[(&str, f64)]) -> Self {
        let mut p = Point::new();
        for (k, v) in pairs {
            p.set(k, *v);
        }
        p
    }

    pub fn set(&mut self, name: &str, v: f64) -> &mut Self {
        self.vals.insert(name.to_string(), v);
        self
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.vals.get(name).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &f64)> {
        self.vals.iter()
    }

    /// Copy with one coordinate shifted by `h` (for finite differences).
    pub fn shifted(&self, name: &str, h: f64) -> Point {
        let mut p = self.clone();
        let v = p.get(name).unwrap_or(0.0);
        p.set(name, v + h);
        p
    }
}

/// Concrete definition for an opaque function symbol: a body expression in
/// one formal variable, with derivatives precomputed.
#[derive(Clone, Debug)]
pub struct BoundFunc {
    var: String,
    derivs: Vec<Expr>,
}

const MAX_BOUND_ORDER: u32 = 8;

impl BoundFunc {
    pub fn new(var: &str, body: Expr) -> Self {
        let mut derivs = vec![body];
        for k in 0..MAX_BOUND_ORDER {
            let next = derivs[k as usize].diff(var);
            derivs.push(next);
        }
        BoundFunc {
            var: var.to_string(),
            derivs,
        }
    }

    fn eval_deriv(&self, order: u32, x: f64, bindings: &Bindings) -> Result<f64, EvalError> {
        let e = self
            .derivs
            .get(order as usize)
            .expect("derivative order beyond precomputed bound");
        let mut p = Point::new();
        p.set(&self.var, x);
        e.eval(&p, bindings)
    }

    pub fn body(&self) -> &Expr {
        &self.derivs[0]
    }

    pub fn var(&self) -> &str {
        &self.var
    }
}

/// Map from opaque symbol names to concrete definitions.
#[derive(Clone, Debug, Default)]
pub struct Bindings {
    funcs: BTreeMap<String, BoundFunc>,
}

impl Bindings {
    pub fn new() -> Self {
        Bindings::default()
    }

    pub fn bind(&mut self, name: &str, var: &str, body: Expr) -> &mut Self {
        self.funcs.insert(name.to_string(), BoundFunc::new(var, body));
        self
    }

    pub fn with(name: &str, var: &str, body: Expr) -> Self {
        let mut b = Bindings::new();
        b.bind(name, var, body);
        b
    }

    pub fn get(&self, name: &str) -> Option<&BoundFunc> {
        self.funcs.get(name)
    }
}

/// Central finite difference `(e(p + h e_v) - e(p - h e_v)) / 2h`: the
/// independent brute-force oracle for every derivative claim in the crate.
pub fn fd_oracle(
    e: &Expr,
    v: &str,
    p: &Point,
    h: f64,
    bindings: &Bindings,
) -> Result<f64, EvalError> {
    let plus = e.eval(&p.shifted(v, h), bindings)?;
    let minus = e.eval(&p.shifted(v, -h), bindings)?;
    Ok((plus - minus) / (2.0 * h))
}

// ---- display -------------------------------------------------------------

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

impl Expr {
    // precedence: 0 sum context, 1 product context, 2 power/atom context
    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, prec: u8) -> fmt::Result {
        match self.node() {
            Node::Rat(r) => {
                let needs_parens = (r.is_negative() && prec >= 1) || (!r.is_integer() && prec >= 2);
                if needs_parens {
                    write!(f, "({r})")
                } else {
                    write!(f, "{r}")
                }
            }
            Node::Var(name) => write!(f, "{name}"),
            Node::Sum(ts) => {
                if prec >= 1 {
                    write!(f, "(")?;
                }
                for (i, t) in ts.iter().enumerate() {
                    if i > 0 {
                        write!(f, " + ")?;
                    }
                    t.fmt_prec(f, 0)?;
                }
                if prec >= 1 {
                    write!(f, ")")?;
                }
                Ok(())
            }
            Node::Prod(fs) => {
                if prec >= 2 {
                    write!(f, "(")?;
                }
                for (i, t) in fs.iter().enumerate() {
                    if i > 0 {
                        write!(f, "*")?;
                    }
                    t.fmt_prec(f, 1)?;
                }
                if prec >= 2 {
                    write!(f, ")")?;
                }
                Ok(())
            }
            Node::Pow(b, e) => {
                b.fmt_prec(f, 2)?;
                if e.is_integer() && !e.is_negative() {
                    write!(f, "^{e}")
                } else {
                    write!(f, "^({e})")
                }
            }
            Node::Exp(e) => write!(f, "exp({e})"),
            Node::Ln(e) => write!(f, "ln({e})"),
            Node::Func { name, order, arg } => {
                write!(f, "{name}")?;
                for _ in 0..*order {
                    write!(f, "'")?;
                }
                write!(f, "({arg})")
            }
        }
    }
}
