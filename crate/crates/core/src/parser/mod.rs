//! The `.lagr` circuit description format and its reduction to the
//! structured normal form `L = 1/2 q'^T M q' + q'^T (B q + c) - V`.
//!
//! ```text
//! var x1 x2 x3 X
//! param E=5 L1=1 L2=2 k=3
//! lagrangian:
//!   X*(d(x3) - d(x1)) + E*cos(k*X)
//!   - 1/(2*L1)*(x1-x2)^2 - 1/(2*L2)*(x2-x3)^2
//! gauge: x1            # optional, repeatable
//! keep: x3             # optional
//! ```
//!
//! Comments run from `#` to end of line. Rational literals are written `p/q`.
//! Parameters are substituted as exact rationals during parsing; nothing
//! symbolic survives into the analysis.

mod grammar;

pub use grammar::{Ast, Span};

use std::collections::BTreeMap;

use grammar::{tokenize, BinOp, Parser, Token, TokenKind, RESERVED};

use crate::error::{Error, Result};
use crate::expr::{AffineForm, Expression, PhaseSpaceChart};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Structurally validated source: declarations, exact parameter bindings,
/// and unresolved expression trees.
#[derive(Debug, Clone)]
pub struct LagrangianSource<S> {
    pub text: String,
    pub variables: Vec<String>,
    pub parameters: BTreeMap<String, S>,
    lagrangian: Ast,
    gauges: Vec<Ast>,
    pub keep: Vec<String>,
}

impl<S: Scalar> LagrangianSource<S> {
    pub fn gauge_count(&self) -> usize {
        self.gauges.len()
    }
}

/// The normal form every accepted Lagrangian reduces to.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuredLagrangian<S: Scalar> {
    pub chart: PhaseSpaceChart,
    /// Symmetric kinetic matrix `M` of `1/2 q'^T M q'`.
    pub kinetic: Matrix<S>,
    /// Velocity-coordinate coupling `B` of `q'^T B q`, kept as written.
    pub coupling: Matrix<S>,
    /// Linear velocity term `c` of `q'^T c`.
    pub linear: Vec<S>,
    /// Potential, a coordinate-only expression.
    pub potential: Expression<S>,
    /// Parameter bindings, echoed for reports.
    pub parameters: BTreeMap<String, S>,
}

impl<S: Scalar> StructuredLagrangian<S> {
    /// Equality of the mathematical content, ignoring the parameter echo.
    pub fn same_structure(&self, other: &Self) -> bool {
        self.chart == other.chart
            && self.kinetic == other.kinetic
            && self.coupling == other.coupling
            && self.linear == other.linear
            && self.potential == other.potential
    }
}

/// Parses `.lagr` text into a validated source.
pub fn parse<S: Scalar>(text: &str) -> Result<LagrangianSource<S>> {
    let sections = split_sections(text)?;

    let mut variables: Vec<String> = Vec::new();
    let mut parameters: BTreeMap<String, S> = BTreeMap::new();
    let mut lagrangian: Option<Ast> = None;
    let mut gauges = Vec::new();
    let mut keep = Vec::new();

    for section in &sections {
        let tokens = tokenize(&section.lines)?;
        match section.keyword {
            Keyword::Var => {
                for tok in &tokens {
                    let name = expect_name(tok)?;
                    if RESERVED.contains(&name) {
                        return Err(tok.span_err(format!("`{name}` is a reserved word")));
                    }
                    if variables.iter().any(|v| v == name) || parameters.contains_key(name) {
                        return Err(Error::NameCollision { name: name.to_string() });
                    }
                    variables.push(name.to_string());
                }
            }
            Keyword::Param => {
                let mut parser = Parser::new(&tokens);
                while !parser.at_end() {
                    let (name, span) = parser.expect_ident()?;
                    if RESERVED.contains(&name.as_str()) {
                        return Err(Error::Syntax {
                            line: span.line,
                            col: span.col,
                            msg: format!("`{name}` is a reserved word"),
                        });
                    }
                    if variables.contains(&name) || parameters.contains_key(&name) {
                        return Err(Error::NameCollision { name });
                    }
                    parser.expect_eq()?;
                    let value_ast = parser.parse_value()?;
                    let value = eval_constant(&value_ast, &parameters)?;
                    parameters.insert(name, value);
                }
            }
            Keyword::Lagrangian => {
                if lagrangian.is_some() {
                    return Err(Error::Syntax {
                        line: section.header_line,
                        col: 1,
                        msg: "duplicate `lagrangian:` section".into(),
                    });
                }
                lagrangian = Some(Parser::new(&tokens).parse_all()?);
            }
            Keyword::Gauge => gauges.push(Parser::new(&tokens).parse_all()?),
            Keyword::Keep => {
                for tok in &tokens {
                    keep.push(expect_name(tok)?.to_string());
                }
            }
        }
    }

    let Some(lagrangian) = lagrangian else {
        return Err(Error::Syntax { line: 1, col: 1, msg: "missing `lagrangian:` section".into() });
    };

    // Every identifier must be a declared variable or a bound parameter.
    for ast in std::iter::once(&lagrangian).chain(gauges.iter()) {
        let mut idents = Vec::new();
        ast.idents(&mut idents);
        for (name, span) in idents {
            if !variables.contains(&name) && !parameters.contains_key(&name) {
                return Err(Error::UndeclaredIdentifier {
                    name,
                    line: span.line,
                    col: span.col,
                });
            }
        }
    }

    Ok(LagrangianSource {
        text: text.to_string(),
        variables,
        parameters,
        lagrangian,
        gauges,
        keep,
    })
}

/// Reduces a parsed source to the exact `(M, B, c, V)` decomposition.
///
/// Velocity dependence beyond quadratic, velocities inside trigonometric
/// arguments, and velocity coefficients that are not affine in the
/// coordinates are rejected.
pub fn canonicalize<S: Scalar>(src: &LagrangianSource<S>) -> Result<StructuredLagrangian<S>> {
    let chart = PhaseSpaceChart::new(&src.variables)?;
    let n = chart.len();
    let vel = eval_ast(&src.lagrangian, &EvalCtx {
        chart: &chart,
        params: &src.parameters,
        velocities: true,
        momenta: false,
    })?;

    let mut kinetic = Matrix::zeros(n, n);
    let mut coupling = Matrix::zeros(n, n);
    let mut linear = vec![S::zero(); n];
    let mut minus_potential = Expression::zero();

    for (mono, coeff) in &vel.terms {
        let degree: u32 = mono.values().sum();
        match degree {
            0 => minus_potential = minus_potential.add(coeff),
            1 => {
                let (&i, _) = mono.iter().next().unwrap();
                let Some(form) = coeff.as_affine() else {
                    return Err(Error::UnsupportedVelocityStructure(format!(
                        "coefficient of d({}) is not affine in the coordinates: {coeff}",
                        chart.coordinates()[i].name()
                    )));
                };
                for (v, c) in form.coeffs() {
                    if v.is_momentum() {
                        return Err(Error::Internal("momentum in parsed Lagrangian".into()));
                    }
                    coupling[(i, v.index())] = c.clone();
                }
                linear[i] = form.constant_part().clone();
            }
            2 => {
                let Some(c) = coeff.as_constant() else {
                    return Err(Error::UnsupportedVelocityStructure(format!(
                        "quadratic velocity term with non-constant coefficient: {coeff}"
                    )));
                };
                let idx: Vec<(usize, u32)> = mono.iter().map(|(&i, &e)| (i, e)).collect();
                match idx.as_slice() {
                    [(i, 2)] => kinetic[(*i, *i)] = c.clone() + c.clone(),
                    [(i, 1), (j, 1)] => {
                        kinetic[(*i, *j)] = c.clone();
                        kinetic[(*j, *i)] = c;
                    }
                    _ => unreachable!("degree-2 monomial"),
                }
            }
            _ => {
                return Err(Error::UnsupportedVelocityStructure(format!(
                    "velocity power {degree} exceeds quadratic"
                )))
            }
        }
    }

    Ok(StructuredLagrangian {
        chart,
        kinetic,
        coupling,
        linear,
        potential: minus_potential.neg(),
        parameters: src.parameters.clone(),
    })
}

impl<S: Scalar> LagrangianSource<S> {
    /// Gauge conditions as affine forms in the coordinates.
    pub fn gauge_conditions(&self, chart: &PhaseSpaceChart) -> Result<Vec<AffineForm<S>>> {
        self.gauges
            .iter()
            .map(|ast| {
                let e = eval_ast(ast, &EvalCtx {
                    chart,
                    params: &self.parameters,
                    velocities: false,
                    momenta: false,
                })?
                .into_expression()?;
                e.as_affine().ok_or_else(|| {
                    Error::InadmissibleGauge(format!("gauge condition is not affine: {e}"))
                })
            })
            .collect()
    }
}

/// Parses a standalone expression over an existing chart. Momenta may be
/// named directly; the velocity operator is not allowed.
pub fn parse_expression<S: Scalar>(
    text: &str,
    chart: &PhaseSpaceChart,
    params: &BTreeMap<String, S>,
) -> Result<Expression<S>> {
    let tokens = tokenize(&[(1, text.to_string())])?;
    let ast = Parser::new(&tokens).parse_all()?;
    eval_ast(&ast, &EvalCtx { chart, params, velocities: false, momenta: true })?
        .into_expression()
}

/// Renders a structured Lagrangian back to `.lagr` text. The output parses
/// and canonicalizes to the same structure.
pub fn to_dsl<S: Scalar>(sl: &StructuredLagrangian<S>) -> String {
    let names: Vec<&str> = sl.chart.coordinates().iter().map(|v| v.name()).collect();
    let mut parts: Vec<(S, String)> = Vec::new();
    let n = sl.chart.len();
    let half = S::ratio(1, 2);
    for i in 0..n {
        let mii = sl.kinetic[(i, i)].clone();
        if !mii.is_zero() {
            parts.push((mii * half.clone(), format!("d({})^2", names[i])));
        }
        for j in i + 1..n {
            let mij = sl.kinetic[(i, j)].clone();
            if !mij.is_zero() {
                parts.push((mij, format!("d({})*d({})", names[i], names[j])));
            }
        }
    }
    for i in 0..n {
        let mut form = AffineForm::constant(sl.linear[i].clone());
        for j in 0..n {
            form.add_term(&sl.chart.coordinates()[j], sl.coupling[(i, j)].clone());
        }
        if !form.is_zero() {
            parts.push((S::one(), format!("d({})*({})", names[i], form)));
        }
    }
    if !sl.potential.is_zero() {
        parts.push((-S::one(), format!("({})", sl.potential)));
    }

    let mut expr = String::new();
    if parts.is_empty() {
        expr.push('0');
    }
    for (k, (coeff, body)) in parts.iter().enumerate() {
        let mag = coeff.abs();
        if k == 0 {
            if coeff.is_negative() {
                expr.push('-');
            }
        } else if coeff.is_negative() {
            expr.push_str(" - ");
        } else {
            expr.push_str(" + ");
        }
        if !mag.is_one() {
            expr.push_str(&format!("{mag}*"));
        }
        expr.push_str(body);
    }
    format!("var {}\nlagrangian:\n  {}\n", names.join(" "), expr)
}

// ---------------------------------------------------------------------------
// Section structure

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Keyword {
    Var,
    Param,
    Lagrangian,
    Gauge,
    Keep,
}

struct Section {
    keyword: Keyword,
    header_line: usize,
    /// (original line number, text) pairs; columns are preserved by padding.
    lines: Vec<(usize, String)>,
}

fn split_sections(text: &str) -> Result<Vec<Section>> {
    let mut sections: Vec<Section> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let uncommented = raw.split('#').next().unwrap_or("");
        let trimmed = uncommented.trim();
        if trimmed.is_empty() {
            continue;
        }
        let word: String = trimmed
            .chars()
            .take_while(|c| c.is_alphanumeric() || *c == '_')
            .collect();
        let keyword = match word.as_str() {
            "var" => Some(Keyword::Var),
            "param" => Some(Keyword::Param),
            "lagrangian" => Some(Keyword::Lagrangian),
            "gauge" => Some(Keyword::Gauge),
            "keep" => Some(Keyword::Keep),
            _ => None,
        };
        match keyword {
            Some(kw) => {
                let word_start = uncommented.len() - uncommented.trim_start().len();
                let mut rest_idx = word_start + word.len();
                if matches!(kw, Keyword::Lagrangian | Keyword::Gauge | Keyword::Keep) {
                    let after = &uncommented[rest_idx..];
                    let colon = after.find(':').filter(|k| after[..*k].trim().is_empty());
                    match colon {
                        Some(k) => rest_idx += k + 1,
                        None => {
                            return Err(Error::Syntax {
                                line: line_no,
                                col: rest_idx + 1,
                                msg: format!("expected `:` after `{word}`"),
                            })
                        }
                    }
                }
                let padded = format!("{}{}", " ".repeat(rest_idx), &uncommented[rest_idx..]);
                sections.push(Section {
                    keyword: kw,
                    header_line: line_no,
                    lines: vec![(line_no, padded)],
                });
            }
            None => match sections.last_mut() {
                Some(s) if matches!(s.keyword, Keyword::Lagrangian | Keyword::Gauge) => {
                    s.lines.push((line_no, uncommented.to_string()));
                }
                _ => {
                    return Err(Error::Syntax {
                        line: line_no,
                        col: 1,
                        msg: "expected a section keyword (var, param, lagrangian, gauge, keep)"
                            .into(),
                    })
                }
            },
        }
    }
    Ok(sections)
}

fn expect_name(tok: &Token) -> Result<&str> {
    match &tok.kind {
        TokenKind::Ident(name) => Ok(name),
        _ => Err(tok.span_err("expected a name")),
    }
}

impl Token {
    fn span_err(&self, msg: impl Into<String>) -> Error {
        Error::Syntax { line: self.span.line, col: self.span.col, msg: msg.into() }
    }
}

fn eval_constant<S: Scalar>(ast: &Ast, params: &BTreeMap<String, S>) -> Result<S> {
    let mut idents = Vec::new();
    ast.idents(&mut idents);
    for (name, _) in &idents {
        if !params.contains_key(name) {
            return Err(Error::UnboundParameter { name: name.clone() });
        }
    }
    let empty_chart = PhaseSpaceChart::new::<&str>(&[]).expect("empty chart");
    let v = eval_ast(ast, &EvalCtx {
        chart: &empty_chart,
        params,
        velocities: false,
        momenta: false,
    })?;
    v.into_expression()?.as_constant().ok_or_else(|| {
        let span = ast.span();
        Error::Syntax {
            line: span.line,
            col: span.col,
            msg: "parameter value must be constant".into(),
        }
    })
}

// ---------------------------------------------------------------------------
// Evaluation into a velocity polynomial

/// Polynomial in the velocities with expression coefficients.
struct VelExpr<S: Scalar> {
    /// velocity monomial (coordinate index -> exponent) -> coefficient
    terms: BTreeMap<BTreeMap<usize, u32>, Expression<S>>,
}

impl<S: Scalar> VelExpr<S> {
    fn from_expression(e: Expression<S>) -> Self {
        let mut terms = BTreeMap::new();
        if !e.is_zero() {
            terms.insert(BTreeMap::new(), e);
        }
        VelExpr { terms }
    }

    fn velocity(i: usize) -> Self {
        let mut terms = BTreeMap::new();
        let mut mono = BTreeMap::new();
        mono.insert(i, 1);
        terms.insert(mono, Expression::one());
        VelExpr { terms }
    }

    fn insert(&mut self, mono: BTreeMap<usize, u32>, coeff: Expression<S>) {
        if coeff.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(mono) {
            Entry::Vacant(e) => {
                e.insert(coeff);
            }
            Entry::Occupied(mut e) => {
                let sum = e.get().add(&coeff);
                if sum.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }

    fn add(&self, other: &Self) -> Self {
        let mut out = VelExpr { terms: self.terms.clone() };
        for (m, c) in &other.terms {
            out.insert(m.clone(), c.clone());
        }
        out
    }

    fn neg(&self) -> Self {
        VelExpr {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c.neg())).collect(),
        }
    }

    fn mul(&self, other: &Self) -> Self {
        let mut out = VelExpr { terms: BTreeMap::new() };
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let mut mono = ma.clone();
                for (i, e) in mb {
                    *mono.entry(*i).or_insert(0) += e;
                }
                out.insert(mono, ca.mul(cb));
            }
        }
        out
    }

    fn pow(&self, exp: u32) -> Self {
        let mut out = VelExpr::from_expression(Expression::one());
        for _ in 0..exp {
            out = out.mul(self);
        }
        out
    }

    fn is_velocity_free(&self) -> bool {
        self.terms.keys().all(BTreeMap::is_empty)
    }

    fn into_expression(self) -> Result<Expression<S>> {
        if !self.is_velocity_free() {
            return Err(Error::UnsupportedVelocityStructure(
                "velocity is not allowed in this context".into(),
            ));
        }
        Ok(self
            .terms
            .into_values()
            .next()
            .unwrap_or_else(Expression::zero))
    }
}

struct EvalCtx<'a, S> {
    chart: &'a PhaseSpaceChart,
    params: &'a BTreeMap<String, S>,
    velocities: bool,
    momenta: bool,
}

fn eval_ast<S: Scalar>(ast: &Ast, ctx: &EvalCtx<'_, S>) -> Result<VelExpr<S>> {
    match ast {
        Ast::Int(lit, span) => {
            let v = S::from_integer_literal(lit).ok_or(Error::Syntax {
                line: span.line,
                col: span.col,
                msg: format!("cannot represent literal `{lit}`"),
            })?;
            Ok(VelExpr::from_expression(Expression::constant(v)))
        }
        Ast::Ident(name, span) => {
            if let Some(v) = ctx.params.get(name) {
                return Ok(VelExpr::from_expression(Expression::constant(v.clone())));
            }
            match ctx.chart.var(name) {
                Some(v) if ctx.momenta || !v.is_momentum() => {
                    Ok(VelExpr::from_expression(Expression::var(v)))
                }
                _ => Err(Error::UndeclaredIdentifier {
                    name: name.clone(),
                    line: span.line,
                    col: span.col,
                }),
            }
        }
        Ast::Velocity(name, span) => {
            if !ctx.velocities {
                return Err(Error::Syntax {
                    line: span.line,
                    col: span.col,
                    msg: "the velocity operator is not allowed here".into(),
                });
            }
            let i = ctx
                .chart
                .coordinates()
                .iter()
                .position(|v| v.name() == name)
                .ok_or_else(|| Error::UndeclaredIdentifier {
                    name: name.clone(),
                    line: span.line,
                    col: span.col,
                })?;
            Ok(VelExpr::velocity(i))
        }
        Ast::Neg(inner, _) => Ok(eval_ast(inner, ctx)?.neg()),
        Ast::Pow(base, exp, _) => Ok(eval_ast(base, ctx)?.pow(*exp)),
        Ast::Bin(op, a, b, span) => {
            let va = eval_ast(a, ctx)?;
            let vb = eval_ast(b, ctx)?;
            match op {
                BinOp::Add => Ok(va.add(&vb)),
                BinOp::Sub => Ok(va.add(&vb.neg())),
                BinOp::Mul => Ok(va.mul(&vb)),
                BinOp::Div => {
                    let divisor = vb
                        .into_expression()
                        .ok()
                        .and_then(|e| e.as_constant())
                        .ok_or(Error::DivisionByNonConstant)?;
                    if divisor.is_zero() {
                        return Err(Error::Syntax {
                            line: span.line,
                            col: span.col,
                            msg: "division by zero".into(),
                        });
                    }
                    let inv = S::one() / divisor;
                    Ok(va.mul(&VelExpr::from_expression(Expression::constant(inv))))
                }
            }
        }
        Ast::Sin(arg, span) | Ast::Cos(arg, span) => {
            let v = eval_ast(arg, ctx)?;
            if !v.is_velocity_free() {
                return Err(Error::UnsupportedVelocityStructure(
                    "velocity inside a trigonometric argument".into(),
                ));
            }
            let e = v.into_expression()?;
            let form = e.as_affine().ok_or(Error::Syntax {
                line: span.line,
                col: span.col,
                msg: format!("trigonometric argument must be affine: {e}"),
            })?;
            match ast {
                Ast::Sin(..) => Expression::sin_of(form),
                _ => Expression::cos_of(form),
            }
            .map(VelExpr::from_expression)
        }
    }
}
