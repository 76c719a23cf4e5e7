//! Exact symbolic algebra for the class of phase-space functions closed under
//! Poisson brackets: polynomials times trigonometric factors whose arguments
//! are affine in the phase-space variables, with exact scalar coefficients.

mod bracket;
mod print;
pub mod sampling;
pub(crate) mod solve;
mod surface;

pub use bracket::poisson_bracket;
pub use surface::{reduce_modulo, Admission, PivotPolicy, ReductionSurface};

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::{Real, Scalar};

/// Whether a variable is a configuration coordinate or a conjugate momentum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VarKind {
    Coordinate,
    Momentum,
}

/// A phase-space variable. Identity is (kind, index, name); ordering puts all
/// coordinates before all momenta, each kind in index order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Variable {
    kind: VarKind,
    index: u32,
    name: Arc<str>,
}

impl Variable {
    pub(crate) fn new(kind: VarKind, index: u32, name: &str) -> Self {
        Variable { kind, index, name: Arc::from(name) }
    }

    pub fn kind(&self) -> VarKind {
        self.kind
    }

    pub fn index(&self) -> usize {
        self.index as usize
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn is_momentum(&self) -> bool {
        self.kind == VarKind::Momentum
    }
}

/// An ordered set of canonical pairs (q_i, p_i). Momenta are auto-named by
/// prefixing the coordinate name with `P`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhaseSpaceChart {
    coordinates: Vec<Variable>,
    momenta: Vec<Variable>,
}

impl PhaseSpaceChart {
    pub fn new<T: AsRef<str>>(coordinate_names: &[T]) -> Result<Self> {
        let mut seen = BTreeSet::new();
        let mut coordinates = Vec::new();
        let mut momenta = Vec::new();
        for (i, name) in coordinate_names.iter().enumerate() {
            let name = name.as_ref();
            let p_name = format!("P{name}");
            for n in [name, p_name.as_str()] {
                if !seen.insert(n.to_string()) {
                    return Err(Error::NameCollision { name: n.to_string() });
                }
            }
            coordinates.push(Variable::new(VarKind::Coordinate, i as u32, name));
            momenta.push(Variable::new(VarKind::Momentum, i as u32, &p_name));
        }
        Ok(PhaseSpaceChart { coordinates, momenta })
    }

    pub fn coordinates(&self) -> &[Variable] {
        &self.coordinates
    }

    pub fn momenta(&self) -> &[Variable] {
        &self.momenta
    }

    /// Canonical pairs in order.
    pub fn pairs(&self) -> impl Iterator<Item = (&Variable, &Variable)> {
        self.coordinates.iter().zip(self.momenta.iter())
    }

    pub fn len(&self) -> usize {
        self.coordinates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coordinates.is_empty()
    }

    /// Phase-space dimension, `2n`.
    pub fn phase_dim(&self) -> usize {
        2 * self.coordinates.len()
    }

    pub fn var(&self, name: &str) -> Option<&Variable> {
        self.coordinates
            .iter()
            .chain(self.momenta.iter())
            .find(|v| v.name() == name)
    }

    pub fn all_variables(&self) -> impl Iterator<Item = &Variable> {
        self.coordinates.iter().chain(self.momenta.iter())
    }

    pub fn momentum_of(&self, coordinate: &Variable) -> Option<&Variable> {
        self.coordinates
            .iter()
            .position(|c| c == coordinate)
            .map(|i| &self.momenta[i])
    }

    pub fn coordinate_of(&self, momentum: &Variable) -> Option<&Variable> {
        self.momenta
            .iter()
            .position(|p| p == momentum)
            .map(|i| &self.coordinates[i])
    }

    /// The partner of `v` in its canonical pair.
    pub fn conjugate(&self, v: &Variable) -> Option<&Variable> {
        match v.kind() {
            VarKind::Coordinate => self.momentum_of(v),
            VarKind::Momentum => self.coordinate_of(v),
        }
    }
}

/// A first-degree polynomial with exact coefficients: `sum c_v v + constant`.
/// Zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct AffineForm<S> {
    coeffs: BTreeMap<Variable, S>,
    constant: S,
}

impl<S: Scalar> AffineForm<S> {
    pub fn zero() -> Self {
        AffineForm { coeffs: BTreeMap::new(), constant: S::zero() }
    }

    pub fn constant(c: S) -> Self {
        AffineForm { coeffs: BTreeMap::new(), constant: c }
    }

    pub fn var(v: &Variable) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(v.clone(), S::one());
        AffineForm { coeffs, constant: S::zero() }
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (Variable, S)>, constant: S) -> Self {
        let mut f = AffineForm::constant(constant);
        for (v, c) in terms {
            f.add_term(&v, c);
        }
        f
    }

    pub fn add_term(&mut self, v: &Variable, c: S) {
        if c.is_zero() {
            return;
        }
        let entry = self.coeffs.entry(v.clone()).or_insert_with(S::zero);
        *entry = entry.clone() + c;
        if entry.is_zero() {
            self.coeffs.remove(v);
        }
    }

    pub fn coeff(&self, v: &Variable) -> S {
        self.coeffs.get(v).cloned().unwrap_or_else(S::zero)
    }

    pub fn constant_part(&self) -> &S {
        &self.constant
    }

    pub fn coeffs(&self) -> impl Iterator<Item = (&Variable, &S)> {
        self.coeffs.iter()
    }

    pub fn variables(&self) -> impl Iterator<Item = &Variable> {
        self.coeffs.keys()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty() && self.constant.is_zero()
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.constant = out.constant + other.constant.clone();
        for (v, c) in &other.coeffs {
            out.add_term(v, c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&-S::one()))
    }

    pub fn scale(&self, by: &S) -> Self {
        if by.is_zero() {
            return AffineForm::zero();
        }
        AffineForm {
            coeffs: self
                .coeffs
                .iter()
                .map(|(v, c)| (v.clone(), c.clone() * by.clone()))
                .collect(),
            constant: self.constant.clone() * by.clone(),
        }
    }

    pub fn neg(&self) -> Self {
        self.scale(&-S::one())
    }

    /// Replaces `v` by the form `g`, i.e. splices `coeff(v) * g` in.
    pub fn substitute(&self, v: &Variable, g: &AffineForm<S>) -> Self {
        let c = self.coeff(v);
        if c.is_zero() {
            return self.clone();
        }
        let mut out = self.clone();
        out.coeffs.remove(v);
        out.add_assign_scaled(g, &c);
        out
    }

    fn add_assign_scaled(&mut self, other: &Self, by: &S) {
        self.constant = self.constant.clone() + other.constant.clone() * by.clone();
        for (v, c) in &other.coeffs {
            self.add_term(v, c.clone() * by.clone());
        }
    }

    /// Like [`AffineForm::normalized`], but the sign is fixed so that the
    /// given variable carries a positive coefficient. Used for constraint
    /// bodies, which read best solved for their pivot.
    pub fn normalized_signed_by(&self, pivot: &Variable) -> Self {
        let n = self.normalized();
        if n.coeff(pivot).is_negative() {
            n.neg()
        } else {
            n
        }
    }

    /// Canonical representative of the ray through this form: the common
    /// content is divided out and the leading (lowest-ordered) variable gets
    /// a positive coefficient, so scalar multiples compare equal.
    pub fn normalized(&self) -> Self {
        if self.coeffs.is_empty() {
            return self.clone();
        }
        let out =
            if self.coeffs.values().next().unwrap().is_negative() { self.neg() } else { self.clone() };
        let content = out.content();
        let scale = match content {
            Some(c) if !c.is_zero() && !c.is_one() => S::one() / c,
            // The content computation bailed out; fall back to a unit
            // leading coefficient, which is just as canonical.
            None => S::one() / out.coeffs.values().next().unwrap().clone(),
            _ => return out,
        };
        out.scale(&scale)
    }

    /// gcd of all coefficients (and the constant), when computable.
    fn content(&self) -> Option<S> {
        let mut values = self
            .coeffs
            .values()
            .chain(if self.constant.is_zero() { None } else { Some(&self.constant) });
        let mut acc = values.next().unwrap().abs();
        for v in values {
            acc = rational_gcd(&acc, v)?;
        }
        Some(acc)
    }

    pub fn to_expression(&self) -> Expression<S> {
        let mut e = Expression::constant(self.constant.clone());
        for (v, c) in &self.coeffs {
            e = e.add(&Expression::var(v).scale(c));
        }
        e
    }

    pub fn evaluate<R: Real>(&self, assignment: &BTreeMap<Variable, R>) -> Result<R> {
        let mut acc = R::from_scalar(&self.constant);
        for (v, c) in &self.coeffs {
            let val = assignment
                .get(v)
                .ok_or_else(|| Error::UnboundVariable(v.name().to_string()))?;
            acc = acc + R::from_scalar(c) * *val;
        }
        Ok(acc)
    }
}

/// Euclidean gcd on exact scalars; for rationals this is the usual content
/// gcd (gcd of numerators over lcm of denominators). Returns `None` when the
/// floor step cannot be certified, so callers can fall back.
fn rational_gcd<S: Scalar>(a: &S, b: &S) -> Option<S> {
    let mut a = a.abs();
    let mut b = b.abs();
    for _ in 0..128 {
        if b.is_zero() {
            return Some(a);
        }
        let q = exact_floor(&(a.clone() / b.clone()))?;
        let r = a - q * b.clone();
        a = b;
        b = r;
    }
    None
}

/// Floor of a nonnegative exact scalar, seeded by the f64 image and then
/// certified by exact comparisons.
fn exact_floor<S: Scalar>(x: &S) -> Option<S> {
    let f = x.to_f64()?;
    if !f.is_finite() {
        return None;
    }
    let mut g = S::from_f64(f.floor()).or_else(|| S::from_i64(f.floor() as i64))?;
    for _ in 0..4 {
        if g > *x {
            g = g - S::one();
        } else if g.clone() + S::one() <= *x {
            g = g + S::one();
        } else {
            return Some(g);
        }
    }
    None
}

/// `sin` or `cos`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TrigKind {
    Cos,
    Sin,
}

/// One trigonometric factor with an affine, non-constant argument. The stored
/// argument has a positive leading coefficient; `canonical` reports whether
/// the term sign must flip to compensate (odd `sin`).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct TrigFactor<S> {
    kind: TrigKind,
    argument: AffineForm<S>,
}

impl<S: Scalar> TrigFactor<S> {
    /// Builds the canonical factor; the bool is true when the enclosing term
    /// coefficient must be negated. Errors on constant arguments.
    pub fn canonical(kind: TrigKind, argument: AffineForm<S>) -> Result<(Self, bool)> {
        if argument.is_constant() {
            return Err(Error::ConstantTrigArgument(format!("{}", argument)));
        }
        let leading_negative = argument
            .coeffs
            .values()
            .next()
            .map(S::is_negative)
            .unwrap_or(false);
        if leading_negative {
            let flipped = argument.neg();
            Ok((TrigFactor { kind, argument: flipped }, kind == TrigKind::Sin))
        } else {
            Ok((TrigFactor { kind, argument }, false))
        }
    }

    pub fn kind(&self) -> TrigKind {
        self.kind
    }

    pub fn argument(&self) -> &AffineForm<S> {
        &self.argument
    }
}

/// Monomial part of a term: variable -> positive exponent.
pub type Monomial = BTreeMap<Variable, u32>;

/// What identifies a term: its monomial and its multiset of trig factors.
/// Ordered graded-lexicographically on the monomial (higher total degree
/// first, then earlier variables with higher exponents), then by trig keys.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TermKey<S> {
    pub monomial: Monomial,
    pub trig: Vec<TrigFactor<S>>,
}

impl<S: Scalar> TermKey<S> {
    fn unit() -> Self {
        TermKey { monomial: BTreeMap::new(), trig: Vec::new() }
    }

    fn total_degree(&self) -> u32 {
        self.monomial.values().sum()
    }
}

impl<S: Scalar> Ord for TermKey<S> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        use std::cmp::Ordering;
        // Higher total degree sorts first.
        match other.total_degree().cmp(&self.total_degree()) {
            Ordering::Equal => {}
            o => return o,
        }
        // Lexicographic: at the earliest differing variable, the higher
        // exponent sorts first.
        let mut a = self.monomial.iter();
        let mut b = other.monomial.iter();
        loop {
            match (a.next(), b.next()) {
                (Some((va, ea)), Some((vb, eb))) => match va.cmp(vb) {
                    Ordering::Less => return Ordering::Less,
                    Ordering::Greater => return Ordering::Greater,
                    Ordering::Equal => match eb.cmp(ea) {
                        Ordering::Equal => continue,
                        o => return o,
                    },
                },
                (Some(_), None) => return Ordering::Less,
                (None, Some(_)) => return Ordering::Greater,
                (None, None) => break,
            }
        }
        self.trig.cmp(&other.trig)
    }
}

impl<S: Scalar> PartialOrd for TermKey<S> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// A canonical sum of terms. The zero expression is the empty sum; every
/// operation re-canonicalizes, so equal values compare equal structurally.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expression<S: Scalar> {
    terms: BTreeMap<TermKey<S>, S>,
}

impl<S: Scalar> Expression<S> {
    pub fn zero() -> Self {
        Expression { terms: BTreeMap::new() }
    }

    pub fn one() -> Self {
        Expression::constant(S::one())
    }

    pub fn constant(c: S) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(TermKey::unit(), c);
        }
        Expression { terms }
    }

    pub fn var(v: &Variable) -> Self {
        let mut monomial = BTreeMap::new();
        monomial.insert(v.clone(), 1);
        let mut terms = BTreeMap::new();
        terms.insert(TermKey { monomial, trig: Vec::new() }, S::one());
        Expression { terms }
    }

    /// `sin` of an affine argument; the zero argument collapses to 0.
    pub fn sin_of(argument: AffineForm<S>) -> Result<Self> {
        if argument.is_constant() {
            return if argument.is_zero() {
                Ok(Expression::zero())
            } else {
                Err(Error::ConstantTrigArgument(format!("{}", argument)))
            };
        }
        let (factor, negate) = TrigFactor::canonical(TrigKind::Sin, argument)?;
        let coeff = if negate { -S::one() } else { S::one() };
        Ok(Expression::from_parts(coeff, BTreeMap::new(), vec![factor]))
    }

    /// `cos` of an affine argument; the zero argument collapses to 1.
    pub fn cos_of(argument: AffineForm<S>) -> Result<Self> {
        if argument.is_constant() {
            return if argument.is_zero() {
                Ok(Expression::one())
            } else {
                Err(Error::ConstantTrigArgument(format!("{}", argument)))
            };
        }
        let (factor, _) = TrigFactor::canonical(TrigKind::Cos, argument)?;
        Ok(Expression::from_parts(S::one(), BTreeMap::new(), vec![factor]))
    }

    fn from_parts(coeff: S, monomial: Monomial, trig: Vec<TrigFactor<S>>) -> Self {
        let mut terms = BTreeMap::new();
        if !coeff.is_zero() {
            let mut trig = trig;
            trig.sort();
            terms.insert(TermKey { monomial, trig }, coeff);
        }
        Expression { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&TermKey<S>, &S)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// The constant value when the expression has no variable content.
    pub fn as_constant(&self) -> Option<S> {
        if self.terms.is_empty() {
            return Some(S::zero());
        }
        if self.terms.len() == 1 {
            let (key, coeff) = self.terms.iter().next().unwrap();
            if key.monomial.is_empty() && key.trig.is_empty() {
                return Some(coeff.clone());
            }
        }
        None
    }

    /// Extracts an affine form when the expression is trig-free of degree <= 1.
    pub fn as_affine(&self) -> Option<AffineForm<S>> {
        let mut form: AffineForm<S> = AffineForm::zero();
        for (key, coeff) in &self.terms {
            if !key.trig.is_empty() || key.total_degree() > 1 {
                return None;
            }
            match key.monomial.iter().next() {
                None => form.constant = form.constant.clone() + coeff.clone(),
                Some((v, 1)) => form.add_term(v, coeff.clone()),
                Some(_) => return None,
            }
        }
        Some(form)
    }

    pub fn variables(&self) -> BTreeSet<Variable> {
        let mut out = BTreeSet::new();
        for key in self.terms.keys() {
            out.extend(key.monomial.keys().cloned());
            for t in &key.trig {
                out.extend(t.argument.variables().cloned());
            }
        }
        out
    }

    pub fn contains(&self, v: &Variable) -> bool {
        self.terms.keys().any(|key| {
            key.monomial.contains_key(v)
                || key.trig.iter().any(|t| !t.argument.coeff(v).is_zero())
        })
    }

    fn insert(&mut self, key: TermKey<S>, coeff: S) {
        if coeff.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(key) {
            Entry::Vacant(e) => {
                e.insert(coeff);
            }
            Entry::Occupied(mut e) => {
                let sum = e.get().clone() + coeff;
                if sum.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (key, coeff) in &other.terms {
            out.insert(key.clone(), coeff.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        Expression {
            terms: self
                .terms
                .iter()
                .map(|(k, c)| (k.clone(), -c.clone()))
                .collect(),
        }
    }

    pub fn scale(&self, by: &S) -> Self {
        if by.is_zero() {
            return Expression::zero();
        }
        Expression {
            terms: self
                .terms
                .iter()
                .map(|(k, c)| (k.clone(), c.clone() * by.clone()))
                .collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Expression::zero();
        for (ka, ca) in &self.terms {
            for (kb, cb) in &other.terms {
                let mut monomial = ka.monomial.clone();
                for (v, e) in &kb.monomial {
                    *monomial.entry(v.clone()).or_insert(0) += e;
                }
                let mut trig = ka.trig.clone();
                trig.extend(kb.trig.iter().cloned());
                trig.sort();
                out.insert(TermKey { monomial, trig }, ca.clone() * cb.clone());
            }
        }
        out
    }

    pub fn pow(&self, exp: u32) -> Self {
        let mut out = Expression::one();
        for _ in 0..exp {
            out = out.mul(self);
        }
        out
    }

    /// Partial derivative with respect to `v`. The class is closed under
    /// differentiation: trig factors reproduce trig factors.
    pub fn derivative(&self, v: &Variable) -> Self {
        let mut out = Expression::zero();
        for (key, coeff) in &self.terms {
            // Power-rule contribution from the monomial.
            if let Some(&e) = key.monomial.get(v) {
                let mut monomial = key.monomial.clone();
                if e == 1 {
                    monomial.remove(v);
                } else {
                    monomial.insert(v.clone(), e - 1);
                }
                out.insert(
                    TermKey { monomial, trig: key.trig.clone() },
                    coeff.clone() * S::int(e as i64),
                );
            }
            // Chain-rule contribution from each trig factor.
            for (i, factor) in key.trig.iter().enumerate() {
                let slope = factor.argument.coeff(v);
                if slope.is_zero() {
                    continue;
                }
                let (new_factor, flip, extra_sign) = match factor.kind {
                    TrigKind::Sin => {
                        let (f, flip) =
                            TrigFactor::canonical(TrigKind::Cos, factor.argument.clone())
                                .expect("non-constant argument");
                        (f, flip, S::one())
                    }
                    TrigKind::Cos => {
                        let (f, flip) =
                            TrigFactor::canonical(TrigKind::Sin, factor.argument.clone())
                                .expect("non-constant argument");
                        (f, flip, -S::one())
                    }
                };
                let mut trig: Vec<TrigFactor<S>> = key
                    .trig
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, t)| t.clone())
                    .collect();
                trig.push(new_factor);
                trig.sort();
                let mut c = coeff.clone() * slope * extra_sign;
                if flip {
                    c = -c;
                }
                out.insert(TermKey { monomial: key.monomial.clone(), trig }, c);
            }
        }
        out
    }

    /// Numerical evaluation. Every variable that occurs must be assigned.
    pub fn evaluate<R: Real>(&self, assignment: &BTreeMap<Variable, R>) -> Result<R> {
        let mut acc = R::zero();
        for (key, coeff) in &self.terms {
            let mut term = R::from_scalar(coeff);
            for (v, &e) in &key.monomial {
                let val = assignment
                    .get(v)
                    .ok_or_else(|| Error::UnboundVariable(v.name().to_string()))?;
                term = term * val.powi(e as i32);
            }
            for factor in &key.trig {
                let arg = factor.argument.evaluate(assignment)?;
                term = term
                    * match factor.kind {
                        TrigKind::Sin => arg.sin(),
                        TrigKind::Cos => arg.cos(),
                    };
            }
            acc = acc + term;
        }
        Ok(acc)
    }

    /// Exact evaluation at a rational point. Only points sending every trig
    /// argument to zero are representable.
    pub fn evaluate_exact(&self, assignment: &BTreeMap<Variable, S>) -> Result<S> {
        let mut acc = S::zero();
        for (key, coeff) in &self.terms {
            let mut term = coeff.clone();
            for (v, &e) in &key.monomial {
                let val = assignment
                    .get(v)
                    .ok_or_else(|| Error::UnboundVariable(v.name().to_string()))?;
                for _ in 0..e {
                    term = term * val.clone();
                }
            }
            for factor in &key.trig {
                let mut arg = factor.argument.constant_part().clone();
                for (v, c) in factor.argument.coeffs() {
                    let val = assignment
                        .get(v)
                        .ok_or_else(|| Error::UnboundVariable(v.name().to_string()))?;
                    arg = arg + c.clone() * val.clone();
                }
                if !arg.is_zero() {
                    return Err(Error::UnsupportedLinearizationPoint(format!(
                        "{}",
                        factor.argument
                    )));
                }
                term = match factor.kind {
                    TrigKind::Sin => S::zero(),
                    TrigKind::Cos => term,
                };
            }
            acc = acc + term;
        }
        Ok(acc)
    }

    /// Substitutes inside trigonometric arguments only, leaving polynomial
    /// occurrences alone. Used to rewrite coordinates that would otherwise be
    /// trapped inside a cosine when the surrounding variable is eliminated.
    pub fn substitute_in_trig(&self, map: &BTreeMap<Variable, AffineForm<S>>) -> Result<Self> {
        let mut out = Expression::zero();
        for (key, coeff) in &self.terms {
            let mut acc =
                Expression::from_parts(coeff.clone(), key.monomial.clone(), Vec::new());
            for factor in &key.trig {
                let mut arg = factor.argument.clone();
                for (v, g) in map {
                    arg = arg.substitute(v, g);
                }
                let trig_expr = match factor.kind {
                    TrigKind::Sin => Expression::sin_of(arg)?,
                    TrigKind::Cos => Expression::cos_of(arg)?,
                };
                acc = acc.mul(&trig_expr);
            }
            out = out.add(&acc);
        }
        Ok(out)
    }

    /// Substitutes each pivot variable by its affine replacement. The map is
    /// applied once, simultaneously.
    pub fn substitute(&self, map: &BTreeMap<Variable, AffineForm<S>>) -> Result<Self> {
        let mut out = Expression::zero();
        for (key, coeff) in &self.terms {
            let mut acc = Expression::constant(coeff.clone());
            for (v, &e) in &key.monomial {
                let factor = match map.get(v) {
                    Some(g) => g.to_expression(),
                    None => Expression::var(v),
                };
                acc = acc.mul(&factor.pow(e));
            }
            for factor in &key.trig {
                let mut arg = factor.argument.clone();
                for (v, g) in map {
                    arg = arg.substitute(v, g);
                }
                let trig_expr = match factor.kind {
                    TrigKind::Sin => Expression::sin_of(arg)?,
                    TrigKind::Cos => Expression::cos_of(arg)?,
                };
                acc = acc.mul(&trig_expr);
            }
            out = out.add(&acc);
        }
        Ok(out)
    }
}

impl<S: Scalar> std::iter::Sum for Expression<S> {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Expression::zero(), |acc, e| acc.add(&e))
    }
}
