use super::*;
use crate::dirac::{classify, stabilize, ConstraintClosure};
use crate::legendre::{base_hamiltonian, primary_constraints};
use crate::parser::{canonicalize, parse, parse_expression, StructuredLagrangian};
use crate::reduce::{gauge_fix, DiracStructure};
use crate::scalar::Scalar as _;
use crate::{Expr, Rat};

const ISLAND: &str = "var x1 x2 x3 X\nparam E=5 L1=1 L2=2 k=3\nlagrangian:\n  \
    X*(d(x3) - d(x1)) + E*cos(k*X) - 1/(2*L1)*(x1-x2)^2 - 1/(2*L2)*(x2-x3)^2\n";

fn island_fixed(a: i64, b: i64, keep: Option<&[&str]>) -> (StructuredLagrangian<Rat>, Expr, DiracStructure<Rat>) {
    let sl = canonicalize(&parse::<Rat>(ISLAND).unwrap()).unwrap();
    let h = base_hamiltonian(&sl).unwrap();
    let closure: ConstraintClosure<Rat> = classify(
        stabilize(&h, &primary_constraints(&sl).unwrap(), &sl.chart).unwrap(),
        None,
    )
    .unwrap();
    let d = DiracStructure::new(&closure, &sl.chart, None).unwrap();
    let gauge_text = format!("{a}*x1 + {b}*x3");
    let gauge = parse_expression(&gauge_text, &sl.chart, &std::collections::BTreeMap::new())
        .unwrap()
        .as_affine()
        .unwrap();
    let keep_vars: Option<Vec<_>> =
        keep.map(|names| names.iter().map(|n| sl.chart.var(n).unwrap().clone()).collect());
    let fixed = gauge_fix(&d, &closure, &[gauge], keep_vars.as_deref()).unwrap();
    (sl, h, fixed)
}

fn harmonic() -> (StructuredLagrangian<Rat>, Expr, DiracStructure<Rat>) {
    let sl = canonicalize(
        &parse::<Rat>("var x\nlagrangian: 1/2*d(x)^2 - 1/2*x^2\n").unwrap(),
    )
    .unwrap();
    let h = base_hamiltonian(&sl).unwrap();
    let closure = classify(stabilize(&h, &[], &sl.chart).unwrap(), None).unwrap();
    let d = DiracStructure::new(&closure, &sl.chart, None).unwrap();
    (sl, h, d)
}

#[test]
fn island_equations_of_motion_in_flux_chart() {
    let (sl, h, fixed) = island_fixed(2, 3, Some(&["x3", "Px3"]));
    let (h_red, _) = fixed.eliminate(&h).unwrap();
    let eom = equations_of_motion(&h_red, &fixed).unwrap();
    let none = std::collections::BTreeMap::new();
    let by_name: std::collections::BTreeMap<&str, &Expr> = eom
        .variables
        .iter()
        .map(|v| v.name())
        .zip(eom.rhs.iter())
        .collect();
    assert_eq!(
        *by_name["x3"],
        parse_expression("6*sin(3*Px3)", &sl.chart, &none).unwrap()
    );
    assert_eq!(
        *by_name["Px3"],
        parse_expression("-5/6*x3", &sl.chart, &none).unwrap()
    );
}

#[test]
fn trivial_momentum_hamiltonian() {
    let (sl, _, d) = harmonic();
    let h = Expression::var(sl.chart.var("Px").unwrap());
    let eom = equations_of_motion(&h, &d).unwrap();
    let by_name: std::collections::BTreeMap<&str, &Expr> = eom
        .variables
        .iter()
        .map(|v| v.name())
        .zip(eom.rhs.iter())
        .collect();
    assert_eq!(*by_name["x"], Expression::one());
    assert!(by_name["Px"].is_zero());
}

#[test]
fn second_order_flux_evolution_is_gauge_independent() {
    let none = std::collections::BTreeMap::new();
    let mut forms = Vec::new();
    for (a, b) in [(1, 0), (2, 3)] {
        let (sl, h, fixed) = island_fixed(a, b, Some(&["x3", "Px3"]));
        let (h_red, _) = fixed.eliminate(&h).unwrap();
        let eom = equations_of_motion(&h_red, &fixed).unwrap();
        let x3 = Expression::var(sl.chart.var("x3").unwrap());
        let acc = eom.second_derivative(&x3, &fixed, &h_red).unwrap();
        assert_eq!(
            acc,
            parse_expression("-15*cos(3*Px3)*x3", &sl.chart, &none).unwrap(),
            "gauge ({a}, {b})"
        );
        forms.push(acc);
    }
    assert_eq!(forms[0], forms[1]);
}

#[test]
fn harmonic_period_return() {
    let (sl, h, d) = harmonic();
    let eom = equations_of_motion(&h, &d).unwrap();
    let mut init = BTreeMap::new();
    init.insert(sl.chart.var("x").unwrap().clone(), 1.0_f64);
    init.insert(sl.chart.var("Px").unwrap().clone(), 0.0);
    let t_end = 2.0 * std::f64::consts::PI;
    let traj = integrate(&eom, &init, 1e-3, t_end).unwrap();
    let x = traj.column(sl.chart.var("x").unwrap()).unwrap();
    assert!((x.last().unwrap() - 1.0).abs() < 1e-8, "x(T) = {}", x.last().unwrap());
    // Energy is conserved to integrator accuracy.
    let h_of = |row: &[f64]| {
        let assign: BTreeMap<_, _> =
            traj.variables.iter().cloned().zip(row.iter().copied()).collect();
        h.evaluate(&assign).unwrap()
    };
    let e0: f64 = h_of(&traj.states[0]);
    for row in &traj.states {
        assert!((h_of(row) - e0).abs() / e0.abs() < 1e-10);
    }
}

#[test]
fn rejects_bad_step_parameters() {
    let (sl, h, d) = harmonic();
    let eom = equations_of_motion(&h, &d).unwrap();
    let mut init = BTreeMap::new();
    init.insert(sl.chart.var("x").unwrap().clone(), 1.0_f64);
    init.insert(sl.chart.var("Px").unwrap().clone(), 0.0);
    assert_eq!(
        integrate(&eom, &init, 0.0, 1.0).unwrap_err().kind(),
        "InvalidFlag"
    );
    init.remove(sl.chart.var("Px").unwrap());
    assert_eq!(
        integrate(&eom, &init, 1e-3, 1.0).unwrap_err().kind(),
        "MissingInitialValue"
    );
}

#[test]
fn blowup_is_reported_with_step() {
    let (sl, _, _) = harmonic();
    let x = sl.chart.var("x").unwrap();
    // v' = v^2 blows up in finite time.
    let eom = EquationsOfMotion::<Rat> {
        variables: vec![x.clone()],
        rhs: vec![Expression::var(x).pow(2)],
    };
    let mut init = BTreeMap::new();
    init.insert(x.clone(), 1.0_f64);
    let err = integrate(&eom, &init, 0.5, 50.0).unwrap_err();
    match err {
        Error::NonFiniteState { step, .. } => assert!(step > 0),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn initial_state_through_substitution() {
    let (sl, _, fixed) = island_fixed(2, 3, None);
    // Default keep under this gauge eliminates x3; pin it anyway.
    let mut given = BTreeMap::new();
    given.insert(sl.chart.var("x3").unwrap().clone(), 1e-4_f64);
    given.insert(sl.chart.var("Px3").unwrap().clone(), 0.0);
    let state = solve_initial_state(
        fixed.kept_variables(),
        &fixed.substitution_map(),
        &given,
    )
    .unwrap();
    let x1 = state[sl.chart.var("x1").unwrap()];
    assert!((x1 - (-1.5e-4)).abs() < 1e-18, "x1(0) = {x1}");
    // Underdetermined data is refused.
    let mut partial = BTreeMap::new();
    partial.insert(sl.chart.var("x3").unwrap().clone(), 1e-4_f64);
    let err =
        solve_initial_state(fixed.kept_variables(), &fixed.substitution_map(), &partial)
            .unwrap_err();
    assert_eq!(err.kind(), "AmbiguousInitialState");
}

#[test]
fn reconstruction_and_csv() {
    let (sl, h, fixed) = island_fixed(1, 0, None);
    let (h_red, solved) = fixed.eliminate(&h).unwrap();
    let eom = equations_of_motion(&h_red, &fixed).unwrap();
    let mut init = BTreeMap::new();
    for v in &eom.variables {
        init.insert(v.clone(), 0.25_f64);
    }
    let traj = integrate(&eom, &init, 1e-2, 0.1)
        .unwrap()
        .with_reconstructed(&solved)
        .unwrap();
    // All chart variables present after reconstruction.
    for v in sl.chart.all_variables() {
        assert!(traj.column(v).is_some(), "missing {}", v.name());
    }
    // Gauge x1 = 0 pins x1 exactly.
    let x1 = traj.column(sl.chart.var("x1").unwrap()).unwrap();
    assert!(x1.iter().all(|v| *v == 0.0));
    let csv = traj.to_csv();
    let header = csv.lines().next().unwrap();
    assert!(header.starts_with("t,"));
    assert_eq!(csv.lines().count(), traj.times.len() + 1);
}

#[test]
fn linearization_of_harmonic_flow() {
    let (sl, h, d) = harmonic();
    let eom = equations_of_motion(&h, &d).unwrap();
    let origin: BTreeMap<_, _> = eom
        .variables
        .iter()
        .map(|v| (v.clone(), Rat::int(0)))
        .collect();
    let j = linearize(&eom, &origin).unwrap();
    assert_eq!(j[(0, 1)], Rat::int(1));
    assert_eq!(j[(1, 0)], Rat::int(-1));
    let freqs = oscillation_frequencies(&j);
    assert_eq!(freqs.len(), 1);
    assert!((freqs[0] - 1.0).abs() < 1e-10);
    let _ = sl;
}

#[test]
fn characteristic_polynomial_matches_hand_expansion() {
    // [[2, 1], [0, 3]] has char poly (x-2)(x-3) = x^2 - 5x + 6.
    let a = Matrix::from_rows(vec![
        vec![Rat::int(2), Rat::int(1)],
        vec![Rat::int(0), Rat::int(3)],
    ]);
    assert_eq!(
        characteristic_polynomial(&a),
        vec![Rat::int(6), Rat::int(-5), Rat::int(1)]
    );
}

#[test]
fn roots_of_oscillator_polynomial() {
    // x^2 (x^2 + 45): two zero roots and +/- i sqrt(45).
    let coeffs = [0.0, 0.0, 45.0, 0.0, 1.0];
    let mut roots = polynomial_roots(&coeffs);
    roots.sort_by(|a, b| a.im.partial_cmp(&b.im).unwrap());
    assert_eq!(roots.len(), 4);
    assert!((roots[0].im + 45.0_f64.sqrt()).abs() < 1e-9);
    assert!((roots[3].im - 45.0_f64.sqrt()).abs() < 1e-9);
    assert!(roots.iter().all(|z| z.re.abs() < 1e-9));
}

#[test]
fn deviation_metric() {
    let (sl, h, d) = harmonic();
    let eom = equations_of_motion(&h, &d).unwrap();
    let mut init = BTreeMap::new();
    init.insert(sl.chart.var("x").unwrap().clone(), 1.0_f64);
    init.insert(sl.chart.var("Px").unwrap().clone(), 0.0);
    let a = integrate(&eom, &init, 1e-2, 1.0).unwrap();
    let b = integrate(&eom, &init, 1e-2, 1.0).unwrap();
    let dev =
        max_relative_deviation(&a, &b, &[sl.chart.var("x").unwrap().clone()]).unwrap();
    assert_eq!(dev, 0.0);
}
