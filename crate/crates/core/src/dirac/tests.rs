use super::*;
use crate::legendre::{base_hamiltonian, primary_constraints};
use crate::parser::{canonicalize, parse, parse_expression};
use crate::{Expr, Rat};
use num_traits::Zero;

fn analyze_text(text: &str) -> (StructuredLagrangian<Rat>, Expr, ConstraintClosure<Rat>) {
    let sl = canonicalize(&parse(text).unwrap()).unwrap();
    let h = base_hamiltonian(&sl).unwrap();
    let primaries = primary_constraints(&sl).unwrap();
    let closure = stabilize(&h, &primaries, &sl.chart).unwrap();
    (sl, h, closure)
}

const ISLAND: &str = "var x1 x2 x3 X\nparam E=5 L1=1 L2=2 k=3\nlagrangian:\n  \
    X*(d(x3) - d(x1)) + E*cos(k*X) - 1/(2*L1)*(x1-x2)^2 - 1/(2*L2)*(x2-x3)^2\n";

const COUPLED: &str = "var x1 x2 x3 X\nparam E=5 L1=1 L2=2 k=3 lam1=1 lam2=5 lam3=2\n\
    lagrangian:\n  X*(d(x3) - d(x1)) + E*cos(k*X) - 1/(2*L1)*(x1-x2)^2 - 1/(2*L2)*(x2-x3)^2\n  \
    + lam1*d(x1)*x3 + lam2*d(x1)*x2 + lam3*d(x2)*x3\n";

fn expr(text: &str, sl: &StructuredLagrangian<Rat>) -> Expr {
    parse_expression(text, &sl.chart, &std::collections::BTreeMap::new()).unwrap()
}

#[test]
fn island_generates_one_secondary() {
    let (sl, _, closure) = analyze_text(ISLAND);
    assert_eq!(closure.constraints.len(), 5);
    let secondary = &closure.constraints[4];
    assert_eq!(secondary.generation, Generation::Secondary);
    // Span of 3 x2 - x3 - 2 x1, whatever the stored scale.
    let expected = expr("3*x2 - x3 - 2*x1", &sl).as_affine().unwrap();
    assert_eq!(secondary.body.normalized(), expected.normalized());
}

#[test]
fn island_multipliers() {
    let (sl, _, closure) = analyze_text(ISLAND);
    let det = &closure.determined_multipliers;
    assert_eq!(det["alpha4"], expr("1/3*x1 - 1/3*x3", &sl));
    assert!(det["alpha5"].is_zero());
    // One gauge direction, aligned with chi1 + chi2 + chi3.
    assert_eq!(closure.free_multiplier_directions.len(), 1);
    let dir = &closure.free_multiplier_directions[0];
    assert_eq!(dir[..3], [Rat::int(1), Rat::int(1), Rat::int(1)]);
    assert!(dir[3].is_zero() && dir[4].is_zero());
}

#[test]
fn island_persistence_closes() {
    let (sl, h, closure) = analyze_text(ISLAND);
    let surface = closure.surface().unwrap();
    for (k, c) in closure.constraints.iter().enumerate() {
        let mut acc = poisson_bracket(&c.expression(), &h, &sl.chart);
        for l in 0..closure.constraints.len() {
            let ckl = closure.c_matrix[(k, l)].clone();
            if ckl.is_zero() {
                continue;
            }
            let alpha = closure
                .determined_multipliers
                .get(&format!("alpha{}", l + 1))
                .cloned()
                .unwrap_or_else(Expression::zero);
            acc = acc.add(&alpha.scale(&ckl));
        }
        assert!(
            surface.reduce(&acc).unwrap().is_zero(),
            "persistence of {} fails",
            c.label
        );
    }
}

#[test]
fn island_classification() {
    let (sl, _, closure) = analyze_text(ISLAND);
    let closure = classify(closure, None).unwrap();
    assert_eq!(closure.fcc.len(), 1);
    let psi = &closure.fcc[0].constraint;
    let expected = expr("Px1 + Px2 + Px3", &sl).as_affine().unwrap();
    assert_eq!(psi.body.normalized(), expected.normalized());
    assert_eq!(closure.scc_indices, vec![0, 1, 3, 4]);
    let dof = dof_count(&closure, &sl.chart);
    assert_eq!(dof.phase, 2);
    assert_eq!(dof.config, Rat::int(1));
    assert!(!dof.odd_warning);
}

#[test]
fn island_scc_submatrix_inverts_exactly() {
    let (_, _, closure) = analyze_text(ISLAND);
    let closure = classify(closure, None).unwrap();
    let sub = closure.c_matrix.principal_submatrix(&closure.scc_indices);
    let inv = sub.inverse().unwrap();
    assert_eq!(sub.mul(&inv), Matrix::identity(4));
    assert!(inv.is_antisymmetric());
}

#[test]
fn island_scc_override_matches_textbook_choice() {
    let (_, _, closure) = analyze_text(ISLAND);
    let labels: Vec<String> =
        ["chi2", "chi3", "chi4", "chi5"].iter().map(|s| s.to_string()).collect();
    let closure = classify(closure, Some(&labels)).unwrap();
    assert_eq!(closure.scc_indices, vec![1, 2, 3, 4]);
    // chi1 and chi2 cannot both be dropped.
    let bad: Vec<String> =
        ["chi3", "chi4"].iter().map(|s| s.to_string()).collect();
    let (_, _, closure2) = analyze_text(ISLAND);
    assert_eq!(
        classify(closure2, Some(&bad)).unwrap_err().kind(),
        "InvalidSccChoice"
    );
}

#[test]
fn coupled_has_no_secondaries_and_no_first_class() {
    let (sl, _, closure) = analyze_text(COUPLED);
    assert_eq!(closure.constraints.len(), 4);
    assert_eq!(closure.determined_multipliers.len(), 4);
    assert!(closure.free_multiplier_directions.is_empty());
    let closure = classify(closure, None).unwrap();
    assert!(closure.fcc.is_empty());
    assert_eq!(closure.scc_indices, vec![0, 1, 2, 3]);
    let dof = dof_count(&closure, &sl.chart);
    assert_eq!(dof.phase, 4);
    assert_eq!(dof.config, Rat::int(2));
}

#[test]
fn stabilization_is_order_independent() {
    let sl = canonicalize(&parse::<Rat>(ISLAND).unwrap()).unwrap();
    let h = base_hamiltonian(&sl).unwrap();
    let primaries = primary_constraints(&sl).unwrap();
    let mut permuted = primaries.clone();
    permuted.reverse();
    let a = classify(stabilize(&h, &primaries, &sl.chart).unwrap(), None).unwrap();
    let b = classify(stabilize(&h, &permuted, &sl.chart).unwrap(), None).unwrap();
    // Same surface span both ways.
    let sa = a.surface().unwrap();
    let sb = b.surface().unwrap();
    for c in &a.constraints {
        assert!(sb.reduce(&c.expression()).unwrap().is_zero());
    }
    for c in &b.constraints {
        assert!(sa.reduce(&c.expression()).unwrap().is_zero());
    }
    assert_eq!(a.fcc.len(), b.fcc.len());
    assert_eq!(a.scc_indices.len(), b.scc_indices.len());
}

#[test]
fn abelian_single_constraint_is_first_class() {
    let chart = PhaseSpaceChart::new(&["q"]).unwrap();
    let p = &chart.momenta()[0];
    let h: Expr = Expression::var(p).pow(2);
    let primary = Constraint::new("chi1", AffineForm::var(p), Generation::Primary);
    let closure = classify(stabilize(&h, &[primary], &chart).unwrap(), None).unwrap();
    assert_eq!(closure.fcc.len(), 1);
    assert!(closure.scc_indices.is_empty());
    assert_eq!(dof_count(&closure, &chart).phase, 0);
}

#[test]
fn unconstrained_system_keeps_all_dof() {
    let text = "var a b c\nlagrangian: 1/2*d(a)^2 + 1/2*d(b)^2 + 1/2*d(c)^2 - a*b\n";
    let (sl, _, closure) = analyze_text(text);
    assert!(closure.constraints.is_empty());
    let closure = classify(closure, None).unwrap();
    assert_eq!(dof_count(&closure, &sl.chart).phase, 6);
}

#[test]
fn degenerate_coupling_aborts_with_trig_residue() {
    // lam2 = lam3 makes the bracket matrix singular and pushes a sine term
    // into the persistence chain.
    let text = "var x1 x2 x3 X\nparam E=5 L1=1 L2=2 k=3 lam1=1 lam2=2 lam3=2\n\
        lagrangian:\n  X*(d(x3) - d(x1)) + E*cos(k*X) - 1/(2*L1)*(x1-x2)^2 - 1/(2*L2)*(x2-x3)^2\n  \
        + lam1*d(x1)*x3 + lam2*d(x1)*x2 + lam3*d(x2)*x3\n";
    let sl = canonicalize(&parse::<Rat>(text).unwrap()).unwrap();
    let h = base_hamiltonian(&sl).unwrap();
    let primaries = primary_constraints(&sl).unwrap();
    let err = stabilize(&h, &primaries, &sl.chart).unwrap_err();
    assert_eq!(err.kind(), "NonAffineSecondaryConstraint");
}

#[test]
fn inconsistent_lagrangian_is_detected() {
    // L = -x has the Euler-Lagrange equation 0 = 1: no dynamics at all.
    let sl = canonicalize(&parse::<Rat>("var x\nlagrangian: 0*d(x)^2 - x\n").unwrap()).unwrap();
    let h = base_hamiltonian(&sl).unwrap();
    let primaries = primary_constraints(&sl).unwrap();
    let err = stabilize(&h, &primaries, &sl.chart).unwrap_err();
    assert_eq!(err.kind(), "InconsistentConstraints");
}

#[test]
fn scan_reports_ranks() {
    let (sl, _, closure) = analyze_text(ISLAND);
    let closure = classify(closure, None).unwrap();
    let scan = singularity_scan(&sl, &closure);
    assert_eq!(scan.kinetic_rank, 0);
    assert_eq!(scan.kinetic_nullity, 4);
    assert_eq!(scan.bracket_rank, 4);
    assert_eq!(scan.n_primary, 4);
    assert_eq!(scan.n_secondary, 1);
    assert!(scan.flags.is_empty());
    assert!(!scan.notes.is_empty());
}

#[test]
fn constraint_count_tracks_mass_parameter() {
    let free = |mass: &str| {
        let text = format!("var x\nparam m={mass}\nlagrangian: 1/2*m*d(x)^2\n");
        let (_, _, closure) = analyze_text(&text);
        closure.constraints.len()
    };
    assert_eq!(free("1/1000"), 0);
    // m = 0 turns the momentum itself into a constraint.
    let sl = canonicalize(&parse::<Rat>("var x\nparam m=0\nlagrangian: 1/2*m*d(x)^2\n").unwrap())
        .unwrap();
    let primaries = primary_constraints(&sl).unwrap();
    assert_eq!(primaries.len(), 1);
}
