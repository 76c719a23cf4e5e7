//! End-to-end analysis pipeline and its machine-readable report.
//!
//! The report is deterministic: struct fields serialize in a fixed order,
//! maps are sorted, and every expression is rendered in the canonical grammar
//! the parser accepts, so reports double as regression fixtures.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::dirac::{
    classify, dof_count, singularity_scan, stabilize, ConstraintClosure, DiagnosticReport,
    DofCount,
};
use crate::error::{Error, Result};
use crate::expr::{AffineForm, Expression, Variable};
use crate::legendre::{base_hamiltonian, momenta, primary_constraints, ConstraintClass};
use crate::parser::{canonicalize, parse, parse_expression, LagrangianSource, StructuredLagrangian};
use crate::quantize::{canonical_rescaling, commutator_table, CanonicalRescaling, QuantumTable};
use crate::reduce::{darboux, gauge_fix, CanonicalChart, DiracStructure};
use crate::scalar::Scalar;

/// Caller-supplied knobs, typically from CLI flags.
#[derive(Debug, Clone, Default)]
pub struct AnalysisOptions {
    /// `None` inherits the file's gauge conditions; `Some` replaces them
    /// (including `Some(vec![])`, which suppresses gauge fixing).
    pub gauges: Option<Vec<String>>,
    /// `None` inherits the file's keep list; `Some` replaces it.
    pub keep: Option<Vec<String>>,
    /// Overrides the second-class complement choice by constraint label.
    pub scc_choice: Option<Vec<String>>,
}

/// The full pipeline result, with every intermediate stage available.
#[derive(Debug)]
pub struct Analysis<S: Scalar> {
    pub source: LagrangianSource<S>,
    pub structured: StructuredLagrangian<S>,
    pub hamiltonian: Expression<S>,
    pub closure: ConstraintClosure<S>,
    pub dof: DofCount<S>,
    pub diagnostics: DiagnosticReport,
    pub gauges: Vec<AffineForm<S>>,
    /// Second-class structure after gauge fixing (or the ungauged structure
    /// when no first-class constraints exist / no gauges were supplied).
    pub structure: DiracStructure<S>,
    pub reduced_hamiltonian: Expression<S>,
    pub eliminated: BTreeMap<Variable, AffineForm<S>>,
    /// Absent while first-class constraints remain unfixed.
    pub chart: Option<CanonicalChart<S>>,
    pub rescaling: Option<CanonicalRescaling<S>>,
    pub quantum_table: Option<QuantumTable<S>>,
    pub warnings: Vec<String>,
}

impl<S: Scalar> Analysis<S> {
    pub fn gauge_is_fixed(&self) -> bool {
        self.closure.fcc.is_empty() || !self.gauges.is_empty()
    }
}

/// Runs parse, canonicalize, Legendre, stabilization, classification, DOF
/// counting, gauge fixing, elimination, Darboux construction, and
/// quantization over a `.lagr` source text.
pub fn analyze<S: Scalar>(text: &str, options: &AnalysisOptions) -> Result<Analysis<S>> {
    let source = parse::<S>(text)?;
    let structured = canonicalize(&source)?;
    let chart = &structured.chart;
    let hamiltonian = base_hamiltonian(&structured)?;
    let primaries = primary_constraints(&structured)?;
    let closure = classify(
        stabilize(&hamiltonian, &primaries, chart)?,
        options.scc_choice.as_deref(),
    )?;
    let dof = dof_count(&closure, chart);
    let diagnostics = singularity_scan(&structured, &closure);

    let mut warnings = Vec::new();
    if dof.odd_warning {
        warnings.push(format!(
            "phase-space degree-of-freedom count {} is odd; classification is suspect",
            dof.phase
        ));
    }

    // Gauge conditions: CLI overrides replace the file's.
    let gauges: Vec<AffineForm<S>> = match &options.gauges {
        None => source.gauge_conditions(chart)?,
        Some(overrides) => overrides
            .iter()
            .map(|g| {
                let e = parse_expression(g, chart, &source.parameters)?;
                let form = e.as_affine().ok_or_else(|| {
                    Error::InadmissibleGauge(format!("gauge condition is not affine: {e}"))
                })?;
                if form.variables().any(Variable::is_momentum) {
                    return Err(Error::InadmissibleGauge(format!(
                        "gauge condition must involve coordinates only: {form}"
                    )));
                }
                Ok(form)
            })
            .collect::<Result<_>>()?,
    };

    // Keep list: CLI overrides replace the file's.
    let keep_names: Vec<String> =
        options.keep.clone().unwrap_or_else(|| source.keep.clone());
    let keep_vars: Option<Vec<Variable>> = if keep_names.is_empty() {
        None
    } else {
        Some(
            keep_names
                .iter()
                .map(|n| {
                    chart
                        .var(n)
                        .cloned()
                        .ok_or_else(|| Error::UnboundVariable(n.clone()))
                })
                .collect::<Result<_>>()?,
        )
    };

    let structure = if closure.fcc.is_empty() {
        if !gauges.is_empty() {
            return Err(Error::GaugeCountMismatch { expected: 0, got: gauges.len() });
        }
        DiracStructure::new(&closure, chart, keep_vars.as_deref())?
    } else if gauges.is_empty() {
        warnings.push(format!(
            "{} first-class constraint(s) left unfixed; supply gauge conditions to reach \
             canonical degrees of freedom",
            closure.fcc.len()
        ));
        DiracStructure::new(&closure, chart, keep_vars.as_deref())?
    } else {
        let ungauged = DiracStructure::new(&closure, chart, None)?;
        gauge_fix(&ungauged, &closure, &gauges, keep_vars.as_deref())?
    };

    let (reduced_hamiltonian, eliminated) = structure.eliminate(&hamiltonian)?;

    let fully_fixed = closure.fcc.is_empty() || !gauges.is_empty();
    let (canonical, rescaling, quantum_table) = if fully_fixed {
        let dchart = darboux(&structure);
        let rescaling = canonical_rescaling(&structure, &dchart)?;
        let all_vars: Vec<Variable> = chart.all_variables().cloned().collect();
        let table = commutator_table(&structure, &all_vars)?;
        (Some(dchart), Some(rescaling), Some(table))
    } else {
        (None, None, None)
    };

    Ok(Analysis {
        source,
        structured,
        hamiltonian,
        closure,
        dof,
        diagnostics,
        gauges,
        structure,
        reduced_hamiltonian,
        eliminated,
        chart: canonical,
        rescaling,
        quantum_table,
        warnings,
    })
}

// ---------------------------------------------------------------------------
// Serializable snapshot

#[derive(Debug, Serialize)]
pub struct AnalysisReport {
    pub schema: u32,
    pub input: InputEcho,
    pub lagrangian: LagrangianSummary,
    pub momenta: Vec<MomentumEntry>,
    pub hamiltonian: String,
    pub constraints: Vec<ConstraintEntry>,
    pub first_class: Vec<FirstClassEntry>,
    pub second_class: Vec<String>,
    pub multipliers: MultiplierSummary,
    pub dof: DofEntry,
    pub brackets: Vec<BracketEntry>,
    pub gauge: Vec<GaugeEntry>,
    pub kept: Vec<String>,
    pub eliminated: BTreeMap<String, String>,
    pub reduced_hamiltonian: String,
    pub canonical_chart: Option<ChartEntry>,
    pub quantum_table: Option<Vec<QuantumEntry>>,
    pub rescaling: Option<RescalingEntry>,
    pub diagnostics: DiagnosticReport,
    pub warnings: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct InputEcho {
    pub variables: Vec<String>,
    pub momenta: Vec<String>,
    pub parameters: BTreeMap<String, String>,
    pub keep: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct LagrangianSummary {
    pub kinetic: Vec<Vec<String>>,
    pub coupling: Vec<Vec<String>>,
    pub linear: Vec<String>,
    pub potential: String,
}

#[derive(Debug, Serialize)]
pub struct MomentumEntry {
    pub momentum: String,
    pub definition: String,
}

#[derive(Debug, Serialize)]
pub struct ConstraintEntry {
    pub label: String,
    pub body: String,
    pub generation: crate::legendre::Generation,
    pub class: ConstraintClass,
}

#[derive(Debug, Serialize)]
pub struct FirstClassEntry {
    pub label: String,
    pub combination: String,
    pub body: String,
}

#[derive(Debug, Serialize)]
pub struct MultiplierSummary {
    pub determined: BTreeMap<String, String>,
    pub free_directions: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct DofEntry {
    pub phase: i64,
    pub config: String,
    pub odd_warning: bool,
}

#[derive(Debug, Serialize)]
pub struct BracketEntry {
    pub a: String,
    pub b: String,
    pub value: String,
}

#[derive(Debug, Serialize)]
pub struct GaugeEntry {
    pub fixes: String,
    pub condition: String,
}

#[derive(Debug, Serialize)]
pub struct ChartEntry {
    pub pairs: Vec<ChartPairEntry>,
    pub casimirs: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct ChartPairEntry {
    pub q: String,
    pub p: String,
}

#[derive(Debug, Serialize)]
pub struct QuantumEntry {
    pub a: String,
    pub b: String,
    pub value: String,
    pub display: String,
}

#[derive(Debug, Serialize)]
pub struct RescalingEntry {
    pub forward: Vec<[String; 2]>,
    pub inverse: Vec<[String; 2]>,
    pub canonical: bool,
}

impl<S: Scalar> Analysis<S> {
    pub fn report(&self) -> AnalysisReport {
        let chart = &self.structured.chart;
        let matrix_strings = |m: &crate::linalg::Matrix<S>| -> Vec<Vec<String>> {
            (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| m[(i, j)].to_string()).collect())
                .collect()
        };
        let brackets: Vec<BracketEntry> = {
            let vars: Vec<Variable> = chart.all_variables().cloned().collect();
            let mut out = Vec::new();
            for (i, a) in vars.iter().enumerate() {
                for b in &vars[i + 1..] {
                    if let Ok(v) = self.structure.variable_bracket(a, b) {
                        if !v.is_zero() {
                            out.push(BracketEntry {
                                a: a.name().to_string(),
                                b: b.name().to_string(),
                                value: v.to_string(),
                            });
                        }
                    }
                }
            }
            out
        };
        AnalysisReport {
            schema: 1,
            input: InputEcho {
                variables: chart.coordinates().iter().map(|v| v.name().to_string()).collect(),
                momenta: chart.momenta().iter().map(|v| v.name().to_string()).collect(),
                parameters: self
                    .structured
                    .parameters
                    .iter()
                    .map(|(k, v)| (k.clone(), v.to_string()))
                    .collect(),
                keep: self.source.keep.clone(),
            },
            lagrangian: LagrangianSummary {
                kinetic: matrix_strings(&self.structured.kinetic),
                coupling: matrix_strings(&self.structured.coupling),
                linear: self.structured.linear.iter().map(|c| c.to_string()).collect(),
                potential: self.structured.potential.to_string(),
            },
            momenta: momenta(&self.structured)
                .iter()
                .map(|d| MomentumEntry {
                    momentum: d.momentum.name().to_string(),
                    definition: d.to_string(),
                })
                .collect(),
            hamiltonian: self.hamiltonian.to_string(),
            constraints: self
                .closure
                .constraints
                .iter()
                .map(|c| ConstraintEntry {
                    label: c.label.clone(),
                    body: c.body.to_string(),
                    generation: c.generation,
                    class: c.class,
                })
                .collect(),
            first_class: self
                .closure
                .fcc
                .iter()
                .map(|f| FirstClassEntry {
                    label: f.label.clone(),
                    combination: combo_string(&f.combo, &self.closure),
                    body: f.constraint.body.to_string(),
                })
                .collect(),
            second_class: self
                .closure
                .scc_indices
                .iter()
                .map(|&i| self.closure.constraints[i].label.clone())
                .collect(),
            multipliers: MultiplierSummary {
                determined: self
                    .closure
                    .determined_multipliers
                    .iter()
                    .map(|(k, v)| (k.clone(), v.to_string()))
                    .collect(),
                free_directions: self
                    .closure
                    .free_multiplier_directions
                    .iter()
                    .map(|dir| combo_string(dir, &self.closure))
                    .collect(),
            },
            dof: DofEntry {
                phase: self.dof.phase,
                config: self.dof.config.to_string(),
                odd_warning: self.dof.odd_warning,
            },
            brackets,
            gauge: self
                .gauges
                .iter()
                .zip(&self.closure.fcc)
                .map(|(g, f)| GaugeEntry {
                    fixes: f.label.clone(),
                    condition: g.to_string(),
                })
                .collect(),
            kept: self
                .structure
                .kept_variables()
                .iter()
                .map(|v| v.name().to_string())
                .collect(),
            eliminated: self
                .eliminated
                .iter()
                .map(|(v, f)| (v.name().to_string(), f.to_string()))
                .collect(),
            reduced_hamiltonian: self.reduced_hamiltonian.to_string(),
            canonical_chart: self.chart.as_ref().map(|c| ChartEntry {
                pairs: c
                    .pairs
                    .iter()
                    .map(|p| ChartPairEntry { q: p.q.to_string(), p: p.p.to_string() })
                    .collect(),
                casimirs: c.casimirs.iter().map(|e| e.to_string()).collect(),
            }),
            quantum_table: self.quantum_table.as_ref().map(|t| {
                t.entries
                    .iter()
                    .map(|e| QuantumEntry {
                        a: e.a.name().to_string(),
                        b: e.b.name().to_string(),
                        value: e.value.to_string(),
                        display: e.to_string(),
                    })
                    .collect()
            }),
            rescaling: self.rescaling.as_ref().map(|r| RescalingEntry {
                forward: r
                    .targets
                    .iter()
                    .map(|(name, e)| [name.clone(), e.to_string()])
                    .collect(),
                inverse: r
                    .variables
                    .iter()
                    .enumerate()
                    .map(|(j, v)| {
                        let mut form = AffineForm::<S>::zero();
                        let fresh = crate::expr::PhaseSpaceChart::new(
                            &r.targets
                                .iter()
                                .filter(|(n, _)| n.starts_with('Q'))
                                .map(|(n, _)| n.clone())
                                .collect::<Vec<_>>(),
                        );
                        let desc = match fresh {
                            Ok(f) => {
                                let fresh_vars: Vec<Variable> = (0..r.targets.len() / 2)
                                    .flat_map(|i| {
                                        [f.coordinates()[i].clone(), f.momenta()[i].clone()]
                                    })
                                    .collect();
                                for (i, cv) in fresh_vars.iter().enumerate() {
                                    form.add_term(cv, r.inverse[(j, i)].clone());
                                }
                                form.to_string()
                            }
                            Err(_) => format!("row {j}"),
                        };
                        [v.name().to_string(), desc]
                    })
                    .collect(),
                canonical: r.maps_to_canonical(self.structure.omega()),
            }),
            diagnostics: self.diagnostics.clone(),
            warnings: self.warnings.clone(),
        }
    }
}

fn combo_string<S: Scalar>(combo: &[S], closure: &ConstraintClosure<S>) -> String {
    let mut parts = Vec::new();
    for (k, c) in combo.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let label = &closure.constraints[k].label;
        if c.is_one() {
            parts.push(format!("+ {label}"));
        } else if (-c.clone()).is_one() {
            parts.push(format!("- {label}"));
        } else if c.is_negative() {
            parts.push(format!("- {}*{label}", -c.clone()));
        } else {
            parts.push(format!("+ {c}*{label}"));
        }
    }
    let joined = parts.join(" ");
    joined.strip_prefix("+ ").unwrap_or(&joined).to_string()
}
