//! Command-line frontend: analyze a circuit Lagrangian, emit quantization
//! tables, or integrate the reduced dynamics.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dca_core::dynamics::{
    equations_of_motion, integrate, max_relative_deviation, solve_initial_state, Trajectory,
};
use dca_core::expr::{VarKind, Variable};
use dca_core::report::{analyze, Analysis, AnalysisOptions};
use dca_core::{Error, Rat};

#[derive(Parser)]
#[command(
    name = "dca",
    about = "Constraint analysis of circuit Lagrangians: brackets, gauge fixing, \
             canonical charts, quantization tables, and reduced dynamics",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full constraint analysis and print the report.
    Analyze(AnalyzeArgs),
    /// Print only the quantum commutator table.
    Quantize(AnalyzeArgs),
    /// Integrate the reduced equations of motion.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Input circuit description (.lagr).
    file: PathBuf,
    /// Write the JSON report here.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Gauge condition (repeatable); replaces any `gauge:` lines in the file.
    #[arg(long)]
    gauge: Vec<String>,
    /// Comma-separated variables to keep under elimination.
    #[arg(long, value_delimiter = ',')]
    keep: Vec<String>,
    /// Comma-separated constraint labels to use as the second-class set.
    #[arg(long, value_delimiter = ',')]
    scc_choice: Vec<String>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Integration step.
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    /// Final time.
    #[arg(long, default_value_t = 10.0)]
    t_end: f64,
    /// Initial value, `name=value` (repeatable).
    #[arg(long = "init")]
    init: Vec<String>,
    /// Two comma-separated gauge coefficient lists over the surviving
    /// coordinates; runs both gauges and reports the deviation.
    #[arg(long = "gauge-compare", num_args = 2)]
    gauge_compare: Option<Vec<String>>,
    /// Variables whose trajectories the gauge comparison inspects
    /// (default: the coordinates pinned by --init).
    #[arg(long, value_delimiter = ',')]
    observe: Vec<String>,
    /// Trajectory CSV path (default: `<input stem>_trajectory.csv`).
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze(args) => cmd_analyze(&args, false),
        Command::Quantize(args) => cmd_analyze(&args, true),
        Command::Simulate(args) => cmd_simulate(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let obj = serde_json::json!({
                "error": { "kind": err.kind(), "message": err.to_string() }
            });
            eprintln!("{obj}");
            if err.is_internal() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn read_input(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|e| Error::InvalidFlag(format!(
        "cannot read {}: {e}",
        path.display()
    )))
}

fn options_from(common: &CommonArgs) -> AnalysisOptions {
    AnalysisOptions {
        gauges: if common.gauge.is_empty() { None } else { Some(common.gauge.clone()) },
        keep: if common.keep.is_empty() { None } else { Some(common.keep.clone()) },
        scc_choice: if common.scc_choice.is_empty() {
            None
        } else {
            Some(common.scc_choice.clone())
        },
    }
}

fn cmd_analyze(args: &AnalyzeArgs, table_only: bool) -> Result<(), Error> {
    let text = read_input(&args.common.file)?;
    let analysis = analyze::<Rat>(&text, &options_from(&args.common))?;
    let report = analysis.report();
    if table_only {
        match &report.quantum_table {
            Some(entries) => {
                for e in entries {
                    println!("{}", e.display);
                }
            }
            None => println!("(no table: first-class constraints left unfixed)"),
        }
    } else {
        print_report(&analysis);
    }
    if let Some(path) = &args.common.json {
        let json = serde_json::to_string_pretty(&report)
            .map_err(|e| Error::Internal(e.to_string()))?;
        std::fs::write(path, json + "\n")
            .map_err(|e| Error::InvalidFlag(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

fn print_report(analysis: &Analysis<Rat>) {
    let r = analysis.report();
    println!("variables: {}", r.input.variables.join(" "));
    println!("momenta:   {}", r.input.momenta.join(" "));
    if !r.input.parameters.is_empty() {
        let params: Vec<String> =
            r.input.parameters.iter().map(|(k, v)| format!("{k}={v}")).collect();
        println!("params:    {}", params.join(" "));
    }
    println!("\nhamiltonian: {}", r.hamiltonian);
    println!("\nconstraints:");
    for c in &r.constraints {
        println!("  {:<6} [{:?}/{:?}] {}", c.label, c.generation, c.class, c.body);
    }
    for f in &r.first_class {
        println!("  first-class {}: {} = {}", f.label, f.combination, f.body);
    }
    println!("  second-class set: {}", r.second_class.join(", "));
    if !r.multipliers.determined.is_empty() {
        println!("\nmultipliers:");
        for (k, v) in &r.multipliers.determined {
            println!("  {k} = {v}");
        }
        for free in &r.multipliers.free_directions {
            println!("  free direction: {free}");
        }
    }
    println!("\ndegrees of freedom: phase = {}, configuration = {}", r.dof.phase, r.dof.config);
    if !r.brackets.is_empty() {
        println!("\nnonzero brackets:");
        for b in &r.brackets {
            println!("  {{{}, {}}} = {}", b.a, b.b, b.value);
        }
    }
    for g in &r.gauge {
        println!("\ngauge: {} fixed by {} = 0", g.fixes, g.condition);
    }
    println!("\nkept variables: {}", r.kept.join(", "));
    for (v, e) in &r.eliminated {
        println!("  {v} = {e}");
    }
    println!("reduced hamiltonian: {}", r.reduced_hamiltonian);
    if let Some(chart) = &r.canonical_chart {
        println!("\ncanonical chart:");
        for (i, p) in chart.pairs.iter().enumerate() {
            println!("  Q{} = {}   P{} = {}", i + 1, p.q, i + 1, p.p);
        }
        for c in &chart.casimirs {
            println!("  casimir: {c}");
        }
    }
    if let Some(table) = &r.quantum_table {
        println!("\nquantum commutators:");
        for e in table {
            println!("  {}", e.display);
        }
    }
    if let Some(resc) = &r.rescaling {
        println!("\ncanonical rescaling (canonical: {}):", resc.canonical);
        for [name, expr] in &resc.forward {
            println!("  {name} = {expr}");
        }
    }
    println!(
        "\ndiagnostics: rank M = {}, rank C = {}, {} primary / {} secondary, {} FCC / {} SCC",
        r.diagnostics.kinetic_rank,
        r.diagnostics.bracket_rank,
        r.diagnostics.n_primary,
        r.diagnostics.n_secondary,
        r.diagnostics.n_first_class,
        r.diagnostics.n_second_class
    );
    for f in &r.diagnostics.flags {
        println!("  flag: {f}");
    }
    for n in &r.diagnostics.notes {
        println!("  note: {n}");
    }
    for w in &r.warnings {
        println!("warning: {w}");
    }
}

fn parse_init(
    entries: &[String],
    analysis: &Analysis<Rat>,
) -> Result<BTreeMap<Variable, f64>, Error> {
    let chart = &analysis.structured.chart;
    let mut out = BTreeMap::new();
    for entry in entries {
        let Some((name, value)) = entry.split_once('=') else {
            return Err(Error::InvalidFlag(format!(
                "--init expects name=value, got `{entry}`"
            )));
        };
        let var = chart
            .var(name.trim())
            .ok_or_else(|| Error::UnboundVariable(name.trim().to_string()))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::InvalidFlag(format!("bad value in `{entry}`")))?;
        out.insert(var.clone(), value);
    }
    Ok(out)
}

fn run_trajectory(
    analysis: &Analysis<Rat>,
    given: &BTreeMap<Variable, f64>,
    dt: f64,
    t_end: f64,
) -> Result<Trajectory<f64>, Error> {
    if !analysis.gauge_is_fixed() {
        return Err(Error::GaugeCountMismatch {
            expected: analysis.closure.fcc.len(),
            got: 0,
        });
    }
    let eom = equations_of_motion(&analysis.reduced_hamiltonian, &analysis.structure)?;
    let state = solve_initial_state(
        analysis.structure.kept_variables(),
        &analysis.eliminated,
        given,
    )?;
    integrate(&eom, &state, dt, t_end)?.with_reconstructed(&analysis.eliminated)
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), Error> {
    if args.dt <= 0.0 {
        return Err(Error::InvalidFlag("dt must be positive".into()));
    }
    if !args.t_end.is_finite() || args.t_end < args.dt {
        return Err(Error::InvalidFlag("t-end must be at least dt".into()));
    }
    let text = read_input(&args.common.file)?;
    let stem = args
        .common
        .file
        .file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| "trajectory".into());

    if let Some(specs) = &args.gauge_compare {
        return gauge_compare(args, &text, &stem, specs);
    }

    let analysis = analyze::<Rat>(&text, &options_from(&args.common))?;
    let given = parse_init(&args.init, &analysis)?;
    let traj = run_trajectory(&analysis, &given, args.dt, args.t_end)?;
    let csv_path = args
        .csv
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{stem}_trajectory.csv")));
    std::fs::write(&csv_path, traj.to_csv())
        .map_err(|e| Error::InvalidFlag(format!("cannot write {}: {e}", csv_path.display())))?;
    let drift = energy_drift(&analysis, &traj)?;
    println!(
        "integrated {} steps to t = {}; wrote {}",
        traj.times.len() - 1,
        traj.times.last().unwrap(),
        csv_path.display()
    );
    println!("relative energy drift: {drift:.3e}");
    if let Some(path) = &args.common.json {
        let json = serde_json::json!({
            "trajectory": traj,
            "energy_drift": drift,
        });
        std::fs::write(path, serde_json::to_string_pretty(&json).unwrap() + "\n")
            .map_err(|e| Error::InvalidFlag(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

fn energy_drift(analysis: &Analysis<Rat>, traj: &Trajectory<f64>) -> Result<f64, Error> {
    let h = &analysis.reduced_hamiltonian;
    let eval = |row: &Vec<f64>| -> Result<f64, Error> {
        let assign: BTreeMap<Variable, f64> = traj
            .variables
            .iter()
            .cloned()
            .zip(row.iter().copied())
            .collect();
        h.evaluate(&assign)
    };
    let e0 = eval(&traj.states[0])?;
    let scale = e0.abs().max(1e-12);
    let mut worst = 0.0_f64;
    for row in &traj.states {
        worst = worst.max((eval(row)? - e0).abs() / scale);
    }
    Ok(worst)
}

fn gauge_compare(
    args: &SimulateArgs,
    text: &str,
    stem: &str,
    specs: &[String],
) -> Result<(), Error> {
    // Coefficients apply to the coordinates that survive the ungauged
    // elimination, in chart order.
    let base_options = AnalysisOptions {
        keep: None,
        gauges: Some(Vec::new()),
        scc_choice: options_from(&args.common).scc_choice,
    };
    let base = analyze::<Rat>(text, &base_options)?;
    if base.closure.fcc.len() != 1 {
        return Err(Error::InvalidFlag(format!(
            "--gauge-compare needs exactly one first-class constraint, found {}",
            base.closure.fcc.len()
        )));
    }
    let family: Vec<Variable> = base
        .structure
        .kept_variables()
        .iter()
        .filter(|v| v.kind() == VarKind::Coordinate)
        .cloned()
        .collect();
    let mut gauge_exprs = Vec::new();
    for spec in specs {
        let coeffs: Vec<&str> = spec.split(',').collect();
        if coeffs.len() != family.len() {
            return Err(Error::InvalidFlag(format!(
                "gauge spec `{spec}` needs {} coefficients for ({})",
                family.len(),
                family.iter().map(|v| v.name()).collect::<Vec<_>>().join(", ")
            )));
        }
        let terms: Vec<String> = coeffs
            .iter()
            .zip(&family)
            .filter(|(c, _)| c.trim() != "0")
            .map(|(c, v)| format!("{}*{}", c.trim(), v.name()))
            .collect();
        if terms.is_empty() {
            return Err(Error::InvalidFlag(format!("gauge spec `{spec}` is zero")));
        }
        gauge_exprs.push(terms.join(" + "));
    }

    let mut runs = Vec::new();
    std::thread::scope(|scope| -> Result<(), Error> {
        let mut handles = Vec::new();
        for gauge in &gauge_exprs {
            let options = AnalysisOptions {
                gauges: Some(vec![gauge.clone()]),
                keep: None,
                scc_choice: options_from(&args.common).scc_choice,
            };
            let init = args.init.clone();
            let (dt, t_end) = (args.dt, args.t_end);
            handles.push(scope.spawn(move || -> Result<_, Error> {
                let analysis = analyze::<Rat>(text, &options)?;
                let given = parse_init(&init, &analysis)?;
                let traj = run_trajectory(&analysis, &given, dt, t_end)?;
                Ok((analysis, traj))
            }));
        }
        for h in handles {
            runs.push(h.join().expect("integration thread panicked")?);
        }
        Ok(())
    })?;

    let chart = &runs[0].0.structured.chart;
    let observed: Vec<Variable> = if args.observe.is_empty() {
        parse_init(&args.init, &runs[0].0)?
            .keys()
            .filter(|v| v.kind() == VarKind::Coordinate)
            .cloned()
            .collect()
    } else {
        args.observe
            .iter()
            .map(|n| {
                chart
                    .var(n)
                    .cloned()
                    .ok_or_else(|| Error::UnboundVariable(n.clone()))
            })
            .collect::<Result<_, _>>()?
    };
    if observed.is_empty() {
        return Err(Error::InvalidFlag(
            "no observed variables: pin coordinates via --init or pass --observe".into(),
        ));
    }
    let deviation = max_relative_deviation(&runs[0].1, &runs[1].1, &observed)?;

    for (i, (_, traj)) in runs.iter().enumerate() {
        let path = PathBuf::from(format!("{stem}_gauge{}.csv", i + 1));
        std::fs::write(&path, traj.to_csv())
            .map_err(|e| Error::InvalidFlag(format!("cannot write {}: {e}", path.display())))?;
        println!("gauge {} ({}): wrote {}", i + 1, gauge_exprs[i], path.display());
    }
    println!(
        "max relative deviation over {{{}}}: {deviation:.3e}",
        observed.iter().map(|v| v.name()).collect::<Vec<_>>().join(", ")
    );
    if let Some(path) = &args.common.json {
        let json = serde_json::json!({
            "gauges": gauge_exprs,
            "observed": observed.iter().map(|v| v.name()).collect::<Vec<_>>(),
            "max_relative_deviation": deviation,
        });
        std::fs::write(path, serde_json::to_string_pretty(&json).unwrap() + "\n")
            .map_err(|e| Error::InvalidFlag(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}
