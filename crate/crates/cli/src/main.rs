use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use qroute::hash::{
    self, accept_prob, cost_formula, logical_pseudo_circuit, naive_routed_circuit, routed_hash_circuit, search_angles,
    HashParams, MergePolicy,
};
use qroute::qasm::to_qasm;
use qroute::qft::{
    builtin_schedule, diagnostics_report, execute_schedule, format_schedule, greedy_schedule, parse_schedule_with,
    verify_structural, verify_unitary, QftSchedule,
};
use qroute::sim;
use qroute::topology::{derive_chain, load_custom, DEFAULT_CHAIN_BUDGET};
use qroute::{Circuit, Device, TopologySpec};

/// Modulus used when only costs matter.
const COST_P: u64 = 5;

#[derive(Parser)]
#[command(
    name = "qroute",
    version,
    about = "Routing, costing and verification of hashing and QFT circuits"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// CNOT cost of the routed hash circuit, checked against the closed form.
    HashCost {
        /// Built-in device (guadalupe16, falcon27, lnnK) or an edge-list file.
        device: String,
        /// Number of input symbols.
        l: usize,
        /// Also build the naive baseline and print the ratio.
        #[arg(long)]
        naive: bool,
        #[command(flatten)]
        topo: TopoArgs,
    },
    /// Searches angles, then simulates the routed circuit on a line.
    HashSim {
        p: u64,
        m: usize,
        l: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        budget: usize,
    },
    /// Executes a QFT schedule and reports its cost.
    Qft {
        /// Built-in device, or an edge-list file together with --n.
        device: String,
        /// Number of QFT qubits; defaults to the device size.
        #[arg(long)]
        n: Option<usize>,
        /// Schedule file to execute instead of the default one.
        #[arg(long)]
        schedule: Option<PathBuf>,
        /// Use the greedy planner even where a built-in table exists.
        #[arg(long)]
        greedy: bool,
        /// Run structural verification, and unitary verification for n ≤ 10.
        #[arg(long)]
        verify: bool,
        /// Write validator findings for the schedule to this file.
        #[arg(long)]
        diagnostics: Option<PathBuf>,
        /// Write the executed schedule to this file.
        #[arg(long)]
        emit_schedule: Option<PathBuf>,
        #[command(flatten)]
        topo: TopoArgs,
    },
    /// Writes `l,optimized,naive,formula` for l = 1..=l_max.
    Sweep {
        device: String,
        l_max: usize,
        out: PathBuf,
        #[command(flatten)]
        topo: TopoArgs,
    },
    /// Exports a built circuit as OpenQASM 2.
    Export {
        #[arg(value_enum)]
        kind: Kind,
        device: String,
        out: PathBuf,
        /// Symbols for hash circuits.
        #[arg(long, default_value_t = 1)]
        l: usize,
        /// QFT qubits; defaults to the device size.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, value_enum, default_value_t = Stage::Hardware)]
        stage: Stage,
        /// Permit crz, cp and swap lines.
        #[arg(long)]
        logical: bool,
        #[command(flatten)]
        topo: TopoArgs,
    },
    /// Loads a topology and prints its derived chain and stationaries.
    TopologyValidate {
        device: String,
        #[command(flatten)]
        topo: TopoArgs,
    },
    /// Randomized angle search for a bounded-error hash.
    AnglesSearch {
        p: u64,
        m: usize,
        #[arg(long, default_value_t = 10_000)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct TopoArgs {
    /// Chain start for edge-list files.
    #[arg(long, default_value_t = 0)]
    start: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Hash,
    Qft,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Stage {
    /// Unrouted circuit on logical wires.
    Logical,
    /// Routed composite gates on physical wires.
    Routed,
    /// Routed hardware-basis circuit.
    Hardware,
}

/// A failed command: exit code and message.
struct Failure(u8, String);

fn usage(msg: impl std::fmt::Display) -> Failure {
    Failure(2, msg.to_string())
}

fn check(msg: impl std::fmt::Display) -> Failure {
    Failure(3, msg.to_string())
}

type Outcome = Result<String, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.cmd) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(Failure(code, msg)) => {
            // checks print their report before failing
            if code == 3 {
                print!("{msg}");
            } else {
                eprintln!("error: {msg}");
            }
            ExitCode::from(code)
        }
    }
}

fn run(cmd: Cmd) -> Outcome {
    match cmd {
        Cmd::HashCost { device, l, naive, topo } => hash_cost(&device, l, naive, &topo),
        Cmd::HashSim { p, m, l, seed, budget } => hash_sim(p, m, l, seed_override(seed)?, budget),
        Cmd::Qft {
            device,
            n,
            schedule,
            greedy,
            verify,
            diagnostics,
            emit_schedule,
            topo,
        } => {
            let opts = QftOpts {
                n,
                schedule,
                greedy,
                verify,
                diagnostics,
                emit_schedule,
            };
            qft(&device, &opts, &topo)
        }
        Cmd::Sweep {
            device,
            l_max,
            out,
            topo,
        } => sweep(&device, l_max, &out, &topo),
        Cmd::Export {
            kind,
            device,
            out,
            l,
            n,
            stage,
            logical,
            topo,
        } => export(kind, &device, &out, l, n, stage, logical, &topo),
        Cmd::TopologyValidate { device, topo } => topology_validate(&device, &topo),
        Cmd::AnglesSearch { p, m, budget, seed } => angles_search(p, m, budget, seed_override(seed)?),
    }
}

fn seed_override(seed: u64) -> Result<u64, Failure> {
    match std::env::var("QROUTE_SEED") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| usage(format!("QROUTE_SEED is not an integer: '{v}'"))),
        Err(_) => Ok(seed),
    }
}

/// A resolved topology: the spec and the built-in device it came from.
struct Topology {
    spec: TopologySpec,
    device: Option<Device>,
    name: String,
}

fn resolve(arg: &str, topo: &TopoArgs) -> Result<Topology, Failure> {
    if let Ok(device) = arg.parse::<Device>() {
        return Ok(Topology {
            spec: device.spec(),
            device: Some(device),
            name: device.to_string(),
        });
    }
    let path = Path::new(arg);
    if !path.exists() {
        return Err(usage(format!("'{arg}' is neither a built-in device nor a file")));
    }
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let graph = load_custom(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let spec = derive_chain(&graph, topo.start, DEFAULT_CHAIN_BUDGET)
        .map_err(|e| usage(format!("{}: {e}", path.display())))?;
    Ok(Topology {
        spec,
        device: None,
        name: "custom".into(),
    })
}

/// Deterministic generic angles: none is zero, so no gate is skipped.
fn cost_xi(m: usize) -> Vec<f64> {
    (0..m).map(|i| 0.37 + 0.61 * i as f64).collect()
}

fn cost_params(m: usize, l: usize) -> Result<HashParams, Failure> {
    HashParams::new(COST_P, cost_xi(m), l).map_err(usage)
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn hash_cost(device: &str, l: usize, naive: bool, topo: &TopoArgs) -> Outcome {
    if l == 0 {
        return Err(usage("l must be at least 1"));
    }
    let t = resolve(device, topo)?;
    let hp = cost_params(t.spec.num_qubits(), l)?;
    let r = routed_hash_circuit(&hp, &t.spec, MergePolicy::SkipFirst).map_err(usage)?;
    let mut report = r.report.clone();
    if naive {
        let b = naive_routed_circuit(&hp, &t.spec).map_err(usage)?;
        report = report.with_baseline(b.cnot_count());
    }
    let mut out = format!("device: {}\nl: {l}\n{report}", t.name);
    match t.device.and_then(|d| cost_formula(d, l)) {
        Some(f) if f == report.total_cnots => {
            let _ = writeln!(out, "formula: {f}\nMATCH");
        }
        Some(f) => {
            let _ = writeln!(out, "formula: {f}\nMISMATCH");
            return Err(check(out));
        }
        None => out.push_str("formula: n/a\n"),
    }
    Ok(out)
}

fn hash_sim(p: u64, m: usize, l: usize, seed: u64, budget: usize) -> Outcome {
    if !hash::is_prime(p) {
        return Err(usage(format!("p = {p} is not prime")));
    }
    let found = search_angles(p, m, budget, seed).map_err(usage)?;
    let spec = Device::Lnn(m).spec();
    let mut out = format!(
        "p: {p}\nm: {m}\nseed: {seed}\nbudget: {budget}\neps: {:.12}\n",
        found.eps
    );
    let _ = writeln!(out, "xi: {}", join_f64(&found.xi));
    let mut cases = vec![(l, "input")];
    if !l.is_multiple_of(p as usize) {
        cases.push((p as usize, "member control"));
    }
    for (len, label) in cases {
        let hp = HashParams::new(p, found.xi.clone(), len).map_err(usage)?;
        let r = routed_hash_circuit(&hp, &spec, MergePolicy::SkipFirst).map_err(usage)?;
        let simulated = sim::run(&r.circuit, 0).map_err(usage)?.probability(0);
        let logical = sim::run(&logical_pseudo_circuit(&hp), 0).map_err(usage)?.probability(0);
        let closed = accept_prob(&hp);
        let _ = writeln!(
            out,
            "l={len} ({label}): accept {simulated:.12} closed-form {closed:.12} diff {:.3e} logical diff {:.3e}",
            (simulated - closed).abs(),
            (logical - closed).abs()
        );
    }
    Ok(out)
}

struct QftOpts {
    n: Option<usize>,
    schedule: Option<PathBuf>,
    greedy: bool,
    verify: bool,
    diagnostics: Option<PathBuf>,
    emit_schedule: Option<PathBuf>,
}

fn qft_schedule(t: &Topology, opts: &QftOpts) -> Result<QftSchedule, Failure> {
    if let Some(path) = &opts.schedule {
        let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        let spec = t.device.is_none().then(|| t.spec.clone());
        return parse_schedule_with(&text, spec).map_err(|e| usage(format!("{}: {e}", path.display())));
    }
    let n = opts.n.unwrap_or(t.spec.num_qubits());
    let table = t
        .device
        .filter(|_| !opts.greedy && n == t.spec.num_qubits())
        .and_then(builtin_schedule);
    match table {
        Some(s) => Ok(s),
        None => greedy_schedule(n, &t.spec).map_err(usage),
    }
}

fn qft(device: &str, opts: &QftOpts, topo: &TopoArgs) -> Outcome {
    let t = resolve(device, topo)?;
    let s = qft_schedule(&t, opts)?;
    if let Some(path) = &opts.diagnostics {
        write_file(path, &diagnostics_report(&s))?;
    }
    if let Some(path) = &opts.emit_schedule {
        write_file(path, &format_schedule(&s))?;
    }
    let e = execute_schedule(&s).map_err(|err| check(format!("{err}\n")))?;
    let mut out = format!("device: {}\nn: {}\n{}", s.device, s.n, e.report);
    if opts.verify {
        let structural = verify_structural(&e.routed, &e.initial, s.n);
        let mut ok = structural.passed();
        let _ = writeln!(out, "structural: {}", pass_fail(ok));
        for d in structural.diffs.iter().take(10) {
            let _ = writeln!(out, "  {d}");
        }
        if s.n <= sim::UNITARY_MAX_QUBITS {
            let unitary = verify_unitary(&e, s.n).map_err(usage)?;
            ok &= unitary;
            let _ = writeln!(out, "unitary: {}", pass_fail(unitary));
        } else {
            out.push_str("unitary: skipped (n > 10)\n");
        }
        let _ = writeln!(out, "{}", pass_fail(ok));
        if !ok {
            return Err(check(out));
        }
    }
    Ok(out)
}

fn pass_fail(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn sweep(device: &str, l_max: usize, path: &Path, topo: &TopoArgs) -> Outcome {
    if l_max == 0 {
        return Err(usage("l_max must be at least 1"));
    }
    let t = resolve(device, topo)?;
    let mut csv = String::from("l,optimized,naive,formula\n");
    let mut mismatch = false;
    for l in 1..=l_max {
        let hp = cost_params(t.spec.num_qubits(), l)?;
        let opt = routed_hash_circuit(&hp, &t.spec, MergePolicy::SkipFirst)
            .map_err(usage)?
            .cnot_count();
        let naive = naive_routed_circuit(&hp, &t.spec).map_err(usage)?.cnot_count();
        let formula = t.device.and_then(|d| cost_formula(d, l));
        mismatch |= formula.is_some_and(|f| f != opt);
        let _ = writeln!(
            csv,
            "{l},{opt},{naive},{}",
            formula.map_or(String::new(), |f| f.to_string())
        );
    }
    write_file(path, &csv)?;
    let msg = format!("wrote {} rows to {}\n", l_max, path.display());
    if mismatch {
        return Err(check(format!("{msg}MISMATCH\n")));
    }
    Ok(msg)
}

#[allow(clippy::too_many_arguments)]
fn export(
    kind: Kind,
    device: &str,
    path: &Path,
    l: usize,
    n: Option<usize>,
    stage: Stage,
    logical: bool,
    topo: &TopoArgs,
) -> Outcome {
    let t = resolve(device, topo)?;
    let circuit: Circuit = match kind {
        Kind::Hash => {
            let hp = cost_params(t.spec.num_qubits(), l)?;
            if stage == Stage::Logical {
                logical_pseudo_circuit(&hp)
            } else {
                let r = routed_hash_circuit(&hp, &t.spec, MergePolicy::SkipFirst).map_err(usage)?;
                if stage == Stage::Routed {
                    r.routed_logical
                } else {
                    r.circuit
                }
            }
        }
        Kind::Qft => {
            let n = n.unwrap_or(t.spec.num_qubits());
            if stage == Stage::Logical {
                qroute::qft::reference_qft(n)
            } else {
                let opts = QftOpts {
                    n: Some(n),
                    schedule: None,
                    greedy: false,
                    verify: false,
                    diagnostics: None,
                    emit_schedule: None,
                };
                let e = execute_schedule(&qft_schedule(&t, &opts)?).map_err(usage)?;
                if stage == Stage::Routed {
                    e.routed
                } else {
                    e.circuit
                }
            }
        }
    };
    let text =
        to_qasm(&circuit, logical).map_err(|e| usage(format!("{e}; pass --logical to allow composite gates")))?;
    write_file(path, &text)?;
    Ok(format!(
        "wrote {} gates ({} cx) on {} qubits to {}\n",
        circuit.len(),
        circuit.cnot_count(),
        circuit.width(),
        path.display()
    ))
}

fn topology_validate(device: &str, topo: &TopoArgs) -> Outcome {
    let t = resolve(device, topo)?;
    let s = &t.spec;
    let mut out = format!(
        "device: {}\nqubits: {}\nedges: {}\nstart: {}\nchain: {}\n",
        t.name,
        s.num_qubits(),
        s.graph.num_edges(),
        s.start,
        join(&s.chain)
    );
    let stationary: Vec<String> = s
        .stationary
        .iter()
        .map(|st| format!("{}@{}", st.qubit, st.service_node))
        .collect();
    let _ = writeln!(out, "stationary: {}", stationary.join(" "));
    let problems = s.validate();
    for p in &problems {
        let _ = writeln!(out, "problem: {p}");
    }
    let _ = writeln!(out, "{}", if problems.is_empty() { "VALID" } else { "INVALID" });
    if problems.is_empty() {
        Ok(out)
    } else {
        Err(check(out))
    }
}

fn angles_search(p: u64, m: usize, budget: usize, seed: u64) -> Outcome {
    let found = search_angles(p, m, budget, seed).map_err(usage)?;
    Ok(format!(
        "p: {p}\nm: {m}\nseed: {seed}\nbudget: {budget}\neps: {:.12}\ntrial: {}\nxi: {}\n",
        found.eps,
        found.trial,
        join_f64(&found.xi)
    ))
}

fn join(v: &[usize]) -> String {
    v.iter().map(usize::to_string).collect::<Vec<_>>().join(" ")
}

fn join_f64(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.16e}")).collect::<Vec<_>>().join(" ")
}
