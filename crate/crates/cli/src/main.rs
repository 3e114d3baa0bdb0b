use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use apdkit::decomp::{apd_by_invisible_switching, apd_decomposed};
use apdkit::dp::{restrict_extension, run_dp, run_dp_f64};
use apdkit::extension::{scanwidth_exact, scanwidth_heuristic, DEFAULT_EXACT_BUDGET};
use apdkit::generate::{
    random_level1, random_nap, random_network, random_small_network, random_tree, seeded,
};
use apdkit::maxapd::{construct_hardness_instance, max_apd_exact, max_apd_greedy};
use apdkit::network::Severity;
use apdkit::newick::{emit_enewick, emit_json, parse_network};
use apdkit::rational::{display_decimal, fraction};
use apdkit::rv::{apd_rv, gamma_rv};
use apdkit::switching::{apd_all_bruteforce, gamma_bruteforce};
use apdkit::{apd, ApdError, Engine, PhyloNetwork, Rational, TaxonSet, TreeExtension};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

/// Average-tree phylogenetic diversity on phylogenetic networks.
#[derive(Parser)]
#[command(name = "apdkit", version)]
struct Cli {
    /// Print one JSON document instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Worker threads for the parallel engines (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the structural conditions on a network.
    Validate { file: PathBuf },
    /// Average-tree PD of a taxon set.
    Apd {
        file: PathBuf,
        /// Comma-separated taxa (default: all).
        #[arg(long)]
        taxa: Option<String>,
        #[arg(long, default_value = "auto")]
        engine: String,
        /// Tree-extension JSON (`{"parent": [...]}`) for the DP.
        #[arg(long)]
        extension: Option<PathBuf>,
        /// Run the DP in floating point.
        #[arg(long)]
        float: bool,
    },
    /// Probability that a random switching has a path from edge `u,v` into the taxa.
    Gamma {
        file: PathBuf,
        /// Tail and head labels, `u,v`.
        #[arg(long)]
        edge: String,
        #[arg(long)]
        taxa: Option<String>,
    },
    /// Width of a tree-extension.
    Scanwidth {
        file: PathBuf,
        #[arg(long, conflicts_with = "heuristic")]
        exact: bool,
        #[arg(long)]
        heuristic: bool,
        /// Node limit for the exact search.
        #[arg(long, default_value_t = DEFAULT_EXACT_BUDGET)]
        budget: usize,
        #[arg(long)]
        emit_extension: Option<PathBuf>,
    },
    /// Best set of at most `k` taxa.
    Maximize {
        file: PathBuf,
        #[arg(short)]
        k: usize,
        #[arg(long, conflicts_with = "greedy")]
        exact: bool,
        #[arg(long)]
        greedy: bool,
        #[arg(long, default_value = "auto")]
        engine: String,
    },
    /// Generate a random instance.
    Gen(GenArgs),
    /// Cross-check all engines on random networks.
    Selftest {
        #[arg(long, default_value_t = 500)]
        n_random: usize,
        #[arg(long, default_value_t = 5)]
        max_retics: usize,
        #[arg(long, default_value_t = 14)]
        max_nodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Tree,
    Level1,
    Random,
    NapReduction,
}

#[derive(Args)]
struct GenArgs {
    model: Model,
    #[arg(long, default_value_t = 8)]
    leaves: usize,
    /// Reticulations (`random`) or gadgets (`level1`).
    #[arg(long, default_value_t = 2)]
    retics: usize,
    /// Tree with a root of out-degree 1.
    #[arg(long)]
    planted: bool,
    /// Redraw `random` networks until every reticulation is visible.
    #[arg(long)]
    visible: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write `<out>.enwk` and `<out>.json` (and `<out>.sidecar.json`)
    /// instead of printing.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failures carry the exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<ApdError> for Failure {
    fn from(e: ApdError) -> Self {
        Failure {
            code: e.class().exit_code() as u8,
            message: e.to_string(),
        }
    }
}

fn input(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

type Outcome = Result<Report, Failure>;

/// What a command prints, plus its exit code.
struct Report {
    text: String,
    json: Value,
    code: u8,
}

impl Report {
    fn ok(text: String, json: Value) -> Self {
        Report { text, json, code: 0 }
    }
}

fn read_network(path: &Path) -> Result<PhyloNetwork, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| input(format!("cannot read {}: {e}", path.display())))?;
    Ok(parse_network(&text)?)
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| input(format!("cannot write {}: {e}", path.display())))
}

fn taxa_arg(net: &PhyloNetwork, taxa: Option<&str>) -> Result<TaxonSet, Failure> {
    match taxa {
        None => Ok(TaxonSet::all(net)),
        Some(list) => {
            let names: Vec<&str> = list.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
            Ok(TaxonSet::from_taxa(net, names)?)
        }
    }
}

fn value_json(r: &Rational) -> Value {
    json!({ "exact": fraction(r), "decimal": display_decimal(r, 12) })
}

fn value_text(r: &Rational) -> String {
    format!("{}\t{}", fraction(r), display_decimal(r, 12))
}

fn validate(file: &Path) -> Outcome {
    let net = read_network(file)?;
    let report = net.validate();
    let issues: Vec<(String, String)> = report
        .issues
        .iter()
        .map(|i| {
            let level = match i.severity {
                Severity::Error => "error",
                Severity::Warning => "warning",
            };
            (level.to_string(), i.violation.describe(&net))
        })
        .collect();
    let mut text = String::from(if report.is_valid() { "valid" } else { "invalid" });
    for (level, msg) in &issues {
        text.push_str(&format!("\n{level}: {msg}"));
    }
    let json = json!({
        "valid": report.is_valid(),
        "nodes": net.node_count(),
        "edges": net.edge_count(),
        "reticulations": net.reticulations().len(),
        "issues": issues
            .iter()
            .map(|(l, m)| json!({ "severity": l, "message": m }))
            .collect::<Vec<_>>(),
    });
    Ok(Report {
        text,
        json,
        code: if report.is_valid() { 0 } else { 2 },
    })
}

fn float_apd(net: &PhyloNetwork, taxa: &TaxonSet, ext: Option<&TreeExtension>) -> Result<f64, Failure> {
    net.require_valid()?;
    if taxa.is_empty() {
        return Ok(0.0);
    }
    let induced = net.induce(taxa)?;
    let sub = &induced.network;
    let ext = match ext {
        Some(ext) => {
            ext.require_valid(net)?;
            restrict_extension(ext, &induced.node_map, sub.node_count())?
        }
        None => scanwidth_heuristic(sub)?.0,
    };
    Ok(run_dp_f64(sub, &ext)?)
}

fn apd_command(
    file: &Path,
    taxa: Option<&str>,
    engine: &str,
    extension: Option<&Path>,
    float: bool,
) -> Outcome {
    let net = read_network(file)?;
    let z = taxa_arg(&net, taxa)?;
    let engine: Engine = engine.parse()?;
    let ext = match extension {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| input(format!("cannot read {}: {e}", path.display())))?;
            Some(TreeExtension::from_json(&text)?)
        }
        None => None,
    };
    let start = Instant::now();
    if float {
        if !matches!(engine, Engine::Auto | Engine::SwDp) {
            return Err(input("--float runs the DP; use --engine swdp or auto"));
        }
        let value = float_apd(&net, &z, ext.as_ref())?;
        eprintln!("time: {:.3} ms", start.elapsed().as_secs_f64() * 1e3);
        return Ok(Report::ok(
            format!("{value}\nengine: swdp (float)"),
            json!({ "apd": value, "engine": "swdp", "float": true }),
        ));
    }
    let (value, used) = apd(&net, &z, engine, ext.as_ref())?;
    eprintln!("time: {:.3} ms", start.elapsed().as_secs_f64() * 1e3);
    Ok(Report::ok(
        format!("{}\nengine: {used}", value_text(&value)),
        json!({ "apd": value_json(&value), "engine": used.to_string(), "taxa": z.names(&net) }),
    ))
}

fn gamma_command(file: &Path, edge: &str, taxa: Option<&str>) -> Outcome {
    let net = read_network(file)?;
    net.require_valid()?;
    let z = taxa_arg(&net, taxa)?;
    let (u, v) = edge
        .split_once(',')
        .ok_or_else(|| input("--edge takes `u,v`"))?;
    let node = |label: &str| {
        net.node_by_label(label.trim())
            .ok_or_else(|| input(format!("no node labelled `{}`", label.trim())))
    };
    let e = net
        .find_edge(node(u)?, node(v)?)
        .ok_or_else(|| input(format!("no edge {u} -> {v}")))?;
    let all = z.len() == net.leaves().len();
    let (value, engine) = if all && net.is_reticulation_visible()? {
        (gamma_rv(&net, e)?, "rv")
    } else {
        (gamma_bruteforce(&net, e, &z)?, "brute")
    };
    Ok(Report::ok(
        format!("{}\nengine: {engine}", value_text(&value)),
        json!({ "edge": net.edge_label(e), "gamma": value_json(&value), "engine": engine }),
    ))
}

fn scanwidth_command(file: &Path, exact: bool, budget: usize, emit: Option<&Path>) -> Outcome {
    let net = read_network(file)?;
    net.require_valid()?;
    let (ext, width) = if exact {
        scanwidth_exact(&net, budget)?
    } else {
        scanwidth_heuristic(&net)?
    };
    if let Some(path) = emit {
        write(path, &ext.to_json())?;
    }
    let method = if exact { "exact" } else { "heuristic" };
    let ext_json: Value = serde_json::from_str(&ext.to_json()).expect("extension JSON");
    Ok(Report::ok(
        format!("{width}\nmethod: {method}"),
        json!({ "width": width, "method": method, "extension": ext_json }),
    ))
}

fn maximize_command(file: &Path, k: usize, greedy: bool, engine: &str) -> Outcome {
    let net = read_network(file)?;
    let engine: Engine = engine.parse()?;
    let (set, value) = if greedy {
        max_apd_greedy(&net, k, engine)?
    } else {
        max_apd_exact(&net, k, engine)?
    };
    let names = set.names(&net);
    let method = if greedy { "greedy" } else { "exact" };
    Ok(Report::ok(
        format!("{}\n{}\nmethod: {method}", names.join(","), value_text(&value)),
        json!({ "taxa": names, "apd": value_json(&value), "method": method }),
    ))
}

fn gen_command(args: &GenArgs) -> Outcome {
    let mut rng = seeded(args.seed);
    let mut sidecar = None;
    let net = match args.model {
        Model::Tree => random_tree(&mut rng, args.leaves.max(1), args.planted),
        Model::Level1 => random_level1(&mut rng, args.leaves.max(2), args.retics),
        Model::Random => loop {
            let net = random_network(&mut rng, args.leaves, args.retics);
            if !args.visible || net.is_reticulation_visible()? {
                break net;
            }
        },
        Model::NapReduction => {
            let nap = random_nap(&mut rng, args.leaves.max(1));
            let hard = construct_hardness_instance(&nap)?;
            sidecar = Some(hard.sidecar(&nap));
            hard.network
        }
    };
    let enewick = emit_enewick(&net)?;
    let network_json: Value = serde_json::from_str(&emit_json(&net)).expect("network JSON");
    if let Some(out) = &args.out {
        let with = |ext: &str| {
            let mut name = out.as_os_str().to_owned();
            name.push(ext);
            PathBuf::from(name)
        };
        write(&with(".enwk"), &format!("{enewick}\n"))?;
        write(&with(".json"), &emit_json(&net))?;
        if let Some(s) = &sidecar {
            write(&with(".sidecar.json"), &serde_json::to_string_pretty(s).expect("sidecar"))?;
        }
    }
    let mut text = enewick.clone();
    if let Some(s) = &sidecar {
        text.push('\n');
        text.push_str(&serde_json::to_string(s).expect("sidecar"));
    }
    let mut doc = json!({ "enewick": enewick, "network": network_json, "seed": args.seed });
    if let Some(s) = sidecar {
        doc["sidecar"] = s;
    }
    Ok(Report::ok(text, doc))
}

fn selftest(n: usize, max_retics: usize, max_nodes: usize, seed: u64) -> Outcome {
    if max_nodes < 3 {
        return Err(input("--max-nodes must be at least 3"));
    }
    let mut rng = seeded(seed);
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut rv = 0;
    for i in 0..n {
        let net = random_small_network(&mut rng, max_nodes, max_retics);
        let brute = apd_all_bruteforce(&net)?;
        let (ext, _) = scanwidth_heuristic(&net)?;
        let mut values = vec![
            ("swdp", run_dp(&net, &ext)?),
            ("decomp", apd_decomposed(&net)?),
            ("partial", apd_by_invisible_switching(&net)?),
        ];
        if net.is_reticulation_visible()? {
            values.push(("rv", apd_rv(&net)?));
            rv += 1;
        }
        for (name, v) in values {
            if v != brute {
                failures.push(format!(
                    "network {i}: {name} {} != brute {} on {}",
                    fraction(&v),
                    fraction(&brute),
                    emit_enewick(&net)?
                ));
            }
        }
    }
    eprintln!("time: {:.3} s", start.elapsed().as_secs_f64());
    let mut text = format!(
        "{} networks, {rv} reticulation-visible, {} disagreements",
        n,
        failures.len()
    );
    for f in &failures {
        text.push('\n');
        text.push_str(f);
    }
    let code = if failures.is_empty() { 0 } else { 1 };
    Ok(Report {
        text,
        json: json!({ "networks": n, "visible": rv, "seed": seed, "disagreements": failures }),
        code,
    })
}

fn run(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Validate { file } => validate(file),
        Command::Apd {
            file,
            taxa,
            engine,
            extension,
            float,
        } => apd_command(file, taxa.as_deref(), engine, extension.as_deref(), *float),
        Command::Gamma { file, edge, taxa } => gamma_command(file, edge, taxa.as_deref()),
        Command::Scanwidth {
            file,
            exact,
            heuristic: _,
            budget,
            emit_extension,
        } => scanwidth_command(file, *exact, *budget, emit_extension.as_deref()),
        Command::Maximize {
            file,
            k,
            exact: _,
            greedy,
            engine,
        } => maximize_command(file, *k, *greedy, engine),
        Command::Gen(args) => gen_command(args),
        Command::Selftest {
            n_random,
            max_retics,
            max_nodes,
            seed,
        } => selftest(*n_random, *max_retics, *max_nodes, *seed),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    // deep networks recurse in the parsers and the exact search
    let worker = std::thread::Builder::new()
        .stack_size(256 << 20)
        .spawn(move || {
            let outcome = run(&cli);
            (outcome, cli.json)
        })
        .expect("spawn worker thread");
    let (outcome, json) = worker.join().expect("worker thread panicked");
    match outcome {
        Ok(report) => {
            if json {
                println!("{}", serde_json::to_string_pretty(&report.json).expect("JSON"));
            } else {
                println!("{}", report.text);
            }
            ExitCode::from(report.code)
        }
        Err(f) => {
            if json {
                println!("{}", json!({ "error": f.message, "exit_code": f.code }));
            } else {
                eprintln!("error: {}", f.message);
            }
            ExitCode::from(f.code)
        }
    }
}
