use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde_json::{json, Value};

use netcov::decompose::{
    bipartite_certificate, decompose, fast_check_bipartite, parse_decomposition, verify_decomposition, verify_witness,
    FastVerdict, Outcome, SolverOptions,
};
use netcov::embezzle::{embezzle_complex, embezzle_real};
use netcov::format::{matrix_to_json, parse_matrix_auto};
use netcov::gaussian::{sample, sample_covariance, GaussianNetworkModel};
use netcov::inflate::{
    build_inflation, fourier_extract, inflated_covariance, parse_inflation_spec, shift_inflation, sign_inflation,
    InflationSpecJson,
};
use netcov::network::parse_network;
use netcov::simulate::{build_joint_distribution, covariance_matrix, independence_deviations, FunctionJson, ModelJson, OutputFunctions};
use netcov::witness::{SignAssignment, VectorJson};
use netcov::{HermitianMatrix, Network};

pub const EXIT_FEASIBLE: u8 = 0;
pub const EXIT_INFEASIBLE: u8 = 1;
pub const EXIT_UNDECIDED: u8 = 2;
pub const EXIT_INPUT: u8 = 3;

type CmdResult = Result<Report, Box<dyn std::error::Error>>;

#[derive(Parser, Debug)]
#[command(name = "netcov", version, about = "Covariance compatibility with causal networks")]
pub struct Cli {
    /// Print a single JSON object instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Decide whether a matrix decomposes over the network.
    Check(CheckArgs),
    /// Covariance of a classical network model.
    Simulate(SimulateArgs),
    /// Build a non-fanout inflation.
    Inflate(InflateArgs),
    /// Embezzle a state out of the harmonic state by a permutation.
    Embezzle(EmbezzleArgs),
    /// Sample a Gaussian realization of a decomposition.
    Gauss(GaussArgs),
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    pub network: PathBuf,
    /// Matrix as JSON `{n, re, im}` or headerless real CSV.
    pub matrix: PathBuf,
    #[arg(long, default_value_t = 1e-7)]
    pub tol: f64,
    #[arg(long, default_value_t = 20_000)]
    pub max_sweeps: usize,
    /// Only use the comparison-matrix test (bipartite sources).
    #[arg(long)]
    pub fast_only: bool,
    /// Where to write the decomposition or witness.
    #[arg(long)]
    pub certificate: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    pub network: PathBuf,
    pub model: PathBuf,
    /// Output functions `{"A1": {"re": [...], "im": [...]}, ...}`; overrides
    /// those in the model. Defaults to `(-1)^a`.
    #[arg(long)]
    pub functions: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct InflateArgs {
    pub network: PathBuf,
    #[arg(long, conflicts_with_all = ["sign", "shift"])]
    pub spec: Option<PathBuf>,
    /// One sign per source, e.g. `+,-,+`.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "shift")]
    pub sign: Option<String>,
    /// One shift per source, e.g. `1,0,2`; needs `--d`.
    #[arg(long, requires = "d")]
    pub shift: Option<String>,
    #[arg(long)]
    pub d: Option<usize>,
    /// Base covariance to inflate; its diagonal gives the variances.
    #[arg(long)]
    pub covariance: Option<PathBuf>,
    /// Fourier component to extract (default 1 when d > 1).
    #[arg(long)]
    pub component: Option<usize>,
}

#[derive(Args, Debug)]
pub struct EmbezzleArgs {
    #[arg(long)]
    pub d: Option<usize>,
    /// Target state as `{"re": [...], "im": [...]}` or a JSON array.
    #[arg(long, conflicts_with = "uniform")]
    pub phi_file: Option<PathBuf>,
    #[arg(long, requires = "d")]
    pub uniform: bool,
    #[arg(long = "R")]
    pub r: usize,
    /// Phase register size; selects the complex construction.
    #[arg(long = "T")]
    pub t: Option<usize>,
}

#[derive(Args, Debug)]
pub struct GaussArgs {
    pub network: PathBuf,
    pub decomposition: PathBuf,
    #[arg(long, default_value_t = 10_000)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the samples as CSV, one per row.
    #[arg(long)]
    pub samples: Option<PathBuf>,
}

pub struct Report {
    pub exit: u8,
    pub json: Value,
    pub text: String,
}

pub fn run(cli: Cli) -> CmdResult {
    match cli.command {
        Command::Check(a) => check(a),
        Command::Simulate(a) => simulate(a),
        Command::Inflate(a) => inflate(a),
        Command::Embezzle(a) => embezzle(a),
        Command::Gauss(a) => gauss(a),
    }
}

fn read(path: &Path) -> Result<String, Box<dyn std::error::Error>> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()).into())
}

fn read_network(path: &Path) -> Result<Network, Box<dyn std::error::Error>> {
    Ok(parse_network(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))?)
}

fn read_matrix(path: &Path) -> Result<HermitianMatrix, Box<dyn std::error::Error>> {
    Ok(parse_matrix_auto(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))?)
}

fn format_entry(z: Complex64) -> String {
    if z.im == 0.0 {
        format!("{:.6}", z.re)
    } else {
        format!("{:.6}{:+.6}i", z.re, z.im)
    }
}

fn format_matrix(m: &HermitianMatrix) -> String {
    let mut out = String::new();
    for i in 0..m.n() {
        let row: Vec<String> = (0..m.n()).map(|j| format_entry(m.get(i, j))).collect();
        out.push_str("  ");
        out.push_str(&row.join("  "));
        out.push('\n');
    }
    out
}

fn check(a: CheckArgs) -> CmdResult {
    let net = read_network(&a.network)?;
    let m = read_matrix(&a.matrix)?;
    if a.fast_only && !net.all_bipartite() {
        return Err("--fast-only needs a network whose sources all have two parties".into());
    }
    let opts = SolverOptions { max_sweeps: a.max_sweeps, feasibility_tol: a.tol, ..SolverOptions::default() };

    let mut outcome = Outcome::Undecided;
    let mut route = "none";
    let mut fast = Value::Null;
    let mut diagnostics = json!({});
    if net.all_bipartite() {
        let verdict = fast_check_bipartite(&net, &m, a.tol)?;
        fast = json!(match verdict {
            FastVerdict::Feasible => "feasible",
            FastVerdict::Infeasible => "infeasible",
        });
        let cert = bipartite_certificate(&net, &m, a.tol)?;
        let agrees = matches!(
            (&cert, verdict),
            (Outcome::Feasible(_), FastVerdict::Feasible) | (Outcome::Infeasible(_), FastVerdict::Infeasible)
        );
        if agrees {
            outcome = cert;
            route = "comparison";
        }
    }
    if matches!(outcome, Outcome::Undecided) && !a.fast_only {
        let report = decompose(&net, &m, &opts)?;
        let d = &report.diagnostics;
        diagnostics = json!({
            "sweeps": d.sweeps,
            "residual": d.residual_norm,
            "best_inner_product": d.best_inner_product,
            "message": d.message,
        });
        outcome = report.outcome;
        route = "solver";
    }

    let verification = match &outcome {
        Outcome::Feasible(d) => Some(verify_decomposition(&net, &m, d, a.tol)),
        Outcome::Infeasible(w) => Some(verify_witness(&net, &m, w, a.tol)),
        Outcome::Undecided => None,
    };
    if let Some(v) = verification.as_ref().filter(|v| !v.ok) {
        diagnostics["rejected_certificate"] = json!(v.reasons);
        outcome = Outcome::Undecided;
    }

    let (exit, certificate) = match &outcome {
        Outcome::Feasible(d) => (EXIT_FEASIBLE, serde_json::to_value(d.to_json(&net))?),
        Outcome::Infeasible(w) => (EXIT_INFEASIBLE, serde_json::to_value(w.to_json())?),
        Outcome::Undecided => (EXIT_UNDECIDED, Value::Null),
    };
    if let (Some(path), false) = (&a.certificate, certificate.is_null()) {
        fs::write(path, serde_json::to_string_pretty(&certificate)?).map_err(|e| format!("{}: {e}", path.display()))?;
    }

    let mut text = format!("status: {}\nroute: {route}\n", outcome.status());
    if let Value::String(v) = &fast {
        text.push_str(&format!("comparison test: {v}\n"));
    }
    match &outcome {
        Outcome::Feasible(d) => text.push_str(&format!("residual: {:.3e}\n", d.residual_norm)),
        Outcome::Infeasible(w) => text.push_str(&format!("witness inner product: {:.6}\n", w.inner_product)),
        Outcome::Undecided => {}
    }
    if let Some(sweeps) = diagnostics.get("sweeps") {
        text.push_str(&format!("sweeps: {sweeps}\n"));
    }
    if let Some(path) = a.certificate.as_ref().filter(|_| !certificate.is_null()) {
        text.push_str(&format!("certificate: {}\n", path.display()));
    }
    let json = json!({
        "status": outcome.status(),
        "route": route,
        "fast_check": fast,
        "certificate": certificate,
        "certificate_path": a.certificate.as_ref().filter(|_| exit != EXIT_UNDECIDED).map(|p| p.display().to_string()),
        "diagnostics": diagnostics,
    });
    Ok(Report { exit, json, text })
}

fn simulate(a: SimulateArgs) -> CmdResult {
    let net = read_network(&a.network)?;
    let mut model_json: ModelJson =
        serde_json::from_str(&read(&a.model)?).map_err(|e| format!("{}: {e}", a.model.display()))?;
    if let Some(path) = &a.functions {
        let f: BTreeMap<String, FunctionJson> =
            serde_json::from_str(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))?;
        model_json.functions = Some(f);
    }
    let (model, functions) = model_json.into_model(&net)?;
    let functions = functions.unwrap_or_else(|| OutputFunctions::parity(&model.output_alphabets()));
    let p = build_joint_distribution(&net, &model)?;
    let cov = covariance_matrix(&p, &functions)?;
    let max_dependence = independence_deviations(&p, &net)?.iter().map(|d| d.deviation).fold(0.0, f64::max);
    let mass: f64 = p.probs().iter().sum();

    let text = format!(
        "covariance:\n{}outcomes: {}\ntotal probability: {mass:.12}\nmax dependence between unconnected parties: {max_dependence:.3e}\n",
        format_matrix(&cov),
        p.probs().len()
    );
    let json = json!({
        "covariance": matrix_to_json(&cov),
        "alphabets": p.alphabets(),
        "outcomes": p.probs().len(),
        "total_probability": mass,
        "max_independence_deviation": max_dependence,
    });
    Ok(Report { exit: 0, json, text })
}

fn parse_list<T: std::str::FromStr>(list: &str, what: &str) -> Result<Vec<T>, Box<dyn std::error::Error>> {
    list.split(',')
        .map(|s| s.trim().parse::<T>().map_err(|_| format!("bad {what} '{s}'").into()))
        .collect()
}

fn parse_signs(list: &str) -> Result<Vec<f64>, Box<dyn std::error::Error>> {
    list.split(',')
        .map(|s| match s.trim() {
            "+" | "+1" | "1" => Ok(1.0),
            "-" | "-1" => Ok(-1.0),
            other => Err(format!("bad sign '{other}'").into()),
        })
        .collect()
}

fn inflate(a: InflateArgs) -> CmdResult {
    let net = read_network(&a.network)?;
    let spec = match (&a.spec, &a.sign, &a.shift) {
        (Some(path), None, None) => parse_inflation_spec(&read(path)?, &net).map_err(|e| format!("{}: {e}", path.display()))?,
        (None, Some(list), None) => sign_inflation(&net, &SignAssignment::from_signs(&parse_signs(list)?)?)?,
        (None, None, Some(list)) => shift_inflation(&net, &parse_list(list, "shift")?, a.d.expect("required by clap"))?,
        _ => return Err("give exactly one of --spec, --sign, --shift".into()),
    };
    let inflated = build_inflation(&net, &spec)?;
    let mut json = json!({
        "network": serde_json::to_value(inflated.network().to_json())?,
        "spec": serde_json::to_value(InflationSpecJson::from_spec(&net, &spec))?,
    });
    let g = inflated.network();
    let mut text = format!("inflation of order {}: {} parties, {} sources\n", spec.d(), g.n_parties(), g.n_sources());
    for s in g.sources() {
        let names: Vec<&str> = s.parties.iter().map(|&p| g.party_name(p)).collect();
        text.push_str(&format!("  {}: {}\n", s.name, names.join(" ")));
    }

    if let Some(path) = &a.covariance {
        let c = read_matrix(path)?;
        let variances = c.diag_real();
        let big = inflated_covariance(&net, &c, &spec, &variances)?;
        let component = a.component.unwrap_or(if spec.d() > 1 { 1 } else { 0 });
        let extracted = fourier_extract(&big, net.n_parties(), spec.d(), component)?;
        let lambda = big.min_eigenvalue();
        text.push_str(&format!(
            "inflated covariance (min eigenvalue {lambda:.3e}):\n{}component {component}:\n{}",
            format_matrix(&big),
            format_matrix(&extracted)
        ));
        json["covariance"] = matrix_to_json(&big);
        json["min_eigenvalue"] = json!(lambda);
        json["component"] = json!(component);
        json["extracted"] = matrix_to_json(&extracted);
    }
    Ok(Report { exit: 0, json, text })
}

fn read_state(path: &Path) -> Result<Vec<Complex64>, Box<dyn std::error::Error>> {
    let text = read(path)?;
    let value: Value = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    let v = if value.is_array() {
        let re: Vec<f64> = serde_json::from_value(value).map_err(|e| format!("{}: {e}", path.display()))?;
        VectorJson { re, im: None }
    } else {
        serde_json::from_value(value).map_err(|e| format!("{}: {e}", path.display()))?
    };
    Ok(v.to_vector()?)
}

fn embezzle(a: EmbezzleArgs) -> CmdResult {
    let phi = match (&a.phi_file, a.uniform) {
        (Some(path), false) => read_state(path)?,
        (None, true) => {
            let d = a.d.expect("required by clap");
            if d == 0 {
                return Err("--d must be positive".into());
            }
            vec![Complex64::new(1.0 / (d as f64).sqrt(), 0.0); d]
        }
        _ => return Err("give --phi-file or --uniform".into()),
    };
    if let Some(d) = a.d.filter(|&d| d != phi.len()) {
        return Err(format!("--d {d} does not match a state of length {}", phi.len()).into());
    }
    let result = match a.t {
        Some(t) => embezzle_complex(&phi, t, a.r)?,
        None => embezzle_real(&phi, a.r)?,
    };
    let json = json!({
        "R": a.r,
        "T": a.t,
        "d": phi.len(),
        "overlap_re": result.overlap.re,
        "overlap_im": result.overlap.im,
        "bound": result.guaranteed_bound,
    });
    let text = format!(
        "d = {}, R = {}{}\noverlap: {}\nguaranteed bound: {:.6}\n",
        phi.len(),
        a.r,
        a.t.map(|t| format!(", T = {t}")).unwrap_or_default(),
        format_entry(result.overlap),
        result.guaranteed_bound
    );
    Ok(Report { exit: 0, json, text })
}

fn gauss(a: GaussArgs) -> CmdResult {
    let net = read_network(&a.network)?;
    let d = parse_decomposition(&read(&a.decomposition)?, &net).map_err(|e| format!("{}: {e}", a.decomposition.display()))?;
    let model = GaussianNetworkModel::from_decomposition(&net, &d, a.seed)?;
    let batch = sample(&model, a.count)?;
    if let Some(path) = &a.samples {
        let file = fs::File::create(path).map_err(|e| format!("{}: {e}", path.display()))?;
        batch.write_csv(std::io::BufWriter::new(file))?;
    }
    let population = model.population_covariance();
    let estimate = sample_covariance(&batch)?;
    let deviation = (&estimate - &population).max_abs();
    let text = format!(
        "samples: {} (seed {})\nestimated covariance:\n{}population covariance:\n{}max deviation: {deviation:.3e}\n",
        batch.count(),
        a.seed,
        format_matrix(&estimate),
        format_matrix(&population)
    );
    let json = json!({
        "count": batch.count(),
        "seed": a.seed,
        "samples_path": a.samples.as_ref().map(|p| p.display().to_string()),
        "covariance": matrix_to_json(&estimate),
        "population_covariance": matrix_to_json(&population),
        "max_deviation": deviation,
    });
    Ok(Report { exit: 0, json, text })
}
