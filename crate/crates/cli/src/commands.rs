use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use boole_core::feasibility::parse_marginal_file;
use boole_core::polytope::assignments;
use boole_core::rational::format_pq;
use boole_core::scenario::tuple_string;
use boole_core::simulator::{
    self, lg_statistic, CsvSink, EstimatedCorrelations, PairProtocolConfig, QuantumTwoLevelModel, RunOptions, SubensembleRule,
};
use boole_core::two_slit::{self, SlitGeometry, TwoSlitInput};
use boole_core::{
    derive_facets, derive_facets_in, detect_cyclicity, joint_exists, CoordinateSet, Error, FeasibilityStatus, JointDistribution,
    Result, Scenario,
};

pub const EXIT_OK: u8 = 0;
pub const EXIT_INFEASIBLE: u8 = 1;
pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_CAPACITY: u8 = 3;
pub const EXIT_INCONSISTENT: u8 = 4;

pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Capacity { .. } => EXIT_CAPACITY,
        _ => EXIT_VALIDATION,
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Validation(format!("cannot read {}: {e}", path.display())))
}

fn prepare_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Validation(format!("output directory {}: {e}", dir.display())))
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Error::Validation(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

fn warn_all(warnings: Vec<String>) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

pub fn facets(scenario: &Path, out: &Path) -> Result<u8> {
    let s = Scenario::from_json(&read(scenario)?)?;
    warn_all(s.warnings());
    prepare_out(out)?;

    let cyc = detect_cyclicity(&s);
    println!(
        "scenario: {} observables, {} contexts, {}",
        s.num_observables(),
        s.contexts().len(),
        if cyc.acyclic { "acyclic" } else { "cyclic" }
    );

    let full = derive_facets(&s)?;
    println!("facets ({} in singles and pair correlators):", full.facets.len());
    for f in &full.facets {
        println!("  {}", f.render(&s, ">="));
    }
    if full.implied_equations.is_empty() {
        println!("implied equations: none");
    } else {
        println!("implied equations:");
        for e in &full.implied_equations {
            println!("  {}", e.render(&s, "="));
        }
    }
    let path = write_file(out, "facets.csv", &full.to_csv(&s))?;
    println!("wrote {}", path.display());

    if !s.pair_coordinates().is_empty() {
        let corr = derive_facets_in(&s, &CoordinateSet::correlators(&s))?;
        println!("correlator-coordinate facets ({}):", corr.facets.len());
        for f in &corr.facets {
            println!("  {}", f.render(&s, ">="));
        }
        let path = write_file(out, "facets_correlators.csv", &corr.to_csv(&s))?;
        println!("wrote {}", path.display());
    }
    Ok(EXIT_OK)
}

pub fn check(marginals: &Path, out: &Path) -> Result<u8> {
    let (s, tables) = parse_marginal_file(&read(marginals)?)?;
    warn_all(s.warnings());
    prepare_out(out)?;
    let verdict = joint_exists(&tables, &s)?;
    println!("status: {}", verdict.status);
    println!("max sub-marginal discrepancy: {}", verdict.consistency.max_discrepancy);

    match verdict.status {
        FeasibilityStatus::Feasible => {
            let w = verdict.witness.expect("feasible verdict has a witness");
            let mut csv = String::from("assignment,weight\n");
            for a in assignments(s.num_observables()) {
                csv.push_str(&format!("{},{}\n", tuple_string(a.mask() as usize, a.len()), format_pq(w.weight(&a))));
            }
            let path = write_file(out, "witness.csv", &csv)?;
            println!("witness: {}", path.display());
            Ok(EXIT_OK)
        }
        FeasibilityStatus::Infeasible => {
            let cert = verdict.certificate.expect("infeasible verdict has a certificate");
            match &cert.inequality {
                Some(ineq) => println!("certificate: {}", ineq.render(&s, ">=")),
                None => println!("certificate: functional over table entries (see certificate.csv)"),
            }
            println!("certificate value on input: {}", cert.value);
            let mut csv = String::from("context,outcome,coefficient\n");
            for ctx in s.contexts() {
                for (t, y) in cert.coefficients[ctx.id].iter().enumerate() {
                    csv.push_str(&format!("{},{},{}\n", ctx.id, tuple_string(t, ctx.len()), format_pq(y)));
                }
            }
            let path = write_file(out, "certificate.csv", &csv)?;
            println!("certificate written to {}", path.display());
            Ok(EXIT_INFEASIBLE)
        }
        FeasibilityStatus::InconsistentMarginals => {
            if let Some((a, b)) = verdict.consistency.worst_pair {
                println!("contexts {a} and {b} disagree on their shared observables");
            }
            Ok(EXIT_INCONSISTENT)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimProtocol {
    Triple,
    Pair,
    Quantum,
}

#[derive(Debug, Clone)]
pub struct SimulateConfig {
    pub protocol: SimProtocol,
    pub runs: u64,
    pub seed: u64,
    pub marginals: Option<PathBuf>,
    pub omega_tau: Option<f64>,
    pub threads: Option<usize>,
    pub out: PathBuf,
}

fn summary_base(cfg: &SimulateConfig, name: &str, s: &Scenario, est: &EstimatedCorrelations) -> serde_json::Value {
    let lg = lg_statistic(est).ok();
    let lg_err = est.lg_stderr().ok();
    let counts: serde_json::Map<String, serde_json::Value> = est
        .pairs
        .iter()
        .map(|(&(i, j), e)| (format!("{}{}", s.label(i), s.label(j)), e.as_ref().map_or(0, |e| e.count).into()))
        .collect();
    serde_json::json!({
        "protocol": name,
        "config": {
            "protocol": name,
            "runs": cfg.runs,
            "seed": cfg.seed,
            "threads": cfg.threads,
            "marginals": cfg.marginals.as_ref().map(|p| p.display().to_string()),
            "omega_tau": cfg.omega_tau,
            "out": cfg.out.display().to_string(),
            "scenario": s.to_file(),
        },
        "seed": cfg.seed,
        "estimates": est.to_json(s),
        "counts": counts,
        "lg_statistic": lg,
        "lg_stderr": lg_err,
        "metadata": { "timestamp": chrono::Utc::now().to_rfc3339() },
    })
}

fn triple_joint(path: Option<&Path>) -> Result<JointDistribution> {
    let Some(path) = path else { return Ok(JointDistribution::uniform(3)) };
    let (s, tables) = parse_marginal_file(&read(path)?)?;
    if s.num_observables() != 3 || s.contexts().len() != 1 || s.contexts()[0].len() != 3 {
        return Err(Error::Validation("triple protocol needs one context holding all three observables".into()));
    }
    let ctx = &s.contexts()[0];
    let table = &tables.first().ok_or_else(|| Error::Validation("missing triple table".into()))?.table;
    JointDistribution::new(3, assignments(3).map(|a| table[a.restrict(&ctx.members)].clone()).collect())
}

fn pair_config(path: Option<&Path>) -> Result<PairProtocolConfig> {
    let Some(path) = path else { return Ok(PairProtocolConfig::anticorrelated()) };
    let (s, tables) = parse_marginal_file(&read(path)?)?;
    PairProtocolConfig::new(s, SubensembleRule::RoundRobin, tables)
}

pub fn simulate(cfg: &SimulateConfig) -> Result<u8> {
    if cfg.runs == 0 {
        return Err(Error::Validation("--runs must be at least 1".into()));
    }
    prepare_out(&cfg.out)?;
    let mut opts = RunOptions::new(cfg.runs, cfg.seed);
    opts.threads = cfg.threads;

    let records_path = cfg.out.join("records.csv");
    let file =
        File::create(&records_path).map_err(|e| Error::Validation(format!("cannot write {}: {e}", records_path.display())))?;
    let mut sink = CsvSink::new(BufWriter::new(file))?;

    let summary = match cfg.protocol {
        SimProtocol::Triple => {
            let joint = triple_joint(cfg.marginals.as_deref())?;
            let s = simulator::triple_scenario();
            let outcome = simulator::run_triple_protocol(&s, &joint, &opts, &mut sink)?;
            println!("min per-record statistic: {}", outcome.summary.min);
            let mut summary = summary_base(cfg, "triple", &s, &outcome.estimates);
            summary["per_record"] = serde_json::to_value(&outcome.summary).expect("serializable");
            summary
        }
        SimProtocol::Pair => {
            let pc = pair_config(cfg.marginals.as_deref())?;
            let est = simulator::run_pair_protocol(&pc, &opts, &mut sink)?;
            summary_base(cfg, "pair", &pc.scenario, &est)
        }
        SimProtocol::Quantum => {
            let wt = cfg.omega_tau.ok_or_else(|| Error::Validation("quantum protocol needs --omega-tau".into()))?;
            let model = QuantumTwoLevelModel::equally_spaced(wt)?;
            let est = simulator::run_quantum_pair_protocol(&model, &opts, &mut sink)?;
            let s = simulator::pair_scenario();
            let mut summary = summary_base(cfg, "quantum", &s, &est);
            let exact: Vec<f64> = [(1, 2), (1, 3), (2, 3)]
                .iter()
                .map(|&(i, j)| simulator::quantum_pair_correlator(&model, i, j))
                .collect::<Result<_>>()?;
            summary["exact_correlators"] = serde_json::json!(exact);
            summary["exact_lg_statistic"] = serde_json::json!(exact.iter().sum::<f64>());
            summary
        }
    };
    sink.into_inner().flush()?;

    match summary["lg_statistic"].as_f64() {
        Some(v) => println!("lg_statistic: {v}"),
        None => println!("lg_statistic: unavailable (a pair was never measured)"),
    }
    let text = serde_json::to_string_pretty(&summary).expect("serializable");
    let path = write_file(&cfg.out, "summary.json", &(text + "\n"))?;
    println!("wrote {} and {}", records_path.display(), path.display());
    Ok(EXIT_OK)
}

pub fn twoslit(geometry: Option<&Path>, sampling: Option<(u64, u64)>, threads: Option<usize>, out: &Path) -> Result<u8> {
    let input = match geometry {
        Some(path) => TwoSlitInput::from_json(&read(path)?)?,
        None => TwoSlitInput::Geometry(SlitGeometry::default()),
    };
    if let TwoSlitInput::Geometry(g) = &input {
        g.validate()?;
        warn_all(g.warnings());
    }
    prepare_out(out)?;
    let [c1, c2, c12] = input.contexts()?;
    let report = two_slit::additivity_report(&c1, &c2, &c12)?;
    println!("classical-additive: {}", report.classical_additive);
    println!("max |deficit|: {:e}", report.max_abs_deficit);
    println!("deficit sum: {:e}", report.deficit_sum());
    let path = write_file(out, "report.csv", &report.to_csv())?;
    println!("wrote {}", path.display());

    if let Some((runs, seed)) = sampling {
        let mut opts = RunOptions::new(runs, seed);
        opts.threads = threads;
        let hits = two_slit::sample_screen_hits(&c12, &opts)?;
        let mut csv = String::from("s,count\n");
        for (s, n) in c12.positions.iter().zip(&hits) {
            csv.push_str(&format!("{s},{n}\n"));
        }
        let path = write_file(out, "hits.csv", &csv)?;
        println!("wrote {}", path.display());
    }
    Ok(EXIT_OK)
}
