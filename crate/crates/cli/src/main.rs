use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{value_parser, Arg, ArgAction, ArgMatches, Command};
use rgrank::data::{DelimitedFormat, SplitRatios};
use rgrank::harness::{
    best_point, emit_convergence_curve, grid_search, load_datasets, prep, read_logs, read_set_file, run_eval,
    run_train, run_verify, write_curve, CurveMetric, Fault, GridSpec, PrepOptions, RunConfig, VerifyOptions, KEYS,
    SUITES,
};
use rgrank::Error;

const EXIT_USAGE: u8 = 1;
const EXIT_RUNTIME: u8 = 2;
const EXIT_VERIFY: u8 = 3;

enum Failure {
    Usage(String),
    Runtime(String),
    Verify,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(_) => Failure::Usage(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn config_args(cmd: Command) -> Command {
    let cmd = cmd.arg(Arg::new("config").long("config").short('c').value_name("FILE").help("key = value config file"));
    KEYS.iter().fold(cmd, |cmd, &key| {
        let mut arg = Arg::new(key).long(key).value_name("VALUE").help(format!("override config key '{key}'"));
        if key.contains('_') {
            arg = arg.alias(&*key.replace('_', "-").leak());
        }
        cmd.arg(arg)
    })
}

fn cli() -> Command {
    Command::new("rgrank")
        .about("Squared ranking surrogates, weighted ALS and softmax baselines")
        .version(env!("CARGO_PKG_VERSION"))
        .subcommand_required(true)
        .arg_required_else_help(true)
        .subcommand(
            Command::new("prep")
                .about("Ingest raw interactions, k-core filter and split per context")
                .arg(Arg::new("input").long("input").short('i').required(true).value_name("FILE"))
                .arg(Arg::new("out").long("out").short('o').required(true).value_name("DIR"))
                .arg(Arg::new("delimiter").long("delimiter").default_value("whitespace"))
                .arg(Arg::new("context-col").long("context-col").value_parser(value_parser!(usize)).default_value("0"))
                .arg(Arg::new("object-col").long("object-col").value_parser(value_parser!(usize)).default_value("1"))
                .arg(Arg::new("rating-col").long("rating-col").value_parser(value_parser!(usize)))
                .arg(Arg::new("threshold").long("threshold").value_parser(value_parser!(f64)).requires("rating-col"))
                .arg(Arg::new("header").long("header").action(ArgAction::SetTrue))
                .arg(Arg::new("kcore").long("kcore").value_parser(value_parser!(usize)).default_value("0"))
                .arg(Arg::new("split").long("split").default_value("0.8,0.1,0.1"))
                .arg(Arg::new("seed").long("seed").value_parser(value_parser!(u64)).default_value("0")),
        )
        .subcommand(config_args(Command::new("train").about("Train one model with early stopping")))
        .subcommand(
            Command::new("eval")
                .about("Evaluate a snapshot on a held-out set")
                .arg(Arg::new("snapshot").long("snapshot").required(true).value_name("FILE"))
                .arg(Arg::new("test").long("test").required(true).value_name("FILE"))
                .arg(Arg::new("train").long("train").required(true).value_name("FILE"))
                .arg(Arg::new("cutoff").long("cutoff").short('k').value_parser(value_parser!(usize)).default_value("10")),
        )
        .subcommand(
            Command::new("verify")
                .about("Run the invariant suites (all by default)")
                .arg(
                    Arg::new("suite")
                        .long("suite")
                        .short('s')
                        .action(ArgAction::Append)
                        .value_parser(clap::builder::PossibleValuesParser::new(SUITES)),
                )
                .arg(Arg::new("seed").long("seed").value_parser(value_parser!(u64)).default_value("0"))
                .arg(Arg::new("inject-fault").long("inject-fault").value_name("OP").help("perturb this operation's gradient"))
                .arg(Arg::new("fault-size").long("fault-size").value_parser(value_parser!(f64)).default_value("1e-3")),
        )
        .subcommand(
            Command::new("curve")
                .about("Merge epoch logs into a run,wall_clock_s,metric file")
                .arg(
                    Arg::new("log")
                        .long("log")
                        .required(true)
                        .action(ArgAction::Append)
                        .value_name("LABEL=FILE"),
                )
                .arg(Arg::new("metric").long("metric").default_value("ndcg"))
                .arg(Arg::new("out").long("out").short('o').value_name("FILE")),
        )
        .subcommand(
            config_args(Command::new("grid").about("Grid search over the default hyperparameter grid"))
                .arg(Arg::new("out").long("out").short('o').value_name("FILE")),
        )
}

fn load_config(m: &ArgMatches) -> Result<RunConfig, Failure> {
    let mut cfg = match m.get_one::<String>("config") {
        Some(path) => RunConfig::parse(&fs::read_to_string(path)?)?,
        None => RunConfig::default(),
    };
    for &key in KEYS {
        if let Some(v) = m.get_one::<String>(key) {
            cfg.set(key, v)?;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn output(path: Option<&String>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn cmd_prep(m: &ArgMatches) -> Result<(), Failure> {
    let ratios: Vec<f64> = m
        .get_one::<String>("split")
        .unwrap()
        .split(',')
        .map(|v| v.trim().parse().map_err(|_| Failure::Usage(format!("bad split ratio '{v}'"))))
        .collect::<Result<_, _>>()?;
    let [train, valid, test] = ratios[..] else {
        return Err(Failure::Usage("--split needs three ratios".into()));
    };
    let format = DelimitedFormat {
        delimiter: m.get_one::<String>("delimiter").unwrap().parse()?,
        context_col: *m.get_one("context-col").unwrap(),
        object_col: *m.get_one("object-col").unwrap(),
        rating_col: m.get_one("rating-col").copied(),
        timestamp_col: None,
        has_header: m.get_flag("header"),
    };
    let opts = PrepOptions {
        format,
        rating_threshold: m.get_one("threshold").copied(),
        min_degree: *m.get_one("kcore").unwrap(),
        ratios: SplitRatios { train, valid, test },
        seed: *m.get_one("seed").unwrap(),
        ..Default::default()
    };
    let input = File::open(m.get_one::<String>("input").unwrap())?;
    let s = prep(input, &opts, &PathBuf::from(m.get_one::<String>("out").unwrap()))?;
    println!(
        "contexts={} objects={} train={} valid={} test={} duplicates={} below_threshold={} train_only_contexts={}",
        s.contexts, s.objects, s.train, s.valid, s.test, s.duplicates, s.below_threshold, s.train_only_contexts
    );
    Ok(())
}

fn cmd_train(m: &ArgMatches) -> Result<(), Failure> {
    let cfg = load_config(m)?;
    let out = run_train(&cfg)?;
    if cfg.log.is_none() {
        let mut w = std::io::stdout().lock();
        rgrank::harness::write_logs(&out.logs, &mut w)?;
    }
    let best = out.best_value.map_or("none".to_string(), |v| format!("{v:.6}"));
    eprintln!(
        "epochs={} best_epoch={} best_{}={} stopped_early={}",
        out.logs.len(),
        out.best_epoch,
        cfg.early_stop,
        best,
        out.stopped_early
    );
    Ok(())
}

fn cmd_eval(m: &ArgMatches) -> Result<(), Failure> {
    let train = read_set_file(m.get_one::<String>("train").unwrap().as_ref())?;
    let test = read_set_file(m.get_one::<String>("test").unwrap().as_ref())?;
    let snapshot = PathBuf::from(m.get_one::<String>("snapshot").unwrap());
    let r = run_eval(&snapshot, &test, &train, *m.get_one("cutoff").unwrap())?;
    println!("{}", r.to_record());
    Ok(())
}

fn cmd_verify(m: &ArgMatches) -> Result<(), Failure> {
    let selection: Vec<String> = m.get_many::<String>("suite").map(|v| v.cloned().collect()).unwrap_or_default();
    let fault = m
        .get_one::<String>("inject-fault")
        .map(|op| Fault { operation: op.clone(), size: *m.get_one("fault-size").unwrap() });
    let report = run_verify(&selection, &VerifyOptions { seed: *m.get_one("seed").unwrap(), fault })?;
    print!("{}", report.to_text());
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Verify)
    }
}

fn cmd_curve(m: &ArgMatches) -> Result<(), Failure> {
    let metric: CurveMetric = m.get_one::<String>("metric").unwrap().parse()?;
    let mut runs = Vec::new();
    for spec in m.get_many::<String>("log").unwrap() {
        let (label, path) =
            spec.split_once('=').ok_or_else(|| Failure::Usage(format!("--log expects LABEL=FILE, got '{spec}'")))?;
        runs.push((label.to_string(), read_logs(File::open(path)?)?));
    }
    let points = emit_convergence_curve(&runs, metric)?;
    let mut w = output(m.get_one("out"))?;
    write_curve(&points, &mut w)?;
    w.flush()?;
    Ok(())
}

fn cmd_grid(m: &ArgMatches) -> Result<(), Failure> {
    let cfg = load_config(m)?;
    let data = load_datasets(&cfg)?;
    if data.valid.is_empty() {
        return Err(Failure::Usage("grid search needs a validation set".into()));
    }
    let spec = GridSpec::for_config(&cfg);
    eprintln!("{} grid points", spec.len());
    let points = grid_search(&cfg, &spec, &data.train, &data.valid)?;
    let mut w = output(m.get_one("out"))?;
    writeln!(w, "lambda,alpha,beta,learning_rate,weight_decay,best_{},best_epoch,error", cfg.early_stop)?;
    for p in &points {
        let value = p.best_value.map_or(String::new(), |v| v.to_string());
        let err = p.error.as_deref().unwrap_or("").replace(',', ";");
        writeln!(
            w,
            "{},{},{},{},{},{value},{},{err}",
            p.lambda, p.alpha, p.beta, p.learning_rate, p.weight_decay, p.best_epoch
        )?;
    }
    w.flush()?;
    if let Some(i) = best_point(&points) {
        let p = &points[i];
        eprintln!(
            "best: lambda={} alpha={} beta={} learning_rate={} weight_decay={} value={:.6}",
            p.lambda,
            p.alpha,
            p.beta,
            p.learning_rate,
            p.weight_decay,
            p.best_value.unwrap()
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let matches = match cli().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match matches.subcommand() {
        Some(("prep", m)) => cmd_prep(m),
        Some(("train", m)) => cmd_train(m),
        Some(("eval", m)) => cmd_eval(m),
        Some(("verify", m)) => cmd_verify(m),
        Some(("curve", m)) => cmd_curve(m),
        Some(("grid", m)) => cmd_grid(m),
        _ => unreachable!("subcommand_required"),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_RUNTIME)
        }
        Err(Failure::Verify) => ExitCode::from(EXIT_VERIFY),
    }
}
