use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use hecke_afl::afl::{afl_check, comm_check, coprimality_check, fl_check, kernel_check, VerificationReport};
use hecke_afl::hecke::{
    atomic_phi, bc, m_coefficient, phi_coordinates, sat_f_bracket, sat_gl2_fprime, sat_gl_minuscule,
    sat_u2_f, sat_u2_phi, UHecke,
};
use hecke_afl::lattice::{standard_selfdual, witness_partition, EnumOptions, LatticeContext};
use hecke_afl::orbital::{make_gamma, orb_s, orbit_record};
use hecke_afl::symfun::QLaurent;
use hecke_afl::{Error, FieldElement, PrimeConfig};

const SCHEMA: u32 = 1;
const THREADS_VAR: &str = "HECKE_AFL_THREADS";

#[derive(Parser, Debug)]
#[command(name = "hecke-afl", version, about = "Exact Hecke algebra, orbital integral and lattice checks")]
struct Cli {
    /// Odd residue characteristic.
    #[arg(long, global = true, default_value_t = 3)]
    p: u64,
    /// Working p-adic precision for norm equations.
    #[arg(long, global = true, default_value_t = 32, value_parser = clap::value_parser!(u32).range(8..))]
    precision: u32,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Cap on the size of any stored lattice set.
    #[arg(long, global = true, default_value_t = EnumOptions::default().budget)]
    budget: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SatFamily {
    #[value(name = "f'", alias = "fprime")]
    FPrime,
    F,
    Phi,
    Fbracket,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum BcFamily {
    /// `q^i σ_i` on `GL_n`.
    Minuscule,
    #[value(name = "f'", alias = "fprime")]
    FPrime,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Satake transform of a named basis element.
    Satake {
        #[arg(long, value_enum)]
        family: SatFamily,
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, allow_hyphen_values = true)]
        m: Option<i64>,
        #[arg(long)]
        t: Option<usize>,
    },
    /// Base change of a named GL element.
    Bc {
        #[arg(long, value_enum)]
        family: BcFamily,
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long)]
        i: Option<usize>,
        #[arg(long)]
        m: Option<i64>,
    },
    /// f-basis expansion of an atomic function with its lattice counts.
    Atomic {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        t: usize,
    },
    /// Orbital integrals of `γ(a, b)`.
    Orb {
        #[arg(long, allow_hyphen_values = true)]
        a: String,
        #[arg(long, allow_hyphen_values = true)]
        b: String,
        #[arg(long)]
        m: usize,
    },
    /// Fundamental lemma in both parity branches.
    FlCheck {
        #[arg(long, default_value_t = 200)]
        sample_size: usize,
        #[arg(long, default_value_t = 5)]
        m_max: usize,
    },
    /// Arithmetic fundamental lemma for `n = 1`.
    AflCheck {
        #[arg(long, value_delimiter = ',', default_value = "1,3,5,7")]
        r_list: Vec<i64>,
        #[arg(long, default_value_t = 5)]
        m_max: usize,
    },
    /// Vertex lattice counts and the commutativity check.
    Lattice(LatticeArgs),
    /// Kernel of the derivative map on the unitary Hecke algebra.
    KernelCheck {
        #[arg(long, default_value_t = 6)]
        m_max: usize,
    },
    /// Coprimality of the kernel polynomials with a Bézout certificate.
    CoprimeCheck {
        #[arg(long, value_delimiter = ',', default_value = "3,5,7,11,13")]
        q_values: Vec<u64>,
    },
}

#[derive(Args, Debug)]
struct LatticeArgs {
    #[command(subcommand)]
    action: LatticeAction,
}

#[derive(Subcommand, Debug)]
enum LatticeAction {
    /// `m(t', t)` and the witness partition at the standard lattice.
    Count {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        t: usize,
        #[arg(long, default_value_t = 0)]
        t_prime: usize,
    },
    /// Compares the two composite correspondences seeded at the standard lattice.
    Comm {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        t: usize,
        #[arg(long)]
        t2: usize,
    },
}

/// What a subcommand produced: its JSON result and whether every check passed.
struct Outcome {
    result: Value,
    pass: bool,
}

impl Outcome {
    fn info(result: Value) -> Self {
        Outcome { result, pass: true }
    }

    fn report(r: &VerificationReport) -> Result<Self, Error> {
        let result = serde_json::to_value(r).map_err(|e| Error::InvalidInput(e.to_string()))?;
        Ok(Outcome { result, pass: r.passed() })
    }
}

fn laurent_json(c: &QLaurent) -> Value {
    Value::String(c.to_string())
}

fn u_json(h: &UHecke) -> Result<Value, Error> {
    let mut out = Map::new();
    out.insert("n".into(), json!(h.n()));
    out.insert("sat".into(), json!(h.sat().to_string()));
    if let Some(text) = h.named_text() {
        out.insert("f_basis".into(), json!(text));
    }
    if h.n() == 2 {
        let coords: BTreeMap<String, Value> =
            phi_coordinates(h)?.iter().map(|(k, c)| (format!("phi{k}"), laurent_json(c))).collect();
        out.insert("phi_basis".into(), json!(coords));
    }
    Ok(Value::Object(out))
}

fn need<T>(v: Option<T>, flag: &str) -> Result<T, Error> {
    v.ok_or_else(|| Error::InvalidInput(format!("--{flag} is required here")))
}

fn rank_two(n: usize) -> Result<(), Error> {
    if n != 2 {
        return Err(Error::Range(format!("this family is only defined for n = 2, got {n}")));
    }
    Ok(())
}

fn run(cli: &Cli, cfg: PrimeConfig) -> Result<Outcome, Error> {
    let opts = EnumOptions { budget: cli.budget, seed: cli.seed };
    match &cli.command {
        Command::Satake { family, n, m, t } => {
            let mut out = Map::new();
            match family {
                SatFamily::FPrime => {
                    rank_two(*n)?;
                    let h = sat_gl2_fprime(need(*m, "m")?);
                    out.insert("group".into(), json!("GL"));
                    out.insert("n".into(), json!(2));
                    out.insert("sat".into(), json!(h.sat().to_string()));
                }
                SatFamily::F | SatFamily::Phi => {
                    rank_two(*n)?;
                    let m = need(*m, "m")?;
                    let h = if *family == SatFamily::F { sat_u2_f(m) } else { sat_u2_phi(m) };
                    out.insert("group".into(), json!("U"));
                    out.extend(as_object(u_json(&h)?));
                }
                SatFamily::Fbracket => {
                    let h = sat_f_bracket(*n, need(*t, "t")?)?;
                    out.insert("group".into(), json!("U"));
                    out.extend(as_object(u_json(&h)?));
                }
            }
            Ok(Outcome::info(Value::Object(out)))
        }
        Command::Bc { family, n, i, m } => {
            let g = match family {
                BcFamily::Minuscule => sat_gl_minuscule(*n, need(*i, "i")?)?,
                BcFamily::FPrime => {
                    rank_two(*n)?;
                    sat_gl2_fprime(need(*m, "m")?)
                }
            };
            let u = bc(&g)?;
            Ok(Outcome::info(json!({ "source": g.sat().to_string(), "image": u_json(&u)? })))
        }
        Command::Atomic { n, t } => {
            let h = atomic_phi(*n, *t, cfg.p, &opts)?;
            let mut counts = Map::new();
            for tp in (0..=*t).step_by(2) {
                counts.insert(format!("m({tp},{t})"), json!(m_coefficient(*n, tp, *t, cfg.p, &opts)?));
            }
            let mut out = as_object(u_json(&h)?);
            out.insert("q".into(), json!(cfg.p));
            out.insert("m_counts".into(), Value::Object(counts));
            Ok(Outcome::info(Value::Object(out)))
        }
        Command::Orb { a, b, m } => {
            let orbit = make_gamma(FieldElement::parse(a, cfg)?, FieldElement::parse(b, cfg)?)?;
            let plain = orb_s(&orbit, *m);
            let record = serde_json::to_value(orbit_record(&orbit, *m)).map_err(|e| Error::InvalidInput(e.to_string()))?;
            Ok(Outcome::info(json!({
                "tilde": record,
                "plain": {
                    "laurent": plain.to_string(),
                    "value0": hecke_afl::rational_string(&plain.value_at_0()),
                    "dvalue0_logq": hecke_afl::rational_string(&plain.derivative_at_0()),
                },
            })))
        }
        Command::FlCheck { sample_size, m_max } => Outcome::report(&fl_check(cfg, *sample_size, *m_max, cli.seed)?),
        Command::AflCheck { r_list, m_max } => Outcome::report(&afl_check(cfg, r_list, *m_max, cli.seed)?),
        Command::KernelCheck { m_max } => Outcome::report(&kernel_check(cfg, *m_max, cli.seed)?),
        Command::CoprimeCheck { q_values } => Outcome::report(&coprimality_check(q_values)?),
        Command::Lattice(args) => match &args.action {
            LatticeAction::Count { n, t, t_prime } => {
                let count = hecke_afl::lattice::m_count(*n, *t_prime, *t, cfg.p, &opts)?;
                let ctx = LatticeContext::new(*n, cfg.p, 2)?;
                let partition = witness_partition(&standard_selfdual(&ctx), *t, &opts)?;
                Ok(Outcome::info(json!({
                    "n": n,
                    "q": cfg.p,
                    "t": t,
                    "t_prime": t_prime,
                    "count": count,
                    "witness_partition": partition,
                })))
            }
            LatticeAction::Comm { n, t, t2 } => Outcome::report(&comm_check(*n, cfg.p, *t, *t2, &opts)?),
        },
    }
}

fn as_object(v: Value) -> Map<String, Value> {
    match v {
        Value::Object(m) => m,
        other => {
            let mut m = Map::new();
            m.insert("value".into(), other);
            m
        }
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Satake { .. } => "satake",
        Command::Bc { .. } => "bc",
        Command::Atomic { .. } => "atomic",
        Command::Orb { .. } => "orb",
        Command::FlCheck { .. } => "fl-check",
        Command::AflCheck { .. } => "afl-check",
        Command::Lattice(a) => match a.action {
            LatticeAction::Count { .. } => "lattice count",
            LatticeAction::Comm { .. } => "lattice comm",
        },
        Command::KernelCheck { .. } => "kernel-check",
        Command::CoprimeCheck { .. } => "coprime-check",
    }
}

/// One `path: value` line per leaf; arrays of objects get an index segment.
fn table_lines(prefix: &str, v: &Value, out: &mut Vec<String>) {
    let join = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                table_lines(&join(k), x, out);
            }
        }
        Value::Array(xs) if xs.iter().any(|x| x.is_object() || x.is_array()) => {
            for (i, x) in xs.iter().enumerate() {
                table_lines(&join(&i.to_string()), x, out);
            }
        }
        Value::String(s) => out.push(format!("{prefix}: {s}")),
        other => out.push(format!("{prefix}: {other}")),
    }
}

fn render(cli: &Cli, envelope: &Value) -> String {
    match cli.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(envelope).expect("JSON values serialize");
            s.push('\n');
            s
        }
        Format::Table => {
            let mut lines = Vec::new();
            table_lines("", envelope, &mut lines);
            lines.join("\n") + "\n"
        }
    }
}

fn emit(cli: &Cli, text: &str) -> Result<(), ExitCode> {
    match &cli.out {
        Some(path) => fs::write(path, text).map_err(|e| {
            eprintln!("error: cannot write {}: {e}", path.display());
            ExitCode::from(2)
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var(THREADS_VAR) else { return Ok(()) };
    let n: usize = raw.trim().parse().map_err(|_| format!("{THREADS_VAR}={raw} is not a thread count"))?;
    if n == 0 {
        return Err(format!("{THREADS_VAR} must be positive"));
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    let cfg = match PrimeConfig::for_prime(cli.p).and_then(|c| c.with_precision(cli.precision)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    let outcome = match run(&cli, cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    let envelope = json!({
        "schema": SCHEMA,
        "command": command_name(&cli.command),
        "config": { "p": cfg.p, "precision": cfg.precision, "seed": cli.seed },
        "pass": outcome.pass,
        "result": outcome.result,
    });
    if let Err(code) = emit(&cli, &render(&cli, &envelope)) {
        return code;
    }
    ExitCode::from(if outcome.pass { 0 } else { 1 })
}
