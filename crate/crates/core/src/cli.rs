//! The `drgame` command line.
//!
//! Exit codes: 0 on success, 1 when an input fails validation or a profile
//! fails verification or certification, 2 on usage errors.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::ambiguity::validate;
use crate::equilibrium::{
    best_response, build_certificate, find_equilibria, verify_equilibrium, RowKind, SearchConfig,
};
use crate::error::Error;
use crate::experiment::{
    parse_experiment_spec, run_experiment, run_experiment_spec, write_report, ExperimentReport,
};
use crate::format::sig9;
use crate::game::{expected_payoff, StrategyProfile};
use crate::gamefile::{load_game, LoadedGame};
use crate::inspection::InspectionParams;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Default gap tolerance of `verify`, loose enough for profiles given to
/// three or four decimals.
pub const VERIFY_TOL: f64 = 5e-2;

#[derive(Debug, Parser)]
#[command(
    name = "drgame",
    version,
    about = "Distributionally robust games with worst-case CVaR players"
)]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check that the ambiguity set in a game file is well formed.
    Validate { file: PathBuf },
    /// Best response of one player to a profile (uniform by default).
    BestResponse {
        file: PathBuf,
        /// Player number, starting at 1.
        #[arg(long)]
        player: usize,
        /// Stacked strategies, comma separated.
        #[arg(long)]
        profile: Option<NumberList>,
    },
    /// Per-player gaps of a profile and whether it is an equilibrium.
    Verify {
        file: PathBuf,
        /// Stacked strategies, comma separated.
        #[arg(long)]
        profile: NumberList,
        /// Largest total gap accepted as an equilibrium.
        #[arg(long, default_value_t = VERIFY_TOL)]
        tol: f64,
    },
    /// Search for equilibria.
    Solve {
        file: PathBuf,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Residuals of the optimality system at a profile.
    Certify {
        file: PathBuf,
        /// Stacked strategies, comma separated.
        #[arg(long)]
        profile: NumberList,
    },
    /// Solve the inspection game.
    Inspection {
        /// Wage paid to the worker unless caught shirking.
        #[arg(long, default_value_t = 15.0)]
        w: f64,
        /// Work cost, lower end.
        #[arg(long, default_value_t = 8.0, allow_negative_numbers = true)]
        g_lo: f64,
        /// Work cost, upper end.
        #[arg(long, default_value_t = 12.0, allow_negative_numbers = true)]
        g_hi: f64,
        /// Value of work to the inspector, lower end.
        #[arg(long, default_value_t = 16.0, allow_negative_numbers = true)]
        v_lo: f64,
        /// Value of work to the inspector, upper end.
        #[arg(long, default_value_t = 24.0, allow_negative_numbers = true)]
        v_hi: f64,
        /// Inspection cost, lower end.
        #[arg(long, default_value_t = 4.0, allow_negative_numbers = true)]
        h_lo: f64,
        /// Inspection cost, upper end.
        #[arg(long, default_value_t = 6.0, allow_negative_numbers = true)]
        h_hi: f64,
        /// Cap on the mean absolute deviation.
        #[arg(long, default_value_t = 4.0)]
        s: f64,
        /// Worker's CVaR level in (0, 1].
        #[arg(long, default_value_t = 1.0)]
        eps1: f64,
        /// Inspector's CVaR level in (0, 1].
        #[arg(long, default_value_t = 1.0)]
        eps2: f64,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Run a risk-level sweep described by a TOML file.
    Experiment {
        spec: PathBuf,
        /// Directory for equilibria.csv, references.csv and report.json.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
struct SearchArgs {
    /// Number of random starting profiles.
    #[arg(long, default_value_t = SearchConfig::default().restarts)]
    restarts: usize,
    /// Seed for the random starts.
    #[arg(long, default_value_t = SearchConfig::default().seed)]
    seed: u64,
    /// Largest total gap accepted as an equilibrium.
    #[arg(long, default_value_t = SearchConfig::default().tol)]
    tol: f64,
    /// Profiles closer than this are merged.
    #[arg(long, default_value_t = SearchConfig::default().dedupe_radius)]
    dedupe_radius: f64,
    /// Iteration budget per start.
    #[arg(long, default_value_t = SearchConfig::default().max_iterations)]
    max_iterations: usize,
}

impl SearchArgs {
    fn config(&self) -> SearchConfig {
        SearchConfig {
            restarts: self.restarts,
            seed: self.seed,
            tol: self.tol,
            dedupe_radius: self.dedupe_radius,
            max_iterations: self.max_iterations,
        }
    }
}

/// Comma-separated reals, e.g. a stacked profile `0.5,0.5,1,0`.
#[derive(Debug, Clone, PartialEq)]
struct NumberList(Vec<f64>);

impl std::str::FromStr for NumberList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|e| format!("bad number {t:?}: {e}"))
            })
            .collect::<Result<Vec<_>, _>>()
            .map(NumberList)
    }
}

/// Parses `argv` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{text}");
                    EXIT_USAGE
                }
            };
        }
    };
    match dispatch(&cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            match e {
                Error::PlayerOutOfRange { .. } | Error::InvalidConfig(_) => EXIT_USAGE,
                _ => EXIT_FAILURE,
            }
        }
    }
}

type CmdResult = Result<i32, Error>;

fn dispatch(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let fmt = cli.format;
    match &cli.command {
        Command::Validate { file } => cmd_validate(file, fmt, out),
        Command::BestResponse {
            file,
            player,
            profile,
        } => cmd_best_response(
            file,
            *player,
            profile.as_ref().map(|p| p.0.as_slice()),
            fmt,
            out,
        ),
        Command::Verify { file, profile, tol } => cmd_verify(file, &profile.0, *tol, fmt, out, err),
        Command::Solve { file, search } => {
            let game = load_validated(file)?;
            cmd_solve(&game, &search.config(), fmt, out, err)
        }
        Command::Certify { file, profile } => cmd_certify(file, &profile.0, fmt, out, err),
        Command::Inspection {
            w,
            g_lo,
            g_hi,
            v_lo,
            v_hi,
            h_lo,
            h_hi,
            s,
            eps1,
            eps2,
            search,
        } => {
            let params = InspectionParams {
                wage: *w,
                g: (*g_lo, *g_hi),
                v: (*v_lo, *v_hi),
                h: (*h_lo, *h_hi),
                mad_cap: *s,
                mean: None,
                eps: [*eps1, *eps2],
            };
            let report = run_experiment(&params, &[[*eps1, *eps2]], &search.config())?;
            if report.row_count() == 0 {
                writeln!(err, "no equilibrium found")?;
            }
            emit_report(&report, fmt, out)?;
            Ok(EXIT_OK)
        }
        Command::Experiment { spec, out: dir } => {
            let text = std::fs::read_to_string(spec)?;
            let spec = parse_experiment_spec(&text)?;
            let report = run_experiment_spec(&spec)?;
            write_report(&report, dir)?;
            emit_experiment_summary(&report, fmt, out)?;
            Ok(EXIT_OK)
        }
    }
}

fn load_validated(file: &Path) -> Result<LoadedGame, Error> {
    let game = load_game(file)?;
    let report = validate(&game.ambiguity)?;
    if let Some(failed) = report.checks.iter().find(|c| !c.passed) {
        return Err(Error::GameFile(format!(
            "{}: {}",
            failed.name, failed.detail
        )));
    }
    Ok(game)
}

fn profile_for(game: &LoadedGame, stacked: &[f64]) -> Result<StrategyProfile, Error> {
    StrategyProfile::from_stacked(game.ambiguity.shape(), stacked)
}

fn json_num(x: f64) -> Value {
    sig9(x)
        .parse::<f64>()
        .map(Value::from)
        .unwrap_or(Value::Null)
}

fn json_nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| json_num(x)).collect())
}

fn write_json(out: &mut dyn Write, v: &Value) -> Result<(), Error> {
    writeln!(
        out,
        "{}",
        serde_json::to_string_pretty(v).expect("json value serializes")
    )?;
    Ok(())
}

fn cmd_validate(file: &Path, fmt: Format, out: &mut dyn Write) -> CmdResult {
    let game = load_game(file)?;
    let report = validate(&game.ambiguity)?;
    match fmt {
        Format::Csv => {
            writeln!(out, "check,passed,detail")?;
            for c in &report.checks {
                writeln!(
                    out,
                    "{},{},\"{}\"",
                    c.name,
                    c.passed,
                    c.detail.replace('"', "\"\"")
                )?;
            }
        }
        Format::Json => {
            let checks: Vec<Value> = report
                .checks
                .iter()
                .map(|c| json!({"name": c.name, "passed": c.passed, "detail": c.detail}))
                .collect();
            write_json(out, &json!({"passed": report.passed(), "checks": checks}))?;
        }
    }
    Ok(if report.passed() {
        EXIT_OK
    } else {
        EXIT_FAILURE
    })
}

fn cmd_best_response(
    file: &Path,
    player: usize,
    profile: Option<&[f64]>,
    fmt: Format,
    out: &mut dyn Write,
) -> CmdResult {
    let game = load_validated(file)?;
    let shape = game.ambiguity.shape();
    let players = shape.num_players();
    if player == 0 || player > players {
        return Err(Error::PlayerOutOfRange {
            index: player,
            players,
        });
    }
    let i = player - 1;
    let x = match profile {
        Some(p) => profile_for(&game, p)?,
        None => StrategyProfile::uniform(shape),
    };
    let br = best_response(&game.ambiguity, game.risk.eps(i), &x, i)?;
    match fmt {
        Format::Csv => {
            let cols: Vec<String> = (1..=shape.actions(i)).map(|a| format!("u_{a}")).collect();
            writeln!(out, "player,value,{}", cols.join(","))?;
            writeln!(
                out,
                "{},{},{}",
                player,
                sig9(br.value),
                crate::format::join(br.strategy.probs())
            )?;
        }
        Format::Json => write_json(
            out,
            &json!({"player": player, "value": json_num(br.value), "strategy": json_nums(br.strategy.probs())}),
        )?,
    }
    Ok(EXIT_OK)
}

fn cmd_verify(
    file: &Path,
    stacked: &[f64],
    tol: f64,
    fmt: Format,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> CmdResult {
    let game = load_validated(file)?;
    let x = profile_for(&game, stacked)?;
    let v = verify_equilibrium(&game.ambiguity, &game.risk, &x, tol)?;
    match fmt {
        Format::Csv => {
            writeln!(out, "player,worst_case_cvar,best_value,gap")?;
            for (i, p) in v.report.players.iter().enumerate() {
                writeln!(
                    out,
                    "{},{},{},{}",
                    i + 1,
                    sig9(p.current),
                    sig9(p.best.value),
                    sig9(p.gap)
                )?;
            }
            writeln!(out, "total,,,{}", sig9(v.report.total))?;
        }
        Format::Json => {
            let players: Vec<Value> = v
                .report
                .players
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    json!({
                        "player": i + 1,
                        "worst_case_cvar": json_num(p.current),
                        "best_value": json_num(p.best.value),
                        "gap": json_num(p.gap),
                        "best_response": json_nums(p.best.strategy.probs()),
                    })
                })
                .collect();
            write_json(
                out,
                &json!({"players": players, "total_gap": json_num(v.report.total), "tol": json_num(tol), "is_equilibrium": v.is_equilibrium}),
            )?;
        }
    }
    if v.is_equilibrium {
        writeln!(
            err,
            "equilibrium: total gap {} <= {}",
            sig9(v.report.total),
            sig9(tol)
        )?;
        Ok(EXIT_OK)
    } else {
        writeln!(
            err,
            "not an equilibrium: total gap {} > {}",
            sig9(v.report.total),
            sig9(tol)
        )?;
        Ok(EXIT_FAILURE)
    }
}

fn cmd_solve(
    game: &LoadedGame,
    config: &SearchConfig,
    fmt: Format,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> CmdResult {
    let f = &game.ambiguity;
    let shape = f.shape();
    let found = find_equilibria(f, &game.risk, config)?;
    if found.is_empty() {
        writeln!(err, "no equilibrium found")?;
    }
    let mean = f.mean_tensor();
    let players = shape.num_players();
    let mut rows = Vec::new();
    for eq in &found {
        let payoffs = (0..players)
            .map(|i| expected_payoff(&mean, &eq.profile, i))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push((eq, payoffs));
    }
    match fmt {
        Format::Csv => {
            let mut header = vec!["index".to_string()];
            for i in 0..players {
                header.extend((1..=shape.actions(i)).map(|a| format!("x{}_{}", i + 1, a)));
            }
            header.extend((1..=players).map(|i| format!("payoff{i}")));
            header.extend(["gap", "certificate_valid", "max_residual"].map(String::from));
            writeln!(out, "{}", header.join(","))?;
            for (k, (eq, payoffs)) in rows.iter().enumerate() {
                let c = &eq.certificate;
                writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    k + 1,
                    crate::format::join(&eq.profile.stacked()),
                    crate::format::join(payoffs),
                    sig9(eq.gap),
                    c.is_valid(),
                    sig9(c.max_equality_residual.max(c.max_inequality_violation)),
                )?;
            }
        }
        Format::Json => {
            let items: Vec<Value> = rows
                .iter()
                .map(|(eq, payoffs)| {
                    let c = &eq.certificate;
                    json!({
                        "profile": eq.profile.strategies().iter().map(|s| json_nums(s.probs())).collect::<Vec<_>>(),
                        "payoff": json_nums(payoffs),
                        "gap": json_num(eq.gap),
                        "certificate_valid": c.is_valid(),
                        "max_equality_residual": json_num(c.max_equality_residual),
                        "max_inequality_violation": json_num(c.max_inequality_violation),
                    })
                })
                .collect();
            write_json(out, &json!({"equilibria": items}))?;
        }
    }
    Ok(EXIT_OK)
}

fn cmd_certify(
    file: &Path,
    stacked: &[f64],
    fmt: Format,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> CmdResult {
    let game = load_validated(file)?;
    let x = profile_for(&game, stacked)?;
    let cert = build_certificate(&game.ambiguity, &game.risk, &x)?;
    let kind = |k: RowKind| match k {
        RowKind::Equality => "eq",
        RowKind::Inequality => "le",
    };
    match fmt {
        Format::Csv => {
            writeln!(out, "player,row,kind,residual,violation")?;
            for r in &cert.rows {
                writeln!(
                    out,
                    "{},{},{},{},{}",
                    r.player + 1,
                    r.name,
                    kind(r.kind),
                    sig9(r.residual),
                    sig9(r.violation())
                )?;
            }
        }
        Format::Json => {
            let players: Vec<Value> = cert
                .players
                .iter()
                .map(|p| {
                    json!({
                        "player": p.player + 1,
                        "rho": json_num(p.rho),
                        "zeta": json_num(p.primal.zeta),
                        "alpha": json_num(p.primal.alpha),
                        "gamma": json_num(p.primal.gamma),
                        "beta": json_nums(&p.primal.beta),
                        "lambda": json_nums(&p.primal.lambda),
                        "kappa": json_nums(&p.primal.kappa),
                        "delta": json_nums(&p.primal.delta),
                        "nu": json_nums(&p.primal.nu),
                        "xi": json_nums(&p.primal.xi),
                        "theta": json_nums(&p.primal.theta),
                        "tau": json_nums(&p.duals.tau),
                        "f": json_nums(&p.duals.f),
                        "phi": json_nums(&p.duals.phi),
                        "g": json_nums(&p.duals.g),
                    })
                })
                .collect();
            let rows: Vec<Value> = cert
                .rows
                .iter()
                .map(|r| json!({"player": r.player + 1, "row": r.name, "kind": kind(r.kind), "residual": json_num(r.residual)}))
                .collect();
            write_json(
                out,
                &json!({
                    "valid": cert.is_valid(),
                    "max_equality_residual": json_num(cert.max_equality_residual),
                    "max_inequality_violation": json_num(cert.max_inequality_violation),
                    "players": players,
                    "rows": rows,
                }),
            )?;
        }
    }
    let summary = format!(
        "max equality residual {}, max inequality violation {}",
        sig9(cert.max_equality_residual),
        sig9(cert.max_inequality_violation)
    );
    if cert.is_valid() {
        writeln!(err, "certificate valid: {summary}")?;
        Ok(EXIT_OK)
    } else {
        let worst = cert
            .worst_row()
            .map(|r| format!(" (worst row: player {} {})", r.player + 1, r.name));
        writeln!(
            err,
            "certificate invalid: {summary}{}",
            worst.unwrap_or_default()
        )?;
        Ok(EXIT_FAILURE)
    }
}

fn emit_report(report: &ExperimentReport, fmt: Format, out: &mut dyn Write) -> Result<(), Error> {
    match fmt {
        Format::Csv => write!(out, "{}", report.to_csv())?,
        Format::Json => writeln!(out, "{}", report.to_json()?)?,
    }
    Ok(())
}

fn emit_experiment_summary(
    report: &ExperimentReport,
    fmt: Format,
    out: &mut dyn Write,
) -> Result<(), Error> {
    let passed = report.references.iter().filter(|r| r.passed).count();
    let required: Vec<_> = report.references.iter().filter(|r| r.required).collect();
    let required_passed = required.iter().filter(|r| r.passed).count();
    match fmt {
        Format::Csv => {
            writeln!(out, "eps1,eps2,equilibria")?;
            for p in &report.points {
                writeln!(
                    out,
                    "{},{},{}",
                    sig9(p.eps[0]),
                    sig9(p.eps[1]),
                    p.equilibria.len()
                )?;
            }
            writeln!(
                out,
                "references_passed,{},{}",
                passed,
                report.references.len()
            )?;
            writeln!(
                out,
                "required_passed,{},{}",
                required_passed,
                required.len()
            )?;
        }
        Format::Json => write_json(
            out,
            &json!({
                "points": report.points.iter().map(|p| json!({"eps": json_nums(&p.eps), "equilibria": p.equilibria.len()})).collect::<Vec<_>>(),
                "references_passed": passed,
                "references_total": report.references.len(),
                "required_passed": required_passed,
                "required_total": required.len(),
            }),
        )?,
    }
    Ok(())
}
