use std::io::Read;

use payscheme_core::bounds::deposit_lower_bound;
use payscheme_core::cases::{build_commerce, build_pvc, build_pvc_uncollapsed, CommerceParams, PvcParams};
use payscheme_core::escrow::monte_carlo;
use payscheme_core::info::{implemented_utilities, scheme_for_target, zero_inflation_precondition};
use payscheme_core::reductions::{ala_scheme, lp_to_game, scheme_from_point, AlaSpec};
use payscheme_core::security::{build_constraints, check_system};
use payscheme_core::synthesis::{synthesize, HonestInvariance, Objective, SynthesisOptions};
use payscheme_core::{Error, Matrix, PaymentScheme, SecurityParams};
use serde::de::DeserializeOwned;
use serde_json::{json, Map, Value};

use crate::args::*;
use crate::error::{CliError, CliResult, EXIT_REJECTED};
use crate::format::{Game, GameFile, Ordered, SchemeFile, TargetFile};
use crate::json::{num, nums, to_canonical};

/// Slack up to this (scaled by `max(1, |delta|)`) counts as binding.
pub const BINDING_TOL: f64 = 1e-7;

/// A command's JSON document and exit code.
#[derive(Debug)]
pub struct Report {
    pub doc: Value,
    pub code: i32,
    /// One-line summary for standard error.
    pub note: Option<String>,
}

impl Report {
    fn ok(doc: Value) -> Self {
        Report { doc, code: 0, note: None }
    }
}

pub struct Context<'a> {
    stdin: &'a mut dyn Read,
    stdin_used: bool,
}

impl<'a> Context<'a> {
    pub fn new(stdin: &'a mut dyn Read) -> Self {
        Context { stdin, stdin_used: false }
    }

    /// Reads a file, or standard input for `-` (at most once).
    fn read(&mut self, path: &str) -> CliResult<String> {
        if path == "-" {
            if self.stdin_used {
                return Err(CliError::input("standard input can only be read once"));
            }
            self.stdin_used = true;
            let mut text = String::new();
            self.stdin.read_to_string(&mut text).map_err(|source| CliError::Io {
                path: "<stdin>".into(),
                source,
            })?;
            return Ok(text);
        }
        std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_string(),
            source,
        })
    }

    fn game(&mut self, path: &str) -> CliResult<Game> {
        let text = self.read(path)?;
        GameFile::parse(&text, path)?.into_game()
    }

    fn scheme(&mut self, path: &str, game: &Game) -> CliResult<PaymentScheme> {
        let text = self.read(path)?;
        SchemeFile::parse(&text, path)?.scheme_for(game)
    }

    /// Inline JSON if the argument parses as such, otherwise a file path.
    fn json_arg<T: DeserializeOwned>(&mut self, arg: &str, what: &str) -> CliResult<T> {
        if let Ok(v) = serde_json::from_str(arg) {
            return Ok(v);
        }
        let text = self.read(arg)?;
        serde_json::from_str(&text).map_err(|source| CliError::Json {
            what: what.to_string(),
            source,
        })
    }
}

fn write_doc(path: &str, doc: &Value) -> CliResult<()> {
    std::fs::write(path, to_canonical(doc)).map_err(|source| CliError::Io {
        path: path.to_string(),
        source,
    })
}

fn security(a: SecurityArgs) -> CliResult<SecurityParams> {
    Ok(SecurityParams::new(a.delta, a.t)?)
}

pub fn dispatch(cmd: Command, ctx: &mut Context) -> CliResult<Report> {
    match cmd {
        Command::Synth(a) => synth(a, ctx),
        Command::Verify(a) => verify(a, ctx),
        Command::Implement(a) => implement(a, ctx),
        Command::Bound(a) => bound(a, ctx),
        Command::Spe(a) => spe(a, ctx),
        Command::Simulate(a) => simulate(a, ctx),
        Command::Gen(GenCommand::Commerce(a)) => gen_commerce(a),
        Command::Gen(GenCommand::Pvc(a)) => gen_pvc(a, ctx),
        Command::Gen(GenCommand::FromLp(a)) => gen_from_lp(a, ctx),
        Command::Gen(GenCommand::Ala(a)) => gen_ala(a, ctx),
    }
}

fn diagnostics_into(map: &mut Map<String, Value>, scheme: &PaymentScheme) {
    let d = scheme.diagnostics();
    map.insert("column_sums".into(), nums(&d.column_sums));
    map.insert("self_contained".into(), json!(d.self_contained));
    map.insert("zero_inflation".into(), json!(d.zero_inflation));
}

fn synth(a: SynthArgs, ctx: &mut Context) -> CliResult<Report> {
    let game = ctx.game(&a.game)?;
    let params = security(a.security)?;
    let opts = SynthesisOptions {
        objective: match a.objective {
            ObjectiveArg::Cost => Objective::WeightedCost,
            ObjectiveArg::Minmax => Objective::MinMaxDeposit,
        },
        zero_inflation: a.zero_inflation,
        honest_invariance: match a.honest_invariant {
            None => HonestInvariance::Off,
            Some(HonestArg::PerLeaf) => HonestInvariance::PerLeaf,
            Some(HonestArg::Expected) => HonestInvariance::Expected,
        },
    };
    let objective = match a.objective {
        ObjectiveArg::Cost => "cost",
        ObjectiveArg::Minmax => "minmax",
    };
    match synthesize(&game.tree, &game.info, &game.intended, params, &game.costs_or_unit(), opts) {
        Ok(out) => {
            let file = SchemeFile::new(game.info.alphabet(), &out.scheme);
            if let Some(path) = &a.output {
                write_doc(path, &Value::Object(file.to_map()))?;
            }
            let mut map = file.to_map();
            map.insert("objective".into(), json!(objective));
            map.insert("value".into(), num(out.value));
            map.insert("delta".into(), num(params.delta));
            map.insert("t".into(), json!(params.t));
            map.insert("constraints".into(), json!(out.report.constraints));
            map.insert("min_slack".into(), num(out.report.min_slack));
            diagnostics_into(&mut map, &out.scheme);
            Ok(Report::ok(Value::Object(map)))
        }
        Err(Error::Infeasible(system)) => Ok(Report {
            doc: json!({
                "status": "infeasible",
                "objective": objective,
                "delta": num(params.delta),
                "t": params.t,
                "constraints": system.len(),
            }),
            code: EXIT_REJECTED,
            note: Some(format!("no scheme meets {} constraints", system.len())),
        }),
        Err(e) => Err(e.into()),
    }
}

fn verify(a: VerifyArgs, ctx: &mut Context) -> CliResult<Report> {
    let game = ctx.game(&a.game)?;
    let scheme = ctx.scheme(&a.scheme, &game)?;
    let params = security(a.security)?;
    params.check_players(game.tree.num_players())?;
    let system = build_constraints(&game.tree, &game.intended, params)?;
    let implemented = implemented_utilities(&game.tree.utility_matrix(), &scheme, &game.info)?;
    let slacks = system.slacks(&implemented);
    let report = check_system(&system, implemented);
    let tol = BINDING_TOL * params.delta.abs().max(1.0);
    let binding = slacks.iter().filter(|s| s.abs() <= tol).count();

    let violations: Vec<Value> = report
        .violations
        .iter()
        .map(|v| {
            json!({
                "subgame": game.tree.node(v.subgame).id,
                "coalition": v.coalition.iter().map(|&i| game.player_name(i)).collect::<Vec<_>>(),
                "player": game.player_name(v.player),
                "leaf": game.leaf_id(v.leaf),
                "slack": num(v.slack),
            })
        })
        .collect();
    let summary = format!("{} constraints, {} violations", report.constraints, violations.len());
    Ok(Report {
        doc: json!({
            "pass": report.pass,
            "summary": summary,
            "delta": num(params.delta),
            "t": params.t,
            "constraints": report.constraints,
            "binding": binding,
            "min_slack": num(report.min_slack),
            "violations": violations,
        }),
        code: if report.pass { 0 } else { EXIT_REJECTED },
        note: Some(summary),
    })
}

fn implement(a: ImplementArgs, ctx: &mut Context) -> CliResult<Report> {
    let game = ctx.game(&a.game)?;
    let text = ctx.read(&a.target)?;
    let target = TargetFile::parse(&text, &a.target)?;
    let u = game.tree.utility_matrix();
    match scheme_for_target(&u, &target, &game.info) {
        Ok(scheme) => {
            let file = SchemeFile::new(game.info.alphabet(), &scheme);
            if let Some(path) = &a.output {
                write_doc(path, &Value::Object(file.to_map()))?;
            }
            let implemented = implemented_utilities(&u, &scheme, &game.info)?;
            let mut map = file.to_map();
            map.insert("implementable".into(), json!(true));
            map.insert("residual".into(), num(implemented.max_abs_diff(&target)));
            diagnostics_into(&mut map, &scheme);
            map.insert(
                "zero_inflation_precondition".into(),
                json!(zero_inflation_precondition(&u, &target)?),
            );
            Ok(Report::ok(Value::Object(map)))
        }
        Err(Error::TargetNotImplementable { worst_row, residual }) => Ok(Report {
            doc: json!({
                "implementable": false,
                "worst_player": game.player_name(worst_row),
                "residual": num(residual),
            }),
            code: EXIT_REJECTED,
            note: Some(format!("target not implementable (residual {residual:e})")),
        }),
        Err(e) => Err(e.into()),
    }
}

fn bound(a: BoundArgs, ctx: &mut Context) -> CliResult<Report> {
    let game = ctx.game(&a.game)?;
    let b = deposit_lower_bound(&game.tree, &game.info, &game.intended, security(a.security)?)?;
    Ok(Report::ok(json!({
        "delta": num(b.delta),
        "t": b.t,
        "players": b.players,
        "symbols": b.symbols,
        "constraints": b.alpha,
        "au_norm2": num(b.au_norm2),
        "norm_bound": num(b.norm_bound),
        "conservative_bound": num(b.conservative_bound),
        "delta_g": num(b.delta_g),
    })))
}

fn spe(a: SpeArgs, ctx: &mut Context) -> CliResult<Report> {
    let game = ctx.game(&a.game)?;
    let bi = game.tree.backward_induction();
    let utilities = game.tree.expected_utilities(&bi)?;
    let intended = match game.tree.resolve(&game.intended) {
        Ok(_) => json!({
            "complete": true,
            "subgame_perfect": game.tree.is_subgame_perfect(&game.intended)?,
            "utilities": nums(&game.tree.expected_utilities(&game.intended)?),
        }),
        Err(Error::MissingBranchChoice(_)) => json!({ "complete": false }),
        Err(e) => return Err(e.into()),
    };
    Ok(Report::ok(json!({
        "profile": game.ordered_profile(&bi),
        "utilities": nums(&utilities),
        "intended": intended,
    })))
}

fn simulate(a: SimulateArgs, ctx: &mut Context) -> CliResult<Report> {
    let game = ctx.game(&a.game)?;
    let scheme = ctx.scheme(&a.scheme, &game)?;
    let mut profile = game.intended.clone();
    if a.profile != "intended" {
        let overlay: Ordered<String> = ctx.json_arg(&a.profile, "profile")?;
        for (branch, action) in overlay.0 {
            profile.insert(branch, action);
        }
    }
    let mc = monte_carlo(&game.tree, &game.info, &scheme, &profile, a.trials, a.seed)?;

    let root = game.tree.node(game.tree.root()).id.clone();
    let outcome = game.tree.honest_outcome(&root, &profile)?;
    let implemented = implemented_utilities(&game.tree.utility_matrix(), &scheme, &game.info)?;
    let expected = implemented.mul_vec(&outcome.weights)?;

    let symbol_freq: Map<String, Value> = game
        .info
        .alphabet()
        .iter()
        .zip(&mc.symbol_freq)
        .map(|(s, &f)| (s.clone(), num(f)))
        .collect();
    let leaf_freq: Map<String, Value> = (0..game.tree.num_leaves())
        .map(|l| (game.leaf_id(l).to_string(), num(mc.leaf_freq[l])))
        .collect();
    Ok(Report::ok(json!({
        "trials": mc.trials,
        "seed": a.seed,
        "profile": game.ordered_profile(&profile),
        "mean": nums(&mc.mean),
        "std_err": nums(&mc.std_err),
        "expected": nums(&expected),
        "symbol_freq": symbol_freq,
        "leaf_freq": leaf_freq,
        "min_surplus": num(mc.min_surplus),
        "max_surplus": num(mc.max_surplus),
    })))
}

fn case_outputs(out: &CaseOutputs, alphabet: &[String], target: Option<&Matrix>, scheme: &PaymentScheme) -> CliResult<()> {
    if let Some(path) = &out.target_out {
        let target = target.ok_or_else(|| CliError::input("this case has no target matrix"))?;
        write_doc(path, &TargetFile::to_value(target))?;
    }
    if let Some(path) = &out.scheme_out {
        write_doc(path, &Value::Object(SchemeFile::new(alphabet, scheme).to_map()))?;
    }
    Ok(())
}

fn gen_commerce(a: CommerceArgs) -> CliResult<Report> {
    let case = build_commerce(CommerceParams {
        x: a.x,
        x_prime: a.xprime,
        y: a.y.unwrap_or(1.5 * a.x),
        eps: a.eps,
    })?;
    case_outputs(&a.outputs, case.info.alphabet(), Some(&case.target), &case.closed_form)?;
    let game = Game::new(case.tree, case.info, case.honest);
    Ok(Report::ok(GameFile::from_game(&game).to_value()))
}

fn gen_pvc(a: PvcArgs, ctx: &mut Context) -> CliResult<Report> {
    let mut params = PvcParams::new(a.n, a.eps, a.u_plus, a.u_minus, a.delta);
    if let Some(each) = &a.u_plus_each {
        params.u_plus_each = Some(ctx.json_arg(each, "per-party gains")?);
    }
    let case = build_pvc(&params)?;
    let game = if a.uncollapsed {
        if a.outputs.target_out.is_some() {
            return Err(CliError::input("--target-out needs the collapsed game"));
        }
        let (tree, info, honest) = build_pvc_uncollapsed(&params)?;
        Game::new(tree, info, honest)
    } else {
        case_outputs(&a.outputs, case.info.alphabet(), Some(&case.target), &case.lambda)?;
        Game::new(case.tree, case.info, case.honest)
    };
    if a.uncollapsed {
        case_outputs(&a.outputs, game.info.alphabet(), None, &case.lambda)?;
    }
    let sc = &case.self_containment;
    Ok(Report {
        note: Some(format!(
            "self-contained: {} (delta {} vs thresholds {} gross, {} net)",
            sc.self_contained, params.delta, sc.gross_threshold, sc.net_threshold
        )),
        ..Report::ok(GameFile::from_game(&game).to_value())
    })
}

fn gen_from_lp(a: FromLpArgs, ctx: &mut Context) -> CliResult<Report> {
    let rows_a: Vec<Vec<f64>> = ctx.json_arg(&a.a, "A")?;
    let b: Vec<f64> = ctx.json_arg(&a.b, "b")?;
    let c: Vec<f64> = ctx.json_arg(&a.c, "c")?;
    let inst = lp_to_game(&Matrix::from_rows(&rows_a)?, &b, &c)?;
    match (&a.point, &a.scheme_out) {
        (Some(point), Some(path)) => {
            let x: Vec<f64> = ctx.json_arg(point, "point")?;
            let scheme = scheme_from_point(&inst, &x)?;
            write_doc(path, &Value::Object(SchemeFile::new(inst.info.alphabet(), &scheme).to_map()))?;
        }
        (None, None) => {}
        _ => return Err(CliError::input("--point and --scheme-out go together")),
    }
    let mut game = Game::new(inst.tree.clone(), inst.info.clone(), inst.intended.clone());
    game.costs = Some(inst.cost_vector());
    Ok(Report::ok(GameFile::from_game(&game).to_value()))
}

fn gen_ala(a: AlaArgs, ctx: &mut Context) -> CliResult<Report> {
    let damages: Vec<f64> = ctx.json_arg(&a.damages, "damages")?;
    let (alphabet, scheme) = ala_scheme(&AlaSpec { damages })?;
    let mut map = SchemeFile::new(&alphabet, &scheme).to_map();
    diagnostics_into(&mut map, &scheme);
    Ok(Report::ok(Value::Object(map)))
}
