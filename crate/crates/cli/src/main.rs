//! `zggp` command line: dataset generation, training, head-to-head
//! evaluation, gradient checking and single-game tracing.
//!
//! Exit codes: 0 success, 1 usage error (and a failed gradient check),
//! 2 runtime failure.

mod manifest;

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use manifest::Manifest;
use zggp_core::datagen::{generate_dataset, read_dataset_header, GenConfig};
use zggp_core::eval::{play_match, report, AgentKind, AgentSpec, ReportEntry};
use zggp_core::games::{GameId, GameState, Player};
use zggp_core::mcts::{MctsAgent, DEFAULT_EXPLORATION_C};
use zggp_core::neural::gradcheck::{attention_check_config, conv_check_config, gradient_check};
use zggp_core::neural::{
    io as model_io, Architecture, AttentionNetConfig, ConvNetConfig, NetEvaluator, NetPreset,
    PositionalMode,
};
use zggp_core::train::{train_model, TrainConfig};

#[derive(Parser)]
#[command(
    name = "zggp",
    version,
    about = "Value-network MCTS for abstract board games"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ArchChoice {
    Attention,
    Conv,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PresetChoice {
    Small,
    Default,
}

impl From<PresetChoice> for NetPreset {
    fn from(p: PresetChoice) -> NetPreset {
        match p {
            PresetChoice::Small => NetPreset::Small,
            PresetChoice::Default => NetPreset::Default,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PosChoice {
    Sinusoidal,
    Learned,
}

impl From<PosChoice> for PositionalMode {
    fn from(p: PosChoice) -> PositionalMode {
        match p {
            PosChoice::Sinusoidal => PositionalMode::Sinusoidal,
            PosChoice::Learned => PositionalMode::Learned,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a training dataset from parallel UCT-vs-UCT games.
    Generate(GenerateArgs),
    /// Train a value network on a dataset file.
    Train(TrainArgs),
    /// Evaluate an agent against a UCT baseline over many games.
    Eval(EvalArgs),
    /// Compare reverse-mode gradients against finite differences.
    Gradcheck(GradcheckArgs),
    /// Trace a single game between two agents, move by move.
    Play(PlayArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Game id: tictactoe, connect4, breakthrough-N, hex-N, reversi.
    #[arg(long)]
    game: String,
    /// Number of games to play.
    #[arg(long)]
    plays: u64,
    /// Search iterations per move.
    #[arg(long, default_value_t = 600)]
    iterations: u32,
    #[arg(long, default_value_t = DEFAULT_EXPLORATION_C)]
    exploration_c: f64,
    /// Opening plies with visit-proportional move sampling.
    #[arg(long, default_value_t = zggp_core::datagen::DEFAULT_TEMPERATURE_PLIES)]
    temperature_plies: u32,
    /// Output dataset path.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads (default: available processors).
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Obfuscate boards with the tile permutation drawn from this seed.
    #[arg(long)]
    permute_seed: Option<u64>,
}

#[derive(Args)]
struct TrainArgs {
    /// Input dataset path.
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, value_enum)]
    arch: ArchChoice,
    #[arg(long, value_enum, default_value_t = PresetChoice::Small)]
    preset: PresetChoice,
    /// Positional embedding mode (attention only).
    #[arg(long, value_enum, default_value_t = PosChoice::Sinusoidal)]
    pos: PosChoice,
    #[arg(long, default_value_t = 16)]
    epochs: usize,
    #[arg(long, default_value_t = 128)]
    batch_size: usize,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long, default_value_t = 0.05)]
    val_fraction: f64,
    /// Shuffle and initialization seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output model path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    game: String,
    /// Model file for the evaluated agent; omit for a pure UCT agent.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Iterations per move for the evaluated agent.
    #[arg(long, default_value_t = 600)]
    iterations: u32,
    /// Opponent kind (only `uct` is available).
    #[arg(long, default_value = "uct")]
    opponent: String,
    /// Opponent iterations (default: same as --iterations).
    #[arg(long)]
    opponent_iterations: Option<u32>,
    #[arg(long, default_value_t = 400)]
    games: u64,
    #[arg(long, default_value_t = DEFAULT_EXPLORATION_C)]
    exploration_c: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Evaluate under the permuted-board condition with this seed.
    #[arg(long)]
    permute_seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Report path prefix: writes <out>.txt and <out>.jsonl.
    #[arg(long, default_value = "report")]
    out: PathBuf,
    /// Row label in the report (default derived from the agents).
    #[arg(long)]
    label: Option<String>,
}

#[derive(Args)]
struct GradcheckArgs {
    #[arg(long, value_enum)]
    arch: ArchChoice,
    #[arg(long)]
    game: String,
    #[arg(long, value_enum, default_value_t = PosChoice::Sinusoidal)]
    pos: PosChoice,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct PlayArgs {
    #[arg(long)]
    game: String,
    /// Agent spec: `uct[:iterations[:c]]` or `value:<model>[:iterations[:c]]`.
    #[arg(long, default_value = "uct:600")]
    agent_a: String,
    #[arg(long, default_value = "uct:600")]
    agent_b: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Apply the permuted-board condition to value-network agents.
    #[arg(long)]
    permute_seed: Option<u64>,
}

/// Errors that are the caller's fault: bad flags, unknown games,
/// inconsistent combinations. Exit code 1.
struct UsageError(String);

type CmdResult = Result<(), Failure>;

enum Failure {
    Usage(String),
    Run(String),
    /// Gradient check above tolerance: specified to exit non-zero.
    CheckFailed,
}

impl From<UsageError> for Failure {
    fn from(e: UsageError) -> Failure {
        Failure::Usage(e.0)
    }
}

fn run_err(e: impl std::fmt::Display) -> Failure {
    Failure::Run(e.to_string())
}

fn parse_game(s: &str) -> Result<GameId, UsageError> {
    GameId::from_str(s).map_err(|e| UsageError(e.to_string()))
}

fn workers_or_default(workers: Option<usize>) -> usize {
    workers.unwrap_or_else(|| {
        std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version are successful exits.
            use clap::error::ErrorKind;
            let kind = e.kind();
            let _ = e.print();
            return if matches!(kind, ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            };
        }
    };
    let result = match cli.cmd {
        Cmd::Generate(args) => cmd_generate(args),
        Cmd::Train(args) => cmd_train(args),
        Cmd::Eval(args) => cmd_eval(args),
        Cmd::Gradcheck(args) => cmd_gradcheck(args),
        Cmd::Play(args) => cmd_play(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("run `zggp help <subcommand>` for flag documentation");
            ExitCode::from(1)
        }
        Err(Failure::CheckFailed) => ExitCode::from(1),
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn cmd_generate(args: GenerateArgs) -> CmdResult {
    let game = parse_game(&args.game)?;
    if args.plays == 0 {
        return Err(UsageError("--plays must be at least 1".into()).into());
    }
    let gen = GenConfig {
        iterations: args.iterations,
        exploration_c: args.exploration_c,
        temperature_plies: args.temperature_plies,
    };
    let workers = workers_or_default(args.workers);
    let header = generate_dataset(
        game,
        args.plays,
        &gen,
        workers,
        args.seed,
        args.permute_seed,
        &args.out,
    )
    .map_err(run_err)?;

    let mut m = Manifest::new("generate");
    m.push("game", game);
    m.push("plays", args.plays);
    m.push("iterations", args.iterations);
    m.push("exploration_c", args.exploration_c);
    m.push("temperature_plies", args.temperature_plies);
    m.push("seed", args.seed);
    m.push_opt("permute_seed", args.permute_seed);
    m.push("workers", workers);
    m.push("out", args.out.display());
    m.push("samples", header.sample_count);
    m.write_next_to(&args.out).map_err(run_err)?;

    println!(
        "wrote {} samples from {} plays of {} to {}",
        header.sample_count,
        args.plays,
        game,
        args.out.display()
    );
    Ok(())
}

fn resolve_arch(
    arch: ArchChoice,
    preset: PresetChoice,
    pos: PosChoice,
    game: GameId,
) -> Result<Architecture, UsageError> {
    let spec = game.spec();
    Ok(match arch {
        ArchChoice::Attention => Architecture::Attention(AttentionNetConfig::for_game(
            &spec,
            preset.into(),
            pos.into(),
        )),
        ArchChoice::Conv => Architecture::Conv(
            ConvNetConfig::for_game(&spec, preset.into()).map_err(|e| UsageError(e.to_string()))?,
        ),
    })
}

fn cmd_train(args: TrainArgs) -> CmdResult {
    if args.epochs == 0 || args.batch_size == 0 {
        return Err(UsageError("--epochs and --batch-size must be at least 1".into()).into());
    }
    if !(0.0..=0.5).contains(&args.val_fraction) {
        return Err(UsageError("--val-fraction must lie in [0, 0.5]".into()).into());
    }
    let header = read_dataset_header(&args.dataset).map_err(run_err)?;
    let arch = resolve_arch(args.arch, args.preset, args.pos, header.game)?;
    let mut config = TrainConfig::new(arch);
    config.epochs = args.epochs;
    config.batch_size = args.batch_size;
    config.lr = args.lr;
    config.validation_fraction = args.val_fraction;
    config.shuffle_seed = args.seed;

    let report = train_model(&args.dataset, &config, &args.out).map_err(run_err)?;

    let mut m = Manifest::new("train");
    m.push("dataset", args.dataset.display());
    m.push("game", header.game);
    m.push("arch", format!("{:?}", args.arch).to_lowercase());
    m.push("preset", format!("{:?}", args.preset).to_lowercase());
    m.push("pos", format!("{:?}", args.pos).to_lowercase());
    m.push("epochs", args.epochs);
    m.push("batch_size", args.batch_size);
    m.push("lr", args.lr);
    m.push("val_fraction", args.val_fraction);
    m.push("seed", args.seed);
    m.push("out", args.out.display());
    m.push("train_samples", report.train_samples);
    m.push("val_samples", report.val_samples);
    m.push("final_train_loss", report.final_train_loss);
    m.push_opt("final_val_loss", report.final_val_loss);
    m.write_next_to(&args.out).map_err(run_err)?;

    println!(
        "trained on {} samples ({} held out): train MSE {:.4}, val MSE {}",
        report.train_samples,
        report.val_samples,
        report.final_train_loss,
        report
            .final_val_loss
            .map(|v| format!("{v:.4}"))
            .unwrap_or_else(|| "n/a".to_string()),
    );
    println!("model written to {}", args.out.display());
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> CmdResult {
    let game = parse_game(&args.game)?;
    if args.games == 0 || !args.games.is_multiple_of(2) {
        return Err(UsageError("--games must be a positive even number".into()).into());
    }
    if args.opponent != "uct" {
        return Err(UsageError(format!(
            "unknown opponent `{}` (available: uct)",
            args.opponent
        ))
        .into());
    }
    let agent_a = AgentSpec {
        kind: match &args.model {
            Some(path) => AgentKind::UctValue(path.clone()),
            None => AgentKind::UctPlayout,
        },
        iterations: args.iterations,
        exploration_c: args.exploration_c,
        seed: 0,
    };
    let opponent_iterations = args.opponent_iterations.unwrap_or(args.iterations);
    let agent_b = AgentSpec {
        kind: AgentKind::UctPlayout,
        iterations: opponent_iterations,
        exploration_c: args.exploration_c,
        seed: 1,
    };
    let workers = workers_or_default(args.workers);
    let result = play_match(
        game,
        &agent_a,
        &agent_b,
        args.games,
        args.seed,
        args.permute_seed,
        workers,
    )
    .map_err(run_err)?;

    let label = args.label.clone().unwrap_or_else(|| {
        let a = match &args.model {
            Some(_) => format!("value-{}", args.iterations),
            None => format!("uct-{}", args.iterations),
        };
        let board = if args.permute_seed.is_some() {
            "permuted"
        } else {
            "ordered"
        };
        format!("{a} vs uct-{opponent_iterations} ({board})")
    });
    let entry = ReportEntry::new(label, game, &agent_a, &agent_b, &result);
    let (text, jsonl) = report(std::slice::from_ref(&entry));
    print!("{text}");

    let txt_path = args.out.with_extension("txt");
    let jsonl_path = args.out.with_extension("jsonl");
    std::fs::write(&txt_path, &text).map_err(run_err)?;
    std::fs::write(&jsonl_path, &jsonl).map_err(run_err)?;

    let mut m = Manifest::new("eval");
    m.push("game", game);
    m.push_opt(
        "model",
        args.model.as_ref().map(|p| p.display().to_string()),
    );
    m.push("iterations", args.iterations);
    m.push("opponent", "uct");
    m.push("opponent_iterations", opponent_iterations);
    m.push("games", args.games);
    m.push("exploration_c", args.exploration_c);
    m.push("seed", args.seed);
    m.push_opt("permute_seed", args.permute_seed);
    m.push("workers", workers);
    m.push("report_txt", txt_path.display());
    m.push("report_jsonl", jsonl_path.display());
    m.push("score", result.score);
    m.push("ci95", result.ci95);
    m.write_next_to(&txt_path).map_err(run_err)?;
    Ok(())
}

fn cmd_gradcheck(args: GradcheckArgs) -> CmdResult {
    let game = parse_game(&args.game)?;
    let arch = match args.arch {
        ArchChoice::Attention => {
            Architecture::Attention(attention_check_config(game, args.pos.into()))
        }
        ArchChoice::Conv => {
            Architecture::Conv(conv_check_config(game).map_err(|e| UsageError(e.to_string()))?)
        }
    };
    let report = gradient_check(arch, game, args.seed).map_err(run_err)?;
    println!(
        "max relative error {:.3e} over {} parameters (tolerance 1e-4)",
        report.max_rel_error, report.params_checked
    );
    if report.max_rel_error <= 1e-4 {
        Ok(())
    } else {
        Err(Failure::CheckFailed)
    }
}

fn parse_agent(s: &str, label: &str) -> Result<(AgentKind, u32, f64), UsageError> {
    let parts: Vec<&str> = s.split(':').collect();
    let usage = || {
        UsageError(format!(
            "bad agent spec `{s}` for {label}: expected `uct[:iterations[:c]]` or `value:<model>[:iterations[:c]]`"
        ))
    };
    let (kind, rest) = match parts[0] {
        "uct" => (AgentKind::UctPlayout, &parts[1..]),
        "value" => {
            if parts.len() < 2 || parts[1].is_empty() {
                return Err(usage());
            }
            (AgentKind::UctValue(PathBuf::from(parts[1])), &parts[2..])
        }
        _ => return Err(usage()),
    };
    let iterations = match rest.first() {
        Some(v) => v.parse::<u32>().map_err(|_| usage())?,
        None => 600,
    };
    let c = match rest.get(1) {
        Some(v) => v.parse::<f64>().map_err(|_| usage())?,
        None => DEFAULT_EXPLORATION_C,
    };
    if rest.len() > 2 {
        return Err(usage());
    }
    Ok((kind, iterations, c))
}

fn build_play_agent<'a>(
    kind: &AgentKind,
    iterations: u32,
    c: f64,
    net: Option<&'a zggp_core::ValueNet32>,
    game: GameId,
    stream: u64,
    permute_seed: Option<u64>,
) -> Result<MctsAgent<'a>, Failure> {
    let initial = GameState::initial(game);
    Ok(match kind {
        AgentKind::UctPlayout => MctsAgent::playout(initial, iterations, c, stream),
        AgentKind::UctValue(_) => {
            let spec = game.spec();
            let perm =
                permute_seed.map(|s| zggp_core::datagen::make_permutation(spec.tile_count, s));
            let eval = NetEvaluator::new(net.expect("loaded"), &spec, perm).map_err(run_err)?;
            MctsAgent::with_evaluator(initial, iterations, c, stream, Box::new(eval))
        }
    })
}

fn cmd_play(args: PlayArgs) -> CmdResult {
    let game = parse_game(&args.game)?;
    let (kind_a, iters_a, c_a) = parse_agent(&args.agent_a, "--agent-a")?;
    let (kind_b, iters_b, c_b) = parse_agent(&args.agent_b, "--agent-b")?;

    let load = |kind: &AgentKind| -> Result<Option<zggp_core::ValueNet32>, Failure> {
        match kind {
            AgentKind::UctValue(path) => Ok(Some(model_io::load_model(path).map_err(run_err)?)),
            AgentKind::UctPlayout => Ok(None),
        }
    };
    let net_a = load(&kind_a)?;
    let net_b = load(&kind_b)?;

    let mut agents = [
        build_play_agent(
            &kind_a,
            iters_a,
            c_a,
            net_a.as_ref(),
            game,
            zggp_core::mix_seed(args.seed, 0),
            args.permute_seed,
        )?,
        build_play_agent(
            &kind_b,
            iters_b,
            c_b,
            net_b.as_ref(),
            game,
            zggp_core::mix_seed(args.seed, 1),
            args.permute_seed,
        )?,
    ];

    println!(
        "{} | {} (P1) vs {} (P2) | seed {}",
        game, args.agent_a, args.agent_b, args.seed
    );
    let mut state = GameState::initial(game);
    while !state.is_terminal() {
        let mover = state.to_move();
        let agent = &mut agents[mover.index()];
        agent.search().map_err(run_err)?;
        let mv = agent.best_move().map_err(run_err)?;

        let mut line = String::new();
        let root = agent.tree().root();
        write!(
            line,
            "ply {:>3} {} plays {:<8} root n={} Q={:.3} | top:",
            state.ply(),
            mover,
            state.format_move(mv),
            root.visits(),
            root.mean_value(),
        )
        .unwrap();
        let mut children: Vec<_> = root.children().iter().collect();
        children.sort_by_key(|(m, c)| (std::cmp::Reverse(c.visits()), *m));
        for (m, c) in children.iter().take(3) {
            write!(
                line,
                " {}[n={} Q={:.3}]",
                state.format_move(*m),
                c.visits(),
                c.mean_value()
            )
            .unwrap();
        }
        println!("{line}");

        for agent in agents.iter_mut() {
            agent.observe(mv).map_err(run_err)?;
        }
        state = state.apply_move(mv).map_err(run_err)?;
    }
    let outcome = state.terminal_payoff().map_err(run_err)?;
    println!("{}", state.render());
    match outcome.winner() {
        Some(Player::P1) => println!("result: P1 ({}) wins", args.agent_a),
        Some(Player::P2) => println!("result: P2 ({}) wins", args.agent_b),
        None => println!("result: draw"),
    }
    Ok(())
}
