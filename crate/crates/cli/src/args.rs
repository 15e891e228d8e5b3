use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "payscheme", version, about = "Synthesize, verify and simulate deposit schemes for extensive-form games")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute a cheapest or min-max-deposit scheme.
    Synth(SynthArgs),
    /// Check a scheme against the security constraints.
    Verify(VerifyArgs),
    /// Solve for the scheme that implements a target utility matrix.
    Implement(ImplementArgs),
    /// Lower bounds on the largest deposit.
    Bound(BoundArgs),
    /// Backward-induction equilibrium and a subgame-perfection check of the intended profile.
    Spe(SpeArgs),
    /// Monte Carlo run of deposits, play and refunds.
    Simulate(SimulateArgs),
    /// Generate worked examples and reduction instances.
    #[command(subcommand)]
    Gen(GenCommand),
}

#[derive(Clone, Copy, Debug, Args)]
pub struct SecurityArgs {
    /// Required utility margin of the intended profile.
    #[arg(long, allow_hyphen_values = true)]
    pub delta: f64,
    /// Largest deviating coalition.
    #[arg(long)]
    pub t: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ObjectiveArg {
    Cost,
    Minmax,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum HonestArg {
    PerLeaf,
    Expected,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Game file, or `-` for standard input.
    pub game: String,
    #[command(flatten)]
    pub security: SecurityArgs,
    #[arg(long, value_enum, default_value = "cost")]
    pub objective: ObjectiveArg,
    /// Require every symbol's column of payments to sum to zero.
    #[arg(long)]
    pub zero_inflation: bool,
    /// Keep the intended utilities; `per-leaf` when given without a value.
    #[arg(long, value_enum, num_args = 0..=1, default_missing_value = "per-leaf")]
    pub honest_invariant: Option<HonestArg>,
    /// Also write the scheme file here.
    #[arg(short = 'o', long = "output")]
    pub output: Option<String>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub game: String,
    pub scheme: String,
    #[command(flatten)]
    pub security: SecurityArgs,
}

#[derive(Debug, Args)]
pub struct ImplementArgs {
    pub game: String,
    /// Target matrix file, bare or as `{"target": ...}`.
    #[arg(long)]
    pub target: String,
    #[arg(short = 'o', long = "output")]
    pub output: Option<String>,
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    pub game: String,
    #[command(flatten)]
    pub security: SecurityArgs,
}

#[derive(Debug, Args)]
pub struct SpeArgs {
    pub game: String,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    pub game: String,
    pub scheme: String,
    /// `intended`, or a JSON object (inline or file) of moves overriding the intended profile.
    #[arg(long, default_value = "intended")]
    pub profile: String,
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum GenCommand {
    /// Two-party delivery game with a noisy dispute oracle.
    Commerce(CommerceArgs),
    /// Multiparty computation over a covert-secure functionality.
    Pvc(PvcArgs),
    /// Gadget game whose schemes encode points of `A x >= b, x >= 0`.
    FromLp(FromLpArgs),
    /// Scheme charging each party a fixed damage when blamed.
    Ala(AlaArgs),
}

#[derive(Debug, Args)]
pub struct CaseOutputs {
    /// Write the target utility matrix here.
    #[arg(long)]
    pub target_out: Option<String>,
    /// Write the case's closed-form or derived scheme here.
    #[arg(long)]
    pub scheme_out: Option<String>,
}

#[derive(Debug, Args)]
pub struct CommerceArgs {
    /// Price.
    #[arg(long, allow_hyphen_values = true)]
    pub x: f64,
    /// Seller's value of the item.
    #[arg(long, allow_hyphen_values = true)]
    pub xprime: f64,
    /// Buyer's value of the item; defaults to 1.5 times the price.
    #[arg(long, allow_hyphen_values = true)]
    pub y: Option<f64>,
    /// Oracle error rate.
    #[arg(long, allow_hyphen_values = true)]
    pub eps: f64,
    #[command(flatten)]
    pub outputs: CaseOutputs,
}

#[derive(Debug, Args)]
pub struct PvcArgs {
    #[arg(long)]
    pub n: usize,
    /// Probability that a cheater is caught.
    #[arg(long, allow_hyphen_values = true)]
    pub eps: f64,
    /// Utility of an undetected cheat.
    #[arg(long, allow_hyphen_values = true)]
    pub u_plus: f64,
    /// Utility of a party whose input leaked.
    #[arg(long, allow_hyphen_values = true)]
    pub u_minus: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub delta: f64,
    /// Per-party cheating gains as a JSON array; overrides `--u-plus`.
    #[arg(long)]
    pub u_plus_each: Option<String>,
    /// Keep the detection lotteries as chance nodes.
    #[arg(long)]
    pub uncollapsed: bool,
    #[command(flatten)]
    pub outputs: CaseOutputs,
}

#[derive(Debug, Args)]
pub struct FromLpArgs {
    /// Constraint matrix as JSON rows, inline or a file.
    #[arg(long)]
    pub a: String,
    #[arg(long)]
    pub b: String,
    #[arg(long)]
    pub c: String,
    /// A point `x >= 0` whose scheme is written with `--scheme-out`.
    #[arg(long)]
    pub point: Option<String>,
    #[arg(long)]
    pub scheme_out: Option<String>,
}

#[derive(Debug, Args)]
pub struct AlaArgs {
    /// Damages per party as a JSON array, inline or a file.
    #[arg(long)]
    pub damages: String,
}
