use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kgcache::automl::SearchAlgo;
use kgcache::data::{ColumnOrder, Split};
use kgcache::sampler::SamplerKind;
use kgcache::scoring::ModelKind;

pub const DATA_DIR_ENV: &str = "KGCACHE_DATA_DIR";

const FILES_HELP: &str = "\
Every subcommand accepts --config FILE with `key = value` lines naming its
long flags (without the dashes); flags on the command line win. Each run
writes resolved_<subcommand>.txt under its output directory, and
`kgcache <subcommand> --config resolved_<subcommand>.txt` replays it.

Output files (all written atomically):
  train_log.jsonl        one object per epoch:
                         {epoch, loss, grad_norm_mean, mrr_valid?, seconds, cache_seconds}
  final.bin, best.bin    checkpoints (final and best validation), each with a
  epoch_<k>.bin          `.meta` sidecar holding seed, config_hash, epoch
  summary.json           {config_hash, epochs, best_epoch?, best_valid_mrr?,
                          cache_seconds, refresh_passes, seconds, test?}
  metrics_<split>.json   {mrr, hit1, hit3, hit10, n_test, head{..}, tail{..}}
  ranks_<split>.tsv      head relation tail head_rank tail_rank raw_head_rank raw_tail_rank
  cache_epoch<k>.tsv     query entity score, query is `(h, r, ?)` or `(?, r, t)`
  variance.tsv           epoch index head relation tail score mean variance quality
                         (variance and quality are NA before two observations)
  grad_ccdf_<label>.tsv  index head relation tail x ccdf, ccdf = P(|grad| >= x)
  classification.json    {valid_accuracy, test_accuracy, n_valid, n_test}
  history.jsonl          one object per search trial:
                         {trial, alpha1, alpha2, alpha3, n1, n2, objective?, epochs,
                          seconds, status, proposal, error?}
  incumbent.json         the best completed trial, same fields
  corpus.txt             one walk per line, node names separated by spaces
  embeddings.txt         node v1 ... vd per line
  skipgram_log.jsonl     {epoch, loss}
  node_classification.jsonl
                         {train_fraction, micro[], macro_[], micro_mean, micro_std,
                          macro_mean, macro_std, absent_classes[][]}

Exit status: 0 on success, 1 on a usage error, 2 on a runtime failure.";

#[derive(Parser, Debug)]
#[command(
    name = "kgcache",
    version,
    about = "Knowledge-graph and node embeddings with cache-based negative sampling",
    after_long_help = FILES_HELP
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Train a knowledge-graph embedding
    Train(TrainArgs),
    /// Filtered link-prediction metrics of a checkpoint
    Eval(EvalArgs),
    /// Triplet classification accuracy of a checkpoint
    Classify(ClassifyArgs),
    /// Search the sampler's exploration/exploitation hyper-parameters
    Search(SearchArgs),
    /// Generate second-order random walks over a graph
    Walk(WalkArgs),
    /// Skip-gram node embeddings plus node classification
    EmbedGraph(EmbedArgs),
    /// Gradient-norm distributions of checkpoints
    Analyze(AnalyzeArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Train(_) => "train",
            Command::Eval(_) => "eval",
            Command::Classify(_) => "classify",
            Command::Search(_) => "search",
            Command::Walk(_) => "walk",
            Command::EmbedGraph(_) => "embed-graph",
            Command::Analyze(_) => "analyze",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LossArg {
    Margin,
    Logistic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NodeSampler {
    Uniform,
    Nscaching,
}

#[derive(Args, Debug, Clone, Default)]
pub struct ConfigArg {
    /// Read flag defaults from a `key = value` file
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct DataArgs {
    /// Dataset directory with train.txt, valid.txt, test.txt (and optionally
    /// entity2id.txt, relation2id.txt), or its name under $KGCACHE_DATA_DIR
    #[arg(long, value_name = "DIR", conflicts_with = "synthetic")]
    pub data: Option<String>,
    /// Use a generated graph with this many entities, relations and triplets
    #[arg(long, value_name = "E,R,N")]
    pub synthetic: Option<String>,
    /// Seed of the generated graph [default: 1]
    #[arg(long, value_name = "SEED")]
    pub synthetic_seed: Option<u64>,
    /// Column order of triple files, hrt or htr [default: hrt]
    #[arg(long)]
    pub order: Option<ColumnOrder>,
}

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    /// TransE, TransH, TransD, DistMult, ComplEx, SimplE or RotatE
    #[arg(long, default_value = "TransE")]
    pub model: ModelKind,
    #[arg(long, default_value_t = 50)]
    pub dim: usize,
    #[arg(long, value_enum, default_value_t = LossArg::Margin)]
    pub loss: LossArg,
    /// Margin of the margin loss [default: 2]
    #[arg(long)]
    pub gamma: Option<f64>,
    /// L2 penalty on the embedding rows each pair touches
    #[arg(long, default_value_t = 0.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1024)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 1000)]
    pub epochs: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// uniform, bernoulli, self-adversarial or nscaching
    #[arg(long, default_value = "nscaching")]
    pub sampler: SamplerKind,
    /// Negatives per positive
    #[arg(long, default_value_t = 1)]
    pub negatives: usize,
    /// Bernoulli epochs before switching to --sampler
    #[arg(long, default_value_t = 0)]
    pub pretrain_epochs: usize,
    /// Validate every this many epochs, 0 to disable
    #[arg(long, default_value_t = 20)]
    pub eval_every: usize,
    /// L2-normalize entity rows after every step
    #[arg(long, num_args = 0..=1, default_value_t = false, default_missing_value = "true")]
    pub normalize_entities: bool,
    /// SimplE: average the two terms instead of summing them
    #[arg(long, num_args = 0..=1, default_value_t = false, default_missing_value = "true")]
    pub simple_half: bool,
    /// Worker threads for gradients; results do not depend on it
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
}

#[derive(Args, Debug, Clone)]
pub struct EeArgs {
    /// Positive-sampling temperature
    #[arg(long, default_value_t = 0.0)]
    pub alpha1: f64,
    /// In-cache sampling temperature
    #[arg(long, default_value_t = 0.0)]
    pub alpha2: f64,
    /// Cache-update temperature
    #[arg(long, default_value_t = 1.0)]
    pub alpha3: f64,
    /// Cache size
    #[arg(long, default_value_t = 50)]
    pub n1: usize,
    /// Fresh candidates per cache refresh
    #[arg(long, default_value_t = 50)]
    pub n2: usize,
    /// Epochs skipped between cache refreshes
    #[arg(long, default_value_t = 0)]
    pub lazy_n: usize,
    /// Weight of the score standard deviation in cache quality
    #[arg(long, default_value_t = 0.0)]
    pub nu: f64,
}

#[derive(Args, Debug, Clone)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub ee: EeArgs,
    /// Start from this checkpoint instead of a random initialization
    #[arg(long, value_name = "FILE")]
    pub init: Option<PathBuf>,
    /// Epochs after which the negative cache is dumped
    #[arg(long, value_delimiter = ',', value_name = "K,..")]
    pub snapshot_epochs: Vec<usize>,
    /// Epochs after which a checkpoint is saved
    #[arg(long, value_delimiter = ',', value_name = "K,..")]
    pub save_epochs: Vec<usize>,
    /// Track the score variance of the first K train triplets
    #[arg(long, default_value_t = 0, value_name = "K")]
    pub track: usize,
    /// Also write per-triplet test ranks
    #[arg(long, num_args = 0..=1, default_value_t = false, default_missing_value = "true")]
    pub ranks: bool,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    #[command(flatten)]
    pub config: ConfigArg,
}

#[derive(Args, Debug, Clone)]
pub struct EvalArgs {
    /// Checkpoint file, or a run directory (best.bin, else final.bin)
    #[arg(long, value_name = "PATH")]
    pub checkpoint: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    /// train, valid or test
    #[arg(long, default_value = "test")]
    pub split: Split,
    /// Also write per-triplet ranks
    #[arg(long, num_args = 0..=1, default_value_t = false, default_missing_value = "true")]
    pub ranks: bool,
    /// Output directory [default: the run directory]
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub config: ConfigArg,
}

#[derive(Args, Debug, Clone)]
pub struct ClassifyArgs {
    /// Checkpoint file, or a run directory (best.bin, else final.bin)
    #[arg(long, value_name = "PATH")]
    pub checkpoint: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    /// Seed of the corrupted negatives
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Output directory [default: the run directory]
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub config: ConfigArg,
}

#[derive(Args, Debug, Clone)]
pub struct SearchArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub ee: EeArgs,
    /// random or smbo
    #[arg(long, default_value = "smbo")]
    pub algo: SearchAlgo,
    /// Number of trials
    #[arg(long, default_value_t = 50)]
    pub budget: usize,
    /// Training epochs per trial [default: --epochs]
    #[arg(long, value_name = "EPOCHS")]
    pub fidelity: Option<usize>,
    /// Trials trained concurrently
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// Random proposals, the starting point included, before the surrogate
    #[arg(long, default_value_t = 8)]
    pub init_design: usize,
    /// Random candidates scored by expected improvement per proposal
    #[arg(long, default_value_t = 1000)]
    pub candidates: usize,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0,1",
        value_name = "LO,HI"
    )]
    pub alpha1_range: Vec<f64>,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0,100",
        value_name = "LO,HI"
    )]
    pub alpha2_range: Vec<f64>,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0,100",
        value_name = "LO,HI"
    )]
    pub alpha3_range: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "10,30,50,70,90")]
    pub n1_choices: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "10,30,50,70,90")]
    pub n2_choices: Vec<usize>,
    /// Continue from the history already in --out
    #[arg(long, num_args = 0..=1, default_value_t = false, default_missing_value = "true")]
    pub resume: bool,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    #[command(flatten)]
    pub config: ConfigArg,
}

#[derive(Args, Debug, Clone, Default)]
pub struct GraphArgs {
    /// Edge list, `src<TAB>dst` per line
    #[arg(long, value_name = "FILE", conflicts_with_all = ["content", "cites"])]
    pub edges: Option<PathBuf>,
    /// Node labels for --edges, `node<TAB>class` per line
    #[arg(long, value_name = "FILE", requires = "edges")]
    pub labels: Option<PathBuf>,
    /// Citation content file, `id features... class` per line
    #[arg(long, value_name = "FILE", requires = "cites")]
    pub content: Option<PathBuf>,
    /// Citation links, `cited<TAB>citing` per line
    #[arg(long, value_name = "FILE", requires = "content")]
    pub cites: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct WalkFlags {
    #[arg(long, default_value_t = 10)]
    pub walks_per_node: usize,
    #[arg(long, default_value_t = 80)]
    pub walk_length: usize,
    /// Return parameter
    #[arg(long, default_value_t = 0.25)]
    pub p: f64,
    /// In-out parameter
    #[arg(long, default_value_t = 0.25)]
    pub q: f64,
}

#[derive(Args, Debug, Clone)]
pub struct WalkArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub walk: WalkFlags,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    #[command(flatten)]
    pub config: ConfigArg,
}

#[derive(Args, Debug, Clone)]
pub struct EmbedArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub walk: WalkFlags,
    /// Train on this corpus instead of generating walks
    #[arg(long, value_name = "FILE")]
    pub corpus: Option<PathBuf>,
    /// Context half-width
    #[arg(long, default_value_t = 10)]
    pub window: usize,
    /// Negatives per (center, context) pair
    #[arg(long, default_value_t = 5)]
    pub negatives: usize,
    #[arg(long, default_value_t = 100)]
    pub dim: usize,
    #[arg(long, default_value_t = 1)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    /// (center, context) pairs per optimizer step
    #[arg(long, default_value_t = 512)]
    pub batch_size: usize,
    #[arg(long, value_enum, default_value_t = NodeSampler::Nscaching)]
    pub sampler: NodeSampler,
    #[command(flatten)]
    pub ee: EeArgs,
    /// Labelled fractions used for classifier training
    #[arg(long, value_delimiter = ',', default_value = "0.5")]
    pub train_fraction: Vec<f64>,
    /// Random train/test splits per fraction
    #[arg(long, default_value_t = 5)]
    pub splits: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    #[command(flatten)]
    pub config: ConfigArg,
}

#[derive(Args, Debug, Clone)]
pub struct AnalyzeArgs {
    /// Checkpoint files
    #[arg(long, value_delimiter = ',', value_name = "FILE,..")]
    pub checkpoint: Vec<PathBuf>,
    /// Run directory whose epoch_<k>.bin checkpoints are analyzed
    #[arg(long, value_name = "DIR")]
    pub run: Option<PathBuf>,
    /// Epochs to take from --run
    #[arg(long, value_delimiter = ',', value_name = "K,..", requires = "run")]
    pub epochs: Vec<usize>,
    /// Train-triplet indices whose tail substitutions are analyzed
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub triplets: Vec<usize>,
    #[command(flatten)]
    pub data: DataArgs,
    /// Loss [default: the run's, else margin]
    #[arg(long, value_enum)]
    pub loss: Option<LossArg>,
    /// Margin [default: the run's, else 2]
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Row penalty [default: the run's, else 0]
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Output directory [default: the run directory]
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub config: ConfigArg,
}
