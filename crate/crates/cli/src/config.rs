//! Command-line configuration. The resolved form is recorded in each run's
//! manifest and is enough to rerun it.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use causal_forge::hypercore::{Hypergraph, generators};
use causal_forge::rewrite::UpdateScheme;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::parse::parse_hypergraph;

#[derive(Debug, Parser)]
#[command(name = "causal-forge", version, about = "Rewriting systems, causal graphs and discrete geometry")]
pub struct Cli {
    /// Directory for artifacts and manifest.json.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Artifact formats to write.
    #[arg(long, global = true, value_delimiter = ',', default_value = "json,dot,csv")]
    pub format: Vec<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Dot,
    Csv,
}

impl Format {
    pub fn of(name: &str) -> Option<Format> {
        match Path::new(name).extension()?.to_str()? {
            "json" => Some(Format::Json),
            "dot" => Some(Format::Dot),
            "csv" => Some(Format::Csv),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Sequential,
    Parallel,
    Random,
}

impl From<Scheme> for UpdateScheme {
    fn from(s: Scheme) -> Self {
        match s {
            Scheme::Sequential => UpdateScheme::Sequential,
            Scheme::Parallel => UpdateScheme::Parallel,
            Scheme::Random => UpdateScheme::Random,
        }
    }
}

/// Rules and initial state. Each is inline text or a path to a file.
#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SystemArgs {
    #[arg(long)]
    pub rule: String,
    /// Defaults to the left side of the first rule.
    #[arg(long)]
    pub init: Option<String>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct EvolveArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub system: SystemArgs,
    #[arg(long, value_enum, default_value_t = Scheme::Sequential)]
    pub scheme: Scheme,
    #[arg(long, default_value_t = 10)]
    pub steps: u32,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct MultiwayArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub system: SystemArgs,
    #[arg(long, default_value_t = 4)]
    pub depth: u32,
    /// Stop after this many states; the run then exits with code 4.
    #[arg(long)]
    pub max_states: Option<usize>,
    /// Confluence variants to check: local, semi, strong, diamond, global.
    #[arg(long, value_delimiter = ',', default_value = "local,semi,strong,diamond,global")]
    pub variant: Vec<String>,
    /// Steps allowed for joins; defaults to two thirds of the depth.
    #[arg(long)]
    pub join_budget: Option<u32>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct InvarianceArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub system: SystemArgs,
    #[arg(long, default_value_t = 4)]
    pub depth: u32,
    #[arg(long, default_value_t = 200_000)]
    pub max_histories: usize,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct BoostArgs {
    #[arg(long, default_value = "AB->BA")]
    pub rule: String,
    #[arg(long, default_value = "ABABABABABABABAB")]
    pub init: String,
    #[arg(long, value_enum, default_value_t = Scheme::Parallel)]
    pub scheme: Scheme,
    #[arg(long, default_value_t = 64)]
    pub steps: u32,
    /// Speed in [0, 1), as `a/b`, a decimal or an integer.
    #[arg(long)]
    pub v: String,
    /// Spatial direction, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1", allow_hyphen_values = true)]
    pub direction: Vec<i64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SolverArg {
    Auto,
    Exact,
    Approx,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CurvatureArgs {
    #[arg(long)]
    pub graph: String,
    /// `uniform`, or `lazy:a/b` to keep mass a/b at the center.
    #[arg(long, default_value = "uniform")]
    pub walk: String,
    #[arg(long, value_enum, default_value_t = SolverArg::Auto)]
    pub solver: SolverArg,
    /// Only this pair, as `p,q`, with its transport plan.
    #[arg(long, value_delimiter = ',')]
    pub pair: Option<Vec<u64>>,
    /// Curvature of directed hyperedges, the last vertex being the head.
    #[arg(long)]
    pub directed: bool,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct DimensionArgs {
    /// Spatial graph; ignored when `--rule` is given.
    #[arg(long)]
    pub graph: Option<String>,
    /// Ball center; all vertices are averaged when absent.
    #[arg(long)]
    pub center: Option<u64>,
    #[arg(long, default_value_t = 12)]
    pub r_max: u32,
    /// Rules whose causal graph supplies cone growth.
    #[arg(long)]
    pub rule: Option<String>,
    #[arg(long)]
    pub init: Option<String>,
    #[arg(long, value_enum, default_value_t = Scheme::Parallel)]
    pub scheme: Scheme,
    #[arg(long, default_value_t = 64)]
    pub steps: u32,
    /// Cone apex; defaults to the middle event of the first layer.
    #[arg(long)]
    pub apex: Option<u64>,
    /// Fit window `lo:hi`; chosen from the series when absent.
    #[arg(long)]
    pub window: Option<String>,
    /// Radius offset used by the curvature fit.
    #[arg(long, default_value_t = 0.5)]
    pub offset: f64,
    /// Also compute the summed curvature statistic.
    #[arg(long)]
    pub anomaly: bool,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct PlanarityArgs {
    #[arg(long)]
    pub graph: String,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct BundleArgs {
    #[arg(long)]
    pub graph: String,
    /// Rays as `start:next`, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub rays: Vec<String>,
    #[arg(long, default_value_t = 10)]
    pub steps: usize,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct RerunArgs {
    /// A manifest.json written by an earlier run.
    #[arg(long)]
    pub manifest: PathBuf,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Evolve a system under an update scheme.
    Evolve(EvolveArgs),
    /// Explore all update orders and check confluence.
    Multiway(MultiwayArgs),
    /// Compare causal graphs across all update orders.
    CausalInvariance(InvarianceArgs),
    /// Boost the standard foliation of a causal graph and reslice it.
    Boost(BoostArgs),
    /// Ollivier-Ricci curvature of a graph.
    Curvature(CurvatureArgs),
    /// Growth exponents of balls or causal cones.
    Dimension(DimensionArgs),
    /// Kuratowski tangles.
    Planarity(PlanarityArgs),
    /// Separation of neighboring geodesic rays.
    Bundle(BundleArgs),
    /// Repeat the run recorded in a manifest.
    #[serde(skip)]
    Rerun(RerunArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Evolve(_) => "evolve",
            Command::Multiway(_) => "multiway",
            Command::CausalInvariance(_) => "causal-invariance",
            Command::Boost(_) => "boost",
            Command::Curvature(_) => "curvature",
            Command::Dimension(_) => "dimension",
            Command::Planarity(_) => "planarity",
            Command::Bundle(_) => "bundle",
            Command::Rerun(_) => "rerun",
        }
    }
}

/// A fully resolved run: file arguments are replaced by their contents.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub seed: u64,
    pub formats: Vec<Format>,
    pub command: Command,
}

/// File contents if `arg` names a file, else `arg` itself.
pub fn resolve_text(arg: &str) -> Result<String, CliError> {
    let path = Path::new(arg);
    if arg.len() < 4096 && path.is_file() {
        std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {arg}: {e}")))
    } else {
        Ok(arg.to_string())
    }
}

impl RunConfig {
    pub fn resolve(cli: Cli) -> Result<Self, CliError> {
        let mut formats = cli.format;
        formats.sort();
        formats.dedup();
        let command = match cli.command {
            Command::Rerun(r) => {
                let text = std::fs::read_to_string(&r.manifest)
                    .map_err(|e| CliError::Config(format!("cannot read {}: {e}", r.manifest.display())))?;
                let value: serde_json::Value =
                    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("bad manifest: {e}")))?;
                return serde_json::from_value(value["config"].clone())
                    .map_err(|e| CliError::Config(format!("bad manifest config: {e}")));
            }
            Command::Evolve(mut a) => {
                a.system.resolve()?;
                Command::Evolve(a)
            }
            Command::Multiway(mut a) => {
                a.system.resolve()?;
                Command::Multiway(a)
            }
            Command::CausalInvariance(mut a) => {
                a.system.resolve()?;
                Command::CausalInvariance(a)
            }
            Command::Boost(mut a) => {
                a.rule = resolve_text(&a.rule)?;
                a.init = resolve_text(&a.init)?;
                Command::Boost(a)
            }
            Command::Curvature(mut a) => {
                a.graph = resolve_text(&a.graph)?;
                Command::Curvature(a)
            }
            Command::Dimension(mut a) => {
                a.graph = a.graph.as_deref().map(resolve_text).transpose()?;
                a.rule = a.rule.as_deref().map(resolve_text).transpose()?;
                a.init = a.init.as_deref().map(resolve_text).transpose()?;
                Command::Dimension(a)
            }
            Command::Planarity(mut a) => {
                a.graph = resolve_text(&a.graph)?;
                Command::Planarity(a)
            }
            Command::Bundle(mut a) => {
                a.graph = resolve_text(&a.graph)?;
                Command::Bundle(a)
            }
        };
        Ok(RunConfig { seed: cli.seed, formats, command })
    }
}

impl SystemArgs {
    fn resolve(&mut self) -> Result<(), CliError> {
        self.rule = resolve_text(&self.rule)?;
        self.init = self.init.as_deref().map(resolve_text).transpose()?;
        Ok(())
    }
}

/// A named graph family, a hypergraph literal, or hypergraph JSON.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GraphSource {
    Path(u64),
    Cycle(u64),
    Complete(u64),
    Bipartite(u64, u64),
    Grid(u64, u64),
    Torus(u64, u64),
    TriangularTorus(u64, u64),
    Torus3(u64),
    Sphere(u64),
    Hyperbolic(u64, u32),
    Tree(u64, u32),
    Literal(Hypergraph),
}

fn dims(s: &str) -> Option<(u64, u64)> {
    let (a, b) = s.split_once('x')?;
    Some((a.parse().ok()?, b.parse().ok()?))
}

impl FromStr for GraphSource {
    type Err = CliError;

    fn from_str(text: &str) -> Result<Self, CliError> {
        let t = text.trim();
        if t.starts_with('{') && t.contains("\"edges\"") {
            return Hypergraph::from_json(t).map(GraphSource::Literal).map_err(|e| CliError::Config(e.to_string()));
        }
        if t.starts_with('{') {
            return Ok(GraphSource::Literal(parse_hypergraph(t)?));
        }
        let bad = || {
            CliError::Config(format!(
                "unknown graph {t:?}; expected path:N, cycle:N, complete:N, bipartite:AxB, grid:WxH, torus:WxH, \
                 triangular:WxH, torus3:N, sphere:F, hyperbolic:Q[:RINGS], tree:D[:DEPTH] or a hypergraph"
            ))
        };
        let (kind, arg) = t.split_once(':').ok_or_else(bad)?;
        let num = |s: &str| s.parse::<u64>().map_err(|_| bad());
        let pair = |s: &str| dims(s).ok_or_else(bad);
        let with_depth = |s: &str, default: u32| -> Result<(u64, u32), CliError> {
            match s.split_once(':') {
                Some((a, b)) => Ok((num(a)?, b.parse().map_err(|_| bad())?)),
                None => Ok((num(s)?, default)),
            }
        };
        let source = match kind {
            "path" => GraphSource::Path(num(arg)?),
            "cycle" => GraphSource::Cycle(num(arg)?),
            "complete" => GraphSource::Complete(num(arg)?),
            "bipartite" => pair(arg).map(|(a, b)| GraphSource::Bipartite(a, b))?,
            "grid" => pair(arg).map(|(a, b)| GraphSource::Grid(a, b))?,
            "torus" => pair(arg).map(|(a, b)| GraphSource::Torus(a, b))?,
            "triangular" => pair(arg).map(|(a, b)| GraphSource::TriangularTorus(a, b))?,
            "torus3" => GraphSource::Torus3(num(arg)?),
            "sphere" => GraphSource::Sphere(num(arg)?),
            "hyperbolic" => with_depth(arg, 5).map(|(q, r)| GraphSource::Hyperbolic(q, r))?,
            "tree" => with_depth(arg, 5).map(|(d, r)| GraphSource::Tree(d, r))?,
            _ => return Err(bad()),
        };
        Ok(source)
    }
}

impl GraphSource {
    pub fn build(&self) -> Result<Hypergraph, CliError> {
        let too_small = |what: &str| Err(CliError::Config(format!("{what} is too small")));
        Ok(match *self {
            GraphSource::Path(n) if n < 1 => return too_small("path"),
            GraphSource::Cycle(n) if n < 3 => return too_small("cycle"),
            GraphSource::Torus(w, h) | GraphSource::TriangularTorus(w, h) if w < 3 || h < 3 => return too_small("torus"),
            GraphSource::Torus3(n) if n < 3 => return too_small("torus"),
            GraphSource::Sphere(f) if f < 1 => return too_small("sphere"),
            GraphSource::Hyperbolic(q, _) if q < 7 => {
                return Err(CliError::Config("hyperbolic patches need at least 7 triangles per vertex".into()));
            }
            GraphSource::Tree(d, _) if d < 2 => return too_small("tree degree"),
            GraphSource::Path(n) => generators::path(n),
            GraphSource::Cycle(n) => generators::cycle(n),
            GraphSource::Complete(n) => generators::complete(n),
            GraphSource::Bipartite(a, b) => generators::complete_bipartite(a, b),
            GraphSource::Grid(w, h) => generators::grid(w, h),
            GraphSource::Torus(w, h) => generators::torus(w, h),
            GraphSource::TriangularTorus(w, h) => generators::triangular_torus(w, h),
            GraphSource::Torus3(n) => generators::torus3(n),
            GraphSource::Sphere(f) => generators::geodesic_sphere(f),
            GraphSource::Hyperbolic(q, r) => generators::triangulated_disk(q, r),
            GraphSource::Tree(d, r) => generators::regular_tree(d, r),
            GraphSource::Literal(ref h) => h.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graph_sources() {
        assert_eq!("torus:4x5".parse::<GraphSource>().unwrap(), GraphSource::Torus(4, 5));
        assert_eq!("hyperbolic:7".parse::<GraphSource>().unwrap(), GraphSource::Hyperbolic(7, 5));
        assert_eq!("tree:3:4".parse::<GraphSource>().unwrap(), GraphSource::Tree(3, 4));
        assert!(matches!("{{0,1},{1,2}}".parse::<GraphSource>().unwrap(), GraphSource::Literal(_)));
        assert!("torus:4".parse::<GraphSource>().is_err());
        assert!("blob:3".parse::<GraphSource>().is_err());
        assert_eq!("complete:4".parse::<GraphSource>().unwrap().build().unwrap().edge_count(), 6);
        assert!("hyperbolic:6".parse::<GraphSource>().unwrap().build().is_err());
    }

    #[test]
    fn json_graphs() {
        let h = generators::cycle(4);
        let source: GraphSource = h.to_json().parse().unwrap();
        assert_eq!(source.build().unwrap(), h);
    }

    #[test]
    fn config_round_trips_through_json() {
        let cli = Cli::parse_from(["causal-forge", "--seed", "7", "evolve", "--rule", "A->AB", "--steps", "3"]);
        let cfg = RunConfig::resolve(cli).unwrap();
        let text = serde_json::to_string(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(serde_json::to_string(&back).unwrap(), text);
        assert!(text.contains("\"command\":\"evolve\""));
    }
}
