use std::collections::BTreeSet;

use causal_forge::Scalar;
use causal_forge::causal::{
    Boost, CausalError, CausalGraph, InvarianceLimits, boost, build_causal_graph, causal_invariance, parse_velocity,
    refoliate, trace_causal_graph,
};
use causal_forge::dimension::{
    DimensionError, DimensionFit, GrowthSeries, auto_window, ball_series, cone_counts, dimension_anomaly,
    fit_curvature_correction, log_dimension, mean_ball_series, offset_dimension,
};
use causal_forge::geometry::{bundle_divergence, count_tangles, tangle_dot};
use causal_forge::hypercore::{EdgeId, EventId, Hypergraph, VertexId};
use causal_forge::multiway::{ConfluenceVariant, ExploreLimits, check_confluence, default_join_budget, explore};
use causal_forge::rewrite::{
    Event, HypergraphSystem, RewriteSystem, StringState, StringSystem, evolve, replay,
};
use causal_forge::transport::{
    DirectedHypergraph, Mass, Solver, Walk, edge_curvature_csv, edge_curvatures, ollivier_ricci_hyperedge,
    vertex_curvature_csv, vertex_curvatures, walk_measure, wasserstein1_on,
};
use serde::Serialize;
use serde_json::{Value, json};

use crate::config::{
    BoostArgs, BundleArgs, Command, CurvatureArgs, DimensionArgs, EvolveArgs, GraphSource, InvarianceArgs, MultiwayArgs,
    PlanarityArgs, RunConfig, SolverArg,
};
use crate::error::CliError;
use crate::parse::{RuleSet, parse_hypergraph, parse_rules, parse_string_state};

/// What a run produced: a summary for stdout and named artifact files.
#[derive(Debug)]
pub struct Outcome {
    pub summary: Value,
    pub artifacts: Vec<(String, String)>,
    /// Set when a resource budget cut the analysis short.
    pub budget: Option<String>,
}

impl Outcome {
    fn new(summary: Value) -> Self {
        Self { summary, artifacts: Vec::new(), budget: None }
    }

    fn add(&mut self, name: &str, contents: String) {
        self.artifacts.push((name.to_string(), contents));
    }

    fn add_json(&mut self, name: &str, value: &impl Serialize) {
        let mut text = serde_json::to_string_pretty(value).expect("artifacts serialize");
        text.push('\n');
        self.add(name, text);
    }
}

pub fn execute(cfg: &RunConfig) -> Result<Outcome, CliError> {
    match &cfg.command {
        Command::Evolve(a) => with_system(&a.system.rule, a.system.init.as_deref(), EvolveRun { args: a, seed: cfg.seed }),
        Command::Multiway(a) => with_system(&a.system.rule, a.system.init.as_deref(), MultiwayRun(a)),
        Command::CausalInvariance(a) => with_system(&a.system.rule, a.system.init.as_deref(), InvarianceRun(a)),
        Command::Boost(a) => with_system(&a.rule, Some(&a.init), BoostRun { args: a, seed: cfg.seed }),
        Command::Curvature(a) => curvature(a),
        Command::Dimension(a) => dimension(a, cfg.seed),
        Command::Planarity(a) => planarity(a),
        Command::Bundle(a) => bundle(a),
        Command::Rerun(_) => Err(CliError::Config("rerun is resolved before execution".into())),
    }
}

/// A computation generic over the kind of rewriting system.
trait SystemRun {
    type Out;

    fn run<R: RewriteSystem>(self, system: &R, init: &R::State) -> Result<Self::Out, CliError>
    where
        R::State: Serialize;
}

fn with_system<V: SystemRun>(rule: &str, init: Option<&str>, visit: V) -> Result<V::Out, CliError> {
    match parse_rules(rule)? {
        RuleSet::Strings(rules) => {
            let text = match init {
                Some(s) => parse_string_state(s)?,
                None => rules[0].lhs().iter().collect(),
            };
            visit.run(&StringSystem::new(rules), &StringState::new(&text))
        }
        RuleSet::Hypergraph(rules) => {
            let state = match init {
                Some(s) => parse_hypergraph(s)?,
                None => Hypergraph::from_edge_lists(
                    rules[0].lhs().edges.iter().map(|e| e.iter().map(|v| v.0 as u64).collect::<Vec<_>>()),
                )
                .map_err(CliError::analysis)?,
            };
            visit.run(&HypergraphSystem::new(rules), &state)
        }
    }
}

fn initial_tokens<R: RewriteSystem>(system: &R, init: &R::State) -> Vec<EdgeId> {
    system.live_tokens(init).into_iter().map(|(t, _)| t).collect()
}

fn causal_json(g: &CausalGraph) -> Value {
    json!({ "events": g.events(), "edges": g.edges() })
}

struct EvolveRun<'a> {
    args: &'a EvolveArgs,
    seed: u64,
}

impl SystemRun for EvolveRun<'_> {
    type Out = Outcome;

    fn run<R: RewriteSystem>(self, system: &R, init: &R::State) -> Result<Outcome, CliError>
    where
        R::State: Serialize,
    {
        let trace = evolve(system, init, self.args.scheme.into(), self.args.steps, self.seed).map_err(CliError::analysis)?;
        let g = trace_causal_graph(system, &trace, false).map_err(CliError::analysis)?;
        let mut out = Outcome::new(json!({
            "events": trace.events.len(),
            "halted_at": trace.halted_at,
            "final_state": system.state_label(&trace.final_state),
            "causal_edges": g.edge_count(),
        }));
        out.add_json("trace.json", &trace);
        out.add_json("causal.json", &causal_json(&g));
        out.add("causal.dot", g.to_dot(&BTreeSet::new()));
        Ok(out)
    }
}

struct MultiwayRun<'a>(&'a MultiwayArgs);

impl SystemRun for MultiwayRun<'_> {
    type Out = Outcome;

    fn run<R: RewriteSystem>(self, system: &R, init: &R::State) -> Result<Outcome, CliError>
    where
        R::State: Serialize,
    {
        let a = self.0;
        let variants: Vec<ConfluenceVariant> = a
            .variant
            .iter()
            .map(|v| v.parse().map_err(|_| CliError::Config(format!("unknown confluence variant {v:?}"))))
            .collect::<Result<_, _>>()?;
        let limits = ExploreLimits { max_depth: a.depth, max_states: a.max_states };
        let g = explore(system, init, limits).map_err(CliError::analysis)?;
        let budget = a.join_budget.unwrap_or_else(|| default_join_budget(a.depth));
        let reports: Vec<_> = variants.iter().map(|&v| check_confluence(&g, v, budget)).collect();
        let verdicts: serde_json::Map<String, Value> =
            reports.iter().map(|r| (json!(r.variant).as_str().unwrap_or_default().to_string(), json!(r.verdict))).collect();
        let normal_forms: Vec<&str> = g.normal_forms().into_iter().map(|i| g.states()[i].label.as_str()).collect();
        let mut out = Outcome::new(json!({
            "states": g.len(),
            "transitions": g.transitions().len(),
            "complete": g.is_complete(),
            "truncated": g.truncated(),
            "join_budget": budget,
            "normal_forms": normal_forms,
            "confluence": verdicts,
        }));
        out.add_json("multiway.json", &g.summary());
        out.add("multiway.dot", g.to_dot());
        out.add_json("confluence.json", &reports);
        if g.truncated() {
            out.budget = Some(format!("exploration stopped at {} states", g.len()));
        }
        Ok(out)
    }
}

struct InvarianceRun<'a>(&'a InvarianceArgs);

impl SystemRun for InvarianceRun<'_> {
    type Out = Outcome;

    fn run<R: RewriteSystem>(self, system: &R, init: &R::State) -> Result<Outcome, CliError>
    where
        R::State: Serialize,
    {
        let limits = InvarianceLimits { depth: self.0.depth, max_histories: self.0.max_histories };
        let r = causal_invariance(system, init, limits);
        let witness = r.witness.as_ref().map(|orders| {
            orders
                .iter()
                .map(|o| o.iter().map(|s| format!("{}@{}", s.rule, s.site)).collect::<Vec<_>>())
                .collect::<Vec<_>>()
        });
        let mut out = Outcome::new(json!({
            "verdict": r.verdict,
            "depth": r.depth,
            "distinct_causal_graphs": r.distinct_causal_graphs,
            "histories_explored": r.histories_explored,
            "witness": witness,
        }));
        out.add_json("invariance.json", &r);
        if r.budget_exhausted {
            out.budget = Some(format!("stopped after {} histories", r.histories_explored));
        }
        Ok(out)
    }
}

struct BoostRun<'a> {
    args: &'a BoostArgs,
    seed: u64,
}

fn boost_error(e: CausalError) -> CliError {
    match e {
        CausalError::BadVelocity(_) | CausalError::VelocityOutOfRange(_) | CausalError::BadDirection { .. } => {
            CliError::Config(e.to_string())
        }
        e => CliError::analysis(e),
    }
}

impl SystemRun for BoostRun<'_> {
    type Out = Outcome;

    fn run<R: RewriteSystem>(self, system: &R, init: &R::State) -> Result<Outcome, CliError>
    where
        R::State: Serialize,
    {
        let a = self.args;
        let v = parse_velocity(&a.v).map_err(boost_error)?;
        let b = Boost::new(v, a.direction.clone()).map_err(boost_error)?;
        let trace = evolve(system, init, a.scheme.into(), a.steps, self.seed).map_err(CliError::analysis)?;
        let g = trace_causal_graph(system, &trace, false).map_err(CliError::analysis)?;
        let (standard, coords) = g.foliate_standard();
        let boosted = boost(&coords, &b).map_err(boost_error)?;
        let r = refoliate(&g, &boosted).map_err(boost_error)?;
        let by_id: std::collections::HashMap<EventId, &Event> = trace.events.iter().map(|e| (e.id, e)).collect();
        let reordered: Vec<Event> = r.order.iter().map(|id| by_id[id].clone()).collect();
        let (_, replayed) = replay(system, init, &reordered).map_err(CliError::analysis)?;
        let g2 = build_causal_graph(&initial_tokens(system, init), &replayed, false).map_err(CliError::analysis)?;
        let replay_matches = g2.edges() == g.edges() && g2.canonical_key() == g.canonical_key();
        let mut out = Outcome::new(json!({
            "velocity": v.to_string(),
            "exact": b.is_exact(),
            "events": g.len(),
            "standard_slices": standard.slices.len(),
            "boosted_slices": r.foliation.slices.len(),
            "replay_matches": replay_matches,
        }));
        out.add_json("foliation.json", &json!({ "standard": standard, "boosted": r }));
        out.add_json("coordinates.json", &json!({ "standard": coords, "boosted": boosted }));
        out.add("causal.dot", g.to_dot(&BTreeSet::new()));
        if !replay_matches {
            return Err(CliError::Analysis("replaying the boosted order changed the causal graph".into()));
        }
        Ok(out)
    }
}

fn graph(source: &str) -> Result<Hypergraph, CliError> {
    source.parse::<GraphSource>()?.build()
}

fn parse_walk(text: &str) -> Result<Walk, CliError> {
    let bad = || CliError::Config(format!("unknown walk {text:?}; expected uniform or lazy:a/b"));
    match text.trim().split_once(':') {
        None if text.trim() == "uniform" => Ok(Walk::Uniform),
        Some(("lazy", a)) => {
            let alpha: Mass = a.trim().parse().map_err(|_| bad())?;
            if alpha < Mass::from_integer(0) || alpha > Mass::from_integer(1) {
                return Err(CliError::Config(format!("laziness {alpha} is outside [0, 1]")));
            }
            Ok(Walk::Lazy(alpha))
        }
        _ => Err(bad()),
    }
}

fn stats(values: impl IntoIterator<Item = f64>) -> Value {
    let v: Vec<f64> = values.into_iter().collect();
    if v.is_empty() {
        return json!({ "count": 0 });
    }
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    json!({ "count": v.len(), "mean": mean, "min": min, "max": max })
}

fn curvature(a: &CurvatureArgs) -> Result<Outcome, CliError> {
    let h = graph(&a.graph)?;
    let walk = parse_walk(&a.walk)?;
    let solver = match a.solver {
        SolverArg::Auto => Solver::Auto,
        SolverArg::Exact => Solver::Exact,
        SolverArg::Approx => Solver::Approx,
    };
    if a.directed {
        let dg = DirectedHypergraph::split(&h);
        let mut csv = String::from("edge,kappa\n");
        let mut rows = Vec::new();
        let mut values = Vec::new();
        for (i, e) in dg.edges().iter().enumerate() {
            match ollivier_ricci_hyperedge(&dg, i) {
                Ok(c) => {
                    csv.push_str(&format!("{i},{}\n", c.kappa));
                    values.push(c.kappa.to_f64());
                    rows.push(json!({ "edge": i, "tail": e.tail, "head": e.head, "kappa": c.kappa }));
                }
                Err(err) => rows.push(json!({ "edge": i, "tail": e.tail, "head": e.head, "error": err.to_string() })),
            }
        }
        let mut out = Outcome::new(json!({ "directed": true, "edges": dg.edges().len(), "kappa": stats(values) }));
        out.add("hyperedges.csv", csv);
        out.add_json("curvature.json", &rows);
        return Ok(out);
    }
    let adj = h.adjacency();
    if let Some(pair) = &a.pair {
        let [p, q] = pair[..] else {
            return Err(CliError::Config("--pair takes two vertex ids".into()));
        };
        let (p, q) = (VertexId(p), VertexId(q));
        let d = adj.distance(p, q).map_err(CliError::analysis)?.finite();
        let d = d.filter(|&d| d > 0).ok_or_else(|| CliError::Analysis(format!("{p} and {q} are not distinct and connected")))?;
        let mu = walk_measure(&adj, p, walk).map_err(CliError::analysis)?;
        let nu = walk_measure(&adj, q, walk).map_err(CliError::analysis)?;
        let t = wasserstein1_on(&adj, &mu, &nu, solver).map_err(CliError::analysis)?;
        let kappa = match t.cost {
            Scalar::Exact(c) => Scalar::Exact(Mass::from_integer(1) - c / Mass::from_integer(d as i128)),
            Scalar::Approx(c) => Scalar::Approx(1.0 - c / d as f64),
        };
        let mut out = Outcome::new(json!({ "p": p, "q": q, "distance": d, "kappa": kappa, "transport_cost": t.cost }));
        out.add_json("transport.json", &json!({ "p": p, "q": q, "distance": d, "kappa": kappa, "transport": t }));
        return Ok(out);
    }
    let edges = edge_curvatures(&adj, walk, solver).map_err(CliError::analysis)?;
    let vertices = vertex_curvatures(&adj, &edges);
    let exact = edges.iter().all(|e| matches!(e.kappa, Scalar::Exact(_)));
    let mut out = Outcome::new(json!({
        "vertices": adj.len(),
        "edges": edges.len(),
        "exact": exact,
        "kappa": stats(edges.iter().map(|e| e.kappa.to_f64())),
    }));
    out.add("edges.csv", edge_curvature_csv(&edges));
    out.add("vertices.csv", vertex_curvature_csv(&vertices));
    out.add_json("curvature.json", &json!({ "edges": edges, "vertices": vertices }));
    Ok(out)
}

fn parse_window(text: &str) -> Result<(u32, u32), CliError> {
    let bad = || CliError::Config(format!("bad window {text:?}; expected lo:hi"));
    let (lo, hi) = text.split_once(':').ok_or_else(bad)?;
    let w = (lo.trim().parse().map_err(|_| bad())?, hi.trim().parse().map_err(|_| bad())?);
    if w.0 >= w.1 {
        return Err(bad());
    }
    Ok(w)
}

/// The causal graph of an evolution, with the middle event of its first
/// layer as the default cone apex.
struct CausalRun<'a> {
    args: &'a DimensionArgs,
    seed: u64,
}

struct CausalBuilt {
    graph: CausalGraph,
    default_apex: Option<EventId>,
}

impl SystemRun for CausalRun<'_> {
    type Out = CausalBuilt;

    fn run<R: RewriteSystem>(self, system: &R, init: &R::State) -> Result<CausalBuilt, CliError>
    where
        R::State: Serialize,
    {
        let trace = evolve(system, init, self.args.scheme.into(), self.args.steps, self.seed).map_err(CliError::analysis)?;
        let graph = trace_causal_graph(system, &trace, false).map_err(CliError::analysis)?;
        let (f, coords) = graph.foliate_standard();
        let default_apex = f.slices.first().map(|first| {
            let mut layer = first.clone();
            layer.sort_by_key(|e| (coords.coords[e].x.clone(), *e));
            layer[layer.len() / 2]
        });
        Ok(CausalBuilt { graph, default_apex })
    }
}

fn fit_json(fit: Result<DimensionFit, DimensionError>) -> Value {
    match fit {
        Ok(f) => json!({ "converged": true, "fit": f }),
        Err(DimensionError::NoConvergence { best }) => json!({ "converged": false, "fit": best }),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

fn dimension(a: &DimensionArgs, seed: u64) -> Result<Outcome, CliError> {
    let mut extra = serde_json::Map::new();
    let (series, adj): (GrowthSeries, _) = if let Some(rule) = &a.rule {
        let built = with_system(rule, a.init.as_deref(), CausalRun { args: a, seed })?;
        let apex = match a.apex {
            Some(id) => EventId(id),
            None => built.default_apex.ok_or_else(|| CliError::Analysis("the evolution produced no events".into()))?,
        };
        extra.insert("apex".into(), json!(apex));
        (cone_counts(&built.graph, apex, a.r_max).map_err(CliError::analysis)?, None)
    } else {
        let source = a.graph.as_deref().ok_or_else(|| CliError::Config("dimension needs --graph or --rule".into()))?;
        let adj = graph(source)?.adjacency();
        let series = match a.center {
            Some(c) => ball_series(&adj, VertexId(c), a.r_max),
            None => mean_ball_series(&adj, adj.ids(), a.r_max),
        }
        .map_err(CliError::analysis)?;
        (series, Some(adj))
    };
    let window = match &a.window {
        Some(w) => parse_window(w)?,
        None => auto_window(&series).map_err(CliError::analysis)?,
    };
    let slope = log_dimension(&series, window).map_err(CliError::analysis)?;
    let offset = offset_dimension(&series, window).map_err(CliError::analysis)?;
    let corrected = fit_json(fit_curvature_correction(&series, window, a.offset));
    let mut report = json!({
        "window": window,
        "log_slope": slope.slope,
        "local_exponents": slope.local,
        "offset_fit": offset,
        "curvature_fit": corrected,
    });
    if a.anomaly {
        let adj = adj.as_ref().ok_or_else(|| CliError::Config("--anomaly needs --graph".into()))?;
        report["anomaly"] = json!(dimension_anomaly(adj, adj.ids()).map_err(CliError::analysis)?);
    }
    for (k, v) in extra {
        report[k] = v;
    }
    let mut summary = json!({
        "kind": series.kind(),
        "window": window,
        "n_hat": offset.n_hat,
        "log_slope": slope.slope,
        "r_hat": report["curvature_fit"]["fit"]["r_hat"],
    });
    if let Some(anomaly) = report.get("anomaly") {
        summary["anomaly"] = anomaly["total"].clone();
    }
    let mut out = Outcome::new(summary);
    out.add("series.csv", series.to_csv());
    out.add_json("dimension.json", &report);
    Ok(out)
}

fn planarity(a: &PlanarityArgs) -> Result<Outcome, CliError> {
    let adj = graph(&a.graph)?.adjacency();
    let tangles = count_tangles(&adj);
    let kinds: Vec<_> = tangles.witnesses.iter().map(|w| w.kind).collect();
    let mut out = Outcome::new(json!({ "planar": tangles.count == 0, "tangles": tangles.count, "kinds": kinds }));
    out.add_json("tangles.json", &tangles);
    out.add("tangles.dot", tangle_dot(&adj, &tangles.witnesses));
    Ok(out)
}

fn bundle(a: &BundleArgs) -> Result<Outcome, CliError> {
    let adj = graph(&a.graph)?.adjacency();
    let seeds: Vec<(VertexId, VertexId)> = a
        .rays
        .iter()
        .map(|r| {
            let bad = || CliError::Config(format!("bad ray {r:?}; expected start:next"));
            let (s, d) = r.split_once(':').ok_or_else(bad)?;
            Ok((VertexId(s.trim().parse().map_err(|_| bad())?), VertexId(d.trim().parse().map_err(|_| bad())?)))
        })
        .collect::<Result<_, CliError>>()?;
    let b = bundle_divergence(&adj, &seeds, a.steps).map_err(CliError::analysis)?;
    let mut out = Outcome::new(json!({
        "rays": b.rays.len(),
        "steps": b.separations.len().saturating_sub(1),
        "truncated": b.truncated,
        "final_separations": b.separations.last(),
    }));
    out.add("bundle.csv", b.to_csv());
    out.add_json("bundle.json", &b);
    Ok(out)
}
