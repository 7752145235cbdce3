//! Dimension and curvature estimates from the growth of balls and causal
//! cones.

use std::collections::{BTreeMap, HashMap, VecDeque};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::causal::{CausalError, CausalGraph};
use crate::hypercore::{Adjacency, EventId, HypergraphError, VertexId};
use crate::transport::{Solver, TransportError, Walk, ollivier_ricci_on};

/// Iteration cap for the curvature fit.
pub const FIT_ITERATIONS: usize = 200;
const GRADIENT_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DimensionError {
    #[error("growth series is invalid: {0}")]
    InvalidSeries(String),
    #[error("window [{0}, {1}] holds too few usable radii")]
    Window(u32, u32),
    #[error("fit did not converge in {} iterations", FIT_ITERATIONS)]
    NoConvergence { best: Box<DimensionFit> },
    #[error("sample is empty")]
    EmptySample,
    #[error(transparent)]
    Causal(#[from] CausalError),
    #[error(transparent)]
    Hypergraph(#[from] HypergraphError),
    #[error(transparent)]
    Transport(#[from] TransportError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthKind {
    Spatial,
    Causal,
}

/// Counts `N(r)` of vertices within distance `r`, or `C(t)` of events within
/// `t` causal steps.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthSeries {
    radii: Vec<u32>,
    counts: Vec<f64>,
    kind: GrowthKind,
}

impl GrowthSeries {
    pub fn new(radii: Vec<u32>, counts: Vec<f64>, kind: GrowthKind) -> Result<Self, DimensionError> {
        let bad = |m: &str| Err(DimensionError::InvalidSeries(m.to_string()));
        if radii.len() != counts.len() || radii.is_empty() {
            return bad("radii and counts must be nonempty and of equal length");
        }
        if radii[0] > 1 || radii.windows(2).any(|w| w[0] >= w[1]) {
            return bad("radii must ascend from 0 or 1");
        }
        if counts.iter().any(|c| !(c.is_finite() && *c > 0.0)) || counts.windows(2).any(|w| w[0] > w[1]) {
            return bad("counts must be positive and nondecreasing");
        }
        Ok(Self { radii, counts, kind })
    }

    /// Counts for radii `0, 1, ...`.
    pub fn from_counts(counts: &[u64], kind: GrowthKind) -> Result<Self, DimensionError> {
        Self::new((0..counts.len() as u32).collect(), counts.iter().map(|&c| c as f64).collect(), kind)
    }

    pub fn radii(&self) -> &[u32] {
        &self.radii
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn kind(&self) -> GrowthKind {
        self.kind
    }

    /// Pointwise mean of series sharing radii and kind.
    pub fn mean(series: &[GrowthSeries]) -> Result<Self, DimensionError> {
        let first = series.first().ok_or(DimensionError::EmptySample)?;
        if series.iter().any(|s| s.radii != first.radii || s.kind != first.kind) {
            return Err(DimensionError::InvalidSeries("series radii differ".into()));
        }
        let k = series.len() as f64;
        let counts = (0..first.radii.len()).map(|i| series.iter().map(|s| s.counts[i]).sum::<f64>() / k).collect();
        Self::new(first.radii.clone(), counts, first.kind)
    }

    fn points(&self, window: (u32, u32)) -> Vec<(f64, f64)> {
        self.radii
            .iter()
            .zip(&self.counts)
            .filter(|&(&r, _)| r >= window.0.max(1) && r <= window.1)
            .map(|(&r, &c)| (r as f64, c))
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(match self.kind {
            GrowthKind::Spatial => "r,count\n",
            GrowthKind::Causal => "t,count\n",
        });
        for (r, c) in self.radii.iter().zip(&self.counts) {
            out.push_str(&format!("{r},{c}\n"));
        }
        out
    }
}

/// Ordinary least squares `y = slope x + intercept`, with the residual sum
/// of squares.
fn least_squares(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let k = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let sse = points.iter().map(|p| (p.1 - slope * p.0 - intercept).powi(2)).sum();
    (slope, intercept, sse)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogDimension {
    /// `(r1, r2, log(N2/N1)/log(r2/r1))` for consecutive radii.
    pub local: Vec<(u32, u32, f64)>,
    /// Least-squares slope of `log N` against `log r` over the window.
    pub slope: f64,
    pub window: (u32, u32),
}

pub fn log_dimension(series: &GrowthSeries, window: (u32, u32)) -> Result<LogDimension, DimensionError> {
    let pts = series.points(window);
    if pts.len() < 2 {
        return Err(DimensionError::Window(window.0, window.1));
    }
    let local = pts
        .windows(2)
        .map(|w| (w[0].0 as u32, w[1].0 as u32, (w[1].1 / w[0].1).ln() / (w[1].0 / w[0].0).ln()))
        .collect();
    let logs: Vec<(f64, f64)> = pts.iter().map(|&(r, c)| (r.ln(), c.ln())).collect();
    Ok(LogDimension { local, slope: least_squares(&logs).0, window })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DimensionFit {
    pub n_hat: f64,
    pub a_hat: f64,
    pub r_hat: Option<f64>,
    /// Shift `c` in the radius `r + c` the power law is taken in.
    pub offset: f64,
    /// Root mean square of the residuals the fit minimized.
    pub residual: f64,
    pub window: (u32, u32),
    pub iterations: usize,
}

/// Fits `N = a (r + c)^n` with `c` in `[0, 4]` chosen to minimize the
/// log-space residual.
pub fn offset_dimension(series: &GrowthSeries, window: (u32, u32)) -> Result<DimensionFit, DimensionError> {
    let pts = series.points(window);
    if pts.len() < 3 {
        return Err(DimensionError::Window(window.0, window.1));
    }
    let fit = |c: f64| {
        let logs: Vec<(f64, f64)> = pts.iter().map(|&(r, n)| ((r + c).ln(), n.ln())).collect();
        least_squares(&logs)
    };
    let mut best = (0.0, f64::INFINITY);
    for i in 0..=400 {
        let c = i as f64 * 0.01;
        let sse = fit(c).2;
        if sse < best.1 {
            best = (c, sse);
        }
    }
    // Golden-section refinement inside the winning grid cell.
    let (mut lo, mut hi) = ((best.0 - 0.01).max(0.0), (best.0 + 0.01).min(4.0));
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..60 {
        let m1 = hi - phi * (hi - lo);
        let m2 = lo + phi * (hi - lo);
        if fit(m1).2 <= fit(m2).2 {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let c = if fit((lo + hi) / 2.0).2 <= best.1 { (lo + hi) / 2.0 } else { best.0 };
    let (n, b, sse) = fit(c);
    Ok(DimensionFit {
        n_hat: n,
        a_hat: b.exp(),
        r_hat: None,
        offset: c,
        residual: (sse / pts.len() as f64).sqrt(),
        window,
        iterations: 0,
    })
}

fn solve3(m: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let det = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(m);
    if d == 0.0 || !d.is_finite() {
        return None;
    }
    let mut x = [0.0; 3];
    for (k, slot) in x.iter_mut().enumerate() {
        let mut mk = m;
        for i in 0..3 {
            mk[i][k] = b[i];
        }
        *slot = det(mk) / d;
    }
    Some(x)
}

/// Least-squares fit of `N = a s^n (1 - R s^2 / (6 (n + 2)))` with
/// `s = r + offset`, minimizing relative residuals by Levenberg-Marquardt.
pub fn fit_curvature_correction(
    series: &GrowthSeries,
    window: (u32, u32),
    offset: f64,
) -> Result<DimensionFit, DimensionError> {
    let pts: Vec<(f64, f64)> = series.points(window).into_iter().map(|(r, n)| (r + offset, n)).collect();
    if pts.len() < 4 {
        return Err(DimensionError::Window(window.0, window.1));
    }
    let logs: Vec<(f64, f64)> = pts.iter().map(|&(s, n)| (s.ln(), n.ln())).collect();
    let n0 = least_squares(&logs).0;
    // Parameters are (ln a, n, R).
    let mut p = [pts[0].1.ln() - n0 * pts[0].0.ln(), n0, 0.0];
    let eval = |p: &[f64; 3]| -> (Vec<f64>, Vec<[f64; 3]>) {
        let mut res = Vec::with_capacity(pts.len());
        let mut jac = Vec::with_capacity(pts.len());
        for &(s, count) in &pts {
            let base = (p[0] + p[1] * s.ln()).exp();
            let k = s * s / (6.0 * (p[1] + 2.0));
            let model = base * (1.0 - p[2] * k);
            res.push(model / count - 1.0);
            jac.push([
                model / count,
                (model * s.ln() + base * p[2] * k / (p[1] + 2.0)) / count,
                -base * k / count,
            ]);
        }
        (res, jac)
    };
    let cost = |r: &[f64]| r.iter().map(|x| x * x).sum::<f64>();
    let (mut res, mut jac) = eval(&p);
    let mut current = cost(&res);
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < FIT_ITERATIONS {
        iterations += 1;
        let mut jtj = [[0.0; 3]; 3];
        let mut g = [0.0; 3];
        for (row, r) in jac.iter().zip(&res) {
            for i in 0..3 {
                g[i] += row[i] * r;
                for j in 0..3 {
                    jtj[i][j] += row[i] * row[j];
                }
            }
        }
        if g.iter().all(|x| x.abs() < GRADIENT_TOLERANCE) {
            converged = true;
            break;
        }
        let mut improved = false;
        while lambda < 1e16 {
            let mut a = jtj;
            for (i, row) in a.iter_mut().enumerate() {
                row[i] += lambda * jtj[i][i].max(1e-300);
            }
            let Some(step) = solve3(a, [-g[0], -g[1], -g[2]]) else {
                lambda *= 10.0;
                continue;
            };
            let trial = [p[0] + step[0], p[1] + step[1], p[2] + step[2]];
            let (r2, j2) = eval(&trial);
            let c2 = cost(&r2);
            if c2.is_finite() && c2 < current {
                let tiny = step.iter().zip(&trial).all(|(d, x)| d.abs() <= 1e-14 * x.abs().max(1.0));
                p = trial;
                res = r2;
                jac = j2;
                current = c2;
                lambda = (lambda / 10.0).max(1e-12);
                improved = true;
                converged = tiny;
                break;
            }
            lambda *= 10.0;
        }
        // No descent step exists at any damping: a numerical minimum.
        if !improved || converged {
            converged = true;
            break;
        }
    }
    let fit = DimensionFit {
        n_hat: p[1],
        a_hat: p[0].exp(),
        r_hat: Some(p[2]),
        offset,
        residual: (current / pts.len() as f64).sqrt(),
        window,
        iterations,
    };
    if converged { Ok(fit) } else { Err(DimensionError::NoConvergence { best: Box::new(fit) }) }
}

/// Widest window from `r = 2` up to the last radius before the local
/// exponent falls below half its running maximum, which marks the ball
/// reaching the edge of the graph.
pub fn auto_window(series: &GrowthSeries) -> Result<(u32, u32), DimensionError> {
    let pts = series.points((2, u32::MAX));
    if pts.len() < 3 {
        return Err(DimensionError::Window(2, series.radii.last().copied().unwrap_or(0)));
    }
    let mut peak: f64 = 0.0;
    let mut end = pts[1].0 as u32;
    for w in pts.windows(2) {
        let local = (w[1].1 / w[0].1).ln() / (w[1].0 / w[0].0).ln();
        if local < 0.5 * peak {
            break;
        }
        peak = peak.max(local);
        end = w[1].0 as u32;
    }
    Ok((pts[0].0 as u32, end))
}

pub fn ball_series(adj: &Adjacency, x: VertexId, r_max: u32) -> Result<GrowthSeries, DimensionError> {
    GrowthSeries::from_counts(&adj.ball_counts(x, r_max)?, GrowthKind::Spatial)
}

/// Ball growth averaged over `sample`.
pub fn mean_ball_series(adj: &Adjacency, sample: &[VertexId], r_max: u32) -> Result<GrowthSeries, DimensionError> {
    if sample.is_empty() {
        return Err(DimensionError::EmptySample);
    }
    let all: Vec<GrowthSeries> =
        sample.par_iter().map(|&x| ball_series(adj, x, r_max)).collect::<Result<_, _>>()?;
    GrowthSeries::mean(&all)
}

/// Events reachable from `apex` in at most `t` causal edges, for `t` in
/// `0..=t_max`.
pub fn cone_counts(cg: &CausalGraph, apex: EventId, t_max: u32) -> Result<GrowthSeries, DimensionError> {
    if !cg.contains(apex) {
        return Err(CausalError::UnknownEvent(apex).into());
    }
    let mut depth: HashMap<EventId, u32> = HashMap::from([(apex, 0)]);
    let mut queue = VecDeque::from([apex]);
    let mut counts = vec![0u64; t_max as usize + 1];
    while let Some(e) = queue.pop_front() {
        let d = depth[&e];
        counts[d as usize] += 1;
        if d == t_max {
            continue;
        }
        for s in cg.successors(e)? {
            depth.entry(s).or_insert_with(|| {
                queue.push_back(s);
                d + 1
            });
        }
    }
    for t in 1..counts.len() {
        counts[t] += counts[t - 1];
    }
    GrowthSeries::from_counts(&counts, GrowthKind::Causal)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnomalyReport {
    /// Sum over the sample of each vertex's mean neighbor curvature.
    pub total: f64,
    pub per_vertex: BTreeMap<VertexId, f64>,
    /// Sampled vertices without neighbors; they contribute zero.
    pub isolated: Vec<VertexId>,
}

pub fn dimension_anomaly(adj: &Adjacency, sample: &[VertexId]) -> Result<AnomalyReport, DimensionError> {
    if sample.is_empty() {
        return Err(DimensionError::EmptySample);
    }
    let values: Vec<(VertexId, Option<f64>)> = sample
        .par_iter()
        .map(|&x| {
            let i = adj.index_of(x)?;
            if adj.degree(i) == 0 {
                return Ok((x, None));
            }
            let mut sum = 0.0;
            for &j in adj.neighbors(i) {
                sum += ollivier_ricci_on(adj, x, adj.id(j), Walk::Uniform, Solver::Auto)?.kappa.to_f64();
            }
            Ok((x, Some(sum / adj.degree(i) as f64)))
        })
        .collect::<Result<_, DimensionError>>()?;
    let mut report = AnomalyReport { total: 0.0, per_vertex: BTreeMap::new(), isolated: Vec::new() };
    for (x, v) in values {
        match v {
            Some(k) => {
                report.total += k;
                report.per_vertex.insert(x, k);
            }
            None => {
                report.isolated.push(x);
                report.per_vertex.insert(x, 0.0);
            }
        }
    }
    Ok(report)
}
