//! Discrete Lorentz boosts of event coordinates and the foliations they
//! induce.

use std::collections::BTreeMap;

use num_integer::Roots;
use num_rational::Ratio;
use num_traits::{One, Signed, ToPrimitive, Zero};

use serde::Serialize;

use super::{CausalError, CausalGraph, Coord, EventCoordinates, Foliation};
use crate::Scalar;
use crate::hypercore::EventId;

type Q = Ratio<i128>;

/// Reads `a/b`, a decimal such as `0.25`, or an integer.
pub fn parse_velocity(text: &str) -> Result<Ratio<i64>, CausalError> {
    let bad = || CausalError::BadVelocity(text.to_string());
    let t = text.trim();
    if let Some((a, b)) = t.split_once('/') {
        let a: i64 = a.trim().parse().map_err(|_| bad())?;
        let b: i64 = b.trim().parse().map_err(|_| bad())?;
        if b == 0 {
            return Err(bad());
        }
        return Ok(Ratio::new(a, b));
    }
    if let Some((int, frac)) = t.split_once('.') {
        if frac.is_empty() || frac.len() > 15 || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let negative = int.starts_with('-');
        let int: i64 = if int.is_empty() || int == "-" { 0 } else { int.parse().map_err(|_| bad())? };
        let den = 10i64.pow(frac.len() as u32);
        let f: i64 = frac.parse().map_err(|_| bad())?;
        let mag = int.abs() * den + f;
        return Ok(Ratio::new(if negative { -mag } else { mag }, den));
    }
    t.parse::<i64>().map(Ratio::from_integer).map_err(|_| bad())
}

/// Boost with speed `v` in `[0, 1)` along spatial direction `u`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Boost {
    v: Ratio<i64>,
    u: Vec<i64>,
}

enum Factors {
    Exact { cosh: Q, sinh: Q, unit: Vec<Q> },
    Approx { cosh: f64, sinh: f64, unit: Vec<f64> },
}

fn exact_sqrt(n: i128) -> Option<i128> {
    let r = n.sqrt();
    (r * r == n).then_some(r)
}

impl Boost {
    pub fn new(v: Ratio<i64>, u: Vec<i64>) -> Result<Self, CausalError> {
        if v.is_negative() || v >= Ratio::one() {
            return Err(CausalError::VelocityOutOfRange(v.to_string()));
        }
        if u.is_empty() || u.iter().all(|&c| c == 0) {
            return Err(CausalError::BadDirection { expected: u.len().max(1) });
        }
        Ok(Self { v, u })
    }

    pub fn along_x(v: Ratio<i64>) -> Result<Self, CausalError> {
        Self::new(v, vec![1])
    }

    pub fn velocity(&self) -> Ratio<i64> {
        self.v
    }

    pub fn direction(&self) -> &[i64] {
        &self.u
    }

    /// Exact when `1 - v²` and `|u|²` are squares of rationals.
    pub fn is_exact(&self) -> bool {
        matches!(self.factors(), Factors::Exact { .. })
    }

    fn factors(&self) -> Factors {
        let (a, c) = (*self.v.numer() as i128, *self.v.denom() as i128);
        let norm2: i128 = self.u.iter().map(|&x| (x as i128) * (x as i128)).sum();
        if let (Some(b), Some(m)) = (exact_sqrt(c * c - a * a), exact_sqrt(norm2)) {
            return Factors::Exact {
                cosh: Q::new(c, b),
                sinh: Q::new(a, b),
                unit: self.u.iter().map(|&x| Q::new(x as i128, m)).collect(),
            };
        }
        let v = self.v.to_f64().expect("small ratio");
        let cosh = 1.0 / (1.0 - v * v).sqrt();
        let norm = (norm2 as f64).sqrt();
        Factors::Approx { cosh, sinh: v * cosh, unit: self.u.iter().map(|&x| x as f64 / norm).collect() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoostedCoord {
    pub t: Scalar,
    pub x: Vec<Scalar>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoostedCoordinates {
    pub exact: bool,
    pub coords: BTreeMap<EventId, BoostedCoord>,
}

/// `t' = cosh·t − sinh·(x·û)`, `x' = x + (cosh − 1)(x·û)û − sinh·t·û`.
pub fn boost(coords: &EventCoordinates, b: &Boost) -> Result<BoostedCoordinates, CausalError> {
    let dim = b.u.len();
    if let Some(c) = coords.coords.values().find(|c| c.x.len() != dim) {
        return Err(CausalError::BadDirection { expected: c.x.len() });
    }
    let factors = b.factors();
    let exact = matches!(factors, Factors::Exact { .. });
    let out = coords
        .coords
        .iter()
        .map(|(&e, c)| {
            let bc = match &factors {
                Factors::Exact { cosh, sinh, unit } => {
                    let t = Q::from_integer(c.t as i128);
                    let xs: Vec<Q> = c.x.iter().map(|&x| Q::from_integer(x as i128)).collect();
                    let dot: Q = xs.iter().zip(unit).map(|(x, u)| x * u).fold(Q::zero(), |a, b| a + b);
                    BoostedCoord {
                        t: Scalar::Exact(cosh * t - sinh * dot),
                        x: xs
                            .iter()
                            .zip(unit)
                            .map(|(x, u)| Scalar::Exact(x + (cosh - Q::one()) * dot * u - sinh * t * u))
                            .collect(),
                    }
                }
                Factors::Approx { cosh, sinh, unit } => {
                    let t = c.t as f64;
                    let dot: f64 = c.x.iter().zip(unit).map(|(&x, u)| x as f64 * u).sum();
                    BoostedCoord {
                        t: Scalar::Approx(cosh * t - sinh * dot),
                        x: c.x
                            .iter()
                            .zip(unit)
                            .map(|(&x, u)| Scalar::Approx(x as f64 + (cosh - 1.0) * dot * u - sinh * t * u))
                            .collect(),
                    }
                }
            };
            (e, bc)
        })
        .collect();
    Ok(BoostedCoordinates { exact, coords: out })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Refoliation {
    pub foliation: Foliation,
    /// Update order induced by the slices: slice by slice, ids within a slice.
    pub order: Vec<EventId>,
    pub slice_times: Vec<Scalar>,
}

/// Slices events by boosted time and accepts the slicing only when every
/// causal edge advances to a strictly later slice. Approximate times closer
/// than `1e-9` share a slice.
pub fn refoliate(g: &CausalGraph, boosted: &BoostedCoordinates) -> Result<Refoliation, CausalError> {
    let mut timed: Vec<(EventId, Scalar)> = Vec::with_capacity(g.len());
    for &e in g.events() {
        let c = boosted.coords.get(&e).ok_or(CausalError::UnknownEvent(e))?;
        timed.push((e, c.t));
    }
    timed.sort_by(|a, b| match (a.1, b.1) {
        (Scalar::Exact(x), Scalar::Exact(y)) => x.cmp(&y).then(a.0.cmp(&b.0)),
        _ => a.1.to_f64().total_cmp(&b.1.to_f64()).then(a.0.cmp(&b.0)),
    });
    let same = |x: Scalar, y: Scalar| match (x, y) {
        (Scalar::Exact(p), Scalar::Exact(q)) => p == q,
        _ => (x.to_f64() - y.to_f64()).abs() <= 1e-9 * (1.0 + y.to_f64().abs()),
    };
    let mut slices: Vec<Vec<EventId>> = Vec::new();
    let mut slice_times = Vec::new();
    for (k, &(e, t)) in timed.iter().enumerate() {
        if k == 0 || !same(timed[k - 1].1, t) {
            slices.push(Vec::new());
            slice_times.push(t);
        }
        slices.last_mut().expect("a slice was just opened").push(e);
    }
    let foliation = Foliation { slices };
    let slice = foliation.slice_of();
    for (a, b) in g.edges() {
        if slice[&a] >= slice[&b] {
            return Err(CausalError::NonCausalSlicing { from: a, to: b });
        }
    }
    let order = foliation.order();
    Ok(Refoliation { foliation, order, slice_times })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Interval {
    Timelike,
    Lightlike,
    Spacelike,
}

/// `|Δx|² − Δt²`.
pub fn minkowski_norm(dt: i64, dx: &[i64]) -> i64 {
    dx.iter().map(|d| d * d).sum::<i64>() - dt * dt
}

pub fn classify_interval(p: &Coord, q: &Coord) -> Interval {
    let dx: Vec<i64> = p.x.iter().zip(&q.x).map(|(a, b)| b - a).collect();
    match minkowski_norm(q.t - p.t, &dx) {
        n if n < 0 => Interval::Timelike,
        0 => Interval::Lightlike,
        _ => Interval::Spacelike,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::causal::trace_causal_graph;
    use crate::rewrite::{StringRule, StringState, StringSystem, UpdateScheme, evolve};

    fn sorting_graph(pairs: usize) -> CausalGraph {
        let sys = StringSystem::new(vec![StringRule::new("AB", "BA").unwrap()]);
        let t = evolve(&sys, &StringState::new(&"AB".repeat(pairs)), UpdateScheme::Parallel, 4 * pairs as u32, 0)
            .unwrap();
        trace_causal_graph(&sys, &t, false).unwrap()
    }

    #[test]
    fn parses_velocities() {
        assert_eq!(parse_velocity("5/13").unwrap(), Ratio::new(5, 13));
        assert_eq!(parse_velocity("0.25").unwrap(), Ratio::new(1, 4));
        assert_eq!(parse_velocity("1").unwrap(), Ratio::from_integer(1));
        assert!(parse_velocity("x").is_err());
        assert!(parse_velocity("1/0").is_err());
    }

    #[test]
    fn speed_of_light_rejected() {
        assert!(Boost::along_x(Ratio::from_integer(1)).is_err());
        assert!(Boost::along_x(Ratio::new(3, 2)).is_err());
        assert!(Boost::along_x(Ratio::new(-1, 2)).is_err());
        assert!(Boost::new(Ratio::new(1, 2), vec![0]).is_err());
    }

    #[test]
    fn pythagorean_speed_is_exact() {
        let b = Boost::along_x(Ratio::new(5, 13)).unwrap();
        assert!(b.is_exact());
        let coords = EventCoordinates {
            coords: BTreeMap::from([(EventId(0), Coord { t: 12, x: vec![0] }), (EventId(1), Coord { t: 0, x: vec![12] })]),
        };
        let out = boost(&coords, &b).unwrap();
        assert_eq!(out.coords[&EventId(0)].t, Scalar::Exact(Q::from_integer(13)));
        assert_eq!(out.coords[&EventId(0)].x[0], Scalar::Exact(Q::from_integer(-5)));
        assert_eq!(out.coords[&EventId(1)].t, Scalar::Exact(Q::from_integer(-5)));
        assert_eq!(out.coords[&EventId(1)].x[0], Scalar::Exact(Q::from_integer(13)));
        assert!(!Boost::along_x(Ratio::new(1, 2)).unwrap().is_exact());
    }

    #[test]
    fn boost_preserves_interval_in_float_mode() {
        let b = Boost::along_x(Ratio::new(1, 3)).unwrap();
        let coords = EventCoordinates {
            coords: BTreeMap::from([(EventId(0), Coord { t: 0, x: vec![0] }), (EventId(1), Coord { t: 5, x: vec![3] })]),
        };
        let out = boost(&coords, &b).unwrap();
        let p = &out.coords[&EventId(1)];
        let norm = p.x[0].to_f64().powi(2) - p.t.to_f64().powi(2);
        assert!((norm - (9.0 - 25.0)).abs() < 1e-9);
    }

    #[test]
    fn zero_boost_reproduces_standard_layers() {
        let g = sorting_graph(6);
        let (f, coords) = g.foliate_standard();
        let r = refoliate(&g, &boost(&coords, &Boost::along_x(Ratio::from_integer(0)).unwrap()).unwrap()).unwrap();
        assert_eq!(r.foliation, f);
    }

    #[test]
    fn subluminal_boost_accepted_and_changes_slicing() {
        let g = sorting_graph(6);
        let (f, coords) = g.foliate_standard();
        let r = refoliate(&g, &boost(&coords, &Boost::along_x(Ratio::new(5, 13)).unwrap()).unwrap()).unwrap();
        g.validate_foliation(&r.foliation).unwrap();
        assert!(r.foliation.slices.len() > f.slices.len());
    }

    #[test]
    fn intervals() {
        let o = Coord { t: 0, x: vec![0] };
        assert_eq!(classify_interval(&o, &Coord { t: 2, x: vec![1] }), Interval::Timelike);
        assert_eq!(classify_interval(&o, &Coord { t: 1, x: vec![1] }), Interval::Lightlike);
        assert_eq!(classify_interval(&o, &Coord { t: 1, x: vec![2] }), Interval::Spacelike);
    }
}
