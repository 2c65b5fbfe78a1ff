//! Fixture generation and the large-`λ` sweep.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::energy::ProblemInstance;
use crate::error::{Error, Result};
use crate::field::VertexField;
use crate::graph::{Edge, Vertex, WeightedGraph};
use crate::solver::{solve_ground, solve_nodal, SolveOptions, SolveReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    Path,
    Cycle,
    /// `√n × √n` lattice, ids `v1..vn` in row-major order.
    Grid,
    /// Center `v1`, leaves `v2..vn`.
    Star,
}

impl std::str::FromStr for Topology {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "path" => Ok(Topology::Path),
            "cycle" => Ok(Topology::Cycle),
            "grid" => Ok(Topology::Grid),
            "star" => Ok(Topology::Star),
            other => Err(Error::InvalidOption(format!("unknown topology `{other}`"))),
        }
    }
}

fn vid(i: usize) -> String {
    format!("v{i}")
}

/// Parses `v3..v5,v9` into 1-based vertex numbers.
pub fn parse_well(spec: &str, n: usize) -> Result<Vec<usize>> {
    let number = |tok: &str| -> Result<usize> {
        let k: usize = tok
            .trim()
            .strip_prefix('v')
            .and_then(|d| d.parse().ok())
            .ok_or_else(|| Error::Parse(format!("bad vertex `{tok}` in well spec")))?;
        if k == 0 || k > n {
            return Err(Error::UnknownVertex(tok.trim().to_string()));
        }
        Ok(k)
    };
    let mut out = Vec::new();
    for item in spec.split(',').filter(|s| !s.trim().is_empty()) {
        match item.split_once("..") {
            Some((a, b)) => {
                let (a, b) = (number(a)?, number(b)?);
                if a > b {
                    return Err(Error::Parse(format!("empty range `{item}`")));
                }
                out.extend(a..=b);
            }
            None => out.push(number(item)?),
        }
    }
    out.sort_unstable();
    out.dedup();
    if out.is_empty() {
        return Err(Error::InvalidDomain("well is empty".into()));
    }
    Ok(out)
}

/// Builds a fixture with `a = 0` on the well and `a = a_out` elsewhere.
pub fn generate_graph(topology: Topology, n: usize, well: &str, mu: f64, w: f64, a_out: f64) -> Result<WeightedGraph> {
    if n < 2 {
        return Err(Error::InvalidOption(format!("n must be at least 2, got {n}")));
    }
    if !(a_out > 0.0 && a_out.is_finite()) {
        return Err(Error::InvalidOption(format!("a_out must be positive, got {a_out}")));
    }
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    match topology {
        Topology::Path => pairs.extend((1..n).map(|i| (i, i + 1))),
        Topology::Cycle => {
            if n < 3 {
                return Err(Error::InvalidOption("a cycle needs at least 3 vertices".into()));
            }
            pairs.extend((1..n).map(|i| (i, i + 1)));
            pairs.push((n, 1));
        }
        Topology::Grid => {
            let side = (1..=n).find(|k| k * k >= n).unwrap_or(n);
            if side * side != n {
                return Err(Error::InvalidOption(format!("grid size {n} is not a perfect square")));
            }
            for r in 0..side {
                for c in 0..side {
                    let k = r * side + c + 1;
                    if c + 1 < side {
                        pairs.push((k, k + 1));
                    }
                    if r + 1 < side {
                        pairs.push((k, k + side));
                    }
                }
            }
        }
        Topology::Star => pairs.extend((2..=n).map(|i| (1, i))),
    }
    let well = parse_well(well, n)?;
    let vertices = (1..=n)
        .map(|i| Vertex {
            id: vid(i),
            mu,
            a: if well.binary_search(&i).is_ok() { 0.0 } else { a_out },
        })
        .collect();
    let edges = pairs
        .into_iter()
        .map(|(a, b)| Edge { u: vid(a), v: vid(b), w })
        .collect();
    let g = WeightedGraph::new(vertices, edges)?;
    let report = g.validate_potential(None);
    if !report.a1_pass {
        return Err(Error::InvalidDomain(format!(
            "well {{{}}} is not connected in this {n}-vertex graph",
            report.well.join(", ")
        )));
    }
    Ok(g)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepThresholds {
    /// Bound on `(m_Ω - m_λ) / m_Ω` at the largest `λ`.
    pub gap: f64,
    /// Bound on `λ∫a u_λ² / m_Ω`.
    pub potential_mass: f64,
    /// Bound on `∫_{V∖Ω} u_λ² / ‖u₀‖₂²`.
    pub tail_mass: f64,
    /// Bound on `‖u_λ - u₀‖_{H¹} / ‖u₀‖_{H¹}`.
    pub h1_dist: f64,
}

impl Default for SweepThresholds {
    fn default() -> Self {
        SweepThresholds {
            gap: 0.02,
            potential_mass: 0.05,
            tail_mass: 0.01,
            h1_dist: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub m_lambda: f64,
    pub c_lambda: f64,
    pub margin_m_minus_2c: f64,
    pub gap_to_m_omega: f64,
    pub potential_mass: f64,
    pub h1_dist_to_limit: f64,
    pub tail_mass: f64,
}

impl SweepRow {
    fn metrics(&self) -> [f64; 4] {
        [self.gap_to_m_omega, self.potential_mass, self.tail_mass, self.h1_dist_to_limit]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    pub m_omega: f64,
    pub c_omega: f64,
    pub limit_l2_sq: f64,
    pub limit_h1: f64,
    /// Largest `‖u_λ‖_{H_λ}` over the rows.
    pub sup_h_lambda_norm: f64,
    /// Smallest `min(‖u_λ⁺‖_{H¹}, ‖u_λ⁻‖_{H¹})` over the rows.
    pub min_part_h1: f64,
    /// `m_λ ≤ m_Ω + 1e-8` and `m_λ > 2c_λ` on every row.
    pub rows_pass: bool,
    /// Final-row thresholds; `None` for a single-`λ` sweep.
    pub thresholds_pass: Option<bool>,
    /// Every metric smaller at the last `λ` than at the first.
    pub trend_pass: Option<bool>,
    pub notes: Vec<String>,
    pub failure: Option<String>,
}

impl SweepSummary {
    pub fn passed(&self) -> bool {
        self.failure.is_none() && self.rows_pass && self.thresholds_pass != Some(false) && self.trend_pass != Some(false)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    pub summary: SweepSummary,
}

pub const CSV_HEADER: &str =
    "lambda,m_lambda,c_lambda,margin_m_minus_2c,gap_to_m_omega,potential_mass,h1_dist_to_limit,tail_mass";

impl SweepOutcome {
    /// CSV text; a failed sweep ends with a `# failed ...` marker row.
    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                r.lambda,
                r.m_lambda,
                r.c_lambda,
                r.margin_m_minus_2c,
                r.gap_to_m_omega,
                r.potential_mass,
                r.h1_dist_to_limit,
                r.tail_mass
            );
        }
        if let Some(f) = &self.summary.failure {
            let _ = writeln!(s, "# failed {}", f.replace('\n', " "));
        }
        s
    }
}

/// `∫ (Γ(u,v) + uv) dμ`
fn h1_inner(g: &WeightedGraph, u: &VertexField, v: &VertexField) -> f64 {
    let grad = g.dirichlet_form(u.values(), v.values(), None);
    let mass: f64 = (0..g.len()).map(|x| g.mu()[x] * u[x] * v[x]).sum();
    grad + mass
}

fn h1_norm(g: &WeightedGraph, u: &VertexField) -> f64 {
    h1_inner(g, u, u).sqrt()
}

/// Solves the Dirichlet problem on the well, then the full problem at each
/// `λ`, and compares the nodal minimizers with the Dirichlet limit.
pub fn sweep(g: &WeightedGraph, lambdas: &[f64], opts: &SolveOptions, thresholds: &SweepThresholds) -> Result<SweepOutcome> {
    if lambdas.is_empty() {
        return Err(Error::InvalidOption("no lambda values given".into()));
    }
    if lambdas.iter().any(|&l| !(l > 0.0 && l.is_finite())) || lambdas.windows(2).any(|p| p[1] <= p[0]) {
        return Err(Error::InvalidOption("lambdas must be positive and strictly increasing".into()));
    }
    let limit_inst = ProblemInstance::dirichlet_on_well(g)?;
    let limit = solve_nodal(&limit_inst, opts)?;
    let limit_ground = solve_ground(&limit_inst, opts)?;
    let u0 = &limit.field;
    let omega = match limit_inst.mode() {
        crate::energy::Mode::Dirichlet { omega } => omega.clone(),
        crate::energy::Mode::Full { .. } => unreachable!("dirichlet instance"),
    };
    let m_omega = limit.level;
    let limit_l2_sq: f64 = (0..g.len()).map(|x| g.mu()[x] * u0[x] * u0[x]).sum();
    let limit_h1 = h1_norm(g, u0);

    let solved: Vec<Result<(SolveReport, SolveReport)>> = lambdas
        .par_iter()
        .map(|&lambda| {
            let inst = ProblemInstance::full(g, lambda)?;
            Ok((solve_nodal(&inst, opts)?, solve_ground(&inst, opts)?))
        })
        .collect();

    let mut rows = Vec::new();
    let mut notes = Vec::new();
    let mut failure = None;
    let mut sup_h_lambda: f64 = 0.0;
    let mut min_part: f64 = f64::INFINITY;
    for (&lambda, res) in lambdas.iter().zip(solved) {
        let (nodal, ground) = match res {
            Ok(pair) => pair,
            Err(e) => {
                failure = Some(format!("at lambda={lambda}: {e}"));
                break;
            }
        };
        let mut u = nodal.field.clone();
        if h1_inner(g, &u, u0) < 0.0 {
            u = u.scaled(-1.0);
        }
        let same_shape = (0..g.len())
            .filter(|&x| omega.contains(x))
            .all(|x| (u[x] > 0.0) == (u0[x] > 0.0) && (u[x] < 0.0) == (u0[x] < 0.0));
        if !same_shape {
            notes.push(format!("lambda={lambda}: sign pattern on the well differs from the limit"));
        }
        let diff = u.axpby(1.0, u0, -1.0);
        let potential_mass: f64 = (0..g.len())
            .map(|x| lambda * g.potential()[x] * g.mu()[x] * u[x] * u[x])
            .sum();
        let tail_mass: f64 = (0..g.len())
            .filter(|&x| !omega.contains(x))
            .map(|x| g.mu()[x] * u[x] * u[x])
            .sum();
        let norms = g.norms(&u, lambda)?;
        sup_h_lambda = sup_h_lambda.max(norms.h_lambda());
        min_part = min_part.min(h1_norm(g, &u.positive_part()).min(h1_norm(g, &u.negative_part())));
        rows.push(SweepRow {
            lambda,
            m_lambda: nodal.level,
            c_lambda: ground.level,
            margin_m_minus_2c: nodal.level - 2.0 * ground.level,
            gap_to_m_omega: m_omega - nodal.level,
            potential_mass,
            h1_dist_to_limit: h1_norm(g, &diff),
            tail_mass,
        });
    }

    let rows_pass = rows
        .iter()
        .all(|r| r.m_lambda <= m_omega + 1e-8 && r.margin_m_minus_2c > 0.0);
    let (thresholds_pass, trend_pass) = match (rows.first(), rows.last()) {
        (Some(first), Some(last)) if rows.len() > 1 && failure.is_none() => {
            let bounds = [
                thresholds.gap * m_omega,
                thresholds.potential_mass * m_omega,
                thresholds.tail_mass * limit_l2_sq,
                thresholds.h1_dist * limit_h1,
            ];
            let within = last.metrics().iter().zip(bounds).all(|(v, b)| *v <= b);
            let shrinking = last.metrics().iter().zip(first.metrics()).all(|(l, f)| *l < f);
            (Some(within), Some(shrinking))
        }
        _ => (None, None),
    };
    Ok(SweepOutcome {
        rows,
        summary: SweepSummary {
            m_omega,
            c_omega: limit_ground.level,
            limit_l2_sq,
            limit_h1,
            sup_h_lambda_norm: sup_h_lambda,
            min_part_h1: min_part,
            rows_pass,
            thresholds_pass,
            trend_pass,
            notes,
            failure,
        },
    })
}
