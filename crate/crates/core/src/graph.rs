//! Finite weighted graphs and their discrete calculus.
//!
//! A [`WeightedGraph`] carries a vertex measure `μ`, symmetric edge weights
//! `ω_xy` and a nonnegative potential `a`. On top of it live
//!
//! * the Laplacian `Δu(x) = (1/μ(x)) Σ_{y~x} ω_xy (u(y) - u(x))`,
//! * the gradient form `Γ(u,v)(x) = (1/2μ(x)) Σ_{y~x} ω_xy (u(y)-u(x))(v(y)-v(x))`,
//! * integration `∫ f dμ = Σ_x μ(x) f(x)`,
//! * the `H¹(V)` and `H_λ` norms,
//! * hop distance, induced connectivity and vertex boundaries.

use std::collections::{HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::field::VertexField;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    pub id: String,
    pub mu: f64,
    pub a: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: String,
    pub v: String,
    pub w: f64,
}

/// Connected finite graph with vertex measure, edge weights and potential.
///
/// Immutable after construction.
#[derive(Debug, Clone)]
pub struct WeightedGraph {
    ids: Vec<String>,
    index: HashMap<String, usize>,
    mu: Vec<f64>,
    potential: Vec<f64>,
    edges: Vec<(usize, usize, f64)>,
    adjacency: Vec<Vec<(usize, f64)>>,
    mu_min: f64,
}

impl WeightedGraph {
    pub fn new(vertices: Vec<Vertex>, edges: Vec<Edge>) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::InvalidGraph("graph has no vertices".into()));
        }
        let mut ids = Vec::with_capacity(vertices.len());
        let mut index = HashMap::with_capacity(vertices.len());
        let mut mu = Vec::with_capacity(vertices.len());
        let mut potential = Vec::with_capacity(vertices.len());
        for v in vertices {
            if !(v.mu.is_finite() && v.mu > 0.0) {
                return Err(Error::InvalidGraph(format!(
                    "vertex `{}` has nonpositive measure {}",
                    v.id, v.mu
                )));
            }
            if !(v.a.is_finite() && v.a >= 0.0) {
                return Err(Error::InvalidGraph(format!(
                    "vertex `{}` has negative potential {}",
                    v.id, v.a
                )));
            }
            if index.insert(v.id.clone(), ids.len()).is_some() {
                return Err(Error::InvalidGraph(format!("duplicate vertex id `{}`", v.id)));
            }
            ids.push(v.id);
            mu.push(v.mu);
            potential.push(v.a);
        }

        let n = ids.len();
        let mut seen = HashSet::new();
        let mut edge_list = Vec::with_capacity(edges.len());
        let mut adjacency = vec![Vec::new(); n];
        for e in edges {
            let x = *index.get(&e.u).ok_or_else(|| Error::UnknownVertex(e.u.clone()))?;
            let y = *index.get(&e.v).ok_or_else(|| Error::UnknownVertex(e.v.clone()))?;
            if x == y {
                return Err(Error::InvalidGraph(format!("self-loop at `{}`", e.u)));
            }
            if !(e.w.is_finite() && e.w > 0.0) {
                return Err(Error::InvalidGraph(format!(
                    "edge `{}`-`{}` has nonpositive weight {}",
                    e.u, e.v, e.w
                )));
            }
            if !seen.insert((x.min(y), x.max(y))) {
                return Err(Error::InvalidGraph(format!(
                    "duplicate edge `{}`-`{}`",
                    e.u, e.v
                )));
            }
            edge_list.push((x, y, e.w));
            adjacency[x].push((y, e.w));
            adjacency[y].push((x, e.w));
        }

        let mu_min = mu.iter().copied().fold(f64::INFINITY, f64::min);
        let graph = WeightedGraph {
            ids,
            index,
            mu,
            potential,
            edges: edge_list,
            adjacency,
            mu_min,
        };
        let all: Vec<usize> = (0..n).collect();
        if !graph.is_connected_indices(&all) {
            return Err(Error::Disconnected);
        }
        Ok(graph)
    }

    /// Same topology and measure, different potential.
    pub fn with_potential(&self, a: Vec<f64>) -> Result<Self> {
        check_len(self.len(), a.len())?;
        if let Some((i, v)) = a.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidGraph(format!(
                "vertex `{}` has negative potential {}",
                self.ids[i], v
            )));
        }
        let mut g = self.clone();
        g.potential = a;
        Ok(g)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn id(&self, x: usize) -> &str {
        &self.ids[x]
    }

    pub fn index_of(&self, id: &str) -> Result<usize> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownVertex(id.to_string()))
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn mu_min(&self) -> f64 {
        self.mu_min
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    /// Edges as `(x, y, ω_xy)` with `x`, `y` vertex indices, in input order.
    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn neighbors(&self, x: usize) -> &[(usize, f64)] {
        &self.adjacency[x]
    }

    /// `deg(x) = Σ_{y~x} ω_xy`. Diagnostic only.
    pub fn degree(&self, x: usize) -> f64 {
        self.adjacency[x].iter().map(|&(_, w)| w).sum()
    }

    pub fn vertices(&self) -> Vec<Vertex> {
        (0..self.len())
            .map(|x| Vertex {
                id: self.ids[x].clone(),
                mu: self.mu[x],
                a: self.potential[x],
            })
            .collect()
    }

    pub fn edge_specs(&self) -> Vec<Edge> {
        self.edges
            .iter()
            .map(|&(x, y, w)| Edge {
                u: self.ids[x].clone(),
                v: self.ids[y].clone(),
                w,
            })
            .collect()
    }

    pub fn check_field(&self, u: &VertexField) -> Result<()> {
        check_len(self.len(), u.len())
    }

    pub fn laplacian(&self, u: &VertexField) -> Result<VertexField> {
        self.check_field(u)?;
        Ok(VertexField::new(
            (0..self.len()).map(|x| self.laplacian_at(u.values(), x)).collect(),
        ))
    }

    pub(crate) fn laplacian_at(&self, u: &[f64], x: usize) -> f64 {
        let s: f64 = self.adjacency[x]
            .iter()
            .map(|&(y, w)| w * (u[y] - u[x]))
            .sum();
        s / self.mu[x]
    }

    pub fn gamma(&self, u: &VertexField, v: &VertexField) -> Result<VertexField> {
        self.check_field(u)?;
        self.check_field(v)?;
        Ok(VertexField::new(
            (0..self.len())
                .map(|x| self.gamma_at(u.values(), v.values(), x))
                .collect(),
        ))
    }

    pub(crate) fn gamma_at(&self, u: &[f64], v: &[f64], x: usize) -> f64 {
        let s: f64 = self.adjacency[x]
            .iter()
            .map(|&(y, w)| w * (u[y] - u[x]) * (v[y] - v[x]))
            .sum();
        s / (2.0 * self.mu[x])
    }

    /// `|∇u|(x) = sqrt(Γ(u)(x))`
    pub fn gradient_length(&self, u: &VertexField) -> Result<VertexField> {
        let g = self.gamma(u, u)?;
        Ok(VertexField::new(g.values().iter().map(|v| v.max(0.0).sqrt()).collect()))
    }

    pub fn integrate(&self, f: &VertexField) -> Result<f64> {
        self.check_field(f)?;
        Ok(self.integrate_slice(f.values()))
    }

    pub(crate) fn integrate_slice(&self, f: &[f64]) -> f64 {
        self.mu.iter().zip(f).map(|(m, v)| m * v).sum()
    }

    /// `∫ Γ(u,v) dμ` restricted to the vertices in `over` (all of `V` if `None`).
    pub(crate) fn dirichlet_form(&self, u: &[f64], v: &[f64], over: Option<&[usize]>) -> f64 {
        match over {
            None => (0..self.len())
                .map(|x| self.mu[x] * self.gamma_at(u, v, x))
                .sum(),
            Some(set) => set
                .iter()
                .map(|&x| self.mu[x] * self.gamma_at(u, v, x))
                .sum(),
        }
    }

    pub fn norms(&self, u: &VertexField, lambda: f64) -> Result<NormBundle> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidLambda("nonnegative", lambda));
        }
        self.check_field(u)?;
        let u = u.values();
        let grad = self.dirichlet_form(u, u, None);
        let l2_sq = self.integrate_slice(&u.iter().map(|v| v * v).collect::<Vec<_>>());
        let potential_sq: f64 = (0..self.len())
            .map(|x| self.mu[x] * self.potential[x] * u[x] * u[x])
            .sum();
        Ok(NormBundle {
            gradient_sq: grad,
            l2_sq,
            h1_sq: grad + l2_sq,
            h_lambda_sq: grad + lambda * potential_sq + l2_sq,
            linf: u.iter().fold(0.0_f64, |m, v| m.max(v.abs())),
        })
    }

    /// Vertices outside `interior` adjacent to it.
    pub fn boundary(&self, interior: &[&str]) -> Result<SubDomain> {
        let idx = interior
            .iter()
            .map(|id| self.index_of(id))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.boundary_of(&idx))
    }

    pub fn boundary_of(&self, interior: &[usize]) -> SubDomain {
        let mut inside = vec![false; self.len()];
        for &x in interior {
            inside[x] = true;
        }
        let mut on_boundary = vec![false; self.len()];
        for x in (0..self.len()).filter(|&x| inside[x]) {
            for &(y, _) in &self.adjacency[x] {
                if !inside[y] {
                    on_boundary[y] = true;
                }
            }
        }
        let interior: Vec<usize> = (0..self.len()).filter(|&x| inside[x]).collect();
        let boundary: Vec<usize> = (0..self.len()).filter(|&x| on_boundary[x]).collect();
        let closure: Vec<usize> = (0..self.len())
            .filter(|&x| inside[x] || on_boundary[x])
            .collect();
        SubDomain {
            interior,
            boundary,
            closure,
            inside,
        }
    }

    /// Hop distance.
    pub fn distance(&self, x: &str, y: &str) -> Result<usize> {
        let (x, y) = (self.index_of(x)?, self.index_of(y)?);
        let d = self.hop_distances(x);
        d[y].ok_or(Error::Disconnected)
    }

    pub fn hop_distances(&self, from: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.len()];
        dist[from] = Some(0);
        let mut queue = VecDeque::from([from]);
        while let Some(x) = queue.pop_front() {
            let dx = dist[x].unwrap();
            for &(y, _) in &self.adjacency[x] {
                if dist[y].is_none() {
                    dist[y] = Some(dx + 1);
                    queue.push_back(y);
                }
            }
        }
        dist
    }

    /// Connectivity of the subgraph induced on `set`.
    pub fn is_connected(&self, set: &[&str]) -> Result<bool> {
        let idx = set
            .iter()
            .map(|id| self.index_of(id))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.is_connected_indices(&idx))
    }

    pub fn is_connected_indices(&self, set: &[usize]) -> bool {
        let Some(&start) = set.first() else {
            return false;
        };
        let mut member = vec![false; self.len()];
        for &x in set {
            member[x] = true;
        }
        let mut seen = vec![false; self.len()];
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        let mut count = 1;
        while let Some(x) = queue.pop_front() {
            for &(y, _) in &self.adjacency[x] {
                if member[y] && !seen[y] {
                    seen[y] = true;
                    count += 1;
                    queue.push_back(y);
                }
            }
        }
        let distinct = member.iter().filter(|&&m| m).count();
        count == distinct
    }

    /// Checks the well hypotheses on this finite instance.
    ///
    /// `d_threshold` is the level `M` of `D_M = {a < M}`; defaults to
    /// `max a + 1`, which makes `D_M = V`.
    pub fn validate_potential(&self, d_threshold: Option<f64>) -> ValidationReport {
        let omega_idx: Vec<usize> = (0..self.len()).filter(|&x| self.potential[x] == 0.0).collect();
        let omega = self.boundary_of(&omega_idx);
        let nonempty = !omega.interior.is_empty();
        let connected = nonempty && self.is_connected_indices(&omega.interior);
        let max_a = self.potential.iter().copied().fold(0.0, f64::max);
        let m = d_threshold.unwrap_or(max_a + 1.0);
        let volume: f64 = (0..self.len())
            .filter(|&x| self.potential[x] < m)
            .map(|x| self.mu[x])
            .sum();
        let mut warnings = Vec::new();
        if omega.interior.len() == 1 {
            warnings.push(
                "well has a single vertex: no sign-changing Dirichlet solution exists".to_string(),
            );
        }
        ValidationReport {
            well: omega.interior.iter().map(|&x| self.ids[x].clone()).collect(),
            well_boundary: omega.boundary.iter().map(|&x| self.ids[x].clone()).collect(),
            well_nonempty: nonempty,
            well_connected: connected,
            a1_pass: nonempty && connected,
            d_threshold: m,
            d_volume: volume,
            a2_pass: volume.is_finite(),
            warnings,
            omega,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormBundle {
    /// `∫ |∇u|² dμ`
    pub gradient_sq: f64,
    /// `‖u‖₂²`
    pub l2_sq: f64,
    pub h1_sq: f64,
    pub h_lambda_sq: f64,
    pub linf: f64,
}

impl NormBundle {
    pub fn h1(&self) -> f64 {
        self.h1_sq.sqrt()
    }

    pub fn h_lambda(&self) -> f64 {
        self.h_lambda_sq.sqrt()
    }

    pub fn l2(&self) -> f64 {
        self.l2_sq.sqrt()
    }
}

/// A vertex set `D` together with its vertex boundary `∂D`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubDomain {
    interior: Vec<usize>,
    boundary: Vec<usize>,
    closure: Vec<usize>,
    inside: Vec<bool>,
}

impl SubDomain {
    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    /// `D ∪ ∂D`
    pub fn closure(&self) -> &[usize] {
        &self.closure
    }

    pub fn contains(&self, x: usize) -> bool {
        self.inside[x]
    }

    pub fn interior_ids(&self, g: &WeightedGraph) -> Vec<String> {
        self.interior.iter().map(|&x| g.id(x).to_string()).collect()
    }

    pub fn boundary_ids(&self, g: &WeightedGraph) -> Vec<String> {
        self.boundary.iter().map(|&x| g.id(x).to_string()).collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub well: Vec<String>,
    pub well_boundary: Vec<String>,
    pub well_nonempty: bool,
    pub well_connected: bool,
    pub a1_pass: bool,
    pub d_threshold: f64,
    pub d_volume: f64,
    pub a2_pass: bool,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub omega: SubDomain,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.a1_pass && self.a2_pass
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::E;

    #[test]
    fn laplacian_on_one_edge() {
        let g = k2();
        let lap = g.laplacian(&VertexField::new(vec![0.0, 1.0])).unwrap();
        assert_eq!(lap.values(), &[1.0, -1.0]);
        let lap = g.laplacian(&VertexField::new(vec![E, -E])).unwrap();
        assert_relative_eq!(lap[0], -2.0 * E);
        assert_relative_eq!(lap[1], 2.0 * E);
    }

    #[test]
    fn laplacian_of_constant_vanishes() {
        let g = p6_well();
        let lap = g.laplacian(&VertexField::constant(6, 3.7)).unwrap();
        assert!(lap.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let g = k2();
        let err = g.laplacian(&VertexField::zeros(3)).unwrap_err();
        assert_eq!(err, Error::DimensionMismatch { expected: 2, got: 3 });
        assert!(g.gamma(&VertexField::zeros(2), &VertexField::zeros(1)).is_err());
        assert!(g.integrate(&VertexField::zeros(5)).is_err());
    }

    #[test]
    fn gamma_examples() {
        let g = k2();
        let u = VertexField::new(vec![0.0, 1.0]);
        assert_eq!(g.gamma(&u, &u).unwrap().values(), &[0.5, 0.5]);
        let v = VertexField::new(vec![1.0, 0.0]);
        assert_eq!(g.gamma(&u, &v).unwrap().values(), &[-0.5, -0.5]);
        let c = VertexField::constant(2, 2.0);
        assert_eq!(g.gamma(&u, &c).unwrap().values(), &[0.0, 0.0]);
        assert_eq!(g.gradient_length(&u).unwrap().values(), &[0.5f64.sqrt(), 0.5f64.sqrt()]);
    }

    #[test]
    fn integrate_examples() {
        let g = WeightedGraph::new(
            vec![vertex("a", 1.0, 0.0), vertex("b", 2.0, 0.0)],
            vec![edge("a", "b", 1.0)],
        )
        .unwrap();
        assert_eq!(g.integrate(&VertexField::new(vec![3.0, 4.0])).unwrap(), 11.0);
        assert_eq!(g.integrate(&VertexField::zeros(2)).unwrap(), 0.0);
        let k = k2();
        let u = VertexField::new(vec![0.0, 1.0]);
        assert_eq!(k.integrate(&k.gamma(&u, &u).unwrap()).unwrap(), 1.0);
    }

    #[test]
    fn norm_examples() {
        let g = k2();
        let n = g.norms(&VertexField::constant(2, 1.0), 5.0).unwrap();
        assert_eq!((n.h1_sq, n.h_lambda_sq, n.l2_sq, n.linf), (2.0, 2.0, 2.0, 1.0));
        let n = g.norms(&VertexField::new(vec![E, -E]), 1.0).unwrap();
        assert_relative_eq!(n.h1_sq, 6.0 * E * E, max_relative = 1e-15);

        let p2 = WeightedGraph::new(
            vec![vertex("v1", 1.0, 1.0), vertex("v2", 1.0, 0.0)],
            vec![edge("v1", "v2", 1.0)],
        )
        .unwrap();
        let n = p2.norms(&VertexField::constant(2, 1.0), 3.0).unwrap();
        assert_eq!(n.h_lambda_sq, 5.0);
        assert!(g.norms(&VertexField::zeros(2), -1.0).is_err());
    }

    #[test]
    fn boundary_examples() {
        let g = path(&[1.0; 6]);
        let d = g.boundary(&["v3", "v4"]).unwrap();
        assert_eq!(d.boundary_ids(&g), vec!["v2", "v5"]);
        assert_eq!(d.closure(), &[1, 2, 3, 4]);
        let all: Vec<&str> = g.ids().iter().map(|s| s.as_str()).collect();
        assert!(g.boundary(&all).unwrap().boundary().is_empty());
        let s = star(4);
        assert_eq!(
            s.boundary(&["c"]).unwrap().boundary_ids(&s),
            vec!["l1", "l2", "l3", "l4"]
        );
        assert!(matches!(g.boundary(&["nope"]), Err(Error::UnknownVertex(_))));
    }

    #[test]
    fn distance_and_connectivity() {
        let g = path(&[1.0; 6]);
        assert_eq!(g.distance("v1", "v6").unwrap(), 5);
        assert_eq!(g.distance("v4", "v4").unwrap(), 0);
        assert!(g.is_connected(&["v3", "v4"]).unwrap());
        assert!(!g.is_connected(&["v2", "v5"]).unwrap());
        assert!(g.distance("v1", "zz").is_err());
        assert_eq!(g.degree(0), 1.0);
        assert_eq!(g.degree(2), 2.0);
    }

    #[test]
    fn validate_potential_examples() {
        let r = p6_well().validate_potential(None);
        assert_eq!(r.well, vec!["v3", "v4"]);
        assert!(r.well_connected && r.passed());
        assert_eq!(r.d_volume, 6.0);

        let r = path(&[1.0; 6]).validate_potential(None);
        assert!(!r.well_nonempty && !r.a1_pass);

        let r = path(&[1.0, 0.0, 1.0, 0.0, 1.0, 1.0]).validate_potential(None);
        assert_eq!(r.well, vec!["v2", "v4"]);
        assert!(!r.well_connected && !r.passed());

        let r = path(&[1.0, 0.0, 1.0]).validate_potential(Some(0.5));
        assert_eq!(r.warnings.len(), 1);
        assert_eq!(r.d_volume, 1.0);
    }

    #[test]
    fn construction_rejects_bad_input() {
        let bad_mu = WeightedGraph::new(vec![vertex("a", 0.0, 0.0)], vec![]);
        assert!(matches!(bad_mu, Err(Error::InvalidGraph(_))));
        let bad_a = WeightedGraph::new(vec![vertex("a", 1.0, -1.0)], vec![]);
        assert!(matches!(bad_a, Err(Error::InvalidGraph(_))));
        let dup = WeightedGraph::new(vec![vertex("a", 1.0, 0.0), vertex("a", 1.0, 0.0)], vec![]);
        assert!(matches!(dup, Err(Error::InvalidGraph(_))));
        let vs = || vec![vertex("a", 1.0, 0.0), vertex("b", 1.0, 0.0)];
        let loop_ = WeightedGraph::new(vs(), vec![edge("a", "a", 1.0), edge("a", "b", 1.0)]);
        assert!(matches!(loop_, Err(Error::InvalidGraph(_))));
        let asym = WeightedGraph::new(vs(), vec![edge("a", "b", 1.0), edge("b", "a", 2.0)]);
        assert!(matches!(asym, Err(Error::InvalidGraph(_))));
        let neg_w = WeightedGraph::new(vs(), vec![edge("a", "b", -1.0)]);
        assert!(matches!(neg_w, Err(Error::InvalidGraph(_))));
        assert_eq!(WeightedGraph::new(vs(), vec![]).unwrap_err(), Error::Disconnected);
        assert!(matches!(
            WeightedGraph::new(vs(), vec![edge("a", "c", 1.0)]),
            Err(Error::UnknownVertex(_))
        ));
    }
}
