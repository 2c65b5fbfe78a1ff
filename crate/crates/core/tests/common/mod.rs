#![allow(dead_code)]

use lognodal::lab::{generate_graph, Topology};
use lognodal::{Edge, Vertex, VertexField, WeightedGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn k2() -> WeightedGraph {
    generate_graph(Topology::Path, 2, "v1..v2", 1.0, 1.0, 1.0).unwrap()
}

pub fn p6() -> WeightedGraph {
    generate_graph(Topology::Path, 6, "v3..v4", 1.0, 1.0, 1.0).unwrap()
}

pub fn grid4() -> WeightedGraph {
    generate_graph(Topology::Grid, 16, "v6,v7,v10,v11", 1.0, 1.0, 1.0).unwrap()
}

pub fn graph(vertices: &[(&str, f64, f64)], edges: &[(&str, &str, f64)]) -> WeightedGraph {
    WeightedGraph::new(
        vertices
            .iter()
            .map(|&(id, mu, a)| Vertex { id: id.into(), mu, a })
            .collect(),
        edges
            .iter()
            .map(|&(u, v, w)| Edge { u: u.into(), v: v.into(), w })
            .collect(),
    )
    .unwrap()
}

/// Random connected graph: a random spanning tree plus extra edges, random
/// measures, weights and a potential vanishing on a connected set.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize) -> WeightedGraph {
    let vertices: Vec<Vertex> = (0..n)
        .map(|i| Vertex {
            id: format!("x{i}"),
            mu: rng.random_range(0.3..3.0),
            a: 0.0,
        })
        .collect();
    let mut pairs: Vec<(usize, usize)> = (1..n).map(|i| (rng.random_range(0..i), i)).collect();
    let extra = rng.random_range(0..=n);
    for _ in 0..extra {
        let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
        let key = (a.min(b), a.max(b));
        if a != b && !pairs.iter().any(|&(x, y)| (x.min(y), x.max(y)) == key) {
            pairs.push(key);
        }
    }
    let edges: Vec<Edge> = pairs
        .iter()
        .map(|&(a, b)| Edge {
            u: format!("x{a}"),
            v: format!("x{b}"),
            w: rng.random_range(0.2..3.0),
        })
        .collect();
    let g = WeightedGraph::new(vertices, edges).unwrap();
    // The well is a breadth-first ball around vertex 0 in the spanning tree.
    let well_size = rng.random_range(1..=n.max(2) / 2 + 1).min(n);
    let dist = g.hop_distances(0);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&x| (dist[x].unwrap_or(usize::MAX), x));
    let mut a = vec![0.0; n];
    for &x in &order[well_size..] {
        a[x] = rng.random_range(0.1..3.0);
    }
    g.with_potential(a).unwrap()
}

/// Entries uniform in `[-amp, amp]`, a few set to exactly zero.
pub fn random_field(rng: &mut ChaCha8Rng, n: usize, amp: f64) -> VertexField {
    VertexField::new(
        (0..n)
            .map(|_| {
                if rng.random_bool(0.15) {
                    0.0
                } else {
                    rng.random_range(-amp..amp)
                }
            })
            .collect(),
    )
}

/// Entries with magnitude in `[lo, hi]` and random sign.
pub fn signed_field(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> VertexField {
    VertexField::new(
        (0..n)
            .map(|_| {
                let m = rng.random_range(lo..hi);
                if rng.random_bool(0.5) {
                    m
                } else {
                    -m
                }
            })
            .collect(),
    )
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}
