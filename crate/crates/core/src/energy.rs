//! Energy functionals, directional derivatives and Euler–Lagrange residuals.
//!
//! Two problems share one code path:
//!
//! * the full problem `-Δu + λa(x)u = u log u²` on `V`, with
//!   `J_λ(u) = ½∫(|∇u|² + (λa+1)u²) dμ - ½∫u² log u² dμ`;
//! * the Dirichlet problem on the well `Ω = {a = 0}`, with
//!   `J_Ω(u) = ½[∫_{Ω∪∂Ω}|∇u|² dμ + ∫_Ω u² dμ] - ½∫_Ω u² log u² dμ`
//!   over fields vanishing outside `Ω`.
//!
//! Throughout, `0·log 0 = 0`.

use serde::Serialize;

use crate::error::{check_len, Error, Result};
use crate::field::VertexField;
use crate::graph::{SubDomain, WeightedGraph};

#[derive(Debug, Clone, PartialEq)]
pub enum Mode {
    Full { lambda: f64 },
    Dirichlet { omega: SubDomain },
}

/// A graph plus the energy in force on it.
#[derive(Debug, Clone)]
pub struct ProblemInstance<'g> {
    graph: &'g WeightedGraph,
    mode: Mode,
    free: Vec<usize>,
}

/// `u² log u²`, zero at `u = 0`.
#[inline]
pub(crate) fn sq_log_sq(u: f64) -> f64 {
    if u == 0.0 {
        0.0
    } else {
        2.0 * u * u * u.abs().ln()
    }
}

/// `u v log u²`, zero at `u = 0`.
#[inline]
pub(crate) fn cross_log_sq(u: f64, v: f64) -> f64 {
    if u == 0.0 {
        0.0
    } else {
        2.0 * u * v * u.abs().ln()
    }
}

impl<'g> ProblemInstance<'g> {
    pub fn full(graph: &'g WeightedGraph, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidLambda("positive", lambda));
        }
        Ok(ProblemInstance {
            graph,
            mode: Mode::Full { lambda },
            free: (0..graph.len()).collect(),
        })
    }

    pub fn dirichlet(graph: &'g WeightedGraph, omega: SubDomain) -> Result<Self> {
        if omega.interior().is_empty() {
            return Err(Error::InvalidDomain("well is empty".into()));
        }
        if !graph.is_connected_indices(omega.interior()) {
            return Err(Error::InvalidDomain("well is not connected".into()));
        }
        let free = omega.interior().to_vec();
        Ok(ProblemInstance {
            graph,
            mode: Mode::Dirichlet { omega },
            free,
        })
    }

    /// Dirichlet problem on the zero set of the graph's potential.
    pub fn dirichlet_on_well(graph: &'g WeightedGraph) -> Result<Self> {
        let report = graph.validate_potential(None);
        Self::dirichlet(graph, report.omega)
    }

    pub fn graph(&self) -> &'g WeightedGraph {
        self.graph
    }

    pub fn mode(&self) -> &Mode {
        &self.mode
    }

    pub fn lambda(&self) -> Option<f64> {
        match self.mode {
            Mode::Full { lambda } => Some(lambda),
            Mode::Dirichlet { .. } => None,
        }
    }

    pub fn is_dirichlet(&self) -> bool {
        matches!(self.mode, Mode::Dirichlet { .. })
    }

    /// Vertices where admissible fields may be nonzero.
    pub fn free_vertices(&self) -> &[usize] {
        &self.free
    }

    pub fn is_free(&self, x: usize) -> bool {
        match &self.mode {
            Mode::Full { .. } => true,
            Mode::Dirichlet { omega } => omega.contains(x),
        }
    }

    /// `λa(x)` in full mode, `0` in Dirichlet mode.
    pub(crate) fn potential_weight(&self, x: usize) -> f64 {
        match self.mode {
            Mode::Full { lambda } => lambda * self.graph.potential()[x],
            Mode::Dirichlet { .. } => 0.0,
        }
    }

    fn gradient_domain(&self) -> Option<&[usize]> {
        match &self.mode {
            Mode::Full { .. } => None,
            Mode::Dirichlet { omega } => Some(omega.closure()),
        }
    }

    pub fn check_admissible(&self, u: &VertexField) -> Result<()> {
        check_len(self.graph.len(), u.len())?;
        if !u.is_finite() {
            return Err(Error::InvalidOption("field has non-finite entries".into()));
        }
        if let Mode::Dirichlet { omega } = &self.mode {
            if let Some(x) = (0..u.len()).find(|&x| !omega.contains(x) && u[x] != 0.0) {
                return Err(Error::NotAdmissible {
                    vertex: self.graph.id(x).to_string(),
                    value: u[x],
                });
            }
        }
        Ok(())
    }

    /// Zero the field outside the well (identity in full mode).
    pub fn project_admissible(&self, u: &VertexField) -> VertexField {
        let mut out = u.clone();
        for x in 0..out.len() {
            if !self.is_free(x) {
                out[x] = 0.0;
            }
        }
        out
    }

    /// `‖u‖²` of the energy space (`H_λ` or `H₀¹(Ω)`).
    pub(crate) fn space_norm_sq(&self, u: &[f64]) -> f64 {
        let g = self.graph;
        let grad = g.dirichlet_form(u, u, self.gradient_domain());
        let mass: f64 = self
            .free
            .iter()
            .map(|&x| g.mu()[x] * (self.potential_weight(x) + 1.0) * u[x] * u[x])
            .sum();
        grad + mass
    }

    /// `‖u‖₂²` over the free vertices.
    pub(crate) fn l2_sq(&self, u: &[f64]) -> f64 {
        self.free.iter().map(|&x| self.graph.mu()[x] * u[x] * u[x]).sum()
    }

    /// `∫ u² log u² dμ` over the free vertices.
    pub(crate) fn log_integral(&self, u: &[f64]) -> f64 {
        self.free
            .iter()
            .map(|&x| self.graph.mu()[x] * sq_log_sq(u[x]))
            .sum()
    }

    pub(crate) fn energy_unchecked(&self, u: &[f64]) -> f64 {
        0.5 * self.space_norm_sq(u) - 0.5 * self.log_integral(u)
    }

    pub(crate) fn dir_deriv_unchecked(&self, u: &[f64], v: &[f64]) -> f64 {
        let g = self.graph;
        let grad = g.dirichlet_form(u, v, self.gradient_domain());
        let rest: f64 = self
            .free
            .iter()
            .map(|&x| g.mu()[x] * (self.potential_weight(x) * u[x] * v[x] - cross_log_sq(u[x], v[x])))
            .sum();
        grad + rest
    }

    pub(crate) fn residual_unchecked(&self, u: &[f64]) -> Vec<f64> {
        let g = self.graph;
        let mut r = vec![0.0; u.len()];
        for &x in &self.free {
            r[x] = -g.laplacian_at(u, x) + self.potential_weight(x) * u[x] - cross_log_sq(u[x], 1.0);
        }
        r
    }

    pub(crate) fn coupling_unchecked(&self, u: &[f64]) -> f64 {
        let g = self.graph;
        let term = |x: usize| -> f64 {
            let (px, nx) = (u[x].max(0.0), u[x].min(0.0));
            g.neighbors(x)
                .iter()
                .map(|&(y, w)| w * (px * u[y].min(0.0) + nx * u[y].max(0.0)))
                .sum::<f64>()
        };
        match self.gradient_domain() {
            None => (0..g.len()).map(term).sum(),
            Some(set) => set.iter().map(|&x| term(x)).sum(),
        }
    }

    /// `J_λ(u)` or `J_Ω(u)`.
    pub fn energy(&self, u: &VertexField) -> Result<f64> {
        self.check_admissible(u)?;
        Ok(self.energy_unchecked(u.values()))
    }

    /// `J'(u)·v`.
    pub fn dir_deriv(&self, u: &VertexField, v: &VertexField) -> Result<f64> {
        self.check_admissible(u)?;
        self.check_admissible(v)?;
        Ok(self.dir_deriv_unchecked(u.values(), v.values()))
    }

    /// Pointwise residual `-Δu + λau - u log u²` (zero off the well in
    /// Dirichlet mode). Satisfies `J'(u)·v = ∫ r v dμ`.
    pub fn residual(&self, u: &VertexField) -> Result<VertexField> {
        self.check_admissible(u)?;
        Ok(VertexField::new(self.residual_unchecked(u.values())))
    }

    /// `K(u) = Σ_x Σ_{y~x} ω_xy [u⁺(x)u⁻(y) + u⁻(x)u⁺(y)]`, summed over
    /// `Ω ∪ ∂Ω` in Dirichlet mode. Never positive.
    pub fn coupling_k(&self, u: &VertexField) -> Result<f64> {
        self.check_admissible(u)?;
        Ok(self.coupling_unchecked(u.values()))
    }

    /// `‖u‖²` in the energy space, with `‖u‖₂²` and `∫u² log u²` over the
    /// free vertices.
    pub fn split_norms(&self, u: &VertexField) -> Result<(f64, f64, f64)> {
        self.check_admissible(u)?;
        let u = u.values();
        Ok((self.space_norm_sq(u), self.l2_sq(u), self.log_integral(u)))
    }

    /// Evaluates both sides of the positive/negative-part decompositions.
    pub fn identity_suite(&self, u: &VertexField) -> Result<IdentityReport> {
        self.check_admissible(u)?;
        let g = self.graph;
        let pos = u.positive_part();
        let neg = u.negative_part();
        let (uv, pv, nv) = (u.values(), pos.values(), neg.values());
        let k = self.coupling_unchecked(uv);
        let dom = self.gradient_domain();
        let mut report = IdentityReport::default();

        report.push(
            "gradient_split",
            g.dirichlet_form(uv, uv, dom),
            g.dirichlet_form(pv, pv, dom) + g.dirichlet_form(nv, nv, dom) - k,
        );
        report.push(
            "energy_split",
            self.energy_unchecked(uv),
            self.energy_unchecked(pv) + self.energy_unchecked(nv) - 0.5 * k,
        );
        report.push(
            "derivative_split_positive",
            self.dir_deriv_unchecked(uv, pv),
            self.dir_deriv_unchecked(pv, pv) - 0.5 * k,
        );
        report.push(
            "derivative_split_negative",
            self.dir_deriv_unchecked(uv, nv),
            self.dir_deriv_unchecked(nv, nv) - 0.5 * k,
        );
        report.push(
            "nehari_identity",
            self.energy_unchecked(uv) - 0.5 * self.dir_deriv_unchecked(uv, uv),
            0.5 * self.l2_sq(uv),
        );
        for x in 0..g.len() {
            let delta = VertexField::delta(g.len(), x);
            report.push(
                &format!("integration_by_parts[{}]", g.id(x)),
                g.dirichlet_form(uv, delta.values(), None),
                -g.mu()[x] * g.laplacian_at(uv, x),
            );
        }
        Ok(report)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityEntry {
    pub name: String,
    pub left: f64,
    pub right: f64,
    pub abs_discrepancy: f64,
    /// Discrepancy relative to `max(|left|, |right|, 1)`.
    pub rel_discrepancy: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct IdentityReport {
    pub entries: Vec<IdentityEntry>,
}

impl IdentityReport {
    fn push(&mut self, name: &str, left: f64, right: f64) {
        let abs = (left - right).abs();
        let scale = left.abs().max(right.abs()).max(1.0);
        self.entries.push(IdentityEntry {
            name: name.to_string(),
            left,
            right,
            abs_discrepancy: abs,
            rel_discrepancy: abs / scale,
        });
    }

    pub fn max_rel_discrepancy(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.rel_discrepancy)
            .fold(0.0, f64::max)
    }

    pub fn get(&self, name: &str) -> Option<&IdentityEntry> {
        self.entries.iter().find(|e| e.name == name)
    }
}
