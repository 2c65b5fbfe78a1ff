//! Least-energy levels by multi-start projected descent.
//!
//! Each start keeps its iterate on the Nehari set (ray projection for the
//! ground level, pair projection for the nodal level) and descends along
//! the Sobolev gradient, i.e. the residual preconditioned by the Gram
//! matrix of the energy norm. Once the residual is small a Newton polish on
//! the Euler-Lagrange system finishes the job; it uses a pseudo-inverse so
//! that critical points with a singular Hessian are still reached.

use std::collections::VecDeque;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::energy::{Mode, ProblemInstance};
use crate::error::{Error, Result};
use crate::field::VertexField;
use crate::io::FieldFile;
use crate::nehari::{project_pair_from, project_ray, PairOptions};

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub starts: usize,
    pub seed: u64,
    pub tol_residual: f64,
    pub max_outer_iters: usize,
    pub initial_step: f64,
    /// Sufficient-decrease constant of the Armijo test.
    pub armijo: f64,
    pub shrink: f64,
    pub pair: PairOptions,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            starts: 64,
            seed: 0,
            tol_residual: 1e-10,
            max_outer_iters: 5000,
            initial_step: 1.0,
            armijo: 1e-4,
            shrink: 0.5,
            pair: PairOptions::default(),
        }
    }
}

impl SolveOptions {
    fn validate(&self) -> Result<()> {
        if self.starts == 0 {
            return Err(Error::InvalidOption("starts must be at least 1".into()));
        }
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.tol_residual) || !positive(self.initial_step) {
            return Err(Error::InvalidOption("tolerance and step must be positive".into()));
        }
        if !(self.armijo > 0.0 && self.armijo < 1.0 && self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::InvalidOption("armijo and shrink factors must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LevelKind {
    Ground,
    Nodal,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignPattern {
    pub positive: Vec<String>,
    pub negative: Vec<String>,
    pub zero: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub kind: LevelKind,
    pub mode: &'static str,
    pub lambda: Option<f64>,
    pub level: f64,
    pub residual_inf: f64,
    pub residual_scale: f64,
    /// `(J'(u)·u⁺, J'(u)·u⁻)`
    pub membership_residuals: (f64, f64),
    pub coupling_k: f64,
    pub degenerate_coupling: bool,
    pub starts_attempted: usize,
    pub starts_converged: usize,
    /// Final level of every start in start order; `null` for starts that
    /// never produced a feasible iterate.
    pub level_histogram: Vec<Option<f64>>,
    pub sign_pattern: SignPattern,
    pub seed: u64,
    pub minimizer: FieldFile,
    #[serde(skip)]
    pub field: VertexField,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub level: f64,
    pub residual_inf: f64,
    pub residual_scale: f64,
    pub membership_residuals: (f64, f64),
    pub membership_scale: f64,
    /// `J(u) - ½‖u‖₂²`, zero on the Nehari sets.
    pub nehari_gap: f64,
    pub coupling_k: f64,
    pub is_solution: bool,
    pub companion_ground: Option<f64>,
    pub margin_m_minus_2c: Option<f64>,
    pub strict_ordering: Option<bool>,
}

/// Scale for residual tolerances: the largest term of the equation.
fn residual_scale(inst: &ProblemInstance<'_>, u: &[f64]) -> f64 {
    let g = inst.graph();
    inst.free_vertices()
        .iter()
        .map(|&x| {
            let flux: f64 = g.neighbors(x).iter().map(|&(y, w)| w * (u[y] - u[x]).abs()).sum();
            flux / g.mu()[x] + inst.potential_weight(x) * u[x].abs() + crate::energy::cross_log_sq(u[x], 1.0).abs()
        })
        .fold(1.0, f64::max)
}

fn residual_inf(inst: &ProblemInstance<'_>, u: &[f64]) -> f64 {
    inst.residual_unchecked(u).iter().fold(0.0_f64, |m, r| m.max(r.abs()))
}

/// Reports how well `u` solves the equation and, if `companion_ground` is
/// the ground level, whether `J(u) > 2c`.
pub fn verify(inst: &ProblemInstance<'_>, u: &VertexField, companion_ground: Option<f64>) -> Result<VerificationReport> {
    inst.check_admissible(u)?;
    let v = u.values();
    let level = inst.energy_unchecked(v);
    let res = residual_inf(inst, v);
    let scale = residual_scale(inst, v);
    let pos = u.positive_part();
    let neg = u.negative_part();
    let membership = (
        inst.dir_deriv_unchecked(v, pos.values()),
        inst.dir_deriv_unchecked(v, neg.values()),
    );
    let membership_scale = inst.space_norm_sq(v).max(1.0);
    let tol = 1e-10;
    let is_solution =
        res <= tol * scale && membership.0.abs() <= tol * membership_scale && membership.1.abs() <= tol * membership_scale;
    let margin = companion_ground.map(|c| level - 2.0 * c);
    Ok(VerificationReport {
        level,
        residual_inf: res,
        residual_scale: scale,
        membership_residuals: membership,
        membership_scale,
        nehari_gap: level - 0.5 * inst.l2_sq(v),
        coupling_k: inst.coupling_unchecked(v),
        is_solution,
        companion_ground,
        margin_m_minus_2c: margin,
        strict_ordering: margin.map(|m| m > 0.0),
    })
}

/// Up to this many free vertices, the searches also start from localized
/// seeds (vertex indicators, far-apart indicator pairs). The log
/// nonlinearity makes low-degree vertices attract localized states that
/// spread-out random starts rarely reach.
const LOCALIZED_SEED_LIMIT: usize = 64;

/// Immutable per-instance data shared by all starts.
struct Workspace<'a, 'g> {
    inst: &'a ProblemInstance<'g>,
    kind: LevelKind,
    opts: &'a SolveOptions,
    free: Vec<usize>,
    gram: Cholesky<f64, Dyn>,
}

struct StartOutcome {
    field: VertexField,
    level: f64,
    converged: bool,
}

impl<'a, 'g> Workspace<'a, 'g> {
    fn new(inst: &'a ProblemInstance<'g>, kind: LevelKind, opts: &'a SolveOptions) -> Self {
        let free = inst.free_vertices().to_vec();
        let gram = Cholesky::new(Self::gram_matrix(inst, &free, None)).expect("energy Gram matrix is positive definite");
        Workspace { inst, kind, opts, free, gram }
    }

    /// Gram matrix of the energy norm on the free vertices, optionally
    /// shifted by `-μ(x)·diag_shift[x]` (used for the Hessian).
    fn gram_matrix(inst: &ProblemInstance<'_>, free: &[usize], diag_shift: Option<&[f64]>) -> DMatrix<f64> {
        let g = inst.graph();
        let n = free.len();
        let mut pos = vec![usize::MAX; g.len()];
        for (k, &x) in free.iter().enumerate() {
            pos[x] = k;
        }
        let mut m = DMatrix::zeros(n, n);
        for (k, &x) in free.iter().enumerate() {
            let mut diag = g.mu()[x] * (inst.potential_weight(x) + 1.0);
            if let Some(shift) = diag_shift {
                diag -= g.mu()[x] * shift[k];
            }
            for &(y, w) in g.neighbors(x) {
                diag += w;
                if pos[y] != usize::MAX {
                    m[(k, pos[y])] -= w;
                }
            }
            m[(k, k)] = diag;
        }
        m
    }

    fn weak_residual(&self, u: &[f64]) -> DVector<f64> {
        let r = self.inst.residual_unchecked(u);
        let mu = self.inst.graph().mu();
        DVector::from_iterator(self.free.len(), self.free.iter().map(|&x| mu[x] * r[x]))
    }

    fn energy(&self, u: &VertexField) -> f64 {
        self.inst.energy_unchecked(u.values())
    }

    fn h1_norm(&self, u: &VertexField) -> f64 {
        self.inst.graph().norms(u, 0.0).map(|n| n.h1()).unwrap_or(0.0)
    }

    /// Projects onto the relevant Nehari set, rejecting collapsed iterates.
    fn project(&self, w: &VertexField) -> Option<VertexField> {
        if !w.is_finite() {
            return None;
        }
        let p = match self.kind {
            LevelKind::Ground => w.scaled(project_ray(self.inst, w).ok()?),
            LevelKind::Nodal => {
                let proj = project_pair_from(self.inst, w, (1.0, 1.0), &self.opts.pair).ok()?;
                proj.projected
            }
        };
        if !p.is_finite() {
            return None;
        }
        let collapsed = match self.kind {
            LevelKind::Ground => self.h1_norm(&p) < 1e-14,
            LevelKind::Nodal => {
                self.h1_norm(&p.positive_part()) < 1e-14 || self.h1_norm(&p.negative_part()) < 1e-14
            }
        };
        (!collapsed).then_some(p)
    }

    fn admissible_kind(&self, u: &VertexField) -> bool {
        match self.kind {
            LevelKind::Ground => !u.is_zero(),
            LevelKind::Nodal => u.changes_sign(),
        }
    }

    fn converged(&self, u: &VertexField) -> bool {
        residual_inf(self.inst, u.values()) <= self.opts.tol_residual * residual_scale(self.inst, u.values())
    }

    /// Newton iteration on the Euler-Lagrange system with an SVD
    /// pseudo-inverse of the Hessian. Returns the converged point only.
    fn polish(&self, start: &VertexField) -> Option<VertexField> {
        let mut u = start.clone();
        let mut f = self.weak_residual(u.values());
        for _ in 0..80 {
            if self.converged(&u) {
                return Some(u);
            }
            if self.free.iter().any(|&x| u[x] == 0.0) {
                return None;
            }
            let shift: Vec<f64> = self.free.iter().map(|&x| (u[x] * u[x]).ln() + 3.0).collect();
            let hess = Self::gram_matrix(self.inst, &self.free, Some(&shift));
            let svd = hess.svd(true, true);
            let eps = 1e-14 * svd.singular_values.max();
            let step = svd.solve(&(-&f), eps).ok()?;
            let merit = f.norm();
            let mut alpha = 1.0;
            let mut accepted = false;
            for _ in 0..30 {
                let mut cand = u.clone();
                for (k, &x) in self.free.iter().enumerate() {
                    cand[x] += alpha * step[k];
                }
                let fc = self.weak_residual(cand.values());
                if cand.is_finite() && fc.norm() < merit {
                    u = cand;
                    f = fc;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        self.converged(&u).then_some(u)
    }

    fn run(&self, init: VertexField) -> Option<StartOutcome> {
        let mut u = self.project(&init)?;
        let mut level = self.energy(&u);
        let mut alpha = self.opts.initial_step;
        let mut last_polish = f64::INFINITY;
        let mut recent: VecDeque<f64> = VecDeque::new();

        for _ in 0..self.opts.max_outer_iters {
            let res = residual_inf(self.inst, u.values());
            let scale = residual_scale(self.inst, u.values());
            if res <= self.opts.tol_residual * scale {
                return Some(StartOutcome { field: u, level, converged: true });
            }
            if res <= 1e-2 * scale && res <= 0.1 * last_polish {
                last_polish = res;
                if let Some(p) = self.try_polish(&u, level) {
                    return Some(p);
                }
            }

            let wr = self.weak_residual(u.values());
            let dir = self.gram.solve(&wr);
            let slope = wr.dot(&dir);
            let mut accepted = false;
            let mut a = alpha;
            while a > 1e-14 {
                let mut cand = u.clone();
                for (k, &x) in self.free.iter().enumerate() {
                    cand[x] -= a * dir[k];
                }
                if let Some(p) = self.project(&cand) {
                    let e = self.energy(&p);
                    if e <= level - self.opts.armijo * a * slope {
                        u = p;
                        level = e;
                        accepted = true;
                        break;
                    }
                }
                a *= self.opts.shrink;
            }
            if !accepted {
                break;
            }
            alpha = (a / self.opts.shrink).min(4.0 * self.opts.initial_step);
            recent.push_back(level);
            if recent.len() > 200 {
                let old = recent.pop_front().unwrap_or(level);
                if old - level <= 1e-15 * level.abs().max(1.0) {
                    break;
                }
            }
        }
        if self.converged(&u) {
            return Some(StartOutcome { field: u, level, converged: true });
        }
        if let Some(p) = self.try_polish(&u, level) {
            return Some(p);
        }
        Some(StartOutcome { field: u, level, converged: false })
    }

    fn try_polish(&self, u: &VertexField, level: f64) -> Option<StartOutcome> {
        let p = self.polish(u)?;
        let e = self.energy(&p);
        (self.admissible_kind(&p) && e <= level + 1e-9 * level.abs().max(1.0)).then_some(StartOutcome {
            field: p,
            level: e,
            converged: true,
        })
    }

    /// Initial magnitudes are divided by `1 + λa(x)`; undamped draws put
    /// most of their mass where the potential is large and the projection
    /// scale `exp(O(λ))` overflows.
    fn damping(&self, x: usize) -> f64 {
        1.0 / (1.0 + self.inst.potential_weight(x))
    }

    fn random_init(&self, rng: &mut ChaCha8Rng) -> VertexField {
        let mut u = VertexField::zeros(self.inst.graph().len());
        for &x in &self.free {
            let m: f64 = rng.random_range(0.5..2.5) * self.damping(x);
            u[x] = match self.kind {
                LevelKind::Ground => m,
                LevelKind::Nodal => {
                    if rng.random_bool(0.5) {
                        m
                    } else {
                        -m
                    }
                }
            };
        }
        u
    }

    fn deterministic_inits(&self) -> Vec<VertexField> {
        let n = self.inst.graph().len();
        match self.kind {
            LevelKind::Ground => {
                let mut u = VertexField::zeros(n);
                for &x in &self.free {
                    u[x] = self.damping(x);
                }
                let mut seeds = vec![u];
                if self.free.len() <= LOCALIZED_SEED_LIMIT {
                    seeds.extend(self.free.iter().map(|&x| VertexField::delta(n, x)));
                }
                seeds
            }
            LevelKind::Nodal => {
                let bisection = self.balanced_bisection();
                let cut = self.max_cut_from(&bisection);
                let mut seeds: Vec<VertexField> = [bisection, cut]
                    .into_iter()
                    .map(|mut u| {
                        for &x in &self.free {
                            u[x] *= self.damping(x);
                        }
                        u
                    })
                    .collect();
                if self.free.len() <= LOCALIZED_SEED_LIMIT {
                    seeds.extend(self.far_pairs().into_iter().map(|(x, y)| {
                        let mut u = VertexField::delta(n, x);
                        u[y] = -1.0;
                        u
                    }));
                }
                seeds
            }
        }
    }

    /// For each free vertex `x`, the first free vertex `y` farthest from it;
    /// unordered pairs are listed once.
    fn far_pairs(&self) -> Vec<(usize, usize)> {
        let g = self.inst.graph();
        let mut pairs = Vec::new();
        for &x in &self.free {
            let dist = g.hop_distances(x);
            let far = self
                .free
                .iter()
                .copied()
                .max_by_key(|&y| (dist[y].unwrap_or(0), std::cmp::Reverse(y)));
            if let Some(y) = far.filter(|&y| y != x) {
                let key = (x.min(y), x.max(y));
                if !pairs.contains(&key) {
                    pairs.push(key);
                }
            }
        }
        pairs
    }

    /// `+1` on the first half of a breadth-first order from a peripheral
    /// free vertex, `-1` on the rest.
    fn balanced_bisection(&self) -> VertexField {
        let g = self.inst.graph();
        let bfs = |from: usize| -> Vec<usize> {
            let mut seen = vec![false; g.len()];
            let mut order = vec![from];
            seen[from] = true;
            let mut head = 0;
            while head < order.len() {
                let x = order[head];
                head += 1;
                for &(y, _) in g.neighbors(x) {
                    if !seen[y] && self.inst.is_free(y) {
                        seen[y] = true;
                        order.push(y);
                    }
                }
            }
            order
        };
        let far = *bfs(self.free[0]).last().unwrap_or(&self.free[0]);
        let order = bfs(far);
        let half = order.len().div_ceil(2);
        let mut u = VertexField::zeros(g.len());
        for (k, &x) in order.iter().enumerate() {
            u[x] = if k < half { 1.0 } else { -1.0 };
        }
        u
    }

    /// Greedy single-vertex flips that increase the weight of sign-crossing
    /// edges, i.e. `|K|` for unit magnitudes.
    fn max_cut_from(&self, start: &VertexField) -> VertexField {
        let g = self.inst.graph();
        let mut u = start.clone();
        let mut changed = true;
        while changed {
            changed = false;
            for &x in &self.free {
                let gain: f64 = g
                    .neighbors(x)
                    .iter()
                    .filter(|&&(y, _)| self.inst.is_free(y))
                    .map(|&(y, w)| if u[x] * u[y] > 0.0 { w } else { -w })
                    .sum();
                let same_sign = self.free.iter().filter(|&&y| u[y] * u[x] > 0.0).count();
                if gain > 0.0 && same_sign > 1 {
                    u[x] = -u[x];
                    changed = true;
                }
            }
        }
        u
    }

    fn run_start(&self, index: usize, deterministic: Option<&VertexField>) -> Option<StartOutcome> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.opts.seed);
        rng.set_stream(index as u64);
        if let Some(init) = deterministic {
            if let Some(out) = self.run(init.clone()) {
                return Some(out);
            }
        }
        for _ in 0..4 {
            let init = self.random_init(&mut rng);
            if let Some(out) = self.run(init) {
                return Some(out);
            }
        }
        None
    }
}

fn lexicographic(a: &VertexField, b: &VertexField) -> std::cmp::Ordering {
    a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

fn solve(inst: &ProblemInstance<'_>, kind: LevelKind, opts: &SolveOptions) -> Result<SolveReport> {
    opts.validate()?;
    let ws = Workspace::new(inst, kind, opts);
    let extra = ws.deterministic_inits();
    let total = opts.starts + extra.len();
    let outcomes: Vec<Option<StartOutcome>> = (0..total)
        .into_par_iter()
        .map(|i| ws.run_start(i, i.checked_sub(opts.starts).map(|k| &extra[k])))
        .collect();

    let level_histogram: Vec<Option<f64>> = outcomes.iter().map(|o| o.as_ref().map(|o| o.level)).collect();
    let converged: Vec<&StartOutcome> = outcomes.iter().flatten().filter(|o| o.converged).collect();
    let best = converged
        .iter()
        .map(|o| o.level)
        .reduce(f64::min)
        .ok_or_else(|| {
            Error::NonConvergence(format!(
                "none of {total} starts reached residual tolerance {:e}",
                opts.tol_residual
            ))
        })?;
    let tie = 1e-12 * best.abs().max(1.0);
    let field = converged
        .iter()
        .filter(|o| o.level <= best + tie)
        .map(|o| o.field.sign_normalized())
        .min_by(lexicographic)
        .expect("at least one converged start");

    let g = inst.graph();
    let check = verify(inst, &field, None)?;
    let k = check.coupling_k;
    let ids_where = |pred: &dyn Fn(f64) -> bool| -> Vec<String> {
        (0..g.len()).filter(|&x| pred(field[x])).map(|x| g.id(x).to_string()).collect()
    };
    let degenerate = kind == LevelKind::Nodal && k == 0.0;
    Ok(SolveReport {
        kind,
        mode: if inst.is_dirichlet() { "dirichlet" } else { "full" },
        lambda: inst.lambda(),
        level: check.level,
        residual_inf: check.residual_inf,
        residual_scale: check.residual_scale,
        membership_residuals: check.membership_residuals,
        coupling_k: k,
        degenerate_coupling: degenerate,
        starts_attempted: total,
        starts_converged: converged.len(),
        level_histogram,
        sign_pattern: SignPattern {
            positive: ids_where(&|v| v > 0.0),
            negative: ids_where(&|v| v < 0.0),
            zero: ids_where(&|v| v == 0.0),
        },
        seed: opts.seed,
        minimizer: FieldFile::from_field(g, &field),
        field,
    })
}

/// The ground level `c = inf_N J` and a minimizer.
pub fn solve_ground(inst: &ProblemInstance<'_>, opts: &SolveOptions) -> Result<SolveReport> {
    solve(inst, LevelKind::Ground, opts)
}

/// The least sign-changing level `m = inf_M J` and a minimizer.
pub fn solve_nodal(inst: &ProblemInstance<'_>, opts: &SolveOptions) -> Result<SolveReport> {
    if let Mode::Dirichlet { omega } = inst.mode() {
        if omega.interior().len() < 2 {
            return Err(Error::InfeasibleWell(omega.interior().len()));
        }
    }
    solve(inst, LevelKind::Nodal, opts)
}
