//! Brute-force enumeration of critical points on tiny instances.
//!
//! The oracle scans a dense grid over `[-B, B]^d` (one axis per free vertex),
//! flags cells where every residual component changes sign across the
//! corners, and polishes each flagged cell with a finite-difference Newton
//! iteration. It evaluates residuals and energies directly from the graph
//! data and shares no code with [`crate::energy`] or [`crate::solver`], so
//! its minima serve as independent reference levels.

use serde::Serialize;

use crate::energy::Mode;
use crate::error::{Error, Result};
use crate::field::VertexField;
use crate::energy::ProblemInstance;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    /// Grid points per axis (at least 2).
    pub points: usize,
    /// Half-width `B` of the box; defaults to `2e·max(1, scale)` where
    /// `scale = max_x (deg(x)/μ(x) + λa(x))` over the free vertices.
    pub half_width: Option<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            points: 41,
            half_width: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalPoint {
    #[serde(skip)]
    pub field: VertexField,
    pub values: Vec<f64>,
    pub energy: f64,
    pub residual_inf: f64,
    pub sign_changing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult {
    pub points: Vec<CriticalPoint>,
    /// Least energy over nontrivial critical points (`c`).
    pub ground_level: Option<f64>,
    /// Least energy over sign-changing critical points (`m`).
    pub nodal_level: Option<f64>,
    pub half_width: f64,
}

struct Reduced {
    free: Vec<usize>,
    n: usize,
    mu: Vec<f64>,
    pot: Vec<f64>,
    mass_on: Vec<bool>,
    edges: Vec<(usize, usize, f64)>,
}

impl Reduced {
    fn new(inst: &ProblemInstance<'_>) -> Self {
        let g = inst.graph();
        let (free, lambda): (Vec<usize>, f64) = match inst.mode() {
            Mode::Full { lambda } => ((0..g.len()).collect(), *lambda),
            Mode::Dirichlet { omega } => (omega.interior().to_vec(), 0.0),
        };
        let mass_on = (0..g.len()).map(|x| free.contains(&x)).collect();
        Reduced {
            n: g.len(),
            mu: g.mu().to_vec(),
            pot: g.potential().iter().map(|a| lambda * a).collect(),
            edges: g.edges().to_vec(),
            mass_on,
            free,
        }
    }

    fn embed(&self, z: &[f64]) -> Vec<f64> {
        let mut u = vec![0.0; self.n];
        for (k, &x) in self.free.iter().enumerate() {
            u[x] = z[k];
        }
        u
    }

    fn xlog(v: f64) -> f64 {
        if v == 0.0 {
            0.0
        } else {
            v * (v * v).ln()
        }
    }

    /// `-Δu + λau - u log u²` at the free vertices.
    fn residual(&self, z: &[f64]) -> Vec<f64> {
        let u = self.embed(z);
        let mut flux = vec![0.0; self.n];
        for &(x, y, w) in &self.edges {
            flux[x] += w * (u[x] - u[y]);
            flux[y] += w * (u[y] - u[x]);
        }
        self.free
            .iter()
            .map(|&x| flux[x] / self.mu[x] + self.pot[x] * u[x] - Self::xlog(u[x]))
            .collect()
    }

    fn energy(&self, z: &[f64]) -> f64 {
        let u = self.embed(z);
        let grad: f64 = self.edges.iter().map(|&(x, y, w)| w * (u[x] - u[y]).powi(2)).sum();
        let rest: f64 = (0..self.n)
            .filter(|&x| self.mass_on[x])
            .map(|x| {
                let sq = u[x] * u[x];
                let log_term = if sq == 0.0 { 0.0 } else { sq * sq.ln() };
                self.mu[x] * ((self.pot[x] + 1.0) * sq - log_term)
            })
            .sum();
        0.5 * (grad + rest)
    }

    fn default_half_width(&self) -> f64 {
        let mut deg = vec![0.0; self.n];
        for &(x, y, w) in &self.edges {
            deg[x] += w;
            deg[y] += w;
        }
        let scale = self
            .free
            .iter()
            .map(|&x| deg[x] / self.mu[x] + self.pot[x])
            .fold(1.0, f64::max);
        2.0 * std::f64::consts::E * scale
    }
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Gaussian elimination with partial pivoting on a tiny dense system.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let d = b.len();
    for col in 0..d {
        let piv = (col..d).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..d {
            let f = a[row][col] / a[col][col];
            let (upper, lower) = a.split_at_mut(row);
            for (x, p) in lower[0][col..].iter_mut().zip(&upper[col][col..]) {
                *x -= f * p;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; d];
    for row in (0..d).rev() {
        let s: f64 = (row + 1..d).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

fn newton(sys: &Reduced, start: &[f64]) -> Option<Vec<f64>> {
    let d = start.len();
    let mut z = start.to_vec();
    let mut f = sys.residual(&z);
    for _ in 0..200 {
        let fnorm = sup(&f);
        if fnorm == 0.0 {
            break;
        }
        let mut jac = vec![vec![0.0; d]; d];
        for j in 0..d {
            let h = 1e-7 * z[j].abs().max(1e-3);
            let (mut zp, mut zm) = (z.clone(), z.clone());
            zp[j] += h;
            zm[j] -= h;
            let (fp, fm) = (sys.residual(&zp), sys.residual(&zm));
            for i in 0..d {
                jac[i][j] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        let step = solve_dense(jac, f.iter().map(|v| -v).collect())?;
        let mut alpha = 1.0;
        let mut moved = false;
        for _ in 0..30 {
            let cand: Vec<f64> = z.iter().zip(&step).map(|(a, s)| a + alpha * s).collect();
            let fc = sys.residual(&cand);
            if sup(&fc) < fnorm {
                z = cand;
                f = fc;
                moved = true;
                break;
            }
            alpha *= 0.5;
        }
        if !moved {
            break;
        }
    }
    let scale = sup(&z).max(1.0);
    (sup(&f) <= 1e-9 * scale).then_some(z)
}

fn same_point(sys: &Reduced, p: &[f64], q: &[f64]) -> bool {
    let scale = sup(p).max(sup(q)).max(1.0);
    let dist = p.iter().zip(q).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
    if dist <= 1e-8 * scale {
        return true;
    }
    // Degenerate (singular-Jacobian) roots are only located to about
    // sqrt(machine epsilon); merge those when energy and signs agree.
    let (ep, eq) = (sys.energy(p), sys.energy(q));
    let signs = |v: &[f64]| v.iter().map(|x| x.signum() as i8).collect::<Vec<_>>();
    dist <= 1e-5 * scale
        && (ep - eq).abs() <= 1e-12 * ep.abs().max(1.0)
        && signs(p) == signs(q)
}

/// Enumerate critical points of the instance on a grid.
pub fn oracle_enumerate(inst: &ProblemInstance<'_>, dof_limit: usize, grid: &GridSpec) -> Result<OracleResult> {
    let sys = Reduced::new(inst);
    let d = sys.free.len();
    if d > dof_limit {
        return Err(Error::DofLimitExceeded { free: d, limit: dof_limit });
    }
    if grid.points < 2 {
        return Err(Error::InvalidOption(format!(
            "grid needs at least 2 points per axis, got {}",
            grid.points
        )));
    }
    let half = grid.half_width.unwrap_or_else(|| sys.default_half_width());
    if !(half > 0.0 && half.is_finite()) {
        return Err(Error::InvalidOption(format!("grid half-width must be positive, got {half}")));
    }
    let n = grid.points;
    let coord = |i: usize| -half + 2.0 * half * i as f64 / (n - 1) as f64;
    let total = n.pow(d as u32);
    let unravel = |mut flat: usize| -> Vec<usize> {
        let mut idx = vec![0; d];
        for slot in idx.iter_mut() {
            *slot = flat % n;
            flat /= n;
        }
        idx
    };
    let values: Vec<Vec<f64>> = (0..total)
        .map(|flat| sys.residual(&unravel(flat).iter().map(|&i| coord(i)).collect::<Vec<_>>()))
        .collect();

    let mut found: Vec<Vec<f64>> = Vec::new();
    let cells = (n - 1).pow(d as u32);
    for cell in 0..cells {
        let mut base = vec![0; d];
        let mut c = cell;
        for slot in base.iter_mut() {
            *slot = c % (n - 1);
            c /= n - 1;
        }
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for corner in 0..(1usize << d) {
            let mut flat = 0;
            let mut stride = 1;
            for (k, &b) in base.iter().enumerate() {
                flat += (b + ((corner >> k) & 1)) * stride;
                stride *= n;
            }
            for (i, v) in values[flat].iter().enumerate() {
                lo[i] = lo[i].min(*v);
                hi[i] = hi[i].max(*v);
            }
        }
        if !(0..d).all(|i| lo[i] <= 0.0 && hi[i] >= 0.0) {
            continue;
        }
        let center: Vec<f64> = base
            .iter()
            .map(|&b| 0.5 * (coord(b) + coord(b + 1)))
            .collect();
        if let Some(z) = newton(&sys, &center) {
            if z.iter().any(|v| v.abs() > half * 1.5) {
                continue;
            }
            if let Some(pos) = found.iter().position(|q| same_point(&sys, &z, q)) {
                if sup(&sys.residual(&z)) < sup(&sys.residual(&found[pos])) {
                    found[pos] = z;
                }
            } else {
                found.push(z);
            }
        }
    }

    let mut points: Vec<CriticalPoint> = found
        .into_iter()
        .map(|z| {
            let u = sys.embed(&z);
            let thresh = 1e-8 * sup(&z).max(1.0);
            CriticalPoint {
                energy: sys.energy(&z),
                residual_inf: sup(&sys.residual(&z)),
                sign_changing: u.iter().any(|&v| v > thresh) && u.iter().any(|&v| v < -thresh),
                values: u.clone(),
                field: VertexField::new(u),
            }
        })
        .collect();
    points.sort_by(|a, b| a.energy.total_cmp(&b.energy).then(a.values.partial_cmp(&b.values).unwrap()));
    let nontrivial = |p: &&CriticalPoint| sup(&p.values) > 1e-8;
    let ground_level = points.iter().filter(nontrivial).map(|p| p.energy).reduce(f64::min);
    let nodal_level = points
        .iter()
        .filter(|p| p.sign_changing)
        .map(|p| p.energy)
        .reduce(f64::min);
    Ok(OracleResult {
        points,
        ground_level,
        nodal_level,
        half_width: half,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::*;
    use approx::assert_relative_eq;
    use std::f64::consts::E;

    #[test]
    fn k2_critical_set() {
        let g = k2();
        let inst = ProblemInstance::full(&g, 1.0).unwrap();
        let res = oracle_enumerate(&inst, 3, &GridSpec::default()).unwrap();
        assert_relative_eq!(res.ground_level.unwrap(), 1.0, max_relative = 1e-10);
        assert_relative_eq!(res.nodal_level.unwrap(), E * E, max_relative = 1e-12);
        let levels: Vec<f64> = res.points.iter().map(|p| p.energy).collect();
        // 0, ±(1,1), ±(e,-e)
        assert_eq!(res.points.len(), 5, "{levels:?}");
        let nodal: Vec<_> = res.points.iter().filter(|p| p.sign_changing).collect();
        assert_eq!(nodal.len(), 2);
        for p in nodal {
            assert_relative_eq!(p.values[0].abs(), E, max_relative = 1e-12);
            assert_relative_eq!(p.values[0], -p.values[1], max_relative = 1e-12);
        }
    }

    #[test]
    fn p6_dirichlet_critical_set() {
        let g = p6_well();
        let inst = ProblemInstance::dirichlet_on_well(&g).unwrap();
        let res = oracle_enumerate(&inst, 3, &GridSpec::default()).unwrap();
        assert_relative_eq!(res.nodal_level.unwrap(), E.powi(3), max_relative = 1e-12);
        assert_relative_eq!(res.ground_level.unwrap(), E, max_relative = 1e-10);
        let nodal: Vec<_> = res.points.iter().filter(|p| p.sign_changing).collect();
        assert_eq!(nodal.len(), 2);
        assert_relative_eq!(nodal[0].values[2].abs(), E.powf(1.5), max_relative = 1e-12);
        assert!(nodal.iter().all(|p| p.values[0] == 0.0 && p.values[5] == 0.0));
    }

    #[test]
    fn input_validation() {
        let g = k2();
        let inst = ProblemInstance::full(&g, 1.0).unwrap();
        let empty = GridSpec { points: 0, half_width: None };
        assert!(matches!(oracle_enumerate(&inst, 3, &empty), Err(Error::InvalidOption(_))));
        let p = path(&[0.0; 4]);
        let inst = ProblemInstance::full(&p, 1.0).unwrap();
        assert_eq!(
            oracle_enumerate(&inst, 3, &GridSpec::default()).unwrap_err(),
            Error::DofLimitExceeded { free: 4, limit: 3 }
        );
    }
}
