//! Projections onto the Nehari manifold `N` and the sign-changing set `M`.
//!
//! For the logarithmic nonlinearity both projections reduce to scalar
//! algebra on a handful of integrals of `u⁺` and `u⁻`:
//!
//! ```text
//! g₁(s,t) = J'(su⁺+tu⁻)·(su⁺) = s²(A⁺ - B⁺ log s²) - (st/2) K
//! g₂(s,t) = J'(su⁺+tu⁻)·(tu⁻) = t²(A⁻ - B⁻ log t²) - (st/2) K
//! ```
//!
//! with `A± = J'(u±)·u± = ‖u±‖² - ‖u±‖₂² - ∫|u±|² log|u±|²`, `B± = ‖u±‖₂²`
//! and `K = K(u) ≤ 0`. The pair `(s_u, t_u)` with `g₁ = g₂ = 0` is found by a
//! damped Newton iteration kept inside a sign bracket, with nested bisection
//! as the fallback.

use nalgebra::{Matrix2, Vector2};
use serde::Serialize;

use crate::energy::ProblemInstance;
use crate::error::{Error, Result};
use crate::field::VertexField;

/// Membership tolerance used by [`fiber_energy`], relative to the same
/// scale as the projection residuals.
pub const MEMBERSHIP_TOL: f64 = 1e-8;

const SCAN_LIMIT: i32 = 40;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PairOptions {
    fn default() -> Self {
        PairOptions {
            tol: 1e-10,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairProjection {
    pub s: f64,
    pub t: f64,
    #[serde(skip)]
    pub projected: VertexField,
    pub g1_residual: f64,
    pub g2_residual: f64,
    /// Scale the residuals were tested against (see `residual_scale`).
    pub residual_scale: f64,
    pub iterations: usize,
    pub bracket: (f64, f64),
    /// `K(u) = 0`: the two constraints decouple into ray projections.
    pub degenerate_coupling: bool,
    /// Newton could not finish inside the bracket and bisection took over.
    pub used_bisection: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FiberValue {
    pub s: f64,
    pub t: f64,
    pub value: f64,
}

/// `f(τ) = τ² - τ² log τ² - 1`, with `f(0) = -1`.
pub fn fiber_profile(tau: f64) -> f64 {
    if tau == 0.0 {
        -1.0
    } else {
        tau * tau - 2.0 * tau * tau * tau.abs().ln() - 1.0
    }
}

/// The scalar data the pair system depends on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct PairCoefficients {
    pub a_pos: f64,
    pub b_pos: f64,
    pub a_neg: f64,
    pub b_neg: f64,
    pub k: f64,
    pub norm_pos: f64,
    pub norm_neg: f64,
}

impl PairCoefficients {
    pub fn from_field(inst: &ProblemInstance<'_>, u: &VertexField) -> Self {
        let pos = u.positive_part();
        let neg = u.negative_part();
        let part = |p: &VertexField| {
            let v = p.values();
            let norm = inst.space_norm_sq(v);
            let l2 = inst.l2_sq(v);
            (norm - l2 - inst.log_integral(v), l2, norm)
        };
        let (a_pos, b_pos, norm_pos) = part(&pos);
        let (a_neg, b_neg, norm_neg) = part(&neg);
        PairCoefficients {
            a_pos,
            b_pos,
            a_neg,
            b_neg,
            k: inst.coupling_unchecked(u.values()),
            norm_pos,
            norm_neg,
        }
    }

    pub fn scale(&self) -> f64 {
        self.norm_pos.max(self.norm_neg).max(1.0)
    }

    pub fn g(&self, s: f64, t: f64) -> (f64, f64) {
        let cross = 0.5 * s * t * self.k;
        (
            s * s * (self.a_pos - self.b_pos * (s * s).ln()) - cross,
            t * t * (self.a_neg - self.b_neg * (t * t).ln()) - cross,
        )
    }

    pub fn jacobian(&self, s: f64, t: f64) -> Matrix2<f64> {
        let d11 = 2.0 * s * (self.a_pos - self.b_pos * (s * s).ln()) - 2.0 * s * self.b_pos
            - 0.5 * t * self.k;
        let d22 = 2.0 * t * (self.a_neg - self.b_neg * (t * t).ln()) - 2.0 * t * self.b_neg
            - 0.5 * s * self.k;
        Matrix2::new(d11, -0.5 * s * self.k, -0.5 * t * self.k, d22)
    }

    /// Geometric scan for `0 < r < R` with `g > 0` on the faces `s = r`,
    /// `t = r` and `g < 0` on `s = R`, `t = R`.
    ///
    /// Since `K ≤ 0`, `g₁(r, ·)` is nondecreasing and `g₁(R, ·)` attains its
    /// maximum at `t = R`, so the face conditions reduce to the diagonal
    /// corners `(r, r)` and `(R, R)`.
    pub fn bracket(&self) -> Result<(f64, f64)> {
        let positive = |c: f64| {
            let (g1, g2) = self.g(c, c);
            g1 > 0.0 && g2 > 0.0
        };
        let negative = |c: f64| {
            let (g1, g2) = self.g(c, c);
            g1 < 0.0 && g2 < 0.0
        };
        let r = (0..=SCAN_LIMIT)
            .map(|k| 2f64.powi(-k))
            .find(|&c| positive(c))
            .ok_or(Error::NoBracket)?;
        let big = (0..=SCAN_LIMIT)
            .map(|k| 2f64.powi(k))
            .find(|&c| negative(c))
            .ok_or(Error::NoBracket)?;
        Ok((r, big))
    }

    /// Tolerance scale at `(s, t)`: the larger of [`Self::scale`] and the
    /// squared norms of `s u⁺`, `t u⁻`. Equal to `scale()` when `s, t ≤ 1`;
    /// beyond that the `u`-based scale sits below the rounding floor of `g`.
    pub fn residual_scale(&self, s: f64, t: f64) -> f64 {
        self.scale().max(s * s * self.norm_pos).max(t * t * self.norm_neg)
    }

    fn converged(&self, s: f64, t: f64, tol: f64) -> bool {
        let (g1, g2) = self.g(s, t);
        let lim = tol * self.residual_scale(s, t);
        g1.abs() <= lim && g2.abs() <= lim
    }

    /// Root of `g₁(·, t)` on `[lo, hi]` given `g₁(lo,t) > 0 > g₁(hi,t)`.
    fn bisect_s(&self, t: f64, lo: f64, hi: f64) -> f64 {
        bisect(|s| self.g(s, t).0, lo, hi)
    }

    /// Nested bisection: `s*(t)` solves `g₁ = 0`, then bisect `g₂(s*(t), t)`.
    fn nested_bisection(&self, r: f64, big: f64) -> (f64, f64) {
        let t = bisect(|t| self.g(self.bisect_s(t, r, big), t).1, r, big);
        (self.bisect_s(t, r, big), t)
    }

    /// Damped Newton inside the box `[r, R]²`. Returns the iterate and
    /// whether it met the tolerance.
    fn newton(&self, start: (f64, f64), bracket: (f64, f64), opts: &PairOptions) -> (f64, f64, usize, bool) {
        let (r, big) = bracket;
        let (mut s, mut t) = (start.0.clamp(r, big), start.1.clamp(r, big));
        let merit = |s: f64, t: f64| {
            let (a, b) = self.g(s, t);
            a * a + b * b
        };
        for it in 0..opts.max_iter {
            if self.converged(s, t, opts.tol) {
                return (s, t, it, true);
            }
            let (g1, g2) = self.g(s, t);
            let Some(inv) = self.jacobian(s, t).try_inverse() else {
                return (s, t, it, false);
            };
            let step = -(inv * Vector2::new(g1, g2));
            let m0 = merit(s, t);
            let mut alpha = 1.0;
            let mut accepted = false;
            for _ in 0..40 {
                let ns = (s + alpha * step[0]).clamp(r, big);
                let nt = (t + alpha * step[1]).clamp(r, big);
                if merit(ns, nt) <= (1.0 - 1e-4 * alpha) * m0 {
                    s = ns;
                    t = nt;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !accepted {
                return (s, t, it, self.converged(s, t, opts.tol));
            }
        }
        (s, t, opts.max_iter, self.converged(s, t, opts.tol))
    }
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    // f(lo) > 0 > f(hi)
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = f(mid);
        if v == 0.0 {
            return mid;
        }
        if v > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn require_nonzero(inst: &ProblemInstance<'_>, w: &VertexField) -> Result<()> {
    inst.check_admissible(w)?;
    if w.is_zero() {
        return Err(Error::ZeroField);
    }
    Ok(())
}

fn require_sign_change(inst: &ProblemInstance<'_>, u: &VertexField) -> Result<()> {
    inst.check_admissible(u)?;
    if !u.changes_sign() {
        return Err(Error::SingleSigned);
    }
    Ok(())
}

/// The unique `s > 0` with `s·w ∈ N`:
/// `log s² = (‖w‖² - ‖w‖₂² - ∫w² log w²) / ‖w‖₂²`.
pub fn project_ray(inst: &ProblemInstance<'_>, w: &VertexField) -> Result<f64> {
    require_nonzero(inst, w)?;
    let v = w.values();
    let norm = inst.space_norm_sq(v);
    let l2 = inst.l2_sq(v);
    let exponent = (norm - l2 - inst.log_integral(v)) / l2;
    Ok((0.5 * exponent).exp())
}

/// `J(su⁺ + tu⁻)` for `u ∈ M`, evaluated through the closed fiber formula
/// `J(u) + ½f(s)‖u⁺‖₂² + ½f(t)‖u⁻‖₂² + ¼(s-t)² K(u)`.
pub fn fiber_energy(inst: &ProblemInstance<'_>, u: &VertexField, s: f64, t: f64) -> Result<FiberValue> {
    require_sign_change(inst, u)?;
    if !(s >= 0.0 && t >= 0.0) {
        return Err(Error::InvalidOption(format!("fiber parameters must be nonnegative, got ({s}, {t})")));
    }
    let c = PairCoefficients::from_field(inst, u);
    let (g1, g2) = c.g(1.0, 1.0);
    let lim = MEMBERSHIP_TOL * c.scale();
    if g1.abs() > lim || g2.abs() > lim {
        return Err(Error::NotInNehariSet(g1, g2));
    }
    let base = inst.energy_unchecked(u.values());
    let value = base
        + 0.5 * fiber_profile(s) * c.b_pos
        + 0.5 * fiber_profile(t) * c.b_neg
        + 0.25 * (s - t).powi(2) * c.k;
    Ok(FiberValue { s, t, value })
}

/// `(g₁(s,t), g₂(s,t))` via the closed forms.
pub fn pair_residuals(inst: &ProblemInstance<'_>, u: &VertexField, s: f64, t: f64) -> Result<(f64, f64)> {
    require_sign_change(inst, u)?;
    Ok(PairCoefficients::from_field(inst, u).g(s, t))
}

/// Box `[r, R]²` on whose faces `(g₁, g₂)` has the sign pattern needed for
/// a zero inside.
pub fn miranda_bracket(inst: &ProblemInstance<'_>, u: &VertexField) -> Result<(f64, f64)> {
    require_sign_change(inst, u)?;
    let c = PairCoefficients::from_field(inst, u);
    if c.k == 0.0 {
        return Err(Error::DegenerateCoupling);
    }
    c.bracket()
}

/// The unique `(s_u, t_u)` with `s_u u⁺ + t_u u⁻ ∈ M`.
pub fn project_pair(inst: &ProblemInstance<'_>, u: &VertexField) -> Result<PairProjection> {
    project_pair_from(inst, u, (1.0, 1.0), &PairOptions::default())
}

/// [`project_pair`] with an explicit Newton starting point and options.
pub fn project_pair_from(
    inst: &ProblemInstance<'_>,
    u: &VertexField,
    start: (f64, f64),
    opts: &PairOptions,
) -> Result<PairProjection> {
    require_sign_change(inst, u)?;
    let c = PairCoefficients::from_field(inst, u);
    let bracket = c.bracket()?;
    solve_pair(&c, u, start, bracket, opts)
}

pub(crate) fn solve_pair(
    c: &PairCoefficients,
    u: &VertexField,
    start: (f64, f64),
    bracket: (f64, f64),
    opts: &PairOptions,
) -> Result<PairProjection> {
    let degenerate = c.k == 0.0;
    let (mut s, mut t, mut iterations, ok, mut used_bisection);
    if degenerate {
        s = (0.5 * c.a_pos / c.b_pos).exp();
        t = (0.5 * c.a_neg / c.b_neg).exp();
        iterations = 0;
        used_bisection = false;
        ok = c.converged(s, t, opts.tol);
    } else {
        let (ns, nt, it, conv) = c.newton(start, bracket, opts);
        (s, t, iterations) = (ns, nt, it);
        used_bisection = false;
        if conv {
            ok = true;
        } else {
            used_bisection = true;
            let (bs, bt) = c.nested_bisection(bracket.0, bracket.1);
            let (ps, pt, it2, conv2) = c.newton((bs, bt), bracket, opts);
            (s, t) = (ps, pt);
            iterations += it2;
            ok = conv2 || c.converged(bs, bt, opts.tol);
            if !conv2 && ok {
                (s, t) = (bs, bt);
            }
        }
    }
    if !ok {
        let (g1, g2) = c.g(s, t);
        return Err(Error::NonConvergence(format!(
            "pair projection stalled at (s, t) = ({s}, {t}) with residuals ({g1:e}, {g2:e})"
        )));
    }
    let (g1, g2) = c.g(s, t);
    Ok(PairProjection {
        s,
        t,
        projected: u.recombine(s, t),
        g1_residual: g1,
        g2_residual: g2,
        residual_scale: c.residual_scale(s, t),
        iterations,
        bracket,
        degenerate_coupling: degenerate,
        used_bisection,
    })
}
