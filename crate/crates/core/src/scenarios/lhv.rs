//! Local-hidden-variable feasibility for bipartite correlation tables.
//!
//! A table `p(a, b | x, y)` admits an LHV model iff it is a convex mixture of
//! deterministic strategies `λ = (x ↦ a, y ↦ b)`. Feasibility of that mixture
//! is decided by a phase-1 simplex with Bland's rule.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Settings with mass below this are excluded from the constraints.
pub const SETTING_MASS_FLOOR: f64 = 1e-12;

/// Conditional table `p(a, b | x, y)`, stored `[x][y][a][b]` row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct BellTable {
    pub nx: usize,
    pub ny: usize,
    pub na: usize,
    pub nb: usize,
    pub probs: Vec<f64>,
    /// `p(x, y)`; settings with mass below [`SETTING_MASS_FLOOR`] impose no
    /// constraint.
    pub setting_mass: Vec<f64>,
}

impl BellTable {
    pub fn new(nx: usize, ny: usize, na: usize, nb: usize, probs: Vec<f64>) -> Result<Self> {
        let t = BellTable { nx, ny, na, nb, probs, setting_mass: vec![1.0 / (nx * ny).max(1) as f64; nx * ny] };
        t.check()?;
        Ok(t)
    }

    /// Table with an explicit settings distribution `p(x, y)`.
    pub fn with_setting_mass(nx: usize, ny: usize, na: usize, nb: usize, probs: Vec<f64>, setting_mass: Vec<f64>) -> Result<Self> {
        let t = BellTable { nx, ny, na, nb, probs, setting_mass };
        t.check()?;
        Ok(t)
    }

    pub fn from_fn(nx: usize, ny: usize, na: usize, nb: usize, f: impl Fn(usize, usize, usize, usize) -> f64) -> Result<Self> {
        let mut probs = Vec::with_capacity(nx * ny * na * nb);
        for x in 0..nx {
            for y in 0..ny {
                for a in 0..na {
                    for b in 0..nb {
                        probs.push(f(a, b, x, y));
                    }
                }
            }
        }
        Self::new(nx, ny, na, nb, probs)
    }

    fn check(&self) -> Result<()> {
        if self.nx == 0 || self.ny == 0 || self.na == 0 || self.nb == 0 {
            return Err(Error::InvalidArgument("empty correlation table".into()));
        }
        if self.probs.len() != self.nx * self.ny * self.na * self.nb || self.setting_mass.len() != self.nx * self.ny {
            return Err(Error::InvalidArgument("correlation table has the wrong length".into()));
        }
        for x in 0..self.nx {
            for y in 0..self.ny {
                if !self.active(x, y) {
                    continue;
                }
                let mut sum = 0.0;
                for a in 0..self.na {
                    for b in 0..self.nb {
                        let p = self.p(a, b, x, y);
                        if !p.is_finite() || p < -1e-9 {
                            return Err(Error::InvalidArgument(format!("bad probability {p} at (a={a}, b={b}, x={x}, y={y})")));
                        }
                        sum += p;
                    }
                }
                if (sum - 1.0).abs() > 1e-6 {
                    return Err(Error::InvalidArgument(format!("p(·,·|x={x},y={y}) sums to {sum}")));
                }
            }
        }
        Ok(())
    }

    pub fn p(&self, a: usize, b: usize, x: usize, y: usize) -> f64 {
        self.probs[((x * self.ny + y) * self.na + a) * self.nb + b]
    }

    pub fn active(&self, x: usize, y: usize) -> bool {
        self.setting_mass[x * self.ny + y] >= SETTING_MASS_FLOOR
    }

    /// Correlator `Σ (-1)^(a+b) p(a, b | x, y)` for binary outcomes.
    pub fn correlator(&self, x: usize, y: usize) -> f64 {
        let mut e = 0.0;
        for a in 0..self.na {
            for b in 0..self.nb {
                let s = if (a + b) % 2 == 0 { 1.0 } else { -1.0 };
                e += s * self.p(a, b, x, y);
            }
        }
        e
    }

    /// Largest CHSH value over the four placements of the minus sign, for
    /// 2-setting, 2-outcome tables with all settings active.
    pub fn chsh(&self) -> Option<f64> {
        if (self.nx, self.ny, self.na, self.nb) != (2, 2, 2, 2) || !(0..4).all(|k| self.active(k / 2, k % 2)) {
            return None;
        }
        let e = [self.correlator(0, 0), self.correlator(0, 1), self.correlator(1, 0), self.correlator(1, 1)];
        let total: f64 = e.iter().sum();
        Some((0..4).map(|k| (total - 2.0 * e[k]).abs()).fold(0.0, f64::max))
    }

    /// Largest violation of no-signalling over active settings.
    pub fn signalling(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for x in 0..self.nx {
            for a in 0..self.na {
                let marg: Vec<f64> = (0..self.ny)
                    .filter(|&y| self.active(x, y))
                    .map(|y| (0..self.nb).map(|b| self.p(a, b, x, y)).sum())
                    .collect();
                for w in marg.windows(2) {
                    worst = worst.max((w[0] - w[1]).abs());
                }
            }
        }
        for y in 0..self.ny {
            for b in 0..self.nb {
                let marg: Vec<f64> = (0..self.nx)
                    .filter(|&x| self.active(x, y))
                    .map(|x| (0..self.na).map(|a| self.p(a, b, x, y)).sum())
                    .collect();
                for w in marg.windows(2) {
                    worst = worst.max((w[0] - w[1]).abs());
                }
            }
        }
        worst
    }
}

/// Outcome of [`lhv_feasible`].
#[derive(Clone, Debug, PartialEq)]
pub struct LhvReport {
    pub feasible: bool,
    /// Sum of phase-1 artificial variables at the optimum.
    pub residual: f64,
    /// Strategy weights when feasible, indexed by strategy number.
    pub weights: Vec<f64>,
    pub chsh: Option<f64>,
    /// For no-signalling 2x2x2x2 tables: whether the CHSH facets give the
    /// same verdict as the LP.
    pub facet_agreement: Option<bool>,
}

/// Deterministic strategy `s` as (outcome per x, outcome per y).
pub fn strategy(t: &BellTable, mut s: usize) -> (Vec<usize>, Vec<usize>) {
    let mut fa = vec![0; t.nx];
    let mut fb = vec![0; t.ny];
    for v in fb.iter_mut().rev() {
        *v = s % t.nb;
        s /= t.nb;
    }
    for v in fa.iter_mut().rev() {
        *v = s % t.na;
        s /= t.na;
    }
    (fa, fb)
}

/// Whether `t` admits a local-hidden-variable model within `tol`.
pub fn lhv_feasible(t: &BellTable, tol: f64) -> Result<LhvReport> {
    t.check()?;
    let count = t.na.checked_pow(t.nx as u32).and_then(|a| t.nb.checked_pow(t.ny as u32).and_then(|b| a.checked_mul(b)));
    let n = match count {
        Some(n) if n <= 200_000 => n,
        _ => return Err(Error::CapExceeded { size: usize::MAX, cap: 200_000 }),
    };
    let strategies: Vec<(Vec<usize>, Vec<usize>)> = (0..n).map(|s| strategy(t, s)).collect();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    for x in 0..t.nx {
        for y in 0..t.ny {
            if !t.active(x, y) {
                continue;
            }
            for a in 0..t.na {
                for b in 0..t.nb {
                    rows.push(strategies.iter().map(|(fa, fb)| if fa[x] == a && fb[y] == b { 1.0 } else { 0.0 }).collect());
                    rhs.push(t.p(a, b, x, y).max(0.0));
                }
            }
        }
    }
    rows.push(vec![1.0; n]);
    rhs.push(1.0);
    let (residual, weights) = phase_one(&rows, &rhs);
    let feasible = residual <= tol.max(1e-12);
    let chsh = t.chsh();
    let facet_agreement = chsh.filter(|_| t.signalling() <= 1e-9).map(|s| (s <= 2.0 + 1e-7) == feasible);
    Ok(LhvReport { feasible, residual, weights: if feasible { weights } else { Vec::new() }, chsh, facet_agreement })
}

/// Minimise the sum of artificials for `A q = b, q ≥ 0` (with `b ≥ 0`).
/// Returns the optimal residual and the primal `q`.
fn phase_one(a: &[Vec<f64>], b: &[f64]) -> (f64, Vec<f64>) {
    let m = a.len();
    let n = a.first().map(|r| r.len()).unwrap_or(0);
    let width = n + m + 1;
    let mut tab: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            let mut row = vec![0.0; width];
            row[..n].copy_from_slice(&a[i]);
            row[n + i] = 1.0;
            row[width - 1] = b[i];
            row
        })
        .collect();
    let mut basis: Vec<usize> = (n..n + m).collect();
    // Objective row holds reduced costs of `min Σ artificials`.
    let mut obj = vec![0.0; width];
    for row in &tab {
        for j in 0..n {
            obj[j] -= row[j];
        }
        obj[width - 1] -= row[width - 1];
    }
    const EPS: f64 = 1e-12;
    for _ in 0..50 * (n + m) {
        let Some(enter) = (0..n + m).find(|&j| obj[j] < -EPS) else { break };
        let mut leave: Option<usize> = None;
        let mut best = f64::INFINITY;
        for i in 0..m {
            let c = tab[i][enter];
            if c > EPS {
                let r = tab[i][width - 1] / c;
                if r < best - EPS || (r <= best + EPS && leave.is_some_and(|l| basis[i] < basis[l])) {
                    best = r;
                    leave = Some(i);
                }
            }
        }
        let Some(r) = leave else { break };
        let piv = tab[r][enter];
        for v in tab[r].iter_mut() {
            *v /= piv;
        }
        let pivot_row = tab[r].clone();
        for (i, row) in tab.iter_mut().enumerate() {
            if i != r {
                let f = row[enter];
                if f != 0.0 {
                    for (v, p) in row.iter_mut().zip(&pivot_row) {
                        *v -= f * p;
                    }
                }
            }
        }
        let f = obj[enter];
        for (v, p) in obj.iter_mut().zip(&pivot_row) {
            *v -= f * p;
        }
        basis[r] = enter;
    }
    let mut q = vec![0.0; n];
    let mut residual = 0.0;
    for (i, &bv) in basis.iter().enumerate() {
        let v = tab[i][width - 1];
        if bv < n {
            q[bv] = v;
        } else {
            residual += v.abs();
        }
    }
    (residual, q)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pr_box() -> BellTable {
        BellTable::from_fn(2, 2, 2, 2, |a, b, x, y| if (a ^ b) == (x & y) { 0.5 } else { 0.0 }).unwrap()
    }

    #[test]
    fn product_tables_are_local() {
        let pa = [[0.3, 0.7], [0.9, 0.1]];
        let pb = [[0.5, 0.5], [0.2, 0.8]];
        let t = BellTable::from_fn(2, 2, 2, 2, |a, b, x, y| pa[x][a] * pb[y][b]).unwrap();
        let r = lhv_feasible(&t, 1e-7).unwrap();
        assert!(r.feasible, "residual {}", r.residual);
        assert_eq!(r.facet_agreement, Some(true));
        let total: f64 = r.weights.iter().sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn pr_box_is_nonlocal() {
        let t = pr_box();
        assert!((t.chsh().unwrap() - 4.0).abs() < 1e-12);
        let r = lhv_feasible(&t, 1e-7).unwrap();
        assert!(!r.feasible);
        assert_eq!(r.facet_agreement, Some(true));
    }

    #[test]
    fn tsirelson_table_is_nonlocal() {
        let s = core::f64::consts::FRAC_1_SQRT_2;
        let t = BellTable::from_fn(2, 2, 2, 2, |a, b, x, y| {
            let e = if x == 1 && y == 1 { -s } else { s };
            (1.0 + if a == b { e } else { -e }) / 4.0
        })
        .unwrap();
        assert!((t.chsh().unwrap() - 2.0 * core::f64::consts::SQRT_2).abs() < 1e-12);
        assert!(!lhv_feasible(&t, 1e-7).unwrap().feasible);
    }

    #[test]
    fn three_outcome_deterministic_table_is_local() {
        let t = BellTable::from_fn(2, 3, 3, 2, |a, b, x, y| if a == (x + 1) % 3 && b == y % 2 { 1.0 } else { 0.0 }).unwrap();
        assert!(lhv_feasible(&t, 1e-7).unwrap().feasible);
    }

    #[test]
    fn malformed_tables_are_rejected() {
        assert!(BellTable::new(2, 2, 2, 2, vec![0.25; 15]).is_err());
        assert!(BellTable::new(1, 1, 2, 2, vec![0.5, 0.5, 0.5, 0.5]).is_err());
    }
}
