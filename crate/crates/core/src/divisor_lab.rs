//! Compatible divisors on the two sheets, the counting rule at double
//! points, reconstruction of soliton data from a divisor, and the Toda
//! solution expressed through divisor dynamics.

use crate::error::{check_order, Error, Result};
use crate::extended::Dd;
use crate::soliton_data::{rref_coefficients, SolitonData};
use crate::tau_engine::{tau, TimeVector};
use crate::toda_core::{jacobi_matrix, jacobi_matrix_extended, probe_points, TodaState};

/// A divisor point sitting on the double point `kappa[kappa_index]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Collision {
    pub kappa_index: usize,
    pub gamma_index: usize,
    pub delta_index: usize,
}

/// Occupancy of the finite ovals `1..=n-1` (stored at index `oval - 1`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OvalAssignment {
    /// Points strictly inside an oval; points on a double point are not counted.
    pub before: Vec<usize>,
    pub after: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Divisor {
    pub k: usize,
    /// Points on the plus sheet, ascending.
    pub gammas: Vec<f64>,
    /// Points on the minus sheet, ascending.
    pub deltas: Vec<f64>,
    /// Low-order parts: the point is `gammas[i] + gamma_corrections[i]`. Zero
    /// unless the point was refined next to a phase.
    pub gamma_corrections: Vec<f64>,
    pub delta_corrections: Vec<f64>,
    pub t: TimeVector,
    /// Oval of each point, gammas first then deltas.
    pub oval_of: Vec<usize>,
    pub generic: bool,
    pub collisions: Vec<Collision>,
    pub ovals: OvalAssignment,
}

impl Divisor {
    /// Validates the point counts and the finite-oval condition and applies
    /// the counting rule: a gamma on a double point goes to the oval on its
    /// left, a delta to the oval on its right. Points within `1e-9` of the
    /// phase spread from an outer phase join the adjacent oval; a lone point
    /// that close to an interior phase is an exponentially small gap lost to
    /// rounding and takes the neighbouring oval that is still empty.
    pub fn from_points(kappa: &[f64], k: usize, gammas: &[f64], deltas: &[f64], t: TimeVector) -> Result<Divisor> {
        let lift = |v: &[f64]| v.iter().map(|&x| Dd::from(x)).collect::<Vec<_>>();
        Divisor::from_extended_points(kappa, k, &lift(gammas), &lift(deltas), t)
    }

    pub(crate) fn from_extended_points(
        kappa: &[f64],
        k: usize,
        gammas: &[Dd],
        deltas: &[Dd],
        t: TimeVector,
    ) -> Result<Divisor> {
        let n = kappa.len();
        if n < 2 {
            return Err(Error::TooFewPhases(n));
        }
        check_order(k, 0, n - 1)?;
        if gammas.len() != k || deltas.len() != n - k - 1 {
            return Err(Error::MalformedDivisor(format!(
                "order {k} needs {k} plus-sheet and {} minus-sheet points, got {} and {}",
                n - k - 1,
                gammas.len(),
                deltas.len()
            )));
        }
        if gammas
            .iter()
            .chain(deltas)
            .any(|p| !(p.hi.is_finite() && p.lo.is_finite()))
        {
            return Err(Error::NonFinite("divisor point"));
        }
        let tol = 1e-9 * (kappa[n - 1] - kappa[0]);
        let sorted = |v: &[Dd]| {
            let mut v = v.to_vec();
            v.sort_by(|x, y| x.hi.total_cmp(&y.hi).then(x.lo.total_cmp(&y.lo)));
            let hi: Vec<f64> = v.iter().map(|p| p.hi).collect();
            let lo: Vec<f64> = v.iter().map(|p| p.lo).collect();
            (hi, lo)
        };
        let (gammas, gamma_corrections) = sorted(gammas);
        let (deltas, delta_corrections) = sorted(deltas);
        for pts in [&gammas, &deltas] {
            if pts.windows(2).any(|w| w[1] - w[0] <= tol) {
                return Err(Error::MalformedDivisor("repeated point on one sheet".into()));
            }
        }
        if gammas
            .iter()
            .chain(&deltas)
            .any(|&p| p < kappa[0] - tol || p > kappa[n - 1] + tol)
        {
            return Err(Error::MalformedDivisor("point outside the finite ovals".into()));
        }

        // Points within `tol` of a phase are resolved below; the rest are counted
        // where they lie.
        let near = |p: f64| (0..n).find(|&j| (p - kappa[j]).abs() <= tol);
        let interior_oval = |p: f64| kappa.partition_point(|&x| x < p);
        let mut before = vec![0usize; n - 1];
        let mut oval_of = vec![0usize; n - 1];
        for (i, &p) in gammas.iter().chain(&deltas).enumerate() {
            if near(p).is_none() {
                let o = interior_oval(p);
                before[o - 1] += 1;
                oval_of[i] = o;
            }
        }
        let mut after = before.clone();
        let mut place = |i: usize, o: usize, after: &mut Vec<usize>| {
            oval_of[i] = o;
            after[o - 1] += 1;
        };

        let mut collisions = Vec::new();
        let mut lone = Vec::new();
        for (gi, &g) in gammas.iter().enumerate() {
            match near(g) {
                Some(0) => place(gi, 1, &mut after),
                Some(j) if j == n - 1 => place(gi, n - 1, &mut after),
                Some(j) => match deltas.iter().position(|&d| (d - kappa[j]).abs() <= tol) {
                    Some(di) => {
                        place(gi, j, &mut after);
                        place(k + di, j + 1, &mut after);
                        collisions.push(Collision {
                            kappa_index: j,
                            gamma_index: gi,
                            delta_index: di,
                        });
                    }
                    None => lone.push((gi, j)),
                },
                None => {}
            }
        }
        for (di, &d) in deltas.iter().enumerate() {
            if collisions.iter().any(|c| c.delta_index == di) {
                continue;
            }
            match near(d) {
                Some(0) => place(k + di, 1, &mut after),
                Some(j) if j == n - 1 => place(k + di, n - 1, &mut after),
                Some(j) => lone.push((k + di, j)),
                None => {}
            }
        }
        // a single point within rounding of a double point takes whichever
        // neighbouring oval is still empty
        for (i, j) in lone {
            let o = if after[j - 1] == 0 { j } else { j + 1 };
            place(i, o, &mut after);
        }
        if after.iter().any(|&c| c != 1) {
            return Err(Error::Occupancy { counts: after });
        }
        Ok(Divisor {
            k,
            gammas,
            deltas,
            gamma_corrections,
            delta_corrections,
            t,
            oval_of,
            generic: collisions.is_empty(),
            collisions,
            ovals: OvalAssignment { before, after },
        })
    }

    pub(crate) fn extended_gammas(&self) -> Vec<Dd> {
        self.gammas
            .iter()
            .zip(&self.gamma_corrections)
            .map(|(&h, &l)| Dd::from(h) + Dd::from(l))
            .collect()
    }

    pub(crate) fn extended_deltas(&self) -> Vec<Dd> {
        self.deltas
            .iter()
            .zip(&self.delta_corrections)
            .map(|(&h, &l)| Dd::from(h) + Dd::from(l))
            .collect()
    }

    /// Largest pointwise distance to `other`; infinite when the shapes differ.
    pub fn distance(&self, other: &Divisor) -> f64 {
        if self.gammas.len() != other.gammas.len() || self.deltas.len() != other.deltas.len() {
            return f64::INFINITY;
        }
        self.gammas
            .iter()
            .zip(&other.gammas)
            .chain(self.deltas.iter().zip(&other.deltas))
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }
}

/// Zeros of the vacuum wavefunction: spectrum of the Jacobi matrix with its
/// first row and column removed.
pub fn vacuum_divisor(data: &SolitonData, t: &TimeVector) -> Vec<f64> {
    let state = jacobi_matrix(data, t);
    state.trailing_block_eigenvalues(data.len() - 1)
}

fn level_points(state: &TodaState, k: usize) -> (Vec<f64>, Vec<f64>) {
    let n = state.dim();
    (
        state.leading_block_eigenvalues(k),
        state.trailing_block_eigenvalues(n - k - 1),
    )
}

/// The `k`-compatible divisor at time `t`. `k = 0` gives the vacuum divisor
/// on the minus sheet.
///
/// Points next to a phase are refined in double-double, since the inverse
/// map depends on their distance to that phase.
pub fn compatible_divisor(data: &SolitonData, k: usize, t: &TimeVector) -> Result<Divisor> {
    check_order(k, 0, data.len() - 1)?;
    let state = jacobi_matrix(data, t);
    let mut fine = FineEntries::new(data, t);
    let (gammas, deltas) = fine.level_points(&state, k);
    Divisor::from_extended_points(data.kappa(), k, &gammas, &deltas, t.clone())
}

/// Level points in double-double. Points within `1e-4` of the phase spread
/// from a phase get Newton steps on the double-double minors; the entries
/// are computed on first use.
struct FineEntries<'a> {
    data: &'a SolitonData,
    t: &'a TimeVector,
    entries: Option<(Vec<Dd>, Vec<Dd>)>,
}

impl<'a> FineEntries<'a> {
    fn new(data: &'a SolitonData, t: &'a TimeVector) -> Self {
        FineEntries { data, t, entries: None }
    }

    fn level_points(&mut self, state: &TodaState, k: usize) -> (Vec<Dd>, Vec<Dd>) {
        let (gammas, deltas) = level_points(state, k);
        let kappa = self.data.kappa();
        let close = 1e-4 * self.data.spread();
        let near_phase = |p: f64| kappa.iter().any(|&z| (p - z).abs() < close);
        let lift = |v: &[f64]| v.iter().map(|&x| Dd::from(x)).collect::<Vec<_>>();
        let (mut fine_gammas, mut fine_deltas) = (lift(&gammas), lift(&deltas));
        if gammas.iter().chain(&deltas).any(|&p| near_phase(p)) {
            let (data, t) = (self.data, self.t);
            let (a, b) = self.entries.get_or_insert_with(|| jacobi_matrix_extended(data, t));
            let n = b.len();
            let a_rev: Vec<Dd> = a.iter().rev().copied().collect();
            let b_rev: Vec<Dd> = b.iter().rev().copied().collect();
            for p in fine_gammas.iter_mut().filter(|p| near_phase(p.hi)) {
                *p = newton_root(a, b, k, *p);
            }
            for p in fine_deltas.iter_mut().filter(|p| near_phase(p.hi)) {
                *p = newton_root(&a_rev, &b_rev, n - k - 1, *p);
            }
        }
        (fine_gammas, fine_deltas)
    }
}

/// Newton refinement of a root of the leading order-`m` minor of the
/// tridiagonal matrix with diagonal `b` and off-diagonal products `a`.
fn newton_root(a: &[Dd], b: &[Dd], m: usize, start: Dd) -> Dd {
    let mut z = start;
    for _ in 0..3 {
        let (mut p_prev, mut p) = (Dd::ZERO, Dd::ONE);
        let (mut q_prev, mut q) = (Dd::ZERO, Dd::ZERO);
        for i in 0..m {
            let c = if i == 0 { Dd::ZERO } else { a[i - 1] };
            let shift = z - b[i];
            let p_next = shift * p - c * p_prev;
            let q_next = p + shift * q - c * q_prev;
            (p_prev, p, q_prev, q) = (p, p_next, q, q_next);
        }
        if q.hi == 0.0 || !q.hi.is_finite() {
            break;
        }
        z -= p / q;
    }
    z
}

/// Soliton data with the given `k`-compatible divisor at `t = 0`. At a double
/// point the colliding pair is resolved by the symmetric limit
/// `gamma + eps`, `delta - eps`, which contributes a factor `-1`.
pub fn invert_divisor(kappa: &[f64], d: &Divisor) -> Result<SolitonData> {
    let n = kappa.len();
    if d.gammas.len() + d.deltas.len() != n - 1 {
        return Err(Error::MalformedDivisor("divisor does not match the phase count".into()));
    }
    let (gammas, deltas) = (d.extended_gammas(), d.extended_deltas());
    let mut weights = Vec::with_capacity(n);
    for j in 0..n {
        let hit = d.collisions.iter().find(|c| c.kappa_index == j);
        let kj = Dd::from(kappa[j]);
        let mut w = if hit.is_some() { -Dd::ONE } else { Dd::ONE };
        for (s, &delta) in deltas.iter().enumerate() {
            if hit.is_none_or(|c| c.delta_index != s) {
                w *= kj - delta;
            }
        }
        for (r, &gamma) in gammas.iter().enumerate() {
            if hit.is_none_or(|c| c.gamma_index != r) {
                w = w / (kj - gamma);
            }
        }
        for (l, &other) in kappa.iter().enumerate() {
            if l != j {
                w = w / (kj - Dd::from(other));
            }
        }
        let w = w.to_f64();
        if !(w > 0.0 && w.is_finite()) {
            return Err(Error::UnrealizableDivisor { index: j + 1, value: w });
        }
        weights.push(w);
    }
    SolitonData::new(kappa, &weights)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivisorResiduals {
    /// Level recursion between the `k-1` and `k` divisors at probe points.
    pub recursion: f64,
    /// Vacuum-to-level relation at every phase.
    pub vacuum_relation: f64,
    /// `tau_1` recovered from each phase and the vacuum divisor.
    pub tau1: f64,
    /// Two-term relations at the top level; `None` unless `k = n - 1`.
    pub top_level: Option<f64>,
}

impl DivisorResiduals {
    pub fn max(&self) -> f64 {
        [
            self.recursion,
            self.vacuum_relation,
            self.tau1,
            self.top_level.unwrap_or(0.0),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

fn prod_diff(z: f64, points: &[f64]) -> f64 {
    points.iter().map(|p| z - p).product()
}

fn prod_diff_fine(z: f64, points: &[Dd]) -> f64 {
    let z = Dd::from(z);
    points.iter().fold(Dd::ONE, |acc, &p| acc * (z - p)).to_f64()
}

/// Relative mismatch `|x - y| / max(|x|, |y|, floor)`.
fn rel(x: f64, y: f64, floor: f64) -> f64 {
    let scale = x.abs().max(y.abs()).max(floor);
    if scale == 0.0 {
        0.0
    } else {
        (x - y).abs() / scale
    }
}

/// Checks the divisor identities at order `k` and time `t`. Products that
/// vanish on a double point are compared against a floor of
/// `1e-6 * spread^degree`, so rounding at a collision does not dominate.
pub fn divisor_identity_residuals(data: &SolitonData, k: usize, t: &TimeVector) -> Result<DivisorResiduals> {
    let n = data.len();
    check_order(k, 1, n - 1)?;
    let kappa = data.kappa();
    let spread = data.spread();
    let state = jacobi_matrix(data, t);
    let mut fine = FineEntries::new(data, t);
    let (g_k, d_k) = fine.level_points(&state, k);
    let (g_prev, d_prev) = fine.level_points(&state, k - 1);
    let a = &state.a_offdiag;

    let recursion = probe_points(kappa)
        .into_iter()
        .map(|z| {
            let lhs = prod_diff(z, kappa);
            let first = prod_diff_fine(z, &g_k) * prod_diff_fine(z, &d_prev);
            let second = a[k - 1] * prod_diff_fine(z, &g_prev) * prod_diff_fine(z, &d_k);
            let scale = lhs.abs().max(first.abs()).max(second.abs());
            (lhs - (first - second)).abs() / scale
        })
        .fold(0.0, f64::max);

    let (_, b) = fine.level_points(&state, 0);
    let a_prod: f64 = a[..k].iter().product();
    let floor = 1e-6 * spread.powi((n - 1 + k) as i32);
    let vacuum_relation = kappa
        .iter()
        .map(|&z| {
            rel(
                prod_diff_fine(z, &b) * prod_diff_fine(z, &g_k),
                a_prod * prod_diff_fine(z, &d_k),
                floor,
            )
        })
        .fold(0.0, f64::max);

    let log_tau1 = tau(data, 1, t)?.log_magnitude;
    let zero = TimeVector::zero();
    let (_, b0) = FineEntries::new(data, &zero).level_points(&jacobi_matrix(data, &zero), 0);
    let tau1 = kappa
        .iter()
        .map(|&z| {
            let zd = Dd::from(z);
            let log_rhs: f64 = t.phase(z)
                + b0.iter()
                    .zip(&b)
                    .map(|(&p0, &p)| ((zd - p0).to_f64() / (zd - p).to_f64()).ln())
                    .sum::<f64>();
            (log_tau1 - log_rhs).abs()
        })
        .fold(0.0, f64::max);

    let top_level = if k == n - 1 {
        let rref = rref_coefficients(data, k)?;
        let mut x: Vec<f64> = rref.iter().map(|row| row[0]).collect();
        x.push(1.0);
        let shift = kappa.iter().map(|&z| t.phase(z)).fold(f64::NEG_INFINITY, f64::max);
        let e = |z: f64| (t.phase(z) - shift).exp();
        let floor = 1e-6 * spread.powi(k as i32);
        let worst = (0..n - 1)
            .map(|i| {
                let left = x[i + 1] * e(kappa[i]) * prod_diff_fine(kappa[i], &g_k);
                let right = x[i] * e(kappa[i + 1]) * prod_diff_fine(kappa[i + 1], &g_k);
                let scale = (e(kappa[i]) * x[i + 1]).max(e(kappa[i + 1]) * x[i]);
                rel(left, -right, floor * scale)
            })
            .fold(0.0, f64::max);
        Some(worst)
    } else {
        None
    };

    Ok(DivisorResiduals {
        recursion,
        vacuum_relation,
        tau1,
        top_level,
    })
}

/// Default finite-difference step for divisor velocities.
pub fn default_step(t: &TimeVector) -> f64 {
    1e-5 * t.sup_norm().max(1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DivisorFlow {
    pub state: TodaState,
    /// 1-based index of the phase used as evaluation point.
    pub anchor: usize,
}

/// Rebuilds the Jacobi matrix at `t` from the divisors of all levels,
/// evaluated at one phase `kappa_anchor`:
///
/// `a_k = Delta_hat_k Delta_{n-k} / (Delta_hat_{k-1} Delta_{n-k-1})`,
/// `b_k = kappa + d_x log Delta_hat_{k-1} - d_x log Delta_{n-k}`,
///
/// each minor written as a product over its divisor points and the
/// x-velocities taken by central differences with step `h`.
///
/// The requested anchor is used if no divisor point sits on it; otherwise,
/// or when `anchor` is `None`, the phase farthest from every divisor point is
/// used.
pub fn toda_from_divisor_flow(
    data: &SolitonData,
    anchor: Option<usize>,
    t: &TimeVector,
    h: f64,
) -> Result<DivisorFlow> {
    let n = data.len();
    if let Some(j) = anchor {
        check_order(j, 1, n)?;
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidStep(h));
    }
    let kappa = data.kappa();
    let plus_t = t.shifted(1, h);
    let minus_t = t.shifted(1, -h);
    let step = plus_t.get(1) - minus_t.get(1);

    let now = jacobi_matrix(data, t);
    let plus = jacobi_matrix(data, &plus_t);
    let minus = jacobi_matrix(data, &minus_t);
    // points next to a phase are differenced and evaluated in double-double,
    // since their distance to the anchor can be far below the step
    let mut fine_now = FineEntries::new(data, t);
    let mut fine_plus = FineEntries::new(data, &plus_t);
    let mut fine_minus = FineEntries::new(data, &minus_t);
    let levels: Vec<(Vec<Dd>, Vec<Dd>)> = (0..n).map(|k| fine_now.level_points(&now, k)).collect();
    let step = Dd::from(step);
    let mut velocity = |k: usize| {
        let (gp, dp) = fine_plus.level_points(&plus, k);
        let (gm, dm) = fine_minus.level_points(&minus, k);
        let v = |p: &[Dd], m: &[Dd]| p.iter().zip(m).map(|(&x, &y)| (x - y) / step).collect::<Vec<Dd>>();
        (v(&gp, &gm), v(&dp, &dm))
    };

    let clearance = |j: usize| {
        levels
            .iter()
            .flat_map(|(g, d)| g.iter().chain(d))
            .map(|p| (p.hi - kappa[j]).abs())
            .fold(f64::INFINITY, f64::min)
    };
    let tol = data.collision_tolerance();
    let chosen = match anchor {
        Some(j) if clearance(j - 1) > tol => j - 1,
        _ => {
            let (best, gap) = (0..n)
                .map(|j| (j, clearance(j)))
                .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
            if gap <= tol {
                return Err(Error::AnchorUnavailable);
            }
            best
        }
    };
    let z = kappa[chosen];
    let zd = Dd::from(z);

    let a_offdiag = (1..n)
        .map(|k| {
            let (g_k, d_k) = &levels[k];
            let (g_prev, d_prev) = &levels[k - 1];
            prod_diff_fine(z, g_k) * prod_diff_fine(z, d_prev) / (prod_diff_fine(z, g_prev) * prod_diff_fine(z, d_k))
        })
        .collect();
    let b_diag = (1..=n)
        .map(|k| {
            let (g_prev, d_prev) = &levels[k - 1];
            let (vg, vd) = velocity(k - 1);
            let from_d = d_prev
                .iter()
                .zip(&vd)
                .fold(Dd::ZERO, |acc, (&p, &v)| acc + v / (zd - p));
            let from_g = g_prev
                .iter()
                .zip(&vg)
                .fold(Dd::ZERO, |acc, (&p, &v)| acc + v / (zd - p));
            (zd + from_d - from_g).to_f64()
        })
        .collect();
    Ok(DivisorFlow {
        state: TodaState::new(a_offdiag, b_diag, t.clone())?,
        anchor: chosen + 1,
    })
}
