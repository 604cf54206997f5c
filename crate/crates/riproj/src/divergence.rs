//! Divergences between finite measures and gains over convex mixture hulls.
//!
//! The central quantity is the description gain: how many nats per outcome a
//! code built on one measure saves over another, in expectation under a
//! third. For finite measures it carries a linear mass correction so that it
//! stays meaningful (and the associated divergence stays nonnegative) off
//! the probability simplex. [`gain_to_hull`] maximizes the gain over the
//! convex hull of a family by multiplicative-weights ascent and reports a
//! certified upper bound from a linearization gap, so callers get two-sided
//! brackets rather than a bare local optimum.
//!
//! Pointwise conventions for log-ratio integrands at a point the weighting
//! measure charges: `ln(pos/0) = +inf`, `ln(0/pos) = -inf`, and `ln(0/0) =
//! 0` — two measures that both vanish at a point describe it equally
//! (badly), so switching between them neither gains nor loses there. The
//! last rule is what keeps gains finite and stable when clamped density
//! tails fall inside a heavy-tailed reference's support.
//!
//! Alongside the gains live two pointwise functionals used to compare
//! near-optimal mixtures: the Itakura-Saito functional and the metric
//! [`mp_metric`] on positive densities whose square is controlled by gains
//! via [`three_point_bound`]. [`g_transform`] converts that squared metric
//! back to an exact bound on log-density ratios.

use crate::measures::{integrate, mix, GridMeasure, MixtureWeights, ParametricFamily};
use crate::xreal::ExtReal;
use crate::{Error, Result};

fn check_same_grid(a: &GridMeasure, b: &GridMeasure, what: &str) -> Result<()> {
    if !crate::measures::Grid::same(a.grid(), b.grid()) {
        return Err(Error::GridMismatch(format!(
            "{what}: measures live on different grids"
        )));
    }
    Ok(())
}

/// Is grid point `i` charged by `p` (nonzero density times weight)?
pub(crate) fn charged(p: &GridMeasure, i: usize) -> bool {
    p.point_mass(i) != 0.0
}

/// `integral of ln(num/den) dP` under the module's pointwise conventions.
pub(crate) fn log_ratio_integral(
    p: &GridMeasure,
    num: &GridMeasure,
    den: &GridMeasure,
) -> Result<ExtReal> {
    check_same_grid(p, num, "log-ratio integral")?;
    check_same_grid(p, den, "log-ratio integral")?;
    let n = p.len();
    let mut f = vec![0.0f64; n];
    for i in 0..n {
        if !charged(p, i) {
            continue;
        }
        let a = num.density()[i];
        let b = den.density()[i];
        f[i] = if a > 0.0 && b > 0.0 {
            (a / b).ln()
        } else if a > 0.0 {
            f64::INFINITY
        } else if b > 0.0 {
            f64::NEG_INFINITY
        } else {
            0.0
        };
    }
    integrate(&f, p)
}

/// Divergence of one finite measure from another:
/// `integral of ln(dA/dB) dA - (A(total) - B(total))`.
///
/// Nonnegative for arbitrary finite measures, zero only when the measures
/// coincide, `+inf` when `A` charges a point `B` misses.
pub fn kl(a: &GridMeasure, b: &GridMeasure) -> Result<ExtReal> {
    let integral = log_ratio_integral(a, a, b)?;
    Ok(integral.sub_f64(a.mass() - b.mass()))
}

/// Description gain of replacing `q` with `q_new`, in expectation under `p`:
/// `integral of ln(q_new/q) dP - (Q_new(total) - Q(total))`.
///
/// Positive means `q_new` describes `p`-data more efficiently than `q`. When
/// both divergences from `p` are finite this equals `kl(p, q) - kl(p,
/// q_new)`, but it stays finite and meaningful in many cases where the
/// individual divergences are infinite. `Undefined` when the integral has
/// divergent contributions of both signs.
pub fn description_gain(
    p: &GridMeasure,
    q: &GridMeasure,
    q_new: &GridMeasure,
) -> Result<ExtReal> {
    let integral = log_ratio_integral(p, q_new, q)?;
    Ok(integral.sub_f64(q_new.mass() - q.mass()))
}

/// Options for the mixture-hull ascent in [`gain_to_hull`].
#[derive(Debug, Clone, Copy)]
pub struct HullOpts {
    /// Multiplicative-weights step size.
    pub step: f64,
    /// Iteration cap.
    pub max_iters: usize,
    /// Optimality gap below which the result is reported as exact.
    pub tol: f64,
    /// Objective value past which the ascent is declared divergent.
    pub divergence_cutoff: f64,
}

impl Default for HullOpts {
    fn default() -> Self {
        HullOpts {
            step: 0.5,
            max_iters: 5000,
            tol: 1e-7,
            divergence_cutoff: 1e12f64.ln(),
        }
    }
}

/// Epistemic status of an extended-real result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GainStatus {
    /// Optimality gap at tolerance: the value is the supremum (up to tol).
    Exact,
    /// Ascent stopped early; the value is a valid lower bound and
    /// `certified_upper` still brackets the supremum.
    LowerBound,
    /// The supremum is infinite (detected by objective blow-up or by the
    /// baseline vanishing on charged points).
    Diverged,
    /// Every candidate gain was undefined; by the convention that undefined
    /// values never attain a supremum, the reported value is `-inf`.
    Undefined,
}

/// Result of maximizing the description gain over a convex hull.
#[derive(Debug, Clone, serde::Serialize)]
pub struct GainReport {
    /// Gain achieved by the reported witness (a lower bound on the
    /// supremum), or the infinite value in the degenerate cases.
    pub value: ExtReal,
    /// Witness mixture weights attaining `value`, when an optimization ran.
    pub attained_at: Option<MixtureWeights>,
    /// Certified upper bound on the supremum (achieved value plus
    /// linearization gap), when available.
    pub certified_upper: Option<ExtReal>,
    pub status: GainStatus,
    /// Final linearization gap; meaningful for `Exact` and `LowerBound`.
    pub gap: f64,
    pub iterations: usize,
}

impl serde::Serialize for MixtureWeights {
    fn serialize<S: serde::Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("MixtureWeights", 2)?;
        st.serialize_field("indices", self.indices())?;
        st.serialize_field("weights", self.weights())?;
        st.end()
    }
}

/// Outcome of [`maximize_log_mixture`].
#[derive(Debug, Clone)]
pub struct LogMixOptimum {
    /// Dense weights over family members, summing to one.
    pub weights: Vec<f64>,
    /// Achieved objective (see [`maximize_log_mixture`]).
    pub objective: f64,
    /// Linearization gap certifying `objective` is within `gap` of the
    /// supremum over the hull.
    pub gap: f64,
    pub converged: bool,
    pub diverged: bool,
    pub iterations: usize,
}

/// Maximizes `w -> integral of ln(q_w) dP - Q_w(total)` over mixture weights
/// `w` in the simplex, where `q_w` is the `w`-mixture of the family and the
/// integral runs over the charged points of `p` that at least one member
/// covers (points no member covers contribute the same to every mixture and
/// are left to the caller's gain accounting).
///
/// The objective is concave; ascent is by multiplicative weights on the
/// exact gradient. The returned `gap` is the linearization slack
/// `max_members (directional derivative) - (achieved)`, which upper-bounds
/// the remaining suboptimality for any concave objective, so `objective +
/// gap >= supremum` holds regardless of where the ascent stopped.
///
/// Errors with [`Error::Precondition`] when no charged point of `p` is
/// covered by any member (the objective is vacuous).
pub fn maximize_log_mixture(
    p: &GridMeasure,
    family: &ParametricFamily,
    opts: &HullOpts,
) -> Result<LogMixOptimum> {
    maximize_mixture_core(p, family, opts, true)
}

/// Maximizes `w -> integral of ln(q_w) dP` alone, without the mixture-mass
/// correction: the plain log-loss criterion, whose maximizer over a hull of
/// unequal-mass members differs from the mass-corrected one. Constraint-set
/// checks use it to certify projections defined by `min integral of
/// ln(p/q) dP`. The ascent here is the fully corrective multiplicative
/// update (monotone for this criterion); the certified `gap` semantics are
/// the same as for [`maximize_log_mixture`].
pub fn maximize_plain_log_mixture(
    p: &GridMeasure,
    family: &ParametricFamily,
    opts: &HullOpts,
) -> Result<LogMixOptimum> {
    maximize_mixture_core(p, family, opts, false)
}

fn maximize_mixture_core(
    p: &GridMeasure,
    family: &ParametricFamily,
    opts: &HullOpts,
    mass_term: bool,
) -> Result<LogMixOptimum> {
    if family.is_empty() {
        return Err(Error::Domain("hull of an empty family".into()));
    }
    check_same_grid(p, family.member(0), "hull objective")?;
    let n_members = family.len();

    // Work on the charged points of p that the hull can describe at all.
    let support: Vec<usize> = (0..p.len())
        .filter(|&i| charged(p, i) && family.members().iter().any(|m| m.density()[i] > 0.0))
        .collect();
    if support.is_empty() {
        return Err(Error::Precondition(
            "no charged point of the reference is covered by any family member".into(),
        ));
    }
    let pw: Vec<f64> = support.iter().map(|&i| p.point_mass(i)).collect();
    let covered_mass = crate::measures::neumaier_sum(pw.iter().copied());

    // Member densities on the support, member-major for the gradient pass.
    let mut dens: Vec<Vec<f64>> = Vec::with_capacity(n_members);
    for m in family.members() {
        dens.push(support.iter().map(|&i| m.density()[i]).collect());
    }
    let masses: Vec<f64> = if mass_term {
        family.members().iter().map(|m| m.mass()).collect()
    } else {
        vec![0.0; n_members]
    };

    let mut log_w = vec![-(n_members as f64).ln(); n_members];
    let mut w = vec![1.0 / n_members as f64; n_members];
    let mut qw = vec![0.0f64; support.len()];
    let mut grad = vec![0.0f64; n_members];
    let mut converged = false;
    let mut diverged = false;
    let mut iterations = opts.max_iters;
    let mut objective = f64::NEG_INFINITY;
    let mut gap = f64::INFINITY;

    for iter in 0..opts.max_iters {
        for (k, q) in qw.iter_mut().enumerate() {
            let mut s = 0.0;
            for (theta, d) in dens.iter().enumerate() {
                s += w[theta] * d[k];
            }
            *q = s;
        }
        let mix_mass: f64 = w.iter().zip(&masses).map(|(wi, mi)| wi * mi).sum();
        objective = crate::measures::neumaier_sum(
            qw.iter().zip(&pw).map(|(q, pwk)| pwk * q.ln()),
        ) - mix_mass;

        // grad[theta] = integral of (q_theta/q_w) dP over the support, minus
        // the member's mass. The w-weighted average of the gradient is
        // covered_mass - mix_mass, and the max over members linearizes the
        // whole hull from above.
        for (theta, d) in dens.iter().enumerate() {
            let mut s = 0.0;
            for k in 0..qw.len() {
                if d[k] != 0.0 {
                    s += pw[k] * d[k] / qw[k];
                }
            }
            grad[theta] = s - masses[theta];
        }
        let achieved = covered_mass - mix_mass;
        let best = grad.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        gap = (best - achieved).max(0.0);

        if objective > opts.divergence_cutoff {
            diverged = true;
            iterations = iter + 1;
            break;
        }
        if gap <= opts.tol {
            converged = true;
            iterations = iter + 1;
            break;
        }

        if mass_term {
            // Damped exponentiated-gradient step; the clamp keeps a single
            // iteration from slamming the weights when member densities
            // barely overlap and the gradient's dynamic range explodes.
            for theta in 0..n_members {
                log_w[theta] += (opts.step * (grad[theta] - achieved)).clamp(-2.0, 2.0);
            }
        } else {
            // Fully corrective multiplicative update w <- w * grad / average:
            // the classic mixture-weight fixed point, monotone for the plain
            // criterion and exact in one step on disjoint supports. The
            // gradients are nonnegative here (no mass term is subtracted).
            let log_cov = covered_mass.ln();
            for theta in 0..n_members {
                log_w[theta] += if grad[theta] > 0.0 {
                    grad[theta].ln() - log_cov
                } else {
                    f64::NEG_INFINITY
                };
            }
        }
        let log_norm = {
            let m = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            m + crate::measures::neumaier_sum(log_w.iter().map(|l| (l - m).exp())).ln()
        };
        for (theta, lw) in log_w.iter_mut().enumerate() {
            *lw -= log_norm;
            w[theta] = lw.exp();
        }
        let s = crate::measures::neumaier_sum(w.iter().copied());
        for wi in w.iter_mut() {
            *wi /= s;
        }
    }

    Ok(LogMixOptimum {
        weights: w,
        objective,
        gap,
        converged,
        diverged,
        iterations,
    })
}

/// Supremum of the description gain `description_gain(p, q, .)` over the
/// convex hull of `family`, with a certified bracket.
///
/// When `q` vanishes at a point `p` charges, the supremum is reported as
/// `+inf` immediately. Otherwise the ascent runs and `value` is the gain of
/// the best mixture found, with `certified_upper = value + gap` bounding the
/// supremum from above; `value` is `-inf` when the hull cannot cover part of
/// the support of `p` (every mixture then loses infinitely against `q`).
pub fn gain_to_hull(
    p: &GridMeasure,
    q: &GridMeasure,
    family: &ParametricFamily,
    opts: &HullOpts,
) -> Result<GainReport> {
    check_same_grid(p, q, "gain to hull")?;
    if (0..p.len()).any(|i| charged(p, i) && q.density()[i] == 0.0) {
        return Ok(GainReport {
            value: ExtReal::PosInf,
            attained_at: None,
            certified_upper: Some(ExtReal::PosInf),
            status: GainStatus::Diverged,
            gap: 0.0,
            iterations: 0,
        });
    }
    let (weights, gap, diverged, converged, iterations) =
        match maximize_log_mixture(p, family, opts) {
            Ok(opt) => (
                opt.weights,
                opt.gap,
                opt.diverged,
                opt.converged,
                opt.iterations,
            ),
            // Hull misses the entire support: every mixture's gain is the
            // same -inf; any witness attains it.
            Err(Error::Precondition(_)) => {
                (vec![1.0 / family.len() as f64; family.len()], 0.0, false, true, 0)
            }
            Err(e) => return Err(e),
        };
    let witness = MixtureWeights::from_dense(weights)?;
    let best = mix(family, &witness)?;
    let value = description_gain(p, q, &best)?;
    if diverged {
        return Ok(GainReport {
            value: ExtReal::PosInf,
            attained_at: Some(witness),
            certified_upper: Some(ExtReal::PosInf),
            status: GainStatus::Diverged,
            gap,
            iterations,
        });
    }
    if value.is_undefined() {
        // Unreachable after the vanishing-baseline check (a +inf part needs
        // q to vanish on a charged point), kept as a honest fallback: an
        // undefined gain never attains the supremum.
        return Ok(GainReport {
            value: ExtReal::NegInf,
            attained_at: None,
            certified_upper: Some(ExtReal::NegInf),
            status: GainStatus::Undefined,
            gap,
            iterations,
        });
    }
    let certified_upper = value.add(ExtReal::Finite(gap));
    Ok(GainReport {
        value,
        attained_at: Some(witness),
        certified_upper: Some(certified_upper),
        status: if converged {
            GainStatus::Exact
        } else {
            GainStatus::LowerBound
        },
        gap,
        iterations,
    })
}

/// Shared integrand walk for the positive-density functionals: applies `f`
/// to each charged density pair, erroring when exactly one density vanishes
/// on a charged point (shared zeros are outside both supports and contribute
/// nothing).
fn positive_pair_integral(
    f: &GridMeasure,
    g: &GridMeasure,
    p: &GridMeasure,
    what: &'static str,
    pointwise: impl Fn(f64, f64) -> f64,
) -> Result<ExtReal> {
    check_same_grid(p, f, what)?;
    check_same_grid(p, g, what)?;
    let n = p.len();
    let mut integrand = vec![0.0f64; n];
    for i in 0..n {
        if !charged(p, i) {
            continue;
        }
        let a = f.density()[i];
        let b = g.density()[i];
        integrand[i] = if a == b {
            0.0
        } else if a > 0.0 && b > 0.0 {
            pointwise(a, b)
        } else {
            return Err(Error::ZeroOnSupport { what, index: i });
        };
    }
    integrate(&integrand, p)
}

/// Squared distance between positive densities `f` and `g` under `p`:
/// `(1/2) integral of [ln(m/f) + ln(m/g)] dP` with `m = (f + g)/2`.
///
/// The integrand is pointwise nonnegative (a Jensen gap of the logarithm
/// at the midpoint). Errors when exactly one of the densities vanishes on a
/// point `p` charges.
pub fn mp_metric_sq(f: &GridMeasure, g: &GridMeasure, p: &GridMeasure) -> Result<f64> {
    let v = positive_pair_integral(f, g, p, "squared density metric", |a, b| {
        let m = 0.5 * (a + b);
        0.5 * ((m / a).ln() + (m / b).ln())
    })?;
    Ok(v
        .expect_finite("squared density metric is finite for positive densities")
        .max(0.0))
}

/// Distance between positive densities: square root of [`mp_metric_sq`].
/// Symmetric, zero iff the densities agree on the support of `p`, and
/// satisfies the triangle inequality.
pub fn mp_metric(f: &GridMeasure, g: &GridMeasure, p: &GridMeasure) -> Result<f64> {
    Ok(mp_metric_sq(f, g, p)?.sqrt())
}

/// Squared distance between two positive scalars under a unit point mass:
/// `ln((x+y)/2) - (ln x)/2 - (ln y)/2`.
pub fn point_metric_sq(x: f64, y: f64) -> Result<f64> {
    if !(x > 0.0 && y > 0.0) || !x.is_finite() || !y.is_finite() {
        return Err(Error::Domain(format!(
            "point metric needs positive finite scalars, got ({x}, {y})"
        )));
    }
    Ok((0.5 * (x + y)).ln() - 0.5 * x.ln() - 0.5 * y.ln())
}

/// Itakura-Saito functional `integral of (f/g - 1 - ln(f/g)) dP`.
///
/// Nonnegative; zero iff `f = g` on the support of `p`; errors when exactly
/// one density vanishes on a charged point. Taking `f` to be a candidate
/// density and `g` the density of `p` itself recovers `kl(p, f-measure)`
/// exactly, including mass corrections.
pub fn itakura_saito(f: &GridMeasure, g: &GridMeasure, p: &GridMeasure) -> Result<ExtReal> {
    positive_pair_integral(f, g, p, "itakura-saito", |a, b| {
        let r = a / b;
        r - 1.0 - r.ln()
    })
}

/// Converts a squared density-metric value `t` into the exact log-ratio gap
/// it encodes for a pair of positive scalars:
/// `2t + 2 ln(1 + sqrt(1 - exp(-2t)))`.
///
/// For `x, y > 0`, `g_transform(point_metric_sq(x, y)) = |ln x - ln y|`
/// exactly. Concave, zero at zero, and `g_transform(t) >= 2t` everywhere.
pub fn g_transform(t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!(
            "squared distance must be nonnegative, got {t}"
        )));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    Ok(2.0 * t + 2.0 * (1.0 + (-(-2.0 * t).exp_m1()).sqrt()).ln())
}

/// Both sides of the three-point inequality tying the squared density
/// metric between two candidates to their description gains to a common
/// hull: `mp_metric_sq(q1, q2) <= (gain1 + gain2)/2`.
#[derive(Debug, Clone)]
pub struct ThreePointCheck {
    /// Squared metric between the two candidate densities under `p`.
    pub lhs: f64,
    /// Half the sum of the two hull gains.
    pub rhs: ExtReal,
    /// Whether both gain reports were exact (the inequality is asserted only
    /// then; lower-bound gains could understate the right side).
    pub both_exact: bool,
    pub gain1: GainReport,
    pub gain2: GainReport,
}

/// Evaluates both sides of the three-point inequality for candidates `q1`,
/// `q2` against the hull of `family` under `p`.
pub fn three_point_bound(
    q1: &GridMeasure,
    q2: &GridMeasure,
    p: &GridMeasure,
    family: &ParametricFamily,
    opts: &HullOpts,
) -> Result<ThreePointCheck> {
    let lhs = mp_metric_sq(q1, q2, p)?;
    let gain1 = gain_to_hull(p, q1, family, opts)?;
    let gain2 = gain_to_hull(p, q2, family, opts)?;
    let rhs = match gain1.value.add(gain2.value) {
        ExtReal::Finite(s) => ExtReal::Finite(0.5 * s),
        other => other,
    };
    let both_exact = gain1.status == GainStatus::Exact && gain2.status == GainStatus::Exact;
    Ok(ThreePointCheck {
        lhs,
        rhs,
        both_exact,
        gain1,
        gain2,
    })
}
