//! E-statistics: nonnegative test statistics whose integral under every
//! null-family member stays at or below one.
//!
//! The canonical construction is the likelihood ratio of the data measure
//! against its projection onto the null hull ([`make_estat`]), which is the
//! strongest such statistic in the log-expectation order. The module
//! verifies candidates against the family generators (linearity of the
//! integral in the measure makes generator checks sufficient for the whole
//! hull), compares statistics by the expected log-ratio ([`compare_strength`],
//! which deliberately surfaces `incomparable` when the comparison integral
//! is undefined), and simulates product e-processes with exactly
//! reproducible inverse-CDF sampling.
//!
//! Pointwise conventions: `make_estat` uses `0/0 := 0` and `pos/0 := +inf`;
//! strength comparisons use `ln(0/c) = -inf`, `ln(c/0) = +inf`, and equal
//! values (including two zeros or two infinities) contribute nothing.

use crate::measures::{integrate, GridMeasure, Grid, ParametricFamily};
use crate::xreal::ExtReal;
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

/// Where an e-statistic came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EStatSource {
    /// Pointwise ratio of a data density to a (near-)projection density.
    LikelihoodRatio,
    /// Supplied directly.
    Explicit,
}

/// Result of checking an e-statistic against family generators.
#[derive(Debug, Clone, serde::Serialize)]
pub struct VerificationRecord {
    /// Integral of the statistic under each generator.
    pub integrals: Vec<ExtReal>,
    /// Largest integral minus one; infinite when some integral diverges.
    pub sup_slack: f64,
    /// Index of the generator attaining the largest integral.
    pub worst_member: usize,
    /// `sup_slack <= 1e-9`.
    pub passed: bool,
}

/// Tolerance on the generator integrals when verifying.
pub const VERIFY_TOL: f64 = 1e-9;

/// A nonnegative statistic on a grid; entries may be `+inf` (flagged —
/// a valid e-statistic must put data mass zero on such points, which
/// verification against the null generators enforces indirectly).
#[derive(Debug, Clone)]
pub struct EStatistic {
    grid: Arc<Grid>,
    values: Vec<f64>,
    source: EStatSource,
    verification: Option<VerificationRecord>,
}

impl EStatistic {
    /// Wraps explicitly supplied values after validating nonnegativity.
    pub fn explicit(grid: Arc<Grid>, values: Vec<f64>) -> Result<EStatistic> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        for (i, &v) in values.iter().enumerate() {
            if v.is_nan() || v < 0.0 {
                return Err(Error::InvalidDensity { index: i, value: v });
            }
        }
        Ok(EStatistic {
            grid,
            values,
            source: EStatSource::Explicit,
            verification: None,
        })
    }

    /// The constant-one statistic (always a valid e-statistic for
    /// probability nulls).
    pub fn ones(grid: Arc<Grid>) -> EStatistic {
        let n = grid.len();
        EStatistic {
            grid,
            values: vec![1.0; n],
            source: EStatSource::Explicit,
            verification: None,
        }
    }

    /// A copy scaled by `c >= 0` (scaling by `c <= 1` preserves validity).
    pub fn scaled(&self, c: f64) -> Result<EStatistic> {
        if c.is_nan() || c < 0.0 {
            return Err(Error::Domain(format!("scale must be nonnegative, got {c}")));
        }
        Ok(EStatistic {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * c).collect(),
            source: EStatSource::Explicit,
            verification: None,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn source(&self) -> EStatSource {
        self.source
    }

    pub fn verification(&self) -> Option<&VerificationRecord> {
        self.verification.as_ref()
    }

    pub fn has_infinite_values(&self) -> bool {
        self.values.iter().any(|v| v.is_infinite())
    }

    /// Runs [`verify_estat`] and stores the record on the statistic.
    pub fn verify(&mut self, family: &ParametricFamily) -> Result<&VerificationRecord> {
        let rec = verify_estat(self, family)?;
        self.verification = Some(rec);
        Ok(self.verification.as_ref().unwrap())
    }
}

/// Pointwise likelihood ratio `data density / candidate density` with
/// `0/0 := 0` and `pos/0 := +inf`.
pub fn make_estat(p: &GridMeasure, qhat: &GridMeasure) -> Result<EStatistic> {
    if !Grid::same(p.grid(), qhat.grid()) {
        return Err(Error::GridMismatch(
            "e-statistic construction: measures on different grids".into(),
        ));
    }
    let values: Vec<f64> = p
        .density()
        .iter()
        .zip(qhat.density())
        .map(|(&pi, &qi)| {
            if qi > 0.0 {
                pi / qi
            } else if pi > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        })
        .collect();
    Ok(EStatistic {
        grid: p.grid().clone(),
        values,
        source: EStatSource::LikelihoodRatio,
        verification: None,
    })
}

/// Integrates the statistic under every family generator; passes iff the
/// largest integral stays within `1 + 1e-9`. Linearity of the integral in
/// the measure extends the check to the whole mixture hull. An infinite
/// integral fails with the offending generator recorded.
pub fn verify_estat(e: &EStatistic, family: &ParametricFamily) -> Result<VerificationRecord> {
    if family.is_empty() {
        return Err(Error::Domain("verification needs a nonempty family".into()));
    }
    if !Grid::same(e.grid(), family.member(0).grid()) {
        return Err(Error::GridMismatch(
            "verification: statistic and family on different grids".into(),
        ));
    }
    let mut integrals = Vec::with_capacity(family.len());
    let mut worst = 0usize;
    let mut worst_val = ExtReal::NegInf;
    for (t, m) in family.members().iter().enumerate() {
        let v = integrate(e.values(), m)?;
        if worst_val.partial_cmp_ext(&v) == Some(std::cmp::Ordering::Less) {
            worst_val = v;
            worst = t;
        }
        integrals.push(v);
    }
    let sup_slack = match worst_val {
        ExtReal::Finite(v) => v - 1.0,
        _ => f64::INFINITY,
    };
    Ok(VerificationRecord {
        integrals,
        sup_slack,
        worst_member: worst,
        passed: sup_slack <= VERIFY_TOL,
    })
}

/// Which side of a strength comparison wins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    FirstStronger,
    SecondStronger,
    Tie,
    Incomparable,
}

/// Expected log-ratio of two statistics with its reading.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct StrengthVerdict {
    pub value: ExtReal,
    pub direction: Direction,
}

/// Tolerance inside which a finite strength value counts as a tie.
pub const TIE_TOL: f64 = 1e-9;

/// Expected log-ratio `integral of ln(E1/E2)` under `p`, with the verdict
/// `incomparable` exactly when the integral is undefined (divergent
/// contributions of both signs).
pub fn compare_strength(
    e1: &EStatistic,
    e2: &EStatistic,
    p: &GridMeasure,
) -> Result<StrengthVerdict> {
    if !Grid::same(e1.grid(), p.grid()) || !Grid::same(e2.grid(), p.grid()) {
        return Err(Error::GridMismatch(
            "strength comparison: grids differ".into(),
        ));
    }
    let n = p.len();
    let mut integrand = vec![0.0f64; n];
    for i in 0..n {
        if p.point_mass(i) == 0.0 {
            continue;
        }
        let a = e1.values()[i];
        let b = e2.values()[i];
        integrand[i] = if a == b {
            0.0 // includes two zeros and two infinities
        } else if a == 0.0 || b.is_infinite() {
            f64::NEG_INFINITY
        } else if b == 0.0 || a.is_infinite() {
            f64::INFINITY
        } else {
            (a / b).ln()
        };
    }
    let value = integrate(&integrand, p)?;
    let direction = match value {
        ExtReal::Undefined => Direction::Incomparable,
        ExtReal::PosInf => Direction::FirstStronger,
        ExtReal::NegInf => Direction::SecondStronger,
        ExtReal::Finite(v) => {
            if v.abs() <= TIE_TOL {
                Direction::Tie
            } else if v > 0.0 {
                Direction::FirstStronger
            } else {
                Direction::SecondStronger
            }
        }
    };
    Ok(StrengthVerdict { value, direction })
}

/// Expected log of the statistic under `p` (its growth rate when used
/// against data distributed as `p`).
pub fn gro_value(e: &EStatistic, p: &GridMeasure) -> Result<ExtReal> {
    if !Grid::same(e.grid(), p.grid()) {
        return Err(Error::GridMismatch("growth rate: grids differ".into()));
    }
    let n = p.len();
    let mut integrand = vec![0.0f64; n];
    for i in 0..n {
        if p.point_mass(i) == 0.0 {
            continue;
        }
        let v = e.values()[i];
        integrand[i] = if v == 0.0 {
            f64::NEG_INFINITY
        } else if v.is_infinite() {
            f64::INFINITY
        } else {
            v.ln()
        };
    }
    integrate(&integrand, p)
}

/// Inverse-CDF sampler over a grid measure's point masses; deterministic
/// given the generator state.
pub struct Sampler {
    cumulative: Vec<f64>,
    total: f64,
}

impl Sampler {
    pub fn new(m: &GridMeasure) -> Result<Sampler> {
        let mut cumulative = Vec::with_capacity(m.len());
        let mut acc = 0.0f64;
        for i in 0..m.len() {
            acc += m.point_mass(i);
            cumulative.push(acc);
        }
        if !(acc > 0.0) {
            return Err(Error::Domain("cannot sample from a zero measure".into()));
        }
        Ok(Sampler {
            cumulative,
            total: acc,
        })
    }

    /// Draws one grid index.
    pub fn draw(&self, rng: &mut impl Rng) -> usize {
        let u: f64 = rng.gen::<f64>() * self.total;
        // First index whose cumulative mass strictly exceeds u.
        match self
            .cumulative
            .binary_search_by(|c| c.partial_cmp(&u).unwrap())
        {
            Ok(mut i) => {
                // Landed exactly on a boundary: move past ties.
                while i + 1 < self.cumulative.len() && self.cumulative[i] <= u {
                    i += 1;
                }
                i
            }
            Err(i) => i.min(self.cumulative.len() - 1),
        }
    }
}

/// One simulated run of a product e-process comparison.
#[derive(Debug, Clone, serde::Serialize)]
pub struct RunRow {
    pub run: usize,
    pub n: usize,
    pub log_ratio_sum: f64,
    pub mean_rate: f64,
}

/// Aggregate of [`simulate_eprocess`].
#[derive(Debug, Clone)]
pub struct GrowthReport {
    pub rows: Vec<RunRow>,
    /// Mean of the per-run rates.
    pub mean_rate: f64,
    /// Standard error of that mean across runs.
    pub std_error: f64,
    /// The population value the simulation estimates.
    pub reference: StrengthVerdict,
}

/// Simulates `runs` independent batches of `n` i.i.d. draws from `p` and
/// accumulates the log-ratio of the two statistics along each batch. Run
/// `r` uses the generator seeded with `seed + r`, so reports are
/// reproducible and mergeable by run index.
///
/// Preconditions: both statistics must be strictly positive and finite at
/// every point `p` charges (the log increments must be finite).
pub fn simulate_eprocess(
    p: &GridMeasure,
    e1: &EStatistic,
    e2: &EStatistic,
    n: usize,
    runs: usize,
    seed: u64,
) -> Result<GrowthReport> {
    if n == 0 || runs == 0 {
        return Err(Error::Domain("simulation needs n >= 1 and runs >= 1".into()));
    }
    for (what, e) in [("first statistic", e1), ("second statistic", e2)] {
        for i in 0..p.len() {
            if p.point_mass(i) != 0.0 {
                let v = e.values()[i];
                if v == 0.0 || v.is_infinite() {
                    return Err(Error::Precondition(format!(
                        "{what} is {v} at charged grid index {i}; log increments must be finite"
                    )));
                }
            }
        }
    }
    let sampler = Sampler::new(p)?;
    let log_ratio: Vec<f64> = e1
        .values()
        .iter()
        .zip(e2.values())
        .map(|(&a, &b)| if a == b { 0.0 } else { (a / b).ln() })
        .collect();

    let mut rows = Vec::with_capacity(runs);
    for run in 0..runs {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(run as u64));
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        for _ in 0..n {
            let idx = sampler.draw(&mut rng);
            let term = log_ratio[idx];
            let t = sum + term;
            comp += if sum.abs() >= term.abs() {
                (sum - t) + term
            } else {
                (term - t) + sum
            };
            sum = t;
        }
        let total = sum + comp;
        rows.push(RunRow {
            run,
            n,
            log_ratio_sum: total,
            mean_rate: total / n as f64,
        });
    }
    let mean_rate =
        crate::measures::neumaier_sum(rows.iter().map(|r| r.mean_rate)) / runs as f64;
    let variance = if runs > 1 {
        crate::measures::neumaier_sum(rows.iter().map(|r| {
            let d = r.mean_rate - mean_rate;
            d * d
        })) / (runs as f64 - 1.0)
    } else {
        0.0
    };
    let std_error = (variance / runs as f64).sqrt();
    let reference = compare_strength(e1, e2, p)?;
    Ok(GrowthReport {
        rows,
        mean_rate,
        std_error,
        reference,
    })
}

/// Outcome of a fixed-batch type-I error check.
#[derive(Debug, Clone, serde::Serialize)]
pub struct Type1Report {
    pub rejections: usize,
    pub runs: usize,
    pub rate: f64,
    /// `alpha` plus three binomial standard errors.
    pub threshold: f64,
    pub passed: bool,
}

/// Runs `runs` batches of `n_batch` i.i.d. draws from the null measure `q`
/// and counts the batches whose running product of statistic values ever
/// reaches `1/alpha`. The empirical rate must stay within `alpha` plus
/// three standard errors.
///
/// Precondition: the statistic is finite wherever `q` charges (it should
/// have been verified against the null used as sampler).
pub fn type1_check(
    q: &GridMeasure,
    e: &EStatistic,
    n_batch: usize,
    runs: usize,
    alpha: f64,
    seed: u64,
) -> Result<Type1Report> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha must be in (0,1), got {alpha}")));
    }
    if n_batch == 0 || runs == 0 {
        return Err(Error::Domain("type-I check needs n_batch >= 1 and runs >= 1".into()));
    }
    if !Grid::same(e.grid(), q.grid()) {
        return Err(Error::GridMismatch("type-I check: grids differ".into()));
    }
    for i in 0..q.len() {
        if q.point_mass(i) != 0.0 && e.values()[i].is_infinite() {
            return Err(Error::Precondition(format!(
                "statistic is infinite at charged null index {i}; verify against the null first"
            )));
        }
    }
    let sampler = Sampler::new(q)?;
    let cutoff = 1.0 / alpha;
    let mut rejections = 0usize;
    for run in 0..runs {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(run as u64));
        let mut product = 1.0f64;
        for _ in 0..n_batch {
            product *= e.values()[sampler.draw(&mut rng)];
            if product >= cutoff {
                rejections += 1;
                break;
            }
        }
    }
    let rate = rejections as f64 / runs as f64;
    let threshold = alpha + 3.0 * (alpha / runs as f64).sqrt();
    Ok(Type1Report {
        rejections,
        runs,
        rate,
        threshold,
        passed: rate <= threshold,
    })
}

/// Builds the standard probe set for dominance checks around a candidate
/// statistic: scaled-down copies, the constant statistics, and whichever
/// member likelihood ratios verify against the family.
pub fn dominance_probes(
    candidate: &EStatistic,
    p: &GridMeasure,
    family: &ParametricFamily,
) -> Result<Vec<EStatistic>> {
    let mut probes = Vec::new();
    for c in [0.5, 0.9] {
        probes.push(candidate.scaled(c)?);
    }
    for c in [0.7, 1.0] {
        let mut e = EStatistic::ones(p.grid().clone());
        e = e.scaled(c)?;
        probes.push(e);
    }
    for m in family.members() {
        let e = make_estat(p, m)?;
        if verify_estat(&e, family)?.passed {
            probes.push(e);
        }
    }
    Ok(probes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divergence::{gain_to_hull, HullOpts};
    use crate::measures::{make_family, mix, FamilySpec, Grid, GridMeasure, MixtureWeights};
    use crate::projection::{greedy_project, ProjectionOpts};
    use proptest::prelude::*;

    const KL_BER_HALF_04: f64 = 0.020410997260127565;

    fn ber(theta: f64) -> GridMeasure {
        let grid = Grid::counting(0, 1, false).unwrap();
        GridMeasure::probability(grid, vec![1.0 - theta, theta]).unwrap()
    }

    fn ber_family(thetas: Vec<f64>) -> ParametricFamily {
        let grid = Grid::counting(0, 1, false).unwrap();
        make_family(&FamilySpec::Bernoulli { thetas }, &grid).unwrap()
    }

    #[test]
    fn likelihood_ratio_of_self_is_one() {
        let p = ber(0.4);
        let e = make_estat(&p, &p).unwrap();
        assert!(e.values().iter().all(|&v| v == 1.0));
        assert_eq!(e.source(), EStatSource::LikelihoodRatio);
    }

    #[test]
    fn pointwise_division_conventions() {
        // Data concentrated on the first site, candidate a half-weight spike
        // there: the ratio is 2 at the charged site and 0 where both vanish.
        let grid = Grid::counting(1, 5, true).unwrap();
        let p = GridMeasure::probability(grid.clone(), vec![1.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let qhat = GridMeasure::finite(grid.clone(), vec![0.5, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let e = make_estat(&p, &qhat).unwrap();
        assert_eq!(e.values()[0], 2.0);
        assert!(e.values()[1..].iter().all(|&v| v == 0.0));
        // A hole in the candidate under positive data density flags +inf.
        let q2 = GridMeasure::finite(grid, vec![0.0, 1.0, 0.0, 0.0, 0.0]).unwrap();
        let e2 = make_estat(&p, &q2).unwrap();
        assert!(e2.values()[0].is_infinite());
        assert!(e2.has_infinite_values());
    }

    #[test]
    fn verify_ones_and_two_site_ratio() {
        let fam = ber_family(vec![0.25, 0.5, 0.75]);
        let ones = EStatistic::ones(fam.grid().clone());
        let rec = verify_estat(&ones, &fam).unwrap();
        assert!(rec.passed);
        assert!(rec.sup_slack.abs() <= 1e-12);
        // p/q for q equal to p verifies with slack 0 against any probability
        // family containing q... here against the family itself.
        let p = ber(0.5);
        let e = make_estat(&p, &p).unwrap();
        let rec = verify_estat(&e, &fam).unwrap();
        assert!(rec.passed);
        // A ratio against a lopsided member overshoots on another member.
        let bad = make_estat(&p, fam.member(0)).unwrap();
        let rec = verify_estat(&bad, &fam).unwrap();
        assert!(!rec.passed);
        assert_eq!(rec.worst_member, 2);
    }

    #[test]
    fn verify_heavy_tail_ratio_against_gaussian_null() {
        let grid = Grid::default_quadrature();
        let gauss = make_family(
            &FamilySpec::Gaussian {
                means: vec![0.0],
                sd: 1.0,
            },
            &grid,
        )
        .unwrap();
        let cauchy = make_family(&FamilySpec::Cauchy { locations: vec![0.0] }, &grid).unwrap();
        let p = cauchy.member(0);
        let e = make_estat(p, gauss.member(0)).unwrap();
        // The ratio is infinite on the clamped tail, but the null never
        // charges those points; the integral is the data mass on the null's
        // support, just below one.
        assert!(e.has_infinite_values());
        let rec = verify_estat(&e, &gauss).unwrap();
        assert!(rec.passed, "slack {}", rec.sup_slack);
        let v = rec.integrals[0].finite().unwrap();
        assert!(v <= 1.0 && v > 0.99, "integral {v}");
    }

    #[test]
    fn infinite_integral_fails_with_worst_member() {
        let grid = Grid::counting(0, 1, false).unwrap();
        let mut values = vec![1.0, f64::INFINITY];
        let e = EStatistic::explicit(grid.clone(), values.drain(..).collect()).unwrap();
        let fam = ber_family(vec![0.25, 0.75]);
        let rec = verify_estat(&e, &fam).unwrap();
        assert!(!rec.passed);
        assert!(rec.sup_slack.is_infinite());
        assert_eq!(rec.worst_member, 0); // first member already diverges
        assert_eq!(rec.integrals[0], ExtReal::PosInf);
    }

    #[test]
    fn strength_tie_scaling_and_zero_domination() {
        let p = ber(0.5);
        let e = make_estat(&p, &ber(0.4)).unwrap();
        // Identical statistics tie at exactly zero.
        let v = compare_strength(&e, &e, &p).unwrap();
        assert_eq!(v.value, ExtReal::Finite(0.0));
        assert_eq!(v.direction, Direction::Tie);
        // Scaling down by half costs exactly ln 2.
        let half = e.scaled(0.5).unwrap();
        let v = compare_strength(&e, &half, &p).unwrap();
        assert!((v.value.finite().unwrap() - std::f64::consts::LN_2).abs() < 1e-12);
        assert_eq!(v.direction, Direction::FirstStronger);
        // Any statistic vanishing on charged points loses infinitely.
        let grid = p.grid().clone();
        let dead = EStatistic::explicit(grid, vec![0.0, 1.0]).unwrap();
        let v = compare_strength(&e, &dead, &p).unwrap();
        assert_eq!(v.value, ExtReal::PosInf);
        assert_eq!(v.direction, Direction::FirstStronger);
    }

    #[test]
    fn incomparable_pair_is_surfaced() {
        let p = ber(0.5);
        let grid = p.grid().clone();
        let e1 = EStatistic::explicit(grid.clone(), vec![0.0, 1.5]).unwrap();
        let e2 = EStatistic::explicit(grid, vec![1.5, 0.0]).unwrap();
        let v = compare_strength(&e1, &e2, &p).unwrap();
        assert_eq!(v.value, ExtReal::Undefined);
        assert_eq!(v.direction, Direction::Incomparable);
    }

    #[test]
    fn growth_rate_conventions() {
        let p = ber(0.5);
        let ones = EStatistic::ones(p.grid().clone());
        assert_eq!(gro_value(&ones, &p).unwrap(), ExtReal::Finite(0.0));
        // Spike ratio: rate ln 2 exactly.
        let grid = Grid::counting(1, 4, true).unwrap();
        let pp = GridMeasure::probability(grid.clone(), vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let qhat = GridMeasure::finite(grid, vec![0.5, 0.0, 0.0, 0.0]).unwrap();
        let e = make_estat(&pp, &qhat).unwrap();
        let g = gro_value(&e, &pp).unwrap().finite().unwrap();
        assert!((g - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn growth_rate_diverges_with_window_for_heavy_tails() {
        // Below the underflow threshold the rate is finite but grows with
        // the window; past it the clamped tail makes it infinite outright.
        let mut last = f64::NEG_INFINITY;
        for (lo, hi, n) in [(-10.0, 10.0, 2001), (-20.0, 20.0, 4001), (-35.0, 35.0, 7001)] {
            let grid = Grid::quadrature(lo, hi, n).unwrap();
            let gauss = make_family(
                &FamilySpec::Gaussian {
                    means: vec![0.0],
                    sd: 1.0,
                },
                &grid,
            )
            .unwrap();
            let cauchy =
                make_family(&FamilySpec::Cauchy { locations: vec![0.0] }, &grid).unwrap();
            let e = make_estat(cauchy.member(0), gauss.member(0)).unwrap();
            let g = gro_value(&e, cauchy.member(0)).unwrap().finite().unwrap();
            assert!(g > last, "window [{lo},{hi}] rate {g} vs previous {last}");
            last = g;
        }
        assert!(last > 1.0, "rate should grow past 1, got {last}");
        let grid = Grid::default_quadrature();
        let gauss = make_family(
            &FamilySpec::Gaussian {
                means: vec![0.0],
                sd: 1.0,
            },
            &grid,
        )
        .unwrap();
        let cauchy = make_family(&FamilySpec::Cauchy { locations: vec![0.0] }, &grid).unwrap();
        let e = make_estat(cauchy.member(0), gauss.member(0)).unwrap();
        assert_eq!(gro_value(&e, cauchy.member(0)).unwrap(), ExtReal::PosInf);
    }

    #[test]
    fn sampler_is_deterministic_and_proportional() {
        let p = ber(0.25);
        let sampler = Sampler::new(&p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let draws: Vec<usize> = (0..4000).map(|_| sampler.draw(&mut rng)).collect();
        let ones = draws.iter().filter(|&&i| i == 1).count();
        let frac = ones as f64 / draws.len() as f64;
        assert!((frac - 0.25).abs() < 0.03, "frac {frac}");
        let mut rng2 = ChaCha8Rng::seed_from_u64(7);
        let again: Vec<usize> = (0..4000).map(|_| sampler.draw(&mut rng2)).collect();
        assert_eq!(draws, again);
    }

    #[test]
    fn eprocess_trivial_and_constant_gap() {
        let p = ber(0.5);
        let e = make_estat(&p, &ber(0.4)).unwrap();
        let rep = simulate_eprocess(&p, &e, &e, 100, 5, 11).unwrap();
        assert!(rep.rows.iter().all(|r| r.log_ratio_sum == 0.0));
        assert_eq!(rep.mean_rate, 0.0);
        assert_eq!(rep.std_error, 0.0);
        // Against its own half-scale the increment is constant ln 2.
        let half = e.scaled(0.5).unwrap();
        let rep = simulate_eprocess(&p, &e, &half, 250, 4, 11).unwrap();
        assert!((rep.mean_rate - std::f64::consts::LN_2).abs() < 1e-12);
        assert!(rep.std_error < 1e-12);
        assert_eq!(rep.reference.direction, Direction::FirstStronger);
    }

    #[test]
    fn eprocess_bernoulli_growth_matches_divergence() {
        let p = ber(0.5);
        let e1 = make_estat(&p, &ber(0.4)).unwrap();
        let e2 = EStatistic::ones(p.grid().clone());
        let rep = simulate_eprocess(&p, &e1, &e2, 10000, 100, 20240817).unwrap();
        let dev = (rep.mean_rate - KL_BER_HALF_04).abs();
        assert!(
            dev <= 3.0 * rep.std_error,
            "mean {} oracle {} se {}",
            rep.mean_rate,
            KL_BER_HALF_04,
            rep.std_error
        );
        assert_eq!(rep.rows.len(), 100);
        assert!(rep.rows.windows(2).all(|w| w[0].run + 1 == w[1].run));
    }

    #[test]
    fn eprocess_rejects_zero_or_infinite_increments() {
        let p = ber(0.5);
        let grid = p.grid().clone();
        let dead = EStatistic::explicit(grid.clone(), vec![0.0, 1.0]).unwrap();
        let ones = EStatistic::ones(grid);
        assert!(matches!(
            simulate_eprocess(&p, &dead, &ones, 10, 2, 1),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn type1_never_rejects_constant_one() {
        let q = ber(0.4);
        let ones = EStatistic::ones(q.grid().clone());
        let rep = type1_check(&q, &ones, 20, 200, 0.05, 3).unwrap();
        assert_eq!(rep.rejections, 0);
        assert!(rep.passed);
    }

    #[test]
    fn type1_rate_within_threshold_for_bernoulli_ratio() {
        let p = ber(0.5);
        let q = ber(0.4);
        let mut e = make_estat(&p, &q).unwrap();
        let fam = ber_family(vec![0.4]);
        assert!(e.verify(&fam).unwrap().passed);
        let rep = type1_check(&q, &e, 20, 2000, 0.05, 99).unwrap();
        assert!(rep.passed, "rate {} threshold {}", rep.rate, rep.threshold);
        assert!(rep.rate <= rep.threshold);
    }

    #[test]
    fn strongest_statistic_dominates_probe_set() {
        let fam = ber_family(vec![0.25, 0.5, 0.75]);
        let p = ber(0.6);
        let trace = greedy_project(&p, &fam, None, 300, &ProjectionOpts::default()).unwrap();
        let qhat = trace.final_measure(&fam).unwrap();
        let ehat = make_estat(&p, &qhat).unwrap();
        // Tolerance: the residual gain of the trace bounds the deficit.
        let residual = gain_to_hull(&p, &qhat, &fam, &HullOpts::default())
            .unwrap()
            .certified_upper
            .unwrap()
            .finite()
            .unwrap()
            .max(1e-9);
        for probe in dominance_probes(&ehat, &p, &fam).unwrap() {
            let v = compare_strength(&ehat, &probe, &p).unwrap();
            match v.value {
                ExtReal::Finite(x) => assert!(x >= -residual, "deficit {x} vs tol {residual}"),
                ExtReal::PosInf => {}
                other => panic!("unexpected comparison value {other:?}"),
            }
        }
    }

    #[test]
    fn verified_ratio_with_no_slack_means_no_remaining_gain() {
        // If the likelihood ratio against a candidate verifies with
        // nonpositive slack, the candidate already absorbs the whole hull:
        // no mixture can gain anything on it.
        let fam = ber_family(vec![0.25, 0.75]);
        let p = ber(0.5);
        let qstar = mix(&fam, &MixtureWeights::from_dense(vec![0.5, 0.5]).unwrap()).unwrap();
        let e = make_estat(&p, &qstar).unwrap();
        let rec = verify_estat(&e, &fam).unwrap();
        assert!(rec.sup_slack <= 0.0, "slack {}", rec.sup_slack);
        let gain = gain_to_hull(&p, &qstar, &fam, &HullOpts::default()).unwrap();
        assert!(
            gain.value.finite().unwrap() <= 1e-7,
            "gain {:?}",
            gain.value
        );
    }

    proptest! {
        #[test]
        fn generator_integrals_extend_linearly_to_mixtures(
            thetas in prop::collection::vec(0.05..0.95f64, 2..5),
            raw_w in prop::collection::vec(0.01..1.0f64, 2..5),
            evals in prop::collection::vec(0.0..3.0f64, 2),
        ) {
            let k = thetas.len().min(raw_w.len());
            let fam = ber_family(thetas[..k].to_vec());
            let w = MixtureWeights::from_dense(raw_w[..k].to_vec()).unwrap();
            let mixed = mix(&fam, &w).unwrap();
            let e = EStatistic::explicit(fam.grid().clone(), evals).unwrap();
            let direct = integrate(e.values(), &mixed).unwrap().finite().unwrap();
            let dense = w.dense(k).unwrap();
            let by_parts: f64 = (0..k)
                .map(|t| dense[t] * integrate(e.values(), fam.member(t)).unwrap().finite().unwrap())
                .sum();
            prop_assert!((direct - by_parts).abs() <= 1e-10);
        }

        #[test]
        fn strength_is_antisymmetric(
            v1 in prop::collection::vec(0.05..5.0f64, 2),
            v2 in prop::collection::vec(0.05..5.0f64, 2),
            theta in 0.1..0.9f64,
        ) {
            let p = ber(theta);
            let e1 = EStatistic::explicit(p.grid().clone(), v1).unwrap();
            let e2 = EStatistic::explicit(p.grid().clone(), v2).unwrap();
            let a = compare_strength(&e1, &e2, &p).unwrap().value.finite().unwrap();
            let b = compare_strength(&e2, &e1, &p).unwrap().value.finite().unwrap();
            prop_assert!((a + b).abs() <= 1e-12);
        }
    }
}
