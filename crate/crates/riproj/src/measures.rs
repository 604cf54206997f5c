//! Grids, measures on grids, parametric families, and mixtures.
//!
//! A [`Grid`] is a finite list of support points with positive integration
//! weights: unit weights for counting measure over integers, trapezoid
//! weights for a quadrature window over the reals. A [`GridMeasure`] is a
//! nonnegative density against the grid's base measure, with its total mass
//! cached at construction. All divergences, projections, and e-statistics in
//! this crate are computed against these finite representations; whenever a
//! grid truncates an infinite support, the grid itself carries a `truncated`
//! flag so reports can caveat raw values.
//!
//! Normalization policy for built-in probability families: a member's raw
//! grid mass must agree with the closed-form mass of the true distribution
//! inside the window to 1e-6 (this guards against grids too coarse or too
//! small), and light-tailed families must also capture total mass 1 to 1e-6.
//! Members are then renormalized so their grid mass is exactly one.

use crate::xreal::ExtReal;
use crate::{Error, Result};
use std::sync::Arc;

/// Densities below this are clamped to exact zero at construction, so that
/// "zero density" is a meaningful predicate in divergence conventions.
pub const DENSITY_CLAMP: f64 = 1e-300;

/// Relative tolerance for the cached-mass consistency invariant.
pub const MASS_REL_TOL: f64 = 1e-12;

/// Absolute tolerance on |mass - 1| for measures flagged as probability.
pub const PROBABILITY_TOL: f64 = 1e-9;

/// Tolerance for the family-construction mass checks.
pub const FAMILY_MASS_TOL: f64 = 1e-6;

/// Compensated (Neumaier) summation; deterministic left-to-right order.
pub(crate) fn neumaier_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Whether the grid is counting measure over integers or a quadrature rule
/// over a real window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    Counting,
    Quadrature,
}

/// A finite integration grid: ascending support points and positive weights.
#[derive(Debug)]
pub struct Grid {
    points: Vec<f64>,
    weights: Vec<f64>,
    kind: GridKind,
    truncated: bool,
}

impl Grid {
    /// Counting grid over the integers `first..=last`, unit weights.
    ///
    /// `truncated` records whether the grid cuts off an infinite support
    /// (e.g. all of the naturals) rather than covering a finite one exactly.
    pub fn counting(first: i64, last: i64, truncated: bool) -> Result<Arc<Grid>> {
        if last < first {
            return Err(Error::Domain(format!(
                "counting grid range {first}..={last} is empty"
            )));
        }
        let n = (last - first + 1) as usize;
        let points: Vec<f64> = (0..n).map(|i| (first + i as i64) as f64).collect();
        Ok(Arc::new(Grid {
            points,
            weights: vec![1.0; n],
            kind: GridKind::Counting,
            truncated,
        }))
    }

    /// Quadrature grid: `n` equally spaced points on `[lo, hi]` with
    /// trapezoid weights. Always flagged truncated (a window never covers
    /// the whole line).
    pub fn quadrature(lo: f64, hi: f64, n: usize) -> Result<Arc<Grid>> {
        if !(lo.is_finite() && hi.is_finite()) || hi <= lo {
            return Err(Error::Domain(format!(
                "quadrature window [{lo}, {hi}] is invalid"
            )));
        }
        if n < 2 {
            return Err(Error::Domain(format!(
                "quadrature grid needs at least 2 points, got {n}"
            )));
        }
        let h = (hi - lo) / (n - 1) as f64;
        let points: Vec<f64> = (0..n).map(|i| lo + h * i as f64).collect();
        let mut weights = vec![h; n];
        weights[0] = h / 2.0;
        weights[n - 1] = h / 2.0;
        Ok(Arc::new(Grid {
            points,
            weights,
            kind: GridKind::Quadrature,
            truncated: true,
        }))
    }

    /// Default quadrature window used by the built-in continuous families.
    pub fn default_quadrature() -> Arc<Grid> {
        Grid::quadrature(-50.0, 50.0, 20001).expect("default window is valid")
    }

    /// Default truncation of the naturals for counting families.
    pub fn default_counting() -> Arc<Grid> {
        Grid::counting(0, 10_000, true).expect("default counting range is valid")
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn is_truncated(&self) -> bool {
        self.truncated
    }

    /// Identity-first grid equality: pointer equality, falling back to
    /// structural comparison of kind and points.
    pub fn same(a: &Arc<Grid>, b: &Arc<Grid>) -> bool {
        Arc::ptr_eq(a, b) || (a.kind == b.kind && a.points == b.points)
    }
}

/// A finite nonnegative measure represented by a density on a grid.
#[derive(Debug, Clone)]
pub struct GridMeasure {
    grid: Arc<Grid>,
    density: Vec<f64>,
    mass: f64,
    probability: bool,
}

impl GridMeasure {
    fn validate_density(grid: &Arc<Grid>, density: &[f64]) -> Result<Vec<f64>> {
        if density.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: density.len(),
            });
        }
        let mut clamped = Vec::with_capacity(density.len());
        for (i, &d) in density.iter().enumerate() {
            if !d.is_finite() || d < 0.0 {
                return Err(Error::InvalidDensity { index: i, value: d });
            }
            clamped.push(if d < DENSITY_CLAMP { 0.0 } else { d });
        }
        Ok(clamped)
    }

    /// A finite measure from a density; mass is computed and cached.
    pub fn finite(grid: Arc<Grid>, density: Vec<f64>) -> Result<GridMeasure> {
        let density = Self::validate_density(&grid, &density)?;
        let mass = neumaier_sum(
            density
                .iter()
                .zip(grid.weights())
                .map(|(d, w)| d * w),
        );
        Ok(GridMeasure {
            grid,
            density,
            mass,
            probability: false,
        })
    }

    /// Like [`GridMeasure::finite`], but flags the measure as probability;
    /// errs when |mass - 1| > 1e-9.
    pub fn probability(grid: Arc<Grid>, density: Vec<f64>) -> Result<GridMeasure> {
        let mut m = Self::finite(grid, density)?;
        if (m.mass - 1.0).abs() > PROBABILITY_TOL {
            return Err(Error::NotProbability { mass: m.mass });
        }
        m.probability = true;
        Ok(m)
    }

    /// Rescales the density so the grid mass is exactly the computed sum of
    /// one, then flags as probability. Used by family construction after the
    /// raw-mass checks have passed.
    pub fn probability_normalized(grid: Arc<Grid>, density: Vec<f64>) -> Result<GridMeasure> {
        let m = Self::finite(grid, density)?;
        if m.mass <= 0.0 {
            return Err(Error::NotProbability { mass: m.mass });
        }
        let scale = 1.0 / m.mass;
        let density: Vec<f64> = m.density.iter().map(|d| d * scale).collect();
        Self::probability(m.grid, density)
    }

    /// Internal constructor for mixtures: the mass is supplied by linearity
    /// and checked against the density sum to the cached-mass tolerance.
    pub(crate) fn from_parts(
        grid: Arc<Grid>,
        density: Vec<f64>,
        mass: f64,
        probability: bool,
    ) -> Result<GridMeasure> {
        let density = Self::validate_density(&grid, &density)?;
        let check = neumaier_sum(
            density
                .iter()
                .zip(grid.weights())
                .map(|(d, w)| d * w),
        );
        let scale = mass.abs().max(check.abs()).max(1e-30);
        if (check - mass).abs() > MASS_REL_TOL * scale {
            return Err(Error::Invariant(format!(
                "cached mass {mass} disagrees with density sum {check}"
            )));
        }
        Ok(GridMeasure {
            grid,
            density,
            mass,
            probability,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn is_probability(&self) -> bool {
        self.probability
    }

    pub fn len(&self) -> usize {
        self.density.len()
    }

    pub fn is_empty(&self) -> bool {
        self.density.is_empty()
    }

    /// Pointwise density `density * p(i)w(i)` iterator support: returns the
    /// product of density and weight at `i` (the mass the measure puts on
    /// grid point `i`).
    pub fn point_mass(&self, i: usize) -> f64 {
        self.density[i] * self.grid.weights()[i]
    }
}

/// Integrates a pointwise integrand against a measure in extended-real
/// arithmetic.
///
/// Positive and negative contributions accumulate separately; a point where
/// the measure's density-times-weight is zero contributes nothing even if the
/// integrand is infinite there (the `0 * ln(...)` convention). Exactly one
/// divergent part yields a signed infinity, both yield `Undefined`. NaN
/// integrand values on charged points are rejected.
pub fn integrate(f: &[f64], m: &GridMeasure) -> Result<ExtReal> {
    if f.len() != m.len() {
        return Err(Error::GridMismatch(format!(
            "integrand has {} entries, measure grid has {}",
            f.len(),
            m.len()
        )));
    }
    let weights = m.grid().weights();
    let mut pos = 0.0f64;
    let mut pos_comp = 0.0f64;
    let mut neg = 0.0f64;
    let mut neg_comp = 0.0f64;
    let mut pos_inf = false;
    let mut neg_inf = false;
    for i in 0..f.len() {
        let c = m.density()[i] * weights[i];
        if c == 0.0 {
            continue;
        }
        let v = f[i];
        if v.is_nan() {
            return Err(Error::Domain(format!(
                "integrand is NaN at charged grid index {i}"
            )));
        }
        if v == f64::INFINITY {
            pos_inf = true;
        } else if v == f64::NEG_INFINITY {
            neg_inf = true;
        } else {
            let t = v * c;
            if t >= 0.0 {
                let s = pos + t;
                pos_comp += if pos.abs() >= t.abs() {
                    (pos - s) + t
                } else {
                    (t - s) + pos
                };
                pos = s;
            } else {
                let t = -t;
                let s = neg + t;
                neg_comp += if neg.abs() >= t.abs() {
                    (neg - s) + t
                } else {
                    (t - s) + neg
                };
                neg = s;
            }
        }
    }
    let pos_total = if pos_inf { f64::INFINITY } else { pos + pos_comp };
    let neg_total = if neg_inf { f64::INFINITY } else { neg + neg_comp };
    Ok(ExtReal::from_parts(pos_total, neg_total))
}

/// Weights of a finite mixture over family member indices.
///
/// Weights are nonnegative and sum to one within 1e-12. Indices may repeat;
/// repeated indices act additively.
#[derive(Debug, Clone)]
pub struct MixtureWeights {
    indices: Vec<usize>,
    weights: Vec<f64>,
}

impl MixtureWeights {
    pub fn new(indices: Vec<usize>, weights: Vec<f64>) -> Result<MixtureWeights> {
        if indices.len() != weights.len() {
            return Err(Error::InvalidWeights(format!(
                "{} indices but {} weights",
                indices.len(),
                weights.len()
            )));
        }
        if weights.is_empty() {
            return Err(Error::InvalidWeights("empty mixture".into()));
        }
        for &w in &weights {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidWeights(format!("weight {w} is invalid")));
            }
        }
        let total = neumaier_sum(weights.iter().copied());
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidWeights(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        Ok(MixtureWeights { indices, weights })
    }

    /// All weight on a single member.
    pub fn singleton(index: usize) -> MixtureWeights {
        MixtureWeights {
            indices: vec![index],
            weights: vec![1.0],
        }
    }

    /// Dense weight vector over members `0..w.len()`, renormalized to the
    /// simplex (requires a positive sum).
    pub fn from_dense(w: Vec<f64>) -> Result<MixtureWeights> {
        for &x in &w {
            if !x.is_finite() || x < 0.0 {
                return Err(Error::InvalidWeights(format!("weight {x} is invalid")));
            }
        }
        let total = neumaier_sum(w.iter().copied());
        if total <= 0.0 {
            return Err(Error::InvalidWeights(format!(
                "dense weights sum to {total}"
            )));
        }
        let mut w: Vec<f64> = w.iter().map(|x| x / total).collect();
        let s = neumaier_sum(w.iter().copied());
        let last = w.len() - 1;
        w[last] += 1.0 - s;
        MixtureWeights::new((0..w.len()).collect(), w)
    }

    /// Uniform weights over members `0..n`.
    pub fn uniform(n: usize) -> Result<MixtureWeights> {
        if n == 0 {
            return Err(Error::InvalidWeights("uniform over zero members".into()));
        }
        // 1/n repeated n times sums to 1 only approximately; rescale the last
        // entry so the simplex constraint holds exactly enough for new().
        let w = 1.0 / n as f64;
        let weights = vec![w; n];
        let indices = (0..n).collect();
        let total = neumaier_sum(weights.iter().copied());
        let mut weights = weights;
        if let Some(last) = weights.last_mut() {
            *last += 1.0 - total;
        }
        MixtureWeights::new(indices, weights)
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Total weight assigned to member `index` (summing repeats).
    pub fn weight_on(&self, index: usize) -> f64 {
        neumaier_sum(
            self.indices
                .iter()
                .zip(&self.weights)
                .filter(|(i, _)| **i == index)
                .map(|(_, w)| *w),
        )
    }

    /// Dense weight vector over `0..n_members`.
    pub fn dense(&self, n_members: usize) -> Result<Vec<f64>> {
        let mut out = vec![0.0; n_members];
        for (&i, &w) in self.indices.iter().zip(&self.weights) {
            if i >= n_members {
                return Err(Error::IndexOutOfBounds {
                    index: i,
                    len: n_members,
                });
            }
            out[i] += w;
        }
        Ok(out)
    }
}

/// A finite family of measures sharing one grid, addressed by index, with a
/// scalar label per member (the parameter that generated it).
#[derive(Debug, Clone)]
pub struct ParametricFamily {
    grid: Arc<Grid>,
    members: Vec<GridMeasure>,
    labels: Vec<f64>,
    probability_family: bool,
}

impl ParametricFamily {
    /// Builds a family after checking every member shares `grid`; when
    /// `probability_family` is set, every member must carry the probability
    /// flag.
    pub fn new(
        grid: Arc<Grid>,
        members: Vec<GridMeasure>,
        labels: Vec<f64>,
        probability_family: bool,
    ) -> Result<ParametricFamily> {
        if members.is_empty() {
            return Err(Error::Domain("family has no members".into()));
        }
        if labels.len() != members.len() {
            return Err(Error::LengthMismatch {
                expected: members.len(),
                got: labels.len(),
            });
        }
        for (i, m) in members.iter().enumerate() {
            if !Grid::same(m.grid(), &grid) {
                return Err(Error::GridMismatch(format!(
                    "family member {i} is on a different grid"
                )));
            }
            if probability_family && !m.is_probability() {
                return Err(Error::NotProbability { mass: m.mass() });
            }
        }
        Ok(ParametricFamily {
            grid,
            members,
            labels,
            probability_family,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn member(&self, i: usize) -> &GridMeasure {
        &self.members[i]
    }

    pub fn members(&self) -> &[GridMeasure] {
        &self.members
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn is_probability_family(&self) -> bool {
        self.probability_family
    }

    /// The uniform mixture of all members.
    pub fn uniform_mixture(&self) -> Result<GridMeasure> {
        mix(self, &MixtureWeights::uniform(self.len())?)
    }

    /// A copy of the family with one extra member appended.
    pub fn with_member(&self, member: GridMeasure, label: f64) -> Result<ParametricFamily> {
        let mut members = self.members.clone();
        let mut labels = self.labels.clone();
        let probability_family = self.probability_family && member.is_probability();
        members.push(member);
        labels.push(label);
        ParametricFamily::new(self.grid.clone(), members, labels, probability_family)
    }
}

/// Forms the mixture measure `sum_i w_i * member_i`.
///
/// The density is combined pointwise and the mass by linearity from the
/// members' cached masses.
pub fn mix(family: &ParametricFamily, weights: &MixtureWeights) -> Result<GridMeasure> {
    let dense = weights.dense(family.len())?;
    let n = family.grid().len();
    let mut density = vec![0.0f64; n];
    let mut mass = 0.0f64;
    let mut all_probability = true;
    for (idx, &w) in dense.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let m = family.member(idx);
        all_probability &= m.is_probability();
        for (d, md) in density.iter_mut().zip(m.density()) {
            *d += w * md;
        }
        mass += w * m.mass();
    }
    GridMeasure::from_parts(family.grid().clone(), density, mass, all_probability)
}

/// Descriptor for the built-in families.
#[derive(Debug, Clone, PartialEq)]
pub enum FamilySpec {
    /// Normal location family with common standard deviation.
    Gaussian { means: Vec<f64>, sd: f64 },
    /// Cauchy location family with unit scale. Heavy-tailed: its window mass
    /// is checked against the closed-form truncated mass, not against 1.
    Cauchy { locations: Vec<f64> },
    /// Bernoulli family on the counting grid {0, 1}.
    Bernoulli { thetas: Vec<f64> },
    /// Geometric family `theta^n (1 - theta)` on a counting grid from 0.
    Geometric { thetas: Vec<f64> },
    /// Point masses at the given integer sites.
    PointMass { sites: Vec<i64> },
}

/// Analytic densities below this are flushed to exact zero at family
/// construction. It sits ten orders of magnitude above [`DENSITY_CLAMP`]
/// so that a mixture with any non-negligible weight on a member keeps
/// every point the member charges above the constructor clamp: without
/// the headroom, blending two members whose smallest positive values
/// hug the clamp would punch holes in the mixture's support.
pub const DENSITY_FLOOR: f64 = 1e-290;

fn flush_tiny(d: f64) -> f64 {
    if d < DENSITY_FLOOR {
        0.0
    } else {
        d
    }
}

fn gaussian_density(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    flush_tiny((-0.5 * z * z).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt()))
}

fn cauchy_density(x: f64, location: f64) -> f64 {
    let z = x - location;
    flush_tiny(1.0 / (std::f64::consts::PI * (1.0 + z * z)))
}

/// Gaussian upper tail bound `phi(z)/z` for the mass outside `[mean - z*sd,
/// mean + z*sd]` (one side).
fn gaussian_tail_bound(z: f64) -> f64 {
    if z <= 0.0 {
        return 1.0;
    }
    gaussian_density(z, 0.0, 1.0) / z
}

/// Constructs a built-in family on the given grid.
///
/// Each member's raw grid mass is compared with the closed-form mass of the
/// true distribution restricted to the grid window (to 1e-6); light-tailed
/// members must also cover total mass 1 to 1e-6. Raw densities are then
/// renormalized so every member has grid mass exactly one. Densities below
/// [`DENSITY_FLOOR`] are flushed to exact zero, so "charged" and "covered"
/// remain stable under mixing.
pub fn make_family(spec: &FamilySpec, grid: &Arc<Grid>) -> Result<ParametricFamily> {
    match spec {
        FamilySpec::Gaussian { means, sd } => {
            if means.is_empty() {
                return Err(Error::Domain("gaussian family with no means".into()));
            }
            if !sd.is_finite() || *sd <= 0.0 {
                return Err(Error::Domain(format!("gaussian sd {sd} invalid")));
            }
            if grid.kind() != GridKind::Quadrature {
                return Err(Error::GridMismatch(
                    "gaussian family needs a quadrature grid".into(),
                ));
            }
            let lo = grid.points()[0];
            let hi = *grid.points().last().unwrap();
            let mut members = Vec::with_capacity(means.len());
            for &mean in means {
                let density: Vec<f64> = grid
                    .points()
                    .iter()
                    .map(|&x| gaussian_density(x, mean, *sd))
                    .collect();
                let raw = GridMeasure::finite(grid.clone(), density)?;
                let z = ((mean - lo).min(hi - mean) / sd).max(0.0);
                let tail = 2.0 * gaussian_tail_bound(z);
                if (raw.mass() - 1.0).abs() > FAMILY_MASS_TOL + tail {
                    return Err(Error::Precondition(format!(
                        "gaussian(mean={mean}) has window mass {} on [{lo}, {hi}]; \
                         grid too small or too coarse",
                        raw.mass()
                    )));
                }
                members.push(GridMeasure::probability_normalized(
                    grid.clone(),
                    raw.density().to_vec(),
                )?);
            }
            ParametricFamily::new(grid.clone(), members, means.clone(), true)
        }
        FamilySpec::Cauchy { locations } => {
            if locations.is_empty() {
                return Err(Error::Domain("cauchy family with no locations".into()));
            }
            if grid.kind() != GridKind::Quadrature {
                return Err(Error::GridMismatch(
                    "cauchy family needs a quadrature grid".into(),
                ));
            }
            let lo = grid.points()[0];
            let hi = *grid.points().last().unwrap();
            let mut members = Vec::with_capacity(locations.len());
            for &loc in locations {
                let density: Vec<f64> = grid
                    .points()
                    .iter()
                    .map(|&x| cauchy_density(x, loc))
                    .collect();
                let raw = GridMeasure::finite(grid.clone(), density)?;
                // Heavy tail: compare against the analytic window mass, which
                // is well below 1 for any finite window.
                let window_mass =
                    ((hi - loc).atan() - (lo - loc).atan()) / std::f64::consts::PI;
                if (raw.mass() - window_mass).abs() > FAMILY_MASS_TOL {
                    return Err(Error::Precondition(format!(
                        "cauchy(location={loc}) grid mass {} disagrees with window mass \
                         {window_mass}; grid too coarse",
                        raw.mass()
                    )));
                }
                members.push(GridMeasure::probability_normalized(
                    grid.clone(),
                    raw.density().to_vec(),
                )?);
            }
            ParametricFamily::new(grid.clone(), members, locations.clone(), true)
        }
        FamilySpec::Bernoulli { thetas } => {
            if thetas.is_empty() {
                return Err(Error::Domain("bernoulli family with no parameters".into()));
            }
            if grid.kind() != GridKind::Counting
                || grid.len() != 2
                || grid.points() != [0.0, 1.0]
            {
                return Err(Error::GridMismatch(
                    "bernoulli family needs the counting grid {0, 1}".into(),
                ));
            }
            let mut members = Vec::with_capacity(thetas.len());
            for &t in thetas {
                if !(0.0..=1.0).contains(&t) {
                    return Err(Error::Domain(format!("bernoulli theta {t} not in [0, 1]")));
                }
                members.push(GridMeasure::probability(grid.clone(), vec![1.0 - t, t])?);
            }
            ParametricFamily::new(grid.clone(), members, thetas.clone(), true)
        }
        FamilySpec::Geometric { thetas } => {
            if thetas.is_empty() {
                return Err(Error::Domain("geometric family with no parameters".into()));
            }
            if grid.kind() != GridKind::Counting || grid.points()[0] != 0.0 {
                return Err(Error::GridMismatch(
                    "geometric family needs a counting grid starting at 0".into(),
                ));
            }
            let n_last = *grid.points().last().unwrap();
            let mut members = Vec::with_capacity(thetas.len());
            for &t in thetas {
                if !(0.0..1.0).contains(&t) {
                    return Err(Error::Domain(format!("geometric theta {t} not in [0, 1)")));
                }
                // Mass inside {0..N} is exactly 1 - theta^{N+1}.
                let covered = 1.0 - t.powf(n_last + 1.0);
                if (covered - 1.0).abs() > FAMILY_MASS_TOL {
                    return Err(Error::Precondition(format!(
                        "geometric(theta={t}) leaves tail mass {} beyond the grid; \
                         increase the truncation point",
                        1.0 - covered
                    )));
                }
                let density: Vec<f64> = grid
                    .points()
                    .iter()
                    .map(|&x| flush_tiny(t.powf(x) * (1.0 - t)))
                    .collect();
                let raw = GridMeasure::finite(grid.clone(), density)?;
                if (raw.mass() - covered).abs() > FAMILY_MASS_TOL {
                    return Err(Error::Precondition(format!(
                        "geometric(theta={t}) grid mass {} disagrees with closed form {covered}",
                        raw.mass()
                    )));
                }
                members.push(GridMeasure::probability_normalized(
                    grid.clone(),
                    raw.density().to_vec(),
                )?);
            }
            ParametricFamily::new(grid.clone(), members, thetas.clone(), true)
        }
        FamilySpec::PointMass { sites } => {
            if sites.is_empty() {
                return Err(Error::Domain("point-mass family with no sites".into()));
            }
            if grid.kind() != GridKind::Counting {
                return Err(Error::GridMismatch(
                    "point-mass family needs a counting grid".into(),
                ));
            }
            let first = grid.points()[0] as i64;
            let last = *grid.points().last().unwrap() as i64;
            let mut members = Vec::with_capacity(sites.len());
            let mut labels = Vec::with_capacity(sites.len());
            for &s in sites {
                if s < first || s > last {
                    return Err(Error::Domain(format!(
                        "point-mass site {s} outside grid {first}..={last}"
                    )));
                }
                let mut density = vec![0.0; grid.len()];
                density[(s - first) as usize] = 1.0;
                members.push(GridMeasure::probability(grid.clone(), density)?);
                labels.push(s as f64);
            }
            ParametricFamily::new(grid.clone(), members, labels, true)
        }
    }
}

/// A single point-mass probability measure `delta_site` on a counting grid.
pub fn point_mass(grid: &Arc<Grid>, site: i64) -> Result<GridMeasure> {
    let fam = make_family(&FamilySpec::PointMass { sites: vec![site] }, grid)?;
    Ok(fam.member(0).clone())
}
