//! Experiment runners. Each takes the assembled run configuration,
//! executes one experiment, and writes its reports into the output
//! directory: one or more CSV files, a `summary.jsonl` with one JSON
//! record per line, and a `MANIFEST` recording the config hash, seed, and
//! library version. Extended-real quantities are written as a value cell
//! plus a provenance status cell (`exact` / `lower_bound` / `diverged` /
//! `truncated`), and every floating-point cell is formatted at ten
//! significant digits in a fixed order, so identical configs produce
//! byte-identical reports.

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use riproj::config::{default_grid, family_spec, Command, RunConfig};
use riproj::divergence::{gain_to_hull, kl, HullOpts};
use riproj::evalue::{
    compare_strength, dominance_probes, gro_value, make_estat, simulate_eprocess, type1_check,
    verify_estat, Direction, EStatistic,
};
use riproj::measures::{make_family, Grid, GridMeasure, ParametricFamily};
use riproj::projection::{greedy_project, ProjectionOpts, ProjectionTrace};
use riproj::ratelab::{bernoulli_rate, epower_inequality, geometric_blowup};
use riproj::report::{ext_cell, gain_status_str, sig10, write_jsonl, write_manifest, Csv};
use riproj::subprob::{
    dominated_limit_check, harmonic_escape_instance, harmonic_escape_sparse, verify_at_extremes,
    weight_cap_instance,
};
use riproj::xreal::ExtReal;
use riproj::Error;

/// Why a run did not exit 0.
#[derive(Debug)]
pub enum Failure {
    /// Bad or missing user input; exit status 1.
    Usage(String),
    /// The experiment ran, but a checked invariant failed; exit status 2.
    /// The violation is also named in the run's summary report.
    Invariant(String),
    /// Library error; mapped to an exit status by kind in `main`.
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        Failure::Lib(e)
    }
}

/// Report accumulator: CSV artifacts are written as the run goes, summary
/// records and invariant violations are collected and flushed at the end
/// together with the manifest, so a failed invariant still leaves a
/// complete report naming it.
struct Report<'a> {
    cfg: &'a RunConfig,
    summary: Vec<Value>,
    violations: Vec<String>,
    files: Vec<String>,
}

impl<'a> Report<'a> {
    fn new(cfg: &'a RunConfig) -> Report<'a> {
        let mut rep = Report {
            cfg,
            summary: Vec::new(),
            violations: Vec::new(),
            files: Vec::new(),
        };
        rep.note(json!({
            "record": "run",
            "command": cfg.command.name(),
            "family": cfg.family,
            "alt": cfg.alt,
            "kmax": cfg.kmax,
            "seed": cfg.seed,
            "tol": cfg.tol,
            "experiment": cfg.experiment,
        }));
        rep
    }

    fn note(&mut self, v: Value) {
        self.summary.push(v);
    }

    fn violation(&mut self, name: String) {
        self.violations.push(name);
    }

    fn write_csv(&mut self, name: &str, csv: &Csv) -> Result<(), Error> {
        csv.write(&self.cfg.out.join(name))?;
        self.files.push(name.to_string());
        println!("wrote {}", self.cfg.out.join(name).display());
        Ok(())
    }

    /// Flushes summary and manifest; returns the joined violation text if
    /// any invariant failed.
    fn finish(mut self) -> Result<Option<String>, Error> {
        for v in &self.violations {
            self.summary.push(json!({ "record": "violation", "invariant": v }));
        }
        self.summary.push(json!({
            "record": "status",
            "ok": self.violations.is_empty(),
        }));
        write_jsonl(&self.cfg.out.join("summary.jsonl"), &self.summary)?;
        self.files.push("summary.jsonl".to_string());
        println!("wrote {}", self.cfg.out.join("summary.jsonl").display());

        let hash = format!("{:x}", Sha256::digest(self.cfg.canonical().as_bytes()));
        let entries = [
            ("command", self.cfg.command.name().to_string()),
            ("config_sha256", hash),
            ("seed", self.cfg.seed.to_string()),
            ("library_version", riproj::VERSION.to_string()),
            ("reports", self.files.join(" ")),
        ];
        write_manifest(&self.cfg.out.join("MANIFEST"), &entries)?;
        println!("wrote {}", self.cfg.out.join("MANIFEST").display());

        if self.violations.is_empty() {
            Ok(None)
        } else {
            Ok(Some(self.violations.join("; ")))
        }
    }
}

/// Executes `cfg.command` and writes its reports under `cfg.out`.
pub fn run(cfg: &RunConfig) -> Result<(), Failure> {
    std::fs::create_dir_all(&cfg.out).map_err(Error::Io)?;
    let mut rep = Report::new(cfg);
    match cfg.command {
        Command::Project => run_project(cfg, &mut rep)?,
        Command::Gain => run_gain(cfg, &mut rep)?,
        Command::Estat => run_estat(cfg, &mut rep)?,
        Command::Strength => run_strength(cfg, &mut rep)?,
        Command::Sequential => run_sequential(cfg, &mut rep)?,
        Command::Subprob => run_subprob(cfg, &mut rep)?,
        Command::Rate => run_rate(cfg, &mut rep)?,
        Command::Epower => run_epower(cfg, &mut rep)?,
    }
    match rep.finish().map_err(Failure::Lib)? {
        None => Ok(()),
        Some(msg) => Err(Failure::Invariant(msg)),
    }
}

fn hull_opts(cfg: &RunConfig) -> HullOpts {
    HullOpts {
        tol: cfg.tol,
        ..HullOpts::default()
    }
}

fn proj_opts(cfg: &RunConfig) -> ProjectionOpts {
    ProjectionOpts {
        hull: hull_opts(cfg),
        ..ProjectionOpts::default()
    }
}

fn opt_ext_cell(v: Option<ExtReal>) -> (String, &'static str) {
    match v {
        Some(x) => ext_cell(x),
        None => ("-".into(), "-"),
    }
}

fn dir_str(d: Direction) -> &'static str {
    match d {
        Direction::FirstStronger => "first_stronger",
        Direction::SecondStronger => "second_stronger",
        Direction::Tie => "tie",
        Direction::Incomparable => "incomparable",
    }
}

fn ext_json(v: ExtReal) -> Value {
    let (cell, status) = ext_cell(v);
    json!({ "value": cell, "status": status })
}

/// Resolves the family and the alternative (data) measure on a shared
/// grid. A multi-member alternative descriptor denotes its uniform
/// mixture, which for a single-member descriptor is the member itself.
fn resolve_pair(
    cfg: &RunConfig,
    fam_default: &str,
    alt_default: &str,
) -> Result<(ParametricFamily, GridMeasure, String, String), Failure> {
    let fam_name = cfg.family.clone().unwrap_or_else(|| fam_default.into());
    let alt_name = cfg.alt.clone().unwrap_or_else(|| alt_default.into());
    let fam_spec = family_spec(&fam_name)?;
    let alt_spec = family_spec(&alt_name)?;
    let grid = default_grid(&fam_spec, cfg)?;
    let family = make_family(&fam_spec, &grid)?;
    let alt_family = make_family(&alt_spec, &grid)?;
    let p = alt_family.uniform_mixture()?;
    Ok((family, p, fam_name, alt_name))
}

fn project_trace(
    cfg: &RunConfig,
    family: &ParametricFamily,
    p: &GridMeasure,
) -> Result<ProjectionTrace, Failure> {
    Ok(greedy_project(p, family, None, cfg.kmax, &proj_opts(cfg))?)
}

fn trace_csv(trace: &ProjectionTrace, family: &ParametricFamily) -> Result<Csv, Failure> {
    let final_w = trace.final_weights.dense(family.len())?;
    let mut csv = Csv::new(&[
        "k",
        "member",
        "alpha",
        "gain_value",
        "gain_status",
        "gain_upper",
        "gain_upper_status",
        "bound_b",
        "bound_b_status",
        "step_sq",
        "step_sq_status",
        "final_weight",
    ]);
    for it in &trace.iterations {
        let (gv, _) = ext_cell(it.gain_estimate.value);
        let (gu, gus) = opt_ext_cell(it.gain_estimate.certified_upper);
        let (bb, bbs) = ext_cell(it.bound_b);
        let (st, sts) = opt_ext_cell(it.mp_step);
        csv.push(vec![
            it.k.to_string(),
            it.theta_index.to_string(),
            sig10(it.alpha),
            gv,
            gain_status_str(it.gain_estimate.status).to_string(),
            gu,
            gus.to_string(),
            bb,
            bbs.to_string(),
            st,
            sts.to_string(),
            sig10(final_w[it.theta_index]),
        ]);
    }
    Ok(csv)
}

/// Residual gain of a finished trace: the certified upper bracket of the
/// final iterate's hull gain, floored at zero.
fn trace_residual(trace: &ProjectionTrace) -> Option<f64> {
    trace
        .iterations
        .last()
        .and_then(|it| it.gain_estimate.certified_upper)
        .and_then(|u| u.finite())
        .map(|u| u.max(0.0))
}

fn run_project(cfg: &RunConfig, rep: &mut Report) -> Result<(), Failure> {
    let (family, p, fam_name, alt_name) = resolve_pair(cfg, "gauss-pair", "cauchy")?;
    let trace = project_trace(cfg, &family, &p)?;
    rep.write_csv("trace.csv", &trace_csv(&trace, &family)?)?;

    let final_w = trace.final_weights.dense(family.len())?;
    let mut weights = Csv::new(&["member", "label", "final_weight"]);
    for (i, (&label, &w)) in family.labels().iter().zip(&final_w).enumerate() {
        weights.push(vec![i.to_string(), sig10(label), sig10(w)]);
    }
    rep.write_csv("weights.csv", &weights)?;

    let qhat = trace.final_measure(&family)?;
    let div = kl(&p, &qhat)?;
    let residual = trace
        .iterations
        .last()
        .and_then(|it| it.gain_estimate.certified_upper);
    rep.note(json!({
        "record": "projection",
        "family": fam_name,
        "alt": alt_name,
        "k_final": trace.iterations.last().map(|it| it.k),
        "reference_index": trace.reference_index,
        "divergence": ext_json(div),
        "residual_gain": residual.map(ext_json),
        "precondition_note": trace.precondition_note,
    }));
    Ok(())
}

fn run_gain(cfg: &RunConfig, rep: &mut Report) -> Result<(), Failure> {
    let fam_name = cfg.family.clone().ok_or_else(|| {
        Failure::Usage(
            "command `gain` has no default family; pass --family NAME \
             (e.g. --family gauss-pair) or set `family` in the config"
                .into(),
        )
    })?;
    let fam_spec = family_spec(&fam_name)?;
    let grid = default_grid(&fam_spec, cfg)?;
    let family = make_family(&fam_spec, &grid)?;
    let p = match &cfg.alt {
        Some(alt) => make_family(&family_spec(alt)?, &grid)?.uniform_mixture()?,
        None => family.uniform_mixture()?,
    };
    let q = family.uniform_mixture()?;
    let g = gain_to_hull(&p, &q, &family, &hull_opts(cfg))?;

    let (gv, _) = ext_cell(g.value);
    let (gu, gus) = opt_ext_cell(g.certified_upper);
    let mut csv = Csv::new(&[
        "gain_value",
        "gain_status",
        "gain_upper",
        "gain_upper_status",
        "gap",
        "iterations",
    ]);
    csv.push(vec![
        gv.clone(),
        gain_status_str(g.status).to_string(),
        gu,
        gus.to_string(),
        sig10(g.gap),
        g.iterations.to_string(),
    ]);
    rep.write_csv("gain.csv", &csv)?;
    rep.note(json!({
        "record": "gain",
        "family": fam_name,
        "alt": cfg.alt,
        "value": gv,
        "status": gain_status_str(g.status),
        "witness": g.attained_at,
    }));
    Ok(())
}

fn run_estat(cfg: &RunConfig, rep: &mut Report) -> Result<(), Failure> {
    let (family, p, fam_name, alt_name) = resolve_pair(cfg, "gauss-pair", "cauchy")?;
    let trace = project_trace(cfg, &family, &p)?;
    let qhat = trace.final_measure(&family)?;
    let e = make_estat(&p, &qhat)?;
    let rec = verify_estat(&e, &family)?;

    let mut csv = Csv::new(&["member", "label", "integral", "integral_status"]);
    for (i, (&label, &v)) in family.labels().iter().zip(&rec.integrals).enumerate() {
        let (cell, status) = ext_cell(v);
        csv.push(vec![i.to_string(), sig10(label), cell, status.to_string()]);
    }
    rep.write_csv("members.csv", &csv)?;

    let gro = gro_value(&e, &p)?;
    rep.note(json!({
        "record": "verification",
        "family": fam_name,
        "alt": alt_name,
        "sup_slack": sig10(rec.sup_slack),
        "worst_member": rec.worst_member,
        "passed": rec.passed,
        "growth_rate": ext_json(gro),
    }));
    if !rec.passed {
        rep.violation(format!(
            "a generator integral of the statistic exceeds one beyond tolerance \
             (worst member {}, slack {})",
            rec.worst_member,
            sig10(rec.sup_slack)
        ));
    }
    Ok(())
}

fn run_strength(cfg: &RunConfig, rep: &mut Report) -> Result<(), Failure> {
    let (family, p, fam_name, alt_name) = resolve_pair(cfg, "gauss-pair", "cauchy")?;
    let trace = project_trace(cfg, &family, &p)?;
    let qhat = trace.final_measure(&family)?;
    let ehat = make_estat(&p, &qhat)?;
    let residual = match trace_residual(&trace) {
        Some(r) => r,
        None => {
            rep.violation("residual gain of the projection trace is not finite".into());
            return Ok(());
        }
    };

    let probes = dominance_probes(&ehat, &p, &family)?;
    let mut csv = Csv::new(&["probe", "value", "value_status", "direction", "holds"]);
    let mut worst: Option<f64> = None;
    for (i, probe) in probes.iter().enumerate() {
        let verdict = compare_strength(&ehat, probe, &p)?;
        let holds = match verdict.value {
            ExtReal::Finite(v) => {
                worst = Some(worst.map_or(v, |w: f64| w.min(v)));
                v >= -residual - 1e-9
            }
            ExtReal::PosInf => true,
            _ => verdict.direction == Direction::Tie,
        };
        let (cell, status) = ext_cell(verdict.value);
        csv.push(vec![
            i.to_string(),
            cell,
            status.to_string(),
            dir_str(verdict.direction).to_string(),
            holds.to_string(),
        ]);
        if !holds {
            rep.violation(format!(
                "probe {i} beats the candidate statistic beyond the residual gain \
                 (deficit {}, residual {})",
                ext_cell(verdict.value).0,
                sig10(residual)
            ));
        }
    }
    rep.write_csv("strength.csv", &csv)?;
    rep.note(json!({
        "record": "dominance",
        "family": fam_name,
        "alt": alt_name,
        "n_probes": probes.len(),
        "residual_gain": sig10(residual),
        "worst_deficit": worst.map(sig10),
        "passed": rep.violations.is_empty(),
    }));
    Ok(())
}

fn run_sequential(cfg: &RunConfig, rep: &mut Report) -> Result<(), Failure> {
    let (family, p, fam_name, alt_name) = resolve_pair(cfg, "bernoulli:0.4", "bernoulli:0.5")?;
    let q = family.uniform_mixture()?;
    let e1 = make_estat(&p, &q)?;
    let e2 = EStatistic::ones(p.grid().clone());
    let n = cfg.kmax;
    let runs = 100;
    let growth = simulate_eprocess(&p, &e1, &e2, n, runs, cfg.seed)?;

    let mut csv = Csv::new(&["run", "n", "log_ratio_sum", "mean_rate"]);
    for row in &growth.rows {
        csv.push(vec![
            row.run.to_string(),
            row.n.to_string(),
            sig10(row.log_ratio_sum),
            sig10(row.mean_rate),
        ]);
    }
    rep.write_csv("runs.csv", &csv)?;

    let reference = growth
        .reference
        .value
        .finite()
        .ok_or_else(|| Error::Invariant("simulation reference value is not finite".into()))?;
    let within = (growth.mean_rate - reference).abs() <= 3.0 * growth.std_error;
    rep.note(json!({
        "record": "growth",
        "family": fam_name,
        "alt": alt_name,
        "n": n,
        "runs": runs,
        "mean_rate": sig10(growth.mean_rate),
        "std_error": sig10(growth.std_error),
        "reference": sig10(reference),
        "within_3se": within,
    }));
    if !within {
        rep.violation(format!(
            "empirical growth rate {} is more than three standard errors ({}) from \
             the population value {}",
            sig10(growth.mean_rate),
            sig10(growth.std_error),
            sig10(reference)
        ));
    }

    let t1 = type1_check(&q, &e1, 20, 2000, 0.05, cfg.seed.wrapping_add(1))?;
    rep.note(json!({
        "record": "type1",
        "rejections": t1.rejections,
        "runs": t1.runs,
        "rate": sig10(t1.rate),
        "threshold": sig10(t1.threshold),
        "passed": t1.passed,
    }));
    if !t1.passed {
        rep.violation(format!(
            "type-I error rate {} exceeds the three-standard-error threshold {}",
            sig10(t1.rate),
            sig10(t1.threshold)
        ));
    }
    Ok(())
}

fn run_subprob(cfg: &RunConfig, rep: &mut Report) -> Result<(), Failure> {
    // Weighted-mass cap: g(i) = 1/i, data mass p(i) proportional to i^-3,
    // cap level 1/2. The projection is a strict sub-probability measure
    // and the statistic integrates to exactly one at every extreme point.
    let n = cfg.support.unwrap_or(100_000).max(256) as i64;
    let grid = Grid::counting(1, n, true)?;
    let g: Vec<f64> = grid.points().iter().map(|&x| 1.0 / x).collect();
    let raw: Vec<f64> = grid.points().iter().map(|&x| x.powi(-3)).collect();
    let p = GridMeasure::probability_normalized(grid.clone(), raw)?;
    let inst = weight_cap_instance(&g, &p, 0.5, None)?;
    let ext = verify_at_extremes(&inst.estat, &inst.constraints)?;

    let mut cap = Csv::new(&[
        "nu",
        "c_value",
        "mass",
        "mass_status",
        "membership_lhs",
        "extremes_exactly_one",
    ]);
    cap.push(vec![
        sig10(inst.nu),
        sig10(inst.c_value),
        sig10(inst.mass),
        if inst.truncated { "truncated" } else { "exact" }.to_string(),
        sig10(inst.membership_lhs),
        ext.all_exactly_one.to_string(),
    ]);
    rep.write_csv("cap.csv", &cap)?;
    rep.note(json!({
        "record": "weight_cap",
        "support": n,
        "nu": inst.nu,
        "mass": sig10(inst.mass),
        "truncated": inst.truncated,
        "extremes_exactly_one": ext.all_exactly_one,
    }));
    if !(inst.mass < 1.0) {
        rep.violation(format!(
            "cap projection mass {} is not strictly below one",
            sig10(inst.mass)
        ));
    }
    if !ext.all_exactly_one {
        rep.violation("an extreme-point integral of the cap statistic differs from one".into());
    }

    // Escaping-mass sequence: feasible measures whose divergence from the
    // unit spike decreases to ln 2 while mass drains to the first site.
    let m = cfg.support.unwrap_or(1000).clamp(10, 2048) as usize;
    let esc = harmonic_escape_instance(m)?;
    let mut escape = Csv::new(&["n", "divergence", "divergence_status", "mass"]);
    for row in &esc.rows {
        let (cell, status) = ext_cell(row.divergence);
        escape.push(vec![
            row.n.to_string(),
            cell,
            status.to_string(),
            sig10(row.mass),
        ]);
    }
    rep.write_csv("escape.csv", &escape)?;
    let scan = esc.min_divergence_by_vertex_scan();
    rep.note(json!({
        "record": "vertex_scan",
        "sites": m,
        "best_n": scan.best_n,
        "max_first_site_mass": sig10(scan.max_first_site_mass),
        "divergence": sig10(scan.divergence),
        "ln2_gap": sig10(scan.divergence - std::f64::consts::LN_2),
    }));

    // Constraint preservation in the pointwise limit, at full scale via the
    // sparse two-spike sequence: the harmonic constraint is dominated and
    // survives; the undominated plain-mass control must be refused.
    let ns = [10u64, 1_000, 100_000, 10_000_000, 60_000_000];
    let (qseq, qstar) = harmonic_escape_sparse(&ns, 60_000_000)?;
    let harmonic =
        dominated_limit_check(&qseq, &qstar, |_| 1.0, |i| 1.0 / (i as f64), 1.0, 0.5)?;
    rep.note(json!({
        "record": "dominated_limit",
        "variant": "harmonic",
        "precondition_ok": harmonic.precondition_ok,
        "limit_mass": sig10(harmonic.limit_mass),
        "preserved_value": harmonic.preserved_value.map(sig10),
        "passed": harmonic.passed,
    }));
    if !harmonic.passed {
        rep.violation("the dominated harmonic constraint was not preserved in the limit".into());
    }
    let control = dominated_limit_check(&qseq, &qstar, |_| 1.0, |_| 1.0, 1.0, 1.0)?;
    rep.note(json!({
        "record": "dominated_limit",
        "variant": "undominated_control",
        "precondition_ok": control.precondition_ok,
        "limit_mass": sig10(control.limit_mass),
        "refused": !control.precondition_ok,
    }));
    if control.precondition_ok {
        rep.violation(
            "the undominated control constraint was accepted instead of refused".into(),
        );
    }
    Ok(())
}

fn run_rate(cfg: &RunConfig, rep: &mut Report) -> Result<(), Failure> {
    let which = cfg.experiment.as_deref().unwrap_or("bernoulli");
    match which {
        "bernoulli" => {
            let eps = [0.1, 0.05, 0.02, 0.01, 0.005, 0.002, 0.001];
            let exp = bernoulli_rate(&eps)?;
            let mut csv = Csv::new(&["epsilon", "delta", "slack", "bound", "c_beta", "status"]);
            for row in &exp.rows {
                let ok = row.slack <= row.bound + 1e-12;
                csv.push(vec![
                    sig10(row.epsilon),
                    sig10(row.delta),
                    sig10(row.slack),
                    sig10(row.bound),
                    sig10(row.c_beta),
                    "exact".to_string(),
                ]);
                if !ok {
                    rep.violation(format!(
                        "moment bound violated at epsilon {}: slack {} exceeds bound {}",
                        sig10(row.epsilon),
                        sig10(row.slack),
                        sig10(row.bound)
                    ));
                }
            }
            rep.write_csv("rate.csv", &csv)?;
            let slope = exp.fitted_slope;
            println!(
                "fitted slope {} over {} points",
                slope.map_or("-".into(), sig10),
                exp.fit_points
            );
            rep.note(json!({
                "record": "slope",
                "experiment": "bernoulli",
                "fitted_slope": slope.map(sig10),
                "fit_points": exp.fit_points,
            }));
        }
        "geometric" => {
            let thetas = [0.40, 0.45, 0.49, 0.499];
            let blow = geometric_blowup(&thetas)?;
            let mut csv = Csv::new(&[
                "theta",
                "delta",
                "delta_grid",
                "best_finite_ratio",
                "diverged_count",
                "status",
                "crossing",
            ]);
            for row in &blow.rows {
                csv.push(vec![
                    sig10(row.theta),
                    sig10(row.delta),
                    sig10(row.delta_grid),
                    sig10(row.best_finite_ratio),
                    row.diverged_count.to_string(),
                    if row.sup_diverged { "diverged" } else { "exact" }.to_string(),
                    row.crossing.map_or("-".into(), |c| c.to_string()),
                ]);
            }
            rep.write_csv("rate.csv", &csv)?;
            println!(
                "divergence decreasing: {}, ratio supremum diverged everywhere: {}",
                blow.deltas_strictly_decreasing, blow.all_sup_diverged
            );
            rep.note(json!({
                "record": "blowup",
                "experiment": "geometric",
                "deltas_strictly_decreasing": blow.deltas_strictly_decreasing,
                "all_sup_diverged": blow.all_sup_diverged,
            }));
            if !blow.deltas_strictly_decreasing {
                rep.violation("member divergences are not strictly decreasing".into());
            }
            if !blow.all_sup_diverged {
                rep.violation(
                    "a member's ratio supremum failed to diverge over the probe grid".into(),
                );
            }
        }
        other => {
            return Err(Failure::Usage(format!(
                "unknown rate experiment `{other}`; use bernoulli or geometric"
            )))
        }
    }
    Ok(())
}

fn run_epower(cfg: &RunConfig, rep: &mut Report) -> Result<(), Failure> {
    let which = cfg.experiment.as_deref().unwrap_or("bernoulli");
    let (vertices, family) = match which {
        "bernoulli" => {
            let grid = Grid::counting(0, 1, false)?;
            let spec = family_spec("bernoulli:0.45:0.55:11")?;
            let family = make_family(&spec, &grid)?;
            let vertices = vec![
                GridMeasure::probability(grid.clone(), vec![0.3, 0.7])?,
                GridMeasure::probability(grid, vec![0.7, 0.3])?,
            ];
            (vertices, family)
        }
        "gaussian" => {
            // A window where every member density stays positive, so the
            // residual tolerance is a finite certificate.
            let grid = match cfg.grid {
                Some(g) => g.build()?,
                None => Grid::quadrature(-20.0, 20.0, 2001)?,
            };
            let family = make_family(&family_spec("gaussian")?, &grid)?;
            let vfam = make_family(&family_spec("gaussian:-2:2:2")?, &grid)?;
            let vertices = vec![vfam.member(0).clone(), vfam.member(1).clone()];
            (vertices, family)
        }
        other => {
            return Err(Failure::Usage(format!(
                "unknown epower experiment `{other}`; use bernoulli or gaussian"
            )))
        }
    };
    let report = epower_inequality(&vertices, &family, cfg.kmax, &proj_opts(cfg))?;

    let mut csv = Csv::new(&[
        "vertex",
        "lhs",
        "lhs_status",
        "divergence_lower",
        "divergence_lower_status",
        "rhs",
        "rhs_status",
        "holds",
    ]);
    for row in &report.rows {
        let (lhs, lhs_s) = ext_cell(row.lhs);
        let (dl, dl_s) = ext_cell(row.divergence_lower);
        let (rhs, rhs_s) = ext_cell(row.rhs);
        csv.push(vec![
            row.vertex.to_string(),
            lhs,
            lhs_s.to_string(),
            dl,
            dl_s.to_string(),
            rhs,
            rhs_s.to_string(),
            row.holds.to_string(),
        ]);
        if !row.holds {
            rep.violation(format!(
                "e-power inequality fails at vertex {}: log-ratio integral below \
                 the divergence floor",
                row.vertex
            ));
        }
    }
    rep.write_csv("epower.csv", &csv)?;
    rep.note(json!({
        "record": "epower",
        "experiment": which,
        "n_vertices": report.n_vertices,
        "tol": sig10(report.tol),
        "k_final": report.trace.iterations.last().map(|it| it.k),
        "passed": report.passed,
    }));
    Ok(())
}
