//! Experiment driver: runs one configured mode and collects a key-value
//! report, flow trajectories and optional state snapshots.

pub mod checks;
pub mod config;
pub mod csv;

use std::f64::consts::TAU;
use std::path::Path;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::format;
use crate::lattice::examples::assemble_example;
use crate::lattice::flow::{heat_flow, LatticeFlowOptions, LatticeFlowReport, TrajectoryRow};
use crate::lattice::newton::newton_abelian;
use crate::linalg;
use crate::par;
use crate::random;
use crate::stability::{
    fixture_is_simple, generator_verdict, random_fixture, ssc_reduction_equiv, verdict, CurveFixture, CurveVerdict,
};

use checks::CheckOutcome;
pub use config::{ExperimentConfig, Mode};

/// Result of one run. `to_text` is a pure function of the configuration and
/// seed; wall-clock time is kept apart in `timing.txt`.
#[derive(Clone, Debug, Default)]
pub struct Report {
    pub mode: String,
    pub config_echo: Vec<(String, String)>,
    pub entries: Vec<(String, String)>,
    /// Named trajectories, written as `<name>.csv`.
    pub trajectories: Vec<(String, Vec<TrajectoryRow>)>,
    /// Named GPWB1 snapshots, written as `snapshots/<name>.gpwb`.
    pub snapshots: Vec<(String, String)>,
    pub suite: Vec<CheckOutcome>,
    pub wall_clock: f64,
}

impl Report {
    fn put(&mut self, key: impl Into<String>, value: impl ToString) {
        self.entries.push((key.into(), value.to_string()));
    }

    fn num(&mut self, key: impl Into<String>, value: f64) {
        self.put(key, format!("{value:?}"));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn get_f64(&self, key: &str) -> Option<f64> {
        self.get(key)?.parse().ok()
    }

    pub fn get_bool(&self, key: &str) -> Option<bool> {
        self.get(key)?.parse().ok()
    }

    pub fn check(&self, name: &str) -> Option<&CheckOutcome> {
        self.suite.iter().find(|c| c.name == name)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("# gpwb report\n");
        s.push_str(&format!("mode = {}\n", self.mode));
        for (k, v) in &self.config_echo {
            s.push_str(&format!("config.{k} = {v}\n"));
        }
        for (k, v) in &self.entries {
            s.push_str(&format!("{k} = {v}\n"));
        }
        if !self.suite.is_empty() {
            s.push_str("\n# suite\n");
            for c in &self.suite {
                s.push_str(&format!(
                    "suite.{} = {}\n",
                    c.name,
                    if c.pass { "PASS" } else { "FAIL" }
                ));
                for (k, v) in &c.metrics {
                    s.push_str(&format!("suite.{}.{k} = {v:?}\n", c.name));
                }
                for (i, f) in c.failures.iter().enumerate() {
                    s.push_str(&format!("suite.{}.failure.{i} = {f}\n", c.name));
                }
            }
        }
        s
    }

    /// Writes `report.txt`, `timing.txt`, the CSVs and snapshots into `dir`.
    pub fn write(&self, dir: &Path, csv: bool) -> Result<()> {
        format::save(&dir.join("report.txt"), &self.to_text())?;
        format::save(
            &dir.join("timing.txt"),
            &format!("wall_clock_seconds = {:?}\n", self.wall_clock),
        )?;
        if csv {
            for (name, rows) in &self.trajectories {
                csv::emit_csv(rows, &dir.join(format!("{name}.csv")))?;
            }
        }
        for (name, text) in &self.snapshots {
            format::save(&dir.join("snapshots").join(format!("{name}.gpwb")), text)?;
        }
        Ok(())
    }
}

fn flatten(prefix: &str, v: &toml::Value, out: &mut Vec<(String, String)>) {
    match v {
        toml::Value::Table(t) => {
            for (k, v) in t {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, v, out);
            }
        }
        toml::Value::Float(f) => out.push((prefix.to_string(), format!("{f:?}"))),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

fn config_echo(cfg: &ExperimentConfig) -> Vec<(String, String)> {
    let mut out = Vec::new();
    if let Ok(v) = toml::Value::try_from(cfg) {
        flatten("", &v, &mut out);
    }
    out.retain(|(k, _)| k != "mode" && k != "output.dir");
    out
}

/// Runs the configured mode. Solver divergence is a report outcome; errors
/// are reserved for bad configurations, fixtures and I/O.
pub fn run(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let start = Instant::now();
    let mut report = Report {
        mode: cfg.mode.name().to_string(),
        config_echo: config_echo(cfg),
        ..Report::default()
    };
    match cfg.mode {
        Mode::KempfNess => run_kempf_ness(cfg, &mut report)?,
        Mode::VortexThreshold => run_threshold(cfg, &mut report)?,
        Mode::InvariantSuite => run_suite(cfg, &mut report),
        _ => run_fixtures(cfg, &mut report)?,
    }
    report.wall_clock = start.elapsed().as_secs_f64();
    Ok(report)
}

fn fixture_list(cfg: &ExperimentConfig) -> Result<(Vec<CurveFixture>, bool)> {
    let kind = cfg.mode.kind().expect("fixture mode");
    let override_c = cfg.batch.c.as_ref().map(|v| v.iter().map(|r| r.0).collect::<Vec<_>>());
    let mut list = match &cfg.fixture {
        Some(fx) => {
            let f = match (&fx.path, &fx.degrees) {
                (Some(path), _) => format::read_fixture(&format::load(path)?).map_err(|e| Error::Config {
                    location: format!("fixture.path ({})", path.display()),
                    message: e.to_string(),
                })?,
                (None, Some(degrees)) => CurveFixture {
                    kind,
                    degrees: degrees.clone(),
                    support: fx.support.clone(),
                    c: fx
                        .c
                        .as_ref()
                        .map(|v| v.iter().map(|r| r.0).collect())
                        .unwrap_or_default(),
                    smooth: fx.smooth,
                },
                (None, None) => return config::config_err("fixture", "needs path or degrees"),
            };
            if f.kind != kind {
                return config::config_err(
                    "fixture",
                    format!("fixture kind {} does not match mode {}", f.kind.name(), cfg.mode),
                );
            }
            vec![f]
        }
        None => {
            let mut rng = random::rng(cfg.seed);
            (0..cfg.batch.count.unwrap_or(10))
                .map(|_| random_fixture(kind, &mut rng))
                .collect()
        }
    };
    if let Some(c) = override_c {
        for f in &mut list {
            f.c = c.clone();
        }
    }
    for f in &list {
        let location = if cfg.fixture.is_some() { "fixture" } else { "batch.c" };
        f.validate().map_err(|e| Error::Config {
            location: location.into(),
            message: e.to_string(),
        })?;
    }
    Ok((list, cfg.fixture.is_some()))
}

fn verdict_entries(p: &str, v: &CurveVerdict, r: &mut Report) {
    r.put(format!("{p}.stable"), v.stable());
    r.put(format!("{p}.marginal"), v.marginal());
    r.put(format!("{p}.unsolvable"), v.unsolvable);
    r.num(format!("{p}.slack"), v.verdict.slack);
    if let Some(s) = v.exact_slack {
        r.put(format!("{p}.exact_slack"), s);
    }
    if let Some(w) = &v.verdict.witness {
        r.put(format!("{p}.witness"), &w.label);
    }
    r.put(format!("{p}.inequalities"), v.inequalities);
    r.put(format!("{p}.lattice_complete"), v.lattice_complete);
    if let Some(d) = v.dual_agrees {
        r.put(format!("{p}.dual_agrees"), d);
    }
    if let Some(a) = v.alpha {
        r.put(format!("{p}.alpha"), a);
    }
    for (i, n) in v.notes.iter().enumerate() {
        r.put(format!("{p}.note.{i}"), n);
    }
}

fn flow_entries(p: &str, f: &LatticeFlowReport, r: &mut Report) {
    r.put(format!("{p}.converged"), f.converged);
    r.put(format!("{p}.diverged"), f.diverged);
    r.put(format!("{p}.iterations"), f.iterations);
    r.num(format!("{p}.final_l2"), f.final_l2);
    r.num(format!("{p}.final_linf"), f.final_linf);
    r.num(format!("{p}.sup_log_metric"), f.sup_log_metric);
    r.num(format!("{p}.degree_drift"), f.degree_drift());
    for (i, v) in f.factor_l2.iter().enumerate() {
        r.num(format!("{p}.factor_l2.{i}"), *v);
    }
    r.put(format!("{p}.rejections"), f.rejections.len());
}

fn run_one_fixture(cfg: &ExperimentConfig, k: usize, f: &CurveFixture, flow: bool) -> Result<Report> {
    let mut r = Report::default();
    let p = format!("fixture.{k}");
    r.put(format!("{p}.kind"), f.kind.name());
    r.put(format!("{p}.degrees"), format!("{:?}", f.degrees));
    r.put(
        format!("{p}.c"),
        f.c.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" "),
    );
    r.put(format!("{p}.support"), f.support.len());
    r.put(format!("{p}.constraint_satisfied"), f.satisfies_constraint());
    for (i, n) in f.flags().iter().enumerate() {
        r.put(format!("{p}.flag.{i}"), n);
    }
    let v = verdict(f)?;
    verdict_entries(&format!("{p}.verdict"), &v, &mut r);
    let g = generator_verdict(f)?;
    r.put(format!("{p}.generator.stable"), g.stable());
    r.put(format!("{p}.generator.marginal"), g.marginal());
    r.put(format!("{p}.routes_agree"), g.stable() == v.stable());
    let simple = fixture_is_simple(f, cfg.seed.wrapping_add(k as u64))?;
    r.put(format!("{p}.simple"), simple);
    if cfg.batch.ssc_trials > 0 {
        let s = ssc_reduction_equiv(f, cfg.batch.ssc_trials, cfg.seed.wrapping_add(k as u64))?;
        r.put(format!("{p}.ssc.agree"), s.agree);
        r.put(format!("{p}.ssc.admissible"), s.admissible);
        r.num(format!("{p}.ssc.max_abs_error"), s.max_abs_error);
    }
    if flow {
        match assemble_example(&f.to_example(cfg.lattice.n, cfg.lattice.amplitude)) {
            Ok(mut st) => {
                let fr = heat_flow(&mut st, &cfg.flow.options())?;
                flow_entries(&format!("{p}.flow"), &fr, &mut r);
                let skip = if !simple {
                    Some("non_simple")
                } else if v.unsolvable {
                    Some("unsolvable")
                } else if v.marginal() {
                    Some("marginal")
                } else {
                    None
                };
                match skip {
                    Some(why) => r.put(format!("{p}.consistency"), format!("skipped_{why}")),
                    None if !fr.converged && !fr.diverged => r.put(format!("{p}.consistency"), "undecided"),
                    None => r.put(
                        format!("{p}.consistency"),
                        if fr.converged == v.stable() {
                            "consistent"
                        } else {
                            "inconsistent"
                        },
                    ),
                }
                r.trajectories.push((format!("fixture_{k}"), fr.trajectory));
                if cfg.output.snapshots {
                    r.snapshots.push((format!("fixture_{k}"), format::write_snapshot(&st)));
                }
            }
            Err(e) => r.put(format!("{p}.flow.skipped"), e),
        }
    }
    Ok(r)
}

fn run_fixtures(cfg: &ExperimentConfig, report: &mut Report) -> Result<()> {
    let (list, explicit) = fixture_list(cfg)?;
    let flow = cfg.flow.enabled.unwrap_or(explicit);
    report.put("fixtures", list.len());
    let runs = par::map_indexed(list.len(), |k| run_one_fixture(cfg, k, &list[k], flow));
    let (mut stable, mut agree, mut consistent, mut inconsistent) = (0, 0, 0, 0);
    for run in runs {
        let run = run?;
        for (k, v) in &run.entries {
            if k.ends_with(".verdict.stable") && v == "true" {
                stable += 1;
            }
            if k.ends_with(".routes_agree") && v == "true" {
                agree += 1;
            }
            if k.ends_with(".consistency") {
                consistent += (v == "consistent") as usize;
                inconsistent += (v == "inconsistent") as usize;
            }
        }
        report.entries.extend(run.entries);
        report.trajectories.extend(run.trajectories);
        report.snapshots.extend(run.snapshots);
    }
    report.put("summary.stable", stable);
    report.put("summary.routes_agree", agree);
    if flow {
        report.put("summary.flow_consistent", consistent);
        report.put("summary.flow_inconsistent", inconsistent);
    }
    Ok(())
}

fn run_kempf_ness(cfg: &ExperimentConfig, report: &mut Report) -> Result<()> {
    let count = cfg.batch.count.unwrap_or(100);
    let (out, rows) = checks::kempf_ness_correspondence(count, cfg.seed)?;
    for (k, row) in rows.iter().enumerate() {
        let p = format!("fixture.{k}");
        report.put(format!("{p}.k"), row.k);
        report.num(format!("{p}.c"), row.c);
        report.put(format!("{p}.stable"), row.stable);
        report.put(format!("{p}.oracle_stable"), row.oracle_stable);
        report.put(format!("{p}.converged"), row.converged);
        report.put(format!("{p}.diverged"), row.diverged);
        report.put(format!("{p}.iterations"), row.iterations);
        report.num(format!("{p}.final_residual"), row.final_residual);
    }
    report.suite.push(out);
    Ok(())
}

/// The vortex predicate: heat flow converges at c.
fn vortex_flow(
    cfg: &ExperimentConfig,
    c: f64,
    opts: &LatticeFlowOptions,
) -> Result<(crate::lattice::LatticePairState, LatticeFlowReport)> {
    let mut st = assemble_example(&checks::vortex_params(cfg.lattice.n, cfg.scan.degree, c))?;
    let fr = heat_flow(&mut st, opts)?;
    Ok((st, fr))
}

fn run_threshold(cfg: &ExperimentConfig, report: &mut Report) -> Result<()> {
    let d = cfg.scan.degree;
    let unit = TAU * d as f64;
    let opts = cfg.flow.options();
    report.num("threshold.expected", unit);

    // Endpoint checks at 2× and 0.5× the threshold, then the scan ends.
    let probes = [
        ("above", 2.0 * unit),
        ("below", 0.5 * unit),
        ("scan_max", cfg.scan.c_max * unit),
        ("scan_min", cfg.scan.c_min * unit),
    ];
    let runs = par::map_indexed(probes.len(), |i| vortex_flow(cfg, probes[i].1, &opts));
    let mut conv = [false; 4];
    for (i, run) in runs.into_iter().enumerate() {
        let (_, fr) = run?;
        let p = format!("endpoint.{}", probes[i].0);
        report.num(format!("{p}.c"), probes[i].1);
        flow_entries(&p, &fr, report);
        conv[i] = fr.converged;
        report
            .trajectories
            .push((format!("endpoint_{}", probes[i].0), fr.trajectory));
    }

    let (mut lo, mut hi) = (probes[3].1, probes[2].1);
    let bracketed = conv[2] && !conv[3];
    report.put("threshold.bracketed", bracketed);
    if bracketed {
        let mut steps = 0;
        while (hi - lo) / hi >= cfg.scan.rel_width && steps < cfg.scan.max_bisections {
            let mid = 0.5 * (lo + hi);
            let (_, fr) = vortex_flow(cfg, mid, &opts)?;
            let p = format!("bisection.{steps}");
            report.num(format!("{p}.c"), mid);
            report.put(format!("{p}.converged"), fr.converged);
            report.put(format!("{p}.diverged"), fr.diverged);
            report.put(format!("{p}.iterations"), fr.iterations);
            if fr.converged {
                hi = mid;
            } else {
                lo = mid;
            }
            steps += 1;
        }
        report.put("threshold.bisections", steps);
        report.num("threshold.lo", lo);
        report.num("threshold.hi", hi);
        report.num("threshold.rel_width", (hi - lo) / hi);
        report.num("threshold.estimate", 0.5 * (lo + hi));
        report.put("threshold.contains_expected", lo <= unit && unit <= hi);
        report.put("threshold.marginal_band", format!("{lo:?} {hi:?}"));
    }

    if cfg.scan.newton {
        let fine = LatticeFlowOptions {
            tol: opts.tol.min(1e-10),
            ..opts.clone()
        };
        let (a, fr) = vortex_flow(cfg, 2.0 * unit, &fine)?;
        let mut b = assemble_example(&checks::vortex_params(cfg.lattice.n, d, 2.0 * unit))?;
        let nw = newton_abelian(&mut b, &opts)?;
        report.put("newton.heat_flow_converged", fr.converged);
        report.put("newton.converged", nw.report.converged);
        report.put("newton.solvable", nw.solvable);
        report.num("newton.obstruction", nw.obstruction);
        let sites = a.lattice().sites();
        let diff = (0..sites)
            .map(|s| linalg::max_abs(&(a.factor(0).metric(s) - b.factor(0).metric(s))))
            .fold(0.0, f64::max);
        report.num("newton.metric_sup_diff", diff);
        let mut below = assemble_example(&checks::vortex_params(cfg.lattice.n, d, 0.5 * unit))?;
        let nb = newton_abelian(&mut below, &opts)?;
        report.put("newton.below.solvable", nb.solvable);
        report.num("newton.below.obstruction", nb.obstruction);
    }
    Ok(())
}

fn guarded(name: &str, r: Result<CheckOutcome>) -> CheckOutcome {
    r.unwrap_or_else(|e| CheckOutcome {
        name: name.to_string(),
        pass: false,
        metrics: Vec::new(),
        failures: vec![e.to_string()],
    })
}

/// Every named check with the configured sizes.
pub fn suite_checks(cfg: &ExperimentConfig) -> Vec<CheckOutcome> {
    use crate::lattice::examples::ExampleKind;
    let s = &cfg.suite;
    let seed = cfg.seed;
    let opts = cfg.flow.options();
    let tasks: Vec<(&str, Box<dyn Fn() -> Result<CheckOutcome> + Sync + Send + '_>)> = vec![
        (
            "moment_map",
            Box::new(move || checks::moment_map_suite(s.moment_instances, seed)),
        ),
        (
            "kempf_ness",
            Box::new(move || checks::kempf_ness_correspondence(s.kempf_ness_fixtures, seed + 1).map(|x| x.0)),
        ),
        (
            "psi_functional",
            Box::new(move || checks::psi_functional(s.psi_instances, s.psi_panels, seed + 2)),
        ),
        (
            "coherent_trace_identity",
            Box::new(move || checks::trace_identities(ExampleKind::CoherentSystem, 20, s.n, seed + 3)),
        ),
        ("coherent_flow", Box::new(|| checks::coherent_flow(s.n, &opts))),
        (
            "higgs_trace_identities",
            Box::new(move || checks::trace_identities(ExampleKind::Higgs, 20, s.n, seed + 4)),
        ),
        ("higgs_flows", Box::new(|| checks::higgs_flows(s.n, &opts))),
        (
            "twisted_sum_rule",
            Box::new(move || checks::trace_identities(ExampleKind::TwistedTriple, 20, s.n, seed + 5)),
        ),
        (
            "twisted_reduction",
            Box::new(move || checks::twisted_reduction(2 * s.fixtures, seed + 6)),
        ),
        (
            "verdict_routes",
            Box::new(move || checks::verdict_routes(s.fixtures, seed + 7)),
        ),
        (
            "ssc_reduction",
            Box::new(move || checks::ssc_check(s.fixtures, s.ssc_trials, seed + 8)),
        ),
        ("flow_hygiene", Box::new(|| checks::flow_hygiene(s.n, &opts, seed + 9))),
        (
            "section_dimensions",
            Box::new(|| checks::section_dimensions(cfg.lattice.n, &[1, 2, 3])),
        ),
    ];
    par::map_indexed(tasks.len(), |i| guarded(tasks[i].0, (tasks[i].1)()))
}

fn run_suite(cfg: &ExperimentConfig, report: &mut Report) {
    report.suite = suite_checks(cfg);
    let passed = report.suite.iter().filter(|c| c.pass).count();
    report.put("suite.checks", report.suite.len());
    report.put("suite.passed", passed);
    report.put("suite.all_pass", passed == report.suite.len());
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_mode_reports_verdicts_and_flow() {
        let cfg = ExperimentConfig::parse(
            "mode = \"coherent_system\"\nseed = 3\n[lattice]\nn = 16\n[fixture]\ndegrees = [[1], [0]]\nsupport = [{ component = [0, 0] }]\nc = [\"3/2\", \"-1/2\"]\n",
        )
        .unwrap();
        let r = run(&cfg).unwrap();
        assert_eq!(r.get("fixture.0.verdict.stable"), Some("true"));
        assert_eq!(r.get("fixture.0.simple"), Some("true"));
        assert_eq!(r.get("fixture.0.flow.converged"), Some("true"));
        assert_eq!(r.get("fixture.0.consistency"), Some("consistent"));
        assert_eq!(r.trajectories.len(), 1);
        let text = r.to_text();
        assert!(text.contains("config.lattice.n = 16\n"));
        assert!(!text.contains("wall"));
    }

    #[test]
    fn random_batch_is_deterministic() {
        let mut cfg = ExperimentConfig::for_mode(Mode::Triple);
        cfg.seed = 11;
        cfg.batch.count = Some(6);
        let a = run(&cfg).unwrap().to_text();
        let b = run(&cfg).unwrap().to_text();
        assert_eq!(a, b);
        assert!(a.contains("fixture.5.verdict.stable"));
        assert!(!a.contains("fixture.0.flow"));
    }

    #[test]
    fn fixture_kind_must_match_mode() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.fix");
        std::fs::write(&path, format::write_fixture(&checks::higgs_off_diagonal_fixture())).unwrap();
        let mut cfg = ExperimentConfig::for_mode(Mode::Pair);
        cfg.lattice.n = 16;
        cfg.fixture = Some(config::FixtureSection {
            path: Some(path),
            ..Default::default()
        });
        assert!(matches!(run(&cfg), Err(Error::Config { .. })));
        cfg.mode = Mode::Higgs;
        assert!(run(&cfg).is_ok());
    }
}
