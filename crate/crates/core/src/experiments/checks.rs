//! Named property checks shared by the invariant suite and the acceptance
//! tests. Every check is deterministic for a given seed.

use rand::Rng;

use crate::algebra::{inner_product, project_subalgebra, FactorMode, GroupElement, ProductGroupSpec, SubgroupSetting};
use crate::error::Result;
use crate::kempf_ness::{
    gradient_flow, is_simple, kn_functional, sampled_stability_test, stability_test, FlowOptions, SubspaceLattice,
};
use crate::lattice::examples::{assemble_example, constraint_slack, ExampleKind, ExampleParams, SupportEntry};
use crate::lattice::flow::{heat_flow, LatticeFlowOptions, LatticeFlowReport};
use crate::lattice::residual::pointwise_residual;
use crate::lattice::sections::line_bundle_sections;
use crate::lattice::{build_torus, LatticePairState};
use crate::linalg::{self, cr};
use crate::moment::{act, infinitesimal_act, mu_full, mu_shifted, omega, RepSpec};
use crate::stability::sublattice::section_span_dim;
use crate::stability::{
    generator_verdict, higgs_stable, random_fixture, ssc_reduction_equiv, triple_stable, twisted_triple_stable,
    verdict, CurveFixture, FixtureEntry, Rational,
};
use crate::{par, random, CMat, CVec};

/// Outcome of one named check: pass/fail plus the measured quantities.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub pass: bool,
    pub metrics: Vec<(String, f64)>,
    pub failures: Vec<String>,
}

impl CheckOutcome {
    fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            pass: true,
            metrics: Vec::new(),
            failures: Vec::new(),
        }
    }

    fn metric(&mut self, key: &str, value: f64) {
        self.metrics.push((key.to_string(), value));
    }

    fn require(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.pass = false;
            if self.failures.len() < 20 {
                self.failures.push(what());
            }
        }
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.metrics.iter().find(|(k, _)| k == key).map(|&(_, v)| v)
    }

    /// One line: `name PASS|FAIL key=value ...`.
    pub fn summary(&self) -> String {
        let mut s = format!("{} {}", self.name, if self.pass { "PASS" } else { "FAIL" });
        for (k, v) in &self.metrics {
            s.push_str(&format!(" {k}={v:?}"));
        }
        s
    }
}

fn random_ranks(kind: ExampleKind, rng: &mut impl Rng) -> Vec<usize> {
    let r = |rng: &mut dyn rand::RngCore| rng.gen_range(1..=3usize);
    match kind {
        ExampleKind::TwistedTriple => vec![r(rng), r(rng), r(rng)],
        ExampleKind::Higgs => vec![r(rng), 1],
        _ => vec![r(rng), r(rng)],
    }
}

fn random_setting(kind: ExampleKind, spec: &ProductGroupSpec, rng: &mut impl Rng) -> Result<SubgroupSetting> {
    let c: Vec<f64> = (0..spec.num_factors()).map(|_| rng.gen_range(-2.0..2.0)).collect();
    SubgroupSetting::new(spec, kind.modes(), &c)
}

fn restrict_to_subgroup(g: &GroupElement, setting: &SubgroupSetting) -> GroupElement {
    GroupElement::complexified(
        g.blocks()
            .iter()
            .zip(setting.modes())
            .map(|(b, m)| {
                if m.is_frozen() {
                    linalg::identity(b.nrows())
                } else {
                    b.clone()
                }
            })
            .collect(),
    )
}

/// Equivariance, skew-Hermitian values, the Hamiltonian identity by central
/// differences (ε = 1e−5, relative 1e−4), the Hom trace sum rule and adjoint
/// tracelessness on random instances of the five example representations.
pub fn moment_map_suite(instances: usize, seed: u64) -> Result<CheckOutcome> {
    let mut out = CheckOutcome::new("moment_map");
    let mut rng = random::rng(seed);
    let (mut eq_err, mut skew_err, mut ham_err, mut trace_err) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut count = 0usize;
    for kind in ExampleKind::ALL {
        for _ in 0..instances {
            let rep = kind.rep(&random_ranks(kind, &mut rng))?;
            let spec = rep.group().clone();
            let x = random::vector(&mut rng, rep.dim());
            let scale = 1.0 + x.norm_squared();
            let mu = mu_full(&x, &rep)?;

            let k = random::unitary_element(&mut rng, &spec);
            let lhs = mu_full(&act(&k, &x, &rep)?, &rep)?;
            let rhs = mu.conjugate(&k)?;
            let e = lhs.sub(&rhs).max_abs() / scale;
            eq_err = eq_err.max(e);
            out.require(e <= 1e-12, || format!("{}: equivariance error {e:e}", kind.name()));

            let e = mu
                .blocks()
                .iter()
                .map(|b| linalg::max_abs(&(b + b.adjoint())))
                .fold(0.0, f64::max)
                / scale;
            skew_err = skew_err.max(e);
            out.require(e <= 1e-14, || format!("{}: skew-Hermitian defect {e:e}", kind.name()));

            let v = random::vector(&mut rng, rep.dim());
            let s = random::compact_element(&mut rng, &spec);
            let h = |y: &CVec| -> Result<f64> { inner_product(&mu_full(y, &rep)?, &s, &spec) };
            let eps = 1e-5;
            let fd = (h(&(&x + &v * cr(eps)))? - h(&(&x - &v * cr(eps)))?) / (2.0 * eps);
            let exact = 2.0 * omega(&infinitesimal_act(&s, &x, &rep)?, &v);
            let rel = (fd - exact).abs() / exact.abs().max(1e-6);
            ham_err = ham_err.max(rel);
            out.require(rel <= 1e-4, || {
                format!("{}: Hamiltonian relative error {rel:e}", kind.name())
            });

            let tr: Vec<f64> = mu.blocks().iter().map(|b| linalg::trace(b).im).collect();
            let rule: Vec<f64> = match kind {
                ExampleKind::TripleFixedE2 | ExampleKind::CoherentSystem => vec![tr[0] + tr[1]],
                ExampleKind::TwistedTriple => vec![tr[0] + tr[1], tr[0] + tr[2]],
                ExampleKind::Higgs => vec![tr[0]],
                ExampleKind::PairTensor => vec![tr[0] - tr[1]],
            };
            let e = rule.iter().fold(0.0f64, |a, b| a.max(b.abs())) / scale;
            trace_err = trace_err.max(e);
            out.require(e <= 1e-13, || format!("{}: trace rule defect {e:e}", kind.name()));
            count += 1;
        }
    }
    out.metric("instances", count as f64);
    out.metric("max_equivariance_error", eq_err);
    out.metric("max_skew_defect", skew_err);
    out.metric("max_hamiltonian_rel_error", ham_err);
    out.metric("max_trace_rule_defect", trace_err);
    Ok(out)
}

/// One finite-dimensional Kempf–Ness fixture: U(2) acting on 2×k matrices,
/// second factor frozen.
#[derive(Clone, Debug, PartialEq)]
pub struct KempfNessRow {
    pub k: usize,
    pub c: f64,
    pub simple: bool,
    pub stable: bool,
    pub marginal: bool,
    pub oracle_stable: bool,
    pub converged: bool,
    pub diverged: bool,
    pub iterations: usize,
    pub final_residual: f64,
}

fn kempf_ness_fixture(rng: &mut impl Rng) -> Result<KempfNessRow> {
    let k = rng.gen_range(2..=3usize);
    let rep = RepSpec::tensor(2, k)?;
    let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    let c = sign * rng.gen_range(0.2..2.0);
    let setting = SubgroupSetting::new(rep.group(), vec![FactorMode::Full, FactorMode::Frozen], &[c, 0.0])?;
    let mut x = random::vector(rng, 2 * k);
    if rng.gen_bool(0.2) {
        let t = random::complex(rng);
        for j in 0..k {
            x[k + j] = x[j] * t;
        }
    }
    let simple = is_simple(&x, &rep, &setting)?;
    let mut lines = SubspaceLattice::coordinate(rep.group());
    for j in 0..k {
        let col = CMat::from_column_slice(2, 1, &[x[j], x[k + j]]);
        let n = linalg::fro_norm(&col);
        if n > 1e-12 {
            lines.per_factor[0].push(col / cr(n));
        }
    }
    lines.per_factor[1].clear();
    let v = stability_test(&x, &rep, &setting, &lines)?;
    let oracle = sampled_stability_test(&x, &rep, &setting, 64, rng)?;
    let flow = gradient_flow(&x, &rep, &setting, &FlowOptions::default())?;
    Ok(KempfNessRow {
        k,
        c,
        simple,
        stable: v.stable,
        marginal: v.marginal,
        oracle_stable: oracle.stable,
        converged: flow.converged,
        diverged: flow.diverged,
        iterations: flow.iterations,
        final_residual: flow.final_residual,
    })
}

/// Gradient flow converges iff the exhaustive generator test says stable,
/// and the sampled brute-force test agrees, on `count` simple fixtures.
pub fn kempf_ness_correspondence(count: usize, seed: u64) -> Result<(CheckOutcome, Vec<KempfNessRow>)> {
    let mut out = CheckOutcome::new("kempf_ness");
    let mut rng = random::rng(seed);
    let mut rows = Vec::new();
    let mut skipped = 0usize;
    while rows.len() < count {
        let row = kempf_ness_fixture(&mut rng)?;
        if !row.simple || row.marginal {
            skipped += 1;
            continue;
        }
        rows.push(row);
    }
    let rows: Vec<KempfNessRow> = rows;
    let mut stable = 0;
    for (i, r) in rows.iter().enumerate() {
        stable += r.stable as usize;
        out.require(r.converged == r.stable, || {
            format!(
                "fixture {i}: stable={} but converged={} (c={})",
                r.stable, r.converged, r.c
            )
        });
        out.require(r.oracle_stable == r.stable, || {
            format!(
                "fixture {i}: generator verdict {} vs sampled verdict {}",
                r.stable, r.oracle_stable
            )
        });
        out.require(!r.converged || r.final_residual < 1e-8, || {
            format!("fixture {i}: residual {}", r.final_residual)
        });
    }
    out.metric("fixtures", rows.len() as f64);
    out.metric("stable", stable as f64);
    out.metric("skipped_non_simple", skipped as f64);
    Ok((out, rows))
}

/// Cocycle identity Ψ(x, gh) = Ψ(x, h) + Ψ(h·x, g) and the critical-point
/// property at explicitly constructed zeros of μ_ℋ − c_ℋ.
pub fn psi_functional(instances: usize, panels: usize, seed: u64) -> Result<CheckOutcome> {
    let mut out = CheckOutcome::new("psi_functional");
    let mut rng = random::rng(seed);
    let mut cocycle_err = 0.0f64;
    let mut crit = 0.0f64;
    let mut slope_err = 0.0f64;
    let mut min_psi = f64::INFINITY;
    for t in 0..instances {
        let kind = ExampleKind::ALL[t % 5];
        let rep = kind.rep(&random_ranks(kind, &mut rng))?;
        let spec = rep.group().clone();
        let setting = random_setting(kind, &spec, &mut rng)?;
        let x = random::vector(&mut rng, rep.dim());
        let g = restrict_to_subgroup(&random::complex_element(&mut rng, &spec, 0.4), &setting);
        let h = restrict_to_subgroup(&random::complex_element(&mut rng, &spec, 0.4), &setting);
        let psi = |y: &CVec, g: &GroupElement| crate::kempf_ness::kn_functional_group(y, g, &rep, &setting, panels);
        let lhs = psi(&x, &g.mul(&h))?;
        let rhs = psi(&x, &h)? + psi(&act(&h, &x, &rep)?, &g)?;
        let e = (lhs - rhs).abs() / (1.0 + lhs.abs());
        cocycle_err = cocycle_err.max(e);
        out.require(e <= 1e-6, || {
            format!("instance {t} ({}): cocycle defect {e:e}", kind.name())
        });

        // d/dt Ψ(y, e^{√−1 t s}) at t = 0 equals ⟨μ_ℋ(y) − c_ℋ, s⟩.
        let s = project_subalgebra(&random::compact_element(&mut rng, &spec), &setting)?;
        let eps = 1e-4;
        let d = |y: &CVec| -> Result<f64> {
            Ok((kn_functional(y, &s.scale(eps), &rep, &setting, panels)?
                - kn_functional(y, &s.scale(-eps), &rep, &setting, panels)?)
                / (2.0 * eps))
        };
        let expect = inner_product(&mu_shifted(&x, &rep, &setting)?, &s, &spec)?;
        let e = (d(&x)? - expect).abs() / (1.0 + expect.abs());
        slope_err = slope_err.max(e);
        out.require(e <= 1e-6, || format!("instance {t}: derivative error {e:e}"));

        // A zero of μ_ℋ − c_ℋ for U(2) on 2×k matrices: x = √c·[U | 0].
        let k = rng.gen_range(2..=3usize);
        let trep = RepSpec::tensor(2, k)?;
        let c = rng.gen_range(0.2..2.0);
        let tset = SubgroupSetting::new(trep.group(), vec![FactorMode::Full, FactorMode::Frozen], &[c, 0.0])?;
        let u = random::unitary(&mut rng, 2);
        let z = CVec::from_fn(2 * k, |i, _| {
            if i % k < 2 {
                u[(i / k, i % k)] * c.sqrt()
            } else {
                cr(0.0)
            }
        });
        let res = mu_shifted(&z, &trep, &tset)?.norm();
        out.require(res <= 1e-12, || {
            format!("instance {t}: constructed point has residual {res:e}")
        });
        let s = project_subalgebra(&random::compact_element(&mut rng, trep.group()), &tset)?;
        let dz = (kn_functional(&z, &s.scale(eps), &trep, &tset, panels)?
            - kn_functional(&z, &s.scale(-eps), &trep, &tset, panels)?)
            / (2.0 * eps);
        crit = crit.max(dz.abs() / s.norm());
        out.require(dz.abs() <= 1e-6 * s.norm(), || {
            format!("instance {t}: derivative {dz:e} at a zero")
        });
        let p = kn_functional(&z, &s, &trep, &tset, panels)?;
        min_psi = min_psi.min(p);
        out.require(p >= -1e-12, || format!("instance {t}: Ψ = {p:e} < 0 away from a zero"));
    }
    out.metric("instances", instances as f64);
    out.metric("panels", panels as f64);
    out.metric("max_cocycle_defect", cocycle_err);
    out.metric("max_derivative_error", slope_err);
    out.metric("max_derivative_at_zero", crit);
    out.metric("min_psi_from_zero", min_psi);
    Ok(out)
}

fn random_gauge(state: &mut LatticePairState, rng: &mut impl Rng, scale: f64) -> Result<()> {
    let sites = state.lattice().sites();
    let dims = state.rep().group().dims().to_vec();
    let modes = state.setting().modes().to_vec();
    let gamma: Vec<Option<(Vec<CMat>, Vec<CMat>)>> = dims
        .iter()
        .zip(&modes)
        .map(|(&n, m)| match m {
            FactorMode::Full => {
                let spec = ProductGroupSpec::new(vec![n]).expect("positive rank");
                let g: Vec<CMat> = (0..sites)
                    .map(|_| random::complex_element(rng, &spec, scale).blocks()[0].clone())
                    .collect();
                let gi: Vec<CMat> = g
                    .iter()
                    .map(|m| linalg::inverse(m).expect("exponential is invertible"))
                    .collect();
                Some((g, gi))
            }
            _ => None,
        })
        .collect();
    state.apply_gauge(&gamma)
}

fn perturbed_c(f: &mut CurveFixture, rng: &mut impl Rng) {
    if rng.gen_bool(0.5) {
        f.c[0] += Rational::new(rng.gen_range(-6..=6), rng.gen_range(1..=4));
    }
}

/// Site-averaged residual traces against the global constraint slack on
/// randomly gauged states: Σ_i avg Tr R_i = deg − Σ_i c_i n_i for coherent
/// systems and twisted triples, and avg Tr R = rk·(μ(ℰ) − c_m) for Higgs
/// fixtures. Also the per-site tracelessness of the Higgs term.
pub fn trace_identities(kind: ExampleKind, configs: usize, n: usize, seed: u64) -> Result<CheckOutcome> {
    let name = match kind {
        ExampleKind::CoherentSystem => "coherent_trace_identity",
        ExampleKind::TwistedTriple => "twisted_sum_rule",
        ExampleKind::Higgs => "higgs_trace_identities",
        _ => "trace_identity",
    };
    let mut out = CheckOutcome::new(name);
    let mut rng = random::rng(seed);
    let mut max_err = 0.0f64;
    let mut max_traceless = 0.0f64;
    for t in 0..configs {
        let mut f = random_fixture(kind, &mut rng);
        perturbed_c(&mut f, &mut rng);
        let params = f.to_example(n, 1.0);
        let mut st = assemble_example(&params)?;
        random_gauge(&mut st, &mut rng, 0.3)?;
        let r = pointwise_residual(&st)?;
        let total: f64 = match kind {
            ExampleKind::Higgs => r.average_trace(0),
            _ => (0..2).map(|i| r.average_trace(i)).sum(),
        };
        let expect = constraint_slack(&params).unwrap_or(0.0);
        let e = (total - expect).abs() / expect.abs().max(1.0);
        max_err = max_err.max(e);
        let tol = if kind == ExampleKind::Higgs { 1e-10 } else { 1e-12 };
        out.require(e <= tol, || {
            format!("config {t}: trace {total} vs {expect} (rel {e:e})")
        });
        if kind == ExampleKind::Higgs {
            for phi in st.section() {
                let tr = linalg::trace(mu_full(phi, st.rep())?.block(0)).norm();
                max_traceless = max_traceless.max(tr);
            }
        }
    }
    out.metric("configs", configs as f64);
    out.metric("max_rel_trace_error", max_err);
    if kind == ExampleKind::Higgs {
        out.require(max_traceless <= 1e-13, || {
            format!("per-site trace of the Higgs term {max_traceless:e}")
        });
        out.metric("max_site_trace_higgs_term", max_traceless);
    }
    Ok(out)
}

/// Heat flow summary used by the flow checks.
pub fn flow_fixture(
    f: &CurveFixture,
    n: usize,
    amplitude: f64,
    opts: &LatticeFlowOptions,
) -> Result<(LatticePairState, LatticeFlowReport)> {
    let mut st = assemble_example(&f.to_example(n, amplitude))?;
    let rep = heat_flow(&mut st, opts)?;
    Ok((st, rep))
}

fn q(n: i64, d: i64) -> Rational {
    Rational::new(n, d)
}

/// ℰ = L(1), k = 1, S spanned by a section, c₂ = −1/2 (2π units).
pub fn coherent_line_fixture() -> CurveFixture {
    CurveFixture {
        kind: ExampleKind::CoherentSystem,
        degrees: vec![vec![1], vec![0]],
        support: vec![FixtureEntry::at(&[0, 0])],
        c: vec![q(3, 2), q(-1, 2)],
        smooth: false,
    }
}

/// ℰ = L(1)⊕L(−1) with Θ mapping the L(1) summand to L(−1).
pub fn higgs_off_diagonal_fixture() -> CurveFixture {
    CurveFixture {
        kind: ExampleKind::Higgs,
        degrees: vec![vec![1, -1], vec![0]],
        support: vec![FixtureEntry::at(&[2, 0])],
        c: vec![q(0, 1), q(0, 1)],
        smooth: true,
    }
}

pub fn higgs_split_fixture() -> CurveFixture {
    CurveFixture {
        support: Vec::new(),
        ..higgs_off_diagonal_fixture()
    }
}

/// ℰ₁ = L(1), ℰ₂ = ℱ = 𝒪, c = (3/2, −1/2).
pub fn twisted_line_fixture() -> CurveFixture {
    CurveFixture {
        kind: ExampleKind::TwistedTriple,
        degrees: vec![vec![1], vec![0], vec![0]],
        support: vec![FixtureEntry::at(&[0, 0, 0])],
        c: vec![q(3, 2), q(-1, 2), q(0, 1)],
        smooth: false,
    }
}

/// Flow on the stable rank-one coherent system: both equations hold.
pub fn coherent_flow(n: usize, opts: &LatticeFlowOptions) -> Result<CheckOutcome> {
    let mut out = CheckOutcome::new("coherent_flow");
    let f = coherent_line_fixture();
    let v = verdict(&f)?;
    out.require(v.certified_stable(), || "fixture is not certified stable".into());
    let (_, r) = flow_fixture(&f, n, 1.0, opts)?;
    let (a, b) = (r.factor_l2[0], r.factor_l2[1]);
    out.require(r.converged, || format!("flow did not converge (l2 {})", r.final_l2));
    out.require(a < 1e-6 && b < 1e-6, || format!("equation residuals {a:e}, {b:e}"));
    out.metric("iterations", r.iterations as f64);
    out.metric("curvature_equation_l2", a);
    out.metric("section_equation_l2", b);
    Ok(out)
}

/// Stable off-diagonal Higgs fixture converges, the split Θ = 0 fixture
/// diverges, and the verdicts say so.
pub fn higgs_flows(n: usize, opts: &LatticeFlowOptions) -> Result<CheckOutcome> {
    let mut out = CheckOutcome::new("higgs_flows");
    let stable = higgs_off_diagonal_fixture();
    let split = higgs_split_fixture();
    let vs = higgs_stable(&stable)?;
    let vu = higgs_stable(&split)?;
    out.require(vs.certified_stable(), || {
        "off-diagonal fixture not certified stable".into()
    });
    out.require(vu.certified_unstable(), || {
        "split fixture not certified unstable".into()
    });
    let (_, a) = flow_fixture(&stable, n, 2.0, opts)?;
    let (_, b) = flow_fixture(&split, n, 2.0, opts)?;
    out.require(a.converged, || {
        format!("stable fixture did not converge (l2 {})", a.final_l2)
    });
    out.require(b.diverged && !b.converged, || {
        format!("split fixture did not diverge (l2 {})", b.final_l2)
    });
    out.metric("stable_iterations", a.iterations as f64);
    out.metric("stable_final_l2", a.final_l2);
    out.metric("split_iterations", b.iterations as f64);
    out.metric("split_sup_log_metric", b.sup_log_metric);
    Ok(out)
}

/// With ℱ = 𝒪 and rank-one ℰ₂ the twisted verdict equals the triple verdict.
pub fn twisted_reduction(count: usize, seed: u64) -> Result<CheckOutcome> {
    let mut out = CheckOutcome::new("twisted_reduction");
    let mut rng = random::rng(seed);
    let mut stable = 0;
    for t in 0..count {
        let mut tr = random_fixture(ExampleKind::TripleFixedE2, &mut rng);
        tr.degrees[1].truncate(1);
        tr.support.retain(|e| e.component[1] == 0);
        let n1 = tr.degrees[0].len() as i64;
        let c2 = Rational::from_integer(tr.factor_degree(0) + tr.factor_degree(1)) - tr.c[0] * n1;
        let tw = CurveFixture::new(
            ExampleKind::TwistedTriple,
            vec![tr.degrees[0].clone(), tr.degrees[1].clone(), vec![0]],
            tr.support
                .iter()
                .map(|e| FixtureEntry {
                    component: vec![e.component[0], e.component[1], 0],
                    ..e.clone()
                })
                .collect(),
            vec![tr.c[0], c2, Rational::from_integer(0)],
        )?;
        let a = triple_stable(&tr)?;
        let b = twisted_triple_stable(&tw)?;
        stable += a.stable() as usize;
        out.require(a.stable() == b.stable() && a.marginal() == b.marginal(), || {
            format!(
                "fixture {t}: triple stable={} marginal={}, twisted stable={} marginal={}",
                a.stable(),
                a.marginal(),
                b.stable(),
                b.marginal()
            )
        });
    }
    out.metric("fixtures", count as f64);
    out.metric("stable", stable as f64);
    Ok(out)
}

/// Per-kind slope verdicts against the generic generator verdicts, and the
/// α-slope reformulation of triples.
pub fn verdict_routes(count: usize, seed: u64) -> Result<CheckOutcome> {
    let mut out = CheckOutcome::new("verdict_routes");
    let mut rng = random::rng(seed);
    let mut dual = 0;
    for kind in ExampleKind::ALL {
        for t in 0..count {
            let f = random_fixture(kind, &mut rng);
            let a = verdict(&f)?;
            let b = generator_verdict(&f)?;
            if kind == ExampleKind::CoherentSystem && section_span_dim(&f) < f.degrees[1].len() {
                out.require(!b.stable(), || {
                    format!("{} {t}: non-injective Φ but generator route stable", kind.name())
                });
                continue;
            }
            out.require(a.stable() == b.stable(), || {
                format!(
                    "{} {t}: slope route {} vs generator route {}",
                    kind.name(),
                    a.stable(),
                    b.stable()
                )
            });
            if a.stable() {
                out.require(a.marginal() == b.marginal(), || {
                    format!("{} {t}: marginal flags differ", kind.name())
                });
            }
            if kind == ExampleKind::TripleFixedE2 {
                dual += 1;
                out.require(a.dual_agrees == Some(true), || {
                    format!("triple {t}: α-slope formulation disagrees")
                });
            }
        }
    }
    out.metric("fixtures", (5 * count) as f64);
    out.metric("triple_dual_checks", dual as f64);
    Ok(out)
}

/// Generator verdicts against full-cone total weights.
pub fn ssc_check(fixtures: usize, trials: usize, seed: u64) -> Result<CheckOutcome> {
    let mut out = CheckOutcome::new("ssc_reduction");
    let mut rng = random::rng(seed);
    let list: Vec<CurveFixture> = (0..fixtures)
        .map(|k| random_fixture(ExampleKind::ALL[k % 5], &mut rng))
        .collect();
    let reports: Vec<Result<crate::stability::SscReport>> = par::map_indexed(list.len(), |k| {
        ssc_reduction_equiv(&list[k], trials, seed.wrapping_add(k as u64))
    });
    let mut admissible = 0usize;
    let mut max_err = 0.0f64;
    let mut marginal = 0usize;
    for (k, r) in reports.into_iter().enumerate() {
        let r = r?;
        admissible += r.admissible;
        max_err = max_err.max(r.max_abs_error);
        marginal += r.marginal as usize;
        out.require(r.agree, || {
            format!("fixture {k} ({}): {:?}", list[k].kind.name(), r.failures.first())
        });
    }
    out.metric("fixtures", fixtures as f64);
    out.metric("trials_per_fixture", trials as f64);
    out.metric("admissible_samples", admissible as f64);
    out.metric("marginal_fixtures", marginal as f64);
    out.metric("max_abs_weight_error", max_err);
    Ok(out)
}

/// Frozen factors unchanged bit for bit, degrees conserved, and the final
/// residual covariant under a unitary gauge transformation.
pub fn flow_hygiene(n: usize, opts: &LatticeFlowOptions, seed: u64) -> Result<CheckOutcome> {
    let mut out = CheckOutcome::new("flow_hygiene");
    let mut rng = random::rng(seed);
    let mut drift = 0.0f64;
    let mut cov = 0.0f64;
    for (label, f, amp) in [
        ("higgs", higgs_off_diagonal_fixture(), 2.0),
        ("twisted", twisted_line_fixture(), 1.0),
    ] {
        let mut st = assemble_example(&f.to_example(n, amp))?;
        let frozen: Vec<usize> = (0..st.factors().len())
            .filter(|&i| st.setting().mode(i) == FactorMode::Frozen)
            .collect();
        let before: Vec<Vec<u64>> = frozen.iter().map(|&i| st.factor_fingerprint(i)).collect();
        let r = heat_flow(&mut st, opts)?;
        out.require(r.converged, || format!("{label}: flow did not converge"));
        for (k, &i) in frozen.iter().enumerate() {
            out.require(st.factor_fingerprint(i) == before[k], || {
                format!("{label}: frozen factor {i} changed")
            });
        }
        drift = drift.max(r.degree_drift());
        out.require(r.degree_drift() <= 1e-9, || {
            format!("{label}: degree drift {:e}", r.degree_drift())
        });

        let base = pointwise_residual(&st)?.site_norms();
        let sites = st.lattice().sites();
        let k: Vec<Option<Vec<CMat>>> = st
            .rep()
            .group()
            .dims()
            .iter()
            .enumerate()
            .map(|(i, &m)| {
                (st.setting().mode(i) == FactorMode::Full)
                    .then(|| (0..sites).map(|_| random::unitary(&mut rng, m)).collect())
            })
            .collect();
        let mut g = st.clone();
        g.apply_unitary_gauge(&k)?;
        let moved = pointwise_residual(&g)?.site_norms();
        let scale = base.iter().cloned().fold(1.0, f64::max);
        let e = base.iter().zip(&moved).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale;
        cov = cov.max(e);
        out.require(e <= 1e-10, || format!("{label}: gauge covariance defect {e:e}"));
    }
    out.metric("max_degree_drift", drift);
    out.metric("max_gauge_covariance_defect", cov);
    Ok(out)
}

/// Numerical ∂̄-kernel dimension of L(d) equals d with a clear singular-value gap.
pub fn section_dimensions(n: usize, degrees: &[i64]) -> Result<CheckOutcome> {
    let mut out = CheckOutcome::new("section_dimensions");
    let lat = build_torus(n)?;
    let mut min_gap = f64::INFINITY;
    for &d in degrees {
        let b = line_bundle_sections(&lat, d)?;
        min_gap = min_gap.min(b.gap_ratio);
        out.require(b.kernel_dim == d as usize, || {
            format!("d = {d}: kernel dimension {}", b.kernel_dim)
        });
        out.require(b.gap_ratio > 1e3, || format!("d = {d}: gap ratio {:e}", b.gap_ratio));
        out.metric(&format!("kernel_dim_d{d}"), b.kernel_dim as f64);
        out.metric(&format!("gap_ratio_d{d}"), b.gap_ratio);
    }
    out.metric("min_gap_ratio", min_gap);
    Ok(out)
}

/// Threshold of the abelian vortex equation on L(d): c = 2π·d·factor.
pub fn vortex_params(n: usize, d: i64, c: f64) -> ExampleParams {
    ExampleParams {
        kind: ExampleKind::PairTensor,
        n,
        degrees: vec![vec![d], vec![0]],
        c: vec![c, 0.0],
        support: vec![SupportEntry {
            component: vec![0, 0],
            section: 0,
            coeff: 1.0,
        }],
        amplitude: 1.0,
        smooth: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_checks_pass() {
        for c in [
            moment_map_suite(5, 1).unwrap(),
            kempf_ness_correspondence(6, 2).unwrap().0,
            psi_functional(5, 64, 3).unwrap(),
            trace_identities(ExampleKind::CoherentSystem, 3, 16, 4).unwrap(),
            trace_identities(ExampleKind::TwistedTriple, 3, 16, 5).unwrap(),
            trace_identities(ExampleKind::Higgs, 3, 16, 6).unwrap(),
            twisted_reduction(20, 7).unwrap(),
            verdict_routes(10, 8).unwrap(),
            ssc_check(5, 50, 9).unwrap(),
        ] {
            assert!(c.pass, "{} {:?}", c.summary(), c.failures);
        }
    }

    #[test]
    fn failing_check_records_reason() {
        let mut c = CheckOutcome::new("x");
        c.require(false, || "broken".into());
        assert!(!c.pass && c.failures == ["broken"]);
        assert!(c.summary().starts_with("x FAIL"));
    }
}
