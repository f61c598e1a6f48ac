//! Preconditioned metric heat flow by complex gauge transformations.
//!
//! Each step applies γ = exp(−dt·D) to the unfrozen factors, with
//! D = (1 + τL)⁻¹R for the Hermitian residual R and its linearization
//! L = −Δ_cov + Q (Q from the moment map), solved by CG with an FFT
//! preconditioner. Constant-mode factors receive one global matrix.

use super::residual::{pointwise_residual, polar_links, ResidualField};
use super::spectral::PeriodicSolver;
use super::state::LatticePairState;
use super::torus::DIRS;
use crate::algebra::{AlgebraElement, FactorMode};
use crate::error::{invalid, Result};
use crate::kempf_ness::StepControl;
use crate::linalg::{self, cr, I};
use crate::moment::{infinitesimal_act, mu_full};
use crate::{par, CMat, C64};

#[derive(Clone, Debug, PartialEq, serde::Deserialize, serde::Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct LatticeFlowOptions {
    pub max_iter: usize,
    pub step: f64,
    pub tol: f64,
    /// Implicit time scale of the direction (1 + τL)⁻¹R; 0 gives plain R.
    pub tau: f64,
    /// |log h| above which the run is declared divergent.
    pub blowup: f64,
}

impl Default for LatticeFlowOptions {
    fn default() -> Self {
        Self {
            max_iter: 20000,
            step: 0.1,
            tol: 1e-8,
            tau: 1.0,
            blowup: 50.0,
        }
    }
}

/// One accepted step (iteration 0 is the initial state).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryRow {
    pub iteration: usize,
    pub l2_residual: f64,
    pub linf_residual: f64,
    pub sup_log_metric: f64,
}

#[derive(Clone, Debug)]
pub struct LatticeFlowReport {
    pub converged: bool,
    pub diverged: bool,
    pub iterations: usize,
    pub final_l2: f64,
    pub final_linf: f64,
    pub trajectory: Vec<TrajectoryRow>,
    pub rejections: Vec<usize>,
    pub sup_log_metric: f64,
    pub degrees_before: Vec<f64>,
    pub degrees_after: Vec<f64>,
    pub dbar_initial: f64,
    pub dbar_final: f64,
    /// Per-site residual norm of the final state.
    pub residual_snapshot: Vec<f64>,
    pub factor_l2: Vec<f64>,
    /// Site average of Tr of each factor's final residual.
    pub trace_balance: Vec<f64>,
    /// Named scalar diagnostics added by the caller (constraint slack etc.).
    pub diagnostics: Vec<(String, f64)>,
}

impl LatticeFlowReport {
    pub(crate) fn start(state: &LatticePairState, r: &ResidualField) -> Self {
        let sup = state.sup_log_metric();
        Self {
            converged: false,
            diverged: false,
            iterations: 0,
            final_l2: r.l2,
            final_linf: r.linf,
            trajectory: vec![TrajectoryRow {
                iteration: 0,
                l2_residual: r.l2,
                linf_residual: r.linf,
                sup_log_metric: sup,
            }],
            rejections: Vec::new(),
            sup_log_metric: sup,
            degrees_before: state.degrees(),
            degrees_after: Vec::new(),
            dbar_initial: state.dbar_norm(),
            dbar_final: f64::NAN,
            residual_snapshot: Vec::new(),
            factor_l2: Vec::new(),
            trace_balance: Vec::new(),
            diagnostics: Vec::new(),
        }
    }

    pub(crate) fn finish(&mut self, state: &LatticePairState, r: &ResidualField) {
        self.final_l2 = r.l2;
        self.final_linf = r.linf;
        self.sup_log_metric = state.sup_log_metric();
        self.degrees_after = state.degrees();
        self.dbar_final = state.dbar_norm();
        self.residual_snapshot = r.site_norms();
        self.factor_l2 = r.factor_l2.clone();
        self.trace_balance = (0..r.factor_l2.len()).map(|i| r.average_trace(i)).collect();
    }

    pub fn diagnostic(&self, name: &str) -> Option<f64> {
        self.diagnostics.iter().find(|(n, _)| n == name).map(|&(_, v)| v)
    }

    /// Largest |degree change| over factors.
    pub fn degree_drift(&self) -> f64 {
        self.degrees_before
            .iter()
            .zip(&self.degrees_after)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Per-factor Hermitian fields (None on frozen factors), indexed [factor][site].
type Field = Vec<Option<Vec<CMat>>>;

fn field_inner(a: &Field, b: &Field) -> f64 {
    let mut v = Vec::new();
    for (x, y) in a.iter().zip(b) {
        if let (Some(x), Some(y)) = (x, y) {
            v.extend(x.iter().zip(y).map(|(p, q)| linalg::re_inner(p, q)));
        }
    }
    par::ordered_sum(&v)
}

fn axpy(y: &mut Field, alpha: f64, x: &Field) {
    for (yi, xi) in y.iter_mut().zip(x) {
        if let (Some(yi), Some(xi)) = (yi, xi) {
            for (p, q) in yi.iter_mut().zip(xi) {
                *p += q * cr(alpha);
            }
        }
    }
}

/// Linearization data of the residual under complex gauge e^{−tD}:
/// δR = −t·L·D with L = −Δ_cov + Q, where Q(D) is the first-order change of
/// √−1μ(Φ) along Φ ↦ Φ − ρ(D)Φ.
struct Linearization<'a> {
    state: &'a LatticePairState,
    unitary: Vec<Option<[Vec<CMat>; 2]>>,
    tau: f64,
}

impl<'a> Linearization<'a> {
    fn new(state: &'a LatticePairState, tau: f64) -> Self {
        let unitary = (0..state.factors().len())
            .map(|i| match state.setting().mode(i) {
                FactorMode::Full => Some(polar_links(state.factor(i)).w),
                _ => None,
            })
            .collect();
        Self { state, unitary, tau }
    }

    fn mu_herm(&self, x: &crate::CVec) -> Vec<CMat> {
        mu_full(x, self.state.rep())
            .map(|m| {
                m.into_blocks()
                    .into_iter()
                    .map(|b| linalg::herm_part(&(b * I)))
                    .collect()
            })
            .unwrap_or_default()
    }

    /// D ↦ D + τ·L·D; constant-mode blocks are site-averaged.
    fn apply(&self, d: &Field) -> Field {
        let st = self.state;
        let lat = *st.lattice();
        let dims = st.rep().group().dims().to_vec();
        let q: Vec<Vec<CMat>> = par::map_indexed(lat.sites(), |s| {
            let blocks: Vec<CMat> = dims
                .iter()
                .enumerate()
                .map(|(i, &n)| match &d[i] {
                    Some(f) => f[s].clone(),
                    None => CMat::zeros(n, n),
                })
                .collect();
            let x = &st.section()[s];
            let v = infinitesimal_act(&AlgebraElement::general(blocks), x, st.rep())
                .unwrap_or_else(|_| crate::CVec::zeros(x.len()));
            let both = self.mu_herm(&(x + &v));
            let mx = self.mu_herm(x);
            let mv = self.mu_herm(&v);
            both.iter().zip(&mx).zip(&mv).map(|((a, b), c)| a - b - c).collect()
        });
        let k = 1.0 / lat.cell_area();
        (0..dims.len())
            .map(|i| {
                let f = d[i].as_ref()?;
                let mut out: Vec<CMat> = par::map_indexed(lat.sites(), |s| {
                    let mut o = &f[s] + &q[s][i] * cr(self.tau);
                    if let Some(w) = &self.unitary[i] {
                        let mut lap = &f[s] * cr(4.0 * k);
                        for dir in DIRS {
                            let fw = lat.fwd(s, dir);
                            let bw = lat.bwd(s, dir);
                            let wf = &w[dir][s];
                            let wb = &w[dir][bw];
                            lap -= (wf.adjoint() * &f[fw] * wf + wb * &f[bw] * wb.adjoint()) * cr(k);
                        }
                        o += lap * cr(self.tau);
                    }
                    o
                });
                if st.setting().mode(i) == FactorMode::Constant {
                    let avg = average(&out);
                    out.iter_mut().for_each(|m| *m = avg.clone());
                }
                Some(out)
            })
            .collect()
    }
}

fn average(f: &[CMat]) -> CMat {
    let mut acc = CMat::zeros(f[0].nrows(), f[0].ncols());
    for m in f {
        acc += m;
    }
    acc * cr(1.0 / f.len() as f64)
}

/// Entrywise flat preconditioner (1 + τ(−Δ))⁻¹ on full factors.
fn precondition(solver: &PeriodicSolver, tau: f64, r: &Field, modes: &[FactorMode]) -> Field {
    r.iter()
        .zip(modes)
        .map(|(f, mode)| {
            let f = f.as_ref()?;
            if *mode != FactorMode::Full {
                return Some(f.clone());
            }
            let n = f[0].nrows();
            let mut out = vec![CMat::zeros(n, n); f.len()];
            for i in 0..n {
                for j in 0..n {
                    let col: Vec<C64> = f.iter().map(|m| m[(i, j)]).collect();
                    let u = solver.solve(1.0, tau, &col);
                    for (o, z) in out.iter_mut().zip(u) {
                        o[(i, j)] = z;
                    }
                }
            }
            Some(out.iter().map(linalg::herm_part).collect())
        })
        .collect()
}

/// Descent direction D = (1 + τL)⁻¹R by preconditioned CG (D = R when τ = 0).
fn direction(state: &LatticePairState, r: &ResidualField, solver: &PeriodicSolver, tau: f64) -> Field {
    let modes = state.setting().modes().to_vec();
    let rhs: Field = (0..modes.len())
        .map(|i| match modes[i] {
            FactorMode::Frozen => None,
            _ => Some(r.herm.iter().map(|h| h[i].clone()).collect()),
        })
        .collect();
    if tau == 0.0 {
        return rhs;
    }
    let op = Linearization::new(state, tau);
    let bnorm = field_inner(&rhs, &rhs).sqrt();
    let mut x = precondition(solver, tau, &rhs, &modes);
    if bnorm == 0.0 {
        return x;
    }
    let ax = op.apply(&x);
    let mut res = rhs.clone();
    axpy(&mut res, -1.0, &ax);
    let mut z = precondition(solver, tau, &res, &modes);
    let mut p = z.clone();
    let mut rz = field_inner(&res, &z);
    for _ in 0..PCG_MAX_ITER {
        if field_inner(&res, &res).sqrt() <= PCG_TOL * bnorm {
            break;
        }
        let ap = op.apply(&p);
        let alpha = rz / field_inner(&p, &ap);
        axpy(&mut x, alpha, &p);
        axpy(&mut res, -alpha, &ap);
        z = precondition(solver, tau, &res, &modes);
        let rz_new = field_inner(&res, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            if let (Some(pi), Some(zi)) = (pi, zi) {
                for (a, b) in pi.iter_mut().zip(zi) {
                    *a = b + &*a * cr(beta);
                }
            }
        }
    }
    x
}

const PCG_TOL: f64 = 1e-10;
const PCG_MAX_ITER: usize = 300;

fn gauge_for(dir: &[Option<Vec<CMat>>], dt: f64) -> Vec<Option<(Vec<CMat>, Vec<CMat>)>> {
    dir.iter()
        .map(|d| {
            d.as_ref().map(|field| {
                let pairs: Vec<(CMat, CMat)> = par::map_slice(field, |m| {
                    (linalg::herm_exp(&(m * cr(-dt))), linalg::herm_exp(&(m * cr(dt))))
                });
                pairs.into_iter().unzip()
            })
        })
        .collect()
}

/// Runs the flow in place. Divergence (metric blow-up or non-finite values)
/// is reported, not raised.
pub fn heat_flow(state: &mut LatticePairState, opts: &LatticeFlowOptions) -> Result<LatticeFlowReport> {
    if !(opts.tol > 0.0) || !(opts.step > 0.0) || !(opts.tau >= 0.0) {
        return invalid("flow options need tol > 0, step > 0 and tau ≥ 0");
    }
    let solver = PeriodicSolver::new(state.lattice());
    let mut r = pointwise_residual(state)?;
    let mut report = LatticeFlowReport::start(state, &r);
    let mut ctl = StepControl::new(opts.step);
    while r.l2 >= opts.tol && report.iterations < opts.max_iter {
        report.iterations += 1;
        let dir = direction(state, &r, &solver, opts.tau);
        let mut cand = state.clone();
        cand.apply_gauge(&gauge_for(&dir, ctl.step))?;
        let cr_ = pointwise_residual(&cand)?;
        if !cr_.l2.is_finite() {
            report.diverged = true;
            break;
        }
        if cr_.l2 > r.l2 * (1.0 + 1e-12) {
            report.rejections.push(report.iterations);
            ctl.reject();
            if ctl.step < 1e-14 {
                break;
            }
            continue;
        }
        ctl.accept();
        *state = cand;
        r = cr_;
        let sup = state.sup_log_metric();
        report.trajectory.push(TrajectoryRow {
            iteration: report.iterations,
            l2_residual: r.l2,
            linf_residual: r.linf,
            sup_log_metric: sup,
        });
        if !(sup <= opts.blowup) {
            report.diverged = true;
            break;
        }
    }
    report.converged = !report.diverged && r.l2 < opts.tol;
    report.finish(state, &r);
    Ok(report)
}
