//! Newton solver for the scalar (Kazdan–Warner) form of abelian vortex
//! equations, used as an independent check on `heat_flow`.
//!
//! With one unfrozen U(1) factor acting on Φ with charge q = ±1, the gauge
//! e^{w} solves the equation iff v = q·w solves
//! −Δv + ρ·e^{2v} = f,  ρ = |Φ_q|²,  f = q·(c − √−1ΛF − √−1μ_rest),
//! the Euler–Lagrange equation of the convex energy
//! E(v) = ½|∇v|² + ½∫ρe^{2v} − ∫f·v.

use super::flow::{LatticeFlowOptions, LatticeFlowReport, TrajectoryRow};
use super::residual::{pointwise_residual, residual_parts};
use super::spectral::{neg_laplacian, PeriodicSolver};
use super::state::LatticePairState;
use super::torus::TorusLattice;
use crate::algebra::FactorMode;
use crate::error::{invalid, Result};
use crate::linalg::cr;
use crate::moment::SlotAction;
use crate::{par, CMat};

#[derive(Clone, Debug)]
pub struct NewtonOutcome {
    pub report: LatticeFlowReport,
    /// ∫(c − √−1ΛF − √−1μ_rest) in the charge orientation; a solution needs
    /// this to be positive (when Φ ≠ 0).
    pub obstruction: f64,
    /// Obstruction zero to rounding: no convergence claim is made.
    pub marginal: bool,
    pub solvable: bool,
    /// Solution w of the factor gauge e^{w} (empty when not solvable).
    pub log_gauge: Vec<f64>,
}

struct Problem {
    factor: usize,
    charge: f64,
    rho: Vec<f64>,
    f: Vec<f64>,
}

fn setup(state: &LatticePairState) -> Result<Problem> {
    let group = state.rep().group();
    let mut factor = None;
    for i in 0..group.num_factors() {
        match state.setting().mode(i) {
            FactorMode::Frozen => {}
            FactorMode::Constant => return invalid(format!("factor {i} is constant-mode; Newton needs full gauge")),
            FactorMode::Full => {
                if group.dims()[i] != 1 {
                    return invalid(format!("factor {i} is non-abelian"));
                }
                if factor.replace(i).is_some() {
                    return invalid("the scalar reduction needs exactly one unfrozen factor");
                }
            }
        }
    }
    let factor = match factor {
        Some(i) => i,
        None => return invalid("no unfrozen factor"),
    };
    let mut charge = 0.0;
    for slot in state.rep().slots().iter().filter(|s| s.factor == factor) {
        let q = match slot.action {
            SlotAction::Standard => 1.0,
            SlotAction::Dual => -1.0,
            SlotAction::Adjoint | SlotAction::Trivial => 0.0,
        };
        if q != 0.0 && charge != 0.0 && q != charge {
            return invalid("mixed charges on one abelian factor");
        }
        if q != 0.0 {
            charge = q;
        }
    }
    if charge == 0.0 {
        charge = 1.0;
    }
    let (curv, mus) = residual_parts(state)?;
    let curv = curv[factor].as_ref().expect("unfrozen factor has curvature");
    let c = state.setting().c_values()[factor];
    let rho: Vec<f64> = mus.iter().map(|m| charge * m[factor][(0, 0)].re).collect();
    let f: Vec<f64> = curv.iter().map(|k| charge * (c - k[(0, 0)].re)).collect();
    Ok(Problem { factor, charge, rho, f })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let v: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
    par::ordered_sum(&v)
}

fn energy(lat: &TorusLattice, p: &Problem, v: &[f64]) -> f64 {
    let lap = neg_laplacian(lat, v);
    let terms: Vec<f64> = (0..v.len())
        .map(|s| 0.5 * v[s] * lap[s] + 0.5 * p.rho[s] * (2.0 * v[s]).exp() - p.f[s] * v[s])
        .collect();
    par::ordered_sum(&terms) * lat.cell_area()
}

fn gradient(lat: &TorusLattice, p: &Problem, v: &[f64]) -> Vec<f64> {
    let lap = neg_laplacian(lat, v);
    (0..v.len())
        .map(|s| lap[s] + p.rho[s] * (2.0 * v[s]).exp() - p.f[s])
        .collect()
}

/// PCG for (−Δ + diag(q))δ = rhs, preconditioned by (mean q − Δ)⁻¹.
fn hessian_solve(lat: &TorusLattice, solver: &PeriodicSolver, q: &[f64], rhs: &[f64]) -> Vec<f64> {
    let qbar = q.iter().sum::<f64>() / q.len() as f64;
    let apply = |x: &[f64]| -> Vec<f64> {
        let lap = neg_laplacian(lat, x);
        lap.iter().zip(q).zip(x).map(|((l, qi), xi)| l + qi * xi).collect()
    };
    let bnorm = dot(rhs, rhs).sqrt();
    let mut x = vec![0.0; rhs.len()];
    if bnorm == 0.0 {
        return x;
    }
    let mut r = rhs.to_vec();
    let mut z = solver.solve_real(qbar, 1.0, &r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for _ in 0..1000 {
        if dot(&r, &r).sqrt() <= 1e-13 * bnorm {
            break;
        }
        let ap = apply(&p);
        let alpha = rz / dot(&p, &ap);
        for i in 0..x.len() {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        z = solver.solve_real(qbar, 1.0, &r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..p.len() {
            p[i] = z[i] + beta * p[i];
        }
    }
    x
}

fn l2_linf(lat: &TorusLattice, g: &[f64]) -> (f64, f64) {
    let sq: Vec<f64> = g.iter().map(|x| x * x).collect();
    (
        (par::ordered_sum(&sq) * lat.cell_area()).sqrt(),
        g.iter().fold(0.0, |a, x| a.max(x.abs())),
    )
}

/// Solves the scalar reduction and, when solvable, applies the resulting
/// gauge to `state`. Errors on constant-mode or non-abelian unfrozen factors.
pub fn newton_abelian(state: &mut LatticePairState, opts: &LatticeFlowOptions) -> Result<NewtonOutcome> {
    let lat = *state.lattice();
    let p = setup(state)?;
    let r0 = pointwise_residual(state)?;
    let mut report = LatticeFlowReport::start(state, &r0);
    let obstruction = lat.average(&p.f);
    let scale = 1.0 + lat.average(&p.f.iter().map(|x| x.abs()).collect::<Vec<_>>());
    let rho_mass = lat.average(&p.rho);
    let marginal = obstruction.abs() <= 1e-9 * scale;
    let solvable = if rho_mass > 0.0 {
        obstruction > 0.0 && !marginal
    } else {
        marginal
    };
    if !solvable {
        report.diverged = !marginal;
        report.diagnostics.push(("obstruction".into(), obstruction));
        report.finish(state, &r0);
        return Ok(NewtonOutcome {
            report,
            obstruction,
            marginal,
            solvable: false,
            log_gauge: Vec::new(),
        });
    }
    let solver = PeriodicSolver::new(&lat);
    let mut v = if rho_mass > 0.0 {
        vec![0.5 * (obstruction / rho_mass).ln(); lat.sites()]
    } else {
        vec![0.0; lat.sites()]
    };
    if rho_mass == 0.0 {
        // Linear case: −Δv = f with zero mean.
        v = solver.solve_real(0.0, 1.0, &p.f);
    }
    let mut g = gradient(&lat, &p, &v);
    let (mut l2, _) = l2_linf(&lat, &g);
    while l2 >= opts.tol * 1e-2 && report.iterations < opts.max_iter.min(200) {
        report.iterations += 1;
        let q: Vec<f64> = p.rho.iter().zip(&v).map(|(r, x)| 2.0 * r * (2.0 * x).exp()).collect();
        let neg: Vec<f64> = g.iter().map(|x| -x).collect();
        let delta = hessian_solve(&lat, &solver, &q, &neg);
        let e0 = energy(&lat, &p, &v);
        let slope = dot(&g, &delta) * lat.cell_area();
        let mut t = 1.0;
        let mut next;
        loop {
            next = v.iter().zip(&delta).map(|(a, b)| a + t * b).collect::<Vec<_>>();
            let e1 = energy(&lat, &p, &next);
            if e1 <= e0 + 1e-4 * t * slope || t < 1e-12 || (e1 - e0).abs() <= 1e-15 * e0.abs().max(1.0) {
                break;
            }
            t *= 0.5;
            report.rejections.push(report.iterations);
        }
        v = next;
        g = gradient(&lat, &p, &v);
        let (nl2, linf) = l2_linf(&lat, &g);
        l2 = nl2;
        let sup = 2.0 * v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        report.trajectory.push(TrajectoryRow {
            iteration: report.iterations,
            l2_residual: l2,
            linf_residual: linf,
            sup_log_metric: sup,
        });
        if !l2.is_finite() {
            report.diverged = true;
            break;
        }
    }
    let w: Vec<f64> = v.iter().map(|x| p.charge * x).collect();
    let mut gamma: Vec<Option<(Vec<CMat>, Vec<CMat>)>> = vec![None; state.factors().len()];
    gamma[p.factor] = Some((
        w.iter().map(|x| CMat::from_element(1, 1, cr(x.exp()))).collect(),
        w.iter().map(|x| CMat::from_element(1, 1, cr((-x).exp()))).collect(),
    ));
    state.apply_gauge(&gamma)?;
    let r = pointwise_residual(state)?;
    report.converged = !report.diverged && r.l2 < opts.tol;
    report.diagnostics.push(("obstruction".into(), obstruction));
    report.diagnostics.push(("scalar_residual".into(), l2));
    report.finish(state, &r);
    Ok(NewtonOutcome {
        report,
        obstruction,
        marginal,
        solvable: true,
        log_gauge: w,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::SubgroupSetting;
    use crate::lattice::bundle::LatticeBundle;
    use crate::lattice::flow::heat_flow;
    use crate::lattice::sections::line_bundle_sections;
    use crate::lattice::torus::build_torus;
    use crate::linalg;
    use crate::moment::RepSpec;
    use std::f64::consts::TAU;

    fn vortex(n: usize, c: f64) -> LatticePairState {
        let lat = build_torus(n).unwrap();
        let b = LatticeBundle::constant_curvature_line(&lat, 1).unwrap();
        let sec = line_bundle_sections(&lat, 1).unwrap();
        let rep = RepSpec::fundamental(1).unwrap();
        let setting = SubgroupSetting::full(rep.group(), &[c]).unwrap();
        LatticePairState::new(lat, rep, setting, vec![b], sec.fields[0].clone()).unwrap()
    }

    #[test]
    fn newton_matches_heat_flow_metric() {
        let mut a = vortex(16, 2.0 * TAU);
        let mut b = a.clone();
        let opts = LatticeFlowOptions::default();
        let fl = heat_flow(
            &mut a,
            &LatticeFlowOptions {
                tol: 1e-10,
                ..opts.clone()
            },
        )
        .unwrap();
        let nw = newton_abelian(&mut b, &opts).unwrap();
        assert!(
            fl.converged && nw.report.converged,
            "{} {}",
            fl.final_l2,
            nw.report.final_l2
        );
        let lat = *a.lattice();
        let diff = (0..lat.sites())
            .map(|s| linalg::max_abs(&(a.factor(0).metric(s) - b.factor(0).metric(s))))
            .fold(0.0, f64::max);
        assert!(diff < 1e-6, "{diff}");
    }

    #[test]
    fn obstruction_sign_and_marginal() {
        let mut st = vortex(8, 0.5 * TAU);
        let out = newton_abelian(&mut st, &LatticeFlowOptions::default()).unwrap();
        assert!(!out.solvable && !out.marginal);
        assert!((out.obstruction - (0.5 * TAU - TAU)).abs() < 1e-9);
        let mut st = vortex(8, TAU);
        let out = newton_abelian(&mut st, &LatticeFlowOptions::default()).unwrap();
        assert!(out.marginal && !out.solvable);
    }

    #[test]
    fn rejects_nonabelian() {
        let lat = build_torus(4).unwrap();
        let rep = RepSpec::fundamental(2).unwrap();
        let setting = SubgroupSetting::full(rep.group(), &[1.0]).unwrap();
        let phi = vec![crate::CVec::zeros(2); lat.sites()];
        let mut st = LatticePairState::new(lat, rep, setting, vec![LatticeBundle::trivial(&lat, 2)], phi).unwrap();
        assert!(newton_abelian(&mut st, &LatticeFlowOptions::default()).is_err());
    }
}
