//! Reference numerical integrators and convergence experiments: the bridge
//! between formal coefficient algebra and actually computed trajectories.
//!
//! Everything here runs in plain f64. Reference solutions come from
//! classical RK4 with step halving until two successive refinements agree
//! to 1e-12, which is ample for the desk-scale convergence rates measured
//! by the experiments.

use anyhow::{anyhow, bail, Context, Result};
use bseries_core::butcher::RKTableau;
use bseries_core::extended::PerturbedProblem;
use bseries_core::scalar::rat_to_f64;
use bseries_core::splitting::SplittingScheme;
use bseries_core::vectorfields::PolyMap;
use serde::Deserialize;
use std::path::{Path, PathBuf};

/// Fixed-point residual target for implicit stages.
const STAGE_TOL: f64 = 1e-14;
const STAGE_ITERATION_CAP: usize = 100;
/// Substep count for the perturbation micro-integrator in splitting steps.
const MICRO_SUBSTEPS: usize = 64;

pub fn sup_norm_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// One Runge-Kutta step. Implicit stages are solved by plain fixed-point
/// iteration to a 1e-14 residual; the iteration cap turns non-contraction
/// (|h| too large) into an error instead of a silent bad step.
pub fn rk_step(tableau: &RKTableau, f: &PolyMap<f64>, x: &[f64], h: f64) -> Result<Vec<f64>> {
    let s = tableau.stages();
    let a: Vec<Vec<f64>> = tableau
        .a
        .iter()
        .map(|row| row.iter().map(rat_to_f64).collect())
        .collect();
    let b: Vec<f64> = tableau.b.iter().map(rat_to_f64).collect();

    let mut stages: Vec<Vec<f64>> = vec![x.to_vec(); s];
    let mut values: Vec<Vec<f64>> = stages.iter().map(|xi| f.eval(xi)).collect();
    let mut iteration = 0;
    loop {
        let mut residual: f64 = 0.0;
        for i in 0..s {
            let mut next = x.to_vec();
            for j in 0..s {
                if a[i][j] != 0.0 {
                    for (n, v) in next.iter_mut().zip(&values[j]) {
                        *n += h * a[i][j] * v;
                    }
                }
            }
            residual = residual.max(sup_norm_diff(&next, &stages[i]));
            stages[i] = next;
        }
        for i in 0..s {
            values[i] = f.eval(&stages[i]);
        }
        if residual < STAGE_TOL {
            break;
        }
        iteration += 1;
        if iteration >= STAGE_ITERATION_CAP {
            bail!(
                "implicit stage iteration did not contract after {STAGE_ITERATION_CAP} sweeps \
                 (residual {residual:.3e}); reduce |h|"
            );
        }
    }
    let mut out = x.to_vec();
    for i in 0..s {
        for (o, v) in out.iter_mut().zip(&values[i]) {
            *o += h * b[i] * v;
        }
    }
    Ok(out)
}

/// Integrates n equal RK steps.
pub fn integrate_rk(
    tableau: &RKTableau,
    f: &PolyMap<f64>,
    x0: &[f64],
    h: f64,
    n: usize,
) -> Result<Vec<f64>> {
    let mut x = x0.to_vec();
    for _ in 0..n {
        x = rk_step(tableau, f, &x, h)?;
    }
    Ok(x)
}

/// Classical RK4 step for an arbitrary right-hand side closure.
pub fn rk4_step_fn(field: &dyn Fn(&[f64]) -> Vec<f64>, x: &[f64], h: f64) -> Vec<f64> {
    let k1 = field(x);
    let mid1: Vec<f64> = x.iter().zip(&k1).map(|(a, k)| a + 0.5 * h * k).collect();
    let k2 = field(&mid1);
    let mid2: Vec<f64> = x.iter().zip(&k2).map(|(a, k)| a + 0.5 * h * k).collect();
    let k3 = field(&mid2);
    let end: Vec<f64> = x.iter().zip(&k3).map(|(a, k)| a + h * k).collect();
    let k4 = field(&end);
    x.iter()
        .enumerate()
        .map(|(i, a)| a + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

/// Integrates the closure field over [0, t] with n RK4 steps.
pub fn integrate_rk4_fn(
    field: &dyn Fn(&[f64]) -> Vec<f64>,
    x0: &[f64],
    t: f64,
    n: usize,
) -> Vec<f64> {
    let h = t / n as f64;
    let mut x = x0.to_vec();
    for _ in 0..n {
        x = rk4_step_fn(field, &x, h);
    }
    x
}

/// Step-halving RK4 reference: refine until two successive solutions agree
/// to 1e-12 in the sup norm.
pub fn reference_solution_fn(
    field: &dyn Fn(&[f64]) -> Vec<f64>,
    x0: &[f64],
    t: f64,
) -> Result<Vec<f64>> {
    let mut n = ((t.abs() * 32.0).ceil() as usize).max(32);
    let mut prev = integrate_rk4_fn(field, x0, t, n);
    for _ in 0..24 {
        n *= 2;
        let next = integrate_rk4_fn(field, x0, t, n);
        let diff = sup_norm_diff(&prev, &next);
        if diff < 1e-12 {
            return Ok(next);
        }
        prev = next;
    }
    Err(anyhow!(
        "reference integration did not reach 1e-12 agreement; final step count {n}"
    ))
}

pub fn reference_solution(f: &PolyMap<f64>, x0: &[f64], t: f64) -> Result<Vec<f64>> {
    let field = |x: &[f64]| f.eval(x);
    reference_solution_fn(&field, x0, t)
}

/// One splitting step: alternates the exact angle rotation
/// θ ← θ + a_j h ω with the perturbation flow over b_j h, the latter
/// approximated by RK4 micro-stepping.
pub fn splitting_step(
    scheme: &SplittingScheme,
    problem: &PerturbedProblem,
    x: &[f64],
    h: f64,
) -> Vec<f64> {
    let d = problem.d();
    let dy = problem.dim() - d;
    let mut x = x.to_vec();
    let pert = |x: &[f64]| problem.eval_perturbation(x);
    for (aj, bj) in scheme.a.iter().zip(&scheme.b) {
        for (j, w) in problem.omega().as_slice().iter().enumerate() {
            x[dy + j] += aj * h * w;
        }
        if *bj != 0.0 {
            x = integrate_rk4_fn(&pert, &x, bj * h, MICRO_SUBSTEPS);
        }
    }
    x
}

pub fn integrate_splitting(
    scheme: &SplittingScheme,
    problem: &PerturbedProblem,
    x0: &[f64],
    h: f64,
    n: usize,
) -> Vec<f64> {
    let mut x = x0.to_vec();
    for _ in 0..n {
        x = splitting_step(scheme, problem, &x, h);
    }
    x
}

/// The integrand of a convergence experiment: either an RK tableau on a
/// polynomial field or a splitting scheme on a perturbed problem.
pub enum Experiment {
    Rk {
        tableau: RKTableau,
        field: PolyMap<f64>,
    },
    Splitting {
        scheme: SplittingScheme,
        problem: PerturbedProblem,
    },
}

/// Parsed experiment configuration. Step lists must be strictly
/// decreasing; referenced files are resolved relative to the config file.
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub x0: Vec<f64>,
    pub steps: Vec<f64>,
    pub interval: f64,
    pub output: Option<PathBuf>,
}

#[derive(Deserialize)]
struct ExperimentJson {
    kind: String,
    #[serde(default)]
    tableau: Option<String>,
    #[serde(default)]
    field: Option<String>,
    #[serde(default)]
    scheme: Option<String>,
    #[serde(default)]
    problem: Option<String>,
    x0: Vec<f64>,
    steps: Vec<f64>,
    interval: f64,
    #[serde(default)]
    output: Option<String>,
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let raw: ExperimentJson =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |s: &str| -> PathBuf {
            let p = Path::new(s);
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                base.join(p)
            }
        };
        if raw.steps.len() < 2 {
            bail!("need at least two steps for a convergence study");
        }
        if !raw.steps.windows(2).all(|w| w[0] > w[1]) {
            bail!("step list must be strictly decreasing: {:?}", raw.steps);
        }
        let read = |p: &PathBuf| -> Result<String> {
            std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))
        };
        let experiment = match raw.kind.as_str() {
            "rk" => {
                let tableau_path = resolve(
                    raw.tableau
                        .as_deref()
                        .ok_or_else(|| anyhow!("rk experiment needs a tableau"))?,
                );
                let field_path = resolve(
                    raw.field
                        .as_deref()
                        .ok_or_else(|| anyhow!("rk experiment needs a field"))?,
                );
                let tableau = RKTableau::from_json_str(&read(&tableau_path)?)?;
                let field_json: serde_json::Value = serde_json::from_str(&read(&field_path)?)?;
                let field = bseries_core::vectorfields::polymap_from_json(&field_json)?
                    .map_coeffs(|c| c.re);
                if field.dim_in() != field.len() {
                    bail!("convergence field must be square");
                }
                Experiment::Rk { tableau, field }
            }
            "splitting" => {
                let scheme_path = resolve(
                    raw.scheme
                        .as_deref()
                        .ok_or_else(|| anyhow!("splitting experiment needs a scheme"))?,
                );
                let problem_path = resolve(
                    raw.problem
                        .as_deref()
                        .ok_or_else(|| anyhow!("splitting experiment needs a problem"))?,
                );
                let scheme = SplittingScheme::from_json_str(&read(&scheme_path)?)?;
                let problem = PerturbedProblem::from_json_str(&read(&problem_path)?)?;
                Experiment::Splitting { scheme, problem }
            }
            other => bail!("unknown experiment kind {other:?}"),
        };
        let dim = match &experiment {
            Experiment::Rk { field, .. } => field.dim_in(),
            Experiment::Splitting { problem, .. } => problem.dim(),
        };
        if raw.x0.len() != dim {
            bail!("x0 has {} coordinates, problem has {dim}", raw.x0.len());
        }
        Ok(ExperimentConfig {
            experiment,
            x0: raw.x0,
            steps: raw.steps,
            interval: raw.interval,
            output: raw.output.map(|s| resolve(&s)),
        })
    }
}

/// One row of a convergence table.
#[derive(Debug, Clone)]
pub struct ConvergenceRow {
    pub h: f64,
    pub error: f64,
    pub rate: Option<f64>,
}

/// Runs the convergence study: global error at the end of the interval
/// against the step-halving reference, with observed rates between
/// consecutive rows.
pub fn convergence_study(cfg: &ExperimentConfig) -> Result<Vec<ConvergenceRow>> {
    let reference = match &cfg.experiment {
        Experiment::Rk { field, .. } => reference_solution(field, &cfg.x0, cfg.interval)?,
        Experiment::Splitting { problem, .. } => {
            let field = |x: &[f64]| problem.full_field(x);
            reference_solution_fn(&field, &cfg.x0, cfg.interval)?
        }
    };
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    for &h in &cfg.steps {
        let n = (cfg.interval / h).round().max(1.0) as usize;
        let h_eff = cfg.interval / n as f64;
        let end = match &cfg.experiment {
            Experiment::Rk { tableau, field } => integrate_rk(tableau, field, &cfg.x0, h_eff, n)?,
            Experiment::Splitting { scheme, problem } => {
                integrate_splitting(scheme, problem, &cfg.x0, h_eff, n)
            }
        };
        let error = sup_norm_diff(&end, &reference);
        let rate = rows
            .last()
            .map(|prev: &ConvergenceRow| (prev.error / error).ln() / (prev.h / h_eff).ln());
        rows.push(ConvergenceRow {
            h: h_eff,
            error,
            rate,
        });
    }
    Ok(rows)
}

/// Fixed CSV layout: h, error, rate with 17 significant digits; the first
/// row has no rate.
pub fn convergence_csv(rows: &[ConvergenceRow]) -> String {
    let mut out = String::from("h,error,rate\n");
    for row in rows {
        let rate = row.rate.map(|r| format!("{r:.16e}")).unwrap_or_default();
        out.push_str(&format!("{:.16e},{:.16e},{}\n", row.h, row.error, rate));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use bseries_core::butcher::tableaux;
    use bseries_core::poly::Poly;

    fn exp_field() -> PolyMap<f64> {
        PolyMap::new(1, vec![Poly::var(1, 0)]).unwrap()
    }

    #[test]
    fn euler_step_value() {
        let f = exp_field();
        let next = rk_step(&tableaux::euler(), &f, &[1.0], 0.1).unwrap();
        assert!((next[0] - 1.1).abs() < 1e-15);
    }

    #[test]
    fn rk4_one_step_accuracy() {
        let f = exp_field();
        let next = rk_step(&tableaux::rk4(), &f, &[1.0], 0.1).unwrap();
        assert!((next[0] - 0.1f64.exp()).abs() < 1e-7);
    }

    #[test]
    fn midpoint_preserves_quadratic_invariant() {
        // linear rotation: |x|² is conserved to roundoff per midpoint step
        let rot = PolyMap::new(
            2,
            vec![Poly::var(2, 1).scale(&-1.0), Poly::var(2, 0)],
        )
        .unwrap();
        let mut x = vec![1.0, 0.25];
        let r0: f64 = x.iter().map(|v| v * v).sum();
        for _ in 0..50 {
            x = rk_step(&tableaux::implicit_midpoint(), &rot, &x, 0.1).unwrap();
            let r: f64 = x.iter().map(|v| v * v).sum();
            assert!((r - r0).abs() < 1e-13, "drift {}", (r - r0).abs());
        }
    }

    #[test]
    fn implicit_stage_divergence_is_an_error() {
        let f = exp_field();
        // a = 1 with huge h: the fixed-point map does not contract
        let tab = RKTableau::new(
            "stiff",
            vec![vec![bseries_core::rat(1, 1)]],
            vec![bseries_core::rat(1, 1)],
        )
        .unwrap();
        assert!(rk_step(&tab, &f, &[1.0], 50.0).is_err());
    }

    #[test]
    fn reference_matches_exponential() {
        let f = exp_field();
        let r = reference_solution(&f, &[1.0], 1.0).unwrap();
        assert!((r[0] - 1.0f64.exp()).abs() < 1e-11);
    }
}
