//! Command-line front end for the B-series / word-series toolkit.

use anyhow::{anyhow, bail, Context, Result};
use bseries_cli::harness;
use bseries_core::butcher::{
    elementary_weights, hamiltonian_violation, order_conditions, symplectic_violation, BMap,
    RKTableau,
};
use bseries_core::extended::{flow_coeffs, Frequencies, PerturbedProblem};
use bseries_core::scalar::{format_rat, parse_rat};
use bseries_core::splitting::{
    detect_resonances, exp_modified, modified_system, splitting_coeffs,
    splitting_coeffs_by_composition, SplitError, SplittingScheme,
};
use bseries_core::trees::{enumerate_trees, tree_key};
use bseries_core::words::{
    group_violation, is_group_element, is_lie_element, iterated_integral_coeffs, taylor_coeffs_exact,
    Alphabet, LambdaSpec,
};
use bseries_core::Complex64;
use clap::{Parser, Subcommand, ValueEnum};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "bseries",
    about = "Order, symplecticness, modified-equation and splitting analysis \
             for ODE integrators via B-series and word series",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Exact,
    Float,
}

#[derive(Subcommand)]
enum Command {
    /// List canonical rooted trees with symmetry and density
    Trees {
        /// Largest tree order to list
        #[arg(short = 'N', long = "max-order", default_value_t = 4)]
        max_order: usize,
    },
    /// Compute the exact order of a Runge-Kutta tableau
    RkOrder {
        /// Tableau JSON file
        #[arg(short, long)]
        input: PathBuf,
        /// Grade cap for the order check
        #[arg(short = 'N', long = "max-order", default_value_t = 6)]
        max_order: usize,
        /// Fail (exit 1) unless the computed order equals this value
        #[arg(long)]
        expect: Option<usize>,
    },
    /// Check tableau- and coefficient-level symplecticness
    RkSymplectic {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short = 'N', long = "max-order", default_value_t = 5)]
        max_order: usize,
    },
    /// Compose two coefficient maps (tableau or map JSON): outer ∘ inner
    Compose {
        /// Outer map: applied second
        #[arg(long)]
        outer: PathBuf,
        /// Inner map: applied first
        #[arg(long)]
        inner: PathBuf,
        #[arg(short = 'N', long = "max-order", default_value_t = 6)]
        max_order: usize,
        /// Output path (stdout when omitted)
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Modified-equation coefficients (log of the integrator map)
    ModifiedEquation {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short = 'N', long = "max-order", default_value_t = 6)]
        max_order: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Iterated-integral word coefficients
    Words {
        /// Perturbed-problem JSON: oscillatory forcings from its modes and ω
        #[arg(long, conflicts_with = "letters")]
        problem: Option<PathBuf>,
        /// Comma-separated abstract letters with λ ≡ 1
        #[arg(long)]
        letters: Option<String>,
        /// Evaluation time; a rational string in exact mode
        #[arg(long, default_value = "1", allow_hyphen_values = true)]
        t: String,
        #[arg(short = 'N', long = "max-order", default_value_t = 4)]
        max_order: usize,
        /// exact (rational, λ ≡ 1 only) or float coefficients
        #[arg(long, value_enum, default_value = "float")]
        mode: Mode,
        /// Tolerance for the shuffle-relation self-check
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Word coefficients, resonances and modified system of a splitting scheme
    SplittingAnalyze {
        /// Splitting scheme JSON
        #[arg(short, long)]
        input: PathBuf,
        /// Comma-separated frequencies ω
        #[arg(long)]
        omega: Option<String>,
        /// Step size
        #[arg(long, allow_hyphen_values = true)]
        h: f64,
        #[arg(short = 'N', long = "max-order", default_value_t = 3)]
        max_order: usize,
        /// Mode set as semicolon-separated integer vectors, e.g. "-1;0;1"
        #[arg(long, allow_hyphen_values = true)]
        modes: Option<String>,
        /// Perturbed-problem JSON supplying ω and the mode set
        #[arg(long)]
        problem: Option<PathBuf>,
        /// Grade of the modified system (defaults to the word cap)
        #[arg(long)]
        modified_grade: Option<usize>,
        /// Resonance detection tolerance on the phase
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run the built-in verification battery (and optional experiments)
    Verify {
        /// Convergence experiment config JSON to run after the battery
        #[arg(long)]
        experiment: Option<PathBuf>,
        /// Output path for the experiment CSV
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

/// Prints to stdout, treating a closed pipe (e.g. `bseries … | head`) as a
/// clean early exit instead of a panic.
fn emit(content: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let result = out
        .write_all(content.as_bytes())
        .and_then(|_| out.write_all(b"\n"));
    if let Err(e) = result {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
    }
}

fn write_output(path: &Option<PathBuf>, content: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, content).with_context(|| format!("writing {}", p.display())),
        None => {
            emit(content);
            Ok(())
        }
    }
}

fn load_tableau(path: &Path) -> Result<RKTableau> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(RKTableau::from_json_str(&text)?)
}

/// Loads a coefficient map: a tableau JSON turns into its elementary
/// weights, a flat map JSON is used directly.
fn load_coefficient_map(path: &Path, cap: usize) -> Result<BMap> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    if value.get("A").is_some() {
        let tableau = RKTableau::from_json_str(&text)?;
        Ok(elementary_weights(&tableau, cap))
    } else {
        Ok(BMap::from_json(&value, cap)?)
    }
}

fn parse_omega(spec: &str) -> Result<Frequencies> {
    let parts: Vec<f64> = spec
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|e| anyhow!("bad frequency {s:?}: {e}")))
        .collect::<Result<_>>()?;
    Ok(Frequencies::new(parts)?)
}

fn parse_modes(spec: &str, d: usize) -> Result<Alphabet> {
    let ks: Vec<Vec<i64>> = spec
        .split(';')
        .map(|part| {
            part.split(',')
                .map(|s| s.trim().parse::<i64>().map_err(|e| anyhow!("bad mode entry {s:?}: {e}")))
                .collect::<Result<Vec<i64>>>()
        })
        .collect::<Result<_>>()?;
    for k in &ks {
        if k.len() != d {
            bail!("mode {k:?} does not have dimension {d}");
        }
    }
    Ok(Alphabet::modes(ks))
}

fn complex_json(c: &Complex64) -> serde_json::Value {
    serde_json::json!([c.re, c.im])
}

fn run(command: Command) -> Result<bool> {
    match command {
        Command::Trees { max_order } => {
            for n in 1..=max_order {
                for u in enumerate_trees(n) {
                    emit(&format!(
                        "tree=[{}] order={} sigma={} density={}",
                        tree_key(&u),
                        u.order(),
                        u.symmetry(),
                        u.density()
                    ));
                }
            }
            Ok(true)
        }

        Command::RkOrder {
            input,
            max_order,
            expect,
        } => {
            let tableau = load_tableau(&input)?;
            let weights = elementary_weights(&tableau, max_order);
            let order = weights.order_of(max_order);
            emit(&format!("order {order}"));
            if order < max_order {
                // name the first failing condition for diagnosis
                for (u, rhs) in order_conditions(order + 1) {
                    if u.order() == order + 1 && weights.coeff(&u) != &rhs {
                        emit(&format!(
                            "first failure at tree [{}]: weight {} ≠ {}",
                            tree_key(&u),
                            format_rat(weights.coeff(&u)),
                            format_rat(&rhs)
                        ));
                        break;
                    }
                }
            }
            Ok(expect.is_none_or(|e| e == order))
        }

        Command::RkSymplectic { input, max_order } => {
            let tableau = load_tableau(&input)?;
            let tableau_ok = tableau.is_symplectic();
            emit(&format!(
                "tableau condition b_i a_ij + b_j a_ji = b_i b_j: {}",
                if tableau_ok { "satisfied" } else { "violated" }
            ));
            let weights = elementary_weights(&tableau, max_order);
            let coeff_result = symplectic_violation(&weights, max_order);
            match &coeff_result {
                None => emit(&format!(
                    "coefficient condition up to grade {max_order}: satisfied"
                )),
                Some((u, v)) => emit(&format!(
                    "coefficient condition violated at u=[{}], v=[{}]",
                    tree_key(u),
                    tree_key(v)
                )),
            }
            let log_ok = hamiltonian_violation(&weights.log_star(), max_order).is_none();
            emit(&format!(
                "modified field Hamiltonian condition: {}",
                if log_ok { "satisfied" } else { "violated" }
            ));
            Ok(tableau_ok && coeff_result.is_none() && log_ok)
        }

        Command::Compose {
            outer,
            inner,
            max_order,
            output,
        } => {
            let outer_map = load_coefficient_map(&outer, max_order)?;
            let inner_map = load_coefficient_map(&inner, max_order)?;
            let composed = outer_map.compose(&inner_map)?;
            write_output(&output, &serde_json::to_string_pretty(&composed.to_json())?)?;
            Ok(true)
        }

        Command::ModifiedEquation {
            input,
            max_order,
            output,
        } => {
            let tableau = load_tableau(&input)?;
            let beta = elementary_weights(&tableau, max_order).log_star();
            write_output(&output, &serde_json::to_string_pretty(&beta.to_json())?)?;
            Ok(true)
        }

        Command::Words {
            problem,
            letters,
            t,
            max_order,
            mode,
            tol,
            output,
        } => match (problem, letters, mode) {
            (Some(path), None, Mode::Float) => {
                let text = std::fs::read_to_string(&path)
                    .with_context(|| format!("reading {}", path.display()))?;
                let prob = PerturbedProblem::from_json_str(&text)?;
                let alphabet = prob.alphabet();
                let tval: f64 = t.parse().map_err(|e| anyhow!("bad time {t:?}: {e}"))?;
                let spec = LambdaSpec::oscillatory(&alphabet, prob.omega().as_slice())?;
                let coeffs = iterated_integral_coeffs(&spec, &alphabet, tval, max_order);
                let ok = is_group_element(&coeffs, max_order, tol);
                write_output(&output, &serde_json::to_string_pretty(&coeffs.to_json(complex_json))?)?;
                if !ok {
                    eprintln!("shuffle-relation check failed at tolerance {tol}");
                }
                Ok(ok)
            }
            (Some(_), None, Mode::Exact) => {
                bail!("exact mode requires λ ≡ 1; use --letters")
            }
            (None, Some(ls), Mode::Exact) => {
                let names: Vec<&str> = ls.split(',').map(|s| s.trim()).collect();
                let alphabet = Alphabet::named(&names);
                let tval = parse_rat(&t).map_err(|e| anyhow!(e))?;
                let coeffs = taylor_coeffs_exact(&tval, &alphabet, max_order);
                let ok = group_violation(&coeffs, max_order, 0.0).is_none();
                write_output(
                    &output,
                    &serde_json::to_string_pretty(
                        &coeffs.to_json(|r| serde_json::json!(format_rat(r))),
                    )?,
                )?;
                Ok(ok)
            }
            (None, Some(ls), Mode::Float) => {
                let names: Vec<&str> = ls.split(',').map(|s| s.trim()).collect();
                let alphabet = Alphabet::named(&names);
                let tval: f64 = t.parse().map_err(|e| anyhow!("bad time {t:?}: {e}"))?;
                let spec = LambdaSpec::ones(alphabet.len());
                let coeffs = iterated_integral_coeffs(&spec, &alphabet, tval, max_order);
                let ok = is_group_element(&coeffs, max_order, tol);
                write_output(&output, &serde_json::to_string_pretty(&coeffs.to_json(complex_json))?)?;
                Ok(ok)
            }
            _ => bail!("exactly one of --problem or --letters is required"),
        },

        Command::SplittingAnalyze {
            input,
            omega,
            h,
            max_order,
            modes,
            problem,
            modified_grade,
            tol,
            output,
        } => {
            let text = std::fs::read_to_string(&input)
                .with_context(|| format!("reading {}", input.display()))?;
            let scheme = SplittingScheme::from_json_str(&text)?;
            let (freqs, alphabet) = match (&problem, &omega) {
                (Some(path), _) => {
                    let ptext = std::fs::read_to_string(path)
                        .with_context(|| format!("reading {}", path.display()))?;
                    let prob = PerturbedProblem::from_json_str(&ptext)?;
                    (prob.omega().clone(), prob.alphabet())
                }
                (None, Some(spec)) => {
                    let freqs = parse_omega(spec)?;
                    let alphabet = match &modes {
                        Some(m) => parse_modes(m, freqs.d())?,
                        None if freqs.d() == 1 => {
                            Alphabet::modes(vec![vec![-1], vec![0], vec![1]])
                        }
                        None => bail!("--modes is required when d > 1"),
                    };
                    (freqs, alphabet)
                }
                (None, None) => bail!("either --problem or --omega is required"),
            };

            let coeffs = splitting_coeffs(&scheme, &freqs, h, &alphabet, max_order)?;
            let oracle =
                splitting_coeffs_by_composition(&scheme, &freqs, h, &alphabet, max_order)?;
            let defect = coeffs.max_abs_diff(&oracle);
            let group_ok = coeffs.is_group(1e-10);
            let resonances = detect_resonances(&freqs, h, max_order, &alphabet, tol)?;
            let resonance_json: Vec<serde_json::Value> = resonances
                .iter()
                .map(|r| serde_json::json!({"letters": r.letters, "j": r.j}))
                .collect();

            let grade = modified_grade.unwrap_or(max_order);
            let modified_json = match modified_system(&scheme, &freqs, h, grade, &alphabet) {
                Ok(ms) => {
                    let flow = exp_modified(&freqs, &ms.beta, h, grade)?;
                    let target = splitting_coeffs(&scheme, &freqs, h, &alphabet, grade)?;
                    serde_json::json!({
                        "grade": ms.grade,
                        "beta": ms.beta.to_json(complex_json)["coeffs"],
                        "lie_check": is_lie_element(&ms.beta, grade, 1e-10),
                        "roundtrip_error": flow.words.max_abs_diff(&target.words),
                        "warnings": ms.warnings,
                    })
                }
                Err(SplitError::Resonance { letters, j }) => {
                    serde_json::json!({"error": {
                        "kind": "resonance",
                        "letters": letters,
                        "j": j,
                    }})
                }
                Err(e) => return Err(e.into()),
            };

            let report = serde_json::json!({
                "scheme": scheme.to_json(),
                "omega": freqs.as_slice(),
                "h": h,
                "cap": max_order,
                "shift": coeffs.shift.iter().map(complex_json).collect::<Vec<_>>(),
                "coefficients": coeffs.words.to_json(complex_json)["coeffs"],
                "group_check": group_ok,
                "composition_defect": defect,
                "resonances": resonance_json,
                "modified_system": modified_json,
            });
            write_output(&output, &serde_json::to_string_pretty(&report)?)?;
            Ok(true)
        }

        Command::Verify { experiment, output } => {
            let mut all_ok = run_verification_battery();
            if let Some(path) = experiment {
                let cfg = harness::ExperimentConfig::from_path(&path)?;
                let rows = harness::convergence_study(&cfg)?;
                let csv = harness::convergence_csv(&rows);
                let target = output.clone().or_else(|| cfg.output.clone());
                match &target {
                    Some(p) => std::fs::write(p, &csv)
                        .with_context(|| format!("writing {}", p.display()))?,
                    None => emit(csv.trim_end()),
                }
                if rows.iter().any(|r| !r.error.is_finite()) {
                    all_ok = false;
                }
            }
            Ok(all_ok)
        }
    }
}

fn check(name: &str, ok: bool, detail: &str) -> bool {
    emit(&format!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" }));
    ok
}

/// Deterministic self-checks tying the CLI to the core invariants.
fn run_verification_battery() -> bool {
    use bseries_core::trees::RootedTree;
    let mut ok = true;

    // rooted-tree table through order 4
    let expected: Vec<(usize, u64, u64)> = vec![
        (1, 1, 1),
        (2, 1, 2),
        (3, 1, 6),
        (3, 2, 3),
        (4, 1, 24),
        (4, 2, 12),
        (4, 1, 8),
        (4, 6, 4),
    ];
    let mut got: Vec<(usize, u64, u64)> = (1..=4)
        .flat_map(enumerate_trees)
        .map(|u| (u.order(), u.symmetry(), u.density()))
        .collect();
    let mut want = expected.clone();
    got.sort();
    want.sort();
    ok &= check(
        "tree table order ≤ 4",
        got == want,
        &format!("{} trees", got.len()),
    );

    // order conditions through p = 3
    let conds = order_conditions(3);
    let t = |levels: &[u32]| RootedTree::from_levels(levels).unwrap();
    let lookup: std::collections::BTreeMap<_, _> = conds.into_iter().collect();
    let cond_ok = lookup.len() == 4
        && lookup[&RootedTree::leaf()] == bseries_core::rat(1, 1)
        && lookup[&t(&[1, 2])] == bseries_core::rat(1, 2)
        && lookup[&t(&[1, 2, 3])] == bseries_core::rat(1, 6)
        && lookup[&t(&[1, 2, 2])] == bseries_core::rat(1, 3);
    ok &= check("order conditions p = 3", cond_ok, "values 1, 1/2, 1/6, 1/3");

    // classical orders by exact evaluation
    let euler = elementary_weights(&bseries_core::butcher::tableaux::euler(), 5);
    let rk4 = elementary_weights(&bseries_core::butcher::tableaux::rk4(), 5);
    ok &= check(
        "euler order",
        euler.order_of(5) == 1,
        &format!("computed {}", euler.order_of(5)),
    );
    ok &= check(
        "rk4 order",
        rk4.order_of(5) == 4,
        &format!("computed {}", rk4.order_of(5)),
    );

    // symplecticness
    let midpoint = bseries_core::butcher::tableaux::implicit_midpoint();
    let mid_w = elementary_weights(&midpoint, 5);
    let sym_ok = midpoint.is_symplectic()
        && symplectic_violation(&mid_w, 5).is_none()
        && hamiltonian_violation(&mid_w.log_star(), 4).is_none();
    ok &= check("implicit midpoint symplectic", sym_ok, "tableau + coefficients + log");
    let euler_witness = symplectic_violation(&euler, 5);
    let euler_bad = !bseries_core::butcher::tableaux::euler().is_symplectic()
        && euler_witness == Some((RootedTree::leaf(), RootedTree::leaf()));
    ok &= check("euler not symplectic", euler_bad, "witness u = v = leaf");

    // splitting closed form against the composition oracle
    let alphabet = Alphabet::modes(vec![vec![-1], vec![1]]);
    let omega = Frequencies::new(vec![1.0]).unwrap();
    for scheme in [SplittingScheme::lie_trotter(), SplittingScheme::strang()] {
        let closed = splitting_coeffs(&scheme, &omega, 0.3, &alphabet, 4).unwrap();
        let oracle = splitting_coeffs_by_composition(&scheme, &omega, 0.3, &alphabet, 4).unwrap();
        let defect = closed.max_abs_diff(&oracle);
        ok &= check(
            &format!("{} closed form", scheme.name),
            defect < 1e-13,
            &format!("max defect {defect:.2e}"),
        );
    }

    // resonances and the modified system
    let two_pi = 2.0 * std::f64::consts::PI;
    let at_res = detect_resonances(&omega, two_pi, 1, &alphabet, 1e-9).unwrap();
    ok &= check(
        "resonance flagged at h = 2π",
        !at_res.is_empty(),
        &format!("{} combinations", at_res.len()),
    );
    let away = detect_resonances(&omega, 0.3, 6, &alphabet, 1e-6).unwrap();
    ok &= check("no resonance at h = 0.3", away.is_empty(), "orders ≤ 6");
    let blocked = modified_system(
        &SplittingScheme::lie_trotter(),
        &omega,
        two_pi,
        1,
        &alphabet,
    );
    ok &= check(
        "modified system blocked at resonance",
        matches!(blocked, Err(SplitError::Resonance { .. })),
        "named combination in error",
    );
    match modified_system(&SplittingScheme::strang(), &omega, 0.3, 2, &alphabet) {
        Ok(ms) => {
            let flow = exp_modified(&omega, &ms.beta, 0.3, 2).unwrap();
            let target = splitting_coeffs(&SplittingScheme::strang(), &omega, 0.3, &alphabet, 2)
                .unwrap();
            let err = flow.words.max_abs_diff(&target.words);
            ok &= check(
                "modified system round trip",
                err < 1e-10 && is_lie_element(&ms.beta, 2, 1e-10),
                &format!("defect {err:.2e}"),
            );
        }
        Err(e) => {
            ok &= check("modified system round trip", false, &format!("{e}"));
        }
    }

    // exact flow coefficients pass the shuffle relations
    let flow = flow_coeffs(&omega, 0.7, &alphabet, 4).unwrap();
    ok &= check(
        "flow coefficients are group elements",
        flow.is_group(1e-12),
        "shuffle relations ≤ 4 letters",
    );

    ok
}
