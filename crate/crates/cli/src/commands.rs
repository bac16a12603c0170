use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use chm2u_core::constructions::{
    ame43_reference, build_u, delta_params, hadamard36, hadamard36_phases, sigma_params, u3_family,
    AffineParams,
};
use chm2u_core::hadamard::{defect as compute_defect, is_chm, is_symmetric, to_butson};
use chm2u_core::io::{
    read_matrix, read_permutation, sha256_of_file, write_certificate, write_matrix_butson,
    write_matrix_complex, write_matrix_phases, Certificate, CheckRecord,
};
use chm2u_core::sinkhorn::{
    minimize_z, run, seed_from_config, EpsilonRamp, IterConfig, RealignOrder, RunStatus, ZConfig,
};
use chm2u_core::tensor::{
    fourier_unimodular, is_two_unitary, is_unitary, BipartiteShape, Permutation,
};
use chm2u_core::{CMat, C64};

use crate::{
    default_tol, ChmizeArgs, DefectArgs, GenerateArgs, GenerateKind, ReprArg, SinkhornArgs,
    VerifyArgs,
};

fn parse_alpha(text: Option<&str>, gamma: Option<f64>) -> Result<AffineParams<f64>> {
    if let Some(g) = gamma {
        if text.is_some() {
            bail!("--alpha and --gamma are mutually exclusive");
        }
        return Ok(delta_params(g));
    }
    match text {
        None | Some("zero") => Ok(AffineParams::zero()),
        Some("sigma") => Ok(sigma_params()),
        Some(list) => {
            let values: Vec<f64> = list
                .split(',')
                .map(|t| t.trim().parse::<f64>().context("bad --alpha entry"))
                .collect::<Result<_>>()?;
            Ok(AffineParams::from_slice(&values)?)
        }
    }
}

/// Writes `matrix` choosing the most exact representation available unless
/// the caller forced one.
fn write_with_repr(
    path: &Path,
    matrix: &CMat,
    phases: Option<&chm2u_core::RMat>,
    forced: Option<ReprArg>,
    q_max: i64,
) -> Result<()> {
    let repr = match forced {
        Some(r) => r,
        None => {
            if to_butson(matrix, q_max, 1e-8).is_some() {
                ReprArg::Butson
            } else if phases.is_some() {
                ReprArg::PhaseSixths
            } else {
                ReprArg::Complex
            }
        }
    };
    match repr {
        ReprArg::Butson => {
            let butson = to_butson(matrix, q_max, 1e-8)
                .context("matrix entries are not roots of unity up to q_max")?;
            write_matrix_butson(path, &butson)?;
        }
        ReprArg::PhaseSixths => {
            let phases = phases.context("no exact sixths representation for this matrix")?;
            write_matrix_phases(path, phases)?;
        }
        ReprArg::Complex => write_matrix_complex(path, matrix)?,
    }
    Ok(())
}

pub fn generate(args: GenerateArgs) -> Result<bool> {
    match args.kind {
        GenerateKind::Hadamard36 => {
            let params = parse_alpha(args.alpha.as_deref(), args.gamma)?;
            let matrix = hadamard36(&params);
            let phases = hadamard36_phases(&params);
            write_with_repr(&args.out, &matrix, Some(&phases), args.repr, 240)?;
        }
        GenerateKind::Biunimodular => {
            let index = args.index.unwrap_or(1);
            // stored with unimodular entries (6x the unitary form)
            let six = C64::new(6.0, 0.0);
            let matrix = match args.a {
                Some(a) if index == 3 => u3_family(a) * six,
                Some(_) => bail!("--a applies to --index 3 only"),
                None => build_u::<f64>(index)? * six,
            };
            write_with_repr(&args.out, &matrix, None, args.repr, 240)?;
        }
        GenerateKind::Fourier => {
            let d = args.index.context("fourier requires --index <order>")?;
            let matrix = fourier_unimodular::<f64>(d);
            write_with_repr(&args.out, &matrix, None, args.repr, d.max(2) as i64)?;
        }
        GenerateKind::Ame43 => {
            let matrix = ame43_reference::<f64>()?;
            write_with_repr(&args.out, &matrix, None, args.repr, 3)?;
        }
        GenerateKind::BaseB => {
            let matrix = hadamard36(&AffineParams::<f64>::zero());
            write_with_repr(
                &args.out,
                &matrix,
                None,
                args.repr.or(Some(ReprArg::Butson)),
                6,
            )?;
        }
    }
    println!("wrote {}", args.out.display());
    Ok(true)
}

fn default_cert_path(input: &Path) -> PathBuf {
    let mut name = input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "subject".into());
    name.push_str(".cert.json");
    input.with_file_name(name)
}

fn subject_name(input: &Path) -> String {
    input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "subject".into())
}

pub fn verify(args: VerifyArgs) -> Result<bool> {
    let tol = args.tol.unwrap_or_else(default_tol);
    let loaded = read_matrix(&args.path)?;
    let matrix = &loaded.matrix;
    let mut cert = Certificate::new(subject_name(&args.path), sha256_of_file(&args.path)?, None);

    for check in args
        .checks
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
    {
        let record = match check {
            "unitary" => {
                let report = is_unitary(matrix, args.scale, tol)?;
                CheckRecord {
                    name: "unitary".into(),
                    tolerance: tol,
                    residual: report.residual,
                    pass: report.pass,
                    value: None,
                    detail: Some(format!("scale {}", args.scale)),
                }
            }
            "two-unitary" => {
                let shape = BipartiteShape::of_matrix(matrix)?;
                let report = is_two_unitary(matrix, shape, args.scale, tol)?;
                CheckRecord {
                    name: "two-unitary".into(),
                    tolerance: tol,
                    residual: report.worst(),
                    pass: report.pass,
                    value: None,
                    detail: Some(format!(
                        "u {:.3e}, reshuffle {:.3e}, transpose {:.3e}, scale {}",
                        report.u_residual,
                        report.reshuffle_residual,
                        report.transpose_residual,
                        args.scale
                    )),
                }
            }
            "chm" => {
                let report = is_chm(matrix, tol)?;
                CheckRecord {
                    name: "chm".into(),
                    tolerance: tol,
                    residual: report
                        .unimodularity_residual
                        .max(report.orthogonality_residual),
                    pass: report.pass,
                    value: None,
                    detail: Some(format!(
                        "unimodularity {:.3e}, orthogonality {:.3e}",
                        report.unimodularity_residual, report.orthogonality_residual
                    )),
                }
            }
            "butson" => match to_butson(matrix, args.q_max, 1e-8) {
                Some(butson) => CheckRecord {
                    name: "butson".into(),
                    tolerance: tol,
                    residual: 0.0,
                    pass: true,
                    value: Some(butson.q() as f64),
                    detail: Some(format!("BH({}, {})", butson.order(), butson.q())),
                },
                None => CheckRecord {
                    name: "butson".into(),
                    tolerance: tol,
                    residual: 1.0,
                    pass: false,
                    value: None,
                    detail: Some(format!("no root order up to {}", args.q_max)),
                },
            },
            "symmetric" => {
                let pass = is_symmetric(matrix, tol);
                CheckRecord {
                    name: "symmetric".into(),
                    tolerance: tol,
                    residual: if pass { 0.0 } else { 1.0 },
                    pass,
                    value: None,
                    detail: None,
                }
            }
            other => bail!("unknown check {other:?}"),
        };
        cert.checks.push(record);
    }

    let all_pass = cert.all_pass();
    for check in &cert.checks {
        if !check.pass {
            eprintln!(
                "FAIL {} residual {:.6e} (tolerance {:.1e})",
                check.name, check.residual, check.tolerance
            );
        }
    }
    let cert_path = args.cert.unwrap_or_else(|| default_cert_path(&args.path));
    write_certificate(&cert_path, &cert)?;
    Ok(all_pass)
}

pub fn defect(args: DefectArgs) -> Result<bool> {
    let loaded = read_matrix(&args.path)?;
    let report = compute_defect(&loaded.matrix)?;
    let mut cert = Certificate::new(subject_name(&args.path), sha256_of_file(&args.path)?, None);
    let (pass, residual) = match report.defect {
        Some(_) => (true, 1.0 / report.gap_ratio),
        None => (false, 1.0),
    };
    cert.checks.push(CheckRecord {
        name: "defect".into(),
        tolerance: chm2u_core::hadamard::DEFECT_GAP_REQUIREMENT.recip(),
        residual,
        pass,
        value: report.defect.map(|d| d as f64),
        detail: Some(format!(
            "nullity {}, trivial {}, gap ratio {:.3e}",
            report.nullity, report.trivial_dim, report.gap_ratio
        )),
    });
    let cert_path = args.cert.unwrap_or_else(|| default_cert_path(&args.path));
    write_certificate(&cert_path, &cert)?;
    match report.defect {
        Some(value) => {
            println!("{value}");
            Ok(true)
        }
        None => {
            eprintln!(
                "indeterminate: spectral gap ratio {:.3e} below {}",
                report.gap_ratio,
                chm2u_core::hadamard::DEFECT_GAP_REQUIREMENT
            );
            Ok(false)
        }
    }
}

pub fn sinkhorn(args: SinkhornArgs) -> Result<bool> {
    let shape = BipartiteShape::new(args.d)?;
    let perm = match &args.seed_perm {
        Some(path) => read_permutation(path)?,
        None if args.d == 6 => chm2u_core::constructions::default_seed_permutation().clone(),
        None => Permutation::identity(shape.n()),
    };
    if perm.len() != shape.n() {
        bail!(
            "seed permutation has order {}, expected {}",
            perm.len(),
            shape.n()
        );
    }
    let epsilon_schedule = match &args.ramp {
        None => None,
        Some(ramp) => {
            let parts: Vec<&str> = ramp.split(',').collect();
            if parts.len() != 3 {
                bail!("--ramp wants start,end,steps");
            }
            Some(EpsilonRamp {
                start: parts[0].trim().parse().context("ramp start")?,
                end: parts[1].trim().parse().context("ramp end")?,
                steps: parts[2].trim().parse().context("ramp steps")?,
            })
        }
    };
    let config = IterConfig {
        eta: args.eta,
        epsilon: args.epsilon,
        epsilon_schedule,
        t_max: args.t_max,
        tol: args.tol.unwrap_or(1e-9),
        realign_order: if args.gamma_first {
            RealignOrder::TransposeThenReshuffle
        } else {
            RealignOrder::ReshuffleThenTranspose
        },
        rng_seed: args.rng,
    };
    let x0 = seed_from_config::<f64>(&perm, &config);
    let (matrix, trace) = run(&x0, shape, &config)?;
    write_matrix_complex(&args.out, &matrix)?;
    if let Some(trace_path) = &args.trace {
        let payload = serde_json::json!({
            "config": config,
            "status": trace.status,
            "steps": trace.steps,
        });
        let mut text = serde_json::to_string_pretty(&payload)?;
        text.push('\n');
        std::fs::write(trace_path, text)?;
    }
    let last = trace.final_step();
    println!(
        "status: {:?} after {} steps{}",
        trace.status,
        trace.steps.len(),
        last.map(|s| format!(
            " (u {:.2e}, reshuffle {:.2e}, transpose {:.2e})",
            s.u_residual, s.reshuffle_residual, s.transpose_residual
        ))
        .unwrap_or_default()
    );
    Ok(trace.status == RunStatus::Converged)
}

pub fn chmize(args: ChmizeArgs) -> Result<bool> {
    let loaded = read_matrix(&args.path)?;
    // the objective targets unimodular entries; rescale so a matrix of
    // order n has Frobenius norm n, which leaves unimodular inputs alone
    // and lifts unitary-normalized solver outputs by d
    let n = loaded.matrix.nrows() as f64;
    let norm = chm2u_core::frobenius(&loaded.matrix);
    let input = if norm > 0.0 {
        &loaded.matrix * C64::new(n / norm, 0.0)
    } else {
        loaded.matrix.clone()
    };
    let config = ZConfig {
        restarts: args.restarts,
        budget: args.budget,
        target: args.target.unwrap_or(1e-7),
        try_realignments: args.realign,
        rng_seed: args.rng,
        ..ZConfig::default()
    };
    let outcome = minimize_z(&input, &config)?;
    println!(
        "best objective {:.6e} ({:?} input, {} evaluations)",
        outcome.value, outcome.variant, outcome.evaluations
    );
    if let Some(out) = &args.out {
        let v_to_json = |v: &CMat| -> Vec<[f64; 2]> { v.iter().map(|z| [z.re, z.im]).collect() };
        let payload = serde_json::json!({
            "value": outcome.value,
            "variant": outcome.variant,
            "evaluations": outcome.evaluations,
            "restart_values": outcome.restart_values,
            "v1": v_to_json(&outcome.v1),
            "v2": v_to_json(&outcome.v2),
        });
        let mut text = serde_json::to_string_pretty(&payload)?;
        text.push('\n');
        std::fs::write(out, text)?;
    }
    Ok(outcome.value <= config.target)
}
