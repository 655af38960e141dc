//! Acceptance suite. Runs every criterion at its fixed tolerance, prints one
//! PASS/FAIL line each and exits nonzero if any fails.

// negated comparisons are deliberate: NaN must fail a criterion
#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::needless_range_loop,
    clippy::type_complexity
)]

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use mems_teleport::linalg::ComplexMatrix;
use mems_teleport::measures::{concurrence, linear_entropy, negativity};
use mems_teleport::states::{
    make_mems, mems_boundary_concurrence, random_density, ChannelFamily, ChannelSpec,
    DensityOperator, TargetForm, TargetSpec,
};
use mems_teleport::teleport::{
    effective_channel_output, ideal_channel, locate_threshold, teleport_rigid, threshold_r,
    Protocol,
};
use mems_teleport::verify::{check_fidelity, Status, VerifyOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            if i + 1 == n {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            }
        })
        .collect()
}

fn alpha_of(c: f64) -> f64 {
    ((1.0 + (1.0 - c * c).sqrt()) / 2.0).sqrt()
}

fn mems_validity() -> Outcome {
    let mut worst: f64 = 0.0;
    for (family, lo, hi) in [
        (ChannelFamily::Mems1, 2.0 / 3.0, 1.0),
        (ChannelFamily::Mems2, 0.0, 2.0 / 3.0),
    ] {
        for r in linspace(lo, hi, 100) {
            let rho = make_mems(ChannelSpec::new(family, r).map_err(e)?).map_err(e)?;
            DensityOperator::new(rho.matrix().clone()).map_err(e)?;
            let (c, _) = concurrence(&rho).map_err(e)?;
            let s = linear_entropy(&rho).map_err(e)?;
            let s_expected = match family {
                ChannelFamily::Mems1 => 8.0 * r * (1.0 - r) / 3.0,
                _ => 8.0 / 9.0 - 2.0 * r * r / 3.0,
            };
            ensure!((c - r).abs() <= 1e-12, "{family} r={r}: C={c}");
            ensure!(
                (s - s_expected).abs() <= 1e-12,
                "{family} r={r}: S={s}, expected {s_expected}"
            );
            worst = worst.max((c - r).abs()).max((s - s_expected).abs());
        }
    }
    Ok(format!("200 states valid, max dev {worst:.2e} (tol 1e-12)"))
}

fn c_out_law(family: ChannelFamily, lo: f64, hi: f64, law: fn(f64, f64) -> f64) -> Outcome {
    let mut worst: f64 = 0.0;
    for r in linspace(lo, hi, 25) {
        let ch = ChannelSpec::new(family, r).map_err(e)?;
        for c in linspace(0.0, 1.0, 25) {
            let out = teleport_rigid(&TargetSpec::psi(c).map_err(e)?, &ch, &ch).map_err(e)?;
            let dev = (out.c_out - law(r, c)).abs();
            ensure!(
                dev <= 1e-10,
                "r={r} c_in={c}: simulated {} vs law {}",
                out.c_out,
                law(r, c)
            );
            worst = worst.max(dev);
        }
    }
    Ok(format!("25x25 grid, max dev {worst:.2e} (tol 1e-10)"))
}

fn threshold() -> Outcome {
    let spot = threshold_r(0.6).map_err(e)?;
    ensure!(
        (spot - 6.0 / 7.0).abs() <= 1e-15,
        "threshold at 0.6 is {spot}, expected 6/7"
    );
    let mut worst: f64 = 0.0;
    for c in [0.2f64, 0.4, 0.6, 0.8, 1.0] {
        let oracle =
            (4.0 - 2.0 * c + 4.0 * (1.0 - c * c).sqrt()) / (3.0 + 5.0 * (1.0 - c * c).sqrt());
        let found = locate_threshold(c, 1e-9).map_err(e)?;
        ensure!(
            (found - oracle).abs() <= 1e-6,
            "c_in={c}: bisection {found}, formula {oracle}"
        );
        worst = worst.max((found - oracle).abs());
    }
    Ok(format!(
        "5 crossings, max dev {worst:.2e} (tol 1e-6); c_in=0.6 gives 6/7"
    ))
}

fn printed_output(form: TargetForm, a: f64, r: f64) -> ComplexMatrix {
    let b = (1.0 - a * a).sqrt();
    match form {
        TargetForm::Phi => {
            let n = 1.0 + 3.0 * a * a;
            let d = a * a / n;
            let off = 9.0 * r * r * a * b / (4.0 * n);
            ComplexMatrix::from_real_rows(&[
                [d, 0.0, 0.0, off],
                [0.0, d, 0.0, 0.0],
                [0.0, 0.0, d, 0.0],
                [off, 0.0, 0.0, 1.0 / n],
            ])
        }
        _ => {
            let off = 9.0 * r * r * a * b / 8.0;
            ComplexMatrix::from_real_rows(&[
                [0.0, 0.0, 0.0, 0.0],
                [0.0, a * a / 2.0, off, 0.0],
                [0.0, off, b * b / 2.0, 0.0],
                [0.0, 0.0, 0.0, 0.5],
            ])
        }
    }
}

fn output_matrices() -> Outcome {
    let (mut printed_dev, mut path_dev): (f64, f64) = (0.0, 0.0);
    for form in [TargetForm::Phi, TargetForm::Psi] {
        for k in 0..10 {
            let c = 0.05 + 0.1 * k as f64;
            let r = (2.0 / 3.0) * (k as f64 + 0.5) / 10.0;
            let target = TargetSpec::new(form, c).map_err(e)?;
            let ch = ChannelSpec::mems2(r).map_err(e)?;
            let effective = effective_channel_output(&target, &ch, &ch).map_err(e)?;
            let full = teleport_rigid(&target, &ch, &ch).map_err(e)?;
            let d1 = effective
                .matrix()
                .max_abs_diff(&printed_output(form, alpha_of(c), r));
            let d2 = effective.matrix().max_abs_diff(full.output_state.matrix());
            ensure!(
                d1 <= 1e-12,
                "{form:?} c_in={c} r={r}: printed matrix off by {d1}"
            );
            ensure!(
                d2 <= 1e-12,
                "{form:?} c_in={c} r={r}: tensor path off by {d2}"
            );
            printed_dev = printed_dev.max(d1);
            path_dev = path_dev.max(d2);
        }
    }
    Ok(format!(
        "2x10 points, printed {printed_dev:.2e}, tensor path {path_dev:.2e} (tol 1e-12)"
    ))
}

/// det of the partial transpose; for two qubits it is negative exactly when
/// the partial transpose has a negative eigenvalue.
fn pt_determinant_sign_negative(rho: &DensityOperator) -> bool {
    let m = rho.matrix();
    let mut pt = [[0.0f64; 4]; 4];
    let mut imag: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            let (ia, ib, ja, jb) = (i >> 1, i & 1, j >> 1, j & 1);
            let v = m[(ia * 2 + jb, ja * 2 + ib)];
            pt[i][j] = v.re;
            imag = imag.max(v.im.abs());
        }
    }
    assert!(imag < 1e-14, "real output expected");
    det4(pt) < 0.0
}

fn det4(mut a: [[f64; 4]; 4]) -> f64 {
    let mut det = 1.0;
    for col in 0..4 {
        let piv = (col..4)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap();
        if a[piv][col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            a.swap(piv, col);
            det = -det;
        }
        det *= a[col][col];
        for row in col + 1..4 {
            let f = a[row][col] / a[col][col];
            for k in col..4 {
                a[row][k] -= f * a[col][k];
            }
        }
    }
    det
}

fn no_go() -> Outcome {
    let mut phi_worst: f64 = 0.0;
    let mut psi_min = f64::INFINITY;
    for r in linspace(0.0, 2.0 / 3.0, 25) {
        let ch = ChannelSpec::mems2(r).map_err(e)?;
        for c in linspace(0.0, 1.0, 25) {
            let phi = teleport_rigid(&TargetSpec::phi(c).map_err(e)?, &ch, &ch).map_err(e)?;
            let n = negativity(&phi.output_state).map_err(e)?;
            ensure!(n <= 1e-10, "phi r={r} c_in={c}: negativity {n}");
            phi_worst = phi_worst.max(n);
            if r > 0.01 && c > 0.01 {
                let psi = teleport_rigid(&TargetSpec::psi(c).map_err(e)?, &ch, &ch).map_err(e)?;
                let n = negativity(&psi.output_state).map_err(e)?;
                ensure!(n > 0.0, "psi r={r} c_in={c}: negativity {n}");
                ensure!(
                    pt_determinant_sign_negative(&psi.output_state),
                    "psi r={r} c_in={c}: partial-transpose determinant not negative"
                );
                psi_min = psi_min.min(n);
            }
        }
    }
    Ok(format!(
        "phi max negativity {phi_worst:.2e} (tol 1e-10); psi min negativity {psi_min:.3e} > 0"
    ))
}

fn fidelity_at_unit_input() -> Outcome {
    let mut worst: f64 = 0.0;
    let cases: [(ChannelFamily, f64, f64, fn(f64) -> f64); 2] = [
        (ChannelFamily::Mems1, 2.0 / 3.0, 1.0, |r| r / (2.0 - r)),
        (ChannelFamily::Mems2, 0.0, 2.0 / 3.0, |r| {
            (9.0 * r * r + 4.0) / 16.0
        }),
    ];
    for (family, lo, hi, law) in cases {
        for r in linspace(lo, hi, 25) {
            let ch = ChannelSpec::new(family, r).map_err(e)?;
            let f = teleport_rigid(&TargetSpec::psi(1.0).map_err(e)?, &ch, &ch)
                .map_err(e)?
                .fidelity
                .ok_or("no fidelity for a pure target")?;
            ensure!(
                (f - law(r)).abs() <= 1e-10,
                "{family} r={r}: F={f}, law {}",
                law(r)
            );
            worst = worst.max((f - law(r)).abs());
        }
    }
    let opts = VerifyOptions {
        grid_points: 11,
        ..VerifyOptions::default()
    };
    let report = check_fidelity(&opts).map_err(e)?;
    let full = report
        .iter()
        .find(|o| o.name == "fidelity-law-full-range")
        .ok_or("verify has no full-range fidelity report")?;
    ensure!(
        full.status == Status::Warn,
        "full-range fidelity report is {:?}, expected WARN",
        full.status
    );
    ensure!(
        report.iter().all(|o| o.status != Status::Fail),
        "a fidelity check failed in verify"
    );
    Ok(format!(
        "max dev {worst:.2e} at c_in=1 (tol 1e-10); c_in<1 reported as WARN, dev {:.3}",
        full.max_deviation
    ))
}

fn locc_benchmark() -> Outcome {
    let target = TargetSpec::psi(1.0).map_err(e)?;
    let ideal = ideal_channel();
    let f_ideal = teleport_rigid(&target, &ideal, &ideal)
        .map_err(e)?
        .fidelity
        .ok_or("no fidelity")?;
    let edge = ChannelSpec::mems1(2.0 / 3.0).map_err(e)?;
    let f_edge = teleport_rigid(&target, &edge, &edge)
        .map_err(e)?
        .fidelity
        .ok_or("no fidelity")?;
    ensure!(
        (f_ideal - 1.0).abs() <= 1e-12 && f_ideal > 2.0 / 3.0,
        "ideal fidelity {f_ideal}"
    );
    ensure!((f_edge - 0.5).abs() <= 1e-12, "boundary fidelity {f_edge}");
    let edge2 = ChannelSpec::mems2(2.0 / 3.0).map_err(e)?;
    let f_edge2 = teleport_rigid(&target, &edge2, &edge2)
        .map_err(e)?
        .fidelity
        .ok_or("no fidelity")?;
    ensure!(
        (f_edge2 - 0.5).abs() <= 1e-12,
        "boundary fidelity from the mems2 side {f_edge2}"
    );
    Ok(format!(
        "ideal F = {f_ideal:.15}, boundary F = {f_edge:.15}"
    ))
}

fn random_channel(rng: &mut ChaCha20Rng) -> ChannelSpec {
    match rng.gen_range(0..3) {
        0 => ChannelSpec::mems1(rng.gen_range(2.0 / 3.0..=1.0)),
        1 => ChannelSpec::mems2(rng.gen_range(0.0..=2.0 / 3.0)),
        _ => ChannelSpec::werner(rng.gen_range(0.0..=1.0)),
    }
    .expect("in range")
}

fn outcome_completeness() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for k in 0..20 {
        let target = TargetSpec::explicit(random_density(1000 + k, 2).map_err(e)?).map_err(e)?;
        let (ch1, ch2) = (random_channel(&mut rng), random_channel(&mut rng));
        let probs = Protocol::new(&target, &ch1, &ch2)
            .map_err(e)?
            .probabilities()
            .map_err(e)?;
        let total: f64 = probs.iter().flatten().sum();
        ensure!(
            (total - 1.0).abs() <= 1e-12,
            "config {k}: probabilities sum to {total}"
        );
        worst = worst.max((total - 1.0).abs());
    }
    let ideal = ideal_channel();
    let mut lowest: f64 = 1.0;
    for target in [
        TargetSpec::phi(0.35),
        TargetSpec::psi(0.8),
        TargetSpec::phi(1.0),
        TargetSpec::psi(0.0),
    ] {
        let target = target.map_err(e)?;
        let protocol = Protocol::new(&target, &ideal, &ideal).map_err(e)?;
        for mu in 1..=4 {
            for nu in 1..=4 {
                let f = protocol
                    .run(mu, nu)
                    .map_err(e)?
                    .fidelity
                    .ok_or("no fidelity")?;
                ensure!(f >= 1.0 - 1e-12, "ideal outcome ({mu},{nu}): F={f}");
                lowest = lowest.min(f);
            }
        }
    }
    Ok(format!(
        "sum dev {worst:.2e} (tol 1e-12); ideal corrected min F = 1 - {:.1e}",
        1.0 - lowest
    ))
}

fn random_state_suite() -> Outcome {
    let ch = ChannelSpec::mems1(0.9).map_err(e)?;
    let mut mapped = 0usize;
    let (mut over, mut growth) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for seed in 0..3000u64 {
        let rho = random_density(seed, 2).map_err(e)?;
        let (c_in, signed) = concurrence(&rho).map_err(e)?;
        let s = linear_entropy(&rho).map_err(e)?;
        let bound = mems_boundary_concurrence(s);
        ensure!(
            signed <= bound + 1e-9,
            "seed {seed}: signed C {signed} above boundary {bound} at S={s}"
        );
        over = over.max(signed - bound);
        let out = teleport_rigid(&TargetSpec::explicit(rho).map_err(e)?, &ch, &ch).map_err(e)?;
        ensure!(
            out.c_out.is_finite() && out.signed_c_out.is_finite(),
            "seed {seed}: non-finite output"
        );
        ensure!(
            out.c_out <= c_in + 1e-10,
            "seed {seed}: C_out {} > C_in {c_in}",
            out.c_out
        );
        growth = growth.max(out.c_out - c_in);
        mapped += 1;
    }
    ensure!(mapped == 3000, "mapped {mapped} points");
    Ok(format!(
        "3000/3000 mapped; max over boundary {over:.3e} (slack 1e-9); max C_out - C_in {growth:.3e} (slack 1e-10)"
    ))
}

fn run_cli(args: &[&str], out: &Path) -> Result<(Vec<u8>, Vec<u8>), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_mems-teleport"))
        .args(args)
        .arg("--out")
        .arg(out)
        .status()
        .map_err(e)?;
    ensure!(status.success(), "{args:?} exited with {status}");
    let data = std::fs::read(out).map_err(e)?;
    let mut meta = out.as_os_str().to_owned();
    meta.push(".meta.json");
    let meta = std::fs::read(meta).map_err(e)?;
    Ok((data, meta))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(e)?;
    let configs: [&[&str]; 4] = [
        &[
            "sweep",
            "--target",
            "phi",
            "--r-steps",
            "12",
            "--cin-steps",
            "9",
        ],
        &[
            "sweep",
            "--family2",
            "mems2",
            "--r-steps",
            "6",
            "--r2-steps",
            "5",
            "--cin-steps",
            "6",
            "--format",
            "json",
            "--average",
        ],
        &["random-map", "--seed", "7", "--samples", "400"],
        &[
            "random-map",
            "--seed",
            "7",
            "--samples",
            "50",
            "--format",
            "json",
        ],
    ];
    let mut bytes = 0;
    for (k, args) in configs.iter().enumerate() {
        let a = run_cli(args, &dir.path().join(format!("a{k}")))?;
        let b = run_cli(args, &dir.path().join(format!("b{k}")))?;
        ensure!(a.0 == b.0, "{args:?}: data files differ");
        ensure!(a.1 == b.1, "{args:?}: sidecars differ");
        ensure!(!a.0.is_empty(), "{args:?}: empty output");
        bytes += a.0.len();
    }
    Ok(format!(
        "4 configurations rerun byte-identical ({bytes} bytes compared)"
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("mems validity", mems_validity),
        ("c_out law, mems1 channels", || {
            c_out_law(ChannelFamily::Mems1, 2.0 / 3.0, 1.0, |r, c| {
                r * c / (2.0 - r)
            })
        }),
        ("c_out law, mems2 channels", || {
            c_out_law(ChannelFamily::Mems2, 0.0, 2.0 / 3.0, |r, c| {
                9.0 * r * r * c / 8.0
            })
        }),
        ("separability threshold", threshold),
        ("mems2 output matrices", output_matrices),
        ("mems2 phi no-go / psi entangled", no_go),
        ("fidelity law at c_in = 1", fidelity_at_unit_input),
        ("LOCC benchmark context", locc_benchmark),
        ("general-outcome completeness", outcome_completeness),
        ("random-state property suite", random_state_suite),
        ("CLI determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} [{secs:.2}s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why} [{secs:.2}s]", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
