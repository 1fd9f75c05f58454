//! Acceptance criteria 1–9, one PASS/FAIL line each.
//!
//! Runs as a plain binary (`harness = false`). Pass criterion numbers as
//! arguments to run a subset, e.g. `cargo test --test acceptance -- 3 5`.
//!
//! Criterion 8 lists M = 12 for N = 2048, but the formula it quotes gives
//! ⌈log₂ 4097⌉ = 13. The check is kept as written and reported as FAIL; it
//! is listed in `KNOWN_FAILURES` so the suite still exits cleanly.

use std::fs;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use schrodsim_cli::{cmd_estimate, cmd_respond, cmd_sweep, RunConfig};
use schrodsim_core::circuit::{compile_propagator, PropagatorMethod};
use schrodsim_core::lindblad::{
    amplitude_damping_model, build_liouvillian, closed_form_amplitude_damping, evolve_exact,
};
use schrodsim_core::liouville::vectorize;
use schrodsim_core::noise::NoiseModel;
use schrodsim_core::response::{dominant_frequency, error_metric, uniform_times, ResponseProblem};
use schrodsim_core::schrod::{decompose, dilated_hamiltonian};
use schrodsim_core::sweeps::{
    fit_loglinear, is_non_increasing, pre_floor_window, run_sweep, Axis, GridParams, Reference,
    SweepMethod, SweepRow, SweepSpec, XTransform,
};
use schrodsim_core::testing::random_density_matrix;

const KNOWN_FAILURES: &[u8] = &[8];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn max_entry_diff(got: impl Fn(usize, usize) -> C64, want: &[[C64; 4]; 4]) -> f64 {
    let mut worst: f64 = 0.0;
    for (r, row) in want.iter().enumerate() {
        for (col, w) in row.iter().enumerate() {
            worst = worst.max((got(r, col) - w).norm());
        }
    }
    worst
}

// The matrices below are written out entry by entry in the
// (ρ₁₁, ρ₁₀, ρ₀₁, ρ₀₀) ordering, independently of the library code.
fn criterion_1() -> Outcome {
    let mut worst: f64 = 0.0;
    for (w, g) in [(2.0, 0.2), (1.0, 0.5), (0.3, 1.7), (5.0, 0.0)] {
        let l = build_liouvillian(&amplitude_damping_model(w, g).unwrap());
        let pair = decompose(&l);
        let z = c(0.0, 0.0);
        let l_want = [
            [c(-g, 0.0), z, z, z],
            [z, c(-g / 2.0, -w), z, z],
            [z, z, c(-g / 2.0, w), z],
            [c(g, 0.0), z, z, z],
        ];
        let h1_want = [
            [c(-g, 0.0), z, z, c(g / 2.0, 0.0)],
            [z, c(-g / 2.0, 0.0), z, z],
            [z, z, c(-g / 2.0, 0.0), z],
            [c(g / 2.0, 0.0), z, z, z],
        ];
        let h2_want = [
            [z, z, z, c(0.0, -g / 2.0)],
            [z, c(w, 0.0), z, z],
            [z, z, c(-w, 0.0), z],
            [c(0.0, g / 2.0), z, z, z],
        ];
        let m = l.matrix();
        worst = worst.max(max_entry_diff(|r, k| m[(r, k)], &l_want));
        worst = worst.max(max_entry_diff(|r, k| pair.h1()[(r, k)], &h1_want));
        worst = worst.max(max_entry_diff(|r, k| pair.h2()[(r, k)], &h2_want));
        for eta in [-7.5, -1.0, 0.0, 0.25, 3.0, 120.0] {
            let hs = [
                [c(-eta * g, 0.0), z, z, c(g / 2.0 * eta, -g / 2.0)],
                [z, c(-eta * g / 2.0 + w, 0.0), z, z],
                [z, z, c(-eta * g / 2.0 - w, 0.0), z],
                [c(g / 2.0 * eta, g / 2.0), z, z, z],
            ];
            let dh = dilated_hamiltonian(&pair, eta).matrix;
            worst = worst.max(max_entry_diff(|r, k| dh[(r, k)], &hs));
        }
    }
    outcome(worst <= 1e-12, format!("max entry deviation {worst:.2e} (tol 1e-12)"))
}

fn damped_sine(w: f64, g: f64, t: f64) -> f64 {
    -2.0 * (-g * t / 2.0).exp() * (w * t).sin()
}

fn criterion_2() -> Outcome {
    let (w, g) = (2.0, 0.2);
    let l = build_liouvillian(&amplitude_damping_model(w, g).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_state: f64 = 0.0;
    for _ in 0..100 {
        let rho = random_density_matrix(2, &mut rng);
        let t = rng.random_range(0.0..=10.0);
        let cf = closed_form_amplitude_damping(&rho, t, w, g).unwrap();
        let dense = evolve_exact(&l, &vectorize(&rho), t).unwrap();
        let diff = (vectorize(&cf).vector() - dense.vector()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        worst_state = worst_state.max(diff);
    }

    let p = ResponseProblem::amplitude_damping(w, g).unwrap();
    let times = uniform_times(10.0, 200);
    let chi = p.dense(&times).unwrap();
    let worst_chi = times
        .iter()
        .zip(chi.values())
        .map(|(t, z)| (z - c(damped_sine(w, g, *t), 0.0)).norm())
        .fold(0.0, f64::max);
    outcome(
        worst_state <= 1e-9 && worst_chi <= 1e-9,
        format!("state {worst_state:.2e}, response {worst_chi:.2e} (tol 1e-9)"),
    )
}

fn criterion_3() -> Outcome {
    let cfg = RunConfig::default();
    let p = cfg.problem().unwrap();
    let times = cfg.times();
    let grid = cfg.eta_grid().unwrap();
    let err = error_metric(&p.schrod(&times, &grid).unwrap(), &p.dense(&times).unwrap()).unwrap();
    outcome(
        err.max_abs <= 1e-3,
        format!(
            "max |χ_schrod − χ_dense| = {:.3e} at L={}, N={}, ξ*={} over {} points (tol 1e-3)",
            err.max_abs,
            grid.half_width,
            grid.points,
            grid.recovery_offset,
            times.len()
        ),
    )
}

fn criterion_4() -> Outcome {
    let cfg = RunConfig::default();
    let p = cfg.problem().unwrap();
    let times = cfg.times();
    let grid = cfg.eta_grid().unwrap();
    let schrod = p.schrod(&times, &grid).unwrap();
    let biases = p.circuit_biases(&times, &grid, None).unwrap();
    let exact = biases.exact_series().unwrap();
    let identity = error_metric(&exact, &schrod).unwrap().max_abs;

    let shots = 100_000;
    let se = biases.standard_errors(shots);
    let mut worst_z: f64 = 0.0;
    for seed in 1..=5u64 {
        let sampled = biases.sampled_series(shots, seed).unwrap();
        for k in 0..times.len() {
            let d = sampled.values()[k] - exact.values()[k];
            worst_z = worst_z.max(d.re.abs() / se.re[k]).max(d.im.abs() / se.im[k]);
        }
    }
    outcome(
        identity <= 1e-10 && worst_z <= 4.0,
        format!("exact-mode deviation {identity:.2e} (tol 1e-10); worst |z| over 5 seeds × {} points = {worst_z:.2} (tol 4)", times.len()),
    )
}

fn convergence_spec(axis: Axis, values: Vec<f64>, grid: GridParams) -> SweepSpec {
    SweepSpec {
        axis,
        values,
        method: SweepMethod::Schrod,
        grid,
        times: uniform_times(10.0, 201),
        reference: Reference::Dense,
        seed: 0,
        shots: 0,
        repeats: 1,
        noise: NoiseModel::noiseless(),
    }
}

fn describe(rows: &[SweepRow]) -> String {
    rows.iter().map(|r| format!("{}:{:.2e}", r.value, r.max_abs)).collect::<Vec<_>>().join(" ")
}

fn criterion_5() -> Outcome {
    let p = ResponseProblem::amplitude_damping(2.0, 0.2).unwrap();
    let n_rows = run_sweep(
        &p,
        &convergence_spec(
            Axis::EtaPoints,
            vec![2048.0, 4096.0, 8192.0, 16384.0, 32768.0],
            GridParams { eta_half_width: 4000.0, eta_points: 0, recovery_offset: 1.0 },
        ),
    )
    .unwrap();
    let l_rows = run_sweep(
        &p,
        &convergence_spec(
            Axis::EtaHalfWidth,
            vec![250.0, 500.0, 1000.0, 2000.0, 4000.0],
            GridParams { eta_half_width: 0.0, eta_points: 32768, recovery_offset: 1.0 },
        ),
    )
    .unwrap();
    let mut pass = true;
    let mut detail = Vec::new();
    for (name, rows) in [("N", &n_rows), ("L", &l_rows)] {
        let monotone = is_non_increasing(rows, 0.1);
        let window = pre_floor_window(rows);
        let fit = fit_loglinear(&window, XTransform::Log);
        let ok = monotone
            && rows.iter().all(|r| r.max_abs > 0.0)
            && matches!(fit, Ok(f) if f.r2 >= 0.9 && f.slope < 0.0);
        pass &= ok;
        let fit_text = match fit {
            Ok(f) => format!("slope {:.2}, r² {:.3} on {} rows", f.slope, f.r2, f.points),
            Err(e) => format!("fit failed: {e}"),
        };
        detail.push(format!("{name}-sweep [{}] non-increasing={monotone}, {fit_text}", describe(rows)));
    }
    outcome(pass, detail.join("; "))
}

fn criterion_6() -> Outcome {
    let pair = decompose(&build_liouvillian(&amplitude_damping_model(2.0, 0.2).unwrap()));
    let exact = compile_propagator(&pair, 1.0, 1.0, PropagatorMethod::Exact).unwrap();
    let err = |order: u8, steps: u32| {
        let u = compile_propagator(&pair, 1.0, 1.0, PropagatorMethod::Trotter { order, steps }).unwrap();
        (u - &exact).norm()
    };
    let r1 = err(1, 16) / err(1, 32);
    let r2 = err(2, 16) / err(2, 32);
    outcome(
        (r1 - 2.0).abs() <= 0.4 && (r2 - 4.0).abs() <= 0.8,
        format!("order-1 ratio {r1:.3} (2±0.4), order-2 ratio {r2:.3} (4±0.8)"),
    )
}

fn criterion_7() -> Outcome {
    let p = ResponseProblem::amplitude_damping(2.0, 0.2).unwrap();
    let nm = NoiseModel::default();
    let grid = RunConfig::default().eta_grid().unwrap();

    let times = uniform_times(10.0, 101);
    let ideal = p.circuit_biases(&times, &grid, None).unwrap().exact_series().unwrap();
    let noisy = p.circuit_biases(&times, &grid, Some(&nm)).unwrap().exact_series().unwrap();
    let attenuated = noisy.max_abs() < ideal.max_abs();
    let fi = dominant_frequency(&ideal).unwrap();
    let fn_ = dominant_frequency(&noisy).unwrap();
    let same_bin = (fi.frequency - fn_.frequency).abs() <= fi.resolution + 1e-12;

    let mut spec = SweepSpec {
        axis: Axis::EtaPoints,
        values: vec![2048.0, 4096.0, 8192.0, 16384.0],
        method: SweepMethod::Schrod,
        grid: GridParams { eta_half_width: 4000.0, eta_points: 0, recovery_offset: 1.0 },
        times: uniform_times(10.0, 41),
        reference: Reference::Dense,
        seed: 0,
        shots: 0,
        repeats: 1,
        noise: nm,
    };
    let clean = run_sweep(&p, &spec).unwrap();
    spec.method = SweepMethod::NoisyCircuit;
    let dirty = run_sweep(&p, &spec).unwrap();
    // crossover: first N where the noisy error exceeds twice the noiseless one
    let cross = clean.iter().zip(&dirty).position(|(a, b)| b.max_abs > 2.0 * a.max_abs);
    let last = clean.len() - 1;
    let floor_ratio = dirty[last].max_abs / clean[last].max_abs;
    let rising = cross.is_some_and(|k| dirty[k..].windows(2).all(|w| w[1].max_abs >= w[0].max_abs));
    let pass = attenuated && same_bin && floor_ratio >= 5.0 && rising;
    outcome(
        pass,
        format!(
            "(a) max|χ| noisy {:.3} < ideal {:.3}: {attenuated}; (b) ω noisy {:.3} vs ideal {:.3} (bin {:.3}): {same_bin}; \
             (c) noiseless [{}] noisy [{}], crossover N={}, floor ratio {:.1e}, non-decreasing={rising}",
            noisy.max_abs(),
            ideal.max_abs(),
            fn_.frequency,
            fi.frequency,
            fi.resolution,
            describe(&clean),
            describe(&dirty),
            cross.map_or("none".into(), |k| clean[k].value.to_string()),
            floor_ratio,
        ),
    )
}

fn criterion_8() -> Outcome {
    let mut cfg = RunConfig::default();
    let mut lines = Vec::new();
    let mut pass = true;
    for (n, listed) in [(1usize, 2u32), (7, 4), (2048, 12)] {
        cfg.grid.eta_points = n;
        let m = cmd_estimate(&cfg).unwrap().ancilla_qubits;
        let formula = ((2 * n + 1) as f64).log2().ceil() as u32;
        let ok = m == formula && m == listed;
        pass &= ok;
        lines.push(format!("N={n}: M={m}, ⌈log₂(2N+1)⌉={formula}, listed {listed}"));
    }
    outcome(pass, lines.join("; "))
}

fn criterion_9() -> Outcome {
    let base = tempfile::tempdir().unwrap();
    let toml = base.path().join("run.toml");
    fs::write(
        &toml,
        "[grid]\neta_half_width = 50.0\neta_points = 128\n\n[time]\nnum_points = 41\n\n\
         [execution]\nmethod = \"circuit\"\nshots = 1000\nseed = 7\n\n\
         [sweep]\naxis = \"eta_points\"\nvalues = [32.0, 64.0, 128.0]\n",
    )
    .unwrap();
    let mut cfg = RunConfig::load(&toml).unwrap();
    let first = base.path().join("first");
    cfg.output.directory = first.display().to_string();
    let serial = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    serial.install(|| cmd_respond(&cfg, Some(&toml))).unwrap();
    serial.install(|| cmd_sweep(&cfg, Some(&toml))).unwrap();

    let manifest = first.join("manifest.json");
    let mut again = RunConfig::load(&manifest).unwrap();
    let second = base.path().join("second");
    again.output.directory = second.display().to_string();
    let parallel = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    parallel.install(|| cmd_respond(&again, Some(&manifest))).unwrap();
    parallel.install(|| cmd_sweep(&again, Some(&manifest))).unwrap();

    let mut checked = Vec::new();
    let mut pass = true;
    for name in ["chi_dense.csv", "chi_circuit.csv"] {
        let same = fs::read(first.join(name)).unwrap() == fs::read(second.join(name)).unwrap();
        pass &= same;
        checked.push(format!("{name} identical={same}"));
    }
    let sweep_csv = |dir: &std::path::Path| {
        let path = fs::read_dir(dir)
            .unwrap()
            .map(|e| e.unwrap().path())
            .find(|p| p.extension().is_some_and(|e| e == "csv") && p.to_string_lossy().contains("sweep_"))
            .unwrap();
        // wall_time_s (column 5) is a measurement, not a result
        fs::read_to_string(path)
            .unwrap()
            .lines()
            .map(|l| {
                let mut f: Vec<&str> = l.split(',').collect();
                f.remove(4);
                f.join(",")
            })
            .collect::<Vec<_>>()
    };
    let same = sweep_csv(&first) == sweep_csv(&second);
    pass &= same;
    checked.push(format!("sweep CSV identical apart from wall_time_s={same}"));
    outcome(pass, checked.join("; "))
}

fn main() -> ExitCode {
    let criteria: [(u8, &str, fn() -> Outcome, Duration); 9] = [
        (1, "golden matrices", criterion_1, Duration::from_secs(1)),
        (2, "oracle cross-validation", criterion_2, Duration::from_secs(5)),
        (3, "Schrödingerization correctness", criterion_3, Duration::from_secs(60)),
        (4, "circuit-path identity", criterion_4, Duration::from_secs(600)),
        (5, "convergence shape", criterion_5, Duration::from_secs(600)),
        (6, "Trotter orders", criterion_6, Duration::from_secs(30)),
        (7, "noisy phenomenology", criterion_7, Duration::from_secs(900)),
        (8, "resource formula", criterion_8, Duration::from_secs(1)),
        (9, "reproducibility", criterion_9, Duration::from_secs(600)),
    ];
    let selected: Vec<u8> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut unexpected = 0;
    for (id, name, run, budget) in criteria {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let out = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= budget;
        let pass = out.pass && in_time;
        let status = if pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {id} [{status}] {name}: {} ({:.2}s of {}s budget)",
            out.detail,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
        if !pass {
            if KNOWN_FAILURES.contains(&id) {
                println!("criterion {id} is a known failure; see the module documentation");
            } else {
                unexpected += 1;
            }
        }
    }
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
