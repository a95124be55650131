//! Acceptance suite. Runs every criterion in order on one thread and prints
//! one PASS/FAIL line each; exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::fmt::Display;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use urbanfno::eval::{accumulated_error, bench, one_step_eval, rollout, Surrogate};
use urbanfno::field::{make_windows, split_dataset, BuildingMask, DatasetManifest, Grid3, SampleWindow, ScalarField};
use urbanfno::fno::{forward, irfft3, rfft3, FnoConfig, FnoParameters, Tensor};
use urbanfno::resample::{downsample, fit_spline};
use urbanfno::sim::{
    run_simulation, BoundaryMode, Building, GroundCondition, InitialCondition, SceneSpec, Simulation, SolverConfig,
    WindDirection,
};
use urbanfno::train::{evaluate_loss, gradient_check, layerwise_relative_loss, train, TrainConfig, TrainingData};

type Outcome = Result<String, String>;

fn err(e: impl Display) -> String {
    e.to_string()
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn random(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

// 1

fn windowing() -> Outcome {
    let w = make_windows(1200, 6, 2).map_err(err)?;
    let (train, test) = split_dataset(&w, 500, 0).map_err(err)?;
    let mut starts: Vec<usize> = train.iter().chain(&test).map(|s| s.start).collect();
    starts.sort_unstable();
    let all: Vec<usize> = w.iter().map(|s| s.start).collect();
    check(
        w.len() == 598 && train.len() == 500 && test.len() == 98 && starts == all,
        format!("{} samples, split {}/{}", w.len(), train.len(), test.len()),
    )
}

// 2

/// `[X, Y, Z/2+1]` half spectrum by direct summation, x fastest.
fn naive_rfft3(x: &[f64], n: [usize; 3]) -> Vec<Complex64> {
    let [nx, ny, nz] = n;
    let hz = nz / 2 + 1;
    let mut out = vec![Complex64::new(0.0, 0.0); nx * ny * hz];
    for kx in 0..nx {
        for ky in 0..ny {
            for kz in 0..hz {
                let mut s = Complex64::new(0.0, 0.0);
                for i in 0..nx {
                    for j in 0..ny {
                        for k in 0..nz {
                            let th = -2.0
                                * PI
                                * ((kx * i) as f64 / nx as f64 + (ky * j) as f64 / ny as f64 + (kz * k) as f64 / nz as f64);
                            s += x[i + nx * (j + ny * k)] * Complex64::new(th.cos(), th.sin());
                        }
                    }
                }
                out[kx + nx * (ky + ny * kz)] = s;
            }
        }
    }
    out
}

fn fft_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut dft, mut trip, mut parseval) = (0.0f64, 0.0f64, 0.0f64);
    let mut grids = 0;
    for nx in 2..=8 {
        for ny in 2..=8 {
            for nz in 2..=8 {
                let n = [nx, ny, nz];
                let len = nx * ny * nz;
                let data = random(2 * len, &mut rng);
                let t = Tensor::new(vec![2, nx, ny, nz], data.clone()).map_err(err)?;
                let s = rfft3(&t).map_err(err)?;
                let hz = nz / 2 + 1;
                let band = nx * ny * hz;
                for c in 0..2 {
                    let x = &data[c * len..(c + 1) * len];
                    let want = naive_rfft3(x, n);
                    let got = s.channel(c);
                    for (g, w) in got.iter().zip(&want) {
                        dft = dft.max((g - w).norm());
                    }
                    let energy: f64 = x.iter().map(|v| v * v).sum();
                    let gspec: f64 = (0..band)
                        .map(|q| {
                            let kz = q / (nx * ny);
                            let w = if kz == 0 || 2 * kz == nz { 1.0 } else { 2.0 };
                            w * got[q].norm_sqr()
                        })
                        .sum::<f64>()
                        / len as f64;
                    parseval = parseval.max((gspec - energy).abs() / energy);
                }
                let back = irfft3(&s, nz).map_err(err)?;
                trip = trip.max(back.max_abs_diff(&t));
                grids += 1;
            }
        }
    }
    check(
        dft <= 1e-9 && trip <= 1e-10 && parseval <= 1e-8,
        format!("{grids} grids: dft err {dft:.2e}, round trip {trip:.2e}, parseval {parseval:.2e}"),
    )
}

// 3

fn gradient_gate() -> Outcome {
    let cfg = FnoConfig { width: 2, modes: 2, layers: 2, ..FnoConfig::default() };
    let params = FnoParameters::init(&cfg, 5).map_err(err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let input = Tensor::new(vec![cfg.in_channels, 4, 4, 4], random(cfg.in_channels * 64, &mut rng)).map_err(err)?;
    let target = Tensor::new(vec![1, 4, 4, 4], random(64, &mut rng)).map_err(err)?;
    let (worst, group) = gradient_check(&input, &target, &params, None).map_err(err)?;
    check(
        worst <= 1e-4,
        format!("{} parameters, worst relative error {worst:.2e} in {group}", params.len()),
    )
}

// 4

fn loss_identities() -> Outcome {
    let g = Grid3::unit(4, 3, 5).map_err(err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let v: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(0.1..3.0)).collect();
    let t = |d: Vec<f64>, n: [usize; 3]| Tensor::new(vec![1, n[0], n[1], n[2]], d).unwrap();
    let vt = t(v.clone(), [4, 3, 5]);
    let same = layerwise_relative_loss(&vt, &vt).map_err(err)?;
    let double = layerwise_relative_loss(&t(v.iter().map(|x| 2.0 * x).collect(), [4, 3, 5]), &vt).map_err(err)?;
    let mut u = vec![1.0; 8];
    u[0] = 0.0;
    let hand = layerwise_relative_loss(&t(u, [2, 2, 2]), &t(vec![1.0; 8], [2, 2, 2])).map_err(err)?;
    check(
        same == 0.0 && double == 1.0 && (hand - 0.25).abs() <= 1e-15,
        format!("loss(v,v) = {same}, loss(2v,v) = {double}, 2x2x2 case = {hand}"),
    )
}

// 5

fn spline_fidelity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut xs = vec![0.0];
    for _ in 0..19 {
        let last = *xs.last().unwrap();
        xs.push(last + rng.gen_range(0.2..1.5));
    }
    let ys = random(20, &mut rng);
    let s = fit_spline(&xs, &ys).map_err(err)?;
    let mut knot = 0.0f64;
    for (x, y) in xs.iter().zip(&ys) {
        knot = knot.max((s.eval(*x).map_err(err)? - y).abs());
    }

    let src = Grid3::new([16, 12, 10], [1.0, 2.0, 3.0], [0.0, -4.0, 0.0]).map_err(err)?;
    let lin = |p: [f64; 3]| 0.5 + 1.5 * p[0] - 0.25 * p[1] + 2.0 * p[2];
    let f = ScalarField::from_fn(src, |i, j, k| lin(src.center(i, j, k))).map_err(err)?;
    let dst = Grid3::new([8, 6, 5], [2.0, 4.0, 6.0], src.origin).map_err(err)?;
    let out = downsample(&f, &dst, None).map_err(err)?;
    let mut linear = 0.0f64;
    for n in 0..dst.len() {
        let (i, j, k) = dst.ijk(n);
        linear = linear.max((out.values()[n] - lin(dst.center(i, j, k))).abs());
    }

    let sin_err = |n_src: usize| -> Result<f64, String> {
        let n_dst = 16;
        let g = Grid3::new([n_src, 2, 2], [1.0 / n_src as f64, 1.0, 1.0], [0.0; 3]).map_err(err)?;
        let d = Grid3::new([n_dst, 2, 2], [1.0 / n_dst as f64, 1.0, 1.0], [0.0; 3]).map_err(err)?;
        let f = ScalarField::from_fn(g, |i, j, k| (2.0 * PI * g.center(i, j, k)[0]).sin()).map_err(err)?;
        let o = downsample(&f, &d, None).map_err(err)?;
        Ok((0..n_dst).map(|i| (o.get(i, 0, 0) - (2.0 * PI * d.center(i, 0, 0)[0]).sin()).abs()).fold(0.0, f64::max))
    };
    let (coarse, fine) = (sin_err(64)?, sin_err(128)?);
    let ratio = coarse / fine;
    check(
        knot <= 1e-12 && linear <= 1e-12 && ratio >= 8.0,
        format!("knot err {knot:.1e}, linear err {linear:.1e}, sin error ratio {ratio:.1} ({coarse:.2e} -> {fine:.2e})"),
    )
}

// 6

fn desk_scene() -> SceneSpec {
    SceneSpec {
        grid: Grid3::new([32, 32, 16], [4.0; 3], [0.0; 3]).unwrap(),
        boxes: vec![
            Building::block([36.0, 52.0], [40.0, 64.0], 24.0),
            Building::block([72.0, 88.0], [20.0, 36.0], 16.0),
            Building::block([64.0, 80.0], [80.0, 100.0], 28.0),
        ],
    }
}

fn solver_sanity() -> Outcome {
    let scene = desk_scene();
    let mut sim = Simulation::new(&scene, &SolverConfig::default()).map_err(err)?;
    let mut div = 0.0f64;
    for _ in 0..200 {
        let rep = sim.step().map_err(err)?;
        div = div.max(rep.projection.residual).max(sim.divergence_max());
    }

    let cfg = SolverConfig { alpha: 0.0, ground: GroundCondition::FreeSlip, ..Default::default() };
    let empty = SceneSpec { grid: scene.grid, boxes: vec![] };
    let mut chan = Simulation::new(&empty, &cfg).map_err(err)?;
    let mut drift = 0.0f64;
    for _ in 0..10 {
        let before = chan.state().clone();
        chan.step().map_err(err)?;
        let s = chan.state();
        for n in 0..s.u.len() {
            drift = drift.max((s.u[n] - before.u[n]).abs()).max((s.v[n] - before.v[n]).abs()).max((s.w[n] - before.w[n]).abs());
        }
    }

    let boxed = SolverConfig { boundary: BoundaryMode::ClosedBox, initial: InitialCondition::Rest, ..Default::default() };
    let mut closed = Simulation::new(&scene, &boxed).map_err(err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    {
        let st = closed.state_mut();
        for n in 0..st.u.len() {
            if !st.mask.is_solid(n) {
                st.u[n] = rng.gen_range(-3.0..3.0);
                st.v[n] = rng.gen_range(-3.0..3.0);
                st.w[n] = rng.gen_range(-3.0..3.0);
            }
        }
    }
    let mut ke = closed.state().kinetic_energy();
    let mut rises = 0;
    for _ in 0..20 {
        let rep = closed.step().map_err(err)?;
        if rep.kinetic_energy > ke * (1.0 + 1e-12) {
            rises += 1;
        }
        ke = rep.kinetic_energy;
    }
    check(
        div <= 1e-4 && drift <= 1e-8 && rises == 0,
        format!("max divergence {div:.2e} over 200 steps, channel drift {drift:.1e}/step, closed-box energy rises {rises}"),
    )
}

// 7 to 11 share one trained model

struct Desk {
    scene: SceneSpec,
    mask: BuildingMask,
    dt: f64,
    fields: Vec<ScalarField>,
    manifest: DatasetManifest,
    model: Surrogate,
}

impl Desk {
    fn test_windows(&self) -> Vec<SampleWindow> {
        self.manifest.test_windows().collect()
    }
}

fn generate(scene: &SceneSpec, dir: WindDirection) -> Result<(Vec<ScalarField>, BuildingMask, f64), String> {
    let cfg = SolverConfig { direction: dir, ..Default::default() };
    let out = run_simulation(scene, &cfg, 400, 1).map_err(err)?;
    let dt = out.sequence.dt();
    Ok((out.sequence.into_fields(), out.final_state.mask, dt))
}

fn desk_training(slot: &mut Option<Desk>) -> Outcome {
    let scene = desk_scene();
    let (fields, mask, dt) = generate(&scene, WindDirection::West)?;
    let names = (0..fields.len()).map(|t| format!("step_{t:05}.ufld")).collect();
    let manifest = DatasetManifest::build(names, &fields, dt, 6, 2, 160, 0, Some(&mask)).map_err(err)?;
    let (nw, ntr, nte) = (manifest.windows.len(), manifest.train.len(), manifest.test.len());
    let data = TrainingData::from_memory(manifest.clone(), fields.clone()).map_err(err)?;
    let tcfg = TrainConfig { epochs: 50, ..TrainConfig::default() };
    let fcfg = FnoConfig::default();
    let out = train(&data, &tcfg, &fcfg).map_err(err)?;
    let test: Vec<SampleWindow> = manifest.test_windows().collect();
    let held_out = evaluate_loss(&data, &out.last.params, &test).map_err(err)?;
    let first = out.history.first().map_or(f64::NAN, |r| r.test_loss);
    let model = Surrogate::from_checkpoint(&out.last);
    *slot = Some(Desk { scene, mask, dt, fields, manifest, model });
    check(
        nw == 198 && ntr == 160 && nte == 38 && held_out <= 0.05,
        format!(
            "{nw} windows ({ntr}/{nte}), {} epochs, held-out loss {:.2}% (epoch 1: {:.2}%)",
            out.history.len(),
            100.0 * held_out,
            100.0 * first
        ),
    )
}

fn need(desk: &Option<Desk>) -> Result<&Desk, String> {
    desk.as_ref().ok_or_else(|| "no trained desk-scale model (criterion 7 errored)".to_string())
}

fn generalization(desk: &Option<Desk>) -> Outcome {
    let d = need(desk)?;
    let windows = d.test_windows();
    let own = one_step_eval(&d.model, &d.fields, &windows, None).map_err(err)?.mean_loss;
    let mut other = Vec::new();
    for dir in [WindDirection::North, WindDirection::East, WindDirection::South] {
        let (fields, _, _) = generate(&d.scene, dir)?;
        other.push((dir, one_step_eval(&d.model, &fields, &windows, None).map_err(err)?.mean_loss));
    }
    let line = other.iter().map(|(dir, l)| format!("{} {:.2}%", dir.degrees(), 100.0 * l)).collect::<Vec<_>>().join(", ");
    check(
        other.iter().all(|(_, l)| own < *l),
        format!("trained 0 deg {:.2}%; {line}", 100.0 * own),
    )
}

fn rollout_growth(desk: &Option<Desk>) -> Outcome {
    let d = need(desk)?;
    let h = d.model.history_len();
    let start = 200;
    let seq = rollout(&d.model, &d.fields[start..start + h], 50, Some(&d.mask), d.dt).map_err(err)?;
    let truth = &d.fields[start + h..start + h + 50];
    let errs = accumulated_error(seq.fields(), truth).map_err(err)?;
    let mean = |r: std::ops::Range<usize>| errs[r.clone()].iter().map(|e| e.mean_abs_error).sum::<f64>() / r.len() as f64;
    let (first, last) = (errs[0].mean_abs_error, errs[49].mean_abs_error);
    let (early, late) = (mean(0..10), mean(40..50));
    check(
        last > first && late > early,
        format!("MAE step 1 {first:.4}, step 50 {last:.4}; mean 1-10 {early:.4}, mean 41-50 {late:.4} m/s"),
    )
}

fn speedup(desk: &Option<Desk>) -> Outcome {
    let d = need(desk)?;
    let b = bench(&d.model, &d.scene, &SolverConfig::default(), 10, 10).map_err(err)?;
    check(
        b.speedup >= 5.0,
        format!(
            "solver {:.1} ms, surrogate {:.1} ms, speedup {:.2}x on {} thread(s)",
            1e3 * b.solver_median,
            1e3 * b.surrogate_median,
            b.speedup,
            b.threads
        ),
    )
}

/// Sum of cosines with wavenumbers up to `band` per axis, sampled at the
/// periodic nodes `i / n` of the unit cube.
fn band_limited(n: [usize; 3], channels: usize, band: i64, seed: u64) -> Tensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let terms: Vec<(usize, [i64; 3], f64, f64)> = (0..12 * channels)
        .map(|_| {
            (
                rng.gen_range(0..channels),
                [rng.gen_range(-band..=band), rng.gen_range(-band..=band), rng.gen_range(0..=band)],
                rng.gen_range(0.2..0.6),
                rng.gen_range(0.0..2.0 * PI),
            )
        })
        .collect();
    let len = n[0] * n[1] * n[2];
    let mut data = vec![0.0; channels * len];
    for (c, k, a, phase) in terms {
        for z in 0..n[2] {
            for y in 0..n[1] {
                for x in 0..n[0] {
                    let th = 2.0
                        * PI
                        * (k[0] as f64 * x as f64 / n[0] as f64
                            + k[1] as f64 * y as f64 / n[1] as f64
                            + k[2] as f64 * z as f64 / n[2] as f64);
                    data[c * len + x + n[0] * (y + n[1] * z)] += a * (th + phase).cos();
                }
            }
        }
    }
    Tensor::new(vec![channels, n[0], n[1], n[2]], data).unwrap()
}

fn resolution_consistency(desk: &Option<Desk>) -> Outcome {
    let d = need(desk)?;
    let params = d.model.params();
    let c = params.config().in_channels;
    let (coarse, fine) = ([32, 32, 16], [64, 64, 32]);
    let mut worst = 0.0f64;
    let mut rms = 0.0f64;
    for seed in 0..3 {
        let a = band_limited(coarse, c, 2, seed);
        let b = band_limited(fine, c, 2, seed);
        rms = rms.max((a.data().iter().map(|v| v * v).sum::<f64>() / a.data().len() as f64).sqrt());
        let (oa, ob) = (forward(&a, params).map_err(err)?, forward(&b, params).map_err(err)?);
        for z in 0..coarse[2] {
            for y in 0..coarse[1] {
                for x in 0..coarse[0] {
                    let p = oa.data()[x + coarse[0] * (y + coarse[1] * z)];
                    let q = ob.data()[2 * x + fine[0] * (2 * y + fine[1] * 2 * z)];
                    worst = worst.max((p - q).abs());
                }
            }
        }
    }
    check(
        worst <= 1e-6,
        format!("{coarse:?} vs {fine:?}, band 2, input rms {rms:.2}: max difference {worst:.2e}"),
    )
}

fn main() {
    let mut desk: Option<Desk> = None;
    let mut failed = 0;
    let mut report = |id: u32, name: &str, budget: Duration, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let result = f();
        let took = start.elapsed();
        let (ok, detail) = match result {
            Ok(d) if took <= budget => (true, d),
            Ok(d) => (false, format!("{d}; over the {budget:?} budget")),
            Err(d) => (false, d),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "{} {id:>2} {name}: {detail} [{:.1} s]",
            if ok { "PASS" } else { "FAIL" },
            took.as_secs_f64()
        );
    };
    let min = |m: u64| Duration::from_secs(60 * m);
    let sec = Duration::from_secs;
    report(1, "windowing", sec(1), &mut windowing);
    report(2, "fft oracle", sec(10), &mut fft_oracle);
    report(3, "gradient gate", sec(60), &mut gradient_gate);
    report(4, "loss identities", sec(1), &mut loss_identities);
    report(5, "spline fidelity", sec(5), &mut spline_fidelity);
    report(6, "solver sanity", min(5), &mut solver_sanity);
    report(7, "desk-scale training", min(30), &mut || desk_training(&mut desk));
    report(8, "generalization ordering", min(15), &mut || generalization(&desk));
    report(9, "rollout error growth", min(5), &mut || rollout_growth(&desk));
    report(10, "speedup", min(2), &mut || speedup(&desk));
    report(11, "resolution consistency", sec(30), &mut || resolution_consistency(&desk));
    println!("acceptance: {} of 11 criteria passed", 11 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
