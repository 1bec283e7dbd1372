//! Acceptance suite: one test per shipped criterion, each printing a single
//! PASS/FAIL line (run with `--nocapture` to see them all). Tolerances and
//! runtime budgets are pinned in code.
//!
//! Run via `cargo test -p deltaprime-cli --test acceptance`.

use std::process::Command;
use std::time::{Duration, Instant};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use deltaprime::convergence::{hs_distance, study, StudyConfig, StudyId};
use deltaprime::delta_arrays::{
    cs_couplings, gamma_inverse, gamma_inverse_closed_form, gamma_matrix, uvw, CouplingConfig,
};
use deltaprime::kernels::{
    delta_prime_kernel, dirichlet_kernel, free_kernel, signed_kernel, SpectralPoint,
};
use deltaprime::model::KernelModel;
use deltaprime::potentials::{form_t, w12_norm, PotentialShape, ScaledPotential};
use deltaprime::schrodinger::{DecayingSolutionPair, PiecewiseConstantPotential};
use deltaprime::series::{verify_expansion, ExpansionId};
use deltaprime::spectra::find_bound_states;

struct Criterion {
    number: u32,
    name: &'static str,
    budget: Duration,
    started: Instant,
    failures: Vec<String>,
}

impl Criterion {
    fn new(number: u32, name: &'static str, budget_secs: u64) -> Self {
        Self {
            number,
            name,
            budget: Duration::from_secs(budget_secs),
            started: Instant::now(),
            failures: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, detail: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(detail());
        }
    }

    fn finish(mut self) {
        let elapsed = self.started.elapsed();
        if elapsed > self.budget {
            self.failures.push(format!(
                "runtime {elapsed:?} over budget {:?}",
                self.budget
            ));
        }
        let verdict = if self.failures.is_empty() { "PASS" } else { "FAIL" };
        println!(
            "criterion {} ({}): {verdict} [{elapsed:?}]{}",
            self.number,
            self.name,
            if self.failures.is_empty() {
                String::new()
            } else {
                format!(" — {}", self.failures.join("; "))
            }
        );
        assert!(
            self.failures.is_empty(),
            "criterion {} failed: {}",
            self.number,
            self.failures.join("; ")
        );
    }
}

fn sp(k: f64) -> SpectralPoint {
    SpectralPoint::new(k).unwrap()
}

#[test]
fn criterion_1_explicit_inverse_identity() {
    let mut c = Criterion::new(1, "explicit-inverse identity", 1);
    let mut rng = ChaCha8Rng::seed_from_u64(0xC0FFEE);
    let mut tested = 0;
    while tested < 200 {
        let beta = if rng.gen::<bool>() {
            rng.gen_range(0.2..3.0)
        } else {
            rng.gen_range(-3.0..-0.2)
        };
        let a = rng.gen_range(1e-4..0.3);
        let kappa = rng.gen_range(0.5..6.0);
        let cfg = CouplingConfig::balanced(beta, a).unwrap();
        let arr = match cs_couplings(&cfg) {
            Ok(arr) => arr,
            Err(_) => continue, // degenerate spacing
        };
        let gi = match gamma_inverse(&gamma_matrix(&arr, sp(kappa))) {
            Ok(gi) => gi,
            Err(_) => continue, // -kappa^2 at (or numerically near) an eigenvalue
        };
        let cf = gamma_inverse_closed_form(uvw(&cfg, sp(kappa)).unwrap(), kappa);
        let scale = gi.entries.max_abs();
        for i in 0..3 {
            for j in 0..3 {
                let diff = (gi.entries.get(i, j) - cf.get(i, j)).abs();
                c.check(diff <= 1e-10 * scale, || {
                    format!(
                        "entry ({i},{j}) at beta={beta} a={a} kappa={kappa}: |LU - closed form| = {diff:.3e} vs {:.3e}",
                        1e-10 * scale
                    )
                });
            }
        }
        tested += 1;
    }
    c.finish();
}

#[test]
fn criterion_2_expansion_suite() {
    let mut c = Criterion::new(2, "expansion suite", 1);
    let mut rng = ChaCha8Rng::seed_from_u64(0xABBA);
    for id in ExpansionId::ALL {
        let mut done = 0;
        while done < 10 {
            let kappa: f64 = rng.gen_range(0.5..6.0);
            let beta: f64 = if rng.gen::<bool>() {
                rng.gen_range(0.2..3.0)
            } else {
                rng.gen_range(-3.0..-0.2)
            };
            let alpha = match id {
                ExpansionId::DAlpha | ExpansionId::NAlpha => {
                    let a: f64 = rng.gen_range(0.3..3.0);
                    if (a - 1.0).abs() < 0.1 {
                        continue;
                    }
                    a
                }
                _ => 1.0,
            };
            if matches!(id, ExpansionId::LimKern | ExpansionId::GammaInv)
                && (2.0 + beta * kappa).abs() < 0.05 * (1.0 + (beta * kappa).abs())
            {
                continue; // stay clear of the resonance
            }
            match verify_expansion(id, kappa, beta, alpha, 6) {
                Ok(rep) => {
                    c.check(rep.pass, || {
                        format!(
                            "{} at kappa={kappa:.4} beta={beta:.4} alpha={alpha:.4}: {:?}",
                            id.name(),
                            rep.rows
                        )
                    });
                    done += 1;
                }
                Err(e) => {
                    c.check(false, || format!("{}: unexpected error {e}", id.name()));
                    done += 1;
                }
            }
        }
    }
    c.finish();
}

#[test]
fn criterion_3_spectral_asymptotics() {
    let mut c = Criterion::new(3, "spectral asymptotics", 5);
    let a_grid = [0.1, 0.05, 0.025, 0.0125];
    let mut kappa_errs = Vec::new();
    let mut energy_errs = Vec::new();
    for &a in &a_grid {
        let cfg = CouplingConfig::balanced(-1.0, a).unwrap();
        let roots = find_bound_states(&cfg, 10.0).unwrap();
        c.check(roots.len() == 1, || {
            format!("beta=-1 a={a}: expected exactly one bound state, got {}", roots.len())
        });
        if let Some(r) = roots.first() {
            kappa_errs.push((r.kappa_star - 2.0).abs());
            energy_errs.push((r.energy - (-4.0)).abs());
        }
    }
    c.check(
        energy_errs.windows(2).all(|w| w[1] < w[0]),
        || format!("|energy + 4| not decreasing: {energy_errs:?}"),
    );
    let slope = deltaprime::convergence::fit_loglog_slope(&a_grid, &kappa_errs);
    c.check((0.7..=1.3).contains(&slope), || {
        format!("log-log slope of |kappa*-2| = {slope:.4} outside [0.7, 1.3]")
    });
    let none = find_bound_states(&CouplingConfig::balanced(1.0, 0.01).unwrap(), 10.0).unwrap();
    c.check(none.is_empty(), || {
        format!("beta=+1: expected no bound state, got {none:?}")
    });
    for &a in &[0.01, 0.005] {
        let cfg = CouplingConfig::new(-1.0, a, 2.0, 0.0).unwrap();
        let roots = find_bound_states(&cfg, 10.0).unwrap();
        let significant: Vec<_> = roots.iter().filter(|r| r.kappa_star >= 0.1).collect();
        c.check(significant.is_empty(), || {
            format!("alpha=2 a={a}: unexpected bound states {significant:?}")
        });
    }
    c.finish();
}

#[test]
fn criterion_4_triple_to_delta_prime_convergence() {
    let mut c = Criterion::new(4, "triple-delta to delta-prime HS convergence", 30);
    let cfg = StudyConfig::new(StudyId::TripleToDeltaPrime, -1.0, 4.0);
    let rep = study(&cfg).unwrap();
    c.check(rep.rows.len() == 5, || "expected five rows".into());
    c.check(
        rep.rows.windows(2).all(|w| w[1].hs_distance < w[0].hs_distance),
        || {
            format!(
                "distances not strictly decreasing: {:?}",
                rep.rows.iter().map(|r| r.hs_distance).collect::<Vec<_>>()
            )
        },
    );
    let leading = rep.rows[0].hs_distance;
    for r in &rep.rows {
        c.check(r.tail_bound < 1e-8 * leading, || {
            format!(
                "tail bound {:.3e} not below 1e-8 * leading distance {:.3e}",
                r.tail_bound,
                1e-8 * leading
            )
        });
    }
    // The delta-prime correction kernel jumps across the center lines while
    // the array kernel stays continuous, which adds an O(sqrt(a)) boundary
    // layer to the L2 distance: the measured rate sits at 1/2, not at the
    // pointwise rate 1. The window below is pinned by the acceptance
    // contract and is expected to fail; the pointwise slope-one behavior is
    // covered in the delta_arrays unit tests.
    c.check((0.7..=1.3).contains(&rep.fitted_rate), || {
        format!("fitted HS rate {:.4} outside [0.7, 1.3]", rep.fitted_rate)
    });
    c.finish();
}

#[test]
fn criterion_5_inverse_klauder_dirichlet_limit() {
    let mut c = Criterion::new(5, "disbalance drives the kernels to Dirichlet", 30);
    let mut cfg = StudyConfig::new(StudyId::AlphaToDirichlet, -1.0, 2.0);
    cfg.alpha = 2.0;
    let rep = study(&cfg).unwrap();
    c.check(
        rep.rows.windows(2).all(|w| w[1].hs_distance < w[0].hs_distance),
        || {
            format!(
                "distances not strictly decreasing: {:?}",
                rep.rows.iter().map(|r| r.hs_distance).collect::<Vec<_>>()
            )
        },
    );
    c.check((0.7..=1.3).contains(&rep.fitted_rate), || {
        format!("fitted rate {:.4} outside [0.7, 1.3]", rep.fitted_rate)
    });

    // Negative control against the wrong limit. The nominal spectral point
    // kappa = 2 is the delta-prime resonance for beta = -1 (the delta-prime
    // resolvent does not exist there), so the control runs at kappa = 3.
    // Floor: the delta-prime/Dirichlet difference is a sum of two rank-one
    // kernels with orthogonal factors, so its HS norm is computable in
    // closed form.
    let (beta, kappa) = (-1.0, 3.0);
    let s = sp(kappa);
    let coef = 2.0 * beta * kappa * kappa / (2.0 + beta * kappa);
    let floor = ((coef * coef) / (16.0 * kappa.powi(6)) + 1.0 / (4.0 * kappa.powi(4))).sqrt();
    let dp = KernelModel::DeltaPrime { beta, y: 0.0 };
    let l = 32.0 / kappa;
    let mut control = Vec::new();
    for &a in &cfg.a_grid {
        let ccfg = CouplingConfig::new(beta, a, cfg.alpha, 0.0).unwrap();
        let arr = KernelModel::DeltaArray(cs_couplings(&ccfg).unwrap());
        let (hs, _) = hs_distance(&arr, &dp, s, l, 420).unwrap();
        control.push(hs);
    }
    c.check(control.iter().all(|&d| d > floor * 0.99), || {
        format!("control distances {control:?} fell below the floor {floor:.6}")
    });
    let last = *control.last().unwrap();
    c.check(last < floor * 1.2, || {
        format!("control plateau {last:.6} unexpectedly far above the floor {floor:.6}")
    });
    c.finish();
}

#[test]
fn criterion_6_potential_chain_at_desk_scale() {
    let mut c = Criterion::new(6, "potential chain: tau and HS trends", 180);
    let cfg = StudyConfig::new(StudyId::PotentialToTriple, -1.0, 4.0);
    let rep = study(&cfg).unwrap();
    let taus: Vec<f64> = rep.rows.iter().map(|r| r.tau.unwrap()).collect();
    c.check(taus.windows(2).all(|w| w[1] < w[0]), || {
        format!("tau not strictly decreasing: {taus:?}")
    });
    c.check(
        rep.rows.windows(2).all(|w| w[1].hs_distance < w[0].hs_distance),
        || {
            format!(
                "HS distances not strictly decreasing: {:?}",
                rep.rows.iter().map(|r| r.hs_distance).collect::<Vec<_>>()
            )
        },
    );
    // Neumann-series bound wherever tau < 1, with the measured constant
    let c_gamma = rep.c_gamma.unwrap();
    let mut bound_checked = 0;
    for r in &rep.rows {
        let t = r.tau.unwrap();
        if t < 1.0 {
            let a = r.param.powf(cfg.rule_exponent.unwrap());
            let bound = 2.0 * c_gamma * t / (a * a * (1.0 - t));
            c.check(r.op_norm <= bound, || {
                format!(
                    "op-norm {:.3e} violates the Neumann bound {bound:.3e} at eps={}",
                    r.op_norm, r.param
                )
            });
            bound_checked += 1;
        }
    }
    c.check(bound_checked > 0, || {
        "no grid point reached tau < 1; nothing to check".into()
    });
    c.finish();
}

#[test]
fn criterion_7_sobolev_estimate_suite() {
    let mut c = Criterion::new(7, "Sobolev and form-bound estimates", 10);
    let step = 5e-4;
    let half = 12.0;
    let n = (2.0 * half / step) as usize + 1;
    let xs: Vec<f64> = (0..n).map(|i| -half + i as f64 * step).collect();

    // 20-member corpus: gaussians, exponential kinks, compact cosine bumps
    let mut corpus: Vec<(String, Box<dyn Fn(f64) -> f64>)> = Vec::new();
    for (sigma, center) in [(0.5, 0.0), (1.0, 0.0), (2.0, 0.5), (0.8, -1.0), (1.5, 1.5), (0.3, 0.25), (1.0, -2.0)] {
        corpus.push((
            format!("gauss({sigma},{center})"),
            Box::new(move |x: f64| (-(x - center) * (x - center) / (2.0 * sigma * sigma)).exp()),
        ));
    }
    for (rate, center) in [(1.0, 0.0), (0.5, 0.0), (2.0, 0.5), (1.0, -1.0), (1.5, 1.0), (0.7, 0.25), (1.0, 2.0)] {
        corpus.push((
            format!("kink({rate},{center})"),
            Box::new(move |x: f64| (-rate * (x - center).abs()).exp()),
        ));
    }
    for (w, center) in [(1.0, 0.0), (2.0, 0.0), (0.5, 0.5), (1.5, -0.5), (3.0, 1.0), (0.8, -0.25)] {
        corpus.push((
            format!("bump({w},{center})"),
            Box::new(move |x: f64| {
                let t = (x - center) / w;
                if t.abs() < 1.0 {
                    let z = (std::f64::consts::PI * t / 2.0).cos();
                    z * z
                } else {
                    0.0
                }
            }),
        ));
    }
    assert_eq!(corpus.len(), 20);

    let sampled: Vec<(String, Vec<f64>, f64)> = corpus
        .iter()
        .map(|(name, f)| {
            let values: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
            let norm = w12_norm(&values, step);
            (name.clone(), values, norm)
        })
        .collect();

    let slack = 1.0 + 1e-3;
    // sup-norm embedding
    for (name, values, norm) in &sampled {
        let maxv = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        c.check(maxv <= norm / std::f64::consts::SQRT_2 * slack, || {
            format!("{name}: max |f| = {maxv:.6} vs (1/sqrt2)||f|| = {:.6}", norm / std::f64::consts::SQRT_2)
        });
    }
    // Hoelder estimate on random pairs
    let mut rng = ChaCha8Rng::seed_from_u64(0xD1CE);
    for (name, values, norm) in &sampled {
        for _ in 0..20 {
            let i = rng.gen_range(0..n);
            let j = rng.gen_range(0..n);
            if i == j {
                continue;
            }
            let lhs = (values[i] - values[j]).abs();
            let rhs = (xs[i] - xs[j]).abs().sqrt() * norm * slack;
            c.check(lhs <= rhs, || {
                format!("{name}: |f(x)-f(y)| = {lhs:.6} vs sqrt|x-y| ||f|| = {rhs:.6}")
            });
        }
    }
    // form bounds on corpus pairs at sampled parameters
    let shape = PotentialShape::make_box(0.5).unwrap();
    let m0 = shape.sqrt_moment;
    for k in 0..20 {
        let beta = if k % 2 == 0 { -(0.4 + 0.1 * k as f64) } else { 0.4 + 0.1 * k as f64 };
        let a = 0.03 + 0.01 * (k as f64 % 7.0);
        let eps = 10f64.powf(-2.0 - 0.3 * (k as f64 % 10.0));
        let cfg = CouplingConfig::new(beta, a, 1.0, 0.0).unwrap();
        let spot = ScaledPotential::uniform(cfg, eps, shape.clone()).unwrap();
        let (nu, u) = (&sampled[k % 20], &corpus[k % 20].1);
        let (nv, v) = (&sampled[(k * 7 + 3) % 20], &corpus[(k * 7 + 3) % 20].1);
        let t0 = form_t(0, &spot, u, v, 1.0 / 256.0).unwrap();
        let bound0 =
            std::f64::consts::SQRT_2 * eps.sqrt() * beta.abs() / (a * a) * m0 * nu.2 * nv.2;
        c.check(t0.abs() <= bound0 * slack, || {
            format!(
                "center form bound violated at beta={beta} a={a} eps={eps}: |t0| = {:.3e} vs {:.3e}",
                t0.abs(),
                bound0
            )
        });
        for j in [-1i8, 1] {
            let tj = form_t(j, &spot, u, v, 1.0 / 256.0).unwrap();
            let boundj = std::f64::consts::SQRT_2
                * eps.sqrt()
                * (2.0 / beta - 1.0 / a).abs()
                * m0
                * nu.2
                * nv.2;
            c.check(tj.abs() <= boundj * slack, || {
                format!(
                    "outer form bound violated at beta={beta} a={a} eps={eps} j={j}: {:.3e} vs {:.3e}",
                    tj.abs(),
                    boundj
                )
            });
        }
    }
    c.finish();
}

#[test]
fn criterion_8_kernel_identities() {
    let mut c = Criterion::new(8, "decomposition and symmetry identities", 1);
    let grid: Vec<f64> = (-5..=5).map(|i| i as f64 * 0.61).collect();
    for &kappa in &[0.8, 1.7, 3.1] {
        let s = sp(kappa);
        let cfg = CouplingConfig::balanced(-1.0, 0.07).unwrap();
        let arr = KernelModel::DeltaArray(cs_couplings(&cfg).unwrap());
        let parr = arr.prepare(s).unwrap();
        let pot = KernelModel::Potential {
            sp: ScaledPotential::uniform(
                CouplingConfig::balanced(-1.0, 0.07).unwrap(),
                1e-4,
                PotentialShape::make_box(0.5).unwrap(),
            )
            .unwrap(),
            cells_per_bump: 8,
        };
        let ppot = pot.prepare(s).unwrap();
        for &x in &grid {
            for &xp in &grid {
                // decomposition identity at y = 0
                let lhs = free_kernel(s, x, xp).value;
                let rhs = dirichlet_kernel(0.0, s, x, xp).value
                    + (-kappa * (x.abs() + xp.abs())).exp() / (2.0 * kappa);
                c.check((lhs - rhs).abs() <= 1e-12, || {
                    format!("decomposition at kappa={kappa} ({x},{xp}): {:.3e}", (lhs - rhs).abs())
                });
                // symmetry / antisymmetry
                let sym_f = (free_kernel(s, x, xp).value - free_kernel(s, xp, x).value).abs();
                let anti = (signed_kernel(s, x, xp).value + signed_kernel(s, xp, x).value).abs();
                let dpv = delta_prime_kernel(-1.0, 0.0, s, x, xp).unwrap().value
                    - delta_prime_kernel(-1.0, 0.0, s, xp, x).unwrap().value;
                let dir = dirichlet_kernel(0.0, s, x, xp).value
                    - dirichlet_kernel(0.0, s, xp, x).value;
                let av = parr.eval(x, xp) - parr.eval(xp, x);
                c.check(
                    sym_f <= 1e-12 && anti <= 1e-12 && dpv.abs() <= 1e-12 && dir.abs() <= 1e-12 && av.abs() <= 1e-12,
                    || format!("symmetry violated at kappa={kappa} ({x},{xp})"),
                );
                let _ = &ppot;
            }
        }
        // free reduction of the transfer-matrix kernel on a 10x10 grid
        let free_pair =
            DecayingSolutionPair::build(&PiecewiseConstantPotential::free(), s).unwrap();
        for i in 0..10 {
            for j in 0..10 {
                let (x, xp) = (-2.0 + 0.45 * i as f64, -2.0 + 0.45 * j as f64);
                let diff = (free_pair.kernel(x, xp) - free_kernel(s, x, xp).value).abs();
                c.check(diff <= 1e-12, || {
                    format!("free reduction at ({x},{xp}): {diff:.3e}")
                });
            }
        }
    }
    c.finish();
}

#[test]
fn criterion_9_cli_determinism_and_exit_codes() {
    let mut c = Criterion::new(9, "CLI determinism and exit codes", 60);
    let bin = env!("CARGO_BIN_EXE_deltaprime");
    let dir = std::env::temp_dir().join("deltaprime-acceptance");
    std::fs::create_dir_all(&dir).unwrap();

    // canned config A: a healthy study, exit 0, byte-identical CSV
    let out_a = dir.join("a.csv");
    let out_b = dir.join("b.csv");
    let run_converge = |out: &std::path::Path| {
        Command::new(bin)
            .args([
                "converge",
                "--study",
                "alpha-to-dirichlet",
                "--beta",
                "-1",
                "--kappa",
                "2",
                "--alpha",
                "2",
                "--a-grid",
                "0.1,0.05,0.025",
                "--nodes",
                "260",
                "--output",
            ])
            .arg(out)
            .status()
            .unwrap()
    };
    let st1 = run_converge(&out_a);
    let st2 = run_converge(&out_b);
    c.check(st1.code() == Some(0) && st2.code() == Some(0), || {
        format!("healthy study exit codes: {st1:?}, {st2:?}")
    });
    let bytes_a = std::fs::read(&out_a).unwrap();
    let bytes_b = std::fs::read(&out_b).unwrap();
    c.check(bytes_a == bytes_b, || {
        "repeated converge runs differ byte-for-byte".into()
    });
    c.check(bytes_a.starts_with(b"param,hs_distance,op_norm,tail_bound\n"), || {
        "CSV header mismatch".into()
    });

    // canned config B: precondition violation, exit 2
    let st = Command::new(bin)
        .args([
            "converge",
            "--study",
            "alpha-to-dirichlet",
            "--beta",
            "-1",
            "--kappa",
            "2",
            "--alpha",
            "1",
        ])
        .output()
        .unwrap();
    c.check(st.status.code() == Some(2), || {
        format!("alpha = 1 should exit 2, got {:?}", st.status.code())
    });

    // canned config C: study runs but the rate window fails, exit 3
    let st = Command::new(bin)
        .args([
            "converge",
            "--study",
            "triple-to-deltaprime",
            "--beta",
            "-1",
            "--kappa",
            "4",
            "--a-grid",
            "0.1,0.05,0.025,0.0125",
            "--nodes",
            "220",
        ])
        .output()
        .unwrap();
    c.check(st.status.code() == Some(3), || {
        format!("rate-window failure should exit 3, got {:?}", st.status.code())
    });

    // parse failure is exit 2 as well (clap default)
    let st = Command::new(bin)
        .args(["converge", "--study", "no-such-study", "--beta", "-1", "--kappa", "4"])
        .output()
        .unwrap();
    c.check(st.status.code() == Some(2), || {
        format!("unknown study should exit 2, got {:?}", st.status.code())
    });
    c.finish();
}
