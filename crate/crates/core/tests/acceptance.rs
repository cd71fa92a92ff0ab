//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::time::Instant;

use bnnfilter::binopt::{
    scale_equivalence_check, unrolled_oracle, BinaryOptimizer, FilterConfig, FilterForm, FilterOptimState,
    LatentConfig, LatentOptimState, Schedule, ScheduleKind,
};
use bnnfilter::expcli::{
    is_known_key, run_alpha_decay, run_equivalence, run_filter_response, run_lr_sensitivity, run_lr_vs_init,
    run_train, stream_flip_agreement, ExperimentConfig, ExperimentKind, View, FILTERED_TUNABLES,
    LATENT_TUNABLES, RUN_KEYS,
};
use bnnfilter::iir::{cascade, make_ema, make_second_order_bnn, LinearFilter};
use bnnfilter::tinynet::{FilterHyper, LatentHyper};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

type Outcome = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn normal_stream(rng: &mut ChaCha8Rng, steps: usize, n: usize) -> Vec<Vec<f64>> {
    (0..steps).map(|_| (0..n).map(|_| StandardNormal.sample(rng)).collect()).collect()
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo.ln()..hi.ln()).exp()
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let eps = log_uniform(&mut rng, 1e-3, 10.0);
        let alpha = log_uniform(&mut rng, 1e-4, 0.5);
        let lambda = alpha / eps;
        let gamma = rng.random_range(0.01..1.0);
        let g0: f64 = StandardNormal.sample(&mut rng);
        let grads: Vec<f64> = (0..32).map(|_| StandardNormal.sample(&mut rng)).collect();

        // Scale of the summed terms, so cancellation near zero is not mistaken for error.
        let mut m = 0.0;
        let moms: Vec<f64> = grads.iter().map(|g| { m = (1.0 - gamma) * m + gamma * g; m }).collect();
        let decay = 1.0 - eps * lambda;
        let denom = |k: usize, g0: f64| {
            let s: f64 = (0..=k).map(|r| decay.powi((k - r) as i32).abs() * moms[r].abs()).sum();
            (decay.powi(k as i32 + 1) * g0).abs() + eps * s
        };

        let cfg = FilterConfig::new(Schedule::constant(alpha), gamma);
        let mut filt = FilterOptimState::new(1, cfg, 0).map_err(|e| e.to_string())?;
        let zero_init = unrolled_oracle(&grads, eps, lambda, gamma, 0.0);
        for (t, (&g, &o)) in grads.iter().zip(&zero_init).enumerate() {
            filt.step(&[g], t).map_err(|e| e.to_string())?;
            worst = worst.max((filt.filtered()[0] * eps / alpha - o).abs() / denom(t, 0.0));
        }

        let lcfg = LatentConfig::magnitude_independent(Schedule::constant(eps), lambda, gamma);
        let mut lat = LatentOptimState::new(vec![-g0], lcfg, 0).map_err(|e| e.to_string())?;
        let with_init = unrolled_oracle(&grads, eps, lambda, gamma, g0);
        for (t, (&g, &o)) in grads.iter().zip(&with_init).enumerate() {
            lat.step(&[g], t).map_err(|e| e.to_string())?;
            worst = worst.max((-lat.latent()[0] - o).abs() / denom(t, g0));
        }
    }
    ensure(worst <= 1e-12, format!("100 streams x 32 steps, worst relative error {worst:.3e} (limit 1e-12)"))
}

fn cascade_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let alpha = rng.random_range(1e-4..=1.0);
        let gamma = rng.random_range(1e-4..=1.0);
        let conv = cascade(&make_ema(gamma).unwrap(), &make_ema(alpha).unwrap());
        let direct = make_second_order_bnn(alpha, gamma).unwrap();
        if conv != direct {
            return Err(format!("coefficients differ at alpha={alpha}, gamma={gamma}: {conv:?} vs {direct:?}"));
        }
        let x: Vec<f64> = (0..1000).map(|_| rng.random_range(-1.0..1.0)).collect();
        let series = LinearFilter::filter_stream(&make_ema(alpha).unwrap(), &LinearFilter::filter_stream(&make_ema(gamma).unwrap(), &x));
        let second = LinearFilter::filter_stream(&direct, &x);
        for (a, b) in series.iter().zip(&second) {
            worst = worst.max((a - b).abs());
        }
    }
    ensure(
        worst <= 1e-12,
        format!("100 pairs: coefficients identical, worst |series - direct| over 1e3 steps {worst:.3e} (limit 1e-12)"),
    )
}

fn flip_equivalence() -> Outcome {
    let high_flip = (
        LatentHyper { epsilon: 2.0, epsilon_decay: ScheduleKind::Constant, lambda: 0.025, gamma: 0.3, ..Default::default() },
        FilterHyper { alpha: 0.05, alpha_decay: ScheduleKind::Constant, gamma: 0.3 },
    );
    let busy = stream_flip_agreement(&high_flip.0, &high_flip.1, 10_000, 1000, 7).map_err(|e| e.to_string())?;
    let cfg = ExperimentConfig { experiment: ExperimentKind::Equivalence, ..Default::default() };
    let r = run_equivalence(&cfg).map_err(|e| e.to_string())?;
    let checks = [
        ("random streams, cosine alpha 1e-3", r.stream),
        ("random streams, constant alpha 5e-2", busy),
        ("training run", r.train),
    ];
    let detail: Vec<String> = checks
        .iter()
        .map(|(n, a)| {
            format!(
                "{n}: {} events, event agreement {:.6}",
                a.both + a.latent_only + a.filtered_only,
                a.event_agreement()
            )
        })
        .collect();
    ensure(checks.iter().all(|(_, a)| a.event_agreement() >= 0.999), format!("{} (limit 0.999)", detail.join("; ")))
}

fn scale_invariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let scales = [1e-3, 1e-1, 10.0, 1e3];
    for stream in 0..20 {
        let grads = normal_stream(&mut rng, 300, 50);
        let g0: Vec<f64> = (0..50).map(|_| StandardNormal.sample(&mut rng)).collect();
        for &s in &scales {
            if !scale_equivalence_check(&grads, 0.5, 0.02, 0.2, &g0, s, stream).map_err(|e| e.to_string())? {
                return Err(format!("stream {stream}: theta differs for s = {s}"));
            }
        }
        // g0 = 0: same theta for every learning rate at a fixed eps * lambda.
        let mut reference: Option<Vec<Vec<i8>>> = None;
        for eps in [1e-3, 1e-1, 1.0, 10.0, 1e3] {
            let cfg = LatentConfig::magnitude_independent(Schedule::constant(eps), 0.01 / eps, 0.2);
            let mut opt = LatentOptimState::new(vec![0.0; 50], cfg, stream).map_err(|e| e.to_string())?;
            let mut trace = vec![opt.theta().to_vec()];
            for (t, g) in grads.iter().enumerate() {
                opt.step(g, t).map_err(|e| e.to_string())?;
                trace.push(opt.theta().to_vec());
            }
            match &reference {
                None => reference = Some(trace),
                Some(r) if *r != trace => return Err(format!("stream {stream}: zero-init theta differs at eps = {eps}")),
                Some(_) => {}
            }
        }
    }
    let cfg = ExperimentConfig {
        experiment: ExperimentKind::LrVsInit,
        epochs: 20,
        latent: LatentHyper { w0_scale: 1.0, ..Default::default() },
        sweep: bnnfilter::expcli::SweepSpec { scales: scales.to_vec(), ..Default::default() },
        ..Default::default()
    };
    let r = run_lr_vs_init(&cfg).map_err(|e| e.to_string())?;
    let pairs: Vec<String> = r.pairs.iter().map(|p| format!("s={}:{}", p.scale, p.identical())).collect();
    ensure(
        r.pairs.iter().all(|p| p.identical()) && r.zero_init_identical,
        format!(
            "20 streams x 300 steps x 50 weights identical; training pairs {}; zero-init across eps identical: {}",
            pairs.join(" "),
            r.zero_init_identical
        ),
    )
}

fn lr_flatness() -> Outcome {
    let cfg = ExperimentConfig { experiment: ExperimentKind::LrSensitivity, ..Default::default() };
    let r = run_lr_sensitivity(&cfg).map_err(|e| e.to_string())?;
    let zero = r.curve("zero-init").ok_or("missing zero-init curve")?;
    let orders = (r.epsilons.iter().copied().fold(f64::MIN, f64::max)
        / r.epsilons.iter().copied().fold(f64::MAX, f64::min))
    .log10();
    let accs: Vec<String> = zero.accuracies.iter().map(|a| format!("{a:.4}")).collect();
    ensure(
        zero.spread() < 0.01 && orders >= 4.0 - 1e-9,
        format!("eps over {orders:.0} orders, zero-init accuracies [{}], spread {:.4} (limit 0.01)", accs.join(", "), zero.spread()),
    )
}

fn alpha_decay() -> Outcome {
    let cfg = ExperimentConfig { experiment: ExperimentKind::AlphaDecay, ..Default::default() };
    let r = run_alpha_decay(&cfg).map_err(|e| e.to_string())?;
    let (ad, ac) = (r.decay.log.final_test_accuracy(), r.constant.log.final_test_accuracy());
    ensure(
        r.decay_window_ff < 0.1 * r.constant_window_ff && ad >= ac,
        format!(
            "final 5% FF ratio decay {:.3e} vs constant {:.3e} (ratio {:.4}, limit 0.1); accuracy decay {ad:.4} >= constant {ac:.4}",
            r.decay_window_ff,
            r.constant_window_ff,
            r.decay_window_ff / r.constant_window_ff
        ),
    )
}

fn filter_ordering() -> Outcome {
    let cfg = ExperimentConfig { experiment: ExperimentKind::FilterResponse, ..Default::default() };
    let r = run_filter_response(&cfg).map_err(|e| e.to_string())?;
    let mut syn_cfg = cfg.clone();
    syn_cfg.trace.synthetic = true;
    let syn = run_filter_response(&syn_cfg).map_err(|e| e.to_string())?;
    ensure(
        r.ordering_holds() && r.var_raw > 0.0 && syn.ordering_holds(),
        format!(
            "{} recorded gradients, variance second {:.3e} < first {:.3e} < raw {:.3e}; synthetic {} steps: {:.3e} < {:.3e} < {:.3e}",
            r.raw.len(),
            r.var_second_order,
            r.var_ema,
            r.var_raw,
            syn.raw.len(),
            syn.var_second_order,
            syn.var_ema,
            syn.var_raw
        ),
    )
}

fn alpha_gamma_swap() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut worst: f64 = 0.0;
    for seed in 0..50 {
        let alpha = log_uniform(&mut rng, 1e-4, 1.0);
        let gamma = log_uniform(&mut rng, 1e-4, 1.0);
        let grads = normal_stream(&mut rng, 500, 10);
        for form in [FilterForm::Cascade, FilterForm::Direct2] {
            let cfg = |a, g| FilterConfig { alpha: Schedule::constant(a), gamma: g, form };
            let mut x = FilterOptimState::new(10, cfg(alpha, gamma), seed).map_err(|e| e.to_string())?;
            let mut y = FilterOptimState::new(10, cfg(gamma, alpha), seed).map_err(|e| e.to_string())?;
            for (t, g) in grads.iter().enumerate() {
                x.step(g, t).map_err(|e| e.to_string())?;
                y.step(g, t).map_err(|e| e.to_string())?;
                for (a, b) in x.filtered().iter().zip(y.filtered()) {
                    worst = worst.max((a - b).abs());
                }
            }
        }
    }
    ensure(worst <= 1e-12, format!("50 pairs x 2 forms x 500 steps, worst |g - g_swapped| {worst:.3e} (limit 1e-12)"))
}

fn gradient_checks() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut params = 0;
    for seed in 0..5 {
        let r = common::gradient_check(seed);
        params = r.params;
        worst = worst.max(r.max_rel);
    }
    ensure(
        worst < 1e-5 && params <= 1000,
        format!("5 nets with {params} real parameters, worst relative error {worst:.3e} (limit 1e-5)"),
    )
}

fn table1_schema() -> Outcome {
    let all_keys = RUN_KEYS.iter().map(|(k, _)| *k).chain(LATENT_TUNABLES).chain(FILTERED_TUNABLES);
    let (n_latent, n_filtered) = all_keys.fold((0, 0), |(l, f), k| {
        (l + usize::from(k.starts_with("latent.")), f + usize::from(k.starts_with("filtered.")))
    });
    let mut ok = LATENT_TUNABLES.len() == 7
        && FILTERED_TUNABLES.len() == 3
        && n_latent == 7
        && n_filtered == 3
        && View::Latent.tunables().len() == 7
        && View::Filtered.tunables().len() == 3;
    let values = [
        ("latent.epsilon", "0.5"),
        ("latent.epsilon_decay", "\"linear\""),
        ("latent.w0_scale", "0.1"),
        ("latent.gamma", "0.5"),
        ("latent.lambda", "0.01"),
        ("latent.scaling", "true"),
        ("latent.clipping", "true"),
        ("filtered.alpha", "0.01"),
        ("filtered.alpha_decay", "\"constant\""),
        ("filtered.gamma", "0.5"),
    ];
    for (k, v) in values {
        let parsed = ExperimentConfig::parse(&format!("{k} = {v}"));
        ok &= is_known_key(k) && parsed.is_ok_and(|c| c != ExperimentConfig::default());
    }
    for extra in ["latent.momentum2", "filtered.lambda", "filtered.epsilon", "latent.alpha"] {
        ok &= !is_known_key(extra) && ExperimentConfig::parse(&format!("{extra} = 0.1")).is_err();
    }
    ensure(ok, format!("latent tunables {n_latent} (want 7), filtered tunables {n_filtered} (want 3), extras rejected"))
}

fn training_sanity() -> Outcome {
    let cfg = ExperimentConfig::default();
    if cfg.filtered != (FilterHyper { alpha: 1e-3, alpha_decay: ScheduleKind::Cosine, gamma: 0.1 }) || cfg.view != View::Filtered {
        return Err(format!("unexpected default optimizer {:?}", cfg.filtered));
    }
    let r = run_train(&cfg).map_err(|e| e.to_string())?;
    let acc = r.run.log.final_test_accuracy();
    ensure(acc >= 0.90, format!("filter optimizer alpha 1e-3, gamma 0.1, cosine: test accuracy {acc:.4} (limit 0.90)"))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 11] = [
        ("oracle equivalence", oracle_equivalence),
        ("cascade identity", cascade_identity),
        ("latent/filter flip equivalence", flip_equivalence),
        ("scale invariance", scale_invariance),
        ("learning-rate flatness", lr_flatness),
        ("alpha-decay convergence", alpha_decay),
        ("filter ordering", filter_ordering),
        ("alpha/gamma swap", alpha_gamma_swap),
        ("gradient checks", gradient_checks),
        ("hyperparameter schema 7 vs 3", table1_schema),
        ("desk-scale training sanity", training_sanity),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("PASS  {name} [{secs:.1}s]: {d}"),
            Err(d) => {
                failed += 1;
                println!("FAIL  {name} [{secs:.1}s]: {d}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
