use std::fs;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use sharplab::data::{make_two_moons, Batch};
use sharplab::harness::{
    landscape_grid, read_metrics_csv, run_experiment, sweep, ExperimentConfig, RunSummary,
    SweepParam,
};
use sharplab::lets::{
    lets_step, HessianMode, LetsConfig, Parameterization, RadiusConfig, RadiusOptimizer,
    RadiusState,
};
use sharplab::model::{
    Activation, AnchorQuadratic, DifferentiableModel, Mlp, ParameterLayout, Quadratic, SegmentKind,
};
use sharplab::optim::{
    build_normalization, erm_step, sam_perturbation, sharpness_step, Normalization, Schedule,
    SgdConfig, SgdState, SharpnessVariant,
};
use sharplab::oracle::{oracle_dj_drho_fd, verify_hypergradient, OneStepProblem, OracleSettings};
use sharplab::rng::Stream;
use sharplab::ParamVector;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

type Check = fn() -> Result<Outcome, String>;

fn pv(v: &[f64]) -> ParamVector {
    ParamVector::new(v.to_vec()).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs()
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn worked_pair() -> (AnchorQuadratic, Batch, Batch) {
    (
        AnchorQuadratic::new(pv(&[1.0])).unwrap(),
        Batch::new(vec![0.0], vec![0], 1).unwrap(),
        Batch::new(vec![2.0], vec![0], 1).unwrap(),
    )
}

fn direct_plain(beta: f64) -> RadiusConfig {
    RadiusConfig {
        parameterization: Parameterization::Direct,
        optimizer: RadiusOptimizer::Plain,
        schedule: Schedule::constant(beta),
        rho_max: None,
    }
}

fn anchors(rng: &mut Stream, rows: usize, d: usize) -> Batch {
    let x = (0..rows * d).map(|_| rng.normal()).collect();
    Batch::new(x, vec![0; rows], d).unwrap()
}

fn hypergradient() -> Result<Outcome, String> {
    let start = Instant::now();
    let (m, tr, vl) = worked_pair();
    let theta = pv(&[1.0]);
    let mut radius = RadiusState::new(0.1, direct_plain(1.0)).map_err(err)?;
    let cfg = LetsConfig {
        hessian: HessianMode::exact(),
        ..LetsConfig::default()
    };
    let (_, d) = lets_step(
        &m,
        &theta,
        &mut radius,
        &tr,
        &vl,
        &mut SgdState::new(),
        &SgdConfig::plain(0.1),
        &cfg,
    )
    .map_err(err)?;
    let exact = 0.1 * d.g_rho;
    let problem = OneStepProblem {
        model: &m,
        theta: &theta,
        train: &tr,
        val: &vl,
        eta: 0.1,
    };
    let fd = oracle_dj_drho_fd(problem, 0.1, &OracleSettings::default()).map_err(err)?;
    let closed_ok = rel(exact, 0.044) <= 1e-6 && rel(exact, fd) <= 1e-6;

    let mut rng = Stream::new(2024, 100);
    let mut worst_quad: f64 = 0.0;
    for _ in 0..20 {
        let d = 2 + rng.below(49) as usize;
        let curv =
            ParamVector::new((0..d).map(|_| rng.uniform_in(0.2, 3.0)).collect()).map_err(err)?;
        let model = AnchorQuadratic::new(curv).map_err(err)?;
        let theta = ParamVector::new((0..d).map(|_| rng.normal()).collect()).map_err(err)?;
        let train = anchors(&mut rng, 4, d);
        let val = anchors(&mut rng, 4, d);
        let problem = OneStepProblem {
            model: &model,
            theta: &theta,
            train: &train,
            val: &val,
            eta: rng.uniform_in(0.02, 0.2),
        };
        let rho = rng.uniform_in(0.02, 0.3);
        let report = verify_hypergradient(problem, rho, &OracleSettings::default(), "quadratic")
            .map_err(err)?;
        worst_quad = worst_quad.max(report.rel_err_exact);
    }

    let moons = make_two_moons(400, 0.1, 11).map_err(err)?;
    let mut worst_mlp: f64 = 0.0;
    for k in 0..5u64 {
        let model = Mlp::new(
            &[2, 8, 2],
            Activation::Tanh,
            sharplab::model::LossKind::CrossEntropy,
        )
        .map_err(err)?;
        let mut r = Stream::new(k, 101);
        let theta = model.init_params(&mut r);
        let pick = |r: &mut Stream| moons.batch(&r.choose_distinct(moons.len(), 32));
        let train = pick(&mut r);
        let val = pick(&mut r);
        let problem = OneStepProblem {
            model: &model,
            theta: &theta,
            train: &train,
            val: &val,
            eta: 0.1,
        };
        let report =
            verify_hypergradient(problem, 0.05, &OracleSettings::default(), "mlp").map_err(err)?;
        worst_mlp = worst_mlp.max(report.rel_err_exact);
    }
    let elapsed = start.elapsed();
    let pass =
        closed_ok && worst_quad <= 1e-3 && worst_mlp <= 1e-3 && elapsed < Duration::from_secs(10);
    Ok(outcome(
        pass,
        format!(
            "eta*g_rho={exact:.9} fd={fd:.9}; worst rel err quadratic {worst_quad:.2e}, mlp {worst_mlp:.2e}; {:.2}s",
            elapsed.as_secs_f64()
        ),
    ))
}

fn fd_order() -> Result<Outcome, String> {
    let (m, tr, vl) = worked_pair();
    let theta = pv(&[1.0]);
    let problem = OneStepProblem {
        model: &m,
        theta: &theta,
        train: &tr,
        val: &vl,
        eta: 0.1,
    };
    let at = |p: OneStepProblem<'_>, rho: f64, h: f64| {
        let s = OracleSettings {
            rho_step: h,
            ..OracleSettings::default()
        };
        oracle_dj_drho_fd(p, rho, &s).map_err(err)
    };
    let quad_err = (at(problem, 0.1, 0.02)? - 0.044)
        .abs()
        .max((at(problem, 0.1, 0.01)? - 0.044).abs());

    let moons = make_two_moons(200, 0.1, 5).map_err(err)?;
    let model = Mlp::new(
        &[2, 8, 2],
        Activation::Tanh,
        sharplab::model::LossKind::CrossEntropy,
    )
    .map_err(err)?;
    let mut r = Stream::new(3, 102);
    let theta = model.init_params(&mut r);
    let train = moons.batch(&r.choose_distinct(moons.len(), 32));
    let val = moons.batch(&r.choose_distinct(moons.len(), 32));
    let p = OneStepProblem {
        model: &model,
        theta: &theta,
        train: &train,
        val: &val,
        eta: 0.5,
    };
    let rho = 0.5;
    let reference = (4.0 * at(p, rho, 5e-4)? - at(p, rho, 1e-3)?) / 3.0;
    let e1 = (at(p, rho, 0.2)? - reference).abs();
    let e2 = (at(p, rho, 0.1)? - reference).abs();
    let ratio = e1 / e2;
    Ok(outcome(
        quad_err <= 1e-12 && (3.0..=5.0).contains(&ratio),
        format!("1D pair FD error {quad_err:.1e} (objective is quadratic in rho); mlp halving ratio {ratio:.3}"),
    ))
}

fn literal_trace() -> Result<Outcome, String> {
    let (m, tr, vl) = worked_pair();
    let mut radius = RadiusState::new(0.1, direct_plain(1.0)).map_err(err)?;
    let (theta, _) = lets_step(
        &m,
        &pv(&[1.0]),
        &mut radius,
        &tr,
        &vl,
        &mut SgdState::new(),
        &SgdConfig::plain(0.1),
        &LetsConfig::default(),
    )
    .map_err(err)?;
    let pass = (theta[0] - 0.89).abs() <= 1e-9 && (radius.rho() - 0.04676).abs() <= 1e-9;
    Ok(outcome(
        pass,
        format!("theta'={:.12} rho'={:.12}", theta[0], radius.rho()),
    ))
}

fn reductions() -> Result<Outcome, String> {
    let moons = make_two_moons(300, 0.1, 4).map_err(err)?;
    let model = Mlp::new(
        &[2, 8, 2],
        Activation::Tanh,
        sharplab::model::LossKind::CrossEntropy,
    )
    .map_err(err)?;
    let mut r = Stream::new(9, 103);
    let theta0 = model.init_params(&mut r);
    let cfg = SgdConfig::new(Schedule::constant(0.1), 0.9, 5e-4).map_err(err)?;
    let (mut a, mut b, mut c) = (theta0.clone(), theta0.clone(), theta0.clone());
    let (mut sa, mut sb, mut sc) = (SgdState::new(), SgdState::new(), SgdState::new());
    let mut sam0_sgd = true;
    let mut asam_sam = true;
    let mut s2 = theta0.clone();
    let mut ss2 = SgdState::new();
    for _ in 0..200 {
        let batch = moons.batch(&r.choose_distinct(moons.len(), 32));
        a = sharpness_step(
            &model,
            &a,
            &batch,
            0.0,
            SharpnessVariant::Sam,
            &mut sa,
            &cfg,
        )
        .map_err(err)?
        .theta;
        b = erm_step(&model, &b, &batch, &mut sb, &cfg)
            .map_err(err)?
            .theta;
        sam0_sgd &= a == b;
        c = sharpness_step(
            &model,
            &c,
            &batch,
            0.05,
            SharpnessVariant::Sam,
            &mut sc,
            &cfg,
        )
        .map_err(err)?
        .theta;
        let id = SharpnessVariant::Asam(Normalization::Identity);
        s2 = sharpness_step(&model, &s2, &batch, 0.05, id, &mut ss2, &cfg)
            .map_err(err)?
            .theta;
        asam_sam &= c == s2;
    }

    let base = "dataset.kind=two-moons\ndataset.n=400\nmodel.hidden=8\ntrain.steps=500\ntrain.batch_size=32\n\
                optimizer.rho=0.05\noptimizer.momentum=0.9\ntrain.seed=3\n";
    let mut lets_fixed = Vec::new();
    for (lets, fixed) in [("lets-sam", "sam"), ("lets-asam", "asam")] {
        let l = ExperimentConfig::parse(&format!("{base}optimizer.variant={lets}\nlets.beta=0"))
            .map_err(err)?;
        let f =
            ExperimentConfig::parse(&format!("{base}optimizer.variant={fixed}")).map_err(err)?;
        let (lo, fo) = (
            run_experiment(&l).map_err(err)?,
            run_experiment(&f).map_err(err)?,
        );
        let same_rows = lo.records.len() == 500
            && lo.records.len() == fo.records.len()
            && lo.records.iter().zip(&fo.records).all(|(x, y)| {
                let mut x = x.clone();
                x.g_rho = y.g_rho;
                x.beta = y.beta;
                x == *y
            });
        lets_fixed.push(lo.theta == fo.theta && same_rows);
    }
    let pass = sam0_sgd && asam_sam && lets_fixed.iter().all(|&x| x);
    Ok(outcome(
        pass,
        format!(
            "sam(0)==sgd {sam0_sgd}; asam(identity)==sam {asam_sam}; lets(beta=0)==fixed over 500 steps sam {} asam {}",
            lets_fixed[0], lets_fixed[1]
        ),
    ))
}

fn normalization() -> Result<Outcome, String> {
    let fc = build_normalization(&ParameterLayout::dense("w", 2), &pv(&[0.5, -2.0]), 0.01)
        .map_err(err)?;
    let conv_layout = ParameterLayout::sequential(vec![
        (
            "conv".into(),
            SegmentKind::ConvFilterGroup {
                filter_sizes: vec![2],
            },
            2,
        ),
        ("rest".into(), SegmentKind::DenseWeight, 1),
    ])
    .map_err(err)?;
    let conv = build_normalization(&conv_layout, &pv(&[3.0, 4.0, -1.0]), 0.01).map_err(err)?;
    let fixtures = fc.scale() == &pv(&[0.51, 2.01]) && conv.scale() == &pv(&[5.01, 5.01, 1.01]);

    let mut rng = Stream::new(77, 104);
    let mut floor_ok = true;
    for k in 0..100 {
        let mut parts = Vec::new();
        for s in 0..1 + rng.below(5) {
            let kind = match rng.below(3) {
                0 => SegmentKind::DenseWeight,
                1 => SegmentKind::Bias,
                _ => SegmentKind::ConvFilterGroup {
                    filter_sizes: (0..1 + rng.below(4))
                        .map(|_| 1 + rng.below(6) as usize)
                        .collect(),
                },
            };
            let len = match &kind {
                SegmentKind::ConvFilterGroup { filter_sizes } => filter_sizes.iter().sum(),
                _ => 1 + rng.below(12) as usize,
            };
            parts.push((format!("s{k}_{s}"), kind, len));
        }
        let layout = ParameterLayout::sequential(parts).map_err(err)?;
        let scale = 10f64.powf(rng.uniform_in(-3.0, 1.0));
        let theta = ParamVector::new((0..layout.dim()).map(|_| scale * rng.normal()).collect())
            .map_err(err)?;
        let xi = 10f64.powf(rng.uniform_in(-4.0, 0.0));
        let t = build_normalization(&layout, &theta, xi).map_err(err)?;
        floor_ok &= t.len() == theta.len() && t.scale().iter().all(|&v| v >= xi);
    }
    Ok(outcome(
        fixtures && floor_ok,
        format!("fixtures exact {fixtures}; entries >= xi on 100 random layouts {floor_ok}"),
    ))
}

fn perturbation_norm() -> Result<Outcome, String> {
    let mut rng = Stream::new(5, 105);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let d = 1 + rng.below(100) as usize;
        let mag = 10f64.powf(rng.uniform_in(-4.0, 4.0));
        let g = ParamVector::new((0..d).map(|_| mag * rng.normal()).collect()).map_err(err)?;
        let rho = rng.uniform_in(0.0, 2.0);
        let eps = sam_perturbation(&g, rho).map_err(err)?;
        worst = worst.max((eps.l2_norm() - rho).abs());
    }
    Ok(outcome(
        worst <= 1e-12,
        format!("max | ||eps|| - rho | = {worst:.2e} over 1000 draws"),
    ))
}

fn convergence() -> Result<Outcome, String> {
    let start = Instant::now();
    let base =
        "dataset.kind=two-moons\ndataset.n=500\nmodel.hidden=16\noptimizer.variant=lets-sam\n\
                optimizer.lr=0.1\ntrain.batch_size=32\n";
    let jobs: Vec<(u64, usize)> = (0..3u64)
        .flat_map(|s| [100usize, 400, 1600].map(|t| (s, t)))
        .collect();
    let stats: Vec<Result<f64, String>> = jobs
        .par_iter()
        .map(|&(seed, t)| {
            let c = ExperimentConfig::parse(&format!("{base}train.seed={seed}\ntrain.steps={t}"))
                .map_err(err)?;
            run_experiment(&c)
                .map(|o| o.summary.min_grad_norm_sq)
                .map_err(err)
        })
        .collect();
    let stats = stats.into_iter().collect::<Result<Vec<_>, _>>()?;
    let wins = stats.chunks(3).filter(|p| p[2] <= p[0]).count();
    let elapsed = start.elapsed();
    let pairs: Vec<String> = stats
        .chunks(3)
        .map(|p| format!("{:.2e}->{:.2e}->{:.2e}", p[0], p[1], p[2]))
        .collect();
    Ok(outcome(
        wins == 3 && elapsed < Duration::from_secs(120),
        format!(
            "min |g|^2 T=100->400->1600 per seed [{}]; {:.1}s",
            pairs.join(", "),
            elapsed.as_secs_f64()
        ),
    ))
}

fn label_noise() -> Result<Outcome, String> {
    let start = Instant::now();
    let base = "dataset.kind=blobs\ndataset.n=1000\ndataset.classes=4\ndataset.features=10\ndataset.spread=2\n\
                dataset.label_noise=0.4\nmodel.hidden=64\ntrain.epochs=60\ntrain.batch_size=32\noptimizer.lr=0.1\n";
    let jobs: Vec<(u64, &str)> = (1..=5u64)
        .flat_map(|s| {
            [
                (s, "optimizer.variant=erm"),
                (s, "optimizer.variant=lets-sam\noptimizer.rho=0.5"),
            ]
        })
        .collect();
    let runs: Vec<Result<RunSummary, String>> = jobs
        .par_iter()
        .map(|&(seed, v)| {
            let c =
                ExperimentConfig::parse(&format!("{base}{v}\ntrain.seed={seed}")).map_err(err)?;
            run_experiment(&c).map(|o| o.summary).map_err(err)
        })
        .collect();
    let runs = runs.into_iter().collect::<Result<Vec<_>, _>>()?;
    let acc = |s: &RunSummary| s.final_test_acc.unwrap_or(f64::NAN);
    let wins = runs.chunks(2).filter(|p| acc(&p[1]) >= acc(&p[0])).count();
    let pairs: Vec<String> = runs
        .chunks(2)
        .map(|p| format!("{:.3}/{:.3}", acc(&p[0]), acc(&p[1])))
        .collect();
    let elapsed = start.elapsed();
    Ok(outcome(
        wins >= 4 && elapsed < Duration::from_secs(300),
        format!(
            "erm/lets-sam clean test acc [{}]; lets >= erm in {wins}/5; {:.1}s",
            pairs.join(", "),
            elapsed.as_secs_f64()
        ),
    ))
}

fn small_config(extra: &str) -> Result<ExperimentConfig, String> {
    ExperimentConfig::parse(&format!(
        "dataset.kind=blobs\ndataset.n=400\ndataset.classes=3\nmodel.hidden=16\ntrain.epochs=5\n\
         train.batch_size=32\ntrain.seed=2\n{extra}"
    ))
    .map_err(err)
}

fn metric_sweep() -> Result<Outcome, String> {
    let dir = tempfile::tempdir().map_err(err)?;
    let cfg = small_config(&format!("output.dir={}", dir.path().display()))?;
    let table = sweep(
        &cfg,
        SweepParam::MetricKind,
        &SweepParam::MetricKind.default_values(),
    )
    .map_err(err)?;
    let names: Vec<&str> = table.rows.iter().map(|r| r.value.as_str()).collect();
    let three = names == ["val-loss", "gap", "squared-gap"];
    let complete = table
        .rows
        .iter()
        .all(|r| r.completed() == r.runs.len() && !r.runs.is_empty());
    let logged = read_metrics_csv(
        &dir.path()
            .join("metric-kind=squared-gap")
            .join("seed2")
            .join("metrics.csv"),
    )
    .map_err(err)?;
    let gap = logged.last().map(|r| r.val_gap).unwrap_or(f64::NAN);
    let summary_gap = table.rows[2]
        .final_val_gap()
        .map(|g| g.0)
        .unwrap_or(f64::NAN);
    Ok(outcome(
        three && complete && gap.is_finite() && gap == summary_gap,
        format!("rows {names:?}; all complete {complete}; squared-gap final logged gap {gap:.6}"),
    ))
}

fn rho_sweep() -> Result<Outcome, String> {
    let cfg = small_config("optimizer.variant=lets-sam")?;
    let values = SweepParam::Rho0.default_values();
    let table = sweep(&cfg, SweepParam::Rho0, &values).map_err(err)?;
    let mut ok = table.rows.len() == 7;
    let mut finals = Vec::new();
    for row in &table.rows {
        for run in &row.runs {
            match run {
                Ok(s) => {
                    ok &= s.final_rho > 1e-6 && s.final_rho < 10.0;
                    finals.push(format!("{}:{:.4}", row.value, s.final_rho));
                }
                Err(e) => {
                    ok = false;
                    finals.push(format!("{}:{e}", row.value));
                }
            }
        }
    }
    Ok(outcome(ok, format!("final rho [{}]", finals.join(", "))))
}

fn determinism() -> Result<Outcome, String> {
    let dir = tempfile::tempdir().map_err(err)?;
    let config = dir.path().join("run.cfg");
    fs::write(
        &config,
        "dataset.kind=two-moons\ndataset.n=300\nmodel.hidden=8\noptimizer.variant=lets-asam\ntrain.epochs=3\n",
    )
    .map_err(err)?;
    let mut outputs = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("out{k}"));
        let status = Command::new(env!("CARGO_BIN_EXE_sharplab"))
            .args(["train", "--config"])
            .arg(&config)
            .args(["--seed", "42", "--out"])
            .arg(&out)
            .output()
            .map_err(err)?;
        if !status.status.success() {
            return Err(String::from_utf8_lossy(&status.stderr).into_owned());
        }
        outputs.push(fs::read(out.join("metrics.csv")).map_err(err)?);
    }
    let same = outputs[0] == outputs[1] && !outputs[0].is_empty();
    Ok(outcome(
        same,
        format!(
            "two train invocations, {} bytes, identical {same}",
            outputs[0].len()
        ),
    ))
}

fn landscape() -> Result<Outcome, String> {
    let d = 12;
    let mut rng = Stream::new(8, 106);
    let curv = ParamVector::new((0..d).map(|_| rng.uniform_in(0.1, 4.0)).collect()).map_err(err)?;
    let center = ParamVector::new((0..d).map(|_| rng.normal()).collect()).map_err(err)?;
    let model = Quadratic::new(curv, center).map_err(err)?;
    let theta = ParamVector::new((0..d).map(|_| rng.normal()).collect()).map_err(err)?;
    let batch = Batch::new(vec![0.0; d], vec![0], d).map_err(err)?;
    let grid = landscape_grid(&model, &theta, &batch, 0.75, 21, 13).map_err(err)?;
    let center_err = (grid.center() - model.loss(&theta, &batch).map_err(err)?).abs();
    let ortho = grid
        .u
        .dot(&grid.v)
        .map_err(err)?
        .abs()
        .max((grid.u.l2_norm() - 1.0).abs())
        .max((grid.v.l2_norm() - 1.0).abs());

    let n = grid.resolution;
    let mut a = DMatrix::zeros(n * n, 6);
    let mut y = DVector::zeros(n * n);
    for i in 0..n {
        for j in 0..n {
            let (p, q) = (grid.alpha(i), grid.alpha(j));
            let row = i * n + j;
            for (c, v) in [1.0, p, q, p * p, p * q, q * q].into_iter().enumerate() {
                a[(row, c)] = v;
            }
            y[row] = grid.at(i, j);
        }
    }
    let coef = a.clone().svd(true, true).solve(&y, 1e-14)?;
    let residual = (&a * coef - &y).amax();

    let moons = make_two_moons(200, 0.1, 1).map_err(err)?;
    let mlp = Mlp::new(
        &[2, 8, 2],
        Activation::Tanh,
        sharplab::model::LossKind::CrossEntropy,
    )
    .map_err(err)?;
    let th = mlp.init_params(&mut rng);
    let full = moons.full_batch();
    let g2 = landscape_grid(&mlp, &th, &full, 1.0, 11, 2).map_err(err)?;
    let mlp_center = (g2.center() - mlp.loss(&th, &full).map_err(err)?).abs();
    let center_err = center_err.max(mlp_center);

    Ok(outcome(
        center_err <= 1e-6 && ortho <= 1e-10 && residual <= 1e-9,
        format!("center {center_err:.1e}; orthonormality {ortho:.1e}; quadratic fit residual {residual:.1e}"),
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, Check); 12] = [
        (
            "1  hypergradient exact mode vs closed form and fd oracle",
            hypergradient,
        ),
        ("1b fd oracle second-order accuracy", fd_order),
        ("2  literal one-step trace", literal_trace),
        ("3  bit-exact reductions", reductions),
        ("4  asam normalization operator", normalization),
        ("5  sam perturbation norm", perturbation_norm),
        ("6  convergence signature on two moons", convergence),
        ("7  label-noise directional check", label_noise),
        ("8  metric ablation structure", metric_sweep),
        ("9  rho0 robustness sweep", rho_sweep),
        ("10 determinism of train", determinism),
        ("11 landscape grid", landscape),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (name, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let (pass, detail) = match check() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
