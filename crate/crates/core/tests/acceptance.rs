//! Acceptance suite. Runs every criterion in order, prints one PASS/FAIL
//! line per criterion and exits non-zero if any failed.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::time::Instant;

use disindy::dynamics::{
    generate_trajectory, integrate_equation, sinusoid_mixture, solve_pde, SolverConfig, TrajectoryGrid,
    TrajectoryMeta,
};
use disindy::expr::{Expr, JetSpace, JetVariable, MultiIndex, ParseContext};
use disindy::harness::{
    long_term_mse, run_experiment, DiscoveryReport, ExperimentConfig, Method, Plan,
};
use disindy::invariants::{catalog_set, constants_binding, eliminate_translations, verify_set, VerifyOptions};
use disindy::jetgrid::{finite_differences, FeatureMatrix};
use disindy::liealg::{check_symmetry_criterion, prolong, VectorField};
use disindy::regress::stlsq;
use disindy::system::SystemId;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PDES: [SystemId; 4] = [SystemId::Kdv, SystemId::Ks, SystemId::Burgers, SystemId::Nkdv];

// Pinned tolerances.
const INVARIANCE_SAMPLES: usize = 1000;
const INVARIANCE_MAX: f64 = 1e-9;
const MIN_SINGULAR: f64 = 1e-8;
const RANK_FRACTION: f64 = 0.99;
const FD_RATIO: f64 = 4.0;
const FD_RATIO_TOL: f64 = 0.3;
const MASS_REL: f64 = 1e-8;
const NKDV_LINF: f64 = 1e-6;
const RUNS: usize = 10;
const RMSE_KDV_KS_NKDV: f64 = 5e-2;
const RMSE_BURGERS: f64 = 1e-3;
const NOISE: f64 = 1e-3;
const KS_DI_MIN_RATE: f64 = 0.8;
const LAMBDAS: [f64; 3] = [1e-3, 1e-2, 1e-1];
const LONG_TERM_STEPS: usize = 50;
const LONG_TERM_FACTOR: f64 = 2.0;
const ORACLE_PROBLEMS: usize = 50;
const ORACLE_MIN_MATCH: usize = 48;
const ORACLE_COEF_TOL: f64 = 1e-8;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn p(s: &str, space: &JetSpace) -> Expr {
    ParseContext::from(space).parse(s).expect("fixture parses")
}

fn main() {
    let mut failed = Vec::new();
    let mut di_reports: BTreeMap<SystemId, DiscoveryReport> = BTreeMap::new();
    let criteria: Vec<(&str, Box<dyn FnOnce(&mut BTreeMap<SystemId, DiscoveryReport>) -> Outcome>)> = vec![
        ("prolongation fixtures", Box::new(|_| prolongation_fixtures())),
        ("infinitesimal criterion", Box::new(|_| infinitesimal_criterion())),
        ("invariant catalog verification", Box::new(|_| catalog_verification())),
        ("translation elimination", Box::new(|_| translation_elimination())),
        ("finite-difference convergence", Box::new(|_| fd_convergence())),
        ("solver sanity", Box::new(|_| solver_sanity())),
        ("DI-SINDy reproduction", Box::new(reproduction)),
        ("baseline contrast under noise", Box::new(|_| baseline_contrast())),
        ("symmetry hard guarantee", Box::new(|r| hard_guarantee(r))),
        ("long-term prediction", Box::new(|r| long_term(r))),
        ("regression oracle", Box::new(|_| regression_oracle())),
    ];
    for (i, (name, run)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let o = run(&mut di_reports);
        println!(
            "criterion {:>2} {}: {name} ({:.1}s) {}",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            o.detail
        );
        if !o.pass {
            failed.push(i + 1);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria passed");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}

fn prolongation_fixtures() -> Outcome {
    let mut bad = Vec::new();
    let check = |bad: &mut Vec<String>, what: &str, got: Option<&Expr>, want: &Expr| {
        if !got.is_some_and(|g| g.simplify() == want.simplify()) {
            bad.push(format!("{what}: got {:?}", got.map(|g| g.to_string())));
        }
    };

    let plane = JetSpace::plane(1);
    let rot = VectorField::new([('x', p("-u", &plane))], [("u", p("x", &plane))]);
    let pr = prolong(&rot, &plane).unwrap();
    check(&mut bad, "SO(2) phi^x", pr.coefficient(&JetVariable::deriv("u", "x")), &p("1 + u_x^2", &plane));

    let space = JetSpace::evolution_1d(4);
    let kdv = SystemId::Kdv.generators();
    let v3 = prolong(&kdv[2], &space).unwrap();
    check(&mut bad, "KdV v3 phi^t", v3.coefficient(&JetVariable::deriv("u", "t")), &p("-u_x", &space));
    for j in ["x", "xx", "xxx", "xxxx"] {
        let c = v3.coefficient(&JetVariable::deriv("u", j)).cloned().unwrap_or_else(Expr::zero);
        if !c.is_zero() {
            bad.push(format!("KdV v3 phi^{j} = {c}"));
        }
    }
    let v1 = prolong(&kdv[0], &space).unwrap();
    if v1.as_translation() != Some('x') || v1.coeffs.values().any(|c| !c.is_zero()) {
        bad.push("KdV pr v1 is not v1".into());
    }

    let nk = SystemId::Nkdv.generators();
    let w2 = prolong(&nk[1], &space).unwrap();
    check(&mut bad, "nKdV v2 phi^t", w2.coefficient(&JetVariable::deriv("u", "t")), &p("u_t/t0*exp(-t/t0)", &space));
    let w3 = prolong(&nk[2], &space).unwrap();
    check(&mut bad, "nKdV v3 phi^t", w3.coefficient(&JetVariable::deriv("u", "t")), &p("-u_x*exp(t/t0)", &space));
    outcome(bad.is_empty(), if bad.is_empty() { "5 fixtures exact".into() } else { bad.join("; ") })
}

fn infinitesimal_criterion() -> Outcome {
    let mut bad = Vec::new();
    let mut checked = 0;
    for id in PDES {
        let f = id.equation().unwrap();
        for g in id.generators() {
            let pv = prolong(&g, &id.jet_space()).unwrap();
            let r = pv.apply(&f).unwrap().simplify();
            checked += 1;
            if !r.is_zero() {
                bad.push(format!("{id} {}: {r}", g.label));
            }
        }
    }
    outcome(bad.is_empty(), format!("{checked} generator/equation pairs, nonzero: {bad:?}"))
}

fn catalog_verification() -> Outcome {
    let mut pass = true;
    let mut lines = Vec::new();
    for id in PDES {
        let set = catalog_set(id).unwrap();
        let mut opts = VerifyOptions::default();
        opts.sampling.constants = constants_binding(&id.default_constants());
        let r = verify_set(&set, INVARIANCE_SAMPLES, 0xacce, &opts);
        let sym = r.invariance.iter().all(|i| i.symbolic_zero);
        let max = r.invariance.iter().map(|i| i.max_abs).fold(0.0, f64::max);
        let ok = r.pass && sym && max < INVARIANCE_MAX && r.full_rank_fraction >= RANK_FRACTION;
        pass &= ok;
        lines.push(format!(
            "{id}: symbolic {sym}, max|apply| {max:.1e}, full rank {:.1}% (min sv {:.2e} > {MIN_SINGULAR:e})",
            100.0 * r.full_rank_fraction,
            r.min_singular_value
        ));
    }
    outcome(pass, lines.join("; "))
}

fn translation_elimination() -> Outcome {
    let space = JetSpace::evolution_1d(4);
    let names = |c: &[JetVariable]| c.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",");
    let dx = VectorField::translation('x');
    let dt = VectorField::translation('t');
    let rows: [(Vec<VectorField>, &str); 3] = [
        (vec![], "t,x,u,u_t,u_x,u_xx,u_xxx,u_xxxx"),
        (vec![dx.clone()], "t,u,u_t,u_x,u_xx,u_xxx,u_xxxx"),
        (vec![dx, dt], "u,u_t,u_x,u_xx,u_xxx,u_xxxx"),
    ];
    let mut bad = Vec::new();
    for (gens, want) in rows {
        let (c, _) = eliminate_translations(&gens, &space).unwrap();
        if names(&c) != want {
            bad.push(format!("{} generators: {}", gens.len(), names(&c)));
        }
    }
    outcome(bad.is_empty(), if bad.is_empty() { "3 rows exact".into() } else { bad.join("; ") })
}

fn analytic_grid(nx: usize, nt: usize, dt: f64, f: impl Fn(f64, f64) -> f64) -> TrajectoryGrid {
    let l = 2.0 * PI;
    let x: Vec<f64> = (0..nx).map(|i| i as f64 * l / nx as f64).collect();
    let t: Vec<f64> = (0..nt).map(|k| k as f64 * dt).collect();
    let u = t.iter().flat_map(|&tk| x.iter().map(|&xi| f(tk, xi)).collect::<Vec<_>>()).collect();
    TrajectoryGrid {
        x,
        t,
        length: l,
        u,
        meta: TrajectoryMeta {
            system: SystemId::Kdv,
            params: BTreeMap::new(),
            ic_seed: None,
            noise_sigma: 0.0,
            noise_seed: None,
        },
    }
}

fn fd_convergence() -> Outcome {
    // u = sin(3x − 2t) + 0.5 cos(2x + t)
    let u = |t: f64, x: f64| (3.0 * x - 2.0 * t).sin() + 0.5 * (2.0 * x + t).cos();
    let dx = |m: i32, t: f64, x: f64| {
        let a = 3f64.powi(m) * (3.0 * x - 2.0 * t + m as f64 * PI / 2.0).sin();
        let b = 0.5 * 2f64.powi(m) * (2.0 * x + t + m as f64 * PI / 2.0).cos();
        a + b
    };
    let ut = |t: f64, x: f64| -2.0 * (3.0 * x - 2.0 * t).cos() - 0.5 * (2.0 * x + t).sin();
    let err = |nx: usize, dt: f64, index: &str| {
        let g = finite_differences(&analytic_grid(nx, 5, dt, u), 4).unwrap();
        let mi = MultiIndex::new(index.chars().collect());
        let d = &g.derivs[&mi];
        let mut e: f64 = 0.0;
        for r in 0..g.rows() {
            let t = g.base.t[g.t_range.0 + r];
            for i in 0..nx {
                let x = g.base.x[i];
                let exact = if index == "t" { ut(t, x) } else { dx(index.len() as i32, t, x) };
                e = e.max((d[r * nx + i] - exact).abs());
            }
        }
        e
    };
    let mut pass = true;
    let mut parts = Vec::new();
    for index in ["x", "xx", "xxx", "xxxx", "t"] {
        let ratio = if index == "t" { err(64, 0.02, index) / err(64, 0.01, index) } else { err(64, 0.1, index) / err(128, 0.1, index) };
        pass &= (ratio - FD_RATIO).abs() <= FD_RATIO_TOL;
        parts.push(format!("u_{index} {ratio:.3}"));
    }
    outcome(pass, format!("error ratios {}", parts.join(", ")))
}

fn solver_sanity() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();

    let cfg = SolverConfig::default_for(SystemId::Kdv);
    let x = cfg.x_grid();
    let ic: Vec<f64> = sinusoid_mixture(&[(1.0, 1, 0.3), (0.6, 2, 1.1)], &x, cfg.length).iter().map(|v| v + 1.0).collect();
    let tr = solve_pde(SystemId::Kdv, &ic, &cfg).unwrap();
    let mass = |k: usize| tr.row(k).iter().sum::<f64>() * tr.h();
    let m0 = mass(0);
    let drift = (0..tr.nt()).map(|k| ((mass(k) - m0) / m0).abs()).fold(0.0, f64::max);
    pass &= drift < MASS_REL;
    parts.push(format!("KdV mass drift {drift:.1e}"));

    let cfg = SolverConfig::default_for(SystemId::Nkdv);
    let ic = sinusoid_mixture(&[(1.0, 1, 0.3), (0.6, 2, 1.1)], &cfg.x_grid(), cfg.length);
    let sub = solve_pde(SystemId::Nkdv, &ic, &cfg).unwrap();
    let consts = constants_binding(&cfg.params);
    let direct = integrate_equation(&SystemId::Nkdv.equation().unwrap(), &ic, 0.0, &cfg, &consts, SystemId::Nkdv).unwrap();
    let linf = sub.u.iter().zip(&direct.u).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    pass &= linf < NKDV_LINF && sub.u.len() == direct.u.len();
    parts.push(format!("nKdV substitution vs direct L-inf {linf:.1e}"));

    let cfg = SolverConfig::default_for(SystemId::Burgers);
    let tr = generate_trajectory(SystemId::Burgers, &cfg, 7, 0.0, 0).unwrap();
    let norms: Vec<f64> = (0..tr.nt()).map(|k| tr.row(k).iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
    let rises = norms.windows(2).filter(|w| w[1] > w[0]).count();
    pass &= rises == 0;
    parts.push(format!("Burgers L2 increases {rises}/{}", norms.len() - 1));
    outcome(pass, parts.join(", "))
}

fn reproduction_config(id: SystemId) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(id, Method::DiSindy);
    cfg.runs = RUNS;
    if id == SystemId::Ks {
        // noiseless KS is sampled at twice the default spatial resolution
        cfg.solver = Some(SolverConfig { nx: 512, ..SolverConfig::default_for(id) });
    }
    if id == SystemId::Kdv {
        cfg.long_term_steps = LONG_TERM_STEPS;
    }
    cfg
}

fn reproduction(store: &mut BTreeMap<SystemId, DiscoveryReport>) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for id in PDES {
        let report = run_experiment(&reproduction_config(id)).unwrap();
        let a = &report.aggregates;
        let tol = if id == SystemId::Burgers { RMSE_BURGERS } else { RMSE_KDV_KS_NKDV };
        let rmse = a.rmse_all.unwrap_or(f64::INFINITY);
        let ok = a.successes == RUNS && rmse <= tol;
        pass &= ok;
        parts.push(format!("{id} {}/{} RMSE {rmse:.2e} (<= {tol:e})", a.successes, a.runs));
        store.insert(id, report);
    }
    outcome(pass, parts.join(", "))
}

fn noisy(id: SystemId, method: Method, lambda: Option<f64>) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(id, method);
    cfg.runs = RUNS;
    cfg.noise_sigma = NOISE;
    cfg.lambda = lambda;
    if id == SystemId::Burgers {
        // noisy Burgers is observed on every fourth grid point
        cfg.solver = Some(SolverConfig { x_stride: 4, ..SolverConfig::default_for(id) });
    }
    cfg
}

fn baseline_contrast() -> Outcome {
    let ks_sindy = run_experiment(&noisy(SystemId::Ks, Method::Sindy, None)).unwrap().aggregates;
    let ks_di = run_experiment(&noisy(SystemId::Ks, Method::DiSindy, None)).unwrap().aggregates;
    let rates: Vec<f64> = LAMBDAS
        .iter()
        .map(|&l| run_experiment(&noisy(SystemId::Burgers, Method::EquivR, Some(l))).unwrap().aggregates.success_rate)
        .collect();
    let monotone = rates.windows(2).all(|w| w[1] >= w[0]);
    let pass = ks_sindy.success_rate == 0.0 && ks_di.success_rate >= KS_DI_MIN_RATE && monotone;
    outcome(
        pass,
        format!(
            "KS SINDy {:.0}%, KS DI-SINDy {:.0}%, Burgers EquivSINDy-r over lambda {LAMBDAS:?}: {:?}%",
            100.0 * ks_sindy.success_rate,
            100.0 * ks_di.success_rate,
            rates.iter().map(|r| (100.0 * r).round()).collect::<Vec<_>>()
        ),
    )
}

fn hard_guarantee(store: &BTreeMap<SystemId, DiscoveryReport>) -> Outcome {
    let mut models = 0;
    let mut bad = Vec::new();
    for (id, report) in store {
        let consts = constants_binding(&id.default_constants());
        let pvs: Vec<_> = id.generators().iter().map(|g| prolong(g, &id.jet_space()).unwrap()).collect();
        for r in &report.runs {
            let Some(m) = &r.model else {
                bad.push(format!("{id} run {} has no model", r.index));
                continue;
            };
            models += 1;
            let f = m.equation();
            for pv in &pvs {
                let c = check_symmetry_criterion(pv, &f, None, &consts).unwrap();
                if !c.symbolic_zero {
                    bad.push(format!("{id} run {} {}: {}", r.index, c.generator, c.residual));
                }
            }
        }
    }
    let pass = bad.is_empty() && models == PDES.len() * RUNS;
    outcome(pass, format!("{models} models, violations {bad:?}"))
}

fn long_term(store: &BTreeMap<SystemId, DiscoveryReport>) -> Outcome {
    let Some(report) = store.get(&SystemId::Kdv) else {
        return outcome(false, "no KdV reproduction report");
    };
    let (Some(di), Some(reference)) = (report.long_term(), report.reference_long_term()) else {
        return outcome(false, "long-term curves missing");
    };
    let blown: usize = report.runs.iter().filter_map(|r| r.long_term.as_ref()).map(|l| l.blown_up).sum();
    let full = di.0.len() == LONG_TERM_STEPS + 1 && reference.0.len() == LONG_TERM_STEPS + 1;
    let worst = (1..di.0.len().min(reference.0.len()))
        .map(|k| di.0[k] / reference.0[k])
        .fold(0.0, f64::max);

    // exact ground-truth coefficients, for context
    let plan = Plan::new(&reproduction_config(SystemId::Kdv)).unwrap();
    let tests = plan.test_data().unwrap();
    let exact = long_term_mse(&plan.truth, &tests, LONG_TERM_STEPS, &plan.constants);
    let pass = full && blown == 0 && worst <= LONG_TERM_FACTOR;
    outcome(
        pass,
        format!(
            "max per-step ratio to the finite-difference truth floor {worst:.3} (<= {LONG_TERM_FACTOR}); \
             step {LONG_TERM_STEPS} MSE: DI-SINDy {:.2e}, floor {:.2e}, exact coefficients {:.2e}",
            di.0.last().unwrap_or(&f64::NAN),
            reference.0.last().unwrap_or(&f64::NAN),
            exact.mse.last().unwrap_or(&f64::NAN)
        ),
    )
}

/// `argmin_S RSS_S / N + threshold² · |S|` over all supports.
fn best_subset(x: &DMatrix<f64>, y: &DVector<f64>, threshold: f64) -> (Vec<bool>, DVector<f64>) {
    let (n, k) = x.shape();
    let mut best = (f64::INFINITY, vec![false; k], DVector::zeros(k));
    for bits in 0u32..(1 << k) {
        let cols: Vec<usize> = (0..k).filter(|j| bits >> j & 1 == 1).collect();
        let mut w = DVector::zeros(k);
        let rss = if cols.is_empty() {
            y.norm_squared()
        } else {
            let xs = x.select_columns(&cols);
            let ws = (xs.transpose() * &xs).cholesky().unwrap().solve(&(xs.transpose() * y));
            for (c, j) in cols.iter().enumerate() {
                w[*j] = ws[c];
            }
            (y - &xs * &ws).norm_squared()
        };
        let score = rss / n as f64 + threshold * threshold * cols.len() as f64;
        if score < best.0 {
            best = (score, (0..k).map(|j| bits >> j & 1 == 1).collect(), w);
        }
    }
    (best.1, best.2)
}

fn regression_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let threshold = 0.5;
    let (mut matched, mut coef_ok, mut scored) = (0, true, 0);
    let mut worst_coef: f64 = 0.0;
    while scored < ORACLE_PROBLEMS {
        let k = rng.random_range(3..=8);
        let active = rng.random_range(1..=3.min(k));
        let n = 200;
        let x = DMatrix::from_fn(n, k, |_, _| {
            let g: f64 = rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng);
            g
        });
        let sv = x.clone().singular_values();
        if sv.max() / sv.min() > 3.0 {
            continue;
        }
        scored += 1;
        let mut w = DVector::zeros(k);
        let mut idx: Vec<usize> = (0..k).collect();
        for a in 0..active {
            let j = rng.random_range(a..k);
            idx.swap(a, j);
            let mag = rng.random_range(0.3..2.0);
            w[idx[a]] = if rng.random_bool(0.5) { mag } else { -mag };
        }
        let noise = DVector::from_fn(n, |_, _| {
            let g: f64 = rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng);
            0.05 * g
        });
        let y = &x * &w + noise;

        let fm = FeatureMatrix {
            columns: (0..k).map(|j| Expr::named(&format!("f{j}"))).collect(),
            target_expr: Expr::named("y"),
            values: (0..n).flat_map(|r| (0..k).map(move |j| (r, j))).map(|(r, j)| x[(r, j)]).collect(),
            target: y.iter().copied().collect(),
            points: (0..n).map(|r| (0, r, 0)).collect(),
            dropped: 0,
        };
        let model = stlsq(&fm, threshold, 20).unwrap();
        let (mask, coef) = best_subset(&x, &y, threshold);
        if model.mask == mask {
            matched += 1;
            let d = model.weights().iter().zip(coef.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            worst_coef = worst_coef.max(d);
            coef_ok &= d <= ORACLE_COEF_TOL;
        }
    }
    outcome(
        matched >= ORACLE_MIN_MATCH && coef_ok,
        format!("supports match {matched}/{ORACLE_PROBLEMS} (>= {ORACLE_MIN_MATCH}), max coefficient gap {worst_coef:.1e}"),
    )
}
