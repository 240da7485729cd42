//! One dispatcher per subcommand. Each reads its typed parameters, calls the
//! library and turns the result into metrics, checks and CSV tables.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use soliton_lab::flow::{
    run_decay_experiment, run_translating_verification, DecayConfig, Perturbation, TranslatingConfig,
};
use soliton_lab::grid::{FieldRole, GridSpec, ScalarField};
use soliton_lab::legendre::{
    conjugate, dual_grid_for, dual_pde_residual, hessian_duality_check, involution_check, NodeStatus,
};
use soliton_lab::linalg::{Mat, Point, SymMat};
use soliton_lab::ode1d::{exact_symmetric_solution, solve_ivp, symmetry_residual, Ode1dParams};
use soliton_lab::soliton::{
    check_symmetry, eigen_growth_margin, make_quadratic_soliton, pde_residual, radial_psi, FlowNormalization,
    QuadraticForm, RadialProfile, RotationSymmetry,
};

use crate::params::{opt, optional, CliError, Opt, Params, Result};
use crate::report::{Check, Relation, Report, Table};

pub struct Experiment {
    pub name: &'static str,
    pub about: &'static str,
    pub options: &'static [Opt],
    pub run: fn(&Params) -> Result<Report>,
}

pub static EXPERIMENTS: &[Experiment] = &[
    Experiment {
        name: "soliton-check",
        about: "Residual of the soliton equation for a quadratic solution",
        options: SOLITON_OPTS,
        run: soliton_check,
    },
    Experiment {
        name: "flow-verify",
        about: "Compare the explicit flow with the exact translating solution",
        options: FLOW_OPTS,
        run: flow_verify,
    },
    Experiment {
        name: "decay",
        about: "Third-derivative decay of a perturbed quadratic on the torus",
        options: DECAY_OPTS,
        run: decay,
    },
    Experiment {
        name: "legendre-check",
        about: "Discrete Legendre transform and duality checks",
        options: LEGENDRE_OPTS,
        run: legendre_check,
    },
    Experiment {
        name: "rigidity",
        about: "Symmetry, eigenvalue growth and radial invariant diagnostics",
        options: RIGIDITY_OPTS,
        run: rigidity,
    },
    Experiment { name: "ode1d", about: "Integrate the one-dimensional soliton ODE", options: ODE_OPTS, run: ode1d },
];

pub fn find(name: &str) -> Option<&'static Experiment> {
    EXPERIMENTS.iter().find(|e| e.name == name)
}

const NORMALIZATION: Opt = opt("normalization", "unit", "Flow factor: unit (nu = 1) or inverse-dimension (nu = 1/n)");

static SOLITON_OPTS: &[Opt] = &[
    opt("Q", "1,0,0,2", "Hessian matrix, row-major"),
    opt("a", "1,1", "Translation vector"),
    optional("p", "Linear term of the quadratic [default: 0]"),
    opt("grid", "129", "Nodes per axis"),
    opt("box", "-3,3", "Domain interval per axis"),
    NORMALIZATION,
    opt("random", "0", "Number of random quadratic solitons instead of the fixed one"),
    opt("seed", "20", "Seed for random draws"),
    opt("eig-range", "0.2,5", "Eigenvalue range of random Q"),
    opt("a-max", "2", "Bound on |a| for random draws"),
    opt("tol", "1e-9", "Tolerance on the sup residual"),
];

static FLOW_OPTS: &[Opt] = &[
    opt("Q", "1,0,0,2", "Hessian matrix, row-major"),
    opt("a", "1,1", "Translation vector"),
    optional("p", "Linear term of the quadratic [default: 0]"),
    opt("T", "0.5", "Final time"),
    opt("grid", "65", "Nodes per axis"),
    opt("box", "-1,1", "Domain interval per axis"),
    opt("safety", "0.5", "Fraction of the stable time step"),
    NORMALIZATION,
    opt("tol", "1e-8", "Tolerance on the sup error"),
];

static DECAY_OPTS: &[Opt] = &[
    opt("Q", "1,0,0,1", "Background Hessian, row-major"),
    opt("eps", "0.05", "Amplitude of the sin x sin y perturbation"),
    opt("T", "2", "Final time"),
    opt("eps0", "0.1", "Start of the monitored window"),
    opt("grid", "128", "Nodes per period"),
    opt("samples", "201", "Number of sample times"),
    opt("period", "6.283185307179586", "Torus side length"),
    opt("safety", "0.5", "Fraction of the stable time step"),
    NORMALIZATION,
    opt("tol-ratio", "1.05", "Bound on C* over the initial window maximum"),
    opt("tol-drift", "1e-3", "Bound on the drift of the Hessian bounds"),
    opt("slack", "1e-12", "Allowed increase of sup|D3u|^2 per step"),
];

static LEGENDRE_OPTS: &[Opt] = &[
    opt("Q", "1,0,0,2", "Hessian matrix, row-major"),
    opt("a", "1,1", "Translation vector"),
    optional("p", "Linear term of the quadratic [default: 0]"),
    opt("grid", "65", "Nodes per axis of the primal grid"),
    opt("box", "-3,3", "Primal domain interval per axis"),
    opt("dual-nodes", "65", "Nodes per axis of the dual grid"),
    optional("symmetry-order", "Also check invariance of u* under the rotation of this order"),
    NORMALIZATION,
    opt("tol-hessian", "1e-6", "Tolerance on |D2u* D2u - I|"),
    opt("tol-dual", "1e-6", "Tolerance on the dual equation residual"),
    opt("tol-involution", "1e-5", "Tolerance on |u** - u|"),
    opt("tol-symmetry", "1e-6", "Tolerance on the dual symmetry deviation"),
];

static RIGIDITY_OPTS: &[Opt] = &[
    opt("field", "quadratic", "quadratic (x^T Q x / 2) or quartic (|x|^4 / 4)"),
    opt("Q", "1,0,0,1", "Hessian of the quadratic field, row-major"),
    opt("a", "1,0", "Translation vector for the growth threshold"),
    opt("order", "3", "Rotation order of the symmetry"),
    optional("A", "Orthogonal symmetry matrix, row-major; overrides --order"),
    opt("grid", "101", "Nodes per axis"),
    opt("box", "-5,5", "Domain interval per axis"),
    opt("orbit", "0.5,4.5", "Radii of the symmetry sample annulus"),
    opt("annulus", "3,4", "Radii of the growth annulus"),
    opt("radial", "1,2", "Radius interval for the radial invariant"),
    opt("radial-nodes", "1001", "Samples of the radial profile"),
    opt("n", "2", "Dimension used in the radial invariant"),
    optional("tol-symmetry", "Tolerance on the symmetry deviation [default: 4h^2]"),
    opt("tol-psi", "1e-8", "Tolerance on the radial invariant variation"),
];

static ODE_OPTS: &[Opt] = &[
    opt("a0", "1", "Coefficient of u' in the exponent"),
    opt("b0", "2", "Coefficient of t in the exponent"),
    opt("t0", "0", "Initial time"),
    opt("u-min", "0", "Initial value u(t0)"),
    optional("c", "Constant in the exponent [default: ln(b0/a0) - b0 t0]"),
    opt("du0", "0", "Initial slope u'(t0)"),
    optional("span", "Integration interval [default: t0-2,t0+2]"),
    opt("dt", "1e-3", "Step size"),
    opt("tol-error", "1e-8", "Tolerance on the error against the parabola"),
    opt("tol-symmetry", "1e-8", "Tolerance on the symmetry residual"),
];

fn normalization(p: &Params) -> Result<FlowNormalization> {
    match p.string("normalization")?.as_str() {
        "unit" => Ok(FlowNormalization::Unit),
        "inverse-dimension" => Ok(FlowNormalization::InverseDimension),
        other => Err(CliError::Invalid(format!(
            "invalid value for `normalization`: expected unit or inverse-dimension, got {other:?}"
        ))),
    }
}

/// `Q` with `dim²` entries, `dim` inferred when not given.
fn matrix(p: &Params, key: &str, dim: Option<usize>) -> Result<SymMat> {
    let v = p.list(key)?;
    let dim = match (dim, v.len()) {
        (Some(d), _) => d,
        (None, 1) => 1,
        (None, 4) => 2,
        (None, n) => {
            return Err(CliError::Invalid(format!("invalid value for `{key}`: expected 1 or 4 entries, got {n}")))
        }
    };
    Ok(SymMat::from_row_major(&v, dim)?)
}

fn linear_term(p: &Params, dim: usize) -> Result<Vec<f64>> {
    match p.opt_list("p")? {
        Some(v) if v.len() != dim => {
            Err(CliError::Invalid(format!("invalid value for `p`: expected {dim} entries, got {}", v.len())))
        }
        Some(v) => Ok(v),
        None => Ok(vec![0.0; dim]),
    }
}

fn positive(p: &Params, key: &str) -> Result<f64> {
    let v = p.f64(key)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(CliError::Invalid(format!("invalid value for `{key}`: must be > 0, got {v}")))
    }
}

fn point_2d(x: &Point, dim: usize) -> (f64, f64) {
    (x[0], if dim > 1 { x[1] } else { 0.0 })
}

fn residual_sup(field: &ScalarField, form_params: &soliton_lab::soliton::SolitonParams) -> Result<(f64, usize, Table)> {
    let report = pde_residual(field, form_params)?;
    let grid = field.grid();
    let mut table = Table::new("residual.csv", &["x", "y", "residual"]);
    for (node, r) in report.residual.iter() {
        let (x, y) = point_2d(&grid.point(node), grid.dim());
        table.push(vec![x, y, *r]);
    }
    Ok((report.sup, report.overflow_nodes.len(), table))
}

fn soliton_check(p: &Params) -> Result<Report> {
    let mut out = Report::default();
    let nodes = p.usize("grid")?;
    let (lo, hi) = p.interval("box")?;
    let norm = normalization(p)?;
    let tol = p.f64("tol")?;
    let draws = p.usize("random")?;

    if draws == 0 {
        let a = p.list("a")?;
        let q = matrix(p, "Q", Some(a.len()))?;
        let lin = linear_term(p, a.len())?;
        let (form, params) = make_quadratic_soliton(q, &lin, &a, norm)?;
        let field = form.sample(GridSpec::cube(a.len(), lo, hi, nodes)?)?;
        let (sup, overflow, table) = residual_sup(&field, &params)?;
        out.metric("b", params.b()[..params.dim()].to_vec());
        out.metric("c", params.c());
        out.metric("sup_residual", sup);
        out.metric("overflow_nodes", overflow);
        out.check(Check::flag("no_overflow", overflow == 0));
        out.check(Check::bound("sup_residual", sup, Relation::AtMost, tol));
        out.tables.push(table);
        return Ok(out);
    }

    let seed = p.u64("seed")?;
    let (eig_lo, eig_hi) = p.interval("eig-range")?;
    if eig_lo <= 0.0 {
        return Err(CliError::Invalid(format!("invalid value for `eig-range`: eigenvalues must be > 0, got {eig_lo}")));
    }
    let a_max = p.f64("a-max")?;
    if a_max < 0.0 {
        return Err(CliError::Invalid(format!("invalid value for `a-max`: must be >= 0, got {a_max}")));
    }
    let grid = GridSpec::cube(2, lo, hi, nodes)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut table = Table::new("draws.csv", &["draw", "lambda1", "lambda2", "theta", "a1", "a2", "sup_residual"]);
    let (mut worst, mut overflow) = (0.0_f64, 0);
    for k in 0..draws {
        let l0: f64 = rng.gen_range(eig_lo..=eig_hi);
        let l1: f64 = rng.gen_range(eig_lo..=eig_hi);
        let th: f64 = rng.gen_range(0.0..PI);
        let (s, c) = th.sin_cos();
        let q = SymMat::new_2d(l0 * c * c + l1 * s * s, (l0 - l1) * s * c, l0 * s * s + l1 * c * c);
        let r: f64 = rng.gen_range(0.0..=a_max);
        let phi: f64 = rng.gen_range(0.0..2.0 * PI);
        let a = [r * phi.cos(), r * phi.sin()];
        let lin = [rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)];
        let (form, params) = make_quadratic_soliton(q, &lin, &a, norm)?;
        let report = pde_residual(&form.sample(grid.clone())?, &params)?;
        overflow += report.overflow_nodes.len();
        worst = worst.max(report.sup);
        table.push(vec![k as f64, l0, l1, th, a[0], a[1], report.sup]);
    }
    out.metric("draws", draws);
    out.metric("sup_residual", worst);
    out.metric("overflow_nodes", overflow);
    out.check(Check::flag("no_overflow", overflow == 0));
    out.check(Check::bound("sup_residual", worst, Relation::AtMost, tol));
    out.tables.push(table);
    Ok(out)
}

fn flow_verify(p: &Params) -> Result<Report> {
    let a = p.list("a")?;
    let q = matrix(p, "Q", Some(a.len()))?;
    let mut cfg = TranslatingConfig::new(q, &a, p.f64("T")?, p.usize("grid")?);
    cfg.p = linear_term(p, a.len())?;
    cfg.extent = p.interval("box")?;
    cfg.safety = positive(p, "safety")?;
    cfg.normalization = normalization(p)?;
    let tol = p.f64("tol")?;

    let report = run_translating_verification(&cfg)?;
    let mut out = Report::default();
    out.metric("sup_error", report.sup_error);
    out.metric("dt", report.dt);
    out.metric("steps", report.steps);
    out.check(Check::bound("sup_error", report.sup_error, Relation::AtMost, tol));
    let mut table = Table::new("errors.csv", &["t", "sup_error"]);
    for (t, e) in report.errors {
        table.push(vec![t, e]);
    }
    out.tables.push(table);
    Ok(out)
}

fn decay(p: &Params) -> Result<Report> {
    let q = matrix(p, "Q", None)?;
    let mut cfg = DecayConfig::new(q, Perturbation::sin_product(p.f64("eps")?), p.f64("T")?, p.usize("grid")?);
    cfg.eps0 = positive(p, "eps0")?;
    cfg.samples = p.usize("samples")?;
    cfg.period = positive(p, "period")?;
    cfg.safety = positive(p, "safety")?;
    cfg.normalization = normalization(p)?;
    let tol_ratio = p.f64("tol-ratio")?;
    let tol_drift = p.f64("tol-drift")?;
    let slack = p.f64("slack")?;

    let trace = run_decay_experiment(&cfg)?;
    let (drift_lo, drift_hi) = trace.condition_s_drift();
    let window = trace.initial_window_max();
    let mut out = Report::default();
    out.metric("c_star", trace.c_star());
    out.metric("initial_window_max", window);
    out.metric("max_increase_after_eps0", trace.max_increase_after_eps0());
    out.metric("lambda_min_drift", drift_lo);
    out.metric("lambda_max_drift", drift_hi);
    out.metric("steps", trace.steps);
    out.check(Check::flag("non_increasing_after_eps0", trace.non_increasing_after_eps0(slack)));
    out.check(Check::bound("c_star", trace.c_star(), Relation::AtMost, tol_ratio * window));
    out.check(Check::bound("lambda_min_drift", drift_lo, Relation::AtMost, tol_drift));
    out.check(Check::bound("lambda_max_drift", drift_hi, Relation::AtMost, tol_drift));

    let mut table = Table::new("decay.csv", &["t", "sup_D3u_sq", "t_times_sup", "lambda_min", "lambda_max"]);
    for (k, tts) in trace.t_times_sup().into_iter().enumerate() {
        table.push(vec![trace.times[k], trace.sup_d3_sq[k], tts, trace.lambda_min[k], trace.lambda_max[k]]);
    }
    out.tables.push(table);
    Ok(out)
}

fn legendre_check(p: &Params) -> Result<Report> {
    let a = p.list("a")?;
    let q = matrix(p, "Q", Some(a.len()))?;
    let lin = linear_term(p, a.len())?;
    let nodes = p.usize("grid")?;
    let (lo, hi) = p.interval("box")?;
    let dual_nodes = p.usize("dual-nodes")?;
    let order = p.opt_f64("symmetry-order")?;
    let norm = normalization(p)?;
    let tols = [p.f64("tol-hessian")?, p.f64("tol-dual")?, p.f64("tol-involution")?];

    let (form, params) = make_quadratic_soliton(q, &lin, &a, norm)?;
    let u = form.sample(GridSpec::cube(a.len(), lo, hi, nodes)?)?;
    let pair = conjugate(&u, &dual_grid_for(&u, dual_nodes)?)?;
    let hess = hessian_duality_check(&pair)?;
    let dual = dual_pde_residual(&pair, &params)?;
    let inv = involution_check(&u, None)?;

    let mut out = Report::default();
    out.metric("flagged_nodes", pair.flagged_count());
    out.metric("hessian_duality", hess.sup);
    out.metric("dual_residual", dual.sup);
    out.metric("dual_overflow_nodes", dual.overflow_nodes.len());
    out.metric("involution", inv.sup);
    out.check(Check::bound("hessian_duality", hess.sup, Relation::AtMost, tols[0]));
    out.check(Check::flag("no_overflow", dual.overflow_nodes.is_empty()));
    out.check(Check::bound("dual_residual", dual.sup, Relation::AtMost, tols[1]));
    out.check(Check::bound("involution", inv.sup, Relation::AtMost, tols[2]));

    let g = pair.dual().grid();
    if let Some(order) = order {
        if order.fract() != 0.0 || order < 1.0 {
            return Err(CliError::Invalid(format!(
                "invalid value for `symmetry-order`: expected a positive integer, got {order}"
            )));
        }
        let tol = p.f64("tol-symmetry")?;
        let sym = RotationSymmetry::rotation_of_order(order as usize)?;
        let samples: Vec<Point> = (0..g.len()).map(|k| g.point(g.node(k))).collect();
        let dev = check_symmetry(pair.dual(), &sym, &samples)?.max_deviation;
        out.metric("dual_symmetry", dev);
        out.check(Check::bound("dual_symmetry", dev, Relation::AtMost, tol));
    }

    let mut table = Table::new("dual.csv", &["x", "y", "u_star", "status"]);
    for k in 0..g.len() {
        let node = g.node(k);
        let (x, y) = point_2d(&g.point(node), g.dim());
        let status = match pair.status(node) {
            NodeStatus::Matched => 0.0,
            NodeStatus::OutsideRange => 1.0,
            NodeStatus::NotConverged => 2.0,
        };
        table.push(vec![x, y, pair.dual().at(node), status]);
    }
    out.tables.push(table);
    Ok(out)
}

fn rigidity(p: &Params) -> Result<Report> {
    let kind = p.string("field")?;
    let u: Box<dyn Fn(&Point) -> f64> = match kind.as_str() {
        "quadratic" => {
            let q = matrix(p, "Q", Some(2))?;
            let form = QuadraticForm::new(q, &[0.0, 0.0], 0.0)?;
            Box::new(move |x| form.value(x))
        }
        "quartic" => Box::new(|x| (x[0] * x[0] + x[1] * x[1]).powi(2) / 4.0),
        other => {
            return Err(CliError::Invalid(format!(
                "invalid value for `field`: expected quadratic or quartic, got {other:?}"
            )))
        }
    };
    let a = p.vector("a", 2)?;
    let sym = if p.is_set("A") {
        RotationSymmetry::from_matrix(Mat::from_row_major(&p.vector("A", 4)?, 2)?)?
    } else {
        RotationSymmetry::rotation_of_order(p.usize("order")?)?
    };
    let nodes = p.usize("grid")?;
    let (lo, hi) = p.interval("box")?;
    let (r_lo, r_hi) = p.interval("orbit")?;
    let annulus = p.interval("annulus")?;
    let (rad_lo, rad_hi) = p.interval("radial")?;
    let rad_nodes = p.usize("radial-nodes")?;
    let n = p.usize("n")?;
    let tol_psi = p.f64("tol-psi")?;

    let grid = GridSpec::cube(2, lo, hi, nodes)?;
    let h = grid.spacing(0);
    let tol_sym = p.opt_f64("tol-symmetry")?.unwrap_or(4.0 * h * h);
    let field = ScalarField::from_fn(grid, FieldRole::FullPotential, |x| u(x))?;
    let report = check_symmetry(&field, &sym, &sym.orbit_samples(r_lo, r_hi, 9, 12))?;

    let mut out = Report::default();
    out.metric("symmetry_deviation", report.max_deviation);
    out.metric("order", report.order);
    out.metric("order_at_least_three", report.order_at_least_three);
    out.check(Check::bound("symmetry_deviation", report.max_deviation, Relation::AtMost, tol_sym));
    if report.order_at_least_three {
        let margin = eigen_growth_margin(&field, &a, report.order, annulus)?;
        out.metric("growth_infimum", margin.infimum);
        out.metric("growth_threshold", margin.threshold);
        out.metric("growth_margin", margin.margin);
    }

    // pad by one spacing so the centered differences cover the interval
    if rad_nodes < 3 {
        return Err(CliError::Invalid(format!("invalid value for `radial-nodes`: need at least 3, got {rad_nodes}")));
    }
    let dr = (rad_hi - rad_lo) / (rad_nodes - 1) as f64;
    let profile = RadialProfile::sample(rad_lo - dr, rad_hi + dr, rad_nodes + 2, |r| u(&[r, 0.0]))?;
    let psi = radial_psi(&profile, n)?;
    out.metric("psi_variation", psi.variation);
    out.check(Check::bound("psi_variation", psi.variation, Relation::AtMost, tol_psi));
    let mut table = Table::new("psi.csv", &["r", "psi"]);
    for (r, v) in psi.r.iter().zip(&psi.psi) {
        table.push(vec![*r, *v]);
    }
    out.tables.push(table);
    Ok(out)
}

fn ode1d(p: &Params) -> Result<Report> {
    let (a0, b0, t0, u_min) = (p.f64("a0")?, p.f64("b0")?, p.f64("t0")?, p.f64("u-min")?);
    let symmetric = Ode1dParams::symmetric(a0, b0, t0, u_min)?;
    let params = match p.opt_f64("c")? {
        Some(c) => symmetric.with_c(c)?,
        None => symmetric,
    };
    let du0 = p.f64("du0")?;
    let span = match p.opt_list("span")? {
        Some(_) => p.interval("span")?,
        None => (t0 - 2.0, t0 + 2.0),
    };
    if !(span.0 <= t0 && t0 <= span.1) {
        return Err(CliError::Invalid(format!("invalid value for `span`: must contain t0 = {t0}")));
    }
    let dt = positive(p, "dt")?;
    let tol_error = p.f64("tol-error")?;
    let tol_sym = p.f64("tol-symmetry")?;

    let profile = solve_ivp(&params, u_min, du0, span, dt)?;
    let k = b0 / a0;
    let parabola = |t: f64| 0.5 * k * (t - t0).powi(2) + u_min;
    let error = profile.max_error(parabola);
    let mut out = Report::default();
    out.metric("c", params.c());
    out.metric("steps", profile.len() - 1);
    out.metric("max_error", error);
    out.metric("min_second_derivative", profile.min_second_derivative(&params));
    out.check(Check::bound("min_second_derivative", profile.min_second_derivative(&params), Relation::Above, 0.0));

    // the parabola only solves the problem for the compatible constant and a flat start
    if params.c() == symmetric.c() && du0 == 0.0 {
        let halved = solve_ivp(&params, u_min, du0, span, 0.5 * dt)?.max_error(parabola);
        out.metric("halved_dt_error", halved);
        out.metric("error_ratio", error / halved);
        out.check(Check::bound("max_error", error, Relation::AtMost, tol_error));
        if ((t0 - span.0) - (span.1 - t0)).abs() <= 1e-9 * (span.1 - span.0) {
            let (exact, _) = exact_symmetric_solution(a0, b0, t0, u_min, span, profile.len())?;
            out.metric("exact_symmetry_residual", symmetry_residual(&exact, t0)?);
            let sym = symmetry_residual(&profile, t0)?;
            out.metric("symmetry_residual", sym);
            out.check(Check::bound("symmetry_residual", sym, Relation::AtMost, tol_sym));
        }
    }

    let mut table = Table::new("profile.csv", &["t", "u", "du", "u_exact", "error"]);
    for i in 0..profile.len() {
        let (t, u) = (profile.t[i], profile.u[i]);
        table.push(vec![t, u, profile.du[i], parabola(t), u - parabola(t)]);
    }
    out.tables.push(table);
    Ok(out)
}
