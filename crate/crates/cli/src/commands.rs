//! One function per subcommand.

use entropy_lab::boundary::{
    cylinder_table, density_entropy, simulate_hitting, solve_q, CylinderDensity, DEFAULT_Q_TOL,
};
use entropy_lab::experiments::{minimize_check, three_route_entropy, MinimizeConfig};
use entropy_lab::green::{
    abel_entropy, kv_entropy_rate, lattice_abel_entropy, lazy_lattice_walk, mu_a_mass,
    simple_lattice_walk, solve_first_passage, sweep_a, DEFAULT_GREEN_TOL,
};
use entropy_lab::group::enumerate_ball;
use entropy_lab::measure::{abel_sum_truncated_within, GeneratorMeasure};
use entropy_lab::tmap::{t_forward, t_forward_report, t_inverse_report, DEFAULT_INVERSE_TOL};
use serde::Serialize;
use serde_json::json;

use crate::config::Params;
use crate::error::CliError;
use crate::report::{to_value, Outcome};

pub const COMMANDS: [&str; 11] = [
    "qsolve",
    "boundary-entropy",
    "criterion",
    "tmap",
    "tmap-inv",
    "sweep",
    "amenable",
    "kv",
    "walk-sim",
    "oracle-abel",
    "minimize-check",
];

const DEFAULT_A_LIST: [f64; 3] = [0.9, 0.99, 0.999];
const CRITERION_SPREAD_TOL: f64 = 1e-10;
const MINIMUM_SLACK: f64 = 1e-12;

pub fn dispatch(command: &str, params: &Params) -> Result<Outcome, CliError> {
    match command {
        "qsolve" => qsolve(params),
        "boundary-entropy" => boundary_entropy(params),
        "criterion" => criterion(params),
        "tmap" => tmap(params),
        "tmap-inv" => tmap_inv(params),
        "sweep" => sweep(params),
        "amenable" => amenable(params),
        "kv" => kv(params),
        "walk-sim" => walk_sim(params),
        "oracle-abel" => oracle_abel(params),
        "minimize-check" => minimize(params),
        other => Err(CliError::Validation(format!(
            "unknown command {other:?} (expected one of {})",
            COMMANDS.join(", ")
        ))),
    }
}

fn qsolve(params: &Params) -> Result<Outcome, CliError> {
    let p = params.walk()?;
    let tol = params.positive_tol(DEFAULT_Q_TOL)?;
    let bp = solve_q(&p, tol)?;
    Outcome::single(&bp, json!({ "residual": bp.residual(), "tol": tol }))
}

fn boundary_entropy(params: &Params) -> Result<Outcome, CliError> {
    let p = params.walk()?;
    let lambda = params.weights()?.unwrap_or_else(|| p.clone());
    let f = params.divergence()?;
    let bp = solve_q(&p, DEFAULT_Q_TOL)?;
    let value = bp.boundary_entropy(&lambda, &f);
    let unit = density_entropy(&CylinderDensity::unit(&bp, 1)?, &lambda, &f)?;
    let routes = match params.paths {
        Some(paths) => Some(three_route_entropy(
            &p,
            &lambda,
            &f,
            paths,
            params.seed.unwrap_or(0),
        )?),
        None => None,
    };
    let result = json!({
        "value": value,
        "f": f.name(),
        "lambda": lambda.as_slice(),
        "q": bp.q_values(),
        "v": bp.v_values(),
        "unit_density": unit,
        "routes": routes,
    });
    Outcome::single(
        result,
        json!({
            "q_residual": bp.residual(),
            "unit_density_gap": (unit - value).abs(),
            "monte_carlo_stderr": routes.as_ref().map(|r| r.monte_carlo_stderr),
        }),
    )
}

fn criterion(params: &Params) -> Result<Outcome, CliError> {
    let p = params.walk()?;
    let f = params.divergence()?;
    let lambda = match params.weights()? {
        Some(l) => l,
        None => t_forward(&p, &f)?,
    };
    let bp = solve_q(&p, DEFAULT_Q_TOL)?;
    let values = bp.criterion_values(&lambda, &f)?;
    let spread = bp.criterion_spread(&lambda, &f)?;
    let result = json!({
        "lambda": lambda.as_slice(),
        "f": f.name(),
        "values": values,
        "spread": spread,
        "minimizing": spread < CRITERION_SPREAD_TOL,
    });
    Outcome::single(
        result,
        json!({ "q_residual": bp.residual(), "spread_tol": CRITERION_SPREAD_TOL }),
    )
}

fn tmap(params: &Params) -> Result<Outcome, CliError> {
    let p = params.walk()?;
    let f = params.divergence()?;
    let report = t_forward_report(&p, &f)?;
    let spread = report.residual;
    Outcome::single(report, json!({ "criterion_spread": spread }))
}

fn tmap_inv(params: &Params) -> Result<Outcome, CliError> {
    let lambda = match (params.weights()?, params.uniform) {
        (Some(_), true) => {
            return Err(CliError::Validation(
                "give either lambda or uniform, not both".into(),
            ))
        }
        (Some(l), false) => l,
        (None, true) => GeneratorMeasure::uniform(params.rank()?)?,
        (None, false) => return Err(CliError::Validation("lambda or uniform is required".into())),
    };
    let f = params.divergence()?;
    let tol = params.positive_tol(DEFAULT_INVERSE_TOL)?;
    let report = t_inverse_report(&lambda, &f, tol)?;
    let residual = report.residual;
    Outcome::single(report, json!({ "residual": residual, "tol": tol }))
}

fn sweep(params: &Params) -> Result<Outcome, CliError> {
    let p = params.walk()?;
    let lambda = params.weights()?.unwrap_or_else(|| p.clone());
    let f = params.divergence()?;
    let a_list = params.a_list(&DEFAULT_A_LIST)?;
    let table = sweep_a(&p, &lambda, &f, &a_list)?;
    let worst = table
        .rows
        .iter()
        .map(|r| r.residual_mass_identity)
        .fold(0.0, f64::max);
    let below_floor = table.floor.map(|floor| {
        table
            .rows
            .iter()
            .filter(|r| r.h_group < floor - MINIMUM_SLACK)
            .count()
    });
    Outcome::table(
        &table.rows,
        to_value(&table)?,
        json!({
            "first_passage_tol": DEFAULT_GREEN_TOL,
            "max_residual_mass_identity": worst,
            "rows_below_floor": below_floor,
        }),
    )
}

#[derive(Debug, Serialize)]
struct AmenableRow {
    a: f64,
    value: f64,
    terms: usize,
    tail_bound: f64,
    bias_bound: f64,
    interior_mass: f64,
    shell_mass: f64,
}

fn amenable(params: &Params) -> Result<Outcome, CliError> {
    let dim = params.dim.unwrap_or(1);
    if !(dim == 1 || dim == 2) {
        return Err(CliError::Validation(format!("dim must be 1 or 2, got {dim}")));
    }
    let f = params.divergence()?;
    let a_list = params.a_list(&DEFAULT_A_LIST)?;
    let eps = params.unit_eps(1e-6)?;
    let mu = lazy_lattice_walk(dim);
    let lambda = simple_lattice_walk(dim);
    let rows = a_list
        .iter()
        .map(|&a| {
            let out = lattice_abel_entropy(dim, &mu, &lambda, &f, a, eps)?;
            Ok(AmenableRow {
                a,
                value: out.value,
                terms: out.terms,
                tail_bound: out.tail_bound,
                bias_bound: out.bias_bound,
                interior_mass: out.interior_mass,
                shell_mass: out.shell_mass,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let worst_bias = rows.iter().map(|r| r.bias_bound).fold(0.0, f64::max);
    Outcome::table(
        &rows,
        json!({ "dim": dim, "f": f.name(), "walk": "lazy", "weights": "simple", "rows": to_value(&rows)? }),
        json!({ "eps": eps, "max_bias_bound": worst_bias }),
    )
}

#[derive(Debug, Serialize)]
struct KvRow {
    n: usize,
    rate: f64,
    limit: f64,
    excess: f64,
}

fn kv(params: &Params) -> Result<Outcome, CliError> {
    let d = params.rank()?;
    if params.p.is_some() || params.lambda.is_some() {
        let p = params.walk()?;
        if p.max_abs_diff(&GeneratorMeasure::uniform(d)?) > 1e-12 {
            return Err(CliError::Validation(
                "kv supports the uniform measure only".into(),
            ));
        }
    }
    let ns = params.n.clone().unwrap_or_else(|| vec![40, 400, 4000]);
    if ns.is_empty() || ns.contains(&0) {
        return Err(CliError::Validation("n values must be positive".into()));
    }
    let uniform = GeneratorMeasure::uniform(d)?;
    let limit =
        solve_q(&uniform, DEFAULT_Q_TOL)?.boundary_entropy(&uniform, &entropy_lab::FDivergence::kl());
    let rows: Vec<KvRow> = ns
        .iter()
        .map(|&n| {
            let rate = kv_entropy_rate(d, n);
            KvRow {
                n,
                rate,
                limit,
                excess: rate - limit,
            }
        })
        .collect();
    Outcome::table(
        &rows,
        json!({ "d": d, "limit": limit, "rows": to_value(&rows)? }),
        json!({}),
    )
}

fn walk_sim(params: &Params) -> Result<Outcome, CliError> {
    let p = params.walk()?;
    let depth = params.depth.unwrap_or(2);
    let paths = params.paths.unwrap_or(100_000);
    let seed = params.seed.unwrap_or(0);
    let bp = solve_q(&p, DEFAULT_Q_TOL)?;
    let counts = simulate_hitting(&p, paths, depth, seed)?;
    let rows = cylinder_table(&bp, &counts)?;
    let max_z = rows.iter().map(|r| r.z_score.abs()).fold(0.0, f64::max);
    Outcome::table(
        &rows,
        json!({
            "depth": depth,
            "paths": paths,
            "excluded": counts.excluded,
            "seed": seed,
            "max_abs_z": max_z,
            "rows": to_value(&rows)?,
        }),
        json!({ "z_threshold": 4.0, "excluded_paths": counts.excluded }),
    )
}

fn oracle_abel(params: &Params) -> Result<Outcome, CliError> {
    let p = params.walk()?;
    let a = match params.a_list(&[0.4])?.as_slice() {
        [a] => *a,
        _ => return Err(CliError::Validation("oracle-abel takes a single a".into())),
    };
    let eps = params.unit_eps(1e-6)?;
    let radius = params.radius.unwrap_or(3);
    let f = params.divergence()?;
    let gp = solve_first_passage(&p, a, DEFAULT_GREEN_TOL)?;
    let truncated = abel_sum_truncated_within(&p.to_sparse(), a, eps, radius)?;
    let ball = enumerate_ball(p.rank(), radius)?;
    let max_abs_diff = ball
        .iter()
        .map(|x| (mu_a_mass(&gp, x) - truncated.measure.mass(x)).abs())
        .fold(0.0, f64::max);
    let lambda = params.weights()?.unwrap_or_else(|| p.clone());
    let result = json!({
        "a": a,
        "radius": radius,
        "words": ball.len(),
        "max_abs_diff": max_abs_diff,
        "closed_form_entropy": abel_entropy(&gp, &lambda, &f),
        "first_passage": gp.first_passage,
        "g_e": gp.g_e,
    });
    Outcome::single(
        result,
        json!({
            "eps": eps,
            "terms": truncated.terms,
            "tail_bound": truncated.tail_bound,
            "first_passage_residual": gp.residual,
            "mass_residual": gp.mass_residual,
        }),
    )
}

fn minimize(params: &Params) -> Result<Outcome, CliError> {
    let config = MinimizeConfig {
        p: params.walk()?,
        f: params.divergence()?,
        depth: params.depth.unwrap_or(4),
        samples: params.samples.unwrap_or(1000),
        seed: params.seed.unwrap_or(0),
    };
    let report = minimize_check(&config)?;
    let failure = (!report.minimum_holds).then(|| {
        format!(
            "{} sampled densities fall below the closed-form minimum",
            report.violations
        )
    });
    let mut out = Outcome::single(&report, json!({ "slack": MINIMUM_SLACK }))?;
    out.failure = failure;
    Ok(out)
}
