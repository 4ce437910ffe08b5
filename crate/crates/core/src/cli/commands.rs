use std::collections::HashMap;
use std::path::Path;

use super::settings::{parse_key_values, Settings};
use super::table::{Cell, Table};
use super::{
    BenchArgs, BoundArgs, Command, FadingArgs, McArgs, OracleArgs, Output, ParamArgs, SolveArgs, SweepArgs,
    EXIT_ERROR, EXIT_INFEASIBLE, EXIT_OK,
};
use crate::bounds::{certified_half_theta_pt, certified_lower_bound_tau, half_theta_pt, lower_bound_tau};
use crate::error::{config, Result, SwiptError};
use crate::mc::{
    average_throughput, solve_policy, sweep, McConfig, McSummary, Scenario, SweepAxis, SweepOutcome, TrialOutcome,
    RNG_ALGORITHM,
};
use crate::model::{theta0, Allocation, ChannelState};
use crate::oracle::{brute_force_fixed_theta, brute_force_solve, compare_flops, GridSpec};
use crate::solver::{
    check_feasibility, solve_fixed_theta, verify_kkt, Feasibility, KktTolerance, SolveReport, Status,
    FLOPS_PER_BISECTION_STEP,
};

pub const SOLVE_COLUMNS: [&str; 12] = [
    "g1",
    "g2",
    "policy",
    "status",
    "tau_bits_per_s",
    "lambda",
    "pt_mw",
    "theta",
    "theta0",
    "lower_bound_bits_per_s",
    "bisection_iters_total",
    "flops",
];

const AVERAGE_COLUMNS: [&str; 2] = ["std_error", "infeasible_fraction"];

pub(super) fn dispatch(cmd: &Command) -> Result<Output> {
    match cmd {
        Command::Solve(a) => cmd_solve(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Mc(a) => cmd_mc(a),
        Command::Bound(a) => cmd_bound(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Bench(a) => cmd_bench(a),
    }
}

fn ok(table: Table) -> Output {
    Output {
        table,
        exit_code: EXIT_OK,
        note: None,
    }
}

fn load_config(s: &mut Settings, p: &ParamArgs) -> Result<()> {
    match &p.config {
        Some(path) => s.apply_file(path),
        None => Ok(()),
    }
}

fn apply_flags(s: &mut Settings, p: &ParamArgs) {
    let params = &mut s.params;
    for (slot, flag) in [
        (&mut params.q, p.q),
        (&mut params.sigma2, p.sigma2),
        (&mut params.t0, p.t0.or(p.t0_us.map(|us| us * 1e-6))),
        (&mut params.eta, p.eta),
        (&mut params.pd, p.pd),
        (&mut params.pe, p.pe),
        (&mut params.eps_d, p.eps_d),
        (&mut params.eps_e, p.eps_e),
        (&mut s.solver.tol_pt_rel, p.tol_pt_rel),
        (&mut s.solver.tol_constraint, p.tol_constraint),
    ] {
        if let Some(v) = flag {
            *slot = v;
        }
    }
    if let Some(n) = p.n {
        s.solver.grid_levels = n;
    }
}

fn apply_channel(s: &mut Settings, g1: Option<f64>, g2: Option<f64>) {
    s.g1 = g1.or(s.g1);
    s.g2 = g2.or(s.g2);
}

fn apply_fading(s: &mut Settings, f: &FadingArgs) {
    if let Some(k) = f.k {
        s.fading.k = k;
    }
    if let Some(v) = f.omega1 {
        s.fading.omega1 = v;
    }
    if let Some(v) = f.omega2 {
        s.fading.omega2 = v;
    }
    if let Some(t) = f.trials {
        s.trials = t;
    }
    if let Some(seed) = f.seed {
        s.seed = seed;
    }
}

/// Defaults, then the config file, then flags.
fn settings(p: &ParamArgs) -> Result<Settings> {
    let mut s = Settings::default();
    load_config(&mut s, p)?;
    apply_flags(&mut s, p);
    Ok(s)
}

fn channel(s: &Settings) -> Result<ChannelState> {
    match (s.g1, s.g2) {
        (Some(g1), Some(g2)) => ChannelState::new(g1, g2),
        _ => config("--g1 and --g2 are required"),
    }
}

fn param_meta(t: &mut Table, command: &str, s: &Settings) {
    let p = &s.params;
    t.meta("command", Cell::s(command));
    for (k, v) in [
        ("q", p.q),
        ("sigma2", p.sigma2),
        ("t0", p.t0),
        ("eta", p.eta),
        ("pd", p.pd),
        ("pe", p.pe),
        ("eps_d", p.eps_d),
        ("eps_e", p.eps_e),
    ] {
        t.meta(k, Cell::F(v));
    }
    t.meta("n", Cell::U(s.solver.grid_levels as u64));
    t.meta("tol_pt_rel", Cell::F(s.solver.tol_pt_rel));
    t.meta("tol_constraint", Cell::F(s.solver.tol_constraint));
}

fn fading_meta(t: &mut Table, s: &Settings) {
    t.meta("k", Cell::F(s.fading.k));
    t.meta("omega1", Cell::F(s.fading.omega1));
    t.meta("omega2", Cell::F(s.fading.omega2));
    t.meta("trials", Cell::U(s.trials as u64));
    t.meta("seed", Cell::U(s.seed));
    t.meta("rng", Cell::s(RNG_ALGORITHM));
}

fn outcome_cells(ch: &ChannelState, policy: &str, o: &TrialOutcome, flops: u64) -> Vec<Cell> {
    vec![
        Cell::F(ch.g1),
        Cell::F(ch.g2),
        Cell::s(policy),
        Cell::s(o.status.as_str()),
        Cell::F(o.best.tau),
        Cell::F(o.best.lambda),
        Cell::F(o.best.pt),
        Cell::F(o.best.theta),
        Cell::F(o.theta0),
        Cell::F(o.lower_bound_tau),
        Cell::U(o.iterations),
        Cell::U(flops),
    ]
}

fn report_cells(ch: &ChannelState, policy: &str, r: &SolveReport) -> Vec<Cell> {
    outcome_cells(ch, policy, &TrialOutcome::from_report(*ch, r), r.total_flops)
}

fn summary_cells(g1: f64, g2: f64, policy: &str, m: &McSummary) -> Vec<Cell> {
    vec![
        Cell::F(g1),
        Cell::F(g2),
        Cell::s(policy),
        Cell::s("mean"),
        Cell::F(m.mean),
        Cell::F(m.mean_lambda),
        Cell::F(m.mean_pt),
        Cell::F(m.mean_theta),
        Cell::F(m.mean_theta0),
        Cell::F(m.mean_lower_bound),
        Cell::U(m.total_iterations),
        Cell::U(m.total_flops),
        Cell::F(m.std_error),
        Cell::F(m.infeasible_fraction),
    ]
}

fn cmd_solve(a: &SolveArgs) -> Result<Output> {
    if let Some(path) = &a.verify {
        return cmd_verify(a, path);
    }
    let mut s = settings(&a.params)?;
    apply_channel(&mut s, a.g1, a.g2);
    s.validate()?;
    let ch = channel(&s)?;
    let report = solve_policy(&s.params, &ch, a.policy, &s.solver);

    let mut t = Table::new(&SOLVE_COLUMNS);
    param_meta(&mut t, "solve", &s);
    t.push(report_cells(&ch, a.policy.as_str(), &report));
    let note = report
        .infeasible_reason
        .map(|r| format!("infeasible: {r}"));
    Ok(Output {
        table: t,
        exit_code: if report.is_feasible() { EXIT_OK } else { EXIT_INFEASIBLE },
        note,
    })
}

/// Header key-values and the first data row of an emitted table.
struct Record {
    header: Vec<(String, String)>,
    fields: HashMap<String, String>,
}

impl Record {
    fn get(&self, key: &str) -> Result<f64> {
        let v = self
            .fields
            .get(key)
            .ok_or_else(|| SwiptError::Config(format!("record has no '{key}' column")))?;
        v.parse()
            .map_err(|_| SwiptError::Config(format!("record column '{key}' is not a number: '{v}'")))
    }
}

fn json_scalar(v: &serde_json::Value) -> Option<String> {
    match v {
        serde_json::Value::Number(n) => Some(n.to_string()),
        serde_json::Value::String(s) => Some(s.clone()),
        serde_json::Value::Null => Some("NaN".into()),
        _ => None,
    }
}

fn read_record(path: &Path) -> Result<Record> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| SwiptError::Config(format!("cannot read {}: {e}", path.display())))?;
    let first = text.lines().map(str::trim).find(|l| !l.is_empty() && !l.starts_with('#'));
    let Some(first) = first else {
        return config(format!("{} holds no record", path.display()));
    };
    let bad = |e: &dyn std::fmt::Display| SwiptError::Config(format!("{}: {e}", path.display()));

    if first.starts_with('{') {
        let mut header = Vec::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let v: serde_json::Value = serde_json::from_str(line).map_err(|e| bad(&e))?;
            let Some(obj) = v.as_object() else {
                return Err(bad(&"expected a JSON object per line"));
            };
            let pairs = obj.iter().filter_map(|(k, v)| json_scalar(v).map(|s| (k.clone(), s)));
            match obj.get("type").and_then(|t| t.as_str()) {
                Some("meta") => header.extend(pairs),
                Some("record") => {
                    return Ok(Record {
                        header,
                        fields: pairs.collect(),
                    })
                }
                _ => {}
            }
        }
        return config(format!("{} holds no record", path.display()));
    }

    let comments: String = text
        .lines()
        .filter_map(|l| l.trim_start().strip_prefix('#'))
        .filter(|l| l.contains('='))
        .map(|l| format!("{l}\n"))
        .collect();
    let header = parse_key_values(&comments)?
        .into_iter()
        .map(|(_, k, v)| (k, v))
        .collect();
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let names = reader.headers().map_err(|e| bad(&e))?.clone();
    let row = reader
        .records()
        .next()
        .ok_or_else(|| bad(&"no data row"))?
        .map_err(|e| bad(&e))?;
    Ok(Record {
        header,
        fields: names.iter().map(String::from).zip(row.iter().map(String::from)).collect(),
    })
}

fn cmd_verify(a: &SolveArgs, path: &Path) -> Result<Output> {
    let record = read_record(path)?;
    let mut s = Settings::default();
    load_config(&mut s, &a.params)?;
    for (k, v) in &record.header {
        s.set(k, v)?;
    }
    apply_flags(&mut s, &a.params);
    s.validate()?;
    let ch = ChannelState::new(
        a.g1.map_or_else(|| record.get("g1"), Ok)?,
        a.g2.map_or_else(|| record.get("g2"), Ok)?,
    )?;
    let alloc = Allocation {
        tau: record.get("tau_bits_per_s")?,
        lambda: record.get("lambda")?,
        pt: record.get("pt_mw")?,
        theta: record.get("theta")?,
    };
    let kkt = verify_kkt(&s.params, &ch, &alloc, &KktTolerance::default())?;

    let mut t = Table::new(&[
        "g1",
        "g2",
        "tau_bits_per_s",
        "lambda",
        "pt_mw",
        "theta",
        "kkt",
        "max_stationarity",
        "max_complementary_slackness",
        "max_primal_violation",
        "min_dual",
        "a1",
        "a2",
        "a3",
        "a4",
        "a5",
        "a6",
    ]);
    param_meta(&mut t, "solve --verify", &s);
    let mut row = vec![
        Cell::F(ch.g1),
        Cell::F(ch.g2),
        Cell::F(alloc.tau),
        Cell::F(alloc.lambda),
        Cell::F(alloc.pt),
        Cell::F(alloc.theta),
        Cell::s(if kkt.passed { "pass" } else { "fail" }),
        Cell::F(kkt.max_stationarity()),
        Cell::F(kkt.max_complementary_slackness()),
        Cell::F(kkt.max_primal_violation()),
        Cell::F(kkt.min_dual()),
    ];
    row.extend(kkt.duals.iter().map(|d| Cell::F(*d)));
    t.push(row);
    Ok(Output {
        table: t,
        exit_code: if kkt.passed { EXIT_OK } else { EXIT_ERROR },
        note: (!kkt.passed).then(|| "KKT conditions not satisfied".to_string()),
    })
}

fn cmd_sweep(a: &SweepArgs) -> Result<Output> {
    let mut s = settings(&a.params)?;
    apply_channel(&mut s, a.g1, a.g2);
    apply_fading(&mut s, &a.fading);
    s.validate()?;
    let fading_axis = matches!(a.axis, SweepAxis::RiceK | SweepAxis::Omega1 | SweepAxis::Omega2);
    let use_fading = a.fading_channel || a.fading.trials.is_some() || fading_axis;
    let scenario = if use_fading {
        Scenario::Fading {
            fading: s.fading,
            trials: s.trials,
            seed: s.seed,
        }
    } else {
        let first = a.values.first().copied().unwrap_or(f64::NAN);
        let g1 = if a.axis == SweepAxis::G1 { Some(first) } else { s.g1 };
        let g2 = if a.axis == SweepAxis::G2 { Some(first) } else { s.g2 };
        match (g1, g2) {
            (Some(g1), Some(g2)) => Scenario::Fixed(ChannelState { g1, g2 }),
            _ => return config("a fixed-channel sweep needs --g1 and --g2 (or pass --trials for fading)"),
        }
    };
    let rows = sweep(&s.params, &scenario, a.axis, &a.values, &a.policies, &s.solver)?;

    let mut columns = vec![a.axis.as_str()];
    columns.extend(SOLVE_COLUMNS);
    if use_fading {
        columns.extend(AVERAGE_COLUMNS);
    }
    let mut t = Table::new(&columns);
    param_meta(&mut t, "sweep", &s);
    t.meta("axis", Cell::s(a.axis.as_str()));
    if use_fading {
        fading_meta(&mut t, &s);
    }
    for row in rows {
        let mut cells = vec![Cell::F(row.axis_value)];
        match &row.outcome {
            SweepOutcome::Single(o, flops) => {
                cells.extend(outcome_cells(&o.channel, row.policy.as_str(), o, *flops))
            }
            SweepOutcome::Average(m) => cells.extend(summary_cells(row.g1, row.g2, row.policy.as_str(), m)),
        }
        t.push(cells);
    }
    Ok(ok(t))
}

fn cmd_mc(a: &McArgs) -> Result<Output> {
    let mut s = settings(&a.params)?;
    apply_fading(&mut s, &a.fading);
    s.validate()?;
    if s.trials == 0 {
        return config("trials must be at least 1");
    }
    let mut columns = vec!["k"];
    columns.extend(SOLVE_COLUMNS);
    columns.extend(AVERAGE_COLUMNS);
    let mut t = Table::new(&columns);
    param_meta(&mut t, "mc", &s);
    fading_meta(&mut t, &s);
    for &policy in &a.policies {
        let mc = McConfig {
            trials: s.trials,
            seed: s.seed,
            policy,
            solver: s.solver,
        };
        let m = average_throughput(&s.params, &s.fading, &mc)?;
        let mut cells = vec![Cell::F(s.fading.k)];
        cells.extend(summary_cells(s.fading.omega1, s.fading.omega2, policy.as_str(), &m));
        t.push(cells);
    }
    Ok(ok(t))
}

fn cmd_bound(a: &BoundArgs) -> Result<Output> {
    let mut s = settings(&a.params)?;
    apply_channel(&mut s, a.g1, a.g2);
    s.validate()?;
    let ch = channel(&s)?;
    let status = match check_feasibility(&s.params, &ch) {
        Feasibility::Feasible { .. } => Status::Feasible,
        Feasibility::Infeasible(_) => Status::Infeasible,
    };
    let mut t = Table::new(&[
        "g1",
        "g2",
        "status",
        "lower_bound_bits_per_s",
        "half_theta_pt_mw",
        "certified_lower_bound_bits_per_s",
        "certified_half_theta_pt_mw",
    ]);
    param_meta(&mut t, "bound", &s);
    t.push(vec![
        Cell::F(ch.g1),
        Cell::F(ch.g2),
        Cell::s(status.as_str()),
        Cell::F(lower_bound_tau(&s.params, &ch)),
        Cell::F(half_theta_pt(&s.params, &ch)),
        Cell::F(certified_lower_bound_tau(&s.params, &ch)),
        Cell::F(certified_half_theta_pt(&s.params, &ch)),
    ]);
    Ok(ok(t))
}

fn allocation_cells(ch: &ChannelState, label: &str, status: Status, a: &Allocation, th0: f64, lb: f64, iters: u64) -> Vec<Cell> {
    let o = TrialOutcome {
        channel: *ch,
        status,
        best: *a,
        theta0: th0,
        lower_bound_tau: lb,
        iterations: iters,
    };
    outcome_cells(ch, label, &o, FLOPS_PER_BISECTION_STEP * iters)
}

fn cmd_oracle(a: &OracleArgs) -> Result<Output> {
    let mut s = settings(&a.params)?;
    apply_channel(&mut s, a.g1, a.g2);
    s.validate()?;
    let ch = channel(&s)?;
    let p = &s.params;
    let grid = GridSpec {
        n_theta: a.n_theta,
        n_lambda: a.n_lambda,
        n_pt: a.n_pt,
        refine_rounds: a.refine_rounds,
    };
    grid.validate()?;
    let th0 = theta0(p, &ch).unwrap_or(f64::NAN);
    let lb = lower_bound_tau(p, &ch);

    let mut t = Table::new(&SOLVE_COLUMNS);
    param_meta(&mut t, "oracle", &s);
    t.meta("n_theta", Cell::U(grid.n_theta as u64));
    t.meta("n_lambda", Cell::U(grid.n_lambda as u64));
    t.meta("n_pt", Cell::U(grid.n_pt as u64));
    t.meta("refine_rounds", Cell::U(grid.refine_rounds as u64));

    match a.theta {
        Some(theta) => {
            t.meta("theta", Cell::F(theta));
            let brute = brute_force_fixed_theta(p, &ch, theta, &grid)?;
            let (bis, iters) = solve_fixed_theta(p, &ch, theta, &s.solver)?;
            t.push(allocation_cells(&ch, "brute-force", Status::Feasible, &brute, th0, lb, 0));
            t.push(allocation_cells(&ch, "bisection", Status::Feasible, &bis, th0, lb, u64::from(iters)));
        }
        None => {
            let (status, brute) = match brute_force_solve(p, &ch, &grid)? {
                Some(sol) => (Status::Feasible, sol.allocation),
                None => (Status::Infeasible, Allocation::ZERO),
            };
            t.push(allocation_cells(&ch, "brute-force", status, &brute, th0, lb, 0));
            let report = crate::solver::solve(p, &ch, &s.solver);
            t.push(report_cells(&ch, "dynamic", &report));
        }
    }
    Ok(ok(t))
}

fn cmd_bench(a: &BenchArgs) -> Result<Output> {
    let mut s = Settings::default();
    a.preset.apply(&mut s);
    load_config(&mut s, &a.params)?;
    apply_flags(&mut s, &a.params);
    apply_channel(&mut s, None, a.g2);
    s.validate()?;
    let ip_tol = a.ip_tol.unwrap_or(s.solver.tol_pt_rel);
    if !(ip_tol > 0.0) {
        return config("--ip-tol must be positive");
    }
    let g2 = s.g2.unwrap_or(f64::NAN);

    let mut t = Table::new(&["g1", "flops_bisection", "flops_ip", "ratio"]);
    param_meta(&mut t, "bench", &s);
    t.meta("preset", Cell::s(a.preset.as_str()));
    t.meta("g2", Cell::F(g2));
    t.meta("ip_tol", Cell::F(ip_tol));
    for &g1 in &a.g1_values {
        let ch = ChannelState::new(g1, g2)?;
        let row = match compare_flops(&s.params, &ch, &s.solver, ip_tol)? {
            Some(c) => vec![
                Cell::F(g1),
                Cell::U(c.flops_bisection),
                Cell::U(c.flops_ip),
                Cell::F(c.ratio()),
            ],
            None => vec![Cell::F(g1), Cell::U(0), Cell::U(0), Cell::F(f64::NAN)],
        };
        t.push(row);
    }
    Ok(ok(t))
}
