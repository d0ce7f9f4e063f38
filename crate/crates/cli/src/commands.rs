//! One function per subcommand.

use serde::Serialize;

use screenequil::equilibria::solve_with;
use screenequil::oracle::{self, Status, Verdict};
use screenequil::welfare::{
    self, dispersion_compare, interim_demands, interim_utility, level_ordering, limit_quantities, surplus,
    surplus_sweep, utility_curve, DispersionReport, LevelOrdering,
};
use screenequil::{Firm, Setting, SettingSolution64, SurplusReport64};

use crate::config::RunConfig;
use crate::output::{number, OutDir};
use crate::CliError;

/// Exit status of a command that ran to completion.
pub type Code = i32;

fn strike_cell(p: f64) -> String {
    if p.is_finite() {
        number(p)
    } else {
        String::new()
    }
}

fn solution_rows(sol: &SettingSolution64) -> Result<Vec<Vec<String>>, CliError> {
    sol.gamma_grid()
        .iter()
        .map(|&g| {
            let a = sol.contract(Firm::A, g)?;
            let b = sol.contract(Firm::B, g)?;
            let (qa, qb) = interim_demands(sol, g)?;
            let u = interim_utility(sol, g)?;
            Ok(vec![
                number(g),
                strike_cell(a.strike),
                number(a.fee),
                strike_cell(b.strike),
                number(b.fee),
                number(qa),
                number(qb),
                number(u),
            ])
        })
        .collect()
}

fn describe(sol: &SettingSolution64) -> String {
    let mut s = format!("{}:", sol.setting());
    if let Some(t) = sol.theta_star() {
        let (pa, pb) = sol.spot_prices().unwrap_or((f64::NAN, f64::NAN));
        s += &format!(" theta* = {}, prices = ({}, {})", number(t), number(pa), number(pb));
    }
    if let Some(d) = sol.gamma_dagger() {
        s += &format!(" gamma_dagger = {}", number(d));
    }
    if let Some(fee) = sol.mm_fee() {
        s += &format!(" fee = {}", number(fee));
    }
    for ineq in &sol.coverage().inequalities {
        let mark = if ineq.holds { "holds" } else { "fails" };
        s += &format!(" [{} = {}: {mark}]", ineq.name, number(ineq.rhs));
    }
    s
}

pub fn solve(cfg: &RunConfig) -> Result<Code, CliError> {
    let env = cfg.env();
    let out = OutDir::create(&cfg.output)?;
    for k in cfg.setting_list()? {
        let sol = solve_with(&env, k, &cfg.solve_options())?;
        let rows = solution_rows(&sol)?;
        let header = [
            "gamma", "strike_a", "fee_a", "strike_b", "fee_b", "demand_a", "demand_b", "utility",
        ];
        let csv = out.csv(&format!("solution-{}.csv", k.slug()), &header, &rows)?;
        out.json(&format!("solution-{}.json", k.slug()), &sol)?;
        println!("{}", describe(&sol));
        println!("  wrote {}", csv.display());
    }
    Ok(0)
}

fn surplus_row(sigma: Option<f64>, r: &SurplusReport64) -> Vec<String> {
    let mut row = Vec::with_capacity(7);
    if let Some(s) = sigma {
        row.push(number(s));
    }
    row.extend([
        r.setting.slug().to_string(),
        number(r.consumer_surplus),
        number(r.producer_surplus_a),
        number(r.producer_surplus_b),
        number(r.total_surplus),
        number(r.accounting_gap),
    ]);
    row
}

const SURPLUS_HEADER: [&str; 6] = [
    "setting",
    "consumer_surplus",
    "producer_surplus_a",
    "producer_surplus_b",
    "total_surplus",
    "accounting_gap",
];

pub fn surplus_table(cfg: &RunConfig) -> Result<Code, CliError> {
    let env = cfg.env();
    let out = OutDir::create(&cfg.output)?;
    let settings = cfg.setting_list()?;
    let mut rows = Vec::new();
    for &k in &settings {
        let r = surplus(&solve_with(&env, k, &cfg.solve_options())?)?;
        println!(
            "{:<12} CS = {}  PS_A = {}  PS_B = {}  TS = {}",
            k.slug(),
            number(r.consumer_surplus),
            number(r.producer_surplus_a),
            number(r.producer_surplus_b),
            number(r.total_surplus)
        );
        rows.push(surplus_row(None, &r));
    }
    out.csv("surplus.csv", &SURPLUS_HEADER, &rows)?;
    if settings.contains(&Setting::MultiMonopoly) {
        let cmp = welfare::joint_monopoly_comparison(&env, &cfg.solve_options())?;
        println!("joint monopoly comparison: {}", cmp.status.describe());
        out.json("joint-monopoly.json", &cmp)?;
    }
    Ok(0)
}

#[derive(Serialize)]
struct CurveShape {
    setting: Setting,
    at_zero: Option<f64>,
    min_second_difference: f64,
    asymmetry: f64,
}

#[derive(Serialize)]
struct FigureReport {
    curves: Vec<CurveShape>,
    exclusive_vs_duopoly: DispersionReport,
    duopoly_vs_spot: DispersionReport,
    exclusive_above_duopoly: LevelOrdering,
    duopoly_above_spot: LevelOrdering,
    /// Whether `U^E > U^NE > U^SP` holds at every grid type.
    type_by_type_ranking: bool,
}

pub fn figure(cfg: &RunConfig) -> Result<Code, CliError> {
    let env = cfg.env();
    let out = OutDir::create(&cfg.output)?;
    let order = [Setting::Spot, Setting::DuopolyNe, Setting::Exclusive];
    let mut curves = Vec::new();
    for k in order {
        curves.push(utility_curve(&solve_with(&env, k, &cfg.solve_options())?)?);
    }
    let [sp, ne, ex] = [&curves[0], &curves[1], &curves[2]];
    let rows: Vec<Vec<String>> = (0..sp.gamma_grid.len())
        .map(|i| {
            vec![
                number(sp.gamma_grid[i]),
                number(sp.values[i]),
                number(ne.values[i]),
                number(ex.values[i]),
            ]
        })
        .collect();
    let csv = out.csv("figure.csv", &["gamma", "U_spot", "U_ne", "U_exclusive"], &rows)?;

    let upper = level_ordering(ex, ne)?;
    let lower = level_ordering(ne, sp)?;
    let report = FigureReport {
        curves: curves
            .iter()
            .map(|c| CurveShape {
                setting: c.setting,
                at_zero: c.at(0.0),
                min_second_difference: c.min_second_difference(),
                asymmetry: c.asymmetry(),
            })
            .collect(),
        exclusive_vs_duopoly: dispersion_compare(ex, ne)?,
        duopoly_vs_spot: dispersion_compare(ne, sp)?,
        type_by_type_ranking: upper.holds_everywhere && lower.holds_everywhere,
        exclusive_above_duopoly: upper,
        duopoly_above_spot: lower,
    };
    out.json("figure-report.json", &report)?;
    println!("wrote {}", csv.display());
    println!(
        "dispersion: exclusive vs duopoly {:?}, duopoly vs spot {:?}",
        report.exclusive_vs_duopoly.verdict, report.duopoly_vs_spot.verdict
    );
    for lv in [&report.exclusive_above_duopoly, &report.duopoly_above_spot] {
        if !lv.holds_everywhere {
            println!(
                "flag: {} is not above {} at {} of {} types (smallest gap {} at gamma = {})",
                lv.upper,
                lv.lower,
                lv.violations,
                sp.gamma_grid.len(),
                number(lv.worst_gap),
                number(lv.worst_gamma)
            );
        }
    }
    Ok(0)
}

pub fn limits(cfg: &RunConfig) -> Result<Code, CliError> {
    let env = cfg.env();
    let out = OutDir::create(&cfg.output)?;
    let l = limit_quantities(&env)?;
    out.json("limits.json", &l)?;
    println!(
        "fee_a = {}  fee_b = {}  CS_E = {}  CS_NE = {}  CS_SP = {}",
        number(l.fee_a),
        number(l.fee_b),
        number(l.cs_e),
        number(l.cs_ne),
        number(l.cs_sp)
    );
    if !l.hypothesis.holds {
        println!(
            "flag: {} fails (1/f(0) = {})",
            l.hypothesis.name,
            number(l.hypothesis.rhs)
        );
    }
    Ok(0)
}

#[derive(Serialize)]
struct VerifyFile<'a> {
    suite: String,
    verdict: Verdict,
    reports: &'a [oracle::OracleReport],
}

pub fn verify(cfg: &RunConfig) -> Result<Code, CliError> {
    let env = cfg.env();
    let out = OutDir::create(&cfg.output)?;
    let suite = cfg.suite()?;
    let reports = oracle::verify(&env, suite, &cfg.verify_options(), &cfg.solve_options())?;
    let verdict = oracle::verdict(&reports);
    for r in &reports {
        let tag = match (r.status, r.advisory) {
            (Status::Pass, _) => "PASS",
            (Status::Fail, true) => "NOTE",
            (Status::Fail, false) => "FAIL",
            (Status::Skipped, _) => "SKIP",
        };
        println!(
            "{tag} {:<28} residual = {:<22} tol = {:<8} {}",
            r.check,
            number(r.worst_residual),
            number(r.tolerance),
            r.detail
        );
    }
    out.json(
        "verify.json",
        &VerifyFile {
            suite: suite.to_string(),
            verdict,
            reports: &reports,
        },
    )?;
    Ok(match verdict {
        Verdict::AllPass => 0,
        Verdict::Failed => 1,
        Verdict::Incomplete => 3,
    })
}

pub fn sweep(cfg: &RunConfig) -> Result<Code, CliError> {
    let env = cfg.env();
    let out = OutDir::create(&cfg.output)?;
    let rows = surplus_sweep(&env, &cfg.sigmas, &cfg.setting_list()?, &cfg.solve_options())?;
    let table: Vec<Vec<String>> = rows.iter().map(|(s, r)| surplus_row(Some(*s), r)).collect();
    let mut header = vec!["sigma"];
    header.extend(SURPLUS_HEADER);
    let path = out.csv("sweep.csv", &header, &table)?;
    println!("wrote {} rows to {}", table.len(), path.display());
    Ok(0)
}
