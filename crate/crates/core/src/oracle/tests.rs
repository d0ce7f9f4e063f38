use super::*;
use crate::densities::Density;
use crate::equilibria::{monopoly_strike, solve};

fn env() -> Environment<f64> {
    Environment::running_example()
}

fn duopoly() -> SettingSolution<f64> {
    solve(&env(), Setting::DuopolyNe).unwrap()
}

fn opts() -> SolveOptions {
    SolveOptions::default()
}

#[test]
fn consumer_grid_argmax_at_half() {
    let sol = duopoly();
    let (br, r) = consumer_br_oracle(&sol, 0.5, 200).unwrap();
    assert!(r.passed(), "{r:?}");
    assert_eq!((br.price_a, br.price_b), (Some(3.0), Some(1.0)));
}

#[test]
fn equilibrium_beats_monopoly_strikes_for_the_consumer() {
    let sol = duopoly();
    let e = env();
    for g in [-0.8, -0.3, 0.0, 0.4, 0.9] {
        let eq = crate::welfare::interim_utility(&sol, g).unwrap();
        let (ma, mb) = (monopoly_strike(&e, Firm::A, g), monopoly_strike(&e, Firm::B, g));
        let fa = sol.schedule(Firm::A).unwrap().fee(ma).unwrap();
        let fb = sol.schedule(Firm::B).unwrap().fee(mb).unwrap();
        assert!(eq >= expected_net_max(&e, g, ma, mb) - fa - fb, "gamma {g}");
    }
}

#[test]
fn consumer_selection_is_monotone() {
    let sol = duopoly();
    let r = consumer_br_sweep(&sol, &[-0.9, -0.5, 0.0, 0.5, 0.9], 200).unwrap();
    assert!(r.passed(), "{r:?}");
    assert_eq!(r.metrics["monotone_selection"], 1.0);
}

#[test]
fn consumer_oracle_needs_a_duopoly() {
    let sp = solve(&env(), Setting::Spot).unwrap();
    assert!(consumer_br_oracle(&sp, 0.0, 200).is_err());
    assert!(consumer_br_oracle(&duopoly(), 2.0, 200).is_err());
}

#[test]
fn firm_objective_peaks_at_equilibrium() {
    let sol = duopoly();
    for own in [Firm::A, Firm::B] {
        let r = firm_pointwise_check(&sol, own, 0.5, 200).unwrap();
        assert!(r.passed(), "{r:?}");
        assert_eq!(r.metrics["covered"], 1.0);
    }
}

#[test]
fn shifted_threshold_is_worse() {
    let sol = duopoly();
    let e = env();
    let g: f64 = 0.5;
    let dens = e.types().pdf(g);
    let obj = Pointwise {
        env: &e,
        own: Firm::B,
        gamma: g,
        rent: e.types().sf(g) / dens,
    };
    let pa = sol.strike(Firm::A, g);
    let fee = sol.contract(Firm::A, g).unwrap().fee;
    let t = (sol.strike(Firm::B, g) - pa) / 2.0;
    let v = obj.threshold(pa, fee, t);
    assert!(v > obj.threshold(pa, fee, t + 0.2));
    assert!(v > obj.threshold(pa, fee, t - 0.2));
    assert!(obj.exclusion(pa, fee).is_none());
}

#[test]
fn envelope_holds_in_competitive_settings() {
    for k in [Setting::DuopolyNe, Setting::Spot, Setting::Exclusive] {
        let sol = solve(&env(), k).unwrap();
        let r = envelope_residual(&sol, 201).unwrap();
        assert!(r.passed() && r.worst_residual < 1e-5, "{k}: {r:?}");
    }
}

#[test]
fn exclusive_drift_switches_sides_at_the_split() {
    let sol = solve(&env(), Setting::Exclusive).unwrap();
    let e = env();
    let above = allocation_drift(&sol, 0.3);
    let below = allocation_drift(&sol, -0.3);
    let q = |firm, g| crate::market::monopoly_demand(&e, firm, monopoly_strike(&e, firm, g), g);
    assert!((above - q(Firm::B, 0.3)).abs() < 1e-12);
    assert!((below + q(Firm::A, -0.3)).abs() < 1e-12);
}

#[test]
fn efficiency_dominates_with_positive_strict_mass() {
    let ex = solve(&env(), Setting::Exclusive).unwrap();
    let r = efficiency_check(&duopoly(), &ex, 200).unwrap();
    assert!(r.passed(), "{r:?}");
    assert!(r.metrics["grid_mass"] > 0.9998);
    let strict = r.metrics["strict_mass"];
    assert!(strict > 0.01 && (strict - 0.133).abs() < 0.01, "{strict}");
}

#[test]
fn realised_surplus_is_mirror_symmetric() {
    let duo = duopoly();
    let ex = solve(&env(), Setting::Exclusive).unwrap();
    for (g, th) in [(0.3, 0.1), (0.7, -1.2), (0.05, 0.9)] {
        for sol in [&duo, &ex] {
            let a = realised(sol, g, th);
            let b = realised(sol, -g, -th);
            assert!((a - b).abs() < 1e-12, "{}: ({g}, {th})", sol.setting());
        }
    }
}

#[test]
fn efficiency_skipped_for_asymmetric_types() {
    let e = Environment::<f64>::new(7.0, Density::uniform(-0.5, 1.5).unwrap(), Density::std_normal()).unwrap();
    let duo = solve(&e, Setting::DuopolyNe).unwrap();
    let ex = solve(&e, Setting::Exclusive).unwrap();
    assert_eq!(efficiency_check(&duo, &ex, 50).unwrap().status, Status::Skipped);
}

#[test]
fn dominance_on_both_sides() {
    for firm in [Firm::A, Firm::B] {
        let r = dominance_check(&env(), firm, 200, &opts()).unwrap();
        assert!(r.passed(), "{r:?}");
        assert!(r.worst_residual < -1e-6);
    }
    let poor = env().with_v0(5.0).unwrap();
    assert_eq!(
        dominance_check(&poor, Firm::B, 50, &opts()).unwrap().status,
        Status::Skipped
    );
}

#[test]
fn early_contracting_ranking() {
    let r = welfare_ranking_check(&env(), 0.05, &opts()).unwrap();
    assert!(r.passed(), "{r:?}");
    assert!(r.metrics["min_margin"] > 1e-4);
    assert!(r.advisory);
    let late = welfare_ranking_check(&env(), 1.0, &opts()).unwrap();
    assert!(late.advisory);
    assert!(late.metrics.contains_key("cs_e"));
}

#[test]
fn utility_shapes() {
    let rs = utility_shape_checks(&env(), &opts()).unwrap();
    assert!(rs.iter().all(|r| r.passed()), "{rs:?}");
    assert!(rs[1].metrics["margin_e_ne"] > 1e-6 && rs[1].metrics["margin_ne_sp"] > 1e-6);
}

#[test]
fn grid_refinement_keeps_verdicts() {
    let sol = duopoly();
    let types = [-0.9, -0.5, 0.0, 0.5, 0.9];
    let coarse = consumer_br_sweep(&sol, &types, 100).unwrap();
    let fine = consumer_br_sweep(&sol, &types, 200).unwrap();
    assert_eq!(coarse.status, fine.status);
    let fc = firm_pointwise_sweep(&sol, Firm::B, &types, 100).unwrap();
    let ff = firm_pointwise_sweep(&sol, Firm::B, &types, 200).unwrap();
    assert_eq!(fc.status, ff.status);
}

#[test]
fn grid_errors_shrink_with_the_cell() {
    let sol = duopoly();
    let types = [-0.67, -0.21, 0.33, 0.74];
    let (lo, hi) = theta_range(&env(), 0.0);
    for n in [50, 100, 200, 400] {
        // strike cells are 4/n, threshold cells (hi - lo)/n
        let (cp, ct) = (4.0 / n as f64, (hi - lo) / n as f64);
        let c = consumer_br_sweep(&sol, &types, n).unwrap();
        assert!(c.metrics["grid_error"] <= cp * cp, "consumer n = {n}: {c:?}");
        let fb = firm_pointwise_sweep(&sol, Firm::B, &types, n).unwrap();
        assert!(fb.metrics["grid_error"] <= cp * cp + ct * ct, "firm n = {n}: {fb:?}");
    }
}

#[test]
fn full_suite_passes_on_the_running_example() {
    let rs = verify(&env(), Suite::All, &VerifyOptions::default(), &opts()).unwrap();
    let names: Vec<&str> = rs.iter().map(|r| r.check.as_str()).collect();
    let mut sorted = names.clone();
    sorted.sort();
    assert_eq!(names, sorted);
    assert_eq!(verdict(&rs), Verdict::AllPass, "{rs:#?}");
    assert_eq!(rs.len(), 12);
}

#[test]
fn verdict_ignores_advisory_failures() {
    let mut a = OracleReport::judged("a", 1.0, 0.0, true);
    a.advisory = true;
    let b = OracleReport::judged("b", 0.0, 0.0, true);
    assert_eq!(verdict(&[a.clone(), b.clone()]), Verdict::Incomplete);
    a.advisory = false;
    assert_eq!(verdict(&[a, b.clone()]), Verdict::Failed);
    assert_eq!(
        verdict(&[b.clone(), OracleReport::skipped("c", "why")]),
        Verdict::Incomplete
    );
    assert_eq!(verdict(&[b]), Verdict::AllPass);
}

#[test]
fn suite_names() {
    assert_eq!("ALL".parse::<Suite>().unwrap(), Suite::All);
    assert_eq!("firm".parse::<Suite>().unwrap().to_string(), "firm");
    assert!("everything".parse::<Suite>().is_err());
}
