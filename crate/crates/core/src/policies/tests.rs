use std::path::Path;

use approx::assert_abs_diff_eq;

use super::*;

#[test]
fn forecast_smoothing() {
    assert_eq!(update_forecast(4.0, 8.0, 1.0).unwrap(), 8.0);
    assert_eq!(update_forecast(4.0, 8.0, 0.0).unwrap(), 4.0);
    assert_abs_diff_eq!(update_forecast(4.0, 8.0, 0.36).unwrap(), 5.44, epsilon = 1e-12);
    assert!(update_forecast(4.0, 8.0, 1.01).is_err());
    assert!(update_forecast(4.0, 8.0, -0.1).is_err());
}

#[test]
fn heuristic_order() {
    let p = StermanParams::new(0.36, 0.26, 0.34, 17.0).unwrap();
    assert_abs_diff_eq!(sterman_order(&p, 5.44, 12.0, 16.0, 0.0), 5.3256, epsilon = 1e-12);
    let no_adjust = StermanParams { alpha: 0.0, ..p };
    assert_eq!(sterman_order(&no_adjust, 7.5, 3.0, 40.0, 0.0), 7.5);
    let clip = StermanParams::new(0.5, 1.0, 1.0, 0.0).unwrap();
    assert_eq!(sterman_order(&clip, 2.0, 0.0, 10.0, 0.0), 0.0);
}

#[test]
fn params_bounds() {
    assert!(StermanParams::new(1.2, 0.1, 0.1, 1.0).is_err());
    assert!(StermanParams::new(0.2, 0.1, 0.1, -1.0).is_err());
    assert!(StermanParams::new(0.2, f64::NAN, 0.1, 1.0).is_err());
    assert!(StermanParams::new(0.0, 1.0, 1.0, 0.0).is_ok());
}

#[test]
fn base_stock() {
    assert_eq!(base_stock_order(36.0, 36.0), 0.0);
    assert_eq!(base_stock_order(36.0, 28.0), 8.0);
    assert_eq!(base_stock_order(36.0, 40.0), 0.0);
}

#[test]
fn noise_placement() {
    let view = DecisionView {
        entity: 0,
        period: 3,
        incoming_order: 4.0,
        forecast_input: 4.0,
        prior_forecast: 4.0,
        on_hand: 12.0,
        backlog: 0.0,
        stock: 12.0,
        supply_line: 8.0,
        inventory_position: 28.0,
    };
    let fixed = PolicyHandle::fixed(2.0);
    assert_eq!(fixed.decide(&view, -5.0).unwrap().order, 0.0);
    assert_eq!(fixed.decide(&view, 1.5).unwrap().order, 3.5);
    let bs = PolicyHandle::base_stock(36.0);
    assert_eq!(bs.decide(&view, 0.0).unwrap().order, 8.0);
    let h = PolicyHandle::sterman(StermanParams::GENERAL);
    let quiet = h.decide(&view, 0.0).unwrap();
    let loud = h.decide(&view, 1.0).unwrap();
    assert_abs_diff_eq!(loud.order - quiet.order, 1.0, epsilon = 1e-12);
    assert!(matches!(
        PolicyHandle::external().decide(&view, 0.0),
        Err(Error::MissingAgent(0))
    ));
    assert!(NoiseSpec::new(-1.0, 0).is_err());
}

#[test]
fn default_roster_is_the_general_row() {
    let r = default_roster();
    assert_eq!(r.len(), 1);
    assert_eq!(r[0].name, "general");
    assert_eq!(r[0].params, StermanParams::GENERAL);
}

#[test]
fn roster_errors_name_line_and_field() {
    let origin = Path::new("team.csv");
    let text = "name,theta,alpha,beta,s_prime\na,0.1,0.2,0.3,4\nb,1.2,0.2,0.3,4\n";
    match parse_roster(text, origin) {
        Err(Error::Roster { line, field, .. }) => {
            assert_eq!(line, 3);
            assert_eq!(field, "theta");
        }
        other => panic!("unexpected {other:?}"),
    }
    let text = "name,theta,alpha,beta,s_prime\na,0.1,zz,0.3,4\n";
    match parse_roster(text, origin) {
        Err(Error::Roster { line, field, .. }) => {
            assert_eq!(line, 2);
            assert_eq!(field, "alpha");
        }
        other => panic!("unexpected {other:?}"),
    }
    assert!(matches!(parse_roster("", origin), Err(Error::EmptyRoster)));
    assert!(matches!(
        parse_roster("name,theta,alpha,beta,s_prime\n", origin),
        Err(Error::EmptyRoster)
    ));
    assert!(matches!(
        parse_roster("name,theta\nx,1\n", origin),
        Err(Error::Roster { line: 1, .. })
    ));
    assert_eq!(Error::EmptyRoster.to_string(), "empty roster");
}

#[test]
fn roster_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.csv");
    std::fs::write(&path, "name,theta,alpha,beta,s_prime\nx, 0.5, 0.5, 0.5, 20\n").unwrap();
    let r = load_roster(&path).unwrap();
    assert_eq!(r[0].params, StermanParams::new(0.5, 0.5, 0.5, 20.0).unwrap());
}
