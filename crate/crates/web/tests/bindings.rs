use hpdcov_web::{curve_json, interval_json, monte_carlo_json, MAX_MC_SAMPLES};
use serde_json::Value;

#[test]
fn curve_document() {
    let v: Value = serde_json::from_str(&curve_json("laplace", 0.05, 0.0, 200).unwrap()).unwrap();
    assert_eq!(v["family"], "laplace");
    let min = v["min"]["coverage"].as_f64().unwrap();
    assert!((min - 0.92727).abs() < 5e-5);
    let sides: Vec<&str> = v["points"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p["side"].as_str().unwrap())
        .collect();
    assert_eq!(sides.iter().filter(|s| **s == "left").count(), 1);
    assert_eq!(v["bracket"][0].as_f64().unwrap(), 1.0 - 0.075);
}

#[test]
fn interval_document() {
    let v: Value = serde_json::from_str(&interval_json("normal", 0.1, 0.5).unwrap()).unwrap();
    assert_eq!(v["lower"].as_f64().unwrap(), 0.0);
    assert!((v["posterior_mass"].as_f64().unwrap() - 0.9).abs() < 1e-9);
}

#[test]
fn monte_carlo_document() {
    let v: Value =
        serde_json::from_str(&monte_carlo_json("polyexp", 0.1, 1.0, 20_000, 3).unwrap()).unwrap();
    assert!(v["deviation_se"].as_f64().unwrap().abs() < 4.0);
    assert!(monte_carlo_json("normal", 0.1, 1.0, MAX_MC_SAMPLES + 1, 3).is_err());
}

#[test]
fn errors_are_messages() {
    assert!(curve_json("student:3", 0.1, 0.0, 100)
        .unwrap_err()
        .contains("not logconcave"));
    assert!(interval_json("cauchy", 0.1, 0.0).is_err());
    assert!(interval_json("normal", 2.0, 0.0).is_err());
}
