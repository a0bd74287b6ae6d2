use proptest::prelude::*;
use rbchar::detect::{DetectionReport, StageRecord, Verdict};
use rbchar::frequency::{run_frequency_recursion, FrequencyConfig};
use rbchar::io::*;
use rbchar::point_process::{PointPattern, Window};
use rbchar::presets::*;

fn to_string(f: impl FnOnce(&mut Vec<u8>)) -> String {
    let mut buf = Vec::new();
    f(&mut buf);
    String::from_utf8(buf).unwrap()
}

#[test]
fn series_headers_and_comments() {
    assert_eq!(parse_series("1\n2.5\n-3\n").unwrap(), vec![1.0, 2.5, -3.0]);
    assert_eq!(parse_series("value\n# note\n1\n\n2\n").unwrap(), vec![1.0, 2.0]);
    assert!(parse_series("value\n").is_err());
    assert!(parse_series("1\nabc\n").is_err());
    assert!(parse_series("1\nNaN\n").is_err());
}

#[test]
fn spatial_header_picks_columns() {
    let (l, v) = parse_spatial("value,y,x\n3,2,1\n").unwrap();
    assert_eq!(l, vec![vec![1.0, 2.0]]);
    assert_eq!(v, vec![3.0]);
    assert!(parse_spatial("x,y\n1,2\n").is_err());
    assert!(parse_spatial("1,2\n").is_err());
    let (l, v) = parse_spacetime("1,2,3,4\n").unwrap();
    assert_eq!((l, v), (vec![vec![1.0, 2.0, 3.0]], vec![4.0]));
}

#[test]
fn pattern_window_comment() {
    let (p, guessed) = parse_pattern("# window 0 10 0 5\nx,y\n1,1\n9,4\n").unwrap();
    assert!(!guessed);
    assert_eq!(p.window, Window::new(0.0, 10.0, 0.0, 5.0).unwrap());
    let (p, guessed) = parse_pattern("1,1\n9,4\n").unwrap();
    assert!(guessed);
    assert_eq!((p.window.x0, p.window.x1), (1.0, 9.0));
    assert!(parse_pattern("# window 0 1 0\n0.5,0.5\n").is_err());
    assert!(parse_pattern("# window 0 1 0 1\n2,0.5\n").is_err());
}

#[test]
fn writers_round_trip() {
    let xs = vec![0.1, -2.0, 1e-300, 123456.789];
    let text = to_string(|b| write_series(b, &xs).unwrap());
    assert_eq!(parse_series(&text).unwrap(), xs);

    let locs = vec![vec![0.25, 0.5], vec![1.0 / 3.0, 0.0]];
    let vals = vec![1.5, -0.0];
    let text = to_string(|b| write_field(b, &locs, &vals).unwrap());
    assert_eq!(parse_spatial(&text).unwrap(), (locs, vals));

    let st = vec![vec![0.0, 1.0, 2.0]];
    let text = to_string(|b| write_field(b, &st, &[7.0]).unwrap());
    assert!(text.starts_with("x,y,t,value"));
    assert_eq!(parse_spacetime(&text).unwrap(), (st, vec![7.0]));

    let pat = PointPattern::new(Window::new(-1.0, 2.0, 0.0, 3.0).unwrap(), vec![[0.1, 0.2], [1.9, 2.9]]).unwrap();
    let text = to_string(|b| write_pattern(b, &pat).unwrap());
    let (back, guessed) = parse_pattern(&text).unwrap();
    assert!(!guessed);
    assert_eq!(back, pat);
}

#[test]
fn file_readers() {
    let dir = std::env::temp_dir().join(format!("rbchar-io-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("s.csv");
    write_series(std::fs::File::create(&path).unwrap(), &[1.0, 2.0]).unwrap();
    assert_eq!(read_series(&path).unwrap(), vec![1.0, 2.0]);
    assert!(read_series(&dir.join("missing.csv")).is_err());
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn report_and_csv_outputs() {
    let stage = StageRecord { j: 1, s: 0.25, c: 0.5, y: true, post_mean: 0.6, post_var: 0.01 };
    let report = DetectionReport { verdict: Verdict::Stationary, stages: vec![stage.clone()], config: serde_json::Value::Null, seed: Some(3) };
    let doc = ReportDoc::from_detection(&report, serde_json::json!({"k": 1}));
    let json = doc.to_json().unwrap();
    let back: ReportDoc = serde_json::from_str(&json).unwrap();
    assert_eq!(back, doc);
    assert_eq!(back.version, VERSION);

    let text = to_string(|b| write_trajectory_csv(b, &[stage]).unwrap());
    assert_eq!(text, "j,s,c,y,post_mean,post_var\n1,0.25,0.5,1,0.6,0.01\n");

    let run = run_frequency_recursion(&[0.0, 1.0, -1.0], &FrequencyConfig::finite(1.0, 3)).unwrap();
    let text = to_string(|b| write_frequency_csv(b, &run).unwrap());
    assert_eq!(text.lines().count(), 1 + 3 * run.trajectory.len());
    assert!(text.starts_with("stage,bin,posterior_mean,posterior_variance\n1,1,"));
}

fn small() -> PresetParams {
    PresetParams { n: Some(60), t: Some(5), steps: Some(2000), grid: Some(16), ..PresetParams::default() }
}

#[test]
fn every_preset_generates() {
    for name in PRESETS {
        let d = generate(name, &small(), 1).unwrap_or_else(|e| panic!("{name}: {e}"));
        let again = generate(name, &small(), 1).unwrap();
        assert_eq!(d, again, "{name} not reproducible");
        match d {
            Dataset::Series(x) => assert!(!x.is_empty() && x.iter().all(|v| v.is_finite()), "{name}"),
            Dataset::Field { locations, values } => {
                assert_eq!(locations.len(), values.len());
                let dim = if name.starts_with("spacetime") { 3 } else { 2 };
                assert!(locations.iter().all(|l| l.len() == dim), "{name}");
            }
            Dataset::Pattern(p) => assert!(p.points.iter().all(|q| p.window.contains(*q)), "{name}"),
        }
    }
    assert!(generate("nope", &PresetParams::default(), 0).is_err());
}

#[test]
fn spacetime_rows_are_time_major() {
    let Dataset::Field { locations, .. } = generate("spacetime-s1", &small(), 2).unwrap() else { panic!() };
    assert_eq!(locations.len(), 60 * 5);
    assert!(locations[..60].iter().all(|l| l[2] == 1.0));
    assert!(locations[240..].iter().all(|l| l[2] == 5.0));
}

proptest! {
    #[test]
    fn series_round_trip(xs in prop::collection::vec(-1e12f64..1e12, 1..50)) {
        let text = to_string(|b| write_series(b, &xs).unwrap());
        prop_assert_eq!(parse_series(&text).unwrap(), xs);
    }
}
