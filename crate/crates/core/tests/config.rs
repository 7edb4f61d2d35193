use zfesr::config::{parse_config_str, ExperimentConfig, SegmentTemplate};
use zfesr::dynamics::Segment;
use zfesr::error::ConfigError;
use zfesr::spectra::LineOrder;
use zfesr::Error;

fn errors(text: &str) -> Vec<ConfigError> {
    match parse_config_str(text) {
        Err(Error::Config(v)) => v,
        other => panic!("expected config errors, got {other:?}"),
    }
}

#[test]
fn minimal_p1_config() {
    let cfg = parse_config_str("[target]\nspecies = \"p1_n15\"\na_perp = \"110.7 MHz\"\na_zz = \"0.155 GHz\"\n").unwrap();
    let a = cfg.target.hyperfine.principal_matrix();
    assert!((a[(0, 0)] - 110.7).abs() < 1e-12);
    assert!((a[(2, 2)] - 155.0).abs() < 1e-9);
    assert_eq!(cfg.zf, ExperimentConfig::default().zf);
}

#[test]
fn empty_file_is_the_default() {
    assert_eq!(parse_config_str("").unwrap(), ExperimentConfig::default());
}

#[test]
fn unit_conversion() {
    let cfg = parse_config_str("[zf]\ntau = \"10000 ns\"\n[ensemble]\nposition = [\"15 A\", \"2 nm\", \"5 nm\"]\n").unwrap();
    assert!((cfg.zf.tau - 10.0).abs() < 1e-12);
    let d = ExperimentConfig::default();
    assert_eq!(cfg.target, d.target);
}

#[test]
fn negative_power_names_the_field() {
    let e = errors("[spinlock]\nlock_power = \"-5 MHz\"\n");
    assert_eq!(e.len(), 1);
    assert_eq!(e[0].field, "spinlock.lock_power");
    assert_eq!((e[0].line, e[0].column), (2, 14));
}

#[test]
fn duplicate_key_reports_both_locations() {
    let e = errors("[target]\na_perp = \"114 MHz\"\na_perp = \"115 MHz\"\n");
    assert_eq!(e.len(), 1);
    assert_eq!(e[0].field, "target.a_perp");
    assert_eq!(e[0].line, 3);
    assert!(e[0].message.contains("2:1"), "{}", e[0].message);
}

#[test]
fn unknown_key_rejected() {
    let e = errors("[zf]\nfwhmm = \"8 MHz\"\n");
    assert_eq!(e[0].field, "zf.fwhmm");
    assert_eq!(e[0].line, 2);
}

#[test]
fn missing_unit_rejected() {
    let e = errors("[zf]\ntau = 10\n");
    assert_eq!(e[0].field, "zf.tau");
    let e = errors("[zf]\ntau = \"10us\"\n");
    assert_eq!(e[0].field, "zf.tau");
    let e = errors("[zf]\ntau = \"10 MHz\"\n");
    assert_eq!(e[0].field, "zf.tau");
}

#[test]
fn all_errors_collected_in_order() {
    let e = errors("seed = 1\n[zf]\ntau = 10\nfwhm = \"-1 MHz\"\n[nv]\nbogus = 1\n");
    let fields: Vec<&str> = e.iter().map(|e| e.field.as_str()).collect();
    assert_eq!(fields, ["zf.tau", "zf.fwhm", "nv.bogus"]);
    let lines: Vec<usize> = e.iter().map(|e| e.line).collect();
    assert_eq!(lines, [3, 4, 6]);
}

#[test]
fn nitroxide_preset() {
    let cfg = parse_config_str("[target]\nspecies = \"nitroxide_n15\"\n[fit]\norder = \"middle_first\"\n").unwrap();
    assert_eq!(cfg.target, zfesr::spin::TargetSpinSystem::nitroxide_n15());
    assert_eq!(cfg.fit.order, LineOrder::MiddleFirst);
}

#[test]
fn segments_with_swept_duration() {
    let text = r#"
[spinlock]
tau_start = "0 us"
tau_stop = "20 us"
tau_step = "10 us"
segments = [
  { kind = "polarize" },
  { kind = "pulse", power = "200 MHz", phase = "y", duration = "0.00125 us" },
  { kind = "pulse", power = "50 MHz", phase = "x", duration = "tau" },
  { kind = "pulse", power = "200 MHz", phase = "-y", duration = "0.00125 us" },
  { kind = "readout" },
]
"#;
    let cfg = parse_config_str(text).unwrap();
    let segs = cfg.spinlock.segments.as_ref().unwrap();
    assert!(matches!(segs[2], SegmentTemplate::SweptPulse(_)));
    let seq = cfg.spinlock.sequence(7.0).unwrap();
    match &seq.segments()[2] {
        Segment::MwPulse { duration, drive } => {
            assert_eq!(*duration, 7.0);
            assert_eq!(drive.rabi_frequency, 50.0);
        }
        other => panic!("{other:?}"),
    }
    assert_eq!(cfg.spinlock.taus, vec![0.0, 10.0, 20.0]);
}

#[test]
fn digest_tracks_physics_not_output() {
    let a = parse_config_str("[output]\ndir = \"a\"\n").unwrap();
    let b = parse_config_str("[output]\ndir = \"b\"\n").unwrap();
    let c = parse_config_str("seed = 2\n").unwrap();
    assert_eq!(a.digest(), b.digest());
    assert_ne!(a.digest(), c.digest());
    assert_eq!(a.digest().len(), 12);
}

#[test]
fn duplicate_after_multiline_array() {
    let text = "[nv]\nt1_rho = [\n  [\"100 MHz\", \"70 us\"],\n  [\"300 MHz\", \"60 us\"],\n]\nt2_star = \"0.1 us\"\nt2_star = \"0.2 us\"\n";
    let e = errors(text);
    assert_eq!(e[0].field, "nv.t2_star");
    assert_eq!(e[0].line, 7);
    assert!(e[0].message.contains("6:1"), "{}", e[0].message);
}
