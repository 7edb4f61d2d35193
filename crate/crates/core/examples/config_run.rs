//! Drive the command-line front end from code: parse a TOML experiment,
//! synthesize a sweep, then fit and invert the written spectrum.

use std::fs;

use zfesr::cli::main_with_args;
use zfesr::config::parse_config_str;

const EXPERIMENT: &str = r#"
seed = 5

[target]
species = "p1_n15"
a_perp = "110.7 MHz"
a_zz = "155 MHz"

[zf]
contrast = "3 %"

[noise]
repetitions = 100000
"#;

fn main() -> zfesr::Result<()> {
    let cfg = parse_config_str(EXPERIMENT)?;
    println!("config digest {}", cfg.digest());

    let dir = std::env::temp_dir().join("zfesr-config-run");
    fs::create_dir_all(&dir).map_err(|e| zfesr::Error::io(&dir, e))?;
    let cfg_path = dir.join("experiment.toml");
    fs::write(&cfg_path, EXPERIMENT).map_err(|e| zfesr::Error::io(&cfg_path, e))?;

    let base = ["zfesr", "--config", cfg_path.to_str().unwrap(), "--out-dir", dir.to_str().unwrap()];
    let code = main_with_args(base.iter().copied().chain(["zf-sweep"]));
    println!("zf-sweep exited {code}");

    let csv = fs::read_dir(&dir)
        .map_err(|e| zfesr::Error::io(&dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .find(|p| p.to_string_lossy().ends_with("_zf-sweep.csv"))
        .expect("sweep writes a csv");
    let code = main_with_args(base.iter().copied().chain(["fit", "--input", csv.to_str().unwrap()]));
    println!("fit exited {code}; outputs in {}", dir.display());
    Ok(())
}
