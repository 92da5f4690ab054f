//! Writes a complete synthetic sample (cloud, calibration, images,
//! annotations and a run manifest) that the `lapt` commands can consume.
//!
//! cargo run --release --example simulate_scene -- out/sample

use lapt::cli::main_with_args;

fn main() {
    let out = std::env::args().nth(1).unwrap_or_else(|| "sample".into());
    let code = main_with_args(["lapt", "simulate", "--out", &out, "--seed", "1", "--render"]);
    if code == 0 {
        println!("next: lapt bev --manifest {out}/manifest.json --render");
    }
    std::process::exit(code);
}
