use std::process::ExitCode;

use clap::Parser;
use cvqkd::sweep::{find_zero_crossing, parse_config, render, run_sweep, write_atomic, CliArgs};

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERIC: u8 = 3;
const EXIT_IO: u8 = 4;

fn main() -> ExitCode {
    let args = CliArgs::parse();
    let document = match &args.config {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(text) => Some(text),
            Err(e) => {
                eprintln!("error: cannot read config {}: {e}", path.display());
                return ExitCode::from(EXIT_IO);
            }
        },
        None => None,
    };
    let config = match parse_config(&args, document.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    eprintln!("resolved config: {}", serde_json::to_string(&config.to_document()).expect("config serializes"));

    let file = run_sweep(&config);
    for row in file.rows.iter().filter(|r| !r.is_ok()) {
        eprintln!("warning: {} km failed: {}", row.distance_km, row.error.as_deref().unwrap_or(""));
    }
    let text = render(&file, config.output_format);
    match &config.output_path {
        Some(path) => {
            if let Err(e) = write_atomic(path, text.as_bytes()) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return ExitCode::from(EXIT_IO);
            }
        }
        None => print!("{text}"),
    }
    if file.rows.iter().all(|r| !r.is_ok()) {
        eprintln!("error: every grid point failed");
        return ExitCode::from(EXIT_NUMERIC);
    }
    if args.crossing {
        match find_zero_crossing(&config, &file.rows) {
            Ok(d) => eprintln!("zero crossing: {d:.1} km"),
            Err(e) => eprintln!("zero crossing: {e}"),
        }
    }
    ExitCode::SUCCESS
}
