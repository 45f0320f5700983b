use std::process::ExitCode;

use clap::Parser;
use fhmimo_cli::{execute, Cli, MANIFEST_FILE};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(m) => {
            for f in &m.files {
                println!("{}/{}  {}", m.out_dir, f.path, f.sha256);
            }
            println!("{}/{MANIFEST_FILE}", m.out_dir);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("fhmimo: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
