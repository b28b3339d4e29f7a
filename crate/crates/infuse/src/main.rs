use std::process::ExitCode;

use clap::Parser;
use infuse::cli::{effective_config, run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = effective_config(&cli, std::env::vars()).and_then(|cfg| {
        if cfg.threads > 0 {
            rayon::ThreadPoolBuilder::new()
                .num_threads(cfg.threads)
                .build_global()
                .map_err(|e| infuse::Error::Config(e.to_string()))?;
        }
        run(cli, cfg)
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let report = e.report();
            eprintln!("{}", serde_json::json!({ "error": report }));
            ExitCode::from(report.exit_code as u8)
        }
    }
}
