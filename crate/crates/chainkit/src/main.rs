use std::process::ExitCode;

use clap::Parser;

use chainkit::cli::{dispatch, write_record, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = cli.into_config();
    let record = match dispatch(&config) {
        Ok(record) => record,
        Err(err) => {
            eprintln!("chainkit: {err}");
            return ExitCode::from(2);
        }
    };
    print!("{}", record.render(config.format));
    if let Some(out) = &config.out {
        if let Err(err) = write_record(&record, out) {
            eprintln!("chainkit: cannot write record to {out}: {err}");
            return ExitCode::from(2);
        }
    }
    if record.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
