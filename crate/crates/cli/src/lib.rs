//! `neoscope` command line: argument parsing, config files and the
//! subcommands built on the core library and the stream engine.

pub mod args;
pub mod commands;
pub mod config;
pub mod output;
pub mod pipeline;

use std::ffi::OsString;

use clap::error::ErrorKind;
use clap::Parser;

use crate::args::Cli;
use crate::commands::Usage;
use crate::output::error_line;

pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Runs one invocation and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match config::apply(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("{}", error_line("usage", &format!("{e:#}")));
            return EXIT_USAGE;
        }
    };
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return 0;
        }
        Err(e) => {
            let _ = e.print();
            let msg = e.kind().as_str().unwrap_or("invalid arguments").to_string();
            eprintln!("{}", error_line("usage", &msg));
            return EXIT_USAGE;
        }
    };
    if let Some(j) = cli.jobs {
        if j == 0 {
            eprintln!("{}", error_line("usage", "--jobs must be positive"));
            return EXIT_USAGE;
        }
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(j).build_global();
    }
    match commands::dispatch(&cli) {
        Ok(done) => {
            println!("{}", serde_json::to_string(&done).expect("result serializes"));
            0
        }
        Err(e) if e.downcast_ref::<Usage>().is_some() => {
            eprintln!("{}", error_line("usage", &e.to_string()));
            EXIT_USAGE
        }
        Err(e) => {
            eprintln!("{}", error_line("runtime", &format!("{e:#}")));
            EXIT_FAILURE
        }
    }
}
