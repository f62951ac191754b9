mod cli;
mod commands;

use std::process::ExitCode;

use clap::Parser;
use tfcw_core::alloc::TrackingAllocator;
use tfcw_core::TfcwError;

#[global_allocator]
static ALLOC: TrackingAllocator = TrackingAllocator;

fn exit_code(err: &TfcwError) -> u8 {
    match err {
        TfcwError::InvalidArgument(_) => 2,
        TfcwError::Invariant(_) => 4,
        e if e.is_data_error() => 3,
        _ => 4,
    }
}

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors
    let cli = cli::Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
