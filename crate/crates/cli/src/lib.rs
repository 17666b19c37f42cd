//! Command-line front end: configuration, file formats and the four
//! subcommands.

pub mod commands;
pub mod config;
pub mod io;

use dagprobit::Error;

/// Process exit status for a failed command.
pub fn exit_code(err: &Error) -> u8 {
    if err.is_io() {
        4
    } else if err.is_numeric() {
        3
    } else {
        2
    }
}
