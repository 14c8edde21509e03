use std::process::ExitCode;

// Restore the default SIGPIPE disposition so piping into `head` kills the
// process quietly instead of panicking on the first print after the pipe
// closes.
#[cfg(unix)]
fn reset_sigpipe() {
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
}

#[cfg(not(unix))]
fn reset_sigpipe() {}

fn main() -> ExitCode {
    reset_sigpipe();
    bbckit::cli::run(std::env::args_os())
}
