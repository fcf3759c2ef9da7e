use std::io::Write;

fn main() {
    let (code, out) = biaslab_cli::run_cli(std::env::args_os());
    let mut stdout = std::io::stdout().lock();
    // A closed pipe is not worth a panic.
    let _ = stdout.write_all(out.as_bytes()).and_then(|_| stdout.flush());
    std::process::exit(code);
}
