use std::io::Write;

fn main() {
    if let Err(e) = finsler_sph_cli::configure_threads() {
        let _ = writeln!(std::io::stderr(), "error: {e}");
        std::process::exit(finsler_sph_cli::EXIT_USAGE);
    }
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let code = finsler_sph_cli::run_cli(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock());
    std::process::exit(code);
}
