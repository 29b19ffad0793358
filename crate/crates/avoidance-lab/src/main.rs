fn main() {
    let mut out = std::io::stdout().lock();
    if let Err(e) = avoidance_lab::cli::run(std::env::args_os(), &mut out) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
