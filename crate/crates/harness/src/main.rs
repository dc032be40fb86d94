fn main() {
    if let Err(e) = stringgp_harness::cli::run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
