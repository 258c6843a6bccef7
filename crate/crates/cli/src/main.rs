fn main() {
    std::process::exit(vlp_cli::run_from(std::env::args_os()));
}
