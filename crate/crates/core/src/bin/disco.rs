fn main() {
    std::process::exit(discoprobe::cli::run_cli(std::env::args_os()));
}
