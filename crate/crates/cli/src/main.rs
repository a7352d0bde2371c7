fn main() {
    std::process::exit(polylane_cli::run(std::env::args_os()));
}
