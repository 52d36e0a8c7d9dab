fn main() {
    std::process::exit(xxring_cli::run(std::env::args_os()));
}
