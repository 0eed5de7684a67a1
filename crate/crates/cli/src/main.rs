fn main() {
    std::process::exit(hamsys_cli::run_from_env());
}
