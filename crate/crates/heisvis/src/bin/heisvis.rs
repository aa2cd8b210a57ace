fn main() {
    std::process::exit(heisvis::cli::run_env());
}
