fn main() {
    std::process::exit(hmocma::cli::main_from_env());
}
