fn main() {
    std::process::exit(plancherel_projectors::cli::run(std::env::args_os()));
}
