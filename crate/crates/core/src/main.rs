fn main() {
    std::process::exit(hybrid_distill::harness::cli::run(std::env::args_os()));
}
