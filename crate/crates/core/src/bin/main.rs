fn main() {
    std::process::exit(unlabeled_sensing::harness::cli::run(std::env::args_os()));
}
