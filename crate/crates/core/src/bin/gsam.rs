fn main() {
    std::process::exit(gsam::harness::cli::main_with_args(std::env::args_os()));
}
