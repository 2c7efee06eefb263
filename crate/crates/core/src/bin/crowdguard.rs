fn main() {
    std::process::exit(crowdguard::cli::main_with_args(std::env::args_os()));
}
