fn main() {
    std::process::exit(beliefnet_cli::run_from_args(std::env::args_os()));
}
