fn main() {
    std::process::exit(consensus_admm::cli::main_with_args(std::env::args_os()));
}
