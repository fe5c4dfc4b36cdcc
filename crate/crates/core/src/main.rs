fn main() {
    std::process::exit(meshsim::cli::main_with_args(std::env::args_os()));
}
