fn main() {
    std::process::exit(swarmbt::cli::main_with_args(std::env::args_os()));
}
