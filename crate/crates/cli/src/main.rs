fn main() {
    std::process::exit(dcomp_cli::main_with_args(std::env::args_os()));
}
