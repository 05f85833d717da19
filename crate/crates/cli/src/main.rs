fn main() {
    std::process::exit(infofresh_cli::main_with_args(std::env::args_os()));
}
