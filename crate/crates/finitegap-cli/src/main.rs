fn main() {
    std::process::exit(finitegap_cli::main_with_args(std::env::args_os()));
}
