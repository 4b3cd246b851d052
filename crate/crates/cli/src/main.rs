fn main() {
    std::process::exit(regswitch_cli::main_with_args(std::env::args_os()));
}
