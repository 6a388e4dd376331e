fn main() {
    std::process::exit(evsurv_cli::main_with_args(std::env::args_os()));
}
