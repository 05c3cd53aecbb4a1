fn main() {
    std::process::exit(corebox_cli::run_from_args(std::env::args_os()));
}
