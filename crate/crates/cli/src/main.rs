fn main() {
    std::process::exit(combustion1d_cli::run(std::env::args_os()));
}
