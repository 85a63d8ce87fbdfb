fn main() {
    std::process::exit(pathtrans_cli::run_cli(std::env::args_os()));
}
