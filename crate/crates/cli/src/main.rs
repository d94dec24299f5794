fn main() {
    std::process::exit(kptoda_cli::run_command(std::env::args_os()));
}
