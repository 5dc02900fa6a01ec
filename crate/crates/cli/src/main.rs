fn main() {
    std::process::exit(phri_cli::run(std::env::args_os()));
}
