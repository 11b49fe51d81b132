fn main() {
    std::process::exit(lure_cli::run(std::env::args_os()));
}
