fn main() {
    std::process::exit(birkhoff_kg::cli::run(std::env::args_os()));
}
