fn main() {
    std::process::exit(opspace::cli::run(std::env::args_os()));
}
