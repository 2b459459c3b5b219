fn main() {
    std::process::exit(jawprint_cli::run(std::env::args_os()));
}
