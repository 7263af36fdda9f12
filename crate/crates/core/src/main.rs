fn main() {
    std::process::exit(ajlef::cli::run(std::env::args_os()));
}
