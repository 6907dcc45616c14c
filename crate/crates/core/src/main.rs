fn main() {
    std::process::exit(cobol_embed::cli::run(std::env::args_os()));
}
