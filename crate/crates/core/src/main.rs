fn main() {
    let code = dlogdist::cli::run(std::env::args_os());
    std::process::exit(code);
}
