fn main() {
    std::process::exit(yysplat::cli::run(std::env::args_os()));
}
