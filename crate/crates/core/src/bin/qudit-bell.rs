fn main() {
    std::process::exit(qudit_bell::cli::run(std::env::args_os()));
}
