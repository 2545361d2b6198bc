fn main() {
    std::process::exit(bankruin_cli::run(std::env::args_os()));
}
