fn main() {
    let code = emoclass::cli::run(std::env::args_os());
    std::process::exit(code);
}
