fn main() {
    std::process::exit(timdof::cli::main_with(std::env::args_os()));
}
