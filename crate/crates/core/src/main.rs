fn main() {
    std::process::exit(levelbt::cli::run(std::env::args_os()));
}
