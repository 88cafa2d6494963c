fn main() {
    std::process::exit(umauc::cli::main_with_args());
}
