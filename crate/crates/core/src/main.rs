fn main() {
    std::process::exit(dida::cli::main());
}
