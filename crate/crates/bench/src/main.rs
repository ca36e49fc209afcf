fn main() {
    std::process::exit(bench::cli::main());
}
