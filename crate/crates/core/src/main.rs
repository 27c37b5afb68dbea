fn main() {
    std::process::exit(fusionlab::cli::main());
}
