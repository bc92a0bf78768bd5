fn main() {
    std::process::exit(fracspec::cli::main());
}
