fn main() {
    std::process::exit(moser_normal::cli::main());
}
