fn main() {
    std::process::exit(sushi::cli::main());
}
