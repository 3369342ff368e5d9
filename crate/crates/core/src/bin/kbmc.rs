fn main() {
    std::process::exit(kbmc::cli::main());
}
