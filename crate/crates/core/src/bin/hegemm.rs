fn main() {
    std::process::exit(hegemm::cli::main_entry());
}
