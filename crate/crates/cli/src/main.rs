fn main() {
    let code = prooftrace_cli::main_entry(std::env::args().collect());
    std::process::exit(code);
}
