fn main() {
    let args: Vec<String> = std::env::args().collect();
    std::process::exit(bose_cycles::cli::run(&args));
}
