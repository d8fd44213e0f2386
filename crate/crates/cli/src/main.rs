fn main() {
    let argv: Vec<String> = std::env::args().collect();
    std::process::exit(phisub_cli::run(&argv));
}
