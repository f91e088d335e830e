fn main() {
    let argv: Vec<String> = std::env::args().collect();
    std::process::exit(modsym::cli::run(&argv));
}
