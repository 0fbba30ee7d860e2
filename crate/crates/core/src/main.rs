fn main() {
    std::process::exit(dronegrid::cli::run(std::env::args().skip(1)));
}
