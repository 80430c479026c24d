fn main() {
    std::process::exit(folkmetrics_cli::run(std::env::args_os()));
}
