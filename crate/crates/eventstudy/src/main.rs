fn main() {
    std::process::exit(eventstudy::cli::run(std::env::args_os()));
}
