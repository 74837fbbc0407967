fn main() {
    std::process::exit(ema_gateway::cli::run(std::env::args_os()));
}
