fn main() {
    std::process::exit(darkwatch::run(std::env::args_os()));
}
