fn main() {
    std::process::exit(datapricing::run(std::env::args_os()));
}
