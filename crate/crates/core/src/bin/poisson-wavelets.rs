fn main() {
    std::process::exit(poisson_wavelets::cli::run(std::env::args_os()));
}
