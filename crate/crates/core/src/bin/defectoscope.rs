fn main() {
    std::process::exit(defectoscope::cli::run_cli(std::env::args_os()));
}
