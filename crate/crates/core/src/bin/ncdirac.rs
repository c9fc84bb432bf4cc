fn main() {
    let tol = std::env::var(ncdirac::cli::TOL_ENV).ok();
    let code = ncdirac::cli::run(std::env::args_os(), tol.as_deref(), &mut std::io::stdout(), &mut std::io::stderr());
    std::process::exit(code);
}
