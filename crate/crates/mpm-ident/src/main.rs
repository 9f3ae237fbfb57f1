use std::process::exit;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    exit(mpm_ident::cli::run(std::env::args_os()));
}
