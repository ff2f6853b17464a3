fn main() {
    let mut out = std::io::stdout().lock();
    if let Err(e) = handwash::harness::cli::run(std::env::args_os(), &mut out) {
        if let Some(c) = e.downcast_ref::<clap::Error>() {
            c.exit();
        }
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
