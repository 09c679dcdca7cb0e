use std::io::Write;

fn main() {
    let report = mroot_cli::run_command(std::env::args_os());
    if report.code == 2 {
        if let Some(msg) = report.value.pointer("/error/message").and_then(|m| m.as_str()) {
            eprintln!("{msg}");
        }
    }
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(report.render().as_bytes());
    let _ = out.flush();
    std::process::exit(report.code);
}
