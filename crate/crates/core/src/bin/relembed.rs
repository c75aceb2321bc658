use std::process::ExitCode;

fn main() -> ExitCode {
    let mut stdout = std::io::stdout().lock();
    match relembed::cli::run(std::env::args_os(), &mut stdout) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.code == 0 => {
            // --help and --version
            print!("{}", e.message);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("relembed: {}", e.message.trim_end());
            ExitCode::from(e.code as u8)
        }
    }
}
