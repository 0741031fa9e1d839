use std::process::ExitCode;

fn main() -> ExitCode {
    std::panic::set_hook(Box::new(|_| {}));
    let code = rde_lab::cli::dispatch(std::env::args_os());
    ExitCode::from(u8::try_from(code).unwrap_or(3))
}
