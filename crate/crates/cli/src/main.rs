use std::process::ExitCode;

fn main() -> ExitCode {
    let matches = match echo_lab::cli::command().try_get_matches() {
        Ok(m) => m,
        Err(e) => e.exit(),
    };
    let command_line = std::env::args().collect::<Vec<_>>().join(" ");
    match echo_lab::cli::dispatch(&matches, &command_line) {
        Ok(runs) => {
            for (dir, manifest) in runs {
                println!(
                    "{}: {} files in {:.2} s",
                    dir.display(),
                    manifest.outputs.len(),
                    manifest.wall_time_s
                );
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("echo-lab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
