use clap::Parser;
use fockmetro_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(files) => {
            let files: Vec<String> = files.iter().map(|p| p.display().to_string()).collect();
            println!("{}", serde_json::json!({"status": "ok", "command": cli.command.name(), "outputs": files}));
        }
        Err(e) => {
            eprintln!("{}", e.to_json_line());
            std::process::exit(e.exit_code());
        }
    }
}
