use unlearn_harness::cli;
use unlearn_harness::report::{json_record, JsonValue};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let parsed = match cli::parse_args(&args) {
        Ok(parsed) => parsed,
        Err(err) => {
            eprintln!(
                "{}",
                json_record(&[
                    ("error", JsonValue::from(format!("{err}"))),
                    ("stage", JsonValue::from("argument parsing")),
                ])
            );
            std::process::exit(2);
        }
    };
    match cli::execute(&parsed) {
        Ok(lines) => {
            for line in lines {
                println!("{line}");
            }
        }
        Err(err) => {
            eprintln!(
                "{}",
                json_record(&[
                    ("error", JsonValue::from(format!("{err}"))),
                    ("command", JsonValue::from(parsed.command.clone())),
                ])
            );
            std::process::exit(1);
        }
    }
}
