//! Test double for the external-ranker protocol. Scores document `i` as
//! `i + 1`, or misbehaves on request:
//!
//! * `--bad-count` answers with one score too many
//! * `--non-numeric` answers with a string score
//! * `--sleep MS` waits before every reply

use std::io::{BufRead, Write};
use std::time::Duration;

use clap::Parser;
use serde_json::{json, Value};

#[derive(Parser)]
struct Args {
    #[arg(long)]
    bad_count: bool,
    #[arg(long)]
    non_numeric: bool,
    #[arg(long, default_value_t = 0)]
    sleep: u64,
}

fn main() -> anyhow::Result<()> {
    let args = Args::parse();
    let stdin = std::io::stdin();
    let mut stdout = std::io::stdout().lock();
    for line in stdin.lock().lines() {
        let request: Value = serde_json::from_str(&line?)?;
        let id = request["id"].as_u64().unwrap_or(0);
        let n = request
            .get("documents")
            .or_else(|| request.get("features"))
            .and_then(Value::as_array)
            .map_or(0, Vec::len);
        let count = if args.bad_count { n + 1 } else { n };
        let scores: Vec<Value> = (0..count)
            .map(|i| if args.non_numeric { json!("high") } else { json!(i as f64 + 1.0) })
            .collect();
        if args.sleep > 0 {
            std::thread::sleep(Duration::from_millis(args.sleep));
        }
        let sent = writeln!(stdout, "{}", json!({ "id": id, "scores": scores })).and_then(|()| stdout.flush());
        match sent {
            // the client hung up (e.g. after a timeout)
            Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => return Ok(()),
            other => other?,
        }
    }
    Ok(())
}
