//! Reference adapter: serves the built-in engine over the line protocol.
//!
//! Misbehaviour can be triggered for testing the harness:
//!
//! ```text
//! rxfuzz-adapter [--fault NAME] [--crash-on PAT] [--segv-on PAT]
//!                [--asan-on PAT] [--hang-on PAT] [--garbage-on PAT]
//! ```
//!
//! Each `--*-on` flag fires when a request's pattern equals PAT.

use std::io::{self, BufRead, Write};
use std::process::ExitCode;

use rxfuzz_core::engine::protocol::{decode, WireRequest, WireResponse, COV_FILE_ENV};
use rxfuzz_core::engine::{BuiltinEngine, Engine, FaultId};

#[derive(Default)]
struct Triggers {
    crash: Option<Vec<u8>>,
    segv: Option<Vec<u8>>,
    asan: Option<Vec<u8>>,
    hang: Option<Vec<u8>>,
    garbage: Option<Vec<u8>>,
}

fn main() -> ExitCode {
    let mut fault = None;
    let mut t = Triggers::default();
    let mut args = std::env::args().skip(1);
    while let Some(flag) = args.next() {
        let Some(value) = args.next() else {
            eprintln!("missing value for {flag}");
            return ExitCode::from(2);
        };
        let slot = match flag.as_str() {
            "--fault" => match value.parse::<FaultId>() {
                Ok(f) => {
                    fault = Some(f);
                    continue;
                }
                Err(e) => {
                    eprintln!("{e}");
                    return ExitCode::from(2);
                }
            },
            "--crash-on" => &mut t.crash,
            "--segv-on" => &mut t.segv,
            "--asan-on" => &mut t.asan,
            "--hang-on" => &mut t.hang,
            "--garbage-on" => &mut t.garbage,
            _ => {
                eprintln!("unknown flag {flag}");
                return ExitCode::from(2);
            }
        };
        *slot = Some(value.into_bytes());
    }

    let cov_path = std::env::var_os(COV_FILE_ENV);
    let mut engine = BuiltinEngine::with_fault(fault);
    if cov_path.is_some() {
        engine = engine.with_tracing();
    }
    let stdin = io::stdin();
    let mut out = io::stdout().lock();
    for line in stdin.lock().lines() {
        let Ok(line) = line else { break };
        let req: WireRequest = match serde_json::from_str(&line) {
            Ok(r) => r,
            Err(e) => {
                eprintln!("bad request: {e}");
                return ExitCode::from(3);
            }
        };
        let (Ok(pattern), Ok(input)) = (decode(&req.pattern_b64), decode(&req.input_b64)) else {
            eprintln!("bad base64 in request {}", req.id);
            return ExitCode::from(3);
        };
        let fires = |p: &Option<Vec<u8>>| p.as_deref() == Some(&pattern[..]);
        if fires(&t.crash) {
            std::process::abort();
        }
        if fires(&t.segv) {
            // SAFETY: restoring the default action and raising a signal on
            // the current thread has no memory-safety implications.
            unsafe {
                libc::signal(libc::SIGSEGV, libc::SIG_DFL);
                libc::raise(libc::SIGSEGV);
            }
        }
        if fires(&t.asan) {
            eprintln!("=================================================================");
            eprintln!("==1==ERROR: AddressSanitizer: heap-buffer-overflow on address 0x602000000011");
            eprintln!("READ of size 1 at 0x602000000011 thread T0");
            std::process::abort();
        }
        if fires(&t.hang) {
            loop {
                std::thread::sleep(std::time::Duration::from_secs(3600));
            }
        }
        if fires(&t.garbage) {
            let _ = writeln!(out, "this is not json");
            let _ = out.flush();
            continue;
        }
        let verdict = engine.exec(&pattern, &input);
        if let Some(path) = &cov_path {
            if let Some(counters) = engine.take_coverage() {
                if let Err(e) = std::fs::write(path, counters) {
                    eprintln!("cannot write coverage: {e}");
                }
            }
        }
        let resp = WireResponse::from_verdict(req.id, &verdict).unwrap_or(WireResponse::CompileError {
            id: req.id,
            message: format!("{verdict:?}"),
        });
        let line = serde_json::to_string(&resp).expect("serializable response");
        if writeln!(out, "{line}").and_then(|_| out.flush()).is_err() {
            break;
        }
    }
    ExitCode::SUCCESS
}
