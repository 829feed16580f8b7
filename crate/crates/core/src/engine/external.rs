use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::os::unix::process::ExitStatusExt;
use std::path::{Path, PathBuf};
use std::process::{Child, ChildStdin, Command, ExitStatus, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use super::protocol::{WireRequest, WireResponse, COV_FILE_ENV};
use super::{CrashInfo, Engine, EngineError, EngineVerdict, Request, COVERAGE_SLOTS};

/// Wall-clock limit for one request.
pub const DEFAULT_REQUEST_TIMEOUT: Duration = Duration::from_secs(2);

const STDERR_CAP: usize = 64 * 1024;

struct Running {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
    stderr: Arc<Mutex<Vec<u8>>>,
    stderr_thread: Option<JoinHandle<()>>,
}

impl Running {
    fn start(command: &[String], env: &BTreeMap<String, String>) -> Result<Running, EngineError> {
        let (prog, args) = command.split_first().ok_or_else(|| EngineError::Spawn("empty command".into()))?;
        let mut child = Command::new(prog)
            .args(args)
            .envs(env)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| EngineError::Spawn(format!("{prog}: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let mut err_pipe = child.stderr.take().expect("piped stderr");
        let (tx, lines) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let stop = line.is_err();
                if tx.send(line).is_err() || stop {
                    break;
                }
            }
        });
        let stderr = Arc::new(Mutex::new(Vec::new()));
        let sink = stderr.clone();
        let stderr_thread = thread::spawn(move || {
            let mut buf = [0u8; 4096];
            while let Ok(n) = err_pipe.read(&mut buf) {
                if n == 0 {
                    break;
                }
                let mut s = sink.lock().unwrap_or_else(|e| e.into_inner());
                let room = STDERR_CAP.saturating_sub(s.len());
                s.extend_from_slice(&buf[..n.min(room)]);
            }
        });
        Ok(Running { child, stdin, lines, stderr, stderr_thread: Some(stderr_thread) })
    }

    /// Waits briefly for the process to exit on its own, then kills it.
    fn reap(mut self) -> (Option<ExitStatus>, String) {
        let deadline = Instant::now() + Duration::from_millis(500);
        let status = loop {
            match self.child.try_wait() {
                Ok(Some(s)) => break Some(s),
                Ok(None) if Instant::now() < deadline => thread::sleep(Duration::from_millis(5)),
                _ => {
                    let _ = self.child.kill();
                    break self.child.wait().ok();
                }
            }
        };
        if let Some(t) = self.stderr_thread.take() {
            let _ = t.join();
        }
        let text = String::from_utf8_lossy(&self.stderr.lock().unwrap_or_else(|e| e.into_inner())).into_owned();
        (status, text)
    }
}

impl Drop for Running {
    fn drop(&mut self) {
        if self.stderr_thread.is_some() {
            let _ = self.child.kill();
            let _ = self.child.wait();
        }
    }
}

/// An engine living in a child process.
///
/// The process is restarted on the next request after a crash or a
/// timeout. Requests are answered strictly in order.
pub struct ExternalEngine {
    command: Vec<String>,
    env: BTreeMap<String, String>,
    cov_file: Option<PathBuf>,
    timeout: Duration,
    running: Option<Running>,
    next_id: u64,
    last_id: Option<u64>,
    coverage: Option<Vec<u8>>,
}

/// Starts `command` and checks that it answers a trivial request.
pub fn spawn_external(command: &[String], env: &BTreeMap<String, String>) -> Result<ExternalEngine, EngineError> {
    let mut e = ExternalEngine {
        command: command.to_vec(),
        env: env.clone(),
        cov_file: env.get(COV_FILE_ENV).map(PathBuf::from),
        timeout: DEFAULT_REQUEST_TIMEOUT,
        running: None,
        next_id: 0,
        last_id: None,
        coverage: None,
    };
    match e.search(b"", b"")? {
        EngineVerdict::Ok(_) | EngineVerdict::CompileError(_) => {
            e.coverage = None;
            Ok(e)
        }
        other => Err(EngineError::Handshake(format!("{other:?}"))),
    }
}

impl ExternalEngine {
    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    /// Id of the most recent request sent to the adapter.
    pub fn last_request_id(&self) -> Option<u64> {
        self.last_id
    }

    fn crash(&mut self, request: Request) -> EngineVerdict {
        let (status, stderr) = match self.running.take() {
            Some(r) => r.reap(),
            None => (None, String::new()),
        };
        let exit_code = status.and_then(|s| s.code());
        let mut signal = status.and_then(|s| s.signal());
        if exit_code.is_none() && signal.is_none() {
            signal = Some(libc::SIGKILL);
        }
        let sanitizer_report = (stderr.contains("Sanitizer") || stderr.contains("ERROR:")).then_some(stderr);
        EngineVerdict::Crash(CrashInfo { exit_code, signal, sanitizer_report, last_request: request })
    }

    fn collect_coverage(&mut self) {
        let Some(path) = &self.cov_file else { return };
        let Some(counters) = read_counter_file(path) else {
            log::warn!("coverage file {} missing or not {COVERAGE_SLOTS} bytes", path.display());
            return;
        };
        let acc = self.coverage.get_or_insert_with(|| vec![0; COVERAGE_SLOTS]);
        for (a, c) in acc.iter_mut().zip(counters) {
            *a = a.saturating_add(c);
        }
    }
}

/// Reads a counter file of exactly [`COVERAGE_SLOTS`] bytes.
pub fn read_counter_file(path: &Path) -> Option<Vec<u8>> {
    let data = std::fs::read(path).ok()?;
    (data.len() == COVERAGE_SLOTS).then_some(data)
}

impl Engine for ExternalEngine {
    fn search(&mut self, pattern: &[u8], input: &[u8]) -> Result<EngineVerdict, EngineError> {
        if self.running.is_none() {
            self.running = Some(Running::start(&self.command, &self.env)?);
        }
        let id = self.next_id;
        self.next_id += 1;
        self.last_id = Some(id);
        let request = Request { id, pattern: pattern.to_vec(), input: input.to_vec() };
        let line = serde_json::to_string(&WireRequest::search(id, pattern, input)).expect("serializable request");
        let run = self.running.as_mut().expect("started above");
        let sent = writeln!(run.stdin, "{line}").and_then(|_| run.stdin.flush());
        if sent.is_err() {
            return Ok(self.crash(request));
        }
        match run.lines.recv_timeout(self.timeout) {
            Ok(Ok(line)) => {
                let parsed = serde_json::from_str::<WireResponse>(&line)
                    .map_err(|e| e.to_string())
                    .and_then(|r| if r.id() == id { Ok(r) } else { Err(format!("response id {} for {id}", r.id())) })
                    .and_then(|r| r.into_verdict(input.len()));
                match parsed {
                    Ok(v) => {
                        self.collect_coverage();
                        Ok(v)
                    }
                    Err(e) => {
                        log::warn!("malformed response from {}: {e}", self.label());
                        Ok(self.crash(request))
                    }
                }
            }
            Ok(Err(_)) | Err(RecvTimeoutError::Disconnected) => Ok(self.crash(request)),
            Err(RecvTimeoutError::Timeout) => {
                if let Some(r) = self.running.take() {
                    drop(r);
                }
                Ok(EngineVerdict::Timeout)
            }
        }
    }

    fn take_coverage(&mut self) -> Option<Vec<u8>> {
        self.cov_file.as_ref()?;
        Some(self.coverage.take().unwrap_or_else(|| vec![0; COVERAGE_SLOTS]))
    }

    fn label(&self) -> String {
        format!("cmd:{}", self.command.join(" "))
    }
}
