//! Runs a DIMACS/QDIMACS solver as a subprocess.
//!
//! The command line is split shell-style. If it contains `{file}`, the
//! instance is written to a temporary file whose path replaces the
//! placeholder; otherwise the instance is piped to stdin. The verdict is read
//! from `s SATISFIABLE` / `s UNSATISFIABLE` (or the QDIMACS forms `s cnf 1` /
//! `s cnf 0`), falling back to exit codes 10 and 20. Model literals come from
//! `v` or `V` lines.

use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};
use std::thread;
use std::time::{Duration, Instant};

use super::SatError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Sat,
    Qsat,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExternalOutcome {
    /// Signed DIMACS literals, when the solver printed any.
    Sat(Option<Vec<i32>>),
    Unsat,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExternalSolver {
    pub command: String,
    pub timeout: Option<Duration>,
}

static TEMP_COUNTER: AtomicU64 = AtomicU64::new(0);

impl ExternalSolver {
    pub fn new(command: impl Into<String>) -> Self {
        Self {
            command: command.into(),
            timeout: None,
        }
    }

    pub fn with_timeout(mut self, timeout: Option<Duration>) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn solve(&self, text: &str, kind: SolverKind) -> Result<ExternalOutcome, SatError> {
        let mut argv = shlex::split(&self.command)
            .filter(|a| !a.is_empty())
            .ok_or_else(|| SatError::SolverCrashed(format!("cannot parse command `{}`", self.command)))?;
        let mut temp: Option<PathBuf> = None;
        if argv.iter().any(|a| a.contains("{file}")) {
            let ext = match kind {
                SolverKind::Sat => "cnf",
                SolverKind::Qsat => "qdimacs",
            };
            let path = std::env::temp_dir().join(format!(
                "fsmmint-{}-{}.{ext}",
                std::process::id(),
                TEMP_COUNTER.fetch_add(1, Ordering::Relaxed)
            ));
            std::fs::write(&path, text).map_err(|e| SatError::SolverCrashed(e.to_string()))?;
            for a in &mut argv {
                *a = a.replace("{file}", &path.to_string_lossy());
            }
            temp = Some(path);
        }
        let result = self.run(&argv, temp.is_none().then_some(text));
        if let Some(path) = temp {
            let _ = std::fs::remove_file(path);
        }
        let (stdout, code) = result?;
        parse_output(&stdout, code)
    }

    fn run(&self, argv: &[String], stdin_text: Option<&str>) -> Result<(String, Option<i32>), SatError> {
        let crashed = |e: std::io::Error| SatError::SolverCrashed(format!("{}: {e}", argv[0]));
        let mut child = Command::new(&argv[0])
            .args(&argv[1..])
            .stdin(if stdin_text.is_some() {
                Stdio::piped()
            } else {
                Stdio::null()
            })
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(crashed)?;

        let writer = stdin_text.map(|t| {
            let mut stdin = child.stdin.take().expect("piped stdin");
            let t = t.to_owned();
            // A solver may exit before reading everything; ignore broken pipes.
            thread::spawn(move || {
                let _ = stdin.write_all(t.as_bytes());
            })
        });
        let mut stdout = child.stdout.take().expect("piped stdout");
        let reader = thread::spawn(move || {
            let mut s = String::new();
            let _ = stdout.read_to_string(&mut s);
            s
        });

        let start = Instant::now();
        let status = loop {
            if let Some(status) = child.try_wait().map_err(crashed)? {
                break status;
            }
            if self.timeout.is_some_and(|t| start.elapsed() >= t) {
                let _ = child.kill();
                let _ = child.wait();
                return Err(SatError::Timeout);
            }
            thread::sleep(Duration::from_millis(2));
        };
        if let Some(w) = writer {
            let _ = w.join();
        }
        let out = reader.join().unwrap_or_default();
        Ok((out, status.code()))
    }
}

fn parse_output(stdout: &str, code: Option<i32>) -> Result<ExternalOutcome, SatError> {
    let mut verdict: Option<bool> = None;
    let mut lits: Vec<i32> = Vec::new();
    let mut saw_values = false;
    for line in stdout.lines() {
        let mut words = line.split_whitespace();
        match words.next() {
            Some("s") => {
                let rest: Vec<&str> = words.collect();
                verdict = match rest.as_slice() {
                    ["SATISFIABLE", ..] => Some(true),
                    ["UNSATISFIABLE", ..] => Some(false),
                    ["cnf", "1", ..] => Some(true),
                    ["cnf", "0", ..] => Some(false),
                    _ => verdict,
                };
            }
            Some("v" | "V") => {
                saw_values = true;
                for w in words {
                    let l: i32 = w.parse().map_err(|_| {
                        SatError::SolverCrashed(format!("malformed value line `{line}`"))
                    })?;
                    if l != 0 {
                        lits.push(l);
                    }
                }
            }
            _ => {}
        }
    }
    let verdict = verdict.or(match code {
        Some(10) => Some(true),
        Some(20) => Some(false),
        _ => None,
    });
    match verdict {
        Some(true) => Ok(ExternalOutcome::Sat(saw_values.then_some(lits))),
        Some(false) => Ok(ExternalOutcome::Unsat),
        None => Err(SatError::SolverCrashed(format!(
            "no verdict in solver output (exit code {code:?})"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sat_output() {
        let out = "c comment\ns SATISFIABLE\nv 1 -2\nv 3 0\n";
        assert_eq!(
            parse_output(out, Some(10)).unwrap(),
            ExternalOutcome::Sat(Some(vec![1, -2, 3]))
        );
    }

    #[test]
    fn parses_qdimacs_output_and_exit_codes() {
        assert_eq!(parse_output("s cnf 0 3 4\n", None).unwrap(), ExternalOutcome::Unsat);
        assert_eq!(
            parse_output("s cnf 1 3 4\nV -1 0\n", None).unwrap(),
            ExternalOutcome::Sat(Some(vec![-1]))
        );
        assert_eq!(parse_output("", Some(10)).unwrap(), ExternalOutcome::Sat(None));
        assert_eq!(parse_output("", Some(20)).unwrap(), ExternalOutcome::Unsat);
        assert!(matches!(parse_output("garbage", Some(1)), Err(SatError::SolverCrashed(_))));
    }

    #[test]
    fn missing_command_is_a_crash() {
        let s = ExternalSolver::new("/nonexistent/solver-binary --flag");
        assert!(matches!(
            s.solve("p cnf 0 0\n", SolverKind::Sat),
            Err(SatError::SolverCrashed(_))
        ));
    }
}
