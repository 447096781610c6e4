//! Adapter for simulators that live in another process.
//!
//! Each query spawns the command, writes the inputs as one CSV line to its
//! stdin and reads one CSV line of outputs from its stdout. A nonzero exit,
//! malformed output or an exceeded timeout fails that query.

use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use surropt_core::simbench::QueryCounter;
use surropt_core::{BoundsSpec, Error, Result, Simulator};

const POLL_INTERVAL: Duration = Duration::from_millis(5);

#[derive(Debug)]
pub struct ExternalSimulator {
    command: Vec<String>,
    input_dim: usize,
    output_dim: usize,
    bounds: BoundsSpec,
    timeout: Duration,
    counter: QueryCounter,
}

impl ExternalSimulator {
    pub fn new(
        command: Vec<String>,
        input_dim: usize,
        output_dim: usize,
        bounds: BoundsSpec,
        timeout: Duration,
    ) -> Result<Self> {
        if command.is_empty() {
            return Err(Error::InvalidConfig("external simulator command is empty".into()));
        }
        if bounds.dim() != input_dim {
            return Err(Error::DimensionMismatch {
                context: "external simulator bounds",
                expected: input_dim,
                actual: bounds.dim(),
            });
        }
        Ok(ExternalSimulator {
            command,
            input_dim,
            output_dim,
            bounds,
            timeout,
            counter: QueryCounter::default(),
        })
    }

    fn query(&self, x: &[f64]) -> std::result::Result<Vec<f64>, String> {
        let mut child = Command::new(&self.command[0])
            .args(&self.command[1..])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| format!("cannot start {:?}: {e}", self.command[0]))?;

        let line = x.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
        let mut stdin = child.stdin.take().expect("stdin is piped");
        // A child that exits without reading its input is reported by its
        // exit status, not by the broken pipe.
        let _ = writeln!(stdin, "{line}");
        drop(stdin);

        let mut stdout = child.stdout.take().expect("stdout is piped");
        let mut stderr = child.stderr.take().expect("stderr is piped");
        let out_reader = thread::spawn(move || {
            let mut s = String::new();
            stdout.read_to_string(&mut s).map(|_| s)
        });
        let err_reader = thread::spawn(move || {
            let mut s = String::new();
            let _ = stderr.read_to_string(&mut s);
            s
        });

        let started = Instant::now();
        let status = loop {
            match child.try_wait().map_err(|e| e.to_string())? {
                Some(status) => break status,
                None if started.elapsed() >= self.timeout => {
                    let _ = child.kill();
                    let _ = child.wait();
                    return Err(format!("timed out after {:.1} s", self.timeout.as_secs_f64()));
                }
                None => thread::sleep(POLL_INTERVAL),
            }
        };
        let stdout = out_reader
            .join()
            .map_err(|_| "stdout reader panicked")?
            .map_err(|e| e.to_string())?;
        let stderr = err_reader.join().unwrap_or_default();
        if !status.success() {
            return Err(format!("exited with {status}: {}", stderr.trim()));
        }
        let line = stdout.lines().find(|l| !l.trim().is_empty()).ok_or("no output line")?;
        let y = line
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| format!("bad output {line:?}: {e}"))?;
        if y.len() != self.output_dim {
            return Err(format!("expected {} outputs, got {}", self.output_dim, y.len()));
        }
        Ok(y)
    }
}

impl Simulator for ExternalSimulator {
    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn output_dim(&self) -> usize {
        self.output_dim
    }

    fn bounds(&self) -> &BoundsSpec {
        &self.bounds
    }

    fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.counter.bump();
        self.bounds.check(x)?;
        self.query(x).map_err(|e| Error::Simulator(format!("input {x:?}: {e}")))
    }

    fn query_count(&self) -> usize {
        self.counter.get()
    }
}
