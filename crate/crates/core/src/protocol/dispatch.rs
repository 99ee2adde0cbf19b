use std::fs;
use std::io::Read;
use std::path::Path;
use std::process::{Child, Command, Stdio};
use std::sync::mpsc;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::job::{DoneFile, SegmentJob, TileStatus, DONE_FILE, MASKS_DIR};
use super::mask::{validate_mask, MaskError, MaskResult};
use crate::error::{Error, Result};

/// Why one tile produced no usable mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TileFailure {
    pub tile_id: String,
    pub errors: Vec<String>,
}

pub type TileOutcome = std::result::Result<MaskResult, TileFailure>;

/// Program and leading arguments; the protocol flags are appended.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdapterCommand {
    pub program: String,
    #[serde(default)]
    pub args: Vec<String>,
}

impl AdapterCommand {
    /// Splits a shell-style command line.
    pub fn parse(line: &str) -> Result<Self> {
        let mut words = shlex::split(line).ok_or_else(|| Error::Config(format!("cannot parse adapter command '{line}'")))?;
        if words.is_empty() {
            return Err(Error::Config("adapter command is empty".into()));
        }
        let program = words.remove(0);
        Ok(Self { program, args: words })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispatchOptions {
    pub timeout: Duration,
    pub poll_interval: Duration,
}

impl Default for DispatchOptions {
    fn default() -> Self {
        Self {
            timeout: Duration::from_secs(3600),
            poll_interval: Duration::from_millis(10),
        }
    }
}

const DIAGNOSTIC_TAIL: usize = 4096;
/// How long to keep reading stderr after the adapter is gone.
const STDERR_GRACE: Duration = Duration::from_secs(2);

/// The adapter runs in its own process group so a timeout also stops its children.
#[cfg(unix)]
fn isolate(cmd: &mut Command) {
    use std::os::unix::process::CommandExt;
    cmd.process_group(0);
}

#[cfg(not(unix))]
fn isolate(_: &mut Command) {}

#[cfg(unix)]
fn kill_tree(child: &mut Child) {
    // SAFETY: plain syscall on the group we created; failure only means it already exited.
    unsafe {
        libc::kill(-(child.id() as libc::pid_t), libc::SIGKILL);
    }
    let _ = child.kill();
}

#[cfg(not(unix))]
fn kill_tree(child: &mut Child) {
    let _ = child.kill();
}

fn tail(bytes: &[u8]) -> String {
    let start = bytes.len().saturating_sub(DIAGNOSTIC_TAIL);
    String::from_utf8_lossy(&bytes[start..]).trim().to_string()
}

fn clear_outputs(dir: &Path) -> Result<()> {
    let done = dir.join(DONE_FILE);
    if done.exists() {
        fs::remove_file(&done).map_err(|e| Error::io(&done, e))?;
    }
    let masks = dir.join(MASKS_DIR);
    if masks.exists() {
        fs::remove_dir_all(&masks).map_err(|e| Error::io(&masks, e))?;
    }
    Ok(())
}

/// Runs an external adapter on a prepared job and collects validated
/// masks in manifest order. A failed or timed-out adapter fails the whole
/// job and anything it wrote is removed; a bad or missing single mask only
/// fails that tile.
pub fn dispatch(job: &SegmentJob, adapter: &AdapterCommand, options: &DispatchOptions) -> Result<Vec<TileOutcome>> {
    job.manifest.validate(&job.dir)?;
    clear_outputs(&job.dir)?;
    let mut cmd = Command::new(&adapter.program);
    isolate(&mut cmd);
    let mut child = cmd
        .args(&adapter.args)
        .arg("--manifest")
        .arg(job.manifest_path())
        .arg("--out")
        .arg(&job.dir)
        .arg("--checkpoint")
        .arg(job.manifest.checkpoint.as_str())
        .stdin(Stdio::null())
        .stdout(Stdio::null())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| Error::AdapterFailed {
            status: "not started".into(),
            diagnostics: format!("{}: {e}", adapter.program),
        })?;
    let mut stderr = child.stderr.take().expect("piped");
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = stderr.read_to_end(&mut buf);
        let _ = tx.send(buf);
    });

    let started = Instant::now();
    let status = loop {
        match child.try_wait().map_err(|e| Error::io(&adapter.program, e))? {
            Some(status) => break Some(status),
            None if started.elapsed() >= options.timeout => {
                kill_tree(&mut child);
                let _ = child.wait();
                break None;
            }
            None => thread::sleep(options.poll_interval),
        }
    };
    let diagnostics = tail(&rx.recv_timeout(STDERR_GRACE).unwrap_or_default());

    let failure = match status {
        None => Some(format!("timed out after {:?}", options.timeout)),
        Some(s) if !s.success() => Some(s.to_string()),
        Some(_) => None,
    };
    if let Some(status) = failure {
        clear_outputs(&job.dir)?;
        return Err(Error::AdapterFailed { status, diagnostics });
    }

    let done_path = job.dir.join(DONE_FILE);
    if !done_path.is_file() {
        return Err(Error::Protocol(format!("adapter exited 0 without writing {DONE_FILE}; stderr: {diagnostics}")));
    }
    collect_results(job, &DoneFile::read(&done_path)?)
}

/// Matches `done.json` entries to manifest tiles and validates each mask.
pub fn collect_results(job: &SegmentJob, done: &DoneFile) -> Result<Vec<TileOutcome>> {
    if done.job_id != job.manifest.job_id {
        return Err(Error::Protocol(format!(
            "{DONE_FILE} is for job '{}', expected '{}'",
            done.job_id, job.manifest.job_id
        )));
    }
    Ok(job
        .manifest
        .tiles
        .iter()
        .map(|t| {
            let fail = |errors: Vec<String>| TileFailure {
                tile_id: t.tile_id.clone(),
                errors,
            };
            let entry = done
                .results
                .iter()
                .find(|e| e.tile_id == t.tile_id)
                .ok_or_else(|| fail(vec!["no result in done.json".into()]))?;
            if entry.status == TileStatus::Error {
                return Err(fail(vec![entry.message.clone().unwrap_or_else(|| "adapter reported an error".into())]));
            }
            let mask = entry.mask.as_ref().ok_or_else(|| fail(vec!["ok result without a mask".into()]))?;
            let result = validate_mask(&job.dir.join(mask), &t.tile_id, (t.width, t.height))
                .map_err(|errs| fail(errs.iter().map(ToString::to_string).collect()))?;
            match entry.n_masks {
                Some(n) if n != result.n_masks => Err(fail(vec![MaskError::CountMismatch {
                    reported: n,
                    found: result.n_masks,
                }
                .to_string()])),
                _ => Ok(result),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_quoted_commands() {
        let c = AdapterCommand::parse("python3 -m 'my adapter' --x").unwrap();
        assert_eq!(c.program, "python3");
        assert_eq!(c.args, vec!["-m", "my adapter", "--x"]);
        assert!(AdapterCommand::parse("   ").is_err());
        assert!(AdapterCommand::parse("'open").is_err());
    }
}
