use std::fs::File;
use std::io;
use std::os::unix::process::CommandExt;
use std::path::Path;
use std::process::{Command, Stdio};
use std::time::Duration;

use wait_timeout::ChildExt;

use super::HarnessError;

/// Exit status used by shells for "command not found".
const NOT_FOUND: i32 = 127;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandOutcome {
    /// `None` when the process was killed (timeout or signal).
    pub exit_code: Option<i32>,
    pub timed_out: bool,
    /// Combined stdout and stderr.
    pub log: String,
}

impl CommandOutcome {
    pub fn succeeded(&self) -> bool {
        self.exit_code == Some(0)
    }
}

/// Runs one external command; the harness only talks to the outside world
/// through this trait.
pub trait Executor: Sync {
    fn run(
        &self,
        argv: &[String],
        cwd: &Path,
        timeout: Duration,
        log_path: &Path,
    ) -> Result<CommandOutcome, HarnessError>;
}

/// Spawns real processes. Each command gets its own process group so a
/// timeout kills everything it started.
#[derive(Debug, Clone, Copy, Default)]
pub struct ProcessExecutor;

fn kill_group(pid: u32) {
    // SAFETY: plain syscall; a negative pid addresses the process group.
    unsafe {
        libc::kill(-(pid as libc::pid_t), libc::SIGKILL);
    }
}

impl Executor for ProcessExecutor {
    fn run(
        &self,
        argv: &[String],
        cwd: &Path,
        timeout: Duration,
        log_path: &Path,
    ) -> Result<CommandOutcome, HarnessError> {
        let (program, args) = argv
            .split_first()
            .ok_or_else(|| HarnessError::ExecutorUnavailable("empty command".into()))?;
        let log = File::create(log_path)?;
        let mut child = Command::new(program)
            .args(args)
            .current_dir(cwd)
            .stdin(Stdio::null())
            .stdout(log.try_clone()?)
            .stderr(log)
            .process_group(0)
            .spawn()
            .map_err(|e| match e.kind() {
                io::ErrorKind::NotFound | io::ErrorKind::PermissionDenied => {
                    HarnessError::ExecutorUnavailable(format!("{program}: {e}"))
                }
                _ => HarnessError::Io(e),
            })?;
        let (exit_code, timed_out) = match child.wait_timeout(timeout)? {
            Some(status) => (status.code(), false),
            None => {
                kill_group(child.id());
                let _ = child.wait();
                (None, true)
            }
        };
        // Leftover background processes of a finished command go too.
        kill_group(child.id());
        let log = String::from_utf8_lossy(&std::fs::read(log_path)?).into_owned();
        if exit_code == Some(NOT_FOUND) {
            return Err(HarnessError::ExecutorUnavailable(format!(
                "{program} exited with status {NOT_FOUND}: {}",
                log.lines().last().unwrap_or("")
            )));
        }
        Ok(CommandOutcome {
            exit_code,
            timed_out,
            log,
        })
    }
}
