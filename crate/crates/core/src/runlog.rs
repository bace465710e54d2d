//! Plain run log, one `[module/LEVEL] message` line per event.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Level {
    Debug,
    Info,
    Warn,
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Level::Debug => "DEBUG",
            Level::Info => "INFO",
            Level::Warn => "WARN",
        })
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunLog {
    lines: Vec<String>,
    muted: bool,
}

impl RunLog {
    pub fn new() -> Self {
        Self::default()
    }

    /// A log that drops everything; used on hot paths such as property tests.
    pub fn muted() -> Self {
        Self {
            lines: Vec::new(),
            muted: true,
        }
    }

    pub fn is_muted(&self) -> bool {
        self.muted
    }

    pub fn push(&mut self, module: &str, level: Level, message: impl fmt::Display) {
        if !self.muted {
            self.lines.push(format!("[{module}/{level}] {message}"));
        }
    }

    pub fn info(&mut self, module: &str, message: impl fmt::Display) {
        self.push(module, Level::Info, message);
    }

    pub fn debug(&mut self, module: &str, message: impl fmt::Display) {
        self.push(module, Level::Debug, message);
    }

    pub fn warn(&mut self, module: &str, message: impl fmt::Display) {
        self.push(module, Level::Warn, message);
    }

    pub fn lines(&self) -> &[String] {
        &self.lines
    }

    pub fn to_text(&self) -> String {
        let mut out = self.lines.join("\n");
        if !out.is_empty() {
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formats_lines() {
        let mut log = RunLog::new();
        log.info("runtime", "Start");
        log.debug("fifo_scheduler", format_args!("score: {:.6}", 0.0));
        assert_eq!(
            log.to_text(),
            "[runtime/INFO] Start\n[fifo_scheduler/DEBUG] score: 0.000000\n"
        );
    }

    #[test]
    fn muted_log_stays_empty() {
        let mut log = RunLog::muted();
        log.warn("runtime", "ignored");
        assert!(log.lines().is_empty());
        assert_eq!(log.to_text(), "");
    }
}
