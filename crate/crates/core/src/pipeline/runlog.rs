use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::Path;
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use crate::error::{Error, Result};

/// Append-only `run.log`; the only artifact that carries timestamps.
#[derive(Debug)]
pub struct RunLog {
    file: Mutex<File>,
}

impl RunLog {
    pub fn open(path: &Path) -> Result<Self> {
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        Ok(Self { file: Mutex::new(file) })
    }

    fn write(&self, level: log::Level, msg: &str) {
        log::log!(level, "{msg}");
        let t = SystemTime::now().duration_since(UNIX_EPOCH).unwrap_or_default();
        let mut f = self.file.lock().unwrap_or_else(|e| e.into_inner());
        let _ = writeln!(f, "{}.{:03} {level:<5} {msg}", t.as_secs(), t.subsec_millis());
    }

    pub fn info(&self, msg: impl AsRef<str>) {
        self.write(log::Level::Info, msg.as_ref());
    }

    pub fn warn(&self, msg: impl AsRef<str>) {
        self.write(log::Level::Warn, msg.as_ref());
    }
}
