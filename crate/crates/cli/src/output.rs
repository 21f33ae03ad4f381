//! Output files are staged in memory and committed together; each one is
//! written to a temporary name first and renamed into place.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use gbell_core::Result;
use serde::Serialize;

pub struct Outputs {
    dir: PathBuf,
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    pub fn new(dir: PathBuf) -> Self {
        Outputs {
            dir,
            files: Vec::new(),
        }
    }

    pub fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.add(name, bytes);
        Ok(())
    }

    pub fn commit(self) -> Result<()> {
        fs::create_dir_all(&self.dir)?;
        let mut staged = Vec::with_capacity(self.files.len());
        for (name, bytes) in &self.files {
            let tmp = self.dir.join(format!(".{name}.tmp"));
            let mut f = fs::File::create(&tmp)?;
            f.write_all(bytes)?;
            f.sync_all()?;
            staged.push((tmp, self.dir.join(name)));
        }
        for (tmp, dest) in staged {
            fs::rename(tmp, dest)?;
        }
        Ok(())
    }
}
