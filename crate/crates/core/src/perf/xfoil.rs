use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::Duration;

use wait_timeout::ChildExt;

use super::{Evaluator, FlowCondition, PolarPoint, PolarSource};
use crate::discretize::{resample_polyline, Scheme};
use crate::error::{Error, Result};
use crate::ingest::PolylineFoil;

/// Environment variable naming the XFOIL executable.
pub const XFOIL_ENV: &str = "FOILSPACE_XFOIL";
/// Inputs with more points are re-discretized before evaluation.
pub const XFOIL_MAX_POINTS: usize = 300;
/// Input polylines above this size are rejected outright.
const XFOIL_HARD_LIMIT: usize = 350;

const FOIL_FILE: &str = "foil.dat";
const POLAR_FILE: &str = "polar.txt";

#[derive(Debug, Clone)]
pub struct XfoilEvaluator {
    pub exe: PathBuf,
    pub timeout: Duration,
    /// Regenerate XFOIL's own paneling (`PANE`) before the run.
    pub repanel: bool,
    /// Parent of the per-evaluation scratch directories; system temp if
    /// unset.
    pub workdir: Option<PathBuf>,
}

impl XfoilEvaluator {
    pub fn new(exe: impl Into<PathBuf>) -> Self {
        XfoilEvaluator {
            exe: exe.into(),
            timeout: Duration::from_secs(20),
            repanel: true,
            workdir: None,
        }
    }

    /// Executable from `FOILSPACE_XFOIL`, else `xfoil` on the search path.
    pub fn from_env() -> Result<Self> {
        let exe = match std::env::var_os(XFOIL_ENV) {
            Some(p) => PathBuf::from(p),
            None => find_on_path("xfoil")
                .ok_or_else(|| Error::Environment("xfoil not found on PATH".into()))?,
        };
        Ok(Self::new(exe))
    }

    /// Command stream fed to XFOIL's standard input.
    pub fn script(&self, fc: &FlowCondition) -> String {
        let mut s = String::new();
        // no graphics
        s.push_str("PLOP\nG F\n\n");
        s.push_str(&format!("LOAD {FOIL_FILE}\n"));
        if self.repanel {
            s.push_str("PANE\n");
        }
        s.push_str("OPER\n");
        s.push_str(&format!("VISC {}\n", fc.reynolds));
        s.push_str(&format!("MACH {}\n", fc.mach));
        s.push_str(&format!("ITER {}\n", fc.iter_limit));
        s.push_str(&format!("PACC\n{POLAR_FILE}\n\n"));
        s.push_str(&format!("ALFA {}\n", fc.alpha_deg));
        s.push_str("PACC\n\nQUIT\n");
        s
    }

    fn run(&self, dir: &Path, script: &str) -> Result<String> {
        let mut child = Command::new(&self.exe)
            .current_dir(dir)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| Error::Environment(format!("cannot start {}: {e}", self.exe.display())))?;
        let mut stdin = child.stdin.take().expect("piped stdin");
        let script = script.to_string();
        let writer = std::thread::spawn(move || {
            // a child that exits early closes the pipe; not an error here
            let _ = stdin.write_all(script.as_bytes());
        });
        let mut stdout = child.stdout.take().expect("piped stdout");
        let reader = std::thread::spawn(move || {
            let mut out = String::new();
            let _ = stdout.read_to_string(&mut out);
            out
        });
        let status = child.wait_timeout(self.timeout).map_err(|e| Error::io(&self.exe, e))?;
        if status.is_none() {
            let _ = child.kill();
            let _ = child.wait();
            return Err(Error::Timeout(self.timeout));
        }
        let _ = writer.join();
        Ok(reader.join().unwrap_or_default())
    }
}

fn find_on_path(name: &str) -> Option<PathBuf> {
    std::env::var_os("PATH").and_then(|paths| {
        std::env::split_paths(&paths)
            .map(|d| d.join(name))
            .find(|p| p.is_file())
    })
}

/// `(cl, cd)` of the first data row of an XFOIL polar accumulation file,
/// `None` when the table has no rows.
pub fn parse_polar(text: &str) -> Result<Option<(f64, f64)>> {
    let mut lines = text.lines();
    if !lines.any(|l| l.trim_start().starts_with("------")) {
        return Err(Error::Protocol {
            msg: "polar file has no table header".into(),
            output: text.to_string(),
        });
    }
    let Some(row) = lines.find(|l| !l.trim().is_empty()) else {
        return Ok(None);
    };
    let cols: Vec<f64> = row
        .split_whitespace()
        .map(|t| t.parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Protocol {
            msg: format!("unparseable polar row '{}'", row.trim()),
            output: text.to_string(),
        })?;
    if cols.len() < 3 {
        return Err(Error::Protocol {
            msg: format!("polar row has {} columns", cols.len()),
            output: text.to_string(),
        });
    }
    Ok(Some((cols[1], cols[2])))
}

impl Evaluator for XfoilEvaluator {
    fn name(&self) -> &str {
        "xfoil"
    }

    fn evaluate(&self, pf: &PolylineFoil, fc: &FlowCondition) -> Result<PolarPoint> {
        if pf.len() < 4 {
            return Err(Error::Malformed(format!("{} points", pf.len())));
        }
        let foil = if pf.len() > XFOIL_HARD_LIMIT {
            return Err(Error::Malformed(format!(
                "{} points exceeds the {XFOIL_HARD_LIMIT}-point limit",
                pf.len()
            )));
        } else if pf.len() > XFOIL_MAX_POINTS {
            resample_polyline(pf, Scheme::Cosine, XFOIL_MAX_POINTS)?.foil
        } else {
            pf.clone()
        };
        let scratch = match &self.workdir {
            Some(dir) => tempfile::Builder::new().prefix("xfoil-").tempdir_in(dir),
            None => tempfile::Builder::new().prefix("xfoil-").tempdir(),
        }
        .map_err(|e| Error::io(self.workdir.clone().unwrap_or_else(std::env::temp_dir), e))?;
        let dir = scratch.path();
        let foil_path = dir.join(FOIL_FILE);
        std::fs::write(&foil_path, foil.to_selig(6)).map_err(|e| Error::io(&foil_path, e))?;

        let output = self.run(dir, &self.script(fc))?;
        // XFOIL only appends converged points to the accumulation file
        let polar = match std::fs::read_to_string(dir.join(POLAR_FILE)) {
            Ok(text) => text,
            Err(_) => return Ok(PolarPoint::failed(PolarSource::Xfoil)),
        };
        match parse_polar(&polar) {
            Ok(Some((cl, cd))) => Ok(PolarPoint::converged(cl, cd, PolarSource::Xfoil)),
            Ok(None) => Ok(PolarPoint::failed(PolarSource::Xfoil)),
            Err(Error::Protocol { msg, .. }) => Err(Error::Protocol {
                msg,
                output: format!("{output}\n--- polar ---\n{polar}"),
            }),
            Err(e) => Err(e),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const POLAR: &str = "\
       XFOIL         Version 6.99

 Calculated polar for: NACA 2410

 1 1 Reynolds number fixed          Mach number fixed

 xtrf =   1.000 (top)        1.000 (bottom)
 Mach =   0.000     Re =     0.500 e 6     Ncrit =   9.000

   alpha    CL        CD       CDp       CM     Top_Xtr  Bot_Xtr
  ------ -------- --------- --------- -------- -------- --------
   3.000   0.5432   0.00812   0.00301  -0.0520   0.6012   0.9931
";

    #[test]
    fn parses_accumulation_table() {
        assert_eq!(parse_polar(POLAR).unwrap(), Some((0.5432, 0.00812)));
        let empty = &POLAR[..POLAR.rfind("   3.000").unwrap()];
        assert_eq!(parse_polar(empty).unwrap(), None);
        assert!(matches!(parse_polar("garbage"), Err(Error::Protocol { .. })));
        let bad = POLAR.replace("0.5432", "x.yz");
        assert!(matches!(parse_polar(&bad), Err(Error::Protocol { .. })));
    }

    #[test]
    fn script_carries_flow_condition() {
        let s = XfoilEvaluator::new("xfoil").script(&FlowCondition::default());
        for needle in ["LOAD foil.dat", "PANE", "VISC 500000", "MACH 0", "ITER 200", "ALFA 3", "QUIT"] {
            assert!(s.contains(needle), "{needle}");
        }
        let mut e = XfoilEvaluator::new("xfoil");
        e.repanel = false;
        assert!(!e.script(&FlowCondition::default()).contains("PANE"));
    }
}
