//! Text formats: signature files, parameter files and `key = value`
//! configs, plus whole-file atomic writes.

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::model::{LognormalStroke, SigmaLogSignature, Trajectory3D};
use crate::plan::ActionPlan;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;
use std::str::FromStr;

pub const SIGNATURE_MAGIC: &str = "#airsig v1";
pub const PARAMETER_MAGIC: &str = "#airsig-params v1";
pub const SIGNATURE_DIGITS: usize = 9;
pub const PARAMETER_DIGITS: usize = 12;

/// `v` rounded to `digits` significant digits, printed in the shortest form
/// that parses back to the rounded value.
pub fn format_sig(v: f64, digits: usize) -> String {
    let rounded: f64 = format!("{:.*e}", digits.max(1) - 1, v).parse().expect("valid float");
    let r = if rounded == 0.0 { 0.0 } else { rounded };
    format!("{r}")
}

fn parse_error(path: &str, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_string(),
        line,
        msg: msg.into(),
    }
}

/// Ordered `#key value` header lines.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Headers(pub Vec<(String, String)>);

impl Headers {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// Sets `key`, replacing an existing entry in place.
    pub fn set(&mut self, key: &str, value: impl ToString) {
        let value = value.to_string();
        match self.0.iter_mut().find(|(k, _)| k == key) {
            Some(e) => e.1 = value,
            None => self.0.push((key.to_string(), value)),
        }
    }

    pub fn parse<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .map(|v| {
                v.parse()
                    .map_err(|e| Error::InvalidInput(format!("header {key} = '{v}': {e}")))
            })
            .transpose()
    }

    fn write_to(&self, out: &mut String) {
        for (k, v) in &self.0 {
            let _ = writeln!(out, "#{k} {v}");
        }
    }
}

fn header_line(line: &str) -> Option<(String, String)> {
    let body = line.strip_prefix('#')?.trim();
    let (k, v) = body.split_once(char::is_whitespace).unwrap_or((body, ""));
    Some((k.to_string(), v.trim().to_string()))
}

/// A trajectory with its header: `fm`, `user`, `kind`, `seed` and any
/// provenance keys.
#[derive(Debug, Clone, PartialEq)]
pub struct SignatureFile {
    pub headers: Headers,
    pub trajectory: Trajectory3D<f64>,
}

impl SignatureFile {
    /// Wraps a trajectory, recording its sampling rate in the header.
    pub fn new(trajectory: Trajectory3D<f64>) -> Self {
        let mut headers = Headers::default();
        if let Some(fm) = trajectory.sampling_rate() {
            headers.set("fm", format_sig(fm, SIGNATURE_DIGITS));
        }
        Self { headers, trajectory }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.headers.set(key, value);
        self
    }

    /// Header and `t x y z` rows (`x y z` for bare trajectories).
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(SIGNATURE_MAGIC);
        out.push('\n');
        self.headers.write_to(&mut out);
        let f = |v: f64| format_sig(v, SIGNATURE_DIGITS);
        let pos = self.trajectory.positions();
        for (k, p) in pos.iter().enumerate() {
            if let Some(t) = self.trajectory.times() {
                let _ = write!(out, "{} ", f(t[k]));
            }
            let _ = writeln!(out, "{} {} {}", f(p.x), f(p.y), f(p.z));
        }
        out
    }

    /// Parses a signature file. The magic line is optional so plain
    /// three- or four-column exports are accepted too.
    pub fn parse(text: &str, path: &str) -> Result<Self> {
        let mut headers = Headers::default();
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('#') {
                if i == 0 && line.starts_with("#airsig") {
                    if line != SIGNATURE_MAGIC {
                        return Err(parse_error(path, i + 1, format!("unsupported format '{line}'")));
                    }
                } else if let Some(h) = header_line(line) {
                    headers.0.push(h);
                }
                continue;
            }
            let row = line
                .split_whitespace()
                .map(|v| v.parse::<f64>().map_err(|e| parse_error(path, i + 1, format!("'{v}': {e}"))))
                .collect::<Result<Vec<_>>>()?;
            let width = rows.first().map_or(row.len(), Vec::len);
            if !(row.len() == 3 || row.len() == 4) || row.len() != width {
                return Err(parse_error(path, i + 1, format!("expected {width} columns (3 or 4), got {}", row.len())));
            }
            rows.push(row);
        }
        if rows.len() < 2 {
            return Err(parse_error(path, 0, format!("need at least 2 samples, got {}", rows.len())));
        }
        let timed = rows[0].len() == 4;
        let off = usize::from(timed);
        let positions = rows.iter().map(|r| Vec3::new(r[off], r[off + 1], r[off + 2])).collect();
        let fm: Option<f64> = headers.parse("fm")?;
        let trajectory = if timed {
            Trajectory3D::timed(rows.iter().map(|r| r[0]).collect(), positions, fm)
        } else {
            Trajectory3D::bare(positions)
        }
        .map_err(|e| parse_error(path, 0, e.to_string()))?;
        Ok(Self { headers, trajectory })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::parse(&text, &path.display().to_string())
    }
}

/// A signature's plan and strokes with descriptive headers.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterFile {
    pub headers: Headers,
    pub signature: SigmaLogSignature<f64>,
}

fn point_row(out: &mut String, p: Vec3<f64>) {
    let f = |v| format_sig(v, PARAMETER_DIGITS);
    let _ = writeln!(out, "{} {} {}", f(p.x), f(p.y), f(p.z));
}

struct Lines<'a> {
    inner: std::iter::Peekable<Box<dyn Iterator<Item = (usize, &'a str)> + 'a>>,
    path: &'a str,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<(usize, &'a str)> {
        let (n, l) = self
            .inner
            .next()
            .ok_or_else(|| parse_error(self.path, self.last, "unexpected end of file"))?;
        self.last = n;
        Ok((n, l))
    }

    fn section(&mut self, name: &str) -> Result<Option<usize>> {
        let (n, l) = self.next()?;
        let mut it = l.split_whitespace();
        if it.next() != Some(name) {
            return Err(parse_error(self.path, n, format!("expected section '{name}'")));
        }
        match it.next() {
            Some("none") => Ok(None),
            Some(c) => c
                .parse()
                .map(Some)
                .map_err(|_| parse_error(self.path, n, format!("bad count '{c}'"))),
            None => Err(parse_error(self.path, n, "missing count")),
        }
    }

    fn numbers(&mut self, width: usize) -> Result<Vec<f64>> {
        let (n, l) = self.next()?;
        let v = l
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|e| parse_error(self.path, n, format!("'{t}': {e}"))))
            .collect::<Result<Vec<_>>>()?;
        if v.len() != width {
            return Err(parse_error(self.path, n, format!("expected {width} values, got {}", v.len())));
        }
        Ok(v)
    }

    fn points(&mut self, count: usize) -> Result<Vec<Vec3<f64>>> {
        (0..count)
            .map(|_| self.numbers(3).map(|v| Vec3::new(v[0], v[1], v[2])))
            .collect()
    }
}

impl ParameterFile {
    pub fn new(signature: SigmaLogSignature<f64>) -> Self {
        Self {
            headers: Headers::default(),
            signature,
        }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.headers.set(key, value);
        self
    }

    /// Sections `targets`, `midpoints`, `timestamps` and `strokes`, each a
    /// count line followed by rows; values at 12 significant digits.
    pub fn to_text(&self) -> String {
        let plan = &self.signature.plan;
        let mut out = String::new();
        out.push_str(PARAMETER_MAGIC);
        out.push('\n');
        self.headers.write_to(&mut out);
        let _ = writeln!(out, "targets {}", plan.targets.len());
        plan.targets.iter().for_each(|p| point_row(&mut out, *p));
        let _ = writeln!(out, "midpoints {}", plan.midpoints.len());
        plan.midpoints.iter().for_each(|p| point_row(&mut out, *p));
        match &plan.timestamps {
            Some(ts) => {
                let _ = writeln!(out, "timestamps {}", ts.len());
                ts.iter().for_each(|t| {
                    let _ = writeln!(out, "{}", format_sig(*t, PARAMETER_DIGITS));
                });
            }
            None => out.push_str("timestamps none\n"),
        }
        let _ = writeln!(out, "strokes {}", self.signature.strokes.len());
        out.push_str("# d t0 mu sigma2 theta_s theta_e phi_s phi_e\n");
        for s in &self.signature.strokes {
            let v = [s.d, s.t0, s.mu, s.sigma2, s.theta_s, s.theta_e, s.phi_s, s.phi_e];
            let row: Vec<String> = v.iter().map(|x| format_sig(*x, PARAMETER_DIGITS)).collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
        out
    }

    pub fn parse(text: &str, path: &str) -> Result<Self> {
        let mut headers = Headers::default();
        let mut body = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if i == 0 {
                if line != PARAMETER_MAGIC {
                    return Err(parse_error(path, 1, format!("expected '{PARAMETER_MAGIC}'")));
                }
                continue;
            }
            if line.is_empty() || line.starts_with("# ") {
                continue;
            }
            if line.starts_with('#') {
                headers.0.extend(header_line(line));
            } else {
                body.push((i + 1, line));
            }
        }
        let iter: Box<dyn Iterator<Item = (usize, &str)>> = Box::new(body.into_iter());
        let mut lines = Lines {
            inner: iter.peekable(),
            path,
            last: 0,
        };
        let n = lines.section("targets")?.ok_or_else(|| parse_error(path, lines.last, "targets count required"))?;
        let targets = lines.points(n)?;
        let m = lines.section("midpoints")?.ok_or_else(|| parse_error(path, lines.last, "midpoints count required"))?;
        let midpoints = lines.points(m)?;
        let timestamps = match lines.section("timestamps")? {
            Some(k) => Some((0..k).map(|_| lines.numbers(1).map(|v| v[0])).collect::<Result<Vec<_>>>()?),
            None => None,
        };
        let k = lines.section("strokes")?.ok_or_else(|| parse_error(path, lines.last, "strokes count required"))?;
        let strokes = (0..k)
            .map(|_| {
                let v = lines.numbers(8)?;
                LognormalStroke::new(v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7])
                    .map_err(|e| parse_error(path, lines.last, e.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some((n, _)) = lines.inner.peek() {
            return Err(parse_error(path, *n, "trailing content"));
        }
        let at_end = |e: Error| parse_error(path, lines.last, e.to_string());
        let plan = match timestamps {
            Some(ts) => ActionPlan::timed(targets, midpoints, ts),
            None => ActionPlan::new(targets, midpoints),
        }
        .map_err(at_end)?;
        let signature = SigmaLogSignature::new(plan, strokes).map_err(at_end)?;
        Ok(Self { headers, signature })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::parse(&text, &path.display().to_string())
    }
}

/// Line-oriented `key = value` settings; `#` starts a comment. Keys are
/// consumed with [`KeyValues::take`] and [`KeyValues::finish`] rejects any
/// left over, catching typos.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues {
    entries: Vec<(String, String, usize)>,
    path: String,
}

impl KeyValues {
    pub fn parse(text: &str, path: &str) -> Result<Self> {
        let mut entries: Vec<(String, String, usize)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| parse_error(path, i + 1, "expected 'key = value'"))?;
            let k = k.trim();
            if k.is_empty() {
                return Err(parse_error(path, i + 1, "empty key"));
            }
            if entries.iter().any(|e| e.0 == k) {
                return Err(parse_error(path, i + 1, format!("duplicate key '{k}'")));
            }
            entries.push((k.to_string(), v.trim().to_string(), i + 1));
        }
        Ok(Self {
            entries,
            path: path.to_string(),
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Removes and parses `key`.
    pub fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        let Some(pos) = self.entries.iter().position(|e| e.0 == key) else {
            return Ok(None);
        };
        let (_, v, line) = self.entries.remove(pos);
        v.parse()
            .map(Some)
            .map_err(|e| parse_error(&self.path, line, format!("{key} = '{v}': {e}")))
    }

    pub fn take_or<T: FromStr>(&mut self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.take(key)?.unwrap_or(default))
    }

    /// Sets `key`, replacing any value read from the file.
    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.retain(|e| e.0 != key);
        self.entries.push((key.to_string(), value.to_string(), 0));
    }

    pub fn finish(self) -> Result<()> {
        match self.entries.first() {
            Some((k, _, line)) => Err(parse_error(&self.path, *line, format!("unknown key '{k}'"))),
            None => Ok(()),
        }
    }
}

/// Writes `contents` to a sibling temporary file and renames it over
/// `path`, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidInput(format!("not a file path: {}", path.display())))?;
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let io = |e| Error::io(path.display().to_string(), e);
    let mut f = std::fs::File::create(&tmp).map_err(io)?;
    f.write_all(contents).map_err(io)?;
    f.sync_all().map_err(io)?;
    drop(f);
    std::fs::rename(&tmp, path).map_err(io)
}
