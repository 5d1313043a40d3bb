//! Line-oriented text format for composite fields (`.waves`).
//!
//! ```text
//! convint-waves 1
//! dimension 2
//! omega 0 1 0 1
//! interval 0 1
//! profile step 1 0
//! sampling 64 7
//! waves 1
//! wave planar <center…> <r> <k> <z̄…> <n̂…> <A…> <bscale>
//! end
//! ```
//!
//! Floats are written in shortest round-trip form, so reading a file back
//! reproduces every wave bit for bit.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use thiserror::Error;

use super::{CompositeField, FieldError, Sampling};
use crate::constraint::{ConstraintError, ConstraintParams, DomainBox, EnergyProfile, ProfileKind};
use crate::waves::{Branch, WaveError, WaveSpec};

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "convint-waves";

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("unsupported format version {found} (expected {FORMAT_VERSION})")]
    Version { found: String },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("wave record {record}: {message}")]
    Record { record: usize, message: String },
    #[error("wave record {record}: {source}")]
    Invariant {
        record: usize,
        #[source]
        source: WaveError,
    },
    #[error("stream ended after {found} of {expected} wave records")]
    Truncated { expected: usize, found: usize },
    #[error("invalid header: {0}")]
    Header(#[from] ConstraintError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

fn push_floats(s: &mut String, vals: &[f64]) {
    for v in vals {
        // Debug formatting is the shortest round-trip representation
        let _ = write!(s, " {v:?}");
    }
}

/// Writes `field` in the `.waves` format.
pub fn serialize<W: Write>(field: &CompositeField, mut out: W) -> Result<(), FormatError> {
    let p = field.params();
    let mut s = String::new();
    let _ = writeln!(s, "{MAGIC} {FORMAT_VERSION}");
    let _ = writeln!(s, "dimension {}", p.d());
    s.push_str("omega");
    for i in 0..p.d() {
        push_floats(&mut s, &[p.omega().lo()[i], p.omega().hi()[i]]);
    }
    s.push('\n');
    let (t0, t1) = p.profile().interval();
    s.push_str("interval");
    push_floats(&mut s, &[t0, t1]);
    s.push('\n');
    match p.profile().kind() {
        ProfileKind::Step { height, jump } => {
            s.push_str("profile step");
            push_floats(&mut s, &[*height, *jump]);
        }
        ProfileKind::Bump { amplitude } => {
            s.push_str("profile bump");
            push_floats(&mut s, &[*amplitude]);
        }
        ProfileKind::Table { times, values } => {
            let _ = write!(s, "profile table {}", times.len());
            for (t, e) in times.iter().zip(values) {
                push_floats(&mut s, &[*t, *e]);
            }
        }
    }
    s.push('\n');
    let sampling = field.sampling();
    match sampling.seed {
        Some(seed) => {
            let _ = writeln!(s, "sampling {} {seed}", sampling.count);
        }
        None => {
            let _ = writeln!(s, "sampling {} none", sampling.count);
        }
    }
    let _ = writeln!(s, "waves {}", field.len());
    out.write_all(s.as_bytes())?;
    for w in field.waves() {
        s.clear();
        let _ = write!(s, "wave {}", w.branch().name());
        push_floats(&mut s, w.center());
        push_floats(&mut s, &[w.radius()]);
        let _ = write!(s, " {}", w.k());
        push_floats(&mut s, w.zbar());
        push_floats(&mut s, w.nhat());
        if w.branch() == Branch::Planar {
            push_floats(&mut s, w.potential());
            push_floats(&mut s, &[w.bscale()]);
        }
        s.push('\n');
        out.write_all(s.as_bytes())?;
    }
    out.write_all(b"end\n")?;
    Ok(())
}

/// Convenience wrapper returning the serialized text.
pub fn to_string(field: &CompositeField) -> String {
    let mut buf = Vec::new();
    serialize(field, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("the format is ASCII")
}

struct Lines<R> {
    inner: R,
    line: usize,
    buf: String,
}

impl<R: BufRead> Lines<R> {
    /// Next non-empty line split into whitespace tokens, or `None` at EOF.
    fn next(&mut self) -> Result<Option<Vec<String>>, FormatError> {
        loop {
            self.buf.clear();
            if self.inner.read_line(&mut self.buf)? == 0 {
                return Ok(None);
            }
            self.line += 1;
            let toks: Vec<String> = self.buf.split_whitespace().map(str::to_owned).collect();
            if !toks.is_empty() {
                return Ok(Some(toks));
            }
        }
    }

    fn expect(&mut self, key: &str) -> Result<Vec<String>, FormatError> {
        let toks = self.next()?.ok_or_else(|| FormatError::Malformed {
            line: self.line + 1,
            message: format!("missing `{key}` line"),
        })?;
        if toks[0] != key {
            return Err(self.err(format!("expected `{key}`, found `{}`", toks[0])));
        }
        Ok(toks[1..].to_vec())
    }

    fn err(&self, message: String) -> FormatError {
        FormatError::Malformed {
            line: self.line,
            message,
        }
    }

    fn floats(&self, toks: &[String]) -> Result<Vec<f64>, FormatError> {
        toks.iter()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| self.err(format!("`{t}` is not a number")))
            })
            .collect()
    }
}

/// Reads a field written by [`serialize`].
pub fn deserialize<R: BufRead>(input: R) -> Result<CompositeField, FormatError> {
    let mut lines = Lines {
        inner: input,
        line: 0,
        buf: String::new(),
    };
    let head = lines.expect(MAGIC)?;
    if head.len() != 1 || head[0] != FORMAT_VERSION.to_string() {
        return Err(FormatError::Version {
            found: head.join(" "),
        });
    }
    let dim = lines.expect("dimension")?;
    let d: usize = match dim.as_slice() {
        [v] => v
            .parse()
            .map_err(|_| lines.err(format!("bad dimension `{v}`")))?,
        _ => return Err(lines.err("dimension takes one value".into())),
    };
    if !(d == 2 || d == 3) {
        return Err(FormatError::Header(ConstraintError::UnsupportedDimension(
            d,
        )));
    }
    let om = lines.expect("omega")?;
    let om = lines.floats(&om)?;
    if om.len() != 2 * d {
        return Err(lines.err(format!("omega needs {} values, found {}", 2 * d, om.len())));
    }
    let lo: Vec<f64> = om.iter().step_by(2).copied().collect();
    let hi: Vec<f64> = om.iter().skip(1).step_by(2).copied().collect();
    let omega = DomainBox::new(lo, hi)?;
    let iv = lines.expect("interval")?;
    let iv = lines.floats(&iv)?;
    if iv.len() != 2 {
        return Err(lines.err("interval needs 2 values".into()));
    }
    let prof = lines.expect("profile")?;
    let kind = match prof.first().map(String::as_str) {
        Some("step") => match lines.floats(&prof[1..])?.as_slice() {
            [height, jump] => ProfileKind::Step {
                height: *height,
                jump: *jump,
            },
            _ => return Err(lines.err("step profile takes height and jump".into())),
        },
        Some("bump") => match lines.floats(&prof[1..])?.as_slice() {
            [amplitude] => ProfileKind::Bump {
                amplitude: *amplitude,
            },
            _ => return Err(lines.err("bump profile takes an amplitude".into())),
        },
        Some("table") => {
            let count: usize = prof
                .get(1)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| lines.err("table profile needs a row count".into()))?;
            let vals = lines.floats(&prof[2..])?;
            if vals.len() != 2 * count {
                return Err(lines.err(format!("table expects {count} (t, E) pairs")));
            }
            ProfileKind::Table {
                times: vals.iter().step_by(2).copied().collect(),
                values: vals.iter().skip(1).step_by(2).copied().collect(),
            }
        }
        other => return Err(lines.err(format!("unknown profile kind {other:?}"))),
    };
    let profile = EnergyProfile::new(iv[0], iv[1], kind)?;
    let params = ConstraintParams::new(omega, profile)?;
    let samp = lines.expect("sampling")?;
    let sampling = match samp.as_slice() {
        [count, seed] => Sampling {
            count: count
                .parse()
                .map_err(|_| lines.err(format!("bad sample count `{count}`")))?,
            seed: if seed == "none" {
                None
            } else {
                Some(
                    seed.parse()
                        .map_err(|_| lines.err(format!("bad sampling seed `{seed}`")))?,
                )
            },
        },
        _ => return Err(lines.err("sampling takes a count and a seed".into())),
    };
    sampling.lattice(d)?;
    let wc = lines.expect("waves")?;
    let expected: usize = match wc.as_slice() {
        [v] => v
            .parse()
            .map_err(|_| lines.err(format!("bad wave count `{v}`")))?,
        _ => return Err(lines.err("waves takes one count".into())),
    };
    let mut waves = Vec::with_capacity(expected);
    for record in 0..expected {
        let toks = lines.next()?.ok_or(FormatError::Truncated {
            expected,
            found: record,
        })?;
        if toks[0] == "end" {
            return Err(FormatError::Truncated {
                expected,
                found: record,
            });
        }
        waves.push(parse_wave(&toks, d, record)?);
    }
    match lines.next()? {
        Some(t) if t.len() == 1 && t[0] == "end" => {}
        Some(t) => return Err(lines.err(format!("expected `end`, found `{}`", t.join(" ")))),
        None => return Err(lines.err("missing `end` line".into())),
    }
    let field = CompositeField::new(params, sampling, waves)?;
    Ok(field)
}

fn parse_wave(toks: &[String], d: usize, record: usize) -> Result<WaveSpec, FormatError> {
    let rec_err = |message: String| FormatError::Record { record, message };
    if toks[0] != "wave" {
        return Err(rec_err(format!("expected `wave`, found `{}`", toks[0])));
    }
    let branch = toks
        .get(1)
        .and_then(|b| Branch::from_name(b))
        .ok_or_else(|| rec_err("unknown branch".into()))?;
    let dd = d + 1;
    let n = 2 * d + 1;
    let extra = if branch == Branch::Planar { 4 } else { 0 };
    let expected = 2 + dd + 2 + n + dd + extra;
    if toks.len() != expected {
        return Err(rec_err(format!(
            "expected {expected} fields, found {}",
            toks.len()
        )));
    }
    let k_pos = 2 + dd + 1;
    let k: u32 = toks[k_pos].parse().map_err(|_| {
        rec_err(format!(
            "frequency `{}` is not a positive integer",
            toks[k_pos]
        ))
    })?;
    let mut vals = Vec::with_capacity(toks.len());
    for (i, t) in toks.iter().enumerate().skip(2) {
        if i == k_pos {
            continue;
        }
        vals.push(
            t.parse::<f64>()
                .map_err(|_| rec_err(format!("field {i} `{t}` is not a number")))?,
        );
    }
    let center = vals[..dd].to_vec();
    let radius = vals[dd];
    let rest = &vals[dd + 1..];
    let zbar = rest[..n].to_vec();
    let nhat = rest[n..n + dd].to_vec();
    let (avec, bscale) = if branch == Branch::Planar {
        let a = &rest[n + dd..];
        (Some([a[0], a[1], a[2]]), a[3])
    } else {
        (None, 0.0)
    };
    WaveSpec::from_parts(branch, center, radius, k, zbar, nhat, avec, bscale)
        .map_err(|source| FormatError::Invariant { record, source })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::waves::make_wave;

    fn params(kind: ProfileKind) -> ConstraintParams {
        ConstraintParams::new(
            DomainBox::unit(2),
            EnergyProfile::new(0.0, 1.0, kind).unwrap(),
        )
        .unwrap()
    }

    fn sample_field() -> CompositeField {
        let p = params(ProfileKind::Bump { amplitude: 0.7 });
        let waves = vec![
            make_wave(&[0.3, 0.1, -0.2, 0.5, 0.1], &[0.5, 0.5, 0.5], 0.3, 2, 2).unwrap(),
            make_wave(&[1e-7, 0.0, 0.0, 0.0, 0.0], &[0.2, 0.2, 0.3], 0.1, 1, 2).unwrap(),
        ];
        CompositeField::new(
            p,
            Sampling {
                count: 64,
                seed: Some(3),
            },
            waves,
        )
        .unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let f = sample_field();
        let text = to_string(&f);
        let g = deserialize(text.as_bytes()).unwrap();
        assert_eq!(f, g);
        assert_eq!(to_string(&g), text);
    }

    #[test]
    fn empty_and_table_round_trip() {
        let p = params(ProfileKind::Table {
            times: vec![0.0, 0.5, 1.0],
            values: vec![0.1, 0.2, 0.3],
        });
        let f = CompositeField::empty(
            p,
            Sampling {
                count: 16,
                seed: None,
            },
        );
        let g = deserialize(to_string(&f).as_bytes()).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn truncation_names_the_record() {
        let text = to_string(&sample_field());
        let cut: String = text.lines().take(8).map(|l| format!("{l}\n")).collect();
        match deserialize(cut.as_bytes()) {
            Err(FormatError::Truncated {
                expected: 2,
                found: 1,
            }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn broken_invariant_is_reported() {
        let text = to_string(&sample_field());
        let mut lines: Vec<String> = text.lines().map(str::to_owned).collect();
        // scale n̂ of the first wave away from unit length
        let mut toks: Vec<String> = lines[7].split(' ').map(str::to_owned).collect();
        let idx = 2 + 3 + 2 + 5;
        toks[idx] = "0.9".into();
        lines[7] = toks.join(" ");
        let bad = lines.join("\n") + "\n";
        match deserialize(bad.as_bytes()) {
            Err(FormatError::Invariant { record: 0, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn version_and_garbage_errors() {
        let text = to_string(&sample_field()).replacen("convint-waves 1", "convint-waves 9", 1);
        assert!(matches!(
            deserialize(text.as_bytes()),
            Err(FormatError::Version { .. })
        ));
        assert!(matches!(
            deserialize("hello\n".as_bytes()),
            Err(FormatError::Malformed { line: 1, .. })
        ));
    }
}
