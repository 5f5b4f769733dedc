//! Deterministic file output: 12-significant-digit floats, CSV/JSON
//! writers, and write-temp-then-rename so no output file is ever left
//! partially written.

use std::fs;
use std::io;
use std::path::Path;

/// Formats a float with 12 significant digits, locale-independent, `.`
/// decimal separator; positional notation for moderate exponents,
/// scientific otherwise, trailing zeros trimmed.
pub fn fmt12(x: f64) -> String {
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{:.11e}", x);
    let epos = sci.find('e').expect("always present for {:e}");
    let exp: i32 = sci[epos + 1..].parse().expect("valid exponent");
    if (-4..12).contains(&exp) {
        let prec = (11 - exp).max(0) as usize;
        let mut s = format!("{x:.prec$}");
        if s.contains('.') {
            while s.ends_with('0') {
                s.pop();
            }
            if s.ends_with('.') {
                s.pop();
            }
        }
        s
    } else {
        let mut m = sci[..epos].to_string();
        if m.contains('.') {
            while m.ends_with('0') {
                m.pop();
            }
            if m.ends_with('.') {
                m.pop();
            }
        }
        format!("{m}e{exp}")
    }
}

/// One CSV cell: a number, a label, or empty (None/missing).
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map(Cell::Num).unwrap_or(Cell::Empty)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

fn csv_escape(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Renders a header plus rows as RFC-4180-style CSV (LF line endings).
pub fn render_csv(header: &[&str], rows: &[Vec<Cell>]) -> String {
    let mut out = String::new();
    out.push_str(&header.iter().map(|h| csv_escape(h)).collect::<Vec<_>>().join(","));
    out.push('\n');
    for row in rows {
        let line = row
            .iter()
            .map(|c| match c {
                Cell::Num(v) => fmt12(*v),
                Cell::Text(s) => csv_escape(s),
                Cell::Empty => String::new(),
            })
            .collect::<Vec<_>>()
            .join(",");
        out.push_str(&line);
        out.push('\n');
    }
    out
}

/// Writes via a sibling temp file and an atomic rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp~");
    let tmp = std::path::PathBuf::from(tmp);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fmt12_shapes() {
        assert_eq!(fmt12(0.0), "0");
        assert_eq!(fmt12(-0.0), "0");
        assert_eq!(fmt12(1.0), "1");
        assert_eq!(fmt12(0.5), "0.5");
        assert_eq!(fmt12(1590.0), "1590");
        assert_eq!(fmt12(-2.3), "-2.3");
        assert_eq!(fmt12(1234.56789), "1234.56789");
        // 12 significant digits survive
        assert_eq!(fmt12(1.23456789012345), "1.23456789012");
        assert_eq!(fmt12(123456789012.345), "123456789012");
        // scientific for extreme exponents
        assert_eq!(fmt12(1e15), "1e15");
        assert_eq!(fmt12(2.5e-7), "2.5e-7");
        assert!(fmt12(f64::NAN) == "nan");
    }

    #[test]
    fn fmt12_round_trips_to_12_digits() {
        for &x in &[5712.04486224, 36.3681052852, 0.0218200000001, 9.87654321e-3] {
            let back: f64 = fmt12(x).parse().unwrap();
            assert!((back - x).abs() <= 1e-11 * x.abs());
        }
    }

    #[test]
    fn csv_rendering() {
        let rows = vec![
            vec![Cell::from(1.0), Cell::from("ok"), Cell::Empty],
            vec![Cell::from(0.25), Cell::from("a,b"), Cell::from(2.0)],
        ];
        let csv = render_csv(&["x", "label", "opt"], &rows);
        assert_eq!(csv, "x,label,opt\n1,ok,\n0.25,\"a,b\",2\n");
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = std::env::temp_dir().join("psyllid-output-test");
        let path = dir.join("f.csv");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(fs::read(&path).unwrap(), b"two");
        fs::remove_dir_all(&dir).ok();
    }
}
