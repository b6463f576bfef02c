//! Helpers shared by the line-oriented model file formats.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {reason}")]
pub struct FormatError {
    pub line: usize,
    pub reason: String,
}

pub(crate) fn err(line: usize, reason: impl Into<String>) -> FormatError {
    FormatError {
        line,
        reason: reason.into(),
    }
}

/// Numbers the lines of `text` from 1.
pub fn numbered(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l))
}

pub(crate) fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

pub(crate) fn unescape(line: usize, s: &str) -> Result<String, FormatError> {
    let mut out = String::with_capacity(s.len());
    let mut it = s.chars();
    while let Some(ch) = it.next() {
        if ch != '\\' {
            out.push(ch);
            continue;
        }
        match it.next() {
            Some('\\') => out.push('\\'),
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            other => {
                return Err(err(
                    line,
                    format!(
                        "bad escape `\\{}`",
                        other.map(String::from).unwrap_or_default()
                    ),
                ))
            }
        }
    }
    Ok(out)
}

pub(crate) fn next_line<'a, I>(lines: &mut I, what: &str) -> Result<(usize, &'a str), FormatError>
where
    I: Iterator<Item = (usize, &'a str)>,
{
    lines
        .next()
        .ok_or_else(|| err(0, format!("unexpected end of input, expected {what}")))
}

pub(crate) fn expect_header<'a, I>(lines: &mut I, header: &str) -> Result<(), FormatError>
where
    I: Iterator<Item = (usize, &'a str)>,
{
    let (n, t) = next_line(lines, header)?;
    if t != header {
        return Err(err(n, format!("expected `{header}`, found `{t}`")));
    }
    Ok(())
}

/// Splits a `key<TAB>f1<TAB>...` line, checking the key and field count.
pub(crate) fn keyed<'a>(
    line: usize,
    text: &'a str,
    key: &str,
    arity: usize,
) -> Result<Vec<&'a str>, FormatError> {
    let mut parts = text.split('\t');
    let fields: Vec<&str> = match parts.next() {
        Some(k) if k == key => parts.collect(),
        _ => return Err(err(line, format!("expected `{key}`, found `{text}`"))),
    };
    if fields.len() != arity {
        return Err(err(
            line,
            format!("`{key}` takes {arity} field(s), found {}", fields.len()),
        ));
    }
    Ok(fields)
}

/// Reads the single value of a `key<TAB>value` line.
pub(crate) fn value<'a, I>(lines: &mut I, key: &str) -> Result<(usize, &'a str), FormatError>
where
    I: Iterator<Item = (usize, &'a str)>,
{
    let (n, t) = next_line(lines, key)?;
    Ok((n, keyed(n, t, key, 1)?[0]))
}

/// Shortest round-trip form, switching to exponent notation for very small
/// or very large magnitudes.
pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && a.is_finite() && !(1e-5..1e16).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

pub(crate) fn parse<T: std::str::FromStr>(line: usize, s: &str) -> Result<T, FormatError> {
    s.parse()
        .map_err(|_| err(line, format!("cannot parse `{s}`")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn escape_round_trip() {
        for s in ["", "plain", "a\tb", "x\\ny", "\\", "line\nbreak\r"] {
            assert_eq!(unescape(1, &escape(s)).unwrap(), s);
            assert!(!escape(s).contains('\t'));
        }
        assert!(unescape(3, "bad\\q").is_err());
    }

    #[test]
    fn float_format_round_trips() {
        for v in [
            0.0,
            -0.0,
            1.0,
            0.5,
            3.4607511686111726e-44,
            1e-5,
            9.99e-6,
            123456.789,
            2e16,
            -7.25e-300,
            f64::INFINITY,
        ] {
            let s = fmt_f64(v);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits(), "{s}");
        }
        assert_eq!(fmt_f64(3.4607511686111726e-44), "3.4607511686111726e-44");
        assert_eq!(fmt_f64(0.25), "0.25");
    }

    #[test]
    fn keyed_checks_arity() {
        assert_eq!(keyed(1, "k\ta\tb", "k", 2).unwrap(), vec!["a", "b"]);
        assert!(keyed(1, "k\ta", "k", 2).is_err());
        assert!(keyed(1, "j\ta", "k", 1).is_err());
    }
}
