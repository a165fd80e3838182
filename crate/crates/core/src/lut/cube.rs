//! `.cube` text format.
//!
//! ```text
//! TITLE "warm fade"
//! LUT_3D_SIZE 2
//! DOMAIN_MIN 0 0 0
//! DOMAIN_MAX 1 1 1
//! 0.000000 0.000000 0.000000
//! 1.000000 0.000000 0.000000
//! ...
//! ```
//!
//! `#` starts a comment anywhere outside the title. Data lines follow the
//! header, red index fastest. Canonical output uses six fractional digits,
//! LF line endings, and omits `DOMAIN_*` lines for the unit domain.

use std::fmt::Write as _;

use super::{check_size, Lut3d};
use crate::error::{Error, Result};
use crate::image::Rgb;

fn perr(line: usize, message: impl Into<String>) -> Error {
    Error::CubeParse {
        line,
        message: message.into(),
    }
}

fn parse_triple(tokens: &[&str], line: usize, what: &str) -> Result<Rgb> {
    if tokens.len() != 3 {
        return Err(perr(line, format!("{what} needs 3 values, found {}", tokens.len())));
    }
    let mut out = [0f32; 3];
    for (slot, tok) in out.iter_mut().zip(tokens) {
        let v: f32 = tok
            .parse()
            .map_err(|_| perr(line, format!("non-numeric token '{tok}' in {what}")))?;
        if !v.is_finite() {
            return Err(perr(line, format!("non-finite value '{tok}' in {what}")));
        }
        *slot = v;
    }
    Ok(out)
}

pub fn parse_cube(text: &str) -> Result<Lut3d> {
    let mut title: Option<String> = None;
    let mut size: Option<(usize, usize)> = None;
    let mut domain_min: Option<(Rgb, usize)> = None;
    let mut domain_max: Option<(Rgb, usize)> = None;
    let mut table: Vec<Rgb> = Vec::new();
    let mut last_line = 0usize;

    for (i, raw) in text.split('\n').enumerate() {
        let line_no = i + 1;
        let raw = raw.strip_suffix('\r').unwrap_or(raw);
        let trimmed = raw.trim_start();

        if let Some(rest) = trimmed.strip_prefix("TITLE") {
            if !table.is_empty() {
                return Err(perr(line_no, "TITLE after data lines"));
            }
            let rest = rest.trim();
            let inner = rest
                .strip_prefix('"')
                .and_then(|r| r.rfind('"').map(|end| &r[..end]))
                .ok_or_else(|| perr(line_no, "TITLE must be a double-quoted string"))?;
            title = Some(inner.to_string());
            last_line = line_no;
            continue;
        }

        let content = match trimmed.find('#') {
            Some(pos) => &trimmed[..pos],
            None => trimmed,
        };
        let tokens: Vec<&str> = content.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        last_line = line_no;

        let keyword = tokens[0];
        if keyword.starts_with(|c: char| c.is_ascii_alphabetic() || c == '_')
            && !matches!(keyword.to_ascii_lowercase().as_str(), "nan" | "inf" | "infinity")
        {
            if !table.is_empty() {
                return Err(perr(line_no, format!("keyword {keyword} after data lines")));
            }
            match keyword {
                "LUT_3D_SIZE" => {
                    if let Some((_, first)) = size {
                        return Err(perr(line_no, format!("duplicate LUT_3D_SIZE (first on line {first})")));
                    }
                    if tokens.len() != 2 {
                        return Err(perr(line_no, "LUT_3D_SIZE needs exactly one value"));
                    }
                    let n: usize = tokens[1]
                        .parse()
                        .map_err(|_| perr(line_no, format!("non-numeric LUT_3D_SIZE '{}'", tokens[1])))?;
                    check_size(n).map_err(|_| perr(line_no, format!("LUT_3D_SIZE {n} outside [2, 256]")))?;
                    size = Some((n, line_no));
                }
                "DOMAIN_MIN" => domain_min = Some((parse_triple(&tokens[1..], line_no, "DOMAIN_MIN")?, line_no)),
                "DOMAIN_MAX" => domain_max = Some((parse_triple(&tokens[1..], line_no, "DOMAIN_MAX")?, line_no)),
                "LUT_1D_SIZE" => return Err(perr(line_no, "1D LUTs are not supported")),
                other => return Err(perr(line_no, format!("unknown keyword '{other}'"))),
            }
            continue;
        }

        let Some((n, _)) = size else {
            return Err(perr(line_no, "data line before LUT_3D_SIZE"));
        };
        if table.len() == n * n * n {
            return Err(perr(line_no, format!("too many data lines: expected {}", n * n * n)));
        }
        table.push(parse_triple(&tokens, line_no, "data line")?);
    }

    let Some((n, _)) = size else {
        return Err(perr(last_line + 1, "missing LUT_3D_SIZE"));
    };
    let expected = n * n * n;
    if table.len() != expected {
        return Err(perr(
            last_line + 1,
            format!(
                "expected {expected} data lines for LUT_3D_SIZE {n}, found {}",
                table.len()
            ),
        ));
    }
    let (dmin, min_line) = domain_min.unwrap_or(([0.0; 3], 0));
    let (dmax, max_line) = domain_max.unwrap_or(([1.0; 3], 0));
    if (0..3).any(|c| dmin[c] >= dmax[c]) {
        return Err(perr(
            min_line.max(max_line),
            "DOMAIN_MIN must be below DOMAIN_MAX on every channel",
        ));
    }
    Lut3d::with_domain(n, dmin, dmax, table, title)
}

fn push_triple(out: &mut String, v: Rgb) {
    // avoid emitting "-0.000000"
    let f = |x: f32| if x == 0.0 { 0.0 } else { x };
    let _ = writeln!(out, "{:.6} {:.6} {:.6}", f(v[0]), f(v[1]), f(v[2]));
}

pub fn write_cube(lut: &Lut3d) -> String {
    let n = lut.size();
    let mut out = String::with_capacity(n * n * n * 28 + 128);
    if let Some(t) = lut.title() {
        let _ = writeln!(out, "TITLE \"{t}\"");
    }
    let _ = writeln!(out, "LUT_3D_SIZE {n}");
    if !lut.has_default_domain() {
        out.push_str("DOMAIN_MIN ");
        push_triple(&mut out, lut.domain_min());
        out.push_str("DOMAIN_MAX ");
        push_triple(&mut out, lut.domain_max());
    }
    for &e in lut.table() {
        push_triple(&mut out, e);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lut::{identity_lut, random_smooth_lut};

    const IDENTITY_2: &str = "LUT_3D_SIZE 2\n\
0.000000 0.000000 0.000000\n\
1.000000 0.000000 0.000000\n\
0.000000 1.000000 0.000000\n\
1.000000 1.000000 0.000000\n\
0.000000 0.000000 1.000000\n\
1.000000 0.000000 1.000000\n\
0.000000 1.000000 1.000000\n\
1.000000 1.000000 1.000000\n";

    fn line_of(err: Error) -> usize {
        match err {
            Error::CubeParse { line, .. } => line,
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn parses_identity_red_fastest() {
        let text = "LUT_3D_SIZE 2\n0 0 0\n1 0 0\n0 1 0\n1 1 0\n0 0 1\n1 0 1\n0 1 1\n1 1 1\n";
        let lut = parse_cube(text).unwrap();
        assert_eq!(lut.entry(1, 0, 0), [1.0, 0.0, 0.0]);
        assert_eq!(lut, identity_lut(2).unwrap());
    }

    #[test]
    fn writes_identity_canonically() {
        assert_eq!(write_cube(&identity_lut(2).unwrap()), IDENTITY_2);
    }

    #[test]
    fn size_33_table_length() {
        let text = write_cube(&identity_lut(33).unwrap());
        assert_eq!(parse_cube(&text).unwrap().table().len(), 35937);
    }

    #[test]
    fn short_file_names_the_missing_line() {
        let text: String = IDENTITY_2.lines().take(8).map(|l| format!("{l}\n")).collect();
        assert_eq!(line_of(parse_cube(&text).unwrap_err()), 9);
    }

    #[test]
    fn header_title_domain_comments_and_crlf() {
        let text = "# generated\r\nTITLE \"warm # fade\"\r\nDOMAIN_MIN 0 0 0\r\nDOMAIN_MAX 2 2 2\r\n\
                    LUT_3D_SIZE 2\r\n0 0 0 # black\r\n1 0 0\r\n0 1 0\r\n1 1 0\r\n\r\n0 0 1\r\n1 0 1\r\n0 1 1\r\n1 1 1\r\n";
        let lut = parse_cube(text).unwrap();
        assert_eq!(lut.title(), Some("warm # fade"));
        assert_eq!(lut.domain_max(), [2.0; 3]);
        let written = write_cube(&lut);
        assert!(written.contains("DOMAIN_MAX 2.000000 2.000000 2.000000\n"));
        assert_eq!(parse_cube(&written).unwrap(), lut);
    }

    #[test]
    fn malformed_inputs_report_lines() {
        assert_eq!(line_of(parse_cube("0 0 0\n").unwrap_err()), 1);
        assert_eq!(line_of(parse_cube("# nothing\n").unwrap_err()), 1);
        assert_eq!(line_of(parse_cube("LUT_3D_SIZE 2\nLUT_3D_SIZE 2\n").unwrap_err()), 2);
        assert_eq!(line_of(parse_cube("LUT_3D_SIZE 1\n").unwrap_err()), 1);
        assert_eq!(line_of(parse_cube("LUT_3D_SIZE 300\n").unwrap_err()), 1);
        let bad_token = IDENTITY_2.replacen("1.000000 0.000000 0.000000", "1.0 abc 0.0", 1);
        assert_eq!(line_of(parse_cube(&bad_token).unwrap_err()), 3);
        let nan = IDENTITY_2.replacen("0.000000 1.000000 0.000000", "nan 1 0", 1);
        assert_eq!(line_of(parse_cube(&nan).unwrap_err()), 4);
        let extra = format!("{IDENTITY_2}0 0 0\n");
        assert_eq!(line_of(parse_cube(&extra).unwrap_err()), 10);
        let inverted = format!("DOMAIN_MIN 1 1 1\nDOMAIN_MAX 0 0 0\n{IDENTITY_2}");
        assert_eq!(line_of(parse_cube(&inverted).unwrap_err()), 2);
        let two_values = IDENTITY_2.replacen("1.000000 1.000000 1.000000", "1 1", 1);
        assert_eq!(line_of(parse_cube(&two_values).unwrap_err()), 9);
    }

    #[test]
    fn write_parse_write_is_fixed_point() {
        for seed in 0..10 {
            let lut = random_smooth_lut(seed, 0.6);
            let once = write_cube(&lut);
            let twice = write_cube(&parse_cube(&once).unwrap());
            assert_eq!(once, twice);
        }
    }
}
