//! Two-line element sets: fixed-column parsing, checksums, serialisation
//! and conversion to osculating-style initial elements.

use crate::dynamics::orbit::{mean_to_true, GravityModel, OrbitalElements};
use crate::error::Result;
use std::f64::consts::TAU;
use thiserror::Error;

pub const LINE_LENGTH: usize = 69;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TleError {
    #[error("TLE line {line}: expected {LINE_LENGTH} characters, found {found}")]
    Length { line: u8, found: usize },
    #[error("TLE line {line}: non-ASCII content")]
    NotAscii { line: u8 },
    #[error("TLE line {line}: checksum mismatch (column 69 says {stated}, computed {computed})")]
    Checksum { line: u8, stated: u8, computed: u8 },
    #[error("TLE line {line}, columns {start}-{end}: cannot parse {field} from `{text}`")]
    Field {
        line: u8,
        field: &'static str,
        start: usize,
        end: usize,
        text: String,
    },
    #[error("TLE line {line}: column 1 must be `{line}`")]
    LineNumber { line: u8 },
    #[error("TLE catalogue numbers differ between lines ({first} vs {second})")]
    CatalogMismatch { first: u32, second: u32 },
    #[error("TLE line {line}: eccentricity {value} outside [0, 1)")]
    Eccentricity { line: u8, value: f64 },
    #[error("TLE text line {line}: record is incomplete")]
    Incomplete { line: usize },
    #[error("TLE text line {line}: {source}")]
    InFile {
        line: usize,
        #[source]
        source: Box<TleError>,
    },
    #[error("field {field} value {value} cannot be written in its TLE column width")]
    Unrepresentable { field: &'static str, value: f64 },
}

/// Every field of a TLE, kept so that serialisation reproduces the input.
#[derive(Debug, Clone, PartialEq)]
pub struct TleRecord {
    pub norad_id: u32,
    pub classification: char,
    /// Columns 10–17 of line 1, verbatim.
    pub intl_designator: String,
    /// Two-digit epoch year.
    pub epoch_year: u32,
    /// Day of year with fraction.
    pub epoch_day: f64,
    /// Rev/day², as printed (first derivative of mean motion over two).
    pub mean_motion_dot: f64,
    pub mean_motion_ddot: f64,
    /// Inverse Earth radii.
    pub bstar: f64,
    pub ephemeris_type: char,
    pub element_set: u32,
    /// Degrees.
    pub inclination: f64,
    pub raan: f64,
    pub eccentricity: f64,
    pub argp: f64,
    pub mean_anomaly: f64,
    /// Rev/day.
    pub mean_motion: f64,
    pub rev_number: u32,
    pub line1_checksum: u8,
    pub line2_checksum: u8,
}

/// `(sum of digits + count of '-') mod 10` over the first 68 columns.
pub fn line_checksum(line: &str) -> u8 {
    let sum: u32 = line
        .bytes()
        .take(LINE_LENGTH - 1)
        .map(|b| match b {
            b'0'..=b'9' => (b - b'0') as u32,
            b'-' => 1,
            _ => 0,
        })
        .sum();
    (sum % 10) as u8
}

/// Checks length and the column-69 checksum of one line.
pub fn verify_line(line: &str, line_no: u8) -> Result<u8, TleError> {
    if !line.is_ascii() {
        return Err(TleError::NotAscii { line: line_no });
    }
    if line.len() != LINE_LENGTH {
        return Err(TleError::Length {
            line: line_no,
            found: line.len(),
        });
    }
    let stated = line.as_bytes()[LINE_LENGTH - 1];
    if !stated.is_ascii_digit() {
        return Err(field_err(line, line_no, "checksum", 69, 69));
    }
    let stated = stated - b'0';
    let computed = line_checksum(line);
    if stated != computed {
        return Err(TleError::Checksum {
            line: line_no,
            stated,
            computed,
        });
    }
    Ok(stated)
}

/// 1-based inclusive column range.
fn cols(line: &str, start: usize, end: usize) -> &str {
    &line[start - 1..end]
}

fn field_err(line: &str, line_no: u8, field: &'static str, start: usize, end: usize) -> TleError {
    TleError::Field {
        line: line_no,
        field,
        start,
        end,
        text: cols(line, start, end).to_string(),
    }
}

fn parse_f64(line: &str, line_no: u8, field: &'static str, start: usize, end: usize) -> Result<f64, TleError> {
    let text = cols(line, start, end).trim();
    text.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| field_err(line, line_no, field, start, end))
}

fn parse_u32(line: &str, line_no: u8, field: &'static str, start: usize, end: usize) -> Result<u32, TleError> {
    let text = cols(line, start, end).trim();
    if text.is_empty() {
        return Ok(0);
    }
    text.parse::<u32>()
        .map_err(|_| field_err(line, line_no, field, start, end))
}

/// Signed value with an assumed leading decimal point, `±.dddddddd`.
fn parse_implied_point(line: &str, line_no: u8, field: &'static str, start: usize, end: usize) -> Result<f64, TleError> {
    let raw = cols(line, start, end).trim();
    let (sign, body) = match raw.strip_prefix('-') {
        Some(rest) => (-1.0, rest),
        None => (1.0, raw.strip_prefix('+').unwrap_or(raw)),
    };
    let body = body.strip_prefix('.').unwrap_or(body);
    if body.is_empty() || !body.bytes().all(|b| b.is_ascii_digit()) {
        return Err(field_err(line, line_no, field, start, end));
    }
    let v: f64 = format!("0.{body}").parse().map_err(|_| field_err(line, line_no, field, start, end))?;
    Ok(sign * v)
}

/// Decimal-point-assumed exponent notation, e.g. ` 12345-3` = 0.12345e-3.
/// Layout within the 8 columns: sign, five mantissa digits, exponent sign,
/// exponent digit.
fn parse_exponent_field(line: &str, line_no: u8, field: &'static str, start: usize, end: usize) -> Result<f64, TleError> {
    let raw = cols(line, start, end).as_bytes();
    let err = || field_err(line, line_no, field, start, end);
    if raw.iter().all(|b| *b == b' ') {
        return Ok(0.0);
    }
    let sign = match raw[0] {
        b'-' => -1.0,
        b' ' | b'+' => 1.0,
        _ => return Err(err()),
    };
    let mantissa = &raw[1..6];
    let exp_sign = match raw[6] {
        b'-' => -1,
        b'+' | b' ' => 1,
        _ => return Err(err()),
    };
    if !mantissa.iter().all(u8::is_ascii_digit) || !raw[7].is_ascii_digit() {
        return Err(err());
    }
    let e = exp_sign * (raw[7] - b'0') as i32;
    let text = format!("0.{}e{e}", std::str::from_utf8(mantissa).map_err(|_| err())?);
    text.parse::<f64>().map(|v| sign * v).map_err(|_| err())
}

pub fn parse_tle(line1: &str, line2: &str) -> Result<TleRecord, TleError> {
    let line1 = line1.trim_end_matches(['\r', '\n']);
    let line2 = line2.trim_end_matches(['\r', '\n']);
    let c1 = verify_line(line1, 1)?;
    let c2 = verify_line(line2, 2)?;
    if !line1.starts_with('1') {
        return Err(TleError::LineNumber { line: 1 });
    }
    if !line2.starts_with('2') {
        return Err(TleError::LineNumber { line: 2 });
    }
    let norad_id = parse_u32(line1, 1, "catalogue number", 3, 7)?;
    let second_id = parse_u32(line2, 2, "catalogue number", 3, 7)?;
    if norad_id != second_id {
        return Err(TleError::CatalogMismatch {
            first: norad_id,
            second: second_id,
        });
    }
    let eccentricity = parse_implied_point(line2, 2, "eccentricity", 27, 33)?;
    if !(0.0..1.0).contains(&eccentricity) {
        return Err(TleError::Eccentricity {
            line: 2,
            value: eccentricity,
        });
    }
    let mean_motion = parse_f64(line2, 2, "mean motion", 53, 63)?;
    Ok(TleRecord {
        norad_id,
        classification: line1.as_bytes()[7] as char,
        intl_designator: cols(line1, 10, 17).to_string(),
        epoch_year: parse_u32(line1, 1, "epoch year", 19, 20)?,
        epoch_day: parse_f64(line1, 1, "epoch day", 21, 32)?,
        mean_motion_dot: parse_implied_point(line1, 1, "mean motion derivative", 34, 43)?,
        mean_motion_ddot: parse_exponent_field(line1, 1, "mean motion second derivative", 45, 52)?,
        bstar: parse_exponent_field(line1, 1, "B*", 54, 61)?,
        ephemeris_type: line1.as_bytes()[62] as char,
        element_set: parse_u32(line1, 1, "element set number", 65, 68)?,
        inclination: parse_f64(line2, 2, "inclination", 9, 16)?,
        raan: parse_f64(line2, 2, "right ascension of the ascending node", 18, 25)?,
        eccentricity,
        argp: parse_f64(line2, 2, "argument of perigee", 35, 42)?,
        mean_anomaly: parse_f64(line2, 2, "mean anomaly", 44, 51)?,
        mean_motion,
        rev_number: parse_u32(line2, 2, "revolution number", 64, 68)?,
        line1_checksum: c1,
        line2_checksum: c2,
    })
}

/// Parses every record in a TLE file. A line that is neither `1 …` nor
/// `2 …` is taken as a name line and ignored.
pub fn parse_tle_file(text: &str) -> Result<Vec<TleRecord>, TleError> {
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end()))
        .filter(|(_, l)| !l.is_empty())
        .collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < lines.len() {
        let (no, l) = lines[i];
        let is_line1 = l.starts_with("1 ") && l.len() == LINE_LENGTH;
        if !is_line1 {
            if l.starts_with("2 ") && l.len() == LINE_LENGTH {
                return Err(TleError::Incomplete { line: no });
            }
            i += 1;
            continue;
        }
        let Some(&(_, l2)) = lines.get(i + 1) else {
            return Err(TleError::Incomplete { line: no });
        };
        let rec = parse_tle(l, l2).map_err(|e| TleError::InFile {
            line: no,
            source: Box::new(e),
        })?;
        out.push(rec);
        i += 2;
    }
    Ok(out)
}

fn implied_point(value: f64, digits: usize, field: &'static str) -> Result<String, TleError> {
    let scaled = (value.abs() * 10f64.powi(digits as i32)).round();
    if scaled >= 10f64.powi(digits as i32) {
        return Err(TleError::Unrepresentable { field, value });
    }
    Ok(format!("{:0width$}", scaled as u64, width = digits))
}

/// ` 12345-3` style: sign, five mantissa digits, signed exponent digit.
fn exponent_field(value: f64, field: &'static str) -> Result<String, TleError> {
    if value == 0.0 {
        return Ok(" 00000-0".into());
    }
    let sign = if value < 0.0 { '-' } else { ' ' };
    // d.dddde±X  →  0.ddddd e(X+1)
    let sci = format!("{:.4e}", value.abs());
    let (mant, exp) = sci.split_once('e').ok_or(TleError::Unrepresentable { field, value })?;
    let digits: String = mant.chars().filter(|c| c.is_ascii_digit()).collect();
    let e: i32 = exp.parse::<i32>().map_err(|_| TleError::Unrepresentable { field, value })? + 1;
    if !(-9..=9).contains(&e) {
        return Err(TleError::Unrepresentable { field, value });
    }
    let es = if e < 0 { '-' } else { '+' };
    Ok(format!("{sign}{digits}{es}{}", e.abs()))
}

fn fixed(value: f64, width: usize, decimals: usize, field: &'static str) -> Result<String, TleError> {
    let s = format!("{value:width$.decimals$}");
    if s.len() != width {
        return Err(TleError::Unrepresentable { field, value });
    }
    Ok(s)
}

fn with_checksum(mut body: String) -> String {
    let c = line_checksum(&body);
    body.push((b'0' + c) as char);
    body
}

/// Writes both lines with freshly computed checksums.
pub fn serialize_tle(rec: &TleRecord) -> Result<(String, String), TleError> {
    if rec.norad_id > 99_999 {
        return Err(TleError::Unrepresentable {
            field: "catalogue number",
            value: rec.norad_id as f64,
        });
    }
    let ndot_sign = if rec.mean_motion_dot < 0.0 { '-' } else { ' ' };
    let ndot = implied_point(rec.mean_motion_dot, 8, "mean motion derivative")?;
    let designator = format!("{:<8.8}", rec.intl_designator);
    let line1 = format!(
        "1 {:05}{} {} {:02}{} {}.{} {} {} {} {:>4}",
        rec.norad_id,
        rec.classification,
        designator,
        rec.epoch_year % 100,
        fixed(rec.epoch_day, 12, 8, "epoch day")?.replace(' ', "0"),
        ndot_sign,
        ndot,
        exponent_field(rec.mean_motion_ddot, "mean motion second derivative")?,
        exponent_field(rec.bstar, "B*")?,
        rec.ephemeris_type,
        rec.element_set % 10_000,
    );
    let line2 = format!(
        "2 {:05} {} {} {} {} {} {}{:>5}",
        rec.norad_id,
        fixed(rec.inclination, 8, 4, "inclination")?,
        fixed(rec.raan, 8, 4, "raan")?,
        implied_point(rec.eccentricity, 7, "eccentricity")?,
        fixed(rec.argp, 8, 4, "argument of perigee")?,
        fixed(rec.mean_anomaly, 8, 4, "mean anomaly")?,
        fixed(rec.mean_motion, 11, 8, "mean motion")?,
        rec.rev_number % 100_000,
    );
    Ok((with_checksum(line1), with_checksum(line2)))
}

/// Elements at epoch: `a` from the mean motion, true anomaly from the mean
/// anomaly via Kepler's equation.
pub fn tle_to_elements(rec: &TleRecord, g: &GravityModel) -> Result<OrbitalElements> {
    if !(rec.mean_motion > 0.0) {
        return Err(crate::error::Error::InvalidArgument(format!(
            "mean motion must be positive, got {}",
            rec.mean_motion
        )));
    }
    let n = rec.mean_motion * TAU / 86_400.0;
    let a = (g.mu / (n * n)).cbrt();
    let f = mean_to_true(rec.mean_anomaly.to_radians(), rec.eccentricity)?;
    Ok(OrbitalElements {
        a,
        e: rec.eccentricity,
        i: rec.inclination,
        raan: rec.raan,
        argp: rec.argp,
        true_anomaly: f.to_degrees(),
    })
}

/// Mean motion (rev/day) of a Keplerian orbit with semi-major axis `a` km.
pub fn mean_motion_rev_per_day(a: f64, g: &GravityModel) -> f64 {
    (g.mu / a.powi(3)).sqrt() * 86_400.0 / TAU
}

#[cfg(test)]
mod tests {
    use super::*;

    const ISS_1: &str = "1 25544U 98067A   23200.50000000  .00016717  00000-0  30270-3 0  9990";

    fn sample() -> TleRecord {
        TleRecord {
            norad_id: 25544,
            classification: 'U',
            intl_designator: "98067A  ".into(),
            epoch_year: 23,
            epoch_day: 200.5,
            mean_motion_dot: 0.00016717,
            mean_motion_ddot: 0.0,
            bstar: 0.3027e-3,
            ephemeris_type: '0',
            element_set: 999,
            inclination: 51.639,
            raan: 113.73,
            eccentricity: 0.0007,
            argp: 51.197,
            mean_anomaly: 358.9,
            mean_motion: 15.49,
            rev_number: 40000,
            line1_checksum: 0,
            line2_checksum: 0,
        }
    }

    #[test]
    fn zero_line_checksum() {
        let line = format!("{}0", "0".repeat(68));
        assert_eq!(line_checksum(&line), 0);
        assert_eq!(verify_line(&line, 1), Ok(0));
    }

    #[test]
    fn checksum_counts_minus_signs() {
        let mut body = "0".repeat(68);
        body.replace_range(10..11, "-");
        body.replace_range(20..21, "7");
        assert_eq!(line_checksum(&body), 8);
    }

    #[test]
    fn serialised_lines_have_fixed_layout() {
        let (l1, l2) = serialize_tle(&sample()).unwrap();
        assert_eq!(l1.len(), 69);
        assert_eq!(l2.len(), 69);
        assert_eq!(&l1[..ISS_1.len() - 1], &ISS_1[..68]);
        assert_eq!(cols(&l2, 27, 33), "0007000");
        assert_eq!(cols(&l1, 54, 61), " 30270-3");
    }

    #[test]
    fn round_trip() {
        let rec = sample();
        let (l1, l2) = serialize_tle(&rec).unwrap();
        let back = parse_tle(&l1, &l2).unwrap();
        let mut expected = rec.clone();
        expected.line1_checksum = back.line1_checksum;
        expected.line2_checksum = back.line2_checksum;
        assert_eq!(back, expected);
        assert_eq!(back.line1_checksum, line_checksum(&l1));
    }

    #[test]
    fn flipped_digit_fails_checksum() {
        let (l1, l2) = serialize_tle(&sample()).unwrap();
        let mut bad = l2.clone().into_bytes();
        bad[10] = if bad[10] == b'9' { b'8' } else { bad[10] + 1 };
        let bad = String::from_utf8(bad).unwrap();
        assert!(matches!(parse_tle(&l1, &bad), Err(TleError::Checksum { line: 2, .. })));
    }

    #[test]
    fn length_and_field_errors() {
        let (l1, l2) = serialize_tle(&sample()).unwrap();
        assert!(matches!(parse_tle(&l1[..68], &l2), Err(TleError::Length { line: 1, found: 68 })));
        // letters in the inclination, checksum repaired
        let mut body = l2[..68].to_string();
        body.replace_range(8..16, " 5x.6390");
        let bad = with_checksum(body);
        match parse_tle(&l1, &bad) {
            Err(TleError::Field { line: 2, start: 9, end: 16, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn exponent_fields() {
        assert_eq!(exponent_field(0.12345e-3, "x").unwrap(), " 12345-3");
        assert_eq!(exponent_field(-0.5e-5, "x").unwrap(), "-50000-5");
        assert_eq!(exponent_field(0.0, "x").unwrap(), " 00000-0");
        let line = format!("{:<53}{}", "", "-11606-4");
        assert!((parse_exponent_field(&line, 1, "B*", 54, 61).unwrap() + 0.11606e-4).abs() < 1e-20);
    }

    #[test]
    fn file_with_name_lines() {
        let (l1, l2) = serialize_tle(&sample()).unwrap();
        let text = format!("ISS (ZARYA)\n{l1}\n{l2}\n\n{l1}\n{l2}\n");
        assert_eq!(parse_tle_file(&text).unwrap().len(), 2);
        let broken = format!("ISS\n{l1}\n");
        assert!(matches!(parse_tle_file(&broken), Err(TleError::Incomplete { line: 2 })));
    }

    #[test]
    fn circular_orbit_keeps_anomaly() {
        let mut rec = sample();
        rec.eccentricity = 0.0;
        rec.mean_anomaly = 123.4567;
        let el = tle_to_elements(&rec, &GravityModel::earth()).unwrap();
        assert!((el.true_anomaly - 123.4567).abs() < 1e-10);
    }

    #[test]
    fn mean_motion_inverts() {
        let g = GravityModel::earth();
        let mut rec = sample();
        rec.mean_motion = mean_motion_rev_per_day(6796.9, &g);
        let el = tle_to_elements(&rec, &g).unwrap();
        assert!((el.a - 6796.9).abs() < 1e-8);
    }
}
