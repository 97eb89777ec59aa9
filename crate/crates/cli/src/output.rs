use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use cqexp_core::{Error, ExtReal, Result};

/// Comma-separated numbers; an item `a:b:step` expands to
/// `a, a + step, ...` up to `b` inclusive.
pub fn parse_f64_list(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let parts: Vec<&str> = item.split(':').collect();
        match parts.as_slice() {
            [x] => out.push(number(x)?),
            [a, b, step] => {
                let (a, b, step) = (number(a)?, number(b)?, number(step)?);
                if step.is_nan() || step <= 0.0 || b < a {
                    return Err(Error::Validation(format!("bad range `{item}`")));
                }
                let count = ((b - a) / step + 1e-9).floor() as usize;
                out.extend((0..=count).map(|i| a + step * i as f64));
            }
            _ => return Err(Error::Validation(format!("bad list item `{item}`"))),
        }
    }
    if out.is_empty() {
        return Err(Error::Validation("empty list".into()));
    }
    Ok(out)
}

fn number(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| Error::Validation(format!("`{s}` is not a finite number")))
}

pub fn parse_usize_list(text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| Error::Validation(format!("`{s}` is not a count"))))
        .collect::<Result<Vec<_>>>()
        .and_then(|v| if v.is_empty() { Err(Error::Validation("empty list".into())) } else { Ok(v) })
}

pub fn float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x == f64::INFINITY {
        "inf".into()
    } else {
        format!("{x:?}")
    }
}

pub fn ext(x: Option<ExtReal>) -> String {
    match x {
        Some(ExtReal::Finite(v)) => float(v),
        Some(ExtReal::PosInfinity) => "inf".into(),
        None => "nan".into(),
    }
}

pub struct Csv(String);

impl Csv {
    pub fn new(header: &str) -> Self {
        Csv(format!("{header}\n"))
    }

    pub fn row(&mut self, fields: &[String]) {
        let _ = writeln!(self.0, "{}", fields.join(","));
    }

    pub fn into_string(self) -> String {
        self.0
    }
}

pub fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Error::Validation(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lists_and_ranges() {
        assert_eq!(parse_f64_list("0.5, 1").unwrap(), vec![0.5, 1.0]);
        assert_eq!(parse_f64_list("0:1:0.25").unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!(parse_f64_list("0:1:-1").is_err());
        assert!(parse_f64_list("x").is_err());
        assert_eq!(parse_usize_list("1,2,3").unwrap(), vec![1, 2, 3]);
        assert!(parse_usize_list("").is_err());
    }

    #[test]
    fn formatting() {
        assert_eq!(float(1.0), "1.0");
        assert_eq!(float(0.5), "0.5");
        assert_eq!(ext(Some(ExtReal::PosInfinity)), "inf");
        assert_eq!(ext(None), "nan");
    }
}
