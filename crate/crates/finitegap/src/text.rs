//! Single-token text formats shared by catalogs and the command line.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Parse `re`, `imi`, or `re±imi` (e.g. `0+2i`, `-1.5e-3-0.25i`, `i`).
pub fn parse_complex(s: &str) -> Result<C64> {
    let t = s.trim();
    let bad = || Error::InvalidParameter(format!("cannot parse complex number {s:?}"));
    if t.is_empty() {
        return Err(bad());
    }
    let Some(body) = t.strip_suffix('i').or_else(|| t.strip_suffix('j')) else {
        return t.parse::<f64>().map(|re| C64::new(re, 0.0)).map_err(|_| bad());
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let imag = |txt: &str| -> Result<f64> {
        match txt {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => txt.parse::<f64>().map_err(|_| bad()),
        }
    };
    match split {
        Some(k) => {
            let re = body[..k].parse::<f64>().map_err(|_| bad())?;
            Ok(C64::new(re, imag(&body[k..])?))
        }
        None => Ok(C64::new(0.0, imag(body)?)),
    }
}

/// Inverse of [`parse_complex`] with round-trip precision.
pub fn format_complex(z: C64) -> String {
    if z.im < 0.0 || (z.im == 0.0 && z.im.is_sign_negative()) {
        format!("{}{}i", z.re, z.im)
    } else {
        format!("{}+{}i", z.re, z.im)
    }
}

/// `key=value` pairs separated by whitespace.
pub fn parse_pairs(s: &str) -> Result<Vec<(String, String)>> {
    s.split_whitespace()
        .map(|tok| {
            tok.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| Error::InvalidParameter(format!("expected key=value, got {tok:?}")))
        })
        .collect()
}
