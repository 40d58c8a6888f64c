//! Parsing of complex literals and the `a..b:n` grid mini-language.

use hram_core::{c, CMatrix, SiegelPoint, C64};

/// Parses `2`, `-1.5`, `i`, `3i`, `-i`, `0.5+2i`, `1-i`, or the pair form `re,im`.
pub fn parse_complex(s: &str) -> Result<C64, String> {
    let t: String = s.chars().filter(|ch| !ch.is_whitespace()).collect();
    if t.is_empty() {
        return Err("empty complex number".into());
    }
    if let Some((re, im)) = t.split_once(',') {
        return Ok(c(parse_real(re)?, parse_real(im)?));
    }
    let Some(body) = t.strip_suffix('i') else {
        return Ok(c(parse_real(&t)?, 0.0));
    };
    // split at the last sign that is not part of an exponent or the leading sign
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (parse_real(&body[..k])?, &body[k..]),
        None => (0.0, body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        x => parse_real(x)?,
    };
    Ok(c(re, im))
}

fn parse_real(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("'{s}' is not finite"))
    }
}

/// One axis `a..b:n`: `n` evenly spaced complex values from `a` to `b` inclusive.
pub fn parse_axis(s: &str) -> Result<Vec<C64>, String> {
    let (range, n) = s
        .rsplit_once(':')
        .ok_or_else(|| format!("grid axis '{s}' lacks ':n'"))?;
    let (a, b) = range
        .split_once("..")
        .ok_or_else(|| format!("grid axis '{s}' lacks 'a..b'"))?;
    let n: usize = n
        .trim()
        .parse()
        .map_err(|_| format!("'{n}' is not a point count"))?;
    if n == 0 || n > 100_000 {
        return Err(format!("point count {n} is outside 1..=100000"));
    }
    let (a, b) = (parse_complex(a)?, parse_complex(b)?);
    if n == 1 {
        return Ok(vec![a]);
    }
    Ok((0..n)
        .map(|k| a + (b - a) * (k as f64 / (n - 1) as f64))
        .collect())
}

/// A grid of Siegel points.
///
/// A single axis gives the scalar points `t 1_g`. Otherwise there is one axis per
/// upper-triangular entry of `tau` (row-major) and the grid is their product, last
/// axis fastest. Points outside `H_g` are dropped.
pub fn parse_grid(spec: &str, g: usize) -> Result<Vec<SiegelPoint>, String> {
    let axes: Vec<Vec<C64>> = spec.split(';').map(parse_axis).collect::<Result<_, _>>()?;
    let entries = g * (g + 1) / 2;
    let points: Vec<CMatrix> = if axes.len() == 1 {
        axes[0]
            .iter()
            .map(|&t| CMatrix::identity(g).scale(t))
            .collect()
    } else if axes.len() == entries {
        let total: usize = axes.iter().map(Vec::len).product();
        if total > 100_000 {
            return Err(format!("grid has {total} points, more than 100000"));
        }
        (0..total)
            .map(|mut idx| {
                let mut vals = vec![C64::default(); entries];
                for (k, axis) in axes.iter().enumerate().rev() {
                    vals[k] = axis[idx % axis.len()];
                    idx /= axis.len();
                }
                upper_to_matrix(&vals, g)
            })
            .collect()
    } else {
        return Err(format!(
            "expected 1 or {entries} grid axes for g = {g}, got {}",
            axes.len()
        ));
    };
    let pts: Vec<SiegelPoint> = points
        .into_iter()
        .filter_map(|m| SiegelPoint::new(m).ok())
        .collect();
    if pts.is_empty() {
        return Err("no grid point lies in the Siegel upper half-space".into());
    }
    Ok(pts)
}

fn upper_to_matrix(vals: &[C64], g: usize) -> CMatrix {
    let mut m = CMatrix::zeros(g, g);
    let mut k = 0;
    for i in 0..g {
        for j in i..g {
            m[(i, j)] = vals[k];
            m[(j, i)] = vals[k];
            k += 1;
        }
    }
    m
}
