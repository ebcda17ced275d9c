//! Grid specifications for sweeps.

/// Grid values are rounded to this many decimals so that `0.1 + 2*0.1`
/// prints as `0.3`.
const GRID_DECIMALS: i32 = 12;
const MAX_POINTS: usize = 1_000_000;

fn round_grid(v: f64) -> f64 {
    let scale = 10f64.powi(GRID_DECIMALS);
    (v * scale).round() / scale
}

fn parse_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| format!("invalid number '{s}'"))?;
    if !v.is_finite() {
        return Err(format!("non-finite value '{s}'"));
    }
    Ok(v)
}

/// Parse `a:b:step`, a comma-separated list, or a single value.
pub fn parse_real_grid(spec: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        [single] => single.split(',').map(parse_f64).collect(),
        [a, b, step] => {
            let (a, b, step) = (parse_f64(a)?, parse_f64(b)?, parse_f64(step)?);
            if step <= 0.0 {
                return Err("grid step must be positive".into());
            }
            if b < a {
                return Err(format!("empty grid: {a} > {b}"));
            }
            let count = ((b - a) / step + 1e-9).floor() as usize + 1;
            if count > MAX_POINTS {
                return Err(format!("grid has {count} points, limit is {MAX_POINTS}"));
            }
            Ok((0..count)
                .map(|i| round_grid(a + i as f64 * step))
                .collect())
        }
        _ => Err(format!(
            "expected a:b:step, a list or a value, got '{spec}'"
        )),
    }
}

/// Parse an inclusive integer range `a:b`, a comma-separated list, or a single value.
pub fn parse_index_grid(spec: &str) -> Result<Vec<u64>, String> {
    let int = |s: &str| {
        s.trim()
            .parse::<u64>()
            .map_err(|_| format!("invalid integer '{s}'"))
    };
    let parts: Vec<&str> = spec.split(':').collect();
    let values = match parts.as_slice() {
        [single] => single.split(',').map(int).collect::<Result<Vec<_>, _>>()?,
        [a, b] => {
            let (a, b) = (int(a)?, int(b)?);
            if b < a {
                return Err(format!("empty range: {a} > {b}"));
            }
            if b - a >= MAX_POINTS as u64 {
                return Err(format!("range has more than {MAX_POINTS} points"));
            }
            (a..=b).collect()
        }
        _ => return Err(format!("expected a:b, a list or a value, got '{spec}'")),
    };
    if values.contains(&0) {
        return Err("n must be at least 1".into());
    }
    Ok(values)
}
