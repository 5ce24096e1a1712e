use crate::error::{CliError, CliResult};

/// Largest number of points a single sweep may contain.
pub const MAX_SWEEP_VALUES: usize = 10_000;

/// Parses a sweep value list.
///
/// Items are separated by commas. An item is either a number or a range
/// `start:stop:count`, which expands to `count` evenly spaced values from
/// `start` to `stop` inclusive. `"0, 0.5, 1:3:3"` gives `[0, 0.5, 1, 2, 3]`.
/// Values keep their input order.
pub fn parse_sweep_values(text: &str) -> CliResult<Vec<f64>> {
    let mut values = Vec::new();
    for (i, item) in text.split(',').enumerate() {
        let item = item.trim();
        if item.is_empty() {
            if text.trim().is_empty() {
                break;
            }
            return Err(CliError::Config(format!("values[{i}]: empty item")));
        }
        let number = |s: &str| -> CliResult<f64> {
            let v: f64 = s
                .trim()
                .parse()
                .map_err(|_| CliError::Config(format!("values[{i}]: {s:?} is not a number")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(CliError::Config(format!("values[{i}]: {s:?} is not finite")))
            }
        };
        let parts: Vec<&str> = item.split(':').collect();
        match parts.as_slice() {
            [v] => values.push(number(v)?),
            [start, stop, count] => {
                let (start, stop) = (number(start)?, number(stop)?);
                let count: usize = count
                    .trim()
                    .parse()
                    .map_err(|_| CliError::Config(format!("values[{i}]: range count {count:?} is not an integer")))?;
                if count == 0 || count > MAX_SWEEP_VALUES {
                    return Err(CliError::Config(format!(
                        "values[{i}]: range count must be in 1..={MAX_SWEEP_VALUES}"
                    )));
                }
                if count == 1 {
                    values.push(start);
                } else {
                    let step = (stop - start) / (count - 1) as f64;
                    if !step.is_finite() {
                        return Err(CliError::Config(format!("values[{i}]: range step is not finite")));
                    }
                    values.extend((0..count).map(|k| if k == count - 1 { stop } else { start + k as f64 * step }));
                }
            }
            _ => {
                return Err(CliError::Config(format!(
                    "values[{i}]: {item:?} must be a number or start:stop:count"
                )))
            }
        }
        if values.len() > MAX_SWEEP_VALUES {
            return Err(CliError::Config(format!("values: more than {MAX_SWEEP_VALUES} points")));
        }
    }
    if values.is_empty() {
        return Err(CliError::Config("values: the value list is empty".into()));
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lists_and_ranges() {
        assert_eq!(parse_sweep_values("0, 0.5,1").unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(parse_sweep_values("1:3:3,-1").unwrap(), vec![1.0, 2.0, 3.0, -1.0]);
        assert_eq!(parse_sweep_values("2:0:2").unwrap(), vec![2.0, 0.0]);
        assert_eq!(parse_sweep_values("1e-3").unwrap(), vec![1e-3]);
    }

    #[test]
    fn rejects_bad_input() {
        for bad in [
            "",
            "  ",
            "1,,2",
            "x",
            "nan",
            "inf",
            "1:2",
            "1:2:0",
            "1:2:x",
            "1:2:3:4",
            "0:1:20000",
        ] {
            let err = parse_sweep_values(bad).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{bad:?}");
        }
    }
}
