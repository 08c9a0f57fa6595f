use std::fmt;
use std::str::FromStr;

/// A time given either absolutely or as a multiple of the chain length:
/// `40`, `2N`, `0.5N`, `0.5*N`, `N/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeSpec {
    Absolute(f64),
    PerSite(f64),
}

impl TimeSpec {
    pub fn resolve(self, n_sites: usize) -> f64 {
        match self {
            TimeSpec::Absolute(t) => t,
            TimeSpec::PerSite(k) => k * n_sites as f64,
        }
    }
}

fn number(raw: &str, whole: &str) -> Result<f64, String> {
    let value: f64 = raw
        .trim()
        .parse()
        .map_err(|_| format!("invalid time {whole:?}: expected a number or a multiple of N such as 2N or N/2"))?;
    if value.is_finite() {
        Ok(value)
    } else {
        Err(format!("invalid time {whole:?}: not finite"))
    }
}

impl FromStr for TimeSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let text = s.trim();
        let Some((left, right)) = text.split_once(['N', 'n']) else {
            return number(text, s).map(TimeSpec::Absolute);
        };
        let left = left.trim().trim_end_matches('*');
        let factor = if left.is_empty() { 1.0 } else { number(left, s)? };
        let right = right.trim();
        let divisor = match right.strip_prefix('/') {
            Some(d) => number(d, s)?,
            None if right.is_empty() => 1.0,
            None => return Err(format!("invalid time {s:?}: unexpected {right:?} after N")),
        };
        if divisor == 0.0 {
            return Err(format!("invalid time {s:?}: division by zero"));
        }
        Ok(TimeSpec::PerSite(factor / divisor))
    }
}

impl fmt::Display for TimeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeSpec::Absolute(t) => write!(f, "{t}"),
            TimeSpec::PerSite(k) => write!(f, "{k}N"),
        }
    }
}
