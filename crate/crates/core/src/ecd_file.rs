//! Plain-text coupling files.
//!
//! ```text
//! # N=50 delta=1 T=100 Jmax=4.5 P=0.955
//! 1,0.10238
//! 2,1.9585
//! ...
//! ```
//!
//! One line per free coupling: `⌈(N-1)/2⌉` lines for a centro-symmetric
//! chain, `N-1` otherwise.

use std::fmt::Write as _;
use std::path::Path;

use crate::chain::{free_dimension, CouplingDistribution};
use crate::error::{Error, Result};

/// Round-trip float formatting with 17 significant digits.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct EcdFile {
    pub n_sites: usize,
    pub anisotropy: f64,
    pub arrival_time: Option<f64>,
    pub j_max: Option<f64>,
    pub population: Option<f64>,
    pub ecd: CouplingDistribution,
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_f64(line: usize, key: &str, raw: &str) -> Result<f64> {
    raw.trim()
        .parse::<f64>()
        .map_err(|_| parse_err(line, format!("invalid number for {key}: {raw:?}")))
}

impl EcdFile {
    pub fn new(ecd: CouplingDistribution, anisotropy: f64) -> Self {
        Self {
            n_sites: ecd.n_sites(),
            anisotropy,
            arrival_time: None,
            j_max: None,
            population: None,
            ecd,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());

        let (header_line, header) = lines
            .next()
            .ok_or_else(|| parse_err(1, "empty file"))?;
        let header = header
            .strip_prefix('#')
            .ok_or_else(|| parse_err(header_line, "expected header starting with '#'"))?;

        let mut n_sites = None;
        let mut anisotropy = None;
        let (mut arrival_time, mut j_max, mut population) = (None, None, None);
        for token in header.split_whitespace() {
            let (key, value) = token
                .split_once('=')
                .ok_or_else(|| parse_err(header_line, format!("malformed header field {token:?}")))?;
            match key {
                "N" => {
                    n_sites = Some(value.parse::<usize>().map_err(|_| {
                        parse_err(header_line, format!("invalid chain length {value:?}"))
                    })?)
                }
                "delta" => anisotropy = Some(parse_f64(header_line, key, value)?),
                "T" => arrival_time = Some(parse_f64(header_line, key, value)?),
                "Jmax" => j_max = Some(parse_f64(header_line, key, value)?),
                "P" => population = Some(parse_f64(header_line, key, value)?),
                _ => return Err(parse_err(header_line, format!("unknown header key {key:?}"))),
            }
        }
        let n_sites = n_sites.ok_or_else(|| parse_err(header_line, "header lacks N"))?;
        let anisotropy = anisotropy.ok_or_else(|| parse_err(header_line, "header lacks delta"))?;
        if n_sites < 2 {
            return Err(parse_err(header_line, format!("N must be at least 2, got {n_sites}")));
        }

        let mut values = Vec::new();
        let mut last_line = header_line;
        for (line, content) in lines {
            last_line = line;
            if content.starts_with('#') {
                continue;
            }
            let (index, value) = content
                .split_once(',')
                .ok_or_else(|| parse_err(line, format!("expected 'i,J_i', got {content:?}")))?;
            let index: usize = index
                .trim()
                .parse()
                .map_err(|_| parse_err(line, format!("invalid coupling index {index:?}")))?;
            if index != values.len() + 1 {
                return Err(parse_err(
                    line,
                    format!("expected coupling index {}, got {index}", values.len() + 1),
                ));
            }
            let value = parse_f64(line, "coupling", value)?;
            if !value.is_finite() {
                return Err(parse_err(line, "coupling must be finite"));
            }
            values.push(value);
        }

        let centro = free_dimension(n_sites, true);
        let ecd = if values.len() == centro {
            CouplingDistribution::centro_symmetric(&values, n_sites)?
        } else if values.len() == n_sites - 1 {
            CouplingDistribution::new(values)?
        } else {
            return Err(parse_err(
                last_line,
                format!(
                    "N={n_sites} needs {centro} (centro-symmetric) or {} couplings, found {}",
                    n_sites - 1,
                    values.len()
                ),
            ));
        };

        Ok(Self {
            n_sites,
            anisotropy,
            arrival_time,
            j_max,
            population,
            ecd,
        })
    }

    pub fn to_csv_string(&self) -> String {
        let opt = |x: Option<f64>| format_float(x.unwrap_or(f64::NAN));
        let mut out = format!(
            "# N={} delta={} T={} Jmax={} P={}\n",
            self.n_sites,
            format_float(self.anisotropy),
            opt(self.arrival_time),
            opt(self.j_max),
            opt(self.population),
        );
        for (i, j) in self.ecd.free_values().iter().enumerate() {
            let _ = writeln!(out, "{},{}", i + 1, format_float(*j));
        }
        out
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }
}
