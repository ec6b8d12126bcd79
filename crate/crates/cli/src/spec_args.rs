//! Parsing of the potential and φ shorthands accepted on the command line.

use std::path::Path;

use radial_extremal::potentials::{window_potential, Phi, PotentialSpec, TablePotential};

use crate::config::sha256_hex;
use crate::error::CliError;

/// A parsed potential plus the digest of the file it came from, if any.
pub struct ParsedPotential {
    pub spec: PotentialSpec,
    pub input: Option<(String, String)>,
}

fn numbers(s: &str, count: usize, what: &str) -> Result<Vec<f64>, CliError> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Validation(format!("{what}: cannot parse numbers from '{s}'")))?;
    if v.len() != count {
        return Err(CliError::Validation(format!(
            "{what}: expected {count} numbers, got '{s}'"
        )));
    }
    Ok(v)
}

fn read_input(path: &str) -> Result<(String, (String, String)), CliError> {
    let bytes = std::fs::read(Path::new(path))
        .map_err(|e| CliError::Validation(format!("cannot read {path}: {e}")))?;
    let digest = sha256_hex(&bytes);
    let text = String::from_utf8(bytes)
        .map_err(|_| CliError::Validation(format!("{path} is not UTF-8")))?;
    Ok((text, (path.to_string(), digest)))
}

pub fn parse_potential(s: &str, dim: usize) -> Result<ParsedPotential, CliError> {
    let (head, rest) = s.split_once(':').unwrap_or((s, ""));
    let plain = |spec| Ok(ParsedPotential { spec, input: None });
    match head {
        "zero" => plain(PotentialSpec::zero(dim)?),
        "borderline" => plain(PotentialSpec::borderline(dim)?),
        "hardy" => plain(PotentialSpec::hardy(dim)?),
        "shifted" => plain(PotentialSpec::shifted(
            dim,
            numbers(rest, 1, "shifted")?[0],
        )?),
        "window" => {
            let v = numbers(rest, 2, "window")?;
            plain(window_potential(v[0], v[1], dim)?)
        }
        "table" => {
            let (text, input) = read_input(rest)?;
            let table: TablePotential = serde_json::from_str(&text)
                .map_err(|e| CliError::Validation(format!("table {rest}: {e}")))?;
            Ok(ParsedPotential {
                spec: PotentialSpec::table(dim, table)?,
                input: Some(input),
            })
        }
        "spec" => {
            let (text, input) = read_input(rest)?;
            let spec: PotentialSpec = serde_json::from_str(&text)
                .map_err(|e| CliError::Validation(format!("spec {rest}: {e}")))?;
            if spec.dim != dim {
                return Err(CliError::Validation(format!(
                    "spec {rest} has N = {}, run has N = {dim}",
                    spec.dim
                )));
            }
            Ok(ParsedPotential {
                spec,
                input: Some(input),
            })
        }
        _ => Err(CliError::Validation(format!("unknown potential '{s}'"))),
    }
}

/// A full potential JSON document, dimension taken from the file.
pub fn load_spec(path: &Path) -> Result<ParsedPotential, CliError> {
    let name = path.to_string_lossy();
    let (text, input) = read_input(&name)?;
    let spec: PotentialSpec = serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("spec {name}: {e}")))?;
    Ok(ParsedPotential {
        spec,
        input: Some(input),
    })
}

pub fn parse_phi(s: &str, dim: usize) -> Result<Phi, CliError> {
    let (head, rest) = s.split_once(':').unwrap_or((s, ""));
    let phi = match head {
        "inv_r2" => Phi::inv_r2(),
        "inv_r" => Phi::inv_r(),
        "borderline" => Phi::borderline(dim),
        "power" => {
            let v = numbers(rest, 2, "power")?;
            Phi::Power {
                exponent: v[0],
                scale: v[1],
            }
        }
        _ => return Err(CliError::Validation(format!("unknown phi '{s}'"))),
    };
    phi.validate()?;
    Ok(phi)
}
