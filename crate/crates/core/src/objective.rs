//! Region objectives of the form `X|Y` ("the X-th of Y equal sections"),
//! combined with `+`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::spectral::{rect_spectral, SpectralVector};

/// One `X|Y` selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Section {
    pub x: u32,
    pub y: u32,
}

impl Section {
    /// Real-valued bounds `[(x-1)L/y, xL/y]`.
    pub fn bounds(&self, length: f64) -> (f64, f64) {
        let y = f64::from(self.y);
        (
            f64::from(self.x - 1) * length / y,
            f64::from(self.x) * length / y,
        )
    }
}

impl fmt::Display for Section {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}|{}", self.x, self.y)
    }
}

/// A non-empty sum of region selectors describing where query terms should sit.
/// Overlapping or repeated sections add their mass.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObjectiveSpec {
    sections: Vec<Section>,
}

impl ObjectiveSpec {
    pub fn new(sections: Vec<Section>) -> Result<Self> {
        if sections.is_empty() {
            return Err(Error::invalid("objective needs at least one section"));
        }
        for s in &sections {
            if s.x == 0 || s.y == 0 || s.x > s.y {
                return Err(Error::Objective {
                    term: s.to_string(),
                    message: "expected 1 <= X <= Y".into(),
                });
            }
        }
        Ok(Self { sections })
    }

    /// Parses `term ("+" term)*` with `term := INT "|" INT`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut sections = Vec::new();
        for raw in text.split('+') {
            let term = raw.trim();
            let bad = |message: &str| Error::Objective {
                term: term.to_string(),
                message: message.to_string(),
            };
            let (x, y) = term.split_once('|').ok_or_else(|| bad("expected X|Y"))?;
            let x: u32 = x
                .trim()
                .parse()
                .map_err(|_| bad("X is not a positive integer"))?;
            let y: u32 = y
                .trim()
                .parse()
                .map_err(|_| bad("Y is not a positive integer"))?;
            if x == 0 || y == 0 {
                return Err(bad("X and Y must be positive"));
            }
            if x > y {
                return Err(bad("X exceeds Y"));
            }
            sections.push(Section { x, y });
        }
        Self::new(sections)
    }

    pub fn sections(&self) -> &[Section] {
        &self.sections
    }

    /// Spectral vector of the objective function over `[0, length]`.
    pub fn spectral(&self, length: f64, order: usize) -> Result<SpectralVector> {
        let mut acc = SpectralVector::zeros(order, length);
        for s in &self.sections {
            let (u, v) = s.bounds(length);
            let rect = rect_spectral(u, v.min(length), length, order)?;
            acc.add_scaled(rect.coeffs(), 1.0);
        }
        Ok(acc)
    }

    /// Whether token `position` (1-based) of a document of `length` tokens
    /// falls in the objective region, judged by the pulse midpoint `p - 0.5`.
    pub fn in_region(&self, position: u32, length: u32) -> Result<bool> {
        if position == 0 || position > length {
            return Err(Error::invalid(format!(
                "position {position} outside 1..={length}"
            )));
        }
        let mid = f64::from(position) - 0.5;
        Ok(self.sections.iter().any(|s| {
            let (lo, hi) = s.bounds(f64::from(length));
            mid >= lo && mid <= hi
        }))
    }
}

impl FromStr for ObjectiveSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

impl fmt::Display for ObjectiveSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.sections.iter().enumerate() {
            if i > 0 {
                f.write_str("+")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

pub fn parse_objective(text: &str) -> Result<ObjectiveSpec> {
    ObjectiveSpec::parse(text)
}

pub fn objective_spectral(
    spec: &ObjectiveSpec,
    length: f64,
    order: usize,
) -> Result<SpectralVector> {
    spec.spectral(length, order)
}

pub fn in_region(position: u32, spec: &ObjectiveSpec, length: u32) -> Result<bool> {
    spec.in_region(position, length)
}
