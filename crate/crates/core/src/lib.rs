//! Finite-resolution toolkit for set-valued dynamical systems.
//!
//! Compact metric spaces are replaced by finite nets with exact rational
//! distances, set-valued maps by image tables over the net. On top of that the
//! crate computes Hausdorff distances, orbit segments and their metrics,
//! separated/spanning counts and growth rates, continuum-wise expansiveness
//! evidence, and specification/mixing checks.

pub mod entropy;
pub mod error;
pub mod experiment;
pub mod expansivity;
pub mod orbit;
mod packing;
pub mod space;
pub mod specification;
pub mod svmap;

/// Exact rational length. All metric quantities use this type.
pub type Length = num_rational::Rational64;

pub use error::{Error, Result};
pub use space::{Continuum, MetricSpace, PointSet, SpaceKind};
pub use svmap::{BuiltinMap, SetValuedMap};

/// Parses `"p/q"`, `"p"` or a decimal such as `"0.25"` into an exact length.
pub fn parse_length(s: &str) -> Result<Length> {
    let s = s.trim();
    let bad = || Error::Config(format!("cannot parse {s:?} as a rational"));
    if let Some((p, q)) = s.split_once('/') {
        let p: i64 = p.trim().parse().map_err(|_| bad())?;
        let q: i64 = q.trim().parse().map_err(|_| bad())?;
        if q == 0 {
            return Err(bad());
        }
        return Ok(Length::new(p, q));
    }
    if let Some((int, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) || frac.len() > 15 {
            return Err(bad());
        }
        let negative = int.starts_with('-');
        let int_part: i64 = match int.trim_start_matches('-') {
            "" => 0,
            digits => digits.parse().map_err(|_| bad())?,
        };
        let denom = 10i64.pow(frac.len() as u32);
        let frac_part: i64 = frac.parse().map_err(|_| bad())?;
        let magnitude = Length::new(int_part * denom + frac_part, denom);
        return Ok(if negative { -magnitude } else { magnitude });
    }
    Ok(Length::from_integer(s.parse().map_err(|_| bad())?))
}
