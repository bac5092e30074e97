//! Spec strings for `classify`: `family`, `family:param` for the
//! one-generator families, `family:j:param` otherwise.

use qcuntz::rep::{FamilyTag, RepSpec};

use crate::InputError;

pub fn parse(text: &str, q: f64, n: u32) -> Result<RepSpec, InputError> {
    let parts: Vec<&str> = text.split(':').map(str::trim).collect();
    let tag = FamilyTag::from_cli_name(parts[0]).ok_or_else(|| InputError(format!("unknown family in {text:?}")))?;
    let num = |s: &str| s.parse::<f64>().map_err(|_| InputError(format!("bad number {s:?} in {text:?}")));
    let int = |s: &str| s.parse::<u32>().map_err(|_| InputError(format!("bad index {s:?} in {text:?}")));
    let bad = || InputError(format!("spec {text:?} does not fit {}", parts[0]));
    let spec = match (tag, &parts[1..]) {
        (FamilyTag::FockQ1, []) => RepSpec::FockQ1 { q },
        (FamilyTag::FockQn, []) => RepSpec::FockQn { q, n },
        (FamilyTag::Circle, [phi]) => RepSpec::Circle { q, phi: num(phi)? },
        (FamilyTag::LineZ, [x]) => RepSpec::LineZ { q, x: num(x)? },
        (FamilyTag::Circle, [j, phi]) if int(j)? == 1 => RepSpec::Circle { q, phi: num(phi)? },
        (FamilyTag::LineZ, [j, x]) if int(j)? == 1 => RepSpec::LineZ { q, x: num(x)? },
        (FamilyTag::UnboundedXJ, [j, x]) => RepSpec::UnboundedXJ { q, n, j: int(j)?, x: num(x)? },
        (FamilyTag::BoundedPhiJ, [j, phi]) => RepSpec::BoundedPhiJ { q, n, j: int(j)?, phi: num(phi)? },
        _ => return Err(bad()),
    };
    spec.validate()?;
    Ok(spec)
}

/// Generator count when `--n` is absent: at least 2, and at least every
/// distinguished index mentioned.
pub fn default_n(a: &str, b: &str) -> u32 {
    [a, b]
        .iter()
        .filter_map(|s| {
            let parts: Vec<&str> = s.split(':').collect();
            match parts.as_slice() {
                [_, j, _] => j.trim().parse::<u32>().ok(),
                _ => None,
            }
        })
        .fold(2, u32::max)
}
