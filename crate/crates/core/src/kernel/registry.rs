//! Bundled kernel specs, addressable by name.

use super::spec::KernelSpec;
use super::KernelError;

const BUNDLED: &[(&str, &str)] = &[
    ("example21", include_str!("../../specs/example21.spec")),
    ("example22cubic", include_str!("../../specs/example22cubic.spec")),
    ("example23gauss", include_str!("../../specs/example23gauss.spec")),
    ("sym2", include_str!("../../specs/sym2.spec")),
    ("cycle2", include_str!("../../specs/cycle2.spec")),
    ("cycle3", include_str!("../../specs/cycle3.spec")),
    ("ds3", include_str!("../../specs/ds3.spec")),
];

pub fn names() -> impl Iterator<Item = &'static str> {
    BUNDLED.iter().map(|(n, _)| *n)
}

/// Raw text of a bundled spec. Accepts the bare name or `<name>.spec`.
pub fn source(name: &str) -> Option<&'static str> {
    let name = name.strip_suffix(".spec").unwrap_or(name);
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn bundled(name: &str) -> Result<KernelSpec, KernelError> {
    let text = source(name).ok_or_else(|| KernelError::UnknownSpec(name.to_string()))?;
    KernelSpec::from_json_str(text)
}
