//! Typed signal labels attached to model states, inputs and outputs.
//!
//! Every scalar signal in a model is identified by the component that owns it
//! and a short name ("p_r", "q_l", ...). The kind records the physical
//! quantity so connection rules and conservation checks can partition signals
//! without string conventions leaking everywhere.

use std::fmt;

/// Physical quantity carried by a signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SignalKind {
    /// Pressure \[Pa\]
    Pressure,
    /// Mass flow \[kg/s\]
    MassFlow,
    /// Temperature \[K\]
    Temperature,
    /// Dimensionless actuator command
    Command,
    /// Cross-sectional area \[m²\]
    Area,
}

/// Role of a signal within a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SignalDirection {
    Input,
    Output,
    State,
}

/// Identity of a signal: owning component plus short name.
///
/// The same id may appear once per direction in a model (a pipe's `p_r` is
/// both a state and an output), so the id alone names the physical signal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SignalId {
    pub owner: String,
    pub name: String,
}

impl SignalId {
    pub fn new(owner: impl Into<String>, name: impl Into<String>) -> Self {
        Self {
            owner: owner.into(),
            name: name.into(),
        }
    }

    /// Parses `"owner.name"`. The last dot splits owner from name so owners
    /// may themselves contain dots.
    pub fn parse(text: &str) -> Option<Self> {
        let (owner, name) = text.rsplit_once('.')?;
        if owner.is_empty() || name.is_empty() {
            return None;
        }
        Some(Self::new(owner, name))
    }
}

impl fmt::Display for SignalId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.owner, self.name)
    }
}

/// A signal id together with its physical kind and model role.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SignalLabel {
    pub id: SignalId,
    pub kind: SignalKind,
    pub direction: SignalDirection,
}

impl SignalLabel {
    pub fn new(
        owner: impl Into<String>,
        name: impl Into<String>,
        kind: SignalKind,
        direction: SignalDirection,
    ) -> Self {
        Self {
            id: SignalId::new(owner, name),
            kind,
            direction,
        }
    }

    pub fn with_direction(&self, direction: SignalDirection) -> Self {
        Self {
            id: self.id.clone(),
            kind: self.kind,
            direction,
        }
    }
}

impl fmt::Display for SignalLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_qualified_name() {
        let id = SignalId::parse("p1.q_l").unwrap();
        assert_eq!(id.owner, "p1");
        assert_eq!(id.name, "q_l");
        assert_eq!(id.to_string(), "p1.q_l");
    }

    #[test]
    fn parse_rejects_malformed() {
        assert!(SignalId::parse("no_dot").is_none());
        assert!(SignalId::parse(".name").is_none());
        assert!(SignalId::parse("owner.").is_none());
    }

    #[test]
    fn parse_splits_on_last_dot() {
        let id = SignalId::parse("net.p1.q_r").unwrap();
        assert_eq!(id.owner, "net.p1");
        assert_eq!(id.name, "q_r");
    }
}
