//! Configuration types: the negotiable parameters of a service and the
//! constraint every configuration must satisfy.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;
use tracing::warn;

use crate::formula::{Formula, Var};
use crate::qe::{Qe, QeError};
use crate::syntax::{ParseError, Parser, Tok};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BasicType {
    Decimal,
}

impl fmt::Display for BasicType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("decimal")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ConfigType {
    pub name: Option<String>,
    pub params: Vec<(Var, BasicType)>,
    pub constraint: Formula,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("{0}")]
    Parse(#[from] ParseError),
    #[error("duplicate parameter `{0}`")]
    DuplicateParameter(Var),
    #[error("constraint mentions `{0}`, which is not a parameter")]
    UnknownVariable(Var),
    #[error("constraint must be quantifier-free")]
    Quantified,
    #[error("constraint is unsatisfiable")]
    Unsatisfiable,
    #[error("parameter `{0}` is already prefixed")]
    AlreadyPrefixed(Var),
    #[error("duplicate type definition `{0}`")]
    DuplicateType(String),
    #[error(transparent)]
    Resource(#[from] QeError),
}

impl ConfigType {
    /// Checks the structural invariants and satisfiability of the constraint.
    pub fn new(name: Option<String>, params: Vec<(Var, BasicType)>, constraint: Formula) -> Result<Self, ConfigError> {
        let ct = ConfigType { name, params, constraint };
        ct.check(&Qe::default())?;
        Ok(ct)
    }

    pub fn check(&self, qe: &Qe) -> Result<(), ConfigError> {
        let mut seen = BTreeSet::new();
        for (p, _) in &self.params {
            if !seen.insert(p) {
                return Err(ConfigError::DuplicateParameter(p.clone()));
            }
        }
        if !self.constraint.is_quantifier_free() {
            return Err(ConfigError::Quantified);
        }
        if let Some(v) = self.constraint.free_vars().into_iter().find(|v| !seen.contains(v)) {
            return Err(ConfigError::UnknownVariable(v));
        }
        if self.params.is_empty() {
            warn!(name = ?self.name, "configuration type has no parameters");
        }
        if !qe.is_satisfiable(&self.constraint)? {
            return Err(ConfigError::Unsatisfiable);
        }
        Ok(())
    }

    /// The set of parameter names.
    pub fn lang(&self) -> BTreeSet<Var> {
        self.params.iter().map(|(v, _)| v.clone()).collect()
    }

    pub fn is_formula_over(&self, f: &Formula) -> bool {
        let lang = self.lang();
        f.free_vars().iter().all(|v| lang.contains(v))
    }

    /// Renames every parameter `p` to `server.p`.
    pub fn prefix_params(&self, server: &str) -> Result<ConfigType, ConfigError> {
        if let Some((v, _)) = self.params.iter().find(|(v, _)| v.prefix.is_some()) {
            return Err(ConfigError::AlreadyPrefixed(v.clone()));
        }
        Ok(ConfigType {
            name: self.name.clone(),
            params: self.params.iter().map(|(v, t)| (v.with_prefix(server), *t)).collect(),
            constraint: self.constraint.prefix_vars(server),
        })
    }

    /// Same parameters and equivalent constraints; names are ignored.
    pub fn same_terms(&self, other: &ConfigType, qe: &Qe) -> Result<bool, QeError> {
        if self.lang() != other.lang() {
            return Ok(false);
        }
        qe.equivalent(&self.constraint, &other.constraint)
    }

    pub fn display_name(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.to_string())
    }
}

impl fmt::Display for ConfigType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (v, t)) in self.params.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{v}: {t}")?;
        }
        write!(f, "; {}}}", self.constraint)
    }
}

impl Parser {
    /// `{ p: decimal, ...; formula }`
    pub(crate) fn config_type(&mut self) -> Result<(Vec<(Var, BasicType)>, Formula), ParseError> {
        self.expect_sym("{")?;
        let mut params = Vec::new();
        while !self.at_sym(";") {
            let v = self.var()?;
            self.expect_sym(":")?;
            match self.peek() {
                Tok::Ident(t) if t == "decimal" => {
                    self.bump();
                }
                _ => return Err(self.unexpected("basic type `decimal`")),
            }
            params.push((v, BasicType::Decimal));
            if !self.eat_sym(",") {
                break;
            }
        }
        self.expect_sym(";")?;
        let constraint = self.formula()?;
        self.expect_sym("}")?;
        Ok((params, constraint))
    }
}

pub fn parse_config_type(src: &str) -> Result<ConfigType, ConfigError> {
    let mut p = Parser::new(src)?;
    let (params, constraint) = p.config_type()?;
    p.expect_eof()?;
    ConfigType::new(None, params, constraint)
}

/// Named configuration types, read from `name = { ... }` definitions.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TypeRegistry {
    types: BTreeMap<String, ConfigType>,
}

impl TypeRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, mut ct: ConfigType) -> Result<(), ConfigError> {
        let name = name.into();
        if self.types.contains_key(&name) {
            return Err(ConfigError::DuplicateType(name));
        }
        ct.name = Some(name.clone());
        self.types.insert(name, ct);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&ConfigType> {
        self.types.get(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &ConfigType)> {
        self.types.iter()
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }
}

pub fn parse_registry(src: &str) -> Result<TypeRegistry, ConfigError> {
    let mut p = Parser::new(src)?;
    let mut reg = TypeRegistry::new();
    while !matches!(p.peek(), Tok::Eof) {
        let name = p.hyphenated_ident()?;
        p.expect_sym("=")?;
        let (params, constraint) = p.config_type()?;
        p.eat_sym(";");
        reg.insert(name.clone(), ConfigType::new(Some(name), params, constraint)?)?;
    }
    Ok(reg)
}

impl fmt::Display for TypeRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, ct) in &self.types {
            writeln!(f, "{name} = {ct}")?;
        }
        Ok(())
    }
}
