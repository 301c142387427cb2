//! Negotiation policies: parsing, printing, validation and compilation to
//! the core form of rules combined by choice.
//!
//! ```text
//! policy storage-brokering {
//!   serves: storage
//!   minimize: [price]
//!   rules: [
//!     { trigger: true,
//!       uses: [s1: storage, s2: storage],
//!       offer: { capacity := s1.capacity + s2.capacity,
//!                price := 1.1 * (s1.price + s2.price) },
//!       constraint: true },
//!   ]
//! }
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::config::{ConfigError, ConfigType, TypeRegistry};
use crate::formula::{Formula, Rel, Term, Var};
use crate::qe::{Direction, Qe, QeError};
use crate::syntax::{ParseError, Parser, Tok};

/// Source position. Positions never affect equality of syntax trees.
#[derive(Clone, Copy, Debug, Default, Eq)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
}

impl PartialEq for Pos {
    fn eq(&self, _: &Pos) -> bool {
        true
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TypeExpr {
    Named(String),
    Inline(ConfigType),
}

impl TypeExpr {
    pub fn resolve(&self, registry: &TypeRegistry) -> Option<ConfigType> {
        match self {
            TypeExpr::Named(n) => registry.get(n).cloned(),
            TypeExpr::Inline(ct) => Some(ct.clone()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UseDecl {
    pub server: String,
    pub ty: TypeExpr,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Assignment {
    pub target: Var,
    pub term: Term,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rule {
    pub trigger: Formula,
    pub uses: Vec<UseDecl>,
    pub offer: Vec<Assignment>,
    pub constraint: Formula,
    pub pos: Pos,
    pub trigger_pos: Pos,
    pub constraint_pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PreferenceClause {
    pub direction: Direction,
    pub params: Vec<Var>,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Policy {
    pub name: String,
    pub serves: TypeExpr,
    pub preferences: Vec<PreferenceClause>,
    pub rules: Vec<Rule>,
    pub serves_pos: Pos,
}

impl Policy {
    fn listed(&self, direction: Direction) -> Vec<Var> {
        self.preferences.iter().filter(|c| c.direction == direction).flat_map(|c| c.params.iter().cloned()).collect()
    }

    pub fn minimize(&self) -> Vec<Var> {
        self.listed(Direction::Minimize)
    }

    pub fn maximize(&self) -> Vec<Var> {
        self.listed(Direction::Maximize)
    }
}

// ---------------------------------------------------------------------------
// parsing

impl Parser {
    fn pos(&self) -> Pos {
        let t = self.token();
        Pos { line: t.line, column: t.column }
    }

    fn field(&mut self, kw: &str) -> Result<Pos, ParseError> {
        let pos = self.pos();
        match self.peek() {
            Tok::Ident(s) if s == kw => {
                self.bump();
            }
            _ => return Err(self.unexpected(&format!("`{kw}:`"))),
        }
        self.expect_sym(":")?;
        Ok(pos)
    }

    fn at_field(&self, kw: &str) -> bool {
        self.at_keyword(kw) && matches!(self.peek_at(1), Tok::Sym(":"))
    }

    fn type_expr(&mut self) -> Result<TypeExpr, ParseError> {
        if self.at_sym("{") {
            let (params, constraint) = self.config_type()?;
            Ok(TypeExpr::Inline(ConfigType { name: None, params, constraint }))
        } else {
            Ok(TypeExpr::Named(self.hyphenated_ident()?))
        }
    }

    /// `[ item, item, ... ]` with an optional trailing comma.
    fn list<T>(
        &mut self,
        open: &str,
        close: &'static str,
        mut item: impl FnMut(&mut Parser) -> Result<T, ParseError>,
    ) -> Result<Vec<T>, ParseError> {
        self.expect_sym(open)?;
        let mut out = Vec::new();
        while !self.at_sym(close) {
            out.push(item(self)?);
            if !self.eat_sym(",") {
                break;
            }
        }
        self.expect_sym(close)?;
        Ok(out)
    }

    fn rule(&mut self) -> Result<Rule, ParseError> {
        let pos = self.pos();
        self.expect_sym("{")?;
        let trigger_pos = self.field("trigger")?;
        let trigger = self.formula()?;
        self.eat_sym(",");
        self.field("uses")?;
        let uses = self.list("[", "]", |p| {
            let pos = p.pos();
            let server = p.ident()?;
            p.expect_sym(":")?;
            Ok(UseDecl { server, ty: p.type_expr()?, pos })
        })?;
        self.eat_sym(",");
        self.field("offer")?;
        let close = if self.at_sym("[") { "]" } else { "}" };
        let open = if close == "]" { "[" } else { "{" };
        let offer = self.list(open, close, |p| {
            let pos = p.pos();
            let target = p.var()?;
            p.expect_sym(":=")?;
            Ok(Assignment { target, term: p.term()?, pos })
        })?;
        self.eat_sym(",");
        let constraint_pos = self.field("constraint")?;
        let constraint = self.formula()?;
        self.eat_sym(",");
        self.expect_sym("}")?;
        Ok(Rule { trigger, uses, offer, constraint, pos, trigger_pos, constraint_pos })
    }

    fn policy(&mut self) -> Result<Policy, ParseError> {
        self.expect_keyword("policy")?;
        let name = self.hyphenated_ident()?;
        self.expect_sym("{")?;
        let serves_pos = self.field("serves")?;
        let serves = self.type_expr()?;
        self.eat_sym(",");
        let mut preferences = Vec::new();
        loop {
            let direction = if self.at_field("minimize") {
                Direction::Minimize
            } else if self.at_field("maximize") {
                Direction::Maximize
            } else {
                break;
            };
            let pos = self.pos();
            self.bump();
            self.bump();
            let params = self.list("[", "]", Parser::var)?;
            self.eat_sym(",");
            preferences.push(PreferenceClause { direction, params, pos });
        }
        self.field("rules")?;
        let rules_pos = self.pos();
        let rules = self.list("[", "]", Parser::rule)?;
        if rules.is_empty() {
            return Err(ParseError {
                line: rules_pos.line,
                column: rules_pos.column,
                message: "a policy needs at least one rule".into(),
            });
        }
        self.eat_sym(",");
        self.expect_sym("}")?;
        Ok(Policy { name, serves, preferences, rules, serves_pos })
    }
}

pub fn parse_policy(src: &str) -> Result<Policy, ParseError> {
    let mut p = Parser::new(src)?;
    let policy = p.policy()?;
    p.expect_eof()?;
    Ok(policy)
}

// ---------------------------------------------------------------------------
// printing

impl fmt::Display for TypeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeExpr::Named(n) => f.write_str(n),
            TypeExpr::Inline(ct) => write!(f, "{ct}"),
        }
    }
}

fn comma_list<T>(items: &[T], show: impl Fn(&T) -> String) -> String {
    items.iter().map(show).collect::<Vec<_>>().join(", ")
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "policy {} {{", self.name)?;
        writeln!(f, "  serves: {}", self.serves)?;
        for c in &self.preferences {
            let kw = match c.direction {
                Direction::Minimize => "minimize",
                Direction::Maximize => "maximize",
            };
            writeln!(f, "  {kw}: [{}]", comma_list(&c.params, Var::to_string))?;
        }
        writeln!(f, "  rules: [")?;
        for r in &self.rules {
            writeln!(f, "    {{ trigger: {},", r.trigger)?;
            writeln!(f, "      uses: [{}],", comma_list(&r.uses, |u| format!("{}: {}", u.server, u.ty)))?;
            writeln!(f, "      offer: {{ {} }},", comma_list(&r.offer, |a| format!("{} := {}", a.target, a.term)))?;
            writeln!(f, "      constraint: {} }},", r.constraint)?;
        }
        writeln!(f, "  ]")?;
        write!(f, "}}")
    }
}

// ---------------------------------------------------------------------------
// validation

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub code: &'static str,
    pub message: String,
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: [{}] {}", self.line, self.column, self.code, self.message)
    }
}

fn diag(code: &'static str, pos: Pos, message: String) -> Diagnostic {
    Diagnostic { code, message, line: pos.line, column: pos.column }
}

fn resolve_checked(
    te: &TypeExpr,
    registry: &TypeRegistry,
    pos: Pos,
    out: &mut Vec<Diagnostic>,
) -> Option<ConfigType> {
    match te.resolve(registry) {
        None => {
            out.push(diag("unknown-type", pos, format!("no configuration type named `{te}`")));
            None
        }
        Some(ct) => match ct.check(&Qe::default()) {
            Ok(()) => Some(ct),
            Err(e) => {
                out.push(diag("invalid-type", pos, format!("configuration type `{te}`: {e}")));
                None
            }
        },
    }
}

fn outside<'a>(vars: impl IntoIterator<Item = &'a Var>, allowed: &BTreeSet<Var>) -> Vec<String> {
    vars.into_iter().filter(|v| !allowed.contains(v)).map(Var::to_string).collect()
}

/// Every violated well-formedness condition; empty if the policy is valid.
pub fn validate(p: &Policy, registry: &TypeRegistry) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let served = resolve_checked(&p.serves, registry, p.serves_pos, &mut out);
    let lang = served.as_ref().map(ConfigType::lang);

    let mut seen_pref: BTreeMap<&Var, Direction> = BTreeMap::new();
    for clause in &p.preferences {
        for v in &clause.params {
            if let Some(lang) = &lang {
                if !lang.contains(v) {
                    out.push(diag("preference-scope", clause.pos, format!("`{v}` is not a parameter of the served type")));
                }
            }
            if let Some(prev) = seen_pref.insert(v, clause.direction) {
                let message = if prev == clause.direction {
                    format!("`{v}` is listed twice")
                } else {
                    format!("`{v}` is both minimized and maximized")
                };
                out.push(diag("preference-conflict", clause.pos, message));
            }
        }
    }

    for rule in &p.rules {
        let mut servers: BTreeMap<&str, Option<BTreeSet<Var>>> = BTreeMap::new();
        for u in &rule.uses {
            let sub = resolve_checked(&u.ty, registry, u.pos, &mut out);
            let sub_lang = sub.and_then(|ct| match ct.prefix_params(&u.server) {
                Ok(p) => Some(p.lang()),
                Err(e) => {
                    out.push(diag("invalid-type", u.pos, e.to_string()));
                    None
                }
            });
            if servers.insert(&u.server, sub_lang).is_some() {
                out.push(diag("duplicate-server", u.pos, format!("server `{}` is used twice", u.server)));
            }
        }
        let sub_vars: Option<BTreeSet<Var>> = servers
            .values()
            .try_fold(BTreeSet::new(), |mut acc, l| {
                acc.extend(l.as_ref()?.iter().cloned());
                Some(acc)
            });

        let unknown_servers = |vars: &BTreeSet<Var>, pos: Pos, out: &mut Vec<Diagnostic>| {
            for v in vars {
                if let Some(prefix) = &v.prefix {
                    if !servers.contains_key(prefix.as_str()) {
                        out.push(diag("unknown-server", pos, format!("`{v}` refers to server `{prefix}`, which the rule does not use")));
                    }
                }
            }
        };

        if let Some(lang) = &lang {
            let bad = outside(&rule.trigger.free_vars(), lang);
            if !bad.is_empty() {
                out.push(diag(
                    "trigger-scope",
                    rule.trigger_pos,
                    format!("trigger mentions {} outside the served type", bad.join(", ")),
                ));
            }
        }

        let mut assigned = BTreeSet::new();
        for a in &rule.offer {
            if let Some(lang) = &lang {
                if !lang.contains(&a.target) {
                    out.push(diag("assign-target", a.pos, format!("`{}` is not a parameter of the served type", a.target)));
                }
            }
            if !assigned.insert(&a.target) {
                out.push(diag("assign-duplicate", a.pos, format!("`{}` is assigned more than once", a.target)));
            }
            let mut vars = BTreeSet::new();
            a.term.vars(&mut vars);
            unknown_servers(&vars, a.pos, &mut out);
            if let Some(sub_vars) = &sub_vars {
                let bad: Vec<String> = vars
                    .iter()
                    .filter(|v| !sub_vars.contains(v) && v.prefix.as_ref().is_none_or(|s| servers.contains_key(s.as_str())))
                    .map(Var::to_string)
                    .collect();
                if !bad.is_empty() {
                    out.push(diag(
                        "assign-scope",
                        a.pos,
                        format!("assigned term mentions {}, which are not parameters of used servers", bad.join(", ")),
                    ));
                }
            }
        }

        let cvars = rule.constraint.free_vars();
        unknown_servers(&cvars, rule.constraint_pos, &mut out);
        if let (Some(lang), Some(sub_vars)) = (&lang, &sub_vars) {
            let allowed: BTreeSet<Var> = lang.union(sub_vars).cloned().collect();
            let bad: Vec<String> = cvars
                .iter()
                .filter(|v| !allowed.contains(v) && v.prefix.as_ref().is_none_or(|s| servers.contains_key(s.as_str())))
                .map(Var::to_string)
                .collect();
            if !bad.is_empty() {
                out.push(diag(
                    "constraint-scope",
                    rule.constraint_pos,
                    format!("constraint mentions {} outside the rule's parameters", bad.join(", ")),
                ));
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// core form

/// A rule in core form. `uses` holds unprefixed sub-types; `psi` is over the
/// served parameters and the server-prefixed sub-parameters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoreRule {
    pub ct: ConfigType,
    pub trigger: Formula,
    pub uses: Vec<(String, ConfigType)>,
    pub psi: Formula,
}

impl CoreRule {
    pub fn prefixed_lang(&self, i: usize) -> BTreeSet<Var> {
        let (server, ct) = &self.uses[i];
        ct.lang().into_iter().map(|v| v.with_prefix(server)).collect()
    }

    /// All parameters the rule relates: served plus prefixed sub-parameters.
    pub fn all_vars(&self) -> BTreeSet<Var> {
        let mut out = self.ct.lang();
        for i in 0..self.uses.len() {
            out.extend(self.prefixed_lang(i));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CorePolicy {
    Rule(CoreRule),
    Compose(Box<CorePolicy>, Box<CorePolicy>),
}

impl CorePolicy {
    pub fn compose(a: CorePolicy, b: CorePolicy) -> CorePolicy {
        CorePolicy::Compose(Box::new(a), Box::new(b))
    }

    pub fn rules(&self) -> Vec<&CoreRule> {
        match self {
            CorePolicy::Rule(r) => vec![r],
            CorePolicy::Compose(a, b) => {
                let mut out = a.rules();
                out.extend(b.rules());
                out
            }
        }
    }

    pub fn ct(&self) -> &ConfigType {
        match self {
            CorePolicy::Rule(r) => &r.ct,
            CorePolicy::Compose(a, _) => a.ct(),
        }
    }

    /// Server identifiers with their expected types, in order of first use.
    pub fn servers(&self) -> Vec<(String, ConfigType)> {
        let mut out: Vec<(String, ConfigType)> = Vec::new();
        for r in self.rules() {
            for (s, ct) in &r.uses {
                if !out.iter().any(|(t, _)| t == s) {
                    out.push((s.clone(), ct.clone()));
                }
            }
        }
        out
    }
}

/// A compiled policy: the core form plus preferences in declaration order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompiledPolicy {
    pub name: String,
    pub core: CorePolicy,
    pub preferences: Vec<(Var, Direction)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolicyError {
    #[error("{0}")]
    Parse(#[from] ParseError),
    #[error("policy is invalid: {}", .0.iter().map(Diagnostic::to_string).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Diagnostic>),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Resource(#[from] QeError),
}

/// Translates a validated policy into its core form. Assignments become
/// equalities, and the served and sub-type constraints join the rule
/// constraint in `psi`. Quantifiers in triggers and constraints are
/// eliminated.
pub fn to_core(p: &Policy, registry: &TypeRegistry, qe: &Qe) -> Result<CorePolicy, PolicyError> {
    let diags = validate(p, registry);
    if !diags.is_empty() {
        return Err(PolicyError::Invalid(diags));
    }
    let ct = p.serves.resolve(registry).expect("validated");
    let mut rules = Vec::new();
    for rule in &p.rules {
        let uses: Vec<(String, ConfigType)> =
            rule.uses.iter().map(|u| (u.server.clone(), u.ty.resolve(registry).expect("validated"))).collect();
        let mut parts = Vec::new();
        let constraint = qe.qe(&rule.constraint)?;
        if !constraint.is_true() {
            parts.push(constraint);
        }
        for a in &rule.offer {
            parts.push(Formula::atom(Term::Var(a.target.clone()), Rel::Eq, a.term.clone()));
        }
        parts.push(ct.constraint.clone());
        for (server, sub) in &uses {
            parts.push(sub.prefix_params(server)?.constraint);
        }
        parts.retain(|f| !f.is_true());
        rules.push(CoreRule { ct: ct.clone(), trigger: qe.qe(&rule.trigger)?, uses, psi: Formula::conj(parts) });
    }
    let mut iter = rules.into_iter().rev().map(CorePolicy::Rule);
    let last = iter.next().expect("at least one rule");
    Ok(iter.fold(last, |acc, r| CorePolicy::compose(r, acc)))
}

pub fn compile(p: &Policy, registry: &TypeRegistry, qe: &Qe) -> Result<CompiledPolicy, PolicyError> {
    let core = to_core(p, registry, qe)?;
    let preferences = p
        .preferences
        .iter()
        .flat_map(|c| c.params.iter().map(move |v| (v.clone(), c.direction)))
        .collect();
    Ok(CompiledPolicy { name: p.name.clone(), core, preferences })
}

/// Parses, validates and compiles policy text.
pub fn compile_text(src: &str, registry: &TypeRegistry, qe: &Qe) -> Result<CompiledPolicy, PolicyError> {
    compile(&parse_policy(src)?, registry, qe)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_registry;
    use crate::syntax::{parse_formula, parse_term};

    pub(crate) const BROKER: &str = "policy storage-brokering {
  serves: storage
  rules: [
   { trigger: true,
     uses: [s1:storage, s2:storage],
     offer: { capacity := s1.capacity + s2.capacity,
              price := 1.1*(s1.price + s2.price) },
     constraint:true},
  ]
}";

    fn registry() -> TypeRegistry {
        parse_registry("storage = {capacity: decimal, price: decimal; capacity >= 0 && price >= 0}").unwrap()
    }

    fn f(s: &str) -> Formula {
        parse_formula(s).unwrap()
    }

    fn codes(src: &str) -> Vec<&'static str> {
        validate(&parse_policy(src).unwrap(), &registry()).into_iter().map(|d| d.code).collect()
    }

    #[test]
    fn parses_broker_policy() {
        let p = parse_policy(BROKER).unwrap();
        assert_eq!(p.name, "storage-brokering");
        assert_eq!(p.serves, TypeExpr::Named("storage".into()));
        assert_eq!(p.rules.len(), 1);
        let r = &p.rules[0];
        assert!(r.trigger.is_true());
        assert_eq!(r.uses.iter().map(|u| u.server.as_str()).collect::<Vec<_>>(), ["s1", "s2"]);
        assert_eq!(r.offer[1].target, Var::new("price"));
        assert_eq!(r.offer[1].term, parse_term("11/10 * (s1.price + s2.price)").unwrap());
        assert_eq!(r.uses[0].pos, Pos { line: 5, column: 13 });
        assert_eq!((r.uses[1].pos.line, r.uses[1].pos.column), (5, 25));
    }

    #[test]
    fn rejects_empty_rules() {
        let err = parse_policy("policy p { serves: storage rules: [] }").unwrap_err();
        assert!(err.message.contains("at least one rule"));
    }

    #[test]
    fn parses_preferences() {
        let src = BROKER.replace("serves: storage", "serves: storage\n  minimize: [price]");
        let p = parse_policy(&src).unwrap();
        assert_eq!(p.minimize(), vec![Var::new("price")]);
        assert!(p.maximize().is_empty());
    }

    #[test]
    fn inline_types_and_bracketed_offers() {
        let src = "policy p { serves: {x: decimal; x >= 0}, rules: [
            { trigger: x <= 5, uses: [a: {y: decimal; true}], offer: [x := 2*a.y], constraint: a.y < 1 }
        ] }";
        let p = parse_policy(src).unwrap();
        assert!(validate(&p, &TypeRegistry::new()).is_empty());
        assert_eq!(p.rules[0].offer.len(), 1);
    }

    #[test]
    fn print_round_trip() {
        let src = BROKER.replace("serves: storage", "serves: storage\n  maximize: [capacity]\n  minimize: [price]");
        let p = parse_policy(&src).unwrap();
        assert_eq!(parse_policy(&p.to_string()).unwrap(), p);
    }

    #[test]
    fn validation() {
        assert!(codes(BROKER).is_empty());
        assert_eq!(codes(&BROKER.replace("trigger: true", "trigger: speed > 1")), ["trigger-scope"]);
        assert_eq!(
            codes(&BROKER.replace("capacity := s1.capacity + s2.capacity", "capacity := s3.capacity")),
            ["unknown-server"]
        );
        assert_eq!(codes(&BROKER.replace("uses: [s1:storage", "uses: [s1:store")), ["unknown-type"]);
        assert_eq!(codes(&BROKER.replace("capacity :=", "speed :=")), ["assign-target"]);
        assert_eq!(codes(&BROKER.replace("capacity :=", "price :=")), ["assign-duplicate"]);
        assert_eq!(codes(&BROKER.replace("s1.capacity +", "capacity +")), ["assign-scope"]);
        assert_eq!(codes(&BROKER.replace("constraint:true", "constraint: s1.speed = 1")), ["constraint-scope"]);
        assert_eq!(codes(&BROKER.replace("s2:storage", "s1:storage")), ["duplicate-server", "unknown-server", "unknown-server"]);
        assert_eq!(
            codes(&BROKER.replace("serves: storage", "serves: storage\n minimize: [price, speed]\n maximize: [price]")),
            ["preference-scope", "preference-conflict"]
        );
    }

    #[test]
    fn diagnostics_carry_positions() {
        let d = validate(&parse_policy(&BROKER.replace("trigger: true", "trigger: speed > 1")).unwrap(), &registry());
        assert_eq!((d[0].line, d[0].column), (4, 6));
    }

    #[test]
    fn core_translation() {
        let core = to_core(&parse_policy(BROKER).unwrap(), &registry(), &Qe::default()).unwrap();
        let CorePolicy::Rule(rule) = &core else { panic!("expected a single rule") };
        assert!(rule.trigger.is_true());
        assert_eq!(rule.uses.len(), 2);
        let expected = f("capacity = s1.capacity + s2.capacity && price = 11/10 * (s1.price + s2.price) \
             && capacity >= 0 && price >= 0 && s1.capacity >= 0 && s1.price >= 0 \
             && s2.capacity >= 0 && s2.price >= 0");
        assert!(Qe::default().equivalent(&rule.psi, &expected).unwrap());
        assert!(rule.psi.is_quantifier_free());
    }

    #[test]
    fn core_translation_composes_rules() {
        let two = BROKER.replace("constraint:true},", "constraint:true}, { trigger: capacity <= 10, uses: [], offer: {}, constraint: price = 1 },");
        let core = to_core(&parse_policy(&two).unwrap(), &registry(), &Qe::default()).unwrap();
        assert!(matches!(&core, CorePolicy::Compose(a, b)
            if matches!(**a, CorePolicy::Rule(_)) && matches!(**b, CorePolicy::Rule(_))));
        assert_eq!(core.rules().len(), 2);
        assert!(core.rules()[1].uses.is_empty());
    }

    #[test]
    fn core_keeps_rule_constraint() {
        let src = BROKER.replace("constraint:true", "constraint: s1.capacity = s2.capacity");
        let core = to_core(&parse_policy(&src).unwrap(), &registry(), &Qe::default()).unwrap();
        let psi = &core.rules()[0].psi;
        assert!(Qe::default().entails(psi, &f("s1.capacity = s2.capacity")).unwrap());
    }

    #[test]
    fn compile_records_preferences_in_order() {
        let src = BROKER.replace("serves: storage", "serves: storage\n  maximize: [capacity]\n  minimize: [price]");
        let c = compile_text(&src, &registry(), &Qe::default()).unwrap();
        assert_eq!(
            c.preferences,
            vec![(Var::new("capacity"), Direction::Maximize), (Var::new("price"), Direction::Minimize)]
        );
    }
}
