//! Extended offers and the tokens recording the sub-offers behind them.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::sync::Mutex;

use hmac::{Hmac, Mac};
use rand::RngCore;
use sha2::Sha256;

use crate::config::ConfigType;
use crate::formula::{Formula, Var};
use crate::qe::{Direction, Qe, QeError};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtendedOffer {
    pub formula: Formula,
    pub token: Token,
}

impl ExtendedOffer {
    pub fn opaque(formula: Formula) -> Self {
        ExtendedOffer { formula, token: Token::Opaque(Vec::new()) }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Token {
    /// Issued elsewhere; its structure is not visible.
    Opaque(Vec<u8>),
    Rule(RuleOffer),
    /// The offers of the alternatives of a composed policy.
    Sum(Vec<RuleOffer>),
    /// `base` strengthened by the preferences, applied in order.
    Preferred { base: Box<ExtendedOffer>, preferences: Vec<(Var, Direction)> },
}

/// The offer of one rule, with the rule's condition and every sub-offer it
/// received. Sub-offer formulas are over the unprefixed sub-type.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RuleOffer {
    pub formula: Formula,
    pub ct: ConfigType,
    pub condition: Formula,
    pub subs: Vec<SubOffer>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubOffer {
    pub server: String,
    pub ct: ConfigType,
    pub offer: ExtendedOffer,
}

impl RuleOffer {
    /// The offer of a rule that did not produce one.
    pub fn refused(ct: &ConfigType) -> Self {
        RuleOffer { formula: Formula::falsity(), ct: ct.clone(), condition: Formula::falsity(), subs: Vec::new() }
    }

    /// Condition conjoined with every sub-offer, over prefixed variables.
    pub fn support(&self) -> Formula {
        let mut parts = vec![self.condition.clone()];
        parts.extend(self.subs.iter().map(|s| s.offer.formula.prefix_vars(&s.server)));
        Formula::conj(parts)
    }
}

fn check_rule(formula: &Formula, ro: &RuleOffer, qe: &Qe) -> Result<bool, QeError> {
    if !qe.equivalent(formula, &ro.formula)? {
        return Ok(false);
    }
    let support = ro.support();
    let lang = ro.ct.lang();
    let hidden: BTreeSet<Var> = support.free_vars().into_iter().filter(|v| !lang.contains(v)).collect();
    if !qe.equivalent(formula, &qe.exists(&hidden, &support)?)? {
        return Ok(false);
    }
    for s in &ro.subs {
        if !validate_token(&s.offer, qe)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Checks that every recorded offer is the disjunction of its alternatives
/// and that every rule offer is the projection of its condition and
/// sub-offers. Opaque tokens pass.
pub fn validate_token(eo: &ExtendedOffer, qe: &Qe) -> Result<bool, QeError> {
    match &eo.token {
        Token::Opaque(_) => Ok(true),
        Token::Rule(ro) => check_rule(&eo.formula, ro, qe),
        Token::Sum(branches) => {
            let disj = Formula::disj(branches.iter().map(|b| b.formula.clone()));
            if !qe.equivalent(&eo.formula, &disj)? {
                return Ok(false);
            }
            for b in branches {
                if !check_rule(&b.formula, b, qe)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        Token::Preferred { base, preferences } => {
            let mut f = base.formula.clone();
            for (x, d) in preferences {
                f = qe.apply_preference(&f, x, *d)?;
            }
            Ok(qe.equivalent(&eo.formula, &f)? && validate_token(base, qe)?)
        }
    }
}

/// Deterministic text form of an extended offer.
pub fn canonical(eo: &ExtendedOffer) -> String {
    let mut out = String::new();
    write_offer(&mut out, eo);
    out
}

fn write_offer(out: &mut String, eo: &ExtendedOffer) {
    let _ = write!(out, "(offer [{}] ", eo.formula);
    match &eo.token {
        Token::Opaque(bytes) => {
            let _ = write!(out, "(opaque {})", hex::encode(bytes));
        }
        Token::Rule(ro) => write_rule(out, ro),
        Token::Sum(branches) => {
            out.push_str("(sum");
            for b in branches {
                out.push(' ');
                write_rule(out, b);
            }
            out.push(')');
        }
        Token::Preferred { base, preferences } => {
            out.push_str("(preferred ");
            write_offer(out, base);
            for (x, d) in preferences {
                let _ = write!(out, " ({d:?} {x})");
            }
            out.push(')');
        }
    }
    out.push(')');
}

fn write_rule(out: &mut String, ro: &RuleOffer) {
    let _ = write!(out, "(rule [{}] [{}] [{}]", ro.formula, ro.ct, ro.condition);
    for s in &ro.subs {
        let _ = write!(out, " (sub {} [{}] ", s.server, s.ct);
        write_offer(out, &s.offer);
        out.push(')');
    }
    out.push(')');
}

type HmacSha256 = Hmac<Sha256>;

const NONCE_LEN: usize = 16;

/// Issues authenticated opaque blobs for extended offers and remembers the
/// offers behind them.
pub struct TokenStore {
    key: Vec<u8>,
    issued: Mutex<HashMap<Vec<u8>, ExtendedOffer>>,
}

impl TokenStore {
    pub fn new(key: Vec<u8>) -> Self {
        TokenStore { key, issued: Mutex::new(HashMap::new()) }
    }

    /// A store with a fresh random key.
    pub fn random() -> Self {
        let mut key = vec![0u8; 32];
        rand::thread_rng().fill_bytes(&mut key);
        Self::new(key)
    }

    fn mac(&self, nonce: &[u8], eo: &ExtendedOffer) -> Vec<u8> {
        let mut mac = HmacSha256::new_from_slice(&self.key).expect("HMAC accepts keys of any length");
        mac.update(nonce);
        mac.update(canonical(eo).as_bytes());
        mac.finalize().into_bytes().to_vec()
    }

    pub fn issue(&self, eo: &ExtendedOffer) -> Vec<u8> {
        let mut nonce = [0u8; NONCE_LEN];
        rand::thread_rng().fill_bytes(&mut nonce);
        let mut blob = nonce.to_vec();
        blob.extend(self.mac(&nonce, eo));
        self.issued.lock().expect("token store poisoned").insert(blob.clone(), eo.clone());
        blob
    }

    /// The offer a blob was issued for, if it was issued here and its
    /// authentication code matches.
    pub fn lookup(&self, blob: &[u8]) -> Option<ExtendedOffer> {
        if blob.len() <= NONCE_LEN {
            return None;
        }
        let eo = self.issued.lock().expect("token store poisoned").get(blob).cloned()?;
        let (nonce, tag) = blob.split_at(NONCE_LEN);
        let mut mac = HmacSha256::new_from_slice(&self.key).expect("HMAC accepts keys of any length");
        mac.update(nonce);
        mac.update(canonical(&eo).as_bytes());
        mac.verify_slice(tag).ok()?;
        Some(eo)
    }

    pub fn len(&self) -> usize {
        self.issued.lock().expect("token store poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl std::fmt::Debug for TokenStore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TokenStore").field("issued", &self.len()).finish_non_exhaustive()
    }
}
