//! Random protocol messages for codec testing.

use nego_core::random::{config_type, qf_formula};
use nego_core::{Formula, Invoice, Var};
use rand::Rng;

use crate::Message;

const CHARS: &[char] = &['a', 'z', 'Q', '0', '9', '-', '_', '/', ' ', '\t', '\n', '\r', '\\', '=', 'é', '→'];

/// A string over a palette that includes every character the codec escapes.
pub fn text(rng: &mut impl Rng, max_len: usize) -> String {
    let len = rng.gen_range(0..=max_len);
    (0..len).map(|_| CHARS[rng.gen_range(0..CHARS.len())]).collect()
}

fn formula(rng: &mut impl Rng) -> Formula {
    let vars = [Var::new("capacity"), Var::prefixed("s1", "price"), Var::new("x")];
    let atoms = rng.gen_range(1..=4);
    let f = qf_formula(rng, &vars, atoms, 6);
    if rng.gen_bool(0.1) {
        Formula::exists(Var::new("x"), f)
    } else {
        f
    }
}

fn token(rng: &mut impl Rng) -> Vec<u8> {
    let len = rng.gen_range(0..=48);
    (0..len).map(|_| rng.gen()).collect()
}

pub fn message(rng: &mut impl Rng) -> Message {
    let session = text(rng, 12);
    match rng.gen_range(0..8) {
        0 => Message::Init { session },
        1 => {
            let params = rng.gen_range(1..=3);
            let mut ct = config_type(rng, "t", params);
            ct.name = if rng.gen_bool(0.5) { Some(format!("type{}", rng.gen_range(0..100))) } else { None };
            Message::Terms { session, ct }
        }
        2 => Message::Query { session, query: formula(rng) },
        3 => Message::Offer { session, offer: formula(rng), token: token(rng) },
        4 => Message::Accept { session, acceptance: formula(rng), token: token(rng) },
        5 => {
            let subs = (0..rng.gen_range(0..4)).map(|_| (text(rng, 8), formula(rng))).collect();
            let invoice = Invoice { session: Some(session.clone()), accepted: formula(rng), token: token(rng), subs };
            Message::Invoice { session, invoice }
        }
        6 => Message::Reject { session, reason: text(rng, 30) },
        _ => Message::Terminate { session, reason: text(rng, 30) },
    }
}
