//! Majority-vote fusion and message tampering.

use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Message {
    /// The true warning, `+1`.
    True,
    /// The tampered warning, `-1`.
    False,
}

impl Message {
    pub fn sign(self) -> i32 {
        match self {
            Message::True => 1,
            Message::False => -1,
        }
    }

    pub fn from_sign(sign: i32) -> Option<Message> {
        match sign {
            1 => Some(Message::True),
            -1 => Some(Message::False),
            _ => None,
        }
    }

    pub fn negate(self) -> Message {
        match self {
            Message::True => Message::False,
            Message::False => Message::True,
        }
    }
}

/// Received copies, kept as counts so arrival order cannot matter.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct Inbox {
    pub true_count: u32,
    pub false_count: u32,
}

impl Inbox {
    pub fn receive(&mut self, message: Message) {
        match message {
            Message::True => self.true_count += 1,
            Message::False => self.false_count += 1,
        }
    }

    pub fn len(&self) -> u32 {
        self.true_count + self.false_count
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_tie(&self) -> bool {
        self.true_count == self.false_count
    }

    /// The strict majority, if there is one.
    pub fn majority(&self) -> Option<Message> {
        use std::cmp::Ordering::*;
        match self.true_count.cmp(&self.false_count) {
            Greater => Some(Message::True),
            Less => Some(Message::False),
            Equal => None,
        }
    }
}

/// Strict majority, or a fair coin on a tie (an empty inbox is a 0-0 tie).
/// The random source is only touched on ties.
pub fn majority_vote<R: Rng + ?Sized>(inbox: &Inbox, rng: &mut R) -> Message {
    inbox.majority().unwrap_or_else(|| {
        if rng.random_bool(0.5) {
            Message::True
        } else {
            Message::False
        }
    })
}

pub fn apply_malice(fused: Message, is_malicious: bool) -> Message {
    if is_malicious {
        fused.negate()
    } else {
        fused
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn inbox(t: u32, f: u32) -> Inbox {
        Inbox {
            true_count: t,
            false_count: f,
        }
    }

    #[test]
    fn strict_majorities() {
        let mut r = rng::stream(0, 0, 0);
        assert_eq!(majority_vote(&inbox(2, 1), &mut r), Message::True);
        assert_eq!(majority_vote(&inbox(0, 3), &mut r), Message::False);
    }

    #[test]
    fn malice_flips() {
        assert_eq!(apply_malice(Message::True, true), Message::False);
        assert_eq!(apply_malice(Message::True, false), Message::True);
        assert_eq!(apply_malice(Message::False, true), Message::True);
        for m in [Message::True, Message::False] {
            assert_eq!(apply_malice(apply_malice(m, true), true), m);
        }
    }

    #[test]
    fn ties_and_empty_inbox_are_fair() {
        for ib in [inbox(1, 1), inbox(0, 0)] {
            let mut r = rng::stream(11, 0, 0);
            let n = 100_000;
            let wins = (0..n)
                .filter(|_| majority_vote(&ib, &mut r) == Message::True)
                .count();
            let freq = wins as f64 / n as f64;
            assert!((freq - 0.5).abs() <= 0.01, "{freq}");
        }
    }

    #[test]
    fn receive_is_order_free() {
        let mut a = Inbox::default();
        let mut b = Inbox::default();
        for m in [Message::True, Message::False, Message::True] {
            a.receive(m);
        }
        for m in [Message::True, Message::True, Message::False] {
            b.receive(m);
        }
        assert_eq!(a, b);
        assert_eq!(a.len(), 3);
        assert!(!a.is_tie());
    }

    #[test]
    fn sign_round_trip() {
        assert_eq!(
            Message::from_sign(Message::True.sign()),
            Some(Message::True)
        );
        assert_eq!(
            Message::from_sign(Message::False.sign()),
            Some(Message::False)
        );
        assert_eq!(Message::from_sign(0), None);
    }
}
