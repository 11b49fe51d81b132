use std::collections::BTreeSet;

use super::{sig, AttackId, AttackMatch, SignatureId};

const TRANSFER_GUARDED: &[SignatureId] = &[sig(11), sig(12), sig(13), sig(14)];
const TRANSFER_PAIRED: &[SignatureId] = &[sig(2), sig(3), sig(4)];
const ICC_PAIRED: &[SignatureId] = &[sig(19), sig(20)];

/// The attack rules: each is a conjunction of clauses, each clause a
/// disjunction of signatures.
const RULES: [&[&[SignatureId]]; 6] = [
    &[&[sig(1)], TRANSFER_PAIRED, &[sig(5)]],
    &[TRANSFER_PAIRED, &[sig(5)], &[sig(6)], &[sig(7), sig(8)], &[sig(9)]],
    &[&[sig(5)], &[sig(10)], TRANSFER_GUARDED, &[sig(15)]],
    &[&[sig(5)], TRANSFER_GUARDED, &[sig(16)], &[sig(17), sig(18)]],
    &[&[sig(5)], TRANSFER_GUARDED, ICC_PAIRED, &[sig(21)]],
    &[&[sig(5)], TRANSFER_GUARDED, ICC_PAIRED, &[sig(21)], &[sig(22)]],
];

/// Clauses of the rule for `attack`.
pub fn attack_rule(attack: AttackId) -> &'static [&'static [SignatureId]] {
    RULES[attack.number() as usize - 1]
}

/// Whether the rule for `attack` holds for the fired set.
pub fn rule_holds(attack: AttackId, fired: &BTreeSet<SignatureId>) -> bool {
    attack_rule(attack).iter().all(|clause| clause.iter().any(|s| fired.contains(s)))
}

/// Every attack whose rule is satisfied, with the contributing signatures of
/// each clause.
pub fn evaluate_cnf(fired: impl IntoIterator<Item = SignatureId>) -> Vec<AttackMatch> {
    let fired: BTreeSet<SignatureId> = fired.into_iter().collect();
    AttackId::all()
        .filter(|&a| rule_holds(a, &fired))
        .map(|attack_id| AttackMatch {
            attack_id,
            satisfied_clauses: attack_rule(attack_id)
                .iter()
                .map(|clause| clause.iter().copied().filter(|s| fired.contains(s)).collect())
                .collect(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(ns: &[u8]) -> Vec<SignatureId> {
        ns.iter().map(|&n| sig(n)).collect()
    }

    fn matched(ns: &[u8]) -> Vec<u8> {
        evaluate_cnf(ids(ns)).iter().map(|m| m.attack_id.number()).collect()
    }

    #[test]
    fn documented_cases() {
        assert_eq!(matched(&[1, 2, 5]), [1]);
        assert_eq!(matched(&[5, 11, 19, 21]), [5]);
        assert_eq!(matched(&[5, 11, 19, 21, 22]), [5, 6]);
        assert!(matched(&[]).is_empty());
        assert_eq!(matched(&[4, 5, 6, 8, 9]), [2]);
        assert_eq!(matched(&[5, 10, 13, 15]), [3]);
        assert_eq!(matched(&[5, 14, 16, 18]), [4]);
    }

    #[test]
    fn witnesses_cover_every_clause() {
        let m = &evaluate_cnf(ids(&[5, 11, 12, 19, 21]))[0];
        assert_eq!(m.satisfied_clauses, vec![ids(&[5]), ids(&[11, 12]), ids(&[19]), ids(&[21])]);
    }
}
