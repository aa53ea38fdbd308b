use super::{evaluate_restriction, Restriction};
use crate::index::{DocSet, IndexShard};
use crate::model::CATEGORY;

/// Exact set of shard ordinals whose attributes satisfy `ast`.
///
/// Pairs come from `attr:` postings, comparisons from a forward-index scan,
/// and `NOT` complements within the shard. Category is not posted: a category
/// pair matches the whole shard or nothing.
pub fn resolve_candidates(ast: &Restriction, shard: &IndexShard) -> DocSet {
    let n = shard.len();
    match ast {
        Restriction::MatchAll => DocSet::all(n),
        Restriction::Pair { name, value } if name == CATEGORY => {
            if value == shard.category() {
                DocSet::all(n)
            } else {
                DocSet::empty(n)
            }
        }
        Restriction::Pair { name, value } => DocSet::from_ordinals(n, shard.attr_posting(name, value)),
        Restriction::Compare { .. } => {
            let fwd = shard.forward();
            let mut set = DocSet::empty(n);
            for ordinal in 0..n as u32 {
                if evaluate_restriction(ast, fwd.attributes(ordinal)) {
                    set.insert(ordinal);
                }
            }
            set
        }
        Restriction::And(children) => {
            let mut iter = children.iter();
            let mut set = iter.next().map_or_else(|| DocSet::all(n), |c| resolve_candidates(c, shard));
            for child in iter {
                if set.is_empty() {
                    break;
                }
                set.intersect_with(&resolve_candidates(child, shard));
            }
            set
        }
        Restriction::Or(children) => {
            let mut set = DocSet::empty(n);
            for child in children {
                set.union_with(&resolve_candidates(child, shard));
            }
            set
        }
        Restriction::Not(child) => {
            let mut set = resolve_candidates(child, shard);
            set.complement();
            set
        }
    }
}
