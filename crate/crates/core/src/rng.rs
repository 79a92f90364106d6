//! Seed derivation and shared random draws.
//!
//! Every random decision in a pipeline hangs off one master seed. Each
//! stage gets its own ChaCha stream keyed by `(master, stage name, index)`,
//! so adding a stage never perturbs the draws of another.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{Graph, NodeId, Pair};

pub type StageRng = ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(FNV_PRIME)
    })
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for the `index`-th use of `stage` under `master`.
pub fn derive_seed(master: u64, stage: &str, index: u64) -> u64 {
    splitmix64(splitmix64(master ^ fnv1a(stage.as_bytes())) ^ splitmix64(index))
}

pub fn seeded_rng(seed: u64) -> StageRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn stage_rng(master: u64, stage: &str, index: u64) -> StageRng {
    seeded_rng(derive_seed(master, stage, index))
}

/// Uniform unordered pair of distinct nodes that is not an edge of `graph`.
///
/// Caller guarantees such a pair exists; rejection sampling is efficient
/// only while the graph is sparse.
pub fn random_non_edge<R: Rng + ?Sized>(graph: &Graph, rng: &mut R) -> Pair {
    let n = graph.node_count() as u32;
    loop {
        let u = NodeId(rng.gen_range(0..n));
        let v = NodeId(rng.gen_range(0..n));
        if u != v && !graph.has_edge(u, v) {
            return Pair::new(u, v);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stages_get_distinct_streams() {
        let a = derive_seed(7, "train", 0);
        assert_eq!(a, derive_seed(7, "train", 0));
        assert_ne!(a, derive_seed(7, "sample", 0));
        assert_ne!(a, derive_seed(7, "train", 1));
        assert_ne!(a, derive_seed(8, "train", 0));
    }

    #[test]
    fn non_edge_is_never_an_edge() {
        let g = Graph::from_labeled_edges([("a", "b"), ("b", "c"), ("c", "d")]);
        let mut rng = seeded_rng(3);
        for _ in 0..200 {
            let p = random_non_edge(&g, &mut rng);
            assert!(!p.is_loop());
            assert!(!g.has_edge(p.lo(), p.hi()));
        }
    }
}
