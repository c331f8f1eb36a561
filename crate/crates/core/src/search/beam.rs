use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{
    param_bool, param_branching, param_usize, rank, Branching, Node, Registry, SearchAlgorithm, SearchCtx, SearchError,
};

/// Level-synchronous beam search. Children of the whole beam are interleaved
/// round-robin over parents, stably sorted by score (unscored last), and the
/// first `beam_width` survive.
struct Beam {
    width: usize,
    default: Branching,
    shuffle: Option<ChaCha8Rng>,
}

impl SearchAlgorithm for Beam {
    fn run(&mut self, root: Node, ctx: &mut SearchCtx) -> Result<(), SearchError> {
        let mut beam = vec![root];
        while !beam.is_empty() {
            let mut per_parent = Vec::with_capacity(beam.len());
            for node in &beam {
                ctx.collect(node);
                if !node.cp.is_running() {
                    continue;
                }
                if ctx.stopped() {
                    break;
                }
                let b = ctx.branching(node, self.default)?;
                per_parent.push(ctx.expand(node, b)?);
            }
            let mut level = interleave(per_parent);
            let Some(first) = level.first() else { break };
            ctx.flush(first)?;
            for n in &level {
                ctx.collect(n);
            }
            level.retain(|n| n.cp.is_running());
            if let Some(rng) = &mut self.shuffle {
                level.shuffle(rng);
            }
            let mut keyed: Vec<(f64, Node)> = level.into_iter().map(|n| (rank(n.cp.score()), n)).collect();
            keyed.sort_by(|a, b| b.0.total_cmp(&a.0));
            keyed.truncate(self.width);
            beam = keyed.into_iter().map(|(_, n)| n).collect();
            if ctx.stopped() {
                break;
            }
        }
        Ok(())
    }
}

/// First child of every parent, then every second child, and so on.
fn interleave(lists: Vec<Vec<Node>>) -> Vec<Node> {
    let longest = lists.iter().map(Vec::len).max().unwrap_or(0);
    let mut iters: Vec<_> = lists.into_iter().map(Vec::into_iter).collect();
    let mut out = Vec::new();
    for _ in 0..longest {
        out.extend(iters.iter_mut().filter_map(Iterator::next));
    }
    out
}

pub(super) fn register(r: &mut Registry) {
    r.register("beam", &["beam_width", "default_branching", "shuffle_ties", "seed"], |p| {
        let width = param_usize(p, "beam_width", 1)?;
        if width == 0 {
            return Err(SearchError::BadParam("`beam_width` must be at least 1".into()));
        }
        let shuffle = param_bool(p, "shuffle_ties", false)?
            .then(|| param_usize(p, "seed", 0).map(|s| ChaCha8Rng::seed_from_u64(s as u64)))
            .transpose()?;
        Ok(Box::new(Beam { width, default: param_branching(p, Branching::Fixed(1))?, shuffle })
            as Box<dyn SearchAlgorithm>)
    })
    .expect("builtin names are distinct");
}
