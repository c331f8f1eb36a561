use super::{
    param_branching, param_f64, param_str, param_usize, Branching, Node, Registry, SearchAlgorithm, SearchCtx,
    SearchError, Stepped,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ValueFn {
    /// Recorded score; unscored counts as 0.
    Score,
    /// 1 for a returned leaf, else 0.
    Returned,
}

struct TreeNode {
    node: Node,
    parent: Option<usize>,
    children: Vec<usize>,
    visits: u64,
    total: f64,
    attempts: usize,
    exhausted: bool,
    dead: bool,
}

/// UCT over sampled children: a node keeps sampling new children until its
/// branching budget or candidates run out, then selects the child with the
/// best `mean + c * sqrt(ln(N) / n)`. Values are backed up as running means.
struct Mcts {
    iterations: usize,
    c: f64,
    value_fn: ValueFn,
    default: Branching,
}

impl Mcts {
    fn value(&self, n: &Node) -> f64 {
        match self.value_fn {
            ValueFn::Score => n.cp.score().map_or(0.0, |s| s.as_f64()),
            ValueFn::Returned => f64::from(u8::from(n.cp.has_return_value())),
        }
    }

    fn uct(&self, tree: &[TreeNode], parent: usize) -> Option<usize> {
        let ln_n = (tree[parent].visits.max(1) as f64).ln();
        let mut best: Option<(usize, f64)> = None;
        for &ch in &tree[parent].children {
            let t = &tree[ch];
            if t.dead {
                continue;
            }
            let key = if t.visits == 0 {
                f64::INFINITY
            } else {
                t.total / t.visits as f64 + self.c * (ln_n / t.visits as f64).sqrt()
            };
            if best.is_none_or(|(_, k)| key > k) {
                best = Some((ch, key));
            }
        }
        best.map(|(i, _)| i)
    }
}

fn backup(tree: &mut [TreeNode], mut at: usize, value: f64) {
    loop {
        tree[at].visits += 1;
        tree[at].total += value;
        match tree[at].parent {
            Some(p) => at = p,
            None => break,
        }
    }
}

impl SearchAlgorithm for Mcts {
    fn run(&mut self, root: Node, ctx: &mut SearchCtx) -> Result<(), SearchError> {
        let mut tree = vec![TreeNode {
            node: root,
            parent: None,
            children: Vec::new(),
            visits: 0,
            total: 0.0,
            attempts: 0,
            exhausted: false,
            dead: false,
        }];
        'iterations: for _ in 0..self.iterations {
            if tree[0].dead {
                break;
            }
            let mut at = 0;
            loop {
                let node = tree[at].node.clone();
                if !node.cp.is_running() {
                    ctx.collect(&node);
                    if node.cp.has_return_value() {
                        backup(&mut tree, at, self.value(&node));
                    } else {
                        tree[at].dead = true;
                    }
                    continue 'iterations;
                }
                let limit = ctx.branching(&node, self.default)?;
                if !tree[at].exhausted && limit.is_none_or(|l| tree[at].attempts < l) {
                    let Some(stepped) = ctx.step(&node)? else { break 'iterations };
                    tree[at].attempts += 1;
                    match stepped {
                        Stepped::Child(child) => {
                            ctx.flush(&child)?;
                            ctx.collect(&child);
                            let v = self.value(&child);
                            let idx = tree.len();
                            let dead = !child.cp.is_running() && !child.cp.has_return_value();
                            tree.push(TreeNode {
                                node: child,
                                parent: Some(at),
                                children: Vec::new(),
                                visits: 0,
                                total: 0.0,
                                attempts: 0,
                                exhausted: false,
                                dead,
                            });
                            tree[at].children.push(idx);
                            if !dead {
                                backup(&mut tree, idx, v);
                            }
                            continue 'iterations;
                        }
                        Stepped::Exhausted => tree[at].exhausted = true,
                        Stepped::Failed => {}
                    }
                    continue;
                }
                match self.uct(&tree, at) {
                    Some(next) => at = next,
                    None => {
                        tree[at].dead = true;
                        continue 'iterations;
                    }
                }
            }
        }
        Ok(())
    }
}

pub(super) fn register(r: &mut Registry) {
    r.register("mcts", &["num_iterations", "exploration_c", "value_fn", "default_branching"], |p| {
        let value_fn = match param_str(p, "value_fn", "score")? {
            "score" => ValueFn::Score,
            "returned" => ValueFn::Returned,
            other => {
                return Err(SearchError::BadParam(format!("unknown value_fn `{other}`; expected score or returned")))
            }
        };
        Ok(Box::new(Mcts {
            iterations: param_usize(p, "num_iterations", 100)?,
            c: param_f64(p, "exploration_c", 1.414)?,
            value_fn,
            default: param_branching(p, Branching::Fixed(2))?,
        }) as Box<dyn SearchAlgorithm>)
    })
    .expect("builtin names are distinct");
}
