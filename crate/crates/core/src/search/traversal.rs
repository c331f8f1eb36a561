use std::collections::VecDeque;

use super::{
    param_branching, param_usize, Branching, Node, Registry, SearchAlgorithm, SearchCtx, SearchError, Stepped,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Order {
    Depth,
    Breadth,
}

/// Full expansion of every node by its branching factor, DFS (stack) or BFS
/// (queue). DFS visits children in sampling order.
struct Traversal {
    order: Order,
    default: Branching,
}

impl SearchAlgorithm for Traversal {
    fn run(&mut self, root: Node, ctx: &mut SearchCtx) -> Result<(), SearchError> {
        let mut frontier = VecDeque::from([root]);
        while let Some(node) = match self.order {
            Order::Depth => frontier.pop_back(),
            Order::Breadth => frontier.pop_front(),
        } {
            ctx.collect(&node);
            if !node.cp.is_running() {
                continue;
            }
            if ctx.stopped() {
                break;
            }
            let b = ctx.branching(&node, self.default)?;
            let children = ctx.expand(&node, b)?;
            match self.order {
                Order::Depth => frontier.extend(children.into_iter().rev()),
                Order::Breadth => frontier.extend(children),
            }
        }
        Ok(())
    }
}

/// `num_rollouts` independent root-to-leaf walks with one child per step.
/// Serial walks run back to back; with `max_parallelism > 1` all walks
/// advance one step per round.
struct Sampling {
    rollouts: usize,
}

impl SearchAlgorithm for Sampling {
    fn run(&mut self, root: Node, ctx: &mut SearchCtx) -> Result<(), SearchError> {
        if ctx.max_parallelism > 1 {
            return self.run_rounds(root, ctx);
        }
        for _ in 0..self.rollouts {
            let mut node = root.clone();
            while node.cp.is_running() {
                ctx.collect(&node);
                match ctx.step(&node)? {
                    None => return Ok(()),
                    Some(Stepped::Child(c)) => node = c,
                    Some(_) => break,
                }
            }
            ctx.collect(&node);
        }
        Ok(())
    }
}

impl Sampling {
    fn run_rounds(&self, root: Node, ctx: &mut SearchCtx) -> Result<(), SearchError> {
        let mut walks = vec![root; self.rollouts];
        while !walks.is_empty() {
            for n in &walks {
                ctx.collect(n);
            }
            let live: Vec<Node> = walks.into_iter().filter(|n| n.cp.is_running()).collect();
            walks = ctx
                .step_each(&live)?
                .into_iter()
                .filter_map(|s| match s {
                    Some(Stepped::Child(c)) => Some(c),
                    _ => None,
                })
                .collect();
        }
        Ok(())
    }
}

pub(super) fn register(r: &mut Registry) {
    for (name, order) in [("dfs", Order::Depth), ("bfs", Order::Breadth)] {
        r.register(name, &["default_branching"], move |p| {
            Ok(Box::new(Traversal { order, default: param_branching(p, Branching::Auto)? }) as Box<dyn SearchAlgorithm>)
        })
        .expect("builtin names are distinct");
    }
    r.register("sampling", &["num_rollouts"], |p| {
        Ok(Box::new(Sampling { rollouts: param_usize(p, "num_rollouts", 1)? }) as Box<dyn SearchAlgorithm>)
    })
    .expect("builtin names are distinct");
    r.register_alias("parallel_dfs", "dfs", 4).expect("builtin names are distinct");
    r.register_alias("parallel_bfs", "bfs", 4).expect("builtin names are distinct");
}
