//! Independent reference implementations the acceptance suite checks
//! against. Nothing here shares code with the library's dynamic program.

use depeval::treedist::DepTree;
use rand::Rng;

/// Exhaustive minimum cost over all valid ordered-tree edit mappings.
///
/// A mapping pairs nodes one-to-one, preserving postorder on both sides and
/// the ancestor relation pairwise; its cost is one per unmapped node on
/// either side plus one per mapped pair with differing labels. Enumerating
/// pairs in increasing postorder covers every valid mapping because a valid
/// mapping sorted by one side's postorder is sorted on the other side too.
pub fn brute_force_distance(a: &DepTree, b: &DepTree) -> usize {
    fn postorder(t: &DepTree, node: usize, out: &mut Vec<usize>) {
        for &c in t.children(node) {
            postorder(t, c, out);
        }
        out.push(node);
    }
    fn ancestors(t: &DepTree, mut node: usize) -> Vec<usize> {
        let mut up = Vec::new();
        while let Some(p) = t.parent(node) {
            up.push(p);
            node = p;
        }
        up
    }

    let mut post_a = Vec::new();
    postorder(a, 0, &mut post_a);
    let mut post_b = Vec::new();
    postorder(b, 0, &mut post_b);
    let anc_a: Vec<Vec<usize>> = (0..a.size()).map(|v| ancestors(a, v)).collect();
    let anc_b: Vec<Vec<usize>> = (0..b.size()).map(|v| ancestors(b, v)).collect();

    struct Ctx<'t> {
        a: &'t DepTree,
        b: &'t DepTree,
        post_a: Vec<usize>,
        post_b: Vec<usize>,
        anc_a: Vec<Vec<usize>>,
        anc_b: Vec<Vec<usize>>,
    }

    fn search(
        ctx: &Ctx,
        ai: usize,
        bj: usize,
        mapped: &mut Vec<(usize, usize)>,
        cost: usize,
        best: &mut usize,
    ) {
        if cost >= *best {
            return;
        }
        let finish = cost + (ctx.post_a.len() - ai) + (ctx.post_b.len() - bj);
        if finish < *best {
            *best = finish;
        }
        for x in ai..ctx.post_a.len() {
            for y in bj..ctx.post_b.len() {
                let va = ctx.post_a[x];
                let vb = ctx.post_b[y];
                let consistent = mapped.iter().all(|&(pa, pb)| {
                    let va_above_pa = ctx.anc_a[pa].contains(&va);
                    let vb_above_pb = ctx.anc_b[pb].contains(&vb);
                    let pa_above_va = ctx.anc_a[va].contains(&pa);
                    let pb_above_vb = ctx.anc_b[vb].contains(&pb);
                    va_above_pa == vb_above_pb && pa_above_va == pb_above_vb
                });
                if !consistent {
                    continue;
                }
                let relabel = usize::from(ctx.a.label(va) != ctx.b.label(vb));
                let skipped = (x - ai) + (y - bj);
                mapped.push((va, vb));
                search(ctx, x + 1, y + 1, mapped, cost + skipped + relabel, best);
                mapped.pop();
            }
        }
    }

    let mut best = post_a.len() + post_b.len();
    let ctx = Ctx {
        a,
        b,
        post_a,
        post_b,
        anc_a,
        anc_b,
    };
    search(&ctx, 0, 0, &mut Vec::new(), 0, &mut best);
    best
}

/// Random dependency tree: tokens are attached in a random order, each to a
/// previously attached token or the root, then labeled from the pool.
pub fn random_tree<R: Rng>(rng: &mut R, max_tokens: usize, label_pool: &[&str]) -> DepTree {
    let n = rng.random_range(1..=max_tokens);
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
    let mut heads = vec![0usize; n];
    let mut attached: Vec<usize> = Vec::new();
    for (step, &token) in order.iter().enumerate() {
        heads[token] = if step == 0 {
            0
        } else {
            attached[rng.random_range(0..attached.len())] + 1
        };
        attached.push(token);
    }
    let labels: Vec<&str> = (0..n)
        .map(|_| label_pool[rng.random_range(0..label_pool.len())])
        .collect();
    DepTree::from_heads(&heads, &labels).expect("construction yields a tree")
}
