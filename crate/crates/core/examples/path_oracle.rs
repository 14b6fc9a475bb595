//! Counts open paths on small random trees twice: by the local recursion and
//! by checking the partial-sum condition along every path.

use drlab::open_paths::{enumerate_definitional, fold_leaves, sample_rng, TreeSample};
use rand_core::RngCore;

fn main() -> drlab::Result<()> {
    let mut rng = sample_rng(2024, 0);
    let mut checked = 0;
    for m in [2u32, 3] {
        for n in 0..=4u32 {
            for _ in 0..1000 {
                let leaves: Vec<u64> = (0..m.pow(n)).map(|_| rng.next_u64() % 4).collect();
                let fast = fold_leaves(m, n, &leaves)?.n;
                let slow = enumerate_definitional(n, m, &leaves)?;
                assert_eq!(fast, slow, "m = {m}, n = {n}, leaves {leaves:?}");
                checked += 1;
            }
        }
    }
    println!("{checked} random trees: recursion and path enumeration agree");

    let tree = TreeSample::from_leaves(2, 2, &[0, 1, 2, 0])?;
    println!("leaves [0, 1, 2, 0]: Y by generation {:?}", tree.y);
    println!("brother sums {:?}, open counts {:?}", tree.xi, tree.open);
    Ok(())
}
