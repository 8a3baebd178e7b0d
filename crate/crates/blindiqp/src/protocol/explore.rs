//! Driving a branching process either by sampling or by exhaustive enumeration.
//!
//! A process runs deterministically until it needs a random choice, reports
//! the choice it needs through [`Next`], and continues once the choice is
//! resolved. Sampling resolves each choice from a seeded stream; enumeration
//! clones the process at every choice and visits all outcomes with their
//! probabilities.

use rand::Rng as _;

use crate::error::Result;
use crate::par;
use crate::qsim::PRUNE;
use crate::rng::Rng;

/// Who owns a random choice. Sampling draws client and server choices from
/// separate streams.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Party {
    Client,
    Server,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Next {
    Done,
    /// `count` equally likely outcomes.
    Uniform { party: Party, count: u64 },
    /// Outcome `i` has probability `probs[i]`.
    Weighted { party: Party, probs: Vec<f64> },
}

pub trait Branching: Clone + Send {
    /// Advance to the next random choice, or to the end.
    fn next(&mut self) -> Result<Next>;
    /// Supply the outcome of the choice last returned by [`Branching::next`].
    fn resolve(&mut self, choice: u64) -> Result<()>;
}

/// Run `m` to completion, drawing choices from the two streams.
pub fn drive<M: Branching>(m: &mut M, client: &mut Rng, server: &mut Rng) -> Result<()> {
    loop {
        let choice = match m.next()? {
            Next::Done => return Ok(()),
            Next::Uniform { party, count } => {
                let r = if party == Party::Client { &mut *client } else { &mut *server };
                r.gen_range(0..count)
            }
            Next::Weighted { party, probs } => {
                let r = if party == Party::Client { &mut *client } else { &mut *server };
                let total: f64 = probs.iter().sum();
                let mut u = r.gen::<f64>() * total;
                let mut pick = probs.len() - 1;
                for (i, p) in probs.iter().enumerate() {
                    if u < *p {
                        pick = i;
                        break;
                    }
                    u -= p;
                }
                // Never land on a branch that enumeration would prune.
                while probs[pick] < PRUNE && pick > 0 {
                    pick -= 1;
                }
                pick as u64
            }
        };
        m.resolve(choice)?;
    }
}

/// Accumulators combined across independently explored subtrees.
pub trait Merge: Default + Send {
    fn merge(&mut self, other: Self);
}

impl Merge for Vec<f64> {
    fn merge(&mut self, other: Self) {
        if self.is_empty() {
            *self = other;
        } else {
            for (a, b) in self.iter_mut().zip(other) {
                *a += b;
            }
        }
    }
}

/// Subtrees explored as independent tasks.
const FRONTIER: usize = 64;

/// Visit every leaf of `root` with its probability.
///
/// The tree is first expanded breadth-first until at least [`FRONTIER`] nodes
/// are open; each open node is then explored depth-first into its own
/// accumulator and the accumulators are merged in node order. The split does
/// not depend on the thread count, so results are bit-for-bit reproducible.
pub fn explore<M, A, F>(root: M, leaf: F) -> Result<A>
where
    M: Branching,
    A: Merge,
    F: Fn(&M, f64, &mut A) + Sync + Send,
{
    let mut frontier: Vec<(M, f64, bool)> = vec![(root, 1.0, false)];
    while frontier.len() < FRONTIER && frontier.iter().any(|n| !n.2) {
        let mut next = Vec::with_capacity(frontier.len() * 2);
        for (mut m, w, done) in frontier {
            if done {
                next.push((m, w, true));
                continue;
            }
            match m.next()? {
                Next::Done => next.push((m, w, true)),
                branch => {
                    for (choice, p) in choices(&branch) {
                        let mut c = m.clone();
                        c.resolve(choice)?;
                        next.push((c, w * p, false));
                    }
                }
            }
        }
        frontier = next;
    }
    let parts: Vec<Result<A>> = par::map_vec(frontier, |(m, w, done)| {
        let mut acc = A::default();
        if done {
            leaf(&m, w, &mut acc);
        } else {
            depth_first(m, w, &leaf, &mut acc)?;
        }
        Ok(acc)
    });
    let mut total = A::default();
    for p in parts {
        total.merge(p?);
    }
    Ok(total)
}

fn choices(next: &Next) -> Vec<(u64, f64)> {
    match next {
        Next::Done => Vec::new(),
        Next::Uniform { count, .. } => {
            let p = 1.0 / *count as f64;
            (0..*count).map(|c| (c, p)).collect()
        }
        Next::Weighted { probs, .. } => probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p >= PRUNE)
            .map(|(i, &p)| (i as u64, p))
            .collect(),
    }
}

fn depth_first<M, A, F>(mut m: M, w: f64, leaf: &F, acc: &mut A) -> Result<()>
where
    M: Branching,
    F: Fn(&M, f64, &mut A),
{
    let next = m.next()?;
    if next == Next::Done {
        leaf(&m, w, acc);
        return Ok(());
    }
    let mut options = choices(&next);
    let last = options.pop();
    for (choice, p) in options {
        let mut c = m.clone();
        c.resolve(choice)?;
        depth_first(c, w * p, leaf, acc)?;
    }
    if let Some((choice, p)) = last {
        m.resolve(choice)?;
        depth_first(m, w * p, leaf, acc)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Domain};

    /// Two fair coins then a biased one; records the sum of outcomes.
    #[derive(Clone)]
    struct Coins {
        step: usize,
        total: u64,
    }

    impl Branching for Coins {
        fn next(&mut self) -> Result<Next> {
            Ok(match self.step {
                0 | 1 => Next::Uniform {
                    party: Party::Client,
                    count: 2,
                },
                2 => Next::Weighted {
                    party: Party::Server,
                    probs: vec![0.25, 0.75],
                },
                _ => Next::Done,
            })
        }
        fn resolve(&mut self, choice: u64) -> Result<()> {
            self.step += 1;
            self.total += choice;
            Ok(())
        }
    }

    #[test]
    fn enumeration_weights() {
        let dist: Vec<f64> = explore(Coins { step: 0, total: 0 }, |m: &Coins, w, acc: &mut Vec<f64>| {
            if acc.is_empty() {
                acc.resize(4, 0.0);
            }
            acc[m.total as usize] += w;
        })
        .unwrap();
        let expect = [0.0625, 0.125 + 0.1875, 0.0625 + 0.375, 0.1875];
        for (a, b) in dist.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn sampling_is_seeded() {
        let run = |seed| {
            let mut m = Coins { step: 0, total: 0 };
            drive(&mut m, &mut stream(seed, Domain::Client, 0), &mut stream(seed, Domain::Server, 0)).unwrap();
            m.total
        };
        let a: Vec<u64> = (0..50).map(run).collect();
        let b: Vec<u64> = (0..50).map(run).collect();
        assert_eq!(a, b);
    }
}
