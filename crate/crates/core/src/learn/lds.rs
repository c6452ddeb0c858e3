//! Level-wise induction: one streaming pass over the examples per level.
//!
//! During a pass each example is routed to its open node, every candidate
//! of that node is evaluated on it and the counters are updated. The
//! outcome bits are spilled to a file so that, once the best tests are
//! known, examples can be routed to the next level without another pass.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

use crate::bias::RefinementContext;
use crate::engine::Solver;
use crate::learn::{BuildReport, Counters, Expansion, LearnError, LevelLog, Open, Shared};
use crate::store::{DatasetHandle, Selector};
use crate::term::Literal;
use crate::tree::Foldt;

const CLOSED: u32 = u32::MAX;
const ROUTED: u32 = 1 << 31;

enum Slot {
    Pending,
    Leaf(Foldt),
    Inner {
        conj: Vec<Literal>,
        query: Vec<Literal>,
        left: usize,
        right: usize,
    },
}

fn assemble(arena: &mut Vec<Slot>, at: usize) -> Foldt {
    match std::mem::replace(&mut arena[at], Slot::Pending) {
        Slot::Leaf(t) => t,
        Slot::Inner {
            conj,
            query,
            left,
            right,
        } => Foldt::Node {
            conj,
            query,
            left: Box::new(assemble(arena, left)),
            right: Box::new(assemble(arena, right)),
        },
        Slot::Pending => unreachable!("node left open"),
    }
}

struct LevelNode {
    open: Open,
    slot: usize,
    exp: Option<Expansion>,
}

/// Removes the spill file however the level ends.
struct Spill {
    path: PathBuf,
}

impl Spill {
    fn new() -> Spill {
        static SEQ: AtomicU64 = AtomicU64::new(0);
        let n = SEQ.fetch_add(1, Ordering::SeqCst);
        Spill {
            path: std::env::temp_dir().join(format!("foldt-spill-{}-{n}.bin", std::process::id())),
        }
    }

    fn err(&self, source: std::io::Error) -> LearnError {
        LearnError::Spill {
            path: self.path.clone(),
            source,
        }
    }
}

impl Drop for Spill {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.path);
    }
}

pub(crate) fn build(
    shared: &Shared<'_>,
    data: &DatasetHandle,
) -> Result<(Foldt, BuildReport), LearnError> {
    let budget = shared.settings.params.budget;
    let mut report = BuildReport {
        counters_conserved: true,
        ..Default::default()
    };
    let mut arena = vec![Slot::Pending];
    let mut level = vec![LevelNode {
        open: Open {
            ctx: RefinementContext::root(shared.settings),
            depth: 1,
            dist: data.histogram.clone(),
        },
        slot: 0,
        exp: None,
    }];
    // node (index into `level`) of every example still below an open node
    let mut assign = vec![0u32; data.total];
    let mut solver = Solver::new();
    let mut depth = 0;

    while !level.is_empty() {
        depth += 1;
        let started = Instant::now();
        for n in &mut level {
            n.exp = shared.expand(&n.open);
            if let Some(e) = &n.exp {
                report.expanded_nodes += 1;
                report.candidates += e.queries.len() as u64;
            }
        }
        let mut counters: Vec<Counters> = level
            .iter()
            .map(|n| {
                Counters::new(
                    n.exp.as_ref().map_or(0, |e| e.queries.len()),
                    shared.nclasses,
                )
            })
            .collect();
        let mut seen = vec![vec![0u64; shared.nclasses]; level.len()];

        let spill = Spill::new();
        let mut out = BufWriter::new(File::create(&spill.path).map_err(|e| spill.err(e))?);
        let mut bits = Vec::new();
        let mut touched = 0u64;
        let select = |o: usize| assign[o] != CLOSED;
        for item in data.stream(Selector::Ordinals(&select)) {
            let (o, e) = item?;
            touched += 1;
            let ni = assign[o] as usize;
            let class = shared
                .settings
                .class_index(e.class)
                .ok_or_else(|| LearnError::UnknownClass(e.id.to_string()))?;
            seen[ni][class] += 1;
            let Some(exp) = &level[ni].exp else {
                continue;
            };
            bits.clear();
            bits.resize(exp.queries.len().div_ceil(8), 0u8);
            for (i, q) in exp.queries.iter().enumerate() {
                let ok = solver.succeeds(q, &e, &shared.program, budget)?;
                counters[ni].add(i, ok, class);
                if ok {
                    bits[i / 8] |= 1 << (i % 8);
                }
            }
            report.tests += exp.queries.len() as u64;
            out.write_all(&(o as u32).to_le_bytes())
                .map_err(|e| spill.err(e))?;
            out.write_all(&bits).map_err(|e| spill.err(e))?;
        }
        out.flush().map_err(|e| spill.err(e))?;
        drop(out);
        report.passes += 1;

        // choose tests and open the next level
        let mut next: Vec<LevelNode> = Vec::new();
        // per node: Some((best candidate, left index, right index in `next`))
        let mut route: Vec<Option<(usize, u32, u32)>> = Vec::with_capacity(level.len());
        let mut ncands = 0;
        for (ni, n) in level.iter().enumerate() {
            if seen[ni] != n.open.dist {
                report.counters_conserved = false;
            }
            let chosen = n.exp.as_ref().and_then(|exp| {
                ncands += exp.queries.len();
                report.counters_conserved &= counters[ni].conserved(&n.open.dist);
                shared
                    .best(&n.open.dist, &counters[ni])
                    .map(|(i, _)| (i, exp))
            });
            match chosen {
                None => {
                    arena[n.slot] = Slot::Leaf(shared.leaf(n.open.dist.clone()));
                    route.push(None);
                }
                Some((best, exp)) => {
                    let cand = &exp.candidates[best];
                    let (ls, rs) = (arena.len(), arena.len() + 1);
                    arena.push(Slot::Pending);
                    arena.push(Slot::Pending);
                    arena[n.slot] = Slot::Inner {
                        conj: cand.conj.clone(),
                        query: n.open.ctx.query.clone(),
                        left: ls,
                        right: rs,
                    };
                    let li = next.len() as u32;
                    next.push(LevelNode {
                        open: Open {
                            ctx: n.open.ctx.left(cand),
                            depth: n.open.depth + 1,
                            dist: counters[ni].branch(best, true).to_vec(),
                        },
                        slot: ls,
                        exp: None,
                    });
                    next.push(LevelNode {
                        open: Open {
                            ctx: n.open.ctx.right(cand),
                            depth: n.open.depth + 1,
                            dist: counters[ni].branch(best, false).to_vec(),
                        },
                        slot: rs,
                        exp: None,
                    });
                    route.push(Some((best, li, li + 1)));
                }
            }
        }

        // examples follow the spilled outcome of their node's chosen test
        let mut input = BufReader::new(File::open(&spill.path).map_err(|e| spill.err(e))?);
        let mut word = [0u8; 4];
        loop {
            match input.read_exact(&mut word) {
                Ok(()) => {}
                Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => break,
                Err(e) => return Err(spill.err(e)),
            }
            let o = u32::from_le_bytes(word) as usize;
            let Some(n) = level.get(assign[o] as usize) else {
                return Err(spill.err(std::io::Error::new(
                    std::io::ErrorKind::InvalidData,
                    "record for an example without an open node",
                )));
            };
            let len = n.exp.as_ref().map_or(0, |e| e.queries.len().div_ceil(8));
            bits.resize(len, 0);
            input
                .read_exact(&mut bits[..len])
                .map_err(|e| spill.err(e))?;
            if let Some((best, l, r)) = route[assign[o] as usize] {
                let ok = bits[best / 8] & (1 << (best % 8)) != 0;
                assign[o] = ROUTED | if ok { l } else { r };
            }
        }
        // whatever was not routed sits under a new leaf
        for a in assign.iter_mut() {
            *a = if *a & ROUTED != 0 && *a != CLOSED {
                *a & !ROUTED
            } else {
                CLOSED
            };
        }

        let log = LevelLog {
            level: depth,
            open_nodes: level.len(),
            candidates: ncands,
            examples: touched,
            seconds: started.elapsed().as_secs_f64(),
        };
        log::info!("{log}");
        report.levels.push(log);
        level = next;
    }
    Ok((assemble(&mut arena, 0), report))
}
