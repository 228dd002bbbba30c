//! Plain-text snapshot of a trained network.
//!
//! ```text
//! QQN-CKPT 1 lane-change
//! action_bound 0.4
//! net M 10 64 64 1
//! <space separated parameters>
//! ... four more networks: V, amax, beta, T
//! gradient_steps 37500
//! episode 125
//! rng <seed as 64 hex digits> <stream> <word position>
//! ```
//!
//! Parameters are written with the shortest representation that parses back to the
//! same bits, so save followed by load is exact.

use std::fs;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::{Head, QuadraticQNet};
use crate::nn::{Activation, Mlp, NnError};
use crate::scalar::Real;
use crate::scenario::Scenario;
use crate::world::obs_dim;

const MAGIC: &str = "QQN-CKPT";
const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("checkpoint is for {found}, expected {expected}")]
    ScenarioMismatch { expected: Scenario, found: Scenario },
    #[error(transparent)]
    Nn(#[from] NnError),
}

/// Position of a ChaCha8 generator, enough to resume it exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngSnapshot {
    pub seed: [u8; 32],
    pub stream: u64,
    pub word_pos: u128,
}

impl RngSnapshot {
    pub fn capture(rng: &ChaCha8Rng) -> Self {
        Self {
            seed: rng.get_seed(),
            stream: rng.get_stream(),
            word_pos: rng.get_word_pos(),
        }
    }

    pub fn restore(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(self.word_pos);
        rng
    }

    fn encode(&self) -> String {
        let hex: String = self.seed.iter().map(|b| format!("{b:02x}")).collect();
        format!("{hex} {} {}", self.stream, self.word_pos)
    }

    fn decode(s: &str) -> Option<Self> {
        let mut it = s.split_whitespace();
        let hex = it.next()?;
        if hex.len() != 64 {
            return None;
        }
        let mut seed = [0u8; 32];
        for (i, b) in seed.iter_mut().enumerate() {
            *b = u8::from_str_radix(hex.get(2 * i..2 * i + 2)?, 16).ok()?;
        }
        let stream = it.next()?.parse().ok()?;
        let word_pos = it.next()?.parse().ok()?;
        it.next().is_none().then_some(Self { seed, stream, word_pos })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint<T> {
    pub qnet: QuadraticQNet<T>,
    /// Training episodes completed when the snapshot was taken.
    pub episode: usize,
    pub gradient_steps: u64,
    /// Exploration generator at snapshot time.
    pub rng: RngSnapshot,
}

struct LineReader<B> {
    inner: io::Lines<B>,
    line: usize,
}

impl<B: BufRead> LineReader<B> {
    fn next_line(&mut self, what: &str) -> Result<(usize, String), CheckpointError> {
        self.line += 1;
        match self.inner.next() {
            Some(l) => Ok((self.line, l?)),
            None => Err(CheckpointError::Parse {
                line: self.line,
                msg: format!("unexpected end of file, expected {what}"),
            }),
        }
    }

    /// Reads a `key value` line.
    fn field(&mut self, key: &str) -> Result<(usize, String), CheckpointError> {
        let (ln, line) = self.next_line(key)?;
        match line.split_once(' ') {
            Some((k, v)) if k == key => Ok((ln, v.trim().to_string())),
            _ => Err(CheckpointError::Parse {
                line: ln,
                msg: format!("expected `{key}`"),
            }),
        }
    }
}

fn join<T: Real>(values: &[T]) -> String {
    let mut s = String::with_capacity(values.len() * 12);
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        s.push_str(&format!("{v:?}"));
    }
    s
}

impl<T: Real> Checkpoint<T> {
    pub fn scenario(&self) -> Scenario {
        self.qnet.scenario
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> io::Result<()> {
        let q = &self.qnet;
        writeln!(w, "{MAGIC} {VERSION} {}", q.scenario)?;
        writeln!(w, "action_bound {:?}", q.action_bound)?;
        for head in Head::ALL {
            let net = q.net(head);
            let [a, b, c, d] = net.sizes();
            writeln!(w, "net {} {a} {b} {c} {d}", head.name())?;
            writeln!(w, "{}", join(net.params()))?;
        }
        writeln!(w, "gradient_steps {}", self.gradient_steps)?;
        writeln!(w, "episode {}", self.episode)?;
        writeln!(w, "rng {}", self.rng.encode())?;
        w.flush()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), CheckpointError> {
        let file = fs::File::create(path)?;
        self.write_to(io::BufWriter::new(file))?;
        Ok(())
    }

    pub fn read_from<R: Read>(r: R) -> Result<Self, CheckpointError> {
        let mut lines = LineReader {
            inner: BufReader::new(r).lines(),
            line: 0,
        };
        let bad = |line: usize, msg: String| CheckpointError::Parse { line, msg };

        let (ln, header) = lines.next_line("header")?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 3 || parts[0] != MAGIC {
            return Err(bad(ln, "not a checkpoint file".into()));
        }
        if parts[1] != VERSION.to_string() {
            return Err(bad(ln, format!("unsupported version {}", parts[1])));
        }
        let scenario: Scenario = parts[2].parse().map_err(|e| bad(ln, format!("{e}")))?;

        let (ln, v) = lines.field("action_bound")?;
        let action_bound: T = v.parse().map_err(|_| bad(ln, format!("bad number {v}")))?;

        let mut nets: Vec<Mlp<T>> = Vec::with_capacity(5);
        for head in Head::ALL {
            let (ln, v) = lines.field("net")?;
            let mut it = v.split_whitespace();
            if it.next() != Some(head.name()) {
                return Err(bad(ln, format!("expected network {}", head.name())));
            }
            let sizes: Vec<usize> = it
                .map(|s| s.parse().map_err(|_| bad(ln, format!("bad size {s}"))))
                .collect::<Result<_, _>>()?;
            let sizes: [usize; 4] = sizes
                .try_into()
                .map_err(|_| bad(ln, "expected four layer sizes".into()))?;
            if sizes[0] != obs_dim(scenario) || sizes[3] != 1 {
                return Err(bad(ln, format!("layer sizes {sizes:?} do not fit {scenario}")));
            }
            let (ln, v) = lines.next_line("parameters")?;
            let params: Vec<T> = v
                .split_whitespace()
                .map(|s| s.parse().map_err(|_| bad(ln, format!("bad number {s}"))))
                .collect::<Result<_, _>>()?;
            nets.push(Mlp::from_flat(sizes, Activation::Identity, params)?);
        }
        let (ln, v) = lines.field("gradient_steps")?;
        let gradient_steps: u64 = v.parse().map_err(|_| bad(ln, format!("bad integer {v}")))?;
        let (ln, v) = lines.field("episode")?;
        let episode: usize = v.parse().map_err(|_| bad(ln, format!("bad integer {v}")))?;
        let (ln, v) = lines.field("rng")?;
        let rng = RngSnapshot::decode(&v).ok_or_else(|| bad(ln, "bad rng state".into()))?;
        let mut nets = nets.into_iter();
        let mut take = || nets.next().expect("five networks parsed");
        Ok(Self {
            qnet: QuadraticQNet {
                scenario,
                action_bound,
                net_m: take(),
                net_v: take(),
                net_amax: take(),
                net_beta: take(),
                net_t: take(),
            },
            episode,
            gradient_steps,
            rng,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CheckpointError> {
        Self::read_from(fs::File::open(path)?)
    }

    /// Loads and checks the scenario tag.
    pub fn load_for(path: impl AsRef<Path>, scenario: Scenario) -> Result<Self, CheckpointError> {
        let ckpt = Self::load(path)?;
        if ckpt.scenario() != scenario {
            return Err(CheckpointError::ScenarioMismatch {
                expected: scenario,
                found: ckpt.scenario(),
            });
        }
        Ok(ckpt)
    }
}
