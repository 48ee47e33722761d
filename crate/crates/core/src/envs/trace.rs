use std::io::Write;

/// FNV-1a over the raw bits of an observation.
pub fn state_hash(obs: &[f64]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in obs {
        for b in v.to_bits().to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

/// Line-delimited environment trace: `step,agent,state_hash,action,reward,done`.
pub struct TraceWriter<W: Write> {
    out: W,
}

impl<W: Write> TraceWriter<W> {
    pub fn new(mut out: W) -> std::io::Result<Self> {
        writeln!(out, "step,agent,state_hash,action,reward,done")?;
        Ok(Self { out })
    }

    pub fn record(&mut self, step: usize, agent: usize, obs: &[f64], action: usize, reward: f64, done: bool) -> std::io::Result<()> {
        writeln!(
            self.out,
            "{step},{agent},{:016x},{action},{},{}",
            state_hash(obs),
            crate::harness::fmt_float(reward),
            done as u8
        )
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}
