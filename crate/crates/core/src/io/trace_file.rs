//! Binary trace files.
//!
//! All integers and floats are little-endian.
//!
//! ```text
//! magic      4 bytes  "BVC1"
//! version    u8       1
//! config     u32 length + UTF-8 JSON of the fit configuration
//! p          u32
//! K          u32
//! counts     K*p u32, row-major
//! inclusion  K*p u8 (0/1), row-major
//! sigma2     K f64
//! flags      u8: bit 0 MI log, bit 1 split-probability path, bit 2 alpha path
//! [MI]       per draw: u32 node count, then (u32 feature, f64 probability) per node
//! [s]        K*p f64
//! [alpha]    K f64
//! ```

use std::io::{Read, Write};
use std::path::Path;

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};

use crate::data::{DrawRecord, FitConfig, PosteriorTrace};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"BVC1";
pub const VERSION: u8 = 1;

const FLAG_MI: u8 = 1;
const FLAG_S: u8 = 2;
const FLAG_ALPHA: u8 = 4;

fn to_u32(v: usize, what: &str) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::TraceFormat(format!("{what} {v} exceeds u32")))
}

pub fn write_trace<W: Write>(mut w: W, trace: &PosteriorTrace) -> Result<()> {
    let p = trace.n_features();
    let k = trace.n_draws();
    w.write_all(MAGIC)?;
    w.write_u8(VERSION)?;
    let config = serde_json::to_vec(trace.config())?;
    w.write_u32::<LE>(to_u32(config.len(), "config length")?)?;
    w.write_all(&config)?;
    w.write_u32::<LE>(to_u32(p, "feature count")?)?;
    w.write_u32::<LE>(to_u32(k, "draw count")?)?;
    for &c in trace.counts() {
        w.write_u32::<LE>(c)?;
    }
    for &c in trace.counts() {
        w.write_u8(u8::from(c > 0))?;
    }
    for &s in trace.sigma2_path() {
        w.write_f64::<LE>(s)?;
    }
    let mut flags = 0;
    if trace.mi_nodes().is_some() {
        flags |= FLAG_MI;
    }
    if trace.split_prob_path().is_some() {
        flags |= FLAG_S;
    }
    if trace.alpha_path().is_some() {
        flags |= FLAG_ALPHA;
    }
    w.write_u8(flags)?;
    if let Some(mi) = trace.mi_nodes() {
        for nodes in mi {
            w.write_u32::<LE>(to_u32(nodes.len(), "node count")?)?;
            for &(j, prob) in nodes {
                w.write_u32::<LE>(j)?;
                w.write_f64::<LE>(prob)?;
            }
        }
    }
    if let Some(s) = trace.split_prob_path() {
        for &v in s {
            w.write_f64::<LE>(v)?;
        }
    }
    if let Some(a) = trace.alpha_path() {
        for &v in a {
            w.write_f64::<LE>(v)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn truncated(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::TraceFormat("file is truncated".into())
    } else {
        Error::Io(e)
    }
}

pub fn read_trace<R: Read>(mut r: R) -> Result<PosteriorTrace> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(truncated)?;
    if &magic != MAGIC {
        return Err(Error::TraceFormat(format!("bad magic {magic:?}")));
    }
    let version = r.read_u8().map_err(truncated)?;
    if version != VERSION {
        return Err(Error::TraceFormat(format!("unsupported version {version}")));
    }
    let len = r.read_u32::<LE>().map_err(truncated)? as usize;
    let mut config = vec![0u8; len];
    r.read_exact(&mut config).map_err(truncated)?;
    let config: FitConfig = serde_json::from_slice(&config)?;
    let p = r.read_u32::<LE>().map_err(truncated)? as usize;
    let k = r.read_u32::<LE>().map_err(truncated)? as usize;
    let mut counts = vec![0u32; k * p];
    r.read_u32_into::<LE>(&mut counts).map_err(truncated)?;
    let mut inclusion = vec![0u8; k * p];
    r.read_exact(&mut inclusion).map_err(truncated)?;
    if counts.iter().zip(&inclusion).any(|(&c, &f)| f != u8::from(c > 0)) {
        return Err(Error::TraceFormat("inclusion matrix disagrees with counts".into()));
    }
    let mut sigma2 = vec![0f64; k];
    r.read_f64_into::<LE>(&mut sigma2).map_err(truncated)?;
    let flags = r.read_u8().map_err(truncated)?;
    if flags & !(FLAG_MI | FLAG_S | FLAG_ALPHA) != 0 {
        return Err(Error::TraceFormat(format!("unknown flags {flags:#04x}")));
    }
    let mut mi = Vec::new();
    if flags & FLAG_MI != 0 {
        for _ in 0..k {
            let m = r.read_u32::<LE>().map_err(truncated)? as usize;
            let mut nodes = Vec::with_capacity(m);
            for _ in 0..m {
                let j = r.read_u32::<LE>().map_err(truncated)?;
                if j as usize >= p {
                    return Err(Error::TraceFormat(format!("MI node feature {j} >= p")));
                }
                nodes.push((j, r.read_f64::<LE>().map_err(truncated)?));
            }
            mi.push(nodes);
        }
    }
    let mut s = Vec::new();
    if flags & FLAG_S != 0 {
        s = vec![0f64; k * p];
        r.read_f64_into::<LE>(&mut s).map_err(truncated)?;
    }
    let mut alpha = Vec::new();
    if flags & FLAG_ALPHA != 0 {
        alpha = vec![0f64; k];
        r.read_f64_into::<LE>(&mut alpha).map_err(truncated)?;
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::TraceFormat("trailing bytes after trace".into()));
    }
    let mut trace = PosteriorTrace::new(p, config);
    for i in 0..k {
        trace.push(DrawRecord {
            counts: counts[i * p..(i + 1) * p].to_vec(),
            sigma2: sigma2[i],
            mi_nodes: (flags & FLAG_MI != 0).then(|| std::mem::take(&mut mi[i])),
            split_probs: (flags & FLAG_S != 0).then(|| s[i * p..(i + 1) * p].to_vec()),
            alpha: (flags & FLAG_ALPHA != 0).then(|| alpha[i]),
        });
    }
    Ok(trace)
}

pub fn save_trace(path: &Path, trace: &PosteriorTrace) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_trace(std::io::BufWriter::new(file), trace)
}

pub fn load_trace(path: &Path) -> Result<PosteriorTrace> {
    let file = std::fs::File::open(path)?;
    read_trace(std::io::BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> PosteriorTrace {
        let mut t = PosteriorTrace::new(3, FitConfig::dart());
        for k in 0..4u32 {
            t.push(DrawRecord {
                counts: vec![k, 0, 2],
                sigma2: 0.5 + k as f64,
                mi_nodes: Some((0..k).map(|i| (i % 3, 0.25)).collect()),
                split_probs: Some(vec![0.2, 0.3, 0.5]),
                alpha: Some(1.0 / (k + 1) as f64),
            });
        }
        t
    }

    #[test]
    fn round_trip() {
        let t = sample();
        let mut buf = Vec::new();
        write_trace(&mut buf, &t).unwrap();
        assert_eq!(&buf[..4], b"BVC1");
        assert_eq!(read_trace(buf.as_slice()).unwrap(), t);
        let plain = PosteriorTrace::from_counts(2, &[vec![1, 0], vec![0, 3]]);
        let mut buf = Vec::new();
        write_trace(&mut buf, &plain).unwrap();
        assert_eq!(read_trace(buf.as_slice()).unwrap(), plain);
    }

    #[test]
    fn rejects_corruption() {
        let mut buf = Vec::new();
        write_trace(&mut buf, &sample()).unwrap();
        assert!(matches!(read_trace(&buf[..buf.len() - 3]), Err(Error::TraceFormat(_))));
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read_trace(bad.as_slice()), Err(Error::TraceFormat(_))));
        let mut bad = buf.clone();
        bad[4] = 9;
        assert!(matches!(read_trace(bad.as_slice()), Err(Error::TraceFormat(_))));
        let mut long = buf;
        long.push(0);
        assert!(matches!(read_trace(long.as_slice()), Err(Error::TraceFormat(_))));
    }
}
