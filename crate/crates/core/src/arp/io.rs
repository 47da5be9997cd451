//! Text persistence for ARPs: a header with `|Z|`, one `p` line per row,
//! then `r`, `eta`, `beta` and `visited` lines. Reals carry 17 significant
//! digits.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::Arp;
use crate::env::io_fmt_real as fmt_real;
use crate::error::{Error, Result};

const MAGIC: &str = "#star-arp v1";

fn row(values: &[f64]) -> String {
    values.iter().map(|v| fmt_real(*v)).collect::<Vec<_>>().join(" ")
}

pub fn write_arp<W: Write>(arp: &Arp, mut out: W) -> std::io::Result<()> {
    let n = arp.num_abstract();
    writeln!(out, "{MAGIC} {n}")?;
    for z in 0..n {
        writeln!(out, "p {}", row(arp.p_row(z)))?;
    }
    writeln!(out, "r {}", row(arp.rewards()))?;
    writeln!(out, "eta {}", row(arp.eta()))?;
    writeln!(out, "beta {}", row(arp.beta()))?;
    let visited: Vec<&str> = arp.visited().iter().map(|v| if *v { "1" } else { "0" }).collect();
    writeln!(out, "visited {}", visited.join(" "))
}

pub fn write_arp_file(arp: &Arp, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_arp(arp, &mut out)
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn read_arp_file(path: &Path) -> Result<Arp> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_arp(file)
}

pub fn read_arp<R: Read>(input: R) -> Result<Arp> {
    let lines: Vec<String> = BufReader::new(input)
        .lines()
        .collect::<std::io::Result<_>>()
        .map_err(|e| Error::io("<arp>", e))?;
    let header = lines.first().ok_or_else(|| Error::parse(1, "missing header"))?;
    let n: usize = header
        .strip_prefix(MAGIC)
        .and_then(|rest| rest.trim().parse().ok())
        .ok_or_else(|| Error::parse(1, "expected `#star-arp v1 <|Z|>`"))?;
    if lines.len() < n + 5 {
        return Err(Error::parse(lines.len() + 1, "file ends early"));
    }
    let field = |idx: usize, key: &str| -> Result<Vec<&str>> {
        let mut parts = lines[idx].split_whitespace();
        if parts.next() != Some(key) {
            return Err(Error::parse(idx + 1, format!("expected `{key}` line")));
        }
        let vals: Vec<&str> = parts.collect();
        if vals.len() != n {
            return Err(Error::parse(idx + 1, format!("expected {n} values, found {}", vals.len())));
        }
        Ok(vals)
    };
    let reals = |idx: usize, key: &str| -> Result<Vec<f64>> {
        field(idx, key)?
            .into_iter()
            .map(|v| v.parse().map_err(|e| Error::parse(idx + 1, format!("{v:?}: {e}"))))
            .collect()
    };
    let p = (0..n).map(|z| reals(1 + z, "p")).collect::<Result<Vec<_>>>()?;
    let r = reals(n + 1, "r")?;
    let eta = reals(n + 2, "eta")?;
    let beta = reals(n + 3, "beta")?;
    let visited = field(n + 4, "visited")?
        .into_iter()
        .map(|v| match v {
            "1" => Ok(true),
            "0" => Ok(false),
            _ => Err(Error::parse(n + 5, format!("visited flag {v:?}"))),
        })
        .collect::<Result<Vec<_>>>()?;
    Arp::new(p, r, eta, beta, visited)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abstraction::Abstraction;
    use crate::arp::ground_truth_arp;
    use crate::env::{RandomMdpParams, TabularMdp, TabularPolicy};

    #[test]
    fn round_trip_is_exact() {
        let mdp = TabularMdp::random(
            RandomMdpParams {
                num_states: 7,
                num_actions: 3,
                horizon: 11,
                max_branching: 3,
            },
            8,
        );
        let pi = TabularPolicy::random(7, 3, 2);
        for phi in [Abstraction::identity(7), Abstraction::single(), Abstraction::lookup(vec![0, 1, 2, 0, 1, 2, 3], 5).unwrap()] {
            let arp = ground_truth_arp(&mdp, &pi, &phi);
            let mut buf = Vec::new();
            write_arp(&arp, &mut buf).unwrap();
            assert_eq!(read_arp(buf.as_slice()).unwrap(), arp);
        }
    }

    #[test]
    fn rejects_bad_files() {
        assert!(read_arp("#star-arp v1 1\np 1\nr 0\neta 1\n".as_bytes()).is_err());
        assert!(read_arp("#star-arp v1 1\np 1 0\nr 0\neta 1\nbeta 1\nvisited 1\n".as_bytes()).is_err());
        assert!(read_arp("#star-arp v1 1\np 1\nr 0\neta 1\nbeta 1\nvisited 1\n".as_bytes()).is_ok());
    }
}
