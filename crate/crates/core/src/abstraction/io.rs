//! Text persistence for abstractions.
//!
//! ```text
//! #star-abstraction v1
//! variant centroids
//! num_abstract 2
//! encoding raw
//! scaling none
//! centroid 0.0000000000000000e0 1.0000000000000000e0
//! centroid ...
//! ```

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{Abstraction, CentroidMap, Encoding, Scaling};
use crate::env::io_fmt_real as fmt_real;
use crate::error::{Error, Result};

const MAGIC: &str = "#star-abstraction v1";

fn row(values: &[f64]) -> String {
    values.iter().map(|v| fmt_real(*v)).collect::<Vec<_>>().join(" ")
}

pub fn write_abstraction<W: Write>(phi: &Abstraction, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{MAGIC}")?;
    writeln!(out, "variant {}", phi.variant())?;
    writeln!(out, "num_abstract {}", phi.num_abstract())?;
    match phi {
        Abstraction::Identity { .. } | Abstraction::Single => {}
        Abstraction::Lookup { table, .. } => {
            let t: Vec<String> = table.iter().map(|z| z.to_string()).collect();
            writeln!(out, "table {}", t.join(" "))?;
        }
        Abstraction::Centroids(m) => {
            match m.encoding {
                Encoding::Raw => writeln!(out, "encoding raw")?,
                Encoding::OneHot(d) => writeln!(out, "encoding one_hot {d}")?,
            }
            match &m.scaling {
                None => writeln!(out, "scaling none")?,
                Some(s) => {
                    writeln!(out, "scaling standard")?;
                    writeln!(out, "mean {}", row(&s.mean))?;
                    writeln!(out, "scale {}", row(&s.scale))?;
                }
            }
            for c in &m.centroids {
                writeln!(out, "centroid {}", row(c))?;
            }
        }
    }
    Ok(())
}

pub fn write_abstraction_file(phi: &Abstraction, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_abstraction(phi, &mut out)
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn read_abstraction_file(path: &Path) -> Result<Abstraction> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_abstraction(file)
}

struct Lines {
    items: Vec<(usize, String)>,
    pos: usize,
}

impl Lines {
    fn next_keyed(&mut self, key: &str) -> Result<(usize, Vec<String>)> {
        let Some((line, text)) = self.items.get(self.pos) else {
            return Err(Error::parse(self.items.len() + 1, format!("expected `{key}`")));
        };
        self.pos += 1;
        let mut parts = text.split_whitespace().map(str::to_string);
        if parts.next().as_deref() != Some(key) {
            return Err(Error::parse(*line, format!("expected `{key}`, found {text:?}")));
        }
        Ok((*line, parts.collect()))
    }
}

fn reals(line: usize, parts: &[String]) -> Result<Vec<f64>> {
    parts
        .iter()
        .map(|p| p.parse::<f64>().map_err(|e| Error::parse(line, format!("{p:?}: {e}"))))
        .collect()
}

fn single<T: std::str::FromStr>(line: usize, parts: &[String]) -> Result<T> {
    match parts {
        [v] => v.parse().map_err(|_| Error::parse(line, format!("bad value {v:?}"))),
        _ => Err(Error::parse(line, "expected exactly one value")),
    }
}

pub fn read_abstraction<R: Read>(input: R) -> Result<Abstraction> {
    let mut items = Vec::new();
    for (i, line) in BufReader::new(input).lines().enumerate() {
        let line = line.map_err(|e| Error::io("<abstraction>", e))?;
        if !line.trim().is_empty() {
            items.push((i + 1, line));
        }
    }
    if items.first().map(|(_, l)| l.trim()) != Some(MAGIC) {
        return Err(Error::parse(1, "not an abstraction file"));
    }
    let mut lines = Lines { items, pos: 1 };
    let (vline, variant) = lines.next_keyed("variant")?;
    let (nline, n) = lines.next_keyed("num_abstract")?;
    let num_abstract: usize = single(nline, &n)?;
    let phi = match single::<String>(vline, &variant)?.as_str() {
        "identity" => Abstraction::identity(num_abstract),
        "single" => Abstraction::single(),
        "lookup" => {
            let (line, t) = lines.next_keyed("table")?;
            let table = t
                .iter()
                .map(|v| v.parse().map_err(|_| Error::parse(line, format!("bad index {v:?}"))))
                .collect::<Result<Vec<usize>>>()?;
            Abstraction::lookup(table, num_abstract)?
        }
        "centroids" => {
            let (eline, enc) = lines.next_keyed("encoding")?;
            let encoding = match enc.as_slice() {
                [raw] if raw == "raw" => Encoding::Raw,
                [oh, d] if oh == "one_hot" => Encoding::OneHot(single(eline, std::slice::from_ref(d))?),
                _ => return Err(Error::parse(eline, "encoding must be `raw` or `one_hot <dim>`")),
            };
            let (sline, sc) = lines.next_keyed("scaling")?;
            let scaling = match single::<String>(sline, &sc)?.as_str() {
                "none" => None,
                "standard" => {
                    let (ml, m) = lines.next_keyed("mean")?;
                    let (sl, s) = lines.next_keyed("scale")?;
                    Some(Scaling {
                        mean: reals(ml, &m)?,
                        scale: reals(sl, &s)?,
                    })
                }
                other => return Err(Error::parse(sline, format!("unknown scaling {other:?}"))),
            };
            let centroids = (0..num_abstract)
                .map(|_| {
                    let (line, c) = lines.next_keyed("centroid")?;
                    reals(line, &c)
                })
                .collect::<Result<Vec<_>>>()?;
            Abstraction::Centroids(CentroidMap {
                centroids,
                encoding,
                scaling,
            })
        }
        other => return Err(Error::parse(vline, format!("unknown variant {other:?}"))),
    };
    if let Some((line, text)) = lines.items.get(lines.pos) {
        return Err(Error::parse(*line, format!("unexpected trailing line {text:?}")));
    }
    Ok(phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abstraction::{fit_on_dataset, KMeansOptions};
    use crate::env::{sample_trajectories, CartPole, UniformPolicy};

    fn round_trip(phi: &Abstraction) -> Abstraction {
        let mut buf = Vec::new();
        write_abstraction(phi, &mut buf).unwrap();
        read_abstraction(buf.as_slice()).unwrap()
    }

    #[test]
    fn every_variant_round_trips() {
        let data = sample_trajectories(&CartPole::default(), &UniformPolicy::new(2), 20, 4).unwrap();
        let opts = KMeansOptions {
            standardize: true,
            ..Default::default()
        };
        let (centroids, _) = fit_on_dataset(&data, 5, &opts).unwrap();
        for phi in [
            Abstraction::identity(7),
            Abstraction::single(),
            Abstraction::lookup(vec![0, 1, 1, 0], 2).unwrap(),
            centroids,
            Abstraction::Centroids(CentroidMap {
                centroids: vec![vec![0.1, 0.2], vec![1.0 / 3.0, -0.0]],
                encoding: Encoding::OneHot(2),
                scaling: None,
            }),
        ] {
            let back = round_trip(&phi);
            assert_eq!(back, phi);
        }
    }

    #[test]
    fn rejects_truncated_files() {
        assert!(read_abstraction("#star-abstraction v1\nvariant centroids\nnum_abstract 2\nencoding raw\nscaling none\ncentroid 1\n".as_bytes()).is_err());
        assert!(read_abstraction("variant single\n".as_bytes()).is_err());
        assert!(read_abstraction("#star-abstraction v1\nvariant lookup\nnum_abstract 2\ntable 0 5\n".as_bytes()).is_err());
    }
}
