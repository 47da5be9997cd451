//! Line-oriented dataset files.
//!
//! ```text
//! #star-dataset v1 state=discrete env=two_state policy=uniform seed=7
//! 0|1|0.0000000000000000e0|5.0000000000000000e-1;1|0|1.0000000000000000e0|5.0000000000000000e-1
//! ```
//!
//! Header fields are separated by tabs (shown as spaces above).
//! One episode per line, records `state|action|reward|bprob` joined by `;`.
//! Continuous states are comma-joined. Reals carry 17 significant digits, so
//! a write/read cycle reproduces every bit.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{Dataset, Episode, Provenance, State, Step};
use crate::error::{Error, Result};

pub const DATASET_SCHEMA: &str = "v1";
const MAGIC: &str = "#star-dataset";

pub(crate) fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_dataset<W: Write>(data: &Dataset, mut out: W) -> std::io::Result<()> {
    let kind = match data.episodes.first().and_then(|e| e.steps.first()) {
        Some(Step {
            state: State::Continuous(_),
            ..
        }) => "continuous",
        _ => "discrete",
    };
    let Provenance {
        env_id,
        policy_id,
        seed,
    } = &data.provenance;
    writeln!(out, "{MAGIC}\t{DATASET_SCHEMA}\tstate={kind}\tenv={env_id}\tpolicy={policy_id}\tseed={seed}")?;
    let mut line = String::new();
    for episode in &data.episodes {
        line.clear();
        for (i, step) in episode.steps.iter().enumerate() {
            if i > 0 {
                line.push(';');
            }
            match &step.state {
                State::Discrete(s) => line.push_str(&s.to_string()),
                State::Continuous(x) => {
                    let parts: Vec<String> = x.iter().map(|v| fmt_real(*v)).collect();
                    line.push_str(&parts.join(","));
                }
            }
            line.push('|');
            line.push_str(&step.action.to_string());
            line.push('|');
            line.push_str(&fmt_real(step.reward));
            line.push('|');
            line.push_str(&fmt_real(step.behavior_prob));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn write_dataset_file(data: &Dataset, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_dataset(data, &mut out)
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn read_dataset_file(path: &Path) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_dataset(BufReader::new(file))
}

pub fn read_dataset<R: Read>(input: R) -> Result<Dataset> {
    let mut lines = BufReader::new(input).lines();
    let header = match lines.next() {
        Some(line) => line.map_err(|e| Error::io("<dataset>", e))?,
        None => return Err(Error::parse(1, "missing header")),
    };
    let (continuous, provenance) = parse_header(&header)?;
    let mut episodes = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        let line = line.map_err(|e| Error::io("<dataset>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let steps = line
            .split(';')
            .map(|rec| parse_step(rec, continuous, line_no))
            .collect::<Result<Vec<_>>>()?;
        episodes.push(Episode { steps });
    }
    if episodes.is_empty() {
        return Err(Error::EmptyInput("dataset has no episodes"));
    }
    Ok(Dataset {
        episodes,
        provenance,
    })
}

fn parse_header(header: &str) -> Result<(bool, Provenance)> {
    let mut fields = header.split('\t');
    if fields.next() != Some(MAGIC) {
        return Err(Error::parse(1, "not a dataset file"));
    }
    match fields.next() {
        Some(DATASET_SCHEMA) => {}
        other => return Err(Error::parse(1, format!("unsupported schema {other:?}"))),
    }
    let (mut kind, mut env_id, mut policy_id, mut seed) = (None, None, None, None);
    for field in fields {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| Error::parse(1, format!("malformed header field {field:?}")))?;
        match key {
            "state" => kind = Some(value.to_string()),
            "env" => env_id = Some(value.to_string()),
            "policy" => policy_id = Some(value.to_string()),
            "seed" => seed = Some(value.parse::<u64>().map_err(|e| Error::parse(1, format!("seed: {e}")))?),
            _ => return Err(Error::parse(1, format!("unknown header field {key:?}"))),
        }
    }
    let continuous = match kind.as_deref() {
        Some("discrete") => false,
        Some("continuous") => true,
        _ => return Err(Error::parse(1, "header needs state=discrete|continuous")),
    };
    let missing = |what: &str| Error::parse(1, format!("header is missing {what}"));
    Ok((
        continuous,
        Provenance {
            env_id: env_id.ok_or_else(|| missing("env"))?,
            policy_id: policy_id.ok_or_else(|| missing("policy"))?,
            seed: seed.ok_or_else(|| missing("seed"))?,
        },
    ))
}

fn parse_step(record: &str, continuous: bool, line: usize) -> Result<Step> {
    let parts: Vec<&str> = record.split('|').collect();
    let [state, action, reward, bprob] = parts[..] else {
        return Err(Error::parse(line, format!("record {record:?} does not have 4 fields")));
    };
    let real = |s: &str| s.parse::<f64>().map_err(|e| Error::parse(line, format!("{s:?}: {e}")));
    let state = if continuous {
        State::Continuous(state.split(',').map(real).collect::<Result<_>>()?)
    } else {
        State::Discrete(state.parse().map_err(|e| Error::parse(line, format!("state {state:?}: {e}")))?)
    };
    let behavior_prob = real(bprob)?;
    if !(behavior_prob > 0.0 && behavior_prob <= 1.0) {
        return Err(Error::parse(line, format!("behavior probability {behavior_prob} outside (0, 1]")));
    }
    Ok(Step {
        state,
        action: action.parse().map_err(|e| Error::parse(line, format!("action {action:?}: {e}")))?,
        reward: real(reward)?,
        behavior_prob,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{sample_trajectories, CartPole, TabularMdp, UniformPolicy};
    use proptest::prelude::*;

    fn round_trip(data: &Dataset) -> Dataset {
        let mut buf = Vec::new();
        write_dataset(data, &mut buf).unwrap();
        read_dataset(buf.as_slice()).unwrap()
    }

    #[test]
    fn tabular_and_continuous_round_trip() {
        let tab = sample_trajectories(&TabularMdp::two_state(), &UniformPolicy::new(2), 20, 1).unwrap();
        assert_eq!(round_trip(&tab), tab);
        let cont = sample_trajectories(&CartPole::default(), &UniformPolicy::new(2), 20, 1).unwrap();
        assert_eq!(round_trip(&cont), cont);
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(read_dataset("".as_bytes()).is_err());
        assert!(read_dataset("#star-dataset\tv9\tstate=discrete\tenv=a\tpolicy=b\tseed=1\n0|0|0|1\n".as_bytes()).is_err());
        let header = "#star-dataset\tv1\tstate=discrete\tenv=a\tpolicy=b\tseed=1\n";
        assert!(read_dataset(header.as_bytes()).is_err());
        let err = read_dataset(format!("{header}0|0|0\n").as_bytes()).unwrap_err();
        assert!(err.to_string().contains("line 2"));
        assert!(read_dataset(format!("{header}0|0|0|0\n").as_bytes()).is_err());
        assert!(read_dataset(format!("{header}0|0|1.5|0.25\n").as_bytes()).is_ok());
    }

    proptest! {
        #[test]
        fn reals_survive_bit_exact(xs in prop::collection::vec(any::<f64>().prop_filter("finite", |x| x.is_finite()), 1..6),
                                   r in any::<f64>().prop_filter("finite", |x| x.is_finite()),
                                   p in 1e-300f64..=1.0) {
            let data = Dataset {
                episodes: vec![Episode { steps: vec![Step { state: State::Continuous(xs), action: 1, reward: r, behavior_prob: p }] }],
                provenance: Provenance { env_id: "e".into(), policy_id: "p".into(), seed: 3 },
            };
            let back = round_trip(&data);
            let (a, b) = (&back.episodes[0].steps[0], &data.episodes[0].steps[0]);
            prop_assert_eq!(a.reward.to_bits(), b.reward.to_bits());
            prop_assert_eq!(a.behavior_prob.to_bits(), b.behavior_prob.to_bits());
            prop_assert_eq!(&a.state, &b.state);
        }
    }
}
