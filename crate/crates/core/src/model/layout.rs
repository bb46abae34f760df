use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SegmentKind {
    DenseWeight,
    Bias,
    /// A group of convolution filters laid out back to back; `filter_sizes[i]`
    /// is the flattened length of filter `i`.
    ConvFilterGroup {
        filter_sizes: Vec<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub name: String,
    pub kind: SegmentKind,
    pub offset: usize,
    pub len: usize,
}

/// Ordered, contiguous decomposition of a flat parameter vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParameterLayout {
    segments: Vec<Segment>,
    dim: usize,
}

impl ParameterLayout {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        let mut next = 0;
        for s in &segments {
            if s.offset != next {
                return Err(Error::InvalidModel(format!(
                    "segment {} starts at {} but previous segment ends at {}",
                    s.name, s.offset, next
                )));
            }
            if let SegmentKind::ConvFilterGroup { filter_sizes } = &s.kind {
                if filter_sizes.is_empty() || filter_sizes.contains(&0) {
                    return Err(Error::InvalidModel(format!(
                        "conv filter group {} needs at least one non-empty filter",
                        s.name
                    )));
                }
                let total: usize = filter_sizes.iter().sum();
                if total != s.len {
                    return Err(Error::InvalidModel(format!(
                        "conv filter group {} declares {} coordinates but spans {}",
                        s.name, total, s.len
                    )));
                }
            }
            next += s.len;
        }
        Ok(ParameterLayout {
            segments,
            dim: next,
        })
    }

    /// Builds a layout from `(name, kind, len)` triples, assigning offsets in order.
    pub fn sequential(parts: Vec<(String, SegmentKind, usize)>) -> Result<Self> {
        let mut offset = 0;
        let segments = parts
            .into_iter()
            .map(|(name, kind, len)| {
                let s = Segment {
                    name,
                    kind,
                    offset,
                    len,
                };
                offset += len;
                s
            })
            .collect();
        ParameterLayout::new(segments)
    }

    /// A single dense segment covering `dim` coordinates.
    pub fn dense(name: &str, dim: usize) -> Self {
        ParameterLayout {
            segments: vec![Segment {
                name: name.to_string(),
                kind: SegmentKind::DenseWeight,
                offset: 0,
                len: dim,
            }],
            dim,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn segment(&self, name: &str) -> Option<&Segment> {
        self.segments.iter().find(|s| s.name == name)
    }
}

impl fmt::Display for SegmentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SegmentKind::DenseWeight => f.write_str("dense-weight"),
            SegmentKind::Bias => f.write_str("bias"),
            SegmentKind::ConvFilterGroup { filter_sizes } => {
                let sizes: Vec<String> = filter_sizes.iter().map(|s| s.to_string()).collect();
                write!(f, "conv-filter-group:{}", sizes.join(","))
            }
        }
    }
}

impl FromStr for SegmentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dense-weight" => Ok(SegmentKind::DenseWeight),
            "bias" => Ok(SegmentKind::Bias),
            other => {
                let sizes = other
                    .strip_prefix("conv-filter-group:")
                    .ok_or_else(|| Error::format(0, format!("unknown segment kind {other:?}")))?;
                let filter_sizes = sizes
                    .split(',')
                    .map(|t| {
                        t.parse::<usize>()
                            .map_err(|_| Error::format(0, format!("bad filter size {t:?}")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(SegmentKind::ConvFilterGroup { filter_sizes })
            }
        }
    }
}

/// One line per segment: `name kind offset len`.
impl fmt::Display for ParameterLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.segments {
            writeln!(f, "{} {} {} {}", s.name, s.kind, s.offset, s.len)?;
        }
        Ok(())
    }
}

impl FromStr for ParameterLayout {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut segments = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 {
                return Err(Error::format(
                    lineno as u64,
                    format!("layout line needs 4 fields, got {}", fields.len()),
                ));
            }
            let parse = |t: &str| {
                t.parse::<usize>()
                    .map_err(|_| Error::format(lineno as u64, format!("bad integer {t:?}")))
            };
            segments.push(Segment {
                name: fields[0].to_string(),
                kind: fields[1].parse()?,
                offset: parse(fields[2])?,
                len: parse(fields[3])?,
            });
        }
        ParameterLayout::new(segments)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaps_are_rejected() {
        let segs = vec![
            Segment {
                name: "a".into(),
                kind: SegmentKind::DenseWeight,
                offset: 0,
                len: 2,
            },
            Segment {
                name: "b".into(),
                kind: SegmentKind::Bias,
                offset: 3,
                len: 1,
            },
        ];
        assert!(ParameterLayout::new(segs).is_err());
    }

    #[test]
    fn conv_group_must_match_span() {
        let bad = ParameterLayout::sequential(vec![(
            "c".into(),
            SegmentKind::ConvFilterGroup {
                filter_sizes: vec![2, 2],
            },
            3,
        )]);
        assert!(bad.is_err());
        let empty = ParameterLayout::sequential(vec![(
            "c".into(),
            SegmentKind::ConvFilterGroup {
                filter_sizes: vec![],
            },
            0,
        )]);
        assert!(empty.is_err());
    }

    #[test]
    fn text_round_trip() {
        let layout = ParameterLayout::sequential(vec![
            (
                "conv.filters".into(),
                SegmentKind::ConvFilterGroup {
                    filter_sizes: vec![3, 3],
                },
                6,
            ),
            ("conv.bias".into(), SegmentKind::Bias, 2),
            ("fc.weight".into(), SegmentKind::DenseWeight, 4),
        ])
        .unwrap();
        let back: ParameterLayout = layout.to_string().parse().unwrap();
        assert_eq!(back, layout);
        assert_eq!(back.dim(), 12);
    }
}
