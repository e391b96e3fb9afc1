//! Conversion between span annotations and per-token BIO labelings.

use crate::corpus::{AttributeKind, Utterance};

/// Per-token labels for one attribute kind: `O`, `B-<value>`, or
/// `I-<value>`. Tokens inside a segment that carries no value for `kind`
/// stay `O`.
pub fn segments_to_bio(utterance: &Utterance, kind: AttributeKind) -> Vec<String> {
    let mut labels = vec!["O".to_string(); utterance.tokens.len()];
    for segment in &utterance.segments {
        let Some(value) = segment.value_for(kind) else {
            continue;
        };
        for t in segment.start..segment.end.min(labels.len()) {
            labels[t] = if t == segment.start {
                format!("B-{value}")
            } else {
                format!("I-{value}")
            };
        }
    }
    labels
}

/// Recovers maximal `(start, end, value)` spans from BIO labels.
///
/// A dangling `I-v` (no preceding `B-v` or `I-v` of the same value) is
/// repaired as the start of a new span, so every label sequence decodes.
pub fn bio_to_spans<S: AsRef<str>>(labels: &[S]) -> Vec<(usize, usize, String)> {
    let mut spans = Vec::new();
    let mut open: Option<(usize, String)> = None;
    for (t, label) in labels.iter().enumerate() {
        let label = label.as_ref();
        let parsed = match label.split_once('-') {
            Some(("B", value)) => Some((true, value)),
            Some(("I", value)) => Some((false, value)),
            _ => None,
        };
        match parsed {
            Some((true, value)) => {
                if let Some((start, v)) = open.take() {
                    spans.push((start, t, v));
                }
                open = Some((t, value.to_string()));
            }
            Some((false, value)) => match open {
                Some((_, ref v)) if v == value => {}
                _ => {
                    if let Some((start, v)) = open.take() {
                        spans.push((start, t, v));
                    }
                    open = Some((t, value.to_string()));
                }
            },
            None => {
                if let Some((start, v)) = open.take() {
                    spans.push((start, t, v));
                }
            }
        }
    }
    if let Some((start, v)) = open {
        spans.push((start, labels.len(), v));
    }
    spans
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{SemanticSegment, Speaker};
    use crate::test_support::utterance;
    use proptest::prelude::*;

    fn labels(raw: &[&str]) -> Vec<String> {
        raw.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn encodes_main_segment() {
        let mut utt = utterance(0, Speaker::Guide, &["w", "x", "y", "z"]);
        utt.segments.push(SemanticSegment::new(1, 3, "LOC"));
        assert_eq!(
            segments_to_bio(&utt, AttributeKind::Main),
            labels(&["O", "B-LOC", "I-LOC", "O"])
        );
        // No sub value on the segment: the SUB channel stays all-O.
        assert_eq!(
            segments_to_bio(&utt, AttributeKind::Sub),
            labels(&["O", "O", "O", "O"])
        );
    }

    #[test]
    fn adjacent_segments_force_a_second_b() {
        let mut utt = utterance(0, Speaker::Guide, &["a", "b"]);
        utt.segments.push(SemanticSegment::new(0, 1, "LOC"));
        utt.segments.push(SemanticSegment::new(1, 2, "LOC"));
        assert_eq!(
            segments_to_bio(&utt, AttributeKind::Main),
            labels(&["B-LOC", "B-LOC"])
        );
    }

    #[test]
    fn decodes_simple_span() {
        assert_eq!(
            bio_to_spans(&labels(&["O", "B-LOC", "I-LOC", "O"])),
            vec![(1, 3, "LOC".to_string())]
        );
    }

    #[test]
    fn repairs_dangling_inside_label() {
        assert_eq!(
            bio_to_spans(&labels(&["I-LOC", "O"])),
            vec![(0, 1, "LOC".to_string())]
        );
        // Value switch inside a run also starts a new span.
        assert_eq!(
            bio_to_spans(&labels(&["B-LOC", "I-TIME"])),
            vec![(0, 1, "LOC".to_string()), (1, 2, "TIME".to_string())]
        );
    }

    #[test]
    fn decodes_empty_sequence() {
        assert_eq!(bio_to_spans(&Vec::<String>::new()), vec![]);
    }

    #[test]
    fn span_running_to_the_end_is_closed() {
        assert_eq!(
            bio_to_spans(&labels(&["O", "B-LOC", "I-LOC"])),
            vec![(1, 3, "LOC".to_string())]
        );
    }

    proptest! {
        // Random non-overlapping segments with optional per-kind values
        // must survive the encode/decode round trip on every channel.
        #[test]
        fn round_trips_per_kind(
            len in 1usize..12,
            seed_spans in proptest::collection::vec((0usize..12, 1usize..4, 0u8..3, 0u8..3), 0..4)
        ) {
            let mut utt = utterance(0, Speaker::Guide, &vec!["w"; len]);
            let mut cursor = 0usize;
            for (gap, width, sub_pick, rel_pick) in seed_spans {
                let start = cursor + gap % 3;
                let end = (start + width).min(len);
                if start >= end {
                    continue;
                }
                let mut segment = SemanticSegment::new(start, end, "M");
                if sub_pick > 0 {
                    segment.sub = Some(format!("S{sub_pick}"));
                }
                if rel_pick > 0 {
                    segment.rel = Some(format!("R{rel_pick}"));
                }
                utt.segments.push(segment);
                cursor = end;
            }
            for kind in AttributeKind::ALL {
                let expected: Vec<(usize, usize, String)> = utt
                    .segments
                    .iter()
                    .filter_map(|segment| {
                        segment
                            .value_for(kind)
                            .map(|v| (segment.start, segment.end, v.to_string()))
                    })
                    .collect();
                let decoded = bio_to_spans(&segments_to_bio(&utt, kind));
                prop_assert_eq!(decoded, expected);
            }
        }
    }
}
