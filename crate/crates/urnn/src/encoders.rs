//! Sequence encoders over embedded velocity sequences.
//!
//! Four variants share the same contract (embedding sequence in, fixed
//! vector out) and differ in how the recurrence reads time:
//!
//! * plain — one left-to-right pass, final state out.
//! * bi — independent forward and backward passes, concatenated.
//! * u — a backward pass first summarizes the future, then a single forward
//!   pass consumes each embedding together with that future summary.
//! * ur — the u wiring applied to the time-reversed sequence.

use crate::autodiff::{Graph, Real, Value};
use crate::cells::{cell_step, BoundCell, CellState};
use crate::error::{Error, Result};
use crate::linear::BoundLinear;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EncoderVariant {
    Plain,
    Bi,
    U,
    ReversedU,
}

impl EncoderVariant {
    pub const ALL: [EncoderVariant; 4] = [
        EncoderVariant::Plain,
        EncoderVariant::Bi,
        EncoderVariant::U,
        EncoderVariant::ReversedU,
    ];

    pub fn token(self) -> &'static str {
        match self {
            EncoderVariant::Plain => "plain",
            EncoderVariant::Bi => "bi",
            EncoderVariant::U => "u",
            EncoderVariant::ReversedU => "ur",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "plain" => Ok(EncoderVariant::Plain),
            "bi" => Ok(EncoderVariant::Bi),
            "u" => Ok(EncoderVariant::U),
            "ur" | "reversed-u" => Ok(EncoderVariant::ReversedU),
            other => Err(Error::Config(format!("unknown encoder variant `{other}`"))),
        }
    }

    /// Dimension of the encoding this variant produces.
    pub fn output_dim(self, hidden_dim: usize) -> usize {
        match self {
            EncoderVariant::Bi => 2 * hidden_dim,
            _ => hidden_dim,
        }
    }
}

impl fmt::Display for EncoderVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// Fixed-size encoding of one observed trajectory.
#[derive(Debug, Clone, Copy)]
pub struct Encoding {
    pub h: Value,
    pub variant: EncoderVariant,
}

/// Embeds a velocity sequence, one linear map shared across time.
pub fn embed_sequence<F: Real>(
    g: &mut Graph<F>,
    emb: &BoundLinear,
    velocities: &[Value],
) -> Result<Vec<Value>> {
    if velocities.is_empty() {
        return Err(Error::ShapeMismatch {
            op: "embed",
            lhs: vec![0],
            rhs: vec![1],
        });
    }
    velocities.iter().map(|&v| emb.apply(g, v)).collect()
}

fn require_nonempty(embeds: &[Value]) -> Result<()> {
    if embeds.is_empty() {
        return Err(Error::ShapeMismatch {
            op: "encode",
            lhs: vec![0],
            rhs: vec![1],
        });
    }
    Ok(())
}

/// Left-to-right unroll from a zero state; returns the final hidden state.
pub fn encode_plain<F: Real>(
    g: &mut Graph<F>,
    cell: &BoundCell,
    embeds: &[Value],
) -> Result<Encoding> {
    require_nonempty(embeds)?;
    let mut state = CellState::zeros(g, cell.kind, cell.hidden_dim);
    for &e in embeds {
        state = cell_step(g, cell, &state, e)?;
    }
    Ok(Encoding {
        h: state.h,
        variant: EncoderVariant::Plain,
    })
}

/// Two independent passes (forward over the sequence, backward over its
/// reversal), fused by concatenation.
pub fn encode_bi<F: Real>(
    g: &mut Graph<F>,
    fwd: &BoundCell,
    bwd: &BoundCell,
    embeds: &[Value],
) -> Result<Encoding> {
    require_nonempty(embeds)?;
    if fwd.hidden_dim != bwd.hidden_dim {
        return Err(Error::ShapeMismatch {
            op: "encode_bi",
            lhs: vec![fwd.hidden_dim],
            rhs: vec![bwd.hidden_dim],
        });
    }
    let mut f = CellState::zeros(g, fwd.kind, fwd.hidden_dim);
    for &e in embeds {
        f = cell_step(g, fwd, &f, e)?;
    }
    let mut b = CellState::zeros(g, bwd.kind, bwd.hidden_dim);
    for &e in embeds.iter().rev() {
        b = cell_step(g, bwd, &b, e)?;
    }
    let h = g.concat(f.h, b.h, 0)?;
    Ok(Encoding {
        h,
        variant: EncoderVariant::Bi,
    })
}

/// Backward summarization pass, then a forward pass over
/// `[embed, future-summary]` pairs.
///
/// The backward state paired with the embedding at step `t` has consumed
/// exactly the embeddings after `t`; the pair at the last step gets the zero
/// initial state. The final forward state is the encoding.
pub fn encode_u<F: Real>(
    g: &mut Graph<F>,
    bwd: &BoundCell,
    fwd: &BoundCell,
    embeds: &[Value],
) -> Result<Encoding> {
    require_nonempty(embeds)?;
    if fwd.input_dim != bwd.input_dim + bwd.hidden_dim || fwd.hidden_dim != bwd.hidden_dim {
        return Err(Error::ShapeMismatch {
            op: "encode_u",
            lhs: vec![fwd.input_dim, fwd.hidden_dim],
            rhs: vec![bwd.input_dim + bwd.hidden_dim, bwd.hidden_dim],
        });
    }
    let t_len = embeds.len();
    // states_rev[j] has consumed the last j embeddings; the summary paired
    // with embeds[k] is states_rev[t_len - 1 - k]
    let mut states_rev = Vec::with_capacity(t_len);
    let mut b = CellState::zeros(g, bwd.kind, bwd.hidden_dim);
    states_rev.push(b);
    for i in (1..t_len).rev() {
        b = cell_step(g, bwd, &b, embeds[i])?;
        states_rev.push(b);
    }
    let mut f = CellState::zeros(g, fwd.kind, fwd.hidden_dim);
    for (k, &e) in embeds.iter().enumerate() {
        let future = states_rev[t_len - 1 - k].h;
        let joint = g.concat(e, future, 0)?;
        f = cell_step(g, fwd, &f, joint)?;
    }
    Ok(Encoding {
        h: f.h,
        variant: EncoderVariant::U,
    })
}

/// The u encoder with its passes inverted: summarize the past first, then
/// read the sequence backwards conditioned on that summary. Equivalent to
/// running [`encode_u`] on the reversed sequence.
pub fn encode_reversed_u<F: Real>(
    g: &mut Graph<F>,
    bwd: &BoundCell,
    fwd: &BoundCell,
    embeds: &[Value],
) -> Result<Encoding> {
    let reversed: Vec<Value> = embeds.iter().rev().copied().collect();
    let enc = encode_u(g, bwd, fwd, &reversed)?;
    Ok(Encoding {
        h: enc.h,
        variant: EncoderVariant::ReversedU,
    })
}

/// Cells backing one encoder instance.
#[derive(Debug, Clone, Copy)]
pub enum BoundEncoder {
    Plain(BoundCell),
    Bi { fwd: BoundCell, bwd: BoundCell },
    U { bwd: BoundCell, fwd: BoundCell },
    ReversedU { bwd: BoundCell, fwd: BoundCell },
}

impl BoundEncoder {
    pub fn variant(&self) -> EncoderVariant {
        match self {
            BoundEncoder::Plain(_) => EncoderVariant::Plain,
            BoundEncoder::Bi { .. } => EncoderVariant::Bi,
            BoundEncoder::U { .. } => EncoderVariant::U,
            BoundEncoder::ReversedU { .. } => EncoderVariant::ReversedU,
        }
    }

    pub fn encode<F: Real>(&self, g: &mut Graph<F>, embeds: &[Value]) -> Result<Encoding> {
        match self {
            BoundEncoder::Plain(cell) => encode_plain(g, cell, embeds),
            BoundEncoder::Bi { fwd, bwd } => encode_bi(g, fwd, bwd, embeds),
            BoundEncoder::U { bwd, fwd } => encode_u(g, bwd, fwd, embeds),
            BoundEncoder::ReversedU { bwd, fwd } => encode_reversed_u(g, bwd, fwd, embeds),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::{gradcheck, Tensor};
    use crate::cells::{CellKind, CellParams};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bind_embeds(g: &mut Graph, seq: &[Vec<f64>]) -> Vec<Value> {
        seq.iter()
            .map(|e| g.input(vec![e.len()], e.clone()).unwrap())
            .collect()
    }

    fn random_seq(rng: &mut impl Rng, t: usize, dim: usize) -> Vec<Vec<f64>> {
        (0..t)
            .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect()
    }

    #[test]
    fn plain_zero_params_stays_zero() {
        let params = CellParams::<f64>::zeros(CellKind::Gru, 2, 4);
        let mut g = Graph::new();
        let cell = params.bind(&mut g);
        let embeds = bind_embeds(&mut g, &random_seq(&mut ChaCha8Rng::seed_from_u64(0), 3, 2));
        let enc = encode_plain(&mut g, &cell, &embeds).unwrap();
        assert_eq!(g.value(enc.h), &[0.0; 4]);
    }

    #[test]
    fn plain_single_step_equals_cell_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let params = CellParams::<f64>::init(CellKind::Lstm, 2, 4, &mut rng);
        let e0 = vec![0.4, -0.9];

        let mut g = Graph::new();
        let cell = params.bind(&mut g);
        let embeds = bind_embeds(&mut g, std::slice::from_ref(&e0));
        let enc = encode_plain(&mut g, &cell, &embeds).unwrap();

        let mut g2 = Graph::new();
        let cell2 = params.bind(&mut g2);
        let state = CellState::zeros(&mut g2, CellKind::Lstm, 4);
        let x = g2.input(vec![2], e0).unwrap();
        let step = cell_step(&mut g2, &cell2, &state, x).unwrap();

        assert_eq!(g.value(enc.h), g2.value(step.h));
    }

    #[test]
    fn bi_equals_concat_of_two_plain_passes() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let t = rng.random_range(1..7);
            let fwd = CellParams::<f64>::init(CellKind::Gru, 2, 3, &mut rng);
            let bwd = CellParams::<f64>::init(CellKind::Gru, 2, 3, &mut rng);
            let seq = random_seq(&mut rng, t, 2);

            let mut g = Graph::new();
            let (bf, bb) = (fwd.bind(&mut g), bwd.bind(&mut g));
            let embeds = bind_embeds(&mut g, &seq);
            let enc = encode_bi(&mut g, &bf, &bb, &embeds).unwrap();

            let mut g2 = Graph::new();
            let (bf2, bb2) = (fwd.bind(&mut g2), bwd.bind(&mut g2));
            let embeds2 = bind_embeds(&mut g2, &seq);
            let rev: Vec<Value> = embeds2.iter().rev().copied().collect();
            let ef = encode_plain(&mut g2, &bf2, &embeds2).unwrap();
            let eb = encode_plain(&mut g2, &bb2, &rev).unwrap();
            let expect: Vec<f64> = g2
                .value(ef.h)
                .iter()
                .chain(g2.value(eb.h))
                .copied()
                .collect();

            assert_eq!(g.value(enc.h), &expect[..]);
            assert_eq!(g.value(enc.h).len(), 6);
        }
    }

    #[test]
    fn bi_palindrome_with_shared_params_has_equal_halves() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let cell = CellParams::<f64>::init(CellKind::Gru, 2, 3, &mut rng);
        let a = vec![0.3, -0.2];
        let b = vec![-0.5, 0.8];
        let seq = vec![a.clone(), b.clone(), a.clone()];
        let mut g = Graph::new();
        let (bf, bb) = (cell.bind(&mut g), cell.bind(&mut g));
        let embeds = bind_embeds(&mut g, &seq);
        let enc = encode_bi(&mut g, &bf, &bb, &embeds).unwrap();
        let out = g.value(enc.h);
        assert_eq!(&out[..3], &out[3..]);
    }

    #[test]
    fn bi_rejects_mismatched_hidden_dims() {
        let fwd = CellParams::<f64>::zeros(CellKind::Gru, 2, 3);
        let bwd = CellParams::<f64>::zeros(CellKind::Gru, 2, 4);
        let mut g = Graph::new();
        let (bf, bb) = (fwd.bind(&mut g), bwd.bind(&mut g));
        let embeds = bind_embeds(&mut g, &random_seq(&mut ChaCha8Rng::seed_from_u64(0), 2, 2));
        assert!(encode_bi(&mut g, &bf, &bb, &embeds).is_err());
    }

    #[test]
    fn u_single_step_reads_zero_future() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let bwd = CellParams::<f64>::init(CellKind::Gru, 2, 3, &mut rng);
        let fwd = CellParams::<f64>::init(CellKind::Gru, 5, 3, &mut rng);
        let e0 = vec![0.6, -0.1];

        let mut g = Graph::new();
        let (bb, bf) = (bwd.bind(&mut g), fwd.bind(&mut g));
        let embeds = bind_embeds(&mut g, std::slice::from_ref(&e0));
        let enc = encode_u(&mut g, &bb, &bf, &embeds).unwrap();

        // plain pass over the zero-padded input [e0, 0, 0, 0]
        let mut g2 = Graph::new();
        let bf2 = fwd.bind(&mut g2);
        let padded = vec![vec![0.6, -0.1, 0.0, 0.0, 0.0]];
        let embeds2 = bind_embeds(&mut g2, &padded);
        let plain = encode_plain(&mut g2, &bf2, &embeds2).unwrap();

        assert_eq!(g.value(enc.h), g2.value(plain.h));
    }

    #[test]
    fn u_with_zero_backward_weights_degenerates_to_padded_plain() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let bwd = CellParams::<f64>::zeros(CellKind::Gru, 2, 3);
        let fwd = CellParams::<f64>::init(CellKind::Gru, 5, 3, &mut rng);
        let seq = random_seq(&mut rng, 4, 2);

        let mut g = Graph::new();
        let (bb, bf) = (bwd.bind(&mut g), fwd.bind(&mut g));
        let embeds = bind_embeds(&mut g, &seq);
        let enc = encode_u(&mut g, &bb, &bf, &embeds).unwrap();

        let mut g2 = Graph::new();
        let bf2 = fwd.bind(&mut g2);
        let padded: Vec<Vec<f64>> = seq
            .iter()
            .map(|e| {
                let mut p = e.clone();
                p.extend_from_slice(&[0.0, 0.0, 0.0]);
                p
            })
            .collect();
        let embeds2 = bind_embeds(&mut g2, &padded);
        let plain = encode_plain(&mut g2, &bf2, &embeds2).unwrap();
        assert_eq!(g.value(enc.h), g2.value(plain.h));
    }

    /// The backward pass at the pair for step t must have consumed exactly
    /// the embeddings after t. Enumerating the recurrences by hand for T=3:
    /// summaries s3 = 0, s2 = step_b(s3, e3), s1 = step_b(s2, e2), and the
    /// forward chain consumes ([e1,s1], [e2,s2], [e3,s3]).
    #[test]
    fn u_index_alignment_trace_t3() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let bwd = CellParams::<f64>::init(CellKind::Gru, 2, 3, &mut rng);
        let fwd = CellParams::<f64>::init(CellKind::Gru, 5, 3, &mut rng);
        let seq = random_seq(&mut rng, 3, 2);

        let mut g = Graph::new();
        let (bb, bf) = (bwd.bind(&mut g), fwd.bind(&mut g));
        let embeds = bind_embeds(&mut g, &seq);
        let enc = encode_u(&mut g, &bb, &bf, &embeds).unwrap();

        let mut g2 = Graph::new();
        let (bb2, bf2) = (bwd.bind(&mut g2), fwd.bind(&mut g2));
        let e = bind_embeds(&mut g2, &seq);
        let s3 = CellState::zeros(&mut g2, CellKind::Gru, 3);
        let s2 = cell_step(&mut g2, &bb2, &s3, e[2]).unwrap();
        let s1 = cell_step(&mut g2, &bb2, &s2, e[1]).unwrap();
        let f0 = CellState::zeros(&mut g2, CellKind::Gru, 3);
        let in1 = g2.concat(e[0], s1.h, 0).unwrap();
        let f1 = cell_step(&mut g2, &bf2, &f0, in1).unwrap();
        let in2 = g2.concat(e[1], s2.h, 0).unwrap();
        let f2 = cell_step(&mut g2, &bf2, &f1, in2).unwrap();
        let in3 = g2.concat(e[2], s3.h, 0).unwrap();
        let f3 = cell_step(&mut g2, &bf2, &f2, in3).unwrap();

        assert_eq!(g.value(enc.h), g2.value(f3.h));
    }

    #[test]
    fn reversed_u_equals_u_on_reversed_sequence() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let bwd = CellParams::<f64>::init(CellKind::Lstm, 2, 3, &mut rng);
        let fwd = CellParams::<f64>::init(CellKind::Lstm, 5, 3, &mut rng);
        let seq = random_seq(&mut rng, 5, 2);

        let mut g = Graph::new();
        let (bb, bf) = (bwd.bind(&mut g), fwd.bind(&mut g));
        let embeds = bind_embeds(&mut g, &seq);
        let ur = encode_reversed_u(&mut g, &bb, &bf, &embeds).unwrap();

        let mut g2 = Graph::new();
        let (bb2, bf2) = (bwd.bind(&mut g2), fwd.bind(&mut g2));
        let rev_seq: Vec<Vec<f64>> = seq.iter().rev().cloned().collect();
        let embeds2 = bind_embeds(&mut g2, &rev_seq);
        let u = encode_u(&mut g2, &bb2, &bf2, &embeds2).unwrap();

        assert_eq!(g.value(ur.h), g2.value(u.h));

        // T=1: both directions coincide
        let mut g3 = Graph::new();
        let (bb3, bf3) = (bwd.bind(&mut g3), fwd.bind(&mut g3));
        let one = bind_embeds(&mut g3, &seq[..1]);
        let a = encode_u(&mut g3, &bb3, &bf3, &one).unwrap();
        let b = encode_reversed_u(&mut g3, &bb3, &bf3, &one).unwrap();
        assert_eq!(g3.value(a.h).to_vec(), g3.value(b.h).to_vec());
    }

    #[test]
    fn u_and_reversed_u_differ_on_generic_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let mut differing = 0;
        let trials = 100;
        for _ in 0..trials {
            let bwd = CellParams::<f64>::init(CellKind::Gru, 2, 3, &mut rng);
            let fwd = CellParams::<f64>::init(CellKind::Gru, 5, 3, &mut rng);
            let seq = random_seq(&mut rng, 4, 2);
            let mut g = Graph::new();
            let (bb, bf) = (bwd.bind(&mut g), fwd.bind(&mut g));
            let embeds = bind_embeds(&mut g, &seq);
            let u = encode_u(&mut g, &bb, &bf, &embeds).unwrap();
            let r = encode_reversed_u(&mut g, &bb, &bf, &embeds).unwrap();
            let du: Vec<f64> = g.value(u.h).to_vec();
            let dr: Vec<f64> = g.value(r.h).to_vec();
            if du
                .iter()
                .zip(&dr)
                .any(|(a, b)| (a - b).abs() > 1e-9)
            {
                differing += 1;
            }
        }
        assert!(differing >= 95, "only {differing}/{trials} differed");
    }

    #[test]
    fn dimension_contract_per_variant() {
        let h = 4;
        assert_eq!(EncoderVariant::Plain.output_dim(h), 4);
        assert_eq!(EncoderVariant::U.output_dim(h), 4);
        assert_eq!(EncoderVariant::ReversedU.output_dim(h), 4);
        assert_eq!(EncoderVariant::Bi.output_dim(h), 8);
    }

    #[test]
    fn gradient_reaches_every_embedding() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..10 {
            let t = rng.random_range(2..6);
            let seq = random_seq(&mut rng, t, 2);
            let plain_cell = CellParams::<f64>::init(CellKind::Gru, 2, 3, &mut rng);
            let bwd = CellParams::<f64>::init(CellKind::Gru, 2, 3, &mut rng);
            let fwd = CellParams::<f64>::init(CellKind::Gru, 5, 3, &mut rng);

            for variant in EncoderVariant::ALL {
                let mut g = Graph::new();
                let enc = match variant {
                    EncoderVariant::Plain => BoundEncoder::Plain(plain_cell.bind(&mut g)),
                    EncoderVariant::Bi => BoundEncoder::Bi {
                        fwd: plain_cell.bind(&mut g),
                        bwd: bwd.bind(&mut g),
                    },
                    EncoderVariant::U => BoundEncoder::U {
                        bwd: bwd.bind(&mut g),
                        fwd: fwd.bind(&mut g),
                    },
                    EncoderVariant::ReversedU => BoundEncoder::ReversedU {
                        bwd: bwd.bind(&mut g),
                        fwd: fwd.bind(&mut g),
                    },
                };
                let embeds: Vec<Value> = seq
                    .iter()
                    .map(|e| {
                        g.leaf(&Tensor::new(vec![2], e.clone()).unwrap().with_grad())
                    })
                    .collect();
                let out = enc.encode(&mut g, &embeds).unwrap();
                let loss = g.sum(out.h);
                g.backward(loss).unwrap();
                for (i, &e) in embeds.iter().enumerate() {
                    assert!(
                        g.grad(e).iter().any(|&v| v.abs() > 1e-12),
                        "{variant}: zero gradient at embed {i} (T={t})"
                    );
                }
            }
        }
    }

    /// With the forward cell blind to the direct embedding half of its
    /// input, any gradient reaching the last embedding must have travelled
    /// through the backward summaries.
    #[test]
    fn u_gradient_flows_through_backward_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let bwd = CellParams::<f64>::init(CellKind::Gru, 2, 3, &mut rng);
        let mut fwd = CellParams::<f64>::init(CellKind::Gru, 5, 3, &mut rng);
        // zero the w_ih rows that read the embedding part (rows 0..2)
        for row in 0..2 {
            for col in 0..9 {
                fwd.w_ih.data_mut()[row * 9 + col] = 0.0;
            }
        }
        let seq = random_seq(&mut rng, 4, 2);
        let mut g = Graph::new();
        let (bb, bf) = (bwd.bind(&mut g), fwd.bind(&mut g));
        let embeds: Vec<Value> = seq
            .iter()
            .map(|e| g.leaf(&Tensor::new(vec![2], e.clone()).unwrap().with_grad()))
            .collect();
        let enc = encode_u(&mut g, &bb, &bf, &embeds).unwrap();
        let loss = g.sum(enc.h);
        g.backward(loss).unwrap();
        let last = g.grad(*embeds.last().unwrap());
        assert!(last.iter().any(|&v| v.abs() > 1e-12));

        // the same gradient matches finite differences
        let flat: Vec<f64> = seq.iter().flatten().copied().collect();
        let analytic: Vec<f64> = embeds.iter().flat_map(|&v| g.grad(v).to_vec()).collect();
        let err = gradcheck::check(
            |v| {
                let mut g = Graph::new();
                let (bb, bf) = (bwd.bind(&mut g), fwd.bind(&mut g));
                let embeds: Vec<Value> = v
                    .chunks(2)
                    .map(|c| g.input(vec![2], c.to_vec()).unwrap())
                    .collect();
                let enc = encode_u(&mut g, &bb, &bf, &embeds).unwrap();
                g.value(enc.h).iter().sum()
            },
            &flat,
            &analytic,
            1e-5,
        );
        assert!(err < 1e-4, "max rel err {err}");
    }

    #[test]
    fn empty_sequence_is_an_error() {
        let cell = CellParams::<f64>::zeros(CellKind::Gru, 2, 3);
        let mut g = Graph::new();
        let b = cell.bind(&mut g);
        assert!(encode_plain(&mut g, &b, &[]).is_err());
    }
}
