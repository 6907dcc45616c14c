//! Forward and backward passes of the sequence autoencoder.
//!
//! Encoder: shared token embedding, forward and backward LSTMs, and
//! `z = latent · tanh([h_f; h_b])` from the two final states.
//! Decoder: LSTM started from `(h, c) = (z, 0)` and `SOS`, bilinear
//! attention over the encoder states, `tanh` combiner and a vocabulary
//! projection.

use rand::Rng;

use super::params::{LstmParams, ModelParameters};
use super::tensor::{argmax, dot, log_softmax, sigmoid, softmax, Matrix, Scalar};
use super::NeuralError;
use crate::corpus::SOS;

/// Intermediate values of one LSTM step kept for backpropagation.
#[derive(Debug, Clone)]
struct LstmCache<T> {
    xh: Vec<T>,
    c_prev: Vec<T>,
    i: Vec<T>,
    f: Vec<T>,
    o: Vec<T>,
    g: Vec<T>,
    tanh_c: Vec<T>,
    pub h: Vec<T>,
    pub c: Vec<T>,
}

fn lstm_forward<T: Scalar>(p: &LstmParams<T>, x: &[T], h: &[T], c: &[T]) -> LstmCache<T> {
    let hd = p.hidden_dim();
    let mut xh = Vec::with_capacity(x.len() + h.len());
    xh.extend_from_slice(x);
    xh.extend_from_slice(h);
    let mut a = p.weight.matvec(&xh);
    for (ai, &bi) in a.iter_mut().zip(&p.bias) {
        *ai += bi;
    }
    let i: Vec<T> = a[..hd].iter().map(|&v| sigmoid(v)).collect();
    let f: Vec<T> = a[hd..2 * hd].iter().map(|&v| sigmoid(v)).collect();
    let o: Vec<T> = a[2 * hd..3 * hd].iter().map(|&v| sigmoid(v)).collect();
    let g: Vec<T> = a[3 * hd..].iter().map(|&v| v.tanh()).collect();
    let c_new: Vec<T> = (0..hd).map(|k| f[k] * c[k] + i[k] * g[k]).collect();
    let tanh_c: Vec<T> = c_new.iter().map(|v| v.tanh()).collect();
    let h_new: Vec<T> = (0..hd).map(|k| o[k] * tanh_c[k]).collect();
    LstmCache {
        xh,
        c_prev: c.to_vec(),
        i,
        f,
        o,
        g,
        tanh_c,
        h: h_new,
        c: c_new,
    }
}

/// Gradients flowing out of one LSTM step.
struct LstmGrads<T> {
    dx: Vec<T>,
    dh_prev: Vec<T>,
    dc_prev: Vec<T>,
}

fn lstm_backward<T: Scalar>(
    p: &LstmParams<T>,
    cache: &LstmCache<T>,
    dh: &[T],
    dc_next: &[T],
    grads: &mut LstmParams<T>,
) -> LstmGrads<T> {
    let hd = p.hidden_dim();
    let one = T::one();
    let mut da = vec![T::zero(); 4 * hd];
    let mut dc_prev = vec![T::zero(); hd];
    for k in 0..hd {
        let (i, f, o, g, tc) = (cache.i[k], cache.f[k], cache.o[k], cache.g[k], cache.tanh_c[k]);
        let d_o = dh[k] * tc;
        let dc = dc_next[k] + dh[k] * o * (one - tc * tc);
        let di = dc * g;
        let df = dc * cache.c_prev[k];
        let dg = dc * i;
        dc_prev[k] = dc * f;
        da[k] = di * i * (one - i);
        da[hd + k] = df * f * (one - f);
        da[2 * hd + k] = d_o * o * (one - o);
        da[3 * hd + k] = dg * (one - g * g);
    }
    grads.weight.add_outer(&da, &cache.xh);
    for (gb, &d) in grads.bias.iter_mut().zip(&da) {
        *gb += d;
    }
    let dxh = p.weight.t_matvec(&da);
    let input_dim = p.input_dim();
    LstmGrads {
        dx: dxh[..input_dim].to_vec(),
        dh_prev: dxh[input_dim..].to_vec(),
        dc_prev,
    }
}

/// One LSTM step: returns `(h', c')`.
pub fn lstm_step<T: Scalar>(
    x: &[T],
    h: &[T],
    c: &[T],
    params: &LstmParams<T>,
) -> Result<(Vec<T>, Vec<T>), NeuralError> {
    let hd = params.hidden_dim();
    if x.len() != params.input_dim() || h.len() != hd || c.len() != hd {
        return Err(NeuralError::ShapeMismatch(format!(
            "lstm_step expects x[{}], h[{hd}], c[{hd}], got x[{}], h[{}], c[{}]",
            params.input_dim(),
            x.len(),
            h.len(),
            c.len()
        )));
    }
    let cache = lstm_forward(params, x, h, c);
    Ok((cache.h, cache.c))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderOutput<T> {
    /// Per source position, `[h_f; h_b]`.
    pub states: Vec<Vec<T>>,
    pub z: Vec<T>,
}

struct EncoderCache<T> {
    inputs: Vec<usize>,
    fwd: Vec<LstmCache<T>>,
    /// Indexed by source position (run in reverse order).
    bwd: Vec<LstmCache<T>>,
    /// `tanh([h_f; h_b])` of the final states.
    u: Vec<T>,
}

fn check_tokens<T: Scalar>(params: &ModelParameters<T>, seq: &[usize]) -> Result<(), NeuralError> {
    if let Some(&bad) = seq.iter().find(|&&t| t >= params.vocab_size()) {
        return Err(NeuralError::ShapeMismatch(format!(
            "token id {bad} outside vocabulary of {}",
            params.vocab_size()
        )));
    }
    Ok(())
}

fn encode_cached<T: Scalar>(
    params: &ModelParameters<T>,
    seq: &[usize],
) -> Result<(EncoderOutput<T>, EncoderCache<T>), NeuralError> {
    if seq.is_empty() {
        return Err(NeuralError::EmptySequence);
    }
    check_tokens(params, seq)?;
    let hd = params.hidden_dim();
    let n = seq.len();
    let zeros = vec![T::zero(); hd];

    let mut fwd: Vec<LstmCache<T>> = Vec::with_capacity(n);
    for (t, &tok) in seq.iter().enumerate() {
        let (h, c) = if t == 0 {
            (&zeros, &zeros)
        } else {
            (&fwd[t - 1].h, &fwd[t - 1].c)
        };
        let step = lstm_forward(&params.encoder_fwd, params.embedding.row(tok), h, c);
        fwd.push(step);
    }
    let mut bwd_rev: Vec<LstmCache<T>> = Vec::with_capacity(n);
    for (k, &tok) in seq.iter().rev().enumerate() {
        let (h, c) = if k == 0 {
            (&zeros, &zeros)
        } else {
            (&bwd_rev[k - 1].h, &bwd_rev[k - 1].c)
        };
        let step = lstm_forward(&params.encoder_bwd, params.embedding.row(tok), h, c);
        bwd_rev.push(step);
    }
    bwd_rev.reverse();
    let bwd = bwd_rev;

    let states: Vec<Vec<T>> = (0..n)
        .map(|t| {
            let mut s = fwd[t].h.clone();
            s.extend_from_slice(&bwd[t].h);
            s
        })
        .collect();
    let mut last = fwd[n - 1].h.clone();
    last.extend_from_slice(&bwd[0].h);
    let u: Vec<T> = last.iter().map(|v| v.tanh()).collect();
    let z = params.latent.matvec(&u);
    Ok((
        EncoderOutput { states, z },
        EncoderCache {
            inputs: seq.to_vec(),
            fwd,
            bwd,
            u,
        },
    ))
}

/// Runs the bidirectional encoder and computes the latent vector z.
pub fn encode<T: Scalar>(seq: &[usize], params: &ModelParameters<T>) -> Result<EncoderOutput<T>, NeuralError> {
    encode_cached(params, seq).map(|(out, _)| out)
}

/// Bilinear attention: `score_t = h · (P s_t)`, returns `(context, α)`.
pub fn attend<T: Scalar>(dec_h: &[T], enc_states: &[Vec<T>], projection: &Matrix<T>) -> (Vec<T>, Vec<T>) {
    let q = projection.t_matvec(dec_h);
    attend_with_query(&q, enc_states)
}

fn attend_with_query<T: Scalar>(q: &[T], enc_states: &[Vec<T>]) -> (Vec<T>, Vec<T>) {
    let scores: Vec<T> = enc_states.iter().map(|s| dot(s, q)).collect();
    let alpha = softmax(&scores);
    let mut ctx = vec![T::zero(); q.len()];
    for (a, s) in alpha.iter().zip(enc_states) {
        for (c, &v) in ctx.iter_mut().zip(s) {
            *c += *a * v;
        }
    }
    (ctx, alpha)
}

#[derive(Debug, Clone)]
pub struct DecodeStep<T> {
    pub logits: Vec<T>,
    pub h: Vec<T>,
    pub c: Vec<T>,
    pub alpha: Vec<T>,
}

struct StepCache<T> {
    input: usize,
    lstm: LstmCache<T>,
    q: Vec<T>,
    alpha: Vec<T>,
    comb_in: Vec<T>,
    comb: Vec<T>,
    probs: Vec<T>,
}

fn decode_cached<T: Scalar>(
    params: &ModelParameters<T>,
    prev: usize,
    h: &[T],
    c: &[T],
    enc: &EncoderOutput<T>,
) -> (Vec<T>, StepCache<T>) {
    let lstm = lstm_forward(&params.decoder, params.embedding.row(prev), h, c);
    let q = params.attention.t_matvec(&lstm.h);
    let (ctx, alpha) = attend_with_query(&q, &enc.states);
    let mut comb_in = ctx;
    comb_in.extend_from_slice(&lstm.h);
    let comb: Vec<T> = params.combine.matvec(&comb_in).into_iter().map(|v| v.tanh()).collect();
    let mut logits = params.output.matvec(&comb);
    for (l, &b) in logits.iter_mut().zip(&params.output_bias) {
        *l += b;
    }
    let probs = softmax(&logits);
    (
        logits,
        StepCache {
            input: prev,
            lstm,
            q,
            alpha,
            comb_in,
            comb,
            probs,
        },
    )
}

/// One decoder step from the previous token and state.
pub fn decode_step<T: Scalar>(
    prev_token: usize,
    dec_h: &[T],
    dec_c: &[T],
    enc: &EncoderOutput<T>,
    params: &ModelParameters<T>,
) -> Result<DecodeStep<T>, NeuralError> {
    check_tokens(params, &[prev_token])?;
    let hd = params.hidden_dim();
    if dec_h.len() != hd || dec_c.len() != hd {
        return Err(NeuralError::ShapeMismatch(format!("decoder state must have size {hd}")));
    }
    let (logits, cache) = decode_cached(params, prev_token, dec_h, dec_c, enc);
    Ok(DecodeStep {
        logits,
        h: cache.lstm.h,
        c: cache.lstm.c,
        alpha: cache.alpha,
    })
}

/// Mean negative log-likelihood of `target` under `softmax(logits)`.
pub fn reconstruction_loss<T: Scalar>(logits: &[Vec<T>], target: &[usize]) -> Result<T, NeuralError> {
    if logits.len() != target.len() {
        return Err(NeuralError::LengthMismatch {
            logits: logits.len(),
            target: target.len(),
        });
    }
    if target.is_empty() {
        return Ok(T::zero());
    }
    let total: T = logits
        .iter()
        .zip(target)
        .map(|(l, &t)| -log_softmax(l)[t])
        .sum();
    Ok(total / T::from_f64(target.len() as f64))
}

/// How the decoder input is chosen at steps after the first.
pub enum Feed<'a, R: Rng + ?Sized> {
    /// Always the gold previous token.
    Teacher,
    /// Always the previous step's argmax.
    Greedy,
    /// Gold token with probability `p`, argmax otherwise.
    Scheduled { p: f64, rng: &'a mut R },
}

/// A full forward pass with everything needed for [`backward`].
pub struct ForwardPass<T> {
    pub encoder: EncoderOutput<T>,
    enc_cache: EncoderCache<T>,
    steps: Vec<StepCache<T>>,
    /// Tokens fed to the decoder at each step (first is SOS).
    pub decoder_inputs: Vec<usize>,
    /// Argmax prediction at each step.
    pub predictions: Vec<usize>,
    /// Sum over steps of the token negative log-likelihood.
    pub loss_sum: T,
}

impl<T: Scalar> ForwardPass<T> {
    pub fn steps(&self) -> usize {
        self.steps.len()
    }

    pub fn mean_loss(&self) -> T {
        self.loss_sum / T::from_f64(self.steps.len().max(1) as f64)
    }

    pub fn attention(&self) -> Vec<Vec<T>> {
        self.steps.iter().map(|s| s.alpha.clone()).collect()
    }
}

/// Encodes `input` and decodes `target.len()` steps, scoring each against
/// `target`.
pub fn forward<T: Scalar, R: Rng + ?Sized>(
    params: &ModelParameters<T>,
    input: &[usize],
    target: &[usize],
    mut feed: Feed<'_, R>,
) -> Result<ForwardPass<T>, NeuralError> {
    check_tokens(params, target)?;
    let (encoder, enc_cache) = encode_cached(params, input)?;
    let mut h = encoder.z.clone();
    let mut c = vec![T::zero(); params.hidden_dim()];
    let mut prev = SOS;
    let mut steps = Vec::with_capacity(target.len());
    let mut decoder_inputs = Vec::with_capacity(target.len());
    let mut predictions = Vec::with_capacity(target.len());
    let mut loss_sum = T::zero();

    for (k, &gold) in target.iter().enumerate() {
        if k > 0 {
            let predicted = predictions[k - 1];
            let gold_prev = target[k - 1];
            prev = match &mut feed {
                Feed::Teacher => gold_prev,
                Feed::Greedy => predicted,
                Feed::Scheduled { p, rng } => {
                    if rng.random::<f64>() < *p {
                        gold_prev
                    } else {
                        predicted
                    }
                }
            };
        }
        decoder_inputs.push(prev);
        let (logits, cache) = decode_cached(params, prev, &h, &c, &encoder);
        loss_sum += -log_softmax(&logits)[gold];
        predictions.push(argmax(&logits));
        h = cache.lstm.h.clone();
        c = cache.lstm.c.clone();
        steps.push(cache);
    }

    Ok(ForwardPass {
        encoder,
        enc_cache,
        steps,
        decoder_inputs,
        predictions,
        loss_sum,
    })
}

/// Accumulates `scale · ∂(loss_sum)/∂θ` into `grads`.
pub fn backward<T: Scalar>(
    params: &ModelParameters<T>,
    pass: &ForwardPass<T>,
    target: &[usize],
    scale: T,
    grads: &mut ModelParameters<T>,
) {
    let hd = params.hidden_dim();
    let n_src = pass.enc_cache.inputs.len();
    let one = T::one();
    let mut d_states = vec![vec![T::zero(); 2 * hd]; n_src];
    let mut dh_next = vec![T::zero(); hd];
    let mut dc_next = vec![T::zero(); hd];

    for (k, step) in pass.steps.iter().enumerate().rev() {
        let mut dlogits: Vec<T> = step.probs.iter().map(|&p| p * scale).collect();
        dlogits[target[k]] -= scale;

        grads.output.add_outer(&dlogits, &step.comb);
        for (gb, &d) in grads.output_bias.iter_mut().zip(&dlogits) {
            *gb += d;
        }
        let dcomb = params.output.t_matvec(&dlogits);
        let dpre: Vec<T> = dcomb
            .iter()
            .zip(&step.comb)
            .map(|(&d, &c)| d * (one - c * c))
            .collect();
        grads.combine.add_outer(&dpre, &step.comb_in);
        let dcomb_in = params.combine.t_matvec(&dpre);
        let dctx = &dcomb_in[..2 * hd];
        let mut dh: Vec<T> = dcomb_in[2 * hd..]
            .iter()
            .zip(&dh_next)
            .map(|(&a, &b)| a + b)
            .collect();

        // context = Σ α_t s_t, α = softmax(s_t · q)
        let dalpha: Vec<T> = pass.encoder.states.iter().map(|s| dot(dctx, s)).collect();
        let weighted: T = step.alpha.iter().zip(&dalpha).map(|(&a, &d)| a * d).sum();
        let mut dq = vec![T::zero(); 2 * hd];
        for t in 0..n_src {
            let a = step.alpha[t];
            let dscore = a * (dalpha[t] - weighted);
            let s = &pass.encoder.states[t];
            let ds = &mut d_states[t];
            for j in 0..2 * hd {
                ds[j] += a * dctx[j] + dscore * step.q[j];
                dq[j] += dscore * s[j];
            }
        }
        // q = Pᵀ h
        grads.attention.add_outer(&step.lstm.h, &dq);
        let dh_attn = params.attention.matvec(&dq);
        for (a, b) in dh.iter_mut().zip(dh_attn) {
            *a += b;
        }

        let g = lstm_backward(&params.decoder, &step.lstm, &dh, &dc_next, &mut grads.decoder);
        for (e, d) in grads.embedding.row_mut(step.input).iter_mut().zip(&g.dx) {
            *e += *d;
        }
        dh_next = g.dh_prev;
        dc_next = g.dc_prev;
    }

    // h_0 = z
    let dz = dh_next;
    let cache = &pass.enc_cache;
    grads.latent.add_outer(&dz, &cache.u);
    let du = params.latent.t_matvec(&dz);
    let dlast: Vec<T> = du.iter().zip(&cache.u).map(|(&d, &u)| d * (one - u * u)).collect();

    let mut dh = vec![T::zero(); hd];
    let mut dc = vec![T::zero(); hd];
    for t in (0..n_src).rev() {
        let mut dh_t: Vec<T> = d_states[t][..hd].iter().zip(&dh).map(|(&a, &b)| a + b).collect();
        if t == n_src - 1 {
            for (a, &b) in dh_t.iter_mut().zip(&dlast[..hd]) {
                *a += b;
            }
        }
        let g = lstm_backward(&params.encoder_fwd, &cache.fwd[t], &dh_t, &dc, &mut grads.encoder_fwd);
        for (e, d) in grads.embedding.row_mut(cache.inputs[t]).iter_mut().zip(&g.dx) {
            *e += *d;
        }
        dh = g.dh_prev;
        dc = g.dc_prev;
    }

    let mut dh = vec![T::zero(); hd];
    let mut dc = vec![T::zero(); hd];
    #[allow(clippy::needless_range_loop)]
    for t in 0..n_src {
        let mut dh_t: Vec<T> = d_states[t][hd..].iter().zip(&dh).map(|(&a, &b)| a + b).collect();
        if t == 0 {
            for (a, &b) in dh_t.iter_mut().zip(&dlast[hd..]) {
                *a += b;
            }
        }
        let g = lstm_backward(&params.encoder_bwd, &cache.bwd[t], &dh_t, &dc, &mut grads.encoder_bwd);
        for (e, d) in grads.embedding.row_mut(cache.inputs[t]).iter_mut().zip(&g.dx) {
            *e += *d;
        }
        dh = g.dh_prev;
        dc = g.dc_prev;
    }
}

/// Result of free-running greedy decoding.
#[derive(Debug, Clone, PartialEq)]
pub struct GreedyDecode<T> {
    /// Emitted token ids, including the final EOS when one was produced.
    pub tokens: Vec<usize>,
    /// Attention weights per emitted token, over encoder positions.
    pub attention: Vec<Vec<T>>,
    pub z: Vec<T>,
}

/// Decodes greedily until `eos` is emitted or `max_steps` is reached.
pub fn greedy_decode<T: Scalar>(
    params: &ModelParameters<T>,
    input: &[usize],
    eos: usize,
    max_steps: usize,
) -> Result<GreedyDecode<T>, NeuralError> {
    let enc = encode(input, params)?;
    let mut h = enc.z.clone();
    let mut c = vec![T::zero(); params.hidden_dim()];
    let mut prev = SOS;
    let mut tokens = Vec::new();
    let mut attention = Vec::new();
    for _ in 0..max_steps {
        let (logits, cache) = decode_cached(params, prev, &h, &c, &enc);
        let tok = argmax(&logits);
        tokens.push(tok);
        attention.push(cache.alpha);
        if tok == eos {
            break;
        }
        h = cache.lstm.h;
        c = cache.lstm.c;
        prev = tok;
    }
    Ok(GreedyDecode {
        tokens,
        attention,
        z: enc.z,
    })
}
