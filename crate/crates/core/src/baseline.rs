//! Trainable baseline classifier: a linear softmax over bag-of-n-gram
//! (token uni-gram and bi-gram) counts within the fixed encoding window,
//! trained by deterministic mini-batch gradient descent on mean
//! cross-entropy with an L2 penalty.
//!
//! The model file is a versioned text container holding the vocabulary,
//! hyperparameters, feature space, weights, bias, and seed; floating-point
//! values are stored as IEEE 754 bit patterns so save/load round-trips
//! bit-exactly.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::classify::{encode, Prediction, Vocabulary, DEFAULT_MAX_SEQUENCE_LENGTH, PAD_ID};
use crate::corpus::{Corpus, GoldExample};
use crate::text::{clean_text, tokenize};
use crate::{CueLabel, Error, Result};

const N_CLASSES: usize = 3;
const MODEL_MAGIC: &str = "cuekit-model v1";

/// Training knobs. Defaults: 4 epochs, batches of 64, learning rate 0.1,
/// L2 penalty 1e-4.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparameters {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub l2_penalty: f64,
    /// Vocabulary cut-off applied at training time.
    pub min_frequency: usize,
    pub max_sequence_length: usize,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Hyperparameters {
            epochs: 4,
            batch_size: 64,
            learning_rate: 0.1,
            l2_penalty: 1e-4,
            min_frequency: 1,
            max_sequence_length: DEFAULT_MAX_SEQUENCE_LENGTH,
        }
    }
}

/// A trained (or freshly initialized) linear softmax model.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineModel {
    vocab: Vocabulary,
    /// Observed bi-gram id pairs in feature order.
    bigrams: Vec<(u32, u32)>,
    bigram_index: BTreeMap<(u32, u32), usize>,
    /// Row-major [3 x n_features].
    weights: Vec<f64>,
    bias: [f64; 3],
    hyper: Hyperparameters,
    seed: u64,
}

/// Result of [`train_baseline`]: the model plus per-epoch mean training loss.
#[derive(Debug, Clone)]
pub struct TrainedBaseline {
    pub model: BaselineModel,
    pub loss_history: Vec<f64>,
}

impl BaselineModel {
    /// Builds an untrained model with small random weights drawn from the
    /// seed. Feature space is fixed by the vocabulary and bi-gram list.
    pub fn init(
        vocab: Vocabulary,
        bigrams: Vec<(u32, u32)>,
        hyper: Hyperparameters,
        seed: u64,
    ) -> BaselineModel {
        let bigram_index = bigrams
            .iter()
            .enumerate()
            .map(|(i, &pair)| (pair, i))
            .collect();
        let n_features = (vocab.len() - 1) + bigrams.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let weights = (0..N_CLASSES * n_features)
            .map(|_| rng.gen_range(-0.01..0.01))
            .collect();
        BaselineModel {
            vocab,
            bigrams,
            bigram_index,
            weights,
            bias: [0.0; 3],
            hyper,
            seed,
        }
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn hyperparameters(&self) -> &Hyperparameters {
        &self.hyper
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn n_features(&self) -> usize {
        (self.vocab.len() - 1) + self.bigrams.len()
    }

    /// Sparse uni+bi-gram counts of cleaned text inside the encoding window.
    fn features(&self, text: &str) -> Vec<(usize, f64)> {
        let tokens = tokenize(text);
        let encoded = encode(&tokens, &self.vocab, self.hyper.max_sequence_length);
        let window = &encoded.ids[..encoded.true_length];
        let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
        for &id in window {
            if id != PAD_ID {
                *counts.entry(id as usize - 1).or_insert(0.0) += 1.0;
            }
        }
        let base = self.vocab.len() - 1;
        for pair in window.windows(2) {
            if let Some(&idx) = self.bigram_index.get(&(pair[0], pair[1])) {
                *counts.entry(base + idx).or_insert(0.0) += 1.0;
            }
        }
        counts.into_iter().collect()
    }

    fn scores(&self, features: &[(usize, f64)]) -> [f64; 3] {
        let n = self.n_features();
        let mut scores = self.bias;
        for &(f, x) in features {
            for (c, score) in scores.iter_mut().enumerate() {
                *score += self.weights[c * n + f] * x;
            }
        }
        scores
    }

    /// Predicts cleaned, non-empty text. Probabilities are the softmax of
    /// the linear scores; ties at the argmax break by fixed label order
    /// (Guided, Directed, None).
    pub fn predict(&self, text: &str) -> Result<Prediction> {
        let cleaned = clean_text(text);
        if cleaned.is_empty() {
            return Err(Error::validation(
                "cannot predict on text that cleans to empty",
            ));
        }
        let features = self.features(&cleaned);
        let probabilities = softmax(self.scores(&features));
        let mut label = CueLabel::Guided;
        for candidate in CueLabel::ALL {
            if probabilities[candidate.index()] > probabilities[label.index()] {
                label = candidate;
            }
        }
        Ok(Prediction {
            label,
            probabilities,
            matched_entry: None,
        })
    }

    /// Regularized loss of one example: -log p(label) + (l2/2)·||W||².
    fn single_loss(&self, features: &[(usize, f64)], label: CueLabel) -> f64 {
        let probabilities = softmax(self.scores(features));
        let ce = -libm::log(probabilities[label.index()].max(f64::MIN_POSITIVE));
        ce + 0.5 * self.hyper.l2_penalty * self.weights.iter().map(|w| w * w).sum::<f64>()
    }

    /// Analytic gradient of the single-example regularized loss over the
    /// weights the example touches, plus the bias gradient.
    fn analytic_gradient(
        &self,
        features: &[(usize, f64)],
        label: CueLabel,
    ) -> (BTreeMap<(usize, usize), f64>, [f64; 3]) {
        let n = self.n_features();
        let probabilities = softmax(self.scores(features));
        let mut delta = probabilities;
        delta[label.index()] -= 1.0;
        let mut grad = BTreeMap::new();
        for &(f, x) in features {
            for (c, &d) in delta.iter().enumerate() {
                grad.insert(
                    (c, f),
                    d * x + self.hyper.l2_penalty * self.weights[c * n + f],
                );
            }
        }
        (grad, delta)
    }

    /// Compares the analytic gradient against central finite differences on
    /// every weight the example touches and on the biases, returning the
    /// maximum relative error. Relative error uses an absolute floor of 1e-3
    /// in the denominator so near-zero coordinates compare absolutely.
    pub fn gradient_check(&self, example: &GoldExample, epsilon: f64) -> f64 {
        let features = self.features(&example.text);
        let (analytic, bias_grad) = self.analytic_gradient(&features, example.label);
        let n = self.n_features();
        let mut probe = self.clone();
        let mut worst = 0.0f64;

        for (&(c, f), &a) in &analytic {
            let idx = c * n + f;
            let original = probe.weights[idx];
            probe.weights[idx] = original + epsilon;
            let up = probe.single_loss(&features, example.label);
            probe.weights[idx] = original - epsilon;
            let down = probe.single_loss(&features, example.label);
            probe.weights[idx] = original;
            let numeric = (up - down) / (2.0 * epsilon);
            worst = worst.max(relative_error(a, numeric));
        }
        for c in 0..N_CLASSES {
            let original = probe.bias[c];
            probe.bias[c] = original + epsilon;
            let up = probe.single_loss(&features, example.label);
            probe.bias[c] = original - epsilon;
            let down = probe.single_loss(&features, example.label);
            probe.bias[c] = original;
            let numeric = (up - down) / (2.0 * epsilon);
            worst = worst.max(relative_error(bias_grad[c], numeric));
        }
        worst
    }

    /// Serializes the model into its versioned text container.
    pub fn save(&self) -> String {
        let mut out = String::new();
        out.push_str(MODEL_MAGIC);
        out.push('\n');
        out.push_str(&format!("seed {}\n", self.seed));
        out.push_str(&format!("epochs {}\n", self.hyper.epochs));
        out.push_str(&format!("batch_size {}\n", self.hyper.batch_size));
        out.push_str(&format!("min_frequency {}\n", self.hyper.min_frequency));
        out.push_str(&format!(
            "max_sequence_length {}\n",
            self.hyper.max_sequence_length
        ));
        out.push_str(&format!(
            "learning_rate {:016x}\n",
            self.hyper.learning_rate.to_bits()
        ));
        out.push_str(&format!(
            "l2_penalty {:016x}\n",
            self.hyper.l2_penalty.to_bits()
        ));
        out.push_str(&format!("vocab {}\n", self.vocab.tokens().len()));
        for token in self.vocab.tokens() {
            out.push_str(token);
            out.push('\n');
        }
        out.push_str(&format!("bigrams {}\n", self.bigrams.len()));
        for &(a, b) in &self.bigrams {
            out.push_str(&format!("{a} {b}\n"));
        }
        let n = self.n_features();
        out.push_str(&format!("weights {N_CLASSES} {n}\n"));
        for c in 0..N_CLASSES {
            let row: Vec<String> = self.weights[c * n..(c + 1) * n]
                .iter()
                .map(|w| format!("{:016x}", w.to_bits()))
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        let bias: Vec<String> = self
            .bias
            .iter()
            .map(|b| format!("{:016x}", b.to_bits()))
            .collect();
        out.push_str(&format!("bias {}\n", bias.join(" ")));
        out
    }

    /// Parses a saved model container.
    pub fn load(content: &str) -> Result<BaselineModel> {
        let mut lines = content.lines().enumerate();
        let mut next = |expect: &str| -> Result<(usize, String)> {
            let (no, line) = lines.next().ok_or_else(|| {
                Error::parse(
                    0,
                    format!("unexpected end of model file, expected {expect}"),
                )
            })?;
            Ok((no + 1, line.to_string()))
        };

        let (line_no, magic) = next("header")?;
        if magic != MODEL_MAGIC {
            return Err(Error::parse(line_no, format!("bad model header {magic:?}")));
        }
        let seed = parse_field::<u64>(&mut next, "seed")?;
        let epochs = parse_field::<usize>(&mut next, "epochs")?;
        let batch_size = parse_field::<usize>(&mut next, "batch_size")?;
        let min_frequency = parse_field::<usize>(&mut next, "min_frequency")?;
        let max_sequence_length = parse_field::<usize>(&mut next, "max_sequence_length")?;
        let learning_rate = f64::from_bits(parse_hex_field(&mut next, "learning_rate")?);
        let l2_penalty = f64::from_bits(parse_hex_field(&mut next, "l2_penalty")?);

        let n_tokens = parse_field::<usize>(&mut next, "vocab")?;
        let mut tokens = Vec::with_capacity(n_tokens);
        for _ in 0..n_tokens {
            tokens.push(next("vocabulary token")?.1);
        }
        let vocab = Vocabulary::from_ordered_tokens(tokens, min_frequency)?;

        let n_bigrams = parse_field::<usize>(&mut next, "bigrams")?;
        let mut bigrams = Vec::with_capacity(n_bigrams);
        for _ in 0..n_bigrams {
            let (no, line) = next("bigram pair")?;
            let mut parts = line.split(' ');
            let a = parts
                .next()
                .and_then(|v| v.parse::<u32>().ok())
                .ok_or_else(|| Error::parse(no, "bad bigram line"))?;
            let b = parts
                .next()
                .and_then(|v| v.parse::<u32>().ok())
                .ok_or_else(|| Error::parse(no, "bad bigram line"))?;
            bigrams.push((a, b));
        }

        let (no, header) = next("weights header")?;
        let dims: Vec<usize> = header
            .strip_prefix("weights ")
            .map(|rest| rest.split(' ').filter_map(|v| v.parse().ok()).collect())
            .unwrap_or_default();
        if dims.len() != 2 || dims[0] != N_CLASSES {
            return Err(Error::parse(no, format!("bad weights header {header:?}")));
        }
        let n_features = dims[1];
        if n_features != (vocab.len() - 1) + bigrams.len() {
            return Err(Error::parse(
                no,
                "weights width disagrees with vocabulary and bigram counts",
            ));
        }
        let mut weights = Vec::with_capacity(N_CLASSES * n_features);
        for _ in 0..N_CLASSES {
            let (no, line) = next("weight row")?;
            let row: Vec<f64> = line
                .split(' ')
                .map(|w| parse_hex(no, w).map(f64::from_bits))
                .collect::<Result<_>>()?;
            if row.len() != n_features {
                return Err(Error::parse(no, "weight row has wrong width"));
            }
            weights.extend(row);
        }
        let (no, bias_line) = next("bias")?;
        let bias_vals: Vec<f64> = bias_line
            .strip_prefix("bias ")
            .ok_or_else(|| Error::parse(no, "missing bias line"))?
            .split(' ')
            .map(|w| parse_hex(no, w).map(f64::from_bits))
            .collect::<Result<_>>()?;
        if bias_vals.len() != N_CLASSES {
            return Err(Error::parse(no, "bias must have three entries"));
        }

        let bigram_index = bigrams
            .iter()
            .enumerate()
            .map(|(i, &pair)| (pair, i))
            .collect();
        Ok(BaselineModel {
            vocab,
            bigrams,
            bigram_index,
            weights,
            bias: [bias_vals[0], bias_vals[1], bias_vals[2]],
            hyper: Hyperparameters {
                epochs,
                batch_size,
                learning_rate,
                l2_penalty,
                min_frequency,
                max_sequence_length,
            },
            seed,
        })
    }

    /// Digest of the serialized model, for report provenance.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.save().as_bytes());
        let bytes = hasher.finalize();
        let mut out = String::with_capacity(64);
        for b in bytes {
            out.push_str(&format!("{b:02x}"));
        }
        out
    }
}

fn parse_field<T: core::str::FromStr>(
    next: &mut impl FnMut(&str) -> Result<(usize, String)>,
    name: &str,
) -> Result<T> {
    let (no, line) = next(name)?;
    line.strip_prefix(name)
        .map(str::trim)
        .and_then(|v| v.parse::<T>().ok())
        .ok_or_else(|| Error::parse(no, format!("bad {name} line {line:?}")))
}

fn parse_hex_field(
    next: &mut impl FnMut(&str) -> Result<(usize, String)>,
    name: &str,
) -> Result<u64> {
    let (no, line) = next(name)?;
    let value = line
        .strip_prefix(name)
        .map(str::trim)
        .ok_or_else(|| Error::parse(no, format!("bad {name} line {line:?}")))?;
    parse_hex(no, value)
}

fn parse_hex(line_no: usize, value: &str) -> Result<u64> {
    u64::from_str_radix(value, 16)
        .map_err(|_| Error::parse(line_no, format!("bad hex value {value:?}")))
}

fn softmax(scores: [f64; 3]) -> [f64; 3] {
    let max = scores[0].max(scores[1]).max(scores[2]);
    let mut out = [0.0; 3];
    let mut sum = 0.0;
    for (i, &s) in scores.iter().enumerate() {
        let e = libm::exp(s - max);
        out[i] = e;
        sum += e;
    }
    for v in &mut out {
        *v /= sum;
    }
    out
}

fn relative_error(a: f64, b: f64) -> f64 {
    let diff = (a - b).abs();
    diff / a.abs().max(b.abs()).max(1e-3)
}

/// Trains the baseline on a corpus containing all three labels.
///
/// Shuffling, initialization, and batch order are all drawn from the seed,
/// so identical inputs produce bit-identical models. `loss_history[e]` is
/// the full-dataset mean regularized loss after epoch e.
pub fn train_baseline(
    train: &Corpus,
    hyper: &Hyperparameters,
    seed: u64,
) -> Result<TrainedBaseline> {
    for label in CueLabel::ALL {
        if train.label_count(label) == 0 {
            return Err(Error::validation(format!(
                "training corpus is missing label {label}; the 3-class softmax needs all classes"
            )));
        }
    }
    if hyper.batch_size == 0 {
        return Err(Error::validation("batch_size must be at least 1"));
    }
    let vocab = crate::classify::build_vocab(train, hyper.min_frequency)?;

    let mut bigram_set: BTreeSet<(u32, u32)> = BTreeSet::new();
    for example in &train.examples {
        let tokens = tokenize(&example.text);
        let encoded = encode(&tokens, &vocab, hyper.max_sequence_length);
        for pair in encoded.ids[..encoded.true_length].windows(2) {
            bigram_set.insert((pair[0], pair[1]));
        }
    }
    let mut model =
        BaselineModel::init(vocab, bigram_set.into_iter().collect(), hyper.clone(), seed);

    let data: Vec<(Vec<(usize, f64)>, CueLabel)> = train
        .examples
        .iter()
        .map(|e| (model.features(&e.text), e.label))
        .collect();
    let n = model.n_features();
    let n_examples = data.len();

    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let mut order: Vec<usize> = (0..n_examples).collect();
    let mut loss_history = Vec::with_capacity(hyper.epochs);

    for _ in 0..hyper.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(hyper.batch_size) {
            let m = batch.len() as f64;
            let mut grad: BTreeMap<usize, [f64; 3]> = BTreeMap::new();
            let mut bias_grad = [0.0f64; 3];
            for &i in batch {
                let (features, label) = &data[i];
                let mut delta = softmax(model.scores(features));
                delta[label.index()] -= 1.0;
                for &(f, x) in features {
                    let cell = grad.entry(f).or_insert([0.0; 3]);
                    for c in 0..N_CLASSES {
                        cell[c] += delta[c] * x / m;
                    }
                }
                for c in 0..N_CLASSES {
                    bias_grad[c] += delta[c] / m;
                }
            }
            let shrink = 1.0 - hyper.learning_rate * hyper.l2_penalty;
            for w in &mut model.weights {
                *w *= shrink;
            }
            for (f, cell) in grad {
                for c in 0..N_CLASSES {
                    model.weights[c * n + f] -= hyper.learning_rate * cell[c];
                }
            }
            for c in 0..N_CLASSES {
                model.bias[c] -= hyper.learning_rate * bias_grad[c];
            }
        }
        let penalty = 0.5 * hyper.l2_penalty * model.weights.iter().map(|w| w * w).sum::<f64>();
        let ce: f64 = data
            .iter()
            .map(|(features, label)| {
                let p = softmax(model.scores(features));
                -libm::log(p[label.index()].max(f64::MIN_POSITIVE))
            })
            .sum::<f64>()
            / n_examples as f64;
        loss_history.push(ce + penalty);
    }

    Ok(TrainedBaseline {
        model,
        loss_history,
    })
}
