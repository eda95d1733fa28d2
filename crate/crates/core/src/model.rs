//! Trained model bundle and its on-disk format.
//!
//! A model is only usable together with the exact encoder configuration,
//! vocabulary and rule list it was trained with, so all of them are stored
//! in one file:
//!
//! ```text
//! magic   8 bytes    b"RWNETMDL"
//! version u32 LE     currently 1
//! hlen    u64 LE     byte length of the JSON header
//! header  hlen bytes JSON: encoder options, vocabulary, rule names,
//!                    layer dimensions
//! payload f64 LE     every parameter in layer order (weights row-major,
//!                    then biases; hidden layers first, output last)
//! ```
//!
//! Parameters round-trip bit for bit: a loaded model produces outputs
//! identical to the one that was saved.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoding::{input_width, ActionCodec, EncoderOptions, Vocabulary};
use crate::net::{Layer, NetworkParams};

const MAGIC: &[u8; 8] = b"RWNETMDL";
const VERSION: u32 = 1;

/// A trained network plus everything needed to encode inputs for it.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    options: EncoderOptions,
    vocab: Vocabulary,
    rule_names: Vec<String>,
    params: NetworkParams,
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("failed to {action} {path}: {source}")]
    Io {
        action: &'static str,
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("not a model file (bad magic)")]
    BadMagic,
    #[error("unsupported model file version {0}")]
    UnsupportedVersion(u32),
    #[error("malformed model header: {0}")]
    Header(String),
    #[error("model payload holds {got} parameters, header implies {expected}")]
    PayloadLength { expected: usize, got: usize },
    #[error("model is inconsistent: {0}")]
    Inconsistent(String),
}

/// JSON part of the model file.
#[derive(Serialize, Deserialize)]
struct Header {
    options: EncoderOptions,
    vocab: Vocabulary,
    rule_names: Vec<String>,
    input_dim: usize,
    hidden_dims: Vec<usize>,
    class_count: usize,
}

impl Model {
    /// Bundles a trained network with its encoding context, rejecting
    /// combinations whose dimensions do not line up.
    pub fn new(
        options: EncoderOptions,
        vocab: Vocabulary,
        rule_names: Vec<String>,
        params: NetworkParams,
    ) -> Result<Self, ModelError> {
        options
            .validate()
            .map_err(|e| ModelError::Inconsistent(e.to_string()))?;
        let codec = ActionCodec::new(rule_names.len(), options.p_max, options.breadth);
        let expected_width = input_width(&options, vocab.len(), &codec);
        if params.input_dim() != expected_width {
            return Err(ModelError::Inconsistent(format!(
                "network input width {} but the encoder produces {expected_width}",
                params.input_dim()
            )));
        }
        if params.class_count() != codec.num_classes() {
            return Err(ModelError::Inconsistent(format!(
                "network has {} classes but {} rules over {} positions need {}",
                params.class_count(),
                rule_names.len(),
                codec.num_positions(),
                codec.num_classes()
            )));
        }
        Ok(Model { options, vocab, rule_names, params })
    }

    pub fn options(&self) -> &EncoderOptions {
        &self.options
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn rule_names(&self) -> &[String] {
        &self.rule_names
    }

    pub fn params(&self) -> &NetworkParams {
        &self.params
    }

    /// Action class codec matching this model's output layer.
    pub fn codec(&self) -> ActionCodec {
        ActionCodec::new(self.rule_names.len(), self.options.p_max, self.options.breadth)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ModelError> {
        let path = path.as_ref();
        let io_err = |action: &'static str| {
            move |source: std::io::Error| ModelError::Io {
                action,
                path: path.display().to_string(),
                source,
            }
        };
        let file = File::create(path).map_err(io_err("create"))?;
        let mut out = BufWriter::new(file);

        let header = Header {
            options: self.options,
            vocab: self.vocab.clone(),
            rule_names: self.rule_names.clone(),
            input_dim: self.params.input_dim(),
            hidden_dims: self.params.hidden_layers().iter().map(Layer::out_dim).collect(),
            class_count: self.params.class_count(),
        };
        let header_bytes =
            serde_json::to_vec(&header).map_err(|e| ModelError::Header(e.to_string()))?;

        out.write_all(MAGIC).map_err(io_err("write"))?;
        out.write_all(&VERSION.to_le_bytes()).map_err(io_err("write"))?;
        out.write_all(&(header_bytes.len() as u64).to_le_bytes())
            .map_err(io_err("write"))?;
        out.write_all(&header_bytes).map_err(io_err("write"))?;
        for layer in self
            .params
            .hidden_layers()
            .iter()
            .chain(std::iter::once(self.params.output_layer()))
        {
            for &v in layer.weights().iter() {
                out.write_all(&v.to_le_bytes()).map_err(io_err("write"))?;
            }
            for &v in layer.biases().iter() {
                out.write_all(&v.to_le_bytes()).map_err(io_err("write"))?;
            }
        }
        out.flush().map_err(io_err("write"))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Model, ModelError> {
        let path = path.as_ref();
        let io_err = |action: &'static str| {
            move |source: std::io::Error| ModelError::Io {
                action,
                path: path.display().to_string(),
                source,
            }
        };
        let file = File::open(path).map_err(io_err("open"))?;
        let mut input = BufReader::new(file);

        let mut magic = [0u8; 8];
        input.read_exact(&mut magic).map_err(io_err("read"))?;
        if &magic != MAGIC {
            return Err(ModelError::BadMagic);
        }
        let mut word = [0u8; 4];
        input.read_exact(&mut word).map_err(io_err("read"))?;
        let version = u32::from_le_bytes(word);
        if version != VERSION {
            return Err(ModelError::UnsupportedVersion(version));
        }
        let mut long = [0u8; 8];
        input.read_exact(&mut long).map_err(io_err("read"))?;
        let header_len = u64::from_le_bytes(long) as usize;
        let mut header_bytes = vec![0u8; header_len];
        input.read_exact(&mut header_bytes).map_err(io_err("read"))?;
        let header: Header = serde_json::from_slice(&header_bytes)
            .map_err(|e| ModelError::Header(e.to_string()))?;

        let mut payload = Vec::new();
        input.read_to_end(&mut payload).map_err(io_err("read"))?;
        if payload.len() % 8 != 0 {
            return Err(ModelError::Header("payload is not a whole number of f64 values".into()));
        }
        let mut values = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")));

        let mut dims = Vec::with_capacity(header.hidden_dims.len() + 1);
        let mut in_dim = header.input_dim;
        for &h in &header.hidden_dims {
            dims.push((in_dim, h));
            in_dim = h;
        }
        dims.push((in_dim, header.class_count));
        let expected: usize = dims.iter().map(|&(i, o)| i * o + o).sum();
        let got = payload.len() / 8;
        if got != expected {
            return Err(ModelError::PayloadLength { expected, got });
        }

        let mut layers = Vec::with_capacity(dims.len());
        for (rows, cols) in dims {
            let w: Vec<f64> = values.by_ref().take(rows * cols).collect();
            let w = Array2::from_shape_vec((rows, cols), w).expect("length checked");
            let b: Vec<f64> = values.by_ref().take(cols).collect();
            let layer = Layer::new(w, Array1::from_vec(b))
                .map_err(|e| ModelError::Inconsistent(e.to_string()))?;
            layers.push(layer);
        }
        let output = layers.pop().expect("at least the output layer");
        let params = NetworkParams::from_layers(layers, output)
            .map_err(|e| ModelError::Inconsistent(e.to_string()))?;
        Model::new(header.options, header.vocab, header.rule_names, params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::{EncodeMode, EncodedInputs};
    use crate::net::forward_encoded;

    fn sample_model(seed: u64) -> Model {
        let options = EncoderOptions {
            mode: EncodeMode::Rpt,
            depth: 2,
            breadth: 2,
            p_max: 2,
            sav: true,
            rar: Some(1),
        };
        let vocab = Vocabulary::from_tokens(
            ["+", "=", "x", "1", "2"].map(str::to_string),
        );
        let rule_names = vec!["add_zero".to_string(), "swap".to_string()];
        let codec = ActionCodec::new(rule_names.len(), options.p_max, options.breadth);
        let width = input_width(&options, vocab.len(), &codec);
        let params = NetworkParams::init(width, codec.num_classes(), 2, 12, seed);
        Model::new(options, vocab, rule_names, params).unwrap()
    }

    #[test]
    fn save_and_load_round_trip_bit_for_bit() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sample.rwnet");
        let model = sample_model(7);
        model.save(&path).unwrap();
        let loaded = Model::load(&path).unwrap();
        assert_eq!(loaded.options(), model.options());
        assert_eq!(loaded.vocab(), model.vocab());
        assert_eq!(loaded.rule_names(), model.rule_names());
        let count = model.params().param_count();
        assert_eq!(loaded.params().param_count(), count);
        for i in 0..count {
            assert_eq!(
                model.params().param(i).to_bits(),
                loaded.params().param(i).to_bits(),
                "parameter {i} changed across the round trip"
            );
        }
        let inputs = EncodedInputs {
            width: model.params().input_dim(),
            vectors: vec![vec![0, 5, 9], vec![2, 3]],
        };
        let before = forward_encoded(model.params(), &inputs).unwrap();
        let after = forward_encoded(loaded.params(), &inputs).unwrap();
        for (a, b) in before.iter().zip(after.iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn no_hidden_layer_model_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("flat.rwnet");
        let options = EncoderOptions::default();
        let vocab = Vocabulary::from_tokens(["x", "0", "S"].map(str::to_string));
        let rules = vec!["only".to_string()];
        let codec = ActionCodec::new(1, options.p_max, options.breadth);
        let width = input_width(&options, vocab.len(), &codec);
        let params = NetworkParams::init(width, codec.num_classes(), 0, 0, 3);
        let model = Model::new(options, vocab, rules, params).unwrap();
        model.save(&path).unwrap();
        let loaded = Model::load(&path).unwrap();
        assert_eq!(loaded, model);
    }

    #[test]
    fn rejects_foreign_and_damaged_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk.rwnet");
        std::fs::write(&path, b"definitely not a model").unwrap();
        assert!(matches!(Model::load(&path), Err(ModelError::BadMagic)));

        let model = sample_model(1);
        let good = dir.path().join("good.rwnet");
        model.save(&good).unwrap();
        let mut bytes = std::fs::read(&good).unwrap();

        let truncated = dir.path().join("truncated.rwnet");
        std::fs::write(&truncated, &bytes[..bytes.len() - 16]).unwrap();
        assert!(matches!(Model::load(&truncated), Err(ModelError::PayloadLength { .. })));

        bytes[8] = 99;
        let versioned = dir.path().join("versioned.rwnet");
        std::fs::write(&versioned, &bytes).unwrap();
        assert!(matches!(Model::load(&versioned), Err(ModelError::UnsupportedVersion(99))));
    }

    #[test]
    fn rejects_mismatched_dimensions() {
        let options = EncoderOptions::default();
        let vocab = Vocabulary::from_tokens(["x"].map(str::to_string));
        let rules = vec!["r".to_string()];
        let params = NetworkParams::init(10, 4, 1, 8, 0);
        match Model::new(options, vocab, rules, params) {
            Err(ModelError::Inconsistent(_)) => {}
            other => panic!("expected a dimension complaint, got {other:?}"),
        }
    }

    #[test]
    fn codec_matches_the_output_layer() {
        let model = sample_model(2);
        let codec = model.codec();
        assert_eq!(codec.num_classes(), model.params().class_count());
        assert_eq!(codec.rule_count(), model.rule_names().len());
    }
}
